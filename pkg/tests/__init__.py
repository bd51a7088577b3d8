"""Tests for the INCAD detector."""
