"""Exceptions for the INCAD detector."""

from __future__ import annotations

import json
from functools import cache
from pathlib import Path
from typing import Any

from .const import (
    DOMAIN,
    EXIT_CONFIG_ERROR,
    EXIT_DATA_ERROR,
    EXIT_NUMERICAL_ERROR,
    EXIT_UNEXPECTED,
)

STRINGS_PATH = Path(__file__).with_name("strings.json")


@cache
def _exception_messages() -> dict[str, str]:
    """Load exception message templates from strings.json."""
    strings = json.loads(STRINGS_PATH.read_text(encoding="utf-8"))
    return {key: value["message"] for key, value in strings["exceptions"].items()}


class IncadError(Exception):
    """Base error carrying a translation key and placeholders."""

    exit_code: int = EXIT_UNEXPECTED

    def __init__(
        self,
        *,
        translation_key: str,
        translation_placeholders: dict[str, Any] | None = None,
        translation_domain: str = DOMAIN,
    ) -> None:
        """Initialize the error."""
        self.translation_domain = translation_domain
        self.translation_key = translation_key
        self.translation_placeholders = translation_placeholders or {}
        super().__init__(self.message)

    @property
    def message(self) -> str:
        """Render the message template for this error."""
        template = _exception_messages().get(self.translation_key, self.translation_key)
        try:
            return template.format(**self.translation_placeholders)
        except KeyError:
            return template


class IncadConfigError(IncadError):
    """Configuration could not be loaded or validated."""

    exit_code = EXIT_CONFIG_ERROR


class IncadDataError(IncadError):
    """Input data is missing, malformed, or inconsistent."""

    exit_code = EXIT_DATA_ERROR


class IncadNumericalError(IncadError):
    """A numerical routine failed (Cholesky, GPD fit)."""

    exit_code = EXIT_NUMERICAL_ERROR


class TailFitUnavailable(IncadNumericalError):
    """Too few tail points to fit the generalized Pareto tail."""
