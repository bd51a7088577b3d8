"""Tests for configuration loading and validation."""

from pathlib import Path

import numpy as np
import pytest

from incad.config import IncadConfig, load_config
from incad.const import (
    CONF_ALPHA,
    CONF_BURN_IN,
    CONF_EV_PROP,
    CONF_NU0,
    CONF_Q,
    CONF_SEED,
    CONF_SWEEPS,
    DEFAULT_ALPHA,
    DEFAULT_EV_PROP,
    DEFAULT_FRACTIONS,
    DEFAULT_Q,
    DEFAULT_SWEEPS,
)
from incad.exceptions import IncadConfigError

EXAMPLE_CONFIG = Path(__file__).parents[1] / "incad.example.yaml"


def test_defaults() -> None:
    """Test an empty document yields every default."""
    config = IncadConfig.from_mapping({})
    assert config[CONF_ALPHA] == DEFAULT_ALPHA
    assert config[CONF_SWEEPS] == DEFAULT_SWEEPS
    assert config[CONF_EV_PROP] == pytest.approx(np.exp(-0.5))
    assert config.tail.q == DEFAULT_Q
    assert config.fractions == DEFAULT_FRACTIONS
    assert config.schema.zscore is True


def test_unknown_key_rejected() -> None:
    """Test a key outside the schema is a config error."""
    with pytest.raises(IncadConfigError) as exc_info:
        IncadConfig.from_mapping({"gibbs": {"alpah": 2.0}})
    assert exc_info.value.translation_key == "invalid_config"
    assert exc_info.value.exit_code == 2


@pytest.mark.parametrize(
    "raw",
    [
        {"gibbs": {"alpha": 0.0}},
        {"gibbs": {"gamma": 1.5}},
        {"tail": {"q": 0.6}},
        {"gibbs": {"sweeps": 10, "burn_in": 10}},
        {"tail": {"q": 0.3, "max_q": 0.25}},
        {"gibbs": {"resample_scope": "some"}},
    ],
)
def test_invalid_values_rejected(raw) -> None:
    """Test out-of-range values are config errors."""
    with pytest.raises(IncadConfigError):
        IncadConfig.from_mapping(raw)


def test_nested_and_dotted_keys_agree() -> None:
    """Test nested sections flatten into the dotted keys."""
    nested = IncadConfig.from_mapping({"gibbs": {"alpha": 2.5}, "tail": {"q": 0.1}})
    dotted = IncadConfig.from_mapping({CONF_ALPHA: 2.5, CONF_Q: 0.1})
    assert nested.values == dotted.values
    assert nested.config_hash() == dotted.config_hash()


def test_overrides_skip_none() -> None:
    """Test a None override keeps the file value."""
    config = IncadConfig.from_mapping({CONF_SEED: 5}, **{CONF_SEED: None})
    assert config[CONF_SEED] == 5
    assert config.with_overrides(**{CONF_SEED: 9})[CONF_SEED] == 9


def test_load_yaml(tmp_path) -> None:
    """Test a YAML file is read and validated."""
    path = tmp_path / "incad.yaml"
    path.write_text("seed: 3\ngibbs:\n  sweeps: 12\n  burn_in: 4\n")
    config = load_config(path, **{CONF_SEED: 8})
    assert config[CONF_SEED] == 8
    assert config[CONF_SWEEPS] == 12
    assert config[CONF_BURN_IN] == 4


def test_load_missing_file(tmp_path) -> None:
    """Test a missing file is a config error."""
    with pytest.raises(IncadConfigError) as exc_info:
        load_config(tmp_path / "absent.yaml")
    assert exc_info.value.translation_key == "config_unreadable"


def test_load_non_mapping(tmp_path) -> None:
    """Test a YAML document that is not a mapping is rejected."""
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(IncadConfigError):
        load_config(path)


def test_example_file_matches_defaults() -> None:
    """Test the shipped example lists exactly the defaults."""
    assert load_config(EXAMPLE_CONFIG).config_hash() == IncadConfig.from_mapping({}).config_hash()


def test_hash_changes_with_values() -> None:
    """Test the hash is stable and sensitive to any value."""
    base = IncadConfig.from_mapping({})
    assert base.config_hash() == IncadConfig.from_mapping({}).config_hash()
    assert base.config_hash() != base.with_overrides(**{CONF_EV_PROP: 0.5}).config_hash()
    assert len(base.config_hash()) == 64


def test_resolve_against_data(blobs) -> None:
    """Test data-dependent defaults come from the sample moments."""
    run_config = IncadConfig.from_mapping({}).resolve(blobs)
    cov = np.cov(blobs, rowvar=False)
    assert run_config.niw.nu0 == 4.0
    np.testing.assert_allclose(run_config.niw.mu0, blobs.mean(axis=0))
    np.testing.assert_allclose(run_config.niw.psi, 0.1 * cov)
    np.testing.assert_allclose(run_config.sigma_new, 0.1 * cov)
    assert run_config.tail.ev_prop == DEFAULT_EV_PROP


def test_resolve_explicit_nu0(blobs) -> None:
    """Test an explicit nu0 scales psi so the prior mean covariance is unchanged."""
    run_config = IncadConfig.from_mapping({CONF_NU0: 7}).resolve(blobs)
    assert run_config.niw.nu0 == 7.0
    np.testing.assert_allclose(run_config.niw.psi, 4 * 0.1 * np.cov(blobs, rowvar=False))
