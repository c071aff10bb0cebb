import pytest
from hypothesis import given, strategies as st

from glwire.config import RunConfig, load_config, parse_config, validate
from glwire.errors import ConfigError

GOOD = """
[domain]
Lx = 1.0
Ly = 2.0
nx = 17
ny = 33
[current]
profile = bump
amplitude = 3
[physics]
kappa = 8
[run]
seed = 42
"""


def test_defaults_valid():
    validate(RunConfig())


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.domain.nx == 17 and cfg.current.profile == "bump"
    assert cfg.physics.kappa == 8.0 and cfg.physics.c == 1.0
    assert cfg.run.seed == 42 and cfg.run.n_proj == 10


def test_unknown_key_names_line():
    with pytest.raises(ConfigError, match=r"<string>:4: unknown key 'nxx'"):
        parse_config("[domain]\nLx = 1\n\nnxx = 3\n")


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[plot]\nx = 1\n")


def test_bad_type():
    with pytest.raises(ConfigError, match=r":2: \[physics\] kappa = 'big'"):
        parse_config("[physics]\nkappa = big\n")


def test_aspect_mismatch_names_keys():
    with pytest.raises(ConfigError, match=r"nx, ny") as exc:
        parse_config(GOOD.replace("ny = 33", "ny = 17"))
    assert ":5:" in str(exc.value)


@pytest.mark.parametrize("section,key,value", [
    ("physics", "kappa", 0.5), ("physics", "c", 0.0), ("run", "tol", -1.0),
    ("run", "initial", "zeros"), ("current", "profile", "wave"), ("analysis", "gamma", 1.0),
    ("run", "seed", -1), ("domain", "nx", 4)])
def test_invalid_values(section, key, value):
    with pytest.raises(ConfigError, match=key):
        RunConfig().with_value(section, key, value)


@given(st.floats(1.0, 100.0), st.integers(0, 2 ** 63))
def test_with_value_round_trip(kappa, seed):
    cfg = RunConfig().with_value("physics", "kappa", kappa).with_value("run", "seed", seed)
    assert cfg.physics.kappa == kappa and cfg.run.seed == seed
    assert cfg.as_dict()["physics"]["kappa"] == kappa


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")
