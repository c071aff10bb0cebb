"""Run configuration: flat INI sections with typed keys.

Sections and keys (defaults in brackets)::

    [domain]   Lx [1.0]  Ly [2.0]  nx [33]  ny [65]
    [current]  profile [constant] (zero|constant|bump|skewbump)  amplitude [4.0]
    [physics]  kappa [4.0]  c [1.0]  h_ex [0.0]
    [run]      dt_factor [0.8]  tol [1e-6]  t_max [5.0]  n_proj [10]  seed [0]
               initial [taper] (taper|random|normal|ones)  record_every [0]
    [output]   directory [out]  dump_every [0]
    [analysis] delta [0.25]  gamma [0.5]

Unknown sections or keys are errors; every error names the key and the
line it came from.  All values are checked before any array is allocated.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError

PROFILES = ("zero", "constant", "bump", "skewbump")
INITIAL = ("taper", "random", "normal", "ones")

SCHEMA = {
    "domain": {"Lx": float, "Ly": float, "nx": int, "ny": int},
    "current": {"profile": str, "amplitude": float},
    "physics": {"kappa": float, "c": float, "h_ex": float},
    "run": {"dt_factor": float, "tol": float, "t_max": float, "n_proj": int, "seed": int,
            "initial": str, "record_every": int},
    "output": {"directory": str, "dump_every": int},
    "analysis": {"delta": float, "gamma": float},
}


@dataclass
class DomainSection:
    Lx: float = 1.0
    Ly: float = 2.0
    nx: int = 33
    ny: int = 65


@dataclass
class CurrentSection:
    profile: str = "constant"
    amplitude: float = 4.0


@dataclass
class PhysicsSection:
    kappa: float = 4.0
    c: float = 1.0
    h_ex: float = 0.0


@dataclass
class RunSection:
    dt_factor: float = 0.8
    tol: float = 1e-6
    t_max: float = 5.0
    n_proj: int = 10
    seed: int = 0
    initial: str = "taper"
    record_every: int = 0


@dataclass
class OutputSection:
    directory: str = "out"
    dump_every: int = 0


@dataclass
class AnalysisSection:
    delta: float = 0.25
    gamma: float = 0.5


@dataclass
class RunConfig:
    domain: DomainSection = field(default_factory=DomainSection)
    current: CurrentSection = field(default_factory=CurrentSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    run: RunSection = field(default_factory=RunSection)
    output: OutputSection = field(default_factory=OutputSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    source: str = "<defaults>"

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        return d

    def with_value(self, section: str, key: str, value) -> "RunConfig":
        """Copy with one typed key replaced and revalidated."""
        d = self.as_dict()
        if section not in d or key not in d[section]:
            raise ConfigError(f"unknown key [{section}] {key}")
        d[section][key] = SCHEMA[section][key](value)
        cfg = from_dict(d, self.source)
        validate(cfg)
        return cfg


def from_dict(d: dict, source: str = "<dict>") -> RunConfig:
    kinds = {"domain": DomainSection, "current": CurrentSection, "physics": PhysicsSection,
             "run": RunSection, "output": OutputSection, "analysis": AnalysisSection}
    parts = {}
    for name, cls in kinds.items():
        sec = d.get(name, {})
        bad = set(sec) - set(SCHEMA[name])
        if bad:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        parts[name] = cls(**sec)
    unknown = set(d) - set(kinds)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    return RunConfig(**parts, source=source)


def _line_of(text: str, section: str, key: str | None = None) -> int:
    cur = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return n
            continue
        if cur == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return 0


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    d = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}:{_line_of(text, sec)}: unknown section [{sec}]")
        d[sec] = {}
        for key, raw in cp.items(sec):
            line = _line_of(text, sec, key)
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}:{line}: unknown key '{key}' in [{sec}]")
            typ = SCHEMA[sec][key]
            try:
                d[sec][key] = typ(raw) if typ is not int else int(raw, 10)
            except ValueError:
                raise ConfigError(f"{source}:{line}: [{sec}] {key} = {raw!r} is not "
                                  f"a valid {typ.__name__}") from None
    cfg = from_dict(d, source)
    try:
        validate(cfg)
    except ConfigError as exc:
        # attach the line of the first offending key
        key = getattr(exc, "key", None)
        if key:
            raise ConfigError(f"{source}:{_line_of(text, *key)}: {exc}") from None
        raise
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def _fail(section: str, key: str, msg: str):
    err = ConfigError(f"[{section}] {key}: {msg}")
    err.key = (section, key)
    raise err


def validate(cfg: RunConfig) -> None:
    """Check every value against the preconditions of the modules it feeds."""
    d = cfg.domain
    if not (d.Lx > 0):
        _fail("domain", "Lx", "must be positive")
    if not (d.Ly > 0):
        _fail("domain", "Ly", "must be positive")
    if d.nx < 8:
        _fail("domain", "nx", "must be at least 8")
    if d.ny < 8:
        _fail("domain", "ny", "must be at least 8")
    hx, hy = d.Lx / (d.nx - 1), d.Ly / (d.ny - 1)
    if abs(hx - hy) > 1e-12 * max(hx, hy):
        err = ConfigError(f"[domain] nx, ny: cells not square (Lx/(nx-1) = {hx!r}, "
                          f"Ly/(ny-1) = {hy!r})")
        err.key = ("domain", "nx")
        raise err
    if cfg.current.profile not in PROFILES:
        _fail("current", "profile", f"must be one of {', '.join(PROFILES)}")
    if not (cfg.physics.kappa >= 1):
        _fail("physics", "kappa", "must be >= 1")
    if not (cfg.physics.c > 0):
        _fail("physics", "c", "must be positive")
    r = cfg.run
    if not (r.dt_factor > 0):
        _fail("run", "dt_factor", "must be positive")
    if not (r.tol > 0):
        _fail("run", "tol", "must be positive")
    if not (r.t_max > 0):
        _fail("run", "t_max", "must be positive")
    if r.n_proj < 0:
        _fail("run", "n_proj", "must be >= 0")
    if not (0 <= r.seed < 2 ** 64):
        _fail("run", "seed", "must be a 64-bit unsigned integer")
    if r.initial not in INITIAL:
        _fail("run", "initial", f"must be one of {', '.join(INITIAL)}")
    if r.record_every < 0:
        _fail("run", "record_every", "must be >= 0")
    if cfg.output.dump_every < 0:
        _fail("output", "dump_every", "must be >= 0")
    if not (cfg.analysis.delta > 0):
        _fail("analysis", "delta", "must be positive")
    if not (0 < cfg.analysis.gamma < 1):
        _fail("analysis", "gamma", "must lie in (0, 1)")
