"""Run configuration: a flat key=value text format with '#' comments, plus
command-line overrides.  The effective configuration echoes back to the
output directory and round-trips exactly.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

CASES = ("converge_channel", "cavity", "shock_channel", "cylinder_demo", "custom")


@dataclass
class RunConfig:
    case: str = ""
    t_final: float = -1.0
    N: int = 3
    K1D: int = 8
    Re: float = 1000.0
    Ma: float = 0.1
    Pr: float = 0.72
    gamma: float = 1.4
    mu_star: float = 1.0
    interface_dissipation: bool = True
    viscous_penalty: bool = True
    lf_per_face: bool = False
    abs_tol: float = 1e-7
    rel_tol: float = 1e-7
    dt_init: float = 0.0            # 0 = automatic
    dt_max: float = 0.0             # 0 = unlimited
    safety: float = 0.9
    diagnostics_stride: int = 1
    outdir: str = "out"
    snapshot_times: tuple = ()
    mesh_file: str = ""
    cavity_bc: str = "adiabatic"    # or "isothermal"
    T_wall: float = 0.0             # > 0 only with isothermal walls
    g_amp: float = 0.0              # lid heat entropy flow amplitude
    lid_velocity: float = 1.0
    rho0: float = 1.0               # custom-case constant initial state
    u10: float = 0.0
    u20: float = 0.0
    custom_bc: str = "adiabatic_noslip"
    periodic_x: bool = False
    periodic_y: bool = False
    assert_identity_tol: float = 0.0   # 0 = no runtime assertion

    def validate(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r} "
                              "(required keys: case, t_final)")
        if self.t_final <= 0:
            raise ConfigError("t_final must be positive (required keys: case, t_final)")
        for key in ("N", "K1D"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        for key in ("Re", "Ma", "Pr", "abs_tol", "rel_tol", "safety"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        if self.gamma <= 1:
            raise ConfigError("gamma must exceed 1")
        if self.cavity_bc not in ("adiabatic", "isothermal"):
            raise ConfigError(f"cavity_bc must be adiabatic or isothermal, "
                              f"got {self.cavity_bc!r}")
        isothermal = (self.case == "cavity" and self.cavity_bc == "isothermal") \
            or self.custom_bc == "isothermal_noslip"
        if self.T_wall > 0 and not isothermal:
            raise ConfigError("T_wall given but no isothermal walls requested")
        if isothermal and self.T_wall <= 0:
            raise ConfigError("isothermal walls require T_wall > 0")
        if self.case == "custom" and not self.mesh_file:
            raise ConfigError("custom case requires mesh_file")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "on", "yes"}
_BOOL_FALSE = {"0", "false", "off", "no"}


def _parse_value(key, raw, where):
    f = _FIELDS[key]
    try:
        if f.type in ("bool", bool):
            low = raw.strip().lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if f.type in ("int", int):
            return int(raw)
        if f.type in ("float", float):
            return float(raw)
        if f.type in ("tuple", tuple):
            raw = raw.strip()
            if not raw:
                return ()
            return tuple(float(tok) for tok in raw.split(","))
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid value for {key}: {exc}") from None


def parse_config_text(text, source="<config>", base=None):
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, raw = (tok.strip() for tok in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        setattr(cfg, key, _parse_value(key, raw, f"{source}:{lineno}"))
    return cfg


def parse_config(path=None, overrides=(), base=None):
    """Resolve a RunConfig from an optional file plus (key, value) overrides.

    Overrides win over file values; the result is validated.
    """
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        cfg = parse_config_text(text, source=str(path), base=cfg)
    for key, raw in overrides:
        if key not in _FIELDS:
            raise ConfigError(f"command line: unknown key {key!r}")
        setattr(cfg, key, _parse_value(key, raw, "command line")
                if isinstance(raw, str) else raw)
    return cfg.validate()


def format_config(cfg):
    """Canonical echo; parsing it reproduces an identical RunConfig."""
    lines = []
    for f in dataclasses.fields(RunConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            text = "on" if val else "off"
        elif isinstance(val, float):
            text = f"{val:.17g}"
        elif isinstance(val, tuple):
            text = ",".join(f"{v:.17g}" for v in val)
        else:
            text = str(val)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
