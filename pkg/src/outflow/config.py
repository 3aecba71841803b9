"""Plain-text key/value run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .params import FluidParams, validate_params

__all__ = [
    "Config",
    "ConfigError",
    "ParseError",
    "UnknownKey",
    "ConstraintViolation",
    "parse_config",
    "config_text",
]


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, line_no: int, line: str, why: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {why} ({line!r})")


class UnknownKey(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown configuration key {name!r}")


class ConstraintViolation(ConfigError):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"parameter constraint violated: {detail}")


@dataclass
class Config:
    """Full run configuration; every field has a documented default."""

    params: FluidParams = field(default_factory=FluidParams)
    r_max: float = 100.0
    nodes_r: int = 512
    nodes_theta: int = 32
    grid_kind: str = "uniform"  # uniform | geometric
    dt: float | None = None
    t_end: float = 200.0
    steady_tol: float = 1e-8
    slope_tol: float = 0.2
    cfl_safety: float = 0.4
    amplitude: float = 0.02
    support_lo: float = 1.5
    support_hi: float = 3.0
    mode_ell: int = 1
    output_every: int = 250
    decay_target: float | None = None  # default chosen per subcommand
    seed: int = 0


_PARAM_KEYS = {
    "gamma": ("gamma", float),
    "k_pressure": ("k_pressure", float),
    "mu": ("mu", float),
    "lambda": ("lam", float),
    "rho_plus": ("rho_plus", float),
    "u_b": ("u_b", float),
    "dim_n": ("dim_n", int),
}

_CONF_KEYS = {
    "r_max": float,
    "nodes_r": int,
    "nodes_theta": int,
    "grid_kind": str,
    "dt": float,
    "t_end": float,
    "steady_tol": float,
    "slope_tol": float,
    "cfl_safety": float,
    "amplitude": float,
    "support_lo": float,
    "support_hi": float,
    "mode_ell": int,
    "output_every": int,
    "decay_target": float,
    "seed": int,
}


def parse_config(path: str) -> Config:
    """Read `key = value` lines; '#' starts a comment; unknown keys reject."""
    param_kw: dict = {}
    conf_kw: dict = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(ln, raw.rstrip("\n"), "expected 'key = value'")
            key, _, value = (piece.strip() for piece in line.partition("="))
            if key in _PARAM_KEYS:
                attr, typ = _PARAM_KEYS[key]
                try:
                    param_kw[attr] = typ(value)
                except ValueError:
                    raise ParseError(ln, raw.rstrip("\n"),
                                     f"cannot parse {key} as {typ.__name__}")
            elif key in _CONF_KEYS:
                typ = _CONF_KEYS[key]
                try:
                    conf_kw[key] = typ(value)
                except ValueError:
                    raise ParseError(ln, raw.rstrip("\n"),
                                     f"cannot parse {key} as {typ.__name__}")
            else:
                raise UnknownKey(key)
    params = FluidParams(**param_kw)
    report = validate_params(params)
    if not report.ok:
        raise ConstraintViolation("; ".join(report.violations))
    cfg = Config(params=params, **conf_kw)
    if cfg.grid_kind not in ("uniform", "geometric"):
        raise ConstraintViolation("grid_kind must be 'uniform' or 'geometric'")
    if not (1.0 < cfg.support_lo < cfg.support_hi < cfg.r_max):
        raise ConstraintViolation("support must satisfy 1 < lo < hi < r_max")
    return cfg


def config_text(cfg: Config) -> str:
    """Canonical serialization used for hashing and the manifest."""
    lines = []
    for key, (attr, _) in _PARAM_KEYS.items():
        lines.append(f"{key} = {getattr(cfg.params, attr)!r}")
    for f in fields(Config):
        if f.name == "params":
            continue
        lines.append(f"{f.name} = {getattr(cfg, f.name)!r}")
    return "\n".join(lines) + "\n"
