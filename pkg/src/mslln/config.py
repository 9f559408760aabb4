"""Declarative experiment configuration with strict TOML serialization.

A config is a flat document: scalar run controls at the top level, an
optional ``[tolerances]`` table, and one ``[[grid]]`` table per grid point.
Unknown keys are rejected everywhere, since a silently ignored key could
invalidate a rate experiment.  Configs round-trip losslessly through
``to_toml`` / ``from_toml``.
"""

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coefficients import CAUSAL, SIDEDNESS, TWO_SIDED, CoefficientSpec
from .innovations import (
    COUPLINGS,
    IDENTICAL,
    FoldedTSymmetric,
    Gaussian,
    PowerLawSymmetric,
)

SCENARIOS = ("rates", "decompose", "sa", "autocov", "appell", "simulate")

#: Horizon cap: dyadic levels beyond this are rejected at validation.
MAX_LEVELS = 22

_TOP_KEYS = {
    "scenario",
    "replications",
    "levels",
    "base_seed",
    "half_width",
    "out",
    "format",
    "jobs",
}
_TOLERANCE_KEYS = {"truncation"}

_FAMILY_KEYS = {
    "power_law": {"x_min", "beta"},
    "folded_t": {"beta"},
    "gaussian": {"variance"},
}

_GRID_KEYS = {
    "rates": {"sigma", "sigma_bar", "coupling", "scale", "sidedness"},
    "decompose": {"sigma", "sigma_bar", "coupling", "scale", "nu"},
    "sa": {"chi", "sigma", "h_true", "noise", "scale"},
    "autocov": {"sigma", "p", "lags", "scale"},
    "appell": {"sigma", "sidedness", "scale"},
    "simulate": {"sigma", "sigma_bar", "coupling", "scale", "sidedness"},
}


class ConfigError(ValueError):
    """Invalid configuration; CLI maps this to exit code 3."""


def build_family(point, suffix=""):
    """Construct the innovation spec named by ``family{suffix}`` keys."""
    family = point.get("family" + suffix)
    if family is None:
        raise ConfigError(f"missing family{suffix}")
    if family == "power_law":
        return PowerLawSymmetric(
            x_min=float(point.get("x_min" + suffix, 1.0)),
            beta=float(point["beta" + suffix]),
        )
    if family == "folded_t":
        return FoldedTSymmetric(beta=float(point["beta" + suffix]))
    if family == "gaussian":
        return Gaussian(variance=float(point.get("variance" + suffix, 1.0)))
    raise ConfigError(f"unknown family {family!r}")


def build_pair(point):
    """(spec, spec_bar, coupling) for a grid point.

    ``family_bar`` keys describe a distinct second marginal; they are only
    meaningful under independent coupling (identical coupling always reuses
    the first marginal).
    """
    spec = build_family(point)
    coupling = point.get("coupling", IDENTICAL)
    if coupling != IDENTICAL and "family_bar" in point:
        spec_bar = build_family(point, "_bar")
    else:
        spec_bar = spec
    return spec, spec_bar, coupling


def _family_key_set(point, suffix=""):
    family = point.get("family" + suffix)
    if family not in _FAMILY_KEYS:
        raise ConfigError(f"unknown family {family!r}")
    return {"family" + suffix} | {k + suffix for k in _FAMILY_KEYS[family]}


def validate_grid_point(scenario, point):
    """Strict per-scenario key check plus construction of every object."""
    allowed = set(_GRID_KEYS[scenario])
    allowed |= _family_key_set(point)
    needs_bar = scenario in ("rates", "decompose", "simulate") and point.get(
        "coupling", IDENTICAL
    ) != IDENTICAL and "family_bar" in point
    if needs_bar:
        allowed |= _family_key_set(point, "_bar")
    unknown = set(point) - allowed
    if unknown:
        raise ConfigError(f"unknown grid keys for scenario {scenario}: {sorted(unknown)}")

    spec, _, _ = build_pair(point)
    try:
        if "sigma" in point and not (0.5 < float(point["sigma"]) <= 1.0):
            raise ConfigError(f"sigma must lie in (1/2, 1], got {point['sigma']}")
        if "sigma_bar" in point and not (0.5 < float(point["sigma_bar"]) <= 1.0):
            raise ConfigError(f"sigma_bar must lie in (1/2, 1], got {point['sigma_bar']}")
        if "coupling" in point and point["coupling"] not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}")
        if "sidedness" in point and point["sidedness"] not in SIDEDNESS:
            raise ConfigError(f"sidedness must be one of {SIDEDNESS}")
        if "chi" in point and not (0.5 < float(point["chi"]) <= 1.0):
            raise ConfigError(f"chi must lie in (1/2, 1], got {point['chi']}")
        if "nu" in point and not float(point["nu"]) > 0:
            raise ConfigError(f"nu must be positive, got {point['nu']}")
        if "p" in point and not float(point["p"]) > 0:
            raise ConfigError(f"p must be positive, got {point['p']}")
        if "lags" in point:
            lags = point["lags"]
            if not isinstance(lags, (list, tuple)) or not lags or any(
                (not isinstance(h, int)) or h < 0 for h in lags
            ):
                raise ConfigError("lags must be a nonempty list of nonnegative integers")
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed grid point: {exc}") from exc
    return spec


@dataclass
class ExperimentConfig:
    scenario: str
    grid: list
    replications: int = 8
    levels: int = 12
    base_seed: int = 0
    half_width: int | None = None
    out: str | None = None
    format: str = "csv"
    jobs: int = 1
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not self.grid:
            raise ConfigError("grid must contain at least one point")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not (1 <= self.levels <= MAX_LEVELS):
            raise ConfigError(
                f"horizon cap exceeded: levels must lie in [1, {MAX_LEVELS}], got {self.levels}"
            )
        if self.half_width is not None and self.half_width < 0:
            raise ConfigError(f"half_width must be >= 0, got {self.half_width}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not (0 <= self.base_seed < 2**64):
            raise ConfigError("base_seed must be an unsigned 64-bit integer")
        unknown_tol = set(self.tolerances) - _TOLERANCE_KEYS
        if unknown_tol:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown_tol)}")
        for point in self.grid:
            validate_grid_point(self.scenario, point)
        return self

    def resolved_half_width(self):
        """Explicit half-width, or the horizon 2**levels by default."""
        return self.half_width if self.half_width is not None else 2**self.levels

    def to_dict(self):
        out = {
            "scenario": self.scenario,
            "replications": self.replications,
            "levels": self.levels,
            "base_seed": self.base_seed,
            "format": self.format,
            "jobs": self.jobs,
        }
        if self.half_width is not None:
            out["half_width"] = self.half_width
        if self.out is not None:
            out["out"] = self.out
        if self.tolerances:
            out["tolerances"] = dict(sorted(self.tolerances.items()))
        out["grid"] = [dict(sorted(p.items())) for p in self.grid]
        return out


def _toml_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        # TOML floats need a dot or exponent
        return text if any(c in text for c in ".eE") else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {value!r} to TOML")


def to_toml(config):
    """Serialize a config to the flat TOML schema (stable key order)."""
    doc = config.to_dict()
    lines = []
    for key in sorted(k for k in doc if k not in ("grid", "tolerances")):
        lines.append(f"{key} = {_toml_scalar(doc[key])}")
    if "tolerances" in doc:
        lines.append("")
        lines.append("[tolerances]")
        for key, value in doc["tolerances"].items():
            lines.append(f"{key} = {_toml_scalar(value)}")
    for point in doc["grid"]:
        lines.append("")
        lines.append("[[grid]]")
        for key, value in point.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
    return "\n".join(lines) + "\n"


def from_dict(doc):
    doc = dict(doc)
    grid = doc.pop("grid", [])
    tolerances = doc.pop("tolerances", {})
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "scenario" not in doc:
        raise ConfigError("missing scenario")
    config = ExperimentConfig(
        scenario=doc["scenario"],
        grid=[dict(p) for p in grid],
        replications=int(doc.get("replications", 8)),
        levels=int(doc.get("levels", 12)),
        base_seed=int(doc.get("base_seed", 0)),
        half_width=int(doc["half_width"]) if "half_width" in doc else None,
        out=doc.get("out"),
        format=doc.get("format", "csv"),
        jobs=int(doc.get("jobs", 1)),
        tolerances=dict(tolerances),
    )
    return config.validate()


def from_toml(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return from_dict(doc)


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return from_toml(fh.read())


DEFAULT_GRIDS = {
    "rates": [
        {"sigma": 0.75, "sigma_bar": 0.75, "family": "power_law", "x_min": 1.0,
         "beta": 4.6, "coupling": IDENTICAL}
    ],
    "decompose": [
        {"sigma": 0.7, "sigma_bar": 0.85, "family": "power_law", "x_min": 1.0,
         "beta": 4.6, "coupling": IDENTICAL, "nu": 1.0}
    ],
    "sa": [
        {"chi": 1.0, "sigma": 0.8, "family": "power_law", "x_min": 1.0,
         "beta": 4.0, "h_true": 1.0}
    ],
    "autocov": [
        {"sigma": 0.8, "family": "power_law", "x_min": 1.0, "beta": 4.6,
         "p": 1.15, "lags": [0, 1, 2]}
    ],
    "appell": [
        {"sigma": 0.75, "family": "gaussian", "variance": 1.0, "sidedness": CAUSAL}
    ],
    "simulate": [
        {"sigma": 0.75, "sigma_bar": 0.75, "family": "power_law", "x_min": 1.0,
         "beta": 5.0, "coupling": IDENTICAL}
    ],
}


def default_config(scenario):
    """Small smoke-scale config used when no file is supplied."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    levels = {"rates": 12, "decompose": 10, "sa": 12, "autocov": 12,
              "appell": 12, "simulate": 10}[scenario]
    return ExperimentConfig(
        scenario=scenario,
        grid=[dict(p) for p in DEFAULT_GRIDS[scenario]],
        replications=8,
        levels=levels,
        base_seed=0,
    ).validate()
