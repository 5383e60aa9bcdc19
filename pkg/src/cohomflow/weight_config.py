"""Scalar-curvature weight configurations (W, d, A_w) and the built-in catalog."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact_geometry import JForm, affine_dim
from .surd import parse_rational

__all__ = [
    "WeightKind",
    "WeightVector",
    "Configuration",
    "MeasureReport",
    "ConfigError",
    "classify_weight",
    "validate",
    "scalar_curvature",
    "builtin_catalog",
    "catalog_entry",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "config_hash",
    "negative_controls",
]


class ConfigError(ValueError):
    """Malformed configuration input."""


class WeightKind(enum.Enum):
    TypeI = "I"
    TypeII = "II"
    TypeIII = "III"
    Other = "other"


@dataclass(frozen=True)
class WeightVector:
    entries: tuple[int, ...]
    kind: WeightKind

    def __len__(self):
        return len(self.entries)


def classify_weight(w: Sequence[int]) -> WeightVector:
    """Assign one of the three admissible weight types, or Other."""
    entries = tuple(int(x) for x in w)
    counts: dict[int, int] = {}
    for x in entries:
        if x != 0:
            counts[x] = counts.get(x, 0) + 1
    if counts == {-1: 1}:
        kind = WeightKind.TypeI
    elif counts == {-1: 2, 1: 1}:
        kind = WeightKind.TypeII
    elif counts == {1: 1, -2: 1}:
        kind = WeightKind.TypeIII
    else:
        kind = WeightKind.Other
    return WeightVector(entries, kind)


@dataclass(frozen=True)
class Configuration:
    """A full problem instance.

    ``weights`` maps each weight vector to its nonzero coefficient A_w.  E and
    ``lam`` (the soliton constant) are exact rationals.
    """

    dims: tuple[int, ...]
    weights: tuple[tuple[WeightVector, Fraction], ...] = ()
    E: Fraction = Fraction(0)
    lam: Fraction = Fraction(0)
    name: str = ""
    notes: str = ""
    n: int = field(init=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d <= 0 for d in dims):
            raise ConfigError("dims must be positive integers")
        object.__setattr__(self, "dims", dims)
        ws = []
        seen = set()
        for w, a in self.weights:
            wv = w if isinstance(w, WeightVector) else classify_weight(w)
            if len(wv.entries) != len(dims):
                raise ConfigError(f"weight {wv.entries} has wrong length")
            if wv.entries in seen:
                raise ConfigError(f"duplicate weight {wv.entries}")
            a = Fraction(a)
            if a == 0:
                raise ConfigError(f"A_w must be nonzero for {wv.entries}")
            seen.add(wv.entries)
            ws.append((wv, a))
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "E", Fraction(self.E))
        object.__setattr__(self, "lam", Fraction(self.lam))
        object.__setattr__(self, "n", sum(dims))

    @property
    def r(self) -> int:
        return len(self.dims)

    @property
    def form(self) -> JForm:
        return JForm(self.dims)

    @property
    def weight_map(self) -> dict[tuple[int, ...], Fraction]:
        return {w.entries: a for w, a in self.weights}

    def with_weights(self, **changes) -> "Configuration":
        """Copy with some A_w replaced; keys are weight tuples given as strings like '1,-2,0'."""
        wm = self.weight_map
        for key, val in changes.items():
            wm[tuple(int(x) for x in key.split(","))] = Fraction(val)
        return Configuration(self.dims, tuple(wm.items()), self.E, self.lam, self.name)


@dataclass(frozen=True)
class MeasureReport:
    hull_dim: int
    full_measure: bool
    uncovered_coordinates: list[int]
    other_weights: list[tuple[int, ...]] = field(default_factory=list)


def validate(cfg: Configuration) -> MeasureReport:
    """Affine dimension of conv(W) and the coordinates where every weight vanishes."""
    ws = [w.entries for w, _ in cfg.weights]
    dim = affine_dim(ws)
    uncovered = [i + 1 for i in range(cfg.r) if all(w[i] == 0 for w in ws)]
    others = [w.entries for w, _ in cfg.weights if w.kind is WeightKind.Other]
    return MeasureReport(dim, dim == cfg.r - 1, uncovered, others)


def scalar_curvature(cfg: Configuration, q: Sequence[float]) -> float:
    """S(q) = sum A_w exp(w.q); overflow gives +-inf."""
    if len(q) != cfg.r:
        raise ValueError("q has the wrong length")
    total = 0.0
    for w, a in cfg.weights:
        x = sum(wi * qi for wi, qi in zip(w.entries, q))
        try:
            total += float(a) * math.exp(x)
        except OverflowError:
            total += math.copysign(math.inf, a)
    return total


def _cfg(name, dims, weights, E, lam=0, notes=""):
    return Configuration(tuple(dims), tuple((w, Fraction(a)) for w, a in weights), Fraction(E), Fraction(lam), name, notes)


def builtin_catalog() -> list[Configuration]:
    """The classified configurations with fixed test values for the free parameters."""
    return [
        _cfg("bryant-n1", [1], [], 3, 1,
             "2-dimensional Bryant soliton; W empty, d=(1). Non-steady (lambda=1, E=3), "
             "solved with coefficients of degree one in u."),
        _cfg("bryant5", [4], [((-1,), 12)], 1, 0,
             "5-dimensional Bryant soliton; A=n(n-1)=12, E=1."),
        _cfg("warped-2x2", [2, 2], [((-1, 0), 2), ((0, -1), 2)], 1, 0,
             "warped product of two round 2-spheres; A=2 on each, E=1."),
        _cfg("bbc-r2", [1, 2], [((0, -1), 4), ((1, -2), Fraction(-1, 2))], 8, 0,
             "Berard Bergery-Calabi ansatz with r=2, d=(1,2); A=4, -1/2, E=8."),
        _cfg("bbc-r3", [1, 2, 4],
             [((0, -1, 0), 4), ((0, 0, -1), 4), ((1, -2, 0), Fraction(-1, 2)), ((1, 0, -2), Fraction(-1, 4))],
             8, 0,
             "Berard Bergery-Calabi ansatz with r=3, d=(1,2,4); A=4,4,-1/2,-1/4, E=8. "
             "The values keep A_(-1^i)^2 / (d_i A_(1,-2^i)) independent of i, which the coefficient "
             "system requires."),
        _cfg("bbc-case5", [1, 2, 2],
             [((0, -1, 0), 4), ((0, 0, -1), 4), ((1, -2, 0), Fraction(-1, 2)), ((1, 0, -2), Fraction(-1, 2))],
             8, 0,
             "r=3, d=(1,2,2) Berard Bergery-Calabi data admitting a second superpotential; "
             "A_(0,-1,0)=A_(0,0,-1)=4, A_(1,-2,0)=A_(1,0,-2)=-1/2, E=8."),
    ]


def negative_controls() -> list[Configuration]:
    return [
        _cfg("bryant-n3", [3], [((-1,), 6)], 1, 0, "Bryant data with d=3; admits no superpotential."),
        _cfg("warped-2x2-expanding", [2, 2], [((-1, 0), 2), ((0, -1), 2)], 1, 1,
             "warped data with lambda=1; no constant-coefficient superpotential."),
    ]


def catalog_entry(name: str) -> Configuration:
    for cfg in builtin_catalog() + negative_controls():
        if cfg.name == name:
            return cfg
    raise KeyError(name)


def _rat(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise ConfigError(f"{where}: floats are not accepted, use a 'p/q' string")
    try:
        return parse_rational(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> Configuration:
    """Build a configuration from the JSON schema; raises ConfigError on any violation."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    for key in ("r", "dims", "weights", "E", "lambda"):
        if key not in data:
            raise ConfigError(f"missing key {key!r}")
    r = data["r"]
    dims = data["dims"]
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise ConfigError("r must be a positive integer")
    if not isinstance(dims, list) or len(dims) != r or not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims):
        raise ConfigError("dims must be a list of r positive integers")
    if not isinstance(data["weights"], list):
        raise ConfigError("weights must be a list")
    weights = []
    for i, item in enumerate(data["weights"]):
        if not isinstance(item, dict) or "vec" not in item or "A" not in item:
            raise ConfigError(f"weights[{i}] must have 'vec' and 'A'")
        vec = item["vec"]
        if not isinstance(vec, list) or len(vec) != r or not all(isinstance(x, int) and not isinstance(x, bool) for x in vec):
            raise ConfigError(f"weights[{i}].vec must be {r} integers")
        weights.append((tuple(vec), _rat(item["A"], f"weights[{i}].A")))
    try:
        return Configuration(tuple(dims), tuple(weights), _rat(data["E"], "E"), _rat(data["lambda"], "lambda"),
                             str(data.get("name", "")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: Configuration) -> dict:
    out = {
        "r": cfg.r,
        "dims": list(cfg.dims),
        "weights": [{"vec": list(w.entries), "A": str(a)} for w, a in cfg.weights],
        "E": str(cfg.E),
        "lambda": str(cfg.lam),
    }
    if cfg.name:
        out["name"] = cfg.name
    return out


def load_config(source: str) -> Configuration:
    """Load from a JSON file path, or by catalog name."""
    try:
        return catalog_entry(source)
    except KeyError:
        pass
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def config_hash(cfg: Configuration) -> str:
    payload = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
