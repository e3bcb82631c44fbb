"""Quantile-derived three-label fuzzy partitions and their evaluation.

Each feature gets exactly three linguistic labels (low, medium, high) whose
piecewise-linear membership functions are anchored at the empirical 0.2, 0.5
and 0.8 quantiles of the training values:

* low    - full membership from the minimum to the 0.2 quantile, then a
           linear descent that reaches zero at the 0.5 quantile;
* medium - a triangle rising from the 0.2 quantile, peaking at the 0.5
           quantile and vanishing at the 0.8 quantile;
* high   - zero up to the 0.5 quantile, a linear ascent reaching full
           membership at the 0.8 quantile, then a plateau to the maximum.

By construction the three plain (T1) memberships sum to one at every point
of the domain.  Interval-valued (IT2) sets reuse the same upper function and
scale it by ``lower_scale`` (default 0.8) to obtain the lower bound.

Quantiles use the linear-interpolation convention (index ``q * (n - 1)`` on
the sorted values); this is fixed here so partitions are reproducible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePartition

LOW, MEDIUM, HIGH = "low", "medium", "high"
LABELS = (LOW, MEDIUM, HIGH)

T1, IT2 = "t1", "it2"

DEFAULT_LOWER_SCALE = 0.8


def empirical_quantile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile of ``values`` at fraction ``q``.

    The sorted sample is indexed at ``h = q * (n - 1)`` and neighbouring
    order statistics are interpolated.
    """
    if len(values) == 0:
        raise ValueError("cannot take a quantile of an empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile fraction must be in [0, 1], got {q}")
    data = np.sort(np.asarray(values, dtype=float))
    h = q * (len(data) - 1)
    lo = math.floor(h)
    hi = math.ceil(h)
    return float(data[lo] + (h - lo) * (data[hi] - data[lo]))


@dataclass(frozen=True)
class TruthDegree:
    """An interval truth value; T1 evaluation reports ``lower == upper``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"invalid truth degree [{self.lower}, {self.upper}]")


TRAPEZOID_LEFT = "trapezoid-left"
TRIANGLE = "triangle"
TRAPEZOID_RIGHT = "trapezoid-right"


@dataclass(frozen=True)
class MembershipFunction:
    """A piecewise-linear membership shape.

    Breakpoints by shape: trapezoid-left (plateau end, zero point),
    triangle (zero, peak, zero), trapezoid-right (zero point, plateau
    start).  Equal breakpoints are permitted (ties in the source
    quantiles); at a coincident point evaluation takes the larger of the
    adjacent pieces, keeping the function total.
    """

    shape: str
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        expected = 3 if self.shape == TRIANGLE else 2
        if self.shape not in (TRAPEZOID_LEFT, TRIANGLE, TRAPEZOID_RIGHT):
            raise ValueError(f"unknown membership shape {self.shape!r}")
        if len(self.breakpoints) != expected:
            raise ValueError(
                f"{self.shape} expects {expected} breakpoints, got {len(self.breakpoints)}"
            )
        if any(b < a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError(f"breakpoints must be non-decreasing: {self.breakpoints}")

    def __call__(self, x):
        """Evaluate membership at ``x`` (scalar or array); result in [0, 1]."""
        xv = np.asarray(x, dtype=float)
        scalar = xv.ndim == 0
        xv = np.atleast_1d(xv)
        out = np.zeros_like(xv)
        if self.shape == TRAPEZOID_LEFT:
            a, b = self.breakpoints
            out[xv <= a] = 1.0
            mid = (xv > a) & (xv < b)
            if mid.any():
                out[mid] = (b - xv[mid]) / (b - a)
        elif self.shape == TRAPEZOID_RIGHT:
            a, b = self.breakpoints
            out[xv >= b] = 1.0
            mid = (xv > a) & (xv < b)
            if mid.any():
                out[mid] = (xv[mid] - a) / (b - a)
        else:
            a, b, c = self.breakpoints
            up = (xv > a) & (xv < b)
            if up.any():
                out[up] = (xv[up] - a) / (b - a)
            down = (xv > b) & (xv < c)
            if down.any():
                out[down] = (c - xv[down]) / (c - b)
            out[xv == b] = 1.0
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class FuzzySetT1:
    label: str
    mf: MembershipFunction

    def degree(self, x: float) -> TruthDegree:
        v = self.mf(x)
        return TruthDegree(v, v)

    def degree_bounds(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = self.mf(x)
        return v, v


@dataclass(frozen=True)
class FuzzySetIT2:
    """Interval-valued set: lower membership is a uniform scaling of the
    upper one, so its peak equals ``lower_scale``."""

    label: str
    upper_mf: MembershipFunction
    lower_scale: float = DEFAULT_LOWER_SCALE

    def __post_init__(self):
        if not 0.0 < self.lower_scale <= 1.0:
            raise ValueError(f"lower_scale must be in (0, 1], got {self.lower_scale}")

    def degree(self, x: float) -> TruthDegree:
        v = self.upper_mf(x)
        return TruthDegree(self.lower_scale * v, v)

    def degree_bounds(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = self.upper_mf(x)
        return self.lower_scale * v, v


@dataclass(frozen=True)
class LinguisticVariable:
    """One interpretable feature together with its three-label partition."""

    name: str
    kind: str  # "t1" | "it2"
    sets: tuple  # low, medium, high in that order
    domain_min: float
    domain_max: float
    quantiles: tuple[float, float, float]  # (q20, q50, q80)
    lower_scale: float = DEFAULT_LOWER_SCALE

    def clamp(self, x):
        return np.clip(x, self.domain_min, self.domain_max)

    def set_for(self, label: str):
        return self.sets[LABELS.index(label)]

    def membership(self, label: str, x: float) -> TruthDegree:
        """Truth degree of ``x`` for ``label``; out-of-domain values are
        clamped to the boundary first, so this is total."""
        return self.set_for(label).degree(float(self.clamp(x)))

    def degree_bounds(self, label: str, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.set_for(label).degree_bounds(self.clamp(np.asarray(x, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "domain_min": self.domain_min,
            "domain_max": self.domain_max,
            "quantiles": list(self.quantiles),
            "lower_scale": self.lower_scale,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "LinguisticVariable":
        return variable_from_quantiles(
            name=spec["name"],
            kind=spec["kind"],
            domain_min=spec["domain_min"],
            domain_max=spec["domain_max"],
            quantiles=tuple(spec["quantiles"]),
            lower_scale=spec.get("lower_scale", DEFAULT_LOWER_SCALE),
        )


def variable_from_quantiles(
    name: str,
    kind: str,
    domain_min: float,
    domain_max: float,
    quantiles: tuple[float, float, float],
    lower_scale: float = DEFAULT_LOWER_SCALE,
) -> LinguisticVariable:
    """Rebuild a partition from its five anchor points.

    This is the serialization contract: (min, q20, q50, q80, max) plus kind
    and lower_scale reconstruct bit-identical membership functions.
    """
    kind = kind.lower()
    if kind not in (T1, IT2):
        raise ValueError(f"kind must be 't1' or 'it2', got {kind!r}")
    q20, q50, q80 = quantiles
    if not (domain_min <= q20 <= q50 <= q80 <= domain_max):
        raise ValueError(
            f"quantiles out of order for {name}: "
            f"min={domain_min} q20={q20} q50={q50} q80={q80} max={domain_max}"
        )
    shapes = [
        MembershipFunction(TRAPEZOID_LEFT, (q20, q50)),
        MembershipFunction(TRIANGLE, (q20, q50, q80)),
        MembershipFunction(TRAPEZOID_RIGHT, (q50, q80)),
    ]
    if kind == T1:
        sets = tuple(FuzzySetT1(label, mf) for label, mf in zip(LABELS, shapes))
    else:
        sets = tuple(
            FuzzySetIT2(label, mf, lower_scale) for label, mf in zip(LABELS, shapes)
        )
    return LinguisticVariable(
        name=name,
        kind=kind,
        sets=sets,
        domain_min=float(domain_min),
        domain_max=float(domain_max),
        quantiles=(float(q20), float(q50), float(q80)),
        lower_scale=float(lower_scale),
    )


def build_partition(
    values: Iterable[float],
    kind: str,
    name: str,
    lower_scale: float = DEFAULT_LOWER_SCALE,
) -> LinguisticVariable:
    """Build the three-label partition of a feature from its sample values."""
    data = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if data.size == 0:
        raise DegeneratePartition(f"no values supplied for {name!r}")
    if not np.isfinite(data).all():
        raise ValueError(f"non-finite values in {name!r}")
    if np.unique(data).size < 2:
        raise DegeneratePartition(
            f"{name!r} needs at least 2 distinct values to form a partition"
        )
    quantiles = tuple(empirical_quantile(data, q) for q in (0.2, 0.5, 0.8))
    return variable_from_quantiles(
        name=name,
        kind=kind,
        domain_min=float(data.min()),
        domain_max=float(data.max()),
        quantiles=quantiles,
        lower_scale=lower_scale,
    )


def membership(var: LinguisticVariable, label: str, x: float) -> TruthDegree:
    return var.membership(label, x)


def partitions_to_json(variables: Sequence[LinguisticVariable]) -> str:
    return json.dumps([v.to_dict() for v in variables], indent=2)


def partitions_from_json(text: str) -> list[LinguisticVariable]:
    return [LinguisticVariable.from_dict(spec) for spec in json.loads(text)]
