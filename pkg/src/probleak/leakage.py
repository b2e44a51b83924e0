"""Evidence declarations and probability leakage.

Evidence states which values of the observable are possible at all: either a
union of closed intervals on the continuum or a discrete set (an explicit
finite set, or a lattice lower + k*step up to an upper bound). Leakage is the
probability a predictive distribution assigns to values the evidence rules
out; 0 is the ideal and 1 means the model has no overlap with the declared
reality.

Kind mismatches follow one hard rule: a continuous predictive measured
against discrete evidence leaks completely (leakage exactly 1), because a
continuous law puts zero probability on every individual representable
value. The report carries a ``complete`` flag for that case.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import ModelError
from .predictive import PredictiveDistribution
from .regression import FitResult, predictive_at

__all__ = [
    "Evidence",
    "LeakageReport",
    "MCLeakage",
    "leakage",
    "leakage_profile",
    "mc_leakage",
    "parse_support",
]

_INF = float("inf")
_LATTICE_RTOL = 1e-9  # membership slack for float lattice arithmetic


@dataclass(frozen=True)
class Evidence:
    """Support declaration the observable is known to obey.

    kind "continuous_support": ``intervals`` is an ordered tuple of disjoint
    closed ``(lower, upper)`` pairs, with +-inf allowed at the ends.
    kind "discrete_support": exactly one of ``values`` (explicit finite set)
    or ``lattice`` (``(lower, upper, step)``; upper may be +inf).
    """

    kind: str
    intervals: tuple = ()
    values: tuple | None = None
    lattice: tuple | None = None
    description: str = ""

    def __post_init__(self):
        if self.kind == "continuous_support":
            if not self.intervals:
                raise ValueError("continuous evidence needs at least one interval")
            ivals = tuple((float(a), float(b)) for a, b in self.intervals)
            for a, b in ivals:
                if math.isnan(a) or math.isnan(b) or a > b:
                    raise ValueError(f"malformed interval ({a}, {b})")
            for (_, b0), (a1, _) in zip(ivals, ivals[1:]):
                if a1 <= b0:
                    raise ValueError("intervals must be disjoint and ordered")
            object.__setattr__(self, "intervals", ivals)
        elif self.kind == "discrete_support":
            if (self.values is None) == (self.lattice is None):
                raise ValueError("discrete evidence needs exactly one of values/lattice")
            if self.values is not None:
                vals = np.unique(np.asarray(self.values, dtype=float))
                if vals.size == 0 or not np.all(np.isfinite(vals)):
                    raise ValueError("values must be a nonempty finite set")
                object.__setattr__(self, "values", tuple(vals.tolist()))
            else:
                lo, hi, step = (float(v) for v in self.lattice)
                if not (step > 0.0 and math.isfinite(step) and math.isfinite(lo)):
                    raise ValueError("lattice needs finite lower and step > 0")
                if hi < lo:
                    raise ValueError("lattice upper bound below lower bound")
                object.__setattr__(self, "lattice", (lo, hi, step))
        else:
            raise ValueError(f"unknown evidence kind {self.kind!r}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def interval(cls, lower: float, upper: float, description: str = "") -> "Evidence":
        return cls("continuous_support", intervals=((lower, upper),), description=description)

    @classmethod
    def interval_union(cls, intervals: Sequence, description: str = "") -> "Evidence":
        return cls("continuous_support", intervals=tuple(intervals), description=description)

    @classmethod
    def finite_set(cls, values: Sequence[float], description: str = "") -> "Evidence":
        return cls("discrete_support", values=tuple(values), description=description)

    @classmethod
    def lattice_support(
        cls, lower: float, upper: float, step: float, description: str = ""
    ) -> "Evidence":
        return cls("discrete_support", lattice=(lower, upper, step), description=description)

    # -- queries ----------------------------------------------------------

    @property
    def is_single_interval(self) -> bool:
        return self.kind == "continuous_support" and len(self.intervals) == 1

    def contains(self, y):
        """Vectorized membership test; lattice membership uses a small
        relative tolerance to survive float step arithmetic."""
        y = np.asarray(y, dtype=float)
        if self.kind == "continuous_support":
            mask = np.zeros(y.shape, dtype=bool)
            for a, b in self.intervals:
                mask |= (y >= a) & (y <= b)
        elif self.values is not None:
            vals = np.asarray(self.values)
            idx = np.searchsorted(vals, y)
            idx = np.clip(idx, 0, vals.size - 1)
            near = np.minimum(np.abs(vals[idx] - y), np.abs(vals[np.maximum(idx - 1, 0)] - y))
            mask = near == 0.0
        else:
            lo, hi, step = self.lattice
            k = np.round((y - lo) / step)
            atol = _LATTICE_RTOL * max(1.0, abs(lo), step)
            on_grid = np.abs(y - (lo + k * step)) <= atol + _LATTICE_RTOL * np.abs(y)
            mask = on_grid & (k >= 0) & (y <= hi + atol)
        if y.ndim == 0:
            return bool(mask)
        return mask

    def possible_values(self, limit: int = 10_000_000) -> np.ndarray:
        """Enumerate a finite discrete support; raises for continuous evidence
        or an unbounded lattice."""
        if self.kind != "discrete_support":
            raise ValueError("enumerate only finite supports (evidence is continuous)")
        if self.values is not None:
            return np.asarray(self.values)
        lo, hi, step = self.lattice
        if math.isinf(hi):
            raise ValueError("enumerate only finite supports (lattice is unbounded)")
        count = int(math.floor((hi - lo) / step + _LATTICE_RTOL)) + 1
        if count > limit:
            raise ValueError(f"lattice has {count} points, above the {limit} limit")
        return lo + step * np.arange(count)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "continuous_support":
            doc["intervals"] = [
                [None if math.isinf(a) else a, None if math.isinf(b) else b]
                for a, b in self.intervals
            ]
        elif self.values is not None:
            doc["values"] = list(self.values)
        else:
            lo, hi, step = self.lattice
            doc["lattice"] = {
                "lower": lo,
                "upper": None if math.isinf(hi) else hi,
                "step": step,
            }
        if self.description:
            doc["description"] = self.description
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Evidence":
        def bound(v, sign):
            if v is None:
                return sign * _INF
            if isinstance(v, str):
                return float(v)
            return float(v)

        kind = doc.get("kind")
        description = doc.get("description", "")
        if kind == "continuous_support":
            ivals = tuple((bound(a, -1), bound(b, +1)) for a, b in doc["intervals"])
            return cls(kind, intervals=ivals, description=description)
        if kind == "discrete_support":
            if "values" in doc:
                return cls(kind, values=tuple(doc["values"]), description=description)
            lat = doc["lattice"]
            upper = lat.get("upper")
            return cls(
                kind,
                lattice=(lat["lower"], _INF if upper is None else upper, lat["step"]),
                description=description,
            )
        raise ValueError(f"unknown evidence kind {kind!r}")


_SUPPORT_RE = re.compile(
    r"^\s*[\[\(]\s*(?P<lo>[^,\s]+)\s*,\s*(?P<hi>[^,\s\]\)]+)\s*[\]\)]\s*$"
)
_LATTICE_RE = re.compile(
    r"^\s*lattice\(\s*(?P<lo>[^,\s]+)\s*,\s*(?P<hi>[^,\s]+)\s*,\s*(?P<step>[^,\s\)]+)\s*\)\s*$",
    re.IGNORECASE,
)


def parse_support(text: str) -> Evidence:
    """Parse compact support notation: "[a,b]", "[0,inf)", "lattice(l,u,step)".

    Interval endpoints are treated as closed; for continuous predictives the
    distinction is measure-zero, and lattice evidence carries its own bounds.
    """
    m = _LATTICE_RE.match(text)
    if m:
        return Evidence.lattice_support(
            float(m["lo"]), float(m["hi"]), float(m["step"]), description=text.strip()
        )
    m = _SUPPORT_RE.match(text)
    if m:
        return Evidence.interval(float(m["lo"]), float(m["hi"]), description=text.strip())
    raise ValueError(f"cannot parse support {text!r}")


# ---------------------------------------------------------------------------
# leakage computation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeakageReport:
    """Leakage of one predictive against one evidence declaration.

    ``below_mass``/``above_mass`` split the leakage for single-interval
    evidence; any other shape carries the total in ``outside_mass_other``.
    The three parts sum to ``leakage`` exactly.
    """

    leakage: float
    below_mass: float
    above_mass: float
    outside_mass_other: float
    evidence: Evidence
    x_star: object = None
    complete: bool = False

    def to_json(self) -> dict:
        doc = {
            "leakage": self.leakage,
            "below_mass": self.below_mass,
            "above_mass": self.above_mass,
            "outside_mass_other": self.outside_mass_other,
            "complete": self.complete,
            "evidence": self.evidence.to_json(),
        }
        if self.x_star is not None:
            doc["x_star"] = self.x_star
        return doc


def _clip_unit(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def leakage(dist: PredictiveDistribution, e: Evidence, x_star=None) -> LeakageReport:
    """Probability the predictive assigns outside the evidence's support.

    Continuous predictive vs continuous evidence: one minus the CDF mass over
    the interval list. Continuous vs discrete evidence: exactly 1 with the
    complete flag set. Discrete vs discrete: one minus the pmf sum over the
    possible values. Discrete vs continuous: one minus the atom mass inside
    the intervals (computed from CDF differences, so it is exact).
    """
    if dist.kind == "continuous" and e.kind == "discrete_support":
        return LeakageReport(
            leakage=1.0,
            below_mass=0.0,
            above_mass=0.0,
            outside_mass_other=1.0,
            evidence=e,
            x_star=x_star,
            complete=True,
        )

    if e.kind == "continuous_support":
        inside = 0.0
        for a, b in e.intervals:
            lo_mass = 0.0 if math.isinf(a) else float(dist.cdf_left(a))
            hi_mass = 1.0 if math.isinf(b) else float(dist.cdf(b))
            inside += max(hi_mass - lo_mass, 0.0)
        if e.is_single_interval:
            a, b = e.intervals[0]
            below = 0.0 if math.isinf(a) else _clip_unit(float(dist.cdf_left(a)))
            above = 0.0 if math.isinf(b) else _clip_unit(1.0 - float(dist.cdf(b)))
            return LeakageReport(
                leakage=_clip_unit(below + above),
                below_mass=below,
                above_mass=above,
                outside_mass_other=0.0,
                evidence=e,
                x_star=x_star,
            )
        total = _clip_unit(1.0 - inside)
        return LeakageReport(
            leakage=total,
            below_mass=0.0,
            above_mass=0.0,
            outside_mass_other=total,
            evidence=e,
            x_star=x_star,
        )

    # discrete predictive vs discrete evidence
    if e.values is not None:
        inside = float(np.sum(dist.density(np.asarray(e.values))))
    else:
        lo, hi, step = e.lattice
        if math.isinf(hi):
            # enumerate up to the far tail of the predictive; anything beyond
            # carries < 1e-12 mass and is counted as leakage
            hi = max(lo, dist.quantile(1.0 - 1e-13))
        count = int(math.floor((hi - lo) / step + _LATTICE_RTOL)) + 1
        pts = lo + step * np.arange(max(count, 0))
        inside = float(np.sum(dist.density(pts))) if pts.size else 0.0
    total = _clip_unit(1.0 - inside)
    return LeakageReport(
        leakage=total,
        below_mass=0.0,
        above_mass=0.0,
        outside_mass_other=total,
        evidence=e,
        x_star=x_star,
    )


def leakage_profile(fit: FitResult, e: Evidence, x_grid: Sequence) -> list[LeakageReport]:
    """Leakage of the fit's predictive at each grid point, in grid order."""
    reports = []
    for i, point in enumerate(x_grid):
        try:
            dist = predictive_at(fit, point)
        except ModelError as err:
            raise ModelError(f"grid point {i}: {err}") from err
        reports.append(leakage(dist, e, x_star=point))
    return reports


class MCLeakage(NamedTuple):
    estimate: float
    stderr: float
    n: int


def mc_leakage(dist: PredictiveDistribution, e: Evidence, n: int, seed) -> MCLeakage:
    """Monte Carlo leakage estimate: the fraction of seeded draws outside the
    declared support, with a binomial standard error.

    Kept deliberately independent of the analytic path so the two can audit
    each other.
    """
    n = int(n)
    if n < 10_000:
        raise ValueError(f"need at least 1e4 draws for a usable estimate, got {n}")
    draws = dist.sample(n, np.random.default_rng(seed))
    outside = ~e.contains(draws)
    est = float(np.mean(outside))
    se = math.sqrt(est * (1.0 - est) / n)
    return MCLeakage(estimate=est, stderr=se, n=n)
