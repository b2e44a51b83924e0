"""Forecast calibration diagnostics, CRPS scoring, and KL distance.

Three senses of calibration are computed over a collection of forecast
cases, each a predictive distribution paired with the value that actually
happened:

  probability  empirical frequency of PIT values at or below p, vs p;
  exceedance   mean pooled-empirical quantile at the model's CDF level, vs y;
  marginal     mean predictive CDF vs the pooled empirical CDF.

Per-instance truth distributions are unobservable with one outcome per case,
so the diagnostics use the standard empirical surrogates: the probability
integral transform for the first, the pooled empirical distribution of the
outcomes for the other two. A predictive that puts mass below the true
support floor shows up directly: every PIT is pushed up by at least the
leaked mass, so low-level frequencies are exactly zero, and the mean
predictive CDF sits strictly above the empirical CDF at the floor.

CRPS is computed by quadrature from the CDF alone, so mixtures and analytic
families go through one code path; closed forms appear only in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .exceptions import ModelError
from .falsification import FalsificationVerdict
from .predictive import Mixture, PredictiveDistribution, StudentT

__all__ = [
    "CalibrationReport",
    "ForecastCase",
    "GridDensity",
    "ProbabilityCalibration",
    "calibration_report",
    "crps",
    "exceedance_calibration",
    "kl_distance",
    "ks_uniform",
    "marginal_calibration",
    "pit",
    "probability_calibration",
]

_CRPS_EPSABS = 1e-10  # per-piece quadrature budget, well under the 1e-8 contract
_DISCRETE_TAIL = 1e-13  # pmf mass beyond the enumerated atoms, ignored


@dataclass(frozen=True)
class ForecastCase:
    """One forecast instance: the predictive issued and the outcome observed."""

    predictive: PredictiveDistribution
    observed: float

    def __post_init__(self):
        if not math.isfinite(self.observed):
            raise ValueError(f"observed value must be finite, got {self.observed}")


def _pooled(cases: Sequence[ForecastCase]) -> np.ndarray:
    if not cases:
        raise ValueError("need at least one forecast case")
    return np.sort(np.array([c.observed for c in cases], dtype=float))


def pit(cases: Sequence[ForecastCase], seed) -> np.ndarray:
    """Probability integral transform of each case, in case order.

    Continuous predictives give P_i(y_i). Discrete predictives get the
    randomized transform P_i(y_i-) + V_i * pmf_i(y_i) with V_i uniform from
    the seeded generator, which restores exact uniformity under the true
    model. One V_i is consumed per discrete case, in order.
    """
    if not cases:
        raise ValueError("need at least one forecast case")
    rng = np.random.default_rng(seed)
    out = np.empty(len(cases))
    for i, case in enumerate(cases):
        dist, y = case.predictive, case.observed
        if dist.kind == "continuous":
            out[i] = dist.cdf(y)
        else:
            left = float(dist.cdf_left(y))
            out[i] = left + rng.uniform() * float(dist.density(y))
    return np.clip(out, 0.0, 1.0)


class ProbabilityCalibration(NamedTuple):
    curve: list  # (level p, empirical frequency of PIT <= p)
    max_deviation: float


def probability_calibration(pits, levels) -> ProbabilityCalibration:
    """Empirical frequency of PIT <= p at each level, with the worst |freq - p|."""
    pits = np.asarray(pits, dtype=float)
    levels = np.sort(np.asarray(levels, dtype=float))
    if pits.size == 0:
        raise ValueError("need at least one PIT value")
    if levels.size == 0 or np.any((levels <= 0.0) | (levels >= 1.0)):
        raise ValueError("levels must lie strictly inside (0, 1)")
    freqs = np.searchsorted(np.sort(pits), levels, side="right") / pits.size
    curve = [(float(p), float(f)) for p, f in zip(levels, freqs)]
    return ProbabilityCalibration(curve, float(np.max(np.abs(freqs - levels))))


def _empirical_quantile(pool: np.ndarray, p: float) -> float:
    """Order-statistic quantile of a sorted pool, total on p in [0, 1]."""
    idx = int(math.ceil(p * pool.size - 1e-9)) - 1
    return float(pool[min(max(idx, 0), pool.size - 1)])


def exceedance_calibration(cases: Sequence[ForecastCase], levels) -> list:
    """Curve of (y, mean over cases of pooledQ^{-1}(P_i(y))).

    Calibration in exceedance means the curve hugs the identity: the pooled
    outcomes, read back at the model's own CDF level, land near y itself.
    """
    pool = _pooled(cases)
    levels = np.sort(np.asarray(levels, dtype=float))
    curve = []
    for y in levels:
        ps = [float(c.predictive.cdf(y)) for c in cases]
        vals = [_empirical_quantile(pool, p) for p in ps]
        curve.append((float(y), float(np.mean(vals))))
    return curve


def _default_marginal_grid(pool: np.ndarray) -> np.ndarray:
    qs = [_empirical_quantile(pool, p) for p in np.linspace(0.0, 1.0, 101)]
    return np.unique(qs)


def marginal_calibration(cases: Sequence[ForecastCase], y_grid=None) -> list:
    """Curve of (y, mean predictive CDF, pooled empirical CDF).

    The default grid is 101 equally spaced quantiles of the pooled outcomes
    (duplicates dropped), so it adapts to the outcome scale.
    """
    pool = _pooled(cases)
    if y_grid is None:
        grid = _default_marginal_grid(pool)
    else:
        grid = np.asarray(y_grid, dtype=float)
        if np.any(np.diff(grid) < 0):
            raise ValueError("y_grid must be sorted")
    curve = []
    for y in grid:
        mean_cdf = float(np.mean([float(c.predictive.cdf(y)) for c in cases]))
        emp = float(np.searchsorted(pool, y, side="right") / pool.size)
        curve.append((float(y), mean_cdf, emp))
    return curve


def ks_uniform(values) -> float:
    """Kolmogorov-Smirnov distance of the values from Uniform(0,1).

    Compare against 1.36/sqrt(n) for a 5% test.
    """
    u = np.sort(np.asarray(values, dtype=float))
    n = u.size
    if n == 0:
        raise ValueError("need at least one value")
    hi = np.max(np.arange(1, n + 1) / n - u)
    lo = np.max(u - np.arange(0, n) / n)
    return float(max(hi, lo))


# ---------------------------------------------------------------------------
# CRPS
# ---------------------------------------------------------------------------


def _require_finite_mean(dist: PredictiveDistribution) -> None:
    if isinstance(dist, StudentT) and dist.df <= 1.0:
        raise ModelError(f"CRPS undefined: infinite mean (t with df = {dist.df})")
    if isinstance(dist, Mixture):
        for comp in dist.components:
            _require_finite_mean(comp)


def crps(dist: PredictiveDistribution, y: float) -> float:
    """Continuous ranked probability score: integral of (P(t) - 1{t >= y})^2.

    Continuous families integrate the two squared tails by adaptive
    quadrature (absolute tolerance 1e-8). Discrete families are integrated
    exactly over the step function's breakpoints; atoms carrying less than
    1e-13 total tail mass are dropped, which perturbs the integral by far
    less than the quadrature tolerance.
    """
    y = float(y)
    if not math.isfinite(y):
        raise ValueError("observation must be finite")
    _require_finite_mean(dist)
    if dist.kind == "continuous":
        below, _ = integrate.quad(
            lambda t: float(dist.cdf(t)) ** 2, -np.inf, y, epsabs=_CRPS_EPSABS
        )
        above, _ = integrate.quad(
            lambda t: (1.0 - float(dist.cdf(t))) ** 2, y, np.inf, epsabs=_CRPS_EPSABS
        )
        return float(below + above)

    lo = min(float(dist.quantile(_DISCRETE_TAIL)), y)
    hi = max(float(dist.quantile(1.0 - _DISCRETE_TAIL)), y)
    breaks = np.unique(np.concatenate([np.asarray(dist.atoms_between(lo, hi)), [y]]))
    cdf_vals = np.atleast_1d(np.asarray(dist.cdf(breaks), dtype=float))
    total = 0.0
    for k in range(breaks.size - 1):
        step_val = cdf_vals[k] - (1.0 if breaks[k] >= y else 0.0)
        total += step_val * step_val * (breaks[k + 1] - breaks[k])
    return float(total)


# ---------------------------------------------------------------------------
# KL distance to an elicited density
# ---------------------------------------------------------------------------


class GridDensity:
    """Continuous density given by values on a grid, linearly interpolated.

    The mass (trapezoid rule over the grid) must be 1 within 1e-6; values
    are zero outside the grid. This is the shape an elicited opinion
    usually arrives in.
    """

    kind = "continuous"
    family = "grid"

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
            raise ValueError("grid and values must be matching 1-d arrays (length >= 2)")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and nonnegative")
        mass = float(np.trapezoid(values, grid))
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"density must integrate to 1 within 1e-6, got {mass!r}")
        self.grid = grid
        self.values = values

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.grid, self.values, left=0.0, right=0.0)
        return float(out) if y.ndim == 0 else out

    def support(self) -> tuple[float, float]:
        """Smallest closed interval containing all positive density."""
        pos = np.nonzero(self.values > 0.0)[0]
        if pos.size == 0:
            raise ValueError("density is identically zero")
        lo = self.grid[max(pos[0] - 1, 0)]
        hi = self.grid[min(pos[-1] + 1, self.grid.size - 1)]
        return float(lo), float(hi)


def _density_support(obj) -> tuple[float, float]:
    if isinstance(obj, GridDensity):
        return obj.support()
    return -math.inf, math.inf


def _mass_in(obj, a: float, b: float) -> float:
    """Mass the density places on [a, b]; exact for both argument shapes."""
    if b <= a:
        return 0.0
    if isinstance(obj, GridDensity):
        lo = max(a, float(obj.grid[0]))
        hi = min(b, float(obj.grid[-1]))
        if hi <= lo:
            return 0.0
        inner = obj.grid[(obj.grid > lo) & (obj.grid < hi)]
        pts = np.concatenate([[lo], inner, [hi]])
        return float(np.trapezoid(obj.density(pts), pts))
    return float(np.asarray(obj.cdf(b))) - float(np.asarray(obj.cdf(a)))


def _check_continuous(obj, name: str) -> None:
    if getattr(obj, "kind", None) != "continuous":
        raise ModelError(f"kl_distance needs continuous densities; {name} is not")


def kl_distance(elicited, dist) -> float:
    """KL distance of dist from the elicited density: integral of q log(q/p).

    Both arguments may be analytic families or GridDensity objects. Returns
    the +inf sentinel when the elicited density puts mass where dist has
    none (support mismatch), which is the verdict "no amount of data could
    reconcile them".
    """
    _check_continuous(elicited, "elicited")
    _check_continuous(dist, "dist")

    q_lo, q_hi = _density_support(elicited)
    p_lo, p_hi = _density_support(dist)
    lo = max(q_lo, p_lo)
    hi = min(q_hi, p_hi)
    if hi <= lo:
        return math.inf
    if q_lo < p_lo or q_hi > p_hi:
        # part of the q-positive region escapes p's support; infinite
        # distance whenever the escaped part carries mass
        escaped = 1.0 - _mass_in(elicited, lo, hi)
        if escaped > 1e-12:
            return math.inf

    if isinstance(elicited, GridDensity) or isinstance(dist, GridDensity):
        return _kl_over_grid(elicited, dist, lo, hi)

    def integrand(t):
        q = float(np.asarray(elicited.density(t)))
        if q <= 0.0:
            return 0.0
        p = float(np.asarray(dist.density(t)))
        if p <= 0.0:
            # measure-zero touch points inside the common support; the
            # support check above already ruled out sets of positive mass
            return 0.0
        return q * math.log(q / p)

    center = float(elicited.quantile(0.5)) if hasattr(elicited, "quantile") else 0.0
    total = 0.0
    for a, b in ((lo, center), (center, hi)):
        val, _ = integrate.quad(integrand, a, b, epsabs=1e-10, limit=200)
        total += val
    return max(float(total), 0.0)


def _kl_over_grid(elicited, dist, lo: float, hi: float) -> float:
    """q log(q/p) integrated segment-by-segment between density grid knots.

    Both densities are smooth inside each segment (linear or analytic), so
    fixed-order Gauss-Legendre per segment converges to machine precision;
    adaptive quadrature would stall on the thousands of interpolation kinks.
    """
    knots = [np.array([lo, hi])]
    for obj in (elicited, dist):
        if isinstance(obj, GridDensity):
            knots.append(obj.grid[(obj.grid > lo) & (obj.grid < hi)])
    edges = np.unique(np.concatenate(knots))
    nodes, weights = np.polynomial.legendre.leggauss(20)
    a = edges[:-1][:, None]
    half = 0.5 * np.diff(edges)[:, None]
    t = a + half * (nodes[None, :] + 1.0)
    q = np.asarray(elicited.density(t.ravel())).reshape(t.shape)
    p = np.asarray(dist.density(t.ravel())).reshape(t.shape)
    ok = (q > 0.0) & (p > 0.0)
    vals = np.zeros_like(t)
    vals[ok] = q[ok] * np.log(q[ok] / p[ok])
    total = float(np.sum(half * vals * weights[None, :]))
    return max(total, 0.0)


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationReport:
    """PIT values, the three calibration curves, and summary scores."""

    pit_values: list
    probability_curve: list  # (p, frequency)
    exceedance_curve: list  # (y, mean pooled quantile at P-level)
    marginal_curve: list  # (y, mean predictive CDF, pooled empirical CDF)
    max_probability_deviation: float
    mean_crps: float | None
    falsification: FalsificationVerdict | None = None
    seed: int | None = None

    def to_json(self) -> dict:
        doc = {
            "pit_values": [float(v) for v in self.pit_values],
            "probability_curve": [[p, f] for p, f in self.probability_curve],
            "exceedance_curve": [[y, v] for y, v in self.exceedance_curve],
            "marginal_curve": [[y, m, e] for y, m, e in self.marginal_curve],
            "max_probability_deviation": self.max_probability_deviation,
            "mean_crps": self.mean_crps,
            "falsification": None if self.falsification is None else self.falsification.to_json(),
            "seed": self.seed,
        }
        return doc

    def curve_csv(self, which: str) -> str:
        """CSV text for one curve; columns are abscissa then value(s)."""
        if which == "probability":
            header, rows = "p,frequency", self.probability_curve
        elif which == "exceedance":
            header, rows = "y,mean_pooled_quantile", self.exceedance_curve
        elif which == "marginal":
            header, rows = "y,mean_predictive_cdf,pooled_empirical_cdf", self.marginal_curve
        else:
            raise ValueError(f"unknown curve {which!r}")
        lines = [header]
        for row in rows:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def calibration_report(
    cases: Sequence[ForecastCase],
    seed,
    levels=None,
    y_grid=None,
    include_crps: bool = True,
    falsification: FalsificationVerdict | None = None,
) -> CalibrationReport:
    """Assemble every diagnostic into one report.

    ``levels`` default to the 19 deciles-and-between p = 0.05 ... 0.95;
    ``y_grid`` defaults to pooled-outcome quantiles. CRPS averaging can be
    switched off for families where the score is undefined.
    """
    pits = pit(cases, seed)
    if levels is None:
        levels = np.linspace(0.05, 0.95, 19)
    prob = probability_calibration(pits, levels)
    pool = _pooled(cases)
    grid = _default_marginal_grid(pool) if y_grid is None else np.asarray(y_grid, dtype=float)
    exceed = exceedance_calibration(cases, grid)
    marginal = marginal_calibration(cases, grid)
    mean_crps = None
    if include_crps:
        mean_crps = float(np.mean([crps(c.predictive, c.observed) for c in cases]))
    return CalibrationReport(
        pit_values=[float(v) for v in pits],
        probability_curve=prob.curve,
        exceedance_curve=exceed,
        marginal_curve=marginal,
        max_probability_deviation=prob.max_deviation,
        mean_crps=mean_crps,
        falsification=falsification,
        seed=seed if isinstance(seed, int) else None,
    )
