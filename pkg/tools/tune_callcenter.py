"""Tune the call-center generator's default coefficients.

The generator's truth must be chosen so that the model FITTED to the
generated data (not the truth itself) shows the documented leakage profile:
truncation at zero biases ordinary least squares toward smaller leakage, so
the coefficients have to overshoot. A single Nelder-Mead run is not enough,
because the audit numbers are properties of one finite dataset and move with
the config seed; the seed is therefore part of the tuned result. Stages:

  1. sample coefficient geometries and polish the best few with Nelder-Mead
     at the shipped config (hinge loss on the window edges),
  2. scan config seeds with the polished coefficients and keep the seed with
     the widest worst-case logit margin,
  3. re-polish at that seed,
  4. rescale jointly so abandonment tops out near 13 (fitted leakages are
     invariant to scaling all coefficients and the noise sd together).

The shipped probleak.simulation._CC_COEFS is this output rounded to three
significant figures, and the shipped CallCenterConfig.seed default is the
stage-2 winner; both re-verified against the windows after rounding.

Targets (fitted leakage against evidence y >= 0, shipped config):
    location A at covariate medians   ~ 0.36    (window [0.25, 0.50])
    location B at covariate medians   ~ 0.015   (window [0.005, 0.06])
    location A at covariate minima    ~ 0.92    (window [0.80, 1.00])
    location B at covariate minima    ~ 0.48    (window [0.35, 0.65])
    intercept-only model              ~ 0.105   (window [0.07, 0.15])

Run:  python3 tools/tune_callcenter.py
"""

import math
from dataclasses import replace

import numpy as np
from scipy import optimize

from probleak import Evidence, ModelSpec, fit_model, leakage, predictive_at
from probleak.simulation import (
    CallCenterCoefs,
    CallCenterConfig,
    _draw_covariates,
    _gen_callcenter,
)

EVIDENCE = Evidence.interval(0.0, math.inf)
TARGETS = {
    "A_medians": 0.36,
    "B_medians": 0.015,
    "A_minima": 0.92,
    "B_minima": 0.48,
    "null_x": 0.105,
}
WINDOWS = {
    "A_medians": (0.25, 0.50),
    "B_medians": (0.005, 0.06),
    "A_minima": (0.80, 1.00),
    "B_minima": (0.35, 0.65),
    "null_x": (0.07, 0.15),
}


def audit(coefs: CallCenterCoefs, cfg: CallCenterConfig) -> dict:
    """The five fitted leakage numbers for one coefficient candidate."""
    data = _gen_callcenter(cfg, coefs)
    fit = fit_model(data, ModelSpec("abandonment", ("calls", "absentees", "location")))
    null_fit = fit_model(data, ModelSpec("abandonment", ()))
    calls = data.column("calls")
    absentees = data.column("absentees")
    out = {}
    for tag, (c, a) in (
        ("medians", (np.median(calls), np.median(absentees))),
        ("minima", (calls.min(), absentees.min())),
    ):
        for loc in ("A", "B"):
            point = {"calls": float(c), "absentees": float(a), "location": loc}
            out[f"{loc}_{tag}"] = leakage(predictive_at(fit, point), EVIDENCE).leakage
    out["null_x"] = leakage(predictive_at(null_fit, {}), EVIDENCE).leakage
    return out


def _logit(p: float) -> float:
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return math.log(p / (1.0 - p))


def loss(vec, cfg: CallCenterConfig) -> float:
    """Hinge on the window edges (with a 5%-of-width safety margin) plus a
    weak pull toward the centers; feasible-with-margin points score ~0."""
    coefs = CallCenterCoefs(*vec)
    if coefs.noise_sd <= 0.05:
        return 1e6
    try:
        got = audit(coefs, cfg)
    except Exception:
        return 1e6
    total = 0.0
    for k, (lo, hi) in WINDOWS.items():
        margin = 0.05 * (hi - lo)
        z = _logit(got[k])
        breach = max(0.0, _logit(min(lo + margin, 0.999999)) - z)
        if hi < 1.0:
            breach = max(breach, z - _logit(hi - margin))
        total += 100.0 * breach**2
        total += 0.02 * (z - _logit(TARGETS[k])) ** 2
    return total


def margin(coefs: CallCenterCoefs, cfg: CallCenterConfig) -> tuple:
    """Worst-case logit distance to the nearest window edge (negative means
    some probe is outside its window) and the probe that binds it."""
    try:
        got = audit(coefs, cfg)
    except Exception:
        return -math.inf, "infeasible"
    worst, binding = math.inf, None
    for k, (lo, hi) in WINDOWS.items():
        z = _logit(got[k])
        gap = z - _logit(lo)
        if hi < 1.0:
            gap = min(gap, _logit(hi) - z)
        if gap < worst:
            worst, binding = gap, k
    return worst, binding


def _candidates(n: int, seed: int, cfg: CallCenterConfig):
    """Sample coefficient vectors through the geometry that matters.

    The fitted leakages are (nearly) invariant to jointly scaling all
    coefficients and the noise sd, so the shape search fixes noise_sd = 1
    and walks: the location-A mean at covariate medians, the site offset,
    the median-to-minimum mean drop, and how that drop splits between the
    calls and absentee slopes. Levers come from the actual covariate draw.
    """
    calls, absentees, _ = _draw_covariates(cfg, np.random.default_rng(cfg.seed))
    med_calls, min_calls = float(np.median(calls)), float(calls.min())
    med_abs, min_abs = float(np.median(absentees)), float(absentees.min())
    rng = np.random.default_rng(seed)
    for _ in range(n):
        m_a = rng.uniform(-1.2, 0.8)  # generator-scale mean, A at medians
        b_loc = rng.uniform(0.6, 2.6)
        drop = rng.uniform(0.8, 2.8)
        frac = rng.uniform(0.0, 1.0)  # share of the drop carried by calls
        b_c = drop * frac / (med_calls - min_calls)
        b_a = drop * (1.0 - frac) / (med_abs - min_abs)
        b0 = m_a - med_calls * b_c - med_abs * b_a
        yield np.array([b0, b_c, b_a, b_loc, 1.0])


def _polish(start: np.ndarray, cfg: CallCenterConfig):
    return optimize.minimize(
        loss,
        start,
        args=(cfg,),
        method="Nelder-Mead",
        options={"maxiter": 2000, "xatol": 1e-7, "fatol": 1e-12},
    )


def main():
    cfg = CallCenterConfig()

    # stage 1: geometry search + polish at the shipped config
    best = []
    for vec in _candidates(4000, seed=2, cfg=cfg):
        best.append((loss(vec, cfg), tuple(vec)))
    best.sort(key=lambda pair: pair[0])
    res = None
    for _, vec in best[:5]:
        cand = _polish(np.array(vec), cfg)
        if res is None or cand.fun < res.fun:
            res = cand
    coefs = CallCenterCoefs(*res.x)
    print(f"stage 1  loss {res.fun:.6g}  margin {margin(coefs, cfg)[0]:+.4f}")

    # stage 2: the audit numbers are seed-dependent; find the friendliest seed
    scan = sorted(
        ((margin(coefs, replace(cfg, seed=s))[0], s) for s in range(2000)),
        reverse=True,
    )
    print("stage 2  best seeds:", [(s, round(m, 4)) for m, s in scan[:5]])
    cfg = replace(cfg, seed=scan[0][1])

    # stage 3: re-polish where the data are kindest
    res = _polish(res.x, cfg)
    coefs = CallCenterCoefs(*res.x)
    worst, binding = margin(coefs, cfg)
    print(f"stage 3  seed {cfg.seed}  loss {res.fun:.6g}  "
          f"margin {worst:+.4f} (binding: {binding})")

    # stage 4: joint scaling leaves the fitted leakages alone; use it to put
    # the abandonment values on a plausible percentage scale
    y_raw = _gen_callcenter(cfg, coefs).column("abandonment")
    k = 13.0 / float(y_raw.max())
    coefs = CallCenterCoefs(*(float(k * c) for c in coefs))

    got = audit(coefs, cfg)
    y = _gen_callcenter(cfg, coefs).column("abandonment")

    print("tuned coefficients (round to 3 significant figures by hand and")
    print("re-run the audit before shipping):")
    print("_CC_COEFS = CallCenterCoefs(")
    print(f"    intercept={float(coefs.intercept)!r},")
    print(f"    calls={float(coefs.calls)!r},")
    print(f"    absentees={float(coefs.absentees)!r},")
    print(f"    location_b={float(coefs.location_b)!r},")
    print(f"    noise_sd={float(coefs.noise_sd)!r},")
    print(")")
    print(f"config seed: {cfg.seed}")
    print("fitted leakages vs windows:")
    for name, v in got.items():
        lo, hi = WINDOWS[name]
        flag = "ok " if lo <= v <= hi else "OUT"
        print(f"  {flag} {name:10s} {v:.5f}  window [{lo}, {hi}]")
    print(f"abandonment range: [{y.min():.4g}, {y.max():.4g}]")


if __name__ == "__main__":
    main()
