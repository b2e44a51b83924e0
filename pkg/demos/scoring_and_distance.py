"""
Scoring leaky models and measuring how far off they are.

Three tools beyond the leakage number itself:

  * CRPS, a proper score: it rewards the true model over rivals on
    average, so "better models than the leaky one exist" is a checkable
    statement, not a slogan.
  * Kullback-Leibler distance from an elicited opinion to the model:
    how much the model distorts what the forecaster actually believes.
  * never_falsifiable: whether strict falsification could even in
    principle reject the model against the declared evidence.

Run:  python3 demos/scoring_and_distance.py
"""

import math

import numpy as np

from probleak import (
    Evidence,
    GridDensity,
    Normal,
    Poisson,
    StudentT,
    crps,
    kl_distance,
    never_falsifiable,
)


def main():
    # CRPS has a closed form for a normal scored at its own center
    score = crps(Normal(loc=0.0, scale=1.0), 0.0)
    closed = (math.sqrt(2.0) - 1.0) / math.sqrt(math.pi)
    print(f"CRPS of N(0,1) at y = 0: {score:.8f} (closed form {closed:.8f})")

    # properness in miniature: the model that generated the data wins
    rng = np.random.default_rng(7)
    ys = rng.normal(0.0, 1.0, 2000)
    rivals = {
        "true N(0,1)": Normal(loc=0.0, scale=1.0),
        "shifted N(0.5,1)": Normal(loc=0.5, scale=1.0),
        "inflated N(0,2)": Normal(loc=0.0, scale=2.0),
    }
    print("\nmean CRPS over 2000 draws from N(0,1):")
    for name, dist in rivals.items():
        mean = float(np.mean([crps(dist, y) for y in ys]))
        print(f"  {name:18s} {mean:.4f}")

    # a heavy-tailed predictive can fail to have a CRPS at all
    cauchy = StudentT(df=1.0, loc=0.0, scale=1.0)
    try:
        crps(cauchy, 0.0)
    except Exception as err:
        print(f"\nCRPS of a Cauchy predictive: {err}")

    # KL distance from an opinion to the model
    print("\nKL distance (nats), N(0,1) vs N(1,1):",
          f"{kl_distance(Normal(0.0, 1.0), Normal(1.0, 1.0)):.6f}")

    # an expert's elicited density on [0, 4], linearly interpolated
    opinion = GridDensity([0.0, 1.0, 2.0, 4.0], [0.1, 0.5, 0.3, 0.0])
    model = Normal(loc=1.2, scale=0.8)
    print("elicited opinion vs model:",
          f"{kl_distance(opinion, model):.4f}")

    # if the model has no mass where the opinion does, the distance is
    # infinite: no reweighting can repair a support mismatch
    narrow = GridDensity([0.0, 1.0], [1.0, 1.0])
    wide = GridDensity([-1.0, 3.0], [0.25, 0.25])
    print("opinion escapes the model's support:",
          kl_distance(wide, narrow))

    # falsifiability against declared evidence
    counts = Evidence.lattice_support(0.0, 50.0, 1.0,
                                      description="counts 0..50")
    print("\nPoisson(3) vs counts 0..50, never falsifiable:",
          never_falsifiable(Poisson(rate=3.0), counts))
    print("N(3,1) vs the same counts, never falsifiable:",
          never_falsifiable(Normal(loc=3.0, scale=1.0), counts))
    print("A continuous model puts zero probability on every exact count,")
    print("so any observation falsifies it; the Poisson can never be caught.")


if __name__ == "__main__":
    main()
