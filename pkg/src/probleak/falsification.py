"""Strict falsification semantics.

A model is falsified when an event it declared impossible actually happens:
probability exactly zero, not merely tiny. The probability-zero test is
structural (does the family's support contain the value at all), never a
numerical-underflow check, so a Poisson model survives an observed count of
10^6 even though its pmf there underflows to 0.0 in floats.

Two readings of "an event" are offered. The default point reading treats a
recorded value as the exact real number, under which any continuous model is
falsified by the first observation of any kind. The interval reading widens
each value by the recording device's resolution and asks whether the model
puts mass anywhere in that window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .leakage import Evidence
from .predictive import PredictiveDistribution

__all__ = ["Observation", "FalsificationVerdict", "is_falsified", "never_falsifiable"]


@dataclass(frozen=True)
class Observation:
    """A recorded outcome; resolution is the measurement step of the device."""

    value: float
    resolution: float | None = None

    def __post_init__(self):
        if self.resolution is not None and not self.resolution > 0.0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")

    def window(self) -> tuple[float, float]:
        if self.resolution is None:
            raise ValueError("interval_event mode requires observations with a resolution")
        half = 0.5 * self.resolution
        return self.value - half, self.value + half


@dataclass(frozen=True)
class FalsificationVerdict:
    falsified: bool
    mode: str
    witness: Observation | None = None

    def __post_init__(self):
        if self.falsified and self.witness is None:
            raise ValueError("a falsified verdict must carry its witness")

    def to_json(self) -> dict:
        doc: dict = {"falsified": self.falsified, "mode": self.mode}
        if self.witness is not None:
            doc["witness"] = {"value": self.witness.value}
            if self.witness.resolution is not None:
                doc["witness"]["resolution"] = self.witness.resolution
        return doc


def _as_observations(obs) -> list[Observation]:
    out = []
    for o in obs:
        if isinstance(o, Observation):
            out.append(o)
        else:
            out.append(Observation(float(o)))
    return out


def is_falsified(
    dist: PredictiveDistribution,
    obs: Sequence,
    mode: str = "point_event",
) -> FalsificationVerdict:
    """Verdict on whether any observation is a probability-zero event for dist.

    Observations may be Observation objects or bare numbers. The witness is
    the first probability-zero event in input order. point_event asks
    P(Y = value) = 0; interval_event asks P(value +- resolution/2) = 0 and
    requires every observation to carry a resolution.
    """
    observations = _as_observations(obs)
    if not observations:
        raise ValueError("need at least one observation")
    if mode == "point_event":
        for o in observations:
            zero = dist.kind == "continuous" or not dist.has_atom(o.value)
            if zero:
                return FalsificationVerdict(falsified=True, mode=mode, witness=o)
        return FalsificationVerdict(falsified=False, mode=mode)
    if mode == "interval_event":
        for o in observations:
            lo, hi = o.window()
            if not dist.has_mass(lo, hi):
                return FalsificationVerdict(falsified=True, mode=mode, witness=o)
        return FalsificationVerdict(falsified=False, mode=mode)
    raise ValueError(f"unknown mode {mode!r}; expected point_event or interval_event")


def never_falsifiable(dist: PredictiveDistribution, e: Evidence) -> bool:
    """True when no observation the evidence permits can ever falsify the model.

    Requires a discrete model and finitely enumerable discrete evidence; the
    check is exhaustive, confirming the model puts an atom on every possible
    value. A continuous model is falsifiable by any point observation, so it
    returns False immediately.
    """
    if dist.kind == "continuous":
        return False
    values = e.possible_values()
    return all(dist.has_atom(float(v)) for v in values)
