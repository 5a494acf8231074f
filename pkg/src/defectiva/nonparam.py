"""Nonparametric references: Kaplan-Meier curves and a binned hazard."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UnivariateSample:
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.events)
        if t.ndim != 1 or t.shape != e.shape:
            raise ValueError("times and events must be 1-d arrays of equal length")
        if t.size == 0:
            raise ValueError("sample is empty")
        if np.any(~np.isfinite(t)) or np.any(t <= 0):
            raise ValueError("times must be finite and positive")
        if np.any((e != 0) & (e != 1)):
            raise ValueError("events must be 0 or 1")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", e.astype(np.int8))


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous step function; ``values[i]`` holds on ``[knots[i], knots[i+1])``."""

    knots: np.ndarray
    values: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # position 0 stands for times before the first knot
        levels = np.r_[1.0, self.values]
        out = levels[np.searchsorted(self.knots, t, side="right")]
        return float(out) if out.ndim == 0 else out


def kaplan_meier(s: UnivariateSample) -> StepCurve:
    """Product-limit survival estimate over the distinct event times.

    Censorings tied with an event time are still counted at risk at that time.
    A tail of censored observations leaves the curve flat, which is how a cure
    fraction shows up.
    """
    order = np.argsort(s.times, kind="stable")
    t = s.times[order]
    e = s.events[order]
    uniq, first = np.unique(t, return_index=True)
    n_at = t.size - first
    d = np.add.reduceat(e.astype(np.int64), first)
    keep = d > 0
    knots = uniq[keep]
    n_at = n_at[keep]
    d = d[keep]
    values = np.cumprod(1.0 - d / n_at)
    return StepCurve(knots, values, n_at, d)


def binned_hazard(s: UnivariateSample, bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Occurrence/exposure hazard on equal-width bins over ``(0, max time]``.

    Returns ``(midpoints, hazard)``; bins that accrue no exposure are dropped.
    Default bin count is ``ceil(sqrt(number of events))``.
    """
    n_events = int(s.events.sum())
    if n_events == 0:
        raise ValueError("binned hazard needs at least one event")
    if bins is None:
        bins = math.ceil(math.sqrt(n_events))
    if bins < 1:
        raise ValueError("bins must be positive")
    edges = np.linspace(0.0, s.times.max(), bins + 1)
    lo, hi = edges[:-1], edges[1:]
    exposure = np.clip(s.times[:, None], lo[None, :], hi[None, :]).sum(axis=0) - lo * s.times.size
    idx = np.clip(np.searchsorted(edges, s.times, side="left") - 1, 0, bins - 1)
    counts = np.bincount(idx[s.events == 1], minlength=bins)
    keep = exposure > 0
    mids = 0.5 * (lo + hi)
    return mids[keep], counts[keep] / exposure[keep]
