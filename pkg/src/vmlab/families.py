"""Truncated sequences of functions and of measures on a finite point set."""

from __future__ import annotations

import math
from typing import Callable, Hashable, Sequence

import numpy as np

from .measure import AtomicMeasure, InputError, MetricPointSet, as_ext_array, same_space

MIN_HORIZON = 8


def tail_start(n_max: int) -> int:
    """First index n (1-based) of the tail {n >= N_max/2}."""
    return (n_max + 1) // 2


def quarter_start(n_max: int) -> int:
    """First index n (1-based) of the last quarter of the horizon."""
    return n_max - n_max // 4 + 1


def dyadic_radii(lo_exp: int = 1, hi_exp: int = 40) -> tuple[float, ...]:
    """Default radius schedule 2^-1, 2^-2, ..., 2^-40."""
    return tuple(2.0 ** -k for k in range(lo_exp, hi_exp + 1))


def dyadic_eps(levels: int = 10) -> tuple[float, ...]:
    """Default epsilon schedule 1, 1/2, ..., 2^-10."""
    return tuple(2.0 ** -k for k in range(levels + 1))


def check_radii(radii: Sequence[float]) -> tuple[float, ...]:
    r = tuple(float(x) for x in radii)
    if not r:
        raise InputError("radius schedule is empty")
    if any(not (x > 0 and math.isfinite(x)) for x in r):
        raise InputError("radii must be positive and finite")
    if any(b >= a for a, b in zip(r, r[1:])):
        raise InputError("radii must be strictly decreasing")
    return r


def check_eps(eps: Sequence[float]) -> tuple[float, ...]:
    e = tuple(float(x) for x in eps)
    if not e or any(not (x > 0) for x in e):
        raise InputError("epsilon schedule must be nonempty and positive")
    return e


class FunctionFamily:
    """Values f_n(s) for n = 1..N_max as an (N_max, |S|) array, plus an optional limit f."""

    def __init__(self, space: MetricPointSet, values, limit=None, name: str = ""):
        v = as_ext_array(values, what="family values")
        if v.ndim != 2 or v.shape[1] != len(space):
            raise InputError(f"family values must have shape (N_max, {len(space)})")
        if v.shape[0] < MIN_HORIZON:
            raise InputError(f"horizon N_max = {v.shape[0]} is below the minimum {MIN_HORIZON}")
        v.setflags(write=False)
        self.space = space
        self.values = v
        self.limit = None
        if limit is not None:
            lim = as_ext_array(limit, (len(space),), "limit candidate")
            lim.setflags(write=False)
            self.limit = lim
        self.name = name

    @classmethod
    def from_callable(cls, space: MetricPointSet, n_max: int, fn: Callable[[int, Hashable], float], limit=None, name: str = ""):
        vals = [[fn(n, p) for p in space.points] for n in range(1, n_max + 1)]
        lim = None if limit is None else [limit(p) for p in space.points]
        return cls(space, vals, lim, name)

    @property
    def n_max(self) -> int:
        return self.values.shape[0]

    @property
    def tail(self) -> np.ndarray:
        return self.values[tail_start(self.n_max) - 1:]

    def eval(self, n: int, point: Hashable) -> float:
        return float(self.values[n - 1, self.space.index(point)])

    def require_limit(self) -> np.ndarray:
        if self.limit is None:
            raise InputError("family has no limit candidate")
        return self.limit

    def map(self, fn: Callable[[np.ndarray], np.ndarray], name: str = "") -> "FunctionFamily":
        lim = None if self.limit is None else fn(self.limit)
        return FunctionFamily(self.space, fn(self.values), lim, name or self.name)

    def negated(self) -> "FunctionFamily":
        return self.map(np.negative, f"-({self.name})")

    def negative_part(self) -> "FunctionFamily":
        return self.map(lambda a: np.maximum(-a, 0.0), f"({self.name})^-")

    def positive_part(self) -> "FunctionFamily":
        return self.map(lambda a: np.maximum(a, 0.0), f"({self.name})^+")

    def absolute(self) -> "FunctionFamily":
        return self.map(np.abs, f"|{self.name}|")

    def with_limit(self, limit) -> "FunctionFamily":
        return FunctionFamily(self.space, self.values, limit, self.name)

    def shifted(self, start: int) -> np.ndarray:
        """Rows n = start..N_max (not a family: may be shorter than the minimum horizon)."""
        return self.values[start - 1:]


class MeasureSequence:
    """Weights of mu_n for n = 1..N_max as an (N_max, |S|) array, plus the limit mu."""

    def __init__(self, space: MetricPointSet, weights, limit: AtomicMeasure):
        w = as_ext_array(weights, what="sequence weights")
        if w.ndim != 2 or w.shape[1] != len(space):
            raise InputError(f"sequence weights must have shape (N_max, {len(space)})")
        if w.shape[0] < MIN_HORIZON:
            raise InputError(f"horizon N_max = {w.shape[0]} is below the minimum {MIN_HORIZON}")
        if not np.isfinite(w).all() or (w < 0).any():
            raise InputError("sequence weights must be finite and nonnegative")
        if limit.space is not space and limit.space.space_id != space.space_id:
            raise InputError("limit measure lives on a different space")
        w.setflags(write=False)
        self.space = space
        self.weights = w
        self.limit = limit

    @classmethod
    def from_terms(cls, terms: Sequence[AtomicMeasure], limit: AtomicMeasure) -> "MeasureSequence":
        if not terms:
            raise InputError("empty measure sequence")
        for t in terms:
            same_space(t, limit)
        return cls(limit.space, np.vstack([t.weights for t in terms]), limit)

    @classmethod
    def constant(cls, mu: AtomicMeasure, n_max: int) -> "MeasureSequence":
        return cls(mu.space, np.tile(mu.weights, (n_max, 1)), mu)

    @property
    def n_max(self) -> int:
        return self.weights.shape[0]

    def term(self, n: int) -> AtomicMeasure:
        return AtomicMeasure(self.space, self.weights[n - 1])


def check_compatible(fam: FunctionFamily, seq: MeasureSequence) -> None:
    if fam.space is not seq.space and fam.space.space_id != seq.space.space_id:
        raise InputError("family and measure sequence live on different spaces")
    if fam.n_max != seq.n_max:
        raise InputError("family and measure sequence have different horizons")
