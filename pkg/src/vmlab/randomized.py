"""Seeded random instances and the hypothesis-implies-conclusion suite.

Instances live on 2B points: B base points on the 1/64 grid of [0, 4), each
with a twin 2^-30 to its right, so the finest admissible ball of every point
is {point, twin}. Values are multiples of 1/8 and weights multiples of 1/64,
which keeps every sum exact in floating point. Rows n < N/2 are arbitrary;
from the tail start on, the measure sequence follows one of three modes:

  tv     mu_n = mu
  weak   mass moves between a point and its twin, preserving each ball's mass
  div    mu plus an extra atom of mass 1/64 (never converges)
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .convergence import setwise_convergence_check, tv_convergence_check, weak_convergence_check
from .families import FunctionFamily, MeasureSequence, tail_start
from .measure import AtomicMeasure, MetricPointSet
from .report import BUG, FAIL, INAPPLICABLE, PASS, Verdict
from .theorems import ENGINES, TheoremInstance, run_engine, uniform_fatou_gap

HORIZON = 16
TWIN_OFFSET = 2.0 ** -30
SPIKE = 2.0 ** 24
SUITE_TOL = 1e-6
DEFAULT_SEED = 20240601
ENGINE_ORDER = tuple(ENGINES) + ("uniform_fatou_gap",)
MODES = ("tv", "weak", "div")


def trial_rng(seed: int, engine_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, engine_index, trial]))


def random_space(rng: np.random.Generator, max_base: int = 6) -> MetricPointSet:
    B = int(rng.integers(2, max_base + 1))
    base = np.sort(rng.choice(256, B, replace=False)) / 64.0
    xs = np.empty(2 * B)
    xs[0::2] = base
    xs[1::2] = base + TWIN_OFFSET
    return MetricPointSet.euclidean(xs)


def random_measure_sequence(rng: np.random.Generator, space: MetricPointSet, mode: str | None = None, n_max: int = HORIZON) -> MeasureSequence:
    P = len(space)
    mode = mode or str(rng.choice(MODES, p=[0.5, 0.35, 0.15]))
    w = rng.integers(0, 9, P) / 64.0
    if w.sum() == 0:
        w[int(rng.integers(P))] = 1.0 / 64.0
    T = tail_start(n_max)
    W = np.empty((n_max, P))
    W[: T - 1] = rng.integers(0, 9, (T - 1, P)) / 64.0
    for n in range(T - 1, n_max):
        if mode == "tv":
            W[n] = w
        elif mode == "weak":
            row = w.copy()
            for p in range(0, P, 2):
                total = int(round((w[p] + w[p + 1]) * 64))
                left = int(rng.integers(0, total + 1))
                row[p], row[p + 1] = left / 64.0, (total - left) / 64.0
            W[n] = row
        elif mode == "div":
            row = w.copy()
            row[int(rng.integers(P))] += 1.0 / 64.0
            W[n] = row
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return MeasureSequence(space, W, AtomicMeasure(space, w))


def _twin_equalize(rng: np.random.Generator, vals: np.ndarray, prob: float = 0.8) -> np.ndarray:
    out = vals.copy()
    for p in range(0, vals.shape[-1], 2):
        if rng.random() < prob:
            out[..., p + 1] = out[..., p]
    return out


def _add_spikes(rng: np.random.Generator, vals: np.ndarray, f: np.ndarray | None) -> np.ndarray:
    out = vals.copy()
    if rng.random() < 0.3:
        N, P = vals.shape
        for _ in range(int(rng.integers(1, 3))):
            n, p = int(rng.integers(N)), int(rng.integers(P))
            if f is None or abs(f[p]) <= 8:
                out[n, p] = SPIKE if rng.random() < 0.5 else -SPIKE
    return out


def random_values(rng: np.random.Generator, n_max: int, P: int) -> np.ndarray:
    """Multiples of 1/8 in [-8, 8]; the tail is frozen to one row with probability 1/2."""
    vals = rng.integers(-64, 65, (n_max, P)) / 8.0
    if rng.random() < 0.5:
        T = tail_start(n_max)
        vals[T - 1:] = vals[T - 1]
    return _twin_equalize(rng, vals)


def random_fatou_instance(rng: np.random.Generator, tol: float = SUITE_TOL) -> TheoremInstance:
    space = random_space(rng)
    seq = random_measure_sequence(rng, space)
    vals = random_values(rng, HORIZON, len(space))
    f = vals[tail_start(HORIZON) - 1:].min(axis=0)
    vals = _add_spikes(rng, vals, f)
    fam = FunctionFamily(space, vals, f)
    minorant = None
    if rng.random() < 0.5:
        minorant = FunctionFamily(space, vals - rng.integers(0, 9, vals.shape) / 8.0)
    return TheoremInstance(fam, seq, minorant=minorant, tol=tol, seed=int(rng.integers(2 ** 31)))


def random_monotone_instance(rng: np.random.Generator, tol: float = SUITE_TOL) -> TheoremInstance:
    space = random_space(rng)
    seq = random_measure_sequence(rng, space)
    P = len(space)
    steps = rng.integers(0, 9, (HORIZON, P)) / 8.0
    T = tail_start(HORIZON)
    if rng.random() < 0.7:
        steps[T - 1:] = 0.0
    start = rng.integers(-64, 65, P) / 8.0
    vals = _twin_equalize(rng, start[None, :] + np.cumsum(steps, axis=0))
    vals = np.maximum.accumulate(_add_spikes(rng, vals, None), axis=0)
    fam = FunctionFamily(space, vals)
    return TheoremInstance(fam, seq, tol=tol, seed=int(rng.integers(2 ** 31)))


def random_gap_instance(rng: np.random.Generator, max_base: int = 6):
    """(family, f, sequence) for the uniform Fatou gap; at most 2 * max_base atoms."""
    space = random_space(rng, max_base)
    seq = random_measure_sequence(rng, space, "tv" if rng.random() < 0.85 else None)
    vals = rng.integers(-64, 65, (HORIZON, len(space))) / 8.0
    f = vals[tail_start(HORIZON) - 1:].min(axis=0)
    if rng.random() < 0.5:
        f = f + rng.integers(0, 3, len(space)) / 8.0 * (rng.random(len(space)) < 0.3)
    vals = _add_spikes(rng, vals, f)
    return FunctionFamily(space, vals), f, seq


def random_convergence_sequence(rng: np.random.Generator) -> MeasureSequence:
    space = random_space(rng)
    return random_measure_sequence(rng, space)


def mode_chain(seq: MeasureSequence, tols: tuple[float, float, float] = (SUITE_TOL, SUITE_TOL, SUITE_TOL), seed: int = 0) -> tuple[Verdict, Verdict, Verdict]:
    """TV, setwise and weak checks at nondecreasing tolerances."""
    t_tv, t_sw, t_w = tols
    return tv_convergence_check(seq, t_tv), setwise_convergence_check(seq, None, t_sw, seed), weak_convergence_check(seq, None, t_w, seed)


# ---------------------------------------------------------------------------
# Suite


def run_trial(seed: int, engine: str, trial: int, tol: float = SUITE_TOL) -> Verdict:
    idx = ENGINE_ORDER.index(engine)
    rng = trial_rng(seed, idx, trial)
    if engine == "uniform_fatou_gap":
        fam, f, seq = random_gap_instance(rng)
        return uniform_fatou_gap(fam, f, seq, tol)
    if engine.startswith("monotone"):
        inst = random_monotone_instance(rng, tol)
    else:
        inst = random_fatou_instance(rng, tol)
    return run_engine(engine, inst)


def _leaf_statuses(v: Verdict) -> list[str]:
    return [c.status for c in v.walk() if not c.children]


@dataclass
class EngineSummary:
    engine: str
    trials: int = 0
    counts: dict[str, int] = field(default_factory=lambda: {PASS: 0, INAPPLICABLE: 0, FAIL: 0, BUG: 0})
    bugs: list[dict] = field(default_factory=list)

    def add(self, trial: int, v: Verdict) -> None:
        self.trials += 1
        for st in _leaf_statuses(v):
            self.counts[st] += 1
        if any(st == BUG for st in _leaf_statuses(v)) and len(self.bugs) < 5:
            self.bugs.append({"trial": trial, "verdict": v.to_dict(details=False)})


@dataclass
class SuiteReport:
    seed: int
    trials: int
    tol: float
    engines: list[EngineSummary]

    @property
    def bug_count(self) -> int:
        return sum(e.counts[BUG] for e in self.engines)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "seed": self.seed,
            "trials": self.trials,
            "tolerance": self.tol,
            "bugs": self.bug_count,
            "engines": [{"engine": e.engine, "trials": e.trials, **e.counts, "bug_trials": e.bugs} for e in self.engines],
        }

    def rows(self) -> list[list]:
        return [[e.engine, e.trials, e.counts[PASS], e.counts[INAPPLICABLE], e.counts[FAIL], e.counts[BUG]] for e in self.engines]


SUMMARY_COLUMNS = ("engine", "trials", "pass", "inapplicable", "fail", "bug")


def _engine_block(args) -> list[Verdict]:
    seed, engine, trials, tol = args
    return [run_trial(seed, engine, t, tol) for t in range(trials)]


def worker_count() -> int:
    cap = os.environ.get("VM_LAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def run_suite(seed: int = DEFAULT_SEED, trials: int = 500, tol: float = SUITE_TOL, engines=ENGINE_ORDER, workers: int | None = None) -> SuiteReport:
    """Run every engine on `trials` seeded instances; output order is (engine, trial)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    engines = list(engines)
    for e in engines:
        if e not in ENGINE_ORDER:
            raise ValueError(f"unknown engine {e!r}")
    jobs = [(seed, e, trials, tol) for e in engines]
    n_workers = worker_count() if workers is None else workers
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n_workers, len(jobs))) as pool:
            blocks = list(pool.map(_engine_block, jobs))
    else:
        blocks = [_engine_block(j) for j in jobs]
    summaries = []
    for e, block in zip(engines, blocks):
        s = EngineSummary(e)
        for t, v in enumerate(block):
            s.add(t, v)
        summaries.append(s)
    return SuiteReport(seed, trials, tol, summaries)
