"""Acceptance suite: one pass/fail line per criterion, printed even under capture."""

import io
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from vmlab import fixtures, mdp, randomized
from vmlab.cli import cmd_random_suite
from vmlab.convergence import DEFAULT_K
from vmlab.families import dyadic_eps, tail_start
from vmlab.report import BUG, INAPPLICABLE
from vmlab.theorems import ENGINES, TheoremInstance, atomwise_gaps, uniform_fatou_gap

SEED = randomized.DEFAULT_SEED


@pytest.fixture
def report(capsys):
    def emit(criterion: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def test_fixture_reproduction(report):
    mismatches, slow = [], []
    for name in fixtures.fixture_names():
        t0 = time.perf_counter()
        rep = fixtures.verify(fixtures.build(name))
        dt = time.perf_counter() - t0
        if dt >= 5.0:
            slow.append(f"{name} {dt:.1f}s")
        mismatches += [f"{name}.{e.key}: expected {e.expected}, measured {e.measured}" for e in rep.entries if not e.matched]
    ok = not mismatches and not slow
    detail = "all fixture entries reproduced" if ok else "; ".join(mismatches + slow)
    report("1 fixture reproduction", ok, detail)


def test_randomized_theorem_suites(report):
    t0 = time.perf_counter()
    rep = randomized.run_suite(SEED, trials=500, engines=list(ENGINES))
    dt = time.perf_counter() - t0
    bugs = {e.engine: e.counts[BUG] for e in rep.engines if e.counts[BUG]}
    ok = not bugs and dt < 60.0 and all(e.trials >= 500 for e in rep.engines)
    report("2 randomized theorem suites", ok, f"{len(rep.engines)} engines x 500 trials, bugs {bugs or 0}, {dt:.1f}s")


def _subset_matrix(k: int) -> np.ndarray:
    return ((np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]) & 1).astype(float)


def _independent_conditions(vals, f, W, mu, tol):
    T = tail_start(vals.shape[0])
    cond_i = True
    for eps in dyadic_eps():
        for n in range(T - 1, vals.shape[0]):
            mass = sum(mu[x] for x in range(len(f)) if vals[n, x] <= f[x] - eps)
            cond_i &= mass <= tol
    K = DEFAULT_K[-1]
    neg = np.maximum(-vals, 0.0)
    tail_mass = max(sum(W[n, x] * neg[n, x] for x in range(len(f)) if neg[n, x] >= K and W[n, x] > 0) for n in range(T - 1, vals.shape[0]))
    return bool(cond_i), bool(tail_mass <= tol)


def test_uniform_fatou_equivalence(report):
    tol = randomized.SUITE_TOL
    checked, outcomes, problems, trial = 0, set(), [], 0
    while checked < 200 and trial < 2000:
        rng = randomized.trial_rng(SEED, 99, trial)
        trial += 1
        fam, f, seq = randomized.random_gap_instance(rng, max_base=6)
        v = uniform_fatou_gap(fam, f, seq, tol)
        if v.status == INAPPLICABLE:
            continue
        checked += 1
        vals, W, mu = fam.values, seq.weights, seq.limit.weights
        M = _subset_matrix(len(f))
        exhaustive = np.array([(M @ (vals[n] * W[n] - f * mu)).min() for n in range(fam.n_max)])
        gaps = atomwise_gaps(vals, f, W, mu)
        if not np.array_equal(gaps, exhaustive):
            problems.append(f"trial {trial - 1}: atomwise gap differs from subset minimum")
        holds = exhaustive[tail_start(fam.n_max) - 1:].min() >= -tol
        ci, cii = _independent_conditions(vals, f, W, mu, tol)
        if v.quantities["gap_holds"] != holds or holds != (ci and cii):
            problems.append(f"trial {trial - 1}: gap {holds}, conditions ({ci}, {cii})")
        outcomes.add(bool(holds))
    ok = checked >= 200 and not problems and outcomes == {True, False}
    report("3 uniform Fatou equivalence", ok, f"{checked} instances, outcomes {sorted(outcomes)}, problems {problems[:3] or 0}")


def test_mdp_oracle_agreement(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = {"w_upper": 0.0, "w_lower": 0.0, "acoe": 0.0, "discount": -np.inf}
    for _ in range(50):
        model = mdp.random_unichain_model(rng, int(rng.integers(2, 21)), int(rng.integers(1, 6)))
        sweep = mdp.vanishing_discount_sweep(model)
        sol = mdp.average_cost_oracle(model)
        Q = model.cost + model.kernel @ sol.u
        acoe = np.abs(sol.w_star + sol.u - Q.min(axis=1)).max()
        worst["w_upper"] = max(worst["w_upper"], abs(sweep.w_upper - sol.w_star))
        worst["w_lower"] = max(worst["w_lower"], abs(sweep.w_lower - sol.w_star))
        worst["acoe"] = max(worst["acoe"], float(acoe))
        worst["discount"] = max(worst["discount"], mdp.discount_inequality_residual(sweep, model))
    dt = time.perf_counter() - t0
    ok = worst["w_upper"] <= 1e-3 and worst["w_lower"] <= 1e-3 and worst["acoe"] <= 1e-8 and worst["discount"] <= 1e-6 and dt < 120
    detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + f", {dt:.1f}s"
    report("4 MDP oracle agreement", ok, detail)


def test_convergence_mode_chain(report):
    violations, count = [], 0

    def chain(tv, sw, w, label):
        if (tv.passed and not sw.passed) or (sw.passed and not w.passed):
            violations.append(f"{label}: tv {tv.status}, setwise {sw.status}, weak {w.status}")

    for name in fixtures.fixture_names():
        fx = fixtures.build(name)
        if isinstance(fx.instance, TheoremInstance):
            count += 1
            chain(*fixtures.mode_checks(fx.instance.seq, fx.tolerances, fx.instance.sets), name)
    for t in range(200):
        seq = randomized.random_convergence_sequence(randomized.trial_rng(SEED, 98, t))
        count += 1
        chain(*randomized.mode_chain(seq, seed=t), f"random {t}")
    report("5 convergence-mode implication chain", not violations, f"{count} sequences, violations {violations[:3] or 0}")


def test_random_suite_determinism(report, tmp_path):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    for p in paths:
        with redirect_stdout(io.StringIO()):
            cmd_random_suite(SEED, trials=500, out=str(p))
    same = paths[0].read_bytes() == paths[1].read_bytes()
    report("6 determinism", same, f"{Path(paths[0]).stat().st_size} bytes, identical {same}")
