import json

import numpy as np
import pytest

from vmlab import randomized
from vmlab.families import tail_start
from vmlab.report import BUG
from vmlab.theorems import atomwise_gaps


def test_trial_streams_are_reproducible():
    a = randomized.trial_rng(1, 2, 3).integers(0, 2 ** 31, 8)
    b = randomized.trial_rng(1, 2, 3).integers(0, 2 ** 31, 8)
    c = randomized.trial_rng(1, 2, 4).integers(0, 2 ** 31, 8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_random_space_has_twins():
    sp = randomized.random_space(np.random.default_rng(0))
    xs = np.asarray(sp.coords)
    assert np.all(xs[1::2] - xs[0::2] == randomized.TWIN_OFFSET)
    balls = sp.finest_balls(tuple(2.0 ** -k for k in range(1, 41)))
    for i in range(0, len(xs), 2):
        assert sorted(balls.members(i)) == [i, i + 1]


@pytest.mark.parametrize("mode", randomized.MODES)
def test_measure_sequence_modes(mode):
    rng = np.random.default_rng(4)
    sp = randomized.random_space(rng)
    seq = randomized.random_measure_sequence(rng, sp, mode)
    T = tail_start(seq.n_max)
    tail = seq.weights[T - 1:]
    mu = seq.limit.weights
    if mode == "tv":
        assert (tail == mu).all()
    elif mode == "weak":
        pair = lambda w: w[..., 0::2] + w[..., 1::2]
        assert np.array_equal(pair(tail), np.broadcast_to(pair(mu), pair(tail).shape))
    else:
        assert np.allclose(np.abs(tail - mu).sum(axis=1), 1 / 64)


def test_mode_chain_implications():
    for t in range(100):
        seq = randomized.random_convergence_sequence(randomized.trial_rng(9, 0, t))
        tv, sw, w = randomized.mode_chain(seq)
        assert (not tv.passed) or sw.passed
        assert (not sw.passed) or w.passed


def test_gap_instance_size():
    fam, f, seq = randomized.random_gap_instance(np.random.default_rng(1), max_base=6)
    assert len(fam.space) <= 12 and f.shape == (len(fam.space),)
    g = atomwise_gaps(fam.values, f, seq.weights, seq.limit.weights)
    assert g.shape == (fam.n_max,) and (g <= 0).all()


def test_small_suite_finds_no_bugs():
    rep = randomized.run_suite(trials=20, workers=1)
    assert rep.bug_count == 0
    assert [e.engine for e in rep.engines] == list(randomized.ENGINE_ORDER)
    assert all(e.trials == 20 for e in rep.engines)
    counts = {k: sum(e.counts[k] for e in rep.engines) for k in ("pass", "inapplicable")}
    assert counts["pass"] > 0 and counts["inapplicable"] > 0


def test_suite_output_independent_of_worker_count():
    a = randomized.run_suite(seed=5, trials=5, workers=1).to_dict()
    b = randomized.run_suite(seed=5, trials=5, workers=2).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("VM_LAB_THREADS", "1")
    assert randomized.worker_count() == 1
    monkeypatch.setenv("VM_LAB_THREADS", "junk")
    assert randomized.worker_count() >= 1


def test_suite_rejects_bad_arguments():
    with pytest.raises(ValueError):
        randomized.run_suite(trials=0)
    with pytest.raises(ValueError):
        randomized.run_suite(trials=1, engines=["nope"])


def test_single_trial_is_a_verdict_tree():
    v = randomized.run_trial(randomized.DEFAULT_SEED, "fatou_setwise", 0)
    assert v.check_id == "fatou_setwise" and len(v.children) == 3
    assert all(c.status != BUG for c in v.walk())
