"""Finite MDPs: discounted value iteration, vanishing-discount analysis and average-cost certificates."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
from numba import njit

from . import semicontinuity as sc
from .families import FunctionFamily, check_radii, dyadic_eps, dyadic_radii, quarter_start, tail_start
from .measure import INF, InputError, MetricPointSet, as_ext_array, ext_real
from .report import FAIL, PASS, Verdict

SCHEMA_VERSION = 1
ROW_SUM_TOL = 1e-12
DEFAULT_ALPHAS = tuple(1.0 - 2.0 ** -n for n in range(1, 13))


class NonUnichainError(InputError):
    """Policy evaluation found more than one recurrent class."""


# ---------------------------------------------------------------------------
# Model


class MdpModel:
    """Finite states (a metric point set), finite actions, costs in (-inf, +inf], kernel q(y | x, a)."""

    def __init__(self, states: MetricPointSet, actions: Sequence[Hashable], cost, kernel):
        self.states = states
        self.actions = tuple(actions)
        S, A = len(states), len(self.actions)
        if A == 0:
            raise InputError("model needs at least one action")
        c = as_ext_array(cost, (S, A), "cost")
        q = as_ext_array(kernel, (S, A, S), "kernel")
        if (c == -INF).any():
            raise InputError("cost takes the value -inf")
        if not np.isfinite(q).all() or (q < 0).any():
            x, a = np.argwhere(~np.isfinite(q).all(axis=2) | (q < 0).any(axis=2))[0]
            raise InputError(f"kernel row ({states.points[x]!r}, {self.actions[a]!r}) has negative or non-finite entries")
        sums = q.sum(axis=2)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            x, a = np.argwhere(bad)[0]
            raise InputError(f"kernel row ({states.points[x]!r}, {self.actions[a]!r}) sums to {float(sums[x, a])!r}, not 1")
        no_action = ~np.isfinite(c).any(axis=1)
        if no_action.any():
            x = int(np.flatnonzero(no_action)[0])
            raise InputError(f"state {states.points[x]!r} has no action of finite cost")
        for arr in (c, q):
            arr.setflags(write=False)
        self.cost = c
        self.kernel = q

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def q_values(self, u: np.ndarray, alpha: float = 1.0) -> np.ndarray:
        """c(x, a) + alpha * sum_y q(y | x, a) u(y), with +inf cost kept as +inf."""
        return self.cost + alpha * (self.kernel @ u)

    def policy_rows(self, policy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.n_states)
        return self.cost[idx, policy], self.kernel[idx, policy]


def check_policy(model: MdpModel, policy) -> np.ndarray:
    p = np.asarray(policy, dtype=np.intp)
    if p.shape != (model.n_states,) or (p < 0).any() or (p >= model.n_actions).any():
        raise InputError("policy must choose one valid action index per state")
    return p


# ---------------------------------------------------------------------------
# Discounted value iteration


@njit(cache=True)
def _iterate(c, P, S, A, alpha, thr, maxit):
    # c: (S*A,), P: (S*A, S); +inf costs propagate through the min.
    v = np.zeros(S)
    vn = np.empty(S)
    for k in range(maxit):
        for x in range(S):
            best = np.inf
            for a in range(A):
                r = x * A + a
                if c[r] == np.inf:
                    continue
                s = 0.0
                for y in range(S):
                    s += P[r, y] * v[y]
                qv = c[r] + alpha * s
                if qv < best:
                    best = qv
            vn[x] = best
        d = 0.0
        for x in range(S):
            dd = abs(vn[x] - v[x])
            if dd > d:
                d = dd
            v[x] = vn[x]
        if d <= thr:
            return v, k + 1
    return v, -1


def _threshold(alpha: float, eps: float) -> float:
    return INF if alpha == 0 else eps * (1.0 - alpha) / (2.0 * alpha)


def greedy_policy(model: MdpModel, v: np.ndarray, alpha: float) -> np.ndarray:
    """argmin_a [c + alpha q v], lowest action index on ties."""
    return np.argmin(model.q_values(v, alpha), axis=1)


def discounted_value_iteration(model: MdpModel, alpha: float, eps: float = 1e-6, return_iterations: bool = False):
    """Successive approximation from v_0 = 0 until ||v_{k+1} - v_k|| <= eps (1 - alpha) / (2 alpha).

    The returned v is within eps/2 of the discounted value in sup norm.
    """
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise InputError("discount factor must lie in [0, 1)")
    if not eps > 0:
        raise InputError("eps must be positive")
    S, A = model.n_states, model.n_actions
    c = np.ascontiguousarray(model.cost.reshape(S * A))
    P = np.ascontiguousarray(model.kernel.reshape(S * A, S))
    cmax = float(np.abs(c[np.isfinite(c)]).max())
    thr = _threshold(alpha, eps)
    if alpha == 0.0:
        maxit = 1
    else:
        # ||v_{k+1} - v_k|| <= alpha^k ||c||: generous cap on the iteration count.
        maxit = int(math.log(max(thr, 1e-300) / max(cmax, 1e-300)) / math.log(alpha)) + 10 if cmax > 0 else 2
        maxit = max(maxit, 2)
    v, its = _iterate(c, P, S, A, alpha, thr, maxit)
    if its < 0:
        raise RuntimeError("value iteration did not meet its stopping rule")
    v = np.array(v)
    pol = greedy_policy(model, v, alpha)
    if return_iterations:
        return v, pol, its
    return v, pol


def relative_quantities(v) -> tuple[float, np.ndarray]:
    """m = min_x v(x) and u = v - m >= 0."""
    arr = as_ext_array(v, what="value function")
    finite = arr[np.isfinite(arr)]
    if len(finite) == 0:
        raise InputError("value function is nowhere finite")
    m = float(arr.min())
    return m, arr - m


@dataclass(frozen=True)
class DiscountSweep:
    alphas: tuple[float, ...]
    values: np.ndarray
    m: np.ndarray
    u: np.ndarray
    policies: np.ndarray
    iterations: tuple[int, ...]
    w_lower: float
    w_upper: float
    eps: float

    @property
    def scaled_values(self) -> np.ndarray:
        """(1 - alpha) v_alpha(x) per alpha and state."""
        return (1.0 - np.asarray(self.alphas))[:, None] * self.values

    @property
    def scaled_minima(self) -> np.ndarray:
        return (1.0 - np.asarray(self.alphas)) * self.m

    def quarter(self) -> slice:
        n = len(self.alphas)
        return slice(n - max(1, n // 4), n)


def check_alphas(alphas) -> tuple[float, ...]:
    a = tuple(float(x) for x in (DEFAULT_ALPHAS if alphas is None else alphas))
    if not a:
        raise InputError("empty discount schedule")
    if any(not (0.0 <= x < 1.0) for x in a):
        raise InputError("discount factors must lie in [0, 1)")
    if any(b <= x for x, b in zip(a, a[1:])):
        raise InputError("discount factors must be ascending")
    return a


def vanishing_discount_sweep(model: MdpModel, alphas=None, eps: float = 1e-6) -> DiscountSweep:
    a = check_alphas(alphas)
    vals, pols, its = [], [], []
    for alpha in a:
        v, p, k = discounted_value_iteration(model, alpha, eps, return_iterations=True)
        vals.append(v)
        pols.append(p)
        its.append(k)
    V = np.vstack(vals)
    m = V.min(axis=1)
    U = V - m[:, None]
    scaled = (1.0 - np.asarray(a)) * m
    n = len(a)
    tail = scaled[n - max(1, n // 4):]
    return DiscountSweep(a, V, m, U, np.vstack(pols), tuple(its), float(tail.min()), float(tail.max()), eps)


# ---------------------------------------------------------------------------
# Relative value limits and optimality residuals


@dataclass(frozen=True)
class RelativeValueLimit:
    u: np.ndarray
    mode: str
    lsec: bool | None
    modes_agree: bool | None


def _u_family(sweep: DiscountSweep, model: MdpModel) -> FunctionFamily:
    return FunctionFamily(model.states, sweep.u, name="u_alpha")


def limit_relative_value(sweep: DiscountSweep, model: MdpModel, mode: str = "pointwise", radii=None, eps_schedule=None, tol: float = 1e-9) -> RelativeValueLimit:
    """Pointwise mode: tail minimum of u_{alpha_n}(x). Double mode: double lower limit over (n, y -> x).

    When the u family is lower semi-equicontinuous both modes are compared.
    """
    if mode not in ("pointwise", "double"):
        raise InputError(f"unknown mode {mode!r}")
    U = sweep.u
    pointwise = U[tail_start(len(U)) - 1:].min(axis=0)
    if len(U) < 8:
        if mode == "double":
            raise InputError("double mode needs at least 8 discount factors")
        return RelativeValueLimit(pointwise, mode, None, None)
    fam = _u_family(sweep, model)
    r = check_radii(dyadic_radii() if radii is None else radii)
    double = sc.double_lower_limits(fam, r)
    lsec = sc.lsec_check(fam, eps_schedule, r).passed
    res = max(tol, min(dyadic_eps() if eps_schedule is None else eps_schedule))
    agree = bool(np.all([(a == b) or abs(a - b) <= res for a, b in zip(pointwise, double)])) if lsec else None
    return RelativeValueLimit(pointwise if mode == "pointwise" else double, mode, lsec, agree)


def acoi_residual(model: MdpModel, u, w: float, policy) -> np.ndarray:
    """[c(x, phi(x)) + sum_y q(y | x, phi(x)) u(y)] - [w + u(x)] per state."""
    uu = as_ext_array(u, (model.n_states,), "u")
    p = check_policy(model, policy)
    c, P = model.policy_rows(p)
    return c + P @ uu - (w + uu)


def acoe_residual(model: MdpModel, u, w: float) -> tuple[np.ndarray, np.ndarray]:
    """|w + u(x) - min_a [c(x, a) + sum_y q(y | x, a) u(y)]| per state, and the argmin policy."""
    uu = as_ext_array(u, (model.n_states,), "u")
    Q = model.q_values(uu)
    pol = np.argmin(Q, axis=1)
    best = Q[np.arange(model.n_states), pol]
    return np.abs(w + uu - best), pol


def discount_inequality_residual(sweep: DiscountSweep, model: MdpModel) -> float:
    """max over (n, x, a) of (1 - alpha_n) m_n + u_n(x) - c(x, a) - sum_y q(y | x, a) u_n(y)."""
    worst = -INF
    for alpha, m, u in zip(sweep.alphas, sweep.m, sweep.u):
        rhs = model.q_values(u)
        lhs = (1.0 - alpha) * m + u
        diff = lhs[:, None] - rhs
        worst = max(worst, float(diff[np.isfinite(rhs)].max()))
    return worst


def policy_average_cost(model: MdpModel, policy, tol: float = 1e-13, max_squarings: int = 80) -> np.ndarray:
    """Long-run average cost of a stationary policy from each state.

    The Cesaro limit of the kernel powers equals the limit of powers of the
    aperiodic chain (I + P) / 2, which repeated squaring reaches geometrically.
    """
    p = check_policy(model, policy)
    c, P = model.policy_rows(p)
    M = 0.5 * (np.eye(model.n_states) + P)
    for _ in range(max_squarings):
        M2 = M @ M
        if np.abs(M2 - M).max() <= tol:
            M = M2
            break
        M = M2
    else:
        raise RuntimeError("Cesaro limit did not settle")
    M[M < 1e-15] = 0.0
    terms = np.zeros_like(M)
    np.multiply(M, c[None, :], out=terms, where=M > 0)
    return terms.sum(axis=1)


@dataclass(frozen=True)
class OracleSolution:
    w_star: float
    u: np.ndarray
    policy: np.ndarray
    max_gap: float


def _evaluate(model: MdpModel, policy: np.ndarray) -> tuple[float, np.ndarray]:
    """Gain and bias with u(0) = 0 from w + u(x) - sum_y q u(y) = c(x)."""
    S = model.n_states
    c, P = model.policy_rows(policy)
    if not np.isfinite(c).all():
        raise InputError("policy selects an action of infinite cost")
    Amat = np.eye(S) - P
    Amat[:, 0] = 1.0
    try:
        z = np.linalg.solve(Amat, c)
    except np.linalg.LinAlgError:
        raise NonUnichainError("policy evaluation is singular: the model is not unichain; change the model") from None
    if np.linalg.cond(Amat) > 1e12 or not np.isfinite(z).all():
        raise NonUnichainError("policy evaluation is ill-conditioned: the model is not unichain; change the model")
    u = z.copy()
    u[0] = 0.0
    return float(z[0]), u


def average_cost_oracle(model: MdpModel, tol: float = 1e-8, max_iter: int = 1000) -> OracleSolution:
    """Policy iteration with relative-value evaluation, certified by the ACOE residual."""
    S = model.n_states
    idx = np.arange(S)
    pol = np.argmin(model.cost, axis=1)
    for _ in range(max_iter):
        w, u = _evaluate(model, pol)
        Q = model.q_values(u)
        best = Q.min(axis=1)
        cur = Q[idx, pol]
        slack = 1e-12 * (1.0 + np.abs(best))
        improve = cur > best + slack
        if not improve.any():
            break
        pol = np.where(improve, np.argmin(Q, axis=1), pol)
    else:
        raise RuntimeError("policy iteration did not terminate")
    gaps, _ = acoe_residual(model, u, w)
    gmax = float(gaps.max())
    if gmax > tol:
        raise RuntimeError(f"oracle failed its ACOE certificate: max gap {gmax!r}")
    return OracleSolution(w, u, pol, gmax)


# ---------------------------------------------------------------------------
# Assumption checks


def assumption_B_check(sweep: DiscountSweep, w_star: float | None = None, tol: float = 1e-9) -> Verdict:
    """(i) a finite average-cost value; (ii) sup over alpha of u_alpha(x) finite.

    A finite schedule cannot show unboundedness directly; a per-state bound
    that grows by more than a factor 2 across the last quarter of the
    schedule (a 1/(1 - alpha) rate) is read as unbounded.
    """
    w = sweep.w_upper if w_star is None else float(w_star)
    finite_w = math.isfinite(w)
    U = sweep.u
    q = sweep.quarter()
    start = U[q.start]
    tail_max = U[q].max(axis=0)
    growth = np.where(tail_max > tol, tail_max / np.maximum(start, tol), 1.0)
    bounded = np.isfinite(U).all(axis=0) & (growth <= 2.0)
    bound = U.max(axis=0)
    hyps = {"average_cost_finite": finite_w, "relative_values_bounded": bool(bounded.all())}
    return Verdict(
        "assumption_B",
        PASS if all(hyps.values()) else FAIL,
        quantities={"w_estimate": w, "max_bound": float(bound.max()), "max_growth": float(growth.max())},
        hypothesis_report=hyps,
        horizon=len(sweep.alphas),
        tolerance=tol,
        details={"per_state_bound": [float(x) for x in bound], "per_state_growth": [float(x) for x in growth]},
    )


def _kernel_aui(model: MdpModel, U: np.ndarray, K: float) -> np.ndarray:
    """max over the tail of sum_y q(y | x, a) u_n(y) 1{u_n(y) >= K}, per (x, a)."""
    tail = U[tail_start(len(U)) - 1:]
    masked = np.where(tail >= K, tail, 0.0)
    P = model.kernel.reshape(-1, model.n_states)
    return (P @ masked.T).max(axis=1)


def assumption_LEC_check(sweep: DiscountSweep, model: MdpModel, radii=None, eps_schedule=None, tol: float = 1e-9, K: float = 2.0 ** 20) -> Verdict:
    """(i) lower semi-equicontinuity of u_{alpha_n}; (ii) convergence of u_{alpha_n}(x); (iii) a.u.i. under each q(. | x, a)."""
    fam = _u_family(sweep, model)
    lsec = sc.lsec_check(fam, eps_schedule, radii)
    osc = sc.tail_oscillation(sweep.u)
    aui = _kernel_aui(model, sweep.u, K)
    parts = [
        Verdict("LEC_i", lsec.status, quantities=lsec.quantities, horizon=fam.n_max, details=lsec.details),
        Verdict("LEC_ii", PASS if (osc <= tol).all() else FAIL, quantities={"max_oscillation": float(osc.max())}, horizon=fam.n_max, tolerance=tol),
        Verdict("LEC_iii", PASS if (aui <= tol).all() else FAIL, quantities={"max_tail_integral": float(aui.max()), "K": K}, horizon=fam.n_max, tolerance=tol),
    ]
    hyps = {p.check_id: p.passed for p in parts}
    return Verdict("assumption_LEC", PASS if all(hyps.values()) else FAIL, hypothesis_report=hyps, horizon=fam.n_max, tolerance=tol, children=parts)


def assumption_EC_check(sweep: DiscountSweep, model: MdpModel, radii=None, eps_schedule=None) -> Verdict:
    """(i) equicontinuity of u_{alpha_n} (lower and upper semi-equicontinuity); (ii) an integrable dominating bound."""
    fam = _u_family(sweep, model)
    lo = sc.lsec_check(fam, eps_schedule, radii)
    hi = sc.usec_check(fam, eps_schedule, radii)
    U = sweep.u.max(axis=0)
    dominated = bool(np.isfinite(model.kernel.reshape(-1, model.n_states) @ U).all())
    hyps = {"lower_semi_equicontinuous": lo.passed, "upper_semi_equicontinuous": hi.passed, "dominated": dominated}
    return Verdict(
        "assumption_EC",
        PASS if all(hyps.values()) else FAIL,
        quantities={"lsec_failing_points": lo.quantities["failing_points"], "usec_failing_points": hi.quantities["failing_points"]},
        hypothesis_report=hyps,
        horizon=fam.n_max,
        details={"usec_witnesses": hi.details["witnesses"]},
    )


def average_cost_chain_check(sweep: DiscountSweep, model: MdpModel, w_star: float, policy, tol: float = 1e-3) -> Verdict:
    """(1 - alpha) v_alpha(x) converges to a common value equal to w_lower, w_upper, w* and the policy's average cost."""
    traj = sweep.scaled_values[sweep.quarter()]
    spread = float((traj.max(axis=0) - traj.min(axis=0)).max())
    final = traj[-1]
    w_phi = policy_average_cost(model, policy)
    diffs = {
        "trajectory_spread": spread,
        "trajectory_vs_w_star": float(np.abs(final - w_star).max()),
        "w_lower_vs_w_star": abs(sweep.w_lower - w_star),
        "w_upper_vs_w_star": abs(sweep.w_upper - w_star),
        "policy_cost_vs_w_star": float(np.abs(w_phi - w_star).max()),
    }
    ok = all(d <= tol for d in diffs.values())
    q = {"w_star": float(w_star), "w_lower": sweep.w_lower, "w_upper": sweep.w_upper, **diffs}
    return Verdict("average_cost_chain", PASS if ok else FAIL, quantities=q, horizon=len(sweep.alphas), tolerance=tol)


def random_unichain_model(rng: np.random.Generator, n_states: int, n_actions: int, reset: float = 0.25, inf_prob: float = 0.1) -> MdpModel:
    """Random model whose every kernel row puts mass >= reset on state 0.

    State 0 is then reached from anywhere under any stationary policy, so
    every policy has a single recurrent class.
    """
    S, A = n_states, n_actions
    q = rng.dirichlet(np.ones(S), size=(S, A)) * (1.0 - reset)
    q[:, :, 0] += reset
    q /= q.sum(axis=2, keepdims=True)
    c = rng.random((S, A))
    c[rng.random((S, A)) < inf_prob] = INF
    for x in range(S):
        if not np.isfinite(c[x]).any():
            c[x, int(rng.integers(A))] = rng.random()
    return MdpModel(MetricPointSet.euclidean(np.arange(S, dtype=float)), [f"a{k}" for k in range(A)], c, q)


# ---------------------------------------------------------------------------
# Model files


def tagged_space(states: Sequence[tuple[float, str]]) -> MetricPointSet:
    """Points (x, tag) with d = |x - y| + eta 1{tags differ}, eta half the smallest coordinate gap."""
    pts = tuple((float(x), str(t)) for x, t in states)
    xs = np.array([p[0] for p in pts])
    tags = np.array([p[1] for p in pts])
    uniq = np.unique(xs)
    eta = 0.5 * float(np.diff(uniq).min()) if len(uniq) > 1 else 0.5
    D = np.abs(xs[:, None] - xs[None, :]) + eta * (tags[:, None] != tags[None, :])
    return MetricPointSet.from_matrix(pts, D, coords=xs, kind="tagged")


def _space_from_doc(metric: str, states: list) -> MetricPointSet:
    if metric == "euclidean":
        arr = np.array(states, dtype=float)
        return MetricPointSet.euclidean(arr)
    if metric == "discrete":
        return MetricPointSet.discrete([tuple(s) if isinstance(s, list) else s for s in states])
    if metric == "tagged":
        if not all(isinstance(s, list) and len(s) == 2 for s in states):
            raise InputError("tagged states must be [x, tag] pairs")
        return tagged_space([(s[0], s[1]) for s in states])
    raise InputError(f"unknown metric {metric!r}")


def model_from_dict(doc: dict) -> MdpModel:
    for key in ("states", "metric", "actions", "cost", "kernel"):
        if key not in doc:
            raise InputError(f"model document lacks {key!r}")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {version!r}")
    space = _space_from_doc(doc["metric"], doc["states"])
    try:
        cost = [[ext_real(x) for x in row] for row in doc["cost"]]
    except TypeError:
        raise InputError("cost must be a 2-D array") from None
    return MdpModel(space, doc["actions"], cost, doc["kernel"])


def load_model(path: str | Path) -> MdpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("model file must hold a JSON object")
    return model_from_dict(doc)


def model_to_dict(model: MdpModel) -> dict:
    kind = model.states.kind
    if kind == "tagged":
        states = [[x, t] for x, t in model.states.points]
    else:
        states = [list(p) if isinstance(p, tuple) else p for p in model.states.points]
    cost = [["inf" if math.isinf(x) else float(x) for x in row] for row in model.cost]
    return {
        "schema_version": SCHEMA_VERSION,
        "states": states,
        "metric": kind if kind in ("euclidean", "discrete", "tagged") else "discrete",
        "actions": list(model.actions),
        "cost": cost,
        "kernel": model.kernel.tolist(),
    }


def dump_model(model: MdpModel) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":")) + "\n"
