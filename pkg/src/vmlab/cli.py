"""Command line entry point: fixture verification, randomized suites and MDP solving.

Exit codes: 0 success, 1 mismatch or bug found, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures, mdp, randomized
from .measure import InputError
from .report import SCHEMA_VERSION, dumps, to_csv

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2

ORACLE_TOL = 1e-3


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_alphas(text: str | None):
    if text is None:
        return None
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise InputError(f"cannot parse discount list {text!r}") from None


# ---------------------------------------------------------------------------
# Commands


def cmd_verify(name: str, out: str | None = None, fmt: str = "json") -> int:
    fx = fixtures.build(name)
    rep = fixtures.verify(fx)
    if fmt == "csv":
        rows = [[SCHEMA_VERSION, rep.name, e.key, e.expected, e.measured, e.tol, e.matched] for e in rep.entries]
        text = to_csv(("schema_version", "fixture", "key", "expected", "measured", "tolerance", "matched"), rows)
    else:
        text = dumps(rep.to_dict())
    _emit(text, out)
    for e in rep.entries:
        if not e.matched:
            print(f"mismatch in {rep.name}: {e.key} expected {e.expected!r}, measured {e.measured!r}", file=sys.stderr)
    return EXIT_OK if rep.matched else EXIT_MISMATCH


def cmd_random_suite(seed: int = randomized.DEFAULT_SEED, trials: int = 500, tol: float = randomized.SUITE_TOL, out: str | None = None, fmt: str = "json") -> int:
    if trials < 1:
        raise InputError("trials must be at least 1")
    rep = randomized.run_suite(seed, trials, tol)
    if fmt == "csv":
        text = to_csv(randomized.SUMMARY_COLUMNS, rep.rows())
    else:
        text = dumps(rep.to_dict())
    _emit(text, out)
    return EXIT_OK if rep.bug_count == 0 else EXIT_MISMATCH


def solve_model(model: mdp.MdpModel, alphas=None, oracle: bool = False, tol: float = ORACLE_TOL) -> tuple[dict, bool]:
    """Solution document and whether every requested cross-check agreed."""
    sweep = mdp.vanishing_discount_sweep(model, alphas)
    pointwise = mdp.limit_relative_value(sweep, model, "pointwise")
    double = None
    if len(sweep.alphas) >= 8:
        double = mdp.limit_relative_value(sweep, model, "double")
    w = sweep.w_upper
    ok = True
    doc: dict = {"schema_version": SCHEMA_VERSION, "alphas": list(sweep.alphas), "w_lower": sweep.w_lower, "w_upper": sweep.w_upper}
    sol = None
    if oracle:
        sol = mdp.average_cost_oracle(model)
        w = sol.w_star
    u = pointwise.u
    gaps, pol = mdp.acoe_residual(model, u, w)
    acoi = mdp.acoi_residual(model, u, w, pol)
    verdicts = [mdp.assumption_B_check(sweep, w), mdp.assumption_LEC_check(sweep, model), mdp.average_cost_chain_check(sweep, model, w, pol, tol)]
    doc.update({
        "w_star": w,
        "w_source": "oracle" if oracle else "discounted sweep (upper estimate)",
        "states": [list(p) if isinstance(p, tuple) else p for p in model.states.points],
        "u": [float(x) for x in u],
        "u_double": None if double is None else [float(x) for x in double.u],
        "relative_value_modes_agree": None if double is None else double.modes_agree,
        "policy": [model.actions[a] for a in pol],
        "residuals": {
            "acoe_gap": [float(x) for x in gaps],
            "acoe_max_gap": float(gaps.max()),
            "acoi_residual": [float(x) for x in acoi],
            "acoi_max_residual": float(acoi.max()),
            "discount_inequality": mdp.discount_inequality_residual(sweep, model),
        },
        "assumption_verdicts": [v.to_dict() for v in verdicts],
    })
    if sol is not None:
        agree = {
            "w_upper_vs_oracle": abs(sweep.w_upper - sol.w_star),
            "w_lower_vs_oracle": abs(sweep.w_lower - sol.w_star),
            "oracle_acoe_gap": sol.max_gap,
        }
        doc["oracle"] = {"w_star": sol.w_star, "u": [float(x) for x in sol.u], "policy": [model.actions[a] for a in sol.policy], **agree}
        ok = agree["w_upper_vs_oracle"] <= tol and agree["w_lower_vs_oracle"] <= tol
    return doc, ok


def cmd_solve_mdp(model_path: str, alphas=None, oracle: bool = False, tol: float = ORACLE_TOL, out: str | None = None, fmt: str = "json") -> int:
    model = mdp.load_model(model_path)
    doc, ok = solve_model(model, alphas, oracle, tol)
    if fmt == "csv":
        res = doc["residuals"]
        rows = [
            [SCHEMA_VERSION, json.dumps(s), doc["w_star"], u, a, g, r]
            for s, u, a, g, r in zip(doc["states"], doc["u"], doc["policy"], res["acoe_gap"], res["acoi_residual"])
        ]
        text = to_csv(("schema_version", "state", "w_star", "u", "action", "acoe_gap", "acoi_residual"), rows)
    else:
        text = dumps(doc)
    _emit(text, out)
    if not ok:
        print("average-cost estimate disagrees with the oracle", file=sys.stderr)
    return EXIT_OK if ok else EXIT_MISMATCH


# ---------------------------------------------------------------------------
# Argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report to this file instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json", dest="fmt")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vmlab", description="Limit theorems under varying measures and vanishing-discount MDPs.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="reproduce a fixture's expected values")
    v.add_argument("fixture", help="fixture name (see `vmlab list`)")
    _common(v)

    r = sub.add_parser("random-suite", help="seeded hypothesis-implies-conclusion suite")
    r.add_argument("--seed", type=int, default=randomized.DEFAULT_SEED)
    r.add_argument("--trials", type=int, default=500)
    r.add_argument("--tol", type=float, default=randomized.SUITE_TOL)
    _common(r)

    s = sub.add_parser("solve-mdp", help="vanishing-discount analysis of a model file")
    s.add_argument("model", help="JSON model file")
    s.add_argument("--alphas", help="comma-separated ascending discount factors")
    s.add_argument("--oracle", action="store_true", help="cross-check against policy iteration")
    s.add_argument("--tol", type=float, default=ORACLE_TOL)
    _common(s)

    sub.add_parser("list", help="list fixture names")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.fixture, args.out, args.fmt)
        if args.command == "random-suite":
            if args.seed < 0:
                raise InputError("seed must be nonnegative")
            return cmd_random_suite(args.seed, args.trials, args.tol, args.out, args.fmt)
        if args.command == "solve-mdp":
            return cmd_solve_mdp(args.model, _parse_alphas(args.alphas), args.oracle, args.tol, args.out, args.fmt)
        if args.command == "list":
            for name in fixtures.fixture_names():
                print(name)
            return EXIT_OK
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
