"""Command-line runner for protocol experiments and theorem checks.

Exit codes: 0 success (all checks pass), 1 runtime or I/O failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time

import numpy as np

from . import theorems
from .dynamics import EvolutionModel, trial_rng
from .protocol import ExperimentConfig, accumulate_evidence, run_experiment
from .statespace import StateVector
from .unitary import haar_random, unitarity_error

CSV_VERSION = 1
KIND_FLAGS = {
    "definitive": "definitive",
    "partially-definitive": "partially_definitive",
    "branch-discriminating": "branch_discriminating",
}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(command: str, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# superposition-lab {command} csv v{CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _emit(args, data: str, summary: str) -> None:
    """Write ``data`` to --out (or stdout) and the summary alongside."""
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        print(summary)
    else:
        sys.stdout.write(data)
        if args.format == "csv":
            print(summary, file=sys.stderr)
        else:
            print(summary)


def _check_rows_text(rows) -> str:
    return "".join(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (threshold {limit:.0e})\n" for name, value, limit, ok in rows)


# --- protocol -------------------------------------------------------------


def cmd_protocol(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    phase_actual, phase_assumed = args.phase_actual, args.phase_assumed
    if args.degrees:
        phase_actual, phase_assumed = math.radians(phase_actual), math.radians(phase_assumed)
    model = EvolutionModel.unitary_only() if args.model == "rsi" else EvolutionModel.collapse(("spin",))
    try:
        cfg = ExperimentConfig(phase_actual, phase_assumed, args.trials, model, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = run_experiment(cfg, workers=args.workers)
    ledger = accumulate_evidence(records)
    rows = [[r.index, r.outcome.value, r.outcome_probability_rsi, r.outcome_probability_collapse] for r in records]
    if ledger.rsi_rejected:
        verdict = "RSI(phase) rejected: an outcome it forbids was observed"
    elif ledger.collapse_rejected:
        verdict = "collapse rejected: an outcome it forbids was observed"
    else:
        verdict = f"log_bayes_factor={ledger.log_bayes_factor!r} (RSI over collapse)"
    summary = f"yes_count={ledger.yes_count} no_count={ledger.no_count} {verdict}"
    if args.format == "csv":
        data = _csv_text("protocol", ["index", "outcome", "p_rsi", "p_collapse"], rows)
    else:
        data = "".join(f"{i:6d}  {o:3s}  p_rsi={p:.6g}  p_collapse={q:.6g}\n" for i, o, p, q in rows)
    _emit(args, data, summary)
    return 0


# --- theorems -------------------------------------------------------------


def theorem_checks(dim: int, instances: int, seed: int) -> list[tuple[str, float, float, bool]]:
    """Randomized checks of overlap preservation, the linearity relations,
    confined yes-mass, the mixture identity and unitarity."""
    rows = []
    unitary_err = 0.0

    # Overlap preservation.
    rng = trial_rng(seed, 0)
    pairs = []
    for _ in range(instances):
        m = haar_random(dim, rng).matrix
        a = StateVector(m[:, 0])
        b = StateVector(0.5 * m[:, 0] + math.sqrt(0.75) * m[:, 1]) if rng.random() < 0.5 else StateVector(m[:, 1])
        pairs.append((a, b))
    unitaries = [haar_random(dim, rng) for _ in range(10)]
    unitary_err = max(unitary_err, *(unitarity_error(u.matrix) for u in unitaries))
    rep = theorems.check_lemma1(pairs, unitaries)
    rows.append(("overlap preservation", rep.max_deviation, theorems.RELATION_TOL, rep.passed))

    # eta_ij = alpha_i gamma_ij and the yes-mass inequality.
    rng = trial_rng(seed, 1)
    rel_err, ineq, general = 0.0, math.inf, 0.0
    for _ in range(instances):
        inst = theorems.random_instance(dim, rng)
        unitary_err = max(unitary_err, unitarity_error(inst.u.matrix))
        r = theorems.check_linearity_relation(theorems.decompose(inst.u, inst.branches, inst.alpha, inst.partition))
        general = max(general, r.general_error)
        rel_err = max(rel_err, r.branch_error)
        ineq = min(ineq, float(r.yes_mass_margin.min()))
    rows.append(("superposition amplitudes are linear", general, theorems.RELATION_TOL, general < theorems.RELATION_TOL))
    rows.append(("eta_ij = alpha_i gamma_ij", rel_err, theorems.RELATION_TOL, rel_err < theorems.RELATION_TOL))
    rows.append(("no branch gains yes-mass (min margin)", ineq, -theorems.INEQUALITY_SLACK, ineq >= -theorems.INEQUALITY_SLACK))

    # Branch images confined to No leave no Yes in the superposition.
    rng = trial_rng(seed, 2)
    leak = 0.0
    for _ in range(instances):
        inst = theorems.confined_instance(dim, rng)
        unitary_err = max(unitary_err, unitarity_error(inst.u.matrix))
        leak = max(leak, theorems.superposition_yes_mass(inst))
    rows.append(("confined superposition yes-mass", leak, 1e-18, leak < 1e-18))

    # Phase-unknown superposition versus classical mixture.
    rng = trial_rng(seed, 3)
    disc = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, min(dim, 4) + 1))
        alpha = theorems.random_alpha(n, rng)
        protocol = [haar_random(dim, rng) for _ in range(3)]
        inputs = haar_random(dim, rng).matrix[:, :n]
        branches = [StateVector(inputs[:, j]) for j in range(n)]
        rep = theorems.mixture_indistinguishability(alpha, protocol, "sys", int(rng.integers(2, 5)), branches)
        disc = max(disc, rep.max_discrepancy)
    rows.append(("phase average matches mixture", disc, theorems.RELATION_TOL, disc < theorems.RELATION_TOL))

    rows.append(("unitarity of constructed operators", unitary_err, 1e-10, unitary_err < 1e-10))
    return rows


def cmd_theorems(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    if args.instances < 1:
        raise UsageError("--instances must be >= 1")
    start = time.perf_counter()
    rows = theorem_checks(args.dim, args.instances, args.seed)
    elapsed = time.perf_counter() - start
    ok = all(r[3] for r in rows)
    if args.format == "csv":
        data = _csv_text("theorems", ["check", "value", "threshold", "passed"], [list(r) for r in rows])
    else:
        data = _check_rows_text(rows)
    _emit(args, data, f"{'all checks pass' if ok else 'CHECK FAILED'} (dim={args.dim}, instances={args.instances}, {elapsed:.1f}s)")
    return 0 if ok else 1


# --- search ---------------------------------------------------------------


def cmd_search(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    report = theorems.violation_search(KIND_FLAGS[args.kind], args.dim, args.restarts, args.seed, steps=args.steps)
    if args.format == "csv":
        rows = [
            [r.restart, r.n_branches, r.penalized_score, r.residual, r.feasible_score] for r in report.results
        ]
        data = _csv_text("search", ["restart", "n_branches", "penalized_score", "residual", "feasible_score"], rows)
    else:
        data = report.summary() + "\n"
    best = report.best_feasible_score
    _emit(args, data, f"best_feasible_score={_fmt(best) or 'none'} {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


# --- mixture --------------------------------------------------------------


def cmd_mixture(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    if args.phases < 2:
        raise UsageError("--phases must be >= 2")
    rng = trial_rng(args.seed, 0)
    rows = []
    for i in range(args.instances):
        alpha = theorems.random_alpha(args.dim, rng)
        protocol = [haar_random(args.dim, rng) for _ in range(3)]
        rep = theorems.mixture_indistinguishability(alpha, protocol, "sys", args.phases)
        rows.append([i, rep.max_discrepancy, rep.density_discrepancy, rep.passed])
    ok = all(r[3] for r in rows)
    if args.format == "csv":
        data = _csv_text("mixture", ["instance", "max_discrepancy", "density_discrepancy", "passed"], rows)
    else:
        data = "".join(f"{i:4d}  outcome discrepancy {d:.3e}  density discrepancy {e:.3e}\n" for i, d, e, _ in rows)
    _emit(args, data, "phase average indistinguishable from mixture" if ok else "DISCREPANCY FOUND")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superposition-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("protocol", help="run the interference test repeatedly")
    common(p)
    p.add_argument("--model", choices=("rsi", "collapse"), default="rsi")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--phase-actual", type=float, default=0.0)
    p.add_argument("--phase-assumed", type=float, default=0.0)
    p.add_argument("--degrees", action="store_true", help="read both phases in degrees")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("theorems", help="randomized checks of the no-go relations")
    common(p)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--instances", type=int, default=200)
    p.set_defaults(func=cmd_theorems)

    p = sub.add_parser("search", help="search the unitary group for a violating test")
    common(p)
    p.add_argument("--kind", choices=tuple(KIND_FLAGS), default="branch-discriminating")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--steps", type=int, default=30)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("mixture", help="phase-averaged superposition versus classical mixture")
    common(p)
    p.add_argument("--dim", type=int, default=4, help="number of branches")
    p.add_argument("--phases", type=int, default=4, help="phase values per branch")
    p.add_argument("--instances", type=int, default=20)
    p.set_defaults(func=cmd_mixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())
