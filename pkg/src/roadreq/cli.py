"""Command-line entry point: ``roadreq <command> [options]``.

Exit codes: 0 success, 1 semantic failure (violations, redundancy,
infeasible corrections), 2 input error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import multiprocessing
import os
import sys
import time
from typing import Callable, Iterable, Iterator, TextIO

import numpy as np

from . import admissibility, fuzzy, maxsat, sat
from .io import InputError, read_ap, read_boxes, write_sweep_csv, sweep_to_json
from .requirements import RequirementsError, RequirementSet, export_dimacs, load_requirements, parse_dimacs, stats

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

FORMATS_HELP = """\
file formats:
  requirements  one clause per line, e.g. '{Ped, not PushObj}'; items are label
                abbreviations optionally prefixed by 'not'; '#' starts a comment.
                Files ending in .cnf/.dimacs are read as DIMACS CNF instead.
  predictions   JSON Lines, one box per line:
                {"id": "b1", "scores": [41 reals in [0,1]], "gt": [41 booleans]}
                ('gt' is only needed by 'validate').
  AP file       JSON array of 41 reals in [0,1], in canonical label order.

environment:
  ROADREQ_THREADS  maximum worker processes for 'correct' and 'loss' (default 1).
"""


# --- helpers ----------------------------------------------------------------


def _requirements(path: str | None) -> RequirementSet:
    if path and path.endswith((".cnf", ".dimacs")):
        with open(path, encoding="utf-8") as fh:
            return parse_dimacs(fh.read())
    return load_requirements(path)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ROADREQ_THREADS", "1")))
    except ValueError:
        return 1


_WORKER_STATE: dict = {}


def _init_worker(fn, args):
    _WORKER_STATE["fn"] = fn
    _WORKER_STATE["args"] = args


def _call_worker(item):
    return _WORKER_STATE["fn"](item, *_WORKER_STATE["args"])


def _ordered_map(fn: Callable, items: Iterable, args: tuple) -> Iterator:
    """Map preserving input order, over a process pool when ROADREQ_THREADS > 1."""
    threads = _threads()
    if threads == 1:
        for item in items:
            yield fn(item, *args)
        return
    with multiprocessing.Pool(threads, initializer=_init_worker, initargs=(fn, args)) as pool:
        yield from pool.imap(_call_worker, items, chunksize=64)


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _parse_thetas(text: str) -> list[float]:
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty threshold list")
    return vals


def _theta(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold {v} outside [0, 1]")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{v} is not positive")
    return v


# --- commands -----------------------------------------------------------------


def cmd_stats(args) -> int:
    rs = _requirements(args.requirements)
    st = stats(rs)
    with _output(args.output) as out:
        if args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["length", "count", "avg_negative", "avg_positive"])
            for b in st.histogram:
                w.writerow([b.length, b.count, repr(b.avg_negative), repr(b.avg_positive)])
            w.writerow(["total", st.n_clauses, repr(st.avg_negative), repr(st.avg_positive)])
        else:
            out.write(json.dumps(st.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    rs = _requirements(args.requirements)
    n_bad = 0
    n = 0
    for box in read_boxes(args.predictions, rs.n_labels):
        n += 1
        if box.gt is None:
            print(f"error: box {box.id!r} has no 'gt' field", file=sys.stderr)
            return EXIT_INPUT
        report = admissibility.check(rs, box.gt)
        if not report.is_admissible:
            n_bad += 1
            cited = "; ".join(f"#{j} {rs[j].format(rs.label_table)}" for j in report.violated)
            print(f"{box.id}: violates {cited}")
    print(f"{n - n_bad}/{n} ground truths admissible", file=sys.stderr)
    return EXIT_FAIL if n_bad else EXIT_OK


def cmd_metrics(args) -> int:
    rs = _requirements(args.requirements)
    thetas = args.thetas if args.thetas else ([args.theta] if args.theta is not None else list(admissibility.DEFAULT_THETAS))
    svs = (box.sv for box in read_boxes(args.predictions, rs.n_labels))
    rows = admissibility.metrics_sweep(rs, svs, thetas)
    with _output(args.output) as out:
        if args.format == "csv":
            write_sweep_csv(rows, out)
        else:
            out.write(sweep_to_json(rows) + "\n")
    return EXIT_OK


def _correct_one(sv, rs, theta, policy, ap, epsilon):
    t0 = time.perf_counter()
    try:
        r = maxsat.correct_item(rs, sv, theta, policy, ap, epsilon)
    except maxsat.Infeasible as exc:
        r = exc
    return sv.id, r, time.perf_counter() - t0


def cmd_correct(args) -> int:
    rs = _requirements(args.requirements)
    policy = maxsat.CorrectionPolicy(args.policy)
    ap = read_ap(args.ap, rs.n_labels) if args.ap else None
    if policy is not maxsat.CorrectionPolicy.MD and ap is None:
        print(f"error: policy {policy.value} requires --ap", file=sys.stderr)
        return EXIT_INPUT
    svs = (box.sv for box in read_boxes(args.predictions, rs.n_labels))
    n = n_corrected = n_infeasible = flips = 0
    costs: list[float] = []
    times: list[float] = []
    summary_stream = sys.stdout if args.output else sys.stderr
    with _output(args.output) as out:
        for box_id, r, dt in _ordered_map(_correct_one, svs, (rs, args.theta, policy, ap, args.epsilon)):
            n += 1
            times.append(dt)
            if isinstance(r, maxsat.Infeasible):
                n_infeasible += 1
                out.write(json.dumps({"id": box_id, "error": str(r)}) + "\n")
                continue
            costs.append(r.cost)
            flips += len(r.flipped)
            n_corrected += bool(r.flipped)
            out.write(json.dumps(r.to_dict()) + "\n")
    summary = {
        "n_items": n,
        "n_corrected": n_corrected,
        "n_infeasible": n_infeasible,
        "mean_cost": float(np.mean(costs)) if costs else 0.0,
        "mean_flips": flips / len(costs) if costs else 0.0,
        "mean_seconds_per_box": float(np.mean(times)) if times else 0.0,
        "median_seconds_per_box": float(np.median(times)) if times else 0.0,
    }
    summary_stream.write(json.dumps(summary) + "\n")
    return EXIT_FAIL if n_infeasible else EXIT_OK


def cmd_count(args) -> int:
    rs = _requirements(args.requirements)
    t0 = time.perf_counter()
    count = sat.count_models(rs)
    elapsed = time.perf_counter() - t0
    with _output(args.output) as out:
        out.write(f"{count}\n")
    print(f"elapsed {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def cmd_check_redundant(args) -> int:
    rs = _requirements(args.requirements)
    redundant = sat.find_redundant(rs)
    with _output(args.output) as out:
        for j in redundant:
            out.write(f"{j}\t{rs[j].format(rs.label_table)}\n")
    print(f"{len(redundant)} redundant clause(s) of {len(rs)}", file=sys.stderr)
    return EXIT_FAIL if redundant else EXIT_OK


def _loss_one(sv, rs, cfg):
    return sv, fuzzy.loss(rs, sv, cfg)


def cmd_loss(args) -> int:
    rs = _requirements(args.requirements)
    cfg = fuzzy.LossConfig(args.tnorm, args.alpha, log_space=args.log_space, reduction=args.reduction)
    svs = (box.sv for box in read_boxes(args.predictions, rs.n_labels))
    n = 0
    total = 0.0
    grad = np.zeros(rs.n_labels)
    max_disc = 0.0
    summary_stream = sys.stdout if args.output else sys.stderr
    with _output(args.output) as out:
        for sv, r in _ordered_map(_loss_one, svs, (rs, cfg)):
            n += 1
            total += r.total
            grad += r.gradient
            out.write(json.dumps(r.to_dict()) + "\n")
            if args.grad_check:
                fd = fuzzy.finite_difference_gradient(rs, sv, cfg, h=args.fd_step)
                max_disc = max(max_disc, float(np.max(np.abs(fd - r.gradient))))
    if n == 0:
        print("error: empty corpus", file=sys.stderr)
        return EXIT_INPUT
    if cfg.reduction == "mean":
        total, grad = total / n, grad / n
    summary = {"n_items": n, "tnorm": cfg.tnorm.value, "alpha": cfg.alpha, "reduction": cfg.reduction,
               "loss": total, "grad": grad.tolist()}
    if args.grad_check:
        summary["max_grad_discrepancy"] = max_disc
    summary_stream.write(json.dumps(summary) + "\n")
    return EXIT_OK


def cmd_export_dimacs(args) -> int:
    rs = _requirements(args.requirements)
    with _output(args.output) as out:
        out.write(export_dimacs(rs))
    return EXIT_OK


def cmd_export_wcnf(args) -> int:
    rs = _requirements(args.requirements)
    policy = maxsat.CorrectionPolicy(args.policy)
    ap = read_ap(args.ap, rs.n_labels) if args.ap else None
    for k, box in enumerate(read_boxes(args.predictions, rs.n_labels)):
        if (args.id is not None and box.id == args.id) or (args.id is None and k == 0):
            p = admissibility.threshold(box.sv, args.theta)
            w = maxsat.compute_weights(policy, box.sv, ap, args.theta, n_labels=rs.n_labels)
            with _output(args.output) as out:
                out.write(maxsat.export_wcnf(rs, p, w))
            return EXIT_OK
    print("error: box not found", file=sys.stderr)
    return EXIT_INPUT


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadreq",
        description="Constraint checking, correction, counting and fuzzy loss for ROAD-R style requirements.",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help: str, predictions: bool = False, fmt: tuple[str, ...] = ()):
        p = sub.add_parser(name, help=help, epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--requirements", help="requirements file (default: shipped ROAD-R corpus)")
        if predictions:
            p.add_argument("--predictions", required=True, help="predictions JSON Lines file")
        if fmt:
            p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("--output", help="output file (default: stdout)")
        p.set_defaults(func=fn)
        return p

    add("stats", cmd_stats, "requirement set statistics", fmt=("json", "csv"))
    add("validate", cmd_validate, "check that every ground truth is admissible", predictions=True)

    p = add("metrics", cmd_metrics, "violation metrics over a threshold sweep", predictions=True, fmt=("csv", "json"))
    p.add_argument("--theta", type=_theta, help="single threshold")
    p.add_argument("--thetas", type=_parse_thetas, help="comma-separated thresholds (default 0.1,...,0.9)")

    p = add("correct", cmd_correct, "correct predictions by weighted partial MaxSAT", predictions=True)
    p.add_argument("--theta", type=_theta, default=0.5)
    p.add_argument("--policy", choices=[x.value for x in maxsat.CorrectionPolicy], default="md")
    p.add_argument("--ap", help="AP file (required for ap/apo)")
    p.add_argument("--epsilon", type=_positive, default=maxsat.FLIP_EPSILON)

    add("count", cmd_count, "exact number of admissible predictions")
    add("check-redundant", cmd_check_redundant, "list clauses entailed by the others")

    p = add("loss", cmd_loss, "fuzzy constrained loss and gradient", predictions=True)
    p.add_argument("--tnorm", choices=[x.value for x in fuzzy.TNorm], default="product")
    p.add_argument("--alpha", type=_positive, default=1.0)
    p.add_argument("--reduction", choices=("sum", "mean"), default="sum")
    p.add_argument("--log-space", action="store_true", help="product t-norm in log space")
    p.add_argument("--grad-check", action="store_true", help="compare against central finite differences")
    p.add_argument("--fd-step", type=_positive, default=1e-6)

    add("export-dimacs", cmd_export_dimacs, "write requirements as DIMACS CNF")

    p = add("export-wcnf", cmd_export_wcnf, "write one box's correction instance as weighted DIMACS", predictions=True)
    p.add_argument("--id", help="box id (default: first box)")
    p.add_argument("--theta", type=_theta, default=0.5)
    p.add_argument("--policy", choices=[x.value for x in maxsat.CorrectionPolicy], default="md")
    p.add_argument("--ap")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (RequirementsError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except maxsat.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
