"""Command line entry point.

Exit codes: 0 success, 1 check failure, 2 input error, 3 model mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import io as kio
from .capacity import ConvergenceError, blahut_arimoto, closed_form_capacity
from .entropy_channel import ChannelError, ChannelMatrix, classify_channel
from .labelbits import (
    ClassHierarchy,
    PatternMismatchError,
    analyze_confusion,
    format_table,
    mhist_table,
    report_row,
    skd_information_gain,
)

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2, 3


class InputError(Exception):
    pass


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{float(x):.6f}" for x in v) + "]"


def _formats(args, default):
    if not args.format:
        return set(default)
    return {f.strip() for f in args.format.split(",") if f.strip()}


def _load_matrix(path, renormalize):
    try:
        return ChannelMatrix.load(path, renormalize=renormalize)
    except (OSError, ValueError) as e:
        raise InputError(f"{path}: {e}") from e


# --- capacity ---------------------------------------------------------------


def cmd_capacity(args) -> int:
    m = _load_matrix(args.matrix, args.renormalize)
    kind = classify_channel(m, args.tol)
    closed = closed_form_capacity(m, kind)
    try:
        it = blahut_arimoto(m, tol=args.ba_tol, max_iter=args.max_iter)
    except ConvergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK
    out = {
        "kind": kind.tag.value,
        "parameters": kind.params,
        "iterative_capacity": it.capacity,
        "iterative_optimal_input": it.optimal_input.tolist(),
        "iterations": it.iterations,
    }
    if closed is not None:
        out["closed_form_capacity"] = closed.capacity
        out["closed_form_optimal_input"] = closed.optimal_input.tolist()
        out["discrepancy"] = abs(closed.capacity - it.capacity)
    fmts = _formats(args, {"text"})
    if "json" in fmts:
        print(kio.dumps(out), end="")
    if "text" in fmts:
        print(f"channel kind:          {kind}")
        if closed is not None:
            print(f"closed-form capacity:  {closed.capacity:.6f} bits")
            print(f"closed-form input:     {_fmt_vec(closed.optimal_input)}")
        print(f"iterative capacity:    {it.capacity:.6f} bits ({it.iterations} iterations)")
        print(f"iterative input:       {_fmt_vec(it.optimal_input)}")
        if closed is not None:
            print(f"discrepancy:           {out['discrepancy']:.6f}")
        print(f"method:                {'closed-form ' + kind.tag.value if closed is not None else 'iterative'}")
    return EXIT_OK


# --- labelbits --------------------------------------------------------------


def _parse_subclass_args(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--subclass-matrix expects CLASS=PATH, got {item!r}")
        cid, path = item.split("=", 1)
        out[cid] = path
    return out


def cmd_labelbits(args) -> int:
    try:
        hierarchy = ClassHierarchy.from_json(Path(args.hierarchy).read_text())
    except (OSError, ValueError, KeyError) as e:
        raise InputError(f"{args.hierarchy}: {e}") from e
    class_m = _load_matrix(args.class_matrix, args.renormalize)
    paths = _parse_subclass_args(args.subclass_matrix)
    unknown = set(paths) - set(hierarchy.class_ids)
    if unknown:
        raise InputError(f"subclass matrices given for unknown classes: {sorted(unknown)}")
    subs = {cid: _load_matrix(p, args.renormalize) for cid, p in paths.items()}
    try:
        full = analyze_confusion(class_m, subs, hierarchy, tol=args.tol, project=args.project)
        base_m = _load_matrix(args.class_only_matrix, args.renormalize) if args.class_only_matrix else class_m
        class_only = analyze_confusion(base_m, [], hierarchy.collapsed(), tol=args.tol, project=args.project)
    except PatternMismatchError as e:
        print(f"error: {e} (--project to proceed)", file=sys.stderr)
        return EXIT_MISMATCH
    except ValueError as e:
        raise InputError(str(e)) from e
    gain = skd_information_gain(full, class_only)
    text = format_table([report_row("subclass", full), report_row("class only", class_only)])
    text += f"information gain from subclasses: {gain:.6f} bits/sample\n"
    text += f"bound tight (class frequencies match optimal input): {'yes' if full.bound_tight else 'no'}\n"
    for note in full.notes:
        text += f"note: {note}\n"
    payload = {"report": full.to_dict(), "class_only": class_only.to_dict(), "information_gain": gain}
    fmts = _formats(args, {"text", "json"})
    if args.out_dir:
        out = Path(args.out_dir)
        if "json" in fmts:
            kio.write_atomic(out / "labelbits.json", kio.dumps(payload))
        if "text" in fmts:
            kio.write_atomic(out / "labelbits.txt", text)
    if "text" in fmts:
        print(text, end="")
    elif "json" in fmts and not args.out_dir:
        print(kio.dumps(payload), end="")
    return EXIT_OK


def cmd_reference(args) -> int:
    print(mhist_table(), end="")
    return EXIT_OK


# --- simulate ---------------------------------------------------------------


def _load_config(args):
    from .distill.training import ConfigError, DistillConfig

    try:
        d = json.loads(Path(args.config).read_text()) if args.config else {}
    except (OSError, ValueError) as e:
        raise InputError(f"{args.config}: {e}") from e
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        d["runs"] = args.runs
    try:
        return DistillConfig.from_dict(d)
    except ConfigError as e:
        raise InputError(f"invalid config field {e}") from e
    except TypeError as e:
        raise InputError(f"config: {e}") from e


def cmd_simulate(args) -> int:
    from .distill.experiment import ARMS, run_experiment
    from .synthdata import SyntheticSpec, benchmark_spec, degenerate_spec

    cfg = _load_config(args)
    if args.spec in (None, "benchmark"):
        spec = benchmark_spec()
    elif args.spec == "degenerate":
        spec = degenerate_spec()
    else:
        try:
            spec = SyntheticSpec.from_json(Path(args.spec).read_text())
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise InputError(f"spec {args.spec}: {e}") from e
    report = run_experiment(spec, cfg, workers=args.workers)

    out = Path(args.out_dir)
    fmts = _formats(args, {"json", "csv", "svg", "text"})
    h = spec.hierarchy
    if "json" in fmts:
        kio.write_atomic(out / "report.json", kio.dumps(report))
    for arm in ARMS:
        m = report["mean_class_confusion"][arm]
        if "csv" in fmts:
            kio.write_atomic(out / f"confusion_{arm}.csv", kio.matrix_csv(m))
        if "svg" in fmts:
            kio.write_atomic(out / f"confusion_{arm}.svg", kio.confusion_svg(m, h.class_ids, f"{arm}: class confusion (test)"))
    for arm, m in report["mean_subclass_confusion"].items():
        if "csv" in fmts:
            kio.write_atomic(out / f"subclass_confusion_{arm}.csv", kio.matrix_csv(m))
        if "svg" in fmts:
            kio.write_atomic(
                out / f"subclass_confusion_{arm}.svg",
                kio.confusion_svg(m, h.subclass_ids, f"{arm}: subclass confusion (test)"),
            )
    if "text" in fmts:
        lines = [f"{'arm':<14} {'mean F1':>9} {'std':>9} {'se':>9}"]
        for arm in ARMS:
            s = report["f1"][arm]
            lines.append(f"{arm:<14} {s['mean']:>9.6f} {s['std']:>9.6f} {s['se']:>9.6f}")
        for name, c in report["comparisons"].items():
            lines.append(f"{name:<16} gap {c['gap']:+.6f}  pooled se {c['pooled_se']:.6f}")
        lb = report["labelbits"]
        lines.append(
            f"teacher label bits (best run {lb['best_run']}): {lb['with_subclasses']['total_bits']:.6f}; "
            f"class-only {lb['class_only']['total_bits']:.6f}; gain {lb['information_gain']:.6f}"
        )
        lines.append("significant subclass gain over KD: " + ("yes" if report["subclass_gain_significant"] else "no"))
        text = "\n".join(lines) + "\n"
        kio.write_atomic(out / "summary.txt", text)
        print(text, end="")
    return EXIT_OK


# --- gradcheck --------------------------------------------------------------

GRADCHECK_LIMIT = 1e-5


def cmd_gradcheck(args) -> int:
    from .distill.training import gradient_check_sweep

    cfg = _load_config(args)
    paths = {
        "ce (lambda=1)": (1.0, 1.0),
        "skd (lambda=0, tau=1)": (1.0, 0.0),
        f"skd (lambda=0, tau={cfg.temperature:g})": (cfg.temperature, 0.0),
        f"mixed (lambda={cfg.task_balance:g}, tau={cfg.temperature:g})": (cfg.temperature, cfg.task_balance),
    }
    if cfg.temperature != 5.0:
        paths["skd (lambda=0, tau=5)"] = (5.0, 0.0)
    res = gradient_check_sweep(args.cases, seed=cfg.seed, eps=args.eps, paths=paths)
    worst_name, (worst, idx) = max(res.items(), key=lambda kv: kv[1][0])
    for name, (err, i) in res.items():
        print(f"{name:<36} max relative error {err:.3e}")
    if worst > GRADCHECK_LIMIT:
        print(f"FAIL: {worst_name} case {idx} has relative error {worst:.3e} > {GRADCHECK_LIMIT:g}")
        return EXIT_CHECK
    print(f"ok: all {args.cases} cases per path within {GRADCHECK_LIMIT:g}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subclass-kd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", help="capacity of a channel matrix (CSV or JSON)")
    c.add_argument("matrix")
    c.add_argument("--tol", type=float, default=1e-6, help="classification tolerance (L-inf)")
    c.add_argument("--renormalize", action="store_true")
    c.add_argument("--ba-tol", type=float, default=1e-9)
    c.add_argument("--max-iter", type=int, default=10_000)
    c.add_argument("--format", help="text,json")
    c.set_defaults(func=cmd_capacity)

    lb = sub.add_parser("labelbits", help="label bits per sample from confusion matrices")
    lb.add_argument("--class-matrix", required=True)
    lb.add_argument("--subclass-matrix", action="append", metavar="CLASS=PATH")
    lb.add_argument("--hierarchy", required=True)
    lb.add_argument(
        "--class-only-matrix",
        help="class confusion of a class-trained teacher to compare against (default: --class-matrix)",
    )
    lb.add_argument("--tol", type=float, default=0.02)
    lb.add_argument("--project", action="store_true", help="project off-pattern matrices instead of failing")
    lb.add_argument("--renormalize", action="store_true")
    lb.add_argument("--out-dir")
    lb.add_argument("--format", help="text,json")
    lb.set_defaults(func=cmd_labelbits)

    r = sub.add_parser("reference", help="reproduce the MHIST label-bit table")
    r.set_defaults(func=cmd_reference)

    s = sub.add_parser("simulate", help="teacher/student experiment on synthetic data")
    s.add_argument("--spec", help="spec JSON path, or 'benchmark' / 'degenerate'")
    s.add_argument("--config", help="DistillConfig JSON path")
    s.add_argument("--seed", type=int)
    s.add_argument("--runs", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-dir", default="simulate_out")
    s.add_argument("--format", help="json,csv,svg,text")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gradcheck", help="finite-difference check of the loss gradients")
    g.add_argument("--config")
    g.add_argument("--eps", type=float, default=1e-6)
    g.add_argument("--cases", type=int, default=100)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ChannelError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
