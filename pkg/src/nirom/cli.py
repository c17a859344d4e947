"""Command-line front end: ``nirom generate|decompose|predict|metrics|bench|replay``.

Exit codes: 0 success (including a flagged non-converged rank selection),
1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import datetime as _dt
import json
import logging
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from . import dmd, formats, rank, rbf, swe
from .errors import ConfigError, DataError, NiromError
from .linalg import frobenius
from .rsvd import SketchConfig, full_svd_reference, make_rng, randomized_svd
from .snapshots import SnapshotMatrix

DEFAULT_SEED = 20170
FIELDS = ("h", "u", "v")
log = logging.getLogger("nirom")


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_config(path):
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sizes(text):
    try:
        return [tuple(int(p) for p in item.lower().split("x")) for item in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = _Parser(prog="nirom", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="run the shallow-water model and write snapshots")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--config", help="key=value file with SWE parameters")
    g.add_argument("--nx", type=int)
    g.add_argument("--ny", type=int)
    g.add_argument("--snapshots", type=int, dest="n_snapshots")
    g.add_argument("--dt", type=float, help="snapshot interval [s]")
    g.add_argument("--step", type=float, help="internal time step [s] (default: from CFL)")
    g.add_argument("--div-damping", type=float, help="divergence damping [m^2/s]")
    g.add_argument("--dimensional", action="store_true",
                   help="write dimensional fields instead of scaled ones")

    d = sub.add_parser("decompose", help="adaptive randomized DMD with rank selection")
    d.add_argument("inputs", nargs="+", help="snapshot containers (or a directory with --all)")
    d.add_argument("--all", action="store_true",
                   help="treat the input as a directory holding h, u and v containers")
    d.add_argument("--out", required=True)
    d.add_argument("--config")
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.add_argument("--max-rel-error", type=float, default=1e-3)
    d.add_argument("--min-correlation", type=float, default=0.999)
    d.add_argument("--k-min", type=int, default=2)
    d.add_argument("--k-max", type=int)
    d.add_argument("--sweep-step", type=int, default=1)
    d.add_argument("--k", type=int, help="fixed rank (skips the sweep)")
    d.add_argument("--method", choices=("randomized", "full"), default="randomized")
    d.add_argument("--power-iterations", type=int, default=0)
    d.add_argument("--rbf", choices=("none", "2d", "1d"), default="none",
                   help="also fit and store coefficient surfaces")

    pr = sub.add_parser("predict", help="evaluate the DMD-RBF model at given times")
    pr.add_argument("model")
    pr.add_argument("--out", required=True)
    pr.add_argument("--config")
    when = pr.add_mutually_exclusive_group(required=True)
    when.add_argument("--times", type=_float_list, help="comma-separated times")
    when.add_argument("--at-nodes", action="store_true", help="every training instant")
    pr.add_argument("--rbf", choices=("2d", "1d"), default=None,
                    help="surface layout (default: stored surfaces, else 2d)")
    pr.add_argument("--reference", help="snapshot container for local-error export")

    mt = sub.add_parser("metrics", help="report error metrics of a model against snapshots")
    mt.add_argument("model")
    mt.add_argument("snapshots")
    mt.add_argument("--config")

    b = sub.add_parser("bench", help="time randomized vs full-SVD DMD")
    b.add_argument("--out", required=True, help="CSV path")
    b.add_argument("--config")
    b.add_argument("--sizes", type=_sizes, default=[(5000, 200)], help="e.g. 5000x200,50x50")
    b.add_argument("--ks", type=_int_list, default=[20])
    b.add_argument("--seed", type=int, default=DEFAULT_SEED)
    b.add_argument("--repeats", type=int, default=3)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out", help="write outputs here instead of the recorded location")
    return p


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    config = getattr(args, "config", None)
    if config:
        values = read_config(config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest: a for a in sub._actions}
        typed = {}
        for key, raw in values.items():
            if key not in dests and args.command != "generate":
                raise UsageError(f"{config}: unknown key {key!r}")
            action = dests.get(key)
            conv = action.type if action is not None and action.type else str
            if action is not None and isinstance(action, argparse._StoreTrueAction):
                conv = lambda s: s.lower() in ("1", "true", "yes", "on")  # noqa: E731
            typed[key] = conv(raw)
        sub.set_defaults(**{k: v for k, v in typed.items() if k in dests})
        args = parser.parse_args(argv)
        args.extra_config = {k: v for k, v in values.items() if k not in dests}
    else:
        args.extra_config = {}
    args.argv = list(argv)
    return args


# -- manifests -------------------------------------------------------------

def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def write_manifest(out_dir, args, outputs, started, **extra):
    manifest = {
        "subcommand": args.command,
        "argv": args.argv,
        "cwd": os.getcwd(),
        "out": os.path.abspath(args.out) if getattr(args, "out", None) else None,
        "outputs": sorted(outputs),
        "seed": getattr(args, "seed", None),
        "toolkit_version": __version__,
        "started": started,
        "finished": _now(),
    }
    manifest.update(extra)
    path = os.path.join(out_dir, f"manifest_{args.command}.json")
    formats.atomic_write(path, json.dumps(manifest, indent=2, default=str) + "\n", mode="w")
    return path


# -- subcommands -----------------------------------------------------------

def cmd_generate(args, out=sys.stdout):
    started = _now()
    settings = dict(args.extra_config)
    for key in ("nx", "ny", "n_snapshots", "dt", "step", "div_damping"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    cfg = swe.SweConfig.from_mapping(settings).validate()
    os.makedirs(args.out, exist_ok=True)
    run = swe.simulate(cfg)
    scales = None
    if not args.dimensional:
        scales = swe.reference_scales(cfg)
        run = swe.nondimensionalize(run, scales)
    outputs = []
    for name, snap in run.fields().items():
        path = os.path.join(args.out, f"{name}.nrm")
        formats.write_snapshots(path, snap)
        outputs.append(path)
    print(f"wrote {len(outputs)} containers ({cfg.nx * cfg.ny} x {cfg.n_snapshots}) "
          f"to {args.out}; internal step {run.step:.6g}, mass drift {run.mass_drift:.3e}",
          file=out)
    write_manifest(args.out, args, outputs, started, swe_config=asdict(cfg),
                   scales=None if scales is None else asdict(scales))
    return 0


def _decompose_inputs(args):
    if args.all:
        if len(args.inputs) != 1 or not os.path.isdir(args.inputs[0]):
            raise UsageError("--all expects a single directory")
        return [os.path.join(args.inputs[0], f"{name}.nrm") for name in FIELDS]
    return args.inputs


def cmd_decompose(args, out=sys.stdout):
    started = _now()
    os.makedirs(args.out, exist_ok=True)
    criteria = rank.RankCriteria(args.max_rel_error, args.min_correlation, args.k_min,
                                 args.k_max, args.sweep_step)
    print(f"seed: {args.seed}", file=out)
    print(f"{'field':<8}{'Er_DMD':>14}{'C_DMD':>14}{'k':>6}", file=out)
    outputs, summary = [], {}
    for path in _decompose_inputs(args):
        snap = formats.read_snapshots(path)
        name = snap.name
        if args.k is not None:
            if args.method == "randomized":
                model = dmd.ardmd(snap, args.k, args.seed, args.power_iterations)
            else:
                model = dmd.exact_dmd(snap, args.k)
            R = dmd.reconstruct(model)
            rec = rank.RankSweepRecord(args.k, rank.relative_error(snap.data, R),
                                       rank.correlation(snap.data, R), 0.0)
            sel = rank.RankSelection(model, [rec], rec.feasible(criteria))
        else:
            sel = rank.select_rank(snap, criteria, args.seed, args.method,
                                   args.power_iterations)
        rec = sel.record
        nirom = None if args.rbf == "none" else rbf.fit_nirom(sel.model, layout=args.rbf)
        stem = os.path.join(args.out, name)
        formats.write_model(stem + ".model", sel.model, nirom)
        formats.export_csv(stem + "_sweep.csv", formats.sweep_rows(sel.trace), "sweep")
        formats.export_csv(stem + "_spectrum.csv",
                           formats.spectrum_rows(dmd.spectrum(sel.model)), "spectrum")
        outputs += [stem + ".model", stem + "_sweep.csv", stem + "_spectrum.csv"]
        print(f"{name:<8}{rec.rel_error:>14.4e}{rec.correlation:>14.8f}{sel.k:>6}", file=out)
        if not sel.converged:
            print(f"NOT-CONVERGED {name}: no k in the sweep meets Er <= "
                  f"{criteria.max_rel_error:g} and C >= {criteria.min_correlation:g}; "
                  f"using k={sel.k} with minimal error", file=out)
        summary[name] = {"k": sel.k, "rel_error": rec.rel_error,
                         "correlation": rec.correlation, "converged": sel.converged}
    write_manifest(args.out, args, outputs, started, criteria=asdict(criteria),
                   results=summary)
    return 0


def _match_column(snap, t):
    j = t / snap.dt
    idx = int(round(j))
    if abs(j - idx) <= 1e-9 * max(1.0, abs(j)) and 0 <= idx < snap.data.shape[1]:
        return idx
    return None


def cmd_predict(args, out=sys.stdout):
    started = _now()
    model, stored = formats.read_model(args.model)
    if args.rbf is None and stored is not None:
        nirom = stored
    else:
        nirom = rbf.fit_nirom(model, layout=args.rbf or "2d")
    if args.at_nodes:
        times = list(np.arange(model.n_snapshots) * model.dt)
    else:
        times = args.times
    for t in times:
        if not nirom.t_first <= t <= nirom.t_last:
            raise UsageError(f"time {t!r} outside the model window "
                             f"[{nirom.t_first!r}, {nirom.t_last!r}]")
    fields = rbf.nirom_predict(model, nirom, times)

    os.makedirs(args.out, exist_ok=True)
    name = os.path.splitext(os.path.basename(args.model))[0]
    reference = formats.read_snapshots(args.reference) if args.reference else None
    nx, ny = (reference.nx, reference.ny) if reference else (model.m, 1)
    pred_path = os.path.join(args.out, f"{name}_pred.nrm")
    formats.write_snapshots(pred_path, SnapshotMatrix(fields, model.dt, nx, ny, name))
    outputs = [pred_path]
    print(f"predicted {len(times)} time(s) for {name} (k={model.k}, layout={nirom.layout})",
          file=out)
    if reference is not None:
        if reference.data.shape[0] != model.m:
            raise DataError(f"reference has {reference.data.shape[0]} rows, model {model.m}")
        for i, t in enumerate(times):
            idx = _match_column(reference, t)
            if idx is None:
                print(f"  t={t:.17g}: no reference snapshot at this time", file=out)
                continue
            ref = reference.data[:, idx]
            err = frobenius(ref - fields[:, i]) / frobenius(ref)
            path = os.path.join(args.out, f"{name}_local_error_{i:04d}.csv")
            formats.export_csv(path, formats.local_error_rows(reference, ref, fields[:, i]),
                               "local_error")
            outputs.append(path)
            print(f"  t={t:.17g}: relative error {err:.4e}", file=out)
    write_manifest(args.out, args, outputs, started, times=times)
    return 0


def cmd_metrics(args, out=sys.stdout):
    model, nirom = formats.read_model(args.model)
    snap = formats.read_snapshots(args.snapshots)
    if snap.data.shape[0] != model.m:
        raise DataError(f"snapshots have {snap.data.shape[0]} rows, model {model.m}")
    n = min(snap.data.shape[1], model.n_snapshots)
    V = snap.data[:, :n]
    R = dmd.reconstruct(model, n)
    lam = model.ritz
    closure = max((np.min(np.abs(lam - np.conj(x))) for x in lam), default=0.0)
    print(f"field      {snap.name}", file=out)
    print(f"Er_DMD     {rank.relative_error(V, R):.6e}", file=out)
    print(f"C_DMD      {rank.correlation(V, R):.8f}", file=out)
    print(f"k          {model.k}", file=out)
    print(f"imag_resid {dmd.imaginary_residue(model, n):.3e}", file=out)
    print(f"conj_gap   {closure:.3e}", file=out)
    if nirom is not None:
        P = rbf.nirom_predict(model, nirom, np.arange(n) * model.dt)
        print(f"Er_NIROM   {rank.relative_error(V, P):.6e}", file=out)
    return 0


def synthetic_snapshots(m, n_cols, rank_, seed):
    """Real snapshots from damped oscillatory linear dynamics of given rank."""
    rng = make_rng(seed)
    basis = rng.standard_normal((m, rank_))
    z = rng.standard_normal(rank_)
    pairs = rank_ // 2
    radius = 1.0 - 0.02 * rng.random(pairs)
    theta = np.pi * rng.random(pairs)
    block = np.zeros((rank_, rank_))
    for i in range(pairs):
        c, s = radius[i] * np.cos(theta[i]), radius[i] * np.sin(theta[i])
        block[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[c, -s], [s, c]]
    if rank_ % 2:
        block[-1, -1] = 0.95
    Z = np.empty((rank_, n_cols))
    Z[:, 0] = z
    for j in range(1, n_cols):
        Z[:, j] = block @ Z[:, j - 1]
    return basis @ Z


def bench_case(m, n, k, seed, repeats=3):
    """Best-of-``repeats`` wall times and errors of randomized vs full-SVD DMD."""
    V = synthetic_snapshots(m, n + 1, k, seed)
    V0, _ = dmd.split_snapshots(V)

    def run(factorize):
        best, model = float("inf"), None
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            model = dmd.build_model(factorize(), V)
            best = min(best, time.perf_counter() - t0)
        return best, rank.relative_error(V, dmd.reconstruct(model))

    t_r, e_r = run(lambda: randomized_svd(V0, SketchConfig(k, seed)))
    t_f, e_f = run(lambda: full_svd_reference(V0, k))
    return t_r, t_f, e_r, e_f


def cmd_bench(args, out=sys.stdout):
    started = _now()
    rows = []
    print(f"seed: {args.seed}", file=out)
    print(f"{'m':>7}{'n':>6}{'k':>5}{'t_ardmd_s':>12}{'t_fullsvd_s':>13}"
          f"{'er_ardmd':>12}{'er_fullsvd':>12}", file=out)
    for m, n in args.sizes:
        for k in args.ks:
            if not 2 <= k < n or m < n:
                raise UsageError(f"bench case {m}x{n} with k={k} needs 2 <= k < n <= m")
            t_r, t_f, e_r, e_f = bench_case(m, n, k, args.seed, args.repeats)
            rows.append((m, n, k, t_r, t_f, e_r, e_f))
            print(f"{m:>7}{n:>6}{k:>5}{t_r:>12.4g}{t_f:>13.4g}{e_r:>12.3e}{e_f:>12.3e}",
                  file=out)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    formats.export_csv(args.out, rows, "bench")
    write_manifest(out_dir, args, [args.out], started)
    return 0


def cmd_replay(args, out=sys.stdout):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if args.out:
        if "--out" not in argv:
            raise UsageError("manifest has no --out to override")
        argv[argv.index("--out") + 1] = os.path.abspath(args.out)
    # relative paths in the recorded argv refer to the original directory
    here = os.getcwd()
    os.chdir(manifest.get("cwd", here))
    try:
        return main(argv, out=out)
    finally:
        os.chdir(here)


COMMANDS = {
    "generate": cmd_generate,
    "decompose": cmd_decompose,
    "predict": cmd_predict,
    "metrics": cmd_metrics,
    "bench": cmd_bench,
    "replay": cmd_replay,
}


def main(argv=None, out=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    out = sys.stdout if out is None else out
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args, out=out)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except NiromError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
