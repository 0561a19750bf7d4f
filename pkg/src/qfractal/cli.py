"""Command-line front end: ``qfractal {render,dimension,liouville,validate,list}``.

Exit codes: 0 success, 2 bad arguments, 3 invalid detector configuration,
4 I/O failure.  Angles on the command line are in degrees.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, analysis, detectors, process, render

EXIT_ARGS, EXIT_CONFIG, EXIT_IO = 2, 3, 4
DEFAULT_CHAINS = 8
DEFAULT_EPSILONS = (0.75, 0.80, 0.85, 0.90, 0.95)


class CLIError(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


def count(text: str) -> int:
    """Positive integer, also accepting scientific notation such as ``1e7``."""
    try:
        value = int(text)
    except ValueError:
        try:
            f = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not f.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        value = int(f)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def vector(text: str) -> tuple[float, float, float]:
    try:
        v = tuple(float(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}") from None
    if len(v) != 3 or not np.linalg.norm(v) > 0:
        raise argparse.ArgumentTypeError("need three comma-separated components, not all zero")
    return v


def floats(text: str) -> list[float]:
    try:
        return [float(c) for c in text.split(",") if c]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _add_config_args(p, epsilon_help="fuzziness; defaults to the solid's figure value"):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--solid", choices=detectors.BUILTIN_NAMES, default=None)
    src.add_argument("--config", type=Path, help="detector file (requires --epsilon)")
    p.add_argument("--epsilon", type=float, help=epsilon_help)


def _resolve_config(args, parser, need_epsilon=True):
    if args.config is not None:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                cfg = detectors.load(args.config)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
        except detectors.ConfigError as exc:
            raise CLIError(str(exc), EXIT_CONFIG) from exc
        except OSError as exc:
            raise CLIError(f"cannot read {args.config}: {exc}", EXIT_IO) from exc
        if need_epsilon and args.epsilon is None:
            parser.error("--epsilon is required with --config")
    else:
        cfg = detectors.builtin(args.solid or "tetrahedron")
    eps = args.epsilon if args.epsilon is not None else cfg.default_epsilon
    if eps is not None and not 0.0 <= eps <= 1.0:
        parser.error("--epsilon must lie in [0, 1]")
    return cfg, eps


# --- render ---------------------------------------------------------------------

RENDER_KEYS = ("solid", "config", "epsilon", "iterations", "burn_in", "chains", "seed",
               "projection", "width", "height", "zoom_center", "zoom_radius", "tonemap",
               "initial")


def _render_parser(sub):
    p = sub.add_parser("render", help="simulate and write a PGM image plus manifest")
    _add_config_args(p)
    p.add_argument("--iterations", type=count, default=10**7,
                   help="total emitted points across all chains (default 1e7)")
    p.add_argument("--burn-in", type=count, default=process.DEFAULT_BURN_IN)
    p.add_argument("--chains", type=count, default=DEFAULT_CHAINS,
                   help="independent chains; part of the result's identity")
    p.add_argument("--workers", type=count, default=None,
                   help="threads (default: available cores); never changes the output")
    p.add_argument("--seed", type=count, default=0)
    p.add_argument("--projection", choices=render.KINDS, default="ortho_north")
    p.add_argument("--width", type=count, default=1024)
    p.add_argument("--height", type=count, default=1024)
    p.add_argument("--zoom-center", type=vector, default=None)
    p.add_argument("--zoom-radius", type=float, default=None, help="degrees")
    p.add_argument("--tonemap", choices=("log", "loglog"), default="log")
    p.add_argument("--initial", choices=("north", "random-uniform"), default="north")
    p.add_argument("-o", "--output", type=Path, default=Path("image.pgm"))
    p.add_argument("--manifest", type=Path, default=None,
                   help="default: <output>.manifest")
    p.add_argument("--csv", type=Path, default=None, help="also write row,col,count")
    p.add_argument("--points-out", type=Path, default=None,
                   help="raw point stream (forces a single worker)")
    p.add_argument("--points-format", choices=("bin", "text"), default="bin")
    p.add_argument("--from-manifest", type=Path, default=None,
                   help="rerun the job recorded in a manifest")
    p.set_defaults(func=cmd_render)
    return p


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def _apply_manifest(args, parser):
    try:
        m = read_manifest(args.from_manifest)
    except OSError as exc:
        raise CLIError(f"cannot read {args.from_manifest}: {exc}", EXIT_IO) from exc
    conv = {"epsilon": float, "iterations": int, "burn_in": int, "chains": int, "seed": int,
            "width": int, "height": int, "zoom_radius": float, "config": Path,
            "zoom_center": vector}
    for key in RENDER_KEYS:
        raw = m.get(f"arg.{key}")
        if raw is None:
            parser.error(f"manifest lacks arg.{key}")
        value = None if raw == "None" else conv.get(key, str)(raw)
        setattr(args, key, value)


def _manifest_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(repr(float(c)) for c in v)
    return repr(v) if isinstance(v, float) else str(v)


def _file_sha256(path) -> str:
    return "-" if path is None else hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_render(args, parser) -> int:
    if args.from_manifest is not None:
        _apply_manifest(args, parser)
    cfg, eps = _resolve_config(args, parser)
    if args.chains < 1 or args.iterations < args.chains:
        parser.error("need --chains >= 1 and at least one point per chain")
    if args.width < 1 or args.height < 1:
        parser.error("image size must be positive")
    try:
        proj = render.Projection(
            args.projection, args.width, args.height, args.zoom_center,
            None if args.zoom_radius is None else math.radians(args.zoom_radius))
    except ValueError as exc:
        parser.error(str(exc))
    initial = process.NORTH if args.initial == "north" else "random-uniform"
    specs = process.split_chains(cfg, eps, args.seed, args.iterations, args.chains,
                                 args.burn_in, initial)
    t0 = time.perf_counter()
    writer = None
    try:
        if args.points_out is not None:
            writer = process.PointWriter(args.points_out, args.points_format)
            hist = render.SphereHistogram(proj)

            def sink(block):
                writer(block)
                hist.add_points(block)

            manifests = [process.run_chain(s, sink) for s in specs]
        else:
            hist, manifests = process.run_ensemble(
                specs, lambda: render.SphereHistogram(proj), args.workers)
    except OSError as exc:
        raise CLIError(f"I/O failure: {exc}", EXIT_IO) from exc
    finally:
        if writer is not None:
            writer.close()
    wall = time.perf_counter() - t0

    try:
        image = render.tonemap(hist, args.tonemap)
    except render.EmptyHistogram:
        print("error: no points fell inside the view", file=sys.stderr)
        return 1
    payload = render.pgm_bytes(image)
    manifest_path = args.manifest or args.output.with_name(args.output.name + ".manifest")
    lines = [f"arg.{k}={_manifest_value(getattr(args, k))}" for k in RENDER_KEYS]
    lines += [
        f"resolved.solid={cfg.name}",
        f"resolved.epsilon={eps!r}",
        f"resolved.config_sha256={_file_sha256(args.config)}",
        f"projection={proj.describe()}",
        f"generator={process.GENERATOR_ID}",
        f"version={__version__}",
        f"chains={len(specs)}",
        f"points_emitted={sum(m.points_emitted for m in manifests)}",
        f"total_in={hist.total_in}",
        f"total_dropped={hist.total_dropped}",
        f"pgm_sha256={hashlib.sha256(payload).hexdigest()}",
        f"wall_time_s={wall:.3f}",
    ]
    try:
        args.output.write_bytes(payload)
        Path(manifest_path).write_text("\n".join(lines) + "\n")
        if args.csv is not None:
            render.write_csv(hist, args.csv)
    except OSError as exc:
        raise CLIError(f"I/O failure: {exc}", EXIT_IO) from exc
    print(f"{cfg.name} eps={eps} points={hist.total_offered} dropped={hist.total_dropped} "
          f"-> {args.output} ({wall:.1f}s)")
    return 0


# --- dimension -------------------------------------------------------------------

def _dimension_parser(sub):
    p = sub.add_parser("dimension", help="box-counting dimension of attractors")
    _add_config_args(p, epsilon_help="unused; see --epsilons")
    p.add_argument("--epsilons", type=floats, default=list(DEFAULT_EPSILONS))
    p.add_argument("--points", type=count, default=10**7)
    p.add_argument("--seed", type=count, default=0)
    p.add_argument("--burn-in", type=count, default=process.DEFAULT_BURN_IN)
    p.add_argument("--levels", default="3-9", help="octahedral subdivision levels, e.g. 3-9")
    p.add_argument("--orientations", type=count, default=analysis.DEFAULT_ORIENTATIONS,
                   help="random grid orientations averaged per level (default %(default)s)")
    p.add_argument("--reference", choices=("uniform", "great-circle", "sierpinski"),
                   default=None, help="calibrate on a set of known dimension instead")
    p.add_argument("--input", type=Path, default=None, help="read points from a stream file")
    p.add_argument("--input-format", choices=("bin", "text"), default="bin")
    p.add_argument("--csv", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_dimension)
    return p


def _levels(text, parser):
    try:
        lo, hi = (int(x) for x in text.split("-"))
    except ValueError:
        parser.error(f"bad --levels {text!r}")
    return tuple(range(lo, hi + 1))


def _estimate(fn, *a, **kw):
    try:
        return fn(*a, **kw), ""
    except analysis.DegenerateFit as exc:
        return exc.estimate, "degenerate-fit"


def cmd_dimension(args, parser) -> int:
    levels = _levels(args.levels, parser)
    sphere = {"levels": levels, "orientations": args.orientations}
    rows = []
    try:
        if args.reference == "sierpinski":
            pts = process.sierpinski_points(args.points, args.seed)
            est, flag = _estimate(analysis.planar_box_counting_dimension, pts)
            rows.append(("sierpinski", "-", est, flag))
        elif args.reference is not None:
            make = analysis.uniform_sphere if args.reference == "uniform" else analysis.great_circle
            est, flag = _estimate(analysis.box_counting_dimension, make(args.points, args.seed), **sphere)
            rows.append((args.reference, "-", est, flag))
        elif args.input is not None:
            pts = process.read_points(args.input, args.input_format)
            est, flag = _estimate(analysis.box_counting_dimension, pts, **sphere)
            rows.append((str(args.input), "-", est, flag))
        else:
            cfg, _ = _resolve_config(args, parser, need_epsilon=False)
            for eps in args.epsilons:
                if not 0.0 <= eps <= 1.0:
                    parser.error("epsilons must lie in [0, 1]")
                spec = process.ChainSpec(cfg, eps, args.seed, 0, args.burn_in,
                                         args.burn_in + args.points)
                est, flag = _estimate(analysis.box_counting_dimension,
                                      process.chain_points(spec), **sphere,
                                      epsilon=eps, solid=cfg.name)
                rows.append((cfg.name, eps, est, flag))
    except OSError as exc:
        raise CLIError(f"I/O failure: {exc}", EXIT_IO) from exc
    except ValueError as exc:
        parser.error(str(exc))

    out = csv.writer(sys.stdout) if args.csv else None
    header = ("source", "epsilon", "points", "dimension", "residual", "levels_used", "flag")
    if out:
        out.writerow(header)
    else:
        print(f"{'source':<20} {'eps':>5} {'points':>10} {'dim':>7} {'resid':>7}  levels  flag")
    for src, eps, est, flag in rows:
        used = ",".join(str(l) for l, u in zip(est.levels, est.used) if u)
        if out:
            out.writerow((src, eps, est.points, f"{est.slope:.4f}", f"{est.residual:.4f}", used, flag))
        else:
            print(f"{src:<20} {eps!s:>5} {est.points:>10} {est.slope:7.4f} {est.residual:7.4f}  "
                  f"{used}  {flag}")
    return 0


# --- liouville -------------------------------------------------------------------

def _liouville_parser(sub):
    p = sub.add_parser("liouville", help="integrate the averaged Bloch-vector dynamics")
    _add_config_args(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--t", type=float, default=3.0, help="final time")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--m0", type=vector, default=(1.0, 0.0, 0.0), help="initial Bloch vector")
    p.add_argument("--csv", type=Path, default=None, help="write t,m1,m2,m3,closed_form")
    p.set_defaults(func=cmd_liouville)
    return p


def cmd_liouville(args, parser) -> int:
    cfg, eps = _resolve_config(args, parser)
    try:
        params = analysis.LiouvilleParams(args.kappa, eps, args.m0, args.t, args.dt)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        res = analysis.lindblad_bloch_evolution(params, cfg)
    except analysis.IntegrationUnstable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    closed = res.closed_form()
    print(f"solid={cfg.name} N={cfg.count} epsilon={eps} kappa={args.kappa} t={args.t} dt={args.dt}")
    print(f"measured_rate={res.measured_rate:.12g}")
    if res.closed_form_rate is not None:
        print(f"closed_form_rate={res.closed_form_rate:.12g}  (N kappa eps^2 / 3)")
        print(f"max_abs_deviation={np.max(np.abs(res.bloch - closed)):.3e}")
    else:
        print("closed_form_rate=n/a (directions do not sum to zero)")
    print(f"trace_deviation={res.trace_deviation:.3e} hermiticity_deviation="
          f"{res.hermiticity_deviation:.3e} min_eigenvalue={res.min_eigenvalue:.3e}")
    print("note: the quoted characteristic exponent 2N kappa/3 differs from this decay "
          "rate by a factor eps^2/2; neither constant is asserted here")
    if args.csv is not None:
        try:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(("t", "m1", "m2", "m3", "closed_form_norm"))
                for i, t in enumerate(res.times):
                    cf = "" if closed is None else repr(float(np.linalg.norm(closed[i])))
                    w.writerow((repr(float(t)), *map(repr, map(float, res.bloch[i])), cf))
        except OSError as exc:
            raise CLIError(f"I/O failure: {exc}", EXIT_IO) from exc
    return 0


# --- validate / list ---------------------------------------------------------------

def _validate_parser(sub):
    p = sub.add_parser("validate", help="check detector files or built-ins")
    p.add_argument("paths", nargs="*", type=Path)
    p.add_argument("--solid", choices=detectors.BUILTIN_NAMES, action="append", default=[])
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_validate)
    return p


def cmd_validate(args, parser) -> int:
    if not args.paths and not args.solid:
        parser.error("give detector files or --solid")
    code = 0
    reports = []
    for name in args.solid:
        reports.append(detectors.validate(detectors.builtin(name)))
    for path in args.paths:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                cfg = detectors.load(path)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
        except detectors.ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = max(code, EXIT_CONFIG)
            continue
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            code = max(code, EXIT_IO)
            continue
        reports.append(detectors.validate(cfg, unit_tol=detectors.UNIT_TOL_FILE))
    out = csv.writer(sys.stdout) if args.csv else None
    if out:
        out.writerow(("name", "count", "max_norm_deviation", "sum_norm", "duplicates",
                      "zero_sum", "ok"))
    for rep in reports:
        if out:
            out.writerow((rep.name, rep.count, f"{rep.max_norm_deviation:.3e}",
                          f"{rep.sum_norm:.3e}", len(rep.duplicates), rep.zero_sum, rep.ok))
        else:
            print(" ".join(rep.lines()))
        if rep.bad_norms or rep.duplicates:
            for msg in rep.failures():
                print(f"error: {rep.name}: {msg}", file=sys.stderr)
            code = max(code, EXIT_CONFIG)
    return code


def _list_parser(sub):
    p = sub.add_parser("list", help="list the built-in detector configurations")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_list)
    return p


def cmd_list(args, parser) -> int:
    out = csv.writer(sys.stdout) if args.csv else None
    if out:
        out.writerow(("name", "detectors", "default_epsilon"))
    for name in detectors.BUILTIN_NAMES:
        cfg = detectors.builtin(name)
        if out:
            out.writerow((name, cfg.count, cfg.default_epsilon))
        else:
            print(f"{name:<20} N={cfg.count:<3} eps={cfg.default_epsilon}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfractal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}
    for make in (_render_parser, _dimension_parser, _liouville_parser, _validate_parser,
                 _list_parser):
        p = make(sub)
        parsers[p.prog.split()[-1]] = p
    parser.set_defaults(_subparsers=parsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args._subparsers[args.command]
    try:
        return args.func(args, sub)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
