"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 config or semantic error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dimension, raster, render, vvariable
from .ifs_model import PRESETS, ConfigError, SuperIfs, parse_config, preset, validate
from .rng import DEFAULT_SEED

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
DEFAULT_ALPHA_GRID = "1.0:1.4:0.02"


class UsageError(Exception):
    pass


class SemanticError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in system")
    src.add_argument("--config", type=Path, help="superIFS config file")
    p.add_argument("--V", type=int, default=None, help="override the number of buffers")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULT_SEED})")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=20, help="construction steps")
    p.add_argument("--res", type=int, default=raster.DEFAULT_RES, help="raster side in pixels")
    p.add_argument("--measure", action="store_true", help="evolve measures instead of sets")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vvfractal", description="V-variable fractals and their dimensions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("attractor", help="single-IFS attractor by backward process or chaos game")
    _add_source(p)
    p.add_argument("--ifs", help="which IFS of the config to use")
    p.add_argument("--mode", choices=("backward", "chaos"), default="backward")
    p.add_argument("--k", type=int, default=12, help="backward-process iterations")
    p.add_argument("--points", type=int, default=100_000, help="chaos-game points")
    p.add_argument("--burn-in", type=int, default=raster.DEFAULT_BURN_IN)
    p.add_argument("--res", type=int, default=raster.DEFAULT_RES)
    p.add_argument("--out", type=Path, required=True, help="image path (.pgm, .ppm or .png)")

    p = sub.add_parser("vvar", help="run the V-buffer forward construction")
    _add_source(p)
    _add_run(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--dump-records", metavar="PATH", help="record dump path, '-' for stdout")

    p = sub.add_parser("dimension", help="pressure curve and dimension")
    _add_source(p)
    p.add_argument(
        "--alpha-grid", metavar="START:STOP:STEP", nargs="?", const=DEFAULT_ALPHA_GRID,
        help=f"pressure-curve grid (bare flag: {DEFAULT_ALPHA_GRID})",
    )
    p.add_argument("--solve", action="store_true", help="solve for the dimension d(V)")
    p.add_argument("--k", type=int, default=dimension.DEFAULT_K)
    p.add_argument("--chains", type=int, default=dimension.DEFAULT_CHAINS)
    p.add_argument("--csv", metavar="PATH", help="pressure-curve CSV path, '-' for stdout")

    p = sub.add_parser("superpose", help="superimpose post-burn-in necklaces")
    _add_source(p)
    _add_run(p)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=15)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _load(args) -> SuperIfs:
    if args.preset:
        s = preset(args.preset)
    else:
        try:
            text = args.config.read_bytes()
        except OSError as exc:
            raise OSError(exc.errno, f"cannot read config {args.config}: {exc.strerror}") from exc
        s = parse_config(text)
    if args.V is not None:
        s = s.with_V(args.V)
        problems = validate(s)
        if problems:
            raise SemanticError("; ".join(problems))
    return s


def _seed(args) -> int:
    if args.seed is None:
        print(f"note: no --seed given, using the default seed {DEFAULT_SEED}", file=sys.stderr)
        return DEFAULT_SEED
    return args.seed


def _emit(text: str, dest: str | None) -> None:
    if dest is None or dest == "-":
        sys.stdout.write(text)
    else:
        render.atomic_write(dest, text.encode())


def _alpha_grid(spec: str) -> list[float]:
    try:
        start, stop, stepsize = (float(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"--alpha-grid wants START:STOP:STEP, got {spec!r}") from None
    if stepsize <= 0 or stop < start:
        raise UsageError("--alpha-grid needs STEP > 0 and STOP >= START")
    n = int(round((stop - start) / stepsize)) + 1
    return [round(start + i * stepsize, 12) for i in range(n)]


def cmd_attractor(args) -> int:
    s = _load(args)
    f = s.single(args.ifs)
    if args.mode == "backward":
        if args.k < 0:
            raise UsageError("--k must be >= 0")
        its = raster.backward_iterates(f, raster.Raster.full(args.res), args.k)
        trace = raster.decay_trace(its)
        for j, dist in enumerate(trace, start=1):
            ratio = trace[j - 1] / trace[j - 2] if j > 1 and trace[j - 2] > 0 else float("nan")
            print(f"k={j} d_H(T{j - 1},T{j})={dist:.6f} ratio={ratio:.4f}")
        img = render.to_greyscale(its[-1])
    else:
        if args.points <= 0 or args.burn_in < 0:
            raise UsageError("--points must be > 0 and --burn-in >= 0")
        measure = raster.chaos_game(f, args.points, args.burn_in, _seed(args), args.res)
        img = render.to_greyscale(measure)
    render.write_image(img, args.out)
    return EXIT_OK


def _check_run_args(args) -> None:
    if args.k < 0:
        raise UsageError("--k must be >= 0")
    if args.res < 1:
        raise UsageError("--res must be >= 1")


def cmd_vvar(args) -> int:
    s = _load(args)
    _check_run_args(args)
    seed = _seed(args)
    kind = raster.MEASURE if args.measure else raster.SET
    args.out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for rec, state, _ in vvariable.iterate(s, None, args.k, seed, args.res, kind):
        records.append(rec)
        k = len(records)
        for v, buf in enumerate(state.buffers, start=1):
            render.write_image(render.to_greyscale(buf), args.out_dir / f"step{k:03d}_buf{v}.pgm")
    dump = vvariable.format_records(records, s)
    if args.dump_records:
        _emit(dump, args.dump_records)
    return EXIT_OK


def cmd_dimension(args) -> int:
    if not args.solve and args.alpha_grid is None:
        raise UsageError("give --alpha-grid and/or --solve")
    s = _load(args)
    if args.k < 1 or args.chains < 1:
        raise UsageError("--k and --chains must be >= 1")
    dimension.similitude_ratios(s)
    seed = _seed(args)
    if args.alpha_grid is not None:
        alphas = _alpha_grid(args.alpha_grid)
        curve = dimension.pressure_curve(s, alphas, args.k, args.chains, seed)
        _emit(dimension.curve_csv(curve, s.V, seed), args.csv)
    if args.solve:
        est = dimension.solve_dimension_estimate(s, 1e-4, args.k, args.chains, seed)
        ci = "CI unavailable" if est.ci95 is None else f"± {est.ci95:.4f} (95% CI)"
        print(f"d(V={s.V}) = {est.value:.4f} {ci}, k={est.k_steps}, chains={est.chains}, seed={seed}")
    return EXIT_OK


def cmd_superpose(args) -> int:
    s = _load(args)
    _check_run_args(args)
    if args.samples < 1 or args.burn_in < 0:
        raise UsageError("--samples must be >= 1 and --burn-in >= 0")
    seed = _seed(args)
    kind = raster.MEASURE if args.measure else raster.SET
    acc = np.zeros((args.res, args.res))
    for j, (_, state, _) in enumerate(
        vvariable.iterate(s, None, args.burn_in + args.samples, seed, args.res, kind), start=1
    ):
        if j > args.burn_in:
            for b in state.buffers:
                acc += b.cells
    render.write_image(render.to_greyscale(raster.Raster(acc, raster.MEASURE)), args.out)
    return EXIT_OK


COMMANDS = {
    "attractor": cmd_attractor,
    "vvar": cmd_vvar,
    "dimension": cmd_dimension,
    "superpose": cmd_superpose,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"vvfractal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SemanticError, dimension.DimensionError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"vvfractal: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"vvfractal: error: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
