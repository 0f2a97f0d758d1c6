"""Command-line entry point.

Subcommands::

    sarbayes simulate     synthetic scene + phase history
    sarbayes reconstruct  gibbs | ml | l1
    sarbayes summarize    mean/variance PGMs, alpha field, beta histogram, frames
    sarbayes check        R-hat report of an existing sample store

Exit status is 0 on success, 1 on runtime failure and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as sio
from .baselines import L1Config, l1_reconstruct, ml_image
from .diagnostics import check_all
from .gibbs import GibbsConfig, run_chains
from .kernels import RngStream
from .nufft import FourierCoords, GridSpec, NufftOperator
from .scene import SceneSpec, generate_scene, random_targets, synthesize
from .summaries import (
    beta_histogram,
    export_movie_frames,
    summarize,
    to_db,
    variance_db,
    write_pgm,
)

log = logging.getLogger("sarbayes")

# Stream ids used by `simulate`; the sampler uses ids 0..n_chains-1 under its own seed.
_SCENE_STREAM, _NOISE_STREAM, _COORD_STREAM = 0, 1, 2


def parse_grid(text: str) -> GridSpec:
    try:
        w, h = text.lower().split("x")
        return GridSpec(int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like WxH with positive integers, got {text!r}")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v
    return conv


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text!r}")
    return v


pos_float = _positive(float)
pos_int = _positive(int)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sarbayes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of option defaults; explicit flags win")
    common.add_argument("--out", type=Path, required=True, help="output directory")

    s = sub.add_parser("simulate", parents=[common], help="synthesize a scene and phase history")
    s.add_argument("--grid", type=parse_grid, default=GridSpec(32, 32))
    s.add_argument("--targets", type=_nonneg_int, default=5)
    s.add_argument("--amplitude", type=pos_float, default=1.0)
    s.add_argument("--background-alpha", type=pos_float, default=1e4)
    s.add_argument("--beta", type=pos_float, default=1e2)
    s.add_argument("--noiseless", action="store_true")
    s.add_argument("--phase-model", choices=["uniform-random", "zero"], default="uniform-random")
    s.add_argument("--coords", choices=["uniform", "random"], default="uniform")
    s.add_argument("--n-meas", type=pos_int, help="number of random coordinates (random coords only)")
    s.add_argument("--scene", type=Path, help="use this image CSV as the truth scene")
    s.add_argument("--seed", type=_nonneg_int, default=0)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reconstruct", help="form an image from a phase history")
    rsub = r.add_subparsers(dest="mode", required=True)
    rcommon = argparse.ArgumentParser(add_help=False, parents=[common])
    rcommon.add_argument("--input", type=Path, required=True, help="phase history CSV")
    rcommon.add_argument("--grid", type=parse_grid, help="expected grid; must match the file")

    g = rsub.add_parser("gibbs", parents=[rcommon], help="posterior sampling")
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--chains", type=pos_int, default=5)
    g.add_argument("--batch-length", type=pos_int, default=64, help="initial n_s")
    g.add_argument("--rhat-tol", type=pos_float, default=1.1)
    g.add_argument("--max-batches", type=pos_int, default=8)
    g.add_argument("--thin", type=pos_int, default=1)
    g.add_argument("--init", choices=["adjoint-start", "random-start"], default="adjoint-start")
    g.set_defaults(func=cmd_reconstruct)

    m = rsub.add_parser("ml", parents=[rcommon], help="inverse-NUFFT least-squares image")
    m.set_defaults(func=cmd_reconstruct)

    l1 = rsub.add_parser("l1", parents=[rcommon], help="l1-regularized image by ISTA")
    l1.add_argument("--lambda", dest="lam", type=float, required=True)
    l1.add_argument("--step", type=pos_float)
    l1.add_argument("--max-iters", type=pos_int, default=500)
    l1.add_argument("--rel-tol", type=pos_float, default=1e-8)
    l1.set_defaults(func=cmd_reconstruct)

    su = sub.add_parser("summarize", parents=[common], help="posterior summaries of a sample store")
    su.add_argument("--store", type=Path, required=True)
    su.add_argument("--bins", type=pos_int, default=30)
    su.add_argument("--no-frames", action="store_true")
    su.set_defaults(func=cmd_summarize)

    c = sub.add_parser("check", help="R-hat report of a sample store")
    c.add_argument("--store", type=Path, required=True)
    c.add_argument("--rhat-tol", type=pos_float, default=1.1)
    c.set_defaults(func=cmd_check)
    return p


def _provenance(args) -> dict:
    skip = {"func", "config", "verbose"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, GridSpec):
            v = f"{v.nx}x{v.ny}"
        cfg[k] = str(v)
    return {
        "sarbayes_version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "config": json.dumps(cfg, sort_keys=True),
    }


def _check_input(path: Path):
    if not path.is_file():
        raise FileNotFoundError(f"input not found: {path}")


def cmd_simulate(args) -> int:
    grid = args.grid
    scene_rng = RngStream(args.seed, _SCENE_STREAM)
    if args.scene is not None:
        _check_input(args.scene)
        scene = sio.read_image(args.scene)
        grid = scene.grid
    else:
        targets = random_targets(grid, args.targets, scene_rng, args.amplitude)
        spec = SceneSpec(grid, targets, args.background_alpha, args.phase_model)
        scene = generate_scene(spec, scene_rng)
    if args.coords == "uniform":
        coords = FourierCoords.uniform(grid)
    else:
        coords = FourierCoords.random(args.n_meas or grid.N, RngStream(args.seed, _COORD_STREAM).generator)
    op = NufftOperator(grid, coords)
    beta = np.inf if args.noiseless else args.beta
    ph = synthesize(scene, op, beta, RngStream(args.seed, _NOISE_STREAM))

    args.out.mkdir(parents=True, exist_ok=True)
    sio.write_phase_history(args.out / "phase_history.csv", ph, grid)
    sio.write_image(args.out / "scene.csv", scene.values, grid)
    man = {
        "command": "simulate",
        "seed": args.seed,
        "M": ph.M,
        "nx": grid.nx,
        "ny": grid.ny,
        "alpha_true": "file" if args.scene is not None else args.background_alpha,
        "beta_true": beta,
    }
    man.update(_provenance(args))
    sio.atomic_write_text(args.out / "manifest.txt", sio.format_manifest(man))
    print(f"wrote {ph.M} measurements on a {grid.nx}x{grid.ny} grid to {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    _check_input(args.input)
    ph, grid = sio.read_phase_history(args.input)
    if args.grid is not None and args.grid != grid:
        raise ValueError(f"--grid {args.grid.nx}x{args.grid.ny} does not match the file ({grid.nx}x{grid.ny})")
    op = NufftOperator(grid, ph.coords)
    man = {"command": f"reconstruct {args.mode}", "input": str(args.input)}

    if args.mode == "gibbs":
        cfg = GibbsConfig(
            n_chains=args.chains,
            batch_length=args.batch_length,
            rhat_tol=args.rhat_tol,
            max_batches=args.max_batches,
            init_policy=args.init,
            seed=args.seed,
            thin=args.thin,
        )
        cfg.validate()
        store = run_chains(ph, op, cfg)
        args.out.mkdir(parents=True, exist_ok=True)
        man.update(
            seed=args.seed,
            converged=str(bool(store.converged)).lower(),
            n_batches=store.n_batches,
            total_steps=store.total_steps,
            rhat_max=f"{store.report.max_rhat:.6g}",
        )
        man.update(_provenance(args))
        sio.write_store(args.out, store, man)
        sio.atomic_write_text(args.out / "rhat.txt", store.report.summary())
        print(f"converged={man['converged']} rhat_max={man['rhat_max']} samples={store.n_samples}")
        return 0

    if args.mode == "ml":
        img = ml_image(ph, op)
    else:
        cfg = L1Config(lam=args.lam, step=args.step, max_iters=args.max_iters, rel_tol=args.rel_tol)
        cfg.validate()
        img = l1_reconstruct(ph, op, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    sio.write_image(args.out / "image.csv", img.values, grid)
    man.update(_provenance(args))
    sio.atomic_write_text(args.out / "manifest.txt", sio.format_manifest(man))
    print(f"wrote {args.out / 'image.csv'}")
    return 0


def cmd_summarize(args) -> int:
    if not args.store.is_dir():
        raise FileNotFoundError(f"store directory not found: {args.store}")
    store = sio.read_store(args.store)
    summ = summarize(store)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    grid = store.grid
    write_pgm(out / "mean.pgm", to_db(summ.mean_f, grid=grid))
    write_pgm(out / "var.pgm", variance_db(summ.var_f, grid))
    lines = ["#sar-alpha-v1", f"{grid.nx},{grid.ny}", "alpha_mean,inv_alpha_mean"]
    lines += [f"{sio._fmt(a)},{sio._fmt(1.0 / a)}" for a in summ.mean_alpha]
    sio.atomic_write_text(out / "alpha_mean.csv", "\n".join(lines) + "\n")
    edges, counts = beta_histogram(summ.beta_samples, args.bins)
    hist = ["bin_left_edge,count"] + [f"{sio._fmt(e)},{c}" for e, c in zip(edges[:-1], counts)]
    sio.atomic_write_text(out / "beta_hist.csv", "\n".join(hist) + "\n")
    sio.write_image(out / "mean.csv", summ.mean_f, grid)
    n_frames = 0
    if not args.no_frames:
        n_frames = len(export_movie_frames(store, out / "frames"))
    man = {
        "command": "summarize",
        "store": str(args.store),
        "sample_count": summ.sample_count,
        "beta_mean": sio._fmt(np.mean(summ.beta_samples)),
        "frames": n_frames,
    }
    man.update(_provenance(args))
    sio.atomic_write_text(out / "manifest.txt", sio.format_manifest(man))
    print(f"summarized {summ.sample_count} samples into {out}")
    return 0


def cmd_check(args) -> int:
    if not args.store.is_dir():
        raise FileNotFoundError(f"store directory not found: {args.store}")
    report = check_all(sio.read_store(args.store), args.rhat_tol)
    sys.stdout.write(report.summary())
    return 0


def _leaf_parsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                yield from _leaf_parsers(child)
            return
    yield parser


def _apply_config(parser, argv):
    """Install values from ``--config`` as parser defaults, so explicit flags still win.

    Non-boolean values pass through argparse's type conversion like flags do.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        try:
            overrides = json.loads(known.config.read_text())
        except (OSError, ValueError) as e:
            parser.error(f"cannot read config {known.config}: {e}")
        if not isinstance(overrides, dict):
            parser.error("config file must hold a JSON object")
        leaves = list(_leaf_parsers(parser))
        for key, val in overrides.items():
            dest = key.replace("-", "_")
            if not isinstance(val, bool) and val is not None:
                val = str(val)
            hit = False
            for leaf in leaves:
                if any(a.dest == dest for a in leaf._actions) and dest not in ("config", "help"):
                    leaf.set_defaults(**{dest: val})
                    hit = True
            if not hit:
                parser.error(f"unknown config key {key!r}")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError, FloatingPointError) as e:
        print(f"sarbayes: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
