"""Command-line front end.

Subcommands: simulate, estimate, denoise, evaluate, baseline. Exit status is
0 on success, 2 for bad input and 3 when the data do not determine the
requested estimate.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import formats, plotting
from .budda import BuddaConfig
from .dca import DcaConfig
from .empirical import joint_empirical
from .errors import EstimationError, InputError
from .mca import (
    ambiguous_distortion,
    build_mca,
    colour_agnostic_baseline,
    labeling_distortion,
    majority_decode,
)
from .model import Channel, DependentComponentSystem, DistortionMeasure, Distribution, bsc
from .pipeline import denoise_budda, denoise_genie, denoise_udda
from .sim import MAX_SEED, RNG_ALGORITHM, corrupt, make_rng, synthesize_source

EXIT_INPUT = 2
EXIT_DEGENERATE = 3

logger = logging.getLogger("unidenoise")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a probability")
    return v


def _distortion(arg: str | None, L: int) -> DistortionMeasure:
    if arg is None or arg == "hamming":
        return DistortionMeasure.hamming(L)
    d = formats.read_distortion(arg)
    if d.L != L:
        raise InputError(f"distortion file is {d.L}x{d.L}, alphabet has {L} symbols")
    return d


def _truth_image(obs_dir: Path, manifest: dict):
    name = manifest.get("truth")
    if not name:
        return None
    path = obs_dir / name
    return formats.read_pbm(path).ravel() if path.exists() else None


def _manifest_system(manifest: dict) -> DependentComponentSystem | None:
    src, chans = manifest.get("true_source"), manifest.get("true_channels")
    if src is None or chans is None:
        return None
    channels = tuple(bsc(c) if isinstance(c, (int, float)) else Channel(c) for c in chans)
    return DependentComponentSystem(Distribution(src, tol=formats.FILE_TOL), channels)


def _aligned_truth(b_hat, b_true):
    b_hat, b_true = np.asarray(b_hat), np.asarray(b_true)
    flipped = 1.0 - b_true
    return flipped if np.abs(b_hat - flipped).max() < np.abs(b_hat - b_true).max() else b_true


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.image:
        img, lossy = formats.read_image(args.image)
        if lossy:
            logger.warning("%s is grayscale; thresholded at 50%%", args.image)
        shape = img.shape
        x = img.ravel()
        source_desc = {"image": str(args.image)}
    else:
        if args.p is None or args.n is None:
            raise InputError("give either --image or both --p and --n")
        width = args.width or args.n
        if args.n % width:
            raise InputError(f"--width {width} does not divide --n {args.n}")
        shape = (args.n // width, width)
        x = synthesize_source(Distribution.binary(args.p), args.n, args.seed, args.mode)
        source_desc = {"p": args.p, "mode": args.mode}

    if args.channels:
        channels = formats.read_channels(args.channels)
    elif args.random_bsc:
        rng = make_rng(args.seed ^ 0x9E3779B97F4A7C15)
        # keep |b - 1/2| >= 0.1 so every drawn channel is invertible
        draws = rng.uniform(0.1, 0.5, size=args.random_bsc)
        signs = rng.integers(0, 2, size=args.random_bsc)
        channels = [bsc(float(0.5 + (1 if s else -1) * u)) for u, s in zip(draws, signs)]
    else:
        raise InputError("give --channels FILE or --random-bsc K")
    if any(ch.L != 2 for ch in channels):
        raise InputError("PBM observations hold binary symbols only")

    # noise stream is keyed separately from the source stream
    obs = corrupt(x, channels, (args.seed + 1) % (MAX_SEED + 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_pbm(out / "truth.pbm", x.reshape(shape))
    true_channels = []
    for ch in channels:
        m = ch.matrix
        true_channels.append(float(m[0, 0]) if m[0, 0] == m[1, 1] else m.tolist())
    counts = np.bincount(x, minlength=2)
    manifest = {
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
        "source": source_desc,
        "truth": "truth.pbm",
        "true_source": (counts / counts.sum()).tolist(),
        "true_channels": true_channels,
    }
    formats.write_observations(out, obs, shape, manifest)
    if args.figure:
        panels = [("original", x.reshape(shape))]
        panels += [(f"copy {j + 1}", obs[:, j].reshape(shape)) for j in range(obs.shape[1])]
        plotting.image_grid(args.figure, panels)
    print(f"wrote {obs.shape[1]} copies of {obs.shape[0]} symbols to {out}")
    return 0


# -- estimate / denoise -------------------------------------------------------


def _dca_config(args) -> DcaConfig:
    if args.seed is None:
        raise InputError("--seed is required for --method dca")
    return DcaConfig(
        restarts=args.restarts, max_sweeps=args.max_sweeps, tolerance=args.tolerance, seed=args.seed
    )


def _budda_config(args) -> BuddaConfig:
    return BuddaConfig(epsilon=args.epsilon, estimator=args.estimator)


def _base_report(algorithm: str, seed, obs) -> dict:
    return {
        "algorithm": algorithm,
        "seed": seed,
        "n": int(obs.shape[0]),
        "K": int(obs.shape[1]),
        "p_hat": None,
        "b_hat": [],
        "branch": None,
        "residuals": None,
        "expected_distortion": None,
        "achieved_distortion_up_to_permutation": None,
        "runtime_ms": 0.0,
    }


def _system_fields(report: dict, system: DependentComponentSystem) -> None:
    report["p_hat"] = [float(v) for v in system.source.probs]
    if system.L == 2 and all(ch.matrix[0, 0] == ch.matrix[1, 1] for ch in system.channels):
        report["b_hat"] = [float(ch.matrix[0, 0]) for ch in system.channels]
    else:
        report["b_hat"] = [ch.matrix.tolist() for ch in system.channels]


def _estimate(args, obs, report: dict):
    """Fill the estimation part of ``report``; return the estimated system."""
    if args.method == "budda":
        from .budda import budda_estimate
        from .pipeline import budda_system

        est = budda_estimate(obs, _budda_config(args))
        system = budda_system(est)
        _system_fields(report, system)
        report["branch"] = est.branch
        report["estimator"] = est.estimator
        report["diagnostics"] = {
            "source_bias": est.source_bias,
            "conditional_bias": est.conditional_bias,
            "conditioning_copies": [c + 1 for c in est.conditioning],
            "clamped": list(est.clamped),
        }
        return system, est
    from .dca import dca_fit

    fit = dca_fit(joint_empirical(obs, 2), _dca_config(args))
    _system_fields(report, fit.system)
    report["residuals"] = {"l1": fit.residual_l1, "l2": fit.residual_l2}
    report["converged"] = fit.converged
    report["restarts_used"] = fit.restarts_used
    report["warnings"] = list(fit.warnings)
    for w in fit.warnings:
        logger.warning("%s", w)
    if fit.non_identifiable:
        logger.warning("fit flagged non-identifiable; recovered system may not be unique")
    return fit.system, fit


def cmd_estimate(args) -> int:
    t0 = time.perf_counter()
    obs, shape, manifest = formats.read_observations(args.obs)
    if args.method == "dca" and obs.shape[1] < 3:
        logger.warning("K=%d < 3: DCA cannot identify the system", obs.shape[1])
    seed = args.seed if args.method == "dca" else None
    report = _base_report(args.method, seed, obs)
    system, _ = _estimate(args, obs, report)
    report["expected_distortion"] = build_mca(system, _distortion(args.distortion, 2)).expected_distortion
    report["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    out = Path(args.out)
    formats.write_report(out, report)
    if report["b_hat"] and isinstance(report["b_hat"][0], float):
        formats.write_bsc_params(out.with_suffix(".csv"), report["b_hat"])
    if args.figure and isinstance(report["b_hat"][0], float):
        truth = manifest.get("true_channels")
        if truth and all(isinstance(v, (int, float)) for v in truth):
            truth = _aligned_truth(report["b_hat"], truth)
        else:
            truth = None
        plotting.channel_estimates(args.figure, report["b_hat"], truth)
    print(f"{args.method}: p_hat={np.round(report['p_hat'], 4).tolist()} b_hat={np.round(report['b_hat'], 4).tolist()}")
    return 0


def cmd_denoise(args) -> int:
    t0 = time.perf_counter()
    obs_dir = Path(args.obs)
    obs, shape, manifest = formats.read_observations(obs_dir)
    d = _distortion(args.distortion, 2)
    report = _base_report(args.method, args.seed if args.method == "dca" else None, obs)
    if args.method == "genie":
        system = formats.read_system(args.truth_system) if args.truth_system else _manifest_system(manifest)
        if system is None:
            raise InputError("--method genie needs --truth-system or a manifest with true parameters")
        result = denoise_genie(obs, system, d)
        _system_fields(report, system)
    elif args.method == "dca":
        if obs.shape[1] < 3:
            raise InputError(f"--method dca needs K >= 3 copies, got {obs.shape[1]}")
        result = denoise_udda(obs, 2, _dca_config(args), d)
        fit = result.details
        _system_fields(report, result.system)
        report["residuals"] = {"l1": fit.residual_l1, "l2": fit.residual_l2}
        report["converged"] = fit.converged
        report["warnings"] = list(fit.warnings)
        if fit.non_identifiable:
            logger.warning("DCA fit flagged non-identifiable; denoising anyway")
    else:
        result = denoise_budda(obs, _budda_config(args), d)
        _system_fields(report, result.system)
        report["branch"] = result.details.branch
        report["estimator"] = result.details.estimator
    report["expected_distortion"] = result.decoder.expected_distortion
    truth = _truth_image(obs_dir, manifest)
    if truth is not None:
        report["achieved_distortion_up_to_permutation"] = ambiguous_distortion(truth, result.estimate, d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    img = result.estimate.reshape(shape)
    formats.write_pbm(out / "denoised.pbm", img)
    formats.write_pbm(out / "denoised_inverted.pbm", 1 - img)
    report["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    formats.write_report(out / "report.json", report)
    if args.figure:
        panels = [("denoised", img), ("denoised, inverted", 1 - img)]
        if truth is not None:
            panels.insert(0, ("original", truth.reshape(shape)))
        plotting.image_grid(args.figure, panels, ncols=len(panels))
    achieved = report["achieved_distortion_up_to_permutation"]
    msg = f"{args.method}: expected distortion {report['expected_distortion']:.4f}"
    if achieved is not None:
        msg += f", achieved {achieved:.4f}"
    print(msg)
    return 0


# -- evaluate / baseline ------------------------------------------------------


def cmd_evaluate(args) -> int:
    truth = formats.read_pbm(args.truth)
    est = formats.read_pbm(args.estimate)
    if truth.shape != est.shape:
        raise InputError(f"image sizes differ: {truth.shape} vs {est.shape}")
    value = ambiguous_distortion(truth.ravel(), est.ravel(), _distortion(args.distortion, 2))
    if args.out:
        formats.write_json(args.out, {"distortion_up_to_permutation": value, "n": int(truth.size)})
    print(f"{value:.12g}")
    return 0


def cmd_baseline(args) -> int:
    t0 = time.perf_counter()
    obs_dir = Path(args.obs)
    obs, shape, manifest = formats.read_observations(obs_dir)
    system = formats.read_system(args.truth_system) if args.truth_system else _manifest_system(manifest)
    truth = _truth_image(obs_dir, manifest)
    d = DistortionMeasure.hamming(2)
    report = _base_report(f"baseline-{args.rule}", None, obs)
    if args.rule == "majority":
        estimate = majority_decode(obs)
        if system is not None:
            labels = majority_decode(np.indices((2,) * obs.shape[1]).reshape(obs.shape[1], -1).T)
            report["expected_distortion"] = labeling_distortion(system, labels.reshape((2,) * obs.shape[1]), d)
    else:
        if system is None:
            raise InputError("--rule colour-agnostic needs --truth-system or a manifest with true parameters")
        per_copy = [colour_agnostic_baseline(system.source, ch) for ch in system.channels]
        best = int(np.argmin(per_copy))
        report["per_copy_distortion"] = per_copy
        report["best_copy"] = best + 1
        report["expected_distortion"] = per_copy[best]
        estimate = obs[:, best]
    if system is not None:
        _system_fields(report, system)
    if truth is not None:
        report["achieved_distortion_up_to_permutation"] = ambiguous_distortion(truth, estimate, d)
    report["runtime_ms"] = (time.perf_counter() - t0) * 1e3
    formats.write_report(args.out, report)
    if args.image_out:
        formats.write_pbm(args.image_out, estimate.reshape(shape))
    print(f"{args.rule}: expected {report['expected_distortion']}, achieved {report['achieved_distortion_up_to_permutation']}")
    return 0


# -- parser -------------------------------------------------------------------


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--estimator", choices=["optimized", "paper"], default="optimized")
    p.add_argument("--epsilon", type=float, default=1e-6, help="degeneracy threshold")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--tolerance", type=float, default=1e-6, help="accepted L1 residual of the DCA fit")
    p.add_argument("--seed", type=_seed, help="restart seed (required for dca)")
    p.add_argument("--distortion", default="hamming", help="'hamming' or a JSON distortion matrix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unidenoise", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="corrupt a source with known channels")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--image", help="PBM (or PGM, thresholded) source image")
    src.add_argument("--p", type=_probability, help="source probability of symbol 0")
    p.add_argument("--n", type=int, help="number of source symbols (with --p)")
    p.add_argument("--width", type=int, help="image width for --p/--n sources")
    p.add_argument("--mode", choices=["exact", "iid"], default="exact")
    ch = p.add_mutually_exclusive_group()
    ch.add_argument("--channels", help="CSV (index,b00) or JSON channel file")
    ch.add_argument("--random-bsc", type=int, metavar="K", help="draw K random invertible BSCs")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True, help="observation directory")
    p.add_argument("--figure", help="PNG/PDF panel of the original and all copies")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate source and channels")
    p.add_argument("--obs", required=True)
    p.add_argument("--method", choices=["budda", "dca"], default="budda")
    _add_estimator_flags(p)
    p.add_argument("--out", required=True, help="report JSON path (a .csv of b_hat is written alongside)")
    p.add_argument("--figure", help="bar chart of the channel estimates")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("denoise", help="estimate, build the MCA decoder and decode")
    p.add_argument("--obs", required=True)
    p.add_argument("--method", choices=["budda", "dca", "genie"], default="budda")
    p.add_argument("--truth-system", help="JSON system for --method genie")
    _add_estimator_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--figure", help="panel of denoised and inverted images")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("evaluate", help="distortion up to symbol relabeling")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--distortion", default="hamming")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="majority vote or colour-agnostic single-copy decoding")
    p.add_argument("--obs", required=True)
    p.add_argument("--rule", choices=["majority", "colour-agnostic"], default="majority")
    p.add_argument("--truth-system")
    p.add_argument("--out", required=True)
    p.add_argument("--image-out", help="write the decoded image here")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
