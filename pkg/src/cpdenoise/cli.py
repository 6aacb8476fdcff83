"""Command-line interface.

Subcommands::

    cpdenoise add-noise INPUT OUTPUT --sigma S [--seed N]
    cpdenoise denoise INPUT OUTPUT --k K (--lambda L | --sigma S) [--history CSV] ...
    cpdenoise evaluate CLEAN NOISY DENOISED [--format csv|json]
    cpdenoise benchmark MANIFEST [--output CSV] [--jobs N]

Exit codes are listed in ``ExitCode``.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import imageio
from .core import CpdeError, ParameterError
from .cpde import LAMBDA_SCALE, CpdeParams, FidelitySign, SolverFailure, denoise
from .quality import NoiseSpec, add_gaussian_noise, encode_metric, evaluate
from .solver import SolverConfig

HISTORY_COLUMNS = ["step", "rel_change", "iters_u", "iters_v", "iters_I", "min_I", "max_I"]
METRIC_COLUMNS = ["psnr", "psnr_grad", "mssim", "isnr"]
BENCHMARK_COLUMNS = ["image", "sigma", "seed", "steps", "mssim", "psnr", "psnr_grad", "isnr", "error"]
NOISE_GENERATOR = "philox4x64+box-muller"


class ExitCode(enum.IntEnum):
    OK = 0
    ROW_FAILED = 1
    USAGE = 2
    IO = 3
    DATA = 4
    SOLVER = 5
    NOT_CONVERGED = 6


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    value = encode_metric(value) if isinstance(value, float) else value
    return repr(value) if isinstance(value, float) else str(value)


def _nonnegative(text: str) -> float:
    value = float(text)
    if not value >= 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite nonnegative number, got {text}")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite positive number, got {text}")
    return value


def _params_from(values: dict) -> CpdeParams:
    """Build parameters from flag/manifest values; ``lambda`` or ``sigma`` required."""
    if values.get("k") is None:
        raise UsageError("the diffusivity threshold k is required")
    if values.get("lambda") is not None:
        lam = float(values["lambda"])
    elif values.get("sigma"):
        lam = float(values.get("lambda_scale", LAMBDA_SCALE)) / float(values["sigma"]) ** 2
    else:
        raise UsageError("either lambda or a positive noise sigma is required")
    solver = SolverConfig(
        tol=float(values.get("solver_tol", 1e-8)),
        max_iter=int(values.get("solver_max_iter", 500)),
    )
    optional = {
        name: float(values[name])
        for name in ("tau", "xi", "phi", "psi", "eps", "h_cap", "intensity_range")
        if values.get(name) is not None
    }
    if values.get("max_steps") is not None:
        optional["max_steps"] = int(values["max_steps"])
    if values.get("fidelity_sign") is not None:
        optional["fidelity_sign"] = FidelitySign(values["fidelity_sign"])
    return CpdeParams(k=float(values["k"]), lam=lam, solver=solver, **optional)


def _describe(params: CpdeParams) -> str:
    return (
        f"tau={params.tau!r} xi={params.xi!r} phi={params.phi!r} psi={params.psi!r} "
        f"lambda={params.lam!r} k={params.k!r} eps={params.eps!r} h_cap={params.h_cap!r} "
        f"intensity_range={params.intensity_range!r} max_steps={params.max_steps} "
        f"solver_tol={params.solver.tol!r} fidelity_sign={params.fidelity_sign.value}"
    )


def cmd_add_noise(args) -> int:
    clean = imageio.load_image(args.input)
    noisy = add_gaussian_noise(clean, NoiseSpec(args.sigma, args.seed))
    imageio.save_image(args.output, noisy)
    meta = {"source": os.fspath(args.input), "sigma": args.sigma, "seed": args.seed,
            "generator": NOISE_GENERATOR}
    with open(os.fspath(args.output) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ExitCode.OK


def cmd_denoise(args) -> int:
    params = _params_from({
        "k": args.k, "lambda": args.lam, "sigma": args.sigma, "tau": args.tau, "xi": args.xi,
        "phi": args.phi, "psi": args.psi, "eps": args.eps, "h_cap": args.h_cap,
        "intensity_range": args.intensity_range, "max_steps": args.max_steps,
        "solver_tol": args.solver_tol, "fidelity_sign": args.fidelity_sign,
    })
    image = imageio.load_image(args.input)
    print(f"# cpdenoise denoise {_describe(params)}")
    result, history = denoise(image, params)
    imageio.save_image(args.output, result)
    if args.history:
        with open(args.history, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HISTORY_COLUMNS)
            for rec in history.records:
                writer.writerow([_fmt(getattr(rec, c)) for c in HISTORY_COLUMNS])
    last = history.records[-1].rel_change if history.records else float("nan")
    print(f"steps={history.steps} reason={history.reason} rel_change={last!r}")
    return ExitCode.OK if history.converged else ExitCode.NOT_CONVERGED


def cmd_evaluate(args) -> int:
    clean, noisy, denoised = (imageio.load_image(p) for p in (args.clean, args.noisy, args.denoised))
    report = evaluate(clean, noisy, denoised).encoded()
    if args.format == "json":
        print(json.dumps(report))
    else:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        writer.writerow([_fmt(report[c]) for c in METRIC_COLUMNS])
        sys.stdout.write(out.getvalue())
    return ExitCode.OK


def load_manifest(path) -> list[dict]:
    """Read a benchmark manifest.

    Either a JSON list of rows or ``{"defaults": {...}, "rows": [...]}``.
    Each row needs ``image`` and ``sigma``; ``seed`` defaults to 0 and
    model parameters (``k``, ``psi``, ``lambda``, ...) may come from the
    row or the defaults. Relative image paths resolve against the
    manifest's directory.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        defaults, rows = {}, doc
    else:
        defaults, rows = doc.get("defaults", {}), doc.get("rows", [])
    base = os.path.dirname(os.path.abspath(path))
    merged = []
    for row in rows:
        entry = {**defaults, **row}
        entry["path"] = os.path.join(base, entry["image"])
        merged.append(entry)
    return merged


def run_benchmark_row(row: dict) -> dict:
    out = {"image": row.get("image", ""), "sigma": row.get("sigma", ""), "seed": row.get("seed", 0),
           "steps": "", "mssim": "", "psnr": "", "psnr_grad": "", "isnr": "", "error": ""}
    try:
        sigma = float(row["sigma"])
        seed = int(row.get("seed", 0))
        clean = imageio.load_image(row["path"])
        noisy = add_gaussian_noise(clean, NoiseSpec(sigma, seed))
        if sigma == 0 and row.get("lambda") is None:
            # no noise and no explicit weight: nothing to remove
            result, steps = noisy, 0
        else:
            params = _params_from(row)
            result, history = denoise(noisy, params)
            steps = history.steps
        report = evaluate(clean, noisy, result)
        out.update(steps=steps, mssim=report.mssim, psnr=report.psnr,
                   psnr_grad=report.psnr_grad, isnr=report.isnr)
        if row.get("output"):
            imageio.save_image(os.path.join(os.path.dirname(row["path"]), row["output"]), result)
    except Exception as exc:  # recorded in-row, the run continues
        out["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return out


def cmd_benchmark(args) -> int:
    rows = load_manifest(args.manifest)
    if args.jobs > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_benchmark_row, rows))
    else:
        results = [run_benchmark_row(r) for r in rows]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCHMARK_COLUMNS)
    for res in results:
        writer.writerow([_fmt(res[c]) for c in BENCHMARK_COLUMNS])
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return ExitCode.ROW_FAILED if any(r["error"] for r in results) else ExitCode.OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpdenoise", description="Coupled-PDE image denoising.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("add-noise", help="add seeded Gaussian noise to an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--sigma", type=_nonnegative, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_add_noise)

    p = sub.add_parser("denoise", help="run the coupled PDE denoiser")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--k", type=_positive, required=True, help="diffusivity threshold")
    p.add_argument("--lambda", dest="lam", type=_nonnegative, help="fidelity weight")
    p.add_argument("--sigma", type=_positive, help=f"noise level; sets lambda = {LAMBDA_SCALE:g}/sigma^2")
    p.add_argument("--tau", type=_positive, default=0.1)
    p.add_argument("--xi", type=_positive, default=1.0)
    p.add_argument("--phi", type=_positive, default=1.0)
    p.add_argument("--psi", type=_nonnegative, default=1.0)
    p.add_argument("--eps", type=_positive, default=1e-4)
    p.add_argument("--h-cap", dest="h_cap", type=_positive, default=65025.0)
    p.add_argument("--intensity-range", dest="intensity_range", type=_positive, default=1.0,
                   help="divide gradients by this before thresholding with k")
    p.add_argument("--max-steps", dest="max_steps", type=int, default=500)
    p.add_argument("--solver-tol", dest="solver_tol", type=_positive, default=1e-8)
    p.add_argument("--fidelity-sign", dest="fidelity_sign",
                   choices=[s.value for s in FidelitySign], default=FidelitySign.CONTINUOUS.value)
    p.add_argument("--history", help="write the per-step history CSV here")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("evaluate", help="PSNR, PSNR_grad, MSSIM and ISNR of a denoised image")
    p.add_argument("clean")
    p.add_argument("noisy")
    p.add_argument("denoised")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="noise, denoise and evaluate every manifest row")
    p.add_argument("manifest")
    p.add_argument("--output", help="CSV path (default: standard output)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (UsageError, ParameterError) as exc:
        parser.error(str(exc))
    except SolverFailure as exc:
        print(f"cpdenoise: solver failure at step {exc.step}: {exc}", file=sys.stderr)
        return ExitCode.SOLVER
    except (OSError, imageio.ImageFormatError) as exc:
        print(f"cpdenoise: {exc}", file=sys.stderr)
        return ExitCode.IO
    except CpdeError as exc:
        print(f"cpdenoise: {exc}", file=sys.stderr)
        return ExitCode.DATA


if __name__ == "__main__":
    sys.exit(main())
