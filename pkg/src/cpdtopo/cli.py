"""Command-line interface: run CPD or the SIMP baseline on a benchmark or a
problem file, writing VTK density, CSV convergence log, summary and figures."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import baseline, cpd, fileio, report
from .benchmarks import BENCHMARK_NAMES, BenchmarkSpec, generate_benchmark
from .errors import ParseError

log = logging.getLogger(__name__)

OUT_DIR_ENV = "CPDTOPO_OUT"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cpdtopo",
        description="Canonical penalty-duality 3-D topology optimization")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--benchmark", choices=BENCHMARK_NAMES,
                     help="built-in benchmark problem")
    src.add_argument("--problem", metavar="FILE", help="problem definition file")
    p.add_argument("--dims", metavar="NXxNYxNZ", type=_parse_dims,
                   help="override benchmark mesh dimensions, e.g. 60x20x4")
    p.add_argument("--method", choices=("cpd", "simp"), default="cpd")
    p.add_argument("--vc", type=float, help="target volume fraction")
    p.add_argument("--mu", type=float, help="volume reduction rate")
    p.add_argument("--beta", type=float, help="penalty perturbation parameter")
    p.add_argument("--omega1", type=float, help="inner dual tolerance")
    p.add_argument("--omega2", type=float, default=1e-4,
                   help="outer design-change tolerance")
    p.add_argument("--emin", type=float, default=1e-9,
                   help="void modulus relative to E")
    p.add_argument("--load-mag", type=float, default=1.0,
                   help="total applied load magnitude")
    p.add_argument("--hole-center", type=float, nargs=2, metavar=("CX", "CY"),
                   help="cantilever-hole cylinder center (x, y)")
    p.add_argument("--hole-radius", type=float, help="cantilever-hole cylinder radius")
    p.add_argument("--max-outer", type=int, default=200)
    p.add_argument("--simp-penal", type=float, default=3.0)
    p.add_argument("--out", metavar="DIR",
                   default=os.environ.get(OUT_DIR_ENV),
                   help=f"output directory (default from ${OUT_DIR_ENV})")
    p.add_argument("--no-figures", action="store_true",
                   help="skip matplotlib report figures")
    p.add_argument("--log-level", default="info",
                   choices=("debug", "info", "warning", "error"))
    return p


def _parse_dims(text):
    try:
        dims = tuple(int(t) for t in text.lower().split("x"))
        if len(dims) != 3:
            raise ValueError
        return dims
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --dims {text!r}, expected NXxNYxNZ")


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")

    if args.out is None:
        parser.error(f"--out is required (or set ${OUT_DIR_ENV})")
    if not os.path.isdir(args.out):
        parser.error(f"output directory {args.out!r} does not exist")

    try:
        if args.benchmark:
            spec = BenchmarkSpec(
                name=args.benchmark,
                dims=args.dims,
                vc=args.vc, mu=args.mu, beta=args.beta, omega1=args.omega1,
                load_magnitude=args.load_mag, E_min=args.emin,
                hole_center=tuple(args.hole_center) if args.hole_center else None,
                hole_radius=args.hole_radius)
            problem = generate_benchmark(spec)
            mu = spec.mu
            beta = spec.beta
            omega1 = spec.omega1
            vc = spec.vc
        else:
            problem = fileio.load_problem(args.problem)
            vc = args.vc if args.vc is not None else problem.vc
            mu = args.mu if args.mu is not None else 0.89
            beta = args.beta if args.beta is not None else 4000.0
            omega1 = args.omega1 if args.omega1 is not None else 1e-6
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    csv_path = os.path.join(args.out, "convergence.csv")
    t0 = time.perf_counter()
    try:
        with fileio.StreamingCsvLogger(csv_path) as stream:
            if args.method == "cpd":
                config = cpd.CpdConfig(mu=mu, beta=beta, vc=vc, omega1=omega1,
                                       omega2=args.omega2, max_outer=args.max_outer)
                result = cpd.run(problem, config, on_step=stream)
            else:
                simp_cfg = baseline.SimpConfig(penal=args.simp_penal,
                                               tol=args.omega2,
                                               max_iters=args.max_outer)
                import dataclasses
                problem = dataclasses.replace(problem, vc=vc)
                result = baseline.simp_run(problem, simp_cfg, on_step=stream)
    except (cpd.CpdFailure, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0

    mesh = problem.mesh
    fileio.write_vtk(os.path.join(args.out, "density.vtk"), result.rho, mesh)
    fileio.write_convergence_csv(csv_path, result.record)  # rewrite atomically
    vol_frac = float(np.mean(result.rho >= 0.5)) if args.method == "cpd" \
        else float(np.mean(result.rho))
    summary = {
        "method": args.method,
        "compliance": result.compliance,
        "volume_fraction": vol_frac,
        "iterations": len(result.record),
        "seconds": elapsed,
        "converged": result.record.converged,
    }

    def write_summary(fh):
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    fileio.atomic_write(os.path.join(args.out, "summary.json"), write_summary)
    if not args.no_figures:
        report.render_report(args.out, result.record, result.rho, mesh)

    print(f"{args.method}: compliance={result.compliance:.6g} "
          f"volume={vol_frac:.4f} iterations={len(result.record)} "
          f"time={elapsed:.1f}s -> {args.out}")
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
