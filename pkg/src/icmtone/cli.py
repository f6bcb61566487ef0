"""Command-line tone mapper: HDR file in, gamma-encoded PNG out."""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import hdr_io
from .edges import DEFAULT_EDGE_THRESHOLD, DEFAULT_LAMBDA_BOOST, DEFAULT_RAMP_RADIUS, EdgeParams
from .errors import DegenerateInputError, HdrFormatError, NumericalError
from .reference import DEFAULT_BETA, DEFAULT_G_FLOOR, DEFAULT_GAMMA_EXP, TroParams
from .solver import (
    ASYNC,
    DEFAULT_BASE_LAMBDA,
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    SYNC,
    CompressParams,
    SolverConfig,
    compress_detailed,
    default_threads,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class TmoConfig:
    input: Path
    output: Path
    beta: float = DEFAULT_BETA
    gamma_exp: float = DEFAULT_GAMMA_EXP
    window_radius: int | None = None
    base_lambda: float = DEFAULT_BASE_LAMBDA
    edge_threshold: float = DEFAULT_EDGE_THRESHOLD
    ramp_radius: int = DEFAULT_RAMP_RADIUS
    lambda_boost: float = DEFAULT_LAMBDA_BOOST
    edge_bound: bool = True
    connectivity: int = 4
    scheme: str = SYNC
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    display_gamma: float = hdr_io.DEFAULT_DISPLAY_GAMMA
    floor_ratio: float = hdr_io.DEFAULT_FLOOR_RATIO
    g_floor: float = DEFAULT_G_FLOOR
    threads: int | None = None
    dump_reference: Path | None = None
    dump_maps: Path | None = None
    trace_csv: Path | None = None

    def compress_params(self) -> CompressParams:
        """Validated parameter bundle; raises ValueError on out-of-range values."""
        return CompressParams(
            tro=TroParams(self.beta, self.gamma_exp, self.window_radius, self.g_floor),
            edge=EdgeParams(self.edge_threshold, self.ramp_radius, self.lambda_boost, self.edge_bound),
            base_lambda=self.base_lambda,
            solver=SolverConfig(self.scheme, self.max_iters, self.tol),
            connectivity=self.connectivity,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="icmtone",
        description="Compress an HDR image (Radiance .hdr or PFM) to an 8-bit PNG by "
        "contrast-preserving regularized least squares solved with ICM.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--input", "-i", type=Path, required=True, help="HDR input file (.hdr/.pic or .pfm)")
    p.add_argument("--output", "-o", type=Path, required=True, help="PNG output path")

    tro = p.add_argument_group("reference tone curve")
    tro.add_argument("--beta", type=float, default=DEFAULT_BETA,
                     help="beta: global key of the logarithmic reference curve")
    tro.add_argument("--gamma", dest="gamma_exp", type=float, default=DEFAULT_GAMMA_EXP,
                     help="gamma: exponent applied to the local geometric-mean surround")
    tro.add_argument("--window", dest="window_radius", type=int, default=None,
                     help="surround window radius in pixels (default max(8, min(w,h)/32))")
    tro.add_argument("--g-floor", type=float, default=DEFAULT_G_FLOOR,
                     help="floor on the reference curve before taking its log")

    reg = p.add_argument_group("objective and halo control")
    reg.add_argument("--lambda", dest="base_lambda", type=float, default=DEFAULT_BASE_LAMBDA,
                     help="lambda: regularization weight pulling the output towards the reference")
    reg.add_argument("--edge-threshold", type=float, default=DEFAULT_EDGE_THRESHOLD,
                     help="strong-edge threshold on neighbor log-luminance difference (nats)")
    reg.add_argument("--ramp-radius", type=int, default=DEFAULT_RAMP_RADIUS,
                     help="edge influence radius in pixels; 0 disables both edge mechanisms")
    reg.add_argument("--lambda-boost", type=float, default=DEFAULT_LAMBDA_BOOST,
                     help="lambda multiplier on edge pixels (dark-halo control); 1 disables")
    reg.add_argument("--no-edge-bound", dest="edge_bound", action="store_false",
                     help="keep the output upper bound at 0 near edges (disables bright-halo control)")
    reg.add_argument("--connectivity", type=int, choices=(4, 8), default=4,
                     help="adjacent pairs matched by the contrast term")

    sol = p.add_argument_group("solver")
    sol.add_argument("--scheme", choices=(SYNC, ASYNC), default=SYNC,
                     help="ICM updating: synchronous (parallel) or asynchronous raster")
    sol.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS, help="maximum number of sweeps")
    sol.add_argument("--tol", type=float, default=DEFAULT_TOL,
                     help="stop when the largest per-pixel change falls below this (nats)")
    sol.add_argument("--threads", type=int, default=None,
                     help="worker threads for synchronous sweeps (default: all cores)")

    out = p.add_argument_group("input/output")
    out.add_argument("--display-gamma", type=float, default=hdr_io.DEFAULT_DISPLAY_GAMMA,
                     help="display gamma used when encoding the PNG")
    out.add_argument("--floor-ratio", type=float, default=hdr_io.DEFAULT_FLOOR_RATIO,
                     help="luminance floor as a fraction of the peak")
    out.add_argument("--dump-reference", type=Path, default=None, metavar="PFM",
                     help="write the reference luminance exp(R) as a grayscale PFM")
    out.add_argument("--dump-maps", type=Path, default=None, metavar="PREFIX",
                     help="write PREFIX_edges.pfm, PREFIX_lambda.pfm and PREFIX_upper.pfm")
    out.add_argument("--trace-csv", type=Path, default=None, metavar="CSV",
                     help="write iteration,objective,max_delta for every sweep")
    return p


def parse_flags(argv: list[str] | None = None) -> TmoConfig:
    ns = build_parser().parse_args(argv)
    cfg = TmoConfig(**vars(ns))
    try:
        cfg.compress_params()
        if not cfg.display_gamma > 0:
            raise ValueError("display gamma must be positive")
        if not 0 < cfg.floor_ratio < 1:
            raise ValueError("floor ratio must lie in (0, 1)")
        if cfg.threads is not None and cfg.threads < 1:
            raise ValueError("threads must be >= 1")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _write_trace(path: Path, report) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "max_delta"])
        for k, (obj, delta) in enumerate(zip(report.objective_trace, report.delta_trace), start=1):
            writer.writerow([k, repr(obj), repr(delta)])


def run_pipeline(cfg: TmoConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    img = hdr_io.load_hdr_file(cfg.input)
    y_in = hdr_io.extract_luminance(img, cfg.floor_ratio)
    threads = cfg.threads if cfg.threads is not None else default_threads()
    result = compress_detailed(y_in, cfg.compress_params(), threads=threads)
    ldr = hdr_io.recombine_color(img, y_in, result.y_out)
    hdr_io.write_display(ldr, cfg.display_gamma, cfg.output)

    if cfg.dump_reference is not None:
        cfg.dump_reference.write_bytes(hdr_io.encode_pfm(np.exp(result.reference)))
    if cfg.dump_maps is not None:
        prefix = str(cfg.dump_maps)
        Path(prefix + "_edges.pfm").write_bytes(hdr_io.encode_pfm(result.edges.astype(np.float64)))
        Path(prefix + "_lambda.pfm").write_bytes(hdr_io.encode_pfm(result.maps.lambda_map))
        Path(prefix + "_upper.pfm").write_bytes(hdr_io.encode_pfm(result.maps.upper_bound))
    if cfg.trace_csv is not None:
        _write_trace(cfg.trace_csv, result.report)

    rep = result.report
    status = "converged" if rep.converged else "not converged"
    if rep.fallback_at is not None:
        status += f", async after sweep {rep.fallback_at}"
    print(
        f"{cfg.output}: {img.width}x{img.height}, {rep.iterations_run} sweeps "
        f"({cfg.scheme}, {status}), objective {rep.final_objective:.6g}, "
        f"{time.perf_counter() - start:.3f} s",
        file=stdout,
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_flags(argv)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"icmtone: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run_pipeline(cfg)
    except NumericalError as exc:
        print(f"icmtone: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, HdrFormatError, DegenerateInputError) as exc:
        print(f"icmtone: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
