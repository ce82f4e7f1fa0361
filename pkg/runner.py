#!/usr/bin/env python3
"""
Toeplitz exponential toolkit - command-line runner

Subcommands:
    expm        exp(tridiag(a, b, c)) by the Bessel method, exactly, or by the dense oracle
    anti        exp of the anti-tridiagonal matrix J tridiag(a, b, a)
    block       exp(H_n kron N + I_n kron M) from the Phi_k quadrature
    bench       method vs dense-oracle timings
    heat        heat-equation trajectories, error tables and Crank-Nicolson comparisons
    bandselect  bandwidth selection and error budget
    sweep       error-vs-n and error-vs-d tables

Complex values use the ``re+imj`` form (``2``, ``-2+1j``, ``0.5-3j``). Write
values with a leading minus and an imaginary part as ``-b=-2+1j``.

Usage:
    python runner.py [--config config.json] [--out DIR] [--format csv|json] <command> ...

Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from common.config import load_config, setup_logging
from common.errors import InvalidArgumentError, NumericOverflowError, StabilityError, ToeplitzExpmError
from exponentials.block_toeplitz import expm_block_tridiag
from exponentials.spectral_oracle import expm_dense_small, expm_tridiag_exact
from exponentials.toeplitz_bessel import (MODES, approx_error_bound, expm_anti_tridiag,
                                          anti_tridiag_dense, expm_tridiag, select_bandwidth,
                                          similarity_parameters)
from reports import benchmarks
from reports.report_generator import ReportGenerator, RunReport
from solvers.heat import (HeatConfig, crank_nicolson_1d, merge_heat_settings, solve,
                          write_diagnostics_csv, write_trajectory_csv, write_trajectory_json)
from structures.matrices import BandMatrix, TridiagSpec
from structures.serialization import parse_complex, write_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

HEAT_FLAGS = ("dims", "J", "dx", "mu", "dt", "steps", "band", "band_tol", "initial",
              "propagator", "diffusivity")


def _dense(m):
    return m.to_dense() if isinstance(m, BandMatrix) else m


def _inf_norm(m) -> float:
    return float(np.max(np.sum(np.abs(_dense(m)), axis=1)))


class ToeplitzExpmRunner:
    def __init__(self, config_path: Optional[str] = "config.json", output_dir: Optional[str] = None,
                 fmt: str = "csv", tol: Optional[float] = None, seed: int = 0):
        self.config = load_config(config_path)
        setup_logging(self.config)
        if output_dir is not None:
            self.config["output"]["output_dir"] = output_dir
        self.fmt = fmt
        self.tol = tol if tol is not None else float(self.config["numerics"]["tol"])
        self.seed = seed
        self.bessel_options = dict(self.config["numerics"].get("bessel", {}))
        self.block_options = dict(self.config["numerics"].get("block", {}))

        self.report_generator = ReportGenerator(
            output_dir=self.config["output"]["output_dir"],
            config=self.config
        )

        self.logger = logging.getLogger(__name__)

    def _finish(self, report: RunReport) -> RunReport:
        report.outputs.update(self.report_generator.generate_reports(report))
        return report

    def _write_matrix(self, report: RunReport, matrix) -> str:
        path = self.report_generator.path_for(report, self.fmt, stamp=f"{report.stamp()}_matrix")
        write_matrix(path, matrix, self.fmt)
        return str(path)

    def cmd_expm(self, a, b, c, n: int, mode: str = "bessel", band: Optional[int] = None,
                 compare: Optional[str] = None, check_positivity: bool = False) -> RunReport:
        spec = TridiagSpec(a, b, c, n)
        report = RunReport("expm", params={"a": spec.a, "b": spec.b, "c": spec.c, "n": n, "mode": mode,
                                           "band": band, "compare": compare}, seed=self.seed)
        self.logger.info(f"exp(tridiag({spec.a}, {spec.b}, {spec.c})), n={n}, mode={mode}, band={band}")
        result = expm_tridiag(spec, mode=mode, d=band, **self.bessel_options)
        report.outputs["matrix"] = self._write_matrix(report, result)

        if spec.a * spec.c != 0:
            z, _ = similarity_parameters(spec)
            report.metrics["approx_bound"] = approx_error_bound(spec.b, z, n)
        if compare is not None:
            other = expm_tridiag(spec, mode=compare, **self.bessel_options)
            report.metrics["error_inf"] = _inf_norm(_dense(result) - other)
            report.metrics["reference_norm_inf"] = _inf_norm(other)
        if check_positivity:
            dense = _dense(result)
            report.metrics["negative_entries"] = int(np.count_nonzero(dense.real < 0))
            report.metrics["oracle_negative_fraction"] = benchmarks.negative_fraction(
                expm_tridiag_exact(spec))
            report.metrics["pade_negative_fraction"] = benchmarks.negative_fraction(
                expm_dense_small(spec.to_dense()))
        return self._finish(report)

    def cmd_anti(self, a, b, n: int, compare: bool = False) -> RunReport:
        report = RunReport("anti", params={"a": complex(a), "b": complex(b), "n": n}, seed=self.seed)
        result = expm_anti_tridiag(a, b, n, **self.bessel_options)
        report.outputs["matrix"] = self._write_matrix(report, result)
        if compare:
            report.metrics["error_inf"] = _inf_norm(result - expm_dense_small(anti_tridiag_dense(a, b, n)))
        return self._finish(report)

    def cmd_block(self, z, n: int, t1: Optional[int] = None, t2: Optional[int] = None,
                  block_size: Optional[int] = None, compare: bool = False) -> RunReport:
        if block_size is None:
            m_block, n_block = benchmarks.EXAMPLE_M, benchmarks.EXAMPLE_N
        else:
            m_block, n_block = benchmarks.random_blocks(block_size, self.seed)
        report = RunReport("block", params={"z": complex(z), "n": n, "t1": t1, "t2": t2,
                                            "block_size": block_size}, seed=self.seed)
        options = {k: v for k, v in self.block_options.items()
                   if k in ("t1_start", "t1_max", "phi_tol", "t2_tol")}
        rep = expm_block_tridiag(m_block, n_block, z, n, t1=t1, t2=t2, **options)
        result = rep.materialize()
        report.outputs["matrix"] = self._write_matrix(report, result)
        report.metrics.update({"t1": rep.t1, "t2": rep.t2,
                               "stabilization_residual": rep.stabilization_residual})
        if compare:
            oracle = expm_dense_small(benchmarks.block_dense(m_block, n_block, z, n))
            report.metrics["error_inf"] = _inf_norm(result - oracle)
            report.metrics["reference_norm_inf"] = _inf_norm(oracle)
        return self._finish(report)

    def cmd_bench(self, family: str, sizes: List[int], trials: Optional[int] = None,
                  a=4 - 3j, b=1j, c=-2 + 1j, z=1.0) -> RunReport:
        bench_config = self.config.get("bench", {})
        trials = int(bench_config.get("trials", 3)) if trials is None else trials
        cap = float(bench_config.get("dense_cap_mb", 2048))
        report = RunReport("bench", params={"family": family, "sizes": list(sizes), "trials": trials,
                                            "a": complex(a), "b": complex(b), "c": complex(c)},
                           seed=self.seed)
        if family == "tridiag":
            rows = benchmarks.bench_tridiag(a, b, c, sizes, trials=trials, tol=self.tol, dense_cap_mb=cap)
        elif family == "block":
            rows = benchmarks.bench_block(benchmarks.EXAMPLE_M, benchmarks.EXAMPLE_N, z, sizes,
                                          trials=trials, dense_cap_mb=cap)
        else:
            raise InvalidArgumentError(f"family must be 'tridiag' or 'block', got {family!r}")
        report.outputs["data"] = self._write_rows(report, rows, benchmarks.BENCH_FIELDS)
        report.metrics["rows"] = len(rows)
        if rows:
            report.metrics["ratio_trend_increasing"] = benchmarks.trend_holds(rows)
        return self._finish(report)

    def _write_rows(self, report: RunReport, rows, field_names) -> str:
        if self.fmt == "json":
            path = self.report_generator.path_for(report, "json", stamp=f"{report.stamp()}_data")
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(rows, f, indent=2)
            return str(path)
        path = self.report_generator.path_for(report, "csv", stamp=f"{report.stamp()}_data")
        return str(benchmarks.write_rows_csv(path, rows, field_names))

    def heat_config(self, preset: Optional[str] = None, config_file: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> HeatConfig:
        preset_data: Dict[str, Any] = {}
        if preset is not None:
            presets = self.config.get("heat", {})
            if preset not in presets:
                raise InvalidArgumentError(f"unknown heat preset {preset!r}; available: {sorted(presets)}")
            preset_data = presets[preset]
        file_data = HeatConfig.from_file(config_file).to_dict() if config_file is not None else None
        return HeatConfig.from_dict(merge_heat_settings(preset_data, file_data, overrides))

    def cmd_heat(self, cfg: HeatConfig, emit: str = "errors") -> RunReport:
        report = RunReport("heat", params={**cfg.to_dict(), "emit": emit}, seed=self.seed)
        trajectory = solve(cfg)
        runs = {cfg.propagator: trajectory}
        if emit == "comparison":
            if cfg.dims != 1:
                raise InvalidArgumentError("Crank-Nicolson comparison is available in 1D only")
            runs["cn"] = crank_nicolson_1d(cfg)

        if emit == "trajectory":
            path = self.report_generator.path_for(report, self.fmt, stamp=f"{report.stamp()}_trajectory")
            if self.fmt == "json":
                write_trajectory_json(path, trajectory)
            else:
                write_trajectory_csv(path, trajectory)
            report.outputs["trajectory"] = str(path)
        elif emit in ("errors", "comparison"):
            path = self.report_generator.path_for(report, "csv", stamp=f"{report.stamp()}_diagnostics")
            report.outputs["diagnostics"] = str(write_diagnostics_csv(path, runs))
        else:
            raise InvalidArgumentError(f"emit must be trajectory, errors or comparison, got {emit!r}")

        for label, run in runs.items():
            report.metrics[f"{label}_min_entry"] = float(np.min(run.diagnostics["min_entry"]))
            if "error_inf" in run.diagnostics:
                report.metrics[f"{label}_max_error_inf"] = float(np.max(run.diagnostics["error_inf"]))
        report.metrics["mu"] = list(cfg.mus) if cfg.dims == 2 else cfg.mu
        return self._finish(report)

    def cmd_bandselect(self, a, b, c, n: int, tol: Optional[float] = None) -> RunReport:
        spec = TridiagSpec(a, b, c, n)
        tol = self.tol if tol is None else tol
        budget = select_bandwidth(spec, tol)
        report = RunReport("bandselect", params={"a": spec.a, "b": spec.b, "c": spec.c, "n": n,
                                                 "tol": tol}, seed=self.seed)
        report.metrics.update({"selected_d": budget.selected_d, "band_bound": budget.band_bound,
                               "approx_bound": budget.approx_bound, "satisfiable": budget.satisfiable})
        return self._finish(report)

    def cmd_sweep(self, kind: str, a, b, c, sizes: Optional[List[int]] = None, n: int = 500,
                  d_range: Optional[List[int]] = None, parallel: bool = False) -> RunReport:
        report = RunReport("sweep", params={"kind": kind, "a": complex(a), "b": complex(b), "c": complex(c),
                                            "sizes": sizes, "n": n, "d": d_range}, seed=self.seed)
        if kind == "order":
            rows = benchmarks.order_sweep(a, b, c, sizes or [10, 25, 50, 100, 200], parallel=parallel)
            fields_ = benchmarks.ORDER_FIELDS
        elif kind == "band":
            rows = benchmarks.band_sweep(a, b, c, n, d_range or list(range(2, 11)), parallel=parallel)
            fields_ = benchmarks.BAND_FIELDS
        else:
            raise InvalidArgumentError(f"sweep kind must be 'order' or 'band', got {kind!r}")
        report.outputs["data"] = self._write_rows(report, rows, fields_)
        report.metrics["within_bound"] = all(r["error"] <= max(r["bound"], 1e-12) for r in rows)
        return self._finish(report)


def _int_list(text: str) -> List[int]:
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected integers like '10,20' or '2:10', got {text!r}") from e


def _band_value(text: str):
    values = _int_list(text)
    return values[0] if len(values) == 1 else tuple(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Structured exponentials of tridiagonal Toeplitz matrices")
    parser.add_argument("--config", default="config.json", help="Configuration file path")
    parser.add_argument("--out", help="Output directory (overrides config)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="Data file format")
    parser.add_argument("--tol", type=float, help="Band truncation tolerance (overrides config)")
    parser.add_argument("--seed", type=int, default=0, help="Seed for randomized inputs")
    parser.add_argument("--verbose", "-v", action="store_true", help="Verbose output")
    sub = parser.add_subparsers(dest="command", required=True)

    def coefficients(p, names=("a", "b", "c")):
        defaults = {"a": "1", "b": "0", "c": "1"}
        for name in names:
            p.add_argument(f"-{name}", type=parse_complex, default=parse_complex(defaults[name]),
                           help=f"{name} in re+imj form")

    p = sub.add_parser("expm", help="exp(tridiag(a, b, c))")
    coefficients(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--mode", choices=MODES, default="bessel")
    p.add_argument("--band", type=int, help="Half-bandwidth of the written result")
    p.add_argument("--compare", choices=MODES, help="Second mode to compare against")
    p.add_argument("--check-positivity", action="store_true")

    p = sub.add_parser("anti", help="exp(J tridiag(a, b, a))")
    coefficients(p, ("a", "b"))
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--compare", action="store_true", help="Compare with the dense oracle")

    p = sub.add_parser("block", help="Block tridiagonal exponential")
    p.add_argument("-z", type=parse_complex, default=1.0)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--t1", type=int)
    p.add_argument("--t2", type=int)
    p.add_argument("--block-size", type=int, help="Random m x m blocks instead of the 3 x 3 example pair")
    p.add_argument("--compare", action="store_true")

    p = sub.add_parser("bench", help="Timing against the dense oracle")
    p.add_argument("--family", choices=["tridiag", "block"], default="tridiag")
    p.add_argument("--sizes", type=_int_list, required=True)
    p.add_argument("--trials", type=int)
    coefficients(p)

    p = sub.add_parser("heat", help="Heat equation runs")
    p.add_argument("--preset", help="Named preset from the config 'heat' section")
    p.add_argument("--heat-config", help="JSON or key = value file")
    p.add_argument("--emit", choices=["trajectory", "errors", "comparison"], default="errors")
    p.add_argument("--dims", type=int)
    p.add_argument("--J", type=_band_value)
    p.add_argument("--dx", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--band", type=_band_value)
    p.add_argument("--band-tol", type=float)
    p.add_argument("--initial", choices=["sine", "spike"])
    p.add_argument("--propagator", choices=["bessel", "oracle"])
    p.add_argument("--diffusivity", type=float)

    p = sub.add_parser("bandselect", help="Smallest half-bandwidth meeting --tol")
    coefficients(p)
    p.add_argument("-n", type=int, required=True)

    p = sub.add_parser("sweep", help="Error tables against the bounds")
    p.add_argument("--kind", choices=["order", "band"], required=True)
    coefficients(p)
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("-n", type=int, default=500)
    p.add_argument("--d-range", type=_int_list)
    p.add_argument("--parallel", action="store_true", help="Evaluate rows concurrently (untimed)")
    return parser


def dispatch(runner: ToeplitzExpmRunner, args: argparse.Namespace) -> RunReport:
    if args.command == "expm":
        return runner.cmd_expm(args.a, args.b, args.c, args.n, mode=args.mode, band=args.band,
                               compare=args.compare, check_positivity=args.check_positivity)
    if args.command == "anti":
        return runner.cmd_anti(args.a, args.b, args.n, compare=args.compare)
    if args.command == "block":
        return runner.cmd_block(args.z, args.n, t1=args.t1, t2=args.t2,
                                block_size=args.block_size, compare=args.compare)
    if args.command == "bench":
        return runner.cmd_bench(args.family, args.sizes, trials=args.trials, a=args.a, b=args.b, c=args.c)
    if args.command == "heat":
        overrides = {name: getattr(args, name) for name in HEAT_FLAGS}
        cfg = runner.heat_config(args.preset, args.heat_config, overrides)
        return runner.cmd_heat(cfg, emit=args.emit)
    if args.command == "bandselect":
        return runner.cmd_bandselect(args.a, args.b, args.c, args.n)
    return runner.cmd_sweep(args.kind, args.a, args.b, args.c, sizes=args.sizes, n=args.n,
                            d_range=args.d_range, parallel=args.parallel)


def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logger = logging.getLogger(__name__)
    try:
        runner = ToeplitzExpmRunner(args.config, output_dir=args.out, fmt=args.format,
                                    tol=args.tol, seed=args.seed)
        # Override logging level if verbose
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        report = dispatch(runner, args)
    except (InvalidArgumentError, FileNotFoundError) as e:
        logger.error(f"{e}")
        print(f"error: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    except (NumericOverflowError, StabilityError, FloatingPointError, ToeplitzExpmError) as e:
        logger.error(f"Numeric failure: {e}")
        print(f"numeric failure: {e}", file=sys.stderr)
        sys.exit(EXIT_NUMERIC)

    for name, value in report.metrics.items():
        print(f"{name}: {value}")
    for name, path in report.outputs.items():
        print(f"{name}: {path}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
