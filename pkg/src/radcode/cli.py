"""Batch front-end: JSON run configurations, synthesize / pareto / doppler /
validate / benchmark subcommands, machine-readable CSV/JSON outputs.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 validation
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, model, solver, validation
from .objective import ScalarizationParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

SCHEMA_VERSION = 1

_SCENARIO_DEFAULTS = dict(
    pulses=32, pri=250e-6, bandwidth=5e6, pulsewidth=1e-5, sample_step=1e-7,
    fast_samples=100, amplitude_power=1e-2, normalized_doppler=0.15,
    pfa=1e-6, interference=0.8,
)
_SOLVER_DEFAULTS = dict(beta=0.0, zeta=0.1, epsilon=1e-7, n_iter_max=6000,
                        mu1=None, mu2=None)
_SWEEP_DEFAULTS = dict(betas=[0.0, 0.0001, 0.001, 0.01, 0.1, 1.0],
                       zetas=[0.1, 0.4, 1.0], nu_points=1001)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: model.RadarScenario
    beta: float
    zeta: float
    epsilon: float
    n_iter_max: int
    mu1: float | None
    mu2: float | None
    reference: model.CodeVector
    reference_label: str
    betas: list[float]
    zetas: list[float]
    nu_points: int
    seed: int
    out_dir: Path
    out_format: str
    workers: int


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _load_reference(spec_obj, pulses: int) -> tuple[model.CodeVector, str]:
    if "file" in spec_obj:
        code = model.load_reference_code(spec_obj["file"])
        _require(len(code) == pulses,
                 f"reference file holds {len(code)} entries, scenario has {pulses} pulses")
        return code, f"file:{spec_obj['file']}"
    builtin = spec_obj.get("builtin", "p3")
    if builtin == "p3":
        return model.p3_code(pulses), "p3"
    if builtin == "generalized_barker":
        code = model.generalized_barker_code(pulses)
        return code, "generalized_barker"
    raise ConfigError(f"unknown builtin reference {builtin!r}")


def load_config(path: str | None, overrides: argparse.Namespace) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        _require(isinstance(raw, dict), "config root must be a JSON object")
        schema = raw.get("schema", SCHEMA_VERSION)
        _require(schema == SCHEMA_VERSION, f"unsupported config schema {schema!r}")

    scenario_cfg = {**_SCENARIO_DEFAULTS, **raw.get("scenario", {})}
    interference = scenario_cfg["interference"]
    if isinstance(interference, dict):
        _require("matrix" in interference, "scenario.interference object needs 'matrix'")
        scenario_cfg["interference"] = np.array(
            [[complex(cell["re"], cell["im"]) for cell in row]
             for row in interference["matrix"]])
    try:
        scenario = model.RadarScenario(**scenario_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}") from exc

    solver_cfg = {**_SOLVER_DEFAULTS, **raw.get("solver", {})}
    if overrides.beta is not None:
        solver_cfg["beta"] = overrides.beta
    if overrides.zeta is not None:
        solver_cfg["zeta"] = overrides.zeta

    sweep_cfg = {**_SWEEP_DEFAULTS, **raw.get("sweep", {})}
    output_cfg = {"dir": "results", "format": "csv", **raw.get("output", {})}
    if overrides.out is not None:
        output_cfg["dir"] = overrides.out
    if overrides.format is not None:
        output_cfg["format"] = overrides.format
    _require(output_cfg["format"] in ("csv", "json"),
             f"output format must be csv or json, got {output_cfg['format']!r}")

    seed = raw.get("seed", 20240101)
    if overrides.seed is not None:
        seed = overrides.seed
    _require(isinstance(seed, int) and 0 <= seed < 2 ** 64, "seed must be a 64-bit integer")

    reference, label = _load_reference(raw.get("reference", {"builtin": "p3"}),
                                       scenario.pulses)
    try:
        params = ScalarizationParams(beta=float(solver_cfg["beta"]),
                                     zeta=float(solver_cfg["zeta"]),
                                     mu1=solver_cfg["mu1"], mu2=solver_cfg["mu2"])
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    return RunConfig(
        scenario=scenario,
        beta=params.beta,
        zeta=params.zeta,
        epsilon=float(solver_cfg["epsilon"]),
        n_iter_max=int(solver_cfg["n_iter_max"]),
        mu1=solver_cfg["mu1"],
        mu2=solver_cfg["mu2"],
        reference=reference,
        reference_label=label,
        betas=[float(b) for b in sweep_cfg["betas"]],
        zetas=[float(z) for z in sweep_cfg["zetas"]],
        nu_points=int(sweep_cfg["nu_points"]),
        seed=seed,
        out_dir=Path(output_cfg["dir"]),
        out_format=output_cfg["format"],
        workers=max(1, overrides.workers),
    )


def _complex_record(value: complex) -> dict:
    return {"re": value.real, "im": value.imag}


def _code_records(code: model.CodeVector) -> list[dict]:
    return [_complex_record(v) for v in code.entries]


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_csv(path: Path, header_units: str, columns: list[str], rows: list[list]):
    with path.open("w", newline="") as handle:
        handle.write(header_units + "\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _solver_config(cfg: RunConfig, beta: float | None = None,
                   zeta: float | None = None) -> solver.SolverConfig:
    params = ScalarizationParams(beta=cfg.beta if beta is None else beta,
                                 zeta=cfg.zeta if zeta is None else zeta,
                                 mu1=cfg.mu1, mu2=cfg.mu2)
    return solver.SolverConfig(params=params, reference=cfg.reference,
                               epsilon=cfg.epsilon, n_iter_max=cfg.n_iter_max)


def _result_payload(result: solver.SynthesisResult) -> dict:
    return {
        "code": _code_records(result.code),
        "sinr": result.sinr,
        "sinr_db": result.sinr_db,
        "crb_tau_s2": result.crb.crb_tau,
        "crb_fd_hz2": result.crb.crb_fd,
        "det_crb": result.crb.det,
        "pd": result.pd,
        "papr": result.papr,
        "isl_db": result.isl_db,
        "upsilon_relax": result.upsilon_relax,
        "upsilon_relax_db": result.upsilon_relax_db,
        "upsilon_out": result.upsilon_out,
        "upsilon_out_db": result.upsilon_out_db,
        "mu1": result.mu1,
        "mu2": result.mu2,
        "beta": result.beta,
        "zeta": result.zeta,
        "iterations": int(result.trace.chosen_block.size),
        "terminated_by": result.trace.terminated_by.value,
    }


def cmd_synthesize(cfg: RunConfig) -> int:
    mats = model.model_matrices(cfg.scenario)
    result = solver.relax_and_select(_solver_config(cfg), mats, cfg.scenario)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "synthesize",
        "reference": cfg.reference_label,
        "seed": cfg.seed,
        "result": _result_payload(result),
    }
    _write_json(cfg.out_dir / "synthesize_result.json", payload)
    rows = [[n, float(u), int(p)] for n, (u, p) in
            enumerate(zip(result.trace.upsilon[1:], result.trace.chosen_block), start=1)]
    rows.insert(0, [0, float(result.trace.upsilon[0]), 0])
    _write_csv(cfg.out_dir / "synthesize_trace.csv",
               "# iteration [-], upsilon [linear objective], chosen_block [1-4; 0 = initial]",
               ["iteration", "upsilon", "chosen_block"], rows)
    print(f"synthesized code: objective {result.upsilon_out_db:.3f} dB, "
          f"SINR {result.sinr_db:.3f} dB, PAPR {result.papr:.3f}, ISL {result.isl_db:.3f} dB")
    print(f"wrote {cfg.out_dir / 'synthesize_result.json'}")
    return EXIT_OK


def _pareto_cell(args) -> dict:
    cfg, beta, zeta = args
    mats = model.model_matrices(cfg.scenario)
    try:
        result = solver.relax_and_select(_solver_config(cfg, beta=beta, zeta=zeta),
                                         mats, cfg.scenario)
    except (solver.SolverError, ValueError) as exc:
        return {"beta": beta, "zeta": zeta, "status": f"error:{exc}"}
    point = analysis.evaluate_fixed_code(result.code, beta, zeta, mats, cfg.scenario)
    return {"beta": beta, "zeta": zeta, "status": "ok", "point": point}


_PARETO_COLUMNS = ["beta", "zeta", "sinr_db", "inv_det_crb", "pd", "papr", "isl_db", "status"]
_PARETO_UNITS = ("# beta [-], zeta [-], sinr_db [dB], inv_det_crb [1/(s^2 Hz^2)], "
                 "pd [-], papr [-], isl_db [dB], status [-]")


def _pareto_row(label_beta, label_zeta, point: analysis.ParetoPoint | None, status: str):
    if point is None:
        return [label_beta, label_zeta, math.nan, math.nan, math.nan, math.nan,
                math.nan, status]
    return [label_beta, label_zeta, point.sinr_db, point.inv_det_crb, point.pd,
            point.papr, point.isl_db, status]


def cmd_pareto(cfg: RunConfig) -> int:
    cells = [(cfg, beta, zeta) for zeta in cfg.zetas for beta in cfg.betas]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_pareto_cell, cells))
    else:
        outcomes = [_pareto_cell(cell) for cell in cells]
    outcomes.sort(key=lambda rec: (rec["zeta"], rec["beta"]))

    mats = model.model_matrices(cfg.scenario)
    rows = []
    for rec in outcomes:
        rows.append(_pareto_row(rec["beta"], rec["zeta"], rec.get("point"), rec["status"]))
    for label, code in (("p3", model.p3_code(cfg.scenario.pulses)),
                        ("generalized_barker",
                         model.generalized_barker_code(cfg.scenario.pulses))):
        point = analysis.evaluate_fixed_code(code, math.nan, math.nan, mats, cfg.scenario)
        rows.append(_pareto_row(f"ref:{label}", "", point, "reference"))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.out_format == "csv":
        _write_csv(cfg.out_dir / "pareto.csv", _PARETO_UNITS, _PARETO_COLUMNS, rows)
        print(f"wrote {cfg.out_dir / 'pareto.csv'} ({len(rows)} rows)")
    else:
        payload = {"schema": SCHEMA_VERSION, "command": "pareto",
                   "rows": [dict(zip(_PARETO_COLUMNS, row)) for row in rows]}
        _write_json(cfg.out_dir / "pareto.json", payload)
        print(f"wrote {cfg.out_dir / 'pareto.json'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_doppler(cfg: RunConfig) -> int:
    mats = model.model_matrices(cfg.scenario)
    result = solver.relax_and_select(_solver_config(cfg), mats, cfg.scenario)
    grid = np.linspace(-0.5, 0.5, cfg.nu_points)
    sweep = analysis.doppler_sweep(result.code, cfg.reference, cfg.scenario, grid)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    columns = ["nu", "designed_norm_crb_tau", "designed_norm_crb_fd", "designed_norm_pd",
               "reference_norm_crb_tau", "reference_norm_crb_fd", "reference_norm_pd"]
    rows = [
        [float(nu),
         float(sweep.designed.norm_crb_tau[i]), float(sweep.designed.norm_crb_fd[i]),
         float(sweep.designed.norm_pd[i]),
         float(sweep.reference.norm_crb_tau[i]), float(sweep.reference.norm_crb_fd[i]),
         float(sweep.reference.norm_pd[i])]
        for i, nu in enumerate(sweep.nu_grid)
    ]
    _write_csv(cfg.out_dir / "doppler.csv",
               "# nu [-]; normalized metrics [-] relative to the designed code at "
               "the nominal Doppler", columns, rows)
    interval = sweep.loss_interval()
    summary = {
        "schema": SCHEMA_VERSION,
        "command": "doppler",
        "reference": cfg.reference_label,
        "beta": cfg.beta,
        "zeta": cfg.zeta,
        "nominal_doppler": cfg.scenario.normalized_doppler,
        "loss_threshold": 0.9,
        "designed_loss_interval": list(interval) if interval else None,
        "per_metric_intervals": {
            name: list(sweep.loss_interval(metrics=(name,)) or ())
            for name in ("norm_crb_tau", "norm_crb_fd", "norm_pd")
        },
    }
    _write_json(cfg.out_dir / "doppler_summary.json", summary)
    print(f"wrote {cfg.out_dir / 'doppler.csv'} and doppler_summary.json")
    if interval:
        print(f"all-metric 10%-loss interval: [{interval[0]:.3f}, {interval[1]:.3f}]")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    checks = validation.run_validation_battery(cfg.scenario)
    failed = False
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
        failed = failed or not check.passed
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_benchmark(cfg: RunConfig) -> int:
    mats = model.model_matrices(cfg.scenario)
    sinr_code = solver.benchmark_sinr_code(mats)
    crb_code = solver.benchmark_crb_code(cfg.scenario, mats, reference=cfg.reference,
                                         epsilon=cfg.epsilon, n_iter_max=cfg.n_iter_max)
    pd_bm = analysis.detection_probability(sinr_code, mats, cfg.scenario)
    from .crb import crb_pair
    pair = crb_pair(crb_code, mats, cfg.scenario)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "benchmark",
        "pd_bm": pd_bm,
        "sinr_bm_db": model.to_db(model.sinr(sinr_code, mats, cfg.scenario)),
        "crb_tau_bm_s2": pair.crb_tau,
        "crb_fd_bm_hz2": pair.crb_fd,
        "det_crb_bm": pair.det,
        "sinr_code": _code_records(sinr_code),
        "crb_code": _code_records(crb_code),
    }
    _write_json(cfg.out_dir / "benchmark.json", payload)
    print(f"wrote {cfg.out_dir / 'benchmark.json'}")
    print(f"Pd_BM {pd_bm:.6f}, detCRB_BM {pair.det:.6e} s^2 Hz^2")
    return EXIT_OK


_COMMANDS = {
    "synthesize": cmd_synthesize,
    "pareto": cmd_pareto,
    "doppler": cmd_doppler,
    "validate": cmd_validate,
    "benchmark": cmd_benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radcode",
        description="Slow-time radar code synthesis and analysis")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--beta", type=float, help="override trade-off weight")
    parser.add_argument("--zeta", type=float, help="override similarity radius")
    parser.add_argument("--seed", type=int, help="override RNG seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--format", choices=["csv", "json"], help="sweep output format")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for sweep commands")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg)
    except (solver.SolverError, ValueError) as exc:
        print(json.dumps({"error": "solver", "message": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
