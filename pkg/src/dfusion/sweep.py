"""Experiment sweeps and CSV serialization.

Each scenario produces one CSV of curve rows; a sweep additionally writes
a combined CSV, an observation-bound CSV and (when both engines ran) a
per-point engine-delta diagnostics CSV.  All files use fixed columns,
UTF-8 and '.' decimals so diffs are byte-stable.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, ScenarioRequest
from .croc import CrocCurve
from .mgf import QuadratureConfig, analytic_croc, observation_bound
from .montecarlo import SeedSpec, estimate_croc, threshold_grid
from .protocols import ProtocolScenario, make_scenario

CURVE_COLUMNS = ["scenario_id", "protocol", "K", "N", "snr_db", "constraint",
                 "engine", "gamma", "q_f", "q_d", "q_m"]
BOUND_COLUMNS = ["scenario_id", "g", "q_f", "q_m"]

OUTPUT_DIR_ENV = "DFUSION_OUTPUT_DIR"


@dataclass(frozen=True)
class CurveRow:
    scenario_id: str
    protocol: str
    K: int
    N: int
    snr_db: float
    constraint: str
    engine: str
    gamma: float
    q_f: float
    q_d: float

    @property
    def q_m(self) -> float:
        return 1.0 - self.q_d


@dataclass(frozen=True)
class BoundRow:
    scenario_id: str
    g: int
    q_f: float
    q_m: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    bounds: list = field(default_factory=list)


def curve_rows(request: ScenarioRequest, curve: CrocCurve) -> list[CurveRow]:
    return [CurveRow(scenario_id=request.scenario_id,
                     protocol=request.kind.value, K=request.K, N=request.N,
                     snr_db=request.snr_db,
                     constraint=request.constraint.value,
                     engine=curve.engine, gamma=float(g), q_f=float(qf),
                     q_d=float(qd))
            for g, qf, qd in zip(curve.thresholds, curve.q_f, curve.q_d)]


def emit_curve_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_COLUMNS)
    for r in rows:
        writer.writerow([r.scenario_id, r.protocol, r.K, r.N,
                         repr(r.snr_db), r.constraint, r.engine,
                         repr(r.gamma), repr(r.q_f), repr(r.q_d),
                         repr(r.q_m)])
    return buf.getvalue()


def parse_curve_csv(text: str) -> list[CurveRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CURVE_COLUMNS:
        raise ValueError(f"unexpected curve CSV header: {header}")
    rows = []
    for rec in reader:
        (sid, proto, K, N, snr_db, con, engine, gamma, qf, qd, qm) = rec
        row = CurveRow(scenario_id=sid, protocol=proto, K=int(K), N=int(N),
                       snr_db=float(snr_db), constraint=con, engine=engine,
                       gamma=float(gamma), q_f=float(qf), q_d=float(qd))
        if abs(row.q_m - float(qm)) > 1e-12:
            raise ValueError(f"inconsistent q_m in row {rec}")
        rows.append(row)
    return rows


def emit_bound_csv(bounds) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BOUND_COLUMNS)
    for b in bounds:
        writer.writerow([b.scenario_id, b.g, repr(b.q_f), repr(b.q_m)])
    return buf.getvalue()


def parse_bound_csv(text: str) -> list[BoundRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != BOUND_COLUMNS:
        raise ValueError(f"unexpected bound CSV header: {header}")
    return [BoundRow(scenario_id=sid, g=int(g), q_f=float(qf), q_m=float(qm))
            for sid, g, qf, qm in reader]


def run_scenario(request: ScenarioRequest, config: ExperimentConfig
                 ) -> tuple[ProtocolScenario, list[CrocCurve]]:
    """Run the configured engine(s) for one scenario on a shared pilot
    threshold grid."""
    scenario = make_scenario(request.kind, request.K, request.N,
                             request.snr_linear, request.constraint,
                             sensor=config.sensor)
    seed = SeedSpec(config.seed)
    grid = threshold_grid(scenario, seed, points=config.grid_points)
    curves = []
    if config.engine in ("mc", "both"):
        curves.append(estimate_croc(scenario, grid, config.trials, seed))
    if config.engine in ("analytic", "both"):
        curves.append(analytic_croc(scenario, grid,
                                    QuadratureConfig(nodes=config.nodes)))
    return scenario, curves


def run_sweep(config: ExperimentConfig,
              output_dir: str | os.PathLike | None = None
              ) -> tuple[ResultTable, dict]:
    """Run every scenario in the grid and write per-scenario plus combined
    CSV files.  Returns the in-memory table and a dict of per-scenario
    errors (empty means full success); partial outputs are preserved."""
    out = Path(output_dir if output_dir is not None
               else os.environ.get(OUTPUT_DIR_ENV, config.output_dir))
    out.mkdir(parents=True, exist_ok=True)
    table = ResultTable()
    errors: dict[str, str] = {}
    requests = config.scenarios()

    def one(request):
        return request, run_scenario(request, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = []
            for fut in [pool.submit(one, r) for r in requests]:
                try:
                    outcomes.append((fut.result(), None))
                except Exception as exc:  # recorded per scenario
                    outcomes.append((None, exc))
    else:
        outcomes = []
        for request in requests:
            try:
                outcomes.append((one(request), None))
            except Exception as exc:
                outcomes.append(((request, None), exc))

    for outcome, exc in outcomes:
        if exc is not None:
            request = outcome[0] if outcome else None
            sid = request.scenario_id if request else "<unknown>"
            errors[sid] = f"{type(exc).__name__}: {exc}"
            continue
        request, (scenario, curves) = outcome
        rows = []
        for curve in curves:
            rows.extend(curve_rows(request, curve))
        table.rows.extend(rows)
        (out / f"{request.scenario_id}.csv").write_text(
            emit_curve_csv(rows), encoding="utf-8")
        bound = observation_bound(request.K, config.p_f, config.p_d)
        table.bounds.extend(
            BoundRow(scenario_id=request.scenario_id, g=int(g),
                     q_f=float(qf), q_m=float(qm))
            for g, qf, qm in zip(bound.g, bound.q_f, bound.q_m))

    (out / "combined.csv").write_text(emit_curve_csv(table.rows),
                                      encoding="utf-8")
    (out / "bounds.csv").write_text(emit_bound_csv(table.bounds),
                                    encoding="utf-8")
    if config.engine == "both":
        (out / "diagnostics.csv").write_text(_diagnostics_csv(table),
                                             encoding="utf-8")
    return table, errors


def _diagnostics_csv(table: ResultTable) -> str:
    """Per-point |q_mc - q_analytic| deltas for scenarios with both
    engines present."""
    by_key: dict[tuple, dict[str, CurveRow]] = {}
    for r in table.rows:
        by_key.setdefault((r.scenario_id, r.gamma), {})[r.engine] = r
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario_id", "gamma", "delta_q_f", "delta_q_d"])
    for (sid, gamma), pair in by_key.items():
        if len(pair) == 2:
            mc, an = pair["monte-carlo"], pair["analytic"]
            writer.writerow([sid, repr(gamma),
                             repr(abs(mc.q_f - an.q_f)),
                             repr(abs(mc.q_d - an.q_d))])
    return buf.getvalue()
