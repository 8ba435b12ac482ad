"""
Parameter sweeps and closed-form validation.

Every (curve, grid point) pair is an independent task; tasks run in a process
pool and the rows are written once all of them are done, sorted by
(value, method), so the CSV does not depend on the worker count.
"""
import asyncio
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from analysis.outage_asymptotic import asymptotic_outage
from analysis.outage_exact import user_outage
from analysis.outage_system import system_outage, union_bounds
from analysis.scenario import at_kappa, at_rho, at_snr, at_threshold, db_to_linear, gain_constant
from models.types import Scenario, SeriesControl, SweepRow, ValidationRow
from observability.metrics import set_validation_failures
from simulate.monte_carlo import estimate_all
from sweep.config import SweepConfig

logger = logging.getLogger(__name__)

CSV_HEADER = ["variable", "value", "method", "p", "stderr", "trials", "seed"]
VALIDATION_HEADER = ["value", "quantity", "closed_form", "estimate", "stderr", "delta", "status"]

# Points whose closed form lies below this are not compared against Monte Carlo
VALIDATION_FLOOR = 1e-4
VALIDATION_SIGMAS = 3.0


@dataclass(frozen=True)
class PointTask:
    variable: str
    value: float
    suffix: str
    scenario: Scenario
    methods: Tuple[str, ...]
    users: Tuple[int, ...]
    trials: int
    seed: int
    series: SeriesControl
    gain_factor: float = 1.0


def apply_variable(scenario: Scenario, variable: str, value: float) -> Scenario:
    if variable == "snr_db":
        return at_snr(scenario, db_to_linear(value))
    if variable == "kappa":
        return at_kappa(scenario, value)
    if variable == "rho":
        return at_rho(scenario, value)
    if variable == "gamma_th_db":
        return at_threshold(scenario, db_to_linear(value))
    raise ValueError(f"unknown sweep variable '{variable}'")


def _closed_gain(scenario: Scenario, factor: float, include_interference: bool) -> Optional[float]:
    # None lets each evaluator pick its own C; a factor != 1 is the negative-control hook
    if factor == 1.0:
        return None
    return factor * gain_constant(scenario, include_interference=include_interference).value


def evaluate_point(task: PointTask) -> List[SweepRow]:
    """All configured methods at one grid point of one curve."""
    s = task.scenario
    rows: List[SweepRow] = []

    def row(method: str, p: float, stderr=None, trials=None, seed=None):
        rows.append(SweepRow(task.variable, task.value, method + task.suffix, p, stderr, trials, seed))

    if "exact" in task.methods:
        gain = _closed_gain(s, task.gain_factor, include_interference=bool(s.interference.count))
        for user in task.users:
            row(f"exact-user{user}", user_outage(s, user, gain=gain).p)
    if "asymptotic" in task.methods:
        for user in task.users:
            raw = asymptotic_outage(s, user).outage(s.snr)
            if not 0.0 <= raw <= 1.0:
                logger.debug(f"[SWEEP] asymptote {raw:.6g} outside [0, 1] at {task.variable}={task.value:g}, clipped")
            row(f"asymptotic-user{user}", min(1.0, max(0.0, raw)))
    if "system" in task.methods:
        result = system_outage(s, series=task.series, gain=_closed_gain(s, task.gain_factor, False))
        row("system-quadrature" if result.method == "system-exact-quadrature" else "system", result.p)
    if "mc" in task.methods:
        estimates = estimate_all(s, task.trials, task.seed)
        for user in task.users:
            e = estimates[user - 1]
            row(f"mc-user{user}", e.p, e.stderr, e.trials, e.seed)
        if "system" in task.methods:
            e = estimates[2]
            row("mc-system", e.p, e.stderr, e.trials, e.seed)
    logger.debug(f"[SWEEP] {task.variable}={task.value:g}{task.suffix} -> {len(rows)} rows")
    return rows


def build_tasks(config: SweepConfig, methods: Sequence[str] = None, gain_factor: float = 1.0) -> List[PointTask]:
    spec = config.sweep_spec()
    chosen = tuple(methods) if methods is not None else spec.methods
    series = config.series_control()
    tasks = []
    for suffix, scenario in config.curves():
        for value in spec.points():
            tasks.append(
                PointTask(
                    variable=spec.variable,
                    value=value,
                    suffix=suffix,
                    scenario=apply_variable(scenario, spec.variable, value),
                    methods=chosen,
                    users=tuple(config.users),
                    trials=config.trials,
                    seed=config.seed,
                    series=series,
                    gain_factor=gain_factor,
                )
            )
    return tasks


async def _gather(tasks: List[PointTask], workers: int) -> List[List[SweepRow]]:
    if workers <= 1 or len(tasks) <= 1:
        return [evaluate_point(t) for t in tasks]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return await asyncio.gather(*(loop.run_in_executor(pool, evaluate_point, t) for t in tasks))


def run_tasks(tasks: List[PointTask], workers: int = 1) -> List[SweepRow]:
    results = asyncio.run(_gather(tasks, workers))
    rows = [r for chunk in results for r in chunk]
    rows.sort(key=lambda r: r.sort_key)
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.variable, _fmt(r.value), r.method, _fmt(r.p), _fmt(r.stderr), _fmt(r.trials), _fmt(r.seed)])
    return buf.getvalue()


def run_sweep(config: SweepConfig, out: Path, workers: int = 1, gain_factor: float = 1.0) -> int:
    tasks = build_tasks(config, gain_factor=gain_factor)
    logger.info(f"[SWEEP] {len(tasks)} points, methods={','.join(config.methods)}, workers={workers}")
    text = rows_to_csv(run_tasks(tasks, workers))
    Path(out).write_text(text)
    logger.info(f"[SWEEP] wrote {out}")
    return len(tasks)


def point_rows(config: SweepConfig, methods: Sequence[str], gain_factor: float = 1.0) -> List[SweepRow]:
    """Rows for the config's base point (first curve), labeled by its SNR in dB."""
    suffix, scenario = config.curves()[0]
    task = PointTask(
        variable="snr_db",
        value=config.snr_db,
        suffix=suffix,
        scenario=scenario,
        methods=tuple(methods),
        users=tuple(config.users),
        trials=config.trials,
        seed=config.seed,
        series=config.series_control(),
        gain_factor=gain_factor,
    )
    rows = evaluate_point(task)
    if "system" in methods:
        lower, upper = union_bounds(scenario)
        rows.append(SweepRow("snr_db", config.snr_db, "union-lower" + suffix, lower))
        rows.append(SweepRow("snr_db", config.snr_db, "union-upper" + suffix, upper))
    rows.sort(key=lambda r: r.sort_key)
    return rows


def compare(rows: Sequence[SweepRow]) -> List[ValidationRow]:
    """Pair every closed-form row with its Monte Carlo row at the same point."""
    estimates = {}
    for r in rows:
        if r.method.startswith("mc-"):
            estimates[(r.value, r.method[len("mc-"):])] = r
    table = []
    for r in rows:
        if r.method.startswith(("mc-", "asymptotic-")):
            continue
        quantity = r.method.replace("exact-", "").replace("system-quadrature", "system")
        mc = estimates.get((r.value, quantity))
        if mc is None:
            continue
        if r.p < VALIDATION_FLOOR:
            status = "SKIP"
        elif abs(r.p - mc.p) <= VALIDATION_SIGMAS * mc.stderr:
            status = "PASS"
        else:
            status = "FAIL"
        table.append(ValidationRow(r.value, r.method, r.p, mc.p, mc.stderr, status))
    return table


def validation_csv(table: Sequence[ValidationRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(VALIDATION_HEADER)
    for v in table:
        writer.writerow([_fmt(v.value), v.quantity, _fmt(v.closed_form), _fmt(v.estimate), _fmt(v.stderr), _fmt(v.delta), v.status])
    return buf.getvalue()


def run_validation(config: SweepConfig, workers: int = 1, gain_factor: float = 1.0) -> List[ValidationRow]:
    methods = ["exact", "mc"]
    if "system" in config.methods:
        methods.append("system")
    tasks = build_tasks(config, methods=methods, gain_factor=gain_factor)
    table = compare(run_tasks(tasks, workers))
    failures = sum(1 for v in table if v.status == "FAIL")
    set_validation_failures(failures)
    for v in table:
        if v.status == "FAIL":
            logger.warning(
                f"[VALIDATE] {v.quantity} at {v.value:g}: closed={v.closed_form:.6e} mc={v.estimate:.6e} "
                f"delta={v.delta:.3e} > {VALIDATION_SIGMAS:g}*{v.stderr:.3e}"
            )
    logger.info(f"[VALIDATE] {len(table)} comparisons, {failures} failed")
    return table
