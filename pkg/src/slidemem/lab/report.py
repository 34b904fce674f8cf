"""Running scenarios, checking their solutions, and writing results to disk."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..model import (
    ChemostatParams,
    DilutionSchedule,
    biomass_from_substrate,
    equilibrium,
    existence_conditions,
    nontrivial_uniqueness_conditions,
    rhs_bound,
    trivial_uniqueness_conditions,
)
from ..solver import (
    Classification,
    PeriodicSolution,
    SolveConfig,
    direct_residual,
    interpolate,
    multistart,
    operator_for,
    residual,
    solve,
    volterra_residual,
)
from .scenario import Scenario, Study, parse_values

__all__ = [
    "SolveRecord",
    "Check",
    "RunReport",
    "ExportError",
    "run_scenario",
    "sweep",
    "verify",
    "export",
    "DIRECT_RESIDUAL_TOL",
]

log = logging.getLogger(__name__)

# Independent time-domain residual must agree with the collocation solve.
DIRECT_RESIDUAL_TOL = 1e-8
# Slack for "s_bar lies between min s and max s" on steady solutions.
EQUILIBRIUM_SLACK = 1e-9
# Relative rounding allowance for the interpolated series.
SERIES_SLACK = 1e-12


class ExportError(OSError):
    pass


@dataclass
class SolveRecord:
    label: str
    value: float | None
    classification: str
    residual_sup: float
    iterations: int
    s_at_zero: float
    params: dict[str, float]
    s_nodes: list[float]
    residual_abs: list[float]
    series: dict[str, list[float]]
    volterra_residual: float | None = None
    direct_residual: float | None = None

    @property
    def converged(self) -> bool:
        return self.classification != Classification.NOT_CONVERGED.value


@dataclass
class Check:
    name: str
    status: str  # pass | fail | n/a | info
    margin: float | None = None
    detail: str = ""
    gating: bool = True

    @property
    def failed(self) -> bool:
        return self.gating and self.status == "fail"


@dataclass
class RunReport:
    scenario: dict[str, object]
    seed: int
    solves: list[SolveRecord]
    summary: dict[str, object] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def name(self) -> str:
        return str(self.scenario.get("name", "scenario"))

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.solves)

    def to_dict(self) -> dict[str, object]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            scenario=data["scenario"],
            seed=int(data["seed"]),
            solves=[SolveRecord(**r) for r in data["solves"]],
            summary=data.get("summary", {}),
            checks=[Check(**c) for c in data.get("checks", [])],
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def rebuild_scenario(self) -> Scenario:
        return Scenario.from_dict(_as_config(self.scenario))


def _as_config(echo: dict[str, object]) -> dict[str, object]:
    data = dict(echo)
    study = dict(data.get("study", {}))  # type: ignore[arg-type]
    if isinstance(study.get("values"), list):
        study["values"] = tuple(study["values"])
    data["study"] = study
    return data


# ---------------------------------------------------------------------------
# running


def _initial_guess(study: Study, params: ChemostatParams, schedule: DilutionSchedule) -> float:
    if study.guess != "equilibrium":
        return float(study.guess)
    eq = equilibrium(params, schedule)
    return eq.s_bar if eq.exists else 0.5 * params.s_in


def _record(
    label: str,
    value: float | None,
    sol: PeriodicSolution,
    params: ChemostatParams,
    schedule: DilutionSchedule,
    config: SolveConfig,
    oracles: bool,
) -> SolveRecord:
    t, s = interpolate(sol, config.interpolation_count)
    op = operator_for(params, config.node_count)
    res = np.abs(residual(sol.s_nodes, params, schedule, op))
    rec = SolveRecord(
        label=label,
        value=value,
        classification=sol.classification.value,
        residual_sup=sol.residual_sup,
        iterations=sol.iterations,
        s_at_zero=sol.s_at_zero,
        params=params.to_dict(),
        s_nodes=sol.s_nodes.tolist(),
        residual_abs=res.tolist(),
        series={
            "t": t.tolist(),
            "s": s.tolist(),
            "x": biomass_from_substrate(s, params).tolist(),
            "D": schedule.evaluate(t).tolist(),
        },
    )
    if oracles and sol.converged:
        rec.volterra_residual = volterra_residual(sol, params, schedule)
        rec.direct_residual = direct_residual(sol, params, schedule)
    return rec


def sweep(
    parameter: str,
    values,
    base: Scenario,
) -> RunReport:
    """One solve per value of ``parameter``, each started from ``s_bar``."""
    if isinstance(values, str):
        values = parse_values(values)
    scenario = base.with_study(Study("sweep", parameter=parameter, values=tuple(values), guess=base.study.guess))
    return run_scenario(scenario)


def run_scenario(scenario: Scenario, workers: int = 1) -> RunReport:
    params, schedule, config, study = scenario.params, scenario.schedule, scenario.config, scenario.study
    records: list[SolveRecord] = []
    summary: dict[str, object] = {}
    eq = equilibrium(params, schedule)
    summary["equilibrium"] = {"s_bar": eq.s_bar, "x_bar": eq.x_bar, "exists": eq.exists,
                              "washout_predicted": eq.washout_predicted, "mean_dilution": schedule.mean()}

    if study.kind in ("single", "bangbang"):
        sol = solve(_initial_guess(study, params, schedule), params, schedule, config)
        records.append(_record(study.kind, None, sol, params, schedule, config, oracles=True))
    elif study.kind in ("multistart", "washout"):
        result = multistart(study.n_starts, params, schedule, config, workers=workers)
        reps = {id(b.representative) for b in result.buckets}
        for i, sol in enumerate(result.solutions):
            records.append(
                _record(f"start-{i:03d}", float(i), sol, params, schedule, config, oracles=id(sol) in reps)
            )
        summary["multistart"] = result.summary()
    else:
        for v in study.values:
            p = params.replace(**{study.parameter: float(v)})  # type: ignore[arg-type]
            sol = solve(_initial_guess(study, p, schedule), p, schedule, config)
            records.append(_record(f"{study.parameter}={v:g}", float(v), sol, p, schedule, config, oracles=True))

    report = RunReport(scenario=scenario.to_dict(), seed=config.seed, solves=records, summary=summary)
    report.checks = verify(report)
    return report


# ---------------------------------------------------------------------------
# verification


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def verify(report: RunReport) -> list[Check]:
    """Evaluate the solution invariants on every record of ``report``."""
    scenario = report.rebuild_scenario()
    base, schedule, config = scenario.params, scenario.schedule, scenario.config
    recs = report.solves
    done = [r for r in recs if r.converged]
    checks: list[Check] = []

    bad = len(recs) - len(done)
    checks.append(Check("converged", _status(bad == 0), float(bad), f"{bad} of {len(recs)} solves did not converge"))
    if not done:
        return checks

    worst = 0.0
    for r in done:
        p = ChemostatParams.from_dict(r.params)
        tol = config.newton_tol * (1.0 + rhs_bound(p, schedule))
        worst = max(worst, r.residual_sup / tol)
    checks.append(Check("residual", _status(worst <= 1.0), worst, "max residual_sup / tolerance"))

    direct = [r.direct_residual for r in done if r.direct_residual is not None]
    if direct:
        checks.append(Check("direct-residual", _status(max(direct) <= DIRECT_RESIDUAL_TOL), max(direct),
                            f"time-domain quadrature residual <= {DIRECT_RESIDUAL_TOL:g}"))
    volterra = [r.volterra_residual for r in done if r.volterra_residual is not None]
    if volterra:
        checks.append(Check("volterra-residual", "info", max(volterra),
                            "integral-form defect; not zero for oscillating solutions", gating=False))

    # boundedness: 0 <= s <= s_in, 0 <= x <= Y s_in on nodes and dense series
    # Nodes are exact; the interpolated series may overshoot by rounding.
    margin, dense = np.inf, np.inf
    for r in done:
        p = ChemostatParams.from_dict(r.params)
        s = np.asarray(r.s_nodes)
        margin = min(margin, s.min(), p.s_in - s.max())
        s, x = np.asarray(r.series["s"]), np.asarray(r.series["x"])
        slack = SERIES_SLACK * p.s_in
        dense = min(dense, s.min() + slack, p.s_in - s.max() + slack, x.min() + slack * p.yield_)
    ok = margin >= 0.0 and dense >= 0.0
    checks.append(Check("boundedness", _status(ok), float(margin), "distance of the nodes to [0, s_in]"))

    nontrivial = [r for r in done if r.classification == Classification.NON_TRIVIAL.value]
    applicable = [r for r in nontrivial if existence_conditions(ChemostatParams.from_dict(r.params), schedule)]
    if applicable:
        margin = np.inf
        for r in applicable:
            p = ChemostatParams.from_dict(r.params)
            s = np.asarray(r.s_nodes)
            margin = min(margin, s.min(), p.s_in - s.max(), (p.yield_ * (p.s_in - s)).min())
        checks.append(Check("positivity", _status(margin > 0.0), float(margin), "strict interior for non-trivial solutions"))
    else:
        checks.append(Check("positivity", "n/a", None, "no non-trivial solution with D < mu_max"))

    if nontrivial:
        margin = 0.0
        ok = True
        for r in nontrivial:
            p = ChemostatParams.from_dict(r.params)
            eq = equilibrium(p, schedule)
            s = np.asarray(r.s_nodes)
            if not eq.exists:
                ok = False
                continue
            ok &= s.min() - EQUILIBRIUM_SLACK <= eq.s_bar <= s.max() + EQUILIBRIUM_SLACK
            margin = max(margin, abs(float(s.mean()) - eq.s_bar))
        checks.append(Check("equilibrium", _status(ok), margin, "s_bar within [min s, max s]; margin |mean s - s_bar|"))
    else:
        checks.append(Check("equilibrium", "n/a", None, "no non-trivial solution"))

    if trivial_uniqueness_conditions(base, schedule):
        washed = sum(r.classification == Classification.TRIVIAL_WASHOUT.value for r in done)
        checks.append(Check("washout", _status(washed == len(done)), float(washed),
                            "washout is the unique periodic solution"))
    else:
        checks.append(Check("washout", "n/a", None, "washout uniqueness conditions do not hold"))

    buckets = report.summary.get("multistart", {}).get("buckets", []) if report.summary else []
    nt = [b for b in buckets if b["classification"] == Classification.NON_TRIVIAL.value]
    if nt and nontrivial_uniqueness_conditions(base, schedule, nt[0]["s_at_zero"]):
        checks.append(Check("uniqueness", _status(len(nt) == 1), float(len(nt)), "non-trivial buckets"))
    else:
        checks.append(Check("uniqueness", "n/a", None, "not a multistart study under uniqueness conditions"))

    if scenario.study.kind == "sweep":
        checks.extend(_sweep_observations(scenario, done))
    return checks


def _sweep_observations(scenario: Scenario, done: list[SolveRecord]) -> list[Check]:
    """Trends reported for the sweep studies; informative, not gating."""
    param = scenario.study.parameter
    by_value = {r.value: np.asarray(r.s_nodes) for r in done}
    amp = {v: float(np.ptp(s)) for v, s in by_value.items()}
    out = [Check("amplitudes", "info", None,
                 "; ".join(f"{v:g}:{a:.6f}" for v, a in sorted(amp.items())), gating=False)]
    if param == "theta":
        vals = [amp[v] for v in sorted(amp)]
        ok = all(b >= a for a, b in zip(vals, vals[1:]))
        out.append(Check("amplitude-monotone", _status(ok), None, "amplitude non-decreasing in theta", gating=False))
    if param == "memory_length" and all(v in by_value for v in (0.1, 0.5, 3.0, 5.0)):
        far = float(np.max(np.abs(by_value[3.0] - by_value[5.0])))
        near = float(np.max(np.abs(by_value[0.1] - by_value[0.5])))
        out.append(Check("memory-saturation", _status(far < near), far / near,
                         f"sup|s(L=3)-s(L=5)| = {far:.3e} vs sup|s(L=0.1)-s(L=0.5)| = {near:.3e}", gating=False))
    return out


# ---------------------------------------------------------------------------
# export


def _csv_bytes(rec: SolveRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s", "x", "D"])
    ser = rec.series
    for row in zip(ser["t"], ser["s"], ser["x"], ser["D"]):
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def _write(path: Path, payload: str | bytes) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def export(report: RunReport, formats=("csv", "json", "svg"), out_dir: str | Path = ".") -> list[Path]:
    """Write the report in each of ``formats``; returns the files written."""
    if isinstance(formats, str):
        formats = [f.strip() for f in formats.split(",") if f.strip()]
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ValueError(f"unknown export formats: {', '.join(sorted(unknown))}")
    out = Path(out_dir)
    written: list[Path] = []
    name = report.name
    if "csv" in formats:
        single = len(report.solves) == 1
        for rec in report.solves:
            fname = f"{name}.csv" if single else f"{name}__{rec.label}.csv"
            written.append(_write(out / fname, _csv_bytes(rec)))
    if "json" in formats:
        written.append(_write(out / f"{name}.json", report.to_json()))
    if "svg" in formats:
        from .plots import four_panel_svg

        written.append(_write(out / f"{name}.svg", four_panel_svg(report)))
    return written
