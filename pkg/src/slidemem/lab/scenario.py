from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..config import ConfigError, dump_config, load_config, parse_config
from ..model import PARAM_FIELDS, ChemostatParams, DilutionSchedule, DomainError
from ..solver import SolveConfig

__all__ = ["Study", "Scenario", "parse_values", "format_values", "SWEEP_PARAMETERS"]

STUDY_KINDS = ("single", "multistart", "sweep", "washout", "bangbang")
SWEEP_PARAMETERS = ("alpha", "memory_length", "theta")

_INT_SOLVER_KEYS = ("node_count", "interpolation_count", "max_iterations", "seed")


def parse_values(text: str) -> tuple[float, ...]:
    """``"a:b:step"`` (inclusive) or a comma/space separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"empty or descending range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    values = tuple(float(v) for v in text.replace(",", " ").split())
    if not values:
        raise ValueError("no values given")
    return values


def format_values(values: tuple[float, ...]) -> str:
    return ", ".join(repr(float(v)) for v in values)


@dataclass(frozen=True)
class Study:
    kind: str = "single"
    n_starts: int = 100
    parameter: str | None = None
    values: tuple[float, ...] = ()
    # "equilibrium" or a constant substrate level
    guess: str = "equilibrium"

    def __post_init__(self) -> None:
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown study kind {self.kind!r}; expected one of {STUDY_KINDS}")
        if self.kind == "sweep":
            if self.parameter not in SWEEP_PARAMETERS:
                raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
            if not self.values:
                raise ValueError("sweep needs values")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.guess != "equilibrium":
            float(self.guess)

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {"kind": self.kind}
        if self.kind in ("multistart", "washout"):
            out["n_starts"] = self.n_starts
        else:
            out["guess"] = self.guess
        if self.kind == "sweep":
            out["parameter"] = self.parameter
            out["values"] = format_values(self.values)
        return out


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ChemostatParams
    schedule: DilutionSchedule
    config: SolveConfig
    study: Study = field(default_factory=Study)
    description: str = ""

    def __post_init__(self) -> None:
        if abs(self.schedule.period - self.params.period) > 0.0:
            raise ValueError("schedule period must equal the model period")

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, config=replace(self.config, seed=int(seed)))

    def with_study(self, study: Study) -> "Scenario":
        return replace(self, study=study)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {"name": self.name}
        if self.description:
            out["description"] = self.description
        out.update(self.params.to_dict())
        out["schedule"] = self.schedule.to_dict()
        out["solver"] = self.config.to_dict()
        out["study"] = self.study.to_dict()
        return out

    def to_text(self) -> str:
        data = self.to_dict()
        sched = dict(data["schedule"])  # type: ignore[arg-type]
        if "values" in sched:
            sched["values"] = format_values(tuple(sched["values"]))  # type: ignore[arg-type]
        data["schedule"] = sched
        return dump_config(data)

    @classmethod
    def from_dict(cls, data: dict[str, object], source: str | None = None) -> "Scenario":
        def fail(msg: str) -> ConfigError:
            return ConfigError(msg, source=source)

        data = dict(data)
        name = str(data.pop("name", "scenario"))
        description = str(data.pop("description", ""))
        sched = data.pop("schedule", None)
        solver = dict(data.pop("solver", {}) or {})  # type: ignore[arg-type]
        study = dict(data.pop("study", {}) or {})  # type: ignore[arg-type]
        unknown = sorted(k for k in data if k not in PARAM_FIELDS)
        if unknown:
            raise fail(f"unknown top-level keys: {', '.join(unknown)}")
        try:
            params = ChemostatParams.from_dict({k: float(v) for k, v in data.items()})  # type: ignore[arg-type]
        except (DomainError, ValueError) as exc:
            raise fail(f"[model] {exc}") from None
        if not isinstance(sched, dict):
            raise fail("missing [schedule] section")
        try:
            schedule = DilutionSchedule.from_dict(sched, params.period)
        except (DomainError, ValueError) as exc:
            raise fail(f"[schedule] {exc}") from None
        try:
            kw = {}
            for key, value in solver.items():
                if key not in SolveConfig.__dataclass_fields__:
                    raise ValueError(f"unknown key {key!r}")
                kw[key] = int(value) if key in _INT_SOLVER_KEYS else float(value)  # type: ignore[arg-type]
            config = SolveConfig.for_schedule(schedule, **kw)
        except (TypeError, ValueError) as exc:
            raise fail(f"[solver] {exc}") from None
        try:
            skw: dict[str, object] = {}
            for key, value in study.items():
                if key == "n_starts":
                    skw[key] = int(value)  # type: ignore[arg-type]
                elif key == "values":
                    skw[key] = value if isinstance(value, tuple) else parse_values(str(value))
                elif key in ("kind", "parameter", "guess"):
                    skw[key] = str(value)
                else:
                    raise ValueError(f"unknown key {key!r}")
            study_obj = Study(**skw)  # type: ignore[arg-type]
        except (TypeError, ValueError) as exc:
            raise fail(f"[study] {exc}") from None
        return cls(name, params, schedule, config, study_obj, description)

    @classmethod
    def from_text(cls, text: str, source: str | None = None) -> "Scenario":
        return cls.from_dict(parse_config(text, source), source)

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(load_config(path), str(path))
