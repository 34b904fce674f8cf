"""Chemostat parameters, dilution schedules, Contois kinetics and analytic constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DomainError",
    "ChemostatParams",
    "DilutionSchedule",
    "EquilibriumReport",
    "contois_mu",
    "nu",
    "nu_prime",
    "nu_second",
    "nu_max_lipschitz",
    "rhs_f",
    "rhs_df_ds",
    "rhs_bound",
    "equilibrium",
    "s_star",
    "nu_s_star",
    "h_uptake",
    "h_uptake_prime",
    "lipschitz_Lf",
    "biomass_from_substrate",
    "z_transform",
    "DATASET_D",
    "existence_conditions",
    "trivial_uniqueness_conditions",
    "nontrivial_uniqueness_conditions",
]


class DomainError(ValueError):
    """Raised for parameters or states outside the model's domain."""


PARAM_FIELDS = (
    "alpha",
    "memory_length",
    "period",
    "theta",
    "s_in",
    "yield",
    "saturation",
    "mu_max",
)


@dataclass(frozen=True)
class ChemostatParams:
    alpha: float
    memory_length: float
    period: float
    theta: float
    s_in: float
    yield_: float
    saturation: float
    mu_max: float
    KY: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in PARAM_FIELDS:
            value = self[name]
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        if self.alpha > 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        object.__setattr__(self, "KY", self.saturation * self.yield_)

    def __getitem__(self, name: str) -> float:
        return getattr(self, "yield_" if name == "yield" else name)

    @property
    def time_scale(self) -> float:
        """Prefactor ``theta^(1 - alpha)`` of the right-hand side."""
        return self.theta ** (1.0 - self.alpha)

    def to_dict(self) -> dict[str, float]:
        return {name: float(self[name]) for name in PARAM_FIELDS}

    @classmethod
    def from_dict(cls, data: dict[str, float]) -> "ChemostatParams":
        missing = [k for k in PARAM_FIELDS if k not in data]
        if missing:
            raise DomainError(f"missing parameters: {', '.join(missing)}")
        unknown = sorted(set(data) - set(PARAM_FIELDS))
        if unknown:
            raise DomainError(f"unknown parameters: {', '.join(unknown)}")
        kw = {("yield_" if k == "yield" else k): float(v) for k, v in data.items()}
        return cls(**kw)

    def replace(self, **changes: float) -> "ChemostatParams":
        data = self.to_dict()
        data.update(changes)
        return ChemostatParams.from_dict(data)


DATASET_D = ChemostatParams(
    alpha=0.8,
    memory_length=1.5,
    period=1.0,
    theta=1.0,
    s_in=1.0,
    yield_=1.0,
    saturation=1.0,
    mu_max=3.1,
)


SCHEDULE_KINDS = ("constant", "sinusoid", "bangbang", "table")


@dataclass(frozen=True)
class DilutionSchedule:
    """A T-periodic dilution rate.

    Build instances through :meth:`constant`, :meth:`sinusoid`,
    :meth:`bangbang` or :meth:`table`.
    """

    kind: str
    period: float
    level: float = 0.0
    amplitude: float = 0.0
    d_low: float = 0.0
    d_high: float = 0.0
    on_start: float = 0.25
    on_end: float = 0.75
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if not (self.period > 0):
            raise DomainError(f"schedule period must be positive, got {self.period!r}")
        if self.kind == "bangbang":
            if not 0.0 <= self.on_start < self.on_end <= 1.0:
                raise DomainError(
                    f"bang-bang on-interval must satisfy 0 <= start < end <= 1, "
                    f"got [{self.on_start}, {self.on_end})"
                )
            if self.d_high < self.d_low:
                raise DomainError("bang-bang requires d_max >= d_min")
        if self.kind == "table" and len(self.values) < 1:
            raise DomainError("table schedule needs at least one value")
        if not (self.d_min > 0):
            raise DomainError(f"dilution rate must stay positive, minimum is {self.d_min!r}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, level: float, period: float = 1.0) -> "DilutionSchedule":
        return cls("constant", period, level=float(level))

    @classmethod
    def sinusoid(cls, mean: float, amplitude: float, period: float = 1.0) -> "DilutionSchedule":
        return cls("sinusoid", period, level=float(mean), amplitude=float(amplitude))

    @classmethod
    def bangbang(
        cls,
        d_min: float,
        d_max: float,
        on_start: float = 0.25,
        on_end: float = 0.75,
        period: float = 1.0,
    ) -> "DilutionSchedule":
        return cls(
            "bangbang",
            period,
            d_low=float(d_min),
            d_high=float(d_max),
            on_start=float(on_start),
            on_end=float(on_end),
        )

    @classmethod
    def table(cls, values: Sequence[float], period: float = 1.0) -> "DilutionSchedule":
        return cls("table", period, values=tuple(float(v) for v in values))

    # -- queries ----------------------------------------------------------

    @property
    def d_min(self) -> float:
        if self.kind == "constant":
            return self.level
        if self.kind == "sinusoid":
            return self.level - abs(self.amplitude)
        if self.kind == "bangbang":
            full = self.on_start == 0.0 and self.on_end == 1.0
            return self.d_high if full else self.d_low
        return min(self.values)

    @property
    def d_max(self) -> float:
        if self.kind == "constant":
            return self.level
        if self.kind == "sinusoid":
            return self.level + abs(self.amplitude)
        if self.kind == "bangbang":
            return self.d_high if self.on_end > self.on_start else self.d_low
        return max(self.values)

    def evaluate(self, t: np.ndarray | float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phase = np.mod(t, self.period) / self.period
        if self.kind == "constant":
            return np.full(t.shape, self.level)
        if self.kind == "sinusoid":
            return self.level + self.amplitude * np.sin(2.0 * np.pi * phase)
        if self.kind == "bangbang":
            on = (phase >= self.on_start) & (phase < self.on_end)
            return np.where(on, self.d_high, self.d_low)
        table = np.asarray(self.values)
        n = table.size
        idx = np.floor(phase * n + 0.5).astype(int) % n
        return table[idx]

    def __call__(self, t: np.ndarray | float) -> np.ndarray:
        return self.evaluate(t)

    def mean(self) -> float:
        if self.kind in ("constant", "sinusoid"):
            return self.level
        if self.kind == "bangbang":
            frac = self.on_end - self.on_start
            return self.d_high * frac + self.d_low * (1.0 - frac)
        # periodic trapezoid rule on the nodal table
        return float(np.mean(self.values))

    def breakpoints(self) -> tuple[float, ...]:
        """Times in ``[0, period)`` where the schedule jumps."""
        if self.kind == "bangbang" and self.d_high != self.d_low:
            pts = {self.on_start % 1.0, self.on_end % 1.0}
            if self.on_start == 0.0 and self.on_end == 1.0:
                return ()
            return tuple(sorted(p * self.period for p in pts))
        if self.kind == "table":
            v = self.values
            n = len(v)
            return tuple(
                ((j + 0.5) / n) * self.period for j in range(n) if v[j] != v[(j + 1) % n]
            )
        return ()

    @property
    def is_smooth(self) -> bool:
        return not self.breakpoints()

    def to_dict(self) -> dict[str, object]:
        if self.kind == "constant":
            return {"kind": "constant", "level": self.level}
        if self.kind == "sinusoid":
            return {"kind": "sinusoid", "mean": self.level, "amplitude": self.amplitude}
        if self.kind == "bangbang":
            return {
                "kind": "bangbang",
                "d_min": self.d_low,
                "d_max": self.d_high,
                "on_start": self.on_start,
                "on_end": self.on_end,
            }
        return {"kind": "table", "values": list(self.values)}

    @classmethod
    def from_dict(cls, data: dict[str, object], period: float) -> "DilutionSchedule":
        data = dict(data)
        kind = data.pop("kind", None)
        required = {
            "constant": ("level",),
            "sinusoid": ("mean", "amplitude"),
            "bangbang": ("d_min", "d_max"),
            "table": ("values",),
        }
        optional = {"bangbang": ("on_start", "on_end")}
        if kind not in required:
            raise DomainError(f"unknown schedule kind {kind!r}")
        missing = [k for k in required[kind] if k not in data]
        if missing:
            raise DomainError(f"schedule kind {kind!r} is missing {', '.join(missing)}")
        extra = sorted(set(data) - set(required[kind]) - set(optional.get(kind, ())))
        if extra:
            raise DomainError(f"unexpected schedule keys: {', '.join(extra)}")
        if kind == "constant":
            return cls.constant(float(data["level"]), period)
        if kind == "sinusoid":
            return cls.sinusoid(float(data["mean"]), float(data["amplitude"]), period)
        if kind == "bangbang":
            return cls.bangbang(
                float(data["d_min"]),
                float(data["d_max"]),
                float(data.get("on_start", 0.25)),
                float(data.get("on_end", 0.75)),
                period,
            )
        values = data["values"]
        if isinstance(values, str):
            values = [float(v) for v in values.replace(",", " ").split()]
        return cls.table(values, period)  # type: ignore[arg-type]


@dataclass(frozen=True)
class EquilibriumReport:
    s_bar: float
    x_bar: float
    exists: bool
    washout_predicted: bool


# ---------------------------------------------------------------------------
# kinetics


def _check_substrate(s: np.ndarray, p: ChemostatParams) -> None:
    if np.any(s < 0.0) or np.any(s > p.s_in) or np.any(~np.isfinite(s)):
        raise DomainError(f"substrate must lie in [0, {p.s_in}]")


def contois_mu(s: np.ndarray | float, x: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    """Contois specific growth rate; ``mu(0, 0)`` is taken as 0."""
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(s < 0) or np.any(x < 0):
        raise DomainError("Contois rate needs non-negative substrate and biomass")
    den = p.saturation * x + s
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, p.mu_max * s / safe, 0.0)


def _denominator(s: np.ndarray, p: ChemostatParams) -> np.ndarray:
    return p.KY * (p.s_in - s) + s


def nu(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    """Growth rate on the invariant manifold ``x = Y (s_in - s)``."""
    s = np.asarray(s, dtype=float)
    _check_substrate(s, p)
    return p.mu_max * s / _denominator(s, p)


def nu_prime(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    _check_substrate(s, p)
    return p.KY * p.mu_max * p.s_in / _denominator(s, p) ** 2


def nu_second(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    _check_substrate(s, p)
    return 2.0 * p.KY * p.mu_max * p.s_in * (p.KY - 1.0) / _denominator(s, p) ** 3


def nu_max_lipschitz(p: ChemostatParams) -> float:
    """Largest slope of ``nu`` on ``[0, s_in]``; attained at an endpoint."""
    return p.mu_max / p.s_in * max(p.KY, 1.0 / p.KY)


def rhs_f(t: np.ndarray | float, s: np.ndarray | float, p: ChemostatParams, schedule: DilutionSchedule) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return p.time_scale * (schedule.evaluate(t) - nu(s, p)) * (p.s_in - s)


def rhs_df_ds(t: np.ndarray | float, s: np.ndarray | float, p: ChemostatParams, schedule: DilutionSchedule) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return p.time_scale * (nu(s, p) - schedule.evaluate(t) - (p.s_in - s) * nu_prime(s, p))


def rhs_bound(p: ChemostatParams, schedule: DilutionSchedule) -> float:
    """Sup bound of ``|f|`` on ``[0, T] x [0, s_in]``."""
    return p.time_scale * (schedule.d_max + p.mu_max) * p.s_in


def lipschitz_Lf(p: ChemostatParams, schedule: DilutionSchedule) -> float:
    return p.time_scale * (schedule.d_max + p.mu_max + 2.0 * p.s_in * nu_max_lipschitz(p))


def equilibrium(p: ChemostatParams, schedule: DilutionSchedule) -> EquilibriumReport:
    d_bar = schedule.mean()
    if d_bar < p.mu_max:
        s_bar = d_bar * p.KY * p.s_in / (d_bar * p.KY + p.mu_max - d_bar)
        return EquilibriumReport(s_bar, p.yield_ * (p.s_in - s_bar), True, False)
    return EquilibriumReport(p.s_in, 0.0, False, True)


def s_star(p: ChemostatParams) -> float:
    r = math.sqrt(p.KY)
    return p.s_in * r / (r + 1.0)


def nu_s_star(p: ChemostatParams) -> float:
    return p.mu_max / (1.0 + math.sqrt(p.KY))


def h_uptake(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    """``h(s) = nu(s) (s_in - s)``, the substrate uptake on the manifold."""
    s = np.asarray(s, dtype=float)
    return nu(s, p) * (p.s_in - s)


def h_uptake_prime(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    # numerator KY (s_in - s)^2 - s^2 vanishes at s_star
    s = np.asarray(s, dtype=float)
    _check_substrate(s, p)
    return p.mu_max * (p.KY * (p.s_in - s) ** 2 - s**2) / _denominator(s, p) ** 2


def biomass_from_substrate(s: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    return p.yield_ * (p.s_in - np.asarray(s, dtype=float))


def z_transform(s: np.ndarray | float, x: np.ndarray | float, p: ChemostatParams) -> np.ndarray:
    return p.yield_ * (p.s_in - np.asarray(s, dtype=float)) - np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# scenario predicates


def existence_conditions(p: ChemostatParams, schedule: DilutionSchedule) -> bool:
    """Dilution stays below ``mu_max``: a non-trivial periodic solution exists."""
    return schedule.d_max < p.mu_max


def trivial_uniqueness_conditions(p: ChemostatParams, schedule: DilutionSchedule) -> bool:
    """``L >= T``, ``KY > 1`` and ``D > mu_max`` everywhere: washout is the only solution."""
    return p.memory_length >= p.period and p.KY > 1.0 and schedule.d_min > p.mu_max


def nontrivial_uniqueness_conditions(
    p: ChemostatParams, schedule: DilutionSchedule, s_at_zero: float
) -> bool:
    """``s(0) <= s*`` together with ``D <= nu(s*)`` pointwise or on average."""
    if s_at_zero > s_star(p):
        return False
    bound = nu_s_star(p)
    return schedule.d_max <= bound or schedule.mean() <= bound
