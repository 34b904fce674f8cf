"""Built-in scenarios mirroring the published experiments on the base dataset."""

from __future__ import annotations

import hashlib

from ..model import DATASET_D, DilutionSchedule
from ..solver import SolveConfig
from .scenario import Scenario, Study

__all__ = ["CATALOG", "get", "names", "catalog_text", "catalog_checksum"]

_SINUSOID = DilutionSchedule.sinusoid(1.0, 0.5, DATASET_D.period)
_BANGBANG = DilutionSchedule.bangbang(0.5, 1.5, 0.25, 0.75, DATASET_D.period)
_SMOOTH = SolveConfig(node_count=100, interpolation_count=200, seed=42)
_JUMPY = SolveConfig(node_count=300, interpolation_count=400, seed=42)

_TENTHS = tuple(round(0.1 * k, 12) for k in range(1, 11))


def _build() -> dict[str, Scenario]:
    entries = [
        Scenario(
            "fig1-baseline",
            DATASET_D,
            _SINUSOID,
            _SMOOTH,
            Study("single"),
            "base dataset, D = 1 + 0.5 sin(2 pi t / T), start at s_bar",
        ),
        Scenario(
            "fig2-multistart",
            DATASET_D,
            _SINUSOID,
            _SMOOTH,
            Study("multistart", n_starts=100),
            "100 uniform random starts on [0, s_in]",
        ),
        Scenario(
            "fig3-alpha-sweep",
            DATASET_D,
            _SINUSOID,
            _SMOOTH,
            Study("sweep", parameter="alpha", values=_TENTHS),
            "fractional order 0.1 .. 1.0",
        ),
        Scenario(
            "fig4-memory-sweep",
            DATASET_D,
            _SINUSOID,
            _SMOOTH,
            Study("sweep", parameter="memory_length", values=(0.1, 0.3, 0.5, 1.0, 3.0, 5.0)),
            "memory length 0.1 .. 5",
        ),
        Scenario(
            "fig5-theta-sweep",
            DATASET_D,
            _SINUSOID,
            _SMOOTH,
            Study("sweep", parameter="theta", values=_TENTHS),
            "characteristic time 0.1 .. 1.0",
        ),
        Scenario(
            "fig6-washout",
            DATASET_D.replace(mu_max=0.25, saturation=2.0),
            _SINUSOID,
            _SMOOTH,
            Study("washout", n_starts=100),
            "mu_max = 0.25, K = 2: every start should wash out",
        ),
        Scenario(
            "fig7-bangbang",
            DATASET_D,
            _BANGBANG,
            _JUMPY,
            Study("bangbang"),
            "bang-bang dilution, D_max on [0.25 T, 0.75 T)",
        ),
        Scenario(
            "constant-equilibrium",
            DATASET_D,
            DilutionSchedule.constant(1.0, DATASET_D.period),
            _SMOOTH,
            Study("single"),
            "constant D = 1: the solution is the steady state s_bar",
        ),
    ]
    return {s.name: s for s in entries}


CATALOG: dict[str, Scenario] = _build()


def names() -> list[str]:
    return list(CATALOG)


def get(name: str) -> Scenario:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"no catalog scenario named {name!r}; try one of: {', '.join(CATALOG)}") from None


def catalog_text() -> str:
    return "\n".join(CATALOG[n].to_text() for n in CATALOG)


def catalog_checksum() -> str:
    return hashlib.sha256(catalog_text().encode()).hexdigest()
