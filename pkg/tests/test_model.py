import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import equilibrium_bisection
from slidemem.config import ConfigError, dump_config, parse_config
from slidemem.model import (
    DATASET_D,
    ChemostatParams,
    DilutionSchedule,
    DomainError,
    biomass_from_substrate,
    contois_mu,
    equilibrium,
    existence_conditions,
    h_uptake,
    h_uptake_prime,
    lipschitz_Lf,
    nontrivial_uniqueness_conditions,
    nu,
    nu_max_lipschitz,
    nu_prime,
    nu_s_star,
    nu_second,
    rhs_bound,
    rhs_df_ds,
    rhs_f,
    s_star,
    trivial_uniqueness_conditions,
    z_transform,
)

SINE = DilutionSchedule.sinusoid(1.0, 0.5, 1.0)


@st.composite
def params(draw):
    return ChemostatParams(
        alpha=draw(st.floats(0.05, 1.0)),
        memory_length=draw(st.floats(0.1, 5.0)),
        period=draw(st.floats(0.5, 3.0)),
        theta=draw(st.floats(0.1, 2.0)),
        s_in=draw(st.floats(0.2, 5.0)),
        yield_=draw(st.floats(0.1, 3.0)),
        saturation=draw(st.floats(0.1, 4.0)),
        mu_max=draw(st.floats(0.1, 5.0)),
    )


@st.composite
def schedules(draw, period=1.0):
    kind = draw(st.sampled_from(["constant", "sinusoid", "bangbang"]))
    if kind == "constant":
        return DilutionSchedule.constant(draw(st.floats(0.05, 4.0)), period)
    if kind == "sinusoid":
        mean = draw(st.floats(0.1, 4.0))
        return DilutionSchedule.sinusoid(mean, draw(st.floats(0.0, 0.95)) * mean, period)
    lo = draw(st.floats(0.05, 3.0))
    return DilutionSchedule.bangbang(lo, lo + draw(st.floats(0.0, 2.0)), 0.25, 0.75, period)


# -- parameters ----------------------------------------------------------------


def test_dataset_fields():
    p = DATASET_D
    assert (p.alpha, p.memory_length, p.period, p.theta) == (0.8, 1.5, 1.0, 1.0)
    assert (p.s_in, p["yield"], p.saturation, p.mu_max) == (1.0, 1.0, 1.0, 3.1)
    assert p.KY == 1.0
    assert p.replace(saturation=2.0).KY == 2.0


@pytest.mark.parametrize("field", ["alpha", "memory_length", "period", "theta", "s_in", "yield", "saturation", "mu_max"])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_params_reject_non_positive(field, bad):
    with pytest.raises(DomainError):
        DATASET_D.replace(**{field: bad})


def test_params_reject_order_above_one_and_accept_one():
    with pytest.raises(DomainError):
        DATASET_D.replace(alpha=1.01)
    assert DATASET_D.replace(alpha=1.0).alpha == 1.0


def test_params_dict_round_trip():
    d = DATASET_D.to_dict()
    assert list(d) == ["alpha", "memory_length", "period", "theta", "s_in", "yield", "saturation", "mu_max"]
    assert ChemostatParams.from_dict(d) == DATASET_D
    with pytest.raises(DomainError):
        ChemostatParams.from_dict({**d, "extra": 1.0})
    with pytest.raises(DomainError):
        ChemostatParams.from_dict({k: v for k, v in d.items() if k != "theta"})


# -- schedules -----------------------------------------------------------------


def test_bangbang_half_open_switches():
    sch = DilutionSchedule.bangbang(0.5, 1.5, 0.25, 0.75, 1.0)
    assert sch(0.25) == 1.5
    assert sch(0.75) == 0.5
    assert sch(np.nextafter(0.25, 0)) == 0.5
    assert sch(np.nextafter(0.75, 0)) == 1.5
    assert sch.mean() == 1.0
    assert sch.breakpoints() == (0.25, 0.75)
    assert not sch.is_smooth


@given(schedules(), st.floats(-10, 10))
@settings(max_examples=100, deadline=None)
def test_schedule_periodic_and_bounded(sch, t):
    v = float(sch(t))
    assert sch.d_min - 1e-12 <= v <= sch.d_max + 1e-12
    assert float(sch(t + sch.period)) == pytest.approx(v, abs=1e-9)


@given(schedules())
@settings(max_examples=40, deadline=None)
def test_schedule_mean_matches_fine_quadrature(sch):
    t = (np.arange(200000) + 0.5) / 200000 * sch.period
    assert sch.mean() == pytest.approx(float(np.mean(sch(t))), abs=1e-6)


def test_table_schedule_nearest_node_and_mean():
    sch = DilutionSchedule.table([1.0, 2.0, 4.0, 1.0], 2.0)
    assert sch(0.0) == 1.0 and sch(0.5) == 2.0 and sch(0.49) == 2.0 and sch(1.1) == 4.0
    assert sch(1.9) == 1.0
    assert sch.mean() == 2.0
    assert sch.d_min == 1.0 and sch.d_max == 4.0


@pytest.mark.parametrize(
    "make",
    [
        lambda: DilutionSchedule.constant(0.0),
        lambda: DilutionSchedule.sinusoid(1.0, 1.0),
        lambda: DilutionSchedule.bangbang(1.5, 0.5),
        lambda: DilutionSchedule.bangbang(0.5, 1.5, 0.8, 0.2),
        lambda: DilutionSchedule.table([]),
        lambda: DilutionSchedule.constant(1.0, 0.0),
    ],
)
def test_schedule_validation(make):
    with pytest.raises(DomainError):
        make()


@pytest.mark.parametrize(
    "sch",
    [
        DilutionSchedule.constant(1.2, 1.0),
        SINE,
        DilutionSchedule.bangbang(0.5, 1.5, 0.2, 0.6, 1.0),
        DilutionSchedule.table([0.5, 1.0, 1.5], 1.0),
    ],
)
def test_schedule_dict_round_trip(sch):
    assert DilutionSchedule.from_dict(sch.to_dict(), sch.period) == sch


def test_schedule_from_dict_errors():
    with pytest.raises(DomainError, match="missing"):
        DilutionSchedule.from_dict({"kind": "sinusoid", "mean": 1.0}, 1.0)
    with pytest.raises(DomainError, match="unknown"):
        DilutionSchedule.from_dict({"kind": "square"}, 1.0)
    with pytest.raises(DomainError, match="unexpected"):
        DilutionSchedule.from_dict({"kind": "constant", "level": 1.0, "mean": 2.0}, 1.0)


# -- kinetics ------------------------------------------------------------------


def test_contois_examples():
    p = DATASET_D
    assert contois_mu(0.0, 1.0, p) == 0.0
    assert contois_mu(1.0, 0.0, p) == 3.1
    assert contois_mu(0.5, 0.5, p) == pytest.approx(1.55)
    assert contois_mu(0.0, 0.0, p) == 0.0
    with pytest.raises(DomainError):
        contois_mu(-0.1, 0.5, p)


@given(params(), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=100, deadline=None)
def test_contois_in_range(p, a, b):
    mu = float(contois_mu(a * p.s_in, b * p.yield_ * p.s_in, p))
    assert 0.0 <= mu <= p.mu_max * (1 + 1e-15)


def test_nu_examples():
    p = DATASET_D
    assert nu(0.0, p) == 0.0
    assert nu(1.0, p) == pytest.approx(3.1)
    assert nu(0.5, p) == pytest.approx(1.55)
    np.testing.assert_allclose(nu_prime(np.linspace(0, 1, 11), p), 3.1)
    for bad in (-1e-9, 1.0 + 1e-9):
        with pytest.raises(DomainError):
            nu(bad, p)


def test_nu_prime_finite_difference_example():
    p = DATASET_D.replace(saturation=2.0, mu_max=0.25)
    h = 1e-6
    fd = (nu(0.3 + h, p) - nu(0.3 - h, p)) / (2 * h)
    assert float(nu_prime(0.3, p)) == pytest.approx(float(fd), rel=1e-6)
    # substituting s = 0 in KY mu_max s_in / (KY (s_in - s) + s)^2
    assert float(nu_prime(0.0, p)) == pytest.approx(p.mu_max / (p.KY * p.s_in))
    assert float(nu_prime(p.s_in, p)) == pytest.approx(p.KY * p.mu_max / p.s_in)


def test_nu_max_lipschitz_examples():
    assert nu_max_lipschitz(DATASET_D) == pytest.approx(3.1)
    for ky in (4.0, 0.25):
        p = DATASET_D.replace(saturation=ky, mu_max=1.0)
        assert nu_max_lipschitz(p) == pytest.approx(4.0)
        grid = np.linspace(0, 1, 10_000)
        assert np.max(nu_prime(grid, p)) == pytest.approx(4.0, rel=1e-12)


@given(params())
@settings(max_examples=80, deadline=None)
def test_nu_strictly_increasing(p):
    s = np.linspace(0, p.s_in, 1000)
    assert np.all(nu_prime(s, p) > 0)
    assert np.all(np.diff(nu(s, p)) > 0)


@given(params())
@settings(max_examples=80, deadline=None)
def test_nu_second_sign_follows_ky(p):
    assume(abs(p.KY - 1.0) > 1e-3)
    s = np.linspace(0.01, 0.99, 99) * p.s_in
    h = 1e-6 * p.s_in
    fd = (nu_prime(s + h, p) - nu_prime(s - h, p)) / (2 * h)
    an = nu_second(s, p)
    assert np.all(np.sign(an) == np.sign(p.KY - 1.0))
    assert np.all(np.sign(fd[np.abs(an) > 1e-6 * np.max(np.abs(an))]) == np.sign(p.KY - 1.0))
    np.testing.assert_allclose(fd, an, rtol=1e-4, atol=1e-6 * np.max(np.abs(an)))


def test_rhs_examples():
    p = DATASET_D
    np.testing.assert_array_equal(rhs_f(np.linspace(0, 1, 5), 1.0, p, SINE), 0.0)
    assert rhs_f(0.0, 0.0, p, SINE) == pytest.approx(1.0)
    # independent substitution: D(0.25) = 1.5, nu(0.3) = 0.93
    assert rhs_f(0.25, 0.3, p, SINE) == pytest.approx(0.399, rel=1e-14)
    assert rhs_df_ds(0.0, 0.0, p, SINE) == pytest.approx(-4.1)
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(rhs_df_ds(t, 1.0, p, SINE), 3.1 - SINE(t))


@given(params(), schedules(), st.floats(0, 1), st.floats(0.001, 0.999))
@settings(max_examples=100, deadline=None)
def test_rhs_df_ds_finite_difference(p, sch, t, frac):
    s = frac * p.s_in
    h = 1e-6 * p.s_in
    h = min(h, s, p.s_in - s)
    fd = (rhs_f(t, s + h, p, sch) - rhs_f(t, s - h, p, sch)) / (2 * h)
    an = rhs_df_ds(t, s, p, sch)
    assert float(an) == pytest.approx(float(fd), rel=1e-6, abs=1e-6 * rhs_bound(p, sch) / p.s_in)


def test_df_ds_negative_when_dilution_exceeds_growth():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = DATASET_D.replace(
            saturation=rng.uniform(1.05, 4), mu_max=rng.uniform(0.1, 1.0), alpha=rng.uniform(0.1, 1), theta=rng.uniform(0.2, 2)
        )
        sch = DilutionSchedule.sinusoid(p.mu_max * 2.0, p.mu_max * 0.9, 1.0)
        assert sch.d_min > p.mu_max and p.KY > 1
        t, s = np.meshgrid(np.linspace(0, 1, 60), np.linspace(0, p.s_in, 80))
        assert np.all(rhs_df_ds(t, s, p, sch) < 0)


def test_rhs_bound_monte_carlo():
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = DATASET_D.replace(
            alpha=rng.uniform(0.1, 1), theta=rng.uniform(0.2, 3), s_in=rng.uniform(0.2, 3),
            saturation=rng.uniform(0.2, 3), mu_max=rng.uniform(0.2, 4),
        )
        sch = DilutionSchedule.sinusoid(rng.uniform(0.5, 2), 0.4, 1.0)
        t, s = rng.uniform(0, 1, 10_000), rng.uniform(0, p.s_in, 10_000)
        assert np.max(np.abs(rhs_f(t, s, p, sch))) <= rhs_bound(p, sch)


def test_lipschitz_examples_and_monte_carlo():
    p = DATASET_D
    sch = SINE
    assert lipschitz_Lf(p, sch) == pytest.approx(10.8)
    assert lipschitz_Lf(p.replace(alpha=0.3), sch) == pytest.approx(10.8)
    rng = np.random.default_rng(2)
    t = rng.uniform(0, 1, 100_000)
    s1, s2 = rng.uniform(0, 1, (2, 100_000))
    ratio = np.abs(rhs_f(t, s1, p, sch) - rhs_f(t, s2, p, sch)) / np.abs(s1 - s2)
    assert np.max(ratio) <= lipschitz_Lf(p, sch)


# -- equilibria and thresholds ---------------------------------------------------


def test_equilibrium_dataset():
    eq = equilibrium(DATASET_D, SINE)
    assert abs(eq.s_bar - 1 / 3.1) <= 1e-12
    assert eq.x_bar == pytest.approx(1 - 1 / 3.1)
    assert eq.exists and not eq.washout_predicted
    assert float(biomass_from_substrate(eq.s_bar, DATASET_D)) == pytest.approx(1 - 1 / 3.1)


def test_equilibrium_half_growth_against_bisection():
    p = DATASET_D
    sch = DilutionSchedule.constant(p.mu_max / 2, 1.0)
    eq = equilibrium(p, sch)
    assert eq.s_bar == pytest.approx(0.5 * p.s_in, abs=1e-14)
    assert eq.s_bar == pytest.approx(equilibrium_bisection(p.mu_max / 2, p.KY, p.mu_max, p.s_in), abs=1e-13)


def test_equilibrium_washout():
    eq = equilibrium(DATASET_D.replace(mu_max=0.25, saturation=2.0), SINE)
    assert not eq.exists and eq.washout_predicted


@given(params(), schedules())
@settings(max_examples=100, deadline=None)
def test_equilibrium_solves_nu_equation(p, sch):
    eq = equilibrium(p, sch)
    assert eq.exists == (sch.mean() < p.mu_max)
    if eq.exists:
        assert 0 < eq.s_bar < p.s_in and eq.x_bar > 0
        assert float(nu(eq.s_bar, p)) == pytest.approx(sch.mean(), abs=1e-12 * max(1.0, p.mu_max))
        assert eq.s_bar == pytest.approx(equilibrium_bisection(sch.mean(), p.KY, p.mu_max, p.s_in), abs=1e-12 * p.s_in)


def test_threshold_examples():
    assert s_star(DATASET_D) == pytest.approx(0.5)
    assert nu_s_star(DATASET_D) == pytest.approx(1.55)
    p4 = DATASET_D.replace(saturation=4.0)
    assert s_star(p4) == pytest.approx(2 / 3)
    assert abs(float(h_uptake_prime(s_star(p4), p4))) <= 1e-12


@given(params())
@settings(max_examples=100, deadline=None)
def test_uptake_increasing_below_threshold(p):
    ss = s_star(p)
    assert float(nu(ss, p)) == pytest.approx(nu_s_star(p), abs=1e-12 * p.mu_max)
    assert abs(float(h_uptake_prime(ss, p))) <= 1e-12 * p.mu_max * max(1.0, p.KY)
    s = np.linspace(0, ss, 1000, endpoint=False)
    assert np.all(h_uptake_prime(s, p) > 0)
    assert np.all(np.diff(h_uptake(s, p)) > 0)
    h = 1e-6 * p.s_in
    mid = 0.5 * ss
    fd = (h_uptake(mid + h, p) - h_uptake(mid - h, p)) / (2 * h)
    assert float(h_uptake_prime(mid, p)) == pytest.approx(float(fd), rel=1e-6)


def test_z_transform_examples():
    p = DATASET_D
    sb = 1 / 3.1
    assert abs(float(z_transform(sb, 1 - sb, p))) < 1e-15
    assert float(z_transform(0.0, 0.0, p)) == 1.0
    rng = np.random.default_rng(3)
    s, x = rng.uniform(0, 1, 20), rng.uniform(0, 1, 20)
    np.testing.assert_allclose(z_transform(s, x, p), p.yield_ * (p.s_in - s) - x)
    assert float(biomass_from_substrate(1.0, p)) == 0.0
    assert float(biomass_from_substrate(0.0, p)) == p.yield_ * p.s_in


def test_condition_predicates():
    assert existence_conditions(DATASET_D, SINE)
    wash = DATASET_D.replace(mu_max=0.25, saturation=2.0)
    assert trivial_uniqueness_conditions(wash, SINE)
    assert not trivial_uniqueness_conditions(wash.replace(memory_length=0.5), SINE)
    bang = DilutionSchedule.bangbang(0.5, 1.5, 0.25, 0.75, 1.0)
    assert nontrivial_uniqueness_conditions(DATASET_D, bang, 0.272)
    assert not nontrivial_uniqueness_conditions(DATASET_D, bang, 0.6)
    assert nontrivial_uniqueness_conditions(DATASET_D, SINE, 0.274)


# -- config text ----------------------------------------------------------------


def test_config_parse_and_dump_round_trip():
    text = "# demo\nalpha = 0.8\nname = x  # trailing\n\n[schedule]\nkind = sinusoid\nmean = 1.0\n"
    data = parse_config(text)
    assert data == {"alpha": "0.8", "name": "x", "schedule": {"kind": "sinusoid", "mean": "1.0"}}
    assert parse_config(dump_config(data)) == data


@pytest.mark.parametrize(
    "text,line",
    [("alpha = 1\nalpha = 2\n", 2), ("a = 1\nnot a pair\n", 2), ("[s]\n[s]\n", 2), ("\n\n = 3\n", 3), ("k =\n", 1)],
)
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text, source="demo.cfg")
    assert info.value.line == line
    assert str(info.value).startswith(f"demo.cfg:{line}:")


def test_config_load_missing_file(tmp_path):
    from slidemem.config import load_config

    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_time_scale():
    assert DATASET_D.time_scale == 1.0
    assert DATASET_D.replace(theta=0.5).time_scale == pytest.approx(0.5**0.2)
    assert math.isclose(DATASET_D.replace(theta=0.5, alpha=1.0).time_scale, 1.0)
