import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from rggcoupling.errors import DomainError, NumericalError
from rggcoupling.sphere_law import (
    Interval,
    SphericalLaw,
    law_for,
    lemma_ratios,
    sample_coordinate,
    sample_sphere,
    tau_threshold,
)

P_VALUES = (0.05, 0.1, 0.25, 0.5)


def mc_coordinates(seed, d, m):
    """Independent oracle: first coordinate of normalized Gaussians."""
    g = np.random.default_rng(seed).standard_normal((m, d))
    return g[:, 0] / np.linalg.norm(g, axis=1)


# -- pdf ---------------------------------------------------------------------

def test_pdf_d3_is_flat():
    assert law_for(3, 0.25).pdf(0.7) == pytest.approx(0.5, abs=1e-12)


def test_pdf_d5_at_zero_matches_quadrature():
    raw, _ = integrate.quad(lambda x: 1 - x * x, -1, 1)
    assert law_for(5, 0.1).pdf(0.0) == pytest.approx(1 / raw, abs=1e-12)
    assert 1 / raw == pytest.approx(0.75)


def test_pdf_vanishes_at_boundary():
    assert law_for(4, 0.1).pdf(1.0) == 0.0


@pytest.mark.parametrize("d", [3, 4, 7, 50, 1000])
def test_pdf_integrates_to_one(d):
    law = law_for(d, 0.1)
    val, _ = integrate.quad(law.pdf, -1, 1, points=[0.0], limit=200)
    assert val == pytest.approx(1.0, abs=10 * law.cdf_tol + 1e-10)


def test_domain_errors():
    law = law_for(6, 0.1)
    for fn in (law.pdf, law.cdf, law.phi):
        with pytest.raises(DomainError):
            fn(1.5)
    with pytest.raises(DomainError):
        law.quantile(1.2)
    assert law.quantile(0.0) == -1.0 and law.quantile(1.0) == 1.0
    with pytest.raises(DomainError):
        SphericalLaw(6, 0.6)
    with pytest.raises(DomainError):
        SphericalLaw(2, 0.1)


# -- cdf and quantile ------------------------------------------------------------

def test_cdf_d3_uniform():
    assert law_for(3, 0.1).cdf(0.5) == pytest.approx(0.75, abs=1e-12)


@pytest.mark.parametrize("d", [3, 8, 129, 4096])
def test_cdf_symmetry_at_zero(d):
    assert law_for(d, 0.1).cdf(0.0) == pytest.approx(0.5, abs=1e-15)


def test_cdf_matches_monte_carlo_d8():
    x = mc_coordinates(11, 8, 10**6)
    emp = np.mean(x <= 0.3)
    se = math.sqrt(emp * (1 - emp) / x.size)
    assert abs(law_for(8, 0.1).cdf(0.3) - emp) < 3 * se


def test_quantile_examples():
    assert law_for(3, 0.1).quantile(0.9) == pytest.approx(0.8, abs=1e-12)
    assert law_for(17, 0.1).quantile(0.5) == pytest.approx(0.0, abs=1e-14)
    law = law_for(16, 0.1)
    assert law.quantile(1 - 0.1) == pytest.approx(tau_threshold(16, 0.1), abs=law.cdf_tol)


@pytest.mark.parametrize("d", [3, 5, 30, 1000, 65536])
def test_quantile_cdf_round_trip(d):
    law = law_for(d, 0.1)
    q = np.concatenate([[1e-4], np.linspace(0.01, 0.99, 99), [1 - 1e-4]])
    assert np.max(np.abs(law.cdf(law.quantile(q)) - q)) <= law.cdf_tol


@settings(max_examples=60, deadline=None)
@given(d=st.integers(3, 5000), q1=st.floats(1e-6, 1 - 1e-6), q2=st.floats(1e-6, 1 - 1e-6))
def test_quantile_monotone(d, q1, q2):
    law = law_for(d, 0.1)
    if q1 < q2:
        assert law.quantile(q1) <= law.quantile(q2)


# -- threshold ----------------------------------------------------------------

@pytest.mark.parametrize("p", P_VALUES)
def test_tau_d3_closed_form(p):
    assert tau_threshold(3, p) == pytest.approx(1 - 2 * p, abs=1e-9)


def test_tau_median_and_shrinkage():
    assert tau_threshold(40, 0.5) == pytest.approx(0.0, abs=1e-14)
    assert 0 < tau_threshold(100, 0.1) < tau_threshold(25, 0.1)


@pytest.mark.parametrize("d", [3, 10, 300, 16384])
@pytest.mark.parametrize("p", [0.01, 0.1, 0.5])
def test_cdf_at_tau(d, p):
    law = law_for(d, p)
    assert law.cdf(law.tau) == pytest.approx(1 - p, abs=law.cdf_tol)
    assert 0 <= law.tau < 1


@pytest.mark.parametrize("p", [0.05, 0.1, 0.25])
def test_tau_scale_band(p):
    ratios = [lemma_ratios(d, p)["tau_ratio"] for d in (8, 32, 128, 512, 1024)]
    mid = float(np.mean(ratios))
    assert all(abs(r - mid) <= 0.2 * mid for r in ratios)


# -- involution ---------------------------------------------------------------

@pytest.mark.parametrize("p", P_VALUES)
def test_phi_d3_closed_form(p):
    law = law_for(3, p)
    x = np.linspace(-1, law.tau, 201)
    assert np.max(np.abs(law.phi(x) - (1 - p * (x + 1) / (1 - p)))) <= 1e-9


def test_phi_examples():
    law = law_for(3, 0.25)
    assert law.phi(-1.0) == pytest.approx(1.0, abs=1e-12)
    assert law.phi(1.0) == pytest.approx(-1.0, abs=1e-12)
    # closed form 1 - p(x+1)/(1-p) at x = 0
    assert law.phi(0.0) == pytest.approx(2 / 3, abs=1e-12)
    for d in (3, 20, 5000):
        for p in (0.05, 0.5):
            lw = law_for(d, p)
            assert lw.phi(lw.tau) == pytest.approx(lw.tau, abs=1e-12)


@pytest.mark.parametrize("d,p", [(3, 0.25), (10, 0.1), (200, 0.05), (4096, 0.05), (16384, 0.5)])
def test_phi_involution_on_law_draws(d, p):
    law = law_for(d, p)
    x = sample_coordinate(np.random.default_rng(d), law, 10**4)
    assert np.max(np.abs(law.phi(law.phi(x)) - x)) <= 1e-10


def test_phi_symmetric_case_is_negation():
    law = law_for(12, 0.5)
    x = np.linspace(-0.9, 0.9, 37)
    assert np.allclose(law.phi(x), -x, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(d=st.integers(3, 60), p=st.sampled_from([0.05, 0.2, 0.5]), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_phi_decreasing_and_swaps_sides(d, p, x, y):
    law = law_for(d, p)
    if x < y:
        assert law.phi(x) >= law.phi(y) - 1e-12
    if x <= law.tau:
        assert law.phi(x) >= law.tau - 1e-12


def test_phi_measure_preservation():
    law = law_for(9, 0.2)
    rng = np.random.default_rng(5)
    x = sample_coordinate(rng, law, 4 * 10**5)
    lo, hi = x[x < law.tau], x[x >= law.tau]
    assert stats.ks_2samp(law.phi(lo[:50000]), hi[:50000]).pvalue > 1e-3


def test_scalar_and_vector_paths_agree():
    for d, p in [(5, 0.3), (300, 0.05), (16384, 0.05)]:
        law = law_for(d, p)
        x = sample_coordinate(np.random.default_rng(1), law, 200)
        vec = law.phi(x)
        assert np.array_equal(vec, np.array([law.phi(float(v)) for v in x]))


# -- interval involution -----------------------------------------------------------

def test_phi_interval_endpoints_and_fixed_point():
    law = law_for(30, 0.1)
    iv = Interval(law.tau - 0.05, law.tau + 0.04)
    assert law.phi_interval(iv.lo, iv) == iv.hi
    assert law.phi_interval(iv.hi, iv) == iv.lo
    assert law.phi_interval(law.tau, iv) == law.tau
    with pytest.raises(DomainError):
        law.phi_interval(iv.hi + 0.01, iv)


def test_phi_interval_d3_oracle():
    # Uniform marginal: the lower part [u, tau] maps linearly onto [tau, v] reversed.
    law = law_for(3, 0.25)
    u, v = 0.3, 0.6
    iv = Interval(u, v)
    x = np.linspace(u, law.tau, 50)
    expected = v - (x - u) * (v - law.tau) / (law.tau - u)
    assert np.max(np.abs(law.phi_interval(x, iv) - expected)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(d=st.integers(3, 2000), a=st.floats(0.01, 0.9), b=st.floats(0.01, 0.9), t=st.floats(0, 1))
def test_phi_interval_involution(d, a, b, t):
    law = law_for(d, 0.1)
    w = 1 / math.sqrt(d)
    iv = Interval(max(law.tau - a * w, -1.0), min(law.tau + b * w, 1.0))
    x = iv.lo + t * iv.length
    y = law.phi_interval(x, iv)
    assert iv.lo <= y <= iv.hi
    assert abs(law.phi_interval(y, iv) - x) <= 1e-9


def test_q_interval_examples():
    law = law_for(7, 0.1)
    assert law.q_interval(Interval(-1.0, 1.0)) == pytest.approx(0.1, abs=1e-12)
    d3 = law_for(3, 0.25)
    assert d3.q_interval(Interval(0.4, 0.6)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(NumericalError):
        tiny = law_for(4096, 0.05)
        tiny.q_interval(Interval(tiny.tau - 1e-14, tiny.tau + 1e-14))


def test_q_interval_monte_carlo_d6():
    law = law_for(6, 0.1)
    iv = Interval(law.tau - 0.01, law.tau + 0.01)
    x = mc_coordinates(3, 6, 2 * 10**6)
    inside = x[(x >= iv.lo) & (x <= iv.hi)]
    emp = np.mean(inside >= law.tau)
    se = math.sqrt(emp * (1 - emp) / inside.size)
    assert abs(law.q_interval(iv) - emp) < 3 * se


# -- moments and masses -----------------------------------------------------------------

def test_conditional_moment_examples():
    law = law_for(3, 0.25)
    assert law.conditional_moment(1) == pytest.approx(0.75, abs=1e-10)
    lw = law_for(300, 0.05)
    assert lw.conditional_moment(1) >= lw.tau


def test_conditional_second_moment_monte_carlo():
    law = law_for(50, 0.1)
    x = mc_coordinates(4, 50, 10**6)
    tail = x[x >= law.tau] ** 2
    se = tail.std(ddof=1) / math.sqrt(tail.size)
    assert abs(law.conditional_moment(2) - tail.mean()) < 3 * se


def test_interval_mass_examples():
    law = law_for(3, 0.25)
    assert law.interval_mass(0.0) == 0.0
    assert law.interval_mass(0.1) == pytest.approx(0.1, abs=1e-12)
    lw = law_for(500, 0.1)
    small = 1e-4
    assert lw.interval_mass(small / 2) / lw.interval_mass(small) == pytest.approx(0.5, rel=0.05)


# -- sampling --------------------------------------------------------------------

def test_sample_sphere_unit_norm():
    rng = np.random.default_rng(0)
    for d in (3, 50, 9000):
        assert abs(np.linalg.norm(sample_sphere(rng, d)) - 1) < 1e-12
    rows = sample_sphere(rng, 20, 100)
    assert np.max(np.abs(np.linalg.norm(rows, axis=1) - 1)) < 1e-12


def test_sample_coordinate_ks_and_mean():
    law = law_for(11, 0.1)
    x = sample_coordinate(np.random.default_rng(8), law, 10**5)
    assert stats.kstest(x, law.cdf).pvalue > 1e-3
    big = sample_coordinate(np.random.default_rng(9), law, 10**6)
    assert abs(big.mean()) < 4 * math.sqrt(1 / 11 / big.size)
