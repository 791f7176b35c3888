import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavity_moments import SystemParams, closed_form_g2, closed_form_intensity, solve_moments, spin_moments
from cavity_moments.errors import PreconditionError, SingularRegimeError


@pytest.mark.parametrize("N", [1, 20])
def test_bunching_limit_small_kappa(N):
    assert closed_form_g2(SystemParams(n_emitters=N, kappa=1e-6)) == pytest.approx(3.0, abs=1e-4)


def test_single_emitter_by_hand():
    # m2 = m4 = 1, j(j+1) = 3/4: prefactor -> 2 and bracket -> 3/2 as kappa -> 0
    x = 1e-9
    p = SystemParams(n_emitters=1, kappa=x)
    prefactor = 3 * (4 + x) ** 2 / ((4 + 3 * x) * (6 + x))
    assert prefactor == pytest.approx(2.0, rel=1e-8)
    assert closed_form_g2(p) == pytest.approx(3.0, abs=1e-8)


def test_large_ensemble_fast_cavity():
    assert closed_form_g2(SystemParams(n_emitters=200, kappa=1e6)) == pytest.approx(9 / 5, abs=1e-3)


@pytest.mark.parametrize("N", [50, 200, 1000])
def test_fast_cavity_limit_is_moment_ratio(N):
    # kappa -> infinity leaves m4/m2^2, which tends to 9/5 for large N
    m = spin_moments(N)
    assert closed_form_g2(SystemParams(n_emitters=N, kappa=1e9)) == pytest.approx(m.m4 / m.m2**2, rel=1e-6)


def test_does_not_read_coupling():
    values = {closed_form_g2(SystemParams(n_emitters=5, g=g, phi=phi, kappa=0.7)) for g in (0, 1, 7) for phi in (0, 2)}
    assert len(values) == 1


@pytest.mark.parametrize("bad", [dict(epsilon=0.1), dict(delta=0.1), dict(n_emitters=0)])
def test_g2_preconditions(bad):
    with pytest.raises(PreconditionError):
        closed_form_g2(SystemParams(**bad))


def test_g2_needs_relaxation():
    with pytest.raises(SingularRegimeError):
        closed_form_g2(SystemParams(gamma=0.0))


@given(st.floats(0, 20), st.floats(-10, 10), st.floats(0.01, 10))
def test_empty_cavity_lorentzian(eps, delta, kappa):
    p = SystemParams(g=0.0, epsilon=eps, delta=delta, kappa=kappa)
    assert closed_form_intensity(p) == pytest.approx(eps**2 / (kappa**2 + delta**2), rel=1e-14)


@pytest.mark.parametrize("N, g, kappa", [(1, 1.0, 1.0), (20, 10.0, 0.3), (7, 2.5, 4.0)])
def test_zero_drive_intensity(N, g, kappa):
    p = SystemParams(n_emitters=N, g=g, kappa=kappa)
    expected = g**2 * spin_moments(N).m2 / (4 * kappa * (kappa + 4 * p.Gamma))
    assert closed_form_intensity(p) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("N", [0, 1, 20])
def test_strong_drive_empty_coupling(N):
    assert closed_form_intensity(SystemParams(n_emitters=N, g=0.0, epsilon=20.0, kappa=1.0)) == 400.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.floats(0.1, 10), st.floats(-3, 3))
def test_g2_matches_solver(N, g, log_kappa):
    p = SystemParams(n_emitters=N, g=g, kappa=10**log_kappa)
    assert solve_moments(p).g2 == pytest.approx(closed_form_g2(p), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 50), st.floats(0, 10), st.floats(0.01, 20), st.floats(-10, 10), st.floats(-2, 1),
       st.floats(0, 2 * math.pi))
def test_intensity_matches_solver(N, g, eps, delta, log_kappa, phi):
    p = SystemParams(n_emitters=N, g=g, epsilon=eps, delta=delta, kappa=10**log_kappa, phi=phi)
    assert solve_moments(p).intensity == pytest.approx(closed_form_intensity(p), rel=1e-10)


def test_explicit_spin_argument():
    p = SystemParams(n_emitters=3, g=1.0)
    assert closed_form_g2(p, spin_moments(3)) == closed_form_g2(p)
    assert np.isfinite(closed_form_intensity(p, spin_moments(3)))
