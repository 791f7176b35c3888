import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavity_moments import SystemParams, load_scenario, spin_moments, validate_regime
from cavity_moments.errors import ParameterError
from cavity_moments.params import params_from_mapping, parse_scenario


def brute_force_moment(N, k):
    return Fraction(sum((2 * n - N) ** k for n in range(N + 1)), N + 1)


@pytest.mark.parametrize("N", range(0, 201))
def test_spin_moments_match_enumeration(N):
    m = spin_moments(N)
    assert m.m0 == 1.0
    assert m.m1 == 0.0 and m.m3 == 0.0
    assert m.m2 == float(brute_force_moment(N, 2))
    assert m.m4 == float(brute_force_moment(N, 4))
    assert brute_force_moment(N, 1) == 0 and brute_force_moment(N, 3) == 0


@pytest.mark.parametrize("N, m2, m4", [(1, 1, 1), (0, 0, 0), (2, Fraction(8, 3), Fraction(32, 3))])
def test_spin_moment_examples(N, m2, m4):
    m = spin_moments(N)
    assert m.m2 == float(m2) and m.m4 == float(m4)


def test_spin_moments_twenty():
    assert spin_moments(20).m2 == pytest.approx(440 / 3, rel=1e-15)


@given(st.integers(min_value=1, max_value=400))
def test_jensen_bound(N):
    m = spin_moments(N)
    assert m.m4 >= m.m2**2 >= 0


@pytest.mark.parametrize("N", [0, 1, 2, 5, 20, 57])
def test_casimir_identity_from_ladder(N):
    n = np.arange(N + 1)
    up = np.sqrt((N - n[:-1]) * (n[:-1] + 1.0))
    rp = np.diag(up, -1)
    rm = rp.T
    rz = np.diag(2.0 * n - N)
    rho = np.eye(N + 1) / (N + 1)
    ladder = np.trace((rp @ rm + rm @ rp) @ rho)
    j = N / 2
    assert spin_moments(N).m2 / 4 + ladder / 2 == pytest.approx(j * (j + 1), abs=1e-12)
    # Operator form, and su(2) relations of the ladder matrices
    np.testing.assert_allclose(rz @ rz / 4 + (rp @ rm + rm @ rp) / 2, j * (j + 1) * np.eye(N + 1), atol=1e-10)
    np.testing.assert_allclose(rp @ rm - rm @ rp, rz, atol=1e-10)
    np.testing.assert_allclose(rz @ rp - rp @ rz, 2 * rp, atol=1e-10)


def test_derived_rates():
    p = SystemParams(g=2.0, phi=math.pi / 2, gamma=3.0, gamma_d=1.0, n_emitters=3)
    assert p.Gamma == 1.0 and p.Gamma0 == 0.75
    assert abs(p.g0) == pytest.approx(1.0)
    assert p.g0 == pytest.approx(1j)
    assert p.j == Fraction(3, 2)
    assert p.casimir == pytest.approx(15 / 4)


@pytest.mark.parametrize("bad", [
    dict(kappa=0.0), dict(kappa=-1.0), dict(g=-1.0), dict(epsilon=-0.1), dict(gamma=-1.0),
    dict(n_emitters=-1), dict(n_emitters=1.5), dict(delta=math.inf), dict(omega=0.0), dict(phi=math.nan),
])
def test_invalid_params_rejected(bad):
    with pytest.raises(ParameterError):
        SystemParams(**bad)


def test_zero_emitters_allowed():
    assert SystemParams(n_emitters=0).n_emitters == 0


def test_params_are_immutable():
    p = SystemParams()
    with pytest.raises(Exception):
        p.g = 3.0


def test_regime_all_satisfied():
    assert validate_regime(SystemParams(omega=100, g=1, gamma=1, kappa=1, delta=0.01)) == []


def test_regime_small_omega_warns_on_each_rate():
    warnings = validate_regime(SystemParams(omega=5, g=1, gamma=1, kappa=1, delta=0))
    text = "\n".join(warnings)
    assert len(warnings) == 3
    for name in ("g", "gamma", "kappa"):
        assert f"*{name}=" in text


def test_regime_without_omega_is_a_single_note():
    warnings = validate_regime(SystemParams())
    assert len(warnings) == 1 and warnings[0].startswith("note:")


def test_regime_large_detuning():
    assert any("delta" in w for w in validate_regime(SystemParams(omega=100, g=1, gamma=1, kappa=1, delta=20)))


def test_scenario_parsing(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("# scenario\nn_emitters = 20\ng = 10  # coupling\nepsilon=20\n\nkappa = 1\nphi = 0.5\n")
    p = load_scenario(path)
    assert (p.n_emitters, p.g, p.epsilon, p.kappa, p.phi) == (20, 10.0, 20.0, 1.0, 0.5)
    assert p.Gamma == 1.0 and p.gamma_d == 0.0
    q = load_scenario(path, {"g": "3"})
    assert q.g == 3.0 and q.n_emitters == 20


def test_scenario_gamma_units():
    p = params_from_mapping({"gamma_d": "1"})
    assert (p.gamma, p.gamma_d, p.Gamma, p.Gamma0) == (3.0, 1.0, 1.0, 0.75)
    with pytest.raises(ParameterError):
        params_from_mapping({"gamma": "1", "gamma_d": "1"})


def test_scenario_raw_units(tmp_path):
    path = tmp_path / "raw.cfg"
    path.write_text("units = raw\ngamma = 2\ngamma_d = 2\nkappa = 0.5\n")
    p = load_scenario(path)
    assert p.Gamma == 1.0 and p.kappa == 0.5
    path.write_text("units = raw\ngamma = 8\n")
    assert load_scenario(path).Gamma == 2.0


@pytest.mark.parametrize("text", ["bogus = 1\n", "g = 1\ng = 2\n", "g 1\n", "g = abc\n", "n_emitters = 2.5\n",
                                  "units = furlongs\n"])
def test_scenario_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ParameterError):
        load_scenario(path)


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ParameterError, match="cannot read"):
        load_scenario(tmp_path / "nope.cfg")


def test_parse_scenario_keeps_strings():
    values, units = parse_scenario("omega = none\n")
    assert values == {"omega": "none"} and units == "gamma_big"
    assert params_from_mapping(values).omega is None


def test_canonical_is_stable():
    p = SystemParams(n_emitters=20, g=10.0, epsilon=20.0)
    assert p.canonical() == SystemParams(n_emitters=20, g=10, epsilon=20).canonical()
    assert p.canonical().startswith("n_emitters=20;g=10;epsilon=20;")
    assert p.canonical().endswith("omega=none")
