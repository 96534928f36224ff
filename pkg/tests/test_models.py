import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from conftest import random_state
from dmsing.bloch import AffineMap, SIGMA_Z, apply_map, make_basis, state_to_bloch
from dmsing.errors import DomainError, PoleError, SchemaError
from dmsing.models import (
    DephasingParams,
    JCParams,
    affine_from_kraus,
    dephasing_family,
    dephasing_gamma,
    export_tabulated,
    family_from_kraus,
    jc_c,
    jc_family,
    jc_gamma,
    jc_singular_time,
    load_tabulated_family,
    semigroup_family,
    write_kraus_family,
)

DEPH = DephasingParams(A=1, N=4)
JC5 = JCParams(gamma0=5, lam=1)
JC_OVER = JCParams(gamma0=0.2, lam=1)


def builtin_families():
    return [
        dephasing_family(DEPH),
        dephasing_family(DephasingParams(A=0.3, N=7)),
        jc_family(JC5),
        jc_family(JC_OVER),
        jc_family(JCParams(gamma0=0.5, lam=1)),
        semigroup_family(0.8),
    ]


@pytest.mark.parametrize("fam", builtin_families(), ids=lambda f: f"{f.name}{f.params}")
def test_identity_at_zero(fam):
    m = fam(0)
    np.testing.assert_allclose(m.D, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(m.f, 0, atol=1e-10)


# -- dephasing ----------------------------------------------------------------


def test_dephasing_examples():
    fam = dephasing_family(DEPH)
    np.testing.assert_allclose(fam(math.pi / 2).D, np.diag([0, 0, 1]), atol=1e-30)
    np.testing.assert_allclose(fam(math.pi).D, np.eye(3), atol=1e-15)
    assert fam.closed_form_singular_points(0) == pytest.approx(math.pi / 2)
    assert fam.closed_form_singular_points(2) == pytest.approx(5 * math.pi / 2)


def test_dephasing_bounds_and_period():
    p = DephasingParams(A=1.3, N=6)
    fam = dephasing_family(p)
    period = math.sqrt(p.N) * math.pi / p.A
    assert fam.period == pytest.approx(period)
    for t in np.linspace(0, 12, 97):
        m = fam(t)
        assert np.all(np.abs(m.D) <= 1) and not np.any(m.f)
        np.testing.assert_allclose(fam(t + period).D, m.D, atol=1e-12)


def test_dephasing_matches_kraus_form(rng):
    # Lambda(rho) = (1 - C)/2 sz rho sz + (1 + C)/2 rho
    fam = dephasing_family(DEPH)
    basis = make_basis(2)
    for t in (0.2, 1.1, 2.9):
        C = math.cos(t) ** 4
        rho = random_state(rng, 2)
        direct = (1 - C) / 2 * SIGMA_Z @ rho @ SIGMA_Z + (1 + C) / 2 * rho
        np.testing.assert_allclose(apply_map(fam(t), rho, basis), direct, atol=1e-14)


def test_dephasing_gamma_examples():
    assert dephasing_gamma(DEPH, 0) == 0
    assert dephasing_gamma(DEPH, math.pi / 4) == pytest.approx(2)
    with pytest.raises(PoleError):
        dephasing_gamma(DEPH, math.pi / 2)


def test_dephasing_params_validation():
    with pytest.raises(ValueError):
        DephasingParams(A=0, N=4)
    with pytest.raises(ValueError):
        DephasingParams(A=1, N=0)


# -- Jaynes-Cummings ------------------------------------------------------------


def test_jc_c_examples():
    assert jc_c(JC5, 0) == 1
    assert jc_c(JC5, 2 * math.pi / 3) == pytest.approx(-math.exp(-math.pi / 3), abs=1e-12)
    assert -math.exp(-math.pi / 3) == pytest.approx(-0.350920, abs=1e-6)
    ts = np.linspace(0, 10, 1001)
    cs = np.array([jc_c(JC_OVER, t) for t in ts])
    assert np.all(cs > 0) and np.all(np.diff(cs) < 0)


def test_jc_regimes():
    assert JC5.regime == "underdamped" and JC5.d0 == pytest.approx(3)
    assert JC_OVER.regime == "overdamped"
    crit = JCParams(gamma0=0.5, lam=1)
    assert crit.regime == "critical"
    # critical limit is continuous with both neighbours
    for t in (0.5, 2.0, 7.0):
        c = jc_c(crit, t)
        assert jc_c(JCParams(0.5 - 1e-7, 1), t) == pytest.approx(c, rel=1e-5)
        assert jc_c(JCParams(0.5 + 1e-7, 1), t) == pytest.approx(c, rel=1e-5)
        assert jc_gamma(JCParams(0.5 + 1e-7, 1), t) == pytest.approx(jc_gamma(crit, t), rel=1e-5)


def test_jc_gamma_examples():
    assert jc_gamma(JC5, 0) == 0
    assert all(jc_gamma(JC_OVER, t) >= 0 for t in np.linspace(0, 10, 501))
    tc = jc_singular_time(JC5, 0)
    assert abs(jc_gamma(JC5, tc - 1e-6)) > 1e5
    with pytest.raises(PoleError):
        jc_gamma(JC5, tc)


@pytest.mark.parametrize("p", [JC5, JC_OVER, JCParams(gamma0=0.5, lam=1), JCParams(2.0, 0.7)])
def test_jc_gamma_is_log_derivative(p):
    h = 1e-6
    for t in (0.3, 0.9, 1.7):
        dc = (jc_c(p, t + h) - jc_c(p, t - h)) / (2 * h)
        assert jc_gamma(p, t) == pytest.approx(-2 * dc / jc_c(p, t), rel=1e-6)


def test_jc_family_examples():
    fam = jc_family(JC5)
    tc = jc_singular_time(JC5, 0)
    assert tc == pytest.approx(2 / 3 * (math.pi - math.atan(3)), abs=1e-14)
    assert tc == pytest.approx(1.261698, abs=1e-6)
    m = fam(tc)
    np.testing.assert_allclose(m.D, 0, atol=1e-15)
    np.testing.assert_allclose(m.f, [0, 0, -1], atol=1e-15)
    assert jc_family(JC_OVER).closed_form_singular_points is None


def test_jc_singular_times_are_zeros_of_c():
    for g0 in (0.6, 1, 5, 50):
        p = JCParams(gamma0=g0, lam=1)
        for n in range(4):
            assert abs(jc_c(p, jc_singular_time(p, n))) < 1e-12


def test_jc_structure():
    fam = jc_family(JC5)
    for t in np.linspace(0, 9, 73):
        m = fam(t)
        assert m.D[2, 2] == m.D[0, 0] ** 2
        assert m.f[2] == m.D[2, 2] - 1
        np.testing.assert_allclose(m([0, 0, -1]), [0, 0, -1], atol=1e-15)


def test_jc_matches_amplitude_damping_solution(rng):
    # rho_ee(t) = |c|^2 rho_ee(0), rho_eg(t) = c rho_eg(0), |0> excited
    fam = jc_family(JC5)
    basis = make_basis(2)
    for t in (0.4, 1.7, 3.3):
        c = jc_c(JC5, t)
        rho = random_state(rng, 2)
        ee = c * c * rho[0, 0]
        expected = np.array([[ee, c * rho[0, 1]], [c * rho[1, 0], 1 - ee]])
        np.testing.assert_allclose(apply_map(fam(t), rho, basis), expected, atol=1e-14)


# -- generator consistency -----------------------------------------------------


def test_dephasing_generator_consistency():
    p = DephasingParams(A=1, N=4)
    t_end = 0.9 * math.pi / 2
    sol = solve_ivp(lambda t, y: [-2 * dephasing_gamma(p, t) * y[0]], (0, t_end), [1.0],
                    rtol=1e-11, atol=1e-13, dense_output=True)
    fam = dephasing_family(p)
    for t in np.linspace(0, t_end, 25):
        assert sol.sol(t)[0] == pytest.approx(fam(t).D[0, 0], abs=1e-6)


def test_jc_generator_consistency():
    t_end = 0.95 * jc_singular_time(JC5, 0)
    sol = solve_ivp(lambda t, y: [-jc_gamma(JC5, t) * y[0]], (0, t_end), [1.0],
                    rtol=1e-11, atol=1e-13, dense_output=True)
    fam = jc_family(JC5)
    for t in np.linspace(0, t_end, 25):
        assert sol.sol(t)[0] == pytest.approx(fam(t).D[2, 2], abs=1e-6)


# -- tabulated and Kraus files -------------------------------------------------


def _write(tmp_path, data, name="fam.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_tabulated_midpoint(tmp_path):
    path = _write(tmp_path, {"d": 2, "samples": [
        {"t": 0, "D": np.eye(3).ravel().tolist(), "f": [0, 0, 0]},
        {"t": 1, "D": np.diag([0.5, 0.5, 1]).ravel().tolist(), "f": [0, 0, 0]},
    ]})
    fam = load_tabulated_family(path)
    np.testing.assert_allclose(fam(0.5).D, np.diag([0.75, 0.75, 1]))
    with pytest.raises(DomainError):
        fam(1.5)


@pytest.mark.parametrize("samples", [
    [{"t": 0, "D": np.diag([0.9, 1, 1]).ravel().tolist(), "f": [0, 0, 0]}],
    [{"t": 0.1, "D": np.eye(3).ravel().tolist(), "f": [0, 0, 0]}],
    [{"t": 0, "D": np.eye(3).ravel().tolist(), "f": [0, 0, 0]},
     {"t": 0, "D": np.eye(3).ravel().tolist(), "f": [0, 0, 0]}],
    [{"t": 0, "D": [1, 0, 0], "f": [0, 0, 0]}],
    [{"t": 0, "D": np.eye(3).ravel().tolist()}],
    [],
])
def test_tabulated_rejects_bad_files(tmp_path, samples):
    path = _write(tmp_path, {"d": 2, "samples": samples})
    with pytest.raises(SchemaError):
        load_tabulated_family(path)


def test_tabulated_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_tabulated_family(str(path))


def test_tabulated_round_trip(tmp_path):
    fam = dephasing_family(DEPH)
    times = np.linspace(0, 5, 51)
    path = str(tmp_path / "deph.json")
    export_tabulated(fam, times, path)
    back = load_tabulated_family(path)
    for t in times:
        np.testing.assert_allclose(back(t).D, fam(t).D, atol=1e-12)
        np.testing.assert_allclose(back(t).f, fam(t).f, atol=1e-12)


def _kraus_file(tmp_path, d, times, sets):
    path = str(tmp_path / "kraus.json")
    write_kraus_family(path, d, times, sets)
    return path


def test_kraus_identity_family(tmp_path):
    fam = family_from_kraus(_kraus_file(tmp_path, 2, [0, 1, 2], [[np.eye(2)]] * 3))
    for t in (0, 0.5, 2):
        np.testing.assert_allclose(fam(t).D, np.eye(3), atol=1e-15)


def test_kraus_full_dephasing():
    p = 0.5
    m = affine_from_kraus([math.sqrt(1 - p) * np.eye(2), math.sqrt(p) * SIGMA_Z], make_basis(2))
    np.testing.assert_allclose(m.D, np.diag([0, 0, 1]), atol=1e-15)
    np.testing.assert_allclose(m.f, 0, atol=1e-15)


@pytest.mark.parametrize("eta", [0.0, 0.3, 0.8, 1.0])
def test_kraus_amplitude_damping(eta):
    # decay |0> (excited) -> |1> (ground), the convention of the JC family
    K0 = np.array([[math.sqrt(1 - eta), 0], [0, 1]])
    K1 = np.array([[0, 0], [math.sqrt(eta), 0]])
    basis = make_basis(2)
    m = affine_from_kraus([K0, K1], basis)

    # oracle: push the Pauli basis through the channel and read off coefficients
    def channel(X):
        return K0 @ X @ K0.conj().T + K1 @ X @ K1.conj().T

    D = np.array([[np.trace(basis[i] @ channel(basis[j])).real / 2 for j in range(3)]
                  for i in range(3)])
    f = np.array([np.trace(basis[i] @ channel(np.eye(2))).real / 2 for i in range(3)])
    np.testing.assert_allclose(m.D, D, atol=1e-15)
    np.testing.assert_allclose(m.f, f, atol=1e-15)
    s = math.sqrt(1 - eta)
    np.testing.assert_allclose(m.D, np.diag([s, s, 1 - eta]), atol=1e-15)
    np.testing.assert_allclose(m.f, [0, 0, -eta], atol=1e-15)


def test_kraus_rejects_non_trace_preserving(tmp_path):
    with pytest.raises(SchemaError):
        family_from_kraus(_kraus_file(tmp_path, 2, [0, 1], [[np.eye(2)], [0.5 * np.eye(2)]]))


def test_kraus_schema_violation(tmp_path):
    path = _write(tmp_path, {"d": 2, "samples": [{"t": 0, "kraus": [[[1, 0], [0, 0]]]}]})
    with pytest.raises(SchemaError):
        family_from_kraus(path)


@pytest.mark.parametrize("d", [2, 3])
def test_kraus_unitary_family_is_orthogonal(tmp_path, rng, d):
    H = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = H + H.conj().T
    times = np.linspace(0, 2, 9)
    path = _kraus_file(tmp_path, d, times, [[expm(-1j * t * H)] for t in times])
    fam = family_from_kraus(path)
    n = d * d - 1
    for t in times:
        m = fam(t)
        np.testing.assert_allclose(m.D @ m.D.T, np.eye(n), atol=1e-10)
        np.testing.assert_allclose(m.f, 0, atol=1e-12)


def test_kraus_family_matches_state_evolution(tmp_path, rng):
    # D and f reproduce sum K rho K^dag at the coherence-vector level (qutrit)
    d = 3
    basis = make_basis(d)
    G = rng.normal(size=(2 * d, d)) + 1j * rng.normal(size=(2 * d, d))
    Q, _ = np.linalg.qr(G)
    kraus = [Q[:d], Q[d:]]
    m = affine_from_kraus(kraus, basis)
    rho = random_state(rng, d)
    out = sum(K @ rho @ K.conj().T for K in kraus)
    np.testing.assert_allclose(m(state_to_bloch(rho, basis)), state_to_bloch(out, basis), atol=1e-12)
    assert isinstance(m, AffineMap)
