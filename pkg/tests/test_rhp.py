import cmath
import math

import numpy as np
import pytest

from conftest import BENCH_NU, BENCH_U, TIME_U, fit_exponent
from gskdet import asym, rhp
from gskdet.expr import parse
from gskdet.kernel import fredholm_det, make_spec


@pytest.fixture(scope="module")
def pi_space(bench):
    return rhp.Pi_numeric(bench)


@pytest.fixture(scope="module")
def pi_time(timelike):
    return rhp.Pi_numeric(timelike)


# ---------------------------------------------------------------- sigma algebra

def test_sigma_identities():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    for s in (rhp.SIGMA_PLUS, rhp.SIGMA_MINUS):
        assert not np.any(s @ s)
        assert np.allclose(rhp.SIGMA3 @ s @ rhp.SIGMA3, -s)
    assert np.trace(A @ rhp.SIGMA_PLUS) == A[1, 0]
    assert np.trace(A @ rhp.SIGMA_MINUS) == A[0, 1]
    assert np.allclose(rhp.SIGMA3 @ rhp.SIGMA_PLUS - rhp.SIGMA_PLUS @ rhp.SIGMA3, 2 * rhp.SIGMA_PLUS)
    assert np.allclose(rhp.inv2(A) @ A, np.eye(2), atol=1e-14)


# ---------------------------------------------------------------- omega, h

def test_h_for_a_pure_quadratic():
    spec = make_spec(BENCH_NU, "-(lambda-3)^2", q=1.0)
    for lam in (3.1, 3 + 0.2j, 2.8 - 0.1j):
        assert rhp.omega_h(spec, lam)[1] == pytest.approx(1, abs=1e-14)


def test_h_is_constant_for_the_benchmark(bench):
    for lam in (5.0, 5.3, 5 + 0.4j, 4.6 - 0.2j):
        assert rhp.omega_h(bench, lam)[1] == pytest.approx(math.sqrt(0.1), rel=1e-13)


def test_omega_preserves_half_planes(bench, timelike):
    for spec in (bench, timelike):
        for t in np.linspace(0.1, 0.9, 5) * math.pi:
            lam = spec.lambda0 + 0.1 * cmath.exp(1j * t)
            assert rhp.omega_h(spec, lam)[0].imag > 0
            assert rhp.omega_h(spec, lam.conjugate())[0].imag < 0


def test_omega_branch_failure_is_reported():
    # u = sin has u(lambda0 + 2 pi) = u(lambda0): omega vanishes away from the saddle
    spec = make_spec(BENCH_NU, "sin(lambda)", q=1.0, guess=1.5)
    with pytest.raises(rhp.GeometryError):
        rhp.omega_h(spec, spec.lambda0 + 2 * math.pi)


# ---------------------------------------------------------------- jump matrices

def test_jump_matrices_have_unit_determinant(both):
    for lam in (0.3 + 0.2j, -1.2 - 0.1j, 2 + 1j):
        for m in rhp.jump_matrices(both, lam).values():
            assert np.linalg.det(m) == pytest.approx(1, abs=1e-13)


def test_n_left_equals_n_right_on_the_cut(timelike):
    for lam in (-0.6, 0.0, 0.45):
        nl = rhp.jump_matrices(timelike, lam, side=-1)["N_L"]
        nr = rhp.jump_matrices(timelike, lam, side=1)["N_R"]
        assert np.max(np.abs(nl - nr)) <= 1e-8 * np.max(np.abs(nl))


@pytest.mark.parametrize("lam", [-1 + 0.1 + 0.05j, -1 + 0.05 + 0.12j])
def test_local_p_matches_direct_near_minus_q(both, lam):
    assert rhp.P_param(both, -1, lam) == pytest.approx(rhp.P_direct(both, lam), rel=1e-9)


@pytest.mark.parametrize("lam", [-1 + 0.1 - 0.05j, -1 + 0.05 - 0.12j])
def test_local_q_matches_direct_near_minus_q(both, lam):
    assert rhp.Q_param(both, -1, lam) == pytest.approx(rhp.Q_direct(both, lam, "L"), rel=1e-9)


@pytest.mark.parametrize("lam", [1 - 0.1 + 0.05j, 1 + 0.08 - 0.03j, 1 - 0.05 - 0.1j])
def test_local_p_and_q_match_direct_near_q(both, lam):
    which = "L" if both.space_like else "R"
    assert rhp.P_param(both, 1, lam) == pytest.approx(rhp.P_direct(both, lam), rel=1e-9)
    assert rhp.Q_param(both, 1, lam) == pytest.approx(rhp.Q_direct(both, lam, which), rel=1e-9)


# ---------------------------------------------------------------- b coefficients, parametrices

def test_b_product_is_minus_nu_squared(both):
    rng = np.random.default_rng(11)
    for _ in range(20):
        eps = rng.choice([-1, 1])
        lam = eps * both.q + 0.2 * cmath.exp(2j * math.pi * rng.random())
        b12, b21 = rhp.b_coeffs(both, eps, lam)
        nu = both.nu(lam)
        assert abs(b12 * b21 + nu * nu) <= 1e-10


def test_b_coefficients_against_raw_gamma_forms(bench):
    # the module uses sin / (e^{-2 i pi nu} - 1) = (i/2) e^{i pi nu}; compare with the raw quotient
    from scipy.special import gamma
    lam = -1 + 0.1 + 0.1j
    nu = bench.nu(lam)
    ct_ = rhp.C_tilde(bench, "L", lam)
    C = ct_ * (cmath.exp(-2j * math.pi * nu) - 1)
    raw12 = -1j * gamma(1 - nu) ** 2 * cmath.sin(math.pi * nu) / (math.pi * C)
    raw21 = -1j * math.pi * C / (gamma(-nu) ** 2 * cmath.sin(math.pi * nu))
    b12, b21 = rhp.b_coeffs(bench, -1, lam)
    assert b12 == pytest.approx(raw12, rel=1e-12)
    assert b21 == pytest.approx(raw21, rel=1e-12)


def test_parametrix_jumps_and_determinants(both):
    res = rhp.jump_residuals(both)
    assert len(res) == 12
    for name, v in res.items():
        limit = 1e-9 if "det" in name else 1e-8
        assert v <= limit, name


def test_edge_parametrix_refuses_the_edge_point(bench):
    with pytest.raises(ValueError):
        rhp.parametrix_Ppm(bench, 1, 1.0)


def test_saddle_parametrix_decay(both):
    xs = (100.0, 400.0, 1600.0)
    disks = rhp.make_disks(both)
    t = np.linspace(0, 2 * math.pi, 24, endpoint=False)
    pts = both.lambda0 + disks.delta_saddle * np.exp(1j * t)
    norms = []
    for x in xs:
        s = both.with_x(x)
        norms.append(max(np.max(np.abs(rhp.parametrix_P0(s, p) - rhp.I2)) for p in pts))
    assert fit_exponent(xs, norms) == pytest.approx(-0.5, abs=0.05)


def test_edge_expansion_consistency(both):
    xs = (200.0, 800.0)
    disks = rhp.make_disks(both)
    rho = rhp.rho_delta(both, disks)
    for eps in (-1, 1):
        c = eps * both.q
        lam = c + disks.delta_edge * cmath.exp(0.7j)
        res = []
        for x in xs:
            s = both.with_x(x)
            Pinv = rhp.inv2(rhp.parametrix_Ppm(s, eps, lam))
            res.append(np.max(np.abs(x * (lam - c) * (Pinv - rhp.I2) - rhp.Vmat(s, eps, 0, lam))))
        slope = fit_exponent(xs, res)
        assert slope < 0
        assert slope <= rho - 1 + 0.1


def test_saddle_expansion_consistency(both):
    xs = (200.0, 800.0)
    disks = rhp.make_disks(both)
    lam = both.lambda0 + disks.delta_saddle * cmath.exp(2j)
    res = []
    for x in xs:
        s = both.with_x(x)
        Pinv = rhp.inv2(rhp.parametrix_P0(s, lam))
        lead = rhp.d_coeff(s, 0, lam) * rhp.sigma(s) / (lam - s.lambda0)
        res.append(np.max(np.abs(math.sqrt(x) * (Pinv - rhp.I2) - lead)))
    assert fit_exponent(xs, res) <= -0.8


def test_vmat_order_is_checked(bench):
    with pytest.raises(ValueError):
        rhp.Vmat(bench, 1, 2, 1.0)


def test_trace_of_v0_sigma3(both):
    # diagonal (-nu^2, nu^2) times -i (s - eps q)/(u(s) - u(eps q)) -> -i/u'(eps q)
    for eps in (-1, 1):
        s = eps * both.q
        V0 = rhp.Vmat(both, eps, 0, s)
        nu = both.nu(s)
        scalar = 1 / both.u1(s)
        assert np.trace(V0 @ rhp.SIGMA3) == pytest.approx(2j * nu * nu * scalar, rel=1e-13)


# ---------------------------------------------------------------- disks, Pi

def test_disk_overlap_is_a_geometry_error(bench):
    with pytest.raises(rhp.GeometryError):
        rhp.make_disks(bench, delta_edge=1.2)
    with pytest.raises(rhp.GeometryError):
        rhp.make_disks(bench, delta_edge=0.5, delta_saddle=3.6)


def test_default_disks(bench, timelike):
    d = rhp.make_disks(bench)
    assert (d.delta_edge, d.delta_saddle) == (0.5, 1.75)
    d = rhp.make_disks(timelike)
    assert (d.delta_edge, d.delta_saddle) == (0.125, 0.1875)


def test_pi0_squares_to_zero(both):
    P0 = rhp.Pi_terms(both, both.lambda0 + 3j)[0]
    assert not np.any(P0 @ P0)


def test_pi1_decays_like_one_over_lambda(both):
    a = abs(1e3) * np.max(np.abs(rhp.Pi_terms(both, 1e3)[1]))
    b = abs(1e4) * np.max(np.abs(rhp.Pi_terms(both, 1e4)[1]))
    assert b == pytest.approx(a, rel=0.02)


def test_heuristic_order_is_checked(bench):
    with pytest.raises(ValueError):
        rhp.Pi_heuristic(bench, 10j, order=4)


@pytest.mark.parametrize("which", ["space", "time"])
def test_pi_numeric_determinant_and_infinity(which, pi_space, pi_time):
    sol = pi_space if which == "space" else pi_time
    spec = sol.spec
    pts = [spec.lambda0 + 3j, 10, -4 - 2j, 2j, spec.lambda0 + 2 * spec.q + 1j,
           -5, 20 + 20j, 1 + 4j, -2 + 0.5j, 7 - 3j]
    for p in pts:
        assert abs(np.linalg.det(sol(p)) - 1) <= 1e-6
    far = np.max(np.abs(sol(1e4) - rhp.I2))
    near = np.max(np.abs(sol(10) - rhp.I2))
    assert far <= 1e-3 * near


def test_pi_numeric_against_heuristic(bench):
    xs = (100.0, 400.0)
    errs = []
    for x in xs:
        s = bench.with_x(x)
        lam = s.lambda0 + 3j
        errs.append(np.max(np.abs(rhp.Pi_numeric(s)(lam) - rhp.Pi_heuristic(s, lam, 3))))
    assert fit_exponent(xs, errs) <= -1.5


def test_pi_numeric_is_resolved(bench):
    assert rhp.Pi_resolution_check(bench, bench.lambda0 + 3j) <= 1e-8


def test_dlogdet_independent_of_loop_clearance(bench, pi_space):
    a = rhp.dlogdet_rhp(bench, pi_space, clearance=0.1)
    b = rhp.dlogdet_rhp(bench, pi_space, clearance=0.4)
    assert abs(a - b) <= 1e-10 * abs(a)


def test_dlogdet_against_finite_difference(timelike, pi_time):
    h = 0.05
    x = timelike.x
    vals = [fredholm_det(timelike.with_x(x + k * h)) for k in (-2, -1, 1, 2)]
    logs = np.unwrap(np.angle(vals)) * 1j + np.log(np.abs(vals))
    fd = (logs[0] - 8 * logs[1] + 8 * logs[2] - logs[3]) / (12 * h)
    assert abs(rhp.dlogdet_rhp(timelike, pi_time) - fd) <= 0.01 * abs(asym.a_m1(timelike))


def test_exterior_curves_are_negligible(bench):
    a, b = rhp.exterior_neglect(bench), rhp.exterior_neglect(bench.with_x(200.0))
    assert a < 1e-12 and b < a


# ---------------------------------------------------------------- nu = 0

@pytest.fixture(scope="module")
def zero_pair(bench, timelike):
    return [s.with_(nu=parse("0")) for s in (bench, timelike)]


def test_zero_nu_expansion_matrices(zero_pair):
    for spec in zero_pair:
        for eps in (-1, 1):
            V0 = rhp.Vmat(spec, eps, 0, eps * spec.q)
            assert V0[0, 0] == 0 and V0[1, 1] == 0 and V0[1, 0] == 0
            b12, b21 = rhp.b_coeffs(spec, eps, eps * spec.q + 0.1j)
            assert b21 == 0 and math.isfinite(abs(b12))


def test_zero_nu_rhp_pieces(zero_pair):
    for spec in zero_pair:
        assert rhp.dlogdet_rhp(spec) == 0
        assert rhp.a1_trace(spec) == 0 and rhp.a2_osc_trace(spec) == 0
        sol = rhp.Pi_numeric(spec)
        lam = spec.lambda0 + 3j
        Pi, dPi = sol(lam), sol.derivative(lam)
        assert abs(np.linalg.det(Pi) - 1) <= 1e-12
        assert abs(np.trace(dPi @ rhp.SIGMA3 @ rhp.inv2(Pi))) <= 1e-12
        for name, v in rhp.jump_residuals(spec).items():
            assert v <= 1e-12, name
