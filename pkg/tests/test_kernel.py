import math

import numpy as np
import pytest

from conftest import BENCH_NU, BENCH_U, TIME_U
from gskdet import asym
from gskdet.kernel import (SPACE_LIKE, TIME_LIKE, SpecError, V_kernel, E_fn, auto_nodes, detect_saddle,
                           e_fn, fredholm_det, kernel_matrix, log_det_sweep, make_spec, tail_magnitude)
from gskdet.expr import parse


def test_saddle_detection_space_like():
    lam0, regime = detect_saddle(parse(BENCH_U), 4.0, 1.0)
    assert lam0 == pytest.approx(5.0, abs=1e-12)
    assert regime == SPACE_LIKE


def test_saddle_detection_time_like():
    spec = make_spec(BENCH_NU, TIME_U, q=1.0)
    assert spec.lambda0 == pytest.approx(0.5, abs=1e-12)
    assert spec.regime == TIME_LIKE


@pytest.mark.parametrize("u", ["lambda", "lambda + 0.1*lambda^2"])
def test_no_maximum_is_refused(u):
    with pytest.raises(SpecError):
        make_spec(BENCH_NU, u, q=1.0)


def test_saddle_on_an_edge_is_refused():
    with pytest.raises(SpecError):
        make_spec(BENCH_NU, "lambda - 0.5*lambda^2", q=1.0)


def test_large_edge_exponent_is_refused():
    with pytest.raises(SpecError):
        make_spec("0.6", BENCH_U, q=1.0)


def test_e_fn_values(bench):
    assert e_fn(bench, 0.0) == pytest.approx(1.0, abs=1e-15)
    lam = 0.7
    expected = np.exp(-0.5j * 100 * (lam - 0.1 * lam ** 2) - 0.1 * math.sin(lam))
    assert e_fn(bench, lam) == pytest.approx(expected, rel=1e-14)


def test_truncation_tail_is_negligible(bench):
    assert tail_magnitude(bench) < 1e-15


def test_kernel_symmetry(bench):
    for lam, mu in [(0.3, -0.4), (-0.9, 0.95), (0.01, 0.02)]:
        assert V_kernel(bench, lam, mu) == pytest.approx(V_kernel(bench, mu, lam), rel=1e-13)


def test_kernel_matrix_symmetry(timelike):
    _, _, K = kernel_matrix(timelike, 64)
    assert np.max(np.abs(K - K.T)) <= 1e-13 * np.max(np.abs(K))


def test_diagonal_against_neighbour_average(bench):
    # the symmetric average differs from the diagonal by O(h^2 d^2V); the ratio over a
    # decade of h confirms the Taylor behaviour and the h = 1e-4 value stays small
    lam = 0.3
    diag = V_kernel(bench, lam, lam)
    gaps = []
    for h in (1e-3, 1e-4):
        avg = (V_kernel(bench, lam, lam + h) + V_kernel(bench, lam, lam - h)) / 2
        gaps.append(abs(diag - avg))
    assert gaps[1] / abs(diag) <= 1e-5
    assert gaps[0] / gaps[1] == pytest.approx(100, rel=0.01)


def test_E_outside_the_interval_is_refused(bench):
    with pytest.raises(SpecError):
        E_fn(bench, 1.5)


def test_zero_nu_gives_unit_det(bench):
    assert fredholm_det(bench.with_(nu=parse("0"))) == 1 + 0j


@pytest.mark.parametrize("g", ["0", "0.2*sin(lambda)"])
def test_node_doubling(g):
    spec = make_spec(BENCH_NU, BENCH_U, g, q=1.0, x=100.0)
    assert abs(fredholm_det(spec, 160) - fredholm_det(spec, 320)) <= 1e-8


def test_det_independent_of_ce_shape(bench):
    ref = fredholm_det(bench, 160)
    for other in (bench.with_(height=0.2), bench.with_(height=0.3), bench.with_(width=15.0)):
        assert abs(fredholm_det(other, 160) - ref) <= 1e-9


def test_auto_nodes_grows_with_x(bench):
    assert auto_nodes(bench) == 160
    assert auto_nodes(bench.with_x(1600)) >= 0.6 * 1600 * 2


def test_det_is_deterministic(timelike):
    assert fredholm_det(timelike) == fredholm_det(timelike)


def test_sweep_zero_nu(bench):
    assert log_det_sweep(bench.with_(nu=parse("0")), [100, 200]) == [0j, 0j]


def test_sweep_repeated_x(bench):
    a, b = log_det_sweep(bench, [100, 100])
    assert a == b


def test_sweep_rejects_decreasing(bench):
    with pytest.raises(ValueError):
        log_det_sweep(bench, [200, 100])


def test_sweep_rejects_coarse_steps(bench):
    # Im log det advances by about 0.19 per unit x here, so a step of 20 is ambiguous
    with pytest.raises(ValueError):
        log_det_sweep(bench, [100, 120])


def test_sweep_slope_matches_leading_coefficient(bench):
    xs = list(range(200, 401, 10))
    logs = log_det_sweep(bench, xs)
    am1 = asym.a_m1(bench)
    re_slope = np.polyfit(xs, [v.real for v in logs], 1)[0]
    im_slope = np.polyfit(xs, [v.imag for v in logs], 1)[0]
    assert abs(re_slope - am1.real) <= 0.05 * abs(am1)
    assert abs(im_slope - am1.imag) <= 0.05 * abs(am1)


def test_det_does_not_vanish_on_sweep(bench):
    for x in (100, 200, 400):
        assert abs(fredholm_det(bench.with_x(x))) > 1e-8
