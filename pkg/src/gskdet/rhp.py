"""Riemann-Hilbert objects: jump matrices, local parametrices, the expansion
matrices V^(+-;n) and d^(n), the matrix Pi (heuristic series and a direct
numerical solve on the three disk boundaries) and the loop representation of
d/dx log det(I + V).

2x2 matrices are numpy arrays of shape (2, 2). Edge disks (around +-q) and the
saddle disk (around lambda0) may have different radii.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import contour as ct
from . import specialfn as sf
from .asym import alpha, kappa, a_m1
from .kernel import ProblemSpec

I2 = np.eye(2, dtype=complex)
SIGMA3 = np.diag([1.0 + 0j, -1.0])
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


class GeometryError(ValueError):
    pass


def sigma(spec: ProblemSpec) -> np.ndarray:
    """sigma^+ in the space-like regime, sigma^- in the time-like one."""
    return SIGMA_PLUS if spec.space_like else SIGMA_MINUS


def _wrap(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.fmod(theta + math.pi, 2 * math.pi)
    if t <= 0:
        t += 2 * math.pi
    return t - math.pi


def _pow(v: complex, a: complex, arg: float | None = None) -> complex:
    return sf.cpow(v, a, arg)


def _pow_around(v: complex, a: complex, ref: float) -> complex:
    """Power with the branch cut placed opposite to the direction ``ref``."""
    v = complex(v)
    theta = ref + cmath.phase(v * cmath.exp(-1j * ref))
    return cmath.exp(a * complex(math.log(abs(v)), theta))


# ---------------------------------------------------------------- saddle variable

def omega_h(spec: ProblemSpec, lam) -> tuple[complex, complex]:
    """(omega, h) with u(lam) - u(lambda0) = -omega^2, omega = (lam - lambda0) h, h(lambda0) > 0."""
    lam = complex(lam)
    l0 = spec.lambda0
    d = lam - l0
    if abs(d) < 1e-6:
        w = -spec.u2(l0) / 2 - spec.u3(l0) * d / 6
    else:
        w = -(spec.u(lam) - spec.u(l0)) / (d * d)
    if w.real <= 0:
        raise GeometryError("omega_h: branch of h cannot be continued; reduce the disk radius")
    h = cmath.sqrt(w)
    return d * h, h


def _lam_from_omega(spec: ProblemSpec, target: complex) -> complex:
    """Solve omega(lam) = target by Newton iteration."""
    _, h0 = omega_h(spec, spec.lambda0)
    lam = spec.lambda0 + target / h0
    for _ in range(60):
        om, _ = omega_h(spec, lam)
        # d omega / d lam = -u'(lam) / (2 omega)
        dom = -spec.u1(lam) / (2 * om) if abs(om) > 0 else h0
        step = (om - target) / dom
        lam -= step
        if abs(step) < 1e-15 * (1 + abs(lam)):
            break
    return lam


# ---------------------------------------------------------------- jump functions

def _em2(spec, lam):
    return cmath.exp(1j * spec.x * spec.u(lam) + spec.g(lam))


def _e2(spec, lam):
    return cmath.exp(-1j * spec.x * spec.u(lam) - spec.g(lam))


def _alpha(spec, lam, side):
    lam = complex(lam)
    on_cut = lam.imag == 0 and abs(lam.real) <= spec.q
    return alpha(spec, lam, side if on_cut else None)


def P_direct(spec: ProblemSpec, lam, side: int | None = None) -> complex:
    """P = alpha^{-2} e^{-2}."""
    return _alpha(spec, lam, side) ** -2 * _em2(spec, lam)


def Q_direct(spec: ProblemSpec, lam, which: str = "L", side: int | None = None) -> complex:
    """Q^(L) = alpha_-^2 e^2 (e^{-2i pi nu}-1)^2 and Q^(R) = alpha_+^2 e^{4 i pi nu} e^2 (e^{-2 i pi nu}-1)^2.

    Off the real axis alpha is used as is (its continuation from the relevant side);
    on (-q, q) the boundary value from below (L) or above (R) is taken unless ``side`` is given.
    """
    nu = spec.nu(lam)
    sd = side if side is not None else (-1 if which == "L" else 1)
    a = _alpha(spec, lam, sd)
    base = a * a * _e2(spec, lam) * (cmath.exp(-2j * math.pi * nu) - 1) ** 2
    return base * cmath.exp(4j * math.pi * nu) if which == "R" else base


def _w_right(spec, lam):
    """(u(lam) - u(q))/(lam - q), removable at lam = q."""
    lam = complex(lam)
    q = spec.q
    if abs(lam - q) < 1e-7:
        return complex(spec.u1(q) + spec.u2(q) * (lam - q) / 2)
    return (spec.u(lam) - spec.u(q)) / (lam - q)


def _r_left(spec, lam):
    """(lam + q)/(u(lam) - u(-q)), removable at lam = -q."""
    lam = complex(lam)
    q = spec.q
    if abs(lam + q) < 1e-7:
        return 1 / complex(spec.u1(-q) + spec.u2(-q) * (lam + q) / 2)
    return (lam + q) / (spec.u(lam) - spec.u(-q))


def C_tilde(spec: ProblemSpec, which: str, lam) -> complex:
    """C^(L/R) divided by its factor (e^{-2 i pi nu} - 1)."""
    lam = complex(lam)
    x, q = spec.x, spec.q
    nu = spec.nu(lam)
    k2 = kappa(spec, lam) ** 2
    if which == "L":
        return (-k2 * cmath.exp(-spec.g(lam) - 1j * x * spec.u(-q)) / _pow(x * (q - lam), 2 * nu)
                * _pow(_r_left(spec, lam), 2 * nu))
    w = _w_right(spec, lam)
    # the +i0 prescription only matters when u'(q) < 0: keep the branch continuous around arg = pi
    wp = _pow_around(w, 2 * nu, math.pi) if spec.u1(q).real < 0 else _pow(w, 2 * nu)
    return -k2 * cmath.exp(-spec.g(lam) - 1j * x * spec.u(q)) * wp * _pow(x * (lam + q), 2 * nu)


def C_LR(spec: ProblemSpec, which: str, lam) -> complex:
    nu = spec.nu(lam)
    return C_tilde(spec, which, lam) * (cmath.exp(-2j * math.pi * nu) - 1)


def zeta(spec: ProblemSpec, eps: int, lam) -> complex:
    """Local variable at eps*q: x(u - u(-q)) at -q; x(u(q) - u) (time-like) or x(u - u(q)) (space-like) at q."""
    x, q = spec.x, spec.q
    if eps < 0:
        return x * (spec.u(lam) - spec.u(-q))
    if spec.space_like:
        return x * (spec.u(lam) - spec.u(q))
    return x * (spec.u(q) - spec.u(lam))


def P_param(spec: ProblemSpec, eps: int, lam) -> complex:
    """P from the local parameterisation around eps*q."""
    nu = spec.nu(lam)
    z = zeta(spec, eps, lam)
    if eps < 0:
        return cmath.exp(1j * z) * _pow(z, -2 * nu) * (cmath.exp(2j * math.pi * nu) - 1) / C_LR(spec, "L", lam)
    if spec.space_like:
        return -cmath.exp(1j * z) * _pow(z, 2 * nu) * (cmath.exp(-2j * math.pi * nu) - 1) / C_LR(spec, "R", lam)
    return cmath.exp(-1j * z) * _pow(z, 2 * nu) * (cmath.exp(2j * math.pi * nu) - 1) / C_LR(spec, "R", lam)


def Q_param(spec: ProblemSpec, eps: int, lam) -> complex:
    """Q^(L) (eps = -1) or Q^(R) (eps = +1, time-like) / Q (space-like) from the local parameterisation."""
    nu = spec.nu(lam)
    z = zeta(spec, eps, lam)
    if eps < 0:
        return C_LR(spec, "L", lam) * cmath.exp(-1j * z) * _pow(z, 2 * nu) * (cmath.exp(2j * math.pi * nu) - 1)
    if spec.space_like:
        return (-C_LR(spec, "R", lam) * cmath.exp(-1j * z) * _pow(z, -2 * nu)
                * (cmath.exp(-2j * math.pi * nu) - 1))
    return C_LR(spec, "R", lam) * cmath.exp(1j * z) * _pow(z, -2 * nu) * (cmath.exp(2j * math.pi * nu) - 1)


def jump_matrices(spec: ProblemSpec, lam, side: int | None = None) -> dict:
    """The triangular jump matrices at lam: M, and N^(L), N^(R) (time-like) or N (space-like)."""
    out = {"M": I2 + P_direct(spec, lam, side) * SIGMA_PLUS}
    if spec.space_like:
        out["N"] = I2 + Q_direct(spec, lam, "L", side) * SIGMA_MINUS
    else:
        out["N_L"] = I2 + Q_direct(spec, lam, "L", side) * SIGMA_MINUS
        out["N_R"] = I2 + Q_direct(spec, lam, "R", side) * SIGMA_MINUS
    return out


# ---------------------------------------------------------------- b coefficients

def b_coeffs(spec: ProblemSpec, eps: int, lam) -> tuple[complex, complex]:
    """(b12, b21) at -q (eps = -1) or (b~12, b~21) at q (eps = +1).

    The ratios sin(pi nu)/(e^{-2 i pi nu} - 1) = (i/2) e^{i pi nu} and
    1/(Gamma(-nu) sin(pi nu)) = -Gamma(1+nu)/pi are used so that nu -> 0 is regular.
    """
    nu = spec.nu(lam)
    if eps < 0:
        ct_ = C_tilde(spec, "L", lam)
        b12 = sf.gamma(1 - nu) ** 2 * cmath.exp(1j * math.pi * nu) / (2 * math.pi * ct_)
        b21 = -2 * math.pi * ct_ * cmath.exp(-1j * math.pi * nu) * sf.rgamma(-nu) ** 2
        return b12, b21
    ct_ = C_tilde(spec, "R", lam)
    b12 = -sf.gamma(1 + nu) ** 2 * cmath.exp(1j * math.pi * nu) / (2 * math.pi * ct_)
    b21 = 2 * math.pi * ct_ * cmath.exp(-1j * math.pi * nu) * sf.rgamma(nu) ** 2
    return b12, b21


def b_bar(spec: ProblemSpec, lam, side: int | None = None) -> complex:
    """b̄21 (time-like) or b̄12 (space-like) of the saddle parametrix."""
    lam = complex(lam)
    x, l0 = spec.x, spec.lambda0
    nu = spec.nu(lam)
    if spec.space_like:
        return alpha(spec, lam) ** -2 * cmath.exp(1j * x * spec.u(l0) + spec.g(lam))
    upper = lam.imag > 0 if lam.imag != 0 else (side is not None and side > 0)
    a = _alpha(spec, lam, 1 if upper else -1)
    out = a * a * cmath.exp(-1j * x * spec.u(l0) - spec.g(lam)) * (cmath.exp(-2j * math.pi * nu) - 1) ** 2
    return out * cmath.exp(4j * math.pi * nu) if upper else out


# ---------------------------------------------------------------- parametrices

def _psi(a, z_abs, arg):
    if a == 0:
        return 1 + 0j
    return sf.tricomi_psi(a=a, c=1, z=z_abs * cmath.exp(1j * arg), arg=arg)


def parametrix_P0(spec: ProblemSpec, lam, arg_z: float | None = None) -> np.ndarray:
    """Saddle-point parametrix built from Psi(1, 3/2; +-i x omega^2).

    ``arg_z`` overrides the branch of the Psi argument (used for boundary values on its cut).
    """
    lam = complex(lam)
    x = spec.x
    om, _ = omega_h(spec, lam)
    if spec.space_like:
        z = -1j * x * om * om
        coef = b_bar(spec, lam) * cmath.exp(0.25j * math.pi)
        mat = SIGMA_PLUS
    else:
        z = 1j * x * om * om
        coef = b_bar(spec, lam, side=-1) * cmath.exp(-0.25j * math.pi)
        mat = SIGMA_MINUS
    if z == 0:
        val = 0j  # omega * Psi(1, 3/2; c omega^2) -> 0 at omega = 0
    else:
        arg = cmath.phase(z) if arg_z is None else arg_z
        val = om * sf.tricomi_psi(a=1, c=1.5, z=abs(z) * cmath.exp(1j * arg), arg=arg)
    return I2 - coef * math.sqrt(math.pi * x) / (2j * math.pi) * val * mat


def _edge_layout(spec: ProblemSpec, eps: int, nu: complex):
    """Psi parameters, argument signs, power, phase and sector matrices for the edge parametrix."""
    e2 = cmath.exp(2j * math.pi * nu)
    if eps < 0:
        a = (nu, 1 - nu, 1 + nu, -nu)
        s = (-1, 1, -1, 1)
        p, phase = nu, -0.5 * math.pi * nu
        L_up, L_dn = np.diag([1, e2]), np.diag([e2, 1])
    elif not spec.space_like:
        a = (-nu, 1 + nu, 1 - nu, nu)
        s = (1, -1, 1, -1)
        p, phase = -nu, -0.5 * math.pi * nu
        L_up, L_dn = np.diag([e2, 1]), np.diag([1, e2])
    else:
        a = (-nu, 1 + nu, 1 - nu, nu)
        s = (-1, 1, -1, 1)
        p, phase = -nu, 0.5 * math.pi * nu
        L_up, L_dn = np.diag([1, 1 / e2]), np.diag([1 / e2, 1])
    return a, s, p, phase, L_up.astype(complex), L_dn.astype(complex)


def parametrix_Ppm(spec: ProblemSpec, eps: int, lam, theta: float | None = None) -> np.ndarray:
    """Edge parametrix at eps*q: Psi-matrix * L * zeta^{p sigma3} * e^{i phase}.

    ``theta`` overrides arg(zeta) (principal otherwise); all branches and the
    sector of L follow from it.
    """
    lam = complex(lam)
    if abs(lam - eps * spec.q) < 1e-14:
        raise ValueError("parametrix_Ppm: lam at the edge point")
    nu = spec.nu(lam)
    z = zeta(spec, eps, lam)
    th = cmath.phase(z) if theta is None else float(theta)
    r = abs(z)
    a, s, p, phase, L_up, L_dn = _edge_layout(spec, eps, nu)
    b12, b21 = b_coeffs(spec, eps, lam)
    args = [_wrap(th + sgn * math.pi / 2) for sgn in s]
    psi = [_psi(a[k], r, args[k]) for k in range(4)]
    Pm = np.array([[psi[0], 1j * b12 * psi[1]], [-1j * b21 * psi[2], psi[3]]])
    thw = _wrap(th)
    if abs(thw) < math.pi / 2:
        L = I2
    elif thw > 0:
        L = L_up
    else:
        L = L_dn
    zp = _pow(z, p, thw)
    D = np.diag([zp, 1 / zp])
    return Pm @ L @ D * cmath.exp(1j * phase)


def inv2(m: np.ndarray) -> np.ndarray:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = a * d - b * c
    return np.array([[d, -b], [-c, a]]) / det


# ---------------------------------------------------------------- expansion matrices

def _cauchy_derivative(f, c: complex, k: int, r: float, n: int = 64):
    """k-th derivative of f at c from the trapezoid rule on a circle of radius r."""
    t = 2 * np.pi * np.arange(n) / n
    z = c + r * np.exp(1j * t)
    vals = np.array([f(zz) for zz in z])
    fac = math.factorial(k) / (r ** k)
    w = np.exp(-1j * k * t) / n
    return fac * np.tensordot(w, vals, axes=(0, 0))


def Vmat(spec: ProblemSpec, eps: int, n: int, s) -> np.ndarray:
    """V^(eps; n)(s), n = 0 or 1."""
    if n not in (0, 1):
        raise ValueError("Vmat: n must be 0 or 1")
    s = complex(s)
    q = spec.q
    nu = spec.nu(s)
    b12, b21 = b_coeffs(spec, eps, s)
    ps = sf.pochhammer_sq
    sgn = (-1) ** (n + 1)
    if eps < 0:
        ratio = _r_left(spec, s)
        m = np.array([[sgn * ps(-nu, n + 1), 1j * (n + 1) * b12 * sgn * ps(1 - nu, n)],
                      [-1j * (n + 1) * b21 * ps(1 + nu, n), ps(nu, n + 1)]])
    else:
        ratio = 1 / _w_right(spec, s)
        m = np.array([[sgn * ps(nu, n + 1), 1j * (n + 1) * b12 * sgn * ps(1 + nu, n)],
                      [-1j * (n + 1) * b21 * ps(1 - nu, n), ps(-nu, n + 1)]])
    del q
    return (-1j) ** (n + 1) * ratio ** (n + 1) * m


def Vmat_derivative(spec: ProblemSpec, eps: int, n: int, s, r: float | None = None) -> np.ndarray:
    r = 0.05 * spec.q if r is None else r
    return _cauchy_derivative(lambda z: Vmat(spec, eps, n, z), complex(s), 1, r)


def d_coeff(spec: ProblemSpec, n: int, s) -> complex:
    """d^(n)(s) of the saddle-point expansion."""
    s = complex(s)
    _, h = omega_h(spec, s)
    g = math.gamma(0.5 + n) / (2 * math.pi)
    if spec.space_like:
        return b_bar(spec, s) * (-1j) ** n * g * cmath.exp(0.25j * math.pi) / h ** (2 * n + 1)
    return -(1j ** n) * g * cmath.exp(-0.25j * math.pi) / h ** (2 * n + 1) * b_bar(spec, s, side=-1)


# ---------------------------------------------------------------- disks

@dataclass
class RHPDisks:
    spec: ProblemSpec
    delta_edge: float
    delta_saddle: float
    n: int = 192
    rules: list = field(default_factory=list)

    @property
    def centers(self):
        return [-self.spec.q, self.spec.q, self.spec.lambda0]

    @property
    def radii(self):
        return [self.delta_edge, self.delta_edge, self.delta_saddle]


def make_disks(spec: ProblemSpec, delta_edge: float | None = None, delta_saddle: float | None = None,
               n: int = 192) -> RHPDisks:
    """Disks around -q, q (radius delta_edge) and lambda0 (radius delta_saddle).

    Defaults: delta_edge = min(|lambda0 - q|, 2q)/4; delta_saddle is half the
    gap left between lambda0 and the nearest edge disk.
    """
    q, l0 = spec.q, spec.lambda0
    gap = min(abs(l0 - q), abs(l0 + q))
    de = min(abs(l0 - q), 2 * q) / 4 if delta_edge is None else float(delta_edge)
    ds = (gap - de) / 2 if delta_saddle is None else float(delta_saddle)
    if de <= 0 or ds <= 0:
        raise GeometryError("disk radii must be positive")
    if 2 * de >= 2 * q or de + ds >= gap:
        raise GeometryError("disks overlap")
    if de >= min(abs(l0 - q), 2 * q) / 2:
        raise GeometryError("edge radius must stay below min(|lambda0 - q|, 2q)/2")
    d = RHPDisks(spec, de, ds, n)
    d.rules = [ct.circle_rule(c, r, n, orientation=1) for c, r in zip(d.centers, d.radii)]
    return d


def _jump_delta(spec: ProblemSpec, k: int, s: complex) -> np.ndarray:
    """Delta = P^{-1} - I on the k-th disk boundary (0: -q, 1: q, 2: lambda0)."""
    if k == 2:
        P = parametrix_P0(spec, s)
    else:
        P = parametrix_Ppm(spec, -1 if k == 0 else 1, s)
    return inv2(P) - I2


def rho_delta(spec: ProblemSpec, disks: RHPDisks) -> float:
    t = 2 * np.pi * np.arange(64) / 64
    vals = []
    for c in (-spec.q, spec.q):
        vals.append(np.max(np.abs(spec.nu(c + disks.delta_edge * np.exp(1j * t)).real)))
    return 2 * float(max(vals))


# ---------------------------------------------------------------- Pi: heuristic series

def Pi_terms(spec: ProblemSpec, lam) -> list:
    """[Pi^(0), Pi^(1), Pi^(2), Pi^(3)] at lam (outside the disks)."""
    lam = complex(lam)
    q, l0 = spec.q, spec.lambda0
    sg = sigma(spec)
    d0 = d_coeff(spec, 0, l0)
    V0 = {e: Vmat(spec, e, 0, e * q) for e in (1, -1)}
    P0 = -d0 * sg / (lam - l0)
    P1 = -sum(V0[e] / (lam - e * q) for e in (1, -1))
    r_s = 0.25 * min(abs(l0 - q), abs(l0 + q))
    d2 = _cauchy_derivative(lambda s: d_coeff(spec, 1, s) / (lam - s), l0, 2, r_s)
    P2 = sum(d0 / (l0 - e * q) * (V0[e] @ sg / (lam - l0) - sg @ V0[e] / (lam - e * q)) for e in (1, -1))
    P2 = P2 - sg * d2 / 2
    P3 = d0 ** 2 / (lam - l0) * sum(sg @ V0[e] @ sg / (l0 - e * q) ** 2 for e in (1, -1))
    P3 = P3 + sum(e * V0[-e] @ V0[e] / (2 * q * (lam - e * q)) for e in (1, -1))
    r_e = 0.05 * q
    for e in (1, -1):
        f = lambda s, e=e: (Vmat(spec, e, 1, s) - 2 * V0[e] @ Vmat(spec, e, 0, s)) / (lam - s)
        P3 = P3 - 0.5 * _cauchy_derivative(f, e * q, 1, r_e)
    return [P0, P1, P2, P3]


def Pi_heuristic(spec: ProblemSpec, lam, order: int = 3) -> np.ndarray:
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    terms = Pi_terms(spec, lam)
    out = I2.copy()
    for n in range(order + 1):
        out = out + terms[n] * spec.x ** (-(1 + n) / 2)
    return out


# ---------------------------------------------------------------- Pi: numerical solve

@dataclass
class PiSolution:
    spec: ProblemSpec
    disks: RHPDisks
    nodes: np.ndarray      # all circle nodes
    weights: np.ndarray    # counterclockwise trapezoid weights
    F: np.ndarray          # Pi_+ Delta at the nodes, shape (N, 2, 2)
    Pi_plus: np.ndarray    # Pi_+ at the nodes
    delta_norm: float      # max |Delta| over the nodes
    op_norm: float         # spectral norm estimate of the discretised operator f -> C_-[f Delta]

    def __call__(self, lam) -> np.ndarray:
        lam = complex(lam)
        k = self.weights / (self.nodes - lam) / (2j * np.pi)
        return I2 + np.tensordot(k, self.F, axes=(0, 0))

    def derivative(self, lam) -> np.ndarray:
        lam = complex(lam)
        k = self.weights / (self.nodes - lam) ** 2 / (2j * np.pi)
        return np.tensordot(k, self.F, axes=(0, 0))


def Pi_numeric(spec: ProblemSpec, disks: RHPDisks | None = None) -> PiSolution:
    """Solve Pi_+ = I + C_-[Pi_+ Delta] on the three disk boundaries.

    Integrals run counterclockwise (the jump contours are clockwise, which
    flips the sign of the Cauchy kernel); Pi_+ is the value outside the disks.
    The own-circle boundary value is the negative-frequency projection; other
    circles enter through the trapezoid rule.
    """
    disks = make_disks(spec) if disks is None else disks
    n = disks.n
    nodes = np.concatenate([r.nodes for r in disks.rules])
    weights = np.concatenate([r.weights for r in disks.rules])
    N = nodes.size
    Delta = np.array([_jump_delta(spec, k, s) for k in range(3) for s in disks.rules[k].nodes])
    # operator K acting on scalar node values f: (K f)_i = C_-[f](s_i)
    K = np.zeros((N, N), dtype=complex)
    for k in range(3):
        blk = slice(k * n, (k + 1) * n)
        # own circle: f -> -(negative-frequency part), via the DFT matrix
        F = np.fft.fft(np.eye(n), axis=0) / n
        freq = np.fft.fftfreq(n, d=1.0 / n)
        neg = freq < 0
        Finv = np.fft.ifft(np.eye(n), axis=0) * n
        proj = Finv[:, neg] @ F[neg, :]
        K[blk, blk] = -proj
        for j in range(3):
            if j == k:
                continue
            bj = slice(j * n, (j + 1) * n)
            K[blk, bj] = weights[bj][None, :] / (nodes[bj][None, :] - nodes[blk][:, None]) / (2j * np.pi)
    # unknown row vector r (N x 2): r = e + K[r Delta]
    # unroll: for columns c, (r Delta)_c = r_0 Delta_{0c} + r_1 Delta_{1c}
    A = np.zeros((2 * N, 2 * N), dtype=complex)
    for c in range(2):
        for a_ in range(2):
            A[c * N:(c + 1) * N, a_ * N:(a_ + 1) * N] = K * Delta[:, a_, c][None, :]
    op_norm = _norm2_estimate(A)
    A = np.eye(2 * N) - A
    Pi_plus = np.zeros((N, 2, 2), dtype=complex)
    for row in range(2):
        rhs = np.zeros(2 * N, dtype=complex)
        rhs[row * N:(row + 1) * N] = 1.0
        sol = np.linalg.solve(A, rhs)
        Pi_plus[:, row, 0] = sol[:N]
        Pi_plus[:, row, 1] = sol[N:]
    Fv = np.einsum("nij,njk->nik", Pi_plus, Delta)
    dn = float(np.max(np.abs(Delta)))
    return PiSolution(spec, disks, nodes, weights, Fv, Pi_plus, dn, op_norm)


def _norm2_estimate(A: np.ndarray, iters: int = 30) -> float:
    """Spectral norm of A by power iteration on A^H A (deterministic start vector)."""
    v = np.cos(np.arange(A.shape[1]) * 0.37) + 0j
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        w = A.conj().T @ (A @ v)
        s = float(np.linalg.norm(w))
        if s == 0:
            return 0.0
        v = w / s
    return math.sqrt(s)


def Pi_resolution_check(spec: ProblemSpec, lam, disks: RHPDisks | None = None) -> float:
    """Largest entry change of Pi_numeric(lam) when the circle node count is doubled."""
    disks = make_disks(spec) if disks is None else disks
    twice = make_disks(spec, disks.delta_edge, disks.delta_saddle, 2 * disks.n)
    return float(np.max(np.abs(Pi_numeric(spec, disks)(lam) - Pi_numeric(spec, twice)(lam))))


# ---------------------------------------------------------------- d/dx log det

def gamma0_contour(spec: ProblemSpec, disks: RHPDisks, clearance: float | None = None) -> ct.Contour:
    """Counterclockwise stadium enclosing the three disks at the given clearance."""
    c = disks.delta_edge / 2 if clearance is None else float(clearance)
    H = max(disks.radii) + c
    left = min(ce - r for ce, r in zip(disks.centers, disks.radii)) - c + H
    right = max(ce + r for ce, r in zip(disks.centers, disks.radii)) + c - H
    if right < left:
        right = left = (left + right) / 2
    segs = [ct.line(complex(left, -H), complex(right, -H)),
            ct.arc(complex(right, 0), H, -math.pi / 2, math.pi / 2),
            ct.line(complex(right, H), complex(left, H)),
            ct.arc(complex(left, 0), H, math.pi / 2, 3 * math.pi / 2)]
    if right == left:
        segs = [segs[1], segs[3]]
    return ct.Contour(segs, closed=True)


def dlogdet_rhp(spec: ProblemSpec, sol: PiSolution | None = None, clearance: float | None = None,
                h_max: float = 0.1, npp: int = 16) -> complex:
    """a_{-1} + loop integral over gamma^(0) of u tr[Pi' sigma3 Pi^{-1}] d lam/(4 pi)."""
    if spec.nu_is_zero:
        return 0j
    sol = Pi_numeric(spec) if sol is None else sol
    rule = gamma0_contour(spec, sol.disks, clearance).rule(h_max, npp)
    total = 0j
    for lam, w in zip(rule.nodes, rule.weights):
        Pi = sol(lam)
        dPi = sol.derivative(lam)
        total += w * spec.u(lam) * np.trace(dPi @ SIGMA3 @ inv2(Pi))
    return a_m1(spec) + total / (4 * math.pi)


# ---------------------------------------------------------------- diagnostics

def exterior_neglect(spec: ProblemSpec, disks: RHPDisks | None = None, n: int = 32) -> float:
    """max |Delta| over samples of the exterior jump curves leaving the disks.

    Near each edge the curves follow arg(zeta) = +-pi/2 (linearised); near the
    saddle they follow the rays of omega on which the exponent is real and negative.
    """
    disks = make_disks(spec) if disks is None else disks
    q = spec.q
    worst = 0.0
    for eps in (-1, 1):
        c = eps * q
        d = complex(zeta(spec, eps, c + 1e-3) / 1e-3)  # d zeta / d lam direction
        for th in (math.pi / 2, -math.pi / 2):
            direction = cmath.exp(1j * th) / (d / abs(d))
            for t in np.linspace(1.0, 3.0, n):
                lam = c + t * disks.delta_edge * direction
                vals = [abs(P_direct(spec, lam)), abs(Q_direct(spec, lam, "L")), abs(Q_direct(spec, lam, "R"))]
                # only the jump that lives on this curve is relevant: the decaying one
                worst = max(worst, min(vals))
    _, h0 = omega_h(spec, spec.lambda0)
    rays = (-math.pi / 4, 3 * math.pi / 4) if spec.space_like else (math.pi / 4, -3 * math.pi / 4)
    for th in rays:
        for t in np.linspace(1.0, 2.0, n):
            lam = spec.lambda0 + t * disks.delta_saddle * cmath.exp(1j * th) / h0
            om, _ = omega_h(spec, lam) if abs(lam - spec.lambda0) < 0.99 * disks.delta_saddle else (
                (lam - spec.lambda0) * h0, h0)
            expo = -1j * spec.x * om * om if spec.space_like else 1j * spec.x * om * om
            worst = max(worst, abs(cmath.exp(expo)))
    return worst


# ---------------------------------------------------------------- trace forms of the coefficients

def a1_trace(spec: ProblemSpec) -> complex:
    """a_1 written through d^(0)(lambda0) and the edge matrices V^(eps;0)."""
    if spec.nu_is_zero:
        return 0j
    q, l0 = spec.q, spec.lambda0
    sg = sigma(spec)
    comm = SIGMA3 @ sg - sg @ SIGMA3
    d0 = d_coeff(spec, 0, l0)
    tot = 0j
    for e in (1, -1):
        tot += d0 * (spec.u(l0) - spec.u(e * q)) / (l0 - e * q) ** 2 * np.trace(Vmat(spec, e, 0, e * q) @ comm)
    return complex(0.5j * tot)


def a2_osc_trace(spec: ProblemSpec) -> complex:
    """The oscillating part of a_2 as a commutator trace of the two edge matrices."""
    if spec.nu_is_zero:
        return 0j
    q = spec.q
    Vp, Vm = Vmat(spec, 1, 0, q), Vmat(spec, -1, 0, -q)
    tr = np.trace((Vp @ Vm - Vm @ Vp) @ SIGMA3)
    return complex(-(spec.u(q) - spec.u(-q)) / (2j * (2 * q) ** 2) * tr)


# ---------------------------------------------------------------- jump residuals at mid-radius

def _lam_from_zeta(spec: ProblemSpec, eps: int, target: complex) -> complex:
    """Solve zeta(lam) = target near eps*q by Newton iteration."""
    c = eps * spec.q
    sgn = -1 if (eps > 0 and not spec.space_like) else 1
    dz = lambda lam: sgn * spec.x * spec.u1(lam)
    lam = c + target / dz(c)
    for _ in range(60):
        step = (zeta(spec, eps, lam) - target) / dz(lam)
        lam -= step
        if abs(step) < 1e-15 * (1 + abs(lam)):
            break
    return complex(lam)


def _edge_relations(spec: ProblemSpec, eps: int):
    """(theta, jump name, theta of the left factor, theta of the right side) for each ray."""
    up, dn = math.pi / 2, -math.pi / 2
    t = 1e-12
    if eps < 0:
        n_name = "N" if spec.space_like else "N_L"
        return [(up, "M", up - t, up + t), (dn, n_name, dn + t, dn - t)]
    if spec.space_like:
        return [(up, "M", up + t, up - t), (dn, "N", dn - t, dn + t)]
    return [(up, "N_R", up - t, up + t), (dn, "M", dn + t, dn - t)]


def jump_residuals(spec: ProblemSpec, disks: RHPDisks | None = None) -> dict:
    """Jump and unit-determinant residuals of the three parametrices at |lam - centre| = radius/2.

    Boundary values on a ray are taken with the branch of arg(zeta) (edges) or
    arg(x omega^2) (saddle) forced to the two sides, and the jump matrix is the
    one of the original problem, so the check compares both constructions.
    """
    disks = make_disks(spec) if disks is None else disks
    out = {}
    for eps, name in ((-1, "P_-q"), (1, "P_q")):
        r = spec.x * abs(spec.u1(eps * spec.q)) * disks.delta_edge / 2
        for th, jname, th_left, th_right in _edge_relations(spec, eps):
            lam = _lam_from_zeta(spec, eps, r * cmath.exp(1j * th))
            J = jump_matrices(spec, lam)[jname]
            left = parametrix_Ppm(spec, eps, lam, theta=th_left)
            right = parametrix_Ppm(spec, eps, lam, theta=th_right)
            tag = "up" if th > 0 else "down"
            out[f"{name} jump {jname} ({tag})"] = float(np.max(np.abs(left @ J - right)))
            out[f"{name} det-1 ({tag})"] = abs(np.linalg.det(left) - 1)
    _, h0 = omega_h(spec, spec.lambda0)
    rad = abs(h0) * disks.delta_saddle / 2
    rays = (-math.pi / 4, 3 * math.pi / 4) if spec.space_like else (math.pi / 4, -3 * math.pi / 4)
    for k, th in enumerate(rays):
        lam = _lam_from_omega(spec, rad * cmath.exp(1j * th))
        jm = jump_matrices(spec, lam)
        if spec.space_like:
            jname = "M"
        else:
            jname = "N_R" if lam.imag > 0 else "N_L"
        J = jm[jname]
        a, b = (-math.pi, math.pi) if k == 0 else (math.pi, -math.pi)
        left = parametrix_P0(spec, lam, arg_z=a)
        right = parametrix_P0(spec, lam, arg_z=b)
        out[f"P_0 jump {jname} (ray {th / math.pi:+.2f}pi)"] = float(np.max(np.abs(left @ J - right)))
        out[f"P_0 det-1 (ray {th / math.pi:+.2f}pi)"] = abs(np.linalg.det(left) - 1)
    return out
