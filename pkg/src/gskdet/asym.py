"""Closed-form large-x asymptotics of det(I + V).

Objects: kappa, alpha, C1, B_x, S_+/S_-/S_0, b_1, the leading-order formula
for det(I + V), the coefficients a_{-1}..a_2 of d/dx log det, the constant
C[nu, u, g] and the factor det^(0).

Integrals over [-q, q] use a 128-point Gauss-Legendre rule.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import specialfn as sf
from .kernel import ProblemSpec

N_GL = 128


def _gl(spec: ProblemSpec, n: int = N_GL):
    key = ("gl", n)
    if key not in spec.cache:
        x, w = np.polynomial.legendre.leggauss(n)
        spec.cache[key] = (spec.q * x, spec.q * w)
    return spec.cache[key]


def _c(v):
    return complex(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------- kappa, alpha

def edge_integral(spec: ProblemSpec, v):
    """I(v) = int_{-q}^{q} (nu(v) - nu(mu))/(v - mu) dmu, so that kappa = exp(-I)."""
    mu, w = _gl(spec)
    v_arr = np.atleast_1d(np.asarray(v, dtype=complex))
    d = v_arr[:, None] - mu[None, :]
    near = np.abs(d) < 1e-8
    num = spec.nu(v_arr)[:, None] - spec.nu(mu)[None, :]
    integrand = num / np.where(near, 1.0, d)
    if np.any(near):
        mid = (v_arr[:, None] + mu[None, :]) / 2
        integrand = np.where(near, spec.nu1(mid), integrand)
    out = integrand @ w
    return complex(out[0]) if np.ndim(v) == 0 else out


def kappa(spec: ProblemSpec, lam):
    return _c(np.exp(-edge_integral(spec, lam)))


def alpha(spec: ProblemSpec, lam, side: int | None = None):
    """alpha = kappa ((lam+q)/(lam-q))^nu; on (-q, q) a side (+1 above, -1 below) is required."""
    q = spec.q
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    on_cut = (lam_arr.imag == 0) & (np.abs(lam_arr.real) <= q)
    if np.any(on_cut) and side is None:
        raise ValueError("alpha: point on the cut [-q, q]; give a side")
    ratio = (lam_arr + q) / (lam_arr - q)
    theta = np.angle(ratio)
    if side is not None:
        theta = np.where(on_cut, -np.pi if side > 0 else np.pi, theta)
    nu = spec.nu(lam_arr)
    out = np.exp(-edge_integral(spec, lam_arr)) * np.exp(nu * (np.log(np.abs(ratio)) + 1j * theta))
    return complex(out[0]) if np.ndim(lam) == 0 else out


def e2(spec: ProblemSpec, lam):
    """e^2(lam) = exp(-i x u - g)."""
    return _c(np.exp(-1j * spec.x * spec.u(lam) - spec.g(lam)))


def log_upper(v) -> complex:
    """log with arg = +pi on the negative reals (the +i0 prescription)."""
    v = complex(v)
    if v.imag == 0 and v.real < 0:
        return complex(math.log(-v.real), math.pi)
    return cmath.log(v)


# ---------------------------------------------------------------- C1, B_x

def C1_functional(spec: ProblemSpec, shift: int = 0, swap: bool = False) -> complex:
    """C1[nu + shift]: antisymmetric double integral plus the two edge terms."""
    lam, w = _gl(spec)
    nu = spec.nu(lam) + shift
    d1 = spec.nu1(lam)
    L, M = (lam[:, None], lam[None, :]) if not swap else (lam[None, :], lam[:, None])
    nuL, nuM = spec.nu(L) + shift, spec.nu(M) + shift
    d1L, d1M = spec.nu1(L), spec.nu1(M)
    diff = L - M
    diag = np.abs(diff) < 1e-12
    num = d1L * nuM - d1M * nuL
    dd = spec.nu2(L) * nuL - d1L * d1L  # limit on the diagonal
    kern = np.where(diag, dd, num / np.where(diag, 1.0, diff))
    ww = w[:, None] * w[None, :]
    double = 0.5 * complex(np.sum(kern * ww))
    q = spec.q
    nq, nm = spec.nu(q) + shift, spec.nu(-q) + shift
    del nu, d1
    return double + nq * edge_integral(spec, q) - nm * edge_integral(spec, -q)


def B_x(spec: ProblemSpec, shift: int = 0) -> complex:
    q, x = spec.q, spec.x
    nq, nm = spec.nu(q) + shift, spec.nu(-q) + shift
    G = sf.barnes_g
    num = cmath.exp(C1_functional(spec, shift)) * G(1 + nq) ** 2 * G(1 - nm) ** 2
    den = sf.pow_upper(2 * q * x * spec.u1(q), nq * nq) * sf.pow_upper(2 * q * x * spec.u1(-q), nm * nm)
    return num / den * (2 * math.pi) ** (nm - nq) * cmath.exp(0.5j * math.pi * (nq * nq - nm * nm))


# ---------------------------------------------------------------- S factors, b1

@dataclass(frozen=True)
class SFactors:
    S_plus: complex
    S_minus: complex
    S_zero: complex


def S_factors(spec: ProblemSpec) -> SFactors:
    q, x, l0 = spec.q, spec.x, spec.lambda0
    nq, nm, n0 = spec.nu(q), spec.nu(-q), spec.nu(l0)
    Iq, Im, I0 = edge_integral(spec, q), edge_integral(spec, -q), edge_integral(spec, l0)
    g = sf.gamma
    sp = (sf.pow_upper(2 * q * x * spec.u1(q), 2 * nq) * e2(spec, q) * (cmath.exp(-2j * math.pi * nq) - 1)
          * g(1 - nq) / g(1 + nq) * cmath.exp(-2 * Iq))
    sm = ((cmath.exp(-2j * math.pi * nm) - 1) / sf.pow_upper(2 * q * x * spec.u1(-q), 2 * nm)
          * e2(spec, -q) * g(1 + nm) / g(1 - nm) * cmath.exp(-2 * Im))
    s0 = (e2(spec, l0) * cmath.exp(0.25j * math.pi) * sf.pow_upper((l0 + q) / (l0 - q), 2 * n0)
          * cmath.exp(-2 * I0))
    if not spec.space_like:
        s0 *= (cmath.exp(-2j * math.pi * n0) - 1) ** 2
    return SFactors(complex(sp), complex(sm), complex(s0))


def _ratio(num_coef, a, b):
    """num_coef * a / b with the convention 0 * (anything) = 0."""
    if num_coef == 0:
        return 0j
    return num_coef * a / b


def b1(spec: ProblemSpec) -> complex:
    q, l0 = spec.q, spec.lambda0
    S = S_factors(spec)
    nq, nm = spec.nu(q), spec.nu(-q)
    pref = 1 / cmath.sqrt(-2 * math.pi * spec.u2(l0))
    cm = nm / (spec.u1(-q) * (l0 + q) ** 2)
    cp = nq / (spec.u1(q) * (l0 - q) ** 2)
    if spec.space_like:
        return pref * (_ratio(cm, S.S_minus, S.S_zero) - _ratio(cp, S.S_plus, S.S_zero))
    return pref * (_ratio(cm, S.S_zero, S.S_minus) - _ratio(cp, S.S_zero, S.S_plus))


def nu_weighted(spec: ProblemSpec) -> complex:
    """int_{-q}^{q} (i x u' + g') nu."""
    lam, w = _gl(spec)
    return complex(np.sum(w * (1j * spec.x * spec.u1(lam) + spec.g1(lam)) * spec.nu(lam)))


@dataclass(frozen=True)
class LeadingTerms:
    value: complex
    prefactor: complex
    bx: complex
    b1_term: complex
    osc_plus: complex
    osc_minus: complex
    phase: complex  # i x (u(q) - u(-q)) + g(q) - g(-q)


def theorem1_parts(spec: ProblemSpec) -> LeadingTerms:
    q, x = spec.q, spec.x
    pre = cmath.exp(nu_weighted(spec))
    if spec.nu_is_zero:
        return LeadingTerms(pre, pre, 1 + 0j, 0j, 0j, 0j, 0j)
    b0 = B_x(spec, 0)
    ph = 1j * x * (spec.u(q) - spec.u(-q)) + spec.g(q) - spec.g(-q)
    t1 = b1(spec) * x ** -1.5 * b0
    tp = cmath.exp(ph) * B_x(spec, 1)
    tm = cmath.exp(-ph) * B_x(spec, -1)
    return LeadingTerms(pre * (b0 + t1 + tp + tm), pre, b0, t1, tp, tm, ph)


def theorem1_det(spec: ProblemSpec) -> complex:
    return theorem1_parts(spec).value


def det0(spec: ProblemSpec) -> complex:
    if spec.nu_is_zero:
        return cmath.exp(nu_weighted(spec))
    return B_x(spec, 0) * cmath.exp(nu_weighted(spec))


# ---------------------------------------------------------------- d/dx log det

@dataclass(frozen=True)
class AsymCoeffs:
    a_m1: complex
    a_0: complex
    a_1: complex
    a_2_osc: complex
    a_2_no: complex
    Bx: complex
    Bx_plus: complex
    Bx_minus: complex
    b1: complex
    S_plus: complex
    S_minus: complex
    S_zero: complex
    C1: complex
    Cconst: complex

    def dlogdet(self, x: float, order: int = 2) -> complex:
        """a_{-1} + a_0/x + a_1 x^{-3/2} + (a_2^osc + a_2^no)/x^2, truncated after ``order``."""
        terms = [self.a_m1, self.a_0 / x, self.a_1 * x ** -1.5, (self.a_2_osc + self.a_2_no) / x ** 2]
        return sum(terms[: order + 2])


def a_m1(spec: ProblemSpec) -> complex:
    lam, w = _gl(spec)
    return 1j * complex(np.sum(w * spec.u1(lam) * spec.nu(lam)))


def a_0(spec: ProblemSpec) -> complex:
    return -(spec.nu(spec.q) ** 2 + spec.nu(-spec.q) ** 2)


def a_1(spec: ProblemSpec, S: SFactors | None = None) -> complex:
    q, l0 = spec.q, spec.lambda0
    S = S_factors(spec) if S is None else S
    nq, nm = spec.nu(q), spec.nu(-q)
    h0 = math.sqrt(-spec.u2(l0).real / 2)
    pref = 1 / (2 * math.sqrt(math.pi) * h0)
    u0, uq, um = spec.u(l0), spec.u(q), spec.u(-q)
    if spec.space_like:
        cm = 1j * nm * (u0 - um) / (spec.u1(-q) * (l0 + q) ** 2)
        cp = 1j * nq * (u0 - uq) / (spec.u1(q) * (l0 - q) ** 2)
        return pref * (_ratio(cm, S.S_minus, S.S_zero) - _ratio(cp, S.S_plus, S.S_zero))
    cm = 1j * nm * (um - u0) / (spec.u1(-q) * (l0 + q) ** 2)
    cp = 1j * nq * (uq - u0) / (spec.u1(q) * (l0 - q) ** 2)
    return pref * (_ratio(cm, S.S_zero, S.S_minus) - _ratio(cp, S.S_zero, S.S_plus))


def a_2_osc(spec: ProblemSpec, S: SFactors | None = None) -> complex:
    q = spec.q
    S = S_factors(spec) if S is None else S
    nq, nm = spec.nu(q), spec.nu(-q)
    c = 1j * (spec.u(q) - spec.u(-q)) * nq * nm / (spec.u1(q) * spec.u1(-q) * (2 * q) ** 2)
    if c == 0:
        return 0j
    return c * (S.S_minus / S.S_plus - S.S_plus / S.S_minus)


def a_2_no(spec: ProblemSpec) -> complex:
    """(i/4) sum_eps { u''(eps q) tr[(V1 - V0^2) s3] + u'(eps q) tr[(V1' - 2 V0 V0') s3] } at s = eps q."""
    from . import rhp

    if spec.nu_is_zero:
        return 0j
    s3 = np.diag([1.0, -1.0])
    total = 0j
    for eps in (1, -1):
        c = eps * spec.q
        V0 = rhp.Vmat(spec, eps, 0, c)
        V1 = rhp.Vmat(spec, eps, 1, c)
        dV0 = rhp.Vmat_derivative(spec, eps, 0, c)
        dV1 = rhp.Vmat_derivative(spec, eps, 1, c)
        total += spec.u2(c) * np.trace((V1 - V0 @ V0) @ s3)
        total += spec.u1(c) * np.trace((dV1 - 2 * V0 @ dV0) @ s3)
    return complex(0.25j * total)


def constant_C(spec: ProblemSpec) -> complex:
    q = spec.q
    if spec.nu_is_zero:
        return 0j
    nq, nm = spec.nu(q), spec.nu(-q)
    G = sf.barnes_g
    lam, w = _gl(spec)
    nu = spec.nu(lam)
    ex = np.exp(-2j * np.pi * nu)
    dlog = -2j * np.pi * spec.nu1(lam) * ex / (ex - 1)
    out = (-nq ** 2 * log_upper(2 * q * spec.u1(q)) - nm ** 2 * log_upper(2 * q * spec.u1(-q))
           + cmath.log(G(1 + nq) * G(1 - nq)) + cmath.log(G(1 + nm) * G(1 - nm))
           + C1_functional(spec)
           + complex(np.sum(w * spec.g1(lam) * nu))
           - complex(np.sum(w * nu * dlog)))
    return out


def coeffs_dlogdet(spec: ProblemSpec) -> AsymCoeffs:
    if spec.nu_is_zero:
        z = 0j
        s0 = S_factors(spec).S_zero
        return AsymCoeffs(z, z, z, z, z, 1 + 0j, B_x(spec, 1), B_x(spec, -1), z, z, z, s0, z, z)
    S = S_factors(spec)
    return AsymCoeffs(
        a_m1=a_m1(spec), a_0=complex(a_0(spec)), a_1=a_1(spec, S), a_2_osc=a_2_osc(spec, S),
        a_2_no=a_2_no(spec), Bx=B_x(spec, 0), Bx_plus=B_x(spec, 1), Bx_minus=B_x(spec, -1),
        b1=b1(spec), S_plus=S.S_plus, S_minus=S.S_minus, S_zero=S.S_zero,
        C1=C1_functional(spec), Cconst=constant_C(spec))
