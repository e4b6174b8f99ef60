"""Complex special functions: Gamma, Pochhammer, Barnes G, Kummer Phi, Tricomi Psi.

Gamma and log-Gamma come from scipy.special. Everything else is computed here.

Tricomi Psi(a, c; z) is evaluated by one of three routes:

* |z| small (or a non-principal branch requested): connection formula to
  Kummer's Phi, with the c = 1 degeneracy handled by symmetric
  c = 1 +- h averages extrapolated to h -> 0;
* moderate |z|: the Laplace integral along a rotated ray, discretised with
  an exp-sinh (double exponential) rule, after an upward recurrence in `a`
  when Re a is small;
* large |z|: the asymptotic series, truncated at its smallest term.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

EULER_GAMMA = 0.5772156649015329
ZETA_PRIME_M1 = -0.16542114370045092  # zeta'(-1)

RICHARDSON_EPS = 1e-4
SMALL_Z = 2.0
LARGE_Z = 40.0


@dataclass(frozen=True)
class CHFParams:
    a: complex
    c: complex
    z: complex
    arg: float | None = None  # branch of arg z; None means principal


# ---------------------------------------------------------------- powers / Gamma

def cpow(v, alpha, arg=None):
    """v**alpha = exp(alpha*(log|v| + i*arg)), principal arg unless given."""
    v = complex(v)
    theta = cmath.phase(v) if arg is None else arg
    return cmath.exp(complex(alpha) * complex(math.log(abs(v)), theta))


def pow_upper(v, alpha):
    """Principal power, except that negative reals take arg = +pi (the +i0 rule)."""
    v = np.asarray(v, dtype=complex)
    theta = np.angle(v)
    theta = np.where((v.imag == 0) & (v.real < 0), np.pi, theta)
    out = np.exp(np.asarray(alpha, dtype=complex) * (np.log(np.abs(v)) + 1j * theta))
    return complex(out) if out.ndim == 0 else out


def log_gamma(z):
    """Principal branch of log Gamma (scipy.special.loggamma)."""
    out = sp.loggamma(np.asarray(z, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def gamma(z):
    out = sp.gamma(np.asarray(z, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def rgamma(z):
    """1/Gamma(z), exactly zero at the poles of Gamma."""
    out = sp.rgamma(np.asarray(z, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def pochhammer(z, n: int):
    out = np.ones_like(np.asarray(z, dtype=complex))
    for k in range(n):
        out = out * (z + k)
    return complex(out) if np.ndim(out) == 0 else out


def pochhammer_sq(z, n: int):
    """((z)_n)**2."""
    if n < 0:
        raise ValueError("n must be >= 0")
    p = pochhammer(z, n)
    return p * p


# ---------------------------------------------------------------- Barnes G

_N_TAYLOR = 160
_ZETA = np.array([sp.zeta(k, 1) for k in range(2, _N_TAYLOR + 2)])
_KS = np.arange(2, _N_TAYLOR + 2)
_BERN = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510, 43867 / 798]


def _log_g1p_taylor(w: complex) -> complex:
    """log G(1+w) from its Maclaurin series, |w| < 1."""
    series = np.sum((-1.0) ** _KS * _ZETA * w ** (_KS + 1) / (_KS + 1))
    return (w / 2 * math.log(2 * math.pi) - (w + (1 + EULER_GAMMA) * w * w) / 2
            + complex(series))


def _log_g1p_asym(z: complex) -> complex:
    """log G(1+z) for large |z| (Re z > 0)."""
    lz = cmath.log(z)
    out = z * z / 2 * lz - 0.75 * z * z + z / 2 * math.log(2 * math.pi) - lz / 12 + ZETA_PRIME_M1
    for k in range(1, len(_BERN)):
        out += _BERN[k] / (4 * k * (k + 1) * z ** (2 * k))
    return out


def barnes_g(z):
    """Barnes G function, G(z+1) = Gamma(z) G(z), G(1) = 1. Supports |z| <= 20."""
    z = complex(z)
    if abs(z) > 20:
        raise OverflowError("barnes_g: |z| beyond the supported range 20")
    s = z - 1  # G(z) = G(1+s)
    if abs(s.imag) <= 0.75:
        n = int(round(s.real))
        w = s - n
        g = cmath.exp(_log_g1p_taylor(w))
    else:
        n = int(math.floor(s.real)) - 14
        w = s - n
        g = cmath.exp(_log_g1p_asym(w))
    # move from G(1+w) to G(1+w+n)
    if n > 0:
        for k in range(n):
            g *= gamma(1 + w + k)
    else:
        for k in range(1, -n + 1):
            g *= rgamma(1 + w - k)
    return g


def log_barnes_g(z) -> complex:
    return cmath.log(barnes_g(z))


# ---------------------------------------------------------------- Kummer Phi

def _kahan_series(a, c, z, cap=500):
    total = 0j
    comp = 0j
    term = 1 + 0j
    for n in range(cap):
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if n > 3 and abs(term) <= 1e-17 * abs(total):
            return total
        term = term * (a + n) / ((c + n) * (n + 1)) * z
        if term == 0:
            return total
    raise ArithmeticError("kummer_phi: series did not converge within 500 terms")


def kummer_phi(p: CHFParams | None = None, *, a=None, c=None, z=None) -> complex:
    """Kummer's Phi(a, c; z) by compensated summation of its power series.

    For Re z < 0 the series of Kummer's transform e^z Phi(c - a, c; -z) is
    summed instead, which avoids the cancellation of large alternating terms.
    """
    if p is not None:
        a, c, z = p.a, p.c, p.z
    a, c, z = complex(a), complex(c), complex(z)
    if c.imag == 0 and c.real <= 0 and c.real == int(c.real):
        raise ValueError("kummer_phi: c is a non-positive integer")
    if abs(z) > 60:
        raise ValueError("kummer_phi: |z| beyond the series range 60")
    if z.real < 0:
        return cmath.exp(z) * _kahan_series(c - a, c, -z)
    return _kahan_series(a, c, z)


# ---------------------------------------------------------------- Tricomi Psi

def _psi_connection_nonint(a, c, z, arg):
    t1 = gamma(1 - c) * rgamma(a - c + 1) * kummer_phi(a=a, c=c, z=z)
    t2 = gamma(c - 1) * rgamma(a) * cpow(z, 1 - c, arg) * kummer_phi(a=a - c + 1, c=2 - c, z=z)
    return t1 + t2


def _psi_connection(a, c, z, arg):
    if abs(c - 1) < 1e-12:
        # symmetric averages A(h) = Psi(1) + O(h^2); extrapolate h -> 0
        h = RICHARDSON_EPS
        a1 = (_psi_connection_nonint(a, 1 - h, z, arg) + _psi_connection_nonint(a, 1 + h, z, arg)) / 2
        a2 = (_psi_connection_nonint(a, 1 - 2 * h, z, arg)
              + _psi_connection_nonint(a, 1 + 2 * h, z, arg)) / 2
        return (4 * a1 - a2) / 3
    if abs(c - round(c.real)) < 1e-9:
        raise ValueError("tricomi_psi: integer c other than 1 is not supported")
    return _psi_connection_nonint(a, c, z, arg)


def _psi_asymptotic(a, c, z, arg):
    lz = complex(math.log(abs(z)), arg)
    total = 0j
    term = 1 + 0j
    best = math.inf
    b = a - c + 1
    for n in range(400):
        mag = abs(term)
        if mag > best:  # series started to diverge
            break
        total += term
        best = mag
        if mag < 1e-17 * abs(total):
            break
        term = -term * (a + n) * (b + n) / ((n + 1) * z)
    return total * cmath.exp(-a * lz)


# exp-sinh nodes on (0, inf)
_T = np.arange(-4.5, 4.5 + 1e-12, 1 / 40)
_S = np.exp(np.pi / 2 * np.sinh(_T))
_DS = _S * np.pi / 2 * np.cosh(_T) / 40


def _psi_integral(a, c, z, arg):
    """Laplace integral, Re a > 0; rotate t = e^{i theta} s so that z t > 0-ish."""
    theta = -max(-0.75 * math.pi, min(0.75 * math.pi, arg))
    phi = arg + theta
    zr = abs(z) * cmath.exp(1j * phi)
    rot = cmath.exp(1j * theta)
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        f = (np.exp(-zr * _S + (a - 1) * np.log(_S) + (c - a - 1) * np.log1p(rot * _S)))
        f = np.where(np.isfinite(f), f, 0)
    return complex(np.sum(f * _DS)) * rot ** 1 * cmath.exp(1j * theta * (a - 1)) * rgamma(a)


def _psi_recur(a, c, z, arg):
    if a.real > 0.5:
        return _psi_integral(a, c, z, arg)
    u1 = _psi_recur(a + 1, c, z, arg)
    u2 = _psi_recur(a + 2, c, z, arg)
    zz = abs(z) * cmath.exp(1j * arg)
    return -(c - 2 * a - 2 - zz) * u1 - (a + 1) * (a - c + 2) * u2


def tricomi_psi(p: CHFParams | None = None, *, a=None, c=None, z=None, arg=None) -> complex:
    """Tricomi's Psi(a, c; z).

    ``arg`` selects the branch of arg z (principal if omitted); values with
    |arg| > pi are reached through the connection formula, so they are only
    accurate for moderate |z|.
    """
    if p is not None:
        a, c, z, arg = p.a, p.c, p.z, p.arg
    a, c, z = complex(a), complex(c), complex(z)
    if a == 0:
        return 1 + 0j
    if z == 0:
        raise ValueError("tricomi_psi: z = 0 is a branch point")
    if arg is None:
        arg = cmath.phase(z)
    if abs(arg) >= 2 * math.pi:
        raise ValueError("tricomi_psi: arg z outside (-2pi, 2pi)")
    r = abs(z)
    if abs(arg) > math.pi + 1e-12 or r <= SMALL_Z:
        return _psi_connection(a, c, z, arg)
    if r >= LARGE_Z + 2 * abs(a) ** 2 + abs(a - c + 1) ** 2:
        return _psi_asymptotic(a, c, z, arg)
    return _psi_recur(a, c, z, arg)


def psi_cut_jump(z: float) -> complex:
    """Psi(1,3/2; -z e^{i0}) - Psi(1,3/2; -z e^{-i0}) for z > 0 (arguments -z -/+ i0)."""
    below = tricomi_psi(a=1, c=1.5, z=-z, arg=-math.pi)
    above = tricomi_psi(a=1, c=1.5, z=-z, arg=math.pi)
    return below - above


def psi_monodromy_check(p: CHFParams) -> float:
    """Residual of the c = 1 monodromy identity of Psi around z = 0.

    For Im z < 0:  Psi(a,1; z e^{2 i pi}) = Psi(a,1;z) e^{-2 i pi a}
                     + 2 i pi e^{-i pi a + z} / Gamma(a)^2 Psi(1-a,1;-z)
    For Im z > 0:  Psi(a,1; z e^{-2 i pi}) = Psi(a,1;z) e^{2 i pi a}
                     - 2 i pi e^{i pi a + z} / Gamma(a)^2 Psi(1-a,1;-z)
    """
    a, z = complex(p.a), complex(p.z)
    if z.imag == 0:
        raise ValueError("psi_monodromy_check: Im z must be nonzero")
    arg = cmath.phase(z)
    eps = -1 if z.imag < 0 else 1
    lhs = tricomi_psi(a=a, c=1, z=z, arg=arg - eps * 2 * math.pi)
    rg2 = rgamma(a) ** 2
    base = tricomi_psi(a=a, c=1, z=z)
    other = tricomi_psi(a=1 - a, c=1, z=-z) if rg2 != 0 else 0
    rhs = (base * cmath.exp(2j * math.pi * a * eps)
           - eps * 2j * math.pi * cmath.exp(1j * math.pi * a * eps + z) * rg2 * other)
    return abs(lhs - rhs)
