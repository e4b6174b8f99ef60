"""The generalised sine kernel V on [-q, q] and its Fredholm determinant.

    e(lam)   = exp(-i x u(lam)/2 - g(lam)/2)
    E(lam)   = i e(lam) { PV int_{C_E} e^{-2}(s)/(s - lam) ds/(2 pi) + e^{-2}(lam) cot(pi nu(lam))/2 }
    V(l, m)  = 4 sin(pi nu(l)) sin(pi nu(m)) (E(l) e(m) - E(m) e(l)) / (2 i pi (l - m))

The determinant det(I + V) is computed by a symmetrised Nystrom rule on
Gauss-Legendre nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import contour as ct
from .expr import AnalyticExpr, derivative, parse

TIME_LIKE = "time-like"
SPACE_LIKE = "space-like"


class SpecError(ValueError):
    pass


# ---------------------------------------------------------------- problem spec

def detect_saddle(u: AnalyticExpr, guess: float, q: float | None = None, maxit: int = 50):
    """Newton iteration on u' from ``guess``; returns (lambda0, regime)."""
    u1 = derivative(u, 1)
    u2 = derivative(u, 2)
    lam = float(guess)
    for _ in range(maxit):
        d2 = u2(lam).real
        if d2 == 0:
            break
        step = u1(lam).real / d2
        lam -= step
        if abs(u1(lam)) <= 1e-13 * max(1.0, abs(u2(lam))):
            break
    else:
        raise SpecError("saddle point search did not converge")
    if not abs(u1(lam)) <= 1e-12 * max(1.0, abs(u2(lam))) or not math.isfinite(lam):
        raise SpecError("saddle point search did not converge")
    if u2(lam).real >= 0:
        raise SpecError(f"u''(lambda0) = {u2(lam).real:.3g} is not negative")
    if q is None:
        return lam, None
    return lam, classify(lam, q)


def classify(lam0: float, q: float) -> str:
    if min(abs(lam0 - q), abs(lam0 + q)) <= 1e-6:
        raise SpecError("saddle point coincides with an edge of [-q, q]")
    if -q < lam0 < q:
        return TIME_LIKE
    if lam0 > q:
        return SPACE_LIKE
    raise SpecError("space-like regime with lambda0 < -q is not supported")


def _find_saddle(u: AnalyticExpr, q: float):
    """Locate the unique maximum of u on a scan of [-q - 100, q + 100]."""
    grid = np.linspace(-q - 100, q + 100, 20001)
    d = derivative(u, 1)(grid).real
    idx = np.nonzero((d[:-1] > 0) & (d[1:] <= 0))[0]
    if len(idx) != 1:
        raise SpecError(f"expected a unique saddle point of u, found {len(idx)}")
    return detect_saddle(u, grid[idx[0]], q)


@dataclass(frozen=True)
class ProblemSpec:
    nu: AnalyticExpr
    u: AnalyticExpr
    g: AnalyticExpr
    q: float
    x: float
    lambda0: float
    regime: str
    width: float
    height: float
    n_nodes: int = 160
    npp: int = 16
    cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def with_x(self, x: float) -> "ProblemSpec":
        return replace(self, x=float(x), cache={})

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, cache={}, **kw)

    @cached_property
    def nu1(self):
        return derivative(self.nu, 1)

    @cached_property
    def nu2(self):
        return derivative(self.nu, 2)

    @cached_property
    def u1(self):
        return derivative(self.u, 1)

    @cached_property
    def u2(self):
        return derivative(self.u, 2)

    @cached_property
    def u3(self):
        return derivative(self.u, 3)

    @cached_property
    def g1(self):
        return derivative(self.g, 1)

    @property
    def nu_is_zero(self) -> bool:
        return self.nu.is_constant and self.nu(0.0) == 0

    @property
    def space_like(self) -> bool:
        return self.regime == SPACE_LIKE


def make_spec(nu, u, g="0", q: float = 1.0, x: float = 100.0, guess: float | None = None,
              width: float | None = None, height: float = 0.25, n_nodes: int = 160,
              npp: int = 16, check: bool = True) -> ProblemSpec:
    """Build and validate a ProblemSpec from expressions (strings or ASTs)."""
    nu = parse(nu) if isinstance(nu, str) else nu
    u = parse(u) if isinstance(u, str) else u
    g = parse(g) if isinstance(g, str) else g
    q = float(q)
    if q <= 0 or x <= 0:
        raise SpecError("q and x must be positive")
    if guess is None:
        lam0, regime = _find_saddle(u, q)
    else:
        lam0, regime = detect_saddle(u, guess, q)
    if width is None:
        width = max(q, abs(lam0)) + 8
    spec = ProblemSpec(nu, u, g, q, float(x), lam0, regime, float(width), float(height),
                       int(n_nodes), int(npp))
    if check:
        validate(spec)
    return spec


def validate(spec: ProblemSpec) -> None:
    q = spec.q
    for edge in (q, -q):
        if not abs(spec.nu(edge).real) < 0.5:
            raise SpecError(f"|Re nu({edge:g})| must be < 1/2")
    if spec.nu_is_zero:
        return
    lam, _ = nodes_weights(spec)
    s = np.sin(np.pi * spec.nu(lam))
    if np.min(np.abs(s)) < 1e-12:
        raise SpecError("sin(pi nu) vanishes on [-q, q]")


# ---------------------------------------------------------------- e, E

def e_fn(spec: ProblemSpec, lam):
    return np.exp(-0.5j * spec.x * spec.u(lam) - 0.5 * spec.g(lam))


def em2_fn(spec: ProblemSpec, lam):
    """e^{-2}(lam) = exp(i x u + g)."""
    return np.exp(1j * spec.x * spec.u(lam) + spec.g(lam))


def ce_contour(spec: ProblemSpec) -> ct.Contour:
    return ct.build_CE(spec.q, spec.lambda0, spec.width, spec.height)


def ce_rule(spec: ProblemSpec) -> ct.QuadratureRule:
    """Composite rule on C_E resolving the oscillation of e^{-2} at frequency x|u'|."""
    key = "ce_rule"
    if key in spec.cache:
        return spec.cache[key]
    path = ce_contour(spec)
    hs = []
    for seg in path.segments:
        probe = seg.point(np.linspace(0, 1, 257))
        umax = float(np.max(np.abs(spec.u1(probe))))
        h = min(0.25, 4.0 / max(spec.x * umax, 1e-300))
        if float(np.max(np.abs(em2_fn(spec, probe)))) < 1e-30:
            h = 0.25  # the oscillating part is negligible; only the smooth subtraction remains
        hs.append(h)
    rule = path.rule(hs, spec.npp)
    spec.cache[key] = rule
    return rule


def tail_magnitude(spec: ProblemSpec) -> float:
    """max |e^{-2}| at the two truncation ends of C_E (decay-hypothesis audit)."""
    path = ce_contour(spec)
    ends = np.array([path.segments[0].start, path.segments[-1].end])
    return float(np.max(np.abs(em2_fn(spec, ends))))


def _pv_parts(spec: ProblemSpec, lam):
    """PV integrals of e^{-2} and of its derivative over C_E at real lam."""
    rule = ce_rule(spec)
    path = rule.parent
    lam = np.asarray(lam, dtype=complex)
    f_nodes = em2_fn(spec, rule.nodes)
    dlog = lambda s: 1j * spec.x * spec.u1(s) + spec.g1(s)
    fp_nodes = dlog(rule.nodes) * f_nodes
    f_lam = em2_fn(spec, lam)
    fp_lam = dlog(lam) * f_lam
    fpp = lambda s: (1j * spec.x * spec.u2(s) + derivative(spec.g, 2)(s) + dlog(s) ** 2) * em2_fn(spec, s)
    pv = ct.principal_value(None, path, lam, rule=rule, f_nodes=f_nodes, f_lam=f_lam,
                            fprime=lambda s: dlog(s) * em2_fn(spec, s))
    pv1 = ct.principal_value(None, path, lam, rule=rule, f_nodes=fp_nodes, f_lam=fp_lam, fprime=fpp)
    A, B = path.segments[0].start, path.segments[-1].end
    pv1 = pv1 - em2_fn(spec, B) / (B - lam) + em2_fn(spec, A) / (A - lam)
    return pv, pv1, f_lam, fp_lam


def E_and_derivative(spec: ProblemSpec, lam):
    """E(lam) and E'(lam) for real lam in (-q, q)."""
    lam = np.asarray(lam, dtype=float)
    pv, pv1, f, fp = _pv_parts(spec, lam)
    nu = spec.nu(lam)
    cot = np.cos(np.pi * nu) / np.sin(np.pi * nu)
    dcot = -np.pi * spec.nu1(lam) / np.sin(np.pi * nu) ** 2
    e = e_fn(spec, lam)
    de = (-0.5j * spec.x * spec.u1(lam) - 0.5 * spec.g1(lam)) * e
    bracket = pv / (2 * np.pi) + f * cot / 2
    dbracket = pv1 / (2 * np.pi) + fp * cot / 2 + f * dcot / 2
    return 1j * e * bracket, 1j * (de * bracket + e * dbracket)


def E_fn(spec: ProblemSpec, lam):
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(np.abs(lam_arr) > spec.q):
        raise SpecError("E_fn is defined on [-q, q]")
    val, _ = E_and_derivative(spec, lam_arr)
    return complex(val[0]) if np.ndim(lam) == 0 else val


def V_kernel(spec: ProblemSpec, lam, mu):
    """Kernel value; on the diagonal uses 4 sin^2(pi nu)/(2 i pi) (E' e - E e')."""
    lam, mu = float(lam), float(mu)
    if spec.nu_is_zero:
        return 0j
    pts = np.array([lam, mu])
    E, dE = E_and_derivative(spec, pts)
    e = e_fn(spec, pts)
    s = np.sin(np.pi * spec.nu(pts))
    if lam == mu:
        de = (-0.5j * spec.x * spec.u1(lam) - 0.5 * spec.g1(lam)) * e[0]
        return complex(4 * s[0] ** 2 / (2j * np.pi) * (dE[0] * e[0] - E[0] * de))
    return complex(4 * s[0] * s[1] * (E[0] * e[1] - E[1] * e[0]) / (2j * np.pi * (lam - mu)))


# ---------------------------------------------------------------- Nystrom

def auto_nodes(spec: ProblemSpec) -> int:
    """Default node count: n_nodes, raised so that the total phase x int|u'| over
    [-q, q] is sampled with at least 0.6 nodes per radian."""
    t, w = np.polynomial.legendre.leggauss(64)
    phase = spec.x * float(np.sum(spec.q * w * np.abs(spec.u1(spec.q * t))))
    return max(spec.n_nodes, 16 * math.ceil(0.6 * phase / 16))


def nodes_weights(spec: ProblemSpec, n: int | None = None):
    n = auto_nodes(spec) if n is None else n
    x, w = np.polynomial.legendre.leggauss(n)
    return spec.q * x, spec.q * w


def kernel_matrix(spec: ProblemSpec, n: int | None = None):
    """sqrt(w_i) V(x_i, x_j) sqrt(w_j) on Gauss-Legendre nodes."""
    lam, w = nodes_weights(spec, n)
    if spec.nu_is_zero:
        return lam, w, np.zeros((lam.size, lam.size), dtype=complex)
    E, dE = E_and_derivative(spec, lam)
    e = e_fn(spec, lam)
    de = (-0.5j * spec.x * spec.u1(lam) - 0.5 * spec.g1(lam)) * e
    s = np.sin(np.pi * spec.nu(lam))
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, 1.0)
    V = 4 * s[:, None] * s[None, :] * (E[:, None] * e[None, :] - E[None, :] * e[:, None]) / (2j * np.pi * diff)
    np.fill_diagonal(V, 4 * s ** 2 / (2j * np.pi) * (dE * e - E * de))
    r = np.sqrt(w)
    return lam, w, r[:, None] * V * r[None, :]


def fredholm_det(spec: ProblemSpec, n: int | None = None) -> complex:
    if spec.nu_is_zero:
        return 1 + 0j
    _, _, K = kernel_matrix(spec, n)
    return complex(np.linalg.det(np.eye(K.shape[0]) + K))


def phase_rate(spec: ProblemSpec) -> float:
    """Leading x-derivative of Im log det, int_{-q}^{q} u' Re nu."""
    t, w = np.polynomial.legendre.leggauss(64)
    lam = spec.q * t
    return float(np.sum(spec.q * w * (spec.u1(lam) * spec.nu(lam)).real))


def log_det_sweep(spec: ProblemSpec, xs, n: int | None = None):
    """log det(I+V) along increasing xs with the phase continued from the principal branch.

    Each step is unwound towards the leading-order phase prediction; a step whose
    predicted phase advance reaches pi is ambiguous and is refused.
    """
    xs = [float(v) for v in xs]
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("xs must be increasing")
    rate = phase_rate(spec)
    if any(abs(rate * (b - a)) >= math.pi for a, b in zip(xs, xs[1:])):
        raise ValueError("phase step between consecutive x is too large; use a denser sweep")
    out = []
    prev = prev_x = None
    for xv in xs:
        d = fredholm_det(spec.with_x(xv), n)
        val = complex(math.log(abs(d)), math.atan2(d.imag, d.real))
        if prev is not None:
            target = prev.imag + rate * (xv - prev_x)
            val += 2j * math.pi * round((target - val.imag) / (2 * math.pi))
        out.append(val)
        prev, prev_x = val, xv
    return out
