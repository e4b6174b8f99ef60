"""Oriented paths in the complex plane, quadrature rules, Cauchy and PV integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Segment:
    """Straight segment a -> b, or circular arc center + radius*e^{i t}, t: t0 -> t1."""

    kind: str
    a: complex = 0j
    b: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    t0: float = 0.0
    t1: float = 0.0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return self.a + (self.b - self.a) * t
        return self.center + self.radius * np.exp(1j * (self.t0 + (self.t1 - self.t0) * t))

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            return np.full(t.shape, self.b - self.a, dtype=complex)
        dt = self.t1 - self.t0
        return 1j * dt * self.radius * np.exp(1j * (self.t0 + dt * t))

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))

    @property
    def length(self) -> float:
        if self.kind == "line":
            return abs(self.b - self.a)
        return abs(self.t1 - self.t0) * self.radius


def line(a, b) -> Segment:
    return Segment("line", a=complex(a), b=complex(b))


def arc(center, radius, t0, t1) -> Segment:
    return Segment("arc", center=complex(center), radius=float(radius), t0=float(t0), t1=float(t1))


@dataclass
class Contour:
    segments: list
    closed: bool = False

    def __post_init__(self):
        for s0, s1 in zip(self.segments, self.segments[1:]):
            if abs(s0.end - s1.start) > 1e-12 * (1 + abs(s0.end)):
                raise ValueError("contour segments are not joined end to start")

    @property
    def vertices(self):
        return [s.start for s in self.segments] + [self.segments[-1].end]

    def rule(self, h_max, npp: int = 16) -> "QuadratureRule":
        """Composite Gauss-Legendre rule with panels no longer than h_max
        (a scalar, or one value per segment)."""
        x, w = np.polynomial.legendre.leggauss(npp)
        hs = np.broadcast_to(np.asarray(h_max, dtype=float), (len(self.segments),))
        nodes, weights, seg_id = [], [], []
        for k, seg in enumerate(self.segments):
            m = max(1, math.ceil(seg.length / hs[k]))
            edges = np.linspace(0.0, 1.0, m + 1)
            t = ((edges[:-1, None] + edges[1:, None]) + (edges[1:, None] - edges[:-1, None]) * x) / 2
            wt = (edges[1:, None] - edges[:-1, None]) / 2 * w
            t = t.ravel()
            nodes.append(seg.point(t))
            weights.append(seg.deriv(t) * wt.ravel())
            seg_id.append(np.full(t.size, k))
        return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), self,
                              np.concatenate(seg_id))


@dataclass
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    parent: Contour | None = None
    segment: np.ndarray | None = field(default=None, repr=False)

    def integrate(self, f) -> complex:
        vals = f(self.nodes) if callable(f) else np.asarray(f)
        return complex(np.sum(vals * self.weights))


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    if n < 2:
        raise ValueError("gauss_legendre needs n >= 2")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule((a + b) / 2 + (b - a) / 2 * x + 0j, (b - a) / 2 * w + 0j,
                          Contour([line(a, b)]))


def circle_rule(center, radius: float, n: int, orientation: int = 1) -> QuadratureRule:
    """Trapezoid rule on a circle; orientation +1 counterclockwise, -1 clockwise."""
    if n < 16:
        raise ValueError("circle_rule needs n >= 16")
    t = 2 * np.pi * np.arange(n) / n
    z = np.exp(orientation * 1j * t)
    nodes = center + radius * z
    weights = orientation * 1j * radius * z * (2 * np.pi / n)
    seg = arc(center, radius, 0.0, orientation * 2 * np.pi)
    return QuadratureRule(nodes, weights, Contour([seg], closed=True))


# ---------------------------------------------------------------- CE contour

def build_CE(q: float, lambda0: float, width: float, height: float, margin: float = 1.0) -> Contour:
    """Polyline from -width + i*height down to the axis, along the axis through
    [-q, q] and lambda0, then down to -i*height and out to +width."""
    if height <= 0 or height > 0.5:
        raise ValueError("C_E height must lie in (0, 0.5]")
    if width <= max(q, abs(lambda0)) + 2:
        raise ValueError("C_E width must exceed max(q, |lambda0|) + 2")
    left = min(-q, lambda0) - margin
    right = max(q, lambda0) + margin
    if left <= -width or right >= width:
        raise ValueError("C_E geometry infeasible: on-axis part exceeds the width")
    pts = [complex(-width, height), complex(left, height), complex(left, 0),
           complex(right, 0), complex(right, -height), complex(width, -height)]
    return Contour([line(p0, p1) for p0, p1 in zip(pts, pts[1:])])


# ---------------------------------------------------------------- transforms

def _vals(f, s):
    return f(s) if callable(f) else np.asarray(f)


def cauchy_transform(f, path: Contour | QuadratureRule, lam, side: int | None = None,
                     h_max: float = 0.05, npp: int = 16, r_def: float | None = None) -> complex:
    """C[f](lam) = int f(s)/(s - lam) ds/(2 i pi).

    With ``side`` = +1 / -1 the boundary value from the left / right of the
    path is returned; the path is locally bent around lam by a semicircle.
    """
    lam = complex(lam)
    if side is None:
        rule = path if isinstance(path, QuadratureRule) else path.rule(h_max, npp)
        return complex(np.sum(_vals(f, rule.nodes) * rule.weights / (rule.nodes - lam))) / (2j * np.pi)
    contour = path.parent if isinstance(path, QuadratureRule) else path
    segs = _bend(contour, lam, side, r_def)
    rule = Contour(segs).rule(h_max, npp)
    return complex(np.sum(_vals(f, rule.nodes) * rule.weights / (rule.nodes - lam))) / (2j * np.pi)


def _locate(contour: Contour, lam: complex):
    for k, seg in enumerate(contour.segments):
        if seg.kind == "line":
            d = seg.b - seg.a
            t = ((lam - seg.a) / d).real
            if 0 <= t <= 1 and abs(seg.a + d * t - lam) <= 1e-12 * (1 + abs(lam)):
                return k, t
        else:
            rel = (lam - seg.center) / seg.radius
            if abs(abs(rel) - 1) <= 1e-12:
                span = seg.t1 - seg.t0
                delta = (np.angle(rel) - seg.t0) * np.sign(span) % (2 * np.pi)
                t = delta / abs(span)
                if 0 <= t <= 1:
                    return k, t
    raise ValueError("point is not on the path")


def _bend(contour: Contour, lam: complex, side: int, r_def: float | None):
    k, t = _locate(contour, lam)
    seg = contour.segments[k]
    if seg.kind != "line":
        raise ValueError("boundary values are implemented on straight pieces")
    L = seg.length
    r = 1e-3 * L if r_def is None else r_def
    if t * L <= r or (1 - t) * L <= r:
        raise ValueError("lam within r_def of a segment end")
    u = (seg.b - seg.a) / L
    p0, p1 = lam - r * u, lam + r * u
    ang = np.angle(u)
    # left (+) boundary value: the bent path passes on the right of lam
    if side > 0:
        bump = arc(lam, r, ang - np.pi, ang)
    else:
        bump = arc(lam, r, ang + np.pi, ang)
    segs = list(contour.segments[:k]) + [line(seg.a, p0), bump, line(p1, seg.b)] + list(contour.segments[k + 1:])
    return segs


def _on_line(seg: Segment, lam: np.ndarray) -> np.ndarray:
    d = seg.b - seg.a
    t = ((lam - seg.a) / d).real
    return (t >= 0) & (t <= 1) & (np.abs(seg.a + d * t - lam) <= 1e-12 * (1 + np.abs(lam)))


def principal_value(f, path: Contour, lam, h_max=0.05, npp: int = 16, fprime=None,
                    rule: QuadratureRule | None = None, f_nodes=None, f_lam=None, chunk: int = 64):
    """PV int_path f(s)/(s - lam) ds by singularity subtraction.

    Computes int (f(s) - f(lam))/(s - lam) ds + f(lam) * sum_k log((b_k - lam)/(a_k - lam))
    over the straight pieces [a_k, b_k]; on the piece carrying lam the log is the
    real value log|b - lam|/|a - lam|. ``lam`` may be an array of on-path points.
    ``fprime`` supplies the integrand at quadrature nodes that coincide with lam.
    Node values may be passed in through ``rule``/``f_nodes``/``f_lam``.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    for seg in path.segments:
        if seg.kind != "line":
            raise ValueError("principal_value supports polyline paths")
    if rule is None:
        rule = path.rule(h_max, npp)
    fs = _vals(f, rule.nodes) if f_nodes is None else np.asarray(f_nodes)
    fl = _vals(f, lam_arr) if f_lam is None else np.atleast_1d(np.asarray(f_lam))
    verts = np.array(path.vertices)
    scale = max(1.0, float(np.max(np.abs(verts))))
    if np.any(np.min(np.abs(verts[None, :] - lam_arr[:, None]), axis=1) <= 1e-12 * scale):
        raise ValueError("principal_value: lam at a piece junction")

    logs = np.zeros(lam_arr.shape, dtype=complex)
    hit = np.zeros(lam_arr.shape, dtype=bool)
    for seg in path.segments:
        on = _on_line(seg, lam_arr) & ~hit
        hit |= on
        with np.errstate(divide="ignore", invalid="ignore"):
            off_val = np.log((seg.b - lam_arr) / (seg.a - lam_arr))
            on_val = np.log(np.abs(seg.b - lam_arr) / np.abs(seg.a - lam_arr)) + 0j
        logs += np.where(on, on_val, off_val)
    if not np.all(hit):
        raise ValueError("principal_value: lam is not on the path")

    out = np.empty(lam_arr.shape, dtype=complex)
    for i0 in range(0, lam_arr.size, chunk):
        lc = lam_arr[i0:i0 + chunk]
        d = rule.nodes[None, :] - lc[:, None]
        near = np.abs(d) < 1e-9 * scale
        integrand = (fs[None, :] - fl[i0:i0 + chunk, None]) / np.where(near, 1.0, d)
        if np.any(near):
            if fprime is None:
                raise ValueError("principal_value: node coincides with lam; pass fprime")
            rows = np.nonzero(near.any(axis=1))[0]
            fp = _vals(fprime, lc[rows])
            for r, v in zip(rows, np.atleast_1d(fp)):
                integrand[r, near[r]] = v
        out[i0:i0 + chunk] = integrand @ rule.weights
    out += fl * logs
    return complex(out[0]) if np.ndim(lam) == 0 else out
