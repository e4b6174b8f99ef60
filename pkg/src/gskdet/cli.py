"""Command line drivers: config parsing, sweeps, self-tests and CSV output.

Usage: gskdet selftest | det | asym | compare | rhp --config FILE [--out FILE]
"""

from __future__ import annotations

import argparse
import cmath
import math
import os
import shlex
import sys
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import asym
from . import contour as ct
from . import rhp
from . import specialfn as sf
from .expr import ExprEvalError, ExprSyntaxError, parse
from .kernel import ProblemSpec, SpecError, fredholm_det, make_spec

CSV_VERSION = "1"
CSV_MAGIC = "# gskdet-sweep"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class RunConfig:
    nu: str
    u: str
    g: str
    q: float
    xs: tuple
    n_nodes: int | None = None
    width: float | None = None
    height: float = 0.25
    delta: float | None = None
    delta_saddle: float | None = None
    clearance: float | None = None
    n_circle: int = 192
    out: str | None = None
    source: str = "<config>"

    def spec(self, x: float | None = None) -> ProblemSpec:
        kw = {"n_nodes": self.n_nodes} if self.n_nodes else {}
        return make_spec(self.nu, self.u, self.g, q=self.q, x=self.xs[0] if x is None else x,
                         width=self.width, height=self.height, **kw)


_EXPR_KEYS = ("nu", "u", "g")
_REQUIRED = ("nu", "u", "q", "x")
_NUMERIC = {
    "q": float, "n_nodes": int, "width": float, "height": float, "delta": float,
    "delta_saddle": float, "clearance": float, "n_circle": int,
}
_KNOWN = set(_EXPR_KEYS) | set(_NUMERIC) | {"x", "out"}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse ``key = value`` lines; expressions must be quoted, '#' starts a comment.

    Every problem is reported as ``source:line: message``; the ProblemSpec is built
    (and so validated) before anything is computed.
    """
    values: dict = {}
    where: dict = {}
    lines = text.splitlines()
    for ln, raw in enumerate(lines, 1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{ln}: expected 'key = value'")
        key, val = (p.strip() for p in body.split("=", 1))
        if key not in _KNOWN:
            raise ConfigError(f"{source}:{ln}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{ln}: duplicate key '{key}' (first set on line {where[key]})")
        try:
            if key in _EXPR_KEYS or key == "out":
                toks = shlex.split(val)
                if len(toks) != 1 or val[:1] not in "\"'":
                    raise ConfigError(f"{source}:{ln}: value of '{key}' must be a single quoted string")
                values[key] = toks[0]
            elif key == "x":
                xs = tuple(float(t) for t in val.replace(",", " ").split())
                if not xs:
                    raise ValueError
                values[key] = xs
            else:
                values[key] = _NUMERIC[key](val)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(f"{source}:{ln}: cannot read a value for '{key}' from {val!r}") from None
        where[key] = ln
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"{source}:{len(lines) + 1}: missing required key '{key}'")
    cfg = RunConfig(nu=values["nu"], u=values["u"], g=values.get("g", "0"), q=values["q"],
                    xs=values["x"], n_nodes=values.get("n_nodes"), width=values.get("width"),
                    height=values.get("height", 0.25), delta=values.get("delta"),
                    delta_saddle=values.get("delta_saddle"), clearance=values.get("clearance"),
                    n_circle=values.get("n_circle", 192), out=values.get("out"), source=source)
    try:
        cfg.spec()
    except (ExprSyntaxError, ExprEvalError) as exc:
        key = next((k for k in _EXPR_KEYS if k in where and _bad_expr(values[k])), "nu")
        raise ConfigError(f"{source}:{where.get(key, 1)}: {exc}") from None
    except (SpecError, ValueError, ArithmeticError) as exc:
        raise ConfigError(f"{source}:{where.get('u', 1)}: {exc}") from None
    return cfg


def _strip_comment(line: str) -> str:
    """Drop a trailing '#' comment that is not inside quotes."""
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def _bad_expr(text: str) -> bool:
    try:
        parse(text)
    except ExprSyntaxError:
        return True
    return False


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), path)


# ---------------------------------------------------------------- sweep records and CSV

@dataclass(frozen=True)
class SweepRecord:
    x: float
    det_num_re: float
    det_num_im: float
    det_asym_re: float
    det_asym_im: float
    abs_Bx: float
    abs_b1_term: float
    abs_osc_plus: float
    abs_osc_minus: float
    rel_err: float
    dlogdet_fd_re: float
    dlogdet_fd_im: float
    dlogdet_formula_re: float
    dlogdet_formula_im: float
    runtime_ms: float


FIELDS = [f.name for f in fields(SweepRecord)]


def rel_err_of(det_num_re: float, det_num_im: float, det_asym_re: float, det_asym_im: float) -> float:
    """|det_num/det_asym - 1| from the stored real and imaginary parts."""
    return abs(complex(det_num_re, det_num_im) / complex(det_asym_re, det_asym_im) - 1)


def csv_header() -> str:
    cols = []
    for name in FIELDS:
        cols += [name, name + "_hex"]
    return ",".join(cols)


def record_line(rec: SweepRecord) -> str:
    cells = []
    for name in FIELDS:
        v = float(getattr(rec, name))
        cells += [repr(v), v.hex()]
    return ",".join(cells)


def write_csv(path: str, records, status: str = "complete", note: str = "") -> None:
    """Write the whole file through a temporary file and an atomic rename."""
    body = [f"{CSV_MAGIC} v{CSV_VERSION} status={status}"]
    if note:
        body.append("# note: " + note.replace("\n", " "))
    body.append(csv_header())
    body += [record_line(r) for r in records]
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".gskdet-", suffix=".csv")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write("\n".join(body) + "\n")
    os.replace(tmp, path)


def read_csv(path: str):
    """Return (records, status). Values come from the hex columns, so they are bit-exact."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(CSV_MAGIC):
        raise ValueError(f"{path}: not a gskdet sweep file")
    head = lines[0][len(CSV_MAGIC):].split()
    if not head or head[0] != f"v{CSV_VERSION}":
        raise ValueError(f"{path}: unsupported sweep file version {head[0] if head else '?'}")
    status = dict(h.split("=", 1) for h in head[1:] if "=" in h).get("status", "complete")
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if body[0] != csv_header():
        raise ValueError(f"{path}: column layout does not match version {CSV_VERSION}")
    recs = []
    for ln in body[1:]:
        cells = ln.split(",")
        vals = {name: float.fromhex(cells[2 * k + 1]) for k, name in enumerate(FIELDS)}
        recs.append(SweepRecord(**vals))
    return recs, status


class CsvWriter:
    """Single writer: records from worker threads are collected under a lock and
    the file is rewritten atomically after each arrival."""

    def __init__(self, path: str | None, existing=()):
        self.path = path
        self.records = list(existing)
        self.lock = threading.Lock()

    def add(self, rec: SweepRecord, status: str = "complete") -> None:
        with self.lock:
            self.records.append(rec)
            self.records.sort(key=lambda r: r.x)
            if self.path:
                write_csv(self.path, self.records, status)

    def flag_partial(self, note: str) -> None:
        with self.lock:
            if self.path:
                write_csv(self.path, self.records, "partial", note)


# ---------------------------------------------------------------- computations

def _unwrap(ref: complex, v: complex) -> complex:
    return v - 2j * math.pi * round((v - ref).imag / (2 * math.pi))


def dlogdet_fd(spec: ProblemSpec, h: float = 0.05) -> complex:
    """Fourth-order central difference of log det in x, with the log branch unwrapped."""
    x = spec.x
    logs = {k: cmath.log(fredholm_det(spec.with_x(x + k * h))) for k in (-2, -1, 1, 2)}
    ref = logs[-1]
    lg = {k: _unwrap(ref, v) for k, v in logs.items()}
    return (8 * (lg[1] - lg[-1]) - (lg[2] - lg[-2])) / (12 * h)


def sweep_record(spec: ProblemSpec, with_fd: bool = True) -> SweepRecord:
    t0 = time.perf_counter()
    dn = fredholm_det(spec)
    parts = asym.theorem1_parts(spec)
    da = parts.value
    coeffs = asym.coeffs_dlogdet(spec)
    fd = dlogdet_fd(spec) if with_fd and not spec.nu_is_zero else 0j
    form = coeffs.dlogdet(spec.x)
    ms = (time.perf_counter() - t0) * 1e3
    vals = dict(x=spec.x, det_num_re=dn.real, det_num_im=dn.imag, det_asym_re=da.real, det_asym_im=da.imag,
                abs_Bx=abs(parts.bx), abs_b1_term=abs(asym.b1(spec)) * spec.x ** -1.5 if not spec.nu_is_zero else 0.0, abs_osc_plus=abs(parts.osc_plus),
                abs_osc_minus=abs(parts.osc_minus), dlogdet_fd_re=fd.real, dlogdet_fd_im=fd.imag,
                dlogdet_formula_re=form.real, dlogdet_formula_im=form.imag, runtime_ms=ms)
    vals["rel_err"] = rel_err_of(vals["det_num_re"], vals["det_num_im"], vals["det_asym_re"], vals["det_asym_im"])
    return SweepRecord(**vals)


def n_workers() -> int:
    env = os.environ.get("GSKDET_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return min(4, cap)


def fit_exponent(xs, ys) -> float:
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        return float("nan")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------- self test

def selftest_rows():
    """(name, residual, threshold) for the special-function, quadrature and parametrix suites."""
    rows = []
    for z in (0.5, 1.0, 2.0, 5.0):
        got = sf.psi_cut_jump(z)
        rows.append((f"CHF jump Psi(1,3/2) at z={z:g}", abs(got - 2j * math.sqrt(math.pi / z) * math.exp(-z)), 1e-9))
    samples = [(0.3 + 0.1j, 1.5 - 0.7j), (0.25, -2.0 - 1.0j), (0.1 - 0.2j, 0.8 + 1.3j), (1.3, 3 - 2j)]
    worst = max(sf.psi_monodromy_check(sf.CHFParams(a, 1, z)) for a, z in samples)
    rows.append(("CHF monodromy (c=1)", worst, 1e-9))
    t, w = np.polynomial.legendre.leggauss(40)
    worst = 0.0
    for z in (-0.4 + 0.3j, 0.2 - 0.5j, 0.7 + 0.1j, 0.9 - 0.2j):
        s = z * (t + 1) / 2
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(s == 0, 1.0, np.pi * s / np.tan(np.pi * s))
        integral = complex(np.sum(w * f) * z / 2)
        rhs = sf.barnes_g(1 + z) * (2 * math.pi) ** (-z) * cmath.exp(integral)
        worst = max(worst, abs(sf.barnes_g(1 - z) - rhs) / abs(rhs))
    rows.append(("Barnes G reflection", worst, 1e-9))
    worst = max(abs(sf.gamma(z) * sf.gamma(1 - z) * cmath.sin(math.pi * z) / math.pi - 1)
                for z in (0.3 + 0.2j, -1.7 + 0.5j, 2.2 - 1.1j))
    rows.append(("Gamma reflection", worst, 1e-11))
    gl = ct.gauss_legendre(12, -1.0, 2.0)
    rows.append(("Gauss-Legendre on x^9", abs(gl.integrate(lambda s: s ** 9) - (2 ** 10 - 1) / 10), 1e-12))
    cr = ct.circle_rule(0.3j, 0.5, 64)
    rows.append(("Cauchy transform of exp on a circle", abs(ct.cauchy_transform(np.exp, cr, 0.1 + 0.3j)
                                                          - cmath.exp(0.1 + 0.3j)), 1e-12))
    for u in ("lambda-0.1*lambda^2", "lambda-lambda^2"):
        spec = make_spec("0.1+0.05*lambda", u, "0.2*sin(lambda)", q=1.0, x=100.0, check=False)
        res = rhp.jump_residuals(spec)
        jumps = max(v for k, v in res.items() if "jump" in k)
        dets = max(v for k, v in res.items() if "det" in k)
        rows.append((f"parametrix jumps ({spec.regime})", jumps, 1e-8))
        rows.append((f"parametrix det-1 ({spec.regime})", dets, 1e-9))
    return rows


def cmd_selftest(args=None, out=None) -> int:
    out = sys.stdout if out is None else out
    rows = selftest_rows()
    width = max(len(r[0]) for r in rows)
    failed = []
    print(f"{'identity':<{width}}  {'residual':>10}  {'limit':>7}  result", file=out)
    for name, res, tol in rows:
        ok = bool(res <= tol)
        if not ok:
            failed.append(name)
        print(f"{name:<{width}}  {res:10.2e}  {tol:7.0e}  {'ok' if ok else 'FAIL'}", file=out)
    if failed:
        print("selftest failed: " + "; ".join(failed), file=out)
        return 1
    print("selftest passed", file=out)
    return 0


# ---------------------------------------------------------------- commands

def _fmt(z: complex) -> str:
    return f"{z.real:+.15e} {z.imag:+.15e}i"


def cmd_det(cfg: RunConfig, out_path: str | None, out=None) -> int:
    out = sys.stdout if out is None else out
    spec = cfg.spec()
    rec = sweep_record(spec)
    print(f"x = {spec.x:g}  det = {_fmt(complex(rec.det_num_re, rec.det_num_im))}", file=out)
    print(f"asymptotic = {_fmt(complex(rec.det_asym_re, rec.det_asym_im))}  rel_err = {rec.rel_err:.3e}", file=out)
    path = out_path or cfg.out
    if path:
        existing = []
        if os.path.exists(path):
            existing, _ = read_csv(path)
        CsvWriter(path, existing).add(rec)
        print(f"row written to {path}", file=out)
    return 0


def cmd_asym(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    spec = cfg.spec()
    c = asym.coeffs_dlogdet(spec)
    print(f"regime = {spec.regime}  lambda0 = {spec.lambda0:.15g}  x = {spec.x:g}", file=out)
    for f in fields(c):
        print(f"{f.name:8s} = {_fmt(complex(getattr(c, f.name)))}", file=out)
    print(f"theorem1_det = {_fmt(asym.theorem1_det(spec))}", file=out)
    print(f"d/dx log det (formula) = {_fmt(c.dlogdet(spec.x))}", file=out)
    return 0


def cmd_compare(cfg: RunConfig, out_path: str | None, out=None) -> int:
    out = sys.stdout if out is None else out
    xs = list(cfg.xs)
    if len(xs) < 3 or any(b <= a for a, b in zip(xs, xs[1:])):
        print(f"{cfg.source}: compare needs at least 3 strictly increasing x values", file=out)
        return 2
    base = cfg.spec()
    writer = CsvWriter(out_path or cfg.out)
    try:
        with ThreadPoolExecutor(max_workers=n_workers()) as pool:
            for rec in pool.map(lambda x: sweep_record(base.with_x(x)), xs):
                writer.add(rec)
                print(f"x = {rec.x:8g}  rel_err = {rec.rel_err:.3e}  "
                      f"|fd - formula| = {abs(complex(rec.dlogdet_fd_re - rec.dlogdet_formula_re, rec.dlogdet_fd_im - rec.dlogdet_formula_im)):.3e}",
                      file=out)
    except Exception as exc:  # any sub-step failure leaves a flagged partial file
        writer.flag_partial(f"{type(exc).__name__}: {exc}")
        print(f"compare aborted: {type(exc).__name__}: {exc} (partial CSV flagged)", file=out)
        return 1
    recs = writer.records
    errs = [r.rel_err for r in recs]
    if all(e == 0 for e in errs):
        print("summary: rel_err identically 0", file=out)
    else:
        print(f"summary: fitted rel_err exponent = {fit_exponent([r.x for r in recs], errs):.3f}", file=out)
    return 0


def cmd_rhp(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    spec = cfg.spec()
    try:
        disks = rhp.make_disks(spec, cfg.delta, cfg.delta_saddle, cfg.n_circle)
    except rhp.GeometryError as exc:
        print(f"geometry error: {exc}", file=out)
        return 2
    print(f"regime = {spec.regime}  x = {spec.x:g}  radii = {disks.delta_edge:g} (edges), "
          f"{disks.delta_saddle:g} (saddle)", file=out)
    for k, v in rhp.jump_residuals(spec, disks).items():
        print(f"  {k:<34s} {v:.2e}", file=out)
    print(f"  exterior |Delta| audit             {rhp.exterior_neglect(spec, disks):.2e}", file=out)
    if spec.nu_is_zero:
        print("  nu = 0: Pi is triangular and d/dx log det = 0", file=out)
        return 0
    sol = rhp.Pi_numeric(spec, disks)
    lam = spec.lambda0 + 3j
    Pn = sol(lam)
    print(f"  operator norm estimate             {sol.op_norm:.3f}", file=out)
    print(f"  det Pi - 1 at lambda0+3i           {abs(np.linalg.det(Pn) - 1):.2e}", file=out)
    for order in range(4):
        d = float(np.max(np.abs(Pn - rhp.Pi_heuristic(spec, lam, order))))
        print(f"  |Pi_num - Pi_heur(order {order})|      {d:.2e}", file=out)
    dl = rhp.dlogdet_rhp(spec, sol, cfg.clearance)
    form = asym.coeffs_dlogdet(spec).dlogdet(spec.x)
    print(f"  d/dx log det (loop)   {_fmt(dl)}", file=out)
    print(f"  d/dx log det (coeffs) {_fmt(form)}", file=out)
    return 0


# ---------------------------------------------------------------- entry point

def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="gskdet", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["selftest", "det", "asym", "compare", "rhp"])
    p.add_argument("--config", help="run configuration (key = value lines)")
    p.add_argument("--out", help="CSV output path (overrides 'out' in the config)")
    args = p.parse_args(argv)
    if args.command == "selftest":
        return cmd_selftest(args)
    if not args.config:
        p.error(f"{args.command} needs --config")
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "det":
        return cmd_det(cfg, args.out)
    if args.command == "asym":
        return cmd_asym(cfg)
    if args.command == "compare":
        return cmd_compare(cfg, args.out)
    return cmd_rhp(cfg)


if __name__ == "__main__":
    sys.exit(main())
