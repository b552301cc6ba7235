"""Floating-point companion to the exact engine.

Fixed-step RK4 and adaptive Runge-Kutta-Fehlberg 4(5) integrators for the
Chazy systems and the conformal-scale equations, residual scans for the
identities exact arithmetic cannot reach (Halphen's fractional-power
solution, Noth's equation evaluated term by term in floats), and a float
cross-check of exact bracket tables.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .symcore import Context, RationalExpr, SplitMix64, compile_float, dynamic, evaluate_float

BLOWUP = 1e12
RTOL, ATOL = 1e-10, 1e-12
RESIDUAL_TOL = 1e-6


class BlowUp(ArithmeticError):
    def __init__(self, x, state):
        super().__init__(f"state magnitude exceeds {BLOWUP:g} at x = {x!r}")
        self.x, self.state = x, state


class StepUnderflow(ArithmeticError):
    pass


class DomainExhausted(ValueError):
    pass


# ---------------------------------------------------------------- systems
@dataclass
class OdeSystem:
    names: tuple
    rhs: Callable  # rhs(x, y) -> list
    params: dict = field(default_factory=dict)
    exprs: tuple = ()

    @property
    def dimension(self) -> int:
        return len(self.names)

    @classmethod
    def from_exprs(cls, ctx: Context, names: Sequence[str], exprs: Sequence[RationalExpr], params=None):
        """State ``names`` with derivatives ``exprs``; other symbols bound by ``params``."""
        params = dict(params or {})
        argnames = [ctx.independent] + list(names) + list(params)
        fns = [compile_float(e, argnames) for e in exprs]
        pvals = [float(v) for v in params.values()]

        def rhs(x, y):
            a = [x, *y, *pvals]
            return [f(a) for f in fns]

        return cls(tuple(names), rhs, params, tuple(exprs))


def chazy_context(k: Fraction, with_atoms: bool = True) -> tuple[Context, list]:
    """The (P, Q, R) system for parameter k, with the scale atoms for k = 3/2 or 2/3."""
    k = Fraction(k)
    coef = k * k / (36 - k * k)
    atoms = [dynamic("P", "(P^2 - Q)/6"), dynamic("Q", "2/3*(P*Q - R)"), dynamic("R", f"P*R + {coef}*Q^2")]
    names = ["P", "Q", "R"]
    if with_atoms and k == Fraction(3, 2):
        atoms += [dynamic("rho", "xi*rho"), dynamic("xi", "Q/45 - xi^2"), dynamic("chi", "1/rho^2"), dynamic("E", "P*E/3")]
        names += ["rho", "xi", "chi", "E"]
    elif with_atoms and k == Fraction(2, 3):
        atoms += [dynamic("eta", "xi*eta"), dynamic("xi", "Q/40 - xi^2"), dynamic("chi", "1/eta^2"), dynamic("G", "P*G/2")]
        names += ["eta", "xi", "chi", "G"]
    ctx = Context(["x"], atoms, name=f"chazy_k{k}")
    return ctx, names


def chazy_system(k, with_atoms: bool = False) -> OdeSystem:
    ctx, names = chazy_context(Fraction(k), with_atoms)
    return OdeSystem.from_exprs(ctx, names, [ctx.sym(n).diff("x") for n in names])


# ------------------------------------------------------------ integration
@dataclass
class IntegratorConfig:
    method: str = "rkf45"
    x0: float = 0.0
    x1: float = 1.0
    step: float | None = None
    rtol: float = RTOL
    atol: float = ATOL

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.x1 == self.x0:
            raise ValueError("integration range is empty")
        if self.method == "rk4" and not (self.step and self.step > 0):
            raise ValueError("rk4 needs a positive step")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class Trajectory:
    names: tuple
    samples: list  # (x, [state])
    config: IntegratorConfig
    accepted: int = 0
    rejected: int = 0

    @property
    def final(self):
        return self.samples[-1]

    def column(self, name: str) -> list:
        i = self.names.index(name)
        return [s[i] for _, s in self.samples]

    def xs(self) -> list:
        return [x for x, _ in self.samples]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", *self.names])
            for x, s in self.samples:
                w.writerow([format(x, ".17g"), *(format(v, ".17g") for v in s)])


def _check(x, y):
    for v in y:
        if not math.isfinite(v) or abs(v) > BLOWUP:
            raise BlowUp(x, list(y))


def _rk4_step(f, x, y, h):
    k1 = f(x, y)
    k2 = f(x + h / 2, [a + h / 2 * b for a, b in zip(y, k1)])
    k3 = f(x + h / 2, [a + h / 2 * b for a, b in zip(y, k2)])
    k4 = f(x + h, [a + h * b for a, b in zip(y, k3)])
    return [a + h / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]


# Fehlberg 4(5) tableau
_A = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_B = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_C4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_C5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


def _rkf45_step(f, x, y, h):
    ks = []
    for i in range(6):
        yi = [yj + h * sum(b * k[j] for b, k in zip(_B[i], ks)) for j, yj in enumerate(y)]
        ks.append(f(x + _A[i] * h, yi))
    y4 = [yj + h * sum(c * k[j] for c, k in zip(_C4, ks)) for j, yj in enumerate(y)]
    y5 = [yj + h * sum(c * k[j] for c, k in zip(_C5, ks)) for j, yj in enumerate(y)]
    return y4, y5


def integrate(sys: OdeSystem, init: Sequence[float], cfg: IntegratorConfig) -> Trajectory:
    y = [float(v) for v in init]
    if len(y) != sys.dimension:
        raise ValueError(f"initial state has {len(y)} entries, system has {sys.dimension}")
    _check(cfg.x0, y)
    x, x1 = float(cfg.x0), float(cfg.x1)
    sgn = 1.0 if x1 > x else -1.0
    span = abs(x1 - x)
    traj = Trajectory(sys.names, [(x, list(y))], cfg)
    if cfg.method == "rk4":
        n = max(1, round(span / cfg.step))
        h = sgn * span / n
        for i in range(n):
            y = _rk4_step(sys.rhs, x, y, h)
            x = cfg.x0 + (i + 1) * h
            _check(x, y)
            traj.samples.append((x, list(y)))
            traj.accepted += 1
        return traj
    h = sgn * (cfg.step or span / 100)
    hmin = 1e-14 * max(1.0, span)
    while sgn * (x1 - x) > 0:
        if sgn * (x + h - x1) > 0:
            h = x1 - x
        y4, y5 = _rkf45_step(sys.rhs, x, y, h)
        err = max(abs(a - b) / (cfg.atol + cfg.rtol * max(abs(a), abs(c))) for a, b, c in zip(y5, y4, y))
        if err <= 1.0:
            x = x + h
            y = y5
            _check(x, y)
            traj.samples.append((x, list(y)))
            traj.accepted += 1
        else:
            traj.rejected += 1
        fac = 0.9 * err ** (-0.2) if err > 0 else 5.0
        h = h * min(5.0, max(0.1, fac))
        if abs(h) < hmin and sgn * (x1 - x) > hmin:
            raise StepUnderflow(f"step size fell below {hmin:g} at x = {x!r}")
    return traj


# ----------------------------------------------------------------- scans
def residual_scan(fn, samples: int, domain: tuple, singular: Callable | None = None, seed: int = 0,
                  argname: str | None = None, max_tries: int | None = None):
    """Max |fn(t)| over ``samples`` points of ``domain`` avoiding ``singular``.

    ``fn`` is a float callable or a one-variable :class:`RationalExpr`.
    Points are equally spaced (interior), with deterministic jitter on rejection.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if isinstance(fn, RationalExpr):
        name = argname or fn.ctx.independent
        g = compile_float(fn, [name])
        fn = lambda t, g=g: g([t])  # noqa: E731
    lo, hi = map(float, domain)
    rng = SplitMix64(seed)
    worst, arg = 0.0, None
    budget = max_tries or 50 * samples
    tries = 0
    for i in range(samples):
        t = lo + (hi - lo) * (i + 0.5) / samples
        while True:
            tries += 1
            if tries > budget:
                raise DomainExhausted(f"no non-singular samples left in [{lo}, {hi}]")
            if singular is None or not singular(t):
                try:
                    v = abs(float(fn(t)))
                    break
                except ZeroDivisionError:
                    pass
            t = rng.uniform(lo, hi)
        if v > worst or arg is None:
            worst, arg = v, t
    return worst, arg


def _spin32_w_chart(alpha, beta, g3):
    ctx = Context(["w"], name="spin32_w")
    w = ctx.sym("w")
    u = 4 * w**3 - g3
    Y = alpha * w + beta * (w**3 + Fraction(g3) / 2)
    return ctx, w, u, Y


def noth_terms(alpha=1, beta=0, g3=4):
    """The five Noth monomials as exact w-chart expressions, H'' = Y^4/u^3."""
    ctx, w, u, Y = _spin32_w_chart(Fraction(alpha), Fraction(beta), Fraction(g3))
    s = Y**2 / (2 * u)
    H = [Y**4 / u**3]
    for _ in range(4):
        H.append(s * H[-1].diff("w"))
    H2, H3, H4, H5, H6 = H
    return [10 * H2**3 * H6, -70 * H2**2 * H3 * H5, -49 * H2**2 * H4**2, 280 * H2 * H3**2 * H4, -175 * H3**4], (u, Y)


def noth_residual(alpha=1, beta=0, g3=4, samples=100, domain=None, tol=RESIDUAL_TOL, seed=0):
    """Relative Noth residual |sum t_i| / sum |t_i| along the spin-3/2 chart.

    The sixth derivative comes from exact chain-rule differentiation; each
    monomial is then evaluated in floating point and the sum cancels only
    numerically.
    """
    terms, (u, Y) = noth_terms(alpha, beta, g3)
    fs = [compile_float(t, ["w"]) for t in terms]
    fu, fY = compile_float(u, ["w"]), compile_float(Y, ["w"])
    if domain is None:
        root = (float(g3) / 4) ** (1 / 3) if g3 > 0 else 0.0
        domain = (root + 0.25, root + 3.0)

    def rel(t):
        vals = [f([t]) for f in fs]
        scale = sum(abs(v) for v in vals)
        return math.fsum(vals) / scale if scale else 0.0

    def singular(t):
        return abs(fu([t])) < 1e-6 or abs(fY([t])) < 1e-6

    worst, arg = residual_scan(rel, samples, domain, singular, seed)
    return {"max": worst, "argmax": arg, "samples": samples, "domain": list(domain), "tol": tol, "passed": worst < tol}


def halphen_residual(alpha=1, beta=0, g3=4, samples=100, domain=None, tol=1e-8, dps=20):
    """Spin-3/2 Lame residual of Phi(z) = Y(w)/wp'(z/2)^(3/2), w = wp(z/2).

    Works at points z = 2s with s real: w = wp(s) is found by inverting the
    Weierstrass integral (as a Carlson symmetric integral), wp(z) by inverting it again at 2s, and Phi_zz by
    numerical differentiation in mpmath.
    """
    import mpmath as mp

    mp.mp.dps = dps
    g3m = mp.mpf(g3)
    e = mp.cbrt(g3m / 4)  # real root of 4t^3 - g3

    roots = [e * mp.root(1, 3, j) for j in range(3)]

    def sigma(w):  # s in (0, omega] with wp(s) = w, for w >= e; Carlson form of the integral
        return mp.re(mp.elliprf(*(w - r for r in roots)))

    omega = sigma(e)  # real half-period
    eps = mp.mpf(10) ** (5 - dps)

    def wp(s):
        s = mp.fmod(abs(s), 2 * omega)
        if s > omega:
            s = 2 * omega - s
        # safeguarded Newton on sigma(w) = s; sigma decreases from omega at e
        lo, hi = e, 1 / s**2 + g3m * s**4 + 1
        w = max(1 / s**2 + g3m * s**4 / 28, (lo + hi) / 2 if 1 / s**2 <= e else e)
        for _ in range(200):
            f = sigma(w) - s
            if f > 0:
                lo = w
            else:
                hi = w
            nxt = w + f * mp.sqrt(4 * w**3 - g3m)
            if not lo < nxt < hi:
                nxt = (lo + hi) / 2
            if abs(nxt - w) <= eps * abs(w):
                return nxt
            w = nxt
        raise ArithmeticError(f"wp inversion did not converge at s = {s}")

    def Phi(z):
        w = wp(z / 2)
        Y = alpha * w + beta * (w**3 + g3m / 2)
        return Y / mp.power(4 * w**3 - g3m, mp.mpf(3) / 4)

    if domain is None:
        # z/2 stays inside (0, omega), where Phi is real and finite
        domain = (float(omega / 5), float(omega * 9 / 5))

    def resid(z):
        z = mp.mpf(z)
        f = Phi(z)
        f2 = mp.diff(Phi, z, 2)
        w2 = wp(z)
        r = f2 - mp.mpf(15) / 4 * w2 * f
        scale = abs(f2) + abs(mp.mpf(15) / 4 * w2 * f)
        return float(abs(r) / scale)

    worst, arg = residual_scan(resid, samples, domain)
    return {"max": worst, "argmax": arg, "samples": samples, "domain": list(domain), "tol": tol, "passed": worst < tol}


# ------------------------------------------------------- spin-3/2 orbit
def spin32_closed_form(alpha=1, beta=0, g3=4):
    """(x(w), P(w), Q(w), R(w)) along the spin-3/2 chart as float callables.

    x is fixed by dx/dw = 2u/Y^2 only up to a constant; callers difference it.
    """
    ctx, w, u, Y = _spin32_w_chart(Fraction(alpha), Fraction(beta), Fraction(g3))
    s = Y**2 / (2 * u)
    P = 3 * (Y.diff("w") / Y - 3 * u.diff("w") / (4 * u)) * Y**2 / u
    wp2 = (w**4 + 2 * Fraction(g3) * w) / u
    Q = -135 * wp2 * Y**4 / u**3
    R = Fraction(405, 4) * wp2.diff("w") * Y**6 / u**4
    dxdw = 1 / s
    return {n: compile_float(e, ["w"]) for n, e in (("P", P), ("Q", Q), ("R", R), ("dxdw", dxdw))}


def spin32_x_of_w(w0: float, w1: float, alpha=1, beta=0, g3=4) -> float:
    """x(w1) - x(w0) by adaptive quadrature of dx/dw."""
    import mpmath as mp

    f = spin32_closed_form(alpha, beta, g3)["dxdw"]
    return float(mp.quad(lambda t: f([float(t)]), [w0, w1]))


def rk4_order_factor(h: float = 0.25, w0: float = 2.0, w1: float = 2.2):
    """err(h)/err(h/2) for RK4 on the k=3/2 system against a tight RKF45 reference."""
    cf = spin32_closed_form()
    init = [cf[n]([w0]) for n in "PQR"]
    L = spin32_x_of_w(w0, w1)
    sysm = chazy_system(Fraction(3, 2))
    ref = integrate(sysm, init, IntegratorConfig("rkf45", 0.0, L, rtol=1e-13, atol=1e-13)).final[1]
    n = max(1, round(L / h))
    hh = L / n
    e1 = integrate(sysm, init, IntegratorConfig("rk4", 0.0, L, step=hh)).final[1]
    e2 = integrate(sysm, init, IntegratorConfig("rk4", 0.0, L, step=hh / 2)).final[1]
    err1 = max(abs(a - b) for a, b in zip(e1, ref))
    err2 = max(abs(a - b) for a, b in zip(e2, ref))
    return {"h": hh, "err_h": err1, "err_h2": err2, "factor": err1 / err2, "passed": 12 <= err1 / err2 <= 20}


def spin32_path_check(w0=2.0, w1=2.2, rtol=1e-8):
    """Integrate (P, Q, R) in x from the closed form at w0; compare at w1."""
    cf = spin32_closed_form()
    init = [cf[n]([w0]) for n in "PQR"]
    L = spin32_x_of_w(w0, w1)
    traj = integrate(chazy_system(Fraction(3, 2)), init, IntegratorConfig("rkf45", 0.0, L))
    want = [cf[n]([w1]) for n in "PQR"]
    got = traj.final[1]
    err = max(abs(a - b) / max(1.0, abs(b)) for a, b in zip(got, want))
    return {"max_rel_err": err, "passed": err < rtol, "x_range": L}


# ------------------------------------------------------------ atom paths
def atom_path(k, init: dict, cfg: IntegratorConfig) -> Trajectory:
    """Integrate (P, Q, R) together with the scale atoms for k = 3/2 or 2/3.

    ``init`` maps P, Q, R, rho|eta, xi, chi, E|G to initial values.
    """
    sysm = chazy_system(Fraction(k), with_atoms=True)
    missing = [n for n in sysm.names if n not in init]
    if missing:
        raise ValueError(f"missing initial values for {missing}")
    return integrate(sysm, [init[n] for n in sysm.names], cfg)


# ----------------------------------------------------- float bracket check
def _float_point(ctx: Context, rng: SplitMix64, names) -> dict | None:
    pt = {n: rng.uniform(0.5, 2.0) * (1 if rng.next_u64() & 1 else -1) for n in names}
    for name, n, repl in ctx.relations():
        v = evaluate_float(repl, pt, check=False)
        if v < 0 and n % 2 == 0:
            return None
        pt[name] = math.copysign(abs(v) ** (1.0 / n), v)
    return pt


def float_bracket_check(basis, sc, pairs=None, points: int = 3, tol: float = 1e-9, seed: int = 0) -> dict:
    """Max relative float residual of [X_i, X_j] - sum c_k X_k at random real points.

    Independent of the exact verification: brackets are recomputed, and
    everything is evaluated in double precision.
    """
    from .exterior import lie_bracket

    ctx = basis.ctx
    fields = basis.fields
    n = len(fields)
    pairs = pairs if pairs is not None else [(i, j) for i in range(n) for j in range(i + 1, n)]
    free = [s for s in ctx.symbols if not ctx.is_algebraic(s)]
    rng = SplitMix64(seed)
    pts = []
    while len(pts) < points:
        p = _float_point(ctx, rng, free)
        if p is not None:
            pts.append(p)
    worst = 0.0
    for i, j in pairs:
        br = lie_bracket(fields[i], fields[j])
        coeffs = sc.coeff(i, j)
        for p in pts:
            try:
                cvals = [evaluate_float(c, p, check=False) for c in coeffs]
                for comp in range(ctx.dim):
                    lhs = evaluate_float(br.components[comp], p, check=False)
                    rhs = [cv * evaluate_float(f.components[comp], p, check=False) for cv, f in zip(cvals, fields) if cv]
                    scale = abs(lhs) + sum(abs(t) for t in rhs) or 1.0
                    worst = max(worst, abs(lhs - math.fsum(rhs)) / scale)
            except ZeroDivisionError:
                continue
    return {"max": worst, "passed": worst < tol, "pairs": len(pairs), "points": points}
