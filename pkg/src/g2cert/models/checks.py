"""Exact consistency checks: ODE reductions, Lame solutions and the
AuxFunctions derivative identities."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..symcore import Context, RationalExpr, constant, dynamic, jet
from .base import DistributionModel


@dataclass
class CheckItem:
    key: str
    description: str
    passed: bool
    factor: str | None = None
    detail: str = ""


@dataclass
class Report:
    title: str
    items: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, *a, **kw):
        self.items.append(CheckItem(*a, **kw))

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def __getitem__(self, key):
        for i in self.items:
            if i.key == key:
                return i
        raise KeyError(key)


def _D(e: RationalExpr, n: int = 1) -> RationalExpr:
    for _ in range(n):
        e = e.diff(e.ctx.independent)
    return e


def _ratio_check(report, key, desc, lhs, rhs, forbidden):
    """Pass when rhs != 0 and lhs/rhs is free of the atoms in ``forbidden``."""
    if not rhs:
        report.add(key, desc, not lhs, factor="0/0" if not lhs else None, detail="reference expression vanishes")
        return
    f = lhs / rhs
    bad = [s for s in f.free_symbols() if s in forbidden]
    report.add(key, desc, bool(f) and not bad, factor=str(f), detail=f"factor depends on {bad}" if bad else "")


def chazy_expression(P: RationalExpr, k: Fraction) -> RationalExpr:
    """y''' - 2 y y'' + 3 y'^2 - 4/(36 - k^2) (6 y' - y^2)^2 at y = P."""
    P1, P2, P3 = _D(P), _D(P, 2), _D(P, 3)
    return P3 - 2 * P * P2 + 3 * P1**2 - Fraction(4) / (36 - k * k) * (6 * P1 - P**2) ** 2


def noth(D: list) -> RationalExpr:
    H2, H3, H4, H5, H6 = D[:5]
    return 10 * H2**3 * H6 - 70 * H2**2 * H3 * H5 - 49 * H2**2 * H4**2 + 280 * H2 * H3**2 * H4 - 175 * H3**4


def dual_noth(D: list) -> RationalExpr:
    F2, F3, F4, F5, F6 = D[:5]
    return 10 * F2**3 * F6 - 80 * F2**2 * F3 * F5 - 51 * F2**2 * F4**2 + 336 * F2 * F3**2 * F4 - 224 * F3**4


def _derivs(e, n):
    out = [e]
    for _ in range(n):
        out.append(_D(out[-1]))
    return out


def reduction_checks() -> Report:
    from .chazy import k32_b

    rep = Report("ODE reductions")
    pj = [f"P{i}" for i in range(6)]

    # (i) Noth with H'' = E^2, E' = P E / 3
    ctx = Context(["x"], jet("P", 5) + [dynamic("E", "P0*E/3")], name="noth_red")
    P, E = ctx.syms("P0 E")
    _ratio_check(rep, "i", "Noth's equation reduces to the k=3/2 Chazy equation",
                 noth(_derivs(E**2, 4)), chazy_expression(P, Fraction(3, 2)), pj)

    # (ii) dual Noth with F'' = G, G' = P G / 2
    ctx = Context(["x"], jet("P", 5) + [dynamic("G", "P0*G/2")], name="dual_noth_red")
    P, G = ctx.syms("P0 G")
    _ratio_check(rep, "ii", "dual Noth equation reduces to the k=2/3 Chazy equation",
                 dual_noth(_derivs(G, 4)), chazy_expression(P, Fraction(2, 3)), pj)

    # (iii) b1 versus the Ricci-flat condition, k = 3/2
    ctx = Context(["x"], jet("P", 5) + jet("Om", 6) + [dynamic("E", "P0*E/3")], name="rf_k32")
    P, E, Om = ctx.syms("P0 E Om0")
    Q = P**2 - 6 * _D(P)
    O = _derivs(Om, 4)
    rfa = O[2] * O[0] - 2 * O[1] ** 2 - Fraction(2, 3) * P * O[0] * O[1] - P**2 * O[0] ** 2 / 18 - Q * O[0] ** 2 / 30
    b1, _ = k32_b(_derivs(E**2, 4), O)
    _ratio_check(rep, "iii", "b1 (k=3/2) is a multiple of the Ricci-flat equation",
                 b1, rfa, pj + [f"Om{i}" for i in range(7)])

    # (iv) k = 2/3 Ricci-flat equation under Omega = 1/eta
    ctx = Context(["x"], jet("P", 5) + jet("eta", 4), name="rf_k23")
    P, eta = ctx.syms("P0 eta0")
    Q = P**2 - 6 * _D(P)
    O = _derivs(1 / eta, 2)
    rf2b = 40 * O[2] * O[0] - 80 * O[1] ** 2 - 6 * O[0] ** 2 * _D(P) + O[0] ** 2 * P**2
    _ratio_check(rep, "iv", "Omega = 1/eta turns the k=2/3 Ricci-flat equation into eta'' = Q eta/40",
                 rf2b, _D(eta, 2) - Q * eta / 40, pj)

    # (v) k = 3/2 Ricci-flat equation under Omega = 1/(rho E)
    ctx = Context(["x"], jet("P", 5) + jet("rho", 4) + [dynamic("E", "P0*E/3")], name="rf_k32_rho")
    P, rho, E = ctx.syms("P0 rho0 E")
    Q = P**2 - 6 * _D(P)
    O = _derivs(1 / (rho * E), 2)
    rfa = O[2] * O[0] - 2 * O[1] ** 2 - Fraction(2, 3) * P * O[0] * O[1] - P**2 * O[0] ** 2 / 18 - Q * O[0] ** 2 / 30
    _ratio_check(rep, "v", "Omega = e^(-1/3 int P)/rho turns the k=3/2 Ricci-flat equation into rho'' = Q rho/45",
                 rfa, _D(rho, 2) - Q * rho / 45, pj + ["rho1", "rho2", "rho3", "rho4"])

    # (vi) Lame parametrisation of the Chazy system, k symbolic
    ctx = lame_pqr_context()
    P, Q, R, k = lame_pqr(ctx)
    checks = {
        "P' = (P^2 - Q)/6": _D(P) - (P**2 - Q) / 6,
        "Q' = 2/3 (P Q - R)": _D(Q) - Fraction(2, 3) * (P * Q - R),
        "R' = P R + k^2/(36 - k^2) Q^2": _D(R) - P * R - k**2 / (36 - k**2) * Q**2,
    }
    bad = [n for n, e in checks.items() if e]
    rep.add("vi", "Lame-parametrised (P, Q, R) solve the Chazy system for every k", not bad,
            detail=f"nonzero: {bad}" if bad else "; ".join(checks))
    return rep


def lame_pqr_context() -> Context:
    """wp, W = wp', Phi, Phi1 = Phi_z along x with d/dx = Phi^2 d/dz; W^2 = 4 wp^3 - g3."""
    return Context(
        ["x"],
        [
            constant("k"),
            constant("g3"),
            dynamic("wp", "Phi^2*W"),
            dynamic("W", "6*wp^2*Phi^2", relation=(2, "4*wp^3 - g3")),
            dynamic("Phi", "Phi^2*Phi1"),
            dynamic("Phi1", "-Phi^3*wp*(k + 6)*(k - 6)/(4*k^2)"),
        ],
        name="lame_pqr",
    )


def lame_pqr(ctx: Context):
    wp, W, Phi, Phi1, k = ctx.syms("wp W Phi Phi1 k")
    c = 9 * (k**2 - 36) / k**2
    return 6 * Phi1 * Phi, c * wp * Phi**4, -Fraction(3, 2) * c * W * Phi**6, k


def lame_solution_checks() -> Report:
    rep = Report("Lame solutions")
    # spin-4 / spin-1 in the r-form, T^3 = r^3 + 1
    ctx = Context(["r"], [constant("alpha"), constant("beta"), constant("gamma"), constant("delta"),
                          dynamic("T", "r^2/T^2", relation=(3, "r^3 + 1"))], name="lame_r")
    r, T, al, be, ga, de = ctx.syms("r T alpha beta gamma delta")

    def rform(Phi, n1):
        return (r**3 + 1) ** 2 * _D(Phi, 2) + 2 * r**2 * (r**3 + 1) * _D(Phi) + n1 * r * Phi

    Y = al * (2 * r**3 - 1) + be * r * (r**3 - 2)
    res = rform(Y / T**4, 20)
    rep.add("a", "spin-4 Phi solves the r-form Lame equation", not res, detail=str(res) if res else "")
    res = rform((de * r + ga) / T, 2)
    rep.add("b", "spin-1 Phi solves the r-form Lame equation", not res, detail=str(res) if res else "")

    # (c)-(e): rational in r with d/dx = 2 Y^2/(k (r^3+1)^2) d/dr
    ctx = Context(["r"], [constant("alpha"), constant("beta"), constant("gamma"), constant("delta"), constant("k")], name="lame_r_x")
    r, al, be, ga, de, k = ctx.syms("r alpha beta gamma delta k")
    T3 = r**3 + 1
    Y = al * (2 * r**3 - 1) + be * r * (r**3 - 2)
    s = 2 * Y**2 / (k * T3**2)

    def Dx(e, n=1):
        for _ in range(n):
            e = s * e.diff("r")
        return e

    P = -24 / k * Y / T3**3 * (al * r**2 * (r**3 - 5) - be * (5 * r**3 - 1))
    Q = 2880 / k**2 * r / T3**6 * Y**4
    R = 8640 / k**3 * (r**3 - 1) / T3**9 * Y**6
    eta = (ga + de * r) * T3 / Y
    res = Dx(eta, 2) - Q * eta / 40
    rep.add("c", "eta = (gamma + delta r)(r^3+1)/Y solves eta'' = Q eta/40", not res, detail=str(res) if res else "")
    eta0 = T3 / Y
    xi = -2 / k * (be * (r**6 + 8 * r**3 - 2) + 9 * al * r**2) * (be * (r**4 - 2 * r) + al * (2 * r**3 - 1)) / T3**3
    res = Dx(eta0) / eta0 - xi
    rep.add("d", "displayed xi equals eta'/eta (delta = 0)", not res, detail=str(res) if res else "")
    sysres = {
        "P'": Dx(P) - (P**2 - Q) / 6,
        "Q'": Dx(Q) - Fraction(2, 3) * (P * Q - R),
        "R'": Dx(R) - P * R - Q**2 / 80,
    }
    bad = [n for n, e in sysres.items() if e]
    rep.add("e", "displayed (P, Q, R) solve the k=2/3 system", not bad, detail=f"nonzero: {bad}" if bad else "")

    # (f) spin 3/2, w-chart: rational consequences of Phi = Y u^(-3/4), u = 4w^3 - g3
    ctx = Context(["w"], [constant("alpha"), constant("beta"), constant("g3")], name="lame_w")
    w, al, be, g3 = ctx.syms("w alpha beta g3")
    u = 4 * w**3 - g3
    Y = al * w + be * (w**3 + g3 / 2)
    sw = Y**2 / (2 * u)  # d/dx = sw d/dw

    def Dw(e):
        return sw * e.diff("w")

    # with z = 2 * (w-argument): Phi Phi_z = Phi^2 (Y'/Y - 3u'/(4u)) sqrt(u)/2 and Phi^2 sqrt(u) = Y^2/u
    P = 3 * (Y.diff("w") / Y - 3 * u.diff("w") / (4 * u)) * Y**2 / u
    wp2 = (w**4 + 2 * g3 * w) / u  # duplication formula, g2 = 0
    # wp_z(z) = d(wp2)/dw * sqrt(u)/2 and Phi^6 = Y^6 u^(-9/2)
    Q = -135 * wp2 * Y**4 / u**3
    R = Fraction(405, 2) * wp2.diff("w") / 2 * Y**6 / u**4
    sysres = {
        "P'": Dw(P) - (P**2 - Q) / 6,
        "Q'": Dw(Q) - Fraction(2, 3) * (P * Q - R),
        "R'": Dw(R) - P * R - Q**2 / 15,
    }
    bad = [n for n, e in sysres.items() if e]
    rep.add("f", "spin-3/2 (P, Q, R) in the w-chart solve the k=3/2 system", not bad, detail=f"nonzero: {bad}" if bad else "")
    return rep


def aux_identities(model: DistributionModel) -> Report:
    """Derivative identities of K, L, M for a Chazy model (constrained or free)."""
    aux = model.params["aux"]
    second = model.params.get("second")
    k23 = second == "F" or model.name.startswith("chazy_k23")
    ctx = model.ctx
    K, L, M, chi = aux.K, aux.L, aux.M, aux.chi
    O, O1, O2 = aux.Om[:3]
    D = aux.D
    dchi = _D(chi)
    rep = Report(f"auxiliary identities ({model.name})")
    if not k23:
        items = {
            "chi' = Omega^2 H''": dchi - O**2 * D[0],
            "K' = 3 (Omega'/Omega) K - L": _D(K) - (3 * O1 / O * K - L),
            "(L chi')' = chi' M + Omega''": _D(L * dchi) - (dchi * M + O2),
        }
        constrained = {
            "L' = -(Omega'/Omega) L + L^2/K - 2M": _D(L) - (-O1 / O * L + L**2 / K - 2 * M),
            "M' display": _D(M)
            - K
            * (
                Fraction(5, 2) * L**3 / K**3
                - 14 * O1 / O * L**2 / K**2
                + 10 * O1**2 / O**2 * L / K
                + 12 * O1**3 / O**3
                + 19 * O1 / O * M / K
                - 4 * L / K * M / K
                + D[3] / (10 * D[0])
            ),
            "Omega'' K = 2 L^2 chi' - 3 Omega M - 3 Omega' L": O2 * K - (2 * L**2 * dchi - 3 * O * M - 3 * O1 * L),
        }
    else:
        items = {
            "chi' = Omega^2": dchi - O**2,
            "K' = 3 (Omega'/Omega) K - Omega K L": _D(K) - (3 * O1 / O * K - O * K * L),
            "L' display": _D(L) - (O * (K * M - L**2) + 3 * O1 / O * L + O2 / O**2 - 4 * O1**2 / O**3),
        }
        constrained = {
            "M' display": _D(M)
            - (
                6 * O * L * M
                - 4 * O * L**3 / K
                - 21 * O1 / O * M
                + 24 * O1 / O * L**2 / K
                - 42 * O1**2 / O**3 * L / K
                + 28 * O1**3 / (O**5 * K)
                - D[3] / (10 * K**2 * O**3)
            ),
        }
    for name, e in items.items():
        rep.add(name, name, not e)
    if second is None:
        for name, e in constrained.items():
            rep.add(name, name + " (under b1 = b2 = 0)", not e)
    return rep


def rescaling_check() -> Report:
    """Pull theta1..theta3 back along the weighted rescaling with symbolic k.

    Each pullback must be a constant multiple of the original form, so the
    flat distribution is preserved; the factors are reported.
    """
    from ..exterior import CoordinateMap, pullback
    from .base import flat_chart

    chart = flat_chart()
    ctx = chart.ctx.extend([constant("k")], name="flat_a_k")
    a = ctx.syms("a1 a2 a3 a4 a5")
    k = ctx.sym("k")
    weights = (3, 3, 2, 1, 1)
    m = CoordinateMap(ctx, ctx, [k**w * ai for w, ai in zip(weights, a)])
    thetas = [t.subs({}, ctx) for t in chart.thetas[:3]]
    rep = Report("weighted rescaling")
    for i, t in enumerate(thetas):
        pulled = pullback(m, t)
        f = _proportional(pulled, t)
        ok = f is not None and all(s == "k" for s in f.free_symbols())
        rep.add(f"theta{i + 1}", f"pullback of theta{i + 1} is a constant multiple of theta{i + 1}", ok,
                factor=str(f) if f is not None else None)
    return rep


def _proportional(a, b):
    """The function f with a = f b, or None."""
    keys = set(a.coeffs) | set(b.coeffs)
    if set(a.coeffs) != set(b.coeffs) or not keys:
        return None
    key = min(keys)
    f = a.coeffs[key] / b.coeffs[key]
    return f if all(a.coeffs[kk] == f * b.coeffs[kk] for kk in keys) else None


def symmetry_condition(basis=None) -> Report:
    """L_X of each tilde-theta lies in span(tilde-theta) for the 14 flat fields.

    Also records, for information, which fields preserve the untilded theta
    distribution as well.
    """
    from ..exterior import in_span, lie_derivative
    from .. import g2
    from .base import flat_chart, seed_triple
    from .catalog import flat_cartan

    chart = flat_chart()
    if basis is None:
        basis = g2.generate(seed_triple(flat_cartan()))
    tilde = [t.subs({}, basis.ctx) for t in chart.tilde_thetas]
    plain = [t.subs({}, basis.ctx) for t in chart.thetas[:3]]
    rep = Report("symmetry condition on tilde-theta")
    also_plain = []
    for name, X in zip(g2.NAMES, basis.fields):
        ok = all(in_span(lie_derivative(X, t), tilde) for t in tilde)
        rep.add(name, f"L_{name} tilde-theta_i in span(tilde-theta)", ok)
        if all(in_span(lie_derivative(X, t), plain) for t in plain):
            also_plain.append(name)
    rep.info = {"fields_preserving_theta": also_plain}
    return rep


def _field_ratio(X, Y):
    """The function f with X = f Y, or None."""
    f = None
    for a, b in zip(X.components, Y.components):
        if not b:
            if a:
                return None
            continue
        r = a / b
        if f is None:
            f = r
        elif r != f:
            return None
    return f


def hc_recovery(params=None) -> Report:
    """Compare HC-family seeds at a parameter point with the HC seeds.

    Passes when one global constant lam gives S_i(family) = lam S_i(HC) for
    every i.  The report always lists, for each family seed, the HC seed it
    is proportional to and the factor.
    """
    from .base import seed_triple
    from .catalog import builtin

    params = params or {"alpha": 0, "beta": "-1/2", "c": 0}
    fam = seed_triple(builtin("hc_family", params))
    hc = builtin("hilbert_cartan")
    ref = [S.subs({}, fam[0].ctx) for S in hc.displays["S"]]
    rep = Report(f"HC family at {params} against the HC seed triple")
    matches, same = {}, []
    for i, S in enumerate(fam):
        for j, R in enumerate(ref):
            f = _field_ratio(S, R)
            if f is not None and not f.free_symbols():
                matches[f"S{i + 1}"] = (f"S{j + 1}", str(f))
                if i == j:
                    same.append(f)
                break
    lam = same[0] if len(same) == 3 and all(f == same[0] for f in same) else None
    rep.add("global_constant", "S_i(family) = lam * S_i(HC) for one constant lam", lam is not None,
            factor=str(lam) if lam is not None else None,
            detail="; ".join(f"{k} = {v[1]} * {v[0]}(HC)" for k, v in matches.items()))
    perm = len(matches) == 3 and len({v[0] for v in matches.values()}) == 3
    rep.add("proportional_set", "each family seed is a constant multiple of a distinct HC seed", perm,
            detail=str(matches))
    rep.info = {"matches": matches}
    return rep
