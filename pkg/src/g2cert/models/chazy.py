"""Generalised Chazy distributions for k = 3/2 and k = 2/3.

The a-maps are written once, in terms of an arbitrary second derivative
(H'' or F''), a conformal scale Omega and its primitive chi; every higher
derivative comes from the context's rules.  The same builders therefore
serve both the constrained charts (Chazy system plus conformal-scale ODE as
atom rules) and the free charts used to extract the obstructions b1, b2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ..exterior import CoordinateMap, DiffForm, NotInSpan, VectorField, span_coefficients
from ..symcore import Context, RationalExpr, dynamic, jet
from ..symcore.errors import SymcoreError
from .base import SQRT3, DistributionModel, c_from_a, flat_chart, monge_model, theta_forms

COORDS = ("x", "y", "z", "p", "q")


class ExtractionMismatch(SymcoreError):
    pass


def _derivs(e: RationalExpr, n: int) -> list:
    """[e, e', ..., e^(n)] along the independent coordinate."""
    out = [e]
    for _ in range(n):
        out.append(out[-1].diff(out[-1].ctx.independent))
    return out


@dataclass
class AuxFunctions:
    K: RationalExpr
    L: RationalExpr
    M: RationalExpr
    chi: RationalExpr
    J: RationalExpr
    Omega: RationalExpr
    b1: RationalExpr | None = None
    b2: RationalExpr | None = None
    l1: RationalExpr | None = None
    l2: RationalExpr | None = None
    l3: RationalExpr | None = None
    # derivative lists: Om[k] = Omega^(k), D[k] = (H'' or F'')^(k)
    Om: list | None = None
    D: list | None = None


# ----------------------------------------------------------------- contexts
def k32_context() -> Context:
    return Context(
        COORDS,
        [
            dynamic("P", "(P^2 - Q)/6"),
            dynamic("Q", "2/3*(P*Q - R)"),
            dynamic("R", "P*R + Q^2/15"),
            dynamic("xi", "Q/45 - xi^2"),
            dynamic("rho", "xi*rho"),
            dynamic("chi", "1/rho^2"),
            dynamic("E", "P*E/3"),
            SQRT3,
        ],
        name="chazy_k32",
    )


def k23_context() -> Context:
    return Context(
        COORDS,
        [
            dynamic("P", "(P^2 - Q)/6"),
            dynamic("Q", "2/3*(P*Q - R)"),
            dynamic("R", "P*R + Q^2/80"),
            dynamic("xi", "Q/40 - xi^2"),
            dynamic("eta", "xi*eta"),
            dynamic("chi", "1/eta^2"),
            dynamic("G", "P*G/2"),
            SQRT3,
        ],
        name="chazy_k23",
    )


def free_context(second: str, order: int = 8, om_order: int = 6, chi_rule: str | None = None, name=None) -> Context:
    """Free differential indeterminates ``{second}2..`` and ``Om0..`` plus chi."""
    atoms = jet(second, order, start=2) + jet("Om", om_order, start=0)
    atoms.append(dynamic("chi", chi_rule))
    atoms.append(SQRT3)
    return Context(COORDS, atoms, name=name)


# --------------------------------------------------------------- k = 3/2 map
def k32_aux(H2: RationalExpr, Omega: RationalExpr, chi: RationalExpr, nder: int = 6) -> AuxFunctions:
    ctx = H2.ctx
    D = _derivs(H2, nder - 2)  # H'', H''', ..., H^(nder)
    Om = _derivs(Omega, 4)
    H2_, H3, H4 = D[0], D[1], D[2]
    O, O1, O2 = Om[0], Om[1], Om[2]
    K = 1 / (O * H2_)
    L = (O * H3 + 4 * O1 * H2_) / (O**2 * H2_**2)
    M = (O * (H2_ * H4 - H3**2) + O1 * H2_ * H3 + 3 * O2 * H2_**2) / (O**2 * H2_**3)
    y, p, q = ctx.syms("y p q")
    J = M * y + L * p + K * q
    return AuxFunctions(K, L, M, chi, J, O, Om=Om, D=D)


def k32_amap(aux: AuxFunctions) -> tuple:
    ctx = aux.K.ctx
    y, z, p, q = ctx.syms("y z p q")
    K, L, M, chi = aux.K, aux.L, aux.M, aux.chi
    O, O1, O2, O3 = aux.Om[:4]
    H2, H5 = aux.D[0], aux.D[3]
    dchi = chi.diff(ctx.independent)
    a1 = -(O * dchi / 16) * y
    yy = (
        M**2 * chi
        - 5 * dchi * L * M
        + 12 * O1 * M
        + dchi**2 * L**3 / (2 * O)
        + 4 * O1 / O * dchi * L**2
        + (4 * O * O2 - 34 * O1**2) / O * L
        + H5 / (2 * H2**2)
        + 2 / O**2 * K * (O3 * O**2 - 10 * O * O1 * O2 + 30 * O1**3)
    )
    a2 = (
        z
        + yy * y**2
        + (L**2 * chi - L * O) * p**2
        + K**2 * chi * q**2
        + (2 * L * M * chi - 3 * O * M - O1 * L - O2 * K) * y * p
        + 2 * K * (M * chi - dchi * L + O1) * y * q
        + 2 * K * (L * chi - O) * p * q
    )
    a3 = (-M * chi / 4 + dchi * L / 2 - O1 / 2) * y + (O / 2 - chi * L / 4) * p - chi * K * q / 4
    a4 = chi / 8
    a5 = 4 * M * y + 4 * L * p + 4 * K * q
    return a1, a2, a3, a4, a5


def k32_b(D: list, Om: list) -> tuple:
    """The displayed obstructions b1, b2 for k = 3/2 (D[0] = H'')."""
    H2, H3, H4, H5, H6 = D[:5]
    O, O1, O2, O3, O4 = Om[:5]
    b1 = 10 * H2**2 * O2 * O - 20 * H2**2 * O1**2 - 10 * H2 * H3 * O * O1 + 3 * H2 * H4 * O**2 - 5 * H3**2 * O**2
    b2 = (
        (-H2**3 * H6 + 8 * H2**2 * H3 * H5 + 8 * H2**2 * H4**2 - 43 * H2 * H3**2 * H4 + 30 * H3**4) * O**4
        + (-4 * H2**2 * O4 + 14 * H2 * H3 * O3 + 26 * H2 * H4 * O2 - 50 * H3**2 * O2) * H2**2 * O**3
        + (4 * H2**2 * H5 - 40 * H2 * H3 * H4 + 50 * H3**3) * H2 * O1 * O**3
        + 38 * H2**4 * O2**2 * O**2
        + (24 * H2**2 * O1 * O3 - 98 * H2 * H3 * O1 * O2 - 44 * H2 * H4 * O1**2 + 100 * H3**2 * O1**2) * H2**2 * O**2
        - 40 * (4 * H2 * O2 - 3 * H3 * O1) * H2**3 * O1**2 * O
        + 120 * H2**4 * O1**4
    )
    return b1, b2


# --------------------------------------------------------------- k = 2/3 map
def k23_aux(F2: RationalExpr, Omega: RationalExpr, chi: RationalExpr, nder: int = 6) -> AuxFunctions:
    ctx = F2.ctx
    D = _derivs(F2, nder - 2)
    Om = _derivs(Omega, 4)
    F2_, F3, F4 = D[0], D[1], D[2]
    O, O1, O2 = Om[0], Om[1], Om[2]
    K = F2_ / O
    L = -(F3 / F2_ - 4 * O1 / O) / O
    M = -(O * (F2_ * F4 - 2 * F3**2) + 4 * O1 * F2_ * F3 - 3 * O2 * F2_**2) / (O**2 * F2_**3)
    y, p, q = ctx.syms("y p q")
    J = M * y + L * p + K * q
    return AuxFunctions(K, L, M, chi, J, O, Om=Om, D=D)


def k23_amap(aux: AuxFunctions) -> tuple:
    ctx = aux.K.ctx
    y, z, p, q = ctx.syms("y z p q")
    K, L, M, chi = aux.K, aux.L, aux.M, aux.chi
    O, O1, O2, O3 = aux.Om[:4]
    F2, F5 = aux.D[0], aux.D[3]
    a1 = -(O**2 / (16 * K)) * y
    inner = (
        O * L**3
        - 10 * O1 / O * L**2
        + (ctx.const(5) / 2 * O2 / O**2 + 27 * O1**2 / O**3) * L
        - (O3 / O + 5 * O1 * O2 / O**2 + 22 * O1**3 / O**3) / O**2
    )
    yy = M**2 * chi - 6 * (O1 / O) * (M / K) - F5 / (2 * F2**3) - 2 / K**2 * inner
    a2 = (
        z
        + yy * y**2
        + (L**2 * chi - L * O) * p**2
        + K**2 * chi * q**2
        + (2 * L * M * chi - 3 * O * M - 2 * (O1 / O) * (L / K) + (4 * O1**2 / O**3 - O2 / O**2) / K) * y * p
        + 2 * K * (M * chi - O * L / K + O1 / (O * K)) * y * q
        + 2 * K * (L * chi - O) * p * q
    )
    a3 = (-M * chi / 4 + (O / 2) * (L / K) - O1 / (2 * O * K)) * y + (O / 2 - chi * L / 4) * p - chi * K * q / 4
    a4 = chi / 8
    a5 = 4 * M * y + 4 * L * p + 4 * K * q
    return a1, a2, a3, a4, a5


def k23_b(D: list, Om: list) -> tuple:
    F2, F3, F4, F5, F6 = D[:5]
    O, O1, O2, O3, O4 = Om[:5]
    b1 = -10 * F2**2 * O2 * O + 20 * F2**2 * O1**2 - 4 * F3**2 * O**2 + 3 * F2 * F4 * O**2
    b2 = (
        (-F2**3 * F6 + 7 * F2**2 * F3 * F5 + 2 * F2**2 * F4**2 - 20 * F2 * F3**2 * F4 + 12 * F3**4) * O**4
        + (4 * F2**4 * O4 + 10 * F2**3 * F4 * O2 - 10 * F2**3 * F3 * O3 - 10 * F2**2 * F3**2 * O2) * O**3
        + (
            20 * F2**2 * F3**2 * O1**2
            - 20 * F2**3 * F4 * O1**2
            - 24 * F2**4 * O1 * O3
            + 50 * F2**3 * F3 * O1 * O2
            - 38 * F2**4 * O2**2
        )
        * O**2
        - 40 * F2**3 * F3 * O * O1**3
        + 160 * F2**4 * O * O1**2 * O2
        - 120 * F2**4 * O1**4
    )
    return b1, b2


# ------------------------------------------------------------------- models
def _flat_map(ctx, a) -> CoordinateMap:
    return CoordinateMap(ctx, flat_chart().ctx, list(a))


def _finish(model: DistributionModel, aux: AuxFunctions, a) -> DistributionModel:
    model.amap = _flat_map(model.ctx, a)
    model.cfuncs = tuple(c_from_a(a))
    model.params["aux"] = aux
    return model


@lru_cache(maxsize=None)
def chazy_k32() -> DistributionModel:
    ctx = k32_context()
    E, rho, chi, q = ctx.syms("E rho chi q")
    model = monge_model(q**2 / E**2, name="chazy_k32")
    aux = k32_aux(E**2, 1 / (rho * E), chi)
    a = k32_amap(aux)
    model.side_conditions = [
        "H'' = E^2 with E' = P*E/3 (Noth's equation via the k=3/2 Chazy system)",
        "Omega = 1/(rho*E) with rho'' = Q*rho/45 (Ricci-flat scale)",
    ]
    _finish(model, aux, a)
    aux.b1, aux.b2 = k32_b(aux.D, aux.Om)
    model.displays.update(k32_displays(ctx))
    return model


@lru_cache(maxsize=None)
def chazy_k23() -> DistributionModel:
    ctx = k23_context()
    G, eta, chi = ctx.syms("G eta chi")
    model = dual_monge(ctx, G, "chazy_k23")
    aux = k23_aux(G, 1 / eta, chi)
    a = k23_amap(aux)
    model.side_conditions = [
        "F'' = G with G' = P*G/2 (dual Noth via the k=2/3 Chazy system)",
        "Omega = 1/eta with eta'' = Q*eta/40 (Ricci-flat scale)",
    ]
    _finish(model, aux, a)
    aux.b1, aux.b2 = k23_b(aux.D, aux.Om)
    model.displays.update(k23_displays(ctx))
    return model


def dual_monge(ctx: Context, F2: RationalExpr, name: str) -> DistributionModel:
    """omega1 = dy - p F'' dx, omega2 = dp - q F'' dx, omega3 = dz - q^2 F''^2 dx."""
    x, y, z, p, q = ctx.syms("x y z p q")
    dx = DiffForm.d(ctx, "x")
    w1 = DiffForm.d(ctx, "y") - (p * F2) * dx
    w2 = DiffForm.d(ctx, "p") - (q * F2) * dx
    w3 = DiffForm.d(ctx, "z") - (q**2 * F2**2) * dx
    X1 = VectorField.coordinate(ctx, "q")
    X2 = VectorField(ctx, [1, F2 * p, F2**2 * q**2, F2 * q, 0])
    model = DistributionModel(name, ctx, (w1, w2, w3), (X1, X2))
    model.check_annihilation()
    return model


@lru_cache(maxsize=None)
def chazy_k32_free() -> DistributionModel:
    ctx = free_context("H", chi_rule="Om0^2*H2", name="chazy_k32_free")
    H2, Om0, chi, q = ctx.syms("H2 Om0 chi q")
    model = monge_model(q**2 / H2, name="chazy_k32_free")
    aux = k32_aux(H2, Om0, chi)
    a = k32_amap(aux)
    model.amap = _flat_map(ctx, a)
    aux.b1, aux.b2 = k32_b(aux.D, aux.Om)
    model.params["aux"] = aux
    model.params["second"] = "H"
    return model


@lru_cache(maxsize=None)
def chazy_k23_free() -> DistributionModel:
    ctx = free_context("F", chi_rule="Om0^2", name="chazy_k23_free")
    F2, Om0, chi = ctx.syms("F2 Om0 chi")
    model = dual_monge(ctx, F2, "chazy_k23_free")
    aux = k23_aux(F2, Om0, chi)
    a = k23_amap(aux)
    model.amap = _flat_map(ctx, a)
    aux.b1, aux.b2 = k23_b(aux.D, aux.Om)
    model.params["aux"] = aux
    model.params["second"] = "F"
    return model


# ------------------------------------------------------------ obstructions
def residual_obstructions(model: DistributionModel) -> tuple:
    """Extract (b1, b2) from the dx-residual of the theta2 pullback.

    The residual must have the form  s * (y*q/(Om^2 D^m1)) * b1 dx
    + s * (y^2/(2 Om^4 D^m2)) * b2 dx  with (s, m1, m2) = (-1, 3, 5) for
    k = 3/2 and (+1, 2, 6) for k = 2/3; anything else is a mismatch.
    """
    aux = model.params["aux"]
    second = model.params.get("second")
    if second == "H":
        sign, m1, m2 = -1, 3, 5
    elif second == "F":
        sign, m1, m2 = 1, 2, 6
    else:
        raise ValueError("residual extraction needs a free Chazy model")
    ctx = model.ctx
    theta2 = theta_forms(ctx, model.amap.images)[1]
    try:
        span_coefficients(theta2, list(model.omegas))
        raise ExtractionMismatch("theta2 lies in the span over free atoms; no obstruction to extract")
    except NotInSpan as exc:
        residual = exc.residual
    extra = [k for k in residual.coeffs if k != (0,)]
    if extra:
        raise ExtractionMismatch(f"residual has components off dx: {sorted(extra)}")
    r = residual.coeffs[(0,)]
    O, D = aux.Om[0], aux.D[0]
    y, q = ctx.syms("y q")
    r_yq = r.diff("y").diff("q")
    r_yy = r.diff("y").diff("y") / 2
    b1 = sign * r_yq * O**2 * D**m1
    b2 = sign * r_yy * 2 * O**4 * D**m2
    rebuilt = sign * (y * q / (O**2 * D**m1)) * b1 + sign * (y**2 / (2 * O**4 * D**m2)) * b2
    if rebuilt != r:
        raise ExtractionMismatch(f"residual is not of the form yq*b1 + y^2*b2: leftover {r - rebuilt}")
    return b1, b2


# ---------------------------------------------------------------- displays
def _xfield(ctx, comps: dict):
    return VectorField.from_dict(ctx, {k: ctx.parse(v) if isinstance(v, str) else v for k, v in comps.items()})


def k32_displays(ctx: Context) -> dict:
    P = ctx.parse
    J = P("2/3*rho/E*(9*y*xi^2 + 2*(P*y - 3*p)*xi - (Q/60 - P^2/12)*y - P*p + 3/2*q)")
    u = P("3*y*xi + P*y/3 - p")
    c1 = P("chi^2/8") * J + P("chi/(8*rho*E)") * u - P("3*y/(8*rho^3*E)")
    c2 = (
        P("6*z")
        + P("6*chi") * J**2
        + P("16/rho/E") * J * u
        + P(
            "1/E^2*(-4*(6*xi + P)*p^2 + 2*(36*xi^2 + 8*P*xi - Q/15 + P^2/3)*y*p"
            " - (72*xi^3 + 24*P*xi^2 + 8/3*P^2*xi + 1/9*(P^3 + P*Q/5 + 2*R/5))*y^2)"
        )
    )
    c3 = P("-chi/2") * J - u / P("rho*E")
    c4 = P("-chi/8")
    c5 = 4 * J
    X1 = VectorField.coordinate(ctx, "q")
    X2 = _xfield(ctx, {"x": "1", "y": "p", "p": "q", "z": "q^2/E^2"})
    X3 = _xfield(
        ctx,
        {
            "z": "4*rho^3*chi/E*(3*y*xi^3 + 3*(P*y/3 - p)*xi^2 - ((Q/60 - P^2/12)*y + P*p)*xi"
            " - (P*Q + R)*y/270 - (P^2 + Q/15)*p/12)"
            " + 4*rho/E*(3*y*xi^2 + 2*(P*y/3 - p)*xi - 1/3*((Q/60 - P^2/12)*y + p*P - 3*q))",
            "y": "-rho^3*chi*E",
            "p": "-rho^3*chi*E*(P + 9*xi)/3 + rho*E",
        },
    )
    w = P("36*xi^2 + 12*P*xi + P^2 + Q/15")
    v = P("9*y*xi^2 + 6*(P*y/3 - p)*xi - (Q - 5*P^2)/60*y - P*p + 3/2*q")
    l1 = P("4*rho^4/9") * w * v * P("chi") + P(
        "rho^2*(-144*y*xi^3 + 16*(-10/3*P*y + 7*p)*xi^2 + 4/3*((Q/3 - 13/3*P^2)*y + 28*P*p - 30*q)*xi"
        " + 4/9*((2/15*R - P^3/3 + Q*P/5)*y + (7*P^2 + Q/5)*p - 24*P*q))"
    )
    l2 = P("E/(48*rho)") * (w * P("rho^4*chi^2") - P("4*(P + 6*xi)*rho^2*chi") + 12)
    Z1 = -(P("rho*E/6") * (w * P("rho^2*chi") - P("4*P + 24*xi"))) * X1 + X3
    Z2 = l1 * X1 - P("8*rho^2") * X2 - (P("8/3*rho/E") * v) * X3
    Z3 = l2 * X1 - P("chi/8") * X3
    s = P(
        "48*y*xi^3 + 48*(P*y/3 - p)*xi^2 - 16*((Q - 5*P^2)/60*y + p*P - 3/2*q)*xi"
        " - 4/3*(2/45*(P*Q + R)*y + (P^2 + Q/15)*p - 6*P*q)"
    )
    S1 = -(P("rho^2") * s) * X1 - P("8*rho^2") * X2
    S2 = P("E/(4*rho)") * X1
    A = P("9*y*xi^2 + 2*(P*y - 3*p)*xi - (Q/60 - P^2/12)*y - P*p + 3/2*q")
    l3 = P("rho*E/6") * (w * P("rho^2*chi") - P("4*P + 24*xi")) * c3**2 + P("E/(4*rho)") * c2 + P("rho^2") * s * c1
    coef2 = P("2/(3*rho*E)") * (P("rho^4*chi^2") * A + P("3/2*rho^2*chi") * u - P("9/2*y"))
    coef3 = -((P("rho^2*chi") * A + P("9*y*xi + P*y - 3*p")) ** 2) / P("9*rho^2*E^2")
    S3 = l3 * X1 + coef2 * X2 + coef3 * X3
    return {
        "J": J,
        "c": (c1, c2, c3, c4, c5),
        "X": (X1, X2, X3),
        "Z": (Z1, Z2, Z3),
        "l": (l1, l2, l3),
        "S": (S1, S2, S3),
    }


def k23_displays(ctx: Context) -> dict:
    P = ctx.parse
    J = P("eta/(6*G)*((6*xi + P)^2 + Q/20)*y - eta/2*(8*xi + P)*p + eta*G*q")
    u = P("p/eta - (6*xi + P)*y/(2*eta*G)")
    c1 = J * P("chi^2/8") - u * P("chi/8") - P("3*y/(8*eta^3*G)")
    c2 = (
        P("6*z")
        + P("6*chi") * J**2
        - 16 * u * J
        + P(
            "-4*(6*xi + P)*p^2 + 2*(6*xi + P)^2*y*p/G - 1/3*(6*xi + P)^3*y^2/G^2"
            " + P*p^2 + Q*y*p/(10*G) + R*y^2/(30*G^2)"
        )
    )
    c3 = -J * P("chi/2") + u
    c4 = P("-chi/8")
    c5 = 4 * J
    X1 = VectorField.coordinate(ctx, "q")
    X2 = _xfield(ctx, {"x": "1", "y": "G*p", "p": "G*q", "z": "G^2*q^2"})
    X3 = _xfield(
        ctx,
        {
            "y": "-eta^3*chi*G",
            "p": "-eta^3*chi/2*(6*xi + P) + eta",
            "z": "eta^3*chi*((12*xi^3 + 6*P*xi^2 + (P^2 + Q/20)*xi + P^3/18 + P*Q/120 + R/90)*y/G"
            " - (12*xi^2 + 3*P*xi + P^2/6 - Q/60)*p)"
            " + eta*(1/3*((6*xi + P)^2 + Q/20)*y/G - (8*xi + P)*p + 4*G*q)",
        },
    )
    w = P("6*xi^2 + 3/2*P*xi + 1/12*(P^2 - Q/10)")
    Z1 = -(P("eta/G") * (w * P("eta^2*chi") - P("4*xi + P/2"))) * X1 + X3
    l1 = (
        P("2/G^2") * w * P("(1/3*((6*xi + P)^2 + Q/20)*y - (8*xi + P)*G*p + 2*G^2*q)*eta^4*chi")
        - P("(144*xi^3 + 68*P*xi^2 + 32/3*(P^2 + Q/32)*xi + 5/9*(P^3 + 9/100*P*Q + 2/25*R))*eta^2*y/G^2")
        + P("(112*xi^2 + 28*P*xi + 5/3*P^2 - Q/15)*eta^2*p/G")
        - P("2*(20*xi + P)*eta^2*q")
    )
    l2 = (w * P("eta^3*chi^2/8") - P("(8*xi + P)*eta*chi/16") + P("1/(4*eta)")) / P("G")
    Z2 = l1 * X1 - P("8*eta^2") * X2 - P("2*eta*(1/3*((6*xi + P)^2 + Q/20)*y/G - (8*xi + P)*p + 2*G*q)") * X3
    Z3 = l2 * X1 - P("chi/8") * X3
    s = P(
        "2/9*(216*xi^3 + 108*P*xi^2 + 18*(P^2 + Q/20)*xi + P^3 + 3*P*Q/20 + R/5)*y/G^2"
        " - 2*(24*xi^2 + 6*P*xi + 1/3*(P^2 - Q/10))*p/G + 24*xi*q"
    )
    S1 = -(P("eta^2") * s) * X1 - P("8*eta^2") * X2
    S2 = P("1/(4*eta*G)") * X1
    l3 = P("eta/G") * (w * P("eta^2*chi") - P("4*xi + P/2")) * c3**2 + P("1/(4*eta*G)") * c2 + P("eta^2") * s * c1
    coef2 = P(
        "(1/6*((6*xi + P)^2 + Q/20)*y/G - 1/2*(8*xi + P)*p + G*q)*eta^3*chi^2"
        " + (1/2*(6*xi + P)*y/G - p)*eta*chi - 3*y/(eta*G)"
    )
    S3 = l3 * X1 + coef2 * X2 - c3**2 * X3
    return {
        "J": J,
        "c": (c1, c2, c3, c4, c5),
        "X": (X1, X2, X3),
        "Z": (Z1, Z2, Z3),
        "l": (l1, l2, l3),
        "S": (S1, S2, S3),
    }
