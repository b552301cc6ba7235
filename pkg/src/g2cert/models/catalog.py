"""Built-in models: flat Cartan, Hilbert-Cartan, the HC rescaling family and
the two Lame-parametrised charts, plus the :func:`builtin` dispatcher."""
from __future__ import annotations

from fractions import Fraction

from ..exterior import CoordinateMap, DiffForm, VectorField
from ..symcore import Context, RationalExpr, constant
from .base import (
    SQRT3,
    DistributionModel,
    MissingParam,
    UnknownModel,
    c_from_a,
    flat_chart,
    monge_model,
)
from .chazy import _xfield, chazy_k23, chazy_k32, k32_amap, k32_aux

COORDS = ("x", "y", "z", "p", "q")


def _param_context(coords, names, params, extra=(), name=None):
    """Context whose constants are the names not fixed numerically by ``params``."""
    params = dict(params or {})
    unknown = set(params) - set(names)
    if unknown:
        raise MissingParam(f"model {name} has no parameter(s) {sorted(unknown)}; expected {list(names)}")
    atoms = []
    for n in names:
        v = params.get(n, "symbolic")
        if v is None:
            raise MissingParam(f"parameter {n!r} of model {name} was declared but not supplied")
        if v == "symbolic":
            atoms.append(constant(n))
    ctx = Context(coords, atoms + list(extra), name=name)
    vals = {}
    for n in names:
        v = params.get(n, "symbolic")
        vals[n] = ctx.sym(n) if v == "symbolic" else ctx.const(Fraction(v) if not isinstance(v, RationalExpr) else v)
    return ctx, vals


# ------------------------------------------------------------------ flat
def flat_cartan(params=None) -> DistributionModel:
    chart = flat_chart()
    ctx = chart.ctx
    a = ctx.syms("a1 a2 a3 a4 a5")
    model = DistributionModel("flat_cartan", ctx, chart.thetas[:3], chart.spanning)
    model.check_annihilation()
    model.amap = CoordinateMap(ctx, ctx, list(a))
    model.cfuncs = c_from_a(a)
    return model


# ------------------------------------------------------- Hilbert-Cartan
def hilbert_cartan(params=None) -> DistributionModel:
    ctx = Context(COORDS, [SQRT3], name="hilbert_cartan")
    x, y, z, p, q = ctx.syms("x y z p q")
    model = monge_model(q**2, name="hilbert_cartan")
    a = (2 * z + 2 * q**2 * x - 4 * p * q, 2 * y, 2 * p - q * x, 2 * q, -x)
    model.amap = CoordinateMap(ctx, flat_chart().ctx, list(a))
    model.cfuncs = c_from_a(a)
    P = ctx.parse
    Xq = VectorField.coordinate(ctx, "q")
    U = _xfield(ctx, {"p": "1", "y": "-x", "z": "4*q"})
    X2 = _xfield(ctx, {"x": "1", "y": "p", "z": "q^2", "p": "q"})
    model.displays = {
        "theta_rows": ((0, -4 * q, 2), (2, 0, 0), (0, 2, 0)),
        # c2 as printed carries q^2*x where the a-map gives q*x^2
        "c_printed": tuple(P(s) for s in ("12*z - 32*p*q + 12*q^2*x", "12*y + 4*p*x - 4*q^2*x", "4*p - 2*q*x", "-2*q", "-x")),
        "c": tuple(P(s) for s in ("12*z - 32*p*q + 12*q^2*x", "12*y + 4*p*x - 4*q*x^2", "4*p - 2*q*x", "-2*q", "-x")),
        "Z": (U / 4, (x / 4) * U - Xq / 2, -X2 - (q / 2) * U),
        "S": (
            -Xq / 2,
            -X2,
            P("1/2*(12*z - 32*p*q + 12*q^2*x)") * Xq - P("(2*p - q*x)^2") * U - P("12*y + 4*p*x - 4*q*x^2") * X2,
        ),
    }
    return model


# ------------------------------------------------------------ HC family
def hc_family(params=None) -> DistributionModel:
    """HC with the conformal rescalings rho = alpha*x + beta (P = Q = R = 0)."""
    ctx, v = _param_context(COORDS, ("alpha", "beta", "c"), params, [SQRT3], name="hc_family")
    alpha, beta, c = v["alpha"], v["beta"], v["c"]
    x, y, z, p, q = ctx.syms("x y z p q")
    if not alpha and not beta:
        raise ValueError("alpha and beta must not both vanish")
    rho = alpha * x + beta
    xi = alpha / rho
    if alpha:
        chi = -1 / (alpha * rho) + c
    else:
        # alpha -> 0 limit with the integration constant shifted by 1/(alpha*beta)
        chi = x / beta**2 + c
    model = monge_model(q**2, name="hc_family")
    aux = k32_aux(ctx.one, 1 / rho, chi)
    a = k32_amap(aux)
    model.amap = CoordinateMap(ctx, flat_chart().ctx, list(a))
    model.cfuncs = c_from_a(a)
    model.params.update({"aux": aux, "rho": rho, "xi": xi, "chi": chi})
    model.side_conditions = ["P = Q = R = 0, H'' = 1", "rho'' = 0 (Ricci-flat scale)"]
    model.displays = hc_family_displays(ctx, rho, xi, chi)
    return model


def hc_family_displays(ctx, rho, xi, chi) -> dict:
    x, y, z, p, q = ctx.syms("x y z p q")
    X1 = VectorField.coordinate(ctx, "q")
    X2 = _xfield(ctx, {"x": "1", "y": "p", "p": "q", "z": "q^2"})
    X3 = VectorField.from_dict(
        ctx,
        {
            "z": 12 * rho**3 * chi * xi**2 * (y * xi - p) + 4 * rho * (3 * y * xi**2 - 2 * p * xi + q),
            "y": -(rho**3) * chi,
            "p": -3 * rho**3 * chi * xi + rho,
        },
    )
    A = 6 * y * xi**2 - 4 * p * xi + q
    B = 3 * y * xi - p
    c1 = chi**2 / 8 * A * rho + chi / (8 * rho) * B - 3 * y / (8 * rho**3)
    c2 = 6 * z + 6 * chi * rho**2 * A**2 + 16 * A * B - 24 * xi * (p**2 - 3 * xi * y * p + 3 * xi**2 * y**2)
    c3 = -chi / 2 * rho * A - B / rho
    l3 = rho * (6 * xi**2 * rho**2 * chi - 4 * xi) * c3**2 + c2 / (4 * rho) + 24 * rho**2 * (2 * xi**3 * y - 2 * xi**2 * p + q * xi) * c1
    h = 3 * y * xi**2 - 2 * p * xi + q / 2
    S1 = -(24 * rho**2 * (2 * xi**2 * (y * xi - p) + q * xi)) * X1 - (8 * rho**2) * X2
    S2 = X1 / (4 * rho)
    S3 = (
        l3 * X1
        + (2 / rho * (rho**4 * chi**2 * h - 3 * y / 2 + rho**2 * chi * B / 2)) * X2
        - ((rho**2 * chi * h + B) ** 2 / rho**2) * X3
    )
    return {"X": (X1, X2, X3), "c": (c1, c2, c3), "l3": l3, "S": (S1, S2, S3)}


# ---------------------------------------------------------- spin 3/2 Lame
def lame_spin32(params=None) -> DistributionModel:
    ctx, v = _param_context(("w", "y", "z", "p", "q"), ("alpha", "beta", "delta", "g3"), params, [SQRT3], name="lame_spin32")
    al, be, de, g3 = v["alpha"], v["beta"], v["delta"], v["g3"]
    w, y, z, p, q = ctx.syms("w y z p q")
    u = 4 * w**3 - g3
    Y = al * w + be * (w**3 + g3 / 2)
    dw = DiffForm.d(ctx, "w")
    w1 = DiffForm.d(ctx, "y") - (2 * p * u / Y**2) * dw
    w2 = DiffForm.d(ctx, "p") - (2 * q * u / Y**2) * dw
    w3 = DiffForm.d(ctx, "z") - (2 * q**2 * u**4 / Y**6) * dw
    X1 = VectorField.coordinate(ctx, "q")
    X2 = VectorField.from_dict(ctx, {"w": Y**2 / (2 * u), "y": p, "p": q, "z": u**3 / Y**4 * q**2})
    model = DistributionModel("lame_spin32", ctx, (w1, w2, w3), (X1, X2))
    model.check_annihilation()
    c1 = (-2 * Y**3 * (al * w + 3 * g3 * be / 8) * y + Y**2 * (8 * w**3 + g3) * w * p + 2 * w**2 * u**2 * q) / (4 * de**3 * Y**3)
    c2 = (
        6 * z
        - 12 * be * (al * w + 3 * g3 * be / 16) * y**2
        + 12 * w**2 * (16 * w**3 + 5 * g3) / Y**2 * p**2
        + 12 * u**4 * w / Y**6 * q**2
        + 6 * w * (be * (8 * w**3 + g3) - 8 * al * w) / Y * y * p
        - 4 * u**2 * (2 * al - 3 * be * w**2) / Y**3 * y * q
        + 16 * (5 * w**3 + g3) * u**2 / Y**4 * p * q
    )
    c3 = (al * Y**3 * y / 2 - (2 * w**3 + g3) * Y**2 * p - w * u**2 * q) / (de * Y**3)
    c4 = -w / (4 * de**2)
    c5 = 6 * de / Y**3 * (be * w * Y**3 * y + 4 * w**2 * Y**2 * p + ctx.const(2) / 3 * u**2 * q)
    model.cfuncs = (c1, c2, c3, c4, c5)
    model.params.update({"Y": Y, "u": u, "chi": 2 * w / de**2})
    model.side_conditions = ["gamma = 0 and integration constant 0, so chi = 2w/delta^2", "g2 = 0"]
    k = al * w + 3 * be * g3 / 4
    Theta = (
        (-k / (4 * de**3), w * u / (4 * de**3 * Y), 0),
        (
            -6 * be * k * y - 24 * w / Y * k * p - 4 * (3 * be * w**2 + al) * u**2 / Y**3 * q,
            6 * u / Y * (be * w * y + 4 * w**2 / Y * p - 4 * u**2 / (3 * Y**3) * q),
            6,
        ),
        ((al + 3 * be * w**2) / (2 * de), u / (de * Y), 0),
    )
    Z1 = VectorField.from_dict(
        ctx,
        {
            "y": -2 * de * w / Y,
            "z": 4 * de * u**2 / Y**3 * q,
            "p": de * (be * (8 * w**3 + g3) + 4 * al * w) / (2 * u),
            "q": -12 * de * Y**3 * w**2 / u**3,
        },
    )
    S1 = (
        6 * be * de**2 * Y**3 / u**2 * y + 24 * de**2 * w * Y**2 / u**2 * p + 12 * de**2 * (al * (8 * w**3 + g3) + 9 * be * g3 * w**2) / (u * Y) * q
    ) * X1 - (8 * de**2 * u / Y**2) * X2
    S2 = (Y**3 / (4 * de * u**2)) * X1
    S3 = -c1 * S1 + c2 * S2 - c3**2 * Z1
    model.displays = {"Theta_rows": Theta, "Z1": Z1, "S": (S1, S2, S3), "X2": X2}
    return model


# ------------------------------------------------------------ spin 4 Lame
def lame_spin4(params=None) -> DistributionModel:
    extra = [constant("sk", (2, "k")), constant("s2", (2, 2)), SQRT3]
    params = dict(params or {})
    if "k" in params and params["k"] != "symbolic":
        raise MissingParam("k enters through sqrt(k) and must stay symbolic")
    ctx, v = _param_context(("r", "y", "z", "p", "q"), ("alpha", "beta", "k"), params, extra, name="lame_spin4")
    al, be, k = v["alpha"], v["beta"], v["k"]
    sk, s2 = ctx.syms("sk s2")
    r, y, z, p, q = ctx.syms("r y z p q")
    T3 = r**3 + 1
    Y = al * (2 * r**3 - 1) + be * r * (r**3 - 2)
    dr = DiffForm.d(ctx, "r")
    w1 = DiffForm.d(ctx, "y") - (k * Y * p / (2 * T3**2)) * dr
    w2 = DiffForm.d(ctx, "p") - (k * Y * q / (2 * T3**2)) * dr
    w3 = DiffForm.d(ctx, "z") - (k * Y**4 * q**2 / (2 * T3**6)) * dr
    X1 = VectorField.coordinate(ctx, "q")
    X2 = VectorField.from_dict(
        ctx, {"r": 2 * Y**2 / (k * T3**2), "y": Y**3 / T3**4 * p, "p": Y**3 / T3**4 * q, "z": Y**6 / T3**8 * q**2}
    )
    model = DistributionModel("lame_spin4", ctx, (w1, w2, w3), (X1, X2))
    model.check_annihilation()
    # radicals: sqrt(2/k^3), sqrt(2/k), sqrt(2k), sqrt(k/2)
    r2k3 = s2 * sk / k**2
    r2k = s2 * sk / k
    rk2 = s2 * sk
    rkh = s2 * sk / 2
    c1 = (
        -ctx.const(3) / 4 * r2k3 * y
        + s2 / (8 * sk) * r * (3 * be * r**4 + al * (4 * r**3 + 1)) / T3 * p
        + rk2 / 16 * r**2 * Y**2 / T3**3 * q
    )
    c2 = (
        6 * z
        - 288 / k**3 * y**2
        + 8 / k * (be * (7 * r**4 + 4 * r) + al * (8 * r**3 + 5)) * (be * (2 * r**3 - 1) + 3 * al * r**2) / T3**2 * p**2
        + 3 * k * r * Y**4 / T3**6 * q**2
        + 96 / k**2 * (3 * be * r**4 + al * (4 * r**3 + 1)) * r / T3 * y * p
        + 48 / k * r**2 * Y**2 / T3**3 * y * q
        + 8 * (al * (5 * r**3 + 2) + be * (4 * r**4 + r)) * Y**2 / T3**4 * p * q
    )
    c3 = -r2k * (be * r + al) * p - rk2 / 4 * r * Y**2 / T3**3 * q
    c4 = -r / 8
    c5 = 48 * r2k3 * r * y + 8 * r2k * (3 * al * r**2 + be * (2 * r**3 - 1)) / T3 * p + 2 * rk2 * Y**2 / T3**3 * q
    model.cfuncs = (c1, c2, c3, c4, c5)
    model.params.update({"Y": Y, "chi": r})
    model.side_conditions = [
        "delta = 0, gamma = sqrt(k/2), integration constant 0, so chi = r",
        "F'' = Phi^3 with Phi = Y/(r^3+1)^(4/3)",
    ]
    Theta = (
        (-ctx.const(3) / 4 * r2k3, r2k / 8 * Y / T3 * r, 0),
        (
            -48 * (12 / k**3 * y + 2 * (3 * al + be * (r**4 + 4 * r)) * r / (k**2 * T3) * p + r**2 * Y**2 / (k * T3**3) * q),
            8 * (12 * Y * r / (k**2 * T3) * y + 2 * Y * (3 * al * r**2 + be * (2 * r**3 - 1)) / (k * T3**2) * p - Y**3 / T3**4 * q),
            6,
        ),
        (6 * r2k3 * r**2, r2k * Y / T3, 0),
    )
    Z1 = VectorField.from_dict(
        ctx,
        {
            "y": -s2 * k * sk * r / (4 * T3),
            "z": 2 * rk2 / T3**3 * (-2 * be / k * T3**3 * p + Y**2 * q),
            "p": rkh * (4 * r**3 + 1) / Y,
            "q": -2 * r2k * T3**3 * (6 * al * r**2 + be * (5 * r**3 - 1)) / Y**3,
        },
    )
    S1 = 24 * (
        8 * T3**3 / (k**2 * Y**2) * y + 4 * T3**2 * r * (al + be * r) / (k * Y**2) * p + (9 * al * r**2 + be * (r**6 + 8 * r**3 - 2)) / (T3 * Y) * q
    ) * X1 - (4 * k * T3**2 / Y**2) * X2
    S2 = (s2 * T3**3 / (4 * sk * Y**2)) * X1
    S3 = -c1 * S1 + c2 * S2 - c3**2 * Z1
    model.displays = {"Theta_rows": Theta, "Z1": Z1, "S": (S1, S2, S3), "X2": X2}
    return model


# ------------------------------------------------------------- dispatcher
_NO_PARAMS = ("flat_cartan", "hilbert_cartan", "chazy_k32", "chazy_k23")

BUILTINS = {
    "flat_cartan": flat_cartan,
    "hilbert_cartan": hilbert_cartan,
    "hc_family": hc_family,
    "chazy_k32": lambda params=None: chazy_k32(),
    "chazy_k23": lambda params=None: chazy_k23(),
    "lame_spin32": lame_spin32,
    "lame_spin4": lame_spin4,
}


def builtin(name: str, params=None) -> DistributionModel:
    """Construct a catalog model; ``params`` maps constant names to numbers."""
    if name not in BUILTINS:
        raise UnknownModel(f"unknown model {name!r}; choose from {sorted(BUILTINS)}")
    if params and name in _NO_PARAMS:
        raise MissingParam(f"model {name} takes no parameters, got {sorted(params)}")
    return BUILTINS[name](params)
