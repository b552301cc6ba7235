"""Shared model machinery: the flat chart, c-coordinates, Monge models and
the Z/S seed recipe."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from ..exterior import (
    CoordinateMap,
    DiffForm,
    VectorField,
    _interior,
    d,
    dual_frame,
    express_in_frame,
    span_coefficients,
    wedge,
)
from ..symcore import Context, RationalExpr, constant
from ..symcore.errors import SymcoreError


class UnknownModel(KeyError):
    pass


class MissingParam(KeyError):
    pass


class AnnihilationFailure(SymcoreError):
    pass


SQRT3 = constant("s3", (2, 3))


@dataclass
class DistributionModel:
    name: str
    ctx: Context
    omegas: tuple
    spanning: tuple
    amap: Optional[CoordinateMap] = None
    cfuncs: Optional[tuple] = None
    seeds: Optional[tuple] = None
    side_conditions: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    # fields and functions as printed, for comparison with recipe output
    displays: dict = field(default_factory=dict)

    def check_annihilation(self):
        """Raise unless every omega kills both spanning fields."""
        for i, w in enumerate(self.omegas):
            for j, X in enumerate(self.spanning):
                v = _interior(X, w).coeffs.get((), self.ctx.zero)
                if v:
                    raise AnnihilationFailure(f"omega{i + 1}(X{j + 1}) = {v}, not 0")
        return True

    def check_independent(self) -> bool:
        """Omegas are linearly independent over the function field."""
        from ..linalg import rank

        rows = [[w.coeffs.get((i,), self.ctx.zero) for i in range(self.ctx.dim)] for w in self.omegas]
        return rank(rows) == 3


# ------------------------------------------------------------------ flat chart
@dataclass
class FlatChart:
    ctx: Context
    thetas: tuple
    tilde_thetas: tuple
    spanning: tuple

    def structure_equations(self) -> dict:
        t1, t2, t3, t4, t5 = self.thetas
        return {
            "d(theta1) = theta3^theta4": d(t1) == wedge(t3, t4),
            "d(theta2) = theta3^theta5": d(t2) == wedge(t3, t5),
            "d(theta3) = theta4^theta5": d(t3) == wedge(t4, t5),
            "d(theta4) = 0": d(t4).is_zero(),
            "d(theta5) = 0": d(t5).is_zero(),
        }


def theta_forms(ctx: Context, a: Sequence[RationalExpr]) -> tuple:
    """theta1..theta5 written in functions a1..a5 on any chart."""
    a1, a2, a3, a4, a5 = a
    da = [d(f) for f in a]
    half = ctx.const(1) / 2
    t1 = da[0] + (a3 + half * a4 * a5) * da[3]
    t2 = da[1] + (a3 - half * a4 * a5) * da[4]
    t3 = da[2] + (half * a4) * da[4] - (half * a5) * da[3]
    return t1, t2, t3, da[3], da[4]


@lru_cache(maxsize=None)
def flat_chart() -> FlatChart:
    ctx = Context(["a1", "a2", "a3", "a4", "a5"], [SQRT3], name="flat_a")
    a = ctx.syms("a1 a2 a3 a4 a5")
    thetas = theta_forms(ctx, a)
    a1, a2, a3, a4, a5 = a
    tilde = theta_forms(ctx, [a1 + a3 * a4, a2 + a3 * a5, -a3, a4, a5])[:3]
    half = ctx.const(1) / 2
    X1 = VectorField(ctx, [-(a3 + half * a4 * a5), 0, half * a5, 1, 0])
    X2 = VectorField(ctx, [0, -(a3 - half * a4 * a5), -half * a4, 0, 1])
    chart = FlatChart(ctx, thetas, tilde, (X1, X2))
    bad = [k for k, ok in chart.structure_equations().items() if not ok]
    if bad:
        raise AssertionError(f"flat structure equations fail: {bad}")
    return chart


def c_from_a(a: Sequence[RationalExpr]) -> tuple:
    a1, a2, a3, a4, a5 = a
    return (
        6 * a1 - 2 * a3 * a4 + a4**2 * a5,
        6 * a2 - 2 * a3 * a5 - a4 * a5**2,
        2 * a3,
        -a4,
        a5,
    )


def a_from_c(c: Sequence[RationalExpr]) -> tuple:
    """Inverse of :func:`c_from_a`."""
    c1, c2, c3, c4, c5 = c
    a3, a4, a5 = c3 / 2, -c4, c5
    a1 = (c1 + 2 * a3 * a4 - a4**2 * a5) / 6
    a2 = (c2 + 2 * a3 * a5 + a4 * a5**2) / 6
    return a1, a2, a3, a4, a5


def big_theta(c: Sequence[RationalExpr], ctx: Context | None = None) -> tuple:
    c = list(c)
    ctx = ctx or c[0].ctx
    c = [ctx.const(v) if not isinstance(v, RationalExpr) else v for v in c]
    c1, c2, c3, c4, c5 = c
    dc = [d(f) for f in c]
    T1 = dc[0] - (2 * c4) * dc[2] - (4 * c3) * dc[3]
    T2 = dc[1] + (2 * c5) * dc[2] + (4 * c3) * dc[4]
    T3 = dc[2] + c5 * dc[3] - c4 * dc[4]
    return T1, T2, T3


def engel_coordinates(c):
    c1, c2, c3, c4, c5 = c
    return (c5, c4, c3, (c2 + 3 * c3 * c5) / 2, (c1 - 3 * c3 * c4) / 2)


def engel_from_r(r):
    r1, r2, r3, r4, r5 = r
    dr = [d(f) for f in r]
    e1 = dr[2] + r1 * dr[1] - r2 * dr[0]
    e2 = dr[3] + (r3 / 2) * dr[0] - (r1 / 2) * dr[2]
    e3 = dr[4] + (r2 / 2) * dr[2] - (r3 / 2) * dr[1]
    return e1, e2, e3


@lru_cache(maxsize=None)
def flat_c_context() -> Context:
    return Context(["c1", "c2", "c3", "c4", "c5"], [SQRT3], name="flat_c")


def engel_check(perturb=None) -> dict:
    """Exact check of the three Engel relations on the flat c-chart.

    ``perturb`` optionally maps an index 0..4 to an expression added to that
    Engel coordinate (a falsification control).
    """
    ctx = flat_c_context()
    c = ctx.syms("c1 c2 c3 c4 c5")
    r = list(engel_coordinates(c))
    for i, extra in (perturb or {}).items():
        r[i] = r[i] + (ctx.parse(extra) if isinstance(extra, str) else extra)
    e1, e2, e3 = engel_from_r(r)
    T1, T2, T3 = big_theta(c, ctx)
    return {
        "dr3 + r1 dr2 - r2 dr1 = Theta3": e1 == T3,
        "dr4 + (r3 dr1 - r1 dr3)/2 = Theta2/2": e2 == T2 / 2,
        "dr5 + (r2 dr3 - r3 dr2)/2 = Theta1/2": e3 == T1 / 2,
    }


# ------------------------------------------------------------------ recipes
def monge_model(phi: RationalExpr, name: str = "monge", **extra) -> DistributionModel:
    ctx = phi.ctx
    if len(ctx.coordinates) != 5:
        raise ValueError("a Monge chart has five coordinates")
    x, y, z, p, q = ctx.coordinates
    P, Q = ctx.sym(p), ctx.sym(q)
    dx = DiffForm.d(ctx, x)
    w1 = DiffForm.d(ctx, y) - P * dx
    w2 = DiffForm.d(ctx, p) - Q * dx
    w3 = DiffForm.d(ctx, z) - phi * dx
    X1 = VectorField.coordinate(ctx, q)
    X2 = VectorField(ctx, [1, P, phi, Q, 0])
    model = DistributionModel(name, ctx, (w1, w2, w3), (X1, X2), **extra)
    model.check_annihilation()
    return model


def z_fields(model_or_cfuncs, ctx: Context | None = None) -> tuple:
    """Z1, Z2, Z3 in chart coordinates from the dual frame of c1..c5."""
    if isinstance(model_or_cfuncs, DistributionModel):
        c = model_or_cfuncs.cfuncs
        ctx = model_or_cfuncs.ctx
        if c is None:
            raise ValueError(f"model {model_or_cfuncs.name} has no c-functions")
    else:
        c = model_or_cfuncs
        ctx = ctx or c[0].ctx
    V = dual_frame(list(c), ctx)
    c1, c2, c3, c4, c5 = c
    Z1 = express_in_frame(V, [-2 * c4, 2 * c5, 1, 0, 0])
    Z2 = express_in_frame(V, [4 * c3, 0, -2 * c5, 1, 0])
    Z3 = express_in_frame(V, [0, -4 * c3, 2 * c4, 0, 1])
    return Z1, Z2, Z3


def seeds_from_z(c, Z) -> tuple:
    c1, c2, c3, c4, c5 = c
    Z1, Z2, Z3 = Z
    S1 = Z2 + c5 * Z1
    S2 = Z3 - c4 * Z1
    S3 = -c1 * Z2 + c2 * Z3 - (c1 * c5 + c2 * c4 + c3**2) * Z1
    return S1, S2, S3


def seed_triple(model: DistributionModel) -> tuple:
    if model.seeds is None:
        Z = z_fields(model)
        model.seeds = seeds_from_z(model.cfuncs, Z)
        model.displays.setdefault("_recipe_Z", Z)
    return model.seeds


def theta_pullbacks(model: DistributionModel) -> tuple:
    """theta1..theta3 pulled back along the model's a-map."""
    if model.amap is None:
        raise ValueError(f"model {model.name} has no a-map")
    return theta_forms(model.ctx, model.amap.images)[:3]


def theta_span(model: DistributionModel, forms=None) -> list:
    """Coefficient rows of the given forms (default: theta pullbacks) in the omegas."""
    forms = forms if forms is not None else theta_pullbacks(model)
    return [span_coefficients(f, list(model.omegas)) for f in forms]
