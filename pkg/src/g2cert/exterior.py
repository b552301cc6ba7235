"""Differential forms and vector fields on a chart.

Forms are stored as ``{key: coefficient}`` where a key is a strictly
increasing tuple of coordinate indices (chart order).  ``dx_i ^ dx_j`` with
``i > j`` is stored under ``(j, i)`` with a sign flip; every sign in this
module comes from that one sorting rule.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .linalg import SingularMatrix, bareiss_inverse
from .symcore import Context, RationalExpr, substitute
from .symcore.errors import ContextMismatch, SymcoreError


class DegreeOverflow(SymcoreError):
    pass


class DegenerateBasis(SymcoreError):
    pass


class SingularJacobian(SymcoreError):
    pass


class NotInSpan(SymcoreError):
    """Raised by :func:`span_coefficients`; carries the elimination remainder."""

    def __init__(self, residual: "DiffForm", coefficients: list):
        super().__init__(f"form is not in the span; residual {residual}")
        self.residual = residual
        self.coefficients = coefficients


def _same(ctx, other):
    if other.ctx is not ctx:
        raise ContextMismatch(f"{other.ctx!r} vs {ctx!r}")


def _scalar(ctx, c):
    if isinstance(c, RationalExpr):
        _same(ctx, c)
        return c
    if isinstance(c, (int, Fraction)):
        return ctx.const(c)
    if isinstance(c, str):
        return ctx.parse(c)
    raise TypeError(f"cannot use {c!r} as a scalar")


# --------------------------------------------------------------------- fields
class VectorField:
    __slots__ = ("ctx", "components", "_common")

    def __init__(self, ctx: Context, components: Sequence):
        if len(components) != ctx.dim:
            raise ValueError(f"expected {ctx.dim} components, got {len(components)}")
        self.ctx = ctx
        self.components = tuple(_scalar(ctx, c) for c in components)
        self._common = None

    @classmethod
    def coordinate(cls, ctx: Context, name: str) -> "VectorField":
        i = ctx.coordinates.index(name)
        return cls(ctx, [ctx.one if j == i else ctx.zero for j in range(ctx.dim)])

    @classmethod
    def from_dict(cls, ctx: Context, comps: Mapping) -> "VectorField":
        """Build from ``{coordinate: coefficient}``; missing entries are zero."""
        bad = [k for k in comps if k not in ctx.coordinates]
        if bad:
            raise ValueError(f"not coordinates of {ctx!r}: {bad}")
        return cls(ctx, [comps.get(c, 0) for c in ctx.coordinates])

    def __getitem__(self, name):
        if isinstance(name, int):
            return self.components[name]
        return self.components[self.ctx.coordinates.index(name)]

    def __call__(self, f):
        return apply(self, f)

    def __add__(self, other):
        _same(self.ctx, other)
        return VectorField(self.ctx, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        _same(self.ctx, other)
        return VectorField(self.ctx, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField(self.ctx, [-a for a in self.components])

    def __mul__(self, c):
        c = _scalar(self.ctx, c)
        return VectorField(self.ctx, [c * a for a in self.components])

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = _scalar(self.ctx, c)
        return self * c.inverse()

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.ctx is other.ctx and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def is_zero(self) -> bool:
        return not any(self.components)

    def subs(self, bindings, ctx_out: Context | None = None) -> "VectorField":
        ctx_out = ctx_out or self.ctx
        return VectorField(ctx_out, [substitute(c, bindings, ctx_out) for c in self.components])

    def __str__(self):
        parts = [f"({c})*d_{n}" for c, n in zip(self.components, self.ctx.coordinates) if c]
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def apply(X: VectorField, f) -> RationalExpr:
    """Directional derivative ``X(f)``."""
    ctx = X.ctx
    f = _scalar(ctx, f)
    out = ctx.zero
    for c, name in zip(X.components, ctx.coordinates):
        if c and f.depends_on(name) or (c and name == ctx.independent):
            df = f.diff(name)
            if df:
                out = out + c * df
    return out


def _common_form(X: VectorField):
    """(D, [N_k]) with X = (1/D) sum N_k d_k, all polynomial."""
    if X._common is None:
        D = X.ctx.ring.one
        for c in X.components:
            if c.num and c.den != 1:
                D = D.lcm(c.den)
        X._common = (D, [c.num * D.exquo(c.den) if c.num else c.num for c in X.components])
    return X._common


def _scaled_apply(ctx: Context, N, f):
    """sum_k N_k * (lam * d_k f) as a polynomial, lam = ctx's rate denominator."""
    from .symcore.core import _dpoly_independent

    lam = ctx._rate_den
    out = ctx.ring.zero
    for k, nk in enumerate(N):
        if not nk:
            continue
        if k == 0:
            df = _dpoly_independent(ctx, f)
        else:
            df = f.diff(ctx.gens[k])
            if df and lam != 1:
                df = df * lam
        if df:
            out += nk * df
    return out


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] on a common denominator, cancelled against the factors of Dx, Dy.

    With X = N/Dx, Y = M/Dy and A_X(f) = lam * X(f) * Dx,
    [X,Y]^i = (DxDy(A_X(M_i) - A_Y(N_i)) - Dx M_i A_X(Dy) + Dy N_i A_Y(Dx)) / (lam Dx^2 Dy^2).
    """
    from .symcore.core import _from_factored

    _same(X.ctx, Y)
    ctx = X.ctx
    Dx, N = _common_form(X)
    Dy, M = _common_form(Y)
    a = _scaled_apply(ctx, N, Dy) if Dy != 1 else ctx.ring.zero
    b = _scaled_apply(ctx, M, Dx) if Dx != 1 else ctx.ring.zero
    DxDy = Dx * Dy
    dens = (ctx._rate_den, Dx, Dx, Dy, Dy)
    comps = []
    for Ni, Mi in zip(N, M):
        num = DxDy * (_scaled_apply(ctx, N, Mi) - _scaled_apply(ctx, M, Ni))
        if Mi and a:
            num -= Dx * Mi * a
        if Ni and b:
            num += Dy * Ni * b
        comps.append(_from_factored(ctx, num, dens))
    return VectorField(ctx, comps)


def _lie_bracket_direct(X: VectorField, Y: VectorField) -> VectorField:
    """Componentwise X(Y^i) - Y(X^i); the reference route for tests."""
    _same(X.ctx, Y)
    return VectorField(X.ctx, [apply(X, b) - apply(Y, a) for a, b in zip(X.components, Y.components)])


# ---------------------------------------------------------------------- forms
def _merge_sign(k1, k2):
    """Sign of sorting the concatenation k1 + k2 (both increasing, disjoint)."""
    inv = 0
    for a in k1:
        for b in k2:
            if a > b:
                inv += 1
    return -1 if inv % 2 else 1


class DiffForm:
    __slots__ = ("ctx", "degree", "coeffs")

    def __init__(self, ctx: Context, degree: int, coeffs: Mapping | None = None):
        if not 0 <= degree <= ctx.dim:
            raise DegreeOverflow(f"degree {degree} outside 0..{ctx.dim}")
        self.ctx = ctx
        self.degree = degree
        clean = {}
        for key, c in (coeffs or {}).items():
            key = tuple(key)
            if len(key) != degree or any(a >= b for a, b in zip(key, key[1:])):
                raise ValueError(f"bad key {key} for a {degree}-form")
            c = _scalar(ctx, c)
            if c:
                clean[key] = c
        self.coeffs = clean

    # builders
    @classmethod
    def function(cls, f: RationalExpr) -> "DiffForm":
        return cls(f.ctx, 0, {(): f})

    @classmethod
    def d(cls, ctx: Context, name: str) -> "DiffForm":
        return cls(ctx, 1, {(ctx.coordinates.index(name),): ctx.one})

    @classmethod
    def one_form(cls, ctx: Context, comps: Mapping) -> "DiffForm":
        """``{coordinate: coefficient}`` to the 1-form sum c * d(coordinate)."""
        return cls(ctx, 1, {(ctx.coordinates.index(k),): v for k, v in comps.items()})

    def component(self, *names) -> RationalExpr:
        """Coefficient on d(names[0]) ^ ... (names in any order, sign applied)."""
        idx = [self.ctx.coordinates.index(n) for n in names]
        order = sorted(range(len(idx)), key=lambda i: idx[i])
        sign = _perm_sign(order)
        c = self.coeffs.get(tuple(sorted(idx)), self.ctx.zero)
        return c if sign > 0 else -c

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def _check(self, other):
        _same(self.ctx, other)
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return DiffForm(self.ctx, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return DiffForm(self.ctx, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __mul__(self, c):
        if isinstance(c, DiffForm):
            return wedge(self, c)
        c = _scalar(self.ctx, c)
        return DiffForm(self.ctx, self.degree, {k: c * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __truediv__(self, c):
        return self * _scalar(self.ctx, c).inverse()

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self.ctx is other.ctx and self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degree, frozenset(self.coeffs.items())))

    def subs(self, bindings, ctx_out: Context | None = None) -> "DiffForm":
        """Substitute into coefficients only (the chart is unchanged)."""
        ctx_out = ctx_out or self.ctx
        if ctx_out.coordinates != self.ctx.coordinates:
            raise ContextMismatch("coefficient substitution needs the same coordinates")
        return DiffForm(ctx_out, self.degree, {k: substitute(v, bindings, ctx_out) for k, v in self.coeffs.items()})

    def __str__(self):
        if not self.coeffs:
            return "0"
        names = self.ctx.coordinates
        parts = []
        for k in sorted(self.coeffs):
            basis = "^".join(f"d{names[i]}" for i in k)
            parts.append(f"({self.coeffs[k]})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)

    __repr__ = __str__


def _perm_sign(order):
    order = list(order)
    sign = 1
    for i in range(len(order)):
        while order[i] != i:
            j = order[i]
            order[i], order[j] = order[j], order[i]
            sign = -sign
    return sign


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    _same(a.ctx, b)
    deg = a.degree + b.degree
    if deg > a.ctx.dim:
        raise DegreeOverflow(f"wedge of degrees {a.degree} and {b.degree} exceeds {a.ctx.dim}")
    out: dict = {}
    for k1, c1 in a.coeffs.items():
        s1 = set(k1)
        for k2, c2 in b.coeffs.items():
            if s1.intersection(k2):
                continue
            key = tuple(sorted(k1 + k2))
            t = c1 * c2
            if _merge_sign(k1, k2) < 0:
                t = -t
            out[key] = out[key] + t if key in out else t
    return DiffForm(a.ctx, deg, out)


def exterior_d(a: DiffForm) -> DiffForm:
    ctx = a.ctx
    if a.degree >= ctx.dim:
        raise DegreeOverflow("exterior derivative of a top-degree form")
    out: dict = {}
    ind = ctx.independent
    for key, c in a.coeffs.items():
        for j, name in enumerate(ctx.coordinates):
            if j in key or not (name == ind or c.depends_on(name)):
                continue
            dc = c.diff(name)
            if not dc:
                continue
            pos = sum(1 for i in key if i < j)
            new = tuple(sorted(key + (j,)))
            t = -dc if pos % 2 else dc
            out[new] = out[new] + t if new in out else t
    return DiffForm(ctx, a.degree + 1, out)


def d(f) -> DiffForm:
    """Exterior derivative of a function or form."""
    if isinstance(f, RationalExpr):
        f = DiffForm.function(f)
    return exterior_d(f)


def _interior(X: VectorField, a: DiffForm) -> DiffForm:
    _same(X.ctx, a)
    if a.degree == 0:
        return DiffForm(a.ctx, 0)
    out: dict = {}
    for key, c in a.coeffs.items():
        for pos, i in enumerate(key):
            xi = X.components[i]
            if not xi:
                continue
            new = key[:pos] + key[pos + 1:]
            t = xi * c
            if pos % 2:
                t = -t
            out[new] = out[new] + t if new in out else t
    return DiffForm(a.ctx, a.degree - 1, out)


def lie_derivative(X: VectorField, a: DiffForm) -> DiffForm:
    """Cartan's formula ``d(i_X a) + i_X(d a)``."""
    _same(X.ctx, a)
    if a.degree == 0:
        return DiffForm.function(apply(X, a.coeffs.get((), a.ctx.zero)))
    first = exterior_d(_interior(X, a))
    if a.degree == a.ctx.dim:
        return first
    return first + _interior(X, exterior_d(a))


# ------------------------------------------------------------------- pullback
class CoordinateMap:
    """``source -> target`` given by target coordinates as functions on source.

    Atoms that appear in target-side coefficients are matched by name in the
    source context, unless ``atom_images`` supplies an expression for them.
    """

    def __init__(self, source: Context, target: Context, images: Sequence, atom_images: Mapping | None = None):
        if len(images) != target.dim:
            raise ValueError(f"expected {target.dim} images, got {len(images)}")
        self.source = source
        self.target = target
        self.images = tuple(_scalar(source, e) for e in images)
        self.atom_images = {k: _scalar(source, v) for k, v in (atom_images or {}).items()}
        self._d_images = None

    @property
    def bindings(self) -> dict:
        out = dict(zip(self.target.coordinates, self.images))
        out.update(self.atom_images)
        return out

    def pull_function(self, f: RationalExpr) -> RationalExpr:
        _same(self.target, f)
        return substitute(f, self.bindings, self.source)

    def d_images(self) -> list:
        if self._d_images is None:
            self._d_images = [d(e) for e in self.images]
        return self._d_images

    def jacobian(self) -> list:
        """Rows: target coordinates; columns: source coordinates."""
        return [[e.diff(s) for s in self.source.coordinates] for e in self.images]


def pullback(m: CoordinateMap, a: DiffForm) -> DiffForm:
    _same(m.target, a)
    src = m.source
    dimg = m.d_images()
    total = DiffForm(src, a.degree)
    bind = m.bindings
    for key, c in a.coeffs.items():
        f = DiffForm.function(substitute(c, bind, src))
        for i in key:
            f = wedge(f, dimg[i])
            if not f:
                break
        if f:
            total = total + f
    return total


# ----------------------------------------------------------------- span/frame
def span_coefficients(a: DiffForm, basis: Sequence[DiffForm]) -> list[RationalExpr]:
    """Coefficients of ``a`` in ``basis``, or raise :class:`NotInSpan`.

    Elimination runs in basis order; the pivot of each basis element is its
    last surviving key in chart order.  The residual is what remains of
    ``a`` after eliminating every pivot.
    """
    ctx = a.ctx
    m = len(basis)
    for b in basis:
        _same(ctx, b)
        if b.degree != a.degree:
            raise ValueError("basis forms must have the degree of the form")
    pivots = []  # (key, reduced row (dict), combination over the basis)
    for i, b in enumerate(basis):
        row = dict(b.coeffs)
        combo = [ctx.one if j == i else ctx.zero for j in range(m)]
        for key, prow, pcombo in pivots:
            c = row.get(key)
            if c:
                row = _axpy(row, -c, prow)
                combo = [x - c * y for x, y in zip(combo, pcombo)]
        if not row:
            raise DegenerateBasis(f"basis element {i} is dependent on the previous ones")
        key = max(row)
        inv = row[key].inverse()
        row = {k: v * inv for k, v in row.items()}
        combo = [x * inv for x in combo]
        pivots.append((key, row, combo))
    rest = dict(a.coeffs)
    coeffs = [ctx.zero] * m
    for key, prow, pcombo in pivots:
        c = rest.get(key)
        if c:
            rest = _axpy(rest, -c, prow)
            coeffs = [x + c * y for x, y in zip(coeffs, pcombo)]
    if rest:
        raise NotInSpan(DiffForm(ctx, a.degree, rest), coeffs)
    return coeffs


def _axpy(x: dict, c, y: dict) -> dict:
    out = dict(x)
    for k, v in y.items():
        t = c * v
        if k in out:
            s = out[k] + t
            if s:
                out[k] = s
            else:
                del out[k]
        elif t:
            out[k] = t
    return out


def in_span(a: DiffForm, basis: Sequence[DiffForm]) -> bool:
    try:
        span_coefficients(a, basis)
    except NotInSpan:
        return False
    return True


def dual_frame(funcs: Sequence[RationalExpr], ctx: Context) -> list[VectorField]:
    """Fields ``V_i`` with ``V_i(funcs[j]) == delta_ij``."""
    if len(funcs) != ctx.dim:
        raise ValueError(f"need {ctx.dim} functions")
    funcs = [_scalar(ctx, f) for f in funcs]
    jac = [[f.diff(s) for s in ctx.coordinates] for f in funcs]
    try:
        inv = bareiss_inverse(ctx, jac)
    except SingularMatrix as exc:
        raise SingularJacobian(str(exc)) from None
    n = ctx.dim
    return [VectorField(ctx, [inv[k][i] for k in range(n)]) for i in range(n)]


def coordinate_frame(ctx: Context) -> list[VectorField]:
    return [VectorField.coordinate(ctx, c) for c in ctx.coordinates]


def express_in_frame(frame: Sequence[VectorField], coeffs: Iterable) -> VectorField:
    """``sum coeffs[i] * frame[i]``."""
    frame = list(frame)
    out = VectorField(frame[0].ctx, [0] * frame[0].ctx.dim)
    for c, v in zip(coeffs, frame):
        c = _scalar(v.ctx, c)
        if c:
            out = out + c * v
    return out
