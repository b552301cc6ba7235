"""Canonical rational functions over Q on a chart of symbols.

A :class:`Context` fixes an ordered list of symbols (chart coordinates first,
then atoms in stratification order) and the rules attached to the atoms:
derivative rules for dynamic atoms and algebraic relations ``atom**n -> r``.
Every :class:`RationalExpr` is kept in canonical form:

* the numerator is reduced modulo the algebraic relations,
* the denominator contains no algebraic atom (it is rationalised),
* numerator and denominator are coprime and the denominator is monic in
  graded-lex order.

Structural equality of canonical forms is therefore semantic equality, which
is what makes :func:`is_zero` an exact test.

Polynomial arithmetic and multivariate gcd are delegated to sympy's sparse
``PolyRing`` (heuristic gcd over Z with gmpy2 integers).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

from .errors import (
    ContextMismatch,
    InconsistentAlgebraicValue,
    PoleAtPoint,
    UndeclaredSymbol,
    UndefinedDerivative,
    ZeroDenominator,
)

CONSTANT = "constant"
DYNAMIC = "dynamic"
COORDINATE = "coordinate"

Number = Union[int, Fraction]
RuleSpec = Union[str, int, Fraction, "RationalExpr", Callable[["Context"], "RationalExpr"], None]


@dataclass(frozen=True)
class Atom:
    """A non-coordinate symbol of a chart.

    ``dx`` is the derivative with respect to the chart's independent
    coordinate (dynamic atoms only); ``relation`` is ``(n, replacement)``
    meaning ``atom**n == replacement``.  Rules may be given as expression
    strings, numbers, expressions or callables taking the context.
    """

    name: str
    kind: str = CONSTANT
    dx: RuleSpec = None
    relation: tuple | None = None

    def __post_init__(self):
        if self.kind not in (CONSTANT, DYNAMIC):
            raise ValueError(f"atom kind must be constant or dynamic, got {self.kind!r}")
        if self.kind == CONSTANT and self.dx is not None:
            raise ValueError(f"constant atom {self.name!r} cannot carry a derivative rule")
        if self.relation is not None and int(self.relation[0]) < 2:
            raise ValueError("relation power must be >= 2")


def constant(name: str, relation=None) -> Atom:
    return Atom(name, CONSTANT, None, relation)


def dynamic(name: str, dx: RuleSpec = None, relation=None) -> Atom:
    return Atom(name, DYNAMIC, dx, relation)


def jet(name: str, order: int, start: int = 0) -> list[Atom]:
    """Free differential indeterminates ``name{start}, ..., name{order}``.

    Each derivative is the next symbol of the chain; the top symbol has no
    rule and raises :class:`UndefinedDerivative` when differentiated.
    """
    atoms = []
    for i in range(start, order + 1):
        nxt = f"{name}{i + 1}" if i < order else None
        atoms.append(Atom(f"{name}{i}", DYNAMIC, nxt))
    return atoms


class Context:
    """A chart: ordered coordinates plus an atom registry.

    The first coordinate is the independent one: dynamic atoms differentiate
    by their rule along it and to zero along every other coordinate.
    """

    def __init__(self, coordinates: Iterable[str], atoms: Iterable[Atom] = (), name: str | None = None):
        coordinates = tuple(coordinates)
        atoms = tuple(atoms)
        if not coordinates:
            raise ValueError("a context needs at least one coordinate")
        names = list(coordinates) + [a.name for a in atoms]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate symbol names: {dup}")
        self.name = name
        self.coordinates = coordinates
        self.atoms = {a.name: a for a in atoms}
        self.symbols = tuple(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.ring = PolyRing(names, QQ, grlex)
        self.gens = self.ring.gens
        self._relations: list[tuple[int, int, object]] = []
        self._relation_powers: dict[int, list] = {}
        for a in atoms:
            if a.relation is None:
                continue
            power, spec = int(a.relation[0]), a.relation[1]
            repl = self._resolve(spec)
            if not repl.is_polynomial():
                raise ValueError(f"relation replacement for {a.name!r} must be polynomial")
            i = self.index[a.name]
            late = [s for s in repl.free_symbols() if self.index[s] >= i]
            if late:
                raise ValueError(
                    f"relation for {a.name!r} references {late}, which are not declared before it"
                )
            self._relations.append((i, power, repl.num))
        self._algebraic = {i for i, _, _ in self._relations}
        self.rules: dict[str, RationalExpr] = {}
        for a in atoms:
            if a.kind == DYNAMIC and a.dx is not None:
                self.rules[a.name] = self._resolve(a.dx)
        self._build_rates()

    # ------------------------------------------------------------------ setup
    def _resolve(self, spec) -> "RationalExpr":
        if isinstance(spec, RationalExpr):
            return self.lift(spec)
        if isinstance(spec, str):
            from .parser import parse_expr

            return parse_expr(spec, self)
        if isinstance(spec, (int, Fraction)):
            return self.const(spec)
        if callable(spec):
            return self.lift(spec(self))
        raise TypeError(f"cannot interpret rule {spec!r}")

    def _build_rates(self):
        # d/d(independent) of a polynomial f is (sum_s df/ds * rate_num[s]) / rate_den
        rules = self.rules
        den = self.ring.one
        for r in rules.values():
            den = den.lcm(r.den) if r.den != 1 else den
        den = den.monic()
        rates = {0: den}
        for name, r in rules.items():
            rates[self.index[name]] = r.num * den.exquo(r.den) if r.den != 1 else r.num * den
        self._rate_num = rates
        self._rate_den = den
        self._no_rule = {
            self.index[a.name] for a in self.atoms.values() if a.kind == DYNAMIC and a.name not in rules
        }

    # --------------------------------------------------------------- builders
    @property
    def independent(self) -> str:
        return self.coordinates[0]

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def __repr__(self):
        return f"Context({self.name or ','.join(self.coordinates)})"

    def sym(self, name: str) -> "RationalExpr":
        try:
            i = self.index[name]
        except KeyError:
            raise UndeclaredSymbol(name, self.name) from None
        return RationalExpr(self, self.gens[i], self.ring.one)

    def syms(self, names: str) -> tuple:
        return tuple(self.sym(n) for n in names.replace(",", " ").split())

    def const(self, value) -> "RationalExpr":
        if isinstance(value, RationalExpr):
            return self.lift(value)
        f = Fraction(value)
        return RationalExpr(self, self.ring(QQ(f.numerator, f.denominator)), self.ring.one)

    @property
    def zero(self) -> "RationalExpr":
        return RationalExpr(self, self.ring.zero, self.ring.one)

    @property
    def one(self) -> "RationalExpr":
        return RationalExpr(self, self.ring.one, self.ring.one)

    def parse(self, text: str) -> "RationalExpr":
        from .parser import parse_expr

        return parse_expr(text, self)

    def __call__(self, value) -> "RationalExpr":
        if isinstance(value, str):
            return self.parse(value)
        return self.const(value)

    def kind(self, name: str) -> str:
        if name in self.coordinates:
            return COORDINATE
        try:
            return self.atoms[name].kind
        except KeyError:
            raise UndeclaredSymbol(name, self.name) from None

    def is_algebraic(self, name: str) -> bool:
        return self.index.get(name) in self._algebraic

    def relations(self) -> list[tuple[str, int, "RationalExpr"]]:
        return [(self.symbols[i], n, RationalExpr(self, r, self.ring.one)) for i, n, r in self._relations]

    def extend(self, atoms: Iterable[Atom], name: str | None = None) -> "Context":
        """A new context with extra atoms appended (existing rules kept)."""
        old = []
        for a in self.atoms.values():
            dx = self.rules.get(a.name)
            rel = None
            if a.relation is not None:
                rel = (a.relation[0], _rule_text(self, a.relation[1]))
            old.append(Atom(a.name, a.kind, str(dx) if dx is not None else (a.dx if isinstance(a.dx, str) else None), rel))
        return Context(self.coordinates, old + list(atoms), name or self.name)

    def lift(self, e: "RationalExpr") -> "RationalExpr":
        """Re-home an expression from another context by symbol names."""
        if e.ctx is self:
            return e
        missing = [s for s in e.free_symbols() if s not in self.index]
        if missing:
            raise UndeclaredSymbol(missing[0], self.name)
        return _from_pair(self, e.num.set_ring(self.ring), e.den.set_ring(self.ring))

    # ------------------------------------------------------------- internals
    def _reduce(self, f):
        """Reduce polynomial f modulo the algebraic relations."""
        if not self._relations or not f:
            return f, False
        changed = False
        for i, n, repl in reversed(self._relations):
            if f.degree(self.gens[i]) < n:
                continue
            changed = True
            powers = self._relation_powers.setdefault(i, [self.ring.one])
            out = self.ring.zero
            keep = {}
            buckets: dict[int, dict] = {}
            for monom, coeff in f.items():
                e = monom[i]
                if e < n:
                    keep[monom] = coeff
                    continue
                q, rem = divmod(e, n)
                m = monom[:i] + (rem,) + monom[i + 1:]
                buckets.setdefault(q, {})[m] = coeff
            out = self.ring.from_dict(keep) if keep else self.ring.zero
            for q, terms in buckets.items():
                while len(powers) <= q:
                    powers.append(powers[-1] * repl)
                out += self.ring.from_dict(terms) * powers[q]
            f = out
        # a replacement may create powers of earlier algebraic atoms
        if any(f.degree(self.gens[i]) >= n for i, n, _ in self._relations):
            f, _ = self._reduce(f)
        return f, changed

    def _rationalize(self, num, den):
        """Clear algebraic atoms from den by multiplying with the norm cofactor."""
        for i, n, repl in reversed(self._relations):
            if den.degree(self.gens[i]) <= 0:
                continue
            s = self.gens[i]
            # multiplication-by-den matrix on the basis 1, s, ..., s^(n-1)
            cols = []
            cur = den
            for j in range(n):
                cols.append(_coeffs_in(cur, i, n, self.ring))
                cur, _ = self._reduce(cur * s)
            matrix = [[cols[j][r] for j in range(n)] for r in range(n)]
            norm = _det(matrix, self.ring)
            if not norm:
                raise ZeroDenominator("denominator vanishes modulo an algebraic relation")
            cof = self.ring.zero
            for j in range(n):
                minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
                c = _det(minor, self.ring) if minor else self.ring.one
                if j % 2:
                    c = -c
                if c:
                    cof += c * s**j
            num, _ = self._reduce(num * cof)
            den, _ = self._reduce(norm)
        return num, den


def _rule_text(ctx: Context, spec):
    if isinstance(spec, str):
        return spec
    return str(ctx._resolve(spec))


def _coeffs_in(f, i, n, ring):
    out = [{} for _ in range(n)]
    for monom, coeff in f.items():
        e = monom[i]
        out[e][monom[:i] + (0,) + monom[i + 1:]] = coeff
    return [ring.from_dict(d) if d else ring.zero for d in out]


def _det(m, ring):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = ring.zero
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        t = m[0][j] * _det(minor, ring)
        total = total - t if j % 2 else total + t
    return total


def _from_pair(ctx: Context, num, den) -> "RationalExpr":
    """Normalize a numerator/denominator pair into canonical form."""
    if not den:
        raise ZeroDenominator("zero denominator")
    if not num:
        return RationalExpr(ctx, ctx.ring.zero, ctx.ring.one)
    if ctx._relations:
        num, _ = ctx._reduce(num)
        den, _ = ctx._reduce(den)
        if not den:
            raise ZeroDenominator("denominator reduces to zero")
        if any(den.degree(ctx.gens[i]) > 0 for i in ctx._algebraic):
            num, den = ctx._rationalize(num, den)
        if not num:
            return RationalExpr(ctx, ctx.ring.zero, ctx.ring.one)
    if den != 1:
        if den.is_ground:
            num = num.quo_ground(den.LC)
            den = ctx.ring.one
        else:
            _, num, den = num.cofactors(den)
            lc = den.LC
            if lc != 1:
                num = num.quo_ground(lc)
                den = den.quo_ground(lc)
    return RationalExpr(ctx, num, den)


def _factors(ctx: Context, f) -> list:
    """Irreducible factors of an atom-free polynomial over QQ, cached per context."""
    cache = ctx.__dict__.setdefault("_factor_cache", {})
    out = cache.get(f)
    if out is None:
        out = [(g, e) for g, e in f.factor_list()[1] if not g.is_ground]
        cache[f] = out
    return out


def _grlex_desc(m):
    return (-sum(m), tuple(-e for e in m))


def _exact_quotient(f, g):
    """f / g when g divides f exactly (grlex heap division), else None."""
    ring = f.ring
    lm = max(g.itermonoms(), key=lambda m: (sum(m), m))
    lc = g[lm]
    tail = [(m, c) for m, c in g.items() if m != lm]
    rem = dict(f.items())
    heap = [(_grlex_desc(m), m) for m in rem]
    heapq.heapify(heap)
    queued = set(rem)
    quo = {}
    while heap:
        _, m = heapq.heappop(heap)
        queued.discard(m)
        c = rem.pop(m, None)
        if c is None:
            continue
        qm = tuple(a - b for a, b in zip(m, lm))
        if min(qm) < 0:
            return None
        qc = c / lc
        quo[qm] = qc
        for tm, tc in tail:
            mm = tuple(a + b for a, b in zip(qm, tm))
            v = rem.get(mm, 0) - qc * tc
            if v:
                rem[mm] = v
                if mm not in queued:
                    queued.add(mm)
                    heapq.heappush(heap, (_grlex_desc(mm), mm))
            else:
                rem.pop(mm, None)
    return ring.from_dict(quo)


def _from_factored(ctx: Context, num, dens) -> "RationalExpr":
    """Normalize num / prod(dens) by trial division with the factors of each den.

    Equivalent to :func:`_from_pair` when every den is free of algebraic
    atoms; the gcd with a large numerator is replaced by exact divisions.
    """
    if any(d.degree(ctx.gens[i]) > 0 for d in dens for i in ctx._algebraic):
        den = ctx.ring.one
        for d in dens:
            den = den * d
        return _from_pair(ctx, num, den)
    if not num:
        return RationalExpr(ctx, ctx.ring.zero, ctx.ring.one)
    if ctx._relations:
        num, _ = ctx._reduce(num)
        if not num:
            return RationalExpr(ctx, ctx.ring.zero, ctx.ring.one)
    mult: dict = {}
    den = ctx.ring.one
    for d in dens:
        den = den * d
        for g, e in _factors(ctx, d):
            mult[g] = mult.get(g, 0) + e
    removed = ctx.ring.one
    for g, e in mult.items():
        for _ in range(e):
            q = _exact_quotient(num, g)
            if q is None:
                break
            num = q
            removed = removed * g
    if removed != 1:
        den = den.exquo(removed)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return RationalExpr(ctx, num, den)


def _coerce(ctx: Context, other) -> "RationalExpr":
    if isinstance(other, RationalExpr):
        if other.ctx is not ctx:
            raise ContextMismatch(f"{other.ctx!r} vs {ctx!r}")
        return other
    if isinstance(other, (int, Fraction)):
        return ctx.const(other)
    return NotImplemented


class RationalExpr:
    """Immutable canonical rational function living in a :class:`Context`."""

    __slots__ = ("ctx", "num", "den", "_hash")

    def __init__(self, ctx: Context, num, den):
        self.ctx = ctx
        self.num = num
        self.den = den
        self._hash = None

    # ----------------------------------------------------------- predicates
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def is_polynomial(self) -> bool:
        return self.den == 1

    def is_constant_number(self) -> bool:
        return self.den == 1 and self.num.is_ground

    def as_fraction(self) -> Fraction:
        if not self.is_constant_number():
            raise ValueError(f"{self} is not a rational number")
        c = QQ.convert(self.num.LC) if self.num else QQ(0)
        return Fraction(int(c.numerator), int(c.denominator))

    def free_symbols(self) -> list[str]:
        degs = [max(a, b) for a, b in zip(self.num.degrees(), self.den.degrees())]
        return [s for s, d in zip(self.ctx.symbols, degs) if d > 0]

    def depends_on(self, name: str) -> bool:
        g = self.ctx.gens[self.ctx.index[name]]
        return self.num.degree(g) > 0 or self.den.degree(g) > 0

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, RationalExpr):
            return NotImplemented
        if other.ctx is not self.ctx:
            return False
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((id(self.ctx), frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    # ----------------------------------------------------------- arithmetic
    def __neg__(self):
        return RationalExpr(self.ctx, -self.num, self.den)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        ring = self.ctx.ring
        if b == 1 and d == 1:
            return RationalExpr(self.ctx, a + c, ring.one)
        if b == d:
            t = a + c
            if not t:
                return self.ctx.zero
            g, t, den = t.cofactors(b)
            return _monic(self.ctx, t, den)
        if b == 1:
            return RationalExpr(self.ctx, a * d + c, d)
        if d == 1:
            return RationalExpr(self.ctx, a + c * b, b)
        g, b1, d1 = b.cofactors(d)
        t = a * d1 + c * b1
        if not t:
            return self.ctx.zero
        if g == 1:
            return _monic(self.ctx, t, b * d)
        # Henrici: only the common factor g can cancel against t
        _, t, gq = t.cofactors(g)
        return _monic(self.ctx, t, b1 * d1 * gq)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        ctx = self.ctx
        if not self.num or not other.num:
            return ctx.zero
        a, b, c, d = self.num, self.den, other.num, other.den
        if b != 1 and c != 1 and not c.is_ground:
            g, c, b = c.cofactors(b)
        if d != 1 and a != 1 and not a.is_ground:
            g, a, d = a.cofactors(d)
        num = a * c
        den = b * d
        if ctx._relations:
            num, changed = ctx._reduce(num)
            if changed:
                return _from_pair(ctx, num, den)
        return _monic(ctx, num, den)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise ZeroDenominator("division by zero")
        return _from_pair(self.ctx, self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        if other.num.is_ground and other.den == 1:
            if not other.num:
                raise ZeroDenominator("division by zero")
            return RationalExpr(self.ctx, self.num.quo_ground(other.num.LC), self.den)
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(self.ctx, other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer exponents are supported")
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return self.ctx.one
        if n == 1:
            return self
        ctx = self.ctx
        num = self.num**n
        den = self.den**n
        if ctx._relations:
            num, changed = ctx._reduce(num)
            if changed:
                return _from_pair(ctx, num, den)
        return RationalExpr(ctx, num, den)

    # ------------------------------------------------------------- calculus
    def diff(self, v: str) -> "RationalExpr":
        return differentiate(self, v, self.ctx)

    def subs(self, bindings: Mapping, ctx_out: Context | None = None) -> "RationalExpr":
        return substitute(self, bindings, ctx_out or self.ctx)

    def evaluate(self, point: Mapping) -> Fraction:
        return evaluate_exact(self, point)

    # ------------------------------------------------------------- printing
    def __str__(self):
        if self.den == 1:
            return format_poly(self.num, self.ctx)
        return f"({format_poly(self.num, self.ctx)})/({format_poly(self.den, self.ctx)})"

    def __repr__(self):
        return f"RationalExpr({self})"


def _monic(ctx, num, den):
    if den == 1:
        return RationalExpr(ctx, num, den)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    if den.is_ground:
        return RationalExpr(ctx, num, ctx.ring.one)
    return RationalExpr(ctx, num, den)


def format_poly(f, ctx: Context) -> str:
    """Canonical printer: graded-lex descending terms, explicit ``*`` and ``^``."""
    if not f:
        return "0"
    parts = []
    for monom, coeff in f.terms():
        c = QQ.convert(coeff)
        factors = []
        for s, e in zip(ctx.symbols, monom):
            if e == 1:
                factors.append(s)
            elif e > 1:
                factors.append(f"{s}^{e}")
        num, den = int(c.numerator), int(c.denominator)
        neg = num < 0
        num = abs(num)
        cstr = str(num) if den == 1 else f"{num}/{den}"
        if factors:
            body = "*".join(factors) if (num == 1 and den == 1) else cstr + "*" + "*".join(factors)
        else:
            body = cstr
        parts.append((neg, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


# ---------------------------------------------------------------------------
# kernel operations


def normalize(e: RationalExpr, ctx: Context | None = None) -> RationalExpr:
    """Return the canonical form of ``e`` (idempotent)."""
    ctx = ctx or e.ctx
    if e.ctx is not ctx:
        e = ctx.lift(e)
    return _from_pair(ctx, e.num, e.den)


def is_zero(e: RationalExpr, ctx: Context | None = None) -> bool:
    """Exact zero test on the canonical form."""
    return not normalize(e, ctx).num


def _dpoly_independent(ctx: Context, f):
    """Numerator of d f / d(independent); the denominator is ctx._rate_den."""
    out = ctx.ring.zero
    rates = ctx._rate_num
    degs = f.degrees()
    for i, d in enumerate(degs):
        if d <= 0:
            continue
        if i in ctx._no_rule:
            raise UndefinedDerivative(f"no derivative rule for {ctx.symbols[i]!r}")
        r = rates.get(i)
        if r is None or not r:
            continue
        out += f.diff(ctx.gens[i]) * r
    return out


def differentiate(e: RationalExpr, v: str, ctx: Context | None = None) -> RationalExpr:
    """Total derivative along coordinate ``v``.

    Along the independent coordinate, dynamic atoms follow their rules;
    along any other coordinate they are constant.
    """
    ctx = ctx or e.ctx
    if e.ctx is not ctx:
        raise ContextMismatch(f"{e.ctx!r} vs {ctx!r}")
    if v not in ctx.coordinates:
        if v in ctx.index:
            raise ValueError(f"{v!r} is not a coordinate of {ctx!r}")
        raise UndeclaredSymbol(v, ctx.name)
    n, d = e.num, e.den
    if not n:
        return ctx.zero
    if v == ctx.independent:
        lam = ctx._rate_den
        dn = _dpoly_independent(ctx, n)
        if d == 1:
            return _from_pair(ctx, dn, lam) if lam != 1 else _from_pair(ctx, dn, ctx.ring.one)
        dd = _dpoly_independent(ctx, d)
        return _from_pair(ctx, dn * d - n * dd, lam * d * d)
    g = ctx.gens[ctx.index[v]]
    dn = n.diff(g)
    if d == 1:
        return RationalExpr(ctx, dn, d) if not ctx._relations else _from_pair(ctx, dn, d)
    dd = d.diff(g)
    return _from_pair(ctx, dn * d - n * dd, d * d)


def _binding_pairs(bindings: Mapping, ctx_out: Context):
    out = {}
    for name, val in bindings.items():
        if isinstance(val, str):
            val = ctx_out.parse(val)
        elif isinstance(val, (int, Fraction)):
            val = ctx_out.const(val)
        elif val.ctx is not ctx_out:
            val = ctx_out.lift(val)
        out[name] = val
    return out


def substitute(e: RationalExpr, bindings: Mapping, ctx_out: Context | None = None) -> RationalExpr:
    """Simultaneous substitution of symbols, normalized in ``ctx_out``.

    Symbols of ``e`` without a binding must be declared in ``ctx_out``.
    """
    ctx_out = ctx_out or e.ctx
    vals = _binding_pairs(bindings, ctx_out)
    src = e.ctx
    for s in e.free_symbols():
        if s not in vals and s not in ctx_out.index:
            raise UndeclaredSymbol(s, ctx_out.name)
    pn, dn = _subst_poly(e.num, src, ctx_out, vals)
    pd, dd = _subst_poly(e.den, src, ctx_out, vals)
    return _from_pair(ctx_out, pn * dd, pd * dn)


def _subst_poly(f, src: Context, out: Context, vals: Mapping):
    """Return (P, D) with f(vals) == P / D, polynomials of out.ring."""
    ring = out.ring
    if not f:
        return ring.zero, ring.one
    degs = f.degrees()
    plan = []  # per source variable: (kind, payload)
    den_total = ring.one
    for i, s in enumerate(src.symbols):
        if degs[i] <= 0:
            plan.append(None)
            continue
        v = vals.get(s)
        if v is None:
            plan.append(("gen", out.gens[out.index[s]], ring.one, degs[i]))
        else:
            plan.append(("val", v.num, v.den, degs[i]))
            if v.den != 1:
                den_total = den_total * v.den ** degs[i]
    cache: dict = {}

    def power(i, base, e, tag):
        key = (i, tag, e)
        r = cache.get(key)
        if r is None:
            r = base**e
            cache[key] = r
        return r

    total = ring.zero
    for monom, coeff in f.items():
        term = ring(coeff)
        for i, e in enumerate(monom):
            p = plan[i]
            if p is None:
                continue
            _, n, d, m = p
            if e:
                term = term * power(i, n, e, "n")
            if d != 1 and m - e:
                term = term * power(i, d, m - e, "d")
        total += term
    return total, den_total


def _check_relations(ctx: Context, point: Mapping, tol=None):
    for name, n, repl in ctx.relations():
        if name not in point:
            continue
        want = repl
        if tol is None:
            lhs = Fraction(point[name]) ** n
            rhs = evaluate_exact(want, point, check=False)
            if lhs != rhs:
                raise InconsistentAlgebraicValue(f"{name}^{n} != {want} at the given point")
        else:
            lhs = float(point[name]) ** n
            rhs = evaluate_float(want, point, check=False)
            if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
                raise InconsistentAlgebraicValue(f"{name}^{n} != {want} at the given point")


def evaluate_exact(e: RationalExpr, point: Mapping, check: bool = True) -> Fraction:
    """Exact value of ``e`` at a rational point binding all of its symbols."""
    ctx = e.ctx
    syms = e.free_symbols()
    missing = [s for s in syms if s not in point]
    if missing:
        raise UndeclaredSymbol(missing[0], "evaluation point")
    if check:
        _check_relations(ctx, point)
    args = []
    for s in syms:
        f = Fraction(point[s])
        args.append((ctx.gens[ctx.index[s]], QQ(f.numerator, f.denominator)))
    nv = _eval_poly(e.num, args)
    dv = _eval_poly(e.den, args)
    if dv == 0:
        raise PoleAtPoint(f"{e} has a pole at the given point")
    q = QQ.convert(nv) / QQ.convert(dv)
    return Fraction(int(q.numerator), int(q.denominator))


def _eval_poly(f, args):
    if not f:
        return QQ(0)
    if not args:
        return f.LC if f else QQ(0)
    r = f.evaluate(args)
    if hasattr(r, "ring"):
        return r.LC if r else QQ(0)
    return r


def evaluate_float(e: RationalExpr, point: Mapping, check: bool = True) -> float:
    """Floating-point value of ``e``; algebraic atoms take the supplied reals."""
    ctx = e.ctx
    if check:
        _check_relations(ctx, point, tol=1e-12)
    vals = [float(point[s]) if s in point else None for s in ctx.symbols]

    def ev(f):
        acc = 0.0
        for monom, coeff in f.items():
            t = float(QQ.convert(coeff).numerator) / float(QQ.convert(coeff).denominator)
            for i, k in enumerate(monom):
                if k:
                    v = vals[i]
                    if v is None:
                        raise UndeclaredSymbol(ctx.symbols[i], "evaluation point")
                    t *= v**k
            acc += t
        return acc

    dv = ev(e.den)
    if dv == 0.0:
        raise PoleAtPoint(f"{e} has a pole at the given point")
    return ev(e.num) / dv


def _poly_source(f, ctx: Context, argnames) -> str:
    pos = {n: i for i, n in enumerate(argnames)}
    terms = []
    for monom, coeff in f.items():
        c = QQ.convert(coeff)
        parts = [repr(float(int(c.numerator)) / float(int(c.denominator)))]
        for i, k in enumerate(monom):
            if k:
                parts.append(f"a[{pos[ctx.symbols[i]]}]" + (f"**{k}" if k > 1 else ""))
        terms.append("*".join(parts))
    return " + ".join(terms) if terms else "0.0"


def compile_float(e: RationalExpr, argnames: Iterable[str]) -> Callable:
    """Compile ``e`` into a float function of a sequence of values ``a``."""
    argnames = list(argnames)
    missing = [s for s in e.free_symbols() if s not in argnames]
    if missing:
        raise UndeclaredSymbol(missing[0], "compiled argument list")
    src = f"def _f(a):\n    return ({_poly_source(e.num, e.ctx, argnames)}) / ({_poly_source(e.den, e.ctx, argnames)})\n"
    ns: dict = {}
    exec(compile(src, "<compiled RationalExpr>", "exec"), ns)
    return ns["_f"]
