"""Deterministic sampling and randomized zero testing.

All randomness in the package flows through :class:`SplitMix64`, a 64-bit
generator (Steele, Lea and Flood's splitmix64 finalizer), so every sampled
point is reproducible from a seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from sympy.polys.domains import QQ

from .core import Context, RationalExpr, _eval_poly

MASK64 = (1 << 64) - 1
SAMPLE_BOUND = 99
MAX_POLE_RETRIES = 50


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)

    def rational(self, bound: int = SAMPLE_BOUND) -> Fraction:
        """Numerator in [-bound, bound], denominator in [1, bound]."""
        return Fraction(self.randint(-bound, bound), self.randint(1, bound))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * (self.next_u64() >> 11) / float(1 << 53)


def random_point(rng: SplitMix64, names) -> dict[str, Fraction]:
    return {n: rng.rational() for n in names}


def _qq(f: Fraction):
    return QQ(f.numerator, f.denominator)


@dataclass
class ZeroTest:
    """Outcome of :func:`probable_zero`; truthy when no witness was found."""

    verdict: bool
    witness: dict | None = None
    trials: int = 0
    resamples: int = 0

    def __bool__(self):
        return self.verdict


def probable_zero(e: RationalExpr, ctx: Context | None = None, trials: int = 5, rng_seed: int = 0) -> ZeroTest:
    """Schwartz-Zippel pre-pass on the canonical numerator.

    The numerator is relation-reduced, so it is the zero polynomial exactly
    when ``is_zero`` holds; algebraic atoms are sampled as free variables.
    ``False`` is always backed by a witness point; ``True`` is advisory.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ctx = ctx or e.ctx
    if e.ctx is not ctx:
        e = ctx.lift(e)
    if not e.num:
        return ZeroTest(True, None, trials)
    rng = SplitMix64(rng_seed)
    syms = e.free_symbols()
    gens = {s: ctx.gens[ctx.index[s]] for s in syms}
    resamples = 0
    done = 0
    while done < trials:
        pt = random_point(rng, syms)
        args = [(gens[s], _qq(v)) for s, v in pt.items()]
        if e.den != 1 and _eval_poly(e.den, args) == 0:
            resamples += 1
            if resamples > MAX_POLE_RETRIES:
                break
            continue
        done += 1
        if _eval_poly(e.num, args) != 0:
            return ZeroTest(False, pt, done, resamples)
    return ZeroTest(True, None, done, resamples)
