"""Fixed-modulus p-adic integers with absolute precision tracking.

Every value is a residue modulo p**M together with the number of digits that
are actually known.  No floating point is used anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd

from .errors import PrecisionExhausted


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def vp(x: int, p: int) -> int:
    """Valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class PrimeContext:
    p: int
    M: int

    def __post_init__(self):
        if self.p == 2 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.M < 1:
            raise ValueError(f"precision M must be >= 1, got {self.M}")

    @cached_property
    def modulus(self) -> int:
        return self.p**self.M

    def with_precision(self, M: int) -> "PrimeContext":
        return PrimeContext(self.p, M)

    def __call__(self, value: int, prec: int | None = None) -> "PadicScalar":
        return PadicScalar.make(self, value, prec)

    def zero(self) -> "PadicScalar":
        return PadicScalar.make(self, 0)

    def one(self) -> "PadicScalar":
        return PadicScalar.make(self, 1)


@dataclass(frozen=True)
class PadicScalar:
    """An element of Z_p known modulo p**prec (prec <= ctx.M).

    Digits at and above ``prec`` are always stored as zero, so two scalars
    with equal precision compare equal exactly when they agree as p-adic
    approximations.
    """

    ctx: PrimeContext
    value: int
    prec: int

    @classmethod
    def make(cls, ctx: PrimeContext, value: int, prec: int | None = None) -> "PadicScalar":
        if prec is None or prec > ctx.M:
            prec = ctx.M
        prec = max(prec, 0)
        return cls(ctx, value % ctx.p**prec, prec)

    @property
    def p(self) -> int:
        return self.ctx.p

    def _check(self, other: "PadicScalar") -> None:
        if other.ctx.p != self.ctx.p:
            raise ValueError("context mismatch")

    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            self._check(other)
            return other
        if isinstance(other, int):
            return PadicScalar.make(self.ctx, other)
        return NotImplemented

    def valuation(self) -> int:
        """Exact valuation, or PrecisionExhausted if zero within precision."""
        if self.value == 0:
            raise PrecisionExhausted(
                f"value is 0 mod {self.p}^{self.prec}; rebuild with larger precision"
            )
        return vp(self.value, self.p)

    def valuation_bound(self) -> int:
        """Known lower bound for the valuation (prec when the value is 0)."""
        return self.prec if self.value == 0 else min(vp(self.value, self.p), self.prec)

    def is_unit(self) -> bool:
        return self.prec >= 1 and self.value % self.p != 0

    def is_zero(self) -> bool:
        return self.value == 0

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicScalar.make(self.ctx, self.value + other.value, min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self):
        return PadicScalar.make(self.ctx, -self.value, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicScalar.make(self.ctx, self.value - other.value, min(self.prec, other.prec))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        # error terms are x*dy + y*dx, so each side's precision gains the other's valuation
        prec = min(self.prec + other.valuation_bound(), other.prec + self.valuation_bound())
        return PadicScalar.make(self.ctx, self.value * other.value, prec)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = PadicScalar.make(self.ctx, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "PadicScalar":
        if not self.is_unit():
            raise ZeroDivisionError(f"{self.value} is not a unit mod {self.p}")
        return PadicScalar.make(self.ctx, pow(self.value, -1, self.p**self.prec), self.prec)

    def divide(self, other: "PadicScalar") -> "PadicScalar":
        """Exact quotient self/other; dividing by p**v costs v digits."""
        other = self._coerce(other)
        v = other.valuation()
        if self.valuation_bound() < v:
            raise ValueError(f"quotient is not integral (needs divisibility by {self.p}^{v})")
        unit = other.value // self.p**v
        prec = min(self.prec, other.prec) - v
        if prec <= 0:
            return PadicScalar.make(self.ctx, 0, 0)
        num = self.value // self.p**v if self.value else 0
        return PadicScalar.make(self.ctx, num * pow(unit, -1, self.p**prec), prec)

    def __truediv__(self, other):
        return self.divide(other)

    def agrees(self, other: "PadicScalar", digits: int | None = None) -> bool:
        """True when the two values coincide modulo p**digits (default: common precision)."""
        other = self._coerce(other)
        d = min(self.prec, other.prec) if digits is None else digits
        m = self.p**d
        return (self.value - other.value) % m == 0

    def lift(self) -> int:
        return self.value

    def signed(self) -> int:
        """Representative in (-p**prec/2, p**prec/2]."""
        m = self.p**self.prec
        return self.value - m if self.value > m // 2 else self.value

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} + O({self.p}^{self.prec})"


def valuation(x: PadicScalar) -> int:
    return x.valuation()


def teichmuller(a: int, ctx: PrimeContext) -> PadicScalar:
    """The (p-1)-th root of unity congruent to a mod p, via x <- x^p until fixed."""
    p, mod = ctx.p, ctx.modulus
    if a % p == 0:
        raise ValueError(f"{a} is divisible by {p}")
    x = a % mod
    for _ in range(ctx.M + 1):
        y = pow(x, p, mod)
        if y == x:
            return PadicScalar.make(ctx, x)
        x = y
    raise AssertionError("Teichmuller iteration did not converge")


def teichmuller_table(ctx: PrimeContext) -> list[int]:
    """omega(a) mod p**M for a = 0..p-1 (entry 0 is unused and set to 0)."""
    return [0] + [teichmuller(a, ctx).value for a in range(1, ctx.p)]


def embed_rational(num: int, den: int, ctx: PrimeContext) -> PadicScalar:
    g = gcd(num, den)
    if g > 1:
        num, den = num // g, den // g
    if den % ctx.p == 0:
        raise ValueError(f"denominator {den} is divisible by {ctx.p}")
    mod = ctx.modulus
    return PadicScalar.make(ctx, num * pow(den, -1, mod))


def pow_onep(s: int, ctx: PrimeContext) -> PadicScalar:
    """(1+p)**s mod p**M; negative s goes through the modular inverse."""
    mod = ctx.modulus
    base = 1 + ctx.p
    if s < 0:
        base = pow(base, -1, mod)
        s = -s
    return PadicScalar.make(ctx, pow(base, s, mod))
