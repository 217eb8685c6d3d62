"""Truncated power series over Z_p, the finite group rings Z_p[T]/(omega_n),
Weierstrass preparation and resultant valuations.

Here omega_n(T) = (1+T)**(p**n) - 1.  Its roots are zeta - 1 for the
p**n-th roots of unity zeta, so for a polynomial P,

    v_p(Res(omega_n, P)) = v_p(prod_zeta P(zeta - 1)),

which is how norms over ramified extensions are computed without ever
writing down zeta.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Sequence

from .errors import ArithPathError, MuPositive, PrecisionExhausted
from .linalg import _INT64_MODULUS_LIMIT, det_valuation
from .padic import PadicScalar, PrimeContext, vp

# Weierstrass preparation on a series whose coefficients all agree mod p^M
# returns P modulo p^(M - WEIERSTRASS_GUARD) at worst; the tracked precision is
# usually better and is always reported per coefficient.
WEIERSTRASS_GUARD = 0


def _scalars(ctx: PrimeContext, values: Sequence, prec=None) -> tuple[PadicScalar, ...]:
    out = []
    for x in values:
        if isinstance(x, PadicScalar):
            out.append(x)
        else:
            out.append(PadicScalar.make(ctx, int(x), prec))
    return tuple(out)


@dataclass(frozen=True)
class TruncatedSeries:
    """sum_t coeffs[t] T**t + O(T**N), each coefficient with its own precision."""

    ctx: PrimeContext
    coeffs: tuple[PadicScalar, ...]

    @classmethod
    def from_ints(cls, ctx: PrimeContext, values: Sequence[int], N: int | None = None, prec=None):
        values = list(values)
        if N is not None:
            values = (values + [0] * N)[:N]
        return cls(ctx, _scalars(ctx, values, prec))

    @classmethod
    def one(cls, ctx: PrimeContext, N: int):
        return cls.from_ints(ctx, [1], N)

    @property
    def N(self) -> int:
        return len(self.coeffs)

    @property
    def p(self) -> int:
        return self.ctx.p

    def values(self) -> list[int]:
        return [c.value for c in self.coeffs]

    def precs(self) -> list[int]:
        return [c.prec for c in self.coeffs]

    def truncate(self, N: int) -> "TruncatedSeries":
        if N > self.N:
            raise ValueError("cannot extend a truncated series")
        return TruncatedSeries(self.ctx, self.coeffs[:N])

    def _same(self, other: "TruncatedSeries"):
        if other.ctx.p != self.ctx.p:
            raise ValueError("context mismatch")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._same(other)
        N = min(self.N, other.N)
        return TruncatedSeries(self.ctx, tuple(self.coeffs[i] + other.coeffs[i] for i in range(N)))

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._same(other)
        N = min(self.N, other.N)
        return TruncatedSeries(self.ctx, tuple(self.coeffs[i] - other.coeffs[i] for i in range(N)))

    def __neg__(self):
        return TruncatedSeries(self.ctx, tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, (int, PadicScalar)):
            return TruncatedSeries(self.ctx, tuple(c * other for c in self.coeffs))
        return mul(self, other)

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if not c0.is_unit():
            raise ZeroDivisionError("series with non-unit constant term is not invertible")
        inv0 = c0.inverse()
        w = [inv0]
        for t in range(1, self.N):
            acc = self.coeffs[t] * w[0]
            for i in range(1, t):
                acc = acc + self.coeffs[t - i] * w[i]
            w.append(-(acc * inv0))
        return TruncatedSeries(self.ctx, tuple(w))

    def lowest_unit_index(self) -> int | None:
        for t, c in enumerate(self.coeffs):
            if c.is_unit():
                return t
        return None

    def agrees(self, other: "TruncatedSeries", digits: int | None = None, upto: int | None = None) -> bool:
        upto = min(self.N, other.N) if upto is None else upto
        return all(self.coeffs[i].agrees(other.coeffs[i], digits) for i in range(upto))

    def __repr__(self):
        terms = " + ".join(f"({c.value})T^{i}" for i, c in enumerate(self.coeffs) if c.value)
        return f"TruncatedSeries[{self.p}, N={self.N}]({terms or '0'})"


def mul(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated to min(N_f, N_g)."""
    f._same(g)
    N = min(f.N, g.N)
    out = []
    for t in range(N):
        acc = f.coeffs[0] * g.coeffs[t]
        for i in range(1, t + 1):
            acc = acc + f.coeffs[i] * g.coeffs[t - i]
        out.append(acc)
    return TruncatedSeries(f.ctx, tuple(out))


def eval_at(f: TruncatedSeries, x: PadicScalar) -> PadicScalar:
    """f(x) for v_p(x) >= 1; the T**N tail caps the result at N*v(x) digits."""
    vx = x.valuation_bound()
    if vx < 1:
        raise ValueError("evaluation point must lie in pZ_p so the truncation tail is controlled")
    acc = f.coeffs[-1]
    for c in reversed(f.coeffs[:-1]):
        acc = acc * x + c
    prec = min(acc.prec, f.N * vx)
    return PadicScalar.make(f.ctx, acc.value, prec)


@dataclass(frozen=True)
class DistinguishedPoly:
    """Monic polynomial whose lower coefficients lie in pZ_p; coeffs low to high."""

    ctx: PrimeContext
    coeffs: tuple[PadicScalar, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("empty polynomial")
        lead = self.coeffs[-1]
        if not lead.agrees(PadicScalar.make(self.ctx, 1)):
            raise ValueError("distinguished polynomial must be monic")
        for c in self.coeffs[:-1]:
            if c.value % self.ctx.p:
                raise ValueError("non-leading coefficients must be divisible by p")

    @classmethod
    def from_ints(cls, ctx: PrimeContext, values: Sequence[int], prec=None):
        return cls(ctx, _scalars(ctx, values, prec))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    lam = degree

    def values(self) -> list[int]:
        return [c.value for c in self.coeffs]

    def precision(self) -> int:
        return min(c.prec for c in self.coeffs)


@dataclass(frozen=True)
class ShiftedPoly:
    """Q(t) = P(t - 1) for a distinguished P, coefficients low to high in t."""

    ctx: PrimeContext
    coeffs: tuple[PadicScalar, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def values(self) -> list[int]:
        return [c.value for c in self.coeffs]


def shift_variable(P: DistinguishedPoly) -> ShiftedPoly:
    """Re-expand P(T) in t = T + 1 by Horner's rule with (t - 1)."""
    ctx = P.ctx
    acc: list[PadicScalar] = [P.coeffs[-1]]
    for c in reversed(P.coeffs[:-1]):
        # acc * (t - 1) + c
        nxt = [PadicScalar.make(ctx, 0)] * (len(acc) + 1)
        for i, a in enumerate(acc):
            nxt[i + 1] = nxt[i + 1] + a
            nxt[i] = nxt[i] - a
        nxt[0] = nxt[0] + c
        acc = nxt
    return ShiftedPoly(ctx, tuple(acc))


# -- omega_n and the finite group rings -------------------------------------------


@lru_cache(maxsize=None)
def omega_coeffs(p: int, n: int) -> tuple[int, ...]:
    """Exact integer coefficients of (1+T)**(p**n) - 1, low to high."""
    d = p**n
    c = [comb(d, i) for i in range(d + 1)]
    c[0] = 0
    return tuple(c)


def _reduce_poly(values: list[int], p: int, n: int, mod: int) -> list[int]:
    """Remainder of an integer polynomial modulo omega_n, coefficients mod `mod`."""
    d = p**n
    w = [c % mod for c in omega_coeffs(p, n)]
    vals = [v % mod for v in values]
    for top in range(len(vals) - 1, d - 1, -1):
        c = vals[top]
        if c:
            base = top - d
            for i in range(d):
                if w[i]:
                    vals[base + i] = (vals[base + i] - c * w[i]) % mod
        vals[top] = 0
    return (vals + [0] * d)[:d]


@dataclass(frozen=True)
class GroupRingElement:
    """Residue class modulo omega_n: p**n coefficients in the basis 1, T, T^2, ..."""

    ctx: PrimeContext
    n: int
    coeffs: tuple[PadicScalar, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.ctx.p**self.n:
            raise ValueError(f"group ring element at level {self.n} needs {self.ctx.p ** self.n} coefficients")

    @classmethod
    def from_ints(cls, ctx: PrimeContext, n: int, values: Sequence[int], prec=None):
        d = ctx.p**n
        vals = _reduce_poly(list(values), ctx.p, n, ctx.modulus) if len(values) > d else list(values) + [0] * (d - len(values))
        return cls(ctx, n, _scalars(ctx, vals, prec))

    @classmethod
    def from_group_basis(cls, ctx: PrimeContext, n: int, weights: Sequence[int], prec=None):
        """Element sum_e weights[e] * (1+T)**e, i.e. coordinates in the group basis gamma**e."""
        d = ctx.p**n
        if len(weights) != d:
            raise ValueError("need one weight per group element")
        mod = ctx.modulus
        acc = [0] * d
        # Horner in x = 1 + T; acc stays of degree < d since (1+T)^d = 1 is never reached
        for e in range(d - 1, -1, -1):
            for i in range(d - 1, 0, -1):
                acc[i] = (acc[i] + acc[i - 1]) % mod
            acc[0] = (acc[0] + weights[e]) % mod
        return cls(ctx, n, _scalars(ctx, acc, prec))

    @property
    def p(self) -> int:
        return self.ctx.p

    def values(self) -> list[int]:
        return [c.value for c in self.coeffs]

    def precision(self) -> int:
        return min(c.prec for c in self.coeffs)

    def __mul__(self, other: "GroupRingElement") -> "GroupRingElement":
        if other.n != self.n or other.ctx.p != self.ctx.p:
            raise ValueError("level or context mismatch")
        prec = min(self.precision(), other.precision())
        mod = self.p**prec
        a, b = self.values(), other.values()
        prod = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return GroupRingElement(self.ctx, self.n, _scalars(self.ctx, _reduce_poly(prod, self.p, self.n, mod), prec))

    def agrees(self, other: "GroupRingElement", digits: int | None = None) -> bool:
        return all(a.agrees(b, digits) for a, b in zip(self.coeffs, other.coeffs))

    def evaluate(self, x: PadicScalar) -> PadicScalar:
        """Value of the degree < p**n representative at x."""
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc


def _val(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def omega_tail_valuation(p: int, n: int, N: int, cap: int) -> int:
    """Minimal coefficient valuation of T**N mod omega_n (capped).

    Multiplying by T never lowers this minimum, so it bounds the effect of every
    unknown coefficient T**j, j >= N, of a truncated series.
    """
    d = p**n
    if N < d:
        return 0
    mod = p**cap
    row = [0] * d
    row[d - 1] = 1
    w = [c % mod for c in omega_coeffs(p, n)]
    for _ in range(N - d + 1):
        top = row[d - 1]
        row = [0] + row[:-1]
        if top:
            row = [(r - top * wi) % mod for r, wi in zip(row, w[:d])]
    return min(_val(x, p, cap) for x in row)


def reduce_mod_omega(f: TruncatedSeries, n: int) -> GroupRingElement:
    """Image of a truncated series in Z_p[T]/(omega_n) with certified precision.

    Coefficient t of the result is certified to
        min(M, tail, min_j(prec(f_j) + v([T^t](T^j mod omega_n)))),
    where tail is omega_tail_valuation(N) and accounts for the unknown T**j, j >= N.
    """
    ctx = f.ctx
    p, M = ctx.p, ctx.M
    d = p**n
    if f.N < d:
        raise ValueError(f"insufficient truncation: N={f.N} < p^n={d}")
    mod = ctx.modulus
    w = [c % mod for c in omega_coeffs(p, n)]
    vals = [0] * d
    precs = [M] * d
    row = None
    for j, c in enumerate(f.coeffs):
        if j < d:
            vals[j] = c.value
            precs[j] = min(precs[j], c.prec)
            continue
        if row is None:
            row = [(-x) % mod for x in w[:d]]  # T^d mod omega_n
        else:
            top = row[d - 1]
            row = [0] + row[:-1]
            if top:
                row = [(r - top * wi) % mod for r, wi in zip(row, w[:d])]
        for t in range(d):
            r = row[t]
            if r:
                vals[t] = (vals[t] + c.value * r) % mod
            precs[t] = min(precs[t], c.prec + _val(r, p, M))
    tail = omega_tail_valuation(p, n, f.N, M) if f.N >= d else 0
    precs = [min(x, tail) for x in precs]
    return GroupRingElement(ctx, n, tuple(PadicScalar.make(ctx, v, pr) for v, pr in zip(vals, precs)))


# -- Weierstrass preparation -------------------------------------------------------


def _tracked_unknown(ctx: PrimeContext) -> PadicScalar:
    return PadicScalar.make(ctx, 0, 0)


def weierstrass_prepare(f: TruncatedSeries, *, need_unit: bool = True):
    """Factor f = P * u with P distinguished of degree lambda and u a unit.

    Returns (lambda, P, u) where u has N - lambda coefficients, or u = None when
    need_unit is False (then only as many quotient terms as P needs are built).
    Raises MuPositive when every coefficient is divisible by p.

    Method: with f = T^lambda * U + B (U a unit, B = p * small polynomial) the
    quotient q in T^lambda = q*f + r satisfies q = U^{-1} (1 - shift_lambda(q*B)),
    which is iterated from q = U^{-1}; each pass gains one p-adic digit.  Then
    P = T^lambda - r = q*f and u = q^{-1}.
    """
    ctx = f.ctx
    p, M = ctx.p, ctx.M
    lam = f.lowest_unit_index()
    if lam is None:
        if all(c.prec >= 1 and c.value % p == 0 for c in f.coeffs):
            raise MuPositive("every coefficient is divisible by p within the truncation window")
        raise PrecisionExhausted("no unit coefficient is certified; increase precision")
    N = f.N
    if N <= lam:
        raise PrecisionExhausted("truncation too short for the lambda-invariant")
    if lam == 0:
        P = DistinguishedPoly(ctx, (PadicScalar.make(ctx, 1),))
        return 0, P, f if need_unit else None

    Np = N - lam
    L = Np if need_unit else min(Np, lam * (M + 2) + 1)
    unknown = _tracked_unknown(ctx)
    U = TruncatedSeries(ctx, f.coeffs[lam : lam + L])
    B = f.coeffs[:lam]
    Uinv = U.inverse()

    def q_coeff(q, j):
        return q[j] if j < len(q) else unknown

    q = list(Uinv.coeffs)
    for _ in range(M + 2):
        # shift_lambda(q*B)_t = sum_i B_i q_{t+lam-i}
        qb = []
        for t in range(L):
            acc = B[0] * q_coeff(q, t + lam)
            for i in range(1, lam):
                acc = acc + B[i] * q_coeff(q, t + lam - i)
            qb.append(acc)
        rhs = TruncatedSeries(ctx, tuple((PadicScalar.make(ctx, 1) if t == 0 else PadicScalar.make(ctx, 0)) - qb[t] for t in range(L)))
        new_q = list(mul(Uinv, rhs).coeffs)
        if all(a.value == b.value and a.prec == b.prec for a, b in zip(new_q, q)):
            q = new_q
            break
        q = new_q

    # P = q * f, of which only degrees < lambda are new; the T^lambda coefficient is 1
    low = []
    for t in range(lam):
        acc = q[0] * f.coeffs[t]
        for i in range(1, t + 1):
            acc = acc + q[i] * f.coeffs[t - i]
        low.append(acc)
    for c in low:
        if c.prec >= 1 and c.value % p:
            raise ArithPathError("Weierstrass iteration produced a non-distinguished polynomial")
    P = DistinguishedPoly(ctx, tuple(low) + (PadicScalar.make(ctx, 1),))
    u = TruncatedSeries(ctx, tuple(q)).inverse() if need_unit else None
    return lam, P, u


# -- resultants ----------------------------------------------------------------------


def _int64_digits(p: int) -> int:
    k = 1
    while p ** (k + 1) < _INT64_MODULUS_LIMIT:
        k += 1
    return k


def multiplication_matrix(poly: Sequence[int], p: int, n: int, mod: int) -> list[list[int]]:
    """Matrix of x -> poly*x on (Z/mod)[T]/(omega_n); column i is T^i * poly."""
    d = p**n
    w = [c % mod for c in omega_coeffs(p, n)]
    col = _reduce_poly(list(poly), p, n, mod)
    cols = [col]
    for _ in range(d - 1):
        top = col[d - 1]
        col = [0] + col[:-1]
        if top:
            col = [(r - top * wi) % mod for r, wi in zip(col, w[:d])]
        cols.append(col)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def sylvester_matrix(a: Sequence[int], b: Sequence[int], mod: int) -> list[list[int]]:
    """Sylvester matrix of polynomials given low to high; det = Res(a, b)."""
    da, db = len(a) - 1, len(b) - 1
    size = da + db
    A = list(reversed([x % mod for x in a]))
    Bc = list(reversed([x % mod for x in b]))
    rows = []
    for i in range(db):
        rows.append([0] * i + A + [0] * (size - i - da - 1))
    for i in range(da):
        rows.append([0] * i + Bc + [0] * (size - i - db - 1))
    return rows


def _det_val_with_escalation(build, p: int, M: int) -> int:
    """Run det_valuation in int64 range first and retry at the full precision on exhaustion."""
    small = min(M, _int64_digits(p))
    try:
        return det_valuation(build(p**small), p, small)
    except PrecisionExhausted:
        if small >= M:
            raise
    return det_valuation(build(p**M), p, M)


def resultant_valuation_pair(poly: Sequence[int], p: int, n: int, M: int) -> tuple[int, int]:
    """(multiplication-matrix valuation, Sylvester valuation) of Res(omega_n, poly)."""
    poly = list(poly)
    while len(poly) > 1 and poly[-1] % p**M == 0:
        poly.pop()
    e_mult = _det_val_with_escalation(lambda mod: multiplication_matrix(poly, p, n, mod), p, M)
    if len(poly) == 1:
        # Res(omega_n, c) = c^(p^n)
        c = poly[0] % p**M
        if c == 0:
            raise PrecisionExhausted("zero polynomial")
        e_syl = vp(c, p) * p**n
        if e_syl >= M:
            raise PrecisionExhausted("resultant valuation reaches working precision")
    else:
        omega = list(omega_coeffs(p, n))
        e_syl = _det_val_with_escalation(lambda mod: sylvester_matrix(omega, poly, mod), p, M)
    return e_mult, e_syl


class ResultantMismatch(ArithPathError):
    """The two resultant algorithms disagreed; indicates a bug."""


# group ring elements beyond this dimension are first reduced to their distinguished part
DIRECT_RESULTANT_LIMIT = 128


def resultant_valuation(operand, n: int, *, direct: bool | None = None) -> int:
    """v_p(Res(omega_n, P)) = v_p(prod over p^n-th roots zeta of P(zeta - 1)).

    ``operand`` is a DistinguishedPoly or a GroupRingElement (read as a
    polynomial of degree < p^n).  Both the multiplication-matrix determinant
    and the Sylvester determinant are computed and must agree.

    Large group ring elements are replaced by their distinguished part first:
    writing g = P*u with u a unit power series, u(zeta - 1) is a unit for every
    root, so Res(omega_n, g) and Res(omega_n, P) have the same valuation.
    """
    ctx = operand.ctx
    p = ctx.p
    if isinstance(operand, GroupRingElement):
        if operand.n != n:
            raise ValueError("group ring element lives at a different level")
        M = operand.precision()
        if direct is None:
            direct = p**n <= DIRECT_RESULTANT_LIMIT
        if not direct:
            series = TruncatedSeries(ctx, tuple(PadicScalar.make(ctx, c.value, M) for c in operand.coeffs) + (PadicScalar.make(ctx, 0, M),))
            try:
                lam, P, _ = weierstrass_prepare(series, need_unit=False)
            except MuPositive as exc:
                raise PrecisionExhausted(str(exc)) from exc
            if lam >= p**n:
                raise PrecisionExhausted("distinguished part has degree >= p^n")
            return resultant_valuation(P, n)
        poly = operand.values()
    elif isinstance(operand, DistinguishedPoly):
        M = operand.precision()
        poly = operand.values()
    else:
        raise TypeError(f"unsupported operand {type(operand).__name__}")
    if M < 1:
        raise PrecisionExhausted("operand carries no precision")
    e_mult, e_syl = resultant_valuation_pair(poly, p, n, M)
    if e_mult != e_syl:
        raise ResultantMismatch(f"multiplication matrix gives {e_mult}, Sylvester gives {e_syl}")
    return e_mult
