"""Bernoulli data and the branch power series of the Kubota-Leopoldt p-adic
L-function attached to an odd component k != 1.

Branch convention: the series for component k is the unique f in Z_p[[T]] with

    f((1+p)**l - 1) = (1 - p**(-l)) * zeta(l)   for negative l = k (mod p-1).

In Dirichlet-character terms this is L_p(omega^(1-k), s) evaluated at
T = (1+p)**s - 1, and its constant term is -B_{1, omega^(-k)}.

Two independent constructions are provided:

* ``branch_by_interpolation``: Newton divided differences through exact
  Bernoulli values at the nodes T_i = (1+p)**l_i - 1.
* ``branch_by_stickelberger``: the finite-level image in Z_p[T]/(omega_n) as a
  twisted Stickelberger sum over (Z/p^(n+1))^x.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb

import flint

from .errors import BoundExceeded, CalibrationFailure, PrecisionExhausted
from .padic import PadicScalar, PrimeContext, embed_rational, pow_onep, teichmuller_table, vp
from .series import (
    GroupRingElement,
    TruncatedSeries,
    eval_at,
    omega_coeffs,
    reduce_mod_omega,
    weierstrass_prepare,
)

BERNOULLI_BOUND = 20000

# -- Bernoulli numbers --------------------------------------------------------------


def bernoulli_recurrence(m: int) -> list[Fraction]:
    """B_0..B_m from sum_{j<=m} C(m+1, j) B_j = 0 (B_1 = -1/2).  Reference oracle."""
    B = [Fraction(1)]
    for k in range(1, m + 1):
        if k > 1 and k % 2:
            B.append(Fraction(0))
            continue
        s = sum(comb(k + 1, j) * B[j] for j in range(k) if B[j])
        B.append(-s / (k + 1))
    return B


def _bernoulli_even(m: int) -> Fraction:
    # flint fills its table of all B_i, i <= m, so later calls below m are lookups
    b = flint.fmpq.bernoulli(m, cache=True)
    return Fraction(int(b.p), int(b.q))


def bernoulli(m: int, bound: int = BERNOULLI_BOUND) -> Fraction:
    """Exact B_m with B_1 = -1/2."""
    if m < 0:
        raise ValueError("index must be nonnegative")
    if m > bound:
        raise BoundExceeded(f"Bernoulli index {m} exceeds the configured bound {bound}")
    if m == 1:
        return Fraction(-1, 2)
    if m % 2:
        return Fraction(0)
    return _bernoulli_even(m)


def zeta_neg(l: int, bound: int = BERNOULLI_BOUND) -> Fraction:
    """zeta(l) = -B_{1-l}/(1-l) for l < 0."""
    if l >= 0:
        raise ValueError("zeta_neg needs a negative argument")
    return -bernoulli(1 - l, bound) / (1 - l)


# -- branch parameters -------------------------------------------------------------


@dataclass(frozen=True)
class BranchSpec:
    ctx: PrimeContext
    k: int
    N: int = 8
    n: int = 0

    def __post_init__(self):
        p = self.ctx.p
        if self.k % 2 == 0:
            raise ValueError(f"component k={self.k} must be odd")
        if (self.k - 1) % (p - 1) == 0:
            raise ValueError(f"component k={self.k} is congruent to 1 mod {p - 1}, which is excluded")

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def residue(self) -> int:
        return self.k % (self.ctx.p - 1)

    def node(self, i: int) -> int:
        """l_i = l_0 - (p-1) i with l_0 the largest negative integer = k mod (p-1)."""
        p = self.ctx.p
        return (self.residue - (p - 1)) - (p - 1) * i


def interp_value(spec: BranchSpec, l: int, ctx: PrimeContext | None = None, bound: int = BERNOULLI_BOUND) -> PadicScalar:
    """(1 - p^(-l)) zeta(l) embedded in Z/p^M, for negative l = k mod (p-1)."""
    ctx = ctx or spec.ctx
    p = ctx.p
    if l >= 0:
        raise ValueError("interpolation nodes are negative integers")
    if (l - spec.k) % (p - 1):
        raise ValueError(f"l={l} is not congruent to k={spec.k} mod {p - 1}")
    if l % 2 == 0:
        raise ValueError("even l is a trivial zero of zeta")
    val = (1 - p ** (-l)) * zeta_neg(l, bound)
    return embed_rational(val.numerator, val.denominator, ctx)


def interpolation_guard(K: int, p: int) -> int:
    """Extra digits consumed by K-node divided differences: sum_{j<K} (1 + v_p(j)) + 2."""
    return K + -(-K // (p - 1)) + 2


@dataclass
class InterpolationResult:
    series: TruncatedSeries
    nodes: list[int]
    working_precision: int
    loss: int


def branch_by_interpolation(spec: BranchSpec, *, nodes: int | None = None, bound: int = BERNOULLI_BOUND, details: bool = False):
    """Series mod (p^M, T^N) through exact interpolation data.

    K nodes (default N + M) are used.  Two limits certify the output: the
    divided differences lose at most ``interpolation_guard(K)`` digits, which
    the working precision absorbs, and the interpolation polynomial determines
    the coefficient of T^j only modulo p^(K-j), because any series vanishing at
    all nodes is a multiple of prod (T - T_i) whose T^j coefficient has
    valuation >= K - j.
    """
    ctx = spec.ctx
    p, M, N = ctx.p, ctx.M, spec.N
    K = nodes if nodes is not None else N + M
    if K < N:
        raise ValueError("need at least N nodes")
    W = M + interpolation_guard(K, p)
    wctx = ctx.with_precision(W)
    mod = wctx.modulus
    ells = [spec.node(i) for i in range(K)]
    xs = [pow_onep(l, wctx).value - 1 for l in ells]
    col = [interp_value(spec, l, wctx, bound).value for l in ells]

    # Geometric nodes: x_i = c0 * g^i - 1 with g = (1+p)^-(p-1), c0 = (1+p)^l_0.  The
    # q-differences E_j[i] = (E_{j-1}[i+1] - g^(j-1) E_{j-1}[i]) / p^v_j, v_j = v_p(g^j - 1),
    # stay integral and relate to divided differences by
    #   f[x_i..x_{i+j}] = E_j[i] / (c0^j g^(ij + j(j-1)/2) prod_{t<=j} u_t),  u_t = (g^t - 1)/p^v_t,
    # so the inner loop needs no inversions and each column loses exactly v_j digits.
    g = pow(1 + p, -(p - 1), mod)
    c0_inv = pow(1 + p, -ells[0], mod)
    g_inv = pow(g, -1, mod)
    E = [flint.fmpz(y) for y in col]
    coef = [col[0]]
    scale = 1  # (c0^j g^(j(j-1)/2) prod u_t)^-1
    loss = 0
    gj = 1  # g^(j-1)
    for j in range(1, K):
        D = gj * g % mod - 1
        v = vp(D, p)
        loss += v
        if loss >= W:
            raise PrecisionExhausted(f"divided differences consumed the guard at order {j}")
        pv = p**v
        cur = flint.fmpz(p ** (W - loss + v))
        gq = flint.fmpz(gj)
        nxt = []
        for i in range(K - j):
            num = (E[i + 1] - gq * E[i]) % cur
            if num % pv:
                raise PrecisionExhausted(f"divided difference lost integrality at order {j}")
            nxt.append(num // pv)
        E = nxt
        scale = scale * c0_inv % mod * pow(g_inv, j - 1, mod) % mod * pow(D // pv, -1, mod) % mod
        coef.append(int(E[0]) * scale % p ** (W - loss))
        gj = gj * g % mod
    if W - loss < M:
        raise PrecisionExhausted(f"only {W - loss} digits survive interpolation, {M} requested")

    # Newton to monomial form mod p^M; only the first N coefficients are ever needed
    mM = ctx.modulus
    acc = [coef[-1] % mM]
    for i in range(K - 2, -1, -1):
        xi = xs[i] % mM
        nxt = [0] * min(len(acc) + 1, N)
        for t in range(len(nxt)):
            hi = acc[t - 1] if 0 < t <= len(acc) else 0
            lo = acc[t] if t < len(acc) else 0
            nxt[t] = (hi - lo * xi) % mM
        nxt[0] = (nxt[0] + coef[i]) % mM
        acc = nxt
    acc += [0] * (N - len(acc))
    out = tuple(PadicScalar.make(ctx, acc[t], min(M, K - t)) for t in range(N))
    series = TruncatedSeries(ctx, out)
    if details:
        return InterpolationResult(series, ells, W, loss)
    return series


def held_out_residuals(spec: BranchSpec, series: TruncatedSeries, count: int = 3, start: int | None = None, bound: int = BERNOULLI_BOUND):
    """Evaluate the series at unused nodes; returns (l, computed, expected) triples."""
    start = series.N + spec.ctx.M if start is None else start
    out = []
    for i in range(start, start + count):
        l = spec.node(i)
        x = pow_onep(l, spec.ctx) - 1
        out.append((l, eval_at(series, x), interp_value(spec, l, bound=bound)))
    return out


# -- Stickelberger construction -----------------------------------------------------


@dataclass(frozen=True)
class Convention:
    """How the Stickelberger sum is normalised.

    twist: exponent r in omega(a)^r, one of "-k", "k-1", "1-k", "k".
    exponent_sign: +1 uses gamma^iota(a), -1 uses gamma^-iota(a).
    sign: global sign.
    """

    twist: str = "-k"
    exponent_sign: int = -1
    sign: int = -1

    def r(self, k: int) -> int:
        return {"-k": -k, "k-1": k - 1, "1-k": 1 - k, "k": k}[self.twist]

    def as_dict(self) -> dict:
        return {"twist": self.twist, "exponent_sign": self.exponent_sign, "sign": self.sign}


CONVENTION_GRID = [Convention(t, e, s) for t, e, s in product(("-k", "k-1", "1-k", "k"), (-1, 1), (-1, 1))]


def _log_table(p: int, n: int) -> dict[int, int]:
    """(1+p)^e mod p^(n+1) -> e for e in [0, p^n)."""
    mod = p ** (n + 1)
    table = {}
    x = 1
    for e in range(p**n):
        table[x] = e
        x = x * (1 + p) % mod
    return table


def stickelberger_weights(p: int, n: int, r: int, W: int, a_range: range | None = None) -> list[int]:
    """Partial sums S[e] = sum a * omega(a)^r over a in a_range with iota(a) = e, mod p^(W+n+1).

    Each a coprime to p is written a = omega(a) * (1+p)^iota(a) mod p^(n+1).
    Partial sums over disjoint ranges add up to the full sum, so the
    accumulation can be split arbitrarily.
    """
    if r % (p - 1) == 0:
        raise ValueError("trivial twist is excluded")
    mod = p ** (W + n + 1)
    small = p ** (n + 1)
    ctx = PrimeContext(p, W + n + 1)
    omega = teichmuller_table(ctx)
    omega_r = [0] + [pow(w, r, mod) for w in omega[1:]]
    omega_inv_small = [0] + [pow(w % small, -1, small) for w in omega[1:]]
    logs = _log_table(p, n)
    S = [0] * p**n
    for a in a_range if a_range is not None else range(1, small):
        ar = a % p
        if ar == 0:
            continue
        e = logs[a * omega_inv_small[ar] % small]
        S[e] = (S[e] + a * omega_r[ar]) % mod
    return S


def branch_by_stickelberger(spec: BranchSpec, n: int, convention: Convention | None = None) -> GroupRingElement:
    """Image of the branch series in Z/p^M[T]/(omega_n).

    sign * p^-(n+1) * sum_{a < p^(n+1), p not | a} a * omega(a)^r * (1+T)^(exponent_sign * iota(a)).
    """
    conv = convention or Convention()
    ctx = spec.ctx
    p, M = ctx.p, ctx.M
    r = conv.r(spec.k)
    if r % (p - 1) == 0:
        raise ValueError("trivial twist is excluded")
    S = stickelberger_weights(p, n, r, M, None)
    d = p**n
    small = p ** (n + 1)
    weights = [0] * d
    for e, s in enumerate(S):
        if s % small:
            raise PrecisionExhausted(f"Stickelberger sum under {conv.as_dict()} is not p-integral")
        weights[(conv.exponent_sign * e) % d] = conv.sign * (s // small)
    return GroupRingElement.from_group_basis(ctx, n, weights)


def _matches_nodes(element: GroupRingElement, spec: BranchSpec, n: int, node_ids) -> bool:
    # omega_n(T_i) has valuation n + 1 + v_p(l_i), so agreement is expected mod p^(n+1)
    ctx = spec.ctx
    for i in node_ids:
        l = spec.node(i)
        x = pow_onep(l, ctx) - 1
        got = element.evaluate(x)
        if not got.agrees(interp_value(spec, l), n + 1):
            return False
    return True


@dataclass
class Calibration:
    convention: Convention
    level: int
    nodes: list[int]
    matches: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"convention": self.convention.as_dict(), "level": self.level, "nodes": self.nodes, "candidates_matching": self.matches}


def calibrate(spec: BranchSpec, levels=(1, 2), node_ids=(0, 1, 2)) -> Calibration:
    """Pick the Stickelberger convention reproducing 3 interpolation nodes.

    Tries the level-1 grid first and escalates to level 2 only if more than
    one convention survives.
    """
    attempted = []
    for level in levels:
        survivors = []
        for conv in CONVENTION_GRID:
            attempted.append({"level": level, **conv.as_dict()})
            try:
                el = branch_by_stickelberger(spec, level, conv)
            except (PrecisionExhausted, ValueError):
                continue
            if _matches_nodes(el, spec, level, node_ids):
                survivors.append(conv)
        # grid entries whose twists coincide mod p-1 are the same convention
        distinct = {(c.r(spec.k) % (spec.p - 1), c.exponent_sign, c.sign) for c in survivors}
        if len(distinct) == 1:
            nodes = [spec.node(i) for i in node_ids]
            return Calibration(survivors[0], level, nodes, [c.as_dict() for c in survivors])
        if not survivors:
            raise CalibrationFailure(f"no convention matches the interpolation nodes at level {level}", attempted)
    raise CalibrationFailure("calibration stayed ambiguous", attempted)


# -- level images and comparisons -----------------------------------------------------


def nodes_for_level(p: int, n: int, target: int, cap: int = 100000) -> tuple[int, int]:
    """(N, K): truncation and node count certifying the level-n image to `target` digits.

    N is the least truncation with T^N = 0 mod (omega_n, p^target); the
    minimal valuation of T^N mod omega_n never decreases with N, so one pass
    over N suffices.
    """
    d = p**n
    mod = p**target
    w = [c % mod for c in omega_coeffs(p, n)][:d]
    row = [0] * d
    row[d - 1] = 1
    N = d - 1
    while True:
        top = row[d - 1]
        row = [0] + row[:-1]
        if top:
            row = [(r - top * wi) % mod for r, wi in zip(row, w)]
        N += 1
        if all(x % mod == 0 for x in row):
            return N, N + target
        if N + target > cap:
            raise BoundExceeded(f"level-{n} image to {target} digits needs more than {cap} nodes")


def interpolation_image(spec: BranchSpec, n: int, target: int | None = None, bound: int = BERNOULLI_BOUND) -> GroupRingElement:
    """branch_by_interpolation reduced mod omega_n, with enough nodes for `target` digits.

    Without a target the truncation is the minimum p^n and coefficients
    carry whatever precision that certifies.
    """
    ctx = spec.ctx
    p = ctx.p
    if target is None:
        N = max(spec.N, p**n)
        K = N + ctx.M
    else:
        # node K-1 uses B_m with m = 1 - l_{K-1}; stop the search before that passes the bound
        cap = (bound - 1 + spec.node(0)) // (p - 1) + 1
        try:
            N, K = nodes_for_level(p, n, target, cap)
        except BoundExceeded as exc:
            raise BoundExceeded(f"{exc}, the most that Bernoulli index bound {bound} allows") from None
    s = branch_by_interpolation(BranchSpec(ctx, spec.k, N, n), nodes=K, bound=bound)
    return reduce_mod_omega(s, n)


def compare_images(interp: GroupRingElement, stick: GroupRingElement) -> dict:
    """Coefficientwise agreement at the interpolation side's certified precision."""
    bad = []
    for t, (a, b) in enumerate(zip(interp.coeffs, stick.coeffs)):
        if not a.agrees(b, min(a.prec, b.prec)):
            bad.append(t)
    precs = [min(a.prec, b.prec) for a, b in zip(interp.coeffs, stick.coeffs)]
    return {"agree": not bad, "mismatches": bad, "min_certified": min(precs), "max_certified": max(precs)}


# -- generalized Bernoulli and lambda ------------------------------------------------


def gen_bernoulli_b1(r: int, ctx: PrimeContext) -> PadicScalar:
    """B_{1, omega^r} = (1/p) sum_{a=1}^{p-1} a omega(a)^r, known mod p^(M-1)."""
    p, M = ctx.p, ctx.M
    if r % (p - 1) == 0:
        raise ValueError("trivial character excluded")
    if (r + 1) % (p - 1) == 0:
        raise ValueError("B_{1, omega^-1} is not p-integral")
    mod = ctx.modulus
    omega = teichmuller_table(ctx)
    s = sum(a * pow(omega[a], r, mod) for a in range(1, p)) % mod
    if s % p:
        raise ArithmeticError("generalized Bernoulli sum is not divisible by p")
    return PadicScalar.make(ctx, s // p, M - 1)


def lambda_invariant(spec: BranchSpec, *, max_N: int = 256, bound: int = BERNOULLI_BOUND):
    """lambda from Weierstrass preparation of the interpolated branch.

    Starts at spec.N and doubles N until preparation succeeds with lambda < N/2.
    Returns (lambda, P, u, series).
    """
    N = spec.N
    last_exc = None
    while N <= max_N:
        s = branch_by_interpolation(BranchSpec(spec.ctx, spec.k, N, spec.n), bound=bound)
        try:
            lam, P, u = weierstrass_prepare(s)
        except PrecisionExhausted as exc:
            last_exc = exc
            N *= 2
            continue
        if 2 * lam < N:
            return lam, P, u, s
        N *= 2
    raise PrecisionExhausted(f"lambda not resolved up to N={max_N}: {last_exc}")


def constant_term_anchor(spec: BranchSpec) -> int:
    """v_p(B_{1, omega^-k}); equals v_p of the branch constant term."""
    r = (-spec.k) % (spec.p - 1)
    return gen_bernoulli_b1(r, spec.ctx).valuation()
