import pytest
from hypothesis import given, strategies as st

from arithpath import PadicScalar, PrecisionExhausted, PrimeContext
from arithpath.padic import embed_rational, pow_onep, teichmuller, valuation

PRIMES = [3, 5, 7, 13, 37]


def brute_teichmuller(a, p, M):
    mod = p**M
    return next(x for x in range(a % p, mod, p) if pow(x, p - 1, mod) == 1)


def test_context_rejects_bad_primes():
    for p in (2, 4, 9, 1):
        with pytest.raises(ValueError):
            PrimeContext(p, 4)
    with pytest.raises(ValueError):
        PrimeContext(5, 0)


@pytest.mark.parametrize(
    "p,M,x,expected",
    [(5, 6, 50, 2), (37, 4, 37**3 * 5, 3), (7, 3, 1, 0)],
)
def test_valuation_examples(p, M, x, expected):
    assert valuation(PadicScalar.make(PrimeContext(p, M), x)) == expected


def test_valuation_of_zero_exhausts():
    with pytest.raises(PrecisionExhausted):
        valuation(PrimeContext(5, 6).zero())


def test_digits_above_precision_are_zeroed():
    ctx = PrimeContext(5, 6)
    x = PadicScalar.make(ctx, 5**4 + 3, prec=2)
    assert x.value == 3 and x.prec == 2


def test_teichmuller_examples():
    assert teichmuller(2, PrimeContext(5, 3)).value == 57
    for p in PRIMES:
        ctx = PrimeContext(p, 5)
        assert teichmuller(1, ctx).value == 1
        assert teichmuller(p - 1, ctx).value == p**5 - 1
    with pytest.raises(ValueError):
        teichmuller(10, PrimeContext(5, 3))


@pytest.mark.parametrize("p", [3, 5, 7, 13])
def test_teichmuller_matches_search(p):
    M = 3
    for a in range(1, p):
        assert teichmuller(a, PrimeContext(p, M)).value == brute_teichmuller(a, p, M)


def test_embed_rational_examples():
    assert embed_rational(1, 2, PrimeContext(5, 2)).value == 13
    assert embed_rational(0, 7, PrimeContext(5, 4)).value == 0
    x = embed_rational(-691, 2730, PrimeContext(11, 3)).value
    assert (2730 * x + 691) % 11**3 == 0
    # 2730 = 2*3*5*7*13, so it is not a valid denominator at p = 5
    with pytest.raises(ValueError):
        embed_rational(-691, 2730, PrimeContext(5, 3))
    with pytest.raises(ValueError):
        embed_rational(1, 10, PrimeContext(5, 3))


def test_embed_rational_with_p_in_denominator_after_reduction():
    # 5/10 = 1/2 has no p in the reduced denominator
    assert embed_rational(5, 10, PrimeContext(5, 2)).value == 13


def test_pow_onep_examples():
    ctx = PrimeContext(5, 3)
    assert pow_onep(0, ctx).value == 1
    assert pow_onep(2, ctx).value == 36
    assert pow_onep(-1, ctx).value == 21


def test_division_costs_valuation():
    ctx = PrimeContext(5, 6)
    q = ctx(50) / ctx(25)
    assert q.value == 2 and q.prec == 4
    with pytest.raises(ValueError):
        ctx(3) / ctx(5)


def test_multiplication_reports_tracked_precision():
    ctx = PrimeContext(5, 8)
    x = PadicScalar.make(ctx, 25, prec=4)
    y = PadicScalar.make(ctx, 3, prec=8)
    assert (x * y).prec == 4
    # a known multiple of p^2 times something known to 3 digits is known to 5
    z = PadicScalar.make(ctx, 7, prec=3)
    assert (PadicScalar.make(ctx, 25) * z).prec == 5


prime = st.sampled_from(PRIMES)


@given(prime, st.integers(1, 10), st.integers(), st.integers())
def test_teichmuller_is_multiplicative(p, M, a, b):
    a = a * p + 1 if a % p == 0 else a
    b = b * p + 1 if b % p == 0 else b
    ctx = PrimeContext(p, M)
    assert (teichmuller(a, ctx) * teichmuller(b, ctx)).value == teichmuller(a * b, ctx).value


@given(prime, st.integers(1, 12), st.integers(1, 10**30))
def test_teichmuller_is_root_of_unity(p, M, a):
    if a % p == 0:
        a += 1
    ctx = PrimeContext(p, M)
    w = teichmuller(a, ctx)
    assert pow(w.value, p - 1, ctx.modulus) == 1
    assert (w.value - a) % p == 0


nonzero = st.integers(-(10**12), 10**12).filter(lambda x: x != 0)


@given(prime, st.integers(1, 10), st.integers(-(10**12), 10**12), nonzero, st.integers(-(10**12), 10**12), nonzero)
def test_embed_respects_addition_and_multiplication(p, M, a, b, c, d):
    if b % p == 0 or d % p == 0:
        return
    ctx = PrimeContext(p, M)
    x, y = embed_rational(a, b, ctx), embed_rational(c, d, ctx)
    assert (x + y).value == embed_rational(a * d + b * c, b * d, ctx).value
    assert (x * y).value == embed_rational(a * c, b * d, ctx).value


@given(prime, st.integers(1, 10**9), st.integers(1, 10**9))
def test_valuation_is_additive(p, x, y):
    ctx = PrimeContext(p, 40)
    vx, vy = valuation(ctx(x)), valuation(ctx(y))
    if vx + vy < 40:
        assert valuation(ctx(x) * ctx(y)) == vx + vy
