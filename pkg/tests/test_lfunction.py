from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from arithpath import BoundExceeded, PrimeContext
from arithpath.lfunction import (
    BranchSpec,
    Convention,
    bernoulli,
    bernoulli_recurrence,
    branch_by_interpolation,
    branch_by_stickelberger,
    calibrate,
    compare_images,
    constant_term_anchor,
    gen_bernoulli_b1,
    held_out_residuals,
    interp_value,
    interpolation_image,
    lambda_invariant,
    nodes_for_level,
    stickelberger_weights,
    zeta_neg,
)
from arithpath.padic import embed_rational, vp
from arithpath.series import reduce_mod_omega


def spec(p, k, M=12, N=8):
    return BranchSpec(PrimeContext(p, M), k, N)


def brute_teichmuller(a, p, M):
    mod = p**M
    return next(x for x in range(a % p, mod, p) if pow(x, p - 1, mod) == 1)


def direct_b1(r, p, M):
    """(1/p) sum a omega(a)^r with omega found by exhaustive search mod p^M."""
    mod = p**M
    s = sum(a * pow(brute_teichmuller(a, p, M), r % (p - 1), mod) for a in range(1, p)) % mod
    assert s % p == 0
    return s // p


# -- Bernoulli numbers and zeta ------------------------------------------------------------


def test_bernoulli_examples():
    assert bernoulli(0) == 1
    assert bernoulli(1) == Fraction(-1, 2)
    assert bernoulli(3) == 0
    assert bernoulli(12) == Fraction(-691, 2730)


def test_bernoulli_matches_recurrence():
    ref = bernoulli_recurrence(120)
    assert [bernoulli(m) for m in range(121)] == ref


@pytest.mark.parametrize("m", [2, 10, 36, 100, 250, 500])
def test_bernoulli_matches_sympy(m):
    b = sympy.bernoulli(m)
    assert bernoulli(m) == Fraction(int(b.p), int(b.q))


def test_bernoulli_bound():
    with pytest.raises(BoundExceeded):
        bernoulli(40, bound=30)
    with pytest.raises(ValueError):
        bernoulli(-2)


@given(st.integers(1, 400))
def test_von_staudt_clausen_denominator(h):
    m = 2 * h
    den = 1
    for q in sympy.primerange(2, m + 2):
        if m % (q - 1) == 0:
            den *= q
    assert bernoulli(m).denominator == den


def test_zeta_examples():
    assert zeta_neg(-1) == Fraction(-1, 12)
    assert zeta_neg(-2) == 0
    assert zeta_neg(-11) == Fraction(691, 32760)
    with pytest.raises(ValueError):
        zeta_neg(0)


# -- branch specs and interpolation data ----------------------------------------------------------


def test_branch_spec_rejects_excluded_components():
    with pytest.raises(ValueError):
        spec(5, 1)
    with pytest.raises(ValueError):
        spec(5, 5)  # 5 = 1 mod 4
    with pytest.raises(ValueError):
        spec(7, 2)


def test_nodes_follow_the_congruence_class():
    s = spec(37, 5)
    assert [s.node(i) for i in range(3)] == [-31, -67, -103]
    assert spec(5, 3).node(0) == -1


def test_interp_value_examples():
    s = spec(5, 3)
    ctx = s.ctx
    assert interp_value(s, -1).value == embed_rational(1, 3, ctx).value
    val = (1 - 5**5) * Fraction(-1, 252)
    assert interp_value(s, -5).value == embed_rational(val.numerator, val.denominator, ctx).value
    with pytest.raises(ValueError):
        interp_value(s, -3)
    with pytest.raises(ValueError):
        interp_value(s, 3)


@given(st.sampled_from([(5, 3), (7, 3), (7, 5), (11, 3), (11, 7), (13, 5), (37, 5)]), st.integers(0, 25), st.integers(0, 25))
def test_kummer_congruence(pk, i, j):
    p, k = pk
    s = spec(p, k, M=3)
    a, b = interp_value(s, s.node(i)), interp_value(s, s.node(j))
    assert (a.value - b.value) % p == 0


# -- branch series ---------------------------------------------------------------------------


def test_regular_branch_is_a_unit():
    f = branch_by_interpolation(spec(5, 3))
    assert f.coeffs[0].is_unit()


def test_irregular_branch_constant_term():
    f = branch_by_interpolation(spec(37, 5))
    assert f.coeffs[0].valuation() == 1
    assert f.coeffs[1].is_unit()


@pytest.mark.parametrize("p,k", [(5, 3), (7, 3), (7, 5), (13, 7), (37, 5)])
def test_held_out_nodes(p, k):
    # evaluating at x with v(x) = 1 certifies N digits, so N >= M - 2
    s = spec(p, k, N=12)
    f = branch_by_interpolation(s)
    for _, got, expected in held_out_residuals(s, f, 3):
        assert got.prec >= 10
        assert got.agrees(expected, 10)


@pytest.mark.parametrize("p,k", [(5, 3), (7, 3), (7, 5), (11, 3), (11, 5), (11, 7), (37, 5), (37, 3)])
def test_constant_term_is_minus_generalized_bernoulli(p, k):
    s = spec(p, k, M=4)
    f = branch_by_interpolation(s)
    expected = (-direct_b1(-k, p, 4)) % p**3
    assert (f.coeffs[0].value - expected) % p**3 == 0
    assert vp(f.coeffs[0].value, p) == constant_term_anchor(s)


def test_interpolation_details():
    res = branch_by_interpolation(spec(7, 3), details=True)
    assert len(res.nodes) == 8 + 12
    assert res.working_precision >= 12 + len(res.nodes)
    assert res.series.N == 8


# -- generalized Bernoulli numbers ---------------------------------------------------------------


def test_b1_small_example():
    # r = 2 is even, so the sum is exactly zero
    p, M = 5, 6
    assert gen_bernoulli_b1(2, PrimeContext(p, M)).value == direct_b1(2, p, M) % p ** (M - 1) == 0
    assert gen_bernoulli_b1(1, PrimeContext(p, M)).value == direct_b1(1, p, M) % p ** (M - 1)


def test_b1_irregular_pair():
    x = gen_bernoulli_b1(31, PrimeContext(37, 3))
    assert x.valuation() == 1
    assert x.value == direct_b1(31, 37, 3) % 37**2


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23, 29, 31])
def test_b1_regular_primes(p):
    ctx = PrimeContext(p, 4)
    for r in range(1, p - 1):
        if (r + 1) % (p - 1) == 0:
            continue
        x = gen_bernoulli_b1(r, ctx)
        if r % 2:
            assert x.valuation() == 0
        else:
            assert x.value == 0  # even characters have B_1 = 0


def test_b1_rejects_trivial_and_minus_one():
    ctx = PrimeContext(7, 4)
    with pytest.raises(ValueError):
        gen_bernoulli_b1(0, ctx)
    with pytest.raises(ValueError):
        gen_bernoulli_b1(5, ctx)


# -- lambda ------------------------------------------------------------------------------------


@pytest.mark.parametrize("p,k,lam", [(5, 3, 0), (7, 3, 0), (7, 5, 0), (37, 5, 1), (37, 3, 0)])
def test_lambda_examples(p, k, lam):
    got, P, _, _ = lambda_invariant(spec(p, k))
    assert got == lam == P.degree


def test_irregular_distinguished_polynomial():
    _, P, _, f = lambda_invariant(spec(37, 5))
    # P = T - alpha with alpha the zero of the branch series
    assert vp(P.coeffs[0].value, 37) == 1
    assert P.coeffs[0].value % 37**8 == 1291832247220 % 37**8


# -- Stickelberger construction ---------------------------------------------------------------------


@given(st.sampled_from([(5, 1, 3), (7, 1, 3), (3, 2, 1), (13, 1, 5)]), st.lists(st.integers(1, 300), max_size=4))
def test_stickelberger_partition_independent(case, cuts):
    p, n, r = case
    top = p ** (n + 1)
    points = sorted({0, top} | {c % top for c in cuts})
    total = stickelberger_weights(p, n, r, 8)
    parts = [stickelberger_weights(p, n, r, 8, range(max(a, 1), b)) for a, b in zip(points, points[1:])]
    mod = p ** (8 + n + 1)
    assert [sum(col) % mod for col in zip(*parts)] == total


def test_trivial_twist_rejected():
    with pytest.raises(ValueError):
        stickelberger_weights(5, 1, 0, 6)
    with pytest.raises(ValueError):
        stickelberger_weights(7, 1, 12, 6)


def test_calibration_picks_one_convention():
    for p, k in [(5, 3), (7, 3), (7, 5), (13, 5)]:
        cal = calibrate(spec(p, k))
        assert cal.convention.r(k) % (p - 1) == (-k) % (p - 1)
        assert cal.convention.exponent_sign == -1 and cal.convention.sign == -1
        assert len(cal.nodes) == 3


def test_stickelberger_level_zero_irregular():
    z = branch_by_stickelberger(spec(37, 5), 0)
    assert z.coeffs[0].valuation() == 1


@pytest.mark.parametrize("p,k,n", [(5, 3, 0), (5, 3, 1), (5, 3, 2), (7, 3, 1), (7, 5, 1), (13, 3, 1), (37, 5, 0)])
def test_two_constructions_agree(p, k, n):
    s = spec(p, k)
    result = compare_images(interpolation_image(s, n, target=10), branch_by_stickelberger(s, n))
    assert result["agree"] and result["min_certified"] >= 10


def test_wrong_twist_disagrees():
    s = spec(5, 3)
    wrong = branch_by_stickelberger(s, 1, Convention("1-k", -1, -1))
    assert not compare_images(interpolation_image(s, 1, target=10), wrong)["agree"]


def test_default_image_uses_minimal_truncation():
    s = spec(5, 3)
    img = interpolation_image(s, 1)
    direct = reduce_mod_omega(branch_by_interpolation(BranchSpec(s.ctx, 3, 8, 1)), 1)
    assert img.values() == direct.values()


def test_nodes_for_level():
    N, K = nodes_for_level(5, 1, 10)
    assert K == N + 10
    assert nodes_for_level(5, 0, 10) == (1, 11)  # omega_0 = T
    with pytest.raises(BoundExceeded):
        nodes_for_level(37, 2, 10, cap=500)


def test_level_image_beyond_bernoulli_bound():
    with pytest.raises(BoundExceeded):
        interpolation_image(spec(37, 5), 2, target=10, bound=2000)
