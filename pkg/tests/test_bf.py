import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from arithpath.bf import (
    BFInstance,
    FiniteAbelianPGroup,
    Grading,
    Homomorphism,
    Pairing,
    bf_sum_bruteforce,
    bf_sum_closed_form,
    bf_value,
    cyclotomic_reduce,
    cyclotomic_scenario,
    graded_bf_sum,
    instance_from_dict,
    instance_to_dict,
    level_instance,
    load_instance,
    phase_counts,
    prop21_product,
    random_graded_instance,
    random_instance,
    scenario_prediction,
    stabilization_limit,
    strictly_increasing,
    unit_eigenspace_order,
)
from arithpath.errors import BoundExceeded, EquivarianceError, NotStabilized, SchemaError


def cyclic(p, r):
    return FiniteAbelianPGroup(p, (r,))


def simple(p, m, r, d):
    G = cyclic(p, r)
    return BFInstance(G, G, G, Homomorphism(G, G, [[d]]), Pairing.standard(G, m))


def orthogonality_oracle(inst):
    """|B| * #{a : BF(a, .) vanishes on the generators of B}."""
    gens = [tuple(int(i == j) for i in range(inst.B.rank)) for j in range(inst.B.rank)]
    kernel = 0
    for a in itertools.product(*[range(q) for q in inst.A.moduli]):
        if all(bf_value(inst, a, g).c == 0 for g in gens):
            kernel += 1
    return kernel * inst.B.order


# -- groups, maps, pairings ---------------------------------------------------------------


def test_group_basics():
    G = FiniteAbelianPGroup(3, (1, 2))
    assert G.order == 27 and G.rank == 2 and G.moduli == (3, 9)
    assert len(G.elements()) == 27
    with pytest.raises(ValueError):
        FiniteAbelianPGroup(3, (0,))
    with pytest.raises(ValueError):
        FiniteAbelianPGroup(6, (1,))


def test_homomorphism_must_respect_orders():
    with pytest.raises(ValueError):
        Homomorphism(cyclic(5, 1), cyclic(5, 2), [[1]])  # Z/5 -> Z/25 needs a multiple of 5
    assert Homomorphism(cyclic(5, 1), cyclic(5, 2), [[5]]).kernel_order() == 1


def test_kernel_orders():
    assert Homomorphism(cyclic(5, 2), cyclic(5, 2), [[5]]).kernel_order() == 5
    assert Homomorphism.zero(cyclic(3, 2), cyclic(3, 1)).kernel_order() == 9


def test_pairing_perfection():
    G = FiniteAbelianPGroup(3, (1, 2))
    assert Pairing.standard(G, 2).is_perfect()
    assert not Pairing(G, G, 2, [[3, 0], [0, 0]]).is_perfect()
    with pytest.raises(ValueError):
        Pairing(cyclic(3, 1), cyclic(3, 1), 2, [[1]])  # must land in (1/3)Z/Z


# -- BF values and sums ---------------------------------------------------------------------------


def test_bf_value_examples():
    inst = simple(3, 1, 1, 1)
    assert bf_value(inst, (0,), (2,)).c == 0
    assert bf_value(inst, (1,), (2,)).c == 2
    zero = simple(3, 1, 1, 0)
    assert all(bf_value(zero, (a,), (b,)).c == 0 for a in range(3) for b in range(3))


def test_bf_value_rejects_out_of_range():
    with pytest.raises(ValueError):
        bf_value(simple(3, 1, 1, 1), (3,), (0,))


@pytest.mark.parametrize(
    "p,m,r,d,expected",
    [(3, 1, 1, 1, 3), (5, 2, 2, 5, 125), (3, 2, 2, 1, 9), (5, 2, 2, 0, 625), (7, 1, 1, 3, 7)],
)
def test_sum_examples(p, m, r, d, expected):
    inst = simple(p, m, r, d)
    assert bf_sum_bruteforce(inst) == bf_sum_closed_form(inst) == expected


def test_phase_tally_and_reduction():
    inst = simple(3, 1, 1, 1)
    assert phase_counts(inst) == {0: 5, 1: 2, 2: 2}
    assert cyclotomic_reduce({0: 1, 1: 1, 2: 1}, 3, 1) == {}
    assert cyclotomic_reduce({0: 4, 3: 1}, 3, 2) == {0: 4, 3: 1}


def test_bruteforce_bound():
    with pytest.raises(BoundExceeded):
        bf_sum_bruteforce(simple(5, 2, 2, 1), bound=100)


@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5, 7]), st.integers(1, 3), st.booleans())
def test_oracles_agree(seed, p, m, perfect):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, p, m, perfect=perfect, bound=20000)
    brute = bf_sum_bruteforce(inst)
    assert brute == bf_sum_closed_form(inst)
    assert brute > 0 and brute % inst.B.order == 0


@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5]), st.integers(1, 2))
def test_orthogonality_oracle(seed, p, m):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, p, m, perfect=bool(seed % 2), bound=3000)
    assert bf_sum_closed_form(inst) == orthogonality_oracle(inst)


def test_perfect_pairing_gives_kernel_times_b():
    rng = np.random.default_rng(7)
    for _ in range(20):
        inst = random_instance(rng, 5, 2, perfect=True)
        assert bf_sum_closed_form(inst) == inst.d.kernel_order() * inst.B.order


# -- grading ---------------------------------------------------------------------------------------


def test_level_zero_grading_is_ungraded():
    G = cyclic(5, 1)
    inst = BFInstance(G, G, G, Homomorphism(G, G, [[2]]), Pairing.standard(G, 1), Grading((0,), (0,), (0,)))
    res = graded_bf_sum(inst)
    assert res.levels == {0: bf_sum_closed_form(inst)} and res.total == 5


def test_two_levels_trivial_d():
    p, m = 5, 1
    A = FiniteAbelianPGroup(p, (1, 1))
    inst = BFInstance(A, A, A, Homomorphism.zero(A, A), Pairing.standard(A, m), Grading((1, 2), (3, 2), (1, 2)))
    res = graded_bf_sum(inst, method="brute")
    assert res.levels == {1: 25, 2: 25} and res.total == res.product == 625


def test_equivariance_violation():
    G = FiniteAbelianPGroup(5, (1, 1))
    d = Homomorphism(G, G, [[0, 1], [0, 0]])
    with pytest.raises(EquivarianceError):
        BFInstance(G, G, G, d, Pairing.standard(G, 1), Grading((1, 2), (3, 2), (1, 2)))


@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5, 7]), st.integers(1, 2))
def test_splitting(seed, p, m):
    rng = np.random.default_rng(seed)
    inst = random_graded_instance(rng, p, m, bound=50000)
    closed = graded_bf_sum(inst)
    brute = graded_bf_sum(inst, method="brute")
    assert closed.splits and closed.total == closed.product
    assert brute.levels == closed.levels and brute.total == closed.total


def test_level_instance_restricts_summands():
    cs = cyclotomic_scenario(5, 2, {2: [1], 3: [2]})
    assert level_instance(cs.instance, 3).A.exponents == (2,)
    assert level_instance(cs.instance, 2).A.exponents == (2, 1)


# -- class-group scenario ------------------------------------------------------------------------


def test_product_formula_examples():
    p, m, e = 5, 3, 2
    assert prop21_product((1, p**m, 1)) == p**m
    assert prop21_product((1, 1, 1)) == 1
    assert prop21_product((1, 1, p**e)) == p**e
    with pytest.raises(ValueError):
        prop21_product((1, 6, 1), p=5)


def test_unit_eigenspace_order():
    assert unit_eigenspace_order(3, 2, 5) == 1
    assert unit_eigenspace_order(2, 4, 5) == 5**4
    with pytest.raises(ValueError):
        unit_eigenspace_order(1, 2, 5)
    with pytest.raises(ValueError):
        unit_eigenspace_order(7, 2, 7)  # 7 = 1 mod 6


@given(st.sampled_from([5, 7]), st.integers(1, 3), st.lists(st.integers(1, 5), max_size=2), st.booleans())
def test_scenario_matches_prediction(p, m, cs, even):
    k = 2 if even else 3
    sc = cyclotomic_scenario(p, m, {k: cs})
    inst = level_instance(sc.instance, k)
    value = bf_sum_closed_form(inst)
    assert value == prop21_product(sc.extracted_orders(k), p) == scenario_prediction(p, m, k, cs)
    # d factors through the class group and is f2 o f1
    assert sc.f2[k].compose(sc.f1[k]).matrix == inst.d.matrix


def test_scenario_rejects_excluded_component():
    with pytest.raises(ValueError):
        cyclotomic_scenario(5, 1, {1: [1]})


# -- stabilization -----------------------------------------------------------------------------------


def test_stabilization_examples():
    p = 5
    assert stabilization_limit([1, 1, 1]) == 1
    assert stabilization_limit([p, p**2, p**3], "divided", p) == 1
    assert stabilization_limit([p, p * p, p * p**2], "divided", p, start=0) == p
    assert stabilization_limit([p**2, p**3, p**4], "divided", p) == p
    assert stabilization_limit({1: 9, 2: 9, 3: 9, 4: 9}) == 9


def test_stabilization_failures():
    with pytest.raises(NotStabilized):
        stabilization_limit([1, 5, 25])
    with pytest.raises(NotStabilized):
        stabilization_limit([1, 1])
    assert stabilization_limit([3, 9, 27], "divided", 3, start=2) == Fraction(1, 3)


def test_even_component_diverges_undivided():
    p = 3
    sums = [bf_sum_closed_form(level_instance(cyclotomic_scenario(p, m, {2: [1]}).instance, 2)) for m in range(1, 6)]
    assert strictly_increasing(sums)
    assert stabilization_limit(sums, "divided", p) == p
    with pytest.raises(NotStabilized):
        stabilization_limit(sums)


# -- instance documents -------------------------------------------------------------------------------


def test_round_trip_document(tmp_path):
    rng = np.random.default_rng(3)
    inst = random_graded_instance(rng, 5, 2)
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(instance_to_dict(inst)))
    assert load_instance(path) == inst


@pytest.mark.parametrize(
    "doc",
    [
        {"p": 3, "m": 1, "groups": {"A": [1], "B": [1], "C": [1]}, "d": [[1, 2]], "pairing": [[1]]},
        {"p": 3, "m": 1, "groups": {"A": [1], "B": [1]}, "d": [[1]], "pairing": [[1]]},
        {"p": 3, "m": 1, "groups": {"A": [1], "B": [1], "C": [1]}, "d": "x", "pairing": [[1]]},
        {"p": 3, "m": 1, "groups": {"A": [0], "B": [1], "C": [1]}, "d": [[1]], "pairing": [[1]]},
        {"p": 3, "m": 1, "groups": {"A": [1], "B": [1], "C": [1]}, "d": [[1]], "pairing": [[1]], "extra": 1},
    ],
)
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_instance(path)
