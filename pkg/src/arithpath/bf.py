"""Finite BF path integrals over abelian p-group field spaces.

A field space is a pair (A, B) of finite abelian p-groups together with a
Bockstein-type map d: A -> C and a pairing C x B -> (1/p^m)Z/Z.  The action is
BF(a, b) = <d a, b>, and the path integral is

    Z = sum over (a, b) of exp(2 pi i BF(a, b)).

Sums are evaluated two ways.  ``bf_sum_bruteforce`` tallies phases exactly
and reduces the tally in Z[x]/Phi_{p^m}(x), so nothing is ever rounded.
``bf_sum_closed_form`` uses character orthogonality: the inner sum over b is
|B| when <d a, .> is trivial on B and 0 otherwise, so Z = |ker| * |B| with
the kernel sized through Smith normal form.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BoundExceeded, EquivarianceError, NonIntegerSum, NotStabilized, SchemaError
from .linalg import smith_valuations
from .padic import is_prime

ENUMERATION_BOUND = 2**22
_CHUNK = 1 << 20


def _v(x: int, p: int, cap: int) -> int:
    x %= p**cap
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class FiniteAbelianPGroup:
    """The group of Z/p^r_1 + ... + Z/p^r_s, elements as coordinate tuples."""

    p: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        object.__setattr__(self, "exponents", tuple(int(r) for r in self.exponents))
        if any(r < 1 for r in self.exponents):
            raise ValueError("cyclic factor exponents must be >= 1")

    @property
    def rank(self) -> int:
        return len(self.exponents)

    @property
    def log_order(self) -> int:
        return sum(self.exponents)

    @property
    def order(self) -> int:
        return self.p**self.log_order

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**r for r in self.exponents)

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.rank and all(0 <= c < q for c, q in zip(x, self.moduli))

    def check(self, x: Sequence[int]) -> tuple[int, ...]:
        if not self.contains(x):
            raise ValueError(f"{tuple(x)} is not a reduced element of {self}")
        return tuple(int(c) for c in x)

    def elements(self) -> np.ndarray:
        """All elements, one per row, in lexicographic order."""
        if self.rank == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.meshgrid(*[np.arange(q, dtype=np.int64) for q in self.moduli], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def direct_sum(self, other: "FiniteAbelianPGroup") -> "FiniteAbelianPGroup":
        if other.p != self.p:
            raise ValueError("prime mismatch")
        return FiniteAbelianPGroup(self.p, self.exponents + other.exponents)

    def __str__(self):
        if not self.exponents:
            return "0"
        return " + ".join(f"Z/{self.p}^{r}" for r in self.exponents)


def trivial_group(p: int) -> FiniteAbelianPGroup:
    return FiniteAbelianPGroup(p, ())


def _as_matrix(rows, nrows: int, ncols: int) -> tuple[tuple[int, ...], ...]:
    mat = tuple(tuple(int(x) for x in row) for row in rows)
    if len(mat) != nrows or any(len(r) != ncols for r in mat):
        raise ValueError(f"matrix must be {nrows} x {ncols}")
    return mat


@dataclass(frozen=True)
class Homomorphism:
    """matrix[i][j] is coordinate i of the image of generator j."""

    domain: FiniteAbelianPGroup
    codomain: FiniteAbelianPGroup
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        mat = _as_matrix(self.matrix, self.codomain.rank, self.domain.rank)
        p = self.domain.p
        # generator j has order p^r_j, so its image must be killed by p^r_j
        reduced = []
        for i, s in enumerate(self.codomain.exponents):
            row = []
            for j, r in enumerate(self.domain.exponents):
                x = mat[i][j] % p**s
                if _v(x, p, s) < s - r:
                    raise ValueError(f"entry ({i},{j}) does not respect orders: needs {p}^{s - r} | {mat[i][j]}")
                row.append(x)
            reduced.append(tuple(row))
        object.__setattr__(self, "matrix", tuple(reduced))

    @classmethod
    def zero(cls, domain, codomain):
        return cls(domain, codomain, [[0] * domain.rank for _ in range(codomain.rank)])

    def apply(self, a: Sequence[int]) -> tuple[int, ...]:
        a = self.domain.check(a)
        return tuple(
            sum(c * x for c, x in zip(row, a)) % q for row, q in zip(self.matrix, self.codomain.moduli)
        )

    def compose(self, first: "Homomorphism") -> "Homomorphism":
        """self o first."""
        if first.codomain != self.domain:
            raise ValueError("composition of incompatible maps")
        A = np.array(self.matrix, dtype=object).reshape(self.codomain.rank, self.domain.rank)
        B = np.array(first.matrix, dtype=object).reshape(first.codomain.rank, first.domain.rank)
        C = A.dot(B) if A.size and B.size else np.zeros((self.codomain.rank, first.domain.rank), dtype=object)
        return Homomorphism(first.domain, self.codomain, C.tolist())

    def image_log_order(self) -> int:
        """log_p |im|.  The codomain embeds in (Z/p^S)^s via x_i -> p^(S - s_i) x_i."""
        cod = self.codomain
        if cod.rank == 0 or self.domain.rank == 0:
            return 0
        p, S = cod.p, max(cod.exponents)
        scaled = [[x * p ** (S - s) for x in row] for row, s in zip(self.matrix, cod.exponents)]
        # rows of the transpose are generator images; their span is the image
        vals = smith_valuations([list(col) for col in zip(*scaled)], p, S)
        return sum(S - min(v, S) for v in vals)

    def kernel_order(self) -> int:
        return self.domain.p ** (self.domain.log_order - self.image_log_order())


@dataclass(frozen=True)
class Pairing:
    """Bilinear C x B -> (1/p^m)Z/Z; <e_i, f_j> = matrix[i][j] / p^m."""

    left: FiniteAbelianPGroup
    right: FiniteAbelianPGroup
    m: int
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("pairing level m must be >= 1")
        mat = _as_matrix(self.matrix, self.left.rank, self.right.rank)
        p, m = self.left.p, self.m
        reduced = []
        for i, c in enumerate(self.left.exponents):
            row = []
            for j, b in enumerate(self.right.exponents):
                x = mat[i][j] % p**m
                if _v(x, p, m) < m - min(c, b, m):
                    raise ValueError(f"pairing entry ({i},{j}) is not well defined on the factor orders")
                row.append(x)
            reduced.append(tuple(row))
        object.__setattr__(self, "matrix", tuple(reduced))

    @classmethod
    def standard(cls, group: FiniteAbelianPGroup, m: int) -> "Pairing":
        """x . y / p^r on matching cyclic factors of order p^r <= p^m."""
        if any(r > m for r in group.exponents):
            raise ValueError("standard pairing needs factor exponents <= m")
        n = group.rank
        mat = [[group.p ** (m - r) if i == j else 0 for j in range(n)] for i, r in enumerate(group.exponents)]
        return cls(group, group, m, mat)

    def value(self, c: Sequence[int], b: Sequence[int]) -> int:
        c, b = self.left.check(c), self.right.check(b)
        return sum(ci * x * bj for ci, row in zip(c, self.matrix) for x, bj in zip(row, b)) % self.left.p**self.m

    def _induced_image_log(self, transpose: bool) -> int:
        # image of C -> Hom(B, Z/p^m) (or B -> Hom(C, Z/p^m)) inside (Z/p^m)^rank
        p, m = self.left.p, self.m
        mat = [list(r) for r in self.matrix]
        if transpose:
            mat = [list(c) for c in zip(*mat)] if mat else []
        if not mat or not mat[0]:
            return 0
        vals = smith_valuations(mat, p, m)
        return sum(m - min(v, m) for v in vals)

    def is_perfect(self) -> bool:
        """C -> Hom(B, (1/p^m)Z/Z) is bijective."""
        if self.left.order != self.right.order:
            return False
        return self._induced_image_log(False) == self.left.log_order and self._induced_image_log(True) == self.right.log_order


@dataclass(frozen=True)
class Grading:
    """Eigen-levels mod (p-1) for each cyclic summand of A, B and C."""

    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]


@dataclass(frozen=True)
class BFInstance:
    A: FiniteAbelianPGroup
    B: FiniteAbelianPGroup
    C: FiniteAbelianPGroup
    d: Homomorphism
    pairing: Pairing
    grading: Grading | None = None

    def __post_init__(self):
        if self.d.domain != self.A or self.d.codomain != self.C:
            raise ValueError("d must map A to C")
        if self.pairing.left != self.C or self.pairing.right != self.B:
            raise ValueError("pairing must be on C x B")
        if self.grading is not None:
            g = self.grading
            object.__setattr__(
                self,
                "grading",
                Grading(*(tuple(int(x) % (self.p - 1) for x in levels) for levels in (g.A, g.B, g.C))),
            )
            check_equivariance(self)

    @property
    def p(self) -> int:
        return self.A.p

    @property
    def m(self) -> int:
        return self.pairing.m

    def composite(self) -> np.ndarray:
        """G with BF(a, b) = a^T G b mod p^m (object dtype, entries reduced)."""
        pm = self.p**self.m
        D = np.array(self.d.matrix, dtype=object).reshape(self.C.rank, self.A.rank)
        P = np.array(self.pairing.matrix, dtype=object).reshape(self.C.rank, self.B.rank)
        if D.size == 0 or P.size == 0:
            return np.zeros((self.A.rank, self.B.rank), dtype=object)
        return D.T.dot(P) % pm


def check_equivariance(inst: BFInstance) -> None:
    g, q = inst.grading, inst.p - 1
    if len(g.A) != inst.A.rank or len(g.B) != inst.B.rank or len(g.C) != inst.C.rank:
        raise EquivarianceError("grading must assign one level per cyclic summand")
    for i, row in enumerate(inst.d.matrix):
        for j, x in enumerate(row):
            if x and g.C[i] != g.A[j]:
                raise EquivarianceError(f"d sends level {g.A[j]} into level {g.C[i]}")
    for i, row in enumerate(inst.pairing.matrix):
        for j, x in enumerate(row):
            if x and (g.C[i] + g.B[j]) % q:
                raise EquivarianceError(f"pairing couples levels {g.C[i]} and {g.B[j]}, which do not sum to 0 mod {q}")


@dataclass(frozen=True)
class Phase:
    """exp(2 pi i c / p^m)."""

    p: int
    m: int
    c: int

    def __post_init__(self):
        object.__setattr__(self, "c", self.c % self.p**self.m)


def bf_value(inst: BFInstance, a: Sequence[int], b: Sequence[int]) -> Phase:
    return Phase(inst.p, inst.m, inst.pairing.value(inst.d.apply(a), inst.B.check(b)))


# -- evaluation --------------------------------------------------------------------------


def phase_counts(inst: BFInstance, bound: int = ENUMERATION_BOUND) -> Counter:
    """N_c = #{(a, b) : BF(a, b) = c}, sparse.  Chunks over A merge by addition."""
    if inst.A.order * inst.B.order > bound:
        raise BoundExceeded(f"|A||B| = {inst.A.order * inst.B.order} exceeds the enumeration bound {bound}")
    pm = inst.p**inst.m
    G = inst.composite().astype(np.int64)
    A_el = inst.A.elements()
    B_el = inst.B.elements()
    counts = Counter()
    step = max(1, _CHUNK // max(1, len(B_el)))
    for s in range(0, len(A_el), step):
        chunk = A_el[s : s + step]
        if G.size:
            phases = (((chunk @ G) % pm) @ B_el.T) % pm
        else:
            phases = np.zeros((len(chunk), len(B_el)), dtype=np.int64)
        vals, cnt = np.unique(phases, return_counts=True)
        counts.update(dict(zip(vals.tolist(), cnt.tolist())))
    return counts


def cyclotomic_reduce(counts: Mapping[int, int], p: int, m: int) -> dict[int, int]:
    """Nonzero coefficients of sum N_c x^c modulo Phi_{p^m}(x) = sum_{i<p} x^(i p^(m-1)).

    Write c = i p^(m-1) + r.  Since x^((p-1)p^(m-1) + r) = -sum_{i<p-1} x^(i p^(m-1) + r),
    the reduced coefficient at i p^(m-1) + r (i < p-1) is N_c - N_{(p-1)p^(m-1) + r}.
    """
    q = p ** (m - 1)
    top = (p - 1) * q
    out = {}
    for r in {c % q for c in counts}:
        t = counts.get(top + r, 0)
        for i in range(p - 1):
            x = counts.get(i * q + r, 0) - t
            if x:
                out[i * q + r] = x
    return out


def bf_sum_bruteforce(inst: BFInstance, bound: int = ENUMERATION_BOUND) -> int:
    rem = cyclotomic_reduce(phase_counts(inst, bound), inst.p, inst.m)
    bad = sorted(c for c in rem if c)
    if bad:
        raise NonIntegerSum(f"nonconstant cyclotomic coefficients survive at exponents {bad[:8]}")
    return rem.get(0, 0)


def bf_kernel_log_order(inst: BFInstance) -> int:
    """log_p #{a : <d a, .> = 0 on B}."""
    p, m = inst.p, inst.m
    G = inst.composite()
    if G.size == 0:
        return inst.A.log_order
    vals = smith_valuations(G.tolist(), p, m)
    return inst.A.log_order - sum(m - min(v, m) for v in vals)


def bf_sum_closed_form(inst: BFInstance) -> int:
    return inst.p ** (bf_kernel_log_order(inst) + inst.B.log_order)


# -- grading ------------------------------------------------------------------------------


def _restrict(group: FiniteAbelianPGroup, idx: list[int]) -> FiniteAbelianPGroup:
    return FiniteAbelianPGroup(group.p, tuple(group.exponents[i] for i in idx))


def level_instance(inst: BFInstance, k: int) -> BFInstance:
    """The summand pairing level k fields of A with level -k fields of B."""
    g, q = inst.grading, inst.p - 1
    k %= q
    ia = [i for i, x in enumerate(g.A) if x == k]
    ic = [i for i, x in enumerate(g.C) if x == k]
    ib = [i for i, x in enumerate(g.B) if x == (-k) % q]
    A, B, C = _restrict(inst.A, ia), _restrict(inst.B, ib), _restrict(inst.C, ic)
    d = Homomorphism(A, C, [[inst.d.matrix[i][j] for j in ia] for i in ic])
    P = Pairing(C, B, inst.m, [[inst.pairing.matrix[i][j] for j in ib] for i in ic])
    return BFInstance(A, B, C, d, P, Grading((k,) * len(ia), ((-k) % q,) * len(ib), (k,) * len(ic)))


@dataclass
class GradedSum:
    levels: dict[int, int]
    total: int
    product: int

    @property
    def splits(self) -> bool:
        return self.total == self.product


def graded_bf_sum(inst: BFInstance, method: str = "closed", bound: int = ENUMERATION_BOUND) -> GradedSum:
    """Per-level sums (keyed by the A-level k) and the total over the whole field space."""
    if inst.grading is None:
        raise EquivarianceError("instance carries no grading")
    check_equivariance(inst)
    evaluate = bf_sum_closed_form if method == "closed" else (lambda x: bf_sum_bruteforce(x, bound))
    q = inst.p - 1
    g = inst.grading
    levels = sorted(set(g.A) | {(-x) % q for x in g.B} | set(g.C))
    per = {k: evaluate(level_instance(inst, k)) for k in levels}
    return GradedSum(per, evaluate(inst), prod(per.values()))


# -- cyclotomic scenario ----------------------------------------------------------------------


def _check_p_power(x: int, p: int) -> int:
    if x < 1:
        raise ValueError(f"{x} is not a power of {p}")
    e = 0
    while x % p == 0:
        x //= p
        e += 1
    if x != 1:
        raise ValueError(f"order is not a power of {p}")
    return e


def prop21_product(orders: Sequence[int], p: int | None = None) -> int:
    """|(p^m Cl[p^2m])_k| * |(O^x / p^m)_k| * |(Cl/p^m)_k|."""
    if len(orders) != 3:
        raise ValueError("expected three group orders")
    if p is None:
        base = [o for o in orders if o > 1]
        p = min((f for f in range(2, base[0] + 1) if base[0] % f == 0), default=2) if base else 2
    for o in orders:
        _check_p_power(o, p)
    return prod(orders)


def unit_eigenspace_order(k: int, m: int, p: int) -> int:
    """|(O^x / (O^x)^(p^m))_k| for k != 1 mod (p-1): 1 for odd k, p^m for even k."""
    if (k - 1) % (p - 1) == 0:
        raise ValueError("the component k = 1 is excluded")
    return 1 if k % 2 else p**m


@dataclass
class Scenario:
    """Graded field space for the cyclotomic field, plus the factor maps of d."""

    instance: BFInstance
    f1: dict[int, Homomorphism]
    f2: dict[int, Homomorphism]
    unit_rank: dict[int, int]
    class_exponents: dict[int, tuple[int, ...]]

    def extracted_orders(self, k: int) -> tuple[int, int, int]:
        """(|ker f2|, |unit part|, |Cl/p^m|) at level k, read off the instance."""
        p, m = self.instance.p, self.instance.m
        units = p ** (m * self.unit_rank[k])
        return self.f2[k].kernel_order(), units, self.f2[k].codomain.order


def cyclotomic_scenario(p: int, m: int, class_data: Mapping[int, Sequence[int]]) -> Scenario:
    """Build the field space for levels k with given eigenspace class groups.

    class_data maps k to the exponents c_i of (Cl[p^inf])_k = + Z/p^c_i.
    At level k:  A_k = U_k + Cl[p^m]_k with U_k trivial for odd k and Z/p^m for
    even k;  C_k = (Cl/p^m)_k;  d = f2 o f1 where f1 projects away the units and
    f2: Cl[p^m] -> Cl/p^m is multiplication by p^max(c - m, 0) on each factor, so
    ker f2 = p^m Cl[p^2m].  B_-k is the dual of C_k under the standard pairing.
    """
    q = p - 1
    A_exp, A_lvl, B_exp, B_lvl, C_exp, C_lvl = [], [], [], [], [], []
    blocks = []
    f1s, f2s, units, classes = {}, {}, {}, {}
    for k in sorted(class_data):
        if (k - 1) % q == 0:
            raise ValueError("the component k = 1 is excluded")
        cs = tuple(int(c) for c in class_data[k] if int(c) > 0)
        u = 0 if k % 2 else 1
        tors = tuple(min(c, m) for c in cs)
        Ak = FiniteAbelianPGroup(p, (m,) * u + tors)
        Clk = FiniteAbelianPGroup(p, tors)
        Ck = FiniteAbelianPGroup(p, tors)
        f1 = Homomorphism(Ak, Clk, [[1 if j == i + u else 0 for j in range(Ak.rank)] for i in range(Clk.rank)])
        f2 = Homomorphism(
            Clk, Ck, [[p ** max(c - m, 0) if i == j else 0 for j in range(Clk.rank)] for i, c in enumerate(cs)]
        )
        f1s[k % q], f2s[k % q], units[k % q], classes[k % q] = f1, f2, u, cs
        blocks.append((f2.compose(f1), len(A_exp), len(C_exp)))
        A_exp += Ak.exponents
        A_lvl += [k % q] * Ak.rank
        C_exp += Ck.exponents
        C_lvl += [k % q] * Ck.rank
        B_exp += Ck.exponents
        B_lvl += [(-k) % q] * Ck.rank
    A, B, C = (FiniteAbelianPGroup(p, tuple(e)) for e in (A_exp, B_exp, C_exp))
    D = [[0] * A.rank for _ in range(C.rank)]
    for h, a0, c0 in blocks:
        for i, row in enumerate(h.matrix):
            for j, x in enumerate(row):
                D[c0 + i][a0 + j] = x
    d = Homomorphism(A, C, D)
    pairing = Pairing(C, B, m, [[p ** (m - c) if i == j else 0 for j in range(B.rank)] for i, c in enumerate(C_exp)])
    inst = BFInstance(A, B, C, d, pairing, Grading(tuple(A_lvl), tuple(B_lvl), tuple(C_lvl)))
    return Scenario(inst, f1s, f2s, units, classes)


def scenario_prediction(p: int, m: int, k: int, class_exponents: Sequence[int]) -> int:
    """Expected level-k sum: |U_k| * prod_i p^min(c_i, 2m)."""
    return unit_eigenspace_order(k, m, p) * prod(p ** min(int(c), 2 * m) for c in class_exponents)


# -- stabilization --------------------------------------------------------------------------


def stabilization_limit(values, mode: str = "plain", p: int | None = None, start: int = 1, window: int = 3):
    """Eventual value of an m-indexed sequence.

    ``values`` is a sequence whose first entry is at m = ``start``, or a mapping
    m -> value.  In divided mode entry m is divided by p^m first.  The last
    ``window`` entries must coincide; otherwise NotStabilized.
    """
    if isinstance(values, Mapping):
        items = sorted(values.items())
    else:
        items = list(enumerate(values, start))
    if len(items) < window:
        raise NotStabilized(f"need at least {window} values")
    if mode == "divided":
        if p is None:
            raise ValueError("divided mode needs p")
        seq = [Fraction(v, p**m) for m, v in items]
    elif mode == "plain":
        seq = [Fraction(v) for _, v in items]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    tail = seq[-window:]
    if any(x != tail[0] for x in tail):
        raise NotStabilized(f"last {window} values {[str(x) for x in tail]} differ; extend the m-range")
    x = tail[0]
    return int(x) if x.denominator == 1 else x


def strictly_increasing(values: Sequence[int]) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


# -- random instances -----------------------------------------------------------------------


def random_group(rng, p: int, max_rank: int, max_exp: int, min_rank: int = 1) -> FiniteAbelianPGroup:
    rank = int(rng.integers(min_rank, max_rank + 1))
    return FiniteAbelianPGroup(p, tuple(int(x) for x in rng.integers(1, max_exp + 1, size=rank)))


def random_homomorphism(rng, dom: FiniteAbelianPGroup, cod: FiniteAbelianPGroup, density: float = 1.0) -> Homomorphism:
    p = dom.p
    mat = []
    for s in cod.exponents:
        row = []
        for r in dom.exponents:
            if rng.random() >= density:
                row.append(0)
                continue
            low = max(s - r, 0)
            row.append(p**low * int(rng.integers(0, p ** (s - low))))
        mat.append(row)
    return Homomorphism(dom, cod, mat)


def random_pairing(rng, C: FiniteAbelianPGroup, B: FiniteAbelianPGroup, m: int) -> Pairing:
    p = C.p
    mat = []
    for c in C.exponents:
        row = []
        for b in B.exponents:
            low = m - min(c, b, m)
            row.append(p**low * int(rng.integers(0, p ** (m - low))))
        mat.append(row)
    return Pairing(C, B, m, mat)


def random_perfect_pairing(rng, C: FiniteAbelianPGroup, m: int) -> tuple[FiniteAbelianPGroup, Pairing]:
    """A perfect pairing C x B with B a shuffled copy of C, scaled by random units."""
    p = C.p
    perm = rng.permutation(C.rank)
    B = FiniteAbelianPGroup(p, tuple(C.exponents[i] for i in perm))
    mat = [[0] * C.rank for _ in range(C.rank)]
    for j, i in enumerate(perm):
        unit = int(rng.integers(1, p))
        mat[i][j] = p ** (m - C.exponents[i]) * unit
    return B, Pairing(C, B, m, mat)


def random_instance(rng, p: int, m: int, *, perfect: bool, bound: int = ENUMERATION_BOUND) -> BFInstance:
    """Random ungraded instance with |A||B| <= bound and C, B exponents <= m."""
    while True:
        A = random_group(rng, p, 3, m + 1)
        C = random_group(rng, p, 3, m)
        if perfect:
            B, P = random_perfect_pairing(rng, C, m)
        else:
            B = random_group(rng, p, 3, m)
            P = random_pairing(rng, C, B, m)
        if A.order * B.order <= bound:
            d = random_homomorphism(rng, A, C, density=float(rng.choice([0.5, 1.0])))
            return BFInstance(A, B, C, d, P)


def random_graded_instance(rng, p: int, m: int, levels: Sequence[int] | None = None, bound: int = ENUMERATION_BOUND) -> BFInstance:
    """Block-equivariant random instance; B summands sit at the negated levels."""
    q = p - 1
    if levels is None:
        n = int(rng.integers(1, min(3, q) + 1))
        levels = sorted({int(x) for x in rng.integers(0, q, size=n)})
    while True:
        parts = []
        for k in levels:
            A = random_group(rng, p, 2, m, min_rank=0)
            C = random_group(rng, p, 2, m, min_rank=0)
            if C.rank and rng.random() < 0.5:
                B, P = random_perfect_pairing(rng, C, m)
            else:
                B = random_group(rng, p, 2, m, min_rank=0)
                P = random_pairing(rng, C, B, m)
            parts.append((k, A, B, C, random_homomorphism(rng, A, C), P))
        total = prod(a.order * b.order for _, a, b, _, _, _ in parts)
        if total <= bound:
            break
    return assemble_graded(p, m, parts)


def assemble_graded(p: int, m: int, parts) -> BFInstance:
    """Block-diagonal instance from (k, A_k, B_-k, C_k, d_k, pairing_k) tuples."""
    q = p - 1
    A_exp, B_exp, C_exp, A_l, B_l, C_l = [], [], [], [], [], []
    offs = []
    for k, A, B, C, _, _ in parts:
        offs.append((len(A_exp), len(B_exp), len(C_exp)))
        A_exp += A.exponents
        B_exp += B.exponents
        C_exp += C.exponents
        A_l += [k % q] * A.rank
        B_l += [(-k) % q] * B.rank
        C_l += [k % q] * C.rank
    A, B, C = (FiniteAbelianPGroup(p, tuple(e)) for e in (A_exp, B_exp, C_exp))
    D = [[0] * A.rank for _ in range(C.rank)]
    P = [[0] * B.rank for _ in range(C.rank)]
    for (a0, b0, c0), (_, _, _, _, d, pr) in zip(offs, parts):
        for i, row in enumerate(d.matrix):
            for j, x in enumerate(row):
                D[c0 + i][a0 + j] = x
        for i, row in enumerate(pr.matrix):
            for j, x in enumerate(row):
                P[c0 + i][b0 + j] = x
    return BFInstance(A, B, C, Homomorphism(A, C, D), Pairing(C, B, m, P), Grading(tuple(A_l), tuple(B_l), tuple(C_l)))


# -- instance documents --------------------------------------------------------------------------

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "BF instance",
    "type": "object",
    "required": ["p", "m", "groups", "d", "pairing"],
    "additionalProperties": False,
    "properties": {
        "p": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
        "groups": {
            "type": "object",
            "required": ["A", "B", "C"],
            "additionalProperties": False,
            "properties": {
                g: {"type": "array", "items": {"type": "integer", "minimum": 1}} for g in ("A", "B", "C")
            },
        },
        "d": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "pairing": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "grading": {
            "type": "object",
            "required": ["A", "B", "C"],
            "additionalProperties": False,
            "properties": {g: {"type": "array", "items": {"type": "integer"}} for g in ("A", "B", "C")},
        },
        "description": {"type": "string"},
    },
}


def instance_from_dict(doc: Mapping) -> BFInstance:
    import jsonschema

    try:
        jsonschema.validate(doc, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"instance document: {exc.message}") from None
    p, m = doc["p"], doc["m"]
    try:
        A, B, C = (FiniteAbelianPGroup(p, tuple(doc["groups"][g])) for g in "ABC")
        d = Homomorphism(A, C, doc["d"])
        P = Pairing(C, B, m, doc["pairing"])
        grading = None
        if "grading" in doc:
            gr = doc["grading"]
            grading = Grading(tuple(gr["A"]), tuple(gr["B"]), tuple(gr["C"]))
        return BFInstance(A, B, C, d, P, grading)
    except EquivarianceError:
        raise
    except ValueError as exc:
        raise SchemaError(f"instance document: {exc}") from None


def instance_to_dict(inst: BFInstance) -> dict:
    doc = {
        "p": inst.p,
        "m": inst.m,
        "groups": {"A": list(inst.A.exponents), "B": list(inst.B.exponents), "C": list(inst.C.exponents)},
        "d": [list(r) for r in inst.d.matrix],
        "pairing": [list(r) for r in inst.pairing.matrix],
    }
    if inst.grading is not None:
        doc["grading"] = {"A": list(inst.grading.A), "B": list(inst.grading.B), "C": list(inst.grading.C)}
    return doc


def load_instance(path: str | Path) -> BFInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(doc)
