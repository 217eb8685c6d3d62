"""End-to-end comparison of the L-function side and the BF path-integral side.

LHS: e_n = v_p(prod over p^n-th roots of unity zeta of z(zeta - 1)), computed as
the valuation of Res(omega_n, z mod omega_n) for the branch series z of an odd
component k != 1; the LHS quantity is p^e_n.

RHS: the limit over m of the level-k BF sums over a synthetic field space whose
class-group data is either the LHS prediction itself (consistency mode, cyclic
of order p^e_n) or externally supplied eigenspace orders (verification mode).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .bf import (
    ENUMERATION_BOUND,
    bf_sum_bruteforce,
    bf_sum_closed_form,
    cyclotomic_scenario,
    level_instance,
    stabilization_limit,
)
from .errors import NotStabilized, PrecisionExhausted, SchemaError
from .lfunction import BranchSpec, calibrate, branch_by_stickelberger, constant_term_anchor, lambda_invariant
from .padic import PrimeContext
from .series import DistinguishedPoly, resultant_valuation, shift_variable

DEFAULT_PRECISION = 12
PRECISION_CEILING = 96
CONSISTENCY = "consistency"
VERIFICATION = "verification"

# -- class data fixtures ----------------------------------------------------------------

FIXTURE_SCHEMA = {
    "type": "object",
    "required": ["entries"],
    "properties": {
        "description": {"type": "string"},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["p", "k", "n", "class_exponents"],
                "additionalProperties": False,
                "properties": {
                    "p": {"type": "integer", "minimum": 3},
                    "k": {"type": "integer"},
                    "n": {"type": "integer", "minimum": 0},
                    "class_exponents": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "source": {"type": "string"},
                },
            },
        },
    },
}


def load_fixtures(path: str | Path | None = None) -> dict[tuple[int, int, int], tuple[int, ...]]:
    """(p, k mod (p-1), n) -> exponents of the k-eigenspace of Cl[p^inf] at level n."""
    import jsonschema

    if path is None:
        text = resources.files("arithpath.data").joinpath("class_fixtures.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        doc = json.loads(text)
        jsonschema.validate(doc, FIXTURE_SCHEMA)
    except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
        raise SchemaError(f"fixture document: {getattr(exc, 'message', exc)}") from None
    out = {}
    for e in doc["entries"]:
        p = e["p"]
        out[(p, e["k"] % (p - 1), e["n"])] = tuple(e["class_exponents"])
    return out


# -- RHS --------------------------------------------------------------------------------------


@dataclass
class RHSResult:
    exponent: int
    value: int
    sums: dict[int, int]
    bruteforce_checked: list[int]
    class_exponents: tuple[int, ...]


def rhs_from_class_data(p: int, k: int, class_exponents: Sequence[int], m_max: int | None = None, bound: int = ENUMERATION_BOUND) -> RHSResult:
    """Stable value of the level-k BF sums for m = 1..m_max (plain mode, odd k)."""
    cs = tuple(int(c) for c in class_exponents)
    m_max = m_max or (max(cs, default=0) + 3)
    sums, brute = {}, []
    for m in range(1, m_max + 1):
        inst = level_instance(cyclotomic_scenario(p, m, {k: cs}).instance, k)
        value = bf_sum_closed_form(inst)
        if inst.A.order * inst.B.order <= bound:
            if bf_sum_bruteforce(inst, bound) != value:
                raise AssertionError(f"closed form and enumeration disagree at m={m}")
            brute.append(m)
        sums[m] = value
    limit = stabilization_limit(sums, "plain")
    e = 0
    x = limit
    while x % p == 0:
        x //= p
        e += 1
    if x != 1:
        raise NotStabilized(f"limit {limit} is not a power of {p}")
    return RHSResult(e, limit, sums, brute, cs)


# -- LHS --------------------------------------------------------------------------------------


@dataclass
class LHSResult:
    exponent: int
    precision: int
    calibration: dict


def lhs_exponent(p: int, k: int, n: int, M: int = DEFAULT_PRECISION, ceiling: int = PRECISION_CEILING) -> LHSResult:
    """e_n, escalating precision until the resultant is resolved with 4 spare digits."""
    while True:
        spec = BranchSpec(PrimeContext(p, M), k)
        try:
            cal = calibrate(spec)
            z = branch_by_stickelberger(spec, n, cal.convention)
            e = resultant_valuation(z, n)
            if e + 4 <= M:
                return LHSResult(e, M, cal.as_dict())
        except PrecisionExhausted:
            pass
        if 2 * M > ceiling:
            raise PrecisionExhausted(f"level {n} resultant unresolved at precision {M} (ceiling {ceiling})")
        M *= 2


# -- report -------------------------------------------------------------------------------------


@dataclass
class TheoremReport:
    p: int
    k: int
    n: int
    precision: int
    lhs_exponent: int
    lhs: int
    lam: int
    distinguished_polynomial: list[int]
    q_polynomial: list[int]
    rhs_exponent: int
    rhs: int
    rhs_sums: dict[int, int]
    rhs_bruteforce_checked: list[int]
    class_exponents: list[int]
    mode: str
    growth: list[dict]
    calibration: dict
    checks: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "agree" if self.lhs_exponent == self.rhs_exponent else "disagree"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        d["lambda"] = d.pop("lam")
        d["rhs_sums"] = {str(m): v for m, v in sorted(self.rhs_sums.items())}
        return d


def branch_polynomials(p: int, k: int, M: int = DEFAULT_PRECISION):
    """(lambda, P coefficients, Q(t) = P(t - 1) coefficients) for the branch series."""
    lam, P, _, _ = lambda_invariant(BranchSpec(PrimeContext(p, M), k))
    Q = shift_variable(P)
    return lam, [c.signed() for c in P.coeffs], [c.signed() for c in Q.coeffs]


def growth_table(p: int, k: int, n_max: int, M: int = DEFAULT_PRECISION, poly: Sequence[int] | None = None) -> list[dict]:
    """Rows (n, e_n, delta) for n = 0..n_max, from the branch or a supplied distinguished polynomial."""
    rows = []
    for n in range(n_max + 1):
        if poly is not None:
            e = resultant_valuation(DistinguishedPoly.from_ints(PrimeContext(p, M), list(poly)), n)
        else:
            e = lhs_exponent(p, k, n, M).exponent
        rows.append({"n": n, "e": e, "delta": None if not rows else e - rows[-1]["e"]})
    return rows


def growth_check(rows: list[dict], lam: int) -> dict:
    """First n with delta = lambda, and whether it persists to the end of the table."""
    first = next((r["n"] for r in rows if r["delta"] == lam), None)
    persists = first is not None and all(r["delta"] == lam for r in rows if r["n"] >= first)
    return {"lambda": lam, "first_n": first, "persists": persists}


def run_theorem(
    p: int,
    k: int,
    n: int,
    M: int = DEFAULT_PRECISION,
    *,
    fixtures: Mapping | None = None,
    class_exponents: Sequence[int] | None = None,
    bound: int = ENUMERATION_BOUND,
) -> TheoremReport:
    """Compute both sides at level n.

    Class data for the RHS comes from ``class_exponents`` or ``fixtures``
    (verification mode) or else from the LHS prediction (consistency mode,
    cyclic eigenspace of order p^e_n).
    """
    BranchSpec(PrimeContext(p, M), k)  # validates k
    lhs = lhs_exponent(p, k, n, M)
    rows = []
    for level in range(n + 1):
        e_l = lhs.exponent if level == n else lhs_exponent(p, k, level, lhs.precision).exponent
        rows.append({"n": level, "e": e_l, "delta": None if not rows else e_l - rows[-1]["e"]})
    lam, P, Q = branch_polynomials(p, k, lhs.precision)

    if class_exponents is not None:
        mode, cs = VERIFICATION, tuple(class_exponents)
    elif fixtures is not None and (p, k % (p - 1), n) in fixtures:
        mode, cs = VERIFICATION, fixtures[(p, k % (p - 1), n)]
    else:
        mode, cs = CONSISTENCY, ((lhs.exponent,) if lhs.exponent else ())
    rhs = rhs_from_class_data(p, k, cs, bound=bound)

    checks = {"growth": growth_check(rows, lam)}
    if n == 0:
        checks["constant_term_anchor"] = constant_term_anchor(BranchSpec(PrimeContext(p, lhs.precision), k)) == lhs.exponent
    return TheoremReport(
        p=p,
        k=k,
        n=n,
        precision=lhs.precision,
        lhs_exponent=lhs.exponent,
        lhs=p**lhs.exponent,
        lam=lam,
        distinguished_polynomial=P,
        q_polynomial=Q,
        rhs_exponent=rhs.exponent,
        rhs=rhs.value,
        rhs_sums=rhs.sums,
        rhs_bruteforce_checked=rhs.bruteforce_checked,
        class_exponents=list(cs),
        mode=mode,
        growth=rows,
        calibration=lhs.calibration,
        checks=checks,
    )
