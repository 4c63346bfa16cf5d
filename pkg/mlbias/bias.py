# ========================================================================
#
# Imports
#
# ========================================================================
from collections import namedtuple
from fractions import Fraction
from functools import reduce
from math import comb
import itertools
import warnings
import numpy as np
from sympy import primefactors

from mlbias.groups import FinAbGroup, enumerate_elements, prime_power
from mlbias.maps import (
    MultiAffine,
    MultiMapG,
    MultiMapT,
    compose_through,
    from_group_map,
    primary_split,
    restrict_fix,
    restrict_subgroups,
)
from mlbias.scalars import CycloValue, compare_modulus, modulus_enclosure
import mlbias.utilities as utilities
from mlbias.utilities import BudgetExceeded, InputError, PreconditionError

DEFAULT_BUDGET = 10**6

TrivialBounds = namedtuple("TrivialBounds", ["lower", "upper", "zero_map"])
ExponentBound = namedtuple("ExponentBound", ["q", "bound", "sharp", "count_bound"])


# ========================================================================
#
# Classes
#
# ========================================================================
class BiasValue:
    """Exact bias: a rational in [0, 1] or a cyclotomic value of modulus ≤ 1"""

    def __init__(self, value):
        if isinstance(value, CycloValue):
            self.kind = "cyclo"
        else:
            value = Fraction(value)
            self.kind = "rational"
        self.value = value

    def __repr__(self):
        return f"BiasValue({self.kind}, {self.value})"

    def __str__(self):
        return str(self.value)

    def as_cyclo(self):
        if self.kind == "cyclo":
            return self.value
        return CycloValue.from_rational(self.value)

    def is_rational(self):
        return self.kind == "rational" or self.value.is_rational()

    def to_fraction(self):
        if self.kind == "rational":
            return self.value
        return self.value.to_fraction()

    def __eq__(self, other):
        if isinstance(other, BiasValue):
            return self.as_cyclo() == other.as_cyclo()
        if isinstance(other, (int, Fraction, CycloValue)):
            return self.as_cyclo() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.as_cyclo())

    def approx(self, prec=53):
        return self.as_cyclo().approx(prec)

    def modulus_enclosure(self, prec=53):
        return modulus_enclosure(self.as_cyclo(), prec)

    def decimal(self, digits=15):
        """Certified decimal rendering of the value"""
        c = self.approx(max(53, 4 * digits)).center
        if self.is_rational():
            return f"{c.real:.{digits}f}"
        return f"{c.real:.{digits}f}{c.imag:+.{digits}f}i"


# ========================================================================
class CheckResult:
    """Outcome of an inequality or identity check, truthy iff it holds.

    :param name: what was checked
    :type name: str
    :param holds: whether the relation holds
    :type holds: bool
    :param lhs: left side, exact
    :param rhs: right side, exact
    :param relation: "=", "<=" or ">="
    :type relation: str
    :param witness: the offending instance
    """

    def __init__(self, name, holds, lhs, rhs, relation="=", witness=None):
        self.name = name
        self.holds = bool(holds)
        self.lhs = lhs
        self.rhs = rhs
        self.relation = relation
        self.witness = witness

    def __bool__(self):
        return self.holds

    def __repr__(self):
        status = "holds" if self.holds else "FAILS"
        return f"CheckResult({self.name}: {self.lhs} {self.relation} {self.rhs} {status})"


# ========================================================================
#
# Functions
#
# ========================================================================
def _require_multilinear(phi):
    if not isinstance(phi, MultiMapT):
        raise InputError(f"expected a torus-valued multilinear map, got {phi!r}")


# ========================================================================
def _count_kernel_hits(phi, axis, rows):
    vectors = phi.restriction_vectors(axis, rows)
    return int((~vectors.any(axis=1)).sum())


# ========================================================================
def bias(phi, budget=DEFAULT_BUDGET, jobs=1):
    """Exact bias of a multilinear map by the kernel method.

    Drops the axis with the largest group, enumerates the others and counts
    the tuples whose restriction vanishes on the generators of that axis.

    :param phi: multilinear map
    :type phi: MultiMapT
    :param budget: maximal number of enumerated tuples
    :type budget: int
    :param jobs: number of processes
    :type jobs: int
    :returns: bias as a rational
    :rtype: BiasValue
    """
    _require_multilinear(phi)
    orders = [A.order for A in phi.domains]
    axis = int(np.argmax(orders))
    total = phi.size // orders[axis]
    if total > budget:
        raise BudgetExceeded("kernel-method bias", total, budget)

    if jobs > 1 and phi.k > 1:
        first = orders[0] if axis != 0 else orders[1]
        tasks = [(phi, axis, rows) for rows in utilities.chunk_ranges(first, jobs)]
        count = sum(utilities.starmap(_count_kernel_hits, tasks, jobs))
    else:
        count = _count_kernel_hits(phi, axis, None)
    return BiasValue(Fraction(count, total))


# ========================================================================
def bias_oracle(phi, budget=DEFAULT_BUDGET):
    """The literal average of e(φ(x)) over the whole domain, exactly"""
    if not isinstance(phi, (MultiMapT, MultiAffine)):
        raise InputError(f"cannot take the bias of {phi!r}")
    if phi.size > budget:
        raise BudgetExceeded("oracle bias", phi.size, budget)
    modulus = max(phi.modulus, 1)
    counts = np.bincount(phi.values(), minlength=modulus)
    return BiasValue(CycloValue.from_counts(counts.tolist(), phi.size))


# ========================================================================
def bias_recursion_check(phi, I, budget=DEFAULT_BUDGET):
    """bias(φ) is the average over x_I of bias(φ_{x_I})"""
    _require_multilinear(phi)
    I = tuple(sorted(I))
    if len(I) >= phi.k:
        raise InputError("the fixed axes must be a proper subset")
    if phi.size > budget:
        raise BudgetExceeded("recursion check", phi.size, budget)
    whole = bias(phi, budget).to_fraction()
    if not I:
        return CheckResult("recursion", True, whole, whole)
    total = Fraction(0)
    count = 0
    for a in itertools.product(*[list(enumerate_elements(phi.domains[i])) for i in I]):
        total += bias(restrict_fix(phi, I, a), budget).to_fraction()
        count += 1
    average = total / count
    return CheckResult("recursion", average == whole, whole, average, witness=phi)


# ========================================================================
def trivial_bounds(phi, i):
    """Bounds 1 - Π(1 - 1/|A_j|) ≤ bias(φ) ≤ 1 - Π(1 - 1/p_j) over j ≠ i.

    The upper bound only applies to nonzero maps; for the zero map it is
    reported as 1 and flagged.
    """
    _require_multilinear(phi)
    others = [A for j, A in enumerate(phi.domains) if j != i]
    lower = 1 - reduce(lambda a, A: a * (1 - Fraction(1, A.order)), others, Fraction(1))
    if phi.is_zero():
        warnings.warn("trivial upper bound requested for the zero map; reporting 1")
        return TrivialBounds(lower, Fraction(1), True)
    upper = 1 - reduce(
        lambda a, A: a * (1 - Fraction(1, primefactors(A.order)[0])), others, Fraction(1)
    )
    return TrivialBounds(lower, upper, False)


# ========================================================================
def trivial_bounds_check(phi, i, budget=DEFAULT_BUDGET):
    bounds = trivial_bounds(phi, i)
    b = bias(phi, budget).to_fraction()
    holds = bounds.lower <= b <= bounds.upper
    return CheckResult("trivial bounds", holds, b, (bounds.lower, bounds.upper), "in", phi)


# ========================================================================
def product_map(q, k):
    """x_1 ⋯ x_k / q on (Z/q)^k"""
    Z = FinAbGroup([q])
    return MultiMapT([Z] * k, np.ones((1,) * k, dtype=np.int64), modulus=q)


# ========================================================================
def exponent_bound(phi, budget=DEFAULT_BUDGET):
    """The bound bias(φ) ≤ (n+1)^(k-2)/q from an image element of order q = p^n.

    Also returns the exact bias of x_1⋯x_k/q on (Z/q)^k (None past the budget),
    which sits between bias(φ) and the bound, and the sharper count M/q with
    M the number of ways to write n as an ordered sum of k - 1 nonnegative parts.

    :param phi: nonzero multilinear map with k ≥ 2
    :type phi: MultiMapT
    :returns: (q, bound, sharp, count_bound)
    :rtype: ExponentBound
    """
    _require_multilinear(phi)
    if phi.k < 2:
        raise InputError("the exponent bound needs k ≥ 2")
    if phi.is_zero():
        raise InputError("the exponent bound needs a nonzero map")
    q = max(entry.order() for entry in phi.entries().values())
    _, n = prime_power(q)
    k = phi.k
    bound = Fraction((n + 1) ** (k - 2), q)
    count_bound = Fraction(comb(n + k - 2, k - 2), q)
    sharp = None
    if q ** (k - 1) <= budget:
        sharp = bias(product_map(q, k), budget).to_fraction()
    return ExponentBound(q, bound, sharp, count_bound)


# ========================================================================
def exponent_check(phi, budget=DEFAULT_BUDGET):
    result = exponent_bound(phi, budget)
    b = bias(phi, budget).to_fraction()
    holds = b <= result.count_bound <= result.bound
    if result.sharp is not None:
        holds = holds and b <= result.sharp <= result.count_bound
    return CheckResult("exponent bound", holds, b, result.bound, "<=", phi)


# ========================================================================
def subadditivity_check(phi, psi, budget=DEFAULT_BUDGET):
    """bias(φ + ψ) ≥ bias(φ) bias(ψ)"""
    lhs = bias(phi + psi, budget).to_fraction()
    rhs = bias(phi, budget).to_fraction() * bias(psi, budget).to_fraction()
    return CheckResult("subadditivity", lhs >= rhs, lhs, rhs, ">=", (phi, psi))


# ========================================================================
def main_term_check(phi, J, budget=DEFAULT_BUDGET, start_bits=53, max_bits=256):
    """|bias(φ)| ≤ bias(φ_J) for multiaffine φ with no term strictly above J"""
    if not isinstance(phi, MultiAffine):
        phi = MultiAffine.from_multilinear(phi)
    J = tuple(sorted(J))
    for I in phi.terms:
        if set(I) > set(J):
            raise PreconditionError(
                f"term {utilities.format_indices(I)} strictly contains "
                f"{utilities.format_indices(J)}"
            )
    lhs = bias_oracle(phi, budget).as_cyclo()
    rhs = bias(phi.term(J), budget).to_fraction() if J else Fraction(1)
    sign = compare_modulus(lhs, rhs, start_bits, max_bits)
    return CheckResult("main term", sign <= 0, lhs, rhs, "|.| <=", phi)


# ========================================================================
def factor_bound(domains, i):
    """1 - Π_{j≠i}(1 - 1/|B_j|): lower bound for anything factoring through B"""
    others = [B for j, B in enumerate(domains) if j != i]
    return 1 - reduce(lambda a, B: a * (1 - Fraction(1, B.order)), others, Fraction(1))


# ========================================================================
def factoring_check(psi, partition, factors, budget=DEFAULT_BUDGET):
    """bias(ψ(F_1, ..., F_l)) ≥ bias(ψ), and ≥ every factor_bound of ψ's domains"""
    phi = compose_through(psi, partition, factors)
    lhs = bias(phi, budget).to_fraction()
    rhs = bias(psi, budget).to_fraction()
    best = max(factor_bound(psi.domains, i) for i in range(psi.k))
    holds = lhs >= rhs and lhs >= best
    return CheckResult("factoring", holds, lhs, max(rhs, best), ">=", (psi, factors))


# ========================================================================
def restriction_check(phi, inclusions, budget=DEFAULT_BUDGET):
    """Restricting to subgroups can only raise the bias"""
    lhs = bias(restrict_subgroups(phi, inclusions), budget).to_fraction()
    rhs = bias(phi, budget).to_fraction()
    return CheckResult("restriction", lhs >= rhs, lhs, rhs, ">=", (phi, inclusions))


# ========================================================================
def multiplicativity_check(phi, budget=DEFAULT_BUDGET):
    """bias(φ) is the product of the biases of its primary parts"""
    whole = bias(phi, budget).to_fraction()
    parts = Fraction(1)
    for part in primary_split(phi):
        parts *= bias(part.map, budget).to_fraction()
    return CheckResult("multiplicativity", whole == parts, whole, parts, "=", phi)


# ========================================================================
def zero_probability(F, budget=DEFAULT_BUDGET):
    """P(F(x) = 0) over the whole domain"""
    if not isinstance(F, MultiMapG):
        raise InputError(f"expected a group-valued map, got {F!r}")
    if F.size > budget:
        raise BudgetExceeded("zero probability", F.size, budget)
    values = F.values()
    return Fraction(int((~values.any(axis=1)).sum()), F.size)


# ========================================================================
def kernel_identity_check(F, budget=DEFAULT_BUDGET):
    """P(F = 0) = bias(φ) for φ(x, χ) = χ(F(x))"""
    lhs = zero_probability(F, budget)
    rhs = bias(from_group_map(F), budget).to_fraction()
    return CheckResult("kernel identity", lhs == rhs, lhs, rhs, "=", F)


# ========================================================================
def oracle_equivalence_check(phi, budget=DEFAULT_BUDGET):
    lhs = bias(phi, budget)
    rhs = bias_oracle(phi, budget)
    return CheckResult("oracle equivalence", lhs == rhs, lhs, rhs, "=", phi)
