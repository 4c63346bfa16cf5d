# ========================================================================
#
# Imports
#
# ========================================================================
from fractions import Fraction
from functools import cmp_to_key, reduce
from math import gcd
import itertools
import os
import numpy as np
import pandas as pd
from sympy import isprime

from mlbias.bias import DEFAULT_BUDGET, BiasValue, bias, bias_oracle
from mlbias.formats import MlmapDocument, emit_mlmap
from mlbias.groups import FinAbGroup, all_groups
from mlbias.maps import MultiAffine, MultiMapT, gcd_grid
from mlbias.scalars import CycloValue, compare_moduli
import mlbias.utilities as utilities
from mlbias.utilities import BudgetExceeded, InputError

DEFAULT_INSTANCES = 2 * 10**5


# ========================================================================
#
# Classes
#
# ========================================================================
class SpectrumReport:
    """Distinct exact biases found in a finite slice, one witness map each.

    :param k: number of arguments
    :type k: int
    :param degree: degree bound for multiaffine slices, None for multilinear
    :type degree: int
    :param max_order: largest group order visited
    :type max_order: int
    :param values: distinct values, in report order
    :type values: list
    :param witnesses: a map realising each value
    :type witnesses: list
    """

    def __init__(self, k, degree, max_order, values, witnesses, instances=0):
        self.k = k
        self.degree = degree
        self.max_order = max_order
        self.values = list(values)
        self.witnesses = list(witnesses)
        self.instances = instances

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        kind = "multilinear" if self.degree is None else f"degree ≤ {self.degree}"
        return f"""SpectrumReport(k={self.k}, {kind}, max_order={self.max_order}, {len(self)} values)"""

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return (
            isinstance(other, SpectrumReport)
            and (self.k, self.degree, self.max_order) == (other.k, other.degree, other.max_order)
            and self.values == other.values
            and self.witnesses == other.witnesses
        )

    def value_set(self):
        return set(self.values)

    def fractions(self):
        """The rational values of the report, ascending"""
        return sorted(v.to_fraction() for v in self.values if v.is_rational())

    def lines(self, digits=15):
        return [f"{v}\t{v.decimal(digits)}" for v in self.values]


# ========================================================================
#
# Functions
#
# ========================================================================
def _tensor_count(domains):
    return int(np.prod(gcd_grid(domains), dtype=np.int64))


# ========================================================================
def _admissible_tensors(domains):
    """Every admissible torus tensor on the domains, lexicographic in the numerators"""
    g = gcd_grid(domains)
    E = reduce(gcd, (A.exponent for A in domains), 0)
    steps = (E // g).reshape(-1) if g.size else g.reshape(-1)
    for values in itertools.product(*[range(int(c)) for c in g.reshape(-1)]):
        yield (np.array(values, dtype=np.int64) * steps).reshape(g.shape)


# ========================================================================
def group_tuples(k, max_order):
    """Nondecreasing k-tuples of canonical groups of order at most max_order"""
    if k < 1:
        raise InputError(f"k must be at least 1, got {k}")
    if max_order < 1:
        raise InputError(f"max_order must be at least 1, got {max_order}")
    return list(itertools.combinations_with_replacement(all_groups(max_order), k))


# ========================================================================
def _subsets(k, degree):
    return [I for d in range(1, degree + 1) for I in itertools.combinations(range(k), d)]


# ========================================================================
def _affine_count(domains, degree):
    return reduce(
        lambda a, I: a * _tensor_count([domains[i] for i in I]),
        _subsets(len(domains), degree),
        1,
    )


# ========================================================================
def _scan_multilinear(tuples):
    found = {}
    for domains in tuples:
        for coefs in _admissible_tensors(domains):
            phi = MultiMapT(domains, coefs)
            value = bias(phi, DEFAULT_BUDGET)
            if value not in found:
                found[value] = phi
    return list(found.items())


# ========================================================================
def _scan_affine(tuples, degree):
    found = {}
    for domains in tuples:
        subsets = _subsets(len(domains), degree)
        spaces = [
            [MultiMapT([domains[i] for i in I], c) for c in _admissible_tensors([domains[i] for i in I])]
            for I in subsets
        ]
        for choice in itertools.product(*spaces):
            phi = MultiAffine(domains, dict(zip(subsets, choice)))
            value = bias_oracle(phi, DEFAULT_BUDGET)
            if value not in found:
                found[value] = phi
    return list(found.items())


# ========================================================================
def _merge(chunks):
    """Union of the per-chunk findings, keeping the witness of the earliest chunk"""
    found = {}
    for chunk in chunks:
        for value, witness in chunk:
            if value not in found:
                found[value] = witness
    return found


# ========================================================================
def _cyclo_order(a, b):
    sign = compare_moduli(a.as_cyclo(), b.as_cyclo())
    if sign:
        return sign
    ka, kb = a.as_cyclo().key(), b.as_cyclo().key()
    return (ka > kb) - (ka < kb)


# ========================================================================
def enumerate_bias_set(k, max_order, budget=DEFAULT_INSTANCES, jobs=1):
    """All biases of multilinear maps on groups of order at most max_order.

    Visits every nondecreasing tuple of canonical groups and every admissible
    tensor on it; the report is identical for every value of jobs.

    :param k: number of arguments
    :type k: int
    :param max_order: largest group order
    :type max_order: int
    :param budget: maximal number of maps visited
    :type budget: int
    :param jobs: number of processes
    :type jobs: int
    :returns: the rational values, ascending, with witnesses
    :rtype: SpectrumReport
    """
    tuples = group_tuples(k, max_order)
    instances = sum(_tensor_count(domains) for domains in tuples)
    if instances > budget:
        raise BudgetExceeded(f"bias set k={k}, max_order={max_order}", instances, budget)

    chunks = [(chunk,) for chunk in utilities.grouper(tuples, max(1, len(tuples) // (4 * jobs)))]
    found = _merge(utilities.starmap(_scan_multilinear, chunks, jobs))
    values = sorted(found, key=lambda v: v.to_fraction())
    return SpectrumReport(k, None, max_order, values, [found[v] for v in values], instances)


# ========================================================================
def enumerate_bias_set_affine(k, d, max_order, budget=DEFAULT_INSTANCES, jobs=1):
    """All biases of multiaffine maps of degree at most d with zero constant term

    Values are sorted by certified modulus, ties broken by canonical form.
    """
    if d < 1 or d > k:
        raise InputError(f"degree must lie in [1, {k}], got {d}")
    tuples = group_tuples(k, max_order)
    instances = sum(_affine_count(domains, d) for domains in tuples)
    if instances > budget:
        raise BudgetExceeded(
            f"affine bias set k={k}, d={d}, max_order={max_order}", instances, budget
        )

    chunks = [(chunk, d) for chunk in utilities.grouper(tuples, max(1, len(tuples) // (4 * jobs)))]
    found = _merge(utilities.starmap(_scan_affine, chunks, jobs))
    values = sorted(found, key=cmp_to_key(_cyclo_order))
    return SpectrumReport(k, d, max_order, values, [found[v] for v in values], instances)


# ========================================================================
def gauss_sum(p):
    """G(p) = Σ_x e(x²/p) as an exact cyclotomic value"""
    if p == 2 or not isprime(p):
        raise InputError(f"Gauss sums are taken at odd primes, got {p}")
    counts = [0] * p
    for x in range(p):
        counts[x * x % p] += 1
    return CycloValue.from_counts(counts)


# ========================================================================
def gauss_map(p):
    """(xy + xz + yz)/p on (Z/p)^3"""
    Z = FinAbGroup([p])
    pairing = MultiMapT([Z, Z], [[1]], modulus=p)
    return MultiAffine([Z, Z, Z], {(0, 1): pairing, (0, 2): pairing, (1, 2): pairing})


# ========================================================================
def gauss_bias_value(p):
    return BiasValue(gauss_sum(p).conj() / (p * p))


# ========================================================================
def is_reverse_gap(report, x):
    """Distance from x down to the largest strictly smaller rational in the report

    :returns: the gap, or None when nothing smaller was found
    :rtype: Fraction
    """
    x = x.to_fraction() if isinstance(x, BiasValue) else Fraction(x)
    below = [v for v in report.fractions() if v < x]
    if not below:
        return None
    return x - below[-1]


# ========================================================================
def gap_table(report):
    """Every rational value of the report with its gap below"""
    rows = []
    for v in report.fractions():
        gap = is_reverse_gap(report, v)
        rows.append(
            {
                "value": str(v),
                "decimal": float(v),
                "gap": None if gap is None else str(gap),
                "gap_decimal": None if gap is None else float(gap),
            }
        )
    return pd.DataFrame(rows, columns=["value", "decimal", "gap", "gap_decimal"])


# ========================================================================
def report_table(report, witness_files=None):
    """Values, certified centres and moduli, and witness files, one row each"""
    rows = []
    for n, v in enumerate(report.values):
        c = v.approx(64).center
        rows.append(
            {
                "value": str(v),
                "real": c.real,
                "imag": c.imag,
                "modulus": float(v.modulus_enclosure(64).mid),
                "witness": witness_files[n] if witness_files else "",
            }
        )
    return pd.DataFrame(rows, columns=["value", "real", "imag", "modulus", "witness"])


# ========================================================================
def write_report(report, fname, csv=None, witness_dir=None, digits=15):
    """Write the sorted value file and, optionally, the witness table and maps

    :param report: report to write
    :type report: SpectrumReport
    :param fname: text file, one "exact<TAB>decimal" line per value
    :type fname: str
    :param csv: optional CSV of values and witness files
    :type csv: str
    :param witness_dir: optional directory receiving one MLMAP file per value
    :type witness_dir: str
    """
    with open(fname, "w", encoding="utf-8") as f:
        for line in report.lines(digits):
            f.write(line + "\n")

    witness_files = None
    if witness_dir is not None:
        os.makedirs(witness_dir, exist_ok=True)
        witness_files = []
        for n, phi in enumerate(report.witnesses):
            wname = os.path.join(witness_dir, f"witness_{n + 1:04d}.mlmap")
            with open(wname, "w", encoding="utf-8") as f:
                f.write(emit_mlmap(MlmapDocument.from_map(phi)))
            witness_files.append(wname)

    if csv is not None:
        report_table(report, witness_files).to_csv(csv, index=False)
