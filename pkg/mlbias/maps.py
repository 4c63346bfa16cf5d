# ========================================================================
#
# Imports
#
# ========================================================================
from abc import ABC, abstractmethod
from collections import namedtuple
from fractions import Fraction
from functools import reduce
from math import gcd
import itertools
import numpy as np

from mlbias.groups import (
    FinAbGroup,
    GroupElement,
    GroupHom,
    dual_group,
    element_table,
    is_prime_power,
    lcm,
    primary_component,
    quotient_with_section,
)
from mlbias.scalars import TorusValue
from mlbias.utilities import InputError, format_indices


PrimaryPart = namedtuple("PrimaryPart", ["prime", "map", "projections", "zero"])


# ========================================================================
#
# Tensor helpers
#
# ========================================================================
def _contract(tensor, arrays, modulus):
    """Contract the leading axes of tensor with rows of the given arrays.

    Leading axis i (length d_i) is contracted against an (n_i, d_i) array;
    the result has shape (n_1 * ... * n_m, *trailing) with the first array
    varying slowest, reduced modulo modulus.
    """
    out = tensor.reshape((1,) + tensor.shape)
    for X in arrays:
        n, d = out.shape[0], out.shape[1]
        rest = out.shape[2:]
        r = int(np.prod(rest, dtype=np.int64))
        block = np.einsum("ajr,bj->abr", out.reshape(n, d, r), X) % modulus
        out = block.reshape((n * X.shape[0],) + rest)
    return out


# ========================================================================
def _factor_grid(domains, axis, ndim):
    """Orders of the generators of one axis, shaped for broadcasting"""
    shape = [1] * ndim
    shape[axis] = domains[axis].rank
    return np.array(domains[axis].factors, dtype=np.int64).reshape(shape)


# ========================================================================
def gcd_grid(domains):
    """gcd of the generator orders at every multi-index"""
    shape = tuple(A.rank for A in domains)
    g = np.zeros(shape, dtype=np.int64)
    for axis in range(len(domains)):
        g = np.gcd(g, _factor_grid(domains, axis, len(domains)))
    return g


# ========================================================================
def _first_violation(mask):
    bad = np.argwhere(mask)
    return tuple(int(j) for j in bad[0]) if len(bad) else None


# ========================================================================
def _along(matrix, tensor, axis, modulus):
    """Replace tensor axis by matrix rows: T'[.., a, ..] = Σ_j M[a, j] T[.., j, ..]"""
    out = np.tensordot(matrix.astype(np.int64), tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis) % modulus


# ========================================================================
def _coords(x, A):
    if not isinstance(x, GroupElement):
        x = A.element(x)
    A.check_element(x)
    return np.array([x.coords], dtype=np.int64).reshape(1, A.rank)


# ========================================================================
#
# Classes
#
# ========================================================================
class MultiMap(ABC):
    """A k-linear map given by its values on tuples of generators"""

    def __init__(self, domains):
        self.domains = tuple(domains)
        self.k = len(self.domains)
        if self.k < 1:
            raise InputError("multilinear maps need at least one argument")
        for A in self.domains:
            if not isinstance(A, FinAbGroup):
                raise InputError(f"{A!r} is not a FinAbGroup")

    @property
    def shape(self):
        return tuple(A.rank for A in self.domains)

    @property
    def size(self):
        return reduce(lambda a, b: a * b, (A.order for A in self.domains), 1)

    def _points(self, x):
        if len(x) != self.k:
            raise InputError(f"expected {self.k} arguments, got {len(x)}")
        return [_coords(xi, A) for xi, A in zip(x, self.domains)]

    def _same_shape(self, other):
        if type(other) is not type(self) or other.domains != self.domains:
            raise InputError("maps must have identical arity and domains")

    def is_zero(self):
        return not self.coefs.any()

    def __hash__(self):
        return hash((type(self).__name__, self.domains, self.coefs.tobytes()))

    @abstractmethod
    def evaluate(self, x):
        pass

    @abstractmethod
    def values(self):
        pass


# ========================================================================
class MultiMapT(MultiMap):
    """A multilinear map into the torus.

    Entries are stored as integers over the common denominator E, the gcd of
    the domain exponents; every admissible entry has a denominator dividing E,
    so the stored tensor is canonical.

    :param domains: the groups A_1, ..., A_k
    :type domains: list
    :param coefs: integer tensor of shape (d_1, ..., d_k)
    :type coefs: array
    :param modulus: denominator of the given coefs (defaults to E)
    :type modulus: int
    """

    def __init__(self, domains, coefs=None, modulus=None):
        super().__init__(domains)
        self.modulus = reduce(gcd, (A.exponent for A in self.domains), 0)
        if coefs is None:
            coefs = np.zeros(self.shape, dtype=np.int64)
        coefs = np.array(coefs, dtype=np.int64).reshape(self.shape)
        if modulus is not None and modulus != self.modulus:
            scaled = coefs * self.modulus
            bad = _first_violation(scaled % modulus != 0)
            if bad is not None:
                raise InputError(
                    f"entry {format_indices(bad)} = {Fraction(int(coefs[bad]), modulus)} "
                    f"is not killed by the generator orders"
                )
            coefs = scaled // modulus
        coefs = coefs % self.modulus
        for axis in range(self.k):
            f = _factor_grid(self.domains, axis, self.k)
            bad = _first_violation((coefs * f) % self.modulus != 0)
            if bad is not None:
                raise InputError(
                    f"entry {format_indices(bad)} = "
                    f"{TorusValue(int(coefs[bad]), self.modulus)} is not killed by "
                    f"the order {self.domains[axis].factors[bad[axis]]} of axis {axis + 1}"
                )
        coefs.setflags(write=False)
        self.coefs = coefs

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        groups = ", ".join(str(list(A.factors)) for A in self.domains)
        return f"""MultiMapT([{groups}], {len(self.entries())} nonzero entries)"""

    def __eq__(self, other):
        return (
            isinstance(other, MultiMapT)
            and self.domains == other.domains
            and np.array_equal(self.coefs, other.coefs)
        )

    __hash__ = MultiMap.__hash__

    @classmethod
    def from_entries(cls, domains, entries):
        """Build a map from {generator multi-index: value} with torus values"""
        shape = tuple(A.rank for A in domains)
        E = reduce(gcd, (A.exponent for A in domains), 0)
        coefs = np.zeros(shape, dtype=np.int64)
        for index, value in entries.items():
            if isinstance(value, TorusValue):
                value = value.to_fraction()
            scaled = Fraction(value) * E
            if scaled.denominator != 1:
                raise InputError(
                    f"entry {format_indices(index)} = {value} has a denominator "
                    f"not dividing the generator orders"
                )
            coefs[tuple(index)] = int(scaled) % max(E, 1)
        return cls(domains, coefs)

    def entry(self, index):
        return TorusValue(int(self.coefs[tuple(index)]), self.modulus)

    def entries(self):
        """Nonzero entries, in lexicographic order"""
        return {
            tuple(int(j) for j in index): TorusValue(int(self.coefs[tuple(index)]), self.modulus)
            for index in np.argwhere(self.coefs)
        }

    def evaluate(self, x):
        value = _contract(self.coefs, self._points(x), self.modulus)
        return TorusValue(int(value.reshape(-1)[0]), self.modulus)

    def values(self):
        """Numerators over E of φ at every point, lexicographic order"""
        tables = [element_table(A) for A in self.domains]
        return _contract(self.coefs, tables, self.modulus).reshape(-1)

    def restriction_vectors(self, axis, rows=None):
        """φ(x_I, e_j) for every x_I over the other axes and every generator e_j

        :param axis: the free axis
        :type axis: int
        :param rows: optional (start, stop) slice of the first enumerated axis
        :type rows: tuple
        :returns: array of shape (|A_I|, d_axis)
        :rtype: array
        """
        T = np.moveaxis(self.coefs, axis, -1)
        tables = [element_table(A) for i, A in enumerate(self.domains) if i != axis]
        if rows is not None and tables:
            tables[0] = tables[0][rows[0] : rows[1]]
        return _contract(T, tables, self.modulus)

    def __add__(self, other):
        self._same_shape(other)
        return MultiMapT(self.domains, self.coefs + other.coefs)

    def __neg__(self):
        return MultiMapT(self.domains, -self.coefs)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, n):
        return MultiMapT(self.domains, self.coefs * int(n))

    @classmethod
    def zero(cls, domains):
        return cls(domains)


# ========================================================================
class MultiMapG(MultiMap):
    """A multilinear map into a finite abelian group B.

    The tensor has shape (d_1, ..., d_k, rank B); the trailing axis holds the
    codomain coordinates of the image of each generator tuple.
    """

    def __init__(self, domains, codomain, coefs=None):
        super().__init__(domains)
        self.codomain = codomain
        self.modulus = codomain.exponent
        full = self.shape + (codomain.rank,)
        if coefs is None:
            coefs = np.zeros(full, dtype=np.int64)
        coefs = np.array(coefs, dtype=np.int64).reshape(full)
        b = np.array(codomain.factors, dtype=np.int64)
        coefs = coefs % b if codomain.rank else coefs
        for axis in range(self.k):
            f = _factor_grid(self.domains, axis, self.k)[..., np.newaxis]
            bad = _first_violation(((coefs * f) % b != 0).any(axis=-1)) if codomain.rank else None
            if bad is not None:
                raise InputError(
                    f"entry {format_indices(bad)} is not killed by the order "
                    f"{self.domains[axis].factors[bad[axis]]} of axis {axis + 1}"
                )
        coefs.setflags(write=False)
        self.coefs = coefs

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        groups = ", ".join(str(list(A.factors)) for A in self.domains)
        return f"""MultiMapG([{groups}] -> {list(self.codomain.factors)})"""

    def __eq__(self, other):
        return (
            isinstance(other, MultiMapG)
            and self.domains == other.domains
            and self.codomain == other.codomain
            and np.array_equal(self.coefs, other.coefs)
        )

    def __hash__(self):
        return hash((self.domains, self.codomain, self.coefs.tobytes()))

    def _same_shape(self, other):
        super()._same_shape(other)
        if other.codomain != self.codomain:
            raise InputError("maps must have identical codomains")

    def entry(self, index):
        return self.codomain.element(self.coefs[tuple(index)])

    def entries(self):
        nonzero = self.coefs.any(axis=-1) if self.codomain.rank else np.zeros(self.shape, bool)
        return {
            tuple(int(j) for j in index): self.entry(index)
            for index in np.argwhere(nonzero)
        }

    def evaluate(self, x):
        value = _contract(self.coefs, self._points(x), max(self.modulus, 1))
        return self.codomain.element(value.reshape(-1))

    def values(self):
        """Codomain coordinates at every point, shape (|A|, rank B)"""
        tables = [element_table(A) for A in self.domains]
        out = _contract(self.coefs, tables, self.modulus).reshape(-1, self.codomain.rank)
        return out % np.array(self.codomain.factors, dtype=np.int64) if self.codomain.rank else out

    def __add__(self, other):
        self._same_shape(other)
        return MultiMapG(self.domains, self.codomain, self.coefs + other.coefs)

    def __neg__(self):
        return MultiMapG(self.domains, self.codomain, -self.coefs)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, n):
        return MultiMapG(self.domains, self.codomain, self.coefs * int(n))


# ========================================================================
class MultiAffine:
    """A map affine-linear in each argument, Σ_I φ_I(x_I) with zero constant.

    :param domains: the groups A_1, ..., A_k
    :type domains: list
    :param terms: {sorted tuple of axes I: MultiMapT on A_I}
    :type terms: dict
    """

    def __init__(self, domains, terms=None):
        self.domains = tuple(domains)
        self.k = len(self.domains)
        self.terms = {}
        for I, term in (terms or {}).items():
            I = tuple(sorted(I))
            if not I:
                if term is None or (isinstance(term, TorusValue) and term.is_zero()):
                    continue
                raise InputError("the constant term of a multiaffine map must be 0")
            if len(set(I)) != len(I) or min(I) < 0 or max(I) >= self.k:
                raise InputError(f"term subset {format_indices(I)} is not inside [k]")
            if I in self.terms:
                raise InputError(f"duplicate term {format_indices(I)}")
            if term.domains != tuple(self.domains[i] for i in I):
                raise InputError(f"term {format_indices(I)} has the wrong domains")
            if not term.is_zero():
                self.terms[I] = term
        self.modulus = reduce(lcm, (t.modulus for t in self.terms.values()), 1)

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        subsets = ", ".join("{" + ",".join(str(i + 1) for i in I) + "}" for I in self.terms)
        return f"""MultiAffine(k={self.k}, degree={self.degree}, terms=[{subsets}])"""

    def __eq__(self, other):
        return (
            isinstance(other, MultiAffine)
            and self.domains == other.domains
            and self.terms == other.terms
        )

    @property
    def degree(self):
        return max((len(I) for I in self.terms), default=0)

    @property
    def size(self):
        return reduce(lambda a, b: a * b, (A.order for A in self.domains), 1)

    def term(self, I):
        I = tuple(sorted(I))
        if I in self.terms:
            return self.terms[I]
        return MultiMapT([self.domains[i] for i in I]) if I else None

    def evaluate(self, x):
        if len(x) != self.k:
            raise InputError(f"expected {self.k} arguments, got {len(x)}")
        total = TorusValue(0)
        for I, term in self.terms.items():
            total = total + term.evaluate([x[i] for i in I])
        return total

    def values(self):
        """Numerators over the lcm modulus at every point, lexicographic order"""
        L = self.modulus
        orders = [A.order for A in self.domains]
        total = np.zeros(orders, dtype=np.int64)
        for I, term in self.terms.items():
            shape = [orders[i] if i in I else 1 for i in range(self.k)]
            vals = term.values() * (L // term.modulus)
            total = (total + vals.reshape(shape)) % L
        return total.reshape(-1)

    @classmethod
    def from_multilinear(cls, phi):
        return cls(phi.domains, {tuple(range(phi.k)): phi})


# ========================================================================
class Partition:
    """An ordered partition of the axes into nonempty blocks"""

    def __init__(self, blocks, k=None):
        self.blocks = tuple(tuple(sorted(b)) for b in blocks)
        axes = sorted(itertools.chain.from_iterable(self.blocks))
        self.k = len(axes) if k is None else k
        if any(not b for b in self.blocks) or axes != list(range(self.k)):
            raise InputError(f"{self.blocks} is not a partition of {self.k} axes")

    def __repr__(self):
        return f"Partition({[list(b) for b in self.blocks]})"

    def __eq__(self, other):
        return isinstance(other, Partition) and self.blocks == other.blocks

    def __len__(self):
        return len(self.blocks)


# ========================================================================
#
# Functions
#
# ========================================================================
def evaluate(phi, x):
    return phi.evaluate(x)


# ========================================================================
def m_q(q):
    """The pairing (x, y) ↦ xy/q on Z/q × Z/q"""
    if not is_prime_power(q):
        raise InputError(f"m_q needs a prime power, got {q}")
    Z = FinAbGroup([q])
    return MultiMapT([Z, Z], [[1]], modulus=q)


# ========================================================================
def identity_map(A):
    return MultiMapG([A], A, np.eye(A.rank, dtype=np.int64))


# ========================================================================
def _check_axes(phi, I):
    I = tuple(I)
    if len(set(I)) != len(I) or any(i < 0 or i >= phi.k for i in I):
        raise InputError(f"axes {I} are not a subset of the {phi.k} axes")
    return I


# ========================================================================
def restrict_fix(phi, I, a):
    """Fix the arguments on the axes I to a and return the map of the rest.

    :param phi: multilinear map
    :type phi: MultiMapT
    :param I: axes to fix, 0-based
    :type I: tuple
    :param a: elements of A_i for i in I, in the same order
    :type a: tuple
    :returns: restricted map on the complementary axes
    :rtype: MultiMapT
    """
    I = _check_axes(phi, I)
    if len(I) == phi.k:
        raise InputError("fixing every argument leaves nothing; use evaluate")
    if len(a) != len(I):
        raise InputError("one element per fixed axis is required")
    if not I:
        return phi
    rest = [i for i in range(phi.k) if i not in I]
    T = np.moveaxis(phi.coefs, list(I), list(range(len(I))))
    points = [_coords(x, phi.domains[i]) for x, i in zip(a, I)]
    out = _contract(T, points, phi.modulus)[0]
    return MultiMapT([phi.domains[i] for i in rest], out, modulus=phi.modulus)


# ========================================================================
def pullback(phi, homs):
    """Precompose each argument with a homomorphism (None keeps the axis)"""
    if len(homs) != phi.k:
        raise InputError(f"expected {phi.k} homomorphisms, got {len(homs)}")
    T = phi.coefs
    domains = list(phi.domains)
    modulus = max(phi.modulus, 1)
    for axis, h in enumerate(homs):
        if h is None:
            continue
        if h.codomain != phi.domains[axis]:
            raise InputError(
                f"homomorphism into {h.codomain.describe()} does not land in axis {axis + 1}"
            )
        T = _along(h.matrix(), T, axis, modulus)
        domains[axis] = h.domain
    if isinstance(phi, MultiMapT):
        return MultiMapT(domains, T, modulus=phi.modulus)
    return MultiMapG(domains, phi.codomain, T)


# ========================================================================
def restrict_subgroups(phi, inclusions):
    return pullback(phi, inclusions)


# ========================================================================
def kernel_subgroup(phi, i):
    """All a in A_i with φ(.., a, ..) identically zero"""
    A = phi.domains[i]
    X = element_table(A)
    T = np.moveaxis(phi.coefs, i, 0)
    vectors = _contract(T, [X], phi.modulus).reshape(A.order, -1)
    return [A.element(X[n]) for n in np.flatnonzero(~vectors.any(axis=1))]


# ========================================================================
def nondegenerate_reduction(phi):
    """Quotient every axis by its kernel until all kernels are trivial.

    :returns: the reduced map and the projections A_i → A_i/K_i
    :rtype: tuple
    """
    projections = [GroupHom.identity(A) for A in phi.domains]
    changed = True
    while changed:
        changed = False
        for i in range(phi.k):
            K = kernel_subgroup(phi, i)
            if len(K) == 1:
                continue
            A = phi.domains[i]
            Q, projection, lifts = quotient_with_section(A, K)
            lift_matrix = np.array([x.coords for x in lifts], dtype=np.int64).reshape(
                Q.rank, A.rank
            )
            T = _along(lift_matrix, phi.coefs, i, phi.modulus)
            domains = list(phi.domains)
            domains[i] = Q
            phi = MultiMapT(domains, T, modulus=phi.modulus)
            projections[i] = projection.compose(projections[i])
            changed = True
    return phi, projections


# ========================================================================
def primary_split(phi):
    """Split φ into its p-primary parts φ_p, one per prime dividing some |A_i|"""
    primes = sorted(set(itertools.chain.from_iterable(A.primes for A in phi.domains)))
    parts = []
    for p in primes:
        components = [primary_component(A, p) for A in phi.domains]
        phi_p = pullback(phi, [embedding for _, embedding, _ in components])
        projections = [projection for _, _, projection in components]
        parts.append(PrimaryPart(p, phi_p, projections, phi_p.is_zero()))
    return parts


# ========================================================================
def compose_through(psi, partition, factors):
    """The composite ψ(F_1(x_{I_1}), ..., F_l(x_{I_l})).

    :param psi: outer map on B_1, ..., B_l (torus or group valued)
    :type psi: MultiMap
    :param partition: blocks I_1, ..., I_l of the k axes
    :type partition: Partition
    :param factors: F_j on A_{I_j} with codomain B_j
    :type factors: list
    :returns: the composite on A_1, ..., A_k
    :rtype: MultiMap
    """
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    if len(partition.blocks) != psi.k or len(factors) != psi.k:
        raise InputError(
            f"outer map has {psi.k} arguments but {len(partition.blocks)} blocks "
            f"and {len(factors)} factors were given"
        )
    k = partition.k
    domains = [None] * k
    for j, (block, F) in enumerate(zip(partition.blocks, factors)):
        if F.k != len(block):
            raise InputError(f"factor {j + 1} has arity {F.k}, block has {len(block)} axes")
        if F.codomain != psi.domains[j]:
            raise InputError(f"factor {j + 1} does not land in argument {j + 1} of the outer map")
        for pos, axis in enumerate(block):
            domains[axis] = F.domains[pos]

    modulus = max(psi.modulus, 1)
    T = psi.coefs
    done = 0
    for F in factors:
        T = np.tensordot(F.coefs, T, axes=([F.k], [done]))
        T = np.moveaxis(T, list(range(F.k)), list(range(done, done + F.k))) % modulus
        done += F.k
    order = list(itertools.chain.from_iterable(partition.blocks))
    perm = [order.index(axis) for axis in range(k)] + list(range(k, T.ndim))
    T = np.transpose(T, perm)
    if isinstance(psi, MultiMapT):
        return MultiMapT(domains, T, modulus=psi.modulus)
    return MultiMapG(domains, psi.codomain, T)


# ========================================================================
def from_group_map(F):
    """φ(x, χ) = χ(F(x)) on A_1 × ... × A_{k-1} × dual(B)"""
    B = F.codomain
    L = max(B.exponent, 1)
    scale = np.array([L // b for b in B.factors], dtype=np.int64)
    coefs = F.coefs * scale if B.rank else F.coefs
    return MultiMapT(list(F.domains) + [dual_group(B)], coefs, modulus=L)


# ========================================================================
def to_group_map(phi, axis=None):
    """Read the chosen axis as the dual of B and return F with φ(x, χ) = χ(F(x))"""
    if phi.k < 2:
        raise InputError("a group-valued map needs at least one remaining argument")
    axis = phi.k - 1 if axis is None else axis
    B = FinAbGroup(phi.domains[axis].factors)
    T = np.moveaxis(phi.coefs, axis, -1)
    b = np.array(B.factors, dtype=np.int64)
    scaled = T * b
    bad = _first_violation((scaled % max(phi.modulus, 1) != 0).any(axis=-1)) if B.rank else None
    if bad is not None:
        raise InputError(f"entry {format_indices(bad)} does not pair into the dual axis")
    coefs = scaled // max(phi.modulus, 1) if B.rank else T
    domains = [A for i, A in enumerate(phi.domains) if i != axis]
    return MultiMapG(domains, B, coefs)


# ========================================================================
def add(phi, psi):
    return phi + psi


# ========================================================================
def negate(phi):
    return -phi


# ========================================================================
def random_map(domains, codomain=None, seed=None, rng=None):
    """A uniformly random admissible tensor, deterministic in seed.

    :param domains: the groups A_1, ..., A_k
    :type domains: list
    :param codomain: target group, or None for the torus
    :type codomain: FinAbGroup
    :param seed: seed of a fresh generator (ignored when rng is given)
    :type seed: int
    :param rng: generator to draw from
    :type rng: numpy.random.Generator
    :returns: random map
    :rtype: MultiMap
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    g = gcd_grid(domains)
    if codomain is None:
        E = reduce(gcd, (A.exponent for A in domains), 0)
        coefs = rng.integers(0, g, size=g.shape) * (E // g) if g.size else g
        return MultiMapT(domains, coefs)
    columns = []
    for b in codomain.factors:
        c = np.gcd(g, b)
        t = rng.integers(0, c, size=c.shape) if c.size else c
        columns.append(t * (b // c))
    coefs = np.stack(columns, axis=-1) if columns else np.zeros(g.shape + (0,), np.int64)
    return MultiMapG(domains, codomain, coefs)


# ========================================================================
def random_affine(domains, degree, seed=None, rng=None, subsets=None):
    """A random multiaffine map with terms on the subsets of size ≤ degree"""
    rng = np.random.default_rng(seed) if rng is None else rng
    terms = {}
    for size in range(1, degree + 1):
        for I in itertools.combinations(range(len(domains)), size):
            if subsets is not None and I not in subsets:
                continue
            terms[I] = random_map([domains[i] for i in I], rng=rng)
    return MultiAffine(domains, terms)
