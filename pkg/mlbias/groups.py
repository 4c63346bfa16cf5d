# ========================================================================
#
# Imports
#
# ========================================================================
from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd
import itertools
import numpy as np
from sympy import factorint
from sympy.utilities.iterables import partitions

from mlbias.scalars import TorusValue
from mlbias.utilities import InputError


# ========================================================================
#
# Functions
#
# ========================================================================
def lcm(a, b):
    return a * b // gcd(a, b)


# ========================================================================
def prime_power(n):
    """Return (p, e) with n = p**e, or None when n is not a prime power ≥ 2"""
    if n < 2:
        return None
    factors = factorint(n)
    if len(factors) != 1:
        return None
    return next(iter(factors.items()))


# ========================================================================
def is_prime_power(n):
    return prime_power(n) is not None


# ========================================================================
def canonical_key(order):
    """Sort key of a cyclic factor: by prime, then ascending exponent"""
    return prime_power(order)


# ========================================================================
def make_group(orders):
    """Build the canonical form of Z/n_1 ⊕ ... ⊕ Z/n_r.

    :param orders: cyclic orders, each ≥ 1
    :type orders: list
    :returns: group in prime-power canonical form
    :rtype: FinAbGroup
    """
    factors = []
    for n in orders:
        if int(n) != n or n < 1:
            raise InputError(f"cyclic orders must be positive integers, got {n}")
        for p, e in factorint(int(n)).items():
            factors.append(p**e)
    return FinAbGroup(sorted(factors, key=canonical_key))


# ========================================================================
@lru_cache(maxsize=None)
def _element_table(factors):
    if not factors:
        table = np.zeros((1, 0), dtype=np.int64)
    else:
        grids = np.indices(factors).reshape(len(factors), -1)
        table = np.ascontiguousarray(grids.T, dtype=np.int64)
    table.setflags(write=False)
    return table


# ========================================================================
def element_table(A):
    """All elements of A as rows of an integer array, in lexicographic order"""
    return _element_table(A.factors)


# ========================================================================
def enumerate_elements(A):
    for coords in itertools.product(*[range(f) for f in A.factors]):
        yield GroupElement(A, coords)


# ========================================================================
def _subgroup(A, pairs):
    """Fresh group from (order, image in A) pairs plus its inclusion"""
    pairs = sorted(pairs, key=lambda pair: canonical_key(pair[0]))
    S = FinAbGroup([order for order, _ in pairs])
    return S, GroupHom(S, A, [image for _, image in pairs])


# ========================================================================
def primary_component(A, p):
    """The p-primary part of A with its embedding and projection"""
    idx = [j for j, f in enumerate(A.factors) if f % p == 0]
    Ap = FinAbGroup([A.factors[j] for j in idx])
    embedding = GroupHom(Ap, A, [A.generator(j) for j in idx])
    images = []
    for j in range(A.rank):
        if j in idx:
            images.append(Ap.generator(idx.index(j)))
        else:
            images.append(Ap.zero())
    projection = GroupHom(A, Ap, images)
    return Ap, embedding, projection


# ========================================================================
def times_p_subgroup(A, p):
    """The subgroup pA = {px : x in A} with its inclusion.

    Factors of order divisible by p contribute p·e_j of order factors[j]/p;
    factors prime to p are kept whole since p is invertible on them.
    """
    pairs = []
    for j, f in enumerate(A.factors):
        if f % p == 0:
            if f > p:
                pairs.append((f // p, A.generator(j) * p))
        else:
            pairs.append((f, A.generator(j)))
    return _subgroup(A, pairs)


# ========================================================================
def times_p_map(A, p):
    """The homomorphism x ↦ px from A onto pA"""
    S, inclusion = times_p_subgroup(A, p)
    images = []
    for j in range(A.rank):
        x = A.generator(j)
        if x in inclusion.images:
            images.append(S.generator(inclusion.images.index(x)) * p)
        elif x * p in inclusion.images:
            images.append(S.generator(inclusion.images.index(x * p)))
        else:
            images.append(S.zero())
    return GroupHom(A, S, images)


# ========================================================================
def p_torsion(A, p):
    """The subgroup A[p] = {x in A : px = 0} with its inclusion"""
    pairs = [(p, A.generator(j) * (f // p)) for j, f in enumerate(A.factors) if f % p == 0]
    return _subgroup(A, pairs)


# ========================================================================
def cyclic_subgroup(A, a):
    """The cyclic subgroup generated by a, split into prime-power parts"""
    n = a.order()
    pairs = [(p**e, a * (n // p**e)) for p, e in factorint(n).items()]
    return _subgroup(A, pairs)


# ========================================================================
def _diagonalize(rows, ncols):
    """Diagonalize an integer matrix by unimodular row and column operations.

    Returns the diagonal and the column transform V with its inverse, so that
    U·M·V = D for some unimodular U.
    """
    M = [list(r) for r in rows]
    m = len(M)
    V = [[int(i == j) for j in range(ncols)] for i in range(ncols)]
    Vinv = [[int(i == j) for j in range(ncols)] for i in range(ncols)]

    def add_col(dst, src, c):
        for r in M:
            r[dst] += c * r[src]
        for r in V:
            r[dst] += c * r[src]
        Vinv[src] = [x - c * y for x, y in zip(Vinv[src], Vinv[dst])]

    def swap_col(a, b):
        for r in M + V:
            r[a], r[b] = r[b], r[a]
        Vinv[a], Vinv[b] = Vinv[b], Vinv[a]

    diag = []
    for t in range(min(m, ncols)):
        while True:
            entries = [
                (abs(M[i][j]), i, j)
                for i in range(t, m)
                for j in range(t, ncols)
                if M[i][j] != 0
            ]
            if not entries:
                return diag + [0] * (ncols - len(diag)), V, Vinv
            _, i, j = min(entries)
            M[t], M[i] = M[i], M[t]
            if j != t:
                swap_col(t, j)
            pivot = M[t][t]
            done = True
            for i in range(t + 1, m):
                c = M[i][t] // pivot
                if c:
                    M[i] = [x - c * y for x, y in zip(M[i], M[t])]
                if M[i][t]:
                    done = False
            for j in range(t + 1, ncols):
                c = M[t][j] // pivot
                if c:
                    add_col(j, t, -c)
                if M[t][j]:
                    done = False
            if done:
                break
        diag.append(abs(M[t][t]))
    return diag, V, Vinv


# ========================================================================
def quotient_with_section(A, K):
    """Quotient A/<K> together with lifts of the quotient generators into A

    :param A: ambient group
    :type A: FinAbGroup
    :param K: generators of the subgroup
    :type K: list
    :returns: quotient group, projection, lifts of its generators
    :rtype: tuple
    """
    d = A.rank
    rows = [[A.factors[j] * int(i == j) for j in range(d)] for i in range(d)]
    rows += [list(A.check_element(kk).coords) for kk in K]
    diag, V, Vinv = _diagonalize(rows, d)

    # columns t of V give the quotient coordinates; split each Z/d_t by CRT
    parts = []
    for t, dt in enumerate(diag):
        if dt <= 1:
            continue
        for p, e in factorint(dt).items():
            q = p**e
            rest = dt // q
            # idempotent of Z/dt supported on the q-part
            u = rest * pow(rest, -1, q) % dt if rest > 1 else 1
            column = [V[j][t] for j in range(d)]
            lift = [u * x for x in Vinv[t]]
            parts.append((q, column, lift))
    parts.sort(key=lambda part: canonical_key(part[0]))
    Q = FinAbGroup([q for q, _, _ in parts])
    images = [
        Q.element([column[j] for _, column, _ in parts]) for j in range(d)
    ]
    projection = GroupHom(A, Q, images)
    lifts = [A.element(lift) for _, _, lift in parts]
    return Q, projection, lifts


# ========================================================================
def quotient(A, K):
    Q, projection, _ = quotient_with_section(A, K)
    return Q, projection


# ========================================================================
def dual_group(B):
    """The character group of B, presented on the same factor list"""
    return FinAbGroup(B.factors)


# ========================================================================
def pair(chi, b):
    """Evaluate the character chi at b.

    :param chi: element of the dual group
    :type chi: GroupElement
    :param b: element of B
    :type b: GroupElement
    :returns: chi(b)
    :rtype: TorusValue
    """
    if chi.group.factors != b.group.factors:
        raise InputError(
            f"cannot pair elements of {chi.group} and {b.group}: factor lists differ"
        )
    total = sum(
        (Fraction(c * x, f) for c, x, f in zip(chi.coords, b.coords, b.group.factors)),
        Fraction(0),
    )
    return TorusValue(total)


# ========================================================================
@lru_cache(maxsize=None)
def all_groups(max_order):
    """Every canonical group of order at most max_order, sorted by (order, factors)"""
    groups = []
    for n in range(1, max_order + 1):
        per_prime = []
        for p, e in factorint(n).items():
            options = []
            for part in partitions(e):
                exps = sorted(
                    itertools.chain.from_iterable([k] * v for k, v in part.items())
                )
                options.append([p**x for x in exps])
            per_prime.append(options)
        for combo in itertools.product(*per_prime):
            groups.append(FinAbGroup(list(itertools.chain.from_iterable(combo))))
    groups.sort(key=lambda G: (G.order, G.factors))
    return tuple(groups)


# ========================================================================
def random_group(rng, max_order):
    groups = all_groups(max_order)
    return groups[int(rng.integers(len(groups)))]


# ========================================================================
#
# Classes
#
# ========================================================================
class FinAbGroup:
    """A finite abelian group in canonical prime-power cyclic form.

    Use :func:`make_group` to normalise arbitrary cyclic orders; the
    constructor only accepts factor lists that are already canonical.
    """

    def __init__(self, factors):
        factors = tuple(int(f) for f in factors)
        for f in factors:
            if not is_prime_power(f):
                raise InputError(f"cyclic factor {f} is not a prime power ≥ 2")
        if list(factors) != sorted(factors, key=canonical_key):
            raise InputError(f"factors {list(factors)} are not in canonical order")
        self.factors = factors
        self.rank = len(factors)
        self.order = reduce(lambda a, b: a * b, factors, 1)
        self.exponent = reduce(lcm, factors, 1)

    def __repr__(self):
        return self.describe()

    def __str__(self):
        if not self.factors:
            return "0"
        return " ⊕ ".join(f"Z/{f}" for f in self.factors)

    def describe(self):
        return f"""FinAbGroup({list(self.factors)})"""

    def __eq__(self, other):
        return isinstance(other, FinAbGroup) and self.factors == other.factors

    def __hash__(self):
        return hash(("FinAbGroup", self.factors))

    @property
    def primes(self):
        return sorted({prime_power(f)[0] for f in self.factors})

    def is_p_group(self, p):
        return all(f % p == 0 for f in self.factors)

    def zero(self):
        return GroupElement(self, [0] * self.rank)

    def generator(self, j):
        coords = [0] * self.rank
        coords[j] = 1
        return GroupElement(self, coords)

    def generators(self):
        return [self.generator(j) for j in range(self.rank)]

    def element(self, coords):
        return GroupElement(self, coords)

    def check_element(self, x):
        if not isinstance(x, GroupElement) or x.group != self:
            raise InputError(f"{x!r} is not an element of {self.describe()}")
        return x

    def elements(self):
        return enumerate_elements(self)


# ========================================================================
class GroupElement:
    __slots__ = ("group", "coords")

    def __init__(self, group, coords):
        coords = tuple(int(c) for c in coords)
        if len(coords) != group.rank:
            raise InputError(
                f"element {coords} has {len(coords)} coordinates, "
                f"{group.describe()} has {group.rank} factors"
            )
        self.group = group
        self.coords = tuple(c % f for c, f in zip(coords, group.factors))

    def __repr__(self):
        return f"GroupElement({list(self.group.factors)}, {self.coords})"

    def __str__(self):
        return "(" + ",".join(str(c) for c in self.coords) + ")"

    def __eq__(self, other):
        return (
            isinstance(other, GroupElement)
            and self.group == other.group
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.group, self.coords))

    def _same(self, other):
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise InputError(f"cannot combine {self!r} and {other!r}")

    def __add__(self, other):
        self._same(other)
        return GroupElement(self.group, [a + b for a, b in zip(self.coords, other.coords)])

    def __neg__(self):
        return GroupElement(self.group, [-a for a in self.coords])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, n):
        return GroupElement(self.group, [int(n) * a for a in self.coords])

    __rmul__ = __mul__

    def is_zero(self):
        return not any(self.coords)

    def order(self):
        return reduce(
            lcm, (f // gcd(f, c) for c, f in zip(self.coords, self.group.factors)), 1
        )


# ========================================================================
class GroupHom:
    """A homomorphism given by the images of the domain generators"""

    def __init__(self, domain, codomain, images):
        images = list(images)
        if len(images) != domain.rank:
            raise InputError(
                f"homomorphism needs {domain.rank} generator images, got {len(images)}"
            )
        for f, image in zip(domain.factors, images):
            codomain.check_element(image)
            if not (image * f).is_zero():
                raise InputError(
                    f"image {image} is not annihilated by the generator order {f}"
                )
        self.domain = domain
        self.codomain = codomain
        self.images = images

    def __repr__(self):
        return f"GroupHom({self.domain!r} -> {self.codomain!r}, {[str(x) for x in self.images]})"

    def __eq__(self, other):
        return (
            isinstance(other, GroupHom)
            and self.domain == other.domain
            and self.codomain == other.codomain
            and self.images == other.images
        )

    def __call__(self, x):
        self.domain.check_element(x)
        total = self.codomain.zero()
        for c, image in zip(x.coords, self.images):
            total = total + image * c
        return total

    def matrix(self):
        """Coordinates of the generator images, one row per domain generator"""
        return np.array(
            [image.coords for image in self.images], dtype=np.int64
        ).reshape(self.domain.rank, self.codomain.rank)

    def compose(self, other):
        """self ∘ other"""
        if other.codomain != self.domain:
            raise InputError("cannot compose homomorphisms with mismatched groups")
        return GroupHom(other.domain, self.codomain, [self(x) for x in other.images])

    def is_identity(self):
        return self.domain == self.codomain and all(
            image == self.domain.generator(j) for j, image in enumerate(self.images)
        )

    @classmethod
    def identity(cls, A):
        return cls(A, A, A.generators())
