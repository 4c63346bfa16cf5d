# ========================================================================
#
# Imports
#
# ========================================================================
from bisect import bisect_left
from fractions import Fraction
from functools import reduce
import itertools
import numpy as np
from sympy import isprime

from mlbias.bias import DEFAULT_BUDGET, CheckResult, bias
from mlbias.groups import (
    FinAbGroup,
    canonical_key,
    element_table,
    p_torsion,
    prime_power,
    quotient_with_section,
    times_p_subgroup,
)
from mlbias.maps import (
    MultiMapG,
    MultiMapT,
    Partition,
    _along,
    compose_through,
    from_group_map,
    gcd_grid,
    identity_map,
    m_q,
    primary_split,
    pullback,
)
import mlbias.utilities as utilities
from mlbias.utilities import (
    BudgetExceeded,
    InputError,
    PreconditionError,
    VerificationError,
)


# ========================================================================
#
# Classes
#
# ========================================================================
class CertificateTerm:
    """One summand m_q(left(x_I), right(x_{I^c})) of a rank certificate.

    :param q: prime power
    :type q: int
    :param I: nonempty proper subset of the axes, 0-based
    :type I: tuple
    :param left: map A_I → Z/q
    :type left: MultiMapG
    :param right: map A_{I^c} → Z/q
    :type right: MultiMapG
    """

    def __init__(self, q, I, left, right):
        if prime_power(q) is None:
            raise InputError(f"certificate terms factor through m_q for prime powers q, got {q}")
        self.q = q
        self.I = tuple(sorted(I))
        self.k = left.k + right.k
        self.Ic = tuple(a for a in range(self.k) if a not in self.I)
        Zq = FinAbGroup([q])
        if len(self.I) != left.k or not self.I or max(self.I) >= self.k:
            raise InputError(f"subset {utilities.format_indices(self.I)} does not match the left factor")
        if left.codomain != Zq or right.codomain != Zq:
            raise InputError(f"both factors of a term must land in Z/{q}")
        self.left = left
        self.right = right

    def __repr__(self):
        return f"CertificateTerm(q={self.q}, I={{{utilities.format_subset(self.I)}}})"

    def __eq__(self, other):
        return (
            isinstance(other, CertificateTerm)
            and (self.q, self.I) == (other.q, other.I)
            and self.left == other.left
            and self.right == other.right
        )

    @property
    def domains(self):
        domains = [None] * self.k
        for pos, axis in enumerate(self.I):
            domains[axis] = self.left.domains[pos]
        for pos, axis in enumerate(self.Ic):
            domains[axis] = self.right.domains[pos]
        return domains

    def swapped(self):
        """The same term with the roles of I and its complement exchanged"""
        return CertificateTerm(self.q, self.Ic, self.right, self.left)

    def to_map(self):
        return compose_through(m_q(self.q), Partition([self.I, self.Ic]), [self.left, self.right])

    def pullback(self, homs):
        left = pullback(self.left, [homs[a] for a in self.I])
        right = pullback(self.right, [homs[a] for a in self.Ic])
        return CertificateTerm(self.q, self.I, left, right)


# ========================================================================
class RankCertificate:
    """A list of terms, each factoring through some m_q, summing to a map"""

    def __init__(self, terms, domains):
        self.terms = list(terms)
        self.domains = tuple(domains)
        self.k = len(self.domains)
        for term in self.terms:
            if tuple(term.domains) != self.domains:
                raise InputError(f"{term!r} does not live on the certificate domains")

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""An instance of {self.describe()}"""

    def describe(self):
        return f"""RankCertificate(rank={self.rank}, q={[t.q for t in self.terms]})"""

    def __eq__(self, other):
        return (
            isinstance(other, RankCertificate)
            and self.domains == other.domains
            and self.terms == other.terms
        )

    @property
    def rank(self):
        return len(self.terms)

    def to_map(self):
        total = MultiMapT(self.domains)
        for term in self.terms:
            total = total + term.to_map()
        return total

    def bias_bound(self):
        return certificate_bias_bound(self)

    def pullback(self, homs):
        domains = [h.domain if h is not None else A for h, A in zip(homs, self.domains)]
        return RankCertificate([term.pullback(homs) for term in self.terms], domains)


# ========================================================================
class CrushPiece:
    """G(g(x_I), x_J) with g: A_I → C and G: C × A_J → B"""

    def __init__(self, I, J, g, G, qs):
        self.I = tuple(I)
        self.J = tuple(J)
        self.g = g
        self.G = G
        self.qs = tuple(qs)

    def __repr__(self):
        return (
            f"CrushPiece(I={{{utilities.format_subset(self.I)}}}, "
            f"|C|={self.size}, C={list(self.g.codomain.factors)})"
        )

    @property
    def size(self):
        return self.g.codomain.order

    def to_map(self, k):
        blocks = [self.I] + [(j,) for j in self.J]
        factors = [self.g] + [identity_map(self.G.domains[1 + n]) for n in range(len(self.J))]
        return compose_through(self.G, Partition(blocks, k=k), factors)


# ========================================================================
class CrushDecomposition:
    """F(x) = Σ_I G_I(g_I(x_I), x_{[k-1]∖I})"""

    def __init__(self, domains, codomain, pieces):
        self.domains = tuple(domains)
        self.codomain = codomain
        self.pieces = dict(pieces)

    def __repr__(self):
        return f"CrushDecomposition({list(self.pieces.values())})"

    def to_map(self):
        total = MultiMapG(self.domains, self.codomain)
        for piece in self.pieces.values():
            total = total + piece.to_map(len(self.domains))
        return total

    def evaluate(self, x):
        total = self.codomain.zero()
        for piece in self.pieces.values():
            u = piece.g.evaluate([x[i] for i in piece.I])
            total = total + piece.G.evaluate([u] + [x[j] for j in piece.J])
        return total


# ========================================================================
#
# Functions
#
# ========================================================================
def first_difference(phi, psi, budget=DEFAULT_BUDGET):
    """A point where two maps of the same shape differ, or None.

    The lexicographically first point when the domain fits the budget,
    otherwise a tuple of generators where the tensors differ.
    """
    if phi == psi:
        return None
    if phi.size <= budget:
        a, b = phi.values(), psi.values()
        differ = a != b
        if differ.ndim > 1:
            differ = differ.any(axis=1)
        n = int(np.flatnonzero(differ)[0])
        index = np.unravel_index(n, [A.order for A in phi.domains])
        return tuple(
            A.element(element_table(A)[int(i)]) for A, i in zip(phi.domains, index)
        )
    differ = phi.coefs != psi.coefs
    if differ.ndim > phi.k:
        differ = differ.any(axis=-1)
    index = np.argwhere(differ)[0]
    return tuple(A.generator(int(j)) for A, j in zip(phi.domains, index))


# ========================================================================
def verify_certificate(phi, cert, budget=DEFAULT_BUDGET):
    """Does Σ m_q(left(x_I), right(x_{I^c})) reproduce φ?

    :param phi: target map
    :type phi: MultiMapT
    :param cert: certificate
    :type cert: RankCertificate
    :returns: truthy result carrying a witness point on failure
    :rtype: CheckResult
    """
    if cert.domains != phi.domains:
        raise InputError("certificate domains differ from the domains of the map")
    total = cert.to_map()
    witness = first_difference(phi, total, budget)
    return CheckResult("certificate", witness is None, phi, total, "=", witness)


# ========================================================================
def certificate_bias_bound(cert):
    return reduce(lambda a, t: a * Fraction(1, t.q), cert.terms, Fraction(1))


# ========================================================================
def certificate_bound_check(phi, cert, budget=DEFAULT_BUDGET):
    """bias(φ) ≥ Π 1/q_i for a verifying certificate"""
    if not verify_certificate(phi, cert, budget):
        raise VerificationError("certificate does not verify")
    lhs = bias(phi, budget).to_fraction()
    rhs = certificate_bias_bound(cert)
    return CheckResult("certificate bound", lhs >= rhs, lhs, rhs, ">=", (phi, cert))


# ========================================================================
def _check_prime_power_pair(p, q):
    if not isprime(p):
        raise InputError(f"{p} is not prime")
    pp = prime_power(q)
    if pp is None or pp[0] != p:
        raise InputError(f"{q} is not a power of {p}")


# ========================================================================
def _check_p_groups(domains, p):
    for A in domains:
        if not A.is_p_group(p):
            raise InputError(f"{A.describe()} is not a {p}-group")


# ========================================================================
def _vanishing_violation(coefs, domains, axes, p, modulus):
    """First generator tuple where φ fails to vanish on A_i[p] for some i in axes"""
    for i in axes:
        shape = [1] * len(domains)
        shape[i] = domains[i].rank
        torsion = (np.array(domains[i].factors, dtype=np.int64) // p).reshape(shape)
        bad = np.argwhere((coefs * torsion) % modulus != 0)
        if len(bad):
            return tuple(int(j) for j in bad[0])
    return None


# ========================================================================
def _minimal_lift(values, q):
    """Least nonnegative s in Z/pq with s ≡ v mod q, i.e. the least solution of ps = pv"""
    return np.asarray(values, dtype=np.int64) % q


# ========================================================================
def _extended_axis(phi, A, p, axis):
    """Rewrite the pA axis of φ's tensor on the generators of A"""
    S, inclusion = times_p_subgroup(A, p)
    if phi.domains[axis] != S:
        raise InputError(
            f"axis {axis + 1} must be p{A} = {S}, got {phi.domains[axis]}"
        )
    T = np.moveaxis(phi.coefs, axis, 0)
    out = np.zeros((A.rank,) + T.shape[1:], dtype=np.int64)
    for t, image in enumerate(inclusion.images):
        j = int(np.flatnonzero(image.coords)[0])
        out[j] = T[t]
    return np.moveaxis(out, 0, axis), inclusion


# ========================================================================
def extend_domain(phi, A, p, q, axis=0):
    """Extend φ: pA × A_2 × ... → Z/q to ψ: A × A_2 × ... → Z/pq.

    Requires φ to vanish whenever p x_i = 0 for some other axis i. On the
    subdomain ψ equals p·φ under Z/q ≅ p(Z/pq).

    :param phi: map on pA and the other groups
    :type phi: MultiMapG
    :param A: the group whose subgroup pA sits on the chosen axis
    :type A: FinAbGroup
    :param p: prime
    :type p: int
    :param q: power of p, the order of the codomain of φ
    :type q: int
    :param axis: the extended axis
    :type axis: int
    :returns: extension into Z/pq
    :rtype: MultiMapG
    """
    _check_prime_power_pair(p, q)
    if phi.codomain != FinAbGroup([q]):
        raise InputError(f"the map must land in Z/{q}")
    _check_p_groups([A] + [B for i, B in enumerate(phi.domains) if i != axis], p)
    others = [i for i in range(phi.k) if i != axis]
    bad = _vanishing_violation(phi.coefs[..., 0], phi.domains, others, p, q)
    if bad is not None:
        raise PreconditionError("map does not vanish on the p-torsion of another axis", bad)
    T, _ = _extended_axis(phi, A, p, axis)
    domains = list(phi.domains)
    domains[axis] = A
    return MultiMapG(domains, FinAbGroup([p * q]), _minimal_lift(T, q))


# ========================================================================
def extend_range(phi, p, q):
    """Lift φ: A_1 × ... × A_k → Z/q to ψ into Z/pq with ψ ≡ φ mod q.

    Requires φ to vanish whenever p x_i = 0 for some axis i.
    """
    _check_prime_power_pair(p, q)
    if phi.codomain != FinAbGroup([q]):
        raise InputError(f"the map must land in Z/{q}")
    _check_p_groups(phi.domains, p)
    bad = _vanishing_violation(phi.coefs[..., 0], phi.domains, range(phi.k), p, q)
    if bad is not None:
        raise PreconditionError("map does not vanish on the p-torsion", bad)
    return MultiMapG(phi.domains, FinAbGroup([p * q]), _minimal_lift(phi.coefs, q))


# ========================================================================
def extend_rank_one(phi, witness, A, p, q, axis=0):
    """Extend a map through m_q on pA × A_2 × ... to a map through m_pq on A × A_2 × ...

    :param phi: map on pA and the other groups
    :type phi: MultiMapT
    :param witness: term with phi = m_q(left, right)
    :type witness: CertificateTerm
    :returns: the extension and its term through m_pq
    :rtype: tuple
    """
    _check_prime_power_pair(p, q)
    if witness.q != q or tuple(witness.domains) != phi.domains:
        raise InputError("witness does not match the map")
    if witness.to_map() != phi:
        raise InputError("witness does not reproduce the map")
    if axis not in witness.I:
        witness = witness.swapped()
    others = [i for i in range(phi.k) if i != axis]
    bad = _vanishing_violation(phi.coefs, phi.domains, others, p, phi.modulus)
    if bad is not None:
        raise PreconditionError("map does not vanish on the p-torsion of another axis", bad)

    left = extend_domain(witness.left, A, p, q, axis=witness.I.index(axis))
    right = extend_range(witness.right, p, q)
    term = CertificateTerm(p * q, witness.I, left, right)
    psi = term.to_map()

    _, inclusion = times_p_subgroup(A, p)
    homs = [inclusion if i == axis else None for i in range(phi.k)]
    assert pullback(psi, homs) == phi
    return psi, term


# ========================================================================
def admissible_maps(domains, q):
    """Every multilinear map A_1 × ... × A_m → Z/q, tensors in lexicographic order"""
    g = gcd_grid(domains)
    choices = np.gcd(g, q).reshape(-1)
    steps = (q // np.gcd(g, q)).reshape(-1)
    Zq = FinAbGroup([q])
    for values in itertools.product(*[range(int(c)) for c in choices]):
        coefs = (np.array(values, dtype=np.int64) * steps).reshape(g.shape + (1,))
        yield MultiMapG(domains, Zq, coefs)


# ========================================================================
def _count_admissible(domains, q):
    return int(np.prod(np.gcd(gcd_grid(domains), q), dtype=np.int64))


# ========================================================================
def _proper_subsets(k):
    for size in range(1, k):
        for I in itertools.combinations(range(k), size):
            yield I


# ========================================================================
def _best_completion(prefixes, composites, qs, target, modulus, lookup, need):
    """Cheapest (Π q, indices) completing any of the prefixes, or None"""
    best = None
    for prefix in prefixes:
        prodq = reduce(lambda a, i: a * qs[i], prefix, 1)
        residual = target.copy()
        for i in prefix:
            residual = residual - composites[i]
        residual = residual % modulus
        candidates = lookup.get(residual.tobytes())
        if not candidates:
            continue
        start = bisect_left(candidates, prefix[-1]) if prefix else 0
        for idx in candidates[start:]:
            if prodq * qs[idx] >= need:
                cand = (prodq * qs[idx], prefix + (idx,))
                if best is None or cand < best:
                    best = cand
                break
    return best


# ========================================================================
def search_decomposition(phi, max_q, max_rank, budget=DEFAULT_BUDGET, jobs=1):
    """First verifying certificate in canonical order, or None.

    Certificates are ordered by rank, then Π q_i, then lexicographically in
    (q, I, left tensor, right tensor) of their terms. Since any certificate
    satisfies Π q_i ≥ 1/bias(φ), ranks and completions below that are skipped.

    :param phi: target map
    :type phi: MultiMapT
    :param max_q: largest prime power allowed in a term
    :type max_q: int
    :param max_rank: largest number of terms
    :type max_rank: int
    :returns: certificate or None
    :rtype: RankCertificate
    """
    if phi.is_zero():
        return RankCertificate([], phi.domains)
    if phi.k < 2:
        return None

    primes = set(itertools.chain.from_iterable(A.primes for A in phi.domains))
    qs = sorted(
        (n for n in range(2, max_q + 1) if prime_power(n) and prime_power(n)[0] in primes),
        key=lambda n: n,
    )
    shapes = []
    for q in qs:
        for I in _proper_subsets(phi.k):
            Ic = tuple(a for a in range(phi.k) if a not in I)
            nl = _count_admissible([phi.domains[a] for a in I], q)
            nr = _count_admissible([phi.domains[a] for a in Ic], q)
            shapes.append((q, I, Ic, nl * nr))
    nshapes = sum(s[-1] for s in shapes)
    if nshapes * max_rank > budget:
        raise BudgetExceeded("certificate search", nshapes * max_rank, budget)

    terms, composites, lookup = [], [], {}
    for q, I, Ic, _ in shapes:
        rights = list(admissible_maps([phi.domains[a] for a in Ic], q))
        for left in admissible_maps([phi.domains[a] for a in I], q):
            for right in rights:
                term = CertificateTerm(q, I, left, right)
                coefs = term.to_map().coefs
                key = coefs.tobytes()
                if not coefs.any() or key in lookup:
                    continue
                lookup[key] = [len(terms)]
                terms.append(term)
                composites.append(np.array(coefs, dtype=np.int64))

    need = 1 / bias(phi, budget).to_fraction()
    target = np.array(phi.coefs, dtype=np.int64)
    tq = [t.q for t in terms]
    for rank in range(1, max_rank + 1):
        if max_q**rank < need:
            continue
        prefixes = [
            prefix
            for prefix in itertools.combinations_with_replacement(range(len(terms)), rank - 1)
            if reduce(lambda a, i: a * tq[i], prefix, 1) * max_q >= need
        ]
        nchunks = max(1, jobs)
        size = max(1, -(-len(prefixes) // nchunks))
        tasks = [
            (chunk, composites, tq, target, phi.modulus, lookup, need)
            for chunk in utilities.grouper(prefixes, size)
        ]
        found = [b for b in utilities.starmap(_best_completion, tasks, jobs) if b]
        if found:
            _, indices = min(found)
            cert = RankCertificate([terms[i] for i in indices], phi.domains)
            assert verify_certificate(phi, cert, budget)
            return cert
    return None


# ========================================================================
def _induced(phi, axis, lifts, Q, modulus):
    """The map on a quotient of one axis, evaluated on lifts of its generators"""
    A = phi.domains[axis]
    M = np.array([x.coords for x in lifts], dtype=np.int64).reshape(Q.rank, A.rank)
    domains = list(phi.domains)
    domains[axis] = Q
    return MultiMapT(domains, _along(M, phi.coefs, axis, modulus), modulus=modulus)


# ========================================================================
def _induction_step(phi, p, max_q, max_rank, budget, jobs):
    axis = next((i for i, A in enumerate(phi.domains) if A.exponent > p), None)
    if axis is None:
        return search_decomposition(phi, max_q, max_rank, budget, jobs)
    A = phi.domains[axis]
    S, inclusion = times_p_subgroup(A, p)
    on_pA = pullback(phi, [inclusion if i == axis else None for i in range(phi.k)])

    # φ on pA × A_2 × ... factors through A_i/A_i[p] on every other axis
    reduced, projections = on_pA, [None] * phi.k
    for i in range(phi.k):
        if i == axis:
            continue
        _, torsion = p_torsion(phi.domains[i], p)
        Q, projection, lifts = quotient_with_section(phi.domains[i], torsion.images)
        reduced = _induced(reduced, i, lifts, Q, reduced.modulus)
        projections[i] = projection
    inner = search_decomposition(reduced, max_q, max_rank, budget, jobs)
    if inner is None:
        return None
    inner = inner.pullback(projections)

    extended = []
    for term in inner.terms:
        _, lifted = extend_rank_one(term.to_map(), term, A, p, term.q, axis)
        extended.append(lifted)
    first = RankCertificate(extended, phi.domains)

    # the remainder vanishes on pA and factors through A/pA
    remainder = phi - first.to_map()
    Q, projection, lifts = quotient_with_section(A, inclusion.images)
    rest = search_decomposition(
        _induced(remainder, axis, lifts, Q, remainder.modulus), max_q, max_rank, budget, jobs
    )
    if rest is None:
        return None
    rest = rest.pullback([projection if i == axis else None for i in range(phi.k)])
    return RankCertificate(first.terms + rest.terms, phi.domains)


# ========================================================================
def induction_decomposition(phi, max_q, max_rank, budget=DEFAULT_BUDGET, jobs=1):
    """Certificate assembled by one induction step per prime.

    Splits φ into primary parts; on each part restricts to pA × A_2 × ...,
    decomposes there, extends every term to A × A_2 × ... and decomposes the
    remainder on A/pA. Base cases go to :func:`search_decomposition`.
    """
    terms = []
    for part in primary_split(phi):
        if part.zero:
            continue
        cert = _induction_step(part.map, part.prime, max_q, max_rank, budget, jobs)
        if cert is None:
            return None
        terms += cert.pullback(part.projections).terms
    cert = RankCertificate(terms, phi.domains)
    result = verify_certificate(phi, cert, budget)
    if not result:
        raise VerificationError("assembled certificate does not verify", result.witness)
    return cert


# ========================================================================
def prime_support_bound(eps, k):
    """Largest n with (1 - 2^(1-k))^(-n) ≤ 1/ε, by exact rational comparison"""
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise InputError(f"ε must lie in (0, 1], got {eps}")
    if k < 2:
        return 0
    ratio = Fraction(2 ** (k - 1), 2 ** (k - 1) - 1)
    n, power = 0, ratio
    while power <= 1 / eps:
        n += 1
        power *= ratio
    return n


# ========================================================================
def crush_decomposition(F, cert, budget=DEFAULT_BUDGET):
    """Rewrite F as Σ_I G_I(g_I(x_I), x_rest) from a certificate of χ(F(x)).

    :param F: map A_1 × ... × A_{k-1} → B
    :type F: MultiMapG
    :param cert: certificate for from_group_map(F)
    :type cert: RankCertificate
    :returns: decomposition, one piece per subset I
    :rtype: CrushDecomposition
    """
    phi = from_group_map(F)
    result = verify_certificate(phi, cert, budget)
    if not result:
        raise VerificationError(
            "certificate does not verify against the dual map", result.witness
        )
    dual = phi.k - 1
    B = F.codomain
    b = np.array(B.factors, dtype=np.int64)

    grouped = {}
    for term in cert.terms:
        if dual in term.I:
            term = term.swapped()
        J = tuple(a for a in term.Ic if a != dual)
        R = term.right.coefs[..., 0]
        G = MultiMapG(
            [FinAbGroup([term.q])] + [F.domains[j] for j in J],
            B,
            ((R * b) // term.q)[np.newaxis, ...],
        )
        grouped.setdefault(term.I, []).append((term.q, term.left, G, J))

    pieces = {}
    for I, members in grouped.items():
        members = sorted(members, key=lambda m: canonical_key(m[0]))
        qs = [m[0] for m in members]
        J = members[0][3]
        C = FinAbGroup(qs)
        g = MultiMapG(
            [F.domains[i] for i in I],
            C,
            np.concatenate([m[1].coefs for m in members], axis=-1),
        )
        G = MultiMapG(
            [C] + [F.domains[j] for j in J],
            B,
            np.concatenate([m[2].coefs for m in members], axis=0),
        )
        pieces[I] = CrushPiece(I, J, g, G, qs)
    return CrushDecomposition(F.domains, B, pieces)


# ========================================================================
def verify_crush(F, d, budget=DEFAULT_BUDGET):
    if d.domains != F.domains or d.codomain != F.codomain:
        raise InputError("decomposition shape differs from the map")
    total = d.to_map()
    witness = first_difference(F, total, budget)
    return CheckResult("crush", witness is None, F, total, "=", witness)
