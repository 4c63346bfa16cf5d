# ========================================================================
#
# Imports
#
# ========================================================================
import os
import sys
import unittest
from fractions import Fraction
from math import prod

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.structure as structure
from mlbias.groups import FinAbGroup, make_group, times_p_subgroup
from mlbias.maps import MultiMapG, MultiMapT, m_q, pullback, to_group_map
from mlbias.structure import CertificateTerm, RankCertificate
from mlbias.utilities import BudgetExceeded, InputError, PreconditionError

Z2 = FinAbGroup([2])
Z4 = FinAbGroup([4])
V = FinAbGroup([2, 2])
W = FinAbGroup([2, 4])
Z6 = make_group([6])


# ========================================================================
#
# Functions
#
# ========================================================================
def golden_corpus():
    """(name, map, max_q, rank of the first certificate)"""
    diagonal = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
    diagonal[0][0][0] = 1
    diagonal[1][1][1] = 1
    return [
        ("m_2", m_q(2), 2, 1),
        ("m_3", m_q(3), 3, 1),
        ("m_4", m_q(4), 4, 1),
        ("2xy/4", m_q(4).scale(2), 4, 1),
        ("zero", MultiMapT([Z2, Z2]), 2, 0),
        ("x1y1 + x2y2 over 2", MultiMapT([V, V], [[1, 0], [0, 1]], modulus=2), 2, 2),
        ("xyz/2", MultiMapT([Z2, Z2, Z2], [[[1]]], modulus=2), 2, 1),
        (
            "xy/6",
            MultiMapT.from_entries([Z6, Z6], {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 3)}),
            3,
            2,
        ),
        ("diagonal xyz/2", MultiMapT([V, V, V], diagonal, modulus=2), 2, 2),
        ("x1y1/2 + x2y2/4", MultiMapT([W, W], [[2, 0], [0, 1]], modulus=4), 4, 2),
    ]


def left_right(q, I, left_domains, right_domains, left, right):
    Zq = FinAbGroup([q])
    return CertificateTerm(
        q,
        I,
        MultiMapG(left_domains, Zq, left),
        MultiMapG(right_domains, Zq, right),
    )


# ========================================================================
#
# Test definitions
#
# ========================================================================
class StructureTestCase(unittest.TestCase):
    """Tests for certificates, extensions and crush decompositions."""

    def test_certificate_term(self):
        """Does a term evaluate m_q(left, right)?"""
        term = left_right(2, (0,), [Z4], [Z4], [[1]], [[1]])
        self.assertEqual(term.to_map(), m_q(4).scale(2))
        self.assertEqual(term.domains, [Z4, Z4])
        self.assertEqual(term.swapped().to_map(), term.to_map())
        with self.assertRaises(InputError):
            left_right(6, (0,), [Z2], [Z2], [[1]], [[1]])
        with self.assertRaises(InputError):
            CertificateTerm(4, (0,), MultiMapG([Z4], Z2, [[1]]), MultiMapG([Z4], Z4, [[1]]))

    def test_verify(self):
        """Is a wrong certificate refuted at the first differing point?"""
        good = RankCertificate([left_right(2, (0,), [Z4], [Z4], [[1]], [[1]])], [Z4, Z4])
        bad = RankCertificate([left_right(4, (0,), [Z4], [Z4], [[1]], [[1]])], [Z4, Z4])
        twoxy = m_q(4).scale(2)
        self.assertTrue(structure.verify_certificate(twoxy, good))
        result = structure.verify_certificate(twoxy, bad)
        self.assertFalse(result)
        self.assertEqual(result.witness, (Z4.element([1]), Z4.element([1])))
        self.assertEqual(good.bias_bound(), Fraction(1, 2))
        self.assertEqual(structure.certificate_bias_bound(RankCertificate([], [Z4, Z4])), 1)
        self.assertTrue(structure.certificate_bound_check(twoxy, good))

    def test_golden_corpus(self):
        """Does the search find certificates of the expected rank?"""
        for name, phi, max_q, rank in golden_corpus():
            cert = structure.search_decomposition(phi, max_q, 2)
            self.assertIsNotNone(cert, name)
            self.assertEqual(cert.rank, rank, name)
            self.assertTrue(structure.verify_certificate(phi, cert), name)
            self.assertTrue(structure.certificate_bound_check(phi, cert), name)
            self.assertEqual(structure.search_decomposition(phi, max_q, 2), cert, name)

    def test_crush_roundtrip(self):
        """Does every corpus certificate crush its group-valued map?"""
        for name, phi, max_q, _ in golden_corpus():
            cert = structure.search_decomposition(phi, max_q, 2)
            F = to_group_map(phi)
            d = structure.crush_decomposition(F, cert)
            self.assertTrue(structure.verify_crush(F, d), name)
            for piece in d.pieces.values():
                self.assertEqual(piece.size, prod(piece.qs), name)

    def test_crush_example(self):
        """Is x mod 2 crushed through Z/2?"""
        F = MultiMapG([Z4], Z2, [[1]])
        cert = RankCertificate([left_right(2, (0,), [Z4], [Z2], [[1]], [[1]])], [Z4, Z2])
        d = structure.crush_decomposition(F, cert)
        self.assertEqual(list(d.pieces), [(0,)])
        self.assertEqual(d.pieces[(0,)].size, 2)
        self.assertEqual(d.to_map(), F)
        self.assertEqual(d.evaluate([Z4.element([3])]), Z2.element([1]))

    def test_search_limits(self):
        """Are impossible searches and budgets reported?"""
        self.assertIsNone(structure.search_decomposition(m_q(4), 2, 2))
        self.assertIsNone(structure.search_decomposition(MultiMapT([Z4], [1], modulus=4), 4, 1))
        with self.assertRaises(BudgetExceeded):
            structure.search_decomposition(m_q(4), 4, 2, budget=3)

    def test_induction(self):
        """Does the induction step assemble verifying certificates?"""
        for phi in [m_q(4), m_q(4).scale(2), m_q(8)]:
            cert = structure.induction_decomposition(phi, 8, 2)
            self.assertIsNotNone(cert)
            self.assertTrue(structure.verify_certificate(phi, cert))
            self.assertEqual(cert.rank, 1)

        Z8 = FinAbGroup([8])
        phi = MultiMapT([Z8, Z4, Z8], [[[1]]], modulus=4)
        cert = structure.induction_decomposition(phi, 8, 2)
        self.assertIsNotNone(cert)
        self.assertTrue(structure.verify_certificate(phi, cert))
        self.assertEqual(cert.rank, 1)
        phi = MultiMapT([Z4, Z8, Z8], [[[1]]], modulus=4)
        cert = structure.induction_decomposition(phi, 8, 2)
        self.assertIsNotNone(cert)
        self.assertTrue(structure.verify_certificate(phi, cert))

    def test_extend_domain(self):
        """Does φ(2a, y) = ay mod 2 extend to xy mod 4?"""
        phi = MultiMapG([Z2, Z4], Z2, [[[1]]])
        psi = structure.extend_domain(phi, Z4, 2, 2)
        self.assertEqual(psi, MultiMapG([Z4, Z4], Z4, [[[1]]]))
        _, inclusion = times_p_subgroup(Z4, 2)
        restricted = pullback(psi, [inclusion, None])
        self.assertEqual(restricted, MultiMapG([Z2, Z4], Z4, [[[2]]]))
        self.assertEqual(structure.extend_domain(phi, Z4, 2, 2), psi)

    def test_extend_domain_precondition(self):
        """Is a map not vanishing on the torsion rejected?"""
        phi = MultiMapG([Z2, Z2], Z2, [[[1]]])
        with self.assertRaises(PreconditionError):
            structure.extend_domain(phi, Z4, 2, 2)
        with self.assertRaises(InputError):
            structure.extend_domain(MultiMapG([Z2, FinAbGroup([3])], Z2), Z4, 2, 2)

    def test_extend_range(self):
        """Does xy mod 2 on (Z/4)^2 lift to xy mod 4?"""
        phi = MultiMapG([Z4, Z4], Z2, [[[1]]])
        psi = structure.extend_range(phi, 2, 2)
        self.assertEqual(psi, MultiMapG([Z4, Z4], Z4, [[[1]]]))
        self.assertTrue(((psi.values() % 2) == phi.values()).all())
        with self.assertRaises(PreconditionError):
            structure.extend_range(MultiMapG([Z2, Z4], Z2, [[[1]]]), 2, 2)
        with self.assertRaises(InputError):
            structure.extend_range(phi, 3, 2)

    def test_extend_rank_one(self):
        """Does m_2 on 2(Z/4) × Z/4 extend to m_4?"""
        term = left_right(2, (0,), [Z2], [Z4], [[1]], [[1]])
        phi = term.to_map()
        self.assertEqual(phi, MultiMapT([Z2, Z4], [[1]]))
        psi, lifted = structure.extend_rank_one(phi, term, Z4, 2, 2)
        self.assertEqual(psi, m_q(4))
        self.assertEqual(lifted.q, 4)
        self.assertEqual(lifted.to_map(), psi)
        with self.assertRaises(InputError):
            structure.extend_rank_one(m_q(2), term, Z4, 2, 2)

    def test_prime_support_bound(self):
        """Is the number of primes bounded by log(1/ε) / log(1/(1 - 2^(1-k)))?"""
        self.assertEqual(structure.prime_support_bound(Fraction(1, 4), 2), 2)
        self.assertEqual(structure.prime_support_bound(Fraction(1, 2), 2), 1)
        self.assertEqual(structure.prime_support_bound(Fraction(1, 8), 2), 3)
        self.assertEqual(structure.prime_support_bound(1, 2), 0)
        self.assertEqual(structure.prime_support_bound(Fraction(1, 2), 3), 2)
        with self.assertRaises(InputError):
            structure.prime_support_bound(0, 2)


if __name__ == "__main__":
    unittest.main()
