# ========================================================================
#
# Imports
#
# ========================================================================
import os
import sys
import tempfile
import unittest
from fractions import Fraction

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.formats as formats
from mlbias.bias import bias
from mlbias.groups import FinAbGroup
from mlbias.maps import MultiMapG, MultiMapT, m_q
from mlbias.scalars import TorusValue
from mlbias.spectrum import gauss_map
from mlbias.structure import RankCertificate, search_decomposition
from mlbias.utilities import InputError, MlmapSyntaxError

Z2 = FinAbGroup([2])
Z4 = FinAbGroup([4])

M2 = """mlmap 1
k 2
group 1 2
group 2 2
codomain T
entry 1 1 1/2
"""

REDUCE_MOD_2 = """mlmap 1
k 1
group 1 4
codomain group 2
entry 1 (1)
"""


# ========================================================================
#
# Test definitions
#
# ========================================================================
class FormatsTestCase(unittest.TestCase):
    """Tests for the MLMAP and MLCERT text formats."""

    def test_m2(self):
        """Is m_2 read and written canonically?"""
        doc = formats.parse_mlmap(M2)
        self.assertEqual(doc.kind, "torus")
        self.assertEqual(doc.entries, {(0, 0): TorusValue(1, 2)})
        self.assertEqual(doc.to_map(), m_q(2))
        self.assertEqual(formats.emit_mlmap(doc), M2)
        self.assertEqual(formats.emit_mlmap(formats.MlmapDocument.from_map(m_q(2))), M2)

    def test_comments(self):
        """Are comments and blank lines ignored?"""
        text = "# the pairing on Z/4\nmlmap 1\n\nk 2   # arity\ngroup 1 4\ngroup 2 4\ncodomain T\nentry 1 1 -1/4\n"
        phi = formats.parse_mlmap(text).to_map()
        self.assertEqual(phi, m_q(4).scale(3))
        self.assertEqual(bias(phi), Fraction(1, 4))

    def test_zero_map(self):
        """Is a document without entries the zero map?"""
        text = "mlmap 1\nk 2\ngroup 1 4\ngroup 2 2 2\ncodomain T\n"
        phi = formats.parse_mlmap(text).to_map()
        self.assertTrue(phi.is_zero())
        self.assertEqual(phi.domains, (Z4, FinAbGroup([2, 2])))

    def test_group_valued(self):
        """Are group-valued maps read and written?"""
        doc = formats.parse_mlmap(REDUCE_MOD_2)
        self.assertEqual(doc.kind, "group")
        self.assertEqual(doc.to_map(), MultiMapG([Z4], Z2, [[1]]))
        self.assertEqual(formats.emit_mlmap(doc), REDUCE_MOD_2)

        B = FinAbGroup([2, 4])
        F = MultiMapG([Z4], B, [[1, 2]])
        text = formats.emit_mlmap(formats.MlmapDocument.from_map(F))
        self.assertIn("entry 1 (1,2)", text)
        self.assertEqual(formats.parse_mlmap(text).to_map(), F)

    def test_affine(self):
        """Are multiaffine maps written term by term?"""
        phi = gauss_map(3)
        text = formats.emit_mlmap(formats.MlmapDocument.from_map(phi))
        self.assertEqual(
            text.splitlines()[-6:],
            ["term 1,2", "entry 1 1 1/3", "term 1,3", "entry 1 1 1/3", "term 2,3", "entry 1 1 1/3"],
        )
        doc = formats.parse_mlmap(text)
        self.assertEqual(doc.kind, "affine")
        self.assertEqual(doc.to_map(), phi)

    def test_inadmissible_entry(self):
        """Is 1/3 on (Z/2)^2 rejected with its position?"""
        text = M2.replace("1/2", "1/3")
        with self.assertRaises(MlmapSyntaxError) as context:
            formats.parse_mlmap(text)
        self.assertEqual(context.exception.line, 6)
        self.assertEqual(context.exception.column, 11)
        self.assertIsInstance(context.exception, InputError)

    def test_syntax_errors(self):
        """Are malformed documents rejected with the offending line?"""
        cases = {
            "mlmap 2\nk 1\ngroup 1 2\ncodomain T\n": 1,
            "mlmap 1\nk 1\ngroup 1 4 2\ncodomain T\n": 3,
            "mlmap 1\nk 2\ngroup 1 2\ncodomain T\n": 4,
            "mlmap 1\nk 1\ngroup 1 2\ncodomain T\nvalue 1 1/2\n": 5,
            "mlmap 1\nk 1\ngroup 1 2\ncodomain T\nentry 2 1/2\n": 5,
            "mlmap 1\nk 1\ngroup 1 2\ncodomain T\nentry 1 1/2\nentry 1 1/2\n": 6,
            "mlmap 1\nk 1\ngroup 1 4\ncodomain group 2\nentry 1 (1,1)\n": 5,
            "mlmap 1\nk 1\ngroup 1 2\ncodomain group 4\nentry 1 (1)\n": 5,
            "mlmap 1\nk 1\ngroup 1 2\ncodomain group 2\nterm 1\n": 5,
        }
        for text, line in cases.items():
            with self.assertRaises(MlmapSyntaxError) as context:
                formats.parse_mlmap(text)
            self.assertEqual(context.exception.line, line, text)

    def test_certificate(self):
        """Is a certificate written and read back exactly?"""
        phi = m_q(4).scale(2)
        cert = search_decomposition(phi, 4, 1)
        text = formats.emit_mlcert(cert)
        self.assertTrue(text.startswith("mlcert 1\nk 2\nterm q=2 I=1\nleft\nmlmap 1\n"))
        doc = formats.parse_mlcert(text)
        self.assertEqual(doc.k, 2)
        self.assertEqual(doc.to_certificate(), cert)
        self.assertEqual(doc.to_certificate(phi.domains), cert)

    def test_empty_certificate(self):
        """Does an empty certificate need its arity?"""
        doc = formats.parse_mlcert("mlcert 1\nk 2\n")
        cert = doc.to_certificate((Z2, Z2))
        self.assertEqual(cert, RankCertificate([], (Z2, Z2)))
        with self.assertRaises(InputError):
            doc.to_certificate()
        with self.assertRaises(MlmapSyntaxError):
            formats.parse_mlcert("mlcert 1\n")

    def test_certificate_errors(self):
        """Are broken certificates rejected?"""
        torus_factor = "mlcert 1\nterm q=2 I=1\nleft\n" + M2 + "end\nright\n" + M2 + "end\n"
        with self.assertRaises(MlmapSyntaxError):
            formats.parse_mlcert(torus_factor)
        unclosed = "mlcert 1\nterm q=2 I=1\nleft\n" + REDUCE_MOD_2
        with self.assertRaises(MlmapSyntaxError):
            formats.parse_mlcert(unclosed)
        with self.assertRaises(MlmapSyntaxError):
            formats.parse_mlcert("mlcert 1\nterm q=2\n")

    def test_files(self):
        """Do maps and certificates survive a trip through files?"""
        phi = MultiMapT([FinAbGroup([2, 4]), Z4], [[2], [1]], modulus=4)
        cert = search_decomposition(phi, 4, 2)
        with tempfile.TemporaryDirectory() as tmp:
            mname = os.path.join(tmp, "phi.mlmap")
            cname = os.path.join(tmp, "phi.mlcert")
            formats.write_map(mname, phi)
            formats.write_certificate(cname, cert)
            self.assertEqual(formats.read_map(mname), phi)
            self.assertEqual(formats.read_certificate(cname, phi.domains), cert)


if __name__ == "__main__":
    unittest.main()
