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
import pandas as pd

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.spectrum as spectrum
from mlbias.bias import bias, bias_oracle
from mlbias.formats import read_map
from mlbias.utilities import BudgetExceeded, InputError


# ========================================================================
#
# Test definitions
#
# ========================================================================
class SpectrumTestCase(unittest.TestCase):
    """Tests for bias set enumeration and Gauss sums."""

    def test_linear_slice(self):
        """Do linear maps only have biases 0 and 1?"""
        report = spectrum.enumerate_bias_set(1, 8)
        self.assertEqual(report.fractions(), [Fraction(0), Fraction(1)])

    def test_bilinear_slices(self):
        """Are the bilinear biases exactly the 1/n?"""
        self.assertEqual(spectrum.enumerate_bias_set(2, 1).fractions(), [Fraction(1)])
        self.assertEqual(
            spectrum.enumerate_bias_set(2, 4).fractions(),
            [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(1)],
        )
        report = spectrum.enumerate_bias_set(2, 8)
        self.assertEqual(report.fractions(), sorted(Fraction(1, n) for n in range(1, 9)))

    def test_witnesses(self):
        """Does every witness realise its value?"""
        report = spectrum.enumerate_bias_set(2, 6)
        self.assertEqual(len(report.witnesses), len(report))
        for value, witness in zip(report.values, report.witnesses):
            self.assertEqual(bias(witness), value)

    def test_jobs(self):
        """Is the report independent of the number of processes?"""
        self.assertEqual(
            spectrum.enumerate_bias_set(2, 4, jobs=2), spectrum.enumerate_bias_set(2, 4, jobs=1)
        )
        self.assertEqual(
            spectrum.enumerate_bias_set_affine(2, 2, 3, jobs=2),
            spectrum.enumerate_bias_set_affine(2, 2, 3, jobs=1),
        )

    def test_budget(self):
        """Is the number of visited maps bounded?"""
        with self.assertRaises(BudgetExceeded):
            spectrum.enumerate_bias_set(2, 8, budget=10)
        with self.assertRaises(BudgetExceeded):
            spectrum.enumerate_bias_set_affine(3, 2, 3, budget=10)
        with self.assertRaises(InputError):
            spectrum.enumerate_bias_set_affine(2, 3, 3)
        with self.assertRaises(InputError):
            spectrum.enumerate_bias_set(0, 3)

    def test_affine_linear(self):
        """Do degree one maps only have biases 0 and 1?"""
        report = spectrum.enumerate_bias_set_affine(2, 1, 3)
        self.assertEqual(report.fractions(), [Fraction(0), Fraction(1)])
        self.assertEqual(len(report), 2)

    def test_affine_gauss(self):
        """Does the degree two slice on (Z/3)^3 contain the Gauss value?"""
        report = spectrum.enumerate_bias_set_affine(3, 2, 3)
        self.assertIn(spectrum.gauss_bias_value(3), report.value_set())
        for value, witness in zip(report.values, report.witnesses):
            self.assertLessEqual(float(value.modulus_enclosure(64).b), 1 + 2**-50)
            self.assertEqual(bias_oracle(witness), value)
        moduli = [float(v.modulus_enclosure(64).mid) for v in report.values]
        for smaller, larger in zip(moduli[:-1], moduli[1:]):
            self.assertLessEqual(smaller, larger + 1e-12)

    def test_gauss_sums(self):
        """Is G(p)^2 = ±p?"""
        for p in [3, 5, 7, 11, 13]:
            g = spectrum.gauss_sum(p)
            self.assertEqual(g * g, p if p % 4 == 1 else -p)
        for p in [2, 9, 1]:
            with self.assertRaises(InputError):
                spectrum.gauss_sum(p)

    def test_gaps(self):
        """Are reverse gaps measured to the next smaller value?"""
        report = spectrum.enumerate_bias_set(2, 4)
        self.assertEqual(spectrum.is_reverse_gap(report, 1), Fraction(1, 2))
        self.assertEqual(spectrum.is_reverse_gap(report, Fraction(1, 3)), Fraction(1, 12))
        self.assertIsNone(spectrum.is_reverse_gap(report, Fraction(1, 4)))
        df = spectrum.gap_table(report)
        self.assertEqual(len(df), 4)
        self.assertEqual(list(df.value), ["1/4", "1/3", "1/2", "1"])
        self.assertIsNone(df.gap[0])
        self.assertEqual(df.gap[3], "1/2")

    def test_write_report(self):
        """Are the value file, table and witnesses written?"""
        report = spectrum.enumerate_bias_set(2, 4)
        with tempfile.TemporaryDirectory() as tmp:
            fname = os.path.join(tmp, "values.txt")
            csv = os.path.join(tmp, "values.csv")
            wdir = os.path.join(tmp, "witnesses")
            spectrum.write_report(report, fname, csv=csv, witness_dir=wdir)
            with open(fname) as f:
                lines = f.read().splitlines()
            self.assertEqual(len(lines), 4)
            self.assertEqual(lines[0].split("\t")[0], "1/4")
            self.assertEqual(lines[-1], "1\t1.000000000000000")
            df = pd.read_csv(csv)
            self.assertEqual(list(df.columns), ["value", "real", "imag", "modulus", "witness"])
            for value, wname in zip(report.values, df.witness):
                self.assertEqual(bias(read_map(wname)), value)


if __name__ == "__main__":
    unittest.main()
