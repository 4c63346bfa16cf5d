# ========================================================================
#
# Imports
#
# ========================================================================
import os
import sys
import unittest
import pandas.testing as pdt

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.lemmas as lemmas


# ========================================================================
#
# Test definitions
#
# ========================================================================
class LemmasTestCase(unittest.TestCase):
    """Tests for the seeded property battery."""

    def test_battery(self):
        """Do all identities and inequalities hold on the default battery?"""
        df, summary = lemmas.run_lemma_battery(1000, 200, 200, seed=7)
        failed = df[~df.holds]
        self.assertTrue(failed.empty, failed.to_string())
        self.assertEqual(list(summary.columns), ["check", "passed", "total", "failed"])
        counts = dict(zip(summary.check, summary.total))
        self.assertEqual(counts["recursion"], 1000)
        self.assertEqual(counts["oracle equivalence"], 1000)
        self.assertEqual(counts["main term"], 200)
        self.assertEqual(counts["extend domain"], 200)
        self.assertEqual(counts["extend range"], 200)
        self.assertEqual(counts["extend rank one"], 200)
        self.assertEqual(summary.failed.sum(), 0)

    def test_deterministic(self):
        """Is the log independent of the number of processes?"""
        df1, summary1 = lemmas.run_lemma_battery(12, 4, 4, seed=3, max_order=8, jobs=1)
        df2, summary2 = lemmas.run_lemma_battery(12, 4, 4, seed=3, max_order=8, jobs=2)
        pdt.assert_frame_equal(df1, df2)
        pdt.assert_frame_equal(summary1, summary2)

    def test_seeds(self):
        """Do different seeds draw different maps?"""
        df1, _ = lemmas.run_lemma_battery(6, 0, 0, seed=1, max_order=8)
        df2, _ = lemmas.run_lemma_battery(6, 0, 0, seed=2, max_order=8)
        self.assertEqual(set(df1.family), {"multilinear"})
        self.assertFalse(df1.groups.equals(df2.groups))

    def test_families(self):
        """Does each trial family report its own checks?"""
        df, summary = lemmas.run_lemma_battery(0, 3, 2, seed=7, max_order=8)
        self.assertEqual(set(df.family), {"affine", "extension"})
        self.assertEqual(
            list(summary.check), ["main term", "extend domain", "extend range", "extend rank one"]
        )


if __name__ == "__main__":
    unittest.main()
