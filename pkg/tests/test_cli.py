# ========================================================================
#
# Imports
#
# ========================================================================
import io
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.cli as cli
import mlbias.formats as formats
from mlbias.groups import FinAbGroup
from mlbias.maps import MultiMapG, m_q

M2 = "mlmap 1\nk 2\ngroup 1 2\ngroup 2 2\ncodomain T\nentry 1 1 1/2\n"
TWOXY4 = "mlmap 1\nk 2\ngroup 1 4\ngroup 2 4\ncodomain T\nentry 1 1 1/2\n"
REDUCE = "mlmap 1\nk 1\ngroup 1 4\ncodomain group 2\nentry 1 (1)\n"
GOOD = """mlcert 1
k 2
term q=2 I=1
left
mlmap 1
k 1
group 1 4
codomain group 2
entry 1 (1)
end
right
mlmap 1
k 1
group 1 4
codomain group 2
entry 1 (1)
end
"""
BAD = GOOD.replace("q=2", "q=4").replace("codomain group 2", "codomain group 4")


# ========================================================================
#
# Functions
#
# ========================================================================
def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.run_command(argv)
    return code, out.getvalue(), err.getvalue()


# ========================================================================
#
# Test definitions
#
# ========================================================================
class CLITestCase(unittest.TestCase):
    """Tests for the command line."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, text):
        fname = os.path.join(self.dir, name)
        with open(fname, "w") as f:
            f.write(text)
        return fname

    def test_bias(self):
        """Does bias print the exact value?"""
        fname = self.write("m2.mlmap", M2)
        code, out, _ = run(["bias", fname])
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], "1/2")
        code, out, _ = run(["bias", fname, "--method", "oracle"])
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], "1/2")

    def test_bias_errors(self):
        """Are bad inputs reported with exit code 2?"""
        code, _, err = run(["bias", os.path.join(self.dir, "missing.mlmap")])
        self.assertEqual(code, 2)
        self.assertIn("error", err)
        fname = self.write("bad.mlmap", M2.replace("1/2", "1/3"))
        code, _, err = run(["bias", fname])
        self.assertEqual(code, 2)
        self.assertIn("line 6", err)
        code, _, _ = run(["bias", self.write("reduce.mlmap", REDUCE)])
        self.assertEqual(code, 2)
        code, _, _ = run(["unknown"])
        self.assertEqual(code, 2)

    def test_verify(self):
        """Are good and bad certificates told apart?"""
        mname = self.write("twoxy4.mlmap", TWOXY4)
        code, out, _ = run(["verify", mname, self.write("good.mlcert", GOOD)])
        self.assertEqual(code, 0)
        self.assertIn("verified rank 1", out)
        code, out, _ = run(["verify", mname, self.write("bad.mlcert", BAD)])
        self.assertEqual(code, 1)
        self.assertIn("witness ((1), (1))", out)

    def test_decompose(self):
        """Does decompose emit a certificate that verifies?"""
        mname = self.write("m4.mlmap", formats.emit_mlmap(formats.MlmapDocument.from_map(m_q(4))))
        cname = os.path.join(self.dir, "m4.mlcert")
        code, out, _ = run(["decompose", mname, "--max-q", "4", "--max-rank", "1", "--emit", cname])
        self.assertEqual(code, 0)
        self.assertIn("rank 1", out)
        self.assertIn("bias ≥ 1/4", out)
        code, _, _ = run(["verify", mname, cname])
        self.assertEqual(code, 0)

        code, out, _ = run(["decompose", mname, "--max-q", "2", "--max-rank", "1"])
        self.assertEqual(code, 1)
        code, _, _ = run(["decompose", mname, "--strategy", "induction", "--max-q", "4"])
        self.assertEqual(code, 0)

    def test_extend(self):
        """Does extend lift xy mod 2 to xy mod 4?"""
        phi = MultiMapG([FinAbGroup([4])] * 2, FinAbGroup([2]), [[[1]]])
        fname = self.write("xy2.mlmap", formats.emit_mlmap(formats.MlmapDocument.from_map(phi)))
        out_name = os.path.join(self.dir, "xy4.mlmap")
        code, _, _ = run(["extend", fname, "--mode", "range", "--p", "2", "--q", "2", "--out", out_name])
        self.assertEqual(code, 0)
        psi = formats.read_map(out_name)
        self.assertEqual(psi, MultiMapG([FinAbGroup([4])] * 2, FinAbGroup([4]), [[[1]]]))

        phi = MultiMapG([FinAbGroup([2]), FinAbGroup([4])], FinAbGroup([2]), [[[1]]])
        fname = self.write("pa.mlmap", formats.emit_mlmap(formats.MlmapDocument.from_map(phi)))
        code, out, _ = run(["extend", fname, "--mode", "domain", "--p", "2", "--q", "2", "--group", "4"])
        self.assertEqual(code, 0)
        self.assertIn("codomain group 4", out)

        code, _, _ = run(["extend", fname, "--mode", "range", "--p", "2", "--q", "2"])
        self.assertEqual(code, 2)

    def test_crush(self):
        """Is x mod 2 crushed through Z/2?"""
        fname = self.write("reduce.mlmap", REDUCE)
        right = "right\nmlmap 1\nk 1\ngroup 1 2\ncodomain group 2\nentry 1 (1)\nend\n"
        cert = GOOD.split("right\n")[0] + right
        code, out, _ = run(["crush", fname, self.write("crush.mlcert", cert)])
        self.assertEqual(code, 0)
        self.assertIn("I=1 |C|=2 C=[2]", out)
        self.assertIn("verified", out)

    def test_spectrum(self):
        """Does spectrum write the sorted value file?"""
        out_name = os.path.join(self.dir, "b2.txt")
        code, _, _ = run(["spectrum", "--k", "2", "--max-order", "4", "--out", out_name, "--gaps"])
        self.assertEqual(code, 0)
        with open(out_name) as f:
            lines = f.read().splitlines()
        self.assertEqual([line.split("\t")[0] for line in lines], ["1/4", "1/3", "1/2", "1"])

        config = self.write("small.toml", "[spectrum]\nbudget = 10\n")
        code, _, err = run(["spectrum", "--config", config, "--max-order", "4", "--out", out_name])
        self.assertEqual(code, 3)
        self.assertIn("budget is 10", err)

        config = self.write("typo.toml", "[spectrum]\nmax_orders = 4\n")
        code, _, _ = run(["spectrum", "--config", config, "--out", out_name])
        self.assertEqual(code, 2)

    def test_lemmas(self):
        """Does a small battery pass?"""
        log = os.path.join(self.dir, "lemmas.csv")
        code, out, _ = run(
            [
                "lemmas",
                "--trials", "20",
                "--affine-trials", "5",
                "--extension-trials", "5",
                "--max-order", "8",
                "--log", log,
            ]
        )
        self.assertEqual(code, 0)
        self.assertIn("recursion: 20/20", out)
        self.assertIn("main term: 5/5", out)
        self.assertTrue(os.path.exists(log))

    def test_gauss(self):
        """Is G(5)^2 = 5 printed?"""
        code, out, _ = run(["gauss", "--p", "5"])
        self.assertEqual(code, 0)
        self.assertIn("G(5)^2 = 5", out)
        code, _, _ = run(["gauss", "--p", "4"])
        self.assertEqual(code, 2)

    def test_config(self):
        """Is the active configuration printed?"""
        config = self.write("input.toml", "[spectrum]\nk = 3\ndegree = 2\nmax_order = 3\n")
        code, out, _ = run(["config", "--config", config, "--jobs", "2"])
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertIn("[spectrum]", lines)
        self.assertIn("k = 3", lines)
        self.assertIn("degree = 2", lines)
        self.assertIn('method = "kernel" ', lines)
        self.assertEqual(lines.count("jobs = 2"), 3)
        code, out, _ = run(["config", "--help-keys"])
        self.assertEqual(code, 0)
        self.assertIn("k = 2 # Number of arguments", out)


if __name__ == "__main__":
    unittest.main()
