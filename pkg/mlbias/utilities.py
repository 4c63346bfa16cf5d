# ========================================================================
#
# Imports
#
# ========================================================================
import itertools
from multiprocessing import Pool
import numpy as np
import pandas as pd
import matplotlib.pyplot as plt
from matplotlib.backends.backend_pdf import PdfPages
from matplotlib import rcParams


# ========================================================================
#
# Some defaults variables
#
# ========================================================================
cmap = [
    "#EE2E2F",
    "#008C48",
    "#185AA9",
    "#F47D23",
    "#662C91",
    "#A21D21",
    "#B43894",
    "#010202",
]
markertype = ["s", "d", "o", "p", "h"]
rcParams.update({"figure.max_open_warning": 0})
adj = [0.18, 0.14, 0.98, 0.95]

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


# ========================================================================
#
# Classes
#
# ========================================================================
class MLBiasError(Exception):
    """Base class of every error raised by the library"""

    exit_code = EXIT_INPUT


# ========================================================================
class InputError(MLBiasError):
    """Malformed arguments, mismatched shapes or domains, bad files"""

    exit_code = EXIT_INPUT


# ========================================================================
class MlmapSyntaxError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column else "") + ": "
        super().__init__(f"{where}{message}")


# ========================================================================
class PreconditionError(InputError):
    """A hypothesis of a construction fails; carries the offending generator tuple"""

    def __init__(self, message, witness=None):
        self.witness = witness
        if witness is not None:
            message = f"{message} (witness {format_indices(witness)})"
        super().__init__(message)


# ========================================================================
class VerificationError(MLBiasError):
    """A certificate or decomposition does not reproduce its target map"""

    exit_code = EXIT_VERIFICATION

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


# ========================================================================
class BudgetExceeded(MLBiasError):
    exit_code = EXIT_BUDGET

    def __init__(self, what, needed, budget):
        self.needed = needed
        self.budget = budget
        super().__init__(f"{what} needs {needed} evaluations, budget is {budget}")


# ========================================================================
class PrecisionError(MLBiasError):
    """Interval enclosures failed to separate at the precision cap"""

    exit_code = EXIT_BUDGET


# ========================================================================
#
# Functions
#
# ========================================================================
def format_indices(indices):
    """Format a 0-based index tuple in the 1-based convention of the files"""
    return "(" + ", ".join(str(i + 1) for i in indices) + ")"


# ========================================================================
def format_subset(axes):
    return ",".join(str(i + 1) for i in sorted(axes))


# ========================================================================
def grouper(iterable, n):
    """Group iterable in chunks of n"""
    it = iter(iterable)
    while True:
        chunk = tuple(itertools.islice(it, n))
        if not chunk:
            return
        yield chunk


# ========================================================================
def chunk_ranges(total, nchunks):
    """Split range(total) into at most nchunks contiguous (start, stop) pairs

    :param total: number of items
    :type total: int
    :param nchunks: number of chunks requested
    :type nchunks: int
    :returns: list of (start, stop)
    :rtype: list
    """
    nchunks = max(1, min(nchunks, total))
    edges = np.linspace(0, total, nchunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


# ========================================================================
def starmap(func, tasks, jobs=1):
    """Apply func to each argument tuple, in a process pool when jobs > 1

    Results come back in task order whatever the number of processes.
    """
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [func(*task) for task in tasks]

    with Pool(processes=jobs) as pool:
        return pool.starmap(func, tasks)


# ========================================================================
def plot_spectrum(df, idx=0, name=None):
    """Plot the values of a spectrum table on the real line or in the unit disc

    :param df: spectrum table with columns value, real, imag, modulus
    :type df: DataFrame
    :param idx: color index
    :type idx: int
    :param name: legend label
    :type name: str
    """
    cidx = np.mod(idx, len(cmap))
    midx = np.mod(idx, len(markertype))

    plt.figure("values")
    plt.scatter(
        df.real,
        df.imag,
        c=cmap[cidx],
        s=25,
        marker=markertype[midx],
        label=name,
    )

    plt.figure("modulus")
    plt.plot(
        np.arange(len(df)),
        np.sort(df.modulus.values),
        color=cmap[cidx],
        lw=2,
        marker=markertype[midx],
        ms=5,
        label=name,
    )


# ========================================================================
def save_spectrum_plots(fname, legends=["values", "modulus"]):
    """Save spectrum plots"""

    with PdfPages(fname) as pdf:
        plt.figure("values")
        ax = plt.gca()
        theta = np.linspace(0, 2 * np.pi, 400)
        plt.plot(np.cos(theta), np.sin(theta), color=cmap[-1], lw=1)
        ax.set_aspect("equal")
        plt.xlabel("Re bias", fontsize=22, fontweight="bold")
        plt.ylabel("Im bias", fontsize=22, fontweight="bold")
        plt.setp(ax.get_xmajorticklabels(), fontsize=16)
        plt.setp(ax.get_ymajorticklabels(), fontsize=16)
        if plt.gcf().get_label() in legends:
            ax.legend(loc="best")
        plt.subplots_adjust(left=adj[0], bottom=adj[1], right=adj[2], top=adj[3])
        pdf.savefig(dpi=300)

        plt.figure("modulus")
        ax = plt.gca()
        plt.xlabel("rank in report", fontsize=22, fontweight="bold")
        plt.ylabel("|bias|", fontsize=22, fontweight="bold")
        plt.setp(ax.get_xmajorticklabels(), fontsize=16)
        plt.setp(ax.get_ymajorticklabels(), fontsize=16)
        if plt.gcf().get_label() in legends:
            ax.legend(loc="best")
        plt.subplots_adjust(left=adj[0], bottom=adj[1], right=adj[2], top=adj[3])
        pdf.savefig(dpi=300)


# ========================================================================
def read_spectrum_csv(fname):
    return pd.read_csv(fname)
