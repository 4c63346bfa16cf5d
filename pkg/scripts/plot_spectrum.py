# ========================================================================
#
# Imports
#
# ========================================================================
import os
import sys
import argparse

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../")))
import mlbias.utilities as utilities


# ========================================================================
#
# Main
#
# ========================================================================
if __name__ == "__main__":

    # Parse arguments
    parser = argparse.ArgumentParser(description="Plot spectrum reports")
    parser.add_argument(
        "-f", "--fnames", help="Spectrum CSV files", type=str, required=True, nargs="+"
    )
    parser.add_argument(
        "-l", "--labels", help="Labels for plot", type=str, nargs="+", default=None
    )
    parser.add_argument(
        "-o", "--output", help="Output PDF", type=str, default="spectrum.pdf"
    )
    args = parser.parse_args()

    labels = args.labels if args.labels is not None else args.fnames
    for k, fname in enumerate(args.fnames):
        df = utilities.read_spectrum_csv(fname)
        utilities.plot_spectrum(df, idx=k, name=labels[k])

    utilities.save_spectrum_plots(args.output)
