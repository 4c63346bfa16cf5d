# ========================================================================
#
# Imports
#
# ========================================================================
import argparse
import os
import sys
import time
from datetime import timedelta

import mlbias.bias as bias
import mlbias.formats as formats
import mlbias.inputs as inputs
import mlbias.lemmas as lemmas
import mlbias.spectrum as spectrum
import mlbias.structure as structure
import mlbias.utilities as utilities
from mlbias.groups import dual_group, make_group
from mlbias.maps import MultiAffine, MultiMapG, MultiMapT


# ========================================================================
#
# Functions
#
# ========================================================================
def _witness_text(witness):
    if witness is None:
        return "none"
    if isinstance(witness, tuple):
        return "(" + ", ".join(str(x) for x in witness) + ")"
    return str(witness)


# ========================================================================
def _emit(text, fname):
    if fname is None:
        sys.stdout.write(text)
    else:
        with open(fname, "w", encoding="utf-8") as f:
            f.write(text)
        print(f"Wrote {fname}")


# ========================================================================
def _print_value(value, params):
    print(value)
    if not value.is_rational():
        prec = params.value("precision", "start_bits")
        print(f"decimal {value.decimal()}")
        enclosure = value.modulus_enclosure(prec)
        print(f"modulus [{float(enclosure.a)}, {float(enclosure.b)}]")


# ========================================================================
def cmd_bias(args, params):
    phi = formats.read_map(args.file)
    params.set("bias", "method", args.method)
    method = params.value("bias", "method")
    budget = params.value("bias", "budget")
    if isinstance(phi, MultiMapG):
        raise utilities.InputError("bias takes torus-valued maps; use the dual map of F")
    if isinstance(phi, MultiAffine) or method == "oracle":
        value = bias.bias_oracle(phi, budget)
    else:
        value = bias.bias(phi, budget, params.value("bias", "jobs"))
    _print_value(value, params)
    return utilities.EXIT_OK


# ========================================================================
def cmd_decompose(args, params):
    phi = formats.read_map(args.file)
    if not isinstance(phi, MultiMapT):
        raise utilities.InputError("decompose takes a torus-valued multilinear map")
    params.set("search", "max_q", args.max_q)
    params.set("search", "max_rank", args.max_rank)
    params.set("search", "strategy", args.strategy)
    max_q = params.value("search", "max_q")
    max_rank = params.value("search", "max_rank")
    budget = params.value("search", "budget")
    jobs = params.value("bias", "jobs")

    if params.value("search", "strategy") == "induction":
        cert = structure.induction_decomposition(phi, max_q, max_rank, budget, jobs)
    else:
        cert = structure.search_decomposition(phi, max_q, max_rank, budget, jobs)
    if cert is None:
        print(f"No certificate of rank ≤ {max_rank} with q ≤ {max_q}")
        return utilities.EXIT_VERIFICATION

    print(f"rank {cert.rank}")
    for term in cert.terms:
        print(f"term q={term.q} I={utilities.format_subset(term.I)}")
    print(f"bias ≥ {cert.bias_bound()}")
    if args.emit is not None:
        formats.write_certificate(args.emit, cert)
        print(f"Wrote {args.emit}")
    return utilities.EXIT_OK


# ========================================================================
def cmd_verify(args, params):
    phi = formats.read_map(args.map)
    cert = formats.read_certificate(args.cert, domains=phi.domains)
    result = structure.verify_certificate(phi, cert, params.value("search", "budget"))
    if not result:
        print(f"witness {_witness_text(result.witness)}")
        return utilities.EXIT_VERIFICATION
    print(f"verified rank {cert.rank}")
    return utilities.EXIT_OK


# ========================================================================
def cmd_extend(args, params):
    if args.mode == "rank1":
        cert = formats.read_certificate(args.file)
        if cert.rank != 1:
            raise utilities.InputError("rank-one extension takes a certificate with one term")
        if args.group is None:
            raise utilities.InputError("--group gives the ambient group A of the first axis")
        term = cert.terms[0]
        _, lifted = structure.extend_rank_one(
            term.to_map(), term, make_group(args.group), args.p, args.q
        )
        extended = structure.RankCertificate([lifted], lifted.domains)
        _emit(formats.emit_mlcert(extended), args.out)
        return utilities.EXIT_OK

    phi = formats.read_map(args.file)
    if not isinstance(phi, MultiMapG):
        raise utilities.InputError("extension takes a map into Z/q")
    if args.mode == "domain":
        if args.group is None:
            raise utilities.InputError("--group gives the ambient group A of the first axis")
        psi = structure.extend_domain(phi, make_group(args.group), args.p, args.q)
    else:
        psi = structure.extend_range(phi, args.p, args.q)
    _emit(formats.emit_mlmap(formats.MlmapDocument.from_map(psi)), args.out)
    return utilities.EXIT_OK


# ========================================================================
def cmd_crush(args, params):
    F = formats.read_map(args.map)
    if not isinstance(F, MultiMapG):
        raise utilities.InputError("crush takes a group-valued map F")
    budget = params.value("search", "budget")
    dual_domains = list(F.domains) + [dual_group(F.codomain)]
    cert = formats.read_certificate(args.cert, domains=dual_domains)
    d = structure.crush_decomposition(F, cert, budget)
    result = structure.verify_crush(F, d, budget)
    if not result:
        print(f"witness {_witness_text(result.witness)}")
        return utilities.EXIT_VERIFICATION
    for I, piece in sorted(d.pieces.items()):
        print(
            f"I={utilities.format_subset(I)} |C|={piece.size} "
            f"C={list(piece.g.codomain.factors)}"
        )
    print("verified")
    return utilities.EXIT_OK


# ========================================================================
def cmd_spectrum(args, params):
    params.set("spectrum", "k", args.k)
    params.set("spectrum", "max_order", args.max_order)
    params.set("spectrum", "degree", args.degree)
    k = params.value("spectrum", "k")
    max_order = params.value("spectrum", "max_order")
    degree = params.value("spectrum", "degree")
    budget = params.value("spectrum", "budget")
    jobs = params.value("spectrum", "jobs")

    if degree is None:
        report = spectrum.enumerate_bias_set(k, max_order, budget, jobs)
    else:
        report = spectrum.enumerate_bias_set_affine(k, degree, max_order, budget, jobs)
    spectrum.write_report(report, args.out, csv=args.csv, witness_dir=args.witness_dir)
    print(f"{len(report)} values from {report.instances} maps written to {args.out}")

    if args.gaps:
        print(spectrum.gap_table(report).to_string(index=False))
    if args.plot is not None:
        if args.csv is None:
            raise utilities.InputError("--plot needs --csv")
        df = utilities.read_spectrum_csv(args.csv)
        utilities.plot_spectrum(df, idx=0, name=f"k={k}")
        utilities.save_spectrum_plots(args.plot)
    return utilities.EXIT_OK


# ========================================================================
def cmd_lemmas(args, params):
    for name in ["trials", "affine_trials", "extension_trials", "seed", "max_order", "max_k"]:
        params.set("lemmas", name, getattr(args, name))
    lp = params["lemmas"]
    df, summary = lemmas.run_lemma_battery(
        trials=lp["trials"].value,
        affine_trials=lp["affine_trials"].value,
        extension_trials=lp["extension_trials"].value,
        seed=lp["seed"].value,
        max_order=lp["max_order"].value,
        max_k=lp["max_k"].value,
        jobs=lp["jobs"].value,
    )
    for row in summary.itertuples():
        print(f"{row.check}: {row.passed}/{row.total}")
    if args.log is not None:
        df.to_csv(args.log, index=False)

    failed = df[~df.holds]
    for row in failed.itertuples():
        print(f"FAILED {row.check} trial {row.trial} on {row.groups}: {row.lhs} vs {row.rhs}")
    return utilities.EXIT_OK if failed.empty else utilities.EXIT_VERIFICATION


# ========================================================================
def cmd_gauss(args, params):
    p = args.p
    G = spectrum.gauss_sum(p)
    value = spectrum.gauss_bias_value(p)
    print(f"G({p}) = {G}  ≈ {bias.BiasValue(G).decimal()}")
    print(f"G({p})^2 = {G * G}")
    print(f"p^-2 conj(G({p})) = {value}  ≈ {value.decimal()}")
    enclosure = value.modulus_enclosure(params.value("precision", "start_bits"))
    print(f"modulus [{float(enclosure.a)}, {float(enclosure.b)}]")
    return utilities.EXIT_OK


# ========================================================================
def cmd_config(args, params):
    if args.help_keys:
        params.print_help()
    else:
        params.write_toml()
    return utilities.EXIT_OK


# ========================================================================
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Input TOML file", type=str, default=None)
    common.add_argument("--jobs", help="Number of processes", type=int, default=None)

    parser = argparse.ArgumentParser(
        prog="mlbias", description="Exact biases of multilinear maps of finite abelian groups"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bias", parents=[common], help="Exact bias of a map")
    p.add_argument("file", type=str)
    p.add_argument("--method", choices=["kernel", "oracle"], default=None)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("decompose", parents=[common], help="Search a rank certificate")
    p.add_argument("file", type=str)
    p.add_argument("--max-q", dest="max_q", type=int, default=None)
    p.add_argument("--max-rank", dest="max_rank", type=int, default=None)
    p.add_argument("--strategy", choices=["search", "induction"], default=None)
    p.add_argument("--emit", help="Certificate file to write", type=str, default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", parents=[common], help="Verify a certificate")
    p.add_argument("map", type=str)
    p.add_argument("cert", type=str)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("extend", parents=[common], help="Extend a map from pA or into Z/pq")
    p.add_argument("file", type=str)
    p.add_argument("--mode", choices=["domain", "range", "rank1"], required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--group", help="Cyclic orders of the ambient group A", type=int, nargs="+")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("crush", parents=[common], help="Crush decomposition of F")
    p.add_argument("map", type=str)
    p.add_argument("cert", type=str)
    p.set_defaults(func=cmd_crush)

    p = sub.add_parser("spectrum", parents=[common], help="Enumerate a bias set")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-order", dest="max_order", type=int, default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--csv", type=str, default=None)
    p.add_argument("--witness-dir", dest="witness_dir", type=str, default=None)
    p.add_argument("--plot", help="PDF of the values", type=str, default=None)
    p.add_argument("--gaps", action="store_true", help="Print the gap table")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("lemmas", parents=[common], help="Run the seeded property battery")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--affine-trials", dest="affine_trials", type=int, default=None)
    p.add_argument("--extension-trials", dest="extension_trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-order", dest="max_order", type=int, default=None)
    p.add_argument("--max-k", dest="max_k", type=int, default=None)
    p.add_argument("--log", help="CSV log of every check", type=str, default=None)
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("gauss", parents=[common], help="Gauss sum and the bias of its map")
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("config", parents=[common], help="Print the active configuration")
    p.add_argument("--help-keys", dest="help_keys", action="store_true", help="Defaults with help")
    p.set_defaults(func=cmd_config)

    return parser


# ========================================================================
def run_command(argv):
    """Run one subcommand and return its exit code

    :param argv: arguments without the program name
    :type argv: list
    :returns: 0 success, 1 verification failure, 2 input error, 3 budget exceeded
    :rtype: int
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return utilities.EXIT_OK if not err.code else utilities.EXIT_INPUT

    try:
        params = inputs.Input()
        if args.config is not None:
            params.from_toml(args.config)
        for section in ["bias", "spectrum", "lemmas"]:
            params.set(section, "jobs", args.jobs)
        return args.func(args, params)
    except utilities.VerificationError as err:
        print(f"verification failed: {err}")
        print(f"witness {_witness_text(err.witness)}")
        return err.exit_code
    except utilities.MLBiasError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return utilities.EXIT_INPUT


# ========================================================================
def main():
    start = time.time()
    code = run_command(sys.argv[1:])
    end = time.time() - start
    if os.environ.get("MLBIAS_TIMER"):
        print(f"Elapsed time {timedelta(seconds=end)} (or {end} seconds)")
    return code
