"""Command-line interface.

File formats (one per role):

  network   edge list ``src,dst`` (0-indexed, optional ``# nodes: n`` and
            ``# directed: true|false`` comments) or dense 0/1 CSV without
            header, selected with ``--network-format``
  vector    single-column CSV with a one-word header
  ensemble  CSV with header ``node_0,...,node_{n-1}``, one replicate per row
  fit       JSON

Every stochastic subcommand requires ``--seed``. Failures exit with status 1
and one line on stderr naming the offending file and line where there is one.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io
from .assoc import dcorr_test, ols_test
from .errors import FormatError, NetdepError
from .graph import (
    erdos_renyi_gnm,
    read_dense,
    read_edge_list,
    write_dense,
    write_edge_list,
)
from .lmm import fit_lmm, marginal_fit_and_whiten
from .nam import fit_nam, nam_beta_test, nam_prewhiten
from .simharness import TableConfig, run_table
from .transmission import (
    DirectProcessConfig,
    EquilibriumProcessConfig,
    simulate_direct,
    simulate_direct_ensemble,
    simulate_equilibrium,
    simulate_equilibrium_ensemble,
)

PROG = "netdep"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _load_network(path, fmt):
    return read_edge_list(path) if fmt == "edges" else read_dense(path)


def _check_length(path, v, n):
    if v.shape[0] != n:
        raise FormatError(path, None, f"has {v.shape[0]} values but the network has {n} nodes")


def _emit_json(payload, out):
    if out is None:
        sys.stdout.write(json.dumps(payload) + "\n")
    else:
        io.write_json(out, payload)


def _cmd_gen_network(args):
    A = erdos_renyi_gnm(args.n, args.ties, args.seed)
    (write_edge_list if args.format == "edges" else write_dense)(args.out, A)


def _cmd_simulate(args):
    A = _load_network(args.network, args.network_format)
    if args.process == "direct":
        if args.kappa is None or args.alpha is None:
            raise NetdepError("--process direct requires --kappa and --alpha")
        cfg = DirectProcessConfig(args.kappa, args.alpha, args.steps, args.noise_sd, args.baseline_sd)
        single, ensemble = simulate_direct, simulate_direct_ensemble
    else:
        if args.rho is None:
            raise NetdepError("--process equilibrium requires --rho")
        cfg = EquilibriumProcessConfig(args.rho, args.noise_sd, args.baseline_sd)
        single, ensemble = simulate_equilibrium, simulate_equilibrium_ensemble
    if args.replicates == 1:
        io.write_vector(args.out, single(A, cfg, args.seed))
    else:
        io.write_ensemble(args.out, ensemble(A, cfg, args.replicates, args.seed))


def _fit_inputs(args):
    A = _load_network(args.network, args.network_format)
    y = io.read_vector(args.y)
    _check_length(args.y, y, A.n)
    x = None
    if args.x is not None:
        x = io.read_vector(args.x)
        _check_length(args.x, x, A.n)
    return A, x, y


def _cmd_fit_lmm(args):
    A, x, y = _fit_inputs(args)
    _emit_json(fit_lmm(y, x, A, args.d).to_json(), args.out)


def _cmd_fit_nam(args):
    A, x, y = _fit_inputs(args)
    fit = fit_nam(y, x, A)
    payload = fit.to_json()
    if x is not None:
        payload["beta_test"] = nam_beta_test(fit, y, x, A).to_json()
    _emit_json(payload, args.out)


def _cmd_whiten(args):
    A = _load_network(args.network, args.network_format)
    v = io.read_vector(args.input)
    _check_length(args.input, v, A.n)
    if args.method == "lmm":
        whitened, fit = marginal_fit_and_whiten(v, A, args.d)
    else:
        whitened, fit = nam_prewhiten(v, A)
    io.write_vector(args.out, whitened)
    if args.fit_out is not None:
        io.write_json(args.fit_out, fit.to_json())


def _cmd_assoc(args):
    x, y = io.read_vector(args.x), io.read_vector(args.y)
    _check_length(args.y, y, x.shape[0])
    if args.measure == "ols":
        result = ols_test(x, y)
    else:
        if args.seed is None:
            raise NetdepError("--measure dcorr is stochastic and requires --seed")
        result = dcorr_test(x, y, args.perms, args.seed)
    _emit_json(result.to_json(), None)


def _cmd_reproduce_table1(args):
    payload = io.read_json(args.config)
    if not isinstance(payload, dict):
        raise FormatError(args.config, 1, "config must be a JSON object")
    if args.seed is not None:
        payload["base_seed"] = args.seed
    if args.workers is not None:
        payload["workers"] = args.workers
    if "base_seed" not in payload:
        raise FormatError(args.config, None, "no base_seed in config and no --seed given")
    try:
        config = TableConfig.from_json(payload)
    except NetdepError as exc:
        raise FormatError(args.config, None, str(exc)) from None
    report = run_table(config)
    report.to_csv(args.out)
    if args.print:
        sys.stdout.write(report.format_table() + "\n")


def _network_args(p):
    p.add_argument("--network", required=True, help="network file")
    p.add_argument(
        "--network-format",
        choices=("edges", "dense"),
        default="edges",
        help="edges: 'src,dst' CSV; dense: 0/1 CSV without header (default: edges)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-network", help="draw a G(n, M) random graph",
                       description="Draw a uniform random simple graph with n nodes and exactly M edges.")
    p.add_argument("--n", type=int, required=True, help="node count")
    p.add_argument("--ties", type=int, required=True, help="edge count M")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--format", choices=("edges", "dense"), default="edges", help="output format (default: edges)")
    p.add_argument("--out", required=True, help="output network file")
    p.set_defaults(func=_cmd_gen_network)

    p = sub.add_parser("simulate", help="simulate a transmission process on a network",
                       description="Write one outcome vector (--replicates 1) or an ensemble CSV.")
    _network_args(p)
    p.add_argument("--process", choices=("direct", "equilibrium"), required=True)
    p.add_argument("--kappa", type=float, help="neighbour weight (direct)")
    p.add_argument("--alpha", type=float, help="self weight (direct)")
    p.add_argument("--steps", type=int, default=1, help="transmission steps (direct, default: 1)")
    p.add_argument("--rho", type=float, help="autocorrelation (equilibrium)")
    p.add_argument("--noise-sd", type=float, default=1.0, help="innovation sd (default: 1)")
    p.add_argument("--baseline-sd", type=float, default=1.0, help="baseline Y0 sd (default: 1)")
    p.add_argument("--replicates", type=int, default=1, help="number of draws (default: 1)")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--out", required=True, help="vector CSV (1 replicate) or ensemble CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-lmm", help="fit the polynomial-covariance mixed model",
                       description="Maximum-likelihood fit of Y = beta X + u + e with Var(Y) = sum_m s_m A^m.")
    _network_args(p)
    p.add_argument("--y", required=True, help="response vector CSV")
    p.add_argument("--x", help="covariate vector CSV (omit for a zero-mean fit)")
    p.add_argument("--d", type=int, default=2, help="polynomial order (default: 2)")
    p.add_argument("--out", help="fit JSON (default: stdout)")
    p.set_defaults(func=_cmd_fit_lmm)

    p = sub.add_parser("fit-nam", help="fit the network autocorrelation model",
                       description="Maximum-likelihood fit of Y = rho W Y + beta X + e; "
                                   "with --x the JSON also carries a test of beta = 0.")
    _network_args(p)
    p.add_argument("--y", required=True, help="response vector CSV")
    p.add_argument("--x", help="covariate vector CSV (omit for the covariate-free model)")
    p.add_argument("--out", help="fit JSON (default: stdout)")
    p.set_defaults(func=_cmd_fit_nam)

    p = sub.add_parser("whiten", help="pre-whiten a vector by a fitted network covariance",
                       description="Fit a zero-mean model to the input and write V_hat^{-1/2} v.")
    _network_args(p)
    p.add_argument("--input", required=True, help="vector CSV")
    p.add_argument("--method", choices=("lmm", "nam"), required=True)
    p.add_argument("--d", type=int, default=2, help="polynomial order for --method lmm (default: 2)")
    p.add_argument("--out", required=True, help="whitened vector CSV")
    p.add_argument("--fit-out", help="also write the fit as JSON")
    p.set_defaults(func=_cmd_whiten)

    p = sub.add_parser("assoc", help="test association between two vectors",
                       description="Prints a JSON test result on stdout.")
    p.add_argument("--x", required=True, help="vector CSV")
    p.add_argument("--y", required=True, help="vector CSV")
    p.add_argument("--measure", choices=("ols", "dcorr"), required=True)
    p.add_argument("--perms", type=int, default=199, help="permutations for dcorr (default: 199)")
    p.add_argument("--seed", type=int, help="RNG seed (required for dcorr)")
    p.set_defaults(func=_cmd_assoc)

    p = sub.add_parser("reproduce-table1", help="run the rejection-rate experiment",
                       description="Run every scenario in a JSON table config and write the report CSV "
                                   "(columns scenario, process, strength, pipeline, measure, rate, mc_se, "
                                   "n_converged).")
    p.add_argument("--config", required=True, help="JSON table config")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--seed", type=int, help="override base_seed from the config")
    p.add_argument("--workers", type=int, help="override worker processes from the config")
    p.add_argument("--print", action="store_true", help="also print the rate table")
    p.set_defaults(func=_cmd_reproduce_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except NetdepError as exc:
        sys.stderr.write(f"{PROG} {args.command}: error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"{PROG} {args.command}: error: {exc.filename}: {exc.strerror}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
