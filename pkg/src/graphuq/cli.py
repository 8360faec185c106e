"""Command-line front end: ``graphuq <command> [--config FILE] [flags]``.

Flags override values from the JSON config.  Data artifacts go to files in
the output directory (``--out-dir``, else ``$GRAPHUQ_OUTPUT_DIR``, else the
working directory); progress and errors go to stderr.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import data, pipeline, spectrum, storage
from .errors import ConfigError, DataError, GraphError, NumericalError
from .sampler import ChainStats
from .uq import accuracy, summarize_stats

log = logging.getLogger("graphuq")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
PRIOR_ALIASES = {"approx": "approximated", "proj": "projected"}


def _set(over, dotted, value):
    if value is None:
        return
    *head, last = dotted.split(".")
    node = over
    for key in head:
        node = node.setdefault(key, {})
    node[last] = value


# (flag, dest, config path, type, help)
_FLAGS = {
    "dataset": [
        ("--n", "n", "dataset.n", int, "number of nodes for synthetic data"),
        ("--dim", "dim", "dataset.dim", int, "ambient feature dimension"),
        ("--sigma", "sigma", "dataset.sigma", float, "feature noise level"),
        ("--data-seed", "data_seed", "dataset.seed", int, "seed of the data generator"),
        ("--features", "features", "dataset.features", str, "feature CSV"),
        ("--truth", "truth", "dataset.truth", str, "ground-truth label CSV"),
        ("--labels", "labels", "dataset.labels", str, "observed label CSV (node_index,label)"),
    ],
    "graph": [
        ("--method", "method", "graph.method", str, "self_tuning, rbf, knn or cosine"),
        ("--k", "k", "graph.k", int, "neighbour index K for local scales"),
        ("--tau", "tau", "graph.tau", float, "fixed bandwidth for rbf"),
    ],
    "spectrum": [
        ("--spectrum", "spectrum", "spectrum.path", str, "precomputed spectrum (.npz or .csv)"),
        ("--solver", "solver", "spectrum.solver", str, "dense or lanczos"),
    ],
    "prior": [
        ("--prior", "prior", "prior.mode", str, "full, projected or approximated"),
        ("--ell", "ell", "prior.ell", int, "spectral truncation level"),
        ("--saturation", "saturation", "prior.saturation", float, "tail eigenvalue"),
    ],
    "labels": [
        ("--label-fraction", "label_fraction", "labels.fraction", float,
         "fraction of nodes to label"),
        ("--label-count", "label_count", "labels.count", int, "number of nodes to label"),
        ("--label-flip", "label_flip", "labels.flip", float, "label flip probability"),
        ("--label-seed", "label_seed", "labels.seed", int, "seed for label selection"),
    ],
    "model": [
        ("--model", "model", "model.kind", str, "probit, bls or gl"),
        ("--gamma", "gamma", "model.gamma", float, "observation noise"),
        ("--epsilon", "epsilon", "model.epsilon", float, "Ginzburg-Landau interface width"),
    ],
    "chain": [
        ("--beta", "beta", "chain.beta", float, "pCN step"),
        ("--n-samples", "n_samples", "chain.n_samples", int, "total iterations M"),
        ("--burn-in", "burn_in", "chain.burn_in", int, "discarded iterations"),
        ("--seed", "seed", "chain.seed", int, "chain seed"),
        ("--check-period", "check_period", "chain.check_period", int,
         "iterations between convergence checks"),
        ("--tol", "tol", "chain.tol", float, "convergence tolerance"),
    ],
    "flow": [
        ("--step", "step", "flow.step", float, "gradient-flow step"),
        ("--max-iters", "max_iters", "flow.max_iters", int, "iteration cap"),
        ("--grad-tol", "grad_tol", "flow.grad_tol", float, "stationarity tolerance"),
        ("--init", "init", "flow.init", str, "prior, zero, file or probit-map"),
        ("--init-file", "init_file", "flow.init_file", str, "initial state CSV"),
        ("--flow-seed", "flow_seed", "flow.seed", int, "seed for a prior-draw init"),
    ],
    "sweep": [
        ("--parameter", "parameter", "sweep.parameter", str, "sigma, gamma or label_fraction"),
        ("--trials", "trials", "sweep.trials", int, "trials per grid value"),
        ("--sweep-seed", "sweep_seed", "sweep.seed", int, "base seed for trials"),
    ],
}

_COMMAND_GROUPS = {
    "gen-moons": ["dataset"],
    "graph": ["dataset", "graph"],
    "spectrum": ["dataset", "graph", "spectrum", "prior"],
    "sample": ["dataset", "graph", "spectrum", "prior", "labels", "model", "chain"],
    "map": ["dataset", "graph", "spectrum", "prior", "labels", "model", "flow"],
    "summarize": ["model"],
    "sweep": ["dataset", "graph", "spectrum", "prior", "labels", "model", "chain", "sweep"],
}


def _add_common(p, groups):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out-dir", help="output directory (default $GRAPHUQ_OUTPUT_DIR or .)")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    for group in groups:
        for flag, dest, _, typ, text in _FLAGS[group]:
            p.add_argument(flag, dest=dest, type=typ, help=text)


def build_parser():
    parser = argparse.ArgumentParser(prog="graphuq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gen-moons": "generate a two-moons feature and truth CSV",
        "graph": "build a weight matrix from a feature CSV",
        "spectrum": "eigendecompose the normalized Laplacian",
        "sample": "run pCN and write posterior summaries",
        "map": "MAP estimate by semi-implicit gradient flow",
        "summarize": "summaries from a raw chain file",
        "sweep": "parameter grid x trials, trial-averaged mean variance",
    }
    for name, groups in _COMMAND_GROUPS.items():
        p = sub.add_parser(name, help=helps[name])
        _add_common(p, groups)
        if name == "sample":
            p.add_argument("--tune", action="store_true", default=None,
                           help="adapt beta during burn-in")
            p.add_argument("--save-chain", action="store_true",
                           help="also write the raw chain (chain.bin)")
        if name == "summarize":
            p.add_argument("--chain", required=True, help="raw chain file")
        if name == "sweep":
            p.add_argument("--values", type=float, nargs="+", help="grid values")
            p.add_argument("--models", nargs="+", help="models to run at each value")
    return parser


def overrides_from_args(args):
    over = {}
    for group in _COMMAND_GROUPS[args.command]:
        for _, dest, path, _, _ in _FLAGS[group]:
            value = getattr(args, dest, None)
            if dest == "prior" and value is not None:
                value = PRIOR_ALIASES.get(value, value)
            _set(over, path, value)
    if getattr(args, "features", None) or getattr(args, "labels", None) \
            or getattr(args, "spectrum", None):
        _set(over, "dataset.source", "files")
    _set(over, "chain.tune", getattr(args, "tune", None))
    _set(over, "sweep.values", getattr(args, "values", None))
    _set(over, "sweep.models", getattr(args, "models", None))
    _set(over, "jobs", args.jobs)
    _set(over, "output", args.out_dir)
    return over


def _path(out, name):
    return os.path.join(out, name)


def cmd_gen_moons(cfg, args):
    ds = pipeline.load_dataset(cfg)
    out = pipeline.output_dir(cfg)
    data.save_features_csv(_path(out, "features.csv"), ds.features)
    with open(_path(out, "truth.csv"), "w", newline="\n") as fh:
        fh.writelines(f"{int(t)}\n" for t in ds.truth)
    log.info("wrote %d points to %s", ds.n_nodes, out)


def cmd_graph(cfg, args):
    ds = pipeline.load_dataset(cfg)
    g = pipeline.build_graph(ds.features, cfg["graph"])
    out = pipeline.output_dir(cfg)
    storage.save_weights(_path(out, "weights.csv"), g)
    log.info("graph: %d nodes, connected=%s", g.n_nodes, g.is_connected())


def cmd_spectrum(cfg, args):
    out = pipeline.output_dir(cfg)
    if cfg["dataset"]["source"] == "files" and not cfg["dataset"]["features"]:
        raise ConfigError("spectrum needs --features")
    ds = pipeline.load_dataset(cfg)
    g = pipeline.build_graph(ds.features, cfg["graph"])
    spec = pipeline.build_spectrum(g, cfg)
    if cfg["prior"]["mode"] == "approximated":
        level = cfg["prior"]["saturation"] or spectrum.saturation_level(spec, spec.m)
        spec = spec.with_saturation(level)
    spectrum.save_spectrum(spec, _path(out, "spectrum.npz"))
    log.info("spectrum: %d eigenpairs, lambda_1=%.6g", spec.m, spec.eigenvalues[min(1, spec.m - 1)])


def _write_summary(out, payload, summary, stem="summary"):
    storage.write_json(_path(out, stem + ".json"), payload)
    storage.write_summary_csv(_path(out, stem + ".csv"), summary)


def cmd_sample(cfg, args):
    out = pipeline.output_dir(cfg)
    cfg_chain = dict(cfg["chain"])
    if args.save_chain:
        cfg_chain["store_samples"] = True
    elif "store_samples" not in cfg_chain:
        cfg_chain["store_samples"] = False
    run_cfg = dict(cfg, chain=cfg_chain)
    chain, summary, ds = pipeline.run_sample(run_cfg)
    payload = storage.chain_summary_payload(chain, summary)
    payload["prior"] = cfg["prior"]["mode"]
    payload["gamma"] = cfg["model"]["gamma"]
    if ds.truth is not None:
        payload["accuracy"] = accuracy(summary.hard_labels, ds.truth)
    _write_summary(out, payload, summary)
    if args.save_chain and chain.samples is not None:
        storage.save_chain(_path(out, "chain.bin"), chain.samples, chain.seed)
    log.info("acceptance %.3f, mean posterior variance %.4f",
             chain.acceptance_rate, summary.mean_variance)


def cmd_map(cfg, args):
    out = pipeline.output_dir(cfg)
    result, labels, ds = pipeline.run_map(cfg)
    payload = {
        "model": cfg["model"]["kind"], "init": cfg["flow"]["init"],
        "objective": result.objective, "iterations": result.iterations,
        "converged": result.converged, "residual": result.residual, "step": result.step,
    }
    if ds.truth is not None:
        payload["accuracy"] = accuracy(np.where(result.u >= 0, 1, -1), ds.truth)
    storage.write_json(_path(out, "map.json"), payload)
    np.savetxt(_path(out, "map.csv"), result.u, delimiter=",", fmt="%.17g")
    log.info("MAP objective %.8g after %d iterations (converged=%s)",
             result.objective, result.iterations, result.converged)


def cmd_summarize(cfg, args):
    out = pipeline.output_dir(cfg)
    samples, seed = storage.load_chain(args.chain)
    summary = summarize_stats(ChainStats.from_samples(samples), cfg["model"]["kind"])
    payload = {"model": cfg["model"]["kind"], "seed": seed, "n_kept": samples.shape[0],
               "n_nodes": samples.shape[1], "mean_variance": summary.mean_variance,
               "scores": summary.scores, "node_variance": summary.node_variance}
    _write_summary(out, payload, summary)


def cmd_sweep(cfg, args):
    out = pipeline.output_dir(cfg)
    rows, table = pipeline.sweep(cfg)
    pipeline.write_sweep(out, cfg, rows, table)
    for r in table:
        log.info("%s=%g %s: mean variance %.4f", cfg["sweep"]["parameter"], r["value"],
                 r["model"], r["mean_variance"])


COMMANDS = {
    "gen-moons": cmd_gen_moons, "graph": cmd_graph, "spectrum": cmd_spectrum,
    "sample": cmd_sample, "map": cmd_map, "summarize": cmd_summarize, "sweep": cmd_sweep,
}


def _fail(kind, exc, code):
    print(f"graphuq: {kind} error: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = pipeline.load_config(args.config, overrides_from_args(args))
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (NumericalError, GraphError) as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    except (DataError, OSError) as exc:
        return _fail("io", exc, EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
