"""Declarative experiment configs and the end-to-end pipeline behind the CLI.

A config is a JSON object merged over :data:`DEFAULTS`.  Validation collects
every problem before raising so a broken config is reported in one go.
"""

import copy
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

import numpy as np

from . import data, graph, spectrum, storage
from .errors import ConfigError
from .models import MODEL_KINDS, make_model
from .optimizer import FlowConfig, map_estimate
from .prior import PriorSampler
from .sampler import ChainConfig, pcn
from .spectrum import MODES
from .uq import accuracy, classify, summarize

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GRAPH_METHODS = ("self_tuning", "rbf", "knn", "cosine")
SWEEP_PARAMETERS = ("sigma", "gamma", "label_fraction")
OUTPUT_ENV = "GRAPHUQ_OUTPUT_DIR"

DEFAULTS = {
    "version": SCHEMA_VERSION,
    "dataset": {"source": "two_moons", "n": 2000, "dim": 100, "sigma": 0.06, "seed": 0,
                "separation": 1.0, "features": None, "truth": None, "labels": None},
    "graph": {"method": "self_tuning", "k": 10, "tau": 1.25},
    "spectrum": {"ell": None, "solver": "dense", "path": None},
    "prior": {"mode": "full", "ell": None, "saturation": None},
    "labels": {"fraction": 0.03, "count": None, "per_class": None, "flip": 0.0, "seed": 0},
    "model": {"kind": "probit", "gamma": 0.1, "epsilon": 1.0},
    "chain": {"beta": 0.3, "n_samples": 10_000, "burn_in": None, "seed": 0,
              "check_period": 5000, "tol": 1e-3, "tune": False, "tune_target": 0.5,
              "stop_on_convergence": False},
    "flow": {"step": 0.1, "max_iters": 20_000, "grad_tol": 1e-8, "init": "prior", "seed": 0,
             "probit_gamma": 0.1, "init_file": None},
    "sweep": {"parameter": "sigma", "values": [], "models": ["probit"], "trials": 20,
              "seed": 0},
    "jobs": 1,
    "output": None,
}


def _merge(base, override, unknown, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            unknown.append(f"unknown config key {path + key!r}")
        elif isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, unknown, path + key + ".")
        else:
            out[key] = value
    return out


def validate(cfg):
    """Return a list of human-readable problems (empty when valid)."""
    p = []
    if cfg["version"] != SCHEMA_VERSION:
        p.append(f"version must be {SCHEMA_VERSION}, got {cfg['version']!r}")
    ds = cfg["dataset"]
    if ds["source"] == "two_moons":
        if not isinstance(ds["n"], int) or ds["n"] < 2:
            p.append(f"dataset.n must be an integer >= 2, got {ds['n']!r}")
        if not isinstance(ds["dim"], int) or ds["dim"] < 2:
            p.append(f"dataset.dim must be an integer >= 2, got {ds['dim']!r}")
        if not ds["sigma"] >= 0:
            p.append(f"dataset.sigma must be >= 0, got {ds['sigma']!r}")
    elif ds["source"] == "two_clusters":
        if not isinstance(ds["n"], int) or ds["n"] < 2:
            p.append(f"dataset.n must be an integer >= 2, got {ds['n']!r}")
    elif ds["source"] == "files":
        if not ds["features"] and not cfg["spectrum"]["path"]:
            p.append("dataset.features (or spectrum.path) is required when dataset.source "
                     "is 'files'")
        for key in ("features", "truth", "labels"):
            if ds[key] and not os.path.exists(ds[key]):
                p.append(f"dataset.{key}: file {ds[key]!r} does not exist")
    else:
        p.append(f"dataset.source must be two_moons, two_clusters or files, got {ds['source']!r}")

    g = cfg["graph"]
    if g["method"] not in GRAPH_METHODS:
        p.append(f"graph.method must be one of {GRAPH_METHODS}, got {g['method']!r}")
    if g["method"] in ("self_tuning", "knn") and not (isinstance(g["k"], int) and g["k"] >= 1):
        p.append(f"graph.k must be a positive integer, got {g['k']!r}")
    if g["method"] == "rbf" and not (g["tau"] or 0) > 0:
        p.append(f"graph.tau must be positive, got {g['tau']!r}")

    pr = cfg["prior"]
    if pr["mode"] not in MODES:
        p.append(f"prior.mode must be one of {MODES}, got {pr['mode']!r}")
    if pr["mode"] == "full" and pr["ell"] is not None:
        p.append("prior.ell must be unset for the full prior")
    if pr["mode"] != "full" and not (isinstance(pr["ell"], int) and pr["ell"] >= 2):
        p.append(f"prior.ell must be an integer >= 2 for {pr['mode']!r}, got {pr['ell']!r}")
    if pr["saturation"] is not None and not pr["saturation"] > 0:
        p.append(f"prior.saturation must be positive, got {pr['saturation']!r}")
    sp = cfg["spectrum"]
    if sp["solver"] not in ("dense", "lanczos"):
        p.append(f"spectrum.solver must be 'dense' or 'lanczos', got {sp['solver']!r}")
    if sp["path"] and not os.path.exists(sp["path"]):
        p.append(f"spectrum.path: file {sp['path']!r} does not exist")
    if sp["ell"] is not None:
        if pr["mode"] == "full":
            p.append("spectrum.ell must be unset for the full prior")
        elif isinstance(pr["ell"], int) and sp["ell"] < pr["ell"]:
            p.append("spectrum.ell must be >= prior.ell")

    lab = cfg["labels"]
    chosen = [k for k in ("fraction", "count", "per_class") if lab[k] is not None]
    if ds["source"] != "files" or not ds["labels"]:
        if len(chosen) != 1:
            p.append(f"labels: give exactly one of fraction, count, per_class (got {chosen})")
    if lab["fraction"] is not None and not 0 < lab["fraction"] <= 1:
        p.append(f"labels.fraction must lie in (0, 1], got {lab['fraction']!r}")
    if not 0 <= lab["flip"] <= 1:
        p.append(f"labels.flip must lie in [0, 1], got {lab['flip']!r}")

    m = cfg["model"]
    if m["kind"] not in MODEL_KINDS:
        p.append(f"model.kind must be one of {MODEL_KINDS}, got {m['kind']!r}")
    if not (m["gamma"] or 0) > 0:
        p.append(f"model.gamma must be positive, got {m['gamma']!r}")
    if m["kind"] == "gl" and not (m["epsilon"] or 0) > 0:
        p.append(f"model.epsilon must be positive for gl, got {m['epsilon']!r}")

    try:
        chain_config(cfg)
    except ConfigError as exc:
        p.extend("chain." + x for x in exc.problems)
    except TypeError as exc:
        p.append(f"chain: {exc}")
    try:
        flow_config(cfg)
    except ConfigError as exc:
        p.extend("flow." + x for x in exc.problems)
    except TypeError as exc:
        p.append(f"flow: {exc}")

    sw = cfg["sweep"]
    if sw["parameter"] not in SWEEP_PARAMETERS:
        p.append(f"sweep.parameter must be one of {SWEEP_PARAMETERS}, got {sw['parameter']!r}")
    if not isinstance(sw["trials"], int) or sw["trials"] < 1:
        p.append(f"sweep.trials must be a positive integer, got {sw['trials']!r}")
    for kind in sw["models"]:
        if kind not in MODEL_KINDS:
            p.append(f"sweep.models entry {kind!r} is not one of {MODEL_KINDS}")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        p.append(f"jobs must be a positive integer, got {cfg['jobs']!r}")
    return p


LABEL_SELECTORS = ("fraction", "count", "per_class")


def _apply(cfg, override, unknown):
    cfg = _merge(cfg, override, unknown)
    # Naming one label-set selector switches the others off.
    given = [k for k in LABEL_SELECTORS if k in override.get("labels", {})]
    if given:
        for k in LABEL_SELECTORS:
            if k not in given:
                cfg["labels"][k] = None
    return cfg


def load_config(path=None, overrides=None):
    """Merge a JSON file and flag overrides over the defaults, then validate."""
    cfg = copy.deepcopy(DEFAULTS)
    unknown = []
    if path:
        try:
            raw = storage.read_json(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        cfg = _apply(cfg, raw, unknown)
    if overrides:
        cfg = _apply(cfg, overrides, unknown)
    try:
        problems = unknown + validate(cfg)
    except TypeError as exc:
        problems = unknown + [f"wrongly typed config value: {exc}"]
    if problems:
        raise ConfigError(f"{len(problems)} config problem(s):\n  " + "\n  ".join(problems),
                          problems)
    return cfg


def chain_config(cfg, **changes):
    names = {f.name for f in fields(ChainConfig)}
    kw = {k: v for k, v in cfg["chain"].items() if k in names}
    kw.update(changes)
    return ChainConfig(**kw)


def flow_config(cfg, **changes):
    names = {f.name for f in fields(FlowConfig)}
    kw = {k: v for k, v in cfg["flow"].items() if k in names}
    kw.update(changes)
    return FlowConfig(**kw)


def output_dir(cfg):
    out = cfg["output"] or os.environ.get(OUTPUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def load_dataset(cfg, sigma=None, seed=None):
    ds = cfg["dataset"]
    seed = ds["seed"] if seed is None else seed
    if ds["source"] == "two_moons":
        return data.two_moons(ds["n"], ds["dim"], ds["sigma"] if sigma is None else sigma, seed)
    if ds["source"] == "two_clusters":
        return data.two_clusters(ds["n"], ds["dim"], ds["separation"], seed)
    X = data.load_features_csv(ds["features"]) if ds["features"] else None
    truth = data.load_truth_csv(ds["truth"]) if ds["truth"] else None
    observed = None
    if ds["labels"]:
        n = X.shape[0] if X is not None else None
        observed = data.load_labels_csv(ds["labels"], cfg["model"]["gamma"], n)
    return data.LabeledDataset(X, truth, observed)


def build_graph(features, gcfg):
    method = gcfg["method"]
    if method == "self_tuning":
        return graph.self_tuning_weights(features, gcfg["k"])
    if method == "rbf":
        return graph.rbf_weights(features, gcfg["tau"])
    if method == "knn":
        return graph.knn_weights(features, gcfg["k"])
    return graph.cosine_weights(features)


def spectrum_level(cfg):
    """Number of eigenpairs the configured prior needs (None means all)."""
    if cfg["prior"]["mode"] == "full":
        return None
    return cfg["spectrum"]["ell"] or cfg["prior"]["ell"]


def build_spectrum(g, cfg):
    L = graph.normalized_laplacian(g)
    return spectrum.eigendecompose(L, spectrum_level(cfg), cfg["spectrum"]["solver"])


def make_prior(spec, cfg):
    pr = cfg["prior"]
    return PriorSampler(spec, pr["mode"], pr["ell"], pr["saturation"])


def make_labels(dataset, cfg, gamma=None, fraction=None, seed=None):
    gamma = cfg["model"]["gamma"] if gamma is None else gamma
    if dataset.observed is not None and fraction is None:
        return dataset.observed.with_gamma(gamma)
    if dataset.truth is None:
        raise ConfigError("no observed labels and no ground truth to subsample from")
    lab = cfg["labels"]
    per_class = lab["per_class"]
    if per_class is not None:
        per_class = {int(k): int(v) for k, v in per_class.items()}
    return data.subsample_labels(
        dataset.truth,
        fraction=fraction if fraction is not None else lab["fraction"],
        count=None if fraction is not None else lab["count"],
        per_class=None if fraction is not None else per_class,
        flip=lab["flip"], gamma=gamma, seed=lab["seed"] if seed is None else seed)


def resolve_spectrum(cfg, dataset):
    """Load the configured spectrum file, or build graph and spectrum from features."""
    if cfg["spectrum"]["path"]:
        return spectrum.load_spectrum(cfg["spectrum"]["path"])
    if dataset.features is None:
        raise ConfigError("need dataset features or spectrum.path")
    return build_spectrum(build_graph(dataset.features, cfg["graph"]), cfg)


def run_sample(cfg, spec=None, dataset=None, u0=None):
    """Build everything the config describes and run one pCN chain."""
    dataset = dataset if dataset is not None else load_dataset(cfg)
    if spec is None:
        spec = resolve_spectrum(cfg, dataset)
    labels = make_labels(dataset, cfg)
    model = make_model(cfg["model"]["kind"], labels, cfg["model"]["epsilon"])
    chain = pcn(model, make_prior(spec, cfg), chain_config(cfg), u0)
    return chain, summarize(chain), dataset


def run_map(cfg, spec=None, dataset=None, u0=None):
    """MAP estimate for probit or Ginzburg-Landau; GL may warm-start from probit."""
    dataset = dataset if dataset is not None else load_dataset(cfg)
    if spec is None:
        spec = resolve_spectrum(cfg, dataset)
    if cfg["prior"]["mode"] != "full" and cfg["prior"]["ell"]:
        spec = spec.truncate(cfg["prior"]["ell"])
    labels = make_labels(dataset, cfg)
    model = make_model(cfg["model"]["kind"], labels, cfg["model"]["epsilon"])
    flow = cfg["flow"]
    init = flow["init"]
    fc = flow_config(cfg, init="zero" if init in ("file", "probit-map") else init)
    if u0 is None and init == "file":
        if not flow["init_file"]:
            raise ConfigError("flow.init 'file' needs flow.init_file")
        u0 = np.loadtxt(flow["init_file"], delimiter=",", ndmin=1)
    elif u0 is None and init == "probit-map":
        warm = make_model("probit", labels.with_gamma(flow["probit_gamma"]))
        u0 = map_estimate(warm, spec, flow_config(cfg, init="prior")).u
    result = map_estimate(model, spec, fc, u0)
    return result, labels, dataset


def _trial_seeds(seed, trial):
    s = np.random.SeedSequence([seed, trial]).generate_state(3, dtype=np.uint32)
    return [int(x) for x in s]


def _sweep_trial(cfg, trial):
    sw = cfg["sweep"]
    param, values = sw["parameter"], list(sw["values"])
    data_seed, label_seed, chain_seed = _trial_seeds(sw["seed"], trial)
    rows = []
    data_values = values if param == "sigma" else [None]
    for dv in data_values:
        dataset = load_dataset(cfg, sigma=dv, seed=data_seed)
        spec = build_spectrum(build_graph(dataset.features, cfg["graph"]), cfg)
        prior = make_prior(spec, cfg)
        label_values = values if param == "label_fraction" else [None]
        for lv in label_values:
            gamma_values = values if param == "gamma" else [None]
            for gv in gamma_values:
                labels = make_labels(dataset, cfg, gamma=gv, fraction=lv, seed=label_seed)
                value = dv if dv is not None else lv if lv is not None else gv
                for kind in sw["models"]:
                    model = make_model(kind, labels, cfg["model"]["epsilon"])
                    chain = pcn(model, prior, chain_config(cfg, seed=chain_seed,
                                                           store_samples=False))
                    summary = summarize(chain)
                    acc = (accuracy(classify(summary.scores), dataset.truth)
                           if dataset.truth is not None else float("nan"))
                    rows.append({"value": value, "model": kind, "trial": trial,
                                 "mean_variance": summary.mean_variance,
                                 "acceptance_rate": chain.acceptance_rate,
                                 "accuracy": acc})
    log.info("sweep trial %d done", trial)
    return rows


def _sweep_job(args):
    return _sweep_trial(*args)


def sweep(cfg, jobs=None):
    """Run the parameter grid over all trials.

    Returns ``(rows, table)``: one row per (value, model, trial), and the
    trial-averaged mean variance per (value, model).  Ordering is fixed by
    grid position and trial index, independent of completion order.
    """
    sw = cfg["sweep"]
    if not sw["values"]:
        raise ConfigError("sweep.values must be a nonempty list")
    jobs = jobs or cfg["jobs"]
    args = [(cfg, t) for t in range(sw["trials"])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_trial = list(pool.map(_sweep_job, args))
    else:
        per_trial = [_sweep_job(a) for a in args]
    order = {v: i for i, v in enumerate(sw["values"])}
    models = {k: i for i, k in enumerate(sw["models"])}
    rows = sorted((r for rs in per_trial for r in rs),
                  key=lambda r: (order[r["value"]], models[r["model"]], r["trial"]))
    table = []
    for v in sw["values"]:
        for kind in sw["models"]:
            mv = [r["mean_variance"] for r in rows if r["value"] == v and r["model"] == kind]
            table.append({"value": v, "model": kind, "mean_variance": float(np.mean(mv)),
                          "trials": len(mv)})
    return rows, table


def write_sweep(out, cfg, rows, table):
    param = cfg["sweep"]["parameter"]
    trials_path = os.path.join(out, "sweep_trials.csv")
    mean_path = os.path.join(out, "sweep_mean.csv")
    with open(trials_path, "w", newline="\n") as fh:
        fh.write(f"{param},model,trial,mean_variance\n")
        for r in rows:
            fh.write(f"{float(r['value'])!r},{r['model']},{r['trial']},{float(r['mean_variance'])!r}\n")
    with open(mean_path, "w", newline="\n") as fh:
        fh.write(f"{param},model,mean_variance\n")
        for r in table:
            fh.write(f"{float(r['value'])!r},{r['model']},{float(r['mean_variance'])!r}\n")
    return trials_path, mean_path
