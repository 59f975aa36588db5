"""``gsmote`` command line: augment, tune, evaluate, vectorize.

Every command takes ``--config FILE`` (JSON) plus flags; flags win. The fully
resolved configuration, seed included, is written next to the main output
as ``<output>.config.json`` and can be replayed with ``--config``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible parameters.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
import warnings

import numpy as np
from sklearn.preprocessing import MinMaxScaler

from ._random import derive_seed, substream
from .classify import ELMClassifier, GaussianNaiveBayes, classification_report
from .dataset import DataError, Dataset, imbalance_degree, load_csv, split_by_class, stratified_split, write_csv
from .optimize import GENE_NAMES, GsmoteTuner, default_bounds, encode_params
from .oversample import GSMOTE, GsmoteParams, InfeasibleParamsError, StageError, augment_detailed
from .textvec import STOP_WORDS, build_corpus, load_stopwords, read_documents, vectorize

logger = logging.getLogger("gsmote.cli")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3
LABEL_HEADER = "_label"
PATH_KEYS = ("input", "output", "summary", "log", "predictions", "train", "test", "labels",
             "stopwords", "params_file")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_GSMOTE_DEFAULTS = {
    "m": 2, "num": None, "m_per_kernel": None, "k_select": None, "k_neighbors": 5,
    "covariance_type": "full", "knn_over_kernels": False, "volume_uniform": False,
}

DEFAULTS = {
    "augment": {
        "input": None, "output": None, "summary": None, "label_column": None, "seed": None,
        "scale": False, "provenance": False, "threads": 1, "params_file": None,
        **_GSMOTE_DEFAULTS,
    },
    "tune": {
        "input": None, "output": None, "log": None, "label_column": None, "seed": None,
        "scale": False, "threads": 1, "generations": 20, "population": 10,
        "mutation_factor": 0.8, "crossover_prob": 0.9, "m_range": [1, 5], "num_range": None,
        "m_per_kernel_range": [1, 10], "k_select_range": None, "hidden": 64, "ridge": 1e-3,
        "k_neighbors": 5, "test_fraction": 0.25, "validation_fraction": 0.25,
        "fitness_on_test": False, "log_timing": False,
    },
    "evaluate": {
        "predictions": None, "input": None, "train": None, "test": None, "output": None,
        "label_column": None, "seed": None, "scale": False, "classifier": "elm", "hidden": 64,
        "ridge": 1e-3, "test_fraction": 0.25, "compare": False, "percent": False, "beta": 1.0,
        "threads": 1, "params_file": None, **_GSMOTE_DEFAULTS,
    },
    "vectorize": {
        "input": None, "output": None, "format": None, "labels": None, "stopwords": None,
        "no_stopwords": False, "prune_singletons": False,
    },
}

REQUIRED = {"augment": ("input", "output"), "tune": ("input", "output"),
            "evaluate": ("output",), "vectorize": ("input", "output")}


def _add_gsmote_flags(p):
    g = p.add_argument_group("GSMOTE parameters")
    g.add_argument("--m", type=int, help="mixture components")
    g.add_argument("--num", type=int, help="sampling kernels (default: all minority)")
    g.add_argument("--m-per-kernel", type=int, help="candidates per kernel")
    g.add_argument("--k-select", type=int, help="synthetics kept (default: balance classes)")
    g.add_argument("--k-neighbors", type=int)
    g.add_argument("--covariance-type", choices=("full", "diag"))
    g.add_argument("--knn-over-kernels", action="store_true",
                   help="search neighbours among selected kernels only")
    g.add_argument("--volume-uniform", action="store_true",
                   help="draw radii uniformly over the ball's volume")
    g.add_argument("--params-file", help="JSON with a 'params' object, e.g. tune output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gsmote", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, data=True):
        p.add_argument("--config", help="JSON config; flags override its values")
        if data:
            p.add_argument("--label-column", help="name or index (default: last column)")
            p.add_argument("--seed", type=int)
            p.add_argument("--scale", action="store_true", help="min-max scale features first")

    a = sub.add_parser("augment", help="oversample the minority class", argument_default=argparse.SUPPRESS)
    common(a)
    a.add_argument("--input", "-i")
    a.add_argument("--output", "-o")
    a.add_argument("--summary", help="summary JSON (default: <output>.summary.json)")
    a.add_argument("--provenance", action="store_true", help="add kernel_index and logprob columns")
    a.add_argument("--threads", type=int)
    _add_gsmote_flags(a)

    t = sub.add_parser("tune", help="tune GSMOTE parameters by differential evolution",
                       argument_default=argparse.SUPPRESS)
    common(t)
    t.add_argument("--input", "-i")
    t.add_argument("--output", "-o", help="best-params JSON")
    t.add_argument("--log", help="per-generation JSON lines (default: <output>.log.jsonl)")
    t.add_argument("--generations", type=int)
    t.add_argument("--population", type=int)
    t.add_argument("--mutation-factor", type=float)
    t.add_argument("--crossover-prob", type=float)
    for gene in GENE_NAMES:
        t.add_argument(f"--{gene.replace('_', '-')}-range", type=float, nargs=2, metavar=("LO", "HI"))
    t.add_argument("--hidden", type=int)
    t.add_argument("--ridge", type=float)
    t.add_argument("--k-neighbors", type=int)
    t.add_argument("--test-fraction", type=float)
    t.add_argument("--validation-fraction", type=float)
    t.add_argument("--fitness-on-test", action="store_true",
                   help="score candidates on the held-out test split (leaks test data)")
    t.add_argument("--log-timing", action="store_true", help="include wall time in the log file")
    t.add_argument("--threads", type=int)

    e = sub.add_parser("evaluate", help="score a classifier", argument_default=argparse.SUPPRESS)
    common(e)
    e.add_argument("--predictions", help="CSV with columns truth,predicted")
    e.add_argument("--input", "-i", help="dataset to split into train/test")
    e.add_argument("--train")
    e.add_argument("--test")
    e.add_argument("--output", "-o", help="metrics JSON")
    e.add_argument("--classifier", choices=("elm", "gnb"))
    e.add_argument("--hidden", type=int)
    e.add_argument("--ridge", type=float)
    e.add_argument("--test-fraction", type=float)
    e.add_argument("--compare", action="store_true", help="original vs GSMOTE-augmented rows")
    e.add_argument("--percent", action="store_true", help="report metrics on a 0-100 scale")
    e.add_argument("--beta", type=float)
    e.add_argument("--threads", type=int)
    _add_gsmote_flags(e)

    v = sub.add_parser("vectorize", help="bug-report text to TF-IDF CSV", argument_default=argparse.SUPPRESS)
    common(v, data=False)
    v.add_argument("--input", "-i")
    v.add_argument("--output", "-o")
    v.add_argument("--format", choices=("csv", "lines"))
    v.add_argument("--labels", help="labels file (one per line) for --format lines")
    v.add_argument("--stopwords", help="stop-word file, one term per line")
    v.add_argument("--no-stopwords", action="store_true")
    v.add_argument("--prune-singletons", action="store_true")
    return parser


def resolve_config(command: str, namespace: argparse.Namespace) -> dict:
    flags = {k: v for k, v in vars(namespace).items() if k not in ("command", "config", "log_level")}
    cfg = dict(DEFAULTS[command])
    config_path = getattr(namespace, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}") from exc
        if loaded.pop("command", command) != command:
            raise UsageError(f"config {config_path} is for a different command")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    missing = [k for k in REQUIRED[command] if not cfg.get(k)]
    if missing:
        raise UsageError(f"missing required options: {', '.join('--' + k.replace('_', '-') for k in missing)}")
    for key in PATH_KEYS:
        if cfg.get(key):
            cfg[key] = os.path.abspath(cfg[key])
    if "seed" in cfg and cfg["seed"] is None:
        cfg["seed"] = int(np.random.SeedSequence().entropy % 2**63)
    return cfg


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def persist_config(command: str, cfg: dict) -> str:
    path = cfg["output"] + ".config.json"
    _write_json(path, {"command": command, **cfg})
    return path


def _label_column(cfg):
    lc = cfg.get("label_column")
    if isinstance(lc, str) and lc.lstrip("-").isdigit():
        return int(lc)
    return lc


def _load(path, cfg) -> Dataset:
    return load_csv(path, _label_column(cfg))


def _counts(d: Dataset) -> dict:
    return {d.label_names[k]: v for k, v in sorted(d.class_counts().items())}


def _gsmote_params(cfg, n_min, n_maj) -> GsmoteParams:
    vals = {k: cfg.get(k) for k in ("m", "num", "m_per_kernel", "k_select", "k_neighbors")}
    if cfg.get("params_file"):
        try:
            with open(cfg["params_file"], encoding="utf-8") as fh:
                loaded = json.load(fh)["params"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read params from {cfg['params_file']}: {exc}") from exc
        vals.update({k: loaded[k] for k in vals if k in loaded})
    est = GSMOTE(m=vals["m"], num=vals["num"], m_per_kernel=vals["m_per_kernel"],
                 k_select=vals["k_select"], k_neighbors=vals["k_neighbors"])
    return est.resolve_params(n_min, n_maj)


def _gsmote_options(cfg):
    return {"knn_over_kernels": bool(cfg["knn_over_kernels"]), "volume_uniform": bool(cfg["volume_uniform"]),
            "covariance_type": cfg["covariance_type"], "n_jobs": int(cfg.get("threads") or 1)}


def _augment(data: Dataset, params: GsmoteParams, seed: int, cfg, scale: bool):
    """GSMOTE in (optionally) min-max scaled space; synthetics mapped back."""
    scaler = MinMaxScaler().fit(data.X) if scale else None
    work = data.with_features(scaler.transform(data.X)) if scaler else data
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        aug, result = augment_detailed(work, params, seed, **_gsmote_options(cfg))
    for w in caught:
        logger.warning("%s", w.message)
    if scaler is not None and len(result.synthetic):
        pts = scaler.inverse_transform(result.synthetic.points)
        aug = data.append(pts, split_by_class(data).minority_label, synthetic=True)
    return aug, result, [str(w.message) for w in caught]


def cmd_augment(cfg) -> int:
    data = _load(cfg["input"], cfg)
    split = split_by_class(data)
    params = _gsmote_params(cfg, split.minority.size, split.majority.size)
    aug, result, notes = _augment(data, params, cfg["seed"], cfg, cfg["scale"])
    extra = None
    if cfg["provenance"]:
        n0 = data.size
        kernel_rows = split.minority_indices[result.synthetic.kernel_indices]
        lp = result.synthetic.log_prob if result.synthetic.log_prob is not None else np.empty(0)
        extra = {
            "kernel_index": [""] * n0 + [int(k) for k in kernel_rows],
            "logprob": [""] * n0 + [repr(float(v)) for v in lp],
        }
    write_csv(aug, cfg["output"], synthetic_column=True, extra_columns=extra)
    summary = {
        "input": cfg["input"],
        "output": cfg["output"],
        "seed": cfg["seed"],
        "params": result.params.as_dict(),
        "minority_label": data.label_names[split.minority_label],
        "sizes": {"before": _counts(data), "after": _counts(aug)},
        "imbalance_degree": {"before": round(imbalance_degree(data), 3),
                             "after": round(imbalance_degree(aug), 3)},
        "synthetic": len(result.synthetic),
        "candidates": result.candidates,
        "degenerate": int(result.synthetic.degenerate.sum()),
        "warnings": notes,
    }
    _write_json(cfg["summary"] or cfg["output"] + ".summary.json", summary)
    logger.info("augment: %d synthetic rows, degree %.3f -> %.3f", len(result.synthetic),
                summary["imbalance_degree"]["before"], summary["imbalance_degree"]["after"])
    return EXIT_OK


def cmd_tune(cfg) -> int:
    data = _load(cfg["input"], cfg)
    seed = cfg["seed"]
    if cfg["scale"]:
        data = data.with_features(MinMaxScaler().fit_transform(data.X))
    train, test = stratified_split(data, cfg["test_fraction"], substream(seed, 0))
    split = split_by_class(train)
    lo, hi = default_bounds(split.minority.size, split.majority.size)
    ranges = [cfg[f"{g}_range"] for g in GENE_NAMES]
    lower = [r[0] if r else d for r, d in zip(ranges, lo)]
    upper = [r[1] if r else d for r, d in zip(ranges, hi)]
    x0 = GSMOTE(k_neighbors=cfg["k_neighbors"]).resolve_params(split.minority.size, split.majority.size)
    tuner = GsmoteTuner(
        generations=cfg["generations"], population=cfg["population"],
        mutation_factor=cfg["mutation_factor"], crossover_prob=cfg["crossover_prob"],
        lower_bound=lower, upper_bound=upper, hidden=cfg["hidden"], ridge=cfg["ridge"],
        k_neighbors=cfg["k_neighbors"], validation_fraction=cfg["validation_fraction"],
        x0=x0, random_state=int(derive_seed(substream(seed, 1))), n_jobs=cfg["threads"],
    )
    log_path = cfg["log"] or cfg["output"] + ".log.jsonl"
    log_fh = open(log_path, "w", encoding="utf-8")
    clock = [time.perf_counter()]

    def on_generation(g, best, fitness):
        now = time.perf_counter()
        elapsed, clock[0] = now - clock[0], now
        params = tuner.fitness_.decode(best).as_dict()
        line = {"generation": g, "best": params, "fitness": fitness}
        if cfg["log_timing"]:
            line["wall_time"] = elapsed
        if g == cfg["generations"]:
            line["recommended"] = params
        log_fh.write(json.dumps(line, sort_keys=True) + "\n")
        logger.info("generation=%d fitness=%.6f best=%s wall_time=%.3fs", g, fitness, params, elapsed)

    try:
        fit_kwargs = {"callback": on_generation}
        if cfg["fitness_on_test"]:
            fit_kwargs.update(X_eval=test.X, y_eval=test.y)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            tuner.fit(train.X, train.y, **fit_kwargs)
    finally:
        log_fh.close()
    _write_json(cfg["output"], {
        "params": tuner.best_params_.as_dict(),
        "fitness": tuner.best_fitness_,
        "default_params": x0.as_dict(),
        "default_fitness": tuner.fitness_(encode_params(x0)),
        "fitness_data": "test" if cfg["fitness_on_test"] else "validation",
        "history": tuner.history_,
        "seed": seed,
    })
    return EXIT_OK


def _read_predictions(path):
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: no prediction rows")
    header = [h.strip() for h in rows[0]]
    try:
        ti, pi = header.index("truth"), header.index("predicted")
    except ValueError:
        raise DataError(f"{path}: header must contain 'truth' and 'predicted'") from None
    for n, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: row {n} has {len(r)} cells, header has {len(header)}")
    return [r[ti].strip() for r in rows[1:]], [r[pi].strip() for r in rows[1:]]


def _minority_text(labels):
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    if values.size != 2:
        raise DataError(f"expected exactly 2 classes in truth, found {values.size}")
    order = sorted(range(2), key=lambda i: (counts[i], labels.index(values[i])))
    return str(values[order[0]]), str(values[order[1]])


_SCALED = ("accuracy", "precision", "recall", "weighted_f")


def _percent(report):
    out = dict(report)
    for k in _SCALED:
        out[k] = 100.0 * out[k]
    out["f_measure"] = {c: 100.0 * v for c, v in report["f_measure"].items()}
    return out


def _classifier(cfg, seed):
    if cfg["classifier"] == "gnb":
        return GaussianNaiveBayes()
    return ELMClassifier(cfg["hidden"], cfg["ridge"], substream(seed, 3))


def _train_and_score(train: Dataset, test: Dataset, cfg, seed):
    clf = _classifier(cfg, seed).fit(train.X, train.y)
    pred = clf.predict(test.X)
    split = split_by_class(train)
    names = train.label_names
    return classification_report(
        [names[i] for i in test.y], [names[i] for i in pred],
        names[split.minority_label], names[split.majority_label], cfg["beta"],
    )


def cmd_evaluate(cfg) -> int:
    seed = cfg["seed"]
    out = {"seed": seed}
    if cfg["predictions"]:
        if cfg["compare"]:
            raise UsageError("--compare needs a dataset, not external predictions")
        truth, pred = _read_predictions(cfg["predictions"])
        pos, neg = _minority_text(truth)
        report = classification_report(truth, pred, pos, neg, cfg["beta"])
        out.update(source="predictions", metrics=_percent(report) if cfg["percent"] else report)
        _write_json(cfg["output"], out)
        return EXIT_OK

    if cfg["train"] and cfg["test"]:
        train, test = _load(cfg["train"], cfg), _load(cfg["test"], cfg)
        lookup = {n: i for i, n in enumerate(train.label_names)}
        missing = {test.label_names[i] for i in test.class_ids} - set(lookup)
        if missing:
            raise DataError(f"test labels {sorted(missing)} not present in training data")
        test = Dataset(test.X, np.array([lookup[test.label_names[i]] for i in test.y]),
                       test.feature_names, train.label_names)
    elif cfg["input"]:
        train, test = stratified_split(_load(cfg["input"], cfg), cfg["test_fraction"], substream(seed, 0))
    else:
        raise UsageError("evaluate needs --predictions, --input, or both --train and --test")
    if cfg["scale"]:
        scaler = MinMaxScaler().fit(train.X)
        train = train.with_features(scaler.transform(train.X))
        test = test.with_features(scaler.transform(test.X))

    original = _train_and_score(train, test, cfg, seed)
    fmt = _percent if cfg["percent"] else (lambda r: r)
    out.update(source="classifier", classifier=cfg["classifier"], metrics=fmt(original))
    if cfg["compare"]:
        split = split_by_class(train)
        params = _gsmote_params(cfg, split.minority.size, split.majority.size)
        aug, result, _ = _augment(train, params, int(derive_seed(substream(seed, 4))), cfg, False)
        augmented = _train_and_score(aug, test, cfg, seed)
        rows = []
        for measure in ("accuracy", "precision", "recall", "weighted_f"):
            for name, rep in (("X", original), ("X_aug", augmented)):
                rows.append({"dataset": name, "measure": measure, "value": fmt(rep)[measure]})
        for cls in original["f_measure"]:
            for name, rep in (("X", original), ("X_aug", augmented)):
                rows.append({"dataset": name, "measure": f"f_measure[{cls}]",
                             "value": fmt(rep)["f_measure"][cls]})
        out.update(params=result.params.as_dict(), augmented_metrics=fmt(augmented), rows=rows)
    _write_json(cfg["output"], out)
    return EXIT_OK


def cmd_vectorize(cfg) -> int:
    if not os.path.isfile(cfg["input"]):
        raise DataError(f"no such file: {cfg['input']}")
    try:
        docs, labels = read_documents(cfg["input"], cfg["format"], cfg["labels"])
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if labels is None:
        raise UsageError("--format lines needs --labels so the output can be loaded as a dataset")
    if not docs:
        raise DataError("corpus is empty")
    if cfg["no_stopwords"]:
        stop = frozenset()
    elif cfg["stopwords"]:
        stop = load_stopwords(cfg["stopwords"])
    else:
        stop = STOP_WORDS
    corpus = build_corpus(docs, stop, cfg["prune_singletons"])
    try:
        matrix = vectorize(corpus)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    with open(cfg["output"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(corpus.vocabulary) + [LABEL_HEADER])
        for row, label in zip(matrix, labels):
            w.writerow([repr(float(v)) for v in row] + [label])
    logger.info("vectorize: %d documents x %d terms", *matrix.shape)
    return EXIT_OK


COMMANDS = {"augment": cmd_augment, "tune": cmd_tune, "evaluate": cmd_evaluate, "vectorize": cmd_vectorize}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr, level=getattr(logging, str(ns.log_level).upper(), logging.INFO),
        format="level=%(levelname)s logger=%(name)s msg=%(message)s", force=True,
    )
    try:
        cfg = resolve_config(ns.command, ns)
        persist_config(ns.command, cfg)
        return COMMANDS[ns.command](cfg)
    except UsageError as exc:
        logger.error("usage: %s", exc)
        return EXIT_USAGE
    except InfeasibleParamsError as exc:
        logger.error("infeasible parameters: %s", exc)
        return EXIT_INFEASIBLE
    except StageError as exc:
        logger.error("stage %s failed: %s", exc.stage, exc)
        return EXIT_DATA
    except (DataError, OSError) as exc:
        logger.error("data error: %s", exc)
        return EXIT_DATA
    except ValueError as exc:
        logger.error("invalid value: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
