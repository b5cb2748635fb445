"""Simulated-oracle active-learning experiments.

Each run splits the data with its own seed (``master_seed + run``), picks
logistic-regression hyperparameters once by grid search on the initial
labeled set, then repeats for ``iterations`` rounds: score the unlabeled pool,
select a batch, reveal the withheld labels, retrain from scratch and evaluate
on the fixed test set.
"""
from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, acquisition, classifier, fair_clustering, metrics
from .data import DEFAULT_MISSING, Dataset, PoolState, SplitSpec, load_csv, preprocess, split

logger = logging.getLogger(__name__)

STRATEGIES = ("falcur", "entropy_baseline", "random_baseline")

RECORD_COLUMNS = (
    "run", "iteration", "n_labeled", "n_unlabeled", "n_test",
    *metrics.METRIC_NAMES, *metrics.SIGNED_NAMES,
    "fallback", "exhausted", "undefined", "selection_digest",
)
SUMMARY_METRICS = ("n_labeled", *metrics.METRIC_NAMES)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    schema: dict
    positive_label: str
    protected_value: str
    k: int
    missing_tokens: tuple[str, ...] = tuple(sorted(DEFAULT_MISSING))
    include_sensitive: bool = False
    train_frac: float = 0.10
    test_frac: float = 0.20
    unlabeled_frac: float = 0.70
    strategy: str = "falcur"
    beta: float = 0.6
    batch_size: int = 180
    pre_filter: int | None = None
    literal_weights: bool = False
    fair_lambda: float = 1e8
    cluster_max_iters: int = 100
    cluster_tol: float = 1e-6
    cluster_n_init: int = 1
    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    max_iter_grid: tuple[int, ...] = (100, 500, 1000)
    cv_folds: int = 5
    cv_scoring: str = "accuracy"
    learning_rate: float = 0.1
    grad_tol: float = 1e-6
    research_per_iteration: bool = False
    warm_start: bool = False
    iterations: int = 10
    runs: int = 10
    master_seed: int = 0
    eodds_variant: str = "literal"
    trace: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.iterations < 1 or self.runs < 1:
            raise ConfigError("iterations and runs must be >= 1")
        if self.eodds_variant not in ("literal", "absolute"):
            raise ConfigError("eodds_variant must be 'literal' or 'absolute'")
        try:
            self.split_spec(0)
            self.acquisition()
            self.clustering(0)
            self.grid(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        missing = [f.name for f in dataclasses.fields(cls)
                   if f.default is dataclasses.MISSING and f.name not in d]
        if missing:
            raise ConfigError(f"missing config keys: {missing}")
        d = dict(d)
        for key in ("missing_tokens", "c_grid", "max_iter_grid"):
            if key in d:
                d[key] = tuple(d[key])
        if base_dir is not None and not Path(d["dataset"]).is_absolute():
            d["dataset"] = str(Path(base_dir) / d["dataset"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("missing_tokens", "c_grid", "max_iter_grid"):
            d[key] = list(d[key])
        return d

    def split_spec(self, run: int) -> SplitSpec:
        return SplitSpec(self.train_frac, self.test_frac, self.unlabeled_frac,
                         seed=self.master_seed + run)

    def acquisition(self) -> acquisition.AcquisitionConfig:
        return acquisition.AcquisitionConfig(beta=self.beta, batch_size=self.batch_size, k=self.k,
                                             pre_filter=self.pre_filter,
                                             literal_weights=self.literal_weights)

    def clustering(self, seed: int) -> fair_clustering.FairKMConfig:
        return fair_clustering.FairKMConfig(k=self.k, lam=self.fair_lambda,
                                            max_iters=self.cluster_max_iters,
                                            tol=self.cluster_tol, seed=seed,
                                            n_init=self.cluster_n_init)

    def grid(self, run: int) -> classifier.GridSpec:
        return classifier.GridSpec(c_grid=self.c_grid, max_iter_grid=self.max_iter_grid,
                                   folds=self.cv_folds, scoring=self.cv_scoring,
                                   seed=self.master_seed + run)

    def train_base(self) -> classifier.TrainConfig:
        return classifier.TrainConfig(learning_rate=self.learning_rate, grad_tol=self.grad_tol)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(raw, base_dir=path.parent)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    raw = load_csv(cfg.dataset, cfg.schema, cfg.missing_tokens)
    return preprocess(raw, cfg.positive_label, cfg.protected_value, cfg.include_sensitive)


@dataclass
class ExperimentResult:
    config: dict
    records: list[dict]
    traces: list[dict] = field(default_factory=list)
    version: str = __version__

    def summary(self) -> list[dict]:
        return summarize(self.records)

    def final(self) -> list[dict]:
        last = {}
        for rec in self.records:
            last[rec["run"]] = rec
        return summarize([dict(r, iteration="final") for r in last.values()])


def summarize(records: list[dict]) -> list[dict]:
    """Mean and population std across runs for each iteration; undefined values skipped."""
    by_iter: dict = {}
    for rec in records:
        by_iter.setdefault(rec["iteration"], []).append(rec)
    rows = []
    for it, recs in by_iter.items():
        row = {"iteration": it, "n_runs": len(recs)}
        for name in SUMMARY_METRICS:
            vals = [r[name] for r in recs if r[name] is not None]
            row[f"{name}_mean"] = float(np.mean(vals)) if vals else None
            row[f"{name}_std"] = float(np.std(vals)) if vals else None
        rows.append(row)
    return rows


class _MajorityModel:
    def __init__(self, label: int):
        self.label = label


def _train(X, y, cfg: classifier.TrainConfig, init=None):
    if len(np.unique(y)) < 2:
        return _MajorityModel(int(y[0]) if len(y) else 0)
    return classifier.fit(X, y, cfg, init=init if isinstance(init, classifier.LogisticModel) else None)


def _proba(model, X):
    if isinstance(model, _MajorityModel):
        p = 1.0 - classifier.PROBA_CLIP if model.label == 1 else classifier.PROBA_CLIP
        return np.full(X.shape[0], p)
    return classifier.predict_proba(model, X)


def _search(cfg: ExperimentConfig, X, y, run: int) -> classifier.TrainConfig:
    try:
        return classifier.grid_search(X, y, cfg.grid(run), cfg.train_base())
    except ValueError as exc:
        logger.warning("run %d: grid search skipped (%s)", run, exc)
        return dataclasses.replace(cfg.train_base(), c=1.0, max_iter=max(cfg.max_iter_grid))


def _dump_clusters(dump_dir, run, t, step: acquisition.FalcurStep):
    out = Path(dump_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = step.clusters
    rank_of = {c: r for r, c in enumerate(model.ranking)}
    with open(out / f"run{run}_iter{t}_assign.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cluster", "cluster_rank", "cluster_fairness"])
        for g, c in zip(step.clustered, model.assignment):
            w.writerow([int(g), int(c), rank_of[int(c)], repr(float(model.per_cluster_fairness[c]))])
    with open(out / f"run{run}_iter{t}_centroids.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "size", *[f"x{j}" for j in range(model.centroids.shape[1])]])
        for c, row in enumerate(model.centroids):
            w.writerow([c, int(model.sizes[c]), *map(repr, row.tolist())])


def run_single(cfg: ExperimentConfig, ds: Dataset, run: int,
               dump_dir=None) -> tuple[list[dict], list[dict]]:
    """One seeded repetition; returns (records, trace lines)."""
    pool: PoolState = split(ds, cfg.split_spec(run))
    test = pool.test
    acq = cfg.acquisition()
    rng = np.random.default_rng(cfg.master_seed + run)
    train_cfg = _search(cfg, ds.X[pool.labeled], ds.y[pool.labeled], run)
    model = _train(ds.X[pool.labeled], ds.y[pool.labeled], train_cfg)
    records, traces = [], []

    for t in range(1, cfg.iterations + 1):
        U = pool.unlabeled
        if len(U) == 0:
            if records:
                records[-1]["exhausted"] = 1
            break
        b = min(acq.batch_size, len(U))
        proba = _proba(model, ds.X[U])
        if cfg.strategy == "falcur":
            km = cfg.clustering(int(np.random.SeedSequence([cfg.master_seed + run, t])
                                    .generate_state(1)[0]))
            step = acquisition.falcur_select(ds.X[U], proba, ds.groups[U], U, acq, km)
            selection = step.selection
            if dump_dir is not None:
                _dump_clusters(dump_dir, run, t, step)
        elif cfg.strategy == "entropy_baseline":
            selection = acquisition.BatchSelection(
                tuple(int(U[i]) for i in acquisition.entropy_baseline(proba, b)))
        else:
            selection = acquisition.BatchSelection(
                tuple(int(i) for i in rng.choice(U, size=b, replace=False)))
        chosen = np.array(selection.chosen, dtype=np.int64)

        # the simulated oracle is ds.y itself: labels enter training only via pool.labeled
        pool.acquire(chosen)
        assert not np.isin(chosen, test).any()

        X_L, y_L = ds.X[pool.labeled], ds.y[pool.labeled]
        if cfg.research_per_iteration:
            train_cfg = _search(cfg, X_L, y_L, run)
        model = _train(X_L, y_L, train_cfg, init=model if cfg.warm_start else None)
        y_hat = (_proba(model, ds.X[test]) >= 0.5).astype(np.int64)
        values, undefined = metrics.evaluate(ds.y[test], y_hat, ds.s[test], cfg.eodds_variant)
        records.append({
            "run": run, "iteration": t,
            "n_labeled": len(pool.labeled), "n_unlabeled": len(pool.unlabeled),
            "n_test": len(test), **values,
            "fallback": int(isinstance(model, _MajorityModel)),
            "exhausted": int(selection.exhausted
                             or (len(pool.unlabeled) == 0 and t < cfg.iterations)),
            "undefined": ";".join(undefined),
            "selection_digest": selection.digest(),
        })
        if cfg.trace:
            for pick in selection.trace or [acquisition.Pick(0, 0, -1, i) for i in selection.chosen]:
                traces.append({"run": run, "iteration": t, **dataclasses.asdict(pick)})
        if selection.exhausted:
            break
    return records, traces


def _threads() -> int:
    n = int(os.environ.get("FALCUR_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def run_experiment(cfg: ExperimentConfig, ds: Dataset | None = None,
                   dump_dir=None) -> ExperimentResult:
    """All runs of one config; results are merged in run order."""
    if ds is None:
        ds = load_dataset(cfg)
    workers = min(_threads(), cfg.runs)
    runs = range(cfg.runs)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(run_single, [cfg] * cfg.runs, [ds] * cfg.runs, runs,
                               [dump_dir] * cfg.runs))
    else:
        outs = [run_single(cfg, ds, r, dump_dir) for r in runs]
    records = [rec for recs, _ in outs for rec in recs]
    traces = [tr for _, trs in outs for tr in trs]
    return ExperimentResult(config=cfg.to_dict(), records=records, traces=traces)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def write_results(res: ExperimentResult, out_dir) -> list[Path]:
    """Write records.csv, summary.csv, final.csv, config.echo and, when traced, trace.jsonl."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "records.csv", out / "summary.csv", out / "final.csv", out / "config.echo"]
    _write_csv(paths[0], RECORD_COLUMNS, res.records)
    summary_cols = ["iteration", "n_runs"] + [f"{m}_{s}" for m in SUMMARY_METRICS
                                              for s in ("mean", "std")]
    _write_csv(paths[1], summary_cols, res.summary())
    _write_csv(paths[2], summary_cols, res.final())
    echo = {"version": res.version, "config": res.config}
    paths[3].write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if res.traces:
        trace_path = out / "trace.jsonl"
        with open(trace_path, "w", encoding="utf-8") as fh:
            for line in res.traces:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
        paths.append(trace_path)
    return paths


SWEEPABLE = {"beta": float, "k": int, "batch_size": int, "fair_lambda": float,
             "pre_filter": int}


def sweep(cfg: ExperimentConfig, param: str, values, out_dir=None,
          ds: Dataset | None = None) -> list[dict]:
    """Re-run the experiment per parameter value; returns final-iteration rows."""
    if param not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {param!r}; choose from {sorted(SWEEPABLE)}")
    if ds is None:
        ds = load_dataset(cfg)
    rows = []
    for raw in values:
        value = SWEEPABLE[param](raw)
        sub = dataclasses.replace(cfg, **{param: value})
        res = run_experiment(sub, ds)
        if out_dir is not None:
            write_results(res, Path(out_dir) / f"{param}={value}")
        final = res.final()[0]
        rows.append({"param": param, "value": value,
                     **{k: v for k, v in final.items() if k != "iteration"}})
    if out_dir is not None:
        cols = list(rows[0])
        _write_csv(Path(out_dir) / "sweep.csv", cols, rows)
    return rows
