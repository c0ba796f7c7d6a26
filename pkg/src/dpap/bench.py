"""Synthetic benchmark: generate datasets, run every algorithm, aggregate.

Output is deterministic for a given seed and independent of ``jobs``.
Wall-clock times are kept out of the deterministic CSVs and written to
``timings.csv`` instead.
"""
import csv
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bp
from .ap import ApConfig, ap_run
from .icm import IcmConfig, icm_run
from .metrics import BenchRecord, SizeHistogram, delta_loglik, histogram_distance, rand_index
from .priors import dp_prior
from .synth import GenConfig, dataset_similarity, sample_dataset

AP_GRID = (-100.0, -50.0, -35.0, -20.0, -10.0, 0.0)
ALGORITHMS = ("dpap", "icm1", "icmn", "ap")


@dataclass
class BenchConfig:
    count: int = 100
    seed: int = 0
    gen: GenConfig = field(default_factory=GenConfig)
    algos: tuple = ALGORITHMS
    d_grid: tuple = AP_GRID
    damping: float = 0.7
    tol: float = 1e-5
    max_iters: int = 1000
    ap_damping: float = 0.8
    icm_max_passes: int = 100

    def __post_init__(self):
        unknown = set(self.algos) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")


def ap_name(d):
    return f"ap({d:g})"


def dataset_config(cfg, index):
    return replace(cfg.gen, seed=cfg.seed + index)


@dataclass
class DatasetOutcome:
    index: int
    true_clusters: int
    records: list
    sizes: dict  # algorithm -> list of cluster sizes


def run_dataset(cfg, index, dataset=None):
    ds = dataset if dataset is not None else sample_dataset(dataset_config(cfg, index))
    sim = dataset_similarity(ds)
    prior = dp_prior()
    runs = []
    if "dpap" in cfg.algos:
        ecfg = bp.EngineConfig(damping_mu=cfg.damping, tol=cfg.tol, max_iters=cfg.max_iters,
                               prior=prior)
        runs.append(("dpap", lambda: bp.run(sim, ecfg)))
    if "icm1" in cfg.algos:
        runs.append(("icm1", lambda: icm_run(sim, prior, IcmConfig("one", cfg.icm_max_passes))))
    if "icmn" in cfg.algos:
        runs.append(("icmn", lambda: icm_run(sim, prior,
                                             IcmConfig("singletons", cfg.icm_max_passes))))
    if "ap" in cfg.algos:
        for d in cfg.d_grid:
            acfg = ApConfig(d=d, damping=cfg.ap_damping, tol=cfg.tol, max_iters=cfg.max_iters)
            runs.append((ap_name(d), lambda acfg=acfg: ap_run(sim, acfg)))

    records = []
    sizes = {"truth": [int(k) for k in ds.truth.sizes()]}
    for name, job in runs:
        t0 = time.perf_counter()
        res = job()
        elapsed = time.perf_counter() - t0
        records.append(BenchRecord(
            dataset=index, algorithm=name,
            rand_index=rand_index(res.labels, ds.truth) if ds.n >= 2 else 1.0,
            delta_loglik=delta_loglik(res.labels, ds.truth, sim, prior),
            n_clusters=res.n_clusters, converged=res.converged,
            iterations=res.iterations, wall_time=elapsed))
        sizes[name] = [int(k) for k in res.labels.sizes()]
    return DatasetOutcome(index, ds.truth.n_clusters, records, sizes)


@dataclass
class BenchResult:
    outcomes: list

    @property
    def records(self):
        return [r for o in self.outcomes for r in o.records]

    def algorithms(self):
        seen = []
        for r in self.records:
            if r.algorithm not in seen:
                seen.append(r.algorithm)
        return seen

    def histograms(self):
        pooled = {}
        for o in self.outcomes:
            for name, sizes in o.sizes.items():
                pooled.setdefault(name, Counter()).update(sizes)
        return {k: SizeHistogram(dict(sorted(v.items()))) for k, v in pooled.items()}

    def by_algorithm(self, name):
        return [r for r in self.records if r.algorithm == name]

    def summary(self):
        hists = self.histograms()
        rows = []
        for name in self.algorithms():
            recs = self.by_algorithm(name)
            rows.append({
                "algorithm": name,
                "runs": len(recs),
                "mean_rand_index": float(np.mean([r.rand_index for r in recs])),
                "mean_delta_loglik": float(np.mean([r.delta_loglik for r in recs])),
                "mean_clusters": float(np.mean([r.n_clusters for r in recs])),
                "converged_fraction": float(np.mean([r.converged for r in recs])),
                "tv_to_truth": histogram_distance(hists[name], hists["truth"]),
            })
        return rows

    def scatter(self, a="dpap", b="icm1"):
        ra = {r.dataset: r.rand_index for r in self.by_algorithm(a)}
        rb = {r.dataset: r.rand_index for r in self.by_algorithm(b)}
        return [(k, ra[k], rb[k]) for k in sorted(ra) if k in rb]


def _job(args):
    cfg, index, dataset = args
    return run_dataset(cfg, index, dataset)


def run_bench(cfg, jobs=1, datasets=None, progress=None):
    """Run every dataset.  ``datasets`` replaces generation when given."""
    if datasets is None:
        tasks = [(cfg, i, None) for i in range(cfg.count)]
    else:
        tasks = [(cfg, i, ds) for i, ds in enumerate(datasets)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_job, tasks))
    else:
        outcomes = []
        for task in tasks:
            outcomes.append(_job(task))
            if progress is not None:
                progress(task[1])
    return BenchResult(outcomes)


RECORD_COLUMNS = ["dataset", "algorithm", "true_clusters", "rand_index", "delta_loglik",
                  "n_clusters", "converged", "iterations"]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_bench(out_dir, result):
    """Write records, histograms, scatter, summary and timings CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth_k = {o.index: o.true_clusters for o in result.outcomes}
    _write_csv(out / "records.csv", RECORD_COLUMNS, [
        [_cell(v) for v in (r.dataset, r.algorithm, truth_k[r.dataset], r.rand_index,
                            r.delta_loglik, r.n_clusters, r.converged, r.iterations)]
        for r in result.records])
    rows = []
    for name, h in result.histograms().items():
        for size, count in sorted(h.counts.items()):
            rows.append([name, size, count, repr(float(np.log(count)))])
    _write_csv(out / "histograms.csv", ["algorithm", "size", "count", "log_frequency"], rows)
    _write_csv(out / "scatter.csv", ["dataset", "ri_dpap", "ri_icm1"],
               [[k, repr(a), repr(b)] for k, a, b in result.scatter()])
    summary = result.summary()
    if summary:
        _write_csv(out / "summary.csv", list(summary[0]),
                   [[_cell(v) for v in row.values()] for row in summary])
    _write_csv(out / "timings.csv", ["dataset", "algorithm", "wall_time"],
               [[r.dataset, r.algorithm, f"{r.wall_time:.6f}"] for r in result.records])
    return out


def read_records(path):
    """Parse records.csv back into BenchRecords (wall_time is not stored there)."""
    recs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            recs.append(BenchRecord(
                dataset=int(row["dataset"]), algorithm=row["algorithm"],
                rand_index=float(row["rand_index"]), delta_loglik=float(row["delta_loglik"]),
                n_clusters=int(row["n_clusters"]), converged=bool(int(row["converged"])),
                iterations=int(row["iterations"])))
    return recs
