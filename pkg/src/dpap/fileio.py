"""Text file formats.  Every index written to disk is 1-based.

dataset      first line ``n=.. dim=.. alpha=.. base_variance=.. cond_variance=.. seed=..``,
             then n lines of whitespace-separated coordinates,
             then n lines with one truth label each.
similarity   first line n, then n rows of n comma-separated values; ``-inf``
             marks a forbidden pair.
labels       one label per line.
prior table  one log-weight per line; line K is the weight of size K.
superpixels  JSON ``{"n", "mean_color": [[r,g,b],...],
             "edges": [{"i", "j", "responses": [...]} | {"i", "j", "mean"}]}``
             with 1-based i, j.
run result   JSON with labels, log_joint, iterations, converged, algorithm, config.
"""
import json
from pathlib import Path

import numpy as np

from .model import RunResult, SimilarityModel, validate
from .priors import table_prior
from .segsim import Edge, SuperpixelGraph
from .synth import Dataset, GenConfig


class DataError(ValueError):
    """Malformed or inconsistent input file."""


def _fmt(x):
    x = float(x)
    if x == -np.inf:
        return "-inf"
    if x == np.inf:
        return "inf"
    return repr(x)


def _lines(path):
    return [ln for ln in Path(path).read_text().splitlines() if ln.strip()]


def write_dataset(path, ds):
    c = ds.config
    header = " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                      for k, v in c.as_dict().items())
    lines = [header]
    lines += [" ".join(_fmt(v) for v in p) for p in ds.points]
    lines += [str(int(l) + 1) for l in ds.truth.labels]
    Path(path).write_text("\n".join(lines) + "\n")


def is_dataset_file(path):
    with open(path) as fh:
        first = fh.readline()
    return "=" in first


def read_dataset(path):
    lines = _lines(path)
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0].split())
        cfg = GenConfig(
            n=int(fields["n"]), alpha=float(fields["alpha"]), dim=int(fields["dim"]),
            base_variance=float(fields["base_variance"]),
            cond_variance=float(fields["cond_variance"]), seed=int(fields["seed"]))
    except (KeyError, ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad dataset header: {exc}") from exc
    body = lines[1:]
    if len(body) != 2 * cfg.n:
        raise DataError(f"{path}: expected {2 * cfg.n} lines after the header, got {len(body)}")
    try:
        points = np.array([[float(v) for v in ln.split()] for ln in body[: cfg.n]])
        labels = np.array([int(ln) - 1 for ln in body[cfg.n:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if points.shape != (cfg.n, cfg.dim):
        raise DataError(f"{path}: points do not form an {cfg.n} x {cfg.dim} array")
    try:
        truth = validate(labels)
    except ValueError as exc:
        raise DataError(f"{path}: invalid truth labels: {exc}") from exc
    return Dataset(points, truth, cfg)


def write_similarity(path, sim):
    s = sim.s if isinstance(sim, SimilarityModel) else np.asarray(sim)
    lines = [str(s.shape[0])] + [",".join(_fmt(v) for v in row) for row in s]
    Path(path).write_text("\n".join(lines) + "\n")


def read_similarity(path):
    lines = _lines(path)
    try:
        n = int(lines[0])
        s = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    if s.shape != (n, n):
        raise DataError(f"{path}: expected a {n} x {n} matrix, got {s.shape}")
    try:
        return SimilarityModel(s)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_labels(path, labels):
    labels = getattr(labels, "labels", labels)
    Path(path).write_text("".join(f"{int(l) + 1}\n" for l in labels))


def read_labels(path):
    try:
        return np.array([int(ln) - 1 for ln in _lines(path)], dtype=np.intp)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def read_prior_table(path, tail="repeat-last"):
    try:
        weights = [float(ln) for ln in _lines(path)]
        return table_prior(weights, tail=tail, name=f"table:{path}")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_prior_table(path, prior, n):
    Path(path).write_text("".join(_fmt(w) + "\n" for w in prior.weights(n)[1:]))


def result_to_dict(result):
    return {
        "algorithm": result.algorithm,
        "labels": [int(l) + 1 for l in result.labels.labels],
        "n_clusters": int(result.n_clusters),
        "log_joint": _json_float(result.log_joint),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "config": result.config,
        "diagnostics": {k: _json_float(v) if isinstance(v, float) else v
                        for k, v in result.diagnostics.items() if k != "trace"},
    }


def _json_float(x):
    return x if np.isfinite(x) else _fmt(x)


def write_result(path, result):
    Path(path).write_text(json.dumps(result_to_dict(result), indent=2) + "\n")


def read_result(path):
    try:
        d = json.loads(Path(path).read_text())
        labels = validate(np.array(d["labels"]) - 1)
        return RunResult(labels, float(d["log_joint"]), int(d["iterations"]),
                         bool(d["converged"]), d["algorithm"], d.get("config", {}),
                         d.get("diagnostics", {}))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: bad result file: {exc}") from exc


def read_superpixels(path, rescale=False):
    try:
        d = json.loads(Path(path).read_text())
        n = int(d["n"])
        colors = np.asarray(d["mean_color"], dtype=float)
        if rescale:
            colors = colors / 255.0
        if colors.shape != (n, 3):
            raise DataError(f"{path}: mean_color must be {n} x 3")
        if ((colors < 0) | (colors > 1)).any():
            raise DataError(f"{path}: colours must lie in [0, 1] (use --rescale for 0..255 input)")
        edges = []
        for e in d.get("edges", []):
            if ("responses" in e) == ("mean" in e):
                raise DataError(f"{path}: each edge needs exactly one of responses, mean")
            edges.append(Edge(int(e["i"]) - 1, int(e["j"]) - 1,
                              tuple(float(v) for v in e.get("responses", ())),
                              float(e["mean"]) if "mean" in e else None))
        return SuperpixelGraph(colors, edges)
    except DataError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{path}: bad superpixel graph: {exc}") from exc


def write_superpixels(path, g):
    edges = []
    for e in g.edges:
        item = {"i": e.i + 1, "j": e.j + 1}
        if e.mean is not None:
            item["mean"] = e.mean
        else:
            item["responses"] = list(e.responses)
        edges.append(item)
    d = {"n": g.n, "mean_color": g.mean_color.tolist(), "edges": edges}
    Path(path).write_text(json.dumps(d, indent=2) + "\n")
