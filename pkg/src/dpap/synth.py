"""Synthetic data from the exemplar generative process.

A partition is drawn by sequential Chinese-restaurant seating, one exemplar is
picked uniformly per group, exemplar points come from a spherical Gaussian
base distribution, and every other point is Gaussian around its exemplar.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .model import SimilarityModel, canonicalize


@dataclass(frozen=True)
class GenConfig:
    n: int = 100
    alpha: float = 1.0
    dim: int = 2
    base_variance: float = 1.0
    cond_variance: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.dim < 1:
            raise ValueError("n and dim must be >= 1")
        if not (self.base_variance > 0 and self.cond_variance > 0):
            raise ValueError("variances must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def as_dict(self):
        return asdict(self)


@dataclass
class Dataset:
    points: np.ndarray
    truth: object  # Assignment
    config: GenConfig

    @property
    def n(self):
        return len(self.points)

    @property
    def seed_used(self):
        return self.config.seed

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.config == other.config
                and np.array_equal(self.points, other.points) and self.truth == other.truth)


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def sample_partition(n, alpha, rng):
    """Group index per point from sequential Chinese-restaurant seating.

    Point i (0-based) joins existing group k with probability N_k / (i + alpha)
    and opens a new group with probability alpha / (i + alpha).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    groups = np.empty(n, dtype=np.intp)
    sizes = []
    for i in range(n):
        u = rng.random() * (i + alpha)
        acc = 0.0
        for k, size in enumerate(sizes):
            acc += size
            if u < acc:
                groups[i] = k
                sizes[k] += 1
                break
        else:
            groups[i] = len(sizes)
            sizes.append(1)
    return groups


def sample_dataset(cfg, rng=None):
    rng = rng if rng is not None else make_rng(cfg.seed)
    part = sample_partition(cfg.n, cfg.alpha, rng)
    members = [np.flatnonzero(part == k) for k in range(part.max() + 1)]
    exemplars = [int(m[rng.integers(len(m))]) for m in members]
    truth = canonicalize(members, exemplars, cfg.n)

    points = np.empty((cfg.n, cfg.dim))
    ex = np.array(exemplars)
    points[ex] = rng.normal(0.0, np.sqrt(cfg.base_variance), size=(len(ex), cfg.dim))
    rest = np.flatnonzero(truth.labels != np.arange(cfg.n))
    points[rest] = points[truth.labels[rest]] + rng.normal(
        0.0, np.sqrt(cfg.cond_variance), size=(len(rest), cfg.dim))
    return Dataset(points, truth, cfg)


def gaussian_log_density(x, mean, variance):
    """Spherical Gaussian log-density, broadcasting over leading axes."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    sq = np.sum((x - mean) ** 2, axis=-1)
    return -0.5 * dim * np.log(2 * np.pi * variance) - sq / (2 * variance)


def build_similarity(points, alpha, base_variance, cond_variance):
    """s[i, j] = log N(x_i | x_j, cond_variance I);
    s[i, i] = log alpha + log N(x_i | 0, base_variance I)."""
    points = np.asarray(points, dtype=float)
    s = gaussian_log_density(points[:, None, :], points[None, :, :], cond_variance)
    np.fill_diagonal(s, np.log(alpha) + gaussian_log_density(points, 0.0, base_variance))
    return SimilarityModel(s)


def dataset_similarity(ds, alpha=None):
    c = ds.config
    return build_similarity(ds.points, c.alpha if alpha is None else alpha,
                            c.base_variance, c.cond_variance)


def expected_clusters(n, alpha):
    """Mean number of groups under sequential seating: sum alpha / (alpha + i)."""
    i = np.arange(n)
    return float(np.sum(alpha / (alpha + i)))
