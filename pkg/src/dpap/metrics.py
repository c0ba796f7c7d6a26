"""Evaluation metrics and benchmark records."""
from collections import Counter
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .model import as_assignment, log_joint


def rand_index(a, b):
    """Fraction of point pairs on which two labellings agree about co-membership.

    Accepts any integer label arrays (they need not be exemplar-valid).
    """
    a = np.asarray(getattr(a, "labels", a))
    b = np.asarray(getattr(b, "labels", b))
    n = len(a)
    if n != len(b):
        raise ValueError(f"labellings differ in length ({n} vs {len(b)})")
    if n < 2:
        raise ValueError("rand index needs at least two points")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    pairs = lambda x: (x * (x - 1) // 2).sum()
    same_both = pairs(table)
    same_a = pairs(table.sum(axis=1))
    same_b = pairs(table.sum(axis=0))
    total = comb(n, 2)
    agree = total + 2 * same_both - same_a - same_b
    return float(agree / total)


def delta_loglik(found, truth, sim, prior, alpha=1.0):
    """log_joint(found) - log_joint(truth); the constant term cancels."""
    found = as_assignment(found)
    truth = as_assignment(truth)
    return float(log_joint(sim, found, prior, alpha) - log_joint(sim, truth, prior, alpha))


@dataclass
class SizeHistogram:
    counts: dict = field(default_factory=dict)

    @property
    def total_clusters(self):
        return sum(self.counts.values())

    @property
    def total_points(self):
        return sum(k * v for k, v in self.counts.items())

    def probabilities(self, max_size=None):
        """Probability vector over sizes 1..max_size."""
        max_size = max_size or max(self.counts, default=0)
        p = np.zeros(max_size)
        for size, c in self.counts.items():
            p[size - 1] = c
        total = p.sum()
        return p / total if total else p

    def log_frequency(self):
        return {k: float(np.log(v)) for k, v in sorted(self.counts.items())}

    def merge(self, other):
        return SizeHistogram(dict(Counter(self.counts) + Counter(other.counts)))


def size_histogram(assignments):
    counts = Counter()
    for a in assignments:
        counts.update(int(k) for k in as_assignment(a).sizes())
    return SizeHistogram(dict(sorted(counts.items())))


def histogram_distance(h1, h2):
    """Total-variation distance between two size distributions."""
    if not h1.total_clusters and not h2.total_clusters:
        raise ValueError("both histograms are empty")
    if not h1.total_clusters or not h2.total_clusters:
        return 1.0
    m = max(max(h1.counts), max(h2.counts))
    return 0.5 * float(np.abs(h1.probabilities(m) - h2.probabilities(m)).sum())


@dataclass
class BenchRecord:
    dataset: int
    algorithm: str
    rand_index: float
    delta_loglik: float
    n_clusters: int
    converged: bool
    iterations: int
    wall_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rand_index <= 1.0:
            raise ValueError("rand_index must lie in [0, 1]")
