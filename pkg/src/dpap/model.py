"""Core data types for exemplar-based clustering and the exact joint scorer.

Labels are 0-based inside the library.  A labelling ``c`` is *valid* when every
used label is a self-assigned exemplar, i.e. ``c[c[i]] == c[i]`` for all i.
File formats and the CLI use 1-based indices; conversion happens in
:mod:`dpap.fileio`.
"""
from dataclasses import dataclass, field
from math import lgamma

import numpy as np


class NonExemplarLabel(ValueError):
    """A point is assigned to a label that is not its own exemplar."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"point {index} points to a non-exemplar label")


class ExemplarNotMember(ValueError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"exemplar of group {group} is not one of its members")


class SimilarityModel:
    """Dense n x n log-domain similarity matrix.

    ``s[i, j]`` (i != j) is the log-affinity of point i choosing exemplar j and
    may be ``-inf`` to forbid the choice.  ``s[i, i]`` is the preference of i
    for being an exemplar and must be finite.
    """

    def __init__(self, s):
        s = np.array(s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise ValueError(f"similarity must be a non-empty square matrix, got shape {s.shape}")
        if np.isnan(s).any():
            raise ValueError("similarity contains NaN")
        if not np.isfinite(np.diag(s)).all():
            raise ValueError("every preference s(i, i) must be finite")
        if (s == np.inf).any():
            raise ValueError("similarity contains +inf")
        s.setflags(write=False)
        self.s = s

    @property
    def n(self):
        return self.s.shape[0]

    @classmethod
    def from_sparse(cls, n, entries, preference):
        """Build from ``{(i, j): value}``; missing off-diagonal pairs become -inf."""
        s = np.full((n, n), -np.inf)
        np.fill_diagonal(s, preference)
        for (i, j), v in entries.items():
            s[i, j] = v
        return cls(s)

    def with_preference(self, value):
        s = self.s.copy()
        np.fill_diagonal(s, value)
        return SimilarityModel(s)

    def shift_preference(self, d):
        s = self.s.copy()
        s[np.diag_indices(self.n)] += d
        return SimilarityModel(s)

    def scaled(self, factor):
        with np.errstate(invalid="ignore"):
            s = self.s * factor
        # keep forbidden entries forbidden for any positive factor
        s[np.isneginf(self.s)] = -np.inf
        return SimilarityModel(s)

    def __eq__(self, other):
        return isinstance(other, SimilarityModel) and np.array_equal(self.s, other.s)

    def __repr__(self):
        return f"SimilarityModel(n={self.n})"


class Assignment:
    """A valid exemplar labelling.  Construct through :func:`validate`."""

    __slots__ = ("labels",)

    def __init__(self, labels):
        labels = np.asarray(labels, dtype=np.intp).copy()
        labels.setflags(write=False)
        self.labels = labels

    @property
    def n(self):
        return len(self.labels)

    @property
    def exemplars(self):
        return np.flatnonzero(self.labels == np.arange(self.n))

    @property
    def n_clusters(self):
        return len(self.exemplars)

    def sizes(self):
        """Cluster size for every exemplar, in exemplar order."""
        return np.bincount(self.labels, minlength=self.n)[self.exemplars]

    def groups(self):
        return [np.flatnonzero(self.labels == e) for e in self.exemplars]

    def __eq__(self, other):
        return isinstance(other, Assignment) and np.array_equal(self.labels, other.labels)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Assignment({self.labels.tolist()})"


@dataclass(frozen=True)
class ModelParams:
    """Generative parameters of the exemplar model.

    ``base_log_density(x)`` is log G0(x); ``conditional_log_density(x, e)`` is
    log P(x | exemplar e).
    """

    alpha: float
    base_log_density: object
    conditional_log_density: object

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def similarity(self, points):
        points = np.asarray(points, dtype=float)
        n = len(points)
        s = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    s[i, i] = np.log(self.alpha) + self.base_log_density(points[i])
                else:
                    s[i, j] = self.conditional_log_density(points[i], points[j])
        return SimilarityModel(s)


@dataclass
class RunResult:
    labels: Assignment
    log_joint: float
    iterations: int
    converged: bool
    algorithm: str
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_clusters(self):
        return self.labels.n_clusters


def validate(labels):
    """Return an :class:`Assignment` or raise :class:`NonExemplarLabel`.

    The error carries the first index ``i`` whose label is not self-assigned.
    """
    c = np.asarray(labels)
    if c.ndim != 1 or len(c) == 0:
        raise ValueError("labels must be a non-empty 1-d array")
    if not np.issubdtype(c.dtype, np.integer):
        if not np.all(np.mod(c, 1) == 0):
            raise ValueError("labels must be integers")
        c = c.astype(np.intp)
    n = len(c)
    if c.min() < 0 or c.max() >= n:
        raise ValueError(f"labels must lie in 0..{n - 1}")
    bad = np.flatnonzero(c[c] != c)
    if len(bad):
        raise NonExemplarLabel(int(bad[0]))
    return Assignment(c)


def as_assignment(labels):
    return labels if isinstance(labels, Assignment) else validate(labels)


def canonicalize(groups, exemplars, n=None):
    """Label every member of each group with its exemplar's index."""
    groups = [np.asarray(g, dtype=np.intp) for g in groups]
    if len(groups) != len(exemplars):
        raise ValueError("one exemplar per group is required")
    if n is None:
        n = sum(len(g) for g in groups)
    labels = np.full(n, -1, dtype=np.intp)
    for k, (g, e) in enumerate(zip(groups, exemplars)):
        if e not in g:
            raise ExemplarNotMember(k)
        if (labels[g] != -1).any():
            raise ValueError("groups overlap")
        labels[g] = e
    if (labels == -1).any():
        raise ValueError("groups do not cover every point")
    return validate(labels)


def dp_constant(n, alpha):
    """log Gamma(alpha) - log Gamma(n + alpha); independent of the labelling."""
    return lgamma(alpha) - lgamma(n + alpha)


def log_joint(sim, assignment, prior, alpha=1.0, include_constant=False):
    """Exact log joint of a labelling under a cluster-size prior.

    Sum of ``s[i, c_i]`` over points plus ``prior.log_weight(N_k)`` per cluster.
    When the diagonal holds ``log alpha + log G0(x_i)`` and the prior is the
    Dirichlet-process prior, adding the constant term gives the full collapsed
    log likelihood.  Returns -inf if any used similarity is -inf.
    """
    a = as_assignment(assignment)
    if a.n != sim.n:
        raise ValueError(f"assignment has {a.n} points, similarity has {sim.n}")
    total = sim.s[np.arange(a.n), a.labels].sum()
    total += prior.weights(a.n)[a.sizes()].sum()
    if include_constant:
        total += dp_constant(a.n, alpha)
    return float(total)
