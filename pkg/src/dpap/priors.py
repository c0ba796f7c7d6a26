"""Cluster-size priors: unnormalized log-weights per non-empty cluster."""
from math import lgamma, log

import numpy as np


class CardinalityPrior:
    """Log-weight of a cluster as a function of its size K >= 1.

    ``weights(n)`` returns a memoized array ``w`` of length n + 1 with
    ``w[K] = log_weight(K)``; ``w[0]`` is 0 and is never read as a cluster
    term (empty clusters are handled by the caller).
    """

    def __init__(self, name, log_weight):
        self.name = name
        self._fn = log_weight
        self._table = np.zeros(1)
        self._table.setflags(write=False)

    def log_weight(self, k):
        if k < 1:
            raise ValueError(f"cluster size must be >= 1, got {k}")
        return float(self._fn(int(k)))

    def weights(self, n):
        if n >= len(self._table):
            w = np.zeros(n + 1)
            w[1:] = [self._fn(k) for k in range(1, n + 1)]
            if np.isnan(w).any() or (w == np.inf).any():
                raise ValueError(f"prior {self.name!r} produced NaN or +inf")
            w.setflags(write=False)
            self._table = w
        return self._table[: n + 1]

    def __repr__(self):
        return f"CardinalityPrior({self.name!r})"


def _dp(k):
    return lgamma(k) - log(k)


def dp_prior():
    """Dirichlet-process prior: log Gamma(K) - log K."""
    return CardinalityPrior("dp", _dp)


def ap_prior():
    """Flat prior; with it the objective reduces to plain affinity propagation."""
    return CardinalityPrior("ap", lambda k: 0.0)


def table_prior(weights, tail="repeat-last", name="table"):
    """Prior read from a table where ``weights[K - 1]`` is the log-weight of size K.

    Sizes past the table either reuse the last entry (``tail="repeat-last"``)
    or are forbidden (``tail="neg-infinity"``).
    """
    weights = [float(w) for w in weights]
    if not weights:
        raise ValueError("prior table is empty")
    if tail not in ("repeat-last", "neg-infinity"):
        raise ValueError(f"unknown tail rule {tail!r}")
    last = weights[-1] if tail == "repeat-last" else -np.inf

    def fn(k):
        return weights[k - 1] if k <= len(weights) else last

    return CardinalityPrior(name, fn)


def get_prior(text, table_loader=None):
    """Resolve ``dp``, ``ap`` or ``table:PATH``."""
    if text == "dp":
        return dp_prior()
    if text == "ap":
        return ap_prior()
    if text.startswith("table:"):
        if table_loader is None:
            from .fileio import read_prior_table as table_loader
        return table_loader(text[len("table:"):])
    raise ValueError(f"unknown prior {text!r}; expected dp, ap or table:FILE")
