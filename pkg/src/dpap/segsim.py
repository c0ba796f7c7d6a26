"""Similarities between superpixels from mean colour and boundary strength.

The superpixel graph is ingested, not computed: mean RGB per superpixel in
[0, 1] and, for each adjacent pair, the edge-detector responses along their
shared boundary (or their precomputed mean).
"""
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .model import SimilarityModel


@dataclass
class Edge:
    i: int
    j: int
    responses: tuple = ()
    mean: float = None

    def mean_response(self):
        if self.mean is not None:
            return float(self.mean)
        if len(self.responses) == 0:
            return np.inf
        return float(np.mean(self.responses))


@dataclass
class SuperpixelGraph:
    mean_color: np.ndarray
    edges: list

    def __post_init__(self):
        self.mean_color = np.asarray(self.mean_color, dtype=float).reshape(-1, 3)
        if len(self.mean_color) < 1:
            raise ValueError("graph needs at least one superpixel")
        seen = set()
        for e in self.edges:
            if not (0 <= e.i < self.n and 0 <= e.j < self.n) or e.i == e.j:
                raise ValueError(f"bad edge ({e.i}, {e.j})")
            key = (min(e.i, e.j), max(e.i, e.j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            vals = list(e.responses) + ([e.mean] if e.mean is not None else [])
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"edge ({e.i}, {e.j}) has a response outside [0, 1]")

    @property
    def n(self):
        return len(self.mean_color)


@dataclass
class SegConfig:
    tau_r: float = None  # None: balance the two terms automatically
    tau_e: float = None
    self_sim: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        for name in ("tau_r", "tau_e"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")


def color_similarity(g, tau_r=1.0):
    """-tau_r * squared RGB distance between mean colours."""
    diff = g.mean_color[:, None, :] - g.mean_color[None, :, :]
    return -tau_r * np.sum(diff ** 2, axis=-1)


def edge_distances(g, tau_e=1.0):
    """Dense matrix of tau_e * mean boundary response; inf for non-adjacent pairs."""
    d = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(d, 0.0)
    for e in g.edges:
        d[e.i, e.j] = d[e.j, e.i] = tau_e * e.mean_response()
    return d


def shortest_path_similarity(d):
    """Negated all-pairs shortest-path distances (Dijkstra).  Unreachable -> -inf."""
    d = np.asarray(d, dtype=float)
    if (d < 0).any():
        raise ValueError("edge distances must be non-negative")
    n = d.shape[0]
    finite = np.isfinite(d) & ~np.eye(n, dtype=bool)
    rows, cols = np.nonzero(finite)
    graph = csr_matrix((d[rows, cols], (rows, cols)), shape=(n, n))
    dist = dijkstra(graph, directed=True)
    if np.array_equal(d, d.T):
        # the two directions add the same edges in opposite order and can
        # differ in the last bit; both are valid path lengths
        dist = np.minimum(dist, dist.T)
    return -dist


def balanced_taus(g):
    """tau_r, tau_e giving the finite off-diagonal colour and boundary terms equal spread."""
    off = ~np.eye(g.n, dtype=bool)
    sr = color_similarity(g, 1.0)[off]
    se = shortest_path_similarity(edge_distances(g, 1.0))[off]
    se = se[np.isfinite(se)]
    sd_r = sr.std() if sr.size else 0.0
    sd_e = se.std() if se.size else 0.0
    if sd_r > 0 and sd_e > 0:
        return 1.0, float(sd_r / sd_e)
    return 1.0, 1.0


def compose(g, cfg=None):
    """scale * (colour term + boundary term) off the diagonal, scale * self_sim on it."""
    cfg = cfg or SegConfig()
    tau_r, tau_e = cfg.tau_r, cfg.tau_e
    if tau_r is None or tau_e is None:
        auto_r, auto_e = balanced_taus(g)
        tau_r = auto_r if tau_r is None else tau_r
        tau_e = auto_e if tau_e is None else tau_e
    s = color_similarity(g, tau_r) + shortest_path_similarity(edge_distances(g, tau_e))
    np.fill_diagonal(s, cfg.self_sim)
    return SimilarityModel(s).scaled(cfg.scale)
