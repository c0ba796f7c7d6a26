"""Classic affinity propagation (responsibility / availability messages)."""
from dataclasses import dataclass, replace

import numpy as np

from . import icm
from .bp import FORCED_MESSAGE, damp, max_abs_change
from .model import RunResult, log_joint, validate
from .priors import ap_prior


@dataclass
class ApConfig:
    d: float = 0.0
    damping: float = 0.8
    tol: float = 1e-5
    max_iters: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def echo(self):
        return {"d": self.d, "damping": self.damping, "tol": self.tol,
                "max_iters": self.max_iters}


def responsibilities(s, a):
    """r(i, k) = s(i, k) - max over k' != k of [a(i, k') + s(i, k')]."""
    n = s.shape[0]
    rows = np.arange(n)
    av = a + s
    first = np.argmax(av, axis=1)
    top1 = av[rows, first]
    av[rows, first] = -np.inf
    top2 = av.max(axis=1) if n > 1 else np.full(n, -np.inf)
    competitor = np.repeat(top1[:, None], n, axis=1)
    competitor[rows, first] = top2
    with np.errstate(invalid="ignore"):
        r = s - competitor
    r[np.isneginf(s)] = -np.inf
    r[r == np.inf] = FORCED_MESSAGE
    return r


def availabilities(r):
    """a(i, k) = min(0, r(k, k) + sum of positive r(i', k) for i' not in {i, k});
    a(k, k) = sum of positive r(i', k) for i' != k."""
    n = r.shape[0]
    diag = np.diag_indices(n)
    rp = np.maximum(r, 0.0)
    rp[diag] = r[diag]
    col = rp.sum(axis=0)
    a = col[None, :] - rp
    self_a = a[diag].copy()
    a = np.minimum(a, 0.0)
    a[diag] = self_a
    return a


def ap_run(sim, cfg=None):
    """Run damped affinity propagation on ``sim`` with ``cfg.d`` added to the diagonal.

    Exemplars are the points with r(k, k) + a(k, k) > 0; everyone else joins
    the exemplar it is most similar to.  If no exemplar emerges, the row argmax
    of r + a is repaired with one ICM sweep under the flat prior.
    """
    cfg = cfg or ApConfig()
    shifted = sim.shift_preference(cfg.d) if cfg.d else sim
    s = shifted.s
    n = shifted.n
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    converged = False
    delta = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        r_new = damp(r, responsibilities(s, a), cfg.damping)
        a_new = damp(a, availabilities(r_new), cfg.damping)
        delta = max(max_abs_change(r, r_new), max_abs_change(a, a_new))
        r, a = r_new, a_new
        if delta < cfg.tol:
            converged = True
            break

    evidence = r + a
    exemplars = np.flatnonzero(np.diag(evidence) > 0)
    prior = ap_prior()
    if len(exemplars):
        labels = exemplars[np.argmax(s[:, exemplars], axis=1)]
        labels[exemplars] = exemplars
        labels = validate(labels)
        repaired = False
    else:
        labels = icm.one_pass(shifted, prior, np.argmax(evidence, axis=1))
        repaired = True
    return RunResult(labels, log_joint(shifted, labels, prior), it, converged, "ap",
                     cfg.echo(), {"final_delta": delta, "repaired": repaired})


def ap_sweep(sim, d_values, cfg=None):
    cfg = cfg or ApConfig()
    return [ap_run(sim, replace(cfg, d=d)) for d in d_values]
