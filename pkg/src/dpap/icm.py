"""Blocked iterated conditional modes over exemplar labellings.

Each step takes one point out of its group and tries every other group plus
a fresh singleton.  For each candidate the exemplars of both the source and
the target group are re-chosen, and the best candidate is kept if it beats
staying put.
"""
from dataclasses import dataclass

import numpy as np

from .model import RunResult, canonicalize, log_joint

# Minimum gain for accepting a move; keeps float noise from cycling.
IMPROVE_EPS = 1e-10


@dataclass
class IcmConfig:
    init: object = "one"  # "one", "singletons" or an array of labels
    max_passes: int = 100

    def __post_init__(self):
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")

    def echo(self):
        init = self.init if isinstance(self.init, str) else "labels"
        return {"init": init, "max_passes": self.max_passes}


def _best_in(values, members):
    """Index in ``members`` (sorted) with the largest value, lowest on ties."""
    vals = values[members]
    best = vals.max()
    return int(members[np.flatnonzero(vals == best)[0]]), best


def _split(s):
    finite = np.isfinite(s)
    return np.where(finite, s, 0.0), (~finite).astype(np.int64)


def best_exemplar(members, sim):
    """Member e maximizing s(e, e) + sum of s(i, e) over the other members."""
    members = np.unique(np.asarray(members, dtype=np.intp))
    if len(members) == 0:
        raise ValueError("cannot choose an exemplar for an empty group")
    fin, ninf = _split(sim.s[members])
    col = np.where(ninf.sum(axis=0) > 0, -np.inf, fin.sum(axis=0))
    return _best_in(col, members)[0]


class _Groups:
    """Mutable group bookkeeping with per-group column sums of s."""

    def __init__(self, sim, prior, labels):
        self.s = sim.s
        self.n = n = sim.n
        self.f = prior.weights(n)
        self.s_fin, self.s_ninf = _split(self.s)
        self.member = np.zeros((n, n), dtype=bool)
        self.colfin = np.zeros((n, n))
        self.colninf = np.zeros((n, n), dtype=np.int64)
        self.exemplar = np.full(n, -1)
        self.score = np.zeros(n)
        self.active = np.zeros(n, dtype=bool)
        self.group_of = np.empty(n, dtype=np.intp)
        for g, value in enumerate(np.unique(labels)):
            self.group_of[labels == value] = g
            self.member[g, labels == value] = True
            self.active[g] = True
            self._refresh(g)

    def _colvals(self, g):
        return np.where(self.colninf[g] > 0, -np.inf, self.colfin[g])

    def _refresh(self, g):
        rows = self.member[g]
        size = int(rows.sum())
        if size == 0:
            self.active[g] = False
            self.colfin[g] = 0.0
            self.colninf[g] = 0
            self.exemplar[g] = -1
            self.score[g] = 0.0
            return
        self.colfin[g] = self.s_fin[rows].sum(axis=0)
        self.colninf[g] = self.s_ninf[rows].sum(axis=0)
        e, val = _best_in(self._colvals(g), np.flatnonzero(rows))
        self.exemplar[g] = e
        self.score[g] = val + self.f[size]

    def labels(self):
        return self.exemplar[self.group_of]

    def total(self):
        sc = self.score[self.active]
        return -np.inf if np.isneginf(sc).any() else float(sc.sum())

    def step(self, i):
        """Move point i to its best candidate group.  Returns True if it moved."""
        src = self.group_of[i]
        act = np.flatnonzero(self.active)
        sc = self.score[act]
        fin = np.where(np.isfinite(sc), sc, 0.0)
        ninf = np.isneginf(sc).astype(np.int64)
        pos_src = int(np.searchsorted(act, src))
        base_fin = fin.sum() - fin[pos_src]
        base_ninf = ninf.sum() - ninf[pos_src]
        current = -np.inf if base_ninf + ninf[pos_src] else base_fin + fin[pos_src]

        # source group without i
        src_size = int(self.member[src].sum())
        if src_size == 1:
            new_src = 0.0
        else:
            rest = self.member[src].copy()
            rest[i] = False
            cf = self.colfin[src] - self.s_fin[i]
            cn = self.colninf[src] - self.s_ninf[i]
            vals = np.where(cn > 0, -np.inf, cf)
            new_src = _best_in(vals, np.flatnonzero(rest))[1] + self.f[src_size - 1]

        # every other group with i added
        targets = act[act != src]
        sizes = self.member[targets].sum(axis=1)
        mask = self.member[targets].copy()
        mask[:, i] = True
        cf = self.colfin[targets] + self.s_fin[i]
        cn = self.colninf[targets] + self.s_ninf[i]
        vals = np.where(cn > 0, -np.inf, cf)
        keyed = np.where(mask, vals, -np.inf)
        best = keyed.max(axis=1) if len(targets) else np.zeros(0)
        new_t = best + self.f[sizes + 1]

        t_pos = np.searchsorted(act, targets)
        cand_fin = base_fin - fin[t_pos]
        cand_ninf = base_ninf - ninf[t_pos]
        add = np.append(new_t, self.s[i, i] + self.f[1]) + new_src
        add_ninf = np.isneginf(add)
        cand_fin = np.append(cand_fin, base_fin) + np.where(add_ninf, 0.0, add)
        cand_ninf = np.append(cand_ninf, base_ninf) + add_ninf
        cand = np.where(cand_ninf > 0, -np.inf, cand_fin)
        if src_size == 1:
            cand[-1] = -np.inf  # already a singleton; same as staying

        k = int(np.argmax(cand))
        if not cand[k] > current + IMPROVE_EPS * max(1.0, abs(current)):
            return False
        if k == len(targets):
            dest = int(np.flatnonzero(~self.active)[0])
            self.active[dest] = True
        else:
            dest = int(targets[k])
        self.member[src, i] = False
        self.member[dest, i] = True
        self.group_of[i] = dest
        self._refresh(src)
        self._refresh(dest)
        return True


def _initial_labels(n, init):
    if isinstance(init, str):
        if init in ("one", "one-group"):
            return np.zeros(n, dtype=np.intp)
        if init in ("singletons", "n-singletons"):
            return np.arange(n)
        raise ValueError(f"unknown ICM init {init!r}")
    labels = np.asarray(init, dtype=np.intp)
    if labels.shape != (n,):
        raise ValueError(f"initial labels must have length {n}")
    return labels


def _sweeps(sim, prior, labels, max_passes, trace=None):
    groups = _Groups(sim, prior, labels)
    if trace is not None:
        trace.append(log_joint(sim, canonical(groups), prior))
    passes = 0
    converged = False
    while passes < max_passes:
        passes += 1
        moved = 0
        for i in range(sim.n):
            if groups.step(i):
                moved += 1
                if trace is not None:
                    trace.append(log_joint(sim, canonical(groups), prior))
        if moved == 0:
            converged = True
            break
    return groups, passes, converged


def canonical(groups):
    act = np.flatnonzero(groups.active)
    return canonicalize([np.flatnonzero(groups.member[g]) for g in act],
                        [groups.exemplar[g] for g in act], groups.n)


def one_pass(sim, prior, labels):
    """Repair an arbitrary labelling and run a single ICM sweep.

    Points sharing a label value form a group whose exemplar is re-chosen, so
    invalid decodes become valid before the sweep starts.
    """
    groups, _, _ = _sweeps(sim, prior, _initial_labels(sim.n, labels), 1)
    return canonical(groups)


def icm_run(sim, prior, cfg=None, record_trace=False):
    """ICM from ``cfg.init`` until a sweep makes no move or ``max_passes`` is hit."""
    cfg = cfg or IcmConfig()
    trace = [] if record_trace else None
    groups, passes, converged = _sweeps(sim, prior, _initial_labels(sim.n, cfg.init),
                                        cfg.max_passes, trace)
    labels = canonical(groups)
    algo = {"one": "icm1", "one-group": "icm1", "singletons": "icmn", "n-singletons": "icmn"}
    name = algo.get(cfg.init, "icm") if isinstance(cfg.init, str) else "icm"
    diagnostics = {"trace": trace} if record_trace else {}
    return RunResult(labels, log_joint(sim, labels, prior), passes, converged, name,
                     {**cfg.echo(), "prior": prior.name}, diagnostics)
