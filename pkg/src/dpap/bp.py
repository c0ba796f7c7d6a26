"""Max-sum belief propagation for exemplar clustering with a cluster-size prior.

The model is a grid of binary variables ``h[i, j]`` (point i picks exemplar
j) with three factor types: the similarity ``s[i, j]`` on each variable, a
one-of-N constraint on each row, and a column factor that requires ``h[j, j]``
whenever column j is used and adds ``prior(K)`` for the K points in it.

Messages are stored as their value at 1 with the value at 0 normalized to 0,
so each grid is an n x n float array.
"""
from dataclasses import dataclass, field

import numpy as np

from . import icm
from .model import RunResult, log_joint
from .priors import dp_prior

# Stand-in for +inf when a row has exactly one feasible column: the variable
# is forced to 1, and a finite value keeps differences like A - B well defined.
FORCED_MESSAGE = 1e8

# Upper bound on the gathered tensor size per chunk of columns.
_CHUNK_ELEMENTS = 1 << 22


@dataclass
class MessageState:
    mu_to_h: np.ndarray
    phi_to_h: np.ndarray
    iteration: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    def copy(self):
        return MessageState(self.mu_to_h.copy(), self.phi_to_h.copy(), self.iteration)


@dataclass
class EngineConfig:
    damping_mu: float = 0.7
    damping_phi: float = 0.0
    tol: float = 1e-5
    max_iters: int = 1000
    prior: object = field(default_factory=dp_prior)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("damping_mu", "damping_phi"):
            lam = getattr(self, name)
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {lam}")

    def echo(self):
        return {
            "damping_mu": self.damping_mu,
            "damping_phi": self.damping_phi,
            "tol": self.tol,
            "max_iters": self.max_iters,
            "prior": self.prior.name,
        }


def _column_kernel(vj, others, f):
    """Outgoing column-factor messages for a batch of m columns.

    vj: (m,) incoming message from each column's diagonal variable.
    others: (m, L) incoming messages from the L = n - 1 off-diagonal rows.
    f: prior weights, ``f[K]`` for K = 0..n.

    Returns ``(self_out, other_out)`` with shapes (m,) and (m, L).
    """
    m, L = others.shape
    order = np.argsort(-others, axis=1, kind="stable")
    u = np.take_along_axis(others, order, axis=1)
    prefix = np.zeros((m, L + 1))
    np.cumsum(u, axis=1, out=prefix[:, 1:])
    # diagonal recipient: the column is on, choose how many others join
    self_out = np.max(prefix + f[1 : L + 2], axis=1)

    if L == 0:
        return self_out, np.zeros((m, 0))
    # For the recipient at rank r, the best c others are the sorted list with
    # entry r skipped; re-accumulate in that order instead of re-sorting.
    k = np.arange(L - 1)
    skip = k[None, :] + (k[None, :] >= np.arange(L)[:, None])
    q = np.zeros((m, L, L))
    np.cumsum(u[:, skip], axis=2, out=q[:, :, 1:])
    on = vj[:, None] + np.max(q + f[2 : L + 2], axis=2)
    off = np.maximum(0.0, vj[:, None] + np.max(q + f[1 : L + 1], axis=2))
    out_by_rank = on - off

    other_out = np.empty_like(out_by_rank)
    np.put_along_axis(other_out, order, out_by_rank, axis=1)
    return self_out, other_out


def _check_incoming(inc):
    if np.isnan(inc).any() or (inc == np.inf).any():
        raise ValueError("incoming messages must be finite or -inf")


def mu_column_messages(j, inc, prior):
    """Messages from column factor j to every variable in its column.

    ``inc[i]`` is the incoming message from ``h[i, j]``.  Entry i of the
    result is the outgoing message to ``h[i, j]``.  Costs one sort plus
    O(n) per recipient.
    """
    inc = np.asarray(inc, dtype=float)
    _check_incoming(inc)
    n = len(inc)
    f = prior.weights(n)
    others = np.delete(inc, j)[None, :]
    self_out, other_out = _column_kernel(inc[j : j + 1], others, f)
    out = np.empty(n)
    out[j] = self_out[0]
    out[np.arange(n) != j] = other_out[0]
    return out


def mu_messages(inc, prior, chunk_elements=_CHUNK_ELEMENTS):
    """All column-factor messages; ``inc[i, j]`` is the message from h[i, j]."""
    inc = np.asarray(inc, dtype=float)
    n = inc.shape[0]
    f = prior.weights(n)
    off_diag = ~np.eye(n, dtype=bool)
    cols = inc.T
    vj = np.diag(inc).copy()
    others = cols[off_diag].reshape(n, n - 1)

    self_out = np.empty(n)
    other_out = np.empty((n, n - 1))
    step = max(1, chunk_elements // max(1, (n - 1) ** 2))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        self_out[lo:hi], other_out[lo:hi] = _column_kernel(vj[lo:hi], others[lo:hi], f)

    out_t = np.empty((n, n))
    out_t[off_diag] = other_out.ravel()
    out_t[np.diag_indices(n)] = self_out
    return out_t.T.copy()


def phi_row_messages(inc):
    """Row (one-of-N) factor messages: ``out[j] = -max(inc[j'] for j' != j)``.

    Works on a single row or on an (n, n) array of rows.  A variable whose
    row has no other feasible entry receives ``FORCED_MESSAGE``.
    """
    inc = np.asarray(inc, dtype=float)
    single = inc.ndim == 1
    rows = np.atleast_2d(inc)
    m, n = rows.shape
    first = np.argmax(rows, axis=1)
    top1 = rows[np.arange(m), first]
    if n > 1:
        rest = rows.copy()
        rest[np.arange(m), first] = -np.inf
        top2 = rest.max(axis=1)
    else:
        top2 = np.full(m, -np.inf)
    out = np.repeat(-top1[:, None], n, axis=1)
    out[np.arange(m), first] = -top2
    out[out == np.inf] = FORCED_MESSAGE
    return out[0] if single else out


def incoming_to_mu(sim, state):
    return sim.s + state.phi_to_h


def incoming_to_phi(sim, state):
    return sim.s + state.mu_to_h


def damp(old, computed, lam):
    """``lam * old + (1 - lam) * computed``; non-finite entries take the new value."""
    if lam == 0.0:
        return computed
    if lam == 1.0:
        return old.copy()
    finite = np.isfinite(old) & np.isfinite(computed)
    with np.errstate(invalid="ignore"):
        mixed = lam * old + (1.0 - lam) * computed
    return np.where(finite, mixed, computed)


def max_abs_change(old, new):
    same = old == new  # also covers matching infinities
    with np.errstate(invalid="ignore"):
        diff = np.abs(new - old)
    diff[same] = 0.0
    return float(diff.max()) if diff.size else 0.0


def iterate(sim, state, cfg):
    """One block-synchronous round: column messages, then row messages.

    Returns the new state and the largest absolute message change.
    """
    new_mu = mu_messages(incoming_to_mu(sim, state), cfg.prior)
    mu = damp(state.mu_to_h, new_mu, cfg.damping_mu)
    new_phi = phi_row_messages(sim.s + mu)
    phi = damp(state.phi_to_h, new_phi, cfg.damping_phi)
    delta = max(max_abs_change(state.mu_to_h, mu), max_abs_change(state.phi_to_h, phi))
    return MessageState(mu, phi, state.iteration + 1), delta


def beliefs(sim, state):
    return sim.s + state.mu_to_h + state.phi_to_h


def decode_beliefs(b):
    """Hard labels from beliefs, before the ICM repair.

    A variable is on when its belief is positive.  Rows with several on
    variables keep the largest; rows with none fall back to the row argmax.
    Both rules pick the row argmax (lowest index on ties).
    """
    return np.argmax(np.asarray(b), axis=1)


def decode(sim, state, prior):
    """Decode beliefs, then run one ICM sweep so the result is always valid."""
    raw = decode_beliefs(beliefs(sim, state))
    return icm.one_pass(sim, prior, raw)


def run(sim, cfg=None, state=None, callback=None):
    """Iterate to convergence (or ``cfg.max_iters``) and decode.

    Non-convergence is reported through ``RunResult.converged``; the labels
    are valid either way.
    """
    cfg = cfg or EngineConfig()
    n = sim.n
    if n == 1:
        labels = icm.one_pass(sim, cfg.prior, [0])
        return RunResult(labels, log_joint(sim, labels, cfg.prior), 1, True, "dpap",
                         cfg.echo(), {"final_delta": 0.0})

    state = state.copy() if state is not None else MessageState.zeros(n)
    converged = False
    delta = np.inf
    for _ in range(cfg.max_iters):
        state, delta = iterate(sim, state, cfg)
        if callback is not None:
            callback(state, delta)
        if delta < cfg.tol:
            converged = True
            break

    raw = decode_beliefs(beliefs(sim, state))
    labels = icm.one_pass(sim, cfg.prior, raw)
    diagnostics = {
        "final_delta": delta,
        "decode_valid": bool((raw[raw] == raw).all()),
        "repair_changed": bool(not np.array_equal(raw, labels.labels)),
    }
    return RunResult(labels, log_joint(sim, labels, cfg.prior), state.iteration, converged,
                     "dpap", cfg.echo(), diagnostics)
