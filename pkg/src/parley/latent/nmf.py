"""Regularised NMF by cyclic HALS coordinate descent.

Objective::

    F(W, H) = 1/2 ||X - WH||_F^2
              + alpha * l1_ratio * (||W||_1 + ||H||_1)
              + 1/2 * alpha * (1 - l1_ratio) * (||W||_F^2 + ||H||_F^2)

Each sweep updates every column of W, then every row of H, each by its
exact nonnegative minimiser with the rest held fixed, so F never increases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import kernels
from .nndsvd import nndsvd_init

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NMFParams:
    k: int = 10
    alpha: float = 0.1
    l1_ratio: float = 0.5
    tol: float = 1e-4
    max_iter: int = 200
    membership_threshold: float = 0.1

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= self.l1_ratio <= 1:
            raise ValueError(f"l1_ratio must lie in [0, 1], got {self.l1_ratio}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 <= self.membership_threshold <= 1:
            raise ValueError(f"membership_threshold must lie in [0, 1], got {self.membership_threshold}")

    @property
    def l1(self) -> float:
        return self.alpha * self.l1_ratio

    @property
    def l2(self) -> float:
        return self.alpha * (1.0 - self.l1_ratio)


@dataclass
class TopicModel:
    W: np.ndarray
    H: np.ndarray
    vocab: list[str]
    docs: list[int]
    params: NMFParams
    objective_trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    empty_docs: frozenset[int] = frozenset()
    history: list | None = None

    @property
    def k(self) -> int:
        return self.W.shape[1]


def _sq_frobenius(X) -> float:
    if sp.issparse(X):
        return float(X.multiply(X).sum())
    return float(np.sum(X * X))


def objective(X, W, H, alpha: float = 0.0, l1_ratio: float = 0.0, _x_sq: float | None = None) -> float:
    x_sq = _sq_frobenius(X) if _x_sq is None else _x_sq
    cross = float(np.sum((X @ H.T) * W))
    WH_sq = float(np.sum((W.T @ W) * (H @ H.T)))
    loss = 0.5 * max(x_sq - 2.0 * cross + WH_sq, 0.0)
    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    penalty = l1 * (W.sum() + H.sum()) + 0.5 * l2 * (np.sum(W * W) + np.sum(H * H))
    return loss + float(penalty)


def hals_sweep(X, W, H, params: NMFParams, kernel=None) -> None:
    """One cyclic pass: all columns of W, then all rows of H (in place)."""
    kernel = kernel or kernels
    order = np.arange(W.shape[1], dtype=np.intp)
    l1, l2 = params.l1, params.l2

    HHt = H @ H.T
    HHt.flat[:: HHt.shape[0] + 1] += l2
    XHt = np.ascontiguousarray(X @ H.T, dtype=float)
    XHt -= l1
    kernel.hals_update(W, np.ascontiguousarray(HHt), XHt, order)

    WtW = W.T @ W
    WtW.flat[:: WtW.shape[0] + 1] += l2
    XtW = np.ascontiguousarray(X.T @ W, dtype=float)
    XtW -= l1
    Ht = np.ascontiguousarray(H.T)
    kernel.hals_update(Ht, np.ascontiguousarray(WtW), XtW, order)
    H[...] = Ht.T


def fit_nmf(X, params: NMFParams | None = None, init=None, kernel=None, record_factors: bool = False) -> TopicModel:
    """Fit W, H >= 0 to X by HALS from an NNDSVD start.

    Stops when the relative objective decrease of a sweep drops below
    ``params.tol`` or after ``params.max_iter`` sweeps (``converged`` is
    False in that case).  ``objective_trace[0]`` is the initial objective.
    """
    params = params or NMFParams()
    vocab: list[str] = []
    docs: list[int] = []
    empty: frozenset[int] = frozenset()
    if hasattr(X, "vocab") and hasattr(X, "X"):
        vocab, docs = list(X.vocab), list(X.docs)
        empty = frozenset(d for d, z in zip(docs, X.zero_rows()) if z)
        X = X.X
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=float)
    else:
        X = np.asarray(X, dtype=float)
    if (X.data if sp.issparse(X) else X).min(initial=0.0) < 0:
        raise ValueError("X must be nonnegative")
    n, m = X.shape
    if not docs:
        docs = list(range(n))
    if not vocab:
        vocab = [str(j) for j in range(m)]

    if init is None:
        W, H = nndsvd_init(X, params.k)
    else:
        W, H = (np.array(a, dtype=float) for a in init)
    W = np.ascontiguousarray(W)
    H = np.ascontiguousarray(H)

    x_sq = _sq_frobenius(X)
    trace = [objective(X, W, H, params.alpha, params.l1_ratio, x_sq)]
    history = [] if record_factors else None
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        hals_sweep(X, W, H, params, kernel)
        if history is not None:
            history.append((W.copy(), H.copy()))
        f = objective(X, W, H, params.alpha, params.l1_ratio, x_sq)
        prev = trace[-1]
        trace.append(f)
        if prev <= 0 or (prev - f) / prev < params.tol:
            converged = True
            break
    if not converged:
        log.warning("NMF did not converge in %d sweeps (k=%d)", params.max_iter, params.k)
    return TopicModel(W, H, vocab, docs, params, trace, it, converged, empty, history)
