"""Nonnegative double SVD initialisation (plain variant: zeros stay zero)."""

from __future__ import annotations

import logging
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

_DENSE_LIMIT = 4_000_000


class RankDeficientWarning(UserWarning):
    pass


def truncated_svd(X, k: int):
    """Leading *k* singular triplets, largest first."""
    n, m = X.shape
    if n * m <= _DENSE_LIMIT or k >= min(n, m) - 1:
        dense = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)
        U, S, Vt = np.linalg.svd(dense, full_matrices=False)
        return U[:, :k], S[:k], Vt[:k]
    v0 = np.full(min(n, m), 1.0 / np.sqrt(min(n, m)))
    U, S, Vt = spla.svds(sp.csr_matrix(X, dtype=float), k=k, v0=v0)
    order = np.argsort(S)[::-1]
    return U[:, order], S[order], Vt[order]


def nndsvd_init(X, k: int, rank_tol: float = 1e-10):
    """Nonnegative (W0, H0) with W0 @ H0 approximating X.

    The leading singular pair enters as sqrt(s1)*|u1|, sqrt(s1)*|v1|; every
    further pair contributes its positive or negative section, whichever has
    the larger product of norms, rescaled to keep its share of s_j.
    """
    X = X.X if hasattr(X, "X") and hasattr(X, "vocab") else X
    n, m = X.shape
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k={k} must lie in [1, min(n_docs, n_terms)={min(n, m)}]")
    U, S, Vt = truncated_svd(X, k)
    W = np.zeros((n, k))
    H = np.zeros((k, m))
    if S[0] > 0:
        u, v = U[:, 0], Vt[0]
        # leading pair of a nonnegative matrix has one sign per vector
        if u.sum() < 0:
            u, v = -u, -v
        W[:, 0] = np.sqrt(S[0]) * np.abs(u)
        H[0] = np.sqrt(S[0]) * np.abs(v)
    if S[-1] <= rank_tol * max(S[0], 1e-300):
        warnings.warn(
            f"matrix is rank deficient for k={k} (s_k={S[-1]:.3g}); zero factors kept",
            RankDeficientWarning,
            stacklevel=2,
        )
    for j in range(1, k):
        x, y = U[:, j], Vt[j]
        xp, yp = np.maximum(x, 0), np.maximum(y, 0)
        xn, yn = np.maximum(-x, 0), np.maximum(-y, 0)
        xpn, ypn = np.linalg.norm(xp), np.linalg.norm(yp)
        xnn, ynn = np.linalg.norm(xn), np.linalg.norm(yn)
        mp, mn = xpn * ypn, xnn * ynn
        if mp >= mn:
            if mp == 0:
                continue
            u, v, sigma = xp / xpn, yp / ypn, mp
        else:
            u, v, sigma = xn / xnn, yn / ynn, mn
        scale = np.sqrt(S[j] * sigma)
        W[:, j] = scale * u
        H[j] = scale * v
    return W, H
