"""NumPy implementations of the compiled kernels."""

import numpy as np


def hals_update(W, HHt, XHt, order):
    for t in order:
        hess = HHt[t, t]
        if hess <= 0.0:
            W[:, t] = 0.0
            continue
        grad = W @ HHt[t] - XHt[:, t]
        np.maximum(W[:, t] - grad / hess, 0.0, out=W[:, t])


def running_mean(X):
    X = np.asarray(X, dtype=float)
    out = np.empty_like(X)
    if len(X) == 0:
        return out
    out[0] = X[0]
    for i in range(1, len(X)):
        out[i] = out[i - 1] + (X[i] - out[i - 1]) / (i + 1)
    return out
