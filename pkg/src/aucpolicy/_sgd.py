"""Compiled SGD inner loops. Sample indices are drawn by the caller so the
random stream stays in numpy and results are reproducible bit for bit."""
import math

import numpy as np
from numba import njit

LOGISTIC = 0
HINGE = 1


@njit(cache=True)
def dloss(t, kind):
    if kind == LOGISTIC:
        if t >= 0.0:
            e = math.exp(-t)
            return -e / (1.0 + e)
        return -1.0 / (1.0 + math.exp(t))
    return -1.0 if t < 1.0 else 0.0


@njit(cache=True)
def pairwise_sgd(P, N, pos_idx, neg_idx, lam, eta0, kind):
    d = P.shape[1]
    w = np.zeros(d)
    diff = np.empty(d)
    for k in range(pos_idx.shape[0]):
        eta = eta0 / math.sqrt(k + 1.0)
        xp = P[pos_idx[k]]
        xn = N[neg_idx[k]]
        t = 0.0
        for j in range(d):
            diff[j] = xp[j] - xn[j]
            t += w[j] * diff[j]
        g = dloss(t, kind)
        for j in range(d):
            w[j] -= eta * (g * diff[j] + lam * w[j])
    return w


@njit(cache=True)
def pointwise_sgd(X, y, idx, lam, eta0, kind):
    """Last column of ``X`` is the constant bias feature and is not penalized."""
    d = X.shape[1]
    w = np.zeros(d)
    for k in range(idx.shape[0]):
        eta = eta0 / math.sqrt(k + 1.0)
        i = idx[k]
        t = 0.0
        for j in range(d):
            t += w[j] * X[i, j]
        t *= y[i]
        g = dloss(t, kind) * y[i]
        for j in range(d - 1):
            w[j] -= eta * (g * X[i, j] + lam * w[j])
        w[d - 1] -= eta * g * X[i, d - 1]
    return w
