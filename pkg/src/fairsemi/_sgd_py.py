"""Pure-numpy SGD kernel and loss/gradient helpers.

``sgd_epoch`` is the fallback used when the compiled ``_sgd`` extension is
unavailable; both take identical arguments and follow the same update rule.
"""
import numpy as np


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _dloss(z, y, hinge):
    if hinge:
        s = 2.0 * y - 1.0
        return np.where(s * z < 1.0, -s, 0.0)
    return _sigmoid(z) - y


def sgd_epoch(X, y, w, b, order, lr, l2, batch_size, hinge):
    """One pass over ``order`` in mini-batches; updates ``w`` in place, returns ``b``."""
    n = order.shape[0]
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        Xb = X[idx]
        g = _dloss(Xb @ w + b, y[idx], hinge)
        m = idx.shape[0]
        w -= lr * (Xb.T @ g / m + l2 * w)
        b = b - lr * (g.sum() / m)
    return b


def loss_value(X, y, w, b, l2, hinge):
    z = X @ w + b
    s = 2.0 * y - 1.0
    if hinge:
        data = np.maximum(0.0, 1.0 - s * z)
    else:
        data = np.logaddexp(0.0, -s * z)
    return float(data.mean() + 0.5 * l2 * (w @ w))


def loss_gradient(X, y, w, b, l2, hinge):
    """Gradient of :func:`loss_value` with respect to ``(w, b)``."""
    g = _dloss(X @ w + b, y, hinge)
    return X.T @ g / X.shape[0] + l2 * w, float(g.mean())
