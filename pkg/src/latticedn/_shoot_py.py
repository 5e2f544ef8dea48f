"""Pure-numpy fallback for the RK4 shooting kernel (vectorised over lambda)."""
import numpy as np


def shoot_batch(qnodes, lams):
    """Endpoint values ``(S(1), S'(1), C(1), C'(1))`` for every ``lam``.

    Same contract as the compiled kernel.
    """
    qnodes = np.asarray(qnodes, dtype=np.float64)
    lams = np.asarray(lams, dtype=np.float64)
    n = (qnodes.shape[0] - 1) // 2
    h = 1.0 / n
    hh = 0.5 * h
    h6 = h / 6.0
    # columns: S, C
    y = np.zeros((lams.shape[0], 2))
    p = np.zeros((lams.shape[0], 2))
    y[:, 1] = 1.0
    p[:, 0] = 1.0
    lam = lams[:, None]
    for j in range(n):
        a = qnodes[2 * j] - lam
        b = qnodes[2 * j + 1] - lam
        c = qnodes[2 * j + 2] - lam
        k1y = p
        k1p = a * y
        k2y = p + hh * k1p
        k2p = b * (y + hh * k1y)
        k3y = p + hh * k2p
        k3p = b * (y + hh * k2y)
        k4y = p + h * k3p
        k4p = c * (y + h * k3y)
        y = y + h6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        p = p + h6 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return np.column_stack([y[:, 0], p[:, 0], y[:, 1], p[:, 1]])
