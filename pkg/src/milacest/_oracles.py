"""Slow dense reference computations.

These deliberately avoid the structure the fast paths exploit (explicit
inverses, explicit Kronecker products, brute-force search) and exist only to
cross-check them in ``verify`` and in the test-suite.
"""

import numpy as np


def dense_inverse_block(admittance, y0, rows, cols):
    """Block of ``inv(Y/Y0 + I)`` through an explicit full inverse."""
    m = np.asarray(admittance) / y0 + np.eye(len(admittance))
    return np.linalg.inv(m)[np.ix_(rows, cols)]


def dense_mmse_estimate(y, model, p, sigma2):
    """MMSE estimate of ``vec(H_v)`` with ``W = X_v^T kron I`` built explicitly.

    ``y`` is the received matrix ``(N_R, tau)``; returns ``H_v_hat`` as
    ``(N_R, N_T)``.
    """
    n_rx = model.n_rx
    tau = len(p)
    x_v = np.diag(np.sqrt(np.asarray(p, dtype=float))).astype(complex)
    w = np.kron(x_v.T, np.eye(n_rx))
    r_v = np.diag(model.r_v).astype(complex)
    y_v = model.u_rx.conj().T @ y
    y_vec = y_v.reshape(-1, order="F")
    cov = w @ r_v @ w.conj().T + sigma2 * np.eye(tau * n_rx)
    a = r_v @ w.conj().T @ np.linalg.inv(cov)
    return (a @ y_vec).reshape(n_rx, model.n_tx, order="F")


def dense_mmse_mse(model, p, sigma2):
    """``tr((R_v^{-1} + W^H W / sigma2)^{-1})`` with dense matrices."""
    n_rx = model.n_rx
    x_v = np.diag(np.sqrt(np.asarray(p, dtype=float)))
    w = np.kron(x_v.T, np.eye(n_rx))
    info = np.diag(1.0 / model.r_v) + w.conj().T @ w / sigma2
    return float(np.real(np.trace(np.linalg.inv(info))))


def brute_force_two_direction(r_v, sigma2, p_total, n_rx, grid=20001, refine=80):
    """Grid search over ``p_1 in [0, p_total]`` (``p_2 = p_total - p_1``) then golden-section refinement."""
    r = np.asarray(r_v, dtype=float).reshape(2, n_rx)

    def obj(p1):
        p = np.array([p1, p_total - p1])
        return float(np.sum(sigma2 * r / (sigma2 + p[:, None] * r)))

    xs = np.linspace(0.0, p_total, grid)
    vals = [obj(x) for x in xs]
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    for _ in range(refine):
        if obj(c) < obj(d):
            b = d
        else:
            a = c
        c, d = b - g * (b - a), a + g * (b - a)
    p1 = 0.5 * (a + b)
    return np.array([p1, p_total - p1]), obj(p1)
