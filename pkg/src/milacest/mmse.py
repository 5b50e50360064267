"""MMSE training over the eigen-directions of a Kronecker-correlated channel.

With ``R_v`` diagonal and the virtual training ``X_v = diag(sqrt(p))`` the
MMSE estimator is diagonal too: entry ``(j, t)`` of ``H_v`` is estimated from
``[U_R^H y_t]_j`` with weight ``sqrt(p_t) r / (sigma2 + p_t r)``.  Folding that
weight into the combiner ``G_t = A_t U_R^H`` lets the receive RF chains read
the estimate column by column.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ConvergenceError, check_positive_float, check_positive_int
from .ls import TrainingSchedule, run_analog_path, source_signal

__all__ = [
    "PowerAllocation",
    "MmseEstimatorDiagonal",
    "allocate_training_power",
    "allocation_objective",
    "check_kkt",
    "uniform_allocation",
    "mmse_weights",
    "design_mmse_training",
    "run_milac_mmse",
    "digital_mmse_baseline",
    "theoretical_mmse",
]

MAX_ITER = 200
INNER_TOL = 1e-12
OUTER_RTOL = 1e-9
KKT_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Powers ``p[t]`` on the transmit eigen-directions and the KKT multiplier."""

    p: np.ndarray
    multiplier: float
    objective: float = float("nan")

    @property
    def active_set(self):
        return np.flatnonzero(self.p > 0)

    @property
    def total(self):
        return float(np.sum(self.p))


def _as_rv_matrix(r_v, tau, n_rx):
    """``r_v`` (column-major, length ``tau * n_rx``) as ``(tau, n_rx)`` rows per slot."""
    r = np.asarray(r_v, dtype=float).ravel()
    if r.size != tau * n_rx:
        raise ValueError(f"r_v has {r.size} entries, expected tau*n_rx = {tau * n_rx}")
    return r.reshape(tau, n_rx)


def allocation_objective(r_v, p, sigma2, n_rx):
    """``sum_t sum_j sigma2 r / (sigma2 + p_t r)`` with ``r = r_v[t*n_rx + j]``."""
    p = np.asarray(p, dtype=float)
    r = _as_rv_matrix(r_v, p.size, n_rx)
    return float(np.sum(sigma2 * r / (sigma2 + p[:, None] * r)))


def _marginal(r, p, sigma2):
    # minus d(objective)/d(p_t); strictly decreasing in p_t
    return np.sum(sigma2 * r**2 / (sigma2 + p[:, None] * r) ** 2, axis=1)


def _powers_for_level(r, mu, sigma2, p_cap):
    """Inner layer: per-direction bisection for ``marginal_t(p_t) = mu``."""
    tau = r.shape[0]
    lo = np.zeros(tau)
    hi = np.full(tau, p_cap)
    at_zero = _marginal(r, lo, sigma2) <= mu
    at_cap = _marginal(r, hi, sigma2) >= mu
    for _ in range(MAX_ITER):
        if np.all(hi - lo < INNER_TOL):
            break
        mid = 0.5 * (lo + hi)
        above = _marginal(r, mid, sigma2) > mu
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    else:
        raise ConvergenceError("inner power bisection did not converge")
    p = 0.5 * (lo + hi)
    p[at_zero] = 0.0
    p[at_cap] = p_cap
    return p


def allocate_training_power(r_v, sigma2, p_total, tau, n_rx):
    """Minimize the MMSE training objective under ``sum(p) <= p_total``.

    Two nested bisections: the outer one on the water level ``mu`` (the KKT
    multiplier of the power constraint), the inner one solving for each
    ``p_t`` given ``mu``.  The objective is decreasing in every ``p_t`` so
    the budget is always spent in full.

    Returns
    -------
    PowerAllocation

    Raises
    ------
    ConvergenceError
        If either bisection exhausts its iteration cap.
    """
    sigma2 = check_positive_float(sigma2, "sigma2")
    p_total = check_positive_float(p_total, "p_total")
    tau = check_positive_int(tau, "tau")
    n_rx = check_positive_int(n_rx, "n_rx")
    r = _as_rv_matrix(r_v, tau, n_rx)
    if np.any(r <= 0):
        raise ValueError("r_v must be strictly positive")

    # mu_hi: every direction is off; mu_lo: every direction would take >= p_total
    mu_hi = float(np.max(_marginal(r, np.zeros(tau), sigma2)))
    mu_lo = float(np.min(_marginal(r, np.full(tau, p_total), sigma2)))
    p = None
    for _ in range(MAX_ITER):
        mu = np.sqrt(mu_lo * mu_hi)
        p = _powers_for_level(r, mu, sigma2, p_total)
        excess = p.sum() - p_total
        if abs(excess) < OUTER_RTOL * p_total:
            break
        if excess > 0:
            mu_lo = mu
        else:
            mu_hi = mu
    else:
        raise ConvergenceError("water-level bisection did not converge")
    # the budget is active at the optimum; snap onto it (a relative move below OUTER_RTOL)
    p = p * (p_total / p.sum())
    # read the multiplier off the active marginals; when a single direction is
    # clipped at p_total the bisection level undershoots it
    mu = float(np.mean(_marginal(r, p, sigma2)[p > 0]))
    return PowerAllocation(p=p, multiplier=mu, objective=allocation_objective(r_v, p, sigma2, n_rx))


def uniform_allocation(tau, p_total, r_v=None, sigma2=None, n_rx=None):
    p = np.full(tau, p_total / tau)
    obj = allocation_objective(r_v, p, sigma2, n_rx) if r_v is not None else float("nan")
    return PowerAllocation(p=p, multiplier=float("nan"), objective=obj)


def check_kkt(alloc, r_v, sigma2, p_total, n_rx, rtol=KKT_RTOL):
    """Return a list of KKT violations (empty when the allocation is certified)."""
    p = np.asarray(alloc.p, dtype=float)
    r = _as_rv_matrix(r_v, p.size, n_rx)
    mu = alloc.multiplier
    problems = []
    if np.any(p < 0):
        problems.append(f"negative power {p.min():.3e}")
    if p.sum() > p_total + 1e-9:
        problems.append(f"budget exceeded: {p.sum()!r} > {p_total!r}")
    if not (np.isfinite(mu) and mu >= 0):
        return problems + [f"invalid multiplier {mu!r}"]
    grad = _marginal(r, p, sigma2)
    for t in range(p.size):
        if p[t] > 0:
            if abs(grad[t] - mu) > rtol * mu:
                problems.append(f"stationarity t={t + 1}: marginal {grad[t]:.12g} vs mu {mu:.12g}")
        elif grad[t] > mu + rtol * mu:
            problems.append(f"complementarity t={t + 1}: marginal at zero {grad[t]:.12g} > mu {mu:.12g}")
    return problems


@dataclass(frozen=True, eq=False)
class MmseEstimatorDiagonal:
    """Diagonal MMSE weights, ``a_diag[t*n_rx + j]``."""

    a_diag: np.ndarray
    n_rx: int

    @property
    def a_matrix(self):
        """Weights as ``(n_rx, tau)``: column ``t`` is the diagonal of ``A_t``."""
        return self.a_diag.reshape(-1, self.n_rx).T

    @property
    def per_slot_blocks(self):
        """``A_t`` stacked as ``(tau, n_rx, n_rx)`` diagonal blocks."""
        a = self.a_diag.reshape(-1, self.n_rx)
        return np.einsum("tj,jk->tjk", a, np.eye(self.n_rx))


def mmse_weights(r_v, alloc, sigma2, n_rx):
    p = np.asarray(alloc.p, dtype=float)
    r = _as_rv_matrix(r_v, p.size, n_rx)
    a = np.sqrt(p)[:, None] * r / (sigma2 + p[:, None] * r)
    return MmseEstimatorDiagonal(a_diag=a.ravel(), n_rx=n_rx)


def design_mmse_training(model, alloc, config, counter=None):
    """MMSE training schedule: ``x_t = sqrt(p_t) u_t`` and ``G_t = A_t U_R^H``.

    Combiner products are charged to ``counter``'s offline phase when given.
    """
    tau, n_tx, n_rx, l_tx = config.tau, config.n_tx, config.n_rx, config.l_tx
    if (model.n_tx, model.n_rx) != (n_tx, n_rx):
        raise ValueError("channel model and config disagree on antenna counts")
    p = np.asarray(alloc.p, dtype=float)
    if p.size != tau:
        raise ValueError(f"allocation has {p.size} powers, expected tau={tau}")
    u_t = model.u_tx
    precoders = np.sqrt(p / (l_tx * config.p_tx))[:, None, None] * u_t.T[:, :, None] * np.ones((1, 1, l_tx))
    weights = mmse_weights(model.r_v, alloc, config.noise_power, n_rx)
    blocks = weights.per_slot_blocks
    u_rh = model.u_rx.conj().T
    if counter is not None:
        combiners = counter.matmul(blocks, u_rh, phase="offline")
    else:
        combiners = blocks @ u_rh
    sources = np.tile(source_signal(config), (tau, 1))
    return TrainingSchedule(precoders, combiners, sources, config.p_tx, "MMSE")


def run_milac_mmse(h, model, schedule, noise, rotate=True):
    """Analog MMSE path: column ``t`` of ``H_v_hat`` is ``z_t``.

    Returns ``(h_v_hat, h_hat)``; ``h_hat = U_R h_v_hat U_T^H`` is an optional
    post-step (``rotate=False`` returns ``None`` in its place).
    """
    if schedule.scheme_tag != "MMSE":
        raise ValueError("run_milac_mmse needs an MMSE schedule")
    h_v_hat = run_analog_path(h, schedule, noise)
    h_hat = model.to_physical(h_v_hat) if rotate else None
    return h_v_hat, h_hat


def digital_mmse_baseline(y, model, alloc, config, counter=None, schedule=None):
    """Digital MMSE estimate of ``H_v`` from the received matrix ``Y``.

    Each slot applies the precomputed ``G_t = A_t U_R^H`` to ``y_t``, i.e.
    the diagonal weights of ``A`` applied to ``U_R^H y_t``; the per-slot
    ``N_R x N_R`` products are charged to ``counter``'s online phase.
    ``y`` may carry a leading trial axis.
    """
    if schedule is None:
        schedule = design_mmse_training(model, alloc, config)
    y = np.asarray(y, dtype=complex)
    if y.shape[-2:] != (config.n_rx, config.tau):
        raise ValueError(f"y must end in shape {(config.n_rx, config.tau)}, got {y.shape}")
    matmul = counter.matmul if counter is not None else np.matmul
    cols = [matmul(schedule.combiners[t], y[..., :, t, None])[..., 0] for t in range(config.tau)]
    return np.stack(cols, axis=-1)


def theoretical_mmse(r_v, alloc, sigma2, n_rx=None):
    """MSE ``sum_k sigma2 r_k / (sigma2 + p_t r_k)`` of the diagonal estimator."""
    p = np.asarray(alloc.p if isinstance(alloc, PowerAllocation) else alloc, dtype=float)
    if n_rx is None:
        n_rx = np.asarray(r_v).size // p.size
    return allocation_objective(r_v, p, sigma2, n_rx)
