"""NMSE, PAPR and real-operation accounting.

Cost model: a complex addition/subtraction costs 2 real operations and a
complex multiplication 6.  An ``(M x N) @ (N x L)`` complex product is
reported with the usual ``8 L M N`` approximation; the exact count
``L M (6N + 2(N - 1))`` is tracked alongside.
"""

import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "COST_CADD",
    "COST_CMUL",
    "OpCounter",
    "matmul_ops",
    "nmse",
    "nmse_stats",
    "complexity_report",
    "PaprReport",
    "papr",
    "papr_report",
    "SCHEMES",
]

COST_CADD = 2
COST_CMUL = 6

SCHEMES = ("milac-ls", "digital-ls", "milac-mmse", "digital-mmse")


def matmul_ops(m, n, l):
    """(approximate, exact) real-op counts of an ``(m x n) @ (n x l)`` product."""
    m, n, l = int(m), int(n), int(l)
    approx = 8 * l * m * n
    exact = l * m * (COST_CMUL * n + COST_CADD * (n - 1))
    return approx, exact


class OpCounter:
    """Tallies real operations per labelled phase (``"online"``/``"offline"``).

    Digital paths route their arithmetic on received data through
    :meth:`matmul` so the charge is recorded where it is spent.  Counters are
    cheap and meant to be created per trial (or per batch) and merged with
    ``+``.
    """

    def __init__(self):
        self.approx = defaultdict(int)
        self.exact = defaultdict(int)

    def charge(self, phase, approx, exact=None):
        self.approx[phase] += int(approx)
        self.exact[phase] += int(approx if exact is None else exact)

    def matmul(self, a, b, phase="online"):
        """Return ``a @ b`` and charge it; leading axes count as separate products."""
        out = np.matmul(a, b)
        a_ = np.asarray(a)
        b_ = np.asarray(b)
        m, n = a_.shape[-2:]
        l = 1 if b_.ndim == 1 else b_.shape[-1]
        reps = int(np.prod(out.shape[:-2] if b_.ndim > 1 else out.shape[:-1], dtype=np.int64))
        approx, exact = matmul_ops(m, n, l)
        self.charge(phase, reps * approx, reps * exact)
        return out

    @property
    def online(self):
        return self.approx.get("online", 0)

    @property
    def offline(self):
        return self.approx.get("offline", 0)

    def __add__(self, other):
        merged = OpCounter()
        for src in (self, other):
            for k, v in src.approx.items():
                merged.approx[k] += v
            for k, v in src.exact.items():
                merged.exact[k] += v
        return merged

    def __repr__(self):
        return f"OpCounter(approx={dict(self.approx)}, exact={dict(self.exact)})"


def nmse(h_true, h_est):
    """Ratio-of-means NMSE, ``sum ||H - H_hat||^2 / sum ||H||^2``.

    Accepts single matrices or stacks of matrices (leading trial axis).
    """
    return nmse_stats(h_true, h_est)[0]


def nmse_stats(h_true, h_est):
    """NMSE and its delta-method Monte Carlo standard error.

    Returns ``(value, stderr, n_trials)``.
    """
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch: {h_true.shape} vs {h_est.shape}")
    if h_true.ndim == 2:
        h_true, h_est = h_true[None], h_est[None]
    err = np.sum(np.abs(h_true - h_est) ** 2, axis=(-2, -1))
    pwr = np.sum(np.abs(h_true) ** 2, axis=(-2, -1))
    return ratio_of_means(err, pwr)


def ratio_of_means(num, den):
    num = np.asarray(num, dtype=float).ravel()
    den = np.asarray(den, dtype=float).ravel()
    mean_den = den.mean()
    if not mean_den > 0:
        raise ZeroDivisionError("degenerate trial set: zero channel energy")
    ratio = num.mean() / mean_den
    n = num.size
    if n > 1:
        resid = num - ratio * den
        stderr = float(np.sqrt(resid.var(ddof=1) / n) / mean_den)
    else:
        stderr = 0.0
    return float(ratio), stderr, n


def complexity_report(config, scheme):
    """Online real-operation count per coherence block (exact integers)."""
    tau, n_rx, n_tx = int(config.tau), int(config.n_rx), int(config.n_tx)
    if scheme == "digital-ls":
        # Y @ X^H: (N_R x tau) @ (tau x N_T)
        return 8 * tau * n_rx * n_tx
    if scheme == "digital-mmse":
        # G_t @ y_t for each slot: (N_R x N_R) @ (N_R x 1)
        return 8 * tau * n_rx * n_rx
    if scheme in ("milac-ls", "milac-mmse"):
        return 0
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def exact_complexity(config, scheme):
    """Exact counterpart of :func:`complexity_report` under the 2/6 cost model."""
    tau, n_rx, n_tx = int(config.tau), int(config.n_rx), int(config.n_tx)
    if scheme == "digital-ls":
        return matmul_ops(n_rx, tau, n_tx)[1]
    if scheme == "digital-mmse":
        return tau * matmul_ops(n_rx, n_rx, 1)[1]
    if scheme in ("milac-ls", "milac-mmse"):
        return 0
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def papr(signals):
    """Per-chain PAPR ``max_t |s|^2 / mean_t |s|^2`` of a ``(chains, slots)`` array.

    All-zero chains yield ``nan``.
    """
    s = np.atleast_2d(np.asarray(signals))
    power = np.abs(s) ** 2
    mean = power.mean(axis=1)
    peak = power.max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(mean > 0, peak / np.where(mean > 0, mean, 1.0), np.nan)
    return out


@dataclass
class PaprReport:
    scheme: str
    values: np.ndarray
    zero_chains: int = 0
    note: str = ""
    supplementary: bool = False

    @property
    def max(self):
        v = self.values[np.isfinite(self.values)]
        return float(v.max()) if v.size else float("nan")

    @property
    def mean(self):
        v = self.values[np.isfinite(self.values)]
        return float(v.mean()) if v.size else float("nan")


def papr_report(signals, scheme, note="", supplementary=False):
    """PAPR of each chain in ``signals`` (rows = chains, columns = slots).

    For MiLAC schemes pass the source signals ``c_t`` stacked as columns; for
    digital schemes pass the training matrix ``X`` (rows = antennas).  Chains
    that are identically zero are excluded and counted in ``zero_chains``.
    """
    values = papr(signals)
    zero = int(np.sum(~np.isfinite(values)))
    if zero:
        warnings.warn(f"{scheme}: {zero} all-zero chain(s) excluded from PAPR", RuntimeWarning, stacklevel=2)
    return PaprReport(scheme=scheme, values=values, zero_chains=zero, note=note, supplementary=supplementary)
