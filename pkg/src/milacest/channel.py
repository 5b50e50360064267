"""Correlated MIMO channel statistics and channel sampling.

The channel follows the Kronecker (canonical) model

    H = U_R @ H_v @ U_T^H,

where ``U_T``/``U_R`` hold the eigenvectors of the transmit/receive
correlation matrices and the virtual channel ``H_v`` has independent entries
with variance ``lambda_tx[t] * lambda_rx[j]``.  All vectorizations are
column-major, so entry ``(j, t)`` of ``H_v`` maps to index ``t * n_rx + j``
(0-based) of ``r_v``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    check_coefficient,
    check_hermitian,
    check_positive_float,
    check_positive_int,
    ConfigError,
)

__all__ = [
    "SystemConfig",
    "ChannelModel",
    "ChannelRealization",
    "build_exponential_correlation",
    "eigendecompose_correlation",
    "build_channel_model",
    "sample_channel",
]

DEFAULT_REF_ADMITTANCE = 1.0 / 50.0
_NEG_EIG_CLAMP = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    """Antenna / RF-chain counts and power levels of a training block.

    ``l_rx`` and ``tau`` default to ``n_rx`` and ``n_tx``; other values are
    rejected since the training designs assume exactly one slot per transmit
    antenna and one receive RF chain per receive antenna.
    """

    n_tx: int
    n_rx: int
    l_tx: int = 1
    l_rx: int = None
    tau: int = None
    p_tx: float = 1.0
    noise_power: float = 1.0
    ref_admittance: float = DEFAULT_REF_ADMITTANCE

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "n_tx", check_positive_int(self.n_tx, "n_tx"))
        set_(self, "n_rx", check_positive_int(self.n_rx, "n_rx"))
        set_(self, "l_tx", check_positive_int(self.l_tx, "l_tx"))
        set_(self, "l_rx", self.n_rx if self.l_rx is None else check_positive_int(self.l_rx, "l_rx"))
        set_(self, "tau", self.n_tx if self.tau is None else check_positive_int(self.tau, "tau"))
        set_(self, "p_tx", check_positive_float(self.p_tx, "p_tx"))
        set_(self, "noise_power", check_positive_float(self.noise_power, "noise_power"))
        set_(self, "ref_admittance", check_positive_float(self.ref_admittance, "ref_admittance"))
        if self.l_tx > self.n_tx:
            raise ConfigError("l_tx", f"must be <= n_tx={self.n_tx}, got {self.l_tx}")
        if self.l_rx != self.n_rx:
            raise ConfigError("l_rx", f"only l_rx == n_rx is supported, got {self.l_rx}")
        if self.tau != self.n_tx:
            raise ConfigError("tau", f"only tau == n_tx is supported, got {self.tau}")

    @property
    def snr(self):
        return self.p_tx / self.noise_power


def build_exponential_correlation(n, eps):
    """Exponential correlation matrix with entries ``eps ** |i - j|``."""
    n = check_positive_int(n, "n")
    eps = check_coefficient(eps)
    idx = np.arange(n)
    # 0.0 ** 0 == 1 keeps the eps == 0 case an exact identity
    return np.power(eps, np.abs(idx[:, None] - idx[None, :])).astype(float)


def _normalize_phase(u):
    """Rotate each column so its largest-magnitude entry is real positive.

    Near-ties in magnitude are resolved towards the lowest row index, which
    keeps the choice stable under rounding noise.
    """
    u = np.array(u, dtype=complex)
    mags = np.abs(u)
    for col in range(u.shape[1]):
        m = mags[:, col]
        pivot = int(np.flatnonzero(m >= m.max() * (1 - 1e-9))[0])
        ph = u[pivot, col] / m[pivot]
        u[:, col] *= np.conj(ph)
        u[pivot, col] = m[pivot]
    return u


def eigendecompose_correlation(r):
    """Eigen-decomposition ``r = U diag(lam) U^H`` with a deterministic basis.

    Eigenvalues are sorted in descending order.  Diagonal inputs keep the
    canonical basis (stable ordering, so the identity maps to ``U = I``);
    other inputs have each eigenvector's largest entry made real positive.

    Returns
    -------
    u : ndarray, shape (n, n), complex
    lam : ndarray, shape (n,), float, nonnegative
    """
    r = check_hermitian(r)
    n = r.shape[0]
    offdiag = r - np.diag(np.diag(r))
    if not np.any(offdiag):
        lam = np.real(np.diag(r)).copy()
        order = np.argsort(-lam, kind="stable")
        u = np.eye(n, dtype=complex)[:, order]
        lam = lam[order]
    else:
        lam, u = np.linalg.eigh(0.5 * (r + r.conj().T))
        lam, u = lam[::-1].copy(), u[:, ::-1]
        u = _normalize_phase(u)
    if lam.size and lam.min() < -_NEG_EIG_CLAMP:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    return u, lam


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Second-order statistics of a Kronecker-correlated channel."""

    r_tx: np.ndarray
    r_rx: np.ndarray
    u_tx: np.ndarray
    u_rx: np.ndarray
    lambda_tx: np.ndarray
    lambda_rx: np.ndarray
    r_v: np.ndarray
    eps_tx: float = None
    eps_rx: float = None

    def __post_init__(self):
        for name in ("r_tx", "r_rx", "u_tx", "u_rx", "lambda_tx", "lambda_rx", "r_v"):
            getattr(self, name).setflags(write=False)

    @property
    def n_tx(self):
        return self.lambda_tx.shape[0]

    @property
    def n_rx(self):
        return self.lambda_rx.shape[0]

    @property
    def r_v_matrix(self):
        """``r_v`` reshaped to ``(n_rx, n_tx)``; entry ``(j, t)`` is the variance of ``H_v[j, t]``."""
        return self.r_v.reshape(self.n_tx, self.n_rx).T

    @classmethod
    def from_correlations(cls, r_tx, r_rx, eps_tx=None, eps_rx=None):
        u_tx, lam_tx = eigendecompose_correlation(r_tx)
        u_rx, lam_rx = eigendecompose_correlation(r_rx)
        # column-major vec: index t * n_rx + j  ->  lambda_tx[t] * lambda_rx[j]
        r_v = np.kron(lam_tx, lam_rx)
        if np.any(r_v <= 0):
            raise ValueError("virtual channel correlation must be full rank")
        return cls(
            r_tx=np.asarray(r_tx, dtype=complex),
            r_rx=np.asarray(r_rx, dtype=complex),
            u_tx=u_tx,
            u_rx=u_rx,
            lambda_tx=lam_tx,
            lambda_rx=lam_rx,
            r_v=r_v,
            eps_tx=eps_tx,
            eps_rx=eps_rx,
        )

    def to_physical(self, h_v):
        """Map virtual-domain matrices (or a stack of them) to ``U_R h_v U_T^H``."""
        return self.u_rx @ h_v @ self.u_tx.conj().T

    def to_virtual(self, h):
        return self.u_rx.conj().T @ h @ self.u_tx


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    h_v: np.ndarray
    seed: object = field(default=None)


def build_channel_model(config, eps_tx, eps_rx):
    """Exponential-correlation channel model for the antenna counts in ``config``."""
    r_tx = build_exponential_correlation(config.n_tx, eps_tx)
    r_rx = build_exponential_correlation(config.n_rx, eps_rx)
    return ChannelModel.from_correlations(r_tx, r_rx, eps_tx=float(eps_tx), eps_rx=float(eps_rx))


def draw_virtual_channel(model, rng, size=None):
    """Draw ``H_v`` (or ``size`` of them) from ``rng``.

    Each complex entry is built from two independent real normals of
    variance ``r / 2``.
    """
    shape = (model.n_rx, model.n_tx) if size is None else (size, model.n_rx, model.n_tx)
    re_im = rng.standard_normal((2,) + shape)
    scale = np.sqrt(model.r_v_matrix / 2.0)
    return scale * (re_im[0] + 1j * re_im[1])


def draw_unit_noise(n_rx, tau, rng, size=None):
    """Unit-variance circular complex Gaussian noise, shape ``(n_rx, tau)``."""
    shape = (n_rx, tau) if size is None else (size, n_rx, tau)
    re_im = rng.standard_normal((2,) + shape)
    return np.sqrt(0.5) * (re_im[0] + 1j * re_im[1])


def sample_channel(model, seed):
    """Draw one channel realization; identical ``seed`` gives identical output.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`
    (an int, a sequence of ints or a ``SeedSequence``).
    """
    rng = np.random.default_rng(seed)
    h_v = draw_virtual_channel(model, rng)
    return ChannelRealization(h=model.to_physical(h_v), h_v=h_v, seed=seed)
