"""Least-squares training: MiLAC analog path and the digital DFT baseline."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_batch, check_matrix

__all__ = [
    "TrainingSlot",
    "TrainingSchedule",
    "TrainingBatch",
    "source_signal",
    "design_ls_training",
    "simulate_training_slot",
    "collect_training",
    "run_milac_ls",
    "dft_training_matrix",
    "identity_training_matrix",
    "digital_ls_baseline",
]


class TrainingSlot(NamedTuple):
    precoder: np.ndarray  # F_t, (n_tx, l_tx)
    combiner: np.ndarray  # G_t, (l_rx, n_rx)
    source: np.ndarray  # c_t, (l_tx,)


@dataclass(frozen=True, eq=False)
class TrainingSchedule:
    """Per-slot precoders, combiners and source signals for one training block.

    Arrays are stacked along a leading slot axis: ``precoders[t]`` is
    ``F_t`` and so on.
    """

    precoders: np.ndarray
    combiners: np.ndarray
    sources: np.ndarray
    p_tx: float
    scheme_tag: str

    def __post_init__(self):
        if self.scheme_tag not in ("LS", "MMSE"):
            raise ValueError(f"scheme_tag must be 'LS' or 'MMSE', got {self.scheme_tag!r}")
        tau = self.precoders.shape[0]
        if self.combiners.shape[0] != tau or self.sources.shape[0] != tau:
            raise ValueError("precoders, combiners and sources must cover the same slots")
        budget = self.precoder_energy
        if budget > 1 + 1e-12:
            raise ValueError(f"sum of ||F_t||_F^2 is {budget!r} > 1")
        src_pow = np.sum(np.abs(self.sources) ** 2, axis=1)
        if np.max(np.abs(src_pow - self.p_tx)) > 1e-12 * max(1.0, self.p_tx):
            raise ValueError("every source signal must carry power p_tx")
        for a in (self.precoders, self.combiners, self.sources):
            a.setflags(write=False)

    def __len__(self):
        return self.precoders.shape[0]

    def __getitem__(self, t):
        return TrainingSlot(self.precoders[t], self.combiners[t], self.sources[t])

    def __iter__(self):
        return (self[t] for t in range(len(self)))

    @property
    def precoder_energy(self):
        return float(np.sum(np.abs(self.precoders) ** 2))

    @property
    def training_matrix(self):
        """``X`` with columns ``x_t = F_t c_t``, shape ``(n_tx, tau)``."""
        return np.einsum("tnl,tl->nt", self.precoders, self.sources)

    @property
    def source_matrix(self):
        """Source signals as ``(l_tx, tau)``; row ``i`` is RF chain ``i`` over time."""
        return self.sources.T


@dataclass(frozen=True, eq=False)
class TrainingBatch:
    x: np.ndarray
    y: np.ndarray
    n: np.ndarray
    z: np.ndarray


def source_signal(config):
    """Constant source ``sqrt(P_T / L_T) * 1``: unit PAPR on every RF chain."""
    return np.full(config.l_tx, np.sqrt(config.p_tx / config.l_tx), dtype=complex)


def design_ls_training(config):
    """MiLAC LS training: slot ``t`` sends ``sqrt(P_T/N_T) e_t`` and reads column ``t``.

    ``F_t = sqrt(1/(L_T N_T)) e_t 1^T`` and ``G_t = sqrt(N_T/P_T) I``.
    """
    n_tx, l_tx, tau = config.n_tx, config.l_tx, config.tau
    if tau != n_tx:
        raise ValueError(f"LS training needs tau == n_tx, got tau={tau}, n_tx={n_tx}")
    precoders = np.zeros((tau, n_tx, l_tx), dtype=complex)
    scale = np.sqrt(1.0 / (l_tx * n_tx))
    for t in range(tau):
        precoders[t, t, :] = scale
    g = np.sqrt(n_tx / config.p_tx) * np.eye(config.n_rx, dtype=complex)
    combiners = np.broadcast_to(g, (tau,) + g.shape).copy()
    sources = np.tile(source_signal(config), (tau, 1))
    return TrainingSchedule(precoders, combiners, sources, config.p_tx, "LS")


def _channel_array(h):
    return getattr(h, "h", h)


def simulate_training_slot(h, slot, noise_t):
    """Signal at the receive RF chains in one slot, ``G_t (H F_t c_t + n_t)``.

    Only slot-local quantities are touched.  ``h`` may be a
    :class:`~milacest.channel.ChannelRealization`, an ``(N_R, N_T)`` matrix
    or a stack ``(n, N_R, N_T)``; ``noise_t`` is ``(N_R,)`` or ``(n, N_R)``
    accordingly.
    """
    f, g, c = slot
    n_tx = f.shape[0]
    n_rx = g.shape[1]
    hb, squeeze = check_batch(_channel_array(h), "h", (n_rx, n_tx))
    nb = np.asarray(noise_t, dtype=complex)
    if nb.shape[-1] != n_rx:
        raise ValueError(f"noise_t must have length {n_rx}, got shape {nb.shape}")
    x_t = f @ c
    y_t = hb @ x_t + nb
    z_t = y_t @ g.T
    return z_t[0] if squeeze else z_t


def collect_training(h, schedule, noise):
    """Run every slot and return the full :class:`TrainingBatch` (single realization)."""
    hm = check_matrix(_channel_array(h), "h")
    x = schedule.training_matrix
    noise = check_matrix(noise, "noise", shape=(hm.shape[0], len(schedule)))
    z = np.column_stack([simulate_training_slot(hm, schedule[t], noise[:, t]) for t in range(len(schedule))])
    return TrainingBatch(x=x, y=hm @ x + noise, n=noise, z=z)


def run_analog_path(h, schedule, noise):
    """Column-stack ``z_t`` over all slots; no arithmetic touches ``z_t``.

    Handles single realizations (``noise`` of shape ``(N_R, tau)``) and stacks
    (``(n, N_R, tau)``).
    """
    noise = np.asarray(noise, dtype=complex)
    cols = [simulate_training_slot(h, schedule[t], noise[..., t]) for t in range(len(schedule))]
    return np.stack(cols, axis=-1)


def run_milac_ls(h, schedule, noise):
    """LS estimate read directly off the receive RF chains, one column per slot."""
    if schedule.scheme_tag != "LS":
        raise ValueError("run_milac_ls needs an LS schedule")
    return run_analog_path(h, schedule, noise)


def dft_training_matrix(config):
    """Scaled DFT training ``X = sqrt(P_T / N_T^2) * DFT`` with ``X X^H = (P_T/N_T) I``."""
    n_tx = config.n_tx
    if config.tau != n_tx:
        raise ValueError("DFT training needs tau == n_tx")
    k = np.arange(n_tx)
    dft = np.exp(-2j * np.pi * np.outer(k, k) / n_tx)
    return np.sqrt(config.p_tx / n_tx**2) * dft


def identity_training_matrix(config):
    """``sqrt(P_T / N_T) I``: the geometry used by MiLAC LS."""
    return np.sqrt(config.p_tx / config.n_tx) * np.eye(config.n_tx, dtype=complex)


def ls_combining_matrix(x):
    """Offline part of LS, ``X^H (X X^H)^{-1}``."""
    x = check_matrix(x, "x")
    gram = x @ x.conj().T
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise np.linalg.LinAlgError("training matrix is rank deficient")
    return np.linalg.solve(gram, x).conj().T


def digital_ls_baseline(y, x, counter=None, combining=None):
    """Digital LS estimate ``Y X^H (X X^H)^{-1}``.

    When ``X X^H`` is a scaled identity (all optimal designs) the estimate is
    ``(Y X^H) * scale`` and only the product ``Y X^H`` is charged to
    ``counter``'s online phase; otherwise the full product with the
    precomputed combining matrix is charged.  ``y`` may carry a leading trial
    axis.
    """
    x = check_matrix(x, "x")
    n_tx, tau = x.shape
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != tau:
        raise ValueError(f"y has {y.shape[-1]} slots, training matrix has {tau}")
    gram = x @ x.conj().T
    scale = gram[0, 0].real
    matmul = counter.matmul if counter is not None else np.matmul
    if np.allclose(gram, scale * np.eye(n_tx), rtol=0, atol=1e-12 * max(scale, 1.0)) and scale > 0:
        # scalar rescale of the product; not charged, as in the usual cost model
        return matmul(y, x.conj().T) * (1.0 / scale)
    if combining is None:
        combining = ls_combining_matrix(x)
    return matmul(y, combining)
