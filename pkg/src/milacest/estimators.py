"""Scikit-learn style wrappers around the training designs.

``fit`` performs the offline part (training design, power allocation,
admittance synthesis); ``transform`` maps received antenna signals ``Y``
(``(N_R, tau)`` or a stack ``(n, N_R, tau)``) to channel estimates.  MiLAC
estimators additionally expose :meth:`acquire`, which simulates the analog
slots from the channel and the noise directly.

>>> est = MilacLSEstimator(n_tx=4, n_rx=4).fit()
>>> est.get_params()["n_tx"]
4
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_batch
from .channel import ChannelModel, SystemConfig, build_channel_model
from .ls import (
    design_ls_training,
    dft_training_matrix,
    digital_ls_baseline,
    identity_training_matrix,
    ls_combining_matrix,
    run_analog_path,
)
from .metrics import OpCounter
from .mmse import (
    allocate_training_power,
    design_mmse_training,
    digital_mmse_baseline,
    mmse_weights,
    theoretical_mmse,
)
from .network import admittance_for_combiner, admittance_for_precoder

__all__ = [
    "MilacLSEstimator",
    "DigitalLSEstimator",
    "MilacMMSEEstimator",
    "DigitalMMSEEstimator",
    "make_estimator",
]


class _ChannelEstimatorBase(BaseEstimator, TransformerMixin):
    scheme = None

    def _config(self):
        return SystemConfig(
            n_tx=self.n_tx,
            n_rx=self.n_rx,
            l_tx=self.l_tx,
            p_tx=self.p_tx,
            noise_power=self.noise_power,
            ref_admittance=self.ref_admittance,
        )

    def _check_y(self, y):
        check_is_fitted(self, "config_")
        return check_batch(y, "Y", (self.config_.n_rx, self.config_.tau))

    def _check_h_noise(self, h, noise):
        check_is_fitted(self, "config_")
        cfg = self.config_
        hb, squeeze = check_batch(h, "H", (cfg.n_rx, cfg.n_tx))
        nb, _ = check_batch(noise, "noise", (cfg.n_rx, cfg.tau))
        if nb.shape[0] != hb.shape[0]:
            raise ValueError(f"H and noise batch sizes differ: {hb.shape[0]} vs {nb.shape[0]}")
        return hb, nb, squeeze

    def received(self, h, noise):
        """Antenna-domain received matrix ``Y = H X + N``."""
        hb, nb, squeeze = self._check_h_noise(h, noise)
        y = hb @ self.training_matrix_ + nb
        return y[0] if squeeze else y


class _MilacMixin:
    def _synthesize_networks(self):
        y0 = self.config_.ref_admittance
        self.precoder_networks_ = [admittance_for_precoder(f, y0) for f in self.schedule_.precoders]
        self.combiner_networks_ = [admittance_for_combiner(g, y0) for g in self.schedule_.combiners]

    def transform(self, Y, counter=None):
        """Apply the slot combiners to the received columns, ``z_t = G_t y_t``.

        This is the receiver-side MiLAC acting on ``y_t``; nothing is charged
        to ``counter``.
        """
        yb, squeeze = self._check_y(Y)
        z = np.einsum("tij,njt->nit", self.schedule_.combiners, yb)
        return z[0] if squeeze else z

    def acquire(self, h, noise, counter=None):
        """Simulate every training slot and column-stack the RF-chain outputs."""
        hb, nb, squeeze = self._check_h_noise(h, noise)
        z = run_analog_path(hb, self.schedule_, nb)
        return z[0] if squeeze else z

    @property
    def source_signals_(self):
        return self.schedule_.source_matrix


class MilacLSEstimator(_MilacMixin, _ChannelEstimatorBase):
    """LS channel estimation carried out by the transmitter/receiver MiLACs.

    Parameters
    ----------
    n_tx, n_rx : int
        Transmit and receive antenna counts.
    p_tx : float
        Total transmit power.
    noise_power : float
        Noise variance (unused by LS; kept so every scheme shares a config).
    l_tx : int
        Transmit RF chains; one suffices.
    ref_admittance : float
        ``Y0 = 1 / Z0`` in siemens.

    Attributes
    ----------
    schedule_ : TrainingSchedule
    training_matrix_ : ndarray, shape (n_tx, n_tx)
    precoder_networks_, combiner_networks_ : list of MilacNetwork
    """

    scheme = "milac-ls"
    domain = "physical"

    def __init__(self, n_tx=16, n_rx=16, p_tx=1.0, noise_power=1.0, l_tx=1, ref_admittance=1 / 50):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.p_tx = p_tx
        self.noise_power = noise_power
        self.l_tx = l_tx
        self.ref_admittance = ref_admittance

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.schedule_ = design_ls_training(self.config_)
        self.training_matrix_ = self.schedule_.training_matrix
        self._synthesize_networks()
        return self


class DigitalLSEstimator(_ChannelEstimatorBase):
    """Conventional LS with a digitally generated training matrix.

    ``training="dft"`` (default) uses the scaled DFT matrix; ``"identity"``
    reproduces the MiLAC geometry digitally.
    """

    scheme = "digital-ls"
    domain = "physical"

    def __init__(self, n_tx=16, n_rx=16, p_tx=1.0, noise_power=1.0, training="dft"):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.p_tx = p_tx
        self.noise_power = noise_power
        self.training = training

    def _config(self):
        return SystemConfig(n_tx=self.n_tx, n_rx=self.n_rx, l_tx=self.n_tx, p_tx=self.p_tx, noise_power=self.noise_power)

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        if self.training == "dft":
            self.training_matrix_ = dft_training_matrix(self.config_)
        elif self.training == "identity":
            self.training_matrix_ = identity_training_matrix(self.config_)
        else:
            raise ValueError(f"training must be 'dft' or 'identity', got {self.training!r}")
        self.combining_matrix_ = ls_combining_matrix(self.training_matrix_)
        return self

    def transform(self, Y, counter=None):
        yb, squeeze = self._check_y(Y)
        h = digital_ls_baseline(yb, self.training_matrix_, counter=counter, combining=self.combining_matrix_)
        return h[0] if squeeze else h

    def acquire(self, h, noise, counter=None):
        return self.transform(self.received(h, noise), counter=counter)


class _MmseBase(_ChannelEstimatorBase):
    domain = "virtual"

    def __init__(self, n_tx=16, n_rx=16, p_tx=1.0, noise_power=1.0, eps_tx=0.8, eps_rx=0.8,
                 l_tx=1, ref_admittance=1 / 50, channel_model=None):
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.p_tx = p_tx
        self.noise_power = noise_power
        self.eps_tx = eps_tx
        self.eps_rx = eps_rx
        self.l_tx = l_tx
        self.ref_admittance = ref_admittance
        self.channel_model = channel_model

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        cfg = self.config_
        if self.channel_model is not None:
            if not isinstance(self.channel_model, ChannelModel):
                raise TypeError("channel_model must be a ChannelModel")
            self.model_ = self.channel_model
        else:
            self.model_ = build_channel_model(cfg, self.eps_tx, self.eps_rx)
        self.offline_ops_ = OpCounter()
        self.allocation_ = allocate_training_power(self.model_.r_v, cfg.noise_power, cfg.p_tx, cfg.tau, cfg.n_rx)
        self.weights_ = mmse_weights(self.model_.r_v, self.allocation_, cfg.noise_power, cfg.n_rx)
        self.schedule_ = design_mmse_training(self.model_, self.allocation_, cfg, counter=self.offline_ops_)
        self.training_matrix_ = self.schedule_.training_matrix
        self.mse_ = theoretical_mmse(self.model_.r_v, self.allocation_, cfg.noise_power, cfg.n_rx)
        return self

    def to_physical(self, h_v):
        check_is_fitted(self, "model_")
        return self.model_.to_physical(h_v)


class MilacMMSEEstimator(_MilacMixin, _MmseBase):
    """MMSE estimation of the virtual channel performed by the MiLACs.

    Outputs live in the virtual (eigen) domain; :meth:`to_physical` applies
    the final rotation ``U_R H_v U_T^H``.

    Attributes
    ----------
    model_ : ChannelModel
    allocation_ : PowerAllocation
    weights_ : MmseEstimatorDiagonal
    schedule_ : TrainingSchedule
    mse_ : float
        Theoretical MSE of the estimator.
    """

    scheme = "milac-mmse"

    def fit(self, X=None, y=None):
        super().fit(X, y)
        self._synthesize_networks()
        return self


class DigitalMMSEEstimator(_MmseBase):
    """Digital MMSE: the same estimate, computed from ``Y`` in software."""

    scheme = "digital-mmse"

    def _config(self):
        return SystemConfig(n_tx=self.n_tx, n_rx=self.n_rx, l_tx=self.n_tx, p_tx=self.p_tx,
                            noise_power=self.noise_power, ref_admittance=self.ref_admittance)

    def fit(self, X=None, y=None):
        super().fit(X, y)
        return self

    def transform(self, Y, counter=None):
        yb, squeeze = self._check_y(Y)
        h_v = digital_mmse_baseline(yb, self.model_, self.allocation_, self.config_, counter=counter,
                                    schedule=self.schedule_)
        return h_v[0] if squeeze else h_v

    def acquire(self, h, noise, counter=None):
        return self.transform(self.received(h, noise), counter=counter)


_REGISTRY = {
    "milac-ls": MilacLSEstimator,
    "digital-ls": DigitalLSEstimator,
    "milac-mmse": MilacMMSEEstimator,
    "digital-mmse": DigitalMMSEEstimator,
}


def make_estimator(scheme, **params):
    """Build an (unfitted) estimator by scheme label, dropping parameters it does not take."""
    try:
        cls = _REGISTRY[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {sorted(_REGISTRY)}") from None
    accepted = cls._get_param_names()
    return cls(**{k: v for k, v in params.items() if k in accepted})
