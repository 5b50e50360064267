import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from milacest import (
    DigitalLSEstimator,
    DigitalMMSEEstimator,
    MilacLSEstimator,
    MilacMMSEEstimator,
    OpCounter,
    SystemConfig,
    build_channel_model,
    make_estimator,
)
from milacest.channel import draw_unit_noise, draw_virtual_channel
from milacest.network import combiner_from_admittance, precoder_from_admittance

ALL = [MilacLSEstimator, DigitalLSEstimator, MilacMMSEEstimator, DigitalMMSEEstimator]


@pytest.mark.parametrize("cls", ALL)
def test_params_round_trip(cls):
    est = cls(n_tx=4, n_rx=3)
    params = est.get_params()
    assert params["n_tx"] == 4 and params["n_rx"] == 3
    twin = clone(est).set_params(p_tx=2.0)
    assert twin.p_tx == 2.0 and est.p_tx == 1.0


@pytest.mark.parametrize("cls", ALL)
def test_not_fitted(cls):
    with pytest.raises(NotFittedError):
        cls(n_tx=2, n_rx=2).transform(np.zeros((2, 2)))


@pytest.mark.parametrize("cls", ALL)
def test_shapes_single_and_batch(cls, rng):
    est = cls(n_tx=4, n_rx=3, noise_power=0.1).fit()
    y = rng.standard_normal((5, 3, 4)) + 0j
    assert est.transform(y).shape == (5, 3, 4)
    assert est.transform(y[0]).shape == (3, 4)
    with pytest.raises(ValueError):
        est.transform(np.zeros((4, 3)))


def test_fit_transform_matches(rng):
    y = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    est = DigitalLSEstimator(n_tx=4, n_rx=3)
    np.testing.assert_allclose(est.fit_transform(y), est.transform(y))


def test_milac_transform_equals_slot_simulation(rng):
    cfg = SystemConfig(n_tx=6, n_rx=5, noise_power=0.2)
    model = build_channel_model(cfg, 0.8, 0.4)
    h = model.to_physical(draw_virtual_channel(model, rng, size=10))
    n = np.sqrt(0.2) * draw_unit_noise(5, 6, rng, size=10)
    for cls in (MilacLSEstimator, MilacMMSEEstimator):
        est = cls(n_tx=6, n_rx=5, noise_power=0.2, channel_model=model) if cls is MilacMMSEEstimator else cls(n_tx=6, n_rx=5)
        est.fit()
        y = est.received(h, n)
        assert np.max(np.abs(est.transform(y) - est.acquire(h, n))) <= 1e-12


def test_networks_realize_schedule():
    est = MilacMMSEEstimator(n_tx=4, n_rx=3, noise_power=0.3).fit()
    for t in range(4):
        f = precoder_from_admittance(est.precoder_networks_[t]).matrix
        g = combiner_from_admittance(est.combiner_networks_[t]).matrix
        assert np.max(np.abs(f - est.schedule_.precoders[t])) <= 1e-12
        assert np.max(np.abs(g - est.schedule_.combiners[t])) <= 1e-12


def test_online_counts(rng):
    h = rng.standard_normal((2, 8, 4)) + 0j
    n = rng.standard_normal((2, 8, 4)) + 0j
    for scheme, expected in [("milac-ls", 0), ("milac-mmse", 0), ("digital-ls", 8 * 4 * 8 * 4), ("digital-mmse", 8 * 4 * 8 * 8)]:
        counter = OpCounter()
        make_estimator(scheme, n_tx=4, n_rx=8, noise_power=0.1).fit().acquire(h, n, counter=counter)
        assert counter.online == 2 * expected, scheme


def test_mmse_theoretical_attribute():
    est = DigitalMMSEEstimator(n_tx=4, n_rx=4, noise_power=0.1, eps_tx=0.0, eps_rx=0.0).fit()
    assert est.mse_ == pytest.approx(16 * 0.1 / (0.1 + 0.25), rel=1e-9)


def test_make_estimator_unknown():
    with pytest.raises(ValueError):
        make_estimator("analog-zf")


def test_bad_training_option():
    with pytest.raises(ValueError):
        DigitalLSEstimator(n_tx=2, n_rx=2, training="chirp").fit()
