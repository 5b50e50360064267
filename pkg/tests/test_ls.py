import numpy as np
import pytest

from milacest import (
    OpCounter,
    SystemConfig,
    build_channel_model,
    collect_training,
    design_ls_training,
    dft_training_matrix,
    digital_ls_baseline,
    run_milac_ls,
    sample_channel,
    simulate_training_slot,
)
from milacest.ls import TrainingSchedule, identity_training_matrix
from milacest.metrics import papr


def _noise(rng, shape, sigma2=1.0):
    return np.sqrt(sigma2 / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class TestDesign:
    def test_training_matrix_n4(self):
        sched = design_ls_training(SystemConfig(n_tx=4, n_rx=2, l_tx=1, p_tx=1.0))
        np.testing.assert_allclose(sched.training_matrix, 0.5 * np.eye(4), atol=1e-15)

    @pytest.mark.parametrize("n_tx, l_tx, p_tx", [(1, 1, 1.0), (4, 2, 3.0), (16, 1, 1.0), (9, 9, 0.2)])
    def test_energy_and_orthogonality(self, n_tx, l_tx, p_tx):
        cfg = SystemConfig(n_tx=n_tx, n_rx=3, l_tx=l_tx, p_tx=p_tx)
        sched = design_ls_training(cfg)
        assert abs(sched.precoder_energy - 1) <= 1e-12
        for f in sched.precoders:
            assert np.sum(np.abs(f) ** 2) == pytest.approx(1 / n_tx, rel=1e-12)
        x = sched.training_matrix
        assert np.max(np.abs(x @ x.conj().T - p_tx / n_tx * np.eye(n_tx))) < 1e-10
        assert np.sum(np.abs(x) ** 2) <= p_tx + 1e-9
        np.testing.assert_allclose(np.sum(np.abs(sched.sources) ** 2, axis=1), p_tx, rtol=1e-12)

    def test_combiner_value(self):
        sched = design_ls_training(SystemConfig(n_tx=16, n_rx=2, p_tx=1.0))
        np.testing.assert_allclose(sched.combiners[3], 4 * np.eye(2))

    def test_source_has_unit_papr(self):
        sched = design_ls_training(SystemConfig(n_tx=8, n_rx=2, l_tx=3, p_tx=2.0))
        np.testing.assert_array_equal(papr(sched.source_matrix), np.ones(3))

    def test_schedule_rejects_overbudget(self):
        f = np.ones((2, 2, 1))
        with pytest.raises(ValueError, match="F_t"):
            TrainingSchedule(f, np.zeros((2, 1, 1)), np.ones((2, 1)), 1.0, "LS")


class TestSlot:
    def test_noiseless_reads_column(self, rng):
        cfg = SystemConfig(n_tx=5, n_rx=3, p_tx=2.0)
        sched = design_ls_training(cfg)
        h = _noise(rng, (3, 5))
        for t in range(5):
            z = simulate_training_slot(h, sched[t], np.zeros(3))
            np.testing.assert_allclose(z, h[:, t], atol=1e-14)

    def test_zero_channel_scales_noise(self, rng):
        cfg = SystemConfig(n_tx=4, n_rx=3, p_tx=1.0)
        n = _noise(rng, 3)
        z = simulate_training_slot(np.zeros((3, 4)), design_ls_training(cfg)[0], n)
        np.testing.assert_allclose(z, 2 * n)

    def test_zero_combiner(self, rng):
        sched = design_ls_training(SystemConfig(n_tx=2, n_rx=2))
        slot = sched[0]._replace(combiner=np.zeros((2, 2)))
        assert np.all(simulate_training_slot(_noise(rng, (2, 2)), slot, _noise(rng, 2)) == 0)

    def test_dimension_mismatch(self, rng):
        sched = design_ls_training(SystemConfig(n_tx=2, n_rx=2))
        with pytest.raises(ValueError):
            simulate_training_slot(np.zeros((3, 2)), sched[0], np.zeros(2))
        with pytest.raises(ValueError):
            simulate_training_slot(np.zeros((2, 2)), sched[0], np.zeros(3))


class TestRunMilacLs:
    def test_noiseless_exact(self, rng):
        cfg = SystemConfig(n_tx=6, n_rx=4)
        h = _noise(rng, (4, 6))
        est = run_milac_ls(h, design_ls_training(cfg), np.zeros((4, 6)))
        assert np.max(np.abs(est - h)) <= 1e-12

    def test_zero_channel(self, rng):
        cfg = SystemConfig(n_tx=4, n_rx=2, p_tx=0.25)
        n = _noise(rng, (2, 4))
        np.testing.assert_allclose(run_milac_ls(np.zeros((2, 4)), design_ls_training(cfg), n), 4 * n)

    def test_equals_scaled_received_matrix(self, rng):
        cfg = SystemConfig(n_tx=5, n_rx=3, p_tx=2.0)
        model = build_channel_model(cfg, 0.5, 0.5)
        real = sample_channel(model, 3)
        n = _noise(rng, (3, 5), 0.3)
        sched = design_ls_training(cfg)
        batch = collect_training(real, sched, n)
        np.testing.assert_allclose(batch.y, real.h @ batch.x + n, atol=0)
        est = run_milac_ls(real, sched, n)
        assert np.max(np.abs(est - np.sqrt(5 / 2.0) * batch.y)) <= 1e-12
        np.testing.assert_array_equal(batch.z, est)

    def test_closed_form_nmse(self):
        n_tx, sigma2 = 4, 0.1
        cfg = SystemConfig(n_tx=n_tx, n_rx=4, noise_power=sigma2)
        model = build_channel_model(cfg, 0.8, 0.8)
        sched = design_ls_training(cfg)
        rng = np.random.default_rng(5)
        err = pwr = 0.0
        for s in range(10_000):
            real = sample_channel(model, s)
            est = run_milac_ls(real, sched, _noise(rng, (4, n_tx), sigma2))
            err += np.sum(np.abs(est - real.h) ** 2)
            pwr += np.sum(np.abs(real.h) ** 2)
        assert abs(err / pwr / (n_tx * sigma2) - 1) <= 0.03


class TestDigital:
    def test_dft_two_antennas(self):
        x = dft_training_matrix(SystemConfig(n_tx=2, n_rx=1, p_tx=1.0))
        np.testing.assert_allclose(x, np.array([[1, 1], [1, -1]]) / 2, atol=1e-15)
        np.testing.assert_allclose(x @ x.conj().T, 0.5 * np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("n_tx", [1, 3, 16, 64])
    def test_dft_optimality_and_unit_modulus(self, n_tx):
        cfg = SystemConfig(n_tx=n_tx, n_rx=1, p_tx=2.0)
        x = dft_training_matrix(cfg)
        assert np.max(np.abs(x @ x.conj().T - 2.0 / n_tx * np.eye(n_tx))) < 1e-10
        mags = np.abs(x)
        assert np.ptp(mags, axis=1).max() < 1e-14
        assert np.max(np.abs(papr(x) - 1)) <= 1e-12

    def test_identity_training_matches_analog(self, rng):
        cfg = SystemConfig(n_tx=8, n_rx=8, p_tx=1.0)
        h = _noise(rng, (8, 8))
        n = _noise(rng, (8, 8), 0.1)
        x = identity_training_matrix(cfg)
        dig = digital_ls_baseline(h @ x + n, x)
        ana = run_milac_ls(h, design_ls_training(cfg), n)
        assert np.max(np.abs(dig - ana)) <= 1e-12

    def test_noiseless_dft(self, rng):
        cfg = SystemConfig(n_tx=8, n_rx=3)
        x = dft_training_matrix(cfg)
        h = _noise(rng, (3, 8))
        assert np.max(np.abs(digital_ls_baseline(h @ x, x) - h)) <= 1e-12

    def test_general_training_uses_full_inverse(self, rng):
        x = _noise(rng, (4, 4))
        h = _noise(rng, (2, 4))
        counter = OpCounter()
        assert np.max(np.abs(digital_ls_baseline(h @ x, x, counter=counter) - h)) <= 1e-10
        assert counter.online == 8 * 2 * 4 * 4

    def test_rank_deficient(self):
        x = np.ones((3, 3))
        with pytest.raises(np.linalg.LinAlgError):
            digital_ls_baseline(np.zeros((2, 3)), x)

    def test_op_count(self, rng):
        cfg = SystemConfig(n_tx=16, n_rx=256)
        x = dft_training_matrix(cfg)
        counter = OpCounter()
        digital_ls_baseline(np.zeros((256, 16), dtype=complex), x, counter=counter)
        assert counter.online == 524_288
        assert counter.exact["online"] == 16 * 256 * (6 * 16 + 2 * 15)
