"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that the terminal summary prints under
"acceptance criteria".
"""

import time

import numpy as np
import pytest

from milacest import OpCounter, SystemConfig, build_channel_model, complexity_report, make_estimator
from milacest._oracles import brute_force_two_direction, dense_mmse_estimate
from milacest.harness import (
    DEFAULT_SNR_DB,
    COMPLEXITY_GRID,
    ExperimentConfig,
    _draw_trials,
    nmse_sweep_raw,
    run_nmse_sweep,
)
from milacest.ls import dft_training_matrix
from milacest.metrics import papr, ratio_of_means
from milacest.mmse import allocate_training_power, check_kkt
from milacest.network import (
    admittance_for_combiner,
    admittance_for_precoder,
    combiner_from_admittance,
    lower_triangular_inverse_block,
    precoder_from_admittance,
)

SEED = 2024


def _realizations(n, eps, noise_power, count=100):
    cfg = SystemConfig(n_tx=n, n_rx=n, noise_power=noise_power)
    model = build_channel_model(cfg, eps, eps)
    h_v, w = _draw_trials(model, n, SEED, 0, count)
    return model, model.to_physical(h_v), np.sqrt(noise_power) * w


def test_ac01_closed_form_ls_nmse(criterion):
    cfg = ExperimentConfig(sizes=((16, 16),), snr_db=(0.0, 10.0, 20.0), trials=10_000, seed=SEED,
                           schemes=("milac-ls",), eps_tx=0.8, eps_rx=0.8)
    start = time.perf_counter()
    rows = run_nmse_sweep(cfg)
    elapsed = time.perf_counter() - start
    rel = {r.snr_db: abs(r.value - 16 / 10 ** (r.snr_db / 10)) / (16 / 10 ** (r.snr_db / 10)) for r in rows}
    ok = max(rel.values()) <= 0.03 and elapsed < 60
    detail = ", ".join(f"{s:g} dB rel {v:.4f}" for s, v in rel.items()) + f"; {elapsed:.1f} s"
    criterion("AC1 closed-form LS NMSE", ok, detail)
    assert ok, detail


def test_ac02_pathwise_ls(criterion):
    _, h, noise = _realizations(8, 0.8, 0.1)
    analog = make_estimator("milac-ls", n_tx=8, n_rx=8).fit().acquire(h, noise)
    digital = make_estimator("digital-ls", n_tx=8, n_rx=8, training="identity").fit().acquire(h, noise)
    diff = float(np.max(np.abs(analog - digital)))
    criterion("AC2 pathwise LS equivalence", diff <= 1e-12, f"max |diff| {diff:.2e}")
    assert diff <= 1e-12


def test_ac03_dft_vs_milac_ls(criterion):
    cfg = ExperimentConfig(sizes=((16, 16),), snr_db=DEFAULT_SNR_DB, trials=10_000, seed=SEED,
                           schemes=("milac-ls", "digital-ls"))
    energy, errors = nmse_sweep_raw(cfg)[16, 16]
    worst = 0.0
    for snr in cfg.snr_db:
        a, se_a, _ = ratio_of_means(errors["milac-ls", snr], energy)
        b, se_b, _ = ratio_of_means(errors["digital-ls", snr], energy)
        worst = max(worst, abs(a - b) / max(se_a, se_b))
    criterion("AC3 DFT digital LS vs MiLAC LS", worst <= 2, f"worst |diff| = {worst:.2e} standard errors")
    assert worst <= 2


def test_ac04_pathwise_mmse(criterion):
    model, h, noise = _realizations(8, 0.8, 0.1)
    kw = dict(n_tx=8, n_rx=8, noise_power=0.1, channel_model=model)
    analog = make_estimator("milac-mmse", **kw).fit().acquire(h, noise)
    digital = make_estimator("digital-mmse", **kw).fit().acquire(h, noise)
    diff = float(np.max(np.abs(analog - digital)))
    criterion("AC4 pathwise MMSE equivalence", diff <= 1e-12, f"max |diff| {diff:.2e}")
    assert diff <= 1e-12


def test_ac05_dense_mmse_oracle(criterion):
    model, h, noise = _realizations(2, 0.8, 0.1)
    est = make_estimator("milac-mmse", n_tx=2, n_rx=2, noise_power=0.1, channel_model=model).fit()
    fast = est.acquire(h, noise)
    y = est.received(h, noise)
    dense = np.stack([dense_mmse_estimate(yi, model, est.allocation_.p, 0.1) for yi in y])
    diff = float(np.max(np.abs(fast - dense)))
    criterion("AC5 2x2 dense MMSE oracle", diff <= 1e-10, f"max |diff| {diff:.2e}")
    assert diff <= 1e-10


def test_ac06_theoretical_mmse(criterion):
    cfg = ExperimentConfig(sizes=((8, 8),), snr_db=(0.0, 10.0), trials=100_000, seed=SEED,
                           schemes=("milac-mmse",))
    _, errors = nmse_sweep_raw(cfg)[8, 8]
    rel = {}
    for snr in cfg.snr_db:
        est = make_estimator("milac-mmse", n_tx=8, n_rx=8, noise_power=10 ** (-snr / 10)).fit()
        rel[snr] = abs(errors["milac-mmse", snr].mean() - est.mse_) / est.mse_
    ok = max(rel.values()) <= 0.02
    detail = ", ".join(f"{s:g} dB rel {v:.4f}" for s, v in rel.items())
    criterion("AC6 theoretical vs empirical MMSE", ok, detail)
    assert ok, detail


def test_ac07_dominance_and_ordering(criterion):
    schemes = ("milac-ls", "milac-mmse")
    cfg = ExperimentConfig(sizes=((16, 16),), snr_db=DEFAULT_SNR_DB, trials=10_000, seed=SEED, schemes=schemes)
    val = {(r.scheme, r.snr_db): r for r in run_nmse_sweep(cfg)}
    snrs = [float(s) for s in cfg.snr_db]
    dominance = all(val["milac-mmse", s].value <= val["milac-ls", s].value for s in snrs)
    decreasing = all(
        val[sc, a].value > val[sc, b].value for sc in schemes for a, b in zip(snrs, snrs[1:])
    )
    big = ExperimentConfig(sizes=((16, 16), (64, 64)), snr_db=(0.0, 10.0, 20.0), trials=10_000, seed=SEED,
                           schemes=("milac-mmse",))
    by = {(r.n_tx, r.snr_db): r for r in run_nmse_sweep(big)}
    size_order = all(
        by[16, s].value <= by[64, s].value + 2 * max(by[16, s].stderr, by[64, s].stderr) for s in big.snr_db
    )
    ok = dominance and decreasing and size_order
    detail = f"MMSE<=LS {dominance}, strictly decreasing {decreasing}, N=16<=N=64 {size_order}"
    criterion("AC7 MMSE dominance and ordering", ok, detail)
    assert ok, detail


def test_ac08_complexity(criterion):
    peak = complexity_report(SystemConfig(n_tx=64, n_rx=2048), "digital-mmse")
    grid_ok = True
    for nt, nr in COMPLEXITY_GRID:
        cfg = SystemConfig(n_tx=nt, n_rx=nr)
        grid_ok &= complexity_report(cfg, "digital-ls") == 8 * nt * nr * nt
        grid_ok &= complexity_report(cfg, "digital-mmse") == 8 * nt * nr * nr
        grid_ok &= complexity_report(cfg, "milac-ls") == 0 and complexity_report(cfg, "milac-mmse") == 0
    # instrumented audit on one grid point: run each scheme's online path through a counter
    nt, nr = COMPLEXITY_GRID[0]
    cfg = SystemConfig(n_tx=nt, n_rx=nr, noise_power=0.1)
    model = build_channel_model(cfg, 0.8, 0.8)
    h_v, w = _draw_trials(model, nt, SEED, 0, 1)
    h, noise = model.to_physical(h_v), np.sqrt(0.1) * w
    audit = {}
    for scheme in ("milac-ls", "digital-ls", "milac-mmse", "digital-mmse"):
        counter = OpCounter()
        make_estimator(scheme, n_tx=nt, n_rx=nr, noise_power=0.1, channel_model=model).fit().acquire(
            h, noise, counter=counter)
        audit[scheme] = counter.online == complexity_report(cfg, scheme)
    ok = peak == 2_147_483_648 and grid_ok and all(audit.values())
    criterion("AC8 complexity exactness", ok, f"peak {peak}, grid {grid_ok}, audit {audit}")
    assert ok


def test_ac09_admittance_synthesis(criterion):
    rng = np.random.default_rng(SEED)
    worst = worst_q = 0.0
    for i in range(1000):
        n, m = (int(v) for v in rng.integers(1, 33, size=2))
        a = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        a *= 10 ** rng.uniform(-2, 1)
        if i % 2:
            got = precoder_from_admittance(admittance_for_precoder(a, 1 / 50)).matrix
        else:
            a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * 10 ** rng.uniform(-2, 1)
            got = combiner_from_admittance(admittance_for_combiner(a, 1 / 50)).matrix
        worst = max(worst, float(np.max(np.abs(got - a))))
        q = lower_triangular_inverse_block(a)
        worst_q = max(worst_q, float(np.max(np.abs(np.linalg.inv(q) - (2 * np.eye(len(q)) - q)))))
    ok = worst <= 1e-10 and worst_q <= 1e-12
    criterion("AC9 admittance synthesis", ok, f"round trip {worst:.2e}, Q identity {worst_q:.2e}")
    assert ok


def test_ac10_power_allocation(criterion):
    rng = np.random.default_rng(SEED)
    problems = []
    for i in range(50):
        nt, nr = (int(v) for v in rng.integers(1, 9, size=2))
        eps_t, eps_r = rng.uniform(0, 0.95, size=2)
        snr_db = rng.uniform(-10, 30)
        model = build_channel_model(SystemConfig(n_tx=nt, n_rx=nr), eps_t, eps_r)
        s2 = 10 ** (-snr_db / 10)
        alloc = allocate_training_power(model.r_v, s2, 1.0, nt, nr)
        problems += [f"{i}: {p}" for p in check_kkt(alloc, model.r_v, s2, 1.0, nr)]
    gaps = []
    for _ in range(10):
        nr = int(rng.integers(1, 5))
        r_v = rng.uniform(0.05, 3.0, 2 * nr)
        s2 = 10 ** (-rng.uniform(-10, 20) / 10)
        alloc = allocate_training_power(r_v, s2, 1.0, 2, nr)
        gaps.append(abs(alloc.objective - brute_force_two_direction(r_v, s2, 1.0, nr)[1]))
    model = build_channel_model(SystemConfig(n_tx=8, n_rx=8), 0.0, 0.0)
    dev = float(np.max(np.abs(allocate_training_power(model.r_v, 0.3, 1.0, 8, 8).p - 1 / 8)))
    ok = not problems and max(gaps) <= 1e-8 and dev <= 1e-9
    detail = f"KKT violations {len(problems)}, brute-force gap {max(gaps):.2e}, uniform dev {dev:.2e}"
    criterion("AC10 power-allocation certificate", ok, detail)
    assert ok, problems[:3]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_ac11_papr(criterion):
    kw = dict(n_tx=16, n_rx=16, noise_power=1.0, eps_tx=0.8, eps_rx=0.8)
    sources = {s: make_estimator(s, **kw).fit().source_signals_ for s in ("milac-ls", "milac-mmse")}
    source_ok = all(np.all(papr(c) == 1.0) for c in sources.values())
    dft = papr(dft_training_matrix(SystemConfig(n_tx=16, n_rx=16)))
    dft_ok = float(np.max(np.abs(dft - 1))) <= 1e-12
    mmse = papr(make_estimator("digital-mmse", **kw).fit().training_matrix_)
    mmse_ok = bool(np.all(mmse[np.isfinite(mmse)] > 1))
    ok = source_ok and dft_ok and mmse_ok
    detail = f"MiLAC sources {source_ok}, DFT rows {dft_ok}, digital MMSE min {np.nanmin(mmse):.3f}"
    criterion("AC11 PAPR", ok, detail)
    assert ok
