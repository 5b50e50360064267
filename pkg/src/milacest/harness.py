"""Monte Carlo experiments: NMSE vs SNR, complexity vs N_R, PAPR, and the verify gate."""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._oracles import brute_force_two_direction, dense_inverse_block, dense_mmse_estimate
from ._validation import ConfigError
from .channel import SystemConfig, build_channel_model, draw_unit_noise, draw_virtual_channel
from .estimators import make_estimator
from .ls import dft_training_matrix, identity_training_matrix
from .metrics import SCHEMES, OpCounter, complexity_report, exact_complexity, papr_report, ratio_of_means
from .mmse import PowerAllocation, allocate_training_power, check_kkt
from .network import (
    admittance_for_combiner,
    admittance_for_precoder,
    combiner_from_admittance,
    lower_triangular_inverse_block,
    precoder_from_admittance,
)
from .output import write_csv, write_svg

log = logging.getLogger(__name__)

KINDS = ("nmse-vs-snr", "complexity-vs-nrx", "papr", "verify")
DEFAULT_SNR_DB = tuple(range(-10, 31, 5))
DEFAULT_SIZES = ((8, 8), (16, 16))
COMPLEXITY_GRID = tuple((nt, nr) for nt in (16, 64) for nr in range(256, 2049, 256))


@dataclass
class ExperimentConfig:
    kind: str = "nmse-vs-snr"
    sizes: tuple = DEFAULT_SIZES
    snr_db: tuple = DEFAULT_SNR_DB
    eps_tx: float = 0.8
    eps_rx: float = 0.8
    trials: int = 10_000
    seed: int = 0
    schemes: tuple = SCHEMES
    p_tx: float = 1.0
    out: str = "results"
    format: str = "csv"
    workers: int = None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"expected one of {KINDS}, got {self.kind!r}")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials", f"must be an integer >= 1, got {self.trials!r}")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        if not self.schemes:
            raise ConfigError("schemes", "must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError("schemes", f"unknown scheme(s) {bad}; expected a subset of {SCHEMES}")
        if not self.snr_db or not all(math.isfinite(s) for s in self.snr_db):
            raise ConfigError("snr", "SNR grid must be nonempty and finite")
        if not self.sizes:
            raise ConfigError("size", "must list at least one NTxNR pair")
        for nt, nr in self.sizes:
            if nt < 1 or nr < 1:
                raise ConfigError("size", f"antenna counts must be >= 1, got {nt}x{nr}")
        for name in ("eps_tx", "eps_rx"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ConfigError(name, f"must lie in [0, 1), got {v}")
        if not (self.p_tx > 0 and math.isfinite(self.p_tx)):
            raise ConfigError("p_tx", f"must be > 0, got {self.p_tx}")
        if self.format not in ("csv", "svg", "both"):
            raise ConfigError("format", f"expected csv|svg|both, got {self.format!r}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        return self


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    n_tx: int
    n_rx: int
    snr_db: float
    metric: str
    value: float
    trials: int
    stderr: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite value in result row {self}")
        if not self.stderr >= 0:
            raise ValueError(f"negative standard error in result row {self}")


def snr_to_noise_power(snr_db, p_tx=1.0):
    return p_tx / 10.0 ** (snr_db / 10.0)


def trial_rng(base_seed, trial):
    """Per-trial generator; identical for every scheme and every SNR point."""
    return np.random.default_rng([int(base_seed), int(trial)])


def _draw_trials(model, tau, base_seed, start, stop):
    h_v = np.empty((stop - start, model.n_rx, model.n_tx), dtype=complex)
    w = np.empty((stop - start, model.n_rx, tau), dtype=complex)
    for i, trial in enumerate(range(start, stop)):
        rng = trial_rng(base_seed, trial)
        h_v[i] = draw_virtual_channel(model, rng)
        w[i] = draw_unit_noise(model.n_rx, tau, rng)
    return h_v, w


def _chunk_errors(task):
    """Squared errors for one chunk of trials; runs in worker processes."""
    model, estimators, noise_std, base_seed, start, stop = task
    tau = model.n_tx
    h_v, w = _draw_trials(model, tau, base_seed, start, stop)
    h = model.to_physical(h_v)
    energy = np.sum(np.abs(h_v) ** 2, axis=(1, 2))
    errors = {}
    for (scheme, k), est in estimators.items():
        noise = noise_std[k] * w
        est_out = est.acquire(h, noise)
        ref = h_v if est.domain == "virtual" else h
        errors[scheme, k] = np.sum(np.abs(ref - est_out) ** 2, axis=(1, 2))
    return energy, errors


def _chunks(n, size):
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def simulate_errors(model, estimators, noise_std, trials, base_seed, workers=1):
    """Per-trial channel energies and squared errors for fitted estimators.

    ``estimators`` maps ``(scheme, snr_index)`` to a fitted estimator and
    ``noise_std[snr_index]`` is the noise amplitude.  Chunks are merged in
    trial order, so the result does not depend on ``workers``.
    """
    per_trial = model.n_rx * max(model.n_tx, 1) * 4
    size = max(1, min(trials, (1 << 21) // per_trial))
    tasks = [(model, estimators, noise_std, base_seed, a, b) for a, b in _chunks(trials, size)]
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_errors, tasks))
    else:
        parts = [_chunk_errors(t) for t in tasks]
    energy = np.concatenate([p[0] for p in parts])
    errors = {key: np.concatenate([p[1][key] for p in parts]) for key in estimators}
    return energy, errors


def _workers(cfg):
    return cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)


def nmse_sweep_raw(cfg):
    """Run the NMSE sweep and return per-trial arrays keyed by size.

    Returns ``{(n_tx, n_rx): (energy, {(scheme, snr_db): errors})}``.
    """
    cfg.validate()
    out = {}
    for nt, nr in cfg.sizes:
        sys_cfg = SystemConfig(n_tx=nt, n_rx=nr, p_tx=cfg.p_tx)
        model = build_channel_model(sys_cfg, cfg.eps_tx, cfg.eps_rx)
        sigma2 = [snr_to_noise_power(s, cfg.p_tx) for s in cfg.snr_db]
        estimators = {}
        for scheme in cfg.schemes:
            for k, s2 in enumerate(sigma2):
                est = make_estimator(scheme, n_tx=nt, n_rx=nr, p_tx=cfg.p_tx, noise_power=s2,
                                     channel_model=model)
                estimators[scheme, k] = est.fit()
        energy, errors = simulate_errors(model, estimators, np.sqrt(sigma2), cfg.trials, cfg.seed, _workers(cfg))
        out[nt, nr] = (energy, {(s, cfg.snr_db[k]): e for (s, k), e in errors.items()})
        log.info("finished %dx%d (%d trials)", nt, nr, cfg.trials)
    return out


def run_nmse_sweep(cfg):
    """NMSE (ratio of means) with delta-method standard errors, one row per point."""
    raw = nmse_sweep_raw(cfg)
    rows = []
    for (nt, nr), (energy, errors) in raw.items():
        for scheme in cfg.schemes:
            for snr in cfg.snr_db:
                value, se, n = ratio_of_means(errors[scheme, snr], energy)
                rows.append(ResultRow(scheme, nt, nr, float(snr), "nmse", value, n, se))
    return rows


def run_complexity_sweep(cfg):
    """Online real-operation counts; no simulation involved."""
    cfg.validate()
    rows = []
    for nt, nr in cfg.sizes:
        sys_cfg = SystemConfig(n_tx=nt, n_rx=nr)
        for scheme in cfg.schemes:
            rows.append(ResultRow(scheme, nt, nr, None, "online_real_ops", complexity_report(sys_cfg, scheme), 0, 0.0))
            rows.append(ResultRow(scheme, nt, nr, None, "online_real_ops_exact", exact_complexity(sys_cfg, scheme), 0, 0.0))
    return rows


def papr_reports(cfg):
    """PAPR reports per size/SNR, including the labelled supplementary identity-training case."""
    cfg.validate()
    reports = []
    for nt, nr in cfg.sizes:
        for snr in cfg.snr_db:
            s2 = snr_to_noise_power(snr, cfg.p_tx)
            sys_cfg = SystemConfig(n_tx=nt, n_rx=nr, p_tx=cfg.p_tx, noise_power=s2)
            for scheme in cfg.schemes:
                est = make_estimator(scheme, n_tx=nt, n_rx=nr, p_tx=cfg.p_tx, noise_power=s2,
                                     eps_tx=cfg.eps_tx, eps_rx=cfg.eps_rx).fit()
                if scheme.startswith("milac"):
                    rep = papr_report(est.source_signals_, scheme, note="source signal c_t per RF chain")
                else:
                    rep = papr_report(est.training_matrix_, scheme, note="training matrix row per antenna")
                reports.append(((nt, nr, snr), rep))
            rep = papr_report(identity_training_matrix(sys_cfg), "digital-ls-identity",
                              note="supplementary: identity training driven digitally; not a reported figure",
                              supplementary=True)
            reports.append(((nt, nr, snr), rep))
    return reports


def run_papr_report(cfg):
    rows = []
    for (nt, nr, snr), rep in papr_reports(cfg):
        rows.append(ResultRow(rep.scheme, nt, nr, float(snr), "papr_max", rep.max, 1, 0.0))
        rows.append(ResultRow(rep.scheme, nt, nr, float(snr), "papr_mean", rep.mean, 1, 0.0))
    return rows


def emit_results(rows, out_dir, fmt="csv", stem="results", kind="nmse-vs-snr"):
    """Write ``<stem>.csv`` and/or ``<stem>.svg`` into ``out_dir``; returns the paths."""
    if not rows:
        raise ValueError("empty result table")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    if fmt in ("csv", "both"):
        paths.append(write_csv(rows, out_dir / f"{stem}.csv"))
    if fmt in ("svg", "both"):
        if kind == "complexity-vs-nrx":
            plotted = [r for r in rows if r.metric == "online_real_ops"]
            paths.append(write_svg(plotted, out_dir / f"{stem}.svg", "n_rx", "N_R", "online real operations",
                                   lambda r: f"{r.scheme} N_T={r.n_tx}", title="Complexity vs N_R"))
        elif kind == "papr":
            plotted = [r for r in rows if r.metric == "papr_max"]
            paths.append(write_svg(plotted, out_dir / f"{stem}.svg", "snr_db", "SNR [dB]", "max PAPR",
                                   lambda r: f"{r.scheme} {r.n_tx}x{r.n_rx}", title="PAPR"))
        else:
            paths.append(write_svg(rows, out_dir / f"{stem}.svg", "snr_db", "SNR [dB]", "NMSE",
                                   lambda r: f"{r.scheme} {r.n_tx}x{r.n_rx}", title="NMSE vs SNR"))
    return paths


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: object
    expected: str

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: observed {self.observed}, expected {self.expected}"


def _rand_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def run_verify(seed=0, inject=None, trials=10_000):
    """Invariant suite at small sizes; returns a list of :class:`CheckResult`.

    ``inject`` selects a deliberate fault to prove the checks bite:
    ``"admittance"`` perturbs a synthesized admittance block by 1e-3 and
    ``"multiplier"`` perturbs the allocation's KKT multiplier.
    """
    rng = np.random.default_rng([seed, 0xC0FFEE])
    results = []

    def record(name, ok, observed, expected):
        results.append(CheckResult(name, bool(ok), observed, expected))

    # admittance synthesis round trips
    worst = 0.0
    worst_q = 0.0
    for _ in range(200):
        nt, lt = int(rng.integers(1, 17)), int(rng.integers(1, 5))
        f = _rand_complex(rng, (nt, lt), scale=rng.uniform(0.01, 10))
        net = admittance_for_precoder(f, 1 / 50)
        if inject == "admittance":
            adm = np.array(net.admittance)
            adm[lt:, :lt] += 1e-3
            net = replace(net, admittance=adm)
        worst = max(worst, np.max(np.abs(precoder_from_admittance(net).matrix - f)))
        dense = dense_inverse_block(net.admittance, net.ref_admittance, range(lt, lt + nt), range(lt))
        worst = max(worst, np.max(np.abs(dense - f)))
        g = _rand_complex(rng, (nt, nt))
        gnet = admittance_for_combiner(g, 1 / 50)
        worst = max(worst, np.max(np.abs(combiner_from_admittance(gnet).matrix - g)))
        q = lower_triangular_inverse_block(f)
        worst_q = max(worst_q, np.max(np.abs(np.linalg.inv(q) - (2 * np.eye(len(q)) - q))))
    record("admittance round trip", worst <= 1e-10, f"{worst:.3e}", "<= 1e-10")
    record("block inverse Q^-1 = 2I - Q", worst_q <= 1e-12, f"{worst_q:.3e}", "<= 1e-12")

    # power allocation certificates
    kkt_fail = []
    for i in range(50):
        nt, nr = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        r_v = rng.uniform(0.01, 3.0, nt * nr)
        s2 = 10 ** (-rng.uniform(-1, 3) / 10)
        alloc = allocate_training_power(r_v, s2, 1.0, nt, nr)
        if inject == "multiplier":
            alloc = PowerAllocation(alloc.p, alloc.multiplier * 1.01, alloc.objective)
        kkt_fail += [f"case {i}: {msg}" for msg in check_kkt(alloc, r_v, s2, 1.0, nr)]
    record("KKT certificate", not kkt_fail, kkt_fail[0] if kkt_fail else "all 50 certified", "no violations")

    r_v = np.kron([1.8, 0.2], [1.0])
    alloc = allocate_training_power(r_v, 1.0, 1.0, 2, 1)
    _, brute_obj = brute_force_two_direction(r_v, 1.0, 1.0, 1)
    gap = alloc.objective - brute_obj
    record("allocation vs brute force", abs(gap) <= 1e-8, f"{gap:.3e}", "|gap| <= 1e-8")
    alloc = allocate_training_power(np.ones(64), 0.1, 1.0, 8, 8)
    dev = np.max(np.abs(alloc.p - 1 / 8))
    record("uniform allocation at eps=0", dev <= 1e-9, f"{dev:.3e}", "<= 1e-9")

    # pathwise equivalences
    n = 8
    sys_cfg = SystemConfig(n_tx=n, n_rx=n, noise_power=0.1)
    model = build_channel_model(sys_cfg, 0.8, 0.8)
    h_v, w = _draw_trials(model, n, seed, 0, 100)
    h = model.to_physical(h_v)
    noise = np.sqrt(0.1) * w
    milac_ls = make_estimator("milac-ls", n_tx=n, n_rx=n).fit()
    ident = make_estimator("digital-ls", n_tx=n, n_rx=n, training="identity").fit()
    diff = np.max(np.abs(milac_ls.acquire(h, noise) - ident.acquire(h, noise)))
    record("LS analog path == digital LS (identity training)", diff <= 1e-12, f"{diff:.3e}", "<= 1e-12")

    kw = dict(n_tx=n, n_rx=n, noise_power=0.1, channel_model=model)
    milac_mmse = make_estimator("milac-mmse", **kw).fit()
    dig_mmse = make_estimator("digital-mmse", **kw).fit()
    diff = np.max(np.abs(milac_mmse.acquire(h, noise) - dig_mmse.acquire(h, noise)))
    record("MMSE analog path == digital MMSE", diff <= 1e-12, f"{diff:.3e}", "<= 1e-12")

    cfg2 = SystemConfig(n_tx=2, n_rx=2, noise_power=0.1)
    model2 = build_channel_model(cfg2, 0.8, 0.8)
    est2 = make_estimator("milac-mmse", n_tx=2, n_rx=2, noise_power=0.1, channel_model=model2).fit()
    h_v2, w2 = _draw_trials(model2, 2, seed, 0, 100)
    h2 = model2.to_physical(h_v2)
    y2 = h2 @ est2.training_matrix_ + np.sqrt(0.1) * w2
    fast = est2.acquire(h2, np.sqrt(0.1) * w2)
    dense = np.stack([dense_mmse_estimate(y, model2, est2.allocation_.p, 0.1) for y in y2])
    diff = np.max(np.abs(fast - dense))
    record("diagonal MMSE == dense MMSE (2x2)", diff <= 1e-10, f"{diff:.3e}", "<= 1e-10")

    # online op audit
    counter = OpCounter()
    milac_ls.acquire(h, noise, counter=counter)
    milac_mmse.acquire(h, noise, counter=counter)
    record("MiLAC online op audit", counter.online == 0, counter.online, "0")
    counter = OpCounter()
    make_estimator("digital-ls", n_tx=n, n_rx=n).fit().acquire(h[:1], noise[:1], counter=counter)
    expected = complexity_report(sys_cfg, "digital-ls")
    record("digital LS op audit", counter.online == expected, counter.online, str(expected))

    # closed-form LS NMSE
    cfg = ExperimentConfig(sizes=((n, n),), snr_db=(0.0, 10.0), trials=trials, seed=seed,
                           schemes=("milac-ls",), workers=1)
    for row in run_nmse_sweep(cfg):
        target = n / 10 ** (row.snr_db / 10)
        rel = abs(row.value - target) / target
        record(f"LS NMSE closed form @ {row.snr_db:g} dB", rel <= 0.03, f"{row.value:.5f}", f"{target:.5f} +/- 3%")

    # PAPR
    src = milac_ls.source_signals_
    rep = papr_report(src, "milac-ls")
    record("MiLAC source PAPR", np.all(rep.values == 1.0), rep.max, "1 exactly")
    rep = papr_report(dft_training_matrix(sys_cfg), "digital-ls")
    record("DFT training PAPR", np.max(np.abs(rep.values - 1)) <= 1e-12, rep.max, "1")
    return results
