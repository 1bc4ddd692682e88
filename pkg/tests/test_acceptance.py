"""
Acceptance gate. Every criterion runs at its stated tolerance and reports
one PASS/FAIL line (collected again in the terminal summary).
"""

import itertools
import math
import time

import numpy as np
import pytest

from itcols.cli import main
from itcols.covariance import sample_covariance
from itcols.detectors import (
    AngleGrid,
    DetectorConfig,
    Penalty,
    hybrid_itc_ols,
    joint_itc_ols,
    ols_select,
    rank_itc,
)
from itcols.harness import NOISE_SALT, ExperimentSpec, run_experiment
from itcols.linalg import hermitian_eigendecompose, orthogonal_complement, projector, trace_real
from itcols.metrics import DetectionOutcome, aggregate, classify, hungarian_assign
from itcols.scene import RadarConfig, Scene, SceneBounds, Target, random_scene, steering_matrix, steering_vector, synthesize

pytestmark = pytest.mark.acceptance


def _trial(K, radar, snr_db, seed, bounds=None):
    scene = random_scene(K, radar, seed, bounds or SceneBounds())
    obs = synthesize(scene, radar, snr_db, seed ^ NOISE_SALT)
    return scene, obs, sample_covariance(obs)


def _oracle_projector(thetas, M):
    A = steering_matrix(thetas, M)
    return A @ np.linalg.solve(A.conj().T @ A, A.conj().T)


def test_criterion_01_selection_form_equivalence(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    grid = AngleGrid.uniform_sine(128)
    agree = 0
    for _ in range(500):
        M = int(rng.choice([4, 8]))
        k = int(rng.integers(0, 3))
        X = rng.standard_normal((M, 2 * M)) + 1j * rng.standard_normal((M, 2 * M))
        R = X @ X.conj().T / (2 * M)
        sel_idx = rng.choice(128, size=k, replace=False)
        selected = [float(grid.points[i]) for i in sel_idx]
        P_perp = orthogonal_complement(projector(steering_matrix(selected, M)))
        R_k = P_perp @ R @ P_perp
        theta, _ = ols_select(R_k, P_perp, grid, selected)
        best_idx, best_val = None, math.inf
        for i, cand in enumerate(grid.points):
            if i in sel_idx:
                continue
            Pp = np.eye(M) - _oracle_projector(selected + [float(cand)], M)
            val = np.trace(Pp @ R).real
            if val < best_val:
                best_idx, best_val = i, val
        agree += theta == grid.points[best_idx]
    elapsed = time.perf_counter() - t0
    ok = agree == 500 and elapsed < 30
    acceptance_report(1, "ratio form equals trace-form argmin", ok, f"{agree}/500 agree, {elapsed:.1f} s")
    assert ok


def _enumerate(cost):
    n, m = cost.shape
    if n <= m:
        return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(m), n))
    return min(sum(cost[p[j], j] for j in range(m)) for p in itertools.permutations(range(n), m))


def test_criterion_02_hungarian_oracle(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    agree = 0
    for _ in range(1000):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        # integer-valued costs keep every partial sum exact in floating point
        cost = rng.integers(0, 1000, (n, m)).astype(float)
        agree += hungarian_assign(cost)[1] == _enumerate(cost)
    elapsed = time.perf_counter() - t0
    ok = agree == 1000 and elapsed < 10
    acceptance_report(2, "Hungarian vs permutation enumeration", ok, f"{agree}/1000 exact, {elapsed:.1f} s")
    assert ok


def test_criterion_03_rank_itc_noise_only(acceptance_report):
    t0 = time.perf_counter()
    radar = RadarConfig(num_antennas=16, num_subcarriers=64, num_symbols=4)
    zeros = {Penalty.AIC: 0, Penalty.BIC: 0}
    for seed in range(200):
        _, _, R = _trial(0, radar, 0.0, seed)
        spec = hermitian_eigendecompose(R.matrix, vectors=False)
        for pen in zeros:
            zeros[pen] += rank_itc(spec, R.num_snapshots, pen)[0] == 0
    elapsed = time.perf_counter() - t0
    bic, aic = zeros[Penalty.BIC] / 200, zeros[Penalty.AIC] / 200
    ok = bic >= 0.95 and aic >= 0.85 and elapsed < 60
    acceptance_report(3, "rank-ITC noise-only k=0", ok, f"BIC {bic:.3f} (>=0.95), AIC {aic:.3f} (>=0.85), {elapsed:.1f} s")
    assert ok


def test_criterion_04_high_snr_recovery(acceptance_report):
    t0 = time.perf_counter()
    radar = RadarConfig(num_antennas=16, num_subcarriers=64, num_symbols=4)
    bounds = SceneBounds(min_separation=3 * 2 / 16)
    grid = AngleGrid.uniform_sine()
    good = 0
    counts = np.zeros(16, dtype=int)
    for seed in range(200):
        scene, obs, R = _trial(3, radar, 60.0, seed, bounds)
        res = hybrid_itc_ols(R, DetectorConfig(obs.noise_variance, Penalty.AIC, 10**-3.5, grid))
        out = classify(scene.doas, res.doas, 16)
        counts[res.k_hat] += 1
        good += res.k_hat == 3 and out.hits == 3
    elapsed = time.perf_counter() - t0
    rate = good / 200
    ok = rate >= 0.95 and elapsed < 120
    hist = ", ".join(f"{k}:{c}" for k, c in enumerate(counts) if c)
    acceptance_report(4, "hybrid K=3 exact with 3 hits at 60 dB", ok,
                      f"{rate:.3f} (>=0.95), k_hat histogram {{{hist}}}, {elapsed:.1f} s")
    assert ok


def test_criterion_05_snr_sweep(acceptance_report):
    t0 = time.perf_counter()
    spec = ExperimentSpec(
        radar=RadarConfig(num_antennas=16, num_subcarriers=128, num_symbols=10),
        k_true=8,
        snr_db=(0.0, 20.0, 40.0, 60.0),
        sigma_c_db=-35.0,
        penalty="AIC",
        num_runs=500,
    )
    result = run_experiment(spec)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 600
    parts = []
    for snr in spec.snr_db:
        J = {m: float(result.row(m, "none" if m == "threshold" else "AIC", snr)["youden_j"])
             for m in ("disjoint", "joint", "hybrid", "threshold")}
        best_other = max(J["disjoint"], J["joint"])
        point_ok = J["hybrid"] >= best_other - 0.05
        point_ok &= all(J[m] >= J["threshold"] for m in ("disjoint", "joint", "hybrid"))
        ok &= point_ok
        parts.append(f"{snr:g} dB hyb {J['hybrid']:.3f} dis {J['disjoint']:.3f} joi {J['joint']:.3f} "
                     f"thr {J['threshold']:.3f}{'' if point_ok else ' <-'}")
    acceptance_report(5, "SNR sweep ordering", ok, "; ".join(parts) + f"; {elapsed:.0f} s")
    assert ok


def test_criterion_06_sigma_c_effect(acceptance_report):
    t0 = time.perf_counter()
    J = {}
    for snr in (60.0, 20.0):
        spec = ExperimentSpec(
            radar=RadarConfig(num_antennas=16, num_subcarriers=128, num_symbols=10),
            k_true=8,
            snr_db=snr,
            sigma_c_db=(-35.0, "neg_inf"),
            methods=("hybrid",),
            num_runs=500,
        )
        result = run_experiment(spec)
        J[snr] = (float(result.row("hybrid", "AIC", -35.0)["youden_j"]),
                  float(result.row("hybrid", "AIC", "neg_inf")["youden_j"]))
    elapsed = time.perf_counter() - t0
    gain60 = J[60.0][0] - J[60.0][1]
    diff20 = abs(J[20.0][0] - J[20.0][1])
    ok = gain60 >= 0.05 and diff20 < 0.05 and elapsed < 600
    acceptance_report(6, "sigma_c floor effect", ok,
                      f"60 dB J {J[60.0][0]:.3f} vs {J[60.0][1]:.3f} (gain {gain60:.3f} >= 0.05); "
                      f"20 dB |diff| {diff20:.3f} (< 0.05); {elapsed:.0f} s")
    assert ok


def test_criterion_07_penalty_ordering(acceptance_report):
    t0 = time.perf_counter()
    radar = RadarConfig(num_antennas=16, num_subcarriers=64, num_symbols=4)
    assert radar.num_snapshots > math.e**2
    grid = AngleGrid.uniform_sine()
    holds = 0
    for seed in range(100):
        snr = float((0, 10, 20, 40, 60)[seed % 5])
        _, obs, R = _trial(int(seed % 9), radar, snr, seed)
        aic = joint_itc_ols(R, DetectorConfig(obs.noise_variance, Penalty.AIC, grid=grid))
        bic = joint_itc_ols(R, DetectorConfig(obs.noise_variance, Penalty.BIC, grid=grid))
        holds += bic.k_hat <= aic.k_hat
    elapsed = time.perf_counter() - t0
    ok = holds == 100 and elapsed < 60
    acceptance_report(7, "joint BIC k_hat <= joint AIC k_hat", ok, f"{holds}/100 trials, {elapsed:.1f} s")
    assert ok


def test_criterion_08_invariant_suite(acceptance_report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    n = 200
    passed = {}

    def spaced_angles(k, M):
        # sines at least half a beamwidth apart keep the steering Gram matrix well conditioned
        while True:
            u = np.sort(rng.uniform(-0.95, 0.95, k))
            if k < 2 or np.min(np.diff(u)) >= 1.0 / M:
                return list(np.arcsin(rng.permutation(u)))

    def psd(M):
        X = rng.standard_normal((M, 2 * M)) + 1j * rng.standard_normal((M, 2 * M))
        return X @ X.conj().T / (2 * M)

    c = 0
    for _ in range(n):
        M = int(rng.integers(2, 17))
        P = projector(steering_matrix(spaced_angles(int(rng.integers(1, min(M - 1, 6) + 1)), M), M))
        Pp = orthogonal_complement(P)
        c += np.max(np.abs(P @ P - P)) < 1e-9 and np.max(np.abs(P @ Pp)) < 1e-9 and np.allclose(P + Pp, np.eye(M))
    passed["projector"] = c

    c = 0
    for _ in range(n):
        R = psd(int(rng.integers(2, 17)))
        spec = hermitian_eigendecompose(R)
        c += np.max(np.abs(spec.reconstruct() - R)) < 1e-8 * spec.eigenvalues[0]
    passed["evd"] = c

    c = 0
    for _ in range(n):
        theta, M = rng.uniform(-np.pi / 2, np.pi / 2), int(rng.integers(2, 65))
        a = steering_vector(theta, M)
        c += np.max(np.abs(np.abs(a) - 1)) < 1e-12 and np.allclose(steering_vector(-theta, M), a.conj(), atol=1e-12)
    passed["steering"] = c

    c = 0
    for _ in range(n):
        M = int(rng.integers(3, 13))
        R = psd(M)
        angles = spaced_angles(min(M - 1, 6), M)
        prev, ok = trace_real(R), True
        for k in range(1, len(angles) + 1):
            val = trace_real(orthogonal_complement(projector(steering_matrix(angles[:k], M))) @ R)
            ok &= val <= prev + 1e-10 * trace_real(R)
            prev = val
        c += ok
    passed["residual_monotone"] = c

    c = 0
    for _ in range(n):
        lam = np.sort(rng.uniform(0.01, 10, int(rng.integers(2, 17))))[::-1]
        scale = 10.0 ** rng.uniform(-8, 8)
        N = int(rng.integers(2, 10000))
        k1, v1 = rank_itc(lam, N, Penalty.AIC)
        k2, v2 = rank_itc(scale * lam, N, Penalty.AIC)
        c += k1 == k2 and np.allclose(v1, v2, rtol=1e-7, atol=1e-6 * N)
    passed["rank_scale"] = c

    c = 0
    grid = AngleGrid.uniform_sine(64)
    for _ in range(n):
        M = int(rng.integers(3, 9))
        R = psd(M)
        sel = [float(grid.points[int(rng.integers(64))])]
        Pp = orthogonal_complement(projector(steering_matrix(sel, M)))
        Rk = Pp @ R @ Pp
        s = 2.0 ** int(rng.integers(-30, 31))
        c += ols_select(Rk, Pp, grid, sel)[0] == ols_select(s * Rk, Pp, grid, sel)[0]
    passed["ols_scale"] = c

    c = 0
    outcomes = []
    for _ in range(n):
        t = np.arcsin(rng.uniform(-1, 1, int(rng.integers(0, 9))))
        e = np.arcsin(rng.uniform(-1, 1, int(rng.integers(0, 9))))
        o = classify(t, e, int(rng.integers(2, 33)))
        outcomes.append(o)
        c += o.hits + o.misses == len(t) and o.hits + o.false_alarms == len(e)
    passed["classify_counts"] = c

    c = 0
    for _ in range(n):
        idx = rng.integers(0, n, int(rng.integers(1, 20)))
        r = aggregate([outcomes[i] for i in idx] + [DetectionOutcome(0, 0, 1)])
        c += -1 <= r.youden_j <= 1 and 0 <= r.hit_rate <= 1 and 0 <= r.fa_rate <= 1
    passed["j_range"] = c

    elapsed = time.perf_counter() - t0
    ok = all(v == n for v in passed.values()) and elapsed < 60
    detail = ", ".join(f"{k} {v}/{n}" for k, v in passed.items())
    acceptance_report(8, "invariant suite", ok, f"{detail}; {elapsed:.1f} s")
    assert ok


def test_criterion_09_snr_calibration(acceptance_report):
    t0 = time.perf_counter()
    radar = RadarConfig(num_antennas=16, num_subcarriers=512, num_symbols=10)
    scene = Scene((Target(0.4, 1.0, 2.1e-7, 35.0),))
    noisy = synthesize(scene, radar, 20.0, 909)
    clean = synthesize(scene, radar, math.inf, 909)
    noise = noisy.snapshots - clean.snapshots
    snr = 10 * np.log10(np.mean(np.abs(clean.snapshots) ** 2) / np.mean(np.abs(noise) ** 2))
    elapsed = time.perf_counter() - t0
    ok = noisy.noise_variance == 0.01 and abs(snr - 20.0) <= 0.1 and elapsed < 5 and radar.num_snapshots == 5120
    acceptance_report(9, "SNR calibration", ok,
                      f"sigma^2 = {noisy.noise_variance!r}, empirical {snr:.4f} dB over DQ=5120, {elapsed:.2f} s")
    assert ok


def test_criterion_10_determinism(acceptance_report, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "det.yaml"
    cfg.write_text(
        "radar:\n  num_antennas: 16\n  num_subcarriers: 32\n  num_symbols: 4\n"
        "k_true: 4\nsnr_db: [10, 40]\nnum_runs: 24\nbase_seed: 12345\npenalty: both\n"
    )
    blobs = {}
    for workers in (1, 8):
        for rep in (0, 1):
            out = tmp_path / f"w{workers}_{rep}"
            code = main(["sweep", "--axis", "snr", "--config", str(cfg), "--out", str(out), "--workers", str(workers)])
            assert code == 0
            blobs[(workers, rep)] = (out / "results.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    identical = len(set(blobs.values())) == 1
    ok = identical and elapsed < 120
    acceptance_report(10, "byte-identical results.csv", ok,
                      f"{len(blobs)} runs (workers 1 and 8, twice each) identical={identical}, {elapsed:.1f} s")
    assert ok
