"""Quick oracle and invariant checks runnable from an installed package."""

import itertools

import numpy as np

from .covariance import SampleCovariance, residual_covariance
from .detectors import AngleGrid, _select_index, ols_run, rank_itc
from .linalg import hermitian_eigendecompose, orthogonal_complement, projector, trace_real
from .metrics import classify, hungarian_assign
from .scene import steering_matrix, steering_vector


def _random_psd(rng, M):
    X = rng.standard_normal((M, 2 * M)) + 1j * rng.standard_normal((M, 2 * M))
    return X @ X.conj().T / (2 * M)


def _check_projectors(rng, n=50):
    for _ in range(n):
        M = int(rng.integers(2, 9))
        k = int(rng.integers(1, M))
        A = steering_matrix(rng.uniform(-1.2, 1.2, k), M)
        P = projector(A)
        Pp = orthogonal_complement(P)
        if np.max(np.abs(P @ P - P)) > 1e-9 or np.max(np.abs(P @ Pp)) > 1e-9:
            return False
    return True


def _check_evd(rng, n=30):
    for _ in range(n):
        M = int(rng.integers(2, 17))
        R = _random_psd(rng, M)
        spec = hermitian_eigendecompose(R)
        if np.max(np.abs(spec.reconstruct() - R)) > 1e-8 * spec.eigenvalues[0]:
            return False
    return True


def _check_steering(rng, n=50):
    for th in rng.uniform(-np.pi / 2, np.pi / 2, n):
        a = steering_vector(th, 12)
        if np.max(np.abs(np.abs(a) - 1)) > 1e-12 or np.max(np.abs(steering_vector(-th, 12) - a.conj())) > 1e-12:
            return False
    return True


def _check_selection_equivalence(rng, n=50):
    grid = AngleGrid.uniform_sine(64)
    for _ in range(n):
        M = int(rng.choice([4, 8]))
        R = _random_psd(rng, M)
        k = int(rng.integers(0, 3))
        sel = list(ols_run(SampleCovariance(R, 1), k, grid).doas)
        P_perp = orthogonal_complement(projector(steering_matrix(sel, M)), check=False)
        idx, _ = _select_index(residual_covariance(R, P_perp), P_perp, grid, sel)
        best, best_i = np.inf, None
        for i, th in enumerate(grid.points):
            if th in sel:
                continue
            try:
                P = projector(steering_matrix(sel + [th], M))
            except np.linalg.LinAlgError:
                continue
            val = trace_real(R) - trace_real(P @ R)
            if val < best:
                best, best_i = val, i
        if idx != best_i:
            return False
    return True


def _check_hungarian(rng, n=100):
    for _ in range(n):
        r, c = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        C = rng.integers(0, 20, size=(r, c)).astype(float)
        _, cost = hungarian_assign(C)
        if r <= c:
            brute = min(sum(C[i, p[i]] for i in range(r)) for p in itertools.permutations(range(c), r))
        else:
            brute = min(sum(C[p[j], j] for j in range(c)) for p in itertools.permutations(range(r), c))
        if cost != brute:
            return False
    return True


def _check_rank_scale(rng, n=50):
    for _ in range(n):
        lam = np.sort(rng.exponential(size=8))[::-1] + 1e-3
        c = float(np.exp(rng.uniform(-10, 10)))
        if rank_itc(lam, 100)[0] != rank_itc(lam * c, 100)[0]:
            return False
    return True


def _check_classify(rng, n=100):
    for _ in range(n):
        t = rng.uniform(-1.2, 1.2, int(rng.integers(0, 6)))
        e = rng.uniform(-1.2, 1.2, int(rng.integers(0, 6)))
        o = classify(t, e, 16)
        if o.hits + o.misses != t.size or o.hits + o.false_alarms != e.size:
            return False
    return True


CHECKS = (
    ("projector idempotence/complementarity", _check_projectors),
    ("Jacobi EVD reconstruction", _check_evd),
    ("steering unit modulus and conjugate symmetry", _check_steering),
    ("OLS ratio form equals trace form", _check_selection_equivalence),
    ("Hungarian equals permutation enumeration", _check_hungarian),
    ("rank-ITC scale invariance", _check_rank_scale),
    ("classify count conservation", _check_classify),
)


def run_selftest(seed=2024, out=print):
    rng = np.random.default_rng(seed)
    ok = True
    for name, check in CHECKS:
        passed = bool(check(rng))
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
