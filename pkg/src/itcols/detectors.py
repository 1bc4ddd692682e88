"""
Joint target-number and DoA estimators built on orthogonal least squares.

Five estimators are provided:

* :func:`ols_run` -- greedy OLS with a known number of steps;
* disjoint (:func:`disjoint_itc_ols`) -- rank-based ITC on the eigenvalues
  of ``R`` fixes the count, OLS then finds the angles;
* :func:`joint_itc_ols` -- every OLS step is kept only while it lowers the
  selection-based ITC objective;
* :func:`hybrid_itc_ols` -- the rank estimate sets a floor of forced OLS
  steps, the selection rule may add more;
* :func:`threshold_ols` -- residual-energy threshold baseline.

:func:`ml_exhaustive` is a brute-force search over angle pairs, kept as a
test oracle for small grids.
"""

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .covariance import SampleCovariance, residual_covariance
from .linalg import (
    EigenSpectrum,
    SingularGramError,
    hermitian_eigendecompose,
    orthogonal_complement,
    projector,
    trace_real,
)
from .scene import steering_matrix

INADMISSIBLE_RTOL = 1e-8


class SaturatedSubspaceError(RuntimeError):
    """No grid point is admissible: the selected angles span the array space."""


class Penalty(enum.Enum):
    AIC = "AIC"
    BIC = "BIC"

    def rank(self, k, M, num_snapshots):
        """Complexity penalty of the eigenvalue (rank) criterion."""
        dof = k * (2 * M - k)
        if self is Penalty.AIC:
            return 2.0 * dof
        return dof * math.log(num_snapshots)

    def selection(self, k, num_snapshots):
        """Complexity penalty of the OLS selection criterion."""
        dof = k * (1 + 2 * num_snapshots)
        if self is Penalty.AIC:
            return 2.0 * dof
        return dof * math.log(num_snapshots)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True, eq=False)
class AngleGrid:
    """Sorted candidate DoAs in radians."""

    points: np.ndarray
    _steering_cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid must be a non-empty 1-D array")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] < -math.pi / 2 or pts[-1] > math.pi / 2:
            raise ValueError("grid points must lie in [-pi/2, pi/2]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform_sine(cls, resolution=1024):
        """``resolution`` points uniform in sin(theta) over [-1, 1)."""
        u = -1.0 + 2.0 * np.arange(resolution) / resolution
        return cls(np.arcsin(u))

    @property
    def resolution(self):
        return self.points.size

    def __len__(self):
        return self.points.size

    def steering(self, M):
        A = self._steering_cache.get(M)
        if A is None:
            A = steering_matrix(self.points, M)
            A.setflags(write=False)
            self._steering_cache[M] = A
        return A


@dataclass(frozen=True)
class DetectorConfig:
    """
    Settings shared by the ITC-OLS detectors.

    ``sigma_c_sq`` is the ML correction floor in linear power units (0
    disables it); ``noise_variance`` is the known noise power. When
    ``max_targets`` is None it defaults to ``M - 1``.
    """

    noise_variance: float
    penalty: Penalty = Penalty.AIC
    sigma_c_sq: float = 10.0 ** (-3.5)
    grid: AngleGrid = field(default_factory=AngleGrid.uniform_sine)
    max_targets: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "penalty", Penalty.parse(self.penalty))
        if self.sigma_c_sq < 0:
            raise ValueError("sigma_c_sq must be >= 0")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be > 0")
        if self.max_targets is not None and self.max_targets < 1:
            raise ValueError("max_targets must be >= 1")

    def target_cap(self, M):
        cap = M - 1 if self.max_targets is None else self.max_targets
        if not 1 <= cap <= M - 1:
            raise ValueError(f"max_targets must lie in [1, {M - 1}], got {cap}")
        return cap


@dataclass(frozen=True)
class EstimationResult:
    k_hat: int
    doas: tuple
    itc_trace: tuple = ()
    method: str = ""
    rank_k_hat: Optional[int] = None
    residuals: tuple = ()

    def to_dict(self):
        return {
            "method": self.method,
            "k_hat": self.k_hat,
            "doas": [float(x) for x in self.doas],
            "itc_trace": [[int(k), float(v)] for k, v in self.itc_trace],
            "rank_k_hat": self.rank_k_hat,
            "residuals": [float(x) for x in self.residuals],
        }


def _matrix(R):
    return R.matrix if isinstance(R, SampleCovariance) else np.asarray(R)


def rank_itc(spectrum, num_snapshots, penalty=Penalty.AIC):
    """
    Estimate the signal-subspace dimension from covariance eigenvalues.

    For each candidate ``k`` in ``0..M-1`` the criterion is
    ``-2 N (M-k) log(g/a) + nu(k)`` where ``g`` and ``a`` are the geometric
    and arithmetic means of the ``M-k`` smallest eigenvalues and ``N`` is
    the number of snapshots. The log ratio is evaluated as mean of logs
    minus log of mean.

    Returns
    -------
    k_hat : int
        Minimiser of the criterion; ties go to the smaller ``k``.
    values : list of float
        Criterion value for every candidate ``k``.
    """
    penalty = Penalty.parse(penalty)
    lam = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    M = lam.size
    if M < 2:
        raise ValueError("rank estimation needs at least two eigenvalues")
    if np.any(lam <= 0):
        raise ValueError("eigenvalues must be positive (clamp them first)")
    lam = np.sort(lam)[::-1]
    values = []
    for k in range(M):
        tail = lam[k:]
        log_ratio = np.mean(np.log(tail)) - math.log(np.mean(tail))
        values.append(-2.0 * num_snapshots * (M - k) * log_ratio + penalty.rank(k, M, num_snapshots))
    return int(np.argmin(values)), values


def _selection_scores(R_k, P_perp, A):
    num = np.einsum("mg,mn,ng->g", A.conj(), R_k, A).real
    PA = P_perp @ A
    den = np.sum(np.abs(PA) ** 2, axis=0)
    return num, den


def _select_index(R_k, P_perp, grid, selected=()):
    M = R_k.shape[0]
    A = grid.steering(M)
    num, den = _selection_scores(R_k, P_perp, A)
    admissible = den >= INADMISSIBLE_RTOL * M
    if len(selected):
        admissible &= ~np.isin(grid.points, np.asarray(selected, dtype=float))
    if not np.any(admissible):
        raise SaturatedSubspaceError("no admissible grid point left")
    ratio = np.full(den.shape, -np.inf)
    ratio[admissible] = num[admissible] / den[admissible]
    idx = int(np.argmax(ratio))
    return idx, float(ratio[idx])


def ols_select(R_k, P_perp, grid: AngleGrid, selected=()):
    """
    One OLS selection step.

    Maximises ``a^H R_k a / ||P_perp a||^2`` over the grid, where ``R_k``
    is the residual covariance ``P_perp R P_perp``. Grid points whose
    steering vector lies (nearly) inside the already selected subspace
    are skipped.

    Returns
    -------
    theta : float
        Selected grid angle (smallest angle on exact ties).
    ratio : float
        Residual-energy reduction achieved by that angle.
    """
    idx, ratio = _select_index(np.asarray(R_k), np.asarray(P_perp), grid, selected)
    return float(grid.points[idx]), ratio


class _Greedy:
    """Incremental OLS state: selected angles, complement projector, residual."""

    def __init__(self, R, grid):
        self.R = _matrix(R)
        self.M = self.R.shape[0]
        self.grid = grid
        self.doas = []
        self.P_perp = np.eye(self.M, dtype=np.complex128)
        self.residual = trace_real(self.R)

    def propose(self):
        """Next OLS angle and the projector/residual it would produce."""
        R_k = residual_covariance(self.R, self.P_perp)
        theta, _ = ols_select(R_k, self.P_perp, self.grid, self.doas)
        P = projector(steering_matrix(self.doas + [theta], self.M))
        P_perp = orthogonal_complement(P, check=False)
        return theta, P_perp, trace_real(P_perp @ self.R)

    def accept(self, theta, P_perp, residual):
        self.doas.append(theta)
        self.P_perp = P_perp
        self.residual = residual


def ols_run(R, k_target, grid: AngleGrid, max_targets=None):
    """Run exactly ``k_target`` OLS selection/update iterations."""
    state = _Greedy(R, grid)
    cap = state.M - 1 if max_targets is None else max_targets
    if not 0 <= k_target <= cap:
        raise ValueError(f"k_target must lie in [0, {cap}], got {k_target}")
    residuals = [state.residual]
    for _ in range(k_target):
        state.accept(*state.propose())
        residuals.append(state.residual)
    return EstimationResult(
        k_hat=len(state.doas),
        doas=tuple(state.doas),
        method="ols",
        residuals=tuple(residuals),
    )


def itc_ols_objective(residual_trace, k, cfg: DetectorConfig, num_snapshots):
    """
    Selection-based ITC value after ``k`` OLS steps.

    Evaluates ``2 N / max(sigma^2, sigma_c^2) * residual_trace + eta(k)``,
    the Gaussian ``-2 log L`` with the noise power floored at ``sigma_c^2``.
    ``residual_trace`` is ``Tr[P_perp R]`` for the normalised sample
    covariance, so ``N * residual_trace`` is the summed squared residual
    over all ``N = D Q`` snapshots.
    """
    if residual_trace < 0:
        raise ValueError("residual trace must be non-negative")
    denom = max(cfg.noise_variance, cfg.sigma_c_sq)
    fit = 2.0 * num_snapshots * residual_trace / denom
    return fit + cfg.penalty.selection(k, num_snapshots)


def _num_snapshots(R):
    if not isinstance(R, SampleCovariance):
        raise TypeError("ITC detectors need a SampleCovariance (snapshot count)")
    return R.num_snapshots


def _selection_loop(R, cfg, forced, method, rank_k_hat=None):
    n = _num_snapshots(R)
    state = _Greedy(R, cfg.grid)
    cap = cfg.target_cap(state.M)
    forced = min(forced, cap)
    current = itc_ols_objective(max(state.residual, 0.0), 0, cfg, n)
    trace = [(0, current)]
    residuals = [state.residual]
    while len(state.doas) < cap:
        k_next = len(state.doas) + 1
        try:
            theta, P_perp, residual = state.propose()
        except (SaturatedSubspaceError, SingularGramError):
            break
        value = itc_ols_objective(max(residual, 0.0), k_next, cfg, n)
        trace.append((k_next, value))
        if k_next > forced and not value < current:
            break
        state.accept(theta, P_perp, residual)
        residuals.append(residual)
        current = value
    return EstimationResult(
        k_hat=len(state.doas),
        doas=tuple(state.doas),
        itc_trace=tuple(trace),
        method=method,
        rank_k_hat=rank_k_hat,
        residuals=tuple(residuals),
    )


def joint_itc_ols(R: SampleCovariance, cfg: DetectorConfig):
    """OLS where each new angle is kept only if it lowers the ITC objective."""
    return _selection_loop(R, cfg, forced=0, method="joint")


def hybrid_itc_ols(R: SampleCovariance, cfg: DetectorConfig, spectrum: Optional[EigenSpectrum] = None):
    """
    Rank-ITC sets a floor of forced OLS steps; the selection rule decides
    whether to continue past it. ``spectrum`` may be passed to reuse an
    existing eigendecomposition of ``R``.
    """
    n = _num_snapshots(R)
    if spectrum is None:
        spectrum = hermitian_eigendecompose(R.matrix, vectors=False)
    rank_k, _ = rank_itc(spectrum, n, cfg.penalty)
    return _selection_loop(R, cfg, forced=rank_k, method="hybrid", rank_k_hat=rank_k)


def disjoint_itc_ols(R: SampleCovariance, cfg: DetectorConfig, spectrum: Optional[EigenSpectrum] = None):
    """Rank-ITC count followed by that many OLS iterations."""
    n = _num_snapshots(R)
    if spectrum is None:
        spectrum = hermitian_eigendecompose(R.matrix, vectors=False)
    rank_k, values = rank_itc(spectrum, n, cfg.penalty)
    cap = cfg.target_cap(R.num_antennas)
    res = ols_run(R, min(rank_k, cap), cfg.grid, max_targets=cap)
    return EstimationResult(
        k_hat=res.k_hat,
        doas=res.doas,
        itc_trace=tuple(enumerate(values)),
        method="disjoint",
        rank_k_hat=rank_k,
        residuals=res.residuals,
    )


def residual_threshold(noise_variance, num_observations):
    """``sigma^2 * N * sqrt(2 N ln N)`` with ``N = D Q M``."""
    n = num_observations
    if n < 2:
        raise ValueError("need at least two observations")
    return noise_variance * n * math.sqrt(2.0 * n * math.log(n))


def threshold_ols(R: SampleCovariance, noise_variance, grid: AngleGrid, max_targets=None):
    """OLS that keeps iterating while the residual trace exceeds a fixed threshold."""
    M = R.num_antennas
    thr = residual_threshold(noise_variance, R.num_snapshots * M)
    cap = M - 1 if max_targets is None else max_targets
    state = _Greedy(R, grid)
    residuals = [state.residual]
    while len(state.doas) < cap and state.residual > thr:
        try:
            state.accept(*state.propose())
        except (SaturatedSubspaceError, SingularGramError):
            break
        residuals.append(state.residual)
    return EstimationResult(
        k_hat=len(state.doas),
        doas=tuple(state.doas),
        itc_trace=tuple(enumerate(residuals)),
        method="threshold",
        residuals=tuple(residuals),
    )


def ml_exhaustive(R, k, grid: AngleGrid):
    """
    Exhaustive least-squares DoA search for one or two targets.

    Minimises ``Tr[P_perp(Theta) R]`` over every ``k``-subset of the grid.
    Intended as a reference on coarse grids (at most 256 points).

    Returns
    -------
    doas : tuple of float
    residual : float
    """
    if k not in (1, 2):
        raise NotImplementedError("exhaustive search supports k in {1, 2} only")
    if len(grid) > 256:
        raise ValueError("exhaustive search is limited to grids of <= 256 points")
    Rm = _matrix(R)
    M = Rm.shape[0]
    total = trace_real(Rm)
    best, best_doas = math.inf, None
    for combo in itertools.combinations(range(len(grid)), k):
        thetas = grid.points[list(combo)]
        try:
            P = projector(steering_matrix(thetas, M))
        except SingularGramError:
            continue
        residual = total - trace_real(P @ Rm)
        if residual < best:
            best, best_doas = residual, tuple(float(t) for t in thetas)
    return best_doas, best
