"""Sample and residual covariance matrices."""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError


@dataclass(frozen=True)
class SampleCovariance:
    matrix: np.ndarray
    num_snapshots: int

    @property
    def num_antennas(self):
        return self.matrix.shape[0]


def sample_covariance(obs):
    """
    Average of snapshot outer products ``y y^H``.

    Accepts an :class:`~itcols.scene.ObservationSet` or a raw array whose
    last axis is the antenna index.
    """
    y = getattr(obs, "snapshots", obs)
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim < 1 or y.size == 0:
        raise ValueError("empty observation set")
    Y = y.reshape(-1, y.shape[-1])
    n = Y.shape[0]
    R = (Y.T @ Y.conj()) / n
    R = 0.5 * (R + R.conj().T)
    return SampleCovariance(R, n)


def residual_covariance(R, P_perp):
    """``P_perp R P_perp`` for a sample covariance (or plain matrix) ``R``."""
    Rm = getattr(R, "matrix", R)
    P_perp = np.asarray(P_perp)
    if Rm.shape != P_perp.shape or Rm.ndim != 2:
        raise DimensionError(f"shape mismatch: {Rm.shape} vs {P_perp.shape}")
    Rk = P_perp @ Rm @ P_perp
    return 0.5 * (Rk + Rk.conj().T)
