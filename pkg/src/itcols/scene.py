"""
Target scenes and OFDM passive-radar snapshot synthesis.

A single-antenna access point transmits ``D`` OFDM symbols of ``Q``
subcarriers; the passive receiver is a half-wavelength ULA of ``M``
antennas. Each target contributes a steering vector scaled by a
per-(symbol, subcarrier) channel coefficient that carries its range
phase and Doppler rotation, multiplied by the unknown data symbol.
"""

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8
QPSK = np.array([1.0, 1.0j, -1.0, -1.0j])

_DOMAIN_SLACK = 1e-12


class DomainError(ValueError):
    """Raised for angles outside [-pi/2, pi/2]."""


@dataclass(frozen=True)
class RadarConfig:
    """Array and waveform geometry. Defaults follow a 5 GHz Wi-Fi 7 setup."""

    num_antennas: int = 16
    num_subcarriers: int = 512
    num_symbols: int = 10
    subcarrier_spacing: float = 78.125e3
    carrier_frequency: float = 5e9
    symbol_duration: float = 13.6e-6

    def __post_init__(self):
        if self.num_antennas < 2:
            raise ValueError("num_antennas must be >= 2")
        if self.num_subcarriers < 1 or self.num_symbols < 1:
            raise ValueError("num_subcarriers and num_symbols must be >= 1")
        for name in ("subcarrier_spacing", "carrier_frequency", "symbol_duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def wavenumber(self):
        """k_c = 2 pi f / c in rad/m."""
        return 2.0 * math.pi * self.carrier_frequency / SPEED_OF_LIGHT

    @property
    def num_snapshots(self):
        return self.num_symbols * self.num_subcarriers

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Target:
    doa: float
    gain: complex
    delay: float = 0.0
    doppler: float = 0.0

    def __post_init__(self):
        _check_angle(self.doa)
        if abs(self.gain) == 0:
            raise ValueError("target gain must be non-zero")
        if self.delay < 0:
            raise ValueError("target delay must be non-negative")


@dataclass(frozen=True)
class Scene:
    targets: tuple = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def num_targets(self):
        return len(self.targets)

    @property
    def doas(self):
        return np.array([t.doa for t in self.targets], dtype=float)

    @property
    def gains(self):
        return np.array([t.gain for t in self.targets], dtype=complex)

    def to_dict(self, cfg: Optional[RadarConfig] = None):
        doc = {
            "seed": int(self.seed),
            "targets": [
                {
                    "theta_rad": float(t.doa),
                    "gain_re": float(complex(t.gain).real),
                    "gain_im": float(complex(t.gain).imag),
                    "tau_s": float(t.delay),
                    "doppler_hz": float(t.doppler),
                }
                for t in self.targets
            ],
        }
        if cfg is not None:
            doc["config"] = cfg.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc):
        targets = [
            Target(
                doa=t["theta_rad"],
                gain=complex(t["gain_re"], t["gain_im"]),
                delay=t["tau_s"],
                doppler=t["doppler_hz"],
            )
            for t in doc["targets"]
        ]
        return cls(tuple(targets), int(doc["seed"]))


@dataclass(frozen=True)
class SceneBounds:
    """Sampling ranges for :func:`random_scene`.

    ``min_separation`` is a sine-space exclusion radius between targets;
    0 disables it.
    """

    min_range: float = 5.0
    max_range: float = 60.0
    max_sine: float = math.sin(math.radians(60.0))
    max_speed: float = 10.0
    min_separation: float = 0.0


@dataclass(frozen=True)
class ObservationSet:
    """Snapshots ``y[d, q]`` stored as an array of shape (D, Q, M)."""

    snapshots: np.ndarray
    noise_variance: float
    symbols: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.snapshots.ndim != 3:
            raise ValueError("snapshots must have shape (D, Q, M)")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")

    @property
    def shape(self):
        return self.snapshots.shape

    def to_dict(self):
        y = self.snapshots
        doc = {
            "shape": list(y.shape),
            "noise_variance": float(self.noise_variance),
            "snapshots_re": y.real.ravel().tolist(),
            "snapshots_im": y.imag.ravel().tolist(),
        }
        if self.symbols is not None:
            doc["symbols_re"] = self.symbols.real.ravel().tolist()
            doc["symbols_im"] = self.symbols.imag.ravel().tolist()
        return doc

    @classmethod
    def from_dict(cls, doc):
        shape = tuple(doc["shape"])
        y = (np.array(doc["snapshots_re"]) + 1j * np.array(doc["snapshots_im"])).reshape(shape)
        s = None
        if "symbols_re" in doc:
            s = (np.array(doc["symbols_re"]) + 1j * np.array(doc["symbols_im"])).reshape(shape[:2])
        return cls(y, float(doc["noise_variance"]), s)


def _check_angle(theta):
    if not (-math.pi / 2 - _DOMAIN_SLACK <= theta <= math.pi / 2 + _DOMAIN_SLACK):
        raise DomainError(f"angle {theta!r} rad outside [-pi/2, pi/2]")


def steering_vector(theta, M):
    """ULA response ``exp(j pi m sin(theta))`` for ``m = 0..M-1``."""
    _check_angle(theta)
    if M < 1:
        raise ValueError("M must be >= 1")
    return np.exp(1j * np.pi * np.arange(M) * np.sin(theta))


def steering_matrix(thetas: Sequence[float], M):
    """Stack steering vectors column-wise; an empty list gives an (M, 0) matrix."""
    thetas = np.asarray(thetas, dtype=float).ravel()
    for th in thetas:
        _check_angle(th)
    return np.exp(1j * np.pi * np.outer(np.arange(M), np.sin(thetas)))


def channel_coefficient(target: Target, d, q, cfg: RadarConfig):
    """Channel coefficient of one target at OFDM symbol ``d``, subcarrier ``q``."""
    if not (0 <= d < cfg.num_symbols and 0 <= q < cfg.num_subcarriers):
        raise IndexError(f"(d, q) = ({d}, {q}) outside the OFDM grid")
    tau = target.delay
    phase = (
        -2 * np.pi * cfg.wavenumber * tau
        - 2 * np.pi * cfg.subcarrier_spacing * tau * q
        + 2 * np.pi * target.doppler * d * cfg.symbol_duration
    )
    return complex(target.gain) * np.exp(1j * phase)


def channel_tensor(scene: Scene, cfg: RadarConfig):
    """All channel coefficients as an array of shape (D, Q, K)."""
    D, Q = cfg.num_symbols, cfg.num_subcarriers
    K = scene.num_targets
    if K == 0:
        return np.zeros((D, Q, 0), dtype=complex)
    tau = np.array([t.delay for t in scene.targets])
    fd = np.array([t.doppler for t in scene.targets])
    d = np.arange(D)[:, None, None]
    q = np.arange(Q)[None, :, None]
    phase = (
        -2 * np.pi * cfg.wavenumber * tau
        - 2 * np.pi * cfg.subcarrier_spacing * tau * q
        + 2 * np.pi * fd * d * cfg.symbol_duration
    )
    return scene.gains * np.exp(1j * phase)


def noise_variance_for(scene: Scene, snr_db):
    """Noise power giving the requested mean-target-power SNR (1 when K = 0)."""
    if scene.num_targets == 0:
        return 1.0
    if snr_db == math.inf:
        return 0.0
    mean_power = float(np.mean(np.abs(scene.gains) ** 2))
    return mean_power * 10.0 ** (-snr_db / 10.0)


def synthesize(scene: Scene, cfg: RadarConfig, snr_db, rng_seed, symbols=None):
    """
    Generate the received snapshots for a scene.

    Parameters
    ----------
    scene : Scene
    cfg : RadarConfig
    snr_db : float
        Mean target power over noise power, in dB. ``math.inf`` gives
        noiseless data. Ignored when the scene is empty (unit noise).
    rng_seed : int
        Seed for the symbol and noise draws.
    symbols : array_like, optional
        Override the random QPSK symbols with a (D, Q) array.

    Returns
    -------
    ObservationSet
    """
    D, Q, M = cfg.num_symbols, cfg.num_subcarriers, cfg.num_antennas
    rng = np.random.default_rng(rng_seed)
    sym_idx = rng.integers(0, 4, size=(D, Q))
    # Noise is drawn unscaled so every SNR shares the same realisation.
    white = rng.standard_normal((D, Q, M, 2))
    if symbols is None:
        s = QPSK[sym_idx]
    else:
        s = np.broadcast_to(np.asarray(symbols, dtype=complex), (D, Q)).copy()

    sigma2 = noise_variance_for(scene, snr_db)
    beta = channel_tensor(scene, cfg) * s[:, :, None]
    A = steering_matrix(scene.doas, M)
    y = beta @ A.T
    if sigma2 > 0:
        y = y + math.sqrt(sigma2 / 2.0) * (white[..., 0] + 1j * white[..., 1])
    return ObservationSet(y, sigma2, s)


def random_scene(K, cfg: RadarConfig, rng_seed, bounds: SceneBounds = SceneBounds()):
    """
    Draw ``K`` random targets around a colocated transmitter/receiver.

    Range is uniform in ``[min_range, max_range]`` (two-way delay
    ``2r/c``), the DoA uniform in sine space, radial speed uniform in
    ``[-max_speed, max_speed]``. Amplitudes follow ``1/r^2`` and are
    rescaled so the mean target power is exactly one.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    rng = np.random.default_rng(rng_seed)
    if K == 0:
        return Scene((), rng_seed)

    r = rng.uniform(bounds.min_range, bounds.max_range, size=K)
    v = rng.uniform(-bounds.max_speed, bounds.max_speed, size=K)
    phase = rng.uniform(0.0, 2 * np.pi, size=K)
    u = _draw_sines(rng, K, bounds)

    amp = 1.0 / r**2
    amp = amp / math.sqrt(np.mean(amp**2))
    gains = amp * np.exp(1j * phase)
    tau = 2.0 * r / SPEED_OF_LIGHT
    fd = 2.0 * v * cfg.carrier_frequency / SPEED_OF_LIGHT
    targets = tuple(
        Target(float(np.arcsin(u[k])), complex(gains[k]), float(tau[k]), float(fd[k]))
        for k in range(K)
    )
    return Scene(targets, rng_seed)


def _draw_sines(rng, K, bounds, max_attempts=10000):
    lim = bounds.max_sine
    if bounds.min_separation <= 0:
        return rng.uniform(-lim, lim, size=K)
    u = []
    for _ in range(max_attempts):
        cand = rng.uniform(-lim, lim)
        if all(abs(cand - x) >= bounds.min_separation for x in u):
            u.append(cand)
            if len(u) == K:
                return np.array(u)
    raise ValueError(f"could not place {K} targets {bounds.min_separation} apart in sine space")
