import cmath
import json
import math

import numpy as np
import pytest

from itcols.covariance import sample_covariance
from itcols.scene import (
    SPEED_OF_LIGHT,
    DomainError,
    ObservationSet,
    RadarConfig,
    Scene,
    SceneBounds,
    Target,
    channel_coefficient,
    channel_tensor,
    random_scene,
    steering_matrix,
    steering_vector,
    synthesize,
)

SMALL = RadarConfig(num_antennas=4, num_subcarriers=8, num_symbols=3)


def test_wavenumber():
    cfg = RadarConfig()
    assert cfg.wavenumber == pytest.approx(2 * math.pi * 5e9 / SPEED_OF_LIGHT, rel=1e-15)


@pytest.mark.parametrize(
    "kwargs", [dict(num_antennas=1), dict(num_subcarriers=0), dict(subcarrier_spacing=0.0), dict(symbol_duration=-1.0)]
)
def test_radar_config_validation(kwargs):
    with pytest.raises(ValueError):
        RadarConfig(**kwargs)


class TestSteering:
    def test_broadside(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), np.ones(4))

    def test_endfire(self):
        np.testing.assert_allclose(steering_vector(np.pi / 2, 2), [1, -1], atol=1e-15)

    def test_thirty_degrees(self):
        np.testing.assert_allclose(steering_vector(np.pi / 6, 4), [1, 1j, -1, -1j], atol=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            steering_vector(2.0, 4)

    def test_matrix_empty(self):
        assert steering_matrix([], 5).shape == (5, 0)

    def test_matrix_columns(self):
        np.testing.assert_allclose(steering_matrix([0, np.pi / 2], 2), [[1, 1], [1, -1]], atol=1e-15)

    def test_duplicate_columns_rank_one(self):
        A = steering_matrix([0.4, 0.4], 6)
        assert abs(np.linalg.det(A.conj().T @ A)) < 1e-9

    @pytest.mark.parametrize("theta", np.linspace(-np.pi / 2, np.pi / 2, 21))
    def test_unit_modulus_and_conjugate_symmetry(self, theta):
        a = steering_vector(theta, 16)
        assert a[0] == 1
        assert np.max(np.abs(np.abs(a) - 1)) < 1e-12
        np.testing.assert_allclose(steering_vector(-theta, 16), a.conj(), atol=1e-12)


class TestChannel:
    def test_static_target(self):
        t = Target(0.1, 0.3 - 0.2j)
        for d in range(SMALL.num_symbols):
            for q in range(SMALL.num_subcarriers):
                assert channel_coefficient(t, d, q, SMALL) == pytest.approx(0.3 - 0.2j)

    def test_half_cycle_subcarrier_phase(self):
        tau = 0.5 / SMALL.subcarrier_spacing
        beta = channel_coefficient(Target(0.0, 1.0, tau, 0.0), 0, 1, SMALL)
        expected = -(2 * math.pi * SMALL.wavenumber * tau + math.pi)
        assert cmath.phase(beta / cmath.exp(1j * expected)) == pytest.approx(0.0, abs=1e-9)

    def test_matches_scalar_reevaluation(self):
        rng = np.random.default_rng(3)
        cfg = RadarConfig(num_subcarriers=16, num_symbols=5)
        for _ in range(20):
            t = Target(rng.uniform(-1, 1), complex(rng.normal(), rng.normal()), rng.uniform(0, 5e-7), rng.uniform(-300, 300))
            d, q = int(rng.integers(5)), int(rng.integers(16))
            kc = 2 * math.pi * cfg.carrier_frequency / SPEED_OF_LIGHT
            ref = (
                t.gain
                * cmath.exp(-2j * math.pi * kc * t.delay)
                * cmath.exp(-2j * math.pi * cfg.subcarrier_spacing * t.delay * q)
                * cmath.exp(2j * math.pi * t.doppler * d * cfg.symbol_duration)
            )
            got = channel_coefficient(t, d, q, cfg)
            assert got == pytest.approx(ref, rel=1e-9)
            assert abs(got) == pytest.approx(abs(t.gain))
            assert channel_tensor(Scene((t,)), cfg)[d, q, 0] == pytest.approx(ref, rel=1e-9)

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            channel_coefficient(Target(0, 1), SMALL.num_symbols, 0, SMALL)


class TestSynthesize:
    def test_noiseless_broadside(self):
        scene = Scene((Target(0.0, 1.0),))
        obs = synthesize(scene, SMALL, math.inf, 0, symbols=np.ones((3, 8)))
        assert obs.noise_variance == 0
        np.testing.assert_allclose(obs.snapshots, np.ones((3, 8, 4)))

    def test_noiseless_random_symbols(self):
        scene = Scene((Target(0.0, 1.0),))
        obs = synthesize(scene, SMALL, math.inf, 11)
        np.testing.assert_allclose(obs.snapshots, obs.symbols[:, :, None] * np.ones(4))
        np.testing.assert_allclose(np.abs(obs.symbols), 1.0)

    def test_snr_to_noise_variance(self):
        obs = synthesize(Scene((Target(0.2, 1.0),)), SMALL, 20.0, 0)
        assert obs.noise_variance == 0.01

    def test_empty_scene_unit_noise(self):
        cfg = RadarConfig(num_antennas=16, num_subcarriers=512, num_symbols=10)
        obs = synthesize(Scene(()), cfg, 35.0, 4)
        assert obs.noise_variance == 1.0
        R = sample_covariance(obs).matrix
        assert np.mean(np.diag(R).real) == pytest.approx(1.0, rel=0.02)
        # off-diagonal magnitudes scale like 1/sqrt(DQ)
        off = np.abs(R[~np.eye(16, dtype=bool)])
        assert np.max(off) < 5 / math.sqrt(5120)

    def test_deterministic(self):
        scene = random_scene(4, SMALL, 5)
        a = synthesize(scene, SMALL, 10.0, 99)
        b = synthesize(scene, SMALL, 10.0, 99)
        assert a.snapshots.tobytes() == b.snapshots.tobytes()

    def test_empirical_snr(self):
        cfg = RadarConfig(num_antennas=4, num_subcarriers=512, num_symbols=10)
        scene = Scene((Target(0.3, 1.0, 1e-7, 50.0),))
        clean = synthesize(scene, cfg, math.inf, 1).snapshots
        noisy = synthesize(scene, cfg, 20.0, 1).snapshots
        noise = noisy - clean
        snr = 10 * np.log10(np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2))
        assert snr == pytest.approx(20.0, abs=0.1)


class TestRandomScene:
    def test_empty(self):
        assert random_scene(0, SMALL, 1).num_targets == 0

    def test_repeatable(self):
        assert random_scene(5, SMALL, 17) == random_scene(5, SMALL, 17)

    def test_bounds_and_normalisation(self):
        cfg = RadarConfig()
        for seed in range(10000):
            scene = random_scene(8, cfg, seed)
            p = np.abs(scene.gains) ** 2
            assert np.mean(p) == pytest.approx(1.0, rel=1e-12)
        r = np.array([t.delay for t in scene.targets]) * SPEED_OF_LIGHT / 2
        assert np.all((r >= 5) & (r <= 60))
        assert np.all(np.abs(np.sin(scene.doas)) <= math.sin(math.radians(60)))
        v = np.array([t.doppler for t in scene.targets]) * SPEED_OF_LIGHT / (2 * cfg.carrier_frequency)
        assert np.all(np.abs(v) <= 10)

    def test_path_loss_amplitudes(self):
        scene = random_scene(6, RadarConfig(), 3)
        r = np.array([t.delay for t in scene.targets]) * SPEED_OF_LIGHT / 2
        ratio = np.abs(scene.gains) * r**2
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)

    def test_min_separation(self):
        bounds = SceneBounds(min_separation=0.375)
        for seed in range(50):
            u = np.sort(np.sin(random_scene(3, SMALL, seed, bounds).doas))
            assert np.all(np.diff(u) >= 0.375 - 1e-12)


def test_scene_json_roundtrip():
    scene = random_scene(3, SMALL, 8)
    doc = json.loads(json.dumps(scene.to_dict(SMALL)))
    assert set(doc["targets"][0]) == {"theta_rad", "gain_re", "gain_im", "tau_s", "doppler_hz"}
    assert doc["config"]["num_antennas"] == 4
    assert Scene.from_dict(doc) == scene


def test_observation_json_roundtrip():
    obs = synthesize(random_scene(2, SMALL, 1), SMALL, 5.0, 2)
    back = ObservationSet.from_dict(json.loads(json.dumps(obs.to_dict())))
    np.testing.assert_array_equal(back.snapshots, obs.snapshots)
    np.testing.assert_array_equal(back.symbols, obs.symbols)
    assert back.noise_variance == obs.noise_variance
