"""
Passive radar snapshots and their covariance
============================================

A single-antenna access point sends OFDM frames. A 16-element
half-wavelength array listens to the echoes. This walk-through builds a
random scene, synthesises the snapshots and looks at the eigenvalues of
the sample covariance.
"""

import math

import numpy as np

from itcols import RadarConfig, hermitian_eigendecompose, random_scene, sample_covariance, synthesize

# A smaller frame than the default keeps this quick: 64 subcarriers, 4 symbols
cfg = RadarConfig(num_antennas=16, num_subcarriers=64, num_symbols=4)
print("snapshots per frame:", cfg.num_snapshots)

# Four targets between 5 m and 60 m, amplitude falling off as 1/r^2
scene = random_scene(4, cfg, rng_seed=7)
for t in scene.targets:
    print(f"theta = {math.degrees(t.doa):7.2f} deg   |alpha|^2 = {abs(t.gain) ** 2:.3f}")

# %%
# Noise power is set relative to the mean echo power
obs = synthesize(scene, cfg, snr_db=20.0, rng_seed=1)
print("noise variance:", obs.noise_variance)
print("snapshot array:", obs.snapshots.shape)

R = sample_covariance(obs)
lam = hermitian_eigendecompose(R.matrix, vectors=False).eigenvalues
np.set_printoptions(precision=3, suppress=True)
print("eigenvalues:", lam)

# %%
# Echoes from nearby ranges are strongly correlated across subcarriers, so
# the signal subspace can look smaller than the number of targets. Eight
# times the bandwidth decorrelates the echoes and the subspace fills out.
wide = RadarConfig(num_antennas=16, num_subcarriers=512, num_symbols=4)
scene_wide = random_scene(4, wide, rng_seed=7)
lam_wide = hermitian_eigendecompose(
    sample_covariance(synthesize(scene_wide, wide, 20.0, 1)).matrix, vectors=False
).eigenvalues
print("eigenvalues at Q=512:", lam_wide)
