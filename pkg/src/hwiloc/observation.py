"""Received-signal models for the uplink pilot block.

Two mean models are built from the same geometry:

* the impaired chain (the signal the hardware actually produces): pilots are
  PA-distorted in the time domain, the array response passes through the full
  coupling matrix (known Toeplitz part plus unknown residual), and each
  transmission is wrapped in the unitary time-domain phase-noise/CFO sandwich
  F E_g Xi_g F^H;
* the clean chain assumed by a mismatched receiver: no PA distortion, no
  residual coupling, no phase rotations, only the known Toeplitz coupling.

Both produce (G, K) arrays of subcarrier-domain means for one pilot block.
Flattening row-major gives the g-major stacked vector used by estimators and
bounds. eta_* variants are the means with the complex path gain divided out,
which is what the projection-based estimators search over.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .impairments import ImpairmentConfig, ImpairmentRealization, mc_matrix, pa_apply
from .model import ChannelParams, PilotBlock, SystemConfig, delay_vector, dft_matrix, steering_vector


def _row_gains(aoa: float, combiners: np.ndarray, coupling_mat: np.ndarray) -> np.ndarray:
    """Per-transmission scalar w_g^T C a(aoa), shape (G,). Plain transpose,
    no conjugation: the combiner acts as a linear functional on the array."""
    a = steering_vector(aoa, coupling_mat.shape[0])
    return combiners @ (coupling_mat @ a)


def transmit_pilots(block: PilotBlock, imp: ImpairmentConfig, cfg: SystemConfig) -> np.ndarray:
    """Frequency-domain pilots after the PA: F pa(F^H x_g) per row, (G, K).

    The PA acts on the K non-oversampled time-domain samples of each
    transmission. A linear PA returns the pilots unchanged.
    """
    if imp.pa_is_linear:
        return block.symbols.copy()
    f = dft_matrix(cfg.n_subcarriers)
    time = block.symbols @ f.conj()  # rows are F^H x_g
    distorted = pa_apply(time, imp.pa_coeffs, imp.pa_clip)
    return distorted @ f


def sandwich_matrices(real: ImpairmentRealization, cfg: SystemConfig) -> np.ndarray:
    """Per-transmission unitary phase-noise/CFO sandwich F E_g Xi_g F^H, (G, K, K).

    E_g and Xi_g are diagonal unit-modulus rotations, so each slice is
    unitary and preserves per-transmission energy.
    """
    k = cfg.n_subcarriers
    f = dft_matrix(k)
    fh = f.conj().T
    out = np.empty((cfg.n_transmissions, k, k), dtype=complex)
    samples = np.arange(k)
    total = k + cfg.cp_length
    for g in range(cfg.n_transmissions):
        ramp = 2 * np.pi * real.cfo * samples / k
        common = 2 * np.pi * real.cfo * (g + 1) * total / k
        diag = np.exp(1j * (common + ramp + real.pn_phases[g]))
        out[g] = (f * diag[None, :]) @ fh
    return out


def eta_m2(
    aoa: float,
    delay: float,
    cfg: SystemConfig,
    block: PilotBlock,
    coupling: tuple = (),
) -> np.ndarray:
    """Clean-model mean with unit gain: eta_g = (w_g^T C~ a) d(delay) * x_g."""
    if delay < 0:
        raise ValueError("delay must be non-negative")
    ctilde = mc_matrix(coupling, None, cfg.n_antennas)
    b = _row_gains(aoa, block.combiners, ctilde)
    d = delay_vector(delay, cfg.n_subcarriers, cfg.subcarrier_spacing_hz)
    return b[:, None] * (d[None, :] * block.symbols)


def mu_m2(
    theta: ChannelParams,
    cfg: SystemConfig,
    block: PilotBlock,
    coupling: tuple = (),
) -> np.ndarray:
    """Clean-model mean, (G, K): gain times :func:`eta_m2`."""
    return theta.gain * eta_m2(theta.aoa, theta.delay, cfg, block, coupling)


def eta_m1(
    aoa: float,
    delay: float,
    cfg: SystemConfig,
    block: PilotBlock,
    imp: ImpairmentConfig,
    real: ImpairmentRealization,
) -> np.ndarray:
    """Impaired-chain mean with unit gain, (G, K).

    Chain per transmission: PA-distorted pilots, full coupling in the array
    response, delay phasing, then the time-domain phase-noise/CFO sandwich.
    """
    if delay < 0:
        raise ValueError("delay must be non-negative")
    c_full = mc_matrix(imp.coupling, real.mc_residual, cfg.n_antennas)
    b = _row_gains(aoa, block.combiners, c_full)
    d = delay_vector(delay, cfg.n_subcarriers, cfg.subcarrier_spacing_hz)
    xt = transmit_pilots(block, imp, cfg)
    v = b[:, None] * (d[None, :] * xt)
    m = sandwich_matrices(real, cfg)
    return np.einsum("gij,gj->gi", m, v)


def mu_m1(
    theta: ChannelParams,
    cfg: SystemConfig,
    block: PilotBlock,
    imp: ImpairmentConfig,
    real: ImpairmentRealization,
) -> np.ndarray:
    """Impaired-chain mean, (G, K): gain times :func:`eta_m1`."""
    return theta.gain * eta_m1(theta.aoa, theta.delay, cfg, block, imp, real)


def observe(mu: np.ndarray, sigma_n: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of std sigma_n.

    Real and imaginary parts each get variance sigma_n^2 / 2 per element.
    sigma_n = 0 returns the mean unchanged (up to a copy).
    """
    if sigma_n < 0:
        raise ValueError("noise std must be non-negative")
    mu = np.asarray(mu, dtype=complex)
    if sigma_n == 0:
        return mu.copy()
    noise = rng.normal(0.0, 1.0, mu.shape) + 1j * rng.normal(0.0, 1.0, mu.shape)
    return mu + (sigma_n / np.sqrt(2.0)) * noise


@dataclass
class ObservationSet:
    """A received pilot block plus the metadata needed to interpret it."""

    y: np.ndarray  # (G, K) complex received subcarrier samples
    sigma_n: float
    model: str  # "impaired" or "clean", which chain generated the mean
    realization: ImpairmentRealization | None = None
