"""Effective rank, time-windowed rank analysis and regularized reproduction.

The effective rank of a matrix is exp(W) with W the Shannon entropy
(natural log) of the L1-normalized singular values; it runs continuously
from 1 (an outer product) to min(dims) (uniform spectrum) and measures the
usable dimensionality of a transfer matrix.

Windowed analysis applies a rectangular window [0, tau) to an RIR tensor
and evaluates a single-bin discrete Fourier sum at the analysis frequency,
giving the matrix G[tau, f] whose rank growth over tau tracks the
accumulation of room reflections.

All operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .room_image import RirTensor
from .sph_sampling import make_grid, steering_vector

DEFAULT_THRESHOLD_DB = 50.0
DEFAULT_TAU_POINTS = 60
DEFAULT_TAU_START = 1e-3


def _matrix(entries) -> np.ndarray:
    entries = entries.entries if hasattr(entries, "entries") else np.asarray(entries)
    if entries.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={entries.ndim}")
    return entries


def singular_spectrum(matrix) -> np.ndarray:
    """Non-negative singular values in descending order."""
    return np.linalg.svd(_matrix(matrix), compute_uv=False)


def effective_rank(matrix) -> float:
    """exp of the entropy of the normalized singular-value distribution.

    0 log 0 is taken as 0; an all-zero matrix has no distribution and is
    rejected.
    """
    s = singular_spectrum(matrix)
    total = s.sum()
    if total == 0.0:
        raise ValueError("effective rank is undefined for an all-zero matrix")
    p = s / total
    p = p[p > 0]
    return float(np.exp(-np.sum(p * np.log(p))))


def windowed_system(rir: RirTensor, tau: float, freq_hz: float) -> np.ndarray:
    """G[tau, f]: rectangular window [0, tau) then a single-bin Fourier sum.

    The bin is evaluated by direct summation sum_t g[t] e^{+j 2 pi f t / fs},
    the analysis kernel conjugate-paired with the e^{-j omega t} synthesis
    convention; at tau = T / fs on a DFT grid frequency this recovers the
    frequency-domain system matrix G(2 pi f / c) exactly (and makes the
    element-space and SH-domain analysis paths agree). freq_hz need not lie
    on the DFT grid.
    """
    if not 0 < tau <= rir.duration + 0.5 / rir.fs:
        raise ValueError(f"tau must lie in (0, {rir.duration}], got {tau}")
    if freq_hz >= rir.fs / 2:
        raise ValueError(f"analysis frequency {freq_hz} exceeds Nyquist {rir.fs / 2}")
    if freq_hz <= 0:
        raise ValueError(f"analysis frequency must be > 0, got {freq_hz}")
    n = min(rir.num_samples, int(round(tau * rir.fs)))
    if n < 1:
        raise ValueError(f"window of {tau} s spans no samples at fs = {rir.fs}")
    kernel = np.exp(2j * np.pi * freq_hz * np.arange(n) / rir.fs)
    return np.tensordot(rir.samples[:, :, :n], kernel, axes=([2], [0]))


@dataclass(frozen=True)
class ErankCurve:
    """Effective rank as a function of window duration at one frequency."""

    taus: np.ndarray
    eranks: np.ndarray
    analysis_freq: float

    def __post_init__(self):
        if self.taus.shape != self.eranks.shape:
            raise ValueError("taus and eranks must have matching shapes")


def default_tau_grid(duration: float, count: int = DEFAULT_TAU_POINTS,
                     start: float = DEFAULT_TAU_START) -> np.ndarray:
    """Logarithmic window grid from `start` to the full duration."""
    if duration <= start:
        raise ValueError(f"duration {duration} must exceed the grid start {start}")
    return np.geomspace(start, duration, count)


def erank_vs_window(rir: RirTensor, freq_hz: float, taus=None,
                    transform=None) -> ErankCurve:
    """Effective rank over a grid of window durations.

    Window prefixes that contain no signal at all (exactly zero matrices)
    are skipped rather than reported. `transform`, when given, maps each
    windowed matrix before the rank measurement (used to project
    element-space tensors into the SH domain).
    """
    if taus is None:
        taus = default_tau_grid(rir.duration)
    taus = np.asarray(taus, dtype=float)
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau grid must be strictly increasing")
    kept, eranks = [], []
    for tau in taus:
        G = windowed_system(rir, tau, freq_hz)
        if transform is not None:
            G = transform(G)
        if not np.any(G):
            continue
        kept.append(tau)
        eranks.append(effective_rank(G))
    return ErankCurve(np.array(kept), np.array(eranks), analysis_freq=freq_hz)


def regularized_pinv(matrix, threshold_db: float = DEFAULT_THRESHOLD_DB):
    """SVD pseudo-inverse inverting only singular values within threshold_db
    of the largest; the rest are zeroed. Returns (pinv, inverted_count)."""
    G = _matrix(matrix)
    U, s, Vh = np.linalg.svd(G, full_matrices=False)
    if s[0] == 0.0:
        raise ValueError("cannot invert an all-zero matrix")
    cutoff = s[0] * 10.0 ** (-threshold_db / 20.0)
    keep = s >= cutoff
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    pinv = (Vh.conj().T * inv) @ U.conj().T
    return pinv, int(np.count_nonzero(keep))


@dataclass(frozen=True)
class ReproductionReport:
    """Outcome of reproducing a target incident field through a system."""

    target: np.ndarray
    achieved: np.ndarray
    weights: np.ndarray
    error_db: float
    inverted_count: int


def reproduce_field(sys, target, threshold_db: float = DEFAULT_THRESHOLD_DB) -> ReproductionReport:
    """Drive the system toward a target field: u = G^+ p_t, p_a = G u.

    The error is 20 log10(||p_a - p_t|| / ||p_t||) dB.
    """
    G = _matrix(sys)
    target = np.asarray(target, dtype=complex)
    if target.shape != (G.shape[0],):
        raise ValueError(
            f"target length {target.shape} does not match system rows {G.shape[0]}")
    norm_t = np.linalg.norm(target)
    if norm_t == 0:
        raise ValueError("target field is identically zero")
    pinv, count = regularized_pinv(G, threshold_db)
    weights = pinv @ target
    achieved = G @ weights
    error_db = 20.0 * np.log10(np.linalg.norm(achieved - target) / norm_t)
    return ReproductionReport(target=target, achieved=achieved, weights=weights,
                              error_db=float(error_db), inverted_count=count)


def multibeam_target(order: int, num_beams: int = 12) -> np.ndarray:
    """High-complexity target: equal-weight sum of orthonormalized plane-wave
    steering vectors at the directions of a nearly-uniform num_beams grid."""
    grid = make_grid("nearly_uniform", num_beams)
    S = np.column_stack([steering_vector(t, p, order)
                         for t, p in zip(grid.theta, grid.phi)])
    Q, _ = np.linalg.qr(S)
    target = Q @ (np.ones(Q.shape[1]) / np.sqrt(Q.shape[1]))
    return target
