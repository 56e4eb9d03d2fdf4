"""Shoebox-room MIMO model via mirrored image sources.

The room transfer matrix at one wavenumber is the sum over image sources

    G_room = sum_g A_g B_M y*(eta_g) y^T(theta_g) H_L(D_g) Q_L O_g

where each term is a free-field system evaluated at the image position and
O_g is the parity-composed mirror operator accounting for the image's
flipped orientation (right-multiplied, like the rotation of Eq.-30 style
array transforms). A_g is the real product of the reflection coefficients
of the walls on the path; all propagation phase lives in h_n(k D_g).

Time-domain responses are synthesized on the DFT grid with conjugate-
symmetric assembly under the e^{-j omega t} convention, DC and Nyquist
bins forced to zero. Frequency bins are independent, so the synthesis is
a deterministic map over bins followed by one inverse FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .mimo_freefield import (SceneGeometry, ShMatrix, SphArraySpec, _check_far_field,
                             cap_diag, direction_angles, mode_strength_diag,
                             propagation_diag)
from .sph_special import AIR_DENSITY, SPEED_OF_SOUND, sh_num_coeffs, sph_hankel1, \
    sph_hankel1_deriv
from .sph_sampling import steering_vector
from .sh_transforms import parity_mirror_matrix

WALLS = ("x0", "x1", "y0", "y1", "z0", "z1")

MAX_RIR_ELEMENTS = 64_000_000  # guard for (N_M+1)^2 (N_L+1)^2 T allocations


@dataclass(frozen=True)
class WallReflection:
    """Per-wall reflection coefficients, piecewise-constant over frequency bands.

    values has shape (6, B) in WALLS order; band_edges holds the B-1
    interior band edges in Hz (ascending). A scalar or per-wall input is a
    single band covering all frequencies.
    """

    values: np.ndarray
    band_edges: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        edges = np.asarray(self.band_edges, dtype=float)
        if values.shape[0] != 6:
            raise ValidationError(f"room.reflection: expected 6 walls, got {values.shape[0]}")
        if values.shape[1] != edges.shape[0] + 1:
            raise ValidationError(
                f"room.reflection: {values.shape[1]} bands need {values.shape[1] - 1} "
                f"edges, got {edges.shape[0]}")
        if np.any(values < 0) or np.any(values > 1):
            raise ValidationError("room.reflection: coefficients must lie in [0, 1]")
        if edges.size and np.any(np.diff(edges) <= 0):
            raise ValidationError("room.reflection: band edges must be strictly increasing")
        values.setflags(write=False)
        edges.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "band_edges", edges)

    @classmethod
    def uniform(cls, coeff: float) -> "WallReflection":
        return cls(np.full((6, 1), float(coeff)))

    @classmethod
    def from_walls(cls, walls: dict) -> "WallReflection":
        missing = [w for w in WALLS if w not in walls]
        if missing:
            raise ValidationError(f"room.reflection: missing walls {missing}")
        cols = [np.atleast_1d(np.asarray(walls[w], dtype=float)) for w in WALLS]
        if len({c.shape[0] for c in cols}) != 1:
            raise ValidationError("room.reflection: walls disagree on band count")
        return cls(np.stack(cols))

    @property
    def num_bands(self) -> int:
        return self.values.shape[1]

    def band_index(self, freq_hz: float) -> int:
        return int(np.searchsorted(self.band_edges, freq_hz, side="right"))


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox room: dimensions, wall reflections, image order cutoff, positions."""

    dims: np.ndarray
    reflection: WallReflection
    max_order: int
    pos_speaker: np.ndarray
    pos_mic: np.ndarray

    def __post_init__(self):
        dims = np.asarray(self.dims, dtype=float).reshape(3)
        ps = np.asarray(self.pos_speaker, dtype=float).reshape(3)
        pm = np.asarray(self.pos_mic, dtype=float).reshape(3)
        for arr in (dims, ps, pm):
            arr.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "pos_speaker", ps)
        object.__setattr__(self, "pos_mic", pm)
        if np.any(dims <= 0):
            raise ValidationError("room.dims: dimensions must be > 0")
        if self.max_order < 0:
            raise ValidationError("room.max_order: must be >= 0")
        for name, p in (("room.pos_speaker", ps), ("room.pos_mic", pm)):
            if np.any(p <= 0) or np.any(p >= dims):
                raise ValidationError(f"{name}: position must lie strictly inside the room")

    @property
    def geometry(self) -> SceneGeometry:
        return SceneGeometry(pos_speaker=self.pos_speaker, pos_mic=self.pos_mic)


@dataclass(frozen=True)
class ImageSource:
    """One reflection path: lattice index, parity, position and attenuation."""

    index: tuple[int, int, int]
    parity: tuple[int, int, int]
    position: np.ndarray
    attenuation: np.ndarray  # (num_bands,)
    distance: float
    dir_at_speaker: tuple[float, float]  # theta_LM,g
    dir_at_mic: tuple[float, float]      # eta_ML,g
    reflection_order: int

    @classmethod
    def from_lattice(cls, index, parity, room: RoomSpec) -> "ImageSource":
        index = tuple(int(v) for v in index)
        parity = tuple(int(v) for v in parity)
        m = np.array(index, dtype=float)
        eps = np.array(parity, dtype=float)
        position = (1.0 - 2.0 * eps) * room.pos_speaker + 2.0 * m * room.dims
        # wall hit counts along each axis: |m - eps| at the near wall, |m| at the far
        near = np.abs(np.array(index) - np.array(parity))
        far = np.abs(np.array(index))
        atten = np.ones(room.reflection.num_bands)
        for axis in range(3):
            atten = atten * room.reflection.values[2 * axis] ** near[axis]
            atten = atten * room.reflection.values[2 * axis + 1] ** far[axis]
        rel = room.pos_mic - position
        distance = float(np.linalg.norm(rel))
        if distance == 0:
            raise ValidationError("room: an image source coincides with the microphone")
        return cls(index=index, parity=parity, position=position, attenuation=atten,
                   distance=distance, dir_at_speaker=direction_angles(rel),
                   dir_at_mic=direction_angles(-rel),
                   reflection_order=int(near.sum() + far.sum()))


def enumerate_images(room: RoomSpec) -> list[ImageSource]:
    """All image sources with total reflection order <= room.max_order.

    Deterministic ordering: ascending (order, index, parity). The direct
    path is the order-0 entry with even parity and position pos_speaker.
    """
    K = room.max_order
    out = []
    for eps_x in (0, 1):
        for eps_y in (0, 1):
            for eps_z in (0, 1):
                for mx in range(-K, K + 2):
                    ox = abs(mx - eps_x) + abs(mx)
                    if ox > K:
                        continue
                    for my in range(-K, K + 2):
                        oy = abs(my - eps_y) + abs(my)
                        if ox + oy > K:
                            continue
                        for mz in range(-K, K + 2):
                            oz = abs(mz - eps_z) + abs(mz)
                            if ox + oy + oz > K:
                                continue
                            out.append(ImageSource.from_lattice(
                                (mx, my, mz), (eps_x, eps_y, eps_z), room))
    out.sort(key=lambda im: (im.reflection_order, im.index, im.parity))
    return out


# ---------------------------------------------------------------------------
# System assembly
# ---------------------------------------------------------------------------

class _SceneTerms:
    """k-independent factors of the image sum, for fast per-bin assembly."""

    def __init__(self, images, spec_L: SphArraySpec, spec_M: SphArraySpec):
        if not images:
            raise ValidationError("room: no image sources to assemble")
        self.spec_L = spec_L
        self.spec_M = spec_M
        self.distances = np.array([im.distance for im in images])
        self.atten = np.stack([im.attenuation for im in images])  # (I, B)
        self.mic_side = np.column_stack(
            [np.conj(steering_vector(*im.dir_at_mic, spec_M.sh_order)) for im in images])
        ops = {}
        q = cap_diag(spec_L)
        rows = []
        for im in images:
            if im.parity not in ops:
                ops[im.parity] = parity_mirror_matrix(spec_L.sh_order, im.parity).matrix.T
            y = ops[im.parity] @ steering_vector(*im.dir_at_speaker, spec_L.sh_order)
            rows.append(y * q)
        self.spk_side = np.array(rows)  # (I, P_L), cap diagonal folded in
        self.reps = [2 * n + 1 for n in range(spec_L.sh_order + 1)]

    def assemble(self, k: float, band: int, rho0: float, c: float) -> np.ndarray:
        if k <= 0:
            raise DomainError("room system is undefined at k = 0 (handle DC upstream)")
        orders = range(self.spec_L.sh_order + 1)
        denom = np.array([sph_hankel1_deriv(n, k * self.spec_L.radius) for n in orders])
        hank = np.stack([sph_hankel1(n, k * self.distances) for n in orders])  # (N+1, I)
        ratio = 1j * rho0 * c * (hank / denom[:, None])
        h_packed = np.repeat(ratio, self.reps, axis=0).T  # (I, P_L)
        rows = self.spk_side * (h_packed * self.atten[:, band, None])
        b = mode_strength_diag(self.spec_M, k)
        return (b[:, None] * self.mic_side) @ rows


def _assemble_termwise(images, spec_L: SphArraySpec, spec_M: SphArraySpec,
                       k: float, band: int, rho0: float, c: float) -> np.ndarray:
    """Sum of per-image outer products, sharing the free-field association.

    Slower than _SceneTerms.assemble but floating-point identical to
    freefield_system_sh for the direct path, which keeps the zero-reflection
    room bit-for-bit equal to the free-field matrix.
    """
    b = mode_strength_diag(spec_M, k)
    q = cap_diag(spec_L)
    out = np.zeros((sh_num_coeffs(spec_M.sh_order), sh_num_coeffs(spec_L.sh_order)),
                   dtype=complex)
    ops = {}
    for im in images:
        if im.parity not in ops:
            ops[im.parity] = parity_mirror_matrix(spec_L.sh_order, im.parity).matrix.T
        y_l = ops[im.parity] @ steering_vector(*im.dir_at_speaker, spec_L.sh_order)
        y_m = steering_vector(*im.dir_at_mic, spec_M.sh_order)
        h = propagation_diag(spec_L, im.distance, k, rho0=rho0, c=c)
        out += im.attenuation[band] * np.outer(b * np.conj(y_m), (y_l * q) * h)
    return out


def system_from_images(images, spec_L: SphArraySpec, spec_M: SphArraySpec, k: float,
                       band: int = 0,
                       rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> ShMatrix:
    """Assemble the image sum at one wavenumber from an explicit image list."""
    images = [im for im in images if np.any(im.attenuation != 0.0)]
    if not images:
        raise ValidationError("room: no image sources with nonzero attenuation")
    _check_far_field(spec_L, min(im.distance for im in images))
    entries = _assemble_termwise(images, spec_L, spec_M, k, band, rho0, c)
    return ShMatrix(entries, k=k, provenance="room")


def room_system_sh(room: RoomSpec, spec_L: SphArraySpec, spec_M: SphArraySpec, k: float,
                   rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> ShMatrix:
    """Room transfer matrix G_room(k), the image-source sum over the scene."""
    room.geometry.validate_clearance(spec_L, spec_M)
    images = [im for im in enumerate_images(room) if np.any(im.attenuation != 0.0)]
    band = room.reflection.band_index(k * c / (2 * np.pi))
    return system_from_images(images, spec_L, spec_M, k, band=band, rho0=rho0, c=c)


# ---------------------------------------------------------------------------
# Time-domain synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RirTensor:
    """Impulse responses over (mic SH index, speaker SH index, time sample)."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        if self.samples.ndim != 3:
            raise ValueError("RirTensor samples must be (P_M, P_L, T)")
        if np.iscomplexobj(self.samples):
            raise ValueError("RirTensor samples must be real")
        if self.fs <= 0:
            raise ValueError("fs must be > 0")
        self.samples.setflags(write=False)

    @property
    def num_samples(self) -> int:
        return self.samples.shape[2]

    @property
    def duration(self) -> float:
        return self.num_samples / self.fs


def synthesize_rir(room: RoomSpec, spec_L: SphArraySpec, spec_M: SphArraySpec,
                   fs: float, num_samples: int,
                   rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND,
                   max_elements: int = MAX_RIR_ELEMENTS) -> RirTensor:
    """Synthesize the time-domain RIR tensor on a T-point DFT grid.

    Evaluates G_room at f_i = i fs / T for i = 1 .. T/2 - 1, zeroes the DC
    and Nyquist bins, and inverse-transforms under the e^{-j omega t}
    convention (so a path of length D peaks near sample fs D / c).
    """
    T = int(num_samples)
    if T < 4 or T & (T - 1):
        raise ValidationError(f"synthesis.num_samples: must be a power of two >= 4, got {T}")
    if fs <= 0:
        raise ValidationError("synthesis.fs: must be > 0")
    P_M, P_L = sh_num_coeffs(spec_M.sh_order), sh_num_coeffs(spec_L.sh_order)
    if P_M * P_L * T > max_elements:
        raise ValidationError(
            f"synthesis: tensor of {P_M}x{P_L}x{T} = {P_M * P_L * T} elements exceeds "
            f"the cap of {max_elements}")
    room.geometry.validate_clearance(spec_L, spec_M)
    images = [im for im in enumerate_images(room) if np.any(im.attenuation != 0.0)]
    terms = _SceneTerms(images, spec_L, spec_M)
    _check_far_field(spec_L, float(np.min(terms.distances)))

    spectrum = np.zeros((P_M, P_L, T // 2 + 1), dtype=complex)
    edges = room.reflection.band_edges
    for i in range(1, T // 2):
        f = i * fs / T
        k = 2 * np.pi * f / c
        band = int(np.searchsorted(edges, f, side="right"))
        spectrum[..., i] = terms.assemble(k, band, rho0, c)
    samples = np.fft.irfft(np.conj(spectrum), n=T, axis=-1)
    return RirTensor(samples=samples, fs=float(fs))
