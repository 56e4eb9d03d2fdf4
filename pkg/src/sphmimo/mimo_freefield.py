"""Free-field MIMO system between a spherical loudspeaker and microphone array.

The loudspeaker array is a rigid sphere of radius r_L driven by L spherical
caps; the microphone array an open or rigid sphere of radius r_M at distance
D. Under the far-field (locally planar wavefront) approximation the
SH-domain transfer matrix is the unit-rank outer product

    G = B_M  y*(eta_ML) y^T(theta_LM)  H_L(D) Q_L

with B_M the mode-strength diagonal, H_L the Hankel propagation diagonal
(including the j rho0 c factor), Q_L the cap-radiation diagonal, and
y(.) steering vectors at the mic->speaker and speaker->mic directions.
The element-space matrix G_s wraps G in the steering matrices of both
arrays. The time convention is e^{-j omega t}, so outgoing waves carry
h_n^(1) and a propagation delay appears as e^{+jkD}.

All constructors are pure functions of immutable inputs; building
matrices for many wavenumbers concurrently is safe.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .sph_special import (AIR_DENSITY, SPEED_OF_SOUND, RadialContext, cap_coeff,
                          expand_orders, mode_strength, sh_num_coeffs,
                          sph_hankel1, sph_hankel1_deriv)
from .sph_sampling import SphGrid, sft_forward, steering_matrix, steering_vector

FAR_FIELD_DISTANCE_FACTOR = 10.0  # placeholder criterion: warn when D < 10 r_L


class FarFieldWarning(UserWarning):
    """The scene violates the far-field distance heuristic D >= 10 r_L."""


def direction_angles(vec) -> tuple[float, float]:
    """(theta, phi) of a Cartesian direction vector."""
    vec = np.asarray(vec, dtype=float)
    r = np.linalg.norm(vec)
    if r == 0:
        raise ValueError("cannot take the direction of a zero vector")
    theta = float(np.arccos(np.clip(vec[2] / r, -1.0, 1.0)))
    phi = float(np.mod(np.arctan2(vec[1], vec[0]), 2 * np.pi))
    return theta, phi


@dataclass(frozen=True)
class SphArraySpec:
    """Geometry and SH order of one spherical array.

    Loudspeaker arrays carry the cap aperture half-angle; microphone arrays
    carry the boundary model ("open" or "rigid" plus scatterer radius).
    """

    radius: float
    grid: SphGrid
    sh_order: int
    role: str  # "loudspeaker" | "microphone"
    cap_alpha: float | None = None
    sphere_kind: str | None = None
    r_scatter: float | None = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError(f"{self.role}.radius: must be > 0, got {self.radius}")
        if self.sh_order < 0:
            raise ValidationError(f"{self.role}.sh_order: must be >= 0")
        if sh_num_coeffs(self.sh_order) > self.grid.size:
            raise ValidationError(
                f"{self.role}.sh_order: (N+1)^2 = {sh_num_coeffs(self.sh_order)} exceeds "
                f"element count {self.grid.size}")
        if self.role == "loudspeaker":
            if self.cap_alpha is None:
                raise ValidationError("loudspeaker.cap_alpha: required for loudspeaker role")
            if not 0 < self.cap_alpha <= np.pi:
                raise ValidationError("loudspeaker.cap_alpha: must lie in (0, pi]")
        elif self.role == "microphone":
            if self.sphere_kind not in ("open", "rigid"):
                raise ValidationError(
                    "microphone.sphere_kind: must be 'open' or 'rigid' for microphone role")
            if self.sphere_kind == "rigid":
                if self.r_scatter is None or not 0 < self.r_scatter <= self.radius:
                    raise ValidationError(
                        "microphone.r_scatter: rigid sphere needs 0 < r_scatter <= radius")
        else:
            raise ValidationError(f"role: must be 'loudspeaker' or 'microphone', got {self.role!r}")

    @property
    def num_coeffs(self) -> int:
        return sh_num_coeffs(self.sh_order)

    def radial_context(self, k: float, rho0: float = AIR_DENSITY,
                       c: float = SPEED_OF_SOUND) -> RadialContext:
        if self.role != "microphone":
            raise ValueError("radial_context applies to microphone arrays")
        return RadialContext(k=k, r_mic=self.radius, sphere_kind=self.sphere_kind,
                             r_scatter=self.r_scatter, rho0=rho0, c=c)


@dataclass(frozen=True)
class SceneGeometry:
    """Positions of both array centers; frames share the global orientation.

    theta_LM is the direction of the microphone as seen from the
    loudspeaker, eta_ML its antipode seen from the microphone.
    """

    pos_speaker: np.ndarray
    pos_mic: np.ndarray

    def __post_init__(self):
        ps = np.asarray(self.pos_speaker, dtype=float).reshape(3)
        pm = np.asarray(self.pos_mic, dtype=float).reshape(3)
        ps.setflags(write=False)
        pm.setflags(write=False)
        object.__setattr__(self, "pos_speaker", ps)
        object.__setattr__(self, "pos_mic", pm)
        if self.distance == 0:
            raise ValidationError("scene: loudspeaker and microphone positions coincide")

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.pos_mic - self.pos_speaker))

    @property
    def theta_LM(self) -> tuple[float, float]:
        return direction_angles(self.pos_mic - self.pos_speaker)

    @property
    def eta_ML(self) -> tuple[float, float]:
        return direction_angles(self.pos_speaker - self.pos_mic)

    def validate_clearance(self, spec_L: SphArraySpec, spec_M: SphArraySpec) -> None:
        if self.distance <= spec_L.radius + spec_M.radius:
            raise ValidationError(
                f"scene: array separation {self.distance:.4g} m does not clear "
                f"the sphere radii {spec_L.radius} + {spec_M.radius} m")


@dataclass(frozen=True)
class ShMatrix:
    """SH-domain transfer matrix at one wavenumber."""

    entries: np.ndarray
    k: float
    provenance: str = "freefield"  # "freefield" | "room" | "measured"

    def __post_init__(self):
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("ShMatrix entries must be finite")

    @property
    def shape(self):
        return self.entries.shape


# ---------------------------------------------------------------------------
# Diagonal factors
# ---------------------------------------------------------------------------

def propagation_diag(spec_L: SphArraySpec, D: float, k: float,
                     rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> np.ndarray:
    """Diagonal of H_L(D): j rho0 c * h_n(kD) / h_n'(k r_L), each n repeated 2n+1 times."""
    if k <= 0:
        raise DomainError("propagation is undefined at k = 0 (handle DC upstream)")
    if D <= spec_L.radius:
        raise DomainError(f"observation distance {D} lies inside the source sphere")
    n = np.arange(spec_L.sh_order + 1)
    ratio = np.array([sph_hankel1(int(nn), k * D) / sph_hankel1_deriv(int(nn), k * spec_L.radius)
                      for nn in n])
    return expand_orders(1j * rho0 * c * ratio, spec_L.sh_order)


def cap_diag(spec_L: SphArraySpec) -> np.ndarray:
    """Diagonal of Q_L: cap coefficients q(n, cos alpha) with 2n+1 repetition."""
    q = np.array([cap_coeff(n, spec_L.cap_alpha, spec_L.grid.size)
                  for n in range(spec_L.sh_order + 1)])
    return expand_orders(q, spec_L.sh_order)


def mode_strength_diag(spec_M: SphArraySpec, k: float) -> np.ndarray:
    """Diagonal of B_M: mode strengths b_n(k r_M) with 2n+1 repetition."""
    ctx = spec_M.radial_context(k)
    b = np.array([mode_strength(n, ctx) for n in range(spec_M.sh_order + 1)])
    return expand_orders(b, spec_M.sh_order)


def _check_far_field(spec_L: SphArraySpec, D: float) -> None:
    if D < FAR_FIELD_DISTANCE_FACTOR * spec_L.radius:
        warnings.warn(
            f"distance {D:.3g} m is below {FAR_FIELD_DISTANCE_FACTOR:g} loudspeaker radii; "
            "the planar-wavefront approximation may be inaccurate",
            FarFieldWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# System construction
# ---------------------------------------------------------------------------

def freefield_system_sh(spec_L: SphArraySpec, spec_M: SphArraySpec,
                        geom: SceneGeometry, k: float,
                        rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> ShMatrix:
    """SH-domain transfer matrix G = B_M y*(eta) y^T(theta) H_L(D) Q_L."""
    geom.validate_clearance(spec_L, spec_M)
    _check_far_field(spec_L, geom.distance)
    b = mode_strength_diag(spec_M, k)
    h = propagation_diag(spec_L, geom.distance, k, rho0=rho0, c=c)
    q = cap_diag(spec_L)
    y_m = steering_vector(*geom.eta_ML, spec_M.sh_order)
    y_l = steering_vector(*geom.theta_LM, spec_L.sh_order)
    entries = np.outer(b * np.conj(y_m), (y_l * q) * h)
    return ShMatrix(entries, k=k, provenance="freefield")


def freefield_system_elements(spec_L: SphArraySpec, spec_M: SphArraySpec,
                              geom: SceneGeometry, k: float,
                              rho0: float = AIR_DENSITY,
                              c: float = SPEED_OF_SOUND) -> np.ndarray:
    """Element-space M x L transfer matrix G_s = Y_M G (4 pi / L) Y_L^H."""
    G = freefield_system_sh(spec_L, spec_M, geom, k, rho0=rho0, c=c)
    Y_m = steering_matrix(spec_M.grid, spec_M.sh_order)
    Y_l = steering_matrix(spec_L.grid, spec_L.sh_order)
    return Y_m @ G.entries @ ((4 * np.pi / spec_L.grid.size) * Y_l.conj().T)


def elements_to_sh(G_s: np.ndarray, spec_L: SphArraySpec, spec_M: SphArraySpec) -> np.ndarray:
    """Project an element-space matrix into the SH domain: (4 pi / M) Y_M^H G_s Y_L."""
    Y_m = steering_matrix(spec_M.grid, spec_M.sh_order)
    Y_l = steering_matrix(spec_L.grid, spec_L.sh_order)
    return (4 * np.pi / spec_M.grid.size) * (Y_m.conj().T @ G_s @ Y_l)


def planewave_amplitude(spec_L: SphArraySpec, u_sh: np.ndarray,
                        geom: SceneGeometry, k: float,
                        rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> complex:
    """Amplitude of the locally plane wave at the microphone center.

    Evaluates the radiated pressure at (D, theta_LM):
    a = sum_nm  j rho0 c q_n h_n(kD)/h_n'(k r_L) Y_n^m(theta_LM) u_nm.
    """
    u_sh = np.asarray(u_sh)
    order = int(np.sqrt(u_sh.shape[0])) - 1
    if sh_num_coeffs(order) != u_sh.shape[0]:
        raise ValueError("u_sh length is not a perfect square")
    if order > spec_L.sh_order:
        raise ValueError(f"u_sh order {order} exceeds loudspeaker order {spec_L.sh_order}")
    h = propagation_diag(spec_L, geom.distance, k, rho0=rho0, c=c)[:u_sh.shape[0]]
    q = cap_diag(spec_L)[:u_sh.shape[0]]
    y_l = steering_vector(*geom.theta_LM, order)
    return complex(np.sum(y_l * h * q * u_sh))


def nearfield_pressure_open(spec_L: SphArraySpec, u_elements: np.ndarray,
                            obs_point: np.ndarray, k: float, trunc_order: int,
                            pos_speaker=(0.0, 0.0, 0.0),
                            rho0: float = AIR_DENSITY, c: float = SPEED_OF_SOUND) -> complex:
    """Pressure radiated by the cap-driven array, evaluated directly in open air.

    Direct modal sum truncated at trunc_order, with the velocity
    coefficients u_nm obtained from the element velocities by the discrete
    SFT. Valid outside the source sphere and without any scatterer.
    """
    rel = np.asarray(obs_point, dtype=float) - np.asarray(pos_speaker, dtype=float)
    r = float(np.linalg.norm(rel))
    if r <= spec_L.radius:
        raise DomainError(f"observation point at r={r:.4g} lies inside the source sphere")
    if k <= 0:
        raise DomainError("pressure is undefined at k = 0")
    theta, phi = direction_angles(rel)
    u_elements = np.asarray(u_elements)
    Y = steering_matrix(spec_L.grid, trunc_order)
    u_nm = (4 * np.pi / spec_L.grid.size) * (Y.conj().T @ u_elements)
    n = np.arange(trunc_order + 1)
    radial = np.array([1j * rho0 * c * cap_coeff(int(nn), spec_L.cap_alpha, spec_L.grid.size)
                       * sph_hankel1(int(nn), k * r)
                       / sph_hankel1_deriv(int(nn), k * spec_L.radius) for nn in n])
    y_obs = steering_vector(theta, phi, trunc_order)
    return complex(np.sum(expand_orders(radial, trunc_order) * y_obs * u_nm))
