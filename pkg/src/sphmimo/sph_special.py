"""Scalar special functions for spherical-array acoustics.

Complex orthonormal spherical harmonics (Condon-Shortley phase included),
spherical Bessel and Hankel functions with derivatives, the cap-radiation
coefficients of a cap-driven rigid-sphere loudspeaker, and the plane-wave
mode strength of open and rigid microphone spheres.

All functions are pure; none keeps state, so concurrent calls are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre, gammaln, lpmv, spherical_jn, spherical_yn

from .errors import DomainError

SPEED_OF_SOUND = 343.0  # m/s, default; overridable through RadialContext / config
AIR_DENSITY = 1.2       # kg/m^3


# ---------------------------------------------------------------------------
# (n, m) <-> packed-index bookkeeping
# ---------------------------------------------------------------------------

def sh_num_coeffs(order: int) -> int:
    """Number of SH coefficients up to and including `order`: (N+1)^2."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    return (order + 1) ** 2


def sh_pack(n: int, m: int) -> int:
    """Packed linear index p = n^2 + n + m of harmonic (n, m).

    The packing enumerates (0,0), (1,-1), (1,0), (1,1), ... (N,N).
    """
    if n < 0:
        raise ValueError(f"SH order must be >= 0, got n={n}")
    if abs(m) > n:
        raise ValueError(f"SH degree out of range: |m|={abs(m)} > n={n}")
    return n * n + n + m


def sh_unpack(p: int) -> tuple[int, int]:
    """Inverse of sh_pack: recover (n, m) from a packed index."""
    if p < 0:
        raise ValueError(f"packed index must be >= 0, got {p}")
    n = int(np.sqrt(p))
    m = p - n * n - n
    return n, m


def sh_degrees(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (ns, ms) of order and degree for every packed index up to `order`."""
    ns = np.concatenate([np.full(2 * n + 1, n) for n in range(order + 1)])
    ms = np.concatenate([np.arange(-n, n + 1) for n in range(order + 1)])
    return ns, ms


def expand_orders(values: np.ndarray, order: int) -> np.ndarray:
    """Repeat a length-(N+1) per-order vector into packed layout (2n+1 copies each)."""
    values = np.asarray(values)
    if values.shape[-1] != order + 1:
        raise ValueError(f"expected {order + 1} per-order values, got {values.shape[-1]}")
    return np.repeat(values, [2 * n + 1 for n in range(order + 1)], axis=-1)


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------

def sh_eval(n: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_n^m(theta, phi).

    Y_n^m = sqrt((2n+1)(n-m)! / (4 pi (n+m)!)) P_n^m(cos theta) e^{j m phi},
    with the Condon-Shortley phase carried by the associated Legendre
    function. theta is the polar angle in [0, pi], phi the azimuth.

    Broadcasts over array-valued angles.
    """
    if n < 0:
        raise ValueError(f"SH order must be >= 0, got n={n}")
    if abs(m) > n:
        raise ValueError(f"SH degree out of range: |m|={abs(m)} > n={n}")
    am = abs(m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    norm = np.exp(0.5 * (np.log(2 * n + 1) - np.log(4 * np.pi)
                         + gammaln(n - am + 1) - gammaln(n + am + 1)))
    pnm = lpmv(am, n, np.clip(np.cos(theta), -1.0, 1.0))
    y = norm * pnm * np.exp(1j * am * phi)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y if y.shape else complex(y)


# ---------------------------------------------------------------------------
# Radial functions
# ---------------------------------------------------------------------------

def sph_bessel(n: int, x):
    """Spherical Bessel function j_n(x), stable down to x = 0."""
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    return spherical_jn(n, np.asarray(x, dtype=float))


def sph_bessel_deriv(n: int, x):
    """Derivative j_n'(x)."""
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    return spherical_jn(n, np.asarray(x, dtype=float), derivative=True)


def sph_neumann(n: int, x):
    """Spherical Neumann function y_n(x); diverges at x = 0."""
    return spherical_yn(n, np.asarray(x, dtype=float))


def sph_neumann_deriv(n: int, x):
    return spherical_yn(n, np.asarray(x, dtype=float), derivative=True)


def _require_positive(x, name: str):
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"{name} must be > 0 (Hankel functions diverge at 0)")


def sph_hankel1(n: int, x):
    """Spherical Hankel function of the first kind, h_n(x) = j_n(x) + j y_n(x).

    Requires x > 0; a zero argument signals that DC or a coincident point
    must be handled upstream.
    """
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    _require_positive(x, "x")
    x = np.asarray(x, dtype=float)
    return spherical_jn(n, x) + 1j * spherical_yn(n, x)


def sph_hankel1_deriv(n: int, x):
    """Derivative h_n'(x) of the first-kind spherical Hankel function."""
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    _require_positive(x, "x")
    x = np.asarray(x, dtype=float)
    return spherical_jn(n, x, derivative=True) + 1j * spherical_yn(n, x, derivative=True)


# ---------------------------------------------------------------------------
# Loudspeaker cap model and microphone mode strength
# ---------------------------------------------------------------------------

def cap_coeff(n: int, alpha: float, num_drivers: int) -> float:
    """Radiation coefficient q(n, cos alpha) of the spherical-cap loudspeaker model.

    alpha is the aperture half-angle of one cap (radians), num_drivers the
    number of caps on the sphere. Two-branch form:

        q(0) = 4 pi L (1 - cos alpha)
        q(n) = 4 pi L / (2n+1) * (P_{n-1}(cos alpha) - P_{n+1}(cos alpha)),  n > 0
    """
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    ca = np.cos(alpha)
    if n == 0:
        return float(4.0 * np.pi * num_drivers * (1.0 - ca))
    return float(4.0 * np.pi * num_drivers / (2 * n + 1)
                 * (eval_legendre(n - 1, ca) - eval_legendre(n + 1, ca)))


@dataclass(frozen=True)
class RadialContext:
    """Radial parameters of one scene: wavenumber, radii and medium constants.

    sphere_kind selects the microphone-array boundary model: "open" for
    pressure transducers in free air, "rigid" for transducers mounted on a
    rigid baffle of radius r_scatter <= r_mic.
    """

    k: float
    r_mic: float
    sphere_kind: str = "open"
    r_scatter: float | None = None
    r_speaker: float | None = None
    rho0: float = AIR_DENSITY
    c: float = SPEED_OF_SOUND

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"wavenumber must be >= 0, got {self.k}")
        if self.sphere_kind not in ("open", "rigid"):
            raise ValueError(f"sphere_kind must be 'open' or 'rigid', got {self.sphere_kind!r}")
        if self.r_mic <= 0:
            raise ValueError(f"r_mic must be > 0, got {self.r_mic}")
        if self.sphere_kind == "rigid":
            if self.r_scatter is None or self.r_scatter <= 0:
                raise ValueError("rigid sphere_kind requires r_scatter > 0")
            if self.r_scatter > self.r_mic:
                raise ValueError(
                    f"r_scatter must not exceed r_mic ({self.r_scatter} > {self.r_mic})")


def mode_strength(n: int, ctx: RadialContext) -> complex:
    """Plane-wave mode strength b_n(k r_mic) of the microphone sphere.

        open:   b_n = 4 pi j^n j_n(k r)
        rigid:  b_n = 4 pi j^n [ j_n(k r) - j_n'(k r0) / h_n'(k r0) * h_n(k r) ]

    The rigid branch needs k > 0 (Hankel singularity at DC).
    """
    if n < 0:
        raise ValueError(f"order must be >= 0, got n={n}")
    kr = ctx.k * ctx.r_mic
    if ctx.sphere_kind == "open":
        return 4.0 * np.pi * (1j ** n) * complex(spherical_jn(n, kr))
    if ctx.k <= 0:
        raise DomainError("rigid-sphere mode strength is undefined at k = 0")
    kr0 = ctx.k * ctx.r_scatter
    scatter = sph_bessel_deriv(n, kr0) / sph_hankel1_deriv(n, kr0) * sph_hankel1(n, kr)
    return 4.0 * np.pi * (1j ** n) * (complex(spherical_jn(n, kr)) - complex(scatter))
