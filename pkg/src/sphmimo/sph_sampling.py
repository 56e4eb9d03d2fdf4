"""Spherical sampling grids, steering vectors/matrices and the discrete SFT.

A grid is an ordered list of (theta, phi) directions. For the shipped
nearly-uniform layouts the equal-weight discrete spherical Fourier
transform

    f_SH = (4 pi / L) Y_L^H f        (forward)
    f    = Y_L f_SH                  (inverse)

is exact up to the grid's measured exactness order. Grids are immutable
after construction; concurrent reads are safe.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import FormatError
from .sph_special import sh_degrees, sh_eval, sh_num_coeffs, sh_unpack

ORTHONORMALITY_TOL = 1e-8       # tier used to measure exactness_order
NEARLY_UNIFORM_SV_SPREAD = 1e-2  # acceptance tier for measured hardware layouts

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))

# layouts shipped as package data (tools/make_grids.py regenerates them)
_BUILTIN_SIZES = (4, 6, 12, 24, 32, 40, 64)


@dataclass(frozen=True)
class SphGrid:
    """Sampling directions on the sphere with a measured SFT exactness order."""

    theta: np.ndarray
    phi: np.ndarray
    kind: str = "custom"  # "nearly_uniform" | "custom"
    exactness_order: int = field(default=-1)

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        phi = np.mod(np.atleast_1d(np.asarray(self.phi, dtype=float)), 2 * np.pi)
        if theta.shape != phi.shape or theta.ndim != 1:
            raise ValueError("theta and phi must be 1-D arrays of equal length")
        if np.any(theta < 0) or np.any(theta > np.pi):
            raise ValueError("theta values must lie in [0, pi]")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        if self.kind not in ("nearly_uniform", "custom"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.exactness_order < 0:
            object.__setattr__(self, "exactness_order",
                               measure_exactness(theta, phi))

    @property
    def size(self) -> int:
        return self.theta.shape[0]

    @property
    def points(self) -> np.ndarray:
        """(L, 2) array of (theta, phi) pairs."""
        return np.stack([self.theta, self.phi], axis=1)


def steering_vector(theta: float, phi: float, order: int) -> np.ndarray:
    """Steering vector y(theta, phi): Y_n^m values in packed (n, m) order."""
    ns, ms = sh_degrees(order)
    out = np.empty(sh_num_coeffs(order), dtype=complex)
    for p, (n, m) in enumerate(zip(ns, ms)):
        out[p] = sh_eval(int(n), int(m), theta, phi)
    return out


def steering_matrix(grid: SphGrid, order: int) -> np.ndarray:
    """L x (N+1)^2 matrix whose row l is the steering vector of direction l."""
    ns, ms = sh_degrees(order)
    Y = np.empty((grid.size, sh_num_coeffs(order)), dtype=complex)
    for p, (n, m) in enumerate(zip(ns, ms)):
        Y[:, p] = sh_eval(int(n), int(m), grid.theta, grid.phi)
    return Y


def measure_exactness(theta, phi, tol: float = ORTHONORMALITY_TOL) -> int:
    """Largest order N for which (4 pi / L) Y^H Y = I within `tol` (max norm).

    N = 0 holds for every layout; candidate orders are limited by
    (N+1)^2 <= L.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    L = theta.shape[0]
    best = 0
    N = 1
    while sh_num_coeffs(N) <= L:
        Y = steering_matrix(SphGrid(theta, phi, "custom", exactness_order=0), N)
        gram = (4 * np.pi / L) * (Y.conj().T @ Y)
        if np.max(np.abs(gram - np.eye(sh_num_coeffs(N)))) > tol:
            break
        best = N
        N += 1
    return best


def sv_spread(grid: SphGrid, order: int) -> float:
    """Spread max|s_i - 1| of the singular values of sqrt(4 pi / L) Y_L."""
    Y = steering_matrix(grid, order)
    s = np.linalg.svd(np.sqrt(4 * np.pi / grid.size) * Y, compute_uv=False)
    return float(np.max(np.abs(s - 1.0)))


def fibonacci_grid(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic golden-angle spiral layout (fallback for unshipped sizes)."""
    i = np.arange(L)
    theta = np.arccos(1.0 - (2.0 * i + 1.0) / L)
    phi = np.mod(i * GOLDEN_ANGLE, 2 * np.pi)
    return theta, phi


def make_grid(kind: str, L: int) -> SphGrid:
    """Construct a grid of L points.

    kind "nearly_uniform" loads the shipped layout for L when one exists
    (sizes 4, 6, 12, 24, 32, 40, 64) and otherwise falls back to a
    deterministic Fibonacci spiral; exactness_order is measured either way.
    """
    if L < 1:
        raise ValueError(f"grid size must be >= 1, got {L}")
    if kind != "nearly_uniform":
        raise ValueError(f"make_grid only builds 'nearly_uniform' grids, got {kind!r}")
    if L == 1:
        theta, phi = np.array([0.0]), np.array([0.0])
    elif L in _BUILTIN_SIZES:
        theta, phi = _load_builtin(L)
    else:
        theta, phi = fibonacci_grid(L)
    return SphGrid(theta, phi, kind="nearly_uniform")


def grid_from_points(theta, phi, kind: str = "custom") -> SphGrid:
    """Grid from explicit directions (e.g. measured hardware layouts)."""
    return SphGrid(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float), kind=kind)


# ---------------------------------------------------------------------------
# Discrete SFT
# ---------------------------------------------------------------------------

def sft_forward(samples, grid: SphGrid, order: int) -> np.ndarray:
    """Forward discrete SFT: (4 pi / L) Y_L^H f.

    Requires grid.exactness_order >= order for the transform to be exact
    on order-limited functions.
    """
    samples = np.asarray(samples)
    if samples.shape[0] != grid.size:
        raise ValueError(f"expected {grid.size} samples, got {samples.shape[0]}")
    if order > grid.exactness_order:
        raise ValueError(
            f"grid exactness order {grid.exactness_order} is below requested order {order}")
    Y = steering_matrix(grid, order)
    return (4 * np.pi / grid.size) * (Y.conj().T @ samples)


def sft_inverse(coeffs, grid: SphGrid) -> np.ndarray:
    """Inverse discrete SFT: synthesize samples Y_L f_SH at the grid points."""
    coeffs = np.asarray(coeffs)
    order = int(np.sqrt(coeffs.shape[0])) - 1
    if sh_num_coeffs(order) != coeffs.shape[0]:
        raise ValueError(f"coefficient count {coeffs.shape[0]} is not a perfect square")
    return steering_matrix(grid, order) @ coeffs


# ---------------------------------------------------------------------------
# Grid file format: CSV with header "theta,phi", radians, one row per element.
# Row order is the element ordering and must match RIR channel ordering.
# ---------------------------------------------------------------------------

def read_grid_csv(path) -> SphGrid:
    path = Path(path)
    with open(path, newline="") as fh:
        theta, phi = _parse_grid_rows(fh, str(path))
    return SphGrid(np.array(theta), np.array(phi), kind="custom")


def write_grid_csv(path, grid: SphGrid) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("theta,phi\n")
        for t, p in zip(grid.theta, grid.phi):
            fh.write(f"{float(t)!r},{float(p)!r}\n")


def _parse_grid_rows(fh, name):
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["theta", "phi"]:
        raise FormatError(f"{name}: expected grid CSV header 'theta,phi'")
    theta, phi = [], []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise FormatError(f"{name}: line {i}: expected two columns")
        try:
            theta.append(float(row[0]))
            phi.append(float(row[1]))
        except ValueError as exc:
            raise FormatError(f"{name}: line {i}: {exc}") from None
    if not theta:
        raise FormatError(f"{name}: grid file contains no points")
    return theta, phi


def _load_builtin(L: int) -> tuple[np.ndarray, np.ndarray]:
    name = f"nearly_uniform_{L}.csv"
    ref = resources.files("sphmimo").joinpath("data", "grids", name)
    with ref.open("r") as fh:
        theta, phi = _parse_grid_rows(fh, name)
    return np.array(theta), np.array(phi)
