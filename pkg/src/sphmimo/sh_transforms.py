"""Rotation and mirroring operators acting on packed SH coefficient vectors.

Rotations use Wigner-D matrices in the intrinsic z-y-z Euler convention
with active rotations: for R = Rz(alpha) Ry(beta) Rz(gamma), the rotated
coefficients D f synthesize the function f(R^{-1} x). The little-d block
of order n is the matrix exponential exp(-j beta Jy) of the angular
momentum generator, which is stable far beyond the orders used here.

Mirrors about the coordinate planes are built from the x-z mirror
(f_nm -> (-1)^m f_{n,-m}) conjugated with rotations; all operators are
unitary and block-diagonal per order. Operators are immutable after
construction; applying them to distinct matrices concurrently is safe.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, expm

from .sph_special import sh_num_coeffs

PLANES = ("xz", "yz", "xy")


@dataclass(frozen=True)
class ShOperator:
    """A unitary, order-block-diagonal operator on SH coefficient vectors."""

    matrix: np.ndarray
    order: int
    kind: str  # "rotation" | "mirror_xz" | "composed"

    def __post_init__(self):
        P = sh_num_coeffs(self.order)
        if self.matrix.shape != (P, P):
            raise ValueError(f"operator matrix must be {P}x{P}, got {self.matrix.shape}")
        self.matrix.setflags(write=False)

    @property
    def hermitian(self) -> np.ndarray:
        return self.matrix.conj().T


def _jy(n: int) -> np.ndarray:
    """Angular momentum generator Jy on the order-n block, m = -n..n."""
    m = np.arange(-n, n)
    ladder = np.sqrt(n * (n + 1) - m * (m + 1))
    jplus = np.diag(ladder, k=-1)  # raises m by one in ascending-m layout
    return (jplus - jplus.T) / 2j


def wigner_d_block(n: int, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """(2n+1)x(2n+1) Wigner-D block D^n_{m m'} = e^{-jm a} d^n_{mm'}(b) e^{-jm' g}."""
    m = np.arange(-n, n + 1)
    little_d = expm(-1j * beta * _jy(n)).real
    return np.exp(-1j * m[:, None] * alpha) * little_d * np.exp(-1j * m[None, :] * gamma)


def wigner_d_matrix(order: int, euler: tuple[float, float, float]) -> ShOperator:
    """Block-diagonal rotation operator D_N(alpha, beta, gamma)."""
    alpha, beta, gamma = euler
    blocks = [wigner_d_block(n, alpha, beta, gamma) for n in range(order + 1)]
    return ShOperator(block_diag(*blocks).astype(complex), order, "rotation")


def mirror_xz_matrix(order: int) -> ShOperator:
    """Mirror about the x-z plane: f_nm -> (-1)^m f_{n,-m}.

    Factorizes as diag[(-1)^p] times the per-order anti-diagonal permutation.
    """
    P = sh_num_coeffs(order)
    M = np.zeros((P, P))
    for n in range(order + 1):
        base = n * n + n
        for m in range(-n, n + 1):
            M[base + m, base - m] = (-1) ** m
    return ShOperator(M.astype(complex), order, "mirror_xz")


def mirror_plane_matrix(order: int, plane: str) -> ShOperator:
    """Mirror operator about one of the coordinate planes "xz", "yz", "xy".

    The xz mirror flips the y axis; the others are rotation conjugates
    R M R^H where R carries the flipped axis onto y: a quarter-turn about
    z for the yz plane (D(-pi/2, 0, 0) M D(pi/2, 0, 0)), a quarter-turn
    about x (z-y-z angles (-pi/2, pi/2, pi/2)) for the xy plane.
    """
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {PLANES}, got {plane!r}")
    m_xz = mirror_xz_matrix(order)
    if plane == "xz":
        return m_xz
    euler = (-np.pi / 2, 0.0, 0.0) if plane == "yz" else (-np.pi / 2, np.pi / 2, np.pi / 2)
    rot = wigner_d_matrix(order, euler)
    return ShOperator(rot.matrix @ m_xz.matrix @ rot.hermitian, order, "composed")


def parity_mirror_matrix(order: int, parity: tuple[int, int, int]) -> ShOperator:
    """Composition of axis-flip mirrors selected by parity bits (px, py, pz).

    Flipping the x axis mirrors about the yz plane, y about xz, z about xy.
    The factors commute, so the composition order is immaterial.
    """
    mat = np.eye(sh_num_coeffs(order), dtype=complex)
    for bit, plane in zip(parity, ("yz", "xz", "xy")):
        if bit:
            mat = mirror_plane_matrix(order, plane).matrix @ mat
    return ShOperator(mat, order, "composed")


def _entries(sys):
    return sys.entries if hasattr(sys, "entries") else np.asarray(sys)


def _rewrap(sys, entries):
    if dataclasses.is_dataclass(sys) and hasattr(sys, "entries"):
        return dataclasses.replace(sys, entries=entries)
    return entries


def apply_left(sys, op: ShOperator):
    """Transform the microphone side: op.matrix @ G."""
    G = _entries(sys)
    if G.shape[0] != op.matrix.shape[1]:
        raise ValueError(
            f"operator order {op.order} does not match system row count {G.shape[0]}")
    return _rewrap(sys, op.matrix @ G)


def apply_right(sys, op: ShOperator):
    """Transform the loudspeaker side: G @ op.matrix^H."""
    G = _entries(sys)
    if G.shape[1] != op.matrix.shape[0]:
        raise ValueError(
            f"operator order {op.order} does not match system column count {G.shape[1]}")
    return _rewrap(sys, G @ op.hermitian)
