import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphmimo import sh_transforms as sht
from sphmimo.sph_special import sh_num_coeffs
from sphmimo.sph_sampling import steering_matrix, grid_from_points


def synth(coeffs, theta, phi):
    """Synthesize an order-limited function at arbitrary directions."""
    order = int(np.sqrt(len(coeffs))) - 1
    g = grid_from_points(theta, phi)
    return steering_matrix(g, order) @ coeffs


def rot_zyz(alpha, beta, gamma):
    def rz(a):
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])

    def ry(b):
        c, s = np.cos(b), np.sin(b)
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])

    return rz(alpha) @ ry(beta) @ rz(gamma)


def random_directions(rng, count):
    xyz = rng.standard_normal((count, 3))
    xyz /= np.linalg.norm(xyz, axis=1, keepdims=True)
    theta = np.arccos(np.clip(xyz[:, 2], -1, 1))
    phi = np.arctan2(xyz[:, 1], xyz[:, 0])
    return xyz, theta, phi


def random_coeffs(rng, order):
    P = sh_num_coeffs(order)
    return rng.standard_normal(P) + 1j * rng.standard_normal(P)


# --- rotation ----------------------------------------------------------------

def test_identity_rotation():
    op = sht.wigner_d_matrix(3, (0.0, 0.0, 0.0))
    np.testing.assert_allclose(op.matrix, np.eye(16), atol=1e-14)


def test_rotation_leaves_monopole_untouched():
    rng = np.random.default_rng(0)
    for _ in range(5):
        euler = tuple(rng.uniform(-np.pi, np.pi, 3))
        op = sht.wigner_d_matrix(4, euler)
        assert op.matrix[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(op.matrix[0, 1:])) < 1e-12
        assert np.max(np.abs(op.matrix[1:, 0])) < 1e-12


@pytest.mark.parametrize("euler", [(0.7, 1.1, -0.4), (2.5, 0.3, 1.9), (-1.0, 2.8, 0.0)])
def test_rotation_matches_sampled_rotation_oracle(euler):
    # Rotated coefficients synthesized at x must equal the original function
    # sampled at inversely-rotated directions.
    rng = np.random.default_rng(42)
    order = 4
    f = random_coeffs(rng, order)
    op = sht.wigner_d_matrix(order, euler)
    xyz, theta, phi = random_directions(rng, 40)
    inv_rotated = xyz @ rot_zyz(*euler)  # row-vector form of R^{-1} x
    th2 = np.arccos(np.clip(inv_rotated[:, 2], -1, 1))
    ph2 = np.arctan2(inv_rotated[:, 1], inv_rotated[:, 0])
    np.testing.assert_allclose(
        synth(op.matrix @ f, theta, phi), synth(f, th2, ph2), atol=1e-8)


def test_z_rotations_compose_additively():
    order = 5
    g1, g2 = 0.8, -2.1
    a = sht.wigner_d_matrix(order, (g1, 0, 0)).matrix
    b = sht.wigner_d_matrix(order, (g2, 0, 0)).matrix
    c = sht.wigner_d_matrix(order, (g1 + g2, 0, 0)).matrix
    np.testing.assert_allclose(a @ b, c, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0, np.pi), st.floats(-np.pi, np.pi))
def test_rotation_unitary_and_block_diagonal(alpha, beta, gamma):
    order = 3
    op = sht.wigner_d_matrix(order, (alpha, beta, gamma))
    P = sh_num_coeffs(order)
    np.testing.assert_allclose(op.hermitian @ op.matrix, np.eye(P), atol=1e-10)
    for n in range(order + 1):
        lo, hi = n * n, (n + 1) ** 2
        off = op.matrix.copy()
        off[lo:hi, lo:hi] = 0.0
        assert np.max(np.abs(off[lo:hi, :])) == 0.0  # coupling outside block is exact zero


# --- mirrors -------------------------------------------------------------------

def test_mirror_xz_is_involution():
    m = sht.mirror_xz_matrix(4).matrix
    np.testing.assert_allclose(m @ m, np.eye(25), atol=1e-14)


def test_mirror_xz_single_coefficient():
    # unit coefficient at (1, 1) maps to -1 at (1, -1)
    m = sht.mirror_xz_matrix(2).matrix
    f = np.zeros(9, dtype=complex)
    f[3] = 1.0  # (1, 1)
    out = m @ f
    expected = np.zeros(9, dtype=complex)
    expected[1] = -1.0  # (1, -1)
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_mirror_xz_sampled_oracle():
    rng = np.random.default_rng(3)
    f = random_coeffs(rng, 4)
    _, theta, phi = random_directions(rng, 30)
    m = sht.mirror_xz_matrix(4).matrix
    np.testing.assert_allclose(
        synth(m @ f, theta, phi), synth(f, theta, 2 * np.pi - phi), atol=1e-10)


def test_mirror_yz_sampled_oracle():
    rng = np.random.default_rng(4)
    f = random_coeffs(rng, 4)
    _, theta, phi = random_directions(rng, 30)
    m = sht.mirror_plane_matrix(4, "yz").matrix
    np.testing.assert_allclose(
        synth(m @ f, theta, phi), synth(f, theta, np.pi - phi), atol=1e-10)


def test_mirror_xy_sampled_oracle():
    rng = np.random.default_rng(5)
    f = random_coeffs(rng, 4)
    _, theta, phi = random_directions(rng, 30)
    m = sht.mirror_plane_matrix(4, "xy").matrix
    np.testing.assert_allclose(
        synth(m @ f, theta, phi), synth(f, np.pi - theta, phi), atol=1e-10)


@pytest.mark.parametrize("plane", ["xz", "yz", "xy"])
def test_plane_mirrors_are_unitary_involutions(plane):
    op = sht.mirror_plane_matrix(5, plane)
    P = sh_num_coeffs(5)
    np.testing.assert_allclose(op.matrix @ op.matrix, np.eye(P), atol=1e-10)
    np.testing.assert_allclose(op.hermitian @ op.matrix, np.eye(P), atol=1e-10)


def test_parity_mirror_composition():
    order = 3
    rng = np.random.default_rng(6)
    f = random_coeffs(rng, order)
    _, theta, phi = random_directions(rng, 25)
    # flip x and z simultaneously
    m = sht.parity_mirror_matrix(order, (1, 0, 1)).matrix
    np.testing.assert_allclose(
        synth(m @ f, theta, phi), synth(f, np.pi - theta, np.pi - phi), atol=1e-10)


def test_parity_mirror_identity():
    np.testing.assert_allclose(
        sht.parity_mirror_matrix(2, (0, 0, 0)).matrix, np.eye(9), atol=1e-15)


# --- application to system matrices ----------------------------------------------

def test_apply_identity_keeps_system():
    rng = np.random.default_rng(7)
    G = rng.standard_normal((9, 16)) + 1j * rng.standard_normal((9, 16))
    ident = sht.wigner_d_matrix(2, (0, 0, 0))
    np.testing.assert_allclose(sht.apply_left(G, ident), G, atol=1e-14)


def test_apply_preserves_singular_values():
    rng = np.random.default_rng(8)
    for order_m, order_l in [(2, 3), (3, 3)]:
        G = (rng.standard_normal((sh_num_coeffs(order_m), sh_num_coeffs(order_l)))
             + 1j * rng.standard_normal((sh_num_coeffs(order_m), sh_num_coeffs(order_l))))
        rot = sht.wigner_d_matrix(order_l, tuple(rng.uniform(-np.pi, np.pi, 3)))
        mir = sht.mirror_plane_matrix(order_m, "yz")
        s0 = np.linalg.svd(G, compute_uv=False)
        s1 = np.linalg.svd(sht.apply_right(G, rot), compute_uv=False)
        s2 = np.linalg.svd(sht.apply_left(G, mir), compute_uv=False)
        np.testing.assert_allclose(s1, s0, atol=1e-10 * s0[0])
        np.testing.assert_allclose(s2, s0, atol=1e-10 * s0[0])


def test_apply_preserves_singular_values_unit_rank():
    rng = np.random.default_rng(9)
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    G = np.outer(u, v.conj())
    op = sht.wigner_d_matrix(3, (0.3, 1.2, -0.8))
    s0 = np.linalg.svd(G, compute_uv=False)
    s1 = np.linalg.svd(sht.apply_right(G, op), compute_uv=False)
    np.testing.assert_allclose(s1, s0, atol=1e-10 * s0[0])


def test_apply_rejects_dimension_mismatch():
    G = np.zeros((9, 16), dtype=complex)
    op = sht.wigner_d_matrix(3, (0, 0, 0))  # 16x16
    with pytest.raises(ValueError):
        sht.apply_left(G, op)
    op2 = sht.wigner_d_matrix(2, (0, 0, 0))  # 9x9
    with pytest.raises(ValueError):
        sht.apply_right(G, op2)


def test_successive_z_rotations_on_system():
    rng = np.random.default_rng(10)
    G = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    g1, g2 = 0.9, 1.7
    a = sht.apply_right(sht.apply_right(G, sht.wigner_d_matrix(2, (g1, 0, 0))),
                        sht.wigner_d_matrix(2, (g2, 0, 0)))
    b = sht.apply_right(G, sht.wigner_d_matrix(2, (g1 + g2, 0, 0)))
    np.testing.assert_allclose(a, b, atol=1e-9)
