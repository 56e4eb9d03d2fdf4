import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphmimo import sph_special as sps
from sphmimo.errors import DomainError

import oracles


# --- packed index ----------------------------------------------------------

def test_pack_is_bijection_up_to_order():
    N = 9
    seen = set()
    for n in range(N + 1):
        for m in range(-n, n + 1):
            p = sps.sh_pack(n, m)
            assert 0 <= p < sps.sh_num_coeffs(N)
            assert p not in seen
            seen.add(p)
    assert len(seen) == sps.sh_num_coeffs(N)


@given(st.integers(0, 40), st.data())
def test_pack_unpack_roundtrip(n, data):
    m = data.draw(st.integers(-n, n))
    assert sps.sh_unpack(sps.sh_pack(n, m)) == (n, m)


def test_pack_rejects_bad_degree():
    with pytest.raises(ValueError):
        sps.sh_pack(2, 3)
    with pytest.raises(ValueError):
        sps.sh_eval(1, -2, 0.3, 0.1)


def test_sh_degrees_ordering():
    ns, ms = sps.sh_degrees(2)
    assert list(ns) == [0, 1, 1, 1, 2, 2, 2, 2, 2]
    assert list(ms) == [0, -1, 0, 1, -2, -1, 0, 1, 2]


# --- spherical harmonics ---------------------------------------------------

def test_sh_zeroth_is_constant():
    for theta, phi in [(0.0, 0.0), (1.2, 2.3), (np.pi, 5.0)]:
        assert sps.sh_eval(0, 0, theta, phi) == pytest.approx(0.28209479177387814, abs=1e-14)


def test_sh_10_at_pole():
    # P_1(1) = 1  ->  sqrt(3 / 4 pi)
    assert sps.sh_eval(1, 0, 0.0, 0.0) == pytest.approx(0.4886025119029199, abs=1e-14)


def test_sh_21_frozen_oracle_value():
    # mpmath Legendre-recurrence oracle, 40 digits (see oracles.py)
    expected = -0.23654367393939000452 - 0.23654367393939000452j
    got = sps.sh_eval(2, 1, np.pi / 3, np.pi / 4)
    assert got == pytest.approx(expected, abs=1e-13)
    assert got == pytest.approx(oracles.sh_eval_mp(2, 1, np.pi / 3, np.pi / 4), abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 8), st.data(),
       st.floats(0.01, np.pi - 0.01), st.floats(0.0, 2 * np.pi))
def test_sh_matches_mpmath_oracle(n, data, theta, phi):
    m = data.draw(st.integers(-n, n))
    assert sps.sh_eval(n, m, theta, phi) == pytest.approx(
        oracles.sh_eval_mp(n, m, theta, phi), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10), st.data(),
       st.floats(0.0, np.pi), st.floats(0.0, 2 * np.pi))
def test_sh_conjugation_symmetry(n, data, theta, phi):
    # Y_n^{-m} = (-1)^m conj(Y_n^m)
    m = data.draw(st.integers(0, n))
    lhs = sps.sh_eval(n, -m, theta, phi)
    rhs = (-1) ** m * np.conj(sps.sh_eval(n, m, theta, phi))
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_sh_broadcasts_over_angles():
    theta = np.array([0.2, 1.0, 2.0])
    out = sps.sh_eval(3, 2, theta, np.array([0.1, 0.3, 0.5]))
    assert out.shape == (3,)
    for i in range(3):
        assert out[i] == pytest.approx(sps.sh_eval(3, 2, theta[i], [0.1, 0.3, 0.5][i]))


# --- spherical Bessel / Hankel ---------------------------------------------

def test_bessel_at_zero():
    assert sps.sph_bessel(0, 0.0) == 1.0
    for n in range(1, 8):
        assert sps.sph_bessel(n, 0.0) == 0.0


def test_bessel_closed_forms():
    assert sps.sph_bessel(0, 1.0) == pytest.approx(0.8414709848078965, abs=1e-15)
    assert sps.sph_bessel(1, 2.0) == pytest.approx(0.4353977749799916, abs=1e-15)
    assert sps.sph_bessel(1, 2.0) == pytest.approx(float(oracles.j1_closed(2)), abs=1e-15)


def test_bessel_stable_high_order_large_argument():
    # no overflow/NaN anywhere in the advertised envelope
    for n in (10, 20, 30):
        for x in (0.5, 5.0, 50.0, 200.0):
            v = sps.sph_bessel(n, x)
            d = sps.sph_bessel_deriv(n, x)
            assert np.isfinite(v) and np.isfinite(d)


def test_hankel_closed_form():
    expected = 0.8414709848078965 - 0.5403023058681398j  # sin(1) - j cos(1)
    assert sps.sph_hankel1(0, 1.0) == pytest.approx(expected, abs=1e-15)
    assert sps.sph_hankel1(0, 1.0) == pytest.approx(oracles.h0_closed(1), abs=1e-15)


def test_hankel_deriv_closed_form():
    expected = -0.43539777497999161735 + 0.35061200427605525095j  # e^{2j}(2+j)/4
    assert sps.sph_hankel1_deriv(0, 2.0) == pytest.approx(expected, abs=1e-14)
    assert sps.sph_hankel1_deriv(0, 2.0) == pytest.approx(oracles.h0_deriv_closed(2), abs=1e-14)


def test_hankel_rejects_nonpositive_argument():
    with pytest.raises(DomainError):
        sps.sph_hankel1(0, 0.0)
    with pytest.raises(DomainError):
        sps.sph_hankel1_deriv(2, -1.0)


@pytest.mark.parametrize("x", [0.1, 1.0, 3.7, 10.0, 100.0])
def test_wronskian_identity(x):
    # j_n y_n' - j_n' y_n = 1 / x^2
    for n in range(0, 21):
        w = (sps.sph_bessel(n, x) * sps.sph_neumann_deriv(n, x)
             - sps.sph_bessel_deriv(n, x) * sps.sph_neumann(n, x))
        assert abs(w - 1.0 / x ** 2) <= 1e-10 * abs(1.0 / x ** 2)


# --- cap coefficients ------------------------------------------------------

def test_cap_full_aperture_monopole():
    assert sps.cap_coeff(0, np.pi, 1) == pytest.approx(8 * np.pi, abs=1e-12)


def test_cap_vanishing_aperture():
    assert abs(sps.cap_coeff(0, 1e-8, 12)) < 1e-12


def test_cap_higher_orders_vanish_at_full_aperture():
    # P_{n-1}(-1) = P_{n+1}(-1)
    for n in range(1, 9):
        assert abs(sps.cap_coeff(n, np.pi, 12)) < 1e-12


def test_cap_frozen_oracle_value():
    # mpmath Legendre oracle: (48 pi / 5) (P_1 - P_3)(cos pi/8)
    assert sps.cap_coeff(2, np.pi / 8, 12) == pytest.approx(10.201306154224431, abs=1e-12)
    assert sps.cap_coeff(2, np.pi / 8, 12) == pytest.approx(
        oracles.cap_coeff_mp(2, np.pi / 8, 12), abs=1e-12)


# --- mode strength ---------------------------------------------------------

def test_mode_strength_open_dc():
    ctx = sps.RadialContext(k=0.0, r_mic=0.05)
    assert sps.mode_strength(0, ctx) == pytest.approx(4 * np.pi, abs=1e-12)
    for n in range(1, 6):
        assert sps.mode_strength(n, ctx) == pytest.approx(0.0, abs=1e-14)


def test_mode_strength_open_closed_form():
    ctx = sps.RadialContext(k=1.0, r_mic=1.0)
    expected = 4 * np.pi * 1j * float(oracles.j1_closed(1))  # 3.7845972369939320j
    assert sps.mode_strength(1, ctx) == pytest.approx(expected, abs=1e-13)
    assert sps.mode_strength(1, ctx) == pytest.approx(3.784597236993932j, abs=1e-13)


def test_mode_strength_rigid_frozen_oracle_value():
    ctx = sps.RadialContext(k=1.0, r_mic=1.0, sphere_kind="rigid", r_scatter=1.0)
    expected = 8.681937637828858697 - 1.892298618496966018j
    assert sps.mode_strength(0, ctx) == pytest.approx(expected, abs=1e-12)
    assert sps.mode_strength(0, ctx) == pytest.approx(
        oracles.mode_strength_rigid_closed(1.0, 1.0), abs=1e-12)


def test_mode_strength_rigid_rejects_dc():
    ctx = sps.RadialContext(k=0.0, r_mic=0.05, sphere_kind="rigid", r_scatter=0.04)
    with pytest.raises(DomainError):
        sps.mode_strength(0, ctx)


def test_mode_strength_rigid_approaches_open_as_scatterer_shrinks():
    k, r_mic = 20.0, 0.1
    open_ctx = sps.RadialContext(k=k, r_mic=r_mic)
    prev = None
    for r0 in (0.05, 0.01, 0.002):
        rigid_ctx = sps.RadialContext(k=k, r_mic=r_mic, sphere_kind="rigid", r_scatter=r0)
        diff = max(abs(sps.mode_strength(n, rigid_ctx) - sps.mode_strength(n, open_ctx))
                   for n in range(4))
        if prev is not None:
            assert diff < prev
        prev = diff
    assert prev < 1e-3


def test_radial_context_validates_scatterer():
    with pytest.raises(ValueError):
        sps.RadialContext(k=1.0, r_mic=0.04, sphere_kind="rigid", r_scatter=0.05)
    with pytest.raises(ValueError):
        sps.RadialContext(k=1.0, r_mic=0.04, sphere_kind="rigid")


# --- expand_orders helper ---------------------------------------------------

def test_expand_orders_multiplicity():
    out = sps.expand_orders(np.array([1.0, 2.0, 3.0]), 2)
    assert list(out) == [1, 2, 2, 2, 3, 3, 3, 3, 3]
