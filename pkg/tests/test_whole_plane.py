import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aztec2p.lattice import ParityError
from aztec2p.whole_plane import (
    OutOfDomainError, R_PLUS, S_az, S_split, b0_fn, c_coeffs, c_from_s, canonicalize, cut_endpoints,
    elliptic_F, elliptic_validation, k11_origin_elliptic, k11_origin_expansion, k11_real, kinv_expansion,
    kinv_torus, kinv_whole_plane, offsets, quartic, s0, s1, s2, s2_direct, theta_a,
)

W0 = (1, 0)
B1 = (2, 1)


def shift(v, u, w):
    # v + 2u e1 + 2w e2
    return (v[0] + 2 * u - 2 * w, v[1] + 2 * u + 2 * w)


small = st.integers(-3, 3)


@settings(max_examples=15)
@given(small, small, st.floats(0.3, 0.9))
def test_real_integral_matches_torus(u, v, a):
    x, y = W0, shift(B1, u, v)
    assert abs(kinv_whole_plane(x, y, a) - kinv_torus(x, y, a)) < 1e-9


@settings(max_examples=15)
@given(small, small, st.sampled_from([0, 1]), st.sampled_from([0, 1]))
def test_fold_against_torus(u, v, e1, e2):
    a = 0.6
    x = W0 if e1 == 0 else (1, 2)
    b = {(0, 1): (2, 1), (0, 0): (0, 1), (1, 0): (2, 3), (1, 1): (0, 3)}[(e1, e2)]
    y = shift(b, u, v)
    cp = canonicalize(x, y)
    assert cp.v >= 0
    ref = kinv_torus(W0, shift(B1, cp.u, cp.v), a)
    assert abs(kinv_torus(x, y, a) - cp.factor * ref) < 1e-11


def test_offsets_round_trip():
    assert offsets(W0, shift(B1, 2, -1)) == (0, 1, 2, -1)
    with pytest.raises(ParityError):
        offsets(W0, (2, 2))


def test_cut_and_theta_on_cut():
    a = 0.7
    z1, z2 = cut_endpoints(a)
    assert -1 < z1 < z2 < 0
    assert abs(quartic(a, z1)) < 1e-12 and abs(quartic(a, z2)) < 1e-12
    zs = np.linspace(z1, z2, 9)[1:-1]
    assert np.allclose(np.abs(theta_a(a, zs)), 1.0)


@pytest.mark.parametrize("a", [0.3, 0.7, 0.95])
def test_origin_elliptic_form(a):
    assert abs(k11_real(a, 0, 0) - k11_origin_elliptic(a)) < 1e-12


def test_domain_errors():
    with pytest.raises(OutOfDomainError):
        k11_real(1.0, 0, 0)
    with pytest.raises(OutOfDomainError):
        k11_real(0.5, 0, -1)
    with pytest.raises(OutOfDomainError):
        elliptic_F(1.2, 0.5)
    with pytest.raises(OutOfDomainError):
        S_az(0.5, 0.5)


def test_known_coefficients():
    c0, c1, c2 = c_coeffs(1, 0)
    assert c0 == pytest.approx(0.25, abs=1e-10)
    assert c1 == 1 / (2 * math.pi)
    assert c2 == pytest.approx(0.125 - math.log(2) / math.pi, abs=1e-8)
    with pytest.raises(ParityError):
        c_coeffs(1, 1)


uv = st.integers(-4, 4)


@settings(max_examples=40)
@given(uv, uv)
def test_s_relations(u, v):
    for f in (s0, s1, s2):
        assert abs(f(u, -v) - f(u, v)) < 1e-8
    assert abs(s0(-u - 1, v) - s0(u, v)) < 1e-8
    assert abs(s1(-u - 1, v) + s1(u, v)) < 1e-14
    assert abs(s2(-u - 1, v) - (-s2(u, v) + s0(u, v))) < 1e-8
    assert abs(s2(u + 1, v) - (-s2(u, v) + s0(u + 1, v))) < 1e-8
    assert abs(s2(u, v) - s2_direct(u, v)) < 1e-8


@settings(max_examples=20)
@given(st.integers(-5, 5), st.integers(-5, 5))
def test_c_from_s(p, q):
    if (p + q) % 2 == 0:
        q += 1
    assert np.allclose(c_coeffs(p, q), c_from_s(p, q), atol=1e-8)


@pytest.mark.parametrize("y", [(2, 1), (4, 3), (0, 3), (6, 1)])
def test_expansion_residual_is_second_order(y):
    res = []
    for h in (1e-2, 1e-3):
        res.append(abs(kinv_whole_plane(W0, y, 1 - h) - kinv_expansion(W0, y, h)))
    # O(h^2 log h): a decade in h gains between 50x and 200x
    assert 50 < res[0] / res[1] < 200


def test_origin_expansion_shape():
    assert k11_origin_expansion(1e-3) < 0.25


def test_S_split_remainder_shrinks():
    z = -0.5
    r1 = abs(S_split(1e-2, z)[2])
    r2 = abs(S_split(1e-3, z)[2])
    assert r2 < r1 / 5
    assert abs(S_az(1 - 1e-6, z) - b0_fn(z)) < 1e-4


@given(st.floats(0.0, 1.0))
def test_elliptic_F_at_zero_modulus(lam):
    assert abs(elliptic_F(lam, 0.0) - math.asin(lam)) < 1e-12


def test_elliptic_validation_domain():
    with pytest.raises(OutOfDomainError):
        elliptic_validation(1e-2, R_PLUS + 0.01)
