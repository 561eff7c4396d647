import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigentraj.baselines import (
    bernstein_basis, bspline_basis, clamped_uniform_knots, cox_de_boor, curve_approximation_error,
    curve_reconstruction, fit_controls, linear_basis, linear_descriptor, linear_expand, make_basis,
    reconstruct_controls,
)
from eigentraj.errors import ConfigError, NumericError, ShapeError
from helpers import straight_tracklet

KINDS = ("linear", "bezier", "bspline")


def turn_path(T=12, leg=1.0):
    half = T // 2
    a = np.stack([np.linspace(0, leg, half), np.zeros(half)], axis=1)
    b = np.stack([np.full(T - half, leg), np.linspace(0, leg, T - half + 1)[1:]], axis=1)
    return np.concatenate([a, b])


def test_bernstein_order_one():
    np.testing.assert_array_equal(bernstein_basis(1, 2).M, [[1, 0], [0, 1]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(2, 30))
def test_bernstein_partition_of_unity(order, T):
    np.testing.assert_allclose(bernstein_basis(order, T).M.sum(axis=1), 1.0, atol=1e-12)


def test_bernstein_endpoints():
    M = bernstein_basis(5, 12).M
    assert M.shape == (12, 6)
    np.testing.assert_array_equal(M[0], [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(M[11], [0, 0, 0, 0, 0, 1])


def test_bspline_single_span_is_bezier():
    for order in (1, 2, 3, 5):
        for T in (2, 8, 12):
            np.testing.assert_allclose(bspline_basis(order, order + 1, T).M, bernstein_basis(order, T).M,
                                       atol=1e-12)


def test_bspline_order5_six_controls_equals_bernstein():
    np.testing.assert_allclose(bspline_basis(5, 6, 12).M, bernstein_basis(5, 12).M, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 6), st.integers(2, 25))
def test_bspline_partition_of_unity(order, extra, T):
    M = bspline_basis(order, order + 1 + extra, T).M
    np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(M >= -1e-15)


def test_cox_de_boor_known_values():
    # quadratic, 4 controls, knots (0,0,0,.5,1,1,1); at tau=0.5: N = (0, .5, .5, 0)
    knots = clamped_uniform_knots(2, 4)
    np.testing.assert_array_equal(knots, [0, 0, 0, 0.5, 1, 1, 1])
    np.testing.assert_allclose(cox_de_boor(knots, 2, 0.5), [0, 0.5, 0.5, 0])
    np.testing.assert_allclose(cox_de_boor(knots, 2, 1.0), [0, 0, 0, 1])


def test_bspline_knot_validation():
    with pytest.raises(ConfigError):
        bspline_basis(3, 3, 12)
    with pytest.raises(ConfigError):
        bspline_basis(2, 4, 12, knots=[0, 0, 0, 0.7, 0.5, 1, 1])
    with pytest.raises(ConfigError):
        bspline_basis(2, 4, 12, knots=[0, 0, 0.1, 0.5, 1, 1, 1])


def test_make_basis_kinds():
    assert make_basis("linear", 12).dim == 4
    assert make_basis("bezier", 12).dim == 12
    assert make_basis("bspline", 12, num_ctrl=6).dim == 12
    with pytest.raises(ConfigError):
        make_basis("nurbs", 12)


def test_fit_controls_exact_representation(rng):
    basis = bspline_basis(3, 7, 12)
    P0 = rng.normal(size=(7, 2))
    np.testing.assert_allclose(fit_controls(basis, basis.M @ P0), P0, atol=1e-8)


@pytest.mark.parametrize("kind", KINDS)
def test_straight_line_reconstructed(kind):
    seg = straight_tracklet(velocity=(0.3, -0.2), start=(2.0, 1.0)).fut
    R = curve_reconstruction(kind, seg[None])[0]
    assert np.abs(R - seg).max() < 1e-8


def test_fit_controls_local_optimality(rng):
    basis = bernstein_basis(5, 12)
    S = rng.normal(size=(12, 2))
    P = fit_controls(basis, S)
    best = np.linalg.norm(basis.M @ P - S)
    for _ in range(100):
        Pd = P + rng.normal(0, 1e-3, size=P.shape)
        assert best <= np.linalg.norm(basis.M @ Pd - S)


def test_fit_controls_batch(rng):
    basis = bernstein_basis(5, 12)
    S = rng.normal(size=(4, 12, 2))
    np.testing.assert_allclose(fit_controls(basis, S)[2], fit_controls(basis, S[2]))


def test_fit_controls_errors():
    with pytest.raises(ShapeError):
        fit_controls(bernstein_basis(5, 12), np.zeros((8, 2)))
    with pytest.raises(NumericError):
        fit_controls(bernstein_basis(5, 3), np.zeros((3, 2)))  # 6 controls, 3 frames


def test_reconstruct_controls():
    basis = bernstein_basis(5, 12)
    np.testing.assert_array_equal(reconstruct_controls(basis, np.zeros((6, 2))), np.zeros((12, 2)))
    P = np.arange(12, dtype=np.float64).reshape(6, 2)
    R = reconstruct_controls(basis, P)
    np.testing.assert_array_equal(R[0], P[0])
    np.testing.assert_array_equal(R[-1], P[-1])
    with pytest.raises(ShapeError):
        reconstruct_controls(basis, np.zeros((5, 2)))


def test_round_trip_representable(rng):
    basis = bspline_basis(5, 6, 12)
    S = basis.M @ rng.normal(size=(6, 2))
    np.testing.assert_allclose(reconstruct_controls(basis, fit_controls(basis, S)), S, atol=1e-8)


def test_linear_constant_velocity_exact():
    seg = straight_tracklet(velocity=(0.7, 0.1)).fut
    first, last = linear_descriptor(seg)
    np.testing.assert_allclose(linear_expand(first, last, 12), seg, atol=1e-12)


def test_linear_turn_error():
    seg = turn_path()
    R = curve_reconstruction("linear", seg[None])[0]
    err = np.linalg.norm(R - seg, axis=1)
    assert err[0] == 0.0 and err[-1] == 0.0
    assert err[len(err) // 2] > 0.1


def test_linear_basis_matches_expand(rng):
    seg = rng.normal(size=(12, 2))
    M = linear_basis(12).M
    np.testing.assert_allclose(M @ np.stack([seg[0], seg[-1]]), linear_expand(seg[0], seg[-1], 12))


def test_curve_errors_on_corpus(corpus):
    ts = corpus["hotel"]
    lin = curve_approximation_error("linear", ts)
    bez = curve_approximation_error("bezier", ts)
    bsp = curve_approximation_error("bspline", ts, num_ctrl=6)
    assert bez == pytest.approx(bsp, rel=1e-9)
    assert bez[0] < lin[0] and bez[1] < lin[1]
    with pytest.raises(ConfigError):
        curve_approximation_error("bezier", [])
