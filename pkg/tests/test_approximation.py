import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbffd_ep.approximation import (BASIC, D_X, IDENTITY, LAPLACIAN, AugmentationBasis,
                                    InvalidConfigurationError, SingularStencilError,
                                    basic_weights, build_support, build_supports,
                                    operator_weights, support_size_for)
from rbffd_ep.checks import polynomial_reproduction_error


class TestBasis:
    @pytest.mark.parametrize("p,size", [(-1, 0), (0, 1), (1, 3), (2, 6), (3, 10), (4, 15)])
    def test_size(self, p, size):
        assert AugmentationBasis(p).size == size
        assert support_size_for(p) == 2 * size + 1

    def test_derivative_values(self):
        b = AugmentationBasis(2)
        x = np.array([[2.0, 3.0]])
        # graded order 1, x, y, x^2, xy, y^2
        np.testing.assert_allclose(b.evaluate(x), [[1, 2, 3, 4, 6, 9]])
        np.testing.assert_allclose(b.evaluate(x, (1, 0)), [[0, 1, 0, 4, 3, 0]])
        np.testing.assert_allclose(b.evaluate(x, (0, 2)), [[0, 0, 0, 0, 0, 2]])


class TestSupports:
    def test_center_first_and_nearest(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(size=(200, 2))
        sup = build_supports(pts, 13)
        assert np.all(sup.indices[:, 0] == np.arange(200))
        single = build_support(pts, 17, 13)
        assert set(single.indices) == set(sup.indices[17])

    def test_too_large(self):
        with pytest.raises(InvalidConfigurationError):
            build_supports(np.zeros((5, 2)), 6)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_polynomial_reproduction(p):
    assert polynomial_reproduction_error(p, seed=1) < 1e-9


def test_laplacian_of_quadratic():
    rng = np.random.default_rng(2)
    pts = rng.uniform(size=(100, 2))
    sup = build_support(pts, 0, 13)
    w = operator_weights(pts, sup, AugmentationBasis(2), 3, LAPLACIAN, pts[0])
    f = pts[:, 0] ** 2 + 3 * pts[:, 1] ** 2
    assert w.apply(f) == pytest.approx(8.0, rel=1e-10)


def test_identity_at_center_is_exact():
    rng = np.random.default_rng(3)
    pts = rng.uniform(size=(60, 2))
    sup = build_support(pts, 5, 13)
    w = operator_weights(pts, sup, AugmentationBasis(2), 3, IDENTITY, pts[5])
    # PHS interpolants reproduce nodal data
    assert w.weights[0] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(w.weights[1:])) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]),
       st.floats(0.2, 5.0), st.floats(-3, 3), st.floats(-3, 3))
def test_weights_are_scale_and_shift_covariant(seed, p, s, dx, dy):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(40, 2))
    basis = AugmentationBasis(p)
    n = support_size_for(p)
    sup = build_supports(pts, n)
    ev = pts[:1, None] + 0.01
    w = basic_weights(pts, sup, [0], ev, basis, 3)
    pts2 = pts * s + [dx, dy]
    w2 = basic_weights(pts2, build_supports(pts2, n), [0], ev * s + [dx, dy], basis, 3)
    order = np.array([sum(d) for d in BASIC])
    np.testing.assert_allclose(w2[0, 0] * s ** order[:, None], w[0, 0], rtol=1e-6, atol=1e-8)


def test_even_order_rejected():
    pts = np.random.default_rng(0).uniform(size=(30, 2))
    with pytest.raises(InvalidConfigurationError):
        basic_weights(pts, build_supports(pts, 13), [0], pts[:1], AugmentationBasis(2), 4)


def test_degenerate_support_raises():
    # collinear nodes cannot determine the y monomials
    pts = np.column_stack([np.linspace(0, 1, 13), np.zeros(13)])
    with pytest.raises(SingularStencilError):
        basic_weights(pts, build_supports(pts, 13), [0], pts[:1], AugmentationBasis(2), 3)


def test_unsupported_operator():
    pts = np.random.default_rng(0).uniform(size=(30, 2))
    with pytest.raises(InvalidConfigurationError):
        operator_weights(pts, build_support(pts, 0, 13), AugmentationBasis(2), 3,
                         {(3, 0): 1.0}, pts[0])


def test_first_derivative_of_linear_is_exact():
    pts = np.random.default_rng(4).uniform(size=(80, 2))
    w = operator_weights(pts, build_support(pts, 0, 13), AugmentationBasis(2), 3, D_X,
                         pts[0] + 0.003)
    assert w.apply(5 * pts[:, 0] - pts[:, 1] + 2) == pytest.approx(5.0, rel=1e-10)


def test_five_point_cross_cannot_carry_quadratics():
    h = 0.1
    cross = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h]], dtype=float)
    with pytest.raises(InvalidConfigurationError, match="below"):
        basic_weights(cross, build_supports(cross, 5), [0], cross[:1], AugmentationBasis(2), 3)


def test_classical_cross_is_exact_on_quadratics():
    # the reference stencil the cross example refers to
    h = 0.1
    cross = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h]], dtype=float)
    w = np.array([-4, 1, 1, 1, 1]) / h**2
    x, y = cross.T
    for f, lap in ((x**2, 2.0), (y**2, 2.0), (x * y, 0.0), (x, 0.0), (np.ones(5), 0.0)):
        assert w @ f == pytest.approx(lap, abs=1e-9)
