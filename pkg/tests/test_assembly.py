import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from rbffd_ep.approximation import InvalidConfigurationError
from rbffd_ep.assembly import (ApproachConfig, ConfigurationWarning, Discretization, Problem,
                               assemble_composed, dump_matrix, shifted_eval_point)
from rbffd_ep.constitutive import MaterialModel
from rbffd_ep.geometry import density_from_spacing, generate_nodes, rectangle
from rbffd_ep.solver import newton_step, solve_linear

MODEL = MaterialModel(1.0, 0.3)


def affine(points, load=1.0):
    x, y = points[:, 0], points[:, 1]
    return load * np.column_stack([1e-3 * (2 * x - y + 1), 1e-3 * (0.5 * x + 3 * y - 2)])


@pytest.fixture(scope="module")
def square_cloud():
    return generate_nodes(rectangle(1.0, 1.0, density_from_spacing(0.1),
                                    bcs=("traction", "traction", "dirichlet", "dirichlet")), 0)


def affine_problem(cloud, model=MODEL):
    from rbffd_ep.constitutive import elastic_tensor
    eps = 1e-3 * np.array([2.0, 3.0, 0.0, -1.0 + 0.5])
    sig = elastic_tensor(model) @ eps

    def traction(points, normals, load, segments):
        s = load * np.array([[sig[0], sig[3]], [sig[3], sig[1]]])
        return normals @ s.T

    return Problem(cloud, model, dirichlet=lambda p, n, ld, s: affine(p, ld), traction=traction)


class TestConfig:
    def test_clamp_warns(self):
        with pytest.warns(ConfigurationWarning, match="clamped"):
            cfg = ApproachConfig("hybrid", alpha_d=0.9, p_fd=4)
        assert cfg.alpha_d == 0.5

    def test_per_node_keeps_value(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cfg = ApproachConfig("hybrid", alpha_d=0.9, p_fd=4, alpha_d_mode="per_node")
        assert cfg.alpha_d == 0.9

    @pytest.mark.parametrize("kwargs", [dict(approach="weak"), dict(p_fd=3), dict(m=4),
                                        dict(alpha_d=0.0), dict(alpha_s=-0.1)])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfigurationError):
            ApproachConfig(**kwargs)

    def test_default_support_size(self):
        assert ApproachConfig(p=3).support_size == 21


def test_shifted_point():
    p = shifted_eval_point([[1.0, 0.0]], [[1.0, 0.0]], 0.5, np.array([0.1]))
    np.testing.assert_allclose(p, [[0.95, 0.0]])


@pytest.mark.parametrize("approach", ["direct", "composed", "hybrid"])
def test_affine_patch(square_cloud, approach):
    disc = Discretization(affine_problem(square_cloud), ApproachConfig(approach))
    u = solve_linear(disc, 1.0).u.reshape(-1, 2)
    ue = affine(square_cloud.points)
    assert np.max(np.abs(u - ue)) < 1e-10 * np.max(np.abs(ue))


@pytest.mark.parametrize("approach", ["composed", "hybrid"])
def test_tangent_is_residual_jacobian(square_cloud, approach):
    model = MaterialModel(1.0, 0.3, sigma_y0=2e-3)
    disc = Discretization(affine_problem(square_cloud, model), ApproachConfig(approach))
    committed = disc.initial_states()
    rng = np.random.default_rng(0)
    u = affine(square_cloud.points).ravel() * 2 + 1e-4 * rng.normal(size=2 * len(square_cloud))
    states, tangents = disc.update_states(committed, u)
    assert sum(np.count_nonzero(tangents[k].plastic) for k in disc.formulation_sets) > 0
    K = disc.tangent(tangents).K
    d = rng.normal(size=u.size) * 1e-8
    sp_, _ = disc.update_states(committed, u + d)
    sm_, _ = disc.update_states(committed, u - d)
    rp, _ = disc.residual(sp_, u + d, 1.0)
    rm, _ = disc.residual(sm_, u - d, 1.0)
    kd = K @ d
    assert np.max(np.abs(0.5 * (rp - rm) - kd)) < 1e-7 * np.max(np.abs(kd))


def test_formulation_sets(square_cloud):
    p = affine_problem(square_cloud)
    assert Discretization(p, ApproachConfig("hybrid")).formulation_sets == ("bc", "sn")
    assert Discretization(p, ApproachConfig("composed")).formulation_sets == ("nodes", "bc")


def test_shifted_dirichlet_rows_are_first_order(square_cloud):
    # shifted rows sample u inside but prescribe the boundary value
    errs = []
    for a in (0.25, 0.5):
        disc = Discretization(affine_problem(square_cloud), ApproachConfig(alpha_s=a))
        u = solve_linear(disc, 1.0).u.reshape(-1, 2)
        errs.append(np.max(np.abs(u - affine(square_cloud.points))))
    assert 1.5 < errs[1] / errs[0] < 3.0


def test_shift_outside_domain_rejected():
    cloud = generate_nodes(rectangle(1.0, 0.2, density_from_spacing(0.1)), 0)
    with pytest.raises(InvalidConfigurationError, match="outside"):
        Discretization(Problem(cloud, MODEL), ApproachConfig(alpha_s=2.5))


def test_support_larger_than_cloud():
    cloud = generate_nodes(rectangle(0.3, 0.3, density_from_spacing(0.1)), 0)
    with pytest.raises(InvalidConfigurationError, match="exceeds"):
        Discretization(Problem(cloud, MODEL), ApproachConfig(p=4))


def test_newton_step_solves(square_cloud):
    ta = assemble_composed(affine_problem(square_cloud), ApproachConfig())
    rng = np.random.default_rng(1)
    x = rng.normal(size=ta.K.shape[0])
    np.testing.assert_allclose(newton_step(ta.K, -(ta.K @ x)), x, rtol=1e-8, atol=1e-8)


def test_dump_matrix_sorted():
    K = sp.csr_matrix(np.array([[0.0, 2.5], [1.0, 0.0]]))
    assert dump_matrix(K) == "0 1 2.5\n1 0 1\n"
