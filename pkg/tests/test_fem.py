import numpy as np
import pytest

from dnmembrane.errors import NonEllipticError
from dnmembrane.fem import (
    assemble,
    energy,
    evaluate_nodal,
    interpolate,
    l2_error,
    l2_norm,
    solve_dirichlet,
    solve_load,
    write_solution_csv,
)
from dnmembrane.mesh import build_rect_mesh
from dnmembrane.tensor_field import ConstantField
from helpers import airy_a, airy_b, const_aniso, identity, loglog_slope, network_sine

GENERATORS = [identity, const_aniso, airy_a, airy_b, network_sine]


def test_two_triangle_stiffness():
    A = assemble(build_rect_mesh(1, 1, 1), identity()).matrix.toarray()
    # nodes (0,0), (1,0), (0,1), (1,1); diagonal from (0,0) to (1,1)
    want = np.array([[1, -0.5, -0.5, 0], [-0.5, 1, 0, -0.5], [-0.5, 0, 1, -0.5], [0, -0.5, -0.5, 1]])
    assert np.allclose(A, want, atol=1e-15)
    assert np.allclose(A.sum(axis=1), 0, atol=1e-15)


def test_identity_gives_five_point_stencil():
    n = 6
    m = build_rect_mesh(1, 1, n)
    A = assemble(m, identity()).matrix.toarray()
    for k in m.interior:
        row = np.zeros(m.num_nodes)
        row[k] = 4
        row[[k - 1, k + 1, k - n - 1, k + n + 1]] = -1
        assert np.allclose(A[k], row, atol=1e-14)


@pytest.mark.parametrize("gen", GENERATORS)
def test_stiffness_symmetric_and_kills_constants(gen, unit16):
    A = assemble(unit16, gen()).matrix
    assert abs(A - A.T).max() == 0.0
    assert np.abs(A @ np.ones(unit16.num_nodes)).max() < 1e-12


def test_assembly_is_linear_in_sigma(unit16):
    A1 = assemble(unit16, identity()).matrix
    A2 = assemble(unit16, ConstantField(2, 0, 2)).matrix
    assert abs(A2 - 2 * A1).max() == 0.0


def test_non_elliptic_field_rejected(unit16):
    with pytest.raises(NonEllipticError):
        assemble(unit16, ConstantField(1, 2, 1))


@pytest.mark.parametrize("gen", GENERATORS)
@pytest.mark.parametrize("xi", [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)])
def test_linear_data_reproduced(gen, xi, unit32):
    g = lambda x, y: xi[0] * x + xi[1] * y
    u = solve_dirichlet(unit32, gen(), g)
    assert np.abs(u.values - g(*unit32.nodes.T)).max() < 1e-8
    assert u.residual < 1e-10


def test_harmonic_quadratic_second_order():
    exact = lambda x, y: x**2 - y**2
    ns = (8, 16, 32, 64)
    errs = [l2_error(m, solve_dirichlet(m, identity(), exact), exact) for m in (build_rect_mesh(1, 1, n) for n in ns)]
    assert loglog_slope([1 / n for n in ns], errs) == pytest.approx(2.0, abs=0.15)


def test_zero_load_gives_zero(unit16):
    u = solve_load(unit16, airy_a(), lambda x, y: 0 * x)
    assert not np.any(u.values)


def test_eigenfunction_load_second_order():
    exact = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    f = lambda x, y: 2 * np.pi**2 * exact(x, y)
    ns = (8, 16, 32, 64)
    errs = [l2_error(m, solve_load(m, identity(), f), exact) for m in (build_rect_mesh(1, 1, n) for n in ns)]
    assert loglog_slope([1 / n for n in ns], errs) > 1.8


def test_load_solution_scales_inversely(unit16):
    f = lambda x, y: 1 + x * y
    u1 = solve_load(unit16, identity(), f).values
    u3 = solve_load(unit16, ConstantField(3, 0, 3), f).values
    assert np.allclose(u3, u1 / 3, atol=1e-14)


def test_energy_examples(unit16):
    z = np.zeros(unit16.num_nodes)
    assert energy(unit16, identity(), z, z) == 0.0
    x = interpolate(unit16, lambda x, y: x)
    assert energy(unit16, identity(), x, x) == pytest.approx(1.0, abs=1e-13)
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal((2, unit16.num_nodes))
    f = airy_b()
    assert energy(unit16, f, u, v) == pytest.approx(energy(unit16, f, v, u), rel=1e-13)


def test_galerkin_orthogonality(unit16):
    f = airy_a()
    sys = assemble(unit16, f)
    u = solve_dirichlet(unit16, f, lambda x, y: np.exp(x) * np.sin(y), sys)
    for k in unit16.interior[::17]:
        hat = np.zeros(unit16.num_nodes)
        hat[k] = 1.0
        assert abs(energy(unit16, f, u, hat, sys)) < 1e-10


def test_energy_follows_tensor_order(unit16):
    # sigma = I <= sigma' = (2, .5; .5, 3): min energies ordered the same way
    g = lambda x, y: np.cos(2 * x) + y**3
    lo = solve_dirichlet(unit16, identity(), g)
    hi = solve_dirichlet(unit16, const_aniso(), g)
    e_lo = energy(unit16, identity(), lo, lo)
    e_hi = energy(unit16, const_aniso(), hi, hi)
    assert 0 < e_lo <= energy(unit16, identity(), hi, hi) <= e_hi


def test_evaluate_nodal_reproduces_linears(unit16):
    u = interpolate(unit16, lambda x, y: 2 * x - 3 * y + 1)
    p = np.random.default_rng(0).random((500, 2))
    assert np.allclose(evaluate_nodal(unit16, u, p), 2 * p[:, 0] - 3 * p[:, 1] + 1, atol=1e-13)


def test_l2_norm_matches_quadrature(unit16):
    u = interpolate(unit16, lambda x, y: x * y)
    assert l2_norm(unit16, u) == pytest.approx(l2_error(unit16, u, lambda x, y: 0 * x), rel=1e-12)


def test_solution_csv(tmp_path, unit16):
    u = interpolate(unit16, lambda x, y: x + y)
    write_solution_csv(unit16, u, tmp_path / "u.csv")
    data = np.loadtxt(tmp_path / "u.csv", delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 3], u.values)
