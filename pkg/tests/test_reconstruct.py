import numpy as np
import pytest

from dnmembrane.dn_map import assemble_dn
from dnmembrane.gconv_lab import LaminateSequence, laminate_member
from dnmembrane.mesh import build_rect_mesh
from dnmembrane.reconstruct import (
    direct_mean_tensor,
    lipschitz_check,
    recover_mean_difference,
    recover_network_profiles,
    recover_traction,
    weighted_average,
    write_profile_csv,
)
from dnmembrane.tensor_field import ConstantField, DiagonalProfileField, boundary_traction_direct
from helpers import (
    airy_a,
    airy_a_tensor,
    airy_b,
    const_aniso,
    constant_tensor,
    identity,
    loglog_slope,
    midpoint_mean,
    network_sine,
)


def _interior_error(ts, want):
    return np.linalg.norm(ts.traction - want, axis=1)[~ts.corner].max()


def test_traction_identity(unit16):
    ts = recover_traction(assemble_dn(unit16, identity()))
    assert _interior_error(ts, ts.normals) < 1e-12


def test_traction_constant(unit16):
    ts = recover_traction(assemble_dn(unit16, const_aniso()))
    S = np.array([[2, 0.5], [0.5, 3]])
    assert _interior_error(ts, ts.normals @ S.T) < 1e-12
    right = np.isclose(ts.points[:, 0], 1.0) & ~ts.corner
    assert np.allclose(ts.traction[right], (2, 0.5))


def test_traction_airy_converges():
    ns = (8, 16, 32, 64)
    errs = []
    for n in ns:
        m = build_rect_mesh(1, 1, n)
        ts = recover_traction(assemble_dn(m, airy_a()))
        errs.append(_interior_error(ts, boundary_traction_direct(airy_a(), m, at="nodes").traction))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert loglog_slope([1 / n for n in ns], errs) > 1.0


def test_mean_difference_trivial(unit16):
    dn = assemble_dn(unit16, airy_b())
    assert np.abs(recover_mean_difference(dn, dn).matrix).max() == 0.0
    M = recover_mean_difference(assemble_dn(unit16, ConstantField(2, 0, 2)), assemble_dn(unit16, identity()))
    assert np.allclose(M.matrix, np.eye(2), atol=1e-12)
    assert np.array_equal(M.matrix, M.matrix.T)


def test_mean_difference_antisymmetric(unit16):
    a, b = assemble_dn(unit16, airy_a()), assemble_dn(unit16, network_sine())
    assert np.array_equal(recover_mean_difference(a, b).matrix, -recover_mean_difference(b, a).matrix)


def test_mean_difference_airy_against_dense_quadrature():
    oracle = midpoint_mean(airy_a_tensor) - np.eye(2)
    errs = []
    for n in (8, 16, 32):
        m = build_rect_mesh(1, 1, n)
        M = recover_mean_difference(assemble_dn(m, airy_a()), assemble_dn(m, identity())).matrix
        errs.append(np.linalg.norm(M - oracle))
    assert loglog_slope([1 / 8, 1 / 16, 1 / 32], errs) >= 1.0


def test_direct_mean_matches_independent_grid():
    got = direct_mean_tensor(airy_a(), (1, 1), 256)
    assert np.allclose(got, midpoint_mean(airy_a_tensor, N=256), atol=1e-13)


def test_lipschitz_identical(unit16):
    dn = assemble_dn(unit16, airy_a())
    r = lipschitz_check(dn, dn, unit16)
    assert r.lhs == 0 and r.rhs == 0 and r.holds


def test_lipschitz_two_identity():
    ratios = []
    for n in (16, 32, 64):
        m = build_rect_mesh(1, 1, n)
        r = lipschitz_check(assemble_dn(m, ConstantField(2, 0, 2)), assemble_dn(m, identity()), m)
        assert r.lhs == pytest.approx(np.sqrt(2), abs=1e-12)
        assert r.lhs_spectral == pytest.approx(1.0, abs=1e-12)
        assert r.holds
        ratios.append(r.ratio)
    assert ratios[0] == pytest.approx(0.4749, abs=5e-4)
    assert max(ratios) - min(ratios) < 0.01


def test_lipschitz_prefactor_by_domain():
    p = []
    for a, b in ((1, 1), (2, 1)):
        m = build_rect_mesh(a, b, 8)
        f = ConstantField(2, 0.5, 3, (a, b))
        g = ConstantField(1, 0, 1, (a, b))
        p.append(lipschitz_check(assemble_dn(m, f), assemble_dn(m, g), m).prefactor)
    assert p == pytest.approx([3.0, 6.0], abs=1e-12)


def test_network_identity(unit16):
    pp = recover_network_profiles(assemble_dn(unit16, identity()), unit16)
    one = lambda s: np.ones_like(s)
    assert max(pp.max_errors(one, one)) < 1e-12
    assert np.all(np.diff(pp.sigma1[:, 0]) > 0) and np.all(np.diff(pp.sigma2[:, 0]) > 0)
    assert pp.corner1.sum() == 2 and pp.corner2.sum() == 2


def test_network_sine_converges():
    f1 = lambda y: 1 + 0.5 * np.sin(2 * np.pi * y)
    f2 = lambda x: np.full(np.shape(x), 2.0)
    errs = []
    for n in (16, 32, 64):
        m = build_rect_mesh(1, 1, n)
        e1, e2 = recover_network_profiles(assemble_dn(m, network_sine()), m).max_errors(f1, f2)
        errs.append(e1)
        assert e2 < 1e-10
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_network_affine_profiles(unit16):
    f1 = lambda y: 1 + y
    f2 = lambda x: 1 + x
    pp = recover_network_profiles(assemble_dn(unit16, DiagonalProfileField(f1, f2)), unit16)
    assert max(pp.max_errors(f1, f2)) < 1e-10


def test_weighted_average_examples(unit16):
    inv = lambda x, y: np.ones_like(x)
    for i in (1, 2):
        for j in (1, 2):
            assert weighted_average(identity(), inv, unit16, i, j) == pytest.approx(float(i == j), abs=1e-14)
    assert weighted_average(ConstantField(2, 0, 2), inv, unit16, 1, 1) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        weighted_average(identity(), inv, unit16, 0, 1)


def test_weighted_average_laminate_limit():
    seq = LaminateSequence((1, 2, 4, 8), 1.0, 3.0, 0.5, 1.0)
    psi = lambda x, y: x * y
    # the limit field diag(2, 1) integrates x y to 2/4
    errs = [abs(weighted_average(laminate_member(seq, m), psi, build_rect_mesh(1, 1, 8 * m), 1, 1) - 0.5)
            for m in seq.frequencies]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # sin(pi x) sin(pi y) is symmetric about y = 1/2: exact at every frequency
    sp = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    for m in seq.frequencies:
        val = weighted_average(laminate_member(seq, m), sp, build_rect_mesh(1, 1, 8 * m), 1, 1)
        assert val == pytest.approx(2 * 4 / np.pi**2, abs=1e-3)


def test_profile_csv(tmp_path, unit16):
    pp = recover_network_profiles(assemble_dn(unit16, network_sine()), unit16)
    f1 = lambda y: 1 + 0.5 * np.sin(2 * np.pi * y)
    write_profile_csv(pp.sigma1, f1, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0].startswith("#") and lines[1] == "abscissa,recovered,true,abs_error"
    assert len(lines) == 2 + len(pp.sigma1)
