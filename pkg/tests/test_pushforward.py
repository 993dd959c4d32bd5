import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnmembrane.errors import DomainError, MapConstructionError
from dnmembrane.mesh import build_rect_mesh
from dnmembrane.pushforward import (
    AffineMap,
    BoundaryFixingBump,
    form_invariance_residual,
    identity_map,
    inverse_point,
    jacobian_product_residual,
    push_forward,
    qc_constant,
    transport_mesh,
    twisted_div_residual,
    uniqueness_demo,
)
from dnmembrane.tensor_field import ConstantField, weak_div_residual
from helpers import airy_a, const_aniso, identity, loglog_slope

NS = (8, 16, 32, 64)


def test_qc_closed_forms(unit16):
    assert qc_constant(identity_map(), unit16) == pytest.approx(2.0)
    assert qc_constant(AffineMap(((2, 0), (0, 1))), unit16) == pytest.approx(2.5)


def test_qc_bump_against_grid_scan():
    t = 0.3
    X, Y = np.meshgrid((np.arange(512) + 0.5) / 512, (np.arange(512) + 0.5) / 512)
    # D Phi = I + t e1 grad(b), b = x y (1-x)(1-y)
    bx = Y * (1 - Y) * (1 - 2 * X)
    by = X * (1 - X) * (1 - 2 * Y)
    j11, j12 = 1 + t * bx, t * by
    q = (j11**2 + j12**2 + 1) / j11
    got = qc_constant(BoundaryFixingBump(t), build_rect_mesh(1, 1, 128))
    assert got == pytest.approx(q.max(), abs=1e-4)


def test_bump_is_identity_on_boundary():
    m = build_rect_mesh(1, 1, 10)
    b = BoundaryFixingBump(0.2, (0.6, 0.8))
    p = m.nodes[m.boundary_loop]
    assert np.array_equal(b(p), p)
    moved = transport_mesh(m, b)
    assert np.array_equal(moved.nodes[m.boundary_loop], p)


def test_bump_amplitude_bound():
    with pytest.raises(MapConstructionError):
        BoundaryFixingBump(4.0)
    with pytest.raises(MapConstructionError):
        AffineMap(((1, 0), (0, -1)))


def test_inverse_examples():
    y = np.array([0.3, 0.8])
    assert np.allclose(inverse_point(identity_map(), y), y)
    A = AffineMap(((1.2, 0.3), (-0.1, 0.9)), (0.05, -0.02))
    assert np.abs(inverse_point(A, y) - A.closed_form_inverse(y[None])[0]).max() < 1e-12
    with pytest.raises(DomainError):
        inverse_point(BoundaryFixingBump(0.2), (1.5, 0.5))


def test_bump_round_trip():
    b = BoundaryFixingBump(0.3, (1.0, 0.0))
    y = np.random.default_rng(5).random((1000, 2))
    assert np.abs(b(b.inverse(y)) - y).max() < 1e-10


def test_push_forward_examples():
    p = np.random.default_rng(2).random((50, 2))
    s = airy_a().sample(p[:, 0], p[:, 1])
    assert np.allclose(push_forward(airy_a(), identity_map()).sample(p[:, 0], p[:, 1]), s, atol=1e-15)
    th = 0.7
    rot = AffineMap(((np.cos(th), -np.sin(th)), (np.sin(th), np.cos(th))))
    assert np.allclose(push_forward(identity(), rot).sample(p[:, 0], p[:, 1]), [1, 0, 1])
    stretch = AffineMap(((2, 0), (0, 1)))
    assert np.allclose(push_forward(identity(), stretch).sample(p[:, 0], p[:, 1]), [2, 0, 0.5])


def test_affine_composition():
    A1 = AffineMap(((1.1, 0.2), (0.0, 0.9)), (0.1, 0.0))
    A2 = AffineMap(((0.8, -0.3), (0.4, 1.2)), (0.0, 0.2))
    p = np.random.default_rng(4).random((30, 2))
    y = A2(A1(p))
    two = push_forward(push_forward(const_aniso(), A1), A2).sample(y[:, 0], y[:, 1])
    one = push_forward(const_aniso(), A2.compose(A1)).sample(y[:, 0], y[:, 1])
    assert np.abs(two - one).max() < 1e-10


def test_form_invariance_identity_exact(unit16):
    u = lambda x, y: x**2 + y
    v = lambda x, y: x * y
    assert form_invariance_residual(unit16, airy_a(), identity_map(), u, v) < 1e-12


def test_form_invariance_bump_second_order():
    b = BoundaryFixingBump(0.2)
    x = lambda x, y: x
    res = [form_invariance_residual(build_rect_mesh(1, 1, n), identity(), b, x, x) for n in NS]
    assert loglog_slope([1 / n for n in NS], res) > 1.8


@settings(max_examples=8, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 2.0))
def test_form_invariance_random_smooth(c1, c2, k):
    b = BoundaryFixingBump(0.2, (0.6, 0.8))
    u = lambda x, y: np.sin(k * x + c1) * np.cos(y)
    v = lambda x, y: np.exp(c2 * x * y)
    r = [form_invariance_residual(build_rect_mesh(1, 1, n), airy_a(), b, u, v) for n in (8, 32)]
    assert r[1] < r[0] or r[1] < 1e-10


def test_twisted_residual_cases(unit16):
    tw = twisted_div_residual(unit16, airy_a(), identity_map())
    assert np.allclose(tw, weak_div_residual(push_forward(airy_a(), identity_map()), unit16), atol=1e-12)
    A = AffineMap(((1.2, 0.3), (0.1, 0.9)), (0.1, 0.2))
    assert max(twisted_div_residual(unit16, const_aniso(), A)) < 1e-10
    assert max(jacobian_product_residual(unit16, const_aniso(), A)) < 1e-10
    assert max(jacobian_product_residual(unit16, const_aniso(), identity_map())) < 1e-10


def test_twisted_residual_decays_for_bump():
    b = BoundaryFixingBump(0.2)
    res = [max(twisted_div_residual(build_rect_mesh(1, 1, n), airy_a(), b)) for n in NS]
    assert loglog_slope([1 / n for n in NS], res) >= 1.0


def test_pushed_samples_symmetric():
    pf = push_forward(airy_a(), BoundaryFixingBump(0.2, (0.6, 0.8)))
    p = np.random.default_rng(9).random((40, 2)) * 0.9 + 0.05
    s = pf.sample(p[:, 0], p[:, 1])
    assert s.shape == (40, 3) and np.all(np.isfinite(s))


def test_uniqueness_zero_amplitude(unit16):
    r = uniqueness_demo(unit16, airy_a(), 0.0)
    assert r.dn_norm_diff < 1e-10 and r.field_distance < 1e-12
    assert r.pushed_residual < 1e-10


def test_uniqueness_signature_identity():
    reps = [uniqueness_demo(build_rect_mesh(1, 1, n), identity(), 0.3) for n in NS]
    dn = [r.dn_norm_diff for r in reps]
    assert all(b < a for a, b in zip(dn, dn[1:]))
    assert min(r.field_distance for r in reps) > 0.05
    pushed = [r.pushed_residual for r in reps]
    assert min(pushed) > 0.05 and pushed[-1] >= 0.9 * pushed[-2]
    assert all(r.base_residual < 1e-12 for r in reps)
    # on the untransported mesh the operator distance does not decay
    assert reps[-1].dn_norm_diff_same_mesh > reps[0].dn_norm_diff_same_mesh
