import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnmembrane.errors import DomainError
from dnmembrane.mesh import build_rect_mesh
from dnmembrane.quadrature import triangle_rule
from dnmembrane.tensor_field import (
    AiryField,
    AiryPotential,
    AiryTerm,
    ConstantField,
    DiagonalProfileField,
    boundary_traction_direct,
    ellipticity_bounds,
    evaluate,
    weak_div_residual,
)
from helpers import airy_a, airy_a_tensor, airy_b, airy_b_tensor, loglog_slope


def test_airy_quadratic_is_identity():
    f = AiryField(AiryPotential(1.0, 0.0, 1.0))
    assert np.allclose(evaluate(f, (0.3, 0.7)).matrix(), np.eye(2))


@pytest.mark.parametrize("c", [0.2, -0.4])
def test_airy_mixed_quadratic(c):
    # phi = (x^2 + y^2)/2 + c x y has Hessian (1, c; c, 1); its cofactor is (1, -c; -c, 1)
    f = AiryField(AiryPotential(1.0, c, 1.0))
    assert np.allclose(evaluate(f, (0.1, 0.9)).matrix(), [[1, -c], [-c, 1]])


def test_diagonal_profile_evaluation():
    f = DiagonalProfileField(lambda y: 1 + y, lambda x: np.full(np.shape(x), 2.0))
    assert np.allclose(evaluate(f, (0.3, 0.5)).matrix(), np.diag([1.5, 2.0]))


def test_evaluate_outside_domain():
    with pytest.raises(DomainError):
        evaluate(airy_a(), (1.5, 0.5))


def test_airy_samples_match_closed_form():
    p = np.random.default_rng(1).random((200, 2))
    for f, exact in ((airy_a(), airy_a_tensor), (airy_b(), airy_b_tensor)):
        assert np.allclose(f.sample(p[:, 0], p[:, 1]), exact(p[:, 0], p[:, 1]), atol=1e-13)


def test_evaluate_is_pure():
    a = evaluate(airy_b(), (0.2, 0.3))
    b = evaluate(airy_b(), (0.2, 0.3))
    assert tuple(a) == tuple(b)


def test_ellipticity_constant_fields():
    for n in (2, 8):
        r = ellipticity_bounds(ConstantField(1, 0, 1), build_rect_mesh(1, 1, n))
        assert (r.lambda_min, r.lambda_max, r.K_estimate) == pytest.approx((1, 1, 1))
        r = ellipticity_bounds(ConstantField(1, -0.5, 1), build_rect_mesh(1, 1, n))
        assert (r.lambda_min, r.lambda_max, r.K_estimate) == pytest.approx((0.5, 1.5, 2))


def test_ellipticity_airy_against_grid_scan():
    X, Y = np.meshgrid((np.arange(512) + 0.5) / 512, (np.arange(512) + 0.5) / 512)
    s = airy_a_tensor(X, Y)
    mean, rad = 0.5 * (s[..., 0] + s[..., 2]), np.hypot(0.5 * (s[..., 0] - s[..., 2]), s[..., 1])
    lo, hi = (mean - rad).min(), (mean + rad).max()
    # closed form: 1 - 0.1 pi^2 at the centre, 1 + 0.1 pi^2 at the corners
    assert lo == pytest.approx(1 - 0.1 * np.pi**2, abs=1e-9)
    r = ellipticity_bounds(airy_a(), build_rect_mesh(1, 1, 64))
    assert r.lambda_min == pytest.approx(lo, abs=1e-9)
    assert r.lambda_max == pytest.approx(hi, abs=2e-3)
    assert r.lambda_max <= 1 + 0.1 * np.pi**2


def test_constant_field_divergence_free(unit16):
    assert max(weak_div_residual(ConstantField(2, 0.5, 3), unit16)) < 1e-13


def test_non_divergence_free_field_plateaus():
    # div of the first row is 1; a hat integrates to a third of its support
    res = [weak_div_residual(_NotDivFree(), build_rect_mesh(1, 1, n))[0] for n in (8, 16, 32)]
    assert res == pytest.approx([1 / 3] * 3, rel=1e-10)


class _NotDivFree(ConstantField):
    """diag(1 + x, 1): the first row has divergence 1."""

    def __init__(self):
        super().__init__(1.0, 0.0, 1.0)

    def sample(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.stack([1 + x, np.zeros_like(x), np.ones_like(x)], axis=-1)

    def element_averages(self, mesh):
        m = mesh.edge_midpoints()
        return self.sample(m[..., 0], m[..., 1]).mean(axis=1)


def test_airy_residual_at_roundoff():
    # the flux-form element averages make the discrete divergence vanish exactly
    for n in (8, 16, 32, 64):
        m = build_rect_mesh(1, 1, n)
        for f in (airy_a(), airy_b()):
            assert max(weak_div_residual(f, m)) < 1e-10


def test_airy_element_averages_converge_weakly():
    # per element the flux-form average is first-order accurate; integrated
    # against a smooth weight the errors cancel to second order
    local, weighted = [], []
    psi = lambda x, y: np.exp(x) * np.cos(y)
    for n in (8, 16, 32):
        m = build_rect_mesh(1, 1, n)
        avg = airy_b().element_averages(m)
        pts, w = triangle_rule(m)
        exact = airy_b_tensor(pts[..., 0], pts[..., 1])
        ref = (w[..., None] * exact).sum(axis=1) / m.triangle_areas[:, None]
        local.append(np.abs(avg - ref).max())
        c = m.nodes[m.triangles].mean(axis=1)
        got = (m.triangle_areas[:, None] * avg * psi(c[:, 0], c[:, 1])[:, None]).sum(axis=0)
        want = (w[..., None] * exact * psi(pts[..., 0], pts[..., 1])[..., None]).sum(axis=(0, 1))
        weighted.append(np.abs(got - want).max())
    h = [1 / 8, 1 / 16, 1 / 32]
    assert loglog_slope(h, local) > 0.9
    assert loglog_slope(h, weighted) > 1.9


potential = st.builds(
    lambda q, terms: AiryPotential(q[0], 0.0, q[1], tuple(terms)),
    st.tuples(st.floats(1.0, 2.0), st.floats(1.0, 2.0)),
    st.lists(
        # amplitude scaled by the wavenumber so each Hessian stays below 0.1
        st.builds(
            lambda amp, kx, ky, fx, fy, px, py: AiryTerm(
                amp / (1.0 + (np.pi * (kx + ky)) ** 2), kx, ky, fx, fy, px, py
            ),
            st.floats(-0.1, 0.1),
            st.integers(0, 2),
            st.integers(0, 2),
            st.sampled_from(["sin", "cos"]),
            st.sampled_from(["sin", "cos"]),
            st.floats(0, 3),
            st.floats(0, 3),
        ),
        max_size=3,
    ),
)


@settings(max_examples=25, deadline=None)
@given(potential)
def test_random_airy_potentials_are_divergence_free(pot):
    f = AiryField(pot)
    m = build_rect_mesh(1, 1, 8)
    assert max(weak_div_residual(f, m)) < 1e-10
    assert ellipticity_bounds(f, m).lambda_min > 0


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.5, 2.0), st.floats(-0.4, 0.4), st.floats(0.5, 3.0), st.floats(0.5, 2.0), st.integers(1, 3)
)
def test_random_diagonal_profiles_are_divergence_free(c1, amp, c2, slope, k):
    f = DiagonalProfileField(
        lambda y: c1 + amp * np.sin(2 * np.pi * k * y), lambda x: c2 + 0.1 * slope * x
    )
    assert max(weak_div_residual(f, build_rect_mesh(1, 1, 8))) < 1e-12


def test_boundary_traction_direct_examples(unit16):
    def on_edge(ts, axis, level):
        return np.isclose(ts.points[:, axis], level)

    ts = boundary_traction_direct(ConstantField(1, 0, 1), unit16)
    assert np.allclose(ts.traction[on_edge(ts, 0, 1.0)], (1, 0))
    ts = boundary_traction_direct(ConstantField(2, 0, 3), unit16)
    assert np.allclose(ts.traction[on_edge(ts, 1, 1.0)], (0, 3))
    ts = boundary_traction_direct(ConstantField(1, -0.5, 1), unit16)
    assert np.allclose(ts.traction[on_edge(ts, 0, 1.0)], (1, -0.5))
