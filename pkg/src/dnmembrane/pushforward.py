"""Plane maps, tensor push-forward, and the boundary-fixing invariance demo."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .dn_map import assemble_dn, op_norm_diff
from .errors import DomainError, InverseMapError, MapConstructionError
from .fem import assemble, evaluate_nodal, interpolate
from .mesh import Mesh
from .tensor_field import TensorField, div_residual_from_columns, weak_div_residual

__all__ = [
    "PlaneMap",
    "AffineMap",
    "BoundaryFixingBump",
    "PushForwardField",
    "identity_map",
    "qc_constant",
    "inverse_point",
    "push_forward",
    "transport_mesh",
    "form_invariance_residual",
    "twisted_div_residual",
    "jacobian_product_residual",
    "UniquenessReport",
    "uniqueness_demo",
]

NEWTON_TOL = 1e-13
NEWTON_MAXIT = 50


def _newton_inverse(pmap: "PlaneMap", y: np.ndarray, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Damped Newton for ``pmap(x) = y`` seeded at ``y`` (vectorized)."""
    x = y.copy()
    res = pmap(x) - y
    rn = np.hypot(res[:, 0], res[:, 1])
    active = rn > tol
    for _ in range(maxit):
        if not active.any():
            break
        xa = x[active]
        dx = np.linalg.solve(pmap.jacobian(xa), res[active][..., None])[..., 0]
        step = np.ones(len(xa))
        for _ in range(30):
            xn = xa - step[:, None] * dx
            rnew = pmap(xn) - y[active]
            nn = np.hypot(rnew[:, 0], rnew[:, 1])
            bad = nn >= rn[active]
            if not bad.any():
                break
            step[bad] *= 0.5
        x[active] = xn
        res[active] = rnew
        rn[active] = nn
        active = rn > tol
    return x, ~active


class PlaneMap:
    """Orientation-preserving map of the plane with an analytic Jacobian."""

    domain: tuple[float, float] | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """``D Phi`` at the points, shape ``(..., 2, 2)``."""
        raise NotImplementedError

    def _inverse_batch(self, y: np.ndarray):
        return _newton_inverse(self, y)

    def inverse(self, pts: np.ndarray) -> np.ndarray:
        """Preimages of an array of points ``(..., 2)``."""
        pts = np.asarray(pts, dtype=float)
        y = pts.reshape(-1, 2)
        x, ok = self._inverse_batch(y)
        if not np.all(ok):
            bad = y[~ok.astype(bool)][0]
            raise InverseMapError(f"Newton did not converge in {NEWTON_MAXIT} iterations at {tuple(bad)}")
        return x.reshape(pts.shape)


@dataclass(frozen=True)
class AffineMap(PlaneMap):
    matrix: tuple = ((1.0, 0.0), (0.0, 1.0))
    shift: tuple = (0.0, 0.0)

    def __post_init__(self):
        if np.linalg.det(self.A) <= 0:
            raise MapConstructionError("affine map must have positive determinant")

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.shift, dtype=float)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.A.T + self.b

    def jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(self.A, pts.shape[:-1] + (2, 2)).copy()

    def closed_form_inverse(self, pts):
        pts = np.asarray(pts, dtype=float)
        return (pts - self.b) @ np.linalg.inv(self.A).T

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``."""
        A = self.A @ inner.A
        b = self.A @ inner.b + self.b
        return AffineMap(tuple(map(tuple, A)), tuple(b))


BUMP_GRAD_SUP = 0.25  # sup |grad(x1 x2 (1-x1)(1-x2))| on the unit square, attained at side midpoints


@dataclass(frozen=True)
class BoundaryFixingBump(PlaneMap):
    """``Phi(x) = x + t x1 x2 (1-x1)(1-x2) c`` on the unit square.

    Equal to the identity on the boundary. Construction requires
    ``|t| |c| sup|grad b| < 1``, which makes ``x -> y - t b(x) c`` a contraction
    (so ``Phi`` is injective) and keeps ``det D Phi`` positive.
    """

    t: float
    c: tuple = (1.0, 0.0)

    domain = (1.0, 1.0)

    def __post_init__(self):
        bound = abs(self.t) * float(np.hypot(*self.c)) * BUMP_GRAD_SUP
        if not bound < 1.0:
            raise MapConstructionError(
                f"bump amplitude {self.t} violates the injectivity bound (|t||c|/4 = {bound:.3g} >= 1)"
            )

    def _bump(self, pts):
        x1, x2 = pts[..., 0], pts[..., 1]
        return x1 * x2 * (1.0 - x1) * (1.0 - x2)

    def _grad_bump(self, pts):
        x1, x2 = pts[..., 0], pts[..., 1]
        return np.stack([x2 * (1.0 - x2) * (1.0 - 2.0 * x1), x1 * (1.0 - x1) * (1.0 - 2.0 * x2)], axis=-1)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts + self.t * self._bump(pts)[..., None] * np.asarray(self.c, dtype=float)

    def jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.c, dtype=float)
        J = self.t * c[:, None] * self._grad_bump(pts)[..., None, :]
        J[..., 0, 0] += 1.0
        J[..., 1, 1] += 1.0
        return J

    def _inverse_batch(self, y):
        x, ok = _kernels.bump_inverse(y, self.t, self.c[0], self.c[1], NEWTON_TOL, NEWTON_MAXIT)
        return x, ok.astype(bool)


def identity_map() -> AffineMap:
    return AffineMap()


def qc_constant(pmap: PlaneMap, mesh: Mesh) -> float:
    """``max |D Phi|_F^2 / det D Phi`` over the quadrature points of ``mesh``."""
    m = mesh.edge_midpoints().reshape(-1, 2)
    J = pmap.jacobian(m)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(det <= 0):
        raise MapConstructionError("non-positive Jacobian determinant")
    return float(((J ** 2).sum(axis=(1, 2)) / det).max())


def inverse_point(pmap: PlaneMap, y) -> np.ndarray:
    """Preimage of a single point, accurate to 1e-12."""
    y = np.asarray(y, dtype=float)
    dom = pmap.domain
    if dom is not None:
        a, b = dom
        if not (-1e-12 <= y[0] <= a + 1e-12 and -1e-12 <= y[1] <= b + 1e-12):
            raise DomainError(f"point {tuple(y)} outside the map domain")
    x = pmap.inverse(y[None])[0]
    if np.hypot(*(pmap(x[None])[0] - y)) >= 1e-12:
        raise InverseMapError("inverse not accurate to 1e-12")
    return x


def _push_packed(J: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``J S J^T / det J`` for packed symmetric ``s``, kept symmetric."""
    j11, j12, j21, j22 = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
    s11, s12, s22 = s[..., 0], s[..., 1], s[..., 2]
    det = j11 * j22 - j12 * j21
    r11 = j11 * j11 * s11 + 2.0 * j11 * j12 * s12 + j12 * j12 * s22
    r12 = j11 * j21 * s11 + (j11 * j22 + j12 * j21) * s12 + j12 * j22 * s22
    r22 = j21 * j21 * s11 + 2.0 * j21 * j22 * s12 + j22 * j22 * s22
    return np.stack([r11, r12, r22], axis=-1) / det[..., None]


@dataclass(frozen=True)
class PushForwardField(TensorField):
    """``T_Phi sigma (y) = D Phi sigma D Phi^T / det D Phi`` at ``x = Phi^{-1}(y)``."""

    base: TensorField
    pmap: PlaneMap

    kind = "pushforward"
    claimed_divergence_free = False

    @property
    def domain(self):
        return self.pmap.domain or self.base.domain

    def preimage_samples(self, x, y):
        """Preimages, Jacobians and base samples for target points."""
        pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        pre = self.pmap.inverse(pts)
        J = self.pmap.jacobian(pre)
        s = self.base.sample(pre[..., 0], pre[..., 1])
        return pre, J, s

    def sample(self, x, y):
        _, J, s = self.preimage_samples(x, y)
        return _push_packed(J, s)


def push_forward(field: TensorField, pmap: PlaneMap) -> PushForwardField:
    return PushForwardField(field, pmap)


def transport_mesh(mesh: Mesh, pmap: PlaneMap) -> Mesh:
    """``mesh`` with every node moved by ``pmap`` (the map must fix the boundary)."""
    return mesh.with_nodes(pmap(mesh.nodes))


def _maps_rect_onto_itself(pmap: PlaneMap, rect) -> bool:
    if isinstance(pmap, BoundaryFixingBump):
        return tuple(rect) == (1.0, 1.0)
    a, b = rect
    corners = np.array([[0, 0], [a, 0], [a, b], [0, b]], dtype=float)
    img = pmap(corners)
    return all(np.min(np.linalg.norm(corners - p, axis=1)) < 1e-12 for p in img) and isinstance(pmap, AffineMap)


def _nodal(mesh: Mesh, u) -> np.ndarray:
    if callable(u):
        return interpolate(mesh, u).values
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.num_nodes,):
        raise ValueError("nodal function size mismatch")
    return u


@dataclass(frozen=True)
class _PointSampled(TensorField):
    """``base`` seen only through point samples, so it gets the default
    3-point element averages like any pushed field."""

    base: TensorField

    @property
    def domain(self):
        return self.base.domain

    def sample(self, x, y):
        return self.base.sample(x, y)


def form_invariance_residual(mesh: Mesh, field: TensorField, pmap: PlaneMap, u, v) -> float:
    """``|int sigma grad u . grad v - int T_Phi sigma grad(u o Phi^-1) . grad(v o Phi^-1)|``.

    Both sides are P1 forms on ``mesh`` (the map sends the rectangle onto
    itself). ``u`` and ``v`` are callables, composed exactly with the inverse
    map, or nodal arrays, composed through their P1 interpolant. Both sides
    use the same 3-point element rule, so the identity map gives 0.
    """
    if not _maps_rect_onto_itself(pmap, mesh.rect):
        raise ValueError("form invariance needs a map of the rectangle onto itself")
    uh, vh = _nodal(mesh, u), _nodal(mesh, v)
    lhs = float(vh @ (assemble(mesh, _PointSampled(field)).matrix @ uh))

    pre = pmap.inverse(mesh.nodes)

    def compose(w, wh):
        if callable(w):
            return np.asarray(w(pre[:, 0], pre[:, 1]), dtype=float) * np.ones(len(pre))
        return evaluate_nodal(mesh, wh, pre)

    uc, vc = compose(u, uh), compose(v, vh)
    rhs = float(vc @ (assemble(mesh, push_forward(field, pmap)).matrix @ uc))
    return abs(lhs - rhs)


def twisted_div_residual(mesh: Mesh, field: TensorField, pmap: PlaneMap) -> tuple[float, float]:
    """Weak divergence of the columns of ``T_Phi sigma (D Phi^{-1})^T`` on
    ``mesh`` (the target domain), 3-point edge-midpoint rule."""
    pushed = push_forward(field, pmap)
    m = mesh.edge_midpoints()
    _, J, s = pushed.preimage_samples(m[..., 0], m[..., 1])
    T = _push_packed(J, s)
    Tm = np.stack([np.stack([T[..., 0], T[..., 1]], -1), np.stack([T[..., 1], T[..., 2]], -1)], -2)
    Jinv = np.linalg.inv(J)
    twisted = Tm @ np.swapaxes(Jinv, -1, -2)
    avg = twisted.mean(axis=1)
    return div_residual_from_columns(mesh, avg[:, :, 0], avg[:, :, 1])


def jacobian_product_residual(mesh: Mesh, field: TensorField, pmap: PlaneMap) -> tuple[float, float]:
    """Weak divergence of the columns of ``sigma D Phi^T`` on the source mesh."""
    m = mesh.edge_midpoints()
    s = field.sample(m[..., 0], m[..., 1])
    S = np.stack([np.stack([s[..., 0], s[..., 1]], -1), np.stack([s[..., 1], s[..., 2]], -1)], -2)
    J = pmap.jacobian(m)
    prod = (S @ np.swapaxes(J, -1, -2)).mean(axis=1)
    return div_residual_from_columns(mesh, prod[:, :, 0], prod[:, :, 1])


@dataclass(frozen=True)
class UniquenessReport:
    n: int
    t: float
    dn_norm_diff: float
    dn_norm_diff_same_mesh: float
    field_distance: float
    pushed_residual: float
    base_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def uniqueness_demo(mesh: Mesh, field: TensorField, t: float, c=(1.0, 0.0)) -> UniquenessReport:
    """Compare ``sigma`` with its push-forward by a boundary-fixing bump.

    ``dn_norm_diff`` discretizes the pushed problem on the transported mesh
    ``Phi(mesh)`` (same boundary nodes); ``dn_norm_diff_same_mesh`` uses the
    original mesh for both, where grid-scale boundary modes keep the
    difference from vanishing. The residuals use each field's own element
    rule, so ``base_residual`` is the divergence-free reference level.
    """
    pmap = BoundaryFixingBump(t, tuple(c))
    pushed = push_forward(field, pmap)
    # the base goes through the same 3-point rule as the pushed field, so
    # t = 0 compares identical discretizations
    dn_base = assemble_dn(mesh, _PointSampled(field))
    dn_moved = assemble_dn(transport_mesh(mesh, pmap), pushed, gram_mesh=mesh)
    dn_same = assemble_dn(mesh, pushed)
    m = mesh.edge_midpoints()
    diff = field.sample(m[..., 0], m[..., 1]) - pushed.sample(m[..., 0], m[..., 1])
    frob = np.sqrt(diff[..., 0] ** 2 + 2.0 * diff[..., 1] ** 2 + diff[..., 2] ** 2)
    return UniquenessReport(
        n=mesh.n,
        t=float(t),
        dn_norm_diff=op_norm_diff(dn_base, dn_moved),
        dn_norm_diff_same_mesh=op_norm_diff(dn_base, dn_same),
        field_distance=float(frob.max()),
        pushed_residual=max(weak_div_residual(pushed, mesh)),
        base_residual=max(weak_div_residual(field, mesh)),
    )
