"""Symmetric tensor fields on the rectangle and their certification.

Every field reports element averages of its components; assembly and the
weak-divergence certificate both consume those averages, so the two modules
agree on what "divergence free" means.

Quadrature per field kind:

* constant fields are exact;
* generic fields (push-forward images) use the 3-point edge-midpoint rule;
* Airy fields integrate ``cof Hess(phi)`` through its edge fluxes
  (``int_K d_y g = sum_e n_y int_e g``). Each edge integral of ``grad phi`` is
  taken with the exact tangential part ``phi(b) - phi(a)`` and the
  edge-midpoint normal part, so neighbouring triangles share edge values and
  the discrete divergence is zero on any triangulation;
* diagonal profiles ``diag(f1(y), f2(x))`` use a chord-weighted Gauss rule in
  the profile variable, which shares the same property and is exact for
  piecewise-constant profiles whose jumps lie on mesh lines.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, NonEllipticError
from .mesh import Mesh

__all__ = [
    "SymTensor2",
    "EllipticityReport",
    "TractionSamples",
    "TensorField",
    "ConstantField",
    "DiagonalProfileField",
    "AiryTerm",
    "AiryPotential",
    "AiryField",
    "evaluate",
    "sym_eigvals",
    "ellipticity_bounds",
    "weak_div_residual",
    "div_residual_from_columns",
    "boundary_traction_direct",
]

_GAUSS3_X = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS3_W = np.array([5.0, 8.0, 5.0]) / 9.0


@dataclass(frozen=True)
class SymTensor2:
    """A symmetric 2x2 tensor stored by its three independent components."""

    s11: float
    s12: float
    s22: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    def eigvals(self) -> tuple[float, float]:
        lo, hi = sym_eigvals(np.array([self.s11, self.s12, self.s22]))
        return float(lo), float(hi)

    def __iter__(self):
        return iter((self.s11, self.s12, self.s22))


def sym_eigvals(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues of packed symmetric tensors ``(..., 3)``."""
    s = np.asarray(s, dtype=float)
    mean = 0.5 * (s[..., 0] + s[..., 2])
    rad = np.hypot(0.5 * (s[..., 0] - s[..., 2]), s[..., 1])
    return mean - rad, mean + rad


@dataclass(frozen=True)
class EllipticityReport:
    lambda_min: float
    lambda_max: float
    K_estimate: float
    sample_count: int


@dataclass(frozen=True)
class TractionSamples:
    """Boundary traction vectors at sample points.

    ``corner`` flags samples at rectangle corners, where the normal jumps.
    """

    points: np.ndarray
    normals: np.ndarray
    traction: np.ndarray
    corner: np.ndarray


class TensorField:
    """Base class: a symmetric tensor field evaluated on arrays of points.

    Subclasses implement :meth:`sample`; they may override
    :meth:`element_averages` with a rule better suited to their structure.
    """

    kind = "abstract"
    claimed_divergence_free = False
    domain: tuple[float, float] | None = None

    def sample(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Packed components ``(..., 3)`` = (s11, s12, s22) at the points."""
        raise NotImplementedError

    def quadrature_samples(self, mesh: Mesh) -> np.ndarray:
        """Samples at the edge midpoints of every triangle, shape (T, 3, 3)."""
        m = mesh.edge_midpoints()
        return self.sample(m[..., 0], m[..., 1])

    def element_averages(self, mesh: Mesh) -> np.ndarray:
        """Average of the field over each triangle, shape (T, 3)."""
        return self.quadrature_samples(mesh).mean(axis=1)


def _as_array(v, like):
    return np.broadcast_to(np.asarray(v, dtype=float), np.shape(like)).copy()


@dataclass(frozen=True)
class ConstantField(TensorField):
    s11: float
    s12: float
    s22: float
    domain: tuple[float, float] | None = None

    kind = "constant"
    claimed_divergence_free = True

    def sample(self, x, y):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (3,))
        out[..., 0] = self.s11
        out[..., 1] = self.s12
        out[..., 2] = self.s22
        return out

    def element_averages(self, mesh):
        return self.sample(np.zeros(len(mesh.triangles)), None)

    @property
    def tensor(self) -> SymTensor2:
        return SymTensor2(self.s11, self.s12, self.s22)


def _chord_integrals(mesh: Mesh, f: Callable, axis: int) -> np.ndarray:
    """``int_K f(coord_axis) dA`` for every triangle.

    The chord of a triangle transverse to ``axis`` is piecewise linear in the
    coordinate, with a kink at the middle vertex; each linear piece gets the
    3-point Gauss rule.
    """
    p = mesh.nodes[mesh.triangles]
    s = p[..., axis]
    o = p[..., 1 - axis]
    order = np.argsort(s, axis=1)
    s = np.take_along_axis(s, order, axis=1)
    o = np.take_along_axis(o, order, axis=1)
    s0, s1, s2 = s.T
    o0, o1, o2 = o.T
    o_long = o0 + (o2 - o0) * (s1 - s0) / (s2 - s0)
    c_mid = np.abs(o_long - o1)
    total = np.zeros(len(p))
    for lo, hi, c_lo, c_hi in ((s0, s1, 0.0, c_mid), (s1, s2, c_mid, 0.0)):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for xi, w in zip(_GAUSS3_X, _GAUSS3_W):
            chord = c_lo + (c_hi - c_lo) * 0.5 * (xi + 1.0)
            total += w * half * chord * f(mid + half * xi)
    return total


@dataclass(frozen=True)
class DiagonalProfileField(TensorField):
    """``diag(f1(y), f2(x))``: the orthogonal string networks.

    ``f1`` and ``f2`` must accept numpy arrays.
    """

    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    label: str = "diagonal"
    domain: tuple[float, float] | None = None

    kind = "diagonal"
    claimed_divergence_free = True

    def sample(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape + (3,))
        out[..., 0] = self.f1(y)
        out[..., 2] = self.f2(x)
        return out

    def element_averages(self, mesh):
        area = mesh.triangle_areas
        out = np.zeros((len(area), 3))
        out[:, 0] = _chord_integrals(mesh, self.f1, axis=1) / area
        out[:, 2] = _chord_integrals(mesh, self.f2, axis=0) / area
        return out


_TRIG = {
    "sin": (np.sin, np.cos, 1.0),    # f, f', sign such that f' = sign * other
    "cos": (np.cos, np.sin, -1.0),
}


@dataclass(frozen=True)
class AiryTerm:
    """``amp * fx(kx*pi*x + px) * fy(ky*pi*y + py)`` with fx, fy in {sin, cos}."""

    amp: float
    kx: float
    ky: float
    fx: str = "sin"
    fy: str = "sin"
    px: float = 0.0
    py: float = 0.0

    def __post_init__(self):
        for name in (self.fx, self.fy):
            if name not in _TRIG:
                raise ValueError(f"unknown trigonometric factor {name!r}")

    def _factors(self, x, y):
        fx, dfx, sx = _TRIG[self.fx]
        fy, dfy, sy = _TRIG[self.fy]
        a = self.kx * np.pi
        b = self.ky * np.pi
        u = a * x + self.px
        v = b * y + self.py
        return a, b, fx(u), sx * dfx(u), fy(v), sy * dfy(v)

    def value(self, x, y):
        _, _, F, _, G, _ = self._factors(x, y)
        return self.amp * F * G

    def gradient(self, x, y):
        a, b, F, dF, G, dG = self._factors(x, y)
        return self.amp * a * dF * G, self.amp * b * F * dG

    def hessian(self, x, y):
        a, b, F, dF, G, dG = self._factors(x, y)
        return (-self.amp * a * a * F * G, self.amp * a * b * dF * dG, -self.amp * b * b * F * G)


@dataclass(frozen=True)
class AiryPotential:
    """``qxx x^2/2 + qxy x y + qyy y^2/2 + sum(terms)``."""

    qxx: float = 1.0
    qxy: float = 0.0
    qyy: float = 1.0
    terms: tuple[AiryTerm, ...] = ()

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = 0.5 * self.qxx * x * x + self.qxy * x * y + 0.5 * self.qyy * y * y
        for t in self.terms:
            v = v + t.value(x, y)
        return v

    def gradient(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = self.qxx * x + self.qxy * y
        gy = self.qxy * x + self.qyy * y
        for t in self.terms:
            tx, ty = t.gradient(x, y)
            gx = gx + tx
            gy = gy + ty
        return gx, gy

    def hessian(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hxx = _as_array(self.qxx, x)
        hxy = _as_array(self.qxy, x)
        hyy = _as_array(self.qyy, x)
        for t in self.terms:
            a, b, c = t.hessian(x, y)
            hxx = hxx + a
            hxy = hxy + b
            hyy = hyy + c
        return hxx, hxy, hyy


@dataclass(frozen=True)
class AiryField(TensorField):
    """Stress field ``s11 = phi_yy, s12 = -phi_xy, s22 = phi_xx``."""

    potential: AiryPotential
    domain: tuple[float, float] | None = None

    kind = "airy"
    claimed_divergence_free = True

    def sample(self, x, y):
        hxx, hxy, hyy = self.potential.hessian(x, y)
        return np.stack([hyy, -hxy, hxx], axis=-1)

    def element_averages(self, mesh):
        pot = self.potential
        p = mesh.nodes[mesh.triangles]
        q = np.roll(p, -1, axis=1)
        mid = 0.5 * (p + q)
        tvec = q - p
        length = np.hypot(tvec[..., 0], tvec[..., 1])
        tau = tvec / length[..., None]
        nu = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
        gx, gy = pot.gradient(mid[..., 0], mid[..., 1])
        dn = length * (gx * nu[..., 0] + gy * nu[..., 1])
        dt = pot.value(q[..., 0], q[..., 1]) - pot.value(p[..., 0], p[..., 1])
        # edge integrals of grad(phi)
        Gx = dt * tau[..., 0] + dn * nu[..., 0]
        Gy = dt * tau[..., 1] + dn * nu[..., 1]
        s11 = (Gy * nu[..., 1]).sum(axis=1)
        s21 = -(Gy * nu[..., 0]).sum(axis=1)
        s12 = -(Gx * nu[..., 1]).sum(axis=1)
        s22 = (Gx * nu[..., 0]).sum(axis=1)
        area = mesh.triangle_areas
        return np.column_stack([s11, 0.5 * (s12 + s21), s22]) / area[:, None]


def _check_domain(field: TensorField, p) -> None:
    dom = getattr(field, "domain", None)
    if dom is None:
        return
    a, b = dom
    x, y = p
    tol = 1e-12 * max(a, b)
    if not (-tol <= x <= a + tol and -tol <= y <= b + tol):
        raise DomainError(f"point ({x}, {y}) outside [0,{a}]x[0,{b}]")


def evaluate(field: TensorField, p) -> SymTensor2:
    """Value of ``field`` at the point ``p = (x, y)``."""
    x, y = float(p[0]), float(p[1])
    _check_domain(field, (x, y))
    s = field.sample(np.array([x]), np.array([y]))[0]
    return SymTensor2(float(s[0]), float(s[1]), float(s[2]))


def ellipticity_bounds(field: TensorField, mesh: Mesh) -> EllipticityReport:
    """Eigenvalue range over all quadrature points of ``mesh``."""
    s = field.quadrature_samples(mesh).reshape(-1, 3)
    if not np.all(np.isfinite(s)):
        raise NonEllipticError("non-finite tensor entries")
    lo, hi = sym_eigvals(s)
    lmin, lmax = float(lo.min()), float(hi.max())
    K = max(lmax, 1.0 / lmin) if lmin > 0 else float("inf")
    return EllipticityReport(lmin, lmax, max(K, 1.0), len(s))


def div_residual_from_columns(mesh: Mesh, col1: np.ndarray, col2: np.ndarray) -> tuple[float, float]:
    """Support-normalized ``max_v |sum_K |K| w_K . grad v|`` over interior hats
    for two element-constant vector fields (the columns of a matrix field)."""
    r, supp = _kernels.hat_residual(mesh.nodes, mesh.triangles, col1, col2, mesh.num_nodes)
    inner = mesh.interior
    if inner.size == 0:
        return 0.0, 0.0
    rel = np.abs(r[inner]) / supp[inner, None]
    return float(rel[:, 0].max()), float(rel[:, 1].max())


def weak_div_residual(field: TensorField, mesh: Mesh) -> tuple[float, float]:
    """Discrete weak divergence of the two columns of ``field``."""
    s = field.element_averages(mesh)
    return div_residual_from_columns(mesh, s[:, [0, 1]], s[:, [1, 2]])


def boundary_traction_direct(field: TensorField, mesh: Mesh, at: str = "midpoints") -> TractionSamples:
    """``sigma . nu`` on the boundary, at edge midpoints or at boundary nodes.

    At corner nodes the normal is the normalized average of the two sides
    and the sample is flagged.
    """
    nodes = mesh.nodes
    edges = mesh.boundary_edges
    d = nodes[edges[:, 1]] - nodes[edges[:, 0]]
    nrm = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    if at == "midpoints":
        pts = 0.5 * (nodes[edges[:, 0]] + nodes[edges[:, 1]])
        normals = nrm
        corner = np.zeros(len(pts), dtype=bool)
    elif at == "nodes":
        pts = nodes[mesh.boundary_loop]
        normals = nrm + np.roll(nrm, 1, axis=0)
        corner = mesh.corner_mask()
        normals[~corner] *= 0.5
        normals[corner] /= np.linalg.norm(normals[corner], axis=1)[:, None]
    else:
        raise ValueError(f"unknown sample location {at!r}")
    s = field.sample(pts[:, 0], pts[:, 1])
    T = np.column_stack([s[:, 0] * normals[:, 0] + s[:, 1] * normals[:, 1],
                         s[:, 1] * normals[:, 0] + s[:, 2] * normals[:, 1]])
    return TractionSamples(pts, normals, T, corner)
