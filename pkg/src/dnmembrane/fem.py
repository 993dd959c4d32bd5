"""P1 finite elements for ``-div(sigma grad u) = f`` with Dirichlet data."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import NonEllipticError, SolverError
from .mesh import Mesh
from .quadrature import BARYCENTRIC_7, triangle_rule
from .tensor_field import TensorField, sym_eigvals

__all__ = [
    "StiffnessSystem",
    "NodalFunction",
    "assemble",
    "solve_dirichlet",
    "solve_load",
    "energy",
    "boundary_values",
    "interpolate",
    "evaluate_nodal",
    "l2_norm",
    "l2_error",
    "load_vector",
    "mass_matrix",
    "write_solution_csv",
]

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class NodalFunction:
    """Nodal values of a P1 function; ``residual`` is the relative residual
    of the linear solve that produced it (0 for interpolants)."""

    values: np.ndarray
    residual: float = 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class StiffnessSystem:
    matrix: sp.csr_matrix
    mesh: Mesh
    _lu: dict = field(default_factory=dict, repr=False)

    @cached_property
    def A_ii(self) -> sp.csc_matrix:
        m = self.mesh
        return self.matrix[m.interior][:, m.interior].tocsc()

    @cached_property
    def A_ib(self) -> sp.csr_matrix:
        m = self.mesh
        return self.matrix[m.interior][:, m.boundary_loop]

    @cached_property
    def A_bb(self) -> sp.csr_matrix:
        m = self.mesh
        return self.matrix[m.boundary_loop][:, m.boundary_loop]

    @property
    def A_bi(self) -> sp.csr_matrix:
        return self.A_ib.T.tocsr()

    def interior_solve(self, rhs: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve ``A_ii x = rhs`` (columns allowed); return x and the
        relative residual."""
        if "lu" not in self._lu:
            try:
                self._lu["lu"] = spla.splu(self.A_ii)
            except RuntimeError as exc:  # singular factor
                raise SolverError(f"factorization failed: {exc}") from exc
        x = self._lu["lu"].solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite solution")
        res = np.linalg.norm(self.A_ii @ x - rhs)
        scale = np.linalg.norm(rhs)
        rel = float(res / scale) if scale > 0 else float(res)
        if rel > RESIDUAL_TOL:
            raise SolverError(f"relative residual {rel:.3e} above {RESIDUAL_TOL:g}")
        return x, rel


def assemble(mesh: Mesh, field: TensorField) -> StiffnessSystem:
    """Stiffness matrix ``A_kl = int sigma grad phi_l . grad phi_k``."""
    samples = field.quadrature_samples(mesh).reshape(-1, 3)
    sig = field.element_averages(mesh)
    for what, s in (("quadrature point", samples), ("element average", sig)):
        if not np.all(np.isfinite(s)):
            raise NonEllipticError(f"non-finite tensor at a {what}")
        lo, _ = sym_eigvals(s)
        if lo.min() <= 0:
            k = int(lo.argmin())
            raise NonEllipticError(f"non-positive eigenvalue {lo[k]:.3e} at {what} {k}")
    rows, cols, vals = _kernels.assemble_triplets(mesh.nodes, mesh.triangles, sig)
    N = mesh.num_nodes
    A = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    # (k, l) and (l, k) entries are summed in different orders
    A = ((A + A.T) * 0.5).tocsr()
    return StiffnessSystem(A, mesh)


def boundary_values(mesh: Mesh, g) -> np.ndarray:
    """Values of ``g`` at boundary_loop nodes; ``g`` is a callable ``g(x, y)``
    or an array already ordered along the loop."""
    if callable(g):
        p = mesh.nodes[mesh.boundary_loop]
        return np.asarray(g(p[:, 0], p[:, 1]), dtype=float) * np.ones(len(p))
    g = np.asarray(g, dtype=float)
    if g.shape != (len(mesh.boundary_loop),):
        raise ValueError(f"boundary data has shape {g.shape}, expected ({len(mesh.boundary_loop)},)")
    return g


def interpolate(mesh: Mesh, u) -> NodalFunction:
    """Nodal interpolant of a callable ``u(x, y)``."""
    p = mesh.nodes
    return NodalFunction(np.asarray(u(p[:, 0], p[:, 1]), dtype=float) * np.ones(len(p)))


def solve_dirichlet(mesh: Mesh, field: TensorField, g, system: StiffnessSystem | None = None) -> NodalFunction:
    """``div(sigma grad u) = 0`` with ``u = g`` at the boundary nodes."""
    system = system or assemble(mesh, field)
    gb = boundary_values(mesh, g)
    u = np.empty(mesh.num_nodes)
    u[mesh.boundary_loop] = gb
    if mesh.interior.size:
        ui, res = system.interior_solve(-(system.A_ib @ gb))
        u[mesh.interior] = ui
    else:
        res = 0.0
    return NodalFunction(u, res)


def load_vector(mesh: Mesh, f) -> np.ndarray:
    """``int f phi_k`` with the edge-midpoint rule (each hat is 1/2 at the
    midpoints of its two adjacent edges)."""
    m = mesh.edge_midpoints()
    fv = np.asarray(f(m[..., 0], m[..., 1]), dtype=float) * np.ones(m.shape[:2])
    w = mesh.triangle_areas[:, None] / 3.0
    # vertex k touches edges k (k->k+1) and k-1
    contrib = 0.5 * w * (fv + np.roll(fv, 1, axis=1))
    b = np.zeros(mesh.num_nodes)
    np.add.at(b, mesh.triangles.ravel(), contrib.ravel())
    return b


def solve_load(mesh: Mesh, field: TensorField, f, system: StiffnessSystem | None = None) -> NodalFunction:
    """``-div(sigma grad u) = f`` with homogeneous Dirichlet data."""
    system = system or assemble(mesh, field)
    b = load_vector(mesh, f)
    u = np.zeros(mesh.num_nodes)
    rhs = b[mesh.interior]
    if not np.any(rhs):
        return NodalFunction(u, 0.0)
    ui, res = system.interior_solve(rhs)
    u[mesh.interior] = ui
    return NodalFunction(u, res)


def energy(mesh: Mesh, field: TensorField, u, v, system: StiffnessSystem | None = None) -> float:
    """Bilinear form ``v^T A u``."""
    uu = np.asarray(u, dtype=float)
    vv = np.asarray(v, dtype=float)
    if uu.shape != (mesh.num_nodes,) or vv.shape != (mesh.num_nodes,):
        raise ValueError("nodal functions must have one value per mesh node")
    system = system or assemble(mesh, field)
    return float(vv @ (system.matrix @ uu))


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix."""
    area = mesh.triangle_areas
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    vals = area[:, None, None] * local[None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    N = mesh.num_nodes
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(N, N)).tocsr()


def l2_norm(mesh: Mesh, u) -> float:
    """L2 norm of a P1 function (exact, via the consistent mass matrix)."""
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(u @ (mass_matrix(mesh) @ u)))


def l2_error(mesh: Mesh, u, exact) -> float:
    """L2 distance between a P1 function and a callable, 7-point rule."""
    pts, w = triangle_rule(mesh)
    u = np.asarray(u, dtype=float)
    uh = (u[mesh.triangles][:, None, :] * BARYCENTRIC_7[None]).sum(axis=2)
    ex = np.asarray(exact(pts[..., 0], pts[..., 1]), dtype=float)
    return float(np.sqrt((w * (uh - ex) ** 2).sum()))


def evaluate_nodal(mesh: Mesh, u, pts) -> np.ndarray:
    """Evaluate a P1 function at points of a structured rectangle mesh."""
    u = np.asarray(u, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    a, b = mesh.rect
    n = mesh.n
    hx, hy = a / n, b / n
    i = np.clip(np.floor(pts[:, 0] / hx).astype(int), 0, n - 1)
    j = np.clip(np.floor(pts[:, 1] / hy).astype(int), 0, n - 1)
    s = pts[:, 0] / hx - i
    t = pts[:, 1] / hy - j
    p00 = j * (n + 1) + i
    p10, p01, p11 = p00 + 1, p00 + n + 1, p00 + n + 2
    lower = t <= s
    # lower triangle (p00, p10, p11); upper (p00, p11, p01)
    return np.where(
        lower,
        (1 - s) * u[p00] + (s - t) * u[p10] + t * u[p11],
        (1 - t) * u[p00] + s * u[p11] + (t - s) * u[p01],
    )


def write_solution_csv(mesh: Mesh, u, path) -> None:
    u = np.asarray(u, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "value"])
        for k, ((x, y), val) in enumerate(zip(mesh.nodes, u)):
            w.writerow([k, repr(float(x)), repr(float(y)), repr(float(val))])

