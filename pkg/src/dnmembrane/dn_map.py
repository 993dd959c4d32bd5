"""Discrete Dirichlet-to-Neumann (Steklov-Poincare) operators."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError
from .fem import StiffnessSystem, assemble
from .mesh import Mesh
from .tensor_field import ConstantField, TensorField

__all__ = [
    "DnOperator",
    "assemble_dn",
    "schur_complement",
    "boundary_mass",
    "h_half_gram",
    "pair",
    "neumann_density",
    "op_norm_diff",
    "trace",
    "write_operator_csv",
    "write_boundary_csv",
]


@dataclass(frozen=True, eq=False)
class DnOperator:
    """Discrete D-N map on the boundary_loop nodes of ``mesh``.

    Attributes
    ----------
    L : ndarray
        Schur complement of the stiffness matrix onto the boundary block.
    M : ndarray
        Consistent P1 boundary mass matrix (cyclic tridiagonal).
    S : ndarray
        Discrete H^{1/2} Gram matrix.
    mesh : Mesh
    residual : float
        Largest relative residual of the interior solves.
    """

    L: np.ndarray
    M: np.ndarray
    S: np.ndarray
    mesh: Mesh
    residual: float = 0.0

    @property
    def lumped_mass(self) -> np.ndarray:
        return self.M.sum(axis=1)

    def __sub__(self, other: "DnOperator") -> "DnOperator":
        _check_compatible(self, other)
        return DnOperator(self.L - other.L, self.M, self.S, self.mesh, max(self.residual, other.residual))


def schur_complement(system: StiffnessSystem) -> tuple[np.ndarray, float]:
    """``A_bb - A_bi A_ii^{-1} A_ib`` as a dense symmetric matrix."""
    A_bb = system.A_bb.toarray()
    if system.mesh.interior.size == 0:
        return A_bb, 0.0
    Aib = system.A_ib.toarray()
    X, res = system.interior_solve(Aib)
    L = A_bb - Aib.T @ X
    return 0.5 * (L + L.T), res


def boundary_mass(mesh: Mesh) -> np.ndarray:
    """Consistent P1 mass matrix of the boundary loop."""
    loop = mesh.boundary_loop
    m = len(loop)
    pts = mesh.nodes[loop]
    length = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    M = np.zeros((m, m))
    k = np.arange(m)
    kp = (k + 1) % m
    np.add.at(M, (k, k), length / 3.0)
    np.add.at(M, (kp, kp), length / 3.0)
    np.add.at(M, (k, kp), length / 6.0)
    np.add.at(M, (kp, k), length / 6.0)
    return M


def h_half_gram(mesh: Mesh) -> np.ndarray:
    """Harmonic-extension seminorm (identity-tensor Schur complement) plus
    the boundary L2 mass: a computable H^{1/2}(boundary) Gram matrix."""
    cached = mesh._cache.get("h_half_gram")
    if cached is None:
        L_I, _ = schur_complement(assemble(mesh, ConstantField(1.0, 0.0, 1.0)))
        cached = L_I + boundary_mass(mesh)
        mesh._cache["h_half_gram"] = cached
    return cached


def assemble_dn(mesh: Mesh, field: TensorField, gram_mesh: Mesh | None = None) -> DnOperator:
    """Assemble the discrete D-N map of ``field`` on ``mesh``.

    ``gram_mesh`` selects the mesh whose H^{1/2} Gram and boundary mass are
    attached (useful when ``mesh`` is a moved copy sharing its boundary).
    """
    L, res = schur_complement(assemble(mesh, field))
    ref = gram_mesh or mesh
    return DnOperator(L, boundary_mass(ref), h_half_gram(ref), mesh, res)


def trace(mesh: Mesh, fn) -> np.ndarray:
    """Values of ``fn(x, y)`` at the boundary_loop nodes."""
    p = mesh.nodes[mesh.boundary_loop]
    return np.asarray(fn(p[:, 0], p[:, 1]), dtype=float) * np.ones(len(p))


def _vec(dn: DnOperator, phi) -> np.ndarray:
    if callable(phi):
        return trace(dn.mesh, phi)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (len(dn.L),):
        raise ValueError(f"boundary function has length {phi.shape}, expected {len(dn.L)}")
    return phi


def pair(dn: DnOperator, phi, psi) -> float:
    """``<Lambda phi, psi> = psi^T L phi``."""
    return float(_vec(dn, psi) @ (dn.L @ _vec(dn, phi)))


def neumann_density(dn: DnOperator, phi, mass: str = "lumped") -> np.ndarray:
    """Pointwise Neumann data ``sigma grad u . nu`` at the boundary nodes.

    The weak data ``L phi`` is divided by the row-summed boundary mass
    (``mass="lumped"``, exact for piecewise-constant data on each side) or
    solved against the consistent mass (``mass="consistent"``, which rings
    next to corners where the density jumps).
    """
    w = dn.L @ _vec(dn, phi)
    if mass == "lumped":
        return w / dn.lumped_mass
    if mass == "consistent":
        return np.linalg.solve(dn.M, w)
    raise ValueError(f"unknown mass option {mass!r}")


def _check_compatible(dn1: DnOperator, dn2: DnOperator) -> None:
    m1, m2 = dn1.mesh, dn2.mesh
    if dn1.L.shape != dn2.L.shape or not np.allclose(
        m1.nodes[m1.boundary_loop], m2.nodes[m2.boundary_loop], rtol=0, atol=1e-12
    ):
        raise ValueError("operators live on different boundary meshes")


def op_norm_diff(dn1: DnOperator, dn2: DnOperator) -> float:
    """Operator norm of ``L1 - L2`` from the discrete H^{1/2} space (Gram of
    ``dn1``) to its dual: the largest |lambda| of ``(L1 - L2) w = lambda S w``."""
    _check_compatible(dn1, dn2)
    D = dn1.L - dn2.L
    D = 0.5 * (D + D.T)
    if not np.any(D):
        return 0.0
    try:
        w = sla.eigh(D, dn1.S, eigvals_only=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}") from exc
    return float(np.abs(w).max())


def write_operator_csv(dn: DnOperator, path) -> None:
    """Dense dump of ``L`` with a versioned header comment."""
    with open(path, "w", newline="") as fh:
        fh.write("# dn_operator v1\n")
        w = csv.writer(fh)
        for row in dn.L:
            w.writerow([repr(float(v)) for v in row])


def write_boundary_csv(mesh: Mesh, values, path) -> None:
    """Boundary function as ``(arc_length, value)`` rows."""
    s = mesh.boundary_arclength()[: len(mesh.boundary_loop)]
    with open(path, "w", newline="") as fh:
        fh.write("# boundary_function v1\n")
        w = csv.writer(fh)
        w.writerow(["arc_length", "value"])
        for a, v in zip(s, np.asarray(values, dtype=float)):
            w.writerow([repr(float(a)), repr(float(v))])
