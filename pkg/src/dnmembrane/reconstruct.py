"""Recovery formulas driven by linear Dirichlet data.

Every weakly divergence-free tensor has all linear functions as solutions,
so the D-N map applied to ``xi . x`` returns ``sigma xi . nu`` on the boundary,
and pairing two linear traces returns the integral of one tensor component.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dn_map import DnOperator, neumann_density, op_norm_diff, pair
from .mesh import Mesh, diameter
from .quadrature import triangle_rule
from .tensor_field import TensorField, TractionSamples

__all__ = [
    "MeanTensorEstimate",
    "LipschitzReport",
    "ProfilePair",
    "recover_traction",
    "recover_mean_difference",
    "direct_mean_tensor",
    "lipschitz_check",
    "recover_network_profiles",
    "weighted_average",
    "write_profile_csv",
]


def _coord(k):
    return lambda x, y: x if k == 0 else y


@dataclass(frozen=True)
class MeanTensorEstimate:
    matrix: np.ndarray
    h: float
    method: str = "dn_pairing"

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.matrix))

    @property
    def spectral(self) -> float:
        return float(np.abs(np.linalg.eigvalsh(self.matrix)).max())


@dataclass(frozen=True)
class LipschitzReport:
    lhs: float
    lhs_spectral: float
    op_norm: float
    prefactor: float
    rhs: float
    ratio: float
    slack: float
    holds: bool


@dataclass(frozen=True)
class ProfilePair:
    """Recovered string tensions.

    ``sigma1`` rows are ``(y, value)`` on the edge ``x = a``; ``sigma2`` rows
    are ``(x, value)`` on the edge ``y = b``. The corner masks flag the two
    end samples of each edge.
    """

    sigma1: np.ndarray
    sigma2: np.ndarray
    corner1: np.ndarray
    corner2: np.ndarray

    def max_errors(self, f1, f2) -> tuple[float, float]:
        """Largest deviation from the generating profiles, corners excluded."""
        s1, s2 = self.sigma1[~self.corner1], self.sigma2[~self.corner2]
        e1 = np.abs(s1[:, 1] - f1(s1[:, 0])).max()
        e2 = np.abs(s2[:, 1] - f2(s2[:, 0])).max()
        return float(e1), float(e2)


def recover_traction(dn: DnOperator) -> TractionSamples:
    """Boundary traction from the Neumann densities of the two coordinate
    functions; component ``k`` is the density for Dirichlet data ``x_k``."""
    mesh = dn.mesh
    d = [neumann_density(dn, _coord(k)) for k in (0, 1)]
    pts = mesh.nodes[mesh.boundary_loop]
    edges = mesh.boundary_edges
    e = mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]]
    nrm = np.column_stack([e[:, 1], -e[:, 0]]) / np.hypot(e[:, 0], e[:, 1])[:, None]
    normals = nrm + np.roll(nrm, 1, axis=0)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return TractionSamples(pts, normals, np.column_stack(d), mesh.corner_mask())


def recover_mean_difference(dn1: DnOperator, dn2: DnOperator) -> MeanTensorEstimate:
    """``(1/|Omega|) int (sigma - sigma')`` from pairings of linear traces."""
    diff = dn1 - dn2
    area = dn1.mesh.area
    M = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            M[i, j] = pair(diff, _coord(i), _coord(j)) / area
    M = 0.5 * (M + M.T)
    return MeanTensorEstimate(M, dn1.mesh.h)


def direct_mean_tensor(field: TensorField, rect, n_grid: int = 512) -> np.ndarray:
    """Midpoint-grid average of ``field`` over ``[0, a] x [0, b]``."""
    a, b = rect
    xs = (np.arange(n_grid) + 0.5) * (a / n_grid)
    ys = (np.arange(n_grid) + 0.5) * (b / n_grid)
    X, Y = np.meshgrid(xs, ys)
    s = field.sample(X, Y).reshape(-1, 3).mean(axis=0)
    return np.array([[s[0], s[1]], [s[1], s[2]]])


def lipschitz_check(dn1: DnOperator, dn2: DnOperator, mesh: Mesh, slack: float = 1.0) -> LipschitzReport:
    """Compare the mean-tensor difference with ``(1 + diam^2)`` times the
    operator-norm distance of the two D-N maps."""
    est = recover_mean_difference(dn1, dn2)
    opn = op_norm_diff(dn1, dn2)
    pref = 1.0 + diameter(mesh) ** 2
    rhs = pref * opn
    lhs = est.frobenius
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else float("inf")
    return LipschitzReport(lhs, est.spectral, opn, pref, rhs, ratio, slack, bool(lhs <= slack * rhs))


def recover_network_profiles(dn: DnOperator, mesh: Mesh) -> ProfilePair:
    """Read ``sigma1(y)`` off the edge ``x = a`` (data ``x``) and ``sigma2(x)``
    off the edge ``y = b`` (data ``y``)."""
    a, b = mesh.rect
    pts = mesh.nodes[mesh.boundary_loop]
    corner = mesh.corner_mask()
    out = []
    for k, (axis, level) in enumerate(((0, a), (1, b))):
        d = neumann_density(dn, _coord(k))
        on = np.isclose(pts[:, axis], level)
        absc = pts[on, 1 - axis]
        order = np.argsort(absc)
        out.append((np.column_stack([absc[order], d[on][order]]), corner[on][order]))
    (s1, c1), (s2, c2) = out
    return ProfilePair(s1, s2, c1, c2)


def weighted_average(field: TensorField, psi, mesh: Mesh, i: int, j: int) -> float:
    """``int psi sigma_ij`` over the mesh (indices 1-based), with an interior
    degree-5 rule so coefficient jumps on mesh lines are integrated exactly."""
    if {i, j} - {1, 2}:
        raise ValueError("tensor indices must be 1 or 2")
    comp = {(1, 1): 0, (1, 2): 1, (2, 1): 1, (2, 2): 2}[(i, j)]
    pts, w = triangle_rule(mesh)
    s = field.sample(pts[..., 0], pts[..., 1])[..., comp]
    p = np.asarray(psi(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(w.shape)
    return float((w * p * s).sum())


def write_profile_csv(samples: np.ndarray, true_fn, path) -> None:
    """Rows ``(abscissa, recovered, true, abs_error)``."""
    with open(path, "w", newline="") as fh:
        fh.write("# network_profile v1\n")
        w = csv.writer(fh)
        w.writerow(["abscissa", "recovered", "true", "abs_error"])
        for s, v in samples:
            t = float(true_fn(np.array([s]))[0])
            w.writerow([repr(float(s)), repr(float(v)), repr(t), repr(abs(float(v) - t))])
