"""Structured triangulations of axis-aligned rectangles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshError

__all__ = [
    "Mesh",
    "build_rect_mesh",
    "diameter",
    "outward_normal",
    "write_mesh_csv",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation of ``[0, a] x [0, b]``.

    Attributes
    ----------
    nodes : ndarray, shape (N, 2)
        Node coordinates.
    triangles : ndarray, shape (T, 3)
        Counterclockwise node indices.
    boundary_loop : ndarray
        Boundary node indices, counterclockwise, starting at the corner
        ``(0, 0)``.
    interior : ndarray
        Indices of nodes not on the boundary (sorted).
    rect : tuple of float
        ``(a, b)``.
    n : int
        Subdivisions per side.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray
    interior: np.ndarray
    rect: tuple[float, float]
    n: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        """Largest cell side."""
        return max(self.rect) / self.n

    @property
    def boundary_edges(self) -> np.ndarray:
        """Boundary edges as ``(k, 2)`` node pairs following the loop."""
        loop = self.boundary_loop
        return np.column_stack([loop, np.roll(loop, -1)])

    @property
    def triangle_areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            p = self.nodes[self.triangles]
            d1 = p[:, 1] - p[:, 0]
            d2 = p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        return self._cache["areas"]

    @property
    def area(self) -> float:
        """Measure of the domain, summed from the triangles."""
        return float(self.triangle_areas.sum())

    def edge_midpoints(self) -> np.ndarray:
        """Midpoints of the edges (0-1, 1-2, 2-0) of every triangle, shape (T, 3, 2)."""
        if "mids" not in self._cache:
            p = self.nodes[self.triangles]
            self._cache["mids"] = 0.5 * (p + np.roll(p, -1, axis=1))
        return self._cache["mids"]

    def boundary_arclength(self) -> np.ndarray:
        """Arc-length coordinate of each boundary_loop node, starting at 0."""
        pts = self.nodes[self.boundary_loop]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def corner_mask(self) -> np.ndarray:
        """Boolean mask over boundary_loop marking the four rectangle corners."""
        a, b = self.rect
        p = self.nodes[self.boundary_loop]
        on_x = np.isclose(p[:, 0], 0.0) | np.isclose(p[:, 0], a)
        on_y = np.isclose(p[:, 1], 0.0) | np.isclose(p[:, 1], b)
        return on_x & on_y

    def with_nodes(self, nodes: np.ndarray) -> "Mesh":
        """Same connectivity with moved nodes (boundary nodes must not move)."""
        nodes = np.asarray(nodes, dtype=float)
        if nodes.shape != self.nodes.shape:
            raise MeshError("node array shape mismatch")
        bl = self.boundary_loop
        if not np.allclose(nodes[bl], self.nodes[bl], rtol=0.0, atol=1e-13):
            raise MeshError("moved mesh must keep its boundary nodes fixed")
        nodes = nodes.copy()
        nodes[bl] = self.nodes[bl]
        out = Mesh(nodes, self.triangles, self.boundary_loop, self.interior, self.rect, self.n)
        if np.any(out.triangle_areas <= 0):
            raise MeshError("moved mesh has inverted triangles")
        return out

    def check(self) -> None:
        """Raise ``MeshError`` if any structural invariant fails."""
        a, b = self.rect
        if np.any(self.triangle_areas <= 0):
            raise MeshError("non-positive triangle area")
        if abs(self.area - a * b) > 1e-12 * a * b:
            raise MeshError("triangles do not tile the rectangle")
        p = self.nodes
        tol = 1e-12 * max(a, b)
        on_bd = (
            (np.abs(p[:, 0]) < tol)
            | (np.abs(p[:, 0] - a) < tol)
            | (np.abs(p[:, 1]) < tol)
            | (np.abs(p[:, 1] - b) < tol)
        )
        if set(np.flatnonzero(on_bd)) != set(self.boundary_loop.tolist()):
            raise MeshError("boundary_loop does not match boundary nodes")
        edges = np.sort(
            np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]),
            axis=1,
        )
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        bd = {tuple(sorted(e)) for e in self.boundary_edges.tolist()}
        for e, c in zip(map(tuple, uniq.tolist()), counts):
            if c != (1 if e in bd else 2):
                raise MeshError(f"edge {e} shared by {c} triangles")
        if len(bd) != len(self.boundary_loop) or sum(counts == 1) != len(bd):
            raise MeshError("boundary loop does not traverse each boundary edge once")


def build_rect_mesh(a: float, b: float, n: int) -> Mesh:
    """Uniform ``n x n`` grid on ``[0, a] x [0, b]``, each cell cut along
    the diagonal from its lower-left to its upper-right corner."""
    if not (a > 0 and b > 0):
        raise MeshError(f"rectangle sides must be positive, got a={a}, b={b}")
    if int(n) != n or n < 1:
        raise MeshError(f"subdivision must be a positive integer, got {n}")
    n = int(n)
    xs = np.linspace(0.0, a, n + 1)
    ys = np.linspace(0.0, b, n + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    p00 = (j * (n + 1) + i).ravel()
    p10 = p00 + 1
    p01 = p00 + n + 1
    p11 = p01 + 1
    lower = np.column_stack([p00, p10, p11])
    upper = np.column_stack([p00, p11, p01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    k = np.arange(n)
    loop = np.concatenate([
        k,                              # bottom, left to right
        n + k * (n + 1),                # right, bottom to top
        n * (n + 1) + (n - k),          # top, right to left
        (n - k) * (n + 1),              # left, top to bottom
    ])
    interior = np.setdiff1d(np.arange(len(nodes)), loop)
    return Mesh(nodes, triangles, loop, interior, (float(a), float(b)), n)


def diameter(mesh: Mesh) -> float:
    """Euclidean diameter of the rectangle."""
    a, b = mesh.rect
    return math.hypot(a, b)


def outward_normal(mesh: Mesh, edge) -> np.ndarray:
    """Unit outward normal of a boundary edge given as a node-index pair."""
    i, j = (int(e) for e in edge)
    loop = mesh.boundary_loop
    pos = np.flatnonzero(loop == i)
    if pos.size:
        k = pos[0]
        m = len(loop)
        if loop[(k + 1) % m] == j:
            p, q = mesh.nodes[i], mesh.nodes[j]
        elif loop[(k - 1) % m] == j:
            p, q = mesh.nodes[j], mesh.nodes[i]
        else:
            p = None
        if p is not None:
            d = q - p
            return np.array([d[1], -d[0]]) / np.hypot(*d)
    raise MeshError(f"edge ({i}, {j}) is not a boundary edge")


def write_mesh_csv(mesh: Mesh, nodes_path, triangles_path) -> None:
    """Debug dump: ``id,x,y`` and ``id,n0,n1,n2`` tables."""
    with open(Path(nodes_path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y"])
        for k, (x, y) in enumerate(mesh.nodes):
            w.writerow([k, repr(float(x)), repr(float(y))])
    with open(Path(triangles_path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "n0", "n1", "n2"])
        for k, t in enumerate(mesh.triangles):
            w.writerow([k, *map(int, t)])
