"""Interior 7-point triangle rule (degree 5)."""
import numpy as np

from .mesh import Mesh

_a1 = (6.0 - np.sqrt(15.0)) / 21.0
_a2 = (6.0 + np.sqrt(15.0)) / 21.0
_w1 = (155.0 - np.sqrt(15.0)) / 1200.0
_w2 = (155.0 + np.sqrt(15.0)) / 1200.0

BARYCENTRIC_7 = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _a1, 1 - 2 * _a1],
    [_a1, 1 - 2 * _a1, _a1],
    [1 - 2 * _a1, _a1, _a1],
    [_a2, _a2, 1 - 2 * _a2],
    [_a2, 1 - 2 * _a2, _a2],
    [1 - 2 * _a2, _a2, _a2],
])
WEIGHTS_7 = np.array([9 / 40, _w1, _w1, _w1, _w2, _w2, _w2])


def triangle_rule(mesh: Mesh):
    """Quadrature points (T, 7, 2) and absolute weights (T, 7)."""
    p = mesh.nodes[mesh.triangles]
    pts = np.einsum("qk,tkd->tqd", BARYCENTRIC_7, p)
    return pts, mesh.triangle_areas[:, None] * WEIGHTS_7[None]
