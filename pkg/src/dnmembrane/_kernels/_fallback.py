"""Vectorized numpy implementations of the hot kernels."""
import numpy as np


def triangle_gradients(nodes, tris):
    """Areas and barycentric-coordinate gradients of every triangle."""
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    # opposite edge of vertex k runs from k+1 to k+2
    e = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)
    grads = np.empty((len(tris), 3, 2))
    grads[:, :, 0] = -e[:, :, 1] / (2.0 * area[:, None])
    grads[:, :, 1] = e[:, :, 0] / (2.0 * area[:, None])
    return area, grads


def assemble_triplets(nodes, tris, sig):
    """COO triplets of the P1 stiffness matrix for element-constant tensors.

    ``sig`` has shape (T, 3) holding (s11, s12, s22) per triangle.
    """
    area, g = triangle_gradients(nodes, tris)
    sg0 = sig[:, None, 0] * g[:, :, 0] + sig[:, None, 1] * g[:, :, 1]
    sg1 = sig[:, None, 1] * g[:, :, 0] + sig[:, None, 2] * g[:, :, 1]
    ke = area[:, None, None] * (
        g[:, :, None, 0] * sg0[:, None, :] + g[:, :, None, 1] * sg1[:, None, :]
    )
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return rows, cols, ke.ravel()


def hat_residual(nodes, tris, col1, col2, nnodes):
    """Per-node sums of ``|K| w_K . grad(hat)`` for two element-constant vector
    fields, and per-node support areas."""
    area, g = triangle_gradients(nodes, tris)
    r = np.zeros((nnodes, 2))
    supp = np.zeros(nnodes)
    for k in range(3):
        idx = tris[:, k]
        np.add.at(r[:, 0], idx, area * (col1[:, 0] * g[:, k, 0] + col1[:, 1] * g[:, k, 1]))
        np.add.at(r[:, 1], idx, area * (col2[:, 0] * g[:, k, 0] + col2[:, 1] * g[:, k, 1]))
        np.add.at(supp, idx, area)
    return r, supp


def _bump(x, t, c1, c2):
    b = x[:, 0] * x[:, 1] * (1.0 - x[:, 0]) * (1.0 - x[:, 1])
    return np.column_stack([x[:, 0] + t * c1 * b, x[:, 1] + t * c2 * b])


def bump_inverse(y, t, c1, c2, tol=1e-13, maxit=50):
    """Damped Newton inversion of ``x + t b(x) c`` seeded at ``y``.

    Returns the preimages and a per-point flag (1 converged, 0 not).
    """
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    x = y.copy()
    res = _bump(x, t, c1, c2) - y
    rn = np.hypot(res[:, 0], res[:, 1])
    active = rn > tol
    for _ in range(maxit):
        if not active.any():
            break
        xa = x[active]
        x1, x2 = xa[:, 0], xa[:, 1]
        gb1 = x2 * (1.0 - x2) * (1.0 - 2.0 * x1)
        gb2 = x1 * (1.0 - x1) * (1.0 - 2.0 * x2)
        j11 = 1.0 + t * c1 * gb1
        j12 = t * c1 * gb2
        j21 = t * c2 * gb1
        j22 = 1.0 + t * c2 * gb2
        det = j11 * j22 - j12 * j21
        ra = res[active]
        dx = np.column_stack([(j22 * ra[:, 0] - j12 * ra[:, 1]) / det,
                              (-j21 * ra[:, 0] + j11 * ra[:, 1]) / det])
        step = np.ones(len(xa))
        rna = rn[active]
        for _ in range(30):
            xn = xa - step[:, None] * dx
            rnew = _bump(xn, t, c1, c2) - y[active]
            nn = np.hypot(rnew[:, 0], rnew[:, 1])
            bad = nn >= rna
            if not bad.any():
                break
            step[bad] *= 0.5
        x[active] = xn
        res[active] = rnew
        rn[active] = nn
        active = rn > tol
    return x, (~active).astype(np.int8)
