"""Hot inner loops: element assembly, hat-function residuals, and batched
Newton inversion of the bump map.

The compiled extension is used when it was built; otherwise the numpy
fallback is used. Set ``DNMEMBRANE_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("DNMEMBRANE_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback


def _prep(nodes, tris):
    return (np.ascontiguousarray(nodes, dtype=np.float64),
            np.ascontiguousarray(tris, dtype=np.int64))


def triangle_gradients(nodes, tris, impl=None):
    return (impl or _impl).triangle_gradients(*_prep(nodes, tris))


def assemble_triplets(nodes, tris, sig, impl=None):
    nodes, tris = _prep(nodes, tris)
    return (impl or _impl).assemble_triplets(nodes, tris, np.ascontiguousarray(sig, dtype=np.float64))


def hat_residual(nodes, tris, col1, col2, nnodes, impl=None):
    nodes, tris = _prep(nodes, tris)
    return (impl or _impl).hat_residual(
        nodes, tris,
        np.ascontiguousarray(col1, dtype=np.float64),
        np.ascontiguousarray(col2, dtype=np.float64),
        int(nnodes),
    )


def bump_inverse(y, t, c1, c2, tol=1e-13, maxit=50, impl=None):
    return (impl or _impl).bump_inverse(np.asarray(y, dtype=np.float64), float(t), float(c1), float(c2),
                                        tol, maxit)


def implementations():
    """Available backends by name, for benchmarks and cross-checks."""
    out = {"python": _fallback}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
