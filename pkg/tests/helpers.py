"""Shared generators and independent oracles for the test suite.

The oracles here are written from closed forms, not through the package's
own sampling code, so a bug in one does not hide in the other.
"""
import numpy as np

from dnmembrane.tensor_field import AiryField, AiryPotential, AiryTerm, ConstantField, DiagonalProfileField

PI = np.pi


def airy_a(domain=(1.0, 1.0)):
    """phi = (x^2 + y^2)/2 + 0.1 sin(pi x) sin(pi y)."""
    return AiryField(AiryPotential(1.0, 0.0, 1.0, (AiryTerm(0.1, 1, 1),)), domain)


def airy_a_tensor(x, y):
    s, c = np.sin(PI * x) * np.sin(PI * y), np.cos(PI * x) * np.cos(PI * y)
    k = 0.1 * PI**2
    # cofactor of the Hessian: (phi_yy, -phi_xy, phi_xx)
    return np.stack([1 - k * s, -k * c, 1 - k * s], axis=-1)


def airy_b(domain=(1.0, 1.0)):
    """phi = 0.75 x^2 + 0.5 y^2 + 0.02 sin(1.5 pi x + 0.3) cos(1.3 pi y + 0.7)."""
    return AiryField(AiryPotential(1.5, 0.0, 1.0, (AiryTerm(0.02, 1.5, 1.3, "sin", "cos", 0.3, 0.7),)), domain)


def airy_b_tensor(x, y):
    ax, ay = 1.5 * PI * x + 0.3, 1.3 * PI * y + 0.7
    kx, ky = 1.5 * PI, 1.3 * PI
    pxx = 1.5 - 0.02 * kx**2 * np.sin(ax) * np.cos(ay)
    pyy = 1.0 - 0.02 * ky**2 * np.sin(ax) * np.cos(ay)
    pxy = -0.02 * kx * ky * np.cos(ax) * np.sin(ay)
    return np.stack([pyy, -pxy, pxx], axis=-1)


def identity():
    return ConstantField(1.0, 0.0, 1.0)


def const_aniso():
    return ConstantField(2.0, 0.5, 3.0)


def network_sine():
    return DiagonalProfileField(lambda y: 1 + 0.5 * np.sin(2 * PI * y), lambda x: np.full(np.shape(x), 2.0))


def network_sine_tensor(x, y):
    x, y = np.broadcast_arrays(x, y)
    return np.stack([1 + 0.5 * np.sin(2 * PI * y), np.zeros_like(x), np.full(x.shape, 2.0)], axis=-1)


def constant_tensor(s11, s12, s22):
    return lambda x, y: np.stack(np.broadcast_arrays(s11 + 0 * x, s12 + 0 * x, s22 + 0 * y), axis=-1)


def midpoint_mean(tensor_fn, rect=(1.0, 1.0), N=512):
    """Mean of a packed tensor function on an N x N midpoint grid."""
    a, b = rect
    X, Y = np.meshgrid((np.arange(N) + 0.5) * a / N, (np.arange(N) + 0.5) * b / N)
    s = tensor_fn(X, Y).reshape(-1, 3).mean(axis=0)
    return np.array([[s[0], s[1]], [s[1], s[2]]])


def loglog_slope(h, e):
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])
