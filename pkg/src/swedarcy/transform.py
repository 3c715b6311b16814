"""Reference-to-physical maps of trapezoidal elements.

For vertices a1..a4 (bottom-left, bottom-right, top-right, top-left) with
vertical side edges the map is bilinear and its Jacobian splits as
``J(x̂) = J1 + J2 * x̂1 + J3 * x̂2`` with ``det J = det_const + det_lin * x̂1``.
All routines accept a single element (vertices of shape (4, 2)) or a batch
(shape (K, 4, 2)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Element with non-positive Jacobian determinant or non-vertical side edges."""


@dataclass(frozen=True, eq=False)
class ElementMapping:
    vertices: np.ndarray  # (..., 4, 2)
    J1: np.ndarray  # (..., 2, 2)
    J2: np.ndarray
    J3: np.ndarray
    det_const: np.ndarray  # (...)
    det_lin: np.ndarray

    # per-element scalars used by the split gradient rule
    @property
    def width(self):
        return self.J1[..., 0, 0]

    @property
    def left_height(self):
        return self.J1[..., 1, 1]

    @property
    def bottom_rise(self):
        return self.J1[..., 1, 0]

    @property
    def height_change(self):
        return self.J2[..., 1, 1]


def mapping_from_vertices(vertices, check: bool = True) -> ElementMapping:
    a = np.asarray(vertices, dtype=float)
    a1, a2, a3, a4 = a[..., 0, :], a[..., 1, :], a[..., 2, :], a[..., 3, :]
    if check and (
        not np.allclose(a1[..., 0], a4[..., 0], rtol=0, atol=1e-12)
        or not np.allclose(a2[..., 0], a3[..., 0], rtol=0, atol=1e-12)
    ):
        raise GeometryError("side edges of a trapezoidal element must be vertical")
    w = a2[..., 0] - a1[..., 0]
    b = a2[..., 1] - a1[..., 1]
    hl = a4[..., 1] - a1[..., 1]
    c = (a3[..., 1] - a2[..., 1]) - hl
    zero = np.zeros_like(w)
    J1 = np.stack([np.stack([w, zero], -1), np.stack([b, hl], -1)], -2)
    J2 = np.stack([np.stack([zero, zero], -1), np.stack([zero, c], -1)], -2)
    J3 = np.stack([np.stack([zero, zero], -1), np.stack([c, zero], -1)], -2)
    det_const, det_lin = w * hl, w * c
    if check and (np.any(det_const <= 0) or np.any(det_const + det_lin <= 0)):
        raise GeometryError("element mapping has non-positive Jacobian determinant")
    return ElementMapping(a, J1, J2, J3, det_const, det_lin)


def map_point(F: ElementMapping, xhat):
    """F(x̂) for points x̂ of shape (Q, 2); returns (..., Q, 2)."""
    xhat = np.asarray(xhat, dtype=float)
    a1 = F.vertices[..., 0, :]
    a2 = F.vertices[..., 1, :]
    s, t = xhat[..., 0], xhat[..., 1]
    base = a1[..., None, :] + (a2 - a1)[..., None, :] * s[..., None]
    height = F.left_height[..., None] + F.height_change[..., None] * s
    x2 = base[..., 1] + height * t
    return np.stack([base[..., 0], x2], axis=-1)


def jacobian_at(F: ElementMapping, xhat):
    xhat = np.asarray(xhat, dtype=float)
    s, t = xhat[..., 0], xhat[..., 1]
    return F.J1[..., None, :, :] + F.J2[..., None, :, :] * s[..., None, None] + F.J3[..., None, :, :] * t[..., None, None]


def det_at(F: ElementMapping, xhat):
    xhat = np.asarray(xhat, dtype=float)
    return F.det_const[..., None] + F.det_lin[..., None] * xhat[..., 0]


def physical_gradient(F: ElementMapping, ref_grad, xhat):
    """Physical gradient from reference gradients.

    ref_grad has shape (..., Q, 2) or (..., Q, N, 2) matching the Q points in xhat.
    """
    ref_grad = np.asarray(ref_grad, dtype=float)
    J = jacobian_at(F, xhat)  # (..., Q, 2, 2)
    det = det_at(F, xhat)
    extra = ref_grad.ndim - (J.ndim - 1)
    for _ in range(extra):
        J = J[..., None, :, :]
        det = det[..., None]
    g1, g2 = ref_grad[..., 0], ref_grad[..., 1]
    d1 = (J[..., 1, 1] * g1 - J[..., 1, 0] * g2) / det
    d2 = (J[..., 0, 0] * g2 - J[..., 0, 1] * g1) / det
    return np.stack([d1, d2], axis=-1)
