"""Orthonormal Legendre bases on [0, 1] and the unit square, Gauss rules and
reference edge maps.

Indices follow the 1-based convention used throughout the package: the 1D
basis functions are ``phi_1 .. phi_{p+1}`` and the 2D functions
``phi_1 .. phi_{(p+1)^2}``.  Array-valued evaluators return 0-based columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

MAX_DEGREE = 4


def legendre_eval(m: int, x):
    """Value of the m-th orthonormal shifted Legendre polynomial on [0, 1]."""
    x = np.asarray(x, dtype=float)
    if m == 1:
        return np.ones_like(x)
    if m == 2:
        return np.sqrt(3.0) * (1.0 - 2.0 * x)
    if m == 3:
        return np.sqrt(5.0) * ((6.0 * x - 6.0) * x + 1.0)
    if m == 4:
        return np.sqrt(7.0) * (((20.0 * x - 30.0) * x + 12.0) * x - 1.0)
    if m < 1:
        raise ValueError(f"basis index must be >= 1, got {m}")
    return np.sqrt(2.0 * m - 1.0) * _shifted(m - 1)(x)


def legendre_grad(m: int, x):
    """Derivative of :func:`legendre_eval` with respect to x."""
    x = np.asarray(x, dtype=float)
    if m == 1:
        return np.zeros_like(x)
    if m == 2:
        return np.full_like(x, -2.0 * np.sqrt(3.0))
    if m == 3:
        return np.sqrt(5.0) * (12.0 * x - 6.0)
    if m == 4:
        return np.sqrt(7.0) * ((60.0 * x - 60.0) * x + 12.0)
    if m < 1:
        raise ValueError(f"basis index must be >= 1, got {m}")
    return np.sqrt(2.0 * m - 1.0) * _shifted(m - 1).deriv()(x)


@lru_cache(maxsize=None)
def _shifted(n: int):
    # P_n(2x - 1) as a polynomial series on [0, 1]
    return npleg.Legendre.basis(n, domain=[0.0, 1.0])


def index_map(m: int, n: int) -> int:
    """2D basis index of the product phi_m(x1) * phi_n(x2)."""
    k = max(m, n)
    return (k - 1) ** 2 + k - m + n


@lru_cache(maxsize=None)
def index_pairs(p: int) -> np.ndarray:
    """Array of shape (N, 2) with the 1D indices (m, n) of each 2D basis function."""
    nb = p + 1
    pairs = np.zeros(((p + 1) ** 2, 2), dtype=int)
    for m in range(1, nb + 1):
        for n in range(1, nb + 1):
            pairs[index_map(m, n) - 1] = (m, n)
    pairs.setflags(write=False)
    return pairs


def basis2d_eval(i: int, xhat, p: int = MAX_DEGREE):
    m, n = index_pairs(p)[i - 1]
    xhat = np.asarray(xhat, dtype=float)
    return legendre_eval(m, xhat[..., 0]) * legendre_eval(n, xhat[..., 1])


def basis2d_grad(i: int, xhat, p: int = MAX_DEGREE):
    m, n = index_pairs(p)[i - 1]
    xhat = np.asarray(xhat, dtype=float)
    x1, x2 = xhat[..., 0], xhat[..., 1]
    return np.stack(
        [legendre_grad(m, x1) * legendre_eval(n, x2), legendre_eval(m, x1) * legendre_grad(n, x2)],
        axis=-1,
    )


@dataclass(frozen=True)
class Basis1D:
    p: int

    def __post_init__(self):
        if not 0 <= self.p <= MAX_DEGREE:
            raise ValueError(f"polynomial degree must be in 0..{MAX_DEGREE}, got {self.p}")

    @property
    def size(self) -> int:
        return self.p + 1

    def eval(self, x) -> np.ndarray:
        """Values at points x, shape x.shape + (N̄,)."""
        x = np.asarray(x, dtype=float)
        return np.stack([legendre_eval(m, x) for m in range(1, self.size + 1)], axis=-1)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([legendre_grad(m, x) for m in range(1, self.size + 1)], axis=-1)


@dataclass(frozen=True)
class Basis2D:
    p: int
    line: Basis1D = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "line", Basis1D(self.p))

    @property
    def size(self) -> int:
        return (self.p + 1) ** 2

    @property
    def pairs(self) -> np.ndarray:
        return index_pairs(self.p)

    def eval(self, xhat) -> np.ndarray:
        """Values at points xhat (..., 2), shape (..., N)."""
        xhat = np.asarray(xhat, dtype=float)
        v1 = self.line.eval(xhat[..., 0])
        v2 = self.line.eval(xhat[..., 1])
        m, n = self.pairs[:, 0] - 1, self.pairs[:, 1] - 1
        return v1[..., m] * v2[..., n]

    def grad(self, xhat) -> np.ndarray:
        """Reference gradients at xhat, shape (..., N, 2)."""
        xhat = np.asarray(xhat, dtype=float)
        v1, d1 = self.line.eval(xhat[..., 0]), self.line.grad(xhat[..., 0])
        v2, d2 = self.line.eval(xhat[..., 1]), self.line.grad(xhat[..., 1])
        m, n = self.pairs[:, 0] - 1, self.pairs[:, 1] - 1
        return np.stack([d1[..., m] * v2[..., n], v1[..., m] * d2[..., n]], axis=-1)


@dataclass(frozen=True)
class QuadRule1D:
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class QuadRule2D:
    points: np.ndarray  # (R*R, 2)
    weights: np.ndarray
    line: QuadRule1D

    @property
    def size(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_rule(R: int) -> QuadRule1D:
    """R-point Gauss–Legendre rule on [0, 1]; exact for degree <= 2R - 1."""
    if R < 1:
        raise ValueError("quadrature needs at least one point")
    x, w = npleg.leggauss(R)
    pts, wts = 0.5 * (x + 1.0), 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule1D(pts, wts)


@lru_cache(maxsize=None)
def tensor_rule(R: int) -> QuadRule2D:
    line = gauss_rule(R)
    # first coordinate runs fastest
    x2, x1 = np.meshgrid(line.points, line.points, indexing="ij")
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    wts = np.outer(line.weights, line.weights).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule2D(pts, wts, line)


def default_order(p: int) -> int:
    """Points per direction for assembly; exact for triple products with a linear Jacobian factor."""
    return max(p + 2, -(-(3 * p + 2) // 2))


def error_order(p: int) -> int:
    return p + 4


OPPOSITE_EDGE = {1: 2, 2: 1, 3: 4, 4: 3}


def opposite_edge_index(n: int) -> int:
    try:
        return OPPOSITE_EDGE[n]
    except KeyError:
        raise ValueError(f"edge index must be in 1..4, got {n}") from None


def gamma_map(n: int, s):
    """Reference edge parametrisation: s in [0, 1] to a point on edge n of the unit square."""
    s = np.asarray(s, dtype=float)
    zero, one = np.zeros_like(s), np.ones_like(s)
    if n == 1:
        return np.stack([s, zero], axis=-1)
    if n == 2:
        return np.stack([s, one], axis=-1)
    if n == 3:
        return np.stack([one, s], axis=-1)
    if n == 4:
        return np.stack([zero, s], axis=-1)
    raise ValueError(f"edge index must be in 1..4, got {n}")


def theta_map(n: int, xhat):
    """Map a point on edge n of the unit square to the matching point on the opposite edge."""
    xhat = np.array(xhat, dtype=float)
    if n == 1:
        xhat[..., 1] = 1.0
    elif n == 2:
        xhat[..., 1] = 0.0
    elif n == 3:
        xhat[..., 0] = 0.0
    elif n == 4:
        xhat[..., 0] = 1.0
    else:
        raise ValueError(f"edge index must be in 1..4, got {n}")
    return xhat
