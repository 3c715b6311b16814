"""Analytic test solutions for the coupled free-flow/subsurface convergence study.

Source terms and boundary data are derived symbolically so that the
analytic fields solve the continuous equations exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

T, X, Z = sp.symbols("t x1 x2", real=True)

LENGTH = 100.0
DEPTH = -20.0
T_END = 2e-4
SLOPE = 0.005
D_FREE = 0.001
D_SUB = 0.01
GRAVITY = 10.0


@dataclass(frozen=True)
class Fields:
    """Vectorised callables of the manufactured solution; all take (t, x1, x2) unless noted."""

    zeta_b: callable  # (x1)
    xi: callable  # (t, x1)
    h: callable  # (t, x1)
    u1: callable
    u2: callable
    q1: callable  # components of D q = −D ∇u¹
    q2: callable
    f: callable
    f_h: callable  # (t, x1)
    h_sub: callable
    q_sub1: callable  # q̃ = −∇h̃
    q_sub2: callable
    f_sub: callable
    g: float
    D: float
    D_sub: float


def _vectorize(expr, args):
    fn = sp.lambdify(args, expr, modules="numpy")

    def call(*vals):
        out = fn(*vals)
        shape = np.broadcast(*[np.asarray(v, dtype=float) for v in vals]).shape
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    return call


@lru_cache(maxsize=None)
def coupled_solution(g: float = GRAVITY, D: float = D_FREE, D_sub: float = D_SUB) -> Fields:
    zb = SLOPE * X
    xi = 5 + sp.Rational(3, 1000) * sp.sin(sp.Rational(8, 100) * X + T)
    y = sp.sin(X / 10 + T)
    u1 = y * (sp.cos(Z / 10) - sp.cos(zb / 10))
    v = -sp.diff(y, X) * (sp.sin(Z / 10) * 10 - sp.cos(zb / 10) * Z) - SLOPE / 10 * y * sp.sin(zb / 10) * Z
    eps = (
        -D_sub * sp.diff(xi, X)
        - D_sub / 10 * (SLOPE**2 + 1) * sp.cos(zb / 10)
        + sp.diff(y, X) * (sp.sin(zb / 10) * 10 - sp.cos(zb / 10) * zb)
        + SLOPE / 10 * y * sp.sin(zb / 10) * zb
    )
    u2 = v + eps
    h = xi - zb
    h_sub = xi + sp.sin(Z / 10) - sp.sin(zb / 10)

    q1 = -D * sp.diff(u1, X)
    q2 = -D * sp.diff(u1, Z)
    f = (
        sp.diff(u1, T)
        + sp.diff(u1 * u1, X)
        + sp.diff(u1 * u2, Z)
        + g * sp.diff(xi, X)
        + sp.diff(q1, X)
        + sp.diff(q2, Z)
    )
    depth_int = sp.integrate(u1, (Z, zb, xi))
    f_h = sp.diff(h, T) + sp.diff(depth_int, X)
    f_sub = sp.diff(h_sub, T) - D_sub * (sp.diff(h_sub, X, 2) + sp.diff(h_sub, Z, 2))

    txz = (T, X, Z)
    tx = (T, X)
    return Fields(
        zeta_b=_vectorize(zb, (X,)),
        xi=_vectorize(xi, tx),
        h=_vectorize(h, tx),
        u1=_vectorize(u1, txz),
        u2=_vectorize(u2, txz),
        q1=_vectorize(q1, txz),
        q2=_vectorize(q2, txz),
        f=_vectorize(f, txz),
        f_h=_vectorize(f_h, tx),
        h_sub=_vectorize(h_sub, txz),
        q_sub1=_vectorize(-sp.diff(h_sub, X), txz),
        q_sub2=_vectorize(-sp.diff(h_sub, Z), txz),
        f_sub=_vectorize(f_sub, txz),
        g=g,
        D=D,
        D_sub=D_sub,
    )


def isotropic(d: float):
    """Constant diffusion tensor d·I as a field callable."""

    def tensor(t, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        out = np.zeros(shape + (2, 2))
        out[..., 0, 0] = out[..., 1, 1] = d
        return out

    return tensor
