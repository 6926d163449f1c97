"""Isotropic material law and the benchmark problems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import l_shape_mesh, unit_square_mesh

PI = np.pi


@dataclass(frozen=True)
class LameParams:
    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")

    @property
    def trace_coefficient(self):
        # lambda / (2 mu (2 mu + 2 lambda)); bounded by 1/(4 mu) as lambda grows
        return self.lam / (2 * self.mu * (2 * self.mu + 2 * self.lam))


def lame_from_E_nu(E, nu):
    if not E > 0:
        raise ValueError("E must be positive")
    if not 0 <= nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    lam = E * nu / ((1 - 2 * nu) * (1 + nu))
    mu = E / (2 * (1 + nu))
    return LameParams(lam, mu)


def sym(tau):
    return 0.5 * (tau + np.swapaxes(tau, -1, -2))


def skew(tau):
    return 0.5 * (tau - np.swapaxes(tau, -1, -2))


def trace(tau):
    return tau[..., 0, 0] + tau[..., 1, 1]


def compliance_apply(tau, p):
    """A(sym tau) + as(tau); works on stacks of 2x2 matrices."""
    tau = np.asarray(tau, dtype=float)
    s = sym(tau)
    out = s / (2 * p.mu) - p.trace_coefficient * trace(s)[..., None, None] * np.eye(2)
    return out + skew(tau)


def stiffness_apply(eps, p):
    eps = sym(np.asarray(eps, dtype=float))
    return 2 * p.mu * eps + p.lam * trace(eps)[..., None, None] * np.eye(2)


@dataclass(frozen=True)
class Problem:
    """Benchmark data.  Vector fields map (x, y) arrays to shape (..., 2)."""

    name: str
    mesh: Callable
    lame: LameParams
    f: Callable
    exact_u: Optional[Callable] = None
    exact_grad_u: Optional[Callable] = None
    dirichlet: Optional[Callable] = None  # g_D, zero if None
    notes: dict = field(default_factory=dict)

    def exact_sigma(self, x, y):
        if self.exact_grad_u is None:
            return None
        return stiffness_apply(self.exact_grad_u(x, y), self.lame)

    @property
    def has_exact(self):
        return self.exact_u is not None


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _body_force(p, hess):
    """-div C eps(u) = -(mu lap u + (lam + mu) grad div u) from the Hessians of u."""
    def f(x, y):
        (u1xx, u1xy, u1yy), (u2xx, u2xy, u2yy) = hess(x, y)
        lap = _stack(u1xx + u1yy, u2xx + u2yy)
        graddiv = _stack(u1xx + u2xy, u1xy + u2yy)
        return -(p.mu * lap + (p.lam + p.mu) * graddiv)
    return f


def problem_smooth_square(p=None):
    p = LameParams(1.0, 1.0) if p is None else p

    def u(x, y):
        s = np.sin(PI * x) * np.sin(PI * y)
        return _stack(s, s)

    def grad(x, y):
        sx = PI * np.cos(PI * x) * np.sin(PI * y)
        sy = PI * np.sin(PI * x) * np.cos(PI * y)
        g = _stack(sx, sy)
        return np.stack([g, g], axis=-2)

    def hess(x, y):
        s = np.sin(PI * x) * np.sin(PI * y)
        sxy = PI**2 * np.cos(PI * x) * np.cos(PI * y)
        h = (-PI**2 * s, sxy, -PI**2 * s)
        return h, h

    return Problem("smooth-square", unit_square_mesh, p, _body_force(p, hess), u, grad)


def problem_locking_square(E=1e5, nu=0.3):
    p = lame_from_E_nu(E, nu)
    mu = p.mu

    # the divergence-free field whose load is the closed form below
    def u(x, y):
        sx, cx = np.sin(PI * x), np.cos(PI * x)
        sy, cy = np.sin(PI * y), np.cos(PI * y)
        return _stack(-PI * cy * sx**2 * sy, PI * cx * sx * sy**2)

    def grad(x, y):
        sx, cx = np.sin(PI * x), np.cos(PI * x)
        sy, cy = np.sin(PI * y), np.cos(PI * y)
        u1x = -PI**2 * cy * sy * 2 * sx * cx
        u1y = -PI**2 * sx**2 * (cy**2 - sy**2)
        u2x = PI**2 * sy**2 * (cx**2 - sx**2)
        u2y = PI**2 * cx * sx * 2 * sy * cy
        return np.stack([_stack(u1x, u1y), _stack(u2x, u2y)], axis=-2)

    def f(x, y):
        fx = 2 * PI**3 * mu * (2 * np.cos(2 * PI * x) - 1) * np.sin(PI * y) * np.cos(PI * y)
        fy = 2 * PI**3 * mu * (1 - 2 * np.cos(2 * PI * y)) * np.sin(PI * x) * np.cos(PI * x)
        return _stack(fx, fy)

    return Problem("locking-square", unit_square_mesh, p, f, u, grad,
                   notes={"E": E, "nu": nu})


def problem_lshape(E=1.0, nu=0.4):
    p = lame_from_E_nu(E, nu)

    def f(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        inside = (x * y >= 0) & (np.maximum(np.abs(x), np.abs(y)) <= 0.5)
        return _stack(np.where(inside, 1.0, 0.0), np.zeros_like(x))

    return Problem("lshape", lambda *_: l_shape_mesh(), p, f, notes={"E": E, "nu": nu})


PROBLEMS = {
    "smooth-square": problem_smooth_square,
    "locking-square": problem_locking_square,
    "lshape": problem_lshape,
}


def get_problem(name, **kwargs):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**kwargs)
