"""Doerfler marking and the solve-estimate-mark-refine loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dpg import solve_problem
from .fields import l2_field_error
from .mesh import bisect, h_max
from .postprocess import postprocess

log = logging.getLogger(__name__)


def doerfler_mark(eta, theta):
    """Smallest set M with sum_{T in M} eta_T^2 >= theta * sum_T eta_T^2.

    Greedy on the indicators sorted descending; equal indicators are taken in
    increasing element order.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.size == 0:
        raise ValueError("empty indicator list")
    if not 0 < theta <= 1:
        raise ValueError(f"bulk parameter must lie in (0, 1], got {theta}")
    order = np.lexsort((np.arange(eta.size), -eta))
    cums = np.cumsum(eta[order] ** 2)
    total = cums[-1]
    if total == 0:
        return set()
    n = int(np.searchsorted(cums, theta * total, side="left")) + 1
    return set(order[:n].tolist())


@dataclass
class AfemStep:
    step: int
    ndof: int
    h_max: float
    eta: float
    eta_T: np.ndarray = field(repr=False)
    n_marked: int
    err_u: Optional[float] = None
    err_post: Optional[float] = None
    mesh: object = field(default=None, repr=False)


def afem_loop(problem, k, j, theta=0.5, steps=10, with_post=False, mesh=None,
              solver="cholesky", tol=1e-10, threads=1):
    if steps < 1:
        raise ValueError("steps must be >= 1")
    m = problem.mesh(2) if mesh is None else mesh
    out = []
    for step in range(steps):
        gs, sol = solve_problem(m, problem, k, j, solver=solver, tol=tol, threads=threads)
        rec = AfemStep(step, gs.layout.n_dofs, h_max(m), sol.eta, sol.eta_T, 0, mesh=m)
        if problem.has_exact:
            rec.err_u = l2_field_error(m, sol.u, k + j, problem.exact_u)
        if with_post:
            up = postprocess(m, sol, k, problem.lame)
            if problem.has_exact:
                rec.err_post = l2_field_error(m, up, k + 1, problem.exact_u)
        last = step == steps - 1
        if not last:
            marked = doerfler_mark(sol.eta_T, theta)
            rec.n_marked = len(marked)
        out.append(rec)
        log.info("afem step %d: ndof=%d eta=%.4e marked=%d", step, rec.ndof, rec.eta, rec.n_marked)
        if not last:
            m = bisect(m, marked)
    return out
