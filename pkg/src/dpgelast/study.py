"""Convergence, locking and L-shape studies, EOCs and CSV output."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, fields

import numpy as np

from .adaptivity import afem_loop
from .dpg import solve_problem
from .fields import l2_field_error, l2_project
from .material import problem_locking_square, problem_lshape
from .mesh import h_max, uniform_refine
from .postprocess import postprocess

log = logging.getLogger(__name__)

NAN = float("nan")

CSV_COLUMNS = ("level", "ndof", "hmax", "err_u", "err_u_aug", "err_post", "err_proj",
               "err_gap", "eta", "eoc_u", "eoc_aug", "eoc_post", "eoc_gap")

# error column -> its EOC column
EOC_OF = {"err_u": "eoc_u", "err_u_aug": "eoc_aug", "err_post": "eoc_post", "err_gap": "eoc_gap"}


@dataclass
class StudyRecord:
    level: int
    ndof: int
    hmax: float
    err_u: float = NAN
    err_u_aug: float = NAN
    err_post: float = NAN
    err_proj: float = NAN
    err_gap: float = NAN
    eta: float = NAN
    eoc_u: float = NAN
    eoc_aug: float = NAN
    eoc_post: float = NAN
    eoc_gap: float = NAN


def eoc(e_prev, e_cur, h_prev, h_cur):
    """Observed order log(e_prev/e_cur) / log(h_prev/h_cur); NaN when undefined."""
    if not (e_prev > 0 and e_cur > 0 and h_prev > 0 and h_cur > 0) or h_prev == h_cur:
        return NAN
    return math.log(e_prev / e_cur) / math.log(h_prev / h_cur)


def eoc_ndof(e_prev, e_cur, n_prev, n_cur):
    """Order in terms of h ~ ndof^(-1/2): -2 log(e_cur/e_prev) / log(n_cur/n_prev)."""
    if not (e_prev > 0 and e_cur > 0 and n_prev > 0 and n_cur > 0) or n_prev == n_cur:
        return NAN
    return -2 * math.log(e_cur / e_prev) / math.log(n_cur / n_prev)


def fill_eocs(records):
    for prev, cur in zip(records, records[1:]):
        for err, col in EOC_OF.items():
            setattr(cur, col, eoc(getattr(prev, err), getattr(cur, err), prev.hmax, cur.hmax))
    return records


def run_convergence(problem, k, j, levels, with_post=False, n0=2, solver="cholesky",
                    tol=1e-10, threads=1):
    """Uniform refinement study starting from the problem's mesh with parameter ``n0``.

    ``err_u`` is the error of the requested (k, j) run; ``err_u_aug`` repeats it
    when j = 1.  Projection and gap errors use the L2 projection onto the
    displacement space P^{k+j}.
    """
    if not problem.has_exact:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    m = problem.mesh(n0)
    out = []
    for level in range(levels):
        gs, sol = solve_problem(m, problem, k, j, solver=solver, tol=tol, threads=threads)
        rec = StudyRecord(level, gs.layout.n_dofs, h_max(m), eta=sol.eta)
        deg = k + j
        rec.err_u = l2_field_error(m, sol.u, deg, problem.exact_u)
        if j == 1:
            rec.err_u_aug = rec.err_u
        proj = l2_project(problem.exact_u, deg, m)
        rec.err_proj = l2_field_error(m, proj, deg, problem.exact_u)
        rec.err_gap = l2_field_error(m, sol.u - proj, deg)
        if with_post:
            up = postprocess(m, sol, k, problem.lame)
            rec.err_post = l2_field_error(m, up, k + 1, problem.exact_u)
        out.append(rec)
        log.info("%s k=%d j=%d level %d: ndof=%d err_u=%.4e", problem.name, k, j, level,
                 rec.ndof, rec.err_u)
        if level < levels - 1:
            m = uniform_refine(m)
    return fill_eocs(out)


def run_locking(nu_list, E=1e5, k=2, j=0, levels=5, with_post=False, **kw):
    """Convergence study of the locking benchmark for every Poisson ratio."""
    return {nu: run_convergence(problem_locking_square(E, nu), k, j, levels, with_post, **kw)
            for nu in nu_list}


def locking_ratio_table(results, column="err_u"):
    """Per level: max over nu / min over nu of ``column``."""
    nus = list(results)
    nlev = min(len(results[nu]) for nu in nus)
    table = []
    for level in range(nlev):
        vals = np.array([getattr(results[nu][level], column) for nu in nus])
        table.append((level, float(vals.max() / vals.min())))
    return table


def loglog_slope(x, y, last=3):
    """Least-squares slope of log y against log x over the last ``last`` points."""
    x = np.log(np.asarray(x, dtype=float)[-last:])
    y = np.log(np.asarray(y, dtype=float)[-last:])
    return float(np.polyfit(x, y, 1)[0])


def run_lshape(mode="adaptive", theta=0.5, steps=10, k=1, j=0, with_post=False, E=1.0, nu=0.4,
               solver="cholesky", tol=1e-10, threads=1):
    """L-shape study; returns (records, slope of log eta against log ndof over the last 3 points).

    The final mesh is attached to the returned list as ``records.mesh``.
    """
    problem = problem_lshape(E, nu)
    if mode == "adaptive":
        steps_ = afem_loop(problem, k, j, theta, steps, with_post, solver=solver, tol=tol,
                           threads=threads)
        records = _Records(StudyRecord(s.step, s.ndof, s.h_max, eta=s.eta) for s in steps_)
        records.mesh = steps_[-1].mesh
    elif mode == "uniform":
        m = problem.mesh()
        records = _Records()
        for level in range(steps):
            gs, sol = solve_problem(m, problem, k, j, solver=solver, tol=tol, threads=threads)
            records.append(StudyRecord(level, gs.layout.n_dofs, h_max(m), eta=sol.eta))
            log.info("lshape uniform level %d: ndof=%d eta=%.4e", level, gs.layout.n_dofs, sol.eta)
            records.mesh = m
            if level < steps - 1:
                m = uniform_refine(m)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    slope = loglog_slope([r.ndof for r in records], [r.eta for r in records]) \
        if len(records) >= 2 else NAN
    return records, slope


class _Records(list):
    mesh = None


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or not math.isfinite(value):
        return ""
    return f"{value:.11e}"


def to_csv(records):
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    names = [f.name for f in fields(StudyRecord)]
    assert tuple(names) == CSV_COLUMNS
    for r in records:
        buf.write(",".join(_fmt(getattr(r, n)) for n in names) + "\n")
    return buf.getvalue()


def write_csv(records, path):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(to_csv(records))
