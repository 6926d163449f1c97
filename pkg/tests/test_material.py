import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpgelast.material import (LameParams, compliance_apply, get_problem, lame_from_E_nu,
                               problem_locking_square, problem_lshape, problem_smooth_square,
                               skew, stiffness_apply, sym)

UNIT = LameParams(1.0, 1.0)


def test_compliance_examples():
    assert np.allclose(compliance_apply(np.eye(2), UNIT), 0.25 * np.eye(2))
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.allclose(compliance_apply(J, UNIT), J)
    assert np.allclose(compliance_apply(np.diag([3.0, 1.0]), UNIT), np.diag([1.0, 0.0]))


def test_stiffness_examples():
    assert np.allclose(stiffness_apply(np.diag([1.0, 0.0]), UNIT), np.diag([3.0, 1.0]))
    assert np.allclose(stiffness_apply(np.zeros((2, 2)), UNIT), 0)


def test_lame_conversion():
    p = lame_from_E_nu(1e5, 0.3)
    assert p.mu == pytest.approx(1e5 / 2.6, rel=1e-14)
    assert p.lam == pytest.approx(3e4 / 0.52, rel=1e-14)
    assert p.mu == pytest.approx(3.846153846e4, rel=1e-9)
    assert p.lam == pytest.approx(5.769230769e4, rel=1e-9)
    p0 = lame_from_E_nu(7.0, 0.0)
    assert p0.lam == 0 and p0.mu == 3.5
    lams = [lame_from_E_nu(1e5, nu).lam for nu in (0.3, 0.4, 0.49, 0.499, 0.4999)]
    assert all(a < b for a, b in zip(lams, lams[1:]))


@pytest.mark.parametrize("E, nu", [(1.0, 0.5), (1.0, 0.7), (0.0, 0.3), (1.0, -0.1)])
def test_lame_rejects(E, nu):
    with pytest.raises(ValueError):
        lame_from_E_nu(E, nu)


def test_huge_lambda_compliance():
    p = LameParams(1e12, 1.0)
    assert p.trace_coefficient == pytest.approx(0.25, rel=1e-11)
    out = compliance_apply(np.eye(2), p)
    assert np.all(np.isfinite(out))
    # A I = (1/(2 mu) - 2 c) I -> 0 as lambda -> infinity
    assert np.allclose(out, 0, atol=1e-11)


@settings(max_examples=100, deadline=None)
@given(lam=st.floats(0, 100), mu=st.floats(0.1, 10), seed=st.integers(0, 2**32 - 1))
def test_compliance_inverts_stiffness(lam, mu, seed):
    p = LameParams(lam, mu)
    e = sym(np.random.default_rng(seed).standard_normal((2, 2)))
    assert np.abs(compliance_apply(stiffness_apply(e, p), p) - e).max() <= 1e-12 * np.abs(e).max()


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0, 1e12), mu=st.floats(1e-3, 1e6), seed=st.integers(0, 2**32 - 1))
def test_compliance_inverts_stiffness_stiff(lam, mu, seed):
    # the trace part cancels, losing about log10(lam / mu) digits
    p = LameParams(lam, mu)
    e = sym(np.random.default_rng(seed).standard_normal((2, 2)))
    tol = 1e-14 * (1 + lam / mu) + 1e-13
    assert np.abs(compliance_apply(stiffness_apply(e, p), p) - e).max() <= tol * np.abs(e).max()


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0, 1e4), mu=st.floats(1e-2, 1e4), seed=st.integers(0, 2**32 - 1))
def test_compliance_splits_sym_and_skew(lam, mu, seed):
    p = LameParams(lam, mu)
    t = np.random.default_rng(seed).standard_normal((2, 2))
    At = compliance_apply(t, p)
    assert np.allclose(sym(At), compliance_apply(sym(t), p), atol=1e-12)
    assert np.allclose(skew(At), skew(t), atol=1e-12)


def fd_divergence(sigma, x, y, h=1e-5):
    """Central-difference divergence of a matrix field, row-wise."""
    sx = (sigma(x + h, y) - sigma(x - h, y)) / (2 * h)
    sy = (sigma(x, y + h) - sigma(x, y - h)) / (2 * h)
    return sx[..., :, 0] + sy[..., :, 1]


def fd_grad(u, x, y, h=1e-6):
    gx = (u(x + h, y) - u(x - h, y)) / (2 * h)
    gy = (u(x, y + h) - u(x, y - h)) / (2 * h)
    return np.stack([gx, gy], axis=-1)


PROBLEMS = [problem_smooth_square(), problem_smooth_square(LameParams(3.0, 0.5)),
            problem_locking_square(1e5, 0.3), problem_locking_square(1e5, 0.4999)]


@pytest.mark.parametrize("problem", PROBLEMS, ids=lambda p: f"{p.name}-{p.lame.lam:.3g}")
def test_pde_residual(problem):
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0.05, 0.95, (2, 50))
    # the analytic gradient agrees with finite differences of u
    assert np.allclose(problem.exact_grad_u(x, y), fd_grad(problem.exact_u, x, y), atol=1e-7)
    f = problem.f(x, y)
    res = -fd_divergence(problem.exact_sigma, x, y) - f
    scale = max(1.0, np.abs(f).max())
    assert np.abs(res).max() <= 1e-7 * scale


def test_smooth_square_values():
    p = problem_smooth_square()
    assert np.allclose(p.exact_u(0.5, 0.5), [1, 1])
    t = np.linspace(0, 1, 17)
    for x, y in ((t, 0 * t), (t, 0 * t + 1), (0 * t, t), (0 * t + 1, t)):
        assert np.allclose(p.exact_u(x, y), 0, atol=1e-15)


def test_locking_square():
    p = problem_locking_square(1e5, 0.3)
    rng = np.random.default_rng(2)
    x, y = rng.random((2, 50))
    g = p.exact_grad_u(x, y)
    assert np.abs(g[..., 0, 0] + g[..., 1, 1]).max() <= 1e-10
    t = np.linspace(0, 1, 17)
    for bx, by in ((t, 0 * t), (t, 0 * t + 1), (0 * t, t), (0 * t + 1, t)):
        assert np.allclose(p.exact_u(bx, by), 0, atol=1e-14)
    mu = 1e5 / 2.6
    pi = np.pi
    fx = 2 * pi**3 * mu * (2 * np.cos(pi / 2) - 1) * np.sin(pi / 4) * np.cos(pi / 4)
    fy = 2 * pi**3 * mu * (1 - 2 * np.cos(pi / 2)) * np.sin(pi / 4) * np.cos(pi / 4)
    assert np.allclose(p.f(0.25, 0.25), [fx, fy], rtol=1e-14)
    # the load depends on mu only
    q = problem_locking_square(1e5, 0.4999)
    scale = lame_from_E_nu(1e5, 0.4999).mu / mu
    assert np.allclose(q.f(x, y), scale * p.f(x, y), rtol=1e-13)


def test_lshape_load():
    p = problem_lshape()
    assert np.allclose(p.f(0.25, 0.25), [1, 0])
    assert np.allclose(p.f(-0.25, 0.25), [0, 0])
    assert np.allclose(p.f(0.75, 0.25), [0, 0])
    assert np.allclose(p.f(-0.3, -0.4), [1, 0])
    assert not p.has_exact


def test_registry():
    assert get_problem("smooth-square").name == "smooth-square"
    assert get_problem("locking-square", nu=0.49).lame == lame_from_E_nu(1e5, 0.49)
    with pytest.raises(KeyError):
        get_problem("nope")
