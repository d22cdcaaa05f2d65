import numpy as np
import pytest

from penbar.bench.problems import make_instance
from penbar.model import (
    EQUALITY,
    LOWER,
    TWO_SIDED,
    UPPER,
    EvaluationError,
    ProblemSpec,
    Subproblem,
    multipliers,
    split_equalities,
    subproblem_eval,
)
from penbar.prox import Zero


def identity_problem(lower, upper, n=1):
    lower, upper = np.atleast_1d(lower), np.atleast_1d(upper)
    return ProblemSpec(
        n=n,
        smooth=lambda x: (0.0, np.zeros(n)),
        g=Zero(),
        cons=lambda x: np.array(x, dtype=float),
        jac_t=lambda x, v: np.asarray(v, dtype=float),
        lower=lower,
        upper=upper,
    )


def test_row_classification():
    p = identity_problem([-np.inf, 0, 0, 1], [0, np.inf, 0, 2], n=4)
    assert list(p.kinds) == [UPPER, LOWER, EQUALITY, TWO_SIDED]
    assert p.m == 3 and p.m_eq == 1
    for lo, up in (([1.0], [0.0]), ([-np.inf], [-np.inf]), ([-np.inf], [np.inf])):
        with pytest.raises(ValueError):
            identity_problem(lo, up)


def test_gradient_weight_examples():
    p = identity_problem(-np.inf, 0.0)
    sp = Subproblem(p, "inverse", 1.0, 1.0)
    _, g = subproblem_eval(sp, np.array([-2.0]))
    assert g[0] == pytest.approx(0.25)
    _, g = subproblem_eval(sp, np.array([5.0]))
    assert g[0] == pytest.approx(1.0)
    pe = identity_problem(0.0, 0.0)
    _, g = Subproblem(pe, "inverse", 1.0, 1.0).eval(np.array([0.0]))
    assert g[0] == pytest.approx(0.0, abs=1e-14)
    assert sp.n_evals == 2


def test_multiplier_examples():
    p = identity_problem(-np.inf, 0.0)
    sp = Subproblem(p, "inverse", 1.0, 1.0)
    assert multipliers(sp, np.array([-0.5]))[0][0] == pytest.approx(1.0)
    assert multipliers(sp, np.array([-10.0]))[0][0] == pytest.approx(0.01)
    pe = identity_problem(0.0, 0.0)
    y, y_eq = Subproblem(pe, "inverse", 1.0, 1.0).multipliers(np.array([0.0]))
    assert y.size == 0 and y_eq[0] == pytest.approx(0.0, abs=1e-14)
    # lower rows report a nonnegative multiplier; equalities keep their sign
    pl = identity_problem([0.0, 0.0], [np.inf, 0.0], n=2)
    y, y_eq = Subproblem(pl, "inverse", 1.0, 0.5).multipliers(np.array([-1.0, -3.0]))
    assert y[0] > 0 and y_eq[0] < 0


def test_merge_split_roundtrip():
    p = identity_problem([-np.inf, 0, 0, 1], [0, np.inf, 0, 2], n=4)
    w = np.array([0.3, -0.2, -1.5, 0.7])
    y, y_eq = p.split_multipliers(w)
    np.testing.assert_allclose(p.merge_multipliers(y, y_eq), w)


def test_complementarity_two_sided():
    p = identity_problem([1.0], [2.0])
    # active upper side with positive multiplier: complementarity 0
    assert p.complementarity(np.array([2.0]), np.array([0.5])) == 0.0
    # positive multiplier while strictly inside: min(y, u - c)
    assert p.complementarity(np.array([1.5]), np.array([0.3])) == pytest.approx(0.3)
    assert p.complementarity(np.array([1.2]), np.array([-0.1])) == pytest.approx(0.1)
    assert p.violation(np.array([2.5])) == pytest.approx(0.5)
    assert p.violation(np.array([0.0])) == pytest.approx(1.0)


def test_nonfinite_raises():
    p = identity_problem(-np.inf, 0.0)
    p.smooth = lambda x: (np.inf, np.zeros(1))
    with pytest.raises(EvaluationError):
        Subproblem(p, "inverse", 1.0, 1.0).eval(np.array([0.0]))
    with pytest.raises(ValueError):
        Subproblem(p, "inverse", 0.0, 1.0)


def test_split_equalities_shape():
    p = identity_problem([-np.inf, 0, 1], [0, 0, 2], n=3)
    s = split_equalities(p)
    assert s.m_eq == 0 and s.n_rows == 5
    x = np.array([0.5, -0.25, 3.0])
    assert s.violation(s.cons(x)) == pytest.approx(p.violation(p.cons(x)))
    v = np.arange(5.0)
    np.testing.assert_allclose(s.jac_t(x, v), [0.0, 1 + 3, 2 + 4])


SPECS = [("nonneg_pca", {"n": 8}), ("degenerate", {}), ("eq_qp", {"m": 2, "n": 20}),
         ("matrix_completion", {"nu": 4, "nm": 5, "na": 2}), ("rosenbrock", {}),
         ("rosenbrock_eq", {})]


def fd_dir(fun, x, d, h=1e-6):
    return (fun(x + h * d) - fun(x - h * d)) / (2 * h)


@pytest.mark.parametrize("fam,params", SPECS, ids=[s[0] for s in SPECS])
def test_benchmark_fd_consistency(fam, params):
    prob, x0 = make_instance(fam, 3, **params)
    rng = np.random.default_rng(0)
    for barrier in ("inverse", "loglike"):
        sp = Subproblem(prob, barrier, 2.0, 0.5)
        for _ in range(10):
            x = np.asarray(x0, float) + 0.3 * rng.standard_normal(prob.n)
            d = rng.standard_normal(prob.n)
            v = rng.standard_normal(prob.n_rows)
            f, gf = prob.smooth(x)
            fd = fd_dir(lambda z: prob.smooth(z)[0], x, d)
            assert gf @ d == pytest.approx(fd, rel=1e-5, abs=1e-6 * max(1, abs(f)))
            fdc = fd_dir(lambda z: prob.cons(z) @ v, x, d)
            assert prob.jac_t(x, v) @ d == pytest.approx(fdc, rel=1e-5, abs=1e-6)
            F, G = sp.eval(x)
            fdF = fd_dir(lambda z: sp.eval(z)[0], x, d)
            assert G @ d == pytest.approx(fdF, rel=1e-5, abs=1e-6 * max(1, abs(F)))


def test_penalized_term_convex_on_affine_rows():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((4, 3))
    lo = np.array([-np.inf, 0.0, -1.0, 0.5])
    up = np.array([1.0, np.inf, 1.0, 0.5])
    p = ProblemSpec(3, lambda x: (0.0, np.zeros(3)), Zero(), lambda x: A @ x,
                    lambda x, v: A.T @ v, lo, up)
    for barrier in ("inverse", "loglike"):
        sp = Subproblem(p, barrier, 1.0, 0.25)
        for _ in range(100):
            a, b = rng.standard_normal(3) * 2, rng.standard_normal(3) * 2
            mid = sp.eval(0.5 * (a + b))[0]
            assert mid <= 0.5 * (sp.eval(a)[0] + sp.eval(b)[0]) + 1e-10
