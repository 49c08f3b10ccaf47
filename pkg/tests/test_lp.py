import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import vertex_enumeration
from ufofdm.design import DesignSpec, assemble_lp
from ufofdm.errors import ParameterError
from ufofdm.lp import LinearProgram, solve_lp, write_mps


def random_bounded_lp(seed, n=None, m=None):
    """Random LP whose feasible set is nonempty and bounded (a box is included)."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 6))
    m = m or int(rng.integers(n, 12 - 0))
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    b = A @ x0 + rng.uniform(0.1, 2.0, m)
    box = np.vstack([np.eye(n), -np.eye(n)])
    A = np.vstack([A, box[: 2 * n - 0]])
    b = np.concatenate([b, np.full(2 * n, 5.0) + np.abs(np.concatenate([x0, -x0]))])
    return LinearProgram(c=rng.standard_normal(n), A_ub=A, b_ub=b)


def test_single_variable():
    sol = solve_lp(LinearProgram(c=[-1.0], A_ub=[[1.0]], b_ub=[3.0], lower_bounds=[0.0]))
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(3.0, abs=1e-8)
    assert sol.objective == pytest.approx(-3.0, abs=1e-8)


def test_infeasible_with_certificate():
    lp = LinearProgram(c=[1.0], A_ub=[[1.0]], b_ub=[-1.0], lower_bounds=[0.0])
    sol = solve_lp(lp)
    assert sol.status == "infeasible"
    # Farkas: y >= 0 over [A_ub; -I] rows with y'G = 0 and y'h < 0
    y = sol.certificate
    G = np.vstack([lp.A_ub, -np.eye(1)])
    h = np.concatenate([lp.b_ub, [0.0]])
    assert np.all(y >= -1e-9)
    assert np.abs(y @ G).max() < 1e-6
    assert y @ h < 0


def test_infeasible_equalities():
    lp = LinearProgram(c=[1.0, 1.0], A_eq=[[1.0, 1.0], [1.0, 1.0]], b_eq=[1.0, 2.0])
    assert solve_lp(lp).status == "infeasible"


def test_unbounded_with_ray():
    lp = LinearProgram(c=[-1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0], lower_bounds=[0.0, 0.0])
    sol = solve_lp(lp)
    assert sol.status == "unbounded"
    ray = sol.certificate
    assert lp.c @ ray < 0
    assert np.all(lp.A_ub @ ray <= 1e-9) and np.all(ray >= -1e-9)


def test_equality_and_free_variables():
    # min x + 2y s.t. x + y = 1, x - y <= 0.5, x, y free but y >= -1 via row
    lp = LinearProgram(c=[1.0, 2.0], A_ub=[[1.0, -1.0], [0.0, -1.0]], b_ub=[0.5, 1.0],
                       A_eq=[[1.0, 1.0]], b_eq=[1.0])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [0.75, 0.25], atol=1e-8)


def test_validation():
    with pytest.raises(ParameterError):
        LinearProgram(c=[1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(ParameterError):
        LinearProgram(c=[np.nan])
    with pytest.raises(ParameterError):
        solve_lp(LinearProgram(c=[1.0], lower_bounds=[0.0]), tol=0)


@pytest.mark.parametrize("seed", range(30))
def test_vertex_enumeration_oracle(seed):
    lp = random_bounded_lp(seed)
    best, _ = vertex_enumeration(lp.c, lp.A_ub, lp.b_ub)
    sol = solve_lp(lp, tol=1e-10)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(best, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.01, 100.0))
def test_objective_scaling(seed, scale):
    lp = random_bounded_lp(seed)
    a = solve_lp(lp, tol=1e-10)
    b = solve_lp(LinearProgram(c=lp.c * scale, A_ub=lp.A_ub, b_ub=lp.b_ub), tol=1e-10)
    assert a.status == b.status == "optimal"
    assert b.objective == pytest.approx(scale * a.objective, rel=1e-7, abs=1e-7 * scale)
    act_a = np.abs(lp.A_ub @ a.x - lp.b_ub) < 1e-6
    act_b = np.abs(lp.A_ub @ b.x - lp.b_ub) < 1e-6
    # the vertex (or face) reached is the same up to tolerance
    np.testing.assert_allclose(a.x, b.x, atol=1e-5)
    assert np.array_equal(act_a, act_b) or np.abs(a.x - b.x).max() < 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_weak_duality(seed):
    lp = random_bounded_lp(seed)
    sol = solve_lp(lp, tol=1e-10)
    assert sol.objective >= sol.dual_objective - sol.gap - 1e-9
    assert np.all(sol.dual_ub >= 0)


def test_deterministic():
    lp = random_bounded_lp(3)
    a, b = solve_lp(lp), solve_lp(lp)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_residual_contract_on_design_lp():
    for lam in (1.0, 1e-2, 1e-4):
        lp = assemble_lp(DesignSpec(lam=lam))
        tol = 1e-10
        sol = solve_lp(lp, tol=tol)
        assert sol.status == "optimal"
        assert np.max(lp.A_ub @ sol.x - lp.b_ub) <= tol * lp.scale
        assert np.abs(lp.A_eq @ sol.x - lp.b_eq).max() <= tol * lp.scale
        assert np.all(sol.x[16:] >= -tol)
        assert sol.gap <= tol * lp.scale
        assert max(sol.residuals.values()) <= 1e-7 * (1 + lp.scale)


def test_default_scale_lp_under_five_seconds():
    lp = assemble_lp(DesignSpec())
    start = time.perf_counter()
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert time.perf_counter() - start < 5.0


def test_degenerate_overlap_lp_matches_reference():
    """Stopband reaching into the carrier band makes the LP dual degenerate."""
    from scipy.optimize import linprog
    from ufofdm.design import parse_angle
    lp = assemble_lp(DesignSpec(stopband_start=parse_angle("7pi/64")), allow_overlap=True)
    sol = solve_lp(lp, tol=1e-10)
    ref = linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
                  bounds=[(None, None)] * 16 + [(0, None)] * 2, method="highs")
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(ref.fun, rel=1e-8)


def test_mps_dump(tmp_path):
    lp = LinearProgram(c=[1.0, -2.0], A_ub=[[1.0, 1.0]], b_ub=[4.0], A_eq=[[1.0, -1.0]],
                       b_eq=[0.5], lower_bounds=[0.0, -np.inf], names=["g0", "t1"])
    path = tmp_path / "lp.mps"
    write_mps(lp, path, name="TEST")
    text = path.read_text()
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text
    assert " FR bnd t1" in text
    assert "np.float64" not in text
    assert " g0 u0 1.0" in text
    assert "g0" in text


@pytest.mark.parametrize("seed", range(0, 200, 7))
def test_random_instances_classified(seed):
    from lp_instances import random_lp
    kind, lp = random_lp(seed)
    sol = solve_lp(lp, tol=1e-10)
    if kind == "bounded":
        best, _ = vertex_enumeration(lp.c, lp.A_ub, lp.b_ub)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(best, abs=1e-6)
    else:
        assert sol.status == kind


def test_infeasible_and_dual_infeasible_reports_infeasible():
    # x <= -1 and x >= 0 with an objective that also has an improving ray direction
    lp = LinearProgram(c=[-1.0, 0.0], A_ub=[[0.0, 1.0], [0.0, -1.0]], b_ub=[-1.0, 0.0])
    assert solve_lp(lp).status == "infeasible"
