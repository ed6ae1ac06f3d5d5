import math

import numpy as np
import pytest

from whittlecrawl.dp_oracle import (ConvergenceError, IndexabilityError, StructureViolationError, SubsidyProblem,
                                    _bisect, average_reward_of_period, check_value_function,
                                    estimate_boundary_subsidies, oracle_index, passive_set_sweep,
                                    solve_average_lattice, solve_discounted)
from whittlecrawl.model import InvalidParameterError, table1_fleet
from whittlecrawl.whittle import whittle_index

SOURCES = table1_fleet().sources


def lattice_discounted_value(p, lam, delta, horizon=600):
    """Exact backward recursion on the states reachable from u.

    State j means j passive periods since the last crawl, i.e. x = x_{j+1}.
    Truncation error is below delta**horizon * u_star / (1 - delta).
    """
    cl = p.cost * lam
    x = p.lattice(np.arange(1, horizon + 2))
    V = np.zeros(horizon + 1)
    for _ in range(horizon):
        passive = cl + delta * np.append(V[1:], V[-1])
        active = x + delta * V[0]
        V = np.maximum(passive, active)
    return V


def brute_force_beta(p, lam, n_max=3000):
    best = p.cost * lam
    for n in range(1, n_max + 1):
        best = max(best, (p.cost * lam * (n - 1) + (1 - p.alpha ** n) * p.u_star) / n)
    return best


def test_delta_zero_is_one_step_problem(src1):
    lam = 200.0
    vf = solve_discounted(SubsidyProblem(src1, lam), 0.0, grid_n=101)
    np.testing.assert_allclose(vf.values, np.maximum(src1.cost * lam, vf.grid), rtol=1e-14)


@pytest.mark.parametrize("delta", [0.5, 0.9, 0.99])
def test_huge_subsidy_makes_everything_passive(src1, delta):
    lam = 3 * src1.u_star / src1.cost
    vf = solve_discounted(SubsidyProblem(src1, lam), delta, grid_n=501)
    np.testing.assert_allclose(vf.values, src1.cost * lam / (1 - delta), rtol=1e-10)
    assert not vf.active.any()


@pytest.mark.parametrize("delta", [0.5, 0.9, 0.99])
def test_negative_subsidy_makes_everything_active(src1, delta):
    vf = solve_discounted(SubsidyProblem(src1, -1e3), delta, grid_n=501)
    assert vf.values[0] == pytest.approx(src1.u / (1 - delta), rel=1e-10)
    np.testing.assert_allclose(vf.values, vf.grid + delta * src1.u / (1 - delta), rtol=1e-10)
    assert vf.active.all()


@pytest.mark.parametrize("p", SOURCES)
@pytest.mark.parametrize("k", [2, 4, 9])
def test_grid_solution_matches_exact_lattice_recursion(p, k):
    lam = 0.98 * whittle_index(p.lattice(k), p)
    delta = 0.9
    exact = lattice_discounted_value(p, lam, delta)
    vf = solve_discounted(SubsidyProblem(p, lam), delta, grid_n=4001)
    # u is a grid point; lattice points are interpolated
    assert vf.values[0] == pytest.approx(exact[0], rel=1e-4)
    for j in range(6):
        assert vf(p.lattice(j + 1)) == pytest.approx(exact[j], rel=1e-4)


def test_value_and_policy_iteration_agree(src1):
    lam = whittle_index(src1.lattice(3), src1)
    prob = SubsidyProblem(src1, lam)
    tol = 1e-11
    a = solve_discounted(prob, 0.9, grid_n=801, tol=tol, method="policy")
    b = solve_discounted(prob, 0.9, grid_n=801, tol=tol, method="value")
    np.testing.assert_allclose(a.values, b.values, atol=10 * tol * np.abs(a.values).max())


def test_unique_fixed_point_from_different_starts(src1):
    lam = whittle_index(src1.lattice(2), src1)
    prob = SubsidyProblem(src1, lam)
    tol = 1e-11
    low = solve_discounted(prob, 0.9, grid_n=801, tol=tol, method="value", v0=np.zeros(801))
    high = solve_discounted(prob, 0.9, grid_n=801, tol=tol, method="value", v0=np.full(801, 1e5))
    scale = np.abs(low.values).max()
    np.testing.assert_allclose(low.values, high.values, atol=10 * tol * scale)


@pytest.mark.parametrize("p", SOURCES)
@pytest.mark.parametrize("delta", [0.9, 0.99])
def test_value_function_properties(p, delta):
    for k in (1, 3, 7):
        lam = whittle_index(p.lattice(k), p)
        vf = solve_discounted(SubsidyProblem(p, lam), delta, grid_n=4001)
        checks = check_value_function(vf, p)
        assert all(ok for ok, _ in checks.values()), checks


@pytest.mark.parametrize("p", SOURCES)
def test_vanishing_discount(p):
    lam = whittle_index(p.lattice(3), p) * 0.97
    prob = SubsidyProblem(p, lam)
    beta, _ = solve_average_lattice(prob)
    scaled = [(1 - d) * solve_discounted(prob, d).values[0] for d in (0.9, 0.99, 0.999)]
    gaps = [abs(s - beta) for s in scaled]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 0.01 * beta


def test_convergence_error_reports_residual(src1):
    with pytest.raises(ConvergenceError) as err:
        solve_discounted(SubsidyProblem(src1, 100.0), 0.99, grid_n=101, method="value", max_iter=3)
    assert err.value.residual > 0


def test_solver_rejects_bad_arguments(src1):
    prob = SubsidyProblem(src1, 1.0)
    with pytest.raises(InvalidParameterError):
        solve_discounted(prob, 1.0)
    with pytest.raises(InvalidParameterError):
        solve_discounted(prob, 0.9, tol=0.0)
    with pytest.raises(InvalidParameterError):
        solve_discounted(prob, 0.9, grid_n=1)


@pytest.mark.parametrize("p", SOURCES)
@pytest.mark.parametrize("lam", [-50.0, 0.0, 10.0, 60.0, 150.0, 300.0, 1000.0])
def test_average_lattice_matches_brute_force(p, lam):
    beta, n = solve_average_lattice(SubsidyProblem(p, lam))
    assert beta == pytest.approx(brute_force_beta(p, lam), rel=1e-12)
    if n is not None:
        assert average_reward_of_period(SubsidyProblem(p, lam), n) == pytest.approx(beta, rel=1e-14)


@pytest.mark.parametrize("p", SOURCES)
def test_average_lattice_zero_subsidy(p):
    beta, n = solve_average_lattice(SubsidyProblem(p, 0.0))
    assert n == 1
    assert beta == pytest.approx(p.u, rel=1e-14)
    periods = np.arange(1, 500)
    assert beta == pytest.approx(max((1 - p.alpha ** periods) * p.u_star / periods), rel=1e-14)


@pytest.mark.parametrize("p", SOURCES)
def test_average_lattice_tie_at_index_of_u(p):
    lam = (1 - p.alpha) * p.u / p.cost
    prob = SubsidyProblem(p, lam)
    f1, f2 = average_reward_of_period(prob, [1, 2])
    assert f1 == pytest.approx(p.u, rel=1e-14)
    assert f2 == pytest.approx(p.u, rel=1e-12)
    beta, n = solve_average_lattice(prob)
    assert beta == pytest.approx(p.u, rel=1e-12) and n in (1, 2)


def test_average_lattice_never_crawl(src1):
    beta, n = solve_average_lattice(SubsidyProblem(src1, 10 * src1.u_star))
    assert n is None and beta == 10 * src1.u_star * src1.cost


def test_oracle_at_u(src1):
    expected = (1 - math.exp(-0.7)) * src1.u / src1.cost
    assert oracle_index(src1.u, src1) == pytest.approx(expected, abs=1e-6)


def test_oracle_at_x3_source2():
    p = SOURCES[1]
    assert oracle_index(p.lattice(3), p) == pytest.approx(whittle_index(p.lattice(3), p), abs=1e-6)


@pytest.mark.parametrize("p", SOURCES)
def test_oracle_cost_scaling(p):
    for k in (1, 4, 10):
        x = p.lattice(k)
        assert oracle_index(x, p.with_cost(2.0)) == pytest.approx(0.5 * oracle_index(x, p), abs=1e-6)


@pytest.mark.parametrize("p", SOURCES)
def test_oracle_equivalence_on_lattice(p):
    for k in range(1, 26):
        x = p.lattice(k)
        g = whittle_index(x, p)
        assert abs(oracle_index(x, p) - g) <= max(1e-6, 1e-6 * g)


@pytest.mark.parametrize("frac", [0.3, 0.55, 0.8])
def test_discounted_oracle_off_lattice(src1, frac):
    x = src1.u + frac * (src1.lattice(4) - src1.u)
    g = whittle_index(x, src1)
    # delta = 0.9999 biases the discounted index by O(1 - delta)
    assert oracle_index(x, src1, tol=1e-6) == pytest.approx(g, rel=1e-3)


def test_oracle_rejects_states_outside_range(src1):
    with pytest.raises(InvalidParameterError):
        oracle_index(src1.u_star, src1)
    with pytest.raises(InvalidParameterError):
        oracle_index(0.5 * src1.u, src1)
    with pytest.raises(InvalidParameterError):
        oracle_index(0.5 * (src1.u + src1.lattice(2)), src1, route="lattice")


def test_bisection_without_sign_change_is_reported():
    with pytest.raises(IndexabilityError):
        _bisect(lambda lam: True, 0.0, 1.0, 1e-9)
    with pytest.raises(IndexabilityError):
        _bisect(lambda lam: False, 0.0, 1.0, 1e-9)


@pytest.mark.parametrize("p", SOURCES)
def test_passive_set_sweep(p):
    lambdas = np.linspace(0.0, 2 * p.u_star / p.cost, 50)
    parts = passive_set_sweep(p, lambdas)
    a = [q.threshold_a for q in parts]
    assert all(q.is_threshold for q in parts)
    assert a == sorted(a)
    assert parts[0].all_active and parts[0].threshold_a == pytest.approx(p.u)
    assert parts[-1].all_passive
    mid = [q for q in parts if p.u < q.threshold_a < p.u_star]
    assert mid
    lo, hi = estimate_boundary_subsidies(parts)
    assert lo is not None and hi is not None and lo < hi


def test_sweep_rejects_unsorted(src1):
    with pytest.raises(InvalidParameterError):
        passive_set_sweep(src1, [2.0, 1.0])


def test_sweep_flags_non_threshold_partition(src1, monkeypatch):
    import whittlecrawl.dp_oracle as dp

    def scrambled(vf, prob):
        mask = np.zeros(len(vf.grid), dtype=bool)
        mask[10:20] = True
        return mask

    monkeypatch.setattr(dp, "passive_mask", scrambled)
    with pytest.raises(StructureViolationError):
        passive_set_sweep(src1, [100.0], grid_n=101)
    parts = passive_set_sweep(src1, [100.0], grid_n=101, strict=False)
    assert not parts[0].is_threshold
