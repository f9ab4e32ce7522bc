"""
Markowitz KKT 풀이 테스트
"""

from unittest.mock import patch

import numpy as np
import pytest
from scipy import linalg

from app.errors import DimensionMismatchError, InfeasibleTargetError, InvalidInputError
from app.schemas.portfolio import BudgetMode
from app.services import portfolio_qp


def _random_instance(rng, n):
    a = rng.standard_normal((n, n))
    sigma = a @ a.T / n + 0.1 * np.eye(n)
    return rng.standard_normal(n), rng.uniform(0.5, 1.5, n), sigma


class TestBuildKKT:
    """KKT 행렬 조립"""

    def test_direct_assembly(self):
        kkt = portfolio_qp.build_kkt([1, 1], [1, 1], np.eye(2), 1.0, 1.0)
        assert kkt.m_matrix.shape == (4, 4)
        np.testing.assert_array_equal(kkt.m_matrix[:2, :2], np.zeros((2, 2)))
        np.testing.assert_array_equal(kkt.rhs, [1, 1, 0, 0])
        np.testing.assert_array_equal(kkt.m_matrix[2:, 2:], np.eye(2))
        np.testing.assert_allclose(kkt.m_hat, kkt.m_matrix / 2.0)

    def test_unit_budget_mode(self):
        kkt = portfolio_qp.build_kkt([1, 2], [7, 9], np.eye(2), 1.0, 1.0, BudgetMode.UNIT)
        np.testing.assert_array_equal(kkt.m_matrix[1, 2:], [1, 1])
        np.testing.assert_array_equal(kkt.m_matrix[2:, 1], [1, 1])

    def test_asymmetric_sigma_rejected(self):
        sigma = np.array([[1.0, 0.5], [0.501, 1.0]])
        with pytest.raises(InvalidInputError, match="asymmetric"):
            portfolio_qp.build_kkt([1, 1], [1, 1], sigma, 1.0, 1.0)

    def test_zero_trace_rejected(self):
        with pytest.raises(InvalidInputError, match="zero-trace"):
            portfolio_qp.build_kkt([1, 1], [1, 1], np.zeros((2, 2)), 1.0, 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            portfolio_qp.build_kkt([1, 1, 1], [1, 1], np.eye(2), 1.0, 1.0)


class TestSolveExact:
    """의사역행렬 풀이"""

    def test_symmetric_equal_weights(self):
        sol = portfolio_qp.solve_exact(portfolio_qp.build_kkt([1, 1], [1, 1], np.eye(2), 1.0, 1.0))
        np.testing.assert_allclose(sol.weights, [0.5, 0.5], atol=1e-12)
        assert sol.risk == pytest.approx(0.5)

    def test_inverse_variance_weighting(self):
        kkt = portfolio_qp.build_kkt([1, 1], [1, 1], np.diag([1.0, 4.0]), 1.0, 1.0)
        sol = portfolio_qp.solve_exact(kkt)
        np.testing.assert_allclose(sol.weights, [0.8, 0.2], atol=1e-12)

    def test_contradictory_constraints(self):
        kkt = portfolio_qp.build_kkt([1, 1], [1, 1], np.eye(2), 2.0, 1.0)
        with pytest.raises(InfeasibleTargetError, match="infeasible target"):
            portfolio_qp.solve_exact(kkt)

    @pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
    def test_residual_and_constraints(self, rng, n):
        r, pi, sigma = _random_instance(rng, n)
        mu = float(rng.normal())
        kkt = portfolio_qp.build_kkt(r, pi, sigma, mu, 1.0)
        sol = portfolio_qp.solve_exact(kkt)
        x = np.concatenate([[sol.eta, sol.theta], sol.weights])
        assert np.linalg.norm(kkt.m_matrix @ x - kkt.rhs) <= 1e-9 * np.linalg.norm(kkt.rhs)
        assert abs(r @ sol.weights - mu) <= 1e-8 * max(1.0, abs(mu))
        assert abs(pi @ sol.weights - 1.0) <= 1e-8

    def test_feasible_perturbations_never_reduce_risk(self, rng):
        r, pi, sigma = _random_instance(rng, 6)
        sol = portfolio_qp.solve_exact(portfolio_qp.build_kkt(r, pi, sigma, 0.3, 1.0))
        null = linalg.null_space(np.vstack([r, pi]))
        for _ in range(100):
            delta = null @ rng.standard_normal(null.shape[1])
            assert portfolio_qp.portfolio_risk(sol.weights + delta, sigma) >= sol.risk - 1e-9

    def test_linear_scaling(self, rng):
        r, pi, sigma = _random_instance(rng, 5)
        base = portfolio_qp.solve_exact(portfolio_qp.build_kkt(r, pi, sigma, 0.2, 1.0))
        scaled = portfolio_qp.solve_exact(portfolio_qp.build_kkt(r, pi, sigma, 0.6, 3.0))
        np.testing.assert_allclose(scaled.weights, 3.0 * base.weights, rtol=1e-9, atol=1e-12)


class TestPseudoInverseKappa:
    """κ 절단 의사역행렬"""

    def test_excluded_eigenvalue(self):
        x, eps = portfolio_qp.pseudo_inverse_kappa(np.diag([1.0, 0.1]), [1.0, 1.0], 2.0)
        np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
        assert eps == pytest.approx(10.0)

    def test_full_inclusion_matches_solve_exact(self, rng):
        r, pi, sigma = _random_instance(rng, 4)
        kkt = portfolio_qp.build_kkt(r, pi, sigma, 0.1, 1.0)
        kappa = 2.0 / portfolio_qp.min_nonzero_eigenvalue(kkt.m_hat)
        x, eps = portfolio_qp.pseudo_inverse_kappa(kkt.m_hat, kkt.rhs, kappa)
        sol = portfolio_qp.solve_exact(kkt)
        np.testing.assert_allclose(x[2:] / kkt.trace, sol.weights, rtol=1e-8, atol=1e-10)
        assert eps <= 1e-10

    def test_monotone_in_kappa(self, rng):
        a = rng.standard_normal((6, 6))
        m_hat = (a + a.T) / 2
        b = rng.standard_normal(6)
        eps = [portfolio_qp.pseudo_inverse_kappa(m_hat, b, k)[1] for k in np.geomspace(0.1, 1e3, 25)]
        assert all(later <= earlier + 1e-12 for earlier, later in zip(eps, eps[1:]))
        assert eps[-1] <= 1e-10

    def test_non_positive_kappa(self):
        with pytest.raises(InvalidInputError):
            portfolio_qp.pseudo_inverse_kappa(np.eye(2), [1.0, 0.0], 0.0)


class TestFrontier:
    """효율적 프런티어"""

    def test_minimum_at_global_min_variance_return(self):
        grid = [1.0, 1.25, 1.5, 1.75, 2.0]
        curve = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), grid, 1.0)
        assert curve.mus[int(np.argmin(curve.risks))] == pytest.approx(1.5)
        a = 2.0 - np.asarray(grid)
        np.testing.assert_allclose(curve.risks, a**2 + (1 - a) ** 2, atol=1e-12)
        assert curve.is_convex()

    def test_single_point(self):
        curve = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), [1.5], 1.0)
        assert len(curve.points) == 1

    def test_duplicates_preserved_in_order(self):
        grid = [1.5, 1.0, 1.5]
        curve = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), grid, 1.0)
        assert list(curve.mus) == grid

    def test_worker_count_does_not_change_points(self):
        grid = [2.0, 1.0, 1.75, 1.25, 1.5]
        serial = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), grid, 1.0, max_workers=1)
        pooled = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), grid, 1.0, max_workers=4)
        assert list(pooled.mus) == grid
        np.testing.assert_array_equal(pooled.risks, serial.risks)

    def test_infeasible_point_omitted(self):
        curve = portfolio_qp.frontier([1.0, 1.0], [1.0, 1.0], np.eye(2), [1.0, 2.0], 1.0)
        assert list(curve.mus) == [1.0]
        assert len(curve.warnings) == 1
        assert curve.warnings[0].code == "infeasible_target"
        assert curve.warnings[0].index == 1

    def test_unexpected_failure_recorded(self):
        original = portfolio_qp.solve_exact

        def flaky(kkt):
            if kkt.mu == 1.0:
                raise RuntimeError("boom")
            return original(kkt)

        with patch.object(portfolio_qp, "solve_exact", side_effect=flaky):
            curve = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), [1.0, 1.5], 1.0)
        assert list(curve.mus) == [1.5]
        assert curve.warnings[0].code == "internal_error"

    def test_empty_grid(self):
        with pytest.raises(InvalidInputError):
            portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), [], 1.0)

    def test_frame_columns(self):
        curve = portfolio_qp.frontier([1.0, 2.0], [1.0, 1.0], np.eye(2), [1.0, 2.0], 1.0)
        frame = portfolio_qp.frontier_to_frame(curve)
        assert list(frame.columns) == ["mu", "risk"]
        assert len(frame) == 2


class TestPortfolioRisk:
    def test_diagonal(self):
        assert portfolio_qp.portfolio_risk([1.0, 0.0], np.diag([2.0, 3.0])) == 2.0

    def test_zero_weights(self):
        assert portfolio_qp.portfolio_risk([0.0, 0.0], np.eye(2)) == 0.0

    def test_matches_double_loop(self, rng):
        w = rng.standard_normal(5)
        a = rng.standard_normal((5, 5))
        sigma = a @ a.T
        expected = sum(w[i] * sigma[i, j] * w[j] for i in range(5) for j in range(5))
        assert portfolio_qp.portfolio_risk(w, sigma) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            portfolio_qp.portfolio_risk([1.0, 2.0, 3.0], np.eye(2))
