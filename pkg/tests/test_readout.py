"""
판독 서비스 테스트
"""

import math

import numpy as np
import pytest

from app.errors import DimensionMismatchError, InvalidInputError
from app.schemas.hhl import HHLConfig
from app.schemas.quantum import DensityMatrix
from app.schemas.readout import SamplingResult
from app.services import hhl_solver, market_data, portfolio_qp, qsim_core, readout, state_prep
from app.services.verification import (
    DECOUPLED_KAPPA,
    DECOUPLED_MU_GRID,
    DECOUPLED_T0,
    random_psd,
    sparse_oracle_portfolio,
)


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


class TestSwapTest:
    """SWAP 테스트"""

    def test_identical_states(self, rng):
        a = qsim_core.encode_vector(_unit(rng, 4), "w")
        est = readout.swap_test(a, a)
        assert est.overlap == pytest.approx(1.0, abs=1e-12)
        assert est.acceptance_probability == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_states(self):
        est = readout.swap_test(qsim_core.encode_vector([1, 0], "w"), qsim_core.encode_vector([0, 1], "w"))
        assert est.overlap == pytest.approx(0.0, abs=1e-12)
        assert est.acceptance_probability == pytest.approx(0.5, abs=1e-12)

    def test_state_against_covariance_density(self, rng):
        w = _unit(rng, 4)
        sigma = random_psd(rng, 4)
        est = readout.swap_test(
            qsim_core.encode_vector(w, "w"), DensityMatrix(matrix=sigma / np.trace(sigma))
        )
        assert est.overlap == pytest.approx(w @ sigma @ w / np.trace(sigma), abs=1e-10)

    def test_mixed_pair_matches_trace(self, rng):
        a_sigma, b_sigma = random_psd(rng, 3), random_psd(rng, 3)
        a = DensityMatrix(matrix=a_sigma / np.trace(a_sigma))
        b = DensityMatrix(matrix=b_sigma / np.trace(b_sigma))
        est = readout.swap_test(a, b)
        assert est.overlap == pytest.approx(np.trace(a.matrix @ b.matrix).real, abs=1e-12)
        assert 0.5 <= est.acceptance_probability <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            readout.swap_test(qsim_core.encode_vector([1, 0], "w"), qsim_core.encode_vector([1, 0, 0, 0], "w"))

    def test_shot_estimate(self):
        a = qsim_core.encode_vector([1, 0], "w")
        b = qsim_core.encode_vector([1, 1], "w")
        est = readout.swap_test(a, b, shots=10_000, seed=7)
        assert est.shots == 10_000
        assert est.std_error > 0
        assert abs(est.overlap - 0.5) <= 5 * est.std_error

    def test_shot_estimate_deterministic(self):
        a = qsim_core.encode_vector([1, 0], "w")
        b = qsim_core.encode_vector([1, 1], "w")
        assert readout.swap_test(a, b, 500, seed=3) == readout.swap_test(a, b, 500, seed=3)


class TestRiskEstimate:
    """SWAP 테스트 위험 추정"""

    def test_aligned_rank_one(self, rng):
        w = _unit(rng, 4)
        trace = 2.5
        rho = DensityMatrix(matrix=np.outer(w, w))
        assert readout.risk_estimate(qsim_core.encode_vector(w, "w"), rho, trace) == pytest.approx(trace)

    def test_orthogonal_to_range(self):
        rho = DensityMatrix(matrix=np.diag([1.0, 0.0]))
        assert readout.risk_estimate(qsim_core.encode_vector([0, 1], "w"), rho, 3.0) == pytest.approx(0.0, abs=1e-12)

    def test_matches_quadratic_form(self, rng):
        w = rng.standard_normal(4)
        sigma = random_psd(rng, 4)
        trace = float(np.trace(sigma))
        risk = readout.risk_estimate(
            qsim_core.encode_vector(w, "w"), DensityMatrix(matrix=sigma / trace), trace
        )
        expected = portfolio_qp.portfolio_risk(w, sigma) / float(w @ w)
        assert risk == pytest.approx(expected, rel=1e-9)


class TestSectorWeight:
    """섹터 비중"""

    def test_full_mask(self, rng):
        s = qsim_core.encode_vector(_unit(rng, 4), "w")
        assert readout.sector_weight(s, range(4)) == pytest.approx(1.0)

    def test_disjoint_mask(self):
        s = qsim_core.encode_vector([0.6, 0.8, 0.0, 0.0], "w")
        assert readout.sector_weight(s, [2, 3]) == pytest.approx(0.0)

    def test_matches_direct_sum(self, rng):
        w = _unit(rng, 8)
        s = qsim_core.encode_vector(w, "w")
        mask = [1, 4, 6]
        assert readout.sector_weight(s, mask) == pytest.approx(float(np.sum(w[mask] ** 2)), abs=1e-12)

    def test_partition_sums_to_one(self, rng):
        s = qsim_core.encode_vector(_unit(rng, 8), "w")
        total = sum(readout.sector_weight(s, part) for part in ([0, 1, 2], [3, 4], [5, 6, 7]))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_empty_mask(self):
        with pytest.raises(InvalidInputError, match="empty sector mask"):
            readout.sector_weight(qsim_core.encode_vector([1, 0], "w"), [])

    def test_shot_estimate(self):
        s = qsim_core.encode_vector([0.6, 0.8], "w")
        weight = readout.sector_weight(s, [0], shots=20_000, seed=1)
        assert abs(weight - 0.36) <= 5 * readout.sector_weight_std_error(0.36, 20_000)


class TestComparePortfolio:
    """포트폴리오 비교"""

    def test_same_portfolio_accepted(self, rng):
        s = qsim_core.encode_vector(_unit(rng, 4), "w")
        for threshold in (0.5, 0.9, 0.999):
            assert readout.compare_portfolio(s, s, threshold=threshold).accepted

    def test_orthogonal_rejected(self):
        result = readout.compare_portfolio(
            qsim_core.encode_vector([1, 0], "w"), qsim_core.encode_vector([0, 1], "w"), threshold=0.5
        )
        assert not result.accepted

    def test_neighboring_target_return(self):
        sigma = np.diag([1.0, 2.0, 3.0])
        r, pi = [1.0, 2.0, 3.0], [1.0, 1.0, 1.0]
        w = portfolio_qp.solve_exact(portfolio_qp.build_kkt(r, pi, sigma, 2.0, 1.0)).weights
        w_near = portfolio_qp.solve_exact(portfolio_qp.build_kkt(r, pi, sigma, 2.2, 1.0)).weights
        analytic = float(np.dot(w, w_near) ** 2 / (np.dot(w, w) * np.dot(w_near, w_near)))
        result = readout.compare_portfolio(
            qsim_core.encode_vector(w, "w"), qsim_core.encode_vector(w_near, "w"), shots=20_000, seed=5
        )
        assert abs(result.overlap - analytic) <= 5 * result.std_error


class TestSamplePortfolio:
    """롱/숏 샘플링"""

    def test_basis_state(self):
        s = qsim_core.encode_vector([0.0, 1.0, 0.0, 0.0], "w")
        r = np.array([0.3, 0.5, 0.1, 0.2])
        result = readout.sample_portfolio(s, r, 1000, seed=1, sigma=np.diag([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_array_equal(result.w_prime, [0.0, 1.0, 0.0, 0.0])
        assert result.excess_risk == pytest.approx(0.0, abs=1e-12)
        assert result.est_return == pytest.approx(0.5)
        assert result.counts == {1: 1000}

    def test_sign_rule_violation_detectable(self):
        w = np.array([0.6, -0.8])
        result = readout.sample_portfolio(qsim_core.encode_vector(w, "w"), [1.0, 1.0], 10_000, seed=2)
        assert np.all(result.w_prime >= 0)
        report = readout.sampling_error_report(result, w, np.eye(2))
        assert report.epsilon_w > 1.0

    def test_zero_return_samples_dropped(self):
        s = qsim_core.encode_vector([0.6, 0.8], "w")
        result = readout.sample_portfolio(s, [0.0, 1.0], 1000, seed=4)
        assert result.dropped == result.counts.get(0, 0)
        assert result.dropped > 0
        assert result.est_return == pytest.approx(1.0 / result.w_prime[1])

    def test_estimator_within_five_sigma(self, rng):
        w, r, _ = sparse_oracle_portfolio(rng)
        result = readout.sample_portfolio(qsim_core.encode_vector(w, "w"), r, 10_000, seed=11)
        target = float(np.sum(np.abs(w) * np.abs(r)))
        sigma_z = math.sqrt(max(result.est_return_second_moment - result.est_return**2, 0.0) / result.total)
        assert abs(result.est_return - target) <= 5 * sigma_z
        assert result.support_size == 4

    def test_sampled_risk_never_below_optimum(self, rng):
        w, r, sigma = sparse_oracle_portfolio(rng)
        state = qsim_core.encode_vector(w, "w")
        for seed in range(20):
            result = readout.sample_portfolio(state, r, 100, seed=seed, sigma=sigma)
            assert result.excess_risk >= -1e-10

    def test_converges_at_large_sample_count(self, rng):
        w, r, sigma = sparse_oracle_portfolio(rng)
        result = readout.sample_portfolio(qsim_core.encode_vector(w, "w"), r, 100_000, seed=9)
        assert readout.sampling_error_report(result, w, sigma).epsilon_w < 0.02

    def test_error_decays_with_samples(self, rng):
        w, r, sigma = sparse_oracle_portfolio(rng)
        state = qsim_core.encode_vector(w, "w")
        grid = (100, 1000, 10_000)
        means = []
        for m in grid:
            eps = [
                readout.sampling_error_report(readout.sample_portfolio(state, r, m, seed=s), w, sigma).epsilon_w
                for s in range(20)
            ]
            means.append(np.mean(eps))
        slope = float(np.polyfit(np.log(grid), np.log(means), 1)[0])
        assert -0.65 <= slope <= -0.35

    def test_invalid_sample_count(self):
        with pytest.raises(InvalidInputError):
            readout.sample_portfolio(qsim_core.encode_vector([1, 0], "w"), [1.0, 1.0], 0, seed=1)


class TestSamplingErrorReport:
    """샘플링 오차 분석"""

    def test_exact_sample(self):
        s = qsim_core.encode_vector([0.0, 1.0], "w")
        result = readout.sample_portfolio(s, [1.0, 1.0], 100, seed=1)
        report = readout.sampling_error_report(result, [0.0, 1.0], np.eye(2))
        assert report.epsilon_w == 0.0
        assert report.bound_satisfied

    def test_perturbation_bound(self, rng):
        sigma = random_psd(rng, 5)
        for _ in range(50):
            w = _unit(rng, 5)
            w_prime = w + 0.05 * rng.standard_normal(5)
            w_prime /= np.linalg.norm(w_prime)
            fake = SamplingResult(
                counts={0: 1},
                total=1,
                w_prime=w_prime,
                est_return=0.0,
                est_return_second_moment=0.0,
                sigma_j=np.zeros(5),
                support_size=1,
            )
            report = readout.sampling_error_report(fake, w, sigma)
            assert report.bound_satisfied
            assert report.risk_difference <= report.bound + 1e-10

    def test_variance_term_reported(self, rng):
        w, r, sigma = sparse_oracle_portfolio(rng)
        result = readout.sample_portfolio(qsim_core.encode_vector(w, "w"), r, 1000, seed=3)
        report = readout.sampling_error_report(result, w, sigma, r_vector=r)
        assert report.variance_term is not None and report.variance_term > 0


class TestAssetRanking:
    """자산 순위"""

    def test_rank_by_return(self):
        panel = market_data.panel_from_returns([[0.01, 0.01], [0.05, 0.03], [0.02, 0.02]])
        r_state = state_prep.prepare_R_state(state_prep.prepare_chi(panel)).state
        ranking = readout.rank_assets_by_return(r_state, 3)
        assert ranking.top(3) == [1, 2, 0]

    def test_rank_by_variance(self):
        rho = DensityMatrix(matrix=np.diag([0.2, 0.5, 0.3]))
        assert readout.rank_assets_by_variance(rho).top(2) == [1, 2]

    def test_shot_ranking_deterministic(self):
        rho = DensityMatrix(matrix=np.diag([0.2, 0.5, 0.3]))
        a = readout.rank_assets_by_variance(rho, shots=1000, seed=8)
        b = readout.rank_assets_by_variance(rho, shots=1000, seed=8)
        assert a.top(3) == b.top(3)
        assert a.shots == 1000


class TestFrontierQuantum:
    """양자 프런티어"""

    def test_decoupled_toy_matches_classical(self, decoupled_toy):
        r, pi, sigma = decoupled_toy
        cfg = HHLConfig(kappa=DECOUPLED_KAPPA, t0=DECOUPLED_T0, n_phase_bits=10)
        curve = readout.frontier_quantum(r, pi, sigma, DECOUPLED_MU_GRID, 1.0, cfg)
        classical = portfolio_qp.frontier(r, pi, sigma, DECOUPLED_MU_GRID, 1.0)
        assert len(curve.points) == len(DECOUPLED_MU_GRID)
        for point, reference in zip(curve.points, classical.points):
            assert point.mu == reference.mu
            assert point.risk_quantum == pytest.approx(reference.min_risk, rel=1e-2)
            assert point.fidelity >= 0.99

    def test_leaky_spectrum_frontier(self):
        r, pi, sigma = [1.0, 2.0], [1.0, 1.0], np.diag([1.0, 4.0])
        grid = (1.2, 1.5, 1.8)
        kappa = max(
            hhl_solver.suggest_kappa(kkt.m_hat, rhs=kkt.rhs)
            for kkt in (portfolio_qp.build_kkt(r, pi, sigma, mu, 1.0) for mu in grid)
        )
        curve = readout.frontier_quantum(r, pi, sigma, grid, 1.0, HHLConfig(kappa=kappa, n_phase_bits=10))
        classical = portfolio_qp.frontier(r, pi, sigma, grid, 1.0)
        assert len(curve.points) == len(grid)
        for point, reference in zip(curve.points, classical.points):
            # 위상 격자 밖 고윳값의 누설 편향
            assert point.risk_quantum == pytest.approx(reference.min_risk, rel=5e-2)
            assert point.fidelity >= 0.99

    def test_single_point(self, decoupled_toy):
        r, pi, sigma = decoupled_toy
        cfg = HHLConfig(kappa=DECOUPLED_KAPPA, t0=DECOUPLED_T0, n_phase_bits=6)
        curve = readout.frontier_quantum(r, pi, sigma, [0.5], 1.0, cfg)
        assert len(curve.points) == 1
        assert curve.points[0].p_w > 0

    def test_infeasible_point_warned(self):
        cfg = HHLConfig(kappa=8.0, n_phase_bits=6)
        curve = readout.frontier_quantum([1.0, 1.0], [1.0, 1.0], np.eye(2), [1.0, 2.0], 1.0, cfg)
        assert len(curve.points) + len(curve.warnings) == 2
        assert any(w.index == 1 and w.code == "infeasible_target" for w in curve.warnings)

    def test_empty_grid(self, decoupled_toy):
        r, pi, sigma = decoupled_toy
        with pytest.raises(InvalidInputError):
            readout.frontier_quantum(r, pi, sigma, [], 1.0, HHLConfig(kappa=8.0))

    def test_frame_columns(self, decoupled_toy):
        r, pi, sigma = decoupled_toy
        cfg = HHLConfig(kappa=DECOUPLED_KAPPA, t0=DECOUPLED_T0, n_phase_bits=6)
        frame = readout.quantum_frontier_to_frame(readout.frontier_quantum(r, pi, sigma, [0.5, 1.0], 1.0, cfg))
        assert list(frame.columns) == ["mu", "risk_classical", "risk_quantum", "fidelity"]
        assert len(frame) == 2

    def test_point_seeds_deterministic(self):
        assert readout.point_seeds(5, 3) == readout.point_seeds(5, 3)
        assert len(set(readout.point_seeds(5, 3))) == 3
