"""
포트폴리오 파이프라인 서비스

RunConfig 하나로 가격 데이터 → 수익률 패널 → KKT → HHL → 판독까지 실행하고
명령이 그대로 기록할 산출물 payload 를 만든다.
"""

import logging
from typing import Any

import numpy as np
import pandas as pd

from app.errors import QfolioError
from app.schemas.hhl import HHLConfig
from app.schemas.market import PriceSeries, ReturnsPanel
from app.schemas.portfolio import BudgetMode, KKTSystem
from app.schemas.quantum import DensityMatrix
from app.schemas.run import RunConfig
from app.services import hhl_solver, market_data, portfolio_qp, qsim_core, readout, state_prep

logger = logging.getLogger(__name__)


class PortfolioPipelineService:
    """명령 하나가 사용하는 파이프라인 (가격/패널은 한 번만 계산)"""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._prices: PriceSeries | None = None
        self._panel: ReturnsPanel | None = None

    # ------------------------------------------------------------------
    # 데이터
    # ------------------------------------------------------------------

    def load_prices(self) -> PriceSeries:
        if self._prices is None:
            if self.cfg.use_synthetic:
                self._prices = market_data.generate_synthetic(
                    self.cfg.factor_spec(), self.cfg.n_assets, self.cfg.n_times
                )
                logger.info(
                    f"합성 가격 생성: N={self.cfg.n_assets}, T′={self.cfg.n_times}, "
                    f"factors={self.cfg.n_factors}"
                )
            else:
                self._prices = market_data.load_prices(self.cfg.input_path)
        return self._prices

    def load_panel(self) -> ReturnsPanel:
        if self._panel is None:
            self._panel = market_data.compute_returns(self.load_prices(), self.cfg.dt_period)
            logger.info(
                f"수익률 패널: N={self._panel.n_assets}, T={self._panel.n_times}, "
                f"trΣ={self._panel.trace_sigma:.6e}"
            )
        return self._panel

    def budget_prices(self) -> np.ndarray:
        """예산 제약 벡터 Π: 마지막 시점 가격 (unit 모드에서는 build_kkt 가 1 로 바꾼다)"""
        return self.load_prices().prices[:, -1].copy()

    def mu_grid(self) -> np.ndarray:
        """
        μ 격자. 범위가 주어지지 않으면 한 자산에 전액 투자할 때의 수익률 범위
        ξ·[min R_s/Π_s, max R_s/Π_s] 를 쓴다.
        """
        panel = self.load_panel()
        if self.cfg.budget_mode is BudgetMode.UNIT:
            ratios = panel.expected_return
        else:
            ratios = panel.expected_return / self.budget_prices()
        lo = self.cfg.mu_min if self.cfg.mu_min is not None else self.cfg.xi * float(ratios.min())
        hi = self.cfg.mu_max if self.cfg.mu_max is not None else self.cfg.xi * float(ratios.max())
        return np.linspace(lo, hi, self.cfg.mu_steps)

    def target_mu(self) -> float:
        if self.cfg.mu is not None:
            return self.cfg.mu
        grid = self.mu_grid()
        return float((grid[0] + grid[-1]) / 2.0)

    def kkt(self, mu: float) -> KKTSystem:
        panel = self.load_panel()
        return portfolio_qp.build_kkt(
            panel.expected_return,
            self.budget_prices(),
            panel.covariance,
            mu,
            self.cfg.xi,
            self.cfg.budget_mode,
        )

    def hhl_config(self, kkts: list[KKTSystem]) -> HHLConfig:
        """설정에 κ 가 없으면 격자 전체의 우변이 지지하는 고윳값에서 제안"""
        if self.cfg.kappa is not None:
            return self.cfg.hhl_config(self.cfg.kappa)
        suggestions = []
        for k in kkts:
            try:
                suggestions.append(hhl_solver.suggest_kappa(k.m_hat, rhs=k.rhs))
            except QfolioError as e:
                logger.warning(f"κ 제안 제외 (μ={k.mu:.6g}): {e.message}")
        if not suggestions:
            suggestions.append(hhl_solver.suggest_kappa(kkts[0].m_hat))
        kappa = max(suggestions)
        logger.info(f"자동 κ = {kappa:.6g}")
        return self.cfg.hhl_config(kappa)

    def _panel_summary(self) -> dict[str, Any]:
        panel = self.load_panel()
        return {
            "n_assets": panel.n_assets,
            "n_times": panel.n_times,
            "asset_labels": list(panel.asset_labels),
            "trace_sigma": panel.trace_sigma,
            "budget_mode": self.cfg.budget_mode.value,
        }

    # ------------------------------------------------------------------
    # 명령별 실행
    # ------------------------------------------------------------------

    def run_frontier(self) -> dict[str, Any]:
        """고전 프런티어와 양자 프런티어를 같은 격자에서 계산"""
        panel = self.load_panel()
        pi = self.budget_prices()
        grid = self.mu_grid()
        hcfg = self.hhl_config([self.kkt(float(mu)) for mu in grid])

        classical = portfolio_qp.frontier(
            panel.expected_return, pi, panel.covariance, grid, self.cfg.xi,
            self.cfg.budget_mode, self.cfg.max_workers,
        )
        quantum = readout.frontier_quantum(
            panel.expected_return, pi, panel.covariance, grid, self.cfg.xi, hcfg,
            shots=self.cfg.shots, budget_mode=self.cfg.budget_mode, max_workers=self.cfg.max_workers,
        )

        frame = readout.quantum_frontier_to_frame(quantum)
        frontier_json = {
            "classical": portfolio_qp.frontier_to_json(classical),
            "quantum": [
                {
                    "mu": p.mu,
                    "risk_classical": p.min_risk,
                    "risk_quantum": p.risk_quantum,
                    "fidelity": p.fidelity,
                    "weights": p.weights.tolist(),
                }
                for p in quantum.points
            ],
            "warnings": [w.model_dump(mode="json") for w in quantum.warnings],
        }
        diagnostics = {
            "points": [
                {
                    "mu": p.mu,
                    "fidelity": p.fidelity,
                    "p_w": p.p_w,
                    "epsilon_kappa": p.epsilon_kappa,
                    "risk_std_error": p.risk_std_error,
                }
                for p in quantum.points
            ],
            "hhl": hcfg.model_dump(mode="json"),
            "panel": self._panel_summary(),
            "grid": grid.tolist(),
            "omitted": len(grid) - len(quantum.points),
        }
        return {
            "frame": frame,
            "frontier": frontier_json,
            "diagnostics": diagnostics,
            "omitted": len(grid) - len(quantum.points),
        }

    def run_solve(self) -> dict[str, Any]:
        """단일 μ: HHL 풀이, 위험 추정, 롱/숏 샘플링과 오차 분석"""
        panel = self.load_panel()
        mu = self.target_mu()
        kkt = self.kkt(mu)
        classical = portfolio_qp.solve_exact(kkt)
        hcfg = self.hhl_config([kkt])
        result = hhl_solver.hhl_solve(kkt, hcfg)
        w_state, block_prob = hhl_solver.extract_w(result)
        physical = hhl_solver.physical_solution(result, kkt)

        direction = classical.direction()
        fidelity = float(min(abs(np.vdot(w_state.amplitudes[: len(direction)], direction)) ** 2, 1.0))
        trace_sigma = panel.trace_sigma
        swap = readout.swap_test(
            w_state, DensityMatrix(matrix=panel.covariance / trace_sigma), self.cfg.shots, self.cfg.seed
        )
        scale = float(physical.weights @ physical.weights)

        sampling = readout.sample_portfolio(
            w_state, panel.expected_return, self.cfg.samples, self.cfg.seed, sigma=panel.covariance
        )
        report = readout.sampling_error_report(
            sampling, classical.weights, panel.covariance, panel.expected_return
        )
        logger.info(
            f"단일 풀이 완료: μ={mu:.6g}, fidelity={fidelity:.6f}, "
            f"ε_w={report.epsilon_w:.4e}, dropped={sampling.dropped}"
        )

        solution = {
            "mu": mu,
            "xi": self.cfg.xi,
            "fidelity": fidelity,
            "asset_block_probability": block_prob,
            "hhl": result.to_json_dict(),
            "classical": classical.model_dump(mode="json"),
            "quantum": physical.model_dump(mode="json"),
            "risk": {
                "classical": classical.risk,
                "quantum_estimate": scale * trace_sigma * swap.overlap,
                "std_error": scale * trace_sigma * swap.std_error,
                "normalized_overlap": swap.overlap,
            },
            "panel": self._panel_summary(),
        }
        portfolio = {
            "asset_labels": list(panel.asset_labels),
            "sampling": sampling.to_json_dict(),
            "error_report": report.model_dump(mode="json"),
        }
        diagnostics = {
            "points": [
                {
                    "mu": mu,
                    "fidelity": fidelity,
                    "p_w": result.p_w,
                    "epsilon_kappa": result.epsilon_kappa,
                    "risk_std_error": solution["risk"]["std_error"],
                }
            ],
            "hhl": hcfg.model_dump(mode="json"),
            "panel": self._panel_summary(),
            "grid": [mu],
            "omitted": 0,
        }
        return {
            "solution": solution,
            "portfolio": portfolio,
            "diagnostics": diagnostics,
            "warnings": list(result.warnings),
        }

    def run_prep_demo(self) -> dict[str, Any]:
        """|χ⟩, |R⟩, |χ̃⟩, ρ 와 성공 확률, 패널 노름"""
        panel = self.load_panel()
        # y_s(t) 는 가격 오라클 단어에서 계산
        oracle = state_prep.returns_oracle(self.load_prices(), self.cfg.dt_period)
        chi = state_prep.prepare_chi(panel, oracle=oracle)
        r_state = state_prep.prepare_R_state(chi)
        chi_tilde = state_prep.prepare_chi_tilde(panel, oracle=oracle)
        rho = state_prep.covariance_density(chi_tilde)
        trace_estimate = state_prep.estimate_trace_sigma(
            chi_tilde.success_probability, chi_tilde.delta_used, panel.n_times, panel.n_assets
        )
        by_return = readout.rank_assets_by_return(r_state.state, panel.n_assets, self.cfg.shots, self.cfg.seed)
        by_variance = readout.rank_assets_by_variance(rho, self.cfg.shots, self.cfg.seed)
        logger.info(
            f"상태 준비 데모: P_χ={chi.success_probability:.4e}, P_R={r_state.success_probability:.4e}, "
            f"P_χ̃={chi_tilde.success_probability:.4e}"
        )
        return {
            "chi": qsim_core.state_to_json(chi.state),
            "r_state": qsim_core.state_to_json(r_state.state),
            "chi_tilde": qsim_core.state_to_json(chi_tilde.state),
            "rho": qsim_core.state_to_json(rho),
            "success_probabilities": {
                "chi": chi.success_probability,
                "r_state": r_state.success_probability,
                "chi_tilde": chi_tilde.success_probability,
            },
            "delta": {"chi": chi.delta_used, "chi_tilde": chi_tilde.delta_used},
            "norms": panel.to_json_dict()["norms"],
            "trace_sigma": {"exact": panel.trace_sigma, "from_success_probability": trace_estimate},
            "rankings": {
                "by_return": by_return.model_dump(mode="json"),
                "by_variance": by_variance.model_dump(mode="json"),
            },
            "panel": self._panel_summary(),
        }


def write_frame(frame: pd.DataFrame, path) -> None:
    """결정적 CSV 기록"""
    frame.to_csv(path, index=False, lineterminator="\n")
