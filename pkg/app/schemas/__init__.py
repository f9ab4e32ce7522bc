"""
스키마 패키지
모든 Pydantic 도메인 모델을 포함합니다.
"""

from .common import ErrorDetail, ErrorResponse, FrozenModel
from .hamiltonian import HamiltonianParts, SimulatedEvolution
from .hhl import HHLConfig, HHLResult, SpectralComponent
from .market import FactorModelSpec, PriceSeries, ReturnsPanel
from .portfolio import (
    BudgetMode,
    FrontierCurve,
    FrontierPoint,
    FrontierWarning,
    KKTSystem,
    PortfolioSolution,
    QuantumFrontierCurve,
    QuantumFrontierPoint,
)
from .quantum import DensityMatrix, QuantumState, RegisterLayout
from .readout import AssetRanking, PortfolioComparison, SamplingErrorReport, SamplingResult, SwapTestEstimate
from .run import RunConfig
from .state_prep import KPTree, PrepOutcome, QramOracle, SparsityOracle, TraceSigmaEstimate
from .verification import CriterionResult, VerificationReport

__all__ = [
    "AssetRanking",
    "BudgetMode",
    "CriterionResult",
    "DensityMatrix",
    "ErrorDetail",
    "ErrorResponse",
    "FactorModelSpec",
    "FrontierCurve",
    "FrontierPoint",
    "FrontierWarning",
    "FrozenModel",
    "HHLConfig",
    "HHLResult",
    "HamiltonianParts",
    "KKTSystem",
    "KPTree",
    "PortfolioComparison",
    "PortfolioSolution",
    "PrepOutcome",
    "PriceSeries",
    "QramOracle",
    "QuantumFrontierCurve",
    "QuantumFrontierPoint",
    "QuantumState",
    "RegisterLayout",
    "ReturnsPanel",
    "RunConfig",
    "SamplingErrorReport",
    "SamplingResult",
    "SimulatedEvolution",
    "SparsityOracle",
    "SpectralComponent",
    "SwapTestEstimate",
    "TraceSigmaEstimate",
    "VerificationReport",
]
