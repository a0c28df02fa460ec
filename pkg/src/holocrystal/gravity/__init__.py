"""Charged AdS black holes, scalar quasinormal modes and lattice maps."""

from .background import (
    BlackHoleBackground,
    TemperatureEstimate,
    critical_temperature,
    find_horizon,
    hawking_temperature,
    horizon_potential,
    mass_from_horizon,
    metric_f,
    metric_f_prime,
    sync_frequency,
)
from .holography import HolographicMap, bec_critical_temperature, scaling_map, spin_critical_temperature
from .qnm import (
    QnmResult,
    ScalarFieldParams,
    ShootingSettings,
    UnstableMassError,
    boundary_residual,
    check_pairing,
    falloff_exponents,
    radial_equation_rhs,
    solve_qnm,
)
from .scan import ExponentFit, ScanPoint, TcScanResult, fit_exponent, tc_scan

__all__ = [
    "BlackHoleBackground",
    "ExponentFit",
    "HolographicMap",
    "QnmResult",
    "ScalarFieldParams",
    "ScanPoint",
    "ShootingSettings",
    "TcScanResult",
    "TemperatureEstimate",
    "UnstableMassError",
    "bec_critical_temperature",
    "boundary_residual",
    "check_pairing",
    "critical_temperature",
    "falloff_exponents",
    "find_horizon",
    "fit_exponent",
    "hawking_temperature",
    "horizon_potential",
    "mass_from_horizon",
    "metric_f",
    "metric_f_prime",
    "radial_equation_rhs",
    "scaling_map",
    "solve_qnm",
    "spin_critical_temperature",
    "sync_frequency",
    "tc_scan",
]
