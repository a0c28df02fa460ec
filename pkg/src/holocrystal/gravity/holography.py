"""Closed-form maps between lattice and black-hole parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .background import TemperatureEstimate


def _condensation_term(J, U, z, psi0_sq):
    if U <= 0:
        raise ValueError("U must be positive")
    return 4.0 * z * J**2 * psi0_sq / U


def bec_critical_temperature(J, U, z, psi0_sq, q, N, a):
    """``4 z J^2 |psi0|^2 / U - q^2 N / (4 pi a^3)`` with ``k_B = 1``.

    A negative value is returned with the ``charge-suppressed`` flag.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    val = _condensation_term(J, U, z, psi0_sq) - q**2 * N / (4.0 * math.pi * a**3)
    return TemperatureEstimate(val, "charge-suppressed" if val < 0 else None)


def spin_critical_temperature(J, U, z, psi0_sq, J_ex, s, N, a):
    """``4 z J^2 |psi0|^2 / U - J_ex s^2 N / (4 pi a^3)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    val = _condensation_term(J, U, z, psi0_sq) - J_ex * s**2 * N / (4.0 * math.pi * a**3)
    return TemperatureEstimate(val, "exchange-suppressed" if val < 0 else None)


@dataclass(frozen=True)
class HolographicMap:
    """Map constants and the boundary length scales.

    ``correlation_length`` is the boundary scale ``a N^{1/3}``; it is kept
    apart from the ODLRO decay length fitted in the dynamics module.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    correlation_length: float | None = None
    system_scale: float | None = None

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) <= 0:
            raise ValueError("map constants must be positive")

    @classmethod
    def for_lattice(cls, N, a=1.0, alpha=1.0, beta=1.0, gamma=1.0):
        scale = a * N ** (1.0 / 3.0)
        return cls(alpha, beta, gamma, scale, scale)


def scaling_map(u_over_j, constants=HolographicMap(), L=1.0):
    """``(m, r_h, Q)`` from the interaction ratio.

    ``m L = alpha sqrt(U/J)``, ``r_h = beta (m L^3)^{1/3}`` and
    ``Q = gamma sqrt(U/J)`` with ``hbar = 1``.
    """
    if u_over_j < 0:
        raise ValueError("U/J must be non-negative")
    root = math.sqrt(u_over_j)
    m = constants.alpha * root / L
    r_h = constants.beta * (m * L**3) ** (1.0 / 3.0)
    Q = constants.gamma * root
    return m, r_h, Q
