"""Charged black holes in four-dimensional anti-de Sitter space.

Units ``G = hbar = k_B = 1``. The metric function is

``f(r) = 1 + r^2/L^2 - mu/r + Q^2/r^2``

and ``r^2 f(r) = r^4/L^2 + r^2 - mu r + Q^2`` is a convex quartic, which
makes the outer horizon easy to isolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import ExtremalHorizonError, HorizonError, NakedSingularityError

SPACETIME_DIMENSION = 4
EXTREMAL_TOL = 1e-10


def metric_f(r, L, mu, Q):
    return 1.0 + r**2 / L**2 - mu / r + Q**2 / r**2


def metric_f_prime(r, L, mu, Q):
    return 2.0 * r / L**2 + mu / r**2 - 2.0 * Q**2 / r**3


def _quartic(r, L, mu, Q):
    return r**4 / L**2 + r**2 - mu * r + Q**2


def _quartic_prime(r, L, mu):
    return 4.0 * r**3 / L**2 + 2.0 * r - mu


def find_horizon(L, mu, Q=0.0):
    """Outer horizon radius, the largest positive root of ``f``.

    The quartic ``r^2 f`` has a single minimum at ``r*``; the horizon lies
    above it. A bracketing solve is polished by safeguarded Newton steps.

    Raises
    ------
    NakedSingularityError
        ``f > 0`` for all ``r > 0``.
    ExtremalHorizonError
        The minimum touches zero (a double root).
    """
    if L <= 0:
        raise ValueError("L must be positive")
    if mu <= 0:
        raise NakedSingularityError(f"mu = {mu:g} <= 0 leaves no horizon")
    upper = min((mu * L**2) ** (1.0 / 3.0), mu)
    r_star = brentq(_quartic_prime, 0.0, upper, args=(L, mu), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    p_min = _quartic(r_star, L, mu, Q)
    scale = max(Q**2, mu * r_star, r_star**2)
    if p_min > EXTREMAL_TOL * scale:
        raise NakedSingularityError(f"f > 0 on (0, inf) for L={L:g}, mu={mu:g}, Q={Q:g}")
    if abs(p_min) <= EXTREMAL_TOL * scale:
        raise ExtremalHorizonError(f"double root at r = {r_star:.12g}; extremal background")
    hi = max(mu, 1.0, r_star) * 2.0
    while _quartic(hi, L, mu, Q) <= 0:
        hi *= 2.0
    r = brentq(_quartic, r_star, hi, args=(L, mu, Q), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(5):
        d = _quartic_prime(r, L, mu)
        step = _quartic(r, L, mu, Q) / d if d > 0 else 0.0
        if r - step <= r_star:
            break
        r -= step
        if abs(step) <= 1e-16 * r:
            break
    return r


def mass_from_horizon(r_h, L, Q=0.0):
    """``mu = r_h (1 + r_h^2/L^2 + Q^2/r_h^2)``."""
    return r_h * (1.0 + r_h**2 / L**2 + Q**2 / r_h**2)


@dataclass(frozen=True)
class BlackHoleBackground:
    """Non-extremal charged AdS black hole.

    ``r_h`` is computed on construction; ``from_horizon`` builds the
    background with a prescribed horizon instead.
    """

    L: float
    mu: float
    Q: float = 0.0
    r_h: float = None

    def __post_init__(self):
        if self.r_h is None:
            object.__setattr__(self, "r_h", find_horizon(self.L, self.mu, self.Q))
        if self.f_prime(self.r_h) <= 0:
            raise ExtremalHorizonError("non-positive surface gravity")

    @classmethod
    def from_horizon(cls, r_h, L, Q=0.0):
        if r_h <= 0:
            raise ValueError("r_h must be positive")
        mu = mass_from_horizon(r_h, L, Q)
        # largest root must still be r_h: the quartic minimum lies below it
        fp = metric_f_prime(r_h, L, mu, Q)
        if fp <= 0:
            raise ExtremalHorizonError(f"r_h = {r_h:g} is not an outer non-extremal horizon for Q = {Q:g}")
        return cls(L, mu, Q, r_h)

    @property
    def Lambda(self):
        d = SPACETIME_DIMENSION
        return -d * (d - 1) / (2.0 * self.L**2)

    @property
    def spacetime_dimension(self):
        return SPACETIME_DIMENSION

    def f(self, r):
        return metric_f(r, self.L, self.mu, self.Q)

    def f_prime(self, r):
        return metric_f_prime(r, self.L, self.mu, self.Q)

    def potential(self, r):
        return horizon_potential(self.Q, r)

    @property
    def temperature(self):
        return hawking_temperature(self)

    @property
    def horizon_residual(self):
        return abs(self.f(self.r_h))


def hawking_temperature(background):
    """``T = f'(r_h) / 4 pi``."""
    fp = background.f_prime(background.r_h)
    if fp <= 0:
        raise HorizonError("zero or negative surface gravity")
    return fp / (4.0 * math.pi)


@dataclass(frozen=True)
class TemperatureEstimate:
    """A closed-form temperature; ``flag`` names the regime of a negative value."""

    value: float
    flag: str | None = None

    @property
    def flagged(self):
        return self.flag is not None


def critical_temperature(r_h, L, Q=0.0):
    """Large-horizon temperature with the ``1/r_h`` term dropped.

    ``(3 r_h / L^2 - Q^2 / r_h^3) / 4 pi``; negative values are returned
    with ``charge_dominated`` set.
    """
    if r_h <= 0 or L <= 0:
        raise ValueError("r_h and L must be positive")
    val = (3.0 * r_h / L**2 - Q**2 / r_h**3) / (4.0 * math.pi)
    return TemperatureEstimate(val, "charge-dominated" if val < 0 else None)


def horizon_potential(Q, r_h):
    """Electrostatic potential ``Q / (4 pi r)``."""
    if r_h <= 0:
        raise ValueError("radius must be positive")
    return Q / (4.0 * math.pi * r_h)


def sync_frequency(q, Q, r_h):
    """Frequency locked to the horizon potential, ``q Phi(r_h)``."""
    return q * horizon_potential(Q, r_h)
