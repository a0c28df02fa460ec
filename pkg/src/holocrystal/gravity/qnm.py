"""Quasinormal modes of a charged scalar on a charged AdS black hole.

The radial equation for an s-wave with time dependence ``exp(-i omega t)`` is

``f psi'' + (f' + p f / r) psi' + (varpi^2 / f - m^2) psi - lambda psi^3 = 0``

with ``varpi = omega - q Phi(r)`` and ``p = 2`` for a 2-sphere. The mode
solver drops the cubic term and writes ``psi = exp(-i S) R`` with
``S' = varpi / f``, so that ingoing solutions have a regular ``R``:

``(r^p f R')' - 2 i varpi r^p R' - i (r^p varpi)' R - m^2 r^p R = 0``.

Every coefficient is a polynomial in ``r``, so the horizon Taylor series
follows from an exact recurrence. The solution is carried to the boundary
in ``x = 1/r`` with fixed-step RK4, the source coefficient of the
``x^{Delta_-}`` fall-off is read off, and Newton's method in complex
``omega`` drives it to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .background import horizon_potential

DEFAULT_SPHERE_DIM = 2


class UnstableMassError(ValueError):
    """Scalar mass below the bound that keeps the fall-off exponents real."""


@dataclass(frozen=True)
class ScalarFieldParams:
    m: float = 0.0
    lam: float = 0.0
    q: float = 0.0

    @property
    def m2(self):
        return self.m**2


def falloff_exponents(m2, L, d=4):
    """``Delta_pm = ((d-1) +- sqrt((d-1)^2 + 4 m^2 L^2)) / 2``.

    Raises
    ------
    UnstableMassError
        When the exponents are complex or coincide.
    """
    disc = (d - 1) ** 2 + 4.0 * m2 * L**2
    if disc <= 0:
        raise UnstableMassError(
            f"m^2 L^2 = {m2 * L**2:g} is at or below {-(d - 1) ** 2 / 4:g}; fall-off exponents are not real and distinct"
        )
    s = math.sqrt(disc)
    return ((d - 1) - s) / 2.0, ((d - 1) + s) / 2.0


def radial_equation_rhs(r, psi, dpsi, omega, scalar, background, sphere_dim=DEFAULT_SPHERE_DIM):
    """Second derivative ``psi''`` from the full (nonlinear) radial equation."""
    if r <= background.r_h:
        raise ValueError("radial equation is evaluated strictly outside the horizon")
    f = background.f(r)
    fp = background.f_prime(r)
    varpi = omega - scalar.q * horizon_potential(background.Q, r)
    return -((fp + sphere_dim * f / r) * dpsi + (varpi**2 / f - scalar.m2) * psi - scalar.lam * psi**3) / f


@dataclass(frozen=True)
class QnmResult:
    omega: complex
    boundary_residual: float
    iterations: int
    converged: bool
    falloff_exponents: tuple
    trace: tuple = field(default=(), repr=False)
    diagnostic: str | None = None
    sync_frequency: float | None = None

    @property
    def sync_gap(self):
        if self.sync_frequency is None:
            return None
        return self.omega.real - self.sync_frequency


@dataclass(frozen=True)
class ShootingSettings:
    """Numerical knobs of the shooting solver.

    ``steps`` is the RK4 step count in each of the two integration
    segments; ``epsilon`` places the start point at ``r_h (1 + epsilon)``.
    """

    epsilon: float = 1e-4
    series_order: int = 8
    steps: int = 1000
    boundary_x_factor: float = 1e-3
    tol: float = 1e-8
    max_iter: int = 40
    fd_step: float = 1e-7
    step_tol: float = 1e-10


def _shift(poly, r_h):
    return poly(Polynomial([r_h, 1.0])).coef


class _ModeProblem:
    """Coefficients of the regular-at-horizon equation for one background."""

    def __init__(self, background, scalar, sphere_dim=DEFAULT_SPHERE_DIM):
        self.bg = background
        self.scalar = scalar
        self.p = sphere_dim
        L, mu, Q = background.L, background.mu, background.Q
        p = sphere_dim
        self.delta = falloff_exponents(scalar.m2, L)
        self.c_phi = scalar.q * Q / (4.0 * math.pi)
        # r^p f, r^p, r^(p-1) as polynomials in r
        rp = Polynomial([0.0] * p + [1.0])
        rp1 = Polynomial([0.0] * (p - 1) + [1.0])
        P = rp + Polynomial([0.0] * (p + 2) + [1.0 / L**2]) - mu * rp1
        if Q != 0.0:
            P = P + Q**2 * Polynomial([0.0] * (p - 2) + [1.0]) if p >= 2 else P
        self.P = _shift(P, background.r_h)
        self.P[0] = 0.0
        self.Wa = _shift(rp, background.r_h)
        self.Wb = _shift(rp1, background.r_h)
        self.M = scalar.m2 * self.Wa

    def horizon_series(self, omegas, order):
        """Taylor coefficients ``a_n`` of ``R`` in ``y = r - r_h`` (``a_0 = 1``)."""
        w = np.atleast_1d(np.asarray(omegas, dtype=complex))

        def coef(arr, k):
            return arr[k] if 0 <= k < len(arr) else 0.0

        W = [coef(self.Wa, k) * w - self.c_phi * coef(self.Wb, k) for k in range(order + 2)]
        a = [np.ones_like(w)]
        denominators = []
        for N in range(order):
            s = np.zeros_like(w)
            for n in range(0, N + 1):
                s += (N + 1) * coef(self.P, N + 2 - n) * n * a[n]
                s += -2j * W[N + 1 - n] * n * a[n]
                k = N - n
                s += -1j * (k + 1) * W[k + 1] * a[n]
                s += -coef(self.M, k) * a[n]
            den = (N + 1) * ((N + 1) * self.P[1] - 2j * W[0])
            denominators.append(den)
            a.append(-s / den)
        return np.array(a), np.array(denominators)

    def ode_coefficients(self, x, w):
        """``R_xx = c1 R_x + c0 R`` in ``x = 1/r``."""
        a1, b1, a0, b0 = self.linear_coefficients(x)
        return a1 + b1 * w, a0 + b0 * w

    def linear_coefficients(self, x):
        """Split ``c1 = a1 + b1 omega`` and ``c0 = a0 + b0 omega``."""
        bg = self.bg
        r = 1.0 / x
        f = bg.f(r)
        fp = bg.f_prime(r)
        c, p = self.c_phi, self.p
        A2 = f * x**4
        a1 = -(2.0 * f * x**3 - x**2 * (fp + p * f * x) - 2j * c * x**3) / A2
        b1 = -2j * x**2 / A2
        a0 = -(-1j * c * x**2 + 1j * p * c * x**2 - self.scalar.m2) / A2
        b0 = 1j * p * x / A2
        return a1, b1, a0, b0

    def segment_tables(self, x_of_s, jac_of_s, s0, s1, n):
        """Coefficients times the Jacobian at every RK4 node (half steps)."""
        key = (s0, s1, n)
        cache = self.__dict__.setdefault("_tables", {})
        if key not in cache:
            nodes = s0 + (s1 - s0) * np.arange(2 * n + 1) / (2 * n)
            x = x_of_s(nodes)
            jac = jac_of_s(nodes, x)
            a1, b1, a0, b0 = self.linear_coefficients(x)
            cache[key] = (jac, jac * a1, jac * b1, jac * a0, jac * b0)
        return cache[key]


def _rk4_linear(tables, w, R, D, s0, s1, n):
    """RK4 for ``R' = J D``, ``D' = J (c1 D + c0 R)`` on tabulated coefficients."""
    jac, ja1, jb1, ja0, jb0 = tables
    h = (s1 - s0) / n
    for k in range(n):
        i = 2 * k
        j0, j1, j2 = jac[i], jac[i + 1], jac[i + 2]
        c1 = (ja1[i] + jb1[i] * w, ja1[i + 1] + jb1[i + 1] * w, ja1[i + 2] + jb1[i + 2] * w)
        c0 = (ja0[i] + jb0[i] * w, ja0[i + 1] + jb0[i + 1] * w, ja0[i + 2] + jb0[i + 2] * w)
        kR1 = j0 * D
        kD1 = c1[0] * D + c0[0] * R
        R2, D2 = R + 0.5 * h * kR1, D + 0.5 * h * kD1
        kR2 = j1 * D2
        kD2 = c1[1] * D2 + c0[1] * R2
        R3, D3 = R + 0.5 * h * kR2, D + 0.5 * h * kD2
        kR3 = j1 * D3
        kD3 = c1[1] * D3 + c0[1] * R3
        R4, D4 = R + h * kR3, D + h * kD3
        kR4 = j2 * D4
        kD4 = c1[2] * D4 + c0[2] * R4
        R = R + (h / 6.0) * (kR1 + 2 * kR2 + 2 * kR3 + kR4)
        D = D + (h / 6.0) * (kD1 + 2 * kD2 + 2 * kD3 + kD4)
    return R, D


def boundary_coefficients(problem, omegas, settings=ShootingSettings()):
    """Source and response coefficients ``(A, B)`` for an array of frequencies.

    Returns ``A``, ``B`` and the smallest horizon-recurrence denominator.
    """
    w = np.atleast_1d(np.asarray(omegas, dtype=complex))
    bg = problem.bg
    r_h = bg.r_h
    eps = settings.epsilon
    a, dens = problem.horizon_series(w, settings.series_order)
    y0 = eps * r_h
    n = np.arange(a.shape[0])[:, None]
    R = np.sum(a * y0**n, axis=0)
    R_r = np.sum(n[1:] * a[1:] * y0 ** (n[1:] - 1), axis=0)
    r0 = r_h + y0
    x_h = 1.0 / r_h
    x0 = 1.0 / r0
    R_x = -(r0**2) * R_r

    # segment 1: s = ln((x_h - x)/x_h), dx/ds = -(x_h - x)
    s0, s1 = math.log((x_h - x0) / x_h), math.log(0.5)
    tab = problem.segment_tables(lambda s: x_h * (1.0 - np.exp(s)), lambda s, x: -(x_h - x), s0, s1, settings.steps)
    R, D = _rk4_linear(tab, w, R, R_x, s0, s1, settings.steps)
    # segment 2: s = ln x, dx/ds = x
    x_end = settings.boundary_x_factor * min(x_h, 1.0 / bg.L)
    s0, s1 = math.log(0.5 * x_h), math.log(x_end)
    tab = problem.segment_tables(np.exp, lambda s, x: x, s0, s1, settings.steps)
    R, D = _rk4_linear(tab, w, R, D, s0, s1, settings.steps)
    Y = (R, D)
    dm, dp = problem.delta
    R, xR = Y[0], x_end * Y[1]
    A = (dp * R - xR) / ((dp - dm) * x_end**dm)
    B = (xR - dm * R) / ((dp - dm) * x_end**dp)
    return A, B, float(np.min(np.abs(dens))) if dens.size else math.inf


def _residual(problem, A, B):
    # compare the two fall-offs where the boundary region begins
    x_ref = min(1.0 / problem.bg.r_h, 1.0 / problem.bg.L)
    dm, dp = problem.delta
    return np.abs(A * x_ref**dm) / np.maximum(np.abs(B * x_ref**dp), 1e-300)


def solve_qnm(background, scalar, omega_guess, settings=ShootingSettings(), sphere_dim=DEFAULT_SPHERE_DIM):
    """Quasinormal frequency nearest ``omega_guess`` by shooting and Newton.

    Returns an unconverged :class:`QnmResult` (with the iteration trace)
    rather than raising when Newton stalls.
    """
    problem = _ModeProblem(background, scalar, sphere_dim)
    sync = scalar.q * horizon_potential(background.Q, background.r_h) if scalar.q else None
    special = 1e-8 * background.f_prime(background.r_h) * background.r_h**sphere_dim

    def evaluate(w):
        h = settings.fd_step * max(1.0, abs(w))
        with np.errstate(all="ignore"):
            A, B, min_den = boundary_coefficients(problem, [w, w + h, w - h], settings)
        dA = (A[1] - A[2]) / (2 * h)
        res = float(_residual(problem, A[:1], B[:1])[0])
        return A[0], dA, res, min_den

    w = complex(omega_guess)
    trace = []
    diagnostic = None
    last_step = math.inf
    A, dA, residual, min_den = evaluate(w)
    for it in range(1, settings.max_iter + 1):
        if min_den < special:
            diagnostic = "frequency at a horizon special point (recurrence denominator vanishes)"
            break
        trace.append((w, residual))
        if not (np.isfinite(A) and np.isfinite(dA)):
            diagnostic = "non-finite boundary data"
            break
        if residual < settings.tol and last_step <= settings.step_tol * max(1.0, abs(w)):
            return QnmResult(w, residual, it, True, problem.delta, tuple(trace), None, sync)
        # B is only meaningful near a root (A's subleading terms leak into it),
        # so Newton works on the analytic source coefficient alone
        if dA == 0:
            diagnostic = "vanishing derivative in Newton step"
            break
        step = A / dA
        limit = 0.5 * max(1.0, abs(w))
        if abs(step) > limit:
            step *= limit / abs(step)
        # backtrack until |A| decreases
        for _ in range(8):
            trial = w - step
            tA, tdA, tres, tden = evaluate(trial)
            if np.isfinite(tA) and abs(tA) < abs(A):
                break
            step *= 0.5
        w, A, dA, residual, min_den = trial, tA, tdA, tres, tden
        last_step = abs(step)
    return QnmResult(w, residual, len(trace), False, problem.delta, tuple(trace), diagnostic, sync)


def boundary_residual(background, scalar, omega, settings=ShootingSettings(), sphere_dim=DEFAULT_SPHERE_DIM):
    """Normalized source coefficient at a single frequency."""
    problem = _ModeProblem(background, scalar, sphere_dim)
    A, B, _ = boundary_coefficients(problem, [omega], settings)
    return float(_residual(problem, A, B)[0])


def check_pairing(background, omega, settings=ShootingSettings()):
    """Solve from ``omega`` and from ``-conj(omega)`` for a neutral scalar."""
    scalar = ScalarFieldParams()
    first = solve_qnm(background, scalar, omega, settings)
    second = solve_qnm(background, scalar, -np.conj(first.omega), settings)
    return first, second
