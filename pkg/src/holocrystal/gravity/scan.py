"""Tracking a quasinormal mode across a family of black holes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .background import BlackHoleBackground, critical_temperature
from .qnm import ShootingSettings, falloff_exponents, solve_qnm


@dataclass(frozen=True)
class ScanPoint:
    r_h: float
    T: float
    omega: complex
    residual: float
    converged: bool


@dataclass(frozen=True)
class ExponentFit:
    p: float
    p_low: float
    p_high: float
    num_points: int


@dataclass(frozen=True)
class TcScanResult:
    """Outcome of :func:`tc_scan`.

    ``T_c`` is the temperature where ``Im omega`` of the tracked mode
    crosses zero; ``closed_form`` is the large-horizon formula evaluated at
    the crossing radius. ``dim_omega_dT`` is the slope of ``Im omega`` with
    respect to ``T`` there, reported as a diagnostic only.
    """

    points: tuple
    onset_found: bool
    message: str
    T_c: float | None = None
    r_h_c: float | None = None
    omega_c: complex | None = None
    cell: int | None = None
    closed_form: float | None = None
    closed_form_flag: str | None = None
    sync_frequency_c: float | None = None
    dim_omega_dT: float | None = None
    exponent: ExponentFit | None = None
    refinements: tuple = field(default=(), repr=False)

    def rows(self):
        return [(p.T, p.omega.real, p.omega.imag, p.residual, p.converged) for p in self.points]

    def record(self):
        fit = self.exponent
        return {
            "onset_found": self.onset_found,
            "message": self.message,
            "T_c_dynamical": self.T_c,
            "r_h_c": self.r_h_c,
            "omega_c": None if self.omega_c is None else [self.omega_c.real, self.omega_c.imag],
            "crossing_cell": self.cell,
            "T_c_closed_form": self.closed_form,
            "T_c_closed_form_flag": self.closed_form_flag,
            "sync_frequency_at_crossing": self.sync_frequency_c,
            "d_im_omega_dT": self.dim_omega_dT,
            "exponent": None if fit is None else {"p": fit.p, "p_low": fit.p_low, "p_high": fit.p_high, "num_points": fit.num_points},
        }


def _solve(r_h, L, Q, scalar, guess, settings):
    bg = BlackHoleBackground.from_horizon(r_h, L, Q)
    res = solve_qnm(bg, scalar, guess, settings)
    return bg, res


def fit_exponent(T, im_omega, T_c, confidence=0.95):
    """Least squares of ``log|Im omega|`` against ``log|T - T_c|``."""
    T = np.asarray(T, dtype=float)
    im = np.asarray(im_omega, dtype=float)
    ok = (np.abs(T - T_c) > 0) & (np.abs(im) > 0)
    if ok.sum() < 3:
        return None
    xs = np.log(np.abs(T[ok] - T_c))
    ys = np.log(np.abs(im[ok]))
    res = stats.linregress(xs, ys)
    dof = ok.sum() - 2
    half = stats.t.ppf(0.5 + confidence / 2, dof) * res.stderr if dof > 0 else math.inf
    return ExponentFit(float(res.slope), float(res.slope - half), float(res.slope + half), int(ok.sum()))


def tc_scan(r_h_values, L, Q, scalar, omega_guess=None, settings=ShootingSettings(), bisection_tol=1e-7, max_bisect=40):
    """Scan the fixed-charge family ``r_h -> (L, Q, mu(r_h))`` for an onset.

    The lowest mode is continued along ``r_h_values`` (in the given order),
    each solve seeded by extrapolating the two previous frequencies. The
    first sign change of ``Im omega`` is refined by bisection in ``r_h``.
    """
    r_vals = [float(r) for r in r_h_values]
    if len(r_vals) < 2:
        raise ValueError("need at least two family members")
    if omega_guess is None:
        omega_guess = falloff_exponents(scalar.m2, L)[1] - 0.01j
    points = []
    history = []
    guess = complex(omega_guess)
    for r in r_vals:
        if len(history) >= 2:
            (r1, w1), (r2, w2) = history[-2:]
            guess = w2 + (w2 - w1) * (r - r2) / (r2 - r1)
        elif history:
            guess = history[-1][1]
        bg, res = _solve(r, L, Q, scalar, guess, settings)
        points.append(ScanPoint(r, bg.temperature, res.omega, res.boundary_residual, res.converged))
        if res.converged:
            history.append((r, res.omega))
    cell = None
    for k in range(len(points) - 1):
        a, b = points[k], points[k + 1]
        if a.converged and b.converged and np.sign(a.omega.imag) != np.sign(b.omega.imag):
            cell = k
            break
    if cell is None:
        return TcScanResult(tuple(points), False, "no onset found")
    lo, hi = points[cell], points[cell + 1]
    refinements = []
    for _ in range(max_bisect):
        if abs(hi.r_h - lo.r_h) <= bisection_tol * max(abs(lo.r_h), 1e-300):
            break
        mid_r = 0.5 * (lo.r_h + hi.r_h)
        guess = 0.5 * (lo.omega + hi.omega)
        bg, res = _solve(mid_r, L, Q, scalar, guess, settings)
        mid = ScanPoint(mid_r, bg.temperature, res.omega, res.boundary_residual, res.converged)
        refinements.append(mid)
        if not mid.converged:
            break
        if np.sign(mid.omega.imag) == np.sign(lo.omega.imag):
            lo = mid
        else:
            hi = mid
    # linear interpolation of Im omega inside the final bracket
    t = lo.omega.imag / (lo.omega.imag - hi.omega.imag)
    r_c = lo.r_h + t * (hi.r_h - lo.r_h)
    bg_c = BlackHoleBackground.from_horizon(r_c, L, Q)
    T_c = bg_c.temperature
    omega_c = lo.omega + t * (hi.omega - lo.omega)
    dT = hi.T - lo.T
    slope = (hi.omega.imag - lo.omega.imag) / dT if dT != 0 else math.nan
    cf = critical_temperature(r_c, L, Q)
    # exponent from the damped (stable) side of the grid
    stable = [p for p in points if p.converged and p.omega.imag < 0]
    fit = fit_exponent([p.T for p in stable], [p.omega.imag for p in stable], T_c)
    sync = scalar.q * Q / (4 * math.pi * r_c)
    return TcScanResult(
        tuple(points),
        True,
        "onset found",
        T_c=T_c,
        r_h_c=r_c,
        omega_c=omega_c,
        cell=cell,
        closed_form=cf.value,
        closed_form_flag=cf.flag,
        sync_frequency_c=sync,
        dim_omega_dT=slope,
        exponent=fit,
        refinements=tuple(refinements),
    )
