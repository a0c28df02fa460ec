"""Phase classification over an interaction/temperature grid.

Temperature enters only through the composed critical temperature: a point
at or above ``T_c(U/J)`` is Normal. Below it the label comes from two
zero-temperature mean-field diagnostics that depend on ``U/J`` alone, so a
sweep evaluates them once per ``U/J`` column.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dynamics import (
    bogoliubov_frequency,
    integrate,
    max_stable_dt,
    noise_sigma_for,
    spectral_peak,
    staggered_state,
)
from .errors import NumericalError
from .fock import LatticeParams
from .gravity.holography import HolographicMap, bec_critical_temperature, scaling_map

LABELS = ("Superfluid", "Mott", "TimeCrystal", "Normal")


@dataclass(frozen=True)
class Thresholds:
    """Classification thresholds.

    ``oscillation_snr`` compares the oscillation amplitude with its noise
    floor; ``min_u_over_j_tc`` keeps the time-crystal label inside the
    regime where the pair-tunneling model is meaningful.
    """

    condensate_fraction: float = 0.1
    oscillation_snr: float = 5.0
    min_u_over_j_tc: float = 5.0


@dataclass(frozen=True)
class PhaseConfig:
    """Lattice, map and integrator settings shared by every grid point."""

    J: float = 1.0
    num_sites: int = 16
    geometry: str = "ring"
    a: float = 1.0
    filling: int = 10
    L: float = 1.0
    map_constants: HolographicMap = HolographicMap(gamma=0.05)
    epsilon: float = 0.01
    noise: str | float = "weak"
    seed: int = 0
    periods: float = 30.0
    samples_per_period: int = 40
    method: str = "gl4"
    n_max: int | None = None

    def __post_init__(self):
        if self.filling < 1 or int(self.filling) != self.filling:
            raise ValueError("filling must be a positive integer")
        if self.J <= 0:
            raise ValueError("J must be positive")

    def lattice(self, u_over_j):
        return LatticeParams(
            J=self.J,
            U=u_over_j * self.J,
            num_sites=self.num_sites,
            num_particles=self.filling * self.num_sites,
            geometry=self.geometry,
            a=self.a,
        )


@dataclass(frozen=True)
class PhasePoint:
    u_over_j: float
    temperature: float
    phase_label: str
    condensate_fraction: float
    oscillation_amplitude: float
    tc_value: float
    noise_floor: float = math.nan
    flags: tuple = ()

    def __post_init__(self):
        if self.phase_label not in LABELS:
            raise ValueError(f"unknown label {self.phase_label!r}")

    @property
    def undetermined(self):
        return "undetermined" in self.flags


@dataclass(frozen=True)
class ColumnDiagnostics:
    """Temperature-independent diagnostics at one ``U/J``."""

    u_over_j: float
    tc_value: float
    tc_flag: str | None
    condensate_fraction: float
    oscillation_amplitude: float
    noise_floor: float
    flags: tuple = field(default=())


# --- composed critical temperature -------------------------------------------


def composed_tc(u_over_j, config=PhaseConfig()):
    """``T_c(U/J)`` with the charge ``Q(U/J)`` from the scaling map.

    Returns a ``TemperatureEstimate`` (negative values flagged).
    """
    _, _, Q = scaling_map(u_over_j, config.map_constants, config.L)
    lat = config.lattice(u_over_j)
    return bec_critical_temperature(
        config.J, lat.U, lat.coordination, float(config.filling), Q, config.num_sites, config.a
    )


# --- Gutzwiller condensate fraction ------------------------------------------


@dataclass(frozen=True)
class GutzwillerState:
    phi: float
    mu: float
    density: float
    energy: float

    @property
    def condensate_fraction(self):
        return self.phi**2 / self.density if self.density > 0 else 0.0


def _site_problem(n_max, U, zJ):
    n = np.arange(n_max + 1, dtype=float)
    hop = np.diag(np.sqrt(n[1:]), 1)
    hop = hop + hop.T
    onsite = 0.5 * U * n * (n - 1)

    def solve(phi, mu):
        H = np.diag(onsite - mu * n) - zJ * phi * hop
        w, v = np.linalg.eigh(H)
        return w[0] + zJ * phi**2, v[:, 0]

    return n, solve


def gutzwiller_ground_state(u_over_j, z, filling, J=1.0, n_max=None):
    """Single-site self-consistent ground state at integer ``filling``.

    ``phi`` minimizes the site energy at fixed chemical potential, and the
    chemical potential is tuned so that ``<n> = filling``. Inside a Mott
    lobe ``phi = 0`` and the density is pinned.
    """
    U = u_over_j * J
    zJ = z * J
    if n_max is None:
        n_max = 2 * filling + 10
    n, solve = _site_problem(n_max, U, zJ)
    phi_hi = math.sqrt(n_max)
    sqrt_n = np.sqrt(n[1:])

    def gap(p, mu):
        # stationarity of the site energy: phi = <b>
        vec = solve(p, mu)[1]
        return abs(float(vec[:-1] * vec[1:] @ sqrt_n)) - p

    def optimum(mu):
        res = minimize_scalar(lambda p: solve(p, mu)[0], bounds=(0.0, phi_hi), method="bounded", options={"xatol": 1e-12})
        phi = float(res.x)
        if phi > 1e-6:
            lo, hi = 0.9 * phi, min(1.1 * phi, phi_hi)
            if gap(lo, mu) > 0 > gap(hi, mu):
                phi = brentq(gap, lo, hi, args=(mu,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        e, vec = solve(phi, mu)
        return phi, float(vec**2 @ n), e

    def excess(mu):
        return optimum(mu)[1] - filling

    lo = U * (filling - 1) - 2 * zJ - 1.0
    hi = U * filling + 1.0
    while excess(lo) > 0:
        lo -= 2 * zJ + U + 1.0
    while excess(hi) < 0:
        hi += 2 * zJ + U + 1.0
    mu = brentq(excess, lo, hi, xtol=1e-12)
    phi, dens, e = optimum(mu)
    if phi < 1e-6:
        phi = 0.0
    return GutzwillerState(phi, mu, dens, e)


def mott_critical_u_over_j(z, filling):
    """Mean-field Mott point at integer filling: ``U/(zJ) = 2n + 1 + 2 sqrt(n(n+1))``."""
    n = filling
    return z * (2 * n + 1 + 2 * math.sqrt(n * (n + 1)))


# --- oscillation amplitude ---------------------------------------------------


def oscillation_diagnostics(u_over_j, config=PhaseConfig()):
    """Amplitude of the staggered density oscillation and its noise floor.

    The amplitude is ``sqrt(2)`` times the standard deviation of the real
    staggered order parameter; the floor rescales it by the square root of
    the spectral background-to-peak power ratio.
    """
    params = config.lattice(u_over_j)
    n0 = float(config.filling)
    omega = bogoliubov_frequency(params, n0)
    if not omega > 0:
        raise NumericalError("no stable density-wave mode", {"u_over_j": u_over_j})
    period = 2 * math.pi / omega
    t_max = config.periods * period
    dt_cap = min(max_stable_dt(params, n0 * (1 + config.epsilon) ** 2, n0), period / config.samples_per_period)
    steps = math.ceil(t_max / dt_cap)
    dt = t_max / steps
    state = staggered_state(params, math.sqrt(n0), config.epsilon)
    sigma = noise_sigma_for(config.noise, math.sqrt(n0), t_max)
    traj = integrate(state, params, t_max, dt, noise_sigma=sigma, seed=config.seed, method=config.method)
    signal = traj.order_parameter.real
    amp = math.sqrt(2.0) * float(np.std(signal))
    _, peak, background, _ = spectral_peak(traj.times, signal)
    floor = amp * math.sqrt(background / peak) if peak > 0 else math.inf
    return amp, floor


# --- classification ----------------------------------------------------------


def column_diagnostics(u_over_j, config=PhaseConfig()):
    """Everything about a ``U/J`` column except the temperature."""
    tc = composed_tc(u_over_j, config)
    z = config.lattice(u_over_j).coordination
    flags = []
    if tc.flag:
        flags.append(tc.flag)
    cf = gutzwiller_ground_state(u_over_j, z, config.filling, config.J, config.n_max).condensate_fraction
    try:
        amp, floor = oscillation_diagnostics(u_over_j, config)
    except NumericalError:
        amp, floor = math.nan, math.nan
        flags.append("undetermined")
    return ColumnDiagnostics(float(u_over_j), tc.value, tc.flag, cf, amp, floor, tuple(flags))


def label_point(column, T, thresholds=Thresholds()):
    """Decision tree applied to precomputed column diagnostics."""
    ordered = column.condensate_fraction >= thresholds.condensate_fraction
    if T >= column.tc_value:
        label = "Normal"
    elif (
        ordered
        and column.u_over_j >= thresholds.min_u_over_j_tc
        and column.oscillation_amplitude >= thresholds.oscillation_snr * column.noise_floor
    ):
        label = "TimeCrystal"
    elif ordered:
        label = "Superfluid"
    else:
        label = "Mott"
    return PhasePoint(
        column.u_over_j,
        float(T),
        label,
        column.condensate_fraction,
        column.oscillation_amplitude,
        column.tc_value,
        column.noise_floor,
        column.flags,
    )


def classify(u_over_j, T, config=PhaseConfig(), thresholds=Thresholds()):
    """Label one ``(U/J, T)`` point.

    A point whose dynamics fail keeps the label from the remaining
    diagnostics but carries the ``undetermined`` flag; plots drop it.
    """
    return label_point(column_diagnostics(u_over_j, config), T, thresholds)


def _column_task(args):
    u, config = args
    return column_diagnostics(u, config)


def sweep(u_over_j_grid, temperature_grid, config=PhaseConfig(), thresholds=Thresholds(), jobs=1):
    """Classify the Cartesian product, ordered by ``U/J`` then ``T``.

    Each column gets its own noise seed derived from ``config.seed`` and the
    column index, so results do not depend on ``jobs``.
    """
    us = [float(u) for u in u_over_j_grid]
    Ts = [float(t) for t in temperature_grid]
    if not us or not Ts:
        raise ValueError("grids must be non-empty")
    seeds = np.random.SeedSequence(config.seed).spawn(len(us))
    tasks = [(u, replace(config, seed=int(s.generate_state(1)[0]))) for u, s in zip(us, seeds)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_column_task, tasks))
    else:
        columns = [_column_task(t) for t in tasks]
    return [label_point(col, T, thresholds) for col in columns for T in Ts]


def default_grids():
    """20 x 20 grid, both axes log-spaced: ``U/J`` over [1, 50] and ``T`` over [0.25, 100]."""
    return np.geomspace(1.0, 50.0, 20), np.geomspace(0.25, 100.0, 20)


CSV_HEADER = ("u_over_j", "temperature", "label", "condensate_fraction", "oscillation_amplitude", "tc_value", "flags")


def points_to_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in points:
        w.writerow(
            [
                f"{p.u_over_j:.17g}",
                f"{p.temperature:.17g}",
                p.phase_label,
                f"{p.condensate_fraction:.17g}",
                f"{p.oscillation_amplitude:.17g}",
                f"{p.tc_value:.17g}",
                ";".join(p.flags),
            ]
        )
    return buf.getvalue()


def label_grid(points, u_values, temperatures):
    """Labels as an array indexed ``[temperature, u_over_j]``."""
    ui = {u: k for k, u in enumerate(u_values)}
    ti = {t: k for k, t in enumerate(temperatures)}
    grid = np.empty((len(temperatures), len(u_values)), dtype=object)
    for p in points:
        grid[ti[p.temperature], ui[p.u_over_j]] = p.phase_label
    return grid
