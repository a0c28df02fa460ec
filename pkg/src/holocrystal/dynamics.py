"""Mean-field dynamics of the lattice condensate.

Each site carries a complex amplitude ``psi_j`` evolved with

``i dpsi_j/dt = -J sum_k psi_k - 2 s K psi_j^* sum_k psi_k^2 + U |psi_j|^2 psi_j``

where the sums run over nearest neighbours and ``s`` is ``pair_sign``.
The total norm ``sum |psi_j|^2`` is an exact invariant; the default
two-stage Gauss-Legendre integrator preserves it to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoOscillationError, StepSizeError
from .fock import LatticeParams, density_correlations, one_body_density_matrix, order_parameter_phases

_SQ3 = math.sqrt(3.0)
_GL_A = np.array([[0.25, 0.25 - _SQ3 / 6], [0.25 + _SQ3 / 6, 0.25]])
_GL_DC = _SQ3 / 3
METHODS = ("gl4", "rk4")
NOISE_PRESETS = {"none": 0.0, "weak": 0.1, "strong": 0.5}
MAX_NORM_DRIFT = 1e-4


@dataclass(frozen=True, eq=False)
class CondensateState:
    """Site amplitudes of the symmetry-broken condensate.

    Attributes
    ----------
    amplitudes : ndarray of complex
        ``psi_j`` per site.
    psi0 : complex
        Reference amplitude the state was built from.
    site_positions : ndarray
        Positions in units of the lattice constant.
    norm : float
        ``sum |psi_j|^2`` recorded at construction.
    """

    amplitudes: np.ndarray
    psi0: complex
    site_positions: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        norm = float(np.sum(np.abs(amps) ** 2))
        if not math.isfinite(norm):
            raise ValueError("state norm is not finite")
        object.__setattr__(self, "norm", norm)

    @property
    def densities(self):
        return np.abs(self.amplitudes) ** 2


def uniform_state(params, psi0=1.0):
    pos = params.positions() / params.a
    return CondensateState(np.full(params.num_sites, psi0, dtype=complex), psi0, pos)


def staggered_state(params, psi0=1.0, epsilon=0.01):
    """``psi_j = psi0 (1 + epsilon (-1)^j)`` with the zone-corner sign pattern."""
    pos = params.positions() / params.a
    sign = order_parameter_phases(pos).real
    return CondensateState(psi0 * (1.0 + epsilon * sign), psi0, pos)


def random_phase_state(params, psi0=1.0, seed=0):
    """Uniform modulus with independent uniformly random phases."""
    rng = np.random.default_rng(seed)
    pos = params.positions() / params.a
    phases = rng.uniform(0.0, 2 * np.pi, params.num_sites)
    return CondensateState(abs(psi0) * np.exp(1j * phases), psi0, pos)


INITIAL_CONDITIONS = {"uniform": uniform_state, "staggered": staggered_state, "random-phase": random_phase_state}


def _couplings(params):
    return params.J, params.U, params.pair_sign * params.coupling_K


def neighbour_table(params):
    """``(N, z)`` neighbour indices padded with ``N`` (a phantom zero site)."""
    n = params.num_sites
    lists = [[] for _ in range(n)]
    for i, j in params.bonds:
        lists[i].append(j)
        lists[j].append(i)
    width = max((len(l) for l in lists), default=0)
    table = np.full((n, max(width, 1)), n, dtype=np.intp)
    for i, l in enumerate(lists):
        table[i, : len(l)] = l
    return table


def make_rhs(params, neighbours=None):
    """Right-hand side ``f(psi)`` with couplings and neighbour table bound once.

    ``psi`` may be a single state ``(N,)`` or a batch ``(B, N)``.
    """
    n = params.num_sites
    table = neighbour_table(params) if neighbours is None else neighbours
    J, U, K = _couplings(params)

    def f(psi):
        ext = np.zeros(psi.shape[:-1] + (n + 1,), dtype=complex)
        ext[..., :n] = psi
        nb = ext[..., table]
        force = -J * nb.sum(axis=-1)
        if K != 0.0:
            force -= 2.0 * K * np.conj(psi) * (nb * nb).sum(axis=-1)
        if U != 0.0:
            force += U * (psi.real**2 + psi.imag**2) * psi
        return -1j * force

    return f


def meanfield_rhs(amplitudes, params, neighbours=None):
    """Time derivative of the site amplitudes (``hbar = 1``).

    Accepts a single state ``(N,)`` or a batch ``(B, N)``.
    """
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.shape[-1] != params.num_sites:
        raise ValueError("state and lattice have different numbers of sites")
    return make_rhs(params, neighbours)(psi)


def bogoliubov_frequency(params, density, gamma=-1.0):
    """Linearized frequency of a density modulation on the uniform state.

    ``gamma`` is the lattice structure factor ``(1/z) sum_delta cos(k.delta)``;
    ``-1`` is the zone-corner (staggered) mode. Returns ``nan`` for an
    unstable mode.
    """
    z = params.coordination
    J, U, K = _couplings(params)
    n = density
    a_minus_b = z * (1 - gamma) * (J + 4 * K * n)
    a_plus_b = z * J * (1 - gamma) - 4 * z * K * n * gamma + 2 * U * n
    prod = a_minus_b * a_plus_b
    return math.sqrt(prod) if prod >= 0 else math.nan


def predicted_frequency(params, density):
    """Density-wave frequency law ``4 z K |psi0|^2``."""
    return 4.0 * params.coordination * params.coupling_K * density


def max_stable_dt(params, density_max, density_mean=None):
    """Largest step allowed by the ``dt < 0.1 / (fastest rate)`` rule."""
    n_mean = density_max if density_mean is None else density_mean
    rate = max(abs(params.U) * density_max, params.coordination * abs(params.J), predicted_frequency(params, n_mean))
    return math.inf if rate == 0 else 0.1 / rate


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled mean-field evolution.

    ``densities`` has shape ``(len(times), N)``; ``order_parameter`` is the
    staggered density sum at each sample.
    """

    times: np.ndarray
    densities: np.ndarray
    order_parameter: np.ndarray
    total_norm: np.ndarray
    noise_seed: int | None
    noise_sigma: float
    params: LatticeParams
    site_positions: np.ndarray
    final_amplitudes: np.ndarray
    dt: float
    method: str

    @property
    def norm_drift(self):
        n0 = self.total_norm[0]
        return float(np.max(np.abs(self.total_norm - n0)) / n0) if n0 > 0 else 0.0


def order_parameter(densities, positions, a=1.0):
    """``(1/sqrt(N)) sum_j n_j exp(-i pi r_j / a)``; works on ``(..., N)`` arrays."""
    dens = np.asarray(densities, dtype=float)
    phases = order_parameter_phases(positions, a)
    return dens @ phases / math.sqrt(dens.shape[-1])


def _gl4_step(psi, h, f, guess=None, tol=1e-12, max_iter=60):
    """One Gauss-Legendre step by fixed-point iteration on the stage slopes.

    Returns the new state and the converged stages (a warm start for the
    next step).
    """
    if guess is None:
        k1 = f(psi)
        k2 = k1.copy()
    else:
        # linear extrapolation of the previous stage slopes by one step
        slope = (guess[1] - guess[0]) / _GL_DC
        k1, k2 = guess[0] + slope, guess[1] + slope
    scale = max(float(np.max(np.abs(k1))), 1e-300)
    for _ in range(max_iter):
        n1 = f(psi + h * (_GL_A[0, 0] * k1 + _GL_A[0, 1] * k2))
        n2 = f(psi + h * (_GL_A[1, 0] * n1 + _GL_A[1, 1] * k2))
        change = max(float(np.max(np.abs(n1 - k1))), float(np.max(np.abs(n2 - k2))))
        k1, k2 = n1, n2
        if change <= tol * scale:
            return psi + 0.5 * h * (k1 + k2), (k1, k2)
    raise StepSizeError("implicit stage iteration did not converge; reduce dt", {"dt": h, "stage_change": change})


def _rk4_step(psi, h, f, guess=None):
    k1 = f(psi)
    k2 = f(psi + 0.5 * h * k1)
    k3 = f(psi + 0.5 * h * k2)
    k4 = f(psi + h * k3)
    return psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), None


def _evolve(psi, params, t_max, dt, noise_sigma, rngs, sample_every, method, check_dt):
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    dens0 = np.abs(psi) ** 2
    if check_dt:
        limit = max_stable_dt(params, float(dens0.max()), float(dens0.mean()))
        if dt >= limit:
            raise StepSizeError(
                f"dt={dt:g} does not resolve the fastest scale; need dt < {limit:.6g}",
                {"dt": dt, "dt_limit": limit},
            )
    n_steps = int(round(t_max / dt))
    if not math.isclose(n_steps * dt, t_max, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError("t_max must be an integer multiple of dt")
    f = make_rhs(params)

    step = _gl4_step if method == "gl4" else _rk4_step
    n_samples = n_steps // sample_every + 1
    samples = np.empty((n_samples,) + psi.shape, dtype=complex)
    samples[0] = psi
    norm0 = np.sum(np.abs(psi) ** 2, axis=-1)
    amp = noise_sigma * math.sqrt(dt / 2.0)
    s = 1
    stages = None
    for k in range(1, n_steps + 1):
        psi, stages = step(psi, dt, f, stages)
        if noise_sigma > 0:
            if psi.ndim == 1:
                psi = psi + amp * (rngs[0].standard_normal(psi.shape) + 1j * rngs[0].standard_normal(psi.shape))
            else:
                noise = np.stack(
                    [r.standard_normal(psi.shape[-1]) + 1j * r.standard_normal(psi.shape[-1]) for r in rngs]
                )
                psi = psi + amp * noise
        else:
            norm = np.sum(np.abs(psi) ** 2, axis=-1)
            drift = float(np.max(np.abs(norm - norm0) / np.where(norm0 > 0, norm0, 1.0)))
            if not np.all(np.isfinite(psi)) or drift > MAX_NORM_DRIFT:
                raise StepSizeError(
                    "norm drift exceeded tolerance; reduce dt",
                    {"step": k, "t": k * dt, "norm_drift": drift, "dt": dt, "method": method},
                )
        if k % sample_every == 0:
            samples[s] = psi
            s += 1
    times = dt * sample_every * np.arange(n_samples)
    return times, samples


def _trajectory(times, samples, params, positions, seed, sigma, dt, method):
    dens = np.abs(samples) ** 2
    return Trajectory(
        times=times,
        densities=dens,
        order_parameter=order_parameter(dens, positions),
        total_norm=dens.sum(axis=-1),
        noise_seed=seed,
        noise_sigma=float(sigma),
        params=params,
        site_positions=positions,
        final_amplitudes=samples[-1].copy(),
        dt=float(dt),
        method=method,
    )


def integrate(initial, params, t_max, dt, noise_sigma=0.0, seed=None, sample_every=1, method="gl4", check_dt=True):
    """Fixed-step integration of the mean-field equations.

    Parameters
    ----------
    initial : CondensateState
    params : LatticeParams
    t_max, dt : float
        Duration and step; ``t_max`` must be a multiple of ``dt``.
    noise_sigma : float
        Additive complex Gaussian noise per site with ``E|xi|^2 = sigma^2 dt``
        after every step.
    seed : int, optional
        Seed for the noise generator.
    sample_every : int
        Record every ``sample_every``-th step.
    method : {"gl4", "rk4"}
        Gauss-Legendre (implicit, norm preserving) or classical Runge-Kutta.

    Raises
    ------
    StepSizeError
        If ``dt`` violates the resolution rule or, without noise, the norm
        drifts by more than ``1e-4``.
    """
    psi = np.array(initial.amplitudes, dtype=complex)
    rngs = [np.random.default_rng(seed)]
    times, samples = _evolve(psi, params, t_max, dt, noise_sigma, rngs, sample_every, method, check_dt)
    return _trajectory(times, samples, params, initial.site_positions, seed, noise_sigma, dt, method)


def integrate_ensemble(initial, params, t_max, dt, noise_sigma, seeds, sample_every=1, method="gl4", check_dt=True):
    """Independent noisy runs from one initial state, evolved as a batch."""
    seeds = list(seeds)
    psi = np.tile(np.array(initial.amplitudes, dtype=complex), (len(seeds), 1))
    rngs = [np.random.default_rng(s) for s in seeds]
    times, samples = _evolve(psi, params, t_max, dt, noise_sigma, rngs, sample_every, method, check_dt)
    return [
        _trajectory(times, samples[:, b], params, initial.site_positions, seeds[b], noise_sigma, dt, method)
        for b in range(len(seeds))
    ]


def noise_sigma_for(level, psi0, t_max):
    """Noise strength whose accumulated power over ``t_max`` is a fixed share of ``|psi0|^2``.

    ``weak`` accumulates 1% and ``strong`` 25%; a float passes through.
    """
    if isinstance(level, str):
        if level not in NOISE_PRESETS:
            raise ValueError(f"noise level must be one of {tuple(NOISE_PRESETS)} or a number")
        return NOISE_PRESETS[level] * abs(psi0) / math.sqrt(t_max)
    return float(level)


@dataclass(frozen=True)
class FrequencyEstimate:
    omega_peak: float
    peak_power: float
    background_power: float
    predicted: float
    relative_error: float
    resolution: float


def spectral_peak(times, signal, pad_factor=4):
    """Dominant nonzero angular frequency of a uniformly sampled real signal.

    Returns ``(omega, peak_power, background_power, bin_width)``. A Hann
    window is applied and the peak is refined by a parabola through the
    log power of the three bins around the maximum.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(signal, dtype=float)
    if t.size < 8:
        raise ValueError("need at least 8 samples")
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(abs(steps[0]), 1e-300):
        raise ValueError("samples must be uniformly spaced")
    dt = steps[0]
    x = (x - x.mean()) * np.hanning(x.size)
    n_fft = 1 << int(math.ceil(math.log2(x.size * pad_factor)))
    power = np.abs(np.fft.rfft(x, n_fft)) ** 2
    omegas = 2 * np.pi * np.fft.rfftfreq(n_fft, dt)
    # skip the window's main lobe around zero frequency
    lo = max(1, 2 * n_fft // x.size)
    if lo >= power.size - 1:
        raise NoOscillationError("series too short for a spectral estimate")
    k = lo + int(np.argmax(power[lo:]))
    background = float(np.median(power[lo:]))
    peak = float(power[k])
    omega = float(omegas[k])
    if lo < k < power.size - 1 and np.all(power[k - 1 : k + 2] > 0):
        a, b, c = np.log(power[k - 1 : k + 2])
        denom = a - 2 * b + c
        if denom < 0:
            omega += 0.5 * (a - c) / denom * (omegas[1] - omegas[0])
    return omega, peak, background, 2 * np.pi / (x.size * dt)


def extract_frequency(trajectory, threshold=3.0, min_periods=20):
    """Density-wave frequency from the staggered order parameter.

    ``|psi0|^2`` in the comparison is the spatial mean density at ``t = 0``.

    Raises
    ------
    NoOscillationError
        If the peak power is below ``threshold`` times the median power.
    ValueError
        If the run covers fewer than ``min_periods`` predicted periods.
    """
    n0 = float(np.mean(trajectory.densities[0]))
    predicted = predicted_frequency(trajectory.params, n0)
    span = trajectory.times[-1] - trajectory.times[0]
    if predicted > 0 and span * predicted / (2 * np.pi) < min_periods:
        raise ValueError(f"trajectory spans fewer than {min_periods} predicted periods")
    omega, peak, background, width = spectral_peak(trajectory.times, trajectory.order_parameter.real)
    if not peak > threshold * background:
        raise NoOscillationError(
            "no oscillation detected",
            {"peak_power": peak, "background_power": background, "threshold": threshold},
        )
    rel = abs(omega - predicted) / predicted if predicted > 0 else math.nan
    return FrequencyEstimate(omega, peak, background, predicted, rel, width)


def site_phases(trajectory, omega):
    """Phase of each site's density oscillation at angular frequency ``omega``."""
    t = trajectory.times
    d = trajectory.densities - trajectory.densities.mean(axis=0)
    w = np.hanning(t.size)
    return np.angle((w * np.exp(1j * omega * t)) @ d)


def phase_increment(phases):
    """Mean neighbour increment of site phases and the largest deviation from it.

    Both are circular quantities in ``(-pi, pi]``.
    """
    inc = np.angle(np.exp(1j * np.diff(phases)))
    mean = float(np.angle(np.mean(np.exp(1j * inc))))
    dev = float(np.max(np.abs(np.angle(np.exp(1j * (inc - mean))))))
    return mean, dev


def coherent_amplitude(trajectories):
    """Time-averaged ``|<O(t)>|`` with the average taken over the runs first."""
    mean_order = np.mean([tr.order_parameter for tr in trajectories], axis=0)
    mean_order = mean_order - mean_order.mean()
    return float(np.mean(np.abs(mean_order)))


@dataclass(frozen=True)
class CorrelationProfile:
    """Separation-resolved correlators with fitted scales.

    ``xi`` is ``inf`` when ``g1`` does not decay; both fits are ``None``
    when fewer than three separations are available.
    """

    separations: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    xi: float | None
    q: float | None
    flags: tuple = ()


def _separations(params):
    n = params.num_sites
    if params.geometry == "cubic":
        side = round(n ** (1 / 3))
        pos = params.positions() / params.a
        diff = np.abs(pos[:, None, :] - pos[None, :, :])
        diff = np.minimum(diff, side - diff)
        return params.a * np.sqrt(np.sum(diff**2, axis=-1))
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    if params.geometry == "ring":
        diff = np.minimum(diff, n - diff)
    return params.a * diff.astype(float)


def _profile(params, one_body, two_body, mean_density):
    sep = np.round(_separations(params), 9)
    ds = np.unique(sep)
    g1 = np.array([one_body[sep == d].mean() for d in ds])
    g2 = np.array([two_body[sep == d].mean() - mean_density**2 for d in ds])
    flags = []
    xi = q = None
    if ds.size < 3:
        flags.append("fit-skipped")
        return CorrelationProfile(ds, g1, g2, xi, q, tuple(flags))
    mag = np.abs(g1)
    ok = mag > 0
    if ok.sum() >= 2:
        slope = np.polyfit(ds[ok], np.log(mag[ok]), 1)[0]
        if slope >= -1e-12:
            xi = math.inf
            flags.append("xi-infinite")
        else:
            xi = -1.0 / slope
    if np.max(np.abs(g2)) > 1e-14:
        qs = np.linspace(0.0, np.pi / params.a, 4097)
        basis = np.cos(np.outer(qs, ds))
        score = (basis @ g2) ** 2 / np.maximum(np.sum(basis**2, axis=1), 1e-300)
        q = float(qs[int(np.argmax(score))])
    else:
        flags.append("no-density-modulation")
    return CorrelationProfile(ds, g1, g2, xi, q, tuple(flags))


def correlations(state, params, basis=None):
    """One-body and density correlation profiles versus separation.

    Parameters
    ----------
    state : CondensateState, Trajectory, or ndarray
        Mean-field amplitudes (a trajectory contributes its final state) or,
        with ``basis``, an exact many-body state vector.
    params : LatticeParams
    basis : FockBasis, optional
        Selects exact expectation values.
    """
    if basis is not None:
        vec = np.asarray(state)
        one = one_body_density_matrix(basis, vec)
        two = density_correlations(basis, vec)
        nbar = basis.num_particles / basis.num_sites
        return _profile(params, one, two, nbar)
    if isinstance(state, Trajectory):
        psi = state.final_amplitudes
    elif isinstance(state, CondensateState):
        psi = state.amplitudes
    else:
        psi = np.asarray(state, dtype=complex)
    dens = np.abs(psi) ** 2
    return _profile(params, np.outer(np.conj(psi), psi), np.outer(dens, dens), float(dens.mean()))
