"""Command-line entry point.

Every command resolves its configuration (defaults, ``--config`` file,
``--set`` overrides, ``--seed``), writes CSV/JSON artifacts and figures into
the output directory and finishes with ``manifest.json``. Exit codes: 0 on
success, 2 for configuration errors, 3 for numerical failures (with
``diagnostics.json``) and 4 when a resource cap is exceeded.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__, io, plotting
from .config import COMMANDS, resolve
from .dynamics import (
    INITIAL_CONDITIONS,
    bogoliubov_frequency,
    extract_frequency,
    integrate,
    noise_sigma_for,
    predicted_frequency,
)
from .errors import ConfigError, NoOscillationError, NumericalError, ResourceLimitError
from .fock import (
    LatticeParams,
    build_bare_hamiltonian,
    build_basis,
    build_effective_hamiltonian,
    condensate_fraction,
    diagonalize,
    ed_correlator,
    ground_state,
    order_parameter_operator,
)
from .gravity import (
    BlackHoleBackground,
    HolographicMap,
    ScalarFieldParams,
    ShootingSettings,
    bec_critical_temperature,
    critical_temperature,
    solve_qnm,
    spin_critical_temperature,
    tc_scan,
)
from .phases import PhaseConfig, Thresholds, composed_tc, points_to_csv, sweep
from .swt import VALIDITY_U_OVER_J, swt_report

ENV_OUT = "HOLOCRYSTAL_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4

_HELP = {
    "basis": "enumerate the Fock basis",
    "spectrum": "exact-diagonalization eigenvalues",
    "swt-check": "pair-tunneling coupling from exact diagonalization vs J^2/U",
    "dynamics": "mean-field trajectory and density-wave frequency",
    "correlator": "ground-state order-parameter commutator correlator",
    "qnm": "scalar quasinormal modes of a charged AdS black hole",
    "tc": "closed-form critical temperatures, optionally the dynamical onset scan",
    "phase-diagram": "classify a (U/J, T) grid",
}


class Output:
    """Output directory created on first write; tracks every artifact."""

    def __init__(self, root):
        self.root = Path(root)
        self.files = []
        self._created = False

    def path(self, name):
        if not self.root.exists():
            self.root.mkdir(parents=True)
            self._created = True
        p = self.root / name
        self.files.append(p)
        return p

    def discard(self):
        for p in self.files:
            p.unlink(missing_ok=True)
        self.files.clear()
        if self._created and not any(self.root.iterdir()):
            self.root.rmdir()


def _versions():
    out = {"holocrystal": __version__}
    for pkg in ("numpy", "scipy", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _lattice(block):
    return LatticeParams(**block)


def _hamiltonian(params, model, max_dim):
    basis = build_basis(params.num_sites, params.particles, max_dim)
    if model == "bare":
        return build_bare_hamiltonian(params, basis)
    if model == "effective":
        return build_effective_hamiltonian(params, basis)
    raise ConfigError(f"model must be 'bare' or 'effective', not {model!r}")


# --- commands ----------------------------------------------------------------------


def cmd_basis(cfg, out, jobs):
    lat = cfg.block("lattice")
    particles = lat["num_sites"] if lat["num_particles"] is None else lat["num_particles"]
    basis = build_basis(lat["num_sites"], particles, lat["max_dim"])
    header = ["index"] + [f"n_{k}" for k in range(basis.num_sites)]
    io.write_csv(out.path("basis.csv"), header, ([i, *s] for i, s in enumerate(basis.states.tolist())))
    io.write_json(
        out.path("basis.json"),
        {"num_sites": basis.num_sites, "num_particles": basis.num_particles, "dimension": basis.dimension},
    )
    return f"dimension {basis.dimension}"


def cmd_spectrum(cfg, out, jobs):
    opts = cfg.block("spectrum")
    params = _lattice(cfg.block("lattice"))
    H = _hamiltonian(params, opts["model"], opts["max_dim"])
    evals, _ = diagonalize(H, opts["num_eigenvalues"])
    io.write_csv(out.path("spectrum.csv"), ["index", "energy"], enumerate(evals.tolist()))
    io.write_json(
        out.path("spectrum.json"),
        {
            "dimension": H.dimension,
            "model": opts["model"],
            "coordination": params.coordination,
            "hermiticity_error": H.hermiticity_error(),
            "ground_energy": float(evals[0]),
            "num_eigenvalues": len(evals),
        },
    )
    plotting.spectrum_figure(out.path("spectrum.png"), evals)
    return f"{len(evals)} eigenvalues, lowest {evals[0]:.12g}"


def cmd_swt_check(cfg, out, jobs):
    block = cfg.block("swt")
    rows, limits = swt_report(block["J"], block["u_over_j"], block["half_filling"])
    keys = ["u_over_j", "K_closed_form", "K_ed", "relative_deviation", "pair_element_2_0", "pair_over_2K_ed"]
    io.write_csv(out.path("swt.csv"), keys, ([r[k] for k in keys] for r in rows))
    io.write_csv(out.path("swt_half_filling.csv"), ["n", "ratio"], ([lim["n"], lim["ratio"]] for lim in limits))
    devs = [r["relative_deviation"] for r in sorted(rows, key=lambda r: r["u_over_j"])]
    io.write_json(
        out.path("swt.json"),
        {
            "rows": rows,
            "half_filling": limits,
            "deviation_monotone": all(a > b for a, b in zip(devs, devs[1:])),
            "below_validity": [r["u_over_j"] for r in rows if r["u_over_j"] < VALIDITY_U_OVER_J],
        },
    )
    plotting.swt_figure(out.path("swt.png"), rows)
    return "; ".join(f"U/J={r['u_over_j']:g}: {100 * r['relative_deviation']:.3g}%" for r in rows)


def cmd_dynamics(cfg, out, jobs):
    dyn = cfg.block("dynamics")
    params = _lattice(cfg.block("lattice"))
    if dyn["initial"] not in INITIAL_CONDITIONS:
        raise ConfigError(f"initial must be one of {tuple(INITIAL_CONDITIONS)}")
    if dyn["initial"] == "staggered":
        state = INITIAL_CONDITIONS["staggered"](params, dyn["psi0"], dyn["epsilon"])
    elif dyn["initial"] == "random-phase":
        state = INITIAL_CONDITIONS["random-phase"](params, dyn["psi0"], cfg.seed)
    else:
        state = INITIAL_CONDITIONS["uniform"](params, dyn["psi0"])
    try:
        sigma = noise_sigma_for(dyn["noise"], dyn["psi0"], dyn["t_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    traj = integrate(
        state, params, dyn["t_max"], dyn["dt"], sigma, cfg.seed, dyn["sample_every"], dyn["method"]
    )
    N = params.num_sites
    dens = traj.densities
    contrib = dens * np.exp(-1j * np.pi * traj.site_positions / params.a)[None, :] / math.sqrt(N)

    def rows():
        for k, t in enumerate(traj.times.tolist()):
            for j in range(N):
                c = contrib[k, j]
                yield t, j, dens[k, j], c.real, c.imag, dens[k, j]
            O = traj.order_parameter[k]
            yield t, -1, dens[k].mean(), O.real, O.imag, traj.total_norm[k]

    io.write_csv(out.path("trajectory.csv"), ["t", "site", "density", "re_order", "im_order", "norm"], rows())
    n0 = float(np.mean(dens[0]))
    summary = {
        "noise_sigma": sigma,
        "seed": cfg.seed,
        "norm_drift": traj.norm_drift,
        "mean_density": n0,
        "predicted_frequency": predicted_frequency(params, n0),
        "bogoliubov_frequency": bogoliubov_frequency(params, n0),
        "frequency": None,
    }
    try:
        est = extract_frequency(traj, min_periods=0)
        summary["frequency"] = {
            "omega_peak": est.omega_peak,
            "relative_error": est.relative_error,
            "resolution": est.resolution,
            "peak_power": est.peak_power,
            "background_power": est.background_power,
        }
    except NoOscillationError as exc:
        summary["no_oscillation"] = str(exc)
    io.write_json(out.path("dynamics.json"), summary)
    plotting.trajectory_figure(out.path("trajectory.png"), traj)
    freq = summary["frequency"]
    return "no oscillation detected" if freq is None else f"omega_peak {freq['omega_peak']:.6g}"


def cmd_correlator(cfg, out, jobs):
    block = cfg.block("correlator")
    params = _lattice(cfg.block("lattice"))
    H = _hamiltonian(params, block["model"], block["max_dim"])
    basis = H.basis
    O = order_parameter_operator(basis, params.positions(), params.a)
    times = np.linspace(0.0, block["t_max"], block["num_times"])
    res = ed_correlator(H, O, times, block["temperature"])
    _, vec = ground_state(H)
    n_bar = basis.num_particles / basis.num_sites
    fc = condensate_fraction(basis, vec)
    psi0_sq = fc * n_bar
    predicted = predicted_frequency(params, psi0_sq)
    mf = bogoliubov_frequency(params, n_bar)
    io.write_csv(out.path("correlator.csv"), ["t", "re_C", "im_C"], zip(times.tolist(), res.values.real, res.values.imag))
    io.write_csv(out.path("correlator_lines.csv"), ["frequency", "weight"], zip(res.frequencies.tolist(), res.weights.tolist()))
    io.write_json(
        out.path("correlator.json"),
        {
            "peak_frequency": res.peak_frequency,
            "amplitude": res.amplitude,
            "ground_degeneracy": res.ground_degeneracy,
            "condensate_fraction": fc,
            "psi0_sq_estimate": psi0_sq,
            "predicted_frequency": predicted,
            "meanfield_frequency": mf,
            "percent_difference_meanfield": 200 * abs(res.peak_frequency - mf) / (res.peak_frequency + mf),
        },
    )
    plotting.correlator_figure(out.path("correlator.png"), res)
    return f"ED peak {res.peak_frequency:.6g}, mean-field {mf:.6g}"


def _settings(block):
    return ShootingSettings(**block)


def cmd_qnm(cfg, out, jobs):
    bgb = cfg.block("background")
    sc = cfg.block("scalar")
    block = cfg.block("qnm")
    bg = BlackHoleBackground(bgb["L"], bgb["mu"], bgb["Q"])
    scalar = ScalarFieldParams(sc["m"], sc["lam"], sc["q"])
    settings = _settings(cfg.block("shooting"))
    results = []
    for g in block["guesses"]:
        if not (isinstance(g, list) and len(g) == 2):
            raise ConfigError("each guess must be a [re, im] pair")
        guess = complex(g[0], g[1])
        res = solve_qnm(bg, scalar, guess, settings)
        results.append(("mode", guess, res))
        if block["pairing"] and scalar.q == 0 and res.converged:
            partner = -np.conj(res.omega)
            results.append(("partner", partner, solve_qnm(bg, scalar, partner, settings)))
    header = ["kind", "guess_re", "guess_im", "re_omega", "im_omega", "residual", "iterations", "converged"]
    io.write_csv(
        out.path("qnm_modes.csv"),
        header,
        ([k, g.real, g.imag, r.omega.real, r.omega.imag, r.boundary_residual, r.iterations, r.converged] for k, g, r in results),
    )
    io.write_json(
        out.path("qnm.json"),
        {
            "r_h": bg.r_h,
            "temperature": bg.temperature,
            "falloff_exponents": list(results[0][2].falloff_exponents) if results else None,
            "modes": [
                {
                    "kind": k,
                    "omega": r.omega,
                    "residual": r.boundary_residual,
                    "converged": r.converged,
                    "diagnostic": r.diagnostic,
                    "sync_frequency": r.sync_frequency,
                }
                for k, _, r in results
            ],
        },
    )
    plotting.qnm_figure(out.path("qnm.png"), [r.omega for _, _, r in results], [r.converged for _, _, r in results])
    failed = [(g, r) for _, g, r in results if not r.converged]
    if failed:
        g, r = failed[0]
        raise NumericalError(
            f"{len(failed)} mode search(es) did not converge",
            {"guess": g, "last_omega": r.omega, "residual": r.boundary_residual, "diagnostic": r.diagnostic},
        )
    return "; ".join(f"{r.omega.real:.10g}{r.omega.imag:+.10g}i" for _, _, r in results)


def cmd_tc(cfg, out, jobs):
    bgb = cfg.block("background")
    bec = cfg.block("bec")
    spin = cfg.block("spin")
    bg = BlackHoleBackground.from_horizon(bgb["r_h"], bgb["L"], bgb["Q"])
    eq_bh = critical_temperature(bg.r_h, bg.L, bg.Q)
    eq_bec = bec_critical_temperature(bec["J"], bec["U"], bec["z"], bec["psi0_sq"], bec["q"], bec["N"], bec["a"])
    eq_spin = spin_critical_temperature(
        bec["J"], bec["U"], bec["z"], bec["psi0_sq"], spin["J_ex"], spin["s"], bec["N"], bec["a"]
    )
    table = [
        ("hawking", bg.temperature, None),
        ("black_hole_closed_form", eq_bh.value, eq_bh.flag),
        ("bec", eq_bec.value, eq_bec.flag),
        ("spin", eq_spin.value, eq_spin.flag),
    ]
    io.write_csv(out.path("tc.csv"), ["formula", "value", "flag"], table)
    report = {
        "background": {"r_h": bg.r_h, "L": bg.L, "Q": bg.Q, "mu": bg.mu},
        "temperatures": {name: {"value": v, "flag": f} for name, v, f in table},
    }
    r = np.geomspace(bg.r_h / 4, bg.r_h * 4, 200)
    hawk, closed = [], []
    for x in r:
        try:
            hawk.append(BlackHoleBackground.from_horizon(float(x), bg.L, bg.Q).temperature)
        except ValueError:
            hawk.append(math.nan)
        closed.append(critical_temperature(float(x), bg.L, bg.Q).value)
    plotting.tc_curve_figure(out.path("tc.png"), r, hawk, closed)
    scan_cfg = cfg.block("scan")
    message = f"closed form {eq_bh.value:.12g}, BEC {eq_bec.value:.12g}, spin {eq_spin.value:.12g}"
    if scan_cfg["enabled"]:
        r_vals = np.linspace(scan_cfg["r_h_min"], scan_cfg["r_h_max"], int(scan_cfg["num"]))
        scalar = ScalarFieldParams(scan_cfg["m"], 0.0, scan_cfg["q"])
        guess = scan_cfg["omega_guess"]
        if guess is not None:
            guess = complex(guess[0], guess[1])
        scan = tc_scan(
            r_vals, scan_cfg["L"], scan_cfg["Q"], scalar, guess, _settings(cfg.block("shooting")), scan_cfg["bisection_tol"]
        )
        io.write_csv(out.path("tc_scan.csv"), ["T", "re_omega", "im_omega", "residual", "converged"], scan.rows())
        io.write_json(out.path("tc_scan.json"), scan.record())
        plotting.tc_scan_figure(out.path("tc_scan.png"), scan)
        report["scan"] = scan.record()
        message += f"; scan: {scan.message}" + (f", T_c = {scan.T_c:.8g}" if scan.onset_found else "")
    io.write_json(out.path("tc.json"), report)
    return message


def _grid(lo, hi, num, spacing):
    if num < 1:
        raise ConfigError("grid sizes must be positive")
    if spacing == "log":
        if lo <= 0:
            raise ConfigError("log-spaced grids need positive bounds")
        return np.geomspace(lo, hi, num)
    if spacing == "linear":
        return np.linspace(lo, hi, num)
    raise ConfigError("grid spacing must be 'log' or 'linear'")


def cmd_phase_diagram(cfg, out, jobs):
    ph = dict(cfg.block("phases"))
    grid = cfg.block("grid")
    constants = HolographicMap(ph.pop("alpha"), ph.pop("beta"), ph.pop("gamma"))
    config = PhaseConfig(**ph, map_constants=constants, seed=cfg.seed)
    thresholds = Thresholds(**cfg.block("thresholds"))
    us = _grid(grid["u_min"], grid["u_max"], grid["num_u"], grid["spacing"])
    Ts = _grid(grid["T_min"], grid["T_max"], grid["num_T"], grid["spacing"])
    points = sweep(us, Ts, config, thresholds, jobs=jobs)
    out.path("phase_diagram.csv").write_text(points_to_csv(points))
    tc = [composed_tc(float(u), config).value for u in us]
    io.write_csv(out.path("phase_tc_curve.csv"), ["u_over_j", "tc_value"], zip(us.tolist(), tc))
    counts = {}
    for p in points:
        counts[p.phase_label] = counts.get(p.phase_label, 0) + 1
    undetermined = sum(p.undetermined for p in points)
    io.write_json(out.path("phase_diagram.json"), {"counts": counts, "undetermined": undetermined})
    plotting.phase_diagram_figure(
        out.path("phase_diagram.png"),
        points,
        [float(u) for u in us],
        [float(t) for t in Ts],
        (us, tc),
        log_axes=grid["spacing"] == "log",
    )
    return ", ".join(f"{k}: {v}" for k, v in sorted(counts.items()))


HANDLERS = {
    "basis": cmd_basis,
    "spectrum": cmd_spectrum,
    "swt-check": cmd_swt_check,
    "dynamics": cmd_dynamics,
    "correlator": cmd_correlator,
    "qnm": cmd_qnm,
    "tc": cmd_tc,
    "phase-diagram": cmd_phase_diagram,
}
assert set(HANDLERS) == set(COMMANDS)


# --- driver ------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (a manifest from an earlier run also works)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override one key, e.g. lattice.U=20")
    common.add_argument("--out", help=f"output directory (default: ${ENV_OUT}/<command> or ./holocrystal-out/<command>)")
    common.add_argument("--seed", type=int, help="random seed for commands that use one")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for parameter sweeps")
    common.add_argument("--explain", action="store_true", help="print the resolved configuration and exit")
    parser = argparse.ArgumentParser(prog="holocrystal", description="Lattice boson and holographic time-crystal toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    return parser


def _out_dir(args):
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(ENV_OUT, "holocrystal-out")) / args.command


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args.command, args.config, args.overrides, args.seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.explain:
        sys.stdout.write(io.dumps(cfg.params))
        return EXIT_OK
    if args.jobs < 1:
        print("configuration error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(_out_dir(args))
    code = EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            message = HANDLERS[args.command](cfg, out, args.jobs)
    except ResourceLimitError as exc:
        out.discard()
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        io.write_json(
            out.path("diagnostics.json"),
            {"command": args.command, "error": type(exc).__name__, "message": str(exc), "diagnostics": exc.diagnostics},
        )
        print(f"numerical failure: {exc}", file=sys.stderr)
        message, code = None, EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError) as exc:
        out.discard()
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = io.write_manifest(out.root, args.command, cfg.params, out.files, _versions())
    if message:
        print(message)
    print(f"wrote {len(out.files)} files and {manifest.name} to {out.root}")
    return code


if __name__ == "__main__":
    sys.exit(main())
