"""Report figures. Everything goes through ``Figure`` objects, never pyplot state."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

_PHASE_COLOURS = {"Superfluid": "#4c72b0", "Mott": "#8c8c8c", "TimeCrystal": "#dd8452", "Normal": "#f2f2f2"}


def _save(fig, path):
    path = Path(path)
    # no Software tag, so identical inputs give identical bytes
    fig.savefig(path, dpi=100, metadata={"Software": None})
    return path


def spectrum_figure(path, energies):
    fig = Figure(figsize=(4, 4), layout="constrained")
    ax = fig.add_subplot()
    for e in energies:
        ax.hlines(e, 0, 1, color="k", lw=1)
    ax.set_xticks([])
    ax.set_ylabel("energy")
    ax.set_title(f"{len(energies)} levels")
    return _save(fig, path)


def swt_figure(path, rows):
    u = np.array([r["u_over_j"] for r in rows])
    dev = np.array([r["relative_deviation"] for r in rows])
    fig = Figure(figsize=(5, 4), layout="constrained")
    ax = fig.add_subplot()
    ax.loglog(u, dev, "o-")
    ax.loglog(u, 4 / u**2, "k--", lw=1, label=r"$4(J/U)^2$")
    ax.set_xlabel("U/J")
    ax.set_ylabel(r"$|K_{ED} - J^2/U| / (J^2/U)$")
    ax.legend()
    return _save(fig, path)


def trajectory_figure(path, trajectory):
    t = trajectory.times
    fig = Figure(figsize=(7, 6), layout="constrained")
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    n = trajectory.densities
    mesh = ax1.pcolormesh(t, np.arange(n.shape[1]), (n - n.mean(axis=1, keepdims=True)).T, shading="nearest", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax1, label=r"$n_j - \bar n$")
    ax1.set_ylabel("site")
    ax2.plot(t, trajectory.order_parameter.real, lw=0.8)
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"Re $O_\omega$")
    return _save(fig, path)


def correlator_figure(path, result):
    fig = Figure(figsize=(7, 6), layout="constrained")
    ax1, ax2 = fig.subplots(2, 1)
    ax1.plot(result.times, result.values.real, lw=0.8, label="Re")
    ax1.plot(result.times, result.values.imag, lw=0.8, label="Im")
    ax1.set_xlabel("t")
    ax1.set_ylabel("C(t)")
    ax1.legend()
    ax2.stem(result.frequencies, np.abs(result.weights))
    ax2.axvline(result.peak_frequency, color="r", ls="--", lw=1)
    ax2.set_xlabel(r"$\omega$")
    ax2.set_ylabel("|weight|")
    return _save(fig, path)


def qnm_figure(path, omegas, converged):
    w = np.asarray(omegas, dtype=complex)
    ok = np.asarray(converged, dtype=bool)
    fig = Figure(figsize=(5, 4), layout="constrained")
    ax = fig.add_subplot()
    ax.scatter(w.real[ok], w.imag[ok], marker="o", label="converged")
    if (~ok).any():
        ax.scatter(w.real[~ok], w.imag[~ok], marker="x", color="r", label="not converged")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel(r"Re $\omega$")
    ax.set_ylabel(r"Im $\omega$")
    ax.legend()
    return _save(fig, path)


def tc_scan_figure(path, scan):
    rows = scan.rows()
    T = np.array([r[0] for r in rows])
    im = np.array([r[2] for r in rows])
    fig = Figure(figsize=(5, 4), layout="constrained")
    ax = fig.add_subplot()
    ax.plot(T, im, "o-")
    ax.axhline(0, color="k", lw=0.5)
    if scan.T_c is not None:
        ax.axvline(scan.T_c, color="r", ls="--", lw=1, label=f"T_c = {scan.T_c:.5g}")
        ax.legend()
    ax.set_xlabel("T")
    ax.set_ylabel(r"Im $\omega$")
    return _save(fig, path)


def tc_curve_figure(path, r_h, hawking, closed_form):
    fig = Figure(figsize=(5, 4), layout="constrained")
    ax = fig.add_subplot()
    ax.plot(r_h, hawking, label="Hawking")
    ax.plot(r_h, closed_form, "--", label="large-horizon form")
    ax.set_xlabel(r"$r_h$")
    ax.set_ylabel("T")
    ax.legend()
    return _save(fig, path)


def phase_diagram_figure(path, points, u_values, temperatures, tc_curve=None, log_axes=True):
    labels = list(_PHASE_COLOURS)
    code = {lab: k for k, lab in enumerate(labels)}
    ui = {u: k for k, u in enumerate(u_values)}
    ti = {t: k for k, t in enumerate(temperatures)}
    grid = np.full((len(temperatures), len(u_values)), np.nan)
    for p in points:
        if not p.undetermined:
            grid[ti[p.temperature], ui[p.u_over_j]] = code[p.phase_label]
    fig = Figure(figsize=(6, 5), layout="constrained")
    ax = fig.add_subplot()
    cmap = ListedColormap([_PHASE_COLOURS[lab] for lab in labels])
    ax.pcolormesh(u_values, temperatures, grid, cmap=cmap, vmin=-0.5, vmax=len(labels) - 0.5, shading="nearest")
    if tc_curve is not None:
        u, tc = tc_curve
        ax.plot(u, tc, "k-", lw=1.5, label=r"$T_c(U/J)$")
    for lab in labels:
        ax.plot([], [], "s", color=_PHASE_COLOURS[lab], mec="k", label=lab)
    if log_axes:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlim(min(u_values), max(u_values))
    ax.set_ylim(min(temperatures), max(temperatures))
    ax.set_xlabel("U/J")
    ax.set_ylabel("T")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)
