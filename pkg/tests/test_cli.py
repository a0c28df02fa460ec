import csv
import json
import math

import pytest

from holocrystal import cli
from holocrystal.config import DEFAULTS, parse_override, resolve
from holocrystal.errors import ConfigError

SMALL_DYNAMICS = ["--set", "lattice.num_sites=8", "--set", "dynamics.t_max=5", "--set", "dynamics.sample_every=10"]


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_spectrum_two_sites(tmp_path):
    out = tmp_path / "spectrum"
    assert run("spectrum", "--set", "lattice.num_sites=2", "--set", "lattice.J=0.1", "--out", out) == 0
    rows = read_csv(out / "spectrum.csv")
    assert rows[0] == ["index", "energy"]
    energies = [float(r[1]) for r in rows[1:]]
    assert len(energies) == 3
    assert energies[0] == pytest.approx(-0.004, rel=1e-3)
    # 17 significant digits round-trip exactly
    assert rows[1][1] == f"{energies[0]:.17g}"
    assert (out / "spectrum.png").exists()


def test_tc_report_closed_form(tmp_path):
    out = tmp_path / "tc"
    assert run("tc", "--set", "background.r_h=1", "--set", "background.L=1", "--set", "background.Q=0", "--out", out) == 0
    report = json.loads((out / "tc.json").read_text())
    temps = report["temperatures"]
    assert temps["black_hole_closed_form"]["value"] == pytest.approx(3 / (4 * math.pi), rel=1e-15)
    assert temps["hawking"]["value"] == pytest.approx(1 / math.pi, rel=1e-12)
    assert temps["bec"]["value"] == pytest.approx(2.4, rel=1e-15)
    assert temps["spin"]["value"] == pytest.approx(2.4 - 25 / (4 * math.pi), rel=1e-14)
    assert [r[0] for r in read_csv(out / "tc.csv")[1:]] == ["hawking", "black_hole_closed_form", "bec", "spin"]


@pytest.mark.parametrize(
    "args",
    [
        ["spectrum", "--set", "lattice.Jx=1"],
        ["spectrum", "--set", "nonsense.J=1"],
        ["spectrum", "--set", "lattice.J=abc"],
        ["spectrum", "--set", "lattice=3"],
        ["dynamics", "--set", "dynamics.initial=bogus"],
        ["spectrum", "--set", "lattice.geometry=hexagon"],
        ["basis", "--seed", "3"],
        ["spectrum", "--jobs", "0"],
    ],
)
def test_config_errors_exit_2_without_files(tmp_path, args):
    out = tmp_path / "out"
    assert run(*args, "--out", out) == 2
    assert not out.exists()


def test_malformed_config_file_exit_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"lattice": {"J": 1.0, "typo": 2}}))
    out = tmp_path / "out"
    assert run("spectrum", "--config", cfg, "--out", out) == 2
    assert not out.exists()
    cfg.write_text("{not json")
    assert run("spectrum", "--config", cfg, "--out", out) == 2


def test_unknown_subcommand_exit_2(capsys):
    assert run("nope") == 2


def test_resource_cap_exit_4(tmp_path):
    out = tmp_path / "out"
    assert run("basis", "--set", "lattice.num_sites=30", "--set", "lattice.num_particles=30", "--out", out) == 4
    assert not out.exists()


def test_dimension_cap_override(tmp_path):
    out = tmp_path / "out"
    args = ["basis", "--set", "lattice.num_sites=6", "--set", "lattice.num_particles=6"]
    assert run(*args, "--set", "lattice.max_dim=100", "--out", out) == 4
    assert run(*args, "--set", "lattice.max_dim=null", "--out", out) == 0
    assert json.loads((out / "basis.json").read_text())["dimension"] == 462


def test_numerical_failure_exit_3_with_diagnostics(tmp_path):
    out = tmp_path / "out"
    assert run("dynamics", *SMALL_DYNAMICS, "--set", "dynamics.dt=0.5", "--out", out) == 3
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["error"] == "StepSizeError"
    assert (out / "manifest.json").exists()


def test_unconverged_mode_exit_3(tmp_path):
    out = tmp_path / "out"
    assert run("qnm", "--set", "shooting.max_iter=1", "--out", out) == 3
    assert (out / "diagnostics.json").exists()
    assert read_csv(out / "qnm_modes.csv")[1][-1] == "false"


def test_explain_prints_defaults(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run("phase-diagram", "--explain") == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown == json.loads(json.dumps(DEFAULTS["phase-diagram"]))
    assert list(tmp_path.iterdir()) == []


def test_explain_shows_overrides(capsys):
    assert run("qnm", "--explain", "--set", "background.mu=3") == 0
    assert json.loads(capsys.readouterr().out)["background"]["mu"] == 3


def test_env_variable_sets_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "root"))
    assert run("basis") == 0
    assert (tmp_path / "root" / "basis" / "basis.csv").exists()


def test_outputs_byte_identical(tmp_path):
    args = ["dynamics", *SMALL_DYNAMICS, "--set", "dynamics.noise=weak", "--seed", "7"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["dynamics.json", "manifest.json", "trajectory.csv", "trajectory.png"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_noisy_trajectory(tmp_path):
    base = ["dynamics", *SMALL_DYNAMICS, "--set", "dynamics.noise=weak"]
    run(*base, "--seed", "1", "--out", tmp_path / "a")
    run(*base, "--seed", "2", "--out", tmp_path / "b")
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_manifest_round_trip(tmp_path):
    assert run("dynamics", *SMALL_DYNAMICS, "--seed", "5", "--set", "dynamics.noise=strong", "--out", tmp_path / "a") == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert "time" not in json.dumps(manifest).lower()
    assert run("dynamics", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b") == 0
    again = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert again == manifest


def test_manifest_from_other_command_rejected(tmp_path):
    run("basis", "--out", tmp_path / "a")
    assert run("spectrum", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b") == 2


def test_trajectory_csv_layout(tmp_path):
    out = tmp_path / "dyn"
    assert run("dynamics", *SMALL_DYNAMICS, "--out", out) == 0
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "site", "density", "re_order", "im_order", "norm"]
    first_time = [r for r in rows[1:] if float(r[0]) == 0.0]
    assert [int(r[1]) for r in first_time] == list(range(8)) + [-1]
    agg = first_time[-1]
    # aggregate row: order parameter equals the sum of the site contributions
    assert float(agg[3]) == pytest.approx(sum(float(r[3]) for r in first_time[:-1]), abs=1e-12)
    assert float(agg[5]) == pytest.approx(sum(float(r[2]) for r in first_time[:-1]), rel=1e-12)


def test_swt_check_report(tmp_path):
    out = tmp_path / "swt"
    assert run("swt-check", "--out", out) == 0
    report = json.loads((out / "swt.json").read_text())
    assert report["deviation_monotone"]
    assert [r["u_over_j"] for r in report["rows"]] == [10.0, 20.0, 50.0, 100.0]
    assert (out / "swt.png").exists()


def test_correlator_report(tmp_path):
    out = tmp_path / "corr"
    assert run("correlator", "--out", out) == 0
    report = json.loads((out / "correlator.json").read_text())
    assert report["peak_frequency"] == pytest.approx(9.7146, abs=1e-3)
    assert report["meanfield_frequency"] == pytest.approx(11.7847, abs=1e-3)


def test_qnm_table(tmp_path):
    out = tmp_path / "qnm"
    assert run("qnm", "--out", out) == 0
    rows = read_csv(out / "qnm_modes.csv")
    assert [r[0] for r in rows[1:]] == ["mode", "partner"]
    w = complex(float(rows[1][3]), float(rows[1][4]))
    assert abs(w - (2.798223242809604 - 2.6712058258043263j)) < 1e-6


def test_phase_diagram_small_grid(tmp_path):
    out = tmp_path / "pd"
    args = [
        "phase-diagram",
        "--set", "phases.num_sites=8",
        "--set", "phases.periods=20",
        "--set", "grid.num_u=2",
        "--set", "grid.num_T=2",
        "--set", "grid.u_min=1",
        "--set", "grid.u_max=20",
        "--set", "grid.T_min=0.3",
        "--set", "grid.T_max=100",
        "--out", out,
    ]  # fmt: skip
    assert run(*args) == 0
    rows = read_csv(out / "phase_diagram.csv")
    assert rows[0] == ["u_over_j", "temperature", "label", "condensate_fraction", "oscillation_amplitude", "tc_value", "flags"]
    assert [r[2] for r in rows[1:]] == ["Superfluid", "Normal", "TimeCrystal", "Normal"]
    assert (out / "phase_diagram.png").exists()


# --- configuration layer ------------------------------------------------------------


@pytest.mark.parametrize(
    "text, expected",
    [
        ("a.b=1", {"a": {"b": 1}}),
        ("a=1.5", {"a": 1.5}),
        ("a.b=weak", {"a": {"b": "weak"}}),
        ("a=[1, 2]", {"a": [1, 2]}),
        ("a=null", {"a": None}),
        ("a=true", {"a": True}),
    ],
)
def test_parse_override(text, expected):
    assert parse_override(text) == expected


@pytest.mark.parametrize("text", ["novalue", "=3", ".=3"])
def test_parse_override_rejects(text):
    with pytest.raises(ConfigError):
        parse_override(text)


def test_resolve_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lattice": {"U": 20.0, "J": 0.5}}))
    rc = resolve("spectrum", cfg, ["lattice.U=30"])
    assert rc.block("lattice")["U"] == 30
    assert rc.block("lattice")["J"] == 0.5
    assert rc.block("lattice")["num_sites"] == DEFAULTS["spectrum"]["lattice"]["num_sites"]


def test_resolve_does_not_mutate_defaults():
    resolve("spectrum", None, ["lattice.U=99"])
    assert DEFAULTS["spectrum"]["lattice"]["U"] == 10.0
