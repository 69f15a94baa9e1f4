from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np
import pytest

from pdengine import __version__
from pdengine.cli import main
from pdengine.config import ConfigError, Scenario, SimConfig, parse_config, parse_scenario
from pdengine.domain import AABB
from pdengine.output import TRAJECTORY_HEADER, write_snapshot
from pdengine.scenarios import build_scenario
from pdengine.simulation import ConsistencyError, Simulation, run_simulation


def _write_cfg(tmp_path: Path, name="run.cfg", **keys) -> Path:
    base = {"box_min": "0,0,0", "box_max": "1,1,1", "steps": "10", "dt": "1e-3"}
    base.update({k: str(v) for k, v in keys.items()})
    path = tmp_path / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in base.items()), encoding="utf-8")
    return path


def _rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_config_full(tmp_path):
    cfg = parse_config(
        """
        # comment
        partitioning = blockgrid(2,2,1)
        box_min = (0,0,0)
        box_max = (3, 3, 3)
        dt = 2e-4
        steps = 7
        integrator = euler
        kn = 50
        gammaN = 0.5
        g = 0,0,-9.81
        scenario = gas(10, 3, 0.5)
        radius = 0.05
        mass = 2
        walls = false
        output = out/traj.csv
        metrics = m.csv
        ownership = own.csv
        output_interval = 2
        """,
        base_dir=tmp_path,
    )
    assert cfg.partitioning == "blockgrid(2,2,1)"
    assert cfg.box == AABB((0, 0, 0), (3, 3, 3))
    assert (cfg.dt, cfg.steps, cfg.integrator, cfg.kn, cfg.gamma_n) == (2e-4, 7, "euler", 50, 0.5)
    assert cfg.g == (0, 0, -9.81)
    assert cfg.scenario == Scenario("gas", (10, 3, 0.5))
    assert cfg.output == tmp_path / "out" / "traj.csv"
    assert cfg.ownership == tmp_path / "own.csv"
    assert cfg.walls is False and cfg.output_interval == 2


@pytest.mark.parametrize("text", [
    "dt = 0", "dt = -1", "steps = -1", "integrator = rk4", "bogus = 1", "dt = 1\ndt = 2",
    "box_min = 0,0,0", "box_min = 1,1,1\nbox_max = 0,0,0", "scenario = gas(1)",
    "scenario = lattice", "walls = maybe", "g = 1,2", "no equals sign",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_scenario_parsing():
    assert parse_scenario("two_sphere") == Scenario("two_sphere", ())
    assert parse_scenario("two_sphere(2.0, 0.01)") == Scenario("two_sphere", (2.0, 0.01))
    assert parse_scenario("settle(20, 4)") == Scenario("settle", (20, 4))


def test_seed_reproducible():
    cfg = SimConfig(scenario=Scenario("gas", (30, 5)), radius=0.05)
    assert build_scenario(cfg) == build_scenario(cfg)
    other = dataclasses.replace(cfg, scenario=Scenario("gas", (30, 6)))
    assert build_scenario(cfg) != build_scenario(other)


def test_gas_particles_do_not_overlap():
    cfg = SimConfig(scenario=Scenario("gas", (60, 2)), radius=0.06)
    parts = build_scenario(cfg)
    x = np.array([p.position for p in parts])
    d = np.linalg.norm(x[:, None] - x[None], axis=2) + np.eye(len(x)) * 10
    assert d.min() >= 0.12
    assert np.all(x >= 0.06) and np.all(x <= 0.94)


def test_steps_zero_writes_initial_snapshot(tmp_path):
    main(["run", "--config", str(_write_cfg(tmp_path, steps=0))])
    rows = _rows(tmp_path / "trajectory.csv")
    assert {r["step"] for r in rows} == {"0"} and len(rows) == 2
    assert len(_rows(tmp_path / "metrics.csv")) == 1


def test_two_sphere_single_rank_has_no_traffic(tmp_path):
    assert main(["run", "--config", str(_write_cfg(tmp_path, steps=50, gammaN=0))]) == 0
    metrics = _rows(tmp_path / "metrics.csv")
    byte_cols = [k for k in metrics[0] if k.startswith("bytes_")]
    assert byte_cols and all(r[k] == "0" for r in metrics for k in byte_cols)
    px = [float(r["px"]) for r in metrics]
    assert max(abs(p - px[0]) for p in px) <= 1e-10


def test_header_and_format(tmp_path):
    main(["run", "--config", str(_write_cfg(tmp_path, steps=3))])
    raw = (tmp_path / "trajectory.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == TRAJECTORY_HEADER
    # 17 significant digits round-trip every double
    for field in lines[1].split(",")[2:]:
        assert float(field) == float(repr(float(field)))
    assert [line.split(",")[1] for line in lines[1:3]] == ["0", "1"]


def test_output_interval(tmp_path):
    main(["run", "--config", str(_write_cfg(tmp_path, steps=10, output_interval=4))])
    assert sorted({int(r["step"]) for r in _rows(tmp_path / "trajectory.csv")}) == [0, 4, 8]
    assert len(_rows(tmp_path / "metrics.csv")) == 11


def test_gas_determinism(tmp_path):
    cfg = {"scenario": "gas(100, 7)", "box_max": "3,3,3", "steps": 30, "kn": 1000,
           "gammaN": 1, "radius": 0.1}
    for name in ("a", "b"):
        (tmp_path / name).mkdir()
        assert main(["run", "--config", str(_write_cfg(tmp_path / name, **cfg))]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == \
        (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_threads_match_sequential(tmp_path):
    cfg = {"scenario": "gas(60, 2)", "box_max": "2,2,1", "steps": 40, "radius": 0.08,
           "partitioning": "blockgrid(2,2,1)"}
    for name, extra in (("seq", []), ("thr", ["--threads"])):
        (tmp_path / name).mkdir()
        assert main(["run", "--config", str(_write_cfg(tmp_path / name, **cfg)), *extra]) == 0
    for f in ("trajectory.csv", "metrics.csv"):
        assert (tmp_path / "seq" / f).read_bytes() == (tmp_path / "thr" / f).read_bytes()


def test_checked_run_on_block_grid(tmp_path):
    cfg = _write_cfg(tmp_path, scenario="gas(100, 3)", box_max="2,2,1", steps=10, radius=0.05,
                     partitioning="blockgrid(2,2,1)", ownership="own.csv")
    assert main(["run", "--config", str(cfg), "--check"]) == 0
    traj = _rows(tmp_path / "trajectory.csv")
    own = _rows(tmp_path / "own.csv")
    for step in ("0", "10"):
        uids = [r["uid"] for r in traj if r["step"] == step]
        assert sorted(map(int, uids)) == list(range(100))
    assert {r["owner"] for r in own} <= {"0", "1", "2", "3"}
    assert len({r["owner"] for r in own}) == 4


def test_resting_world_creates_ghosts_only_once(tmp_path):
    cfg = _write_cfg(tmp_path, scenario="gas(40, 3, 0)", box_max="2,2,1", steps=5, radius=0.1,
                     partitioning="blockgrid(2,2,1)", walls="false")
    assert main(["run", "--config", str(cfg)]) == 0
    metrics = _rows(tmp_path / "metrics.csv")
    assert int(metrics[1]["count_GHOST_CREATE"]) > 0
    assert all(r["count_GHOST_CREATE"] == "0" for r in metrics[2:])


def test_empty_world(tmp_path):
    assert main(["run", "--config", str(_write_cfg(tmp_path, scenario="gas(0, 1)",
                                                   partitioning="blockgrid(2,1,1)"))]) == 0
    assert (tmp_path / "trajectory.csv").read_text().splitlines() == [TRAJECTORY_HEADER]
    metrics = _rows(tmp_path / "metrics.csv")
    assert all(r[k] == "0" for r in metrics for k in r if k.startswith("bytes_"))


def test_snapshot_over_four_ranks(tmp_path):
    cfg = SimConfig(partitioning="blockgrid(2,2,1)", box=AABB((0, 0, 0), (2, 2, 1)),
                    scenario=Scenario("gas", (50, 1)), radius=0.05)
    with Simulation(cfg) as sim:
        sim.step()
        with open(tmp_path / "snap.csv", "w", encoding="utf-8") as fh:
            n = write_snapshot(sim.stores, 1, fh)
        assert sum(len(s) for s in sim.stores) > 50
    assert n == 50
    rows = (tmp_path / "snap.csv").read_text().splitlines()
    assert [int(r.split(",")[1]) for r in rows] == list(range(50))


def test_vtk_flag(tmp_path):
    assert main(["run", "--config", str(_write_cfg(tmp_path, steps=2)), "--vtk"]) == 0
    files = sorted(p.name for p in tmp_path.glob("*.vtk"))
    assert files == ["trajectory_000000.vtk", "trajectory_000001.vtk", "trajectory_000002.vtk"]
    text = (tmp_path / files[0]).read_text()
    assert text.startswith("# vtk DataFile Version 3.0") and "POINTS 2 double" in text


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("dt = zero\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["bogus"]) == 2
    assert main(["version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_setup_errors_exit_2(tmp_path):
    # ghost reach 2 * 0.3 is not below the 0.5 block extent
    cfg = _write_cfg(tmp_path, partitioning="blockgrid(2,1,1)", radius=0.3)
    assert main(["run", "--config", str(cfg)]) == 2
    # box corners lie beyond the outer shell
    cfg = _write_cfg(tmp_path, partitioning="shells(0.3, 0.6)", radius=0.01)
    assert main(["run", "--config", str(cfg)]) == 2
    # schema without the runtime properties
    (tmp_path / "tiny.schema").write_text(
        "property position : vec3 = 0,0,0 sync ALWAYS\n"
        "property interactionRadius : real64 = 0 sync COPY\n")
    cfg = _write_cfg(tmp_path, schema="tiny.schema")
    assert main(["run", "--config", str(cfg)]) == 2


def test_consistency_failure_exit_3(tmp_path, monkeypatch):
    import pdengine.simulation as simulation

    monkeypatch.setattr(simulation, "global_consistency_check",
                        lambda stores, domain, margin=0.0: ["rank 0: injected fault"])
    cfg = _write_cfg(tmp_path, steps=2)
    assert main(["run", "--config", str(cfg), "--check"]) == 3
    assert main(["run", "--config", str(cfg)]) == 0


def test_consistency_error_raised():
    cfg = SimConfig(check=True, steps=1)
    with Simulation(cfg) as sim:
        sim.check = lambda: ["boom"]
        with pytest.raises(ConsistencyError, match="boom"):
            sim.step()


def test_generate_command(tmp_path):
    schema = tmp_path / "s.schema"
    schema.write_text("property position : vec3 = (0,0,0) sync ALWAYS\n"
                      "property interactionRadius : real64 = 0 sync COPY\n"
                      "property force : vec3 = (0,0,0) sync NEVER\n")
    assert main(["generate", "--schema", str(schema), "--out", str(tmp_path / "gen")]) == 0
    assert sorted(p.name for p in (tmp_path / "gen").iterdir()) == \
        ["accessors.py", "manifest.txt", "packing.py", "storage.py"]
    bad = tmp_path / "bad.schema"
    bad.write_text("property force : vec3 = (0,0,0) sync NEVER\n")
    assert main(["generate", "--schema", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["generate", "--no-core", "--schema", str(bad), "--out", str(tmp_path / "x")]) == 0


def test_custom_schema_run(tmp_path):
    from pdengine.codegen import builtin_schema_text

    (tmp_path / "ext.schema").write_text(
        builtin_schema_text() + "property temperature : real64 = 300 sync COPY\n")
    cfg = _write_cfg(tmp_path, schema="ext.schema", steps=5)
    assert main(["run", "--config", str(cfg)]) == 0


def test_settle_under_gravity(tmp_path):
    cfg = SimConfig(scenario=Scenario("settle", (8, 1)), g=(0.0, 0.0, -9.81), gamma_n=2.0,
                    steps=300, radius=0.1, output=tmp_path / "t.csv",
                    metrics=tmp_path / "m.csv")
    assert run_simulation(cfg) == 0
    last = [r for r in _rows(tmp_path / "t.csv") if r["step"] == "300"]
    assert len(last) == 8
    assert all(float(r["z"]) < 0.5 for r in last)
