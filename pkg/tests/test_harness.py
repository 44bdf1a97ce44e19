import json
import struct

import numpy as np
import pytest

from coevolab.errors import CheckpointError, ConfigurationError
from coevolab.harness.binfmt import ARCHIVE_MAGIC, CHECKPOINT_MAGIC, read_container, write_container
from coevolab.harness.cli import main
from coevolab.harness.csvio import export_grid_csv, read_grid_csv
from coevolab.harness.manifest import ExperimentManifest, load_manifest, parse_manifest
from coevolab.harness.rundir import load_checkpoint, read_archive, run_archives
from coevolab.progress import TournamentGrid

TOY = {"variant": "standard", "master_seed": 3, "N": 4, "n": 2, "nphases": 4, "ngenerations": 3,
       "invert_every": 6, "archive_every": 6, "max_steps": 80, "checkpoint_every": 0}


# -- manifest --------------------------------------------------------------------

def test_minimal_manifest_defaults():
    m = parse_manifest({"variant": "standard", "master_seed": 1})
    assert (m.N, m.n, m.nphases, m.ngenerations, m.invert_every) == (80, 10, 1500, 100, 500)
    assert m.mutation_rate == 0.02 and m.archive_every == 10000 and m.max_steps == 1000
    cfg = m.to_config()
    assert cfg.robots[0].max_wheel_speed == 8.5 and cfg.robots[1].max_wheel_speed == 10.0
    assert cfg.topology.gene_count == 382


def test_cylinder_speeds():
    cfg = parse_manifest({"arena": {"central_cylinder": True}}).to_config()
    assert cfg.robots[0].max_wheel_speed == 10.0


def test_manifest_size_constraint():
    with pytest.raises(ConfigurationError, match="^N:"):
        parse_manifest({"N": 24, "n": 10})
    assert parse_manifest({"N": 20, "n": 5}).n == 5


def test_manifest_vanilla_default_n():
    assert parse_manifest({"variant": "vanilla", "N": 16}).n == 16


def test_manifest_unknown_key():
    with pytest.raises(ConfigurationError, match="bogus"):
        parse_manifest({"bogus": 1})


def test_manifest_bad_value_names_key():
    with pytest.raises(ConfigurationError, match="mutation_rate"):
        parse_manifest({"mutation_rate": 2})


def test_digest_ignores_operational_fields():
    a = parse_manifest(TOY)
    b = parse_manifest(dict(TOY, workers=8, output_dir="/x", checkpoint_every=5))
    c = parse_manifest(dict(TOY, master_seed=4))
    assert a.digest() == b.digest() != c.digest()


def test_load_manifest_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_manifest(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_manifest(p)


def test_defaults_roundtrip():
    m = ExperimentManifest()
    assert parse_manifest(json.loads(m.to_json())) == m


# -- container format -------------------------------------------------------------

def test_container_roundtrip(tmp_path):
    blobs = {"ids": np.array([3, 1], dtype=np.uint64), "genes": np.arange(6.0).reshape(2, 3)}
    p = tmp_path / "x.cva"
    write_container(p, ARCHIVE_MAGIC, {"generation": 7}, blobs)
    header, back, digest = read_container(p, ARCHIVE_MAGIC)
    assert header == {"generation": 7} and digest == bytes(32)
    assert np.array_equal(back["genes"], blobs["genes"]) and back["ids"].tolist() == [3, 1]


def test_container_guards(tmp_path):
    p = tmp_path / "x.cvc"
    write_container(p, CHECKPOINT_MAGIC, {}, {"v": np.ones(3)})
    with pytest.raises(CheckpointError):
        read_container(p, ARCHIVE_MAGIC)
    data = p.read_bytes()
    (tmp_path / "t.cvc").write_bytes(data[:-10])
    with pytest.raises(CheckpointError, match="checksum"):
        read_container(tmp_path / "t.cvc", CHECKPOINT_MAGIC)
    write_container(p, CHECKPOINT_MAGIC, {}, {"v": np.ones(3)}, version=2)
    with pytest.raises(CheckpointError, match="version"):
        read_container(p, CHECKPOINT_MAGIC)


def test_container_is_little_endian(tmp_path):
    p = tmp_path / "x.cva"
    write_container(p, ARCHIVE_MAGIC, {}, {"v": np.array([1.5])})
    data = p.read_bytes()
    assert struct.unpack_from("<I", data, 8)[0] == 1
    assert struct.unpack("<d", data[-40:-32])[0] == 1.5


# -- grid CSV ------------------------------------------------------------------------

def test_grid_csv_normalize(tmp_path):
    grid = TournamentGrid([0], [0], np.array([[0.4]]))
    export_grid_csv(grid, tmp_path / "g.csv", normalize=True)
    assert read_grid_csv(tmp_path / "g.csv").cells.tolist() == [[0.0]]
    grid = TournamentGrid([0], [0, 5], np.array([[0.2, 0.6]]))
    export_grid_csv(grid, tmp_path / "g.csv", normalize=True)
    assert read_grid_csv(tmp_path / "g.csv").cells.tolist() == [[0.0, 1.0]]


def test_grid_csv_roundtrip_exact(tmp_path):
    cells = np.random.default_rng(0).random((3, 2))
    export_grid_csv(TournamentGrid([0, 1, 2], [0, 9], cells), tmp_path / "g.csv")
    back = read_grid_csv(tmp_path / "g.csv")
    assert back.predator_generations == [0, 1, 2] and back.prey_generations == [0, 9]
    assert back.cells.tobytes() == cells.tobytes()


# -- runs through the CLI ---------------------------------------------------------

def _manifest(tmp_path, **kw):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(dict(TOY, **kw)))
    return p


def _snapshot(run):
    files = sorted(p for p in run.rglob("*") if p.is_file() and p.name != "checkpoint.cvc")
    return {str(p.relative_to(run)): p.read_bytes() for p in files}


def test_evolve_writes_run_directory(tmp_path):
    run = tmp_path / "run"
    assert main(["evolve", str(_manifest(tmp_path)), "--out", str(run)]) == 0
    assert sorted(p.name for p in (run / "archives").iterdir()) == \
        ["gen_00000000.cva", "gen_00000006.cva", "gen_00000012.cva"]
    gens = (run / "telemetry" / "generations.csv").read_text().splitlines()
    assert len(gens) == 1 + 12
    phases = (run / "telemetry" / "phases.csv").read_text().splitlines()
    assert [r.split(",")[1] for r in phases[1:]] == ["predator", "predator", "prey", "prey"]
    last = read_archive(run / "archives" / "gen_00000012.cva")
    assert len(last.predator.members) == 4 and last.generation == 12


def test_evolve_refuses_existing_run(tmp_path):
    m = _manifest(tmp_path)
    run = tmp_path / "run"
    assert main(["evolve", str(m), "--out", str(run)]) == 0
    assert main(["evolve", str(m), "--out", str(run)]) == 2
    assert main(["evolve", str(m), "--out", str(run), "--force"]) == 0


def test_bad_manifest_exit_code(tmp_path, capsys):
    assert main(["evolve", str(_manifest(tmp_path, N=6)), "--out", str(tmp_path / "r")]) == 2
    assert "N:" in capsys.readouterr().err


@pytest.mark.parametrize("cut", [2, 5, 7])
def test_split_run_is_identical(tmp_path, cut):
    m = _manifest(tmp_path)
    straight, split = tmp_path / "a", tmp_path / "b"
    main(["evolve", str(m), "--out", str(straight)])
    main(["evolve", str(m), "--out", str(split), "--stop-after", str(cut)])
    assert main(["resume", str(split / "checkpoint.cvc"), "--workers", "3"]) == 0
    assert _snapshot(straight) == _snapshot(split)


def test_resume_refuses_edited_manifest(tmp_path):
    run = tmp_path / "run"
    main(["evolve", str(_manifest(tmp_path)), "--out", str(run), "--stop-after", "3"])
    edited = json.loads((run / "manifest.json").read_text())
    edited["mutation_rate"] = 0.5
    with pytest.raises(CheckpointError, match="hash"):
        load_checkpoint(run / "checkpoint.cvc", parse_manifest(edited))
    (run / "manifest.json").write_text(json.dumps(edited))
    assert main(["resume", str(run / "checkpoint.cvc")]) == 2


def test_tournament_progress_complexity_replay(tmp_path):
    runs = []
    for seed in (1, 2, 3):
        run = tmp_path / f"r{seed}"
        main(["evolve", str(_manifest(tmp_path, master_seed=seed)), "--out", str(run)])
        runs.append(str(run))
    out = tmp_path / "out"
    assert main(["tournament", runs[0], "--out", str(out)]) == 0
    grid = read_grid_csv(out / "tournament.csv")
    assert grid.cells.shape == (3, 3)
    assert np.all((grid.cells >= 0) & (grid.cells <= 1))
    assert main(["tournament", runs[0], runs[1], "--last-only", "--out", str(out)]) == 0
    assert read_grid_csv(out / "cross_predA_preyB.csv").cells.shape == (1, 1)
    assert main(["progress", *runs, "--out", str(out)]) == 0
    rows = (out / "progress.csv").read_text().splitlines()
    assert rows[0] == "generation,historical_predator,historical_prey,global_predator,global_prey"
    assert [r.split(",")[0] for r in rows[1:]] == ["0", "6", "12"]
    assert main(["complexity", runs[0], "--out", str(out)]) == 0
    assert len((out / "complexity.csv").read_text().splitlines()) == 4
    assert (out / "correlation.csv").exists()
    archive = run_archives(runs[0])[-1]
    pid, qid = archive.predator.members[0].id, archive.prey.members[0].id
    traj = tmp_path / "traj.csv"
    assert main(["replay", str(archive.path), str(pid), str(qid), "--out", str(traj)]) == 0
    assert traj.read_text().startswith("step,robot,x,y")
    assert main(["replay", str(archive.path), "999", str(qid), "--out", str(traj)]) == 2


def test_defaults_command(capsys):
    assert main(["defaults"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["N"] == 80 and data["n"] == 10
