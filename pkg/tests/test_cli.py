from __future__ import annotations

import json

import pytest

from roomforge import bench
from roomforge.cli import main
from roomforge.export import import_scene


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["corpus", "synth", "--rooms", "600", "--seed", "2", "--out", str(d / "corpus.json")]) == 0
    assert main(["train", "--corpus", str(d / "corpus.json"), "--out", str(d / "params.json")]) == 0
    return d


def test_corpus_validate_ok(workdir, capsys):
    assert main(["corpus", "validate", str(workdir / "corpus.json")]) == 0
    assert "600 rooms" in capsys.readouterr().out


def test_corpus_validate_bad_document(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"catalog": {"models": []}, "rooms": [{"type": "bedroom", "polygon": [[0,0],[1,0],[1,1],[0,1]], '
                 '"objects": [{"model": "nope", "pos": [0,0,0]}]}]}')
    assert main(["corpus", "validate", str(p)]) == 2
    assert "nope" in capsys.readouterr().err


def test_missing_corpus_is_an_error(tmp_path):
    assert main(["train", "--corpus", str(tmp_path / "none.json"), "--out", str(tmp_path / "p.json")]) == 1


def test_mine_writes_patterns(workdir):
    out = workdir / "patterns.json"
    assert main(["mine", "--corpus", str(workdir / "corpus.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"motifs", "abutments"}


def test_stats_report(workdir, capsys):
    assert main(["stats", "report", "--params", str(workdir / "params.json")]) == 0
    out = capsys.readouterr().out
    assert "p_edge" in out and "bed" in out


def test_sample_render_refurnish(workdir):
    cons = workdir / "cons.json"
    cons.write_text(json.dumps({"room_type": "bedroom", "size": [4.0, 3.5], "traversability": True,
                                "openings": [{"kind": "door", "wall": 0, "offset": 1.0, "width": 0.9}]}))
    out = workdir / "scenes"
    args = ["sample", "--params", str(workdir / "params.json"), "--seed", "5", "--count", "2",
            "--constraints", str(cons), "--out", str(out)]
    assert main(args) == 0
    first = (out / "scene_000005.json").read_bytes()
    assert main(args + ["--threads", "8"]) == 0
    assert (out / "scene_000005.json").read_bytes() == first
    layout, prov = import_scene(first)
    assert layout.room_type.value == "bedroom" and prov.seed == 5

    svg = workdir / "scene.svg"
    assert main(["render", str(out / "scene_000005.json"), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")

    new = workdir / "new.json"
    assert main(["refurnish", "--params", str(workdir / "params.json"), "--room", str(out / "scene_000006.json"),
                 "--out", str(new)]) == 0
    assert import_scene(new.read_bytes())[0].boundary == import_scene((out / "scene_000006.json").read_bytes())[0].boundary


def test_sample_exhaustion_is_reported(workdir, capsys):
    cons = workdir / "impossible.json"
    cons.write_text(json.dumps({"size": [4.0, 3.0], "placements": [{"what": "bed", "target": [50, 50]}]}))
    code = main(["sample", "--params", str(workdir / "params.json"), "--constraints", str(cons),
                 "--max-attempts", "5", "--out", str(workdir / "x")])
    assert code == 1
    assert "exhausted" in capsys.readouterr().err


def test_bench_command(workdir, capsys):
    assert main(["bench", "--params", str(workdir / "params.json"), "--runs", "2"]) == 0
    out = capsys.readouterr().out
    for name in bench.ROWS:
        assert name in out


def test_bench_rows_and_table(params):
    rows = bench.run_bench(params, runs=3, repeats=1)
    assert [r.name for r in rows] == list(bench.ROWS)
    assert all(r.mean_s > 0 and r.runs == 3 for r in rows)
    table = bench.format_table(rows)
    assert len(table.splitlines()) == len(bench.ROWS) + 2
