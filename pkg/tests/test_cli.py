import json
from pathlib import Path

from appvirtsim.cli import main
from appvirtsim.manifest import load_manifest_file
from conftest import DATA_DIR

GOLDEN = str(DATA_DIR / "expected_matrix.json")


def run(argv):
    return main(argv)


# ---------------------------------------------------------------------------
# build-addon


def test_build_addon_ok(fixture_paths, tmp_path, victim):
    out = tmp_path / "addon.json"
    malicious_out = tmp_path / "payload.json"
    code = run([
        "build-addon",
        "--victim", str(fixture_paths["victim"]),
        "--template", str(fixture_paths["template"]),
        "--catalog", str(fixture_paths["catalog"]),
        "--out", str(out),
        "--malicious-out", str(malicious_out),
    ])
    assert code == 0
    addon = load_manifest_file(out)
    malicious = load_manifest_file(malicious_out)
    assert addon.permissions >= victim.permissions
    assert malicious.permissions <= victim.permissions
    report = json.loads(out.with_suffix(".report.json").read_text())
    assert [s["step"] for s in report["steps"]] == [
        "permissions", "trim_payload", "components", "resources",
    ]


def test_build_addon_malformed_victim(fixture_paths, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"package": "a.b", "bogus_field": 1}', encoding="utf-8")
    code = run([
        "build-addon", "--victim", str(bad),
        "--template", str(fixture_paths["template"]),
        "--catalog", str(fixture_paths["catalog"]),
        "--out", str(tmp_path / "a.json"),
        "--malicious-out", str(tmp_path / "m.json"),
    ])
    assert code == 2
    assert "bogus_field" in capsys.readouterr().err


def test_build_addon_missing_catalog(fixture_paths, tmp_path):
    code = run([
        "build-addon", "--victim", str(fixture_paths["victim"]),
        "--template", str(fixture_paths["template"]),
        "--catalog", str(tmp_path / "nope.json"),
        "--out", str(tmp_path / "a.json"),
        "--malicious-out", str(tmp_path / "m.json"),
    ])
    assert code == 2


# ---------------------------------------------------------------------------
# run-matrix


def test_run_matrix_against_golden(tmp_path):
    out = tmp_path / "report.json"
    code = run(["run-matrix", "--out", str(out), "--expect", GOLDEN])
    assert code == 0
    document = json.loads(out.read_text())
    assert {e["environment"] for e in document["environments"]} == {
        "native", "naive_container", "cloaked_container",
    }
    assert document["scenario_digest"]
    assert document["run_log"]


def test_run_matrix_single_mode(tmp_path):
    out = tmp_path / "report.json"
    code = run(["run-matrix", "--mode", "naive", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text())
    assert [e["environment"] for e in document["environments"]] == ["naive_container"]


def test_run_matrix_tampered_golden(tmp_path, capsys):
    golden = json.loads(Path(GOLDEN).read_text())
    golden["environments"]["native"]["4"] = "virtual_detected"
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(golden), encoding="utf-8")
    code = run(["run-matrix", "--out", str(tmp_path / "r.json"),
                "--expect", str(tampered)])
    assert code == 4
    err = capsys.readouterr().err
    assert "(native, 4): expected virtual_detected, got clean" in err


def test_table_and_structured_formats_agree(tmp_path):
    structured = tmp_path / "report.json"
    table = tmp_path / "report.txt"
    assert run(["run-matrix", "--out", str(structured)]) == 0
    assert run(["run-matrix", "--format", "table", "--out", str(table)]) == 0

    document = json.loads(structured.read_text())
    letters = {"virtual_detected": "V", "clean": "C", "inconclusive": "I",
               "error": "E"}
    expected = {
        env["environment"]: {o["probe"]: letters[o["verdict"]]
                             for o in env["outcomes"]}
        for env in document["environments"]
    }

    lines = table.read_text().splitlines()
    environments = lines[0].split()[1:]
    parsed = {env: {} for env in environments}
    for line in lines[2:]:
        cells = line.split()
        if len(cells) != len(environments) + 1 or cells[0] not in set(
                str(n) for n in range(1, 19)) | {"hotness"}:
            continue
        for env, letter in zip(environments, cells[1:]):
            parsed[env][cells[0]] = letter
    assert parsed == expected


def test_run_matrix_missing_victim_file(tmp_path):
    code = run(["run-matrix", "--victim", str(tmp_path / "ghost.json")])
    assert code == 2


def _strip_durations(document):
    for step in document.get("customization_steps", []):
        step.pop("duration_ms", None)
    return document


def test_run_matrix_deterministic_modulo_durations(tmp_path):
    first, second = tmp_path / "one.json", tmp_path / "two.json"
    assert run(["run-matrix", "--out", str(first)]) == 0
    assert run(["run-matrix", "--out", str(second)]) == 0
    a = _strip_durations(json.loads(first.read_text()))
    b = _strip_durations(json.loads(second.read_text()))
    assert a == b


# ---------------------------------------------------------------------------
# gen-corpus


def test_gen_corpus_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["gen-corpus", "--count", "100", "--seed", "7", "--out", str(a)]) == 0
    assert run(["gen-corpus", "--count", "100", "--seed", "7", "--out", str(b)]) == 0
    files_a = sorted(p.name for p in a.glob("*.json"))
    files_b = sorted(p.name for p in b.glob("*.json"))
    assert files_a == files_b and len(files_a) == 100
    for name in files_a:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_gen_corpus_different_seeds_differ(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["gen-corpus", "--count", "5", "--seed", "1", "--out", str(a)])
    run(["gen-corpus", "--count", "5", "--seed", "2", "--out", str(b)])
    contents_a = b"".join(p.read_bytes() for p in sorted(a.glob("*.json")))
    contents_b = b"".join(p.read_bytes() for p in sorted(b.glob("*.json")))
    assert contents_a != contents_b


def test_gen_corpus_empty(tmp_path):
    out = tmp_path / "empty"
    assert run(["gen-corpus", "--count", "0", "--seed", "7", "--out", str(out)]) == 0
    assert list(out.glob("*.json")) == []


def test_gen_corpus_all_parse(tmp_path):
    out = tmp_path / "corpus"
    assert run(["gen-corpus", "--count", "100", "--seed", "3", "--out", str(out)]) == 0
    packages = set()
    for path in out.glob("*.json"):
        m = load_manifest_file(path)  # re-parse oracle
        packages.add(m.package)
        assert 1 <= len(m.components()) <= 12
    assert len(packages) == 100


# ---------------------------------------------------------------------------
# bench


def test_bench_small_corpus(tmp_path):
    corpus_dir = tmp_path / "corpus"
    run(["gen-corpus", "--count", "4", "--seed", "7", "--out", str(corpus_dir)])
    out = tmp_path / "bench.json"
    code = run(["bench", "--corpus", str(corpus_dir), "--repeat", "2",
                "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text())
    assert len(document["per_manifest"]) == 4
    assert document["aggregate"]["manifests"] == 4
    assert document["hook_dispatch"]["baseline_us"] > 0
    assert document["hook_dispatch"]["hooked_us"] > 0
    for row in document["per_manifest"]:
        assert row["min_ms"] <= row["mean_ms"] <= row["max_ms"]


def test_bench_empty_corpus(tmp_path):
    corpus_dir = tmp_path / "empty"
    corpus_dir.mkdir()
    out = tmp_path / "bench.json"
    assert run(["bench", "--corpus", str(corpus_dir), "--out", str(out)]) == 0
    document = json.loads(out.read_text())
    assert document["per_manifest"] == []
    assert "aggregate" not in document


def test_bench_missing_corpus(tmp_path):
    assert run(["bench", "--corpus", str(tmp_path / "ghost")]) == 2


def test_bench_repeat_count_only_affects_durations(tmp_path):
    corpus_dir = tmp_path / "corpus"
    run(["gen-corpus", "--count", "3", "--seed", "7", "--out", str(corpus_dir)])
    once, tenfold = tmp_path / "r1.json", tmp_path / "r10.json"
    assert run(["bench", "--corpus", str(corpus_dir), "--repeat", "1",
                "--out", str(once)]) == 0
    assert run(["bench", "--corpus", str(corpus_dir), "--repeat", "10",
                "--out", str(tenfold)]) == 0
    a, b = json.loads(once.read_text()), json.loads(tenfold.read_text())
    assert [r["package"] for r in a["per_manifest"]] == [
        r["package"] for r in b["per_manifest"]
    ]
