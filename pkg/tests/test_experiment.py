import json

import numpy as np
import pytest

from conftest import DATA
from ispso.cli import main, parse_mask
from ispso.experiment import (
    ConfigError,
    ReportRow,
    ReportTable,
    emit_table,
    execute,
    parse_markdown_table,
    parse_spec,
    parse_spec_dict,
    render_table,
    table_from_results,
)
from ispso.orchestrator import ISPSO_GLOBAL, PLAIN_BPSO

IRIS = str(DATA / "iris.csv")


def cfg_file(tmp_path, text, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def quick_doc(tmp_path, **extra):
    doc = {
        "datasets": [{"name": "iris", "path": IRIS, "label": "class"}],
        "variants": [ISPSO_GLOBAL, PLAIN_BPSO],
        "runs": 2,
        "out": str(tmp_path / "out"),
        "pso": {"particles": 8, "iterations": 10},
    }
    doc.update(extra)
    return doc


# ---- parsing


def test_minimal_defaults(tmp_path):
    spec = parse_spec(cfg_file(tmp_path, f"datasets: [{{name: iris, path: {IRIS}, label: class}}]\n"))
    assert spec.n_runs == 20
    assert [v.label for v in spec.variants] == [ISPSO_GLOBAL, PLAIN_BPSO]
    cfg = spec.variants[0].config
    assert cfg.cv_folds == 10 and cfg.knn.k == 1 and cfg.pso.n_particles == 30 and cfg.pso.max_iterations == 100
    assert spec.out_dir == tmp_path / "results"


def test_r_out_of_domain_names_key(tmp_path):
    with pytest.raises(ConfigError, match=r"seeding\.r.*\[1, 50\]") as exc:
        parse_spec_dict({"datasets": [{"name": "a", "path": IRIS}], "seeding": {"r": 60}})
    assert exc.value.key == "seeding"
    with pytest.raises(ConfigError) as exc:
        parse_spec_dict({"datasets": [{"name": "a", "path": IRIS, "r": 60}]})
    assert exc.value.key == "datasets[0].r"


def test_duplicate_dataset_names():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_spec_dict({"datasets": [{"name": "a", "path": IRIS}, {"name": "a", "path": IRIS}]})


@pytest.mark.parametrize(
    "doc,key",
    [
        ({"datasets": [{"name": "a", "path": IRIS}], "pso": {"partcles": 3}}, "pso.partcles"),
        ({"datasets": [{"name": "a", "path": IRIS}], "bogus": 1}, "bogus"),
        ({"datasets": [{"name": "a", "path": IRIS, "colour": 1}]}, "datasets[0].colour"),
        ({"datasets": [{"name": "a", "path": "/no/such.csv"}]}, "datasets[0].path"),
        ({"datasets": [{"name": "a", "path": IRIS}], "knn": {"k": "one"}}, "knn.k"),
        ({"datasets": [{"name": "a", "path": IRIS}], "variants": ["ga"]}, "variants[0].name"),
        ({"datasets": [{"name": "a", "path": IRIS}], "variants": [{"name": "plain_bpso", "pso": {"vmax": 0}}]},
         "variants[0].pso"),
        ({"datasets": [{"name": "a", "path": IRIS}], "runs": 0}, "runs"),
        ({"datasets": [{"name": "a", "path": IRIS}], "formats": ["pdf"]}, "formats"),
        ({"datasets": [{"name": "a", "path": IRIS}], "chaos": {"seed": 0.25}}, "chaos"),
        ({"datasets": []}, "datasets"),
        ({}, "datasets"),
    ],
)
def test_validation_names_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_spec_dict(doc)
    assert exc.value.key == key


def test_manifest_and_overrides(tmp_path):
    (tmp_path / "m.yaml").write_text(f"iris: {{path: {IRIS}, label: class}}\n")
    spec = parse_spec(
        cfg_file(
            tmp_path,
            "manifest: m.yaml\n"
            "datasets: [iris, {name: iris2, path: " + IRIS + ", label: class, r: 5, v: 0.9}]\n"
            "variants:\n  - plain_bpso\n  - {name: ispso_global, label: ispso_t, seeding: {temperature: 2.0}}\n"
            "seeding: {record_every: 4}\nfitness: {tie_eps: 0.01}\nnormalize: {enabled: false}\n",
        )
    )
    assert [d.name for d in spec.datasets] == ["iris", "iris2"]
    pairs = spec.pairs()
    assert len(pairs) == 4
    ds, var, cfg = pairs[3]
    assert (ds.name, var.label) == ("iris2", "ispso_t")
    assert (cfg.seeding.r, cfg.seeding.v, cfg.seeding.temperature, cfg.seeding.record_every) == (5, 0.9, 2.0, 4)
    assert cfg.knn.tie_eps == 0.01 and cfg.normalize_bounds is None
    assert pairs[0][2].seeding.temperature is None


def test_cli_style_overrides(tmp_path):
    spec = parse_spec_dict(quick_doc(tmp_path)).with_overrides(seed=40, runs=3, out=tmp_path / "x")
    assert spec.n_runs == 3 and spec.out_dir == tmp_path / "x"
    assert all(v.config.seed == 40 for v in spec.variants)


# ---- execution


@pytest.fixture(scope="module")
def executed(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("exp")
    spec = parse_spec_dict(quick_doc(tmp))
    return spec, execute(spec)


def test_counts_rows_and_files(executed):
    spec, table = executed
    out = spec.out_dir
    assert len(table.rows) == 2 and table.exit_code == 0
    assert sorted(p.name for p in (out / "runs").iterdir()) == [
        "iris__ispso_global__seed0.json",
        "iris__ispso_global__seed1.json",
        "iris__plain_bpso__seed0.json",
        "iris__plain_bpso__seed1.json",
    ]
    assert (out / "iris__ispso_global.json").is_file() and (out / "iris__plain_bpso.meta.json").is_file()
    for suffix in (".txt", ".tsv", ".md"):
        assert (out / f"summary{suffix}").is_file()


def machine_files(out):
    return {
        p.relative_to(out).as_posix(): p.read_bytes()
        for p in sorted(out.rglob("*.json"))
        if not p.name.endswith(".meta.json")
    }


def test_rerun_is_byte_identical(executed, tmp_path):
    spec, _ = executed
    again = parse_spec_dict(quick_doc(tmp_path))
    execute(again, jobs=2)
    assert machine_files(spec.out_dir) == machine_files(again.out_dir)


def test_aggregate_matches_run_files(executed):
    spec, table = executed
    for row in table.rows:
        doc = json.loads((spec.out_dir / f"iris__{row.variant}.json").read_text())
        accs, sizes = [], []
        for run in doc["runs"]:
            rec = json.loads((spec.out_dir / "runs" / f"iris__{row.variant}__seed{run['seed']}.json").read_text())
            assert rec["selected"] == run["selected"] and len(rec["selected"]) == rec["n_selected"]
            accs.append(rec["accuracy"])
            sizes.append(rec["n_selected"])
        agg = doc["aggregate"]
        assert abs(agg["mean_accuracy"] - np.mean(accs)) <= 1e-12
        assert abs(agg["sd_accuracy"] - np.std(accs, ddof=1)) <= 1e-12
        assert abs(agg["mean_subset_size"] - np.mean(sizes)) <= 1e-12
        assert row.mean_accuracy == agg["mean_accuracy"]


def test_markdown_round_trip(executed):
    spec, table = executed
    parsed = parse_markdown_table((spec.out_dir / "summary.md").read_text())
    results = [p for p in sorted(spec.out_dir.glob("iris__*.json")) if not p.name.endswith(".meta.json")]
    rebuilt = table_from_results(results)
    assert len(parsed) == len(rebuilt.rows) == 2
    for md, row in zip(parsed, sorted(rebuilt.rows, key=lambda r: [ISPSO_GLOBAL, PLAIN_BPSO].index(r.variant))):
        assert (md["dataset"], md["variant"]) == (row.dataset, row.variant)
        assert float(md["acc%"]) == round(100 * row.mean_accuracy, 2)
        assert float(md["sd%"]) == round(100 * row.sd_accuracy, 2)
        assert float(md["size"]) == round(row.mean_subset_size, 2)
        assert md["best_subset"] == ",".join(map(str, row.best_selected))
        assert md["best"] == row.best


def test_partial_failure_recorded(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,class\n1,?,x\n2,3,y\n")
    doc = quick_doc(tmp_path, datasets=[{"name": "bad", "path": str(bad)}, {"name": "iris", "path": IRIS, "label": "class"}])
    table = execute(parse_spec_dict(doc))
    assert table.exit_code == 1
    assert [r.ok for r in table.rows] == [False, False, True, True]
    assert "line 2" in table.rows[0].error
    assert "FAILED" in (tmp_path / "out" / "summary.txt").read_text()


# ---- tables


def row(ds, var, acc):
    return ReportRow(ds, var, 2, acc, 0.01, 2.0, [3, 4], 0.1, acc, acc, acc)


def test_single_row_flagged(tmp_path):
    t = ReportTable([row("iris", "a", 0.9)]).flag_best()
    assert t.rows[0].best
    text = emit_table(t, "text", tmp_path / "t.txt").read_text().splitlines()
    assert len(text) == 3 and text[2].rstrip().endswith("*")


def test_ties_all_flagged():
    t = ReportTable([row("w", "a", 0.9), row("w", "b", 0.9), row("w", "c", 0.8), row("x", "a", 0.5)]).flag_best()
    assert [r.best for r in t.rows] == [True, True, False, True]
    md = parse_markdown_table(render_table(t, "markdown"))
    assert [r["best"] for r in md] == [True, True, False, True]
    tsv = render_table(t, "delimited").splitlines()
    assert [line.split("\t")[-1] for line in tsv[1:]] == ["*", "*", "", "*"]


def test_empty_report_and_unwritable(tmp_path):
    with pytest.raises(ValueError):
        render_table(ReportTable([]), "text")
    with pytest.raises(OSError):
        emit_table(ReportTable([row("a", "b", 0.5)]), "text", tmp_path / "missing" / "t.txt")


# ---- command line


def test_cli_run_and_inspect(tmp_path, capsys, monkeypatch):
    p = cfg_file(tmp_path, f"datasets: [{{name: iris, path: {IRIS}, label: class}}]\nruns: 5\n"
                 "pso: {particles: 6, iterations: 5}\nvariants: [plain_bpso]\n")
    monkeypatch.setenv("ISPSO_OUT", str(tmp_path / "env_out"))
    monkeypatch.setenv("ISPSO_JOBS", "2")
    assert main(["run", str(p), "--runs", "2", "--seed", "7", "-q"]) == 0
    res = tmp_path / "env_out" / "iris__plain_bpso.json"
    doc = json.loads(res.read_text())
    assert [r["seed"] for r in doc["runs"]] == [7, 8]
    assert main(["run", str(p), "--runs", "1", "--out", str(tmp_path / "flag_out"), "-q"]) == 0
    assert (tmp_path / "flag_out" / "iris__plain_bpso.json").is_file()
    capsys.readouterr()
    assert main(["inspect", str(res)]) == 0
    assert "iris / plain_bpso" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    bad = cfg_file(tmp_path, f"datasets: [{{name: iris, path: {IRIS}}}]\nseeding: {{r: 60}}\n")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "nope.yaml")]) == 2
    broken = tmp_path / "broken.csv"
    broken.write_text("a,class\n1,x\nzz,y\n")
    partial = cfg_file(
        tmp_path,
        f"datasets: [{{name: b, path: {broken}}}, {{name: iris, path: {IRIS}, label: class}}]\n"
        f"runs: 1\nout: {tmp_path / 'o'}\npso: {{particles: 4, iterations: 2}}\n",
        "partial.yaml",
    )
    assert main(["run", str(partial), "-q"]) == 1


def test_cli_eval(capsys):
    assert main(["eval", IRIS, "--mask", "3,4", "--label", "class", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["selected"] == [3, 4] and out["accuracy"] == pytest.approx(142 / 150)
    assert main(["eval", IRIS, "--mask", "9", "--label", "class"]) == 2


def test_parse_mask():
    assert parse_mask("3,4", 4).tolist() == [0, 0, 1, 1]
    assert parse_mask("0011", 4).tolist() == [0, 0, 1, 1]
    with pytest.raises(ConfigError):
        parse_mask("0,", 4)
