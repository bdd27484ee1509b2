import json

import numpy as np
import pytest

from classmap.cli import main, read_config
from classmap.data import DiagnosticTable


def _write(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return path


def _blobs(tmp_path, rng, n=40, shift=10.0):
    X = rng.normal(size=(n, 2))
    labels = np.repeat(["a", "b"], n // 2)
    X[n // 2:] += shift
    return _write(tmp_path / "blobs.csv", ["x", "y", "label"],
                  [(f"{x:.6f}", f"{y:.6f}", g) for (x, y), g in zip(X, labels)])


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_da_on_separable_blobs(tmp_path, rng, capsys):
    code, out, _ = _run(capsys, "da", "--input", str(_blobs(tmp_path, rng)), "--out", str(tmp_path / "o"))
    assert code == 0
    assert "misclassification rate: 0.000000" in out
    names = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert names == ["classmap_a.svg", "classmap_b.svg", "diagnostics.csv", "diagnostics.json",
                     "mosaic.svg", "summary.txt"]


def test_outputs_validate_and_round_trip(tmp_path, rng, capsys):
    jsonschema = pytest.importorskip("jsonschema")
    from classmap.files import schema

    assert _run(capsys, "da", "--mode", "lda", "--input", str(_blobs(tmp_path, rng, shift=2.0)),
                "--out", str(tmp_path / "o"))[0] == 0
    text = (tmp_path / "o" / "diagnostics.json").read_text()
    jsonschema.validate(json.loads(text), schema())
    table = DiagnosticTable.from_json(text)
    from_csv = DiagnosticTable.from_csv((tmp_path / "o" / "diagnostics.csv").read_text(), table.class_names)
    np.testing.assert_array_equal(from_csv.predicted, table.predicted)
    np.testing.assert_allclose(from_csv.ld, table.ld, rtol=1e-15)


def test_knn_on_dissimilarities(tmp_path, rng, capsys):
    pts = rng.normal(size=(30, 2))
    pts[15:] += 6
    D = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    labels = np.repeat(["p", "q"], 15)
    path = _write(tmp_path / "d.csv", [f"o{i}" for i in range(30)] + ["label"],
                  [[f"{v:.10f}" for v in row] + [g] for row, g in zip(D, labels)])
    code, out, _ = _run(capsys, "knn", "--k", "5", "--diss", str(path), "--out", str(tmp_path / "o"))
    assert code == 0 and "objects: 30" in out
    table = DiagnosticTable.from_json((tmp_path / "o" / "diagnostics.json").read_text())
    assert np.all(np.isin(table.ld, np.arange(11) / 10))


def test_three_row_toy(tmp_path):
    from classmap.files import ingest_csv

    path = _write(tmp_path / "t.csv", ["x", "label"], [(0.0, "a"), (1.0, "a"), (5.0, "b")])
    data = ingest_csv(path)
    assert data.n == 3 and data.class_names == ("a", "b")
    np.testing.assert_array_equal(data.labels, [1, 1, 2])


@pytest.mark.parametrize("content, message", [
    ("x,y\n1,2\n3,4\n", "labels column 'label' not found"),
    ("x,label\n1,a\n2\n", ":3: expected 2 fields, got 1"),
    ("x,label\n1,a\nfoo,b\n", ":3: column 'x': non-numeric value 'foo'"),
    ("x,x,label\n1,2,a\n", "duplicate header name 'x'"),
])
def test_malformed_input_exits_2(tmp_path, capsys, content, message):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _, err = _run(capsys, "da", "--input", str(path), "--out", str(tmp_path / "o"))
    assert code == 2
    assert message in err


def test_unknown_class_lists_known(tmp_path, rng, capsys):
    code, _, err = _run(capsys, "da", "--input", str(_blobs(tmp_path, rng)), "--classes", "a,c",
                        "--out", str(tmp_path / "o"))
    assert code == 2
    assert "unknown class label 'b'; known classes: a, c" in err


def test_bad_flags_exit_2(tmp_path, rng, capsys):
    path = str(_blobs(tmp_path, rng))
    assert _run(capsys, "knn", "--k", "0", "--input", path)[0] == 2
    assert _run(capsys, "da", "--quantile", "0.3", "--input", path)[0] == 2
    assert _run(capsys, "da")[0] == 2
    assert _run(capsys, "da", "--input", path, "--diss", path)[0] == 2
    assert _run(capsys, "da", "--input", path, "--annotate", "0=x")[0] == 2
    assert _run(capsys, "da", "--input", path, "--annotate", "999=x", "--out", str(tmp_path / "o"))[0] == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    # class b has identical rows, so its covariance cannot be factored
    rows = [(i, i % 3, "a") for i in range(8)] + [(5, 5, "b")] * 8
    path = _write(tmp_path / "s.csv", ["x", "y", "label"], rows)
    code, _, err = _run(capsys, "da", "--input", str(path), "--out", str(tmp_path / "o"))
    assert code == 3
    assert err.startswith("numerical failure:")


def test_config_merge_flags_win(tmp_path, rng, capsys):
    data = str(_blobs(tmp_path, rng, shift=1.0))
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[knn]\n# neighbours\nk = 3\nquantile = 0.99\nshow-outliers = true\n")
    assert read_config(cfg) == {"k": "3", "quantile": "0.99", "show_outliers": "true"}
    _run(capsys, "knn", "--config", str(cfg), "--input", data, "--out", str(tmp_path / "a"))
    _run(capsys, "knn", "--k", "3", "--quantile", "0.99", "--show-outliers", "--input", data,
         "--out", str(tmp_path / "b"))
    _run(capsys, "knn", "--config", str(cfg), "--k", "7", "--input", data, "--out", str(tmp_path / "c"))
    _run(capsys, "knn", "--k", "7", "--quantile", "0.99", "--show-outliers", "--input", data,
         "--out", str(tmp_path / "d"))
    for x, y in (("a", "b"), ("c", "d")):
        assert (tmp_path / x / "diagnostics.json").read_text() == (tmp_path / y / "diagnostics.json").read_text()
    assert (tmp_path / "a" / "diagnostics.json").read_text() != (tmp_path / "c" / "diagnostics.json").read_text()


def test_config_rejects_unknown_key(tmp_path, rng, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("neighbours = 3\n")
    code, _, err = _run(capsys, "knn", "--config", str(cfg), "--input", str(_blobs(tmp_path, rng)))
    assert code == 2 and "unknown option 'neighbours'" in err


def test_annotation_lands_in_its_class_map(tmp_path, rng, capsys):
    data = str(_blobs(tmp_path, rng))
    assert _run(capsys, "da", "--input", data, "--annotate", "25=watch me", "--out", str(tmp_path / "o"))[0] == 0
    assert "watch me" in (tmp_path / "o" / "classmap_b.svg").read_text()
    assert "watch me" not in (tmp_path / "o" / "classmap_a.svg").read_text()


def test_synth_writes_every_kind(tmp_path, capsys):
    code, out, _ = _run(capsys, "synth", "--out", str(tmp_path), "--seed", "3")
    assert code == 0
    assert len(out.split()) == 6
    for line in out.split():
        header = open(line).readline().strip().split(",")
        assert "label" in header
