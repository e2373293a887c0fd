"""End-to-end command-line pipeline checks.

Everything runs in process through cli.main(argv) so exit codes and
stdout/stderr are observable without spawning subprocesses.
"""

import csv
import filecmp
import os

import pytest

from blademl import __version__
from blademl import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def _read_rows(path):
    with open(path, newline="") as handle:
        return list(
            csv.reader(line for line in handle if not line.startswith("#"))
        )


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full gen -> features -> evaluate -> cluster run, shared."""
    root = tmp_path_factory.mktemp("pipeline")
    images = root / "images"
    feats = root / "features.csv"
    reports = root / "reports"
    clusters = root / "clusters"
    assert run("gen", "--out", images, "--counts", "6,6,6",
               "--seed", 3, "--width", 32, "--height", 32) == 0
    assert run("features", "--images", images,
               "--labels", images / "labels.csv", "--out", feats) == 0
    assert run("evaluate", "--features", feats, "--out-dir", reports,
               "--k", 2, "--seed", 5,
               "--logreg-limit", 20, "--mlp-epochs", 2) == 0
    assert run("cluster", "--features", feats, "--out-dir", clusters,
               "--cut-count", 3) == 0
    return root


def test_gen_artifacts(pipeline):
    images = pipeline / "images"
    names = sorted(os.listdir(images))
    assert "labels.csv" in names
    ppms = [n for n in names if n.endswith(".ppm")]
    assert len(ppms) == 18
    assert "healthy_000.ppm" in ppms and "erosion_017.ppm" in ppms


def test_features_artifact(pipeline):
    rows = _read_rows(pipeline / "features.csv")
    assert rows[0][:2] == ["id", "label"]
    assert len(rows[0]) == 2 + 37
    assert len(rows) == 1 + 18


def test_evaluate_artifacts(pipeline):
    reports = pipeline / "reports"
    names = set(os.listdir(reports))
    expected = {"report.csv", "folds.csv", "fold_scores.csv"}
    for model in ("tree", "nb", "logreg", "mlp"):
        expected.add(f"confusion_{model}.csv")
        expected.add(f"predictions_{model}.csv")
    for metric in ("auc", "ca", "f1", "precision", "recall",
                   "specificity", "log_loss"):
        expected.add(f"comparison_{metric}.csv")
    assert names == expected


def test_report_layout(pipeline):
    rows = _read_rows(pipeline / "reports" / "report.csv")
    assert rows[0] == ["model", "auc", "ca", "f1", "precision", "recall",
                       "mcc", "specificity", "log_loss"]
    assert [r[0] for r in rows[1:]] == ["tree", "nb", "logreg", "mlp"]
    for row in rows[1:]:
        for cell in row[1:]:
            float(cell)


def test_predictions_reproduce_reported_ca(pipeline):
    report = {r[0]: r for r in _read_rows(pipeline / "reports" / "report.csv")}
    for model in ("tree", "nb", "logreg", "mlp"):
        rows = _read_rows(pipeline / "reports" / f"predictions_{model}.csv")
        assert rows[0][:4] == ["id", "fold", "actual", "predicted"]
        hits = sum(1 for r in rows[1:] if r[2] == r[3])
        ca = float(report[model][2])
        assert hits / (len(rows) - 1) == ca


def test_cluster_artifacts(pipeline):
    clusters = pipeline / "clusters"
    names = set(os.listdir(clusters))
    assert names == {"distances.csv", "dendrogram.txt", "dendrogram.nwk",
                     "clusters.csv"}
    rows = _read_rows(clusters / "clusters.csv")
    assert rows[0] == ["id", "cluster"]
    assert len(rows) == 1 + 18
    assert {r[1] for r in rows[1:]} == {"0", "1", "2"}
    newick = (clusters / "dendrogram.nwk").read_text()
    assert newick.endswith(";\n") and newick.count(":") >= 18


def test_rerun_byte_identical(pipeline, tmp_path):
    images = tmp_path / "images"
    feats = tmp_path / "features.csv"
    reports = tmp_path / "reports"
    clusters = tmp_path / "clusters"
    assert run("gen", "--out", images, "--counts", "6,6,6",
               "--seed", 3, "--width", 32, "--height", 32) == 0
    assert run("features", "--images", images,
               "--labels", images / "labels.csv", "--out", feats) == 0
    assert run("evaluate", "--features", feats, "--out-dir", reports,
               "--k", 2, "--seed", 5,
               "--logreg-limit", 20, "--mlp-epochs", 2) == 0
    assert run("cluster", "--features", feats, "--out-dir", clusters,
               "--cut-count", 3) == 0
    first = pipeline / "images"
    match, mismatch, errors = filecmp.cmpfiles(
        first, images, os.listdir(first), shallow=False
    )
    assert not mismatch and not errors
    for sub in ("reports", "clusters"):
        base = pipeline / sub
        match, mismatch, errors = filecmp.cmpfiles(
            base, tmp_path / sub, os.listdir(base), shallow=False
        )
        assert not mismatch and not errors, (sub, mismatch, errors)


def test_single_model_skips_comparisons(pipeline, tmp_path):
    out = tmp_path / "solo"
    assert run("evaluate", "--features", pipeline / "features.csv",
               "--out-dir", out, "--k", 2, "--seed", 5,
               "--models", "nb") == 0
    names = os.listdir(out)
    assert not [n for n in names if n.startswith("comparison_")]
    rows = _read_rows(out / "report.csv")
    assert len(rows) == 2 and rows[1][0] == "nb"


def test_cluster_linkage_choice(pipeline, tmp_path):
    feats = pipeline / "features.csv"
    for linkage in ("single", "complete"):
        out = tmp_path / linkage
        assert run("cluster", "--features", feats, "--out-dir", out,
                   "--linkage", linkage, "--no-normalize") == 0

    def root_height(path):
        for line in path.read_text().splitlines():
            if line.startswith("node "):
                return float(line.split()[1])
        raise AssertionError("no root line")

    single = root_height(tmp_path / "single" / "dendrogram.txt")
    complete = root_height(tmp_path / "complete" / "dendrogram.txt")
    assert complete >= single


def test_gen_rejects_empty_corpus(tmp_path, capsys):
    assert run("gen", "--out", tmp_path / "x", "--counts", "0,0,0") == 2
    assert "error" in capsys.readouterr().err


def test_gen_rejects_small_width(tmp_path, capsys):
    assert run("gen", "--out", tmp_path / "x", "--counts", "1,1,1",
               "--width", 8) == 2
    assert "error" in capsys.readouterr().err


def test_counts_parse_errors(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run("gen", "--out", tmp_path / "x", "--counts", "1,2")
    with pytest.raises(SystemExit):
        run("gen", "--out", tmp_path / "x", "--counts", "1,2,oops")
    with pytest.raises(SystemExit):
        run("gen", "--out", tmp_path / "x", "--counts", "1,2,-3")
    capsys.readouterr()


def test_missing_inputs_exit_1(tmp_path, capsys):
    assert run("features", "--images", tmp_path, "--labels",
               tmp_path / "nope.csv", "--out", tmp_path / "f.csv") == 1
    assert run("evaluate", "--features", tmp_path / "nope.csv",
               "--out-dir", tmp_path / "r") == 1
    assert run("cluster", "--features", tmp_path / "nope.csv",
               "--out-dir", tmp_path / "c") == 1
    err = capsys.readouterr().err
    assert err.count("error") == 3


def test_features_missing_image_exit_1(pipeline, tmp_path, capsys):
    labels = tmp_path / "labels.csv"
    labels.write_text("id,label\nghost.ppm,healthy\n")
    assert run("features", "--images", tmp_path, "--labels", labels,
               "--out", tmp_path / "f.csv") == 1
    assert "ghost.ppm" in capsys.readouterr().err


def test_cluster_rejects_both_cut_flags(pipeline, tmp_path, capsys):
    assert run("cluster", "--features", pipeline / "features.csv",
               "--out-dir", tmp_path / "c",
               "--cut-count", 2, "--cut-height", 1.0) == 2
    assert "only one" in capsys.readouterr().err


def test_evaluate_rejects_unknown_model(pipeline, tmp_path, capsys):
    assert run("evaluate", "--features", pipeline / "features.csv",
               "--out-dir", tmp_path / "r", "--models", "tree,svm") == 1
    assert "svm" in capsys.readouterr().err


def test_help_and_version(capsys):
    with pytest.raises(SystemExit) as info:
        run("--version")
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit) as info:
        run("evaluate", "--help")
    assert info.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--features", "--out-dir", "--k", "--seed", "--models",
                 "--logreg-rate", "--tree-max-depth", "--mlp-hidden"):
        assert flag in text
