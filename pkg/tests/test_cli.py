import json

import numpy as np
import pytest

from dpap import fileio
from dpap.cli import main
from dpap.segsim import Edge, SuperpixelGraph
from dpap.synth import GenConfig, sample_dataset


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.txt"
    fileio.write_dataset(path, sample_dataset(GenConfig(n=12, seed=3)))
    return path


def test_gen_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "gen", "--count", 2, "--seed", 7, "--n", 10, "--out", tmp_path / name)[0] == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["dataset_0000.txt", "dataset_0001.txt"]
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    ds = fileio.read_dataset(tmp_path / "a" / "dataset_0001.txt")
    assert ds == sample_dataset(GenConfig(n=10, seed=8))


def test_gen_count_zero_writes_nothing(tmp_path, capsys):
    assert run(capsys, "gen", "--count", 0, "--out", tmp_path / "x")[0] == 0
    assert not (tmp_path / "x").exists()
    assert run(capsys, "gen", "--count", -1, "--out", tmp_path / "x")[0] == 1


def test_gen_uses_output_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DPAP_OUTPUT_DIR", str(tmp_path))
    assert run(capsys, "gen", "--count", 1, "--n", 5)[0] == 0
    assert (tmp_path / "data" / "dataset_0000.txt").exists()


@pytest.mark.parametrize("algo", ["dpap", "ap", "icm1", "icmn"])
def test_cluster_each_algorithm(algo, dataset, tmp_path, capsys):
    code, out, _ = run(capsys, "cluster", algo, dataset, "--labels-out", tmp_path / "l.txt")
    assert code == 0
    d = json.loads(out)
    assert d["algorithm"] == algo and len(d["labels"]) == 12
    assert fileio.read_labels(tmp_path / "l.txt").tolist() == [l - 1 for l in d["labels"]]


def test_cluster_on_similarity_csv(tmp_path, capsys):
    s = np.array([[0.0, -50.0], [-50.0, 0.0]])
    fileio.write_similarity(tmp_path / "s.csv", s)
    code, out, _ = run(capsys, "cluster", "icm1", tmp_path / "s.csv")
    assert code == 0 and json.loads(out)["labels"] == [1, 2]


def test_cluster_overrides(tmp_path, capsys):
    s = np.array([[0.0, -1.0], [-1.0, -0.5]])
    fileio.write_similarity(tmp_path / "s.csv", s)
    _, out, _ = run(capsys, "cluster", "icmn", tmp_path / "s.csv", "--self-sim", -5)
    assert json.loads(out)["labels"] in ([1, 1], [2, 2])
    _, out, _ = run(capsys, "cluster", "ap", tmp_path / "s.csv", "--d", -5)
    assert len(set(json.loads(out)["labels"])) == 1
    _, out, _ = run(capsys, "cluster", "icmn", tmp_path / "s.csv", "--scale", 3, "--prior", "ap")
    assert json.loads(out)["log_joint"] == -1.5


def test_cluster_with_table_prior(tmp_path, capsys, dataset):
    (tmp_path / "p.txt").write_text("0\n-inf\n")
    code, out, _ = run(capsys, "cluster", "icmn", dataset, "--prior", f"table:{tmp_path / 'p.txt'}",
                       "--out", tmp_path / "r.json")
    res = fileio.read_result(tmp_path / "r.json")
    assert code == 0 and res.labels.n_clusters == 12


def test_usage_errors(dataset, capsys):
    assert run(capsys, "cluster", "dpap", dataset, "--d", -3)[0] == 1
    assert run(capsys, "cluster", "ap", dataset, "--prior", "dp")[0] == 1
    assert run(capsys, "cluster", "dpap", dataset, "--scale", 0)[0] == 1
    assert run(capsys, "bench", "--algos", "kmeans")[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "nope", str(dataset)])
    assert exc.value.code == 1


def test_data_errors(tmp_path, capsys):
    assert run(capsys, "cluster", "dpap", tmp_path / "missing.csv")[0] == 2
    (tmp_path / "bad.csv").write_text("2\n0,1\n")
    assert run(capsys, "cluster", "dpap", tmp_path / "bad.csv")[0] == 2
    assert run(capsys, "cluster", "icmn", tmp_path / "bad.csv", "--prior", "table:nowhere")[0] == 2


def test_strict_non_convergence(dataset, capsys):
    assert run(capsys, "cluster", "dpap", dataset, "--max-iters", 1, "--strict")[0] == 3
    assert run(capsys, "cluster", "dpap", dataset, "--max-iters", 1)[0] == 0


def test_eval_against_truth(dataset, tmp_path, capsys):
    ds = fileio.read_dataset(dataset)
    res_path = tmp_path / "r.json"
    from dpap.model import RunResult

    fileio.write_result(res_path, RunResult(ds.truth, 0.0, 0, True, "truth", {}, {}))
    code, out, _ = run(capsys, "eval", res_path, dataset)
    row = json.loads(out)
    assert code == 0 and row["rand_index"] == 1.0 and row["delta_loglik"] == 0.0

    # a relabelled copy in a plain labels file: same partition, other exemplars
    groups = ds.truth.groups()
    relabelled = np.empty(ds.n, dtype=int)
    for members in groups:
        relabelled[members] = members[-1]
    fileio.write_labels(tmp_path / "t.txt", relabelled)
    code, out, _ = run(capsys, "eval", res_path, tmp_path / "t.txt", "--format", "csv")
    header, values = out.strip().splitlines()
    assert header == "rand_index,delta_loglik,n_clusters"
    assert values.split(",")[0] == "1.0" and values.split(",")[1] == ""


def test_eval_small_instance_matches_metrics(tmp_path, capsys):
    from dpap.metrics import delta_loglik, rand_index
    from dpap.model import RunResult, SimilarityModel, validate
    from dpap.priors import dp_prior

    s = np.array([[-1.0, -2.0, -3.0, -4.0], [-2.0, -1.0, -2.5, -3.0],
                  [-3.0, -2.5, -1.0, -0.5], [-4.0, -3.0, -0.5, -1.0]])
    fileio.write_similarity(tmp_path / "s.csv", s)
    found, truth = validate([0, 0, 2, 2]), validate([0, 1, 1, 3])
    fileio.write_result(tmp_path / "r.json", RunResult(found, 0.0, 0, True, "x", {}, {}))
    fileio.write_labels(tmp_path / "t.txt", truth)
    _, out, _ = run(capsys, "eval", tmp_path / "r.json", tmp_path / "t.txt", "--sim", tmp_path / "s.csv")
    row = json.loads(out)
    assert row["rand_index"] == rand_index(found, truth)
    assert row["delta_loglik"] == delta_loglik(found, truth, SimilarityModel(s), dp_prior())
    assert row["n_clusters"] == 2


def test_eval_size_mismatch(dataset, tmp_path, capsys):
    fileio.write_labels(tmp_path / "t.txt", [0, 1])
    from dpap.model import RunResult, validate

    fileio.write_result(tmp_path / "r.json", RunResult(validate([0, 0, 0]), 0.0, 0, True, "x", {}, {}))
    assert run(capsys, "eval", tmp_path / "r.json", tmp_path / "t.txt")[0] == 2


def _toy_graph(path):
    g = SuperpixelGraph([[0, 0, 0], [1, 0, 0], [0.5, 0.5, 0.5]],
                        [Edge(0, 1, (0.2, 0.4))])
    fileio.write_superpixels(path, g)
    return g


def test_segsim_toy_graph(tmp_path, capsys):
    from dpap.segsim import SegConfig, compose

    g = _toy_graph(tmp_path / "g.json")
    code, _, _ = run(capsys, "segsim", tmp_path / "g.json", "--tau-r", 1, "--tau-e", 1,
                     "--out", tmp_path / "s.csv")
    s = fileio.read_similarity(tmp_path / "s.csv").s
    assert code == 0 and np.array_equal(s, compose(g, SegConfig(1.0, 1.0)).s)
    assert s[0, 1] == pytest.approx(-1.3) and s[0, 2] == -np.inf
    assert "-inf" in (tmp_path / "s.csv").read_text()
    code, out, _ = run(capsys, "segsim", tmp_path / "g.json", "--tau-r", 1, "--tau-e", 1,
                       "--scale", 2)
    assert out.splitlines()[1].split(",")[1] == repr(float(2 * s[0, 1]))


def test_segsim_schema_error(tmp_path, capsys):
    (tmp_path / "g.json").write_text('{"n": 2, "mean_color": [[0, 0, 0]], "edges": []}')
    assert run(capsys, "segsim", tmp_path / "g.json")[0] == 2


def test_segsim_output_feeds_cluster(tmp_path, capsys):
    _toy_graph(tmp_path / "g.json")
    run(capsys, "segsim", tmp_path / "g.json", "--self-sim", -0.5, "--out", tmp_path / "s.csv")
    code, out, _ = run(capsys, "cluster", "dpap", tmp_path / "s.csv")
    assert code == 0 and len(json.loads(out)["labels"]) == 3


def test_bench_small_and_deterministic(tmp_path, capsys):
    args = ["bench", "--count", 3, "--n", 12, "--seed", 5, "--d-grid=-10,0"]
    for name in ("a", "b"):
        assert run(capsys, *args, "--out", tmp_path / name)[0] == 0
    for f in ("records.csv", "histograms.csv", "scatter.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    algos = {line.split(",")[1] for line in (tmp_path / "a" / "records.csv").read_text().splitlines()[1:]}
    assert algos == {"dpap", "icm1", "icmn", "ap(-10)", "ap(0)"}


def test_bench_restricted_roster_with_figures(tmp_path, capsys):
    code, _, _ = run(capsys, "bench", "--count", 2, "--n", 10, "--algos", "dpap",
                     "--figures", "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "records.csv").read_text().splitlines()
    assert len(lines) == 3 and all(",dpap," in ln for ln in lines[1:])
    assert (tmp_path / "size_histograms.png").stat().st_size > 0
    assert (tmp_path / "delta_loglik.png").stat().st_size > 0


def test_bench_on_loaded_data(tmp_path, capsys):
    run(capsys, "gen", "--count", 2, "--n", 8, "--out", tmp_path / "data")
    code, _, _ = run(capsys, "bench", "--data", tmp_path / "data", "--algos", "icm1",
                     "--out", tmp_path / "out")
    assert code == 0
    assert run(capsys, "bench", "--data", tmp_path / "empty", "--out", tmp_path / "o2")[0] == 2
