import json

import numpy as np
import pytest

from hotspot_spread.cli import run
from hotspot_spread.learner import SpreadingModel
from hotspot_spread.serialization import read_counts, read_hotspots, read_json, write_models


def test_version_and_usage(capsys):
    assert run(["--version"]) == 0
    assert run([]) == 2
    assert run(["learn", "--out", "x"]) == 2
    assert run(["fetch", "--out", "x"]) == 2
    assert run(["ingest", "--out", "x", "--input", "a.csv", "--subzones", "b.geojson", "-v", "-q"]) == 2


def test_ingest_then_binarize(tmp_path, snapshot_bytes, subzone_geojson):
    snapshots = tmp_path / "snapshots"
    snapshots.mkdir()
    (snapshots / "130615.csv").write_bytes(snapshot_bytes)
    centroids = tmp_path / "grids.csv"
    centroids.write_text("grid_id,lng,lat\ng1,103.805,1.305\ng2,103.815,1.315\ng3,104.5,1.2\n", encoding="utf8")

    code = run(
        ["ingest", "--input", str(snapshots), "--subzones", str(subzone_geojson), "--grid-centroids", str(centroids), "--out", str(tmp_path / "counts"), "-q"]
    )
    assert code == 0
    counts = read_counts(tmp_path / "counts")
    assert counts.week_labels == ["2013-W24"]
    assert counts.counts[:, 0].tolist() == [2, 1, 2, 0]
    assert (tmp_path / "counts" / "grid_map.csv").read_text().splitlines()[1:] == ["g1,SZ-A", "g2,SZ-D"]
    manifest = read_json(tmp_path / "counts" / "manifest.json")
    assert manifest["command"].startswith("hotspot-spread ingest")
    assert str(snapshots / "130615.csv") in manifest["input_hashes"]

    assert run(["binarize", "--input", str(tmp_path / "counts"), "--hotspot-threshold", "2", "--out", str(tmp_path / "hot"), "-q"]) == 0
    series = read_hotspots(tmp_path / "hot")
    assert series.y[:, 0].tolist() == [1, 0, 1, 0]
    assert series.y_hat[:, 0].tolist() == [1, 1, 1, 0]
    assert read_json(tmp_path / "hot" / "manifest.json")["config_snapshot"]["hotspot"]["threshold"] == 2


def test_invalid_threshold_exits_with_usage_error(tmp_path, snapshot_bytes, subzone_geojson):
    (tmp_path / "130615.csv").write_bytes(snapshot_bytes)
    run(["ingest", "--input", str(tmp_path / "130615.csv"), "--subzones", str(subzone_geojson), "--out", str(tmp_path / "counts"), "-q"])
    assert run(["binarize", "--input", str(tmp_path / "counts"), "--hotspot-threshold", "0", "--out", str(tmp_path / "hot"), "-q"]) == 2


def test_invalid_config_exits_with_usage_error(tmp_path):
    config = tmp_path / "c.yaml"
    config.write_text("learner:\n  lookback: 0\n", encoding="utf8")
    assert run(["synth", "--config", str(config), "--out", str(tmp_path / "s"), "-q"]) == 0
    assert run(["learn", "--hotspots", str(tmp_path / "s"), "--config", str(config), "--out", str(tmp_path / "m"), "-q"]) == 2


def test_evaluate_dimension_mismatch_exits_with_data_error(tmp_path):
    config = tmp_path / "c.toml"
    config.write_text("[synth]\nn_subzones = 4\nn_weeks = 6\n", encoding="utf8")
    assert run(["synth", "--config", str(config), "--out", str(tmp_path / "s"), "-q"]) == 0
    forecasts = [{"week": "2013-W03", "issued_week": "2013-W02", "threshold": 0.5, "weights": [], "subzones": [{"id": "SZ000", "score": 0.9, "prediction": 1}]}]
    (tmp_path / "forecasts.json").write_text(json.dumps(forecasts), encoding="utf8")
    assert run(["evaluate", "--hotspots", str(tmp_path / "s"), "--forecasts", str(tmp_path / "forecasts.json"), "--out", str(tmp_path / "e"), "-q"]) == 1


@pytest.mark.parametrize(
    "content",
    [
        b"address,lat,lng\nA,1.305,103.805\nB,1.305,103.805,x,y\n",
        b"address,lat,lng\n\xff\xfe,1.305,103.805\n",
    ],
)
def test_malformed_snapshot_exits_with_data_error(tmp_path, subzone_geojson, content, capsys):
    (tmp_path / "130615.csv").write_bytes(content)
    code = run(["ingest", "--input", str(tmp_path / "130615.csv"), "--subzones", str(subzone_geojson), "--out", str(tmp_path / "counts"), "-q"])
    assert code == 1
    assert "MalformedInput" in capsys.readouterr().err


def test_missing_input_exits_with_data_error(tmp_path, capsys):
    assert run(["binarize", "--input", str(tmp_path / "nowhere"), "--out", str(tmp_path / "hot"), "-q"]) == 1
    assert "InputNotFound" in capsys.readouterr().err
    assert run(["learn", "--hotspots", str(tmp_path / "nowhere"), "--out", str(tmp_path / "m"), "-q"]) == 1


def test_synth_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert run(["synth", "--seed", "5", "--out", str(tmp_path / name), "-q"]) == 0
    for file in ("y.csv", "y_hat.csv", "counts.csv", "scenario.json"):
        assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()
    assert read_json(tmp_path / "a" / "scenario.json")["seed"] == 5
    assert read_json(tmp_path / "a" / "manifest.json")["seed"] == 5


def test_network_and_compare(tmp_path, subzone_geojson):
    ids = ["SZ-A", "SZ-B", "SZ-C", "SZ-D"]
    rng = np.random.default_rng(0)
    models = [
        SpreadingModel(P=rng.random((4, 4)), w=np.array([0.5, 0.5]), target_week=week, final_loss=0.0, iterations_used=1, subzone_ids=ids)
        for week in ("2013-W10", "2013-W11", "2014-W02")
    ]
    write_models(models, tmp_path / "models")
    (tmp_path / "commutes.csv").write_text("home_grid,work_grid\ng1,g2\ng2,g3\ng3,g4\ng1,g1\ng9,g1\n", encoding="utf8")
    (tmp_path / "grid_map.csv").write_text("grid_id,subzone_id\ng1,SZ-A\ng2,SZ-B\ng3,SZ-C\ng4,SZ-D\n", encoding="utf8")

    code = run(
        [
            "network",
            "--models", str(tmp_path / "models"),
            "--subzones", str(subzone_geojson),
            "--commutes", str(tmp_path / "commutes.csv"),
            "--grid-map", str(tmp_path / "grid_map.csv"),
            "--rollup",
            "--out", str(tmp_path / "net"),
            "-q",
        ]
    )
    assert code == 0
    for name in ("learned_2013.csv", "learned_2014.csv", "learned_2013_edges.csv", "learned_2013_planning_area.csv", "mobility.csv", "mobility_planning_area.csv"):
        assert (tmp_path / "net" / name).exists()

    # 两个年度网络时必须指定年份
    compare = ["compare", "--networks", str(tmp_path / "net"), "--subzones", str(subzone_geojson), "--top-k", "2", "-q"]
    assert run([*compare, "--out", str(tmp_path / "cmp")]) == 2
    assert run([*compare, "--year", "2013", "--out", str(tmp_path / "cmp")]) == 0
    report = read_json(tmp_path / "cmp" / "comparison.json")
    assert report["top_k"] == 2
    assert set(report["correlations"]) == {"transmission_in", "transmission_out"}
    assert len(report["top_regions"]["mobility_ratio"]) == 2
    geojson = read_json(tmp_path / "cmp" / "region_metrics.geojson")
    assert [f["properties"]["subzone_id"] for f in geojson["features"]] == ids


def test_stability_command(tmp_path):
    ids = ["a", "b", "c"]
    models = [
        SpreadingModel(P=np.eye(3) * (k + 1), w=np.array([1.0]), target_week=f"2013-W1{k}", final_loss=0.0, iterations_used=1, subzone_ids=ids)
        for k in range(3)
    ]
    write_models(models, tmp_path / "models")
    assert run(["stability", "--models", str(tmp_path / "models"), "--out", str(tmp_path / "st"), "-q"]) == 0
    data = read_json(tmp_path / "st" / "stability.json")
    assert [p["week"] for p in data["pairs"]] == ["2013-W10", "2013-W11"]
    assert data["min"] == pytest.approx(1.0)
    assert data["zero_tolerance"] == 0.05

    assert run(["stability", "--models", str(tmp_path / "models"), "--zero-tolerance", "0", "--out", str(tmp_path / "raw"), "-q"]) == 0
    assert read_json(tmp_path / "raw" / "stability.json")["zero_tolerance"] == 0
    assert read_json(tmp_path / "raw" / "manifest.json")["config_snapshot"]["analysis"]["zero_tolerance"] == 0


@pytest.mark.slow
def test_synthetic_pipeline(tmp_path):
    s, m, f, e = (str(tmp_path / name) for name in "smfe")
    assert run(["synth", "--out", s, "-q"]) == 0
    assert run(["learn", "--hotspots", s, "--weeks", "2013-W35:2013-W39", "--lookback", "2", "--out", m, "-q"]) == 0
    assert run(["forecast", "--hotspots", s, "--models", m, "--out", f, "-q"]) == 0
    assert run(["evaluate", "--hotspots", s, "--forecasts", f, "--out", e, "-q"]) == 0
    metrics = read_json(tmp_path / "e" / "metrics.json")
    assert [w["week"] for w in metrics["weekly"]] == [f"2013-W{k}" for k in range(36, 41)]
    assert metrics["yearly"][0]["f1_mean"] >= 0.9


def test_network_follows_subzones_of_filtered_models(tmp_path, subzone_geojson):
    # 模型来自剔除了低密度分区 SZ-D 的数据
    ids = ["SZ-A", "SZ-B", "SZ-C"]
    models = [
        SpreadingModel(P=np.eye(3) + 0.1, w=np.array([1.0]), target_week=f"2013-W1{k}", final_loss=0.0, iterations_used=1, subzone_ids=ids)
        for k in range(2)
    ]
    write_models(models, tmp_path / "models")
    (tmp_path / "commutes.csv").write_text("home_grid,work_grid\ng1,g2\ng2,g3\ng4,g1\n", encoding="utf8")
    (tmp_path / "grid_map.csv").write_text("grid_id,subzone_id\ng1,SZ-A\ng2,SZ-B\ng3,SZ-C\ng4,SZ-D\n", encoding="utf8")

    net = str(tmp_path / "net")
    code = run(
        [
            "network",
            "--models", str(tmp_path / "models"),
            "--subzones", str(subzone_geojson),
            "--commutes", str(tmp_path / "commutes.csv"),
            "--grid-map", str(tmp_path / "grid_map.csv"),
            "--rollup",
            "--out", net,
            "-q",
        ]
    )
    assert code == 0
    assert (tmp_path / "net" / "mobility.csv").read_text().splitlines()[0] == "region_id,SZ-A,SZ-B,SZ-C"
    assert run(["compare", "--networks", net, "--subzones", str(subzone_geojson), "--out", str(tmp_path / "cmp"), "-q"]) == 0
    geojson = read_json(tmp_path / "cmp" / "region_metrics.geojson")
    assert [f["properties"]["subzone_id"] for f in geojson["features"]] == ids


def test_learn_reruns_are_byte_identical(tmp_path):
    config = tmp_path / "c.yaml"
    config.write_text("synth:\n  n_subzones: 8\n  n_weeks: 10\n", encoding="utf8")
    assert run(["synth", "--config", str(config), "--seed", "2", "--out", str(tmp_path / "s"), "-q"]) == 0
    for name in ("a", "b"):
        args = ["learn", "--hotspots", str(tmp_path / "s"), "--weeks", "2013-W06:2013-W10", "--lookback", "2"]
        assert run([*args, "--seed", "2", "--max-concurrent", "4", "--out", str(tmp_path / name), "-q"]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "manifest.json")
    assert len(files) == 10
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir() if p.name != "manifest.json")
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
