import json

import numpy as np
import pytest

from hotspot_spread.analysis import FlowKind, FlowLevel, FlowNetwork, RegionMetrics
from hotspot_spread.evaluation import Confusion, weekly_metrics, yearly_summary
from hotspot_spread.exceptions import EmptyInput, InputNotFound, MalformedInput, MissingHeader
from hotspot_spread.forecaster import forecast_next_week
from hotspot_spread.ingest import WeeklyCaseCounts
from hotspot_spread.learner import SpreadingModel
from hotspot_spread.serialization import (
    read_commutes,
    read_counts,
    read_dense,
    read_forecasts,
    read_grid_map,
    read_hotspots,
    read_json,
    read_models,
    region_metrics_geojson,
    write_counts,
    write_dense,
    write_edge_list,
    write_forecasts,
    write_grid_map,
    write_hotspots,
    write_json,
    write_metrics,
    write_models,
)


def make_model(week="2013-W04", seed=0):
    rng = np.random.default_rng(seed)
    return SpreadingModel(
        P=rng.normal(size=(3, 3)),
        w=np.array([0.7, 0.3]),
        target_week=week,
        final_loss=1 / 3,
        iterations_used=12,
        subzone_ids=["SZ0", "SZ1", "SZ2"],
        loss_history=[2.0, 1.0, 1 / 3],
        search_trace=[((0.5, 0.5), 0.5), ((0.7, 0.3), 1 / 3)],
    )


def test_hotspots_round_trip(tmp_path, small_series):
    write_hotspots(small_series, tmp_path)
    back = read_hotspots(tmp_path)
    assert np.array_equal(back.y, small_series.y)
    assert np.array_equal(back.y_hat, small_series.y_hat)
    assert back.week_labels == small_series.week_labels
    assert back.subzone_ids == small_series.subzone_ids
    assert back.c == 3
    assert (tmp_path / "y.csv").read_text().splitlines()[0] == "subzone_id," + ",".join(small_series.week_labels)


def test_counts_round_trip(tmp_path):
    counts = WeeklyCaseCounts(
        counts=np.array([[0, 4], [2, 1]]),
        week_labels=["2013-W01", "2013-W02"],
        subzone_ids=["SZ-A", "SZ-B"],
        unmapped=3,
    )
    write_counts(counts, tmp_path)
    back = read_counts(tmp_path)
    assert back.counts.tolist() == [[0, 4], [2, 1]]
    assert back.unmapped == 3
    assert back.subzone_ids == ["SZ-A", "SZ-B"]


def test_models_round_trip(tmp_path):
    models = [make_model("2013-W05", 1), make_model("2013-W04", 0)]
    written = write_models(models, tmp_path)
    assert [p.name for p in written] == ["2013-W05.json", "2013-W04.json"]
    (tmp_path / "manifest.json").write_text("{}", encoding="utf8")

    back = read_models(tmp_path)
    assert [m.target_week for m in back] == ["2013-W04", "2013-W05"]
    assert np.allclose(back[0].P, models[1].P, atol=1e-10)
    assert back[0].w.tolist() == [0.7, 0.3]
    assert back[0].iterations_used == 12
    assert back[0].final_loss == pytest.approx(1 / 3, abs=1e-10)
    assert back[0].search_trace[1][0] == (0.7, 0.3)
    assert back[0].subzone_ids == ["SZ0", "SZ1", "SZ2"]


def test_read_models_requires_files(tmp_path):
    with pytest.raises(EmptyInput):
        read_models(tmp_path)


def test_fixed_decimal_output(tmp_path):
    model = make_model()
    model.P = np.full((3, 3), 1 / 3)
    write_models([model], tmp_path)
    rows = (tmp_path / "2013-W04_P.csv").read_text().splitlines()
    assert rows[1] == "SZ0,0.3333333333,0.3333333333,0.3333333333"
    data = read_json(tmp_path / "2013-W04.json")
    assert data["final_loss"] == 0.3333333333

    write_json({"value": np.float64(2 / 3), "items": np.array([1, 2])}, tmp_path / "x.json")
    assert json.loads((tmp_path / "x.json").read_text()) == {"value": 0.6666666667, "items": [1, 2]}


def test_writes_are_byte_identical(tmp_path, small_series):
    for name in ("a", "b"):
        write_hotspots(small_series, tmp_path / name)
        write_models([make_model()], tmp_path / name / "models")
    for relative in ("y.csv", "hotspots.json", "models/2013-W04.json", "models/2013-W04_P.csv"):
        assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes()


def test_forecasts_round_trip(tmp_path, small_series):
    model = SpreadingModel(P=np.eye(3), w=np.array([1.0, 0.0]), target_week="2013-W03", final_loss=0.0, iterations_used=0)
    result = forecast_next_week(model, small_series, "2013-W04")
    write_forecasts([result], tmp_path)
    back = read_forecasts(tmp_path)[0]
    assert back.target_week == "2013-W05"
    assert back.issued_week == "2013-W04"
    assert back.predictions.tolist() == result.predictions.tolist()
    assert np.allclose(back.scores, result.scores, atol=1e-10)
    assert back.subzone_ids == ["SZ0", "SZ1", "SZ2"]
    assert back.weights == [1.0, 0.0]
    header = (tmp_path / "forecasts.csv").read_text().splitlines()[0]
    assert header == "week,subzone_id,score,prediction"


def test_write_metrics(tmp_path):
    scores = [weekly_metrics(Confusion(1, 0, 2, 1), "2013-W05"), weekly_metrics(Confusion(0, 1, 3, 0), "2013-W06")]
    summary = yearly_summary(scores, [[0.6, 0.4], [0.8, 0.2]], "2013")
    write_metrics(scores, [summary], tmp_path)
    data = read_json(tmp_path / "metrics.json")
    assert [w["week"] for w in data["weekly"]] == ["2013-W05", "2013-W06"]
    assert data["yearly"][0]["year"] == "2013"
    assert data["yearly"][0]["weight_stats"][0]["max"] == 0.8
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert lines[0] == "kind,label,accuracy,precision,recall,f1"
    assert lines[-1].startswith("year,2013,")
    assert len(lines) == 4


def test_dense_round_trip_and_edge_list(tmp_path):
    net = FlowNetwork(weights=np.array([[0.0, 2.0], [0.0, 0.5]]), kind=FlowKind.LEARNED, level=FlowLevel.SUBZONE, labels=["a", "b"])
    write_dense(net, tmp_path / "net.csv")
    back = read_dense(tmp_path / "net.csv", FlowKind.LEARNED)
    assert back.labels == ["a", "b"]
    assert back.weights.tolist() == net.weights.tolist()

    write_edge_list(net, tmp_path / "edges.csv")
    lines = (tmp_path / "edges.csv").read_text().splitlines()
    assert lines == ["src_id,dst_id,weight", "b,a,2.0000000000", "b,b,0.5000000000"]


def test_region_metrics_geojson(subzone_index):
    metrics = RegionMetrics(
        transmission_in=np.array([1.0, 0.5, 0.0, 0.25]),
        transmission_out=np.zeros(4),
        mobility_ratio=np.ones(4),
        population=subzone_index.population,
        labels=subzone_index.ids,
    )
    collection = region_metrics_geojson(metrics, subzone_index)
    assert collection["type"] == "FeatureCollection"
    assert len(collection["features"]) == 4
    first = collection["features"][0]
    assert first["geometry"]["type"] == "Polygon"
    assert first["properties"]["subzone_id"] == subzone_index.ids[0]
    assert first["properties"]["transmission_in"] == 1.0


def test_commutes_and_grid_map(tmp_path):
    path = tmp_path / "commutes.csv"
    path.write_text("home_grid,work_grid\n001,002\n003,001\n", encoding="utf8")
    assert read_commutes(path) == [("001", "002"), ("003", "001")]
    path.write_text("home,work\n1,2\n", encoding="utf8")
    with pytest.raises(MissingHeader):
        read_commutes(path)

    write_grid_map({"001": "SZ-A", "002": None}, tmp_path / "grid_map.csv")
    assert read_grid_map(tmp_path / "grid_map.csv") == {"001": "SZ-A"}


def test_readers_report_unreadable_input(tmp_path):
    with pytest.raises(InputNotFound, match="missing.json"):
        read_json(tmp_path / "missing.json")
    with pytest.raises(InputNotFound):
        read_hotspots(tmp_path / "nowhere")
    (tmp_path / "broken.json").write_text('{"c": 3', encoding="utf8")
    with pytest.raises(MalformedInput):
        read_json(tmp_path / "broken.json")
    (tmp_path / "commutes.csv").write_text("home_grid,work_grid\n1,2\n3,4,5,6\n", encoding="utf8")
    with pytest.raises(MalformedInput):
        read_commutes(tmp_path / "commutes.csv")
