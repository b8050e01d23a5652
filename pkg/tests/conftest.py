import json

import numpy as np
import pytest

from hotspot_spread.hotspot import HotspotSeries
from hotspot_spread.ingest import IngestConfig, load_subzone_index
from hotspot_spread.synth import SynthScenario


def square(x0, x1, y0, y1):
    return [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]


# 2×2 网格：A B 在下，C D 在上；D 人口很少，密度低于 10/km²
SUBZONES = [
    ("SZ-A", "PA1", (103.80, 103.81, 1.30, 1.31), 1000),
    ("SZ-B", "PA1", (103.81, 103.82, 1.30, 1.31), 2000),
    ("SZ-C", "PA2", (103.80, 103.81, 1.31, 1.32), 3000),
    ("SZ-D", "PA2", (103.81, 103.82, 1.31, 1.32), 5),
]


@pytest.fixture
def subzone_geojson(tmp_path):
    features = [
        {
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": square(*bounds)},
            "properties": {"subzone_id": sid, "planning_area_id": pa, "population": pop},
        }
        for sid, pa, bounds, pop in SUBZONES
    ]
    path = tmp_path / "subzones.geojson"
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}), encoding="utf8")
    return path


@pytest.fixture
def subzone_index(subzone_geojson):
    return load_subzone_index(subzone_geojson, IngestConfig())


@pytest.fixture
def snapshot_bytes():
    rows = [
        "address,lat,lng,cluster_no,recent_cases,total_cases",
        "BLK 1 ALPHA ST,1.305,103.805,1,2,5",
        "BLK 2 ALPHA ST,1.305,103.806,1,1,5",
        "BLK 3 BETA RD,1.305,103.815,2,3,3",
        "BLK 4 GAMMA AVE,1.315,103.805,3,1,1",
        "BLK 5 GAMMA AVE,1.316,103.806,3,1,1",
    ]
    return ("\n".join(rows) + "\n").encode("utf8")


@pytest.fixture
def small_series():
    """3 个分区、6 周的手工序列"""
    y = np.array(
        [
            [1, 1, 0, 1, 1, 1],
            [0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 1, 0],
        ]
    )
    y_hat = np.array(
        [
            [1, 1, 1, 1, 1, 1],
            [0, 1, 1, 0, 1, 0],
            [0, 0, 0, 1, 1, 0],
        ]
    )
    return HotspotSeries(
        y=y,
        y_hat=y_hat,
        c=3,
        week_labels=[f"2013-W{k:02d}" for k in range(1, 7)],
        subzone_ids=["SZ0", "SZ1", "SZ2"],
    )


@pytest.fixture
def reference_scenario():
    return SynthScenario()
