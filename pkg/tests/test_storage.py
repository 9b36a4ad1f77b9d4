"""Tests for path dumps and report persistence"""

import csv
import json

import numpy as np
import pytest

from src.lab.errors import LabError
from src.lab.paths import SamplePath, simulate
from src.lab.processes import BrownianMotion
from src.lab.rng import RngStream
from src.storage.path_store import HEADER_BYTES, load_path_dump, write_path_dump
from src.storage.report_store import ReportStore, config_hash, file_digest


def test_path_dump_round_trip(tmp_path):
    paths = [simulate(BrownianMotion(2), [1.0, 0.0], 1.0, 32, RngStream(1).spawn("path", p)) for p in range(2)]
    target = write_path_dump(tmp_path / "dump" / "paths.bin", paths)
    loaded = load_path_dump(target)
    assert len(loaded) == 2
    for original, restored in zip(paths, loaded):
        np.testing.assert_array_equal(original.values, restored.values)
        np.testing.assert_array_equal(restored.start_x, [1.0, 0.0])
        assert restored.dt == original.dt
        assert restored.t0 == original.t0


def test_dump_byte_layout(tmp_path):
    values = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    path = SamplePath(t0=0.5, dt=0.25, values=values, start_x=values[0])
    raw = write_path_dump(tmp_path / "one.bin", [path]).read_bytes()
    assert HEADER_BYTES == 32
    assert len(raw) == HEADER_BYTES + values.size * 8
    assert raw[:8] == (2).to_bytes(8, "little")
    assert raw[8:16] == (3).to_bytes(8, "little")
    np.testing.assert_array_equal(np.frombuffer(raw[16:32], dtype="<f8"), [0.5, 0.25])
    np.testing.assert_array_equal(np.frombuffer(raw[32:], dtype="<f8"), [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])


def test_records_may_use_different_grids(tmp_path):
    a = simulate(BrownianMotion(1), None, 1.0, 32, RngStream(1))
    b = simulate(BrownianMotion(1), None, 1.0, 64, RngStream(1))
    loaded = load_path_dump(write_path_dump(tmp_path / "paths.bin", [a, b]))
    assert [p.values.shape[0] for p in loaded] == [33, 65]
    assert loaded[1].dt == pytest.approx(1.0 / 64)


def test_nothing_to_dump(tmp_path):
    with pytest.raises(LabError):
        write_path_dump(tmp_path / "paths.bin", [])


def test_truncated_dump_is_rejected(tmp_path):
    path = simulate(BrownianMotion(1), None, 1.0, 8, RngStream(1))
    target = write_path_dump(tmp_path / "paths.bin", [path])
    target.write_bytes(target.read_bytes()[:-8])
    with pytest.raises(LabError):
        load_path_dump(target)


def test_empty_file_is_rejected(tmp_path):
    target = tmp_path / "empty.bin"
    target.write_bytes(b"")
    with pytest.raises(LabError):
        load_path_dump(target)


def test_config_hash_ignores_key_order():
    assert config_hash({"seed": 1, "name": "a"}) == config_hash({"name": "a", "seed": 1})
    assert config_hash({"seed": 1}) != config_hash({"seed": 2})


def test_report_store_manifest(tmp_path):
    store = ReportStore(tmp_path / "run")
    report = store.write_json("report.json", {"passed": True})
    table = store.write_csv("checks/00-a1.csv", [{"t": 0.5, "lhs": 0.1}, {"t": 0.25, "rhs": 0.2}])
    manifest_path = store.write_manifest({"seed": 7}, 7, {"name": "run"})

    manifest = json.loads(manifest_path.read_text())
    assert manifest["seed"] == 7
    assert manifest["name"] == "run"
    assert manifest["config_sha256"] == config_hash({"seed": 7})
    assert manifest["files"] == {"report.json": file_digest(report), "checks/00-a1.csv": file_digest(table)}

    with table.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "lhs", "rhs"]
    assert rows[1]["rhs"] == "0.2"
