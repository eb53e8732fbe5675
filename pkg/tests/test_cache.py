from __future__ import annotations

import json
from pathlib import Path

from app.cache import CalibrationCache, cache_key
from app.config import CACHE_FORMAT_VERSION


def test_cache_key_fields() -> None:
    key = cache_key("TauSingle", 500, "multi:2", 0.95, 10_000, 7, True)
    assert key == "TauSingle|500|multi:2|0.95|10000|7|1"
    assert key != cache_key("TauSingle", 500, "multi:2", 0.95, 10_000, 7, False)


def test_save_and_load(tmp_path: Path) -> None:
    path = tmp_path / "nested" / "cache.json"
    cache = CalibrationCache(path)
    cache.put("a|1", {"threshold": 2.5})
    cache.save()
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["version"] == CACHE_FORMAT_VERSION
    loaded = CalibrationCache.load(path)
    assert len(loaded) == 1
    assert loaded.get("a|1") == {"threshold": 2.5}
    assert loaded.get("missing") is None
    # no temporary files are left next to the table
    assert [p.name for p in path.parent.iterdir()] == ["cache.json"]


def test_missing_file_is_empty(tmp_path: Path) -> None:
    assert len(CalibrationCache.load(tmp_path / "absent.json")) == 0


def test_corrupt_or_foreign_file_is_ignored(tmp_path: Path) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert len(CalibrationCache.load(broken)) == 0
    foreign = tmp_path / "foreign.json"
    foreign.write_text(json.dumps({"version": CACHE_FORMAT_VERSION + 1, "entries": {"k": {}}}), encoding="utf-8")
    assert len(CalibrationCache.load(foreign)) == 0


def test_save_is_deterministic(tmp_path: Path) -> None:
    first = CalibrationCache(tmp_path / "one.json")
    second = CalibrationCache(tmp_path / "two.json")
    for key, value in [("b", {"x": 1}), ("a", {"y": 2})]:
        first.put(key, value)
    for key, value in [("a", {"y": 2}), ("b", {"x": 1})]:
        second.put(key, value)
    first.save()
    second.save()
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()
