from __future__ import annotations

import json
from pathlib import Path

import pytest

from app.errors import DuplicateDesignPoint, EmptyInput, InvalidRequest
from app.pipeline import (
    RawSample,
    file_sha256,
    load_samples,
    read_raw_samples,
    rescale_design,
    write_fit_csv,
    write_json,
    write_manifest,
)


def test_read_single_sample_uses_file_stem(write_csv) -> None:
    path = write_csv("film_a.csv", [0.2, 0.1], [1.0, 2.0])
    raws = read_raw_samples(path)
    assert len(raws) == 1
    assert raws[0].label == "film_a"
    assert raws[0].t == [0.2, 0.1]


def test_read_long_format_groups_by_label(write_csv) -> None:
    path = write_csv("pair.csv", [0.1, 0.1, 0.2, 0.2], [1.0, 2.0, 3.0, 4.0], labels=["a", "b", "a", "b"])
    samples = load_samples([path])
    assert [s.label for s in samples] == ["a", "b"]
    assert samples[1].y.tolist() == [2.0, 4.0]


def test_header_aliases_and_blank_rows(tmp_path: Path) -> None:
    path = tmp_path / "counts.csv"
    path.write_text("Time,Count\n0.5,10\n\n0.25,12\n", encoding="utf-8")
    sample = load_samples([path])[0]
    assert sample.t.tolist() == [0.25, 0.5]
    assert sample.y.tolist() == [12.0, 10.0]


def test_bad_rows(tmp_path: Path) -> None:
    bad = tmp_path / "bad.csv"
    bad.write_text("t,y\n0.1,abc\n", encoding="utf-8")
    with pytest.raises(InvalidRequest, match="bad.csv:2"):
        read_raw_samples(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(EmptyInput):
        read_raw_samples(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text("t,y\n", encoding="utf-8")
    with pytest.raises(EmptyInput):
        read_raw_samples(header_only)
    with pytest.raises(InvalidRequest):
        read_raw_samples(tmp_path / "missing.csv")


def test_duplicate_t_surfaces(write_csv) -> None:
    path = write_csv("dup.csv", [0.5, 0.5], [1.0, 2.0])
    with pytest.raises(DuplicateDesignPoint):
        load_samples([path])


def test_rescale_is_shared(write_csv) -> None:
    a = write_csv("a.csv", [10.0, 20.0], [1.0, 2.0])
    b = write_csv("b.csv", [15.0, 30.0], [1.0, 2.0])
    samples = load_samples([a, b], rescale=True)
    assert samples[0].t.tolist() == [0.0, 0.5]
    assert samples[1].t.tolist() == [0.25, 1.0]
    with pytest.raises(InvalidRequest):
        rescale_design([RawSample(label="x", t=[1.0, 1.0], y=[0.0, 0.0])])


def test_writers(tmp_path: Path, write_csv) -> None:
    write_fit_csv([0.5, 1.0], [0.25, -1.0], tmp_path / "out" / "fit.csv")
    lines = (tmp_path / "out" / "fit.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["t,fit", "0.5,0.25", "1.0,-1.0"]
    write_json({"b": 1, "a": [1, 2]}, tmp_path / "x.json")
    assert json.loads((tmp_path / "x.json").read_text(encoding="utf-8")) == {"a": [1, 2], "b": 1}

    data = write_csv("in.csv", [0.1, 0.2], [1.0, 2.0])
    target = write_manifest(tmp_path / "run", "sigma", {"z": 1, "a": "x"}, inputs=[data], seed=7, thresholds={"k": 1.5})
    manifest = json.loads(target.read_text(encoding="utf-8"))
    assert manifest["subcommand"] == "sigma"
    assert list(manifest["arguments"]) == ["a", "z"]
    assert manifest["inputs"] == {str(data): file_sha256(data)}
    assert manifest["seed"] == 7
    assert manifest["thresholds"] == {"k": 1.5}
    assert len(file_sha256(data)) == 64
