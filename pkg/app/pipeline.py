"""CSV ingestion and artifact writers shared by the CLI subcommands."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from . import __version__
from .config import FORMAT_VERSION
from .data_model import Sample, validate_sample
from .errors import EmptyInput, InvalidRequest

logger = logging.getLogger(__name__)

T_KEYS = ["t", "x", "time", "design"]
Y_KEYS = ["y", "value", "response", "count", "counts"]
LABEL_KEYS = ["sample", "label", "group"]


@dataclass
class RawSample:
    label: str
    t: List[float]
    y: List[float]


def _pick(rec: Dict[str, Any], keys: List[str]) -> Optional[str]:
    for k in keys:
        v = rec.get(k)
        if v is None:
            continue
        s = str(v).strip()
        if s:
            return s
    return None


def _parse_float(value: Optional[str], where: str) -> float:
    if value is None:
        raise InvalidRequest(f"{where}: missing value")
    try:
        number = float(value)
    except ValueError:
        raise InvalidRequest(f"{where}: cannot parse {value!r} as a number")
    return number


def read_raw_samples(path: Path) -> List[RawSample]:
    """Read ``t,y`` or ``t,y,sample`` rows; one RawSample per distinct label in file order."""
    if not path.is_file():
        raise InvalidRequest(f"input file {path} does not exist")
    groups: "OrderedDict[str, RawSample]" = OrderedDict()
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise EmptyInput(f"{path} is empty")
        for line, row in enumerate(reader, start=2):
            rec = {str(k).strip().lower(): v for k, v in row.items() if k is not None}
            if not any((v or "").strip() for v in rec.values()):
                continue
            where = f"{path.name}:{line}"
            label = _pick(rec, LABEL_KEYS) or path.stem
            t = _parse_float(_pick(rec, T_KEYS), where)
            y = _parse_float(_pick(rec, Y_KEYS), where)
            group = groups.setdefault(label, RawSample(label=label, t=[], y=[]))
            group.t.append(t)
            group.y.append(y)
    if not groups:
        raise EmptyInput(f"{path} has no data rows")
    return list(groups.values())


def rescale_design(raws: Sequence[RawSample]) -> List[RawSample]:
    """Map every sample's t onto [0, 1] with one shared min-max transform."""
    all_t = np.concatenate([np.asarray(r.t, dtype=float) for r in raws])
    lo, hi = float(all_t.min()), float(all_t.max())
    span = hi - lo
    if span <= 0.0:
        raise InvalidRequest("cannot rescale a design with a single distinct point")
    return [RawSample(label=r.label, t=[(v - lo) / span for v in r.t], y=list(r.y)) for r in raws]


def load_samples(paths: Iterable[Path], rescale: bool = False) -> List[Sample]:
    raws: List[RawSample] = []
    for path in paths:
        raws.extend(read_raw_samples(Path(path)))
    if rescale:
        raws = rescale_design(raws)
    samples = [validate_sample(list(zip(r.t, r.y)), label=r.label) for r in raws]
    logger.info("loaded %d sample(s): %s", len(samples), ", ".join(f"{s.label}[{s.n}]" for s in samples))
    return samples


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_json(payload: BaseModel | Dict[str, Any] | List[Any], output_path: Path) -> None:
    output_path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    with output_path.open("w", encoding="utf-8") as f:
        f.write(text)
        f.write("\n")


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], output_path: Path) -> None:
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with output_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_fit_csv(t: Sequence[float], values: Sequence[float], output_path: Path) -> None:
    rows = [{"t": repr(float(a)), "fit": repr(float(b))} for a, b in zip(t, values)]
    write_csv(rows, ["t", "fit"], output_path)


def write_manifest(
    output_dir: Path,
    subcommand: str,
    arguments: Dict[str, Any],
    inputs: Sequence[Path] = (),
    seed: int | None = None,
    thresholds: Optional[Dict[str, Any]] = None,
) -> Path:
    """Record everything needed to rerun a command next to its outputs."""
    manifest = {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "subcommand": subcommand,
        "arguments": {k: arguments[k] for k in sorted(arguments)},
        "inputs": {str(p): file_sha256(Path(p)) for p in inputs},
        "seed": seed,
        "thresholds": thresholds or {},
    }
    target = Path(output_dir) / "manifest.json"
    write_json(manifest, target)
    return target
