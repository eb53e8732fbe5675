import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pytest

# Add project root to sys.path so `app` can be imported when running tests from parent directory
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from app.data_model import Sample, sample_from_arrays  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def make_sample() -> Callable[..., Sample]:
    def _make(y: Sequence[float], t: Sequence[float] | None = None, label: str = "s") -> Sample:
        y = np.asarray(y, dtype=float)
        if t is None:
            t = np.arange(1, y.size + 1) / y.size
        return sample_from_arrays(t, y, label=label)

    return _make


@pytest.fixture
def write_csv(tmp_path: Path) -> Callable[..., Path]:
    """Write a t,y csv (optionally with a sample column) and return its path."""

    def _write(name: str, t: Sequence[float], y: Sequence[float], labels: Sequence[str] | None = None) -> Path:
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as f:
            f.write("t,y,sample\n" if labels is not None else "t,y\n")
            for i, (a, b) in enumerate(zip(t, y)):
                row = f"{float(a)!r},{float(b)!r}"
                if labels is not None:
                    row += f",{labels[i]}"
                f.write(row + "\n")
        return path

    return _write
