"""Series discovery and loading.

This package talks to the simulation harness only through its file formats:
trajectory CSVs with the fixed header t,epsilon,condensate,trace_error,min_eig
(blank fields where a column does not apply) and the metadata JSON written
next to each CSV, which carries the full run configuration. Every plotted
series must resolve to such a pair; anything else lands in the skip report.
"""

from __future__ import annotations

import glob as globmod
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = "t,epsilon,condensate,trace_error,min_eig"

LABEL_PATHS = {
    "gamma": ("noise", "gamma"),
    "beta": ("noise", "beta"),
    "V": ("protection", "V"),
}
LABEL_TEXT = {
    "gamma": r"$\gamma = %g\,J$",
    "beta": r"$\beta = %g$",
    "V": r"$V = %g\,J$",
}


class SpecError(ValueError):
    """Malformed figure spec."""


@dataclass(frozen=True)
class Series:
    csv_path: Path
    metadata_path: Path
    label: str
    value: float
    times: np.ndarray
    epsilon: np.ndarray
    condensate: np.ndarray | None


def read_trajectory_csv(path: Path) -> dict[str, np.ndarray | None]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError("no data rows")
    if any(len(r) != 5 for r in rows):
        raise ValueError("malformed row")
    out: dict[str, np.ndarray | None] = {}
    for k, name in enumerate(CSV_HEADER.split(",")):
        col = [r[k] for r in rows]
        out[name] = None if all(p == "" for p in col) else np.array(
            [float(p) for p in col]
        )
    return out


def label_value(metadata: dict, label_key: str) -> float:
    section, key = LABEL_PATHS[label_key]
    return float(metadata["config"][section][key])


def load_series(csv_path: Path, label_key: str) -> Series:
    """One CSV + metadata pair; raises ValueError with a skip reason."""
    meta_path = csv_path.with_name(csv_path.stem + ".metadata.json")
    if not meta_path.exists():
        raise ValueError(f"missing metadata file {meta_path.name}")
    try:
        metadata = json.loads(meta_path.read_text())
        value = label_value(metadata, label_key)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"unusable metadata: {exc}") from exc
    cols = read_trajectory_csv(csv_path)
    return Series(
        csv_path=csv_path,
        metadata_path=meta_path,
        label=LABEL_TEXT[label_key] % value,
        value=value,
        times=cols["t"],
        epsilon=cols["epsilon"],
        condensate=cols["condensate"],
    )


def discover_series(
    patterns: list[str], base: Path, label_key: str
) -> tuple[list[Series], list[dict]]:
    """Expand globs relative to `base`; return loadable series plus skips."""
    paths: list[Path] = []
    for pattern in patterns:
        raw = pattern if Path(pattern).is_absolute() else str(base / pattern)
        matches = sorted(globmod.glob(raw))
        if not matches:
            paths.append(Path(raw))  # reported as missing below
        paths.extend(Path(m) for m in matches)
    series, skipped = [], []
    for path in paths:
        if not path.exists():
            skipped.append({"path": str(path), "reason": "no such file"})
            continue
        try:
            series.append(load_series(path, label_key))
        except ValueError as exc:
            skipped.append({"path": str(path), "reason": str(exc)})
    series.sort(key=lambda s: (s.value, s.csv_path.name))
    return series, skipped
