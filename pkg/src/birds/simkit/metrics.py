"""Per-round metrics rows and the CSV emitter."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence


@dataclass(frozen=True)
class MetricsRow:
    round: int
    sim_time: int
    consensus: str
    proposer: int
    consensus_energy: float
    flight_energy: float
    round_energy: float
    cumulative_consensus_energy: float
    cumulative_flight_energy: float
    cumulative_energy: float
    delivered: int
    failed: int
    missed: int
    queued: int
    in_progress: int
    mean_edt: float | None
    mean_adt: float | None
    success_rate: float | None
    active_uavs: int
    reward: float | None
    miner_efficiency: float | None
    mean_reputation: float
    chain_height: int


METRICS_COLUMNS = tuple(f.name for f in dataclasses.fields(MetricsRow))


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def _as_mapping(row: Any) -> Mapping[str, Any]:
    if dataclasses.is_dataclass(row):
        return {f.name: getattr(row, f.name) for f in dataclasses.fields(row)}
    return row


def emit_csv(rows: Iterable[Any], path, columns: Sequence[str] | None = None) -> Path:
    """Write ``rows`` (dataclasses or mappings sharing one schema) as CSV.

    Floats carry 6 significant digits; missing values are empty fields.
    Without rows the file holds only the header, taken from ``columns`` or
    the metrics schema.
    """
    rows = [_as_mapping(r) for r in rows]
    if columns is None:
        columns = tuple(rows[0].keys()) if rows else METRICS_COLUMNS
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if set(row.keys()) != set(columns):
                raise ValueError("rows do not share one schema")
            writer.writerow([format_value(row[c]) for c in columns])
    return path
