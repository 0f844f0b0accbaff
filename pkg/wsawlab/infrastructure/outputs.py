"""Writers for run artefacts: CSV tables, summary JSON and the YAML manifest."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Sequence

import yaml
from pydantic import BaseModel


@dataclass
class ResultTable:
    """A named CSV table with a header row."""

    name: str
    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name} expects {len(self.columns)} values, got {len(values)}")
        self.rows.append(values)

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_table(directory: Path, table: ResultTable) -> Path:
    path = directory / table.filename
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_summary(directory: Path, summary: BaseModel) -> Path:
    path = directory / "summary.json"
    path.write_text(summary.model_dump_json(indent=2) + "\n")
    return path


def write_manifest(directory: Path, manifest: BaseModel) -> Path:
    path = directory / "manifest.yaml"
    with open(path, "w") as f:
        yaml.safe_dump(manifest.model_dump(mode="json"), f, sort_keys=False)
    return path


def read_table(path: Path) -> List[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def read_summary(path: Path) -> dict:
    return json.loads(Path(path).read_text())
