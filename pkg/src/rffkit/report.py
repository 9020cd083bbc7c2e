"""Tabular run output: '#' config-echo lines, a header row, CSV body."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        # float(v) strips numpy scalar types, whose repr is not a bare number
        v = float(v)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if hasattr(v, "item"):
        return format_value(v.item())
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    if v is None:
        return "none"
    return str(v)


@dataclass
class Report:
    command: str
    config: dict
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    # extra files written next to the main output, keyed by filename suffix
    companions: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, schema has {len(self.columns)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def where(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            rec = dict(zip(self.columns, r))
            if all(rec[k] == v for k, v in match.items()):
                out.append(rec)
        return out

    def to_csv(self) -> str:
        lines = [f"# rffkit {self.command}"]
        lines += [f"# {k}={format_value(self.config[k])}" for k in sorted(self.config)]
        lines.append(",".join(self.columns))
        lines += [",".join(format_value(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path) -> list[Path]:
        path = Path(path)
        written = [path]
        path.write_text(self.to_csv(), encoding="utf-8", newline="\n")
        for suffix, companion in self.companions.items():
            p = path.with_name(path.stem + suffix)
            p.write_text(companion.to_csv(), encoding="utf-8", newline="\n")
            written.append(p)
        return written
