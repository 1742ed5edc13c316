"""Deterministic CSV emission: every file starts with comment lines carrying
the resolved-config hash and the artifact version, so reruns are auditable
and byte-identical under a fixed seed."""

from __future__ import annotations

import csv
from pathlib import Path

from . import __version__


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict], config_hash: str,
              extra_comments: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash} version={__version__}\n")
        for key, val in (extra_comments or {}).items():
            fh.write(f"# {key}={format_value(val)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])
    return path


def read_rows(path: Path) -> tuple[dict, list[dict]]:
    """Read back a CSV written by write_csv: (comment metadata, data rows)."""
    meta: dict = {}
    rows: list[dict] = []
    with open(path, newline="") as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for token in line[1:].strip().split():
                    if "=" in token:
                        k, v = token.split("=", 1)
                        meta[k] = v
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                continue
            rows.append(dict(zip(header, cells)))
    return meta, rows
