"""CSV / JSON writers that embed the resolved run config.

Reals are written with 17 significant digits so every double round-trips.
Output is a pure function of (config, results), so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

CONFIG_PREFIX = "# config: "
META_PREFIX = "# meta: "


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text, encoding="utf-8", newline="")


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], config: dict, meta: Optional[dict] = None) -> str:
    buf = io.StringIO()
    buf.write(CONFIG_PREFIX + _canonical(config) + "\n")
    if meta:
        buf.write(META_PREFIX + _canonical(meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, config, meta=None) -> None:
    _emit(path, csv_text(columns, rows, config, meta))


def json_text(payload: dict, config: dict) -> str:
    doc = dict(payload)
    doc["config"] = config
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_json(path, payload, config) -> None:
    _emit(path, json_text(payload, config))


def read_csv(path):
    """Return (config, meta, header, rows-as-strings) from a file written by write_csv."""
    config, meta = {}, {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith(CONFIG_PREFIX):
                config = json.loads(line[len(CONFIG_PREFIX):])
            elif line.startswith(META_PREFIX):
                meta = json.loads(line[len(META_PREFIX):])
            else:
                body.append(line)
    reader = list(csv.reader(body))
    return config, meta, reader[0], reader[1:]


def load_config(path) -> dict:
    """Read a run config from a JSON file, a JSON output, or a CSV output header."""
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith(CONFIG_PREFIX):
        return json.loads(text.splitlines()[0][len(CONFIG_PREFIX):])
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    if isinstance(data.get("config"), dict):
        return data["config"]
    return data
