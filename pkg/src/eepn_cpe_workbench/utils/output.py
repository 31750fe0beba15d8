"""CSV result tables and run manifests, written atomically."""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Union

import orjson

from eepn_cpe_workbench.models import ResultRow, RunManifest, ScenarioConfig

logger = logging.getLogger(__name__)

# Bump when the column set or order changes.
CSV_SCHEMA_VERSION = 1
CSV_HEADER: tuple[str, ...] = tuple(ResultRow.model_fields)


def format_value(value: Union[None, bool, int, float, str]) -> str:
    """CSV cell text: empty for None, 12 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def render_rows(rows: Iterable[ResultRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([format_value(getattr(row, name)) for name in CSV_HEADER])
    return buffer.getvalue()


def write_atomic(path: Path, content: bytes) -> None:
    """Writes to a temporary file next to path, then renames it over path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "wb") as file:
            file.write(content)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    logger.info("wrote %s (%d bytes)", path, len(content))


def write_rows(path: Path, rows: Iterable[ResultRow]) -> None:
    write_atomic(path, render_rows(rows).encode("utf-8"))


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(output: Path) -> Path:
    """Side file of an output: results.csv -> results.manifest.json."""
    output = Path(output)
    return output.with_name(f"{output.stem}.manifest.json")


def build_manifest(
    command: str,
    document: dict[str, Any],
    scenario: ScenarioConfig,
    outputs: Iterable[Path],
    tool_version: str,
) -> RunManifest:
    return RunManifest(
        tool_version=tool_version,
        schema_version=CSV_SCHEMA_VERSION,
        command=command,
        config=document,
        scenario=scenario,
        base_seed=scenario.base_seed,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        outputs={Path(output).name: file_digest(output) for output in outputs},
    )


def write_manifest(path: Path, manifest: RunManifest) -> None:
    content = orjson.dumps(
        manifest.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS
    )
    write_atomic(path, content)
