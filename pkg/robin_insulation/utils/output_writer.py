"""
Result file writers: CSV tables and JSON documents with a schema line and
the echoed configuration, numbers printed with 17 significant digits.
"""

import csv
import io
import json
import logging
import math
import sys
import typing as t

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
# Settings that do not influence the numbers and stay out of the echo
ECHO_EXCLUDED = ("out", "jobs")


def format_value(value: t.Any) -> str:
    """Text form of one table cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "dtype"):
        return format_value(value.item())
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return "" if value is None else str(value)


def config_echo(config: t.Dict[str, t.Any]) -> str:
    """'key=value;...' with sorted keys."""
    return ";".join(f"{key}={format_value(config[key])}"
                    for key in sorted(config) if key not in ECHO_EXCLUDED)


def _json_ready(value: t.Any) -> t.Any:
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if hasattr(value, "tolist"):
        return _json_ready(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_csv(header: t.Sequence[str], rows: t.Iterable[t.Sequence[t.Any]],
               config: t.Dict[str, t.Any]) -> str:
    buffer = io.StringIO(newline="")
    buffer.write(f"# schema_version={SCHEMA_VERSION}\n")
    buffer.write(f"# config: {config_echo(config)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def render_json(payload: t.Dict[str, t.Any], config: t.Dict[str, t.Any]) -> str:
    document = {"schema_version": SCHEMA_VERSION,
                "config": {k: v for k, v in config.items() if k not in ECHO_EXCLUDED}}
    document.update(payload)
    return json.dumps(_json_ready(document), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text(text: str, path: t.Optional[str]) -> None:
    """Write to path, or to stdout when path is None or '-'."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def write_csv(path: t.Optional[str], header: t.Sequence[str], rows: t.Iterable[t.Sequence[t.Any]],
              config: t.Dict[str, t.Any]) -> None:
    write_text(render_csv(header, rows, config), path)


def write_json(path: t.Optional[str], payload: t.Dict[str, t.Any], config: t.Dict[str, t.Any]) -> None:
    write_text(render_json(payload, config), path)
