"""Plain-text ``key = value`` configuration files with ``[section]`` blocks.

Keys before the first section header belong to the top level. Blank lines
and ``#`` comments are ignored. Values stay strings; callers convert.
"""

from __future__ import annotations

import re
from pathlib import Path

__all__ = ["ConfigError", "parse_config", "load_config", "dump_config"]

_SECTION = re.compile(r"^\[\s*([A-Za-z_][\w.-]*)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][\w.-]*$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


def parse_config(text: str, source: str | None = None) -> dict[str, object]:
    """Parse config text into a dict; sections become nested dicts."""
    root: dict[str, object] = {}
    current = root
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            name = m.group(1)
            if name in root:
                raise ConfigError(f"duplicate section [{name}]", lineno, source)
            current = {}
            root[name] = current
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", lineno, source)
        if key in current:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno, source)
        current[key] = value
    return root


def load_config(path: str | Path) -> dict[str, object]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from exc
    return parse_config(text, source=str(path))


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dump_config(data: dict[str, object]) -> str:
    """Inverse of :func:`parse_config` (values rendered with ``repr`` for floats)."""
    lines = []
    sections = []
    for key, value in data.items():
        if isinstance(value, dict):
            sections.append((key, value))
        else:
            lines.append(f"{key} = {_fmt(value)}")
    for name, body in sections:
        lines.append("")
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in body.items())
    return "\n".join(lines) + "\n"
