"""Flat ``key = value`` experiment files with ``[section]`` headers.

Every subcommand owns a main section plus optional ``[system]`` (model
parameters) and ``[check]`` (acceptance bands) sections. Unknown sections or
keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_ints(text: str):
    return None if text.strip().lower() in ("", "none") else _ints(text)


def _words(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.replace(",", " ").split())


Parser = Callable[[str], Any]

# section -> key -> (parser, default)
SCHEMAS: dict[str, dict[str, tuple[Parser, Any]]] = {
    "convergence": {
        "system": (str, "example1"),
        "method": (str, "midpoint"),
        "hurst": (_floats, (0.4, 0.45, 0.5)),
        "n_tilde": (_ints, (2, 4)),
        "log2_steps": (_ints, (4, 5, 6, 7, 8)),
        "log2_delta": (int, 12),
        "samples": (int, 200),
        "seed": (int, 0),
        "t_end": (float, 1.0),
        "z0": (_floats, (1.0, 0.0)),
        "reference": (str, "midpoint4"),
        "truncation_k": (_opt_float, None),
        "sup_norm": (_bool, False),
        "chunk_size": (int, 200),
    },
    "study": {
        "system": (str, "kubo"),
        "methods": (_words, ("midpoint", "erk2", "spark-kubo")),
        "n_tilde_midpoint": (_opt_ints, (2, 4)),
        "n_tilde_erk2": (_opt_ints, (2, 4)),
        "n_tilde_spark_kubo": (_opt_ints, (2, 3)),
        "hurst": (float, 0.5),
        "t_end": (float, 50.0),
        "n_steps": (int, 10 * 2**8),
        "delta": (_opt_float, None),
        "seed": (int, 0),
        "z0": (_floats, (1.0, 0.0)),
        "radius": (float, 0.3),
        "n_vertices": (int, 64),
        "snapshots": (_ints, (0, 75, 100, 180)),
    },
    "coeff": {
        "system": (str, "example1"),
        "method": (str, "midpoint"),
        "points": (int, 10),
        "seed": (int, 0),
        "box": (float, 2.0),
    },
    "noise": {
        "hurst": (_floats, (0.3, 0.4, 0.5)),
        "d": (int, 1),
        "steps": (int, 6),
        "t_end": (float, 1.0),
        "samples": (int, 10_000),
        "seed": (int, 0),
    },
    "system": {
        "a": (float, 1.0),
        "sigma": (float, None),
    },
    "check": {
        "order_model": (str, "multiplicative"),
        "width_2": (float, 0.15),
        "width_4": (float, 0.2),
        "energy_max": (float, 1e-8),
        "area_rtol": (float, 1e-6),
        "coeff_tol": (float, 1e-6),
        "noise_z": (float, 3.0),
        "solver_tol": (float, 1e-14),
        "solver_max_iter": (int, 100),
    },
}

SECTION_OF = {
    "convergence": "convergence",
    "energy": "study",
    "domain": "study",
    "coeff-check": "coeff",
    "noise-check": "noise",
}


@dataclass
class RunConfig:
    """Resolved settings for one subcommand; ``values[section][key]`` is typed."""

    command: str
    values: dict[str, dict[str, Any]]
    source: str | None = None
    explicit: dict[str, set] = field(default_factory=dict)

    @property
    def main(self) -> dict[str, Any]:
        return self.values[SECTION_OF[self.command]]

    @property
    def system_params(self) -> dict[str, Any]:
        return {k: v for k, v in self.values["system"].items()
                if v is not None and k in self.explicit.get("system", set())}

    def digest(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def echo(self) -> dict:
        return {"command": self.command, "values": _jsonable(self.values)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (tuple, list)):
        return [_jsonable(v) for v in obj]
    return obj


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return i
    return None


def _where(source: str | None, line: int | None) -> str:
    if source is None:
        return "--set"
    return f"{source}:{line}" if line else source


def load_config(command: str, path: str | Path | None = None,
                overrides: list[str] | None = None) -> RunConfig:
    """Parse ``path`` (optional) and ``section.key=value`` overrides for ``command``."""
    if command not in SECTION_OF:
        raise ConfigError(f"command {command!r} takes no config file")
    main = SECTION_OF[command]
    allowed = {main, "system", "check"}
    values = {sec: {k: d for k, (_, d) in SCHEMAS[sec].items()} for sec in allowed}
    explicit: dict[str, set] = {sec: set() for sec in allowed}

    def assign(section, key, raw, where):
        if section not in allowed:
            raise ConfigError(f"{where}: unknown section [{section}] for {command}")
        schema = SCHEMAS[section]
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
        try:
            values[section][key] = schema[key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
        explicit[section].add(key)

    source = None
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(str(exc).replace("\n", " ")) from None
        for section in parser.sections():
            if section not in allowed:
                line = next((i for i, l in enumerate(text.splitlines(), 1)
                             if l.strip() == f"[{section}]"), None)
                raise ConfigError(f"{_where(source, line)}: unknown section [{section}] "
                                  f"for {command}")
            for key, raw in parser.items(section):
                assign(section, key, raw, _where(source, _line_of(text, section, key)))

    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        section, _, name = key.strip().rpartition(".")
        assign(section or main, name, raw.strip(), f"--set {key.strip()}")
    return RunConfig(command, values, source, explicit)
