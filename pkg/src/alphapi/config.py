"""INI run configurations and manifests.

A configuration has up to four sections::

    [game]      system, gamma, cost and model matrices
    [learner]   step size, stopping rule, sampling and exploration
    [bases]     critic / actor / disturbance exponent lists ("2 0; 1 1")
    [scenario]  initial state, replay and engagement geometry

Keys map one to one onto the fields of the experiment config dataclasses.
Vectors are space separated, matrix rows are separated by ``;``.  A manifest
is a complete configuration plus ``[run]`` and ``[result]`` sections, which
are ignored on load, so any manifest can be fed back as a configuration.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import platform

import numpy as np
import scipy

from .experiments import ExampleAConfig, LinearGameConfig
from .missile import EngagementConfig, ManeuverSpec

__all__ = ["ConfigError", "SYSTEMS", "COMMAND_SYSTEMS", "load_config", "config_text",
           "manifest_text", "format_value"]

SYSTEMS = {
    "example_a": ExampleAConfig,
    "linear_game": LinearGameConfig,
    "missile": EngagementConfig,
}

# allowed systems per command; the first is the default
COMMAND_SYSTEMS = {
    "example-a": ("example_a",),
    "missile": ("missile",),
    "oracle": ("linear_game",),
    "collect": ("example_a", "linear_game"),
    "solve": ("example_a", "linear_game"),
}

SECTIONS = ("game", "learner", "bases", "scenario")
IGNORED = ("run", "result")

_GAME = {"gamma", "R", "A", "B", "D", "Q", "q1", "q2"}
_LEARNER = {"alpha", "tolerance", "rtol", "max_iterations", "rcond", "dt", "windows",
            "windows_per_cycle", "substeps", "amplitude", "exploration",
            "exploration_cycles", "exploration_floor", "seed"}
_BASES = {"critic", "actor", "disturbance"}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _section(key):
    if key in _GAME:
        return "game"
    if key in _LEARNER:
        return "learner"
    if key in _BASES:
        return "bases"
    return "scenario"


def _kind(name, default):
    if name in _BASES:
        return "terms"
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, float):
        return "float"
    if isinstance(default, str):
        return "str"
    if isinstance(default, tuple):
        return "matrix" if default and isinstance(default[0], tuple) else "vector"
    raise TypeError(f"no config syntax for field {name!r}")


def _schema(cls):
    """``{key: (section, kind)}`` for a config dataclass; nested specs are flattened."""
    out = {}
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, ManeuverSpec):
            for sub in dataclasses.fields(ManeuverSpec):
                out[f"{f.name}_{sub.name}"] = ("scenario", _kind(sub.name, sub.default))
        else:
            out[f.name] = (_section(f.name), _kind(f.name, default))
    return out


def _parse(kind, text):
    text = text.strip()
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    if kind == "bool":
        low = text.lower()
        if low not in ("true", "false"):
            raise ValueError(f"expected true or false, got {text!r}")
        return low == "true"
    if kind == "str":
        return text
    if kind == "vector":
        return tuple(float(v) for v in text.split())
    if kind == "matrix":
        rows = tuple(tuple(float(v) for v in row.split()) for row in text.split(";") if row.strip())
        if len({len(r) for r in rows}) > 1:
            raise ValueError("matrix rows differ in length")
        return rows
    if text.lower() == "default":
        return None
    rows = tuple(tuple(int(e) for e in row.split()) for row in text.split(";") if row.strip())
    if not rows:
        raise ValueError("empty term list")
    return rows


def format_value(value) -> str:
    """Text form of a config value; floats use ``repr`` so they round-trip exactly."""
    if value is None:
        return "default"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return value
    value = tuple(value)
    if value and isinstance(value[0], (tuple, list, np.ndarray)):
        return "; ".join(" ".join(format_value(v) for v in row) for row in value)
    return " ".join(format_value(v) for v in value)


def _system_of(cfg):
    for name, cls in SYSTEMS.items():
        if type(cfg) is cls:
            return name
    raise TypeError(f"not a run configuration: {type(cfg).__name__}")


def load_config(path, command, overrides=None):
    """Read an INI file (or start from defaults when ``path`` is None).

    ``overrides`` maps field names to values applied after the file.

    Raises
    ------
    ConfigError
        Unknown sections or keys, unparsable values, or a system that the
        command does not run.
    """
    allowed = COMMAND_SYSTEMS[command]
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    system = parser.get("game", "system", fallback=allowed[0]).strip()
    if system not in allowed:
        raise ConfigError(f"command {command!r} runs system {' or '.join(allowed)}, "
                          f"config asks for {system!r}")
    cls = SYSTEMS[system]
    schema = _schema(cls)
    values = {}
    for section in parser.sections():
        if section in IGNORED:
            continue
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, text in parser.items(section):
            if section == "game" and key == "system":
                continue
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}] for system {system!r}")
            where, kind = schema[key]
            if where != section:
                raise ConfigError(f"key {key!r} belongs in [{where}], found in [{section}]")
            try:
                values[key] = _parse(kind, text)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    for key, value in (overrides or {}).items():
        if key not in schema:
            raise ConfigError(f"option {key!r} does not apply to system {system!r}")
        values[key] = value
    man = {k: values.pop(k) for k in list(values) if k.startswith("maneuver_")}
    try:
        if man:
            base = dataclasses.asdict(cls().maneuver)
            base.update({k[len("maneuver_"):]: v for k, v in man.items()})
            values["maneuver"] = ManeuverSpec(**base)
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _resolved(cfg):
    """``{section: {key: text}}`` for every field of ``cfg``."""
    out = {s: {} for s in SECTIONS}
    out["game"]["system"] = _system_of(cfg)
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, ManeuverSpec):
            for sub in dataclasses.fields(value):
                out["scenario"][f"{f.name}_{sub.name}"] = format_value(getattr(value, sub.name))
        else:
            out[_section(f.name)][f.name] = format_value(value)
    return out


def _write(sections) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name, items in sections.items():
        parser[name] = items
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_text(cfg) -> str:
    """Complete INI text for ``cfg``; loading it gives back an equal config."""
    return _write(_resolved(cfg))


def versions():
    from importlib.metadata import PackageNotFoundError, version
    try:
        own = version("artifact")
    except PackageNotFoundError:
        own = "unknown"
    return {"alphapi": own, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def manifest_text(cfg, command, run=None, result=None) -> str:
    """Configuration plus ``[run]`` metadata and ``[result]`` values."""
    sections = _resolved(cfg)
    sections["run"] = {"command": command, **versions(),
                       **{k: format_value(v) for k, v in (run or {}).items()}}
    sections["result"] = {k: format_value(v) for k, v in (result or {}).items()}
    return _write(sections)
