"""Plain-text run configuration.

One ``section.key = value`` assignment per line, ``#`` starts a comment.
Sections are ``quad`` (airframe), ``env`` (episode and reward), ``dp``
(lookahead controller), ``ddpg`` (learner) and ``run`` (seed, output,
controller, initial conditions). Tuples are comma-separated, booleans are
``true``/``false``. Unknown keys, duplicates and bad values are reported
with their line number. Keys that are absent keep their defaults.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from .ddpg_agent import DdpgConfig
from .dp_agent import DpConfig
from .environment import INITIAL_CONDITIONS, EnvConfig
from .errors import ConfigError
from .params import QuadParams


@dataclass
class RunSection:
    seed: int = 0
    label: str = "run"
    out_dir: str = "out"
    controller: str = "none"
    duration: float = 180.0
    ics: Tuple[str, ...] = tuple(INITIAL_CONDITIONS)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        for ic in self.ics:
            if ic not in INITIAL_CONDITIONS:
                raise ValueError(f"ics: unknown initial condition {ic!r}")
        check_controller(self.controller)


def check_controller(spec: str) -> None:
    if spec in ("none", "trim", "dp"):
        return
    if spec.startswith("ddpg:") and len(spec) > 5:
        return
    raise ValueError(f"controller must be none, trim, dp or ddpg:PATH, got {spec!r}")


SECTIONS = {
    "quad": QuadParams,
    "env": EnvConfig,
    "dp": DpConfig,
    "ddpg": DdpgConfig,
    "run": RunSection,
}


@dataclass
class RunConfig:
    quad: QuadParams = field(default_factory=QuadParams)
    env: EnvConfig = field(default_factory=EnvConfig)
    dp: DpConfig = field(default_factory=DpConfig)
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    run: RunSection = field(default_factory=RunSection)

    def replace(self, section: str, **changes) -> "RunConfig":
        new = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: new})


def _field_types(cls) -> Dict[str, object]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def _parse_scalar(text: str, tp):
    if tp is bool:
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if tp is int:
        return int(text)
    if tp is float:
        return float(text)
    if tp is str:
        return text
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(text.lower())
        except ValueError:
            choices = ", ".join(m.value for m in tp)
            raise ValueError(f"expected one of {choices}, got {text!r}") from None
    raise TypeError(f"unsupported config type {tp!r}")


def parse_value(text: str, tp):
    if typing.get_origin(tp) is tuple:
        args = typing.get_args(tp)
        parts = [p.strip() for p in text.split(",")] if text.strip() else []
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_parse_scalar(p, args[0]) for p in parts)
        if len(parts) != len(args):
            raise ValueError(f"expected {len(args)} comma-separated values, got {len(parts)}")
        return tuple(_parse_scalar(p, a) for p, a in zip(parts, args))
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return _parse_scalar(text, args[0])
    return _parse_scalar(text, tp)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: Dict[str, Dict[str, object]] = {name: {} for name in SECTIONS}
    lines_of: Dict[str, Dict[str, int]] = {name: {} for name in SECTIONS}
    types = {name: _field_types(cls) for name, cls in SECTIONS.items()}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{source}:{lineno}: key {key!r} needs a section prefix")
        section, name = key.split(".", 1)
        if section not in SECTIONS or name not in types[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if name in values[section]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[section][name] = parse_value(value, types[section][name])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        lines_of[section][name] = lineno

    built = {}
    for section, cls in SECTIONS.items():
        try:
            built[section] = cls(**values[section])
        except ValueError as exc:
            msg = str(exc)
            where = next((ln for nm, ln in lines_of[section].items() if nm in msg), None)
            loc = f"{source}:{where}" if where else source
            raise ConfigError(f"{loc}: {section}: {msg}") from None
    return RunConfig(**built)


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    """Every effective setting, one per line; parses back to an equal config."""
    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            lines.append(f"{section}.{f.name} = {format_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the dumped config; the output directory is not an input and is left out."""
    lines = [ln for ln in dump_config(cfg).splitlines(keepends=True)
             if not ln.startswith("run.out_dir = ")]
    return hashlib.sha256("".join(lines).encode("utf-8")).hexdigest()
