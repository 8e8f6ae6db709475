"""Experiment configuration: one INI-style file (or JSON) describing a whole run.

Lists are comma separated and matrix rows are separated by ``;``. Floats are
written with ``repr`` so a config survives a write/read round trip exactly.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message, field_name=None):
        super().__init__(message if field_name is None else f"{field_name}: {message}")
        self.field_name = field_name


@dataclass
class WirelessSection:
    n: int = 2
    omega: float = 10.0
    kappa: float = 2.0
    sigma2: float = 1.0
    var: list[list[float]] = field(default_factory=lambda: [[1.0, 0.01], [0.01, 1.0]])
    expectation: str = "exact"
    mc_samples: int = 2000
    mc_seed: int = 12345
    deterministic: bool = False


@dataclass
class QuadraticSection:
    centers: list[float] = field(default_factory=lambda: [2.0])
    curvature: list[float] = field(default_factory=lambda: [1.0])
    coupling: typing.Optional[list[list[float]]] = None
    noise_std: float = 0.0


@dataclass
class ScriptedSection:
    target: str = ""
    n: int = 1


@dataclass
class SeekerSection:
    amplitude: list[float] = field(default_factory=lambda: [0.1])
    frequency: list[float] = field(default_factory=lambda: [1.0])
    phase: list[float] = field(default_factory=lambda: [0.0])
    growth: list[float] = field(default_factory=lambda: [1.0])
    schedule: str = "constant"
    lambda0: float = 0.05
    horizon: int = 20000
    initial: typing.Optional[list[float]] = None
    initial_offset: typing.Optional[float] = None
    clamp_nonnegative: bool = False


@dataclass
class AnalysisSection:
    ode_compare: bool = False
    bounds: bool = False
    diagnostics: bool = False
    envelope: bool = False
    a_star: typing.Optional[list[float]] = None
    window_start: float = 0.0
    window_length: float = 10.0
    ode_step: typing.Optional[float] = None
    lambdas: typing.Optional[list[float]] = None
    sweep_seeds: int = 30
    bound_window: float = 1.0
    lipschitz_pairs: int = 500
    L: typing.Optional[float] = None
    C0: typing.Optional[float] = None
    Mbar: typing.Optional[float] = None
    mbar: typing.Optional[float] = None
    eps: float = 0.01


@dataclass
class ExperimentConfig:
    game: str = "quadratic"
    seed: int = 0
    out_dir: str = "out"
    window_fraction: float = 0.1
    seeker: SeekerSection = field(default_factory=SeekerSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    wireless: typing.Optional[WirelessSection] = None
    quadratic: typing.Optional[QuadraticSection] = None
    scripted: typing.Optional[ScriptedSection] = None

    def validate(self):
        if self.game not in ("wireless", "quadratic", "scripted"):
            raise ConfigError(f"unknown game {self.game!r}", "experiment.game")
        if getattr(self, self.game) is None:
            raise ConfigError(f"missing [{self.game}] section", self.game)
        if not 0 < self.window_fraction <= 1:
            raise ConfigError("must be in (0, 1]", "experiment.window_fraction")
        s = self.seeker
        n = len(s.amplitude)
        for name in ("frequency", "phase", "growth"):
            if len(getattr(s, name)) != n:
                raise ConfigError(f"expected {n} values", f"seeker.{name}")
        if s.schedule not in ("constant", "vanishing"):
            raise ConfigError(f"unknown schedule {s.schedule!r}", "seeker.schedule")
        if not s.lambda0 > 0:
            raise ConfigError("must be > 0", "seeker.lambda0")
        if s.horizon < 0:
            raise ConfigError("must be >= 0", "seeker.horizon")
        if s.initial is None and s.initial_offset is None:
            raise ConfigError("give initial or initial_offset", "seeker.initial")
        if s.initial is not None and len(s.initial) != n:
            raise ConfigError(f"expected {n} values", "seeker.initial")


_SECTIONS = ("seeker", "analysis", "wireless", "quadratic", "scripted")
_TOP = ("game", "seed", "out_dir", "window_fraction")


def _strip_optional(tp):
    args = typing.get_args(tp)
    if typing.get_origin(tp) is typing.Union and type(None) in args:
        return next(a for a in args if a is not type(None))
    return tp


def _parse_value(text: str, tp, name: str):
    tp = _strip_optional(tp)
    text = text.strip()
    try:
        if tp is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is str:
            return text
        if tp == list[float]:
            return [float(x) for x in text.split(",") if x.strip()]
        if tp == list[list[float]]:
            return [[float(x) for x in row.split(",")] for row in text.split(";") if row.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc), name) from exc
    raise ConfigError(f"unsupported field type {tp}", name)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        if value and isinstance(value[0], list):
            return "; ".join(", ".join(repr(float(x)) for x in row) for row in value)
        return ", ".join(repr(float(x)) for x in value)
    return str(value)


def _coerce(value, tp, name):
    tp = _strip_optional(tp)
    if value is None:
        return None
    try:
        if tp is bool:
            if not isinstance(value, bool):
                raise ValueError(f"not a boolean: {value!r}")
            return value
        if tp is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError(f"not an integer: {value!r}")
            return int(value)
        if tp is float:
            return float(value)
        if tp is str:
            return str(value)
        if tp == list[float]:
            return [float(x) for x in value]
        if tp == list[list[float]]:
            return [[float(x) for x in row] for row in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), name) from exc
    raise ConfigError(f"unsupported field type {tp}", name)


def _section_from_mapping(cls, data: dict, prefix: str, parse_text: bool):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", prefix)
    kwargs = {}
    for key, raw in data.items():
        name = f"{prefix}.{key}"
        kwargs[key] = _parse_value(raw, hints[key], name) if parse_text else _coerce(raw, hints[key], name)
    return cls(**kwargs)


_SECTION_TYPES = {
    "seeker": SeekerSection,
    "analysis": AnalysisSection,
    "wireless": WirelessSection,
    "quadratic": QuadraticSection,
    "scripted": ScriptedSection,
}


def _from_sections(top: dict, sections: dict, parse_text: bool) -> ExperimentConfig:
    hints = typing.get_type_hints(ExperimentConfig)
    kwargs = {}
    unknown = set(top) - set(_TOP)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "experiment")
    for key, raw in top.items():
        name = f"experiment.{key}"
        kwargs[key] = _parse_value(raw, hints[key], name) if parse_text else _coerce(raw, hints[key], name)
    for sec, data in sections.items():
        if sec not in _SECTION_TYPES:
            raise ConfigError(f"unknown section [{sec}]", sec)
        kwargs[sec] = _section_from_mapping(_SECTION_TYPES[sec], data, sec, parse_text)
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def loads_ini(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    top = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    sections = {s: dict(parser[s]) for s in parser.sections() if s != "experiment"}
    return _from_sections(top, sections, parse_text=True)


def dumps_ini(cfg: ExperimentConfig) -> str:
    lines = ["[experiment]"]
    for key in _TOP:
        lines.append(f"{key} = {_format_value(getattr(cfg, key))}")
    for sec in _SECTIONS:
        obj = getattr(cfg, sec)
        if obj is None:
            continue
        lines.append("")
        lines.append(f"[{sec}]")
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if v is not None:
                lines.append(f"{f.name} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


def to_dict(cfg: ExperimentConfig) -> dict:
    out = {k: getattr(cfg, k) for k in _TOP}
    for sec in _SECTIONS:
        obj = getattr(cfg, sec)
        if obj is not None:
            out[sec] = {k: v for k, v in dataclasses.asdict(obj).items() if v is not None}
    return out


def from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    sections = {s: data.pop(s) for s in list(data) if isinstance(data[s], dict)}
    return _from_sections(data, sections, parse_text=False)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            return from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    return loads_ini(text)


def save_config(cfg: ExperimentConfig, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(to_dict(cfg), indent=2) + "\n")
    else:
        path.write_text(dumps_ini(cfg))


def reference_config(out_dir="out/reference", seed=0) -> ExperimentConfig:
    """The two-pair power control reproduction (constant rate 0.01, 2e5 iterations)."""
    return ExperimentConfig(
        game="wireless",
        seed=seed,
        out_dir=out_dir,
        window_fraction=0.1,
        seeker=SeekerSection(
            amplitude=[0.9, 0.9], frequency=[0.9, 1.0], phase=[0.0, 0.0], growth=[0.9, 0.9],
            schedule="constant", lambda0=0.01, horizon=200000, initial_offset=10.0,
        ),
        wireless=WirelessSection(),
    )


def quadratic_config(out_dir="out/quadratic", seed=0, noise_std=0.0) -> ExperimentConfig:
    """Single-node ``-(a - 2)**2`` game with a small dither, started at zero."""
    return ExperimentConfig(
        game="quadratic",
        seed=seed,
        out_dir=out_dir,
        seeker=SeekerSection(amplitude=[0.1], frequency=[1.0], phase=[0.0], growth=[1.0],
                             schedule="constant", lambda0=0.05, horizon=20000, initial=[0.0]),
        quadratic=QuadraticSection(centers=[2.0], curvature=[1.0], noise_std=noise_std),
    )
