"""JSON experiment configuration.

Power-like quantities are given in dB and always carry a ``_db`` suffix::

    {
      "source": "G2",
      "channel": "rayleigh",
      "b": 1,
      "d_max_db": 8,
      "sweep": {"start_db": 0, "stop_db": 30, "step_db": 1},
      "schemes": ["SCOPA-MDO", "COPA-MDO", "CORACP", "CRCP"],
      "trials": 1000000,
      "seed": 1
    }

``source`` is a label (G1, G2, G3, U, S) or ``{"variances": [...], "pmf": [...]}``.
``channel`` is ``"rayleigh"`` or ``{"kind": "tabulated", "alpha": [...], "pdf": [...]}``
(or ``"file"`` naming a two-column CSV ``alpha,pdf`` relative to the config).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .models import EXPERIMENTAL_LABELS, FadingChannel, SourceModel, build_experimental_source
from .schemes import SCHEMES, canonical_scheme

EXPONENT_SETTINGS = ((8.0, 16.0), (8.0, 20.0), (5.0, 20.0))
EXPONENT_B = (1, 5)
GAIN_P_BAR2_DB = (25.0, 20.0)


class ConfigError(ValueError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        self.message = message
        where = []
        if field:
            where.append(f"field {field}")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass
class ExperimentConfig:
    source: Any = "G2"
    channel: Any = "rayleigh"
    b: int = 1
    d_max_db: float = 8.0
    p_avg_db: Optional[float] = None
    sweep: Optional[dict] = None
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    sources: Optional[list] = None
    trials: int = 100000
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    p_bar2_db: list = field(default_factory=lambda: list(GAIN_P_BAR2_DB))
    exponent_b: list = field(default_factory=lambda: list(EXPONENT_B))
    exponent_settings: list = field(
        default_factory=lambda: [{"d_max_db": d, "p_avg_db": p} for d, p in EXPONENT_SETTINGS]
    )
    base_dir: str = field(default=".", repr=False, compare=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = ".", text: Optional[str] = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("top-level JSON value must be an object")
        known = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown field {key!r}", key, _line_of(text, key))
        cfg = cls(**{k: v for k, v in data.items()}, base_dir=base_dir)
        try:
            cfg.validate()
        except ConfigError as exc:
            if exc.line is None and exc.field:
                exc.line = _line_of(text, exc.field.split(".")[-1].split("[")[0])
                exc.args = (str(ConfigError(exc.message, exc.field, exc.line)),)
            raise
        return cfg

    @classmethod
    def from_json(cls, text: str, base_dir: str = ".") -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", None, exc.lineno) from None
        return cls.from_dict(data, base_dir, text)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", "config") from None
        return cls.from_json(text, os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            if name == "base_dir":
                continue
            value = getattr(self, name)
            if value is None:
                continue
            out[name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        self.source_model()
        for i, src in enumerate(self.sources or []):
            _source_from_spec(src, f"sources[{i}]")
        self.channel_model()
        if isinstance(self.b, bool) or not isinstance(self.b, int) or self.b < 1:
            raise ConfigError("b must be an integer >= 1", "b")
        _finite(self.d_max_db, "d_max_db")
        if self.p_avg_db is not None:
            _finite(self.p_avg_db, "p_avg_db")
        if self.sweep is not None:
            self.sweep_points()
        if not isinstance(self.schemes, list) or not self.schemes:
            raise ConfigError("schemes must be a non-empty list", "schemes")
        try:
            self.schemes = [canonical_scheme(s) for s in self.schemes]
        except ValueError as exc:
            raise ConfigError(str(exc), "schemes") from None
        for name in ("trials", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1", name)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer", "seed")
        for i, p in enumerate(self.p_bar2_db):
            _finite(p, f"p_bar2_db[{i}]")
        for i, b in enumerate(self.exponent_b):
            if isinstance(b, bool) or not isinstance(b, int) or b < 1:
                raise ConfigError("entries must be integers >= 1", f"exponent_b[{i}]")
        for i, row in enumerate(self.exponent_settings):
            if not isinstance(row, dict) or set(row) != {"d_max_db", "p_avg_db"}:
                raise ConfigError("each setting needs d_max_db and p_avg_db", f"exponent_settings[{i}]")
            _finite(row["d_max_db"], f"exponent_settings[{i}].d_max_db")
            _finite(row["p_avg_db"], f"exponent_settings[{i}].p_avg_db")

    def source_model(self) -> SourceModel:
        return _source_from_spec(self.source, "source")

    def source_models(self) -> list:
        if self.sources:
            return [_source_from_spec(s, f"sources[{i}]") for i, s in enumerate(self.sources)]
        return [self.source_model()]

    def channel_model(self) -> FadingChannel:
        ch = self.channel
        if isinstance(ch, str):
            if ch.lower() == "rayleigh":
                return FadingChannel.rayleigh()
            raise ConfigError(f"unknown channel {ch!r}", "channel")
        if not isinstance(ch, dict) or ch.get("kind") != "tabulated":
            raise ConfigError('channel must be "rayleigh" or {"kind": "tabulated", ...}', "channel")
        if "file" in ch:
            path = os.path.join(self.base_dir, ch["file"])
            if not os.path.exists(path):
                raise ConfigError(f"file not found: {ch['file']}", "channel.file")
            alpha, pdf = _read_table(path)
        else:
            try:
                alpha, pdf = ch["alpha"], ch["pdf"]
            except KeyError as exc:
                raise ConfigError(f"missing {exc.args[0]}", f"channel.{exc.args[0]}") from None
        try:
            return FadingChannel.tabulated(alpha, pdf)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), "channel") from None

    def sweep_points(self) -> list:
        sw = self.sweep
        if not isinstance(sw, dict) or set(sw) != {"start_db", "stop_db", "step_db"}:
            raise ConfigError("sweep needs exactly start_db, stop_db, step_db", "sweep")
        start = _finite(sw["start_db"], "sweep.start_db")
        stop = _finite(sw["stop_db"], "sweep.stop_db")
        step = _finite(sw["step_db"], "sweep.step_db")
        if step <= 0:
            raise ConfigError("step_db must be > 0", "sweep.step_db")
        if stop < start:
            raise ConfigError("stop_db must be >= start_db", "sweep.stop_db")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]


def _finite(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError("must be a finite number", name)
    return float(value)


def _source_from_spec(spec, name) -> SourceModel:
    if isinstance(spec, str):
        if spec.upper() not in EXPERIMENTAL_LABELS:
            raise ConfigError(f"unknown source label {spec!r}", name)
        return build_experimental_source(spec)
    if isinstance(spec, dict):
        extra = set(spec) - {"variances", "pmf", "label"}
        if extra or "variances" not in spec or "pmf" not in spec:
            raise ConfigError("explicit source needs variances and pmf", name)
        try:
            return SourceModel(
                np.asarray(spec["variances"], float),
                np.asarray(spec["pmf"], float),
                spec.get("label", "custom"),
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), name) from None
    raise ConfigError("source must be a label or an object", name)


def _read_table(path):
    alpha, pdf = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            try:
                a, p = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if i == 1:
                    continue  # header
                raise ConfigError(f"bad row in {os.path.basename(path)}", "channel.file", i) from None
            alpha.append(a)
            pdf.append(p)
    return alpha, pdf


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None
