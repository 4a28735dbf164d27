"""Run configuration and its flat ``key = value`` text form.

Nested sections are addressed with dotted keys, e.g. ``propagation.k = 5`` or
``encoder.kind = mlp``. Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from enum import Enum

from ..encoder import EncoderConfig
from ..episodes import SynthSpec
from ..errors import ConfigError
from ..memory import PropagationConfig
from ..relation import MetricKind

VARIANTS = ("mrn", "mrn_zero", "mrn_euclid", "mrn_mean", "mrn_max")
SECTIONS = ("propagation", "encoder", "synth")


@dataclass
class RunConfig:
    C: int = 5
    K: int = 1
    Q: int = 15
    U: int = 0  # unlabeled extras per class (semi_supervised memory)
    eval_Q: int = 0  # queries per class at evaluation; 0 means same as Q
    variant: str = "mrn"
    metric_DC: MetricKind = MetricKind.LEARNED
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    relation_hidden: int = 8
    relation_filters: int = 64
    relation_output: str = "softplus"
    lr: float = 1e-3
    weight_decay: float = 1e-6
    total_episodes: int = 5000
    halve_every: int = 1250
    eval_episodes: int = 1000
    eval_split: str = "test"
    seed: int = 0
    data_path: str = ""
    synth: SynthSpec = field(default_factory=SynthSpec)

    def __post_init__(self):
        self.metric_DC = MetricKind.parse(self.metric_DC)
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.halve_every <= 0:
            raise ConfigError(f"halve_every must be positive, got {self.halve_every}")
        if self.C < 2 or self.K < 1 or self.Q < 1:
            raise ConfigError(f"episode shape needs C >= 2, K >= 1, Q >= 1 (got {self.C}, {self.K}, {self.Q})")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")

    @property
    def queries_at_eval(self) -> int:
        return self.eval_Q or self.Q

    def resolved(self) -> "RunConfig":
        """Copy with the variant's forced settings applied."""
        cfg = copy.deepcopy(self)
        prop = cfg.propagation
        if cfg.variant == "mrn_zero":
            prop.k, prop.d = 0, 0
        elif cfg.variant == "mrn_euclid":
            prop.metric = MetricKind.EUCLIDEAN
        elif cfg.variant == "mrn_mean":
            prop.strategy = "mean"
        elif cfg.variant == "mrn_max":
            prop.strategy = "max"
        return cfg

    def lr_at(self, episode: int) -> float:
        return self.lr * 0.5 ** (episode // self.halve_every)

    # -- text form --------------------------------------------------------
    def to_flat(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if f.name in SECTIONS:
                for sf in dataclasses.fields(val):
                    out[f"{f.name}.{sf.name}"] = _fmt(getattr(val, sf.name))
            else:
                out[f.name] = _fmt(val)
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_flat().items())

    @classmethod
    def from_flat(cls, items: dict[str, str], base: "RunConfig | None" = None) -> "RunConfig":
        cfg = copy.deepcopy(base) if base is not None else cls()
        return cfg.with_overrides(items)

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        return cls.from_flat(parse_flat(text), base)

    def with_overrides(self, items: dict[str, object]) -> "RunConfig":
        """New config with dotted-key overrides applied and validated."""
        top = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        sections = {name: {f.name: getattr(top[name], f.name) for f in dataclasses.fields(top[name])}
                    for name in SECTIONS}
        for key, raw in items.items():
            section, _, name = key.partition(".")
            if name:
                if section not in SECTIONS or name not in sections[section]:
                    raise ConfigError(f"unknown config key {key!r}")
                sections[section][name] = _coerce(key, raw, sections[section][name])
            else:
                if key not in top or key in SECTIONS:
                    raise ConfigError(f"unknown config key {key!r}")
                top[key] = _coerce(key, raw, top[key])
        try:
            top["propagation"] = PropagationConfig(**sections["propagation"])
            top["encoder"] = EncoderConfig(**sections["encoder"])
            top["synth"] = SynthSpec(**sections["synth"])
            return RunConfig(**top)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def parse_flat(text: str) -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        items[key.strip()] = val.strip()
    return items


def parse_override(text: str) -> tuple[str, str]:
    key, sep, val = text.partition("=")
    if not sep:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    return key.strip(), val.strip()


def _fmt(val) -> str:
    if isinstance(val, Enum):
        return str(val.value)
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ",".join(str(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _coerce(key: str, raw, current):
    if not isinstance(raw, str):
        return raw
    try:
        if isinstance(current, Enum):
            return type(current).parse(raw) if hasattr(type(current), "parse") else type(current)(raw)
        if isinstance(current, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, tuple):
            return tuple(int(v) for v in raw.replace("x", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(current).__name__}") from None
    return raw
