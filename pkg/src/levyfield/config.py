"""Experiment configuration files (JSON) with strict key checking."""

import copy
import json
from dataclasses import dataclass, field

from .exceptions import ConfigError

__all__ = ["ExperimentConfig", "SCHEMA", "load_config", "dumps"]

# allowed keys per block; None means free-form (validated by the consumer)
SCHEMA = {
    "command": None,
    "process": None,
    "noise": None,
    "model": {"b", "sigma", "u0", "rho", "kappa0"},
    "density": {"t", "half_width", "dx", "derivative", "h", "eps"},
    "moments": {"kappa0", "t", "t_grid", "replicas", "kappa"},
    "indices": {"method", "limiting_case"},
    "simulate": {"T", "dt", "N", "L", "replicas", "block_size", "site_stride", "keep_paths"},
    "holder": {"paths_dir", "direction", "orders", "lags", "kappa0", "rho", "limiting_case"},
    "verify": {"lemma", "processes", "kappa0", "replicas", "limiting_case"},
    "seed": None,
    "output_dir": None,
    "emit": None,
}
BLOCKS = tuple(k for k, v in SCHEMA.items() if isinstance(v, set))


def _check_block(name, block):
    if not isinstance(block, dict):
        raise ConfigError(f"config block {name!r} must be a mapping")
    extra = sorted(set(block) - SCHEMA[name])
    if extra:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(extra)}")


@dataclass
class ExperimentConfig:
    """One experiment: a process, an optional noise, per-module parameter
    blocks, a seed, an output directory and the emitted formats."""

    command: str = None
    process: dict = None
    noise: dict = None
    blocks: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "."
    emit: tuple = ("json",)

    def __post_init__(self):
        for name, block in self.blocks.items():
            if name not in BLOCKS:
                raise ConfigError(f"unknown config block {name!r}")
            _check_block(name, block)
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        emit = (self.emit,) if isinstance(self.emit, str) else tuple(self.emit)
        bad = [e for e in emit if e not in ("json", "csv")]
        if bad:
            raise ConfigError(f"unknown emit format(s): {bad}")
        self.emit = emit

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        extra = sorted(set(d) - set(SCHEMA))
        if extra:
            raise ConfigError(f"unknown key(s): {', '.join(extra)}")
        d = copy.deepcopy(d)
        blocks = {k: d.pop(k) for k in BLOCKS if k in d}
        return cls(blocks=blocks, **d)

    def to_dict(self):
        out = {"seed": self.seed, "output_dir": self.output_dir, "emit": list(self.emit)}
        for k in ("command", "process", "noise"):
            if getattr(self, k) is not None:
                out[k] = copy.deepcopy(getattr(self, k))
        for k in BLOCKS:
            if k in self.blocks:
                out[k] = copy.deepcopy(self.blocks[k])
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)

    def block(self, name):
        return dict(self.blocks.get(name, {}))

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()


def load_config(path):
    with open(path) as fh:
        return ExperimentConfig.from_json(fh.read())


def _encode(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if x != x:
            return '"nan"'
        if x in (float("inf"), float("-inf")):
            return '"inf"' if x > 0 else '"-inf"'
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        items = sorted(x.items())
        return "{" + ", ".join(json.dumps(str(k)) + ": " + _encode(v) for k, v in items) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in x) + "]"
    if hasattr(x, "tolist"):
        return _encode(x.tolist())
    raise TypeError(f"cannot encode {type(x).__name__}")


def dumps(obj):
    """Deterministic JSON with every float written to 17 significant digits;
    non-finite values become the strings "inf", "-inf", "nan"."""
    return _encode(obj) + "\n"
