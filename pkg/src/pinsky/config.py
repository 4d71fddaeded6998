"""Run configuration, presets and the flat key=value config format."""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .level import Variant

OUTPUT_DIR_ENV = "PINSKY_OUTPUT_DIR"


class ConfigError(ValueError):
    """Bad configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    # outer-loop parameters with their reference defaults
    max_game_len: int = 500
    n_games: int = 1500
    pop_size: int = 50
    mutation_timer: int = 25
    max_children: int = 8
    mutation_rate: float = 0.8
    transfer_timer: int = 10
    max_envs: int = 30
    num_poet_loops: int = 5000
    aligned_reward: bool = False
    # experiment condition
    variant: str = Variant.SINGLE_DOOR.value
    mc_enabled: bool = True
    seed_level: str = ""  # path, or empty for the bundled seed of the variant
    height: int = 9
    width: int = 13
    seed: int = 0
    # minimal-criterion gate
    mcts_budget_mode: str = "node_expansions"
    mcts_budget: int = 300
    random_trials: int = 20
    mcts_trials: int = 3
    # level mutation
    add_bias: float = 0.5
    mean_edits: float = 2.0
    # inner optimizer
    de_f: float = 0.5
    de_cr: float = 0.7
    de_init_sigma: float = 0.1
    # policy network
    conv1: int = 8
    conv2: int = 16
    hidden: int = 64
    out_dir: str = field(default="", compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant).value)
        except ValueError:
            raise ConfigError(f"variant: expected singleDoor or multiDoor, got {self.variant!r}") from None
        positive = ("max_game_len", "n_games", "pop_size", "mutation_timer", "transfer_timer",
                    "max_envs", "height", "width", "mcts_budget", "random_trials", "mcts_trials",
                    "conv1", "conv2", "hidden")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {getattr(self, name)}")
        for name in ("max_children", "num_poet_loops", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative, got {getattr(self, name)}")
        for name in ("mutation_rate", "add_bias", "de_cr"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {getattr(self, name)}")
        if not 0.0 < self.de_f <= 2.0:
            raise ConfigError(f"de_f: must lie in (0, 2], got {self.de_f}")
        if self.de_init_sigma < 0:
            raise ConfigError(f"de_init_sigma: must be non-negative, got {self.de_init_sigma}")
        if self.mean_edits < 1:
            raise ConfigError(f"mean_edits: must be >= 1, got {self.mean_edits}")
        if self.pop_size < 4:
            raise ConfigError(f"pop_size: DE/rand/1 needs at least 4 members, got {self.pop_size}")
        if self.n_games < self.pop_size:
            raise ConfigError(f"n_games: must be >= pop_size ({self.pop_size}), got {self.n_games}")
        if self.mcts_budget_mode not in ("node_expansions", "wallclock_ms"):
            raise ConfigError(f"mcts_budget_mode: expected node_expansions or wallclock_ms, "
                              f"got {self.mcts_budget_mode!r}")
        if not self.mc_enabled and not self.aligned_reward:
            raise ConfigError("mc_enabled: runs without the minimal criterion require aligned_reward=true")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self, with_out_dir: bool = False) -> dict:
        d = dataclasses.asdict(self)
        if not with_out_dir:
            d.pop("out_dir")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown configuration key")
        return cls(**d)

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "runs")


DESK = {"height": 9, "width": 13, "max_game_len": 200, "n_games": 160, "pop_size": 16,
        "max_envs": 10, "num_poet_loops": 200}

PRESETS = {
    "desk": DESK,
    "singledoor": {"variant": "singleDoor", "aligned_reward": False, "mc_enabled": True},
    "singledoor-aligned": {"variant": "singleDoor", "aligned_reward": True, "mc_enabled": True},
    "singledoor-aligned-nomc": {"variant": "singleDoor", "aligned_reward": True, "mc_enabled": False},
    "multidoor": {"variant": "multiDoor", "aligned_reward": False, "mc_enabled": True},
    "multidoor-aligned": {"variant": "multiDoor", "aligned_reward": True, "mc_enabled": True},
    "multidoor-aligned-nomc": {"variant": "multiDoor", "aligned_reward": True, "mc_enabled": False},
}


def preset_values(names: str) -> dict:
    """Merge comma-separated presets left to right."""
    out = {}
    for name in filter(None, (n.strip() for n in names.split(","))):
        if name not in PRESETS:
            raise ConfigError(f"preset: unknown preset {name!r} (choose from {', '.join(PRESETS)})")
        out.update(PRESETS[name])
    return out


def coerce(name: str, raw: str):
    """Parse a textual value into the type of field ``name``."""
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigError(f"{name}: unknown configuration key")
    kind = types[name]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """INI-style ``key = value`` lines, optionally under a ``[run]`` section; ``#`` comments."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from None
    extra = [s for s in parser.sections() if s != "run"]
    if extra:
        raise ConfigError(f"config: unknown section [{extra[0]}]")
    return {k: coerce(k, v) for k, v in parser["run"].items()} if parser.has_section("run") else {}


def format_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    return parse_config_text(path.read_text())
