"""Level mutation and the minimal-criterion playability gate."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .agents import MctsBudget, mcts_episode, random_agent
from .game import RewardKind, rollout
from .level import Level, Tile, Variant

DEFAULT_OBJECTS = frozenset({Tile.WALL, Tile.MONSTER, Tile.KEY, Tile.DOOR})


@dataclass(frozen=True)
class MutationConfig:
    mutation_rate: float = 0.8
    add_bias: float = 0.5
    allowed_objects: frozenset = DEFAULT_OBJECTS
    max_children: int = 8
    mean_edits: float = 2.0
    max_retries: int = 20

    def __post_init__(self):
        for name in ("mutation_rate", "add_bias"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        objs = frozenset(Tile(t) for t in self.allowed_objects)
        if Tile.AVATAR in objs or Tile.FLOOR in objs:
            raise ValueError("allowed_objects may not contain the avatar or floor")
        object.__setattr__(self, "allowed_objects", objs)
        if self.mean_edits < 1:
            raise ValueError("mean_edits must be >= 1")


@dataclass(frozen=True)
class Edit:
    op: str  # "add" | "remove" | "move"
    tile: Tile
    src: tuple | None
    dst: tuple | None


def _addable(cfg: MutationConfig, variant: Variant) -> list[Tile]:
    tiles = sorted(cfg.allowed_objects)
    if variant is Variant.SINGLE_DOOR:
        tiles = [t for t in tiles if t != Tile.DOOR]
    return tiles


def _draw_edit(cells: np.ndarray, cfg: MutationConfig, variant: Variant, rng) -> Edit | None:
    """One random edit applied to ``cells`` in place; None if the draw was invalid."""
    inner = cells[1:-1, 1:-1]
    floor = np.argwhere(inner == Tile.FLOOR) + 1
    objects = np.argwhere(inner != Tile.FLOOR) + 1
    u = rng.random()
    if u < cfg.add_bias:
        choices = _addable(cfg, variant)
        if not choices or len(floor) == 0:
            return None
        tile = choices[rng.integers(len(choices))]
        dst = tuple(int(v) for v in floor[rng.integers(len(floor))])
        cells[dst] = tile
        return Edit("add", Tile(tile), None, dst)
    if len(objects) == 0:
        return None
    src = tuple(int(v) for v in objects[rng.integers(len(objects))])
    tile = Tile(int(cells[src]))
    if u < cfg.add_bias + (1.0 - cfg.add_bias) / 2.0:
        if tile is Tile.AVATAR:
            return None
        if tile in (Tile.KEY, Tile.DOOR) and int((cells == tile).sum()) <= 1:
            return None
        cells[src] = Tile.FLOOR
        return Edit("remove", tile, src, None)
    if len(floor) == 0:
        return None
    dst = tuple(int(v) for v in floor[rng.integers(len(floor))])
    cells[dst] = tile
    cells[src] = Tile.FLOOR
    return Edit("move", tile, src, dst)


def mutate_with_edits(parent: Level, cfg: MutationConfig, seed) -> tuple[Level, list[Edit]]:
    """Like :func:`mutate` but also returns the applied edits (empty when unmutated)."""
    rng = np.random.default_rng(seed)
    if rng.random() >= cfg.mutation_rate:
        return parent.copy(), []
    n_edits = int(rng.geometric(1.0 / cfg.mean_edits))
    cells = parent.cells.copy()
    edits = []
    for _ in range(n_edits):
        for _attempt in range(cfg.max_retries):
            trial = cells.copy()
            edit = _draw_edit(trial, cfg, parent.variant, rng)
            if edit is not None and not Level(trial, parent.variant).violations():
                cells = trial
                edits.append(edit)
                break
        else:
            return parent.copy(), []
    return Level(cells, parent.variant), edits


def mutate(parent: Level, cfg: MutationConfig, seed) -> Level:
    """Seeded mutation: with probability ``mutation_rate`` apply a geometric number of add/remove/move edits."""
    return mutate_with_edits(parent, cfg, seed)[0]


class Verdict(str, enum.Enum):
    TOO_EASY = "too_easy"
    TOO_HARD = "too_hard"
    VIABLE = "viable"


@dataclass(frozen=True)
class McVerdict:
    verdict: Verdict
    random_wins: int
    random_trials: int
    mcts_wins: int
    mcts_trials: int

    def evidence(self) -> dict:
        return {
            "random_wins": self.random_wins, "random_trials": self.random_trials,
            "mcts_wins": self.mcts_wins, "mcts_trials": self.mcts_trials,
        }


DEFAULT_RANDOM_TRIALS = 20
DEFAULT_MCTS_TRIALS = 3


def mc_gate(level: Level, random_trials: int = DEFAULT_RANDOM_TRIALS,
            mcts_trials: int = DEFAULT_MCTS_TRIALS, budget: MctsBudget | None = None,
            max_game_len: int = 500, seed=0) -> McVerdict:
    """Too easy if any random episode wins, too hard if no MCTS episode wins.

    Trials stop at the first win since it settles the verdict; the evidence
    counters report the trials actually played.
    """
    if random_trials < 1 or mcts_trials < 1:
        raise ValueError("mc_gate needs at least one random and one MCTS trial")
    budget = budget or MctsBudget()
    ss = np.random.SeedSequence(_entropy(seed))
    rand_seeds, mcts_seeds = ss.spawn(2)
    played = 0
    for child in rand_seeds.spawn(random_trials):
        played += 1
        if rollout(level, random_agent(child), RewardKind.ALIGNED, max_game_len).win:
            return McVerdict(Verdict.TOO_EASY, 1, played, 0, 0)
    mcts_played = 0
    for child in mcts_seeds.spawn(mcts_trials):
        mcts_played += 1
        seed_int = int(child.generate_state(1, dtype=np.uint64)[0])
        if mcts_episode(level, budget, seed_int, max_game_len).win:
            return McVerdict(Verdict.VIABLE, 0, played, 1, mcts_played)
    return McVerdict(Verdict.TOO_HARD, 0, played, 0, mcts_played)


def _entropy(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) & (2**63 - 1) for s in seed]
    return int(seed) & (2**63 - 1)


@dataclass
class Candidate:
    parent_id: int
    level: Level
    edits: list = field(default_factory=list)
    verdict: McVerdict | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict is None or self.verdict.verdict is Verdict.VIABLE


def reproduce(population, cfg: MutationConfig, max_children: int | None = None, seed=0,
              random_trials: int = DEFAULT_RANDOM_TRIALS, mcts_trials: int = DEFAULT_MCTS_TRIALS,
              budget: MctsBudget | None = None, max_game_len: int = 500,
              gate: bool = True, log: list | None = None) -> list[tuple[Level, int]]:
    """Mutate uniformly drawn parents and keep the children that pass the gate.

    ``population`` holds objects with ``env_id`` and ``level``. Every candidate
    (accepted or not) is appended to ``log`` when given. With ``gate=False``
    all children are kept and ``verdict`` stays ``None``.
    """
    population = list(population)
    if not population:
        raise ValueError("reproduce needs a non-empty population")
    n = cfg.max_children if max_children is None else max_children
    rng = np.random.default_rng(_entropy(seed))
    kept = []
    for _ in range(n):
        parent = population[int(rng.integers(len(population)))]
        child_seed = int(rng.integers(2**63 - 1))
        child, edits = mutate_with_edits(parent.level, cfg, child_seed)
        cand = Candidate(parent.env_id, child, edits)
        if gate:
            cand.verdict = mc_gate(child, random_trials, mcts_trials, budget, max_game_len,
                                   seed=int(rng.integers(2**63 - 1)))
        if log is not None:
            log.append(cand)
        if cand.accepted:
            kept.append((child, parent.env_id))
    return kept
