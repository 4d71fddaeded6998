"""Deterministic dZelda: game state, transitions, rewards and rollouts."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .kernels import game as kg
from .level import Level, LevelError


class Action(enum.IntEnum):
    UP = kg.UP
    DOWN = kg.DOWN
    LEFT = kg.LEFT
    RIGHT = kg.RIGHT
    ATTACK = kg.ATTACK


class Orientation(enum.IntEnum):
    N = kg.NORTH
    S = kg.SOUTH
    E = kg.EAST
    W = kg.WEST


class Status(enum.IntEnum):
    RUNNING = kg.RUNNING
    WON = kg.WON
    LOST = kg.LOST
    TIMEOUT = kg.TIMEOUT


class RewardKind(str, enum.Enum):
    DEFAULT = "default"
    ALIGNED = "aligned"


class TerminalStateError(RuntimeError):
    """``step`` was called on a finished game."""


DEFAULT_MAX_GAME_LEN = 500


class GameState:
    """Immutable view over a kernel state vector.

    ``step`` returns a new state; the underlying vector is never mutated
    after construction.
    """

    __slots__ = ("level", "vec", "max_game_len")

    def __init__(self, level: Level, vec: np.ndarray, max_game_len: int):
        self.level = level
        self.vec = vec
        self.max_game_len = max_game_len
        vec.setflags(write=False)

    @property
    def _nk(self):
        return len(self.level.static_arrays()[1])

    @property
    def _nd(self):
        return len(self.level.static_arrays()[2])

    @property
    def avatar_pos(self) -> tuple[int, int]:
        return int(self.vec[kg.AR]), int(self.vec[kg.AC])

    @property
    def orientation(self) -> Orientation:
        return Orientation(int(self.vec[kg.ORI]))

    @property
    def has_key(self) -> bool:
        return bool(self.vec[kg.HAS_KEY])

    @property
    def step(self) -> int:
        return int(self.vec[kg.STEP])

    @property
    def status(self) -> Status:
        return Status(int(self.vec[kg.STATUS]))

    @property
    def kills(self) -> int:
        return int(self.vec[kg.KILLS])

    @property
    def key_pickups(self) -> int:
        return int(self.vec[kg.PICKUPS])

    @property
    def doors_opened(self) -> int:
        return int(self.vec[kg.OPENED])

    @property
    def keys_remaining(self) -> list[tuple[int, int]]:
        keys = self.level.static_arrays()[1]
        alive = self.vec[kg.HDR:kg.HDR + self._nk]
        return [(int(r), int(c)) for (r, c), a in zip(keys, alive) if a]

    @property
    def doors_visited(self) -> frozenset:
        doors = self.level.static_arrays()[2]
        d0 = kg.HDR + self._nk
        flags = self.vec[d0:d0 + self._nd]
        return frozenset((int(r), int(c)) for (r, c), v in zip(doors, flags) if v)

    @property
    def monsters(self) -> list[tuple[int, int]]:
        nm = self.level.static_arrays()[3]
        m0 = kg.HDR + self._nk + self._nd
        rows = self.vec[m0:m0 + nm]
        cols = self.vec[m0 + nm:m0 + 2 * nm]
        return [(int(r), int(c)) for r, c in zip(rows, cols) if r >= 0]

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (
            self.level == other.level
            and self.max_game_len == other.max_game_len
            and np.array_equal(self.vec, other.vec)
        )

    def __repr__(self):
        return (
            f"GameState(step={self.step}, status={self.status.name}, avatar={self.avatar_pos}, "
            f"orientation={self.orientation.name}, has_key={self.has_key}, monsters={self.monsters})"
        )

    def render(self) -> str:
        """ASCII frame of the current state (same glyphs as the level format)."""
        from .level import GLYPHS, Tile

        walls, keys, doors, nm = self.level.static_arrays()
        tiles = np.empty(walls.shape, dtype=np.int8)
        kg.render_tiles(walls, keys, doors, nm, self.vec, tiles)
        return "\n".join("".join(GLYPHS[Tile(v)] for v in row) for row in tiles)


@dataclass(frozen=True)
class EpisodeResult:
    final_status: Status
    n_steps: int
    reward: float
    win: bool
    kills: int
    key_pickups: int
    doors_opened: int

    @classmethod
    def from_vec(cls, vec, kind: RewardKind, max_game_len: int) -> "EpisodeResult":
        status = Status(int(vec[kg.STATUS]))
        partial = cls(
            final_status=status,
            n_steps=int(vec[kg.STEP]),
            reward=0.0,
            win=status is Status.WON,
            kills=int(vec[kg.KILLS]),
            key_pickups=int(vec[kg.PICKUPS]),
            doors_opened=int(vec[kg.OPENED]),
        )
        return cls(**{**partial.__dict__, "reward": episode_reward(partial, kind, max_game_len)})


def init_state(level: Level, max_game_len: int = DEFAULT_MAX_GAME_LEN) -> GameState:
    problems = level.violations()
    if problems:
        raise LevelError("; ".join(problems))
    if max_game_len < 1:
        raise ValueError("max_game_len must be positive")
    _, keys, doors, _ = level.static_arrays()
    monsters = np.array(level.monsters, dtype=np.int64).reshape(-1, 2)
    r, c = level.avatar
    vec = kg.initial_state(r, c, len(keys), len(doors), monsters)
    return GameState(level, vec, max_game_len)


def step(state: GameState, action) -> GameState:
    if state.status is not Status.RUNNING:
        raise TerminalStateError(f"game already finished ({state.status.name})")
    walls, keys, doors, nm = state.level.static_arrays()
    vec = state.vec.copy()
    kg.step_inplace(walls, keys, doors, nm, vec, int(action), state.max_game_len)
    return GameState(state.level, vec, state.max_game_len)


def episode_reward(result: EpisodeResult, kind, max_game_len: int) -> float:
    """Default reward counts events; aligned reward trades outcome against episode length.

    A timeout is scored like a death at ``n_steps == max_game_len`` (value 0).
    """
    kind = RewardKind(kind)
    if kind is RewardKind.DEFAULT:
        return float(result.kills + result.key_pickups + result.doors_opened)
    frac = result.n_steps / max_game_len
    if result.win:
        return 1.0 - frac
    return -1.0 + frac


def rollout(level: Level, agent, kind=RewardKind.ALIGNED, max_game_len: int = DEFAULT_MAX_GAME_LEN,
            trace: list | None = None) -> EpisodeResult:
    """Play ``agent`` (a ``state -> action`` callable) on ``level`` to termination.

    When ``trace`` is a list, every visited state (initial one included) is
    appended to it.
    """
    state = init_state(level, max_game_len)
    if trace is not None:
        trace.append(state)
    while state.status is Status.RUNNING:
        state = step(state, agent(state))
        if trace is not None:
            trace.append(state)
    return EpisodeResult.from_vec(state.vec, RewardKind(kind), max_game_len)
