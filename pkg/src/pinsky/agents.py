"""The three agents: evolvable conv policy, uniform-random agent, UCT planner."""

from __future__ import annotations

import enum
import hashlib
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import Action, EpisodeResult, GameState, RewardKind, Status, init_state
from .kernels import game as kg
from .kernels import mcts as km
from .kernels import policy as kp
from .level import Level, Tile

N_TILE_CHANNELS = len(Tile)


@dataclass(frozen=True)
class PolicyNet:
    """Architecture of the dual-input policy: two 3x3 convs, one dense layer, 5 outputs."""

    height: int
    width: int
    conv1: int = 8
    conv2: int = 16
    hidden: int = 64

    @classmethod
    def for_level(cls, level: Level, **sizes) -> "PolicyNet":
        return cls(level.height, level.width, **sizes)

    @property
    def offsets(self) -> np.ndarray:
        return kp.offsets(self.height, self.width, self.conv1, self.conv2, self.hidden)

    @property
    def n_params(self) -> int:
        return int(self.offsets[-1])

    @property
    def descriptor(self) -> str:
        return (f"dzelda-convnet:v1:h={self.height}:w={self.width}:c={N_TILE_CHANNELS}"
                f":f1={self.conv1}:f2={self.conv2}:hid={self.hidden}:a={len(Action)}")

    @property
    def arch_hash(self) -> bytes:
        return hashlib.sha256(self.descriptor.encode()).digest()[:8]

    def blocks(self, params):
        """Named views of the flat parameter vector."""
        o = self.offsets
        h, w, f1, f2, hid = self.height, self.width, self.conv1, self.conv2, self.hidden
        shapes = {
            "conv1_w": (f1, N_TILE_CHANNELS, 3, 3), "conv1_b": (f1,),
            "conv2_w": (f2, f1, 3, 3), "conv2_b": (f2,),
            "fc_w": (hid, f2 * h * w + 4), "fc_b": (hid,),
            "out_w": (len(Action), hid), "out_b": (len(Action),),
        }
        return {name: params[o[i]:o[i + 1]].reshape(shape)
                for i, (name, shape) in enumerate(shapes.items())}

    def init_params(self, seed) -> np.ndarray:
        """He-normal weights, zero biases: the unoptimized agent."""
        rng = np.random.default_rng(seed)
        params = np.zeros(self.n_params, dtype=np.float32)
        for name, block in self.blocks(params).items():
            if name.endswith("_w"):
                fan_in = int(np.prod(block.shape[1:]))
                block[...] = rng.standard_normal(block.shape) * np.sqrt(2.0 / fan_in)
        return params

    def check(self, params) -> np.ndarray:
        params = np.asarray(params)
        if params.ndim != 1 or params.shape[0] != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        if params.dtype != np.float32:
            params = params.astype(np.float32)
        return np.ascontiguousarray(params)


@dataclass(frozen=True)
class ObservationTensor:
    tiles: np.ndarray        # (channels, H, W) one-hot, uint8
    orientation: np.ndarray  # (4,) one-hot, uint8

    def tile_index(self) -> np.ndarray:
        return self.tiles.argmax(axis=0).astype(np.int8)

    @property
    def orientation_index(self) -> int:
        return int(self.orientation.argmax())


def encode_observation(state: GameState) -> ObservationTensor:
    walls, keys, doors, nm = state.level.static_arrays()
    idx = np.empty(walls.shape, dtype=np.int8)
    kg.render_tiles(walls, keys, doors, nm, state.vec, idx)
    tiles = (np.arange(N_TILE_CHANNELS)[:, None, None] == idx[None]).astype(np.uint8)
    orientation = np.zeros(4, dtype=np.uint8)
    orientation[int(state.vec[kg.ORI])] = 1
    return ObservationTensor(tiles, orientation)


def policy_scores(params, obs: ObservationTensor, net: PolicyNet) -> np.ndarray:
    params = net.check(params)
    tiles = obs.tile_index()
    if tiles.shape != (net.height, net.width):
        raise ValueError(f"observation {tiles.shape} does not fit a {net.height}x{net.width} network")
    buffers = kp.scratch(net.height, net.width, net.conv1, net.conv2, net.hidden)
    return np.asarray(kp.forward(params, tiles, obs.orientation_index, net.conv1, net.conv2,
                                 net.hidden, len(Action), *buffers))


def policy_act(params, obs: ObservationTensor, net: PolicyNet | None = None) -> Action:
    """Greedy action; ties go to the earliest action in enum order."""
    if net is None:
        h, w = obs.tiles.shape[1:]
        net = PolicyNet(h, w)
    return Action(int(kp.argmax_first(policy_scores(params, obs, net))))


def policy_agent(params, net: PolicyNet):
    params = net.check(params)

    def act(state: GameState) -> Action:
        return policy_act(params, encode_observation(state), net)

    return act


def evaluate_policy(level: Level, params, net: PolicyNet, kind=RewardKind.ALIGNED,
                    max_game_len: int = 500, detect_cycles: bool = True) -> EpisodeResult:
    """Whole episode of the greedy policy inside one kernel call.

    Equivalent to ``rollout(level, policy_agent(params, net), ...)``; repeated
    configurations are fast-forwarded to their timeout.
    """
    params = net.check(params)
    walls, keys, doors, nm = level.static_arrays()
    vec = init_state(level, max_game_len).vec.copy()
    kp.policy_episode(walls, keys, doors, nm, vec, params, net.conv1, net.conv2, net.hidden,
                      max_game_len, detect_cycles)
    return EpisodeResult.from_vec(vec, RewardKind(kind), max_game_len)


def random_agent(seed):
    """Uniform over the five actions from a seeded generator."""
    rng = np.random.default_rng(seed)

    def act(state: GameState) -> Action:
        return Action(int(rng.integers(len(Action))))

    return act


class BudgetMode(str, enum.Enum):
    NODE_EXPANSIONS = "node_expansions"
    WALLCLOCK_MS = "wallclock_ms"


@dataclass(frozen=True)
class MctsBudget:
    mode: BudgetMode = BudgetMode.NODE_EXPANSIONS
    amount: int = 300

    def __post_init__(self):
        object.__setattr__(self, "mode", BudgetMode(self.mode))
        if self.amount < 1:
            raise ValueError("MCTS budget must be positive")


UCT_C = float(np.sqrt(2.0))
ROLLOUT_DEPTH = 40
WALLCLOCK_CAPACITY = 20000


class MctsAgent:
    """UCT planner; with a node budget it is reproducible per seed."""

    def __init__(self, budget: MctsBudget, seed, c: float = UCT_C, depth: int = ROLLOUT_DEPTH):
        if budget.amount < 1:
            raise ValueError("MCTS budget must be positive")
        self.budget = budget
        self.c = c
        self.depth = depth
        self.rng = kg.rng_seed(seed)

    def __call__(self, state: GameState) -> Action:
        walls, keys, doors, nm = state.level.static_arrays()
        if self.budget.mode is BudgetMode.NODE_EXPANSIONS:
            a = km.search(walls, keys, doors, nm, state.max_game_len, state.vec, self.budget.amount,
                          self.c, self.depth, self.rng)
            return Action(int(a))
        tree = km.new_tree(WALLCLOCK_CAPACITY, state.vec)
        deadline = time.perf_counter() + self.budget.amount / 1000.0
        while True:
            done = km.iterate(walls, keys, doors, nm, state.max_game_len, *tree, 16,
                              self.c, self.depth, self.rng)
            if done < 16 or time.perf_counter() >= deadline:
                break
        return Action(int(km.most_visited(tree[2], tree[4])))


def mcts_agent(budget: MctsBudget, seed, **kwargs) -> MctsAgent:
    return MctsAgent(budget, seed, **kwargs)


def mcts_episode(level: Level, budget: MctsBudget, seed, max_game_len: int = 500,
                 kind=RewardKind.ALIGNED) -> EpisodeResult:
    """Node-budget MCTS episode run entirely inside the kernel (same result as ``rollout``)."""
    if budget.mode is not BudgetMode.NODE_EXPANSIONS:
        from .game import rollout
        return rollout(level, MctsAgent(budget, seed), kind, max_game_len)
    walls, keys, doors, nm = level.static_arrays()
    vec = init_state(level, max_game_len).vec.copy()
    km.mcts_episode(walls, keys, doors, nm, vec, max_game_len, budget.amount, UCT_C,
                    ROLLOUT_DEPTH, kg.rng_seed(seed))
    return EpisodeResult.from_vec(vec, RewardKind(kind), max_game_len)


# -- parameter files ---------------------------------------------------------
# b"PNSK" | u16 version | u16 reserved | 8-byte architecture hash | u64 count | f32 LE data

MAGIC = b"PNSK"
_HEADER = struct.Struct("<4sHH8sQ")


class ArchitectureMismatch(ValueError):
    pass


def dump_params(params, net: PolicyNet) -> bytes:
    params = net.check(params)
    return _HEADER.pack(MAGIC, 1, 0, net.arch_hash, params.size) + params.astype("<f4").tobytes()


def load_params(data: bytes, net: PolicyNet | None = None) -> tuple[np.ndarray, bytes]:
    """Decode a parameter blob; returns (params, arch_hash). Refuses a foreign architecture."""
    if len(data) < _HEADER.size:
        raise ValueError("parameter blob too short")
    magic, version, _, arch, count = _HEADER.unpack_from(data)
    if magic != MAGIC or version != 1:
        raise ValueError("not a parameter file")
    body = data[_HEADER.size:]
    if len(body) != 4 * count:
        raise ValueError(f"parameter blob holds {len(body) // 4} floats, header says {count}")
    if net is not None and arch != net.arch_hash:
        raise ArchitectureMismatch(
            f"architecture hash {arch.hex()} does not match {net.arch_hash.hex()} ({net.descriptor})")
    return np.frombuffer(body, dtype="<f4").astype(np.float32), arch


def save_params(path, params, net: PolicyNet) -> bytes:
    blob = dump_params(params, net)
    Path(path).write_bytes(blob)
    return blob


def read_params(path, net: PolicyNet | None = None) -> np.ndarray:
    return load_params(Path(path).read_bytes(), net)[0]


__all__ = [
    "PolicyNet", "ObservationTensor", "encode_observation", "policy_act", "policy_scores",
    "policy_agent", "evaluate_policy", "random_agent", "MctsBudget", "BudgetMode", "MctsAgent",
    "mcts_agent", "mcts_episode", "dump_params", "load_params", "save_params", "read_params",
    "ArchitectureMismatch", "Status",
]
