"""Six-number level descriptor: object counts plus two A* path costs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..level import Level
from ..pathfinding import PathQuery, astar

N_DIMS = 6
FIELDS = ("doors", "monsters", "walls", "keys", "avatar_to_key", "door_tour")


@dataclass(frozen=True)
class Embedding:
    values: tuple  # six non-negative ints
    unreachable: bool = False  # some path cost was replaced by width*height

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _costs(grid, start, goals):
    out = []
    for g in goals:
        r = astar(PathQuery(grid, start, g))
        out.append(r.cost)
    return out


def _nearest(costs, goals, penalty):
    """Index and cost of the nearest goal; unreachable counts as ``penalty``, ties in row-major order."""
    keyed = [((penalty if c is None else c), goals[i], i) for i, c in enumerate(costs)]
    cost, _, idx = min(keyed)
    return idx, cost, costs[idx] is None


def embed_level(level: Level) -> Embedding:
    """<doors, monsters, interior wall tiles, keys, A*(avatar, nearest key), greedy door tour>.

    The tour starts at the key nearest the avatar, walks to the door nearest that
    key, then repeatedly to the nearest unvisited door. Unreachable legs cost
    ``width * height`` and flag the embedding.
    """
    level.validate()
    grid = level.wall_mask()
    penalty = level.width * level.height
    keys, doors = list(level.keys), list(level.doors)
    k, x5, miss = _nearest(_costs(grid, level.avatar, keys), keys, penalty)
    flagged = miss
    here = keys[k]
    remaining = list(doors)
    x6 = 0
    while remaining:
        j, cost, miss = _nearest(_costs(grid, here, remaining), remaining, penalty)
        flagged |= miss
        x6 += cost
        here = remaining.pop(j)
    values = (len(doors), len(level.monsters), int(level.interior_walls()), len(keys), int(x5), int(x6))
    return Embedding(values, flagged)
