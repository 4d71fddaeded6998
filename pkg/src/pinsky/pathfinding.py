"""Shortest 4-connected paths on a level's wall mask.

Only walls block; keys, doors and monsters are treated as open floor since
the costs describe the static layout.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

UNREACHABLE = None

_NEIGHBOURS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class PathQuery:
    grid: np.ndarray  # True where a wall is
    start: tuple[int, int]
    goal: tuple[int, int]

    def check(self):
        h, w = self.grid.shape
        for name, (r, c) in (("start", self.start), ("goal", self.goal)):
            if not (0 <= r < h and 0 <= c < w):
                raise ValueError(f"{name} {(r, c)} outside the {w}x{h} grid")
            if self.grid[r, c]:
                raise ValueError(f"{name} {(r, c)} is a wall")


@dataclass(frozen=True)
class PathResult:
    cost: int | None
    path: list | None = None

    @property
    def reachable(self) -> bool:
        return self.cost is not None


def manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def astar(query: PathQuery) -> PathResult:
    query.check()
    grid, start, goal = query.grid, tuple(query.start), tuple(query.goal)
    h, w = grid.shape
    g_cost = {start: 0}
    parent = {start: None}
    heap = [(manhattan(start, goal), 0, start[0], start[1])]
    closed = set()
    while heap:
        _, g, r, c = heapq.heappop(heap)
        node = (r, c)
        if node in closed:
            continue
        if node == goal:
            path = []
            while node is not None:
                path.append(node)
                node = parent[node]
            return PathResult(g, path[::-1])
        closed.add(node)
        for dr, dc in _NEIGHBOURS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or grid[nr, nc]:
                continue
            nxt = (nr, nc)
            ng = g + 1
            if ng < g_cost.get(nxt, 1 << 60):
                g_cost[nxt] = ng
                parent[nxt] = node
                heapq.heappush(heap, (ng + manhattan(nxt, goal), ng, nr, nc))
    return PathResult(UNREACHABLE)


def bfs_distances(grid: np.ndarray, start) -> np.ndarray:
    """Exhaustive breadth-first distance map from ``start`` (-1 where unreachable)."""
    h, w = grid.shape
    dist = np.full((h, w), -1, dtype=np.int64)
    dist[start] = 0
    queue = deque([tuple(start)])
    while queue:
        r, c = queue.popleft()
        for dr, dc in _NEIGHBOURS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not grid[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = dist[r, c] + 1
                queue.append((nr, nc))
    return dist


def bfs_oracle(query: PathQuery) -> PathResult:
    query.check()
    d = int(bfs_distances(query.grid, query.start)[tuple(query.goal)])
    return PathResult(d if d >= 0 else UNREACHABLE)


def level_query(level, start, goal) -> PathQuery:
    return PathQuery(level.wall_mask(), tuple(start), tuple(goal))
