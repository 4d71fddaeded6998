"""UCT search over the dZelda forward model.

The tree lives in preallocated arrays so it can be grown inside a jitted
loop; node 0 is the root. Each iteration expands at most one node, plays
uniform-random actions from it up to a depth cap and backs up the aligned
terminal value (won: ``1 - t/T``, otherwise ``-1 + t/T``).
"""

import math

import numpy as np

from .._jit import jit
from . import game as g


def new_tree(capacity, root):
    n = root.shape[0]
    states = np.empty((capacity, n), dtype=np.int64)
    states[0] = root
    parent = np.full(capacity, -1, dtype=np.int64)
    children = np.full((capacity, g.N_ACTIONS), -1, dtype=np.int64)
    n_expanded = np.zeros(capacity, dtype=np.int64)
    visits = np.zeros(capacity, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)
    meta = np.ones(1, dtype=np.int64)  # node count
    return states, parent, children, n_expanded, visits, value, meta


@jit
def iterate(walls, keys, doors, nm, max_len,
            states, parent, children, n_expanded, visits, value, meta,
            n_iters, c, depth, rng):
    """Run up to ``n_iters`` expansions; returns how many were performed."""
    capacity = states.shape[0]
    scratch = np.empty(states.shape[1], dtype=np.int64)
    done = 0
    for _ in range(n_iters):
        node = 0
        while states[node, g.STATUS] == g.RUNNING and n_expanded[node] == g.N_ACTIONS:
            log_n = math.log(visits[node])
            best = -1
            best_u = -np.inf
            for a in range(g.N_ACTIONS):
                ch = children[node, a]
                u = value[ch] / visits[ch] + c * math.sqrt(log_n / visits[ch])
                if u > best_u:
                    best_u = u
                    best = ch
            node = best
        if states[node, g.STATUS] == g.RUNNING:
            if meta[0] >= capacity:
                break
            k = g.rng_below(rng, g.N_ACTIONS - n_expanded[node])
            action = -1
            for a in range(g.N_ACTIONS):
                if children[node, a] < 0:
                    if k == 0:
                        action = a
                        break
                    k -= 1
            child = meta[0]
            meta[0] += 1
            states[child] = states[node]
            g.step_inplace(walls, keys, doors, nm, states[child], action, max_len)
            parent[child] = node
            children[node, action] = child
            n_expanded[node] += 1
            node = child
        scratch[:] = states[node]
        g.random_rollout(walls, keys, doors, nm, scratch, max_len, depth, rng)
        v = g.aligned_value(scratch, max_len)
        while node >= 0:
            visits[node] += 1
            value[node] += v
            node = parent[node]
        done += 1
    return done


@jit
def most_visited(children, visits):
    best = -1
    best_n = -1
    for a in range(g.N_ACTIONS):
        ch = children[0, a]
        if ch >= 0 and visits[ch] > best_n:
            best_n = visits[ch]
            best = a
    return best


@jit
def search(walls, keys, doors, nm, max_len, root, budget, c, depth, rng):
    """Fixed node-expansion budget search from ``root``; returns the chosen action."""
    n = root.shape[0]
    capacity = budget + 1
    states = np.empty((capacity, n), dtype=np.int64)
    states[0] = root
    parent = np.full(capacity, -1, dtype=np.int64)
    children = np.full((capacity, g.N_ACTIONS), -1, dtype=np.int64)
    n_expanded = np.zeros(capacity, dtype=np.int64)
    visits = np.zeros(capacity, dtype=np.int64)
    value = np.zeros(capacity, dtype=np.float64)
    meta = np.ones(1, dtype=np.int64)
    iterate(walls, keys, doors, nm, max_len, states, parent, children, n_expanded,
            visits, value, meta, budget, c, depth, rng)
    return most_visited(children, visits)


@jit
def mcts_episode(walls, keys, doors, nm, s, max_len, budget, c, depth, rng):
    """Play a full episode (in place) choosing every action by :func:`search`."""
    while s[g.STATUS] == g.RUNNING:
        a = search(walls, keys, doors, nm, max_len, s, budget, c, depth, rng)
        g.step_inplace(walls, keys, doors, nm, s, a, max_len)
