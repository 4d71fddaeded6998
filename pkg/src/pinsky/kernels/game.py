"""Flat-array dZelda simulation kernels.

A game state is an ``int64`` vector::

    [avatar_r, avatar_c, orientation, has_key, step, status,
     kills, key_pickups, doors_opened,
     key_alive[nk], door_visited[nd], monster_r[nm], monster_c[nm]]

Dead monsters hold ``-1`` in both coordinate slots. The static part of a
level (wall mask, key and door coordinates) is passed alongside.
"""

import numpy as np

from .._jit import jit

AR, AC, ORI, HAS_KEY, STEP, STATUS, KILLS, PICKUPS, OPENED = range(9)
HDR = 9

RUNNING, WON, LOST, TIMEOUT = 0, 1, 2, 3
NORTH, SOUTH, EAST, WEST = 0, 1, 2, 3
UP, DOWN, LEFT, RIGHT, ATTACK = 0, 1, 2, 3, 4
N_ACTIONS = 5

# indexed by orientation
ORI_DR = np.array([-1, 1, 0, 0], dtype=np.int64)
ORI_DC = np.array([0, 0, 1, -1], dtype=np.int64)
# indexed by movement action
ACTION_ORI = np.array([NORTH, SOUTH, WEST, EAST], dtype=np.int64)


def state_len(nk, nd, nm):
    return HDR + nk + nd + 2 * nm


@jit
def initial_state(avatar_r, avatar_c, nk, nd, monsters):
    nm = monsters.shape[0]
    s = np.zeros(HDR + nk + nd + 2 * nm, dtype=np.int64)
    s[AR] = avatar_r
    s[AC] = avatar_c
    s[ORI] = SOUTH
    for k in range(nk):
        s[HDR + k] = 1
    m0 = HDR + nk + nd
    for m in range(nm):
        s[m0 + m] = monsters[m, 0]
        s[m0 + nm + m] = monsters[m, 1]
    return s


@jit
def _sign(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


@jit
def step_inplace(walls, keys, doors, nm, s, action, max_len):
    """Advance ``s`` by one tick. The caller guarantees ``s[STATUS] == RUNNING``."""
    nk = keys.shape[0]
    nd = doors.shape[0]
    k0 = HDR
    d0 = k0 + nk
    m0 = d0 + nd
    mc0 = m0 + nm

    # 1. avatar
    ar = s[AR]
    ac = s[AC]
    if action == ATTACK:
        tr = ar + ORI_DR[s[ORI]]
        tc = ac + ORI_DC[s[ORI]]
        for m in range(nm):
            if s[m0 + m] == tr and s[mc0 + m] == tc:
                s[m0 + m] = -1
                s[mc0 + m] = -1
                s[KILLS] += 1
                break
    else:
        ori = ACTION_ORI[action]
        s[ORI] = ori
        tr = ar + ORI_DR[ori]
        tc = ac + ORI_DC[ori]
        blocked = walls[tr, tc] != 0
        door = -1
        if not blocked:
            for d in range(nd):
                if doors[d, 0] == tr and doors[d, 1] == tc:
                    door = d
                    break
            if door >= 0 and s[HAS_KEY] == 0:
                blocked = True
        if not blocked:
            s[AR] = tr
            s[AC] = tc
            for k in range(nk):
                if s[k0 + k] == 1 and keys[k, 0] == tr and keys[k, 1] == tc:
                    s[k0 + k] = 0
                    s[HAS_KEY] = 1
                    s[PICKUPS] += 1
            if door >= 0 and s[d0 + door] == 0:
                s[d0 + door] = 1
                s[OPENED] += 1

    # 2. monsters, in index order, each one greedy step
    ar = s[AR]
    ac = s[AC]
    for m in range(nm):
        mr = s[m0 + m]
        if mr < 0:
            continue
        mc = s[mc0 + m]
        dr = ar - mr
        dc = ac - mc
        if dr == 0 and dc == 0:
            continue
        horizontal_first = abs(dc) >= abs(dr)
        for attempt in range(2):
            horizontal = horizontal_first if attempt == 0 else not horizontal_first
            if horizontal:
                if dc == 0:
                    continue
                nr = mr
                nc = mc + _sign(dc)
            else:
                if dr == 0:
                    continue
                nr = mr + _sign(dr)
                nc = mc
            if walls[nr, nc] != 0:
                continue
            occupied = False
            for o in range(nm):
                if o != m and s[m0 + o] == nr and s[mc0 + o] == nc:
                    occupied = True
                    break
            if occupied:
                continue
            s[m0 + m] = nr
            s[mc0 + m] = nc
            break

    # 3. contact
    for m in range(nm):
        if s[m0 + m] == ar and s[mc0 + m] == ac:
            s[STATUS] = LOST
            break

    # 4. win
    if s[STATUS] == RUNNING and s[HAS_KEY] == 1:
        all_doors = True
        for d in range(nd):
            if s[d0 + d] == 0:
                all_doors = False
                break
        if all_doors:
            s[STATUS] = WON

    # 5. clock
    s[STEP] += 1
    if s[STATUS] == RUNNING and s[STEP] >= max_len:
        s[STATUS] = TIMEOUT


@jit
def same_configuration(a, b):
    """Equal apart from the step counter (event counters follow from the rest)."""
    for i in range(a.shape[0]):
        if i == STEP:
            continue
        if a[i] != b[i]:
            return False
    return True


@jit
def aligned_value(s, max_len):
    frac = s[STEP] / max_len
    if s[STATUS] == WON:
        return 1.0 - frac
    return -1.0 + frac


@jit
def default_value(s):
    return float(s[KILLS] + s[PICKUPS] + s[OPENED])


@jit
def render_tiles(walls, keys, doors, nm, s, tiles):
    """Write the per-cell tile index (channel order of ``level.Tile``) into ``tiles``."""
    h = walls.shape[0]
    w = walls.shape[1]
    nk = keys.shape[0]
    nd = doors.shape[0]
    for r in range(h):
        for c in range(w):
            tiles[r, c] = 0 if walls[r, c] != 0 else 1
    for d in range(nd):
        tiles[doors[d, 0], doors[d, 1]] = 3
    for k in range(nk):
        if s[HDR + k] == 1:
            tiles[keys[k, 0], keys[k, 1]] = 2
    m0 = HDR + nk + nd
    for m in range(nm):
        if s[m0 + m] >= 0:
            tiles[s[m0 + m], s[m0 + nm + m]] = 4
    tiles[s[AR], s[AC]] = 5


# -- xorshift32 stream shared by the numba and python paths -----------------
# Plain 64-bit integer arithmetic on 32-bit values so both paths agree bit for bit.

@jit
def rng_next(state):
    x = state[0]
    x ^= (x << 13) & 0xFFFFFFFF
    x ^= x >> 17
    x ^= (x << 5) & 0xFFFFFFFF
    state[0] = x
    return x


@jit
def rng_below(state, n):
    return (rng_next(state) * n) >> 32


def rng_seed(seed) -> np.ndarray:
    """Non-zero 32-bit xorshift state derived from an arbitrary integer seed."""
    ss = np.random.SeedSequence(int(seed) & (2**63 - 1))
    x = int(ss.generate_state(1, dtype=np.uint32)[0])
    return np.array([x or 0x9E3779B9], dtype=np.int64)


@jit
def random_rollout(walls, keys, doors, nm, s, max_len, depth, rng):
    """Uniform-random actions from ``s`` (in place) for at most ``depth`` ticks."""
    d = 0
    while s[STATUS] == RUNNING and d < depth:
        step_inplace(walls, keys, doors, nm, s, rng_below(rng, N_ACTIONS), max_len)
        d += 1
