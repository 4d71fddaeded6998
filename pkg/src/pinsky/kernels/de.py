"""DE/rand/1/bin trial vector construction.

Crossover draws come from a counter-based generator: coordinate ``j`` uses
16-bit lane ``j % 4`` of ``splitmix64(key + (j // 4) * GOLDEN)``. Draws are
independent of each other, so the loop vectorises and the numpy twin
reproduces the jitted kernel bit for bit.
"""

import numpy as np

from .._jit import USE_NUMBA, jit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
LANES = 4


def cr_threshold(cr: float) -> int:
    """Lane values below this hit; 0 never hits, 65536 always does."""
    return int(round(cr * 65536.0))


@jit
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * M1
    z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


@jit
def trial_loops(target, a, b, c, f, threshold, jrand, key, out):
    n = target.shape[0]
    for j in range(n):
        x = _mix(key + np.uint64(j // LANES) * GOLDEN)
        lane = (x >> np.uint64(16 * (j % LANES))) & np.uint64(0xFFFF)
        if lane < threshold or j == jrand:
            out[j] = a[j] + f * (b[j] - c[j])
        else:
            out[j] = target[j]
    return out


def crossover_mask(n, threshold, jrand, key):
    j = np.arange(n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(key) + (j // np.uint64(LANES)) * GOLDEN
        x = (x ^ (x >> np.uint64(30))) * M1
        x = (x ^ (x >> np.uint64(27))) * M2
    x ^= x >> np.uint64(31)
    lane = (x >> (np.uint64(16) * (j % np.uint64(LANES)))) & np.uint64(0xFFFF)
    mask = lane < np.uint64(threshold)
    mask[jrand] = True
    return mask


def trial_numpy(target, a, b, c, f, threshold, jrand, key, out):
    mask = crossover_mask(target.shape[0], threshold, jrand, key)
    np.copyto(out, np.where(mask, a + f * (b - c), target))
    return out


trial = trial_loops if USE_NUMBA else trial_numpy


def make_trial(target, a, b, c, f, cr, jrand, key, out):
    """Build one trial vector from target and donors a, b, c (float32)."""
    return trial(target, a, b, c, np.float32(f), np.uint64(cr_threshold(cr)), np.int64(jrand),
                 np.uint64(key), out)
