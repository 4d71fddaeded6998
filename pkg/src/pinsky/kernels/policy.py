"""Forward pass of the dual-input conv policy and whole-episode evaluation.

Flat parameter layout (float32, C-order within each block)::

    conv1_w[F1, C, 3, 3]  conv1_b[F1]
    conv2_w[F2, F1, 3, 3] conv2_b[F2]
    fc_w[HID, F2*H*W + 4] fc_b[HID]
    out_w[A, HID]         out_b[A]

Convolutions are 3x3, stride 1, zero padded ("same"), ReLU. The conv2 map is
flattened in (F2, H, W) order and the 4-way orientation one-hot appended.
"""

import numpy as np

from .._jit import USE_NUMBA, jit
from . import game as g

N_CHANNELS = 6


def offsets(h, w, f1, f2, hid, n_actions=g.N_ACTIONS, channels=N_CHANNELS):
    sizes = [
        f1 * channels * 9, f1,
        f2 * f1 * 9, f2,
        hid * (f2 * h * w + 4), hid,
        n_actions * hid, n_actions,
    ]
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


@jit(fastmath=True)
def forward_loops(p, tiles, ori, f1, f2, hid, n_actions, h1p, col, xin, z):
    h = tiles.shape[0]
    w = tiles.shape[1]
    C = 6
    hw = h * w
    nflat = f2 * hw
    o_w1 = 0
    o_b1 = o_w1 + f1 * C * 9
    o_w2 = o_b1 + f1
    o_b2 = o_w2 + f2 * f1 * 9
    o_w3 = o_b2 + f2
    o_b3 = o_w3 + hid * (nflat + 4)
    o_w4 = o_b3 + hid
    o_b4 = o_w4 + n_actions * hid

    # conv1 on a one-hot input is a gather of kernel taps
    h1p[:] = 0.0
    for f in range(f1):
        bias = p[o_b1 + f]
        for y in range(h):
            for x in range(w):
                acc = bias
                for ky in range(3):
                    yy = y + ky - 1
                    if yy < 0 or yy >= h:
                        continue
                    for kx in range(3):
                        xx = x + kx - 1
                        if xx < 0 or xx >= w:
                            continue
                        acc += p[o_w1 + ((f * C + tiles[yy, xx]) * 3 + ky) * 3 + kx]
                h1p[f, y + 1, x + 1] = acc if acc > 0.0 else 0.0

    # conv2 as im2col @ weights
    for f in range(f1):
        for ky in range(3):
            for kx in range(3):
                r = (f * 3 + ky) * 3 + kx
                for y in range(h):
                    for x in range(w):
                        col[r, y * w + x] = h1p[f, y + ky, x + kx]
    w2 = p[o_w2:o_b2].reshape((f2, f1 * 9))
    a2 = np.dot(w2, col)
    for gi in range(f2):
        bias = p[o_b2 + gi]
        for i in range(hw):
            v = a2[gi, i] + bias
            xin[gi * hw + i] = v if v > 0.0 else 0.0
    for o in range(4):
        xin[nflat + o] = 0.0
    xin[nflat + ori] = 1.0

    w3 = p[o_w3:o_b3].reshape((hid, nflat + 4))
    a3 = np.dot(w3, xin)
    for u in range(hid):
        v = a3[u] + p[o_b3 + u]
        z[u] = v if v > 0.0 else 0.0
    w4 = p[o_w4:o_b4].reshape((n_actions, hid))
    return np.dot(w4, z) + p[o_b4:o_b4 + n_actions]


def scratch(h, w, f1, f2, hid):
    """Work buffers for :func:`forward_loops`."""
    return (
        np.empty((f1, h + 2, w + 2), dtype=np.float32),
        np.empty((f1 * 9, h * w), dtype=np.float32),
        np.empty(f2 * h * w + 4, dtype=np.float32),
        np.empty(hid, dtype=np.float32),
    )


def forward_numpy(p, tiles, ori, f1, f2, hid, n_actions, h1p=None, col=None, xin=None, z=None):
    """Vectorised twin of :func:`forward_loops` (scratch arguments ignored)."""
    h, w = tiles.shape
    C = N_CHANNELS
    o = offsets(h, w, f1, f2, hid, n_actions)
    w1 = p[o[0]:o[1]].reshape(f1, C, 3, 3)
    b1 = p[o[1]:o[2]]
    w2 = p[o[2]:o[3]].reshape(f2, f1, 3, 3)
    b2 = p[o[3]:o[4]]
    w3 = p[o[4]:o[5]].reshape(hid, f2 * h * w + 4)
    b3 = p[o[5]:o[6]]
    w4 = p[o[6]:o[7]].reshape(n_actions, hid)
    b4 = p[o[7]:o[8]]

    onehot = np.zeros((C, h + 2, w + 2), dtype=np.float32)
    rr, cc = np.indices((h, w))
    onehot[tiles.astype(np.int64), rr + 1, cc + 1] = 1.0
    win = np.lib.stride_tricks.sliding_window_view(onehot, (3, 3), axis=(1, 2))
    a1 = np.einsum("cyxij,fcij->fyx", win, w1) + b1[:, None, None]
    a1 = np.maximum(a1, 0.0)
    a1p = np.pad(a1, ((0, 0), (1, 1), (1, 1)))
    win2 = np.lib.stride_tricks.sliding_window_view(a1p, (3, 3), axis=(1, 2))
    a2 = np.einsum("cyxij,fcij->fyx", win2, w2) + b2[:, None, None]
    a2 = np.maximum(a2, 0.0).reshape(-1)
    hidden = w3[:, : a2.size] @ a2 + w3[:, a2.size + ori] + b3
    hidden = np.maximum(hidden, 0.0)
    return (w4 @ hidden + b4).astype(np.float32)


forward = forward_loops if USE_NUMBA else forward_numpy


@jit
def argmax_first(v):
    best = 0
    for i in range(1, v.shape[0]):
        if v[i] > v[best]:
            best = i
    return best


@jit
def policy_episode(walls, keys, doors, nm, s, p, f1, f2, hid, max_len, detect_cycles):
    """Play the greedy policy from ``s`` (in place) until the episode ends.

    The policy only sees the layout, so a repeated configuration means the
    episode loops forever; with ``detect_cycles`` it is fast-forwarded to
    the timeout it would reach anyway. Returns the number of network calls.
    """
    h = walls.shape[0]
    w = walls.shape[1]
    n_actions = 5
    tiles = np.empty((h, w), dtype=np.int8)
    h1p = np.empty((f1, h + 2, w + 2), dtype=np.float32)
    col = np.empty((f1 * 9, h * w), dtype=np.float32)
    xin = np.empty(f2 * h * w + 4, dtype=np.float32)
    z = np.empty(hid, dtype=np.float32)
    n = s.shape[0]
    history = np.empty((max_len + 1, n), dtype=np.int64)
    n_hist = 0
    calls = 0
    while s[g.STATUS] == g.RUNNING:
        if detect_cycles:
            for i in range(n_hist):
                if g.same_configuration(history[i], s):
                    s[g.STEP] = max_len
                    s[g.STATUS] = g.TIMEOUT
                    return calls
            history[n_hist, :] = s
            n_hist += 1
        g.render_tiles(walls, keys, doors, nm, s, tiles)
        scores = forward(p, tiles, s[g.ORI], f1, f2, hid, n_actions, h1p, col, xin, z)
        calls += 1
        g.step_inplace(walls, keys, doors, nm, s, argmax_first(scores), max_len)
    return calls
