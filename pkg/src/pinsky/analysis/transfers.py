"""Transfer accounting, solve statistics and the rank test over a run log."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import mannwhitneyu


def n_loops(log) -> int:
    """Loops covered by the log: the last ``t`` seen plus one."""
    ts = [e["t"] for e in log.events]
    return (max(ts) + 1) if ts else 0


@dataclass
class TransferCurves:
    species: list       # species ids, discovery order
    total: np.ndarray   # (T,)
    incoming: np.ndarray  # (S, T)
    outgoing: np.ndarray  # (S, T)

    @property
    def net(self) -> np.ndarray:
        return self.incoming - self.outgoing


def transfer_curves(log, assignment: dict, species: list | None = None, loops: int | None = None):
    species = list(species) if species is not None else sorted(set(assignment.values()))
    index = {s: i for i, s in enumerate(species)}
    T = n_loops(log) if loops is None else loops
    total = np.zeros(T, dtype=np.int64)
    inc = np.zeros((len(species), T), dtype=np.int64)
    out = np.zeros((len(species), T), dtype=np.int64)
    for e in log.of_type("transfer"):
        t = e["t"]
        total[t] += 1
        inc[index[assignment[e["to_env"]]], t] += 1
        out[index[assignment[e["from_env"]]], t] += 1
    return TransferCurves(species, total, inc, out)


@dataclass
class TransferMatrix:
    species: list
    matrix: np.ndarray  # [from species, to species]
    normalized: bool
    total: int

    @property
    def intra_fraction(self) -> float | None:
        if self.total == 0:
            return None
        m = self.matrix if self.normalized else self.matrix / self.total
        return float(np.trace(m))


def transfer_matrix(log, assignment: dict, species: list | None = None, normalize: bool = True):
    species = list(species) if species is not None else sorted(set(assignment.values()))
    index = {s: i for i, s in enumerate(species)}
    counts = np.zeros((len(species), len(species)), dtype=np.int64)
    for e in log.of_type("transfer"):
        counts[index[assignment[e["from_env"]]], index[assignment[e["to_env"]]]] += 1
    total = int(counts.sum())
    if normalize and total == 0:
        warnings.warn("no transfers in the log; returning raw counts", RuntimeWarning, stacklevel=2)
        return TransferMatrix(species, counts, False, 0)
    if normalize:
        return TransferMatrix(species, counts / total, True, total)
    return TransferMatrix(species, counts, False, total)


def _ratio(num: int, den: int):
    return Fraction(num, den) if den else None


def conditional_solve_probability(log, assignment: dict) -> dict:
    """Direct counts over viable levels (every created pair; unfiltered in runs without the gate).

    IST(e): level e received at least one transfer from a level of another species.
    Probabilities are exact Fractions, or None when the conditioning set is empty.
    """
    viable = [e["env_id"] for e in log.of_type("pair_created")]
    ist = {e["to_env"] for e in log.of_type("transfer")
           if assignment[e["from_env"]] != assignment[e["to_env"]]}
    solved = {e["env_id"] for e in log.of_type("solve")}
    n = len(viable)
    n_ist = sum(1 for v in viable if v in ist)
    n_solved = sum(1 for v in viable if v in solved)
    n_both = sum(1 for v in viable if v in ist and v in solved)
    return {
        "p_solved_given_ist": _ratio(n_both, n_ist),
        "p_ist_given_solved": _ratio(n_both, n_solved),
        "p_solved": _ratio(n_solved, n),
        "p_ist": _ratio(n_ist, n),
        "counts": {"viable": n, "ist": n_ist, "solved": n_solved, "solved_and_ist": n_both},
        "gated": bool(log.config.get("mc_enabled", True)),
    }


def rank_test(a, b) -> dict:
    """Two-sided Mann-Whitney U (normal approximation, tie and continuity corrected)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("rank_test needs two non-empty samples")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        u = a.size * b.size / 2.0
        return {"U": u, "U_b": u, "p_value": 1.0, "n_a": int(a.size), "n_b": int(b.size)}
    res = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
    u_a = float(res.statistic)
    return {"U": u_a, "U_b": a.size * b.size - u_a, "p_value": float(res.pvalue),
            "n_a": int(a.size), "n_b": int(b.size)}
