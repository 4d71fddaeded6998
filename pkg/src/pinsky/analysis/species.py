"""Cosine speciation: an archive of representative levels scanned in creation order."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_GAMMA = 0.85
GAMMA_RANGE = (0.5, 0.99)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return v / n


def cosine_similarity(a, b) -> float:
    return float(np.dot(unit(a), unit(b)))


@dataclass
class SpeciesArchive:
    gamma: float
    representatives: list = field(default_factory=list)  # (env_id, unit vector), discovery order

    @property
    def ids(self) -> list[int]:
        return [rid for rid, _ in self.representatives]

    def matrix(self) -> np.ndarray:
        return np.array([u for _, u in self.representatives])

    def __len__(self):
        return len(self.representatives)


def check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return float(gamma)


def speciate(items, gamma: float = DEFAULT_GAMMA) -> SpeciesArchive:
    """``items`` is an ordered iterable of (env_id, vector).

    A vector founds a species when its similarity to every existing
    representative is below ``gamma``.
    """
    archive = SpeciesArchive(check_gamma(gamma))
    for env_id, v in items:
        u = unit(v)
        if not archive.representatives or np.max(archive.matrix() @ u) < gamma:
            archive.representatives.append((env_id, u))
    if not archive.representatives:
        raise ValueError("speciate needs at least one level")
    return archive


def classify(items, archive: SpeciesArchive) -> dict:
    """env_id -> species id (the representative's env_id) of maximal similarity; ties go to the earliest."""
    if not len(archive):
        raise ValueError("empty species archive")
    A = archive.matrix()
    ids = archive.ids
    return {env_id: ids[int(np.argmax(A @ unit(v)))] for env_id, v in items}


def support(assignment: dict, archive: SpeciesArchive) -> dict:
    """Species id -> number of levels, in discovery order."""
    out = {sid: 0 for sid in archive.ids}
    for sid in assignment.values():
        out[sid] += 1
    return out
