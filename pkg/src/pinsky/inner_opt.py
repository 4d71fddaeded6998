"""Differential Evolution over policy weights (DE/rand/1/bin, greedy selection)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import PolicyNet, evaluate_policy
from .game import EpisodeResult, RewardKind
from .kernels import de as kde


@dataclass(frozen=True)
class DeConfig:
    pop_size: int = 50
    F: float = 0.5
    CR: float = 0.7
    evals_per_step: int = 1500
    init_sigma: float = 0.1

    def __post_init__(self):
        if self.pop_size < 1:
            raise ValueError("pop_size must be positive")
        if not 0.0 < self.F <= 2.0:
            raise ValueError(f"F must lie in (0, 2], got {self.F}")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError(f"CR must lie in [0, 1], got {self.CR}")
        if self.evals_per_step < self.pop_size:
            raise ValueError("evals_per_step must be at least pop_size")
        if self.init_sigma < 0:
            raise ValueError("init_sigma must be non-negative")

    @property
    def generations(self) -> int:
        return self.evals_per_step // self.pop_size


@dataclass
class DePopulation:
    members: np.ndarray  # (pop_size, n_params) float32
    fitness: np.ndarray  # (pop_size,) float64
    evals: int = 0

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.fitness))

    @property
    def best(self) -> tuple[np.ndarray, float]:
        i = self.best_index
        return self.members[i], float(self.fitness[i])


class LevelFitness:
    """Reward of a parameter vector on one level (one deterministic rollout)."""

    def __init__(self, level, net: PolicyNet, kind=RewardKind.ALIGNED, max_game_len: int = 500):
        self.level = level
        self.net = net
        self.kind = RewardKind(kind)
        self.max_game_len = max_game_len
        self.calls = 0

    def result(self, params) -> EpisodeResult:
        self.calls += 1
        return evaluate_policy(self.level, params, self.net, self.kind, self.max_game_len)

    def __call__(self, params) -> float:
        return self.result(params).reward


def de_init(center, cfg: DeConfig, seed, fitness) -> DePopulation:
    """Member 0 is ``center`` itself; the rest are Gaussian perturbations of it."""
    center = np.ascontiguousarray(center, dtype=np.float32)
    rng = np.random.default_rng(seed)
    members = np.empty((cfg.pop_size, center.size), dtype=np.float32)
    members[0] = center
    for i in range(1, cfg.pop_size):
        noise = rng.standard_normal(center.size, dtype=np.float32) * np.float32(cfg.init_sigma)
        members[i] = center + noise
    fit = np.array([fitness(m) for m in members], dtype=np.float64)
    return DePopulation(members, fit, cfg.pop_size)


def de_step(pop: DePopulation, fitness, cfg: DeConfig, seed) -> DePopulation:
    """One synchronous DE/rand/1/bin generation; a trial wins ties against its target."""
    n, dim = pop.members.shape
    if n < 4:
        raise ValueError("DE/rand/1 needs a population of at least 4")
    rng = np.random.default_rng(seed)
    members = pop.members.copy()
    fit = pop.fitness.copy()
    trial = np.empty(dim, dtype=np.float32)
    for i in range(n):
        others = [k for k in range(n) if k != i]
        a, b, c = rng.choice(others, size=3, replace=False)
        jrand = int(rng.integers(dim))
        kde.make_trial(pop.members[i], pop.members[a], pop.members[b], pop.members[c],
                       cfg.F, cfg.CR, jrand, int(rng.integers(2**63 - 1)), trial)
        f_trial = fitness(trial)
        if f_trial >= pop.fitness[i]:
            members[i] = trial
            fit[i] = f_trial
    return DePopulation(members, fit, pop.evals + n)


@dataclass(frozen=True)
class OptResult:
    params: np.ndarray
    fitness: float
    result: EpisodeResult | None
    evals: int
    generations: int


def optimize(center, fitness, cfg: DeConfig, seed) -> tuple[DePopulation, int]:
    """Warm-started DE for ``cfg.generations`` generations on an arbitrary fitness."""
    if isinstance(seed, np.random.SeedSequence):
        # fresh copy so spawning never depends on earlier use of the caller's object
        ss = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    else:
        ss = np.random.SeedSequence(seed)
    init_seed, *gen_seeds = ss.spawn(cfg.generations + 1)
    pop = de_init(center, cfg, init_seed, fitness)
    for s in gen_seeds:
        pop = de_step(pop, fitness, cfg, s)
    return pop, cfg.generations


def optimize_pair(level, params, net: PolicyNet, cfg: DeConfig, seed,
                  kind=RewardKind.ALIGNED, max_game_len: int = 500) -> OptResult:
    """Optimize an incumbent on its level, then re-evaluate the population best."""
    fitness = LevelFitness(level, net, kind, max_game_len)
    pop, gens = optimize(net.check(params), fitness, cfg, seed)
    best, _ = pop.best
    best = best.copy()
    result = evaluate_policy(level, best, net, kind, max_game_len)
    return OptResult(best, result.reward, result, pop.evals, gens)
