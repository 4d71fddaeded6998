import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinsky.agents import PolicyNet, evaluate_policy
from pinsky.game import RewardKind
from pinsky.inner_opt import DeConfig, DePopulation, de_init, de_step, optimize, optimize_pair
from pinsky.kernels import de as kde

DESK = DeConfig(pop_size=16, evals_per_step=160)


def sphere(x):
    return -float(np.sum(np.asarray(x, dtype=np.float64) ** 2))


def test_config_validation():
    for bad in (dict(F=0.0), dict(F=2.5), dict(CR=1.1), dict(pop_size=10, evals_per_step=5),
                dict(init_sigma=-1.0)):
        with pytest.raises(ValueError):
            DeConfig(**bad)
    assert DeConfig(pop_size=16, evals_per_step=16).generations == 1
    assert DeConfig().generations == 30


def test_init_member_zero_is_center_and_zero_sigma_copies():
    center = np.random.default_rng(0).standard_normal(40).astype(np.float32)
    pop = de_init(center, DeConfig(pop_size=8, evals_per_step=8, init_sigma=0.0), 1, sphere)
    assert np.array_equal(pop.members, np.tile(center, (8, 1)))
    pop = de_init(center, DeConfig(pop_size=8, evals_per_step=8), 1, sphere)
    assert pop.members[0].tobytes() == center.tobytes()
    assert not np.array_equal(pop.members[1], center)
    assert pop.evals == 8 and pop.fitness[3] == sphere(pop.members[3])


def test_init_is_seeded():
    center = np.zeros(10, np.float32)
    cfg = DeConfig(pop_size=6, evals_per_step=6)
    assert np.array_equal(de_init(center, cfg, 5, sphere).members, de_init(center, cfg, 5, sphere).members)


def test_step_needs_four_members():
    pop = de_init(np.zeros(3, np.float32), DeConfig(pop_size=3, evals_per_step=3), 0, sphere)
    with pytest.raises(ValueError):
        de_step(pop, sphere, DeConfig(pop_size=3, evals_per_step=3), 0)


def test_cr_zero_changes_exactly_the_forced_coordinate():
    rng = np.random.default_rng(0)
    target, a, b, c = (rng.standard_normal(64).astype(np.float32) for _ in range(4))
    out = np.empty_like(target)
    kde.make_trial(target, a, b, c, 0.5, 0.0, 17, 99, out)
    changed = np.flatnonzero(out != target)
    assert changed.tolist() == [17]
    assert out[17] == np.float32(a[17] + np.float32(0.5) * (b[17] - c[17]))
    kde.make_trial(target, a, b, c, 0.5, 1.0, 17, 99, out)
    assert np.array_equal(out, a + np.float32(0.5) * (b - c))


def test_crossover_rate_matches_cr():
    mask = kde.crossover_mask(200_000, kde.cr_threshold(0.7), 0, 12345)
    assert abs(mask.mean() - 0.7) < 4 * np.sqrt(0.21 / 200_000) + 1e-5


def test_step_ties_favor_trial():
    # flat fitness: every trial is accepted
    flat = lambda x: 0.0  # noqa: E731
    pop = de_init(np.zeros(6, np.float32), DeConfig(pop_size=5, evals_per_step=5), 0, flat)
    nxt = de_step(pop, flat, DeConfig(pop_size=5, evals_per_step=5), 1)
    assert all(not np.array_equal(nxt.members[i], pop.members[i]) for i in range(5))
    assert nxt.evals == 10


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_best_fitness_is_monotone(seed):
    cfg = DeConfig(pop_size=6, evals_per_step=60, init_sigma=1.0)
    pop = de_init(np.full(4, 2.0, np.float32), cfg, seed, sphere)
    best = pop.best[1]
    for g in range(5):
        pop = de_step(pop, sphere, cfg, [seed, g])
        assert pop.best[1] >= best
        best = pop.best[1]
        assert np.all(pop.fitness == [sphere(m) for m in pop.members])


def test_generation_accounting():
    calls = []

    def f(x):
        calls.append(1)
        return sphere(x)

    pop, gens = optimize(np.ones(3, np.float32), f, DeConfig(pop_size=5, evals_per_step=23), 0)
    assert gens == 4 and pop.evals == 25 == len(calls)
    pop, gens = optimize(np.ones(3, np.float32), f, DeConfig(pop_size=5, evals_per_step=5), 0)
    assert gens == 1 and pop.evals == 10


def test_seed_sequence_objects_are_not_consumed():
    ss = np.random.SeedSequence([1, 2, 3])
    cfg = DeConfig(pop_size=5, evals_per_step=10, init_sigma=1.0)
    a, _ = optimize(np.ones(3, np.float32), sphere, cfg, ss)
    b, _ = optimize(np.ones(3, np.float32), sphere, cfg, ss)
    assert np.array_equal(a.members, b.members)


def test_de_beats_random_search_on_sphere():
    cfg = DeConfig(pop_size=20, evals_per_step=400, init_sigma=3.0)
    wins = 0
    for seed in range(10):
        rng = np.random.default_rng([7, seed])
        center = rng.uniform(-5, 5, 5).astype(np.float32)
        pop, _ = optimize(center, sphere, cfg, seed)
        samples = rng.uniform(-5, 5, (pop.evals, 5))
        random_best = max(sphere(x) for x in samples)
        wins += pop.best[1] > random_best
    assert wins >= 9


def test_optimize_pair_reevaluates_and_reproduces(trivial_level):
    net = PolicyNet.for_level(trivial_level)
    params = net.init_params(0)
    r = optimize_pair(trivial_level, params, net, DESK, 3, RewardKind.DEFAULT, 50)
    again = evaluate_policy(trivial_level, r.params, net, RewardKind.DEFAULT, 50)
    assert r.fitness == again.reward and r.result == again
    assert r.evals == 16 * 11 and r.generations == 10
    r2 = optimize_pair(trivial_level, params, net, DESK, 3, RewardKind.DEFAULT, 50)
    assert r2.params.tobytes() == r.params.tobytes()


def test_trivial_level_is_learned_within_desk_budget(trivial_level):
    net = PolicyNet.for_level(trivial_level)
    wins = sum(optimize_pair(trivial_level, net.init_params(s), net, DESK, s, RewardKind.ALIGNED,
                             200).result.win for s in range(10))
    assert wins >= 8


def test_population_best_property():
    pop = DePopulation(np.eye(3, dtype=np.float32), np.array([0.1, 0.5, 0.2]))
    assert pop.best_index == 1 and pop.best[1] == 0.5
