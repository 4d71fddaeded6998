"""The outer coevolutionary loop over agent/level pairs."""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import level as lv
from .agents import BudgetMode, MctsBudget, PolicyNet, evaluate_policy, save_params
from .config import ConfigError, RunConfig
from .evolution import MutationConfig, reproduce
from .game import EpisodeResult, RewardKind
from .inner_opt import DeConfig, optimize_pair
from .runlog import RunLog, RunLogWriter

# purpose tags mixed into per-(seed, t, env_id) seed sequences
_INIT, _OPT, _REPRODUCE = 0, 1, 2
LOG_NAME = "runlog.jsonl"


@dataclass
class PairRecord:
    env_id: int
    parent_id: int | None
    level: lv.Level
    agent: np.ndarray
    born_at: int
    solved_at: int | None = None
    first_solver_origin: int | None = None
    active: bool = True


@dataclass
class MetaPopulation:
    pairs: dict = field(default_factory=dict)  # env_id -> PairRecord, creation order
    active_ids: list = field(default_factory=list)

    def add(self, level: lv.Level, agent, parent_id, t) -> PairRecord:
        env_id = len(self.pairs)
        rec = PairRecord(env_id, parent_id, level, np.array(agent, dtype=np.float32), t)
        self.pairs[env_id] = rec
        self.active_ids.append(env_id)
        return rec

    def active(self) -> list[PairRecord]:
        return [self.pairs[i] for i in self.active_ids]


@dataclass(frozen=True)
class TransferEvent:
    from_env: int
    to_env: int
    t: int
    challenger_score: float
    incumbent_score: float


def cull_oldest(pop: MetaPopulation, max_envs: int) -> list[int]:
    """Deactivate the smallest active env_ids until at most ``max_envs`` remain."""
    culled = []
    while len(pop.active_ids) > max_envs:
        oldest = min(pop.active_ids)
        pop.active_ids.remove(oldest)
        pop.pairs[oldest].active = False
        culled.append(oldest)
    return culled


def transfers_from_matrix(E, ids, t) -> list[TransferEvent]:
    """Snapshot argmax per row. ``E[i][j]`` is agent ``ids[j]`` on level ``ids[i]``.

    The incumbent keeps its level unless some challenger is strictly better;
    among equally good challengers the lowest env_id wins.
    """
    E = np.asarray(E, dtype=np.float64)
    order = np.argsort(ids, kind="stable")
    events = []
    for i, to_env in enumerate(ids):
        best_j, best = i, E[i, i]
        for j in order:
            if j != i and E[i, j] > best:
                best_j, best = j, E[i, j]
        if best_j != i:
            events.append(TransferEvent(ids[best_j], to_env, t, float(best), float(E[i, i])))
    return events


def tournament_update(pop: MetaPopulation, t: int, evaluate):
    """Evaluate every active agent on every active level and copy strict improvements in.

    ``evaluate(level, params) -> EpisodeResult``. Returns ``(events, results)``
    where ``results[i][j]`` is the episode of agent ``j`` on level ``i`` (active order).
    """
    pairs = pop.active()
    ids = [p.env_id for p in pairs]
    results = [[evaluate(pi.level, pj.agent) for pj in pairs] for pi in pairs]
    E = [[r.reward for r in row] for row in results]
    events = transfers_from_matrix(E, ids, t)
    snapshot = {p.env_id: p.agent for p in pairs}
    for ev in events:
        pop.pairs[ev.to_env].agent = snapshot[ev.from_env].copy()
    return events, results


def detect_solve(pair: PairRecord, result: EpisodeResult, t: int, origin_env: int) -> bool:
    """Latch the first win on a pair's level; True when this call recorded it."""
    if result.win and pair.solved_at is None:
        pair.solved_at = t
        pair.first_solver_origin = origin_env
        return True
    return False


def _seed(seed: int, t: int, env_id: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, t, env_id, purpose])


def _opt_task(args):
    level, params, net, de_cfg, seed_seq, kind, max_game_len = args
    r = optimize_pair(level, params, net, de_cfg, seed_seq, kind, max_game_len)
    return r.params, r.result, r.evals, r.generations


def seed_level_for(cfg: RunConfig) -> lv.Level:
    if cfg.seed_level:
        path = Path(cfg.seed_level)
        if not path.is_file():
            raise ConfigError(f"seed_level: file not found: {path}")
        level = lv.load(path)
    else:
        level = lv.load(lv.bundled(cfg.variant))
    if level.variant.value != cfg.variant:
        raise ConfigError(f"seed_level: level is {level.variant.value}, config asks for {cfg.variant}")
    if (level.height, level.width) != (cfg.height, cfg.width):
        raise ConfigError(f"height/width: seed level is {level.height}x{level.width}, "
                          f"config asks for {cfg.height}x{cfg.width}")
    return level


@dataclass
class RunResult:
    log: RunLog
    pop: MetaPopulation
    out_dir: Path

    @property
    def log_path(self) -> Path:
        return self.out_dir / LOG_NAME


def run(cfg: RunConfig, seed: int | None = None, out_dir=None, jobs: int = 1, progress=None) -> RunResult:
    """Execute the outer loop and write ``runlog.jsonl`` plus solver agents into ``out_dir``.

    Per-loop order: reproduce/gate/cull when ``t % mutation_timer == 0``, optimize
    and re-evaluate every active pair, tournament when ``t % transfer_timer == 0``.
    """
    seed = cfg.seed if seed is None else seed
    cfg = cfg.replace(seed=seed)
    out_dir = Path(out_dir) if out_dir is not None else cfg.resolved_out_dir()
    seed_level = seed_level_for(cfg)
    net = PolicyNet(cfg.height, cfg.width, cfg.conv1, cfg.conv2, cfg.hidden)
    kind = RewardKind.ALIGNED if cfg.aligned_reward else RewardKind.DEFAULT
    de_cfg = DeConfig(cfg.pop_size, cfg.de_f, cfg.de_cr, cfg.n_games, cfg.de_init_sigma)
    mut_cfg = MutationConfig(cfg.mutation_rate, cfg.add_bias, max_children=cfg.max_children,
                             mean_edits=cfg.mean_edits)
    budget = MctsBudget(BudgetMode(cfg.mcts_budget_mode), cfg.mcts_budget)
    mgl = cfg.max_game_len
    (out_dir / "agents").mkdir(parents=True, exist_ok=True)

    def evaluate(level, params):
        return evaluate_policy(level, params, net, kind, mgl)

    pop = MetaPopulation()
    log = RunLogWriter(out_dir / LOG_NAME, cfg.to_dict(), seed)
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None

    def solved(pair, result, t, origin, source, agent):
        if detect_solve(pair, result, t, origin):
            rel = f"agents/solve_env{pair.env_id}.bin"
            blob = save_params(out_dir / rel, agent, net)
            log.emit("solve", t, env_id=pair.env_id, origin=origin, source=source,
                     reward=result.reward, n_steps=result.n_steps, agent=rel,
                     agent_sha256=hashlib.sha256(blob).hexdigest())

    try:
        root = pop.add(seed_level, net.init_params(_seed(seed, 0, 0, _INIT)), None, 0)
        log.emit("pair_created", 0, env_id=root.env_id, parent_id=None, agent_from=None,
                 level=lv.serialize(seed_level))
        for t in range(cfg.num_poet_loops):
            if t % cfg.mutation_timer == 0:
                candidates = []
                reproduce(pop.active(), mut_cfg, cfg.max_children,
                                 seed=_seed(seed, t, 0, _REPRODUCE).generate_state(2).tolist(),
                                 random_trials=cfg.random_trials, mcts_trials=cfg.mcts_trials,
                                 budget=budget, max_game_len=mgl, gate=cfg.mc_enabled, log=candidates)
                for cand in candidates:
                    env_id = None
                    if cand.accepted:
                        parent = pop.pairs[cand.parent_id]
                        env_id = pop.add(cand.level, parent.agent, parent.env_id, t).env_id
                    if cand.verdict is not None:
                        log.emit("mc_result", t, env_id=env_id, parent_id=cand.parent_id,
                                 verdict=cand.verdict.verdict.value, evidence=cand.verdict.evidence(),
                                 level=lv.serialize(cand.level))
                    if env_id is not None:
                        log.emit("pair_created", t, env_id=env_id, parent_id=cand.parent_id,
                                 agent_from=cand.parent_id, level=lv.serialize(cand.level))
                for env_id in cull_oldest(pop, cfg.max_envs):
                    log.emit("cull", t, env_id=env_id)

            pairs = pop.active()
            tasks = [(p.level, p.agent, net, de_cfg, _seed(seed, t, p.env_id, _OPT), kind, mgl)
                     for p in pairs]
            outs = pool.map(_opt_task, tasks) if pool else map(_opt_task, tasks)
            for p, (params, result, evals, gens) in zip(pairs, outs):
                p.agent = params
                log.emit("opt_summary", t, env_id=p.env_id, best_fitness=result.reward, evals=evals,
                         generations=gens, status=result.final_status.name.lower(),
                         n_steps=result.n_steps)
                solved(p, result, t, p.env_id, "reeval", p.agent)

            if t % cfg.transfer_timer == 0 and len(pairs) > 1:
                snapshot = [p.agent for p in pairs]
                events, results = tournament_update(pop, t, evaluate)
                for i, pi in enumerate(pairs):
                    # incumbent first, then challengers by env_id
                    for j in [i] + sorted((k for k in range(len(pairs)) if k != i),
                                          key=lambda k: pairs[k].env_id):
                        if results[i][j].win:
                            solved(pi, results[i][j], t, pairs[j].env_id, "tournament", snapshot[j])
                            break
                for ev in events:
                    log.emit("transfer", t, env_id=ev.to_env, from_env=ev.from_env, to_env=ev.to_env,
                             challenger_score=ev.challenger_score, incumbent_score=ev.incumbent_score)
            log.emit("loop_tick", t, active=list(pop.active_ids))
            if progress is not None:
                progress(t, pop)
    finally:
        log.close()
        if pool is not None:
            pool.shutdown()
    return RunResult(log.as_log(), pop, out_dir)
