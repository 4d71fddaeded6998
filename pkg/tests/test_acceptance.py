"""Acceptance criteria 1-10, each checked at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and when this file is run as a script.
Criteria 5 and 8 execute full desk-scale runs and take a while.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from pinsky import level as lv
from pinsky.ablation import ablation, format_table, run_name
from pinsky.agents import MctsBudget, PolicyNet
from pinsky.analysis import (analyse, classify, conditional_solve_probability, embed_level,
                             export_tree, speciate, summarise, transfer_curves, transfer_matrix)
from pinsky.cli import main as cli_main
from pinsky.config import RunConfig, preset_values
from pinsky.evolution import Verdict, mc_gate
from pinsky.game import RewardKind
from pinsky.inner_opt import DeConfig, optimize, optimize_pair
from pinsky.pathfinding import PathQuery, astar, bfs_oracle
from pinsky.runlog import read_log

from conftest import make
from synthetic import CULLED, EXPECTED, SOLVED, SPECIES, TRANSFERS, synthetic_log
from test_analysis import parse_dot, rescan, transfer_log
from test_evolution import SEALED, VIABLE

RESULTS = {}
GATED = Path(__file__).parent / "data" / "gated_levels.txt"
DESK_PRESET = "desk,singledoor-aligned"
ABLATION_SEEDS = range(5)


def record(n, name, ok, detail):
    RESULTS[n] = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(RESULTS[n])
    return ok


def load_gated():
    blocks = GATED.read_text().split("# gate_seed=")[1:]
    out = []
    for b in blocks:
        head, text = b.split("\n", 1)
        out.append((int(head), lv.parse(text.strip() + "\n")))
    return out


def grid_distances(grid):
    """All-pairs unweighted shortest paths on the open cells via scipy's graph routines."""
    h, w = grid.shape
    idx = np.arange(h * w).reshape(h, w)
    rows, cols = [], []
    for dr, dc in ((0, 1), (1, 0)):
        a = ~grid[: h - dr, : w - dc] & ~grid[dr:, dc:]
        rows.append(idx[: h - dr, : w - dc][a])
        cols.append(idx[dr:, dc:][a])
    r, c = np.concatenate(rows), np.concatenate(cols)
    g = coo_matrix((np.ones(r.size), (r, c)), shape=(h * w, h * w))
    return shortest_path(g, directed=False, unweighted=True)


# -- 1 ----------------------------------------------------------------------------

def test_criterion_1_pathfinding_oracle():
    levels = load_gated()
    start = time.perf_counter()
    n_pairs = mismatches = 0
    for _, level in levels:
        grid = level.wall_mask()
        points = [level.avatar, *level.keys, *level.doors]
        for s in points:
            for g in points:
                q = PathQuery(grid, s, g)
                n_pairs += 1
                mismatches += astar(q).cost != bfs_oracle(q).cost
    elapsed = time.perf_counter() - start
    # second, independent oracle for the same pairs (not timed)
    for _, level in levels:
        grid = level.wall_mask()
        d = grid_distances(grid)
        points = [level.avatar, *level.keys, *level.doors]
        for s in points:
            for g in points:
                ref = d[s[0] * level.width + s[1], g[0] * level.width + g[1]]
                cost = astar(PathQuery(grid, s, g)).cost
                mismatches += (cost is None) != np.isinf(ref) or (cost is not None and cost != ref)
    # the stored levels really pass the gate
    regated = all(mc_gate(level, max_game_len=200, seed=gs).verdict is Verdict.VIABLE
                  for gs, level in levels[:3])
    ok = len(levels) == 200 and mismatches == 0 and elapsed < 10.0 and regated
    assert record(1, "A* = BFS on gated levels",
                  ok, f"{len(levels)} levels, {n_pairs} pairs, {mismatches} mismatches, "
                      f"{elapsed:.2f}s (< 10s), gate re-check {'ok' if regated else 'failed'}")


# -- 2 ----------------------------------------------------------------------------

def test_criterion_2_embedding(reference_level):
    e = embed_level(reference_level)
    assert record(2, "reference layout embedding", e.values == (2, 3, 3, 6, 2, 16) and not e.unreachable,
                  f"got {e.values}, expected (2, 3, 3, 6, 2, 16)")


# -- 3 ----------------------------------------------------------------------------

def test_criterion_3_speciation():
    rng = np.random.default_rng(3)
    failures = []
    for k in range(100):
        n = int(rng.integers(5, 60))
        centers = rng.integers(0, 12, (int(rng.integers(1, 6)), 6))
        vecs = np.clip(centers[rng.integers(len(centers), size=n)] + rng.integers(-2, 3, (n, 6)), 0, None)
        vecs[vecs.sum(axis=1) == 0, 0] = 1
        items = [(i, tuple(int(x) for x in v)) for i, v in enumerate(vecs)]
        counts = []
        for gamma in (0.6, 0.75, 0.85, 0.9):
            arch = speciate(items, gamma)
            counts.append(len(arch))
            A = arch.matrix()
            sims = A @ A.T
            if np.any(sims[~np.eye(len(arch), dtype=bool)] >= gamma):
                failures.append((k, gamma, "representatives too similar"))
            assignment = classify(items, arch)
            for env_id, v in items:
                u = np.asarray(v, float) / np.linalg.norm(v)
                sims_u = A @ u
                if sims_u[arch.ids.index(assignment[env_id])] != sims_u.max():
                    failures.append((k, gamma, "argmax"))
            if arch.ids != rescan(items, gamma):
                failures.append((k, gamma, "rescan"))
        if counts != sorted(counts):
            failures.append((k, "monotone"))
    assert record(3, "speciation properties", not failures,
                  f"100 sets x 4 gammas, {len(failures)} violations")


# -- 5 (shared desk runs) -----------------------------------------------------------

@pytest.fixture(scope="module")
def desk_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("desk")


@pytest.fixture(scope="module")
def determinism(desk_dir):
    cfg = RunConfig(**preset_values(DESK_PRESET), seed=0)
    first = desk_dir / "ablation" / run_name(cfg)
    second = desk_dir / "repeat"
    times = []
    for out in (first, second):
        t0 = time.perf_counter()
        code = cli_main(["run", "--preset", DESK_PRESET, "--seed", "0", "--out", str(out), "--quiet"])
        times.append(time.perf_counter() - t0)
        assert code == 0
    return first / "runlog.jsonl", second / "runlog.jsonl", times


def test_criterion_5_determinism(determinism):
    a, b, times = determinism
    same = a.read_bytes() == b.read_bytes()
    ok = same and max(times) < 15 * 60
    assert record(5, "end-to-end determinism", ok,
                  f"byte-identical={same}, run times {times[0]:.0f}s / {times[1]:.0f}s (< 900s), "
                  f"{len(a.read_bytes().splitlines())} log lines")


# -- 4 ----------------------------------------------------------------------------

def accounting_violations(log):
    pairs = [e["env_id"] for e in log.of_type("pair_created")]
    if log.of_type("transfer") and any("level" in e and e["level"] != "w" for e in log.of_type("pair_created")):
        assignment = analyse(log).assignment
    else:
        assignment = {i: i % 3 for i in pairs}
    bad = []
    c = transfer_curves(log, assignment)
    n_transfers = len(log.of_type("transfer"))
    if not (np.array_equal(c.incoming.sum(0), c.total) and np.array_equal(c.outgoing.sum(0), c.total)
            and c.total.sum() == n_transfers):
        bad.append("conservation")
    if n_transfers:
        m = transfer_matrix(log, assignment)
        if abs(m.matrix.sum() - 1.0) > 1e-9:
            bad.append("normalization")
    p = conditional_solve_probability(log, assignment)
    if p["p_ist_given_solved"] is not None and p["p_solved_given_ist"] is not None:
        if p["p_solved_given_ist"] * p["p_ist"] != p["p_ist_given_solved"] * p["p_solved"]:
            bad.append("bayes")
    return bad


def test_criterion_4_accounting(determinism):
    rng = np.random.default_rng(4)
    logs = [synthetic_log(), read_log(determinism[0])]
    for _ in range(200):
        n = int(rng.integers(2, 12))
        ev = [(int(rng.integers(0, 20)), *rng.choice(n, 2, replace=False).tolist())
              for _ in range(int(rng.integers(0, 40)))]
        log = transfer_log(range(n), ev)
        log.events += [{"type": "solve", "t": 20, "env_id": int(i)}
                       for i in sorted(set(rng.integers(0, n, int(rng.integers(0, n))).tolist()))]
        log.header["config"]["mc_enabled"] = True
        logs.append(log)
    bad = [(i, v) for i, log in enumerate(logs) for v in accounting_violations(log)]
    assert record(4, "transfer accounting identities", not bad,
                  f"{len(logs)} logs (synthetic, desk run, random), {len(bad)} violations")


# -- 6 ----------------------------------------------------------------------------

def test_criterion_6_de_sanity(trivial_level):
    net = PolicyNet.for_level(trivial_level)
    desk = DeConfig(pop_size=16, evals_per_step=160)
    wins = sum(optimize_pair(trivial_level, net.init_params(s), net, desk, s, RewardKind.ALIGNED,
                             200).result.win for s in range(10))

    def sphere(x):
        return -float(np.sum(np.asarray(x, dtype=np.float64) ** 2))

    cfg = DeConfig(pop_size=20, evals_per_step=400, init_sigma=3.0)
    beats = 0
    for seed in range(10):
        rng = np.random.default_rng([7, seed])
        pop, _ = optimize(rng.uniform(-5, 5, 5).astype(np.float32), sphere, cfg, seed)
        beats += pop.best[1] > max(sphere(x) for x in rng.uniform(-5, 5, (pop.evals, 5)))
    assert record(6, "DE sanity", wins >= 8 and beats >= 9,
                  f"trivial level won in {wins}/10 seeds (>= 8); sphere: DE beat random search "
                  f"in {beats}/10 seeds (>= 9)")


# -- 7 ----------------------------------------------------------------------------

def test_criterion_7_gate(trivial_level):
    budget = MctsBudget(amount=300)
    cases = [("too easy", trivial_level, Verdict.TOO_EASY),
             ("too hard", make(SEALED), Verdict.TOO_HARD),
             ("viable", make(VIABLE), Verdict.VIABLE)]
    got = []
    for name, level, want in cases:
        a = mc_gate(level, budget=budget, max_game_len=200, seed=0)
        b = mc_gate(level, budget=budget, max_game_len=200, seed=0)
        got.append((name, a.verdict.value, a == b and a.verdict is want))
    ok = all(g[2] for g in got)
    assert record(7, "gate verdicts", ok,
                  ", ".join(f"{n} -> {v}{'' if good else ' (wrong)'}" for n, v, good in got))


# -- 8 ----------------------------------------------------------------------------

def test_criterion_8_ablation_report(determinism, desk_dir):
    out = desk_dir / "ablation"
    table = ablation("singleDoor", ABLATION_SEEDS, out, gamma=0.85)
    print(format_table(table))
    RESULTS["ablation_table"] = format_table(table)
    emitted = (out / "ablation.csv").is_file() and (out / "ablation.json").is_file()
    direction = table["species_direction_holds"] and table["share_direction_holds"]
    record(8, "MC ablation table (report only)", emitted,
           f"median species MC {table['MC']['median_species']} vs noMC {table['noMC']['median_species']}, "
           f"median largest share MC {table['MC']['median_largest_share']:.3f} vs noMC "
           f"{table['noMC']['median_largest_share']:.3f}; expected direction "
           f"{'observed' if direction else 'NOT observed (documented, not a failure)'}")
    assert emitted
    assert json.loads((out / "ablation.json").read_text())["runs"] == table["runs"]


# -- 9 ----------------------------------------------------------------------------

def test_criterion_9_statistics_on_synthetic_log(determinism):
    a = analyse(synthetic_log(), 0.85)
    s = summarise(a, compare=synthetic_log())
    mismatches = [k for k in ("n_levels", "n_species", "largest_species_share", "total_transfers",
                              "intra_species_fraction", "counts", "solved_percent")
                  if s[k] != EXPECTED[k]]
    mismatches += [k for k in ("p_solved_given_ist", "p_ist_given_solved", "p_solved", "p_ist")
                   if s[k]["exact"] != EXPECTED[k]]
    c = transfer_curves(a.log, a.assignment, a.species)
    if c.total.tolist() != EXPECTED["curve_total"]:
        mismatches.append("curves")
    if transfer_matrix(a.log, a.assignment, a.species, normalize=False).matrix.tolist() \
            != EXPECTED["matrix_counts"]:
        mismatches.append("matrix")
    if s["rank_test"]["p_value"] != pytest.approx(1.0):
        mismatches.append("rank_test")
    # the same statistics are computable from a real desk log
    desk = summarise(analyse(read_log(determinism[0])), compare=read_log(determinism[1]))
    computed = all(k in desk for k in ("p_solved_given_ist", "solved_percent", "rank_test"))
    assert record(9, "statistics on hand-counted synthetic log", not mismatches and computed,
                  f"exact mismatches: {mismatches or 'none'}; desk log statistics computed={computed}")


# -- 10 ---------------------------------------------------------------------------

def test_criterion_10_tree():
    nodes, lineage, transfer = parse_dot(export_tree(synthetic_log(), SPECIES))
    labels_ok = all(int(nodes[i]["species"]) == SPECIES[i]
                    and nodes[i]["solved"] == str(i in SOLVED).lower()
                    and nodes[i]["active"] == str(i not in CULLED).lower() for i in nodes)
    ok = (len(nodes), len(lineage), len(transfer)) == (6, 5, 2) and labels_ok \
        and sorted(transfer) == sorted(TRANSFERS)
    assert record(10, "tree export", ok,
                  f"{len(nodes)} nodes, {len(lineage)} lineage edges, {len(transfer)} transfer edges, "
                  f"labels {'match' if labels_ok else 'differ'}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
