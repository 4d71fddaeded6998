"""Command line: ``pinsky run | analyze | replay | ablation``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys
from pathlib import Path

from . import __version__
from .agents import ArchitectureMismatch, PolicyNet, load_params, policy_agent
from .config import (OUTPUT_DIR_ENV, PRESETS, ConfigError, RunConfig, coerce, format_config,
                     load_config, preset_values)
from .game import RewardKind, rollout
from .level import LevelError, parse
from .runlog import RunLogError, read_log

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(p):
    g = p.add_argument_group("run configuration (defaults shown; presets and --config override them)")
    for f in dataclasses.fields(RunConfig):
        if f.name == "out_dir":
            continue
        default = f.default
        shown = str(default).lower() if isinstance(default, bool) else (default if default != "" else "bundled")
        g.add_argument(_flag(f.name), dest=f.name, metavar=f.type.upper(), default=None,
                       help=f"(default: {shown})")
    g.add_argument("--loops", dest="num_poet_loops", metavar="INT", default=None,
                   help="alias of --num-poet-loops")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pinsky", description="Coevolve dZelda levels and agents, then analyse the runs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    r = sub.add_parser("run", help="execute the outer loop and write a run log")
    r.add_argument("--preset", default="",
                   help=f"comma-separated presets, applied in order (choices: {', '.join(PRESETS)})")
    r.add_argument("--config", default=None, help="key = value config file (default: none)")
    r.add_argument("--out", default=None,
                   help=f"run directory (default: ${OUTPUT_DIR_ENV} or ./runs, plus a run name)")
    r.add_argument("--jobs", type=int, default=1,
                   help="worker processes for pair optimization (default: 1)")
    r.add_argument("--quiet", action="store_true", help="no per-loop progress")
    _add_config_flags(r)

    a = sub.add_parser("analyze", help="speciate levels and compute transfer statistics",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    a.add_argument("log", help="run log (runlog.jsonl)")
    a.add_argument("--gamma", type=float, default=0.85, help="speciation similarity threshold")
    a.add_argument("--out", default=None, help="report directory (default: <log dir>/analysis)")
    a.add_argument("--compare", default=None, help="second run log for the transfer rank test")

    y = sub.add_parser("replay", help="re-simulate an agent on a logged level",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    y.add_argument("log", help="run log (runlog.jsonl)")
    y.add_argument("--env-id", type=int, required=True, help="level to replay")
    y.add_argument("--agent", default="solve",
                   help="'solve' for the logged first solver, or a parameter file path")
    y.add_argument("--quiet", action="store_true", help="print only the outcome, not the frames")

    b = sub.add_parser("ablation", help="desk runs with and without the minimal criterion",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    b.add_argument("--variant", default="singleDoor", choices=["singleDoor", "multiDoor"])
    b.add_argument("--seeds", type=int, default=5, help="seeds 0..N-1 per condition")
    b.add_argument("--loops", type=int, default=None, help="override the desk loop count")
    b.add_argument("--gamma", type=float, default=0.85)
    b.add_argument("--out", default=None, help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./runs)")
    b.add_argument("--jobs", type=int, default=1)
    return p


def resolve_config(ns) -> RunConfig:
    values = preset_values(ns.preset)
    if ns.config:
        values.update(load_config(ns.config))
    for f in dataclasses.fields(RunConfig):
        raw = getattr(ns, f.name, None)
        if raw is not None:
            values[f.name] = coerce(f.name, raw)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _default_root() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or "runs")


def cmd_run(ns) -> int:
    from .ablation import run_name
    from .poet import run

    cfg = resolve_config(ns)
    if ns.jobs < 1:
        raise ConfigError("jobs: must be a positive integer")
    out = Path(ns.out) if ns.out else _default_root() / run_name(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(format_config(cfg))

    def progress(t, pop):
        if not ns.quiet and (t % 10 == 0 or t == cfg.num_poet_loops - 1):
            solved = sum(p.solved_at is not None for p in pop.pairs.values())
            print(f"loop {t}: {len(pop.pairs)} levels, {len(pop.active_ids)} active, {solved} solved",
                  flush=True)

    res = run(cfg, cfg.seed, out, jobs=ns.jobs, progress=progress)
    counts = res.log.counts()
    print(f"wrote {res.log_path} ({sum(counts.values())} events, {counts['transfer']} transfers, "
          f"{counts['solve']} solves)")
    return EXIT_OK


def _fmt_p(v):
    return "undefined" if v is None else f"{v['value']:.3f} ({v['exact']})"


def cmd_analyze(ns) -> int:
    from .analysis import analyse, write_report

    if not 0.5 <= ns.gamma <= 0.99:
        raise ConfigError(f"gamma: must lie in [0.5, 0.99], got {ns.gamma}")
    log = _read(ns.log)
    compare = _read(ns.compare) if ns.compare else None
    out = Path(ns.out) if ns.out else Path(ns.log).parent / "analysis"
    s = write_report(analyse(log, ns.gamma), out, compare)
    intra = s["intra_species_fraction"]
    print(f"levels                 {s['n_levels']}")
    print(f"species (gamma={ns.gamma})   {s['n_species']}")
    print(f"largest species share  {s['largest_species_share']:.3f}")
    print(f"transfers              {s['total_transfers']}")
    print(f"intra-species transfer {'n/a' if intra is None else f'{100 * intra:.1f}%'}")
    print(f"P(solved | IST)        {_fmt_p(s['p_solved_given_ist'])}")
    print(f"solved levels          {s['solved_percent']:.1f}%" + ("" if s["gated"] else " (ungated)"))
    if "rank_test" in s:
        rt = s["rank_test"]
        print(f"rank test vs compare   U={rt['U']:.1f} p={rt['p_value']:.4g}")
    print(f"report written to {out}")
    return EXIT_OK


def _read(path):
    if not Path(path).is_file():
        raise RuntimeFailure(f"log not found: {path}")
    return read_log(path)


def cmd_replay(ns) -> int:
    log = _read(ns.log)
    created = {e["env_id"]: e for e in log.of_type("pair_created")}
    if ns.env_id not in created:
        raise RuntimeFailure(f"env_id {ns.env_id} is not in the log")
    cfg = RunConfig.from_dict(log.config)
    level = parse(created[ns.env_id]["level"])
    net = PolicyNet(level.height, level.width, cfg.conv1, cfg.conv2, cfg.hidden)
    solve = next((e for e in log.of_type("solve") if e["env_id"] == ns.env_id), None)
    if ns.agent == "solve":
        if solve is None:
            raise RuntimeFailure(f"env_id {ns.env_id} was never solved; pass --agent PATH")
        path = Path(ns.log).parent / solve["agent"]
        if not path.is_file():
            raise RuntimeFailure(f"agent file missing: {path}")
        blob = path.read_bytes()
        if hashlib.sha256(blob).hexdigest() != solve["agent_sha256"]:
            raise RuntimeFailure(f"agent file {path} does not match its logged checksum")
    else:
        path = Path(ns.agent)
        if not path.is_file():
            raise RuntimeFailure(f"agent file not found: {path}")
        blob = path.read_bytes()
    try:
        params, _ = load_params(blob, net)
    except ArchitectureMismatch as exc:
        raise RuntimeFailure(f"refusing to replay: {exc}") from None

    kind = RewardKind.ALIGNED if cfg.aligned_reward else RewardKind.DEFAULT
    trace = []
    result = rollout(level, policy_agent(params, net), kind, cfg.max_game_len, trace)
    if not ns.quiet:
        for state in trace:
            print(f"step {state.step}  {state.status.name.lower()}")
            print(state.render())
            print()
    print(f"final status {result.final_status.name.lower()} after {result.n_steps} steps, "
          f"reward {result.reward!r}")
    if ns.agent == "solve" and (not result.win or result.reward != solve["reward"]):
        raise RuntimeFailure(f"replay diverged from the log (logged reward {solve['reward']!r})")
    return EXIT_OK


def cmd_ablation(ns) -> int:
    from .ablation import ablation, format_table

    out = Path(ns.out) if ns.out else _default_root() / f"ablation-{ns.variant.lower()}"
    table = ablation(ns.variant, range(ns.seeds), out, ns.loops, ns.gamma, ns.jobs,
                     progress=lambda r: print(f"{r['condition']} seed {r['seed']}: "
                                              f"{r['n_species']} species", flush=True))
    print(format_table(table))
    print(f"table written to {out / 'ablation.csv'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "analyze": cmd_analyze, "replay": cmd_replay, "ablation": cmd_ablation}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return COMMANDS[ns.command](ns)
    except (ConfigError, UsageError) as exc:
        print(f"pinsky {ns.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeFailure, RunLogError, LevelError, OSError, ValueError) as exc:
        print(f"pinsky {ns.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
