"""Paired runs with and without the minimal criterion, compared on level diversity."""

from __future__ import annotations

import csv
import json
import statistics
from pathlib import Path

from .analysis import analyse, summarise
from .config import RunConfig, preset_values
from .poet import run
from .runlog import read_log


def run_name(cfg: RunConfig) -> str:
    reward = "aligned" if cfg.aligned_reward else "default"
    mc = "" if cfg.mc_enabled else "-nomc"
    return f"{cfg.variant.lower()}-{reward}{mc}-seed{cfg.seed}"


def ablation(variant: str, seeds, out_dir, loops: int | None = None, gamma: float = 0.85,
             jobs: int = 1, base: dict | None = None, reuse: bool = True, progress=None) -> dict:
    """Desk runs for each seed with and without the gate; returns the comparison table.

    With ``reuse`` an existing complete log for the same configuration is read
    back instead of re-running.
    """
    out_dir = Path(out_dir)
    tag = "singledoor" if variant.lower() == "singledoor" else "multidoor"
    rows = []
    for mc in (True, False):
        preset = f"desk,{tag}-aligned" + ("" if mc else "-nomc")
        values = {**preset_values(preset), **(base or {})}
        if loops is not None:
            values["num_poet_loops"] = loops
        for seed in seeds:
            cfg = RunConfig(**{**values, "seed": seed})
            run_dir = out_dir / run_name(cfg)
            log = _existing(run_dir, cfg) if reuse else None
            if log is None:
                log = run(cfg, seed, run_dir, jobs=jobs).log
            s = summarise(analyse(log, gamma))
            rows.append({"condition": "MC" if mc else "noMC", "seed": seed,
                         "n_levels": s["n_levels"], "n_species": s["n_species"],
                         "largest_species_share": s["largest_species_share"],
                         "total_transfers": s["total_transfers"],
                         "intra_species_fraction": s["intra_species_fraction"],
                         "solved_percent": s["solved_percent"]})
            if progress is not None:
                progress(rows[-1])
    table = {"variant": variant, "gamma": gamma, "seeds": list(seeds), "runs": rows}
    for cond in ("MC", "noMC"):
        sel = [r for r in rows if r["condition"] == cond]
        table[cond] = {
            "median_species": statistics.median(r["n_species"] for r in sel),
            "median_largest_share": statistics.median(r["largest_species_share"] for r in sel),
        }
    table["species_direction_holds"] = table["noMC"]["median_species"] <= table["MC"]["median_species"]
    table["share_direction_holds"] = (table["noMC"]["median_largest_share"]
                                      >= table["MC"]["median_largest_share"])
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "ablation.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    (out_dir / "ablation.json").write_text(json.dumps(table, indent=2) + "\n")
    return table


def _existing(run_dir: Path, cfg: RunConfig):
    path = run_dir / "runlog.jsonl"
    if not path.is_file():
        return None
    try:
        log = read_log(path)
    except ValueError:
        return None
    ticks = log.of_type("loop_tick")
    if log.config != cfg.to_dict() or len(ticks) != cfg.num_poet_loops:
        return None
    return log


def format_table(table: dict) -> str:
    lines = [f"{'condition':<10}{'seed':>6}{'levels':>8}{'species':>9}{'largest':>9}{'transfers':>11}"]
    for r in table["runs"]:
        lines.append(f"{r['condition']:<10}{r['seed']:>6}{r['n_levels']:>8}{r['n_species']:>9}"
                     f"{r['largest_species_share']:>9.3f}{r['total_transfers']:>11}")
    for cond in ("MC", "noMC"):
        m = table[cond]
        lines.append(f"{cond:<10} median species {m['median_species']}, "
                     f"median largest-species share {m['median_largest_share']:.3f}")
    lines.append(f"noMC species <= MC species: {table['species_direction_holds']}; "
                 f"noMC share >= MC share: {table['share_direction_holds']}")
    return "\n".join(lines)
