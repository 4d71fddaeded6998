"""Full analysis of one run log into CSV/JSON/DOT files."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..level import parse
from .embedding import FIELDS, embed_level
from .species import DEFAULT_GAMMA, classify, speciate, support
from .transfers import (conditional_solve_probability, n_loops, rank_test, transfer_curves,
                        transfer_matrix)
from .tree import export_tree


@dataclass
class Analysis:
    log: object
    gamma: float
    embeddings: dict   # env_id -> Embedding
    archive: object
    assignment: dict   # env_id -> species id

    @property
    def species(self) -> list:
        return self.archive.ids


def analyse(log, gamma: float = DEFAULT_GAMMA) -> Analysis:
    created = sorted(log.of_type("pair_created"), key=lambda e: e["env_id"])
    if not created:
        raise ValueError("log has no pairs")
    emb = {e["env_id"]: embed_level(parse(e["level"])) for e in created}
    items = [(i, emb[i].values) for i in emb]
    archive = speciate(items, gamma)
    return Analysis(log, gamma, emb, archive, classify(items, archive))


def _frac(x):
    return None if x is None else {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}


def summarise(a: Analysis, compare=None) -> dict:
    log = a.log
    sup = support(a.assignment, a.archive)
    n = len(a.assignment)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        tm = transfer_matrix(log, a.assignment, a.species, normalize=True)
    cond = conditional_solve_probability(log, a.assignment)
    solved_pct = Fraction(cond["counts"]["solved"] * 100, n)
    curves = transfer_curves(log, a.assignment, a.species)
    out = {
        "gamma": a.gamma,
        "loops": n_loops(log),
        "n_levels": n,
        "n_species": len(a.archive),
        "largest_species_share": max(sup.values()) / n,
        "species_support": {str(k): v for k, v in sup.items()},
        "unreachable_embeddings": sorted(i for i, e in a.embeddings.items() if e.unreachable),
        "event_counts": log.counts(),
        "total_transfers": tm.total,
        "intra_species_fraction": tm.intra_fraction,
        "inter_species_fraction": None if tm.total == 0 else 1.0 - tm.intra_fraction,
        "solved_percent": float(solved_pct),
        "gated": cond["gated"],
        "p_solved_given_ist": _frac(cond["p_solved_given_ist"]),
        "p_ist_given_solved": _frac(cond["p_ist_given_solved"]),
        "p_solved": _frac(cond["p_solved"]),
        "p_ist": _frac(cond["p_ist"]),
        "counts": cond["counts"],
        "mean_transfers_per_loop": float(curves.total.mean()) if curves.total.size else 0.0,
    }
    if compare is not None:
        other = transfer_curves(compare, {e["env_id"]: 0 for e in compare.of_type("pair_created")}, [0])
        if curves.total.size and other.total.size:
            out["rank_test"] = rank_test(curves.total, other.total)
    return out


def write_report(a: Analysis, out_dir, compare=None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarise(a, compare)
    sup = support(a.assignment, a.archive)
    n = len(a.assignment)
    with open(out_dir / "species_support.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["species", "support", "share"])
        for sid, k in sup.items():
            w.writerow([sid, k, repr(k / n)])

    curves = transfer_curves(a.log, a.assignment, a.species)
    with open(out_dir / "transfer_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["t", "total"]
        for s in a.species:
            head += [f"in_{s}", f"out_{s}", f"net_{s}"]
        w.writerow(head)
        net = curves.net
        for t in range(curves.total.size):
            row = [t, int(curves.total[t])]
            for k in range(len(a.species)):
                row += [int(curves.incoming[k, t]), int(curves.outgoing[k, t]), int(net[k, t])]
            w.writerow(row)

    counts = transfer_matrix(a.log, a.assignment, a.species, normalize=False)
    with open(out_dir / "transfer_matrix.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from_species", "to_species", "count", "fraction"])
        for i, s in enumerate(a.species):
            for j, d in enumerate(a.species):
                c = int(counts.matrix[i, j])
                w.writerow([s, d, c, repr(c / counts.total) if counts.total else "0.0"])

    solved = {e["env_id"] for e in a.log.of_type("solve")}
    culled = {e["env_id"] for e in a.log.of_type("cull")}
    with open(out_dir / "levels.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["env_id", "parent_id", "born", "species", *FIELDS, "unreachable", "solved", "active"])
        for e in sorted(a.log.of_type("pair_created"), key=lambda e: e["env_id"]):
            i = e["env_id"]
            w.writerow([i, "" if e["parent_id"] is None else e["parent_id"], e["t"], a.assignment[i],
                        *a.embeddings[i].values, int(a.embeddings[i].unreachable),
                        int(i in solved), int(i not in culled)])

    (out_dir / "tree.dot").write_text(export_tree(a.log, a.assignment))
    summary["tree"] = "tree.dot"
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
