"""Lineage tree with one loop's transfers, written as Graphviz DOT."""

from __future__ import annotations


def transfer_loop(log, window="last"):
    """Resolve the transfer window: ``"last"`` (latest loop with transfers), ``"all"``, or a loop index."""
    if window == "all":
        return None
    if window in ("last", None):
        return _last(log)
    return int(window)


def _last(log):
    ts = [e["t"] for e in log.of_type("transfer")]
    return max(ts) if ts else -1


def _attr(d: dict) -> str:
    return ", ".join(f'{k}="{v}"' for k, v in d.items())


def export_tree(log, assignment: dict, window="last") -> str:
    """Nodes are pairs (env_id order) with species/active/solved attributes.

    Lineage edges run parent -> child; transfer edges (``kind="transfer"``) run
    from the agent's source pair to the receiving pair for the chosen loop.
    """
    created = log.of_type("pair_created")
    culled = {e["env_id"] for e in log.of_type("cull")}
    solved = {e["env_id"] for e in log.of_type("solve")}
    t_sel = transfer_loop(log, window)
    lines = ["digraph pinsky {", '  node [shape=circle];']
    for e in sorted(created, key=lambda e: e["env_id"]):
        i = e["env_id"]
        attrs = {"label": i, "species": assignment[i], "active": str(i not in culled).lower(),
                 "solved": str(i in solved).lower(), "born": e["t"]}
        lines.append(f"  n{i} [{_attr(attrs)}];")
    for e in sorted(created, key=lambda e: e["env_id"]):
        if e["parent_id"] is not None:
            lines.append(f'  n{e["parent_id"]} -> n{e["env_id"]} [kind="lineage"];')
    for e in log.of_type("transfer"):
        if t_sel is None or e["t"] == t_sel:
            lines.append(f'  n{e["from_env"]} -> n{e["to_env"]} '
                         f'[{_attr({"kind": "transfer", "color": "red", "t": e["t"]})}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
