"""Append-only JSON-lines run log.

Line 1 is a header ``{"type": "header", "schema": SCHEMA, "seed": ..., "config": {...}}``.
Every later line is one event with at least ``type`` and ``t`` (the loop index):

  pair_created  env_id, parent_id, level (ASCII), agent_from
  mc_result     env_id (null when rejected), parent_id, verdict, evidence, level
  opt_summary   env_id, best_fitness, evals, generations, status, n_steps
  transfer      env_id (= to_env), from_env, to_env, challenger_score, incumbent_score
  solve         env_id, origin, source, reward, n_steps, agent, agent_sha256
  cull          env_id
  loop_tick     active

Floats are written with ``repr`` precision so values round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA = "pinsky-runlog/1"
EVENT_TYPES = ("pair_created", "mc_result", "opt_summary", "transfer", "solve", "cull", "loop_tick")


class RunLogError(ValueError):
    pass


class TruncatedLog(RunLogError):
    def __init__(self, message, valid_events):
        super().__init__(message)
        self.valid_events = valid_events


def encode(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), allow_nan=False)


class RunLogWriter:
    """Single-owner writer; every line is flushed as soon as it is written."""

    def __init__(self, path, config: dict, seed: int):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._last_t = 0
        self.events: list[dict] = []
        self.header = {"type": "header", "schema": SCHEMA, "seed": seed, "config": config}
        self._write(self.header)

    def _write(self, record):
        self._fh.write(encode(record) + "\n")
        self._fh.flush()

    def emit(self, type_: str, t: int, **fields) -> dict:
        if type_ not in EVENT_TYPES:
            raise RunLogError(f"unknown event type {type_!r}")
        if t < self._last_t:
            raise RunLogError(f"loop index went backwards ({t} < {self._last_t})")
        self._last_t = t
        record = {"type": type_, "t": t, **fields}
        self._write(record)
        self.events.append(record)
        return record

    def close(self):
        self._fh.close()

    def as_log(self) -> "RunLog":
        return RunLog(self.header, list(self.events), self.path)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class RunLog:
    header: dict
    events: list = field(default_factory=list)
    path: Path | None = None

    @property
    def config(self) -> dict:
        return self.header["config"]

    @property
    def seed(self) -> int:
        return self.header["seed"]

    def of_type(self, type_: str) -> list[dict]:
        return [e for e in self.events if e["type"] == type_]

    def counts(self) -> dict:
        out = {k: 0 for k in EVENT_TYPES}
        for e in self.events:
            out[e["type"]] += 1
        return out


def _describe(event: dict | None, lineno: int) -> str:
    if event is None:
        return "the header"
    return f"line {lineno} ({event['type']} at t={event['t']})"


def parse_lines(lines, path=None) -> RunLog:
    header = None
    events = []
    last, last_line = None, 0
    for i, line in enumerate(lines, 1):
        complete = line.endswith("\n")
        text = line.strip()
        if not text and complete:
            continue
        try:
            record = json.loads(text) if complete else None
        except json.JSONDecodeError:
            record = None
        if not isinstance(record, dict) or "type" not in record:
            if header is None:
                raise RunLogError(f"{path or 'log'}: line {i} is not a valid run-log header")
            raise TruncatedLog(f"{path or 'log'}: line {i} is truncated or corrupt; "
                               f"last valid event is {_describe(last, last_line)}", events)
        if header is None:
            if record.get("type") != "header" or record.get("schema") != SCHEMA:
                raise RunLogError(f"{path or 'log'}: missing {SCHEMA} header")
            header = record
            continue
        if record["type"] not in EVENT_TYPES or "t" not in record:
            raise RunLogError(f"{path or 'log'}: line {i} has an unknown event {record['type']!r}")
        events.append(record)
        last, last_line = record, i
    if header is None:
        raise RunLogError(f"{path or 'log'}: empty log")
    return RunLog(header, events, Path(path) if path else None)


def read_log(path) -> RunLog:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_lines(fh.readlines(), path)


def write_log(path, log: RunLog):
    """Write an in-memory log (used for synthetic logs in tests)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(encode(log.header) + "\n")
        for e in log.events:
            fh.write(encode(e) + "\n")
