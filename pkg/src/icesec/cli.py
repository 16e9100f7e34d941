"""Batch front end: ``icesec run CONFIG [--out DIR] [--jobs N]``.

A config is a JSON object::

    {
      "channels": {
        "fig3": {"type": "gaussian", "c12": 1.9, "c21": 1.9, "c1e": 0.5,
                 "c2e": 0.5, "P1": 10, "P2": 10},
        "relay": {"type": "discrete", "pmf": "relay.csv"}
      },
      "tasks": [
        {"kind": "frontier", "channel": "fig3", "family": "G2"},
        {"kind": "check-case", "channel": "relay", "case": "C8", "samples": 200, "seed": 1}
      ]
    }

A single ``"channel"`` block may replace ``"channels"``; tasks then omit the
reference. Discrete pmf paths are resolved relative to the config file.
Frontier-like tasks write ``<name>.csv``; the others write ``<name>.json``.
``summary.json`` lists every task with its status and artifact.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds, schemes
from .channel import COMPONENTS, DiscreteChannel, FactoredInput, GaussianChannel
from .mutual_info import discrete_mi_table
from .region import RegionFrontier

log = logging.getLogger("icesec")

TASK_KINDS = ("frontier", "ctdma", "nf", "prefix-rate", "check-case", "outer-bound")
SAMPLED_KINDS = {"check-case", "outer-bound"}
GAUSSIAN_KEYS = ("c12", "c21", "c1e", "c2e", "P1", "P2")
CSV_HEADER = ("r1_bits", "r2_bits", "scheme", "params_id")


class ConfigError(ValueError):
    pass


def num(v: float) -> str:
    return f"{v:.12g}"


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def load_pmf_table(path: Path) -> DiscreteChannel:
    """Read a ``x1,x2,y1,y2,ye,prob`` table (header row required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: empty pmf table") from None
        want = ["x1", "x2", "y1", "y2", "ye", "prob"]
        if header != want:
            raise ConfigError(f"{path}:1: header must be {','.join(want)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 6:
                raise ConfigError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                rows.append([int(v) for v in row[:5]] + [float(row[5])])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    try:
        return DiscreteChannel.from_rows(rows)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _channel(name: str, block, base: Path):
    where = f"channels.{name}"
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = block.get("type", "gaussian" if "c12" in block else None)
    if kind == "gaussian":
        missing = [k for k in GAUSSIAN_KEYS if k not in block]
        if missing:
            raise ConfigError(f"{where}: missing fields {missing}")
        try:
            return GaussianChannel(**{k: float(block[k]) for k in GAUSSIAN_KEYS})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if kind == "discrete":
        if "pmf" not in block:
            raise ConfigError(f"{where}.pmf: missing pmf table path")
        path = Path(block["pmf"])
        return load_pmf_table(path if path.is_absolute() else base / path)
    raise ConfigError(f"{where}.type: expected 'gaussian' or 'discrete', got {kind!r}")


def _task_name(i: int, task: dict) -> str:
    if "name" in task:
        return str(task["name"])
    tag = task.get("family") or task.get("case") or ""
    if task["kind"] == "ctdma" and task.get("ncp"):
        tag = "ncp"
    parts = [f"{i:02d}", str(task.get("channel", "")), task["kind"], str(tag)]
    return "-".join(p for p in parts if p)


def parse_config(text: str, source: str = "<config>", base: Path = Path(".")) -> dict:
    """Parse and validate a run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    if "channel" in raw and "channels" in raw:
        raise ConfigError(f"{source}: give either 'channel' or 'channels', not both")
    blocks = raw.get("channels") or ({"default": raw["channel"]} if "channel" in raw else {})
    channels = {name: _channel(name, b, base) for name, b in blocks.items()}
    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list):
        raise ConfigError(f"{source}: 'tasks' must be a list")
    out, names = [], set()
    for i, task in enumerate(tasks):
        where = f"tasks[{i}]"
        if not isinstance(task, dict):
            raise ConfigError(f"{where}: expected an object")
        kind = task.get("kind")
        if kind not in TASK_KINDS:
            raise ConfigError(f"{where}.kind: unknown task kind {kind!r}; expected one of {TASK_KINDS}")
        task = dict(task)
        if "channel" not in task and len(channels) == 1:
            task["channel"] = next(iter(channels))
        if task.get("channel") not in channels:
            raise ConfigError(f"{where}.channel: undefined channel {task.get('channel')!r}")
        if kind in SAMPLED_KINDS and "seed" not in task:
            raise ConfigError(f"{where}.seed: sampled task kind {kind!r} needs an explicit seed")
        if kind == "nf" and isinstance(channels[task["channel"]], DiscreteChannel) and "seed" not in task:
            raise ConfigError(f"{where}.seed: discrete noise-forwarding search needs an explicit seed")
        task["name"] = _task_name(i, task)
        if task["name"] in names:
            raise ConfigError(f"{where}.name: duplicate task name {task['name']!r}")
        names.add(task["name"])
        out.append(task)
    return {"channels": channels, "tasks": out, "out": raw.get("out")}


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------

def _need(channel, cls, kind):
    if not isinstance(channel, cls):
        raise ConfigError(f"task kind {kind!r} needs a {cls.__name__}")
    return channel


def _sweep_config(task: dict, family: str = "G2") -> schemes.SweepConfig:
    return schemes.SweepConfig(
        family=task.get("family", family), levels=int(task.get("levels", 9)),
        alpha_steps=int(task.get("alpha_steps", 21)),
        weight_count=int(task.get("weight_count", 65)), seed=int(task.get("seed", 0)),
        full_units=int(task.get("full_units", 2)))


def write_frontier_csv(path: Path, fr: RegionFrontier, scheme: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in fr.points:
            w.writerow([num(p.r1), num(p.r2), scheme, p.params_id])


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_json(path: Path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    path.write_text(text + "\n", encoding="utf-8")


def _round(obj):
    """Numbers to 12 significant digits, recursively."""
    if isinstance(obj, float):
        return float(num(obj)) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _run_frontier(task, channel, jobs):
    ch = _need(channel, GaussianChannel, "frontier")
    cfg = _sweep_config(task)
    fr = schemes.sweep_region(ch, cfg, jobs=jobs)
    return "csv", (fr, cfg.family), fr.meta


def _run_ctdma(task, channel, jobs):
    ch = _need(channel, GaussianChannel, "ctdma")
    ncp = bool(task.get("ncp", False))
    fr = schemes.ctdma_region(ch, _sweep_config(task), ncp=ncp)
    return "csv", (fr, "ctdma-ncp" if ncp else "ctdma"), fr.meta


def _run_prefix(task, channel, jobs):
    ch = _need(channel, GaussianChannel, "prefix-rate")
    user = int(task.get("user", 1))
    Ps = float(task.get("Ps", ch.budget(user)))
    peer = float(task.get("peer_Pj", ch.budget(3 - user)))
    rate = schemes.wiretap_with_jamming_rate(ch, user, Ps, peer)
    return "json", {"user": user, "Ps": Ps, "peer_Pj": peer, "rate_bits": rate}, {}


def _run_nf(task, channel, jobs):
    if isinstance(channel, GaussianChannel):
        return "json", {"scheme": "gnf-ncp", "rate_bits": schemes.gnf_ncp_rate(channel)}, {}
    samples = int(task.get("samples", 200))
    seed = int(task["seed"])
    S1, O2 = COMPONENTS[1], COMPONENTS[5]
    best_orig = best_simpl = 0.0
    admissible = 0
    for i in range(samples):
        aux = bounds.random_aux(channel, seed, i)
        inp = _pair_input(aux, S1, O2)
        vals = schemes.nf_values_from_table(discrete_mi_table(channel, inp))
        orig, simpl = schemes.nf_rate_discrete(vals)
        best_orig = max(best_orig, orig)
        if vals["I(O2;Ye)"] <= vals["I(O2;Y1)"] + bounds.MARGIN:
            admissible += 1
            best_simpl = max(best_simpl, simpl)
    return "json", {"scheme": "nf", "samples": samples, "seed": seed,
                    "admissible_samples": admissible, "max_original_bits": best_orig,
                    "max_simplified_bits": best_simpl}, {}


def _pair_input(aux: bounds.AuxiliaryInput, first, second):
    return FactoredInput.from_pairs(aux.pu, (first, aux.pv1_u, aux.px1_v1),
                                    (second, aux.pv2_u, aux.px2_v2))


def _run_check(task, channel, jobs):
    ch = _need(channel, DiscreteChannel, "check-case")
    case = task.get("case")
    seed = int(task["seed"])
    at = None
    if task.get("evaluate", True):
        at = bounds.random_aux(ch, seed, 0, u_size=1)
    rep = bounds.check_condition(case, ch, int(task.get("samples", 200)), seed, at=at)
    return "json", rep.summary(), {}


def _run_outer(task, channel, jobs):
    ch = _need(channel, DiscreteChannel, "outer-bound")
    seed = int(task["seed"])
    draws = int(task.get("draws", 20))
    u_size = int(task.get("u_size", 1))
    best = {"r1": -math.inf, "r2": -math.inf, "sum": -math.inf}
    for i in range(draws):
        aux = bounds.random_aux(ch, seed, i, u_size=u_size)
        best["r1"] = max(best["r1"], bounds.outer_r1(ch, aux))
        best["r2"] = max(best["r2"], bounds.outer_r2(ch, aux))
        best["sum"] = max(best["sum"], bounds.outer_sum_value(ch, aux))
    rep = bounds.outer_sum_condition(ch, int(task.get("samples", 200)), seed)
    return "json", {"draws": draws, "u_size": u_size, "seed": seed,
                    "max_sampled_r1_bound": best["r1"], "max_sampled_r2_bound": best["r2"],
                    "max_sampled_sum_bound": best["sum"],
                    "sum_condition": {k: v for k, v in rep.summary().items() if k != "value"}}, {}


RUNNERS = {"frontier": _run_frontier, "ctdma": _run_ctdma, "prefix-rate": _run_prefix,
           "nf": _run_nf, "check-case": _run_check, "outer-bound": _run_outer}


def run(config: dict, out_dir: Path, jobs: int = 1) -> tuple[list[Path], dict]:
    """Execute the tasks in order; returns the artifact paths and summary."""
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []
    records = []
    for task in config["tasks"]:
        name = task["name"]
        t0 = time.perf_counter()
        rec = {"name": name, "kind": task["kind"], "channel": task["channel"]}
        try:
            fmt, payload, meta = RUNNERS[task["kind"]](task, config["channels"][task["channel"]], jobs)
            if fmt == "csv":
                path = out_dir / f"{name}.csv"
                fr, scheme = payload
                write_frontier_csv(path, fr, scheme)
                rec["points"] = len(fr.points)
            else:
                path = out_dir / f"{name}.json"
                write_json(path, _round(payload))
            rec.update(status="ok", artifact=path.name, meta=_round(dict(meta)))
            artifacts.append(path)
        except Exception as exc:  # a failed task must not stop the batch
            log.error("task %s failed: %s", name, exc)
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}")
        log.info("task %s: %s (%.2fs)", name, rec["status"], time.perf_counter() - t0)
        records.append(rec)
    summary = {"tasks": records, "artifacts": [p.name for p in artifacts],
               "errors": sum(r["status"] == "error" for r in records)}
    write_json(out_dir / "summary.json", summary)
    return artifacts, summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="icesec", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a task configuration")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None,
                       help="output directory (default: config 'out' or ./out)")
    p_run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        text = args.config.read_text(encoding="utf-8")
        config = parse_config(text, str(args.config), args.config.parent)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or Path(config["out"] or "out")
    try:
        artifacts, summary = run(config, out, args.jobs)
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 2
    print(f"{len(artifacts)} artifacts in {out}, {summary['errors']} task errors")
    return 1 if summary["errors"] else 0


if __name__ == "__main__":
    sys.exit(main())
