"""Command-line front end.

Exit codes: 0 when every check passes, 1 for usage errors, 2 when a
verification fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import __version__
from .analysis import CSV_COLUMNS, compare, summarize, to_csv
from .circuits import CIRCUITS, POLICIES, CloneTask, run_circuit
from .circuits.task import MAX_CH
from .elements import validate
from .montecarlo import COUNT_COLUMNS, ShotPlan, sample
from .verify import CHECKS, GROUPS, resolve, run_checks

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
SEED_ENV = "CLONESIM_SEED"
MC_COLUMNS = COUNT_COLUMNS[1:] + ("mc_pass",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_angle(text) -> float:
    """``"60deg"`` or ``"1.047rad"`` to radians; the unit is mandatory."""
    s = str(text).strip().lower()
    for suffix, scale in (("deg", math.pi / 180), ("rad", 1.0)):
        if s.endswith(suffix):
            try:
                return float(s[: -len(suffix)]) * scale
            except ValueError:
                break
    raise UsageError(f"angle {text!r} needs a number with a 'deg' or 'rad' suffix")


def parse_ch(text) -> float:
    s = str(text).strip().lower()
    if s in ("max", "1/sqrt2", "1/sqrt(2)"):
        return MAX_CH
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"c_h {text!r} is not a number, 'max' or '1/sqrt2'") from None


def _split(text: str) -> list[str]:
    return [p for p in (x.strip() for x in str(text).split(",")) if p]


@dataclass(frozen=True)
class RunConfig:
    circuit: str
    theta: float
    sign: str = "+"
    c_h: float = MAX_CH
    correct: bool = True
    policy: str = "channel"
    shots: Optional[int] = None
    seed: Optional[int] = None
    output: str = "csv"
    checkpoints: bool = False

    def task(self) -> CloneTask:
        try:
            return CloneTask(self.theta, self.sign, self.c_h)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def validate(self) -> RunConfig:
        if self.circuit not in CIRCUITS:
            raise UsageError(f"unknown circuit {self.circuit!r}; choose from {', '.join(CIRCUITS)}")
        if self.circuit == "lpc-max" and abs(self.c_h - MAX_CH) > 1e-12:
            raise UsageError("lpc-max runs only on the maximally entangled channel (c_h = 1/sqrt2)")
        if self.output not in ("csv", "json"):
            raise UsageError("output must be csv or json")
        if self.policy not in POLICIES:
            raise UsageError(f"policy must be one of {', '.join(POLICIES)}")
        if self.shots is not None and self.shots < 1:
            raise UsageError("shots must be positive")
        if self.checkpoints and self.output != "json":
            raise UsageError("--checkpoints needs --output json")
        self.task()
        return self


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def _default_seed() -> Optional[int]:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _pick(args, cfg: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _seed(args, cfg) -> int:
    seed = _pick(args, cfg, "seed")
    if seed is None:
        seed = _default_seed()
    return 0 if seed is None else int(seed)


def config_from_args(args) -> RunConfig:
    cfg = _load_config(args.config)
    circuit = _pick(args, cfg, "circuit")
    theta = _pick(args, cfg, "theta")
    if circuit is None or theta is None:
        raise UsageError("--circuit and --theta are required (on the command line or in --config)")
    ch = _pick(args, cfg, "ch")
    if ch is None:
        ch = "max"
    shots = _pick(args, cfg, "shots")
    return RunConfig(
        circuit=circuit,
        theta=parse_angle(theta),
        sign=str(_pick(args, cfg, "sign", "+")),
        c_h=parse_ch(ch),
        correct=bool(_pick(args, cfg, "correct", True)),
        policy=_pick(args, cfg, "policy", "channel"),
        shots=None if shots is None else int(shots),
        seed=_seed(args, cfg),
        output=_pick(args, cfg, "output", "csv"),
        checkpoints=bool(_pick(args, cfg, "checkpoints", False)),
    ).validate()


def _mc_columns(table, report) -> dict[str, dict]:
    exact = {r.branch: r.p_sim for r in report.rows}
    covered = table.covers(exact)
    return {row["branch"]: dict(row, mc_pass=covered[row["branch"]]) for row in table.rows()}


def execute(config: RunConfig, index: int = 0):
    """Run one configuration; returns (run, report, count table or None).

    The sampling stream is spawned from the configured seed and the task's
    position ``index`` in its grid, so a lone run equals a one-point sweep.
    """
    task = config.task()
    run = run_circuit(config.circuit, task, config.correct, config.policy)
    report = compare(run, summarize(task))
    table = None
    if config.shots:
        table = sample(run.branches, ShotPlan(config.shots, _task_seed(config.seed or 0, index)))
    return run, report, table


def report_rows(report, table) -> list[dict]:
    rows = report.csv_rows()
    if table is not None:
        mc = _mc_columns(table, report)
        for row in rows:
            row.update(mc.get(row["branch"], {}))
    return rows


def _columns(with_mc: bool):
    return CSV_COLUMNS + (MC_COLUMNS if with_mc else ())


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def cmd_run(args) -> int:
    config = config_from_args(args)
    run, report, table = execute(config)
    if config.output == "csv":
        text = to_csv(report_rows(report, table), _columns(table is not None))
    else:
        data = {"config": _config_json(config), "report": report.to_json(), "analytic": summarize(run.task).as_dict()}
        if "corrections" in run.info:
            data["corrections"] = run.info["corrections"]
        if table is not None:
            data["monte_carlo"] = {"seed": config.seed, **table.to_json()}
        if config.checkpoints:
            data["checkpoints"] = _checkpoints_json(run)
        text = _json(data)
    _emit(text, args.out)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _config_json(config: RunConfig) -> dict:
    return {
        "circuit": config.circuit,
        "theta": config.theta,
        "sign": config.sign,
        "c_h": config.c_h,
        "correct": config.correct,
        "policy": config.policy,
        "shots": config.shots,
        "seed": config.seed,
    }


def _checkpoints_json(run) -> list[dict]:
    return [
        {"index": i, "stage": name, "norm2": state.norm2(), "state": state.to_json()}
        for i, (name, state) in enumerate(run.checkpoints)
    ]


def _task_seed(seed: int, index: int) -> int:
    child = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(child.generate_state(1, dtype=np.uint64)[0])


def sweep_configs(args) -> list[RunConfig]:
    cfg = _load_config(args.config)
    circuits = _split(_pick(args, cfg, "circuits", "lpc-partial,nlopc-partial"))
    thetas = [parse_angle(t) for t in _split(_pick(args, cfg, "thetas", ""))]
    chs = [parse_ch(c) for c in _split(_pick(args, cfg, "chs", "max"))]
    signs = _split(_pick(args, cfg, "signs", "+"))
    if not (circuits and thetas and chs and signs):
        raise UsageError("empty grid: give at least one circuit, theta, c_h and sign")
    order = {c: i for i, c in enumerate(CIRCUITS)}
    base = RunConfig(
        circuit=CIRCUITS[0],
        theta=math.pi / 2,
        correct=bool(_pick(args, cfg, "correct", True)),
        policy=_pick(args, cfg, "policy", "channel"),
        shots=_pick(args, cfg, "shots"),
        seed=_seed(args, cfg),
    )
    configs = []
    for circuit in sorted(set(circuits), key=lambda c: order.get(c, len(order))):
        for theta in sorted(set(thetas)):
            for sign in sorted(set(signs), key=lambda s: s != "+"):
                for ch in sorted(set(chs)):
                    if circuit == "lpc-max" and abs(ch - MAX_CH) > 1e-12:
                        continue
                    configs.append(replace(base, circuit=circuit, theta=theta, sign=sign, c_h=ch).validate())
    if not configs:
        raise UsageError("empty grid after removing lpc-max points with c_h != 1/sqrt2")
    return configs


def cmd_sweep(args) -> int:
    configs = sweep_configs(args)
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(execute, configs, range(len(configs))))
    rows, ok = [], True
    for _, report, table in results:
        rows += report_rows(report, table)
        ok = ok and report.passed
    _emit(to_csv(rows, _columns(configs[0].shots is not None)), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    only = []
    for item in args.only or []:
        only += _split(item)
    try:
        names = resolve(only)
    except KeyError as exc:
        choices = ", ".join(list(CHECKS) + list(GROUPS))
        raise UsageError(f"unknown check {exc.args[0]!r}; choose from {choices}") from None
    results = run_checks(names)
    for res in results:
        print(res.line())
        for failure in res.failures:
            print(f"    {failure}")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def cmd_dump_elements(args) -> int:
    config = config_from_args(args)
    run = run_circuit(config.circuit, config.task(), config.correct, config.policy)
    data = []
    for stage, elements in run.stages:
        for el in elements:
            rep = validate(el)
            data.append({"stage": stage, **el.to_json(), "valid": rep.ok, "max_deviation": rep.max_deviation})
    _emit(_json(data), args.out)
    return EXIT_OK if all(d["valid"] for d in data) else EXIT_VERIFY


def cmd_dump_checkpoints(args) -> int:
    config = config_from_args(args)
    run = run_circuit(config.circuit, config.task(), config.correct, config.policy)
    data = _checkpoints_json(run)
    if args.index is not None:
        if not 0 <= args.index < len(data):
            raise UsageError(f"checkpoint index must lie in 0..{len(data) - 1}")
        data = data[args.index]
    _emit(_json(data), args.out)
    return EXIT_OK


def _task_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values; command-line flags win")
    p.add_argument("--circuit", help=f"one of {', '.join(CIRCUITS)}")
    p.add_argument("--theta", help="state angle with unit, e.g. 60deg or 1.0472rad")
    p.add_argument("--sign", choices=("+", "-"), default=None)
    p.add_argument("--ch", help="Schmidt coefficient c_h in [0, 1/sqrt2], or 'max'")
    p.add_argument("--correct", dest="correct", action="store_true", default=None, help="apply corrections (default)")
    p.add_argument("--no-correct", dest="correct", action="store_false", help="report raw heralds")
    p.add_argument("--policy", choices=POLICIES, default=None, help="how the c/d correction is chosen")
    p.add_argument("--out", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clonesim", description="Optical probabilistic-cloning simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and compare it with the closed forms")
    _task_options(p)
    p.add_argument("--shots", type=int, default=None, help="also sample this many detector events")
    p.add_argument("--seed", type=int, default=None, help=f"sampling seed (default ${SEED_ENV} or 0)")
    p.add_argument("--output", choices=("csv", "json"), default=None)
    p.add_argument("--checkpoints", action="store_true", default=None, help="include stage states (json only)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of experiments, one CSV row per branch")
    p.add_argument("--config", help="JSON file with option values; command-line flags win")
    p.add_argument("--circuits", help="comma-separated circuit names")
    p.add_argument("--thetas", help="comma-separated angles with units")
    p.add_argument("--chs", help="comma-separated c_h values")
    p.add_argument("--signs", help="comma-separated signs, e.g. +,-")
    p.add_argument("--correct", dest="correct", action="store_true", default=None)
    p.add_argument("--no-correct", dest="correct", action="store_false")
    p.add_argument("--policy", choices=POLICIES, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="thread count (output does not depend on it)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--only", action="append", help="check or group names (repeatable, comma-separated)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dump-elements", help="list a circuit's elements with their validation result")
    _task_options(p)
    p.set_defaults(func=cmd_dump_elements)

    p = sub.add_parser("dump-checkpoints", help="print the state after every stage")
    _task_options(p)
    p.add_argument("--index", type=int, default=None, help="only this stage")
    p.set_defaults(func=cmd_dump_checkpoints)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"clonesim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
