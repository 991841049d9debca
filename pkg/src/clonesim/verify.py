"""Invariant suite run by ``clonesim verify``.

Each check covers one property over a fixed parameter grid and returns a
:class:`CheckResult`; failures name the task and, for stage states, the
stage index.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

from . import golden
from .analysis import branch_probabilities, fxp_crossover_check, p_opt
from .circuits import CIRCUITS, CloneTask, abstract_machine, apply_ci, checkpoint, run_circuit
from .circuits.correction import Correction, exchange_element, ruo_elements
from .circuits.task import MAX_CH, CorrectionSpec, SUCCESS_CLASSES
from .elements import validate
from .montecarlo import ShotPlan, sample
from .state import PATH, PureState, fidelity_to, normalize, project

THETA_GRID = tuple(k * (math.pi / 2) / 50 for k in range(1, 51))
GRID_THETAS = tuple(k * math.pi / 20 for k in range(1, 11))
GRID_CHS = tuple(j / 10 * MAX_CH for j in range(1, 11))
CHECKPOINT_THETAS = (math.pi / 6, math.pi / 3, math.pi / 2)
SIGNS = (1, -1)
MC_SEEDS = tuple(range(100))
MC_SHOTS = 100_000


@dataclass
class CheckResult:
    name: str
    criterion: int
    passed: bool
    detail: str
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion:>2} {self.name}: {self.detail}"


def _grid():
    for th in GRID_THETAS:
        for ch in GRID_CHS:
            for s in SIGNS:
                yield CloneTask(th, s, ch)


def _fmt(task: CloneTask) -> str:
    return f"theta={task.theta:.6g} s={task.sign_char} c_h={task.c_h:.6g}"


def check_optimal() -> CheckResult:
    t0 = time.perf_counter()
    fails, worst = [], 0.0
    for th in THETA_GRID:
        for s in SIGNS:
            dev = abs(abstract_machine(CloneTask(th, s)).success_prob - p_opt(th))
            worst = max(worst, dev)
            if dev >= 1e-12:
                fails.append(f"theta={th:.6g} s={s}: deviation {dev:.3g}")
    secs = time.perf_counter() - t0
    if secs >= 1:
        fails.append(f"runtime {secs:.2f}s exceeds 1s")
    return CheckResult("optimal probability", 1, not fails, f"max deviation {worst:.3g}, {secs:.3f}s", fails)


def check_lpc_max() -> CheckResult:
    fails, worst = [], 0.0
    for th in THETA_GRID:
        for s in SIGNS:
            task = CloneTask.maximal(th, s)
            run = run_circuit("lpc-max", task)
            dev = abs(run.total() - p_opt(th) / 2)
            worst = max(worst, dev)
            if dev >= 1e-12:
                fails.append(f"{_fmt(task)}: total deviation {dev:.3g}")
            for b in run.branches:
                if b.classification in SUCCESS_CLASSES and b.state is not None and b.fidelity < 1 - 1e-10:
                    fails.append(f"{_fmt(task)} {b.detector_label}: fidelity {b.fidelity!r}")
    return CheckResult("lpc-max totals", 2, not fails, f"max deviation {worst:.3g}", fails)


def check_checkpoints() -> CheckResult:
    fails, worst = [], 0.0
    cases = [("lpc-max", CloneTask.maximal(th, s)) for th in CHECKPOINT_THETAS for s in SIGNS]
    cases += [(c, CloneTask(th, s, 0.6)) for c in ("lpc-partial", "nlopc-partial") for th in CHECKPOINT_THETAS for s in SIGNS]
    for circuit, task in cases:
        run = run_circuit(circuit, task)
        for k in range(len(run.checkpoints)):
            fid, dev = golden.checkpoint_agreement(checkpoint(run, k), golden.golden_state(circuit, task, k))
            worst = max(worst, 1 - fid)
            if fid < 1 - 1e-12 or dev > 1e-12:
                fails.append(f"{circuit} {_fmt(task)} stage {k}: fidelity {fid!r}, amplitude deviation {dev:.3g}")
    return CheckResult("golden checkpoints", 3, not fails, f"{len(cases)} runs, worst infidelity {worst:.3g}", fails)


def usd_success_rates(c_h: float) -> dict[str, float]:
    """Success probability of each conditional interferometer on its own input pair."""
    task = CloneTask(math.pi / 3, 1, c_h)
    spec = CorrectionSpec.from_task(task)
    paths = ("0", "1", "0'", "1'", "2'", "3'")
    c_v = task.c_v
    out = {}
    for which, path, kept, (first, second) in (("CI0", "0", "0'", (c_v, c_h)), ("CI1", "1", "1'", (c_h, c_v))):
        for s in SIGNS:
            pair = PureState.photon(1, paths, {("H", path): first, ("V", path): s * second})
            done = apply_ci(pair, which, spec)
            out[f"{which}{'+' if s > 0 else '-'}"] = project(done, (1, PATH), kept).norm2()
    return out


def check_lpc_partial() -> CheckResult:
    fails, worst = [], 0.0
    for task in _grid():
        run = run_circuit("lpc-partial", task)
        dev = abs(run.total() - task.c_h**2 / (1 + math.cos(task.theta)))
        worst = max(worst, dev)
        if dev >= 1e-12:
            fails.append(f"{_fmt(task)}: total deviation {dev:.3g}")
    for ch in GRID_CHS:
        for name, rate in usd_success_rates(ch).items():
            if abs(rate - 2 * ch * ch) >= 1e-12:
                fails.append(f"c_h={ch:.6g} {name}: discrimination rate {rate!r}")
    return CheckResult("lpc-partial totals", 4, not fails, f"max deviation {worst:.3g}", fails)


def check_nlopc() -> CheckResult:
    fails, worst = [], 0.0
    for task in _grid():
        run = run_circuit("nlopc-partial", task)
        expected = branch_probabilities("nlopc-partial", task)
        for b in run.branches:
            tol = 1e-10 if b.detector_label.startswith(("path_c", "path_d")) else 1e-12
            if abs(b.probability - expected[b.detector_label]) >= tol:
                fails.append(f"{_fmt(task)} {b.detector_label}: {b.probability!r} vs {expected[b.detector_label]!r}")
        target = p_opt(task.theta) if task.is_maximal else 2 * task.c_h**2 / (1 + math.cos(task.theta))
        dev = abs(run.total() - target)
        worst = max(worst, dev)
        if dev >= 1e-10:
            fails.append(f"{_fmt(task)}: total deviation {dev:.3g}")
    return CheckResult("nlopc totals", 5, not fails, f"max deviation {worst:.3g}", fails)


def _conditional(run, label):
    if label.startswith("usd:"):
        comp = run.info["usd_failure"][label[4:]]
        return normalize(comp)[0] if comp.norm2() > 1e-13 else None
    return run.branch(label).state


def check_failure_independence() -> CheckResult:
    fails, compared = [], 0
    labels = {
        "lpc-partial": ("path_1", "usd:path_a", "usd:path_b"),
        "nlopc-partial": ("path_1", "path_0tilde", "usd:path_a", "usd:path_b", "usd:path_c", "usd:path_d"),
    }
    for th in GRID_THETAS:
        for ch in GRID_CHS:
            for circuit, names in labels.items():
                plus = run_circuit(circuit, CloneTask(th, 1, ch))
                minus = run_circuit(circuit, CloneTask(th, -1, ch))
                for label in names:
                    sp, sm = _conditional(plus, label), _conditional(minus, label)
                    if sp is None or sm is None:
                        continue
                    compared += 1
                    fid = fidelity_to(sp, sm)
                    if fid < 1 - 1e-12:
                        fails.append(f"{circuit} theta={th:.6g} c_h={ch:.6g} {label}: fidelity {fid!r}")
    return CheckResult("failure sign independence", 6, not fails, f"{compared} state pairs", fails)


def check_crossover() -> CheckResult:
    fails = []
    tie = fxp_crossover_check(math.acos(0.2))
    if abs(tie["margin"]) >= 1e-15:
        fails.append(f"tie margin {tie['margin']!r}")
    for k in range(1, 1001):
        th = k * (math.pi / 2) / 1000
        c = abs(math.cos(th))
        if abs(c - 0.2) < 1e-12:
            continue
        if fxp_crossover_check(th)["probabilistic_wins"] != (c < 0.2):
            fails.append(f"theta={th:.6g}: win flag disagrees with |cos theta| < 1/5")
    return CheckResult("f x p crossover", 7, not fails, f"tie margin {tie['margin']:.3g}", fails)


def check_conservation() -> CheckResult:
    fails, worst, runs = [], 0.0, 0
    for task in _grid():
        for circuit in CIRCUITS:
            if circuit == "lpc-max" and not task.is_maximal:
                continue
            for correct in (True, False):
                run = run_circuit(circuit, task, correct)
                runs += 1
                dev = abs(run.total_probability() - 1)
                worst = max(worst, dev)
                if dev >= 1e-12:
                    fails.append(f"{circuit} correct={correct} {_fmt(task)}: sum deviation {dev:.3g}")
    return CheckResult("probability conservation", 8, not fails, f"{runs} runs, max deviation {worst:.3g}", fails)


def mc_workload() -> list[tuple[str, list]]:
    """Branch tables checked by the statistical criterion."""
    from .circuits.task import FAILURE, SUCCESS, OutcomeBranch

    single = [OutcomeBranch("only", None, 1.0, SUCCESS)]
    coin = [OutcomeBranch("heads", None, 0.5, SUCCESS), OutcomeBranch("tails", None, 0.5, FAILURE)]
    lpc = run_circuit("lpc-max", CloneTask.maximal(math.pi / 3)).branches
    return [("single branch", single), ("fair coin", coin), ("lpc-max theta=pi/3", lpc)]


def coverage_misses(branches, seeds=MC_SEEDS, n_shots=MC_SHOTS) -> dict[str, int]:
    exact = {b.detector_label: b.probability for b in branches}
    misses = dict.fromkeys(exact, 0)
    for seed in seeds:
        table = sample(branches, ShotPlan(n_shots, seed))
        for label, ok in table.covers(exact).items():
            misses[label] += not ok
    return misses


def check_montecarlo() -> CheckResult:
    t0 = time.perf_counter()
    fails = []
    for name, branches in mc_workload():
        for label, miss in coverage_misses(branches).items():
            if miss > 1:
                fails.append(f"{name} {label}: exact probability outside the interval for {miss} of {len(MC_SEEDS)} seeds")
    secs = time.perf_counter() - t0
    if secs >= 30:
        fails.append(f"runtime {secs:.1f}s exceeds 30s")
    return CheckResult("monte carlo coverage", 9, not fails, f"{len(MC_SEEDS)} seeds x {MC_SHOTS} shots, {secs:.2f}s", fails)


def all_elements():
    """Every element the circuits and corrections use, over a small grid."""
    seen = {}
    for th in CHECKPOINT_THETAS:
        for ch in (0.3, 0.6, MAX_CH):
            task = CloneTask(th, 1, ch)
            for circuit in CIRCUITS:
                if circuit in ("oracle",) or (circuit == "lpc-max" and not task.is_maximal):
                    continue
                for el in run_circuit(circuit, task).elements():
                    seen[(el.name, el.photon, th, ch)] = el
            spec = CorrectionSpec.from_task(task)
            for ex in (False, True):
                corr = Correction(2, th, spec.gamma, spec.gamma, pre_ruo=True, exchange=True, exchanged_ci=ex)
                for el in corr.elements():
                    seen[(el.name, el.photon, th, ch)] = el
    for el in ruo_elements(1) + [exchange_element(math.pi / 3, 1)]:
        seen[(el.name, el.photon)] = el
    return list(seen.values())


def check_elements() -> CheckResult:
    fails = []
    elements = all_elements()
    for el in elements:
        rep = validate(el)
        if not rep.ok:
            fails.append(f"{el.name} (photon {el.photon}): Gram deviation {rep.max_deviation:.3g}")
        if el.lossy:
            for port, norms in rep.column_norms.items():
                if abs(norms["with_sink"] - 1) >= 1e-12:
                    fails.append(f"{el.name} {port}: probability with sink {norms['with_sink']!r}")
    n_lossy = sum(el.lossy for el in elements)
    return CheckResult("element validation", 10, not fails, f"{len(elements)} elements ({n_lossy} lossy)", fails)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "optimal": check_optimal,
    "lpc-max": check_lpc_max,
    "checkpoints": check_checkpoints,
    "lpc-partial": check_lpc_partial,
    "nlopc": check_nlopc,
    "failure": check_failure_independence,
    "crossover": check_crossover,
    "conservation": check_conservation,
    "montecarlo": check_montecarlo,
    "elements": check_elements,
}

GROUPS = {
    "probabilities": ("optimal", "lpc-max", "lpc-partial", "nlopc", "conservation"),
    "states": ("checkpoints", "failure"),
    "statistics": ("montecarlo",),
}


def resolve(only=None) -> list[str]:
    """Check names selected by ``only`` (check or group names); all checks when empty."""
    if not only:
        return list(CHECKS)
    names: list[str] = []
    for item in only:
        picked = GROUPS.get(item, (item,) if item in CHECKS else None)
        if picked is None:
            raise KeyError(item)
        names += [n for n in picked if n not in names]
    return [n for n in CHECKS if n in names]


def run_checks(only=None) -> list[CheckResult]:
    results = []
    for name in resolve(only):
        t0 = time.perf_counter()
        res = CHECKS[name]()
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
