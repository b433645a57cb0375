"""Command-line interface: ingest problems, run experiments, emit reports.

Problem files are JSON objects:

    {"mu": [w, ...], "nu": [w, ...], "cost": [[entries]],
     "labels": {"mu": [...], "nu": [...]},          // optional
     "plan": [[i, j, mass], ...],                   // optional, sparse
     "subsidy": [[entries]]}                        // optional

Cost and subsidy entries are numbers or the strings "inf" / "-inf" (JSON
has no infinity literal). Weights must sum to 1 within 1e-6 and are
renormalized. "-" reads the problem from stdin.

Reports are JSON objects with sorted keys: subcommand, status, value, plan
(sparse triplets), potentials, certificates, facts, sweep, timing,
toolVersion, inputHash. Serialization is byte-deterministic for identical
inputs and flags; timing stays null unless --timing is given, because
wall-clock values would break that guarantee. With --format csv the sweep
and gallery fact tables come out as plot-ready CSV; other reports fall
back to a key,value table of their scalar fields.

Exit codes: 0 success/feasible, 1 verified violation or infeasibility
(with certificate in the report), 2 input error, 3 internal check failure.

Every certificate a report carries can be re-checked from the original
problem file alone via the `verify` subcommand. With --figures DIR the
solve, sweep, potentials, and example subcommands also render PNG figures
into DIR alongside the report.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    SUPPORT_EQUALITY_TOL,
    CostMatrix,
    DiscreteMeasure,
    PotentialPair,
    TransportPlan,
    check_feasible_potentials,
    dual_value,
    plan_cost,
)
from .errors import (
    InputValidationError,
    NonMonotoneSupportError,
    ParseError,
    TransportLabError,
    VerificationError,
)
from .extreal import INF, ext_sub_array, fmt_ext, parse_ext
from .figures import (
    render_facts_figure,
    render_plan_figure,
    render_potentials_figure,
    render_sweep_figure,
)
from .gallery import GENERATOR_NAMES, Instance, run_gallery
from .monotonicity import (
    CycleCertificate,
    SupportSet,
    check_cyclical_monotonicity,
    cycle_chain_sum,
)
from .multimarginal import build_cyclic_gain, candidate_couplings, check_coupling_bound
from .potentials import RectangleCertificate, decompose_exact, potentials_from_support
from .solver import SweepResult, solve_min_cost, truncation_sweep
from .subsidy import (
    ConstraintTag,
    _masked_lower,
    compute_subsidy,
    verify_lower_bound,
    verify_subsidy_constraint,
)

# ---------------------------------------------------------------------------
# JSON plumbing


def _jsonable(obj):
    """Make ``obj`` JSON-serializable; infinities become 'inf' / '-inf'."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_ext(float(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_bytes(doc: dict) -> bytes:
    return (json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _sha256(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _read_source(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"{path}: no such file")
    return p.read_bytes()


def _load_json(raw: bytes, origin: str) -> dict:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as err:
        raise ParseError(f"{origin}: not valid UTF-8 ({err})") from err
    except json.JSONDecodeError as err:
        raise ParseError(
            f"{origin}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}"
        ) from err
    if not isinstance(doc, dict):
        raise ParseError(f"{origin}: top level must be a JSON object")
    return doc


# ---------------------------------------------------------------------------
# Problem ingestion


def _measure_from(doc: dict, key: str) -> DiscreteMeasure:
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    raw = doc[key]
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{key}: expected a nonempty array of weights")
    w = np.array([parse_ext(v, f"{key}[{i}]") for i, v in enumerate(raw)])
    if np.isinf(w).any():
        raise ParseError(f"{key}: weights must be finite")
    total = float(w.sum())
    if not abs(total - 1.0) <= 1e-6:
        raise ParseError(f"{key}: weights sum to {total!r}, expected 1 within 1e-06")
    w = w / total
    labels = None
    label_doc = doc.get("labels")
    if isinstance(label_doc, dict) and key in label_doc:
        labels = label_doc[key]
        if not isinstance(labels, list) or len(labels) != w.size:
            raise ParseError(f"labels.{key}: expected {w.size} entries")
    if labels is None:
        prefix = "x" if key == "mu" else "y"
        labels = [f"{prefix}{i}" for i in range(w.size)]
    try:
        return DiscreteMeasure(labels=tuple(str(s) for s in labels), weights=w)
    except InputValidationError as err:
        raise ParseError(f"{key}: {err}") from err


def _matrix_from(doc: dict, key: str, shape: tuple[int, int]) -> np.ndarray:
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    rows = doc[key]
    if not isinstance(rows, list) or len(rows) != shape[0]:
        raise ParseError(f"{key}: expected {shape[0]} rows")
    out = np.empty(shape)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != shape[1]:
            raise ParseError(f"{key}[{i}]: expected {shape[1]} entries")
        for j, v in enumerate(row):
            out[i, j] = parse_ext(v, f"{key}[{i}][{j}]")
    return out


def _instance_from_doc(doc: dict) -> Instance:
    mu = _measure_from(doc, "mu")
    nu = _measure_from(doc, "nu")
    c = _matrix_from(doc, "cost", (len(mu), len(nu)))
    return Instance(name="problem", params={}, mu=mu, nu=nu,
                    cost=CostMatrix(entries=c))


def parse_instance(path: str) -> Instance:
    """Load and validate a problem file ("-" for stdin)."""
    raw = _read_source(path)
    return _instance_from_doc(_load_json(raw, path))


def _load_instance(path: str) -> tuple[Instance, dict, bytes]:
    raw = _read_source(path)
    doc = _load_json(raw, path)
    return _instance_from_doc(doc), doc, raw


def _plan_from_doc(doc: dict, inst: Instance) -> TransportPlan | None:
    if "plan" not in doc:
        return None
    trips = doc["plan"]
    if not isinstance(trips, list):
        raise ParseError("plan: expected an array of [i, j, mass] triplets")
    n, m = len(inst.mu), len(inst.nu)
    mass = np.zeros((n, m))
    for t, item in enumerate(trips):
        if not isinstance(item, list) or len(item) != 3:
            raise ParseError(f"plan[{t}]: expected [i, j, mass]")
        i, j, value = item
        if not isinstance(i, int) or not isinstance(j, int) \
                or not 0 <= i < n or not 0 <= j < m:
            raise ParseError(f"plan[{t}]: indices ({i!r}, {j!r}) out of range")
        v = parse_ext(value, f"plan[{t}][2]")
        if not np.isfinite(v) or v < 0:
            raise ParseError(f"plan[{t}]: mass must be finite and nonnegative")
        mass[i, j] += v
    try:
        return TransportPlan(mass=mass, mu=inst.mu, nu=inst.nu)
    except InputValidationError as err:
        raise ParseError(f"plan: {err}") from err


def _require_plan(doc: dict, inst: Instance, command: str) -> TransportPlan:
    plan = _plan_from_doc(doc, inst)
    if plan is None:
        raise ParseError(f"{command} needs a 'plan' field (sparse [i, j, mass] triplets)")
    return plan


# ---------------------------------------------------------------------------
# Report assembly and emission


def _base_report(command: str, raw: bytes) -> dict:
    return {
        "subcommand": command,
        "toolVersion": __version__,
        "inputHash": _sha256(raw),
        "timing": None,
    }


def _plan_triplets(plan: TransportPlan) -> list[list]:
    return [[int(i), int(j), float(plan.mass[i, j])]
            for i, j in zip(*np.nonzero(plan.mass))]


def _potentials_doc(pp: PotentialPair) -> dict:
    return {"phi": [float(v) for v in pp.phi], "psi": [float(v) for v in pp.psi]}


def _cycle_doc(cert: CycleCertificate, **extra) -> dict:
    doc = {
        "kind": "cycle",
        "pairs": [[int(x), int(y)] for x, y in cert.pairs],
        "totalWeight": float(cert.total_weight),
    }
    doc.update(extra)
    return doc


def _rectangle_doc(rc: RectangleCertificate) -> dict:
    return {"kind": "rectangle", "x": rc.x, "y": rc.y, "x2": rc.x2, "y2": rc.y2,
            "residual": float(rc.residual)}


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return fmt_ext(float(v))
    return v


def emit_report(report: dict, fmt: str) -> bytes:
    """Serialize a report deterministically as JSON or CSV."""
    if fmt == "json":
        return canonical_bytes(report)
    if fmt != "csv":
        raise InputValidationError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if "sweep" in report:
        writer.writerow(["cutoff", "value"])
        sweep = report["sweep"]
        for t, v in zip(sweep["cutoffs"], sweep["values"]):
            writer.writerow([_csv_cell(t), _csv_cell(v)])
    elif "facts" in report:
        writer.writerow(["description", "relation", "expected", "observed",
                         "tolerance", "source", "passed"])
        for f in report["facts"]:
            writer.writerow([_csv_cell(f[k]) for k in
                             ("description", "relation", "expected", "observed",
                              "tolerance", "source", "passed")])
    else:
        writer.writerow(["key", "value"])
        for key in sorted(report):
            value = report[key]
            if value is None or isinstance(value, (bool, int, float, str)):
                writer.writerow([key, _csv_cell(value)])
    return buf.getvalue().encode("utf-8")


def _maybe_render(args, filename: str, renderer, *data) -> None:
    if not args.figures:
        return
    os.makedirs(args.figures, exist_ok=True)
    renderer(*data, str(Path(args.figures) / filename))


# ---------------------------------------------------------------------------
# Random instances


def gen_random(n: int, m: int, seed: int, inf_density: float = 0.0) -> Instance:
    """A reproducible random instance: positive weights, U[0,1] costs.

    Each cost entry is independently replaced by +inf with probability
    ``inf_density``. Identical arguments give identical instances.
    """
    if n < 1 or m < 1:
        raise InputValidationError(f"need n, m >= 1, got {n}, {m}")
    if not 0 <= inf_density < 1:
        raise InputValidationError(f"infDensity must be in [0, 1), got {inf_density}")
    rng = np.random.default_rng(seed)
    gw = rng.random(n) + 0.1
    gv = rng.random(m) + 0.1
    c = rng.random((n, m))
    if inf_density > 0:
        c = np.where(rng.random((n, m)) < inf_density, INF, c)
    mu = DiscreteMeasure(labels=tuple(f"x{i}" for i in range(n)), weights=gw / gw.sum())
    nu = DiscreteMeasure(labels=tuple(f"y{j}" for j in range(m)), weights=gv / gv.sum())
    return Instance(
        name="random",
        params={"n": n, "m": m, "seed": seed, "infDensity": inf_density},
        mu=mu, nu=nu, cost=CostMatrix(entries=c),
    )


def _problem_doc(inst: Instance) -> dict:
    return {
        "mu": [float(v) for v in inst.mu.weights],
        "nu": [float(v) for v in inst.nu.weights],
        "cost": inst.cost.entries,
        "labels": {"mu": list(inst.mu.labels), "nu": list(inst.nu.labels)},
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_solve(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    res = solve_min_cost(inst.mu, inst.nu, inst.cost)
    report = _base_report("solve", raw)
    report["status"] = res.status
    report["value"] = float(res.value)
    if res.status != "optimal":
        return report, 1
    report["plan"] = _plan_triplets(res.plan)
    pp = potentials_from_support(SupportSet.from_plan(res.plan), inst.cost)
    report["potentials"] = _potentials_doc(pp)
    report["dualValue"] = dual_value(pp, res.plan)
    _maybe_render(args, "solve-plan.png", render_plan_figure, res.plan.mass)
    return report, 0


def _validate_cutoffs(cuts: list[float]) -> None:
    if not cuts:
        raise InputValidationError("cutoffs must be nonempty")
    if any(t <= 0 for t in cuts):
        raise InputValidationError("cutoffs must be positive")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise InputValidationError("cutoffs must be strictly increasing")


def _parse_cutoffs(text: str) -> list[float]:
    try:
        cuts = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise ParseError(f"--cutoffs: {err}") from err
    _validate_cutoffs(cuts)
    return cuts


def _sweep_worker(task) -> float:
    mu_w, nu_w, c, cutoff = task
    mu = DiscreteMeasure.from_weights(np.asarray(mu_w))
    nu = DiscreteMeasure.from_weights(np.asarray(nu_w))
    res = solve_min_cost(mu, nu, np.minimum(np.asarray(c), cutoff))
    return float(res.value)


def cmd_sweep(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    cuts = _parse_cutoffs(args.cutoffs)
    if args.parallel > 1:
        tasks = [(inst.mu.weights, inst.nu.weights, inst.cost.entries, t)
                 for t in cuts]
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            values = list(pool.map(_sweep_worker, tasks))
        sweep = SweepResult(cutoffs=tuple(cuts), values=tuple(values))
    else:
        sweep = truncation_sweep(inst.mu, inst.nu, inst.cost, cuts)
    report = _base_report("sweep", raw)
    report["status"] = "ok"
    report["sweep"] = {"cutoffs": list(sweep.cutoffs), "values": list(sweep.values)}
    _maybe_render(args, "sweep.png", render_sweep_figure, sweep.cutoffs, sweep.values)
    return report, 0


def cmd_verify_cmon(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    plan = _require_plan(doc, inst, "verify-cmon")
    support = SupportSet.from_plan(plan)
    cert = check_cyclical_monotonicity(support, inst.cost, tol=args.tolerance)
    report = _base_report("verify-cmon", raw)
    report["supportPairs"] = [[i, j] for i, j in support.pairs]
    if cert is None:
        report["status"] = "monotone"
        return report, 0
    report["status"] = "violated"
    report["certificates"] = [_cycle_doc(cert)]
    return report, 1


def cmd_potentials(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    report = _base_report("potentials", raw)
    plan = _plan_from_doc(doc, inst)
    if plan is None:
        res = solve_min_cost(inst.mu, inst.nu, inst.cost)
        if res.status != "optimal":
            report["status"] = res.status
            report["value"] = float(res.value)
            return report, 1
        plan = res.plan
    support = SupportSet.from_plan(plan)
    report["supportPairs"] = [[i, j] for i, j in support.pairs]
    try:
        pp = potentials_from_support(support, inst.cost, tol=args.tolerance)
    except NonMonotoneSupportError as err:
        report["status"] = "violated"
        report["certificates"] = [_cycle_doc(err.certificate)]
        return report, 1
    report["status"] = "ok"
    report["potentials"] = _potentials_doc(pp)
    report["dualValue"] = dual_value(pp, plan)
    _maybe_render(args, "potentials.png", render_potentials_figure, pp.phi, pp.psi)
    return report, 0


_SUBSIDY_TAGS = ("W1", "S1", "S2", "W2", "LB")


def cmd_subsidy(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    plan = _require_plan(doc, inst, "subsidy")
    report = _base_report("subsidy", raw)
    if "subsidy" not in doc:
        sf = compute_subsidy(plan, inst.cost)
        report["status"] = "ok"
        report["subsidy"] = {
            "entries": sf.entries.entries,
            "alpha": sf.alpha,
            "totalUnderPlan": sf.total_under_plan,
            "maxClamp": sf.max_clamp,
        }
        return report, 0
    f = _matrix_from(doc, "subsidy", inst.cost.entries.shape)
    tags = _SUBSIDY_TAGS if args.check in (None, "all") else (args.check,)
    results = {}
    certificates = []
    for tag in tags:
        if tag == "LB":
            res = solve_min_cost(inst.mu, inst.nu, inst.cost)
            verdict = verify_lower_bound(f, plan, inst.cost, res.value)
            results["LB"] = bool(verdict)
            if not verdict:
                certificates.append({
                    "kind": "lowerBound",
                    "shortfall": float(verdict.violations[0][2]),
                })
        else:
            cert = verify_subsidy_constraint(f, plan, inst.cost,
                                             ConstraintTag(tag), tol=args.tolerance)
            results[tag] = cert is None
            if cert is not None:
                certificates.append(_cycle_doc(cert, tag=tag))
    report["checks"] = results
    if certificates:
        report["certificates"] = certificates
        report["status"] = "violated"
        return report, 1
    report["status"] = "ok"
    return report, 0


def cmd_decompose(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    out = decompose_exact(inst.cost, tol=args.tolerance)
    report = _base_report("decompose", raw)
    if isinstance(out, RectangleCertificate):
        report["status"] = "not-decomposable"
        report["certificates"] = [_rectangle_doc(out)]
        return report, 1
    report["status"] = "decomposable"
    report["potentials"] = _potentials_doc(out)
    return report, 0


def cmd_mm_check(args) -> tuple[dict | None, int]:
    inst, doc, raw = _load_instance(args.problem)
    report = _base_report("mm-check", raw)
    res = solve_min_cost(inst.mu, inst.nu, inst.cost)
    plan = _plan_from_doc(doc, inst)
    if res.status != "optimal":
        report["status"] = res.status
        report["value"] = float(res.value)
        return report, 1
    if plan is None:
        plan = res.plan
    pi_cost = plan_cost(plan, inst.cost)
    if not np.isfinite(pi_cost):
        raise InputValidationError("mm-check needs a finite-cost plan")
    alpha = float(pi_cost - res.value)
    support = SupportSet.from_plan(plan)
    gain = build_cyclic_gain(inst.cost, support, args.length)
    cands = candidate_couplings(plan, args.length, args.seed, args.count)
    verdict = check_coupling_bound(plan, gain, alpha, cands)
    report.update({
        "alpha": alpha,
        "length": args.length,
        "count": args.count,
        "seed": args.seed,
        "bound": args.length * alpha,
        "couplings": [
            {"name": k.name, "value": float(np.sum(k.mass * gain.values))}
            for k in cands
        ],
    })
    if verdict:
        report["status"] = "feasible"
        return report, 0
    report["status"] = "violated"
    report["certificates"] = [
        {"kind": "couplingBound", "candidate": int(i), "excess": float(s)}
        for i, _, s in verdict.violations
    ]
    return report, 1


def _parse_params(items: list[str]) -> dict:
    params = {}
    for item in items:
        if "=" not in item:
            raise ParseError(f"--param expects key=value, got {item!r}")
        key, _, text = item.partition("=")
        try:
            value = int(text)
        except ValueError:
            try:
                value = float(text)
            except ValueError as err:
                raise ParseError(f"--param {key}: {text!r} is not a number") from err
        params[key] = value
    return params


def cmd_example(args) -> tuple[dict | None, int]:
    params = _parse_params(args.param)
    fact_report = run_gallery(args.name, params)
    raw = canonical_bytes({"name": fact_report.name, "params": fact_report.params})
    report = _base_report("example", raw)
    report["name"] = fact_report.name
    report["params"] = fact_report.params
    facts = [
        {
            "description": f.description,
            "relation": f.relation,
            "expected": float(f.expected),
            "observed": float(f.observed),
            "tolerance": float(f.tolerance),
            "source": f.source,
            "passed": f.passed,
        }
        for f in fact_report.facts
    ]
    report["facts"] = facts
    report["status"] = "ok" if fact_report.all_passed else "failed"
    _maybe_render(args, f"facts-{fact_report.name}.png", render_facts_figure,
                  fact_report.name, facts)
    return report, 0 if fact_report.all_passed else 1


def cmd_random(args) -> tuple[dict | None, int]:
    inst = gen_random(args.n, args.m, args.seedpos, args.inf_density)
    payload = canonical_bytes(_problem_doc(inst))
    if args.out == "-":
        sys.stdout.buffer.write(payload)
    else:
        Path(args.out).write_bytes(payload)
    return None, 0


# ---------------------------------------------------------------------------
# Report re-verification


def _verify_cycle(cert_doc: dict, upper, lower, tol: float, failures: list[str],
                  context: str) -> None:
    pairs = [(int(i), int(j)) for i, j in cert_doc["pairs"]]
    total = cycle_chain_sum(pairs, upper, lower)
    claimed = parse_ext(cert_doc["totalWeight"], "totalWeight")
    if abs(total - claimed) > 1e-9:
        failures.append(
            f"{context}: certificate weight {claimed} recomputes to {total}"
        )
    elif total >= -tol:
        failures.append(f"{context}: certificate cycle is not violating ({total})")


class _InputMismatch(Exception):
    """The --input file does not hash to the report's inputHash."""


def _verify_report(args) -> tuple[dict | None, int]:
    raw_rep = _read_source(args.report)
    rep = _load_json(raw_rep, args.report)
    sub = rep.get("subcommand")
    failures: list[str] = []
    tol = args.tolerance

    def load_input():
        if not args.input:
            raise ParseError(f"verify: --input PROBLEM is required for {sub!r} reports")
        inst, doc, raw = _load_instance(args.input)
        if rep.get("inputHash") != _sha256(raw):
            # rechecking against the wrong instance proves nothing and may
            # not even be well-formed (shapes can differ), so stop here
            failures.append("inputHash does not match the provided problem file")
            raise _InputMismatch
        return inst, doc

    def plan_from_triplets(inst, trips):
        mass = np.zeros((len(inst.mu), len(inst.nu)))
        for i, j, v in trips:
            mass[int(i), int(j)] += parse_ext(v, "plan mass")
        return TransportPlan(mass=mass, mu=inst.mu, nu=inst.nu)

    def reported_potentials():
        pot = rep["potentials"]
        return PotentialPair(
            phi=np.array([parse_ext(v, "phi") for v in pot["phi"]]),
            psi=np.array([parse_ext(v, "psi") for v in pot["psi"]]),
        )

    try:
        _verify_dispatch(sub, rep, args, tol, failures, load_input,
                         plan_from_triplets, reported_potentials)
    except _InputMismatch:
        pass
    except (KeyError, TypeError, IndexError) as err:
        raise ParseError(f"report is malformed: {err!r}") from err

    report = _base_report("verify", raw_rep)
    report["verifiedSubcommand"] = sub
    if failures:
        report["status"] = "failed"
        report["failures"] = failures
        return report, 1
    report["status"] = "verified"
    return report, 0


def _verify_dispatch(sub, rep, args, tol, failures, load_input,
                     plan_from_triplets, reported_potentials) -> None:
    if sub == "solve":
        inst, doc = load_input()
        value = parse_ext(rep.get("value", "inf"), "value")
        if rep.get("status") == "optimal":
            plan = plan_from_triplets(inst, rep["plan"])
            cost = plan_cost(plan, inst.cost)
            if abs(cost - value) > 1e-9:
                failures.append(f"plan cost {cost} does not match value {value}")
            pp = reported_potentials()
            if not check_feasible_potentials(pp, inst.cost, tol=tol):
                failures.append("reported potentials are infeasible")
            slack = inst.cost.entries - pp.sum_matrix()
            for i, j in plan.support_pairs():
                if abs(slack[i, j]) > SUPPORT_EQUALITY_TOL:
                    failures.append(f"potentials not tight on support at ({i}, {j})")
                    break
        else:
            res = solve_min_cost(inst.mu, inst.nu, inst.cost)
            if res.status != rep.get("status"):
                failures.append(f"re-solve gives {res.status}, report says {rep.get('status')}")
    elif sub == "verify-cmon":
        inst, doc = load_input()
        plan = _require_plan(doc, inst, "verify-cmon")
        support = SupportSet.from_plan(plan)
        if rep.get("status") == "monotone":
            cert = check_cyclical_monotonicity(support, inst.cost, tol=tol)
            if cert is not None:
                failures.append("recheck found a violating cycle")
        else:
            pair_set = set(support.pairs)
            for cert_doc in rep.get("certificates", []):
                for i, j in cert_doc["pairs"]:
                    if (int(i), int(j)) not in pair_set:
                        failures.append(f"certificate pair ({i}, {j}) is not in the support")
                _verify_cycle(cert_doc, inst.cost, None, tol, failures, "verify-cmon")
    elif sub == "potentials":
        inst, doc = load_input()
        if rep.get("status") == "ok":
            pp = reported_potentials()
            if not check_feasible_potentials(pp, inst.cost, tol=tol):
                failures.append("reported potentials are infeasible")
            spread = pp.sum_matrix()
            for i, j in rep.get("supportPairs", []):
                gap = abs(float(spread[int(i), int(j)]) - float(inst.cost.entries[int(i), int(j)]))
                if gap > SUPPORT_EQUALITY_TOL:
                    failures.append(f"potentials not tight at ({i}, {j}): gap {gap}")
        else:
            for cert_doc in rep.get("certificates", []):
                _verify_cycle(cert_doc, inst.cost, None, tol, failures, "potentials")
    elif sub == "decompose":
        inst, doc = load_input()
        d = inst.cost.entries
        if rep.get("status") == "decomposable":
            pp = reported_potentials()
            gap = float(np.max(np.abs(pp.sum_matrix() - d)))
            if gap > 1e-9:
                failures.append(f"decomposition misses entries by {gap}")
        else:
            for cert_doc in rep.get("certificates", []):
                x, y = int(cert_doc["x"]), int(cert_doc["y"])
                x2, y2 = int(cert_doc["x2"]), int(cert_doc["y2"])
                resid = float(d[x, y] + d[x2, y2] - d[x, y2] - d[x2, y])
                if abs(resid - float(cert_doc["residual"])) > 1e-9:
                    failures.append("rectangle residual does not recompute")
                elif abs(resid) <= tol:
                    failures.append("rectangle residual is within tolerance of 0")
    elif sub == "subsidy":
        inst, doc = load_input()
        plan = _require_plan(doc, inst, "subsidy")
        if "subsidy" in rep:
            entries = np.array([[parse_ext(v, "subsidy entry") for v in row]
                                for row in rep["subsidy"]["entries"]])
            total = plan_cost(plan, entries)
            claimed = parse_ext(rep["subsidy"]["totalUnderPlan"], "totalUnderPlan")
            alpha = parse_ext(rep["subsidy"]["alpha"], "alpha")
            res = solve_min_cost(inst.mu, inst.nu, inst.cost)
            if abs(total - claimed) > 1e-8:
                failures.append(f"subsidy total recomputes to {total}, not {claimed}")
            if abs((plan_cost(plan, inst.cost) - res.value) - alpha) > 1e-8:
                failures.append("alpha does not match the re-solved optimality gap")
            if verify_subsidy_constraint(entries, plan, inst.cost,
                                         ConstraintTag.S2, tol=tol) is not None:
                failures.append("computed subsidy fails S2 on recheck")
        else:
            f = _matrix_from(doc, "subsidy", inst.cost.entries.shape)
            c = inst.cost.entries
            lower = _masked_lower(c, f)
            for cert_doc in rep.get("certificates", []):
                tag = cert_doc.get("tag")
                if tag in ("W1", "W2"):
                    _verify_cycle(cert_doc, c, lower, tol, failures, tag)
                elif tag in ("S1", "S2"):
                    _verify_cycle(cert_doc, ext_sub_array(c, f), lower, tol,
                                  failures, tag)
    elif sub == "sweep":
        inst, doc = load_input()
        sweep = rep["sweep"]
        cuts = [float(t) for t in sweep["cutoffs"]]
        again = truncation_sweep(inst.mu, inst.nu, inst.cost, cuts)
        for t, claimed, fresh in zip(cuts, sweep["values"], again.values):
            if abs(parse_ext(claimed, "sweep value") - fresh) > 1e-9:
                failures.append(f"sweep value at cutoff {t} recomputes to {fresh}")
    elif sub == "mm-check":
        inst, doc = load_input()
        res = solve_min_cost(inst.mu, inst.nu, inst.cost)
        plan = _plan_from_doc(doc, inst) or res.plan
        support = SupportSet.from_plan(plan)
        gain = build_cyclic_gain(inst.cost, support, int(rep["length"]))
        cands = candidate_couplings(plan, int(rep["length"]), int(rep["seed"]),
                                    int(rep["count"]))
        for k, entry in enumerate(rep.get("couplings", [])):
            fresh = float(np.sum(cands[k].mass * gain.values))
            if abs(fresh - parse_ext(entry["value"], "coupling value")) > 1e-9:
                failures.append(f"coupling {entry['name']} recomputes to {fresh}")
        alpha = float(plan_cost(plan, inst.cost) - res.value)
        if abs(alpha - parse_ext(rep["alpha"], "alpha")) > 1e-8:
            failures.append("alpha does not match the re-solved gap")
    elif sub == "example":
        fresh = run_gallery(rep["name"], rep.get("params", {}))
        params_raw = canonical_bytes({"name": fresh.name, "params": fresh.params})
        if rep.get("inputHash") != _sha256(params_raw):
            failures.append("inputHash does not match the generator parameters")
        old = rep.get("facts", [])
        if len(old) != len(fresh.facts):
            failures.append("fact count changed on rerun")
        else:
            for got, f in zip(old, fresh.facts):
                if got["passed"] != f.passed or \
                        abs(parse_ext(got["observed"], "observed") - f.observed) > 1e-9:
                    failures.append(f"fact {f.description!r} changed on rerun")
    else:
        raise ParseError(f"verify: unknown or missing subcommand {sub!r} in report")


# ---------------------------------------------------------------------------
# Entry point


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="violation tolerance for checks (default 1e-9)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report serialization (default json)")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for seeded constructions (default 0)")
    common.add_argument("--parallel", type=int, default=1, metavar="K",
                        help="worker processes for fan-out subcommands")
    common.add_argument("--figures", metavar="DIR", default=None,
                        help="also render PNG figures into DIR")
    common.add_argument("--timing", action="store_true",
                        help="include wall-clock timing in the report")

    p = argparse.ArgumentParser(
        prog="transportlab",
        description="Finite optimal-transport duality laboratory.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", parents=[common], help="solve an instance")
    sp.add_argument("problem", help="problem JSON file, or - for stdin")

    sp = sub.add_parser("sweep", parents=[common],
                        help="solve under rising cost caps")
    sp.add_argument("problem")
    sp.add_argument("--cutoffs", default="1,2,4,8",
                    help="comma-separated strictly increasing caps")

    sp = sub.add_parser("verify-cmon", parents=[common],
                        help="check a plan's support for cyclical monotonicity")
    sp.add_argument("problem")

    sp = sub.add_parser("potentials", parents=[common],
                        help="extract dual potentials from a plan's support")
    sp.add_argument("problem")

    sp = sub.add_parser("subsidy", parents=[common],
                        help="compute or verify a stabilizing subsidy")
    sp.add_argument("problem")
    sp.add_argument("--check", choices=(*_SUBSIDY_TAGS, "all"), default=None,
                    help="verify one constraint of a provided subsidy")

    sp = sub.add_parser("decompose", parents=[common],
                        help="split the cost into phi(x) + psi(y) or refute it")
    sp.add_argument("problem")

    sp = sub.add_parser("mm-check", parents=[common],
                        help="check the cyclic-gain bound against candidate couplings")
    sp.add_argument("problem")
    sp.add_argument("--length", type=int, default=2, help="cycle length (default 2)")
    sp.add_argument("--count", type=int, default=6,
                    help="number of candidate couplings (default 6)")

    sp = sub.add_parser("example", parents=[common],
                        help="run a gallery instance and its fact checks")
    sp.add_argument("name", choices=GENERATOR_NAMES)
    sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="generator parameter, repeatable")

    sp = sub.add_parser("random", parents=[common],
                        help="emit a reproducible random problem file")
    sp.add_argument("n", type=int)
    sp.add_argument("m", type=int)
    sp.add_argument("seedpos", metavar="seed", type=int)
    sp.add_argument("--inf-density", type=float, default=0.0,
                    help="probability of +inf per cost entry")
    sp.add_argument("--out", default="-", help="output path (default stdout)")

    sp = sub.add_parser("verify", parents=[common],
                        help="re-verify a report against the original problem")
    sp.add_argument("report")
    sp.add_argument("--input", default=None, help="the original problem file")

    return p


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify-cmon": cmd_verify_cmon,
    "potentials": cmd_potentials,
    "subsidy": cmd_subsidy,
    "decompose": cmd_decompose,
    "mm-check": cmd_mm_check,
    "example": cmd_example,
    "random": cmd_random,
    "verify": _verify_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        report, code = _COMMANDS[args.command](args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (VerificationError, AssertionError) as err:
        print(f"internal check failed: {err}", file=sys.stderr)
        return 3
    except TransportLabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if report is not None:
        if args.timing:
            report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
        sys.stdout.buffer.write(emit_report(report, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
