"""Batch front end: JSON scenario configs in, JSON or CSV reports out.

Exit codes: 0 when every task ran and met its declared expectation, 1 when
an expectation was not met, 2 for configuration or execution errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import DEFAULT_TOLERANCES, Tolerances
from .entanglement import (
    BipartitionSpec,
    DEFAULT_NEGATIVITY_CAP,
    irreducibility_certificate,
    log_negativity,
    theorem5_bound_check,
)
from .exceptions import ConfigError, GssError, StateFileError
from .protocols import ReductionPlan, bell_basis, coalition_attack, devetak_winter_rate, reduce_gss, verify_gss
from .qmath import QuantumState, Role, Subsystem, SystemLayout, random_unitary, trace_norm, partial_transpose
from .states import (
    GssSpec,
    PrivateStateSpec,
    apply_w_wiring,
    example2_orthogonal,
    example2_orthogonal_spec,
    example2_werner,
    ghz_spec,
    ghz_state,
    gss_from_spec,
    network_wiring,
    private_network,
    random_chain_spec,
    random_gss_spec,
    upsilon1,
    upsilon2,
)

SCHEMA_VERSION = 1
STATE_FORMAT_HEADER = "gss-states-state 1"
TABLE_COLUMNS = ("d", "p", "trace_norm", "formula", "abs_delta", "log_negativity_bits", "status")
SUMMARY_COLUMNS = ("task", "value", "direction", "tol", "outcome", "expectation_met")

__all__ = [
    "SCHEMA_VERSION",
    "ScenarioConfig",
    "RunReport",
    "parse_config",
    "load_config",
    "run_scenario",
    "table_example2",
    "example2_formula",
    "import_state",
    "export_state",
    "main",
]


# ---------------------------------------------------------------------------
# state files


def export_state(s: QuantumState, path) -> None:
    """Write ``s`` in the canonical text format (row-major ``re im`` pairs, 17 significant digits)."""
    lines = [STATE_FORMAT_HEADER, f"kind {'pure' if s.is_pure else 'mixed'}", f"subsystems {len(s.layout)}"]
    for sub in s.layout:
        if any(ch.isspace() for ch in sub.label) or not sub.label:
            raise StateFileError(f"label {sub.label!r} cannot be written (whitespace)")
        lines.append(f"{sub.label} {sub.player} {sub.role.value} {sub.dim}")
    flat = s.data.reshape(-1)
    lines.append(f"data {flat.size}")
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in flat)
    lines.append("end")
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def import_state(path, *, validate: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumState:
    """Read a state written by :func:`export_state`.

    With ``validate`` a density matrix must also be positive semidefinite.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StateFileError(f"cannot read state file {path}: {exc}") from exc
    lines = text.splitlines()
    pos = 0

    def take(what: str) -> list[str]:
        nonlocal pos
        if pos >= len(lines):
            raise StateFileError(f"{path}: truncated file, expected {what} at line {pos + 1}")
        pos += 1
        return lines[pos - 1].split()

    if " ".join(take("header")) != STATE_FORMAT_HEADER:
        raise StateFileError(f"{path}: line 1 is not the header {STATE_FORMAT_HEADER!r}")
    kind = take("kind line")
    if len(kind) != 2 or kind[0] != "kind" or kind[1] not in ("pure", "mixed"):
        raise StateFileError(f"{path}: line 2 must be 'kind pure' or 'kind mixed'")
    count = take("subsystem count")
    if len(count) != 2 or count[0] != "subsystems" or not count[1].isdigit():
        raise StateFileError(f"{path}: line 3 must be 'subsystems <n>'")
    subs = []
    for _ in range(int(count[1])):
        f = take("subsystem line")
        try:
            label, player, role, dim = f
            subs.append(Subsystem(label, int(player), Role(role), int(dim)))
        except (ValueError, TypeError) as exc:
            raise StateFileError(f"{path}: line {pos}: bad subsystem line {' '.join(f)!r} ({exc})") from exc
    try:
        layout = SystemLayout(tuple(subs))
    except GssError as exc:
        raise StateFileError(f"{path}: {exc}") from exc
    header = take("data line")
    if len(header) != 2 or header[0] != "data" or not header[1].isdigit():
        raise StateFileError(f"{path}: line {pos} must be 'data <count>'")
    n = int(header[1])
    expected = layout.total_dim if kind[1] == "pure" else layout.total_dim**2
    if n != expected:
        raise StateFileError(f"{path}: data count {n} does not match layout ({expected} entries expected)")
    vals = np.empty(n, dtype=complex)
    for k in range(n):
        f = take(f"entry {k + 1} of {n}")
        try:
            re, im = f
            vals[k] = complex(float(re), float(im))
        except ValueError as exc:
            raise StateFileError(f"{path}: line {pos}: bad entry {' '.join(f)!r}") from exc
    if take("end marker") != ["end"]:
        raise StateFileError(f"{path}: line {pos}: expected 'end'")
    data = vals if kind[1] == "pure" else vals.reshape(layout.total_dim, layout.total_dim)
    s = QuantumState(layout, data, tol=tol)
    return s.validate(tol) if validate else s


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Example-2 table


def example2_formula(d: int, p: float) -> float:
    return 1 + (2 / d**2 + 2 / d) * (1 + 2 * p)


def table_example2(d_list, p_list, max_dim: int = DEFAULT_NEGATIVITY_CAP) -> list[dict]:
    """Partial-transpose trace norm of the Werner-shielded Example-2 state versus the closed form."""
    rows = []
    for d in d_list:
        for p in p_list:
            d, p = int(d), float(p)
            formula = example2_formula(d, p)
            dim = 8 * 4 * d**4
            if dim > max_dim:
                rows.append({"d": d, "p": p, "trace_norm": None, "formula": formula, "abs_delta": None,
                             "log_negativity_bits": None, "status": f"skipped: dimension {dim} > cap {max_dim}"})
                continue
            g = example2_werner(d, p)
            tn = trace_norm(partial_transpose(g, ["A", "A'1", "A'2"]))
            rows.append({"d": d, "p": p, "trace_norm": tn, "formula": formula, "abs_delta": abs(tn - formula),
                         "log_negativity_bits": math.log2(tn), "status": "ok"})
    return rows


# ---------------------------------------------------------------------------
# configuration schema

_REQUIRED = object()

SCENARIO_PARAMS: dict[str, dict[str, Any]] = {
    "ghz": {"n": _REQUIRED, "d": 2},
    "upsilon1": {},
    "upsilon2": {},
    "gss_spec": {"n": _REQUIRED, "d": 2, "shield_dim": 2, "seed": None, "pure": False, "sigma_rank": None,
                 "generator": "local"},
    "private_network": {"n": 3, "d": 2, "shield_dim": 1, "seed": None, "pure": True, "wired": True},
    "example2_orthogonal": {"weights": _REQUIRED, "flags": "product"},
    "example2_werner": {"d": _REQUIRED, "p": _REQUIRED},
    "file": {"path": _REQUIRED},
}
SPEC_KINDS = {"ghz", "gss_spec", "example2_orthogonal"}

TASK_PARAMS: dict[str, dict[str, Any]] = {
    "verify": {"exhaustive": False},
    "attack": {"coalition": _REQUIRED, "target": _REQUIRED, "basis": "computational", "basis_seed": None},
    "reduce": {"keep": _REQUIRED, "mode": "sample", "outcome": None, "correction_target": None,
               "keep_record": True},
    "rate": {},
    "negativity": {"side_a": None, "player": None, "max_dim": DEFAULT_NEGATIVITY_CAP},
    "theorem5": {"player": None},
    "irreducibility": {},
    "table_example2": {"d_list": [2, 3], "p_list": [0.0, 0.1, 0.25, 0.5], "max_dim": DEFAULT_NEGATIVITY_CAP},
}
EXPECT_KEYS = {"verdict", "status", "value", "tol"}
TOP_KEYS = {"schema_version", "scenario", "tasks", "tolerances", "format", "seed"}
FORMATS = ("json", "csv")


@dataclass
class TaskConfig:
    task: str
    params: dict
    expect: dict = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    kind: str
    params: dict
    tasks: list[TaskConfig]
    tolerances: Tolerances = DEFAULT_TOLERANCES
    format: str = "json"
    seed: int = 0
    source: dict = field(default_factory=dict)


def _fill(where: str, given: dict, schema: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(given) - set(schema)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}; allowed {sorted(schema)}")
    out = {}
    for key, default in schema.items():
        if key in given:
            out[key] = given[key]
        elif default is _REQUIRED:
            raise ConfigError(f"{where}: missing required key {key!r}")
        else:
            out[key] = default
    return out


def _need_int(where, value, lo=None):
    if isinstance(value, bool) or not isinstance(value, int) or (lo is not None and value < lo):
        raise ConfigError(f"{where}: expected an integer{'' if lo is None else f' >= {lo}'}, got {value!r}")


def _need_number(where, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")


def _check_scenario(kind: str, p: dict) -> None:
    w = f"scenario[{kind}]"
    for key in ("n", "d", "shield_dim", "sigma_rank"):
        if key in p and p[key] is not None:
            _need_int(f"{w}.{key}", p[key], 1 if key in ("shield_dim", "sigma_rank") else 2)
    if "seed" in p and p["seed"] is not None:
        _need_int(f"{w}.seed", p["seed"], 0)
    if kind == "gss_spec" and p["generator"] not in ("local", "chain"):
        raise ConfigError(f"{w}.generator: expected 'local' or 'chain'")
    if kind == "example2_orthogonal":
        wts = p["weights"]
        if not isinstance(wts, list) or len(wts) != 4:
            raise ConfigError(f"{w}.weights: expected a list of four numbers")
        for x in wts:
            _need_number(f"{w}.weights", x)
        if p["flags"] not in ("product", "bell"):
            raise ConfigError(f"{w}.flags: expected 'product' or 'bell'")
    if kind == "example2_werner":
        _need_number(f"{w}.p", p["p"])
    if kind == "file" and not isinstance(p["path"], str):
        raise ConfigError(f"{w}.path: expected a string")


def _check_task(i: int, t: TaskConfig, kind: str, scenario: dict) -> None:
    w = f"tasks[{i}]({t.task})"
    p = t.params
    if t.task in ("theorem5", "irreducibility"):
        if kind not in SPEC_KINDS or (kind == "example2_orthogonal" and scenario["flags"] != "product"):
            raise ConfigError(f"{w}: needs a scenario built from a spec ({sorted(SPEC_KINDS)}, product flags)")
    if t.task == "attack":
        if not isinstance(p["coalition"], list) or not all(isinstance(x, str) for x in p["coalition"]):
            raise ConfigError(f"{w}.coalition: expected a list of labels")
        _need_int(f"{w}.target", p["target"], 1)
        if p["basis"] not in ("computational", "bell", "random"):
            raise ConfigError(f"{w}.basis: expected computational, bell or random")
    if t.task == "reduce":
        if not isinstance(p["keep"], list) or len(p["keep"]) < 2:
            raise ConfigError(f"{w}.keep: expected a list of at least two players")
        for x in p["keep"]:
            _need_int(f"{w}.keep", x, 1)
        if p["mode"] not in ("sample", "average"):
            raise ConfigError(f"{w}.mode: expected 'sample' or 'average'")
    if t.task == "negativity":
        if (p["side_a"] is None) == (p["player"] is None) and kind != "example2_werner":
            raise ConfigError(f"{w}: give exactly one of side_a or player")
    if t.task == "table_example2":
        for key in ("d_list", "p_list"):
            if not isinstance(p[key], list) or not p[key]:
                raise ConfigError(f"{w}.{key}: expected a nonempty list")
        for x in p["d_list"]:
            _need_int(f"{w}.d_list", x, 2)
    unknown = set(t.expect) - EXPECT_KEYS
    if unknown:
        raise ConfigError(f"{w}.expect: unknown key(s) {sorted(unknown)}")
    if "value" in t.expect:
        _need_number(f"{w}.expect.value", t.expect["value"])


def parse_config(raw: dict) -> ScenarioConfig:
    """Validate a decoded config object completely before anything runs."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"config: unknown key(s) {sorted(unknown)}; allowed {sorted(TOP_KEYS)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    scen = raw.get("scenario")
    if not isinstance(scen, dict) or "kind" not in scen:
        raise ConfigError("config.scenario: expected an object with a 'kind'")
    kind = scen["kind"]
    if kind not in SCENARIO_PARAMS:
        raise ConfigError(f"config.scenario.kind: unknown kind {kind!r}; allowed {sorted(SCENARIO_PARAMS)}")
    params = _fill(f"scenario[{kind}]", {k: v for k, v in scen.items() if k != "kind"}, SCENARIO_PARAMS[kind])
    _check_scenario(kind, params)
    tasks_raw = raw.get("tasks")
    if not isinstance(tasks_raw, list) or not tasks_raw:
        raise ConfigError("config.tasks: expected a nonempty list")
    tasks = []
    for i, t in enumerate(tasks_raw):
        if not isinstance(t, dict) or "task" not in t:
            raise ConfigError(f"tasks[{i}]: expected an object with a 'task'")
        name = t["task"]
        if name not in TASK_PARAMS:
            raise ConfigError(f"tasks[{i}].task: unknown task {name!r}; allowed {sorted(TASK_PARAMS)}")
        expect = t.get("expect", {})
        if not isinstance(expect, dict):
            raise ConfigError(f"tasks[{i}].expect: expected an object")
        body = {k: v for k, v in t.items() if k not in ("task", "expect")}
        tc = TaskConfig(name, _fill(f"tasks[{i}]({name})", body, TASK_PARAMS[name]), dict(expect))
        _check_task(i, tc, kind, params)
        tasks.append(tc)
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError("config.tolerances: expected an object")
    try:
        tol = DEFAULT_TOLERANCES.with_overrides(**tol_raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config.tolerances: {exc}") from exc
    fmt = raw.get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError(f"config.format: expected one of {FORMATS}")
    seed = raw.get("seed", 0)
    _need_int("config.seed", seed, 0)
    return ScenarioConfig(kind, params, tasks, tol, fmt, seed, raw)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunReport:
    schema_version: int
    scenario: dict
    results: list[dict]
    provenance: dict
    exit_code: int
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "scenario": self.scenario, "results": self.results,
                "provenance": self.provenance, "exit_code": self.exit_code, "timings": self.timings}

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(data["schema_version"], data["scenario"], data["results"], data["provenance"],
                   data["exit_code"], data.get("timings", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        tables = [r for r in self.results if r["task"] == "table_example2" and r.get("rows")]
        if tables:
            writer = csv.DictWriter(buf, TABLE_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in tables:
                for row in r["rows"]:
                    writer.writerow({k: ("" if row[k] is None else _csv_value(row[k])) for k in TABLE_COLUMNS})
        else:
            writer = csv.DictWriter(buf, SUMMARY_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in self.results:
                met = r.get("expectation", {}).get("met")
                writer.writerow({"task": r["task"], "value": _csv_value(r.get("value")),
                                 "direction": r.get("direction") or "", "tol": _csv_value(r.get("tol")),
                                 "outcome": r.get("outcome") or (r["error"]["type"] if r.get("error") else ""),
                                 "expectation_met": "" if met is None else str(met).lower()})
        return buf.getvalue()


def _csv_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _seed(value, default: int) -> int:
    return default if value is None else value


def build_scenario(cfg: ScenarioConfig) -> tuple[QuantumState | None, GssSpec | None]:
    """The scenario's state and, for spec-backed kinds, its spec."""
    kind, p = cfg.kind, cfg.params
    if kind == "ghz":
        return ghz_state(p["n"], p["d"]), ghz_spec(p["n"], p["d"])
    if kind == "upsilon1":
        return upsilon1(), None
    if kind == "upsilon2":
        return upsilon2(), None
    if kind == "gss_spec":
        gen = random_gss_spec if p["generator"] == "local" else random_chain_spec
        spec = gen(p["n"], p["d"], p["shield_dim"], _seed(p["seed"], cfg.seed), sigma_rank=p["sigma_rank"],
                   pure=p["pure"])
        return gss_from_spec(spec), spec
    if kind == "private_network":
        n, d, sd = p["n"], p["d"], p["shield_dim"]
        rng = np.random.default_rng(_seed(p["seed"], cfg.seed))
        specs = {}
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                specs[(a, b)] = PrivateStateSpec.bell(d) if sd == 1 else PrivateStateSpec.random(d, sd, rng, p["pure"])
        s = private_network(n, specs)
        return (apply_w_wiring(s, network_wiring(n)) if p["wired"] else s), None
    if kind == "example2_orthogonal":
        if p["flags"] == "product":
            s0, s1 = np.diag([1.0, 0, 0, 0]), np.diag([0, 0, 0, 1.0])
            pairs = ((s0, s1),) * 3
            spec = example2_orthogonal_spec(p["weights"], *pairs)
            return example2_orthogonal(p["weights"], *pairs), spec
        r = 1 / math.sqrt(2)
        phi_p, phi_m = np.array([r, 0, 0, r]), np.array([r, 0, 0, -r])
        pair = (np.outer(phi_p, phi_p), np.outer(phi_m, phi_m))
        return example2_orthogonal(p["weights"], pair, pair, pair), None
    if kind == "example2_werner":
        return example2_werner(p["d"], p["p"]), None
    if kind == "file":
        return import_state(p["path"], tol=cfg.tolerances), None
    raise ConfigError(f"unknown scenario kind {kind!r}")


def _expectation(expect: dict, result: dict) -> dict | None:
    if not expect:
        return None
    met = True
    if "verdict" in expect:
        met &= result.get("outcome") == expect["verdict"]
    if "status" in expect:
        met &= result.get("outcome") == expect["status"]
    if "value" in expect:
        tol = float(expect.get("tol", 1e-8))
        v = result.get("value")
        met &= v is not None and abs(v - float(expect["value"])) <= tol
    return {**expect, "met": bool(met)}


def _run_task(t: TaskConfig, state: QuantumState | None, spec: GssSpec | None, cfg: ScenarioConfig) -> dict:
    tol = cfg.tolerances
    p = t.params
    if t.task == "verify":
        rep = verify_gss(state, tol, exhaustive=p["exhaustive"])
        details = rep.to_dict()
        details.pop("tolerances")
        return {"value": rep.max_chi, "direction": "exact", "tol": tol.verdict, "outcome": rep.verdict.value,
                "quantity": "max Holevo information (bits)", "details": details}
    if t.task == "attack":
        dc = math.prod(state.layout[lab].dim for lab in p["coalition"])
        basis = None
        if p["basis"] == "bell":
            basis = bell_basis()
        elif p["basis"] == "random":
            basis = random_unitary(dc, _seed(p["basis_seed"], cfg.seed))
        mi = coalition_attack(state, p["coalition"], p["target"], basis, tol)
        return {"value": mi, "direction": "exact", "tol": tol.verdict, "outcome": None,
                "quantity": "attack mutual information (bits)", "details": {"basis": p["basis"]}}
    if t.task == "reduce":
        plan = ReductionPlan.for_keep(state.layout.players, p["keep"], p["correction_target"])
        reduced = reduce_gss(state, plan, p["mode"], cfg.seed, outcome=p["outcome"],
                             keep_record=bool(p["keep_record"]), tol=tol)
        rep = verify_gss(reduced, tol)
        return {"value": rep.max_chi, "direction": "exact", "tol": tol.verdict, "outcome": rep.verdict.value,
                "quantity": "max Holevo information of reduced state (bits)",
                "details": {"keep": list(plan.keep), "correction_target": plan.correction_target,
                            "labels": list(reduced.layout.labels)}}
    if t.task == "rate":
        return {"value": devetak_winter_rate(state, tol), "direction": "exact", "tol": tol.verdict,
                "outcome": None, "quantity": "Devetak-Winter rate (bits)", "details": {}}
    if t.task == "negativity":
        if p["player"] is not None:
            cut = BipartitionSpec.player_vs_rest(state.layout, p["player"])
        elif p["side_a"] is not None:
            cut = BipartitionSpec.from_side(state.layout, p["side_a"])
        else:
            cut = BipartitionSpec.from_side(state.layout, ["A", "A'1", "A'2"], "Alice vs rest")
        value = log_negativity(state, cut, p["max_dim"])
        return {"value": value, "direction": "exact", "tol": 1e-9, "outcome": None,
                "quantity": "log-negativity (bits)", "details": {"cut": cut.to_dict()}}
    if t.task == "theorem5":
        rep = theorem5_bound_check(spec, p["player"], tol=tol)
        return {"value": rep.value, "direction": rep.direction.value, "tol": rep.details["noise_slack"],
                "outcome": rep.status, "quantity": rep.quantity,
                "details": _jsonable({k: v for k, v in rep.details.items()} | {"certificate": rep.certificate})}
    if t.task == "irreducibility":
        rep = irreducibility_certificate(spec, tol)
        return {"value": rep.value, "direction": rep.direction.value, "tol": tol.verdict, "outcome": rep.status,
                "quantity": rep.quantity, "details": _jsonable(rep.details | {"certificate": rep.certificate})}
    if t.task == "table_example2":
        rows = table_example2(p["d_list"], p["p_list"], p["max_dim"])
        worst = max((r["abs_delta"] for r in rows if r["abs_delta"] is not None), default=None)
        return {"value": worst, "direction": "exact", "tol": 1e-8, "outcome": None,
                "quantity": "max |trace norm - closed form|", "rows": rows, "details": {}}
    raise ConfigError(f"unknown task {t.task!r}")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Execute every task of ``cfg`` in order; task failures are recorded, not raised."""
    timings = {}
    results = []
    t0 = time.perf_counter()
    state = spec = None
    build_error = None
    needs_state = any(t.task != "table_example2" for t in cfg.tasks)
    if needs_state:
        try:
            state, spec = build_scenario(cfg)
        except (GssError, ValueError) as exc:
            build_error = {"type": type(exc).__name__, "message": str(exc)}
    timings["build_s"] = time.perf_counter() - t0
    for t in cfg.tasks:
        start = time.perf_counter()
        entry = {"task": t.task, "params": _jsonable(t.params)}
        if build_error is not None and t.task != "table_example2":
            entry.update({"value": None, "direction": None, "tol": None, "outcome": None, "error": build_error})
        else:
            try:
                entry.update(_jsonable(_run_task(t, state, spec, cfg)))
                entry["error"] = None
            except (GssError, ValueError, KeyError) as exc:
                entry.update({"value": None, "direction": None, "tol": None, "outcome": None,
                              "error": {"type": type(exc).__name__, "message": str(exc)}})
        exp = _expectation(t.expect, entry)
        if exp is not None:
            entry["expectation"] = exp
        results.append(entry)
        timings[f"task{len(results) - 1}_{t.task}_s"] = time.perf_counter() - start
    if any(r["error"] for r in results):
        code = 2
    elif any(not r.get("expectation", {"met": True})["met"] for r in results):
        code = 1
    else:
        code = 0
    provenance = {"artifact_version": __version__, "numpy_version": np.__version__, "seed": cfg.seed,
                  "tolerances": cfg.tolerances.as_dict()}
    scenario = {"kind": cfg.kind, **_jsonable(cfg.params)}
    return RunReport(SCHEMA_VERSION, scenario, results, provenance, code, timings)


# ---------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gss-states", description="Run a GSS-state scenario config.")
    ap.add_argument("--config", required=True, help="path to a JSON scenario config")
    ap.add_argument("--tol", type=float, default=None, help="override the Holevo verdict threshold (bits)")
    ap.add_argument("--seed", type=int, default=None, help="override the config's seed")
    ap.add_argument("--out", default=None, help="write the report here (atomically) instead of stdout")
    ap.add_argument("--format", choices=FORMATS, default=None, help="report format (default: config's)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be positive")
            cfg.tolerances = cfg.tolerances.with_overrides(verdict=args.tol)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run_scenario(cfg)
    fmt = args.format or cfg.format
    text = report.to_json() if fmt == "json" else report.to_csv()
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    for r in report.results:
        if r.get("error"):
            print(f"task {r['task']} failed: {r['error']['type']}: {r['error']['message']}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
