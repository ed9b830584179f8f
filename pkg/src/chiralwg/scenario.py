"""
Scenario documents: strict per-kind schemas, dispatch and deterministic output.

A scenario is a JSON object with a ``kind`` and flat parameters.  Unknown keys
and type mismatches are rejected; defaults are filled in and the resolved
parameter set is written into every output file (``# params {...}`` for CSV,
a ``params`` member for JSON).  Floats are written in their shortest
round-trip form and nothing time-dependent is recorded, so a fixed scenario
gives byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import devices, fields, operators as ops, protocols, scattering as sc
from .dynamics import dimer_analysis, evolve, photon_flux, steady_state, zero_eigenvalue_count
from .errors import ScenarioError
from .master_equation import ChiralChannel, EmitterSpec, build_bidirectional, build_cascaded, build_chiral
from .trajectories import default_workers, mc_trajectories

KINDS = ("scatter", "spectrum", "chain", "evolve", "steady", "trajectories",
         "field-map", "transfer", "dimer-scan", "device")

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    type: str  # float, int, str, bool, floats, pair, rows
    default: object = REQUIRED
    nullable: bool = False
    choices: tuple = ()


_CHANNEL = {
    "n_emitters": Param("int", 1),
    "gamma_R": Param("float", 1.0),
    "gamma_L": Param("float", 0.0),
    "loss": Param("float", 0.0),
    "positions": Param("floats", None, nullable=True),
    "k": Param("float", 2 * math.pi),
    "rabi": Param("floats", None, nullable=True),
    "drive_phases": Param("floats", None, nullable=True),
    "detuning": Param("floats", None, nullable=True),
    "model": Param("str", "chiral", choices=("chiral", "cascaded", "bidirectional")),
}

_TIME = {
    "initial": Param("str", None, nullable=True),
    "t_final": Param("float", 10.0),
    "n_times": Param("int", 101),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "scatter": {
        "beta_plus": Param("float"),
        "beta_minus": Param("float"),
        "detuning": Param("float", 0.0),
    },
    "spectrum": {
        "beta_plus": Param("float"),
        "beta_minus": Param("float"),
        "detuning_min": Param("float", -5.0),
        "detuning_max": Param("float", 5.0),
        "n_points": Param("int", 201),
    },
    "chain": {
        "emitters": Param("rows"),
        "phases": Param("floats", None, nullable=True),
    },
    "evolve": {**_CHANNEL, **_TIME},
    "steady": {**_CHANNEL},
    "trajectories": {**_CHANNEL, **_TIME, "n_traj": Param("int", 1000)},
    "field-map": {
        "input": Param("str", None, nullable=True),
        "n1": Param("float", 1.45),
        "n2": Param("float", 1.0),
        "theta": Param("float", 1.5),
        "x_min": Param("float", -1.0),
        "n_x": Param("int", 201),
        "wavelength_nm": Param("float", 852.0),
        "direction": Param("str", "forward", choices=("forward", "backward")),
    },
    "transfer": {
        "c_g": Param("pair", [math.sqrt(0.5), 0.0]),
        "c_e": Param("pair", [math.sqrt(0.5), 0.0]),
        "pulse": Param("str", "shaped", choices=("shaped", "constant")),
        "kappa": Param("float", 1.0),
        "t_center": Param("float", None, nullable=True),
        "delay": Param("float", 0.0),
        "cap": Param("float", 1.0),
        "optimize": Param("bool", False),
        "loss": Param("float", 0.0),
        "t_final": Param("float", 30.0),
        "n_times": Param("int", 301),
    },
    "dimer-scan": {
        "rabi_grid": Param("floats", [0.0, 0.25, 0.5]),
        "phase_grid": Param("floats", [0.0, math.pi / 2, math.pi]),
        "ratio_grid": Param("floats", [0.0, 1.0]),
        "gamma": Param("float", 1.0),
        "positions": Param("floats", [0.0, 0.25]),
        "k": Param("float", 2 * math.pi),
    },
    "device": {
        "device_type": Param("str", choices=devices.DEVICE_TYPES),
        "emitters": Param("rows", None, nullable=True),
        "phases": Param("floats", None, nullable=True),
        "phi_forward": Param("float", None, nullable=True),
        "phi_backward": Param("float", None, nullable=True),
        "reflectivity": Param("float", 0.5),
        "beta_plus": Param("float", None, nullable=True),
        "beta_minus": Param("float", 0.0),
        "detuning": Param("float", 0.0),
    },
}
for _schema in SCHEMAS.values():
    _schema["seed"] = Param("int", 0)


@dataclass(frozen=True)
class Scenario:
    kind: str
    params: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


# --------------------------------------------------------------- validation


def _float(key, v):
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _coerce(key: str, p: Param, v):
    if v is None:
        if p.nullable:
            return None
        raise ScenarioError(f"{key}: null is not allowed")
    t = p.type
    if t == "float":
        out = _float(key, v)
    elif t == "int":
        if isinstance(v, bool) or not (isinstance(v, int) or (isinstance(v, float) and v.is_integer())):
            raise ScenarioError(f"{key}: expected an integer, got {v!r}")
        out = int(v)
    elif t == "str":
        if not isinstance(v, str):
            raise ScenarioError(f"{key}: expected a string, got {v!r}")
        out = v
    elif t == "bool":
        if not isinstance(v, bool):
            raise ScenarioError(f"{key}: expected true or false, got {v!r}")
        out = v
    elif t in ("floats", "pair"):
        if t == "floats" and isinstance(v, (int, float, str)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list):
            raise ScenarioError(f"{key}: expected a list of numbers, got {v!r}")
        out = [_float(key, x) for x in v]
        if t == "pair" and len(out) != 2:
            raise ScenarioError(f"{key}: expected [re, im], got {v!r}")
    elif t == "rows":
        if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
            raise ScenarioError(f"{key}: expected a list of lists, got {v!r}")
        out = [[_float(key, x) for x in r] for r in v]
    else:  # pragma: no cover
        raise AssertionError(t)
    if p.choices and out not in p.choices:
        raise ScenarioError(f"{key}: must be one of {', '.join(p.choices)}, got {out!r}")
    return out


def validate(doc: dict, kind: str | None = None) -> Scenario:
    """Check a scenario document against its kind's schema and fill defaults."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    doc = dict(doc)
    doc_kind = doc.pop("kind", None)
    if kind is not None and doc_kind is not None and doc_kind != kind:
        raise ScenarioError(f"config kind {doc_kind!r} does not match command {kind!r}")
    kind = kind or doc_kind
    if kind not in SCHEMAS:
        raise ScenarioError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    schema = SCHEMAS[kind]
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ScenarioError(f"unknown key(s) for {kind}: {', '.join(unknown)}")
    params = {}
    for key, p in schema.items():
        if key in doc:
            params[key] = _coerce(key, p, doc[key])
        elif p.default is REQUIRED:
            raise ScenarioError(f"missing required key {key!r} for {kind}")
        else:
            params[key] = p.default
    if not 0 <= params["seed"] < 2**64:
        raise ScenarioError("seed must be an unsigned 64-bit integer")
    return Scenario(kind, params)


def parse_scenario(path, kind: str | None = None) -> Scenario:
    """Read and validate a JSON scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"config {path} is not valid JSON: {exc}") from None
    return validate(doc, kind)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


def serialize(s: Scenario) -> str:
    """Canonical JSON text; ``validate(json.loads(serialize(s)))`` gives ``s`` back."""
    doc = {k: _jsonable(v) for k, v in s.to_dict().items()}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ------------------------------------------------------------------ writers


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v) + 0.0)


def write_csv(path: Path, header: list[str], rows, scenario: Scenario) -> Path:
    buf = io.StringIO(newline="")
    buf.write(f"# params {serialize(scenario)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def write_json(path: Path, doc: dict, scenario: Scenario) -> Path:
    doc = {"params": json.loads(serialize(scenario)), **doc}
    path.write_text(devices.dumps_report(doc), encoding="utf-8", newline="")
    return path


def _c(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real + 0.0)
    return repr(z)


# ------------------------------------------------------------------ runners


def _channel(p: dict) -> ChiralChannel:
    n = p["n_emitters"]
    if n < 1:
        raise ScenarioError("n_emitters must be at least 1")

    def per_site(key, default):
        v = p[key]
        if v is None:
            return [default] * n
        if len(v) == 1:
            return v * n
        if len(v) != n:
            raise ScenarioError(f"{key}: need 1 or {n} values, got {len(v)}")
        return v

    pos = per_site("positions", 0.0)
    rabi = per_site("rabi", 0.0)
    dph = per_site("drive_phases", 0.0)
    det = per_site("detuning", 0.0)
    gR, gL = p["gamma_R"], p["gamma_L"]
    return ChiralChannel(tuple(
        EmitterSpec(pos[j], gR, gL, p["loss"], det[j], rabi[j] * complex(math.cos(dph[j]), math.sin(dph[j])))
        for j in range(n)
    ), p["k"])


def _generator(p: dict):
    ch = _channel(p)
    build = {"chiral": build_chiral, "cascaded": build_cascaded, "bidirectional": build_bidirectional}
    return build[p["model"]](ch)


def _initial(p: dict, n: int) -> np.ndarray:
    label = p["initial"] or "e" * n
    if len(label) != n or set(label) - set("ge"):
        raise ScenarioError(f"initial must be {n} characters from 'g'/'e', got {label!r}")
    return ops.basis_state(label)


def _run_scatter(s, out):
    p = s.params
    r = sc.scatter_spectrum(p["beta_plus"], p["beta_minus"], p["detuning"])
    header = ["beta_plus", "beta_minus", "detuning", "re_t_plus", "im_t_plus", "re_t_minus",
              "im_t_minus", "re_r", "im_r", "A_plus", "A_minus"]
    row = [p["beta_plus"], p["beta_minus"], p["detuning"], r.t_plus.real, r.t_plus.imag,
           r.t_minus.real, r.t_minus.imag, r.r.real, r.r.imag, r.A_plus, r.A_minus]
    f = write_csv(out / "scatter.csv", header, [row], s)
    summary = (f"scatter: t+={_c(r.t_plus)} t-={_c(r.t_minus)} r={_c(r.r)} "
               f"A+={_c(r.A_plus)} A-={_c(r.A_minus)}")
    return summary, [f]


def _run_spectrum(s, out):
    p = s.params
    if p["n_points"] < 1:
        raise ScenarioError("n_points must be positive")
    grid = np.linspace(p["detuning_min"], p["detuning_max"], p["n_points"])
    rows = []
    for d in grid:
        r = sc.scatter_spectrum(p["beta_plus"], p["beta_minus"], float(d))
        rows.append([d, abs(r.t_plus) ** 2, abs(r.t_minus) ** 2, abs(r.r) ** 2, r.A_plus, r.A_minus,
                     r.t_plus.real, r.t_plus.imag, r.t_minus.real, r.t_minus.imag, r.r.real, r.r.imag])
    header = ["detuning", "T_plus", "T_minus", "R", "A_plus", "A_minus", "re_t_plus", "im_t_plus",
              "re_t_minus", "im_t_minus", "re_r", "im_r"]
    f = write_csv(out / "spectrum.csv", header, rows, s)
    return f"spectrum: {len(rows)} points, min T+={min(r[1] for r in rows)!r}", [f]


def _run_chain(s, out):
    p = s.params
    chain = sc.ChainSpec(tuple(tuple(e) for e in p["emitters"]), tuple(p["phases"] or ()))
    rows = []
    for d in (sc.FORWARD, sc.BACKWARD):
        r = sc.chain_transmission(chain, d)
        rows.append([d, r.t.real, r.t.imag, r.r.real, r.r.imag, r.intensity, r.method])
    iso = sc.isolation_metrics(chain)
    header = ["direction", "re_t", "im_t", "re_r", "im_r", "T", "method"]
    f = write_csv(out / "chain.csv", header, rows, s)
    return (f"chain: T_forward={rows[0][5]!r} T_backward={rows[1][5]!r} "
            f"isolation_db={iso.isolation_db!r}"), [f]


def _population_rows(times, states):
    pops = ops.excited_populations(states)
    pur = np.real(np.einsum("tij,tji->t", states, states))
    return [[t, *pp, u] for t, pp, u in zip(times, pops, pur)]


def _run_evolve(s, out):
    p = s.params
    gen = _generator(p)
    traj = evolve(gen, _initial(p, gen.n_sites), t_final=p["t_final"], n_times=p["n_times"])
    header = ["t"] + [f"pop_e_{j}" for j in range(gen.n_sites)] + ["purity"]
    f = write_csv(out / "evolve.csv", header, _population_rows(traj.times, traj.states), s)
    final = traj.populations()[-1]
    return f"evolve: final populations {[float(v) for v in final]}", [f]


def _run_steady(s, out):
    p = s.params
    gen = _generator(p)
    ss = steady_state(gen)
    doc = {
        "degenerate": ss.degenerate,
        "null_dimension": ss.dimension,
        "zero_eigenvalues": zero_eigenvalue_count(gen),
        "residual": ss.residual,
    }
    if ss.rho is not None:
        doc["rho_real"] = np.real(ss.rho).tolist()
        doc["rho_imag"] = np.imag(ss.rho).tolist()
        doc["purity"] = ops.purity(ss.rho)
        doc["populations"] = ops.excited_populations(ss.rho).tolist()
        doc["flux"] = photon_flux(gen, ss.rho)
        if gen.n_sites == 2:
            ph = _channel(p).phases
            rep = dimer_analysis(ss.rho, ph[1] - ph[0])
            doc["dimer"] = {"purity": rep.purity, "fidelity": rep.fidelity,
                            "alpha": [rep.alpha.real, rep.alpha.imag],
                            "singlet_weight": rep.singlet_weight, "residual": rep.residual}
    f = write_json(out / "steady.json", doc, s)
    line = f"steady: purity={doc['purity']!r}" if "purity" in doc else "steady: degenerate null space"
    return line, [f]


def _run_trajectories(s, out):
    p = s.params
    gen = _generator(p)
    mc = mc_trajectories(gen, _initial(p, gen.n_sites), t_final=p["t_final"], n_traj=p["n_traj"],
                         seed=p["seed"], n_times=p["n_times"], workers=default_workers())
    header = ["t"] + [f"pop_e_{j}" for j in range(gen.n_sites)] + ["purity"]
    f1 = write_csv(out / "trajectories.csv", header, _population_rows(mc.times, mc.rho), s)
    labels = mc.record.labels
    rows = [[i, t, labels[c]] for i, (ts, cs) in enumerate(zip(mc.record.jump_times, mc.record.channels))
            for t, c in zip(ts, cs)]
    f2 = write_csv(out / "jumps.csv", ["trajectory", "t", "channel"], rows, s)
    return f"trajectories: {p['n_traj']} trajectories, {len(rows)} jumps", [f1, f2]


def _run_field_map(s, out):
    p = s.params
    if p["input"]:
        fm = fields.load_field_map(p["input"])
        fm = fields.longitudinal_component(fm)
    else:
        x = np.linspace(p["x_min"], 0.0, p["n_x"])
        fm = fields.tir_evanescent_field(p["n1"], p["n2"], p["theta"], x,
                                         wavelength_nm=p["wavelength_nm"], direction=p["direction"])
    spin = fields.photon_spin(fm)
    weight = np.sum(np.abs(fm.E) ** 2, axis=-1)
    mean_spin = (np.sum(spin * weight[..., None], axis=(0, 1)) / weight.sum()).tolist()
    f1 = out / "field_map.csv"
    text = fields.dumps_field_map(fm)
    f1.write_text(f"# params {serialize(s)}\n" + text, encoding="utf-8", newline="")
    doc = {"mean_photon_spin": mean_spin}
    if fm.x.size >= 3 and p["input"] is None:
        div = fields.divergence(fm)
        doc["divergence_residual"] = float(np.abs(div).max() / np.abs(fm.E).max())
    f2 = write_json(out / "field_map.json", doc, s)
    return f"field-map: mean photon spin {[round(v, 6) for v in mean_spin]}", [f1, f2]


def _run_transfer(s, out):
    p = s.params
    c_g = complex(*p["c_g"])
    c_e = complex(*p["c_e"])
    if p["pulse"] == "constant":
        pulse = protocols.ConstantPulse(p["kappa"])
    else:
        tc = p["t_final"] / 2 if p["t_center"] is None else p["t_center"]
        pulse = protocols.PulseFamily(p["kappa"], tc, p["delay"], p["cap"])
        if p["optimize"]:
            pulse = protocols.optimize_pulse(p["t_final"], p["cap"], p["loss"], start=pulse)
    r = protocols.state_transfer(c_g, c_e, pulse, p["t_final"], p["loss"], p["n_times"])
    f1 = write_csv(out / "transfer.csv", ["t", "gamma1", "gamma2"],
                   zip(r.times, r.gamma1, r.gamma2), s)
    doc = {"fidelity": r.fidelity, "raw_fidelity": r.raw_fidelity,
           "transfer_probability": r.transfer_probability, "phase_correction": r.phase_correction,
           "pulse": {k: _jsonable(v) for k, v in vars(pulse).items()}}
    f2 = write_json(out / "transfer.json", doc, s)
    return f"transfer: fidelity={r.fidelity!r}", [f1, f2]


def _run_dimer_scan(s, out):
    p = s.params
    if len(p["positions"]) != 2:
        raise ScenarioError("positions must hold two values")
    res = protocols.dimer_scan(p["rabi_grid"], p["phase_grid"], p["ratio_grid"], p["gamma"],
                               tuple(p["positions"]), p["k"], workers=default_workers())
    rows = []
    ax = res.axes
    for i, a in enumerate(ax["rabi"]):
        for j, b in enumerate(ax["phase"]):
            for m, c in enumerate(ax["ratio"]):
                rows.append([a, b, c, res.purity[i, j, m], res.fidelity[i, j, m], res.flux[i, j, m],
                             bool(res.degenerate[i, j, m])])
    f = write_csv(out / "dimer_scan.csv",
                  ["rabi", "phase", "ratio", "purity", "fidelity", "flux", "degenerate"], rows, s)
    best = np.nanmax(res.purity) if not np.all(np.isnan(res.purity)) else math.nan
    return f"dimer-scan: {len(rows)} points, max purity={float(best)!r}", [f]


def _run_device(s, out):
    p = dict(s.params)
    p.pop("seed")
    kind = p["device_type"]
    if kind == "isolator":
        if p["emitters"] is None:
            raise ScenarioError("isolator needs 'emitters'")
        spec = {"device_type": kind, "emitters": p["emitters"], "phases": p["phases"] or []}
    else:
        spec = {k: p[k] for k in ("device_type", "phi_forward", "phi_backward", "reflectivity",
                                  "beta_plus", "beta_minus", "detuning")}
    rep = devices.device_report(spec)
    f = write_json(out / "device.json", rep, s)
    res = rep["results"]
    if kind == "isolator":
        line = f"device: isolator isolation_db={res['isolation_db']} insertion_loss_db={res['insertion_loss_db']}"
    else:
        line = "device: circulator " + " ".join(f"{r['input']}->{r['output']}" for r in res["routing"])
    return line, [f]


_RUNNERS = {
    "scatter": _run_scatter,
    "spectrum": _run_spectrum,
    "chain": _run_chain,
    "evolve": _run_evolve,
    "steady": _run_steady,
    "trajectories": _run_trajectories,
    "field-map": _run_field_map,
    "transfer": _run_transfer,
    "dimer-scan": _run_dimer_scan,
    "device": _run_device,
}


def run_scenario(s: Scenario, out_dir=".") -> tuple[str, list[Path]]:
    """Run a validated scenario, write its artifacts and return the summary line and paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[s.kind](s, out)
