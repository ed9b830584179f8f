"""
JSON-ready reports for non-reciprocal devices built from chiral emitters.

A report is a plain dict with the keys ``schema_version``, ``device_type``,
``inputs``, ``results`` and ``diagnostics``.  Complex numbers are stored as
``[re, im]`` pairs and non-finite floats as the strings ``"inf"``, ``"-inf"``
or ``"nan"`` so the document stays valid JSON.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import scattering as sc

SCHEMA_VERSION = "1.0"
DEVICE_TYPES = ("isolator", "circulator")


def _num(x):
    """Float, or a string for non-finite values."""
    x = float(x)
    if math.isfinite(x):
        return x + 0.0
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _cplx(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _matrix(S: np.ndarray) -> list:
    return [[_cplx(v) for v in row] for row in S]


def isolator_report(chain: sc.ChainSpec) -> dict:
    fwd = sc.chain_transmission(chain, sc.FORWARD)
    bwd = sc.chain_transmission(chain, sc.BACKWARD)
    iso = sc.isolation_metrics(chain)
    ref = sc.chain_smatrix(chain)
    # cross-check the transfer-matrix route against the S-matrix cascade
    route_gap = max(abs(fwd.t - ref["t_forward"]), abs(bwd.t - ref["t_backward"]))
    S = np.array([[fwd.r, bwd.t], [fwd.t, bwd.r]])
    flags = []
    if iso.reciprocal:
        flags.append("reciprocal")
    if math.isinf(iso.isolation_db):
        flags.append("perfect_isolation")
    return {
        "schema_version": SCHEMA_VERSION,
        "device_type": "isolator",
        "inputs": {
            "emitters": [list(e) for e in chain.emitters],
            "phases": list(chain.phases),
        },
        "results": {
            "t_forward": _cplx(fwd.t),
            "t_backward": _cplx(bwd.t),
            "r_left": _cplx(fwd.r),
            "r_right": _cplx(bwd.r),
            "transmission_forward": _num(fwd.intensity),
            "transmission_backward": _num(bwd.intensity),
            "pass_direction": iso.pass_direction,
            "insertion_loss_db": _num(iso.insertion_loss_db),
            "isolation_db": _num(iso.isolation_db),
        },
        "diagnostics": {
            "method": fwd.method,
            "route_discrepancy": _num(route_gap),
            # an absorbing chain is not unitary; the deficit measures absorption
            "unitarity_deficit": _num(sc.unitarity_deficit(S)),
            "flags": flags,
        },
    }


def circulator_report(phi_forward: float | None = None, phi_backward: float | None = None,
                      reflectivity: float = 0.5, beta_plus: float | None = None,
                      beta_minus: float = 0.0, detuning: float = 0.0) -> dict:
    """
    Report for the Mach-Zehnder circulator.

    Give either the arm phases directly or an emitter (``beta_plus``,
    ``beta_minus``, ``detuning``) whose transmission sets the arm amplitudes.
    """
    if beta_plus is not None:
        if phi_forward is not None or phi_backward is not None:
            raise ValueError("give arm phases or emitter betas, not both")
        S = sc.emitter_circulator_smatrix(beta_plus, beta_minus, detuning, reflectivity)
        inputs = {"beta_plus": beta_plus, "beta_minus": beta_minus,
                  "detuning": detuning, "reflectivity": reflectivity}
    else:
        phi_forward = math.pi if phi_forward is None else phi_forward
        phi_backward = 0.0 if phi_backward is None else phi_backward
        S = sc.circulator_smatrix(phi_forward, phi_backward, reflectivity)
        inputs = {"phi_forward": phi_forward, "phi_backward": phi_backward,
                  "reflectivity": reflectivity}
    table = sc.routing_table(S)
    P = np.abs(S) ** 2
    cyclic = all(r["output"] == (r["input"] % 4) + 1 for r in table)
    flags = ["cyclic"] if cyclic and min(r["probability"] for r in table) > 1 - 1e-12 else []
    return {
        "schema_version": SCHEMA_VERSION,
        "device_type": "circulator",
        "inputs": inputs,
        "results": {
            "s_matrix": _matrix(S),
            "probabilities": [[_num(v) for v in row] for row in P],
            "routing": table,
        },
        "diagnostics": {
            "unitarity_deficit": _num(sc.unitarity_deficit(S)),
            "flags": flags,
        },
    }


def device_report(spec: dict) -> dict:
    """
    Dispatch on ``spec["device_type"]``.

    Isolator specs carry ``emitters`` (list of ``[beta_plus, beta_minus]`` or
    ``[beta_plus, beta_minus, detuning]``) and optional ``phases``; circulator
    specs carry the keyword arguments of ``circulator_report``.
    """
    spec = dict(spec)
    kind = spec.pop("device_type", None)
    if kind == "isolator":
        unknown = set(spec) - {"emitters", "phases"}
        if unknown:
            raise ValueError(f"unknown isolator key(s): {', '.join(sorted(unknown))}")
        chain = sc.ChainSpec(tuple(tuple(e) for e in spec["emitters"]), tuple(spec.get("phases", ())))
        return isolator_report(chain)
    if kind == "circulator":
        return circulator_report(**spec)
    raise ValueError(f"device_type must be one of {DEVICE_TYPES}, got {kind!r}")


def dumps_report(report: dict) -> str:
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
