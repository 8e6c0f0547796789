"""Whole-instance summary: primal, both duals, gap, flags, certificates.

The JSON form is deterministic (17-significant-digit floats, fixed key
order) so identical inputs produce byte-identical reports.
"""

from __future__ import annotations

import numpy as np

from .duality import build_tangent_certificate, primal_value, verify_gap_certificate
from .instances import _member_to_dict, dumps
from .lagrange import LagrangianContext, ld_value, lp_value
from .objectives import INF

CERT_LADDER = (1.0, 1e-3, 1e-6)


def _certificate_entries(instance, minimizer) -> list[dict]:
    entries = []
    if minimizer is None:
        return entries
    for eps in CERT_LADDER:
        cert = None
        for kind in ("thm43", "thm42"):
            cert = build_tangent_certificate(instance, minimizer, eps, kind=kind)
            if cert is not None:
                break
        if cert is None:
            entries.append({"eps": eps, "kind": None, "holds": False,
                            "note": "no tangent member available"})
            continue
        check = verify_gap_certificate(instance, cert)
        entry = {
            "eps": eps,
            "kind": cert.kind,
            "holds": check.holds,
            "x": list(cert.x),
            "psi": _member_to_dict(cert.psi),
        }
        if cert.phi is not None:
            entry["phi"] = _member_to_dict(cert.phi)
        entry["conditions"] = dict(check.conditions)
        entries.append(entry)
    return entries


def run_report(instance, tol: float = 1e-6, certificates: bool = True) -> dict:
    """All duality quantities for one instance, as a plain dict."""
    ctx = LagrangianContext(instance)
    p = primal_value(instance)
    d = ld_value(ctx)  # same sweep tables as the conjugate dual
    lp = lp_value(ctx)
    gap = INF if abs(d.value) == INF else p.value - d.value
    flags = sorted(set(p.flags + d.flags + lp.flags))
    weak_ok = not (np.isfinite(gap) and gap < -tol)
    if not weak_ok:
        flags.append("weak_duality_violated")
    report = {
        "name": instance.name,
        "primal": p.value,
        "dcp": d.value,
        "ld": d.value,
        "lp": lp.value,
        "gap": gap,
        "flags": flags,
        "attaining_psi": None if d.attaining is None else _member_to_dict(d.attaining),
        "certificates": _certificate_entries(instance, p.minimizer) if certificates else [],
        "weak_duality_ok": weak_ok,
    }
    return report


def report_json(report: dict) -> str:
    return dumps(report) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        if value == INF:
            return "inf"
        if value == -INF:
            return "-inf"
        return f"{value:.12g}"
    return str(value)


def report_table(report: dict) -> str:
    """Fixed-width text table over the scalar report fields."""
    rows = [("instance", report["name"] or "(unnamed)")]
    for key in ("primal", "dcp", "ld", "lp", "gap"):
        rows.append((key, _fmt(report[key])))
    rows.append(("flags", ", ".join(report["flags"]) or "-"))
    att = report["attaining_psi"]
    if att is None:
        rows.append(("attaining psi", "-"))
    else:
        u = "(" + ", ".join(_fmt(float(v)) for v in att["u"]) + ")"
        rows.append(
            ("attaining psi", f"a={_fmt(att['a'])} u={u} c={_fmt(att['c'])}")
        )
    for entry in report["certificates"]:
        label = f"certificate eps={entry['eps']:g}"
        if entry.get("kind") is None:
            rows.append((label, "unavailable"))
        else:
            rows.append((label, f"{entry['kind']} holds={entry['holds']}"))
    rows.append(("weak duality", "ok" if report["weak_duality_ok"] else "VIOLATED"))
    width = max(len(k) for k, _ in rows) + 2
    return "\n".join(f"{k:<{width}}{v}" for k, v in rows) + "\n"
