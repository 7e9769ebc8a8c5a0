"""Experiment orchestration: wire a RunConfig into simulation, criteria
evaluation and verdicts, and emit the delimited/JSON/figure outputs.

Reports are deterministic byte-for-byte: no wall-clock data is recorded,
only step counters and computed quantities.
"""

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import criteria, dynamics, functionals, plots, spectral


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class ExperimentReport:
    config: dict
    mode: str
    status: dict | None = None
    criteria: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "config": self.config,
            "mode": self.mode,
            "status": self.status,
            "criteria": self.criteria,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "counters": self.counters,
        }

    def all_passed(self):
        return all(v.passed for v in self.verdicts)


# slack applied to one-sided bound comparisons: discretization and pole
# extrapolation carry a few-percent error, so an exact comparison would
# flag scheme error, not analysis error
BOUND_SLACK = 0.05


def run_experiment(cfg, quiet=False):
    """Execute the scenario described by cfg; returns (report, trace)."""
    domain = cfg.build_domain()
    spec = cfg.build_spec()
    controls = cfg.build_controls()
    u0 = cfg.build_initial(domain, spec)

    report = ExperimentReport(config=cfg.echo(), mode=cfg.mode)

    pre = _evaluate_criteria(cfg, domain, spec, u0, report)

    result = dynamics.run(domain, spec, u0, controls)
    status = result.status
    report.status = status.to_dict()
    report.counters = {
        "trace_rows": len(result.trace),
        "final_time": float(result.final.time),
        "final_sup": float(result.final.values.max()),
        "clamp_flagged": bool(result.trace.clamp_flagged),
    }

    _evaluate_verdicts(cfg, domain, spec, result, pre, report)

    if not quiet:
        for v in report.verdicts:
            print(f"[{'PASS' if v.passed else 'FAIL'}] {v.name}: {v.detail}")
    return report, result.trace


def _evaluate_criteria(cfg, domain, spec, u0, report):
    """Pre-simulation criterion evaluation; returns mode-specific context."""
    pre = {}
    if cfg.mode == "theorem1":
        rep = criteria.thm1_upper_bound(domain, spec, u0)
        report.criteria.append(rep.to_dict())
        pre["upper"] = rep
    elif cfg.mode == "theorem2":
        rep = criteria.thm2_global_bound(domain, spec, u0)
        report.criteria.append(rep.to_dict())
        pre["cap"] = rep
    elif cfg.mode == "theorem3":
        coeffs = criteria.h0_coefficients(spec.m, spec.p, spec.q, cfg.run_delta)
        consts = criteria.thm3_constants(coeffs, spec, domain)
        thr, rel = criteria.thm3_k2_threshold(consts, coeffs)
        pre["coeffs"], pre["consts"] = coeffs, consts
        pre["threshold"], pre["threshold_rel"] = thr, rel
        W0 = functionals.w_measure(domain, u0, spec.m, spec.p)
        if spec.k2 >= thr * (1.0 - 1e-12):
            rep = criteria.thm3_lower_bound(W0, consts, coeffs)
        else:
            rep = criteria.CriteriaReport(
                theorem="theorem3", applicable=False,
                constants={"W0": W0, "k2_threshold": thr},
                diagnostics=[
                    f"k2 = {spec.k2} is below the admissibility threshold {thr}"
                ],
            )
        rep.constants["k2_threshold"] = thr
        rep.constants["k2_threshold_rel_discrepancy"] = rel
        report.criteria.append(rep.to_dict())
        pre["lower"] = rep
    return pre


def _evaluate_verdicts(cfg, domain, spec, result, pre, report):
    status, trace = result.status, result.trace
    add = report.verdicts.append

    if status.kind == "step_failure":
        add(Verdict("integration_completed", False, status.reason or "step failure"))
        return
    add(Verdict(
        "integration_completed", True,
        f"{status.kind} at t = {status.t_end:.6g}, sup = {status.sup_at_stop:.6g}",
    ))
    add(Verdict(
        "positivity_clamp_negligible", not trace.clamp_flagged,
        "clamped mass below 1e-8 of peak mass"
        if not trace.clamp_flagged else "clamp exceeded 1e-8 of peak mass",
    ))

    if cfg.mode == "theorem1":
        rep = pre["upper"]
        psi_col = trace.column("psi")
        finite = np.isfinite(psi_col)
        if finite.sum() >= 2:
            scale = float(np.abs(psi_col[finite]).max())
            mono = float(np.diff(psi_col[finite]).min()) >= -1e-6 * max(scale, 1e-30)
            add(Verdict(
                "psi_nondecreasing", mono,
                "psi history nondecreasing along the trajectory"
                if mono else "psi decreased along the trajectory",
            ))
        if rep.applicable:
            if status.kind == "blowup":
                ok = status.t_estimate <= rep.bound * (1.0 + BOUND_SLACK)
                add(Verdict(
                    "blowup_within_upper_bound", ok,
                    f"t* = {status.t_estimate:.6g} vs bound {rep.bound:.6g}",
                ))
            else:
                ok = status.t_end < rep.bound * (1.0 + BOUND_SLACK)
                add(Verdict(
                    "no_survival_past_upper_bound", ok,
                    f"ran to t = {status.t_end:.6g} without blow-up; "
                    f"bound {rep.bound:.6g}",
                ))
    elif cfg.mode == "theorem2":
        rep = pre["cap"]
        add(Verdict(
            "no_blowup", status.kind == "ran_to_end",
            f"trajectory {status.kind} at t = {status.t_end:.6g}",
        ))
        if rep.applicable and rep.bound is not None:
            phi_max = float(np.nanmax(trace.column("phi")))
            ok = phi_max <= rep.bound * (1.0 + BOUND_SLACK)
            add(Verdict(
                "phi_below_cap", ok,
                f"max phi = {phi_max:.6g} vs cap {rep.bound:.6g}",
            ))
    elif cfg.mode == "theorem3":
        rel = pre["threshold_rel"]
        add(Verdict(
            "k2_threshold_forms_agree", rel <= 1e-8,
            f"relative discrepancy {rel:.3e}",
        ))
        rep = pre["lower"]
        if rep.applicable:
            T_low = rep.bound
            if status.kind == "blowup":
                ok = status.t_estimate >= T_low * (1.0 - BOUND_SLACK)
                add(Verdict(
                    "blowup_after_lower_bound", ok,
                    f"t* = {status.t_estimate:.6g} vs T_low = {T_low:.6g}",
                ))
            else:
                add(Verdict(
                    "no_early_blowup", True,
                    f"no blow-up before t = {status.t_end:.6g}; "
                    f"T_low = {T_low:.6g} unviolated",
                ))
    elif cfg.mode == "barenblatt":
        t_ref = cfg.problem_u0_time + result.final.time
        ref = cfg.problem_u0_amplitude * dynamics.barenblatt_field(
            domain, t_ref, spec.m, mass=cfg.problem_u0_mass
        )
        err = float(np.abs(result.final.values - ref).max() / ref.max())
        report.counters["barenblatt_linf_error"] = err
        add(Verdict(
            "barenblatt_linf_error", err <= 0.05,
            f"relative sup error {err:.3e} against the self-similar reference",
        ))
        from .geometry import integrate_volume

        m0 = integrate_volume(domain, cfg.build_initial(domain, spec))
        m1 = integrate_volume(domain, result.final.values)
        drift = abs(m1 - m0) / m0
        report.counters["mass_drift"] = drift
        add(Verdict(
            "mass_conserved", drift <= 1e-6,
            f"relative mass drift {drift:.3e}",
        ))


# -- output emission ----------------------------------------------------


def _atomic_write(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_json(report):
    """Canonical JSON text for a report dict (stable key order)."""
    payload = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"


def emit_outputs(outdir, report, trace=None, figures=True):
    """Write report.json (+ trace.csv and figures); atomic per file."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}
    _atomic_write(outdir / "report.json", report_json(report))
    paths["report"] = outdir / "report.json"
    if trace is not None:
        import io

        buf = io.StringIO()
        trace.write_csv(buf)
        _atomic_write(outdir / "trace.csv", buf.getvalue())
        paths["trace"] = outdir / "trace.csv"
        if figures:
            paths.update(plots.render_trace_figures(trace, outdir))
    return paths
