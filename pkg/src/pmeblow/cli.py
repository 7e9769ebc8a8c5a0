"""Command-line interface.

Subcommands: simulate, bounds, eigen, check-lemmas, convergence.
Exit codes: 0 all asserted checks pass; 1 a verdict/inequality failed;
2 configuration or hypothesis error; 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import criteria, dynamics, experiment, functionals, plots, spectral
from .config import ConfigError, parse_config
from .dynamics import SpecError
from .geometry import DomainError
from .spectral import EigenSolveError

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LEMMA_TOL = 1e-8
LEMMA_TRIALS = 5


def _add_common(sub):
    sub.add_argument("--config", required=True, metavar="PATH",
                     help="run configuration file (key = value lines)")
    sub.add_argument("--out", metavar="DIR", default=None,
                     help="output directory (default: output.dir from config)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override run.seed")
    sub.add_argument("--resolution", type=int, default=None,
                     help="override domain.resolution (nodes per axis)")
    sub.add_argument("--quiet", action="store_true",
                     help="suppress per-check progress lines")


def build_parser():
    p = argparse.ArgumentParser(
        prog="pmeblow",
        description="Degenerate reaction-diffusion simulator and "
        "blow-up / global-existence criteria checker.",
    )
    sp = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate the configured scenario and check its verdicts"),
        ("bounds", "evaluate the analytic bounds without time integration"),
        ("eigen", "report the spectral quantities of the configured domain"),
        ("check-lemmas", "randomized residual checks of the supporting inequalities"),
        ("convergence", "self-similar reference convergence ladder"),
    ):
        sub = sp.add_parser(name, help=help_text)
        _add_common(sub)
    return p


def _load(args):
    text = Path(args.config).read_text()
    cfg = parse_config(text)
    if args.seed is not None:
        cfg.run_seed = args.seed
    if args.resolution is not None:
        cfg.domain_resolution = args.resolution
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DomainError, SpecError, criteria.CriteriaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handler = {
        "simulate": cmd_simulate,
        "bounds": cmd_bounds,
        "eigen": cmd_eigen,
        "check-lemmas": cmd_check_lemmas,
        "convergence": cmd_convergence,
    }[args.command]
    try:
        return handler(cfg, args)
    except (ConfigError, DomainError, SpecError, criteria.CriteriaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenSolveError, dynamics.BlowupDetectionError,
            FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def cmd_simulate(cfg, args):
    report, trace = experiment.run_experiment(cfg, quiet=args.quiet)
    paths = experiment.emit_outputs(cfg.output_dir, report, trace)
    if not args.quiet:
        for key, path in sorted(paths.items()):
            print(f"wrote {key}: {path}")
    if report.status and report.status["kind"] == "step_failure":
        return EXIT_NUMERICAL
    return EXIT_OK if report.all_passed() else EXIT_VIOLATION


def cmd_bounds(cfg, args):
    domain = cfg.build_domain()
    spec = cfg.build_spec()
    u0 = cfg.build_initial(domain, spec)
    reports = []
    if cfg.mode == "theorem1":
        reports.append(criteria.thm1_upper_bound(domain, spec, u0))
    elif cfg.mode == "theorem2":
        reports.append(criteria.thm2_global_bound(domain, spec, u0))
    elif cfg.mode == "theorem3":
        coeffs = criteria.h0_coefficients(spec.m, spec.p, spec.q, cfg.run_delta)
        consts = criteria.thm3_constants(coeffs, spec, domain)
        W0 = functionals.w_measure(domain, u0, spec.m, spec.p)
        thr, rel = criteria.thm3_k2_threshold(consts, coeffs)
        if spec.k2 >= thr * (1.0 - 1e-12):
            rep = criteria.thm3_lower_bound(W0, consts, coeffs)
        else:
            rep = criteria.CriteriaReport(
                theorem="theorem3", applicable=False,
                constants={"W0": W0},
                diagnostics=[f"k2 = {spec.k2} below threshold {thr}"],
            )
        rep.constants["k2_threshold"] = thr
        rep.constants["k2_threshold_rel_discrepancy"] = rel
        reports.append(rep)
    else:
        print(f"config error: mode {cfg.mode!r} defines no analytic bound",
              file=sys.stderr)
        return EXIT_CONFIG

    payload = {"config": cfg.echo(), "mode": cfg.mode,
               "criteria": [r.to_dict() for r in reports]}
    experiment.emit_outputs(cfg.output_dir, payload)
    for r in reports:
        tag = "applicable" if r.applicable else "not applicable"
        bound = "-" if r.bound is None else f"{r.bound:.6g}"
        print(f"{r.theorem}: {tag}, bound = {bound}")
        if not args.quiet:
            for k, v in sorted(r.constants.items()):
                print(f"  {k} = {v:.10g}")
    return EXIT_OK


def cmd_eigen(cfg, args):
    domain = cfg.build_domain()
    spec = cfg.build_spec()
    lam = spectral.dirichlet_lambda1(domain)
    xi_h = spectral.robin_xi1(domain, spec.h)
    xi_hm = spectral.robin_xi1(domain, spec.h * spec.m)
    eta_hm = spectral.eta(domain, spec.h * spec.m, xi1=xi_hm.eigenvalue)
    ok, margin = spectral.check_H3(domain, spec.h, spec.m)
    from .geometry import star_constants

    sc = star_constants(domain)
    payload = {
        "config": cfg.echo(),
        "lambda1": lam.eigenvalue,
        "xi1_h": xi_h.eigenvalue,
        "xi1_hm": xi_hm.eigenvalue,
        "eta_hm": eta_hm,
        "membrane_feasible": bool(ok),
        "membrane_margin": margin,
        "m1": sc.m1,
        "m2": sc.m2,
        "residual_lambda1": lam.residual,
        "residual_xi1_h": xi_h.residual,
    }
    experiment.emit_outputs(cfg.output_dir, payload)
    print(f"lambda1 (Dirichlet)      = {lam.eigenvalue:.10g}")
    print(f"xi1(h)   (Robin, h={spec.h:g})  = {xi_h.eigenvalue:.10g}")
    print(f"xi1(h m) (Robin, hm={spec.h * spec.m:g}) = {xi_hm.eigenvalue:.10g}")
    print(f"eta(h m)                 = {eta_hm:.10g}")
    print(f"star constants m1, m2    = {sc.m1:.10g}, {sc.m2:.10g}")
    print(f"membrane feasibility     = {'yes' if ok else 'no'} "
          f"(margin {margin:.6g})")
    return EXIT_OK


def cmd_check_lemmas(cfg, args):
    domain = cfg.build_domain()
    spec = cfg.build_spec()
    rng = np.random.default_rng(cfg.run_seed)
    params = {"h": spec.h, "m": spec.m}
    coeffs = consts = None
    if cfg.mode == "theorem3":
        coeffs = criteria.h0_coefficients(spec.m, spec.p, spec.q, cfg.run_delta)
        consts = criteria.thm3_constants(coeffs, spec, domain)
        params.update({"coeffs": coeffs, "eps1": consts.epsilon1,
                       "eps2": consts.epsilon2, "consts": consts})

    worst = {}
    for trial in range(LEMMA_TRIALS):
        if cfg.mode == "theorem3":
            V = criteria.random_smooth_field(domain, rng, dirichlet=True)
        else:
            V = criteria.robin_adjusted_field(domain, rng, spec.h)
        checks = criteria.lemma_checks(domain, V, params)
        for name, res in checks.items():
            if name == "lemma2":
                for sub in ("rayleigh", "damped"):
                    key = f"lemma2_{sub}"
                    r = res[sub]["residual"] / max(abs(res[sub]["rhs"]), 1e-30)
                    worst[key] = min(worst.get(key, np.inf), r)
            elif name == "lemma4":
                worst["lemma4_minimum"] = float(res["is_minimum"])
            else:
                r = res["residual"] / max(abs(res["rhs"]), 1e-30)
                worst[name] = min(worst.get(name, np.inf), r)

    all_ok = True
    results = {}
    for name in sorted(worst):
        if name == "lemma4_minimum":
            ok = worst[name] >= 1.0
            detail = "interior minimum confirmed" if ok else "minimum check failed"
        else:
            ok = worst[name] >= -LEMMA_TOL
            detail = f"worst relative residual {worst[name]:.3e}"
        results[name] = {"passed": bool(ok), "worst": float(worst[name])}
        all_ok &= ok
        if not args.quiet:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    payload = {"config": cfg.echo(), "mode": cfg.mode,
               "trials": LEMMA_TRIALS, "results": results}
    experiment.emit_outputs(cfg.output_dir, payload)
    return EXIT_OK if all_ok else EXIT_VIOLATION


def cmd_convergence(cfg, args):
    spec = dynamics.ProblemSpec(m=cfg.problem_m, h=cfg.problem_h, k=1,
                                source_kind="none")
    t0, t_end = cfg.problem_u0_time, cfg.run_t_end
    mass = cfg.problem_u0_mass
    errors = []
    for res in cfg.run_ladder:
        domain = cfg.build_domain(resolution=res)
        u0 = dynamics.barenblatt_field(domain, t0, spec.m, mass=mass)
        controls = cfg.build_controls()
        out = dynamics.run(domain, spec, u0, controls)
        if out.status.kind != "ran_to_end":
            print(f"numerical failure: ladder run at resolution {res} "
                  f"stopped with {out.status.kind}", file=sys.stderr)
            return EXIT_NUMERICAL
        ref = dynamics.barenblatt_field(domain, t0 + out.final.time, spec.m,
                                        mass=mass)
        err = float(np.abs(out.final.values - ref).max() / ref.max())
        errors.append(err)
        if not args.quiet:
            print(f"resolution {res:5d}: relative sup error {err:.6e}")

    order = float(-np.polyfit(np.log(cfg.run_ladder), np.log(errors), 1)[0])
    ok = order >= 0.9
    print(f"[{'PASS' if ok else 'FAIL'}] observed order {order:.3f} "
          f"(first-order scheme expected)")

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = "\n".join(
        f"{r},{repr(e)}" for r, e in zip(cfg.run_ladder, errors)
    )
    experiment._atomic_write(outdir / "convergence.csv",
                             "resolution,linf_error\n" + rows + "\n")
    plots.render_convergence(cfg.run_ladder, errors, outdir)
    payload = {"config": cfg.echo(), "resolutions": list(cfg.run_ladder),
               "errors": errors, "order": order}
    experiment.emit_outputs(cfg.output_dir, payload)
    return EXIT_OK if ok else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
