import io

import numpy as np
import pytest

from pmeblow.dynamics import (
    BlowupDetectionError,
    ProblemSpec,
    RunControls,
    SpecError,
    barenblatt_field,
    barenblatt_support_radius,
    detect_blowup,
    make_initial,
    run,
    stable_dt,
    step,
)
from pmeblow.geometry import integrate_volume, make_domain


def barenblatt_run(resolution, t0=0.1, t1=0.3):
    dom = make_domain("interval", (4.0,), 1, resolution=resolution)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u0 = barenblatt_field(dom, t0, 2.0)
    out = run(dom, spec, u0, RunControls(t_end=t1 - t0))
    ref = barenblatt_field(dom, t0 + out.final.time, 2.0)
    err = float(np.abs(out.final.values - ref).max() / ref.max())
    return out, err


def test_barenblatt_accuracy_and_mass():
    dom = make_domain("interval", (4.0,), 1, resolution=200)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u0 = barenblatt_field(dom, 0.1, 2.0)
    out = run(dom, spec, u0, RunControls(t_end=0.2))
    assert out.status.kind == "ran_to_end"
    ref = barenblatt_field(dom, 0.1 + out.final.time, 2.0)
    err = np.abs(out.final.values - ref).max() / ref.max()
    assert err < 0.01
    m0 = integrate_volume(dom, u0)
    m1 = integrate_volume(dom, out.final.values)
    assert abs(m1 - m0) / m0 < 1e-10
    assert not out.trace.clamp_flagged


def test_barenblatt_support_radius_consistent():
    # the sampled field must vanish outside the analytic front position
    dom = make_domain("interval", (4.0,), 1, resolution=400)
    u = barenblatt_field(dom, 0.1, 2.0)
    r = np.abs(dom.coords()[..., 0] - dom.x0[0])
    R = barenblatt_support_radius(0.1, 2.0, 1)
    assert np.all(u[r > R + dom.spacing[0]] == 0.0)
    assert u[r < 0.5 * R].min() > 0.0


def test_synthetic_pole_detection_first_order():
    # sup(t) = (t* - t)^(-1) with t* = 0.7: estimate exact to high accuracy
    t = np.linspace(0.0, 0.69, 400)
    s = 1.0 / (0.7 - t)
    est = detect_blowup(t, s, u_max=10.0)
    assert abs(est - 0.7) < 1e-4


def test_synthetic_pole_detection_second_order():
    t = np.linspace(0.0, 0.49, 400)
    s = (0.5 - t) ** -2.0
    est = detect_blowup(t, s, u_max=10.0)
    assert abs(est - 0.5) < 1e-4


def test_detect_blowup_requires_crossing():
    t = np.linspace(0.0, 1.0, 50)
    s = np.ones_like(t)
    with pytest.raises(BlowupDetectionError):
        detect_blowup(t, s, u_max=10.0)


def test_step_preserves_nonnegativity():
    dom = make_domain("interval", (1.0,), 1, resolution=64)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u = make_initial(dom, spec, "bump")
    dt = stable_dt(dom, u, spec, 0.25)
    new, clamped = step(dom, u, spec, dt)
    assert new.min() >= 0.0
    assert clamped >= 0.0


def test_dirichlet_boundary_pinned():
    dom = make_domain("interval", (1.0,), 1, resolution=64)
    spec = ProblemSpec(m=2.0, h=1.0, k=0, source_kind="none")
    u0 = make_initial(dom, spec, "sine")
    out = run(dom, spec, u0, RunControls(t_end=0.05))
    assert out.final.values[0] == 0.0 and out.final.values[-1] == 0.0


def test_dirichlet_rejects_nonvanishing_data():
    dom = make_domain("interval", (1.0,), 1, resolution=64)
    spec = ProblemSpec(m=2.0, h=1.0, k=0, source_kind="none")
    with pytest.raises(SpecError):
        run(dom, spec, np.ones(dom.shape), RunControls(t_end=0.01))


def test_robin_outflow_decreases_mass():
    dom = make_domain("interval", (1.0,), 1, resolution=128)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u0 = make_initial(dom, spec, "constant", amplitude=1.0)
    out = run(dom, spec, u0, RunControls(t_end=0.1))
    assert integrate_volume(dom, out.final.values) < integrate_volume(dom, u0)


def test_blowup_run_theorem1_style():
    dom = make_domain("interval", (1.0,), 1, resolution=65)
    spec = ProblemSpec(m=2.0, p=3.0, q=2.0, k1=8.0, k2=0.5, h=0.5, k=1,
                       source_kind="power_absorption")
    u0 = make_initial(dom, spec, "constant", amplitude=2.0)
    out = run(dom, spec, u0, RunControls(t_end=1.0, u_max=1e6))
    assert out.status.kind == "blowup"
    assert out.status.t_estimate is not None
    # the estimate extrapolates from the trace tail; it can sit a hair
    # below the stopping time but never meaningfully before it
    assert out.status.t_estimate >= 0.99 * out.status.t_end


def test_trace_csv_roundtrip():
    dom = make_domain("interval", (1.0,), 1, resolution=64)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u0 = make_initial(dom, spec, "bump")
    out = run(dom, spec, u0, RunControls(t_end=0.01))
    buf = io.StringIO()
    out.trace.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(out.trace.columns)
    parsed = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    for j, name in enumerate(out.trace.columns):
        col = out.trace.column(name)
        np.testing.assert_array_equal(parsed[:, j][np.isfinite(col)],
                                      col[np.isfinite(col)])


def test_spec_validation():
    with pytest.raises(SpecError):
        ProblemSpec(m=1.0)
    with pytest.raises(SpecError):
        ProblemSpec(m=2.0, h=0.0)
    with pytest.raises(SpecError):
        ProblemSpec(m=2.0, k=2)
    with pytest.raises(SpecError):
        ProblemSpec(m=2.0, source_kind="magic")


def test_max_steps_budget():
    dom = make_domain("interval", (1.0,), 1, resolution=64)
    spec = ProblemSpec(m=2.0, h=1.0, k=1, source_kind="none")
    u0 = make_initial(dom, spec, "bump")
    out = run(dom, spec, u0, RunControls(t_end=10.0, max_steps=10))
    assert out.status.kind == "step_failure"
    assert "budget" in out.status.reason
