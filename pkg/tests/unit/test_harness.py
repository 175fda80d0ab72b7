import math
from dataclasses import replace

import numpy as np
import pytest
from glmqs.harness import (
    STUDY_PRESETS,
    diffusion_sweep,
    endpoint_error,
    estimate_order,
    load_study,
    preset_study,
    read_reference,
    reference_solution,
    run_study,
    worker_count,
    write_diffusion,
    write_reference,
)
from glmqs.integrator import integrate as real_integrate
from glmqs.models.builtin_tableaus import BUILTIN_NAMES
from glmqs.models.configs import ComponentSelection, NormKind, ReferenceKind, StudySpec
from glmqs.models.custom_error import (
    ConfigError,
    NotFoundError,
    ReferenceFailureError,
    StageFailureError,
    UndefinedOrderError,
)
from glmqs.models.reports import ReferenceResult
from glmqs.problems import dahlquist, polynomial


def _decay_study(tmp_path, steps=(20, 40, 80), **overrides):
    return StudySpec(
        methods=("GLMQS-1",),
        problem="dahlquist",
        problem_params={"zeta": -1.0},
        steps=steps,
        output_directory=str(tmp_path),
        name="decay",
        **overrides,
    )


@pytest.mark.unit
def test_estimate_order_examples():
    assert estimate_order(1.23e-4, 3e-5, 40, 80) == pytest.approx(2.04, abs=0.005)
    assert estimate_order(1e-3, 1e-3, 10, 20) == 0.0
    assert estimate_order(0.5, 0.25, 40, 80) == pytest.approx(1.0)


@pytest.mark.unit
@pytest.mark.parametrize(
    "args",
    [(0.0, 1e-3, 10, 20), (1e-3, -1.0, 10, 20), (1e-3, 1e-4, 20, 20), (1e-3, 1e-4, 0, 20)],
)
def test_estimate_order_undefined(args):
    with pytest.raises(UndefinedOrderError):
        estimate_order(*args)


@pytest.mark.unit
def test_endpoint_error_norms_and_components():
    system = polynomial(2)
    y = np.array([3.0, 4.0])
    reference = np.array([0.0, 0.0])
    # the time component is dropped
    assert endpoint_error(system, y, reference) == 3.0
    other = dahlquist(-1.0)
    assert endpoint_error(
        other, np.array([1.1]), np.array([1.0]), NormKind.RELATIVE_L2
    ) == pytest.approx(0.1)
    two = replace(other, dim=2, y0=np.zeros(2))
    assert (
        endpoint_error(
            two, np.array([3.0, 4.0]), np.zeros(2), component=ComponentSelection.FIRST
        )
        == 3.0
    )
    assert endpoint_error(two, np.array([3.0, 4.0]), np.zeros(2)) == 5.0


@pytest.mark.unit
def test_reference_from_exact_solution():
    reference = reference_solution(dahlquist(-1.0))
    assert reference.source == "exact"
    assert reference.gap == 0.0
    assert reference.y[0] == pytest.approx(math.exp(-1.0), rel=1e-15)


@pytest.mark.unit
def test_self_refined_reference():
    system = replace(dahlquist(-1.0), exact_solution=None)
    reference = reference_solution(system, rtol=1e-6, start_steps=8)
    assert reference.source == "self-refined"
    assert reference.gap <= 1e-6
    assert reference.steps >= 16
    assert reference.y[0] == pytest.approx(math.exp(-1.0), abs=1e-5)


@pytest.mark.unit
def test_reference_failure_reports_the_gap():
    system = replace(dahlquist(-1.0), exact_solution=None)
    with pytest.raises(ReferenceFailureError) as excinfo:
        reference_solution(system, rtol=1e-30, start_steps=8, max_steps=32)
    assert 0.0 < excinfo.value.gap < 1.0


@pytest.mark.unit
def test_reference_file_round_trip(tmp_path):
    path = tmp_path / "reference.txt"
    values = np.array([0.1, -2.0 / 3.0, 1e-300])
    system = replace(dahlquist(), dim=3, y0=np.zeros(3))
    write_reference(path, ReferenceResult(values, 1e-12, 64, "self-refined"), {"problem": "x"})
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# problem: x\n# reference.source: self-refined\n")
    loaded = read_reference(path, system)
    assert np.array_equal(loaded.y, values)
    assert loaded.source == "supplied-file"


@pytest.mark.unit
def test_read_reference_errors(tmp_path):
    system = dahlquist()
    with pytest.raises(ConfigError, match="cannot read"):
        read_reference(tmp_path / "missing.txt", system)
    path = tmp_path / "two.txt"
    path.write_text("1.0\n2.0\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="holds 2 values, expected 1"):
        read_reference(path, system)


@pytest.mark.unit
def test_worker_count(monkeypatch):
    monkeypatch.delenv("GLMQS_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("GLMQS_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("GLMQS_THREADS", "four")
    with pytest.raises(ConfigError, match="GLMQS_THREADS"):
        worker_count()
    monkeypatch.setenv("GLMQS_THREADS", "0")
    with pytest.raises(ConfigError, match="at least 1"):
        worker_count()


@pytest.mark.unit
def test_single_step_count_has_no_observed_order(tmp_path):
    result = run_study(_decay_study(tmp_path, steps=(20,)), workers=1, write=False)
    assert len(result.rows) == 1
    assert result.rows[0].observed_p is None
    assert result.rows[0].error is not None and result.rows[0].error > 0
    assert result.reference.source == "exact"


@pytest.mark.unit
def test_study_rows_and_observed_orders(tmp_path):
    spec = replace(_decay_study(tmp_path), methods=("GLMQS-1", "GLMQS-2"))
    result = run_study(spec, workers=2, write=False)
    assert [(row.method, row.N) for row in result.rows] == [
        ("GLMQS-1", 20),
        ("GLMQS-1", 40),
        ("GLMQS-1", 80),
        ("GLMQS-2", 20),
        ("GLMQS-2", 40),
        ("GLMQS-2", 80),
    ]
    first, second = result.rows_for("GLMQS-1"), result.rows_for("GLMQS-2")
    assert first[0].observed_p is None and second[0].observed_p is None
    assert first[-1].observed_p == pytest.approx(1.0, abs=0.2)
    assert result.rows[1].h == pytest.approx(1.0 / 40.0)
    assert result.nominal_orders == {"GLMQS-1": 1, "GLMQS-2": 2}


# Orders a dahlquist(-1) study reports from N = 80 on. GLMQS-3 has a vanishing
# error constant and runs one order high until round-off sets in.
STUDY_ORDER_WINDOWS = {
    "GLMQS-1": (0.9, 1.1),
    "GLMQS-2": (1.9, 2.1),
    "GLMQS-3": (3.0, 4.1),
    "GLMQS-4": (3.9, 4.1),
}


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_study_orders_on_decay_for_every_method(tmp_path, name):
    spec = replace(_decay_study(tmp_path, steps=(80, 160, 320)), methods=(name,))
    result = run_study(spec, workers=1, write=False)
    low, high = STUDY_ORDER_WINDOWS[name]
    orders = [row.observed_p for row in result.rows[1:]]
    assert len(orders) == 2
    assert all(low <= p <= high for p in orders), orders
    assert result.nominal_orders == {name: int(name[-1])}


@pytest.mark.unit
def test_study_artifacts_are_reproducible(tmp_path):
    first = run_study(_decay_study(tmp_path / "a"), workers=1)
    second = run_study(_decay_study(tmp_path / "b"), workers=3)
    assert set(first.paths) == {"convergence", "loglog", "report", "reference"}
    for key in first.paths:
        with open(first.paths[key], "rb") as f, open(second.paths[key], "rb") as g:
            assert f.read() == g.read(), key
    lines = (tmp_path / "a" / "convergence.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# name: decay"
    assert "# methods: GLMQS-1" in lines
    assert "# reference.source: exact" in lines
    header = lines.index("method,N,h,error,observed_p")
    assert lines[header + 1].startswith("GLMQS-1,20,0.050000000000000003,")
    assert lines[header + 1].endswith(",")
    loglog = (tmp_path / "a" / "loglog.csv").read_text(encoding="utf-8").splitlines()
    assert "method,log10_h,log10_error" in loglog
    report = (tmp_path / "a" / "report.txt").read_text(encoding="utf-8")
    assert "GLMQS-1.nominal_p: 1" in report
    assert "GLMQS-1.finest_N: 80" in report


@pytest.mark.unit
def test_failed_run_is_recorded_and_the_study_continues(tmp_path, mocker):
    def flaky(tableau, system, t0, t_end, steps, config=None, **kwargs):
        if steps == 40:
            raise StageFailureError("stage 1: Newton iteration diverged", 1, 9.0).at_step(7)
        return real_integrate(tableau, system, t0, t_end, steps, config, **kwargs)

    mocker.patch("glmqs.harness.integrate", side_effect=flaky)
    result = run_study(_decay_study(tmp_path), workers=1)
    failed = result.rows[1]
    assert failed.error is None and failed.observed_p is None
    assert failed.failure.startswith("step 7: stage 1")
    assert result.rows[2].error is not None
    assert result.rows[2].observed_p is None
    assert result.failures() == [failed]
    report = (tmp_path / "report.txt").read_text(encoding="utf-8")
    assert "GLMQS-1.failure.N40: step 7: stage 1" in report
    loglog = (tmp_path / "loglog.csv").read_text(encoding="utf-8").splitlines()
    assert sum(line.startswith("GLMQS-1,") for line in loglog) == 2


@pytest.mark.unit
def test_unknown_method_in_study(tmp_path):
    spec = replace(_decay_study(tmp_path), methods=("GLMQS-9",))
    with pytest.raises(NotFoundError, match="GLMQS-9"):
        run_study(spec, write=False)


@pytest.mark.unit
def test_study_with_supplied_reference(tmp_path):
    path = tmp_path / "ref.txt"
    path.write_text(f"# exact\n{math.exp(-1.0)!r}\n", encoding="utf-8")
    spec = _decay_study(tmp_path, reference="supplied-file", reference_path=str(path))
    result = run_study(spec, workers=1, write=False)
    assert result.reference.source == "supplied-file"
    assert result.rows[-1].observed_p == pytest.approx(1.0, abs=0.2)


@pytest.mark.unit
def test_preset_study():
    spec = preset_study("vdp-table")
    assert spec.methods == tuple(BUILTIN_NAMES)
    assert spec.steps == (5, 10, 20, 40, 80, 160, 320)
    assert spec.problem_params == {"epsilon": 1e-6, "T": 0.5}
    assert preset_study("grayscott-table").norm is NormKind.RELATIVE_L2
    assert preset_study("burgers-table", methods=("GLMQS-2",)).methods == ("GLMQS-2",)
    assert set(STUDY_PRESETS) >= {"vdp-table", "burgers-table", "grayscott-table"}
    with pytest.raises(NotFoundError, match="Unknown study preset"):
        preset_study("lorenz-table")


@pytest.mark.unit
def test_load_study(tmp_path):
    path = tmp_path / "study.yaml"
    path.write_text(
        "name: small\n"
        "methods: [glmqs-1, GLMQS-2]\n"
        "problem:\n"
        "  name: burgers\n"
        "  d: 0.5\n"
        "steps: [20, 40]\n"
        "norm: relative-l2\n"
        "component: first\n"
        "reference:\n"
        "  kind: self-refined\n"
        "  rtol: 1.0e-9\n"
        "newton:\n"
        "  max_iters: 10\n"
        "jacobian:\n"
        "  reuse: per-stage\n"
        "output:\n"
        "  directory: out\n",
        encoding="utf-8",
    )
    spec = load_study(path)
    assert spec.name == "small"
    assert spec.methods == ("GLMQS-1", "GLMQS-2")
    assert spec.problem == "burgers"
    assert spec.problem_params == {"d": 0.5}
    assert spec.steps == (20, 40)
    assert spec.norm is NormKind.RELATIVE_L2
    assert spec.component is ComponentSelection.FIRST
    assert spec.reference is ReferenceKind.SELF_REFINED
    assert spec.reference_rtol == 1e-9
    assert spec.newton.max_iters == 10
    assert spec.newton.jacobian_reuse.value == "per-stage"
    assert spec.output_directory == "out"


@pytest.mark.unit
def test_load_study_from_preset(tmp_path):
    path = tmp_path / "preset.yaml"
    path.write_text("preset: vdp-table\nproblem:\n  epsilon: 1.0e-3\n", encoding="utf-8")
    spec = load_study(path)
    assert spec.problem == "vdp"
    assert spec.problem_params == {"epsilon": 1e-3, "T": 0.5}
    assert spec.steps == STUDY_PRESETS["vdp-table"]["steps"]
    assert spec.name == "vdp-table"


@pytest.mark.unit
def test_load_study_errors(tmp_path):
    with pytest.raises(ConfigError, match="Failed to load YAML file"):
        load_study(tmp_path / "missing.yaml")
    path = tmp_path / "bad.yaml"
    path.write_text("problem:\n  name: vdp\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="'steps'"):
        load_study(path)
    path.write_text("problem:\n  name: vdp\nsteps: [40, 20]\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="strictly increasing"):
        load_study(path)
    path.write_text("problem:\n  name: vdp\nsteps: [20]\nnorm: max\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="norm"):
        load_study(path)
    path.write_text("preset: nope\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown study preset"):
        load_study(path)


@pytest.mark.unit
def test_diffusion_sweep_small(tmp_path):
    sweep = diffusion_sweep(
        d_values=(0.1,),
        method="GLMQS-2",
        norm_steps=20,
        profile_steps=20,
        profile_grids=(5,),
        stride=5,
    )
    assert [row[1] for row in sweep.norms] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    initial = np.sin(np.pi * np.arange(1, 9) / 9.0)
    assert sweep.norms[0][2] == pytest.approx(float(np.linalg.norm(initial)))
    assert sweep.norms[-1][2] < sweep.norms[0][2]
    assert len(sweep.profiles) == 5
    assert sweep.profiles[0][2:] == (0.0, 0.0)
    assert sweep.profiles[-1][2] == pytest.approx(1.0)
    assert sweep.profiles[-1][3] == 0.0
    paths = write_diffusion(sweep, tmp_path)
    norms = (tmp_path / "diffusion_norms.csv").read_text(encoding="utf-8").splitlines()
    assert norms[:2] == ["# method: GLMQS-2", "d,t,norm_u"]
    assert len(norms) == 7
    profiles = (tmp_path / "diffusion_profiles.csv").read_text(encoding="utf-8").splitlines()
    assert profiles[1] == "d,M,x,u"
    assert profiles[2].startswith("0.10000000000000001,5,0,0")
    assert sweep.paths == paths
