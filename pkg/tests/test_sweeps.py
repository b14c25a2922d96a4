# Copyright 2022-2024 The rydgate authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Test the rydgate.sweeps module
"""

import math

import numpy as np
import pytest

from rydgate import sweeps
from rydgate.analytic import analytic_ghz_fidelity
from rydgate.analytic import phase_phi
from rydgate.config import RydGateConfig
from rydgate.dynamics import IntegrationError
from rydgate.hilbert import Model
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import pi_pulse_duration
from rydgate.physics import susceptibility
from rydgate.sweeps import Axis
from rydgate.sweeps import Experiment
from rydgate.sweeps import RowStatus
from rydgate.sweeps import Spacing
from rydgate.sweeps import SweepRow
from rydgate.sweeps import SweepSpec
from rydgate.sweeps import aio_sweep_to_csv
from rydgate.sweeps import aio_write_text
from rydgate.sweeps import blocking_point
from rydgate.sweeps import render_csv
from rydgate.sweeps import run_point
from rydgate.sweeps import run_sweep
from rydgate.sweeps import run_sweep_async
from rydgate.sweeps import susceptibility_point
from rydgate.sweeps import sweep_blocking_vs_ratio
from rydgate.sweeps import sweep_ghz_vs_vjk
from rydgate.sweeps import sweep_susceptibility
from rydgate.sweeps import sweep_transfer_vs_v
from rydgate.sweeps import transfer_point


def fake_point(spec: SweepSpec, task) -> SweepRow:
    return SweepRow(values=tuple(task) + (0.5, 0.0), wall_time=0.0)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("blocking", Experiment.BLOCKING_VS_RATIO),
        ("TRANSFER_VS_V", Experiment.TRANSFER_VS_V),
        (" GHZ ", Experiment.GHZ_VS_VJK),
        (Experiment.SUSCEPTIBILITY, Experiment.SUSCEPTIBILITY),
    ],
)
def test_experiment_parse(text, expected):
    assert Experiment.parse(text) is expected


def test_experiment_parse_error():
    with pytest.raises(ValueError):
        Experiment.parse("bell")


def test_axis_values():
    assert Axis("a", 1.0, 3.0, 3).values() == pytest.approx([1.0, 2.0, 3.0])
    assert Axis("a", 1.0, 100.0, 3, "log").values() == pytest.approx([1.0, 10.0, 100.0])
    assert Axis("a", 1.0, 100.0, 3, "log").spacing is Spacing.LOG


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(points=1),
        dict(points=2.5),
        dict(stop=float("inf")),
        dict(start=0.0, spacing="log"),
        dict(spacing="cubic"),
    ],
)
def test_axis_validation(kwargs):
    axis = dict(name="a", start=1.0, stop=2.0, points=3)
    axis.update(kwargs)
    with pytest.raises(ValueError):
        Axis(**axis)


def test_default_specs():
    spec = SweepSpec.default("ghz", points=2)
    assert spec.base.n_atoms == 3
    assert spec.columns == ("v_jk_over_eps", "x_max", "fidelity", "norm_loss")
    assert spec.axis.spacing is Spacing.LOG
    assert SweepSpec.default("blocking").axis.points == 25
    assert SweepSpec.default("transfer").columns == ("v_over_eps", "fidelity", "norm_loss")


def test_ghz_tasks_are_grouped_by_x_max():
    spec = SweepSpec.default("ghz", start=1.0, stop=100.0, points=3)
    spec = SweepSpec(spec.experiment, spec.axis, spec.base, x_max_values=(0.1, 0.2))
    tasks = spec.tasks()
    assert len(tasks) == 6
    assert [x for _, x in tasks] == [0.1] * 3 + [0.2] * 3
    assert [v for v, _ in tasks[:3]] == pytest.approx([1.0, 10.0, 100.0])


def test_susceptibility_tasks():
    spec = SweepSpec.default("susceptibility", points=3)
    tasks = spec.tasks()
    assert len(tasks) == 6
    assert [offset for offset, _ in tasks] == pytest.approx([-5, 0, 5, -5, 0, 5])
    assert tasks[0][1] == 0.0
    assert tasks[-1][1] == pytest.approx(40.0)


def test_sweep_spec_validation(rb87_params):
    axis = Axis("v", 1.0, 10.0, 2)
    with pytest.raises(ValueError):
        SweepSpec("transfer", axis, rb87_params, worker_count=0)
    with pytest.raises(ValueError):
        SweepSpec("ghz", axis, rb87_params, x_max_values=(0.1, -0.1))
    with pytest.raises(ValueError):
        SweepSpec("ghz", axis, rb87_params, x_max_values=())
    with pytest.raises(ParameterError):
        SweepSpec("susceptibility", axis, rb87_params.replace(gamma_p=0.0))
    with pytest.raises(ValueError):
        SweepSpec("blocking", Axis("ratio", 0.0, 6.0, 2), rb87_params)
    with pytest.raises(ValueError):
        SweepSpec("transfer", Axis("v", -1.0, 6.0, 2), rb87_params)
    with pytest.raises(ValueError):
        SweepSpec("bell", axis, rb87_params)


def test_spec_from_ini_config(gate_ini_file):
    spec = SweepSpec.from_config(RydGateConfig.load(gate_ini_file))
    assert spec.experiment is Experiment.BLOCKING_VS_RATIO
    assert spec.axis.points == 3
    assert (spec.axis.start, spec.axis.stop) == (1.0, 6.0)
    assert spec.base.n_atoms == 2
    assert spec.options.model is Model.EFFECTIVE
    assert not spec.options.include_decay
    assert spec.worker_count == 1


def test_spec_from_yaml_config(gate_yaml_file):
    spec = SweepSpec.from_config(RydGateConfig.load(gate_yaml_file))
    assert spec.experiment is Experiment.TRANSFER_VS_V
    assert spec.axis.spacing is Spacing.LOG
    assert spec.axis.values() == pytest.approx([10.0, 100.0])
    # the experiment argument wins over the file
    spec = SweepSpec.from_config(RydGateConfig.load(gate_yaml_file), "ghz")
    assert spec.experiment is Experiment.GHZ_VS_VJK


def test_spec_from_sweep_only_config():
    config = RydGateConfig.loads_ini(
        "[sweep]\nexperiment = ghz\nx_max = 0.1, 0.3\nworkers = 4\nmodel = full\ndecay = true\n"
    )
    spec = SweepSpec.from_config(config)
    assert spec.base.n_atoms == 3
    assert spec.base.delta == PhysParams.rb87().delta
    assert spec.x_max_values == (0.1, 0.3)
    assert spec.worker_count == 4
    assert spec.options.model is Model.FULL
    assert spec.options.include_decay


def test_spec_from_config_needs_experiment():
    with pytest.raises(ValueError):
        SweepSpec.from_config(RydGateConfig.loads_ini("preset = rb87\n"))


@pytest.mark.parametrize("ratio, threshold", [(2.0, 0.99), (6.0, 0.999)])
def test_blocking_point(ratio, threshold):
    spec = SweepSpec.default("blocking")
    value, fidelity, norm_loss = blocking_point(spec, ratio)
    assert value == ratio
    assert fidelity >= threshold
    assert abs(norm_loss) < 1e-8


@pytest.mark.parametrize("v_over_eps, threshold", [(40.0, 0.98), (1e4, 0.999)])
def test_transfer_point(v_over_eps, threshold):
    spec = SweepSpec.default("transfer")
    value, fidelity, _ = transfer_point(spec, v_over_eps)
    assert value == v_over_eps
    assert fidelity >= threshold


def test_susceptibility_point():
    spec = SweepSpec.default("susceptibility")
    delta, v_over_eps, chi_re, chi_im = susceptibility_point(spec, 0.0, 0.0)
    assert delta == spec.base.delta
    assert v_over_eps == 0.0
    assert abs(complex(chi_re, chi_im)) < 1e-6
    _, _, chi_re, chi_im = susceptibility_point(spec, 0.0, 40.0)
    assert abs(complex(chi_re, chi_im)) > 1e-4


def test_failed_point(mocker, monkeypatch):
    def diverge(spec, v_over_eps):
        raise IntegrationError("step size underflow")

    monkeypatch.setitem(sweeps.POINTS, Experiment.TRANSFER_VS_V, diverge)
    log_error = mocker.patch.object(sweeps.LOGGER, "error")
    row = run_point(SweepSpec.default("transfer"), (5.0,))
    assert row.failed
    assert row.status is RowStatus.FAILED
    assert row.error == "step size underflow"
    assert row.values[0] == 5.0
    assert all(math.isnan(v) for v in row.values[1:])
    assert row.csv_fields()[1:] == ["nan", "nan"]
    log_error.assert_called_once()


def test_failed_susceptibility_row_keeps_delta(monkeypatch):
    def diverge(spec, offset, v_over_eps):
        raise FloatingPointError("overflow")

    monkeypatch.setitem(sweeps.POINTS, Experiment.SUSCEPTIBILITY, diverge)
    spec = SweepSpec.default("susceptibility")
    row = run_point(spec, (1.0, 40.0))
    assert row.values[0] == pytest.approx(spec.base.delta + spec.base.omega_c)
    assert row.values[1] == 40.0
    assert len(row.values) == len(spec.columns)


def test_unexpected_errors_are_not_rows(monkeypatch):
    def broken(spec, v_over_eps):
        raise KeyError("bug")

    monkeypatch.setitem(sweeps.POINTS, Experiment.TRANSFER_VS_V, broken)
    with pytest.raises(KeyError):
        run_point(SweepSpec.default("transfer"), (5.0,))


@pytest.mark.asyncio
async def test_run_sweep_async_serial():
    spec = SweepSpec.default("transfer", start=1.0, stop=100.0, points=3)
    rows = await run_sweep_async(spec, point=fake_point)
    assert [row.values[0] for row in rows] == pytest.approx([1.0, 10.0, 100.0])


@pytest.mark.asyncio
async def test_run_sweep_async_workers_keep_order():
    spec = SweepSpec.default("susceptibility", points=5)
    serial = await run_sweep_async(spec)
    pooled = SweepSpec(spec.experiment, spec.axis, spec.base, worker_count=2)
    parallel = await run_sweep_async(pooled)
    assert [row.values for row in parallel] == [row.values for row in serial]
    assert not any(row.failed for row in parallel)


def test_run_sweep():
    rows = run_sweep(SweepSpec.default("susceptibility", points=2))
    assert len(rows) == 4
    assert all(row.status is RowStatus.OK for row in rows)
    assert all(row.wall_time >= 0 for row in rows)


def test_sweep_csv_is_reproducible():
    spec = SweepSpec.default("transfer", start=10.0, stop=1000.0, points=3)
    pooled = SweepSpec(spec.experiment, spec.axis, spec.base, worker_count=2)
    serial = render_csv(spec.experiment, run_sweep(spec))
    assert render_csv(spec.experiment, run_sweep(spec)) == serial
    assert render_csv(spec.experiment, run_sweep(pooled)) == serial
    assert serial.count("\n") == 4


def test_render_csv():
    rows = [
        SweepRow(values=(1.0, 0.5, 0.0), wall_time=0.1),
        SweepRow(values=(2.0, float("nan"), float("nan")), wall_time=0.1, status="failed"),
    ]
    text = render_csv("transfer", rows)
    assert text == "v_over_eps,fidelity,norm_loss\n1,0.5,0\n2,nan,nan\n"
    assert render_csv(Experiment.GHZ_VS_VJK, []) == "v_jk_over_eps,x_max,fidelity,norm_loss\n"


def test_csv_fields_keep_full_precision():
    row = SweepRow(values=(1 / 3, np.pi), wall_time=0.0)
    assert [float(v) for v in row.csv_fields()] == [1 / 3, np.pi]


@pytest.mark.asyncio
async def test_aio_write_text(tmp_path):
    out = tmp_path / "nested" / "rows.csv"
    path = await aio_write_text("a,b\n1,2\n", out)
    assert path == out
    assert out.read_text() == "a,b\n1,2\n"


@pytest.mark.asyncio
async def test_aio_write_text_to_stdout(capsys):
    path = await aio_write_text("a,b\n", "-")
    assert path is None
    assert capsys.readouterr().out == "a,b\n"


@pytest.mark.asyncio
async def test_aio_sweep_to_csv(tmp_path):
    out = tmp_path / "chi.csv"
    spec = SweepSpec.default("susceptibility", points=3)
    rows = await aio_sweep_to_csv(spec, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "delta,v_over_eps,chi_re,chi_im"
    assert len(lines) == 1 + len(rows) == 7
    assert [float(v) for v in lines[1].split(",")] == list(rows[0].values)


@pytest.mark.asyncio
async def test_aio_sweep_to_csv_warns_on_failures(tmp_path, mocker, monkeypatch):
    def diverge(spec, v_over_eps):
        raise IntegrationError("max steps")

    monkeypatch.setitem(sweeps.POINTS, Experiment.TRANSFER_VS_V, diverge)
    mocker.patch.object(sweeps.LOGGER, "error")
    log_warning = mocker.patch.object(sweeps.LOGGER, "warning")
    spec = SweepSpec.default("transfer", points=2)
    rows = await aio_sweep_to_csv(spec, tmp_path / "transfer.csv")
    assert all(row.failed for row in rows)
    log_warning.assert_called_once()
    assert (tmp_path / "transfer.csv").read_text().count("nan") == 4


def test_sweep_blocking_vs_ratio():
    rows = sweep_blocking_vs_ratio(SweepSpec.default("blocking", start=2.0, stop=6.0, points=3))
    fidelities = [row.values[1] for row in rows]
    assert fidelities[0] >= 0.99
    assert fidelities[-1] >= 0.999
    assert all(b >= a - 1e-4 for a, b in zip(fidelities, fidelities[1:]))


def test_sweep_transfer_vs_v():
    rows = sweep_transfer_vs_v(SweepSpec.default("transfer", start=0.0, stop=40.0, points=2))
    # no shift: EIT blocks the swap
    assert rows[0].values[1] <= 0.01
    assert rows[1].values[1] >= 0.98


def test_sweep_susceptibility():
    spec = SweepSpec.default("susceptibility", points=3)
    rows = sweep_susceptibility(spec)
    base = spec.base
    two_level = abs(susceptibility(base.delta, base.replace(omega_c=0.0), 0.0))
    chi_at_delta = {row.values[1]: complex(*row.values[2:]) for row in rows[1::3]}
    assert abs(chi_at_delta[0.0]) < 1e-4 * two_level
    blocked = [abs(chi) for v, chi in chi_at_delta.items() if v > 0]
    assert blocked[0] > 0.1 * two_level


def test_sweeps_check_the_experiment():
    with pytest.raises(ValueError):
        sweep_transfer_vs_v(SweepSpec.default("blocking", points=2))


@pytest.mark.slow
def test_sweep_ghz_vs_vjk():
    spec = SweepSpec.default("ghz", start=1e3, stop=1e4, points=2)
    spec = SweepSpec(spec.experiment, spec.axis, spec.base, x_max_values=(0.1, 0.4))
    rows = sweep_ghz_vs_vjk(spec)
    assert [row.values[1] for row in rows] == [0.1, 0.1, 0.4, 0.4]
    narrow, wide = rows[1].values[2], rows[3].values[2]
    assert narrow > wide

    base = spec.base
    omega_p_max = 0.1 * base.omega_c / np.sqrt(2.0)
    params = base.replace(
        omega_p_max=omega_p_max, t_raman=pi_pulse_duration(base.delta, omega_p_max)
    )
    expected = analytic_ghz_fidelity(3, phase_phi(params).phi)
    assert narrow == pytest.approx(expected, abs=1e-2)
