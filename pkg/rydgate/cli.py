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
Rydgate CLI
-----------

.. code-block:: shell

    $ rydgate preset dump
    $ rydgate gate --control 1 --ensemble AA --v-control 40,40
    $ rydgate sweep blocking --points 20 --out fig3b.csv
    $ rydgate interfere --phi 1,0 --u-b global_phase=1.0472
    $ rydgate validate

Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
numerical failures (integrator errors, failed sweep points or checks).
"""

import asyncio
import contextlib
import json
import sys
from dataclasses import replace
from typing import List
from typing import Optional
from typing import Sequence

import click
import numpy as np
import yaml

from rydgate.analytic import EigenTrackingError
from rydgate.config import ConfigError
from rydgate.config import RydGateConfig
from rydgate.config import RydGateSettings
from rydgate.config import parse_list
from rydgate.config import parse_matrix
from rydgate.dynamics import IntegrationError
from rydgate.dynamics import IntegratorConfig
from rydgate.dynamics import IntegratorMethod
from rydgate.dynamics import TrajectoryRecorder
from rydgate.gate import ControlPulse
from rydgate.gate import GateOptions
from rydgate.gate import run_gate
from rydgate.hilbert import Model
from rydgate.interferometer import BranchUnitary
from rydgate.interferometer import GateMode
from rydgate.interferometer import run_interferometer
from rydgate.logger import get_logger
from rydgate.logger import set_log_level
from rydgate.physics import PhysParams
from rydgate.physics import mhz
from rydgate.physics import us
from rydgate.sweeps import Experiment
from rydgate.sweeps import SweepSpec
from rydgate.sweeps import aio_sweep_to_csv
from rydgate.validation import run_checks
from rydgate.version import __version__

LOGGER = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

#: Default trajectory samples per Raman pulse
TRAJECTORY_SAMPLES = 200

MODEL_CHOICE = click.Choice([m.value for m in Model], case_sensitive=False)


@contextlib.contextmanager
def exit_codes():
    """Map domain errors to exit codes, with the message on stderr"""
    try:
        yield
    except (IntegrationError, EigenTrackingError) as err:
        click.echo(f"Numerical failure: {err}", err=True)
        raise click.exceptions.Exit(EXIT_NUMERIC)
    except (ValueError, OSError) as err:
        click.echo(f"Error: {err}", err=True)
        raise click.exceptions.Exit(EXIT_CONFIG)


def load_config(config_file: Optional[str]) -> RydGateConfig:
    if config_file:
        return RydGateConfig.load(config_file)
    return RydGateConfig(preset="rb87")


def parse_control(text: str):
    """``0``, ``1`` or ``alpha,beta`` with complex amplitudes like ``0.6,0.8j``"""
    text = text.strip()
    if text in ("0", "1"):
        return text
    values = [complex(v.strip().replace(" ", "")) for v in text.split(",")]
    if len(values) != 2:
        raise ValueError(f"--control must be 0, 1 or alpha,beta: {text!r}")
    return tuple(values)


def gate_params(
    config: RydGateConfig,
    n_atoms: int,
    v_control: Optional[str],
    v_ensemble: Optional[str],
) -> PhysParams:
    params = config.to_params(n_atoms=n_atoms)
    control = parse_list(v_control) if v_control else None
    ensemble = None
    if v_ensemble:
        rows = parse_matrix(v_ensemble)
        ensemble = rows[0][0] if len(rows) == 1 and len(rows[0]) == 1 else rows
    if control is not None and len(control) == 1:
        control = control[0]
    if control is not None or ensemble is not None:
        params = params.with_interactions(control, ensemble)
    return params


@click.group()
@click.version_option(__version__, prog_name="rydgate")
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Log level (default LOG_LEVEL or INFO)",
)
def cli(log_level):
    """Simulate the mesoscopic Rydberg gate"""
    settings = RydGateSettings()
    set_log_level(log_level or settings.log_level)


@cli.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--control", default="1", show_default=True, help="0, 1 or alpha,beta")
@click.option("--ensemble", default="A", show_default=True, help="labels over A and B")
@click.option("--model", type=MODEL_CHOICE, default=Model.EFFECTIVE.value, show_default=True)
@click.option("--decay/--no-decay", default=False, show_default=True)
@click.option("--v-control", help="V_k/eps, one value or a list like 40,40")
@click.option("--v-ensemble", help="V_jk/eps, one value or rows like '0,5;5,0'")
@click.option(
    "--control-rabi-mhz", type=float, help="resolve the control pi pulses at Ω_r = 2π·f"
)
@click.option(
    "--method",
    type=click.Choice([m.value for m in IntegratorMethod], case_sensitive=False),
    default=IntegratorMethod.RK_ADAPTIVE.value,
    show_default=True,
)
@click.option("--dt-us", type=float, help="RK4_FIXED step, μs")
@click.option(
    "--transfer-phase/--no-transfer-phase",
    default=True,
    show_default=True,
    help="target -(-1)^N on the transfer branch",
)
@click.option("--trajectory", type=click.Path(dir_okay=False), help="trajectory CSV file")
@click.option("--sample-interval", type=float, help="trajectory sample interval, μs")
@click.option("--snapshot", type=click.Path(dir_okay=False), help="final state file")
def gate(
    config_file,
    control,
    ensemble,
    model,
    decay,
    v_control,
    v_ensemble,
    control_rabi_mhz,
    method,
    dt_us,
    transfer_phase,
    trajectory,
    sample_interval,
    snapshot,
):
    """Run the gate once and print its report"""
    with exit_codes():
        config = load_config(config_file)
        params = gate_params(config, len(ensemble), v_control, v_ensemble)
        pulse = ControlPulse()
        if control_rabi_mhz:
            pulse = ControlPulse.resolved(mhz(control_rabi_mhz))
        options = GateOptions(
            model=Model.parse(model),
            include_decay=decay,
            control_pulse=pulse,
            integrator=IntegratorConfig(
                method=IntegratorMethod(method.upper()),
                dt=us(dt_us) if dt_us else None,
            ),
            track_transfer_phase=transfer_phase,
        )
        recorder = None
        if trajectory:
            interval = params.t_raman / TRAJECTORY_SAMPLES
            if sample_interval:
                interval = us(sample_interval)
            recorder = TrajectoryRecorder(interval)

        outcome = run_gate(parse_control(control), ensemble, params, options, recorder)
        click.echo(outcome.report(), nl=False)
        if recorder is not None:
            recorder.dump(trajectory)
        if snapshot:
            outcome.final_state.dump(snapshot)


@cli.command()
@click.argument(
    "experiment", type=click.Choice([e.value for e in Experiment], case_sensitive=False)
)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--start", type=float)
@click.option("--stop", type=float)
@click.option("--points", type=int)
@click.option("--spacing", type=click.Choice(["linear", "log"]))
@click.option("--x-max", help="GHZ curves, e.g. 0.1,0.2,0.3,0.4")
@click.option("--workers", type=int, help="worker processes (default RYDGATE_WORKERS or 1)")
@click.option("--model", type=MODEL_CHOICE)
@click.option("--decay/--no-decay", default=None)
@click.option("--out", default=None, help="CSV file, or - for stdout (default)")
def sweep(
    experiment, config_file, start, stop, points, spacing, x_max, workers, model, decay, out
):
    """Run a parameter sweep and write its CSV"""
    with exit_codes():
        config = RydGateConfig.load(config_file) if config_file else RydGateConfig()
        spec = SweepSpec.from_config(config, experiment)
        axis_changes = {
            key: value
            for key, value in (
                ("start", start),
                ("stop", stop),
                ("points", points),
                ("spacing", spacing),
            )
            if value is not None
        }
        options = spec.options
        if model is not None:
            options = replace(options, model=Model.parse(model))
        if decay is not None:
            options = replace(options, include_decay=decay)
        workers = workers or RydGateSettings().workers or config.sweep.workers or 1
        spec = replace(
            spec,
            axis=replace(spec.axis, **axis_changes),
            options=options,
            x_max_values=tuple(parse_list(x_max)) if x_max else spec.x_max_values,
            worker_count=workers,
        )
        rows = asyncio.run(aio_sweep_to_csv(spec, out or config.sweep.out or "-"))
        if any(row.failed for row in rows):
            raise click.exceptions.Exit(EXIT_NUMERIC)


@cli.command()
@click.option("--phi", default="1,0", show_default=True, help="auxiliary state amplitudes")
@click.option("--u-a", default="identity", show_default=True, help="U_A description")
@click.option("--u-b", default="identity", show_default=True, help="U_B description")
@click.option(
    "--mode",
    type=click.Choice([m.value for m in GateMode], case_sensitive=False),
    default=GateMode.IDEAL.value,
    show_default=True,
)
@click.option("--n-atoms", type=int, default=1, show_default=True)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", type=MODEL_CHOICE, default=Model.EFFECTIVE.value, show_default=True)
@click.option("--decay/--no-decay", default=False, show_default=True)
def interfere(phi, u_a, u_b, mode, n_atoms, config_file, model, decay):
    """
    Estimate <Φ|U_A†U_B|Φ> with the gate interferometer

    Branch unitaries are identity, global_phase=THETA, phase_rotation=MODE,THETA,
    two_level_mixing=I,J,THETA[,PHASE] or a .npy matrix file.
    """
    with exit_codes():
        amplitudes = np.array([complex(v.strip()) for v in phi.split(",")])
        amplitudes = amplitudes / np.linalg.norm(amplitudes)
        d_aux = amplitudes.size
        gate_mode = GateMode(mode.upper())
        params = None
        options = None
        if gate_mode is GateMode.SIMULATED:
            params = load_config(config_file).to_params(n_atoms=n_atoms)
            options = GateOptions(model=Model.parse(model), include_decay=decay)
        result = run_interferometer(
            amplitudes,
            BranchUnitary.parse(u_a, d_aux),
            BranchUnitary.parse(u_b, d_aux),
            gate_mode=gate_mode,
            params=params,
            options=options,
            n_atoms=n_atoms,
        )
        click.echo(result.report(), nl=False)


@cli.command()
@click.option("--full", is_flag=True, help="include the slow checks")
def validate(full):
    """Run the invariant checks"""
    results = run_checks(quick=not full)
    for result in results:
        click.echo(str(result))
    failed = [r.name for r in results if not r.passed]
    if failed:
        click.echo(f"{len(failed)} check(s) failed: {', '.join(failed)}", err=True)
        raise click.exceptions.Exit(EXIT_NUMERIC)


@cli.group()
def preset():
    """Parameter presets"""


@preset.command("dump")
@click.option("--n-atoms", type=int, default=1, show_default=True)
@click.option(
    "--format", "fmt", type=click.Choice(["ini", "yaml"]), default="ini", show_default=True
)
def preset_dump(n_atoms, fmt):
    """Print the Rb87 preset as a config file"""
    with exit_codes():
        config = RydGateConfig.from_params(PhysParams.rb87(n_atoms=n_atoms))
        if fmt == "yaml":
            data = json.loads(config.json(exclude_none=True))
            data = {key: value for key, value in data.items() if value != {}}
            click.echo(yaml.safe_dump(data, sort_keys=False), nl=False)
        else:
            click.echo(config.dumps(), nl=False)


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line and return its exit code.

    :param argv: arguments without the program name (default ``sys.argv[1:]``)
    """
    args: Optional[List[str]] = list(argv) if argv is not None else None
    try:
        code = cli.main(args=args, prog_name="rydgate", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as err:
        err.show()
        return EXIT_CONFIG
    except ConfigError as err:
        click.echo(f"Error: {err}", err=True)
        return EXIT_CONFIG
    return code if isinstance(code, int) else EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
