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
Rydgate Sweeps
--------------

Parameter sweeps of the gate, one experiment per CSV schema:

- ``susceptibility``: ``delta,v_over_eps,chi_re,chi_im`` for V = 0 and V = V_k
- ``blocking``: ``ratio,fidelity,norm_loss``, control in |0> vs Ω_c/max Ω_p
- ``transfer``: ``v_over_eps,fidelity,norm_loss``, control in |1> vs V_k/ε
- ``ghz``: ``v_jk_over_eps,x_max,fidelity,norm_loss``, N=3 GHZ preparation

Sweep points are independent tasks.  With more than one worker they are
fanned out to a process pool through asyncio tasks, bounded by a semaphore,
and collected by index so that the rows always come out in axis order:

.. code-block::

    spec = SweepSpec.default(Experiment.BLOCKING_VS_RATIO, points=5)
    rows = run_sweep(spec)
    print(render_csv(spec.experiment, rows))
"""

import asyncio
import concurrent.futures
import csv
import enum
import io
import sys
import time
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from pathlib import Path
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import aiofiles
import numpy as np

from rydgate.analytic import EigenTrackingError
from rydgate.config import RydGateConfig
from rydgate.dynamics import IntegrationError
from rydgate.gate import GateOptions
from rydgate.gate import run_gate
from rydgate.hilbert import Model
from rydgate.logger import get_logger
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import epsilon
from rydgate.physics import pi_pulse_duration
from rydgate.physics import susceptibility

LOGGER = get_logger(__name__)

#: GHZ sweep curves
DEFAULT_X_MAX: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)

#: Point errors that fail one row and let the sweep continue
POINT_ERRORS = (
    IntegrationError,
    EigenTrackingError,
    ParameterError,
    FloatingPointError,
    np.linalg.LinAlgError,
)


class Experiment(str, enum.Enum):
    SUSCEPTIBILITY = "susceptibility"
    BLOCKING_VS_RATIO = "blocking"
    TRANSFER_VS_V = "transfer"
    GHZ_VS_VJK = "ghz"

    @classmethod
    def parse(cls, value: Union[str, "Experiment"]) -> "Experiment":
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for experiment in cls:
            if text.lower() == experiment.value or text.upper() == experiment.name:
                return experiment
        names = ", ".join(e.value for e in cls)
        raise ValueError(f"Unknown experiment {value!r}, use one of {names}")


class Spacing(str, enum.Enum):
    LINEAR = "linear"
    LOG = "log"


class RowStatus(str, enum.Enum):
    OK = "ok"
    FAILED = "failed"


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    points: int
    spacing: Spacing = Spacing.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "spacing", Spacing(self.spacing))
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"An axis needs at least 2 points: {self.points}")
        if not (np.isfinite(self.start) and np.isfinite(self.stop)):
            raise ValueError(f"Axis bounds must be finite: {self.start}, {self.stop}")
        if self.spacing is Spacing.LOG and (self.start <= 0 or self.stop <= 0):
            raise ValueError(f"A log axis needs positive bounds: {self.start}, {self.stop}")

    def values(self) -> np.ndarray:
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.start, self.stop, int(self.points))
        return np.linspace(self.start, self.stop, int(self.points))


COLUMNS: Dict[Experiment, Tuple[str, ...]] = {
    Experiment.SUSCEPTIBILITY: ("delta", "v_over_eps", "chi_re", "chi_im"),
    Experiment.BLOCKING_VS_RATIO: ("ratio", "fidelity", "norm_loss"),
    Experiment.TRANSFER_VS_V: ("v_over_eps", "fidelity", "norm_loss"),
    Experiment.GHZ_VS_VJK: ("v_jk_over_eps", "x_max", "fidelity", "norm_loss"),
}

#: the susceptibility axis is δ - Δ in units of Ω_c
DEFAULT_AXES: Dict[Experiment, Axis] = {
    Experiment.SUSCEPTIBILITY: Axis("detuning_over_omega_c", -5.0, 5.0, 401),
    Experiment.BLOCKING_VS_RATIO: Axis("ratio", 1.0, 6.0, 25),
    Experiment.TRANSFER_VS_V: Axis("v_over_eps", 1.0, 1e3, 30, Spacing.LOG),
    Experiment.GHZ_VS_VJK: Axis("v_jk_over_eps", 0.1, 1e4, 30, Spacing.LOG),
}

DEFAULT_ATOMS: Dict[Experiment, int] = {
    Experiment.SUSCEPTIBILITY: 1,
    Experiment.BLOCKING_VS_RATIO: 1,
    Experiment.TRANSFER_VS_V: 1,
    Experiment.GHZ_VS_VJK: 3,
}

Task = Tuple[float, ...]


@dataclass(frozen=True)
class SweepSpec:
    experiment: Experiment
    axis: Axis
    #: the parameters that points modify; interactions are kept in units of ε
    base: PhysParams
    options: GateOptions = field(default_factory=GateOptions)
    x_max_values: Tuple[float, ...] = DEFAULT_X_MAX
    worker_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment.parse(self.experiment))
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be >= 1: {self.worker_count}")
        if self.experiment is Experiment.GHZ_VS_VJK:
            if not self.x_max_values or any(x <= 0 for x in self.x_max_values):
                raise ValueError(f"x_max values must be > 0: {self.x_max_values}")
        if self.experiment is Experiment.SUSCEPTIBILITY and self.base.gamma_p <= 0:
            raise ParameterError("The susceptibility sweep needs gamma_p > 0")
        if self.experiment is Experiment.BLOCKING_VS_RATIO and self.axis.start <= 0:
            raise ValueError(f"Control ratios must be > 0: {self.axis.start}")
        if self.experiment in (Experiment.TRANSFER_VS_V, Experiment.GHZ_VS_VJK):
            if min(self.axis.start, self.axis.stop) < 0:
                raise ValueError("Interaction axes must be >= 0")

    @property
    def columns(self) -> Tuple[str, ...]:
        return COLUMNS[self.experiment]

    @classmethod
    def default(
        cls,
        experiment: Union[str, Experiment],
        base: Optional[PhysParams] = None,
        **axis_changes,
    ) -> "SweepSpec":
        """The default grid of an experiment on the Rb87 preset"""
        experiment = Experiment.parse(experiment)
        axis = replace(DEFAULT_AXES[experiment], **axis_changes)
        base = base or PhysParams.rb87(n_atoms=DEFAULT_ATOMS[experiment])
        return cls(experiment, axis, base)

    @classmethod
    def from_config(
        cls, config: RydGateConfig, experiment: Optional[Union[str, Experiment]] = None
    ) -> "SweepSpec":
        """
        A sweep from the ``[sweep]`` section; without laser settings the
        physics comes from the Rb87 preset.
        """
        section = config.sweep
        experiment = experiment or section.experiment
        if experiment is None:
            raise ValueError("No experiment given")
        experiment = Experiment.parse(experiment)

        axis_changes = {
            key: getattr(section, key)
            for key in ("start", "stop", "points", "spacing")
            if getattr(section, key) is not None
        }
        axis = replace(DEFAULT_AXES[experiment], **axis_changes)
        if config.preset is None and config.lasers.delta_ghz is None:
            config = config.copy(update={"preset": "rb87"})
        base = config.to_params(n_atoms=config.atoms.n or DEFAULT_ATOMS[experiment])
        options = GateOptions(
            model=section.model or Model.EFFECTIVE, include_decay=bool(section.decay)
        )
        return cls(
            experiment=experiment,
            axis=axis,
            base=base,
            options=options,
            x_max_values=tuple(section.x_max or DEFAULT_X_MAX),
            worker_count=section.workers or 1,
        )

    def tasks(self) -> List[Task]:
        """One task per CSV row, in output order"""
        values = [float(v) for v in self.axis.values()]
        if self.experiment is Experiment.GHZ_VS_VJK:
            return [(v, float(x)) for x in self.x_max_values for v in values]
        if self.experiment is Experiment.SUSCEPTIBILITY:
            v_k = max(self.base.v_control, default=0.0) / epsilon(self.base)
            return [(offset, v) for v in (0.0, v_k) for offset in values]
        return [(v,) for v in values]


@dataclass(frozen=True)
class SweepRow:
    #: one value per CSV column
    values: Tuple[float, ...]
    wall_time: float
    status: RowStatus = RowStatus.OK
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.status is RowStatus.FAILED

    def csv_fields(self) -> List[str]:
        return [format(value, ".17g") for value in self.values]


def _in_units_of_eps(params: PhysParams) -> Tuple[List[float], List[List[float]]]:
    eps = epsilon(params)
    return (
        [v / eps for v in params.v_control],
        (params.v_ensemble_matrix / eps).tolist(),
    )


def blocking_point(spec: SweepSpec, ratio: float) -> Tuple[float, ...]:
    base = spec.base
    v_control, v_ensemble = _in_units_of_eps(base)
    params = base.replace(omega_c=ratio * base.omega_p_max, v_control=(), v_ensemble=())
    params = params.with_interactions(v_control, v_ensemble)
    outcome = run_gate("0", "A" * params.n_atoms, params, spec.options)
    return ratio, outcome.fidelity, outcome.norm_loss


def transfer_point(spec: SweepSpec, v_over_eps: float) -> Tuple[float, ...]:
    params = spec.base.with_interactions(v_control_over_eps=v_over_eps)
    outcome = run_gate("1", "A" * params.n_atoms, params, spec.options)
    return v_over_eps, outcome.fidelity, outcome.norm_loss


def ghz_point(spec: SweepSpec, v_jk_over_eps: float, x_max: float) -> Tuple[float, ...]:
    base = spec.base
    omega_p_max = x_max * base.omega_c / np.sqrt(2.0)
    params = base.replace(
        omega_p_max=omega_p_max, t_raman=pi_pulse_duration(base.delta, omega_p_max)
    )
    params = params.with_interactions(v_ensemble_over_eps=v_jk_over_eps)
    amplitude = 1.0 / np.sqrt(2.0)
    outcome = run_gate((amplitude, amplitude), "A" * params.n_atoms, params, spec.options)
    return v_jk_over_eps, x_max, outcome.fidelity, outcome.norm_loss


def susceptibility_point(spec: SweepSpec, offset: float, v_over_eps: float) -> Tuple[float, ...]:
    base = spec.base
    delta = base.delta + offset * base.omega_c
    chi = susceptibility(delta, base, v_over_eps * epsilon(base))
    return delta, v_over_eps, chi.real, chi.imag


POINTS: Dict[Experiment, Callable[..., Tuple[float, ...]]] = {
    Experiment.SUSCEPTIBILITY: susceptibility_point,
    Experiment.BLOCKING_VS_RATIO: blocking_point,
    Experiment.TRANSFER_VS_V: transfer_point,
    Experiment.GHZ_VS_VJK: ghz_point,
}


def _failed_values(spec: SweepSpec, task: Task) -> Tuple[float, ...]:
    if spec.experiment is Experiment.SUSCEPTIBILITY:
        offset, v_over_eps = task
        task = (spec.base.delta + offset * spec.base.omega_c, v_over_eps)
    n_results = len(spec.columns) - len(task)
    return tuple(task) + (float("nan"),) * n_results


def run_point(spec: SweepSpec, task: Task) -> SweepRow:
    """
    Compute one row; numerical failures give a failed row of NaN results.
    """
    start = time.perf_counter()
    try:
        values = POINTS[spec.experiment](spec, *task)
    except POINT_ERRORS as err:
        LOGGER.error("%s point %s failed: %s", spec.experiment.value, task, err)
        return SweepRow(
            values=_failed_values(spec, task),
            wall_time=time.perf_counter() - start,
            status=RowStatus.FAILED,
            error=str(err),
        )
    return SweepRow(values=tuple(float(v) for v in values), wall_time=time.perf_counter() - start)


async def run_sweep_async(
    spec: SweepSpec, point: Callable[[SweepSpec, Task], SweepRow] = run_point
) -> List[SweepRow]:
    """
    Run all sweep points; rows are returned in task order.

    :param spec: the sweep
    :param point: the point function; it must be picklable for a process pool
    """
    tasks = spec.tasks()
    LOGGER.info(
        "Sweep %s: %d points with %d worker(s)",
        spec.experiment.value,
        len(tasks),
        spec.worker_count,
    )
    if spec.worker_count == 1:
        rows = []
        for index, task in enumerate(tasks):
            rows.append(point(spec, task))
            LOGGER.info("Sweep %s: %d/%d", spec.experiment.value, index + 1, len(tasks))
        return rows

    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(spec.worker_count)
    rows: List[Optional[SweepRow]] = [None] * len(tasks)

    with concurrent.futures.ProcessPoolExecutor(max_workers=spec.worker_count) as executor:

        async def submit(index: int, task: Task) -> Tuple[int, SweepRow]:
            async with semaphore:
                row = await loop.run_in_executor(executor, point, spec, task)
                return index, row

        futures = [asyncio.create_task(submit(i, task)) for i, task in enumerate(tasks)]
        for done, future in enumerate(asyncio.as_completed(futures), start=1):
            index, row = await future
            rows[index] = row
            LOGGER.info("Sweep %s: %d/%d", spec.experiment.value, done, len(tasks))

    return rows


def run_sweep(spec: SweepSpec) -> List[SweepRow]:
    return asyncio.run(run_sweep_async(spec))


def _run_experiment(spec: SweepSpec, experiment: Experiment) -> List[SweepRow]:
    if spec.experiment is not experiment:
        raise ValueError(f"Expected a {experiment.value} sweep, got {spec.experiment.value}")
    return run_sweep(spec)


def sweep_blocking_vs_ratio(spec: SweepSpec) -> List[SweepRow]:
    """Blocking fidelity, control in |0>, against Ω_c/max Ω_p"""
    return _run_experiment(spec, Experiment.BLOCKING_VS_RATIO)


def sweep_transfer_vs_v(spec: SweepSpec) -> List[SweepRow]:
    """Transfer fidelity, control in |1>, against V_k/ε"""
    return _run_experiment(spec, Experiment.TRANSFER_VS_V)


def sweep_ghz_vs_vjk(spec: SweepSpec) -> List[SweepRow]:
    """N-atom GHZ fidelity against a uniform V_jk/ε, one curve per x_max"""
    return _run_experiment(spec, Experiment.GHZ_VS_VJK)


def sweep_susceptibility(spec: SweepSpec) -> List[SweepRow]:
    """χ(δ) without a Rydberg shift and with the shift V_k"""
    return _run_experiment(spec, Experiment.SUSCEPTIBILITY)


def render_csv(experiment: Union[str, Experiment], rows: Sequence[SweepRow]) -> str:
    """CSV text with a header row, full precision values and LF line endings"""
    experiment = Experiment.parse(experiment)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS[experiment])
    for row in rows:
        writer.writerow(row.csv_fields())
    return buffer.getvalue()


async def aio_write_text(text: str, out: Union[str, Path]) -> Optional[Path]:
    """
    Write text to a file, or to standard output when ``out`` is ``-``

    :return: the file path, or None for standard output
    """
    if str(out) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    path = Path(out)
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, mode="w", newline="") as dst:
        await dst.write(text)
    LOGGER.info("Saved CSV to %s", path)
    return path


async def aio_sweep_to_csv(spec: SweepSpec, out: Union[str, Path]) -> List[SweepRow]:
    """Run a sweep and write its CSV"""
    rows = await run_sweep_async(spec)
    await aio_write_text(render_csv(spec.experiment, rows), out)
    failed = sum(row.failed for row in rows)
    if failed:
        LOGGER.warning(
            "Sweep %s: %d of %d points failed", spec.experiment.value, failed, len(rows)
        )
    return rows
