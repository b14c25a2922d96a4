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
Rydgate Dynamics
----------------

Integration of ``i dψ/dt = H(t)ψ`` over a pulse window.

- ``RK_ADAPTIVE`` (default) steps ``scipy.integrate.DOP853``, an embedded
  Runge-Kutta pair of order 8(5,3) that handles complex state vectors; the
  step is capped so that the fastest model period is resolved with
  :py:attr:`IntegratorConfig.steps_per_period` steps.
- ``RK4_FIXED`` is the classical fourth-order scheme with a fixed step.

Strong interactions push some configurations far out of resonance; with
``V = 1e4 ε`` an explicit stepper would spend all its effort on phases that do
not matter.  Configurations whose static energy is above
``elimination_ratio * natural_scale`` are eliminated adiabatically: the kept
amplitudes evolve under ``H_PP - H_PS D_S^-1 H_SP`` and the eliminated ones are
slaved as ``-D_S^-1 H_SP ψ_P``.  This is the same second-order elimination
that turns the four-level atom into the effective three-level atom.

The norm is never renormalized; with decay, the norm loss is the scattering
probability.

.. code-block::

    spec = HamiltonianSpec(Model.EFFECTIVE, PhysParams.rb87())
    state = CompositeState.basis(LevelScheme(Model.EFFECTIVE, 1), "0", "A")
    report = evolve(state, spec, 0.0, spec.t_stop)
    report.final_state.level_populations()["A"]  # > 0.99
"""

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from scipy.integrate import DOP853

from rydgate.hamiltonian import Hamiltonian
from rydgate.hamiltonian import HamiltonianSpec
from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import SchemeError
from rydgate.hilbert import control_indicator
from rydgate.hilbert import occupation_counts
from rydgate.logger import get_logger
from rydgate.physics import ParameterError

LOGGER = get_logger(__name__)

#: Normalization slack for input states
NORM_TOL: float = 1e-9

#: Eliminated configurations may carry at most this initial weight
ELIMINATION_WEIGHT_TOL: float = 1e-12

#: Relative slack for contiguity of piecewise segments
CONTIGUITY_TOL: float = 1e-12


class IntegrationError(RuntimeError):
    """The integrator could not finish"""


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class IntegratorMethod(str, enum.Enum):
    RK4_FIXED = "RK4_FIXED"
    RK_ADAPTIVE = "RK_ADAPTIVE"


@dataclass(frozen=True)
class IntegratorConfig:
    #: RK_ADAPTIVE (DOP853) or RK4_FIXED
    method: IntegratorMethod = IntegratorMethod.RK_ADAPTIVE
    #: fixed step for RK4_FIXED, s
    dt: Optional[float] = None
    #: relative tolerance of the adaptive pair
    rel_tol: float = 1e-9
    #: absolute tolerance of the adaptive pair
    abs_tol: float = 1e-12
    #: a step budget; exceeding it raises MaxStepsExceeded
    max_steps: int = 2_000_000
    #: minimum steps per period of the fastest model frequency
    steps_per_period: int = 20
    #: eliminate configurations above this multiple of the model scale (None: never)
    elimination_ratio: Optional[float] = 100.0

    def __post_init__(self):
        object.__setattr__(self, "method", IntegratorMethod(self.method))
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0: {self.dt}")
        if self.method is IntegratorMethod.RK4_FIXED and self.dt is None:
            raise ValueError("RK4_FIXED needs a step dt")
        for name in ("rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not 0 < value <= 1e-3:
                raise ValueError(f"{name} must be in (0, 1e-3]: {value}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1: {self.max_steps}")
        if self.steps_per_period < 1:
            raise ValueError(f"steps_per_period must be >= 1: {self.steps_per_period}")
        if self.elimination_ratio is not None and not self.elimination_ratio > 1:
            raise ValueError(f"elimination_ratio must be > 1: {self.elimination_ratio}")

    @classmethod
    def get_default_config(cls):
        return cls()

    def max_step(self, hamiltonian: Hamiltonian) -> float:
        scale = hamiltonian.natural_scale
        if scale <= 0:
            return np.inf
        return 2 * np.pi / (self.steps_per_period * scale)


@dataclass(frozen=True, eq=False)
class EvolutionReport:
    final_state: CompositeState
    #: 1 - |ψ(t1)|²/|ψ(t0)|², the decay channel weight
    norm_loss: float
    steps_taken: int
    #: peak over time of the weight on configurations with two ensemble atoms in R
    max_rydberg_double_occupancy: float
    #: peak over time of the joint weight of control r and ensemble R
    max_control_rydberg_occupancy: float
    methods: Tuple[IntegratorMethod, ...]
    #: number of adiabatically eliminated configurations
    eliminated_states: int = 0
    t0: float = 0.0
    t1: float = 0.0


class TrajectoryRecorder:
    """
    Samples populations along an evolution, for the trajectory CSV.

    Populations are summed over atoms; ``pop_doubleR`` is the weight on
    configurations with at least two atoms in ``R``, counted per pair.

    :param sample_interval: time between samples, s
    """

    COLUMNS = ("t", "norm", "pop_A", "pop_B", "pop_P", "pop_R", "pop_doubleR")

    def __init__(self, sample_interval: float):
        if not sample_interval > 0:
            raise ParameterError(f"sample_interval must be > 0: {sample_interval}")
        self.sample_interval = sample_interval
        self.rows: List[Tuple[float, ...]] = []
        self._next: Optional[float] = None
        self._direction = 1.0
        self._scheme: Optional[LevelScheme] = None
        self._counts = {}
        self._pairs = None

    def bind(self, scheme: LevelScheme, t_start: float, t_end: float):
        if scheme != self._scheme:
            self._scheme = scheme
            self._counts = {
                level: occupation_counts(scheme, level)
                for level in ("A", "B", "P", "R")
                if scheme.has_level(level)
            }
            counts = self._counts["R"]
            self._pairs = counts * (counts - 1) / 2.0
        self._direction = 1.0 if t_end >= t_start else -1.0
        if self._next is None:
            self._next = t_start

    def record(self, t: float, amplitudes: np.ndarray):
        prob = amplitudes.real ** 2 + amplitudes.imag ** 2
        pops = [float(prob @ self._counts[lv]) if lv in self._counts else 0.0 for lv in "ABPR"]
        row = (t, float(np.sqrt(prob.sum())), *pops, float(prob @ self._pairs))
        self.rows.append(row)

    def sample(self, t_prev: float, t_new: float, interpolate: Callable[[float], np.ndarray]):
        """Record every sample time in ``(t_prev, t_new]``, or ``t_prev`` on the first call"""
        d = self._direction
        while self._next is not None and d * (self._next - t_new) <= 0:
            if d * (self._next - t_prev) >= 0:
                self.record(self._next, interpolate(self._next))
            self._next += d * self.sample_interval

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for row in self.rows:
            writer.writerow([format(value, ".17g") for value in row])
        return buffer.getvalue()

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        LOGGER.info("Wrote %d trajectory samples: %s", len(self.rows), path)
        return path


class _Diagnostics:
    """Running maxima of the Rydberg double occupancies"""

    def __init__(self, scheme: LevelScheme):
        counts = occupation_counts(scheme, "R")
        self.pairs = counts * (counts - 1) / 2.0
        self.joint = control_indicator(scheme, "r") * counts
        self.max_double = 0.0
        self.max_joint = 0.0

    def update(self, amplitudes: np.ndarray):
        prob = amplitudes.real ** 2 + amplitudes.imag ** 2
        self.max_double = max(self.max_double, float(prob @ self.pairs))
        self.max_joint = max(self.max_joint, float(prob @ self.joint))


class _VectorField:
    """
    ``-i H(t) ψ`` on the kept configurations, with far-detuned
    configurations adiabatically eliminated when the config allows it.
    """

    def __init__(self, hamiltonian: Hamiltonian, cfg: IntegratorConfig, y0: np.ndarray):
        self.hamiltonian = hamiltonian
        self.keep = None
        self.drop = None
        eliminated = self._select(cfg, y0)
        if eliminated is not None:
            self.keep = np.flatnonzero(~eliminated)
            self.drop = np.flatnonzero(eliminated)
            self.blocks = []
            for component in hamiltonian.sparse_components:
                rows_keep = component[self.keep]
                rows_drop = component[self.drop]
                self.blocks.append(
                    (
                        rows_keep[:, self.keep].tocsr(),
                        rows_keep[:, self.drop].tocsr(),
                        rows_drop[:, self.keep].tocsr(),
                    )
                )
            h0 = hamiltonian.sparse_components[0]
            self.inverse_energy = 1.0 / h0.diagonal()[self.drop]

    @property
    def eliminated(self) -> int:
        return 0 if self.drop is None else int(self.drop.size)

    def _select(self, cfg: IntegratorConfig, y0: np.ndarray) -> Optional[np.ndarray]:
        hamiltonian = self.hamiltonian
        scale = hamiltonian.natural_scale
        if cfg.elimination_ratio is None or scale <= 0 or not hamiltonian.uses_sparse:
            return None
        energy = np.abs(hamiltonian.sparse_components[0].diagonal())
        eliminated = energy > cfg.elimination_ratio * scale
        if not eliminated.any() or eliminated.all():
            return None
        weight = float(np.sum(np.abs(y0[eliminated]) ** 2))
        if weight > ELIMINATION_WEIGHT_TOL:
            LOGGER.warning(
                "Initial state has weight %.3g on far-detuned configurations; "
                "integrating without elimination",
                weight,
            )
            return None
        LOGGER.debug(
            "Eliminating %d of %d configurations above %.4g rad/s",
            eliminated.sum(),
            eliminated.size,
            cfg.elimination_ratio * scale,
        )
        return eliminated

    def _factors(self, t: float) -> Tuple[float, float, float]:
        omega = self.hamiltonian.rabi(t)
        return 1.0, omega, omega * omega

    def reduce(self, amplitudes: np.ndarray) -> np.ndarray:
        if self.keep is None:
            return np.array(amplitudes, dtype=np.complex128)
        return np.array(amplitudes[self.keep], dtype=np.complex128)

    def _slaved(self, t: float, y: np.ndarray) -> np.ndarray:
        coupled = sum(f * (sp @ y) for f, (_, _, sp) in zip(self._factors(t), self.blocks) if f)
        return -self.inverse_energy * coupled

    def expand(self, t: float, y: np.ndarray) -> np.ndarray:
        if self.keep is None:
            return y
        full = np.zeros(self.hamiltonian.scheme.dimension, dtype=np.complex128)
        full[self.keep] = y
        full[self.drop] = self._slaved(t, y)
        return full

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        if self.keep is None:
            return -1j * self.hamiltonian.apply(t, y)
        factors = self._factors(t)
        slaved = self._slaved(t, y)
        result = np.zeros_like(y)
        for f, (pp, ps, _) in zip(factors, self.blocks):
            if f:
                result += f * (pp @ y + ps @ slaved)
        return -1j * result


def _check_finite(y: np.ndarray, t: float):
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(f"Non-finite amplitudes at t={t}")


def _integrate_adaptive(
    field: _VectorField,
    y: np.ndarray,
    t_start: float,
    t_end: float,
    cfg: IntegratorConfig,
    observe: Callable[[float, np.ndarray], None],
    recorder: Optional[TrajectoryRecorder],
) -> Tuple[np.ndarray, int]:
    solver = DOP853(
        field,
        t_start,
        y,
        t_end,
        max_step=cfg.max_step(field.hamiltonian),
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
    )
    steps = 0
    while solver.status == "running":
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"{steps} steps taken before t={solver.t}")
        t_prev = solver.t
        message = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"At t={solver.t}: {message}")
        steps += 1
        _check_finite(solver.y, solver.t)
        observe(solver.t, solver.y)
        if recorder is not None:
            dense = solver.dense_output()
            recorder.sample(t_prev, solver.t, lambda s: field.expand(s, dense(s)))
    return solver.y, steps


def _integrate_rk4(
    field: _VectorField,
    y: np.ndarray,
    t_start: float,
    t_end: float,
    cfg: IntegratorConfig,
    observe: Callable[[float, np.ndarray], None],
    recorder: Optional[TrajectoryRecorder],
) -> Tuple[np.ndarray, int]:
    n = max(1, int(np.ceil(abs(t_end - t_start) / cfg.dt - 1e-9)))
    if n > cfg.max_steps:
        raise MaxStepsExceeded(f"RK4 needs {n} steps, the budget is {cfg.max_steps}")
    h = (t_end - t_start) / n
    for i in range(n):
        t = t_start + i * h
        t_next = t_end if i == n - 1 else t_start + (i + 1) * h
        k1 = field(t, y)
        k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = field(t_next, y + h * k3)
        y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(y_next, t_next)
        observe(t_next, y_next)
        if recorder is not None:
            y_prev = y
            recorder.sample(
                t,
                t_next,
                lambda s: field.expand(s, y_prev + (s - t) / h * (y_next - y_prev)),
            )
        y = y_next
    return y, n


def _evolve(
    state: CompositeState,
    hamiltonian: Hamiltonian,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
    backward: bool = False,
    recorder: Optional[TrajectoryRecorder] = None,
) -> EvolutionReport:
    t_start, t_end = (t1, t0) if backward else (t0, t1)
    y0 = state.amplitudes
    field = _VectorField(hamiltonian, cfg, y0)
    diagnostics = _Diagnostics(state.scheme)
    diagnostics.update(y0)

    def observe(t: float, y: np.ndarray):
        diagnostics.update(field.expand(t, y))

    if recorder is not None:
        recorder.bind(state.scheme, t_start, t_end)
        recorder.sample(t_start, t_start, lambda s: y0)

    integrate = (
        _integrate_rk4 if cfg.method is IntegratorMethod.RK4_FIXED else _integrate_adaptive
    )
    y, steps = integrate(field, field.reduce(y0), t_start, t_end, cfg, observe, recorder)
    final = field.expand(t_end, y)

    norm0 = float(np.vdot(y0, y0).real)
    norm1 = float(np.vdot(final, final).real)
    norm_loss = 1.0 - norm1 / norm0 if norm0 > 0 else 0.0
    LOGGER.debug(
        "%s %s [%.6g, %.6g]: %d steps, norm loss %.3g, %d eliminated",
        cfg.method.value,
        hamiltonian,
        t_start,
        t_end,
        steps,
        norm_loss,
        field.eliminated,
    )
    return EvolutionReport(
        final_state=CompositeState(state.scheme, final),
        norm_loss=norm_loss,
        steps_taken=steps,
        max_rydberg_double_occupancy=diagnostics.max_double,
        max_control_rydberg_occupancy=diagnostics.max_joint,
        methods=(cfg.method,),
        eliminated_states=field.eliminated,
        t0=t0,
        t1=t1,
    )


def _bind(h: Union[HamiltonianSpec, Hamiltonian], state: CompositeState) -> Hamiltonian:
    hamiltonian = h if isinstance(h, Hamiltonian) else Hamiltonian(h, state.scheme)
    if hamiltonian.scheme != state.scheme:
        raise SchemeError(
            f"State {state.scheme.header()} does not fit {hamiltonian!r}"
        )
    return hamiltonian


def evolve(
    state: CompositeState,
    h: Union[HamiltonianSpec, Hamiltonian],
    t0: float,
    t1: float,
    cfg: Optional[IntegratorConfig] = None,
    backward: bool = False,
    recorder: Optional[TrajectoryRecorder] = None,
) -> EvolutionReport:
    """
    Integrate ``i dψ/dt = H(t)ψ`` from ``t0`` to ``t1``.

    :param state: a normalized state at ``t0`` (at ``t1`` if ``backward``)
    :param h: a Hamiltonian spec, or a prepared Hamiltonian to reuse
    :param t0: start time, s, inside the pulse window
    :param t1: end time, s, with ``t0 < t1``
    :param cfg: integrator settings (default :py:meth:`IntegratorConfig.get_default_config`)
    :param backward: integrate from ``t1`` back to ``t0``
    :param recorder: an optional trajectory recorder
    :return: the final state and diagnostics
    :raises ParameterError: for an invalid window or an unnormalized state
    :raises IntegrationError: when the integrator fails
    """
    cfg = cfg or IntegratorConfig.get_default_config()
    hamiltonian = _bind(h, state)
    hamiltonian.spec.window(t0, t1)
    if abs(state.norm() - 1.0) > NORM_TOL:
        raise ParameterError(f"State must be normalized, its norm is {state.norm()}")
    return _evolve(state, hamiltonian, t0, t1, cfg, backward, recorder)


Segment = Tuple[Union[HamiltonianSpec, Hamiltonian], float, float]


def evolve_piecewise(
    state: CompositeState,
    segments: Sequence[Segment],
    cfg: Optional[IntegratorConfig] = None,
    recorder: Optional[TrajectoryRecorder] = None,
) -> EvolutionReport:
    """
    Evolve through contiguous segments ``(h, t0, t1)`` in order.

    The norm loss aggregates multiplicatively, ``1 - Π(1 - loss_i)``, and the
    occupancy diagnostics are maxima over all segments.

    :raises ParameterError: for an empty list, or a gap or overlap between segments
    """
    cfg = cfg or IntegratorConfig.get_default_config()
    if not segments:
        raise ParameterError("No segments to evolve")
    for (_, _, end), (_, start, _) in zip(segments[:-1], segments[1:]):
        slack = CONTIGUITY_TOL * max(abs(end), abs(start), 1e-300)
        if abs(end - start) > slack:
            raise ParameterError(f"Segments are not contiguous: {end} -> {start}")
    if abs(state.norm() - 1.0) > NORM_TOL:
        raise ParameterError(f"State must be normalized, its norm is {state.norm()}")

    survival = 1.0
    steps = 0
    max_double = 0.0
    max_joint = 0.0
    methods = []
    eliminated = 0
    for h, t0, t1 in segments:
        hamiltonian = _bind(h, state)
        hamiltonian.spec.window(t0, t1)
        report = _evolve(state, hamiltonian, t0, t1, cfg, recorder=recorder)
        state = report.final_state
        survival *= 1.0 - report.norm_loss
        steps += report.steps_taken
        max_double = max(max_double, report.max_rydberg_double_occupancy)
        max_joint = max(max_joint, report.max_control_rydberg_occupancy)
        methods.append(cfg.method)
        eliminated = max(eliminated, report.eliminated_states)

    return EvolutionReport(
        final_state=state,
        norm_loss=1.0 - survival,
        steps_taken=steps,
        max_rydberg_double_occupancy=max_double,
        max_control_rydberg_occupancy=max_joint,
        methods=tuple(methods),
        eliminated_states=eliminated,
        t0=segments[0][1],
        t1=segments[-1][2],
    )
