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
Rydgate Gate Protocol
---------------------

The ensemble CNOT: a π pulse on the control atom (``1 -> r``), a Raman π pulse
on the ensemble, and a second control π pulse.  With the control in ``0`` the
ensemble follows the EIT dark state and is blocked; with the control in ``r``
the Rydberg shift V_k lifts EIT and the Raman pulse swaps ``A <-> B``::

    |0>|A^N>  ->  |0>|A^N>
    |1>|A^N>  ->  -(-1)^N |1>|B^N>

The phase ``-(-1)^N`` of the transfer branch is part of the target state by
default (:py:attr:`GateOptions.track_transfer_phase`); the control pulses
``exp(-iπσ_x/2)`` contribute ``(-i)² = -1`` and the Raman π pulse ``(-1)^N``.

Control pulses are instantaneous unitaries unless a resolved pulse with a
Rabi frequency Ω_r is requested; then the sequence is three contiguous
segments ``[0, τ]``, ``[τ, τ + T]``, ``[τ + T, 2τ + T]`` with Ω_r·τ = π.

.. code-block::

    outcome = run_gate("1", "A", PhysParams.rb87())
    outcome.fidelity  # > 0.98
    print(outcome.report())
"""

import enum
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np

from rydgate.analytic import PhaseConvention
from rydgate.analytic import analytic_blocking_fidelity
from rydgate.analytic import phase_phi
from rydgate.dynamics import EvolutionReport
from rydgate.dynamics import IntegratorConfig
from rydgate.dynamics import TrajectoryRecorder
from rydgate.dynamics import evolve
from rydgate.dynamics import evolve_piecewise
from rydgate.hamiltonian import HamiltonianSpec
from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import Model
from rydgate.hilbert import SchemeError
from rydgate.hilbert import Site
from rydgate.hilbert import SiteOperator
from rydgate.hilbert import apply_site_operator
from rydgate.hilbert import basis_index
from rydgate.hilbert import overlap
from rydgate.hilbert import swap_labels
from rydgate.logger import get_logger
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import RamanPulse

LOGGER = get_logger(__name__)

#: exp(-iπσ_x/2) on (1, r), identity on 0
CONTROL_PI_PULSE = np.array(
    [[1, 0, 0], [0, 0, -1j], [0, -1j, 0]],
    dtype=np.complex128,
)

#: Slack on Ω_r·τ = π for resolved control pulses
PI_PULSE_TOL: float = 1e-6

#: Slack on |α|² + |β|² = 1
AMPLITUDE_TOL: float = 1e-9

ControlInput = Union[str, int, Tuple[complex, complex], Sequence[complex]]


class ControlPulseKind(str, enum.Enum):
    INSTANT = "INSTANT"
    RESOLVED = "RESOLVED"


@dataclass(frozen=True)
class ControlPulse:
    kind: ControlPulseKind = ControlPulseKind.INSTANT
    #: Ω_r, rad/s (RESOLVED only)
    omega_r: Optional[float] = None
    #: τ, s (RESOLVED only)
    duration: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ControlPulseKind(self.kind))
        if self.kind is ControlPulseKind.INSTANT:
            return
        if not (self.omega_r and self.omega_r > 0):
            raise ValueError(f"A resolved control pulse needs omega_r > 0: {self.omega_r}")
        if not (self.duration and self.duration > 0):
            raise ValueError(f"A resolved control pulse needs duration > 0: {self.duration}")
        area = self.omega_r * self.duration
        if abs(area - np.pi) > PI_PULSE_TOL * np.pi:
            raise ValueError(f"omega_r * duration must be pi, got {area}")

    @classmethod
    def instant(cls) -> "ControlPulse":
        return cls()

    @classmethod
    def resolved(cls, omega_r: float, duration: Optional[float] = None) -> "ControlPulse":
        """A resolved π pulse; the duration defaults to π/Ω_r"""
        if duration is None and omega_r > 0:
            duration = np.pi / omega_r
        return cls(ControlPulseKind.RESOLVED, omega_r, duration)


@dataclass(frozen=True)
class GateOptions:
    #: ensemble model, EFFECTIVE (A, B, R) or FULL (A, B, P, R)
    model: Model = Model.EFFECTIVE
    #: non-Hermitian decay of |P> and of the control level |r>
    include_decay: bool = False
    control_pulse: ControlPulse = field(default_factory=ControlPulse)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    #: target -(-1)^N on the transfer branch (False: target +1)
    track_transfer_phase: bool = True

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))

    @classmethod
    def get_default_config(cls):
        return cls()


@dataclass(frozen=True, eq=False)
class GateOutcome:
    final_state: CompositeState
    desired_state: CompositeState
    #: |<desired|obtained>|²
    fidelity: float
    #: arg <desired|obtained>, rad
    conditional_phase: float
    norm_loss: float
    max_rydberg_double_occupancy: float
    max_control_rydberg_occupancy: float
    #: arg <1, swapped labels|obtained>, rad, when the input has a |1> part
    transfer_branch_phase: Optional[float]
    steps_taken: int
    model: Model
    control_pulse: ControlPulseKind
    track_transfer_phase: bool

    def as_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "conditional_phase": self.conditional_phase,
            "norm_loss": self.norm_loss,
            "max_double_occupancy": self.max_rydberg_double_occupancy,
            "max_control_double_occupancy": self.max_control_rydberg_occupancy,
            "transfer_branch_phase": self.transfer_branch_phase,
            "steps_taken": self.steps_taken,
            "model": self.model.value,
            "control_pulse": self.control_pulse.value,
            "transfer_phase_convention": (
                "-(-1)^N" if self.track_transfer_phase else "+1"
            ),
        }

    def report(self) -> str:
        """The gate report as ``key=value`` lines"""
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, float):
                value = format(value, ".17g")
            elif value is None:
                value = "none"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def transfer_phase(n_atoms: int) -> int:
    """The phase -(-1)^N of |1>|A^N> -> |1>|B^N>"""
    return -((-1) ** n_atoms)


def control_amplitudes(control_in: ControlInput) -> Tuple[complex, complex]:
    """
    Parse the control input: ``"0"``, ``"1"`` or a pair ``(α, β)``.

    :raises ValueError: for an unknown label or unnormalized amplitudes
    """
    if isinstance(control_in, (str, int)):
        label = str(control_in).strip()
        if label == "0":
            return 1.0 + 0j, 0j
        if label == "1":
            return 0j, 1.0 + 0j
        raise ValueError(f"Control input must be 0, 1 or a pair (alpha, beta): {control_in!r}")
    alpha, beta = (complex(c) for c in control_in)
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > AMPLITUDE_TOL:
        raise ValueError(f"|alpha|^2 + |beta|^2 must be 1, got {norm}")
    return alpha, beta


def prepare_state(
    scheme: LevelScheme,
    alpha: complex,
    beta: complex,
    labels_0: Sequence[str],
    labels_1: Optional[Sequence[str]] = None,
    phase_1: complex = 1.0,
) -> CompositeState:
    """α|0>|labels_0> + β·phase_1|1>|labels_1>"""
    labels_1 = labels_0 if labels_1 is None else labels_1
    amplitudes = np.zeros(scheme.dimension, dtype=np.complex128)
    amplitudes[basis_index(scheme, "0", labels_0)] += alpha
    amplitudes[basis_index(scheme, "1", labels_1)] += beta * phase_1
    return CompositeState(scheme, amplitudes)


def _raman_spec(params: PhysParams, options: GateOptions, t_offset: float) -> HamiltonianSpec:
    return HamiltonianSpec(
        model=options.model,
        params=params,
        include_decay=options.include_decay,
        t_offset=t_offset,
    )


def _control_spec(
    params: PhysParams, options: GateOptions, t_offset: float
) -> HamiltonianSpec:
    pulse = options.control_pulse
    return HamiltonianSpec(
        model=options.model,
        params=params,
        pulse=RamanPulse(0.0, pulse.duration),
        include_decay=options.include_decay,
        control_coupling=pulse.omega_r,
        t_offset=t_offset,
    )


def propagate_gate(
    state: CompositeState,
    params: PhysParams,
    options: Optional[GateOptions] = None,
    recorder: Optional[TrajectoryRecorder] = None,
) -> EvolutionReport:
    """
    Run the three-pulse sequence on any register state.

    :param state: a normalized state of the ``options.model`` register
    :param params: physical parameters; ``params.n_atoms`` must match the register
    :param options: gate options (default :py:meth:`GateOptions.get_default_config`)
    :param recorder: an optional trajectory recorder for the pulse windows
    :return: the evolution report, with the state after the second control pulse
    """
    options = options or GateOptions.get_default_config()
    scheme = state.scheme
    if scheme.model is not options.model or scheme.n_atoms != params.n_atoms:
        raise SchemeError(
            f"Register {scheme.header()} does not fit a {options.model.value} gate "
            f"with N={params.n_atoms}"
        )
    pulse = options.control_pulse
    if pulse.kind is ControlPulseKind.INSTANT:
        flip = SiteOperator(Site.control(), CONTROL_PI_PULSE)
        excited = apply_site_operator(state, flip)
        spec = _raman_spec(params, options, 0.0)
        report = evolve(
            excited, spec, spec.t_start, spec.t_stop, options.integrator, recorder=recorder
        )
        final = apply_site_operator(report.final_state, flip)
        return replace(report, final_state=final)

    tau = pulse.duration
    t_raman = params.t_raman
    segments = [
        (_control_spec(params, options, 0.0), 0.0, tau),
        (_raman_spec(params, options, tau), tau, tau + t_raman),
        (_control_spec(params, options, tau + t_raman), tau + t_raman, 2 * tau + t_raman),
    ]
    return evolve_piecewise(state, segments, options.integrator, recorder=recorder)


def run_gate(
    control_in: ControlInput,
    ensemble_in: Union[str, Sequence[str]],
    params: PhysParams,
    options: Optional[GateOptions] = None,
    recorder: Optional[TrajectoryRecorder] = None,
) -> GateOutcome:
    """
    Run the gate on ``(α|0> + β|1>)|ensemble_in>`` and compare with the target
    ``α|0>|ensemble_in> + β·(-(-1)^N)|1>|swapped>``.

    :param control_in: ``"0"``, ``"1"`` or ``(α, β)``
    :param ensemble_in: N labels over ``A, B``, e.g. ``"AAA"``
    :param params: physical parameters with ``n_atoms = N``
    :param options: gate options
    :param recorder: an optional trajectory recorder
    :raises ValueError: for invalid inputs (SchemeError for labels)
    :raises IntegrationError: when the integrator fails
    """
    options = options or GateOptions.get_default_config()
    scheme = LevelScheme(options.model, params.n_atoms)
    labels = tuple(ensemble_in)
    if len(labels) != params.n_atoms:
        raise SchemeError(
            f"ensemble_in has {len(labels)} labels, params have N={params.n_atoms}"
        )
    if any(label not in ("A", "B") for label in labels):
        raise SchemeError(f"ensemble_in must be over A and B: {ensemble_in!r}")
    alpha, beta = control_amplitudes(control_in)

    initial = prepare_state(scheme, alpha, beta, labels)
    report = propagate_gate(initial, params, options, recorder)
    final = report.final_state

    swapped = swap_labels(labels)
    phase = transfer_phase(params.n_atoms) if options.track_transfer_phase else 1
    desired = prepare_state(scheme, alpha, beta, labels, swapped, phase)
    amplitude = overlap(desired, final)
    fidelity = min(1.0, abs(amplitude) ** 2)

    branch_phase = None
    if abs(beta) > 0:
        branch = final.amplitudes[basis_index(scheme, "1", swapped)]
        branch_phase = float(np.angle(branch))

    LOGGER.info(
        "Gate %s|%s> N=%d: fidelity %.8f, norm loss %.3g",
        control_in if isinstance(control_in, (str, int)) else (alpha, beta),
        "".join(labels),
        params.n_atoms,
        fidelity,
        report.norm_loss,
    )
    return GateOutcome(
        final_state=final,
        desired_state=desired,
        fidelity=fidelity,
        conditional_phase=float(np.angle(amplitude)),
        norm_loss=report.norm_loss,
        max_rydberg_double_occupancy=report.max_rydberg_double_occupancy,
        max_control_rydberg_occupancy=report.max_control_rydberg_occupancy,
        transfer_branch_phase=branch_phase,
        steps_taken=report.steps_taken,
        model=options.model,
        control_pulse=options.control_pulse.kind,
        track_transfer_phase=options.track_transfer_phase,
    )


def blocking_fidelity_numeric(
    n_atoms: int, params: PhysParams, options: Optional[GateOptions] = None
) -> float:
    """
    ``|<A^N|ψ(T)>|²`` with the control atom in ``0``, by integration.

    :param n_atoms: 1 to 4 ensemble atoms; ``params`` is resized if needed
    :param params: physical parameters
    :param options: gate options; EFFECTIVE model without decay
    """
    options = options or GateOptions.get_default_config()
    if not 1 <= n_atoms <= 4:
        raise ValueError(f"n_atoms must be in [1, 4]: {n_atoms}")
    if options.model is not Model.EFFECTIVE or options.include_decay:
        raise ValueError("Blocking fidelity needs the EFFECTIVE model without decay")
    params = params.with_atoms(n_atoms)
    return run_gate("0", "A" * n_atoms, params, options).fidelity


def resolve_phase_convention(
    params: PhysParams,
    n_atoms: int = 2,
    v12_over_eps: float = 1e4,
    options: Optional[GateOptions] = None,
) -> PhaseConvention:
    """
    Pick the phase convention whose analytic F_b is closest to a direct
    simulation of ``n_atoms`` strongly interacting atoms.
    """
    params = params.with_atoms(n_atoms).with_interactions(v_ensemble_over_eps=v12_over_eps)
    simulated = blocking_fidelity_numeric(n_atoms, params, options)
    errors = {}
    for convention in PhaseConvention:
        phi = phase_phi(params, convention).phi
        errors[convention] = abs(analytic_blocking_fidelity(n_atoms, phi) - simulated)
    best = min(errors, key=errors.get)
    LOGGER.info(
        "Phase convention %s: simulated F_b %.6f, analytic errors %s",
        best.value,
        simulated,
        {c.value: f"{e:.3g}" for c, e in errors.items()},
    )
    return best
