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
Rydgate Interferometer
----------------------

A many-body Hadamard test built from the ensemble gate:

1. prepare an auxiliary register in |Φ> and the ensemble in |A^N>
2. put the control atom in (|0> + e^{iθ}|1>)/√2
3. run the gate, so the ensemble labels become a which-path tag
4. evolve the auxiliary register with U_A on |A^N> and U_B on |B^N>
5. run the gate again to erase the tag
6. measure the control atom in |c±> = (|0> ± |1>)/√2

With θ = 0, ``p+ - p- = Re<Φ|U_A†U_B|Φ>``, and a second run with θ = π/2
gives ``p-' - p+' = Im<Φ|U_A†U_B|Φ>``.

The auxiliary register stands in for the many-body system whose dynamics
depends on the internal state of the ensemble; it is a plain vector of
dimension ``d_aux`` and the branch unitaries are dense matrices on it.

.. code-block::

    phi = np.array([1, 0])
    u_b = BranchUnitary.global_phase(2, np.pi / 3)
    result = run_interferometer(phi, BranchUnitary.identity(2), u_b)
    result.overlap_estimate  # exp(iπ/3)
"""

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np

from rydgate.gate import GateOptions
from rydgate.gate import prepare_state
from rydgate.gate import propagate_gate
from rydgate.gate import transfer_phase
from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import SchemeError
from rydgate.hilbert import occupation_counts
from rydgate.logger import get_logger
from rydgate.physics import PhysParams

LOGGER = get_logger(__name__)

#: Slack on U†U = I
UNITARY_TOL: float = 1e-10

#: Slack on <Φ|Φ> = 1
NORM_TOL: float = 1e-9

#: Components below this norm are not propagated
ZERO_NORM: float = 1e-300

#: (p-' - p+') at θ = π/2 is the imaginary part
QUADRATURE_PHASE: float = np.pi / 2


class NonUnitaryError(ValueError):
    """A branch operator that is not unitary"""


@dataclass(frozen=True, eq=False)
class BranchUnitary:
    """
    A unitary on the auxiliary register, applied on one branch of the
    interferometer.
    """

    description: str
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise SchemeError(f"{self.description}: a branch unitary must be square")
        error = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
        if error > UNITARY_TOL:
            raise NonUnitaryError(f"{self.description} is not unitary: |U†U - I| = {error:.3g}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def d_aux(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.matrix @ vector

    @classmethod
    def dense(cls, matrix: np.ndarray, description: str = "dense") -> "BranchUnitary":
        return cls(description, matrix)

    @classmethod
    def identity(cls, d_aux: int) -> "BranchUnitary":
        return cls("identity", np.eye(d_aux))

    @classmethod
    def global_phase(cls, d_aux: int, theta: float) -> "BranchUnitary":
        return cls(f"global_phase={theta:g}", np.exp(1j * theta) * np.eye(d_aux))

    @classmethod
    def phase_rotation(cls, d_aux: int, mode: int, theta: float) -> "BranchUnitary":
        """e^{iθ} on basis state ``mode``, identity on the others"""
        if not 0 <= mode < d_aux:
            raise SchemeError(f"mode {mode} is outside the register of dimension {d_aux}")
        diagonal = np.ones(d_aux, dtype=np.complex128)
        diagonal[mode] = np.exp(1j * theta)
        return cls(f"phase_rotation={mode},{theta:g}", np.diag(diagonal))

    @classmethod
    def two_level_mixing(
        cls, d_aux: int, i: int, j: int, theta: float, phase: float = 0.0
    ) -> "BranchUnitary":
        """A rotation by θ in the plane of basis states ``i`` and ``j``"""
        if i == j or not (0 <= i < d_aux and 0 <= j < d_aux):
            raise SchemeError(f"Need two distinct modes in [0, {d_aux}): {i}, {j}")
        matrix = np.eye(d_aux, dtype=np.complex128)
        c, s = np.cos(theta), np.sin(theta)
        matrix[i, i] = matrix[j, j] = c
        matrix[i, j] = -np.exp(-1j * phase) * s
        matrix[j, i] = np.exp(1j * phase) * s
        return cls(f"two_level_mixing={i},{j},{theta:g}", matrix)

    @classmethod
    def parse(cls, text: str, d_aux: int) -> "BranchUnitary":
        """
        Parse a command-line description:

        - ``identity``
        - ``global_phase=THETA``
        - ``phase_rotation=MODE,THETA``
        - ``two_level_mixing=I,J,THETA[,PHASE]``
        - a ``.npy`` file holding a dense matrix

        :raises ValueError: for an unknown description
        """
        text = text.strip()
        if text.endswith(".npy"):
            return cls(Path(text).name, np.load(text))
        name, _, args = text.partition("=")
        values = [float(v) for v in args.split(",") if v.strip()]
        try:
            if name == "identity" and not values:
                return cls.identity(d_aux)
            if name == "global_phase" and len(values) == 1:
                return cls.global_phase(d_aux, values[0])
            if name == "phase_rotation" and len(values) == 2:
                return cls.phase_rotation(d_aux, int(values[0]), values[1])
            if name == "two_level_mixing" and len(values) in (3, 4):
                return cls.two_level_mixing(d_aux, int(values[0]), int(values[1]), *values[2:])
        except IndexError as err:
            raise ValueError(f"Bad branch unitary {text!r}: {err}") from err
        raise ValueError(f"Unknown branch unitary {text!r}")


class GateMode(str, enum.Enum):
    IDEAL = "IDEAL"
    SIMULATED = "SIMULATED"


@dataclass(frozen=True)
class InterferometerResult:
    #: probability of |c+> with the control prepared in (|0> + |1>)/√2
    p_plus: float
    #: probability of |c->
    p_minus: float
    #: the same probabilities with the control prepared in (|0> + i|1>)/√2
    p_plus_quadrature: float
    p_minus_quadrature: float
    overlap_estimate: complex
    gate_mode: GateMode

    @property
    def loss(self) -> float:
        """Weight outside |c±>, from leakage and decay"""
        return 1.0 - self.p_plus - self.p_minus

    def report(self) -> str:
        """``p_plus p_minus`` and ``overlap_re overlap_im`` lines"""
        values = (
            (self.p_plus, self.p_minus),
            (self.overlap_estimate.real, self.overlap_estimate.imag),
        )
        return "".join(" ".join(format(v, ".17g") for v in line) + "\n" for line in values)


def ideal_gate_unitary(n_atoms: int, compensate_phase: bool = False) -> np.ndarray:
    """
    The ensemble CNOT on ``{0, 1} ⊗ {A, B}^N``, a permutation with phases.

    The control atom is the most significant index and ensemble atom 0 the
    next, with ``A`` before ``B``.  ``|1>|A^N> <-> |1>|B^N>`` carries the phase
    -(-1)^N unless ``compensate_phase``; every other basis state is kept.
    """
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1: {n_atoms}")
    d_e = 2 ** n_atoms
    phase = 1.0 if compensate_phase else transfer_phase(n_atoms)
    unitary = np.eye(2 * d_e, dtype=np.complex128)
    all_a, all_b = d_e, 2 * d_e - 1
    unitary[all_a, all_a] = unitary[all_b, all_b] = 0.0
    unitary[all_b, all_a] = unitary[all_a, all_b] = phase
    return unitary


def _check_inputs(phi_initial: np.ndarray, u_a: BranchUnitary, u_b: BranchUnitary) -> np.ndarray:
    phi = np.asarray(phi_initial, dtype=np.complex128).reshape(-1)
    if u_a.d_aux != phi.size or u_b.d_aux != phi.size:
        raise SchemeError(
            f"Dimension mismatch: |Φ> has {phi.size}, U_A {u_a.d_aux}, U_B {u_b.d_aux}"
        )
    norm = np.linalg.norm(phi)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"phi_initial must be normalized, its norm is {norm}")
    return phi


def _ideal_probabilities(
    phi: np.ndarray, u_a: BranchUnitary, u_b: BranchUnitary, n_atoms: int, theta: float
) -> Tuple[float, float]:
    d_e = 2 ** n_atoms
    gate = ideal_gate_unitary(n_atoms, compensate_phase=True)
    all_a, all_b = 0, d_e - 1

    psi = np.zeros((2, d_e, phi.size), dtype=np.complex128)
    psi[0, all_a] = phi / np.sqrt(2.0)
    psi[1, all_a] = np.exp(1j * theta) * phi / np.sqrt(2.0)

    psi = (gate @ psi.reshape(2 * d_e, -1)).reshape(psi.shape)
    psi[:, all_a] = psi[:, all_a] @ u_a.matrix.T
    psi[:, all_b] = psi[:, all_b] @ u_b.matrix.T
    psi = (gate.conj().T @ psi.reshape(2 * d_e, -1)).reshape(psi.shape)

    plus = (psi[0] + psi[1]) / np.sqrt(2.0)
    minus = (psi[0] - psi[1]) / np.sqrt(2.0)
    return float(np.vdot(plus, plus).real), float(np.vdot(minus, minus).real)


def _propagate_linear(
    state: np.ndarray, scheme: LevelScheme, params: PhysParams, options: GateOptions
) -> np.ndarray:
    """The gate on an unnormalized amplitude vector"""
    norm = float(np.linalg.norm(state))
    if norm < ZERO_NORM:
        return np.zeros_like(state)
    report = propagate_gate(CompositeState(scheme, state / norm), params, options)
    return norm * report.final_state.amplitudes


def _simulated_probabilities(
    phi: np.ndarray,
    u_a: BranchUnitary,
    u_b: BranchUnitary,
    params: PhysParams,
    options: GateOptions,
    theta: float,
) -> Tuple[float, float]:
    n = params.n_atoms
    scheme = LevelScheme(options.model, n)
    initial = prepare_state(scheme, 1 / np.sqrt(2.0), np.exp(1j * theta) / np.sqrt(2.0), "A" * n)
    tagged = propagate_gate(initial, params, options).final_state.amplitudes

    # the register state is Σ_j F_j ⊗ χ_j after the branch evolution
    in_a = occupation_counts(scheme, "A") == n
    in_b = occupation_counts(scheme, "B") == n
    branches: List[Tuple[np.ndarray, np.ndarray]] = [
        (np.where(in_a, tagged, 0.0), u_a.apply(phi)),
        (np.where(in_b, tagged, 0.0), u_b.apply(phi)),
        (np.where(in_a | in_b, 0.0, tagged), phi),
    ]
    finals = [_propagate_linear(f, scheme, params, options) for f, _ in branches]
    gram = np.array([[np.vdot(a, b) for _, b in branches] for _, a in branches])

    zero, one = scheme.control_index("0"), scheme.control_index("1")
    probabilities = []
    for sign in (1.0, -1.0):
        projected = []
        for amplitudes in finals:
            tensor = amplitudes.reshape(scheme.shape)
            projected.append(((tensor[zero] + sign * tensor[one]) / np.sqrt(2.0)).reshape(-1))
        weights = np.array([[np.vdot(a, b) for b in projected] for a in projected])
        probabilities.append(float(np.sum(weights * gram).real))
    return probabilities[0], probabilities[1]


def run_interferometer(
    phi_initial: np.ndarray,
    u_a: BranchUnitary,
    u_b: BranchUnitary,
    gate_mode: GateMode = GateMode.IDEAL,
    params: Optional[PhysParams] = None,
    options: Optional[GateOptions] = None,
    n_atoms: Optional[int] = None,
) -> InterferometerResult:
    """
    Estimate ``<Φ|U_A†U_B|Φ>`` with the gate-based Hadamard test.

    :param phi_initial: the normalized auxiliary state |Φ>
    :param u_a: the evolution of the |A^N> branch
    :param u_b: the evolution of the |B^N> branch
    :param gate_mode: IDEAL (exact gate unitaries) or SIMULATED (gate dynamics)
    :param params: physical parameters, required for SIMULATED
    :param options: gate options for SIMULATED
    :param n_atoms: ensemble size for IDEAL (default ``params.n_atoms`` or 1)
    :raises SchemeError: for a dimension mismatch
    :raises ValueError: for an unnormalized |Φ>
    """
    phi = _check_inputs(phi_initial, u_a, u_b)
    gate_mode = GateMode(gate_mode)
    if gate_mode is GateMode.IDEAL:
        n = n_atoms or (params.n_atoms if params is not None else 1)

        def measure(theta: float) -> Tuple[float, float]:
            return _ideal_probabilities(phi, u_a, u_b, n, theta)

    else:
        if params is None:
            raise ValueError("SIMULATED mode needs physical parameters")
        options = options or GateOptions.get_default_config()
        if n_atoms is not None:
            params = params.with_atoms(n_atoms)

        def measure(theta: float) -> Tuple[float, float]:
            return _simulated_probabilities(phi, u_a, u_b, params, options, theta)

    p_plus, p_minus = measure(0.0)
    q_plus, q_minus = measure(QUADRATURE_PHASE)
    estimate = complex(p_plus - p_minus, q_minus - q_plus)
    LOGGER.info(
        "Interferometer %s: p+ %.6f, p- %.6f, overlap %.6f%+.6fj",
        gate_mode.value,
        p_plus,
        p_minus,
        estimate.real,
        estimate.imag,
    )
    return InterferometerResult(
        p_plus=p_plus,
        p_minus=p_minus,
        p_plus_quadrature=q_plus,
        p_minus_quadrature=q_minus,
        overlap_estimate=estimate,
        gate_mode=gate_mode,
    )
