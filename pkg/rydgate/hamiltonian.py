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
Rydgate Hamiltonian
-------------------

The time-dependent Hamiltonian of the control atom and the ensemble, in the
rotating frame where ``A`` and ``B`` are degenerate at zero energy and ``R``
sits on two-photon resonance.

FULL model, per ensemble atom in ``(A, B, P, R)``::

    Ω_p(t)/2 (|P><A| + |P><B| + h.c.) + Ω_c/2 (|P><R| + h.c.) - Δ|P><P|

EFFECTIVE model, per atom in ``(A, B, R)``, after adiabatic elimination of
``P`` (with ε = Ω_c²/(4Δ) and x = √2·Ω_p/Ω_c)::

    ε [x² |+><+| + |R><R| + x (|+><R| + h.c.)],   |+> = (|A> + |B>)/√2

The effective terms are assembled from Ω_p²/(2Δ), Ω_pΩ_c/(2√2Δ) and
Ω_c²/(4Δ) directly, so a vanishing control field is allowed.  With decay,
Δ is replaced by Δ + iγ_p/2 in those denominators (FULL: -iγ_p/2 on |P>),
and the control level ``r`` gets -i/(2τ_r).

Both models add the diagonal interaction shifts::

    H_ce = Σ_k V_k |r><r| ⊗ |R>_k<R|
    H_ee = Σ_{j<k} V_jk |R>_j<R| ⊗ |R>_k<R|

and, for resolved control pulses, Ω_r/2 (|1><r| + h.c.) on the control atom.

The site matrices depend on time only through Ω_p(t), so the Hamiltonian is
kept as ``H0 + Ω_p(t)·H1 + Ω_p(t)²·H2``.  Registers up to
:py:const:`SPARSE_DIMENSION` amplitudes use cached ``scipy.sparse``
components; larger registers are handled by contracting the site matrix with
each tensor axis, without any matrix.
"""

from dataclasses import dataclass
from dataclasses import replace
from functools import cached_property
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import Model
from rydgate.hilbert import SchemeError
from rydgate.hilbert import Site
from rydgate.hilbert import SiteOperator
from rydgate.hilbert import apply_matrix
from rydgate.hilbert import apply_site_operator
from rydgate.hilbert import apply_two_site_projector
from rydgate.hilbert import control_indicator
from rydgate.hilbert import occupation_counts
from rydgate.logger import get_logger
from rydgate.physics import TIME_TOL
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import RamanPulse
from rydgate.physics import raman_rabi

LOGGER = get_logger(__name__)

#: Largest register that uses cached sparse components
SPARSE_DIMENSION: int = 2 ** 17

#: Largest register that may be materialized as a dense matrix
DENSE_DIMENSION: int = 10_000

SQRT2 = np.sqrt(2.0)


def effective_atom_matrix(x: float, epsilon: float = 1.0) -> np.ndarray:
    """
    The single-atom effective Hamiltonian ε[x²|+><+| + |R><R| + x(|+><R| + h.c.)]
    in the ``(A, B, R)`` basis.
    """
    a = epsilon * x ** 2
    b = epsilon * x
    return np.array(
        [
            [a / 2, a / 2, b / SQRT2],
            [a / 2, a / 2, b / SQRT2],
            [b / SQRT2, b / SQRT2, epsilon],
        ],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class HamiltonianSpec:
    """
    What to build: the model, the parameters, the Raman pulse and options.
    """

    #: FULL or EFFECTIVE
    model: Model
    params: PhysParams
    #: the Raman pulse; defaults to ``params.pulse``
    pulse: Optional[RamanPulse] = None
    #: non-Hermitian decay of |P> and of the control level |r>
    include_decay: bool = False
    #: Ω_r of a resolved control pulse on 1 <-> r, rad/s
    control_coupling: Optional[float] = None
    #: V_k acts on |r> only (None), on every control level (True), or not at all (False)
    control_in_r: Optional[bool] = None
    #: start of the pulse window, s
    t_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if self.pulse is None:
            object.__setattr__(self, "pulse", self.params.pulse)
        if self.control_coupling is not None and self.control_coupling < 0:
            raise ParameterError(f"control_coupling must be >= 0: {self.control_coupling}")

    @property
    def t_start(self) -> float:
        return self.t_offset

    @property
    def t_stop(self) -> float:
        return self.t_offset + self.pulse.duration

    @property
    def hermitian(self) -> bool:
        return not self.include_decay

    @property
    def natural_scale(self) -> float:
        """
        The largest non-interaction frequency of the model, rad/s; it sets the
        step ceiling and the threshold for eliminating far-detuned states.
        """
        params = self.params
        omega_r = self.control_coupling or 0.0
        if self.model is Model.FULL:
            return max(params.delta, params.omega_c, self.pulse.omega_max, omega_r)
        if params.delta <= 0:
            raise ParameterError("The EFFECTIVE model needs delta > 0")
        omega_p = self.pulse.omega_max
        a_max = omega_p ** 2 / (2 * params.delta)
        b_max = omega_p * params.omega_c / (2 * SQRT2 * params.delta)
        c = params.omega_c ** 2 / (4 * params.delta)
        return max(a_max, b_max, c, omega_r)

    def window(self, t0: float, t1: float):
        """
        :raises ParameterError: unless ``t0 < t1`` inside the pulse window
        """
        slack = TIME_TOL * self.pulse.duration
        if not t0 < t1:
            raise ParameterError(f"Need t0 < t1, got {t0} >= {t1}")
        if t0 < self.t_start - slack or t1 > self.t_stop + slack:
            raise ParameterError(
                f"[{t0}, {t1}] is outside the pulse window [{self.t_start}, {self.t_stop}]"
            )


class Hamiltonian:
    """
    A Hamiltonian bound to a register, applied as
    ``H(t) = H0 + Ω_p(t)·H1 + Ω_p(t)²·H2``.

    .. code-block::

        spec = HamiltonianSpec(Model.EFFECTIVE, PhysParams.rb87())
        hamiltonian = Hamiltonian(spec)
        hamiltonian.apply(t, amplitudes)  # H(t)·ψ as a flat vector
        hamiltonian.to_sparse(t)  # scipy.sparse.csr_matrix

    :param spec: the Hamiltonian specification
    :param scheme: the register; by default one that fits ``spec``
    :raises SchemeError: if ``scheme`` does not fit ``spec``
    """

    def __init__(self, spec: HamiltonianSpec, scheme: Optional[LevelScheme] = None):
        if scheme is None:
            scheme = LevelScheme(spec.model, spec.params.n_atoms)
        if scheme.model is not spec.model or scheme.n_atoms != spec.params.n_atoms:
            raise SchemeError(
                f"Register {scheme.header()} does not fit a {spec.model.value} "
                f"Hamiltonian with N={spec.params.n_atoms}"
            )
        self.spec = spec
        self.scheme = scheme
        self.site_components = self._site_components()
        self.control_matrix = self._control_matrix()
        self.diagonal = self._static_diagonal()

    def __repr__(self):
        return f"Hamiltonian({self.scheme.header()}, decay={self.spec.include_decay})"

    @property
    def natural_scale(self) -> float:
        return self.spec.natural_scale

    def _detuning(self) -> complex:
        params = self.spec.params
        if self.spec.include_decay:
            return params.delta + 0.5j * params.gamma_p
        return complex(params.delta)

    def _site_components(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Site matrices S0, S1, S2 with site matrix = S0 + Ω_p·S1 + Ω_p²·S2.

        In the FULL model the rotating frame puts ``|P>`` at ``-Δ``
        (``-Δ - iγ_p/2`` with decay) and ``A, B, R`` at zero, so the light
        shift of ``|+>`` is ``+Ω_p²/(2Δ)`` as in the EFFECTIVE model.
        """
        params = self.spec.params
        d = self.scheme.d_e
        s0 = np.zeros((d, d), dtype=np.complex128)
        s1 = np.zeros((d, d), dtype=np.complex128)
        s2 = np.zeros((d, d), dtype=np.complex128)
        if self.spec.model is Model.FULL:
            a, b, p, r = (self.scheme.level_index(lv) for lv in "ABPR")
            s1[p, a] = s1[a, p] = s1[p, b] = s1[b, p] = 0.5
            s0[p, r] = s0[r, p] = 0.5 * params.omega_c
            s0[p, p] = -self._detuning()
            return s0, s1, s2

        detuning = self._detuning()
        if abs(detuning) == 0:
            raise ParameterError("The EFFECTIVE model needs delta > 0")
        a, b, r = (self.scheme.level_index(lv) for lv in "ABR")
        # a(t)|+><+| with a(t) = Ω_p²/(2Δ)
        for i in (a, b):
            for j in (a, b):
                s2[i, j] = 1.0 / (4.0 * detuning)
        # b(t)(|+><R| + h.c.) with b(t) = Ω_pΩ_c/(2√2Δ)
        coupling = params.omega_c / (2.0 * SQRT2 * detuning) / SQRT2
        for i in (a, b):
            s1[i, r] = s1[r, i] = coupling
        s0[r, r] = params.omega_c ** 2 / (4.0 * detuning)
        return s0, s1, s2

    def _control_matrix(self) -> np.ndarray:
        matrix = np.zeros((3, 3), dtype=np.complex128)
        one = self.scheme.control_index("1")
        r = self.scheme.control_index("r")
        if self.spec.control_coupling:
            matrix[one, r] = matrix[r, one] = 0.5 * self.spec.control_coupling
        if self.spec.include_decay and np.isfinite(self.spec.params.tau_r):
            matrix[r, r] = -0.5j / self.spec.params.tau_r
        return matrix

    def _static_diagonal(self) -> np.ndarray:
        """Interaction shifts H_ce + H_ee on the basis, as a flat vector"""
        scheme = self.scheme
        params = self.spec.params
        ones = CompositeState(scheme, np.ones(scheme.dimension))
        diagonal = np.zeros(scheme.dimension, dtype=np.complex128)
        for k, v_k in enumerate(params.v_control):
            if v_k == 0 or self.spec.control_in_r is False:
                continue
            if self.spec.control_in_r is None:
                shift = apply_two_site_projector(
                    ones, Site.control(), Site.ensemble(k), "r", "R", v_k
                )
            else:
                projector = SiteOperator.projector(Site.ensemble(k), scheme, "R", v_k)
                shift = apply_site_operator(ones, projector)
            diagonal += shift.amplitudes
        v_jk = params.v_ensemble_matrix
        for j in range(scheme.n_atoms):
            for k in range(j + 1, scheme.n_atoms):
                if v_jk[j, k] == 0:
                    continue
                shift = apply_two_site_projector(
                    ones, Site.ensemble(j), Site.ensemble(k), "R", "R", v_jk[j, k]
                )
                diagonal += shift.amplitudes
        return diagonal

    def rabi(self, t: float) -> float:
        """Ω_p at absolute time ``t``"""
        return raman_rabi(self.spec.pulse, t - self.spec.t_offset)

    def site_matrix(self, t: float) -> np.ndarray:
        s0, s1, s2 = self.site_components
        omega = self.rabi(t)
        return s0 + omega * s1 + omega ** 2 * s2

    def _embed(self, matrix: np.ndarray, axis: int) -> sparse.csr_matrix:
        """A single-site matrix on ``axis``, as a sparse register operator"""
        shape = self.scheme.shape
        left = int(np.prod(shape[:axis], dtype=np.int64))
        right = int(np.prod(shape[axis + 1 :], dtype=np.int64))
        block = sparse.kron(sparse.csr_matrix(matrix), sparse.identity(right, format="csr"))
        return sparse.kron(sparse.identity(left, format="csr"), block, format="csr")

    @cached_property
    def sparse_components(
        self,
    ) -> Tuple[sparse.csr_matrix, sparse.csr_matrix, sparse.csr_matrix]:
        """Sparse H0, H1, H2 of the whole register"""
        n = self.scheme.dimension
        components = [sparse.csr_matrix((n, n), dtype=np.complex128) for _ in range(3)]
        for k in range(self.scheme.n_atoms):
            for i, matrix in enumerate(self.site_components):
                if np.any(matrix):
                    components[i] = components[i] + self._embed(matrix, 1 + k)
        components[0] = components[0] + sparse.diags(self.diagonal, format="csr")
        if np.any(self.control_matrix):
            components[0] = components[0] + self._embed(self.control_matrix, 0)
        return tuple(c.tocsr() for c in components)

    @property
    def uses_sparse(self) -> bool:
        return self.scheme.dimension <= SPARSE_DIMENSION

    def apply(self, t: float, amplitudes: np.ndarray) -> np.ndarray:
        """
        ``H(t)·ψ`` for a flat amplitude vector

        :raises ParameterError: if ``t`` is outside the pulse window
        """
        omega = self.rabi(t)
        if self.uses_sparse:
            h0, h1, h2 = self.sparse_components
            result = h0 @ amplitudes
            if omega:
                result += omega * (h1 @ amplitudes)
                result += omega ** 2 * (h2 @ amplitudes)
            return result
        return self._apply_tensor(t, amplitudes)

    def _apply_tensor(self, t: float, amplitudes: np.ndarray) -> np.ndarray:
        psi = amplitudes.reshape(self.scheme.shape)
        result = self.diagonal * amplitudes
        matrix = self.site_matrix(t)
        acc = np.zeros(self.scheme.shape, dtype=np.complex128)
        for k in range(self.scheme.n_atoms):
            acc += apply_matrix(psi, matrix, 1 + k)
        if np.any(self.control_matrix):
            acc += apply_matrix(psi, self.control_matrix, 0)
        return result + acc.reshape(-1)

    def __call__(self, t: float, state: CompositeState) -> CompositeState:
        if state.scheme != self.scheme:
            raise SchemeError(f"State {state.scheme.header()} does not fit {self!r}")
        return CompositeState(self.scheme, self.apply(t, state.amplitudes))

    def to_sparse(self, t: float) -> sparse.csr_matrix:
        h0, h1, h2 = self.sparse_components
        omega = self.rabi(t)
        return (h0 + omega * h1 + omega ** 2 * h2).tocsr()

    def to_dense(self, t: float) -> np.ndarray:
        if self.scheme.dimension > DENSE_DIMENSION:
            raise SchemeError(
                f"Refusing a dense {self.scheme.dimension}-dimensional matrix; "
                f"use apply() or to_sparse()"
            )
        return self.to_sparse(t).toarray()

    def as_linear_operator(self, t: float) -> LinearOperator:
        n = self.scheme.dimension
        return LinearOperator(
            (n, n), matvec=lambda v: self.apply(t, np.ravel(v)), dtype=np.complex128
        )

    def level_counts(self, label: str) -> np.ndarray:
        return occupation_counts(self.scheme, label)

    def control_weights(self, label: str) -> np.ndarray:
        return control_indicator(self.scheme, label)


@dataclass(frozen=True)
class HamiltonianAction:
    """H(t) at a fixed time, as a callable on states"""

    hamiltonian: Hamiltonian
    t: float

    def __call__(self, state: CompositeState) -> CompositeState:
        return self.hamiltonian(self.t, state)


def _bind(spec: HamiltonianSpec, t: float) -> HamiltonianAction:
    hamiltonian = Hamiltonian(spec)
    hamiltonian.rabi(t)
    return HamiltonianAction(hamiltonian, t)


def build_full_hamiltonian(spec: HamiltonianSpec, t: float) -> HamiltonianAction:
    """
    H(t) of the four-level model

    :raises SchemeError: if ``spec`` is not a FULL model
    :raises ParameterError: if ``t`` is outside the pulse
    """
    if spec.model is not Model.FULL:
        raise SchemeError(f"Expected a FULL model, got {spec.model.value}")
    return _bind(spec, t)


def build_effective_hamiltonian(
    spec: HamiltonianSpec, t: float, control_in_r: Optional[bool] = None
) -> HamiltonianAction:
    """
    H(t) of the effective three-level model

    :param control_in_r: True adds V_k on ``R`` for every control level, as if the
        control atom were in ``r``; False drops H_ce; None keeps the projector on ``r``
    """
    if spec.model is not Model.EFFECTIVE:
        raise SchemeError(f"Expected an EFFECTIVE model, got {spec.model.value}")
    if control_in_r is not None:
        spec = replace(spec, control_in_r=control_in_r)
    return _bind(spec, t)
