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
Rydgate Analytic Structure
--------------------------

Closed forms of the effective model, used as oracles for the simulator:

- every atom has two dark states, ``d1 = |->`` and
  ``d2 = (|+> - x|R>)/√(1 + x²)``;
- two interacting atoms follow a grey state with a small energy E_g, which is
  ``x⁴·V_12`` for weak and ``2εx⁴`` for strong interactions;
- the blocked ensemble picks up the dynamical phase φ, and the blocking
  fidelity is ``F_b = |Σ_m C(N, m)/2^N exp(-i m(m-1) φ)|²``;
- the pairwise phase ``m(m-1)φ`` of the sector with m bright atoms holds to
  order x⁴; :py:func:`sector_phases` integrates the exact sector energies.

The grey energy is tracked in the symmetric ``{+, R}`` sector of two atoms,
basis ``(++, +R, R+, RR)``; ``|->`` decouples from the effective Hamiltonian.
Energies from :py:func:`grey_energy_curve` are in units of ε.

The phase convention is :py:attr:`PhaseConvention.HALF_INTEGRAL`,
``φ = ½∫E_g dt``, which is what direct two-atom simulation reproduces
(see :py:func:`rydgate.gate.resolve_phase_convention`).
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import binom

from rydgate.logger import get_logger
from rydgate.physics import PhysParams
from rydgate.physics import derived_scales

LOGGER = get_logger(__name__)

#: Grid size for tracking the grey state in x
GREY_GRID_POINTS: int = 400

#: Largest x for the numeric grey energy
GREY_X_MAX: float = 0.5

#: Overlap margin below which eigenvector continuation is ambiguous
TRACKING_MARGIN: float = 0.1

#: Relative slack on the π-pulse area before warning
PI_AREA_TOL: float = 1e-3

PLUS = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
MINUS = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
RYDBERG = np.array([0.0, 0.0, 1.0])


class EigenTrackingError(RuntimeError):
    """Eigenvector continuation met a near-degenerate crossing"""


class PhaseConvention(str, enum.Enum):
    #: φ = ½∫E_g dt
    HALF_INTEGRAL = "HALF_INTEGRAL"
    #: φ = ∫E_g dt
    FULL_INTEGRAL = "FULL_INTEGRAL"


DEFAULT_PHASE_CONVENTION = PhaseConvention.HALF_INTEGRAL


class EnergyModel(str, enum.Enum):
    #: E_g = 2εx⁴, the strong-interaction limit
    ASYMPTOTIC = "ASYMPTOTIC"
    #: E_g tracked numerically at a given V_12
    NUMERIC = "NUMERIC"


@dataclass(frozen=True, eq=False)
class DarkStateSet:
    x: float
    #: |-> in the (A, B, R) basis
    d1: np.ndarray
    #: (|+> - x|R>)/√(1 + x²) in the (A, B, R) basis
    d2: np.ndarray


def dark_states(x: float) -> DarkStateSet:
    if x < 0:
        raise ValueError(f"x must be >= 0: {x}")
    d2 = (PLUS - x * RYDBERG) / np.sqrt(1.0 + x ** 2)
    return DarkStateSet(x=float(x), d1=MINUS.copy(), d2=d2)


def two_atom_dark_decomposition(x: float) -> np.ndarray:
    """
    Coefficients ``<d_i d_j|AA>`` of two atoms in ``|AA>``; at x = 0 they are
    all 1/2, and the d2 components shrink as 1/√(1 + x²).
    """
    dark = dark_states(x)
    a = np.array([1.0, 0.0, 0.0])
    amplitudes = np.array([np.vdot(dark.d1, a), np.vdot(dark.d2, a)])
    return np.outer(amplitudes, amplitudes)


@dataclass(frozen=True, eq=False)
class GreyStateInfo:
    x: float
    #: V_12, rad/s (inf for the strong-interaction limit)
    v12: float
    #: two-atom state over (A, B, R)², index 3·i + j
    state: np.ndarray
    #: E_g, rad/s
    energy: float


def grey_state_limit(x: float, epsilon: float = 1.0) -> GreyStateInfo:
    """
    The strong-interaction grey state
    ``[(1 - x²)|++> - x(|+R> + |R+>)] / √(1 + x⁴)`` with energy ``2εx⁴``
    """
    if x < 0:
        raise ValueError(f"x must be >= 0: {x}")
    state = (
        (1.0 - x ** 2) * np.kron(PLUS, PLUS)
        - x * (np.kron(PLUS, RYDBERG) + np.kron(RYDBERG, PLUS))
    ) / np.sqrt(1.0 + x ** 4)
    return GreyStateInfo(
        x=float(x), v12=float("inf"), state=state, energy=2.0 * epsilon * x ** 4
    )


def superatom_weight(info: GreyStateInfo) -> float:
    """Weight of the superatom state (|+R> + |R+>)/√2 in a grey state"""
    superatom = (np.kron(PLUS, RYDBERG) + np.kron(RYDBERG, PLUS)) / np.sqrt(2.0)
    return float(abs(np.vdot(superatom, info.state)) ** 2)


def _symmetric_sector(x: float, v12_over_eps: float) -> np.ndarray:
    """Two-atom H/ε on (++, +R, R+, RR)"""
    single = np.array([[x ** 2, x], [x, 1.0]])
    identity = np.eye(2)
    matrix = np.kron(single, identity) + np.kron(identity, single)
    matrix[3, 3] += v12_over_eps
    return matrix


def grey_energy_curve(x_grid: np.ndarray, v12_over_eps: float) -> np.ndarray:
    """
    Track the eigenvalue connected to ``|++>`` along ascending ``x_grid``.

    Each step picks the eigenvector with the largest overlap with the previous
    one; a near tie means the grid crosses a degeneracy.

    :param x_grid: ascending, nonnegative x values
    :param v12_over_eps: V_12/ε >= 0
    :return: energies in units of ε, one per grid point
    :raises EigenTrackingError: if continuation is ambiguous
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if v12_over_eps < 0:
        raise ValueError(f"v12_over_eps must be >= 0: {v12_over_eps}")
    if x_grid.ndim != 1 or x_grid.size == 0 or x_grid[0] < 0:
        raise ValueError("x_grid must be a nonempty 1-d grid of x >= 0")
    if np.any(np.diff(x_grid) <= 0):
        raise ValueError("x_grid must be strictly ascending")

    previous = np.array([1.0, 0.0, 0.0, 0.0])
    energies = np.empty_like(x_grid)
    for i, x in enumerate(x_grid):
        values, vectors = np.linalg.eigh(_symmetric_sector(x, v12_over_eps))
        overlaps = np.abs(vectors.T @ previous)
        order = np.argsort(overlaps)[::-1]
        best, second = order[0], order[1]
        if overlaps[best] - overlaps[second] < TRACKING_MARGIN:
            raise EigenTrackingError(
                f"Ambiguous grey state continuation at x={x:.6g}, "
                f"V12/eps={v12_over_eps:.6g}: overlaps "
                f"{overlaps[best]:.4f} and {overlaps[second]:.4f}"
            )
        vector = vectors[:, best]
        previous = vector * np.sign(vector @ previous)
        energies[i] = values[best]
    return energies


def grey_energy_numeric(x: float, v12_over_eps: float, epsilon: float = 1.0) -> float:
    """
    The exact grey energy of two atoms at ``x`` and ``V_12 = v12_over_eps·ε``,
    tracked from ``|++>`` at ``x = 0`` on a grid of
    :py:const:`GREY_GRID_POINTS` points.

    :return: E_g in the units of ``epsilon`` (rad/s when ε is given in rad/s)
    :raises EigenTrackingError: if continuation is ambiguous
    """
    if not 0 < x <= GREY_X_MAX:
        raise ValueError(f"x must be in (0, {GREY_X_MAX}]: {x}")
    grid = np.linspace(0.0, x, GREY_GRID_POINTS)
    return float(grey_energy_curve(grid, v12_over_eps)[-1] * epsilon)


@dataclass(frozen=True)
class PhaseResult:
    #: φ, rad
    phi: float
    convention: PhaseConvention
    energy_model: EnergyModel
    #: ∫E_g dt, rad
    integral: float


def phase_phi(
    params: PhysParams,
    convention: PhaseConvention = DEFAULT_PHASE_CONVENTION,
    energy_model: EnergyModel = EnergyModel.ASYMPTOTIC,
    v12_over_eps: Optional[float] = None,
) -> PhaseResult:
    """
    The dynamical phase φ from a quadrature of the grey energy over the pulse.

    With the asymptotic energy and a π pulse, ``∫E_g dt = (35/24)π x_max²``,
    so φ is ``(35/48)π x_max²`` in the half-integral convention.

    :param params: physical parameters, with the Raman pulse
    :param convention: how φ relates to ``∫E_g dt``
    :param energy_model: ASYMPTOTIC (2εx⁴) or NUMERIC (tracked at ``v12_over_eps``)
    :param v12_over_eps: V_12/ε, required by the numeric energy model
    """
    convention = PhaseConvention(convention)
    energy_model = EnergyModel(energy_model)
    pulse = params.pulse
    scales = derived_scales(params)
    area = pulse.area(params.delta)
    if abs(area / np.pi - 1.0) > PI_AREA_TOL:
        LOGGER.warning("Raman pulse area is %.6g, not pi; phi assumes a pi pulse", area)

    if energy_model is EnergyModel.ASYMPTOTIC:

        def energy(t: float) -> float:
            return 2.0 * scales.epsilon * scales.x_of_t(t) ** 4

    else:
        if v12_over_eps is None:
            raise ValueError("The numeric energy model needs v12_over_eps")
        if not 0 < scales.x_max <= GREY_X_MAX:
            raise ValueError(f"x_max must be in (0, {GREY_X_MAX}]: {scales.x_max}")
        grid = np.linspace(0.0, scales.x_max, GREY_GRID_POINTS)
        spline = CubicSpline(grid, grey_energy_curve(grid, v12_over_eps))

        def energy(t: float) -> float:
            x = min(scales.x_of_t(t), scales.x_max)
            return scales.epsilon * float(spline(x))

    value, _ = integrate.quad(energy, 0.0, pulse.duration, limit=200, epsabs=0.0)
    phi = 0.5 * value if convention is PhaseConvention.HALF_INTEGRAL else value
    return PhaseResult(phi=phi, convention=convention, energy_model=energy_model, integral=value)


def sector_energy(n_bright: int, x: float, v12_over_eps: float = np.inf) -> float:
    """
    Energy, in units of ε, of the state connected to ``|+^m>`` when ``m``
    atoms share the pair interaction V_12 (``inf`` for perfect blockade).

    The symmetric sector with ``k`` atoms in ``R`` is a tridiagonal chain with
    diagonal ``(m - k)x² + k + k(k-1)/2·V_12/ε`` and coupling
    ``x·√((k+1)(m-k))``. Its spectrum is simple for x > 0, so the tracked
    state is always the lowest one. Pairwise energies only hold to order x⁴:
    in the blockade limit the exact energy is
    ``m(m-1)x⁴ - (2m-1)m(m-1)x⁶ + O(x⁸)``.
    """
    if n_bright < 0:
        raise ValueError(f"n_bright must be >= 0: {n_bright}")
    if x < 0 or v12_over_eps < 0:
        raise ValueError(f"x and v12_over_eps must be >= 0: {x}, {v12_over_eps}")
    if n_bright < 2:
        return 0.0
    k = np.arange(n_bright + 1, dtype=float)
    if np.isinf(v12_over_eps):
        k = k[:2]
        diagonal = (n_bright - k) * x ** 2 + k
    else:
        diagonal = (n_bright - k) * x ** 2 + k + 0.5 * v12_over_eps * k * (k - 1)
    coupling = x * np.sqrt((k[:-1] + 1) * (n_bright - k[:-1]))
    values = eigvalsh_tridiagonal(diagonal, coupling, select="i", select_range=(0, 0))
    return float(values[0])


def sector_phases(
    params: PhysParams,
    n_atoms: int,
    v12_over_eps: float = np.inf,
    convention: PhaseConvention = DEFAULT_PHASE_CONVENTION,
) -> np.ndarray:
    """
    The phases θ_m of the blocked ``|+^m>`` components of ``|A^N>``,
    m = 0..N, from the exact sector energies over the pulse.

    To order x⁴ they are ``m(m-1)φ``; from x⁶ on the sectors with three or
    more bright atoms differ from the pairwise sum.

    :param params: physical parameters, with the Raman pulse
    :param n_atoms: N >= 1
    :param v12_over_eps: the uniform V_jk/ε (default: perfect blockade)
    :param convention: the φ convention that fixes the scale of θ_2 = 2φ
    """
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1: {n_atoms}")
    convention = PhaseConvention(convention)
    pulse = params.pulse
    scales = derived_scales(params)
    if not 0 < scales.x_max <= GREY_X_MAX:
        raise ValueError(f"x_max must be in (0, {GREY_X_MAX}]: {scales.x_max}")
    scale = 1.0 if convention is PhaseConvention.HALF_INTEGRAL else 2.0
    grid = np.linspace(0.0, scales.x_max, GREY_GRID_POINTS)

    phases = np.zeros(n_atoms + 1)
    for m in range(2, n_atoms + 1):
        spline = CubicSpline(grid, [sector_energy(m, x, v12_over_eps) for x in grid])

        def energy(t: float) -> float:
            x = min(scales.x_of_t(t), scales.x_max)
            return scales.epsilon * float(spline(x))

        value, _ = integrate.quad(energy, 0.0, pulse.duration, limit=200, epsabs=0.0)
        phases[m] = scale * value
    return phases


def _survival_amplitude(phases: np.ndarray) -> complex:
    n_atoms = len(phases) - 1
    weights = binom(n_atoms, np.arange(n_atoms + 1)) / 2.0 ** n_atoms
    return complex(np.sum(weights * np.exp(-1j * phases)))


def analytic_blocking_amplitude(n_atoms: int, phi: float) -> complex:
    """Σ_m C(N, m)/2^N exp(-i m(m-1) φ), the survival amplitude of |A^N>"""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1: {n_atoms}")
    m = np.arange(n_atoms + 1)
    return _survival_amplitude(m * (m - 1) * phi)


def analytic_blocking_fidelity(n_atoms: int, phi: float) -> float:
    """F_b = |Σ_m C(N, m)/2^N exp(-i m(m-1) φ)|²"""
    return abs(analytic_blocking_amplitude(n_atoms, phi)) ** 2


def blocking_fidelity_from_phases(phases: np.ndarray) -> float:
    """F_b = |Σ_m C(N, m)/2^N exp(-i θ_m)|², with θ_m from :py:func:`sector_phases`"""
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or phases.size < 2:
        raise ValueError("phases must hold theta_m for m = 0..N, N >= 1")
    return abs(_survival_amplitude(phases)) ** 2


def analytic_ghz_fidelity(
    n_atoms: int, phi: float, transfer_amplitude: complex = 1.0
) -> float:
    """
    GHZ fidelity when the blocked branch has the analytic survival amplitude
    and the transfer branch has ``transfer_amplitude`` (1 for ideal transfer)
    """
    amplitude = analytic_blocking_amplitude(n_atoms, phi) + transfer_amplitude
    return abs(amplitude / 2.0) ** 2


def dark_state_count(n_atoms: int) -> int:
    """Dark states of N interacting atoms: the N + 1 symmetric ones without R"""
    return n_atoms + 1


def grey_state_count(n_atoms: int) -> int:
    return 2 ** n_atoms - (n_atoms + 1)


def grey_shift_bound(n_atoms: int, x: float, epsilon: float) -> float:
    """The largest grey state shift, ε·N(N-1)·x⁴"""
    return epsilon * n_atoms * (n_atoms - 1) * x ** 4


def double_occupation_estimate(n_atoms: int, x_max: float, v_min_over_eps: float) -> float:
    """Ensemble double Rydberg probability scale, N²·x⁴·(ε/V_min)²"""
    return n_atoms ** 2 * x_max ** 4 / v_min_over_eps ** 2


def control_double_occupation_estimate(x_max: float, v_over_eps: float) -> float:
    """Joint control-ensemble Rydberg probability scale, x²·(ε/V_k)²"""
    return x_max ** 2 / v_over_eps ** 2
