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
Rydgate Physics
---------------

Physical parameters of the ensemble gate, the Raman pulse, derived energy
scales and the EIT susceptibility of the ladder ``A -> P -> R``.

All frequencies and energies are angular frequencies in rad/s with
``hbar = 1``; times are in seconds.  Helpers convert the ``2*pi*MHz`` style
values quoted for lasers:

.. code-block::

    params = PhysParams.rb87(n_atoms=2)
    epsilon(params) / mhz(1)  # ~36.75
    params.pulse.duration  # ~0.653e-6, from the pi-pulse area condition

The ``rb87`` preset follows the published parameter set: Δ = 2π·1.2 GHz,
max Ω_p = 2π·70 MHz, Ω_c = 6·max Ω_p, γ_p = 36e6 /s (read as a rate),
τ_r = 66 μs and V_k = 40ε.  The Raman duration is derived from the π-pulse
area condition, so it is ~0.653 μs rather than the quoted 0.44 μs.
"""

import enum
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Callable
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from scipy import integrate

from rydgate.logger import get_logger

LOGGER = get_logger(__name__)

TWO_PI = 2.0 * np.pi

#: Relative slack for pulse-window time checks
TIME_TOL: float = 1e-9

#: Rydberg coherence regulator of the susceptibility, relative to γ_p
GAMMA_R_RATIO: float = 1e-4

ArrayLike = Union[float, np.ndarray]


class ParameterError(ValueError):
    """Invalid physical parameters, pulse shapes or times"""


def mhz(nu: float) -> float:
    """Angular frequency (rad/s) of ``nu`` MHz"""
    return TWO_PI * nu * 1e6


def ghz(nu: float) -> float:
    """Angular frequency (rad/s) of ``nu`` GHz"""
    return TWO_PI * nu * 1e9


def us(t: float) -> float:
    """Seconds in ``t`` microseconds"""
    return t * 1e-6


class GammaConvention(str, enum.Enum):
    """How a decay figure quoted in 'MHz' is read"""

    #: 36 -> 36e6 /s
    RATE = "rate"
    #: 36 -> 2*pi*36e6 rad/s
    ANGULAR = "angular"

    def to_rate(self, per_us: float) -> float:
        if self is GammaConvention.ANGULAR:
            return mhz(per_us)
        return per_us * 1e6


#: Rb87 preset, Raman detuning Δ
RB87_DELTA: float = ghz(1.2)
#: Rb87 preset, peak Raman Rabi frequency
RB87_OMEGA_P_MAX: float = mhz(70.0)
#: Rb87 preset, Ω_c / max Ω_p
RB87_CONTROL_RATIO: float = 6.0
#: Rb87 preset, |P> decay rate
RB87_GAMMA_P: float = GammaConvention.RATE.to_rate(36.0)
#: Rb87 preset, lifetime of the control Rydberg level |r>
RB87_TAU_R: float = us(66.0)
#: Rb87 preset, V_k / ε
RB87_V_CONTROL_OVER_EPS: float = 40.0


class PulseProfile(str, enum.Enum):
    SIN_SQUARED = "SIN_SQUARED"


@dataclass(frozen=True)
class RamanPulse:
    """
    A smooth Raman pulse Ω_p(t) = Ω_max·sin²(πt/T) on ``[0, T]``
    """

    #: peak Rabi frequency, rad/s
    omega_max: float
    #: pulse length T, s
    duration: float
    profile: PulseProfile = PulseProfile.SIN_SQUARED

    def __post_init__(self):
        if not np.isfinite(self.omega_max) or self.omega_max < 0:
            raise ParameterError(f"omega_max must be finite and >= 0: {self.omega_max}")
        if not np.isfinite(self.duration) or self.duration <= 0:
            raise ParameterError(f"duration must be finite and > 0: {self.duration}")
        object.__setattr__(self, "profile", PulseProfile(self.profile))

    def rabi(self, t: ArrayLike) -> ArrayLike:
        return raman_rabi(self, t)

    def area(self, delta: float) -> float:
        """The two-photon area ∫Ω_p²/(2Δ) dt, by quadrature"""
        if delta <= 0:
            raise ParameterError(f"delta must be > 0: {delta}")
        value, _ = integrate.quad(
            lambda t: raman_rabi(self, t) ** 2, 0.0, self.duration, limit=200
        )
        return value / (2.0 * delta)


def raman_rabi(pulse: RamanPulse, t: ArrayLike) -> ArrayLike:
    """
    The Raman Rabi frequency Ω_max·sin²(πt/T)

    :param pulse: a Raman pulse
    :param t: time(s) in ``[0, T]``, s
    :return: Ω_p(t), rad/s
    :raises ParameterError: if any time is outside the pulse
    """
    times = np.asarray(t, dtype=float)
    slack = TIME_TOL * pulse.duration
    if np.any(times < -slack) or np.any(times > pulse.duration + slack):
        raise ParameterError(f"t={t} is outside the pulse [0, {pulse.duration}]")
    times = np.clip(times, 0.0, pulse.duration)
    value = pulse.omega_max * np.sin(np.pi * times / pulse.duration) ** 2
    return float(value) if np.ndim(value) == 0 else value


def pi_pulse_omega_max(delta: float, t_raman: float) -> float:
    """
    The peak Rabi frequency √(16πΔ/(3T)) that makes the sin² pulse a Raman
    π-pulse, ∫Ω_p²/(2Δ) dt = π.
    """
    if delta <= 0 or t_raman <= 0:
        raise ParameterError(f"delta and t_raman must be > 0: {delta}, {t_raman}")
    return float(np.sqrt(16.0 * np.pi * delta / (3.0 * t_raman)))


def pi_pulse_duration(delta: float, omega_max: float) -> float:
    """The inverse of :py:func:`pi_pulse_omega_max`: T = 16πΔ/(3Ω_max²)"""
    if delta <= 0 or omega_max <= 0:
        raise ParameterError(f"delta and omega_max must be > 0: {delta}, {omega_max}")
    return float(16.0 * np.pi * delta / (3.0 * omega_max ** 2))


def _as_vector(values, n: int, name: str) -> Tuple[float, ...]:
    vector = np.atleast_1d(np.asarray(values, dtype=float))
    if vector.size == 1 and n != 1:
        vector = np.full(n, float(vector[0]))
    if vector.shape != (n,):
        raise ParameterError(f"{name} must have {n} entries, got {vector.size}")
    return tuple(vector.tolist())


def _as_matrix(values, n: int, name: str) -> Tuple[Tuple[float, ...], ...]:
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 0:
        matrix = np.full((n, n), float(matrix))
        np.fill_diagonal(matrix, 0.0)
    if matrix.shape != (n, n):
        raise ParameterError(f"{name} must be {n}x{n}, got shape {matrix.shape}")
    return tuple(tuple(row) for row in matrix.tolist())


@dataclass(frozen=True)
class PhysParams:
    """
    Laser, atom and interaction parameters of one gate.

    Interactions are stored as tuples so that instances are hashable and can
    be sent to sweep worker processes; ``v_control`` and ``v_ensemble`` accept
    any sequence, and a scalar is broadcast to every atom (or every pair).
    """

    #: Raman detuning Δ from |P>, rad/s
    delta: float
    #: control field Rabi frequency Ω_c (P <-> R), rad/s
    omega_c: float
    #: peak Raman Rabi frequency, rad/s
    omega_p_max: float
    #: Raman pulse length T, s
    t_raman: float
    #: decay rate of |P>, /s
    gamma_p: float = 0.0
    #: lifetime of the control Rydberg level |r>, s
    tau_r: float = float("inf")
    #: control-ensemble Rydberg shifts V_k, rad/s
    v_control: Tuple[float, ...] = ()
    #: ensemble-ensemble Rydberg shifts V_jk, rad/s
    v_ensemble: Tuple[Tuple[float, ...], ...] = ()
    #: number of ensemble atoms N
    n_atoms: int = 1

    def __post_init__(self):
        n = int(self.n_atoms)
        if n != self.n_atoms or n < 0:
            raise ParameterError(f"n_atoms must be a nonnegative integer: {self.n_atoms}")
        object.__setattr__(self, "n_atoms", n)

        for name in ("delta", "omega_c", "omega_p_max", "t_raman", "gamma_p"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and >= 0: {value}")
            object.__setattr__(self, name, value)
        if self.t_raman <= 0:
            raise ParameterError(f"t_raman must be > 0: {self.t_raman}")
        if not self.tau_r > 0:
            raise ParameterError(f"tau_r must be > 0: {self.tau_r}")

        v_control = self.v_control if len(np.atleast_1d(self.v_control)) else 0.0
        object.__setattr__(self, "v_control", _as_vector(v_control, n, "v_control"))
        v_ensemble = self.v_ensemble if np.size(self.v_ensemble) else 0.0
        object.__setattr__(self, "v_ensemble", _as_matrix(v_ensemble, n, "v_ensemble"))

        v_k = np.asarray(self.v_control)
        v_jk = self.v_ensemble_matrix
        if not (np.all(np.isfinite(v_k)) and np.all(np.isfinite(v_jk))):
            raise ParameterError("Interaction shifts must be finite")
        if np.any(v_k < 0):
            raise ParameterError(f"v_control must be >= 0: {self.v_control}")
        if np.any(v_jk < 0):
            raise ParameterError("v_ensemble must be >= 0")
        if not np.allclose(v_jk, v_jk.T, rtol=1e-9, atol=0):
            raise ParameterError("v_ensemble must be symmetric")
        if np.any(np.diag(v_jk) != 0):
            raise ParameterError("v_ensemble must have a zero diagonal")

        if self.omega_p_max > 0:
            if self.delta < 2 * self.omega_c:
                LOGGER.warning(
                    "Weak detuning: delta=%.4g < 2*omega_c=%.4g rad/s",
                    self.delta,
                    2 * self.omega_c,
                )
            if self.omega_c <= self.omega_p_max:
                LOGGER.warning(
                    "Weak control field: omega_c=%.4g <= omega_p_max=%.4g rad/s",
                    self.omega_c,
                    self.omega_p_max,
                )

    @property
    def v_ensemble_matrix(self) -> np.ndarray:
        return np.asarray(self.v_ensemble, dtype=float).reshape(self.n_atoms, self.n_atoms)

    @property
    def pulse(self) -> RamanPulse:
        return RamanPulse(self.omega_p_max, self.t_raman)

    @property
    def max_interaction(self) -> float:
        values = list(self.v_control) + [self.v_ensemble_matrix.max(initial=0.0)]
        return float(max(values, default=0.0))

    def replace(self, **changes) -> "PhysParams":
        return replace(self, **changes)

    def with_interactions(
        self,
        v_control_over_eps: Optional[Union[float, Sequence[float]]] = None,
        v_ensemble_over_eps: Optional[Union[float, Sequence[Sequence[float]]]] = None,
    ) -> "PhysParams":
        """
        Replace interaction shifts given in units of ε; a scalar is broadcast
        to every atom (or every pair).
        """
        eps = epsilon(self)
        changes = {}
        if v_control_over_eps is not None:
            changes["v_control"] = tuple(
                eps * v for v in _as_vector(v_control_over_eps, self.n_atoms, "v_control")
            )
        if v_ensemble_over_eps is not None:
            matrix = np.asarray(
                _as_matrix(v_ensemble_over_eps, self.n_atoms, "v_ensemble")
            )
            changes["v_ensemble"] = _as_matrix(eps * matrix, self.n_atoms, "v_ensemble")
        return replace(self, **changes)

    def with_atoms(self, n_atoms: int) -> "PhysParams":
        """
        Resize to ``n_atoms``; uniform interactions are kept uniform, using the
        largest V_k and the largest V_jk of this parameter set.
        """
        if n_atoms == self.n_atoms:
            return self
        v_k = max(self.v_control, default=0.0)
        v_jk = float(self.v_ensemble_matrix.max(initial=0.0))
        return replace(self, n_atoms=n_atoms, v_control=v_k, v_ensemble=v_jk)

    @classmethod
    def rb87(
        cls,
        n_atoms: int = 1,
        v_control_over_eps: float = RB87_V_CONTROL_OVER_EPS,
        v_ensemble_over_eps: float = 0.0,
        omega_p_max: float = RB87_OMEGA_P_MAX,
        control_ratio: float = RB87_CONTROL_RATIO,
    ) -> "PhysParams":
        """
        The Rb87 preset; T is derived from the π-pulse condition.

        :param n_atoms: number of ensemble atoms
        :param v_control_over_eps: uniform V_k in units of ε
        :param v_ensemble_over_eps: uniform V_jk in units of ε
        :param omega_p_max: peak Raman Rabi frequency, rad/s
        :param control_ratio: Ω_c / max Ω_p
        """
        omega_c = control_ratio * omega_p_max
        eps = omega_c ** 2 / (4.0 * RB87_DELTA)
        return cls(
            delta=RB87_DELTA,
            omega_c=omega_c,
            omega_p_max=omega_p_max,
            t_raman=pi_pulse_duration(RB87_DELTA, omega_p_max),
            gamma_p=RB87_GAMMA_P,
            tau_r=RB87_TAU_R,
            v_control=eps * v_control_over_eps,
            v_ensemble=eps * v_ensemble_over_eps,
            n_atoms=n_atoms,
        )


def epsilon(params: PhysParams) -> float:
    """The characteristic energy scale ε = Ω_c²/(4Δ), rad/s"""
    if params.delta <= 0:
        raise ParameterError(f"epsilon needs delta > 0, got {params.delta}")
    return params.omega_c ** 2 / (4.0 * params.delta)


@dataclass(frozen=True)
class DerivedScales:
    #: ε = Ω_c²/(4Δ), rad/s
    epsilon: float
    #: √2·max(Ω_p)/Ω_c
    x_max: float
    #: x(t) = √2·Ω_p(t)/Ω_c
    x_of_t: Callable[[ArrayLike], ArrayLike] = field(repr=False, compare=False)


def derived_scales(params: PhysParams, pulse: Optional[RamanPulse] = None) -> DerivedScales:
    """
    :raises ParameterError: if ε vanishes (no control field or no detuning)
    """
    pulse = pulse or params.pulse
    eps = epsilon(params)
    if eps <= 0:
        raise ParameterError("epsilon must be > 0; omega_c is zero")
    ratio = np.sqrt(2.0) / params.omega_c

    def x_of_t(t: ArrayLike) -> ArrayLike:
        return ratio * raman_rabi(pulse, t)

    return DerivedScales(epsilon=eps, x_max=ratio * pulse.omega_max, x_of_t=x_of_t)


def x_max_for_control(omega_p_max: float, omega_c: float) -> float:
    return float(np.sqrt(2.0) * omega_p_max / omega_c)


def susceptibility(
    delta_probe: ArrayLike,
    params: PhysParams,
    rydberg_shift: float,
    regulator: Optional[float] = None,
) -> Union[complex, np.ndarray]:
    """
    Linear susceptibility of a weak probe on ``A -> P`` of the ladder
    ``A -> P -> R`` dressed by Ω_c, with ``R`` shifted by ``rydberg_shift``

    χ(δ) = (γ_p/2)(δ-Δ-V+iγ_R) / [(δ+iγ_p/2)(δ-Δ-V+iγ_R) - Ω_c²/4]

    δ is the probe detuning from |P>, so two-photon resonance is at δ = Δ + V.
    Without a control field this is the two-level (γ_p/2)/(δ+iγ_p/2).

    :param delta_probe: probe detuning(s) δ, rad/s
    :param params: physical parameters; γ_p must be > 0
    :param rydberg_shift: V, rad/s
    :param regulator: Rydberg coherence γ_R (default ``1e-4 * γ_p``)
    """
    if params.gamma_p <= 0:
        raise ParameterError("susceptibility needs gamma_p > 0")
    gamma_r = GAMMA_R_RATIO * params.gamma_p if regulator is None else regulator
    delta = np.asarray(delta_probe, dtype=float)
    two_photon = delta - params.delta - rydberg_shift + 1j * gamma_r
    one_photon = delta + 0.5j * params.gamma_p
    chi = (
        0.5
        * params.gamma_p
        * two_photon
        / (one_photon * two_photon - params.omega_c ** 2 / 4.0)
    )
    return complex(chi) if chi.ndim == 0 else chi


def transfer_scattering_estimate(params: PhysParams) -> float:
    """
    Probability of scattering from |P> on the transfer path, γ_p·π/Δ; the
    |P> population Ω_p²/(2Δ²) integrated over the π pulse.
    """
    if params.delta <= 0:
        raise ParameterError(f"delta must be > 0: {params.delta}")
    return params.gamma_p * np.pi / params.delta


def rydberg_decay_factor(params: PhysParams) -> float:
    """Survival factor exp(-T/τ_r) of the control Rydberg level"""
    return float(np.exp(-params.t_raman / params.tau_r))
