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
Rydgate Validation
------------------

A quick suite of physics and numerics checks, run by ``rydgate validate``.
Each check returns a :py:class:`CheckResult`; a check that raises is a
failure, never an abort of the suite.
"""

from dataclasses import dataclass
from typing import Callable
from typing import List
from typing import Tuple

import numpy as np
from scipy.stats import unitary_group

from rydgate.analytic import DEFAULT_PHASE_CONVENTION
from rydgate.analytic import analytic_blocking_fidelity
from rydgate.analytic import dark_states
from rydgate.analytic import grey_energy_numeric
from rydgate.gate import blocking_fidelity_numeric
from rydgate.gate import resolve_phase_convention
from rydgate.gate import run_gate
from rydgate.hamiltonian import Hamiltonian
from rydgate.hamiltonian import HamiltonianSpec
from rydgate.hamiltonian import effective_atom_matrix
from rydgate.hilbert import Model
from rydgate.interferometer import BranchUnitary
from rydgate.interferometer import run_interferometer
from rydgate.logger import get_logger
from rydgate.physics import PhysParams
from rydgate.physics import RamanPulse
from rydgate.physics import pi_pulse_omega_max
from rydgate.physics import susceptibility

LOGGER = get_logger(__name__)

#: Seed of the random checks
SEED = 20240101


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def check_pi_pulse_area() -> Tuple[bool, str]:
    delta, t_raman = 2 * np.pi * 1.2e9, 0.44e-6
    area = RamanPulse(pi_pulse_omega_max(delta, t_raman), t_raman).area(delta)
    error = abs(area - np.pi) / np.pi
    return error < 1e-6, f"relative area error {error:.3g}"


def check_dark_states() -> Tuple[bool, str]:
    worst = 0.0
    for x in np.linspace(0.0, 0.5, 11):
        h = effective_atom_matrix(x)
        dark = dark_states(x)
        worst = max(worst, np.linalg.norm(h @ dark.d1), np.linalg.norm(h @ dark.d2))
    return worst <= 1e-12, f"max |H d| = {worst:.3g} eps"


def check_hermitian() -> Tuple[bool, str]:
    params = PhysParams.rb87(n_atoms=2, v_ensemble_over_eps=5.0)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for model in Model:
        hamiltonian = Hamiltonian(HamiltonianSpec(model, params))
        for t in rng.uniform(0, params.t_raman, 3):
            matrix = hamiltonian.to_dense(t)
            scale = np.max(np.abs(matrix))
            worst = max(worst, np.max(np.abs(matrix - matrix.conj().T)) / scale)
    return worst <= 1e-12, f"max relative asymmetry {worst:.3g}"


def check_eit_zero() -> Tuple[bool, str]:
    params = PhysParams.rb87()
    chi = susceptibility(params.delta, params, 0.0, regulator=0.0)
    return abs(chi) <= 1e-12, f"|chi(delta)| = {abs(chi):.3g}"


def check_grey_energy() -> Tuple[bool, str]:
    strong = grey_energy_numeric(0.1, 1e4) / (2 * 0.1 ** 4)
    weak = grey_energy_numeric(0.05, 1e-3) / (0.05 ** 4 * 1e-3)
    passed = abs(strong - 1) < 0.05 and abs(weak - 1) < 0.02
    return passed, f"E/(2 eps x^4) = {strong:.4f}, E/(x^4 V) = {weak:.4f}"


def check_blocking_formula() -> Tuple[bool, str]:
    value = analytic_blocking_fidelity(2, np.pi / 2)
    return abs(value - 0.25) < 1e-12, f"F_b(N=2, pi/2) = {value:.12g}"


def check_blocking() -> Tuple[bool, str]:
    fidelity = blocking_fidelity_numeric(1, PhysParams.rb87())
    return fidelity >= 0.99, f"blocking fidelity {fidelity:.6f}"


def check_transfer() -> Tuple[bool, str]:
    outcome = run_gate("1", "A", PhysParams.rb87())
    passed = outcome.fidelity >= 0.98 and outcome.norm_loss <= 1e-8
    return passed, f"transfer fidelity {outcome.fidelity:.6f}, norm loss {outcome.norm_loss:.3g}"


def check_interferometer() -> Tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10):
        d = int(rng.integers(1, 9))
        phi = rng.normal(size=d) + 1j * rng.normal(size=d)
        phi /= np.linalg.norm(phi)
        u_a, u_b = (BranchUnitary.dense(_random_unitary(rng, d)) for _ in range(2))
        expected = np.vdot(u_a.apply(phi), u_b.apply(phi))
        result = run_interferometer(phi, u_a, u_b)
        worst = max(worst, abs(result.overlap_estimate - expected))
    return worst <= 1e-10, f"max overlap error {worst:.3g}"


def check_phase_convention() -> Tuple[bool, str]:
    convention = resolve_phase_convention(PhysParams.rb87())
    return (
        convention is DEFAULT_PHASE_CONVENTION,
        f"simulation selects {convention.value}",
    )


def _random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    # unitary_group needs d > 1
    if d == 1:
        return np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])
    return unitary_group.rvs(d, random_state=rng)


QUICK_CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("pi_pulse_area", check_pi_pulse_area),
    ("dark_states", check_dark_states),
    ("hermitian", check_hermitian),
    ("eit_zero", check_eit_zero),
    ("grey_energy", check_grey_energy),
    ("blocking_formula", check_blocking_formula),
    ("blocking", check_blocking),
    ("transfer", check_transfer),
    ("interferometer", check_interferometer),
]

SLOW_CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("phase_convention", check_phase_convention),
]


def run_checks(quick: bool = True) -> List[CheckResult]:
    """
    :param quick: skip the checks that take more than a few seconds
    """
    checks = QUICK_CHECKS if quick else QUICK_CHECKS + SLOW_CHECKS
    results = []
    for name, check in checks:
        try:
            passed, detail = check()
        except Exception as err:  # pylint: disable=broad-except
            LOGGER.error("Check %s raised: %s", name, err)
            passed, detail = False, f"{type(err).__name__}: {err}"
        result = CheckResult(name, bool(passed), detail)
        LOGGER.debug("%s", result)
        results.append(result)
    return results
