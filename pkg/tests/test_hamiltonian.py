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
Test the rydgate.hamiltonian module
"""

import numpy as np
import pytest

from rydgate import hamiltonian as hamiltonian_module
from rydgate.hamiltonian import Hamiltonian
from rydgate.hamiltonian import HamiltonianSpec
from rydgate.hamiltonian import build_effective_hamiltonian
from rydgate.hamiltonian import build_full_hamiltonian
from rydgate.hamiltonian import effective_atom_matrix
from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import Model
from rydgate.hilbert import SchemeError
from rydgate.hilbert import basis_index
from rydgate.physics import ParameterError
from rydgate.physics import PhysParams
from rydgate.physics import derived_scales
from rydgate.physics import epsilon


@pytest.mark.parametrize("x", [0.0, 0.1, 0.3, 0.5])
def test_effective_atom_eigenvalues(x):
    values = np.linalg.eigvalsh(effective_atom_matrix(x))
    assert values == pytest.approx([0.0, 0.0, 1.0 + x ** 2], abs=1e-12)


def test_effective_atom_scaling():
    assert effective_atom_matrix(0.2, 3.0) == pytest.approx(3.0 * effective_atom_matrix(0.2))


@pytest.mark.parametrize("model", list(Model))
def test_hamiltonian_is_hermitian(model):
    params = PhysParams.rb87(n_atoms=2, v_ensemble_over_eps=5.0)
    hamiltonian = Hamiltonian(HamiltonianSpec(model, params))
    for t in np.linspace(0, params.t_raman, 5):
        matrix = hamiltonian.to_dense(t)
        assert np.allclose(matrix, matrix.conj().T, rtol=0, atol=1e-12 * np.abs(matrix).max())


def test_effective_site_matrix_is_the_elimination(rb87_params):
    hamiltonian = Hamiltonian(HamiltonianSpec(Model.EFFECTIVE, rb87_params))
    scales = derived_scales(rb87_params)
    for t in np.linspace(0, rb87_params.t_raman, 7):
        expected = effective_atom_matrix(scales.x_of_t(t), scales.epsilon)
        assert hamiltonian.site_matrix(t) == pytest.approx(expected, rel=1e-12, abs=1.0)


def test_full_site_matrix(rb87_params):
    hamiltonian = Hamiltonian(HamiltonianSpec(Model.FULL, rb87_params))
    t = rb87_params.t_raman / 2
    matrix = hamiltonian.site_matrix(t)
    a, b, p, r = range(4)
    assert matrix[p, p] == -rb87_params.delta
    assert matrix[p, a] == pytest.approx(rb87_params.omega_p_max / 2)
    assert matrix[b, p] == pytest.approx(rb87_params.omega_p_max / 2)
    assert matrix[p, r] == pytest.approx(rb87_params.omega_c / 2)
    assert matrix[a, b] == 0


def test_decay_terms(rb87_params):
    full = Hamiltonian(HamiltonianSpec(Model.FULL, rb87_params, include_decay=True))
    assert full.site_matrix(0.0)[2, 2] == pytest.approx(
        -rb87_params.delta - 0.5j * rb87_params.gamma_p
    )
    effective = Hamiltonian(HamiltonianSpec(Model.EFFECTIVE, rb87_params, include_decay=True))
    assert effective.site_matrix(0.0)[2, 2].imag < 0
    r = effective.scheme.control_index("r")
    assert effective.control_matrix[r, r] == pytest.approx(-0.5j / rb87_params.tau_r)
    assert not effective.spec.hermitian


def test_interaction_diagonal(rb87_pair):
    params = rb87_pair.with_interactions(v_control_over_eps=[40, 20], v_ensemble_over_eps=5)
    eps = epsilon(params)
    scheme = LevelScheme(Model.EFFECTIVE, 2)
    hamiltonian = Hamiltonian(HamiltonianSpec(Model.EFFECTIVE, params))
    diagonal = hamiltonian.diagonal
    assert diagonal[basis_index(scheme, "r", "RA")] == pytest.approx(40 * eps)
    assert diagonal[basis_index(scheme, "r", "AR")] == pytest.approx(20 * eps)
    assert diagonal[basis_index(scheme, "0", "RA")] == 0
    assert diagonal[basis_index(scheme, "0", "RR")] == pytest.approx(5 * eps)
    assert diagonal[basis_index(scheme, "r", "RR")] == pytest.approx(65 * eps)


def test_control_in_r_switch(rb87_params):
    scheme = LevelScheme(Model.EFFECTIVE, 1)
    v_k = rb87_params.v_control[0]
    index = basis_index(scheme, "0", "R")
    spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params)
    shifted = build_effective_hamiltonian(spec, 0.0, control_in_r=True)
    assert shifted.hamiltonian.diagonal[index] == pytest.approx(v_k)
    dropped = build_effective_hamiltonian(spec, 0.0, control_in_r=False)
    assert not np.any(dropped.hamiltonian.diagonal)
    default = build_effective_hamiltonian(spec, 0.0)
    assert default.hamiltonian.diagonal[index] == 0


def test_hamiltonian_action(rb87_params):
    scheme = LevelScheme(Model.EFFECTIVE, 1)
    spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params)
    action = build_effective_hamiltonian(spec, 0.0)
    state = CompositeState.basis(scheme, "r", "R")
    result = action(state)
    eps = epsilon(rb87_params)
    # Ω_p(0) = 0, so |r>|R> only sees ε and V_k
    assert result.amplitudes[basis_index(scheme, "r", "R")] == pytest.approx(41 * eps)
    assert np.count_nonzero(result.amplitudes) == 1


def test_builders_check_model(rb87_params):
    full_spec = HamiltonianSpec(Model.FULL, rb87_params)
    effective_spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params)
    with pytest.raises(SchemeError):
        build_full_hamiltonian(effective_spec, 0.0)
    with pytest.raises(SchemeError):
        build_effective_hamiltonian(full_spec, 0.0)
    with pytest.raises(ParameterError):
        build_full_hamiltonian(full_spec, 2 * rb87_params.t_raman)
    assert build_full_hamiltonian(full_spec, 0.0).t == 0.0


def test_control_coupling(rb87_params):
    omega_r = 2 * np.pi * 10e6
    spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params, control_coupling=omega_r)
    hamiltonian = Hamiltonian(spec)
    one = hamiltonian.scheme.control_index("1")
    r = hamiltonian.scheme.control_index("r")
    assert hamiltonian.control_matrix[one, r] == pytest.approx(omega_r / 2)
    assert hamiltonian.control_matrix[r, one] == pytest.approx(omega_r / 2)
    with pytest.raises(ParameterError):
        HamiltonianSpec(Model.EFFECTIVE, rb87_params, control_coupling=-1.0)


def test_tensor_path_matches_sparse(monkeypatch):
    params = PhysParams.rb87(n_atoms=3, v_ensemble_over_eps=7.0)
    spec = HamiltonianSpec(Model.FULL, params, include_decay=True, control_coupling=1e7)
    hamiltonian = Hamiltonian(spec)
    rng = np.random.default_rng(7)
    psi = rng.normal(size=hamiltonian.scheme.dimension) + 1j * rng.normal(
        size=hamiltonian.scheme.dimension
    )
    t = 0.3 * params.t_raman
    sparse_result = hamiltonian.apply(t, psi)
    monkeypatch.setattr(hamiltonian_module, "SPARSE_DIMENSION", 0)
    assert not hamiltonian.uses_sparse
    tensor_result = hamiltonian.apply(t, psi)
    scale = np.abs(sparse_result).max()
    assert np.allclose(tensor_result, sparse_result, rtol=0, atol=1e-12 * scale)
    operator = hamiltonian.as_linear_operator(t)
    assert np.allclose(operator.matvec(psi), sparse_result, rtol=0, atol=1e-12 * scale)


def test_dense_guard():
    params = PhysParams.rb87(n_atoms=9)
    hamiltonian = Hamiltonian(HamiltonianSpec(Model.EFFECTIVE, params))
    assert hamiltonian.scheme.dimension > hamiltonian_module.DENSE_DIMENSION
    with pytest.raises(SchemeError):
        hamiltonian.to_dense(0.0)


def test_register_must_fit(rb87_params):
    spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params)
    with pytest.raises(SchemeError):
        Hamiltonian(spec, LevelScheme(Model.FULL, 1))
    with pytest.raises(SchemeError):
        Hamiltonian(spec, LevelScheme(Model.EFFECTIVE, 2))
    hamiltonian = Hamiltonian(spec)
    with pytest.raises(SchemeError):
        hamiltonian(0.0, CompositeState.basis(LevelScheme(Model.FULL, 1), "0", "A"))


def test_window(rb87_params):
    spec = HamiltonianSpec(Model.EFFECTIVE, rb87_params, t_offset=1e-6)
    assert spec.t_start == 1e-6
    assert spec.t_stop == pytest.approx(1e-6 + rb87_params.t_raman)
    spec.window(spec.t_start, spec.t_stop)
    with pytest.raises(ParameterError):
        spec.window(spec.t_stop, spec.t_start)
    with pytest.raises(ParameterError):
        spec.window(0.0, spec.t_stop)


def test_natural_scale(rb87_params):
    full = HamiltonianSpec(Model.FULL, rb87_params)
    effective = HamiltonianSpec(Model.EFFECTIVE, rb87_params)
    assert full.natural_scale == rb87_params.delta
    assert effective.natural_scale == pytest.approx(epsilon(rb87_params))
