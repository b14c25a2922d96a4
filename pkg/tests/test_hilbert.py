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
Test the rydgate.hilbert module
"""

import numpy as np
import pytest

from rydgate.hilbert import CompositeState
from rydgate.hilbert import LevelScheme
from rydgate.hilbert import Model
from rydgate.hilbert import SchemeError
from rydgate.hilbert import Site
from rydgate.hilbert import SiteOperator
from rydgate.hilbert import apply_site_operator
from rydgate.hilbert import apply_two_site_projector
from rydgate.hilbert import basis_index
from rydgate.hilbert import basis_labels
from rydgate.hilbert import control_indicator
from rydgate.hilbert import iter_basis
from rydgate.hilbert import occupation_counts
from rydgate.hilbert import overlap
from rydgate.hilbert import swap_labels


def test_level_scheme_dimensions(full_pair_scheme, effective_pair_scheme):
    assert full_pair_scheme.d_c == 3
    assert full_pair_scheme.d_e == 4
    assert full_pair_scheme.dimension == 48
    assert full_pair_scheme.shape == (3, 4, 4)
    assert effective_pair_scheme.d_e == 3
    assert effective_pair_scheme.dimension == 27
    assert effective_pair_scheme.ensemble_levels == ("A", "B", "R")


def test_level_scheme_parses_model():
    scheme = LevelScheme("effective", 1)
    assert scheme.model is Model.EFFECTIVE
    with pytest.raises(SchemeError):
        LevelScheme("bogus", 1)


def test_level_scheme_rejects_bad_atoms():
    with pytest.raises(SchemeError):
        LevelScheme(Model.FULL, -1)
    with pytest.raises(SchemeError):
        LevelScheme(Model.FULL, 1.5)


def test_level_scheme_dimension_cap():
    with pytest.raises(SchemeError):
        LevelScheme(Model.FULL, 10)
    with pytest.raises(SchemeError):
        LevelScheme(Model.EFFECTIVE, 3, max_dimension=50)
    assert LevelScheme(Model.EFFECTIVE, 3, max_dimension=81).dimension == 81


def test_level_scheme_header():
    scheme = LevelScheme(Model.FULL, 2)
    assert scheme.header() == "scheme=FULL d_c=3 d_e=4 N=2"
    assert LevelScheme.from_header(scheme.header()) == scheme
    with pytest.raises(SchemeError):
        LevelScheme.from_header("scheme=FULL d_c=3 d_e=3 N=2")
    with pytest.raises(SchemeError):
        LevelScheme.from_header("scheme=FULL N=2")


def test_basis_index_mixed_radix(full_pair_scheme):
    assert basis_index(full_pair_scheme, "0", "AA") == 0
    assert basis_index(full_pair_scheme, "0", "AB") == 1
    assert basis_index(full_pair_scheme, "0", "BA") == 4
    assert basis_index(full_pair_scheme, "1", ["A", "A"]) == 16
    assert basis_index(full_pair_scheme, "r", ["R", "R"]) == 47


def test_basis_index_errors(full_pair_scheme, effective_pair_scheme):
    with pytest.raises(SchemeError):
        basis_index(full_pair_scheme, "2", "AA")
    with pytest.raises(SchemeError):
        basis_index(full_pair_scheme, "0", "AAA")
    with pytest.raises(SchemeError):
        basis_index(effective_pair_scheme, "0", "AP")


def test_basis_labels_inverts_basis_index(effective_pair_scheme):
    for index, control, labels in iter_basis(effective_pair_scheme):
        assert basis_index(effective_pair_scheme, control, labels) == index
    assert basis_labels(effective_pair_scheme, 26) == ("r", ("R", "R"))
    with pytest.raises(SchemeError):
        basis_labels(effective_pair_scheme, 27)


@pytest.mark.parametrize("model", [Model.FULL, Model.EFFECTIVE])
@pytest.mark.parametrize("n_atoms", [1, 2, 3])
def test_basis_index_is_a_bijection(model, n_atoms):
    scheme = LevelScheme(model, n_atoms)
    seen = set()
    for index, control, labels in iter_basis(scheme):
        assert basis_index(scheme, control, labels) == index
        seen.add((control, labels))
    assert len(seen) == scheme.dimension == 3 * len(scheme.ensemble_levels) ** n_atoms


def test_site_axis(full_pair_scheme):
    assert Site.control().axis(full_pair_scheme) == 0
    assert Site.ensemble(1).axis(full_pair_scheme) == 2
    assert str(Site.ensemble(1)) == "atom[1]"
    with pytest.raises(SchemeError):
        Site.ensemble(2).axis(full_pair_scheme)
    with pytest.raises(SchemeError):
        Site.ensemble(-1)


def test_site_operator_checks():
    with pytest.raises(SchemeError):
        SiteOperator(Site.control(), np.ones((3, 2)))
    with pytest.raises(SchemeError):
        SiteOperator(Site.control(), np.triu(np.ones((3, 3))), hermitian=True)
    op = SiteOperator(Site.control(), np.eye(3), hermitian=True)
    assert op.dimension == 3
    assert not op.matrix.flags.writeable


def test_site_operator_dimension_mismatch(effective_pair_scheme):
    state = CompositeState.basis(effective_pair_scheme, "0", "AA")
    op = SiteOperator(Site.ensemble(0), np.eye(4))
    with pytest.raises(SchemeError):
        apply_site_operator(state, op)


def test_apply_transition(full_pair_scheme):
    state = CompositeState.basis(full_pair_scheme, "0", "AA")
    flip = SiteOperator.transition(Site.ensemble(0), full_pair_scheme, "B", "A")
    result = apply_site_operator(state, flip)
    expected = CompositeState.basis(full_pair_scheme, "0", "BA")
    assert np.array_equal(result.amplitudes, expected.amplitudes)
    # the input is untouched
    assert state.amplitudes[0] == 1


def test_apply_control_operator(effective_pair_scheme):
    state = CompositeState.basis(effective_pair_scheme, "1", "AB")
    raise_r = SiteOperator.transition(Site.control(), effective_pair_scheme, "r", "1", 2j)
    result = apply_site_operator(state, raise_r)
    assert result.amplitudes[basis_index(effective_pair_scheme, "r", "AB")] == 2j
    assert result.norm() == pytest.approx(2.0)


def random_state(rng: np.random.Generator, scheme: LevelScheme) -> CompositeState:
    size = scheme.dimension
    return CompositeState(scheme, rng.normal(size=size) + 1j * rng.normal(size=size))


def random_operator(rng: np.random.Generator, site: Site, scheme: LevelScheme) -> SiteOperator:
    d = len(site.levels(scheme))
    return SiteOperator(site, rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))


@pytest.mark.parametrize("model", [Model.FULL, Model.EFFECTIVE])
@pytest.mark.parametrize("n_atoms", [1, 2, 3])
def test_site_operators_on_different_sites_commute(model, n_atoms):
    scheme = LevelScheme(model, n_atoms)
    rng = np.random.default_rng(11 + n_atoms)
    sites = [Site.control()] + [Site.ensemble(k) for k in range(n_atoms)]
    for i, first in enumerate(sites):
        for second in sites[i + 1 :]:
            state = random_state(rng, scheme)
            a = random_operator(rng, first, scheme)
            b = random_operator(rng, second, scheme)
            ab = apply_site_operator(apply_site_operator(state, b), a)
            ba = apply_site_operator(apply_site_operator(state, a), b)
            np.testing.assert_allclose(ab.amplitudes, ba.amplitudes, rtol=0, atol=1e-12)


def test_two_site_projector(effective_pair_scheme):
    scheme = effective_pair_scheme
    ones = CompositeState(scheme, np.ones(scheme.dimension))
    result = apply_two_site_projector(ones, Site.control(), Site.ensemble(1), "r", "R", 3.0)
    selected = np.flatnonzero(result.amplitudes)
    assert len(selected) == 3
    for index in selected:
        control, labels = basis_labels(scheme, index)
        assert control == "r"
        assert labels[1] == "R"
        assert result.amplitudes[index] == 3.0
    with pytest.raises(SchemeError):
        apply_two_site_projector(ones, Site.ensemble(0), Site.ensemble(0), "R", "R")


def test_product_state(effective_pair_scheme):
    s = 1 / np.sqrt(2)
    state = CompositeState.product(
        effective_pair_scheme, [s, s, 0], [[1, 0, 0], [0, 1, 0]]
    )
    assert state.norm() == pytest.approx(1.0)
    assert state.amplitudes[basis_index(effective_pair_scheme, "0", "AB")] == pytest.approx(s)
    assert state.amplitudes[basis_index(effective_pair_scheme, "1", "AB")] == pytest.approx(s)
    with pytest.raises(SchemeError):
        CompositeState.product(effective_pair_scheme, [1, 0], [[1, 0, 0], [1, 0, 0]])


def test_state_arithmetic(effective_pair_scheme):
    a = CompositeState.basis(effective_pair_scheme, "0", "AA")
    b = CompositeState.basis(effective_pair_scheme, "1", "BB")
    superposition = (a + 1j * b).normalized()
    assert superposition.norm() == pytest.approx(1.0)
    assert overlap(a, superposition) == pytest.approx(1 / np.sqrt(2))
    assert overlap(b, superposition) == pytest.approx(1j / np.sqrt(2))
    assert (a - a).norm() == 0
    assert (a * 2).norm() == pytest.approx(2.0)
    with pytest.raises(TypeError):
        a + 1
    with pytest.raises(SchemeError):
        CompositeState.zeros(effective_pair_scheme).normalized()


def test_overlap_is_conjugate_symmetric(full_pair_scheme):
    rng = np.random.default_rng(3)
    a = random_state(rng, full_pair_scheme)
    b = random_state(rng, full_pair_scheme)
    assert abs(overlap(a, b) - overlap(b, a).conjugate()) <= 1e-14
    assert overlap(a, a).real == pytest.approx(a.norm() ** 2)


def test_state_scheme_mismatch(effective_pair_scheme, full_pair_scheme):
    a = CompositeState.basis(effective_pair_scheme, "0", "AA")
    b = CompositeState.basis(full_pair_scheme, "0", "AA")
    with pytest.raises(SchemeError):
        a + b
    with pytest.raises(SchemeError):
        overlap(a, b)
    with pytest.raises(SchemeError):
        CompositeState(effective_pair_scheme, np.zeros(48))


def test_state_is_immutable(effective_pair_scheme):
    state = CompositeState.basis(effective_pair_scheme, "0", "AA")
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0


def test_populations(effective_pair_scheme):
    scheme = effective_pair_scheme
    amplitudes = np.zeros(scheme.dimension, dtype=complex)
    amplitudes[basis_index(scheme, "0", "AR")] = np.sqrt(0.25)
    amplitudes[basis_index(scheme, "r", "RR")] = np.sqrt(0.75)
    state = CompositeState(scheme, amplitudes)
    assert state.control_populations() == pytest.approx({"0": 0.25, "1": 0.0, "r": 0.75})
    assert state.level_populations() == pytest.approx({"A": 0.25, "B": 0.0, "R": 1.75})


def test_occupation_counts(effective_pair_scheme):
    counts = occupation_counts(effective_pair_scheme, "R")
    assert counts[basis_index(effective_pair_scheme, "0", "RR")] == 2
    assert counts[basis_index(effective_pair_scheme, "1", "AR")] == 1
    assert counts[basis_index(effective_pair_scheme, "r", "AB")] == 0
    indicator = control_indicator(effective_pair_scheme, "r")
    assert indicator.sum() == 9
    assert indicator[basis_index(effective_pair_scheme, "r", "AB")] == 1


def test_snapshot_text(full_pair_scheme, tmp_path):
    state = (
        CompositeState.basis(full_pair_scheme, "0", "AA")
        - 1j * CompositeState.basis(full_pair_scheme, "0", "BB")
    ).normalized()
    text = state.dumps()
    lines = text.splitlines()
    assert lines[0] == "scheme=FULL d_c=3 d_e=4 N=2"
    index, re, im = lines[1].split()
    assert (index, im) == ("0", "0")
    assert float(re) == state.amplitudes[0].real
    assert lines[2].split()[0] == "5"
    assert len(lines) == 3
    loaded = CompositeState.load(state.dump(tmp_path / "state.txt"))
    assert loaded.scheme == full_pair_scheme
    assert np.array_equal(loaded.amplitudes, state.amplitudes)


def test_snapshot_errors():
    with pytest.raises(SchemeError):
        CompositeState.loads("")
    with pytest.raises(SchemeError):
        CompositeState.loads("scheme=EFFECTIVE d_c=3 d_e=3 N=1\n0 1\n")
    with pytest.raises(SchemeError):
        CompositeState.loads("scheme=EFFECTIVE d_c=3 d_e=3 N=1\n9 1 0\n")


def test_swap_labels():
    assert swap_labels("AAB") == ["B", "B", "A"]
    assert swap_labels(["A", "R"]) == ["B", "R"]
