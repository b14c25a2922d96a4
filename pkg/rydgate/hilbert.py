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
Rydgate Hilbert Space
---------------------

The register is one control atom with levels ``0, 1, r`` and ``N`` ensemble
atoms, each with levels ``A, B, P, R`` (FULL model) or ``A, B, R`` (EFFECTIVE
model, after elimination of ``P``).  Amplitudes are stored as one flat
``complex128`` vector in mixed-radix order: the control level is the most
significant digit, then atom 0, atom 1, and so on.

Operators are never assembled here; a site operator is contracted against the
matching axis of the amplitude tensor (``np.tensordot``), which is how the
Hamiltonian is applied to registers that are too large to hold as a matrix.

.. code-block::

    scheme = LevelScheme(Model.FULL, 2)
    basis_index(scheme, "r", ["R", "R"])  # 47

    state = CompositeState.basis(scheme, "0", "AA")
    flip = SiteOperator.transition(Site.ensemble(0), scheme, "B", "A")
    apply_site_operator(state, flip)  # |0>|BA>

State snapshots are plain text, with a header that records the scheme::

    scheme=FULL d_c=3 d_e=4 N=2
    0 0.70710678118654757 0
    5 0 -0.70710678118654757
"""

import enum
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np

from rydgate.logger import get_logger

LOGGER = get_logger(__name__)

#: Control atom levels, in basis order
CONTROL_LEVELS: Tuple[str, ...] = ("0", "1", "r")

#: Ensemble levels of the four-level model, in basis order
FULL_LEVELS: Tuple[str, ...] = ("A", "B", "P", "R")

#: Ensemble levels of the effective three-level model, in basis order
EFFECTIVE_LEVELS: Tuple[str, ...] = ("A", "B", "R")

#: Default cap on the number of amplitudes in a register
MAX_DIMENSION: int = 2_000_000

#: Tolerance for the Hermitian flag of a site operator
HERMITIAN_TOL: float = 1e-12


class SchemeError(ValueError):
    """Invalid labels, dimensions or mismatched level schemes"""


class Model(str, enum.Enum):
    FULL = "FULL"
    EFFECTIVE = "EFFECTIVE"

    @classmethod
    def parse(cls, value: Union[str, "Model"]) -> "Model":
        if isinstance(value, Model):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise SchemeError(f"Unknown model: {value!r}")


@dataclass(frozen=True)
class LevelScheme:
    """
    The level structure of a register; it is hashable and cheap to compare,
    so states and operators carry it around to check compatibility.
    """

    #: FULL (A, B, P, R) or EFFECTIVE (A, B, R) ensemble atoms
    model: Model
    #: number of ensemble atoms
    n_atoms: int
    #: cap on the total number of amplitudes
    max_dimension: int = MAX_DIMENSION

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 0:
            raise SchemeError(f"n_atoms must be a nonnegative integer: {self.n_atoms}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        if self.dimension > self.max_dimension:
            raise SchemeError(
                f"{self.model.value} register with N={self.n_atoms} has "
                f"{self.dimension} amplitudes, above the cap of {self.max_dimension}"
            )

    @property
    def control_levels(self) -> Tuple[str, ...]:
        return CONTROL_LEVELS

    @property
    def ensemble_levels(self) -> Tuple[str, ...]:
        return FULL_LEVELS if self.model is Model.FULL else EFFECTIVE_LEVELS

    @property
    def d_c(self) -> int:
        return len(CONTROL_LEVELS)

    @property
    def d_e(self) -> int:
        return len(self.ensemble_levels)

    @property
    def dimension(self) -> int:
        return self.d_c * self.d_e ** self.n_atoms

    @property
    def shape(self) -> Tuple[int, ...]:
        """Shape of the amplitude tensor: control axis first, then one axis per atom"""
        return (self.d_c,) + (self.d_e,) * self.n_atoms

    def control_index(self, label: Union[str, int]) -> int:
        label = str(label).strip()
        try:
            return CONTROL_LEVELS.index(label)
        except ValueError:
            raise SchemeError(f"Unknown control level: {label!r}")

    def level_index(self, label: str) -> int:
        label = str(label).strip()
        try:
            return self.ensemble_levels.index(label)
        except ValueError:
            raise SchemeError(
                f"Unknown {self.model.value} ensemble level: {label!r}"
            )

    def has_level(self, label: str) -> bool:
        return label in self.ensemble_levels

    def header(self) -> str:
        return (
            f"scheme={self.model.value} d_c={self.d_c} d_e={self.d_e} N={self.n_atoms}"
        )

    @classmethod
    def from_header(cls, header: str) -> "LevelScheme":
        """
        Parse a snapshot header like ``scheme=FULL d_c=3 d_e=4 N=2``

        :raises SchemeError: if the header is malformed or inconsistent
        """
        try:
            fields = dict(item.split("=", 1) for item in header.split())
            scheme = cls(Model.parse(fields["scheme"]), int(fields["N"]))
            d_c = int(fields["d_c"])
            d_e = int(fields["d_e"])
        except (KeyError, ValueError) as err:
            raise SchemeError(f"Invalid snapshot header: {header!r}") from err
        if (d_c, d_e) != (scheme.d_c, scheme.d_e):
            raise SchemeError(f"Snapshot header dimensions disagree: {header!r}")
        return scheme


def parse_labels(
    scheme: LevelScheme, ensemble_labels: Union[str, Sequence[str]]
) -> Tuple[str, ...]:
    """
    Normalize ensemble labels, given as a string like ``"AAB"`` or a sequence
    of single labels, and validate them against the scheme.
    """
    labels = tuple(ensemble_labels)
    if len(labels) != scheme.n_atoms:
        raise SchemeError(
            f"Expected {scheme.n_atoms} ensemble labels, got {len(labels)}: {labels}"
        )
    for label in labels:
        scheme.level_index(label)
    return labels


def basis_index(
    scheme: LevelScheme,
    control_label: Union[str, int],
    ensemble_labels: Union[str, Sequence[str]],
) -> int:
    """
    Mixed-radix index of a basis state; the control level is the most
    significant digit and atom 0 is the next.

    :param scheme: the register level scheme
    :param control_label: one of ``0, 1, r``
    :param ensemble_labels: N labels, e.g. ``"AB"`` or ``["A", "B"]``
    :return: an index in ``range(scheme.dimension)``
    :raises SchemeError: for unknown labels or a label list of the wrong length
    """
    labels = parse_labels(scheme, ensemble_labels)
    digits = [scheme.control_index(control_label)]
    digits.extend(scheme.level_index(label) for label in labels)
    return int(np.ravel_multi_index(digits, scheme.shape))


def basis_labels(scheme: LevelScheme, index: int) -> Tuple[str, Tuple[str, ...]]:
    """The inverse of :py:func:`basis_index`"""
    if not 0 <= index < scheme.dimension:
        raise SchemeError(f"Basis index {index} outside [0, {scheme.dimension})")
    digits = np.unravel_index(int(index), scheme.shape)
    control = CONTROL_LEVELS[digits[0]]
    labels = tuple(scheme.ensemble_levels[d] for d in digits[1:])
    return control, labels


@dataclass(frozen=True)
class Site:
    """The control atom (``atom=None``) or ensemble atom ``k``"""

    atom: Optional[int] = None

    @classmethod
    def control(cls) -> "Site":
        return cls(None)

    @classmethod
    def ensemble(cls, k: int) -> "Site":
        if k < 0:
            raise SchemeError(f"Ensemble atom index must be nonnegative: {k}")
        return cls(int(k))

    @property
    def is_control(self) -> bool:
        return self.atom is None

    def axis(self, scheme: LevelScheme) -> int:
        """The axis of this site in the amplitude tensor"""
        if self.is_control:
            return 0
        if self.atom >= scheme.n_atoms:
            raise SchemeError(
                f"Ensemble atom {self.atom} outside a register with N={scheme.n_atoms}"
            )
        return 1 + self.atom

    def levels(self, scheme: LevelScheme) -> Tuple[str, ...]:
        return scheme.control_levels if self.is_control else scheme.ensemble_levels

    def level_index(self, scheme: LevelScheme, label: str) -> int:
        if self.is_control:
            return scheme.control_index(label)
        return scheme.level_index(label)

    def __str__(self):
        return "control" if self.is_control else f"atom[{self.atom}]"


@dataclass(frozen=True, eq=False)
class SiteOperator:
    """
    A single-site matrix in the site's level ordering; the ``hermitian``
    flag is verified on construction.
    """

    site: Site
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise SchemeError(f"Site operator must be square, got {matrix.shape}")
        if self.hermitian:
            scale = max(1.0, float(np.max(np.abs(matrix))))
            if not np.allclose(matrix, matrix.conj().T, rtol=0, atol=HERMITIAN_TOL * scale):
                raise SchemeError(f"Site operator on {self.site} is not Hermitian")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def check(self, scheme: LevelScheme) -> int:
        """
        :return: the tensor axis of the operator site
        :raises SchemeError: if the site or the matrix does not fit the scheme
        """
        axis = self.site.axis(scheme)
        expected = len(self.site.levels(scheme))
        if self.dimension != expected:
            raise SchemeError(
                f"Operator on {self.site} has dimension {self.dimension}, "
                f"the site has {expected} levels"
            )
        return axis

    @classmethod
    def transition(
        cls,
        site: Site,
        scheme: LevelScheme,
        to_label: str,
        from_label: str,
        coefficient: complex = 1.0,
    ) -> "SiteOperator":
        """``coefficient * |to><from|`` on a site"""
        d = len(site.levels(scheme))
        matrix = np.zeros((d, d), dtype=np.complex128)
        row, col = site.level_index(scheme, to_label), site.level_index(scheme, from_label)
        matrix[row, col] = coefficient
        return cls(site, matrix)

    @classmethod
    def projector(
        cls, site: Site, scheme: LevelScheme, label: str, coefficient: float = 1.0
    ) -> "SiteOperator":
        op = cls.transition(site, scheme, label, label, coefficient)
        return cls(site, op.matrix, hermitian=np.isreal(coefficient))


def apply_matrix(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    """
    Contract a single-site matrix with one axis of an amplitude tensor;
    the result has the same axis order as the input.
    """
    return np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)


@dataclass(frozen=True, eq=False)
class CompositeState:
    """
    An immutable amplitude vector over the control and ensemble product basis.
    """

    scheme: LevelScheme
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.size != self.scheme.dimension:
            raise SchemeError(
                f"State has {amplitudes.size} amplitudes, "
                f"the scheme needs {self.scheme.dimension}"
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def zeros(cls, scheme: LevelScheme) -> "CompositeState":
        return cls(scheme, np.zeros(scheme.dimension, dtype=np.complex128))

    @classmethod
    def basis(
        cls,
        scheme: LevelScheme,
        control_label: Union[str, int],
        ensemble_labels: Union[str, Sequence[str]],
        amplitude: complex = 1.0,
    ) -> "CompositeState":
        amplitudes = np.zeros(scheme.dimension, dtype=np.complex128)
        amplitudes[basis_index(scheme, control_label, ensemble_labels)] = amplitude
        return cls(scheme, amplitudes)

    @classmethod
    def product(
        cls,
        scheme: LevelScheme,
        control_amplitudes: Sequence[complex],
        atom_amplitudes: Sequence[Sequence[complex]],
    ) -> "CompositeState":
        """
        A product state from one amplitude vector per site.

        :param control_amplitudes: amplitudes on ``0, 1, r``
        :param atom_amplitudes: N vectors of amplitudes on the ensemble levels
        """
        factors = [np.asarray(control_amplitudes, dtype=np.complex128)]
        factors.extend(np.asarray(a, dtype=np.complex128) for a in atom_amplitudes)
        shape = tuple(f.size for f in factors)
        if shape != scheme.shape:
            raise SchemeError(f"Product factors have shape {shape}, expected {scheme.shape}")
        return cls(scheme, reduce(np.multiply.outer, factors).reshape(-1))

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.scheme.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "CompositeState":
        norm = self.norm()
        if norm == 0:
            raise SchemeError("Cannot normalize a zero state")
        return CompositeState(self.scheme, self.amplitudes / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def control_populations(self) -> Dict[str, float]:
        prob = self.probabilities().reshape(self.scheme.d_c, -1).sum(axis=1)
        return dict(zip(CONTROL_LEVELS, prob.tolist()))

    def level_populations(self) -> Dict[str, float]:
        """Ensemble level populations summed over atoms"""
        prob = self.probabilities().reshape(self.scheme.shape)
        totals = np.zeros(self.scheme.d_e)
        for k in range(self.scheme.n_atoms):
            other = tuple(a for a in range(prob.ndim) if a != 1 + k)
            totals += prob.sum(axis=other)
        return dict(zip(self.scheme.ensemble_levels, totals.tolist()))

    def _check_same(self, other: "CompositeState"):
        if not isinstance(other, CompositeState):
            raise TypeError(f"Expected a CompositeState, got {type(other).__name__}")
        if other.scheme != self.scheme:
            raise SchemeError(f"Scheme mismatch: {self.scheme} != {other.scheme}")

    def __add__(self, other: "CompositeState") -> "CompositeState":
        self._check_same(other)
        return CompositeState(self.scheme, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "CompositeState") -> "CompositeState":
        self._check_same(other)
        return CompositeState(self.scheme, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "CompositeState":
        return CompositeState(self.scheme, self.amplitudes * complex(scalar))

    __rmul__ = __mul__

    def dumps(self, threshold: float = 0.0) -> str:
        """
        Render a text snapshot, one ``index re im`` line per nonzero amplitude

        :param threshold: skip amplitudes with a modulus at or below this value
        """
        lines = [self.scheme.header()]
        (indices,) = np.nonzero(np.abs(self.amplitudes) > threshold)
        for index in indices:
            value = self.amplitudes[index]
            lines.append(
                f"{index} {format(value.real, '.17g')} {format(value.imag, '.17g')}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CompositeState":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise SchemeError("Empty snapshot")
        scheme = LevelScheme.from_header(lines[0])
        amplitudes = np.zeros(scheme.dimension, dtype=np.complex128)
        for line in lines[1:]:
            try:
                index, re, im = line.split()
                amplitudes[int(index)] = complex(float(re), float(im))
            except (ValueError, IndexError) as err:
                raise SchemeError(f"Invalid snapshot line: {line!r}") from err
        return cls(scheme, amplitudes)

    def dump(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.dumps())
        LOGGER.info("Wrote state snapshot: %s", path)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CompositeState":
        return cls.loads(Path(path).read_text())


def apply_site_operator(state: CompositeState, op: SiteOperator) -> CompositeState:
    """
    Apply ``op`` on its site and the identity elsewhere.

    :return: a new state; the input is untouched
    :raises SchemeError: if the operator does not fit the scheme
    """
    axis = op.check(state.scheme)
    result = apply_matrix(state.tensor, op.matrix, axis)
    return CompositeState(state.scheme, result.reshape(-1))


def site_mask(scheme: LevelScheme, site: Site, label: str) -> np.ndarray:
    """
    Boolean tensor (broadcastable to the scheme shape) that selects the basis
    states with ``label`` on ``site``.
    """
    axis = site.axis(scheme)
    levels = site.levels(scheme)
    selector = np.zeros(len(levels), dtype=bool)
    selector[site.level_index(scheme, label)] = True
    shape = [1] * len(scheme.shape)
    shape[axis] = len(levels)
    return selector.reshape(shape)


def apply_two_site_projector(
    state: CompositeState,
    site_a: Site,
    site_b: Site,
    level_a: str,
    level_b: str,
    coefficient: complex = 1.0,
) -> CompositeState:
    """
    ``coefficient * |a><a| ⊗ |b><b|`` on two distinct sites; amplitudes of the
    selected basis states are scaled, every other amplitude is zero.

    :raises SchemeError: for identical sites or unknown levels
    """
    if site_a == site_b:
        raise SchemeError(f"A two-site projector needs distinct sites, got {site_a} twice")
    scheme = state.scheme
    mask = site_mask(scheme, site_a, level_a) & site_mask(scheme, site_b, level_b)
    result = np.where(mask, state.tensor * coefficient, 0)
    return CompositeState(scheme, result.reshape(-1))


def overlap(a: CompositeState, b: CompositeState) -> complex:
    """``<a|b>``, conjugating ``a``"""
    if a.scheme != b.scheme:
        raise SchemeError(f"Scheme mismatch: {a.scheme} != {b.scheme}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def occupation_counts(scheme: LevelScheme, label: str) -> np.ndarray:
    """
    For every basis index, the number of ensemble atoms in level ``label``.
    """
    counts = np.zeros(scheme.shape, dtype=np.int64)
    for k in range(scheme.n_atoms):
        counts = counts + site_mask(scheme, Site.ensemble(k), label)
    return counts.reshape(-1)


def control_indicator(scheme: LevelScheme, label: str) -> np.ndarray:
    """For every basis index, 1 if the control atom is in ``label`` else 0"""
    mask = np.broadcast_to(site_mask(scheme, Site.control(), label), scheme.shape)
    return mask.reshape(-1).astype(np.int64)


def iter_basis(scheme: LevelScheme) -> Iterable[Tuple[int, str, Tuple[str, ...]]]:
    for index in range(scheme.dimension):
        control, labels = basis_labels(scheme, index)
        yield index, control, labels


def swap_labels(labels: Sequence[str]) -> List[str]:
    """Exchange ``A`` and ``B`` in a label sequence"""
    swap = {"A": "B", "B": "A"}
    return [swap.get(label, label) for label in labels]
