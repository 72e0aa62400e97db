"""
The [[5,1,3]] outer code: stabilizers, logical states, syndromes, the
syndrome-extraction circuit layouts and the correction look-up tables.

Data qubits are numbered 1..5 in circuit layouts and table contexts (matching
the stabilizer labels); PauliString positions are 0-based.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import numpy as np

from .channels import (
    DensityMatrix,
    PauliString,
    project_array,
)
from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

DATA_QUBITS = 5
ANCILLA = 5  # 0-based position of the ancilla after the data qubits
FLAG = 6

GENERATOR_LETTERS = ('XZZXI', 'IXZZX', 'XIXZZ', 'ZXIXZ')
LOGICAL_X = PauliString('XXXXX')
LOGICAL_Z = PauliString('ZZZZZ')

_LETTER_RANK = {'X': 0, 'Y': 1, 'Z': 2}


@dataclass(frozen=True)
class StabilizerSet:
    generators: tuple[PauliString, ...]

    def __post_init__(self):
        for a, b in itertools.combinations(self.generators, 2):
            if not a.commutes_with(b):
                raise InvalidArgumentError(f'Generators {a} and {b} do not commute')
        if _gf2_rank([g.x_bits + g.z_bits for g in self.generators]) != len(self.generators):
            raise InvalidArgumentError('Generators are not independent')

    @classmethod
    def five_qubit(cls) -> 'StabilizerSet':
        return cls(tuple(PauliString(letters) for letters in GENERATOR_LETTERS))

    def group(self) -> tuple[PauliString, ...]:
        """All 2^k elements of the stabilizer group (phases ignored)."""
        elements = []
        for mask in range(2 ** len(self.generators)):
            element = PauliString.identity(DATA_QUBITS)
            for k, generator in enumerate(self.generators):
                if mask >> k & 1:
                    element = element * generator
            elements.append(element)
        return tuple(elements)


def _gf2_rank(rows: Iterable[Iterable[int]]) -> int:
    matrix = [list(row) for row in rows]
    rank, columns = 0, len(matrix[0]) if matrix else 0
    for column in range(columns):
        pivot = next((r for r in range(rank, len(matrix)) if matrix[r][column]), None)
        if pivot is None:
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        for r in range(len(matrix)):
            if r != rank and matrix[r][column]:
                matrix[r] = [a ^ b for a, b in zip(matrix[r], matrix[rank])]
        rank += 1
    return rank


STABILIZERS = StabilizerSet.five_qubit()


@dataclass(frozen=True, order=True)
class Syndrome:
    """Outcomes (+1/-1) of g1..g4; +1 means no trigger."""
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != len(GENERATOR_LETTERS) or set(bits) - {1, -1}:
            raise InvalidArgumentError(f'Syndrome must be four entries of +1/-1, got {self.bits!r}')
        object.__setattr__(self, 'bits', bits)

    @classmethod
    def trivial(cls) -> 'Syndrome':
        return cls((1, 1, 1, 1))

    @classmethod
    def parse(cls, text: str) -> 'Syndrome':
        """Parse '(+,-,+,+)' or '+-++'."""
        signs = [c for c in text if c in '+-']
        return cls(tuple(1 if c == '+' else -1 for c in signs))

    @classmethod
    def all(cls) -> tuple['Syndrome', ...]:
        return tuple(cls(bits) for bits in itertools.product((1, -1), repeat=len(GENERATOR_LETTERS)))

    @property
    def is_trivial(self) -> bool:
        return all(b == 1 for b in self.bits)

    def __str__(self):
        return '(' + ','.join('+' if b == 1 else '-' for b in self.bits) + ')'


def syndrome_of(error: PauliString) -> Syndrome:
    if error.qubit_count != DATA_QUBITS:
        raise InvalidArgumentError(f'Expected a 5-qubit Pauli, got {error}')
    return Syndrome(tuple(1 if error.commutes_with(g) else -1 for g in STABILIZERS.generators))


def correction_priority(pauli: PauliString) -> tuple:
    """Lowest weight, then lowest qubit index, then X < Y < Z."""
    return (pauli.weight, tuple((i, _LETTER_RANK[pauli.letters[i]]) for i in pauli.support))


def reduce_by_stabilizers(error: PauliString) -> PauliString:
    """Preferred representative of error * (stabilizer group)."""
    return min((error * s for s in STABILIZERS.group()), key=correction_priority)


def is_stabilizer(pauli: PauliString) -> bool:
    return pauli in STABILIZERS.group()


# ---------------------------------------------------------------------------
# Logical states
# ---------------------------------------------------------------------------

def _codespace_projector() -> np.ndarray:
    projector = np.eye(2 ** DATA_QUBITS, dtype=complex)
    for generator in STABILIZERS.generators:
        projector = projector @ (np.eye(2 ** DATA_QUBITS) + generator.matrix()) / 2
    return projector


@lru_cache(maxsize=1)
def logical_vectors() -> tuple[np.ndarray, np.ndarray]:
    """(|0_L>, |1_L>) as state vectors with Z_L = ZZZZZ and |1_L> = X_L |0_L>."""
    zero = _codespace_projector()[:, 0]
    zero = zero / np.linalg.norm(zero)
    one = LOGICAL_X.gate.apply_vector(zero)
    zero.setflags(write=False)
    one.setflags(write=False)
    return zero, one


def logical_states() -> tuple[DensityMatrix, DensityMatrix]:
    zero, one = logical_vectors()
    return DensityMatrix.from_vector(zero), DensityMatrix.from_vector(one)


def encode_vector(alpha: complex, beta: complex) -> np.ndarray:
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise InvalidArgumentError(f'Amplitudes are not normalised: |{alpha}|^2 + |{beta}|^2 != 1')
    zero, one = logical_vectors()
    return alpha * zero + beta * one


def encode(alpha: complex, beta: complex) -> DensityMatrix:
    """alpha|0_L> + beta|1_L>."""
    return DensityMatrix.from_vector(encode_vector(alpha, beta))


def pauli_basis_logical_states() -> dict[str, DensityMatrix]:
    """The six logical Pauli eigenstates, keyed '0', '1', '+', '-', '+i', '-i'."""
    r = 1 / np.sqrt(2)
    amplitudes = {
        '0': (1, 0), '1': (0, 1),
        '+': (r, r), '-': (r, -r),
        '+i': (r, 1j * r), '-i': (r, -1j * r),
    }
    return {label: encode(a, b) for label, (a, b) in amplitudes.items()}


def syndrome_projector_array(array: np.ndarray, syndrome: Syndrome) -> np.ndarray:
    """Project a 5-qubit operator onto the eigenspace labelled by ``syndrome``."""
    for generator, sign in zip(STABILIZERS.generators, syndrome.bits):
        array = project_array(array, generator, sign)
    return array


def ideal_recovery_array(array: np.ndarray) -> np.ndarray:
    """Noiseless syndrome measurement followed by the weight-1 correction."""
    table = build_weight1_table()
    recovered = np.zeros_like(array)
    for syndrome in Syndrome.all():
        branch = syndrome_projector_array(array, syndrome)
        recovered += table.correction_for(syndrome).gate.conjugate(branch)
    return recovered


def logical_fidelity(rho: DensityMatrix, target: DensityMatrix) -> float:
    """Fidelity with ``target`` after ideal weight-1 recovery."""
    return DensityMatrix(ideal_recovery_array(rho.entries)).overlap(target)


# ---------------------------------------------------------------------------
# Syndrome-extraction circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gate:
    """Two-qubit gate controlled by the ancilla.

    ``data_qubit`` is 1-based; ``None`` marks the ancilla-to-flag CNOT.
    """
    letter: str
    data_qubit: Optional[int] = None

    @property
    def is_flag(self) -> bool:
        return self.data_qubit is None

    @property
    def target(self) -> int:
        """0-based target position in the simulated register."""
        return FLAG if self.is_flag else self.data_qubit - 1

    def is_local(self, local_qubit: int) -> bool:
        return self.is_flag or self.data_qubit == local_qubit


@dataclass(frozen=True)
class SubCircuit:
    """Measurement of generator g_k with ancilla in |+> (and flag in |0> when flagged)."""
    index: int
    stabilizer: PauliString
    gates: tuple[Gate, ...]
    flagged: bool

    def local_gate_count(self, local_qubit: int = 1) -> int:
        return sum(1 for gate in self.gates if gate.is_local(local_qubit))

    def teleported_gate_count(self, local_qubit: int = 1) -> int:
        return len(self.gates) - self.local_gate_count(local_qubit)


def syndrome_circuit(k: int, flagged: bool) -> SubCircuit:
    """Controlled-Paulis in ascending qubit order; flag CNOTs after the first and before the last."""
    if k not in (1, 2, 3, 4):
        raise InvalidArgumentError(f'Sub-circuit index must be 1..4, got {k}')
    stabilizer = STABILIZERS.generators[k - 1]
    gates = [Gate(letter, qubit + 1) for qubit, letter in enumerate(stabilizer.letters) if letter != 'I']
    if flagged:
        gates = [gates[0], Gate('X'), *gates[1:-1], Gate('X'), gates[-1]]
    return SubCircuit(k, stabilizer, tuple(gates), flagged)


FLAGGED_CIRCUITS = tuple(syndrome_circuit(k, True) for k in (1, 2, 3, 4))
UNFLAGGED_CIRCUITS = tuple(syndrome_circuit(k, False) for k in (1, 2, 3, 4))


def _propagate(x: list[int], z: list[int], gate: Gate):
    """Heisenberg update of a Pauli error through one ancilla-controlled gate."""
    c, t = ANCILLA, gate.target
    if gate.letter == 'X':
        x[t] ^= x[c]
        z[c] ^= z[t]
    else:
        z[t] ^= x[c]
        z[c] ^= x[t]


@dataclass(frozen=True)
class FaultOutcome:
    position: int
    fault: PauliString
    data_error: PauliString
    flag_raised: bool
    ancilla_flipped: bool


def enumerate_single_faults(circuit: SubCircuit) -> list[FaultOutcome]:
    """
    Every non-identity two-qubit Pauli after every gate of ``circuit``,
    propagated to the end of the sub-circuit from an error-free codeword.
    """
    outcomes = []
    for position, gate in enumerate(circuit.gates):
        for letters in itertools.product('IXYZ', repeat=2):
            if letters == ('I', 'I'):
                continue
            fault = ['I'] * (FLAG + 1)
            fault[ANCILLA], fault[gate.target] = letters
            pauli = PauliString(''.join(fault))
            x, z = list(pauli.x_bits), list(pauli.z_bits)
            for later in circuit.gates[position + 1:]:
                _propagate(x, z, later)
            outcomes.append(FaultOutcome(
                position=position,
                fault=pauli,
                data_error=PauliString.from_bits(x[:DATA_QUBITS], z[:DATA_QUBITS]),
                flag_raised=bool(x[FLAG]),
                ancilla_flipped=bool(z[ANCILLA]),
            ))
    return outcomes


# ---------------------------------------------------------------------------
# Correction tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionTable:
    context: str
    entries: Mapping[Syndrome, PauliString]

    def __post_init__(self):
        object.__setattr__(self, 'entries', MappingProxyType(dict(self.entries)))

    def correction_for(self, syndrome: Syndrome) -> PauliString:
        try:
            return self.entries[syndrome]
        except KeyError:
            raise InvalidArgumentError(f'No correction for {syndrome} in {self.context} table') from None

    @property
    def max_weight(self) -> int:
        return max(p.weight for p in self.entries.values())

    def render(self) -> list[str]:
        lines = [f'[{self.context}]']
        for syndrome in sorted(self.entries, reverse=True):
            lines.append(f'  {syndrome}  ->  {self.entries[syndrome]}')
        return lines


def _choose(candidates: dict[Syndrome, PauliString], error: PauliString):
    syndrome = syndrome_of(error)
    current = candidates.get(syndrome)
    if current is None or correction_priority(error) < correction_priority(current):
        candidates[syndrome] = error


def single_qubit_errors() -> list[PauliString]:
    return [
        PauliString.single(DATA_QUBITS, qubit, letter)
        for qubit in range(DATA_QUBITS)
        for letter in 'XYZ'
    ]


@lru_cache(maxsize=1)
def build_weight1_table() -> CorrectionTable:
    entries = {Syndrome.trivial(): PauliString.identity(DATA_QUBITS)}
    for error in single_qubit_errors():
        syndrome = syndrome_of(error)
        if syndrome in entries:
            raise InvalidArgumentError(f'{error} and {entries[syndrome]} share syndrome {syndrome}')
        entries[syndrome] = error
    return CorrectionTable('weight1', entries)


@lru_cache(maxsize=4)
def build_flagged_table(k: int) -> CorrectionTable:
    """Weight-<=2 corrections after the flag of sub-circuit ``k`` was raised."""
    if k not in (1, 2, 3, 4):
        raise InvalidArgumentError(f'Sub-circuit index must be 1..4, got {k}')
    circuit = FLAGGED_CIRCUITS[k - 1]
    candidates: dict[Syndrome, PauliString] = {Syndrome.trivial(): PauliString.identity(DATA_QUBITS)}
    for outcome in enumerate_single_faults(circuit):
        if not outcome.flag_raised:
            continue
        error = reduce_by_stabilizers(outcome.data_error)
        syndrome = syndrome_of(error)
        current = candidates.get(syndrome)
        if current is not None and not is_stabilizer(current * error):
            logger.warning(
                'flagged(%d): %s and %s share syndrome %s but differ logically', k, current, error, syndrome,
            )
        _choose(candidates, error)
    weight1 = build_weight1_table()
    for syndrome, correction in weight1.entries.items():
        candidates.setdefault(syndrome, correction)
    return CorrectionTable(f'flagged({k})', candidates)


@lru_cache(maxsize=5)
def build_erasure_table(lost: int) -> CorrectionTable:
    """
    Corrections after qubit ``lost`` (1-based) was re-initialised to |0>.

    Syndromes reachable from the erasure alone map to a Pauli on the lost qubit;
    the other twelve assume one extra single-qubit error on a surviving qubit.
    """
    if lost not in range(1, DATA_QUBITS + 1):
        raise InvalidArgumentError(f'Lost qubit must be 1..5, got {lost}')
    position = lost - 1
    candidates: dict[Syndrome, PauliString] = {}
    for on_lost in 'IXYZ':
        base = PauliString.single(DATA_QUBITS, position, on_lost)
        _choose(candidates, base)
        for other in single_qubit_errors():
            if other.support != (position,):
                _choose(candidates, base * other)
    return CorrectionTable(f'erasure({lost})', candidates)


def erasure_projection_syndromes(lost: int) -> dict[Syndrome, PauliString]:
    """The four syndromes a pure erasure of ``lost`` can produce."""
    position = lost - 1
    return {
        syndrome_of(PauliString.single(DATA_QUBITS, position, letter)): PauliString.single(DATA_QUBITS, position, letter)
        for letter in 'IXYZ'
    }


def all_tables() -> list[CorrectionTable]:
    return (
        [build_weight1_table()]
        + [build_flagged_table(k) for k in (1, 2, 3, 4)]
        + [build_erasure_table(lost) for lost in range(1, DATA_QUBITS + 1)]
    )
