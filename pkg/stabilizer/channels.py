"""
Density matrices, Pauli strings and depolarizing noise on up to seven qubits.

Qubit 0 is the most significant bit of a basis index. The ``*_array`` helpers
work on raw numpy arrays with arbitrary leading batch dimensions and do no
renormalisation, so they stay linear; the public channel functions wrap them
and return validated ``DensityMatrix`` objects.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .exceptions import InternalConsistencyError, InvalidArgumentError

logger = logging.getLogger(__name__)

MAX_QUBITS = 7
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9

PAULI_LETTERS = 'IXYZ'


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, global phase ignored."""
    letters: str

    def __post_init__(self):
        letters = str(self.letters).upper()
        if not letters or set(letters) - set(PAULI_LETTERS):
            raise InvalidArgumentError(f'Invalid Pauli string: {self.letters!r}')
        if len(letters) > MAX_QUBITS:
            raise InvalidArgumentError(f'At most {MAX_QUBITS} qubits are supported, got {len(letters)}')
        object.__setattr__(self, 'letters', letters)

    @classmethod
    def identity(cls, qubit_count: int) -> 'PauliString':
        return cls('I' * qubit_count)

    @classmethod
    def single(cls, qubit_count: int, qubit: int, letter: str) -> 'PauliString':
        """Weight-1 Pauli ``letter`` on 0-based ``qubit``."""
        if not 0 <= qubit < qubit_count:
            raise InvalidArgumentError(f'Qubit {qubit} out of range for {qubit_count} qubits')
        letters = ['I'] * qubit_count
        letters[qubit] = letter
        return cls(''.join(letters))

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int]) -> 'PauliString':
        table = {(0, 0): 'I', (1, 0): 'X', (1, 1): 'Y', (0, 1): 'Z'}
        return cls(''.join(table[(int(x) & 1, int(z) & 1)] for x, z in zip(x_bits, z_bits)))

    @property
    def qubit_count(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(1 for letter in self.letters if letter != 'I')

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, letter in enumerate(self.letters) if letter != 'I')

    @property
    def x_bits(self) -> tuple[int, ...]:
        return tuple(int(letter in 'XY') for letter in self.letters)

    @property
    def z_bits(self) -> tuple[int, ...]:
        return tuple(int(letter in 'ZY') for letter in self.letters)

    def commutes_with(self, other: 'PauliString') -> bool:
        _check_same_size(self.qubit_count, other.qubit_count)
        overlap = sum(
            (xa & zb) ^ (za & xb)
            for xa, za, xb, zb in zip(self.x_bits, self.z_bits, other.x_bits, other.z_bits)
        )
        return overlap % 2 == 0

    def __mul__(self, other: 'PauliString') -> 'PauliString':
        _check_same_size(self.qubit_count, other.qubit_count)
        return PauliString.from_bits(
            [a ^ b for a, b in zip(self.x_bits, other.x_bits)],
            [a ^ b for a, b in zip(self.z_bits, other.z_bits)],
        )

    def embed(self, qubit_count: int) -> 'PauliString':
        """Pad with identities on the trailing qubits."""
        if qubit_count < self.qubit_count:
            raise InvalidArgumentError('Cannot embed into fewer qubits')
        return PauliString(self.letters + 'I' * (qubit_count - self.qubit_count))

    @cached_property
    def gate(self) -> 'MonomialGate':
        return MonomialGate.from_pauli(self)

    def matrix(self) -> np.ndarray:
        return self.gate.matrix()

    def __str__(self):
        return self.letters


@dataclass(frozen=True, eq=False)
class MonomialGate:
    """
    Unitary with a single nonzero entry per column: U|j> = phases[j] |perm[j]>.

    Paulis and controlled-Paulis are of this form, so conjugation is an index
    gather instead of a matrix product.
    """
    perm: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_pauli(cls, pauli: PauliString) -> 'MonomialGate':
        n = pauli.qubit_count
        index = np.arange(2 ** n)
        perm = index.copy()
        phases = np.ones(2 ** n, dtype=complex)
        for qubit, letter in enumerate(pauli.letters):
            shift = n - 1 - qubit
            bits = (index >> shift) & 1
            if letter in 'XY':
                perm ^= 1 << shift
            if letter in 'ZY':
                phases *= 1 - 2 * bits
            if letter == 'Y':
                phases *= 1j
        return cls(perm, phases)

    @classmethod
    def controlled_pauli(cls, qubit_count: int, control: int, target: int, letter: str) -> 'MonomialGate':
        """Apply ``letter`` on ``target`` when ``control`` is |1>."""
        if control == target:
            raise InvalidArgumentError('Control and target must differ')
        index = np.arange(2 ** qubit_count)
        control_on = ((index >> (qubit_count - 1 - control)) & 1).astype(bool)
        target_gate = cls.from_pauli(PauliString.single(qubit_count, target, letter))
        perm = np.where(control_on, target_gate.perm, index)
        phases = np.where(control_on, target_gate.phases, 1.0 + 0j)
        return cls(perm, phases)

    def conjugate(self, array: np.ndarray) -> np.ndarray:
        """U A U^dagger for every matrix in the leading batch dimensions."""
        out = np.empty_like(array)
        weights = self.phases[:, None] * self.phases.conj()[None, :]
        out[..., self.perm[:, None], self.perm[None, :]] = array * weights
        return out

    def left(self, array: np.ndarray) -> np.ndarray:
        """U A."""
        out = np.empty_like(array)
        out[..., self.perm, :] = array * self.phases[:, None]
        return out

    def right_dagger(self, array: np.ndarray) -> np.ndarray:
        """A U^dagger."""
        out = np.empty_like(array)
        out[..., :, self.perm] = array * self.phases.conj()[None, :]
        return out

    def apply_vector(self, vector: np.ndarray) -> np.ndarray:
        out = np.empty_like(vector)
        out[..., self.perm] = vector * self.phases
        return out

    def matrix(self) -> np.ndarray:
        dim = self.perm.size
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[self.perm, np.arange(dim)] = self.phases
        return matrix


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator on ``qubit_count`` qubits."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgumentError(f'Density matrix must be square, got shape {entries.shape}')
        qubits = int(round(np.log2(entries.shape[0])))
        if 2 ** qubits != entries.shape[0] or not 1 <= qubits <= MAX_QUBITS:
            raise InvalidArgumentError(f'Dimension {entries.shape[0]} is not 2^q with 1 <= q <= {MAX_QUBITS}')
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def from_vector(cls, vector) -> 'DensityMatrix':
        vector = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise InvalidArgumentError('Zero state vector')
        vector = vector / norm
        return cls(np.outer(vector, vector.conj()))

    @classmethod
    def basis(cls, qubit_count: int, index: int = 0) -> 'DensityMatrix':
        entries = np.zeros((2 ** qubit_count, 2 ** qubit_count), dtype=complex)
        entries[index, index] = 1.0
        return cls(entries)

    @classmethod
    def maximally_mixed(cls, qubit_count: int) -> 'DensityMatrix':
        return cls(np.eye(2 ** qubit_count, dtype=complex) / 2 ** qubit_count)

    @property
    def qubit_count(self) -> int:
        return int(round(np.log2(self.entries.shape[0])))

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def check(self) -> 'DensityMatrix':
        """Raise InternalConsistencyError unless all invariants hold."""
        drift = np.max(np.abs(self.entries - self.entries.conj().T))
        if drift > HERMITIAN_TOL:
            raise InternalConsistencyError(f'State not Hermitian (max drift {drift:.3e})')
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise InternalConsistencyError(f'State trace {self.trace!r} differs from 1')
        smallest = float(np.min(np.linalg.eigvalsh(self.entries)))
        if smallest < EIGENVALUE_FLOOR:
            raise InternalConsistencyError(f'State has negative eigenvalue {smallest:.3e}')
        return self

    def overlap(self, other: 'DensityMatrix') -> float:
        """Re Tr(rho sigma); the fidelity when either state is pure."""
        _check_same_size(self.qubit_count, other.qubit_count)
        return float(np.real(np.vdot(other.entries, self.entries)))

    def tensor(self, other: 'DensityMatrix') -> 'DensityMatrix':
        return DensityMatrix(np.kron(self.entries, other.entries))

    def allclose(self, other: 'DensityMatrix', atol: float = 1e-10) -> bool:
        return self.qubit_count == other.qubit_count and np.allclose(self.entries, other.entries, atol=atol, rtol=0)


@dataclass(frozen=True)
class NoiseParams:
    """
    Re-encoding error ``epsilon_r`` and single-operation error ``epsilon_0``.

    ``epsilon_0`` defaults to exactly ``epsilon_r / 3``.
    """
    epsilon_r: float
    epsilon_0: Optional[float] = None

    def __post_init__(self):
        epsilon_0 = self.epsilon_r / 3 if self.epsilon_0 is None else self.epsilon_0
        object.__setattr__(self, 'epsilon_r', float(self.epsilon_r))
        object.__setattr__(self, 'epsilon_0', float(epsilon_0))
        if not 0.0 <= self.epsilon_0 <= self.epsilon_r <= 1.0:
            raise InvalidArgumentError(
                f'Need 0 <= epsilon_0 <= epsilon_r <= 1, got epsilon_0={self.epsilon_0}, epsilon_r={self.epsilon_r}'
            )

    @property
    def is_noiseless(self) -> bool:
        return self.epsilon_r == 0.0 and self.epsilon_0 == 0.0


# ---------------------------------------------------------------------------
# Raw array helpers
# ---------------------------------------------------------------------------

def qubit_count_of(array: np.ndarray) -> int:
    return int(round(np.log2(array.shape[-1])))


def _split_qubit(array: np.ndarray, qubit: int) -> np.ndarray:
    n = qubit_count_of(array)
    left, right = 2 ** qubit, 2 ** (n - qubit - 1)
    return array.reshape(array.shape[:-2] + (left, 2, right, left, 2, right))


def trace_replace_array(array: np.ndarray, qubit: int) -> np.ndarray:
    """I_q (x) Tr_q(A), unnormalised."""
    split = _split_qubit(array, qubit)
    reduced = split[..., :, 0, :, :, 0, :] + split[..., :, 1, :, :, 1, :]
    out = np.zeros_like(split)
    out[..., :, 0, :, :, 0, :] = reduced
    out[..., :, 1, :, :, 1, :] = reduced
    return out.reshape(array.shape)


def reset_qubit_array(array: np.ndarray, qubit: int) -> np.ndarray:
    """|0><0|_q (x) Tr_q(A)."""
    split = _split_qubit(array, qubit)
    out = np.zeros_like(split)
    out[..., :, 0, :, :, 0, :] = split[..., :, 0, :, :, 0, :] + split[..., :, 1, :, :, 1, :]
    return out.reshape(array.shape)


def depolarize_array(array: np.ndarray, qubits: Sequence[int], eps: float) -> np.ndarray:
    """
    (1-eps) A + eps/(4^k-1) sum_{P != I} P A P on the k listed qubits.

    Uses sum_{P != I} P A P = 2^k I (x) Tr(A) - A.
    """
    if eps == 0.0:
        return array
    k = len(qubits)
    others = 4 ** k - 1
    twirled = array
    for qubit in qubits:
        twirled = trace_replace_array(twirled, qubit)
    return (1.0 - eps - eps / others) * array + (eps * 2 ** k / others) * twirled


def project_array(array: np.ndarray, pauli: PauliString, sign: int) -> np.ndarray:
    """Pi A Pi with Pi = (I + sign P)/2."""
    gate = pauli.gate
    left = gate.left(array)
    return 0.25 * (array + sign * left + sign * gate.right_dagger(array) + gate.right_dagger(left))


def append_state_array(array: np.ndarray, state: np.ndarray) -> np.ndarray:
    """A (x) state, with ``state`` placed on new trailing qubits."""
    dim, extra = array.shape[-1], state.shape[-1]
    joined = np.einsum('...ij,kl->...ikjl', array, state)
    return joined.reshape(array.shape[:-2] + (dim * extra, dim * extra))


def trace_out_trailing_array(array: np.ndarray, count: int) -> np.ndarray:
    """Partial trace over the last ``count`` qubits."""
    extra = 2 ** count
    dim = array.shape[-1] // extra
    split = array.reshape(array.shape[:-2] + (dim, extra, dim, extra))
    return np.einsum('...iaja->...ij', split)


def trace_array(array: np.ndarray) -> np.ndarray:
    return np.real(np.trace(array, axis1=-2, axis2=-1))


def _finalize(array: np.ndarray) -> DensityMatrix:
    symmetric = 0.5 * (array + array.conj().T)
    total = np.real(np.trace(symmetric))
    if total <= 0:
        raise InternalConsistencyError(f'State has non-positive trace {total!r}')
    return DensityMatrix(symmetric / total).check()


def _check_same_size(a: int, b: int):
    if a != b:
        raise InvalidArgumentError(f'Qubit count mismatch: {a} != {b}')


def _check_probability(value: float, name: str = 'eps'):
    if not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f'{name} must lie in [0, 1], got {value!r}')


def _check_qubit(rho: DensityMatrix, qubit: int):
    if not 0 <= qubit < rho.qubit_count:
        raise InvalidArgumentError(f'Qubit {qubit} out of range for a {rho.qubit_count}-qubit state')


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

def depolarize_single(rho: DensityMatrix, qubit: int, eps: float) -> DensityMatrix:
    """Single-qubit depolarizing channel of error probability ``eps`` on ``qubit``."""
    _check_probability(eps)
    _check_qubit(rho, qubit)
    return _finalize(depolarize_array(rho.entries, (qubit,), eps))


def depolarize_two(rho: DensityMatrix, qubits: Sequence[int], eps: float) -> DensityMatrix:
    """Two-qubit depolarizing channel over the 15 non-identity Paulis on ``qubits``."""
    _check_probability(eps)
    if len(qubits) != 2 or qubits[0] == qubits[1]:
        raise InvalidArgumentError(f'Need two distinct qubits, got {tuple(qubits)}')
    for qubit in qubits:
        _check_qubit(rho, qubit)
    return _finalize(depolarize_array(rho.entries, tuple(qubits), eps))


def pauli_apply(rho: DensityMatrix, pauli: PauliString) -> DensityMatrix:
    """P rho P^dagger."""
    _check_same_size(rho.qubit_count, pauli.qubit_count)
    return _finalize(pauli.gate.conjugate(rho.entries))


def transmission_error(noise: NoiseParams, n: int) -> float:
    """Error accumulated over ``n`` links: 1 - (1-eps_r)^n (1-eps_0)."""
    if n < 1:
        raise InvalidArgumentError(f'Link count must be >= 1, got {n}')
    return 1.0 - (1.0 - noise.epsilon_r) ** n * (1.0 - noise.epsilon_0)


def epsilon_from_p(p: float) -> float:
    """Depolarizing error probability for the channel p*rho + (1-p) I/2."""
    _check_probability(p, 'p')
    return 0.75 * (1.0 - p)


def p_from_epsilon(eps: float) -> float:
    if not 0.0 <= eps <= 0.75:
        raise InvalidArgumentError(f'eps must lie in [0, 3/4], got {eps!r}')
    return 1.0 - 4.0 * eps / 3.0
