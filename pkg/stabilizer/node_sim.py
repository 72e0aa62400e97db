"""
Exact density-matrix simulation of the TYPE II node channel.

The register holds the five data qubits followed by the ancilla and, during
flagged sub-circuits, the flag. Branches are carried as unnormalised arrays so
the whole protocol is a linear map; trace of a branch is its probability.
"""
import logging
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Protocol

import numpy as np

from .channels import (
    DensityMatrix,
    MonomialGate,
    NoiseParams,
    PauliString,
    _finalize,
    append_state_array,
    depolarize_array,
    project_array,
    reset_qubit_array,
    trace_array,
    trace_out_trailing_array,
    transmission_error,
)
from .exceptions import DegenerateRecursionError, InternalConsistencyError, InvalidArgumentError
from .five_qubit import (
    ANCILLA,
    DATA_QUBITS,
    FLAG,
    FLAGGED_CIRCUITS,
    UNFLAGGED_CIRCUITS,
    CorrectionTable,
    Gate,
    SubCircuit,
    Syndrome,
    build_erasure_table,
    build_flagged_table,
    build_weight1_table,
    logical_states,
)

logger = logging.getLogger(__name__)

FLAGGED_QUBITS = DATA_QUBITS + 2
UNFLAGGED_QUBITS = DATA_QUBITS + 1
BRANCH_PROBABILITY_TOL = 1e-9
SUPEROPERATOR_CHUNK = 64

_PLUS = np.full((2, 2), 0.5, dtype=complex)
_ZERO = np.array([[1, 0], [0, 0]], dtype=complex)
_PLUS_ZERO = np.kron(_PLUS, _ZERO)

_ANCILLA_X_FLAGGED = PauliString.single(FLAGGED_QUBITS, ANCILLA, 'X')
_FLAG_Z = PauliString.single(FLAGGED_QUBITS, FLAG, 'Z')
_ANCILLA_X_UNFLAGGED = PauliString.single(UNFLAGGED_QUBITS, ANCILLA, 'X')


@dataclass(frozen=True)
class NodeChannelParams:
    n: int
    noise: NoiseParams
    local_qubit: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgumentError(f'Link count n must be >= 1, got {self.n}')
        if self.local_qubit not in range(1, DATA_QUBITS + 1):
            raise InvalidArgumentError(f'local_qubit must be 1..5, got {self.local_qubit}')

    @property
    def transmission_error(self) -> float:
        return transmission_error(self.noise, self.n)

    def gate_error(self, gate: Gate) -> float:
        """eps_0 for local gates, 3*eps_0 for teleported ones."""
        eps0 = self.noise.epsilon_0
        return eps0 if gate.is_local(self.local_qubit) else min(1.0, 3.0 * eps0)


@dataclass(frozen=True)
class GateLocation:
    flagged: bool
    subcircuit: int
    position: int


class GateNoise(Protocol):
    def __call__(self, array: np.ndarray, location: GateLocation, gate: Gate, qubits: tuple[int, int]) -> np.ndarray:
        ...


@dataclass(frozen=True)
class DepolarizingGateNoise:
    """Two-qubit depolarizing noise after every ancilla gate."""
    params: NodeChannelParams

    def __call__(self, array, location, gate, qubits):
        return depolarize_array(array, qubits, self.params.gate_error(gate))


@dataclass(frozen=True)
class FaultInjection:
    """A single two-qubit Pauli (ancilla letter, target letter) after one gate."""
    location: GateLocation
    letters: str

    def __call__(self, array, location, gate, qubits):
        if location != self.location:
            return array
        size = FLAGGED_QUBITS if location.flagged else UNFLAGGED_QUBITS
        fault = ['I'] * size
        fault[qubits[0]], fault[qubits[1]] = self.letters
        return PauliString(''.join(fault)).gate.conjugate(array)


@dataclass(frozen=True, eq=False)
class BranchRecord:
    probability: float
    state: Optional[DensityMatrix]
    syndrome_history: tuple[tuple[int, int], ...]
    correction: PauliString
    syndrome: Optional[Syndrome] = None
    exit_subcircuit: Optional[int] = None


@dataclass(frozen=True)
class ChannelSummary:
    n: int
    noise: NoiseParams
    alpha1: float
    alpha2: float
    eps_loss: float
    eps_loss_per_position: tuple[float, ...] = field(default=())
    local_qubit: int = 1

    @property
    def zeta_squared(self) -> float:
        return 4.0 * self.alpha2 - 3.0 * self.alpha1 ** 2


@lru_cache(maxsize=None)
def _gate_monomial(qubit_count: int, gate: Gate) -> MonomialGate:
    return MonomialGate.controlled_pauli(qubit_count, ANCILLA, gate.target, gate.letter)


@dataclass
class _Exit:
    """Data-qubit branch that left the flagged sequence and awaits the unflagged circuit."""
    history: tuple[tuple[int, int], ...]
    table: Optional[CorrectionTable]
    array: np.ndarray
    subcircuit: Optional[int]


class ProtocolRunner:
    """
    Runs the flag-based fault-tolerant syndrome extraction on batches of
    5-qubit operators.

    Sub-circuit k yields (flag F, ancilla A). F=+1, A=+1 continues; F=+1, A=-1
    switches to the unflagged circuit and the weight-1 table; F=-1 switches to
    the unflagged circuit and the flagged(k) table.
    """

    def __init__(self, params: NodeChannelParams, noise: Optional[GateNoise] = None):
        self.params = params
        self.noise = noise if noise is not None else DepolarizingGateNoise(params)
        self.weight1 = build_weight1_table()
        self.flagged_tables = {k: build_flagged_table(k) for k in (1, 2, 3, 4)}

    def _run_gates(self, array: np.ndarray, circuit: SubCircuit, qubit_count: int) -> np.ndarray:
        for position, gate in enumerate(circuit.gates):
            array = _gate_monomial(qubit_count, gate).conjugate(array)
            location = GateLocation(circuit.flagged, circuit.index, position)
            array = self.noise(array, location, gate, (ANCILLA, gate.target))
        return array

    def flagged_exits(self, data: np.ndarray) -> list[_Exit]:
        exits = []
        continuing = data
        history: tuple[tuple[int, int], ...] = ()
        for circuit in FLAGGED_CIRCUITS:
            system = self._run_gates(append_state_array(continuing, _PLUS_ZERO), circuit, FLAGGED_QUBITS)
            for flag in (1, -1):
                flag_branch = project_array(system, _FLAG_Z, flag)
                for ancilla in (1, -1):
                    branch = project_array(flag_branch, _ANCILLA_X_FLAGGED, ancilla)
                    reduced = trace_out_trailing_array(branch, 2)
                    outcome = history + ((flag, ancilla),)
                    if flag == 1 and ancilla == 1:
                        continuing = reduced
                    elif flag == 1:
                        exits.append(_Exit(outcome, self.weight1, reduced, circuit.index))
                    else:
                        exits.append(_Exit(outcome, self.flagged_tables[circuit.index], reduced, circuit.index))
            history = history + ((1, 1),)
        exits.append(_Exit(history, None, continuing, None))
        return exits

    def unflagged_branches(self, data: np.ndarray) -> list[tuple[Syndrome, np.ndarray]]:
        """Measure g1..g4 with the unflagged circuit; one branch per syndrome."""
        branches = [((), data)]
        for circuit in UNFLAGGED_CIRCUITS:
            measured = []
            for bits, array in branches:
                system = self._run_gates(append_state_array(array, _PLUS), circuit, UNFLAGGED_QUBITS)
                for ancilla in (1, -1):
                    branch = project_array(system, _ANCILLA_X_UNFLAGGED, ancilla)
                    measured.append((bits + (ancilla,), trace_out_trailing_array(branch, 1)))
            branches = measured
        return [(Syndrome(bits), array) for bits, array in branches]

    def correct(self, data: np.ndarray, table: CorrectionTable) -> np.ndarray:
        corrected = np.zeros_like(data)
        for syndrome, branch in self.unflagged_branches(data):
            corrected += table.correction_for(syndrome).gate.conjugate(branch)
        return corrected

    def apply(self, data: np.ndarray) -> np.ndarray:
        """Linear action on a batch of 5-qubit operators; exits sharing a table are merged."""
        grouped: dict[str, tuple[CorrectionTable, np.ndarray]] = {}
        output = np.zeros_like(data)
        for exit_ in self.flagged_exits(data):
            if exit_.table is None:
                output += exit_.array
                continue
            table, accumulated = grouped.get(exit_.table.context, (exit_.table, 0))
            grouped[exit_.table.context] = (table, accumulated + exit_.array)
        for table, accumulated in grouped.values():
            output += self.correct(accumulated, table)
        return output

    def branches(self, data: np.ndarray) -> list[BranchRecord]:
        records = []
        for exit_ in self.flagged_exits(data):
            if exit_.table is None:
                records.append(_record(exit_.array, exit_.history, PauliString.identity(DATA_QUBITS), None, None))
                continue
            for syndrome, branch in self.unflagged_branches(exit_.array):
                correction = exit_.table.correction_for(syndrome)
                records.append(_record(
                    correction.gate.conjugate(branch), exit_.history, correction, syndrome, exit_.subcircuit,
                ))
        return records

    def erasure(self, data: np.ndarray, lost: int) -> np.ndarray:
        reset = reset_qubit_array(data, lost - 1)
        return self.correct(reset, build_erasure_table(lost))


def _record(array, history, correction, syndrome, subcircuit) -> BranchRecord:
    probability = float(trace_array(array))
    state = _finalize(array) if probability > 1e-15 else None
    return BranchRecord(probability, state, history, correction, syndrome, subcircuit)


def _check_five_qubit(rho: DensityMatrix):
    if rho.qubit_count != DATA_QUBITS:
        raise InvalidArgumentError(f'Expected a 5-qubit state, got {rho.qubit_count} qubits')


def _transmit_array(array: np.ndarray, params: NodeChannelParams, qubits=range(DATA_QUBITS)) -> np.ndarray:
    eps = params.transmission_error
    for qubit in qubits:
        array = depolarize_array(array, (qubit,), eps)
    return array


def ft_qec_branches(params: NodeChannelParams, rho_in: DensityMatrix,
                    noise: Optional[GateNoise] = None) -> list[BranchRecord]:
    _check_five_qubit(rho_in)
    records = ProtocolRunner(params, noise).branches(rho_in.entries)
    total = sum(r.probability for r in records)
    if abs(total - 1.0) > BRANCH_PROBABILITY_TOL:
        raise InternalConsistencyError(f'Branch probabilities sum to {total!r}')
    return records


def ft_qec_channel(params: NodeChannelParams, rho_in: DensityMatrix,
                   noise: Optional[GateNoise] = None) -> DensityMatrix:
    """Flag-based FT syndrome extraction and correction, without transmission noise."""
    _check_five_qubit(rho_in)
    return _finalize(ProtocolRunner(params, noise).apply(rho_in.entries))


def node_channel(params: NodeChannelParams, rho_in: DensityMatrix) -> DensityMatrix:
    """Transmission noise over ``params.n`` links, then FT correction."""
    _check_five_qubit(rho_in)
    runner = ProtocolRunner(params)
    return _finalize(runner.apply(_transmit_array(rho_in.entries, params)))


def exit_probabilities(params: NodeChannelParams, rho_in: DensityMatrix) -> tuple[float, ...]:
    """(p1..p4, p5): probability of leaving the flagged sequence at sub-circuit k, or never."""
    runner = ProtocolRunner(params)
    exits = runner.flagged_exits(_transmit_array(rho_in.entries, params))
    probabilities = [0.0] * 5
    for exit_ in exits:
        slot = 4 if exit_.subcircuit is None else exit_.subcircuit - 1
        probabilities[slot] += float(trace_array(exit_.array))
    return tuple(probabilities)


def erasure_channel(params: NodeChannelParams, lost: int, rho_in: DensityMatrix) -> DensityMatrix:
    """Transmission noise on the survivors, reset of ``lost`` to |0>, unflagged extraction, erasure table."""
    _check_five_qubit(rho_in)
    if lost not in range(1, DATA_QUBITS + 1):
        raise InvalidArgumentError(f'Lost qubit must be 1..5, got {lost}')
    survivors = [q for q in range(DATA_QUBITS) if q != lost - 1]
    transmitted = _transmit_array(rho_in.entries, params, survivors)
    return _finalize(ProtocolRunner(params).erasure(transmitted, lost))


def epsilon_loss_per_position(params: NodeChannelParams) -> tuple[float, ...]:
    rho0 = reference_state()
    return tuple(1.0 - erasure_channel(params, lost, rho0).overlap(rho0) for lost in range(1, DATA_QUBITS + 1))


def epsilon_loss(params: NodeChannelParams) -> float:
    """One minus the logical fidelity after a 1-erasure correction, averaged over the lost position."""
    return float(np.mean(epsilon_loss_per_position(params)))


def reference_state() -> DensityMatrix:
    return logical_states()[0]


class Superoperator:
    """The node channel as a 1024x1024 matrix acting on vectorised 5-qubit operators."""

    def __init__(self, params: NodeChannelParams, chunk: int = SUPEROPERATOR_CHUNK):
        dim = 2 ** DATA_QUBITS
        runner = ProtocolRunner(params)
        matrix = np.zeros((dim * dim, dim * dim), dtype=complex)
        for start in range(0, dim * dim, chunk):
            columns = np.arange(start, min(start + chunk, dim * dim))
            basis = np.zeros((columns.size, dim, dim), dtype=complex)
            basis[np.arange(columns.size), columns // dim, columns % dim] = 1.0
            images = runner.apply(_transmit_array(basis, params))
            matrix[:, columns] = images.reshape(columns.size, dim * dim).T
        self.params = params
        self.matrix = matrix
        logger.debug('Built node superoperator for n=%d eps_r=%g', params.n, params.noise.epsilon_r)

    def apply(self, rho: np.ndarray, times: int = 1) -> np.ndarray:
        vector = rho.reshape(-1)
        for _ in range(times):
            vector = self.matrix @ vector
        return vector.reshape(rho.shape)


@lru_cache(maxsize=8)
def node_superoperator(params: NodeChannelParams) -> Superoperator:
    return Superoperator(params)


def exact_chain_fidelity(params: NodeChannelParams, m: int, method: str = 'superoperator') -> float:
    """
    Tr(rho0 C^m(rho0)).

    ``method='superoperator'`` precomposes the channel once; ``'iterate'``
    applies the branch simulation m times directly.
    """
    if m < 1:
        raise InvalidArgumentError(f'Node count must be >= 1, got {m}')
    rho0 = reference_state()
    if method == 'superoperator':
        final = node_superoperator(params).apply(rho0.entries, m)
    elif method == 'iterate':
        runner = ProtocolRunner(params)
        final = rho0.entries
        for _ in range(m):
            final = runner.apply(_transmit_array(final, params))
    else:
        raise InvalidArgumentError(f"method must be 'superoperator' or 'iterate', got {method!r}")
    return float(np.real(np.vdot(rho0.entries, final)))


# ---------------------------------------------------------------------------
# Summary cache
# ---------------------------------------------------------------------------

_summary_cache: dict[NodeChannelParams, ChannelSummary] = {}
_summary_lock = threading.Lock()


def compute_channel_summary(params: NodeChannelParams) -> ChannelSummary:
    alpha1 = exact_chain_fidelity(params, 1, method='iterate')
    alpha2 = exact_chain_fidelity(params, 2, method='iterate')
    per_position = epsilon_loss_per_position(params)
    summary = ChannelSummary(
        n=params.n,
        noise=params.noise,
        alpha1=alpha1,
        alpha2=alpha2,
        eps_loss=float(np.mean(per_position)),
        eps_loss_per_position=per_position,
        local_qubit=params.local_qubit,
    )
    if summary.zeta_squared < -1e-12:
        raise DegenerateRecursionError(
            f'4*alpha2 - 3*alpha1^2 = {summary.zeta_squared:.3e} < 0 at n={params.n}, eps_r={params.noise.epsilon_r}'
        )
    logger.info(
        'Channel summary n=%d eps_r=%g: alpha1=%.9f alpha2=%.9f eps_loss=%.3e',
        params.n, params.noise.epsilon_r, alpha1, alpha2, summary.eps_loss,
    )
    return summary


def channel_summary(params: NodeChannelParams) -> ChannelSummary:
    """alpha1, alpha2 and eps_loss for ``params``, memoised per process."""
    with _summary_lock:
        cached = _summary_cache.get(params)
    if cached is not None:
        return cached
    summary = compute_channel_summary(params)
    with _summary_lock:
        return _summary_cache.setdefault(params, summary)


def peek_summary(params: NodeChannelParams) -> Optional[ChannelSummary]:
    with _summary_lock:
        return _summary_cache.get(params)


def seed_summary_cache(summary: ChannelSummary):
    """Insert a summary computed elsewhere (e.g. loaded from the database)."""
    params = NodeChannelParams(summary.n, summary.noise, summary.local_qubit)
    with _summary_lock:
        _summary_cache.setdefault(params, summary)


def clear_summary_cache():
    with _summary_lock:
        _summary_cache.clear()


SummaryProvider = Callable[[NodeChannelParams], ChannelSummary]
