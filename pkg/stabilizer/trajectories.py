"""
State-vector trajectory sampling of the node channel.

Faults and measurement outcomes are drawn at random instead of enumerated; used
only to cross-check the exact branch simulation in ``node_sim``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .channels import PauliString
from .five_qubit import (
    ANCILLA,
    DATA_QUBITS,
    FLAG,
    FLAGGED_CIRCUITS,
    UNFLAGGED_CIRCUITS,
    CorrectionTable,
    SubCircuit,
    Syndrome,
    build_flagged_table,
    build_weight1_table,
    logical_vectors,
)
from .node_sim import FLAGGED_QUBITS, UNFLAGGED_QUBITS, NodeChannelParams, _gate_monomial

logger = logging.getLogger(__name__)

_TWO_QUBIT_FAULTS = [a + b for a in 'IXYZ' for b in 'IXYZ'][1:]


@dataclass(frozen=True)
class TrajectoryEstimate:
    trials: int
    fidelity: float
    sigma: float


class _Trajectory:
    def __init__(self, params: NodeChannelParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def _fault(self, vector, qubit_count, qubits, eps):
        if eps > 0 and self.rng.random() < eps:
            letters = _TWO_QUBIT_FAULTS[self.rng.integers(len(_TWO_QUBIT_FAULTS))]
            fault = ['I'] * qubit_count
            fault[qubits[0]], fault[qubits[1]] = letters
            vector = PauliString(''.join(fault)).gate.apply_vector(vector)
        return vector

    def _measure(self, vector, qubit, basis):
        """Measure one qubit in Z or X; returns (outcome, post-measurement vector without it)."""
        split = vector.reshape(2 ** qubit, 2, -1)
        if basis == 'X':
            split = np.stack([split[:, 0] + split[:, 1], split[:, 0] - split[:, 1]], axis=1) / np.sqrt(2)
        p_plus = float(np.sum(np.abs(split[:, 0]) ** 2))
        outcome = 1 if self.rng.random() < p_plus else -1
        kept = split[:, 0 if outcome == 1 else 1].reshape(-1)
        return outcome, kept / np.linalg.norm(kept)

    def _run(self, data, circuit: SubCircuit, qubit_count):
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        extra = np.kron(plus, [1, 0]) if qubit_count == FLAGGED_QUBITS else plus
        vector = np.kron(data, extra)
        for gate in circuit.gates:
            vector = _gate_monomial(qubit_count, gate).apply_vector(vector)
            vector = self._fault(vector, qubit_count, (ANCILLA, gate.target), self.params.gate_error(gate))
        return vector

    def _correct(self, data, table: CorrectionTable):
        bits = []
        for circuit in UNFLAGGED_CIRCUITS:
            system = self._run(data, circuit, UNFLAGGED_QUBITS)
            outcome, data = self._measure(system, ANCILLA, 'X')
            bits.append(outcome)
        return table.correction_for(Syndrome(tuple(bits))).gate.apply_vector(data)

    def run(self, data):
        eps = self.params.transmission_error
        for qubit in range(DATA_QUBITS):
            if self.rng.random() < eps:
                letter = 'XYZ'[self.rng.integers(3)]
                data = PauliString.single(DATA_QUBITS, qubit, letter).gate.apply_vector(data)
        for circuit in FLAGGED_CIRCUITS:
            system = self._run(data, circuit, FLAGGED_QUBITS)
            flag, system = self._measure(system, FLAG, 'Z')
            ancilla, data = self._measure(system, ANCILLA, 'X')
            if flag == -1:
                return self._correct(data, build_flagged_table(circuit.index))
            if ancilla == -1:
                return self._correct(data, build_weight1_table())
        return data


def sample_trajectories(params: NodeChannelParams, trials: int, seed: int, vector=None) -> TrajectoryEstimate:
    """Monte Carlo estimate of the node-channel fidelity for a pure input (default |0_L>)."""
    reference = logical_vectors()[0] if vector is None else np.asarray(vector, dtype=complex)
    trajectory = _Trajectory(params, np.random.default_rng(seed))
    fidelities = np.empty(trials)
    for trial in range(trials):
        final = trajectory.run(reference.copy())
        fidelities[trial] = abs(np.vdot(reference, final)) ** 2
    mean = float(fidelities.mean())
    sigma = float(fidelities.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    logger.debug('Trajectory estimate over %d trials: %.6f +/- %.6f', trials, mean, sigma)
    return TrajectoryEstimate(trials, mean, sigma)
