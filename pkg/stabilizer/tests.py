import itertools
import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, tag
from hypothesis import given, settings
from hypothesis import strategies as st

from .channels import (
    DensityMatrix,
    NoiseParams,
    PauliString,
    depolarize_single,
    depolarize_two,
    epsilon_from_p,
    p_from_epsilon,
    pauli_apply,
    reset_qubit_array,
    transmission_error,
)
from .exceptions import InternalConsistencyError, InvalidArgumentError
from .five_qubit import (
    FLAGGED_CIRCUITS,
    STABILIZERS,
    Syndrome,
    build_erasure_table,
    build_flagged_table,
    build_weight1_table,
    encode,
    enumerate_single_faults,
    erasure_projection_syndromes,
    ideal_recovery_array,
    is_stabilizer,
    logical_fidelity,
    logical_states,
    pauli_basis_logical_states,
    single_qubit_errors,
    syndrome_of,
    syndrome_projector_array,
)
from .node_sim import (
    BranchRecord,
    FaultInjection,
    GateLocation,
    NodeChannelParams,
    ProtocolRunner,
    channel_summary,
    clear_summary_cache,
    epsilon_loss,
    erasure_channel,
    exact_chain_fidelity,
    exit_probabilities,
    ft_qec_branches,
    ft_qec_channel,
    node_channel,
)
from .trajectories import sample_trajectories


def random_density(qubits, seed):
    rng = np.random.default_rng(seed)
    dim = 2 ** qubits
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho))


def random_hermitian(qubits, seed):
    rng = np.random.default_rng(seed)
    dim = 2 ** qubits
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return g + g.conj().T


def explicit_depolarize_two(rho, qubits, eps):
    total = (1 - eps) * rho.entries
    n = rho.qubit_count
    for a, b in itertools.product('IXYZ', repeat=2):
        if a == b == 'I':
            continue
        letters = ['I'] * n
        letters[qubits[0]], letters[qubits[1]] = a, b
        p = PauliString(''.join(letters)).matrix()
        total = total + eps / 15 * p @ rho.entries @ p.conj().T
    return total


class DepolarizingChannelTests(SimpleTestCase):
    def test_zero_error_is_identity(self):
        rho = random_density(2, 1)
        self.assertTrue(depolarize_single(rho, 0, 0.0).allclose(rho))
        self.assertTrue(depolarize_two(rho, (0, 1), 0.0).allclose(rho))

    def test_maximally_mixed_is_fixed_point(self):
        self.assertTrue(depolarize_single(DensityMatrix.maximally_mixed(1), 0, 0.4).allclose(DensityMatrix.maximally_mixed(1)))
        self.assertTrue(depolarize_two(DensityMatrix.maximally_mixed(2), (0, 1), 0.7).allclose(DensityMatrix.maximally_mixed(2)))

    def test_full_two_qubit_depolarization(self):
        out = depolarize_two(DensityMatrix.basis(2, 0), (0, 1), 15 / 16)
        self.assertTrue(out.allclose(DensityMatrix.maximally_mixed(2), atol=1e-12))

    def test_two_qubit_channel_matches_explicit_pauli_sum(self):
        rho = random_density(3, 7)
        out = depolarize_two(rho, (2, 0), 0.2)
        np.testing.assert_allclose(out.entries, explicit_depolarize_two(rho, (2, 0), 0.2), atol=1e-12)

    def test_identical_qubits_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            depolarize_two(random_density(2, 3), (1, 1), 0.1)

    def test_out_of_range_arguments_rejected(self):
        rho = random_density(2, 4)
        with self.assertRaises(InvalidArgumentError):
            depolarize_single(rho, 2, 0.1)
        with self.assertRaises(InvalidArgumentError):
            depolarize_single(rho, 0, 1.5)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 0.75), st.floats(0, 0.75), st.integers(0, 2 ** 16))
    def test_single_qubit_composition_law(self, eps1, eps2, seed):
        rho = random_density(2, seed)
        sequential = depolarize_single(depolarize_single(rho, 1, eps1), 1, eps2)
        combined = epsilon_from_p(p_from_epsilon(eps1) * p_from_epsilon(eps2))
        np.testing.assert_allclose(sequential.entries, depolarize_single(rho, 1, combined).entries, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, 15 / 16), st.floats(0, 15 / 16), st.integers(0, 2 ** 16))
    def test_two_qubit_composition_law(self, eps1, eps2, seed):
        rho = random_density(3, seed)
        lam1, lam2 = 1 - 16 * eps1 / 15, 1 - 16 * eps2 / 15
        sequential = depolarize_two(depolarize_two(rho, (0, 2), eps1), (0, 2), eps2)
        combined = 15 / 16 * (1 - lam1 * lam2)
        np.testing.assert_allclose(sequential.entries, depolarize_two(rho, (0, 2), combined).entries, atol=1e-12)

    def test_output_trace_and_hermiticity(self):
        out = depolarize_two(random_density(4, 11), (1, 3), 0.3)
        self.assertAlmostEqual(out.trace, 1.0, places=12)
        np.testing.assert_allclose(out.entries, out.entries.conj().T, atol=1e-15)


class PauliTests(SimpleTestCase):
    def test_identity_leaves_state(self):
        rho = random_density(3, 5)
        self.assertTrue(pauli_apply(rho, PauliString('III')).allclose(rho, atol=1e-12))

    def test_x_flips_zero(self):
        self.assertTrue(pauli_apply(DensityMatrix.basis(1, 0), PauliString('X')).allclose(DensityMatrix.basis(1, 1)))

    @settings(max_examples=30, deadline=None)
    @given(st.text(alphabet='IXYZ', min_size=3, max_size=3), st.integers(0, 2 ** 16))
    def test_pauli_apply_is_involution(self, letters, seed):
        rho = random_density(3, seed)
        p = PauliString(letters)
        np.testing.assert_allclose(pauli_apply(pauli_apply(rho, p), p).entries, rho.entries, atol=1e-12)

    def test_monomial_matrix_matches_kron(self):
        single = {'I': np.eye(2), 'X': np.array([[0, 1], [1, 0]]), 'Y': np.array([[0, -1j], [1j, 0]]), 'Z': np.diag([1, -1])}
        expected = np.kron(np.kron(single['Y'], single['X']), single['Z'])
        np.testing.assert_allclose(PauliString('YXZ').matrix(), expected)

    def test_commutation(self):
        self.assertFalse(PauliString('XI').commutes_with(PauliString('ZI')))
        self.assertTrue(PauliString('XX').commutes_with(PauliString('ZZ')))

    def test_invalid_letters(self):
        with self.assertRaises(InvalidArgumentError):
            PauliString('XQ')


class NoiseParamsTests(SimpleTestCase):
    def test_default_operation_error_is_a_third(self):
        self.assertAlmostEqual(NoiseParams(0.003).epsilon_0, 0.001, places=15)
        self.assertEqual(NoiseParams(0.003, 0.002).epsilon_0, 0.002)

    def test_ordering_enforced(self):
        with self.assertRaises(InvalidArgumentError):
            NoiseParams(0.001, 0.01)

    def test_transmission_error_examples(self):
        self.assertEqual(transmission_error(NoiseParams(0.0, 0.0), 50), 0.0)
        self.assertEqual(transmission_error(NoiseParams(1.0), 3), 1.0)
        self.assertAlmostEqual(transmission_error(NoiseParams(0.001), 8), 1 - 0.999 ** 8 * (1 - 1 / 3000), places=15)

    def test_transmission_error_monotone_in_links(self):
        noise = NoiseParams(0.002)
        values = [transmission_error(noise, n) for n in range(1, 30)]
        self.assertEqual(values, sorted(values))

    def test_zero_links_rejected(self):
        with self.assertRaises(InvalidArgumentError):
            transmission_error(NoiseParams(0.001), 0)

    def test_epsilon_p_conversion(self):
        self.assertEqual(epsilon_from_p(1.0), 0.0)
        self.assertEqual(epsilon_from_p(0.0), 0.75)
        self.assertAlmostEqual(p_from_epsilon(epsilon_from_p(0.7)), 0.7, places=15)
        with self.assertRaises(InvalidArgumentError):
            epsilon_from_p(1.2)


class FiveQubitCodeTests(SimpleTestCase):
    def test_perfect_code_bijection(self):
        syndromes = {syndrome_of(e) for e in single_qubit_errors()}
        self.assertEqual(len(syndromes), 15)
        self.assertNotIn(Syndrome.trivial(), syndromes)
        self.assertEqual(syndromes | {Syndrome.trivial()}, set(Syndrome.all()))

    def test_syndrome_examples(self):
        self.assertEqual(syndrome_of(PauliString('IIIII')), Syndrome.trivial())
        self.assertEqual(str(syndrome_of(PauliString('IIIIX'))), '(+,+,-,-)')
        self.assertEqual(str(syndrome_of(PauliString('IIIIZ'))), '(+,-,+,+)')

    def test_weight1_table(self):
        table = build_weight1_table()
        self.assertEqual(len(table.entries), 16)
        self.assertEqual(table.correction_for(Syndrome.trivial()), PauliString('IIIII'))
        self.assertEqual(table.correction_for(syndrome_of(PauliString('IIYII'))), PauliString('IIYII'))
        self.assertEqual(table.max_weight, 1)

    def test_logical_states_in_codespace(self):
        zero, one = logical_states()
        for state in (zero, one, encode(1, 0)):
            for generator in STABILIZERS.generators:
                self.assertAlmostEqual(np.real(np.trace(generator.matrix() @ state.entries)), 1.0, places=12)
        self.assertAlmostEqual(zero.overlap(one), 0.0, places=12)

    def test_logical_operators(self):
        zero, one = logical_states()
        self.assertTrue(pauli_apply(zero, PauliString('XXXXX')).allclose(one, atol=1e-12))
        z = PauliString('ZZZZZ').matrix()
        self.assertAlmostEqual(np.real(np.trace(z @ zero.entries)), 1.0, places=12)
        self.assertAlmostEqual(np.real(np.trace(z @ one.entries)), -1.0, places=12)

    def test_encode_superposition(self):
        zero = logical_states()[0]
        r = 1 / np.sqrt(2)
        plus = encode(r, r)
        self.assertTrue(pauli_apply(plus, PauliString('XXXXX')).allclose(plus, atol=1e-12))
        self.assertAlmostEqual(plus.overlap(zero), 0.5, places=12)
        self.assertAlmostEqual(encode(r, -r).overlap(plus), 0.0, places=12)

    def test_encode_rejects_unnormalised(self):
        with self.assertRaises(InvalidArgumentError):
            encode(1, 1)

    def test_single_error_injection_is_corrected(self):
        for state in pauli_basis_logical_states().values():
            for error in single_qubit_errors():
                corrupted = error.gate.conjugate(state.entries)
                restored = DensityMatrix(ideal_recovery_array(corrupted))
                self.assertAlmostEqual(restored.overlap(state), 1.0, places=12)

    def test_erasure_table_for_fifth_qubit(self):
        table = build_erasure_table(5)
        self.assertEqual(table.correction_for(Syndrome.parse('(+,+,+,+)')), PauliString('IIIII'))
        self.assertEqual(table.correction_for(Syndrome.parse('(+,+,-,-)')), PauliString('IIIIX'))
        self.assertEqual(table.correction_for(Syndrome.parse('(+,-,+,+)')), PauliString('IIIIZ'))
        self.assertEqual(table.correction_for(Syndrome.parse('(+,-,-,-)')), PauliString('IIIIY'))

    def test_erasure_projection_rows_act_on_lost_qubit_only(self):
        for lost in range(1, 6):
            table = build_erasure_table(lost)
            self.assertEqual(len(table.entries), 16)
            for syndrome, pauli in erasure_projection_syndromes(lost).items():
                self.assertEqual(table.correction_for(syndrome), pauli)
                self.assertTrue(set(pauli.support) <= {lost - 1})

    def test_erasure_table_extra_error_choice(self):
        table = build_erasure_table(1)
        self.assertEqual(table.correction_for(Syndrome.parse('(-,+,+,+)')), PauliString('IXIII'))

    def test_erasure_projection_branches_are_equiprobable(self):
        zero = logical_states()[0]
        reset = reset_qubit_array(zero.entries, 4)
        probabilities = {
            syndrome: float(np.real(np.trace(syndrome_projector_array(reset, syndrome))))
            for syndrome in Syndrome.all()
        }
        supported = {s for s, p in probabilities.items() if p > 1e-12}
        self.assertEqual(supported, set(erasure_projection_syndromes(5)))
        for syndrome in supported:
            self.assertAlmostEqual(probabilities[syndrome], 0.25, places=12)

    def test_flagged_tables_have_weight_at_most_two(self):
        for k in (1, 2, 3, 4):
            table = build_flagged_table(k)
            self.assertEqual(len(table.entries), 16)
            self.assertLessEqual(table.max_weight, 2)
            self.assertEqual(table.correction_for(Syndrome.trivial()), PauliString('IIIII'))

    def test_flagged_table_index_out_of_range(self):
        for k in (0, 5):
            with self.assertRaises(InvalidArgumentError):
                build_flagged_table(k)

    def test_flagged_tables_undo_every_flagged_fault(self):
        for circuit in FLAGGED_CIRCUITS:
            table = build_flagged_table(circuit.index)
            for outcome in enumerate_single_faults(circuit):
                if outcome.flag_raised:
                    correction = table.correction_for(syndrome_of(outcome.data_error))
                    self.assertTrue(is_stabilizer(correction * outcome.data_error), msg=str(outcome))

    def test_ancilla_hook_error_before_last_gate(self):
        circuit = FLAGGED_CIRCUITS[0]
        outcome = next(
            o for o in enumerate_single_faults(circuit)
            if o.position == 3 and o.fault.letters == 'IIIIIXI'
        )
        self.assertTrue(outcome.flag_raised)
        self.assertEqual(outcome.data_error, PauliString('IIIXI'))
        table = build_flagged_table(1)
        self.assertEqual(table.correction_for(syndrome_of(outcome.data_error)), PauliString('IIIXI'))

    def test_circuit_layout_gate_counts(self):
        local = [c.local_gate_count(1) for c in FLAGGED_CIRCUITS]
        teleported = [c.teleported_gate_count(1) for c in FLAGGED_CIRCUITS]
        self.assertEqual(local, [3, 2, 3, 3])
        self.assertEqual(teleported, [3, 4, 3, 3])


class NodeChannelTests(SimpleTestCase):
    def setUp(self):
        self.zero = logical_states()[0]

    def test_noiseless_fixed_point(self):
        params = NodeChannelParams(4, NoiseParams(0.0))
        branches = ft_qec_branches(params, self.zero)
        live = [b for b in branches if b.probability > 1e-12]
        self.assertEqual(len(live), 1)
        self.assertIsNone(live[0].exit_subcircuit)
        self.assertAlmostEqual(live[0].probability, 1.0, places=12)
        self.assertTrue(node_channel(params, self.zero).allclose(self.zero, atol=1e-10))

    def test_noiseless_single_error_is_corrected(self):
        params = NodeChannelParams(1, NoiseParams(0.0))
        corrupted = pauli_apply(self.zero, PauliString('IIXII'))
        self.assertTrue(ft_qec_channel(params, corrupted).allclose(self.zero, atol=1e-10))
        self.assertAlmostEqual(sum(b.probability for b in ft_qec_branches(params, corrupted)), 1.0, places=10)

    def test_branch_probabilities_sum_to_one(self):
        for eps_r in (1e-3, 1e-2, 5e-2):
            params = NodeChannelParams(3, NoiseParams(eps_r))
            total = sum(b.probability for b in ft_qec_branches(params, random_density(5, 17)))
            self.assertAlmostEqual(total, 1.0, delta=1e-9)

    def test_branch_probability_drift_is_internal_error(self):
        params = NodeChannelParams(3, NoiseParams(1e-3))
        records = [BranchRecord(0.5, None, (), PauliString.identity(5))]
        with mock.patch.object(ProtocolRunner, 'branches', return_value=records):
            with self.assertRaises(InternalConsistencyError):
                ft_qec_branches(params, random_density(5, 17))

    def test_exit_probabilities(self):
        self.assertAlmostEqual(exit_probabilities(NodeChannelParams(2, NoiseParams(0.0)), self.zero)[4], 1.0, places=12)
        probabilities = exit_probabilities(NodeChannelParams(2, NoiseParams(0.01)), self.zero)
        self.assertAlmostEqual(sum(probabilities), 1.0, places=10)

    def test_channel_is_linear(self):
        runner = ProtocolRunner(NodeChannelParams(2, NoiseParams(0.01)))
        a, b = random_hermitian(5, 1), random_hermitian(5, 2)
        np.testing.assert_allclose(
            runner.apply(0.3 * a - 1.7 * b), 0.3 * runner.apply(a) - 1.7 * runner.apply(b), atol=1e-10,
        )

    def test_every_single_flagged_circuit_fault_is_tolerated(self):
        params = NodeChannelParams(1, NoiseParams(0.0))
        states = pauli_basis_logical_states()
        # a logical X, Y or Z error moves at least one of these two
        inputs = [states['0'], states['+']]
        letters = [a + b for a, b in itertools.product('IXYZ', repeat=2)][1:]
        for circuit in FLAGGED_CIRCUITS:
            for position in range(len(circuit.gates)):
                for fault in letters:
                    noise = FaultInjection(GateLocation(True, circuit.index, position), fault)
                    for state in inputs:
                        out = ft_qec_channel(params, state, noise=noise)
                        self.assertAlmostEqual(
                            logical_fidelity(out, state), 1.0, delta=1e-10,
                            msg=f'g{circuit.index} position {position} fault {fault}',
                        )

    def test_gate_noise_suppressed_to_second_order(self):
        state = logical_states()[0]
        infidelities = []
        for eps0 in (1e-4, 1e-3):
            out = ft_qec_channel(NodeChannelParams(1, NoiseParams(3 * eps0)), state)
            infidelities.append(1.0 - logical_fidelity(out, state))
        slope = np.log(infidelities[1] / infidelities[0]) / np.log(10.0)
        self.assertGreaterEqual(slope, 1.8)

    def test_transmission_noise_suppressed_to_second_order(self):
        infidelities = []
        for eps_r in (1e-4, 1e-3):
            params = NodeChannelParams(1, NoiseParams(eps_r, 0.0))
            infidelities.append(1.0 - exact_chain_fidelity(params, 1, method='iterate'))
        slope = np.log(infidelities[1] / infidelities[0]) / np.log(10.0)
        self.assertGreaterEqual(slope, 1.8)

    def test_noiseless_summary(self):
        clear_summary_cache()
        summary = channel_summary(NodeChannelParams(5, NoiseParams(0.0)))
        self.assertAlmostEqual(summary.alpha1, 1.0, places=10)
        self.assertAlmostEqual(summary.alpha2, 1.0, places=10)
        self.assertAlmostEqual(summary.eps_loss, 0.0, places=10)

    def test_summary_at_operating_point(self):
        params = NodeChannelParams(8, NoiseParams(1e-3))
        summary = channel_summary(params)
        self.assertLessEqual(summary.alpha2, summary.alpha1 + 1e-9)
        self.assertLessEqual(summary.alpha1, 1.0 + 1e-9)
        self.assertGreaterEqual(summary.alpha2, 0.0)
        self.assertGreaterEqual(summary.zeta_squared, 0.0)
        self.assertAlmostEqual(summary.alpha2, exact_chain_fidelity(params, 2, method='iterate'), delta=1e-12)
        self.assertIs(channel_summary(params), summary)

    def test_noiseless_erasure_correction(self):
        params = NodeChannelParams(1, NoiseParams(0.0))
        for state in pauli_basis_logical_states().values():
            for lost in range(1, 6):
                self.assertAlmostEqual(erasure_channel(params, lost, state).overlap(state), 1.0, places=10)
        self.assertAlmostEqual(epsilon_loss(params), 0.0, places=10)

    def test_epsilon_loss_increases_with_noise(self):
        values = [epsilon_loss(NodeChannelParams(4, NoiseParams(eps_r))) for eps_r in (1e-4, 1e-3, 1e-2)]
        self.assertEqual(values, sorted(values))
        self.assertGreater(values[0], 0.0)

    def test_trajectory_sampling_matches_exact_fidelity(self):
        params = NodeChannelParams(2, NoiseParams(0.02))
        exact = exact_chain_fidelity(params, 1, method='iterate')
        estimate = sample_trajectories(params, trials=4000, seed=7)
        self.assertLessEqual(abs(estimate.fidelity - exact), 4 * estimate.sigma + 1e-6)

    def test_invalid_params(self):
        with self.assertRaises(InvalidArgumentError):
            NodeChannelParams(0, NoiseParams(0.001))
        with self.assertRaises(InvalidArgumentError):
            NodeChannelParams(1, NoiseParams(0.001), local_qubit=6)


@tag('slow')
class SuperoperatorTests(SimpleTestCase):
    def test_precomposed_chain_matches_direct_iteration(self):
        params = NodeChannelParams(8, NoiseParams(1e-3))
        for m in (1, 2, 3):
            self.assertAlmostEqual(
                exact_chain_fidelity(params, m), exact_chain_fidelity(params, m, method='iterate'), delta=1e-10,
            )

    def test_chain_fidelity_nonincreasing(self):
        params = NodeChannelParams(8, NoiseParams(1e-3))
        values = [exact_chain_fidelity(params, m) for m in (1, 5, 25, 125)]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_summary_matches_precomposed_chain(self):
        params = NodeChannelParams(8, NoiseParams(1e-3))
        summary = channel_summary(params)
        self.assertAlmostEqual(summary.alpha1, exact_chain_fidelity(params, 1, method='superoperator'), delta=1e-10)
        self.assertAlmostEqual(summary.alpha2, exact_chain_fidelity(params, 2, method='superoperator'), delta=1e-10)

    def test_trajectory_sampling_at_operating_point(self):
        params = NodeChannelParams(8, NoiseParams(1e-3))
        estimate = sample_trajectories(params, trials=100000, seed=11)
        self.assertLessEqual(abs(estimate.fidelity - channel_summary(params).alpha1), 4 * estimate.sigma + 1e-6)


class CommandTests(SimpleTestCase):
    def test_tables_command(self):
        out = StringIO()
        call_command('tables', stdout=out)
        text = out.getvalue()
        for context in ('[weight1]', '[flagged(4)]', '[erasure(5)]'):
            self.assertIn(context, text)
        self.assertIn('(+,-,-,-)  ->  IIIIY', text)

    def test_channel_command(self):
        out = StringIO()
        call_command('channel', n=2, eps_r=0.0, stdout=out)
        self.assertIn('alpha1=1.0000', out.getvalue())

    def test_channel_command_rejects_bad_noise(self):
        with self.assertRaises(CommandError):
            call_command('channel', n=2, eps_r=0.001, eps_0=0.01, stdout=StringIO())

    def test_channel_command_reads_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'channel.csv'
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'eps_r': [0.0], 'seed': 21, 'out': str(path)}))
            call_command('channel', n=2, config=str(config), stdout=StringIO())
            header, row = path.read_text().splitlines()
            self.assertTrue(header.startswith('n,eps_r,eps_0,alpha1,alpha2,eps_loss,eps_loss_1'))
            self.assertTrue(row.startswith('2,0,0,'))
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['seed'], 21)

    def test_channel_flags_override_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'eps_r': [0.01]}))
            out = StringIO()
            call_command('channel', n=2, eps_r=0.0, config=str(config), stdout=out)
            self.assertIn('alpha1=1.0000', out.getvalue())

    def test_tables_command_writes_configured_output(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'tables.txt'
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'out': str(path), 'seed': 4}))
            call_command('tables', config=str(config), stdout=StringIO())
            self.assertIn('[erasure(5)]', path.read_text())
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['command'], 'tables')
            self.assertEqual(manifest['seed'], 4)

    def test_commands_reject_invalid_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'bogus': 1}))
            with self.assertRaises(CommandError):
                call_command('tables', config=str(config), stdout=StringIO())
            with self.assertRaises(CommandError):
                call_command('channel', n=2, eps_r=0.0, config=str(config), stdout=StringIO())
