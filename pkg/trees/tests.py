import csv
import itertools
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, tag
from hypothesis import given, settings
from hypothesis import strategies as st

from stabilizer.channels import epsilon_from_p, p_from_epsilon
from stabilizer.exceptions import InvalidArgumentError

from .exceptions import UnsupportedDepthError
from .reencode_mc import (
    TreeErrorState,
    compose_reencoding,
    decode,
    reencode_channel_estimate,
    simulate_decode,
)
from .tree_code import (
    BranchingVector,
    LinkParams,
    enumerate_trees,
    eta_e,
    eta_e_depth2,
    indirect_z_probability,
    photon_count,
    tree_generation_time,
)

OPTIMAL_TREES = [(4, 13, 4), (5, 11, 4), (4, 14, 4), (4, 12, 5)]
OPERATING_MU = 0.15


class BranchingVectorTests(SimpleTestCase):
    def test_parse_accepts_both_spellings(self):
        self.assertEqual(BranchingVector.parse('4,13,4'), BranchingVector((4, 13, 4)))
        self.assertEqual(BranchingVector.parse('[4, 13, 4]'), BranchingVector((4, 13, 4)))
        self.assertEqual(str(BranchingVector((4, 13, 4))), '[4,13,4]')

    def test_rejects_invalid_entries(self):
        for branches in [(), (0, 2), (2, -1), (True,), (1.5, 2)]:
            with self.assertRaises(InvalidArgumentError):
                BranchingVector(branches)
        with self.assertRaises(InvalidArgumentError):
            BranchingVector.parse('4,x,4')

    def test_depth_and_branch_beyond_last_level(self):
        t = BranchingVector((4, 13, 4))
        self.assertEqual(t.depth, 2)
        self.assertEqual(t.branch(2), 4)
        self.assertEqual(t.branch(3), 0)

    def test_photon_counts(self):
        self.assertEqual(photon_count((4, 13, 4)), 264)
        self.assertEqual(photon_count((5, 11, 4)), 280)
        self.assertEqual(photon_count((4, 14, 4)), 284)
        self.assertEqual(photon_count((4, 12, 5)), 292)
        self.assertEqual(photon_count((1,)), 1)
        self.assertEqual(BranchingVector((2, 3)).photon_count, 8)


class TreeEfficiencyTests(SimpleTestCase):
    def test_lossless_and_total_loss(self):
        for t in OPTIMAL_TREES:
            self.assertEqual(eta_e(t, 0.0), 1.0)
            self.assertEqual(eta_e(t, 1.0), 0.0)

    def test_single_photon_tree_is_bare_transmission(self):
        for mu in (0.0, 0.1, 0.5, 0.9):
            self.assertAlmostEqual(eta_e((1,), mu), 1 - mu, places=14)

    def test_depth_one_closed_form(self):
        b0, b1, mu = 3, 4, 0.2
        r1 = 1 - mu ** b1
        expected = ((1 - mu + mu * r1) ** b0 - (mu * r1) ** b0) * (1 - mu) ** b1
        self.assertAlmostEqual(eta_e((b0, b1), mu), expected, places=14)

    def test_indirect_probability_vanishes_below_leaves(self):
        self.assertEqual(indirect_z_probability((4, 13, 4), 0.2, 3), 0.0)
        self.assertAlmostEqual(indirect_z_probability((4, 13, 4), 0.2, 2), 1 - 0.2 ** 4, places=14)

    def test_operating_point(self):
        value = eta_e((4, 13, 4), OPERATING_MU)
        self.assertGreater(value, 0.997)
        self.assertLess(value, 0.999)

    def test_rejects_mu_outside_unit_interval(self):
        with self.assertRaises(InvalidArgumentError):
            eta_e((4, 13, 4), 1.2)

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from(OPTIMAL_TREES + [(1, 1, 1), (2, 3, 2), (3, 5, 1)]),
           st.floats(0, 1), st.floats(0, 1))
    def test_nonincreasing_in_loss_and_bounded(self, t, mu_a, mu_b):
        low, high = sorted((mu_a, mu_b))
        self.assertGreaterEqual(eta_e(t, low) + 1e-12, eta_e(t, high))
        self.assertGreaterEqual(eta_e(t, high), 0.0)
        self.assertLessEqual(eta_e(t, low), 1.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 1))
    def test_vectorised_matches_scalar(self, mu):
        trees = list(enumerate_trees(40))
        branches = np.array([t.branches for t in trees])
        expected = np.array([eta_e(t, mu) for t in trees])
        np.testing.assert_allclose(eta_e_depth2(branches, mu), expected, rtol=0, atol=1e-12)

    def test_link_loss(self):
        link = LinkParams(1.0, 20.0, 0.95)
        self.assertAlmostEqual(link.mu, 1 - 0.95 * math.exp(-0.05), places=15)
        with self.assertRaises(InvalidArgumentError):
            LinkParams(0.0, 20.0, 0.95)
        with self.assertRaises(InvalidArgumentError):
            LinkParams(1.0, 20.0, 1.5)


class TreeGenerationTests(SimpleTestCase):
    def test_generation_time_examples(self):
        self.assertAlmostEqual(tree_generation_time((1, 1, 1), 1e-9, 100e-9), 502e-9, places=18)
        self.assertAlmostEqual(tree_generation_time((4, 13, 4), 1e-9, 100e-9), 7060e-9, places=18)
        self.assertAlmostEqual(tree_generation_time((4, 13, 4), 1e-9, 0.0), 660e-9, places=18)

    def test_generation_time_needs_depth_two(self):
        with self.assertRaises(UnsupportedDepthError):
            tree_generation_time((4, 13), 1e-9, 100e-9)
        self.assertTrue(issubclass(UnsupportedDepthError, InvalidArgumentError))

    def test_enumeration_matches_brute_force(self):
        brute = [
            BranchingVector(b) for b in itertools.product(range(1, 31), repeat=3)
            if photon_count(b) <= 30
        ]
        self.assertEqual(list(enumerate_trees(30)), brute)

    def test_enumeration_respects_photon_budget(self):
        trees = list(enumerate_trees(300))
        self.assertTrue(all(t.photon_count <= 300 and t.depth == 2 for t in trees))
        for t in OPTIMAL_TREES:
            self.assertIn(BranchingVector(t), trees)
        with self.assertRaises(InvalidArgumentError):
            list(enumerate_trees(0))


class DecodeSimulationTests(SimpleTestCase):
    def test_no_loss_always_decodes(self):
        estimate = simulate_decode((3, 4, 2), 0.0, 0.0, 2000, seed=5)
        self.assertEqual(estimate.success_rate, 1.0)
        self.assertEqual(estimate.successes, 2000)

    def test_noiseless_trees_carry_no_logical_error(self):
        estimate = simulate_decode((4, 13, 4), OPERATING_MU, 0.0, 5000, seed=6)
        self.assertEqual(estimate.logical_x_rate, 0.0)
        self.assertEqual(estimate.logical_y_rate, 0.0)
        self.assertEqual(estimate.logical_z_rate, 0.0)
        self.assertEqual(estimate.effective_epsilon, 0.0)

    def test_total_loss_never_decodes(self):
        estimate = simulate_decode((2, 2, 2), 1.0, 0.01, 500, seed=7)
        self.assertEqual(estimate.success_rate, 0.0)
        self.assertEqual(estimate.effective_epsilon, 0.0)

    def test_decode_flags_missing_children_of_stored_photon(self):
        t = BranchingVector((2, 2))
        shape0, shape1 = (1, 2), (1, 2, 2)
        lost = (np.zeros(shape0, bool), np.zeros(shape1, bool))
        lost[1][0, 0, 1] = True
        clean = (np.zeros(shape0, bool), np.zeros(shape1, bool))
        outcome = decode(t, TreeErrorState(lost, clean, clean))
        self.assertFalse(outcome.success[0])

    def test_decode_counts_ties_as_correct(self):
        # the second first-level photon has one wrong direct copy and one clean indirect copy
        t = BranchingVector((2, 1))
        lost = (np.zeros((1, 2), bool), np.zeros((1, 2, 1), bool))
        x_error = (np.array([[False, True]]), np.zeros((1, 2, 1), bool))
        z_error = (np.zeros((1, 2), bool), np.zeros((1, 2, 1), bool))
        outcome = decode(t, TreeErrorState(lost, x_error, z_error))
        self.assertTrue(outcome.success[0])
        self.assertFalse(outcome.x_sign_wrong[0])

    def test_reproducible_and_independent_of_workers(self):
        args = ((3, 4, 2), 0.2, 0.01, 25_000)
        first = simulate_decode(*args, seed=11, chunk=5_000)
        second = simulate_decode(*args, seed=11, chunk=5_000)
        threaded = simulate_decode(*args, seed=11, chunk=5_000, workers=3)
        self.assertEqual(first, second)
        self.assertEqual(first, threaded)
        self.assertNotEqual(first, simulate_decode(*args, seed=12, chunk=5_000))

    def test_rejects_bad_arguments(self):
        with self.assertRaises(InvalidArgumentError):
            simulate_decode((2, 2, 2), 0.1, 0.01, 0, seed=1)
        with self.assertRaises(InvalidArgumentError):
            simulate_decode((2, 2, 2), -0.1, 0.01, 10, seed=1)

    def test_loss_only_success_matches_eta_e(self):
        cases = [
            ((4, 13, 4), OPERATING_MU),
            ((5, 11, 4), OPERATING_MU),
            ((2, 3, 2), 0.3),
            ((3, 4, 2), 0.4),
            ((1, 2, 3), 0.2),
            ((3, 2), 0.25),
        ]
        for t, mu in cases:
            with self.subTest(tree=t, mu=mu):
                estimate = simulate_decode(t, mu, 0.0, 100_000, seed=2024)
                sigma = math.sqrt(eta_e(t, mu) * (1 - eta_e(t, mu)) / estimate.trials)
                self.assertLessEqual(abs(estimate.success_rate - eta_e(t, mu)), 4 * max(sigma, 1e-12))

    def test_tree_channel_is_close_to_pauli_symmetric(self):
        estimate = simulate_decode((4, 13, 4), OPERATING_MU, 1e-3, 100_000, seed=3)
        sigma = math.hypot(estimate.logical_x_sigma, estimate.logical_z_sigma)
        self.assertLessEqual(abs(estimate.logical_x_rate - estimate.logical_z_rate), 5 * sigma)

    def test_conditional_averaging_keeps_the_mean(self):
        sampled = simulate_decode((2, 3, 2), 0.1, 0.03, 40_000, seed=8)
        averaged = simulate_decode((2, 3, 2), 0.1, 0.03, 40_000, seed=8, conditional=True)
        self.assertEqual(sampled.success_rate, averaged.success_rate)
        sigma = math.hypot(sampled.effective_sigma, averaged.effective_sigma)
        self.assertLessEqual(abs(sampled.effective_epsilon - averaged.effective_epsilon), 5 * sigma)
        self.assertLess(averaged.effective_sigma, sampled.effective_sigma)


class ReencodingTests(SimpleTestCase):
    def test_composition_of_three_equal_channels(self):
        eps0 = 1e-3
        p0 = p_from_epsilon(eps0)
        self.assertAlmostEqual(compose_reencoding(eps0, eps0), 0.75 * (1 - p0 ** 3), places=15)
        self.assertAlmostEqual(compose_reencoding(eps0, 0.0), epsilon_from_p(p0 * p0), places=15)

    def test_noiseless_reencoding(self):
        self.assertEqual(reencode_channel_estimate((4, 13, 4), OPERATING_MU, 0.0, 100, seed=1), 0.0)

    def test_reencoding_error_is_about_three_eps0(self):
        eps_r = reencode_channel_estimate((4, 13, 4), OPERATING_MU, 3.33e-4, 20_000, seed=9)
        self.assertGreaterEqual(eps_r / 3.33e-4, 2.5)
        self.assertLessEqual(eps_r / 3.33e-4, 3.5)

    @tag('slow')
    def test_reencoding_error_law_for_optimal_trees(self):
        for t, eps0 in itertools.product(OPTIMAL_TREES, (1e-4, 3.33e-4)):
            with self.subTest(tree=t, eps0=eps0):
                ratio = reencode_channel_estimate(t, OPERATING_MU, eps0, 100_000, seed=2024) / eps0
                self.assertGreaterEqual(ratio, 2.5)
                self.assertLessEqual(ratio, 3.5)


class McReencodeCommandTests(SimpleTestCase):
    def test_writes_csv_to_stdout(self):
        out = StringIO()
        call_command('mc_reencode', tree=['2,2,1'], mu=[0.1], eps_0=[0.01], trials=2000, seed=1, stdout=out)
        rows = list(csv.DictReader(StringIO(out.getvalue())))
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]['tree'], '[2,2,1]')
        self.assertEqual(rows[0]['photons'], '10')
        self.assertEqual(rows[0]['trials'], '2000')

    def test_writes_file_and_manifest(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'mc.csv'
            call_command('mc_reencode', tree=['2,2,1', '1,2,2'], eps_0=[0.01], trials=500, seed=3,
                         out=str(path), stdout=StringIO())
            lines = path.read_text().splitlines()
            self.assertTrue(lines[0].startswith('tree,photons,mu,eps_0,trials,eta_e,success_rate'))
            self.assertEqual(len(lines), 3)
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['seed'], 3)
            self.assertEqual(manifest['config']['trees'], ['[2,2,1]', '[1,2,2]'])

    def test_rejects_malformed_tree(self):
        with self.assertRaises(CommandError):
            call_command('mc_reencode', tree=['4,,x'], trials=10, stdout=StringIO())

    def test_reads_trials_seed_and_output_from_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'mc.csv'
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'trials': 300, 'seed': 9, 'out': str(path)}))
            call_command('mc_reencode', config=str(config), tree=['2,2,1'], eps_0=[0.01], stdout=StringIO())
            row = next(csv.DictReader(StringIO(path.read_text())))
            self.assertEqual(row['trials'], '300')
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['seed'], 9)

            call_command('mc_reencode', config=str(config), tree=['2,2,1'], eps_0=[0.01], trials=200, seed=4,
                         stdout=StringIO())
            row = next(csv.DictReader(StringIO(path.read_text())))
            self.assertEqual(row['trials'], '200')
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['seed'], 4)

    def test_rejects_invalid_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'trials': 0}))
            with self.assertRaises(CommandError):
                call_command('mc_reencode', config=str(config), tree=['2,2,1'], stdout=StringIO())
