import csv
import itertools
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, TestCase, override_settings, tag
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stabilizer.channels import NoiseParams
from stabilizer.exceptions import DegenerateRecursionError, InvalidArgumentError
from stabilizer.node_sim import (
    ChannelSummary,
    NodeChannelParams,
    clear_summary_cache,
    peek_summary,
    seed_summary_cache,
)
from trees.tree_code import BranchingVector, enumerate_trees, eta_e

from .exceptions import NoFeasibleConfigError
from .exports import (
    BASELINE_HEADER,
    RATE_HEADER,
    baseline_path,
    baseline_row,
    format_value,
    rate_row,
    record_run,
    render_csv,
    write_manifest,
)
from .fidelity import (
    LayoutCounts,
    effective_error,
    effective_errors,
    fidelity_boxed,
    fidelity_closed_form,
    fidelity_recurrence,
    fidelity_sequence,
    naive_effective_error,
    recursion_accuracy,
)
from .models import ChannelSummaryRecord, RatePoint, SweepRun
from .optimizer import SearchSpace, cost, cost_value, minimize
from .rate import (
    HardwareConstants,
    NetworkConfig,
    abort_probability,
    binary_entropy,
    expected_ft_time,
    homogeneous_error,
    homogeneous_skr,
    node_loss_profile,
    node_processing_time,
    node_success_factors,
    p_trans,
    secret_key_fraction,
    six_state_threshold,
    skr,
    transmission_weights,
)
from .run_config import dumps, load, loads, parse_data
from .summary_store import cached_channel_summary, store_summary, summary_from_record

DEFAULTS = HardwareConstants()
TREE = BranchingVector((4, 13, 4))


def depolarizing_summary(params):
    """Stand-in for the node simulation: no two-node correlation, erasures twice as noisy."""
    e = min(1.0, params.noise.epsilon_r * params.n)
    return ChannelSummary(params.n, params.noise, 1.0 - e, (1.0 - e) ** 2, min(1.0, 2 * e),
                          (min(1.0, 2 * e),) * 5, params.local_qubit)


def summary(n, alpha1, alpha2, eps_loss, eps_r=1e-3):
    return ChannelSummary(n, NoiseParams(eps_r), alpha1, alpha2, eps_loss, (eps_loss,) * 5)


class KeyFractionTests(SimpleTestCase):
    def test_threshold(self):
        self.assertAlmostEqual(six_state_threshold(), 0.1261, delta=0.001)

    def test_noiseless_key_and_zero_above_threshold(self):
        self.assertEqual(secret_key_fraction(0.0), 1.0)
        self.assertGreater(secret_key_fraction(six_state_threshold() - 0.01), 0.0)
        self.assertEqual(secret_key_fraction(0.2), 0.0)
        self.assertEqual(secret_key_fraction(1.0), 0.0)

    def test_rejects_qber_outside_unit_interval(self):
        with self.assertRaises(InvalidArgumentError):
            secret_key_fraction(-0.1)

    def test_binary_entropy(self):
        self.assertEqual(float(binary_entropy(0.0)), 0.0)
        self.assertAlmostEqual(float(binary_entropy(0.5)), 1.0, places=15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_nonincreasing_in_qber(self, a, b):
        low, high = sorted((a, b))
        self.assertGreaterEqual(secret_key_fraction(low) + 1e-12, secret_key_fraction(high))


class TimingTests(SimpleTestCase):
    def test_node_processing_time(self):
        c = DEFAULTS
        tree_time = 7060e-9
        self.assertEqual(node_processing_time(tree_time, c),
                         tree_time + 14 * c.tau_ss + 26 * c.tau_tele + 8 * c.tau_meas)

    def test_expected_ft_time_at_the_extremes(self):
        c = HardwareConstants(tau_ss=3e-7, tau_ph=2e-9, tau_meas=5e-6, tau_tele=7e-6)
        tree_time = 1e-5
        self.assertAlmostEqual(expected_ft_time([0, 0, 0, 1, 0], c), node_processing_time(tree_time, c) - tree_time,
                               delta=1e-18)
        self.assertAlmostEqual(expected_ft_time([0, 0, 0, 0, 1], c),
                               11 * c.tau_ss + 13 * c.tau_tele + 4 * c.tau_meas, delta=1e-18)

    def test_expected_ft_time_grows_with_later_exits(self):
        values = [expected_ft_time(np.eye(5)[k], DEFAULTS) for k in range(4)]
        self.assertEqual(values, sorted(values))

    def test_expected_ft_time_rejects_bad_probabilities(self):
        with self.assertRaises(InvalidArgumentError):
            expected_ft_time([0.5, 0.5, 0.5, 0, 0], DEFAULTS)
        with self.assertRaises(InvalidArgumentError):
            expected_ft_time([1.0], DEFAULTS)


class FidelityTests(SimpleTestCase):
    def test_small_node_counts(self):
        self.assertEqual(fidelity_closed_form(0.99, 0.981, 0), 1.0)
        self.assertEqual(fidelity_closed_form(0.99, 0.981, 1), 0.99)
        self.assertAlmostEqual(fidelity_closed_form(0.99, 0.981, 2), 0.981, places=14)

    def test_matches_correlation_form_of_the_recurrence(self):
        alpha1, alpha2 = 0.99, 0.981
        correlation = (alpha2 - alpha1 ** 2) / (1 - alpha1)
        values = [1.0, alpha1]
        for _ in range(4):
            values.append(alpha1 * values[-1] + (1 - alpha1) * correlation * values[-2])
        self.assertAlmostEqual(fidelity_closed_form(alpha1, alpha2, 5), values[5], delta=1e-12)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(0.5, 1.0, exclude_max=True), st.floats(0, 1), st.integers(0, 500))
    def test_closed_form_matches_recurrence(self, alpha1, t, m):
        lower = 0.75 * alpha1 ** 2
        alpha2 = lower + t * (alpha1 - lower)
        self.assertAlmostEqual(fidelity_closed_form(alpha1, alpha2, m), fidelity_recurrence(alpha1, alpha2, m),
                               delta=1e-10)

    def test_boxed_formula(self):
        for alpha1, alpha2, m in [(0.99, 0.981, 7), (0.9, 0.85, 30), (0.999, 0.9981, 125)]:
            self.assertAlmostEqual(fidelity_boxed(alpha1, alpha2, m), fidelity_recurrence(alpha1, alpha2, m),
                                   delta=1e-10)
        alpha1 = 0.5
        self.assertAlmostEqual(fidelity_boxed(alpha1, 0.75 * alpha1 ** 2, 6),
                               fidelity_recurrence(alpha1, 0.75 * alpha1 ** 2, 6), delta=1e-12)

    def test_sequence_matches_recurrence(self):
        sequence = fidelity_sequence(0.99, 0.981, 50)
        for m in (0, 1, 2, 17, 50):
            self.assertAlmostEqual(sequence[m], fidelity_recurrence(0.99, 0.981, m), delta=1e-12)

    def test_complex_eigenvalues_rejected(self):
        with self.assertRaises(DegenerateRecursionError):
            fidelity_closed_form(0.9, 0.5, 10)
        with self.assertRaises(InvalidArgumentError):
            fidelity_closed_form(0.9, 0.81, -1)

    def test_naive_error(self):
        self.assertAlmostEqual(naive_effective_error(0.99, 3), 1 - 0.99 ** 3, places=15)
        self.assertEqual(naive_effective_error(0.5, 0), 0.0)


class LayoutTests(SimpleTestCase):
    def test_even_layout(self):
        layout = LayoutCounts(12, 3)
        self.assertEqual((layout.n_prime, layout.n_dblprime, layout.m_i), (4, 4, 9))
        self.assertTrue(layout.is_even)

    def test_uneven_layout(self):
        layout = LayoutCounts(10, 3)
        self.assertEqual((layout.n_prime, layout.n_dblprime), (3, 4))
        self.assertFalse(layout.is_even)

    def test_invalid_layouts(self):
        for m_tot, m_ii in [(0, 1), (5, 0), (5, 6)]:
            with self.assertRaises(InvalidArgumentError):
                LayoutCounts(m_tot, m_ii)


class EffectiveErrorTests(SimpleTestCase):
    def setUp(self):
        self.primary = summary(2, 0.99, 0.981, 0.02)
        self.last = summary(3, 0.985, 0.9705, 0.03)

    def provider(self, params):
        return self.last if params.n == 3 else self.primary

    def test_even_layout(self):
        layout = LayoutCounts(6, 3)
        self.assertAlmostEqual(effective_error(self.primary, layout, 0, self.provider),
                               1 - fidelity_closed_form(0.99, 0.981, 3), places=14)
        self.assertAlmostEqual(effective_error(self.primary, layout, 1, self.provider), 1 - 0.98 * 0.981, places=14)
        self.assertAlmostEqual(effective_error(self.primary, layout, 3, self.provider), 1 - 0.98 ** 3, places=14)

    def test_uneven_layout(self):
        layout = LayoutCounts(7, 3)
        self.assertAlmostEqual(effective_error(self.primary, layout, 0, self.provider), 1 - 0.981 * 0.985, places=14)
        self.assertAlmostEqual(effective_error(self.primary, layout, 1, self.provider),
                               1 - 0.98 * 0.99 * 0.985, places=14)
        self.assertAlmostEqual(effective_error(self.primary, layout, 3, self.provider), 1 - 0.98 ** 2 * 0.97,
                               places=14)

    def test_vector_matches_single_counts(self):
        layout = LayoutCounts(7, 3)
        values = effective_errors(self.primary, layout, self.provider)
        self.assertEqual(len(values), 4)
        for i in range(4):
            self.assertEqual(values[i], effective_error(self.primary, layout, i, self.provider))

    def test_argument_checks(self):
        with self.assertRaises(InvalidArgumentError):
            effective_error(self.primary, LayoutCounts(6, 3), 4, self.provider)
        with self.assertRaises(InvalidArgumentError):
            effective_error(self.primary, LayoutCounts(9, 3), 0, self.provider)


class TransmissionTests(SimpleTestCase):
    def test_node_loss_profile_is_a_distribution(self):
        profile = node_loss_profile(0.998, 20)
        self.assertAlmostEqual(profile['p_no_loss'] + profile['p_one_lost'] + profile['p_abort'], 1.0, places=14)
        self.assertLessEqual(profile['p_two_lost'], profile['p_abort'])
        self.assertAlmostEqual(profile['p_no_loss'], 0.998 ** 100, places=14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.5, 1.0), st.integers(1, 10), st.integers(1, 12))
    def test_even_weights_are_binomial_p_trans(self, eta, n, m_ii):
        layout = LayoutCounts(n * m_ii, m_ii)
        weights = transmission_weights(eta, layout)
        expected = [math.comb(m_ii, i) * p_trans(eta, n, m_ii, i) for i in range(m_ii + 1)]
        np.testing.assert_allclose(weights, expected, rtol=1e-9, atol=1e-300)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.5, 1.0), st.integers(2, 40), st.integers(1, 8))
    def test_weights_and_abort_sum_to_one(self, eta, m_tot, m_ii):
        assume(m_ii <= m_tot)
        layout = LayoutCounts(m_tot, m_ii)
        head = sum(node_success_factors(eta, layout.n_prime))
        last = sum(node_success_factors(eta, layout.n_dblprime))
        total = head ** (m_ii - 1) * last
        self.assertAlmostEqual(transmission_weights(eta, layout).sum(), total, delta=1e-12)
        self.assertAlmostEqual(transmission_weights(eta, layout).sum() + abort_probability(eta, layout), 1.0,
                               delta=1e-12)

    def test_array_input_and_truncation(self):
        layout = LayoutCounts(10, 3)
        rows = transmission_weights(np.array([0.99, 0.999]), layout)
        self.assertEqual(rows.shape, (2, 4))
        np.testing.assert_allclose(rows[1], transmission_weights(0.999, layout), rtol=1e-14)
        np.testing.assert_allclose(transmission_weights(0.99, layout, 1), rows[0, :2], rtol=1e-14)

    def test_lossless_links(self):
        np.testing.assert_array_equal(transmission_weights(1.0, LayoutCounts(8, 4)), [1, 0, 0, 0, 0])
        self.assertEqual(abort_probability(1.0, LayoutCounts(8, 4)), 0.0)

    def test_p_trans_argument_checks(self):
        for args in [(1.5, 2, 3, 1), (0.9, 0, 3, 1), (0.9, 2, 3, 4)]:
            with self.assertRaises(InvalidArgumentError):
                p_trans(*args)


class NetworkConfigTests(SimpleTestCase):
    def config(self, **overrides):
        values = dict(l_tot_km=100.0, m_tot=50, m_ii=5, tree=TREE, noise=NoiseParams(1e-3))
        values.update(overrides)
        return NetworkConfig(**values)

    def test_derived_quantities(self):
        config = self.config()
        self.assertEqual(config.l0_km, 2.0)
        self.assertEqual(config.m_i, 45)
        self.assertEqual(config.layout, LayoutCounts(50, 5))
        self.assertEqual(config.eta_e, eta_e(TREE, config.mu))
        self.assertAlmostEqual(config.tree_time, 7060e-9, places=18)

    def test_accepts_plain_branch_tuples(self):
        self.assertEqual(self.config(tree=(4, 13, 4)).tree, TREE)

    def test_invalid_configurations(self):
        invalid = [
            dict(m_tot=200),
            dict(m_ii=26),
            dict(m_ii=0),
            dict(tree=(4, 13)),
            dict(tree=(10, 10, 10)),
            dict(kappa=-1.0),
            dict(type_ii_only=True),
        ]
        for overrides in invalid:
            with self.subTest(**{key: str(value) for key, value in overrides.items()}):
                with self.assertRaises(InvalidArgumentError):
                    self.config(**overrides)
        self.assertEqual(self.config(m_ii=50, type_ii_only=True).m_i, 0)

    def test_hardware_constants(self):
        with self.assertRaises(InvalidArgumentError):
            HardwareConstants(tau_ss=-1.0)
        for name in ('tau_ss', 'tau_ph', 'tau_meas', 'tau_tele'):
            with self.subTest(name=name):
                with self.assertRaises(InvalidArgumentError):
                    HardwareConstants(**{name: 0.0})
        with self.assertRaises(InvalidArgumentError):
            HardwareConstants(eta_d=0.0)
        self.assertEqual(HardwareConstants.from_dict({'eta_d': 0.5, 'unused': 1}).eta_d, 0.5)
        self.assertEqual(HardwareConstants.from_dict(DEFAULTS.as_dict()), DEFAULTS)


class RateTests(SimpleTestCase):
    def test_rate_without_erasure_correction(self):
        config = NetworkConfig(100.0, 50, 5, TREE, NoiseParams(1e-3))
        breakdown = skr(config, include_erasure=False, provider=depolarizing_summary)
        alpha1 = 1 - 10 * 1e-3
        clean = config.eta_e ** (5 * 10 * 5)
        expected = clean * secret_key_fraction(2 * (1 - alpha1 ** 5) / 3) / config.processing_time
        self.assertAlmostEqual(breakdown.skr / expected, 1.0, places=10)
        self.assertTrue(np.all(breakdown.weights[1:] == 0))

    def test_erasure_correction_only_adds_rate(self):
        config = NetworkConfig(300.0, 150, 10, TREE, NoiseParams(5e-4))
        with_erasure = skr(config, provider=depolarizing_summary)
        without = skr(config, include_erasure=False, provider=depolarizing_summary)
        self.assertGreater(with_erasure.skr, without.skr)
        self.assertAlmostEqual(with_erasure.terms.sum(), with_erasure.skr, delta=1e-9 * with_erasure.skr)
        self.assertEqual(with_erasure.eps_eff_no_erasure, without.eps_eff_no_erasure)

    def test_homogeneous_error_composition(self):
        self.assertAlmostEqual(homogeneous_error(1e-3, 1), 1e-3, places=15)
        self.assertAlmostEqual(1 - 4 * homogeneous_error(1e-3, 40) / 3, (1 - 4e-3 / 3) ** 40, places=14)

    def test_homogeneous_rate(self):
        l_tot, m_tot = 100.0, 50
        mu = 1 - math.exp(-2.0 / 20.0) * 0.95
        expected = secret_key_fraction(2 * homogeneous_error(1e-3, m_tot) / 3) * eta_e(TREE, mu) ** m_tot / 7060e-9
        self.assertAlmostEqual(homogeneous_skr(l_tot, m_tot, TREE, NoiseParams(1e-3)) / expected, 1.0, places=10)

    def test_cost(self):
        config = NetworkConfig(100.0, 50, 5, TREE, NoiseParams(1e-3), kappa=2.0)
        self.assertEqual(cost(config, 0.0), math.inf)
        self.assertAlmostEqual(cost(config, 10.0), 20.0 / (1e-9 * 100.0) * (45 + 2 * 5) / 10.0, delta=1e-3)
        np.testing.assert_array_equal(cost_value(np.array([0.0, 1.0]), 1.0, DEFAULTS, 1, 1, 0.0),
                                      [math.inf, 20.0 / 1e-9])


class SearchSpaceTests(SimpleTestCase):
    def test_grids(self):
        space = SearchSpace(1000.0)
        grid = space.m_tot_grid()
        self.assertEqual(space.max_m_tot, 1000)
        self.assertEqual(grid[:500], list(range(1, 501)))
        self.assertEqual(grid[-1], 1000)
        segments = space.segment_grid()
        self.assertEqual(segments[:20], list(range(1, 21)))
        self.assertLessEqual(segments[-1], 150)

    def test_layouts_respect_limits(self):
        space = SearchSpace(1000.0)
        for layout in space.layouts(997):
            self.assertLessEqual(layout.m_ii, 997 // 2)
            self.assertLessEqual(max(layout.n_prime, layout.n_dblprime), 150)
        self.assertEqual(SearchSpace(10.0, type_ii_only=True).layouts(7), [LayoutCounts(7, 7)])

    def test_too_short_for_a_type_ii_node(self):
        with self.assertRaises(InvalidArgumentError):
            SearchSpace(1.5)
        self.assertEqual(SearchSpace(1.5, type_ii_only=True).max_m_tot, 1)

    def test_admits(self):
        space = SearchSpace(20.0, max_photons=30)
        self.assertTrue(space.admits(10, 2, BranchingVector((2, 2, 2))))
        self.assertFalse(space.admits(21, 2, BranchingVector((2, 2, 2))))
        self.assertFalse(space.admits(10, 6, BranchingVector((2, 2, 2))))
        self.assertFalse(space.admits(10, 2, TREE))


class MinimizeTests(SimpleTestCase):
    noise = NoiseParams(1e-3)

    def brute_force(self, l_tot_km, max_photons, kappa=1.0):
        results = []
        trees = list(enumerate_trees(max_photons))
        for m_tot in range(2, int(l_tot_km) + 1):
            for m_ii, tree in itertools.product(range(1, m_tot // 2 + 1), trees):
                config = NetworkConfig(l_tot_km, m_tot, m_ii, tree, self.noise, kappa)
                rate = skr(config, provider=depolarizing_summary).skr
                results.append((rate, cost(config, rate)))
        return results

    def test_cost_optimum_matches_exhaustive_search(self):
        result = minimize(SearchSpace(7.0, max_photons=20), self.noise, provider=depolarizing_summary)
        best = min(c for _, c in self.brute_force(7.0, 20))
        self.assertAlmostEqual(result.cost / best, 1.0, places=9)
        self.assertAlmostEqual(result.skr, skr(result.config, provider=depolarizing_summary).skr,
                               delta=1e-9 * result.skr)
        self.assertGreater(result.evaluated, 0)

    def test_rate_optimum_matches_exhaustive_search(self):
        result = minimize(SearchSpace(7.0, max_photons=20), self.noise, objective='max_skr',
                          provider=depolarizing_summary)
        best = max(rate for rate, _ in self.brute_force(7.0, 20))
        self.assertAlmostEqual(result.skr / best, 1.0, places=9)

    def test_objectives_order_rate_and_cost(self):
        space = SearchSpace(7.0, max_photons=20)
        cheapest = minimize(space, self.noise, provider=depolarizing_summary)
        fastest = minimize(space, self.noise, objective='max_skr', provider=depolarizing_summary)
        self.assertGreaterEqual(fastest.skr, cheapest.skr)
        self.assertGreaterEqual(fastest.cost, cheapest.cost)

    def test_expensive_type_ii_nodes_raise_the_optimal_cost(self):
        space = SearchSpace(7.0, max_photons=20)
        cheap = minimize(space, self.noise, kappa=1.0, provider=depolarizing_summary)
        dear = minimize(space, self.noise, kappa=10.0, provider=depolarizing_summary)
        self.assertGreater(dear.cost, cheap.cost)
        self.assertLessEqual(dear.candidate.m_ii / dear.skr, cheap.candidate.m_ii / cheap.skr * (1 + 1e-9))

    def test_threads_do_not_change_the_optimum(self):
        space = SearchSpace(40.0, max_photons=40)
        serial = minimize(space, self.noise, kappa=2.0, provider=depolarizing_summary)
        threaded = minimize(space, self.noise, kappa=2.0, provider=depolarizing_summary, workers=3)
        self.assertEqual(serial.candidate, threaded.candidate)
        self.assertEqual(serial.cost, threaded.cost)

    def test_type_ii_only(self):
        result = minimize(SearchSpace(10.0, max_photons=20), self.noise, objective='cost_typeII_only',
                          provider=depolarizing_summary)
        self.assertEqual(result.candidate.m_ii, result.candidate.m_tot)
        self.assertTrue(result.config.type_ii_only)

    def test_homogeneous_baseline(self):
        result = minimize(SearchSpace(10.0, max_photons=20), self.noise, objective='homogeneous')
        self.assertEqual(result.candidate.m_ii, 0)
        self.assertIsNone(result.config)
        expected = homogeneous_skr(10.0, result.candidate.m_tot, result.candidate.tree, self.noise)
        self.assertAlmostEqual(result.skr / expected, 1.0, places=9)

    def test_no_feasible_configuration(self):
        with self.assertRaises(NoFeasibleConfigError):
            minimize(SearchSpace(7.0, max_photons=20), NoiseParams(0.3), provider=depolarizing_summary)
        with self.assertRaises(InvalidArgumentError):
            minimize(SearchSpace(7.0, max_photons=20), self.noise, objective='fastest')

    def test_degenerate_segments_are_skipped(self):
        def provider(params):
            if params.n > 2:
                raise DegenerateRecursionError('complex eigenvalues')
            return depolarizing_summary(params)

        result = minimize(SearchSpace(6.0, max_photons=20), self.noise, provider=provider)
        layout = LayoutCounts(result.candidate.m_tot, result.candidate.m_ii)
        self.assertEqual((layout.n_prime, layout.n_dblprime), (2, 2))


@tag('slow')
class HeadlineRateTests(SimpleTestCase):
    def test_rate_at_a_thousand_kilometres(self):
        result = minimize(SearchSpace(1000.0), NoiseParams(1e-3), kappa=1.0)
        self.assertGreaterEqual(result.skr, 2.75e3)
        self.assertLessEqual(result.skr, 11e3)

    def test_concatenation_beats_the_homogeneous_chain(self):
        baseline = minimize(SearchSpace(1000.0), NoiseParams(1e-3), objective='homogeneous')
        concatenated = minimize(SearchSpace(1000.0), NoiseParams(1e-3), kappa=1.0)
        self.assertLess(baseline.skr, 10.0)
        self.assertGreater(concatenated.skr, 5 * baseline.skr)

    def test_costlier_type_ii_nodes_are_used_sparingly(self):
        cheap = minimize(SearchSpace(1000.0), NoiseParams(1e-3), kappa=1.0)
        dear = minimize(SearchSpace(1000.0), NoiseParams(1e-3), kappa=10.0)
        self.assertLess(dear.candidate.m_ii, cheap.candidate.m_ii)

    def test_recursion_accuracy_over_noise_sweep(self):
        for eps_r in [1e-4, 2e-4, 3e-4, 5e-4, 1e-3, 2e-3, 3e-3, 5e-3, 1e-2]:
            check = recursion_accuracy(NodeChannelParams(8, NoiseParams(eps_r)), 125)
            with self.subTest(eps_r=eps_r):
                if check.exact <= 0.1261 and check.recursion is not None:
                    self.assertLessEqual(abs(check.recursion - check.exact) / check.exact, 0.15)
                if eps_r <= 3e-4:
                    self.assertGreaterEqual(check.naive / check.exact, 3.0)

    def test_recursion_is_exact_for_two_nodes(self):
        check = recursion_accuracy(NodeChannelParams(2, NoiseParams(1e-3)), 2)
        self.assertAlmostEqual(check.recursion, check.exact, delta=1e-9)


class RunConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = parse_data({})
        self.assertEqual(config.objective, 'cost')
        self.assertEqual(config.constants, HardwareConstants())
        self.assertEqual(config.max_photons, 300)
        self.assertEqual(config.out, '')
        self.assertEqual(loads(''), config)
        self.assertEqual(load(''), config)

    def test_partial_constants_fall_back_to_defaults(self):
        config = parse_data({'constants': {'eta_d': 0.5}, 'l_tot_km': [100, 200]})
        self.assertEqual(config.constants.eta_d, 0.5)
        self.assertEqual(config.constants.tau_ss, 100e-9)
        self.assertEqual(config.l_tot_km, (100.0, 200.0))

    def test_invalid_configurations(self):
        for data in [{'bogus': 1}, {'objective': 'fastest'}, {'l_tot_km': [0.5]}, {'constants': {'eta_d': 0}},
                     {'eps_r': []}, {'max_photons': 301}, {'constants': {'tau_meas': 0.0}}]:
            with self.subTest(data=data):
                with self.assertRaises(InvalidArgumentError):
                    parse_data(data)
        with self.assertRaisesMessage(InvalidArgumentError, 'bogus'):
            parse_data({'bogus': 1})

    def test_text_and_file_errors(self):
        with self.assertRaises(InvalidArgumentError):
            loads('{')
        with self.assertRaises(InvalidArgumentError):
            load('/nonexistent/run.json')

    def test_dump_and_overrides(self):
        config = parse_data({'eps_r': [1e-3], 'objective': 'max_skr'})
        self.assertEqual(loads(dumps(config)), config)
        updated = config.with_overrides(l_tot_km=[50.0], objective=None, include_erasure=False)
        self.assertEqual(updated.l_tot_km, (50.0,))
        self.assertEqual(updated.objective, 'max_skr')
        self.assertFalse(updated.include_erasure)


class ExportTests(SimpleTestCase):
    def test_format_value(self):
        self.assertEqual(format_value(math.inf), 'inf')
        self.assertEqual(format_value(1e-3), '0.001')
        self.assertEqual(format_value(None), '')
        self.assertEqual(format_value(True), 'true')
        self.assertEqual(format_value(12), '12')

    def test_infeasible_rows(self):
        row = rate_row(1000.0, 0.01, 1.0, diagnostic='no key')
        self.assertEqual((row['skr_hz'], row['cost'], row['diagnostic']), (0.0, math.inf, 'no key'))
        lines = render_csv(RATE_HEADER, [row]).splitlines()
        self.assertEqual(lines[0], ','.join(RATE_HEADER))
        self.assertEqual(lines[1], '1000,0,inf,,,,,,,0.01,1,no key')
        self.assertEqual(baseline_row(1000.0, 0.01)['skr_x5_hz'], 0.0)

    def test_baseline_rows_carry_the_scaled_rate(self):
        result = minimize(SearchSpace(10.0, max_photons=20), NoiseParams(1e-3), objective='homogeneous')
        row = baseline_row(10.0, 1e-3, result)
        self.assertEqual(row['skr_x5_hz'], 5 * result.skr)
        self.assertEqual(row['m_tot'], result.candidate.m_tot)
        self.assertEqual(render_csv(BASELINE_HEADER, [row]).splitlines()[0], ','.join(BASELINE_HEADER))

    def test_companion_paths(self):
        self.assertEqual(baseline_path('out/run.csv'), Path('out/run_baseline.csv'))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_manifest(Path(tmp) / 'run.csv', 'optimize', 7, {'b': 1, 'a': 2})
            manifest = json.loads(path.read_text())
            self.assertEqual(path.name, 'run.csv.manifest.json')
            self.assertEqual(manifest['seed'], 7)
            self.assertIn('numpy', manifest['versions'])
            self.assertEqual(list(manifest), sorted(manifest))


class RecordTests(TestCase):
    def test_record_run_stores_points(self):
        rows = [rate_row(1000.0, 0.01, 1.0, diagnostic='no key')]
        run = record_run('optimize', {'eps_r': [0.01]}, 3, 'out.csv', rows)
        self.assertEqual(SweepRun.objects.count(), 1)
        point = run.points.get()
        self.assertIsNone(point.cost)
        self.assertEqual(point.diagnostic, 'no key')

    @override_settings(REPEATER_PERSIST_RESULTS=False)
    def test_persistence_can_be_disabled(self):
        self.assertIsNone(record_run('optimize', {}, None, 'out.csv'))
        self.assertEqual(SweepRun.objects.count(), 0)


class SummaryStoreTests(TestCase):
    def setUp(self):
        clear_summary_cache()
        self.params = NodeChannelParams(3, NoiseParams(2e-3))
        self.summary = summary(3, 0.97, 0.941, 0.05, eps_r=2e-3)

    def tearDown(self):
        clear_summary_cache()

    def test_loads_stored_summary(self):
        store_summary(self.summary)
        self.assertEqual(summary_from_record(ChannelSummaryRecord.objects.get()), self.summary)
        self.assertEqual(cached_channel_summary(self.params), self.summary)
        self.assertEqual(peek_summary(self.params), self.summary)

    def test_store_replaces_existing_row(self):
        store_summary(self.summary)
        store_summary(summary(3, 0.96, 0.92, 0.06, eps_r=2e-3))
        self.assertEqual(ChannelSummaryRecord.objects.get().alpha1, 0.96)

    @override_settings(REPEATER_PERSIST_RESULTS=False)
    def test_memory_cache_without_persistence(self):
        seed_summary_cache(self.summary)
        self.assertEqual(cached_channel_summary(self.params), self.summary)
        self.assertFalse(ChannelSummaryRecord.objects.exists())


class SweepEtaCommandTests(SimpleTestCase):
    def test_writes_per_node_probabilities(self):
        out = StringIO()
        call_command('sweep_eta', eta_e=0.998, n_max=3, stdout=out)
        rows = list(csv.DictReader(StringIO(out.getvalue())))
        self.assertEqual([row['n'] for row in rows], ['1', '2', '3'])
        self.assertAlmostEqual(float(rows[0]['p_no_loss']), 0.998 ** 5, places=9)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(CommandError):
            call_command('sweep_eta', eta_e=1.5, stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('sweep_eta', n_max=0, stdout=StringIO())

    def test_reads_output_and_seed_from_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'sweep.csv'
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'out': str(path), 'seed': 12}))
            call_command('sweep_eta', config=str(config), n_max=2, stdout=StringIO())
            rows = list(csv.DictReader(StringIO(path.read_text())))
            self.assertEqual(len(rows), 2)
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual((manifest['command'], manifest['seed']), ('sweep_eta', 12))

    def test_rejects_invalid_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.json'
            config.write_text('{')
            with self.assertRaises(CommandError):
                call_command('sweep_eta', config=str(config), stdout=StringIO())


class ValidateRecursionCommandTests(TestCase):
    def test_rejects_bad_segment_length(self):
        with self.assertRaises(CommandError):
            call_command('validate_recursion', n=0, stdout=StringIO())

    def test_rejects_invalid_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'eps_r': []}))
            with self.assertRaises(CommandError):
                call_command('validate_recursion', config=str(config), stdout=StringIO())

    @tag('slow')
    def test_reads_noise_and_output_from_configuration(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'recursion.csv'
            config = Path(tmp) / 'run.json'
            config.write_text(json.dumps({'eps_r': [1e-3], 'seed': 3, 'out': str(path)}))
            call_command('validate_recursion', n=2, m_ii=2, config=str(config), stdout=StringIO())
            rows = list(csv.DictReader(StringIO(path.read_text())))
            self.assertEqual([row['eps_r'] for row in rows], ['0.001'])
            manifest = json.loads(Path(f'{path}.manifest.json').read_text())
            self.assertEqual(manifest['seed'], 3)
            self.assertEqual(SweepRun.objects.get().seed, 3)

    @tag('slow')
    def test_writes_comparison_rows(self):
        out = StringIO()
        call_command('validate_recursion', n=2, m_ii=2, eps_r=[1e-3], stdout=out)
        row = next(csv.DictReader(StringIO(out.getvalue())))
        self.assertAlmostEqual(float(row['eps_eff_recursion']), float(row['eps_eff_exact']), delta=1e-8)


class OptimizeCommandTests(TestCase):
    def setUp(self):
        clear_summary_cache()
        for n in range(1, 8):
            seed_summary_cache(depolarizing_summary(NodeChannelParams(n, NoiseParams(1e-3))))
        self.tmp = tempfile.TemporaryDirectory()
        self.config = Path(self.tmp.name) / 'run.json'
        self.config.write_text(json.dumps({
            'l_tot_km': [7.0, 1.5], 'eps_r': [1e-3], 'kappa': [1.0], 'max_photons': 20, 'seed': 5,
        }))

    def tearDown(self):
        clear_summary_cache()
        self.tmp.cleanup()

    def test_writes_rates_baseline_and_records(self):
        out = Path(self.tmp.name) / 'rates.csv'
        stderr = StringIO()
        call_command('optimize', config=str(self.config), out=str(out), baseline=True,
                     stdout=StringIO(), stderr=stderr)
        rows = list(csv.DictReader(StringIO(out.read_text())))
        self.assertEqual(len(rows), 2)
        self.assertGreater(float(rows[0]['skr_hz']), 0)
        self.assertEqual(rows[1]['skr_hz'], '0')
        self.assertEqual(rows[1]['cost'], 'inf')
        self.assertIn('1.5', stderr.getvalue())
        self.assertTrue(Path(f'{out}.manifest.json').exists())
        baseline = list(csv.DictReader(StringIO((Path(self.tmp.name) / "rates_baseline.csv").read_text())))
        self.assertEqual(len(baseline), 2)
        self.assertEqual(SweepRun.objects.count(), 2)
        self.assertEqual(RatePoint.objects.filter(run__command='optimize').count(), 2)

    def test_flags_override_configuration(self):
        out = Path(self.tmp.name) / 'override.csv'
        call_command('optimize', config=str(self.config), out=str(out), l_tot=[7.0], seed=8, stdout=StringIO())
        rows = list(csv.DictReader(StringIO(out.read_text())))
        self.assertEqual([row['L_tot_km'] for row in rows], ['7'])
        manifest = json.loads(Path(f'{out}.manifest.json').read_text())
        self.assertEqual(manifest['seed'], 8)
        self.assertEqual(manifest['config']['max_photons'], 20)

    def test_requires_output_path(self):
        with self.assertRaises(CommandError):
            call_command('optimize', config=str(self.config), stdout=StringIO())

    def test_rejects_invalid_configuration(self):
        self.config.write_text(json.dumps({'objective': 'fastest'}))
        with self.assertRaises(CommandError):
            call_command('optimize', config=str(self.config), out='x.csv', stdout=StringIO())
