"""
Secret-key-rate model of the concatenated repeater chain.

All lengths are in km and all times in seconds.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, xlogy

from stabilizer.channels import NoiseParams
from stabilizer.exceptions import InvalidArgumentError
from stabilizer.five_qubit import FLAGGED_CIRCUITS, UNFLAGGED_CIRCUITS, SubCircuit
from stabilizer.node_sim import ChannelSummary, NodeChannelParams, SummaryProvider, channel_summary
from trees.tree_code import BranchingVector, LinkParams, eta_e, photon_count, tree_generation_time

from .fidelity import LayoutCounts, effective_errors

logger = logging.getLogger(__name__)

MIN_LINK_KM = 1.0
MAX_TREE_PHOTONS = 300
TREE_DEPTH = 2
PROBABILITY_SUM_TOL = 1e-9
LENGTH_TOL = 1e-9


@dataclass(frozen=True)
class HardwareConstants:
    tau_ss: float = 100e-9
    tau_ph: float = 1e-9
    tau_meas: float = 1e-6
    tau_tele: float = 1e-6
    l_att_km: float = 20.0
    eta_d: float = 0.95

    def __post_init__(self):
        for name in ('tau_ss', 'tau_ph', 'tau_meas', 'tau_tele'):
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f'{name} must be positive, got {getattr(self, name)}')
        if self.l_att_km <= 0:
            raise InvalidArgumentError(f'l_att_km must be positive, got {self.l_att_km}')
        if not 0 < self.eta_d <= 1:
            raise InvalidArgumentError(f'eta_d must lie in (0, 1], got {self.eta_d}')

    @classmethod
    def from_dict(cls, values: dict) -> 'HardwareConstants':
        return cls(**{key: float(values[key]) for key in cls.__dataclass_fields__ if key in values})

    def as_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.__dataclass_fields__}


@dataclass(frozen=True)
class NetworkConfig:
    """
    One candidate network: m_tot equidistant nodes after the start node, m_ii
    of them TYPE II, every link carrying ``tree``.
    """
    l_tot_km: float
    m_tot: int
    m_ii: int
    tree: BranchingVector
    noise: NoiseParams
    kappa: float = 1.0
    constants: HardwareConstants = field(default_factory=HardwareConstants)
    type_ii_only: bool = False

    def __post_init__(self):
        if not isinstance(self.tree, BranchingVector):
            object.__setattr__(self, 'tree', BranchingVector(tuple(self.tree)))
        if self.m_tot < 1:
            raise InvalidArgumentError(f'm_tot must be >= 1, got {self.m_tot}')
        if self.l0_km < MIN_LINK_KM - LENGTH_TOL:
            raise InvalidArgumentError(f'Link length {self.l0_km:.4g} km is below {MIN_LINK_KM} km')
        if self.type_ii_only:
            if self.m_ii != self.m_tot:
                raise InvalidArgumentError(f'TYPE-II-only layouts need m_II = m_tot, got {self.m_ii} != {self.m_tot}')
        elif not 1 <= self.m_ii <= self.m_tot // 2:
            raise InvalidArgumentError(f'm_II must lie in [1, {self.m_tot // 2}], got {self.m_ii}')
        if self.tree.depth != TREE_DEPTH:
            raise InvalidArgumentError(f'Tree depth must be {TREE_DEPTH}, got {self.tree}')
        if photon_count(self.tree) > MAX_TREE_PHOTONS:
            raise InvalidArgumentError(f'{self.tree} uses {photon_count(self.tree)} photons, above {MAX_TREE_PHOTONS}')
        if self.kappa < 0:
            raise InvalidArgumentError(f'kappa must be >= 0, got {self.kappa}')

    @property
    def l0_km(self) -> float:
        return self.l_tot_km / self.m_tot

    @property
    def m_i(self) -> int:
        return self.m_tot - self.m_ii

    @property
    def layout(self) -> LayoutCounts:
        return LayoutCounts(self.m_tot, self.m_ii)

    @property
    def link(self) -> LinkParams:
        return LinkParams(self.l0_km, self.constants.l_att_km, self.constants.eta_d)

    @property
    def mu(self) -> float:
        return self.link.mu

    @property
    def eta_e(self) -> float:
        return eta_e(self.tree, self.mu)

    @property
    def tree_time(self) -> float:
        return tree_generation_time(self.tree, self.constants.tau_ph, self.constants.tau_ss)

    @property
    def processing_time(self) -> float:
        return node_processing_time(self.tree_time, self.constants)


# ---------------------------------------------------------------------------
# Transmission probabilities
# ---------------------------------------------------------------------------

def node_success_factors(eta: float, n: int) -> tuple[float, float]:
    """(all five trees decoded, exactly one lost) over n links."""
    survive = eta ** n
    return survive ** 5, 5.0 * survive ** 4 * (1.0 - survive)


def node_loss_profile(eta: float, n: int) -> dict:
    """Per-node probabilities of losing none, one or two of the five trees, and the success totals."""
    clean, single = node_success_factors(eta, n)
    survive = eta ** n
    double = 10.0 * survive ** 3 * (1.0 - survive) ** 2
    return {
        'p_no_loss': clean,
        'p_one_lost': single,
        'p_two_lost': double,
        'p_total_1erasure': clean + single,
        'p_total_2erasure': clean + single + double,
        'p_abort': 1.0 - clean - single,
    }


def p_trans(eta: float, n: int, m_ii: int, i: int) -> float:
    """Probability that i given TYPE II nodes each see exactly one lost tree and the rest none."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f'eta_e must lie in [0, 1], got {eta}')
    if n < 1 or m_ii < 0:
        raise InvalidArgumentError(f'Need n >= 1 and m_II >= 0, got n={n}, m_II={m_ii}')
    if not 0 <= i <= m_ii:
        raise InvalidArgumentError(f'Erasure count must lie in [0, {m_ii}], got {i}')
    clean, single = node_success_factors(eta, n)
    return clean ** (m_ii - i) * single ** i


def _log_factors(eta, n: int) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide='ignore'):
        log_eta = np.log(eta)
        log_clean = 5 * n * log_eta
        log_single = np.log(5.0) + 4 * n * log_eta + np.log(-np.expm1(n * log_eta))
    return log_clean, log_single


def _scaled(count: np.ndarray, log_value) -> np.ndarray:
    """count * log_value with 0 * (-inf) taken as 0."""
    with np.errstate(invalid='ignore'):
        return np.where(count == 0, 0.0, count * log_value)


def _log_binomial(m: int, k: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)


def transmission_weights(eta, layout: LayoutCounts, i_max: Optional[int] = None) -> np.ndarray:
    """
    Probability of exactly i single-erasure TYPE II nodes and no aborted node,
    for i = 0 .. min(i_max, m_II); the binomial multiplicity is included.

    ``eta`` may be an array of tree efficiencies, giving one row per entry.
    Uneven layouts treat the n'' segment as independent of the n' ones.
    """
    scalar = np.ndim(eta) == 0
    etas = np.asarray(eta, dtype=float).reshape(-1, 1)
    if np.any((etas < 0) | (etas > 1)):
        raise InvalidArgumentError('eta_e must lie in [0, 1]')
    m = layout.m_ii
    top = m if i_max is None else min(i_max, m)
    i = np.arange(top + 1)
    log_clean, log_single = _log_factors(etas, layout.n_prime)
    if layout.is_even:
        logs = _log_binomial(m, i) + _scaled(i, log_single) + _scaled(m - i, log_clean)
    else:
        last_clean, last_single = _log_factors(etas, layout.n_dblprime)
        with np.errstate(invalid='ignore'):
            last_kept = (_log_binomial(m - 1, i) + last_clean
                         + _scaled(i, log_single) + _scaled(m - 1 - i, log_clean))
            last_erased = (_log_binomial(m - 1, i - 1) + last_single
                           + _scaled(i - 1, log_single) + _scaled(m - i, log_clean))
        last_kept = np.where(i <= m - 1, last_kept, -np.inf)
        last_erased = np.where(i >= 1, last_erased, -np.inf)
        logs = np.logaddexp(last_kept, last_erased)
    weights = np.exp(logs)
    return weights[0] if scalar else weights


def abort_probability(eta: float, layout: LayoutCounts) -> float:
    """Some TYPE II node lost two or more trees."""
    return float(max(0.0, 1.0 - transmission_weights(eta, layout).sum()))


# ---------------------------------------------------------------------------
# Six-state key fraction
# ---------------------------------------------------------------------------

def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / np.log(2.0)


def _raw_key_fraction(q):
    q = np.asarray(q, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        inner = np.clip((1.0 - 1.5 * q) / (1.0 - q), 0.0, 1.0)
    return (1.0 - q) * (1.0 - binary_entropy(inner)) - binary_entropy(q)


def secret_key_fractions(q) -> np.ndarray:
    """Vectorised secret_key_fraction."""
    # the fraction is already zero well below q = 1/2
    return np.clip(_raw_key_fraction(np.minimum(q, 0.5)), 0.0, 1.0)


def secret_key_fraction(q: float) -> float:
    """Asymptotic six-state key fraction at QBER ``q``."""
    if not 0.0 <= q <= 1.0:
        raise InvalidArgumentError(f'QBER must lie in [0, 1], got {q}')
    return float(secret_key_fractions(q))


def six_state_threshold() -> float:
    """QBER at which the six-state key fraction drops to zero."""
    return float(brentq(lambda q: float(_raw_key_fraction(q)), 0.05, 0.2, xtol=1e-12))


# ---------------------------------------------------------------------------
# Timing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperationCounts:
    local: int
    teleported: int
    measurements: int

    def __add__(self, other: 'OperationCounts') -> 'OperationCounts':
        return OperationCounts(self.local + other.local, self.teleported + other.teleported,
                               self.measurements + other.measurements)

    def time(self, c: HardwareConstants) -> float:
        return self.local * c.tau_ss + self.teleported * c.tau_tele + self.measurements * c.tau_meas


def circuit_counts(circuit: SubCircuit, local_qubit: int = 1) -> OperationCounts:
    """Gates and the single ancilla measurement of one syndrome sub-circuit."""
    return OperationCounts(circuit.local_gate_count(local_qubit), circuit.teleported_gate_count(local_qubit), 1)


def _total(counts: Sequence[OperationCounts]) -> OperationCounts:
    return sum(counts[1:], counts[0])


def flagged_counts(local_qubit: int = 1) -> tuple[OperationCounts, ...]:
    return tuple(circuit_counts(circuit, local_qubit) for circuit in FLAGGED_CIRCUITS)


def unflagged_counts(local_qubit: int = 1) -> OperationCounts:
    return _total([circuit_counts(circuit, local_qubit) for circuit in UNFLAGGED_CIRCUITS])


def node_processing_time(tree_time: float, c: HardwareConstants, local_qubit: int = 1) -> float:
    """Tree generation plus the longest syndrome sequence (all flagged circuits, then the unflagged set)."""
    counts = _total(flagged_counts(local_qubit)) + unflagged_counts(local_qubit)
    return tree_time + counts.local * c.tau_ss + counts.teleported * c.tau_tele + counts.measurements * c.tau_meas


def expected_ft_time(p: Sequence[float], c: HardwareConstants, local_qubit: int = 1) -> float:
    """
    Mean duration of the syndrome sequence given the exit probabilities.

    ``p[k-1]`` (k = 1..4) is the probability of leaving after flagged
    sub-circuit k, which is then followed by the unflagged set; ``p[4]`` is the
    probability of running all four flagged sub-circuits without leaving.
    """
    if len(p) != 5:
        raise InvalidArgumentError(f'Expected 5 exit probabilities, got {len(p)}')
    if any(value < 0 for value in p) or abs(math.fsum(p) - 1.0) > PROBABILITY_SUM_TOL:
        raise InvalidArgumentError(f'Exit probabilities must be nonnegative and sum to 1, got {list(p)}')
    flagged = flagged_counts(local_qubit)
    unflagged = unflagged_counts(local_qubit)
    terms = [p[4] * _total(flagged).time(c)]
    for k in range(1, 5):
        terms.append(p[k - 1] * (unflagged + _total(flagged[:k])).time(c))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Secret key rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateBreakdown:
    """SKR and its per-erasure-count terms; arrays are indexed by i = 0 .. m_II."""
    skr: float
    processing_time: float
    eta_e: float
    weights: np.ndarray
    effective_errors: np.ndarray
    key_fractions: np.ndarray

    @property
    def terms(self) -> np.ndarray:
        return self.weights * self.key_fractions / self.processing_time

    @property
    def eps_eff_no_erasure(self) -> float:
        return float(self.effective_errors[0])


def rate_terms(summary: ChannelSummary, layout: LayoutCounts, eta: float, processing_time: float,
               include_erasure: bool = True, provider: SummaryProvider = channel_summary) -> RateBreakdown:
    """SKR from an n' channel summary, a layout, the per-link tree efficiency and tau_tot."""
    if processing_time <= 0:
        raise InvalidArgumentError(f'Processing time must be positive, got {processing_time}')
    weights = transmission_weights(eta, layout)
    errors = effective_errors(summary, layout, provider)
    fractions = secret_key_fractions(2.0 * errors / 3.0)
    if not include_erasure:
        weights = np.where(np.arange(layout.m_ii + 1) == 0, weights, 0.0)
    skr_value = float(np.dot(weights, fractions) / processing_time)
    return RateBreakdown(skr_value, processing_time, eta, weights, errors, fractions)


def skr(config: NetworkConfig, include_erasure: bool = True,
        provider: SummaryProvider = channel_summary) -> RateBreakdown:
    layout = config.layout
    summary = provider(NodeChannelParams(layout.n_prime, config.noise))
    breakdown = rate_terms(summary, layout, config.eta_e, config.processing_time, include_erasure, provider)
    logger.debug('SKR L=%g m_tot=%d m_II=%d %s eps_r=%g: %.6g Hz',
                 config.l_tot_km, config.m_tot, config.m_ii, config.tree, config.noise.epsilon_r, breakdown.skr)
    return breakdown


def homogeneous_error(eps_r: float, m_tot: int) -> float:
    """m_tot re-encodings composed as depolarizing channels."""
    return 0.75 * (1.0 - (1.0 - 4.0 * eps_r / 3.0) ** m_tot)


def homogeneous_skr(l_tot_km: float, m_tot: int, tree: BranchingVector, noise: NoiseParams,
                    constants: Optional[HardwareConstants] = None) -> float:
    """Rate of a chain of TYPE I nodes only, paced by the tree generation time."""
    constants = constants or HardwareConstants()
    if m_tot < 1:
        raise InvalidArgumentError(f'm_tot must be >= 1, got {m_tot}')
    link = LinkParams(l_tot_km / m_tot, constants.l_att_km, constants.eta_d)
    tree_time = tree_generation_time(tree, constants.tau_ph, constants.tau_ss)
    q = 2.0 * homogeneous_error(noise.epsilon_r, m_tot) / 3.0
    return secret_key_fraction(q) * eta_e(tree, link.mu) ** m_tot / tree_time
