"""
Fidelity of the logical qubit after m TYPE II nodes and the resulting
effective error, with and without erasure-corrected nodes.

alpha_m obeys alpha_m = alpha1 alpha_{m-1} + (alpha2 - alpha1^2) alpha_{m-2},
alpha_0 = 1, so everything here is expressed through alpha1 and alpha2 of the
single-node channel.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from stabilizer.exceptions import DegenerateRecursionError, InvalidArgumentError
from stabilizer.node_sim import (
    ChannelSummary,
    NodeChannelParams,
    SummaryProvider,
    channel_summary,
    exact_chain_fidelity,
)

logger = logging.getLogger(__name__)

ZETA_SQUARED_TOL = 1e-12
UNIT_ALPHA_TOL = 1e-14


@dataclass(frozen=True)
class LayoutCounts:
    """
    m_tot nodes after the start node, m_ii of them TYPE II.

    The first m_ii - 1 segments span n_prime links each, the last n_dblprime.
    """
    m_tot: int
    m_ii: int

    def __post_init__(self):
        if self.m_tot < 1:
            raise InvalidArgumentError(f'm_tot must be >= 1, got {self.m_tot}')
        if not 1 <= self.m_ii <= self.m_tot:
            raise InvalidArgumentError(f'm_II must lie in [1, {self.m_tot}], got {self.m_ii}')

    @property
    def n_prime(self) -> int:
        return self.m_tot // self.m_ii

    @property
    def n_dblprime(self) -> int:
        return self.m_tot - self.n_prime * (self.m_ii - 1)

    @property
    def is_even(self) -> bool:
        return self.m_tot % self.m_ii == 0

    @property
    def m_i(self) -> int:
        return self.m_tot - self.m_ii


def _check_alphas(alpha1: float, alpha2: float) -> float:
    zeta_squared = 4.0 * alpha2 - 3.0 * alpha1 ** 2
    if zeta_squared < -ZETA_SQUARED_TOL:
        raise DegenerateRecursionError(f'4*alpha2 - 3*alpha1^2 = {zeta_squared:.3e} < 0')
    return max(zeta_squared, 0.0)


def _companion(alpha1: float, alpha2: float) -> np.ndarray:
    return np.array([[alpha1, alpha2 - alpha1 ** 2], [1.0, 0.0]])


def fidelity_closed_form(alpha1: float, alpha2: float, m: int) -> float:
    """F_m through a power of the 2x2 companion matrix of the recurrence."""
    if m < 0:
        raise InvalidArgumentError(f'm must be >= 0, got {m}')
    _check_alphas(alpha1, alpha2)
    if m == 0:
        return 1.0
    if m == 1:
        return float(alpha1)
    if 1.0 - alpha1 < UNIT_ALPHA_TOL:
        return 1.0
    power = np.linalg.matrix_power(_companion(alpha1, alpha2), m - 1)
    value = power[0, 0] * alpha1 + power[0, 1]
    return float(min(1.0, max(0.0, value)))


def fidelity_recurrence(alpha1: float, alpha2: float, m: int) -> float:
    """F_m by direct iteration; O(m)."""
    if m < 0:
        raise InvalidArgumentError(f'm must be >= 0, got {m}')
    previous, current = 1.0, float(alpha1)
    if m == 0:
        return previous
    coupling = alpha2 - alpha1 ** 2
    for _ in range(m - 1):
        previous, current = current, alpha1 * current + coupling * previous
    return current


def fidelity_boxed(alpha1: float, alpha2: float, m: int) -> float:
    """[(a1 + z)^(m+1) - (a1 - z)^(m+1)] / (2^(m+1) z), with the z -> 0 limit."""
    zeta = math.sqrt(_check_alphas(alpha1, alpha2))
    if zeta == 0.0:
        return (m + 1) * (alpha1 / 2.0) ** m
    return ((alpha1 + zeta) ** (m + 1) - (alpha1 - zeta) ** (m + 1)) / (2.0 ** (m + 1) * zeta)


def fidelity_sequence(alpha1: float, alpha2: float, m_max: int) -> np.ndarray:
    """F_0 .. F_m_max as an array."""
    _check_alphas(alpha1, alpha2)
    values = np.empty(m_max + 1)
    values[0] = 1.0
    if m_max >= 1:
        values[1] = alpha1
    coupling = alpha2 - alpha1 ** 2
    for m in range(2, m_max + 1):
        values[m] = alpha1 * values[m - 1] + coupling * values[m - 2]
    return np.clip(values, 0.0, 1.0)


def naive_effective_error(alpha1: float, m: int) -> float:
    """1 - alpha1^m: the recursion with the two-node correlation dropped."""
    if m < 0:
        raise InvalidArgumentError(f'm must be >= 0, got {m}')
    return 1.0 - alpha1 ** m


def _segment_summaries(summary: ChannelSummary, layout: LayoutCounts,
                       provider: SummaryProvider) -> tuple[ChannelSummary, ChannelSummary]:
    if summary.n != layout.n_prime:
        raise InvalidArgumentError(f'Summary is for n={summary.n}, layout needs n\'={layout.n_prime}')
    if layout.is_even:
        return summary, summary
    return summary, provider(NodeChannelParams(layout.n_dblprime, summary.noise, summary.local_qubit))


def effective_error(summary: ChannelSummary, layout: LayoutCounts, i: int,
                    provider: SummaryProvider = channel_summary) -> float:
    """
    Residual error after m_II TYPE II nodes, i of which corrected a single erasure.

    ``summary`` is the channel of a node spanning n' links; the n'' summary of an
    uneven layout is fetched from ``provider``.
    """
    if not 0 <= i <= layout.m_ii:
        raise InvalidArgumentError(f'Erasure count must lie in [0, {layout.m_ii}], got {i}')
    return float(effective_errors(summary, layout, provider)[i])


def effective_errors(summary: ChannelSummary, layout: LayoutCounts,
                     provider: SummaryProvider = channel_summary) -> np.ndarray:
    """effective_error for every erasure count i = 0 .. m_II."""
    primary, last = _segment_summaries(summary, layout, provider)
    m = layout.m_ii
    i = np.arange(m + 1)
    survival = 1.0 - primary.eps_loss
    if layout.is_even:
        fidelity = fidelity_sequence(primary.alpha1, primary.alpha2, m)
        values = 1.0 - survival ** i * fidelity[m - i]
    else:
        fidelity = fidelity_sequence(primary.alpha1, primary.alpha2, m - 1)
        values = np.empty(m + 1)
        head = i[:-1]
        values[:-1] = 1.0 - survival ** head * fidelity[m - 1 - head] * last.alpha1
        values[-1] = 1.0 - survival ** (m - 1) * (1.0 - last.eps_loss)
    return np.clip(values, 0.0, 1.0)


@dataclass(frozen=True)
class RecursionCheck:
    eps_r: float
    exact: float
    recursion: Optional[float]
    naive: float


def recursion_accuracy(params: NodeChannelParams, m: int,
                       provider: SummaryProvider = channel_summary) -> RecursionCheck:
    """Effective error after m equal nodes: exact superoperator power, recursion and naive estimate."""
    exact = 1.0 - exact_chain_fidelity(params, m, method='superoperator')
    try:
        summary = provider(params)
    except DegenerateRecursionError as exc:
        logger.warning('No recursion estimate at eps_r=%g: %s', params.noise.epsilon_r, exc)
        alpha1 = exact_chain_fidelity(params, 1, method='iterate')
        return RecursionCheck(params.noise.epsilon_r, exact, None, naive_effective_error(alpha1, m))
    recursion = 1.0 - fidelity_closed_form(summary.alpha1, summary.alpha2, m)
    return RecursionCheck(params.noise.epsilon_r, exact, recursion, naive_effective_error(summary.alpha1, m))
