"""
Cost minimisation over node spacing, TYPE II placement and tree shape.

Candidates are scanned on a grid: every m_tot up to ``full_enumeration_limit``
and geometric steps beyond, and for each m_tot the m_II values whose segment
length n' lies on the segment grid. For every layout the Pareto-efficient
trees (faster generation or higher eta_e) are scored in one vectorised pass,
after which the incumbent is refined by a hill climb over single-step moves.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from stabilizer.channels import NoiseParams
from stabilizer.exceptions import DegenerateRecursionError, InvalidArgumentError
from stabilizer.node_sim import NodeChannelParams, SummaryProvider, channel_summary
from trees.tree_code import (
    BranchingVector,
    LinkParams,
    enumerate_trees,
    eta_e_depth2,
    photon_count,
    tree_generation_time,
)

from .exceptions import NoFeasibleConfigError
from .fidelity import LayoutCounts, effective_errors
from .rate import (
    MAX_TREE_PHOTONS,
    MIN_LINK_KM,
    TREE_DEPTH,
    HardwareConstants,
    NetworkConfig,
    homogeneous_error,
    node_processing_time,
    secret_key_fractions,
    skr,
    transmission_weights,
)

logger = logging.getLogger(__name__)

OBJECTIVES = ('cost', 'max_skr', 'cost_typeII_only', 'homogeneous')
DENSE_SEGMENTS = 20
SEGMENT_RATIO = 1.15
M_TOT_RATIO = 1.02
MAX_CLIMB_STEPS = 200


@dataclass(frozen=True)
class SearchSpace:
    l_tot_km: float
    max_photons: int = MAX_TREE_PHOTONS
    min_link_km: float = MIN_LINK_KM
    max_segment_links: int = 150
    full_enumeration_limit: int = 500
    type_ii_only: bool = False

    def __post_init__(self):
        if self.min_link_km < MIN_LINK_KM:
            raise InvalidArgumentError(f'min_link_km must be >= {MIN_LINK_KM}, got {self.min_link_km}')
        if self.max_photons < 1 or self.max_photons > MAX_TREE_PHOTONS:
            raise InvalidArgumentError(f'max_photons must lie in [1, {MAX_TREE_PHOTONS}], got {self.max_photons}')
        if self.max_segment_links < 1 or self.full_enumeration_limit < 1:
            raise InvalidArgumentError('Segment and enumeration limits must be >= 1')
        if self.max_m_tot < (1 if self.type_ii_only else 2):
            raise InvalidArgumentError(f'L_tot = {self.l_tot_km} km leaves no room for a TYPE II node')

    @property
    def max_m_tot(self) -> int:
        # guard against 1000.0 / 1.0 landing just below an integer
        return int(math.floor(self.l_tot_km / self.min_link_km + 1e-9))

    def m_tot_grid(self) -> list[int]:
        values = list(range(1, min(self.max_m_tot, self.full_enumeration_limit) + 1))
        current = float(self.full_enumeration_limit)
        while True:
            current = max(current * M_TOT_RATIO, current + 1)
            if int(current) > self.max_m_tot:
                break
            values.append(int(current))
        if values[-1] != self.max_m_tot:
            values.append(self.max_m_tot)
        return sorted(set(values))

    def segment_grid(self) -> list[int]:
        values = list(range(1, min(DENSE_SEGMENTS, self.max_segment_links) + 1))
        current = float(DENSE_SEGMENTS)
        while True:
            current = max(current * SEGMENT_RATIO, current + 1)
            if int(current) > self.max_segment_links:
                break
            values.append(int(current))
        return sorted(set(values))

    def layouts(self, m_tot: int) -> list[LayoutCounts]:
        """Layouts of m_tot nodes whose segments are all at most max_segment_links long."""
        if self.type_ii_only:
            return [LayoutCounts(m_tot, m_tot)]
        if m_tot < 2:
            return []
        chosen = sorted({m_tot // n for n in self.segment_grid() if 1 <= m_tot // n <= m_tot // 2})
        layouts = [LayoutCounts(m_tot, m_ii) for m_ii in chosen]
        return [layout for layout in layouts if layout.n_dblprime <= self.max_segment_links]

    def admits(self, m_tot: int, m_ii: int, tree: BranchingVector) -> bool:
        if not 1 <= m_tot <= self.max_m_tot:
            return False
        if self.type_ii_only:
            if m_ii != m_tot:
                return False
        elif not 1 <= m_ii <= m_tot // 2:
            return False
        layout = LayoutCounts(m_tot, m_ii)
        return (max(layout.n_prime, layout.n_dblprime) <= self.max_segment_links
                and tree.depth == TREE_DEPTH and photon_count(tree) <= self.max_photons)


@dataclass(frozen=True)
class Candidate:
    m_tot: int
    m_ii: int
    tree: BranchingVector


@dataclass(frozen=True)
class OptimizationResult:
    l_tot_km: float
    candidate: Candidate
    noise: NoiseParams
    kappa: float
    constants: HardwareConstants
    objective: str
    skr: float
    cost: float
    evaluated: int = 0

    @property
    def l0_km(self) -> float:
        return self.l_tot_km / self.candidate.m_tot

    @property
    def config(self) -> Optional[NetworkConfig]:
        """The winning network; None for the homogeneous baseline, which has no TYPE II node."""
        if self.objective == 'homogeneous':
            return None
        return NetworkConfig(
            self.l_tot_km, self.candidate.m_tot, self.candidate.m_ii, self.candidate.tree, self.noise,
            self.kappa, self.constants, type_ii_only=self.objective == 'cost_typeII_only',
        )


def cost_value(skr_value, l_tot_km: float, constants: HardwareConstants, m_i, m_ii, kappa: float):
    """(1/SKR) * L_att / (tau_ph * L_tot) * (m_I + kappa m_II); inf where SKR is 0."""
    skr_value = np.asarray(skr_value, dtype=float)
    scale = constants.l_att_km / (constants.tau_ph * l_tot_km) * (m_i + kappa * m_ii)
    with np.errstate(divide='ignore'):
        values = np.where(skr_value > 0, scale / np.where(skr_value > 0, skr_value, 1.0), np.inf)
    return float(values) if values.ndim == 0 else values


def cost(config: NetworkConfig, skr_value: float) -> float:
    return cost_value(skr_value, config.l_tot_km, config.constants, config.m_i, config.m_ii, config.kappa)


def _rank(objective: str, cost_: float, skr_: float, candidate: Candidate) -> tuple:
    head = (-skr_, cost_) if objective == 'max_skr' else (cost_, -skr_)
    return head + (candidate.m_tot, candidate.m_ii, candidate.tree.branches)


@dataclass
class _Best:
    objective: str
    rank: Optional[tuple] = None
    candidate: Optional[Candidate] = None
    skr: float = 0.0
    cost: float = math.inf
    evaluated: int = 0

    def offer(self, candidate: Candidate, skr_: float, cost_: float):
        self.evaluated += 1
        if skr_ <= 0:
            return
        rank = _rank(self.objective, cost_, skr_, candidate)
        if self.rank is None or rank < self.rank:
            self.rank, self.candidate, self.skr, self.cost = rank, candidate, skr_, cost_

    def merge(self, other: '_Best'):
        self.evaluated += other.evaluated
        if other.rank is not None and (self.rank is None or other.rank < self.rank):
            self.rank, self.candidate, self.skr, self.cost = other.rank, other.candidate, other.skr, other.cost


@dataclass
class _TreeTable:
    """All admissible depth-2 trees, sorted by generation time."""
    trees: list[BranchingVector]
    branches: np.ndarray
    tree_times: np.ndarray
    processing_times: np.ndarray

    @classmethod
    def build(cls, max_photons: int, constants: HardwareConstants) -> '_TreeTable':
        trees = list(enumerate_trees(max_photons, TREE_DEPTH))
        branches = np.array([t.branches for t in trees], dtype=float)
        tree_times = np.array([tree_generation_time(t, constants.tau_ph, constants.tau_ss) for t in trees])
        order = np.lexsort((branches[:, 2], branches[:, 1], branches[:, 0], tree_times))
        trees = [trees[k] for k in order]
        branches, tree_times = branches[order], tree_times[order]
        processing = np.array([node_processing_time(value, constants) for value in tree_times])
        return cls(trees, branches, tree_times, processing)

    def pareto(self, mu: float) -> tuple[np.ndarray, np.ndarray]:
        """Indices of trees not beaten by a faster tree with at least the same eta_e, and their eta_e."""
        etas = eta_e_depth2(self.branches, mu)
        best_before = np.concatenate([[-np.inf], np.maximum.accumulate(etas)[:-1]])
        keep = np.flatnonzero(etas > best_before)
        return keep, etas[keep]


@dataclass
class _Search:
    space: SearchSpace
    noise: NoiseParams
    kappa: float
    constants: HardwareConstants
    objective: str
    include_erasure: bool
    provider: SummaryProvider
    table: _TreeTable = field(init=False)
    infeasible_n: set = field(default_factory=set)
    pareto_by_m_tot: dict = field(default_factory=dict)

    def __post_init__(self):
        self.table = _TreeTable.build(self.space.max_photons, self.constants)

    def mu(self, m_tot: int) -> float:
        return LinkParams(self.space.l_tot_km / m_tot, self.constants.l_att_km, self.constants.eta_d).mu

    def summary(self, n: int):
        if n in self.infeasible_n:
            return None
        try:
            return self.provider(NodeChannelParams(n, self.noise))
        except DegenerateRecursionError as exc:
            logger.info('Segment length n=%d excluded at eps_r=%g: %s', n, self.noise.epsilon_r, exc)
            self.infeasible_n.add(n)
            return None

    def precompute(self, layouts: Iterable[LayoutCounts]):
        needed = sorted({n for layout in layouts for n in (layout.n_prime, layout.n_dblprime)})
        logger.info('Preparing %d channel summaries at eps_r=%g', len(needed), self.noise.epsilon_r)
        for n in needed:
            self.summary(n)

    def scan_layout(self, layout: LayoutCounts, best: _Best):
        if layout.n_prime in self.infeasible_n or layout.n_dblprime in self.infeasible_n:
            return
        summary = self.summary(layout.n_prime)
        fractions = secret_key_fractions(2.0 * effective_errors(summary, layout, self.provider) / 3.0)
        positive = np.flatnonzero(fractions > 0)
        if positive.size == 0:
            return
        top = 0 if not self.include_erasure else int(positive[-1])
        if layout.m_tot not in self.pareto_by_m_tot:
            self.pareto_by_m_tot[layout.m_tot] = self.table.pareto(self.mu(layout.m_tot))
        keep, etas = self.pareto_by_m_tot[layout.m_tot]
        weights = transmission_weights(etas, layout, top)
        rates = weights @ fractions[:top + 1] / self.table.processing_times[keep]
        costs = cost_value(rates, self.space.l_tot_km, self.constants, layout.m_i, layout.m_ii, self.kappa)
        for index, rate, cost_ in zip(keep, rates, costs):
            best.offer(Candidate(layout.m_tot, layout.m_ii, self.table.trees[index]), float(rate), float(cost_))

    def scan_homogeneous(self, m_tot: int, best: _Best):
        q = 2.0 * homogeneous_error(self.noise.epsilon_r, m_tot) / 3.0
        fraction = float(secret_key_fractions(q))
        if fraction <= 0:
            return
        etas = eta_e_depth2(self.table.branches, self.mu(m_tot))
        rates = fraction * etas ** m_tot / self.table.tree_times
        costs = cost_value(rates, self.space.l_tot_km, self.constants, m_tot, 0, self.kappa)
        feasible = rates > 0
        if not feasible.any():
            return
        primary = -rates if self.objective == 'max_skr' else costs
        leaders = feasible & (primary == primary[feasible].min())
        for index in np.flatnonzero(leaders):
            best.offer(Candidate(m_tot, 0, self.table.trees[index]), float(rates[index]), float(costs[index]))

    def evaluate(self, candidate: Candidate) -> tuple[float, float]:
        """(skr, cost) of one candidate, (0, inf) when outside the space or the model."""
        if not self.space.admits(candidate.m_tot, candidate.m_ii, candidate.tree):
            return 0.0, math.inf
        layout = LayoutCounts(candidate.m_tot, candidate.m_ii)
        if self.summary(layout.n_prime) is None or self.summary(layout.n_dblprime) is None:
            return 0.0, math.inf
        config = NetworkConfig(self.space.l_tot_km, candidate.m_tot, candidate.m_ii, candidate.tree, self.noise,
                               self.kappa, self.constants, type_ii_only=self.space.type_ii_only)
        rate = skr(config, self.include_erasure, self.provider).skr
        return rate, cost(config, rate)


def _neighbours(candidate: Candidate, type_ii_only: bool) -> list[Candidate]:
    moves = []
    for step in (-1, 1):
        m_tot = candidate.m_tot + step
        moves.append(Candidate(m_tot, m_tot if type_ii_only else candidate.m_ii, candidate.tree))
        if not type_ii_only:
            moves.append(Candidate(candidate.m_tot, candidate.m_ii + step, candidate.tree))
        for level in range(len(candidate.tree)):
            branches = list(candidate.tree.branches)
            branches[level] += step
            if branches[level] >= 1:
                moves.append(Candidate(candidate.m_tot, candidate.m_ii, BranchingVector(tuple(branches))))
    return moves


def _climb(search: _Search, best: _Best):
    for _ in range(MAX_CLIMB_STEPS):
        incumbent = best.rank
        for neighbour in _neighbours(best.candidate, search.space.type_ii_only):
            best.offer(neighbour, *search.evaluate(neighbour))
        if best.rank == incumbent:
            return
    logger.warning('Hill climb stopped after %d steps at %s', MAX_CLIMB_STEPS, best.candidate)


def minimize(space: SearchSpace, noise: NoiseParams, kappa: float = 1.0,
             constants: Optional[HardwareConstants] = None, objective: str = 'cost',
             include_erasure: bool = True, provider: SummaryProvider = channel_summary,
             workers: int = 1) -> OptimizationResult:
    """
    Best network for ``objective`` at ``space.l_tot_km``.

    ``max_skr`` maximises the rate and breaks ties on cost; ``cost_typeII_only``
    places a TYPE II node at every site; ``homogeneous`` scores TYPE I chains.
    """
    if objective not in OBJECTIVES:
        raise InvalidArgumentError(f'Unknown objective {objective!r}; choose from {", ".join(OBJECTIVES)}')
    if kappa < 0:
        raise InvalidArgumentError(f'kappa must be >= 0, got {kappa}')
    if (objective == 'cost_typeII_only') != space.type_ii_only:
        space = SearchSpace(space.l_tot_km, space.max_photons, space.min_link_km, space.max_segment_links,
                            space.full_enumeration_limit, type_ii_only=objective == 'cost_typeII_only')
    constants = constants or HardwareConstants()
    search = _Search(space, noise, kappa, constants, objective, include_erasure, provider)
    best = _Best(objective)

    if objective == 'homogeneous':
        for m_tot in space.m_tot_grid():
            search.scan_homogeneous(m_tot, best)
    else:
        layouts = [layout for m_tot in space.m_tot_grid() for layout in space.layouts(m_tot)]
        search.precompute(layouts)
        if workers > 1:
            def scan(chunk):
                partial = _Best(objective)
                for layout in chunk:
                    search.scan_layout(layout, partial)
                return partial

            chunks = [layouts[k::workers] for k in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for partial in pool.map(scan, chunks):
                    best.merge(partial)
        else:
            for layout in layouts:
                search.scan_layout(layout, best)
        if best.candidate is not None:
            _climb(search, best)

    if best.candidate is None:
        raise NoFeasibleConfigError(
            f'No configuration with positive key rate at L_tot={space.l_tot_km:g} km, '
            f'eps_r={noise.epsilon_r:g} ({objective})'
        )
    logger.info('Optimum (%s) at L_tot=%g km, eps_r=%g, kappa=%g: m_tot=%d m_II=%d %s, SKR=%.4g Hz, cost=%.4g',
                objective, space.l_tot_km, noise.epsilon_r, kappa, best.candidate.m_tot, best.candidate.m_ii,
                best.candidate.tree, best.skr, best.cost)
    return OptimizationResult(space.l_tot_km, best.candidate, noise, kappa, constants, objective,
                              best.skr, best.cost, best.evaluated)
