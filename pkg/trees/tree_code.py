"""
Counting and loss analytics of the photonic tree-cluster code.

A branching vector [b0, b1, ..., bd] describes a tree whose root has b0
children, each level-1 qubit has b1 children and so on; the root itself is
never transmitted.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from stabilizer.exceptions import InvalidArgumentError

from .exceptions import UnsupportedDepthError

logger = logging.getLogger(__name__)

# First-level photons are emitted with a narrow bandwidth.
FIRST_LEVEL_EMISSION_FACTOR = 100


@dataclass(frozen=True)
class BranchingVector:
    branches: tuple[int, ...]

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise InvalidArgumentError('Branching vector must have at least one entry')
        for b in branches:
            if isinstance(b, bool) or int(b) != b or b < 1:
                raise InvalidArgumentError(f'Branching entries must be integers >= 1, got {list(branches)}')
        object.__setattr__(self, 'branches', tuple(int(b) for b in branches))

    @classmethod
    def parse(cls, text: str) -> 'BranchingVector':
        """Accepts '4,13,4' or '[4, 13, 4]'."""
        cleaned = text.strip().strip('[]')
        try:
            return cls(tuple(int(part) for part in cleaned.split(',') if part.strip()))
        except ValueError as exc:
            raise InvalidArgumentError(f'Cannot parse branching vector {text!r}') from exc

    @property
    def depth(self) -> int:
        return len(self.branches) - 1

    def branch(self, k: int) -> int:
        """b_k, with b_k = 0 beyond the last level."""
        return self.branches[k] if k < len(self.branches) else 0

    @property
    def photon_count(self) -> int:
        return photon_count(self)

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __str__(self):
        return '[' + ','.join(str(b) for b in self.branches) + ']'


@dataclass(frozen=True)
class LinkParams:
    l0_km: float
    l_att_km: float
    eta_d: float

    def __post_init__(self):
        if self.l0_km <= 0 or self.l_att_km <= 0:
            raise InvalidArgumentError(f'Lengths must be positive, got L0={self.l0_km}, L_att={self.l_att_km}')
        if not 0 < self.eta_d <= 1:
            raise InvalidArgumentError(f'Detection efficiency must lie in (0, 1], got {self.eta_d}')

    @property
    def eta(self) -> float:
        """Per-photon fibre survival over one link."""
        return math.exp(-self.l0_km / self.l_att_km)

    @property
    def mu(self) -> float:
        return 1.0 - self.eta * self.eta_d


def _as_vector(t) -> BranchingVector:
    return t if isinstance(t, BranchingVector) else BranchingVector(tuple(t))


def photon_count(t: BranchingVector) -> int:
    t = _as_vector(t)
    total, level = 0, 1
    for b in t.branches:
        level *= b
        total += level
    return total


def indirect_z_probability(t: BranchingVector, mu: float, k: int) -> float:
    """
    Probability that a level-k qubit can be measured in Z indirectly: some child
    arrives and every grandchild is Z-measurable.
    """
    t = _as_vector(t)
    if k > t.depth:
        return 0.0
    grandchild = 1.0 - mu + mu * indirect_z_probability(t, mu, k + 2)
    return 1.0 - (1.0 - (1.0 - mu) * grandchild ** t.branch(k + 1)) ** t.branch(k)


def eta_e(t: BranchingVector, mu: float) -> float:
    """Probability that a tree survives one link and can be decoded."""
    if not 0.0 <= mu <= 1.0:
        raise InvalidArgumentError(f'mu must lie in [0, 1], got {mu!r}')
    t = _as_vector(t)
    r1 = indirect_z_probability(t, mu, 1)
    r2 = indirect_z_probability(t, mu, 2)
    b0, b1 = t.branch(0), t.branch(1)
    first_level = (1.0 - mu + mu * r1) ** b0 - (mu * r1) ** b0
    return min(1.0, max(0.0, first_level * (1.0 - mu + mu * r2) ** b1))


def tree_generation_time(t: BranchingVector, tau_ph: float, tau_ss: float) -> float:
    """
    b0 [100 + b1 (1 + b2)] tau_ph + b0 [3 + b1] tau_ss for depth-2 trees.

    The spin-spin bracket at depth 2 truncates the nesting of the photon bracket
    by one level; it is the only place that convention lives.
    """
    t = _as_vector(t)
    if t.depth != 2:
        raise UnsupportedDepthError(f'Tree generation time is defined for depth 2, got {t} (depth {t.depth})')
    b0, b1, b2 = t.branches
    return b0 * (FIRST_LEVEL_EMISSION_FACTOR + b1 * (1 + b2)) * tau_ph + b0 * (3 + b1) * tau_ss


def enumerate_trees(max_photons: int, depth: int = 2) -> Iterator[BranchingVector]:
    """All branching vectors of the given depth with photon_count <= max_photons, in lexicographic order."""
    if max_photons < 1:
        raise InvalidArgumentError(f'max_photons must be >= 1, got {max_photons}')

    def extend(prefix: list[int], used: int, width: int):
        if len(prefix) == depth + 1:
            yield BranchingVector(tuple(prefix))
            return
        levels_left = depth + 1 - len(prefix)
        b = 1
        # every deeper level adds at least width * b photons
        while used + width * b * levels_left <= max_photons:
            yield from extend(prefix + [b], used + width * b, width * b)
            b += 1

    yield from extend([], 0, 1)


def eta_e_depth2(branches: np.ndarray, mu: float) -> np.ndarray:
    """eta_e for an (k, 3) array of depth-2 branching vectors at one mu."""
    branches = np.asarray(branches, dtype=float)
    b0, b1, b2 = branches[:, 0], branches[:, 1], branches[:, 2]
    r1 = 1.0 - (1.0 - (1.0 - mu) ** (1.0 + b2)) ** b1
    r2 = 1.0 - mu ** b2
    first_level = (1.0 - mu + mu * r1) ** b0 - (mu * r1) ** b0
    return np.clip(first_level * (1.0 - mu + mu * r2) ** b1, 0.0, 1.0)
