"""
Pauli-frame Monte Carlo of tree decoding and re-encoding.

Every transmitted photon is lost with probability mu and otherwise carries an
X, Y or Z error with probability eps0/3 each. The lowest-index surviving
first-level photon is stored; every other first-level photon and every child
of the stored one must be measured in Z, directly or through a child whose own
children all arrive. Redundant copies of a Z outcome are combined by majority
vote, ties counted as correct.

Logical frame: X_L = Z(stored) * prod Z(other first-level), Z_L = X(stored) *
prod Z(children of stored). A wrong X_L sign is a logical Z error, a wrong Z_L
sign a logical X error, both a logical Y error.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from stabilizer.channels import epsilon_from_p, p_from_epsilon
from stabilizer.exceptions import InvalidArgumentError

from .tree_code import BranchingVector

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 10_000


@dataclass(frozen=True)
class TreeErrorState:
    """Per-photon loss and Pauli-frame flags; ``lost[k]`` has shape (trials, b0, ..., bk)."""
    lost: tuple[np.ndarray, ...]
    x_error: tuple[np.ndarray, ...]
    z_error: tuple[np.ndarray, ...]

    @classmethod
    def sample(cls, t: BranchingVector, mu: float, eps0: float, trials: int,
               rng: np.random.Generator) -> 'TreeErrorState':
        lost, x_error, z_error = [], [], []
        for level in range(len(t)):
            shape = (trials,) + t.branches[:level + 1]
            lost.append(rng.random(shape) < mu)
            # [0, e/3) X, [e/3, 2e/3) Y, [2e/3, e) Z
            u = rng.random(shape)
            x_error.append(u < 2.0 * eps0 / 3.0)
            z_error.append((u >= eps0 / 3.0) & (u < eps0))
        return cls(tuple(lost), tuple(x_error), tuple(z_error))

    @property
    def trials(self) -> int:
        return self.lost[0].shape[0]


@dataclass(frozen=True)
class DecodeOutcome:
    """Per-trial decode result: success flag and the residual frame flips."""
    success: np.ndarray
    x_sign_wrong: np.ndarray
    z_sign_wrong: np.ndarray


@dataclass(frozen=True)
class McEstimate:
    trials: int
    success_rate: float
    success_sigma: float
    logical_x_rate: float
    logical_x_sigma: float
    logical_y_rate: float
    logical_y_sigma: float
    logical_z_rate: float
    logical_z_sigma: float
    effective_epsilon: float
    effective_sigma: float

    @property
    def successes(self) -> int:
        return int(round(self.success_rate * self.trials))


def _xor_last(array: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.reduce(array, axis=-1)


def decode(t: BranchingVector, state: TreeErrorState) -> DecodeOutcome:
    """Apply the decoding rule to sampled errors; the stored photon's own error is left out."""
    depth = t.depth
    received = [~lost for lost in state.lost]
    measurable: list = [None] * (depth + 1)
    flipped: list = [None] * (depth + 1)
    for level in range(depth, -1, -1):
        direct = received[level]
        copies = direct.astype(np.int64)
        wrong = (direct & state.x_error[level]).astype(np.int64)
        indirect = np.zeros_like(direct)
        if level + 1 <= depth:
            if level + 2 <= depth:
                grandchildren_ok = measurable[level + 2].all(axis=-1)
                grandchildren_flip = _xor_last(flipped[level + 2])
            else:
                grandchildren_ok = True
                grandchildren_flip = False
            usable = received[level + 1] & grandchildren_ok
            copy_flip = state.z_error[level + 1] ^ grandchildren_flip
            indirect = usable.any(axis=-1)
            copies = copies + usable.sum(axis=-1)
            wrong = wrong + (usable & copy_flip).sum(axis=-1)
        measurable[level] = direct | indirect
        flipped[level] = 2 * wrong > copies

    first = received[0]
    stored = np.argmax(first, axis=-1)
    rows = np.arange(state.trials)
    success = first.any(axis=-1) & measurable[0].all(axis=-1)
    x_sign_wrong = _xor_last(flipped[0]) ^ flipped[0][rows, stored]
    if depth >= 1:
        success &= measurable[1][rows, stored].all(axis=-1)
        z_sign_wrong = _xor_last(flipped[1][rows, stored])
    else:
        z_sign_wrong = np.zeros(state.trials, dtype=bool)
    return DecodeOutcome(success, x_sign_wrong, z_sign_wrong)


def _stored_error(state: TreeErrorState) -> tuple[np.ndarray, np.ndarray]:
    stored = np.argmax(~state.lost[0], axis=-1)
    rows = np.arange(state.trials)
    return state.x_error[0][rows, stored], state.z_error[0][rows, stored]


def _error_type_values(state, outcome, eps0, conditional) -> np.ndarray:
    """(trials, 3) array of X, Y, Z logical-error indicators or conditional probabilities."""
    a, b = outcome.x_sign_wrong, outcome.z_sign_wrong
    if conditional:
        # average over the stored photon's own Pauli: X flips the X_L sign, Z the Z_L sign
        def weight(flip_a, flip_b):
            return np.where(flip_a | flip_b, eps0 / 3.0, 1.0 - eps0)
        return np.stack([weight(a, ~b), weight(~a, ~b), weight(~a, b)], axis=-1)
    own_x, own_z = _stored_error(state)
    a, b = a ^ own_x, b ^ own_z
    return np.stack([b & ~a, a & b, a & ~b], axis=-1).astype(float)


@dataclass
class _Tally:
    trials: int = 0
    successes: int = 0
    sums: np.ndarray = field(default_factory=lambda: np.zeros(4))
    squares: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __add__(self, other: '_Tally') -> '_Tally':
        return _Tally(self.trials + other.trials, self.successes + other.successes,
                      self.sums + other.sums, self.squares + other.squares)


def _run_chunk(t, mu, eps0, trials, seed_seq, conditional) -> _Tally:
    rng = np.random.default_rng(seed_seq)
    state = TreeErrorState.sample(t, mu, eps0, trials, rng)
    outcome = decode(t, state)
    values = _error_type_values(state, outcome, eps0, conditional)[outcome.success]
    values = np.column_stack([values, values.sum(axis=-1)])
    return _Tally(trials, int(outcome.success.sum()), values.sum(axis=0), (values ** 2).sum(axis=0))


def _rate(total: float, squares: float, count: int) -> tuple[float, float]:
    if count == 0:
        return 0.0, 0.0
    mean = total / count
    variance = max(0.0, squares / count - mean ** 2)
    return float(mean), float(math.sqrt(variance / count))


def simulate_decode(t: BranchingVector, mu: float, eps0: float, trials: int, seed: int,
                    conditional: bool = False, workers: int = 1, chunk: int = DEFAULT_CHUNK) -> McEstimate:
    """
    Sample ``trials`` transmissions of tree ``t`` and decode them.

    Error rates are conditioned on decoding success. With ``conditional`` the
    stored photon's own error is averaged analytically instead of sampled,
    which leaves the mean unchanged and lowers the variance. Results depend on
    ``seed`` and ``chunk`` only, not on ``workers``.
    """
    if trials < 1:
        raise InvalidArgumentError(f'trials must be >= 1, got {trials}')
    if not 0.0 <= mu <= 1.0 or not 0.0 <= eps0 <= 1.0:
        raise InvalidArgumentError(f'mu and eps0 must lie in [0, 1], got mu={mu}, eps0={eps0}')
    t = t if isinstance(t, BranchingVector) else BranchingVector(tuple(t))
    sizes = [min(chunk, trials - start) for start in range(0, trials, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(t, mu, eps0, size, seq, conditional) for size, seq in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(lambda job: _run_chunk(*job), jobs))
    else:
        tallies = [_run_chunk(*job) for job in jobs]
    tally = sum(tallies[1:], tallies[0])

    success_rate = tally.successes / tally.trials
    success_sigma = math.sqrt(success_rate * (1.0 - success_rate) / tally.trials)
    (x, sx), (y, sy), (z, sz), (eps, seps) = (
        _rate(tally.sums[i], tally.squares[i], tally.successes) for i in range(4)
    )
    logger.debug('Decoded %s at mu=%.4g eps0=%.3g: success %.6f, eps_tree %.3e over %d trials',
                 t, mu, eps0, success_rate, eps, tally.trials)
    return McEstimate(
        trials=tally.trials,
        success_rate=success_rate,
        success_sigma=success_sigma,
        logical_x_rate=x, logical_x_sigma=sx,
        logical_y_rate=y, logical_y_sigma=sy,
        logical_z_rate=z, logical_z_sigma=sz,
        effective_epsilon=eps,
        effective_sigma=seps,
    )


def compose_reencoding(eps0: float, tree_epsilon: float) -> float:
    """Two memory depolarizations of eps0 followed by the tree channel, as one depolarizing error."""
    p0 = p_from_epsilon(eps0)
    return epsilon_from_p(p0 * p0 * p_from_epsilon(min(tree_epsilon, 0.75)))


def reencode_channel_estimate(t: BranchingVector, mu: float, eps0: float, trials: int, seed: int,
                              conditional: bool = True, workers: int = 1) -> float:
    """End-to-end re-encoding error eps_r for one decode/re-encode step."""
    if eps0 == 0.0:
        return 0.0
    estimate = simulate_decode(t, mu, eps0, trials, seed, conditional=conditional, workers=workers)
    eps_r = compose_reencoding(eps0, estimate.effective_epsilon)
    logger.info('Re-encoding error for %s at mu=%.4g, eps0=%.3g: eps_r=%.4e (%.3f eps0)',
                t, mu, eps0, eps_r, eps_r / eps0)
    return eps_r
