"""Online learners: plain and doubling-trick multiplicative weights, the
untruthful-swap-regret minimizer, per-type swap learners, and the explicit
strategy-space swap learner.

All learners share the feed-then-decide convention: calling ``step(reward)``
first applies the previous round's reward (``None`` on round one), then emits
the next decision.  Identical seeds and reward streams give bit-identical
decision streams; there is no hidden randomness anywhere in this module.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BadInput, NoConvergence, RewardOutOfRange, SupportTooLarge
from .game import strategy_table, uniform_policy
from .transforms import _power_fixed_point, _solve_fixed_point

REWARD_TOL = 1e-9
LEARNER_FP_TOL = 1e-10
LEARNER_FP_CAP = 20_000
DEFAULT_STRATEGY_LEARNER_CAP = 4096


def _softmax(logw: np.ndarray) -> np.ndarray:
    z = logw - logw.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def fixed_rate_eta(num_decisions: int, horizon: int) -> float:
    """Step size sqrt(8 ln d / T), tuned for the sqrt(T ln d / 2) regret form."""
    if num_decisions <= 1:
        return 0.0
    return math.sqrt(8.0 * math.log(num_decisions) / max(1, horizon))


class MwuLearner:
    """Fixed-rate multiplicative weights over ``d`` decisions with rewards in [0, r]."""

    def __init__(self, num_decisions: int, horizon: int | None = None,
                 eta: float | None = None, reward_range: float = 1.0):
        if eta is None:
            if horizon is None:
                raise BadInput("need either an explicit eta or a horizon to tune it")
            eta = fixed_rate_eta(num_decisions, horizon)
        self.d = int(num_decisions)
        self.eta = float(eta)
        self.r = float(reward_range)
        self.logw = np.zeros(self.d)
        self.total_arm_reward = np.zeros(self.d)
        self.alg_reward = 0.0
        self.rounds = 0

    @property
    def decision(self) -> np.ndarray:
        return _softmax(self.logw)

    def update(self, reward) -> np.ndarray:
        reward = np.asarray(reward, dtype=float)
        if reward.shape != (self.d,):
            raise BadInput(f"reward must have {self.d} entries")
        if reward.min() < -REWARD_TOL or reward.max() > self.r + REWARD_TOL:
            raise RewardOutOfRange(f"reward outside [0, {self.r}]")
        self.alg_reward += float(self.decision @ reward)
        self.total_arm_reward += reward
        self.rounds += 1
        if self.r > 0:
            self.logw += self.eta * (reward / self.r)
        return self.decision

    def external_regret(self) -> float:
        return float(self.total_arm_reward.max() - self.alg_reward)


class DoublingMwu:
    """Multiplicative weights with the doubling trick.

    Budgets are in units of the reward range: the epoch restarts (uniform
    weights, step size retuned to sqrt(ln d / U)) as soon as some arm's
    in-epoch cumulative reward exceeds U_k, with U_0 = ln d and U_{k+1} = 2 U_k.
    """

    def __init__(self, num_decisions: int, reward_range: float = 1.0):
        self.d = int(num_decisions)
        self.r = float(reward_range)
        self.logw = np.zeros(self.d)
        self.epoch = 0
        self.budget = math.log(self.d) if self.d > 1 else 0.0
        self.eta = 1.0 if self.d > 1 else 0.0  # sqrt(ln d / U_0)
        self.epoch_cum = np.zeros(self.d)
        self.total_arm_reward = np.zeros(self.d)
        self.alg_reward = 0.0
        self.rounds = 0

    @property
    def decision(self) -> np.ndarray:
        return _softmax(self.logw)

    def update(self, reward) -> np.ndarray:
        reward = np.asarray(reward, dtype=float)
        if reward.shape != (self.d,):
            raise BadInput(f"reward must have {self.d} entries")
        if reward.min() < -REWARD_TOL or reward.max() > self.r + REWARD_TOL:
            raise RewardOutOfRange(f"reward outside [0, {self.r}]")
        self.alg_reward += float(self.decision @ reward)
        self.total_arm_reward += reward
        self.rounds += 1
        if self.r > 0 and self.d > 1:
            rn = reward / self.r
            self.logw += self.eta * rn
            self.epoch_cum += rn
            if self.epoch_cum.max() > self.budget:
                self.epoch += 1
                self.budget *= 2.0
                self.eta = math.sqrt(math.log(self.d) / self.budget)
                self.logw[:] = 0.0
                self.epoch_cum[:] = 0.0
        return self.decision

    def external_regret(self) -> float:
        return float(self.total_arm_reward.max() - self.alg_reward)


class _DoublingBank:
    """A grid of independent doubling-trick MWU learners sharing decision size d.

    ``shape`` indexes the learners; rewards arrive as an array of shape
    ``shape + (d,)``.  ``ranges`` broadcasts against ``shape`` and gives each
    learner's reward range; zero-range learners ignore updates and stay
    uniform.
    """

    def __init__(self, shape: tuple[int, ...], d: int, ranges: np.ndarray):
        self.shape = shape
        self.d = int(d)
        self.ranges = np.broadcast_to(np.asarray(ranges, dtype=float), shape).copy()
        self.live = self.ranges > 0
        self.logw = np.zeros(shape + (d,))
        self.epoch_cum = np.zeros(shape + (d,))
        logd = math.log(d) if d > 1 else 0.0
        self.budget = np.full(shape, logd)
        self.eta = np.ones(shape) if d > 1 else np.zeros(shape)

    def decisions(self) -> np.ndarray:
        return _softmax(self.logw)

    def update(self, rewards: np.ndarray) -> None:
        if self.d <= 1:
            return
        # slightly looser than the public 1e-9: fixed-point and reward dust compound
        limit = self.ranges[..., None] + 1e-8
        if rewards.min() < -1e-8 or np.any(rewards > limit):
            raise RewardOutOfRange("bank reward outside [0, r]")
        rn = np.where(self.live[..., None], rewards, 0.0)
        rn = np.divide(rn, self.ranges[..., None], out=rn,
                       where=self.live[..., None])
        self.logw += self.eta[..., None] * rn
        self.epoch_cum += rn
        burst = self.epoch_cum.max(axis=-1) > self.budget
        if burst.any():
            self.budget[burst] *= 2.0
            self.eta[burst] = np.sqrt(math.log(self.d) / self.budget[burst])
            self.logw[burst] = 0.0
            self.epoch_cum[burst] = 0.0


def _hot_fixed_point(dense: np.ndarray, seed: np.ndarray, tol: float,
                     norm_blocks: tuple[int, int]) -> np.ndarray:
    """Fixed point for the learner loop: warm-started power iteration with a
    least-squares fallback for degenerate (non-positive) matrices."""
    x, res, its = _power_fixed_point(dense, seed, tol, LEARNER_FP_CAP)
    if res <= tol:
        return x
    x2, res2 = _solve_fixed_point(dense, *norm_blocks)
    if res2 <= tol and x2.min() >= -tol:
        return np.clip(x2, 0.0, None)
    raise NoConvergence(its, min(res, res2))


class UntruthfulSwapLearner:
    """Minimizes untruthful swap regret over one player's (types x actions) policies.

    Internally: one fixed-rate MWU over reported types per true type, one
    doubling MWU over actions per (true type, reported type, recommended
    action).  Each round the subroutine outputs assemble a strictly positive
    swap transform whose fixed point is the emitted policy, so deviating
    through the learner's own transform gains nothing.
    """

    def __init__(self, prior_row, num_actions: int, horizon: int,
                 fp_tol: float = LEARNER_FP_TOL):
        self.rho = np.asarray(prior_row, dtype=float)
        if self.rho.ndim != 1 or self.rho.min() < 0:
            raise BadInput("prior row must be a non-negative vector")
        self.K = self.rho.size
        self.M = int(num_actions)
        self.T = int(horizon)
        self.fp_tol = float(fp_tol)
        self.eta_type = fixed_rate_eta(self.K, self.T)
        self.logw = np.zeros((self.K, self.K))
        self.bank = _DoublingBank((self.K, self.K, self.M), self.M,
                                  self.rho[:, None, None])
        self.w = _softmax(self.logw)
        self.y = self.bank.decisions()        # (K, K, M_a', M_a)
        self.x = uniform_policy(self.K, self.M)
        self.rounds = 0

    def step(self, prev_reward=None) -> np.ndarray:
        """Feed the previous round's reward (None on round one), emit the next policy."""
        if prev_reward is not None:
            self._feed(np.asarray(prev_reward, dtype=float))
        self._decide()
        self.rounds += 1
        return self.x.copy()

    def _feed(self, u: np.ndarray) -> None:
        if u.shape != (self.K, self.M):
            raise BadInput(f"reward must have shape {(self.K, self.M)}")
        if u.min() < -REWARD_TOL or u.max() > 1 + REWARD_TOL:
            raise RewardOutOfRange("reward outside [0, 1]")
        ubar = self.rho[:, None] * u
        # doubling subroutine (theta, theta', a') sees reward x(theta',a') * ubar(theta,a)
        split = self.x[None, :, :, None] * ubar[:, None, None, :]
        self.bank.update(split)
        # type subroutine theta sees, per decision theta', the y-weighted collapse
        z = (self.y * split).sum(axis=(2, 3))
        if self.K > 1:
            zn = np.where(self.rho[:, None] > 0, z, 0.0)
            zn = np.divide(zn, self.rho[:, None], out=zn, where=self.rho[:, None] > 0)
            self.logw += self.eta_type * zn

    def _decide(self) -> None:
        self.w = _softmax(self.logw)
        self.y = self.bank.decisions()
        q4 = self.w[:, None, :, None] * self.y.transpose(0, 3, 1, 2)
        dense = q4.reshape(self.K * self.M, self.K * self.M)
        x = _hot_fixed_point(dense, self.x.reshape(-1), self.fp_tol, (self.K, self.M))
        self.x = x.reshape(self.K, self.M)

    def current_transform_dense(self) -> np.ndarray:
        q4 = self.w[:, None, :, None] * self.y.transpose(0, 3, 1, 2)
        return q4.reshape(self.K * self.M, self.K * self.M)


class SwapRegretLearner:
    """Swap-regret minimizer over one action set: one doubling MWU expert per
    recommended action, playing the stationary distribution of the stacked
    expert outputs."""

    def __init__(self, num_actions: int, reward_range: float = 1.0,
                 fp_tol: float = LEARNER_FP_TOL):
        self.M = int(num_actions)
        self.fp_tol = float(fp_tol)
        self.bank = _DoublingBank((1, 1, self.M), self.M,
                                  np.asarray([reward_range])[:, None, None])
        self.y = self.bank.decisions()
        self.p = np.full(self.M, 1.0 / self.M)

    def step(self, prev_reward=None) -> np.ndarray:
        if prev_reward is not None:
            u = np.asarray(prev_reward, dtype=float)
            split = self.p[None, None, :, None] * u[None, None, None, :]
            self.bank.update(split)
        self.y = self.bank.decisions()
        dense = (1.0 * self.y.transpose(0, 3, 1, 2)).reshape(self.M, self.M)
        self.p = _hot_fixed_point(dense, self.p, self.fp_tol, (1, self.M))
        return self.p.copy()


class TypewiseSwapLearner:
    """One independent swap-regret learner per type, fed that type's reward row
    scaled by its prior probability."""

    def __init__(self, prior_row, num_actions: int, fp_tol: float = LEARNER_FP_TOL):
        self.rho = np.asarray(prior_row, dtype=float)
        self.K = self.rho.size
        self.M = int(num_actions)
        self.per_type = [SwapRegretLearner(self.M, reward_range=float(r), fp_tol=fp_tol)
                         for r in self.rho]

    def step(self, prev_reward=None) -> np.ndarray:
        rows = []
        for theta, learner in enumerate(self.per_type):
            fed = None
            if prev_reward is not None:
                fed = self.rho[theta] * np.asarray(prev_reward[theta], dtype=float)
            rows.append(learner.step(fed))
        return np.stack(rows)


class StrategySwapLearner:
    """Swap-regret minimizer over the explicit strategy set S_i = A_i^Theta_i.

    One doubling MWU over actions per (strategy, type); the emitted strategy
    distribution is the stationary distribution of the induced |S_i| x |S_i|
    column-stochastic matrix.  Only viable for tiny strategy spaces.
    """

    def __init__(self, num_types: int, num_actions: int,
                 cap: int = DEFAULT_STRATEGY_LEARNER_CAP,
                 fp_tol: float = LEARNER_FP_TOL):
        self.K = int(num_types)
        self.M = int(num_actions)
        self.fp_tol = float(fp_tol)
        size = self.M ** self.K
        if size > cap:
            raise SupportTooLarge(f"|S_i| = {size} exceeds learner cap {cap}")
        self.S = size
        self.table = strategy_table(self.K, self.M)     # (S, K) action indices
        self.bank = _DoublingBank((self.S, self.K), self.M, np.ones((self.S, self.K)))
        self.sigma = np.full(self.S, 1.0 / self.S)

    def step(self, prev_reward=None) -> np.ndarray:
        if prev_reward is not None:
            u = np.asarray(prev_reward, dtype=float)
            if u.shape != (self.K, self.M):
                raise BadInput(f"reward must have shape {(self.K, self.M)}")
            if u.min() < -REWARD_TOL or u.max() > 1 + REWARD_TOL:
                raise RewardOutOfRange("reward outside [0, 1]")
            split = self.sigma[:, None, None] * u[None, :, :]
            self.bank.update(split)
        z = self.bank.decisions()                       # (S, K, M)
        p = np.ones((self.S, self.S))
        for theta in range(self.K):
            p *= z[:, theta, self.table[:, theta]].T    # P(s, s') = prod_theta z_{s',theta}(s(theta))
        self.sigma = _hot_fixed_point(p, self.sigma, self.fp_tol, (1, self.S))
        return self.sigma.copy()

    def policy_marginal(self) -> np.ndarray:
        """Per-type action marginals of the current strategy distribution."""
        out = np.zeros((self.K, self.M))
        for theta in range(self.K):
            np.add.at(out[theta], self.table[:, theta], self.sigma)
        return out


# functional aliases mirroring the step operations

def mwu_update(state: MwuLearner, reward) -> np.ndarray:
    return state.update(reward)


def doubling_update(state: DoublingMwu, reward) -> np.ndarray:
    return state.update(reward)


def untruthful_step(state: UntruthfulSwapLearner, prev_reward=None) -> np.ndarray:
    return state.step(prev_reward)


def typewise_step(state: TypewiseSwapLearner, prev_reward=None) -> np.ndarray:
    return state.step(prev_reward)


def strategy_swap_step(state: StrategySwapLearner, prev_reward=None) -> np.ndarray:
    return state.step(prev_reward)
