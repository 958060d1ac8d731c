"""Adversarial reward streams that force type-dependent play.

The instance has two actions whose rewards always sum to one.  Half the types
follow block-constant bit patterns (one pattern per type, all patterns
present, randomly assigned); the other half flip independent fair coins every
round.  Any learner is measured against this stream single-player with a
uniform type prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDims, BadInput
from .learners import TypewiseSwapLearner, UntruthfulSwapLearner
from .regret import (RegretLedger, accumulate, untruthful_bound,
                     untruthful_regret)

LEARNERS = ("untruthful", "typewise", "oracle", "type-blind")


@dataclass(frozen=True)
class LowerBoundInstance:
    blocks: int                  # B
    horizon: int                 # T
    block_len: int               # L = T / B
    patterns: np.ndarray         # (2^B, B) bits: block pattern of each structured type
    coin_flips: np.ndarray       # (2^B, T) bits for the i.i.d. types
    reward_a0: np.ndarray        # (T, 2^(B+1)) reward of the first action

    @property
    def num_types(self) -> int:
        return 2 ** (self.blocks + 1)

    @property
    def alpha0_type(self) -> int:
        """The structured type whose first-action reward is 1 in every round."""
        return int(np.flatnonzero((self.patterns == 1).all(axis=1))[0])

    @property
    def alpha1_type(self) -> int:
        """The structured type whose second-action reward is 1 in every round."""
        return int(np.flatnonzero((self.patterns == 0).all(axis=1))[0])

    def reward(self, t: int) -> np.ndarray:
        """Reward matrix (types x 2) for round t (1-based)."""
        row = self.reward_a0[t - 1]
        return np.stack([row, 1.0 - row], axis=1)


def build_instance(blocks: int, horizon: int, seed: int) -> LowerBoundInstance:
    b, t = int(blocks), int(horizon)
    if b < 1 or t < 1 or t % b != 0:
        raise BadDims("need blocks >= 1 and a horizon divisible by the block count")
    half = 2 ** b
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    all_patterns = ((np.arange(half)[:, None] >> np.arange(b)[None, ::-1]) & 1).astype(np.int8)
    patterns = all_patterns[rng.permutation(half)]
    coin_flips = rng.integers(0, 2, size=(half, t), dtype=np.int8)
    block_len = t // b
    block_of_round = np.repeat(np.arange(b), block_len)
    structured = patterns[:, block_of_round].T.astype(float)   # (T, half)
    noisy = coin_flips.T.astype(float)
    reward_a0 = np.concatenate([structured, noisy], axis=1)
    return LowerBoundInstance(b, t, block_len, patterns, coin_flips, reward_a0)


def check_instance(inst: LowerBoundInstance) -> None:
    """Machine-check block constancy, the flip relation, and bijectivity."""
    half = 2 ** inst.blocks
    seen = {tuple(row) for row in inst.patterns}
    if len(seen) != half:
        raise BadInput("pattern assignment is not a bijection")
    for b in range(inst.blocks):
        sl = inst.reward_a0[b * inst.block_len:(b + 1) * inst.block_len, :half]
        if not (sl == sl[0]).all():
            raise BadInput(f"structured rewards vary inside block {b}")
        if not (sl[0] == inst.patterns[:, b]).all():
            raise BadInput(f"block {b} does not match the assigned patterns")
    # the flip relation holds by construction of reward(); spot check one round
    r = inst.reward(1)
    if not np.allclose(r.sum(axis=1), 1.0):
        raise BadInput("action rewards do not sum to one")


@dataclass(frozen=True)
class ExperimentResult:
    learner: str
    regret: float
    bound: float
    achieved_reward: float
    stay_mass_alpha0: float      # sum_t pi^t(alpha0_type; alpha_0)
    stay_mass_alpha1: float      # sum_t pi^t(alpha1_type; alpha_1)
    edge_lower_bound: float      # T - |Theta| * regret
    horizon: int
    num_types: int

    def edge_inequalities_hold(self, tol: float = 1e-9) -> bool:
        """Both constant-reward types spent almost all mass on their winning action."""
        floor = self.edge_lower_bound - tol
        return (self.stay_mass_alpha0 >= floor
                and self.stay_mass_alpha1 >= floor)

    def to_json_dict(self) -> dict:
        return {
            "learner": self.learner,
            "untruthful_regret": self.regret,
            "upper_bound": self.bound,
            "achieved_reward": self.achieved_reward,
            "stay_mass_alpha0": self.stay_mass_alpha0,
            "stay_mass_alpha1": self.stay_mass_alpha1,
            "edge_lower_bound": self.edge_lower_bound,
            "edge_inequalities_hold": self.edge_inequalities_hold(),
            "horizon": self.horizon,
            "num_types": self.num_types,
        }


def run_experiment(inst: LowerBoundInstance, learner: str = "untruthful",
                   seed: int = 0) -> ExperimentResult:
    """Drive a learner on the stream and account its untruthful swap regret.

    The seed is accepted for interface symmetry; every shipped learner is
    deterministic.  "oracle" (clairvoyant per-round best response) and
    "type-blind" (always uniform) are calibration baselines.
    """
    if learner not in LEARNERS:
        raise BadInput(f"unknown learner {learner!r}")
    k = inst.num_types
    rho = np.full(k, 1.0 / k)
    state = None
    if learner == "untruthful":
        state = UntruthfulSwapLearner(rho, 2, inst.horizon)
    elif learner == "typewise":
        state = TypewiseSwapLearner(rho, 2)
    ledger = RegretLedger.create(rho, 2)
    t0, t1 = inst.alpha0_type, inst.alpha1_type
    stay0 = stay1 = 0.0
    prev_u = None
    uniform = np.full((k, 2), 0.5)
    for t in range(1, inst.horizon + 1):
        u = inst.reward(t)
        if learner == "oracle":
            x = np.zeros((k, 2))
            x[np.arange(k), u.argmax(axis=1)] = 1.0
        elif learner == "type-blind":
            x = uniform
        else:
            x = state.step(prev_u)
        accumulate(ledger, x, u)
        stay0 += float(x[t0, 0])
        stay1 += float(x[t1, 1])
        prev_u = u
    regret = untruthful_regret(ledger)
    bound = untruthful_bound(inst.horizon, k, 2)
    return ExperimentResult(learner, regret, bound, ledger.alg_reward,
                            stay0, stay1, inst.horizon - k * regret,
                            inst.horizon, k)


def write_stream_csv(path: str, inst: LowerBoundInstance) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,theta,reward_a0\n")
        for t in range(inst.horizon):
            for theta in range(inst.num_types):
                fh.write(f"{t + 1},{theta},{inst.reward_a0[t, theta]:.0f}\n")
