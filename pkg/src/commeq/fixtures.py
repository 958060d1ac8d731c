"""Canonical small games and distributions used by the test suite and docs.

Everything here is constructed programmatically; the JSON files under
``fixtures/`` at the repository root are generated from these builders.
"""

from __future__ import annotations

import numpy as np

from .game import BayesianGame, PriorModel, StrategyDistribution
from .poa import QuasilinearGame, SmoothnessSpec


def zero_payoff_game(num_types=(2, 2), num_actions=(2, 2)) -> BayesianGame:
    """Uniform product prior, all payoffs zero; every distribution is an equilibrium."""
    prior = PriorModel.product([np.full(k, 1.0 / k) for k in num_types])
    shape = tuple(num_types) + tuple(num_actions)
    payoffs = [np.zeros(shape) for _ in num_types]
    types = [[f"t{i}{k}" for k in range(nt)] for i, nt in enumerate(num_types)]
    actions = [[f"a{i}{m}" for m in range(na)] for i, na in enumerate(num_actions)]
    return BayesianGame.create(types, actions, prior, payoffs, "own-type")


def nonrepresentable_distribution() -> np.ndarray:
    """The classic 2x2x2x2 type-wise distribution no strategy mediator can realize.

    Three type profiles correlate the two players' actions positively, the
    fourth negatively; any strategy distribution would have to do both.
    """
    pi = np.zeros((2, 2, 2, 2))
    same = np.array([[0.5, 0.0], [0.0, 0.5]])
    cross = np.array([[0.0, 0.5], [0.5, 0.0]])
    pi[0, 0] = same
    pi[0, 1] = same
    pi[1, 0] = same
    pi[1, 1] = cross
    return pi


def guessing_game() -> BayesianGame:
    """Player 1 (three types) tries to match player 2's action; the safe action
    0 pays 1/2 for the first type, and the other two types are paid 1/2 on
    half-informative pairs.  Player 2 is paid for mismatching."""
    # actions: player 1 picks from {0,1,2,3,4}, player 2 from {1,2,3,4}
    v1 = np.zeros((3, 1, 5, 4))
    for a2 in range(4):
        v1[0, 0, 0, a2] = 0.5
        v1[0, 0, a2 + 1, a2] = 1.0
    for (a1, a2v) in [(4, 1), (4, 2), (1, 3), (1, 4)]:
        v1[1, 0, a1, a2v - 1] = 0.5
    for (a1, a2v) in [(2, 1), (2, 3), (3, 2), (3, 4)]:
        v1[2, 0, a1, a2v - 1] = 0.5
    v2 = np.zeros((3, 1, 5, 4))
    for a1 in range(5):
        for a2 in range(4):
            if a1 != a2 + 1:
                v2[:, 0, a1, a2] = 1.0
    prior = PriorModel.product([[1 / 3, 1 / 3, 1 / 3], [1.0]])
    return BayesianGame.create([["t", "t'", "t''"], ["t2"]],
                               [["0", "1", "2", "3", "4"], ["1", "2", "3", "4"]],
                               prior, [v1, v2], "full")


def guessing_game_distribution() -> np.ndarray:
    """The mediated play for guessing_game: payoff 1/2 for player 1 always."""
    pi = np.zeros((3, 1, 5, 4))
    for a2 in range(4):
        pi[0, 0, 0, a2] = 0.25
    for (a1, a2v) in [(4, 1), (4, 2), (1, 3), (1, 4)]:
        pi[1, 0, a1, a2v - 1] = 0.25
    for (a1, a2v) in [(2, 1), (2, 3), (3, 2), (3, 4)]:
        pi[2, 0, a1, a2v - 1] = 0.25
    return pi


def guessing_game_strategy_witness() -> StrategyDistribution:
    """The four-profile strategy mixture realizing guessing_game_distribution."""
    from .game import encode_strategy_profile

    num_types, num_actions = (3, 1), (5, 4)
    probs = np.zeros(4**1 * 5**3)
    rows = [
        ([0, 4, 2], [0]),   # player 2 plays "1"
        ([0, 4, 3], [1]),
        ([0, 1, 2], [2]),
        ([0, 1, 3], [3]),
    ]
    for r1, r2 in rows:
        idx = encode_strategy_profile([np.array(r1), np.array(r2)], num_actions)
        probs[idx] = 0.25
    return StrategyDistribution.create(num_types, num_actions, probs)


def correlated_coarse_game() -> BayesianGame:
    """Perfectly correlated two-type pairs; player 1's second type is a matching
    pennies row while the first type only profits from one action."""
    prior = PriorModel.tabular(np.array([[0.5, 0.0], [0.0, 0.5]]))
    v1 = np.zeros((2, 2, 2, 2))
    v1[0, :, :, :] = np.array([[0.0, 0.0], [0.5, 0.0]])
    v1[1, :, :, :] = np.array([[0.0, 1.0], [1.0, 0.0]])
    v2 = np.zeros((2, 2, 2, 2))
    return BayesianGame.create([["t1", "t1'"], ["t2", "t2'"]],
                               [["a", "a'"], ["b", "b'"]],
                               prior, [v1, v2], "own-type")


def correlated_coarse_sigma() -> StrategyDistribution:
    """The two-profile recommendation that is an SFCCE but not an ANFCCE."""
    from .game import encode_strategy_profile

    num_types, num_actions = (2, 2), (2, 2)
    probs = np.zeros(2**2 * 2**2)
    s = encode_strategy_profile([np.array([0, 1]), np.array([0, 0])], num_actions)
    sp = encode_strategy_profile([np.array([0, 0]), np.array([0, 1])], num_actions)
    probs[s] = 0.5
    probs[sp] = 0.5
    return StrategyDistribution.create(num_types, num_actions, probs)


def matching_game() -> BayesianGame:
    """Two players, two types, two actions: both are paid for coordinating, and
    each type prefers coordinating on its own index."""
    prefer0 = np.array([[1.0, 0.0], [0.0, 0.5]])
    prefer1 = np.array([[0.5, 0.0], [0.0, 1.0]])
    payoffs = []
    for i in range(2):
        v = np.zeros((2, 2, 2, 2))
        for own in range(2):
            table = prefer0 if own == 0 else prefer1
            if i == 0:
                v[own, :, :, :] = table[None, :, :]
            else:
                v[:, own, :, :] = table[None, :, :]
        payoffs.append(v)
    prior = PriorModel.product([[0.5, 0.5], [0.5, 0.5]])
    return BayesianGame.create([["lo", "hi"], ["lo", "hi"]],
                               [["left", "right"], ["left", "right"]],
                               prior, payoffs, "own-type")


# ---------------------------------------------------------------------------
# discretized first-price auction

AUCTION_VALUES = (1.0, 2.0)
AUCTION_BIDS = (0.0, 1.0, 2.0)
# raw quasilinear utilities span [-1, 2]; the affine map u -> (u + 1) / 3 puts
# them in [0, 1] and keeps quasilinearity, smoothness constants, and the
# failure witness intact (the +1 is folded into the valuation side)
AUCTION_SHIFT = 1.0
AUCTION_SCALE = 3.0


def _auction_winner(bids: tuple[int, ...]) -> int:
    best = max(bids)
    return min(i for i, b in enumerate(bids) if b == best)


def first_price_auction() -> QuasilinearGame:
    """Two bidders, values {1, 2} uniform, bids {0, 1, 2}, highest bid wins with
    lowest-index tie-break; payoffs affinely rescaled into [0, 1]."""
    n = 2
    nt, na = (2, 2), (3, 3)
    alloc = [np.zeros((2, 3, 3)) for _ in range(n)]
    pay = [np.zeros((3, 3)) for _ in range(n)]
    for bids in np.ndindex(*na):
        w = _auction_winner(tuple(AUCTION_BIDS[b] for b in bids))
        for i in range(n):
            for ti in range(2):
                won = AUCTION_VALUES[ti] if i == w else 0.0
                alloc[i][ti][bids] = (won + AUCTION_SHIFT) / AUCTION_SCALE
            pay[i][bids] = (AUCTION_BIDS[bids[i]] if i == w else 0.0) / AUCTION_SCALE
    payoffs = []
    for i in range(n):
        v = np.zeros(nt + na)
        for ti in range(2):
            sel = [slice(None)] * 2
            sel[i] = ti
            v[tuple(sel)] = alloc[i][ti] - pay[i]
        payoffs.append(v)
    prior = PriorModel.product([[0.5, 0.5], [0.5, 0.5]])
    base = BayesianGame.create([["v1", "v2"], ["v1", "v2"]],
                               [["b0", "b1", "b2"], ["b0", "b1", "b2"]],
                               prior, payoffs, "own-type")
    return QuasilinearGame.create(base, alloc, pay)


def auction_halfvalue_spec(lam: float = 0.5, mu: float = 1.0) -> SmoothnessSpec:
    """Deviation "bid floor(value / 2)" for the auction, any (lambda, mu)."""
    dev = []
    for i in range(2):
        d = np.zeros((2, 2, 3), dtype=np.int64)
        for theta in np.ndindex(2, 2):
            half_bid = int(AUCTION_VALUES[theta[i]] // 2)
            d[theta] = half_bid
        dev.append(d)
    return SmoothnessSpec.create(lam, mu, "mechanism", dev)
