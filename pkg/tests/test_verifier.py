import numpy as np
import pytest

from commeq import fixtures
from commeq.errors import SupportTooLarge
from commeq.game import (BayesianGame, PriorModel, StrategyDistribution,
                         mixture_to_tabular, strategy_to_mixture)
from commeq.verifier import (anf_bs_epsilon, bne_epsilon, coarse_epsilon,
                             comm_eq_epsilon, conditional_independence,
                             deviation_tensor, sfce_epsilon,
                             strategy_representable, typewise_product_gap)

from .oracles import enumerate_comm_gain


def random_mixture(rng, num_types, num_actions, components):
    profiles = []
    for _ in range(components):
        prof = []
        for k, m in zip(num_types, num_actions):
            p = rng.random((k, m))
            prof.append(p / p.sum(axis=1, keepdims=True))
        profiles.append(prof)
    w = rng.random(components)
    from commeq.game import MixtureDistribution
    return MixtureDistribution.create(w / w.sum(), profiles)


def random_game(rng, num_types, num_actions, tabular_prior=False):
    if tabular_prior:
        t = rng.random(num_types)
        prior = PriorModel.tabular(t / t.sum())
    else:
        rows = []
        for k in num_types:
            r = rng.random(k) + 0.05
            rows.append(r / r.sum())
        prior = PriorModel.product(rows)
    shape = tuple(num_types) + tuple(num_actions)
    payoffs = [rng.random(shape) for _ in num_types]
    types = [[str(j) for j in range(k)] for k in num_types]
    actions = [[str(j) for j in range(m)] for m in num_actions]
    return BayesianGame.create(types, actions, prior, payoffs)


# ---------------------------------------------------------------------------
# deviation tensor

def test_tensor_single_player():
    rng = np.random.default_rng(0)
    game = random_game(rng, (2,), (3,))
    pi = rng.random((2, 3))
    pi /= pi.sum(axis=1, keepdims=True)
    tensor = deviation_tensor(game, 0, pi.reshape(2, 3))
    v = game.payoffs[0]
    for th in range(2):
        for tp in range(2):
            for b in range(3):
                for a in range(3):
                    assert tensor.gains[th, tp, b, a] == pytest.approx(
                        pi[tp, b] * v[th, a], abs=1e-12)
    rho = game.prior.marginals[0]
    want = sum(rho[th] * pi[th, a] * v[th, a] for th in range(2) for a in range(3))
    assert tensor.truthful == pytest.approx(want, abs=1e-12)


def test_tensor_zero_payoff_player():
    game = fixtures.zero_payoff_game()
    pi = fixtures.nonrepresentable_distribution()
    tensor = deviation_tensor(game, 0, pi)
    assert np.all(tensor.gains == 0.0)


def test_tensor_mixture_equals_tabular():
    rng = np.random.default_rng(1)
    game = random_game(rng, (2, 2), (2, 3), tabular_prior=True)
    mix = random_mixture(rng, (2, 2), (2, 3), 7)
    tab = mixture_to_tabular(mix)
    for i in range(2):
        a = deviation_tensor(game, i, mix)
        b = deviation_tensor(game, i, tab)
        assert np.allclose(a.gains, b.gains, atol=1e-12)
        assert a.truthful == pytest.approx(b.truthful, abs=1e-12)


def test_guessing_game_truthful_value_half():
    tensor = deviation_tensor(fixtures.guessing_game(), 0,
                              fixtures.guessing_game_distribution())
    assert tensor.truthful == pytest.approx(0.5, abs=1e-12)


# ---------------------------------------------------------------------------
# communication-equilibrium certificates

def test_comm_matches_enumeration_small():
    rng = np.random.default_rng(2)
    for tabular_prior in (False, True):
        game = random_game(rng, (2, 2), (2, 2), tabular_prior=tabular_prior)
        mix = random_mixture(rng, (2, 2), (2, 2), 4)
        tab = mixture_to_tabular(mix)
        cert = comm_eq_epsilon(game, mix)
        for dev in cert.per_player:
            want = enumerate_comm_gain(game, tab, dev.player)
            assert dev.gain == pytest.approx(want, abs=1e-9)


def test_comm_witness_replay():
    rng = np.random.default_rng(3)
    game = random_game(rng, (2, 3), (2, 2))
    mix = random_mixture(rng, (2, 3), (2, 2), 5)
    cert = comm_eq_epsilon(game, mix)
    for dev in cert.per_player:
        tensor = deviation_tensor(game, dev.player, mix)
        rho = game.prior.marginals[dev.player]
        psi = np.asarray(dev.witness["psi"])
        phi = np.asarray(dev.witness["phi"])
        k, m = tensor.gains.shape[0], tensor.gains.shape[2]
        replay = sum(rho[th] * tensor.gains[th, psi[th], b, phi[th, b]]
                     for th in range(k) for b in range(m)) - tensor.truthful
        assert replay == pytest.approx(dev.gain, abs=1e-9)


def test_guessing_game_is_comm_equilibrium():
    cert = comm_eq_epsilon(fixtures.guessing_game(),
                           fixtures.guessing_game_distribution())
    assert cert.epsilon == pytest.approx(0.0, abs=1e-12)


def test_zero_game_everything_zero():
    game = fixtures.zero_payoff_game()
    pi = fixtures.nonrepresentable_distribution()
    assert comm_eq_epsilon(game, pi).epsilon == 0.0
    assert anf_bs_epsilon(game, pi, check_representability=False).epsilon == 0.0
    assert coarse_epsilon(game, pi, "coarse-bs").epsilon == 0.0


def test_anf_bs_below_comm():
    rng = np.random.default_rng(4)
    for _ in range(10):
        game = random_game(rng, (2, 2), (2, 2))
        mix = random_mixture(rng, (2, 2), (2, 2), 3)
        comm = comm_eq_epsilon(game, mix)
        anf = anf_bs_epsilon(game, mix, check_representability=False)
        assert anf.epsilon <= comm.epsilon + 1e-12
        coarse = coarse_epsilon(game, mix, "coarse-bs")
        assert coarse.epsilon <= anf.epsilon + 1e-12


def test_comm_zero_and_representable_implies_anf_zero():
    game = fixtures.guessing_game()
    pi = fixtures.guessing_game_distribution()
    assert comm_eq_epsilon(game, pi).epsilon == pytest.approx(0.0, abs=1e-12)
    cert = anf_bs_epsilon(game, pi)
    assert cert.representable is True
    assert cert.epsilon == pytest.approx(0.0, abs=1e-12)


def test_coarse_witness_replays_to_gain():
    rng = np.random.default_rng(9)
    game = random_game(rng, (2, 2), (2, 2))
    mix = random_mixture(rng, (2, 2), (2, 2), 3)
    cert = coarse_epsilon(game, mix, "coarse-bs")
    for dev in cert.per_player:
        tensor = deviation_tensor(game, dev.player, mix)
        rho = game.prior.marginals[dev.player]
        diag = np.einsum("iiba->iba", tensor.gains)
        replay = 0.0
        for theta, action in enumerate(dev.witness["per_type_action"]):
            if action is None:
                continue
            truthful_theta = sum(diag[theta, b, b] for b in range(diag.shape[1]))
            replay += rho[theta] * (diag[theta, :, action].sum() - truthful_theta)
        assert replay == pytest.approx(dev.gain, abs=1e-9)


def test_example_bayesian_solution_not_representable():
    game = fixtures.zero_payoff_game()
    pi = fixtures.nonrepresentable_distribution()
    cert = anf_bs_epsilon(game, pi)
    assert cert.epsilon == 0.0
    assert cert.representable is False


def test_bne_dominant_strategy_game():
    prior = PriorModel.product([[0.5, 0.5], [0.5, 0.5]])
    v = np.zeros((2, 2, 2, 2))
    v[:, :, 0, :] = 1.0   # player 0's action 0 strictly dominant
    w = np.zeros((2, 2, 2, 2))
    w[:, :, :, 0] = 1.0
    game = BayesianGame.create([["a", "b"], ["a", "b"]], [["l", "r"], ["l", "r"]],
                               prior, [v, w], "own-type")
    pi = np.zeros((2, 2, 2, 2))
    pi[:, :, 0, 0] = 1.0
    cert = bne_epsilon(game, pi)
    assert cert.epsilon == pytest.approx(0.0, abs=1e-12)
    assert cert.product_gap <= 1e-12


def test_bne_product_gap_flags_correlation():
    gap = typewise_product_gap(fixtures.nonrepresentable_distribution(), 2)
    assert gap > 0.2


# ---------------------------------------------------------------------------
# coarse classes on strategy distributions

def test_correlated_fixture_sfcce_holds_anfcce_fails():
    game = fixtures.correlated_coarse_game()
    sigma = fixtures.correlated_coarse_sigma()
    assert coarse_epsilon(game, sigma, "sfcce").epsilon == pytest.approx(0.0, abs=1e-12)
    cert = coarse_epsilon(game, sigma, "anfcce")
    assert cert.epsilon == pytest.approx(0.25, abs=1e-12)
    worst = max(cert.per_player, key=lambda d: d.gain)
    assert worst.player == 0
    assert worst.witness == {"per_type_action": [1, None]}


def test_anfcce_at_least_sfcce():
    rng = np.random.default_rng(5)
    for _ in range(8):
        game = random_game(rng, (2, 1), (2, 2), tabular_prior=True)
        probs = rng.random(4 * 2)
        sigma = StrategyDistribution.create((2, 1), (2, 2), probs / probs.sum())
        sf = coarse_epsilon(game, sigma, "sfcce")
        an = coarse_epsilon(game, sigma, "anfcce")
        assert an.epsilon >= sf.epsilon - 1e-12


def test_sfce_epsilon_zero_on_uniform_zero_game():
    game = fixtures.zero_payoff_game()
    size = 4 * 4
    sigma = StrategyDistribution.create((2, 2), (2, 2), np.full(size, 1 / size))
    assert sfce_epsilon(game, sigma).epsilon == pytest.approx(0.0, abs=1e-12)


def test_sfce_detects_information_leak():
    # recommendations for unrealized types leak the opponent action, so
    # strategy swaps beat action swaps
    game = fixtures.correlated_coarse_game()
    sigma = fixtures.correlated_coarse_sigma()
    cert = sfce_epsilon(game, sigma)
    assert cert.epsilon >= 0.25 - 1e-12


# ---------------------------------------------------------------------------
# representability

def test_nonrepresentable_certificate():
    rep = strategy_representable(fixtures.nonrepresentable_distribution())
    assert not rep.feasible
    assert rep.infeasibility >= 1e-7
    assert rep.farkas is not None


def test_random_mixtures_always_feasible():
    rng = np.random.default_rng(6)
    for _ in range(20):
        mix = random_mixture(rng, (2, 2), (2, 2), int(rng.integers(1, 6)))
        rep = strategy_representable(mixture_to_tabular(mix))
        assert rep.feasible
        assert rep.marginal_error <= 1e-7


def test_feasible_witness_reproduces_marginals():
    pi = fixtures.guessing_game_distribution()
    rep = strategy_representable(pi)
    assert rep.feasible
    back = mixture_to_tabular(strategy_to_mixture(rep.sigma))
    assert np.abs(back - pi).max() <= 1e-7


def test_representable_cap():
    with pytest.raises(SupportTooLarge):
        strategy_representable(np.full((3, 3, 3, 3, 3, 3), 1 / 27), cap=100)


# ---------------------------------------------------------------------------
# conditional independence

def test_ci_holds_for_nonrepresentable_example():
    game = fixtures.zero_payoff_game()
    ok, witness = conditional_independence(game.prior,
                                           fixtures.nonrepresentable_distribution())
    assert ok and witness is None


def test_ci_holds_for_representable():
    rng = np.random.default_rng(7)
    prior = PriorModel.tabular(np.array([[0.4, 0.1], [0.1, 0.4]]))
    for _ in range(5):
        mix = random_mixture(rng, (2, 2), (2, 2), 4)
        ok, _ = conditional_independence(prior, mixture_to_tabular(mix))
        assert ok


def test_ci_fails_when_action_copies_other_type():
    prior = PriorModel.tabular(np.array([[0.4, 0.1], [0.1, 0.4]]))
    pi = np.zeros((2, 2, 2, 2))
    for t1 in range(2):
        for t2 in range(2):
            pi[t1, t2, t2, 0] = 1.0   # player 0 plays the other's type
    ok, witness = conditional_independence(prior, pi)
    assert not ok
    assert witness[0] == 0
