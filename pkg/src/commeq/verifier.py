"""Exact equilibrium auditing of play distributions.

Deviation gains for every equilibrium class are computed from one exact
tensor per player: G[theta, theta', a', a] is the expected payoff of
reporting theta', receiving recommendation a', and playing a, when the true
type is theta.  All incentive maxima then decompose per true type and per
recommended action, mirroring the regret ledger, so certificates are
polynomial to produce and carry replayable witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AuditError, BadInput, EnumerationTooLarge, SupportTooLarge
from .game import (BayesianGame, MixtureDistribution, StrategyDistribution,
                   decode_strategy_profile, mixture_to_tabular, strategy_space_size,
                   strategy_table)
from .simplexlp import solve_equality_feasibility

DEFAULT_LP_CAP = 10**4
DEFAULT_ENUM_CAP = 10**7
WITNESS_TOL = 1e-9

EQ_CLASSES = ("comm", "anf-bs", "bne", "coarse-bs", "sfce", "sfcce", "anfcce")


@dataclass(frozen=True)
class DeviationGainTensor:
    """G[theta, theta', a', a] plus the truthful value for one player."""

    player: int
    gains: np.ndarray        # (K, K, M, M)
    truthful: float

    def replay(self, psi, phi) -> float:
        """Deviation value minus truthful value for a concrete (psi, phi)."""
        k, m = self.gains.shape[0], self.gains.shape[2]
        psi = np.asarray(psi, dtype=np.int64)
        phi = np.asarray(phi, dtype=np.int64)
        value = 0.0
        for theta in range(k):
            for b in range(m):
                value += self.gains[theta, psi[theta], b, phi[theta, b]]
        return value - self.truthful


@dataclass(frozen=True)
class PlayerDeviation:
    player: int
    gain: float              # signed best-deviation advantage
    witness: dict


@dataclass(frozen=True)
class EquilibriumCertificate:
    klass: str
    epsilon: float           # max_i max(0, gain_i)
    per_player: tuple[PlayerDeviation, ...]
    representable: bool | None = None    # None = not assessed
    product_gap: float | None = None     # bne only

    def to_json_dict(self) -> dict:
        return {
            "class": self.klass,
            "epsilon": self.epsilon,
            "per_player": [
                {"player": d.player, "gain": d.gain, "witness": d.witness}
                for d in self.per_player
            ],
            "representable": self.representable,
            **({"product_gap": self.product_gap} if self.product_gap is not None else {}),
        }


def _as_own_view_dist(game: BayesianGame, i: int, dist) -> tuple:
    """Split a distribution input into pieces the tensor kernels consume.

    Returns ("mixture", weights, pol_i, opp_stack) or ("tabular", reshaped)
    where reshaped has axes (Theta_i, Theta_-i, A_i, A_-i).
    """
    nt, na = game.num_types, game.num_actions
    if isinstance(dist, MixtureDistribution):
        opp = np.ones((dist.num_components, 1, 1))
        for j in range(game.n):
            if j == i:
                continue
            p = dist.policies[j]
            opp = (opp[:, :, None, :, None] * p[:, None, :, None, :]).reshape(
                opp.shape[0], opp.shape[1] * p.shape[1], opp.shape[2] * p.shape[2])
        return "mixture", dist.weights, dist.policies[i], opp
    pi = np.asarray(dist, dtype=float)
    if pi.shape != nt + na:
        raise BadInput(f"tabular distribution must have shape {nt + na}")
    moved = np.moveaxis(pi, i, 0)
    moved = np.moveaxis(moved, game.n + i, game.n)
    ot = int(np.prod([nt[j] for j in range(game.n) if j != i], initial=1))
    oa = int(np.prod([na[j] for j in range(game.n) if j != i], initial=1))
    return "tabular", moved.reshape(nt[i], ot, na[i], oa)


def deviation_tensor(game: BayesianGame, i: int, dist,
                     cap: int = DEFAULT_ENUM_CAP) -> DeviationGainTensor:
    """Exact deviation-gain tensor by full enumeration over opponents."""
    nt, na = game.num_types, game.num_actions
    cells = 1
    for j in range(game.n):
        if j != i:
            cells *= nt[j] * na[j]
    if cells > cap:
        raise EnumerationTooLarge(f"{cells} opponent cells exceed cap {cap}")
    cond = game.prior.conditional_matrix(i)
    v = game.payoff_from_own_view(i)         # (K, M, O, P)
    parts = _as_own_view_dist(game, i, dist)
    if parts[0] == "mixture":
        _, weights, pol_i, opp = parts
        per_round = np.einsum("io,top,iaop->tia", cond, opp, v, optimize=True)
        gains = np.einsum("t,tjb,tia->ijba", weights, pol_i, per_round, optimize=True)
    else:
        pi = parts[1]                        # (K_j', O, M_b, P)
        gains = np.einsum("io,jobp,iaop->ijba", cond, pi, v, optimize=True)
    rho = game.prior.marginals[i]
    truthful = float((rho * np.einsum("iibb->ib", gains).sum(axis=1)).sum())
    return DeviationGainTensor(i, gains, truthful)


def _certify(klass, gains_witnesses, representable=None, product_gap=None):
    eps = max(max(0.0, d.gain) for d in gains_witnesses)
    return EquilibriumCertificate(klass, eps, tuple(gains_witnesses),
                                  representable, product_gap)


def comm_eq_epsilon(game: BayesianGame, dist, cap: int = DEFAULT_ENUM_CAP
                    ) -> EquilibriumCertificate:
    """Best (type misreport, action swap) advantage per player, clamped at 0."""
    devs = []
    for i in range(game.n):
        tensor = deviation_tensor(game, i, dist, cap)
        rho = game.prior.marginals[i]
        weighted = rho[:, None, None, None] * tensor.gains
        per_report = weighted.max(axis=3).sum(axis=2)     # (K, K')
        psi = per_report.argmax(axis=1)
        k = psi.size
        phi = weighted.argmax(axis=3)[np.arange(k), psi, :]
        gain = float(per_report.max(axis=1).sum()) - tensor.truthful
        devs.append(PlayerDeviation(i, gain, {"psi": psi.tolist(), "phi": phi.tolist()}))
    return _certify("comm", devs)


def anf_bs_epsilon(game: BayesianGame, dist, cap: int = DEFAULT_ENUM_CAP,
                   check_representability: bool = True,
                   lp_cap: int = DEFAULT_LP_CAP) -> EquilibriumCertificate:
    """Action-swap-only advantage (truthful reporting pinned).

    The certificate additionally records strategy representability when the
    game is small enough for the feasibility LP: with zero gain it separates
    plain Bayesian solutions from distributions a strategy mediator realizes.
    """
    devs = []
    for i in range(game.n):
        tensor = deviation_tensor(game, i, dist, cap)
        rho = game.prior.marginals[i]
        diag = np.einsum("iiba->iba", tensor.gains)       # (K, M_b, M_a)
        weighted = rho[:, None, None] * diag
        phi = weighted.argmax(axis=2)
        gain = float(weighted.max(axis=2).sum()) - tensor.truthful
        devs.append(PlayerDeviation(i, gain, {"phi": phi.tolist()}))
    representable = None
    if check_representability:
        try:
            rep = strategy_representable(_to_tabular(game, dist), cap=lp_cap)
            representable = rep.feasible
        except SupportTooLarge:
            representable = None
    return _certify("anf-bs", devs, representable)


def bne_epsilon(game: BayesianGame, dist, cap: int = DEFAULT_ENUM_CAP
                ) -> EquilibriumCertificate:
    """Bayes Nash check in the agent normal form: action-swap gains plus a
    type-wise-product test on the distribution itself."""
    base = anf_bs_epsilon(game, dist, cap, check_representability=False)
    gap = typewise_product_gap(_to_tabular(game, dist), game.n)
    return EquilibriumCertificate("bne", base.epsilon, base.per_player,
                                  None, gap)


def typewise_product_gap(pi: np.ndarray, n: int) -> float:
    """Max deviation of pi from any type-wise product distribution."""
    nt, na = pi.shape[:n], pi.shape[n:]
    gap = 0.0
    factors = []
    for i in range(n):
        # candidate per-(type) action marginal, averaged over opponent profiles
        axes_t = tuple(j for j in range(n) if j != i)
        axes_a = tuple(n + j for j in range(n) if j != i)
        marg = pi.sum(axis=axes_a)                        # (*types, A_i)
        marg_i = np.moveaxis(marg, i, 0).reshape(nt[i], -1, na[i])
        mean = marg_i.mean(axis=1)
        gap = max(gap, float(np.abs(marg_i - mean[:, None, :]).max()))
        factors.append(mean)
    recon = np.ones(())
    for i in range(n):
        recon = np.multiply.outer(recon, factors[i])      # types and actions interleaved
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    recon = recon.transpose(order)
    gap = max(gap, float(np.abs(recon - pi).max()))
    return gap


def coarse_epsilon(game: BayesianGame, dist, klass: str,
                   cap: int = DEFAULT_ENUM_CAP,
                   strategy_cap: int = DEFAULT_LP_CAP) -> EquilibriumCertificate:
    """Coarse classes: fixed deviations that ignore the recommendation.

    "coarse-bs" audits a type-wise distribution; "sfcce" and "anfcce" audit an
    explicit strategy distribution.
    """
    if klass == "coarse-bs":
        devs = []
        for i in range(game.n):
            tensor = deviation_tensor(game, i, dist, cap)
            rho = game.prior.marginals[i]
            diag = np.einsum("iiba->iba", tensor.gains)
            dev_value = diag.sum(axis=1)                   # (K, M_dev)
            truthful_by_type = np.einsum("ibb->ib", diag).sum(axis=1)
            gains = rho[:, None] * (dev_value - truthful_by_type[:, None])
            devs.append(PlayerDeviation(i, *_joint_coarse(gains)))
        return _certify("coarse-bs", devs)
    if klass not in ("sfcce", "anfcce", "sfce"):
        raise BadInput(f"unknown coarse class {klass!r}")
    if not isinstance(dist, StrategyDistribution):
        raise BadInput(f"class {klass!r} audits an explicit strategy distribution")
    return _sigma_epsilon(game, dist, klass, strategy_cap)


def sfce_epsilon(game: BayesianGame, sigma: StrategyDistribution,
                 strategy_cap: int = DEFAULT_LP_CAP) -> EquilibriumCertificate:
    """Full strategy-swap deviations on a strategy distribution (tiny games)."""
    return _sigma_epsilon(game, sigma, "sfce", strategy_cap)


def _payoff_under_profile(game: BayesianGame, rows: list[np.ndarray], i: int,
                          override_row: np.ndarray | None = None,
                          override_action: int | None = None) -> np.ndarray:
    """v_i(theta; s(theta)) over all theta, optionally overriding player i's play."""
    nt = game.num_types
    grids = np.ix_(*(np.arange(k) for k in nt))
    actions = []
    for j in range(game.n):
        if j == i and override_action is not None:
            actions.append(np.broadcast_to(np.int64(override_action), ()))
        elif j == i and override_row is not None:
            actions.append(override_row[grids[j]])
        else:
            actions.append(rows[j][grids[j]])
    idx = tuple(grids) + tuple(actions)
    return game.payoffs[i][idx]


def _sigma_epsilon(game: BayesianGame, sigma: StrategyDistribution, klass: str,
                   cap: int) -> EquilibriumCertificate:
    if sigma.size > cap:
        raise SupportTooLarge(f"|S| = {sigma.size} exceeds cap {cap}")
    if sigma.num_types != game.num_types or sigma.num_actions != game.num_actions:
        raise BadInput("strategy distribution dims disagree with the game")
    prior_table = game.prior.full_table()
    support = np.flatnonzero(sigma.probs)
    profiles = [decode_strategy_profile(int(s), sigma.num_types, sigma.num_actions)
                for s in support]
    devs = []
    for i in range(game.n):
        nt_i, na_i = game.num_types[i], game.num_actions[i]
        truthful = 0.0
        played = []
        for w, rows in zip(sigma.probs[support], profiles):
            grid = _payoff_under_profile(game, rows, i)
            played.append(grid)
            truthful += float(w * (prior_table * grid).sum())
        if klass == "sfcce":
            table_i = strategy_table(nt_i, na_i)
            best_gain, best_s = -np.inf, 0
            for sp in range(table_i.shape[0]):
                value = 0.0
                for w, rows in zip(sigma.probs[support], profiles):
                    grid = _payoff_under_profile(game, rows, i, override_row=table_i[sp])
                    value += float(w * (prior_table * grid).sum())
                if value - truthful > best_gain:
                    best_gain, best_s = value - truthful, sp
            devs.append(PlayerDeviation(i, best_gain,
                                        {"strategy": table_i[best_s].tolist()}))
        elif klass == "anfcce":
            gains = np.full((nt_i, na_i), -np.inf)
            for theta in range(nt_i):
                mask = _type_mask(game, i, theta)
                for a_dev in range(na_i):
                    value = 0.0
                    for w, (rows, grid) in zip(sigma.probs[support], zip(profiles, played)):
                        dev_grid = _payoff_under_profile(game, rows, i, override_action=a_dev)
                        value += float(w * (prior_table * mask * (dev_grid - grid)).sum())
                    gains[theta, a_dev] = value
            devs.append(PlayerDeviation(i, *_joint_coarse(gains)))
        else:  # sfce: recommendation-conditional strategy swap
            table_i = strategy_table(nt_i, na_i)
            gain_total, witness = 0.0, {}
            for rec in range(table_i.shape[0]):
                members = [t for t, rows in enumerate(profiles)
                           if np.array_equal(rows[i], table_i[rec])]
                if not members:
                    continue
                base = sum(float(sigma.probs[support][t] * (prior_table * played[t]).sum())
                           for t in members)
                best = -np.inf
                best_s = rec
                for sp in range(table_i.shape[0]):
                    value = 0.0
                    for t in members:
                        grid = _payoff_under_profile(game, profiles[t], i,
                                                     override_row=table_i[sp])
                        value += float(sigma.probs[support][t] * (prior_table * grid).sum())
                    if value > best:
                        best, best_s = value, sp
                gain_total += best - base
                if best_s != rec:
                    witness[str(table_i[rec].tolist())] = table_i[best_s].tolist()
            devs.append(PlayerDeviation(i, gain_total, {"swap": witness}))
    return _certify(klass, devs)


def _joint_coarse(gains: np.ndarray) -> tuple[float, dict]:
    """Aggregate per-(type, fixed action) gains into a joint coarse deviation.

    The deviator picks, per type, either a fixed action or following along, so
    the total advantage sums each type's positive part; this is what makes the
    per-type coarse class at least as demanding as full-strategy deviations.
    """
    best = gains.max(axis=1)
    choice = gains.argmax(axis=1)
    witness = {"per_type_action": [int(choice[t]) if best[t] > 0 else None
                                   for t in range(gains.shape[0])]}
    return float(np.maximum(best, 0.0).sum()), witness


def _type_mask(game: BayesianGame, i: int, theta: int) -> np.ndarray:
    shape = [1] * game.n
    shape[i] = game.num_types[i]
    mask = np.zeros(game.num_types[i])
    mask[theta] = 1.0
    return mask.reshape(shape)


# ---------------------------------------------------------------------------
# strategy representability

@dataclass(frozen=True)
class RepresentabilityResult:
    feasible: bool
    sigma: StrategyDistribution | None
    farkas: np.ndarray | None
    marginal_error: float     # feasible: max marginal reproduction error
    infeasibility: float      # infeasible: certified violation mass


def strategy_representable(pi: np.ndarray, cap: int = DEFAULT_LP_CAP
                           ) -> RepresentabilityResult:
    """Linear feasibility: is pi the type-profile-wise push-forward of some
    distribution over full strategy profiles?

    ``pi`` is an explicit array over (Theta..., A...).  Feasible outcomes
    carry a witness sigma; infeasible ones carry a Farkas row separating pi
    from every representable distribution.
    """
    pi = np.asarray(pi, dtype=float)
    n = pi.ndim // 2
    nt, na = pi.shape[:n], pi.shape[n:]
    size = strategy_space_size(nt, na)
    if size > cap:
        raise SupportTooLarge(f"|S| = {size} exceeds cap {cap}")
    n_theta = int(np.prod(nt))
    n_act = int(np.prod(na))
    a_mat = np.zeros((n_theta * n_act + 1, size))
    tables = [strategy_table(nt[i], na[i]) for i in range(n)]
    for s in range(size):
        rows = decode_strategy_profile(s, nt, na)
        for flat_theta, theta in enumerate(np.ndindex(*nt)):
            a_idx = 0
            for j in range(n):
                a_idx = a_idx * na[j] + int(rows[j][theta[j]])
            a_mat[flat_theta * n_act + a_idx, s] = 1.0
    a_mat[-1, :] = 1.0
    b = np.concatenate([pi.reshape(-1), [1.0]])
    res = solve_equality_feasibility(a_mat, b)
    if res.feasible:
        sigma = StrategyDistribution.create(nt, na, res.x / res.x.sum(), cap=max(cap, size))
        err = float(np.abs(a_mat[:-1] @ sigma.probs - pi.reshape(-1)).max())
        if err > 1e-7:
            raise AuditError(f"feasible witness reproduces marginals only to {err:.3e}")
        return RepresentabilityResult(True, sigma, None, err, 0.0)
    farkas = res.farkas
    certified = float(farkas @ b)
    worst_col = float((farkas @ a_mat).max())
    if certified < 1e-7 or worst_col > 1e-9:
        raise AuditError("Farkas certificate failed verification")
    return RepresentabilityResult(False, None, farkas, np.inf, certified)


def _to_tabular(game: BayesianGame, dist) -> np.ndarray:
    if isinstance(dist, MixtureDistribution):
        return mixture_to_tabular(dist)
    return np.asarray(dist, dtype=float)


# ---------------------------------------------------------------------------
# conditional independence

def conditional_independence(prior, pi: np.ndarray, tol: float = 1e-9):
    """Check that each player's action is conditionally independent of the
    others' types given their own type.

    Returns (True, None) or (False, (player, theta_profile, action)) with the
    worst-violating coordinate.
    """
    pi = np.asarray(pi, dtype=float)
    n = pi.ndim // 2
    nt, na = pi.shape[:n], pi.shape[n:]
    joint = prior.full_table().reshape(nt + (1,) * n) * pi
    worst = (0.0, None)
    for i in range(n):
        axes_a = tuple(n + j for j in range(n) if j != i)
        ta = joint.sum(axis=axes_a)                    # (*types, A_i)
        ta = np.moveaxis(ta, i, 0)
        ta = np.moveaxis(ta, ta.ndim - 1, 1)           # (T_i, A_i, *T_-i)
        flat = ta.reshape(nt[i], na[i], -1)
        rho_i = prior.marginals[i]
        for theta in range(nt[i]):
            if rho_i[theta] <= 0:
                continue
            m = flat[theta] / rho_i[theta]             # Pr(a_i, theta_-i | theta_i)
            gap = np.abs(m - m.sum(axis=1, keepdims=True) * m.sum(axis=0, keepdims=True))
            g = float(gap.max())
            if g > worst[0]:
                a_i, o = np.unravel_index(int(gap.argmax()), gap.shape)
                other_dims = [nt[j] for j in range(n) if j != i]
                others = np.unravel_index(o, other_dims) if other_dims else ()
                profile = list(others)
                profile.insert(i, theta)
                worst = (g, (i, tuple(int(x) for x in profile), int(a_i)))
    if worst[0] > tol:
        return False, worst[1]
    return True, None
