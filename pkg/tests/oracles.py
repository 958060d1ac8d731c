"""Independent brute-force oracles the tests check the library against.

Everything here enumerates deviation maps explicitly or replays definitions
with straight-line loops; nothing imports the decompositions under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def raw_cross_tensor(xs, us, rho):
    """C[theta, theta', a, a'] accumulated with plain loops over the trace."""
    t_max, k, m = us.shape
    c = np.zeros((k, k, m, m))
    g = 0.0
    for t in range(t_max):
        for th in range(k):
            for tp in range(k):
                for a in range(m):
                    for ap in range(m):
                        c[th, tp, a, ap] += rho[th] * us[t, th, a] * xs[t, tp, ap]
        g += float((rho[:, None] * us[t] * xs[t]).sum())
    return c, g


def all_phi_maps(k, m):
    """Every action swap as an (N, k, m) index array."""
    return np.array(list(itertools.product(range(m), repeat=k * m)),
                    dtype=np.int64).reshape(-1, k, m)


def enumerate_untruthful(xs, us, rho):
    """max over every (psi, phi) pair, evaluated on the raw cross tensor."""
    _, k, m = us.shape
    c, g = raw_cross_tensor(xs, us, rho)
    phis = all_phi_maps(k, m)
    theta_idx = np.arange(k)[None, :, None]
    ap_idx = np.arange(m)[None, None, :]
    best = -np.inf
    for psi in itertools.product(range(k), repeat=k):
        sel = c[np.arange(k), list(psi)]            # (k, m_a, m_a')
        sel = sel.transpose(0, 2, 1)                # (k, a', a)
        vals = sel[theta_idx, ap_idx, phis]         # vals[n, th, ap] = sel[th, ap, phi_n(th, ap)]
        best = max(best, float(vals.sum(axis=(1, 2)).max()))
    return best - g


def enumerate_typewise(xs, us, rho):
    _, k, m = us.shape
    c, g = raw_cross_tensor(xs, us, rho)
    phis = all_phi_maps(k, m)
    sel = c[np.arange(k), np.arange(k)].transpose(0, 2, 1)   # (k, a', a)
    theta_idx = np.arange(k)[None, :, None]
    ap_idx = np.arange(m)[None, None, :]
    vals = sel[theta_idx, ap_idx, phis]
    return float(vals.sum(axis=(1, 2)).max()) - g


def enumerate_external(xs, us, rho):
    t_max, k, m = us.shape
    best = 0.0
    for th in range(k):
        totals = np.zeros(m)
        for t in range(t_max):
            totals += rho[th] * us[t, th]
        best += totals.max()
    g = sum(float((rho[:, None] * us[t] * xs[t]).sum()) for t in range(t_max))
    return best - g


def enumerate_strategy(sigmas, us, rho, table):
    """max over every strategy swap phi_SF: S -> S."""
    t_max, s = np.asarray(sigmas).shape
    k, m = us.shape[1], us.shape[2]
    cum = np.zeros((s, k, m))
    for t in range(t_max):
        cum += np.asarray(sigmas)[t][:, None, None] * us[t][None, :, :]
    achieved = 0.0
    for t in range(t_max):
        for si in range(s):
            for th in range(k):
                achieved += rho[th] * sigmas[t][si] * us[t, th, table[si, th]]
    best = -np.inf
    for targets in itertools.product(range(s), repeat=s):
        val = 0.0
        for si, tgt in enumerate(targets):
            for th in range(k):
                val += rho[th] * cum[si, th, table[tgt, th]]
        best = max(best, val)
    return best - achieved


def enumerate_comm_gain(game, pi_tab, i):
    """Best (psi, phi) deviation advantage by direct expectation over profiles."""
    nt, na = game.num_types, game.num_actions
    prior = game.prior.full_table()
    k, m = nt[i], na[i]
    truthful = 0.0
    for theta in np.ndindex(*nt):
        for act in np.ndindex(*na):
            truthful += prior[theta] * pi_tab[theta + act] * game.payoffs[i][theta + act]
    best = -np.inf
    for psi in itertools.product(range(k), repeat=k):
        for phi_flat in itertools.product(range(m), repeat=k * m):
            phi = np.array(phi_flat).reshape(k, m)
            val = 0.0
            for theta in np.ndindex(*nt):
                rep = list(theta)
                rep[i] = psi[theta[i]]
                for act in np.ndindex(*na):
                    played = list(act)
                    played[i] = phi[theta[i], act[i]]
                    val += (prior[theta] * pi_tab[tuple(rep) + act]
                            * game.payoffs[i][theta + tuple(played)])
            best = max(best, val - truthful)
    return float(best)


# ---------------------------------------------------------------------------
# straight-line reference of the untruthful-swap learner

def reference_untruthful_trace(rho, num_actions, horizon, rewards):
    """Plain-loop replay of the untruthful-swap learner, solving each round's
    fixed point by full eigendecomposition."""
    k, m = len(rho), num_actions
    eta_type = math.sqrt(8 * math.log(k) / horizon) if k > 1 else 0.0
    logw = np.zeros((k, k))
    logy = np.zeros((k, k, m, m))
    budget = np.full((k, k, m), math.log(m))
    eta_y = np.ones((k, k, m))
    cum = np.zeros((k, k, m, m))
    x = np.full((k, m), 1.0 / m)
    y = np.full((k, k, m, m), 1.0 / m)
    trace = []
    for t in range(horizon):
        if t > 0:
            u = rewards[t - 1]
            for th in range(k):
                if rho[th] <= 0:
                    continue
                for tp in range(k):
                    for ap in range(m):
                        vec = np.array([x[tp, ap] * rho[th] * u[th, a] for a in range(m)])
                        rn = vec / rho[th]
                        logy[th, tp, ap] += eta_y[th, tp, ap] * rn
                        cum[th, tp, ap] += rn
                        if cum[th, tp, ap].max() > budget[th, tp, ap]:
                            budget[th, tp, ap] *= 2
                            eta_y[th, tp, ap] = math.sqrt(math.log(m) / budget[th, tp, ap])
                            logy[th, tp, ap] = 0.0
                            cum[th, tp, ap] = 0.0
                if k > 1:
                    for tp in range(k):
                        z = sum(y[th, tp, ap, a] * x[tp, ap] * rho[th] * u[th, a]
                                for ap in range(m) for a in range(m))
                        logw[th, tp] += eta_type * z / rho[th]
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        w /= w.sum(axis=1, keepdims=True)
        y = np.exp(logy - logy.max(axis=3, keepdims=True))
        y /= y.sum(axis=3, keepdims=True)
        dense = np.zeros((k * m, k * m))
        for th in range(k):
            for a in range(m):
                for tp in range(k):
                    for ap in range(m):
                        dense[th * m + a, tp * m + ap] = w[th, tp] * y[th, tp, ap, a]
        vals, vecs = np.linalg.eig(dense)
        idx = int(np.argmin(np.abs(vals - 1.0)))
        v = np.real(vecs[:, idx])
        v = v * (k / v.sum())
        x = v.reshape(k, m)
        trace.append(x.copy())
    return trace
