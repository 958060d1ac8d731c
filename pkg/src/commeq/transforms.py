"""The swap-transform polytope for one player's policy space.

A transform couples a row-stochastic type mixer W with one action
distribution per (source type, reported type, recommended action).  Its dense
form acts linearly on policy matrices flattened type-major, maps the policy
space into itself, and always has a fixed point there; the 0/1 members are
exactly the pure (type misreport, action swap) deviations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BadInput, NoConvergence, NotShiftable, NotStochastic, NotValidOnX
from .game import SUM_TOL_INGEST, uniform_policy

FIXED_POINT_TOL = 1e-10
FIXED_POINT_CAP = 100_000
VERTEX_CHECK_CAP = 4096


@dataclass(frozen=True)
class DeviationPair:
    """A pure deviation: psi misreports the type, phi swaps the action.

    ``phi[theta, a_recommended]`` is the action actually played.
    """

    psi: np.ndarray   # (|Theta|,) type indices
    phi: np.ndarray   # (|Theta|, |A|) action indices

    @staticmethod
    def create(psi, phi) -> DeviationPair:
        psi = np.asarray(psi, dtype=np.int64)
        phi = np.asarray(phi, dtype=np.int64)
        k = psi.size
        if phi.ndim != 2 or phi.shape[0] != k:
            raise BadInput("phi must be a (types x actions) index table")
        if psi.min(initial=0) < 0 or psi.max(initial=0) >= k:
            raise BadInput("psi is not a total map over the type set")
        if phi.min(initial=0) < 0 or phi.max(initial=0) >= phi.shape[1]:
            raise BadInput("phi is not a total map into the action set")
        return DeviationPair(psi, phi)

    @staticmethod
    def identity(num_types: int, num_actions: int) -> DeviationPair:
        return DeviationPair(np.arange(num_types),
                             np.tile(np.arange(num_actions), (num_types, 1)))


@dataclass(frozen=True)
class SwapTransform:
    """A polytope member: type mixer W plus per-(theta, theta', a') action columns.

    ``blocks[theta, theta', a', :]`` is a distribution over played actions a;
    the dense entry is Q((theta,a),(theta',a')) = W(theta,theta') *
    blocks[theta,theta',a',a].
    """

    W: np.ndarray        # (K, K) row-stochastic
    blocks: np.ndarray   # (K, K, M, M), last axis a distribution

    @property
    def num_types(self) -> int:
        return self.W.shape[0]

    @property
    def num_actions(self) -> int:
        return self.blocks.shape[2]

    def dense(self) -> np.ndarray:
        k, m = self.num_types, self.num_actions
        q4 = self.W[:, None, :, None] * self.blocks.transpose(0, 3, 1, 2)
        return q4.reshape(k * m, k * m)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Dense multiplication of a (K, M) policy; returns a (K, M) policy."""
        k, m = self.num_types, self.num_actions
        return (self.dense() @ x.reshape(k * m)).reshape(k, m)


def assemble_transform(w: np.ndarray, y: np.ndarray) -> SwapTransform:
    """Assemble from per-type report mixes w[theta] and columns y[theta,theta',a'].

    Raises NotStochastic if any input row fails the probability checks.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise BadInput("w must be square (types x types)")
    k = w.shape[0]
    if y.shape[:2] != (k, k) or y.ndim != 4 or y.shape[2] != y.shape[3]:
        raise BadInput(f"y must have shape (K, K, M, M), got {y.shape}")
    if w.min() < 0 or np.abs(w.sum(axis=1) - 1.0).max() > SUM_TOL_INGEST:
        raise NotStochastic("some w row is not a probability vector")
    if y.min() < 0 or np.abs(y.sum(axis=3) - 1.0).max() > SUM_TOL_INGEST:
        raise NotStochastic("some y column is not a probability vector")
    return SwapTransform(w.copy(), y.copy())


def deviation_to_transform(dev: DeviationPair) -> SwapTransform:
    """The 0/1 vertex with Q((theta,a),(theta',a')) = 1 iff theta' = psi(theta)
    and a = phi(theta, a')."""
    k, m = dev.phi.shape
    w = np.zeros((k, k))
    w[np.arange(k), dev.psi] = 1.0
    y = np.zeros((k, k, m, m))
    for theta in range(k):
        for ap in range(m):
            y[theta, :, ap, dev.phi[theta, ap]] = 1.0
    return SwapTransform(w, y)


def random_transform(rng: np.random.Generator, num_types: int, num_actions: int,
                     positive: bool = True) -> SwapTransform:
    """A random interior member; with positive=True every dense entry is > 0."""
    w = rng.random((num_types, num_types)) + (0.05 if positive else 0.0)
    w /= w.sum(axis=1, keepdims=True)
    y = rng.random((num_types, num_types, num_actions, num_actions)) + (0.05 if positive else 0.0)
    y /= y.sum(axis=3, keepdims=True)
    return SwapTransform(w, y)


def _power_fixed_point(dense: np.ndarray, seed: np.ndarray, tol: float,
                       cap: int) -> tuple[np.ndarray, float, int]:
    """Iterate x <- Qx until the residual drops below tol or plateaus.

    Returns (x, residual, iterations); the caller decides what a bad residual
    means.  No renormalization is needed: Q maps the policy space into itself.
    """
    x = seed
    best = np.inf
    last_check = np.inf
    for it in range(1, cap + 1):
        qx = dense @ x
        res = float(np.abs(qx - x).max())
        if res <= tol:
            return x, res, it
        if res < best:
            best = res
        if it % 100 == 0:
            if best > 0.9 * last_check:  # plateau: not even 10% progress in 100 steps
                return qx, res, it
            last_check = best
        x = qx
    return x, best, cap


def fixed_point(q: SwapTransform, tol: float = FIXED_POINT_TOL,
                seed_policy: np.ndarray | None = None) -> np.ndarray:
    """A policy x with ||Qx - x||_inf <= tol.

    Power iteration from the seed (uniform by default); for strictly positive
    transforms the normalized fixed direction is unique and iteration
    converges.  Degenerate transforms (permutations and other boundary cases)
    fall through to a least-squares solve of (Q - I)x = 0 with the per-type
    normalization rows appended.  Ties among multiple fixed points resolve to
    whatever the seeded iteration or the solver reaches; uniqueness is only
    guaranteed for positive transforms.
    """
    k, m = q.num_types, q.num_actions
    dense = q.dense()
    seed = uniform_policy(k, m) if seed_policy is None else np.asarray(seed_policy, dtype=float)
    x, res, its = _power_fixed_point(dense, seed.reshape(k * m), tol, FIXED_POINT_CAP)
    if res <= tol:
        return x.reshape(k, m)
    x, res2 = _solve_fixed_point(dense, k, m)
    if res2 <= tol and x.min() >= -tol:
        return np.clip(x, 0.0, None).reshape(k, m)
    raise NoConvergence(its, min(res, res2))


def _solve_fixed_point(dense: np.ndarray, k: int, m: int) -> tuple[np.ndarray, float]:
    d = k * m
    norm_rows = np.zeros((k, d))
    for theta in range(k):
        norm_rows[theta, theta * m:(theta + 1) * m] = 1.0
    a = np.vstack([dense - np.eye(d), norm_rows])
    b = np.concatenate([np.zeros(d), np.ones(k)])
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    res = float(np.abs(dense @ x - x).max())
    res = max(res, float(np.abs(norm_rows @ x - 1.0).max()))
    return x, res


def transform_membership_violation(q: SwapTransform) -> float:
    """Largest violation of the polytope membership conditions (0 when valid)."""
    neg = max(0.0, -float(q.W.min()), -float(q.blocks.min()))
    w_rows = float(np.abs(q.W.sum(axis=1) - 1.0).max())
    cols = float(np.abs(q.blocks.sum(axis=3) - 1.0).max())
    # dense column sums within each block must reproduce W exactly
    k, m = q.num_types, q.num_actions
    dense = q.dense().reshape(k, m, k, m)
    wsums = dense.sum(axis=1)
    spread = float(np.abs(wsums - q.W[:, :, None]).max())
    return max(neg, w_rows, cols, spread)


def vertex_policies(num_types: int, num_actions: int):
    """Iterate all |A|^|Theta| deterministic policies."""
    for assignment in itertools.product(range(num_actions), repeat=num_types):
        x = np.zeros((num_types, num_actions))
        x[np.arange(num_types), assignment] = 1.0
        yield x


def linear_to_transform(m: np.ndarray, num_types: int, num_actions: int,
                        tol: float = 1e-9, vertex_cap: int = VERTEX_CHECK_CAP,
                        rng: np.random.Generator | None = None) -> SwapTransform:
    """Convert any linear map that is valid on the policy space into a member
    of the transform polytope acting identically on that space.

    Validity is checked on every vertex policy when |A|^|Theta| is within the
    cap, on sampled vertices otherwise.  The conversion shifts each row by
    per-block constants summing to zero, absorbing the slack into the last
    type's block; by construction this never changes Mx for row-stochastic x.
    """
    k, mm = num_types, num_actions
    d = k * mm
    mat = np.asarray(m, dtype=float)
    if mat.shape != (d, d):
        raise BadInput(f"matrix must be {d}x{d}, got {mat.shape}")

    n_vertices = mm ** k
    if n_vertices <= vertex_cap:
        vertices = vertex_policies(k, mm)
    else:
        rng = rng or np.random.default_rng(0)
        def _sampled():
            for _ in range(vertex_cap):
                assignment = rng.integers(0, mm, size=k)
                x = np.zeros((k, mm))
                x[np.arange(k), assignment] = 1.0
                yield x
        vertices = _sampled()
    for x in vertices:
        y = (mat @ x.reshape(d)).reshape(k, mm)
        if y.min() < -tol or np.abs(y.sum(axis=1) - 1.0).max() > tol:
            raise NotValidOnX("map sends a vertex policy outside the policy space")

    m4 = mat.reshape(k, mm, k, mm)
    # block-column sums must be constant across a'; W is that constant
    col_sums = m4.sum(axis=1)                      # (K_theta, K_theta', M_a')
    if float((col_sums.max(axis=2) - col_sums.min(axis=2)).max()) > 1e-7:
        raise NotValidOnX("block column sums vary with the recommended action")

    shifted = m4.copy()
    theta_star = k - 1                              # last type absorbs the slack
    row_mins = m4.min(axis=3)                       # (K, M, K) min over a'
    for theta in range(k):
        for a in range(mm):
            shifts = -row_mins[theta, a].copy()
            shifts[theta_star] = row_mins[theta, a].sum() - row_mins[theta, a, theta_star]
            shifted[theta, a] += shifts[:, None]
    if shifted.min() < -1e-9 or shifted.max() > 1 + 1e-9:
        raise NotShiftable("shifted entries escaped [0,1]; this is a bug, not bad input")
    shifted = np.clip(shifted, 0.0, 1.0)

    w = shifted.sum(axis=1)[:, :, 0]                # (K, K), constant over a'
    blocks = np.empty((k, k, mm, mm))
    for theta in range(k):
        for tp in range(k):
            if w[theta, tp] > 1e-12:
                blocks[theta, tp] = shifted[theta, :, tp, :].T / w[theta, tp]
            else:
                blocks[theta, tp] = 1.0 / mm        # weightless block: any column works
    blocks /= blocks.sum(axis=3, keepdims=True)     # absorb clipping dust
    w = np.clip(w, 0.0, None)
    w /= w.sum(axis=1, keepdims=True)
    return SwapTransform(w, blocks)
