"""Dirichlet-Markov model for discrete (count-valued) telemetry series.

A finite, time-homogeneous chain on states 1..K whose transition rows
carry independent Dirichlet priors.  Conjugacy makes updates a single
count increment, and the one-step predictive is just the row of prior
plus counts, normalized.  k-step predictions use powers of that expected
matrix; long-term risk comes from its stationary distribution.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, InsufficientDataError, NumericalError

DEFAULT_DIAG = 10.0
DEFAULT_NEIGHBOR = 8.0
DEFAULT_FAR = 2.0

# Above this size the stationary fixed point is found by power iteration
# instead of a dense solve.
_DIRECT_SOLVE_MAX = 512
_POWER_TOL = 1e-12
_POWER_MAX_ITER = 200_000


def banded_prior(num_states: int, diag: float, neighbor: float, far: float) -> np.ndarray:
    """Concentration matrix favouring self then one-state transitions."""
    if num_states < 2:
        raise InputError(f"need at least 2 states, got {num_states}")
    if not diag > neighbor > far > 0:
        raise InputError(
            "prior weights must satisfy diag > neighbor > far > 0, got "
            f"({diag}, {neighbor}, {far})")
    idx = np.arange(num_states)
    dist = np.abs(idx[:, None] - idx[None, :])
    conc = np.where(dist == 0, diag, np.where(dist == 1, neighbor, far))
    return conc.astype(float)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve pi = pi P with pi >= 0 summing to one.

    Dense solve (one balance equation swapped for the normalization row)
    for small chains, power iteration for large ones.  Strictly positive
    transition matrices, as produced by the positive priors here, give a
    unique solution.
    """
    K = P.shape[0]
    if K <= _DIRECT_SOLVE_MAX:
        A = P.T - np.eye(K)
        A[-1, :] = 1.0
        b = np.zeros(K)
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
    else:
        pi = np.full(K, 1.0 / K)
        for _ in range(_POWER_MAX_ITER):
            nxt = pi @ P
            if np.abs(nxt - pi).sum() <= _POWER_TOL:
                pi = nxt
                break
            pi = nxt
        else:
            raise NumericalError("stationary distribution did not converge")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = np.abs(pi @ P - pi).sum()
    if residual > 1e-10:
        raise NumericalError(f"stationary residual too large: {residual:.3e}")
    return pi


class MarkovModel:
    """Chain state: concentration matrix (prior + counts) and last state.

    States are 1-based externally, matching the telemetry levels they
    encode; rows/columns of the concentration matrix are 0-based.
    """

    def __init__(self, num_states: int, diag: float = DEFAULT_DIAG,
                 neighbor: float = DEFAULT_NEIGHBOR, far: float = DEFAULT_FAR):
        self.K = num_states
        self.prior = (diag, neighbor, far)
        self.conc = banded_prior(num_states, diag, neighbor, far)
        self.last_state: int | None = None

    def _check_state(self, j: int) -> None:
        if not 1 <= j <= self.K:
            raise InputError(f"state must be in 1..{self.K}, got {j}")

    def observe(self, j: int) -> None:
        """Record a transition into state j (the first call only anchors)."""
        self._check_state(j)
        if self.last_state is not None:
            self.conc[self.last_state - 1, j - 1] += 1.0
        self.last_state = j

    def expected_matrix(self) -> np.ndarray:
        """Row-normalized concentration: expected transition probabilities."""
        return self.conc / self.conc.sum(axis=1, keepdims=True)

    def predict_next(self) -> tuple[np.ndarray, float]:
        """One-step distribution over 1..K and its mean state (a real)."""
        if self.last_state is None:
            raise InsufficientDataError("no observation yet")
        row = self.conc[self.last_state - 1]
        dist = row / row.sum()
        point = float(np.arange(1, self.K + 1) @ dist)
        return dist, point

    def predict_interval(self, coverage: float) -> tuple[int, int]:
        """Credible interval around the last state per the expansion rule."""
        if self.last_state is None:
            raise InsufficientDataError("no observation yet")
        if not 0.0 < coverage < 1.0:
            raise InputError(f"coverage must be in (0, 1), got {coverage}")
        dist, _ = self.predict_next()
        return credible_interval(dist, self.last_state, coverage)

    def predict_k(self, k: int) -> np.ndarray:
        """Distribution k steps ahead via row-vector matrix powers."""
        if self.last_state is None:
            raise InsufficientDataError("no observation yet")
        if k < 1:
            raise InputError(f"horizon must be >= 1, got {k}")
        P = self.expected_matrix()
        v = P[self.last_state - 1].copy()
        for _ in range(k - 1):
            v = v @ P
        return v

    def stationary(self) -> np.ndarray:
        return stationary_distribution(self.expected_matrix())


def credible_interval(dist: np.ndarray, center: int, coverage: float) -> tuple[int, int]:
    """Grow an interval around ``center`` until it holds ``coverage`` mass.

    Each pass extends the upper end, then the lower end, regardless of
    whether the upper extension alone already reached the target; the mass
    test happens only between passes.  Ends stop growing at the state
    bounds, and the full range is returned if both saturate short of the
    target.
    """
    K = dist.size
    i = center
    total = float(dist[i - 1])
    lo = hi = i
    while total < coverage:
        if lo == 1 and hi == K:
            break
        if hi != K:
            hi += 1
            total += float(dist[hi - 1])
        if lo != 1:
            lo -= 1
            total += float(dist[lo - 1])
    return lo, hi
