"""Discounted dynamic linear models for continuous telemetry series.

Two block types are provided: a local linear trend (level + slope) and a
seasonal-factor block whose state rotates through one period with factors
constrained to sum to zero.  Blocks combine by superposition: observation
vectors concatenate and evolution matrices stack block-diagonally, so a
model carries one joint state mean and covariance, including the cross
covariances the joint filter introduces.

Evolution noise is never specified explicitly.  Each block discounts its
prior covariance instead: R = G C G' / delta per block, with cross-block
terms scaled by the geometric mean of the two discounts.  Observation
variance is fixed at 1 for every block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InputError, NumericalError

# Forecast variances are floored here as a last resort.
Q_FLOOR = 1e-12

# The seasonal prior is exactly singular (zero row sums), and discounting
# amplifies any rounding leak into its null direction by 1/delta per step
# until the covariance turns indefinite and the filter diverges.  Clipping
# negative eigenvalues on this cadence keeps spurious negativity around
# 1e-14 of the covariance scale at negligible amortized cost.
REPAIR_EVERY = 64

DEFAULT_DISCOUNT = 0.95
DEFAULT_PRIOR_SCALE = 1e7


@dataclass
class Forecast:
    """Point forecast plus a central interval at the stated coverage."""

    horizon: int
    point: float
    variance: float
    lower: float
    upper: float
    coverage: float


def gaussian_forecast(horizon: int, point: float, variance: float,
                      coverage: float) -> Forecast:
    """Build a symmetric normal interval around ``point``."""
    if not 0.0 <= coverage < 1.0:
        raise InputError(f"coverage must be in [0, 1), got {coverage}")
    z = norm.ppf(0.5 + coverage / 2.0)
    half = z * math.sqrt(max(variance, 0.0))
    return Forecast(horizon, point, variance, point - half, point + half, coverage)


@dataclass
class DlmBlock:
    """One model component: structure matrices plus its marginal posterior.

    ``m`` and ``C`` are live views into the owning model's joint state once
    the block is installed in a :class:`DlmModel`; before that they hold the
    prior moments.
    """

    kind: str  # "trend" | "seasonal"
    F: np.ndarray
    G: np.ndarray
    m: np.ndarray
    C: np.ndarray
    V: float
    delta: float
    period: int | None = None

    @property
    def dim(self) -> int:
        return self.F.size


def make_trend_block(delta: float = DEFAULT_DISCOUNT) -> DlmBlock:
    """Local linear trend: state (level, slope), diffuse prior."""
    F = np.array([1.0, 0.0])
    G = np.array([[1.0, 1.0], [0.0, 1.0]])
    m0 = np.zeros(2)
    C0 = np.diag([DEFAULT_PRIOR_SCALE, DEFAULT_PRIOR_SCALE])
    return DlmBlock("trend", F, G, m0, C0, V=1.0, delta=delta)


def make_seasonal_block(period: int, prior_scale: float = DEFAULT_PRIOR_SCALE,
                        delta: float = DEFAULT_DISCOUNT) -> DlmBlock:
    """Seasonal-factor block of the given period.

    The state holds period-1 free factors; the implicit last factor is the
    negative sum of the others, so the prior covariance is built with zero
    row and column sums (off-diagonal value -prior_scale/(period-2), which
    is undefined for period 2).
    """
    if period < 3:
        raise InputError(f"seasonal period must be >= 3, got {period}")
    d = period - 1
    F = np.zeros(d)
    F[0] = 1.0
    G = np.zeros((d, d))
    G[0, :] = -1.0
    G[1:, :-1] += np.eye(d - 1)
    m0 = np.zeros(d)
    off = -prior_scale / (period - 2)
    C0 = np.full((d, d), off)
    np.fill_diagonal(C0, prior_scale)
    return DlmBlock("seasonal", F, G, m0, C0, V=1.0, delta=delta, period=period)


class DlmModel:
    """Superposition of at most one trend and one seasonal block.

    Holds the joint posterior state; per-step updates are strictly
    sequential (one writer per series), but distinct models are
    independent values and may be driven in parallel.
    """

    def __init__(self, blocks: list[DlmBlock]):
        if not blocks:
            raise InputError("a model needs at least one block")
        for kind in ("trend", "seasonal"):
            if sum(1 for b in blocks if b.kind == kind) > 1:
                raise InputError(f"at most one {kind} block per model")
        if len({b.V for b in blocks}) != 1:
            raise InputError("all blocks must share the observation variance")

        self.blocks = list(blocks)
        self.V = blocks[0].V
        self.last_update_index = 0

        dims = [b.dim for b in blocks]
        total = sum(dims)
        self.F = np.concatenate([b.F for b in blocks])
        self.G = np.zeros((total, total))
        self._m = np.concatenate([b.m for b in blocks])
        self._C = np.zeros((total, total))

        # Component discounting: scale entry (i, j) of G C G' by
        # 1/sqrt(delta_i * delta_j).  With equal discounts this is a plain
        # division of the whole matrix by delta.
        root = np.concatenate([np.full(b.dim, 1.0 / math.sqrt(b.delta)) for b in blocks])
        self._discount_scale = np.outer(root, root)

        self._slices: list[slice] = []
        lo = 0
        for b in blocks:
            sl = slice(lo, lo + b.dim)
            self._slices.append(sl)
            self.G[sl, sl] = b.G
            self._C[sl, sl] = b.C
            # Re-point the block at live views of the joint state.
            b.m = self._m[sl]
            b.C = self._C[sl, sl]
            lo += b.dim

    # -- accessors ---------------------------------------------------------

    @property
    def m(self) -> np.ndarray:
        return self._m

    @property
    def C(self) -> np.ndarray:
        return self._C

    def block(self, kind: str) -> DlmBlock | None:
        for b in self.blocks:
            if b.kind == kind:
                return b
        return None

    def trend_state(self) -> tuple[float, float] | None:
        """Current (level, slope) posterior mean of the trend block."""
        b = self.block("trend")
        if b is None:
            return None
        return float(b.m[0]), float(b.m[1])

    def seasonal_cycle(self) -> np.ndarray | None:
        """Point forecasts of the seasonal factor for one full period.

        Entry i is the seasonal contribution i steps ahead for any horizon
        congruent to i modulo the period (the block's evolution matrix is a
        rotation, so the cycle repeats exactly).
        """
        b = self.block("seasonal")
        if b is None:
            return None
        cycle = np.empty(b.period)
        v = b.m.copy()
        cycle[0] = v[0]
        for i in range(1, b.period):
            v = b.G @ v
            cycle[i] = v[0]
        return cycle

    # -- filtering ---------------------------------------------------------

    def _prior(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.G @ self._m
        R = (self.G @ self._C @ self.G.T) * self._discount_scale
        return a, R

    def _forecast_from(self, a: np.ndarray, R: np.ndarray, horizon: int,
                       coverage: float) -> Forecast:
        f = float(self.F @ a)
        Q = float(self.F @ R @ self.F) + self.V
        Q = max(Q, Q_FLOOR)
        if not math.isfinite(Q):
            raise NumericalError("forecast variance is not finite")
        return gaussian_forecast(horizon, f, Q, coverage)

    def one_step(self, coverage: float = 0.95) -> Forecast:
        """Predictive for the next observation, without updating."""
        a, R = self._prior()
        return self._forecast_from(a, R, 1, coverage)

    def update(self, x: float, coverage: float = 0.95) -> Forecast:
        """Absorb one observation; returns the forecast it was checked against.

        The returned one-step predictive is evaluated before ``x`` enters
        the state, which is what anomaly checks require.
        """
        if not math.isfinite(x):
            raise InputError(f"observation must be finite, got {x}")
        a, R = self._prior()
        fc = self._forecast_from(a, R, 1, coverage)
        rf = R @ self.F
        gain = rf / fc.variance
        err = x - fc.point
        self._m[:] = a + gain * err
        C = R - np.outer(gain, gain) * fc.variance
        self._C[:] = (C + C.T) / 2.0
        self.last_update_index += 1
        self._maybe_repair()
        return fc

    def update_missing(self) -> None:
        """Advance one step with no data: the prior becomes the posterior."""
        a, R = self._prior()
        self._m[:] = a
        self._C[:] = (R + R.T) / 2.0
        self.last_update_index += 1
        self._maybe_repair()

    def _maybe_repair(self) -> None:
        if self.last_update_index % REPAIR_EVERY != 0:
            return
        w, U = np.linalg.eigh(self._C)
        if w[0] < 0.0:
            C = (U * np.clip(w, 0.0, None)) @ U.T
            self._C[:] = (C + C.T) / 2.0

    def predict(self, k: int, coverage: float = 0.95) -> list[Forecast]:
        """Forecasts for horizons 1..k from the current posterior.

        Variances propagate the discount recursion exactly, one step at a
        time, so predict(1) coincides with the one-step predictive.
        """
        if k < 1:
            raise InputError(f"horizon must be >= 1, got {k}")
        out: list[Forecast] = []
        v = self._m.copy()
        R = self._C.copy()
        for j in range(1, k + 1):
            v = self.G @ v
            R = (self.G @ R @ self.G.T) * self._discount_scale
            f = float(self.F @ v)
            Q = max(float(self.F @ R @ self.F) + self.V, Q_FLOOR)
            out.append(gaussian_forecast(j, f, Q, coverage))
        return out
