"""Calibrated two-sided Pareto entry law and its truncation calculus.

The canonical family is the symmetric pure Pareto law: no mass below the
tail scale t0, and P(|X| > x) = (x / t0)^(-alpha) for x >= t0.  Choosing
t0 = sqrt((alpha - 2) / alpha) sets the variance to exactly 1, and every
truncated moment used by the matrix pipeline has a closed form, so the
sampling, truncation, and characteristic-function code below can all be
checked against exact oracles.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "DistSpec",
    "TruncationParams",
    "calibrate",
    "magnitude_quantile",
    "sample",
    "sample_array",
    "tail_probability",
    "truncated_mean",
    "truncated_second_moment",
    "truncated_fourth_moment",
    "truncation_params",
    "char_fn",
]

_TOL = 1e-12


@dataclass(frozen=True)
class DistSpec:
    """Calibrated heavy-tailed entry law.

    alpha    : tail exponent, 2 < alpha < 4
    t0       : tail scale (> 0); the law has no mass in (0, t0)
    c        : tail constant, c = Gamma(alpha + 1) * t0**alpha
    symmetry : only "symmetric" is supported
    """

    alpha: float
    t0: float
    c: float
    symmetry: str = "symmetric"

    def __post_init__(self):
        if not 2.0 < self.alpha < 4.0:
            raise ValueError(f"alpha must lie in (2, 4), got {self.alpha}")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.symmetry != "symmetric":
            raise ValueError("only the symmetric family is supported")
        var = self.t0**2 * self.alpha / (self.alpha - 2.0)
        if abs(var - 1.0) > _TOL:
            raise ValueError(f"law is not unit-variance: t0^2*alpha/(alpha-2) = {var}")
        if abs(self.c - gamma_fn(self.alpha + 1.0) * self.t0**self.alpha) > _TOL:
            raise ValueError("tail constant c is inconsistent with (alpha, t0)")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "DistSpec":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class TruncationParams:
    """Truncation threshold exponent and the induced centering/rescaling.

    beta    : threshold exponent; entries are cut at N**beta
    epsilon : slack added to the base exponent (> 0)
    muN     : mean of the cut variable (0 for the symmetric family)
    sigmaN  : standard deviation of the cut, centered variable
    N       : matrix dimension the parameters were computed for
    """

    beta: float
    epsilon: float
    muN: float
    sigmaN: float
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not 0.0 < self.sigmaN <= 1.0:
            raise ValueError("sigmaN must lie in (0, 1]")

    @property
    def threshold(self) -> float:
        return float(self.N) ** self.beta

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "TruncationParams":
        return cls(**json.loads(text))


def calibrate(alpha: float) -> DistSpec:
    """Return the unit-variance two-sided Pareto law with tail exponent alpha."""
    if not 2.0 < alpha < 4.0:
        raise ValueError(f"alpha must lie in (2, 4), got {alpha}")
    t0 = np.sqrt((alpha - 2.0) / alpha)
    c = float(gamma_fn(alpha + 1.0) * t0**alpha)
    return DistSpec(alpha=float(alpha), t0=float(t0), c=c)


def magnitude_quantile(dist: DistSpec, u):
    """Inverse CDF of |X|: maps u in (0, 1] to t0 * u**(-1/alpha).

    u = 1 gives the minimum magnitude t0; u -> 0 gives the far tail.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise ValueError("u must lie in (0, 1]")
    return dist.t0 * u ** (-1.0 / dist.alpha)


def sample(dist: DistSpec, rng: np.random.Generator) -> float:
    """Draw one variate: sign * t0 * U**(-1/alpha), U uniform on (0, 1]."""
    u = 1.0 - rng.random()
    s = 1.0 if rng.integers(0, 2) else -1.0
    return float(s * magnitude_quantile(dist, u))


def sample_array(dist: DistSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector version of :func:`sample`."""
    u = 1.0 - rng.random(size)
    s = rng.integers(0, 2, size) * 2.0 - 1.0
    return s * magnitude_quantile(dist, u)


def tail_probability(dist: DistSpec, x) -> np.ndarray:
    """P(|X| > x); equal to 1 below the tail scale t0."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= dist.t0, 1.0, (np.maximum(x, dist.t0) / dist.t0) ** (-dist.alpha))


def truncated_mean(dist: DistSpec, threshold: float) -> float:
    """E[X 1_{|X| <= threshold}] via the one-sided integrals.

    Each half-line contributes alpha*t0^alpha*(t0^(1-alpha) - T^(1-alpha))/(alpha-1)
    in absolute value; for the symmetric family the two halves cancel exactly.
    """
    a, t0 = dist.alpha, dist.t0
    T = max(threshold, t0)
    pos_half = 0.5 * a * t0**a * (t0 ** (1.0 - a) - T ** (1.0 - a)) / (a - 1.0)
    neg_half = -pos_half
    return pos_half + neg_half


def truncated_second_moment(dist: DistSpec, threshold: float) -> float:
    """E[X^2 1_{|X| <= threshold}] = 1 - alpha*t0^alpha*T^(2-alpha)/(alpha-2)."""
    a, t0 = dist.alpha, dist.t0
    if threshold < t0:
        return 0.0
    return 1.0 - a * t0**a * threshold ** (2.0 - a) / (a - 2.0)


def truncated_fourth_moment(dist: DistSpec, threshold: float) -> float:
    """E[X^4 1_{|X| <= threshold}] = alpha*t0^alpha*(T^(4-alpha) - t0^(4-alpha))/(4-alpha)."""
    a, t0 = dist.alpha, dist.t0
    if threshold < t0:
        return 0.0
    return a * t0**a * (threshold ** (4.0 - a) - t0 ** (4.0 - a)) / (4.0 - a)


def truncation_params(dist: DistSpec, N: int, epsilon: float) -> TruncationParams:
    """Threshold exponent and centering/rescaling constants for dimension N.

    beta = (1/4)(1 + alpha/4) + epsilon; the entries are cut at N**beta,
    recentered by muN (exactly zero here, by symmetry), and rescaled by
    sigmaN so the cut variable keeps unit variance.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    beta = 0.25 * (1.0 + dist.alpha / 4.0) + epsilon
    T = float(N) ** beta
    muN = truncated_mean(dist, T)
    second = truncated_second_moment(dist, T) - muN**2
    return TruncationParams(beta=beta, epsilon=float(epsilon), muN=muN,
                            sigmaN=float(np.sqrt(second)), N=int(N))


def _gauss_log_panels(lo: float, hi: float, panels_per_decade: int, pts: int):
    """Gauss-Legendre nodes/weights on log-graded panels covering [lo, hi]."""
    n_dec = np.log10(hi / lo)
    n_pan = max(1, int(np.ceil(n_dec * panels_per_decade)))
    edges = lo * (hi / lo) ** (np.arange(n_pan + 1) / n_pan)
    x, w = np.polynomial.legendre.leggauss(pts)
    mid = (edges[:-1] + edges[1:]) / 2.0
    half = (edges[1:] - edges[:-1]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def char_fn(dist: DistSpec, N: int, lam: complex, truncation: TruncationParams):
    """Characteristic-type transform of the squared rescaled cut entry.

    For Y = (X 1_{|X| <= N^beta} / (sigmaN sqrt(N)))^2 returns the pair

        phi_exact     = E[exp(-i lam Y)]            (deterministic quadrature)
        phi_expansion = 1 - i lam / N - c (i lam)^(alpha/2) / N^(alpha/2)

    with all fractional powers on the principal branch.  Requires
    Im(lam) <= 0 so the expectation is bounded.

    Parameters
    ----------
    dist : DistSpec
    N : matrix dimension (sets both the cut N^beta and the 1/N rescaling)
    lam : complex with Im(lam) <= 0
    truncation : TruncationParams for (dist, N)
    """
    lam = complex(lam)
    if lam.imag > 0.0:
        raise ValueError("char_fn requires Im(lam) <= 0")
    a, t0 = dist.alpha, dist.t0
    T = truncation.threshold
    s2 = truncation.sigmaN**2
    w = 1j * lam  # Re(w) >= 0

    # atom at zero from the removed tail, plus the continuous part on [t0, T]
    atom = tail_probability(dist, T)
    x, wt = _gauss_log_panels(t0, T, panels_per_decade=8, pts=24)
    dens = a * t0**a * x ** (-a - 1.0)
    phi_exact = complex(atom + np.sum(wt * dens * np.exp(-w * x * x / (s2 * N))))

    phi_expansion = 1.0 - 1j * lam / N - dist.c * (1j * lam) ** (a / 2.0) / float(N) ** (a / 2.0)
    return phi_exact, phi_expansion
