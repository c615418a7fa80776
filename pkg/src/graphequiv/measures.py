"""Distances between Bernoulli laws and their finite products.

Everything here works on plain float64 arrays of success probabilities.
A pair of aligned vectors may carry integer multiplicities (``weights``) so
that long runs of identical coordinates, e.g. the ``N = n(n-1)/2`` edges of
a homogeneous graph, never have to be materialized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "ProbPair",
    "DistanceReport",
    "EnumerationTooLarge",
    "as_probs",
    "rho",
    "rho_alt",
    "RHO_FORMS",
    "hellinger_bernoulli",
    "log_hellinger_product",
    "hellinger_product",
    "tv_bounds",
    "product_masses",
    "tv_exact_enumerate",
    "chi_square_factor",
    "second_moment_ratio",
    "N_MAX_ENUM",
]

N_MAX_ENUM = 20
RHO_FORMS = ("ratio_sum", "max_min", "cap", "small_p")


class EnumerationTooLarge(ValueError):
    """Raised when exhaustive enumeration over {0,1}^N is requested for too large N."""


def as_probs(x, name="p") -> np.ndarray:
    """Return ``x`` as a 1-d float64 array, rejecting anything outside [0, 1] (NaN included)."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must have at least one entry")
    # written so that NaN fails the test
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        bad = arr[~((arr >= 0.0) & (arr <= 1.0))][0]
        raise ValueError(f"{name} contains {bad!r}, not a probability")
    return arr


@dataclass(frozen=True)
class ProbPair:
    """Two aligned probability vectors, optionally with per-entry multiplicities."""

    left: np.ndarray
    right: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        left = as_probs(self.left, "left")
        right = as_probs(self.right, "right")
        if left.shape != right.shape:
            raise ValueError(f"unaligned pair: {left.size} vs {right.size} entries")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != left.shape:
                raise ValueError("weights must align with the probability vectors")
            if np.any(w < 0) or not np.all(np.isfinite(w)) or np.any(w != np.round(w)):
                raise ValueError("weights must be nonnegative integers")
            object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        """Number of indicator variables represented (sum of multiplicities)."""
        if self.weights is None:
            return int(self.left.size)
        return int(self.weights.sum())

    def swapped(self) -> "ProbPair":
        return ProbPair(self.right, self.left, self.weights)

    def expanded(self) -> "ProbPair":
        """The same pair with every multiplicity written out."""
        if self.weights is None:
            return self
        reps = self.weights.astype(np.int64)
        return ProbPair(np.repeat(self.left, reps), np.repeat(self.right, reps))


def _wsum(values: np.ndarray, weights) -> float:
    if weights is None:
        return float(np.sum(values))
    # zero-multiplicity entries contribute nothing, even when the value is inf
    keep = weights > 0
    return float(np.sum(values[keep] * weights[keep]))


def _pair_args(p, q, weights):
    if isinstance(p, ProbPair):
        if q is not None:
            raise TypeError("pass either a ProbPair or two vectors, not both")
        return p.left, p.right, p.weights
    pair = ProbPair(p, q, weights)
    return pair.left, pair.right, pair.weights


def _safe_div(num, den):
    """num/den with 0/0 -> 0 and x/0 -> inf for x > 0."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = num / den
    out = np.where(den == 0, np.where(num == 0, 0.0, np.inf), out)
    return out


def rho(p, q):
    """(sqrt p - sqrt q)^2 + (sqrt(1-p) - sqrt(1-q))^2, elementwise.

    Evaluated as ``d^2/(sqrt p + sqrt q)^2 + d^2/(sqrt(1-p) + sqrt(1-q))^2``
    with ``d = p - q`` to avoid cancellation when ``p`` and ``q`` are close.
    Scalars in give a float out.
    """
    scalar = np.ndim(p) == 0 and np.ndim(q) == 0
    p = as_probs(p, "p")
    q = as_probs(q, "q")
    d2 = (p - q) ** 2
    lo = (np.sqrt(p) + np.sqrt(q)) ** 2
    hi = (np.sqrt(1.0 - p) + np.sqrt(1.0 - q)) ** 2
    out = _safe_div(d2, lo) + _safe_div(d2, hi)
    return float(out[0]) if scalar else out


def rho_alt(p, q, form: str):
    """Alternative expressions comparable to :func:`rho` up to constant factors.

    ``ratio_sum``   (p-q)^2/(p+q) + (p-q)^2/(2-p-q)
    ``max_min``     (p-q)^2 / ((p v q) ^ ((1-p) v (1-q)))
    ``cap``         (p-q)^2/(p ^ (1-p))  ^  |p-q|
    ``small_p``     (p-q)^2/p  ^  |p-q|, only for p <= 0.9

    0/0 is read as 0.
    """
    scalar = np.ndim(p) == 0 and np.ndim(q) == 0
    p = as_probs(p, "p")
    q = as_probs(q, "q")
    d = p - q
    d2 = d * d
    if form == "ratio_sum":
        out = _safe_div(d2, p + q) + _safe_div(d2, (1.0 - p) + (1.0 - q))
    elif form == "max_min":
        out = _safe_div(d2, np.minimum(np.maximum(p, q), np.maximum(1.0 - p, 1.0 - q)))
    elif form == "cap":
        out = np.minimum(_safe_div(d2, np.minimum(p, 1.0 - p)), np.abs(d))
    elif form == "small_p":
        if np.any(p > 0.9):
            raise ValueError("small_p form needs p <= 0.9")
        out = np.minimum(_safe_div(d2, p), np.abs(d))
    else:
        raise ValueError(f"unknown form {form!r}; expected one of {RHO_FORMS}")
    return float(out[0]) if scalar else out


def hellinger_bernoulli(p, q, check_tol: float = 1e-12):
    """Hellinger integral and distance between Be(p) and Be(q).

    The integral is computed twice, as ``sqrt(pq) + sqrt((1-p)(1-q))`` and as
    ``1 - rho/2``; a disagreement beyond ``check_tol`` raises
    ``FloatingPointError``.  Returns ``(integral, distance)``.
    """
    scalar = np.ndim(p) == 0 and np.ndim(q) == 0
    p = as_probs(p, "p")
    q = as_probs(q, "q")
    r = rho(p, q)
    direct = np.sqrt(p * q) + np.sqrt((1.0 - p) * (1.0 - q))
    integral = np.clip(1.0 - 0.5 * r, 0.0, 1.0)
    gap = np.max(np.abs(direct - integral))
    if gap > check_tol:
        raise FloatingPointError(f"Hellinger integral routes disagree by {gap:.3e}")
    distance = np.sqrt(0.5 * r)
    if scalar:
        return float(integral[0]), float(distance[0])
    return integral, distance


def log_hellinger_product(p, q=None, weights=None) -> float:
    """log of the product Hellinger integral, accumulated as sum of log1p(-rho/2)."""
    p, q, w = _pair_args(p, q, weights)
    with np.errstate(divide="ignore"):
        logs = np.log1p(-0.5 * rho(p, q))
    return _wsum(logs, w)


def hellinger_product(p, q=None, weights=None, check: bool = True) -> float:
    """Hellinger integral of two Bernoulli product measures.

    With ``check`` (default) the result is verified against the bounds
    ``1 - S/2 <= H <= exp(-S/2)`` where ``S`` is the rho-sum.
    """
    p, q, w = _pair_args(p, q, weights)
    H = float(np.exp(log_hellinger_product(p, q, w)))
    if check:
        s = _wsum(rho(p, q), w)
        slack = 1e-12 * max(1.0, s)
        if not (1.0 - 0.5 * s - slack <= H <= np.exp(-0.5 * s) + slack):
            raise FloatingPointError(f"Hellinger product {H!r} outside its rho-sum bounds (S={s!r})")
    return H


@dataclass(frozen=True)
class DistanceReport:
    rho_sum: float
    hellinger_integral: float
    hellinger_distance: float
    tv_lower: float
    tv_upper: float
    tv_exact: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "rho_sum": self.rho_sum,
            "hellinger_integral": self.hellinger_integral,
            "hellinger_distance": self.hellinger_distance,
            "tv_lower": self.tv_lower,
            "tv_upper": self.tv_upper,
            "tv_exact": self.tv_exact,
        }


def tv_bounds(p, q=None, weights=None) -> DistanceReport:
    """rho-sum, Hellinger quantities and the two-sided total variation bounds."""
    p, q, w = _pair_args(p, q, weights)
    s = _wsum(rho(p, q), w)
    log_h = log_hellinger_product(p, q, w)
    H = float(np.exp(log_h))
    d2 = float(-np.expm1(log_h))
    dh = float(np.sqrt(d2))
    return DistanceReport(
        rho_sum=s,
        hellinger_integral=H,
        hellinger_distance=dh,
        tv_lower=d2,
        tv_upper=float(min(1.0, np.sqrt(2.0) * dh)),
    )


def product_masses(p, nmax: int = N_MAX_ENUM) -> np.ndarray:
    """Masses of all 2^N outcomes of independent Be(p_i) indicators.

    Outcome ``x`` is indexed by the integer whose bit ``i`` (from the most
    significant end) is ``x_i``.
    """
    p = as_probs(p)
    if p.size > nmax:
        raise EnumerationTooLarge(f"N={p.size} exceeds enumeration limit {nmax}")
    mass = np.ones(1)
    for pi in p:
        mass = np.outer(mass, [1.0 - pi, pi]).ravel()
    return mass


def tv_exact_enumerate(p, q=None, weights=None, nmax: int = N_MAX_ENUM) -> float:
    """Exact total variation between two Bernoulli products by summing over {0,1}^N."""
    pair = p if isinstance(p, ProbPair) else ProbPair(p, q, weights)
    if pair.N > nmax:
        raise EnumerationTooLarge(f"N={pair.N} exceeds enumeration limit {nmax}")
    pair = pair.expanded()
    P = product_masses(pair.left, nmax)
    Q = product_masses(pair.right, nmax)
    return float(min(1.0, 0.5 * np.sum(np.abs(P - Q))))


def chi_square_factor(p, q):
    """Per-coordinate ``1 + (p-q)^2/q + (p-q)^2/(1-q)`` (x/0 = inf, 0/0 = 0)."""
    p = as_probs(p, "p")
    q = as_probs(q, "q")
    d2 = (p - q) ** 2
    return 1.0 + _safe_div(d2, q) + _safe_div(d2, 1.0 - q)


def second_moment_ratio(p, q=None, weights=None) -> float:
    """E_Q[(dP/dQ)^2] for Bernoulli products P = Be(p), Q = Be(q).

    Equals ``prod_i (p_i^2/q_i + (1-p_i)^2/(1-q_i))``; returns ``inf`` when P
    charges an outcome Q does not.
    """
    p, q, w = _pair_args(p, q, weights)
    factors = _safe_div(p * p, q) + _safe_div((1.0 - p) ** 2, 1.0 - q)
    charged = np.isinf(factors)
    if w is not None:
        charged &= w > 0
    if np.any(charged):
        return float("inf")
    with np.errstate(over="ignore"):
        return float(np.exp(_wsum(np.log(factors), w)))
