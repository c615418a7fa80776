"""Kernel random graph families: kernels, vertex ensembles and link functions.

A model realizes, for each ``n``, the ``n(n-1)/2`` edge probabilities of
``G(n, p_ij)`` in row-major order over ``i < j``.  The base intensity is
either ``kappa(x_i, x_j)/n`` or ``L_i L_j / sum_k L_k``; a link function then
maps it into [0, 1].  Comparing two links always reuses one draw of the
vertex ensemble.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .measures import ProbPair

__all__ = [
    "ModelError",
    "Kernel", "RankOne", "MaxInverse", "SqrtInverse", "Tabulated", "CustomKernel",
    "load_tabulated_kernel",
    "VertexEnsemble", "GridEnsemble", "IIDEnsemble", "WeightsIID",
    "Link", "CAP", "EXP_LINK", "ODDS", "custom_link", "LINKS",
    "ModelFamily",
    "edge_index", "realize", "pair_models",
    "TailProfile", "tail_profile", "classify_tail",
    "truncated_third_moment", "grid_cubic_partial_sums", "grid_row_blocks",
    "ehh_family",
]


class ModelError(ValueError):
    """A model could not produce valid edge probabilities."""


# ---------------------------------------------------------------- kernels

class Kernel:
    """Symmetric nonnegative kernel on the vertex ground space.

    ``__call__(x, y, n)`` is vectorized over ``x`` and ``y``; ``n`` is only
    used by kernels whose grid form carries an ``n``-dependent shift.
    """

    name = "kernel"
    bounded_by: Optional[float] = None

    def __call__(self, x, y, n):
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class RankOne(Kernel):
    psi: Callable[[np.ndarray], np.ndarray]
    psi_name: str = "psi"
    name = "rank1"

    def __call__(self, x, y, n=None):
        return np.asarray(self.psi(x), dtype=float) * np.asarray(self.psi(y), dtype=float)

    def spec(self):
        return {"type": "rank1", "psi": self.psi_name}


@dataclass(frozen=True)
class MaxInverse(Kernel):
    """``c / (x v y + d/n)``; on the grid ``x_i = i/n`` this gives ``p0_ij = c/(i v j + d)``."""

    c: float = 1.0
    d: float = 0.0
    name = "max_inverse"

    def __post_init__(self):
        if self.c <= 0:
            raise ModelError("max_inverse needs c > 0")

    def __call__(self, x, y, n):
        return self.c / (np.maximum(x, y) + self.d / n)

    @property
    def saturates(self) -> bool:
        """True when ``d <= c - 2``, i.e. ``p0_12 >= 1`` on the grid."""
        return not self.d > self.c - 2

    def spec(self):
        return {"type": "max_inverse", "c": self.c, "d": self.d}


@dataclass(frozen=True)
class SqrtInverse(Kernel):
    """``c / sqrt(x y)``; on the grid this gives ``p0_ij = c/sqrt(ij)``."""

    c: float = 1.0
    name = "sqrt_inverse"

    def __post_init__(self):
        if self.c <= 0:
            raise ModelError("sqrt_inverse needs c > 0")

    def __call__(self, x, y, n=None):
        return self.c / np.sqrt(np.asarray(x) * np.asarray(y))

    def spec(self):
        return {"type": "sqrt_inverse", "c": self.c}


class Tabulated(Kernel):
    """Kernel on a finite type space ``{0, ..., m-1}`` given by a symmetric matrix."""

    name = "tabulated"

    def __init__(self, matrix, source: Optional[str] = None):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ModelError("tabulated kernel must be a square matrix")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ModelError("tabulated kernel entries must be finite and nonnegative")
        if not np.array_equal(m, m.T):
            raise ModelError("tabulated kernel must be symmetric")
        m.setflags(write=False)
        self.matrix = m
        self.source = source
        self.bounded_by = float(m.max())

    def __call__(self, x, y, n=None):
        return self.matrix[np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)]

    def spec(self):
        if self.source:
            return {"type": "tabulated", "csv": self.source}
        return {"type": "tabulated", "matrix": self.matrix.tolist()}


def load_tabulated_kernel(path) -> Tabulated:
    """Read a symmetric kernel matrix from CSV: one header row of size m, then m rows."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ModelError(f"{path}: empty kernel file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(body) != len(header):
        raise ModelError(f"{path}: header names {len(header)} types but {len(body)} rows follow")
    try:
        matrix = [[float(v) for v in r] for r in body]
    except ValueError as e:
        raise ModelError(f"{path}: {e}") from None
    return Tabulated(matrix, source=str(path))


class CustomKernel(Kernel):
    """Arbitrary symmetric function; symmetry and sign are spot-checked on construction."""

    name = "custom"

    def __init__(self, fn, probe: Optional[Sequence[float]] = None):
        self.fn = fn
        pts = np.asarray(probe if probe is not None else np.linspace(0.05, 1.0, 20))
        x, y = np.meshgrid(pts, pts, indexing="ij")
        a, b = np.asarray(fn(x, y), dtype=float), np.asarray(fn(y, x), dtype=float)
        if not np.allclose(a, b, rtol=1e-12, atol=0):
            raise ModelError("custom kernel is not symmetric")
        if np.any(a < 0):
            raise ModelError("custom kernel takes negative values")

    def __call__(self, x, y, n=None):
        return self.fn(x, y)

    def spec(self):
        return {"type": "custom"}


# ---------------------------------------------------------------- ensembles

class VertexEnsemble:
    random = True
    name = "ensemble"

    def sample(self, n: int, rng) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class GridEnsemble(VertexEnsemble):
    """Deterministic ``x_i = i/n``, ``i = 1..n``."""

    random = False
    name = "grid"

    def sample(self, n, rng=None):
        return np.arange(1, n + 1, dtype=np.float64) / n

    def spec(self):
        return {"type": "grid"}


@dataclass(frozen=True)
class IIDEnsemble(VertexEnsemble):
    """``x_1, ..., x_n`` iid from ``sampler(rng, n)``.

    ``atoms`` (type probabilities) may be given for a finite type space; it
    enables exact tail profiles for tabulated kernels.
    """

    sampler: Callable
    label: str = "iid"
    atoms: Optional[tuple] = None
    survival: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name = "iid"

    def sample(self, n, rng):
        return np.asarray(self.sampler(rng, n), dtype=np.float64)

    def spec(self):
        return {"type": "iid", "distribution": self.label}


@dataclass(frozen=True)
class WeightsIID(VertexEnsemble):
    """Positive iid vertex weights ``L_i`` drawn by ``sampler(rng, n)``."""

    sampler: Callable
    label: str = "weights"
    survival: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name = "weights_iid"

    def sample(self, n, rng):
        lam = np.asarray(self.sampler(rng, n), dtype=np.float64)
        if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
            raise ModelError("vertex weights must be finite and strictly positive")
        return lam

    def spec(self):
        return {"type": "weights_iid", "distribution": self.label}


# ---------------------------------------------------------------- links

@dataclass(frozen=True)
class Link:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))


CAP = Link("cap", lambda x: np.minimum(x, 1.0))
EXP_LINK = Link("exp_link", lambda x: -np.expm1(-x))
ODDS = Link("odds", lambda x: x / (1.0 + x))
LINKS = {link.name: link for link in (CAP, EXP_LINK, ODDS)}


def custom_link(h, name: str = "custom_h", x_check: float = 10.0, max_ratio: float = 1e3) -> Link:
    """Admit ``h`` as a link after checking ``h(0) = 0``, range [0, 1] and
    ``sup |h(x) - x| / x^2 <= max_ratio`` on a log grid over ``[1e-6, x_check]``.

    A grid can only ever show a finite supremum, so "finite" is read as
    "below ``max_ratio``"; ``sqrt``-like links fail by many orders of magnitude.
    """
    xs = np.concatenate([[0.0], np.logspace(-6, math.log10(x_check), 400)])
    hx = np.asarray(h(xs), dtype=np.float64)
    if hx[0] != 0.0:
        raise ModelError(f"{name}: h(0) must be 0")
    if not np.all((hx >= 0) & (hx <= 1)):
        raise ModelError(f"{name}: h must map [0, inf) into [0, 1]")
    ratio = np.abs(hx[1:] - xs[1:]) / xs[1:] ** 2
    if not np.all(np.isfinite(ratio)) or ratio.max() > max_ratio:
        raise ModelError(f"{name}: sup |h(x) - x|/x^2 = {ratio.max():.3g} on (0, {x_check}] "
                         f"exceeds {max_ratio:g}")
    return Link(name, h)


# ---------------------------------------------------------------- families

@dataclass(frozen=True)
class ModelFamily:
    """Base intensity + ensemble + link.

    ``intensity`` is a :class:`Kernel` (``p0 = kappa(x_i, x_j)/n``) or the
    string ``"weights"`` (``p0 = L_i L_j / sum L``, needs :class:`WeightsIID`).
    """

    intensity: object
    ensemble: VertexEnsemble
    link: Link = CAP
    label: str = "model"

    def __post_init__(self):
        if self.intensity == "weights":
            if not isinstance(self.ensemble, WeightsIID):
                raise ModelError("weights intensity needs a WeightsIID ensemble")
        elif not isinstance(self.intensity, Kernel):
            raise ModelError("intensity must be a Kernel or 'weights'")

    @property
    def random(self) -> bool:
        return self.ensemble.random

    def with_link(self, link: Link) -> "ModelFamily":
        return ModelFamily(self.intensity, self.ensemble, link, f"{self.label}:{link.name}")

    def base_intensity(self, n: int, rng=None) -> np.ndarray:
        """The pre-link intensities ``p0_ij`` for one ensemble draw."""
        if n < 2:
            raise ModelError("n must be at least 2")
        if self.random and rng is None:
            raise ModelError(f"{self.label}: random ensemble needs a seed")
        x = self.ensemble.sample(n, rng)
        i, j = edge_index(n)
        if self.intensity == "weights":
            p0 = x[i] * x[j] / np.sum(x)
        else:
            try:
                p0 = np.asarray(self.intensity(x[i], x[j], n), dtype=np.float64) / n
            except Exception as e:
                raise ModelError(f"{self.label}: kernel evaluation failed at n={n}: {e}") from e
        if not np.all(np.isfinite(p0)) or np.any(p0 < 0):
            raise ModelError(f"{self.label}: nonfinite or negative intensity at n={n}")
        return p0

    def realize(self, n: int, seed=None) -> np.ndarray:
        return realize(self, n, seed)


def edge_index(n: int):
    """Row-major ``(i, j)`` pairs with ``i < j`` (0-based vertex labels)."""
    return np.triu_indices(n, k=1)


def _as_rng(seed):
    if seed is None or isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def realize(model: ModelFamily, n: int, seed=None) -> np.ndarray:
    """Edge probabilities of ``model`` at size ``n`` (length ``n(n-1)/2``)."""
    p0 = model.base_intensity(n, _as_rng(seed))
    return np.clip(model.link(p0), 0.0, 1.0)


def pair_models(model: ModelFamily, link_a: Link, link_b: Link, n: int, seed=None) -> ProbPair:
    """Apply two links to one shared draw of the ensemble and base intensity."""
    p0 = model.base_intensity(n, _as_rng(seed))
    return ProbPair(np.clip(link_a(p0), 0.0, 1.0), np.clip(link_b(p0), 0.0, 1.0))


# ---------------------------------------------------------------- tails

@dataclass(frozen=True)
class TailProfile:
    t_grid: np.ndarray
    tail: np.ndarray
    scaled: np.ndarray          # t^2 G(t)
    slope: Optional[float]
    classification: str         # "o" (t^2 G -> 0), "O" (bounded only), "neither", "inconclusive"
    method: str

    def as_dict(self):
        return {
            "t": self.t_grid.tolist(), "tail": self.tail.tolist(), "t2_tail": self.scaled.tolist(),
            "slope": self.slope, "classification": self.classification, "method": self.method,
        }


def classify_tail(t_grid, tail, slope_tol: float = 0.1, bound_tol: float = 1e2,
                  min_points: int = 3) -> TailProfile:
    """Decide whether ``t^2 G(t)`` vanishes, stays bounded, or grows along ``t_grid``.

    A tail that is identically zero from some ``t`` on (bounded kernel)
    counts as vanishing.  Otherwise a log-log line is fitted through the
    positive values of ``t^2 G(t)``: slope below ``-slope_tol`` reads as
    ``o(t^-2)``, a flat bounded profile as ``O(t^-2)`` only.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    g = np.asarray(tail, dtype=np.float64)
    h = t * t * g
    slope = None
    pos = h > 0
    if not np.any(pos) or (np.any(~pos) and np.all(~pos[np.argmax(~pos):])):
        cls = "o"
    elif pos.sum() < min_points:
        cls = "inconclusive"
    else:
        slope = float(np.polyfit(np.log(t[pos]), np.log(h[pos]), 1)[0])
        if slope < -slope_tol:
            cls = "o"
        elif slope <= slope_tol and h[pos].max() <= bound_tol:
            cls = "O"
        else:
            cls = "neither"
    return TailProfile(t, g, h, slope, cls, "")


def tail_profile(model: ModelFamily, t_grid, target: str = "auto", seed=None,
                 samples: int = 200_000, **classify_kw) -> TailProfile:
    """Tail function ``G(t)`` of the kernel (or of ``psi``, or of the weights).

    ``target`` is ``"kernel"`` (``mu x mu {kappa > t}``), ``"psi"`` (rank-1
    only, ``mu {psi > t}``) or ``"weights"`` (``P(L > t)``); ``"auto"``
    picks weights, then psi, then kernel.  Exact when the ensemble carries a
    survival function or type atoms, Monte Carlo otherwise.
    """
    ens = model.ensemble
    if isinstance(ens, GridEnsemble):
        raise ModelError("tail profiles are defined for iid vertex types, not the grid ensemble")
    t = np.asarray(t_grid, dtype=np.float64)
    if target == "auto":
        target = ("weights" if model.intensity == "weights"
                  else "psi" if isinstance(model.intensity, RankOne) else "kernel")
    if target == "weights" and not isinstance(ens, WeightsIID):
        raise ModelError("weights target needs a WeightsIID ensemble")
    if target == "psi" and not isinstance(model.intensity, RankOne):
        raise ModelError("psi target needs a rank-1 kernel")

    kern = model.intensity
    if target == "kernel" and isinstance(kern, Tabulated) and getattr(ens, "atoms", None) is not None:
        mu = np.asarray(ens.atoms, dtype=np.float64)
        w = np.outer(mu, mu)
        G = np.array([w[kern.matrix > ti].sum() for ti in t])
        method = "exact"
    elif target in ("weights", "psi") and getattr(ens, "survival", None) is not None and (
            target == "weights" or kern.psi_name == "identity"):
        G = np.asarray(ens.survival(t), dtype=np.float64)
        method = "exact"
    else:
        if seed is None:
            raise ModelError("Monte Carlo tail estimate needs a seed")
        rng = np.random.default_rng(seed)
        if target == "weights":
            vals = ens.sample(samples, rng)
        elif target == "psi":
            vals = np.asarray(kern.psi(ens.sample(samples, rng)), dtype=np.float64)
        else:
            x, y = ens.sample(samples, rng), ens.sample(samples, rng)
            vals = np.asarray(kern(x, y, None), dtype=np.float64)
        vals = np.sort(vals)
        G = 1.0 - np.searchsorted(vals, t, side="right") / vals.size
        method = "monte_carlo"
        # points backed by fewer than 10 samples carry no usable tail information
        keep = G * vals.size >= 10
        prof = classify_tail(t[keep], G[keep], **classify_kw)
        return TailProfile(t, G, t * t * G, prof.slope, prof.classification, method)
    prof = classify_tail(t, G, **classify_kw)
    return TailProfile(prof.t_grid, prof.tail, prof.scaled, prof.slope, prof.classification, method)


def truncated_third_moment(model: ModelFamily, n: int, seed=None, cap_multiplier: float = 1.0):
    """``sum_{i<j} (kappa_ij ^ C n)^3 / n^3`` and the number of edges with ``kappa_ij > C n``.

    ``kappa_ij`` is ``n p0_ij``; for the weights intensity this is the
    effective rank-1 kernel ``n L_i L_j / sum L``.
    """
    p0 = model.base_intensity(n, _as_rng(seed))
    kappa = n * p0
    cap = cap_multiplier * n
    value = float(np.sum(np.minimum(kappa, cap) ** 3) / float(n) ** 3)
    return value, int(np.count_nonzero(kappa > cap))


def grid_row_blocks(kernel: Kernel, n: int):
    """Row blocks of a grid model whose ``p0_ij`` depends on ``i v j`` only.

    Returns ``(p0, multiplicity)`` over ``j = 2..n``: block ``j`` holds the
    ``j - 1`` edges ``{i, j}``, ``i < j``, which all share ``p0 = c/(j + d)``.
    """
    if not isinstance(kernel, MaxInverse):
        raise ModelError("row blocks need a kernel depending on max(i, j) only")
    j = np.arange(2, n + 1, dtype=np.float64)
    return kernel.c / (j + kernel.d), j - 1.0


def grid_cubic_partial_sums(kernel: Kernel, n_grid) -> np.ndarray:
    """``sum_{i<j<=n} p0_ij^3`` on the grid ensemble for each ``n`` in ``n_grid``.

    For :class:`MaxInverse` and :class:`SqrtInverse` the grid intensities do
    not depend on ``n`` and the sums are accumulated row by row in O(n);
    other kernels fall back to direct summation.
    """
    n_grid = np.asarray(n_grid, dtype=np.int64)
    top = int(n_grid.max())
    if isinstance(kernel, MaxInverse):
        p0, mult = grid_row_blocks(kernel, top)
        rows = mult * p0 ** 3
    elif isinstance(kernel, SqrtInverse):
        k = np.arange(1, top + 1, dtype=np.float64)
        a = k ** -1.5
        below = np.concatenate([[0.0], np.cumsum(a)[:-1]])
        rows = (kernel.c ** 3 * a * below)[1:]
    else:
        out = []
        for n in n_grid:
            model = ModelFamily(kernel, GridEnsemble(), CAP)
            out.append(float(np.sum(model.base_intensity(int(n)) ** 3)))
        return np.array(out)
    cum = np.cumsum(rows)
    # rows[0] is the j = 2 row; n = 1 has no edges
    return np.where(n_grid >= 2, cum[np.maximum(n_grid - 2, 0)], 0.0)


def ehh_family(weight_sampler, link_a: Link, link_b: Link, n_grid, label: str = "ehh",
               survival=None):
    """Rank-1 weight model ``p0_ij = L_i L_j / sum L`` under two links, as a random sequence."""
    from .criteria import SequencePair

    model = ModelFamily("weights", WeightsIID(weight_sampler, label, survival), link_a, label)

    def gen(n, rng):
        return pair_models(model, link_a, link_b, n, rng)

    return SequencePair(gen, n_grid, random=True, label=label, model=model)
