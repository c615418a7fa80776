"""Finite-n diagnostics for equivalence and contiguity conditions.

The conditions are asymptotic, so every verdict here is a heuristic reading
of a sequence of finite-n values: a log-log trend fit over the n-grid plus
explicit tolerances, with a three-valued outcome (``consistent``,
``inconsistent``, ``inconclusive``).  Conditions for random probability
vectors (``t2*``, ``c1*``/``c2*`` in Monte Carlo mode) are read through
per-n quantiles over seeded replicates, and are sufficient conditions only.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .measures import ProbPair, rho

__all__ = [
    "SequencePair",
    "CriterionVerdict",
    "TailReport",
    "KakutaniReport",
    "GeneratorError",
    "Tolerances",
    "CONDITIONS",
    "rho_sum_diagnostic",
    "tail_sums",
    "tail_condition",
    "c1_diagnostic",
    "c2_diagnostic",
    "kakutani_partial_sums",
    "trend_verdict",
]

CONDITIONS = ("t1i", "t1iia", "t1iib", "t1iic", "t2i", "t2iia", "t2iib", "t2iic",
              "c1i", "c1ii", "c2i", "c2ii")
CONSISTENT, INCONSISTENT, INCONCLUSIVE = "consistent", "inconsistent", "inconclusive"
_FLOOR = 1e-300


class GeneratorError(RuntimeError):
    """A sequence generator failed; ``n`` names the offending size."""

    def __init__(self, n, cause):
        super().__init__(f"generator failed at n={n}: {cause}")
        self.n = n


@dataclass(frozen=True)
class SequencePair:
    """A sequence of aligned probability pairs indexed by ``n``.

    ``generator(n)`` for deterministic families, ``generator(n, rng)`` for
    random ones.  Random draws use ``default_rng([seed, n, replicate])`` so a
    given ``(seed, n, replicate)`` always gives the same pair, whatever order
    the draws are made in.
    """

    generator: Callable
    n_grid: Sequence[int]
    random: bool = False
    label: str = ""
    model: object = None

    def __post_init__(self):
        grid = [int(n) for n in self.n_grid]
        if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing positive integers")
        object.__setattr__(self, "n_grid", tuple(grid))

    def with_grid(self, n_grid) -> "SequencePair":
        return SequencePair(self.generator, n_grid, self.random, self.label, self.model)

    def realize(self, n: int, seed=None, replicate: int = 0) -> ProbPair:
        try:
            if self.random:
                if seed is None:
                    raise ValueError("random family needs an explicit seed")
                out = self.generator(n, np.random.default_rng([int(seed), int(n), int(replicate)]))
            else:
                out = self.generator(n)
            return out if isinstance(out, ProbPair) else ProbPair(*out)
        except GeneratorError:
            raise
        except Exception as e:
            raise GeneratorError(n, e) from e


@dataclass(frozen=True)
class Tolerances:
    slope_tol: float = 0.1
    value_tol: float = 1e-2
    bound_tol: float = 1e2
    fit_tol: float = 0.25
    min_points: int = 4
    quantile: float = 0.95

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class CriterionVerdict:
    condition: str
    n_grid: list
    values: list                      # per-n statistic (median in Monte Carlo mode)
    verdict: str
    slope: Optional[float] = None
    intercept: Optional[float] = None
    residual: Optional[float] = None
    upper: Optional[list] = None      # per-n upper quantile in Monte Carlo mode
    thresholds: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "condition": self.condition, "verdict": self.verdict, "n_grid": list(self.n_grid),
            "values": list(self.values), "upper": None if self.upper is None else list(self.upper),
            "slope": self.slope, "intercept": self.intercept, "residual": self.residual,
            "thresholds": dict(self.thresholds), "notes": list(self.notes), "extra": dict(self.extra),
        }


def _fit(n_grid, values):
    x = np.log(np.asarray(n_grid, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(values, dtype=np.float64), _FLOOR))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid


def trend_verdict(n_grid, values, kind: str, tol: Tolerances = Tolerances()):
    """Classify one per-n sequence.

    ``kind="zero"``: consistent iff the log-log slope is below ``-slope_tol``
    and the last value is below ``value_tol``.  ``kind="bounded"``:
    consistent iff the maximum is at most ``bound_tol`` and the slope is at
    most ``slope_tol``.  Identically zero sequences are consistent with
    both.  Too few points or a poor fit give ``inconclusive``.
    Returns ``(verdict, slope, intercept, residual)``.
    """
    v = np.asarray(values, dtype=np.float64)
    if len(v) < tol.min_points:
        return INCONCLUSIVE, None, None, None
    if np.any(np.isinf(v)):
        return INCONSISTENT, None, None, None
    if np.all(v <= _FLOOR):
        return CONSISTENT, None, None, 0.0
    slope, intercept, resid = _fit(n_grid, v)
    if resid > tol.fit_tol:
        return INCONCLUSIVE, slope, intercept, resid
    if kind == "zero":
        ok = slope < -tol.slope_tol and v[-1] < tol.value_tol
    elif kind == "bounded":
        ok = v.max() <= tol.bound_tol and slope <= tol.slope_tol
    else:
        raise ValueError(kind)
    return (CONSISTENT if ok else INCONSISTENT), slope, intercept, resid


def _combine(*verdicts):
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return CONSISTENT if all(v == CONSISTENT for v in verdicts) else INCONSISTENT


def _per_n(seq: SequencePair, stat, mode, replicates, seed) -> np.ndarray:
    """``stat(pair)`` along the grid: shape ``(len(grid),)`` or ``(len(grid), replicates)``."""
    if len(seq.n_grid) < 2:
        raise ValueError("n_grid needs at least two points")
    if mode == "deterministic":
        if seq.random:
            raise ValueError("random family needs mode='monte_carlo'")
        return np.array([stat(seq.realize(n)) for n in seq.n_grid])
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    if not seq.random:
        raise ValueError("monte_carlo mode needs a random family")
    if replicates < 30:
        raise ValueError("monte_carlo mode needs at least 30 replicates")
    if seed is None:
        raise ValueError("monte_carlo mode needs an explicit seed")
    return np.array([[stat(seq.realize(n, seed, r)) for r in range(replicates)]
                     for n in seq.n_grid])


def _mc_summary(samples, q):
    med = np.median(samples, axis=1)
    up = np.quantile(samples, q, axis=1)
    return med.tolist(), up.tolist()


def _diagnose(seq, stat, names, mode, replicates, seed, tol, notes=()):
    """Shared driver: one "-> 0" verdict and one "bounded" verdict."""
    zero_name, bounded_name = names
    thresholds = tol.as_dict()
    if mode == "deterministic":
        vals = _per_n(seq, stat, mode, replicates, seed)
        vz = trend_verdict(seq.n_grid, vals, "zero", tol)
        vb = trend_verdict(seq.n_grid, vals, "bounded", tol)
        mk = lambda name, v: CriterionVerdict(name, list(seq.n_grid), [float(x) for x in vals], v[0],
                                              v[1], v[2], v[3], None, thresholds, list(notes))
        return {zero_name: mk(zero_name, vz), bounded_name: mk(bounded_name, vb)}
    samples = _per_n(seq, stat, mode, replicates, seed)
    med, up = _mc_summary(samples, tol.quantile)
    zm = trend_verdict(seq.n_grid, med, "zero", tol)
    zu = trend_verdict(seq.n_grid, up, "zero", tol)
    bu = trend_verdict(seq.n_grid, up, "bounded", tol)
    mc_notes = list(notes) + [f"monte carlo: {replicates} replicates, seed {seed}",
                              "sufficient condition only; no converse is implied"]
    th = {**thresholds, "replicates": replicates, "seed": seed}
    return {
        zero_name: CriterionVerdict(zero_name, list(seq.n_grid), med, _combine(zm[0], zu[0]),
                                    zm[1], zm[2], zm[3], up, th, mc_notes,
                                    {"upper_slope": zu[1], "upper_verdict": zu[0]}),
        bounded_name: CriterionVerdict(bounded_name, list(seq.n_grid), med, bu[0],
                                       bu[1], bu[2], bu[3], up, th, mc_notes),
    }


def _rho_sum(pair: ProbPair) -> float:
    r = rho(pair.left, pair.right)
    if pair.weights is None:
        return float(np.sum(r))
    return float(np.sum(r * pair.weights))


def rho_sum_diagnostic(seq: SequencePair, mode: str = "deterministic", replicates: int = 200,
                       seed=None, tol: Tolerances = Tolerances()) -> dict:
    """Per-n rho-sums with a "-> 0" and a "bounded" verdict.

    Deterministic families yield ``t1i``/``t1iia``; random families
    (``mode="monte_carlo"``) yield ``t2i``/``t2iia``, where "-> 0" needs both
    the median and the upper quantile to vanish and "bounded" looks at the
    upper quantile.
    """
    names = ("t1i", "t1iia") if mode == "deterministic" else ("t2i", "t2iia")
    return _diagnose(seq, _rho_sum, names, mode, replicates, seed, tol)


def tail_sums(pair: ProbPair, C_grid) -> np.ndarray:
    """``T(C) = sum_{p > C p'} p + sum_{q > C q'} q`` with ``q = 1 - p``, for each ``C``.

    Every ``C`` sums the same-shaped masked array, so ``T`` is exactly
    nonincreasing in ``C``.
    """
    p, pp = pair.left, pair.right
    q, qq = 1.0 - p, 1.0 - pp
    w = np.ones_like(p) if pair.weights is None else pair.weights
    out = []
    for C in C_grid:
        a = np.where(p > C * pp, p * w, 0.0)
        b = np.where(q > C * qq, q * w, 0.0)
        out.append(float(np.sum(a) + np.sum(b)))
    return np.array(out)


@dataclass
class TailReport:
    condition: str
    n_grid: list
    C_grid: list
    table: list                 # table[n_index][C_index]; exceedance probabilities in Monte Carlo mode
    limsup: list                # per C: max over the top half of the n-grid
    verdict: str
    thresholds: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "condition": self.condition, "verdict": self.verdict, "n_grid": list(self.n_grid),
            "C_grid": list(self.C_grid), "table": [list(r) for r in self.table],
            "limsup": list(self.limsup), "thresholds": dict(self.thresholds), "notes": list(self.notes),
        }


def tail_condition(seq: SequencePair, C_grid, mode: str = "deterministic", replicates: int = 200,
                   seed=None, eps_tail: float = 1e-2, exceed_tol: float = 0.05,
                   swap: bool = False) -> TailReport:
    """Evaluate the tail condition on finite grids of ``n`` and ``C``.

    limsup over ``n`` is estimated by the maximum over the top half of the
    n-grid.  Deterministic: consistent iff that estimate at the largest
    ``C`` is below ``eps_tail``.  Monte Carlo: the table holds
    ``P(T_n(C) > eps_tail)`` and consistency needs it below ``exceed_tol``
    at the largest ``C``.  ``swap=True`` checks the reverse direction.
    """
    C_grid = [float(c) for c in C_grid]
    if len(C_grid) < 3 or any(b <= a for a, b in zip(C_grid, C_grid[1:])):
        raise ValueError("C_grid must be increasing with at least three values")
    orient = (lambda pr: pr.swapped()) if swap else (lambda pr: pr)
    if mode == "deterministic":
        name = "t1iic" if swap else "t1iib"
        table = np.array([tail_sums(orient(seq.realize(n)), C_grid) for n in seq.n_grid])
        cut = eps_tail
    else:
        if replicates < 30 or seed is None:
            raise ValueError("monte_carlo mode needs >= 30 replicates and a seed")
        name = "t2iic" if swap else "t2iib"
        raw = np.array([[tail_sums(orient(seq.realize(n, seed, r)), C_grid) for r in range(replicates)]
                        for n in seq.n_grid])
        table = np.mean(raw > eps_tail, axis=1)
        cut = exceed_tol
    top = table[len(seq.n_grid) // 2:]
    limsup = top.max(axis=0)
    verdict = CONSISTENT if limsup[-1] < cut else INCONSISTENT
    notes = ["limsup estimated by the max over the top half of the n-grid (heuristic)"]
    return TailReport(name, list(seq.n_grid), C_grid, table.tolist(), limsup.tolist(), verdict,
                      {"eps_tail": eps_tail, "exceed_tol": exceed_tol, "mode": mode,
                       "replicates": replicates if mode != "deterministic" else None, "seed": seed},
                      notes)


def _c1_stat(pair: ProbPair) -> float:
    p, pp = pair.left, pair.right
    d2 = (p - pp) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, d2 / np.where(p > 0, p, 1.0), np.where(d2 > 0, np.inf, 0.0))
    if pair.weights is not None:
        terms = np.where(pair.weights > 0, terms * pair.weights, 0.0)
    return float(np.sum(terms))


def c1_diagnostic(seq: SequencePair, mode: str = "deterministic", replicates: int = 200,
                  seed=None, tol: Tolerances = Tolerances(), max_p: float = 0.9) -> dict:
    """``sum (p - p')^2 / p`` along the grid, read as ``c1i`` (-> 0) and ``c1ii`` (bounded).

    Warns when some left probability exceeds ``max_p`` (the corollary's
    hypothesis); the check is made on the first realization at each ``n``.
    """
    for n in seq.n_grid:
        pair = seq.realize(n, seed, 0) if seq.random else seq.realize(n)
        if pair.left.max() > max_p:
            warnings.warn(f"{seq.label or 'family'}: max p = {pair.left.max():.3g} > {max_p} at n={n}; "
                          "c1 hypothesis violated", stacklevel=2)
            break
    return _diagnose(seq, _c1_stat, ("c1i", "c1ii"), mode, replicates, seed, tol)


def _cube_sum(pair: ProbPair) -> float:
    c = pair.left ** 3
    return float(np.sum(c if pair.weights is None else c * pair.weights))


def _c2_side(pair: ProbPair):
    p, pp = pair.left, pair.right
    pos = p > 0
    d = np.abs(pp - p)
    if np.any(~pos & (d > 0)):
        K = float("inf")
        c = 0.0
    else:
        K = float(np.max(d[pos] / p[pos] ** 2)) if np.any(pos) else 0.0
        c = float(np.min(pp[pos] / p[pos])) if np.any(pos) else 1.0
    return K, c, float(p.max()), float(pp.max())


def c2_diagnostic(seq: SequencePair, mode: str = "deterministic", replicates: int = 200,
                  seed=None, tol: Tolerances = Tolerances(), max_p: float = 0.9) -> dict:
    """``sum p^3`` along the grid, read as ``c2i`` and ``c2ii``.

    The hypothesis ``p' = p + O(p^2)`` is probed through
    ``K_n = max |p' - p| / p^2``; if ``K_n`` grows along the grid both
    verdicts become ``inconclusive``.  ``c2ii`` additionally needs
    ``max p, max p' <= max_p`` and ``p' >= c p`` with the best empirical
    ``c`` bounded away from zero.
    """
    out = _diagnose(seq, _cube_sum, ("c2i", "c2ii"), mode, replicates, seed, tol)
    reps = range(min(replicates, 30)) if seq.random else [0]
    side = []
    for n in seq.n_grid:
        vals = [_c2_side(seq.realize(n, seed, r) if seq.random else seq.realize(n)) for r in reps]
        K = max(v[0] for v in vals)
        c = min(v[1] for v in vals)
        side.append((K, c, max(v[2] for v in vals), max(v[3] for v in vals)))
    K_n = [s[0] for s in side]
    c_best = min(s[1] for s in side)
    maxes_ok = all(s[2] <= max_p and s[3] <= max_p for s in side)
    if any(np.isinf(K_n)):
        K_grows = True
    elif max(K_n) == 0:
        K_grows = False
    else:
        K_grows = _fit(seq.n_grid, K_n)[0] > tol.slope_tol
    extra = {"K_n": K_n, "K_grows": K_grows, "best_c": c_best, "maxima_ok": maxes_ok,
             "max_p": [s[2] for s in side], "max_p_prime": [s[3] for s in side]}
    for v in out.values():
        v.extra.update(extra)
        if K_grows:
            v.notes.append("K_n = max|p'-p|/p^2 grows along the grid: p' = p + O(p^2) not supported")
            v.verdict = INCONCLUSIVE
    c2ii = out["c2ii"]
    if not K_grows and c2ii.verdict == CONSISTENT and not (maxes_ok and c_best > 0):
        c2ii.verdict = INCONSISTENT
        c2ii.notes.append("side conditions (max p, max p' <= %g, p' >= c p) fail" % max_p)
    return out


@dataclass
class KakutaniReport:
    N_grid: list
    partial_sums: list
    last_decade_increment: float
    classification: str     # "absolutely-continuous-consistent", "singular-consistent", "inconclusive"
    thresholds: dict = field(default_factory=dict)

    def as_dict(self):
        return dict(self.__dict__)


def kakutani_partial_sums(left, right, N_grid, weights=None, plateau_tol: float = 1e-4,
                          bound: float = 1e2, growth_tol: float = 0.05) -> KakutaniReport:
    """Partial rho-sums of one fixed (n-independent) pair of sequences.

    ``left``/``right`` hold the first ``max(N_grid)`` terms (or term blocks
    with multiplicities ``weights``).  The increment over the last decade of
    ``N_grid`` decides the reading: below ``plateau_tol`` (and total below
    ``bound``) looks absolutely continuous; an increment above
    ``growth_tol`` that is not shrinking relative to the previous decade
    looks singular.
    """
    pair = ProbPair(left, right, weights)
    N_grid = np.asarray(N_grid, dtype=np.int64)
    if N_grid.min() < 1 or N_grid.max() > pair.left.size or np.any(np.diff(N_grid) <= 0):
        raise ValueError("N_grid must be increasing within the available terms")
    terms = rho(pair.left, pair.right)
    if pair.weights is not None:
        terms = terms * pair.weights
    cum = np.cumsum(terms)
    sums = cum[N_grid - 1]

    def S(N):
        return float(cum[max(int(N), 1) - 1])

    N_last = int(N_grid[-1])
    inc = S(N_last) - S(N_last // 10)
    prev = S(N_last // 10) - S(N_last // 100)
    if inc < plateau_tol and sums[-1] <= bound:
        cls = "absolutely-continuous-consistent"
    elif inc > growth_tol and (prev <= 0 or inc >= 0.5 * prev):
        cls = "singular-consistent"
    else:
        cls = "inconclusive"
    return KakutaniReport(N_grid.tolist(), sums.tolist(), inc, cls,
                          {"plateau_tol": plateau_tol, "bound": bound, "growth_tol": growth_tol})
