"""The acceptance suite: named checks, each with its own pass/fail reading.

Every check is a function of a seed that returns ``(passed, detail)``;
:func:`run_acceptance` times them.  Checks reach ``rho`` and friends
through their modules at call time, so patching ``measures.rho`` is seen
by the whole suite.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, coupling, criteria, measures, models, specs
from .reports import Report, Source, couple_report, criteria_report

__all__ = ["CHECKS", "CheckResult", "run_acceptance", "acceptance_report", "FORM_BOUNDS",
           "graph_tv_enumerate"]

# observed extremes of rho/alt over the grid {0, .001, ..., 1}^2, rounded outward
FORM_BOUNDS = {
    "ratio_sum": (0.5, 1.0),
    "max_min": (0.26, 2.0),
    "cap": (0.17, 2.0),
    "small_p": (0.17, 9.24),
}


@dataclass
class CheckResult:
    name: str
    criterion: str
    passed: bool
    detail: str
    runtime: float


def _random_pairs(rng, count, nmax=12):
    out = []
    for _ in range(count):
        N = int(rng.integers(1, nmax + 1))
        p = rng.random(N)
        q = rng.random(N)
        # sprinkle in boundary values
        for v in (p, q):
            mask = rng.random(N) < 0.1
            v[mask] = rng.integers(0, 2, mask.sum())
        out.append((p, q))
    return out


def _interior_pairs(rng, count, nmax=12):
    return [(rng.uniform(0.01, 0.99, N), rng.uniform(0.01, 0.99, N))
            for N in rng.integers(1, nmax + 1, count)]


def check_hellinger_oracle(seed):
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for p, q in _random_pairs(rng, 200):
        P = measures.product_masses(p)
        Q = measures.product_masses(q)
        worst = max(worst, abs(measures.hellinger_product(p, q, check=False) - np.sum(np.sqrt(P * Q))))
    return worst <= 1e-10, f"max |H - enumeration| = {worst:.3g} (tol 1e-10)"


def check_metric_sandwich(seed):
    rng = np.random.default_rng([seed, 1])
    slack = 1e-12
    bad = 0
    for p, q in _random_pairs(rng, 200):
        r = measures.tv_bounds(p, q)
        tv = measures.tv_exact_enumerate(p, q)
        bad += not (r.tv_lower - slack <= tv <= r.tv_upper + slack)
    same = measures.tv_bounds([0.3, 0.7], [0.3, 0.7])
    same_tv = measures.tv_exact_enumerate([0.3, 0.7], [0.3, 0.7])
    sing = measures.tv_bounds([0.0, 1.0], [1.0, 0.0])
    sing_tv = measures.tv_exact_enumerate([0.0, 1.0], [1.0, 0.0])
    eq_ok = (same.hellinger_distance == 0 and same_tv == 0 and same.tv_lower == 0
             and abs(sing.hellinger_distance - 1) < 1e-15 and sing_tv == 1.0 and sing.tv_lower == 1.0)
    return bad == 0 and eq_ok, f"{bad} violations in 200 pairs; equality cases {'ok' if eq_ok else 'FAIL'}"


def check_lemma_double(seed):
    g = np.linspace(0.0, 1.0, 1001)
    P, Q = np.meshgrid(g, g, indexing="ij")
    p, q = P.ravel(), Q.ravel()
    via_rho = 1.0 - 0.5 * measures.rho(p, q)
    direct = np.sqrt(p * q) + np.sqrt((1 - p) * (1 - q))
    gap = float(np.max(np.abs(via_rho - direct)))
    return gap <= 1e-12, f"max gap {gap:.3g} on 1001x1001 grid (tol 1e-12)"


def graph_tv_enumerate(n, p, q):
    """TV between G(n, p) and G(n, q) by summing over all graphs on n labelled vertices."""
    N = n * (n - 1) // 2
    total = 0.0
    for edges in itertools.product((0, 1), repeat=N):
        m = sum(edges)
        total += abs(p ** m * (1 - p) ** (N - m) - q ** m * (1 - q) ** (N - m))
    return 0.5 * total


def check_graph_binomial(seed):
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for n in (3, 4):
        for p, q in rng.random((50, 2)):
            worst = max(worst, abs(graph_tv_enumerate(n, p, q) - coupling.binomial_tv_exact(n * (n - 1) // 2, p, q)))
    return worst <= 1e-12, f"max gap {worst:.3g} over 100 (n, p, p') draws (tol 1e-12)"


def check_clt(seed):
    lines, ok = [], True
    grid = (500, 1000, 2000, 4000)
    for a in (0.5, 1.0, 2.0):
        gaps = []
        for n in grid:
            N = n * (n - 1) // 2
            p = 1.0 / n
            gaps.append(abs(coupling.binomial_tv_exact(N, p, p + a * math.sqrt(p / N)) - coupling.clt_limit(a)))
        dec = all(b < c for c, b in zip(gaps, gaps[1:]))
        ok &= dec and gaps[-1] <= 0.02
        lines.append(f"alpha={a}: gap@4000={gaps[-1]:.4g} decreasing={dec}")
    return ok, "; ".join(lines)


def check_egnp_contrast(seed):
    n = 10_000
    N = n * (n - 1) // 2
    p, q = 1.0 / n, -math.expm1(-1.0 / n)
    lin = N * abs(p - q)
    quad = N * (q - p) ** 2 / p
    tv = coupling.binomial_tv_exact(N, p, q)
    ok = abs(lin - 0.25) <= 0.01 * 0.25 and quad <= 1e-3 and tv <= 0.05
    return ok, f"N|p-p'|={lin:.6g}, N(p'-p)^2/p={quad:.3g}, TV={tv:.4g}"


def check_counterexample(seed):
    seq = specs.preset("counterexample-t1")
    grid = seq.n_grid
    S = [float(criteria._rho_sum(seq.realize(n))) for n in grid]
    s_ok = all(0.8 <= s <= 1.05 for n, s in zip(grid, S) if n >= 1000)
    t_ok = True
    for n in grid:
        T = criteria.tail_sums(seq.realize(n), [10.0, 100.0])
        for C, t in zip((10, 100), T):
            if n > C and abs(t - 1.0) > 1e-12:
                t_ok = False
    v = criteria.rho_sum_diagnostic(seq)
    tail = criteria.tail_condition(seq, [10.0, 30.0, 100.0])
    verdicts = (v["t1iia"].verdict, v["t1i"].verdict, tail.verdict)
    v_ok = verdicts == ("consistent", "inconsistent", "inconsistent")
    return s_ok and t_ok and v_ok, (f"S_n={[round(s, 4) for s in S]}; T_n(C)=1: {t_ok}; "
                                    f"t1iia/t1i/t1iib = {'/'.join(verdicts)}")


def _cubic(kernel):
    grid = [10**k for k in range(1, 7)]
    sums = models.grid_cubic_partial_sums(kernel, grid)
    return grid, sums


def check_edet_convergence(seed):
    grid, s = _cubic(models.MaxInverse(1.0))
    mono = bool(np.all(np.diff(s) >= 0))
    gap = abs(s[grid.index(10**4)] - s[-1])
    return mono and gap <= 1e-3, f"nondecreasing={mono}; |S(1e4) - S(1e6)| = {gap:.3g} (tol 1e-3)"


def check_edet2_convergence(seed):
    grid, s = _cubic(models.SqrtInverse(1.0))
    mono = bool(np.all(np.diff(s) >= 0))
    gap = abs(s[grid.index(10**4)] - s[-1])
    return mono and gap <= 1e-3, f"nondecreasing={mono}; |S(1e4) - S(1e6)| = {gap:.3g} (tol 1e-3)"


def check_edet_plateau(seed):
    _, s = _cubic(models.MaxInverse(1.0))
    target = math.pi ** 2 / 6 - 1
    gap = abs(s[-1] - target)
    return gap <= 1e-3, f"S(1e6) = {s[-1]:.6f} vs pi^2/6 - 1 = {target:.6f} (gap {gap:.3g}, tol 1e-3)"


def check_kakutani(seed):
    N = 10**6
    p0, mult = models.grid_row_blocks(models.MaxInverse(1.0), N + 1)
    grid = [10**k for k in range(1, 7)]
    edet = criteria.kakutani_partial_sums(models.EXP_LINK(p0), models.ODDS(p0), grid, weights=mult)
    i = np.arange(1, N + 1, dtype=np.float64)
    control = criteria.kakutani_partial_sums(1.0 / i, 0.5 / i, grid)
    ok = (edet.last_decade_increment < 1e-4 and edet.classification == "absolutely-continuous-consistent"
          and control.last_decade_increment > 0.5)
    return ok, (f"edet last-decade increment {edet.last_decade_increment:.3g} ({edet.classification}); "
                f"control increment {control.last_decade_increment:.4g} (needs > 0.5, {control.classification})")


def check_edgewise_exact(seed):
    rng = np.random.default_rng([seed, 10])
    worst, bound_ok = 0.0, True
    for k in range(20):
        N = int(rng.integers(1, 30))
        p = rng.random(N)
        q = np.clip(p + rng.normal(0, 0.05, N), 0, 1)
        out = coupling.edgewise_coupling(measures.ProbPair(p, q), [seed, 10, k], replicates=100_000)
        sigma = math.sqrt(max(out.exact * (1 - out.exact), 1e-300) / 100_000)
        z = abs(out.disagree_prob - out.exact) / sigma if out.exact > 0 else (0.0 if out.disagree_prob == 0 else math.inf)
        worst = max(worst, z)
        bound_ok &= out.exact <= float(np.sum(np.abs(p - q))) + 1e-15
    return worst <= 3 and bound_ok, f"max |MC - exact|/sigma = {worst:.3g} (tol 3); exact <= sum|d|: {bound_ok}"


def check_second_moment(seed):
    rng = np.random.default_rng([seed, 11])
    worst, ident = 0.0, 0.0
    for p, q in _interior_pairs(rng, 100):
        P = measures.product_masses(p)
        Q = measures.product_masses(q)
        brute = float(np.sum(P * P / Q))
        worst = max(worst, abs(measures.second_moment_ratio(p, q) - brute) / brute)
        direct = p * p / q + (1 - p) ** 2 / (1 - q)
        ident = max(ident, float(np.max(np.abs(direct - measures.chi_square_factor(p, q)))))
    return worst <= 1e-9 and ident <= 1e-12, f"max rel err {worst:.3g} (tol 1e-9); identity gap {ident:.3g}"


_EHH_GRID = (100, 200, 400, 800, 1600)


def check_ehh_cube(seed):
    seq = specs.preset("ehh", n_grid=_EHH_GRID)
    samples = criteria._per_n(seq, criteria._cube_sum, "monte_carlo", 200, seed)
    med = np.median(samples, axis=1)
    dec = bool(np.all(np.diff(med) < 0))
    return dec, f"median sum p^3 = {[round(float(m), 5) for m in med]}; decreasing={dec}"


def check_ehh_t2i(seed):
    seq = specs.preset("ehh", n_grid=_EHH_GRID)
    v = criteria.rho_sum_diagnostic(seq, "monte_carlo", 200, seed)["t2i"]
    return v.verdict == "consistent", f"t2i {v.verdict} (median slope {v.slope:.3g}, last {v.values[-1]:.3g})"


def check_ehh_edgewise(seed):
    seq = specs.preset("ehh", n_grid=_EHH_GRID)
    out = coupling.equality_rate_experiment(seq, seed, 200)
    rates = [o.disagree_prob for o in out]
    exact = [o.exact for o in out]
    dec = all(b < a for a, b in zip(rates, rates[1:]))
    return dec, (f"disagreement {[round(r, 3) for r in rates]} "
                 f"(conditional mean {[round(e, 3) for e in exact]}); decreasing={dec}")


def check_determinism(seed):
    def run():
        texts = []
        src = Source(specs.preset("ehh", n_grid=(50, 100, 200, 400)), {"preset": "ehh"})
        r = criteria_report(src, ["t2i", "t2iia", "t2iib", "c2i"], replicates=30, seed=seed)
        texts += [r.to_json(), r.to_csv()]
        r = couple_report("edge_count", [200, 400], seed, 200, alpha=1.0)
        texts += [r.to_json(), r.to_csv()]
        src = Source(specs.preset("erank1", n_grid=(50, 100)), {"preset": "erank1"})
        r = couple_report("edgewise", [50, 100], seed, 50, src)
        texts += [r.to_json(), r.to_csv()]
        return texts
    a, b = run(), run()
    same = all(x == y for x, y in zip(a, b))
    return same, f"{len(a)} renderings byte-identical: {same}"


def check_form_equivalence(seed):
    g = np.round(np.linspace(0.0, 1.0, 1001), 3)
    P, Q = np.meshgrid(g, g, indexing="ij")
    p, q = P.ravel(), Q.ravel()
    r = measures.rho(p, q)
    lines, ok = [], True
    for form, (c, C) in FORM_BOUNDS.items():
        keep = p <= 0.9 if form == "small_p" else np.ones_like(p, dtype=bool)
        alt = measures.rho_alt(p[keep], q[keep], form)
        rk = r[keep]
        zeros_match = bool(np.all((rk == 0) == (alt == 0)))
        nz = alt > 0
        ratio = rk[nz] / alt[nz]
        lo, hi = float(ratio.min()), float(ratio.max())
        good = zeros_match and lo >= c * (1 - 1e-12) and hi <= C * (1 + 1e-12)
        ok &= good
        lines.append(f"{form}: [{lo:.4g}, {hi:.4g}] in [{c}, {C}] zeros={zeros_match}")
    return ok, "; ".join(lines)


CHECKS = {
    "hellinger_oracle": ("1", check_hellinger_oracle, 10.0),
    "metric_sandwich": ("2", check_metric_sandwich, None),
    "lemma_double": ("3", check_lemma_double, None),
    "graph_binomial_tv": ("4", check_graph_binomial, None),
    "clt_limit": ("5", check_clt, 60.0),
    "egnp_contrast": ("6", check_egnp_contrast, None),
    "counterexample_t1": ("7", check_counterexample, None),
    "edet_convergence": ("8", check_edet_convergence, None),
    "edet2_convergence": ("8", check_edet2_convergence, None),
    "edet_plateau": ("8", check_edet_plateau, None),
    "kakutani": ("9", check_kakutani, None),
    "edgewise_exact": ("10", check_edgewise_exact, None),
    "second_moment": ("11", check_second_moment, None),
    "ehh_cube_median": ("12", check_ehh_cube, 300.0),
    "ehh_t2i": ("12", check_ehh_t2i, 300.0),
    "ehh_edgewise_rate": ("12", check_ehh_edgewise, 300.0),
    "determinism": ("13", check_determinism, None),
    "form_equivalence": ("-", check_form_equivalence, None),
}


def run_check(name: str, seed: int = 20240601) -> CheckResult:
    criterion, fn, limit = CHECKS[name]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(seed)
    except Exception as e:  # a crash is a failure of that check, not of the suite
        passed, detail = False, f"raised {type(e).__name__}: {e}"
    dt = time.perf_counter() - t0
    if limit is not None and dt >= limit:
        passed, detail = False, f"{detail}; runtime {dt:.1f}s exceeds {limit:.0f}s"
    return CheckResult(name, criterion, bool(passed), detail, dt)


def run_acceptance(only=None, seed: int = 20240601) -> list:
    return [run_check(name, seed) for name in (only or CHECKS)]


def acceptance_report(results, seed, timings: bool = True) -> Report:
    rep = Report({"tool": "graphequiv", "version": __version__, "command": "accept", "seed": seed,
                  "checks": [r.name for r in results]})
    for r in results:
        rep.add("check", check=r.name, criterion=r.criterion, passed=r.passed, detail=r.detail,
                runtime=round(r.runtime, 3) if timings else None)
    return rep
