"""Reports: metadata plus flat records, rendered as JSON or CSV.

Both renderings carry the same records, and floats are written with
``repr`` (the shortest string that round-trips a double), so the numeric
payload of a CSV file and of the JSON file for the same run is identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coupling import (
    InfeasibleError, clt_limit, edge_count_coupling, equality_rate_experiment,
)
from .criteria import (
    INCONCLUSIVE, SequencePair, Tolerances, c1_diagnostic, c2_diagnostic,
    rho_sum_diagnostic, tail_condition,
)
from .measures import N_MAX_ENUM, EnumerationTooLarge, tv_bounds, tv_exact_enumerate
from .specs import spec_hash

__all__ = ["Source", "Report", "distance_report", "criteria_report", "couple_report",
           "DEFAULT_C_GRID"]

DEFAULT_C_GRID = (2.0, 10.0, 100.0, 1000.0)


@dataclass
class Source:
    """A sequence pair together with the plain data that describes it."""

    seq: SequencePair
    description: dict

    @property
    def sha256(self) -> str:
        return spec_hash(self.description)


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return repr(v)
    return str(v)


@dataclass
class Report:
    metadata: dict
    records: list = field(default_factory=list)

    def add(self, kind: str, **fields):
        self.records.append({"kind": kind, **_plain(fields)})

    def verdicts(self) -> list:
        return [r for r in self.records if r["kind"] == "verdict"]

    @property
    def inconclusive(self) -> bool:
        return any(r["verdict"] == INCONCLUSIVE for r in self.verdicts())

    def to_json(self) -> str:
        return json.dumps({"metadata": _plain(self.metadata), "records": self.records}, indent=2) + "\n"

    def columns(self) -> list:
        cols = []
        for r in self.records:
            for k in r:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in _plain(self.metadata).items():
            buf.write(f"# {k}: {json.dumps(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        w.writerow(cols)
        for r in self.records:
            w.writerow([_cell(r.get(c)) for c in cols])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def _metadata(command, source: Source, config: dict, seed, tol=None) -> dict:
    meta = {
        "tool": "graphequiv",
        "version": __version__,
        "command": command,
        "source": source.description if source is not None else None,
        "spec_sha256": source.sha256 if source is not None else None,
        "seed": seed,
        "config": config,
    }
    if tol is not None:
        meta["tolerances"] = tol.as_dict()
    return meta


def _realize(seq: SequencePair, n, seed):
    if seq.random:
        if seed is None:
            raise ValueError("a random family needs --seed")
        return seq.realize(n, seed, 0)
    return seq.realize(n)


def distance_report(source: Source, n_grid, seed=None, nmax_enum: int = N_MAX_ENUM,
                    require_exact: bool = False) -> Report:
    """Distance summary at each ``n``; exact TV whenever ``N <= nmax_enum``.

    Random families are read at replicate 0 of ``seed``.  With
    ``require_exact`` an ``N`` above the limit raises
    :class:`EnumerationTooLarge`.
    """
    config = {"n_grid": list(n_grid), "nmax_enum": nmax_enum, "require_exact": require_exact}
    rep = Report(_metadata("distance", source, config, seed))
    for n in n_grid:
        pair = _realize(source.seq, n, seed)
        d = tv_bounds(pair)
        exact = None
        if pair.N <= nmax_enum:
            exact = tv_exact_enumerate(pair, nmax=nmax_enum)
        elif require_exact:
            raise EnumerationTooLarge(f"N={pair.N} at n={n} exceeds enumeration limit {nmax_enum}")
        rep.add("distance", n=int(n), N=pair.N, **{**d.as_dict(), "tv_exact": exact})
    return rep


def default_conditions(random: bool) -> list:
    if random:
        return ["t2i", "t2iia", "t2iib", "t2iic", "c1i", "c1ii", "c2i", "c2ii"]
    return ["t1i", "t1iia", "t1iib", "t1iic", "c1i", "c1ii", "c2i", "c2ii"]


def criteria_report(source: Source, conditions=None, n_grid=None, C_grid=DEFAULT_C_GRID,
                    replicates: int = 200, seed=None, tol: Tolerances = Tolerances()) -> Report:
    """Evaluate the requested conditions; one verdict record per condition."""
    seq = source.seq if n_grid is None else source.seq.with_grid(n_grid)
    random = seq.random
    conditions = list(conditions or default_conditions(random))
    allowed = default_conditions(random)
    bad = [c for c in conditions if c not in allowed]
    if bad:
        kind = "random" if random else "deterministic"
        raise ValueError(f"conditions {bad} do not apply to a {kind} family; choose from {allowed}")
    if random and seed is None:
        raise ValueError("a random family needs --seed")
    mode = "monte_carlo" if random else "deterministic"
    config = {"conditions": conditions, "n_grid": list(seq.n_grid), "C_grid": list(C_grid),
              "replicates": replicates if random else None, "mode": mode}
    rep = Report(_metadata("criteria", source, config, seed, tol))
    results = {}
    wanted = set(conditions)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if wanted & {"t1i", "t1iia", "t2i", "t2iia"}:
            results.update(rho_sum_diagnostic(seq, mode, replicates, seed, tol))
        if wanted & {"c1i", "c1ii"}:
            results.update(c1_diagnostic(seq, mode, replicates, seed, tol))
        if wanted & {"c2i", "c2ii"}:
            results.update(c2_diagnostic(seq, mode, replicates, seed, tol))
        for swap in (False, True):
            name = ("t2iic" if swap else "t2iib") if random else ("t1iic" if swap else "t1iib")
            if name in wanted:
                results[name] = tail_condition(seq, C_grid, mode, replicates, seed, swap=swap)
    rep.metadata["warnings"] = [str(w.message) for w in caught]
    for cond in conditions:
        v = results[cond]
        if hasattr(v, "table"):
            for n, row in zip(v.n_grid, v.table):
                for C, val in zip(v.C_grid, row):
                    rep.add("tail", condition=cond, n=n, C=C, value=val)
            for C, val in zip(v.C_grid, v.limsup):
                rep.add("tail_limsup", condition=cond, C=C, value=val)
            rep.add("verdict", condition=cond, verdict=v.verdict, notes="; ".join(v.notes))
            continue
        upper = v.upper or [None] * len(v.values)
        for n, val, up in zip(v.n_grid, v.values, upper):
            rep.add("value", condition=cond, n=n, value=val, upper=up)
        if cond.startswith("c2"):
            for n, K, mp, mpp in zip(v.n_grid, v.extra["K_n"], v.extra["max_p"], v.extra["max_p_prime"]):
                rep.add("side", condition=cond, n=n, K_n=K, max_p=mp, max_p_prime=mpp)
        rep.add("verdict", condition=cond, verdict=v.verdict, slope=v.slope, intercept=v.intercept,
                residual=v.residual, notes="; ".join(v.notes))
    return rep


def couple_report(mode: str, n_grid, seed, replicates: int, source: Source = None,
                  alpha=None, lam: float = 1.0) -> Report:
    """Coupling experiment along ``n_grid``.

    ``edgewise`` runs on ``source``.  ``edge_count`` needs a homogeneous
    pair: either ``p = lam/n`` and ``p' = p + alpha sqrt(p/N)``, or a source
    whose two vectors are each constant.
    """
    if seed is None:
        raise ValueError("coupling experiments need --seed")
    config = {"mode": mode, "n_grid": list(n_grid), "replicates": replicates,
              "alpha": alpha, "lam": lam if alpha is not None else None}
    rep = Report(_metadata("couple", source, config, seed))
    if mode == "edgewise":
        if source is None:
            raise ValueError("edgewise coupling needs a model source")
        seq = source.seq.with_grid(n_grid)
        for out in equality_rate_experiment(seq, seed, replicates):
            rep.add("coupling", n=out.n, estimate=out.disagree_prob, half_width=out.half_width,
                    bound=out.upper_bound, exact=out.exact, method=out.method)
        return rep
    if mode != "edge_count":
        raise ValueError(f"unknown coupling mode {mode!r}")
    for n in n_grid:
        N = n * (n - 1) // 2
        if alpha is not None:
            p = lam / n
            q = p + alpha * math.sqrt(p / N)
        else:
            if source is None:
                raise ValueError("edge_count coupling needs --alpha or a homogeneous source")
            pair = _realize(source.seq, n, seed)
            if np.ptp(pair.left) > 0 or np.ptp(pair.right) > 0 or pair.N != N:
                raise InfeasibleError("edge_count coupling needs a homogeneous pair over n(n-1)/2 edges")
            p, q = float(pair.left[0]), float(pair.right[0])
        if not (0.0 <= q <= 1.0):
            raise InfeasibleError(f"p' = {q!r} is not a probability at n={n}")
        out = edge_count_coupling(n, p, q, [int(seed), int(n)], replicates)
        rep.add("coupling", n=int(n), estimate=out.disagree_prob, half_width=out.half_width,
                bound=out.upper_bound, exact=out.exact, method=out.method,
                edgewise_bound=min(1.0, N * abs(p - q)),
                clt_reference=clt_limit(alpha) if alpha is not None else None)
    return rep
