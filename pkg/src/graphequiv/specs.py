"""Model spec files and the built-in example presets.

A model spec is a JSON object::

    {
      "label": "edet-odds",
      "intensity": {"kind": "kernel", "kernel": {"type": "max_inverse", "c": 1, "d": 0}},
      "ensemble": {"type": "grid"},
      "link": {"type": "odds"},
      "params": {}
    }

``intensity.kind`` is ``"kernel"`` or ``"weights"``.  Kernel types:
``rank1`` (with ``psi`` one of ``identity``, ``{"power": a}``,
``{"constant": v}``), ``max_inverse`` (``c``, ``d``), ``sqrt_inverse``
(``c``), ``tabulated`` (``csv`` path, relative to the spec file, or inline
``matrix``).  Ensembles: ``grid`` or ``iid``/``weights_iid`` with a
``distribution`` of ``uniform`` (``low``, ``high``), ``exponential``
(``scale``), ``pareto`` (``alpha``, ``xm``; survival ``(t/xm)^-alpha``) or
``categorical`` (``probs``).  Links: ``cap``, ``exp_link``, ``odds``.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .criteria import SequencePair
from .measures import ProbPair
from .models import (
    LINKS, GridEnsemble, IIDEnsemble, MaxInverse, ModelError, ModelFamily,
    RankOne, SqrtInverse, Tabulated, WeightsIID, load_tabulated_kernel, pair_models,
)

__all__ = ["SpecError", "parse_model_spec", "load_model_spec", "spec_hash", "PRESETS",
           "preset", "pair_from_specs", "specs_sequence"]


class SpecError(ValueError):
    """A model spec could not be parsed."""


def spec_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _distribution(d: dict):
    """Return ``(sampler, label, survival, atoms)`` for a distribution spec."""
    if not isinstance(d, dict) or "name" not in d:
        raise SpecError("distribution needs a 'name'")
    name = d["name"]
    if name == "uniform":
        lo, hi = float(d.get("low", 0.0)), float(d.get("high", 1.0))
        if not hi > lo:
            raise SpecError("uniform needs high > low")
        surv = lambda t: np.clip((hi - np.asarray(t, float)) / (hi - lo), 0.0, 1.0)
        return (lambda rng, n: rng.uniform(lo, hi, n)), f"uniform({lo},{hi})", surv, None
    if name == "exponential":
        s = float(d.get("scale", 1.0))
        if not s > 0:
            raise SpecError("exponential needs scale > 0")
        surv = lambda t: np.exp(-np.maximum(np.asarray(t, float), 0.0) / s)
        return (lambda rng, n: rng.exponential(s, n)), f"exponential({s})", surv, None
    if name == "pareto":
        a, xm = float(d.get("alpha", 3.0)), float(d.get("xm", 1.0))
        if not (a > 0 and xm > 0):
            raise SpecError("pareto needs alpha > 0 and xm > 0")
        surv = lambda t: np.where(np.asarray(t, float) < xm, 1.0, (xm / np.maximum(t, xm)) ** a)
        return (lambda rng, n: xm * (1.0 + rng.pareto(a, n))), f"pareto({a},{xm})", surv, None
    if name == "categorical":
        probs = np.asarray(d.get("probs", []), dtype=float)
        if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0):
            raise SpecError("categorical needs nonnegative probs summing to 1")
        return ((lambda rng, n: rng.choice(probs.size, size=n, p=probs).astype(float)),
                f"categorical({probs.size})", None, tuple(probs.tolist()))
    raise SpecError(f"unknown distribution {name!r}")


def _psi(spec):
    if spec in (None, "identity"):
        return (lambda x: np.asarray(x, float)), "identity"
    if isinstance(spec, dict) and "power" in spec:
        a = float(spec["power"])
        return (lambda x: np.asarray(x, float) ** a), f"power({a})"
    if isinstance(spec, dict) and "constant" in spec:
        v = float(spec["constant"])
        return (lambda x: np.full(np.shape(x), v)), f"constant({v})"
    raise SpecError(f"unknown psi {spec!r}")


def _kernel(spec: dict, base: Path):
    t = spec.get("type")
    if t == "rank1":
        fn, name = _psi(spec.get("psi"))
        return RankOne(fn, name)
    if t == "max_inverse":
        return MaxInverse(float(spec.get("c", 1.0)), float(spec.get("d", 0.0)))
    if t == "sqrt_inverse":
        return SqrtInverse(float(spec.get("c", 1.0)))
    if t == "tabulated":
        if "csv" in spec:
            return load_tabulated_kernel(base / spec["csv"])
        if "matrix" in spec:
            return Tabulated(spec["matrix"])
        raise SpecError("tabulated kernel needs 'csv' or 'matrix'")
    raise SpecError(f"unknown kernel type {t!r}")


def parse_model_spec(spec: dict, base_dir=".") -> ModelFamily:
    """Build a :class:`ModelFamily` from a decoded spec object."""
    try:
        if not isinstance(spec, dict):
            raise SpecError("model spec must be a JSON object")
        base = Path(base_dir)
        label = str(spec.get("label", "model"))
        intensity = spec.get("intensity") or {}
        kind = intensity.get("kind", "kernel")
        ens = spec.get("ensemble") or {"type": "grid"}
        link_name = (spec.get("link") or {"type": "cap"}).get("type")
        if link_name not in LINKS:
            raise SpecError(f"unknown link {link_name!r}")
        link = LINKS[link_name]
        if kind == "weights":
            dist = intensity.get("distribution") or ens.get("distribution")
            sampler, dlabel, surv, _ = _distribution(dist)
            return ModelFamily("weights", WeightsIID(sampler, dlabel, surv), link, label)
        if kind != "kernel":
            raise SpecError(f"unknown intensity kind {kind!r}")
        kernel = _kernel(intensity.get("kernel") or {}, base)
        if ens.get("type") == "grid":
            ensemble = GridEnsemble()
        elif ens.get("type") == "iid":
            sampler, dlabel, surv, atoms = _distribution(ens.get("distribution"))
            ensemble = IIDEnsemble(sampler, dlabel, atoms, surv)
        else:
            raise SpecError(f"unknown ensemble type {ens.get('type')!r}")
        return ModelFamily(kernel, ensemble, link, label)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(str(e)) from e


def load_model_spec(path):
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"{path}: {e}") from e
    return parse_model_spec(obj, path.parent), obj


def pair_from_specs(model_a: ModelFamily, model_b: ModelFamily, n: int, seed=None) -> ProbPair:
    """Realize two specs at the same ``(n, seed)``.

    Both models are driven by the same random stream, so specs that share an
    ensemble see the same vertex draw (identical specs give identical vectors).
    """
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    return ProbPair(model_a.realize(n, seed), model_b.realize(n, seed))


def specs_sequence(model_a: ModelFamily, model_b: ModelFamily, n_grid, label="specs") -> SequencePair:
    if model_a.random or model_b.random:
        return SequencePair(lambda n, rng: pair_from_specs(model_a, model_b, n, rng), n_grid,
                            random=True, label=label, model=model_a)
    return SequencePair(lambda n: pair_from_specs(model_a, model_b, n), n_grid, label=label,
                        model=model_a)


# ---------------------------------------------------------------- presets

def _geom(lo, hi, k):
    return sorted({int(round(v)) for v in np.geomspace(lo, hi, k)})


def _counterexample_t1(n_grid=None):
    def gen(n):
        return ProbPair([1.0 / n], [1.0 / n ** 2], weights=[n])
    return SequencePair(gen, n_grid or _geom(1e2, 1e5, 7), label="counterexample-t1")


def _egnp(n_grid=None, lam=1.0):
    def gen(n):
        N = n * (n - 1) // 2
        return ProbPair([lam / n], [-math.expm1(-lam / n)], weights=[N])
    return SequencePair(gen, n_grid or _geom(1e2, 1e4, 5), label="egnp")


def _ep2(n_grid=None, lam=1.0, delta_exponent=1.0):
    def gen(n):
        N = n * (n - 1) // 2
        p = min(0.9, lam / n)
        return ProbPair([p], [(1.0 + n ** -delta_exponent) * p], weights=[N])
    return SequencePair(gen, n_grid or _geom(1e2, 1e4, 5), label=f"ep2(delta=n^-{delta_exponent})")


def _grid_pair(kernel, label, n_grid, link_a, link_b):
    model = ModelFamily(kernel, GridEnsemble(), LINKS[link_a], label)

    def gen(n):
        return pair_models(model, LINKS[link_a], LINKS[link_b], n)
    return SequencePair(gen, n_grid or [100, 200, 400, 800, 1600, 3200], label=label, model=model)


def _edet(n_grid=None, c=1.0, d=0.0, link_a="cap", link_b="odds"):
    k = MaxInverse(c, d)
    if k.saturates:
        raise ModelError(f"edet preset needs d > c - 2 (got c={c}, d={d})")
    return _grid_pair(k, "edet", n_grid, link_a, link_b)


def _edet2(n_grid=None, c=1.0, link_a="cap", link_b="odds"):
    if not c < math.sqrt(2):
        raise ModelError("edet2 preset needs c < sqrt(2)")
    return _grid_pair(SqrtInverse(c), "edet2", n_grid, link_a, link_b)


def _erank1(n_grid=None, alpha=3.0, link_a="exp_link", link_b="odds"):
    sampler, dlabel, surv, _ = _distribution({"name": "pareto", "alpha": alpha, "xm": 1.0})
    model = ModelFamily(RankOne(lambda x: np.asarray(x, float), "identity"),
                        IIDEnsemble(sampler, dlabel, None, surv), LINKS[link_a], "erank1")

    def gen(n, rng):
        return pair_models(model, LINKS[link_a], LINKS[link_b], n, rng)
    return SequencePair(gen, n_grid or [100, 200, 400, 800, 1600], random=True, label="erank1",
                        model=model)


def _ehh(n_grid=None, scale=1.0, link_a="exp_link", link_b="odds"):
    from .models import ehh_family
    sampler, dlabel, surv, _ = _distribution({"name": "exponential", "scale": scale})
    return ehh_family(sampler, LINKS[link_a], LINKS[link_b], n_grid or [100, 200, 400, 800, 1600],
                      label="ehh", survival=surv)


PRESETS = {
    "counterexample-t1": _counterexample_t1,
    "egnp": _egnp,
    "ep2": _ep2,
    "edet": _edet,
    "edet2": _edet2,
    "erank1": _erank1,
    "ehh": _ehh,
}


def preset(name: str, n_grid=None, **params) -> SequencePair:
    """A :class:`SequencePair` for one of the built-in example families."""
    if name not in PRESETS:
        raise SpecError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    try:
        return PRESETS[name](n_grid=n_grid, **params)
    except TypeError as e:
        raise SpecError(f"preset {name}: {e}") from e
