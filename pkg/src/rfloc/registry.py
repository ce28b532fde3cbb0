"""Model id registry: maps benchmark identifiers to fit routines.

Grammar:
  base regressors   svr | knr | gpr | dtr | mlp
  boosting          abr-<base> | abr (= abr-dtr) | gbr | hgbr
  bagging           bagging-<id> | rfr | ert
  stacking          stacking-<final>   (ten-regressor default base list)
Aliases baseline-all / boosting-all / bagging-all / stacking-all expand to
the standard comparison groups. Every id resolves to a builder with
signature (train: Dataset, seed: int) -> fitted Model.
"""

from __future__ import annotations

import dataclasses
import time
import zlib

import numpy as np

from .core import Dataset
from .ensemble import (
    EnsembleSpec,
    adaboost_r2_fit,
    bagging_fit,
    build_stacking_plan,
    extra_trees_fit,
    gradient_boost_fit,
    hist_gradient_boost_fit,
    random_forest_fit,
    stacking_fit,
    stacking_fit_from_plan,
)
from .regressors import cart_fit, gpr_fit, knn_fit, mlp_fit, svr_fit

BASE_IDS = ("svr", "knr", "gpr", "dtr", "mlp")

# Default stacking base list: the five single regressors plus the five
# ensemble regressors from the boosting/bagging comparisons.
DEFAULT_STACK_BASES = ("svr", "knr", "gpr", "dtr", "mlp", "abr", "gbr", "hgbr", "rfr", "ert")

ALIASES = {
    "baseline-all": list(BASE_IDS),
    "boosting-all": ["abr-svr", "abr-knr", "abr-gpr", "abr-dtr", "gbr", "hgbr"],
    "bagging-all": ["bagging-svr", "bagging-knr", "bagging-gpr", "rfr", "ert"],
    "stacking-all": [f"stacking-{final}" for final in DEFAULT_STACK_BASES],
}

_VALID_SUMMARY = (
    "svr, knr, gpr, dtr, mlp, abr[-<base>], gbr, hgbr, bagging-<id>, rfr, ert, "
    "stacking-<final>, plus aliases " + ", ".join(sorted(ALIASES))
)


def _crc(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


def _child_seed(*keys) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def normalize_id(model_id: str) -> str:
    mid = model_id.strip().lower()
    if mid == "etr":  # alternate abbreviation for extremely randomized trees
        mid = "ert"
    if mid == "abr":
        mid = "abr-dtr"
    return mid


def expand_model_ids(tokens) -> list[str]:
    """Flatten aliases and normalize ids, preserving request order."""
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t.strip()]
    out = []
    for tok in tokens:
        mid = tok.strip().lower()
        if mid in ALIASES:
            out.extend(ALIASES[mid])
        else:
            mid = normalize_id(mid)
            builder_for(mid)  # validate early; raises with the id list
            out.append(mid)
    return out


def builder_for(model_id: str):
    """Resolve one id to a (train, seed) -> Model builder."""
    mid = normalize_id(model_id)
    if mid == "svr":
        return lambda tr, s: svr_fit(tr)
    if mid == "knr":
        return lambda tr, s: knn_fit(tr)
    if mid == "gpr":
        return lambda tr, s: gpr_fit(tr)
    if mid == "dtr":
        return lambda tr, s: cart_fit(tr)
    if mid == "mlp":
        return lambda tr, s: mlp_fit(tr, seed=s)
    if mid == "gbr":
        return lambda tr, s: gradient_boost_fit(tr, seed=s)
    if mid == "hgbr":
        return lambda tr, s: hist_gradient_boost_fit(tr, seed=s)
    if mid == "rfr":
        return lambda tr, s: random_forest_fit(tr, seed=s)
    if mid == "ert":
        return lambda tr, s: extra_trees_fit(tr, seed=s)
    if mid.startswith("abr-"):
        base = builder_for(mid[len("abr-") :])
        return lambda tr, s: adaboost_r2_fit(tr, base, seed=s)
    if mid.startswith("bagging-"):
        base = builder_for(mid[len("bagging-") :])
        return lambda tr, s: bagging_fit(tr, base, seed=s)
    if mid.startswith("stacking-"):
        final = builder_for(mid[len("stacking-") :])
        bases = [builder_for(b) for b in DEFAULT_STACK_BASES]
        return lambda tr, s: stacking_fit(tr, bases, final, seed=s)
    raise ValueError(f"unknown model id {model_id!r}; valid ids: {_VALID_SUMMARY}")


def canonical_id(item) -> str:
    """Display/seeding label for a model id string or EnsembleSpec."""
    if isinstance(item, str):
        mid = item.strip().lower()
        if mid in ALIASES:
            raise ValueError(f"alias {item!r} must be expanded before use")
        return normalize_id(mid)
    if isinstance(item, EnsembleSpec):
        if item.strategy == "boosting-abr":
            return f"abr-{item.base[0]}" if item.base else "abr-dtr"
        if item.strategy == "boosting-gbr":
            return "gbr"
        if item.strategy == "boosting-hgbr":
            return "hgbr"
        if item.strategy == "bagging":
            return f"bagging-{item.base[0]}" if item.base else "bagging-dtr"
        if item.strategy == "random-forest":
            return "rfr"
        if item.strategy == "extra-trees":
            return "ert"
        if item.strategy == "stacking":
            if not item.base or tuple(item.base) == DEFAULT_STACK_BASES:
                return f"stacking-{item.final}"
            return f"stacking-{item.final}[{'+'.join(item.base)}]"
    raise TypeError(f"expected model id string or EnsembleSpec, got {type(item).__name__}")


def _fit_stacking_spec(spec: EnsembleSpec, train: Dataset, eff_seed: int, plan_cache):
    bases = tuple(spec.base) if spec.base else DEFAULT_STACK_BASES
    final_builder = builder_for(spec.final)
    base_builders = [builder_for(b) for b in bases]
    if plan_cache is None:
        return stacking_fit(train, base_builders, final_builder, n_folds=spec.n_folds, seed=eff_seed)
    # The out-of-fold plan depends only on (bases, folds, plan seed), so
    # different final estimators over the same bases share one plan.
    plan_seed = _child_seed(_crc("plan:" + ",".join(bases)), spec.n_folds, spec.seed)
    key = (bases, spec.n_folds, plan_seed)
    if key not in plan_cache:
        plan_cache[key] = build_stacking_plan(train, base_builders, n_folds=spec.n_folds, seed=plan_seed)
    plan = plan_cache[key]
    t0 = time.perf_counter()
    model = stacking_fit_from_plan(train, plan, final_builder, n_folds=spec.n_folds, seed=eff_seed)
    model.fit_time_s = plan.build_time_s + (time.perf_counter() - t0)
    model.frequencies_mhz = train.frequencies_mhz
    return model


def fit_spec(spec: EnsembleSpec, train: Dataset, seed: int | None = None, plan_cache=None):
    """Fit one EnsembleSpec on a training Dataset.

    Uses spec.seed unless an explicit seed override is given.
    """
    eff = spec.seed if seed is None else seed
    if spec.strategy == "boosting-abr":
        if len(spec.base) != 1:
            raise ValueError("boosting-abr takes exactly one base estimator id")
        return adaboost_r2_fit(train, builder_for(spec.base[0]), n_estimators=spec.n_estimators, seed=eff)
    if spec.strategy == "boosting-gbr":
        return gradient_boost_fit(
            train,
            n_estimators=spec.n_estimators,
            learning_rate=spec.learning_rate,
            max_depth=spec.max_depth,
            seed=eff,
        )
    if spec.strategy == "boosting-hgbr":
        return hist_gradient_boost_fit(
            train,
            n_estimators=spec.n_estimators,
            learning_rate=spec.learning_rate,
            max_depth=spec.max_depth,
            max_bins=spec.max_bins,
            seed=eff,
        )
    if spec.strategy == "bagging":
        if len(spec.base) != 1:
            raise ValueError("bagging takes exactly one base estimator id")
        return bagging_fit(train, builder_for(spec.base[0]), n_estimators=spec.n_estimators, seed=eff)
    if spec.strategy == "random-forest":
        return random_forest_fit(train, n_estimators=spec.n_estimators, seed=eff)
    if spec.strategy == "extra-trees":
        return extra_trees_fit(train, n_estimators=spec.n_estimators, seed=eff)
    if spec.strategy == "stacking":
        return _fit_stacking_spec(spec, train, eff, plan_cache)
    raise ValueError(f"unknown strategy {spec.strategy!r}")


def fit_model(item, train: Dataset, seed: int = 0, plan_cache=None):
    """Benchmark entry point: fit an id string or EnsembleSpec.

    The effective fit seed is derived from (seed, canonical id) so results
    do not depend on the model's position in the benchmark list.
    """
    model_id = canonical_id(item)
    if isinstance(item, str):
        mid = normalize_id(item)
        eff = _child_seed(seed, _crc(model_id))
        if mid.startswith("stacking-"):
            spec = EnsembleSpec(strategy="stacking", base=DEFAULT_STACK_BASES, final=mid[len("stacking-") :])
            return _fit_stacking_spec(dataclasses.replace(spec, seed=seed), train, eff, plan_cache)
        return builder_for(mid)(train, eff)
    if isinstance(item, EnsembleSpec):
        eff = _child_seed(seed, _crc(model_id), item.seed)
        if item.strategy == "stacking":
            return _fit_stacking_spec(dataclasses.replace(item, seed=seed), train, eff, plan_cache)
        return fit_spec(item, train, seed=eff)
    raise TypeError(f"expected model id string or EnsembleSpec, got {type(item).__name__}")
