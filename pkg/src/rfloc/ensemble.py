"""Ensemble strategies: adaptive boosting, gradient boosting, bagging
variants, and stacked generalization over the base regressors.

Base estimators are supplied as builder callables with signature
``builder(train: Dataset, seed: int) -> Model`` so any estimator (including
another ensemble) can serve as a member. All per-member randomness is derived
from the ensemble seed, making every strategy bit-reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset
from .regressors import CartRegressor, Model

STRATEGIES = (
    "boosting-abr",
    "boosting-gbr",
    "boosting-hgbr",
    "bagging",
    "random-forest",
    "extra-trees",
    "stacking",
)


@dataclass(frozen=True)
class EnsembleSpec:
    """Declarative description of one ensemble configuration."""

    strategy: str
    base: tuple[str, ...] = ()
    final: str | None = None
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 3
    max_bins: int = 256
    n_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 2 <= self.max_bins <= 256:
            raise ValueError(f"max_bins must be in [2, 256], got {self.max_bins}")
        if self.n_folds < 2:
            raise ValueError(f"n_folds must be >= 2, got {self.n_folds}")
        if self.strategy == "stacking" and self.final is None:
            raise ValueError("stacking requires a final estimator id")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "base": list(self.base),
            "final": self.final,
            "n_estimators": self.n_estimators,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "max_bins": self.max_bins,
            "n_folds": self.n_folds,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        return cls(
            strategy=d["strategy"],
            base=tuple(d.get("base", ())),
            final=d.get("final"),
            n_estimators=d.get("n_estimators", 100),
            learning_rate=d.get("learning_rate", 0.1),
            max_depth=d.get("max_depth", 3),
            max_bins=d.get("max_bins", 256),
            n_folds=d.get("n_folds", 5),
            seed=d.get("seed", 0),
        )


def _child_seed(*keys) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def weighted_median(predictions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-output weighted median across ensemble members.

    predictions has shape (rounds, queries, outputs). For each query and
    output, members are sorted by predicted value and the first member whose
    cumulative weight reaches half the total is selected.
    """
    rounds, q, d = predictions.shape
    total = weights.sum()
    out = np.empty((q, d))
    row = np.arange(q)
    for j in range(d):
        P = predictions[:, :, j].T  # (q, rounds)
        idx = np.argsort(P, axis=1, kind="stable")
        cdf = np.cumsum(weights[idx], axis=1)
        sel = np.argmax(cdf >= 0.5 * total, axis=1)
        out[:, j] = P[row, idx[row, sel]]
    return out


class AdaBoostR2(Model):
    """Adaptive boosting for regression with linear loss.

    Each round resamples the training set by the current sample weights,
    fits the base estimator, and scores each sample by its Euclidean
    prediction error relative to the round's worst error. Rounds with average
    loss >= 0.5 stop the process (the round is discarded unless it is the
    first). Prediction is the per-output weighted median over rounds with
    round weights ln(1/beta).
    """

    kind = "abr"

    def __init__(self, base_builder, n_estimators: int = 50, seed: int = 0):
        super().__init__()
        self.base_builder = base_builder
        self.n_estimators = n_estimators
        self.seed = seed

    def fit_dataset(self, train: Dataset):
        n = train.n
        w = np.full(n, 1.0 / n)
        self.members_ = []
        self.member_weights_ = []
        self.avg_losses_ = []
        self.weight_history = [w.copy()]
        for r in range(self.n_estimators):
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, r, 0]))
            w = w / w.sum()
            idx = rng.choice(n, size=n, replace=True, p=w)
            try:
                member = self.base_builder(train.subset(idx), _child_seed(self.seed, r, 1))
            except Exception as exc:
                raise ValueError(f"base estimator failed in boosting round {r}: {exc}") from exc
            pred = member.predict(train.features)
            err = np.linalg.norm(pred - train.labels, axis=1)
            err_max = err.max()
            if err_max == 0.0:
                self.members_.append(member)
                self.member_weights_.append(1.0)
                self.avg_losses_.append(0.0)
                break
            loss = err / err_max
            avg_loss = float(w @ loss)
            if avg_loss >= 0.5:
                if not self.members_:
                    self.members_.append(member)
                    self.member_weights_.append(1.0)
                    self.avg_losses_.append(avg_loss)
                break
            beta = avg_loss / (1.0 - avg_loss)
            self.members_.append(member)
            self.member_weights_.append(math.log(1.0 / beta))
            self.avg_losses_.append(avg_loss)
            w = w * beta ** (1.0 - loss)
            w = w / w.sum()
            self.weight_history.append(w.copy())
        self.member_weights_ = np.array(self.member_weights_)
        self.n_outputs = train.labels.shape[1]
        self._fitted = True
        return self

    def fit(self, features, labels):
        from .core import validate_dataset

        features = np.asarray(features, dtype=np.float64)
        return self.fit_dataset(
            validate_dataset(features, labels, np.arange(1, features.shape[1] + 1))
        )

    def _predict(self, features):
        preds = np.stack([m.predict(features) for m in self.members_])
        return weighted_median(preds, self.member_weights_)


class GradientBoosting(Model):
    """Stagewise boosting of shallow regression trees on residuals.

    Each output dimension is boosted independently from its training mean;
    stage trees fit the current residuals and are added with shrinkage
    learning_rate. train_rmse_path records the training RMSE after every
    stage (all outputs combined).
    """

    kind = "gbr"

    def __init__(
        self,
        n_estimators: int = 100,
        learning_rate: float = 0.1,
        max_depth: int | None = 3,
        seed: int = 0,
    ):
        super().__init__()
        if n_estimators < 0:
            raise ValueError(f"n_estimators must be >= 0, got {n_estimators}")
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, features, labels):
        X = np.asarray(features, dtype=np.float64)
        Y = np.asarray(labels, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        d = Y.shape[1]
        self._base_value = Y.mean(axis=0)
        self._trees = [[] for _ in range(d)]
        F = np.tile(self._base_value, (X.shape[0], 1))
        self.train_rmse_path = []
        for _ in range(self.n_estimators):
            for j in range(d):
                tree = CartRegressor(max_depth=self.max_depth)
                tree.fit(X, (Y[:, j] - F[:, j])[:, None])
                self._trees[j].append(tree)
                F[:, j] += self.learning_rate * tree.predict(X)[:, 0]
            self.train_rmse_path.append(
                float(np.sqrt(np.mean(np.sum((Y - F) ** 2, axis=1))))
            )
        self.n_outputs = d
        self._fitted = True
        return self

    def _predict(self, features):
        out = np.tile(self._base_value, (features.shape[0], 1))
        for j, trees in enumerate(self._trees):
            for tree in trees:
                out[:, j] += self.learning_rate * tree.predict(features)[:, 0]
        return out


def quantile_bin_edges(col: np.ndarray, max_bins: int) -> np.ndarray:
    """Bin edges for one feature: value midpoints when few distinct values,
    otherwise training quantiles with tied edges collapsed."""
    uniq = np.unique(col)
    if uniq.size <= max_bins:
        return (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.quantile(col, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
    return np.unique(qs)


class HistGradientBoosting(Model):
    """Gradient boosting on quantile-binned features.

    Features are mapped to integer bin codes (edges from training quantiles,
    ties collapsed); the stage trees then only ever split on bin boundaries.
    When every feature has at most max_bins distinct values the binning is
    lossless and predictions equal plain gradient boosting exactly.
    """

    kind = "hgbr"

    def __init__(
        self,
        n_estimators: int = 100,
        learning_rate: float = 0.1,
        max_depth: int | None = 3,
        max_bins: int = 256,
        seed: int = 0,
    ):
        super().__init__()
        if not 2 <= max_bins <= 256:
            raise ValueError(f"max_bins must be in [2, 256], got {max_bins}")
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.max_bins = max_bins
        self.seed = seed

    def _bin(self, X):
        codes = np.empty_like(X)
        for j, edges in enumerate(self._edges):
            codes[:, j] = np.searchsorted(edges, X[:, j], side="left")
        return codes

    def fit(self, features, labels):
        X = np.asarray(features, dtype=np.float64)
        self._edges = [quantile_bin_edges(X[:, j], self.max_bins) for j in range(X.shape[1])]
        self._booster = GradientBoosting(
            n_estimators=self.n_estimators,
            learning_rate=self.learning_rate,
            max_depth=self.max_depth,
            seed=self.seed,
        )
        self._booster.fit(self._bin(X), labels)
        self.train_rmse_path = self._booster.train_rmse_path
        self.n_outputs = self._booster.n_outputs
        self._fitted = True
        return self

    def _predict(self, features):
        return self._booster.predict(self._bin(features))

    @property
    def bin_counts(self) -> list[int]:
        """Number of occupied bins per feature."""
        return [len(e) + 1 for e in self._edges]


class BaggingEnsemble(Model):
    """Bootstrap aggregation: seeded resamples, unweighted mean prediction."""

    kind = "bagging"

    def __init__(self, base_builder, n_estimators: int = 100, bootstrap: bool = True, seed: int = 0):
        super().__init__()
        self.base_builder = base_builder
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.seed = seed

    def fit_dataset(self, train: Dataset):
        n = train.n
        self.members_ = []
        self.member_indices_ = []
        for r in range(self.n_estimators):
            if self.bootstrap:
                rng = np.random.default_rng(np.random.SeedSequence([self.seed, r, 0]))
                idx = rng.integers(0, n, size=n)
            else:
                idx = np.arange(n)
            self.member_indices_.append(idx)
            try:
                self.members_.append(self.base_builder(train.subset(idx), _child_seed(self.seed, r, 1)))
            except Exception as exc:
                raise ValueError(f"base estimator failed for bagging member {r}: {exc}") from exc
        self.n_outputs = train.labels.shape[1]
        self._fitted = True
        return self

    def fit(self, features, labels):
        from .core import validate_dataset

        features = np.asarray(features, dtype=np.float64)
        return self.fit_dataset(
            validate_dataset(features, labels, np.arange(1, features.shape[1] + 1))
        )

    def _predict(self, features):
        preds = np.stack([m.predict(features) for m in self.members_])
        return preds.mean(axis=0)


class _TreeForest(Model):
    """Shared machinery for random forests and extremely randomized trees."""

    def __init__(self, n_estimators, max_features, bootstrap, random_thresholds, seed):
        super().__init__()
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_thresholds = random_thresholds
        self.seed = seed

    def fit(self, features, labels):
        X = np.asarray(features, dtype=np.float64)
        Y = np.asarray(labels, dtype=np.float64)
        n = X.shape[0]
        self.members_ = []
        for r in range(self.n_estimators):
            if self.bootstrap:
                rng = np.random.default_rng(np.random.SeedSequence([self.seed, r, 0]))
                idx = rng.integers(0, n, size=n)
            else:
                idx = np.arange(n)
            tree = CartRegressor(
                max_features=self.max_features,
                random_thresholds=self.random_thresholds,
                seed=_child_seed(self.seed, r, 1),
            )
            tree.fit(X[idx], Y[idx])
            self.members_.append(tree)
        self.n_outputs = Y.shape[1] if Y.ndim > 1 else 1
        self._fitted = True
        return self

    def _predict(self, features):
        preds = np.stack([m.predict(features) for m in self.members_])
        return preds.mean(axis=0)


class RandomForest(_TreeForest):
    kind = "rfr"

    def __init__(self, n_estimators=100, max_features=None, bootstrap=True, seed=0):
        super().__init__(n_estimators, max_features, bootstrap, False, seed)


class ExtraTrees(_TreeForest):
    """Forest of trees with one uniform-random threshold per candidate
    feature, grown on the full sample (no bootstrap)."""

    kind = "ert"

    def __init__(self, n_estimators=100, max_features=None, seed=0):
        super().__init__(n_estimators, max_features, False, True, seed)


class StackingEnsemble(Model):
    """Stacked generalization with out-of-fold meta-features.

    Row i of the meta-feature matrix (width 3 * n_bases) is predicted by
    base models that never saw fold(i) during training; the final estimator
    is fit on those meta-features. Bases are refit on the full training set
    for inference. fold_plan records (train_indices, predict_indices) per
    fold for auditing.
    """

    kind = "stacking"

    def __init__(self, base_builders, final_builder, n_folds: int = 5, seed: int = 0):
        super().__init__()
        if not base_builders:
            raise ValueError("stacking requires at least one base estimator")
        if n_folds < 2:
            raise ValueError(f"n_folds must be >= 2, got {n_folds}")
        self.base_builders = list(base_builders)
        self.final_builder = final_builder
        self.n_folds = n_folds
        self.seed = seed

    def fit_dataset(self, train: Dataset):
        plan = build_stacking_plan(
            train, self.base_builders, n_folds=self.n_folds, seed=self.seed
        )
        self._attach_plan(train, plan)
        return self

    def _attach_plan(self, train: Dataset, plan: "StackingPlan"):
        self.fold_plan = plan.fold_plan
        self.meta_features_ = plan.meta_features
        self.full_bases_ = plan.full_bases
        try:
            self.final_ = self.final_builder(
                Dataset(
                    features=plan.meta_features,
                    labels=train.labels,
                    frequencies_mhz=tuple(range(1, plan.meta_features.shape[1] + 1)),
                ),
                _child_seed(self.seed, 2**31),
            )
        except Exception as exc:
            raise ValueError(f"final estimator failed on meta-features: {exc}") from exc
        self.n_outputs = train.labels.shape[1]
        self._fitted = True
        return self

    def fit(self, features, labels):
        from .core import validate_dataset

        features = np.asarray(features, dtype=np.float64)
        return self.fit_dataset(
            validate_dataset(features, labels, np.arange(1, features.shape[1] + 1))
        )

    def _predict(self, features):
        meta = np.hstack([m.predict(features) for m in self.full_bases_])
        return self.final_.predict(meta)


@dataclass
class StackingPlan:
    """Out-of-fold meta-features plus fully refit bases, reusable across
    different final estimators on the same base list and fold split."""

    meta_features: np.ndarray
    full_bases: list
    fold_plan: list = field(default_factory=list)
    build_time_s: float = 0.0


def build_stacking_plan(train: Dataset, base_builders, n_folds: int = 5, seed: int = 0) -> StackingPlan:
    t0 = time.perf_counter()
    n = train.n
    if n < n_folds:
        raise ValueError(f"cannot split {n} rows into {n_folds} non-empty folds")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    folds = np.array_split(rng.permutation(n), n_folds)

    n_out = train.labels.shape[1]
    meta = np.empty((n, n_out * len(base_builders)))
    fold_plan = []
    for f_idx, hold in enumerate(folds):
        keep = np.concatenate([folds[g] for g in range(n_folds) if g != f_idx])
        fold_plan.append((keep.copy(), hold.copy()))
        sub = train.subset(keep)
        for b_idx, builder in enumerate(base_builders):
            try:
                member = builder(sub, _child_seed(seed, f_idx, b_idx))
            except Exception as exc:
                raise ValueError(
                    f"base estimator {b_idx} failed on fold {f_idx} "
                    f"(fold-train size {keep.size}): {exc}"
                ) from exc
            meta[hold, b_idx * n_out : (b_idx + 1) * n_out] = member.predict(
                train.features[hold]
            )

    full_bases = []
    for b_idx, builder in enumerate(base_builders):
        try:
            full_bases.append(builder(train, _child_seed(seed, n_folds, b_idx)))
        except Exception as exc:
            raise ValueError(f"base estimator {b_idx} failed on the full training set: {exc}") from exc
    return StackingPlan(
        meta_features=meta,
        full_bases=full_bases,
        fold_plan=fold_plan,
        build_time_s=time.perf_counter() - t0,
    )


def stacking_fit_from_plan(
    train: Dataset, plan: StackingPlan, final_builder, n_folds: int = 5, seed: int = 0
) -> StackingEnsemble:
    """Fit a stacking model reusing a previously built plan (shared bases)."""
    model = StackingEnsemble([None], final_builder, n_folds=n_folds, seed=seed)
    model.base_builders = []
    return model._attach_plan(train, plan)


def adaboost_r2_fit(train: Dataset, base_builder, n_estimators: int = 50, seed: int = 0) -> AdaBoostR2:
    model = AdaBoostR2(base_builder, n_estimators=n_estimators, seed=seed)
    t0 = time.perf_counter()
    model.fit_dataset(train)
    model.fit_time_s = time.perf_counter() - t0
    model.frequencies_mhz = train.frequencies_mhz
    return model


def gradient_boost_fit(
    train: Dataset,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
    max_depth: int | None = 3,
    seed: int = 0,
) -> GradientBoosting:
    from .regressors import fit_on_dataset

    return fit_on_dataset(
        GradientBoosting(
            n_estimators=n_estimators,
            learning_rate=learning_rate,
            max_depth=max_depth,
            seed=seed,
        ),
        train,
    )


def hist_gradient_boost_fit(
    train: Dataset,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
    max_depth: int | None = 3,
    max_bins: int = 256,
    seed: int = 0,
) -> HistGradientBoosting:
    from .regressors import fit_on_dataset

    return fit_on_dataset(
        HistGradientBoosting(
            n_estimators=n_estimators,
            learning_rate=learning_rate,
            max_depth=max_depth,
            max_bins=max_bins,
            seed=seed,
        ),
        train,
    )


def bagging_fit(
    train: Dataset, base_builder, n_estimators: int = 100, bootstrap: bool = True, seed: int = 0
) -> BaggingEnsemble:
    model = BaggingEnsemble(base_builder, n_estimators=n_estimators, bootstrap=bootstrap, seed=seed)
    t0 = time.perf_counter()
    model.fit_dataset(train)
    model.fit_time_s = time.perf_counter() - t0
    model.frequencies_mhz = train.frequencies_mhz
    return model


def random_forest_fit(
    train: Dataset,
    n_estimators: int = 100,
    max_features: int | None = None,
    bootstrap: bool = True,
    seed: int = 0,
) -> RandomForest:
    from .regressors import fit_on_dataset

    return fit_on_dataset(
        RandomForest(
            n_estimators=n_estimators, max_features=max_features, bootstrap=bootstrap, seed=seed
        ),
        train,
    )


def extra_trees_fit(
    train: Dataset, n_estimators: int = 100, max_features: int | None = None, seed: int = 0
) -> ExtraTrees:
    from .regressors import fit_on_dataset

    return fit_on_dataset(
        ExtraTrees(n_estimators=n_estimators, max_features=max_features, seed=seed), train
    )


def stacking_fit(
    train: Dataset, base_builders, final_builder, n_folds: int = 5, seed: int = 0
) -> StackingEnsemble:
    model = StackingEnsemble(base_builders, final_builder, n_folds=n_folds, seed=seed)
    t0 = time.perf_counter()
    model.fit_dataset(train)
    model.fit_time_s = time.perf_counter() - t0
    model.frequencies_mhz = train.frequencies_mhz
    return model
