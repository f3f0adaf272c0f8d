"""Bias-injection validation protocol with repeated k-fold splits.

Each repetition draws a fresh bias assignment (a fixed fraction of one
sensitive group gets its response shifted) and a fold permutation; every
configured estimator variant is trained on the biased training rows of
each fold and predicts the held-out rows. The held-out predictions are
pooled over folds, so each repetition yields one full-length prediction
vector per variant, scored against both the biased and the raw
responses; reported metrics are means over repetitions.

Covariate roles are re-assigned per variant to match each estimator's
worldview: the formal-equality variant treats every non-sensitive
covariate as legitimate, the substantive-equality ones treat them all as
suspect. All randomness derives from one master seed via a 64-bit mix,
so results are reproducible bit for bit; repetitions are independent and
may run on a small thread pool (capped by the IMPARTIAL_THREADS
environment variable), reduced in deterministic order.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..data import Dataset, Schema, collect_levels, encode, take
from ..errors import ContractError, DataError
from ..estimators import (
    Variant,
    aligned_design,
    as_all_legitimate,
    as_all_suspect,
    fit_total,
    predict,
    with_blackbox,
)
from ..metrics import ScoreMode, discrimination_score, impartiality_score, rmse
from .calders import fit_calders, predict_calders
from .trees import BaggedTrees, raw_features

METRIC_NAMES = ("rmse_biased", "rmse_raw", "ds", "is")

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    """One splitmix64 step; the documented mixing function for seed derivation."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, repetition: int, fold: int) -> int:
    """Per-task seed: master XOR splitmix64(repetition, fold), mixed once more."""
    combined = _splitmix64(((repetition + 1) << 32) ^ (fold + 1))
    return _splitmix64((master & _MASK64) ^ combined)


# Reserved fold slots for per-repetition randomness not tied to one fold.
_BIAS_SLOT = 1 << 20
_PERM_SLOT = (1 << 20) + 1


@dataclass(frozen=True)
class BiasSpec:
    """Shift the response of an exact-count random subset of one group."""

    target_group_label: str
    fraction: float
    shift: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ContractError(f"bias fraction must be in [0,1], got {self.fraction}")


@dataclass(frozen=True)
class ExperimentConfig:
    folds: int = 5
    repetitions: int = 20
    variants: tuple[Variant, ...] = (
        Variant.FULL,
        Variant.FEO,
        Variant.FSEO,
        Variant.CALDERS_BASELINE,
        Variant.MARGINAL,
    )
    master_seed: int = 0
    ds_groups: tuple[str, str] | None = None  # (positive, negative)
    calders_bins: int = 5
    blackbox_trees: int = 50
    blackbox_depth: int = 8
    blackbox_min_leaf: int = 5

    def __post_init__(self):
        if self.folds < 2:
            raise ContractError("need at least 2 folds")
        if self.repetitions < 1:
            raise ContractError("need at least 1 repetition")
        if not self.variants:
            raise ContractError("no variants configured")


@dataclass(frozen=True)
class ValidationTable:
    """Mean metrics per variant across repetitions."""

    variants: tuple[str, ...]
    metrics: tuple[str, ...]
    values: dict[str, dict[str, float]]

    def to_text(self) -> str:
        width = max(12, *(len(v) + 2 for v in self.variants))
        header = "metric".ljust(12) + "".join(v.rjust(width) for v in self.variants)
        lines = [header]
        for m in self.metrics:
            row = m.ljust(12) + "".join(
                format(self.values[v][m], ".6g").rjust(width) for v in self.variants
            )
            lines.append(row)
        return "\n".join(lines) + "\n"

    def csv_rows(self) -> list[tuple[str, str, str]]:
        return [
            (v, m, format(self.values[v][m], ".17g"))
            for v in self.variants
            for m in self.metrics
        ]


def group_rows(data: Dataset, schema: Schema) -> dict[str, np.ndarray]:
    """Row indices per sensitive group label."""
    from ..data import _group_labels

    labels = _group_labels(data, schema)
    out: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        out.setdefault(lab, []).append(i)
    return {k: np.asarray(v, dtype=int) for k, v in out.items()}


def inject_bias(data: Dataset, schema: Schema, spec: BiasSpec) -> Dataset:
    """Response shift for round(fraction * group size) rows of the target group.

    Sampling is without replacement and deterministic under ``spec.seed``;
    fraction 0 returns the data unchanged.
    """
    resp = schema.response
    response = data.columns[resp.name]
    if not isinstance(response, np.ndarray):
        raise ContractError("bias injection needs a numeric response")
    groups = group_rows(data, schema)
    if spec.target_group_label not in groups:
        raise DataError(
            f"unknown bias target group {spec.target_group_label!r}; "
            f"have {sorted(groups)}"
        )
    rows = groups[spec.target_group_label]
    count = int(np.floor(spec.fraction * rows.size + 0.5))
    if count == 0 or spec.shift == 0.0:
        return data
    rng = np.random.default_rng(spec.seed)
    chosen = rng.choice(rows, size=count, replace=False)
    shifted = response.copy()
    shifted[chosen] += spec.shift
    return data.replace_column(resp.name, shifted)


def _natural_mode(variant: Variant) -> ScoreMode:
    return ScoreMode.FEO if variant is Variant.FEO else ScoreMode.SEO


def _ds_group_pair(
    config: ExperimentConfig, bias: BiasSpec | None, groups: dict[str, np.ndarray]
) -> tuple[str, str]:
    if config.ds_groups is not None:
        return config.ds_groups
    labels = list(groups)
    if bias is not None and bias.target_group_label in groups and len(labels) == 2:
        other = next(g for g in labels if g != bias.target_group_label)
        return bias.target_group_label, other
    if len(labels) == 2:
        return labels[1], labels[0]
    raise ContractError(
        "ds_groups must be configured when the data has more than two groups"
    )


def _fold_bounds(n: int, folds: int) -> np.ndarray:
    return np.linspace(0, n, folds + 1).astype(int)


def _run_repetition(
    data: Dataset,
    schema: Schema,
    config: ExperimentConfig,
    bias: BiasSpec | None,
    levels,
    rep: int,
) -> tuple[np.ndarray, dict[str, np.ndarray], np.ndarray | None]:
    """One repetition: biased response, pooled held-out predictions per
    variant, and (when configured) pooled black-box raw predictions."""
    n = data.n_rows
    if bias is not None:
        biased = inject_bias(
            data,
            schema,
            dataclasses.replace(
                bias, seed=derive_seed(config.master_seed, rep, _BIAS_SLOT)
            ),
        )
    else:
        biased = data
    perm = np.random.default_rng(
        derive_seed(config.master_seed, rep, _PERM_SLOT)
    ).permutation(n)
    bounds = _fold_bounds(n, config.folds)

    pooled = {v.value: np.zeros(n) for v in config.variants}
    bb_pooled = (
        np.zeros(n) if Variant.BLACKBOX_CORRECTED in config.variants else None
    )

    for fold in range(config.folds):
        test_idx = np.sort(perm[bounds[fold] : bounds[fold + 1]])
        train_idx = np.sort(
            np.concatenate([perm[: bounds[fold]], perm[bounds[fold + 1] :]])
        )
        enc_train = encode(take(biased, train_idx), schema, levels=levels)
        enc_test = encode(take(data, test_idx), schema, levels=levels)

        fits: dict = {}

        def base_fit(key, transform):
            if key not in fits:
                fits[key] = fit_total(transform(enc_train))
            return fits[key]

        for variant in config.variants:
            if variant is Variant.FEO:
                fit = base_fit("x", as_all_legitimate)
                values = predict(
                    fit, aligned_design(fit, as_all_legitimate(enc_test)), variant
                ).values
            elif variant is Variant.FSEO:
                fit = base_fit("w", as_all_suspect)
                values = predict(
                    fit, aligned_design(fit, as_all_suspect(enc_test)), variant
                ).values
            elif variant is Variant.CALDERS_BASELINE:
                cfit = fit_calders(
                    as_all_suspect(enc_train), bins=config.calders_bins
                )
                values = predict_calders(cfit, as_all_suspect(enc_test))
            elif variant is Variant.BLACKBOX_CORRECTED:
                model = BaggedTrees(
                    n_trees=config.blackbox_trees,
                    max_depth=config.blackbox_depth,
                    min_leaf=config.blackbox_min_leaf,
                    seed=derive_seed(config.master_seed, rep, fold),
                ).fit(raw_features(enc_train), enc_train.y)
                bb_test = model.predict(raw_features(enc_test))
                train_aug = with_blackbox(
                    as_all_suspect(enc_train), model.oob_train_predictions()
                )
                fit = fit_total(train_aug)
                test_aug = with_blackbox(as_all_suspect(enc_test), bb_test)
                values = predict(fit, aligned_design(fit, test_aug), variant).values
                bb_pooled[test_idx] = bb_test
            else:
                fit = base_fit("declared", lambda d: d)
                values = predict(fit, aligned_design(fit, enc_test), variant).values
            pooled[variant.value][test_idx] = values

    y_biased = np.asarray(biased.columns[schema.response.name], dtype=float)
    return y_biased, pooled, bb_pooled


def kfold_validate(
    data: Dataset,
    schema: Schema,
    config: ExperimentConfig,
    bias: BiasSpec | None = None,
) -> ValidationTable:
    """Run the full protocol; returns repetition-averaged metrics.

    Per repetition and variant, the pooled held-out predictions are scored
    with: RMSE against the biased responses, RMSE against the raw
    responses, the group gap DS (a response-free quantity), and the
    impartiality score in the variant's own mode against the biased
    (training-distribution) responses.
    """
    if config.folds > data.n_rows:
        raise ContractError(
            f"{config.folds} folds exceed the {data.n_rows} available rows"
        )
    levels = collect_levels(data, schema)
    groups = group_rows(data, schema)
    pos_group, neg_group = _ds_group_pair(config, bias, groups)

    enc_full = encode(data, schema, levels=levels)
    roled = {
        "x": as_all_legitimate(enc_full),
        "w": as_all_suspect(enc_full),
        "declared": enc_full,
    }
    y_raw = enc_full.y

    def task(rep):
        return _run_repetition(data, schema, config, bias, levels, rep)

    threads = int(os.environ.get("IMPARTIAL_THREADS", "1") or "1")
    reps = range(config.repetitions)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, reps))
    else:
        results = [task(rep) for rep in reps]

    sums = {v.value: {m: 0.0 for m in METRIC_NAMES} for v in config.variants}
    for y_biased, pooled, bb_pooled in results:  # repetition order
        for variant in config.variants:
            values = pooled[variant.value]
            if variant is Variant.FEO:
                design = roled["x"]
            elif variant in (
                Variant.FSEO,
                Variant.CALDERS_BASELINE,
                Variant.BLACKBOX_CORRECTED,
            ):
                design = roled["w"]
            else:
                design = roled["declared"]
            if variant is Variant.BLACKBOX_CORRECTED:
                design = with_blackbox(design, bb_pooled)
            entry = sums[variant.value]
            entry["rmse_biased"] += rmse(values, y_biased)
            entry["rmse_raw"] += rmse(values, y_raw)
            entry["ds"] += discrimination_score(
                values, enc_full.s_group_labels, pos_group, neg_group
            )
            entry["is"] += impartiality_score(
                values, design, y_biased, _natural_mode(variant)
            )
    count = config.repetitions
    means = {
        vname: {m: s / count for m, s in metric_sums.items()}
        for vname, metric_sums in sums.items()
    }
    return ValidationTable(
        variants=tuple(v.value for v in config.variants),
        metrics=METRIC_NAMES,
        values=means,
    )
