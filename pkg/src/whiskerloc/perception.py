"""Histogram likelihood classification of deflection series.

Each location class stores, per sensor dimension (marker x/y) and per time
bin, a binned sampling distribution of training values with additive
smoothing. The likelihood of a test series is the product of the smoothed
bin frequencies of every test value over all dimensions and time bins,
computed in the log domain. Classification is maximum likelihood with
deterministic lowest-index tie breaking.

Bin edges are B uniform intervals per sensor dimension spanning the
training values padded by 5% of their span on each side; test values
outside the edges clamp to the boundary bins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from whiskerloc.errors import (
    InsufficientRunsError,
    InvalidConfigError,
    MissingClassError,
    ShapeMismatchError,
)
from whiskerloc.series import DeflectionSeries

EDGE_PAD_FRACTION = 0.05
DEFAULT_BINS = 100
DEFAULT_ALPHA = 1.0
DEFAULT_MC_SAMPLES = 10_000


@dataclass
class LocationClassSet:
    """Uniformly spaced location class labels along the traverse (mm)."""

    labels_mm: np.ndarray

    def __post_init__(self):
        self.labels_mm = np.asarray(self.labels_mm, dtype=float)
        if self.labels_mm.ndim != 1 or len(self.labels_mm) < 2:
            raise InvalidConfigError("need at least two location classes")
        steps = np.diff(self.labels_mm)
        if np.any(steps <= 0):
            raise InvalidConfigError("class labels must increase strictly")
        if np.ptp(steps) > 1e-9 * steps[0]:
            raise InvalidConfigError("class labels must be uniformly spaced")

    @property
    def n_classes(self) -> int:
        return len(self.labels_mm)

    @property
    def step_mm(self) -> float:
        return float(self.labels_mm[1] - self.labels_mm[0])

    def centre_label(self) -> float:
        """Label of class N/2, the fixation goal of the active policy."""
        return float(self.labels_mm[self.n_classes // 2])


def uniform_classes(range_mm: float, step_mm: float) -> LocationClassSet:
    """Cell-centred labels step/2, 3*step/2, ... covering [0, range]."""
    n = int(round(range_mm / step_mm))
    return LocationClassSet((np.arange(n) + 0.5) * step_mm)


@dataclass
class LikelihoodModel:
    """Per-class binned sampling distributions over dimension and time.

    counts has shape (classes, dims, time_bins, bins); the smoothed
    frequency of bin b is (counts + alpha) / (values_per_cell + bins*alpha),
    strictly positive so no likelihood is ever -inf.
    """

    class_labels_mm: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    values_per_cell: np.ndarray
    alpha: float
    time_pool: int
    n_frames: int
    n_markers: int
    kind: str = "unknown"
    motion: str = "unknown"

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def n_dims(self) -> int:
        return self.counts.shape[1]

    @property
    def n_bins(self) -> int:
        return self.counts.shape[3]

    def cell_distribution(self, class_index: int, dim: int, time_bin: int) -> np.ndarray:
        """Smoothed frequencies of one cell; sums to 1."""
        c = self.counts[class_index, dim, time_bin].astype(float)
        return (c + self.alpha) / (self.values_per_cell[class_index] + self.n_bins * self.alpha)

    def bin_values(self, values: np.ndarray) -> np.ndarray:
        """Bin indices of (..., dims, frames) values, clamped to the edge bins."""
        lo = self.bin_edges[:, 0][:, None]
        width = (self.bin_edges[:, -1] - self.bin_edges[:, 0])[:, None] / self.n_bins
        idx = np.floor((values - lo) / width).astype(np.int64)
        return np.clip(idx, 0, self.n_bins - 1)

    def _check_series(self, series: DeflectionSeries):
        if series.n_frames != self.n_frames or series.n_markers != self.n_markers:
            raise ShapeMismatchError(
                f"series shape ({series.n_frames} frames, {series.n_markers} markers) "
                f"does not match model ({self.n_frames}, {self.n_markers})"
            )

    def log_likelihoods(self, series: DeflectionSeries) -> np.ndarray:
        """Per-class log P(series | class)."""
        self._check_series(series)
        return self._log_likelihoods_binned(self.bin_values(series.values()))

    def _log_likelihoods_binned(self, bins: np.ndarray) -> np.ndarray:
        d_idx = np.arange(self.n_dims)[:, None]
        t_idx = (np.arange(self.n_frames) // self.time_pool)[None, :]
        gathered = self.counts[:, d_idx, t_idx, bins]
        loglik = np.log(gathered + self.alpha).sum(axis=(1, 2))
        denom = np.log(self.values_per_cell + self.n_bins * self.alpha)
        return loglik - self.n_dims * self.n_frames * denom


def log_likelihood(model: LikelihoodModel, series: DeflectionSeries, class_index: int) -> float:
    return float(model.log_likelihoods(series)[class_index])


@dataclass
class ClassifyResult:
    index: int
    label_mm: float
    tie: bool
    log_likelihoods: np.ndarray


def classify_ml(model: LikelihoodModel, series: DeflectionSeries) -> ClassifyResult:
    """Maximum-likelihood class; exact ties go to the lowest index."""
    ll = model.log_likelihoods(series)
    idx = int(np.argmax(ll))
    tie = bool(np.sum(ll == ll[idx]) > 1)
    return ClassifyResult(
        index=idx, label_mm=float(model.class_labels_mm[idx]), tie=tie, log_likelihoods=ll
    )


def _values_array(series_per_class) -> np.ndarray:
    """Stack per-class series lists into (classes, series, dims, frames)."""
    n_series = {len(lst) for lst in series_per_class}
    if 0 in n_series:
        raise MissingClassError("every class needs at least one training series")
    shapes = {s.disp.shape for lst in series_per_class for s in lst}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"training series shapes differ: {sorted(shapes)}")
    if len(n_series) != 1:
        raise ShapeMismatchError("every class must have the same number of series")
    return np.stack([np.stack([s.values() for s in lst]) for lst in series_per_class])


def _train_from_values(
    values: np.ndarray,
    class_labels: np.ndarray,
    bins: int,
    alpha: float,
    time_pool: int,
    kind: str,
    motion: str,
    n_markers: int,
) -> LikelihoodModel:
    n_classes, n_series, n_dims, n_frames = values.shape
    if n_frames % time_pool != 0:
        raise InvalidConfigError(
            f"time_pool {time_pool} must divide the frame count {n_frames}"
        )
    n_tbins = n_frames // time_pool

    flat = values.reshape(-1, n_dims, n_frames)
    lo = flat.min(axis=(0, 2)).astype(float)
    hi = flat.max(axis=(0, 2)).astype(float)
    span = hi - lo
    degenerate = span <= 0
    lo[degenerate] -= 0.5
    hi[degenerate] += 0.5
    lo[~degenerate] -= EDGE_PAD_FRACTION * span[~degenerate]
    hi[~degenerate] += EDGE_PAD_FRACTION * span[~degenerate]
    edges = np.linspace(lo, hi, bins + 1).T

    width = (hi - lo) / bins
    idx = np.floor((values - lo[None, None, :, None]) / width[None, None, :, None])
    idx = np.clip(idx.astype(np.int64), 0, bins - 1)

    t_of_frame = np.arange(n_frames) // time_pool
    counts = np.zeros((n_classes, n_dims, n_tbins, bins), dtype=np.int32)
    cell = (
        np.arange(n_dims)[:, None] * n_tbins + t_of_frame[None, :]
    ) * bins  # (dims, frames) base offset
    for c in range(n_classes):
        linear = (cell[None, :, :] + idx[c]).ravel()
        counts[c] = np.bincount(linear, minlength=n_dims * n_tbins * bins).reshape(
            n_dims, n_tbins, bins
        )
    return LikelihoodModel(
        class_labels_mm=np.asarray(class_labels, dtype=float),
        bin_edges=edges,
        counts=counts,
        values_per_cell=np.full(n_classes, n_series * time_pool, dtype=np.int64),
        alpha=alpha,
        time_pool=time_pool,
        n_frames=n_frames,
        n_markers=n_markers,
        kind=kind,
        motion=motion,
    )


def train_histogram_model(
    series_per_class,
    class_set: LocationClassSet,
    bins: int = DEFAULT_BINS,
    alpha: float = DEFAULT_ALPHA,
    time_pool: int = 1,
) -> LikelihoodModel:
    """Train the binned likelihood model from labelled series.

    ``series_per_class`` is a sequence over classes (in label order) of
    training series lists; all series must share one shape and every class
    must be present.
    """
    if len(series_per_class) != class_set.n_classes:
        raise MissingClassError(
            f"expected {class_set.n_classes} classes, got {len(series_per_class)}"
        )
    if bins < 1:
        raise InvalidConfigError("bins must be at least 1")
    if alpha <= 0:
        raise InvalidConfigError("smoothing alpha must be positive")
    values = _values_array(series_per_class)
    ref = series_per_class[0][0]
    return _train_from_values(
        values,
        class_set.labels_mm,
        bins,
        alpha,
        time_pool,
        kind=ref.meta.kind,
        motion=ref.meta.motion,
        n_markers=ref.n_markers,
    )


@dataclass
class PerceptionReport:
    """Monte Carlo cross-validation outcome.

    ``error_iqr_mm`` is the interquartile range of the signed localization
    error pooled over all samples; per-class percentiles describe the
    perceived-location distribution at each ground-truth class.
    """

    truth_mm: np.ndarray
    perceived_mm: np.ndarray
    class_labels_mm: np.ndarray
    per_class_q25: np.ndarray
    per_class_median: np.ndarray
    per_class_q75: np.ndarray
    error_iqr_mm: float
    n_samples: int
    seed: int

    @property
    def errors_mm(self) -> np.ndarray:
        return self.perceived_mm - self.truth_mm

    @property
    def median_abs_error_mm(self) -> float:
        return float(np.median(np.abs(self.errors_mm)))


def _report_from_outcomes(truth, perceived, labels, n_samples, seed) -> PerceptionReport:
    q25 = np.full(len(labels), np.nan)
    med = np.full(len(labels), np.nan)
    q75 = np.full(len(labels), np.nan)
    for i, lab in enumerate(labels):
        got = perceived[truth == lab]
        if len(got):
            q25[i], med[i], q75[i] = np.percentile(got, [25, 50, 75])
    err = perceived - truth
    iqr = float(np.percentile(err, 75) - np.percentile(err, 25))
    return PerceptionReport(
        truth_mm=truth,
        perceived_mm=perceived,
        class_labels_mm=np.asarray(labels, dtype=float),
        per_class_q25=q25,
        per_class_median=med,
        per_class_q75=q75,
        error_iqr_mm=iqr,
        n_samples=n_samples,
        seed=seed,
    )


def monte_carlo_cross_validate(
    runs,
    class_set: LocationClassSet,
    n_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    bins: int = DEFAULT_BINS,
    alpha: float = DEFAULT_ALPHA,
    time_pool: int = 1,
) -> PerceptionReport:
    """Monte Carlo cross-validation over repeated collection runs.

    ``runs`` is a sequence of runs, each a sequence of one series per class
    in label order. Every sample draws a training run and a distinct test
    run uniformly at random, trains on the training run (models are cached
    per run), and classifies the test series of a random class.
    """
    n_runs = len(runs)
    if n_runs < 2:
        raise InsufficientRunsError("cross-validation needs at least 2 runs")
    per_run = [_values_array([[s] for s in run]) for run in runs]  # (C,1,D,F) each
    labels = class_set.labels_mm
    n_classes = class_set.n_classes
    ref = runs[0][0]

    rng = np.random.default_rng(seed)
    train_r = rng.integers(0, n_runs, n_samples)
    test_r = (train_r + 1 + rng.integers(0, n_runs - 1, n_samples)) % n_runs
    test_c = rng.integers(0, n_classes, n_samples)

    models: dict[int, LikelihoodModel] = {}

    def model_for(r: int) -> LikelihoodModel:
        if r not in models:
            models[r] = _train_from_values(
                per_run[r], labels, bins, alpha, time_pool,
                kind=ref.meta.kind, motion=ref.meta.motion, n_markers=ref.n_markers,
            )
        return models[r]

    # classify each run's series once per training run, then map samples
    perceived_class = np.empty((n_runs, n_runs, n_classes), dtype=np.int64)
    perceived = np.empty(n_samples)
    for tr in range(n_runs):
        for te in range(n_runs):
            if tr == te or not np.any((train_r == tr) & (test_r == te)):
                continue
            model = model_for(tr)
            test_vals = per_run[te][:, 0]  # (C, D, F)
            bins_idx = model.bin_values(test_vals)
            d_idx = np.arange(model.n_dims)[None, :, None]
            t_idx = (np.arange(model.n_frames) // model.time_pool)[None, None, :]
            gathered = model.counts[:, d_idx, t_idx, bins_idx]  # (C_model, C_test, D, F)
            lls = np.log(gathered + model.alpha).sum(axis=(2, 3))
            denom = np.log(model.values_per_cell + model.n_bins * model.alpha)
            lls -= (model.n_dims * model.n_frames * denom)[:, None]
            perceived_class[tr, te] = lls.argmax(axis=0)
    for i in range(n_samples):
        perceived[i] = labels[perceived_class[train_r[i], test_r[i], test_c[i]]]
    truth = labels[test_c]
    return _report_from_outcomes(truth, perceived, labels, n_samples, seed)


MODEL_FORMAT_VERSION = 1


def save_model(path, model: LikelihoodModel) -> None:
    """Serialize a model losslessly to an .npz container."""
    meta = json.dumps(
        {
            "alpha": model.alpha,
            "time_pool": model.time_pool,
            "n_frames": model.n_frames,
            "n_markers": model.n_markers,
            "kind": model.kind,
            "motion": model.motion,
        },
        sort_keys=True,
    )
    np.savez(
        path,
        version=np.int64(MODEL_FORMAT_VERSION),
        class_labels_mm=model.class_labels_mm,
        bin_edges=model.bin_edges,
        counts=model.counts,
        values_per_cell=model.values_per_cell,
        meta=np.bytes_(meta.encode()),
    )


def load_model(path) -> LikelihoodModel:
    with np.load(path) as data:
        version = int(data["version"])
        if version != MODEL_FORMAT_VERSION:
            raise InvalidConfigError(f"unsupported model format version {version}")
        meta = json.loads(bytes(data["meta"]).decode())
        return LikelihoodModel(
            class_labels_mm=data["class_labels_mm"],
            bin_edges=data["bin_edges"],
            counts=data["counts"],
            values_per_cell=data["values_per_cell"],
            alpha=float(meta["alpha"]),
            time_pool=int(meta["time_pool"]),
            n_frames=int(meta["n_frames"]),
            n_markers=int(meta["n_markers"]),
            kind=meta["kind"],
            motion=meta["motion"],
        )
