"""Accuracy assessment and map rendering.

Kappa and its large-sample variance follow the delta-method estimator of
Congalton & Green (Assessing the Accuracy of Remotely Sensed Data). With
``n`` the total count, ``n_ii`` the diagonal, ``n_i+`` row sums and ``n_+i``
column sums::

    t1 = sum_i n_ii / n
    t2 = sum_i n_i+ n_+i / n^2
    t3 = sum_i n_ii (n_i+ + n_+i) / n^2
    t4 = sum_ij n_ij (n_j+ + n_+i)^2 / n^3

    kappa = (t1 - t2) / (1 - t2)
    var   = 1/n * [ t1 (1 - t1) / (1 - t2)^2
                  + 2 (1 - t1) (2 t1 t2 - t3) / (1 - t2)^3
                  + (1 - t1)^2 (t4 - 4 t2^2) / (1 - t2)^4 ]
"""

import colorsys
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import ndtr

from .classifier import UNCLASSIFIED
from .errors import (
    DegenerateMarginalsError,
    DimensionMismatchError,
    DomainError,
    PaletteMissingClassError,
    ZeroVarianceError,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i, j]`` = pixels of true class ``j`` assigned class ``i``."""

    counts: np.ndarray
    unclassified: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DimensionMismatchError("confusion matrix must be square")
        if np.any(counts < 0):
            raise DomainError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def row_totals(self):
        return self.counts.sum(axis=1)

    @property
    def col_totals(self):
        return self.counts.sum(axis=0)

    @property
    def overall_accuracy(self):
        if self.total == 0:
            raise DomainError("empty confusion matrix")
        return np.trace(self.counts) / self.total


def confusion(predicted, truth, k=None, mask=None):
    """Pixel-wise confusion matrix.

    Pixels are skipped where ``mask`` is False or ``truth`` is negative.
    Unclassified predictions (``-1``) are counted separately and left out of
    the matrix.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise DimensionMismatchError(f"predicted {predicted.shape} vs truth {truth.shape}")
    keep = truth >= 0
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != truth.shape:
            raise DimensionMismatchError("mask shape differs from the label rasters")
        keep &= mask
    if k is None:
        k = int(max(predicted.max(initial=-1), truth.max(initial=-1))) + 1
    pred, true = predicted[keep], truth[keep]
    if np.any(pred >= k) or np.any(true >= k):
        raise DomainError(f"labels must lie in 0..{k - 1}")
    unclassified = int(np.count_nonzero(pred == UNCLASSIFIED))
    ok = pred >= 0
    counts = np.bincount(pred[ok] * k + true[ok], minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts, unclassified)


@dataclass(frozen=True)
class KappaReport:
    overall_accuracy: float
    kappa_hat: float
    variance: float
    total: int = 0


def kappa(cm):
    """Kappa coefficient of agreement with its delta-method variance."""
    counts = cm.counts.astype(float)
    n = counts.sum()
    if n <= 0:
        raise DomainError("empty confusion matrix")
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    t1 = np.trace(counts) / n
    t2 = float(rows @ cols) / n**2
    if math.isclose(t2, 1.0, rel_tol=0.0, abs_tol=1e-15):
        raise DegenerateMarginalsError("chance agreement is 1; kappa undefined")
    t3 = float(np.diag(counts) @ (rows + cols)) / n**2
    # weight for cell (i, j): (n_j+ + n_+i)^2
    w = (rows[None, :] + cols[:, None]) ** 2
    t4 = float(np.sum(counts * w)) / n**3
    k = (t1 - t2) / (1 - t2)
    var = (
        t1 * (1 - t1) / (1 - t2) ** 2
        + 2 * (1 - t1) * (2 * t1 * t2 - t3) / (1 - t2) ** 3
        + (1 - t1) ** 2 * (t4 - 4 * t2**2) / (1 - t2) ** 4
    ) / n
    return KappaReport(float(t1), float(k), max(float(var), 0.0), int(n))


def kappa_equality_test(a, b):
    """Two-sided z-test of equal kappa for independent classifications.

    Returns ``(z, p_value)``.
    """
    if a.variance <= 0 or b.variance <= 0:
        raise ZeroVarianceError("kappa variances must be positive")
    z = (a.kappa_hat - b.kappa_hat) / math.sqrt(a.variance + b.variance)
    return z, float(2 * ndtr(-abs(z)))


def rejection_rate(result, alpha=0.05):
    """Fraction of classified segments whose winning p-value is at least ``alpha``.

    Despite the name this is the *non*-rejection share tabulated per run; the
    rejection rate is one minus this value.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    ok = result.classified
    if not np.any(ok):
        return 0.0
    return float(np.mean(result.winning_p_value[ok] >= alpha))


def accuracy_report(result, segmap, truth, mask=None):
    """Confusion matrix and kappa for a classification against truth labels."""
    predicted = result.class_raster(segmap)
    cm = confusion(predicted, truth, k=len(result.class_names), mask=mask)
    return cm, kappa(cm)


# --------------------------------------------------------------------------
# rendering

DEFAULT_PALETTE = {
    "River": (0, 0, 255),
    "Caatinga": (0, 128, 0),
    "Prepared Soil": (160, 82, 45),
    "Soybean 1": (255, 255, 0),
    "Soybean 2": (255, 165, 0),
    "Soybean 3": (255, 0, 255),
    "Tillage": (128, 128, 128),
    "Corn 1": (0, 255, 255),
    "Corn 2": (255, 0, 0),
    "Unclassified": (0, 0, 0),
}


def palette_for(names, base=DEFAULT_PALETTE):
    """Palette covering ``names``; classes missing from ``base`` get a hue ramp."""
    out = {"Unclassified": tuple(base.get("Unclassified", (0, 0, 0)))}
    spare = [n for n in names if n not in base]
    for name in names:
        if name in base:
            out[name] = tuple(base[name])
        else:
            hue = spare.index(name) / len(spare)
            out[name] = tuple(int(255 * c) for c in colorsys.hsv_to_rgb(hue, 0.8, 0.9))
    return out


def render_class_map(result, segmap, palette):
    """RGB ``uint8`` image, each pixel coloured by its segment's class."""
    names = list(result.class_names) + ["Unclassified"]
    missing = [n for n in names if n not in palette]
    if missing:
        raise PaletteMissingClassError(f"palette lacks {missing}")
    lut = np.array([palette[n] for n in names], dtype=np.uint8)
    idx = result.class_raster(segmap)
    idx = np.where(idx >= 0, idx, len(names) - 1)
    return lut[idx]


def render_labels(labels, names, palette):
    """RGB image of a label raster (e.g. ground truth); ``-1`` is drawn as Unclassified."""
    all_names = list(names) + ["Unclassified"]
    lut = np.array([palette[n] for n in all_names], dtype=np.uint8)
    labels = np.asarray(labels)
    return lut[np.where(labels >= 0, labels, len(all_names) - 1)]


def render_pvalue_map(result, segmap, alpha=0.05):
    """``uint8`` raster: 255 where the assignment is not rejected at ``alpha``, else 0."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    accepted = result.classified & (result.winning_p_value >= alpha)
    return segmap.paint(np.where(accepted, 255, 0).astype(np.uint8), fill=0)
