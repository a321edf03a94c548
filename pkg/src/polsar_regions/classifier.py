"""Region-based classification by minimum test statistic.

Each segment's ML estimate is contrasted with every class prototype; the
segment goes to the prototype with the smallest statistic and the chi-square
tail probability of that statistic is kept as a confidence value.
"""

from dataclasses import dataclass
import numpy as np

from . import config, linalg
from .distances import (
    StatisticKind,
    TestResult,
    chi2_log10_sf,
    chi2_sf,
    clamp_negative,
    degrees_of_freedom,
    gaussian_bhattacharyya_statistic,
    wishart_statistic,
)
from .errors import (
    DimensionMismatchError,
    DomainError,
    LooksMismatchError,
    MismatchedSegmentsError,
    NegativeIntensityError,
)

UNCLASSIFIED = -1

# reason codes for segments that could not be assigned
SINGULAR_ESTIMATE = "singular-estimate"
NO_VALID_STATISTIC = "no-valid-statistic"

_CHUNK = 16384


@dataclass(frozen=True)
class SegmentMap:
    """Partition of an image into segments ``0..r-1``; ``-1`` marks masked pixels."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or not np.issubdtype(labels.dtype, np.integer):
            raise DomainError("segment labels must be a 2-D integer array")
        labels = labels.astype(np.int32, copy=False)
        if np.any(labels < -1):
            raise DomainError("segment labels must be >= -1")
        used = np.unique(labels[labels >= 0])
        if used.size and (used[0] != 0 or used[-1] != used.size - 1):
            raise DomainError("segment ids must form the contiguous range 0..r-1")
        object.__setattr__(self, "labels", labels)

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def n_segments(self):
        return int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0

    def sizes(self):
        valid = self.labels[self.labels >= 0]
        return np.bincount(valid, minlength=self.n_segments)

    def paint(self, per_segment, fill=UNCLASSIFIED):
        """Broadcast a per-segment array back onto the pixel grid."""
        per_segment = np.asarray(per_segment)
        out = np.full(self.labels.shape + per_segment.shape[1:], fill, dtype=per_segment.dtype)
        mask = self.labels >= 0
        out[mask] = per_segment[self.labels[mask]]
        return out


def grid_segment(width, height, tile):
    """Regular ``tile x tile`` grid, row-major ids; edge tiles are truncated."""
    if tile < 1:
        raise DomainError("tile must be >= 1")
    rows = np.arange(height) // tile
    cols = np.arange(width) // tile
    per_row = -(-width // tile)
    return SegmentMap((rows[:, None] * per_row + cols[None, :]).astype(np.int32))


def amplitudes(raster):
    """Per-pixel amplitude vector: square roots of the diagonal intensities."""
    intensity = np.diagonal(np.asarray(raster), axis1=-2, axis2=-1).real
    if np.any(intensity < 0):
        raise NegativeIntensityError("negative intensity on a covariance diagonal")
    return np.sqrt(intensity)


def _bincount_mean(labels, values, r):
    """Per-segment mean of ``values`` (pixels along axis 0); float or complex."""
    counts = np.bincount(labels, minlength=r).astype(float)
    flat = values.reshape(values.shape[0], -1)
    out = np.empty((r, flat.shape[1]), dtype=flat.dtype)
    for j in range(flat.shape[1]):
        col = flat[:, j]
        if np.iscomplexobj(col):
            out[:, j] = (np.bincount(labels, col.real, r) + 1j * np.bincount(labels, col.imag, r)) / counts
        else:
            out[:, j] = np.bincount(labels, col, r) / counts
    return out.reshape((r,) + values.shape[1:])


def _flatten(raster, segmap):
    raster = np.asarray(raster)
    if raster.shape[:2] != segmap.labels.shape:
        raise DimensionMismatchError(
            f"raster is {raster.shape[:2]} but the segment map is {segmap.labels.shape}")
    mask = segmap.labels >= 0
    return segmap.labels[mask], raster[mask]


def segment_covariances(raster, segmap):
    """ML covariance (pixel mean) and pixel count of every segment."""
    labels, pixels = _flatten(raster, segmap)
    r = segmap.n_segments
    sigma = linalg.hermitize(_bincount_mean(labels, pixels, r))
    return sigma, np.bincount(labels, minlength=r)


def segment_gaussians(amplitudes, segmap):
    """ML mean and 1/N covariance of amplitude vectors in every segment."""
    labels, x = _flatten(amplitudes, segmap)
    r = segmap.n_segments
    mu = _bincount_mean(labels, x, r)
    centred = x - mu[labels]
    outer = centred[:, :, None] * centred[:, None, :]
    cov = _bincount_mean(labels, outer, r)
    return mu, (cov + np.swapaxes(cov, -1, -2)) / 2, np.bincount(labels, minlength=r)


@dataclass(frozen=True)
class SegmentAssignment:
    segment_id: int
    class_index: int
    winning: TestResult
    all_stats: tuple
    reason: str = ""


@dataclass
class ClassificationResult:
    """Per-segment outcome of one statistic kind, stored column-wise.

    ``statistics`` and ``p_values`` are ``(r, k)``; entries whose statistic
    is undefined (singular matrix, negative value) hold ``inf`` and ``0``.
    ``assigned`` is ``-1`` for unclassified segments, with ``reasons`` saying why.
    """

    kind: StatisticKind
    class_names: list
    statistics: np.ndarray
    p_values: np.ndarray
    assigned: np.ndarray
    reasons: list
    segment_sizes: np.ndarray
    prototype_sizes: np.ndarray
    dof: int
    beta: float = None

    @property
    def n_segments(self):
        return self.statistics.shape[0]

    @property
    def classified(self):
        return self.assigned >= 0

    def _pick(self, table, fill):
        idx = np.where(self.classified, self.assigned, 0)
        picked = table[np.arange(self.n_segments), idx]
        return np.where(self.classified, picked, fill)

    @property
    def winning_statistic(self):
        return self._pick(self.statistics, np.nan)

    @property
    def winning_p_value(self):
        return self._pick(self.p_values, 0.0)

    @property
    def winning_log10_p(self):
        stat = self.winning_statistic
        out = np.full(stat.shape, -np.inf)
        ok = self.classified
        if np.any(ok):
            out[ok] = np.atleast_1d(chi2_log10_sf(stat[ok], self.dof))
        return out

    def assignments(self):
        """Materialize one :class:`SegmentAssignment` per segment."""
        log10 = np.reshape(chi2_log10_sf(self.statistics.ravel(), self.dof), self.statistics.shape)
        out = []
        for i in range(self.n_segments):
            tests = tuple(
                TestResult(float(s), float(p), self.dof, self.kind, float(lp),
                           int(self.segment_sizes[i]), int(n), self.beta)
                for s, p, lp, n in zip(self.statistics[i], self.p_values[i], log10[i],
                                       self.prototype_sizes)
            )
            c = int(self.assigned[i])
            out.append(SegmentAssignment(i, c, tests[c] if c >= 0 else None, tests, self.reasons[i]))
        return out

    def class_raster(self, segmap):
        """Class index per pixel (``-1`` for masked or unclassified)."""
        return segmap.paint(self.assigned.astype(np.int32))


def _finish(kind, values, ok, seg_ok, names, m, n, dof, beta):
    values, nonneg = clamp_negative(values)
    ok = ok & nonneg & ~np.isnan(values)
    values = np.where(ok, values, np.inf)
    p = np.where(ok, chi2_sf(np.where(ok, values, 0.0), dof), 0.0)
    assigned = np.argmin(values, axis=1)  # first minimum: lowest class index wins ties
    has_valid = np.isfinite(values).any(axis=1)
    reasons = [""] * values.shape[0]
    for i in np.flatnonzero(~seg_ok):
        reasons[i] = SINGULAR_ESTIMATE
    for i in np.flatnonzero(seg_ok & ~has_valid):
        reasons[i] = NO_VALID_STATISTIC
    assigned = np.where(seg_ok & has_valid, assigned, UNCLASSIFIED)
    return ClassificationResult(kind, list(names), values, p, assigned, reasons,
                                np.asarray(m), np.asarray(n), dof,
                                beta if kind is StatisticKind.RENYI else None)


def classify_segments(raster, segmap, prototypes, kind, beta=config.DEFAULT_BETA, looks=None):
    """Assign every segment to the prototype minimizing the ``kind`` statistic.

    Parameters
    ----------
    raster : ndarray, shape (H, W, q, q)
        Multilook covariance image.
    segmap : SegmentMap
    prototypes : PrototypeSet
    kind : StatisticKind or str
    beta : float
        Renyi order, ignored by the other statistics.
    looks : float, optional
        Number of looks of ``raster``; must match the prototypes when given.

    The sample sizes entering each statistic are the segment pixel count
    (``m``) and the prototype training size (``n``). Segments whose estimate is
    singular come back unclassified instead of aborting the run.
    """
    kind = StatisticKind(kind)
    if looks is not None and looks != prototypes.looks:
        raise LooksMismatchError(f"raster has {looks} looks, prototypes {prototypes.looks}")
    if np.shape(raster)[-1] != prototypes.q:
        raise DimensionMismatchError("raster and prototypes differ in q")
    q = prototypes.q
    dof = degrees_of_freedom(kind, q)
    n = np.array([e.wishart.sample_size for e in prototypes])

    if kind.is_wishart:
        seg, m = segment_covariances(raster, segmap)
        protos = np.stack([e.wishart.sigma_hat for e in prototypes])
        seg_ok = ~linalg.is_singular(seg)
        compute = lambda sl: wishart_statistic(
            kind, seg[sl, None], protos[None], m[sl, None], n[None], prototypes.looks, beta)
    else:
        if not prototypes.has_gaussian:
            raise DomainError("prototypes carry no Gaussian amplitude estimates")
        n = np.array([e.gaussian.sample_size for e in prototypes])
        mu, cov, m = segment_gaussians(amplitudes(raster), segmap)
        p_mu = np.stack([e.gaussian.mu_hat for e in prototypes])
        p_cov = np.stack([e.gaussian.sigma_hat for e in prototypes])
        seg_ok = ~linalg.is_singular(cov)
        compute = lambda sl: gaussian_bhattacharyya_statistic(
            mu[sl, None], cov[sl, None], p_mu[None], p_cov[None], m[sl, None], n[None])

    r = segmap.n_segments
    values = np.empty((r, len(prototypes)))
    ok = np.empty((r, len(prototypes)), dtype=bool)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for start in range(0, r, _CHUNK):
            sl = slice(start, min(start + _CHUNK, r))
            values[sl], ok[sl] = compute(sl)
    ok &= seg_ok[:, None]
    return _finish(kind, values, ok, seg_ok, prototypes.names, m, n, dof, beta)


# --------------------------------------------------------------------------
# fusion and fuzzy sets


@dataclass(frozen=True)
class FusedAssignment:
    segment_id: int
    votes: tuple
    winner: int


def fuse_majority(results):
    """Majority vote across statistic kinds.

    ``results`` maps kind to :class:`ClassificationResult` (a sequence is also
    accepted). Unclassified votes are ignored. A tie goes to the class picked
    by the Bhattacharyya statistic when it is among the tied classes, else to
    the lowest tied class index.
    """
    if isinstance(results, dict):
        items = list(results.values())
    else:
        items = list(results)
    if not items:
        raise MismatchedSegmentsError("nothing to fuse")
    r = items[0].n_segments
    if any(res.n_segments != r for res in items):
        raise MismatchedSegmentsError("classifications cover different segments")
    if any(res.class_names != items[0].class_names for res in items):
        raise MismatchedSegmentsError("classifications use different class lists")
    k = len(items[0].class_names)
    votes = np.stack([res.assigned for res in items], axis=1)
    referee = next((res.assigned for res in items if res.kind is StatisticKind.BHATTACHARYYA), None)

    fused = []
    for i in range(r):
        row = votes[i]
        counts = np.bincount(row[row >= 0], minlength=k)
        if counts.sum() == 0:
            winner = UNCLASSIFIED
        else:
            tied = np.flatnonzero(counts == counts.max())
            if len(tied) > 1 and referee is not None and referee[i] in tied:
                winner = int(referee[i])
            else:
                winner = int(tied[0])
        fused.append(FusedAssignment(i, tuple(int(v) for v in row), winner))
    return fused


def fuzzy_assign(stats, threshold):
    """Indices of every class whose p-value reaches ``threshold``.

    ``stats`` is a per-class sequence of :class:`TestResult` or of p-values.
    """
    if not 0.0 < threshold < 1.0:
        raise DomainError("threshold must lie in (0, 1)")
    p = [s.p_value if isinstance(s, TestResult) else float(s) for s in stats]
    return {i for i, value in enumerate(p) if value >= threshold}
