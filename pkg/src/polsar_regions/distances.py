"""Stochastic-distance test statistics between covariance estimates.

Five statistics contrast two scaled complex Wishart laws with the same,
known number of looks ``L``; a sixth contrasts two real Gaussian laws fitted
to amplitude vectors. Each is a symmetrized ``(h, phi)``-divergence between
the ML estimates, scaled so that under equality of the parameters it is
asymptotically chi-square with ``q**2`` (Wishart) or ``q(q+3)/2`` (Gaussian)
degrees of freedom.

The ``*_statistic`` functions are vectorized over leading batch axes and
return ``(values, valid)``; ``valid`` is ``False`` where a matrix involved
in the formula is singular. The ``stat_*`` functions are the checked scalar
front end returning a :class:`TestResult`.
"""

from dataclasses import dataclass
import enum
import math

import numpy as np
from scipy.special import gammaincc, gammaln

from . import config, linalg
from .errors import (
    BetaOutOfRangeError,
    DimensionMismatchError,
    DomainError,
    LooksMismatchError,
    NumericalError,
    SingularMatrixError,
)
from .wishart import CovarianceEstimate


class StatisticKind(str, enum.Enum):
    KULLBACK_LEIBLER = "kl"
    BHATTACHARYYA = "bhattacharyya"
    HELLINGER = "hellinger"
    RENYI = "renyi"
    CHI_SQUARE = "chi2"
    GAUSSIAN_BHATTACHARYYA = "gauss-bhattacharyya"

    @property
    def label(self):
        return _LABELS[self]

    @property
    def is_wishart(self):
        return self is not StatisticKind.GAUSSIAN_BHATTACHARYYA


_LABELS = {
    StatisticKind.KULLBACK_LEIBLER: "Kullback-Leibler",
    StatisticKind.BHATTACHARYYA: "Bhattacharyya",
    StatisticKind.HELLINGER: "Hellinger",
    StatisticKind.RENYI: "Renyi",
    StatisticKind.CHI_SQUARE: "Chi-square",
    StatisticKind.GAUSSIAN_BHATTACHARYYA: "Bhattacharyya (Gaussian)",
}

WISHART_KINDS = tuple(k for k in StatisticKind if k.is_wishart)
ALL_KINDS = tuple(StatisticKind)


def scale_constant(kind, beta=config.DEFAULT_BETA):
    """``h'(0) * phi''(1)`` for the divergence behind ``kind``.

    ========================  ==========================  ======
    divergence                h, phi                      const
    ========================  ==========================  ======
    Kullback-Leibler          y, x log x                  1
    Renyi (order beta)        log((b-1)y+1)/(b-1), ...    beta
    Hellinger                 y/2, (sqrt x - 1)^2         1/4
    Bhattacharyya             -log(1-y), -sqrt x+(x+1)/2  1/4
    chi-square                y/4, (x-1)^2 (x+1)/x        1
    ========================  ==========================  ======
    """
    kind = StatisticKind(kind)
    if kind is StatisticKind.RENYI:
        _check_beta(beta)
        return beta
    return {
        StatisticKind.KULLBACK_LEIBLER: 1.0,
        StatisticKind.BHATTACHARYYA: 0.25,
        StatisticKind.HELLINGER: 0.25,
        StatisticKind.CHI_SQUARE: 1.0,
        StatisticKind.GAUSSIAN_BHATTACHARYYA: 0.25,
    }[kind]


def degrees_of_freedom(kind, q):
    if StatisticKind(kind).is_wishart:
        return q * q
    return q * (q + 3) // 2


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise BetaOutOfRangeError(f"Renyi order must lie in (0, 1), got {beta}")


# --------------------------------------------------------------------------
# chi-square tail


def chi2_sf(x, dof):
    """Upper tail ``P(chi2_dof >= x)`` as the regularized gamma ``Q(dof/2, x/2)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("chi-square argument must be non-negative")
    out = gammaincc(dof / 2.0, x / 2.0)
    return out[()] if out.ndim == 0 else out


def _log_gammaincc_cf(a, x, iterations=200):
    # Lentz continued fraction for Q(a, x); accurate for x > a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, iterations + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return -x + a * np.log(x) - gammaln(a) + np.log(h)


def chi2_log10_sf(x, dof):
    """``log10 P(chi2_dof >= x)``, finite even where the tail underflows."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = dof / 2.0
    out = np.empty_like(x)
    direct = x <= config.LOG_PVALUE_THRESHOLD
    with np.errstate(divide="ignore"):
        out[direct] = np.log10(gammaincc(a, x[direct] / 2.0))
    tail = ~direct & np.isfinite(x)
    if np.any(tail):
        out[tail] = _log_gammaincc_cf(a, x[tail] / 2.0) / math.log(10.0)
    out[np.isposinf(x)] = -np.inf
    return out if out.size > 1 else out[0]


# --------------------------------------------------------------------------
# vectorized formulas


def _prefactor(m, n):
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    return m * n / (m + n)


def _safe_inverse(s):
    """Inverse with singular members replaced by identity; returns (inv, ok)."""
    ok = ~np.asarray(linalg.is_singular(s))
    eye = np.broadcast_to(np.eye(s.shape[-1], dtype=s.dtype), s.shape)
    s_safe = np.where(ok[..., None, None], s, eye)
    return linalg.hermitize(np.linalg.inv(s_safe)), ok


def _logdet(s):
    return linalg.logabsdet(s)


def _prepare(s1, s2):
    s1 = np.asarray(s1, dtype=np.complex128)
    s2 = np.asarray(s2, dtype=np.complex128)
    if s1.shape[-2:] != s2.shape[-2:]:
        raise DimensionMismatchError("covariance matrices differ in dimension")
    s1, s2 = np.broadcast_arrays(s1, s2)
    inv1, ok1 = _safe_inverse(s1)
    inv2, ok2 = _safe_inverse(s2)
    return s1, s2, inv1, inv2, ok1 & ok2


def kl_statistic(s1, s2, m, n, looks):
    s1, s2, inv1, inv2, ok = _prepare(s1, s2)
    q = s1.shape[-1]
    tr = linalg.trace(inv1 @ s2 + inv2 @ s1).real
    return 2 * _prefactor(m, n) * looks * (tr / 2 - q), ok


def _bhattacharyya_core(s1, s2, inv1, inv2):
    # L-free bracket: mean log|S_i| - log|((S1^-1 + S2^-1)/2)^-1|
    mid = (inv1 + inv2) / 2
    ok = ~np.asarray(linalg.is_singular(mid))
    return (_logdet(s1) + _logdet(s2)) / 2 + _logdet(mid), ok


def bhattacharyya_statistic(s1, s2, m, n, looks):
    s1, s2, inv1, inv2, ok = _prepare(s1, s2)
    core, ok_mid = _bhattacharyya_core(s1, s2, inv1, inv2)
    return 8 * _prefactor(m, n) * looks * core, ok & ok_mid


def hellinger_statistic(s1, s2, m, n, looks):
    s1, s2, inv1, inv2, ok = _prepare(s1, s2)
    core, ok_mid = _bhattacharyya_core(s1, s2, inv1, inv2)
    # affinity^L = exp(-L * core); 1 - affinity^L via expm1 keeps small values exact
    return 8 * _prefactor(m, n) * -np.expm1(-looks * core), ok & ok_mid


def renyi_statistic(s1, s2, m, n, looks, beta=config.DEFAULT_BETA):
    _check_beta(beta)
    s1, s2, inv1, inv2, ok = _prepare(s1, s2)
    ld1, ld2 = _logdet(s1), _logdet(s2)
    mix12 = beta * inv1 + (1 - beta) * inv2
    mix21 = beta * inv2 + (1 - beta) * inv1
    ok = ok & ~np.asarray(linalg.is_singular(mix12)) & ~np.asarray(linalg.is_singular(mix21))
    log_a = looks * (-beta * ld1 + (beta - 1) * ld2 - _logdet(mix12))
    log_b = looks * ((beta - 1) * ld1 - beta * ld2 - _logdet(mix21))
    hi = np.maximum(log_a, log_b)
    lo = np.minimum(log_a, log_b)
    # log((A + B) / 2) without cancelling against log 2
    log_half_sum = hi + np.log1p(np.expm1(lo - hi) / 2)
    bracket = -log_half_sum / (1 - beta)
    return 2 * _prefactor(m, n) / beta * bracket, ok


def chi_square_statistic(s1, s2, m, n, looks):
    s1, s2, inv1, inv2, ok = _prepare(s1, s2)
    ld1, ld2 = _logdet(s1), _logdet(s2)
    diff21 = 2 * inv2 - inv1
    diff12 = 2 * inv1 - inv2
    ok = ok & ~np.asarray(linalg.is_singular(diff21)) & ~np.asarray(linalg.is_singular(diff12))
    # |(2 S2^-1 - S1^-1)^-1| = 1 / |2 S2^-1 - S1^-1|, taken in absolute value
    log_t1 = looks * (ld1 - 2 * ld2 - _logdet(diff21))
    log_t2 = looks * (ld2 - 2 * ld1 - _logdet(diff12))
    with np.errstate(over="ignore"):
        bracket = np.exp(log_t1) + np.exp(log_t2) - 2
    return _prefactor(m, n) / 2 * bracket, ok


def gaussian_bhattacharyya_statistic(mu1, s1, mu2, s2, m, n):
    """Bhattacharyya statistic between real Gaussian laws ``N(mu, S)``."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    s1, s2 = np.broadcast_arrays(s1, s2)
    pooled = (s1 + s2) / 2
    ok = ~(np.asarray(linalg.is_singular(pooled))
           | np.asarray(linalg.is_singular(s1))
           | np.asarray(linalg.is_singular(s2)))
    eye = np.broadcast_to(np.eye(s1.shape[-1]), pooled.shape)
    pooled_safe = np.where(ok[..., None, None], pooled, eye)
    delta = mu1 - mu2
    maha = np.einsum("...i,...i->...", delta, np.linalg.solve(pooled_safe, delta[..., None])[..., 0])
    log_ratio = _logdet(pooled) - (_logdet(s1) + _logdet(s2)) / 2
    return _prefactor(m, n) * (maha + 4 * log_ratio), ok


_WISHART_FORMULAS = {
    StatisticKind.KULLBACK_LEIBLER: kl_statistic,
    StatisticKind.BHATTACHARYYA: bhattacharyya_statistic,
    StatisticKind.HELLINGER: hellinger_statistic,
    StatisticKind.CHI_SQUARE: chi_square_statistic,
}


def wishart_statistic(kind, s1, s2, m, n, looks, beta=config.DEFAULT_BETA):
    """Dispatch to the vectorized Wishart formula for ``kind``."""
    kind = StatisticKind(kind)
    if kind is StatisticKind.RENYI:
        return renyi_statistic(s1, s2, m, n, looks, beta)
    if kind not in _WISHART_FORMULAS:
        raise ValueError(f"{kind.value} is not a Wishart statistic")
    return _WISHART_FORMULAS[kind](s1, s2, m, n, looks)


def clamp_negative(values, slack=config.NEGATIVE_SLACK):
    """Zero out round-off negatives; returns (values, ok) with ok False below -slack."""
    values = np.asarray(values, dtype=float)
    ok = ~(values < -slack)
    return np.where((values < 0) & ok, 0.0, values), ok


# --------------------------------------------------------------------------
# scalar front end


@dataclass(frozen=True)
class TestResult:
    """One test of ``H0: theta_1 == theta_2``.

    ``m`` and ``n`` are kept so the balance of the two samples can be audited.
    """

    __test__ = False  # not a pytest class

    statistic: float
    p_value: float
    dof: int
    kind: StatisticKind
    log10_p: float = 0.0
    m: int = 0
    n: int = 0
    beta: float = None


@dataclass(frozen=True)
class GaussianEstimate:
    """ML mean and (1/N) covariance of real amplitude vectors."""

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    sample_size: int

    def __post_init__(self):
        mu = np.asarray(self.mu_hat, dtype=float)
        sigma = np.asarray(self.sigma_hat, dtype=float)
        if sigma.shape != (mu.size, mu.size):
            raise DimensionMismatchError("mean and covariance disagree on q")
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_hat", (sigma + sigma.T) / 2)
        object.__setattr__(self, "sample_size", int(self.sample_size))

    @property
    def q(self):
        return self.mu_hat.size


def gaussian_estimate(vectors):
    """Fit :class:`GaussianEstimate` to rows of ``vectors`` (shape ``(N, q)``)."""
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DomainError("need a non-empty (N, q) array")
    mu = x.mean(axis=0)
    centred = x - mu
    return GaussianEstimate(mu, centred.T @ centred / x.shape[0], x.shape[0])


def make_result(kind, statistic, m, n, q, beta=None):
    """Wrap a raw statistic: clamp round-off, attach p-value and log10 p."""
    kind = StatisticKind(kind)
    value, ok = clamp_negative(statistic)
    value = float(value)
    if not ok:
        raise NumericalError(f"{kind.value} statistic is negative ({float(statistic):.3e})")
    dof = degrees_of_freedom(kind, q)
    return TestResult(
        statistic=value,
        p_value=float(chi2_sf(value, dof)),
        dof=dof,
        kind=kind,
        log10_p=float(chi2_log10_sf(value, dof)),
        m=int(m),
        n=int(n),
        beta=beta if kind is StatisticKind.RENYI else None,
    )


def _wishart_pair(kind, a, b, beta=config.DEFAULT_BETA):
    if not isinstance(a, CovarianceEstimate) or not isinstance(b, CovarianceEstimate):
        raise TypeError("expected CovarianceEstimate arguments")
    if a.looks != b.looks:
        raise LooksMismatchError(f"looks differ: {a.looks} vs {b.looks}")
    if a.q != b.q:
        raise DimensionMismatchError("estimates differ in q")
    value, ok = wishart_statistic(kind, a.sigma_hat, b.sigma_hat, a.sample_size,
                                  b.sample_size, a.looks, beta)
    if not ok:
        raise SingularMatrixError(f"singular matrix in the {StatisticKind(kind).value} statistic")
    return make_result(kind, value, a.sample_size, b.sample_size, a.q, beta)


def stat_kl(a, b):
    return _wishart_pair(StatisticKind.KULLBACK_LEIBLER, a, b)


def stat_bhattacharyya(a, b):
    return _wishart_pair(StatisticKind.BHATTACHARYYA, a, b)


def stat_hellinger(a, b):
    return _wishart_pair(StatisticKind.HELLINGER, a, b)


def stat_renyi(a, b, beta=config.DEFAULT_BETA):
    _check_beta(beta)
    return _wishart_pair(StatisticKind.RENYI, a, b, beta)


def stat_chisquare(a, b):
    return _wishart_pair(StatisticKind.CHI_SQUARE, a, b)


def stat_gaussian_bhattacharyya(a, b):
    if a.q != b.q:
        raise DimensionMismatchError("estimates differ in q")
    value, ok = gaussian_bhattacharyya_statistic(
        a.mu_hat, a.sigma_hat, b.mu_hat, b.sigma_hat, a.sample_size, b.sample_size)
    if not ok:
        raise SingularMatrixError("singular covariance in the Gaussian statistic")
    return make_result(StatisticKind.GAUSSIAN_BHATTACHARYYA, value,
                       a.sample_size, b.sample_size, a.q)


def statistic(kind, a, b, beta=config.DEFAULT_BETA):
    """Compute any of the six statistics by kind."""
    kind = StatisticKind(kind)
    if kind is StatisticKind.GAUSSIAN_BHATTACHARYYA:
        return stat_gaussian_bhattacharyya(a, b)
    return _wishart_pair(kind, a, b, beta)


def distance_from_statistic(result, m=None, n=None):
    """Recover the symmetrized divergence from a test statistic.

    Inverts ``S = 2mn/(m+n) * d / (h'(0) phi''(1))``.
    """
    m = result.m if m is None else m
    n = result.n if n is None else n
    const = scale_constant(result.kind, result.beta or config.DEFAULT_BETA)
    return result.statistic * (m + n) / (2 * m * n) * const
