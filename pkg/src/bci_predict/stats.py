"""Statistical layer: Pearson correlation with exact two-tailed p-values,
linear regression with leave-one-subject-out error, and paired sign-flip
permutation tests with Bonferroni correction.

p-values come from the exact Student-t tail via the regularized incomplete
beta function, matching tabulated values to three decimals. The permutation
null enumerates all 2^n sign patterns when n <= 12 and otherwise draws
10000 seeded random patterns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .classify import SpellerResult
from .errors import (
    ConstantInput,
    LengthMismatch,
    ShapeMismatch,
    SubjectMismatch,
    TooFewSubjects,
)
from .features import BandFeatureTable

EXHAUSTIVE_MAX_SUBJECTS = 12
DEFAULT_PERMUTATIONS = 10000


def pearson(x, y) -> float:
    """Sample Pearson product-moment correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape} differ")
    if len(x) < 3:
        raise LengthMismatch(f"need at least 3 samples, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt((dx ** 2).sum())
    sy = np.sqrt((dy ** 2).sum())
    if sx == 0 or sy == 0:
        raise ConstantInput("correlation of a constant input is undefined")
    return float((dx @ dy) / (sx * sy))


def p_from_r(r: float, n: int) -> float:
    """Two-tailed p-value of a correlation under the exact t distribution.

    t = r*sqrt(n-2)/sqrt(1-r^2) with n-2 degrees of freedom; the tail mass is
    the regularized incomplete beta I_{nu/(nu+t^2)}(nu/2, 1/2). |r| = 1 has no
    finite t and maps to p = 0 with a warning.
    """
    if n < 3:
        raise LengthMismatch(f"need at least 3 samples, got {n}")
    if abs(r) >= 1.0:
        warnings.warn("degenerate |r| >= 1, returning p = 0", stacklevel=2)
        return 0.0
    nu = n - 2
    t2 = r * r * nu / (1.0 - r * r)
    return float(special.betainc(nu / 2.0, 0.5, nu / (nu + t2)))


@dataclass(frozen=True)
class CorrelationResult:
    feature_kind: str  # "psd" | "plv"
    region_or_pair: str
    band: str
    r: float
    p: float
    n: int


def max_accuracy(result: SpellerResult) -> float:
    """A subject's performance: best selection accuracy over sequence counts."""
    return max(result.accuracy_by_sequence)


def correlate_features(features: list[BandFeatureTable],
                       performance: list[SpellerResult]) -> list[CorrelationResult]:
    """Correlate every predictor cell with per-subject peak accuracy.

    Subjects are matched by id; output is sorted by ascending p-value (ties
    by feature order). Raises ConstantInput when performance does not vary.
    """
    if len(features) < 3:
        raise TooFewSubjects(f"need at least 3 subjects, got {len(features)}")
    feat_by_subject = {t.subject_id: t for t in features}
    perf_by_subject = {res.subject_id: res for res in performance}
    if set(feat_by_subject) != set(perf_by_subject):
        raise SubjectMismatch(
            f"feature subjects {sorted(feat_by_subject)} != "
            f"performance subjects {sorted(perf_by_subject)}"
        )
    subjects = sorted(feat_by_subject)
    y = np.array([max_accuracy(perf_by_subject[s]) for s in subjects])
    if np.all(y == y[0]):
        raise ConstantInput("performance identical across subjects")
    first = feat_by_subject[subjects[0]]
    results = []
    for kind, cells in (("psd", first.psd), ("plv", first.plv)):
        for key in cells:
            values = np.array([
                getattr(feat_by_subject[s], kind)[key] for s in subjects
            ])
            if np.all(values == values[0]):
                continue  # constant predictor cell carries no information
            r = pearson(values, y)
            results.append(CorrelationResult(
                feature_kind=kind,
                region_or_pair=key[0],
                band=key[1],
                r=r,
                p=p_from_r(r, len(subjects)),
                n=len(subjects),
            ))
    return sorted(results, key=lambda c: c.p)


@dataclass(frozen=True)
class RegressionModel:
    predictor_ids: tuple[str, ...]
    coefficients: np.ndarray  # one per predictor, in standardized units
    intercept: float
    predictor_mean: np.ndarray
    predictor_sd: np.ndarray
    mse_loocv: float
    mse_insample: float
    degenerate: bool  # predictors >= subjects - 1: in-sample fit interpolates

    def predict(self, X: np.ndarray) -> np.ndarray:
        z = (np.atleast_2d(X) - self.predictor_mean) / self.predictor_sd
        return z @ self.coefficients + self.intercept


def _ols(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares coefficients [b, w...] via SVD; minimum-norm if rank-deficient."""
    design = np.hstack([np.ones((len(y), 1)), z])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef


def fit_predictor(X: np.ndarray, y: np.ndarray,
                  predictor_ids: tuple[str, ...] | None = None) -> RegressionModel:
    """Ordinary least squares of performance on standardized predictors.

    ``y`` is expected on the percent scale so the reported mean squared
    errors are comparable across cohorts. ``mse_loocv`` is the mean squared
    leave-one-subject-out prediction error; ``mse_insample`` the residual
    mean square of the full fit.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if len(y) != n:
        raise LengthMismatch(f"{n} predictor rows but {len(y)} responses")
    if n < 3:
        raise TooFewSubjects(f"need at least 3 subjects, got {n}")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    z = (X - mean) / sd
    coef = _ols(z, y)
    residual = y - (z @ coef[1:] + coef[0])
    loo_errors = np.empty(n)
    for i in range(n):
        keep = np.arange(n) != i
        coef_i = _ols(z[keep], y[keep])
        loo_errors[i] = y[i] - (z[i] @ coef_i[1:] + coef_i[0])
    return RegressionModel(
        predictor_ids=predictor_ids or tuple(f"x{j}" for j in range(k)),
        coefficients=coef[1:],
        intercept=float(coef[0]),
        predictor_mean=mean,
        predictor_sd=sd,
        mse_loocv=float(np.mean(loo_errors ** 2)),
        mse_insample=float(np.mean(residual ** 2)),
        degenerate=k >= n - 1,
    )


@dataclass(frozen=True)
class PermutationResult:
    statistic: np.ndarray  # mean paired difference per bin
    raw_p: np.ndarray
    significant: np.ndarray  # Bonferroni mask: raw_p <= alpha / n_bins
    n_permutations: int


def _sign_patterns(n: int, rng: np.random.Generator | None,
                   n_permutations: int) -> np.ndarray:
    if n <= EXHAUSTIVE_MAX_SUBJECTS:
        bits = np.arange(2 ** n, dtype=np.uint32)
        signs = ((bits[:, None] >> np.arange(n)) & 1).astype(np.float64)
        return 2.0 * signs - 1.0
    if rng is None:
        rng = np.random.default_rng(0)
    return rng.choice([-1.0, 1.0], size=(n_permutations, n))


def paired_permutation(a: np.ndarray, b: np.ndarray, alpha: float = 0.05,
                       n_permutations: int = DEFAULT_PERMUTATIONS,
                       rng: np.random.Generator | None = None) -> PermutationResult:
    """Paired sign-flip permutation test per bin, Bonferroni-corrected.

    The statistic is the subject-mean of a - b per bin. Sign patterns are
    exhaustive for n <= 12 subjects and seeded random draws otherwise; the
    raw p is the fraction of flipped statistics at least as extreme as the
    observed one (floored at 1/n_permutations for random draws).
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    n, n_bins = a.shape
    if n < 2:
        raise ShapeMismatch(f"need at least 2 subjects, got {n}")
    diff = a - b
    observed = diff.mean(axis=0)
    signs = _sign_patterns(n, rng, n_permutations)
    null = signs @ diff / n  # (n_permutations, n_bins)
    # tiny tolerance keeps the identity pattern counted despite roundoff
    extreme = np.abs(null) >= np.abs(observed)[None, :] - 1e-12
    raw_p = np.maximum(extreme.sum(axis=0), 1) / len(signs)
    return PermutationResult(
        statistic=observed,
        raw_p=raw_p,
        significant=raw_p <= alpha / n_bins,
        n_permutations=len(signs),
    )
