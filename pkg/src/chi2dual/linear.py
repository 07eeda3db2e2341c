"""Hypothesis test for a finite set of linear moment constraints.

Under the null (all constraint moments correct) n * chi2_n follows a
chi-square law with k degrees of freedom, so the test rejects for large
values of the scaled quadratic form.  Away from the null the estimate is
asymptotically normal around the population divergence; that normal
confidence interval is attached as a diagnostic, never used for the
decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .core import (
    ConstraintFamily,
    Sample,
    dual_coefficients,
    h1_variance,
    moment_vectors,
)
from .errors import InvalidInput, InvalidLevel

CHI_SQUARED = "chi_squared"
STD_NORMAL = "std_normal"


def chi2_cdf(x: float, k: int) -> float:
    """Chi-square CDF via the regularized lower incomplete gamma function."""
    if k < 1:
        raise InvalidInput(f"degrees of freedom must be >= 1, got {k}")
    if not np.isfinite(x):
        raise InvalidInput("chi2_cdf argument must be finite")
    if x <= 0.0:
        return 0.0
    return float(scipy.special.gammainc(k / 2.0, x / 2.0))


def chi2_sf(x: float, k: int) -> float:
    """Upper tail of the chi-square law (complement computed directly)."""
    if k < 1:
        raise InvalidInput(f"degrees of freedom must be >= 1, got {k}")
    if x <= 0.0:
        return 1.0
    return float(scipy.special.gammaincc(k / 2.0, x / 2.0))


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the error function."""
    if not np.isfinite(z):
        raise InvalidInput("normal_cdf argument must be finite")
    return float(scipy.special.ndtr(z))


def normal_quantile(p: float) -> float:
    """Standard normal quantile (inverse of normal_cdf)."""
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"quantile probability must be in (0, 1), got {p}")
    return float(scipy.special.ndtri(p))


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test.

    ``df_or_sd`` is the degrees of freedom for chi-square reference laws and
    the standard deviation (1.0) for the standard normal law.  ``reject`` is
    always the strict comparison p_value < alpha.
    """

    statistic: float
    df_or_sd: float
    reference_law: str
    p_value: float
    alpha: float
    reject: bool
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        """Wire format with the documented field names and order."""
        return {
            "statistic": self.statistic,
            "reference_law": self.reference_law,
            "df": self.df_or_sd,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TestReport":
        return cls(
            statistic=float(payload["statistic"]),
            df_or_sd=float(payload["df"]),
            reference_law=str(payload["reference_law"]),
            p_value=float(payload["p_value"]),
            alpha=float(payload["alpha"]),
            reject=bool(payload["reject"]),
            diagnostics=dict(payload["diagnostics"]),
        )


def _check_level(alpha: float) -> float:
    if not (np.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise InvalidLevel(f"test level must lie in (0, 1), got {alpha}")
    return float(alpha)


def test_linear(sample: Sample, fam: ConstraintFamily, alpha: float) -> TestReport:
    """Test whether the sampling law satisfies all constraint moments.

    The statistic is n * chi2_n with an upper-tail chi-square(k) p-value.
    Diagnostics carry the dual condition number and a (1 - alpha) normal
    interval for the population divergence based on the plug-in variance,
    which is informative only away from the null.
    """
    alpha = _check_level(alpha)
    mv = moment_vectors(sample, fam)
    dual = dual_coefficients(mv)
    statistic = sample.n * dual.chi2_value
    p_value = chi2_sf(statistic, fam.k)
    variance = h1_variance(sample, dual, fam)
    half_width = normal_quantile(1.0 - alpha / 2.0) * np.sqrt(
        max(variance, 0.0) / sample.n
    )
    diagnostics = {
        "condition_number": dual.condition_number,
        "k": float(fam.k),
        "n": float(sample.n),
        "chi2_value": dual.chi2_value,
        "h1_variance": variance,
        "h1_ci_low": dual.chi2_value - half_width,
        "h1_ci_high": dual.chi2_value + half_width,
    }
    return TestReport(
        statistic=float(statistic),
        df_or_sd=float(fam.k),
        reference_law=CHI_SQUARED,
        p_value=p_value,
        alpha=alpha,
        reject=p_value < alpha,
        diagnostics=diagnostics,
    )
