"""Split fitted values into legally meaningful components.

Each mode decomposes the full-model fitted values into per-row columns
that sum back to them exactly:

- disparate treatment (dt): the sensitive block's contribution orthogonal
  to the conditioning covariates;
- disparate impact (di): the sensitive contribution lying inside their
  span (informative redlining);
- permissible statistical discrimination (sd_plus): the legitimate
  contribution explainable by the other blocks;
- sd_minus_mixed: the suspect contribution explainable by [S] (FSEO mode)
  or [X,S] (total mode, where legal and illegal shares are entangled);
- unique_x / unique_w: the orthogonal remainders.

Projections act on the centered blocks without an intercept column; the
intercept is its own component.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import EncodedDesign
from .errors import ContractError
from .estimators import TotalModelFit, _aligned_blocks
from .linalg import project


class Mode(enum.Enum):
    FEO = "feo"
    FSEO = "fseo"
    TOTAL = "total"


COMPONENT_NAMES = (
    "intercept",
    "dt",
    "di",
    "sd_plus",
    "sd_minus_mixed",
    "unique_x",
    "unique_w",
)


@dataclass(frozen=True)
class ComponentReport:
    mode: Mode
    intercept: np.ndarray
    dt: np.ndarray
    di: np.ndarray
    sd_plus: np.ndarray
    sd_minus_mixed: np.ndarray
    unique_x: np.ndarray
    unique_w: np.ndarray

    def component(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def rowwise_sum(self) -> np.ndarray:
        return sum(self.component(n) for n in COMPONENT_NAMES)

    def mean_abs(self) -> dict[str, float]:
        return {n: float(np.mean(np.abs(self.component(n)))) for n in COMPONENT_NAMES}


@dataclass(frozen=True)
class CoefDecomposition:
    """Eq-level split of the marginal legitimate coefficients."""

    marginal: np.ndarray
    direct: np.ndarray
    indirect: np.ndarray
    lambda_x: np.ndarray


@dataclass(frozen=True)
class RedliningSummary:
    """Mean absolute per-row component magnitudes."""

    disparate_treatment: float
    informative_redlining: float
    suspect_shared: float
    uninformative_redlining: float


def decompose_coefficients(
    fit: TotalModelFit, design: EncodedDesign
) -> CoefDecomposition:
    """marginal = direct + indirect split of the legitimate coefficients.

    Only defined when no suspect/black-box columns are present: the
    marginal coefficients come from the exclude-sensitive refit, the
    indirect part routes through the regression of S on X.
    """
    if fit.p_wb:
        raise ContractError(
            "coefficient decomposition requires empty suspect/black-box blocks"
        )
    if fit.p_x == 0:
        raise ContractError("no legitimate columns to decompose")
    del design  # only the fit's frozen regressions are needed
    direct = fit.beta_x
    indirect = fit.lambda_x_for_s @ fit.beta_s
    return CoefDecomposition(
        marginal=fit.marginal_coefs.copy(),
        direct=direct,
        indirect=indirect,
        lambda_x=fit.lambda_x_for_s,
    )


def decompose(
    fit: TotalModelFit, design: EncodedDesign, mode: Mode
) -> ComponentReport:
    """Per-row component columns for the requested mode.

    The block compatibility rules mirror the estimator variants: FEO mode
    needs empty suspect blocks, FSEO mode an empty legitimate block. The
    black-box block counts as suspect throughout.
    """
    s, x, w, b = _aligned_blocks(fit, design)
    wb = np.hstack([w, b])
    beta_wb = fit.beta_wb
    n = design.n_rows
    zero = np.zeros(n)
    intercept = np.full(n, fit.beta0)

    if mode is Mode.FEO:
        if wb.shape[1]:
            raise ContractError("FEO decomposition requires empty suspect blocks")
        s_split = project(x, s)
        x_split = project(s, x)
        return ComponentReport(
            mode=mode,
            intercept=intercept,
            di=s_split.projected @ fit.beta_s,
            dt=s_split.orthogonal @ fit.beta_s,
            sd_plus=x_split.projected @ fit.beta_x,
            unique_x=x_split.orthogonal @ fit.beta_x,
            sd_minus_mixed=zero,
            unique_w=zero.copy(),
        )

    if mode is Mode.FSEO:
        if x.shape[1]:
            raise ContractError("FSEO decomposition requires an empty legitimate block")
        s_split = project(wb, s)
        w_split = project(s, wb)
        return ComponentReport(
            mode=mode,
            intercept=intercept,
            di=s_split.projected @ fit.beta_s,
            dt=s_split.orthogonal @ fit.beta_s,
            sd_minus_mixed=w_split.projected @ beta_wb,
            unique_w=w_split.orthogonal @ beta_wb,
            sd_plus=zero,
            unique_x=zero.copy(),
        )

    if mode is Mode.TOTAL:
        s_split = project(np.hstack([x, wb]), s)
        x_split = project(np.hstack([s, wb]), x)
        w_split = project(np.hstack([x, s]), wb)
        return ComponentReport(
            mode=mode,
            intercept=intercept,
            di=s_split.projected @ fit.beta_s,
            dt=s_split.orthogonal @ fit.beta_s,
            sd_plus=x_split.projected @ fit.beta_x,
            unique_x=x_split.orthogonal @ fit.beta_x,
            sd_minus_mixed=w_split.projected @ beta_wb,
            unique_w=w_split.orthogonal @ beta_wb,
        )

    raise ContractError(f"unknown decomposition mode {mode!r}")


def redlining_report(report: ComponentReport) -> RedliningSummary:
    """Aggregate the discrimination channels of an FSEO/total report.

    Magnitudes are mean absolute per-row contributions; uninformative
    redlining is the di + sd_minus sum.
    """
    if report.mode is Mode.FEO:
        raise ContractError(
            "redlining report needs the suspect-shared component; "
            "FEO-mode reports do not define it"
        )
    di = float(np.mean(np.abs(report.di)))
    sd_minus = float(np.mean(np.abs(report.sd_minus_mixed)))
    return RedliningSummary(
        disparate_treatment=float(np.mean(np.abs(report.dt))),
        informative_redlining=di,
        suspect_shared=sd_minus,
        uninformative_redlining=di + sd_minus,
    )
