"""Penalized least-squares drift estimation on nested trigonometric spaces.

From the path we form ``Y_k = (X_{(k+1)d} - X_{kd}) / d`` and remove the jump
contribution ``a(X_{kd}) * (#events in (kd, (k+1)d]) / d`` to get the
response ``U_k``. For each ``m`` the drift is estimated by least squares of
``U`` on the first ``2m+1`` trigonometric basis functions, restricted to samples inside
the interval; the dimension is chosen by minimizing
``contrast(m) + rho * sigma_1^2 * (2m+1) / (n d)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .basis import TrigBasis, dimension
from .hawkes import EventLog
from .sde import ModelSpec, SamplePath

# Relative singular-value cutoff shared by the solver and its oracle.
RCOND = 1e-10


class EmptyFitError(ValueError):
    """No sample falls inside the estimation interval."""


class MissingEventsError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionSamples:
    """Vectorized regression pairs ``(X_{kd}, U_{kd})`` for ``k = 0..n-1``."""

    x: np.ndarray
    y: np.ndarray
    jump_term: np.ndarray
    in_a: np.ndarray
    delta: float

    @property
    def u(self) -> np.ndarray:
        return self.y - self.jump_term

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def n_in_a(self) -> int:
        return int(np.count_nonzero(self.in_a))


def build_samples(
    path: SamplePath,
    model: ModelSpec,
    basis: TrigBasis,
    log: Optional[EventLog] = None,
) -> RegressionSamples:
    """Jump-corrected increments from a path and its event log.

    ``log`` defaults to the events attached to ``path``. A model without a
    jump term needs no log.
    """
    log = path.events if log is None else log
    delta = path.delta
    n = path.n
    values = path.values
    x = values[:-1].copy()
    y = np.diff(values) / delta
    if log is None:
        if model.has_jumps:
            raise MissingEventsError(
                f"{model.name} has a jump term; the jump record is needed to form U"
            )
        counts = np.zeros(n)
    else:
        if not math.isclose(log.horizon, path.horizon, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"event horizon {log.horizon} does not match path horizon {path.horizon}"
            )
        counts = log.bin_counts(delta, n).astype(float)
    jump_term = np.zeros(n)
    hit = counts > 0
    if np.any(hit):
        jump_term[hit] = np.array([model.jump(v) for v in x[hit]]) * counts[hit] / delta
    return RegressionSamples(x=x, y=y, jump_term=jump_term, in_a=basis.contains(x), delta=delta)


@dataclass(frozen=True)
class FitResult:
    m: int
    coefficients: np.ndarray
    fitted: np.ndarray
    contrast: float
    rank: int


def least_squares(design: np.ndarray, response: np.ndarray):
    """Minimal-norm least squares by complete orthogonal factorization (LAPACK ``gelsy``)."""
    coef, _, rank, _ = scipy.linalg.lstsq(
        design, response, cond=RCOND, lapack_driver="gelsy", check_finite=False
    )
    return coef, int(rank)


def _fit_design(design_a: np.ndarray, u_a: np.ndarray, m: int) -> FitResult:
    coef, rank = least_squares(design_a, u_a)
    fitted = design_a @ coef
    contrast = float(np.mean((u_a - fitted) ** 2))
    return FitResult(m=m, coefficients=coef, fitted=fitted, contrast=contrast, rank=rank)


def fit(samples: RegressionSamples, basis: TrigBasis, m: int) -> FitResult:
    """Least-squares estimator on ``S_m``; ``fitted`` covers the in-interval samples only."""
    if samples.n_in_a == 0:
        raise EmptyFitError("no sample lies inside the estimation interval")
    design = basis.design_matrix(m, samples.x[samples.in_a])
    return _fit_design(design, samples.u[samples.in_a], m)


def penalty(m: int, rho: float, sigma_max: float, n: int, delta: float) -> float:
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if m < 0 or sigma_max <= 0 or n <= 0 or delta <= 0:
        raise ValueError("m must be >= 0 and sigma_max, n, delta must be > 0")
    return rho * sigma_max**2 * dimension(m) / (n * delta)


def dimension_cap(n: int, delta: float) -> int:
    """Largest ``m`` (at least 1) with ``2m + 1 <= sqrt(n delta) / ln(n)``."""
    bound = math.sqrt(n * delta) / math.log(n)
    return max(1, int(math.floor((bound - 1) / 2)))


@dataclass
class DriftEstimate:
    """Selected estimator plus the full table of per-dimension criteria."""

    interval: tuple
    m_hat: int
    coefficients: np.ndarray
    table: list
    metadata: dict = field(default_factory=dict)
    kind: str = "cosine"

    @property
    def basis(self) -> TrigBasis:
        return TrigBasis(self.interval[0], self.interval[1], max_m=self.m_hat, kind=self.kind)

    @property
    def dimension(self) -> int:
        return dimension(self.m_hat)

    def evaluate(self, x):
        """Estimated drift; zero outside the interval. Scalar in, scalar out."""
        arr = np.asarray(x, dtype=float)
        vals = self.basis.design_matrix(self.m_hat, arr.reshape(-1)) @ self.coefficients
        return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)

    def to_dict(self) -> dict:
        return {
            "interval": list(self.interval),
            "basis": self.kind,
            "m_hat": self.m_hat,
            "dimension": self.dimension,
            "coefficients": np.asarray(self.coefficients).tolist(),
            "table": self.table,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DriftEstimate":
        d = json.loads(text)
        return cls(
            interval=tuple(d["interval"]),
            m_hat=d["m_hat"],
            coefficients=np.array(d["coefficients"], dtype=float),
            table=d["table"],
            metadata=d.get("metadata", {}),
            kind=d.get("basis", "cosine"),
        )


def select(
    samples: RegressionSamples,
    basis: TrigBasis,
    sigma_max: float,
    m_max: int = 20,
    rho: float = 3.0,
    n: Optional[int] = None,
    delta: Optional[float] = None,
    cap_dimension: bool = False,
) -> DriftEstimate:
    """Fit ``m = 1..m_max`` and keep the minimizer of contrast plus penalty.

    Ties go to the smallest ``m``. With ``cap_dimension`` the collection is
    further limited by :func:`dimension_cap`.
    """
    n = samples.n if n is None else n
    delta = samples.delta if delta is None else delta
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    m_max = min(m_max, basis.max_m)
    if cap_dimension:
        m_max = min(m_max, dimension_cap(n, delta))
    if samples.n_in_a == 0:
        raise EmptyFitError("no sample lies inside the estimation interval")
    full = basis.design_matrix(m_max, samples.x[samples.in_a])
    u_a = samples.u[samples.in_a]
    table = []
    fits = {}
    for m in range(1, m_max + 1):
        result = _fit_design(full[:, : dimension(m)], u_a, m)
        pen = penalty(m, rho, sigma_max, n, delta)
        fits[m] = result
        table.append(
            {
                "m": m,
                "dimension": dimension(m),
                "contrast": result.contrast,
                "penalty": pen,
                "criterion": result.contrast + pen,
            }
        )
    criteria = np.array([row["criterion"] for row in table])
    m_hat = int(np.argmin(criteria)) + 1  # argmin returns the first minimizer
    return DriftEstimate(
        interval=basis.interval,
        m_hat=m_hat,
        coefficients=fits[m_hat].coefficients,
        table=table,
        metadata={
            "n": n,
            "delta": delta,
            "rho": rho,
            "sigma_max": sigma_max,
            "m_max": m_max,
            "n_in_interval": samples.n_in_a,
        },
        kind=basis.kind,
    )


def empirical_risk(
    estimate: DriftEstimate,
    truth: Callable[[float], float],
    samples: RegressionSamples,
    normalize: str = "in_interval",
) -> float:
    """Mean squared error between estimate and truth over in-interval sample points.

    ``normalize="all"`` divides by the total number of samples instead; both
    functions are taken as zero outside the interval, so nothing else changes.
    """
    if samples.n_in_a == 0:
        raise EmptyFitError("no sample lies inside the estimation interval")
    xs = samples.x[samples.in_a]
    err = estimate.evaluate(xs) - np.array([truth(v) for v in xs])
    total = float(np.sum(err**2))
    if normalize == "in_interval":
        return total / xs.size
    if normalize == "all":
        return total / samples.n
    raise ValueError(f"unknown normalization {normalize!r}")
