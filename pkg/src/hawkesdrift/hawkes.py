"""Multivariate linear Hawkes processes with exponential kernels.

Component ``j`` has conditional intensity

    lambda_j(t) = xi_j + (lambda0_j - xi_j) exp(-alpha t)
                  + sum_i sum_{T_k^i < t} c[i, j] exp(-alpha (t - T_k^i))

so ``c[i, j]`` is the jump added to component ``j`` by an event of
component ``i``. Simulation uses Ogata thinning with the current total
intensity as the (locally valid) upper bound.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

POWER_ITER_RTOL = 1e-12
POWER_ITER_MAXITER = 10_000


class HawkesValidationError(ValueError):
    """Base class for rejected Hawkes parameters."""


class NonPositiveBaselineError(HawkesValidationError):
    pass


class NegativeExcitationError(HawkesValidationError):
    pass


class NonPositiveDecayError(HawkesValidationError):
    pass


class UnstableBranchingError(HawkesValidationError):
    pass


class EventLogError(ValueError):
    pass


def spectral_radius(h: np.ndarray) -> float:
    """Perron root of a nonnegative square matrix by power iteration.

    Iterates on ``h + I`` (same Perron vector, root shifted by one), which is
    aperiodic, so the iteration converges even for periodic patterns such as
    ``[[0, a], [b, 0]]``. Stops once the Collatz-Wielandt bounds agree to
    ``POWER_ITER_RTOL``, which bounds the actual error rather than the step.
    """
    h = np.asarray(h, dtype=float)
    m = h.shape[0]
    shifted = np.abs(h) + np.eye(m)
    v = np.full(m, 1.0 / m)
    for _ in range(POWER_ITER_MAXITER):
        w = shifted @ v
        # Collatz-Wielandt bracket: min(w / v) <= root <= max(w / v) while v > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = w / v
        low, high = ratios.min(), ratios.max()
        v = w / w.sum()
        if high - low <= POWER_ITER_RTOL * high:
            estimate = 0.5 * (low + high)
            break
    else:
        # reducible or defective h: the bracket need not close
        logger.debug("power iteration hit the cap; using a dense eigenvalue solve")
        return float(np.max(np.abs(np.linalg.eigvals(h))))
    return max(estimate - 1.0, 0.0)


def validate(params) -> float:
    """Check the parameter assumptions and return the spectral radius of ``c / alpha``.

    Raises a distinct :class:`HawkesValidationError` subclass for each
    violated assumption.
    """
    xi = np.asarray(params.xi, dtype=float)
    c = np.asarray(params.c, dtype=float)
    alpha = float(params.alpha)
    if xi.ndim != 1 or xi.size == 0:
        raise HawkesValidationError("xi must be a non-empty vector")
    if c.shape != (xi.size, xi.size):
        raise HawkesValidationError(
            f"excitation matrix must be {xi.size}x{xi.size}, got shape {c.shape}"
        )
    if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(c)) and np.isfinite(alpha)):
        raise HawkesValidationError("parameters must be finite")
    if np.any(xi <= 0):
        raise NonPositiveBaselineError("positive baseline: every xi_j must be > 0")
    if np.any(c < 0):
        raise NegativeExcitationError(
            "nonnegative excitation: every c[i, j] must be >= 0"
        )
    if alpha <= 0:
        raise NonPositiveDecayError("positive decay: alpha must be > 0")
    rho = spectral_radius(c / alpha)
    if rho >= 1:
        raise UnstableBranchingError(
            f"stationarity: spectral radius of c/alpha is {rho:.6g} (must be < 1)"
        )
    return rho


@dataclass(frozen=True, eq=False)
class HawkesParams:
    """Baselines ``xi``, excitation matrix ``c`` and decay ``alpha``.

    Construction validates; an invalid set of parameters never exists.
    """

    xi: np.ndarray
    c: np.ndarray
    alpha: float
    spectral_radius: float = field(init=False, compare=False)

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        c = np.array(self.c, dtype=float)
        xi.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "spectral_radius", validate(self))
        if np.any(c > self.alpha):
            warnings.warn(
                "some c[i, j] exceed alpha; the increment moment bound assumes alpha >= c[i, j]",
                stacklevel=2,
            )

    def __eq__(self, other):
        if not isinstance(other, HawkesParams):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and np.array_equal(self.xi, other.xi)
            and np.array_equal(self.c, other.c)
        )

    def __hash__(self):
        return hash((self.alpha, self.xi.tobytes(), self.c.tobytes(), self.c.shape))

    @property
    def dim(self) -> int:
        return self.xi.size

    @property
    def branching_matrix(self) -> np.ndarray:
        return self.c / self.alpha

    @classmethod
    def reference(cls) -> "HawkesParams":
        """The two-component setting used in the Monte-Carlo study."""
        return cls(xi=[0.5, 0.5], c=[[0.2, 0.3], [0.5, 0.4]], alpha=5.0)

    def to_dict(self) -> dict:
        return {"xi": self.xi.tolist(), "c": self.c.tolist(), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesParams":
        return cls(xi=d["xi"], c=d["c"], alpha=d["alpha"])


@dataclass(frozen=True)
class EventLog:
    """Per-component sorted jump times on ``(0, horizon]``."""

    horizon: float
    events: tuple

    def __post_init__(self):
        horizon = float(self.horizon)
        if not horizon >= 0:
            raise EventLogError("horizon must be >= 0")
        events = []
        for times in self.events:
            arr = np.array(times, dtype=float).reshape(-1)
            if arr.size:
                if np.any(np.diff(arr) <= 0):
                    raise EventLogError("event times must be strictly increasing")
                if arr[0] <= 0 or arr[-1] > horizon:
                    raise EventLogError("event times must lie in (0, horizon]")
            arr.setflags(write=False)
            events.append(arr)
        merged = np.concatenate(events) if events else np.empty(0)
        if np.unique(merged).size != merged.size:
            raise EventLogError("two components share an event time")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "events", tuple(events))

    @property
    def dim(self) -> int:
        return len(self.events)

    def counts(self) -> np.ndarray:
        return np.array([e.size for e in self.events], dtype=int)

    def all_times(self) -> np.ndarray:
        """Times of the aggregate process, sorted."""
        if not self.events:
            return np.empty(0)
        return np.sort(np.concatenate(self.events))

    def bin_counts(self, delta: float, n: int) -> np.ndarray:
        """Total number of events of all components in each ``(k delta, (k+1) delta]``."""
        edges = np.arange(n + 1) * delta
        cum = np.searchsorted(self.all_times(), edges, side="right")
        return np.diff(cum)

    def to_json(self) -> str:
        return json.dumps(
            {"horizon": self.horizon, "events": [e.tolist() for e in self.events]}
        )

    @classmethod
    def from_json(cls, text: str) -> "EventLog":
        d = json.loads(text)
        return cls(horizon=d["horizon"], events=tuple(d["events"]))

    def to_csv(self) -> str:
        """Two columns ``component,time`` sorted by time; components are 0-based."""
        rows = [(t, j) for j, e in enumerate(self.events) for t in e.tolist()]
        rows.sort()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["component", "time"])
        for t, j in rows:
            writer.writerow([j, repr(t)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, horizon: float, dim: int) -> "EventLog":
        reader = csv.DictReader(io.StringIO(text))
        events = [[] for _ in range(dim)]
        for row in reader:
            events[int(row["component"])].append(float(row["time"]))
        return cls(horizon=horizon, events=tuple(events))


@dataclass(frozen=True)
class IntensityState:
    t: float
    intensity: np.ndarray


def _initial(params: HawkesParams, lambda0) -> np.ndarray:
    if lambda0 is None:
        return params.xi.copy()
    lam0 = np.asarray(lambda0, dtype=float)
    if lam0.shape != params.xi.shape:
        raise ValueError("lambda0 must have one entry per component")
    if np.any(lam0 < params.xi):
        raise ValueError("initial intensities must be >= the baselines xi")
    return lam0


def intensity_at(
    params: HawkesParams, log: EventLog, t: float, lambda0=None
) -> np.ndarray:
    """Left-continuous intensity vector at time ``t`` (events at exactly ``t`` excluded)."""
    if not 0 <= t <= log.horizon:
        raise ValueError(f"t={t} outside [0, {log.horizon}]")
    lam0 = _initial(params, lambda0)
    lam = params.xi + (lam0 - params.xi) * np.exp(-params.alpha * t)
    for i, times in enumerate(log.events):
        past = times[times < t]
        if past.size:
            lam = lam + params.c[i] * np.exp(-params.alpha * (t - past)).sum()
    return lam


def intensity_state(params: HawkesParams, log: EventLog, t: float, lambda0=None) -> IntensityState:
    return IntensityState(t=t, intensity=intensity_at(params, log, t, lambda0))


def compensator(params: HawkesParams, log: EventLog, t: float, lambda0=None) -> np.ndarray:
    """Integrated intensity ``int_0^t lambda_s ds`` for every component, closed form."""
    if not 0 <= t <= log.horizon:
        raise ValueError(f"t={t} outside [0, {log.horizon}]")
    alpha = params.alpha
    lam0 = _initial(params, lambda0)
    total = params.xi * t + (lam0 - params.xi) * (-np.expm1(-alpha * t)) / alpha
    for i, times in enumerate(log.events):
        past = times[times < t]
        if past.size:
            total = total + params.c[i] * (-np.expm1(-alpha * (t - past))).sum() / alpha
    return total


def time_rescaling_residuals(params: HawkesParams, log: EventLog, lambda0=None) -> list:
    """Compensator increments between successive events of each component.

    For a log simulated under ``params`` these are i.i.d. Exp(1).
    """
    if log.dim != params.dim:
        raise ValueError("event log and parameters disagree on the dimension")
    lam0 = _initial(params, lambda0)
    alpha = params.alpha
    # Walk the aggregate event sequence, integrating the intensity between events.
    times = log.all_times()
    owner = np.empty(times.size, dtype=int)
    for j, e in enumerate(log.events):
        owner[np.searchsorted(times, e)] = j
    lam = lam0.copy()
    cum = np.zeros(params.dim)
    last = [0.0] * params.dim
    residuals = [[] for _ in range(params.dim)]
    t = 0.0
    for s, j in zip(times.tolist(), owner.tolist()):
        dt = s - t
        excess = lam - params.xi
        cum += params.xi * dt + excess * (-np.expm1(-alpha * dt)) / alpha
        lam = params.xi + excess * np.exp(-alpha * dt)
        residuals[j].append(cum[j] - last[j])
        last[j] = cum[j]
        lam = lam + params.c[j]
        t = s
    return [np.array(r) for r in residuals]


def expected_rate(params: HawkesParams) -> np.ndarray:
    """Stationary mean intensity.

    ``c[i, j]`` feeds component ``j`` from events of ``i``, so the mean rate
    solves ``x = xi + H^T x``, i.e. ``x = (I - H^T)^{-1} xi``.
    """
    h = params.branching_matrix
    system = np.eye(params.dim) - h.T
    try:
        x = np.linalg.solve(system, params.xi)
    except np.linalg.LinAlgError as exc:
        raise UnstableBranchingError("I - c/alpha is singular") from exc
    residual = np.max(np.abs(system @ x - params.xi))
    if residual > 1e-10:
        raise UnstableBranchingError(f"linear solve residual {residual:.3g} too large")
    return x


def simulate(
    params: HawkesParams,
    horizon: float,
    lambda0: Sequence[float] | None = None,
    seed=None,
) -> EventLog:
    """Ogata thinning on ``[0, horizon]``.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    Between events the intensities only decay, so the total intensity just
    after the current time bounds the total intensity until the next event.
    """
    if not isinstance(params, HawkesParams):
        raise TypeError("params must be a validated HawkesParams")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    rng = np.random.default_rng(seed)
    xi = params.xi.tolist()
    c = params.c.tolist()
    alpha = params.alpha
    dim = params.dim
    lam = _initial(params, lambda0).tolist()
    events = [[] for _ in range(dim)]
    t = 0.0
    last_event = 0.0
    while True:
        bound = sum(lam)
        t_new = t + rng.exponential(1.0 / bound)
        if t_new > horizon:
            break
        decay = np.exp(-alpha * (t_new - t))
        lam = [x + (l - x) * decay for x, l in zip(xi, lam)]
        total = sum(lam)
        t = t_new
        if rng.random() * bound > total:
            continue
        # pick the component proportionally to its share of the intensity
        u = rng.random() * total
        j = 0
        acc = lam[0]
        while u >= acc and j < dim - 1:
            j += 1
            acc += lam[j]
        if t <= last_event:
            t = np.nextafter(last_event, np.inf)
            logger.warning("thinning proposed a tied event time; moved by one ulp to %r", t)
            if t > horizon:
                break
        events[j].append(t)
        last_event = t
        row = c[j]
        lam = [l + row[k] for k, l in enumerate(lam)]
    return EventLog(horizon=horizon, events=tuple(events))
