"""Euler scheme for diffusions with Hawkes-driven jumps.

    dX_t = b(X_t) dt + sigma(X_t) dW_t + a(X_{t-}) sum_j dN^j_t

The Hawkes events are simulated first; Euler steps then run on the merged
grid of regular fine times and event times, and only the regular
observation times are kept.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import hawkes
from .hawkes import EventLog, HawkesParams

BOUND_CHECK_GRID = np.arange(-10_000, 10_001) * 1e-3


class UnknownModelError(KeyError):
    pass


class ExplosionError(RuntimeError):
    """Raised when a simulated path leaves ``[-bound, bound]``."""

    def __init__(self, time: float, value: float, bound: float):
        super().__init__(f"path exploded at t={time!r} (|X|={abs(value):.3g} > {bound:g})")
        self.time = time
        self.value = value
        self.bound = bound


@dataclass(frozen=True)
class ModelSpec:
    """Coefficient functions of the SDE plus the known bounds sigma_1 and a_1.

    ``a_max`` is ``None`` when the jump coefficient is unbounded; the
    explosion threshold then plays that role.
    """

    name: str
    drift: Callable[[float], float]
    diffusion: Callable[[float], float]
    jump: Callable[[float], float]
    sigma_max: float
    a_max: Optional[float] = None
    ergodic: bool = True
    has_jumps: bool = field(init=False, compare=False)

    def __post_init__(self):
        if not self.sigma_max > 0:
            raise ValueError("sigma_max must be > 0")
        sig = np.array([self.diffusion(x) for x in BOUND_CHECK_GRID], dtype=float)
        jmp = np.array([self.jump(x) for x in BOUND_CHECK_GRID], dtype=float)
        if np.max(np.abs(sig)) > self.sigma_max * (1 + 1e-12):
            raise ValueError(f"{self.name}: sigma exceeds sigma_max on [-10, 10]")
        if self.a_max is not None and np.max(np.abs(jmp)) > self.a_max * (1 + 1e-12):
            raise ValueError(f"{self.name}: |a| exceeds a_max on [-10, 10]")
        object.__setattr__(self, "has_jumps", bool(np.any(jmp != 0)))

    def drift_values(self, x) -> np.ndarray:
        return np.array([self.drift(v) for v in np.asarray(x, dtype=float).ravel()])


def _neg2x(x):
    return -2.0 * x


def _one(x):
    return 1.0


def _capped_abs(x):
    return min(abs(x), 5.0)


def _double_cubic(x):
    return -((x - 0.25) ** 3) - (x + 0.25) ** 3


def _ou_sine(x):
    return -2.0 * x + math.sin(3.0 * x)


def _rational_sigma(x):
    return math.sqrt((3.0 + x * x) / (1.0 + x * x))


def _linear_jump(x):
    return 0.2 * x


def builtin_models() -> dict:
    """The four benchmark models, keyed ``model1`` to ``model4``."""
    return {
        "model1": ModelSpec("model1", _neg2x, _one, _capped_abs, sigma_max=1.0, a_max=5.0),
        "model2": ModelSpec(
            "model2", _double_cubic, _one, _capped_abs, sigma_max=1.0, a_max=5.0, ergodic=False
        ),
        "model3": ModelSpec(
            "model3", _ou_sine, _rational_sigma, _capped_abs, sigma_max=math.sqrt(3.0), a_max=5.0
        ),
        "model4": ModelSpec("model4", _neg2x, _one, _linear_jump, sigma_max=1.0, a_max=None),
    }


_MODELS = builtin_models()


def get_model(name: str) -> ModelSpec:
    key = str(name).lower().replace(" ", "").replace("_", "")
    if key.isdigit():
        key = "model" + key
    try:
        return _MODELS[key]
    except KeyError:
        raise UnknownModelError(f"unknown model {name!r}; known: {sorted(_MODELS)}") from None


@dataclass(frozen=True)
class SimConfig:
    n: int
    delta: float
    substeps: int = 5
    x0: float = 0.0
    seed: int = 0
    explosion_bound: float = 1e6

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if int(self.substeps) < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def horizon(self) -> float:
        return self.n * self.delta


@dataclass(frozen=True)
class SamplePath:
    """Observations ``X_0, X_delta, ..., X_{n delta}`` and the events behind them."""

    delta: float
    values: np.ndarray
    events: Optional[EventLog] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a path needs at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def horizon(self) -> float:
        return self.n * self.delta

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "t", "X"])
        for k, x in enumerate(self.values.tolist()):
            writer.writerow([k, repr(k * self.delta), repr(x)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, events: Optional[EventLog] = None) -> "SamplePath":
        rows = list(csv.DictReader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("path CSV needs at least two rows")
        delta = float(rows[1]["t"]) - float(rows[0]["t"])
        values = [float(r["X"]) for r in rows]
        return cls(delta=delta, values=values, events=events)

    def to_json(self) -> str:
        return json.dumps({"delta": self.delta, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str, events: Optional[EventLog] = None) -> "SamplePath":
        d = json.loads(text)
        return cls(delta=d["delta"], values=d["values"], events=events)


def merged_grid(n: int, delta: float, substeps: int, jump_times: np.ndarray):
    """Sorted union of the fine Euler grid and the jump times.

    Returns ``(times, is_jump, observed)`` where ``observed`` holds the
    indices of the regular observation times ``k delta`` in ``times``.
    A jump falling exactly on a fine grid time is merged into that node.
    """
    fine_idx = np.arange(n * substeps + 1)
    fine = fine_idx * (delta / substeps)
    fine[::substeps] = np.arange(n + 1) * delta
    jumps = np.asarray(jump_times, dtype=float)
    pos = np.searchsorted(fine, jumps)
    on_grid = (pos < fine.size) & (fine[np.minimum(pos, fine.size - 1)] == jumps)
    extra = jumps[~on_grid]
    times = np.concatenate([fine, extra])
    is_jump = np.zeros(times.size, dtype=bool)
    is_jump[pos[on_grid]] = True
    is_jump[fine.size:] = True
    order = np.argsort(times, kind="stable")
    times = times[order]
    is_jump = is_jump[order]
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    observed = rank[fine_idx[::substeps]]
    return times, is_jump, observed


def euler_on_grid(
    model: ModelSpec,
    times: np.ndarray,
    is_jump: np.ndarray,
    normals: np.ndarray,
    x0: float,
    explosion_bound: float = math.inf,
) -> np.ndarray:
    """Explicit Euler-Maruyama with left-point coefficients on an irregular grid.

    Step ``k`` adds ``a(X_{t_{k-1}})`` when ``t_k`` is a jump time.
    """
    b, s, a = model.drift, model.diffusion, model.jump
    dts = np.diff(times)
    dt_list = dts.tolist()
    noise = (np.sqrt(dts) * normals).tolist()
    jumps = is_jump[1:].tolist()
    out = [float(x0)]
    x = float(x0)
    for k in range(len(dt_list)):
        prev = x
        x = prev + dt_list[k] * b(prev) + noise[k] * s(prev)
        if jumps[k]:
            x += a(prev)
        if not abs(x) <= explosion_bound:
            raise ExplosionError(float(times[k + 1]), x, explosion_bound)
        out.append(x)
    return np.array(out)


def substreams(seed, count: int) -> list:
    """Independent child seed sequences, without mutating a passed-in ``SeedSequence``."""
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [
        np.random.SeedSequence(base.entropy, spawn_key=base.spawn_key + (i,), pool_size=base.pool_size)
        for i in range(count)
    ]


def simulate_path(model: ModelSpec, params: HawkesParams, config: SimConfig) -> SamplePath:
    """Simulate the Hawkes events, then the Euler path on the merged grid.

    The Hawkes and Brownian draws come from independent children of
    ``SeedSequence(config.seed)``, so the result is a pure function of the
    inputs.
    """
    hawkes_seq, brownian_seq = substreams(config.seed, 2)
    log = hawkes.simulate(params, config.horizon, lambda0=None, seed=hawkes_seq)
    times, is_jump, observed = merged_grid(
        config.n, config.delta, config.substeps, log.all_times()
    )
    normals = np.random.default_rng(brownian_seq).standard_normal(times.size - 1)
    values = euler_on_grid(model, times, is_jump, normals, config.x0, config.explosion_bound)
    return SamplePath(delta=config.delta, values=values[observed], events=log)
