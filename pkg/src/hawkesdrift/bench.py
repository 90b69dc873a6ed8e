"""Monte-Carlo empirical-risk experiments over (model, n, delta) cells."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import TrigBasis
from .estimator import DriftEstimate, build_samples, empirical_risk, select
from .hawkes import HawkesParams
from .sde import ExplosionError, SimConfig, get_model, simulate_path

logger = logging.getLogger(__name__)

MODELS = ("model1", "model2", "model3", "model4")
SETTINGS = ((1000, 0.1), (10000, 0.1), (1000, 0.01), (10000, 0.01))
DEFAULT_REPLICATES = 200
FULL_REPLICATES = 1000

CSV_COLUMNS = [
    "model",
    "n",
    "delta",
    "replicates",
    "mean_risk",
    "stderr",
    "mean_risk_all_n_norm",
    "rejection_rate",
    "median_mhat",
]


class CellError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    n: int
    delta: float
    params: HawkesParams = field(default_factory=HawkesParams.reference)
    replicates: int = DEFAULT_REPLICATES
    rho: float = 3.0
    interval: tuple = (-1.0, 1.0)
    base_seed: int = 0
    cell_id: int = 0
    m_max: int = 20
    substeps: int = 5
    basis: str = "cosine"
    explosion_bound: float = 1e6
    max_rejections: int = 1000

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        get_model(self.model)
        SimConfig(n=self.n, delta=self.delta, substeps=self.substeps)
        TrigBasis(self.interval[0], self.interval[1], self.m_max, self.basis)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        d["interval"] = list(self.interval)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "params" in d:
            d["params"] = HawkesParams.from_dict(d["params"])
        if "interval" in d:
            d["interval"] = tuple(d["interval"])
        return cls(**d)

    def replicate_seed(self, replicate: int, attempt: int) -> np.random.SeedSequence:
        """Seed depends only on (base seed, cell, replicate, attempt), not on run order."""
        return np.random.SeedSequence([self.base_seed, self.cell_id, replicate, attempt])


@dataclass
class CellResult:
    model: str
    n: int
    delta: float
    replicates: int
    mean_risk: float
    stderr: float
    mean_risk_all_n_norm: float
    rejection_rate: float
    median_mhat: float
    risks: list = field(default_factory=list, repr=False)
    m_hats: list = field(default_factory=list, repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


def run_cell(
    config: ExperimentConfig,
    estimate_fn: Optional[Callable] = None,
) -> CellResult:
    """Simulate, estimate and score ``config.replicates`` independent paths.

    Exploded paths are redrawn with the next attempt seed. ``estimate_fn``
    replaces the penalized selection (``samples, basis, model -> DriftEstimate``).
    """
    model = get_model(config.model)
    basis = TrigBasis(config.interval[0], config.interval[1], config.m_max, config.basis)
    risks, risks_all, m_hats = [], [], []
    rejections = 0
    for r in range(config.replicates):
        for attempt in range(config.max_rejections + 1):
            sim = SimConfig(
                n=config.n,
                delta=config.delta,
                substeps=config.substeps,
                seed=config.replicate_seed(r, attempt),
                explosion_bound=config.explosion_bound,
            )
            try:
                path = simulate_path(model, config.params, sim)
                break
            except ExplosionError as exc:
                rejections += 1
                logger.debug("replicate %d attempt %d: %s", r, attempt, exc)
        else:
            raise CellError(
                f"{config.model}: {config.max_rejections} consecutive explosions at replicate {r}"
            )
        samples = build_samples(path, model, basis)
        if estimate_fn is None:
            est: DriftEstimate = select(
                samples, basis, model.sigma_max, m_max=config.m_max, rho=config.rho
            )
        else:
            est = estimate_fn(samples, basis, model)
        risks.append(empirical_risk(est, model.drift, samples))
        risks_all.append(empirical_risk(est, model.drift, samples, normalize="all"))
        m_hats.append(est.m_hat)
    arr = np.array(risks)
    stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return CellResult(
        model=config.model,
        n=config.n,
        delta=config.delta,
        replicates=config.replicates,
        mean_risk=float(arr.mean()),
        stderr=stderr,
        mean_risk_all_n_norm=float(np.mean(risks_all)),
        rejection_rate=rejections / (rejections + config.replicates),
        median_mhat=float(np.median(m_hats)),
        risks=risks,
        m_hats=m_hats,
    )


def default_grid(
    replicates: int = DEFAULT_REPLICATES,
    base_seed: int = 0,
    models=MODELS,
    settings=SETTINGS,
    **overrides,
) -> list:
    """Cartesian product models x (n, delta); cell ids follow row-major order."""
    configs = []
    for model in models:
        for n, delta in settings:
            configs.append(
                ExperimentConfig(
                    model=model,
                    n=n,
                    delta=delta,
                    replicates=replicates,
                    base_seed=base_seed,
                    cell_id=len(configs),
                    **overrides,
                )
            )
    return configs


@dataclass
class RiskTable:
    cells: list
    configs: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for cell in self.cells:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in cell.row().items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "cells": [
                    dict(cell.row(), config=cfg.to_dict())
                    for cell, cfg in zip(self.cells, self.configs)
                ]
            },
            indent=2,
        )

    def cell(self, model: str, n: int, delta: float) -> CellResult:
        for c in self.cells:
            if c.model == model and c.n == n and c.delta == delta:
                return c
        raise KeyError((model, n, delta))


def run_table(configs: list, progress: Optional[Callable[[CellResult], None]] = None) -> RiskTable:
    cells = []
    for cfg in configs:
        cell = run_cell(cfg)
        logger.info(
            "%s n=%d delta=%g: risk %.4f +- %.4f", cfg.model, cfg.n, cfg.delta, cell.mean_risk, cell.stderr
        )
        if progress is not None:
            progress(cell)
        cells.append(cell)
    return RiskTable(cells=cells, configs=list(configs))
