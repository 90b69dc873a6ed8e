"""Command-line entry point: ``hawkesdrift {simulate-hawkes,simulate-path,estimate,bench}``.

Every command reads a JSON config, writes its outputs to ``--out`` and drops
a ``manifest.json`` next to them. Passing a manifest back as ``--config``
reruns the command with the exact resolved configuration.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import sympy

from . import __version__, bench, hawkes
from .basis import TrigBasis
from .estimator import MissingEventsError, build_samples, empirical_risk, select
from .hawkes import EventLog, HawkesParams, HawkesValidationError
from .sde import ExplosionError, ModelSpec, SamplePath, SimConfig, get_model, simulate_path

logger = logging.getLogger("hawkesdrift")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """Load a JSON config; a manifest is unwrapped to the config it recorded."""
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    if "command" in data and "config" in data:
        return data["config"]
    return data


def _expression(text, name: str):
    x = sympy.Symbol("x")
    try:
        expr = sympy.sympify(str(text))
    except (sympy.SympifyError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse {name} expression {text!r}") from exc
    if expr.free_symbols - {x}:
        raise ConfigError(f"{name} expression may only use the variable x")
    f = sympy.lambdify(x, expr, modules="math")
    return lambda v: float(f(v))


def load_model(spec) -> ModelSpec:
    """A builtin model name, or a dict of expressions in ``x`` overriding a base model."""
    if spec is None:
        raise ConfigError("config needs a 'model'")
    if isinstance(spec, str):
        return get_model(spec)
    base = get_model(spec.get("base", "model1"))
    fns = {}
    for key, attr in (("drift", "drift"), ("diffusion", "diffusion"), ("jump", "jump")):
        fns[attr] = _expression(spec[key], key) if key in spec else getattr(base, attr)
    return ModelSpec(
        name=spec.get("name", "custom"),
        sigma_max=float(spec.get("sigma_max", base.sigma_max)),
        a_max=spec.get("a_max", base.a_max if "jump" not in spec else None),
        ergodic=bool(spec.get("ergodic", base.ergodic)),
        **fns,
    )


def load_params(d) -> HawkesParams:
    return HawkesParams.reference() if d is None else HawkesParams.from_dict(d)


def _write(out: Path, name: str, text: str, written: list):
    path = out / name
    path.write_text(text)
    written.append(name)


def _manifest(out: Path, command: str, config: dict, written: list):
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed", config.get("base_seed")),
        "version": __version__,
        "outputs": sorted(written),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_simulate_hawkes(args) -> int:
    cfg = read_config(args.config)
    resolved = {
        "hawkes": cfg.get("hawkes", HawkesParams.reference().to_dict()),
        "horizon": float(cfg.get("horizon", 10.0)),
        "lambda0": cfg.get("lambda0"),
        "seed": args.seed if args.seed is not None else int(cfg.get("seed", 0)),
    }
    params = load_params(resolved["hawkes"])
    log = hawkes.simulate(params, resolved["horizon"], resolved["lambda0"], seed=resolved["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    _write(out, "events.json", log.to_json() + "\n", written)
    _write(out, "events.csv", log.to_csv(), written)
    _manifest(out, "simulate-hawkes", resolved, written)
    print(f"simulated {log.counts().tolist()} events on [0, {log.horizon:g}] -> {out}")
    return EXIT_OK


def cmd_simulate_path(args) -> int:
    cfg = read_config(args.config)
    resolved = {
        "model": cfg.get("model", "model1"),
        "hawkes": cfg.get("hawkes", HawkesParams.reference().to_dict()),
        "n": int(cfg.get("n", 1000)),
        "delta": float(cfg.get("delta", 0.1)),
        "substeps": int(cfg.get("substeps", 5)),
        "x0": float(cfg.get("x0", 0.0)),
        "explosion_bound": float(cfg.get("explosion_bound", 1e6)),
        "seed": args.seed if args.seed is not None else int(cfg.get("seed", 0)),
    }
    model = load_model(resolved["model"])
    params = load_params(resolved["hawkes"])
    sim = SimConfig(
        n=resolved["n"],
        delta=resolved["delta"],
        substeps=resolved["substeps"],
        x0=resolved["x0"],
        seed=resolved["seed"],
        explosion_bound=resolved["explosion_bound"],
    )
    path = simulate_path(model, params, sim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    _write(out, "path.csv", path.to_csv(), written)
    _write(out, "path.json", path.to_json() + "\n", written)
    _write(out, "events.json", path.events.to_json() + "\n", written)
    _write(out, "events.csv", path.events.to_csv(), written)
    _manifest(out, "simulate-path", resolved, written)
    print(f"simulated {path.n + 1} observations -> {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = read_config(args.config)
    resolved = {
        "model": cfg.get("model", "model1"),
        "path": str(args.path or cfg.get("path") or ""),
        "events": args.events or cfg.get("events"),
        "interval": list(cfg.get("interval", [-1.0, 1.0])),
        "basis": cfg.get("basis", "cosine"),
        "rho": float(args.rho if args.rho is not None else cfg.get("rho", 3.0)),
        "m_max": int(cfg.get("m_max", 20)),
        "cap_dimension": bool(cfg.get("cap_dimension", False)),
        "truth": bool(cfg.get("truth", True)),
        "grid_points": int(cfg.get("grid_points", 201)),
    }
    if not resolved["path"]:
        raise ConfigError("estimate needs a sample path CSV (--path)")
    model = load_model(resolved["model"])
    log = None
    if resolved["events"]:
        log = EventLog.from_json(Path(resolved["events"]).read_text())
    elif model.has_jumps:
        raise MissingEventsError(
            f"{model.name} has a jump term: pass the jump record with --events "
            "(the jump correction of the increments needs it)"
        )
    path = SamplePath.from_csv(Path(resolved["path"]).read_text(), events=log)
    lo, hi = resolved["interval"]
    basis = TrigBasis(lo, hi, max_m=resolved["m_max"], kind=resolved["basis"])
    samples = build_samples(path, model, basis)
    est = select(
        samples,
        basis,
        model.sigma_max,
        m_max=resolved["m_max"],
        rho=resolved["rho"],
        cap_dimension=resolved["cap_dimension"],
    )
    xs = np.linspace(lo, hi, resolved["grid_points"])
    bhat = est.evaluate(xs)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if resolved["truth"]:
        est.metadata["risk"] = empirical_risk(est, model.drift, samples)
        est.metadata["risk_all_n_norm"] = empirical_risk(est, model.drift, samples, normalize="all")
        writer.writerow(["x", "b_hat", "b"])
        for x, v in zip(xs.tolist(), bhat.tolist()):
            writer.writerow([repr(x), repr(v), repr(float(model.drift(x)))])
    else:
        writer.writerow(["x", "b_hat"])
        for x, v in zip(xs.tolist(), bhat.tolist()):
            writer.writerow([repr(x), repr(v)])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    _write(out, "estimate.json", est.to_json() + "\n", written)
    _write(out, "grid.csv", buf.getvalue(), written)
    _manifest(out, "estimate", resolved, written)
    msg = f"selected m={est.m_hat} (dimension {est.dimension})"
    if "risk" in est.metadata:
        msg += f", empirical risk {est.metadata['risk']:.6g}"
    print(msg)
    return EXIT_OK


def bench_configs(cfg: dict, full: bool, replicates) -> tuple:
    resolved = {
        "models": list(cfg.get("models", bench.MODELS)),
        "settings": [list(s) for s in cfg.get("settings", bench.SETTINGS)],
        "replicates": int(cfg.get("replicates", bench.DEFAULT_REPLICATES)),
        "base_seed": int(cfg.get("base_seed", cfg.get("seed", 0))),
        "hawkes": cfg.get("hawkes", HawkesParams.reference().to_dict()),
        "rho": float(cfg.get("rho", 3.0)),
        "m_max": int(cfg.get("m_max", 20)),
        "interval": list(cfg.get("interval", [-1.0, 1.0])),
        "substeps": int(cfg.get("substeps", 5)),
        "basis": cfg.get("basis", "cosine"),
    }
    if full:
        resolved["models"] = list(bench.MODELS)
        resolved["settings"] = [list(s) for s in bench.SETTINGS]
        resolved["replicates"] = bench.FULL_REPLICATES
    if replicates is not None:
        resolved["replicates"] = int(replicates)
    configs = bench.default_grid(
        replicates=resolved["replicates"],
        base_seed=resolved["base_seed"],
        models=resolved["models"],
        settings=[(int(n), float(d)) for n, d in resolved["settings"]],
        params=load_params(resolved["hawkes"]),
        rho=resolved["rho"],
        m_max=resolved["m_max"],
        interval=tuple(resolved["interval"]),
        substeps=resolved["substeps"],
        basis=resolved["basis"],
    )
    return resolved, configs


def cmd_bench(args) -> int:
    cfg = read_config(args.config)
    if args.seed is not None:
        cfg = dict(cfg, base_seed=args.seed)
    resolved, configs = bench_configs(cfg, args.full, args.replicates)

    def report(cell):
        print(
            f"{cell.model} n={cell.n} delta={cell.delta:g}: "
            f"{cell.mean_risk:.4f} +- {cell.stderr:.4f} (median m {cell.median_mhat:g})",
            flush=True,
        )

    table = bench.run_table(configs, progress=report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    _write(out, "risk_table.csv", table.to_csv(), written)
    _write(out, "risk_table.json", table.to_json() + "\n", written)
    _manifest(out, "bench", resolved, written)
    return EXIT_OK


COMMANDS = {
    "simulate-hawkes": cmd_simulate_hawkes,
    "simulate-path": cmd_simulate_path,
    "estimate": cmd_estimate,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hawkesdrift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config or a previous manifest.json")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory")
        if name == "estimate":
            p.add_argument("--path", help="sample path CSV (k,t,X)")
            p.add_argument("--events", help="event log JSON")
            p.add_argument("--rho", type=float, help="override the penalty constant")
        if name == "bench":
            p.add_argument("--replicates", type=int)
            p.add_argument(
                "--paper", "--full", dest="full", action="store_true", help="full grid with 1000 replicates"
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ExplosionError, np.linalg.LinAlgError, bench.CellError) as exc:
        msg = str(exc)
        if isinstance(exc, ExplosionError):
            msg = f"explosion: first crossing at t={exc.time!r}: {exc}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HawkesValidationError, ConfigError, MissingEventsError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
