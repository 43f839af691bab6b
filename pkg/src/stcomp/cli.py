"""Command-line entry point: ``stcomp {run,certify,preset,sweep}``.

Exit codes: 0 success, 1 property or assertion failure (including
divergence and certification violations), 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import presets
from .artifacts import write_atomic, write_json, write_run
from .certify import certify_contraction, certify_contraction_expectation, certify_induced_decay, certify_pe, \
    estimate_delta
from .compressors import CompressorSpec, certified_step, contraction_params
from .config import RunConfig
from .errors import ConfigError, STCompError
from .graph import build_ring, laplacian, spectrum
from .runner import run
from .telemetry import summarize

log = logging.getLogger("stcomp")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _setup_logging():
    level = os.environ.get("STCOMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc


def _apply_run_flags(data: dict, args) -> dict:
    data = dict(data)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.max_rounds is not None:
        data["max_rounds"] = args.max_rounds
    if args.accuracy is not None:
        data["target_accuracy"] = args.accuracy
    if args.allow_unverified_delta:
        data["allow_unverified_delta"] = True
    return data


def _out_dir(args, cfg: RunConfig | None = None) -> Path:
    if args.out is not None:
        return Path(args.out)
    if cfg is not None and cfg.output_dir is not None:
        return Path(cfg.output_dir)
    return Path(".")


def _report_run(record) -> int:
    status = record.outcome.status
    fit = record.fitted_rate
    rate = "" if fit is None else f" gamma_hat={fit.gamma:.4g} r2={fit.r2:.4f}"
    print(f"{record.label}: {status} at round {record.outcome.round}, "
          f"metric={record.trace.metric[-1]:.3e}{rate}")
    if status == "diverged":
        return EXIT_FAIL
    if status == "exhausted" and record.target_accuracy is not None:
        return EXIT_FAIL
    return EXIT_OK


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    base = Path(args.config).parent
    cfg = RunConfig.from_dict(_apply_run_flags(_read_json(args.config), args))
    record = run(cfg, base_dir=base)
    paths = write_run(record, _out_dir(args, cfg))
    for p in paths:
        log.info("wrote %s", p)
    return _report_run(record)


# -- certify -----------------------------------------------------------------

def _compressor_block(args) -> tuple[dict, int | None]:
    if args.compressor is not None:
        try:
            data = json.loads(args.compressor)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "--compressor") from exc
    elif args.config is not None:
        data = _read_json(args.config)
    else:
        raise ConfigError("pass --config FILE or --compressor JSON", "compressor")
    if not isinstance(data, dict):
        raise ConfigError("expected a key-value block", "compressor")
    d = None
    if "compressor" in data:
        d = data.get("dimension") or (data.get("objective") or {}).get("d")
        data = data["compressor"]
    return data, d


def cmd_certify(args) -> int:
    block, d_cfg = _compressor_block(args)
    spec = CompressorSpec.from_dict(block)
    d = args.dimension or d_cfg or 5
    if spec.kind == "topk" and spec.k > d:
        raise ConfigError(f"k={spec.k} exceeds dimension {d}", "compressor.k")
    kappa0 = args.kappa0 if args.kappa0 is not None else certified_step(spec, d)
    if not kappa0 > 0:
        raise ConfigError("must be > 0", "--kappa0")
    rng = np.random.default_rng(args.seed)

    reports = []
    decay = certify_induced_decay(spec, kappa0, d, args.trials, args.horizon, rng)
    reports.append(decay.to_dict())
    violations = decay.violations

    if args.contraction:
        params = contraction_params(spec, d)
        if params is None:
            params = (1.0, 1.0) if spec.kind == "identity" else None
        if params is None:
            raise ConfigError(f"no contraction parameters known for {spec.kind!r}", "--contraction")
        p, phi = params
        if spec.stochastic:
            rep = certify_contraction_expectation(spec, p, phi, min(args.samples, 1000), d, rng)
        else:
            rep = certify_contraction(spec, p, phi, args.samples, d, rng)
        reports.append(rep.to_dict())
        violations += rep.violations
    if args.pe_window is not None:
        lo, hi = certify_pe(spec.schedule or "cycling", args.pe_window, d, 10 * d)
        reports.append({"check": "persistence_of_excitation", "window": args.pe_window,
                        "alpha1_hat": lo, "alpha2_hat": hi, "violations": int(lo <= 1e-12)})
        violations += int(lo <= 1e-12)
    if args.delta_ring is not None:
        if spec.stochastic:
            raise ConfigError("delta estimation needs a deterministic compressor", "--delta-ring")
        spec_g = spectrum(laplacian(build_ring(args.delta_ring)))
        delta = estimate_delta(spec, spec_g, d, args.samples, rng)
        print(f"delta_hat={delta:.6g} (ring n={args.delta_ring})")
        reports.append({"check": "commutation_delta", "n": args.delta_ring, "delta_hat": delta})

    for rep in reports:
        print(json.dumps(rep, sort_keys=True))
    out = {"compressor": spec.to_dict(), "dimension": d, "reports": reports, "violations": violations}
    name = f"certify-{spec.kind}.json"
    write_json(_out_dir(args) / name, out)
    return EXIT_OK if violations == 0 else EXIT_FAIL


# -- preset ------------------------------------------------------------------

def cmd_preset(args) -> int:
    out = _out_dir(args)
    seed = presets.TABLE1_SEED if args.seed is None else args.seed
    if args.name == "table1":
        kwargs = {"seed": seed, "workers": args.workers}
        if args.max_rounds is not None:
            kwargs["max_rounds"] = args.max_rounds
        if args.accuracy is not None:
            kwargs["accuracy"] = args.accuracy
        records, table, checks = presets.run_table1(**kwargs)
        for rec in records:
            write_run(rec, out)
        write_atomic(out / "table1.summary.csv", table.to_csv())
        print(table.to_text(), end="")
        for name, ok in checks.items():
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        return EXIT_OK if all(checks.values()) else EXIT_FAIL
    if args.name == "convex_rosenbrock":
        kwargs = {"seed": seed}
        if args.max_rounds is not None:
            kwargs["max_rounds"] = args.max_rounds
        if args.accuracy is not None:
            kwargs["accuracy"] = args.accuracy
        record = run(presets.rosenbrock_config(**kwargs))
        write_run(record, out)
        return _report_run(record)
    if args.name == "compressor_verify":
        results = presets.compressor_verify(seed=0 if args.seed is None else args.seed)
        payload = []
        for name, rep, ok in results:
            body = rep.to_dict() if hasattr(rep, "to_dict") else rep
            payload.append({"name": name, "passed": bool(ok), **body})
            print(f"{'PASS' if ok else 'FAIL'} {name}")
        write_json(out / "compressor_verify.json", payload)
        return EXIT_OK if all(ok for _, _, ok in results) else EXIT_FAIL
    raise ConfigError(f"unknown preset {args.name!r}", "preset")


# -- sweep -------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_set(item: str) -> tuple[str, list]:
    if "=" not in item:
        raise ConfigError(f"expected path=v1,v2,... got {item!r}", "--set")
    path, values = item.split("=", 1)
    vals = [_parse_value(v) for v in values.split(",") if v != ""]
    if not path or not vals:
        raise ConfigError(f"expected path=v1,v2,... got {item!r}", "--set")
    return path, vals


def _assign(data: dict, path: str, value):
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        nxt = node.setdefault(key, {})
        if not isinstance(nxt, dict):
            raise ConfigError("not a key-value block", path)
        node = nxt
    node[keys[-1]] = value


def _fmt_label_value(v) -> str:
    return json.dumps(v) if not isinstance(v, str) else v


def sweep_configs(base: dict, sets: list[tuple[str, list]]) -> list[RunConfig]:
    """Cartesian product of ``--set`` values applied to ``base``."""
    label = base.get("label") or RunConfig.from_dict(base).name
    configs = []
    for combo in itertools.product(*(vals for _, vals in sets)):
        data = copy.deepcopy(base)
        parts = []
        for (path, _), value in zip(sets, combo):
            _assign(data, path, value)
            parts.append(f"{path.rsplit('.', 1)[-1]}={_fmt_label_value(value)}")
        data["label"] = "_".join([label] + parts)
        configs.append(RunConfig.from_dict(data))
    return configs


def _run_safe(cfg):
    try:
        return run(cfg)
    except ConfigError as exc:
        return exc


def cmd_sweep(args) -> int:
    base = _apply_run_flags(_read_json(args.config), args)
    sets = [_parse_set(s) for s in args.set or []]
    configs = sweep_configs(base, sets)
    # resolve relative edge-list paths against the config file before fanning out
    base_dir = Path(args.config).parent
    configs = [c if c.graph.kind != "edge_list" or Path(c.graph.path).is_absolute()
               else c.with_overrides(graph={"kind": "edge_list", "path": str(base_dir / c.graph.path)})
               for c in configs]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_safe, configs))
    else:
        results = [_run_safe(c) for c in configs]
    out = _out_dir(args)
    code = EXIT_OK
    records = []
    for cfg, res in zip(configs, results):
        if isinstance(res, ConfigError):
            print(f"{cfg.name}: config error: {res}", file=sys.stderr)
            code = EXIT_CONFIG
            continue
        write_run(res, out)
        records.append(res)
        rc = _report_run(res)
        if code == EXIT_OK:
            code = rc
    if records:
        write_atomic(out / "sweep.summary.csv", summarize(records).to_csv())
    return code


# -- parser ------------------------------------------------------------------

def _add_run_flags(p):
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (default: config output_dir or cwd)")
    p.add_argument("--max-rounds", type=int, dest="max_rounds")
    p.add_argument("--accuracy", type=float, help="target suboptimality; 'inf' disables early stopping")
    p.add_argument("--allow-unverified-delta", action="store_true", dest="allow_unverified_delta",
                   help="let direct compression run with a nonlinear deterministic compressor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stcomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("--config", required=True)
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("certify", help="empirically certify a compressor")
    p.add_argument("--config", help="JSON file holding a compressor block (or a run config)")
    p.add_argument("--compressor", help="inline compressor JSON, e.g. '{\"kind\": \"topk\", \"k\": 2}'")
    p.add_argument("--dimension", "-d", type=int)
    p.add_argument("--kappa0", type=float, help="gain (default: the kind's certified step 1/p)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--contraction", action="store_true", help="also check the contraction inequality")
    p.add_argument("--pe-window", type=int, dest="pe_window", help="also check excitation over this window")
    p.add_argument("--delta-ring", type=int, dest="delta_ring", metavar="N",
                   help="also estimate the commutation bound on an N-node ring")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("preset", help="run a pinned reproduction setup")
    p.add_argument("name", choices=("table1", "convex_rosenbrock", "compressor_verify"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--max-rounds", type=int, dest="max_rounds")
    p.add_argument("--accuracy", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("sweep", help="cartesian sweep over config values")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="PATH=V1,V2",
                   help="dotted config path and comma-separated values (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (STCompError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
