"""Command-line entry point: ``snnswitch {dataset,train,compile,simulate,report}``.

All paths are explicit flags. The log level comes from ``SNNSWITCH_LOG_LEVEL``
(default ``WARNING``) and every run logs its resolved configuration.
"""

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from snnswitch import bundle as bundle_io
from snnswitch import sim
from snnswitch.baselines import train_baselines
from snnswitch.classifier import load_model, save_model, split_train_test, train_adaboost
from snnswitch.dataset import (
    LABELS,
    SweepConfig,
    export_csv,
    generate_sweep,
    import_csv,
    label_sweep,
    load_sweep_config,
    marginal_stats,
    write_marginals,
)
from snnswitch.errors import (
    BundleError,
    ConfigError,
    EquivalenceError,
    MappingError,
    ModelFormatError,
    SimulationError,
)
from snnswitch.hardware import DEFAULT_HW
from snnswitch.model import (
    LayerSpec,
    NeuronParams,
    gesture_network,
    load_network,
    network_to_dict,
    single_layer_network,
)
from snnswitch.switching import (
    MODES,
    compile_network,
    delay_range_report,
    delay_report_csv,
    gesture_report,
)

log = logging.getLogger("snnswitch")

LOG_ENV = "SNNSWITCH_LOG_LEVEL"

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_MAPPING = 3
EXIT_EQUIVALENCE = 4
EXIT_SIMULATION = 5

SIMULATORS = ("reference", "serial", "parallel", "plan")
TINY_GRID = SweepConfig(
    source_range=(100, 500),
    target_range=(100, 500),
    density_range=(0.5, 1.0),
    delay_range=(1, 2, 4, 8),
)


def _write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _hw_from_args(args):
    overrides = {}
    if getattr(args, "hw_config", None):
        try:
            overrides.update(json.loads(Path(args.hw_config).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"hardware config {args.hw_config} is not valid JSON: {exc}") from None
    for item in getattr(args, "hw", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--hw expects KEY=VALUE, got {item!r}")
        try:
            overrides[key.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"--hw {key}: value {value!r} is not an integer") from None
    return DEFAULT_HW.with_overrides(**overrides) if overrides else DEFAULT_HW


def _log_config(name, args, **resolved):
    doc = {k: v for k, v in vars(args).items() if k not in ("func",)}
    doc.update(resolved)
    log.info("resolved %s config: %s", name, json.dumps(doc, sort_keys=True, default=str))


# --- dataset -----------------------------------------------------------------


def cmd_dataset(args):
    cfg = load_sweep_config(args.config) if args.config else (TINY_GRID if args.tiny else SweepConfig())
    if args.base_seed is not None:
        cfg = replace(cfg, base_seed=args.base_seed)
    hw = _hw_from_args(args)
    _log_config("dataset", args, sweep=cfg.to_dict(), hardware=hw.to_dict())
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    rows = label_sweep(generate_sweep(cfg), hw, workers=args.workers)
    export_csv(rows, args.out)
    counts = Counter(r.label for r in rows)
    balance = ", ".join(f"{lab} {counts[lab]}" for lab in LABELS)
    print(f"wrote {len(rows)} rows ({cfg.size - len(rows)} excluded) to {args.out}")
    print(f"label balance: {balance}")
    return EXIT_OK


# --- train -------------------------------------------------------------------


def cmd_train(args):
    _log_config("train", args)
    if not Path(args.data).is_file():
        raise ConfigError(f"dataset {args.data} does not exist")
    rows = import_csv(args.data)
    train, test = split_train_test(rows, args.ratio, args.seed)
    model = train_adaboost(train, n_rounds=args.rounds, seed=args.seed, test_rows=test)
    save_model(model, args.model_out)
    report = train_baselines(rows, seed=args.seed, n_seeds=args.n_seeds, ratio=args.ratio,
                             n_rounds=args.rounds)
    doc = report.to_dict()
    doc["dataset_rows"] = len(rows)
    doc["adaboost_model"] = {
        "path": str(args.model_out),
        "rounds_used": len(model.stumps),
        "train_accuracy": model.train_accuracy,
        "test_accuracy": model.test_accuracy,
    }
    if args.report_out:
        _write_json(args.report_out, doc)
    print(f"{len(rows)} rows, {args.ratio:.0%} train split, seeds {report.seeds[0]}..{report.seeds[-1]}")
    print(report.table())
    print(f"model written to {args.model_out} (test accuracy {model.test_accuracy:.4f})")
    return EXIT_OK


# --- compile -----------------------------------------------------------------


def _network_from_args(args):
    if args.gesture:
        return gesture_network(delay_range=args.gesture_delay_range)
    if args.network:
        return load_network(args.network)
    raise ConfigError("give --network PATH or --gesture")


def _model_from_args(args):
    return load_model(args.model) if getattr(args, "model", None) else None


def _plan_bundle_dir(root, layer_id):
    return Path(root) / f"layer_{layer_id:03d}"


def cmd_compile(args):
    net = _network_from_args(args)
    hw = _hw_from_args(args)
    count_inputs = args.count_input_pes == "on"
    _log_config("compile", args, hardware=hw.to_dict())
    model = _model_from_args(args)
    if args.mode == "predicted" and model is None:
        raise ConfigError("--mode predicted needs --model")
    plan = compile_network(net, args.mode, model, hw, count_inputs)
    doc = plan.to_dict()
    if args.gesture:
        doc["gesture"] = gesture_report(model, hw, args.gesture_delay_range, count_inputs) if model else None
    if args.out:
        _write_json(args.out, doc)
    if args.bundle_dir:
        for lp in plan.layers:
            bundle_io.write_bundle(lp.compilation, _plan_bundle_dir(args.bundle_dir, lp.layer_id))
        _write_json(Path(args.bundle_dir) / "network.json", network_to_dict(net))
    for lp in plan.layers:
        flag = " (fallback)" if lp.fallback else ""
        print(f"layer {lp.layer_id} {lp.source}->{lp.target}: {lp.paradigm} {lp.pe_count} PEs{flag}")
    print(f"mode {plan.mode}: {plan.pe_total} PEs total "
          f"({plan.layer_pe_total} layer PEs + {plan.input_pes} input PEs)")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------


def _sim_settings(args):
    cfg = {}
    if args.sim_config:
        try:
            cfg = json.loads(Path(args.sim_config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"simulation config {args.sim_config} is not valid JSON: {exc}") from None
        unknown = set(cfg) - {"T", "params", "input_rate", "seed"}
        if unknown:
            raise ConfigError(f"unknown simulation config keys: {sorted(unknown)}")
    T = args.T if args.T is not None else int(cfg.get("T", 100))
    rate = args.input_rate if args.input_rate is not None else float(cfg.get("input_rate", 0.05))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    try:
        params = NeuronParams(**cfg["params"]) if "params" in cfg else None
    except TypeError as exc:
        raise ConfigError(f"bad neuron params in simulation config: {exc}") from None
    if T < 1:
        raise ConfigError("T must be >= 1")
    if not 0.0 <= rate <= 1.0:
        raise ConfigError("input rate must be in [0, 1]")
    return T, rate, seed, params


def _sim_network(args, params):
    if args.random_layer:
        try:
            ns, nt, density, delay = args.random_layer.split(",")
            spec = LayerSpec(int(ns), int(nt), int(delay), float(density),
                             seed=args.layer_seed)
        except ValueError as exc:
            raise ConfigError(f"--random-layer expects NS,NT,DENSITY,DELAY: {exc}") from None
        return single_layer_network(spec, params or NeuronParams())
    if args.bundle_dir and not args.network:
        return load_network(Path(args.bundle_dir) / "network.json")
    if args.network:
        return load_network(args.network)
    raise ConfigError("give --network, --random-layer or --bundle-dir")


def _input_rasters(args, net, T, rate, seed):
    inputs = [p for p in net.populations if p.is_input]
    rasters = {}
    spec = args.input or []
    for item in spec:
        name, sep, path = item.partition("=")
        if not sep:
            if len(inputs) != 1:
                raise ConfigError("network has several inputs; use --input NAME=PATH")
            name, path = inputs[0].name, item
        rasters[name] = sim.read_raster(path, T)
    for i, p in enumerate(inputs):
        if p.name not in rasters:
            rasters[p.name] = sim.random_raster(p.size, T, rate, seed + i)
    return rasters


def _compilations(args, net, sims, hw):
    comps = {}
    if "serial" in sims:
        comps["serial"] = {lp.layer_id: lp.compilation
                           for lp in compile_network(net, "serial", hw=hw).layers}
    if "parallel" in sims:
        comps["parallel"] = {lp.layer_id: lp.compilation
                             for lp in compile_network(net, "parallel", hw=hw).layers}
    if "plan" in sims:
        if not args.bundle_dir:
            raise ConfigError("simulator 'plan' needs --bundle-dir from a compile run")
        comps["plan"] = {i: bundle_io.load_bundle(_plan_bundle_dir(args.bundle_dir, i))
                         for i in range(len(net.projections))}
    return comps


def cmd_simulate(args):
    sims = [s.strip() for s in args.sims.split(",") if s.strip()]
    bad = [s for s in sims if s not in SIMULATORS]
    if bad or not sims:
        raise ConfigError(f"unknown simulators {bad}; choose from {SIMULATORS}")
    T, rate, seed, params = _sim_settings(args)
    net = _sim_network(args, params)
    if params is not None:
        net = type(net)(
            tuple(p if p.is_input else type(p)(p.name, p.size, params) for p in net.populations),
            net.projections,
        )
    hw = _hw_from_args(args)
    _log_config("simulate", args, T=T, input_rate=rate, seed=seed, simulators=sims)
    inputs = _input_rasters(args, net, T, rate, seed)
    comps = _compilations(args, net, sims, hw)
    results = {}
    for name in sims:
        results[name] = sim.simulate_network(net, inputs, T, comps.get(name))
    out = Path(args.out_dir) if args.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        for name, by_pop in results.items():
            for pop, raster in by_pop.items():
                sim.write_raster(raster, out / f"{name}_{pop}.csv")
    for name, by_pop in results.items():
        total = sum(len(r) for pop, r in by_pop.items() if not net.population(pop).is_input)
        print(f"{name}: {total} output spikes over T={T}")
    if len(sims) < 2:
        return EXIT_OK
    base = sims[0]
    for other in sims[1:]:
        for pop in results[base]:
            div = sim.first_divergence(results[base][pop], results[other][pop])
            if div is not None:
                raise EquivalenceError(
                    f"NOT EQUAL: {base} vs {other} on {pop!r}: first divergence at "
                    f"neuron {div[0]}, t={div[1]}",
                    first_divergence=div,
                )
    print(f"EQUAL ({', '.join(sims)})")
    return EXIT_OK


# --- report ------------------------------------------------------------------


def cmd_report(args):
    _log_config("report", args)
    if not Path(args.data).is_file():
        raise ConfigError(f"dataset {args.data} does not exist")
    rows = import_csv(args.data)
    model = load_model(args.model)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = write_marginals(marginal_stats(rows), out)
    report = delay_range_report(rows, model, strict_groups=args.strict_groups)
    (out / "delay_report.csv").write_text(delay_report_csv(report))
    hw = _hw_from_args(args)
    gesture = gesture_report(model, hw, args.gesture_delay_range, args.count_input_pes == "on")
    _write_json(out / "gesture_report.json", gesture)
    for p in paths:
        print(f"wrote {p}")
    print(f"wrote {out / 'delay_report.csv'} ({len(report)} delay ranges)")
    t = gesture["totals"]
    print(f"gesture network PEs: serial {t['serial']}, parallel {t['parallel']}, "
          f"switching {t['switching']}, ideal {t['ideal']} (reference 9/5/4)")
    for line in gesture["explanation"]:
        print(f"  {line}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _add_hw(p):
    p.add_argument("--hw", action="append", metavar="KEY=VALUE",
                   help="override a hardware constant, e.g. dtcm_bytes=65536 (repeatable)")
    p.add_argument("--hw-config", metavar="PATH", help="JSON file of hardware-constant overrides")


def build_parser():
    parser = argparse.ArgumentParser(prog="snnswitch", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("dataset", help="generate and label the layer sweep")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--base-seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", metavar="PATH", help="JSON sweep config")
    p.add_argument("--tiny", action="store_true", help="use a 32-layer grid for quick runs")
    _add_hw(p)
    p.set_defaults(func=cmd_dataset)

    p = subs.add_parser("train", help="train AdaBoost and the baselines")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--n-seeds", type=int, default=20)
    p.add_argument("--ratio", type=float, default=0.8)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("compile", help="compile a network into a deployment plan")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--network", metavar="PATH", help="network JSON")
    src.add_argument("--gesture", action="store_true", help="built-in 2048-20-4 network")
    p.add_argument("--gesture-delay-range", type=int, default=1)
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--mode", choices=MODES, default="predicted")
    p.add_argument("--out", metavar="PATH", help="deployment plan JSON")
    p.add_argument("--bundle-dir", metavar="DIR", help="write per-layer image bundles here")
    p.add_argument("--count-input-pes", choices=("on", "off"), default="off")
    _add_hw(p)
    p.set_defaults(func=cmd_compile)

    p = subs.add_parser("simulate", help="run simulators and compare rasters")
    p.add_argument("--network", metavar="PATH")
    p.add_argument("--random-layer", metavar="NS,NT,DENSITY,DELAY")
    p.add_argument("--layer-seed", type=int, default=0)
    p.add_argument("--bundle-dir", metavar="DIR", help="images from a compile run")
    p.add_argument("--sims", default="reference,serial,parallel",
                   help=f"comma list from {', '.join(SIMULATORS)}")
    p.add_argument("--input", action="append", metavar="[NAME=]PATH", help="input raster CSV")
    p.add_argument("--input-rate", type=float, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sim-config", metavar="PATH", help="JSON with T, params, input_rate, seed")
    p.add_argument("--out-dir", metavar="DIR")
    _add_hw(p)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("report", help="emit marginal, delay-range and gesture reports")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--strict-groups", action="store_true")
    p.add_argument("--gesture-delay-range", type=int, default=1)
    p.add_argument("--count-input-pes", choices=("on", "off"), default="off")
    _add_hw(p)
    p.set_defaults(func=cmd_report)
    return parser


def _configure_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"{LOG_ENV}={level!r} is not a log level")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    try:
        _configure_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except EquivalenceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_EQUIVALENCE
    except MappingError as exc:
        print(f"mapping error: {exc}", file=sys.stderr)
        return EXIT_MAPPING
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except (ConfigError, ModelFormatError, BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
