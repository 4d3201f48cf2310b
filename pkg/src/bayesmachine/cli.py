"""Command-line front end.

Config files are flat ``key = value`` text; ``#`` starts a comment. Keys
(defaults in brackets) follow the scaled 4-row x 6-column, 512-entry machine::

    n_rows [4]  n_columns [6]  entries_per_array [512]
    seeds [optimized]        optimized | random | comma-separated bytes (0x.. or decimal)
    cycles [255]  strategy [both]  restarts [8]  rng_seed [0]
    broadening [1.3]  features [1,4,5,6,7,9]  n_bins [512]
    dataset.n_subjects [10]  dataset.reps_per_class [26]
    fault.enabled [0]  fault.lrs_median  fault.hrs_median  fault.lrs_sigma
    fault.hrs_sigma  fault.transient_flip_prob
    energy.e_seed_load  energy.e_mem_read  energy.e_cycle_total
    energy.mcu_energy_per_inference

Exit status is 0 on success, otherwise the error's code (see ``errors``).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import energy, experiments, gesture, io, seedopt
from .errors import BayesMachineError, BoundsError, ConfigurationError, DataFormatError
from .machine import MachineConfig, Observation, decide_max_count, first_one, run_inference
from .memory import FaultModel, inject_faults
from .oracle import LikelihoodTable, compile_table, dequantize, exact_posterior
from .rng import PERIOD, seed_load


@dataclass
class ExperimentConfig:
    n_rows: int = 4
    n_columns: int = 6
    entries_per_array: int = 512
    seeds: str = "optimized"
    cycles: int = PERIOD
    strategy: str = "both"
    restarts: int = 8
    rng_seed: int = 0
    broadening: float = gesture.DEFAULT_BROADENING
    features: str = ",".join(str(f) for f in gesture.DEFAULT_FEATURES)
    n_bins: int = 512
    dataset: dict = field(default_factory=lambda: {"n_subjects": 10, "reps_per_class": 26})
    fault: dict = field(default_factory=lambda: {"enabled": 0, **{
        k: getattr(FaultModel(), k)
        for k in ("lrs_median", "hrs_median", "lrs_sigma", "hrs_sigma", "transient_flip_prob")
    }})
    energy: dict = field(default_factory=dict)

    def validate(self) -> None:
        MachineConfig(self.n_rows, self.n_columns, self.entries_per_array)
        if self.cycles < 1:
            raise ConfigurationError("cycles must be at least 1")
        if self.strategy not in ("max_count", "first_one", "both"):
            raise ConfigurationError("strategy must be max_count, first_one or both")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be at least 1")
        self.feature_list()
        self.fault_model()
        self.energy_params()

    def feature_list(self) -> tuple[int, ...]:
        try:
            return tuple(int(f) for f in str(self.features).split(",") if f.strip())
        except ValueError as exc:
            raise ConfigurationError(f"bad feature list {self.features!r}") from exc

    def machine_config(self) -> MachineConfig:
        return MachineConfig(self.n_rows, self.n_columns, self.entries_per_array)

    def fault_model(self) -> FaultModel | None:
        f = dict(self.fault)
        if not int(f.pop("enabled", 0)):
            return None
        return FaultModel(rng_seed=module_seed(self.rng_seed, "fault"), **{k: float(v) for k, v in f.items()})

    def energy_params(self) -> energy.EnergyParams:
        return energy.default_params().override(**{k: float(v) for k, v in self.energy.items()})

    def as_dict(self) -> dict:
        return asdict(self)


_SCALARS = {f.name: f.type for f in fields(ExperimentConfig) if f.name not in ("dataset", "fault", "energy")}
_CASTS = {"int": int, "float": float, "str": str}


def module_seed(rng_seed: int, name: str) -> int:
    """Deterministic per-module seed derived from the global one."""
    ss = np.random.SeedSequence([int(rng_seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def load_config(path) -> ExperimentConfig:
    cfg = ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigurationError(f"{path}: line {lineno}: expected key = value")
        set_option(cfg, key, value, where=f"{path}: line {lineno}")
    return cfg


def set_option(cfg: ExperimentConfig, key: str, value: str, where: str = "option") -> None:
    section, dot, name = key.partition(".")
    try:
        if dot:
            if section not in ("dataset", "fault", "energy"):
                raise KeyError(key)
            if section == "energy" and name not in {f.name for f in fields(energy.EnergyParams)}:
                raise KeyError(key)
            if section != "energy" and name not in getattr(cfg, section):
                raise KeyError(key)
            getattr(cfg, section)[name] = float(value) if "." in value or "e" in value.lower() else int(value)
        else:
            if key not in _SCALARS:
                raise KeyError(key)
            setattr(cfg, key, _CASTS[_SCALARS[key]](value))
    except KeyError as exc:
        raise ConfigurationError(f"{where}: unknown key {exc}") from exc
    except ValueError as exc:
        raise ConfigurationError(f"{where}: bad value for {key}: {value!r}") from exc


def parse_bytes(text: str) -> list[int]:
    try:
        return [int(x, 0) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse byte list {text!r}") from exc


def parse_geometry(text: str) -> tuple[int, int, int]:
    try:
        r, c, e = (int(x) for x in text.lower().split("x"))
    except ValueError as exc:
        raise ConfigurationError(f"geometry must look like ROWSxCOLUMNSxENTRIES, got {text!r}") from exc
    return r, c, e


def resolve_seeds(cfg: ExperimentConfig, image, choice: str | None = None) -> tuple[list[int], dict]:
    choice = choice or cfg.seeds
    n = image.config.n_lfsrs
    if choice == "random":
        seeds = [int(s) for s in seedopt.random_seed_tuples(n, 1, module_seed(cfg.rng_seed, "seeds"))[0]]
        return seeds, {"source": "random"}
    if choice == "optimized":
        seed = module_seed(cfg.rng_seed, "seedopt")
        obj = seedopt.default_objective(image, rng_seed=seed, reference="nominal")
        res = seedopt.search_seeds(obj, rng_seed=seed, restarts=cfg.restarts)
        return list(res.seeds), {"source": "optimized", "score": res.score, "method": res.method}
    return seed_load(parse_bytes(choice), n), {"source": "explicit"}


def hexlist(values) -> list[str]:
    return [f"0x{int(v):02X}" for v in values]


def emit(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def write_csv(path, header, rows, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(cfg.as_dict(), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def byte_map(image) -> str:
    """Text rendering of every programmed byte, one block per row of arrays."""
    b = image.byte_tensor()
    cfg = image.config
    lines = []
    for r in range(cfg.n_rows):
        lines.append(f"row {r}:")
        for c in range(cfg.n_columns):
            shown = " ".join(f"{v:02X}" for v in b[r, c, :16])
            more = " ..." if cfg.entries_per_array > 16 else ""
            lines.append(f"  col {c}: {shown}{more}")
    return "\n".join(lines)


# commands -------------------------------------------------------------------

def cmd_program(args, cfg: ExperimentConfig) -> None:
    shape = parse_geometry(args.geometry) if args.geometry else (cfg.n_rows, cfg.n_columns, cfg.entries_per_array)
    table = io.read_likelihood_csv(args.table, shape)
    image = compile_table(table)
    io.write_image(image, args.out)
    print(f"programmed {shape[0]}x{shape[1]} arrays of {shape[2]} entries -> {args.out}")
    print(byte_map(image))


def _image_table(image) -> LikelihoodTable:
    b = dequantize(image.byte_tensor())
    prior = None if image.prior is None else dequantize(np.array(image.prior))
    return LikelihoodTable(b, prior)


def cmd_infer(args, cfg: ExperimentConfig) -> None:
    image = io.read_image(args.image)
    obs = Observation(tuple(parse_bytes(args.obs)))
    obs.validate(image.config)
    seeds, seed_info = resolve_seeds(cfg, image, args.seeds)
    cycles = args.cycles or cfg.cycles
    trace = run_inference(image, obs, seeds, cycles, cfg.fault_model())
    table = _image_table(image)
    expected = table.unnormalized(obs)
    post = exact_posterior(table, obs)
    probs = trace.probabilities()
    machine_post = probs / probs.sum() if probs.sum() > 0 else np.full(len(probs), 1 / len(probs))
    decision = decide_max_count(trace)
    fo = first_one(trace)
    if args.trace_csv:
        io.write_trace_csv(trace, args.trace_csv)
    emit({
        "config": cfg.as_dict(),
        "observation": list(obs.indices),
        "seeds": hexlist(seeds),
        "seed_info": seed_info,
        "cycles": cycles,
        "counts": trace.counts.tolist(),
        "probabilities": probs.tolist(),
        "expected_products": expected.tolist(),
        "deviation": float(np.max(np.abs(probs - expected))),
        "oracle_posterior": post.probs.tolist(),
        "machine_posterior": machine_post.tolist(),
        "decision": {"max_count": decision._asdict(), "first_one": fo._asdict()},
    }, args.out)


def _load_or_random_image(args, cfg):
    if args.image:
        return io.read_image(args.image)
    return compile_table(experiments.random_table(4, 4, 8, module_seed(cfg.rng_seed, "image")))


def cmd_sweep(args, cfg: ExperimentConfig) -> None:
    image = _load_or_random_image(args, cfg)
    all_obs = experiments.all_observations(image)
    gen = np.random.default_rng(module_seed(cfg.rng_seed, "sweep"))
    if args.n_obs and args.n_obs < len(all_obs):
        pick = np.sort(gen.choice(len(all_obs), size=args.n_obs, replace=False))
        all_obs = [all_obs[i] for i in pick]
    if args.seeds == "random":
        tuples = seedopt.random_seed_tuples(image.config.n_lfsrs, args.trials, module_seed(cfg.rng_seed, "seeds"))
    else:
        tuples = [resolve_seeds(cfg, image, args.seeds)[0]]
    rows, stats = [], []
    n_rows = image.config.n_rows
    for t, seeds in enumerate(tuples):
        expected, measured = experiments.scatter(image, seeds, all_obs)
        dev = measured - expected
        stats.append((float(np.abs(dev).max()), float(np.sqrt(np.mean(dev**2)))))
        for k, (e, m) in enumerate(zip(expected, measured)):
            r, i = divmod(k, len(all_obs))
            rows.append([t, " ".join(hexlist(seeds)), " ".join(map(str, all_obs[i].indices)), r, f"{e:.6f}", f"{m:.6f}"])
    write_csv(args.out, ["trial", "seeds", "observation", "row", "expected", "measured"], rows, cfg)
    s = np.array(stats)
    emit({
        "config": cfg.as_dict(),
        "seeds_mode": args.seeds,
        "trials": len(tuples),
        "observations": len(all_obs),
        "rows": n_rows,
        "max_abs_deviation": {"min": s[:, 0].min(), "median": float(np.median(s[:, 0])), "max": s[:, 0].max()},
        "rms_deviation": {"min": s[:, 1].min(), "median": float(np.median(s[:, 1])), "max": s[:, 1].max()},
        "csv": str(args.out),
    }, args.summary)


def cmd_seeds(args, cfg: ExperimentConfig) -> None:
    image = _load_or_random_image(args, cfg)
    seed = module_seed(cfg.rng_seed, "seedopt")
    obj = seedopt.default_objective(image, rng_seed=seed, metric=args.metric, reference="nominal")
    res = seedopt.search_seeds(obj, budget=args.budget, rng_seed=seed, restarts=cfg.restarts)
    base = seedopt.random_baseline(obj, args.baseline, module_seed(cfg.rng_seed, "baseline"))
    emit({
        "config": cfg.as_dict(),
        "objective": {
            "metric": obj.metric,
            "reference": obj.reference,
            "probes": int(len(obj.probes)),
            "description": "image byte tuples over all (or sampled) observations plus 64 random tuples",
        },
        "seeds": hexlist(res.seeds),
        "score": res.score,
        "method": res.method,
        "evaluations": res.evaluations,
        "baseline": {
            "n": int(len(base)),
            "min": float(base.min()),
            "median": float(np.median(base)),
            "max": float(base.max()),
        },
    }, args.out)


def cmd_energy(args, cfg: ExperimentConfig) -> None:
    params = cfg.energy_params()
    config = cfg.machine_config()
    if args.geometry:
        r, c, e = parse_geometry(args.geometry)
        config = MachineConfig(r, c, e)
    cycles = cfg.cycles if args.cycles is None else args.cycles
    report = energy.estimate(params, config, cycles, include_seed_load=args.seed_load)
    payload = {"config": cfg.as_dict(), "machine": asdict(config), "report": report.to_dict()}
    emit(payload, args.out)
    if not args.out:
        return
    print(f"inference {cycles} cycles: {report.inference:.4g} nJ")


def cmd_faults(args, cfg: ExperimentConfig) -> None:
    image = _load_or_random_image(args, cfg)
    obs = Observation(tuple(parse_bytes(args.obs)))
    seeds, _ = resolve_seeds(cfg, image, args.seeds)
    trace = run_inference(image, obs, seeds, args.cycles or cfg.cycles, cfg.fault_model())
    base = decide_max_count(trace)
    counts = np.sort(trace.counts)[::-1]
    margin = int(counts[0] - counts[1]) if len(counts) > 1 else int(counts[0])
    if args.k > trace.bits.size:
        raise BoundsError(f"cannot flip {args.k} of {trace.bits.size} bits")
    changed = 0
    for t in range(args.trials):
        faulty = inject_faults(trace, args.k, module_seed(cfg.rng_seed, f"faults{t}"))
        changed += decide_max_count(faulty).row != base.row
    emit({
        "config": cfg.as_dict(),
        "observation": list(obs.indices),
        "seeds": hexlist(seeds),
        "counts": trace.counts.tolist(),
        "decision": base.row,
        "margin": margin,
        "k": args.k,
        "trials": args.trials,
        "decisions_changed": int(changed),
        "guaranteed_stable": bool(margin >= 2 * args.k + 1),
    }, args.out)


def cmd_gesture_gen(args, cfg: ExperimentConfig) -> None:
    traces = gesture.generate_dataset(
        int(cfg.dataset["n_subjects"]), int(cfg.dataset["reps_per_class"]), module_seed(cfg.rng_seed, "dataset")
    )
    io.write_dataset_csv(traces, args.out)
    print(f"wrote {len(traces)} traces -> {args.out}")


def cmd_gesture_train(args, cfg: ExperimentConfig) -> None:
    traces = io.read_dataset_csv(args.data)
    train, _ = gesture.split_dataset(traces)
    model = gesture.train_traces(train, cfg.broadening)
    io.write_model_json(model, args.out, {
        "features": list(cfg.feature_list()),
        "n_bins": cfg.n_bins,
        "n_train": len(train),
        "config": cfg.as_dict(),
    })
    print(f"trained on {len(train)} traces -> {args.out}")


def cmd_gesture_eval(args, cfg: ExperimentConfig) -> None:
    traces = io.read_dataset_csv(args.data)
    model, meta = io.read_model_json(args.model)
    selected = tuple(meta.get("features", cfg.feature_list()))
    n_bins = int(meta.get("n_bins", cfg.n_bins))
    train, test = gesture.split_dataset(traces)
    table = gesture.discretize(model, selected, n_bins)
    image = compile_table(table)
    search = None
    if cfg.seeds == "optimized":
        train_obs, _ = experiments.observations_for(model, train, selected, n_bins)
        search = experiments.optimize_gesture_seeds(
            image, table, train_obs, cfg.restarts, module_seed(cfg.rng_seed, "seedopt"))
        seeds = search.seeds
    else:
        seeds, _ = resolve_seeds(cfg, image)
    test_obs, y = experiments.observations_for(model, test, selected, n_bins)
    ev = gesture.evaluate(image, table, test_obs, y, seeds, cfg.cycles, cfg.fault_model())
    run = experiments.GestureRun(model, table, image, tuple(seeds), search, ev, len(train), len(test))
    summary, rows = experiments.gesture_report(run, cfg.energy_params())
    if cfg.strategy == "max_count":
        rows = [r for r in rows if r[0] == "max_count"]
        summary.pop("first_one")
    elif cfg.strategy == "first_one":
        rows = [r for r in rows if r[0] == "first_one"]
        summary.pop("max_count")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary["config"] = cfg.as_dict()
    emit(summary, out / "eval.json")
    write_csv(out / "curve.csv", ["strategy", "cycles", "accuracy", "energy_nJ"],
              [[s, f"{c:.4f}", f"{a:.6f}", f"{e:.6f}"] for s, c, a, e in rows], cfg)
    print(f"oracle {summary['oracle_accuracy']:.4f}; results -> {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bayesmachine", description="Stochastic Bayesian machine simulator")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--rng-seed", type=int, help="global seed (overrides config)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("program", help="compile a likelihood CSV into a machine image")
    s.add_argument("--table", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--geometry", help="ROWSxCOLUMNSxENTRIES, e.g. 4x4x8")
    s.set_defaults(func=cmd_program)

    s = sub.add_parser("infer", help="run one observation through a machine image")
    s.add_argument("--image", required=True)
    s.add_argument("--obs", required=True, help="comma-separated entry index per column")
    s.add_argument("--seeds", help="optimized | random | byte list")
    s.add_argument("--cycles", type=int)
    s.add_argument("--trace-csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("sweep", help="machine output vs exact products over many observations")
    s.add_argument("--image", help="image file; a random 4x4x8 test image by default")
    s.add_argument("--seeds", default="random")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--n-obs", type=int, default=256, help="sample this many observations (0 = all)")
    s.add_argument("--out", required=True, help="scatter CSV")
    s.add_argument("--summary", help="summary JSON (stdout by default)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("seeds", help="optimize LFSR seeds for an image")
    s.add_argument("--image")
    s.add_argument("--metric", default="max_abs_deviation", choices=seedopt.METRICS)
    s.add_argument("--budget", type=int)
    s.add_argument("--baseline", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_seeds)

    s = sub.add_parser("energy", help="energy estimate for one inference")
    s.add_argument("--cycles", type=int)
    s.add_argument("--geometry")
    s.add_argument("--seed-load", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("faults", help="flip k output bits and check the decision")
    s.add_argument("--image")
    s.add_argument("--obs", required=True)
    s.add_argument("--seeds")
    s.add_argument("--cycles", type=int)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_faults)

    g = sub.add_parser("gesture", help="synthetic gesture recognition pipeline")
    gs = g.add_subparsers(dest="gesture_command", required=True)
    s = gs.add_parser("gen")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gesture_gen)
    s = gs.add_parser("train")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gesture_train)
    s = gs.add_parser("eval")
    s.add_argument("--data", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--strategy", choices=("max_count", "first_one", "both"))
    s.set_defaults(func=cmd_gesture_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            set_option(cfg, key.strip(), value.strip(), where="--set")
        if args.rng_seed is not None:
            cfg.rng_seed = args.rng_seed
        if getattr(args, "strategy", None):
            cfg.strategy = args.strategy
        cfg.validate()
        args.func(args, cfg)
    except BayesMachineError as exc:
        print(f"error[{exc.code}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
