"""Command-line front end: benchmarks, cost-model reports, traces, toy task.

Subcommands
  median-bench   oblivious selection vs. the bitonic baseline (CSV + JSON)
  pipeline       staged cost model for the three drop schemes (CSV + JSON)
  trace          access-pattern trace of one selection run + verifier
  toytask        planted-signal retention comparison of the two scorers
  backend-bench  compiled vs. numpy kernel backend timings

Exit codes: 0 success, 1 verification failure, 2 I/O or config error.
Outputs are deterministic for a fixed config (timing benchmarks excepted:
backend-bench measures wall time by design).
"""
import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import _kernels
from .config import ConfigError, RunConfig, config_from_mapping, load_config
from .errors import DomainError, ProtocolError
from .median import (bitonic_comparator_count, bitonic_median,
                     oblivious_median, traces_equal, verify_partition_trace)
from .oracles import sort_median
from .pipeline import (PROFILES, measure_drop_machinery, model_scheme_cost)
from .protocol import Protocol
from .ring import decode_fixed, encode_fixed
from .scoring import synthetic_scores
from .toytask import ToyTaskConfig, paired_comparison, run_batch


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.9g}"
    return x


# -- median benchmark -----------------------------------------------------------


def _bench_one_n(args):
    cfg_map, n = args
    cfg = config_from_mapping(cfg_map).validate()
    params = cfg.ring_params()
    med_cfg = cfg.median_config()
    seeds = np.random.SeedSequence((cfg.seed, n)).generate_state(cfg.trials)
    sel_stats, fallbacks, exact = [], 0, 0
    bit_stats = []
    for s in seeds:
        rng = np.random.default_rng(int(s))
        scores = synthetic_scores(rng, n, cfg.d_model, cfg.heads,
                                  n_exp=cfg.n_exp, offset=cfg.score_offset)
        truth = sort_median(decode_fixed(encode_fixed(scores, params), params))

        proto = Protocol(params, seed=int(s), cost_table=cfg.cost_table())
        res = oblivious_median(proto, proto.share_fixed(scores), med_cfg)
        t = proto.ledger.total
        sel_stats.append((t.cmp, t.mux, t.rounds, t.bytes, res.rounds))
        fallbacks += res.fell_back
        exact += abs(proto.reconstruct_fixed(res.median) - truth) < 2.0 ** (
            -params.frac)

        proto_b = Protocol(params, seed=int(s), cost_table=cfg.cost_table())
        bitonic_median(proto_b, proto_b.share_fixed(scores))
        tb = proto_b.ledger.total
        bit_stats.append((tb.cmp, tb.mux, tb.rounds, tb.bytes))
    return n, sel_stats, bit_stats, fallbacks, exact


def cmd_median_bench(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    cfg_map = _cfg_as_mapping(cfg)
    jobs = [(cfg_map, n) for n in cfg.n_list]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_bench_one_n, jobs))
    else:
        results = [_bench_one_n(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    profiles = list(PROFILES.values())
    if cfg.profile == "custom":
        profiles.append(cfg.net_profile())
    header = (["method", "n", "trials", "mean_cmp", "min_cmp", "max_cmp",
               "mean_mux", "mean_rounds_protocol", "mean_rounds_search",
               "fallback_rate", "exact_rate"]
              + [f"time_{p.name}_s" for p in profiles]
              + ["ratio_cmp_vs_bitonic", "ratio_ops_vs_bitonic"])
    rows = []
    summary = {}
    for n, sel, bit, fallbacks, exact in results:
        sel = np.array(sel, dtype=np.float64)
        bit = np.array(bit, dtype=np.float64)
        mean_sel = sel.mean(axis=0)
        mean_bit = bit.mean(axis=0)
        times_sel = [mean_sel[3] * 8 / p.bandwidth + mean_sel[2] * p.latency
                     for p in profiles]
        times_bit = [mean_bit[3] * 8 / p.bandwidth + mean_bit[2] * p.latency
                     for p in profiles]
        ratio_cmp = mean_bit[0] / mean_sel[0]
        ratio_ops = (mean_bit[0] + mean_bit[1]) / (mean_sel[0] + mean_sel[1])
        rows.append(["select", n, cfg.trials, _fmt(mean_sel[0]),
                     int(sel[:, 0].min()), int(sel[:, 0].max()), _fmt(mean_sel[1]),
                     _fmt(mean_sel[2]), _fmt(sel[:, 4].mean()),
                     _fmt(fallbacks / cfg.trials), _fmt(exact / cfg.trials)]
                    + [_fmt(t) for t in times_sel]
                    + [_fmt(ratio_cmp), _fmt(ratio_ops)])
        rows.append(["bitonic", n, cfg.trials, _fmt(mean_bit[0]),
                     int(bit[:, 0].min()), int(bit[:, 0].max()), _fmt(mean_bit[1]),
                     _fmt(mean_bit[2]), "", "0", "1"]
                    + [_fmt(t) for t in times_bit] + ["1", "1"])
        summary[str(n)] = {
            "select_mean_cmp": float(mean_sel[0]),
            "select_mean_mux": float(mean_sel[1]),
            "select_mean_rounds": float(sel[:, 4].mean()),
            "bitonic_cmp": int(mean_bit[0]),
            "bitonic_mux": int(mean_bit[1]),
            "bitonic_cmp_expected": bitonic_comparator_count(
                1 << int(np.ceil(np.log2(n)))),
            "ratio_cmp": float(ratio_cmp),
            "ratio_ops_total": float(ratio_ops),
            "fallback_rate": fallbacks / cfg.trials,
            "exact_rate": exact / cfg.trials,
        }
    _write_csv(os.path.join(cfg.out_dir, "median_bench.csv"), header, rows)
    _write_json(os.path.join(cfg.out_dir, "median_bench.json"), summary)
    if cfg.trace:
        for n in cfg.n_list:
            res, lines = _traced_run(cfg, cfg.seed, n=n)
            path = os.path.join(cfg.out_dir, f"median_trace_{n}.jsonl")
            with open(path, "w", encoding="utf-8") as fh:
                for line in lines:
                    fh.write(json.dumps(line, sort_keys=True) + "\n")
    return 0


# -- pipeline cost model ----------------------------------------------------------


def cmd_pipeline(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    model = cfg.stage_model()
    plan = cfg.drop_plan()
    profile = cfg.net_profile()
    schemes = cfg.schemes()
    halving = [cfg.m0]
    for layer in plan.drop_layers:
        halving.append(halving[-1] // 2)
    rows = []
    summary = {"m0": cfg.m0, "profile": profile.name,
               "schedule": plan.schedule(cfg.m0), "halving": halving,
               "totals": {}, "speedup": {}}
    for scheme in schemes:
        machinery = measure_drop_machinery(
            cfg.seed, cfg.m0, plan, scheme, cfg.ring_params(),
            n_exp=cfg.n_exp, offset=cfg.score_offset,
            median_cfg=cfg.median_config(), d_model=cfg.d_model, heads=cfg.heads)
        report = model_scheme_cost(cfg.m0, plan, scheme, model, profile, machinery)
        for r in report.rows:
            rows.append([scheme, profile.name, cfg.m0, r.layer, r.stage, r.tokens,
                         _fmt(r.seconds), r.cmp, r.mux, r.nbytes])
        summary["totals"][scheme] = report.total_seconds
    if "baseline" in summary["totals"]:
        base = summary["totals"]["baseline"]
        for scheme, total in summary["totals"].items():
            summary["speedup"][scheme] = base / total if total else None
    _write_csv(os.path.join(cfg.out_dir, "pipeline.csv"),
               ["scheme", "profile", "m0", "layer", "stage", "tokens",
                "time_s", "cmp", "mux", "bytes"], rows)
    _write_json(os.path.join(cfg.out_dir, "pipeline.json"), summary)
    return 0


# -- trace dump and verification ----------------------------------------------------


def _traced_run(cfg: RunConfig, seed, n=None):
    params = cfg.ring_params()
    proto = Protocol(params, seed=seed, cost_table=cfg.cost_table())
    rng = np.random.default_rng(seed)
    scores = synthetic_scores(rng, n or cfg.trace_n, cfg.d_model, cfg.heads,
                              n_exp=cfg.n_exp, offset=cfg.score_offset)
    proto.start_trace()
    res = oblivious_median(proto, proto.share_fixed(scores), cfg.median_config())
    trace = proto.stop_trace()
    return res, trace.as_lines()


def cmd_trace(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    res, lines = _traced_run(cfg, cfg.seed)
    path = os.path.join(cfg.out_dir, "trace.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    ok, msg = verify_partition_trace(lines, cfg.trace_n, res.rounds)
    # hunt for a second input with the same revealed round count
    pair_seed, pair_equal = None, None
    for cand in range(cfg.seed + 1, cfg.seed + 2000):
        res2, lines2 = _traced_run(cfg, cand)
        if res2.rounds == res.rounds and not res2.fell_back:
            pair_seed = cand
            pair_equal = traces_equal(lines, lines2)
            break
    verdict = {
        "n": cfg.trace_n,
        "rounds": res.rounds,
        "coverage_ok": ok,
        "coverage_message": msg,
        "pair_seed": pair_seed,
        "pair_trace_equal": pair_equal,
    }
    _write_json(os.path.join(cfg.out_dir, "trace_verify.json"), verdict)
    if not ok or pair_equal is False:
        print("trace verification FAILED", file=sys.stderr)
        return 1
    return 0


# -- toy retention task ---------------------------------------------------------------


def cmd_toytask(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    task = ToyTaskConfig(signal_count=cfg.toy_signal,
                         outlier_rows=cfg.toy_outlier_rows,
                         outlier_mag=cfg.toy_outlier_mag)
    rows = []
    for scorer in ("maxnorm", "expsum"):
        for label, drops, outliers in (("mild-1drop", 1, False),
                                       ("deep-3drop", 3, False),
                                       ("deep-3drop-outliers", 3, True)):
            ret, acc, _ = run_batch(cfg.seed, task, scorer, drops, outliers,
                                    cfg.toy_runs)
            rows.append([scorer, label,
                         "N/A" if ret is None else _fmt(ret), _fmt(acc)])
    pairs = paired_comparison(cfg.seed, task, 3, True, cfg.toy_runs)
    wins = sum(1 for a, b in pairs if a is not None and a >= b)
    summary = {
        "runs": cfg.toy_runs,
        "deep_outlier_maxnorm_ge_expsum": (wins / len(pairs)) if pairs else None,
    }
    _write_csv(os.path.join(cfg.out_dir, "toytask.csv"),
               ["scorer", "schedule", "retention", "probe_accuracy"], rows)
    _write_json(os.path.join(cfg.out_dir, "toytask.json"), summary)
    return 0


# -- kernel backend benchmark ----------------------------------------------------------


def cmd_backend_bench(cfg: RunConfig):
    os.makedirs(cfg.out_dir, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    mask = (1 << cfg.ell) - 1
    backends = ["numpy"]
    try:
        _kernels.get_backend("c")
        backends.append("c")
    except ImportError:
        pass
    rows = []
    base_times = {}
    for size in (64, 1024, 65536):
        a = rng.integers(0, mask, size=size, dtype=np.uint64)
        b = rng.integers(0, mask, size=size, dtype=np.uint64)
        cases = {
            "mul": lambda be: be.mul(a, b, mask),
            "lt_signed": lambda be: be.lt_signed(a, b, cfg.ell),
            "trunc_round": lambda be: be.trunc_round(a, cfg.frac_bits, cfg.ell),
            "beaver_combine": lambda be: be.beaver_combine(a, b, a, b, a, True, mask),
        }
        for name, fn in cases.items():
            for bname in backends:
                be = _kernels.get_backend(bname)
                fn(be)  # warm up
                reps = max(3, int(200000 / size))
                t0 = time.perf_counter()
                for _ in range(reps):
                    fn(be)
                per_call = (time.perf_counter() - t0) / reps
                base_times.setdefault((name, size), per_call)
                rows.append([name, size, bname, _fmt(per_call),
                             _fmt(base_times[(name, size)] / per_call)])
    _write_csv(os.path.join(cfg.out_dir, "backend_bench.csv"),
               ["kernel", "size", "backend", "seconds_per_call",
                "speedup_vs_numpy"], rows)
    print(f"active backend: {_kernels.backend_name()}")
    return 0


# -- argument plumbing ---------------------------------------------------------------


def _cfg_as_mapping(cfg: RunConfig):
    out = {}
    for name in RunConfig.__dataclass_fields__:
        value = getattr(cfg, name)
        if value is None:
            continue
        if isinstance(value, tuple):
            out[name] = ",".join(str(v) for v in value)
        else:
            out[name] = str(value)
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mpcdrop",
        description="secure token-drop simulator and cost benchmark")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("median-bench", "oblivious median selection vs bitonic baseline"),
        ("pipeline", "staged cost model for the drop schemes"),
        ("trace", "dump and verify one selection access-pattern trace"),
        ("toytask", "planted-signal retention comparison"),
        ("backend-bench", "kernel backend timing comparison"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="DIR", dest="out_dir")
        p.add_argument("--profile", choices=("lan", "wan", "mobile", "custom"))
        p.add_argument("--bandwidth", type=float, help="bits/s for --profile custom")
        p.add_argument("--latency", type=float, help="one-way seconds for custom")
        p.add_argument("--n", metavar="LIST", help="comma-separated vector lengths")
        p.add_argument("--trials", type=int, metavar="U32")
        p.add_argument("--scheme", choices=("baseline", "post", "pre", "all"))
        p.add_argument("--trace", action="store_true", default=None)
        p.add_argument("--workers", type=int)
        p.add_argument("--m0", type=int)
        p.add_argument("--pivot-mode", choices=("interp", "avg"), dest="pivot_mode")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       dest="overrides", help="override any config key")
    return parser


_FLAG_FIELDS = ("seed", "out_dir", "profile", "bandwidth", "latency", "trials",
                "scheme", "trace", "workers", "m0", "pivot_mode")


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    for item in getattr(args, "overrides", []):
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = str(value)
    if getattr(args, "n", None):
        overrides["n_list"] = args.n
    if overrides:
        cfg = config_from_mapping(overrides, cfg)
    return cfg.validate()


_COMMANDS = {
    "median-bench": cmd_median_bench,
    "pipeline": cmd_pipeline,
    "trace": cmd_trace,
    "toytask": cmd_toytask,
    "backend-bench": cmd_backend_bench,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DomainError, ProtocolError) as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
