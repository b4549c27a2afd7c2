"""Command-line front end: solve instances from files, run seeded Monte
Carlo sweeps that emit per-trial and CDF tables, benchmark runtime
scaling, and run the optimality verification battery.

Exit codes: 0 success, 1 verification failure, 2 input parse error,
3 invalid parameters.
"""

import argparse
import csv
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import DEFAULT_BRUTE_CAP, bcd, brute_force, cpp
from .channel_model import (
    Geometry,
    LinkBudget,
    RngStream,
    default_geometry,
    sample_channels,
)
from .core import (
    ChannelSet,
    InstanceError,
    ParameterError,
    PhaseConfig,
    signed_gap,
    snr_boost,
)
from .solver import breakpoints, initial_assignment, solve, solve_reduced, sweep

SEED_ENV_VAR = "IRSBF_SEED"
METHODS = ("optimal", "optimal-reduced", "cpp", "bcd", "brute")
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_BAD_PARAMS = 3


class InstanceParseError(Exception):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Parameters of one Monte Carlo run; defaults match the benchmark
    scenario (100 elements, binary shifts, far transmitter geometry)."""

    trials: int
    seed: int
    n_elements: int = 100
    k_levels: int = 2
    methods: tuple = ("optimal", "cpp", "bcd")
    geometry: Geometry = field(default_factory=default_geometry)
    link: LinkBudget = field(default_factory=LinkBudget)
    sort_kind: str = "bin"
    output_format: str = "csv"
    bcd_init: str = "zero"
    bcd_max_passes: int = 100
    brute_cap: int = DEFAULT_BRUTE_CAP
    workers: int = 1
    with_times: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.n_elements < 1:
            raise ParameterError("n must be at least 1")
        if self.k_levels < 2:
            raise ParameterError("k must be at least 2")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ParameterError(f"methods must be a non-empty subset of {METHODS}")
        if self.output_format not in ("csv", "json"):
            raise ParameterError("format must be csv or json")
        if self.bcd_init not in ("zero", "cpp"):
            raise ParameterError("bcd init must be zero or cpp")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")
        if "brute" in self.methods and self.k_levels ** self.n_elements > self.brute_cap:
            raise ParameterError(
                "brute method refused: k**n exceeds the brute-force cap"
            )


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    method: str
    boost: float
    boost_db: float
    solve_time_ns: int
    extra: str


def read_instance(path) -> ChannelSet:
    """Parse an instance file: one 're,im' row per channel, direct channel
    first, '#' lines ignored."""
    rows = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                parts = [p.strip() for p in text.split(",")]
                if len(parts) != 2 or "" in parts:
                    raise InstanceParseError(path, line_no, "expected exactly 're,im'")
                try:
                    rows.append(complex(float(parts[0]), float(parts[1])))
                except ValueError:
                    raise InstanceParseError(
                        path, line_no, f"could not parse {text!r} as two floats"
                    ) from None
    except OSError as exc:
        raise InstanceParseError(path, 0, f"cannot read file ({exc})") from None
    if len(rows) < 2:
        raise InstanceParseError(
            path, 0, "need one direct channel row and at least one reflected row"
        )
    return ChannelSet(rows[0], np.asarray(rows[1:], dtype=np.complex128))


def write_instance(path, channels: ChannelSet, comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write(f"{channels.direct.real!r},{channels.direct.imag!r}\n")
        for h in channels.reflected:
            fh.write(f"{h.real!r},{h.imag!r}\n")


def _zero_config(n: int, k: int) -> PhaseConfig:
    return PhaseConfig(k, np.full(n, k, dtype=np.int64))


def _apply_method(
    channels: ChannelSet,
    k: int,
    method: str,
    sort_kind: str,
    bcd_init: str,
    bcd_max_passes: int,
    brute_cap: int,
):
    """Run one method; returns (boost, shifts, extra-description)."""
    if method == "optimal":
        res = solve(channels, k, sort_kind)
        return res.boost, res.config.shifts, f"arcs={res.stats.arcs_evaluated}"
    if method == "optimal-reduced":
        res = solve_reduced(channels, k)
        return res.boost, res.config.shifts, f"arcs={res.stats.arcs_evaluated}"
    if method == "cpp":
        config = cpp(channels, k)
        return snr_boost(channels, config), config.shifts, ""
    if method == "bcd":
        init = cpp(channels, k) if bcd_init == "cpp" else _zero_config(channels.size, k)
        report = bcd(channels, k, init, bcd_max_passes)
        return (
            report.boost,
            report.config.shifts,
            f"passes={report.passes};converged={int(report.converged)}",
        )
    if method == "brute":
        res = brute_force(channels, k, brute_cap)
        return res.boost, res.config.shifts, f"configs={res.stats.arcs_evaluated}"
    raise ParameterError(f"unknown method {method!r}")


# ----------------------------------------------------------------------
# solve


def cmd_solve(
    input_path,
    k_levels: int,
    method: str = "optimal",
    sort_kind: str = "bin",
    bcd_init: str = "zero",
    bcd_max_passes: int = 100,
    brute_cap: int = DEFAULT_BRUTE_CAP,
    out=None,
) -> int:
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}")
    out = out or sys.stdout
    channels = read_instance(input_path)
    boost, shifts, extra = _apply_method(
        channels, k_levels, method, sort_kind, bcd_init, bcd_max_passes, brute_cap
    )
    print(f"method: {method}", file=out)
    print(f"elements: {channels.size}  k_levels: {k_levels}", file=out)
    print("shifts: " + " ".join(str(s) for s in shifts), file=out)
    print(f"boost: {boost!r}", file=out)
    print(f"boost_db: {10.0 * math.log10(boost)!r}", file=out)
    if method in ("optimal", "optimal-reduced"):
        res = (
            solve(channels, k_levels, sort_kind)
            if method == "optimal"
            else solve_reduced(channels, k_levels)
        )
        print(
            f"arc_index: {res.arc_index}  arcs_evaluated: {res.stats.arcs_evaluated}"
            f"  distinct_breakpoints: {res.stats.distinct_breakpoints}"
            f"  sort: {res.stats.sort_kind}",
            file=out,
        )
    elif extra:
        print(f"extra: {extra}", file=out)
    return EXIT_OK


# ----------------------------------------------------------------------
# simulate


def _run_trial(payload) -> list:
    (
        seed,
        trial_id,
        n,
        k,
        methods,
        tx,
        irs,
        rx,
        sort_kind,
        bcd_init,
        bcd_max_passes,
        brute_cap,
    ) = payload
    geom = Geometry(np.asarray(tx), np.asarray(irs), np.asarray(rx))
    channels = sample_channels(RngStream(seed, trial_id), geom, n)
    records = []
    for method in methods:
        start = time.perf_counter_ns()
        boost, _, extra = _apply_method(
            channels, k, method, sort_kind, bcd_init, bcd_max_passes, brute_cap
        )
        elapsed = time.perf_counter_ns() - start
        records.append(
            TrialRecord(trial_id, method, boost, 10.0 * math.log10(boost), elapsed, extra)
        )
    return records


def run_simulation(cfg: ExperimentConfig) -> list:
    """All trial records, sorted by (trial_id, method order); identical
    output for any worker count because every trial is keyed only by
    (seed, trial_id)."""
    payloads = [
        (
            cfg.seed,
            trial_id,
            cfg.n_elements,
            cfg.k_levels,
            tuple(cfg.methods),
            tuple(cfg.geometry.tx),
            tuple(cfg.geometry.irs),
            tuple(cfg.geometry.rx),
            cfg.sort_kind,
            cfg.bcd_init,
            cfg.bcd_max_passes,
            cfg.brute_cap,
        )
        for trial_id in range(cfg.trials)
    ]
    if cfg.workers == 1:
        batches = [_run_trial(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_run_trial, payloads, chunksize=16))
    batches.sort(key=lambda recs: recs[0].trial_id)
    return [rec for batch in batches for rec in batch]


def empirical_cdf(records, methods) -> dict:
    """Per method: sorted (boost_db, cumulative probability) pairs."""
    out = {}
    for method in methods:
        values = sorted(r.boost_db for r in records if r.method == method)
        out[method] = [
            (v, (i + 1) / len(values)) for i, v in enumerate(values)
        ]
    return out


def simulation_paths(output, output_format: str) -> list:
    base = Path(output)
    stem = base.with_suffix("") if base.suffix else base
    if output_format == "json":
        return [stem.parent / (stem.name + ".json")]
    return [
        stem.parent / (stem.name + "_trials.csv"),
        stem.parent / (stem.name + "_cdf.csv"),
    ]


def cmd_simulate(cfg: ExperimentConfig, output) -> int:
    records = run_simulation(cfg)
    cdf = empirical_cdf(records, cfg.methods)
    paths = simulation_paths(output, cfg.output_format)
    if cfg.output_format == "json":
        doc = {
            "n_elements": cfg.n_elements,
            "k_levels": cfg.k_levels,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "methods": list(cfg.methods),
            "records": [
                {
                    "trial_id": r.trial_id,
                    "method": r.method,
                    "boost": r.boost,
                    "boost_db": r.boost_db,
                    "extra": r.extra,
                    **({"solve_time_ns": r.solve_time_ns} if cfg.with_times else {}),
                }
                for r in records
            ],
            "cdf": {m: [[v, p] for v, p in pairs] for m, pairs in cdf.items()},
        }
        paths[0].write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    else:
        with open(paths[0], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = ["trial_id", "method", "boost", "boost_db"]
            if cfg.with_times:
                header.append("solve_time_ns")
            writer.writerow(header + ["extra"])
            for r in records:
                row = [r.trial_id, r.method, repr(r.boost), repr(r.boost_db)]
                if cfg.with_times:
                    row.append(r.solve_time_ns)
                writer.writerow(row + [r.extra])
        with open(paths[1], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "boost_db", "cum_prob"])
            for method in cfg.methods:
                for value, prob in cdf[method]:
                    writer.writerow([method, repr(value), repr(prob)])
    print(
        f"simulate: {cfg.trials} trials, n={cfg.n_elements}, k={cfg.k_levels}, "
        f"methods={','.join(cfg.methods)} -> " + ", ".join(str(p) for p in paths)
    )
    return EXIT_OK


# ----------------------------------------------------------------------
# bench


def cmd_bench(
    n_list,
    k_levels: int,
    repeats: int,
    seed: int,
    methods=("optimal", "cpp", "bcd"),
    sort_kind: str = "bin",
    geometry: Geometry | None = None,
    brute_cap: int = DEFAULT_BRUTE_CAP,
    output=None,
    out=None,
) -> int:
    """Median/min wall time per (n, method) over `repeats` runs; channel
    generation is excluded from the timed region."""
    if repeats < 1:
        raise ParameterError("repeats must be at least 1")
    if any(n < 1 for n in n_list):
        raise ParameterError("every n must be at least 1")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ParameterError(f"methods must be a subset of {METHODS}")
    geometry = geometry or default_geometry()
    rows = []
    for n in n_list:
        channels = sample_channels(RngStream(seed, n), geometry, n)
        for method in methods:
            times = []
            for _ in range(repeats):
                start = time.perf_counter_ns()
                _apply_method(channels, k_levels, method, sort_kind, "zero", 100, brute_cap)
                times.append(time.perf_counter_ns() - start)
            rows.append((n, method, int(statistics.median(times)), min(times)))
    lines = ["n,method,median_ns,min_ns"]
    lines += [f"{n},{m},{med},{mn}" for n, m, med, mn in rows]
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        print(text, end="", file=out or sys.stdout)
    return EXIT_OK


# ----------------------------------------------------------------------
# verify


def _unit_instance(gen: np.random.Generator, n: int) -> ChannelSet:
    phases = gen.uniform(0.0, 2.0 * math.pi, size=n + 1)
    values = np.exp(1j * phases)
    return ChannelSet(complex(values[0]), values[1:])


def _verify_instance(channels: ChannelSet, k: int, brute_cap: int, counts: dict) -> str | None:
    """Run every optimality/consistency check; returns a description of
    the first violation or None."""
    bps = breakpoints(channels, k, "bin")
    res = sweep(channels, bps, k)
    ref = brute_force(channels, k, brute_cap)
    if not math.isclose(res.boost, ref.boost, rel_tol=1e-9, abs_tol=0.0):
        return f"sweep boost {res.boost!r} != brute-force boost {ref.boost!r}"
    counts["oracle"] += 1

    red = solve_reduced(channels, k)
    if not math.isclose(red.boost, res.boost, rel_tol=1e-12, abs_tol=0.0):
        return f"reduced boost {red.boost!r} != sweep boost {res.boost!r}"
    counts["reduced"] += 1

    lam = bps.distinct_angles
    lo = lam[res.arc_index]
    hi = lam[res.arc_index + 1] if res.arc_index + 1 < lam.size else lam[0] + 2.0 * math.pi
    offset = (res.composite_phase - lo) % (2.0 * math.pi)
    if not (1e-9 < offset < (hi - lo) - 1e-9):
        return f"optimal direction {res.composite_phase!r} not inside arc ({lo!r}, {hi!r})"
    counts["arc_interior"] += 1

    again = initial_assignment(channels, k, res.composite_phase)
    if not np.array_equal(again.shifts, res.config.shifts):
        return "closest-rotation rule at the optimal direction changed the config"
    counts["fixed_point"] += 1

    window = 2.0 * math.pi / k
    for tag, r in (("sweep", res), ("reduced", red)):
        gap = abs(signed_gap(r.composite_phase - channels.direct_phase))
        if not gap < window:
            return f"{tag} direction deviates from the direct channel by {gap!r} >= {window!r}"
    counts["direction_window"] += 1

    report = bcd(channels, k, _zero_config(channels.size, k), 100)
    if report.boost > ref.boost * (1.0 + 1e-9):
        return "coordinate descent exceeded the exhaustive optimum"
    counts["bcd"] += 1
    return None


def cmd_verify(
    trials: int,
    n_max: int,
    k_set,
    seed: int,
    brute_cap: int = DEFAULT_BRUTE_CAP,
    replay_path=None,
    out=None,
) -> int:
    """Randomized battery asserting that the sweep solver matches the
    exhaustive oracle and satisfies its structural invariants.

    Combinations with k**n above the brute-force cap are skipped (noted
    on output); if nothing at all is feasible the run is refused.
    """
    out = out or sys.stdout
    if trials < 1 or n_max < 1:
        raise ParameterError("trials and n_max must be at least 1")
    k_set = sorted(set(int(k) for k in k_set))
    if not k_set or min(k_set) < 2:
        raise ParameterError("k values must all be at least 2")
    combos = [(n, k) for k in k_set for n in range(1, n_max + 1)]
    feasible = [(n, k) for n, k in combos if k ** n <= brute_cap]
    for n, k in combos:
        if (n, k) not in feasible:
            print(f"skip n={n} k={k}: k**n exceeds brute cap {brute_cap}", file=out)
    if not feasible:
        raise ParameterError("no (n, k) combination fits under the brute-force cap")

    counts = {
        "oracle": 0,
        "reduced": 0,
        "arc_interior": 0,
        "fixed_point": 0,
        "direction_window": 0,
        "bcd": 0,
    }
    checked = 0
    for combo_id, (n, k) in enumerate(feasible):
        for trial in range(trials):
            stream = RngStream(seed, combo_id * trials + trial)
            if trial % 2 == 0:
                channels = _unit_instance(stream.generator(), n)
                family = "unit"
            else:
                channels = sample_channels(stream, default_geometry(), n)
                family = "model"
            failure = _verify_instance(channels, k, brute_cap, counts)
            checked += 1
            if failure:
                path = replay_path or "verify_failure.csv"
                write_instance(
                    path,
                    channels,
                    comments=[
                        f"verify failure: {failure}",
                        f"n={n} k={k} family={family} seed={seed} "
                        f"stream={combo_id * trials + trial}",
                    ],
                )
                print(f"FAIL n={n} k={k} ({family}): {failure}", file=out)
                print(f"instance written to {path} for replay", file=out)
                return EXIT_VERIFY_FAILED
    print(f"verified {checked} instances over {len(feasible)} (n, k) combinations", file=out)
    for name, count in counts.items():
        print(f"  {name}: {count} ok", file=out)
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing


def _parse_geometry(text: str) -> Geometry:
    try:
        points = [
            tuple(float(v) for v in chunk.split(",")) for chunk in text.split(";")
        ]
        if len(points) != 3 or any(len(p) != 3 for p in points):
            raise ValueError
    except ValueError:
        raise ParameterError(
            "geometry must be 'x,y,z;x,y,z;x,y,z' for tx, surface, rx"
        ) from None
    return Geometry(*points)


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"{SEED_ENV_VAR} must be an integer") from None
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsbf",
        description="Discrete phase-shift beamforming: exact linear-time "
        "solver, baselines, and Monte Carlo experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (falls back to ${SEED_ENV_VAR}, then 0)")
        p.add_argument("--sort", choices=("bin", "comparison"), default="bin",
                       help="breakpoint sorting strategy for the optimal solver")
        p.add_argument("--brute-cap", type=int, default=DEFAULT_BRUTE_CAP,
                       help="refuse brute-force enumeration beyond this many configs")

    p_solve = sub.add_parser("solve", help="solve one instance from a channel file")
    p_solve.add_argument("input", help="CSV instance file: 're,im' per row, direct first")
    p_solve.add_argument("--k", type=int, required=True, help="number of phase levels")
    p_solve.add_argument("--method", choices=METHODS, default="optimal")
    p_solve.add_argument("--bcd-init", choices=("zero", "cpp"), default="zero")
    add_common(p_solve)
    p_solve.set_defaults(func=_cli_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo SNR-boost experiment")
    p_sim.add_argument("--n", type=int, default=100, help="reflective elements")
    p_sim.add_argument("--k", type=int, default=2, help="number of phase levels")
    p_sim.add_argument("--trials", type=int, default=1000)
    p_sim.add_argument("--methods", default="optimal,cpp,bcd",
                       help=f"comma list from {','.join(METHODS)}")
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sim.add_argument("--output", required=True,
                       help="output prefix: writes <prefix>_trials.csv and "
                            "<prefix>_cdf.csv (or <prefix>.json)")
    p_sim.add_argument("--geometry", default=None,
                       help="'x,y,z;x,y,z;x,y,z' for tx, surface, rx")
    p_sim.add_argument("--tx-dbm", type=float, default=30.0)
    p_sim.add_argument("--noise-dbm", type=float, default=-90.0)
    p_sim.add_argument("--bcd-init", choices=("zero", "cpp"), default="zero")
    p_sim.add_argument("--workers", type=int, default=1,
                       help="parallel trial workers (output is worker-count independent)")
    p_sim.add_argument("--with-times", action="store_true",
                       help="include per-trial solve times (breaks byte-level "
                            "reproducibility of the output files)")
    add_common(p_sim)
    p_sim.set_defaults(func=_cli_simulate)

    p_bench = sub.add_parser("bench", help="runtime scaling benchmark")
    p_bench.add_argument("--n-list", default="1000,10000,100000",
                         help="comma list of element counts")
    p_bench.add_argument("--k", type=int, default=2)
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--methods", default="optimal,cpp,bcd")
    p_bench.add_argument("--output", default=None, help="CSV path (default: stdout)")
    p_bench.add_argument("--geometry", default=None)
    add_common(p_bench)
    p_bench.set_defaults(func=_cli_bench)

    p_verify = sub.add_parser("verify", help="optimality verification battery")
    p_verify.add_argument("--trials", type=int, default=100,
                          help="instances per (n, k) combination")
    p_verify.add_argument("--n-max", type=int, default=8)
    p_verify.add_argument("--k-set", default="2,3,4,8", help="comma list of k values")
    p_verify.add_argument("--output", default=None,
                          help="replay file path for a failing instance")
    add_common(p_verify)
    p_verify.set_defaults(func=_cli_verify)
    return parser


def _cli_solve(args) -> int:
    return cmd_solve(
        args.input,
        args.k,
        method=args.method,
        sort_kind=args.sort,
        bcd_init=args.bcd_init,
        brute_cap=args.brute_cap,
    )


def _cli_simulate(args) -> int:
    geometry = _parse_geometry(args.geometry) if args.geometry else default_geometry()
    cfg = ExperimentConfig(
        trials=args.trials,
        seed=_seed_from(args),
        n_elements=args.n,
        k_levels=args.k,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        geometry=geometry,
        link=LinkBudget(args.tx_dbm, args.noise_dbm),
        sort_kind=args.sort,
        output_format=args.format,
        bcd_init=args.bcd_init,
        brute_cap=args.brute_cap,
        workers=args.workers,
        with_times=args.with_times,
    )
    return cmd_simulate(cfg, args.output)


def _cli_bench(args) -> int:
    try:
        n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise ParameterError("--n-list must be a comma list of integers") from None
    geometry = _parse_geometry(args.geometry) if args.geometry else default_geometry()
    return cmd_bench(
        n_list,
        args.k,
        args.repeats,
        _seed_from(args),
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        sort_kind=args.sort,
        geometry=geometry,
        brute_cap=args.brute_cap,
        output=args.output,
    )


def _cli_verify(args) -> int:
    try:
        k_set = [int(v) for v in args.k_set.split(",") if v.strip()]
    except ValueError:
        raise ParameterError("--k-set must be a comma list of integers") from None
    return cmd_verify(
        args.trials,
        args.n_max,
        k_set,
        _seed_from(args),
        brute_cap=args.brute_cap,
        replay_path=args.output,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except (ParameterError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
