"""Experiment harness: paired-seed episode batches and CSV emission.

Every experiment derives one seed per (scenario, repetition) and reuses
it for all strategies and sweep points, so rows within a table share
worker parameter draws and straggler selections.  Output is CSV with a
key=value manifest sidecar; nothing in either file depends on the clock,
so identical configurations reproduce byte-identical files.
"""

import configparser
import math
import os
import zlib

import numpy as np

from . import __version__
from .engine import EpisodeMetrics, run_episode
from .scenarios import (
    DEFAULT_SCALE,
    SCENARIO_SIZES,
    ScenarioConfig,
    benchmark_scenario,
)

STRATEGY_ORDER = ("uncoded", "traditional", "dynamic")

EXPERIMENT_KINDS = ("sweep-b", "compare", "stress", "success-rate")


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value, or range)."""


def episode_seed(base_seed: int, scenario_name: str, rep: int) -> int:
    """Stable episode seed shared by every strategy at (scenario, rep)."""
    tag = zlib.crc32(scenario_name.encode("utf-8"))
    return (base_seed * 1_000_003 + tag * 97 + rep) & ((1 << 63) - 1)


def run_reps(scenario: ScenarioConfig, strategy: str, reps: int,
             base_seed: int, *, b=None, s=None,
             horizon=None) -> list[EpisodeMetrics]:
    return [
        run_episode(scenario, strategy,
                    episode_seed(base_seed, scenario.name, rep),
                    b=b, s=s, horizon=horizon, keep_result=False)
        for rep in range(reps)
    ]


def _mean_std(values) -> tuple[float, float]:
    if len(values) == 1:
        return float(values[0]), 0.0
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1))


# -- the four experiments ------------------------------------------------------


def sweep_b(scenario: ScenarioConfig, b_values, reps: int, base_seed: int):
    """Dynamic-strategy mean/std completion time for each piece length.

    Returns (rows, argmin_b); rows keep the given b order, argmin ties go
    to the earliest row.
    """
    b_values = list(b_values)
    if not b_values:
        raise ConfigError("b_values must not be empty")
    for b in b_values:
        if not 1 <= b <= scenario.n2:
            raise ConfigError(f"b={b} out of range [1, {scenario.n2}]")
    rows = []
    for b in b_values:
        metrics = run_reps(scenario, "dynamic", reps, base_seed, b=b)
        mean, std = _mean_std([m.completion_time for m in metrics])
        rows.append({"b": b, "mean_time_s": mean, "std_time_s": std})
    argmin_b = min(rows, key=lambda r: r["mean_time_s"])["b"]
    return rows, argmin_b


def default_sweep_grid(n2: int) -> list[int]:
    """Five roughly geometric piece lengths ending at n2 (whole vector)."""
    grid = [max(1, n2 // 16), max(1, n2 // 8), max(1, n2 // 4),
            max(1, n2 // 2), n2]
    return sorted(set(grid))


def compare_strategies(scenario: ScenarioConfig, reps: int, base_seed: int,
                       ratio: float = 0.5, mode: str = "delayed"):
    """Paired-seed mean/std completion time for all three strategies."""
    scn = scenario.replace(straggler_ratio=ratio, straggler_mode=mode)
    rows = []
    for strategy in STRATEGY_ORDER:
        metrics = run_reps(scn, strategy, reps, base_seed)
        mean, std = _mean_std([m.completion_time for m in metrics])
        rows.append({"strategy": strategy, "mean_time_s": mean,
                     "std_time_s": std})
    return rows


def stress_test(scenario: ScenarioConfig, ratios, reps: int, base_seed: int,
                mode: str = "delayed"):
    """Paired-seed sweep of straggler ratio for all three strategies."""
    ratios = list(ratios)
    for r in ratios:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"straggler ratio {r} out of range [0, 1]")
    rows = []
    for ratio in ratios:
        scn = scenario.replace(straggler_ratio=ratio, straggler_mode=mode)
        for strategy in STRATEGY_ORDER:
            metrics = run_reps(scn, strategy, reps, base_seed)
            mean, std = _mean_std([m.completion_time for m in metrics])
            rows.append({"ratio": ratio, "strategy": strategy,
                         "mean_time_s": mean, "std_time_s": std})
    return rows


def success_rate(scenario: ScenarioConfig, runs: int, base_seed: int,
                 mode: str = "fail"):
    """Fraction of successful episodes under uniformly drawn failure counts.

    Each run draws a failure count uniformly from 0..P and fails that many
    workers at t=0.  Fail/leave episodes terminate on their own when the
    event queue drains, so no pilot episode or horizon is needed.

    Returns (rows, details) where details[strategy] is a list of
    (failure_count, success) pairs, one per run.
    """
    if mode not in ("fail", "leave"):
        raise ConfigError("success-rate mode must be 'fail' or 'leave'")
    scn = scenario.replace(failure_count_uniform=True, straggler_mode=mode,
                           straggler_ratio=0.0)
    rows = []
    details: dict[str, list[tuple[int, bool]]] = {}
    for strategy in STRATEGY_ORDER:
        detail = []
        for rep in range(runs):
            m = run_episode(scn, strategy,
                            episode_seed(base_seed, scn.name, rep),
                            horizon=math.inf, keep_result=False)
            detail.append((m.n_stragglers, m.success))
        details[strategy] = detail
        successes = sum(ok for _, ok in detail)
        rows.append({"strategy": strategy,
                     "success_rate": successes / runs,
                     "successes": successes, "runs": runs})
    return rows, details


# -- analytic success probabilities (uniform failure count 0..P) ---------------


def uncoded_success_probability(p: int) -> float:
    """Succeeds only with zero failures."""
    return 1.0 / (p + 1)


def traditional_tolerated_failures(n1: int, n2: int, s: int, p: int) -> int:
    """Largest failure count the fixed-redundancy code survives."""
    return min(p, max(-1, math.floor(p - n1 * n2 / s ** 2)))


def traditional_success_probability(n1: int, n2: int, s: int, p: int) -> float:
    tolerated = traditional_tolerated_failures(n1, n2, s, p)
    return (tolerated + 1) / (p + 1)


def dynamic_success_probability(p: int) -> float:
    """Succeeds whenever at least one worker survives."""
    return p / (p + 1)


# -- output emission ------------------------------------------------------------


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv(path: str, fieldnames, rows) -> None:
    """Plain comma-separated UTF-8 with a header row; 6 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            cells = [format_value(row[name]) for name in fieldnames]
            for cell in cells:
                if "," in cell or "\n" in cell:
                    raise ValueError(f"cell value {cell!r} needs quoting; "
                                     "keep values delimiter-free")
            fh.write(",".join(cells) + "\n")


def write_manifest(path: str, entries: dict) -> None:
    """key=value sidecar, sorted by key; contains no timestamps."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={format_value(entries[key])}\n")


def auto(value):
    """Manifest spelling for parameters resolved at run time."""
    return "auto" if value is None else value


def manifest_entries(scenario: ScenarioConfig, kind: str, base_seed: int,
                     **extra) -> dict:
    entries = {
        "version": __version__,
        "experiment": kind,
        "scenario": scenario.name,
        "n1": scenario.n1,
        "n2": scenario.n2,
        "workers": scenario.n_workers,
        "seed": base_seed,
        "straggler_mode": scenario.straggler_mode,
        "delay_factor": scenario.delay_factor,
    }
    entries.update(extra)
    return entries


def emit(out_dir: str, name: str, fieldnames, rows, manifest: dict):
    """Write <name>.csv and <name>.manifest.txt; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    manifest_path = os.path.join(out_dir, f"{name}.manifest.txt")
    write_csv(csv_path, fieldnames, rows)
    write_manifest(manifest_path, manifest)
    return csv_path, manifest_path


# -- config-file front end -------------------------------------------------------


_SCENARIO_KEYS = {
    "index": int, "scale": float, "n1": int, "n2": int, "workers": int,
    "mu_low": float, "mu_high": float, "compute_coeff": float,
    "init_box_m": float, "speed_limit_mps": float, "horizon_factor": float,
    "dynamic_b": int, "traditional_s": int,
}
_STRAGGLER_KEYS = {
    "ratio": float, "mode": str, "delay_factor": float,
    "failure_count_uniform": bool,
}
_COMM_KEYS = {
    "bandwidth_hz": float, "noise_w": float, "payload_bytes": int,
    "rx_offset_dbm": float,
}
_EXPERIMENT_KEYS = {
    "kind": str, "reps": int, "seed": int, "out_dir": str,
    "b_values": str, "ratios": str, "runs": int, "ratio": float,
}
_SECTIONS = {
    "scenario": _SCENARIO_KEYS,
    "straggler": _STRAGGLER_KEYS,
    "comm": _COMM_KEYS,
    "experiment": _EXPERIMENT_KEYS,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_number_list(text: str, converter):
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ConfigError("expected a comma-separated list of numbers")
    try:
        return [converter(item) for item in items]
    except ValueError as exc:
        raise ConfigError(f"bad list value in {text!r}: {exc}") from exc


def load_config(path: str) -> dict:
    """Parse and validate an experiment config file into plain sections.

    Unknown sections or keys are errors that list the valid names.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    config: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{section}]; valid sections: "
                + ", ".join(sorted(_SECTIONS)))
        known = _SECTIONS[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; valid keys: "
                    + ", ".join(sorted(known)))
            kind = known[key]
            try:
                if kind is bool:
                    values[key] = _parse_bool(raw)
                elif kind is str:
                    values[key] = raw.strip()
                else:
                    values[key] = kind(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {key} in [{section}]: {raw!r}") from exc
        config[section] = values
    return config


def scenario_from_config(config: dict) -> ScenarioConfig:
    scn = dict(config.get("scenario", {}))
    strag = config.get("straggler", {})
    comm = config.get("comm", {})

    overrides = {}
    for key in ("mu_low", "mu_high", "compute_coeff", "init_box_m",
                "speed_limit_mps", "horizon_factor", "dynamic_b",
                "traditional_s"):
        if key in scn:
            overrides[key] = scn[key]
    if "ratio" in strag:
        overrides["straggler_ratio"] = strag["ratio"]
    if "mode" in strag:
        overrides["straggler_mode"] = strag["mode"]
    if "delay_factor" in strag:
        overrides["delay_factor"] = strag["delay_factor"]
    if "failure_count_uniform" in strag:
        overrides["failure_count_uniform"] = strag["failure_count_uniform"]
    if comm:
        from .models import CommParams
        overrides["comm"] = CommParams(**comm)

    try:
        if "index" in scn:
            for key in ("n1", "n2", "workers"):
                if key in scn:
                    raise ConfigError(
                        "give either index or explicit n1/n2/workers, not both")
            return benchmark_scenario(scn["index"],
                                      scn.get("scale", DEFAULT_SCALE),
                                      **overrides)
        if not all(key in scn for key in ("n1", "n2", "workers")):
            raise ConfigError(
                "scenario needs either index=1..4 or all of n1, n2, workers")
        return ScenarioConfig(name="custom", n1=scn["n1"], n2=scn["n2"],
                              n_workers=scn["workers"], **overrides)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def run_scenario_file(path: str) -> list[str]:
    """Run the experiment described by a config file; returns output paths."""
    config = load_config(path)
    scenario = scenario_from_config(config)
    exp = config.get("experiment", {})
    kind = exp.get("kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; valid kinds: "
            + ", ".join(EXPERIMENT_KINDS))
    reps = exp.get("reps", 25)
    seed = exp.get("seed", 1234)
    out_dir = exp.get("out_dir", "results")
    if reps < 1:
        raise ConfigError("reps must be >= 1")

    if kind == "sweep-b":
        if "b_values" in exp:
            b_values = _parse_number_list(exp["b_values"], int)
        else:
            b_values = default_sweep_grid(scenario.n2)
        rows, argmin_b = sweep_b(scenario, b_values, reps, seed)
        manifest = manifest_entries(scenario, kind, seed, reps=reps,
                                    argmin_b=argmin_b,
                                    b_values=" ".join(map(str, b_values)))
        paths = emit(out_dir, "sweep_b", ("b", "mean_time_s", "std_time_s"),
                     rows, manifest)
    elif kind == "compare":
        ratio = exp.get("ratio", scenario.straggler_ratio)
        rows = compare_strategies(scenario, reps, seed, ratio=ratio,
                                  mode=scenario.straggler_mode)
        manifest = manifest_entries(scenario, kind, seed, reps=reps,
                                    ratio=ratio, b=auto(scenario.dynamic_b),
                                    s=auto(scenario.traditional_s))
        paths = emit(out_dir, "compare",
                     ("strategy", "mean_time_s", "std_time_s"), rows, manifest)
    elif kind == "stress":
        if "ratios" in exp:
            ratios = _parse_number_list(exp["ratios"], float)
        else:
            ratios = [0.0, 0.25, 0.5, 0.75, 1.0]
        rows = stress_test(scenario, ratios, reps, seed,
                           mode=scenario.straggler_mode)
        manifest = manifest_entries(scenario, kind, seed, reps=reps,
                                    ratios=" ".join(format_value(r)
                                                    for r in ratios),
                                    b=auto(scenario.dynamic_b))
        paths = emit(out_dir, "stress",
                     ("ratio", "strategy", "mean_time_s", "std_time_s"),
                     rows, manifest)
    else:
        runs = exp.get("runs", 2000)
        if runs < 1:
            raise ConfigError("runs must be >= 1")
        mode = scenario.straggler_mode if scenario.straggler_mode != "delayed" else "fail"
        rows, _ = success_rate(scenario, runs, seed, mode=mode)
        manifest = manifest_entries(scenario, kind, seed, runs=runs,
                                    b=auto(scenario.dynamic_b))
        paths = emit(out_dir, "success_rate",
                     ("strategy", "success_rate", "successes", "runs"),
                     rows, manifest)
    return list(paths)
