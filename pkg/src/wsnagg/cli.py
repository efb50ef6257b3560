"""Reproducible experiment runner.

Subcommands: ``keydist`` (analytic vs empirical ring-overlap
probability), ``cpda`` (one instrumented cluster round per repetition),
``attack`` (insider attacks against generated transcripts), ``ci-sim``
(the detection experiment, both arms) and ``overhead`` (simulated vs
analytic messages per node). Results are CSV rows with a fixed header;
the seed is echoed into every row so any row can be reproduced. Exit
codes: 0 success, 2 configuration error, 3 protocol abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import random
import sys
from dataclasses import dataclass, replace

from . import attack as attack_mod
from . import cpda, keydist
from .errors import ConfigError, ProtocolAbort
from .netsim import SimConfig, run_cpda_sim, run_detection_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3

_INT_KEYS = {"node_count", "seed", "K", "k", "D", "R"}
_FLOAT_KEYS = {
    "area_side", "radio_range", "sim_time", "sampling_period", "initial_energy",
    "airtime", "p_c", "change_trigger", "temp_mean", "temp_sigma", "link_loss",
    "fault_fraction", "fault_offset_sigmas", "broadcast_threshold",
    "fall_threshold", "detection_multiplier",
}
_STR_KEYS = {"mode"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_FIELD_FOR_KEY = {
    "link_loss": "link_loss_probability",
    "seed": "rng_seed",
    "K": "key_pool_size",
    "k": "key_ring_size",
    "D": "value_bound",
    "R": "coeff_bound",
}


@dataclass
class RunSpec:
    subcommand: str
    config_path: str | None = None
    output_path: str | None = None
    seed_override: int | None = None
    repetitions: int = 1
    mode_override: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.config_path == "":
            raise ConfigError("config path must be non-empty")
        if self.output_path == "":
            raise ConfigError("output path must be non-empty")


def parse_config(path: str | None) -> SimConfig:
    """Parse a flat key=value config file into a SimConfig.

    Blank lines and '#' comments are ignored. Unknown keys, duplicate
    keys and lines without '=' are errors (with line numbers); missing
    keys fall back to the experiment defaults.
    """
    if path is None:
        return SimConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return config_from_text(text)


def config_from_text(text: str) -> SimConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    fields = {_FIELD_FOR_KEY.get(k, k): v for k, v in values.items()}
    return SimConfig(**fields)


def _apply_overrides(cfg: SimConfig, spec: RunSpec) -> SimConfig:
    if spec.seed_override is not None:
        cfg = replace(cfg, rng_seed=spec.seed_override)
    if spec.mode_override is not None:
        cfg = replace(cfg, mode=spec.mode_override)  # SimConfig validates
    return cfg


def run(spec: RunSpec) -> tuple[int, str, str]:
    """Execute a run. Returns (exit_code, csv_text, summary_text)."""
    cfg = parse_config(spec.config_path)
    cfg = _apply_overrides(cfg, spec)
    handler = {
        "keydist": _run_keydist,
        "cpda": _run_cpda,
        "attack": _run_attack,
        "ci-sim": _run_ci_sim,
        "overhead": _run_overhead,
    }.get(spec.subcommand)
    if handler is None:
        raise ConfigError(f"unknown subcommand {spec.subcommand!r}")
    return handler(cfg, spec)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _run_keydist(cfg: SimConfig, spec: RunSpec) -> tuple[int, str, str]:
    header = ["seed", "K", "k", "analytic_p_connect", "empirical_p_connect"]
    pairs = 10_000
    rows = []
    for _ in range(spec.repetitions):
        pool = keydist.KeyPoolConfig(cfg.key_pool_size, cfg.key_ring_size)
        analytic = float(keydist.connectivity_probability(pool))
        rng = random.Random(f"keydist:{cfg.rng_seed}")
        hits = 0
        population = range(pool.pool_size)
        for _ in range(pairs):
            a = set(rng.sample(population, pool.ring_size))
            if any(key in a for key in rng.sample(population, pool.ring_size)):
                hits += 1
        rows.append([cfg.rng_seed, pool.pool_size, pool.ring_size,
                     analytic, hits / pairs])
    summary = (
        f"keydist: K={cfg.key_pool_size} k={cfg.key_ring_size} "
        f"analytic={rows[0][3]:.5f} empirical={rows[0][4]:.5f}"
    )
    return EXIT_OK, _csv_text(header, rows), summary


_OP_COLUMNS = [
    ("addition", "add"),
    ("subtraction", "sub"),
    ("multiplication", "mul"),
    ("division", "div"),
    ("exponentiation", "exp"),
    ("encryption", "enc"),
    ("matrix_multiplication", "mat_mul"),
    ("matrix_inversion", "mat_inv"),
]


def _draw_cli_cluster(cfg: SimConfig, mode: str):
    """A three-node instance with unrestricted draws (hardened validates them)."""
    rng = random.Random(f"cli-cpda:{cfg.rng_seed}")
    m = 3
    if mode == "efficient":
        leader = attack_mod.pick_malicious_seed(cfg.value_bound, cfg.coeff_bound, m)
        seeds = cpda.ClusterSeeds((leader, *rng.sample(range(1, 1000), m - 1)))
    else:
        seeds = cpda.ClusterSeeds(tuple(rng.sample(range(1, 100000), m)))
    secrets = [
        cpda.NodeSecret(
            private_value=rng.randrange(cfg.value_bound),
            coefficients=tuple(
                rng.randrange(1, cfg.coeff_bound) for _ in range(m - 1)
            ),
        )
        for _ in range(m)
    ]
    return secrets, seeds


def _run_cpda(cfg: SimConfig, spec: RunSpec) -> tuple[int, str, str]:
    mode = cfg.mode
    if mode == "tag_plain":
        raise ConfigError("the cpda subcommand needs mode original, efficient or hardened")
    header = ["seed", "mode", "cluster_size", "true_sum", "recovered_sum"]
    header += [name for name, _ in _OP_COLUMNS]
    rows = []
    for _ in range(spec.repetitions):
        secrets, seeds = _draw_cli_cluster(cfg, mode)
        result = cpda.run_cluster(secrets, seeds, mode)
        ops = result.counters.as_dict()
        rows.append(
            [cfg.rng_seed, mode, len(secrets),
             sum(s.private_value for s in secrets), result.recovered_sum]
            + [ops[attr] for _, attr in _OP_COLUMNS]
        )
    summary = (
        f"cpda: mode={mode} recovered={rows[0][4]} true={rows[0][3]} "
        f"ops={dict((n, r) for (n, _), r in zip(_OP_COLUMNS, rows[0][5:]))}"
    )
    return EXIT_OK, _csv_text(header, rows), summary


def _attack_transcript(cfg: SimConfig, kind: str):
    """Honest three-node transcript with an attacker-chosen oversized seed."""
    rng = random.Random(f"cli-attack:{cfg.rng_seed}:{kind}")
    big = attack_mod.pick_malicious_seed(cfg.value_bound, cfg.coeff_bound, 3)
    small = rng.sample(range(1, 1000), 2)
    seeds = (big, *small) if kind == "leader" else (small[0], big, small[1])
    values = [rng.randrange(cfg.value_bound) for _ in range(3)]
    coeffs = [
        tuple(rng.randrange(1, cfg.coeff_bound) for _ in range(2)) for _ in range(3)
    ]
    secrets = [cpda.NodeSecret(values[i], coeffs[i]) for i in range(3)]
    transcript = cpda.exchange_transcript(secrets, cpda.ClusterSeeds(seeds))
    return secrets, transcript


def _run_attack(cfg: SimConfig, spec: RunSpec) -> tuple[int, str, str]:
    if cfg.mode not in ("original", "hardened"):
        raise ConfigError("the attack subcommand needs mode original or hardened")
    mode = cfg.mode
    header = [
        "seed", "mode", "attack", "true_first", "true_second",
        "recovered_first", "recovered_second", "success",
    ]
    rows = []
    for _ in range(spec.repetitions):
        for kind in ("leader", "member"):
            secrets, transcript = _attack_transcript(cfg, kind)
            truth = (
                (secrets[1].private_value, secrets[2].private_value)
                if kind == "leader"
                else (secrets[0].private_value, secrets[2].private_value)
            )
            if mode == "hardened" and not cpda.seeds_are_valid(transcript.seeds.seeds):
                rows.append([cfg.rng_seed, mode, kind, truth[0], truth[1], "", "", False])
                continue
            try:
                recovered = _replay_attack(kind, secrets, transcript)
            except attack_mod.AttackFailedError:
                rows.append([cfg.rng_seed, mode, kind, truth[0], truth[1], "", "", False])
                continue
            rows.append(
                [cfg.rng_seed, mode, kind, truth[0], truth[1],
                 recovered[0], recovered[1], recovered == truth]
            )
    successes = sum(1 for r in rows if r[-1] is True)
    summary = f"attack: mode={mode} {successes}/{len(rows)} successful recoveries"
    return EXIT_OK, _csv_text(header, rows), summary


def _replay_attack(kind: str, secrets, transcript) -> tuple[int, int]:
    seeds = transcript.seeds
    if kind == "leader":
        view = attack_mod.LeaderView(
            own_value=secrets[0].private_value,
            own_coefficients=secrets[0].coefficients,
            own_seed=seeds[0],
            share_from_b=transcript.shares[1].values[0],
            share_from_c=transcript.shares[2].values[0],
            f_from_b=transcript.f_values[1].value,
            f_from_c=transcript.f_values[2].value,
            seed_b=seeds[1],
            seed_c=seeds[2],
        )
        return attack_mod.leader_attack(view)
    view = attack_mod.MemberView(
        own_value=secrets[1].private_value,
        own_coefficients=secrets[1].coefficients,
        own_seed=seeds[1],
        share_from_leader=transcript.shares[0].values[1],
        share_from_other=transcript.shares[2].values[1],
        f_own=transcript.f_values[1].value,
        f_other=transcript.f_values[2].value,
        seed_leader=seeds[0],
        seed_other=seeds[2],
    )
    return attack_mod.member_attack(view)


def _run_ci_sim(cfg: SimConfig, spec: RunSpec) -> tuple[int, str, str]:
    header = [
        "seed", "fault_fraction", "true_positive", "false_positive",
        "true_negative", "false_negative", "detection_rate", "fp_rate",
        "fn_rate", "energy_with_security", "energy_without_security",
        "energy_increase_pct", "delivery_ratio_with", "delivery_ratio_without",
    ]
    rows = []
    for _ in range(spec.repetitions):
        det, _, _ = run_detection_experiment(cfg)
        rows.append([
            cfg.rng_seed, cfg.fault_fraction, det.true_positive,
            det.false_positive, det.true_negative, det.false_negative,
            det.detection_rate, det.fp_rate, det.fn_rate,
            det.energy_with_security, det.energy_without_security,
            100.0 * det.energy_increase_ratio,
            det.delivery_ratio_with, det.delivery_ratio_without,
        ])
    r = rows[0]
    summary = (
        f"ci-sim: faults={cfg.fault_fraction} detection={r[6]:.3f} "
        f"fp={r[7]:.3f} fn={r[8]:.3f} energy +{r[11]:.1f}%"
    )
    return EXIT_OK, _csv_text(header, rows), summary


_ANALYTIC = {
    "tag_plain": lambda p: 2.0,
    "original": lambda p: 3.0 + p,
    "efficient": lambda p: 2.0 + p,
    "hardened": lambda p: 5.0 + p,
}


def _run_overhead(cfg: SimConfig, spec: RunSpec) -> tuple[int, str, str]:
    modes = [cfg.mode] if spec.mode_override else list(_ANALYTIC)
    header = ["seed", "mode", "p_c", "avg_messages_per_node", "analytic"]
    rows = []
    for _ in range(spec.repetitions):
        for mode in modes:
            metrics = run_cpda_sim(cfg, mode=mode, force_validation_round=True)
            rows.append([
                cfg.rng_seed, mode, cfg.p_c,
                metrics.avg_messages_per_node(), _ANALYTIC[mode](cfg.p_c),
            ])
    lines = ", ".join(f"{r[1]}={r[3]:.3f} (analytic {r[4]:.3f})" for r in rows[:4])
    return EXIT_OK, _csv_text(header, rows), f"overhead: {lines}"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wsnagg",
        description="Run aggregation-protocol experiments and emit CSV metrics.",
    )
    parser.add_argument("subcommand",
                        choices=["keydist", "cpda", "attack", "ci-sim", "overhead"])
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="key=value config file (defaults apply when omitted)")
    parser.add_argument("--out", metavar="PATH", default=None,
                        help="CSV output path (stdout when omitted)")
    parser.add_argument("--seed", type=int, default=None, metavar="N",
                        help="override the configured generator seed")
    parser.add_argument("--reps", type=int, default=1, metavar="N",
                        help="repetitions; rows repeat the configured seed")
    parser.add_argument("--mode", default=None, metavar="NAME",
                        help="override the configured protocol mode")
    args = parser.parse_args(argv)

    try:
        spec = RunSpec(
            subcommand=args.subcommand,
            config_path=args.config,
            output_path=args.out,
            seed_override=args.seed,
            repetitions=args.reps,
            mode_override=args.mode,
        )
        code, csv_text, summary = run(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolAbort as exc:
        print(f"protocol abort: {exc}", file=sys.stderr)
        return EXIT_ABORT

    if args.out is None:
        sys.stdout.write(csv_text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    print(summary)
    return code


if __name__ == "__main__":
    sys.exit(main())
