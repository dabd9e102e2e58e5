"""Command-line entry point.

Exit codes: 0 on success, 1 on a configuration or validation error, 2 when
a property or acceptance check fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .energy import EnergyParams, EnergyReport, PROFILES, compare, get_profile, traditional_equivalent
from .errors import EmptyStore, ParseError, TransducerNetError, ValidationError
from .network import simulate
from .scenario import Scenario, builtin_home, load_scenario, serialize
from .server import Store, heatmap_export
from .simkernel import DAY_MS

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2
OUT_ENV = "TRANSDUCERNET_OUT"
BUILTIN = "builtin-home"
HOUR_MS = 3_600_000

log = logging.getLogger("transducernet")


class UsageError(Exception):
    """Bad flags or inputs; reported on stderr with exit code 1."""


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    seed: int
    horizon_ms: int
    profile: str
    out_dir: str


# -- manifest resolution --------------------------------------------------------

def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV) or "out")


def load_scenario_ref(ref: str) -> Scenario:
    if ref == BUILTIN:
        return builtin_home()
    path = Path(ref)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"{ref}: cannot read scenario ({exc.strerror})") from None
    try:
        return load_scenario(raw)
    except ValidationError as exc:
        raise UsageError(f"{ref}: field {exc.path}: {exc.message}") from None
    except ParseError as exc:
        raise UsageError(f"{ref}: {exc}") from None


def load_profile_ref(ref: str) -> EnergyParams:
    if ref in PROFILES:
        return get_profile(ref)
    path = Path(ref)
    if not path.is_file():
        raise UsageError(f"unknown energy profile {ref!r}; use one of {sorted(PROFILES)} or a JSON file")
    try:
        doc = json.loads(path.read_text())
        return EnergyParams.from_dict(doc.get("params", doc))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{ref}: invalid energy profile ({exc})") from None


def _horizon_ms(hours: float | None, scenario: Scenario) -> int:
    if hours is None:
        return scenario.horizon_ms
    if hours < 0:
        raise UsageError("--hours must be non-negative")
    return round(hours * HOUR_MS)


def _out_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"{path}: cannot create output directory ({exc.strerror})") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"{path}: output directory is not writable")
    return path


def resolve(args) -> tuple[RunManifest, Scenario, EnergyParams]:
    scenario = load_scenario_ref(args.scenario)
    params = load_profile_ref(args.profile)
    seed = scenario.seed if args.seed is None else args.seed
    horizon = _horizon_ms(args.hours, scenario)
    out = _out_dir(Path(args.out) if args.out else _default_out())
    manifest = RunManifest(args.scenario, seed, horizon, args.profile, str(out))
    return manifest, scenario, params


# -- helpers ----------------------------------------------------------------------

class _HashingSink:
    """File-like object that hashes what is written and optionally tees it."""

    def __init__(self, tee=None):
        self.sha = hashlib.sha256()
        self.tee = tee

    def write(self, text: str) -> int:
        self.sha.update(text.encode())
        if self.tee is not None:
            self.tee.write(text)
        return len(text)

    def hexdigest(self) -> str:
        return self.sha.hexdigest()


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write(path: Path, text: str | bytes) -> Path:
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text)
    return path


def _print_paths(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


# -- subcommands --------------------------------------------------------------------

def cmd_run(args) -> int:
    manifest, scenario, params = resolve(args)
    out = Path(manifest.out_dir)
    written: list[Path] = []
    event_file = open(out / "events.log", "w") if args.event_log else None
    records_file = open(out / "records.log", "w") if args.full_store else None
    samples_file = open(out / "samples.csv", "w") if args.full_store else None
    try:
        records = _HashingSink(records_file)
        store = Store(records_sink=records, samples_sink=samples_file)
        result = simulate(scenario, params, seed=manifest.seed, horizon_ms=manifest.horizon_ms,
                          store=store, event_sink=event_file)
        event_digest = result.log.digest()
    finally:
        for fh in (event_file, records_file, samples_file):
            if fh is not None:
                fh.close()
    if args.event_log:
        written.append(out / "events.log")
    if args.full_store:
        written += [out / "records.log", out / "samples.csv"]
    events = _write(out / "events.json", json.dumps(result.log.summary(), indent=2) + "\n")
    store_paths = store.save(out)
    energy = _write(out / "energy.csv", result.energy.to_csv())
    written += [events, *store_paths.values(), energy]
    digests = {
        "event_log": event_digest,
        "records": records.hexdigest(),
        "store": hashlib.sha256(b"".join(_sha256(p).encode() for p in store_paths.values())).hexdigest(),
        "energy_report": _sha256(energy),
    }
    summary = {
        "samples_collected": result.samples_collected,
        "samples_emitted": result.samples_emitted,
        "samples_dropped": result.samples_dropped,
        "samples_ingested": store.sample_count,
        "messages": result.messages,
        "records": store.record_count,
        "rejects": store.reject_count,
        "controls": result.controls,
        "actuations": result.actuations,
    }
    doc = {"manifest": asdict(manifest), "summary": summary, "digests": digests}
    written.append(_write(out / "manifest.json", json.dumps(doc, indent=2) + "\n"))
    print(f"simulated {manifest.horizon_ms / HOUR_MS:g} h of {manifest.scenario} "
          f"(seed {manifest.seed}): {result.messages} messages, "
          f"{result.samples_collected} samples, {result.controls} controls")
    _print_paths(written)
    return EXIT_OK


def _energy_run(scenario: Scenario, params: EnergyParams, seed: int, horizon_ms: int) -> EnergyReport:
    return simulate(scenario, params, seed=seed, horizon_ms=horizon_ms).energy


def cmd_compare_energy(args) -> int:
    manifest, scenario, params = resolve(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    out = Path(manifest.out_dir)
    worlds = (scenario, traditional_equivalent(scenario))
    run = (manifest.seed, manifest.horizon_ms)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(_energy_run, w, params, *run) for w in worlds]
            proposed, traditional = (f.result() for f in futures)
    else:
        proposed, traditional = (_energy_run(w, params, *run) for w in worlds)
    report = compare(proposed, traditional)
    written = [
        _write(out / "energy-proposed.csv", proposed.to_csv()),
        _write(out / "energy-traditional.csv", traditional.to_csv()),
        _write(out / "comparison.csv", report.to_csv()),
        _write(out / "comparison.txt", report.summary() + "\n"),
    ]
    print(report.summary())
    _print_paths(written)
    if args.expect_ratio is not None:
        lo, hi = args.expect_ratio
        ratio = float(report.network_ratio)
        if not lo <= ratio <= hi:
            print(f"network ratio {ratio:.4f} outside [{lo}, {hi}]", file=sys.stderr)
            return EXIT_FAILED
    return EXIT_OK


def cmd_export_heatmap(args) -> int:
    run_dir = Path(args.run) if args.run else (Path(args.out) if args.out else _default_out())
    out = _out_dir(Path(args.out) if args.out else run_dir)
    if args.bin_minutes <= 0:
        raise UsageError("--bin-minutes must be positive")
    manifest_path = run_dir / "manifest.json"
    try:
        horizon = json.loads(manifest_path.read_text())["manifest"]["horizon_ms"]
        store = Store.load_aggregates(run_dir)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"{run_dir}: no usable run artifacts ({exc})") from None
    try:
        heat = heatmap_export(store, args.bin_minutes, horizon)
    except EmptyStore as exc:
        raise UsageError(f"{run_dir}: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stem = f"heatmap-{args.bin_minutes}m"
    csv_path = _write(out / f"{stem}.csv", heat.to_csv())
    pgm_path = _write(out / f"{stem}.pgm", heat.to_pgm(args.cell))
    print(f"{len(heat.rows)} channels x {len(heat.columns)} bins")
    for p in (csv_path, pgm_path):
        print(f"wrote {p} sha256={_sha256(p)}")
    return EXIT_OK


def cmd_fuzz_protocol(args) -> int:
    from .fuzz import golden_documents, run_fuzz, write_repro

    if args.iterations <= 0:
        raise UsageError("--iterations must be positive")
    corpus: list[bytes] = []
    if args.reject_corpus:
        try:
            lines = Path(args.reject_corpus).read_bytes().splitlines()
        except OSError as exc:
            raise UsageError(f"{args.reject_corpus}: {exc.strerror}") from None
        corpus = [ln for ln in lines if ln.strip()]
    report = run_fuzz(args.iterations, args.seed, golden=golden_documents(), must_reject=corpus)
    print(report.summary())
    if report.ok:
        return EXIT_OK
    out = _out_dir(Path(args.out) if args.out else _default_out())
    path = write_repro(report, out / f"fuzz-repro-{args.seed}.json")
    print(f"counterexamples written to {path}")
    return EXIT_FAILED


def cmd_scenario_validate(args) -> int:
    status = EXIT_OK
    for ref in args.paths:
        try:
            sc = load_scenario_ref(ref)
        except UsageError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            status = EXIT_INVALID
            continue
        print(f"ok: {ref} ({len(sc.nodes)} nodes, {sc.transducer_count()} transducers, "
              f"{len(sc.hotplug)} hot-plug steps)")
    return status


def cmd_scenario_show(args) -> int:
    sys.stdout.write(serialize(load_scenario_ref(args.scenario)).decode())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import PROFILE_PATH, calibrate

    scenario = load_scenario_ref(args.scenario)
    horizon = _horizon_ms(args.hours, scenario) if args.hours is not None else DAY_MS
    out = Path(args.profile_out) if args.profile_out else PROFILE_PATH
    result, doc = calibrate(horizon, out, scenario)
    fit = doc["fit"]
    print(f"network ratio {fit['network_ratio']}, margin {fit['margin']}, "
          f"{fit['feasible_points']}/{fit['grid_points']} feasible grid points")
    print("node ratios: " + ", ".join(f"{k}={v}" for k, v in fit["node_ratios"].items()))
    _print_paths([out])
    return EXIT_OK if result.evaluation.feasible else EXIT_FAILED


# -- parser -------------------------------------------------------------------------

def _manifest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default=BUILTIN,
                   help=f"scenario JSON file, or {BUILTIN!r} for the built-in home (default)")
    p.add_argument("--hours", type=float, default=None,
                   help="simulated horizon in hours (default: the scenario's own horizon)")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: the scenario's seed)")
    p.add_argument("--profile", default="zigbee-default",
                   help=f"energy profile name {sorted(PROFILES)} or a JSON file (default: zigbee-default)")
    p.add_argument("--out", default=None,
                   help=f"output directory (default: ${OUT_ENV} or ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transducernet",
        description="Simulate clustered transducer nodes against one-transducer-per-node networks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a deployment and write its artifacts")
    _manifest_flags(p)
    p.add_argument("--event-log", action="store_true",
                   help="write every processed event to events.log (default: summary and digest only)")
    p.add_argument("--full-store", action="store_true",
                   help="also write records.log and the per-sample samples.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare-energy", help="run the proposed and traditional networks and compare energy")
    _manifest_flags(p)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes; 2 runs both networks at once (same output as 1)")
    p.add_argument("--expect-ratio", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                   help="exit with status 2 unless the network ratio lies in [LO, HI]")
    p.set_defaults(func=cmd_compare_energy)

    p = sub.add_parser("export-heatmap", help="bin a finished run's samples into a heatmap")
    p.add_argument("--run", default=None, help="run output directory (default: --out)")
    p.add_argument("--bin-minutes", type=int, default=60, help="bin width in minutes (default: 60)")
    p.add_argument("--cell", type=int, default=8, help="pixels per heatmap cell in the PGM (default: 8)")
    p.add_argument("--out", default=None,
                   help=f"where to write the heatmap (default: the run directory, ${OUT_ENV} or ./out)")
    p.set_defaults(func=cmd_export_heatmap)

    p = sub.add_parser("fuzz-protocol", help="round-trip and mutation-rejection checks for the codec")
    p.add_argument("--iterations", type=int, default=1000,
                   help="random messages of each type (default: 1000)")
    p.add_argument("--seed", type=int, default=0, help="fuzzer seed (default: 0)")
    p.add_argument("--reject-corpus", default=None,
                   help="file of documents, one per line, that must all be rejected")
    p.add_argument("--out", default=None,
                   help=f"where to write a repro file on failure (default: ${OUT_ENV} or ./out)")
    p.set_defaults(func=cmd_fuzz_protocol)

    p = sub.add_parser("scenario", help="scenario file utilities")
    ssub = p.add_subparsers(dest="scenario_command", required=True)
    v = ssub.add_parser("validate", help="check scenario files and report the first bad field")
    v.add_argument("paths", nargs="+", help=f"scenario JSON files (or {BUILTIN!r})")
    v.set_defaults(func=cmd_scenario_validate)
    s = ssub.add_parser("show", help="print a scenario as JSON")
    s.add_argument("--scenario", default=BUILTIN, help=f"scenario file or {BUILTIN!r} (default)")
    s.set_defaults(func=cmd_scenario_show)

    p = sub.add_parser("calibrate", help="refit the zigbee-default radio costs")
    p.add_argument("--scenario", default=BUILTIN, help=f"scenario file or {BUILTIN!r} (default)")
    p.add_argument("--hours", type=float, default=None, help="simulated horizon in hours (default: 24)")
    p.add_argument("--profile-out", default=None,
                   help="where to write the fitted profile (default: the packaged zigbee-default.json)")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, TransducerNetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
