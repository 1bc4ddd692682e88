"""
Command-line entry point.

    itcols sweep --axis snr --config exp.yaml --out results/
    itcols single --config exp.yaml
    itcols replay --bundle results/bundles/bundle_cell000.json
    itcols selftest

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from .bundle import BundleError, emit_scene_bundle, replay_bundle
from .detectors import SaturatedSubspaceError
from .harness import AXES, ConfigError, load_spec, run_experiment, simulate_cell_run, write_outputs
from .metrics import classify

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _cmd_sweep(args):
    spec = load_spec(args.config)
    spec.cells(args.axis)
    if args.runs is not None:
        spec = replace(spec, num_runs=args.runs).validate()
    result = run_experiment(spec, axis=args.axis, workers=args.workers)
    paths = write_outputs(result, args.out)
    if args.bundles:
        emit_scene_bundle(spec, f"{args.out}/bundles", axis=args.axis)
    print(result.csv_text(), end="")
    print(f"wrote {paths['results.csv']} and {paths['runs.jsonl']}", file=sys.stderr)
    return 0


def _cmd_single(args):
    spec = load_spec(args.config)
    cell = spec.cells()[0]
    scene, obs, results = simulate_cell_run(spec, cell, args.run_index)
    M = cell.radar.num_antennas
    print(f"scene: K={scene.num_targets} seed={scene.seed} snr={cell.snr_db} dB "
          f"sigma_c={cell.sigma_c_db} dB noise_variance={obs.noise_variance:.3e}")
    for t in scene.targets:
        print(f"  target theta={math.degrees(t.doa):8.3f} deg |alpha|^2={abs(t.gain) ** 2:.4e} "
              f"tau={t.delay:.3e} s fd={t.doppler:.2f} Hz")
    for (method, pen), est in results.items():
        out = classify(scene.doas, est.doas, M)
        doas = ", ".join(f"{math.degrees(x):.3f}" for x in est.doas)
        extra = f" rank_k_hat={est.rank_k_hat}" if est.rank_k_hat is not None else ""
        print(f"{method}/{pen}: k_hat={est.k_hat}{extra} hits={out.hits} "
              f"false_alarms={out.false_alarms} misses={out.misses}")
        print(f"  doas_deg=[{doas}]")
        for k, val in est.itc_trace:
            print(f"  trace k={k:2d} value={val:.6e}")
    return 0


def _cmd_replay(args):
    fresh, matches = replay_bundle(args.bundle)
    for key, res in fresh.items():
        print(f"{key}: k_hat={res['k_hat']} doas={np.round(res['doas'], 6).tolist()}")
    print("replay matches bundle" if matches else "replay DIFFERS from bundle")
    return 0 if matches else EXIT_NUMERIC


def _cmd_selftest(args):
    from .selftest import run_selftest

    return 0 if run_selftest(seed=args.seed) else EXIT_NUMERIC


def build_parser():
    parser = argparse.ArgumentParser(prog="itcols", description="ITC-OLS target-number and DoA experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one axis")
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--runs", type=int, default=None, help="override num_runs")
    p.add_argument("--bundles", action="store_true", help="also write replay bundles")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("single", help="one verbose trial")
    p.add_argument("--config", required=True)
    p.add_argument("--run-index", type=int, default=0)
    p.set_defaults(func=_cmd_single)

    p = sub.add_parser("replay", help="re-run a scene bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("selftest", help="oracle and invariant checks")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BundleError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, SaturatedSubspaceError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
