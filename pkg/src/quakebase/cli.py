"""Command-line entry point: ``quakebase <command> [options]``.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .etas import SimConfig, simulate_catalog
from .experiments import run_grid, run_small_sample, write_heatmaps
from .logreg import (
    CellGrid,
    CellTable,
    LogisticModel,
    RuptureGeom,
    evaluate_auc,
    fit,
    parse_feature_spec,
    read_table_csv,
    synth_grid,
    write_cells_csv,
    write_model_json,
)
from .seismicity import write_catalog_csv
from .skill import confusion_arrays, roc_auc, skill
from .stress import max_shear, metric_A, read_tensor_csv, von_mises, write_feature_csv

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
SIMULATE_TAG = 2

log = logging.getLogger("quakebase")


class InputError(ValueError):
    pass


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config(args, overrides: dict):
    overrides = dict(overrides)
    overrides["seed"] = getattr(args, "seed", None)
    overrides["output_dir"] = getattr(args, "out", None)
    return load_config(args.config, overrides)


def _args_provenance(args, keys) -> dict:
    blob = json.dumps({k: getattr(args, k) for k in keys}, sort_keys=True, default=str)
    return {
        "tool_version": __version__,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest()[:16],
        "seed": getattr(args, "seed", None),
    }


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = _config(
        args,
        {
            "simulate.horizon_days": args.horizon,
            "simulate.a_value": args.a_value,
        },
    )
    if args.count < 0:
        raise InputError("--count must be >= 0")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.etas.to_params()
    sim = cfg.simulate
    entries = []
    for i in range(args.count):
        seed = np.random.SeedSequence(cfg.seed, spawn_key=(SIMULATE_TAG, i))
        catalog = simulate_catalog(
            params,
            SimConfig(sim.horizon_days, seed, sim.max_events, sim.a_value, sim.window_days),
        )
        name = f"catalog_{i:04d}.csv"
        write_catalog_csv(catalog, out / name)
        entries.append(
            {
                "file": name,
                "index": i,
                "seed_key": [cfg.seed, SIMULATE_TAG, i],
                "n_events": len(catalog),
                "truncated": catalog.truncated,
            }
        )
    manifest = {
        **cfg.provenance(),
        "params": cfg.etas.model_dump(mode="json"),
        "simulate": sim.model_dump(mode="json"),
        "catalogs": entries,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {args.count} catalog(s) to {out}")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _config(args, {"grid.sims": args.sims})
    result = run_grid(cfg.grid_spec(), cfg.etas.to_params(), workers=args.workers)
    out = Path(cfg.output_dir)
    payload = result.to_json()
    payload["meta"].update(cfg.provenance())
    _write_json(out / "grid_results.json", payload)
    write_heatmaps(result, out)
    maxima = result.maxima()
    _write_json(out / "grid_maxima.json", {**cfg.provenance(), "maxima": maxima})
    for rule, entry in maxima.items():
        parts = []
        for metric, label in (("tpr", "TPR"), ("r_score", "R")):
            e = entry[metric]
            parts.append(
                f"max {label} = {e['value']:.3f} at (Δr=1/{e['n']}, m_th={e['m_th']:g})" if e else f"max {label} undefined"
            )
        print(f"{rule}: " + "; ".join(parts))
    meta = payload["meta"]
    print(f"truncations={meta['truncations']} fit_failures={meta['fit_failures']}")
    return EXIT_OK


def cmd_small_sample(args) -> int:
    overrides = {
        "small_sample.reps": args.reps,
        "small_sample.batch": args.batch,
        "small_sample.n": args.n,
        "small_sample.m_th_values": args.m_th,
    }
    cfg = _config(args, overrides)
    ss = cfg.small_sample
    result = run_small_sample(
        tuple(ss.m_th_values),
        ss.reps,
        ss.batch,
        cfg.seed,
        ss.n,
        cfg.etas.to_params(),
        cfg.grid_spec(),
        workers=args.workers,
    )
    payload = {**cfg.provenance(), **result.to_json()}
    out = Path(cfg.output_dir)
    _write_json(out / "small_sample.json", payload)
    for key, block in payload["results"].items():
        for rule, entry in block.items():
            print(
                f"{key} {rule}: R in [{entry['min_r']}, {entry['max_r']}], undefined {entry['undefined']}/{ss.reps}"
            )
    print(f"union R range: [{payload['union_min_r']}, {payload['union_max_r']}]")
    return EXIT_OK


def cmd_stress_features(args) -> int:
    comps, labels = read_tensor_csv(args.input)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_feature_csv(out, comps, labels)
    if args.metrics:
        with open(args.metrics, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["A", "von_mises", "max_shear"] + (["label"] if labels is not None else []))
            a, vm, ms = metric_A(comps), von_mises(comps), max_shear(comps)
            for i in range(comps.shape[0]):
                row = [repr(float(a[i])), repr(float(vm[i])), repr(float(ms[i]))]
                if labels is not None:
                    row.append(int(labels[i]))
                writer.writerow(row)
    print(f"wrote {comps.shape[0]} feature rows to {out}")
    return EXIT_OK


def cmd_synth_grid(args) -> int:
    """One grid per ``--slip`` value, concatenated; slip must vary to identify beta2."""
    truth = LogisticModel(args.beta0, [args.beta1, args.beta2], "rd")
    grid = CellGrid(args.extent, args.spacing, args.depth_extent)
    tables = []
    for i, slip in enumerate(args.slip):
        geom = RuptureGeom(
            center=(0.0, 0.0, -args.depth),
            strike_deg=args.strike,
            dip_deg=args.dip,
            length_km=args.length,
            width_km=args.width,
            slip_m=slip,
        )
        seed = np.random.SeedSequence(args.seed, spawn_key=(i,))
        tables.append(synth_grid(geom, grid, truth, seed=seed, with_stress=args.stress))
    table = CellTable.concat(tables)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_cells_csv(table, out, include_stress=args.stress)
    print(f"wrote {len(table)} cells ({int(table.label.sum())} positive) to {out}")
    return EXIT_OK


def _split(n: int, fraction: float, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    perm = rng.permutation(n)
    n_test = int(round(fraction * n))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def cmd_logreg(args) -> int:
    if not 0 <= args.holdout < 1:
        raise InputError("--holdout must be in [0, 1)")
    cols = read_table_csv(args.input)
    labels = cols["label"]
    if labels.min() == labels.max():
        raise InputError("feature file contains a single class; logistic regression needs both")
    train_idx, test_idx = _split(labels.size, args.holdout, args.seed)
    train = {k: v[train_idx] for k, v in cols.items()}
    test = {k: v[test_idx] for k, v in cols.items()}
    if train["label"].min() == train["label"].max():
        raise InputError("training split contains a single class")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = _args_provenance(args, ("features", "lam", "tol", "holdout", "seed"))
    report = {**prov, "n_train": int(train_idx.size), "n_test": int(test_idx.size), "models": {}}
    for feat_text in args.features:
        spec = parse_feature_spec(feat_text)
        # collinear +/- feature pairs need a penalty for a unique optimum
        lam = args.lam if args.lam is not None else (1e-4 if feat_text == "stress12" else 0.0)
        model = fit(train, spec, lam=lam, tol=args.tol)
        entry = {
            **model.to_json(),
            "lambda": lam,
            "converged": model.info.converged,
            "capped": model.info.capped,
            "auc_train": evaluate_auc(model, train),
            "auc_test": evaluate_auc(model, test) if test_idx.size else None,
        }
        if [str(f) for f in spec] == ["r:neglog", "d:log"]:
            b0hat, b1, b2 = model.power_law()
            entry["power_law"] = {"beta0_hat": b0hat, "beta1": b1, "beta2": b2}
        slug = feat_text.replace(",", "+").replace(":", "-")
        write_model_json(model, out / f"model_{slug}.json", {**prov, "lambda": lam})
        report["models"][feat_text] = entry
        auc = entry["auc_test"] if entry["auc_test"] is not None else entry["auc_train"]
        coefs = ", ".join(f"{w:.4g}" for w in model.weights)
        print(f"[{feat_text}] intercept={model.intercept:.4g} weights=[{coefs}] AUC={auc:.4f}")
    _write_json(out / "logreg_report.json", report)
    return EXIT_OK


def cmd_metrics(args) -> int:
    cols = read_table_csv_pairs(args.input)
    counts = confusion_arrays(cols["predicted"], cols["true"])
    rep = skill(counts)
    payload = {
        "tool_version": __version__,
        **counts.as_dict(),
        "tpr": rep.tpr,
        "tnr": rep.tnr,
        "r": rep.r_score,
    }
    if "score" in cols:
        payload["auc"] = roc_auc(cols["score"], cols["true"])
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        _write_json(Path(args.out), payload)
    print(text)
    return EXIT_OK


def read_table_csv_pairs(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "true" not in fields or "predicted" not in fields:
            raise InputError("pairs CSV needs 'predicted' and 'true' columns ('score' optional)")
        rows = list(reader)
    cols = {"true": np.array([int(r["true"]) for r in rows], dtype=int)}
    if "score" in fields:
        cols["score"] = np.array([float(r["score"]) for r in rows])
    cols["predicted"] = np.array([int(r["predicted"]) for r in rows], dtype=int)
    for key in ("true", "predicted"):
        if not np.all(np.isin(cols[key], (0, 1))):
            raise InputError(f"column {key!r} must be 0/1")
    return cols


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quakebase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", type=Path, help="run-config JSON (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config output_dir)")
        return p

    p = with_config(sub.add_parser("simulate", help="simulate ETAS catalogs"))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--horizon", type=float, help="horizon in days")
    p.add_argument("--a-value", type=float, dest="a_value")
    p.set_defaults(func=cmd_simulate)

    p = with_config(sub.add_parser("grid", help="run the (Δr, m_th) skill grid"))
    p.add_argument("--sims", type=int, help="simulations per cell")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = with_config(sub.add_parser("small-sample", help="small-batch R-score instability study"))
    p.add_argument("--reps", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m-th", type=float, nargs="+", dest="m_th")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_small_sample)

    p = sub.add_parser("stress-features", help="tensor CSV -> 12-feature CSV")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="also write A / von Mises / max shear CSV here")
    p.set_defaults(func=cmd_stress_features)

    p = sub.add_parser("synth-grid", help="synthetic aftershock cells with planted labels")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta0", type=float, default=8.0)
    p.add_argument("--beta1", type=float, default=2.5)
    p.add_argument("--beta2", type=float, default=1.0)
    p.add_argument("--slip", type=float, nargs="+", default=[1.0], help="mean slip(s) in m")
    p.add_argument("--length", type=float, default=40.0)
    p.add_argument("--width", type=float, default=15.0)
    p.add_argument("--strike", type=float, default=0.0)
    p.add_argument("--dip", type=float, default=90.0)
    p.add_argument("--depth", type=float, default=10.0, help="rupture centre depth (km)")
    p.add_argument("--extent", type=float, default=50.0)
    p.add_argument("--spacing", type=float, default=2.0)
    p.add_argument("--depth-extent", type=float, default=10.0, dest="depth_extent")
    p.add_argument("--stress", action="store_true", help="attach synthetic stress features")
    p.set_defaults(func=cmd_synth_grid)

    p = sub.add_parser("logreg", help="fit single-neuron models and report AUC")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument(
        "--features", action="append", help="preset (rd, A, von_mises, max_shear, stress12) or name[:transform],..."
    )
    p.add_argument("--lam", type=float, help="L2 penalty (default 1e-4 for stress12, else 0)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_logreg)

    p = sub.add_parser("metrics", help="pairs CSV (predicted,true[,score]) -> skill JSON")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "logreg" and not args.features:
        args.features = ["rd"]
    try:
        return args.func(args)
    except (ConfigError, InputError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as err:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
