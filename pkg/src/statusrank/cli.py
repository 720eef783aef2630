"""Command-line front end: reproducible ingest, inference, baselines,
analysis.

Every subcommand writes its artifacts plus a manifest (effective config,
derived seeds, input content hashes, library versions, timing) sufficient to
reproduce the run. All randomness flows from --seed, expanded per component
by fixed labels. Exit codes: 0 success, 1 input error, 2 completed without
convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    attribute_rank_series,
    attribute_rank_summary,
    degree_rank_curves,
    histogram_series,
    read_attributes,
    write_report,
)
from .em import EmConfig, FitResult, McmcConfig, run_em
from .model import ModelParams, generate_network, synthetic_status_params
from .mvr import AnnealSchedule, minimum_violations_ranking, randomize_directions
from .network import (
    EdgeListError,
    format_edge_list,
    largest_component,
    load_edge_list,
)
from .seeds import derive_seed

logger = logging.getLogger("statusrank")


class InputError(Exception):
    """User-input problem: bad file, bad value. Exit code 1."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import numba
    import scipy

    return {
        "statusrank": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    with open(p, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a flat JSON object")
    return cfg


def _merged(args: argparse.Namespace, config: dict, key: str, default):
    """CLI flag beats config file beats hard default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _require_file(path_str: str | None, what: str) -> Path:
    if path_str is None:
        raise InputError(f"missing required {what}")
    path = Path(path_str)
    if not path.exists():
        raise InputError(f"{what} not found: {path}")
    return path


def _parse_net(path: Path):
    try:
        return load_edge_list(path)
    except EdgeListError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _restrict(net, component: str):
    if component == "none":
        return net
    if component not in ("strong", "weak"):
        raise InputError(f"component must be strong, weak, or none, got {component!r}")
    return largest_component(net, mode=component)


def _write_manifest(
    out_dir: Path,
    command: str,
    config: dict,
    seeds: dict,
    inputs: list[Path],
    outputs: list[Path],
    started: float,
) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "versions": _versions(),
        "started_at": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
    }
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args: argparse.Namespace, config: dict) -> Path:
    out = Path(_merged(args, config, "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_series(series_list, out_dir: Path) -> list[Path]:
    series_dir = out_dir / "series"
    series_dir.mkdir(exist_ok=True)
    paths = []
    for s in series_list:
        path = series_dir / f"{s.name}.csv"
        s.write_csv(path)
        paths.append(path)
    return paths


def cmd_infer(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    out = _out_dir(args, config)
    edges = _require_file(_merged(args, config, "edges", None), "edge list (--edges)")
    seed = int(_merged(args, config, "seed", 0))
    component = _merged(args, config, "component", "strong")
    effective = {
        "edges": str(edges),
        "out": str(out),
        "seed": seed,
        "component": component,
        "chains": int(_merged(args, config, "chains", 4)),
        "burn_in": int(_merged(args, config, "burn_in", 200)),
        "samples": int(_merged(args, config, "samples", 200)),
        "spacing": int(_merged(args, config, "spacing", 5)),
        "max_iter": int(_merged(args, config, "max_iter", 100)),
        "tol": _merged(args, config, "tol", None),
        "final_factor": int(_merged(args, config, "final_factor", 4)),
    }
    net = _restrict(_parse_net(edges), component)
    em_seed = derive_seed(seed, "em")
    mcmc = McmcConfig(
        burn_in_sweeps=effective["burn_in"],
        n_samples=effective["samples"],
        sweep_spacing=effective["spacing"],
        n_chains=effective["chains"],
        seed=em_seed,
    )
    em = EmConfig(
        max_iter=effective["max_iter"],
        tol=None if effective["tol"] is None else float(effective["tol"]),
        final_sample_factor=effective["final_factor"],
    )
    logger.info("fitting network: n=%d |S|=%d |T|=%d", net.n, net.n_sym, net.n_asym)
    fit = run_em(net, em, mcmc)
    fit_path = out / "fit.json"
    with open(fit_path, "w", encoding="utf-8") as fh:
        json.dump(fit.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [fit_path]
    outputs += _write_series(
        histogram_series(fit, net) + degree_rank_curves(fit, net), out
    )
    outputs.append(
        _write_manifest(
            out, "infer", effective, {"em": em_seed}, [edges], outputs, started
        )
    )
    if not fit.converged:
        logger.warning(
            "EM did not reach tolerance after %d iterations", fit.em_iterations
        )
        return 2
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    out = _out_dir(args, config)
    seed = int(_merged(args, config, "seed", 0))
    n = int(_merged(args, config, "n", 500))
    params_path = _merged(args, config, "params", None)
    inputs = []
    if params_path is not None:
        p = _require_file(params_path, "params file (--params)")
        inputs.append(p)
        try:
            params = ModelParams.from_json(p.read_text(encoding="utf-8"))
        except (ValueError, KeyError) as exc:
            raise InputError(f"invalid params file {p}: {exc}") from exc
        if params.n != n and args.n is not None:
            raise InputError(f"params file has n={params.n}, but --n={n} given")
        n = params.n
    else:
        params = synthetic_status_params(n=n)
    rng = np.random.default_rng(derive_seed(seed, "generate-ranks"))
    ranks = rng.permutation(np.arange(1, n + 1))
    net_seed = derive_seed(seed, "generate-net")
    net = generate_network(n, ranks, params, net_seed)
    edges_path = out / "edges.txt"
    header = f"edge list generated by statusrank (n={n}, seed={seed})"
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(net, header=header))
    ranks_path = out / "true_ranks.csv"
    with open(ranks_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "rank"])
        for label, rank in zip(net.labels, ranks.tolist()):
            writer.writerow([label, rank])
    params_out = out / "params.json"
    params_out.write_text(params.to_json() + "\n", encoding="utf-8")
    effective = {
        "n": n,
        "seed": seed,
        "out": str(out),
        "params": None if params_path is None else str(params_path),
    }
    outputs = [edges_path, ranks_path, params_out]
    outputs.append(
        _write_manifest(
            out,
            "generate",
            effective,
            {"generate-ranks": derive_seed(seed, "generate-ranks"), "generate-net": net_seed},
            inputs,
            outputs,
            started,
        )
    )
    return 0


def cmd_mvr(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    out = _out_dir(args, config)
    edges = _require_file(_merged(args, config, "edges", None), "edge list (--edges)")
    seed = int(_merged(args, config, "seed", 0))
    component = _merged(args, config, "component", "none")
    restarts = int(_merged(args, config, "restarts", 3))
    net = _restrict(_parse_net(edges), component)
    mvr_seed = derive_seed(seed, "mvr")
    ranks, report = minimum_violations_ranking(
        net, seed=mvr_seed, schedule=AnnealSchedule(restarts=restarts)
    )
    result = {
        "ranking": dict(zip(net.labels, ranks.tolist())),
        "report": report.to_dict(),
        "metadata": {
            "seed": seed,
            "restarts": restarts,
            "note": "one pair-swap-locally-optimal ranking; the minimum is "
            "typically degenerate and other optima may exist",
        },
    }
    mvr_path = out / "mvr.json"
    with open(mvr_path, "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    effective = {
        "edges": str(edges),
        "out": str(out),
        "seed": seed,
        "component": component,
        "restarts": restarts,
    }
    outputs = [mvr_path]
    outputs.append(
        _write_manifest(
            out, "mvr", effective, {"mvr": mvr_seed}, [edges], outputs, started
        )
    )
    return 0


def cmd_shuffle(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    out = _out_dir(args, config)
    edges = _require_file(_merged(args, config, "edges", None), "edge list (--edges)")
    seed = int(_merged(args, config, "seed", 0))
    component = _merged(args, config, "component", "none")
    net = _restrict(_parse_net(edges), component)
    shuffle_seed = derive_seed(seed, "shuffle")
    shuffled = randomize_directions(net, shuffle_seed)
    out_path = out / "edges_shuffled.txt"
    header = f"direction-randomized copy of {edges.name} (seed={seed})"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(shuffled, header=header))
    effective = {
        "edges": str(edges),
        "out": str(out),
        "seed": seed,
        "component": component,
    }
    outputs = [out_path]
    outputs.append(
        _write_manifest(
            out, "shuffle", effective, {"shuffle": shuffle_seed}, [edges], outputs, started
        )
    )
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    started = time.time()
    config = _load_config(args.config)
    out = _out_dir(args, config)
    edges = _require_file(_merged(args, config, "edges", None), "edge list (--edges)")
    fit_path = _require_file(_merged(args, config, "fit", None), "fit file (--fit)")
    seed = int(_merged(args, config, "seed", 0))
    component = _merged(args, config, "component", "none")
    n_perm = int(_merged(args, config, "permutations", 10_000))
    attrs_path = _merged(args, config, "attrs", None)
    net = _restrict(_parse_net(edges), component)
    try:
        fit = FitResult.from_dict(json.loads(fit_path.read_text(encoding="utf-8")))
    except (ValueError, KeyError) as exc:
        raise InputError(f"invalid fit file {fit_path}: {exc}") from exc
    if set(fit.labels) != set(net.labels):
        raise InputError(
            "fit and edge list disagree on node labels; pass the same "
            "--component used for inference"
        )
    inputs = [edges, fit_path]
    series = histogram_series(fit, net) + degree_rank_curves(fit, net)
    report: dict = {"n": net.n, "seed": seed}
    if attrs_path is not None:
        attrs_file = _require_file(attrs_path, "attribute file (--attrs)")
        inputs.append(attrs_file)
        attrs = read_attributes(attrs_file)
        analysis_seed = derive_seed(seed, "analysis")
        report["attributes"] = attribute_rank_summary(
            fit, attrs, n_permutations=n_perm, seed=analysis_seed
        )
        series += attribute_rank_series(fit, attrs)
    report["series"] = [s.name for s in series]
    report_path = out / "report.json"
    write_report(report, report_path)
    outputs = [report_path]
    outputs += _write_series(series, out)
    effective = {
        "edges": str(edges),
        "fit": str(fit_path),
        "attrs": None if attrs_path is None else str(attrs_path),
        "out": str(out),
        "seed": seed,
        "component": component,
        "permutations": n_perm,
    }
    outputs.append(
        _write_manifest(
            out,
            "analyze",
            effective,
            {"analysis": derive_seed(seed, "analysis")},
            inputs,
            outputs,
            started,
        )
    )
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--edges", help="edge list file: one '<src> <dst>' claim per line")
    sub.add_argument("--attrs", help="node attribute CSV (first column = label)")
    sub.add_argument("--out", help="output directory (default: out)")
    sub.add_argument("--seed", type=int, help="master seed (default: 0)")
    sub.add_argument(
        "--component",
        choices=["strong", "weak", "none"],
        help="restrict to the largest component (default: strong for infer, "
        "none otherwise)",
    )
    sub.add_argument("--config", help="JSON config file; flags override its keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statusrank",
        description="Infer latent status rankings in directed friendship networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_infer = subs.add_parser("infer", help="fit the rank model by EM")
    _add_common(p_infer)
    p_infer.add_argument("--chains", type=int, help="MCMC chains (default 4)")
    p_infer.add_argument("--burn-in", dest="burn_in", type=int, help="burn-in sweeps (default 200)")
    p_infer.add_argument("--samples", type=int, help="retained samples per chain (default 200)")
    p_infer.add_argument("--spacing", type=int, help="sweeps between samples (default 5)")
    p_infer.add_argument("--max-iter", dest="max_iter", type=int, help="EM iteration cap (default 100)")
    p_infer.add_argument("--tol", type=float, help="convergence tolerance (default 0.001*n)")
    p_infer.add_argument("--final-factor", dest="final_factor", type=int, help="final-run sample multiplier (default 4)")
    p_infer.set_defaults(func=cmd_infer)

    p_gen = subs.add_parser("generate", help="sample a synthetic network")
    _add_common(p_gen)
    p_gen.add_argument("--n", type=int, help="number of nodes (default 500)")
    p_gen.add_argument("--params", help="ModelParams JSON file (default: reference synthetic parameters)")
    p_gen.set_defaults(func=cmd_generate)

    p_mvr = subs.add_parser("mvr", help="minimum violations ranking")
    _add_common(p_mvr)
    p_mvr.add_argument("--restarts", type=int, help="annealing restarts (default 3)")
    p_mvr.set_defaults(func=cmd_mvr)

    p_shuf = subs.add_parser("shuffle", help="randomize claim directions")
    _add_common(p_shuf)
    p_shuf.set_defaults(func=cmd_shuffle)

    p_an = subs.add_parser("analyze", help="figure data and attribute statistics")
    _add_common(p_an)
    p_an.add_argument("--fit", help="fit.json produced by infer")
    p_an.add_argument("--permutations", type=int, help="permutation-test draws (default 10000)")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        logger.error("%s", exc)
        return 1
    except EdgeListError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
