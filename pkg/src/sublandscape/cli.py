"""Batch command-line front end.

Every command reads its inputs, writes its artifacts under ``--out`` and
exits with 0 (ok), 1 (a verification was violated), 2 (bad usage or
input) or 3 (a resource budget was exceeded).  Settings come from flags,
then from the ``--config`` file, then from built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from ._io import dumps, fmt, write_json
from .errors import SublandscapeError
from .estimators import (PipelineParams, StandardAssumption, average_landscape, bootstrap_band,
                         bound_average_bias, bound_closest, bound_rm, bound_stability_hausdorff,
                         closest_sample_landscape, compute_r0_discrete, dissimilarity_matrix,
                         resolve_T, risk_curves)
from .metricspace import (SubsampleScheme, SyntheticShape, load_matrix_csv, load_points_csv,
                          sample_shape, write_points_csv)
from .persistence import rips_diagram
from .rips import DEFAULT_BUDGET
from .robust import DensityFilter, circle_with_outlier, outlier_experiment
from .transport import DiscreteMeasure, verify_stability_wasserstein, verify_stability_hausdorff

log = logging.getLogger("sublandscape")


def _int_list(v):
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in str(v).split(",") if x.strip()]


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _str_list(v):
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v]
    return [x for x in str(v).split(",") if x]


# name -> (converter, help).  Defaults live per command below.
OPTIONS = {
    "matrix": (_bool, "inputs are distance matrices, not point coordinates"),
    "dim": (int, "homology dimension of the landscape"),
    "max_dim": (int, "top homology dimension computed"),
    "threshold": (float, "Rips threshold (default: diameter of each cloud)"),
    "T": (float, "truncation bound (default: diameter of the data)"),
    "G": (int, "grid size of the landscape"),
    "K": (int, "number of landscape layers"),
    "budget": (int, "maximal number of simplices"),
    "m": (int, "subsample size"),
    "n": (int, "number of subsamples"),
    "seed": (int, "random seed"),
    "band": (_bool, "also write a bootstrap confidence band"),
    "alpha": (float, "band level: 1 - alpha coverage"),
    "B": (int, "bootstrap or Monte-Carlo repetitions"),
    "labels": (_str_list, "comma-separated labels, one per input"),
    "timing": (_bool, "record wall time in the report (not byte-reproducible)"),
    "x": (str, "point CSV of the first measure (uniform weights)"),
    "y": (str, "point CSV of the second measure (uniform weights)"),
    "N": (int, "size of the synthetic circle cloud"),
    "p": (float, "Wasserstein exponent"),
    "trials": (int, "Monte-Carlo trials per measure"),
    "a": (float, "standard-assumption constant a"),
    "b": (float, "standard-assumption exponent b"),
    "r0": (float, "standard-assumption radius r0"),
    "C1": (float, "constant of the average-landscape bias bound"),
    "C2": (float, "constant of the closest-sample bias bound"),
    "H": (float, "Hausdorff distance between supports"),
    "Kconst": (float, "Alexander constant for r0(N)"),
    "vc_dim": (int, "VC dimension for r0(N)"),
    "a_prime": (float, "constant a' for r0(N)"),
    "ms": (_int_list, "comma-separated subsample sizes"),
    "ns": (_int_list, "comma-separated subsample counts"),
    "m_var": (int, "subsample size of the variance curve"),
    "reps": (int, "replicates per variance point"),
    "ref_pool": (int, "subsamples in the reference mean"),
    "replications": (int, "number of seeds"),
    "filter": (str, "density pre-filter: none, kde or knn"),
    "filter_t": (float, "filter threshold"),
    "filter_h": (float, "KDE bandwidth"),
    "filter_k": (int, "k of the knn filter"),
    "shape": (str, "circle, sphere, torus or uniform-cube"),
    "count": (int, "number of points"),
    "radius": (float, "circle/sphere radius or torus ring radius"),
    "tube": (float, "torus tube radius"),
    "side": (float, "cube side"),
    "ambient_dim": (int, "cube dimension"),
    "noise": (float, "gaussian noise level"),
}

PIPELINE = {"dim": 1, "max_dim": None, "threshold": None, "T": None, "G": 1024, "K": 1,
            "budget": DEFAULT_BUDGET, "matrix": False}
CIRCLE_DEMO = {"m": 100, "n": 30, "seed": 0}
SHAPE_RUN = {"m": 300, "n": 100, "seed": 0}
FILTER = {"filter": "none", "filter_t": 0.01, "filter_h": 0.2, "filter_k": 5}
ASSUMPTION = {"a": 1.0, "b": 1.0, "r0": 0.0, "C1": 1.0}

DEFAULTS = {
    "diagram": {"matrix": False, "max_dim": 1, "threshold": None, "T": None, "budget": DEFAULT_BUDGET},
    "average": {**PIPELINE, **CIRCLE_DEMO, "band": False, "alpha": 0.05, "B": 1000, "timing": False},
    "closest": {**PIPELINE, **CIRCLE_DEMO, "timing": False},
    "dissimilarity": {**PIPELINE, **SHAPE_RUN, "labels": None},
    "stability-wasserstein": {**PIPELINE, "x": None, "y": None, "N": 500, "m": 100, "seed": 0,
                              "p": 1.0, "trials": 2000},
    "stability-hausdorff": {**PIPELINE, **ASSUMPTION, "x": None, "y": None, "N": 500, "m": 100,
                            "seed": 0, "trials": 2000},
    "risk-curves": {**PIPELINE, "N": 500, "seed": 0, "ms": [25, 100, 400], "ns": [5, 20, 80],
                    "m_var": 100, "B": 100, "reps": 20, "ref_pool": 200},
    "outlier": {**PIPELINE, **CIRCLE_DEMO, **FILTER, "N": 500, "replications": 1, "noise": 0.0},
    "bounds": {**ASSUMPTION, "m": 100, "n": 30, "C2": 1.0, "H": 0.0, "Kconst": None,
               "vc_dim": None, "a_prime": None, "N": None},
    "gen": {"shape": "circle", "count": 500, "seed": 0, "radius": 1.0, "tube": 0.3, "side": 1.0,
            "ambient_dim": 3, "noise": 0.0},
}

KNOWN_KEYS = set(OPTIONS) | {"threads", "out"}


def read_config(path):
    """Flat ``key = value`` file (a subset of TOML); returns a dict."""
    import tomli

    p = Path(path)
    if not p.is_file():
        raise SublandscapeError("missing-file", f"config file {path} not found")
    try:
        data = tomli.loads(p.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise SublandscapeError("bad-config", f"{path}: {exc}") from None
    out = {}
    for key, value in data.items():
        k = key.replace("-", "_")
        if isinstance(value, dict):
            raise SublandscapeError("bad-config", f"{path}: tables are not supported ([{key}])")
        if k not in KNOWN_KEYS:
            raise SublandscapeError("bad-config", f"{path}: unknown key {key!r}")
        out[k] = value
    return out


def _convert(name, value):
    if value is None:
        return None
    conv = OPTIONS[name][0]
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise SublandscapeError("bad-config", f"{name}: {exc}") from None


def resolve(command, args):
    """Merge defaults < config file < flags for one command."""
    config = getattr(args, "config", None)
    cfg = read_config(config) if config else {}
    settings = dict(DEFAULTS[command])
    for key in settings:
        if key in cfg:
            settings[key] = _convert(key, cfg[key])
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    threads = getattr(args, "threads", None) or cfg.get("threads") or os.cpu_count() or 1
    if not isinstance(threads, int) or isinstance(threads, bool):
        raise SublandscapeError("bad-config", "threads must be an integer")
    settings["threads"] = threads
    settings["out"] = str(getattr(args, "out", None) or cfg.get("out") or ".")
    return settings


def _existing(path):
    if not Path(path).is_file():
        raise SublandscapeError("missing-file", f"input file {path} not found")
    return path


def _load(path, matrix):
    _existing(path)
    return load_matrix_csv(path) if matrix else load_points_csv(path)


def _params(s):
    return PipelineParams(dim=s["dim"], max_dim=s["max_dim"], threshold=s["threshold"], T=s["T"],
                          K=s["K"], G=s["G"], budget=s["budget"],
                          threads=s["threads"]).validate()


def _outdir(s):
    d = Path(s["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_csv_matrix(M, labels, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(labels) + "\n")
        for row in M:
            fh.write(",".join(fmt(v) for v in row) + "\n")


# commands ------------------------------------------------------------------

def cmd_diagram(args, s):
    cloud = _load(args.input, s["matrix"])
    if s["threshold"] is not None and not s["threshold"] > 0:
        raise SublandscapeError("bad-threshold", "threshold must be positive")
    params = PipelineParams(max_dim=s["max_dim"], dim=0, T=s["T"], budget=s["budget"]).validate()
    T = resolve_T(params, cloud)
    D = cloud.distance_matrix()
    thr = s["threshold"] if s["threshold"] is not None else (float(D.max()) or 1.0)
    out = _outdir(s)
    dgm = rips_diagram(D, s["max_dim"], thr, T, budget=s["budget"])
    (out / "diagram.json").write_text(dgm.to_json() + "\n", encoding="utf-8")
    log.info("diagram: %d points, T=%s", len(dgm), fmt(T))
    return 0


def _estimator_outputs(report, out, s, band=None):
    report.estimate.to_csv(out / "landscape.csv")
    d = report.to_dict("landscape.csv")
    if not s.get("timing"):
        d.pop("wall_time")
    if band is not None:
        band.center.to_csv(out / "band_center.csv")
        write_json(band.to_dict("band_center.csv"), out / "band.json")
    write_json(d, out / "report.json")
    log.info("%s: %.3fs", report.method, report.wall_time)


def _scheme(s):
    return SubsampleScheme(s["m"], s["n"], s["seed"])


def cmd_average(args, s):
    cloud = _load(args.input, s["matrix"])
    params, scheme = _params(s), _scheme(s)
    if s["band"]:
        if s["n"] < 2:
            raise SublandscapeError("insufficient-samples", "a band needs n >= 2")
        if not 0 < s["alpha"] < 1 or s["B"] < 100:
            raise SublandscapeError("bad-band", "need 0 < alpha < 1 and B >= 100")
    out = _outdir(s)
    report = average_landscape(cloud, scheme, params)
    band = bootstrap_band(report.landscapes, s["alpha"], s["B"], s["seed"]) if s["band"] else None
    _estimator_outputs(report, out, s, band)
    return 0


def cmd_closest(args, s):
    cloud = _load(args.input, s["matrix"])
    params, scheme = _params(s), _scheme(s)
    out = _outdir(s)
    report = closest_sample_landscape(cloud, None, scheme, params)
    _estimator_outputs(report, out, s)
    return 0


def cmd_dissimilarity(args, s):
    if len(args.inputs) < 2:
        raise SublandscapeError("too-few-clouds", "need at least two inputs")
    labels = s["labels"] or [Path(p).stem for p in args.inputs]
    if len(labels) != len(args.inputs):
        raise SublandscapeError("bad-labels", "one label per input required")
    clouds = [_load(p, s["matrix"]) for p in args.inputs]
    params, scheme = _params(s), _scheme(s)
    out = _outdir(s)
    M, _ = dissimilarity_matrix(clouds, scheme, params)
    _write_csv_matrix(M, labels, out / "dissimilarity.csv")
    return 0


def _measures(s):
    if (s["x"] is None) != (s["y"] is None):
        raise SublandscapeError("bad-usage", "give both x and y, or neither")
    if s["x"] is None:
        X, Y, _ = circle_with_outlier(s["N"], s["seed"])
        source = {"circle_with_outlier": {"N": s["N"], "seed": s["seed"]}}
    else:
        X, Y = load_points_csv(_existing(s["x"])), load_points_csv(_existing(s["y"]))
        source = {"x": s["x"], "y": s["y"]}
    return DiscreteMeasure.uniform(X), DiscreteMeasure.uniform(Y), source


def _verify_report(rep, source, out):
    d = rep.to_dict()
    d["inputs"]["source"] = source
    write_json(d, out / "verify.json")
    log.info("lhs=%s rhs=%s stderr=%s violated=%s", fmt(rep.lhs), fmt(rep.rhs),
             fmt(rep.stderr), rep.violated)
    return 1 if rep.violated else 0


def cmd_stability_wasserstein(args, s):
    mu, nu, source = _measures(s)
    params = _params(s)
    out = _outdir(s)
    rep = verify_stability_wasserstein(mu, nu, s["m"], s["p"], s["trials"], s["seed"], params)
    return _verify_report(rep, source, out)


def cmd_stability_hausdorff(args, s):
    assumption = StandardAssumption(s["a"], s["b"], s["r0"])
    bound_rm(assumption, s["m"])
    mu, nu, source = _measures(s)
    params = _params(s)
    out = _outdir(s)
    rep = verify_stability_hausdorff(mu, nu, s["m"], assumption, s["C1"], s["trials"], s["seed"],
                                     params)
    return _verify_report(rep, source, out)


def _strictly_decreasing(xs):
    return all(a > b for a, b in zip(xs, xs[1:]))


def cmd_risk_curves(args, s):
    cloud = _load(args.input, s["matrix"]) if args.input else circle_with_outlier(s["N"], s["seed"])[0]
    params = _params(s)
    out = _outdir(s)
    res = risk_curves(cloud, s["ms"], s["ns"], s["m_var"], s["B"], s["reps"], s["ref_pool"],
                      params, s["seed"])
    bias_ok = _strictly_decreasing([r["mean_hausdorff"] for r in res["bias"]])
    var_ok = _strictly_decreasing([r["mean_sup_deviation"] for r in res["variance"]])
    res["bias_decreasing"] = bias_ok
    res["variance_decreasing"] = var_ok
    res["violated"] = not (bias_ok and var_ok)
    write_json(res, out / "risk_curves.json")
    return 1 if res["violated"] else 0


def cmd_outlier(args, s):
    params = _params(s)
    prefilter = None
    if s["filter"] != "none":
        prefilter = DensityFilter(method=s["filter"], t=s["filter_t"], h=s["filter_h"],
                                  k=s["filter_k"])
    SubsampleScheme(s["m"], s["n"], s["seed"])
    if s["replications"] < 1:
        raise SublandscapeError("bad-replications", "replications must be >= 1")
    out = _outdir(s)
    runs = []
    for r in range(s["replications"]):
        rep = outlier_experiment(s["N"], s["m"], s["n"], s["seed"] + r, params,
                                 prefilter=prefilter, noise=s["noise"])
        bound = rep["cap_m_over_N"] + 3 * rep["average_gap_stderr"]
        rep["within_bound"] = rep["average_gap"] <= bound
        rep["below_full_gap"] = rep["average_gap"] < rep["full_gap"]
        runs.append(rep)
        log.info("seed %d: average gap %s, full gap %s", s["seed"] + r,
                 fmt(rep["average_gap"]), fmt(rep["full_gap"]))
    wins = sum(r["average_vs_clean"] < r["closest_vs_clean"] for r in runs)
    violated = not all(r["within_bound"] and r["below_full_gap"] for r in runs)
    write_json({"replications": runs, "average_beats_closest": wins, "R": len(runs),
                "majority": wins > len(runs) / 2, "violated": violated}, out / "outlier.json")
    return 1 if violated else 0


def cmd_bounds(args, s):
    A = StandardAssumption(s["a"], s["b"], s["r0"])
    res = {
        "inputs": {k: s[k] for k in ("a", "b", "r0", "m", "n", "C1", "C2", "H")},
        "r_m": bound_rm(A, s["m"]),
        "average_bias": bound_average_bias(A, s["m"], s["C1"]),
        "closest_bias": bound_closest(A, s["m"], s["n"], s["C2"]),
        "stability_hausdorff": bound_stability_hausdorff(A, s["m"], s["H"], s["C1"]),
    }
    extra = [s["Kconst"], s["vc_dim"], s["a_prime"], s["N"]]
    if any(v is not None for v in extra):
        if any(v is None for v in extra):
            raise SublandscapeError("bad-usage", "r0(N) needs Kconst, vc_dim, a_prime and N")
        res["r0_discrete"] = compute_r0_discrete(s["Kconst"], s["vc_dim"], s["a_prime"], s["b"],
                                                 s["N"])
    out = _outdir(s)
    write_json(res, out / "bounds.json")
    print(dumps(res))
    return 0


def cmd_gen(args, s):
    shape = SyntheticShape(s["shape"], radius=s["radius"], tube=s["tube"], side=s["side"],
                           dim=s["ambient_dim"], noise=s["noise"])
    cloud = sample_shape(shape, s["count"], s["seed"])
    out = _outdir(s)
    write_points_csv(cloud, out / "points.csv")
    return 0


COMMANDS = {
    "diagram": cmd_diagram,
    "average": cmd_average,
    "closest": cmd_closest,
    "dissimilarity": cmd_dissimilarity,
    "stability-wasserstein": cmd_stability_wasserstein,
    "stability-hausdorff": cmd_stability_hausdorff,
    "risk-curves": cmd_risk_curves,
    "outlier": cmd_outlier,
    "bounds": cmd_bounds,
    "gen": cmd_gen,
}


# parser ---------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand from resetting values given before it
    p.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value settings file")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads (default: all cores)")
    p.add_argument("--out", default=argparse.SUPPRESS,
                   help="output directory (default: current directory)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                   help="log progress to stderr")
    return p


def _add_options(p, command):
    for key, default in DEFAULTS[command].items():
        conv, text = OPTIONS[key]
        flag = "--" + key.replace("_", "-")
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        kind = "store_true" if conv is _bool else None
        if kind:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None,
                           help=text)
        else:
            p.add_argument(flag, dest=key, type=conv, default=None,
                           help=f"{text} (default: {shown})")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="sublandscape",
                                     description="Subsampled persistence landscapes.")
    parser.add_argument("--version", action="store_true",
                        help="print the version and the resolved --config settings")
    parser.add_argument("--config", default=None, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, helptext, parent=sub):
        p = parent.add_parser(name, parents=[common], help=helptext)
        _add_options(p, name)
        return p

    add("diagram", "persistence diagram of a point cloud").add_argument("input")
    add("average", "average landscape of random subsamples").add_argument("input")
    add("closest", "landscape of the subsample closest to the cloud").add_argument("input")
    add("dissimilarity", "pairwise distances of average landscapes").add_argument(
        "inputs", nargs="+")
    v = sub.add_parser("verify", help="verification harnesses")
    vsub = v.add_subparsers(dest="verify", metavar="check", required=True)
    add("stability-wasserstein", "Monte-Carlo check of the Wasserstein stability bound", vsub)
    add("stability-hausdorff", "Monte-Carlo check of the Hausdorff stability bound", vsub)
    add("risk-curves", "bias and variance proxies over m and n", vsub).add_argument(
        "input", nargs="?")
    add("outlier", "circle-with-outlier robustness experiment", vsub)
    add("bounds", "evaluate the closed-form bias bounds", vsub)
    add("gen", "sample a synthetic shape")
    return parser


def _version(args):
    lines = [f"sublandscape {__version__}"]
    if args.config:
        cfg = read_config(args.config)
        lines += [f"{k} = {dumps(v, indent=0).replace(chr(10), ' ')}" for k, v in sorted(cfg.items())]
    print("\n".join(lines))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")
    try:
        if args.version:
            _version(args)
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        name = args.verify if args.command == "verify" else args.command
        settings = resolve(name, args)
        if settings["threads"] < 1:
            raise SublandscapeError("bad-threads", "threads must be >= 1")
        t0 = time.perf_counter()
        code = COMMANDS[name](args, settings)
        log.info("%s finished in %.2fs", name, time.perf_counter() - t0)
        return code
    except SublandscapeError as exc:
        print(f"sublandscape: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sublandscape: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
