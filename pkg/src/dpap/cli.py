"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence with --strict.
"""
import argparse
import json
import os
import sys
from pathlib import Path

from . import bp, fileio
from .ap import ApConfig, ap_run
from .bench import AP_GRID, ALGORITHMS, BenchConfig, run_bench, write_bench
from .fileio import DataError
from .icm import IcmConfig, icm_run
from .metrics import delta_loglik, rand_index
from .model import validate
from .priors import get_prior
from .segsim import SegConfig, compose
from .synth import GenConfig, dataset_similarity, sample_dataset

OUTPUT_ENV = "DPAP_OUTPUT_DIR"

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NONCONVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_dir(name):
    return Path(os.environ.get(OUTPUT_ENV, ".")) / name


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _add_gen_args(p):
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--base-variance", type=float, default=1.0)
    p.add_argument("--cond-variance", type=float, default=0.5)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def _gen_config(args, seed):
    return GenConfig(n=args.n, alpha=args.alpha, dim=args.dim,
                     base_variance=args.base_variance, cond_variance=args.cond_variance,
                     seed=seed)


def cmd_gen(args):
    out = Path(args.out) if args.out else default_dir("data")
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    if args.count == 0:
        return 0
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        cfg = _gen_config(args, args.seed + k)
        fileio.write_dataset(out / f"dataset_{k:04d}.txt", sample_dataset(cfg))
    print(f"wrote {args.count} datasets to {out}", file=sys.stderr)
    return 0


def load_similarity(path, alpha=None):
    """Similarity from a dataset file or a similarity CSV; dataset also returns truth."""
    if fileio.is_dataset_file(path):
        ds = fileio.read_dataset(path)
        return dataset_similarity(ds, alpha), ds
    return fileio.read_similarity(path), None


def cmd_cluster(args):
    algo = args.algo
    if args.d is not None and algo != "ap":
        raise UsageError("--d only applies to the ap algorithm")
    if args.prior is not None and algo == "ap":
        raise UsageError("--prior does not apply to ap (it has no cluster-size prior)")
    sim, _ = load_similarity(args.input, args.alpha)
    if args.self_sim is not None:
        sim = sim.with_preference(args.self_sim)
    if args.scale is not None:
        if not args.scale > 0:
            raise UsageError("--scale must be positive")
        sim = sim.scaled(args.scale)

    if algo == "ap":
        cfg = ApConfig(d=args.d or 0.0, damping=0.8 if args.damping is None else args.damping,
                       tol=args.tol, max_iters=args.max_iters)
        result = ap_run(sim, cfg)
    else:
        prior = get_prior(args.prior or "dp")
        if algo == "dpap":
            cfg = bp.EngineConfig(damping_mu=0.7 if args.damping is None else args.damping,
                                  tol=args.tol, max_iters=args.max_iters, prior=prior)
            result = bp.run(sim, cfg)
        else:
            init = "one" if algo == "icm1" else "singletons"
            result = icm_run(sim, prior, IcmConfig(init, args.max_passes))
    result.config.update({"input": str(args.input), "seed": args.seed, "alpha": args.alpha,
                          "self_sim": args.self_sim, "scale": args.scale})
    if args.out:
        fileio.write_result(args.out, result)
    else:
        json.dump(fileio.result_to_dict(result), sys.stdout, indent=2)
        sys.stdout.write("\n")
    if args.labels_out:
        fileio.write_labels(args.labels_out, result.labels)
    if args.strict and not result.converged:
        print("did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return 0


def cmd_eval(args):
    result = fileio.read_result(args.result)
    sim = None
    if fileio.is_dataset_file(args.truth):
        sim, ds = load_similarity(args.truth, args.alpha)
        truth = ds.truth
    else:
        truth = validate(fileio.read_labels(args.truth))
        if args.sim:
            sim = fileio.read_similarity(args.sim)
    if truth.n != result.labels.n:
        raise DataError(f"result has {result.labels.n} points, truth has {truth.n}")
    row = {
        "rand_index": rand_index(result.labels, truth) if truth.n >= 2 else 1.0,
        "delta_loglik": (delta_loglik(result.labels, truth, sim, get_prior(args.prior))
                         if sim is not None else None),
        "n_clusters": result.labels.n_clusters,
    }
    if args.format == "csv":
        print(",".join(row))
        print(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v)
                       for v in row.values()))
    else:
        print(json.dumps(row))
    return 0


def cmd_bench(args):
    algos = tuple(a for a in args.algos.split(",") if a)
    bad = set(algos) - set(ALGORITHMS)
    if bad:
        raise UsageError(f"unknown algorithms: {', '.join(sorted(bad))}")
    cfg = BenchConfig(count=args.count, seed=args.seed, gen=_gen_config(args, args.seed),
                      algos=algos, d_grid=args.d_grid, damping=args.damping, tol=args.tol,
                      max_iters=args.max_iters)
    datasets = None
    if args.data:
        files = sorted(Path(args.data).glob("dataset_*.txt"))
        if not files:
            raise DataError(f"no dataset_*.txt files in {args.data}")
        datasets = [fileio.read_dataset(f) for f in files]
    progress = None
    if args.verbose:
        progress = lambda i: print(f"dataset {i} done", file=sys.stderr)
    result = run_bench(cfg, jobs=args.jobs, datasets=datasets, progress=progress)
    out = write_bench(Path(args.out) if args.out else default_dir("bench"), result)
    if args.figures:
        from .plotting import render_all
        render_all(result, out)
    print(f"wrote benchmark output to {out}", file=sys.stderr)
    return 0


def cmd_segsim(args):
    g = fileio.read_superpixels(args.graph, rescale=args.rescale)
    cfg = SegConfig(tau_r=args.tau_r, tau_e=args.tau_e, self_sim=args.self_sim,
                    scale=args.scale)
    sim = compose(g, cfg)
    if args.out:
        fileio.write_similarity(args.out, sim)
    else:
        sys.stdout.write(str(sim.n) + "\n")
        for row in sim.s:
            sys.stdout.write(",".join(fileio._fmt(v) for v in row) + "\n")
    return 0


def build_parser():
    parser = _Parser(prog="dpap", description="Exemplar clustering with cluster-size priors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate synthetic datasets")
    _add_gen_args(p)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/data)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cluster", help="cluster a dataset or similarity matrix")
    p.add_argument("algo", choices=["dpap", "ap", "icm1", "icmn"])
    p.add_argument("input")
    p.add_argument("--alpha", type=float, help="override the dataset's concentration")
    p.add_argument("--damping", type=float, help="0.7 for dpap, 0.8 for ap")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--max-passes", type=int, default=100, help="ICM sweep cap")
    p.add_argument("--prior", help="dp (default), ap, or table:FILE")
    p.add_argument("--self-sim", type=float, help="replace every preference with this value")
    p.add_argument("--scale", type=float, help="multiply all similarities")
    p.add_argument("--d", type=float, help="ap only: added to every preference")
    p.add_argument("--seed", type=int, default=0, help="recorded for reproducibility")
    p.add_argument("--out", help="result JSON (default stdout)")
    p.add_argument("--labels-out", help="also write labels, one per line")
    p.add_argument("--strict", action="store_true", help="exit 3 if not converged")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="score a result against truth")
    p.add_argument("result")
    p.add_argument("truth", help="dataset file or labels file")
    p.add_argument("--sim", help="similarity CSV, needed for delta_loglik with a labels file")
    p.add_argument("--prior", default="dp")
    p.add_argument("--alpha", type=float)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run the synthetic benchmark")
    _add_gen_args(p)
    p.set_defaults(count=100)
    p.add_argument("--algos", default=",".join(ALGORITHMS))
    p.add_argument("--d-grid", type=_float_list, default=AP_GRID)
    p.add_argument("--damping", type=float, default=0.7)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--data", help="directory of dataset_*.txt files to use instead of generating")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/bench)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("segsim", help="superpixel graph JSON -> similarity CSV")
    p.add_argument("graph")
    p.add_argument("--tau-r", type=float)
    p.add_argument("--tau-e", type=float)
    p.add_argument("--self-sim", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--rescale", action="store_true", help="colours are 0..255")
    p.add_argument("--out", help="similarity CSV (default stdout)")
    p.set_defaults(func=cmd_segsim)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dpap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"dpap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"dpap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
