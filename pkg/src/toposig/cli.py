"""Command-line entry point: ``toposig <subcommand> ...``.

Exit codes: 0 on success, 2 on input errors, 3 on numerical or convergence
errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .exceptions import InputValidationError, NumericalError
from .grad import batch_features, exact_features
from .harness import DetectionResult, ExperimentConfig, detection_study, mixture_curve
from .io import format_float, load_cloud, read_csv_cloud, write_csv, write_emb
from .mmdtest import KernelParams, initial_params, optimize_kernel, permutation_test
from .pcp import MstStudy, PcpParams, dirichlet_mle, mst_length_study, sample_pcp, standard_simplex
from .persistence import vr_persistence
from .pointcloud import pairwise_distances
from .tcloss import TCParams, tc_loss

log = logging.getLogger("toposig")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _tc_args(p, default_max_dim=1):
    p.add_argument("--method", choices=["tp", "mk"], default="tp")
    p.add_argument("--alpha", type=float, default=1.0, help="order of the total persistence")
    p.add_argument("--sigma", type=float, default=1.0, help="scale of the multi-scale kernel")
    p.add_argument("--max-dim", type=int, default=default_max_dim)


def _tc_params(args):
    return TCParams(method=args.method.upper(), alpha=args.alpha, sigma=args.sigma, max_dim=args.max_dim)


def cmd_persistence(args):
    cloud = load_cloud(args.input, l2=args.l2_normalize)
    diagram = vr_persistence(pairwise_distances(cloud), max_dim=args.max_dim)
    rows = []
    for p in diagram.pairs:
        be = p.birth_edge or (-1, -1)
        de = p.death_edge or (-1, -1)
        rows.append((p.dim, p.birth, p.death, be[0], be[1], de[0], de[1]))
    write_csv(args.out, ("dim", "birth", "death", "birth_i", "birth_j", "death_i", "death_j"), rows)


def cmd_tc_loss(args):
    params = _tc_params(args)
    X = load_cloud(args.x, l2=args.l2_normalize)
    Y = load_cloud(args.y, l2=args.l2_normalize)
    dx = vr_persistence(pairwise_distances(X), max_dim=params.max_dim)
    dy = vr_persistence(pairwise_distances(Y), max_dim=params.max_dim)
    print(format_float(tc_loss(dx, dy, params)))


def cmd_features(args):
    params = _tc_params(args)
    Y = load_cloud(args.batch, l2=args.l2_normalize)
    Z = load_cloud(args.holdout, l2=args.l2_normalize)
    T = load_cloud(args.text, l2=args.l2_normalize)
    fn = exact_features if args.exact else batch_features
    write_emb(args.out, fn(Y, Z, T, params).grads)


def cmd_mmd_test(args):
    clean = load_cloud(args.clean, l2=args.l2_normalize)
    test = load_cloud(args.test, l2=args.l2_normalize)
    kernel = KernelParams(method=args.kernel).method
    if kernel in ("TPSAMMD", "MKSAMMD") and (args.clean_feats is None or args.test_feats is None):
        raise InputValidationError(f"kernel {kernel} needs --clean-feats and --test-feats (see the 'features' command)")
    cf = load_cloud(args.clean_feats) if args.clean_feats else clean
    tf = load_cloud(args.test_feats) if args.test_feats else test
    if cf.shape[0] != clean.shape[0] or tf.shape[0] != test.shape[0]:
        raise InputValidationError("feature files must have one row per embedding row")

    b = args.batch_size
    order_c = np.random.default_rng([args.seed, 0]).permutation(clean.shape[0])
    order_t = np.random.default_rng([args.seed, 1]).permutation(test.shape[0])
    c = args.calibration_size if args.optimize_steps > 0 else 0
    cal_c, pool_c = order_c[:c], order_c[c:]
    cal_t, pool_t = order_t[:c], order_t[c:]
    if pool_c.size < b or pool_t.size < b:
        raise InputValidationError(f"need at least {b} rows per side after calibration")

    if c:
        sx, sy = (clean[cal_c], cf[cal_c]), (test[cal_t], tf[cal_t])
        p0 = initial_params(kernel, sx, sy)
        scales = _floats(args.bandwidth_scales)
        params = optimize_kernel(sx, sy, p0, steps=args.optimize_steps, lr=args.lr, bandwidth_scales=scales)
    else:
        params = initial_params(kernel, (clean[pool_c], cf[pool_c]), (test[pool_t], tf[pool_t]))

    rows = []
    for t in range(args.trials):
        rng = np.random.default_rng([args.seed, 2, t])
        xi = rng.choice(pool_c, size=b, replace=False)
        yi = rng.choice(pool_t, size=b, replace=False)
        out = permutation_test(
            (clean[xi], cf[xi]), (test[yi], tf[yi]), params, args.permutations, args.alpha, seed=args.seed * 100003 + t
        )
        rows.append((t, out.statistic, out.threshold, out.p_value, int(out.reject)))
    write_csv(args.out, ("trial", "statistic", "threshold", "p_value", "reject"), rows)
    print(f"rejection rate {format_float(sum(r[-1] for r in rows) / len(rows))}")


def cmd_pcp_sim(args):
    study = mst_length_study(_floats(args.alpha_small), _floats(args.ratio), args.n, args.k, args.reps, args.seed)
    write_csv(args.out, MstStudy.HEADER, study.rows)


def cmd_pcp_sample(args):
    params = PcpParams.even(args.k, args.alpha_small, args.ratio, args.n, seed=args.seed)
    sample = sample_pcp(params, standard_simplex(args.k))
    write_emb(args.out, sample.points)
    if args.lambdas_out:
        write_csv(args.lambdas_out, [f"lambda_{j}" for j in range(args.k + 1)], sample.barycentric.tolist())
    if args.labels_out:
        write_csv(args.labels_out, ["label"], [[int(v)] for v in sample.labels])


def cmd_mixture_curve(args):
    params = _tc_params(args)
    curve = mixture_curve(
        load_cloud(args.clean, l2=args.l2_normalize),
        load_cloud(args.adv, l2=args.l2_normalize),
        load_cloud(args.text, l2=args.l2_normalize),
        args.steps,
        params,
        seeds=_ints(args.seeds),
    )
    write_csv(
        args.out,
        ("ratio", "raw_loss", "normalized_loss"),
        zip(curve.ratios.tolist(), curve.raw_loss.tolist(), curve.normalized_loss.tolist()),
    )
    print(f"trend {curve.trend} spearman {format_float(curve.spearman)}")


def cmd_dirichlet_fit(args):
    lam = _read_lambdas(args.input)
    fit = dirichlet_mle(lam, max_iter=args.max_iter)
    write_csv(args.out, ("component", "alpha"), [(j, float(a)) for j, a in enumerate(fit.alpha)])


def _read_lambdas(path):
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.split(",")]
        return read_csv_cloud(path)
    except ValueError:
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def cmd_detect_study(args):
    config = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        config.seed = args.seed
    result = detection_study(config)
    write_csv(args.out, DetectionResult.HEADER, result.rows)
    label = "power" if config.mode == "power" else "type-I"
    for k, rate in result.rates.items():
        print(f"{k} {label} {format_float(rate)} seed {config.seed}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toposig", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=fn)
        p.add_argument("--l2-normalize", action="store_true", help="L2-normalize every ingested row")
        return p

    p = add("persistence", cmd_persistence, help="persistence diagram of a cloud as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--max-dim", type=int, default=1)
    p.add_argument("--out", default="/dev/stdout")

    p = add("tc-loss", cmd_tc_loss, help="topological-contrastive loss between two clouds")
    _tc_args(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)

    p = add("features", cmd_features, help="topological features of a batch (EMB1 output)")
    _tc_args(p, default_max_dim=0)
    p.add_argument("--batch", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--exact", action="store_true", help="one filtration per sample")
    p.add_argument("--out", required=True)

    p = add("mmd-test", cmd_mmd_test, help="repeated permutation MMD tests")
    p.add_argument("--clean", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--clean-feats")
    p.add_argument("--test-feats")
    p.add_argument("--kernel", choices=["tpsammd", "mksammd", "sammd-emb", "gaussian"], default="tpsammd")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--optimize-steps", type=int, default=0)
    p.add_argument("--calibration-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--bandwidth-scales", default="0.1,0.3,1,3", help="restart factors for the median bandwidths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    pcp = sub.add_parser("pcp", help="cluster-process simulator")
    pcp_sub = pcp.add_subparsers(dest="pcp_command", required=True)
    p = pcp_sub.add_parser("sim", help="Monte Carlo MST length over a parameter grid")
    p.set_defaults(func=cmd_pcp_sim)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--alpha-small", default="0.05,0.2,1.0")
    p.add_argument("--ratio", default="12,20,40")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p = pcp_sub.add_parser("sample", help="draw one cloud")
    p.set_defaults(func=cmd_pcp_sample)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--alpha-small", type=float, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--lambdas-out")
    p.add_argument("--labels-out")

    p = add("mixture-curve", cmd_mixture_curve, help="normalized loss versus adversarial fraction")
    _tc_args(p, default_max_dim=0)
    p.add_argument("--clean", required=True)
    p.add_argument("--adv", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", required=True)

    p = sub.add_parser("dirichlet-fit", help="maximum-likelihood Dirichlet concentrations")
    p.set_defaults(func=cmd_dirichlet_fit)
    p.add_argument("--input", required=True)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect-study", help="power or Type-I study from a JSON config")
    p.set_defaults(func=cmd_detect_study)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except InputValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
