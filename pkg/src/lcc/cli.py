"""Command-line interface.

Subcommands: generate, knn, cluster, assign, targets, loss, metrics,
pipeline. Exit codes: 0 success, 1 validation/parameter error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import community, correction
from .assignment import optimal_assignment, overlap_matrix
from .community import CommunityConfig
from .dataset import BlobSpec, generate_blobs, load_dataset, save_dataset
from .errors import FormatError, LccError
from .knn import build_knn_graph
from .pipeline import PipelineConfig, run_pipeline

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _beta(value: str):
    if value == "median":
        return value
    return float(value)


def _add_dataset_args(p):
    p.add_argument("--input", required=True, help="dataset file")
    p.add_argument("--format", default="binary", choices=["binary", "csv"],
                   help="dataset file format")


def _add_graph_args(p):
    p.add_argument("--k", type=int, default=5, help="neighbor count")
    p.add_argument("--beta", type=_beta, default=1.0,
                   help="RBF bandwidth (positive real or 'median')")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcc", description="Latent cluster correction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic blob dataset")
    p.add_argument("--n-labels", type=int, required=True)
    p.add_argument("--clusters-per-label", type=int, default=1)
    p.add_argument("--samples-per-cluster", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--half-width", type=float, default=20.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mislabel-fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="binary", choices=["binary", "csv"])
    p.add_argument("--output", required=True)

    p = sub.add_parser("knn", help="build the k-NN graph and dump its edges")
    _add_dataset_args(p)
    _add_graph_args(p)
    p.add_argument("--output", required=True, help="edge list output ('i j w' lines)")

    p = sub.add_parser("cluster", help="cluster the k-NN graph")
    _add_dataset_args(p)
    _add_graph_args(p)
    p.add_argument("--mode", default="leiden", choices=["louvain", "leiden", "pressure"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="partition dump ('node cluster' lines)")
    p.add_argument("--report", help="JSON diagnostics output")

    p = sub.add_parser("assign", help="match clusters to true labels")
    _add_dataset_args(p)
    _add_graph_args(p)
    p.add_argument("--mode", default="leiden", choices=["louvain", "leiden", "pressure"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partition", help="reuse a partition dump instead of clustering")
    p.add_argument("--output", required=True, help="JSON assignment report")

    p = sub.add_parser("targets", help="compute a correction plan")
    _add_dataset_args(p)
    _add_graph_args(p)
    p.add_argument("--mode", default="leiden", choices=["louvain", "leiden", "pressure"])
    p.add_argument("--loss-mode", default="exact", choices=["exact", "approximate"])
    p.add_argument("--orthogonal", action="store_true")
    p.add_argument("--k-prime", type=int, default=50)
    p.add_argument("--variance-fraction", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="correction plan (.lccp)")

    p = sub.add_parser("loss", help="evaluate the clustering loss of a plan")
    _add_dataset_args(p)
    p.add_argument("--plan", required=True, help="correction plan (.lccp)")
    p.add_argument("--gradient", help="optional gradient output (.lccd layout)")
    p.add_argument("--output", help="JSON loss report (default: stdout)")

    p = sub.add_parser("metrics", help="CC/MC subset accuracy and cross-entropy")
    _add_dataset_args(p)
    p.add_argument("--plan", required=True, help="correction plan (.lccp)")
    p.add_argument("--probs", required=True,
                   help="CSV of predicted probabilities, header p0,...,p{L-1}")
    p.add_argument("--output", help="JSON metrics output (default: stdout)")

    p = sub.add_parser("pipeline", help="run the full per-epoch procedure")
    _add_dataset_args(p)
    _add_graph_args(p)
    p.add_argument("--mode", default="leiden", choices=["louvain", "leiden", "pressure"])
    p.add_argument("--loss-mode", default="exact", choices=["exact", "approximate"])
    p.add_argument("--orthogonal", action="store_true")
    p.add_argument("--k-prime", type=int, default=50)
    p.add_argument("--variance-fraction", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-gradient", action="store_true")
    p.add_argument("--gradient-out", help="gradient output file (.lccd layout)")
    p.add_argument("--out", "--output", dest="out", required=True,
                   help="correction plan output (.lccp)")
    p.add_argument("--report", help="JSON report output")
    p.add_argument("--w", type=float, default=1e-4,
                   help="loss weight metadata for the external trainer")
    return parser


def _load_probs(path) -> np.ndarray:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty probabilities file")
        d = len(header)
        if header != ["p%d" % j for j in range(d)]:
            raise FormatError("probabilities header must be p0,...,p%d" % max(d - 1, 0))
        rows = [[float(v) for v in rec] for rec in reader if rec]
    if not rows:
        raise FormatError("probabilities file contains no rows")
    return np.asarray(rows, dtype=np.float64)


def _cluster_from_args(args, dataset):
    graph = build_knn_graph(dataset.z64(), args.k, beta=args.beta)
    info: dict = {}
    if args.mode == "pressure":
        partition, state = community.knn_pressure(graph, seed=args.seed)
        info["passes"] = len(state.conductance_history)
    else:
        partition = community.louvain(
            graph, CommunityConfig(mode=args.mode, seed=args.seed), info=info)
    return graph, partition, info


def _emit_json(payload: dict, path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    if args.command == "generate":
        spec = BlobSpec(n_labels=args.n_labels, clusters_per_label=args.clusters_per_label,
                        samples_per_cluster=args.samples_per_cluster, dim=args.dim,
                        center_box_half_width=args.half_width, cluster_sigma=args.sigma,
                        mislabel_fraction=args.mislabel_fraction, seed=args.seed)
        save_dataset(generate_blobs(spec), args.output, format=args.format)
        return EXIT_OK

    dataset = load_dataset(args.input, format=args.format)

    if args.command == "knn":
        graph = build_knn_graph(dataset.z64(), args.k, beta=args.beta)
        graph.dump(args.output)
        return EXIT_OK

    if args.command == "cluster":
        graph, partition, info = _cluster_from_args(args, dataset)
        partition.dump(args.output)
        if args.report:
            _emit_json({
                "Q": community.modularity(graph, partition),
                "Phi": community.conductance_clustering(graph, partition),
                "Phi_literal": community.conductance_clustering_literal(graph, partition),
                "n_clusters": partition.n_clusters,
                "passes": info.get("passes", 0),
            }, args.report)
        return EXIT_OK

    if args.command == "assign":
        if args.partition:
            partition = community.Partition.load(args.partition)
        else:
            _, partition, _ = _cluster_from_args(args, dataset)
        overlap = overlap_matrix(dataset.y, partition)
        assignment = optimal_assignment(overlap)
        is_cc = correction.classify_samples(dataset.y, partition, assignment)
        _emit_json({
            "alpha": {str(c): t for c, t in sorted(assignment.alpha.items())},
            "objective": assignment.objective,
            "n_cc": int(is_cc.sum()),
            "n_mc": int((~is_cc).sum()),
        }, args.output)
        return EXIT_OK

    if args.command == "targets":
        _, partition, _ = _cluster_from_args(args, dataset)
        overlap = overlap_matrix(dataset.y, partition)
        assignment = optimal_assignment(overlap)
        is_cc = correction.classify_samples(dataset.y, partition, assignment)
        Z = dataset.z64()
        if args.loss_mode == "exact":
            plan = correction.correction_targets(Z, dataset.y, is_cc, args.k)
            if args.orthogonal:
                plan = correction.orthogonalize_targets(
                    Z, partition, plan, args.k_prime, args.variance_fraction)
        else:
            plan = correction.approximate_targets(
                Z, dataset.y, partition, assignment, is_cc, seed=args.seed)
        correction.save_plan(plan.quantized(), args.output)
        return EXIT_OK

    if args.command == "loss":
        plan = correction.load_plan(args.plan)
        Z = dataset.z64()
        report = correction.clustering_loss(Z, plan)
        if args.gradient:
            grad = correction.clustering_loss_grad(Z, plan)
            from .dataset import LatentDataset
            save_dataset(LatentDataset(Z=grad.astype(np.float32),
                                       y=np.zeros(Z.shape[0], dtype=np.uint32)),
                         args.gradient, format="binary")
        _emit_json(report.to_json_dict(), args.output)
        return EXIT_OK

    if args.command == "metrics":
        plan = correction.load_plan(args.plan)
        probs = _load_probs(args.probs)
        m = correction.subset_metrics(probs, dataset.y, plan.is_cc)
        _emit_json({
            "acc_cc": m.acc_cc, "acc_mc": m.acc_mc, "acc_all": m.acc_all,
            "ce_cc": m.ce_cc, "ce_mc": m.ce_mc, "ce_all": m.ce_all,
            "n_cc": m.n_cc, "n_mc": m.n_mc,
        }, args.output)
        return EXIT_OK

    if args.command == "pipeline":
        config = PipelineConfig(
            input=args.input, k=args.k, beta=args.beta, cluster_mode=args.mode,
            loss_mode=args.loss_mode, orthogonal=args.orthogonal,
            k_prime=args.k_prime, variance_fraction=args.variance_fraction,
            seed=args.seed, emit_gradient=args.emit_gradient,
            plan_out=args.out, gradient_out=args.gradient_out,
            report_out=args.report, input_format=args.format, w=args.w)
        report = run_pipeline(config)
        if not args.report:
            _emit_json(report.to_json_dict(), None)
        return EXIT_OK

    raise AssertionError("unreachable: %r" % args.command)


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except LccError as exc:
        print("lcc: error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print("lcc: I/O error: %s" % exc, file=sys.stderr)
        return EXIT_IO


def main() -> None:
    raise SystemExit(cli_dispatch())


if __name__ == "__main__":
    main()
