"""CC/MC classification, correction targets, clustering loss and gradient.

A sample is correctly clustered (CC) when the label matched to its cluster
equals its own label, misclustered (MC) otherwise. An MC sample with at
least k CC classmates is correctible: its target is the centroid of its k
nearest CC classmates, and the clustering loss averages the (dimension-
normalized) distances of correctible samples to their targets. Targets are
constants; the gradient treats them as detached.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .assignment import Assignment
from .community import Partition
from .errors import FormatError, ParameterError, ValidationError

PLAN_MAGIC = b"LCCP"
PLAN_VERSION = 1
_PLAN_HEADER = struct.Struct("<4sIQQ")

# below this, the norm is treated as zero and the subgradient 0 is used
_ZERO_NORM = 1e-12


@dataclass(frozen=True)
class CorrectionPlan:
    """Per-sample CC/correctible flags and target vectors.

    ``targets`` is an N x d matrix whose rows are meaningful only where
    ``is_correctible`` is set (other rows are zero).
    """

    is_cc: np.ndarray
    is_correctible: np.ndarray
    targets: np.ndarray
    k: int
    mode: str = "exact"

    def __post_init__(self):
        cc = np.ascontiguousarray(self.is_cc, dtype=bool)
        corr = np.ascontiguousarray(self.is_correctible, dtype=bool)
        tgt = np.ascontiguousarray(self.targets, dtype=np.float64)
        if tgt.ndim != 2 or cc.shape != (tgt.shape[0],) or corr.shape != cc.shape:
            raise ValidationError("plan arrays have inconsistent shapes")
        if np.any(corr & cc):
            raise ValidationError("a CC sample cannot be correctible")
        if not np.all(np.isfinite(tgt[corr])):
            raise ValidationError("non-finite correction target")
        for a, name in ((cc, "is_cc"), (corr, "is_correctible"), (tgt, "targets")):
            object.__setattr__(self, name, a)
            a.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.is_cc.size

    @property
    def dim(self) -> int:
        return self.targets.shape[1]

    @property
    def n_corr(self) -> int:
        return int(self.is_correctible.sum())

    def quantized(self) -> "CorrectionPlan":
        """Targets rounded through float32, matching the on-disk precision."""
        tgt = self.targets.astype(np.float32).astype(np.float64)
        return CorrectionPlan(is_cc=self.is_cc, is_correctible=self.is_correctible,
                              targets=tgt, k=self.k, mode=self.mode)


@dataclass(frozen=True)
class LossReport:
    loss: float
    n_corr: int
    mode: str
    gradient: Optional[np.ndarray] = None
    per_sample_terms: Optional[Dict[int, float]] = None

    def to_json_dict(self) -> dict:
        return {"loss": self.loss, "n_corr": self.n_corr, "mode": self.mode}


@dataclass(frozen=True)
class SubsetMetrics:
    """Accuracy and cross-entropy over the CC subset, MC subset, and all.

    A field is None when its subset is empty.
    """

    acc_cc: Optional[float]
    acc_mc: Optional[float]
    acc_all: Optional[float]
    ce_cc: Optional[float]
    ce_mc: Optional[float]
    ce_all: Optional[float]
    n_cc: int
    n_mc: int


def classify_samples(y, partition: Partition, assignment: Assignment) -> np.ndarray:
    """Boolean is_cc vector: the label matched to the sample's cluster is its own."""
    y = np.asarray(y, dtype=np.int64)
    if y.size != partition.n_nodes:
        raise ParameterError("y and partition cover different numbers of samples")
    alpha_arr = np.empty(partition.n_clusters, dtype=np.int64)
    for c in range(partition.n_clusters):
        if c not in assignment.alpha:
            raise ParameterError("assignment does not cover cluster %d" % c)
        alpha_arr[c] = assignment.alpha[c]
    return alpha_arr[partition.cluster_of] == y


def _nearest_rows(Z: np.ndarray, z: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k candidates nearest to z; distance ties by smaller index."""
    d2 = np.sum((Z[candidates] - z) ** 2, axis=1)
    order = np.argsort(d2, kind="stable")[:k]
    return candidates[order]


def correction_targets(Z, y, is_cc, k: int, *, partition: Optional[Partition] = None,
                       assignment: Optional[Assignment] = None,
                       scope: str = "class") -> CorrectionPlan:
    """Exact-mode correction targets.

    ``scope="class"`` (default): an MC sample is correctible iff its class has
    at least k CC samples; the target is the centroid of the k nearest of
    them. ``scope="cluster"``: per-(label, cluster) candidate centroids are
    built from clusters matched to the label that hold at least k CC samples,
    and the nearest candidate centroid wins (ties by smaller cluster id);
    requires ``partition`` and ``assignment``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    is_cc = np.asarray(is_cc, dtype=bool)
    n, d = Z.shape
    if y.shape != (n,) or is_cc.shape != (n,):
        raise ParameterError("Z, y and is_cc must agree on N")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ParameterError("k must be a positive integer")
    if scope not in ("class", "cluster"):
        raise ParameterError("scope must be 'class' or 'cluster'")
    if scope == "cluster" and (partition is None or assignment is None):
        raise ParameterError("cluster scope needs a partition and an assignment")

    correctible = np.zeros(n, dtype=bool)
    targets = np.zeros((n, d), dtype=np.float64)

    for t in np.unique(y):
        in_t = y == t
        mc_idx = np.nonzero(in_t & ~is_cc)[0]
        if mc_idx.size == 0:
            continue
        if scope == "class":
            cc_idx = np.nonzero(in_t & is_cc)[0]
            if cc_idx.size < k:
                continue
            for i in mc_idx:
                chosen = _nearest_rows(Z, Z[i], cc_idx, k)
                targets[i] = Z[chosen].mean(axis=0)
                correctible[i] = True
        else:
            pools = []  # (cluster_id, CC indices) for clusters matched to t
            for c in range(partition.n_clusters):
                if assignment.alpha[c] != int(t):
                    continue
                cc_c = np.nonzero(in_t & is_cc & (partition.cluster_of == c))[0]
                if cc_c.size >= k:
                    pools.append((c, cc_c))
            if not pools:
                continue
            for i in mc_idx:
                best = None
                for c, cc_c in pools:
                    cand = Z[_nearest_rows(Z, Z[i], cc_c, k)].mean(axis=0)
                    dist = float(np.linalg.norm(Z[i] - cand))
                    if best is None or dist < best[0]:
                        best = (dist, cand)
                targets[i] = best[1]
                correctible[i] = True
    return CorrectionPlan(is_cc=is_cc, is_correctible=correctible, targets=targets,
                          k=int(k), mode="exact")


def approximate_targets(Z, y, partition: Partition, assignment: Assignment,
                        is_cc, seed: int = 0) -> CorrectionPlan:
    """One random CC representative per cluster; nearest matching one is the target.

    An MC sample is correctible iff at least one cluster is matched to its
    label. The representative draw is seeded; ties in the nearest-
    representative distance go to the smaller cluster id.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    is_cc = np.asarray(is_cc, dtype=bool)
    n, d = Z.shape
    rng = np.random.default_rng(seed)
    rep_of = {}  # cluster id -> representative sample index
    for c in range(partition.n_clusters):
        cc_c = np.nonzero(is_cc & (partition.cluster_of == c))[0]
        if cc_c.size:
            rep_of[c] = int(cc_c[rng.integers(cc_c.size)])
    clusters_of_label: Dict[int, list] = {}
    for c in sorted(rep_of):
        clusters_of_label.setdefault(assignment.alpha[c], []).append(c)

    correctible = np.zeros(n, dtype=bool)
    targets = np.zeros((n, d), dtype=np.float64)
    for i in np.nonzero(~is_cc)[0]:
        cands = clusters_of_label.get(int(y[i]))
        if not cands:
            continue
        best = None
        for c in cands:  # ascending cluster id, strict < keeps the smaller on ties
            z_rep = Z[rep_of[c]]
            dist = float(np.linalg.norm(Z[i] - z_rep))
            if best is None or dist < best[0]:
                best = (dist, z_rep)
        targets[i] = best[1]
        correctible[i] = True
    return CorrectionPlan(is_cc=is_cc, is_correctible=correctible, targets=targets,
                          k=1, mode="approximate")


def clustering_loss(Z, plan: CorrectionPlan, with_per_sample: bool = False) -> LossReport:
    """Mean dimension-normalized distance of correctible samples to their targets."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != plan.targets.shape:
        raise ParameterError("Z shape %s does not match plan %s" % (Z.shape, plan.targets.shape))
    idx = np.nonzero(plan.is_correctible)[0]
    n_corr = idx.size
    if n_corr == 0:
        return LossReport(loss=0.0, n_corr=0, mode=plan.mode,
                          per_sample_terms={} if with_per_sample else None)
    norms = np.linalg.norm(Z[idx] - plan.targets[idx], axis=1)
    d = Z.shape[1]
    loss = float(norms.sum() / (np.sqrt(d) * n_corr))
    terms = {int(i): float(v) for i, v in zip(idx, norms)} if with_per_sample else None
    return LossReport(loss=loss, n_corr=int(n_corr), mode=plan.mode, per_sample_terms=terms)


def clustering_loss_grad(Z, plan: CorrectionPlan) -> np.ndarray:
    """Analytic gradient of the clustering loss w.r.t. Z, targets held constant.

    Row i is (z_i - target_i) / (sqrt(d) * n_corr * ||z_i - target_i||) for
    correctible i; zero elsewhere and at the norm's kink.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != plan.targets.shape:
        raise ParameterError("Z shape %s does not match plan %s" % (Z.shape, plan.targets.shape))
    grad = np.zeros_like(Z)
    n_corr = plan.n_corr
    if n_corr == 0:
        return grad
    d = Z.shape[1]
    scale = np.sqrt(d) * n_corr
    for i in np.nonzero(plan.is_correctible)[0]:
        diff = Z[i] - plan.targets[i]
        norm = float(np.linalg.norm(diff))
        if norm > _ZERO_NORM:
            grad[i] = diff / (scale * norm)
    return grad


def orthogonalize_targets(Z, partition: Partition, plan: CorrectionPlan,
                          k_prime: int, variance_fraction: float = 0.95) -> CorrectionPlan:
    """Project each correction vector off the local tangent space.

    The tangent space at a correctible sample is estimated by PCA over its
    k' nearest co-members of its current cluster, keeping the smallest
    leading set of directions explaining at least ``variance_fraction`` of
    the variance. Samples with fewer than k' co-members keep their target.
    """
    if plan.mode != "exact":
        raise ParameterError("orthogonal correction applies to exact-mode plans only")
    if k_prime < 2:
        raise ParameterError("k_prime must be >= 2")
    if not (0.0 < variance_fraction <= 1.0):
        raise ParameterError("variance_fraction must be in (0, 1]")
    Z = np.asarray(Z, dtype=np.float64)
    if partition.n_nodes != Z.shape[0]:
        raise ParameterError("partition does not match Z")
    targets = plan.targets.copy()
    for i in np.nonzero(plan.is_correctible)[0]:
        members = np.nonzero(partition.cluster_of == partition.cluster_of[i])[0]
        members = members[members != i]
        if members.size < k_prime:
            continue
        nbrs = _nearest_rows(Z, Z[i], members, k_prime)
        X = Z[nbrs] - Z[nbrs].mean(axis=0)
        _, s, vt = np.linalg.svd(X, full_matrices=False)
        var = s ** 2
        total = float(var.sum())
        if total <= 0.0:
            continue  # degenerate neighborhood, no tangent estimate
        r = int(np.searchsorted(np.cumsum(var) / total, variance_fraction) + 1)
        basis = vt[:r]
        v = Z[i] - targets[i]
        v_perp = v - basis.T @ (basis @ v)
        targets[i] = Z[i] - v_perp
    return CorrectionPlan(is_cc=plan.is_cc, is_correctible=plan.is_correctible,
                          targets=targets, k=plan.k, mode="exact+orthogonal")


def subset_metrics(pred_probs, y, is_cc, prob_floor: float = 1e-12) -> SubsetMetrics:
    """Accuracy and cross-entropy on the CC and MC subsets and overall.

    ``pred_probs`` columns are indexed by ascending label id; each row must
    sum to 1 within 1e-6.
    """
    P = np.asarray(pred_probs, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    is_cc = np.asarray(is_cc, dtype=bool)
    if P.ndim != 2 or P.shape[0] != y.size or is_cc.shape != y.shape:
        raise ParameterError("pred_probs, y and is_cc must agree on N")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-6):
        raise ValidationError("pred_probs rows must be nonnegative and sum to 1")
    label_ids = np.unique(y)
    if label_ids.max() < P.shape[1] and label_ids.min() >= 0:
        # labels address columns directly (the usual contiguous-label case;
        # extra columns are labels absent from this subset)
        col_of = y
    elif P.shape[1] == label_ids.size:
        col_of = np.searchsorted(label_ids, y)
    else:
        raise ParameterError("pred_probs has %d columns for %d labels"
                             % (P.shape[1], label_ids.size))
    pred = np.argmax(P, axis=1)  # first maximum = smaller label on ties
    hits = pred == col_of
    p_true = np.maximum(P[np.arange(y.size), col_of], prob_floor)
    ce = -np.log(p_true)

    def agg(mask):
        if not mask.any():
            return None, None
        return float(hits[mask].mean()), float(ce[mask].mean())

    acc_cc, ce_cc = agg(is_cc)
    acc_mc, ce_mc = agg(~is_cc)
    acc_all, ce_all = agg(np.ones_like(is_cc))
    return SubsetMetrics(acc_cc=acc_cc, acc_mc=acc_mc, acc_all=acc_all,
                         ce_cc=ce_cc, ce_mc=ce_mc, ce_all=ce_all,
                         n_cc=int(is_cc.sum()), n_mc=int((~is_cc).sum()))


# ---------------------------------------------------------------------------
# plan file I/O


def save_plan(plan: CorrectionPlan, path) -> None:
    """Write a plan: header, then per sample a flag byte and, for correctible
    samples only, d float32 target coordinates."""
    n, d = plan.n_samples, plan.dim
    with open(path, "wb") as fh:
        fh.write(_PLAN_HEADER.pack(PLAN_MAGIC, PLAN_VERSION, n, d))
        tgt32 = plan.targets.astype("<f4")
        for i in range(n):
            flags = (1 if plan.is_cc[i] else 0) | (2 if plan.is_correctible[i] else 0)
            fh.write(bytes([flags]))
            if plan.is_correctible[i]:
                fh.write(tgt32[i].tobytes())


def load_plan(path) -> CorrectionPlan:
    with open(path, "rb") as fh:
        head = fh.read(_PLAN_HEADER.size)
        if len(head) < _PLAN_HEADER.size:
            raise FormatError("file too short for plan header")
        magic, version, n, d = _PLAN_HEADER.unpack(head)
        if magic != PLAN_MAGIC:
            raise FormatError("bad magic %r, expected %r" % (magic, PLAN_MAGIC))
        if version != PLAN_VERSION:
            raise FormatError("unsupported plan version %d" % version)
        is_cc = np.zeros(n, dtype=bool)
        corr = np.zeros(n, dtype=bool)
        targets = np.zeros((n, d), dtype=np.float64)
        for i in range(n):
            b = fh.read(1)
            if not b:
                raise FormatError("truncated plan at sample %d" % i)
            flags = b[0]
            is_cc[i] = bool(flags & 1)
            corr[i] = bool(flags & 2)
            if corr[i]:
                buf = fh.read(4 * d)
                if len(buf) != 4 * d:
                    raise FormatError("truncated target at sample %d" % i)
                targets[i] = np.frombuffer(buf, dtype="<f4")
    return CorrectionPlan(is_cc=is_cc, is_correctible=corr, targets=targets,
                          k=0, mode="exact")
