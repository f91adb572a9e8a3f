import numpy as np
import pytest

from lcc.assignment import Assignment, optimal_assignment, overlap_matrix
from lcc.community import Partition
from lcc.correction import (CorrectionPlan, approximate_targets, classify_samples,
                            clustering_loss, clustering_loss_grad,
                            correction_targets, load_plan, orthogonalize_targets,
                            save_plan, subset_metrics)
from lcc.errors import ParameterError, ValidationError

D1 = dict(Z=np.array([[0.0], [0.1], [5.0], [0.2]]),
          y=np.array([0, 0, 1, 1]),
          is_cc=np.array([True, True, False, True]))


def test_classify_perfect():
    part = Partition.from_labels([0, 0, 1, 1])
    y = [0, 0, 1, 1]
    a = optimal_assignment(overlap_matrix(y, part))
    assert classify_samples(y, part, a).all()


def test_classify_hand_trace():
    y = [0, 0, 1, 1]
    part = Partition.from_labels([0, 0, 0, 1])
    a = Assignment(alpha={0: 0, 1: 1}, objective=3)
    assert classify_samples(y, part, a).tolist() == [True, True, False, True]


def test_classify_single_label_single_cluster():
    y = [4, 4, 4]
    part = Partition.from_labels([0, 0, 0])
    a = optimal_assignment(overlap_matrix(y, part))
    assert classify_samples(y, part, a).all()


def test_targets_hand_example():
    plan = correction_targets(D1["Z"], D1["y"], D1["is_cc"], k=1)
    assert plan.is_correctible.tolist() == [False, False, True, False]
    assert plan.targets[2, 0] == pytest.approx(0.2)


def test_targets_no_cc_classmates():
    Z = np.array([[0.0], [1.0]])
    plan = correction_targets(Z, [0, 0], [False, False], k=1)
    assert plan.n_corr == 0


def test_targets_exactly_k_candidates_ignore_distance():
    Z = np.array([[0.0], [10.0], [100.0]])
    y = [0, 0, 0]
    is_cc = [True, True, False]
    plan = correction_targets(Z, y, is_cc, k=2)
    assert plan.targets[2, 0] == pytest.approx(5.0)


def test_loss_hand_example():
    plan = correction_targets(D1["Z"], D1["y"], D1["is_cc"], k=1)
    rep = clustering_loss(D1["Z"], plan)
    assert rep.loss == pytest.approx(4.8)
    assert rep.n_corr == 1


def test_loss_no_correctible_is_zero():
    plan = CorrectionPlan(is_cc=np.ones(3, bool), is_correctible=np.zeros(3, bool),
                          targets=np.zeros((3, 2)), k=1)
    assert clustering_loss(np.zeros((3, 2)), plan).loss == 0.0


def test_loss_zero_when_targets_coincide(rng):
    Z = rng.standard_normal((6, 3))
    plan = CorrectionPlan(is_cc=np.zeros(6, bool),
                          is_correctible=np.ones(6, bool),
                          targets=Z.copy(), k=1)
    assert clustering_loss(Z, plan).loss == 0.0


def test_grad_hand_example():
    plan = correction_targets(D1["Z"], D1["y"], D1["is_cc"], k=1)
    grad = clustering_loss_grad(D1["Z"], plan)
    assert grad[2, 0] == pytest.approx(1.0)
    assert np.all(grad[[0, 1, 3]] == 0.0)


def test_grad_zero_at_kink():
    Z = np.array([[1.0, 2.0]])
    plan = CorrectionPlan(is_cc=np.zeros(1, bool), is_correctible=np.ones(1, bool),
                          targets=Z.copy(), k=1)
    assert np.all(clustering_loss_grad(Z, plan) == 0.0)


def random_plan(rng, n, d):
    is_cc = rng.random(n) < 0.5
    corr = ~is_cc & (rng.random(n) < 0.7)
    targets = np.zeros((n, d))
    targets[corr] = rng.standard_normal((int(corr.sum()), d)) * 2.0
    return CorrectionPlan(is_cc=is_cc, is_correctible=corr, targets=targets, k=1)


def fd_gradient(Z, plan, h=1e-5):
    g = np.zeros_like(Z)
    for i in range(Z.shape[0]):
        for j in range(Z.shape[1]):
            zp, zm = Z.copy(), Z.copy()
            zp[i, j] += h
            zm[i, j] -= h
            g[i, j] = (clustering_loss(zp, plan).loss - clustering_loss(zm, plan).loss) / (2 * h)
    return g


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(99)
    for _ in range(25):
        n = int(rng.integers(2, 20))
        d = int(rng.integers(1, 8))
        Z = rng.standard_normal((n, d)) * 3.0
        plan = random_plan(rng, n, d)
        analytic = clustering_loss_grad(Z, plan)
        numeric = fd_gradient(Z, plan)
        scale = max(np.abs(numeric).max(), 1e-12)
        assert np.abs(analytic - numeric).max() / scale < 1e-6


def test_translation_equivariance(rng):
    n, d = 30, 4
    Z = rng.standard_normal((n, d))
    y = rng.integers(0, 3, n)
    is_cc = rng.random(n) < 0.6
    l0 = clustering_loss(Z, correction_targets(Z, y, is_cc, k=2)).loss
    shift = rng.standard_normal(d) * 10
    l1 = clustering_loss(Z + shift, correction_targets(Z + shift, y, is_cc, k=2)).loss
    assert l0 == pytest.approx(l1, rel=1e-9)


# ---------------------------------------------------------------------------
# approximate mode


def setup_d1_clustered():
    part = Partition.from_labels([0, 0, 0, 1])
    a = Assignment(alpha={0: 0, 1: 1}, objective=3)
    return part, a


def test_approximate_single_candidate_rep():
    part, a = setup_d1_clustered()
    plan = approximate_targets(D1["Z"], D1["y"], part, a, D1["is_cc"], seed=11)
    assert plan.mode == "approximate"
    assert plan.is_correctible.tolist() == [False, False, True, False]
    # cluster 1's only CC sample is index 3
    assert plan.targets[2, 0] == pytest.approx(0.2)
    assert clustering_loss(D1["Z"], plan).loss == pytest.approx(4.8)


def test_approximate_unmatched_label_not_correctible():
    Z = np.array([[0.0], [1.0], [2.0]])
    y = [0, 0, 1]
    part = Partition.from_labels([0, 0, 0])
    a = optimal_assignment(overlap_matrix(y, part))  # only label 0 matched
    is_cc = classify_samples(y, part, a)
    plan = approximate_targets(Z, y, part, a, is_cc, seed=0)
    assert not plan.is_correctible[2]


def test_approximate_picks_nearer_representative():
    Z = np.array([[0.0], [3.0], [10.0], [1.0]])
    y = [0, 0, 1, 0]
    part = Partition.from_labels([0, 1, 2, 2])
    a = Assignment(alpha={0: 0, 1: 0, 2: 1}, objective=3)
    is_cc = np.array([True, True, True, False])
    # sample 3: reps for label 0 sit at 0.0 (distance 1) and 3.0 (distance 2)
    plan = approximate_targets(Z, y, part, a, is_cc, seed=0)
    assert plan.is_correctible[3]
    assert plan.targets[3, 0] == pytest.approx(0.0)


def test_approximate_correctible_set_seed_independent(rng):
    n = 40
    Z = rng.standard_normal((n, 3))
    y = rng.integers(0, 4, n)
    part = Partition.from_labels(rng.integers(0, 5, n))
    a = optimal_assignment(overlap_matrix(y, part))
    is_cc = classify_samples(y, part, a)
    plans = [approximate_targets(Z, y, part, a, is_cc, seed=s) for s in range(5)]
    for p in plans[1:]:
        assert np.array_equal(p.is_correctible, plans[0].is_correctible)
    assert np.array_equal(plans[0].targets,
                          approximate_targets(Z, y, part, a, is_cc, seed=0).targets)


# ---------------------------------------------------------------------------
# orthogonal mode


def test_orthogonal_line_manifold():
    # cluster 0: points on the x-axis; sample 4 is MC with target off-line
    Z = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0],
                  [1.5, 1.0], [10.0, 10.0]])
    part = Partition.from_labels([0, 0, 0, 0, 0, 1])
    plan = CorrectionPlan(
        is_cc=np.array([True, True, True, True, False, True]),
        is_correctible=np.array([False, False, False, False, True, False]),
        targets=np.array([[0.0] * 2] * 4 + [[0.5, 0.5]] + [[0.0] * 2]), k=1)
    out = orthogonalize_targets(Z, part, plan, k_prime=3, variance_fraction=0.95)
    v = Z[4] - plan.targets[4]          # (1.0, 0.5)
    v_perp = Z[4] - out.targets[4]
    assert v_perp[0] == pytest.approx(0.0, abs=1e-12)   # along-line part removed
    assert v_perp[1] == pytest.approx(v[1])
    assert out.mode == "exact+orthogonal"


def test_orthogonal_full_projection_no_pull():
    Z = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [1.5, 0.0]])
    part = Partition.from_labels([0] * 5)
    plan = CorrectionPlan(
        is_cc=np.array([True] * 4 + [False]),
        is_correctible=np.array([False] * 4 + [True]),
        targets=np.vstack([np.zeros((4, 2)), [[0.25, 0.0]]]), k=1)
    out = orthogonalize_targets(Z, part, plan, k_prime=3)
    assert np.allclose(out.targets[4], Z[4])  # v entirely tangent


def test_orthogonal_too_few_comembers_unchanged():
    Z = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]])
    part = Partition.from_labels([0, 0, 1])
    plan = CorrectionPlan(is_cc=np.array([True, False, True]),
                          is_correctible=np.array([False, True, False]),
                          targets=np.array([[0, 0], [3.0, 3.0], [0, 0]], dtype=float), k=1)
    out = orthogonalize_targets(Z, part, plan, k_prime=2)
    assert np.array_equal(out.targets[1], plan.targets[1])


def test_orthogonal_never_lengthens(rng):
    for _ in range(50):
        n, d = 20, 4
        Z = rng.standard_normal((n, d))
        part = Partition.from_labels(rng.integers(0, 3, n))
        y = rng.integers(0, 3, n)
        is_cc = rng.random(n) < 0.5
        plan = correction_targets(Z, y, is_cc, k=2)
        if plan.n_corr == 0:
            continue
        out = orthogonalize_targets(Z, part, plan, k_prime=4)
        for i in np.nonzero(plan.is_correctible)[0]:
            v = np.linalg.norm(Z[i] - plan.targets[i])
            vp = np.linalg.norm(Z[i] - out.targets[i])
            assert vp <= v + 1e-12


def test_orthogonal_rejects_approximate_plans():
    plan = CorrectionPlan(is_cc=np.zeros(2, bool), is_correctible=np.zeros(2, bool),
                          targets=np.zeros((2, 2)), k=1, mode="approximate")
    with pytest.raises(ParameterError):
        orthogonalize_targets(np.zeros((2, 2)), Partition.from_labels([0, 1]), plan, 2)


# ---------------------------------------------------------------------------
# subset metrics


def test_metrics_all_correct_one_hot():
    P = np.eye(3)[[0, 1, 2]]
    m = subset_metrics(P, [0, 1, 2], [True, True, False])
    assert m.acc_cc == 1.0 and m.acc_mc == 1.0 and m.acc_all == 1.0
    assert m.ce_cc <= 1e-11 and m.ce_mc <= 1e-11


def test_metrics_empty_mc_subset_flagged():
    P = np.array([[0.8, 0.2], [0.3, 0.7]])
    m = subset_metrics(P, [0, 1], [True, True])
    assert m.acc_mc is None and m.ce_mc is None
    assert m.acc_cc == 1.0


def test_metrics_hand_values():
    P = np.array([[0.9, 0.1], [0.4, 0.6]])
    m = subset_metrics(P, [0, 0], [True, False])
    assert m.acc_cc == 1.0 and m.acc_mc == 0.0
    assert m.ce_cc == pytest.approx(-np.log(0.9))
    assert m.ce_mc == pytest.approx(-np.log(0.4))
    assert m.acc_all == pytest.approx(0.5)


def test_metrics_weighted_mean_identity(rng):
    n = 50
    y = rng.integers(0, 4, n)
    P = rng.random((n, 4))
    P /= P.sum(axis=1, keepdims=True)
    is_cc = rng.random(n) < 0.5
    m = subset_metrics(P, y, is_cc)
    if m.acc_cc is not None and m.acc_mc is not None:
        mixed = (m.acc_cc * m.n_cc + m.acc_mc * m.n_mc) / n
        assert m.acc_all == pytest.approx(mixed)


def test_metrics_nonstochastic_rejected():
    with pytest.raises(ValidationError):
        subset_metrics(np.array([[0.5, 0.4]]), [0], [True])


# ---------------------------------------------------------------------------
# plan file I/O


def test_plan_round_trip(tmp_path, rng):
    n, d = 15, 3
    Z = rng.standard_normal((n, d))
    y = rng.integers(0, 3, n)
    is_cc = rng.random(n) < 0.6
    plan = correction_targets(Z, y, is_cc, k=2).quantized()
    p = tmp_path / "plan.lccp"
    save_plan(plan, p)
    back = load_plan(p)
    assert np.array_equal(back.is_cc, plan.is_cc)
    assert np.array_equal(back.is_correctible, plan.is_correctible)
    assert np.array_equal(back.targets[back.is_correctible],
                          plan.targets[plan.is_correctible])
    # file-level round trip is bit-exact
    p2 = tmp_path / "plan2.lccp"
    save_plan(back, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_plan_bad_magic(tmp_path):
    p = tmp_path / "bad.lccp"
    p.write_bytes(b"NOPE" + bytes(20))
    from lcc.errors import FormatError
    with pytest.raises(FormatError):
        load_plan(p)


def test_correctibility_recount(rng):
    for _ in range(30):
        n = int(rng.integers(5, 60))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 4))
        Z = rng.standard_normal((n, d))
        y = rng.integers(0, 3, n)
        is_cc = rng.random(n) < 0.5
        plan = correction_targets(Z, y, is_cc, k=k)
        for i in range(n):
            expected = (not is_cc[i]) and int(np.sum(is_cc & (y == y[i]))) >= k
            assert plan.is_correctible[i] == expected


def test_class_and_cluster_scope_agree_on_single_cluster_labels(rng):
    # one cluster per label: the per-cluster index search reduces to per-class
    for _ in range(20):
        n_labels = int(rng.integers(2, 4))
        n = n_labels * 12
        y = np.repeat(np.arange(n_labels), 12)
        Z = rng.standard_normal((n, 3)) + y[:, None] * 5.0
        part = Partition.from_labels(y)
        alpha = {c: int(c) for c in range(n_labels)}
        a = Assignment(alpha=alpha, objective=n)
        is_cc = rng.random(n) < 0.7
        k = int(rng.integers(1, 4))
        p_class = correction_targets(Z, y, is_cc, k=k)
        p_clust = correction_targets(Z, y, is_cc, k=k, partition=part,
                                     assignment=a, scope="cluster")
        assert np.array_equal(p_class.is_correctible, p_clust.is_correctible)
        assert np.allclose(p_class.targets, p_clust.targets)
