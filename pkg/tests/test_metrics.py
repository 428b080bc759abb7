import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hoiplan.errors import InvalidInput, NotEstimable
from hoiplan.geometry import sdf_sphere
from hoiplan.metrics import (
    MetricReport,
    MotionSequence,
    condition_matching,
    contact_labels,
    contact_metrics,
    diversity,
    estimate_floor,
    fid,
    floor_from_joints,
    foot_height,
    foot_sliding,
    foot_sliding_terms,
    mpjpe,
    orientation_error,
    penetration,
    r_precision,
    translation_errors,
)
from oracles import all_pairs_mean_distance, random_rotation, rot_z, sqrtm_psd_newton

I6 = [1, 0, 0, 0, 1, 0]


def seq(obj_t, obj_R=None, root=None):
    obj_t = np.asarray(obj_t, float)
    T = len(obj_t)
    return MotionSequence(
        np.zeros((T, 3)) if root is None else np.asarray(root, float),
        np.tile(I6, (T, 2, 1)).astype(float),
        obj_t,
        np.tile(np.eye(3), (T, 1, 1)) if obj_R is None else np.asarray(obj_R, float),
    )


def test_motion_sequence_validation():
    with pytest.raises(InvalidInput):
        seq(np.zeros((2, 3)), obj_R=np.tile(2 * np.eye(3), (2, 1, 1)))
    with pytest.raises(InvalidInput):
        seq([[0, 0, np.nan]])


def test_condition_matching_examples():
    s = seq([[0, 0, 0], [1, 1, 0]])
    assert condition_matching(s, [0, 0, 0], [1, 1, 0]) == {"T_s": 0.0, "T_e": 0.0}
    r = condition_matching(s, [0.01, 0, 0], [1.03, 1.04, 0])
    assert r["T_s"] == pytest.approx(1.0)
    assert r["T_e"] == pytest.approx(5.0)


def test_condition_matching_uses_centroid_offset():
    s = seq([[0, 0, 0]], obj_R=[rot_z(np.pi / 2)])
    r = condition_matching(s, [0, 1, 0], [0, 1, 0], centroid_offset=[1, 0, 0])
    assert r["T_s"] == pytest.approx(0.0, abs=1e-12)


def test_floor_examples():
    z = np.zeros((10, 2))
    assert estimate_floor(z, np.zeros((10, 2))) == 0.0
    rng = np.random.default_rng(0)
    stance = np.concatenate([0.010 + rng.uniform(-0.002, 0.002, 80), np.full(20, 0.50)])
    assert estimate_floor(stance, np.zeros(100)) == pytest.approx(0.010, abs=5e-4)
    # moving frames are ignored even when they sit lower
    z2 = np.array([0.3, 0.3, -0.4])
    assert estimate_floor(z2, np.array([0.0, 0.0, 1.0])) == pytest.approx(0.3)
    with pytest.raises(NotEstimable):
        estimate_floor(z, np.ones((10, 2)))


@given(c=st.floats(-2, 2), seed=st.integers(0, 1000))
def test_floor_translation_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0, 0.5, 40)
    v = rng.uniform(0, 0.01, 40)
    if not (v < 0.005).any():
        return
    assert estimate_floor(z + c, v) == pytest.approx(estimate_floor(z, v) + c, abs=1e-9)


def test_floor_fallback_warns():
    J = np.zeros((5, 2, 3))
    J[:, :, 0] = np.arange(5)[:, None]  # toes always moving 1 m per frame
    with pytest.warns(UserWarning):
        z, status = floor_from_joints(J, (0, 1))
    assert (z, status) == (0.0, "fallback")


def test_foot_height_examples():
    assert foot_height(np.zeros((4, 2)), 0.0) == 0.0
    assert foot_height(np.full((4, 2), 0.15), 0.1) == pytest.approx(5.0)
    assert foot_height([0.02, 0.04], 0.0) == pytest.approx(3.0)


def one_joint_slide(z, d, H=0.08):
    P = np.zeros((2, 1, 3))
    P[:, 0, 2] = z
    P[1, 0, 0] = d
    return foot_sliding_terms(P, 0.0, [H])[0, 0]


def test_foot_sliding_examples():
    assert one_joint_slide(0.0, 0.1) == pytest.approx(0.1)
    assert one_joint_slide(0.08, 0.1) == 0.0
    assert one_joint_slide(0.04, 0.1) == pytest.approx(0.1 * (2 - np.sqrt(2)))
    assert abs(one_joint_slide(0.04, 0.1) - 0.05858) < 1e-5


def test_foot_sliding_normalization():
    # four joints, two transitions, only one slide of 0.1 m at floor level
    P = np.full((3, 4, 3), 0.5)
    P[:, :, 2] = 1.0
    P[0, 0, 2] = 0.0
    P[1, 0, 0] += 0.1
    assert foot_sliding(P, 0.0) == pytest.approx(0.1 / 8 * 100)
    with pytest.raises(InvalidInput):
        foot_sliding(P[:1], 0.0)


@given(
    seed=st.integers(0, 10**6),
    lift=st.floats(1e-9, 1),
)
def test_hovering_feet_never_slide(seed, lift):
    rng = np.random.default_rng(seed)
    H = np.array([0.08, 0.08, 0.04, 0.04])
    P = rng.uniform(-1, 1, (6, 4, 3))
    P[:, :, 2] = H + lift + 0.3
    assert foot_sliding(P, 0.3, H) == 0.0
    P[:, :, 2] = H  # exactly at threshold, measured from a zero floor
    assert foot_sliding(P, 0.0, H) == 0.0


def hands_at(dists):
    H = np.zeros((len(dists), 2, 3))
    H[:, 0, 0] = dists
    H[:, 1, 0] = 10.0
    return H


def test_contact_label_examples():
    V = [np.zeros((1, 3))] * 4
    labels = contact_labels(hands_at([0.0, 0.049, 0.051, 0.05]), V)
    assert labels.tolist() == [True, True, False, False]
    with pytest.raises(InvalidInput):
        contact_labels(hands_at([0.0]), [np.zeros((0, 3))])


def test_contact_metrics_examples():
    gt = np.array([1, 1, 0, 0], bool)
    r = contact_metrics(gt, gt)
    assert (r["C_prec"], r["C_rec"], r["C_F1"], r["C_pct"]) == (1.0, 1.0, 1.0, 0.5)
    r = contact_metrics(np.ones(4, bool), gt)
    assert (r["C_prec"], r["C_rec"]) == (0.5, 1.0)
    assert r["C_F1"] == pytest.approx(2 / 3)
    r = contact_metrics(np.zeros(4, bool), gt)
    assert r["C_rec"] == 0.0 and r["C_F1"] == 0.0
    assert "C_prec" in r["flags"]
    with pytest.raises(InvalidInput):
        contact_metrics(gt, gt[:3])


@given(p=st.lists(st.booleans(), min_size=1, max_size=30), seed=st.integers(0, 100))
def test_f1_is_harmonic_mean(p, seed):
    p = np.array(p)
    g = np.random.default_rng(seed).random(len(p)) < 0.5
    r = contact_metrics(p, g)
    if r["C_prec"] > 0 and r["C_rec"] > 0:
        assert r["C_F1"] == pytest.approx(2 / (1 / r["C_prec"] + 1 / r["C_rec"]))


def test_penetration_examples():
    s = sdf_sphere([0, 0, 0], 1.0)
    assert penetration([[2.0, 0, 0], [0, 3, 0]], s) == 0.0
    assert penetration([[0.95, 0, 0]], s) == pytest.approx(5.0)
    assert penetration([[0.98, 0, 0], [2.0, 0, 0]], s) == pytest.approx(1.0)
    assert penetration([[0.98, 0, 0], [2.0, 0, 0]], s, penetrating_only=True) == pytest.approx(2.0)
    assert penetration([[2.0, 0, 0]], s, penetrating_only=True) == 0.0


@given(r=st.floats(0.0, 1.5), dr=st.floats(0.0, 0.5))
def test_penetration_monotone_in_depth(r, dr):
    s = sdf_sphere([0, 0, 0], 1.0)
    # moving a point toward the center never reduces penetration
    assert penetration([[max(r - dr, 0.0), 0, 0]], s) >= penetration([[r, 0, 0]], s) - 1e-12


def test_mpjpe_examples():
    a = np.random.default_rng(0).standard_normal((5, 3, 3))
    assert mpjpe(a, a) == 0.0
    b = np.zeros((1, 1, 3))
    assert mpjpe(b + [0.03, 0.04, 0], b) == pytest.approx(5.0)
    t = np.array([0.1, -0.2, 0.3])
    assert mpjpe(a + t, a) == pytest.approx(np.linalg.norm(t) * 100)
    with pytest.raises(InvalidInput):
        mpjpe(a, a[:, :2])


@settings(max_examples=30)
@given(seed=st.integers(0, 10**6))
def test_gt_differences_rigid_invariant(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 4, 5, 3))
    Q, t = random_rotation(rng), rng.standard_normal(3)
    assert mpjpe(a @ Q.T + t, b @ Q.T + t) == pytest.approx(mpjpe(a, b), rel=1e-12)
    Ra = np.stack([random_rotation(rng) for _ in range(4)])
    Rb = np.stack([random_rotation(rng) for _ in range(4)])
    assert orientation_error(Q @ Ra, Q @ Rb) == pytest.approx(orientation_error(Ra, Rb), rel=1e-12)


def test_orientation_examples():
    I = np.tile(np.eye(3), (3, 1, 1))
    assert orientation_error(I, I) == 0.0
    assert orientation_error(I, np.tile(rot_z(np.pi / 2), (3, 1, 1))) == pytest.approx(2.0)
    assert orientation_error(I, np.tile(rot_z(np.pi), (3, 1, 1))) == pytest.approx(2 * np.sqrt(2))


def test_translation_errors():
    a = seq([[0, 0, 0], [0, 0, 0]], root=[[0, 0, 0], [0, 0, 0]])
    b = seq([[0.03, 0.04, 0], [0, 0, 0]], root=[[0.01, 0, 0], [0.01, 0, 0]])
    r = translation_errors(a, b)
    assert r["T_root"] == pytest.approx(1.0)
    assert r["T_obj"] == pytest.approx(2.5)


def fid_oracle(a, b):
    Sa, Sb = np.cov(a, rowvar=False), np.cov(b, rowvar=False)
    cross = sqrtm_psd_newton(Sa @ Sb)
    return float(np.sum((a.mean(0) - b.mean(0)) ** 2) + np.trace(Sa + Sb - 2 * cross))


def test_fid_examples():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((200, 4))
    assert abs(fid(a, a)) <= 1e-8
    b = rng.standard_normal((150, 4)) * [1, 2, 0.5, 1] + 0.3
    assert abs(fid(a, b) - fid(b, a)) <= 1e-8
    assert fid(a, b) == pytest.approx(fid_oracle(a, b), rel=1e-8)
    x = rng.standard_normal(100_000)
    y = rng.standard_normal(100_000) + 1
    assert abs(fid(x, y) - 1.0) <= 0.05
    with pytest.raises(InvalidInput):
        fid([[np.inf]] * 3, a[:, :1])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.integers(1, 6))
def test_fid_properties(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3 * d + 10, d))
    b = rng.standard_normal((2 * d + 12, d)) @ rng.standard_normal((d, d)) + rng.standard_normal(d)
    v = fid(a, b)
    assert v >= 0
    assert abs(v - fid(b, a)) <= 1e-8 * max(1.0, v)
    assert fid(a, a) <= 1e-8


def test_fid_rank_deficient_covariance():
    # fewer samples than dimensions: covariance is singular but the result is finite
    a = np.random.default_rng(0).standard_normal((3, 8))
    assert np.isfinite(fid(a, a + 1.0))
    assert fid(a, a + 1.0) == pytest.approx(8.0, abs=1e-6)


def test_diversity_examples():
    assert diversity(np.ones((5, 3)), 100, np.random.default_rng(0)) == 0.0
    assert diversity([[0, 0], [2, 0]], 17, np.random.default_rng(0)) == pytest.approx(2.0)
    line = np.array([[0.0], [1.0], [2.0], [3.0]])
    assert diversity(line) == pytest.approx(10 / 6)
    a = diversity(line, 50, np.random.default_rng(3))
    assert a == diversity(line, 50, np.random.default_rng(3))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 12))
def test_diversity_exhaustive_matches_all_pairs(seed, n):
    F = np.random.default_rng(seed).standard_normal((n, 3))
    assert diversity(F) == pytest.approx(all_pairs_mean_distance(F), rel=1e-12)


def test_diversity_sampled_converges():
    F = np.random.default_rng(1).standard_normal((20, 4))
    est = diversity(F, 200_000, np.random.default_rng(2))
    assert est == pytest.approx(all_pairs_mean_distance(F), rel=0.01)


def test_r_precision_examples():
    rng = np.random.default_rng(0)
    t = rng.standard_normal((40, 16))
    assert r_precision(t, t, 32, np.random.default_rng(1)) == 1.0
    # text i points along e_i; its motion keeps a weak e_i component while the
    # three following motions point straight at it, so the pair always ranks 4th
    n = 32
    E = np.eye(n)
    motion = np.stack([0.5 * E[i] + E[(i - 1) % n] + E[(i - 2) % n] + E[(i - 3) % n] for i in range(n)])
    assert r_precision(E, motion, 32, np.random.default_rng(0)) == 0.0
    assert r_precision(E, motion, 32, np.random.default_rng(0), top_k=4) == 1.0
    with pytest.raises(InvalidInput):
        r_precision(t[:10], t[:10], 32)


def test_r_precision_random_rate():
    rng = np.random.default_rng(5)
    N = 3000
    t = rng.standard_normal((N, 8))
    m = rng.standard_normal((N, 8))
    p = 3 / 32
    se = np.sqrt(p * (1 - p) / N)
    assert abs(r_precision(t, m, 32, np.random.default_rng(6)) - p) <= 4 * se


def test_metric_report():
    rep = MetricReport()
    rep.add("FID", 1.5)
    rep.not_applicable("DIV")
    assert rep.get("FID").value == 1.5
    assert rep.get("DIV").status == "not-applicable"
    assert set(rep.as_dict()) == {"FID", "DIV"}
    with pytest.raises(KeyError):
        rep.get("nope")
