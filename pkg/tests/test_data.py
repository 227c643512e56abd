import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nstate.data import (ArtifactSpec, ContainerError, EpochSet, FoldPlan,
                         Recording, crop, epoch, merge_epoch_sets,
                         read_container, select_channels,
                         stratified_group_kfold, synth_cohort, write_container)
from nstate.dsp import BAND_BY_NAME, band_power, welch_psd
from nstate.montage import COGN26_CHANNELS, RansacParams, ransac_bad_channels
from nstate.numerics import seeded_rng


def small_recording(seed=0, channels=3, samples=1_000, condition="GI"):
    data = seeded_rng(seed, 50).standard_normal((channels, samples)).astype(np.float32)
    names = tuple(f"E{i+1}" for i in range(channels))
    return Recording(data, 250.0, names, "subjX", condition)


def small_epochs(seed=0):
    return epoch(small_recording(seed))


def test_recording_validation():
    with pytest.raises(ValueError):
        Recording(np.zeros((2, 10), dtype=np.float32), 250.0, ("a",), "s", "GI")
    with pytest.raises(ValueError):
        Recording(np.zeros((1, 10)), 250.0, ("a",), "s", "REST")
    bad = np.zeros((1, 10), dtype=np.float32)
    bad[0, 3] = np.inf
    with pytest.raises(ValueError):
        Recording(bad, 250.0, ("a",), "s", "GI")


def test_container_round_trip_recording(tmp_path):
    rec = small_recording(channels=2, samples=500)
    path = tmp_path / "rec.nseeg"
    write_container(path, rec)
    back = read_container(path)
    assert isinstance(back, Recording)
    assert np.array_equal(back.data, rec.data)
    assert back.channel_names == rec.channel_names
    assert back.subject_id == rec.subject_id and back.condition == rec.condition
    write_container(tmp_path / "rec2.nseeg", back)
    assert path.read_bytes() == (tmp_path / "rec2.nseeg").read_bytes()


def test_container_round_trip_epochs(tmp_path):
    eset = small_epochs()
    path = tmp_path / "ep.nseeg"
    write_container(path, eset)
    back = read_container(path)
    assert isinstance(back, EpochSet)
    assert np.array_equal(back.epochs, eset.epochs)
    assert np.array_equal(back.labels, eset.labels)
    assert back.groups == eset.groups


def test_container_bad_magic(tmp_path):
    path = tmp_path / "bad.nseeg"
    path.write_bytes(b"XXXXXXXX" + b"\x00" * 32)
    with pytest.raises(ContainerError):
        read_container(path)


def test_container_truncated_data(tmp_path):
    path = tmp_path / "trunc.nseeg"
    write_container(path, small_epochs())
    blob = path.read_bytes()
    path.write_bytes(blob[:-100])
    with pytest.raises(ContainerError):
        read_container(path)


def test_crop_canonical_window():
    rec = small_recording(samples=20 * 60 * 250)
    out = crop(rec)
    assert out.data.shape[1] == 30_000
    assert out.duration == pytest.approx(120.0)
    assert out.provenance["crop_seconds"] == [600.0, 720.0]


def test_crop_full_span_is_identity():
    rec = small_recording(samples=1_000)
    out = crop(rec, 0.0, 4.0)
    assert np.array_equal(out.data, rec.data)


def test_crop_too_short():
    rec = small_recording(samples=10 * 60 * 250)
    with pytest.raises(ValueError):
        crop(rec, 600.0, 720.0)


def test_epoch_counts():
    rec = small_recording(samples=120 * 250)
    eset = epoch(rec)
    assert len(eset) == 120
    assert eset.epochs.shape == (120, 3, 250)
    assert np.all(eset.labels == 1)
    assert set(eset.groups) == {"subjX"}


def test_epoch_single_segment_identity():
    rec = small_recording(samples=250)
    eset = epoch(rec)
    assert len(eset) == 1
    assert np.array_equal(eset.epochs[0], rec.data)


def test_epoch_drops_trailing_partial():
    rec = small_recording(samples=260)
    eset = epoch(rec)
    assert len(eset) == 1
    assert eset.provenance["dropped_samples"] == 10


def test_epoch_preserves_sample_order():
    rec = small_recording(samples=500)
    eset = epoch(rec)
    assert np.array_equal(eset.epochs[0], rec.data[:, :250])
    assert np.array_equal(eset.epochs[1], rec.data[:, 250:])


def test_select_channels_cogn26():
    names = tuple(f"E{i+1}" for i in range(256))
    epochs = seeded_rng(1, 51).standard_normal((4, 256, 250)).astype(np.float32)
    eset = EpochSet(epochs, np.zeros(4, dtype=np.int8), ("s",) * 4, names)
    sub = select_channels(eset, COGN26_CHANNELS)
    assert sub.epochs.shape[1] == 26
    assert sub.channel_names == COGN26_CHANNELS
    src = names.index("E98")
    assert np.array_equal(sub.epochs[:, 0, :], eset.epochs[:, src, :])


def test_select_channels_identity_and_errors():
    eset = small_epochs()
    same = select_channels(eset, eset.channel_names)
    assert np.array_equal(same.epochs, eset.epochs)
    with pytest.raises(ValueError):
        select_channels(eset, ["E999"])


def test_label_integrity_through_select_and_subset():
    # sentinel: epoch i has constant value i, label i%2, group g{i%3}
    n = 12
    epochs = np.tile(np.arange(n, dtype=np.float32)[:, None, None], (1, 4, 250))
    labels = (np.arange(n) % 2).astype(np.int8)
    groups = tuple(f"g{i % 3}" for i in range(n))
    eset = EpochSet(epochs, labels, groups, ("a", "b", "c", "d"))
    sub = select_channels(eset, ["c", "a"])
    for i in range(n):
        assert sub.epochs[i, 0, 0] == i
        assert sub.labels[i] == i % 2
        assert sub.groups[i] == f"g{i % 3}"
    picked = eset.subset([3, 7, 11])
    assert [int(v) for v in picked.epochs[:, 0, 0]] == [3, 7, 11]
    assert picked.groups == ("g0", "g1", "g2")


def make_cohort_epochs(n_groups=26, per_group=120):
    labels = []
    groups = []
    for g in range(n_groups):
        labels += [g % 2] * per_group
        groups += [f"s{g:02d}"] * per_group
    return np.array(labels, dtype=np.int8), groups


def test_splitter_26_subjects_fold_sizes():
    labels, groups = make_cohort_epochs()
    plan = stratified_group_kfold(labels, groups, k=6, seed=3)
    sizes = sorted(len(f.val_idx) for f in plan.folds)
    assert set(sizes) <= {480, 600}
    assert sum(sizes) == 3_120
    for fold in plan.folds:
        train_groups = {groups[i] for i in fold.train_idx}
        val_groups = {groups[i] for i in fold.val_idx}
        assert not train_groups & val_groups
        assert {labels[i] for i in fold.val_idx} == {0, 1}


def test_splitter_one_group_per_fold():
    labels, groups = make_cohort_epochs(n_groups=6, per_group=10)
    plan = stratified_group_kfold(labels, groups, k=6, seed=1)
    for fold in plan.folds:
        assert len({groups[i] for i in fold.val_idx}) == 1


def test_splitter_needs_enough_groups():
    labels, groups = make_cohort_epochs(n_groups=4, per_group=5)
    with pytest.raises(ValueError):
        stratified_group_kfold(labels, groups, k=6, seed=0)


def test_splitter_rejects_mixed_label_group():
    labels = np.array([0, 1, 0, 1], dtype=np.int8)
    groups = ["a", "a", "b", "b"]
    with pytest.raises(ValueError):
        stratified_group_kfold(labels, groups, k=2, seed=0)


def test_fold_plan_json_round_trip():
    labels, groups = make_cohort_epochs(n_groups=8, per_group=4)
    plan = stratified_group_kfold(labels, groups, k=4, seed=9)
    clone = FoldPlan.from_json(plan.to_json())
    assert clone.k == plan.k and clone.seed == plan.seed
    assert clone.group_to_fold == plan.group_to_fold
    for a, b in zip(clone.folds, plan.folds):
        assert np.array_equal(a.train_idx, b.train_idx)
        assert np.array_equal(a.val_idx, b.val_idx)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(6, 14), st.integers(2, 5))
def test_splitter_partition_properties(seed, n_groups, k):
    sizes = seeded_rng(seed, 60).integers(1, 9, size=n_groups)
    labels = []
    groups = []
    for g in range(n_groups):
        labels += [g % 2] * int(sizes[g])
        groups += [f"g{g}"] * int(sizes[g])
    labels = np.array(labels, dtype=np.int8)
    plan = stratified_group_kfold(labels, groups, k=k, seed=seed)
    n = len(labels)
    all_val = np.concatenate([f.val_idx for f in plan.folds])
    assert sorted(all_val.tolist()) == list(range(n))
    for fold in plan.folds:
        assert sorted(np.concatenate([fold.train_idx, fold.val_idx]).tolist()) == \
            list(range(n))
        assert not set(fold.train_idx.tolist()) & set(fold.val_idx.tolist())
        assert not {groups[i] for i in fold.train_idx} & \
            {groups[i] for i in fold.val_idx}


def test_synth_cohort_is_deterministic():
    a, _ = synth_cohort(2, channels=8, delta=1.0, seed=5, duration=10.0)
    b, _ = synth_cohort(2, channels=8, delta=1.0, seed=5, duration=10.0)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.data, rb.data)
        assert ra.condition == rb.condition


def test_synth_cohort_rejects_odd_count():
    with pytest.raises(ValueError):
        synth_cohort(3, channels=8, duration=5.0)


def test_synth_cohort_balanced_conditions():
    recs, montage = synth_cohort(6, channels=16, delta=0.0, seed=2, duration=5.0)
    conditions = [r.condition for r in recs]
    assert conditions.count("GI") == 3 and conditions.count("MT") == 3
    assert len(montage) == 16


def test_synth_zero_delta_rms_matched():
    recs, _ = synth_cohort(4, channels=12, delta=0.0, seed=7, duration=20.0)
    rms = {c: [] for c in ("GI", "MT")}
    for rec in recs:
        rms[rec.condition].append(np.sqrt((rec.data.astype(np.float64) ** 2).mean()))
    gi, mt = np.mean(rms["GI"]), np.mean(rms["MT"])
    assert abs(gi - mt) <= 0.05 * mt


def test_synth_strong_delta_band_contrast():
    recs, montage = synth_cohort(6, channels=26, delta=3.0, seed=13, duration=30.0)
    focus = recs[0].provenance["focus_channels"]
    idx = [montage.channels.index(c) for c in focus]
    alpha = {c: [] for c in ("GI", "MT")}
    for rec in recs:
        est = welch_psd(rec.data, fs=rec.fs)
        alpha[rec.condition].append(band_power(est, BAND_BY_NAME["alpha"])[idx].mean())
    assert np.mean(alpha["GI"]) >= 5.0 * np.mean(alpha["MT"])


def test_synth_oscillation_frequency_jitter():
    recs, _ = synth_cohort(8, channels=8, delta=1.0, seed=3, duration=5.0)
    for rec in recs:
        f0 = rec.provenance["oscillation_hz"]
        centre = 10.0 if rec.condition == "GI" else 20.0
        assert abs(f0 - centre) <= 1.0


def test_synth_flat_artifact_detected_by_consensus():
    art = [ArtifactSpec(0, "E98", "flat")]
    recs, montage = synth_cohort(2, channels=32, delta=1.0, artifacts=art,
                                 seed=6, duration=30.0)
    bad = ransac_bad_channels(recs[0], montage, RansacParams(seed=3))
    assert "E98" in bad
    clean = ransac_bad_channels(recs[1], montage, RansacParams(seed=3))
    assert "E98" not in clean


def test_merge_epoch_sets_requires_matching_channels():
    a = small_epochs()
    rec = small_recording(channels=4)
    with pytest.raises(ValueError):
        merge_epoch_sets([a, epoch(rec)])
