"""Recordings, epoch sets, the container file format, splits, synthetic data.

Label encoding is fixed: the mental-workload condition is 0, the relaxation
condition is 1, and every metric treats 1 as the positive class.

Container format (magic ``NSEEG001``): one byte of payload kind (0 for a
continuous recording, 1 for an epoch set), a little-endian u32 header
length, a UTF-8 JSON header, then the raw 32-bit little-endian samples in
row-major order. Write/read round-trips are bit-exact.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .montage import POSTERIOR_POLE, Montage, fibonacci_montage
from .numerics import seeded_rng

CANONICAL_FS = 250.0
LABEL_OF = {"MT": 0, "GI": 1}
CONDITION_OF = {0: "MT", 1: "GI"}

CONTAINER_MAGIC = b"NSEEG001"
KIND_RECORDING = 0
KIND_EPOCHS = 1


class ContainerError(ValueError):
    pass


@dataclass
class Recording:
    """Continuous multichannel signal in microvolts."""

    data: np.ndarray  # (channels, samples) float32
    fs: float
    channel_names: tuple[str, ...]
    subject_id: str
    condition: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        self.channel_names = tuple(self.channel_names)
        if self.data.ndim != 2 or self.data.shape[0] != len(self.channel_names):
            raise ValueError("data must be (channels, samples) matching channel names")
        if self.condition not in LABEL_OF:
            raise ValueError(f"condition must be one of {sorted(LABEL_OF)}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("recording contains non-finite samples")

    @property
    def label(self) -> int:
        return LABEL_OF[self.condition]

    @property
    def duration(self) -> float:
        return self.data.shape[1] / self.fs


@dataclass
class EpochSet:
    """Fixed-length epochs with per-epoch labels and subject groups."""

    epochs: np.ndarray  # (n_epochs, channels, samples) float32
    labels: np.ndarray  # (n_epochs,) int8
    groups: tuple[str, ...]
    channel_names: tuple[str, ...]
    fs: float = CANONICAL_FS
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.epochs = np.ascontiguousarray(self.epochs, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        self.groups = tuple(self.groups)
        self.channel_names = tuple(self.channel_names)
        if self.epochs.ndim != 3:
            raise ValueError("epochs must be (n_epochs, channels, samples)")
        n = self.epochs.shape[0]
        if len(self.labels) != n or len(self.groups) != n:
            raise ValueError("labels/groups length must equal the epoch count")
        if self.epochs.shape[1] != len(self.channel_names):
            raise ValueError("channel axis does not match channel names")

    def __len__(self) -> int:
        return self.epochs.shape[0]

    def subset(self, idx) -> "EpochSet":
        idx = np.asarray(idx, dtype=np.intp)
        return EpochSet(self.epochs[idx], self.labels[idx],
                        tuple(self.groups[i] for i in idx),
                        self.channel_names, self.fs, dict(self.provenance))


def write_container(path, payload: Recording | EpochSet) -> None:
    if isinstance(payload, Recording):
        kind = KIND_RECORDING
        header = {"fs": payload.fs, "channel_names": list(payload.channel_names),
                  "subject_id": payload.subject_id, "condition": payload.condition,
                  "shape": list(payload.data.shape), "provenance": payload.provenance}
        raw = payload.data
    elif isinstance(payload, EpochSet):
        kind = KIND_EPOCHS
        header = {"fs": payload.fs, "channel_names": list(payload.channel_names),
                  "labels": [int(v) for v in payload.labels],
                  "groups": list(payload.groups),
                  "shape": list(payload.epochs.shape), "provenance": payload.provenance}
        raw = payload.epochs
    else:
        raise TypeError(f"cannot write {type(payload).__name__} as a container")
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CONTAINER_MAGIC)
        fh.write(struct.pack("<BI", kind, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(raw, dtype="<f4").tobytes())


def read_container(path) -> Recording | EpochSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CONTAINER_MAGIC:
        raise ContainerError(f"{path}: bad magic")
    if len(data) < 13:
        raise ContainerError(f"{path}: truncated header")
    kind, hlen = struct.unpack("<BI", data[8:13])
    blob = data[13 : 13 + hlen]
    if len(blob) != hlen:
        raise ContainerError(f"{path}: truncated header")
    header = json.loads(blob.decode("utf-8"))
    shape = tuple(int(d) for d in header["shape"])
    expected = 4 * int(np.prod(shape))
    body = data[13 + hlen :]
    if len(body) != expected:
        raise ContainerError(f"{path}: header declares {expected} data bytes, "
                             f"found {len(body)}")
    values = np.frombuffer(body, dtype="<f4").reshape(shape)
    if kind == KIND_RECORDING:
        return Recording(values, header["fs"], tuple(header["channel_names"]),
                         header["subject_id"], header["condition"],
                         header.get("provenance", {}))
    if kind == KIND_EPOCHS:
        return EpochSet(values, np.array(header["labels"], dtype=np.int8),
                        tuple(header["groups"]), tuple(header["channel_names"]),
                        header["fs"], header.get("provenance", {}))
    raise ContainerError(f"{path}: unknown payload kind {kind}")


def crop(recording: Recording, start: float = 600.0, end: float = 720.0) -> Recording:
    """Keep samples in [start*fs, end*fs); the canonical window is 600-720 s."""
    if end <= start:
        raise ValueError("end must exceed start")
    i0 = int(round(start * recording.fs))
    i1 = int(round(end * recording.fs))
    if recording.data.shape[1] < i1:
        raise ValueError(f"recording of {recording.duration:.1f}s is shorter than "
                         f"the requested {end:.1f}s endpoint")
    prov = dict(recording.provenance)
    prov["crop_seconds"] = [start, end]
    return replace(recording, data=recording.data[:, i0:i1], provenance=prov)


def epoch(recording: Recording, seconds: float = 1.0) -> EpochSet:
    """Split into consecutive fixed-length epochs; a trailing partial is dropped."""
    samples = int(round(seconds * recording.fs))
    n = recording.data.shape[1] // samples
    dropped = recording.data.shape[1] - n * samples
    chans = recording.data.shape[0]
    arr = recording.data[:, : n * samples].reshape(chans, n, samples)
    arr = np.ascontiguousarray(arr.transpose(1, 0, 2))
    prov = dict(recording.provenance)
    prov["epoch_seconds"] = seconds
    if dropped:
        prov["dropped_samples"] = dropped
    return EpochSet(arr, np.full(n, recording.label, dtype=np.int8),
                    (recording.subject_id,) * n, recording.channel_names,
                    recording.fs, prov)


def merge_epoch_sets(sets: list[EpochSet]) -> EpochSet:
    if not sets:
        raise ValueError("nothing to merge")
    first = sets[0]
    for other in sets[1:]:
        if other.channel_names != first.channel_names or other.fs != first.fs:
            raise ValueError("epoch sets disagree on channels or sampling rate")
    prov = {"subjects": {}}
    for s in sets:
        for g in dict.fromkeys(s.groups):
            prov["subjects"][g] = s.provenance
    return EpochSet(np.concatenate([s.epochs for s in sets]),
                    np.concatenate([s.labels for s in sets]),
                    tuple(g for s in sets for g in s.groups),
                    first.channel_names, first.fs, prov)


def select_channels(eset: EpochSet, subset) -> EpochSet:
    """Reduce and reorder the channel axis to the given name list."""
    lookup = {name: i for i, name in enumerate(eset.channel_names)}
    try:
        idx = [lookup[name] for name in subset]
    except KeyError as exc:
        raise ValueError(f"unknown channel {exc.args[0]!r}") from None
    prov = dict(eset.provenance)
    prov["channel_subset"] = list(subset)
    return EpochSet(np.ascontiguousarray(eset.epochs[:, idx, :]), eset.labels,
                    eset.groups, tuple(subset), eset.fs, prov)


@dataclass
class Fold:
    train_idx: np.ndarray
    val_idx: np.ndarray


@dataclass
class FoldPlan:
    folds: list[Fold]
    k: int
    seed: int
    group_to_fold: dict[str, int]

    def to_json(self) -> str:
        payload = {"k": self.k, "seed": self.seed,
                   "group_to_fold": self.group_to_fold,
                   "folds": [{"train": fold.train_idx.tolist(),
                              "val": fold.val_idx.tolist()} for fold in self.folds]}
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FoldPlan":
        payload = json.loads(text)
        folds = [Fold(np.array(f["train"], dtype=np.intp),
                      np.array(f["val"], dtype=np.intp)) for f in payload["folds"]]
        return cls(folds, payload["k"], payload["seed"], payload["group_to_fold"])


def stratified_group_kfold(labels, groups, k: int = 6, seed: int = 0) -> FoldPlan:
    """Group-exclusive folds with per-fold label counts balanced greedily.

    Groups are shuffled, then each is assigned to the fold currently holding
    the fewest samples of its label (ties broken by total size, then fold
    index). A group never spans the train and validation side of any fold;
    each group must carry a single label.
    """
    labels = np.asarray(labels)
    groups = list(groups)
    if len(labels) != len(groups):
        raise ValueError("labels/groups length mismatch")
    order: dict[str, int] = {}
    for g in groups:
        order.setdefault(g, len(order))
    unique = list(order)
    if len(unique) < k:
        raise ValueError(f"need at least {k} groups, have {len(unique)}")
    group_label = {}
    group_size = {}
    garr = np.array(groups)
    for g in unique:
        mask = garr == g
        lab = np.unique(labels[mask])
        if len(lab) != 1:
            raise ValueError(f"group {g!r} carries more than one label")
        group_label[g] = int(lab[0])
        group_size[g] = int(mask.sum())
    rng = seeded_rng(seed, stream=0)
    shuffled = [unique[i] for i in rng.permutation(len(unique))]
    label_counts = {lab: [0] * k for lab in set(group_label.values())}
    totals = [0] * k
    group_to_fold: dict[str, int] = {}
    for g in shuffled:
        lab = group_label[g]
        fold = min(range(k), key=lambda f: (label_counts[lab][f], totals[f], f))
        group_to_fold[g] = fold
        label_counts[lab][fold] += group_size[g]
        totals[fold] += group_size[g]
    fold_of_epoch = np.array([group_to_fold[g] for g in groups])
    folds = []
    for f in range(k):
        val = np.flatnonzero(fold_of_epoch == f)
        train = np.flatnonzero(fold_of_epoch != f)
        folds.append(Fold(train, val))
    return FoldPlan(folds, k, seed, group_to_fold)


@dataclass(frozen=True)
class ArtifactSpec:
    """Channel corruption injected into one synthetic subject."""

    subject: int
    channel: str
    kind: str  # "flat" | "noisy"

    def __post_init__(self) -> None:
        if self.kind not in ("flat", "noisy"):
            raise ValueError("artifact kind must be 'flat' or 'noisy'")


BASELINE_RMS_UV = 20.0
_N_SOURCES = 12
_MIX_KAPPA = 3.0
_SENSOR_NOISE_UV = 2.0


def _pink_noise(rng: np.random.Generator, n_sources: int, n: int) -> np.ndarray:
    """Unit-variance 1/f noise rows, shaped in the frequency domain."""
    white = rng.standard_normal((n_sources, n))
    spectrum = np.fft.rfft(white, axis=1)
    freq = np.fft.rfftfreq(n)
    shaping = np.zeros_like(freq)
    shaping[1:] = 1.0 / np.sqrt(freq[1:])
    pink = np.fft.irfft(spectrum * shaping, n=n, axis=1)
    return pink / pink.std(axis=1, keepdims=True)


def iter_synth_cohort(n_subjects: int, channels: int | Montage = 32,
                      delta: float = 1.0, artifacts=None, seed: int = 0,
                      duration: float = 1200.0, fs: float = CANONICAL_FS):
    """Yield synthetic subjects one at a time (see ``synth_cohort``)."""
    if n_subjects % 2 != 0 or n_subjects < 2:
        raise ValueError("subject count must be even (half per condition)")
    if delta < 0:
        raise ValueError("separation must be non-negative")
    montage = channels if isinstance(channels, Montage) else fibonacci_montage(channels)
    artifacts = list(artifacts or [])
    positions = montage.positions
    n_ch = len(montage)
    angle = np.arccos(np.clip(positions @ POSTERIOR_POLE, -1.0, 1.0))
    # Gaussian taper wide enough that the quarter of channels nearest the
    # pole (the designated oscillation carriers) sit above half amplitude.
    n_focus = max(1, -(-n_ch // 4))
    theta0 = max(np.sort(angle)[n_focus - 1] / math.sqrt(math.log(2.0)),
                 math.radians(20.0))
    taper = np.exp(-((angle / theta0) ** 2))
    focus = [montage.channels[i] for i in np.flatnonzero(taper >= 0.5)]
    n_samples = int(round(duration * fs))
    t = np.arange(n_samples) / fs
    for i in range(n_subjects):
        rng = seeded_rng(seed, stream=100 + i)
        condition = "GI" if i % 2 == 0 else "MT"
        sources = _pink_noise(rng, _N_SOURCES, n_samples)
        directions = rng.standard_normal((_N_SOURCES, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        mixing = np.exp(_MIX_KAPPA * (directions @ positions.T - 1.0))  # (src, ch)
        base = mixing.T @ sources
        base *= BASELINE_RMS_UV / base.std(axis=1, keepdims=True)
        center_hz = 10.0 if condition == "GI" else 20.0
        osc_hz = center_hz + rng.uniform(-1.0, 1.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        gain = math.exp(rng.normal(0.0, 0.2))
        amp = delta * BASELINE_RMS_UV * gain * taper
        signal = base + amp[:, None] * np.sin(2.0 * math.pi * osc_hz * t + phase)
        signal += _SENSOR_NOISE_UV * rng.standard_normal((n_ch, n_samples))
        injected = []
        for artifact in artifacts:
            if artifact.subject != i:
                continue
            row = montage.index([artifact.channel])[0]
            if artifact.kind == "flat":
                signal[row] = 0.0
            else:
                signal[row] = 5.0 * BASELINE_RMS_UV * rng.standard_normal(n_samples)
            injected.append({"channel": artifact.channel, "kind": artifact.kind})
        prov = {"synthetic": True, "separation": delta, "oscillation_hz": osc_hz,
                "focus_channels": focus, "artifacts": injected, "seed": seed}
        yield Recording(signal.astype(np.float32), fs, montage.channels,
                        f"subj{i + 1:02d}", condition, prov)


def synth_cohort(n_subjects: int, channels: int | Montage = 32, delta: float = 1.0,
                 artifacts=None, seed: int = 0, duration: float = 1200.0,
                 fs: float = CANONICAL_FS):
    """Two-condition synthetic cohort with a tunable spectral separation.

    Every subject is a smooth random mixture of pink-noise sources at about
    20 uV RMS per channel. Relaxation subjects add a ~10 Hz oscillation and
    workload subjects a ~20 Hz one (plus or minus up to 1 Hz per subject),
    with amplitude ``delta`` times the baseline RMS, concentrated on the
    central-parietal channel group and scaled by a lognormal per-subject
    gain. ``delta=0`` makes the two conditions statistically identical.
    Optional artifacts replace single channels with flat or high-noise
    signals. Returns (recordings, montage); fully determined by ``seed``.
    """
    montage = channels if isinstance(channels, Montage) else fibonacci_montage(channels)
    recs = list(iter_synth_cohort(n_subjects, montage, delta, artifacts, seed,
                                  duration, fs))
    return recs, montage
