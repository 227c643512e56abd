"""Sensor geometry, spherical-spline interpolation, bad-channel detection.

Electrode positions live on the unit sphere. Interpolation follows the
classic spherical-spline construction: a Legendre-series kernel ``g`` over
inter-electrode cosines, a Gram system with a constant-term constraint and a
small ridge, solved once per geometry and applied to every time sample as a
single linear map.

Bad channels are found by consensus: each channel is repeatedly predicted
from random subsets of the *other* channels, and channels whose windowed
correlation with the median prediction stays persistently low are flagged.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import seeded_rng

# The 26 electrodes of the cognitive subset of a 256-channel net.
COGN26_CHANNELS = (
    "E98", "E99", "E100", "E101", "E108", "E109", "E110", "E116", "E117",
    "E118", "E119", "E124", "E125", "E126", "E127", "E128", "E129", "E137",
    "E138", "E139", "E140", "E141", "E149", "E150", "E151", "E152",
)
COGN26_SUBSET = "COGN-26"

# Reference direction for the central-parietal region synthetic montages
# cluster their cognitive channels around.
POSTERIOR_POLE = np.array([0.0, -0.6, 0.8]) / np.linalg.norm([0.0, -0.6, 0.8])


class MontageError(ValueError):
    pass


@dataclass
class Montage:
    """Ordered channel names with unit-sphere positions and named subsets."""

    channels: tuple[str, ...]
    positions: np.ndarray  # (n, 3), renormalized to unit length
    subsets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.channels = tuple(self.channels)
        if len(set(self.channels)) != len(self.channels):
            raise MontageError("duplicate channel names")
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.shape != (len(self.channels), 3):
            raise MontageError("positions must be (n_channels, 3)")
        if not np.all(np.isfinite(pos)):
            raise MontageError("non-finite electrode coordinates")
        norms = np.linalg.norm(pos, axis=1)
        if np.any(norms == 0):
            raise MontageError("zero-length electrode position")
        self.positions = pos / norms[:, None]
        for name, members in self.subsets.items():
            missing = set(members) - set(self.channels)
            if missing:
                raise MontageError(f"subset {name!r} names unknown channels: {missing}")
        if COGN26_SUBSET not in self.subsets and \
                set(COGN26_CHANNELS) <= set(self.channels):
            self.subsets[COGN26_SUBSET] = COGN26_CHANNELS

    def __len__(self) -> int:
        return len(self.channels)

    def index(self, names) -> np.ndarray:
        lookup = {name: i for i, name in enumerate(self.channels)}
        try:
            return np.array([lookup[n] for n in names], dtype=np.intp)
        except KeyError as exc:
            raise MontageError(f"unknown channel {exc.args[0]!r}") from None

    def positions_for(self, names) -> np.ndarray:
        return self.positions[self.index(names)]


def load_montage(path) -> Montage:
    """Read a ``name,x,y,z`` CSV; positions are renormalized to unit length."""
    names: list[str] = []
    coords: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["name", "x", "y", "z"]:
            raise MontageError(f"{path}: expected header 'name,x,y,z'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise MontageError(f"{path}:{lineno}: expected 4 columns")
            name = row[0].strip()
            try:
                xyz = [float(v) for v in row[1:]]
            except ValueError:
                raise MontageError(f"{path}:{lineno}: non-numeric coordinate") from None
            names.append(name)
            coords.append(xyz)
    return Montage(tuple(names), np.array(coords, dtype=np.float64))


def write_montage(montage: Montage, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "x", "y", "z"])
        for name, pos in zip(montage.channels, montage.positions):
            writer.writerow([name] + [repr(float(v)) for v in pos])


def _filler_names(taken: set[str]):
    i = 1
    while True:
        name = f"E{i}"
        if name not in taken:
            yield name
        i += 1


def fibonacci_montage(n: int) -> Montage:
    """Evenly spread synthetic montage of ``n`` electrodes.

    When ``n`` >= 26 the channels nearest the central-parietal pole take the
    cognitive-subset names, so subset selection works on synthetic data too.
    """
    if n < 1:
        raise MontageError("montage needs at least one channel")
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    theta = math.pi * (3.0 - math.sqrt(5.0)) * i
    pos = np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
    names: list[str | None] = [None] * n
    if n >= len(COGN26_CHANNELS):
        rank = np.argsort(-(pos @ POSTERIOR_POLE), kind="stable")
        for name, idx in zip(COGN26_CHANNELS, rank):
            names[idx] = name
    filler = _filler_names(set(COGN26_CHANNELS))
    names = [name if name is not None else next(filler) for name in names]
    return Montage(tuple(names), pos)


def spline_g(cosine, stiffness: int = 4, n_terms: int = 50):
    """Spherical-spline kernel: Legendre series in the inter-point cosine.

    g(x) = (1 / 4pi) * sum_{n=1..N} (2n+1) / (n^m (n+1)^m) * P_n(x), with the
    Legendre polynomials evaluated by the stable three-term recurrence.
    """
    x = np.asarray(cosine, dtype=np.float64)
    p_prev = np.ones_like(x)   # P_0
    p_cur = x.copy()           # P_1
    acc = np.zeros_like(x)
    for order in range(1, n_terms + 1):
        if order > 1:
            p_next = ((2 * order - 1) * x * p_cur - (order - 1) * p_prev) / order
            p_prev, p_cur = p_cur, p_next
        acc += (2 * order + 1) / (order ** stiffness * (order + 1) ** stiffness) * p_cur
    return acc / (4.0 * math.pi)


def interpolation_matrix(good_positions: np.ndarray, target_positions: np.ndarray,
                         stiffness: int = 4, n_terms: int = 50,
                         ridge: float = 1e-5) -> np.ndarray:
    """Linear map taking values on the good electrodes to the targets.

    Solves the spline system (kernel Gram matrix with a constant-term
    constraint, ridge on the diagonal) once for the geometry; the returned
    (targets, good) matrix applies to any number of time samples.
    """
    good = np.asarray(good_positions, dtype=np.float64)
    target = np.asarray(target_positions, dtype=np.float64)
    g_count = good.shape[0]
    if g_count < 4:
        raise MontageError("spline interpolation needs at least 4 good channels")
    gram = spline_g(np.clip(good @ good.T, -1.0, 1.0), stiffness, n_terms)
    gram = gram + ridge * np.eye(g_count)
    system = np.zeros((g_count + 1, g_count + 1))
    system[:g_count, :g_count] = gram
    system[:g_count, g_count] = 1.0
    system[g_count, :g_count] = 1.0
    rhs = np.vstack([np.eye(g_count), np.zeros((1, g_count))])
    try:
        coeffs = np.linalg.solve(system, rhs)  # (g+1, g): kernel weights + constant
    except np.linalg.LinAlgError as exc:
        raise MontageError(f"singular spline system: {exc}") from None
    kt = spline_g(np.clip(target @ good.T, -1.0, 1.0), stiffness, n_terms)
    return np.hstack([kt, np.ones((target.shape[0], 1))]) @ coeffs


def spline_interpolate(good_positions, good_data, target_positions,
                       stiffness: int = 4, n_terms: int = 50,
                       ridge: float = 1e-5) -> np.ndarray:
    """Interpolate (good, samples) data onto target positions."""
    mapping = interpolation_matrix(good_positions, target_positions,
                                   stiffness, n_terms, ridge)
    return mapping @ np.asarray(good_data, dtype=np.float64)


def interpolate_recording(recording, montage: Montage, bad_names) -> np.ndarray:
    """Replace the listed channels by spline interpolation from the rest.

    Returns a new (channels, samples) array in the recording's dtype; rows of
    good channels are untouched.
    """
    bad = [n for n in recording.channel_names if n in set(bad_names)]
    if not bad:
        return recording.data.copy()
    good = [n for n in recording.channel_names if n not in set(bad)]
    good_idx = [recording.channel_names.index(n) for n in good]
    bad_idx = [recording.channel_names.index(n) for n in bad]
    interp = spline_interpolate(montage.positions_for(good),
                                recording.data[good_idx],
                                montage.positions_for(bad))
    out = recording.data.copy()
    out[bad_idx] = interp.astype(out.dtype)
    return out


@dataclass
class RansacParams:
    """Consensus detector settings; defaults follow the standard pipeline."""

    n_resamples: int = 50
    subset_fraction: float = 0.25
    window_seconds: float = 5.0
    corr_threshold: float = 0.75
    bad_window_fraction: float = 0.4
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.subset_fraction < 1.0:
            raise ValueError("subset_fraction must be in (0, 1)")
        if not (0.0 < self.corr_threshold < 1.0 and 0.0 < self.bad_window_fraction < 1.0):
            raise ValueError("thresholds must be in (0, 1)")
        if self.n_resamples < 1 or self.window_seconds <= 0:
            raise ValueError("n_resamples and window_seconds must be positive")


def ransac_bad_channels(recording, montage: Montage,
                        params: RansacParams | None = None) -> set[str]:
    """Channels whose signal disagrees too often with its spatial prediction.

    Per resample, a random quarter of the channels predicts all the others
    through the spline map; predictions of channels inside their own subset
    are discarded. A channel is bad when the fraction of windows whose
    correlation with the median prediction falls below the threshold exceeds
    the bad-window fraction. Undefined correlations (flat signals) count
    as 0. Deterministic for a given seed.
    """
    params = params or RansacParams()
    params.validate()
    names = tuple(recording.channel_names)
    missing = set(names) - set(montage.channels)
    if missing:
        raise MontageError(f"recording channels missing from montage: {missing}")
    positions = montage.positions_for(names)
    data = recording.data
    n_ch, n_samp = data.shape
    wlen = int(round(params.window_seconds * recording.fs))
    n_win = n_samp // wlen
    if n_win < 1:
        raise ValueError("recording shorter than one detection window")
    n_pick = min(max(4, int(round(params.subset_fraction * n_ch))), n_ch - 1)
    rng = seeded_rng(params.seed, stream=29)
    picks = np.empty((params.n_resamples, n_pick), dtype=np.intp)
    maps = np.empty((params.n_resamples, n_ch, n_pick), dtype=np.float32)
    for r in range(params.n_resamples):
        pick = np.sort(rng.choice(n_ch, size=n_pick, replace=False))
        picks[r] = pick
        maps[r] = interpolation_matrix(positions[pick], positions)
    # a channel's prediction may not come from a subset containing it, and the
    # subsets are window-independent, so each channel's usable resamples are
    # fixed up front
    picked = np.zeros((params.n_resamples, n_ch), dtype=bool)
    np.put_along_axis(picked, picks, True, axis=1)
    valid = [np.flatnonzero(~picked[:, c]) for c in range(n_ch)]
    low_corr = np.zeros(n_ch, dtype=np.int64)
    chunk = max(1, int(25e6 // (params.n_resamples * n_ch * wlen)))
    for start in range(0, n_win, chunk):
        stop = min(start + chunk, n_win)
        seg = np.ascontiguousarray(data[:, start * wlen : stop * wlen],
                                   dtype=np.float32)
        preds = maps @ seg[picks]  # (resamples, channels, samples)
        med = np.zeros_like(seg)
        for c in range(n_ch):
            k = valid[c].size
            if not k:
                continue
            sel = preds[valid[c], c, :]
            sel.sort(axis=0)  # columnwise sort beats np.median for short axes
            lo, hi = (k - 1) // 2, k // 2
            med[c] = sel[lo] if lo == hi else 0.5 * (sel[lo] + sel[hi])
        n_here = stop - start
        actual = seg.reshape(n_ch, n_here, wlen).astype(np.float64)
        predicted = med.reshape(n_ch, n_here, wlen).astype(np.float64)
        actual -= actual.mean(axis=2, keepdims=True)
        predicted -= predicted.mean(axis=2, keepdims=True)
        denom = np.sqrt((actual ** 2).sum(axis=2) * (predicted ** 2).sum(axis=2))
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = (actual * predicted).sum(axis=2) / denom
        corr = np.where(np.isfinite(corr), corr, 0.0)
        low_corr += (corr < params.corr_threshold).sum(axis=1)
    bad_fraction = low_corr / n_win
    return {names[i] for i in np.flatnonzero(bad_fraction > params.bad_window_fraction)}
