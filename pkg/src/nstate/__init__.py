"""EEG relaxation-vs-workload classification toolkit.

Preprocessing (bad-channel repair, zero-phase band-pass, cropping, epoching),
four from-scratch neural classifiers with audited parameter counts, grouped
stratified cross-validation, and the matching evaluation metrics — plus a
synthetic cohort generator so the full pipeline runs without private data.
"""

__version__ = "0.1.0"

from .data import (ArtifactSpec, EpochSet, FoldPlan, Recording, crop, epoch,
                   merge_epoch_sets, read_container, select_channels,
                   stratified_group_kfold, synth_cohort, write_container)
from .dsp import BANDS, band_power, design_bandpass, filtfilt, welch_psd
from .estimators import BandpassFilter, NetClassifier
from .metrics import (CvReport, MetricsRecord, aggregate, compute_metrics,
                      confusion, render_report)
from .models import (EEGNetConfig, Model, ParamAudit, build_bilstm, build_cnn1d,
                     build_cnn_lstm, build_eegnet, build_model, load_weights)
from .montage import (COGN26_CHANNELS, Montage, RansacParams, fibonacci_montage,
                      load_montage, ransac_bad_channels, spline_interpolate)
from .numerics import finite_diff_grad, seeded_rng
from .training import Adam, TrainHistory, bce_loss, cross_validate, predict, train

__all__ = [
    "ArtifactSpec", "EpochSet", "FoldPlan", "Recording", "crop", "epoch",
    "merge_epoch_sets", "read_container", "select_channels",
    "stratified_group_kfold", "synth_cohort", "write_container",
    "BANDS", "band_power", "design_bandpass", "filtfilt", "welch_psd",
    "BandpassFilter", "NetClassifier",
    "CvReport", "MetricsRecord", "aggregate", "compute_metrics", "confusion",
    "render_report",
    "EEGNetConfig", "Model", "ParamAudit", "build_bilstm", "build_cnn1d",
    "build_cnn_lstm", "build_eegnet", "build_model", "load_weights",
    "COGN26_CHANNELS", "Montage", "RansacParams", "fibonacci_montage",
    "load_montage", "ransac_bad_channels", "spline_interpolate",
    "finite_diff_grad", "seeded_rng",
    "Adam", "TrainHistory", "bce_loss", "cross_validate", "predict", "train",
]
