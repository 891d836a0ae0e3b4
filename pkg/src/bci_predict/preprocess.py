"""Filtering, epoching, baseline correction, and amplitude-based artifact
handling for continuous EEG.

Filters are Butterworth biquad cascades (band-pass) and a single-biquad IIR
notch, applied forward-backward by default so the net phase response is zero.
Edge transients are bounded by odd-reflection padding (up to one second)
before filtering.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from . import montage
from .errors import (
    AllChannelsBad,
    BaselineOutOfBounds,
    EdgeAboveNyquist,
    EmptyRecording,
    RecordingTooShortForFilter,
    WindowOutOfBounds,
)
from .ingest import FLASHES_PER_SEQUENCE, EventStream, Recording

PAD_SECONDS = 1.0
SETTLE_DECAY = 1e-4  # impulse response treated as settled below this fraction of peak


@dataclass(frozen=True)
class FilterSpec:
    """One stage of the filter chain."""

    kind: str  # "bandpass" | "notch"
    low_hz: float = 0.0
    high_hz: float = 0.0
    notch_hz: float = 0.0
    order: int = 4
    q: float = 30.0
    zero_phase: bool = True

    def validate(self, fs: float) -> None:
        nyq = fs / 2.0
        if self.kind == "bandpass":
            if not 0.0 < self.low_hz < self.high_hz:
                raise EdgeAboveNyquist(
                    f"bad band edges ({self.low_hz}, {self.high_hz})"
                )
            if self.high_hz >= nyq:
                raise EdgeAboveNyquist(
                    f"band edge {self.high_hz} Hz at or above Nyquist {nyq} Hz"
                )
            if self.order < 2 or (self.zero_phase and self.order % 2 != 0):
                raise EdgeAboveNyquist(
                    f"filter order {self.order} must be >= 2 and even for zero phase"
                )
        elif self.kind == "notch":
            if not 0.0 < self.notch_hz < nyq:
                raise EdgeAboveNyquist(
                    f"notch frequency {self.notch_hz} Hz at or above Nyquist {nyq} Hz"
                )
        else:
            raise ValueError(f"unknown filter kind {self.kind!r}")


def bandpass(low_hz: float, high_hz: float, order: int = 4) -> FilterSpec:
    return FilterSpec(kind="bandpass", low_hz=low_hz, high_hz=high_hz, order=order)


def notch(notch_hz: float, q: float = 30.0) -> FilterSpec:
    return FilterSpec(kind="notch", notch_hz=notch_hz, q=q)


def design_sos(spec: FilterSpec, fs: float) -> np.ndarray:
    """Second-order sections for one filter stage."""
    spec.validate(fs)
    if spec.kind == "bandpass":
        return sps.butter(
            spec.order, [spec.low_hz, spec.high_hz], btype="bandpass",
            output="sos", fs=fs,
        )
    b, a = sps.iirnotch(spec.notch_hz, spec.q, fs=fs)
    return sps.tf2sos(b, a)


def settling_length(sos: np.ndarray, fs: float, max_seconds: float = 30.0) -> int:
    """Samples until the impulse response decays below SETTLE_DECAY of its peak."""
    n = int(max_seconds * fs)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    h = sps.sosfilt(sos, impulse)
    keep = np.abs(h) >= SETTLE_DECAY * np.max(np.abs(h))
    return int(np.nonzero(keep)[0][-1]) + 1


def apply_filter(data: np.ndarray, sos: np.ndarray, fs: float,
                 zero_phase: bool = True) -> np.ndarray:
    """Filter along the last axis with odd-reflection padding.

    Zero-phase mode runs the cascade forward then backward, squaring the
    magnitude response and cancelling the phase response.
    """
    n = data.shape[-1]
    pad = min(int(round(PAD_SECONDS * fs)), n - 1)
    padded = np.pad(data, [(0, 0)] * (data.ndim - 1) + [(pad, pad)],
                    mode="reflect", reflect_type="odd") if pad else data
    if zero_phase:
        out = sps.sosfiltfilt(sos, padded, axis=-1, padtype=None)
    else:
        out = sps.sosfilt(sos, padded, axis=-1)
    return np.ascontiguousarray(out[..., pad:pad + n]) if pad else out


def filter_recording(rec: Recording, specs: list[FilterSpec]) -> Recording:
    """Apply a filter chain to a whole recording, in listed order."""
    data = rec.data
    for spec in specs:
        sos = design_sos(spec, rec.fs)
        settle = settling_length(sos, rec.fs)
        if rec.n_samples < 3 * settle:
            raise RecordingTooShortForFilter(
                f"recording of {rec.n_samples} samples shorter than 3x the "
                f"filter settling length ({settle} samples)"
            )
        data = apply_filter(data, sos, rec.fs, zero_phase=spec.zero_phase)
    return replace(rec, data=data)


@dataclass(frozen=True)
class Epoch:
    """One stimulus- or window-locked segment."""

    data: np.ndarray  # (channels, samples), microvolts
    t0_ms: float  # offset of first sample relative to the lock event
    label: str  # "target" | "non_target" | "resting"
    lock_sample: int  # sample index of the lock event in the source recording
    sequence_index: int | None = None  # 1-based
    stimulus_group: int | None = None
    trial_id: int | None = None


@dataclass(frozen=True)
class EpochSet:
    """Epochs sharing shape, sampling rate, and channel order."""

    epochs: tuple[Epoch, ...]
    fs: float
    channel_names: tuple[str, ...]
    rejected_count: int = 0
    interpolated: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        shapes = {e.data.shape for e in self.epochs}
        if len(shapes) > 1:
            raise ValueError(f"epochs with mixed shapes: {shapes}")
        if len({e.t0_ms for e in self.epochs}) > 1:
            raise ValueError("epochs with mixed t0_ms")

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def n_samples(self) -> int:
        return self.epochs[0].data.shape[1] if self.epochs else 0

    def tensor(self) -> np.ndarray:
        """All epoch data as one (epochs, channels, samples) array."""
        return np.stack([e.data for e in self.epochs])

    def subset(self, keep) -> "EpochSet":
        return replace(self, epochs=tuple(e for e in self.epochs if keep(e)),
                       rejected_count=0, interpolated=())


def _window_samples(window_ms: tuple[float, float], fs: float) -> tuple[int, int]:
    start = window_ms[0] * fs / 1000.0
    stop = window_ms[1] * fs / 1000.0
    if abs(start - round(start)) > 1e-9 or abs(stop - round(stop)) > 1e-9:
        raise WindowOutOfBounds(
            f"window {window_ms} ms does not fall on sample boundaries at fs={fs}"
        )
    return int(round(start)), int(round(stop))


def segment_epochs(rec: Recording, ev: EventStream | None,
                   window_ms: tuple[float, float] = (0.0, 800.0),
                   lock: str = "flash",
                   resting_epoch_s: float = 2.0) -> EpochSet:
    """Cut the recording into epochs.

    ``lock="flash"`` yields one epoch per flash event, labelled target or
    non_target. ``lock="resting_grid"`` tiles the recording into consecutive
    non-overlapping pseudo-trials of ``resting_epoch_s`` seconds, which act
    as the trial dimension of across-trial phase statistics.
    """
    if rec.n_samples == 0:
        raise EmptyRecording("recording has no samples")
    epochs: list[Epoch] = []
    if lock == "flash":
        if ev is None:
            raise WindowOutOfBounds("flash-locked segmentation needs an event stream")
        lo, hi = _window_samples(window_ms, rec.fs)
        for trial_id, trial in enumerate(ev.trials()):
            for j, e in enumerate(trial):
                start, stop = e.sample_index + lo, e.sample_index + hi
                if start < 0 or stop > rec.n_samples:
                    raise WindowOutOfBounds(
                        f"epoch window [{start}, {stop}) for flash at sample "
                        f"{e.sample_index} leaves the recording"
                    )
                epochs.append(Epoch(
                    data=rec.data[:, start:stop].copy(),
                    t0_ms=window_ms[0],
                    label="target" if e.is_target else "non_target",
                    lock_sample=e.sample_index,
                    sequence_index=j // FLASHES_PER_SEQUENCE + 1,
                    stimulus_group=e.stimulus_group,
                    trial_id=trial_id,
                ))
    elif lock == "resting_grid":
        if rec.condition != "resting":
            raise WindowOutOfBounds(
                f"resting_grid segmentation needs a resting recording, "
                f"got condition {rec.condition!r}"
            )
        step = int(round(resting_epoch_s * rec.fs))
        if step < 1:
            raise WindowOutOfBounds(f"resting epoch of {resting_epoch_s}s too short")
        n_tiles = rec.n_samples // step
        if n_tiles == 0:
            raise EmptyRecording(
                f"recording shorter than one {resting_epoch_s}s resting epoch"
            )
        for k in range(n_tiles):
            epochs.append(Epoch(
                data=rec.data[:, k * step:(k + 1) * step].copy(),
                t0_ms=0.0,
                label="resting",
                lock_sample=k * step,
            ))
    else:
        raise ValueError(f"unknown lock mode {lock!r}")
    return EpochSet(epochs=tuple(epochs), fs=rec.fs, channel_names=rec.channel_names)


def baseline_correct(eps: EpochSet, rec: Recording,
                     baseline_ms: tuple[float, float] = (-200.0, 0.0)) -> EpochSet:
    """Subtract each channel's pre-lock baseline mean from every epoch.

    The baseline window is taken from the source recording relative to each
    epoch's lock sample, so it works whether or not the stored epoch window
    covers the baseline interval.
    """
    lo, hi = _window_samples(baseline_ms, rec.fs)
    corrected = []
    for e in eps.epochs:
        start, stop = e.lock_sample + lo, e.lock_sample + hi
        if start < 0 or stop > rec.n_samples or stop <= start:
            raise BaselineOutOfBounds(
                f"baseline window [{start}, {stop}) for lock sample "
                f"{e.lock_sample} leaves the recording"
            )
        mean = rec.data[:, start:stop].mean(axis=1, keepdims=True)
        corrected.append(replace(e, data=e.data - mean))
    return replace(eps, epochs=tuple(corrected))


def reject_artifacts(eps: EpochSet, threshold_uv: float = 100.0,
                     layout: dict[str, tuple[float, float]] | None = None,
                     reject_channel_fraction: float = 0.25,
                     n_neighbors: int = 4) -> EpochSet:
    """Amplitude-based artifact handling.

    Per epoch, channels whose absolute amplitude exceeds ``threshold_uv`` are
    flagged. If more than ``reject_channel_fraction`` of channels are flagged
    the epoch is dropped; otherwise each flagged channel is replaced by the
    inverse-distance-weighted mean of its ``n_neighbors`` nearest clean
    channels. Interpolations are logged as (kept-epoch index, channel name).
    """
    if threshold_uv <= 0:
        raise ValueError("threshold must be positive")
    if layout is None:
        layout = montage.layout_for(eps.channel_names)
    pos = np.array([layout[ch] for ch in eps.channel_names])
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    kept: list[Epoch] = []
    interpolated: list[tuple[int, str]] = []
    rejected = eps.rejected_count
    for e in eps.epochs:
        bad = np.max(np.abs(e.data), axis=1) > threshold_uv
        if not bad.any():
            kept.append(e)
            continue
        if bad.sum() > reject_channel_fraction * len(bad):
            rejected += 1
            continue
        clean = np.nonzero(~bad)[0]
        if clean.size == 0:
            raise AllChannelsBad("no clean channel left to interpolate from")
        data = e.data.copy()
        for ch in np.nonzero(bad)[0]:
            order = clean[np.argsort(dist[ch, clean], kind="stable")]
            nearest = order[:n_neighbors]
            weights = 1.0 / dist[ch, nearest]
            data[ch] = weights @ e.data[nearest] / weights.sum()
            interpolated.append((len(kept), eps.channel_names[ch]))
        kept.append(replace(e, data=data))
    return replace(
        eps,
        epochs=tuple(kept),
        rejected_count=rejected,
        interpolated=eps.interpolated + tuple(interpolated),
    )
