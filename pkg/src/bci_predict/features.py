"""Resting-state EEG predictors: band-limited spectral power and
phase-locking connectivity, aggregated over scalp regions.

Band power is an epoch-averaged one-sided periodogram integrated over the
band and expressed in dB re 1 uV^2 as ``10*log10(2 * integral)``. The
leading factor 2 is kept verbatim from the defining formula even though the
one-sided density is already doubled; only relative comparisons feed the
downstream statistics, and a monotone transform does not change them.

Phase locking between channels i and j is the magnitude of the across-trial
mean unit phasor of their phase difference at each time point, averaged over
interior time points. Phase comes from a zero-phase band-pass followed by the
discrete Hilbert analytic signal; the first and last 10% of samples are
excluded from scalar averages to keep Hilbert edge distortion out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import signal as sps

from .errors import (
    BandOutsideSpectrum,
    EmptyEpochSet,
    EpochTooShortForBand,
    MissingElectrode,
    ShapeMismatch,
    TooFewEpochs,
)
from .montage import REGION_PAIRS, RegionMap, pair_label
from .preprocess import PAD_SECONDS, EpochSet, bandpass, design_sos

EDGE_FRACTION = 0.10


def band_analytic(x: np.ndarray, band: FrequencyBand, fs: float) -> np.ndarray:
    """Band-limited analytic signal along the last axis.

    Pads by odd reflection, applies the zero-phase band-pass and the discrete
    Hilbert transform while still padded, then crops, which keeps edge
    distortion out of the nominal window.
    """
    sos = design_sos(bandpass(band.f1, band.f2), fs)
    n = x.shape[-1]
    pad = min(int(round(PAD_SECONDS * fs)), n - 1)
    padded = np.pad(x, [(0, 0)] * (x.ndim - 1) + [(pad, pad)],
                    mode="reflect", reflect_type="odd") if pad else x
    filtered = sps.sosfiltfilt(sos, padded, axis=-1, padtype=None)
    analytic = sps.hilbert(filtered, axis=-1)
    return np.ascontiguousarray(analytic[..., pad:pad + n])


@dataclass(frozen=True)
class FrequencyBand:
    name: str
    f1: float
    f2: float

    def __post_init__(self):
        if not 0 <= self.f1 < self.f2:
            raise ValueError(f"band edges must increase, got ({self.f1}, {self.f2})")

    @property
    def center_hz(self) -> float:
        return 0.5 * (self.f1 + self.f2)


BAND_NAMES = ("delta", "theta", "alpha", "beta", "gamma")


def canonical_bands() -> tuple[FrequencyBand, ...]:
    return (
        FrequencyBand("delta", 0.5, 4.0),
        FrequencyBand("theta", 4.0, 8.0),
        FrequencyBand("alpha", 8.0, 12.0),
        FrequencyBand("beta", 12.0, 30.0),
        FrequencyBand("gamma", 30.0, 45.0),
    )


@dataclass(frozen=True)
class Spectrum:
    """Epoch-averaged one-sided power spectral density per channel."""

    freqs: np.ndarray  # (n_freqs,), 0 .. fs/2
    power: np.ndarray  # (channels, n_freqs), uV^2/Hz
    resolution: float  # Hz per bin
    channel_names: tuple[str, ...]


def compute_spectrum(eps: EpochSet, use_hann: bool = False) -> Spectrum:
    """One-sided periodogram per channel, averaged across epochs.

    Scaling is 1/(fs*N) with non-DC, non-Nyquist bins doubled, so the sum of
    density times resolution equals the time-domain mean square.
    """
    if len(eps) == 0:
        raise EmptyEpochSet("no epochs to compute a spectrum from")
    x = eps.tensor()  # (epochs, channels, samples)
    n = x.shape[-1]
    if use_hann:
        window = np.hanning(n)
        scale = 1.0 / (eps.fs * np.sum(window ** 2))
        x = x * window
    else:
        scale = 1.0 / (eps.fs * n)
    spec = np.fft.rfft(x, axis=-1)
    power = (spec.real ** 2 + spec.imag ** 2) * scale
    power[..., 1:] *= 2.0
    if n % 2 == 0:
        power[..., -1] /= 2.0  # Nyquist bin is not mirrored
    return Spectrum(
        freqs=np.fft.rfftfreq(n, d=1.0 / eps.fs),
        power=power.mean(axis=0),
        resolution=eps.fs / n,
        channel_names=eps.channel_names,
    )


def band_psd(spec: Spectrum, band: FrequencyBand) -> np.ndarray:
    """Band power per channel in dB re 1 uV^2: 10*log10(2 * integral).

    The integral is the Riemann sum of density bins with f1 <= f < f2 times
    the bin resolution; the half-open interval keeps adjacent bands from
    double-counting a shared edge bin.
    """
    nyquist = spec.freqs[-1]
    if band.f1 < 0 or band.f2 > nyquist:
        raise BandOutsideSpectrum(
            f"band ({band.f1}, {band.f2}) Hz outside spectrum up to {nyquist} Hz"
        )
    mask = (spec.freqs >= band.f1) & (spec.freqs < band.f2)
    if not mask.any():
        raise BandOutsideSpectrum(
            f"no spectral bins inside ({band.f1}, {band.f2}) Hz at "
            f"resolution {spec.resolution} Hz"
        )
    integral = spec.power[:, mask].sum(axis=1) * spec.resolution
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(2.0 * integral)


def region_band_power(per_channel_db: Mapping[str, float],
                      regions: RegionMap) -> dict[str, float]:
    """Arithmetic mean of each region's channel dB values."""
    out: dict[str, float] = {}
    for region in regions.as_dict():
        values = []
        for ch in regions.electrodes(region):
            if ch not in per_channel_db:
                raise MissingElectrode(f"electrode {ch!r} missing for region {region}")
            values.append(per_channel_db[ch])
        out[region] = float(np.mean(values))
    return out


@dataclass(frozen=True)
class PhaseEpochs:
    """Instantaneous phase per channel, epoch (trial), and time point."""

    phase: np.ndarray  # (channels, epochs, samples), radians in (-pi, pi]
    band: FrequencyBand
    channel_names: tuple[str, ...]
    edge_samples: int  # leading/trailing samples excluded from scalar averages

    @property
    def interior(self) -> slice:
        return slice(self.edge_samples, self.phase.shape[-1] - self.edge_samples)


def instantaneous_phase(eps: EpochSet, band: FrequencyBand) -> PhaseEpochs:
    """Band-limited instantaneous phase via zero-phase band-pass + Hilbert."""
    if len(eps) == 0:
        raise EmptyEpochSet("no epochs to extract phase from")
    n = eps.n_samples
    if n / eps.fs < 3.0 / band.center_hz:
        raise EpochTooShortForBand(
            f"epoch of {n / eps.fs:.3g}s shorter than 3 cycles of the "
            f"{band.name} band center ({band.center_hz:.3g} Hz)"
        )
    x = eps.tensor().transpose(1, 0, 2)  # (channels, epochs, samples)
    phase = np.angle(band_analytic(x, band, eps.fs))
    phase[phase == -np.pi] = np.pi
    return PhaseEpochs(
        phase=phase,
        band=band,
        channel_names=eps.channel_names,
        edge_samples=int(np.ceil(EDGE_FRACTION * n)),
    )


def plv_timecourse(ph: PhaseEpochs, i: int, j: int) -> np.ndarray:
    """Across-trial phase-locking value of channels (i, j) at each time point."""
    if ph.phase.shape[1] < 2:
        raise TooFewEpochs("phase locking needs at least 2 epochs")
    dphi = ph.phase[i] - ph.phase[j]  # (epochs, samples)
    return np.abs(np.exp(-1j * dphi).mean(axis=0))


def plv(ph: PhaseEpochs, i: int, j: int) -> float:
    """Scalar phase-locking value: time course averaged over interior samples."""
    return float(plv_timecourse(ph, i, j)[ph.interior].mean())


def _pair_matrix(ph: PhaseEpochs) -> np.ndarray:
    """Scalar PLV for every ordered channel pair at once."""
    if ph.phase.shape[1] < 2:
        raise TooFewEpochs("phase locking needs at least 2 epochs")
    z = np.exp(1j * ph.phase[:, :, ph.interior])  # (channels, epochs, samples)
    n_trials = z.shape[1]
    m = np.einsum("aet,bet->abt", z, z.conj()) / n_trials
    return np.abs(m).mean(axis=-1)


def region_pair_plv(ph: PhaseEpochs, regions: RegionMap) -> dict[str, float]:
    """Mean channel-pair PLV for the ten region pairs.

    Cross-region pairs average all 64 electrode pairs; within-region entries
    average the 28 unordered distinct pairs (self-pairs excluded).
    """
    index = {ch: k for k, ch in enumerate(ph.channel_names)}
    for ch in regions.all_electrodes():
        if ch not in index:
            raise MissingElectrode(f"electrode {ch!r} missing from phase data")
    pairs = _pair_matrix(ph)
    out: dict[str, float] = {}
    for a, b in REGION_PAIRS:
        ia = [index[ch] for ch in regions.electrodes(a)]
        ib = [index[ch] for ch in regions.electrodes(b)]
        if a == b:
            vals = [pairs[p, q] for k, p in enumerate(ia) for q in ia[k + 1:]]
        else:
            vals = [pairs[p, q] for p in ia for q in ib]
        out[pair_label((a, b))] = float(np.mean(vals))
    return out


@dataclass(frozen=True)
class BandFeatureTable:
    """Per-subject scalar predictors: PSD per (region, band) and PLV per
    (region pair, band)."""

    subject_id: str
    psd: dict[tuple[str, str], float]  # (region, band name) -> dB
    plv: dict[tuple[str, str], float]  # (pair label, band name) -> [0, 1]


def compute_band_features(eps: EpochSet,
                          bands: tuple[FrequencyBand, ...],
                          regions: RegionMap,
                          subject_id: str = "",
                          use_hann: bool = False) -> BandFeatureTable:
    """Full predictor table for one subject's resting epochs."""
    spectrum = compute_spectrum(eps, use_hann=use_hann)
    psd: dict[tuple[str, str], float] = {}
    plv_table: dict[tuple[str, str], float] = {}
    for band in bands:
        per_channel = dict(zip(spectrum.channel_names, band_psd(spectrum, band)))
        for region, value in region_band_power(per_channel, regions).items():
            psd[(region, band.name)] = value
        phases = instantaneous_phase(eps, band)
        for pair, value in region_pair_plv(phases, regions).items():
            plv_table[(pair, band.name)] = value
    return BandFeatureTable(subject_id=subject_id, psd=psd, plv=plv_table)


@dataclass(frozen=True)
class BandDynamics:
    """Per-condition time courses of band power and region-pair PLV."""

    band: FrequencyBand
    bin_ms: float
    bin_starts_ms: np.ndarray  # (n_bins,)
    power: dict[str, dict[str, np.ndarray]]  # region -> condition -> (n_bins,)
    plv: dict[str, dict[str, np.ndarray]]  # pair label -> condition -> (n_bins,)


def _bin_means(course: np.ndarray, n_bins: int) -> np.ndarray:
    return course.reshape(*course.shape[:-1], n_bins, -1).mean(axis=-1)


def erp_band_dynamics(target: EpochSet, nontarget: EpochSet,
                      band: FrequencyBand, regions: RegionMap,
                      bin_ms: float = 100.0) -> BandDynamics:
    """Time-resolved band power and PLV for target vs non-target epochs.

    Band power is the squared analytic amplitude averaged across epochs and
    region channels, then within consecutive ``bin_ms`` bins; PLV is the
    across-epoch time course averaged over a region pair's electrode pairs
    and the same bins. Short stimulus-locked epochs are accepted here even
    when they hold fewer than three cycles of the band.
    """
    if len(target) == 0 or len(nontarget) == 0:
        raise EmptyEpochSet("both conditions need at least one epoch")
    if target.n_samples != nontarget.n_samples or \
            target.channel_names != nontarget.channel_names or \
            target.fs != nontarget.fs:
        raise ShapeMismatch("target and non-target epochs differ in shape")
    n = target.n_samples
    samples_per_bin = bin_ms * target.fs / 1000.0
    if abs(samples_per_bin - round(samples_per_bin)) > 1e-9 or \
            n % int(round(samples_per_bin)) != 0:
        raise ShapeMismatch(
            f"bin of {bin_ms} ms does not tile {n} samples at fs={target.fs}"
        )
    n_bins = n // int(round(samples_per_bin))
    index = {ch: k for k, ch in enumerate(target.channel_names)}
    courses_power: dict[str, dict[str, np.ndarray]] = {}
    courses_plv: dict[str, dict[str, np.ndarray]] = {}
    for condition, eps in (("target", target), ("non_target", nontarget)):
        x = eps.tensor().transpose(1, 0, 2)  # (channels, epochs, samples)
        analytic = band_analytic(x, band, eps.fs)
        amplitude2 = np.abs(analytic) ** 2
        mean_power = amplitude2.mean(axis=1)  # (channels, samples)
        for region in regions.as_dict():
            idx = [index[ch] for ch in regions.electrodes(region)]
            course = _bin_means(mean_power[idx].mean(axis=0), n_bins)
            courses_power.setdefault(region, {})[condition] = course
        amplitude = np.abs(analytic)
        amplitude[amplitude == 0] = 1.0  # silent channels contribute a zero phasor
        phasor = analytic / amplitude
        n_trials = phasor.shape[1]
        m = np.einsum("aet,bet->abt", phasor, phasor.conj()) / n_trials
        pair_course = np.abs(m)  # (channels, channels, samples)
        for a, b in REGION_PAIRS:
            ia = [index[ch] for ch in regions.electrodes(a)]
            ib = [index[ch] for ch in regions.electrodes(b)]
            if a == b:
                vals = [pair_course[p, q] for k, p in enumerate(ia) for q in ia[k + 1:]]
            else:
                vals = [pair_course[p, q] for p in ia for q in ib]
            course = _bin_means(np.mean(vals, axis=0), n_bins)
            courses_plv.setdefault(pair_label((a, b)), {})[condition] = course
    return BandDynamics(
        band=band,
        bin_ms=bin_ms,
        bin_starts_ms=target.epochs[0].t0_ms + bin_ms * np.arange(n_bins),
        power=courses_power,
        plv=courses_plv,
    )
