"""Seeded synthetic EEG: resting-state recordings with controllable band
power and cross-region phase coupling, and oddball speller sessions with a
planted target response.

Phase coupling between regions is realized by sharing one narrow-band
carrier and rotating each channel's copy by a fresh von Mises phase offset
per pseudo-trial tile. Two independent von Mises offsets with resultant
length R yield a measured phase-locking value of R^2, so the concentration
is chosen by inverting R(kappa) = I1(kappa)/I0(kappa) at sqrt(plv_target).

Every output is a pure function of the spec, including its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, signal as sps, special

from . import montage
from .errors import InvalidSpec
from .features import BAND_NAMES, FrequencyBand, canonical_bands
from .ingest import (
    FLASHES_PER_SEQUENCE,
    N_OBJECTS,
    SEQUENCES_PER_TRIAL,
    Event,
    EventStream,
    Recording,
    groups_for_object,
    objects_for_group,
)
from .preprocess import apply_filter, bandpass, design_sos

FLASH_MS = 50.0
ISI_MS = 135.0
SOA_MS = FLASH_MS + ISI_MS  # stimulus onset asynchrony
TRIAL_LEAD_S = 1.0  # room for baseline windows and filter settling
TRIAL_TAIL_S = 1.2  # room for the last epoch window plus inter-trial gap

_BANDS = {b.name: b for b in canonical_bands()}


@dataclass(frozen=True)
class ErpShape:
    p300_amplitude_uv: float = 4.0
    latency_ms: float = 350.0
    width_ms: float = 250.0  # FWHM of the Gaussian deflection


@dataclass(frozen=True)
class Coupling:
    region_a: str
    region_b: str
    band: str
    plv_target: float


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    fs: float = 100.0
    duration_s: float = 240.0
    band_amplitudes: dict[tuple[str, str], float] = field(default_factory=dict)
    coupling: tuple[Coupling, ...] = ()
    erp: ErpShape = field(default_factory=ErpShape)
    noise_sd: float = 1.0
    n_trials: int = 10
    target_object: int = 7
    resting_epoch_s: float = 2.0  # pseudo-trial tile used for phase jitter

    def validate(self) -> None:
        if self.fs <= 0 or self.duration_s <= 0:
            raise InvalidSpec("fs and duration_s must be positive")
        if self.noise_sd < 0:
            raise InvalidSpec("noise_sd must be non-negative")
        if self.n_trials < 1:
            raise InvalidSpec("n_trials must be at least 1")
        if not 0 <= self.target_object < N_OBJECTS:
            raise InvalidSpec(f"target_object must be 0..{N_OBJECTS - 1}")
        if self.resting_epoch_s <= 0:
            raise InvalidSpec("resting_epoch_s must be positive")
        regions = set(montage.REGION_NAMES)
        for (region, band), amp in self.band_amplitudes.items():
            if region not in regions or band not in BAND_NAMES:
                raise InvalidSpec(f"unknown band amplitude cell ({region}, {band})")
            if amp < 0:
                raise InvalidSpec(f"amplitude for ({region}, {band}) must be >= 0")
        seen: set[tuple[str, str]] = set()
        for c in self.coupling:
            if c.region_a not in regions or c.region_b not in regions:
                raise InvalidSpec(f"unknown region in coupling {c}")
            if c.band not in BAND_NAMES:
                raise InvalidSpec(f"unknown band in coupling {c}")
            if not 0.0 <= c.plv_target <= 1.0:
                raise InvalidSpec(f"plv_target must be in [0, 1], got {c.plv_target}")
            members = {(c.region_a, c.band), (c.region_b, c.band)}
            if seen & members:
                raise InvalidSpec(
                    f"region-band cell appears in more than one coupling: {c}"
                )
            for cell in members:
                if self.band_amplitudes.get(cell, 0.0) <= 0.0:
                    raise InvalidSpec(
                        f"coupling {c} references cell {cell} with no amplitude"
                    )
            seen |= members
        if self.erp.p300_amplitude_uv < 0:
            raise InvalidSpec("p300 amplitude must be >= 0")
        if self.erp.latency_ms < 0 or self.erp.latency_ms + self.erp.width_ms > 800.0:
            raise InvalidSpec("target deflection must fit inside the 0-800 ms epoch")


def kappa_for_resultant(r: float) -> float:
    """Invert the von Mises resultant length R(kappa) = I1(kappa)/I0(kappa)."""
    if r <= 0.0:
        return 0.0
    if r >= 1.0 - 1e-9:
        return 5e8
    ratio = lambda k: special.i1e(k) / special.i0e(k) - r
    return float(optimize.brentq(ratio, 1e-9, 1e9, xtol=1e-12, rtol=1e-12))


def _band_noise(rng: np.random.Generator, band: FrequencyBand, fs: float,
                n: int, shape: tuple[int, ...] = ()) -> np.ndarray:
    """Unit-RMS band-limited Gaussian noise along the last axis."""
    white = rng.standard_normal(shape + (n,))
    sos = design_sos(bandpass(band.f1, band.f2), fs)
    x = apply_filter(white, sos, fs, zero_phase=True)
    rms = np.sqrt(np.mean(x ** 2, axis=-1, keepdims=True))
    rms[rms == 0] = 1.0
    return x / rms


def _tile_rotated(carrier: np.ndarray, offsets: np.ndarray, step: int) -> np.ndarray:
    """Rotate an analytic carrier by a per-channel phase offset per tile.

    carrier: (n,) complex analytic signal; offsets: (channels, tiles) radians.
    The remainder after the last whole tile keeps the final offset.
    """
    n = carrier.shape[0]
    rotation = np.repeat(np.exp(1j * offsets), step, axis=1)
    if rotation.shape[1] < n:
        pad = np.repeat(rotation[:, -1:], n - rotation.shape[1], axis=1)
        rotation = np.concatenate([rotation, pad], axis=1)
    return np.real(carrier[None, :] * rotation[:, :n])


def gen_resting(spec: SynthSpec) -> Recording:
    """Resting-state recording with the requested band powers and couplings."""
    spec.validate()
    regions = montage.default_regions()
    channels = regions.all_electrodes()
    n = int(round(spec.duration_s * spec.fs))
    step = int(round(spec.resting_epoch_s * spec.fs))
    n_tiles = max(n // step, 1)
    ss = np.random.SeedSequence(spec.seed)
    rng_noise, rng_carrier, rng_jitter = (
        np.random.default_rng(s) for s in ss.spawn(3)
    )
    data = rng_noise.normal(0.0, spec.noise_sd, (len(channels), n))
    index = {ch: k for k, ch in enumerate(channels)}
    coupled_cells: dict[tuple[str, str], int] = {}
    for ci, c in enumerate(spec.coupling):
        coupled_cells[(c.region_a, c.band)] = ci
        coupled_cells[(c.region_b, c.band)] = ci
    carriers = [
        sps.hilbert(_band_noise(rng_carrier, _BANDS[c.band], spec.fs, n))
        for c in spec.coupling
    ]
    for band_name in BAND_NAMES:
        band = _BANDS[band_name]
        for region in montage.REGION_NAMES:
            amp = spec.band_amplitudes.get((region, band_name), 0.0)
            if amp == 0.0:
                continue
            rows = [index[ch] for ch in regions.electrodes(region)]
            ci = coupled_cells.get((region, band_name))
            if ci is None:
                data[rows] += amp * _band_noise(
                    rng_carrier, band, spec.fs, n, shape=(len(rows),)
                )
                continue
            target = spec.coupling[ci].plv_target
            if target >= 1.0:
                offsets = np.zeros((len(rows), n_tiles))
            else:
                kappa = kappa_for_resultant(math.sqrt(target))
                offsets = rng_jitter.vonmises(0.0, kappa, (len(rows), n_tiles))
            data[rows] += amp * _tile_rotated(carriers[ci], offsets, step)
    return Recording(
        channel_names=channels,
        fs=spec.fs,
        data=data,
        subject_id=f"synth-{spec.seed}",
        condition="resting",
    )


def _sequence_flash_offsets(fs: float) -> np.ndarray:
    """Flash onset offsets (samples) within one sequence at the 185 ms SOA.

    Cumulative rounding keeps the long-run rate exact when the SOA is not a
    whole number of samples.
    """
    return np.round(np.arange(FLASHES_PER_SEQUENCE) * SOA_MS * fs / 1000.0).astype(int)


def _spatial_profile(channels: tuple[str, ...]) -> np.ndarray:
    """Centro-parietal weighting: peak 1 near Cz/CPz, Gaussian falloff."""
    cz = np.array(montage.electrode_position("Cz"))
    cpz = np.array(montage.electrode_position("CPz"))
    center = 0.5 * (cz + cpz)
    pos = np.array([montage.electrode_position(ch) for ch in channels])
    dist = np.linalg.norm(pos - center, axis=1)
    return np.exp(-((dist / 0.4) ** 2))


def gen_erp_session(spec: SynthSpec) -> tuple[Recording, EventStream]:
    """Oddball speller session: trials of 10 sequences x 12 flashes.

    Flashes run at the 185 ms stimulus onset asynchrony; each sequence
    presents the 12 row/column groups in random order, so the target object's
    row and column each flash once per sequence. Target flashes receive a
    positive centro-parietal deflection on top of white background noise.
    """
    spec.validate()
    regions = montage.default_regions()
    channels = regions.all_electrodes()
    fs = spec.fs
    lead = int(round(TRIAL_LEAD_S * fs))
    tail = int(round(TRIAL_TAIL_S * fs))
    seq_offsets = _sequence_flash_offsets(fs)
    seq_span = int(round(FLASHES_PER_SEQUENCE * SOA_MS * fs / 1000.0))
    trial_span = lead + (SEQUENCES_PER_TRIAL - 1) * seq_span + seq_offsets[-1] + tail
    n = spec.n_trials * trial_span
    ss = np.random.SeedSequence(spec.seed)
    rng_noise, rng_order = (np.random.default_rng(s) for s in ss.spawn(2))
    data = rng_noise.normal(0.0, spec.noise_sd, (len(channels), n))

    epoch_samples = int(round(0.8 * fs))
    t_ms = np.arange(epoch_samples) * 1000.0 / fs
    sigma = spec.erp.width_ms / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    template = spec.erp.p300_amplitude_uv * np.exp(
        -0.5 * ((t_ms - spec.erp.latency_ms) / sigma) ** 2
    )
    profile = _spatial_profile(channels)
    bump = profile[:, None] * template[None, :]

    target_groups = set(groups_for_object(spec.target_object))
    events: list[Event] = []
    for trial in range(spec.n_trials):
        t0 = trial * trial_span
        events.append(Event(
            sample_index=t0, kind="trial_start", stimulus_group=None,
            object_ids=frozenset(), is_target=False,
        ))
        for seq in range(SEQUENCES_PER_TRIAL):
            order = rng_order.permutation(FLASHES_PER_SEQUENCE)
            for k, group in enumerate(order):
                onset = t0 + lead + seq * seq_span + seq_offsets[k]
                is_target = int(group) in target_groups
                events.append(Event(
                    sample_index=int(onset),
                    kind="flash",
                    stimulus_group=int(group),
                    object_ids=objects_for_group(int(group)),
                    is_target=is_target,
                ))
                if is_target:
                    data[:, onset:onset + epoch_samples] += bump
    rec = Recording(
        channel_names=channels,
        fs=fs,
        data=data,
        subject_id=f"synth-{spec.seed}",
        condition="erp_task",
    )
    return rec, EventStream(events=tuple(events))


@dataclass(frozen=True)
class CohortSubject:
    subject_id: str
    resting: Recording
    erp_recording: Recording
    erp_events: EventStream
    knob: float  # planted signal-to-noise position in [0, 1]


# Cohort baseline: moderate broadband background with a frontal delta level
# that the dependence slope moves against the performance knob.
_COHORT_BASE_AMPLITUDES = {
    ("frontal", "delta"): 8.0,
    ("central", "delta"): 5.0,
    ("parietal", "delta"): 5.0,
    ("occipital", "delta"): 5.0,
    ("frontal", "theta"): 3.0,
    ("central", "theta"): 3.0,
    ("parietal", "theta"): 3.0,
    ("occipital", "theta"): 3.0,
    ("frontal", "alpha"): 3.0,
    ("central", "alpha"): 3.0,
    ("parietal", "alpha"): 4.0,
    ("occipital", "alpha"): 5.0,
    ("frontal", "beta"): 2.0,
    ("central", "beta"): 2.0,
    ("parietal", "beta"): 2.0,
    ("occipital", "beta"): 2.0,
    ("frontal", "gamma"): 1.5,
    ("central", "gamma"): 1.5,
    ("parietal", "gamma"): 1.5,
    ("occipital", "gamma"): 1.5,
}
COHORT_ERP_AMPLITUDE_RANGE = (0.7, 2.6)  # target deflection, low to high knob
COHORT_ERP_NOISE_SD = 5.0


def gen_cohort(n_subjects: int, dependence: tuple[float, float],
               seed: int = 0, n_trials: int = 20,
               resting_duration_s: float = 240.0) -> list[CohortSubject]:
    """Cohort with a planted frontal-delta / performance relation.

    Subjects span the performance knob evenly. Their target-response
    amplitude rises with the knob while the frontal delta amplitude moves by
    ``slope`` times the knob plus Gaussian amplitude noise, so a negative
    slope plants the negative correlation for the pipeline to rediscover.
    """
    if n_subjects < 3:
        raise InvalidSpec(f"need at least 3 subjects, got {n_subjects}")
    slope, amp_noise = dependence
    rng_master = np.random.default_rng(seed)
    subject_seeds = rng_master.integers(0, 2 ** 62, size=(n_subjects, 2))
    rng_amp = np.random.default_rng(rng_master.integers(0, 2 ** 62))
    lo, hi = COHORT_ERP_AMPLITUDE_RANGE
    subjects = []
    for i in range(n_subjects):
        knob = i / (n_subjects - 1)
        amplitudes = dict(_COHORT_BASE_AMPLITUDES)
        base = amplitudes[("frontal", "delta")]
        jitter = amp_noise * rng_amp.standard_normal() if amp_noise else 0.0
        amplitudes[("frontal", "delta")] = max(base + slope * knob + jitter, 0.2)
        resting = gen_resting(SynthSpec(
            seed=int(subject_seeds[i, 0]),
            duration_s=resting_duration_s,
            band_amplitudes=amplitudes,
            noise_sd=1.0,
        ))
        erp_rec, erp_ev = gen_erp_session(SynthSpec(
            seed=int(subject_seeds[i, 1]),
            erp=ErpShape(p300_amplitude_uv=lo + knob * (hi - lo)),
            noise_sd=COHORT_ERP_NOISE_SD,
            n_trials=n_trials,
        ))
        sid = f"S{i + 1:02d}"
        subjects.append(CohortSubject(
            subject_id=sid,
            resting=replace(resting, subject_id=sid),
            erp_recording=replace(erp_rec, subject_id=sid),
            erp_events=erp_ev,
            knob=knob,
        ))
    return subjects
