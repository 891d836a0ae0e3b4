"""Loading and validation of EEG recordings and stimulus event streams.

On-disk formats
---------------
Recording CSV::

    # subject=<id> condition=<resting|erp_task> fs=<Hz>
    t,<ch1>,<ch2>,...
    0.000000,-1.234567,...

Samples are microvolts with '.' as decimal separator, written with six
decimal digits.

Events CSV::

    sample_index,kind,stimulus_group,object_ids,is_target
    120,flash,3,18|19|20|21|22|23,0

``object_ids`` is a '|'-separated list; ``stimulus_group`` and
``object_ids`` are empty for ``trial_start`` rows; ``is_target`` is 0/1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import montage
from .errors import (
    BadSequenceStructure,
    MalformedHeader,
    MissingChannel,
    NonFiniteSample,
    OutOfRangeIndex,
    RateMismatch,
    UnsortedEvents,
)

CONDITIONS = ("resting", "erp_task")

GRID_SIDE = 6
N_OBJECTS = GRID_SIDE * GRID_SIDE
FLASHES_PER_SEQUENCE = 2 * GRID_SIDE  # six row groups + six column groups
SEQUENCES_PER_TRIAL = 10


def objects_for_group(group: int) -> frozenset[int]:
    """Objects highlighted by stimulus group 0-11 of the 6x6 speller grid.

    Groups 0-5 are rows, 6-11 are columns, in object-index order.
    """
    if not 0 <= group < FLASHES_PER_SEQUENCE:
        raise ValueError(f"stimulus group must be 0..11, got {group}")
    if group < GRID_SIDE:
        return frozenset(range(group * GRID_SIDE, (group + 1) * GRID_SIDE))
    col = group - GRID_SIDE
    return frozenset(col + GRID_SIDE * r for r in range(GRID_SIDE))


def groups_for_object(obj: int) -> tuple[int, int]:
    """The (row group, column group) containing an object."""
    if not 0 <= obj < N_OBJECTS:
        raise ValueError(f"object id must be 0..35, got {obj}")
    return obj // GRID_SIDE, GRID_SIDE + obj % GRID_SIDE


@dataclass(frozen=True)
class Recording:
    """Continuous multichannel EEG, values in microvolts."""

    channel_names: tuple[str, ...]
    fs: float
    data: np.ndarray  # (channels, samples)
    subject_id: str
    condition: str

    def __post_init__(self):
        if self.fs <= 0:
            raise MalformedHeader(f"sampling rate must be positive, got {self.fs}")
        if self.condition not in CONDITIONS:
            raise MalformedHeader(f"unknown condition {self.condition!r}")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise MalformedHeader("duplicate channel names")
        if self.data.ndim != 2 or self.data.shape[0] != len(self.channel_names):
            raise MalformedHeader("data must be (channels, samples)")
        if self.data.shape[1] < 1:
            raise MalformedHeader("recording has no samples")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteSample(f"non-finite sample in recording {self.subject_id!r}")

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def channel_index(self, name: str) -> int:
        try:
            return self.channel_names.index(name)
        except ValueError:
            raise MissingChannel(f"channel {name!r} not in recording") from None


@dataclass(frozen=True)
class Event:
    sample_index: int
    kind: str  # "flash" | "trial_start"
    stimulus_group: int | None
    object_ids: frozenset[int]
    is_target: bool


@dataclass(frozen=True)
class EventStream:
    """Validated, time-ordered stimulus events for one session."""

    events: tuple[Event, ...]

    def flashes(self) -> list[Event]:
        return [e for e in self.events if e.kind == "flash"]

    def trials(self) -> list[list[Event]]:
        """Flash events grouped by trial, in order.

        Trial boundaries are explicit trial_start events; a flash before the
        first trial_start is rejected at load time.
        """
        out: list[list[Event]] = []
        for e in self.events:
            if e.kind == "trial_start":
                out.append([])
            elif e.kind == "flash":
                if not out:
                    raise BadSequenceStructure("flash event before any trial_start")
                out[-1].append(e)
        return out

    def target_object(self, trial: list[Event]) -> int:
        """Ground-truth object of a trial: common member of its target flashes."""
        common: frozenset[int] | None = None
        for e in trial:
            if e.is_target:
                common = e.object_ids if common is None else common & e.object_ids
        if common is None or len(common) != 1:
            raise BadSequenceStructure(
                "target flashes of a trial must single out exactly one object"
            )
        return next(iter(common))


def _validate_events(events: list[Event], recording: Recording) -> EventStream:
    prev = -1
    for e in events:
        if e.sample_index <= prev:
            raise UnsortedEvents(
                f"event sample_index {e.sample_index} not strictly increasing"
            )
        prev = e.sample_index
        if not 0 <= e.sample_index < recording.n_samples:
            raise OutOfRangeIndex(
                f"event at sample {e.sample_index} outside recording "
                f"of {recording.n_samples} samples"
            )
        if e.kind == "flash":
            if e.stimulus_group is None or not 0 <= e.stimulus_group < FLASHES_PER_SEQUENCE:
                raise BadSequenceStructure(f"flash with bad stimulus_group {e.stimulus_group}")
            if len(e.object_ids) != GRID_SIDE:
                raise BadSequenceStructure(
                    f"flash at sample {e.sample_index} carries {len(e.object_ids)} "
                    f"object ids, expected {GRID_SIDE}"
                )
    stream = EventStream(events=tuple(events))
    for trial in stream.trials():
        if len(trial) % FLASHES_PER_SEQUENCE != 0:
            raise BadSequenceStructure(
                f"trial with {len(trial)} flashes is not a whole number of "
                f"{FLASHES_PER_SEQUENCE}-flash sequences"
            )
        for s in range(len(trial) // FLASHES_PER_SEQUENCE):
            seq = trial[s * FLASHES_PER_SEQUENCE:(s + 1) * FLASHES_PER_SEQUENCE]
            if sorted(e.stimulus_group for e in seq) != list(range(FLASHES_PER_SEQUENCE)):
                raise BadSequenceStructure(
                    f"sequence {s + 1} does not flash each of the 12 groups once"
                )
    return stream


def load_recording(path: str | Path, expected_fs: float) -> Recording:
    """Load a recording CSV, checking montage completeness and sample rate."""
    path = Path(path)
    with open(path, "r") as f:
        meta_line = f.readline().strip()
        header_line = f.readline().strip()
    meta = _parse_meta(meta_line, path)
    fs = meta["fs"]
    if abs(fs - expected_fs) > 1e-9:
        raise RateMismatch(f"{path}: fs={fs} but expected {expected_fs}")
    cols = header_line.split(",")
    if len(cols) < 2 or cols[0] != "t":
        raise MalformedHeader(f"{path}: header must start with 't,<channels...>'")
    channels = tuple(cols[1:])
    if len(set(channels)) != len(channels):
        raise MalformedHeader(f"{path}: duplicate channel names")
    for ch in montage.default_regions().all_electrodes():
        if ch not in channels:
            raise MissingChannel(f"{path}: montage channel {ch!r} missing")
    montage.layout_for(channels)  # every channel must be a known 10-20 name
    frame = pd.read_csv(path, skiprows=1)
    try:
        data = frame[list(channels)].to_numpy(dtype=np.float64).T
    except (ValueError, TypeError) as exc:
        raise MalformedHeader(f"{path}: non-numeric sample value ({exc})") from None
    if not np.all(np.isfinite(data)):
        raise NonFiniteSample(f"{path}: non-finite sample value")
    return Recording(
        channel_names=channels,
        fs=fs,
        data=data,
        subject_id=meta["subject"],
        condition=meta["condition"],
    )


def _parse_meta(line: str, path: Path) -> dict:
    if not line.startswith("#"):
        raise MalformedHeader(f"{path}: first line must be the '# subject=…' preamble")
    fields = dict(
        token.split("=", 1) for token in line[1:].split() if "=" in token
    )
    missing = {"subject", "condition", "fs"} - set(fields)
    if missing:
        raise MalformedHeader(f"{path}: preamble missing {sorted(missing)}")
    if fields["condition"] not in CONDITIONS:
        raise MalformedHeader(f"{path}: bad condition {fields['condition']!r}")
    try:
        fs = float(fields["fs"])
    except ValueError:
        raise MalformedHeader(f"{path}: bad fs {fields['fs']!r}") from None
    return {"subject": fields["subject"], "condition": fields["condition"], "fs": fs}


def save_recording(rec: Recording, path: str | Path) -> None:
    """Write the recording CSV with six-decimal microvolt values."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# subject={rec.subject_id} condition={rec.condition} fs={rec.fs:g}\n")
    buf.write("t," + ",".join(rec.channel_names) + "\n")
    t = np.arange(rec.n_samples) / rec.fs
    table = np.column_stack([t, rec.data.T])
    np.savetxt(buf, table, fmt="%.6f", delimiter=",")
    path.write_text(buf.getvalue())


def load_events(path: str | Path, recording: Recording) -> EventStream:
    """Load and validate an events CSV against its recording."""
    path = Path(path)
    events: list[Event] = []
    with open(path, "r") as f:
        header = f.readline().strip()
        if header != "sample_index,kind,stimulus_group,object_ids,is_target":
            raise MalformedHeader(f"{path}: unexpected events header")
        for ln, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise MalformedHeader(f"{path}:{ln}: expected 5 fields")
            idx_s, kind, group_s, objects_s, target_s = parts
            if kind not in ("flash", "trial_start"):
                raise MalformedHeader(f"{path}:{ln}: unknown event kind {kind!r}")
            group = int(group_s) if group_s != "" else None
            objects = frozenset(int(x) for x in objects_s.split("|") if x != "")
            events.append(
                Event(
                    sample_index=int(idx_s),
                    kind=kind,
                    stimulus_group=group,
                    object_ids=objects,
                    is_target=target_s == "1",
                )
            )
    return _validate_events(events, recording)


def save_events(ev: EventStream, path: str | Path) -> None:
    path = Path(path)
    lines = ["sample_index,kind,stimulus_group,object_ids,is_target"]
    for e in ev.events:
        group = "" if e.stimulus_group is None else str(e.stimulus_group)
        objects = "|".join(str(o) for o in sorted(e.object_ids))
        lines.append(
            f"{e.sample_index},{e.kind},{group},{objects},{1 if e.is_target else 0}"
        )
    path.write_text("\n".join(lines) + "\n")
