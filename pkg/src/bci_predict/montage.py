"""Flat 2-D scalp layout for the 10-20/10-10 electrode naming scheme.

Positions come from the usual azimuthal-equidistant sketch of the head:
Cz sits at the origin, the 10% outer ring at radius 0.8 (unit head radius),
and each electrode row (Fp, F, FC, C, CP, P, O) is an arc interpolated in
polar coordinates between its midline electrode and its outer-ring endpoint.
Only relative distances matter here; the layout drives nearest-neighbour
selection for bad-channel interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MalformedHeader

RING_RADIUS = 0.8

# (inclination from Cz in degrees, azimuth of the left ring endpoint).
# Azimuth convention: 90 = front midline, 180 = left ear, 270 = back midline.
_ROWS = {
    "Fp": (72.0, 108.0),
    "AF": (54.0, 126.0),
    "F": (36.0, 144.0),
    "FC": (18.0, 162.0),
    "C": (0.0, 180.0),
    "CP": (18.0, 198.0),
    "P": (36.0, 216.0),
    "PO": (54.0, 234.0),
    "O": (72.0, 252.0),
}
_FRONT_ROWS = {"Fp", "AF", "F", "FC"}
# Rows whose numbered electrodes all live on the outer ring.
_RING_ROWS = {"Fp", "O"}


def _polar(radius: float, azimuth_deg: float) -> tuple[float, float]:
    a = math.radians(azimuth_deg)
    return (radius * math.cos(a), radius * math.sin(a))


def electrode_position(name: str) -> tuple[float, float]:
    """2-D (x, y) position of a 10-20/10-10 electrode, unit head radius.

    Raises MalformedHeader for names outside the supported scheme.
    """
    if name in ("T7", "T8"):  # modern names for the C-row ring sites
        return _polar(RING_RADIUS, 180.0 if name == "T7" else 0.0)
    row = None
    for prefix in sorted(_ROWS, key=len, reverse=True):
        if name.startswith(prefix):
            row, tail = prefix, name[len(prefix):]
            break
    if row is None or tail == "":
        raise MalformedHeader(f"unknown electrode name {name!r}")
    incl, ring_az = _ROWS[row]
    mid_az = 90.0 if row in _FRONT_ROWS else 270.0
    if tail == "z":
        return _polar(incl / 90.0, mid_az)
    if not tail.isdigit():
        raise MalformedHeader(f"unknown electrode name {name!r}")
    k = int(tail)
    left = k % 2 == 1
    if row in _RING_ROWS:
        # Fp1/Fp2, O1/O2 sit one 5% step off the midline along the ring.
        az = ring_az if left else 180.0 - ring_az
        return _polar(RING_RADIUS, az)
    u = min((k + 1) // 2, 4) / 4.0  # z..ring in four 10% steps
    radius = (1.0 - u) * incl / 90.0 + u * RING_RADIUS
    # interpolate in polar coordinates on the left side, mirror x for the right;
    # the C row runs straight along the ear-to-ear axis
    start_az = 180.0 if row == "C" else mid_az
    az_left = (1.0 - u) * start_az + u * ring_az
    x, y = _polar(radius, az_left)
    return (x, y) if left else (-x, y)


def layout_for(channel_names) -> dict[str, tuple[float, float]]:
    """Positions for every channel name, validating the naming scheme."""
    return {ch: electrode_position(ch) for ch in channel_names}


@dataclass(frozen=True)
class RegionMap:
    """Grouping of the 32-electrode montage into four scalp regions."""

    frontal: tuple[str, ...]
    central: tuple[str, ...]
    parietal: tuple[str, ...]
    occipital: tuple[str, ...]

    def __post_init__(self):
        sets = [set(getattr(self, r)) for r in REGION_NAMES]
        if any(len(s) != 8 for s in sets):
            raise ValueError("each region must contain exactly 8 electrodes")
        union = set().union(*sets)
        if len(union) != 32:
            raise ValueError("regions must be disjoint with 32 electrodes total")

    def electrodes(self, region: str) -> tuple[str, ...]:
        return getattr(self, region)

    def all_electrodes(self) -> tuple[str, ...]:
        out: list[str] = []
        for r in REGION_NAMES:
            out.extend(getattr(self, r))
        return tuple(out)

    def as_dict(self) -> dict[str, list[str]]:
        return {r: list(getattr(self, r)) for r in REGION_NAMES}


REGION_NAMES = ("frontal", "central", "parietal", "occipital")

# Unordered region pairs in reporting order (F-F, F-C, ... O-O).
REGION_PAIRS: tuple[tuple[str, str], ...] = (
    ("frontal", "frontal"),
    ("frontal", "central"),
    ("frontal", "parietal"),
    ("frontal", "occipital"),
    ("central", "central"),
    ("central", "parietal"),
    ("central", "occipital"),
    ("parietal", "parietal"),
    ("parietal", "occipital"),
    ("occipital", "occipital"),
)


def pair_label(pair: tuple[str, str]) -> str:
    return f"{pair[0]}-{pair[1]}"


def default_regions() -> RegionMap:
    return RegionMap(
        frontal=("Fp1", "Fp2", "F3", "Fz", "F4", "FC1", "FCz", "FC2"),
        central=("C3", "C1", "Cz", "C2", "C4", "CP1", "CPz", "CP2"),
        parietal=("FC5", "FC6", "T7", "T8", "CP5", "CP6", "P7", "P8"),
        occipital=("P3", "P1", "Pz", "P2", "P4", "O1", "Oz", "O2"),
    )
