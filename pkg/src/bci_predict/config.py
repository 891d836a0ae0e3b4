"""Study configuration: a JSON document mirroring StudyConfig fields.

Absent fields take the defaults below, so an empty JSON object is a valid
configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import MalformedHeader
from .features import FrequencyBand, canonical_bands
from .montage import RegionMap, default_regions


@dataclass(frozen=True)
class StudyConfig:
    bands: tuple[FrequencyBand, ...] = field(default_factory=canonical_bands)
    regions: RegionMap = field(default_factory=default_regions)
    epoch_window_ms: tuple[float, float] = (0.0, 800.0)
    baseline_ms: tuple[float, float] = (-200.0, 0.0)
    artifact_threshold_uv: float = 100.0
    resting_epoch_s: float = 2.0
    svm_c: float = 1.0
    illiteracy_threshold: float = 0.30
    alpha: float = 0.05
    bandpass_hz: tuple[float, float] = (0.5, 45.0)
    notch_hz: float = 60.0
    filter_order: int = 4
    notch_q: float = 30.0
    reject_channel_fraction: float = 0.25
    use_hann: bool = False
    dynamics_bin_ms: float = 100.0
    n_permutations: int = 10000
    train_fraction: float = 0.5

    def __post_init__(self):
        for band in self.bands:
            if band.f1 >= band.f2:
                raise MalformedHeader(f"band {band.name} edges must increase")
        if self.artifact_threshold_uv <= 0:
            raise MalformedHeader("artifact_threshold_uv must be positive")
        if self.resting_epoch_s <= 0:
            raise MalformedHeader("resting_epoch_s must be positive")
        if self.svm_c <= 0:
            raise MalformedHeader("svm_c must be positive")
        if not 0.0 < self.illiteracy_threshold < 1.0:
            raise MalformedHeader("illiteracy_threshold must be in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise MalformedHeader("alpha must be in (0, 1)")
        if not 0.0 < self.train_fraction < 1.0:
            raise MalformedHeader("train_fraction must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "bands": [{"name": b.name, "f1": b.f1, "f2": b.f2} for b in self.bands],
            "regions": self.regions.as_dict(),
            "epoch_window_ms": list(self.epoch_window_ms),
            "baseline_ms": list(self.baseline_ms),
            "artifact_threshold_uv": self.artifact_threshold_uv,
            "resting_epoch_s": self.resting_epoch_s,
            "svm_c": self.svm_c,
            "illiteracy_threshold": self.illiteracy_threshold,
            "alpha": self.alpha,
            "bandpass_hz": list(self.bandpass_hz),
            "notch_hz": self.notch_hz,
            "filter_order": self.filter_order,
            "notch_q": self.notch_q,
            "reject_channel_fraction": self.reject_channel_fraction,
            "use_hann": self.use_hann,
            "dynamics_bin_ms": self.dynamics_bin_ms,
            "n_permutations": self.n_permutations,
            "train_fraction": self.train_fraction,
        }


def config_from_dict(doc: dict) -> StudyConfig:
    kwargs: dict = {}
    if "bands" in doc:
        kwargs["bands"] = tuple(
            FrequencyBand(b["name"], float(b["f1"]), float(b["f2"]))
            for b in doc["bands"]
        )
    if "regions" in doc:
        kwargs["regions"] = RegionMap(**{
            region: tuple(chs) for region, chs in doc["regions"].items()
        })
    for key in ("epoch_window_ms", "baseline_ms", "bandpass_hz"):
        if key in doc:
            kwargs[key] = tuple(float(v) for v in doc[key])
    for key in ("artifact_threshold_uv", "resting_epoch_s", "svm_c",
                "illiteracy_threshold", "alpha", "notch_hz", "notch_q",
                "reject_channel_fraction", "dynamics_bin_ms", "train_fraction"):
        if key in doc:
            kwargs[key] = float(doc[key])
    for key in ("filter_order", "n_permutations"):
        if key in doc:
            kwargs[key] = int(doc[key])
    if "use_hann" in doc:
        kwargs["use_hann"] = bool(doc["use_hann"])
    unknown = set(doc) - set(StudyConfig().to_dict())
    if unknown:
        raise MalformedHeader(f"unknown config fields: {sorted(unknown)}")
    return StudyConfig(**kwargs)


def load_config(path: str | Path | None) -> StudyConfig:
    if path is None:
        return StudyConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise MalformedHeader(f"{path}: config must be a JSON object")
    return config_from_dict(doc)


def save_config(cfg: StudyConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
