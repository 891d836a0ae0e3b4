"""Target/non-target ERP classification and speller decoding.

Feature vectors are the mean amplitudes of 16 consecutive 50 ms windows per
channel (32 channels x 16 windows = 512 dimensions, channel-major). The
classifier is a linear soft-margin SVM trained by deterministic dual
coordinate descent on the hinge loss, with per-class cost weights inversely
proportional to class frequencies and feature standardization from training
statistics. Selections are decoded by summing decision values per speller
object over all flashes containing it and taking the argmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    Degenerate,
    MissingSequences,
    NoTrials,
    SingleClass,
    WrongEpochLength,
)
from .ingest import N_OBJECTS, EventStream, objects_for_group
from .preprocess import EpochSet

N_WINDOWS = 16
EPOCH_SAMPLES = 80  # 0-800 ms at 100 Hz
N_FEATURES = 512  # 32 channels x 16 windows


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # (512,)
    label: str  # "target" | "non_target"
    trial_id: int
    sequence_index: int
    stimulus_group: int


@dataclass(frozen=True)
class TrainedClassifier:
    weights: np.ndarray  # (512,)
    bias: float
    c: float
    class_weights: tuple[float, float]  # (target, non_target)
    feature_mean: np.ndarray  # (512,)
    feature_sd: np.ndarray  # (512,), constant features pinned to 1

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        """w . standardize(x) + b for rows of x."""
        z = (np.atleast_2d(x) - self.feature_mean) / self.feature_sd
        return z @ self.weights + self.bias


def build_feature_vectors(eps: EpochSet) -> list[FeatureVector]:
    """Windowed mean-amplitude features for each flash epoch, labels preserved."""
    vectors: list[FeatureVector] = []
    for e in eps.epochs:
        n_channels, n_samples = e.data.shape
        if n_samples != EPOCH_SAMPLES or n_channels * N_WINDOWS != N_FEATURES:
            raise WrongEpochLength(
                f"expected {N_FEATURES // N_WINDOWS} channels x {EPOCH_SAMPLES} "
                f"samples, got {n_channels} x {n_samples}"
            )
        means = e.data.reshape(n_channels, N_WINDOWS, -1).mean(axis=2)
        vectors.append(FeatureVector(
            values=means.reshape(-1),
            label=e.label,
            trial_id=e.trial_id,
            sequence_index=e.sequence_index,
            stimulus_group=e.stimulus_group,
        ))
    return vectors


def train_classifier(train: list[FeatureVector], c: float = 1.0,
                     tol: float = 1e-6, max_sweeps: int = 4000) -> TrainedClassifier:
    """Train the linear SVM by dual coordinate descent.

    Minimizes (1/2)||w||^2 + c * sum_i class_weight_i * hinge_i over the
    standardized features with an augmented (regularized) bias term. The
    sweep order is fixed, so training is deterministic: identical inputs give
    bit-identical weights.
    """
    X = np.stack([v.values for v in train]).astype(np.float64)
    y = np.array([1.0 if v.label == "target" else -1.0 for v in train])
    if not np.all(np.isfinite(X)):
        raise WrongEpochLength("non-finite feature value")
    n_pos = int((y > 0).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("training data must contain both classes")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0  # constant features carry no information either way
    Xa = np.hstack([(X - mean) / sd, np.ones((len(y), 1))])
    weight_pos = len(y) / (2.0 * n_pos)
    weight_neg = len(y) / (2.0 * n_neg)
    cost = np.where(y > 0, c * weight_pos, c * weight_neg)
    q_diag = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(len(y))
    w = np.zeros(Xa.shape[1])
    for _ in range(max_sweeps):
        worst = 0.0
        for i in range(len(y)):
            g = y[i] * float(Xa[i] @ w) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= cost[i]:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > worst:
                worst = abs(pg)
            if pg != 0.0:
                a_new = min(max(a - g / q_diag[i], 0.0), cost[i])
                if a_new != a:
                    w += (a_new - a) * y[i] * Xa[i]
                    alpha[i] = a_new
        if worst < tol:
            break
    if not np.all(np.isfinite(w)):
        raise Degenerate("optimizer diverged")
    return TrainedClassifier(
        weights=w[:-1].copy(),
        bias=float(w[-1]),
        c=c,
        class_weights=(weight_pos, weight_neg),
        feature_mean=mean,
        feature_sd=sd,
    )


def decode_target(clf: TrainedClassifier, test: list[FeatureVector],
                  trial_id: int, s: int) -> int:
    """Decode the selected object from the first ``s`` sequences of a trial.

    Sums decision values over all flashes containing each object; ties break
    toward the lowest object index.
    """
    flashes = [v for v in test if v.trial_id == trial_id]
    if not flashes:
        raise NoTrials(f"no flashes for trial {trial_id}")
    have = max(v.sequence_index for v in flashes)
    if s < 1 or s > have:
        raise MissingSequences(f"trial {trial_id} has {have} sequences, asked for {s}")
    used = [v for v in flashes if v.sequence_index <= s]
    decisions = clf.decision_values(np.stack([v.values for v in used]))
    scores = np.zeros(N_OBJECTS)
    for v, d in zip(used, decisions):
        for obj in objects_for_group(v.stimulus_group):
            scores[obj] += d
    return int(np.argmax(scores))


@dataclass(frozen=True)
class SpellerResult:
    subject_id: str
    accuracy_by_sequence: tuple[float, ...]  # index 0 = one sequence used
    literate: bool


def speller_accuracy(clf: TrainedClassifier, vectors: list[FeatureVector],
                     true_targets: dict[int, int], subject_id: str = "",
                     illiteracy_threshold: float = 0.30,
                     max_sequences: int = 10) -> SpellerResult:
    """Selection accuracy as a function of sequences used.

    ``true_targets`` maps trial id to the attended object. The literacy flag
    is set from the final (all sequences) accuracy against the threshold.
    """
    if not true_targets:
        raise NoTrials("no trials to score")
    by_trial: dict[int, list[FeatureVector]] = {}
    for v in vectors:
        by_trial.setdefault(v.trial_id, []).append(v)
    accuracy = []
    for s in range(1, max_sequences + 1):
        hits = sum(
            decode_target(clf, by_trial[trial_id], trial_id, s) == target
            for trial_id, target in true_targets.items()
        )
        accuracy.append(hits / len(true_targets))
    return SpellerResult(
        subject_id=subject_id,
        accuracy_by_sequence=tuple(accuracy),
        literate=accuracy[-1] >= illiteracy_threshold,
    )


def accuracy_by_sequence(clf: TrainedClassifier, eps: EpochSet, ev: EventStream,
                         subject_id: str = "",
                         illiteracy_threshold: float = 0.30) -> SpellerResult:
    """Score a test session end to end: epochs -> vectors -> decoded accuracy."""
    vectors = build_feature_vectors(eps)
    truth = {
        trial_id: ev.target_object(trial)
        for trial_id, trial in enumerate(ev.trials())
    }
    present = {v.trial_id for v in vectors}
    truth = {t: obj for t, obj in truth.items() if t in present}
    return speller_accuracy(clf, vectors, truth, subject_id=subject_id,
                            illiteracy_threshold=illiteracy_threshold)


def save_classifier(clf: TrainedClassifier, path: str | Path) -> None:
    doc = {
        "weights": clf.weights.tolist(),
        "bias": clf.bias,
        "c": clf.c,
        "class_weights": {"target": clf.class_weights[0],
                          "non_target": clf.class_weights[1]},
        "feature_mean": clf.feature_mean.tolist(),
        "feature_sd": clf.feature_sd.tolist(),
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_classifier(path: str | Path) -> TrainedClassifier:
    doc = json.loads(Path(path).read_text())
    return TrainedClassifier(
        weights=np.array(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        c=float(doc["c"]),
        class_weights=(float(doc["class_weights"]["target"]),
                       float(doc["class_weights"]["non_target"])),
        feature_mean=np.array(doc["feature_mean"], dtype=np.float64),
        feature_sd=np.array(doc["feature_sd"], dtype=np.float64),
    )
