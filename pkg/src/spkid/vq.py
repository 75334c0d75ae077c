"""Vector-quantization speaker models: random codebooks, distortion scoring,
bilingual combined codebooks and minimum-distortion identification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CombineError, DimensionMismatchError, InsufficientDataError

MAX_BITS = 7
# rows per distance block, bounds the (rows x centroids) buffer
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class Codebook:
    centroids: np.ndarray
    No: int
    speaker_id: str = ""
    language: str = "A"
    seed: int = 0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centroids, dtype=np.float64))
        expected = 2 ** self.No * (2 if self.language == "combined" else 1)
        if c.shape[0] != expected:
            raise ValueError(f"{self.language} codebook with No={self.No} needs "
                             f"{expected} centroids, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def P(self):
        return self.centroids.shape[1]

    @property
    def size(self):
        return self.centroids.shape[0]

    @property
    def n_parameters(self):
        return self.centroids.size


def count_vq_parameters(No, P):
    return 2 ** No * P


def _vectors(features):
    return np.asarray(getattr(features, "vectors", features), dtype=np.float64)


def squared_distances(x, centroids):
    """(T, K) matrix of squared Euclidean distances.

    ``cdist`` sums each (vector, centroid) pair on its own, never through
    the ``|x|^2 - 2xc + |c|^2`` expansion, so an entry does not depend on
    the other centroids present: the minimum over a superset of centroids
    is exactly <= the minimum over any subset.
    """
    return cdist(np.asarray(x, dtype=np.float64), np.asarray(centroids, dtype=np.float64),
                 "sqeuclidean")


def _lloyd(x, centroids, n_iter):
    centroids = centroids.copy()
    for _ in range(n_iter):
        labels = np.argmin(squared_distances(x, centroids), axis=1)
        moved = False
        for j in range(len(centroids)):
            members = x[labels == j]
            if len(members):
                new = members.mean(axis=0)
                moved |= not np.array_equal(new, centroids[j])
                centroids[j] = new
        if not moved:
            break
    return centroids


def train_codebook_random(features, No, seed, refine=False, n_iter=20,
                          speaker_id=None, language=None):
    """Pick ``2**No`` distinct training vectors at random as the codebook.

    With ``refine=True`` the random pick only initialises a few Lloyd
    (k-means) passes.
    """
    if not 0 <= No <= MAX_BITS:
        raise ValueError(f"No must lie in 0..{MAX_BITS}, got {No}")
    x = _vectors(features)
    k = 2 ** No
    if len(x) < k:
        raise InsufficientDataError(
            f"{k} centroids requested but only {len(x)} training vectors")
    rng = np.random.default_rng(seed)
    centroids = x[rng.choice(len(x), size=k, replace=False)]
    if refine:
        centroids = _lloyd(x, centroids, n_iter)
    source = getattr(features, "source", ("", "", ""))
    return Codebook(centroids, No,
                    speaker_id if speaker_id is not None else source[0],
                    language if language is not None else (source[1] or "A"),
                    int(seed))


def quantize_distortion(features, codebook):
    """Mean over frames of the squared distance to the nearest centroid."""
    return float(model_distortions(features, [codebook])[0])


def model_distortions(features, models):
    """Mean nearest-centroid distortion of ``features`` under each codebook.

    All centroids are scored in one pass; each model's per-frame minima are
    then averaged with the same reduction, so a model's score does not
    depend on which other models are scored alongside it.
    """
    x = _vectors(features)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("no feature vectors to quantize")
    for m in models:
        if x.shape[1] != m.P:
            raise DimensionMismatchError(
                f"features have P={x.shape[1]}, codebook has P={m.P}")
    bounds = np.cumsum([0] + [m.size for m in models])
    stacked = np.vstack([m.centroids for m in models])
    minima = np.empty((len(models), len(x)))
    for start in range(0, len(x), _CHUNK):
        d = squared_distances(x[start:start + _CHUNK], stacked)
        minima[:, start:start + _CHUNK] = np.minimum.reduceat(d, bounds[:-1], axis=1).T
    return minima.mean(axis=1)


def combine_codebooks(cb_a, cb_b):
    """Stack two equal-size books of one speaker (A's centroids first)."""
    if cb_a.No != cb_b.No or cb_a.P != cb_b.P:
        raise CombineError(f"cannot combine No={cb_a.No}/P={cb_a.P} "
                           f"with No={cb_b.No}/P={cb_b.P}")
    if cb_a.speaker_id != cb_b.speaker_id:
        raise CombineError(
            f"codebooks belong to different speakers: {cb_a.speaker_id!r}, {cb_b.speaker_id!r}")
    if "combined" in (cb_a.language, cb_b.language):
        raise CombineError("inputs must be single-language codebooks")
    return Codebook(np.vstack([cb_a.centroids, cb_b.centroids]), cb_a.No,
                    cb_a.speaker_id, "combined", cb_a.seed)


def argmin_speaker(speaker_ids, scores):
    """Index of the lowest score; ties go to the lexicographically first id."""
    order = sorted(range(len(scores)), key=lambda i: (scores[i], speaker_ids[i]))
    return order[0]


def identify_vq(models, features):
    """Return ``(speaker_id, distortions)``, distortions aligned with ``models``."""
    if not models:
        raise ValueError("at least one model is required")
    P = models[0].P
    if any(m.P != P for m in models):
        raise DimensionMismatchError("models disagree on dimension P")
    scores = model_distortions(features, models)
    best = argmin_speaker([m.speaker_id for m in models], scores)
    return models[best].speaker_id, scores


def save_codebook(codebook, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"vqcb v1 P={codebook.P} No={codebook.No} count={codebook.size} "
                 f"speaker={codebook.speaker_id} lang={codebook.language} "
                 f"seed={codebook.seed}\n")
        for row in codebook.centroids:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _parse_header(line, magic):
    parts = line.split()
    if parts[:2] != magic.split():
        raise ValueError(f"expected header starting with {magic!r}, got {line.strip()!r}")
    return dict(p.split("=", 1) for p in parts[2:])


def load_codebook(path):
    with open(path, encoding="utf-8") as fh:
        head = _parse_header(fh.readline(), "vqcb v1")
        rows = [[float(v) for v in line.split()] for line in fh if line.strip()]
    P, count = int(head["P"]), int(head["count"])
    centroids = np.array(rows, dtype=np.float64)
    if centroids.shape != (count, P):
        raise ValueError(f"{path}: expected {count}x{P} centroids, got {centroids.shape}")
    return Codebook(centroids, int(head["No"]), head["speaker"], head["lang"], int(head["seed"]))
