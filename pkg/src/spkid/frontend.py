"""LPCC front-end: preemphasis, framing, silence removal, Hamming window,
autocorrelation, Levinson-Durbin and the LPC-to-cepstrum recursion.

Every stage accepts a single frame or a stack of frames (leading axes are
batch axes), so a whole utterance goes through in a handful of numpy calls.

Sign convention: the predictor is ``xhat[n] = sum_k a[k] * x[n-k]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateFrameError, EmptyUtteranceError

ENERGY_EPS = 1e-12
REFLECTION_CLAMP = 0.999


class OrderWarning(UserWarning):
    """Prediction order too high for reliable autocorrelation estimates."""


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(10_000)


@dataclass(frozen=True)
class AnalysisConfig:
    frame_length: int = 240
    overlap_fraction: Fraction = Fraction(2, 3)
    preemphasis: float = 0.95
    lpc_order: int = 12
    silence_floor_db: float = 30.0
    strict_order: bool = False

    def __post_init__(self):
        object.__setattr__(self, "overlap_fraction", _as_fraction(self.overlap_fraction))
        if self.frame_length < 2:
            raise ValueError("frame_length must be >= 2")
        hop = self.frame_length * (1 - self.overlap_fraction)
        if hop.denominator != 1 or hop <= 0:
            raise ValueError(
                f"frame_length*(1-overlap) = {hop} must be a positive integer")
        if not 0 <= self.preemphasis < 1:
            raise ValueError("preemphasis must lie in [0, 1)")
        if not 1 <= self.lpc_order < self.frame_length:
            raise ValueError(
                f"lpc_order must lie in 1..{self.frame_length - 1}, got {self.lpc_order}")
        if self.lpc_order > self.max_reliable_order:
            msg = (f"lpc_order {self.lpc_order} exceeds {self.max_reliable_order} "
                   f"for {self.frame_length}-sample frames; autocorrelation is poorly estimated")
            if self.strict_order:
                raise ValueError(msg)
            warnings.warn(msg, OrderWarning, stacklevel=3)

    @property
    def hop(self):
        return int(self.frame_length * (1 - self.overlap_fraction))

    @property
    def max_reliable_order(self):
        return self.frame_length // 10

    def with_order(self, order):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderWarning)
            return AnalysisConfig(self.frame_length, self.overlap_fraction, self.preemphasis,
                                  order, self.silence_floor_db, self.strict_order)

    def as_dict(self):
        return {
            "frame_length": self.frame_length,
            "overlap_fraction": str(self.overlap_fraction),
            "hop": self.hop,
            "preemphasis": self.preemphasis,
            "lpc_order": self.lpc_order,
            "silence_floor_db": self.silence_floor_db,
        }


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    vectors: np.ndarray
    source: tuple = ("", "", "")
    clamped_frames: int = field(default=0, compare=False)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if v.size == 0:
            v = v.reshape(0, v.shape[-1] if v.ndim == 2 else 0)
        if not np.all(np.isfinite(v)):
            raise ValueError("feature vectors must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def P(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]


def preemphasize(samples, coefficient=0.95):
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[1:] -= coefficient * x[:-1]
    return y


def frame_signal(samples, frame_length, hop):
    """Stack of full frames starting at 0, hop, 2*hop, ...; partial tail dropped."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < frame_length:
        return np.empty((0, frame_length))
    return sliding_window_view(x, frame_length)[::hop]


def frame_log_energy(frames):
    frames = np.asarray(frames, dtype=np.float64)
    return 10.0 * np.log10(np.sum(frames * frames, axis=-1) + ENERGY_EPS)


def remove_silence(frames, silence_floor_db=30.0, return_mask=False):
    """Drop frames more than ``silence_floor_db`` below the loudest frame.

    An all-silent input (every frame at the epsilon floor) is rejected.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if len(frames) == 0:
        raise EmptyUtteranceError("no frames to process")
    energy = frame_log_energy(frames)
    top = energy.max()
    if top <= 10.0 * np.log10(ENERGY_EPS):
        raise EmptyUtteranceError("utterance is entirely silent")
    keep = energy >= top - silence_floor_db
    if return_mask:
        return frames[keep], keep
    return frames[keep]


def hamming(length):
    n = np.arange(length)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (length - 1))


def apply_window(frame):
    frame = np.asarray(frame, dtype=np.float64)
    return frame * hamming(frame.shape[-1])


def autocorrelate(frame, order):
    """Biased, unnormalised autocorrelation r[0..order] along the last axis."""
    x = np.asarray(frame, dtype=np.float64)
    L = x.shape[-1]
    if order >= L:
        raise ValueError(f"order {order} must be smaller than frame length {L}")
    r = np.empty(x.shape[:-1] + (order + 1,))
    for k in range(order + 1):
        r[..., k] = np.einsum("...i,...i->...", x[..., k:], x[..., :L - k])
    return r


class LPCResult(NamedTuple):
    coefficients: np.ndarray
    error: np.ndarray
    clamped: np.ndarray


def levinson_durbin(r, order=None):
    """Solve the Toeplitz normal equations for the forward predictor.

    ``r`` has shape (..., order+1).  Returns ``(a, error, clamped)`` where
    ``a[..., k-1]`` is the k-th predictor coefficient, ``error`` the final
    prediction-error power and ``clamped`` marks inputs whose reflection
    coefficient had to be pulled back inside (-1, 1).
    """
    r = np.asarray(r, dtype=np.float64)
    if order is None:
        order = r.shape[-1] - 1
    if r.shape[-1] < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {r.shape[-1]}")
    if np.any(r[..., 0] <= 0):
        raise DegenerateFrameError("r[0] must be positive")

    # lag axis first so each recursion step works on contiguous rows
    rt = np.ascontiguousarray(np.moveaxis(r[..., :order + 1], -1, 0))
    batch = r.shape[:-1]
    a = np.zeros((order,) + batch)
    err = rt[0].copy()
    clamped = np.zeros(batch, dtype=bool)
    for i in range(order):
        acc = rt[i + 1] - np.einsum("i...,i...->...", a[:i], rt[i:0:-1])
        k = acc / err
        bad = np.abs(k) >= 1.0
        if np.any(bad):
            k = np.where(bad, np.sign(k) * REFLECTION_CLAMP, k)
            clamped |= bad
        if i:
            a[:i] = a[:i] - k * a[i - 1::-1]
        a[i] = k
        err = err * (1.0 - k * k)
    a = np.ascontiguousarray(np.moveaxis(a, 0, -1))
    return LPCResult(a, err, clamped)


def lpc_to_cepstrum(a):
    """LPCC c_1..c_P from predictor coefficients (c_0 excluded)."""
    a = np.asarray(a, dtype=np.float64)
    P = a.shape[-1]
    c = np.zeros_like(a)
    a_rev = a[..., ::-1]
    for n in range(1, P + 1):
        # sum_{k<n} (k/n) c_k a_{n-k}; a_rev[P-n+1:P] holds a_{n-1}..a_1
        weights = np.arange(1, n) / n
        c[..., n - 1] = a[..., n - 1] + np.einsum(
            "...i,...i->...", c[..., :n - 1] * weights, a_rev[..., P - n + 1:P])
    return c


def extract_features(utterance, config=None):
    """Full pipeline: one LPCC vector per frame surviving silence removal."""
    config = config or AnalysisConfig()
    if len(utterance.samples) == 0:
        raise EmptyUtteranceError("utterance has no samples")
    x = preemphasize(utterance.samples, config.preemphasis)
    frames = frame_signal(x, config.frame_length, config.hop)
    if len(frames) == 0:
        raise EmptyUtteranceError(
            f"utterance shorter than one {config.frame_length}-sample frame")
    frames = remove_silence(frames, config.silence_floor_db)
    r = autocorrelate(apply_window(frames), config.lpc_order)
    lpc = levinson_durbin(r, config.lpc_order)
    ceps = lpc_to_cepstrum(lpc.coefficients)
    source = (utterance.speaker_id, utterance.language, utterance.task_id)
    return FeatureSequence(ceps, source, int(lpc.clamped.sum()))


def write_features(features, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# lpcc P={features.P}\n")
        for row in features.vectors:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")


def read_features(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# lpcc P="):
            raise ValueError(f"{path}: missing '# lpcc P=<P>' header")
        P = int(header.split("=", 1)[1])
        rows = [[float(v) for v in line.split("\t")] for line in fh if line.strip()]
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), P)
    return FeatureSequence(vectors)
