"""Utterances, TSV manifests, 16-bit WAV I/O and the synthetic bilingual corpus.

The synthetic corpus stands in for a real bilingual recording campaign:
every speaker owns a bank of formant-like resonator states, language ``A``
uses ``n_states_lang_A`` of them and language ``B`` a slightly shifted
subset of ``n_states_lang_B``.  Segments of white noise are coloured by a
state filter, concatenated, and padded with near-silence.
"""

from __future__ import annotations

import os
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from . import seeding
from .errors import ManifestError, UnsupportedFormatError

LANGUAGES = ("A", "B")
SPLITS = ("train", "test")


@dataclass(frozen=True, eq=False)
class Utterance:
    samples: np.ndarray
    sample_rate: int
    speaker_id: str = ""
    language: str = "A"
    split: str = "train"
    task_id: str = ""

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}, got {self.language!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples):
        return Utterance(samples, self.sample_rate, self.speaker_id,
                         self.language, self.split, self.task_id)


# ---------------------------------------------------------------------------
# Manifest

@dataclass(frozen=True)
class ManifestEntry:
    path: str
    speaker_id: str
    language: str
    split: str
    task_id: str


@dataclass
class Manifest:
    entries: list = field(default_factory=list)
    root: Path | None = None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def resolve(self, entry):
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p


def load_manifest(path):
    """Parse a ``path<TAB>speaker<TAB>language<TAB>split<TAB>task`` file.

    Blank lines and ``#`` comments are skipped.  Relative audio paths are
    resolved against the manifest's directory.
    """
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ManifestError(
                    f"{path}:{lineno}: expected 5 tab-separated fields, got {len(fields)}")
            entry = ManifestEntry(*fields)
            if entry.language not in LANGUAGES:
                raise ManifestError(f"{path}:{lineno}: unknown language {entry.language!r}")
            if entry.split not in SPLITS:
                raise ManifestError(f"{path}:{lineno}: unknown split {entry.split!r}")
            entries.append(entry)
    return Manifest(entries, root=path.parent)


def write_manifest(manifest_or_entries, path):
    entries = list(manifest_or_entries)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# path\tspeaker_id\tlanguage\tsplit\ttask_id\n")
        for e in entries:
            fh.write(f"{e.path}\t{e.speaker_id}\t{e.language}\t{e.split}\t{e.task_id}\n")


def load_corpus(manifest):
    """Read every WAV listed in ``manifest`` (a Manifest or a path)."""
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    corpus = []
    for e in manifest:
        samples, sr = read_wav(manifest.resolve(e))
        corpus.append(Utterance(samples, sr, e.speaker_id, e.language, e.split, e.task_id))
    return corpus


# ---------------------------------------------------------------------------
# WAV

def read_wav(path):
    """Read a mono 16-bit PCM WAV file.

    Returns ``(samples, sample_rate)`` with samples scaled by 1/32768.
    """
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise OSError(f"{path}: truncated WAV header") from exc
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise UnsupportedFormatError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    if len(raw) != 2 * n:
        raise OSError(f"{path}: data chunk truncated ({len(raw) // 2} of {n} samples)")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def write_wav(path, samples, sample_rate):
    x = np.asarray(samples, dtype=np.float64)
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# Synthetic corpus

@dataclass(frozen=True)
class SynthesisSpec:
    n_speakers: int = 10
    n_states_lang_A: int = 8
    n_states_lang_B: int = 5
    train_duration_s: float = 60.0
    n_test_utterances: int = 5
    test_duration_s: float = 4.0
    sample_rate: int = 8000
    seed: int = 0

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ValueError("n_speakers must be >= 1")
        if self.n_states_lang_A < 1 or self.n_states_lang_B < 1:
            raise ValueError("state counts must be >= 1")
        if self.train_duration_s <= 0 or self.test_duration_s <= 0:
            raise ValueError("durations must be positive")
        if self.n_test_utterances < 1:
            raise ValueError("n_test_utterances must be >= 1")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


SEGMENT_MS = (100, 300)
PAD_MS = 200
PAD_LEVEL = 1e-4   # relative to unit-RMS speech: about -80 dB
PEAK = 0.9
LANG_B_SHIFT = 0.04


def speaker_ids(n_speakers):
    width = max(2, len(str(n_speakers - 1)))
    return [f"spk{i:0{width}d}" for i in range(n_speakers)]


def _resonator(freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    return np.array([1.0, -2.0 * r * np.cos(2.0 * np.pi * freq / fs), r * r])


def speaker_filters(spec, speaker_index):
    """All-pole denominators for one speaker, keyed by language.

    Each state is a cascade of three formant resonators plus two
    speaker-wide sections (a high resonance and a real glottal-tilt pole)
    shared by every state of that speaker.  Language ``B`` reuses the first
    ``n_states_lang_B`` states with each formant nudged by up to 4 %.
    """
    g = seeding.rng(spec.seed, "speaker", speaker_index)
    fs = spec.sample_rate
    nyq = fs / 2.0
    n_bank = max(spec.n_states_lang_A, spec.n_states_lang_B)

    f4 = g.uniform(0.80, 0.92) * nyq
    shared = np.convolve(_resonator(f4, g.uniform(150, 300), fs),
                         [1.0, -g.uniform(0.5, 0.9)])

    formants = []
    for _ in range(n_bank):
        f1 = g.uniform(0.06, 0.22) * nyq
        f2 = g.uniform(f1 + 0.08 * nyq, 0.62 * nyq)
        f3 = g.uniform(max(f2 + 0.08 * nyq, 0.55 * nyq), 0.76 * nyq)
        bws = g.uniform(50, 150, size=3)
        formants.append((np.array([f1, f2, f3]), bws))
    shifts = g.uniform(-LANG_B_SHIFT, LANG_B_SHIFT, size=(n_bank, 3))

    def build(freqs, bws):
        den = shared
        for f, b in zip(freqs, bws):
            den = np.convolve(den, _resonator(f, b, fs))
        return den

    bank_a = [build(f, b) for f, b in formants[:spec.n_states_lang_A]]
    bank_b = [build(f * (1.0 + s), b)
              for (f, b), s in zip(formants[:spec.n_states_lang_B], shifts)]
    return {"A": bank_a, "B": bank_b}


def synthesize_utterance(spec, speaker_index, language, split, index=0, filters=None):
    """Render one utterance.  Pure in its arguments."""
    if filters is None:
        filters = speaker_filters(spec, speaker_index)
    bank = filters[language]
    fs = spec.sample_rate
    duration = spec.train_duration_s if split == "train" else spec.test_duration_s
    g = seeding.rng(spec.seed, "utterance", speaker_index, language, split, index)

    n_voiced = int(round(duration * fs))
    lo, hi = (int(ms * fs / 1000) for ms in SEGMENT_MS)
    pieces = []
    total = 0
    while total < n_voiced:
        n = min(int(g.integers(lo, hi + 1)), n_voiced - total)
        den = bank[int(g.integers(len(bank)))]
        # warm-up samples let the filter reach steady state before the segment
        warm = 64
        y = lfilter([1.0], den, g.standard_normal(n + warm))[warm:]
        pieces.append(y / (np.std(y) + 1e-300))
        total += n
    pad = int(PAD_MS * fs / 1000)
    lead = PAD_LEVEL * g.standard_normal(pad)
    tail = PAD_LEVEL * g.standard_normal(pad)
    x = np.concatenate([lead, *pieces, tail])
    x *= PEAK / np.max(np.abs(x))

    task = "text" if split == "train" else f"s{index + 1}"
    return Utterance(x, fs, speaker_ids(spec.n_speakers)[speaker_index],
                     language, split, task)


def generate_synthetic_corpus(spec):
    """Train + test utterances for every speaker in both languages.

    Order: speaker, then language, then the train utterance followed by the
    ``n_test_utterances`` test sentences.
    """
    corpus = []
    for s in range(spec.n_speakers):
        filters = speaker_filters(spec, s)
        for lang in LANGUAGES:
            corpus.append(synthesize_utterance(spec, s, lang, "train", 0, filters))
            for i in range(spec.n_test_utterances):
                corpus.append(synthesize_utterance(spec, s, lang, "test", i, filters))
    return corpus


def export_corpus(corpus, out_dir, manifest_name="manifest.tsv"):
    """Write one WAV per utterance plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for u in corpus:
        name = f"{u.speaker_id}_{u.language}_{u.split}_{u.task_id}.wav"
        write_wav(out_dir / name, u.samples, u.sample_rate)
        entries.append(ManifestEntry(name, u.speaker_id, u.language, u.split, u.task_id))
    manifest_path = out_dir / manifest_name
    write_manifest(entries, manifest_path)
    return manifest_path
