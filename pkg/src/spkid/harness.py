"""Closed-set identification experiments over a bilingual corpus.

Grids cover every (train language, test language) pair and a sweep of model
sizes: codebook bits ``No`` for VQ, prediction order ``P`` for covariance
models.  Models are always trained on the train split only; test
utterances are scored one decision per utterance.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, cm, vq
from .corpus import LANGUAGES
from .errors import ProtocolError
from .frontend import AnalysisConfig, extract_features
from .seeding import derive_seed

KINDS = ("vq", "vq_combined", "cm")
MODES = ("all", "identified")


class FeatureBank:
    """Memoised LPCC features for one corpus, keyed by (utterance, order)."""

    def __init__(self, corpus, config=None):
        self.corpus = list(corpus)
        self.config = config or AnalysisConfig()
        self._cache = {}

    def features(self, index, order=None):
        order = order or self.config.lpc_order
        key = (index, order)
        if key not in self._cache:
            self._cache[key] = extract_features(self.corpus[index],
                                                self.config.with_order(order))
        return self._cache[key]

    def indices(self, split, language=None, speaker_id=None):
        return [i for i, u in enumerate(self.corpus)
                if u.split == split
                and (language is None or u.language == language)
                and (speaker_id is None or u.speaker_id == speaker_id)]

    def speakers(self):
        return sorted({u.speaker_id for u in self.corpus})

    def train_vectors(self, speaker_id, language, order=None):
        idx = self.indices("train", language, speaker_id)
        return np.vstack([self.features(i, order).vectors for i in idx])


def as_bank(corpus, config=None):
    if isinstance(corpus, FeatureBank):
        if config is not None and config != corpus.config:
            return FeatureBank(corpus.corpus, config)
        return corpus
    return FeatureBank(corpus, config)


def check_coverage(bank, languages=LANGUAGES):
    """Raise ProtocolError naming the first missing (speaker, language, split)."""
    speakers = bank.speakers()
    if not speakers:
        raise ProtocolError("corpus is empty")
    for s in speakers:
        for lang in languages:
            for split in ("train", "test"):
                if not bank.indices(split, lang, s):
                    raise ProtocolError(
                        f"speaker {s!r} has no {split} utterance in language {lang}")
    train = {id(bank.corpus[i]) for i in bank.indices("train")}
    test = {id(bank.corpus[i]) for i in bank.indices("test")}
    assert not train & test, "train and test utterances overlap"
    return speakers


@dataclass(frozen=True)
class Trial:
    kind: str
    order: int
    size: int
    train_language: str
    test_language: str
    speaker_id: str
    task_id: str
    predicted: str
    score: float
    scores: tuple = field(default=(), repr=False, compare=False)

    @property
    def correct(self):
        return self.predicted == self.speaker_id

    @property
    def cell(self):
        return (self.kind, self.order, self.size, self.train_language, self.test_language)


@dataclass
class EvaluationReport:
    trials: list = field(default_factory=list)
    profiles: dict = field(default_factory=dict)
    regularized: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def extend(self, other):
        self.trials.extend(other.trials)
        self.profiles.update(other.profiles)
        self.regularized.extend(other.regularized)
        return self

    def cells(self):
        """``{cell: (correct, total)}`` in first-seen order."""
        counts = {}
        for t in self.trials:
            c, n = counts.get(t.cell, (0, 0))
            counts[t.cell] = (c + t.correct, n + 1)
        return counts

    def rate(self, kind, order, size, train_language, test_language):
        correct, total = self.cells()[(kind, order, size, train_language, test_language)]
        return 100.0 * correct / total

    def rates(self):
        return {cell: 100.0 * c / n for cell, (c, n) in self.cells().items()}

    def confusion(self, cell):
        return Counter((t.speaker_id, t.predicted) for t in self.trials if t.cell == cell)


def _pair_label(train_language, test_language):
    if train_language == "AB":
        return f"c{test_language}"
    return f"{train_language}-{test_language}"


# ---------------------------------------------------------------------------
# Model training

def codebook_seed(seed, speaker_id, language, No):
    return derive_seed(seed, "vq", speaker_id, language, No)


def train_vq_models(corpus, sizes, config=None, seed=0, refine=False, combined=True):
    """``{tag: {No: [Codebook per speaker]}}`` for tags A, B and (optionally) combined."""
    bank = as_bank(corpus, config)
    speakers = check_coverage(bank)
    models = {}
    for lang in LANGUAGES:
        models[lang] = {}
        train = {s: bank.train_vectors(s, lang) for s in speakers}
        for No in sizes:
            models[lang][No] = [
                vq.train_codebook_random(train[s], No, codebook_seed(seed, s, lang, No),
                                         refine=refine, speaker_id=s, language=lang)
                for s in speakers]
    if combined:
        models["combined"] = {
            No: [vq.combine_codebooks(a, b)
                 for a, b in zip(models["A"][No], models["B"][No])]
            for No in sizes}
    return models


def train_cm_models(corpus, order, config=None):
    """``{language: [CovarianceModel per speaker]}`` at one prediction order."""
    bank = as_bank(corpus, config)
    speakers = check_coverage(bank)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return {lang: [cm.estimate_covariance(bank.train_vectors(s, lang, order), s, lang)
                       for s in speakers]
                for lang in LANGUAGES}


# ---------------------------------------------------------------------------
# Grids

def _score_vq(bank, kind, No, train_tag, books, order):
    trials = []
    for test_lang in LANGUAGES:
        for i in bank.indices("test", test_lang):
            u = bank.corpus[i]
            pred, scores = vq.identify_vq(books, bank.features(i, order))
            trials.append(Trial(kind, order, No, train_tag, test_lang, u.speaker_id,
                                u.task_id, pred, float(scores.min()), tuple(scores)))
    return trials


def run_language_grid(corpus, model_kind, sizes, config=None, seed=0, refine=False):
    """Identification rates for all four train/test language pairs.

    ``sizes`` are codebook bits for ``vq`` (at ``config.lpc_order``) and
    prediction orders for ``cm``.
    """
    bank = as_bank(corpus, config)
    check_coverage(bank)
    report = EvaluationReport(config={"kind": model_kind, "sizes": list(sizes), "seed": seed,
                                      "refine": refine, **bank.config.as_dict()})
    if model_kind == "vq":
        order = bank.config.lpc_order
        models = train_vq_models(bank, sizes, seed=seed, refine=refine, combined=False)
        for No in sizes:
            for train_lang in LANGUAGES:
                report.trials.extend(
                    _score_vq(bank, "vq", No, train_lang, models[train_lang][No], order))
    elif model_kind == "cm":
        for order in sizes:
            models = train_cm_models(bank, order)
            for train_lang in LANGUAGES:
                report.regularized.extend(
                    f"{m.speaker_id}:{m.language}:P={order}"
                    for m in models[train_lang] if m.regularized)
                for test_lang in LANGUAGES:
                    for i in bank.indices("test", test_lang):
                        u = bank.corpus[i]
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", RuntimeWarning)
                            test_model = cm.estimate_covariance(bank.features(i, order))
                        if test_model.regularized:
                            report.regularized.append(f"{u.speaker_id}:{u.language}:"
                                                      f"{u.task_id}:P={order}")
                        pred, scores = cm.identify_cm(models[train_lang], test_model)
                        report.trials.append(Trial(
                            "cm", order, order, train_lang, test_lang, u.speaker_id,
                            u.task_id, pred, float(scores.min()), tuple(scores)))
    else:
        raise ValueError(f"model_kind must be 'vq' or 'cm', got {model_kind!r}")
    return report


def run_combined_grid(corpus, sizes, config=None, seed=0, refine=False):
    """Combined (A+B) codebooks, tested separately on each language."""
    bank = as_bank(corpus, config)
    models = train_vq_models(bank, sizes, seed=seed, refine=refine, combined=True)
    report = EvaluationReport(config={"kind": "vq_combined", "sizes": list(sizes),
                                      "seed": seed, "refine": refine,
                                      **bank.config.as_dict()})
    order = bank.config.lpc_order
    for No in sizes:
        report.trials.extend(
            _score_vq(bank, "vq_combined", No, "AB", models["combined"][No], order))
    return report


def accumulate_distortions(corpus, models, mode, config=None):
    """Summed quantisation distortion per curve and codebook size.

    ``models`` is ``{tag: {No: [Codebook]}}`` as returned by
    :func:`train_vq_models`.  With ``mode="all"`` every (test utterance,
    codebook) distortion is added; with ``mode="identified"`` only the
    winning codebook's distortion for each test utterance.  Curves are
    labelled ``A-B`` (train A, test B) or ``cA`` (combined, test A).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    bank = as_bank(corpus, config)
    profile = {}
    for tag, by_size in models.items():
        train_tag = "AB" if tag == "combined" else tag
        for test_lang in LANGUAGES:
            curve = profile.setdefault(_pair_label(train_tag, test_lang), {})
            for No, books in by_size.items():
                total = 0.0
                for i in bank.indices("test", test_lang):
                    feats = bank.features(i, books[0].P)
                    d = vq.model_distortions(feats, books)
                    total += d.sum() if mode == "all" else d.min()
                curve[No] = float(total)
    return profile


def distortion_profiles(corpus, sizes, config=None, seed=0, refine=False):
    bank = as_bank(corpus, config)
    models = train_vq_models(bank, sizes, seed=seed, refine=refine, combined=True)
    return {mode: accumulate_distortions(bank, models, mode) for mode in MODES}


def memory_parity_pairs(P_vq, max_bits=7, max_order=200):
    """CM order whose (P^2+P)/2 parameters best match 2^Nq * P_vq, per Nq.

    Ties resolve to the smaller order.
    """
    if P_vq < 1:
        raise ValueError("P_vq must be >= 1")
    orders = np.arange(1, max_order + 1)
    cm_params = (orders * orders + orders) // 2
    pairs = []
    for Nq in range(max_bits + 1):
        gap = np.abs(cm_params - vq.count_vq_parameters(Nq, P_vq))
        pairs.append((Nq, int(orders[np.argmin(gap)])))
    return pairs


# ---------------------------------------------------------------------------
# Output

def _fmt_rate(x):
    return f"{x:.1f}"


def _write(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")


def table_rows(report):
    """Header and rows of the wide identification table (one row per train/test pair)."""
    cells = report.cells()
    kinds = {c[0] for c in cells}
    if len(kinds) > 1:
        raise ValueError(f"one model kind per table, got {sorted(kinds)}")
    rates = report.rates()
    if not kinds:
        return ["P", "train/test"], []
    kind = kinds.pop()
    sizes = sorted({c[2] for c in cells})
    if kind == "cm":
        pairs = list(dict.fromkeys((c[3], c[4]) for c in cells))
        header = ["train/test"] + [f"P={s}" for s in sizes]
        rows = [[_pair_label(*p)] + [_fmt_rate(rates[("cm", s, s, *p)])
                                     if ("cm", s, s, *p) in rates else "" for s in sizes]
                for p in pairs]
    else:
        keys = list(dict.fromkeys((c[1], c[3], c[4]) for c in cells))
        header = ["P", "train/test"] + [f"No={s}" for s in sizes]
        rows = [[o, _pair_label(tr, te)] +
                [_fmt_rate(rates[(kind, o, s, tr, te)])
                 if (kind, o, s, tr, te) in rates else "" for s in sizes]
                for o, tr, te in keys]
    return header, rows


def _centroid_count(kind, size):
    if kind == "cm":
        return ""
    return 2 ** size * (2 if kind == "vq_combined" else 1)


def emit_report(report, path):
    """Write ``<path>.tsv`` (wide table), ``<path>_cells.tsv`` and ``<path>_trials.tsv``.

    Returns the list of files written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [path.with_name(path.name + ".tsv"),
           path.with_name(path.name + "_cells.tsv"),
           path.with_name(path.name + "_trials.tsv")]
    header, rows = table_rows(report)
    _write(out[0], header, rows)

    # "size" is No of each component book; "centroids" counts what the
    # scored model actually holds (twice 2**No for a combined book)
    cell_rows = [[k, o, s, _centroid_count(k, s), tr, te, c, n, _fmt_rate(100.0 * c / n)]
                 for (k, o, s, tr, te), (c, n) in report.cells().items()]
    _write(out[1], ["kind", "P", "size", "centroids", "train", "test", "correct", "total",
                    "rate"], cell_rows)

    trial_rows = [[t.kind, t.order, t.size, t.train_language, t.test_language,
                   t.speaker_id, t.task_id, t.predicted, int(t.correct), repr(t.score)]
                  for t in report.trials]
    _write(out[2], ["kind", "P", "size", "train", "test", "speaker", "task",
                    "predicted", "correct", "score"], trial_rows)
    return out


def emit_profiles(profiles, path):
    """Long-format distortion curves: mode, curve, No, total distortion."""
    rows = [[mode, curve, No, repr(v)]
            for mode, curves in profiles.items()
            for curve, points in curves.items()
            for No, v in sorted(points.items())]
    _write(path, ["mode", "curve", "No", "distortion"], rows)
    return Path(path)


def emit_parity(pairs, path, P_vq=12):
    rows = [[Nq, vq.count_vq_parameters(Nq, P_vq), P, cm.count_cm_parameters(P)]
            for Nq, P in pairs]
    _write(path, ["Nq", "vq_parameters", "P", "cm_parameters"], rows)
    return Path(path)


def write_run_manifest(path, **config):
    """JSON record of a run's resolved configuration; no timestamps, so reruns match."""
    record = {"package": "spkid", "version": __version__,
              "numpy": np.__version__, **config}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return Path(path)

