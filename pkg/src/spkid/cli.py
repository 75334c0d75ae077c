"""Batch command line: ``spkid {synth,train,identify,evaluate,parity}``.

Exit status is 0 on success, 1 for usage errors and 2 for data or
contract errors (bad WAV, missing utterances, singular models...).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

from . import cm, harness, vq
from .corpus import (LANGUAGES, SynthesisSpec, Utterance, export_corpus,
                     generate_synthetic_corpus, load_corpus, load_manifest, read_wav)
from .errors import ProtocolError, SpkidError
from .frontend import AnalysisConfig, OrderWarning, extract_features

PARITY_ORDERS = [4, 6, 9, 13, 19, 27, 39, 55]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def int_list(text):
    """``"5"`` -> [5]; ``"0..7"`` -> [0, ..., 7]; ``"4,6,9"`` -> [4, 6, 9]."""
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _flatten(groups, default):
    if not groups:
        return list(default)
    return list(dict.fromkeys(v for g in groups for v in g))


def _add_analysis_flags(p):
    p.add_argument("--frame", type=int, default=240, help="frame length in samples")
    p.add_argument("--overlap", default="2/3", help="frame overlap fraction, e.g. 2/3")
    p.add_argument("--preemph", type=float, default=0.95)
    p.add_argument("--silence-db", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)


def _analysis_config(args, order=12):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderWarning)
            return AnalysisConfig(args.frame, args.overlap, args.preemph, order, args.silence_db)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from exc


def build_parser():
    parser = _Parser(prog="spkid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate the synthetic bilingual corpus")
    p.add_argument("--speakers", type=int, default=10)
    p.add_argument("--states-a", type=int, default=8)
    p.add_argument("--states-b", type=int, default=5)
    p.add_argument("--train-seconds", type=float, default=60.0)
    p.add_argument("--test-utterances", type=int, default=5)
    p.add_argument("--test-seconds", type=float, default=4.0)
    p.add_argument("--rate", type=int, default=8000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)

    for name, help_ in (("train", "train one model per speaker and language"),
                        ("evaluate", "run the train/test language grid")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--manifest", required=True, type=Path)
        p.add_argument("--kind", choices=["vq", "cm", "combined"], default="vq")
        p.add_argument("--bits", type=int_list, action="append",
                       help="codebook bits (repeatable, or a range a..b)")
        p.add_argument("--order", type=int_list, action="append",
                       help="prediction order P (repeatable, or a range a..b)")
        p.add_argument("--refine", action="store_true", help="Lloyd refinement of codebooks")
        p.add_argument("--out", required=True, type=Path)
        _add_analysis_flags(p)

    p = sub.add_parser("identify", help="rank enrolled speakers for one WAV file")
    p.add_argument("--models", required=True, type=Path, help="directory of .model files")
    p.add_argument("wav", type=Path)
    _add_analysis_flags(p)

    p = sub.add_parser("parity", help="CM orders matching VQ memory")
    p.add_argument("--pvq", type=int, default=12)
    p.add_argument("--out", type=Path)
    return parser


# ---------------------------------------------------------------------------

def cmd_synth(args):
    try:
        spec = SynthesisSpec(args.speakers, args.states_a, args.states_b, args.train_seconds,
                             args.test_utterances, args.test_seconds, args.rate, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    corpus = generate_synthetic_corpus(spec)
    manifest = export_corpus(corpus, args.out)
    harness.write_run_manifest(args.out / "run_manifest.json", command="synth",
                               synthesis=asdict(spec))
    print(f"wrote {len(corpus)} utterances and {manifest}")


def _load_train_corpus(manifest_path):
    manifest = load_manifest(manifest_path)
    manifest.entries = [e for e in manifest.entries if e.split == "train"]
    corpus = load_corpus(manifest)
    speakers = sorted({u.speaker_id for u in corpus})
    if not speakers:
        raise ProtocolError(f"{manifest_path}: no train utterances")
    for s in speakers:
        for lang in LANGUAGES:
            if not any(u.speaker_id == s and u.language == lang for u in corpus):
                raise ProtocolError(f"missing train utterance for speaker {s!r}, language {lang}")
    return corpus, speakers


def _sizes(args):
    """(orders, bits) resolved per kind."""
    if args.kind == "cm":
        if args.bits:
            raise UsageError("--bits does not apply to --kind cm")
        return _flatten(args.order, PARITY_ORDERS), []
    return _flatten(args.order, [12]), _flatten(args.bits, range(8))


def cmd_train(args):
    orders, bits = _sizes(args)
    corpus, speakers = _load_train_corpus(args.manifest)
    args.out.mkdir(parents=True, exist_ok=True)
    written = []
    for order in orders:
        bank = harness.FeatureBank(corpus, _analysis_config(args, order))
        if args.kind == "cm":
            for s in speakers:
                for lang in LANGUAGES:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        model = cm.estimate_covariance(bank.train_vectors(s, lang), s, lang)
                    path = args.out / f"{s}_{lang}_cm{order}.model"
                    cm.save_model(model, path)
                    written.append(path)
            continue
        for No in bits:
            books = {}
            for s in speakers:
                for lang in LANGUAGES:
                    try:
                        books[s, lang] = vq.train_codebook_random(
                            bank.train_vectors(s, lang), No,
                            harness.codebook_seed(args.seed, s, lang, No),
                            refine=args.refine, speaker_id=s, language=lang)
                    except SpkidError as exc:
                        raise type(exc)(f"speaker {s!r}, language {lang}: {exc}") from exc
            for s in speakers:
                if args.kind == "combined":
                    items = [("AB", vq.combine_codebooks(books[s, "A"], books[s, "B"]))]
                else:
                    items = [(lang, books[s, lang]) for lang in LANGUAGES]
                for tag, book in items:
                    suffix = f"_P{order}" if len(orders) > 1 else ""
                    path = args.out / f"{s}_{tag}_{args.kind}{No}{suffix}.model"
                    vq.save_codebook(book, path)
                    written.append(path)
    harness.write_run_manifest(
        args.out / "run_manifest.json", command="train", manifest=str(args.manifest),
        kind=args.kind, orders=orders, bits=bits, seed=args.seed, refine=args.refine,
        analysis=_analysis_config(args, orders[0]).as_dict(),
        files=[p.name for p in written])
    print(f"wrote {len(written)} model files to {args.out}")


def _load_models(model_dir):
    paths = sorted(Path(model_dir).glob("*.model"))
    if not paths:
        raise ProtocolError(f"no .model files in {model_dir}")
    models = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            magic = fh.readline().split()[:1]
        if magic == ["vqcb"]:
            models.append(vq.load_codebook(p))
        elif magic == ["cmmodel"]:
            models.append(cm.load_model(p))
        else:
            raise ProtocolError(f"{p}: unrecognised model file")
    kinds = {type(m) for m in models}
    sizes = {m.P for m in models}
    if len(kinds) > 1 or len(sizes) > 1:
        raise ProtocolError(f"{model_dir} mixes model kinds or dimensions")
    return models


def cmd_identify(args):
    models = _load_models(args.models)
    samples, rate = read_wav(args.wav)
    utt = Utterance(samples, rate, split="test", task_id=args.wav.stem)
    feats = extract_features(utt, _analysis_config(args, models[0].P))
    if isinstance(models[0], vq.Codebook):
        _, scores = vq.identify_vq(models, feats)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, scores = cm.identify_cm(models, cm.estimate_covariance(feats))
    best = {}
    for m, s in zip(models, scores):
        best[m.speaker_id] = min(best.get(m.speaker_id, float("inf")), float(s))
    for rank, (spk, score) in enumerate(sorted(best.items(), key=lambda kv: (kv[1], kv[0])), 1):
        print(f"{rank}\t{spk}\t{score!r}")


def cmd_evaluate(args):
    orders, bits = _sizes(args)
    corpus = load_corpus(args.manifest)
    args.out.mkdir(parents=True, exist_ok=True)
    report = harness.EvaluationReport()
    profiles = {}
    if args.kind == "cm":
        report = harness.run_language_grid(corpus, "cm", orders, _analysis_config(args),
                                           seed=args.seed)
    else:
        for order in orders:
            bank = harness.FeatureBank(corpus, _analysis_config(args, order))
            if args.kind == "vq":
                part = harness.run_language_grid(bank, "vq", bits, seed=args.seed,
                                                 refine=args.refine)
            else:
                part = harness.run_combined_grid(bank, bits, seed=args.seed,
                                                 refine=args.refine)
            report.extend(part)
            for mode, curves in harness.distortion_profiles(
                    bank, bits, seed=args.seed, refine=args.refine).items():
                for curve, points in curves.items():
                    profiles.setdefault(mode, {})[f"P{order}:{curve}"] = points
    stem = args.out / f"{args.kind}_report"
    files = harness.emit_report(report, stem)
    if profiles:
        files.append(harness.emit_profiles(profiles, args.out / f"{args.kind}_distortion.tsv"))
    harness.write_run_manifest(
        args.out / "run_manifest.json", command="evaluate", manifest=str(args.manifest),
        kind=args.kind, orders=orders, bits=bits, seed=args.seed, refine=args.refine,
        analysis=_analysis_config(args).as_dict(), regularized=report.regularized,
        files=[p.name for p in files])
    print(files[0].read_text(encoding="utf-8"), end="")


def cmd_parity(args):
    if args.pvq < 1:
        raise UsageError("--pvq must be >= 1")
    pairs = harness.memory_parity_pairs(args.pvq)
    print("Nq\tvq_parameters\tP\tcm_parameters")
    for Nq, P in pairs:
        print(f"{Nq}\t{vq.count_vq_parameters(Nq, args.pvq)}\t{P}\t{cm.count_cm_parameters(P)}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        harness.emit_parity(pairs, args.out / "parity.tsv", args.pvq)
        harness.write_run_manifest(args.out / "run_manifest.json", command="parity",
                                   pvq=args.pvq)


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "identify": cmd_identify,
            "evaluate": cmd_evaluate, "parity": cmd_parity}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"spkid {args.command}: {exc}", file=sys.stderr)
        return 1
    except (SpkidError, OSError) as exc:
        print(f"spkid {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
