import struct
import wave

import numpy as np
import pytest

from spkid.corpus import (SynthesisSpec, Utterance, export_corpus, generate_synthetic_corpus,
                          load_corpus, load_manifest, read_wav, speaker_ids,
                          synthesize_utterance, write_wav)
from spkid.errors import ManifestError, UnsupportedFormatError


def _wav(path, data, width=2, channels=1, rate=8000):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(data)


class TestManifest:
    def test_empty(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("")
        assert len(load_manifest(p)) == 0

    def test_single_line(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("# comment\na.wav\tspk1\tA\ttrain\ttext\n")
        m = load_manifest(p)
        assert len(m) == 1
        e = m.entries[0]
        assert (e.path, e.speaker_id, e.language, e.split, e.task_id) == \
            ("a.wav", "spk1", "A", "train", "text")
        assert m.resolve(e) == tmp_path / "a.wav"

    def test_four_fields_names_line(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a.wav\tspk1\tA\ttrain\ttext\nb.wav\tspk1\tA\ttest\n")
        with pytest.raises(ManifestError, match=":2:"):
            load_manifest(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_manifest(tmp_path / "nope.tsv")

    def test_duplicate_paths_allowed(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a.wav\ts\tA\ttrain\tt\na.wav\ts\tB\ttrain\tt\n")
        assert len(load_manifest(p)) == 2


class TestWav:
    def test_scaling(self, tmp_path):
        _wav(tmp_path / "x.wav", struct.pack("<h", 16384))
        samples, rate = read_wav(tmp_path / "x.wav")
        assert rate == 8000
        assert samples.tolist() == [0.5]

    def test_empty_data_chunk(self, tmp_path):
        _wav(tmp_path / "x.wav", b"")
        samples, _ = read_wav(tmp_path / "x.wav")
        assert len(samples) == 0

    def test_eight_bit_rejected(self, tmp_path):
        _wav(tmp_path / "x.wav", bytes([128, 130]), width=1)
        with pytest.raises(UnsupportedFormatError):
            read_wav(tmp_path / "x.wav")

    def test_stereo_rejected(self, tmp_path):
        _wav(tmp_path / "x.wav", b"\0\0\0\0", channels=2)
        with pytest.raises(UnsupportedFormatError):
            read_wav(tmp_path / "x.wav")

    def test_non_pcm_rejected(self, tmp_path):
        path = tmp_path / "x.wav"
        _wav(path, struct.pack("<2h", 1, 2))
        raw = bytearray(path.read_bytes())
        raw[20:22] = struct.pack("<H", 3)  # IEEE float format tag
        path.write_bytes(bytes(raw))
        with pytest.raises(UnsupportedFormatError):
            read_wav(path)

    def test_truncated_data(self, tmp_path):
        path = tmp_path / "x.wav"
        _wav(path, struct.pack("<4h", 1, 2, 3, 4))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(OSError):
            read_wav(path)

    def test_round_trip(self, tmp_path):
        x = np.array([0.0, 0.25, -0.5, 0.999, -1.0])
        write_wav(tmp_path / "x.wav", x, 8000)
        y, _ = read_wav(tmp_path / "x.wav")
        np.testing.assert_allclose(y, x, atol=1 / 32768)


class TestSynthetic:
    def test_count(self):
        corpus = generate_synthetic_corpus(
            SynthesisSpec(n_speakers=2, train_duration_s=1.0, test_duration_s=0.5))
        assert len(corpus) == 2 * (1 + 5) * 2

    def test_bit_identical(self, small_spec, small_corpus):
        again = generate_synthetic_corpus(small_spec)
        assert all(np.array_equal(a.samples, b.samples) for a, b in zip(small_corpus, again))

    def test_seed_changes_output(self, small_spec, small_corpus):
        other = generate_synthetic_corpus(
            SynthesisSpec(**{**small_spec.__dict__, "seed": small_spec.seed + 1}))
        assert any(not np.array_equal(a.samples, b.samples)
                   for a, b in zip(small_corpus, other))

    def test_amplitude_and_padding(self, small_corpus):
        for u in small_corpus:
            assert np.max(np.abs(u.samples)) == pytest.approx(0.9)
            pad = int(0.2 * u.sample_rate)
            assert np.max(np.abs(u.samples[:pad])) < 1e-2

    def test_durations(self, small_spec, small_corpus):
        train = [u for u in small_corpus if u.split == "train"]
        assert all(u.duration == pytest.approx(small_spec.train_duration_s + 0.4) for u in train)

    def test_labels(self, small_spec, small_corpus):
        assert {u.speaker_id for u in small_corpus} == set(speaker_ids(3))
        tasks = {u.task_id for u in small_corpus if u.split == "test"}
        assert tasks == {"s1", "s2"}

    def test_train_test_streams_disjoint(self, small_spec):
        # same speaker, same language: no shared excitation noise
        train = synthesize_utterance(small_spec, 0, "A", "train")
        test = synthesize_utterance(small_spec, 0, "A", "test", 0)
        n = min(len(train.samples), len(test.samples))
        c = np.corrcoef(train.samples[:n], test.samples[:n])[0, 1]
        assert abs(c) < 0.1

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SynthesisSpec(n_speakers=0)
        with pytest.raises(ValueError):
            SynthesisSpec(n_states_lang_B=0)
        with pytest.raises(ValueError):
            SynthesisSpec(test_duration_s=0)

    def test_export_and_reload(self, tmp_path, small_corpus):
        manifest = export_corpus(small_corpus[:4], tmp_path)
        back = load_corpus(manifest)
        assert [u.task_id for u in back] == [u.task_id for u in small_corpus[:4]]
        for a, b in zip(small_corpus, back):
            np.testing.assert_allclose(a.samples, b.samples, atol=1 / 32768)


def test_utterance_validation():
    with pytest.raises(ValueError):
        Utterance([0.0], 0)
    with pytest.raises(ValueError):
        Utterance([0.0], 8000, language="C")
