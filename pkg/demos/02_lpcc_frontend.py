# From waveform to LPC-cepstrum vectors, one stage at a time.

import numpy as np

from spkid.corpus import SynthesisSpec, synthesize_utterance
from spkid import frontend as fe

spec = SynthesisSpec(n_speakers=2, seed=4)
utt = synthesize_utterance(spec, 0, "A", "test", 0)
config = fe.AnalysisConfig()
print(f"frames of {config.frame_length} samples, hop {config.hop}, order {config.lpc_order}")

x = fe.preemphasize(utt.samples, config.preemphasis)
frames = fe.frame_signal(x, config.frame_length, config.hop)
voiced, mask = fe.remove_silence(frames, config.silence_floor_db, return_mask=True)
print(f"{len(frames)} frames, {mask.sum()} kept after silence removal")

r = fe.autocorrelate(fe.apply_window(voiced), config.lpc_order)
lpc = fe.levinson_durbin(r, config.lpc_order)
ceps = fe.lpc_to_cepstrum(lpc.coefficients)
print("first cepstral vector:", np.round(ceps[0], 3))

# The one-call pipeline gives the same vectors.
feats = fe.extract_features(utt, config)
print("pipeline agrees:", np.array_equal(feats.vectors, ceps))

# Cepstra ignore the recording level.
louder = fe.extract_features(utt.with_samples(10 * utt.samples), config)
print("max change after +20 dB gain:", np.max(np.abs(louder.vectors - feats.vectors)))

# Orders above frame_length // 10 are allowed but flagged.
try:
    fe.AnalysisConfig(lpc_order=55, strict_order=True)
except ValueError as exc:
    print("strict:", exc)
