# Random-pick VQ codebooks and the bilingual combined codebook.

from spkid.corpus import SynthesisSpec, generate_synthetic_corpus
from spkid.harness import FeatureBank
from spkid.vq import combine_codebooks, identify_vq, quantize_distortion, train_codebook_random

bank = FeatureBank(generate_synthetic_corpus(
    SynthesisSpec(n_speakers=4, train_duration_s=20.0, n_test_utterances=2, seed=2)))
No = 5

books = {(s, lang): train_codebook_random(bank.train_vectors(s, lang), No, seed=7,
                                          speaker_id=s, language=lang)
         for s in bank.speakers() for lang in "AB"}
combined = [combine_codebooks(books[s, "A"], books[s, "B"]) for s in bank.speakers()]

# Test in language B against A-trained books, then against combined books.
for i in bank.indices("test", "B"):
    feats = bank.features(i)
    truth = feats.source[0]
    guess_a, _ = identify_vq([books[s, "A"] for s in bank.speakers()], feats)
    guess_ab, _ = identify_vq(combined, feats)
    print(f"{truth} B-test: A-book says {guess_a}, combined says {guess_ab}")

# A combined book never quantizes worse than either of its halves.
feats = bank.features(bank.indices("test", "A")[0])
s = feats.source[0]
print("distortion A / B / combined:",
      [round(quantize_distortion(feats, b), 4)
       for b in (books[s, "A"], books[s, "B"], combine_codebooks(books[s, "A"], books[s, "B"]))])
