# Covariance models compared with the arithmetic-harmonic sphericity.

import numpy as np

from spkid.cm import count_cm_parameters, estimate_covariance, identify_cm, sphericity
from spkid.corpus import SynthesisSpec, generate_synthetic_corpus
from spkid.harness import FeatureBank

# The measure on toy matrices: zero for proportional matrices, positive otherwise.
A = np.diag([1.0, 2.0, 3.0])
print("mu(A, 5A) =", sphericity(A, 5 * A))
print("mu(A, I)  =", sphericity(A, np.eye(3)), "=", sphericity(np.eye(3), A))

bank = FeatureBank(generate_synthetic_corpus(
    SynthesisSpec(n_speakers=4, train_duration_s=20.0, n_test_utterances=2, seed=3)))
models = [estimate_covariance(bank.train_vectors(s, "A"), s, "A") for s in bank.speakers()]
print(f"each model stores {count_cm_parameters(models[0].P)} numbers")

for i in bank.indices("test"):
    feats = bank.features(i)
    guess, scores = identify_cm(models, estimate_covariance(feats).C)
    print(f"{feats.source[0]} {feats.source[1]}-test -> {guess}  "
          f"(scores {np.round(scores, 3)})")
