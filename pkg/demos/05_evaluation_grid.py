# The full train/test language grid plus the VQ/CM memory-parity ladder.
#
# This runs the default 10-speaker corpus and takes well under a minute.

from spkid.corpus import SynthesisSpec, generate_synthetic_corpus
from spkid.harness import (FeatureBank, distortion_profiles, memory_parity_pairs,
                           run_combined_grid, run_language_grid, table_rows)
from spkid.vq import count_vq_parameters
from spkid.cm import count_cm_parameters

bank = FeatureBank(generate_synthetic_corpus(SynthesisSpec()))


def show(report):
    header, rows = table_rows(report)
    for row in [header] + rows:
        print("\t".join(str(v) for v in row))
    print()


show(run_language_grid(bank, "vq", range(8), seed=0))
show(run_combined_grid(bank, range(8), seed=0))

# Codebook growth against accumulated distortion, over all frames or only
# frames from correctly identified utterances.
profiles = distortion_profiles(bank, range(8), seed=0)
for curve, points in profiles["all"].items():
    print(curve, [round(points[No], 3) for No in range(8)])
print()

# Which CM order costs about as much memory as each VQ codebook size?
pairs = memory_parity_pairs(12)
for Nq, P in pairs:
    print(f"No={Nq}: VQ {count_vq_parameters(Nq, 12):5d} numbers ~ CM P={P} "
          f"({count_cm_parameters(P)} numbers)")
show(run_language_grid(bank, "cm", [P for _, P in pairs]))
