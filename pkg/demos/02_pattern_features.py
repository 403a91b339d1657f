"""Pattern-match features on a short utterance.

Distances (features 7-10, 17) are 0 when nothing matches inside the
window; the other pattern features are binary.
"""
from disfluency.corpus import Corpus, parse_annotated_line
from disfluency.features import FeatureSchema, build_tag_vocab, build_vocab, extract_features

s = parse_annotated_line(
    "i/PRP [ want/VBP a/DT + {uh} need/VBP a/DT ] flight/NN to/TO boston/NNP and/CC um/UH")
schema = FeatureSchema(enabled=tuple(range(3, 18)))
fv = extract_features(s, schema, build_vocab(Corpus([s])), build_tag_vocab(Corpus([s])))

print("word".ljust(8) + "".join(f"f{f}".rjust(4) for f in fv.ids))
for word, row in zip(s.words, fv.values):
    print(word.ljust(8) + "".join(str(v).rjust(4) for v in row))
