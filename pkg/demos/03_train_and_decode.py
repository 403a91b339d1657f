"""Train a small BLSTM tagger on synthetic data and compare decoders.

Argmax decoding can produce label sequences the automaton forbids, such
as ``O IE``. The DP and ILP decoders search only legal sequences and
agree on the best one.
"""
import time

from disfluency.corpus import derive_labels
from disfluency.decode import count_illegal, decode
from disfluency.evaluation import evaluate
from disfluency.features import FeatureSchema, build_tag_vocab, build_vocab
from disfluency.model import ModelConfig, init_model, posteriors
from disfluency.synthetic import generate_synthetic
from disfluency.training import TrainConfig, history_log, train

train_c = generate_synthetic(n_sentences=600, seed=1)
dev = generate_synthetic(n_sentences=100, seed=2, split="dev")
test = generate_synthetic(n_sentences=200, seed=3, split="test")

cfg = ModelConfig(scheme="eight", hidden_dim=24, word_dim=24, seed=0)
model = init_model(cfg, FeatureSchema(), build_vocab(train_c), build_tag_vocab(train_c))
start = time.perf_counter()
# small batches: Adadelta needs many updates and this corpus is small
ck = train(model, train_c, dev, TrainConfig(batch_size=10, max_epochs=12, patience=3))
print(f"trained {len(ck.history)} epochs in {time.perf_counter() - start:.1f}s")
print("epoch\tloss\tdev_f")
print(history_log(ck.history), end="")

scheme = ck.model.scheme
probs = posteriors(ck.model, test.sentences)
for method in ("argmax", "dp", "ilp"):
    pred = [decode(p, scheme, method) for p in probs]
    report = evaluate(pred, test, scheme)
    print(f"\n{method}: {count_illegal(pred, scheme.legality)} illegal sequences")
    print(report.table())

dp = [decode(p, scheme, "dp") for p in probs]
ilp = [decode(p, scheme, "ilp") for p in probs]
print("\ndp == ilp on every sentence:", dp == ilp)
gold = [derive_labels(s, scheme) for s in test]
print("example:", " ".join(test.sentences[0].words))
print("  gold:", " ".join(gold[0]))
print("  pred:", " ".join(dp[0]))
