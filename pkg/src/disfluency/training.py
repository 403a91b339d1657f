"""Training loop for the tagger and backward-LM embedding pretraining."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .checkpoint import Checkpoint
from .corpus import Corpus, cleaned_words, derive_labels, filter_by_length
from .decode import decode
from .evaluation import evaluate_edits
from .features import Vocab, build_tag_vocab, build_vocab
from .lstm import log_softmax, lstm_backward, lstm_forward
from .model import Model, batch_loss, loss_and_gradients, posteriors
from .optim import Adadelta, clip_by_global_norm
from .schemes import FIVE

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 50
    rho: float = 0.95
    epsilon: float = 1e-6
    max_epochs: int = 30
    patience: int = 5
    max_train_len: int = 50
    clip_norm: float = 5.0
    decode: str = "dp"
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.patience < 0 or self.max_epochs < 1:
            raise ValueError("need patience >= 0 and max_epochs >= 1")


def length_batches(lengths, batch_size: int) -> list[np.ndarray]:
    """Indices grouped into batches of similar length (stable sort by length)."""
    order = np.argsort(np.asarray(lengths), kind="stable")
    return [order[i:i + batch_size] for i in range(0, len(order), batch_size)]


def dev_edit_f(model: Model, dev: Corpus, method: str = "dp") -> float:
    """Edit F on ``dev`` after constrained decoding, scored in five states."""
    if not len(dev):
        return 0.0
    scheme = model.scheme
    pred = []
    for s, p in zip(dev, posteriors(model, dev.sentences)):
        pred.append([scheme.to_five[l] for l in decode(p, scheme, method)])
    gold = [derive_labels(s, FIVE) for s in dev]
    return evaluate_edits(pred, gold, FIVE).f1


def train(model: Model, train_corpus: Corpus, dev: Corpus, tc: TrainConfig | None = None,
          on_epoch: Callable[[dict], None] | None = None) -> Checkpoint:
    """Mini-batch Adadelta with dev-set early stopping on edit F.

    Sentences longer than ``tc.max_train_len`` are dropped from training
    only. The returned checkpoint holds the best-scoring parameters and the
    per-epoch history ``{epoch, train_loss, dev_f}``.
    """
    tc = tc or TrainConfig()
    data = filter_by_length(train_corpus, tc.max_train_len)
    if not len(data):
        raise ValueError("training corpus is empty after length filtering")
    scheme = model.scheme
    fvs = [model.features(s) for s in data]
    gold = [derive_labels(s, scheme) for s in data]
    batches = length_batches([len(fv) for fv in fvs], tc.batch_size)
    rng = np.random.default_rng(tc.seed)
    opt = Adadelta(model.params, tc.rho, tc.epsilon)

    history = []
    best_f, best_params, since_best = -np.inf, None, 0
    for epoch in range(1, tc.max_epochs + 1):
        total, n_tok = 0.0, 0
        for b in rng.permutation(len(batches)):
            ids = batches[b]
            bf = [fvs[i] for i in ids]
            loss, grads = loss_and_gradients(model, bf, [gold[i] for i in ids])
            clip_by_global_norm(grads, tc.clip_norm)
            opt.step(model.params, grads)
            k = sum(len(fv) for fv in bf)
            total += loss * k
            n_tok += k
        dev_f = dev_edit_f(model, dev, tc.decode)
        row = {"epoch": epoch, "train_loss": total / n_tok, "dev_f": dev_f}
        history.append(row)
        log.info("epoch %d\ttrain_loss %.6f\tdev_f %.4f", epoch, row["train_loss"], dev_f)
        if on_epoch:
            on_epoch(row)
        if dev_f > best_f:
            best_f, since_best = dev_f, 0
            best_params = {k: v.copy() for k, v in model.params.items()}
        else:
            since_best += 1
            if since_best >= max(tc.patience, 1):
                break
    model.params = best_params
    return Checkpoint(model, history, asdict(tc))


def training_loss(model: Model, c: Corpus) -> float:
    scheme = model.scheme
    fvs = [model.features(s) for s in c]
    return batch_loss(model, fvs, [derive_labels(s, scheme) for s in c])


# --- backward LM pretraining ---------------------------------------------------------

END = 0  # output class for "no more words"; shares the index of PAD


@dataclass
class PretrainedEmbeddings:
    words: Vocab
    word_table: np.ndarray
    tags: Vocab
    pos_table: np.ndarray

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, word_vocab=np.array(self.words.itos), word_table=self.word_table,
                     pos_vocab=np.array(self.tags.itos), pos_table=self.pos_table)

    @classmethod
    def load(cls, path: str | Path) -> "PretrainedEmbeddings":
        with np.load(path, allow_pickle=False) as z:
            return cls(Vocab(list(z["word_vocab"][2:])), z["word_table"].astype(np.float64),
                       Vocab(list(z["pos_vocab"][2:])), z["pos_table"].astype(np.float64))

    def aligned(self, words: Vocab, tags: Vocab, base: dict) -> tuple[dict, dict]:
        """Tables indexed like ``words``/``tags``; rows for unseen entries come from ``base``.

        Returns the tables and the number of rows copied per table.
        """
        out, copied = {}, {}
        for key, src_vocab, table, dst_vocab in (("word", self.words, self.word_table, words),
                                                 ("pos", self.tags, self.pos_table, tags)):
            if key not in base:
                continue
            dst = base[key].copy()
            if dst.shape[1] != table.shape[1]:
                raise ValueError(f"pretrained {key} dim {table.shape[1]} != model dim {dst.shape[1]}")
            n = 0
            for i, w in enumerate(dst_vocab.itos[2:], 2):
                j = src_vocab.word_to_index.get(w)
                if j is not None:
                    dst[i] = table[j]
                    n += 1
            dst[0] = 0.0
            out[key], copied[key] = dst, n
        return out, copied


class _BackwardLM:
    """Embedding -> LSTM -> softmax over the vocabulary, fed reversed sentences."""

    def __init__(self, vocab_size: int, dim: int, rng):
        r_e = np.sqrt(6.0 / (vocab_size + dim))
        r_w = np.sqrt(6.0 / (dim + 4 * dim))
        r_u = np.sqrt(6.0 / (dim + 4 * dim))
        r_o = np.sqrt(6.0 / (dim + vocab_size))
        self.params = {
            "emb": rng.uniform(-r_e, r_e, (vocab_size, dim)),
            "W": rng.uniform(-r_w, r_w, (dim, 4 * dim)),
            "U": rng.uniform(-r_u, r_u, (dim, 4 * dim)),
            "b": np.zeros(4 * dim),
            "out.W": rng.uniform(-r_o, r_o, (dim, vocab_size)),
            "out.b": np.zeros(vocab_size),
        }
        self.params["b"][dim:2 * dim] = 1.0
        self.params["emb"][0] = 0.0

    @staticmethod
    def batch(seqs):
        lengths = np.array([len(s) for s in seqs])
        T = int(lengths.max())
        X = np.zeros((len(seqs), T), dtype=np.int64)
        Y = np.zeros((len(seqs), T), dtype=np.int64)
        for b, s in enumerate(seqs):
            rev = s[::-1]
            X[b, :len(rev)] = rev
            Y[b, :len(rev)] = rev[1:] + [END]
        mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)
        return X, Y, mask

    def loss_and_gradients(self, seqs):
        p = self.params
        X, Y, mask = self.batch(seqs)
        n = mask.sum()
        E = p["emb"][X]
        Hs, cache = lstm_forward(E, p["W"], p["U"], p["b"])
        logp = log_softmax(Hs @ p["out.W"] + p["out.b"])
        picked = np.take_along_axis(logp, Y[:, :, None], axis=2)[:, :, 0]
        loss = float(-(picked * mask).sum() / n)
        d = np.exp(logp)
        np.put_along_axis(d, Y[:, :, None], np.take_along_axis(d, Y[:, :, None], axis=2) - 1.0, axis=2)
        d *= (mask / n)[:, :, None]
        V = d.shape[2]
        grads = {"out.W": Hs.reshape(-1, Hs.shape[2]).T @ d.reshape(-1, V),
                 "out.b": d.sum(axis=(0, 1))}
        dE, grads["W"], grads["U"], grads["b"] = lstm_backward(d @ p["out.W"].T, cache, p["W"], p["U"])
        g = np.zeros_like(p["emb"])
        np.add.at(g, X.ravel(), (dE * mask[:, :, None]).reshape(-1, dE.shape[2]))
        g[0] = 0.0
        grads["emb"] = g
        return loss, grads


def _train_lm(seqs, vocab_size, dim, epochs, seed, batch_size, rho, eps, clip):
    rng = np.random.default_rng(seed)
    lm = _BackwardLM(vocab_size, dim, rng)
    opt = Adadelta(lm.params, rho, eps)
    batches = length_batches([len(s) for s in seqs], batch_size)
    losses = []
    for _ in range(epochs):
        total = 0.0
        for b in rng.permutation(len(batches)):
            loss, grads = lm.loss_and_gradients([seqs[i] for i in batches[b]])
            clip_by_global_norm(grads, clip)
            opt.step(lm.params, grads)
            total += loss
        losses.append(total / len(batches))
    return lm.params["emb"], losses


def pretrain_backward_lm(c: Corpus, word_dim: int = 150, pos_dim: int = 5, epochs: int = 5,
                         seed: int = 0, words: Vocab | None = None, tags: Vocab | None = None,
                         batch_size: int = 50, rho: float = 0.95, eps: float = 1e-6,
                         clip: float = 5.0) -> PretrainedEmbeddings:
    """Word and POS embeddings from right-to-left LSTM language models.

    Both models read the corpus with every reparandum and interregnum
    deleted; the POS model sees the tag sequence of that cleaned text.
    """
    words = words or build_vocab(c)
    tags = tags or build_tag_vocab(c)
    word_seqs, tag_seqs = [], []
    for s in c:
        keep = cleaned_words(s)
        if keep:
            word_seqs.append([words.index(s.tokens[i].norm) for i in keep])
            tag_seqs.append([tags.index(s.tokens[i].pos) for i in keep])
    if not word_seqs:
        raise ValueError("nothing left to train on after removing disfluencies")
    word_table, _ = _train_lm(word_seqs, words.size, word_dim, epochs, seed, batch_size, rho, eps, clip)
    pos_table, _ = _train_lm(tag_seqs, tags.size, pos_dim, epochs, seed + 1, batch_size, rho, eps, clip)
    return PretrainedEmbeddings(words, word_table, tags, pos_table)


def history_log(history: list[dict]) -> str:
    """``epoch<TAB>train_loss<TAB>dev_f`` lines."""
    return "".join(f"{h['epoch']}\t{h['train_loss']:.6f}\t{h['dev_f']:.6f}\n" for h in history)
