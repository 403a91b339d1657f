"""LSTM / BLSTM tagger over concatenated feature embeddings.

Every enabled feature has its own embedding table. The word (1) and POS
(2) tables are indexed by vocabulary id, where row 0 is padding; every
other feature value ``v`` uses row ``v + 1``. Row 0 of every table is zero
and receives no gradient.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .corpus import Sentence
from .features import FeatureSchema, FeatureVector, LmFeaturizer, Vocab, extract_features
from .lstm import log_softmax, lstm_backward, lstm_forward, reverse_within, softmax
from .schemes import LabelScheme, get_scheme

DIRECTIONS = ("forward", "backward", "bidirectional")


@dataclass
class ModelConfig:
    direction: str = "bidirectional"
    scheme: str = "eight"
    word_dim: int = 150
    pos_dim: int = 5
    feat_dims: dict = field(default_factory=dict)  # feature id -> dim
    default_feat_dim: int = 5
    hidden_dim: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        self.feat_dims = {int(k): int(v) for k, v in self.feat_dims.items()}
        dims = [self.word_dim, self.pos_dim, self.default_feat_dim, self.hidden_dim,
                *self.feat_dims.values()]
        if min(dims) < 1:
            raise ValueError("all dimensions must be >= 1")

    @classmethod
    def for_scheme(cls, scheme: str, **kw) -> "ModelConfig":
        """Defaults tuned per scheme: 100 for ``extended``, 150 otherwise."""
        dim = 100 if scheme == "extended" else 150
        return cls(scheme=scheme, **{"word_dim": dim, "hidden_dim": dim, **kw})

    def dim_of(self, fid: int) -> int:
        if fid == 1:
            return self.word_dim
        if fid == 2:
            return self.pos_dim
        return self.feat_dims.get(fid, self.default_feat_dim)

    def input_dim(self, schema: FeatureSchema) -> int:
        return sum(self.dim_of(f) for f in schema.enabled)

    @property
    def directions(self) -> tuple:
        return {"forward": ("fwd",), "backward": ("bwd",),
                "bidirectional": ("fwd", "bwd")}[self.direction]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["feat_dims"] = {str(k): v for k, v in sorted(self.feat_dims.items())}
        return d


class Model:
    def __init__(self, config: ModelConfig, schema: FeatureSchema, words: Vocab, tags: Vocab,
                 params: dict, lm: LmFeaturizer | None = None):
        self.config = config
        self.schema = schema
        self.words = words
        self.tags = tags
        self.params = params
        self.lm = lm

    @property
    def scheme(self) -> LabelScheme:
        return get_scheme(self.config.scheme)

    def features(self, s: Sentence) -> FeatureVector:
        return extract_features(s, self.schema, self.words, self.tags, self.lm)

    def copy(self) -> "Model":
        return Model(copy.deepcopy(self.config), self.schema, self.words, self.tags,
                     {k: v.copy() for k, v in self.params.items()}, self.lm)


def table_rows(schema: FeatureSchema, fid: int, words: Vocab, tags: Vocab) -> int:
    card = schema.cardinality(fid, words, tags)
    return card if fid in (1, 2) else card + 1


def param_shapes(cfg: ModelConfig, schema: FeatureSchema, words: Vocab, tags: Vocab,
                 n_states: int) -> dict:
    shapes = {f"emb.{fid}": (table_rows(schema, fid, words, tags), cfg.dim_of(fid))
              for fid in schema.enabled}
    D, H = cfg.input_dim(schema), cfg.hidden_dim
    for d in cfg.directions:
        shapes[f"{d}.W"] = (D, 4 * H)
        shapes[f"{d}.U"] = (H, 4 * H)
        shapes[f"{d}.b"] = (4 * H,)
    shapes["out.W"] = (H * len(cfg.directions), n_states)
    shapes["out.b"] = (n_states,)
    return shapes


def init_model(cfg: ModelConfig, schema: FeatureSchema, words: Vocab, tags: Vocab,
               pretrained: dict | None = None, lm: LmFeaturizer | None = None) -> Model:
    """Glorot-uniform weights, zero biases except forget gates (1.0).

    ``pretrained`` may hold ``"word"`` and/or ``"pos"`` tables shaped like the
    corresponding embedding tables.
    """
    scheme = get_scheme(cfg.scheme)
    shapes = param_shapes(cfg, schema, words, tags, scheme.size)
    rng = np.random.default_rng(cfg.seed)
    params = {}
    for name in sorted(shapes):
        shape = shapes[name]
        if len(shape) == 2:
            r = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-r, r, size=shape)
        else:
            params[name] = np.zeros(shape)
    H = cfg.hidden_dim
    for d in cfg.directions:
        params[f"{d}.b"][H:2 * H] = 1.0
    for key, fid in (("word", 1), ("pos", 2)):
        table = (pretrained or {}).get(key)
        if table is None:
            continue
        name = f"emb.{fid}"
        if name not in shapes:
            raise ValueError(f"pretrained {key} table given but feature {fid} is disabled")
        table = np.asarray(table, dtype=np.float64)
        if table.shape != shapes[name]:
            raise ValueError(f"pretrained {key} table has shape {table.shape}, "
                             f"expected {shapes[name]}")
        params[name] = table.copy()
    for fid in schema.enabled:
        params[f"emb.{fid}"][0] = 0.0
    return Model(cfg, schema, words, tags, params, lm)


# --- batching ------------------------------------------------------------------

def embedding_indices(fv: FeatureVector) -> np.ndarray:
    idx = fv.values.copy()
    for k, fid in enumerate(fv.ids):
        if fid not in (1, 2):
            idx[:, k] += 1
    return idx


def pad_batch(fvs: list[FeatureVector]):
    """Stack ``[B, T, F]`` embedding indices (0 = pad) and lengths."""
    lengths = np.array([len(fv) for fv in fvs], dtype=np.int64)
    T = int(lengths.max()) if len(fvs) else 0
    F = len(fvs[0].ids) if fvs else 0
    idx = np.zeros((len(fvs), T, F), dtype=np.int64)
    for b, fv in enumerate(fvs):
        idx[b, :len(fv)] = embedding_indices(fv)
    return idx, lengths


def _embed(params, ids, idx):
    return np.concatenate([params[f"emb.{fid}"][idx[:, :, k]] for k, fid in enumerate(ids)],
                          axis=2)


def _run(model: Model, idx, lengths, keep_cache=False):
    cfg = model.config
    p = model.params
    ids = model.schema.enabled
    X = _embed(p, ids, idx)
    outs, caches = [], {}
    for d in cfg.directions:
        Xd = X if d == "fwd" else reverse_within(X, lengths)
        Hd, cache = lstm_forward(Xd, p[f"{d}.W"], p[f"{d}.U"], p[f"{d}.b"])
        if d == "bwd":
            Hd = reverse_within(Hd, lengths)
        outs.append(Hd)
        caches[d] = cache
    Hcat = np.concatenate(outs, axis=2) if len(outs) > 1 else outs[0]
    logits = Hcat @ p["out.W"] + p["out.b"]
    if keep_cache:
        return logits, (X, Hcat, caches)
    return logits


def predict_batch(model: Model, fvs: list[FeatureVector]) -> list[np.ndarray]:
    """Posteriors ``[T_i, K]`` for each feature vector."""
    if not fvs:
        return []
    idx, lengths = pad_batch(fvs)
    probs = softmax(_run(model, idx, lengths))
    return [probs[b, :L] for b, L in enumerate(lengths)]


def forward(model: Model, fv: FeatureVector) -> np.ndarray:
    return predict_batch(model, [fv])[0]


def posteriors(model: Model, sentences: list[Sentence], batch_size: int = 64) -> list[np.ndarray]:
    fvs = [model.features(s) for s in sentences]
    out = []
    for i in range(0, len(fvs), batch_size):
        out.extend(predict_batch(model, fvs[i:i + batch_size]))
    return out


# --- loss ----------------------------------------------------------------------

def _gold_matrix(gold, lengths, T, scheme):
    Y = np.zeros((len(gold), T), dtype=np.int64)
    for b, labels in enumerate(gold):
        if len(labels) != lengths[b]:
            raise ValueError(f"sentence {b}: {len(labels)} labels for {lengths[b]} tokens")
        Y[b, :len(labels)] = [scheme.index(l) if isinstance(l, str) else int(l) for l in labels]
    return Y


def batch_loss(model: Model, fvs, gold) -> float:
    idx, lengths = pad_batch(fvs)
    T = idx.shape[1]
    Y = _gold_matrix(gold, lengths, T, model.scheme)
    mask = np.arange(T)[None, :] < lengths[:, None]
    logp = log_softmax(_run(model, idx, lengths))
    picked = np.take_along_axis(logp, Y[:, :, None], axis=2)[:, :, 0]
    return float(-(picked * mask).sum() / mask.sum())


def loss_and_gradients(model: Model, fvs: list[FeatureVector], gold) -> tuple[float, dict]:
    """Mean per-token cross-entropy over the batch and its exact gradient.

    ``gold`` holds one label sequence (state names or indices) per sentence.
    """
    cfg = model.config
    p = model.params
    ids = model.schema.enabled
    idx, lengths = pad_batch(fvs)
    B, T = idx.shape[:2]
    Y = _gold_matrix(gold, lengths, T, model.scheme)
    mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.float64)
    n_tok = mask.sum()

    logits, (X, Hcat, caches) = _run(model, idx, lengths, keep_cache=True)
    logp = log_softmax(logits)
    picked = np.take_along_axis(logp, Y[:, :, None], axis=2)[:, :, 0]
    loss = float(-(picked * mask).sum() / n_tok)

    dlogits = np.exp(logp)
    np.put_along_axis(dlogits, Y[:, :, None],
                      np.take_along_axis(dlogits, Y[:, :, None], axis=2) - 1.0, axis=2)
    dlogits *= (mask / n_tok)[:, :, None]

    grads = {"out.W": Hcat.reshape(-1, Hcat.shape[2]).T @ dlogits.reshape(-1, dlogits.shape[2]),
             "out.b": dlogits.sum(axis=(0, 1))}
    dH = dlogits @ p["out.W"].T
    H = cfg.hidden_dim
    dX = np.zeros_like(X)
    for k, d in enumerate(cfg.directions):
        dHd = dH[:, :, k * H:(k + 1) * H]
        if d == "bwd":
            dHd = reverse_within(dHd, lengths)
        dXd, dW, dU, db = lstm_backward(dHd, caches[d], p[f"{d}.W"], p[f"{d}.U"])
        if d == "bwd":
            dXd = reverse_within(dXd, lengths)
        dX += dXd
        grads[f"{d}.W"], grads[f"{d}.U"], grads[f"{d}.b"] = dW, dU, db

    dX *= mask[:, :, None]
    offset = 0
    for k, fid in enumerate(ids):
        dim = cfg.dim_of(fid)
        g = np.zeros_like(p[f"emb.{fid}"])
        np.add.at(g, idx[:, :, k].ravel(), dX[:, :, offset:offset + dim].reshape(-1, dim))
        g[0] = 0.0
        grads[f"emb.{fid}"] = g
        offset += dim
    return loss, grads
