"""Command-line entry points: ``train``, ``tag``, ``eval``, ``synth``, ``features``, ``pretrain-lm``.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines;
``--set key=value`` flags override the file. Unknown keys are usage errors.
The fully resolved configuration is echoed to stderr before work starts.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import checkpoint as ckpt_io
from .corpus import (LabeledSentence, ParseError, format_tsv, gold_labeled, parse_tsv_text,
                     plain_sentence, read_dis, write_dis)
from .decode import METHODS, count_illegal, decode
from .evaluation import EvalReport, EvaluationError, evaluate, evaluate_edits
from .features import (CORE_FEATURES, FeatureSchema, LmFeaturizer, build_tag_vocab, build_vocab,
                       extract_features, fit_fluent_lm, format_feature_tsv)
from .model import ModelConfig, init_model, posteriors
from .schemes import FIVE, SchemeError, get_scheme, register_scheme, load_scheme
from .synthetic import ConfigError, SyntheticConfig, generate_synthetic
from .training import PretrainedEmbeddings, TrainConfig, history_log, pretrain_backward_lm, train

log = logging.getLogger("disfluency")


class UsageError(Exception):
    pass


def _int_list(v):
    return tuple(int(x) for x in str(v).replace(",", " ").split())


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# key -> (type, default); None default means required
TRAIN_KEYS = {
    "train": (str, None), "dev": (str, None), "output": (str, None),
    "log": (str, ""), "scheme": (str, "eight"), "scheme_file": (str, ""),
    "direction": (str, "bidirectional"),
    "word_dim": (int, 150), "pos_dim": (int, 5), "feat_dim": (int, 5), "hidden_dim": (int, 150),
    "features": (_int_list, CORE_FEATURES), "window": (int, 8), "ngram_window": (int, 8),
    "gap_max": (int, 3), "min_count": (int, 1),
    "batch_size": (int, 50), "rho": (float, 0.95), "epsilon": (float, 1e-6),
    "max_epochs": (int, 30), "patience": (int, 5), "max_train_len": (int, 50),
    "clip_norm": (float, 5.0), "decode": (str, "dp"), "init_embeddings": (str, ""),
    "seed": (int, 0),
}
TAG_KEYS = {"checkpoint": (str, None), "input": (str, None), "output": (str, "-"),
            "decode": (str, "dp"), "scheme": (str, ""), "seed": (int, 0)}
EVAL_KEYS = {"pred": (str, None), "gold": (str, None), "scheme": (str, "five"),
             "format": (str, "table"), "seed": (int, 0)}
SYNTH_KEYS = {"output": (str, None), "seed": (int, 0), "split": (str, "train"),
              **{f.name: (type(f.default), f.default) for f in fields(SyntheticConfig)
                 if f.name not in ("split",)}}
FEATURES_KEYS = {"input": (str, None), "output": (str, "-"), "features": (_int_list, CORE_FEATURES),
                 "window": (int, 8), "ngram_window": (int, 8), "gap_max": (int, 3),
                 "vocab_from": (str, ""), "seed": (int, 0)}
PRETRAIN_KEYS = {"input": (str, None), "output": (str, None), "word_dim": (int, 150),
                 "pos_dim": (int, 5), "epochs": (int, 5), "batch_size": (int, 50),
                 "min_count": (int, 1), "seed": (int, 0)}


def parse_config_text(text: str, name: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"{name}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def resolve(spec: dict, file_values: dict, overrides: dict) -> dict:
    merged = {**file_values, **overrides}
    unknown = sorted(set(merged) - set(spec))
    if unknown:
        raise UsageError(f"unknown configuration key(s): {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in spec.items():
        if key in merged:
            try:
                conv = _bool if conv is bool else conv
                out[key] = conv(merged[key])
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {exc}") from None
        elif default is None:
            raise UsageError(f"missing required key {key!r}")
        else:
            out[key] = default
    return out


def echo_config(name: str, cfg: dict) -> None:
    print(f"# {name} configuration", file=sys.stderr)
    for k in sorted(cfg):
        v = cfg[k]
        if isinstance(v, tuple):
            v = ",".join(map(str, v))
        print(f"{k} = {v}", file=sys.stderr)


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from None


def _read_sentences(path: Path, split="test"):
    """Annotated ``.dis`` or ``.tsv`` input; TSV labels are ignored."""
    if path.suffix == ".tsv":
        items = parse_tsv_text(path.read_text(encoding="utf-8"), str(path))
        return [plain_sentence(it.words, it.tags, it.id) for it in items]
    return read_dis(path, split).sentences


def _scheme(name: str, scheme_file: str = ""):
    if scheme_file:
        scheme = load_scheme(scheme_file)
        register_scheme(scheme)
        return scheme
    return get_scheme(name)


# --- subcommands -------------------------------------------------------------------

def cmd_train(cfg: dict) -> int:
    train_path, dev_path = _require_file(cfg["train"]), _require_file(cfg["dev"])
    scheme = _scheme(cfg["scheme"], cfg["scheme_file"])
    train_c = read_dis(train_path, "train")
    dev_c = read_dis(dev_path, "dev")
    schema = FeatureSchema(enabled=cfg["features"], window_follow=cfg["window"],
                           window_precede=cfg["window"], ngram_window=cfg["ngram_window"],
                           gap_max=cfg["gap_max"])
    words = build_vocab(train_c, cfg["min_count"])
    tags = build_tag_vocab(train_c)
    lm = LmFeaturizer(fit_fluent_lm(train_c), schema.lm_bins).fit(train_c) if schema.uses_lm else None
    mcfg = ModelConfig(direction=cfg["direction"], scheme=scheme.name, word_dim=cfg["word_dim"],
                       pos_dim=cfg["pos_dim"], default_feat_dim=cfg["feat_dim"],
                       hidden_dim=cfg["hidden_dim"], seed=cfg["seed"])
    model = init_model(mcfg, schema, words, tags, lm=lm)
    notes = {}
    if cfg["init_embeddings"]:
        pre = PretrainedEmbeddings.load(_require_file(cfg["init_embeddings"]))
        base = {k: model.params[f"emb.{fid}"] for k, fid in (("word", 1), ("pos", 2))
                if f"emb.{fid}" in model.params}
        tables, copied = pre.aligned(words, tags, base)
        model = init_model(mcfg, schema, words, tags, pretrained=tables, lm=lm)
        notes["init_embeddings"] = cfg["init_embeddings"]
        log.info("initialised embeddings from %s (%s)", cfg["init_embeddings"],
                 ", ".join(f"{k}: {v} rows" for k, v in copied.items()))
    tc = TrainConfig(batch_size=cfg["batch_size"], rho=cfg["rho"], epsilon=cfg["epsilon"],
                     max_epochs=cfg["max_epochs"], patience=cfg["patience"],
                     max_train_len=cfg["max_train_len"], clip_norm=cfg["clip_norm"],
                     decode=cfg["decode"], seed=cfg["seed"])
    out = Path(cfg["output"])
    if not out.parent.exists():
        raise RuntimeError(f"cannot write {out}: directory does not exist")
    log_path = cfg["log"] or str(out) + ".log"
    fh = open(log_path, "w", encoding="utf-8")

    def on_epoch(row):
        fh.write(f"{row['epoch']}\t{row['train_loss']:.6f}\t{row['dev_f']:.6f}\n")
        fh.flush()
        log.info("epoch %d  train_loss %.4f  dev_f %.4f", row["epoch"], row["train_loss"], row["dev_f"])

    try:
        ck = train(model, train_c, dev_c, tc, on_epoch=on_epoch)
    finally:
        fh.close()
    ck.notes.update(notes)
    ck.train_config["resolved"] = {k: (list(v) if isinstance(v, tuple) else v)
                                   for k, v in sorted(cfg.items())}
    ckpt_io.save(ck, out)
    print(f"best dev edit F = {ck.best_dev_f:.4f}")
    return 0


def cmd_tag(cfg: dict) -> int:
    if cfg["decode"] not in METHODS:
        raise UsageError(f"--decode must be one of {', '.join(METHODS)}")
    model = ckpt_io.load(_require_file(cfg["checkpoint"]))
    if cfg["scheme"] and cfg["scheme"] != model.config.scheme:
        raise UsageError(f"checkpoint was trained with scheme {model.config.scheme!r}, "
                         f"not {cfg['scheme']!r}")
    sentences = _read_sentences(_require_file(cfg["input"]))
    scheme = model.scheme
    items = []
    for s, p in zip(sentences, posteriors(model, sentences)):
        items.append(LabeledSentence(s.id, s.words, s.tags, decode(p, scheme, cfg["decode"])))
    illegal = count_illegal([it.labels for it in items], scheme.legality)
    if illegal:
        log.warning("%d of %d sentences have illegal label sequences", illegal, len(items))
    _write_text(cfg["output"], format_tsv(items))
    return 0


def cmd_eval(cfg: dict) -> int:
    scheme = get_scheme(cfg["scheme"])
    pred = parse_tsv_text(_require_file(cfg["pred"]).read_text(encoding="utf-8"), cfg["pred"])
    gold_path = _require_file(cfg["gold"])
    if gold_path.suffix == ".tsv":
        gold_items = parse_tsv_text(gold_path.read_text(encoding="utf-8"), str(gold_path))
        _align(pred, [(g.id, len(g.words)) for g in gold_items])
        report = EvalReport(evaluate_edits([p.labels for p in pred],
                                           [g.labels for g in gold_items], scheme))
    else:
        gold = read_dis(gold_path, "test")
        _align(pred, [(s.id, len(s)) for s in gold])
        report = evaluate([p.labels for p in pred], gold, scheme)
    if cfg["format"] == "kv":
        print(report.key_values())
    else:
        print(report.table())
    return 0


def _align(pred, gold):
    for k, (p, (gid, n)) in enumerate(zip(pred, gold)):
        if p.id != gid or len(p.words) != n:
            raise EvaluationError(f"prediction and gold diverge at sentence {gid!r} "
                                  f"(prediction {p.id!r}, {len(p.words)} vs {n} tokens)")
    if len(pred) != len(gold):
        gid = gold[len(pred)][0] if len(gold) > len(pred) else pred[len(gold)].id
        raise EvaluationError(f"prediction and gold diverge at sentence {gid!r} "
                              f"({len(pred)} vs {len(gold)} sentences)")


def cmd_synth(cfg: dict) -> int:
    keys = {f.name for f in fields(SyntheticConfig)}
    scfg = SyntheticConfig(**{k: v for k, v in cfg.items() if k in keys})
    corpus = generate_synthetic(scfg, seed=cfg["seed"])
    out = Path(cfg["output"])
    if not out.parent.exists():
        raise RuntimeError(f"cannot write {out}: directory does not exist")
    write_dis(corpus, out)
    return 0


def cmd_features(cfg: dict) -> int:
    sentences = _read_sentences(_require_file(cfg["input"]))
    schema = FeatureSchema(enabled=cfg["features"], window_follow=cfg["window"],
                           window_precede=cfg["window"], ngram_window=cfg["ngram_window"],
                           gap_max=cfg["gap_max"])
    if schema.uses_lm:
        raise UsageError("features dump covers ids 1-17 only")
    from .corpus import Corpus
    source = Corpus(read_dis(_require_file(cfg["vocab_from"])).sentences if cfg["vocab_from"]
                    else sentences)
    words, tags = build_vocab(source), build_tag_vocab(source)
    items = [(s.id, extract_features(s, schema, words, tags)) for s in sentences]
    _write_text(cfg["output"], format_feature_tsv(items, schema))
    return 0


def cmd_pretrain_lm(cfg: dict) -> int:
    corpus = read_dis(_require_file(cfg["input"]))
    emb = pretrain_backward_lm(corpus, cfg["word_dim"], cfg["pos_dim"], cfg["epochs"], cfg["seed"],
                               words=build_vocab(corpus, cfg["min_count"]),
                               batch_size=cfg["batch_size"])
    out = Path(cfg["output"])
    if not out.parent.exists():
        raise RuntimeError(f"cannot write {out}: directory does not exist")
    emb.save(out)
    return 0


COMMANDS = {
    "train": (cmd_train, TRAIN_KEYS, "train a tagger and write a checkpoint"),
    "tag": (cmd_tag, TAG_KEYS, "label sentences with a trained checkpoint"),
    "eval": (cmd_eval, EVAL_KEYS, "score predicted labels against gold"),
    "synth": (cmd_synth, SYNTH_KEYS, "generate a synthetic annotated corpus"),
    "features": (cmd_features, FEATURES_KEYS, "dump per-token core features as TSV"),
    "pretrain-lm": (cmd_pretrain_lm, PRETRAIN_KEYS, "pretrain word/POS embeddings"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="disfluency", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, spec, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        for key in spec:
            p.add_argument("--" + key.replace("_", "-"), dest=f"opt_{key}", default=None,
                           help=argparse.SUPPRESS)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        func, spec, _ = COMMANDS[args.command]
        file_values = {}
        if args.config:
            path = _require_file(args.config)
            file_values = parse_config_text(path.read_text(encoding="utf-8"), str(path))
        overrides = {}
        for item in args.set:
            key, eq, value = item.partition("=")
            if not eq:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = value.strip()
        for key in spec:
            v = getattr(args, f"opt_{key}")
            if v is not None:
                overrides[key] = v
        cfg = resolve(spec, file_values, overrides)
        echo_config(args.command, cfg)
        return func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ParseError, EvaluationError, SchemeError, ConfigError, ckpt_io.CheckpointError,
            RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
