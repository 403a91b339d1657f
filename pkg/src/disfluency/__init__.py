"""Disfluency detection: annotation parsing, pattern-match features, a
numpy BLSTM tagger, legality-constrained decoding and P/R/F scoring."""
from .corpus import (Corpus, DisfluencySpan, ParseError, Sentence, Token, collapse_labels,
                     derive_labels, filter_by_length, parse_annotated_line, read_dis, render)
from .decode import (argmax_decode, collapse_posteriors, constrained_decode_dp, decode,
                     ilp_decode, is_legal)
from .evaluation import PRF, breakdown_by_type, edit_word_set, evaluate, evaluate_corrections, prf
from .features import FeatureSchema, Vocab, build_tag_vocab, build_vocab, extract_features
from .model import ModelConfig, forward, init_model, loss_and_gradients
from .schemes import EIGHT, EXTENDED, FIVE, LabelScheme, get_scheme
from .synthetic import SyntheticConfig, generate_synthetic
from .training import TrainConfig, pretrain_backward_lm, train

__version__ = "0.1.0"
