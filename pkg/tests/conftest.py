import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disfluency.corpus import Corpus, parse_annotated_line
from disfluency.features import FeatureSchema, build_tag_vocab, build_vocab
from disfluency.model import ModelConfig, init_model
from disfluency.synthetic import generate_synthetic

ANNOTATION_EXAMPLES = [
    "[ by + ] it was attached to",
    "[S it's + {uh} it's ] almost like",
    "[ I just + I ] enjoy working",
    "[S the + th- + the ] decision",
    "hello world",
]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic(n_sentences=40, max_len=12, vocab_size=60, seed=3)


@pytest.fixture(scope="session")
def table1_corpus():
    return Corpus([parse_annotated_line(line, id=f"t{k}") for k, line in enumerate(ANNOTATION_EXAMPLES)])


def tiny_model(corpus, scheme="eight", direction="bidirectional", features=(1, 2, 3, 7, 9),
               hidden=8, dim=4, seed=0):
    schema = FeatureSchema(enabled=features)
    cfg = ModelConfig(direction=direction, scheme=scheme, word_dim=dim, pos_dim=dim,
                      default_feat_dim=dim, hidden_dim=hidden, seed=seed)
    return init_model(cfg, schema, build_vocab(corpus), build_tag_vocab(corpus))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    lines = list(mod.RESULTS)
    if not any(line.startswith("criterion 7") for line in lines):
        lines.append("criterion 7: SKIP  repro profile needs DISFL_SWBD_DIR")
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
