import numpy as np
import pytest

from lexcbow.corpus import build_vocabulary
from lexcbow.lexicon import load_lexicon


def make_corpus(n_tokens: int, n_types: int = 40, seed: int = 0) -> list[str]:
    """Zipf-ish synthetic corpus of tokens w0..w{n_types-1}."""
    rng = np.random.default_rng(seed)
    probs = 1.0 / np.arange(1, n_types + 1)
    probs /= probs.sum()
    draws = rng.choice(n_types, size=n_tokens, p=probs)
    return [f"w{i}" for i in draws]


COBBLER_LEXICON = """\
# two senses for the classic shoe/dessert ambiguity, plus friends
cobbler\tcobbler.n.01\tshoemaker,bootmaker\ta person who makes or repairs shoes
cobbler\tcobbler.n.02\tcrumble,pie\ta deep dish fruit dessert baked with a thick crust
jig\tjig.n.01\tjig\tmusic for dancing a jig
dance\tdance.n.01\twaltz,polka\ta party or gathering for dancing
"""


@pytest.fixture
def cobbler_lexicon(tmp_path):
    path = tmp_path / "lexicon.tsv"
    path.write_text(COBBLER_LEXICON, encoding="utf-8")
    return load_lexicon(path)


@pytest.fixture
def small_vocab():
    tokens = (
        ["the"] * 40 + ["shoes"] * 12 + ["pie"] * 10 + ["fruit"] * 9
        + ["cobbler"] * 8 + ["shoemaker"] * 7 + ["crumble"] * 6 + ["dance"] * 5
        + ["waltz"] * 4 + ["jig"] * 3 + ["repairs"] * 3 + ["baked"] * 2
    )
    return build_vocabulary(tokens, min_count=1)
