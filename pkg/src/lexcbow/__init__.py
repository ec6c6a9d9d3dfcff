"""Lexicon-augmented CBOW word embeddings.

Training predicts, for each corpus position, the target word and the
synonyms of its contextually selected sense from the averaged context
vector.  Sense selection uses gloss/context overlap (simplified Lesk);
control modes train with all synonyms or with no lexicon at all.
"""

from .corpus import ContextExample, Vocabulary, build_vocabulary, encode, read_tokens, stream_contexts
from .errors import ConfigError, DataError, LexcbowError, NumericalError, ParseError
from .lexicon import Lexicon, Sense, is_polysemous, load_lexicon, senses_of
from .trainer import (
    Backend,
    HuffmanCode,
    NoiseSampler,
    TrainingConfig,
    TrainReport,
    TrainResult,
    build_huffman,
    context_mean,
    hs_step,
    init_parameters,
    ns_step,
    sigmoid,
    train,
)
from .vectors import WordVectors, load_binary, load_text, save_binary, save_text
from .wsd import FilterMode, SenseChoice, Stoplist, gloss_overlap, paraphrase_set, select_sense

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "ConfigError",
    "ContextExample",
    "DataError",
    "FilterMode",
    "HuffmanCode",
    "Lexicon",
    "LexcbowError",
    "NoiseSampler",
    "NumericalError",
    "ParseError",
    "Sense",
    "SenseChoice",
    "Stoplist",
    "TrainReport",
    "TrainResult",
    "TrainingConfig",
    "Vocabulary",
    "WordVectors",
    "build_huffman",
    "build_vocabulary",
    "context_mean",
    "encode",
    "gloss_overlap",
    "hs_step",
    "init_parameters",
    "is_polysemous",
    "load_binary",
    "load_lexicon",
    "load_text",
    "ns_step",
    "paraphrase_set",
    "read_tokens",
    "save_binary",
    "save_text",
    "select_sense",
    "senses_of",
    "sigmoid",
    "stream_contexts",
    "train",
]
