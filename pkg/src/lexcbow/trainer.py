"""Model parameters and the SGD loop.

The model predicts, from the averaged context vector x, both the target
word and the synonyms admitted by the filter; every admitted output is
trained against the same x.  Two back-ends are supported:

* hierarchical softmax -- one logistic regression per Huffman code bit,
  with the residual g = 1 - d - sigmoid(x.theta);
* negative sampling -- each output word is discriminated against k noise
  words drawn from the unigram^0.75 distribution, with
  g = label - sigmoid(x.theta).

In both back-ends the theta rows are updated immediately while the
context-vector corrections are accumulated and applied only after every
output of the example has been processed.

The pure-Python ``hs_step``/``ns_step`` functions are the reference
implementation; ``train`` runs the same arithmetic through compiled
kernels (``_kernels``) that share the parameter matrices across worker
threads without locks.  Lost updates are tolerated; single-threaded runs
are bit-reproducible.
"""

from __future__ import annotations

import heapq
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .corpus import (
    ContextExample,
    Vocabulary,
    build_vocabulary,
    encode,
    read_tokens,
    subsample_mask,
)
from .errors import ConfigError, NumericalError
from .lexicon import Lexicon, senses_of
from .wsd import FilterMode, Stoplist

LR_FLOOR_RATIO = 1e-4
SIGMOID_CLAMP = 30.0
INIT_SCALE = 0.5  # rows start uniform in (-INIT_SCALE/dim, +INIT_SCALE/dim)


class Backend(Enum):
    HS = "hs"
    NS = "ns"


def sigmoid(x):
    """Logistic function 1/(1+e^-x) with the input clamped to +/-30."""
    return 1.0 / (1.0 + np.exp(-np.clip(x, -SIGMOID_CLAMP, SIGMOID_CLAMP)))


def context_mean(context: Sequence[int], vectors: np.ndarray) -> np.ndarray:
    """Arithmetic mean of the context rows of the embedding matrix."""
    if len(context) == 0:
        raise ValueError("empty context: example should have been skipped")
    return vectors[np.asarray(context, dtype=np.intp)].mean(axis=0)


@dataclass
class HuffmanCode:
    """Per-word Huffman code bits and the inner-node path they traverse.

    Codes are stored flat: word w owns ``bits[offsets[w]:offsets[w+1]]``
    and ``nodes[offsets[w]:offsets[w+1]]`` (root first).  Inner nodes are
    numbered 0..V-2 in creation order, so the root is node V-2.
    """

    offsets: np.ndarray
    bits: np.ndarray
    nodes: np.ndarray

    def __len__(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_inner(self) -> int:
        return len(self) - 1

    def code(self, wid: int) -> np.ndarray:
        return self.bits[self.offsets[wid] : self.offsets[wid + 1]]

    def path(self, wid: int) -> np.ndarray:
        return self.nodes[self.offsets[wid] : self.offsets[wid + 1]]

    def code_length(self, wid: int) -> int:
        return int(self.offsets[wid + 1] - self.offsets[wid])


def build_huffman(vocab: Vocabulary) -> HuffmanCode:
    """Build the optimal prefix code for the vocabulary counts.

    Always merges the two lowest-weight nodes; ties are broken by
    earliest creation order (leaves first, in id order, then inner nodes
    in merge order), which makes the tree deterministic.
    """
    n = len(vocab)
    if n < 2:
        raise ConfigError(f"Huffman coding needs at least 2 words, got {n}")
    # heap entries: (weight, creation_order, node_id); leaves are nodes
    # 0..n-1, inner nodes n..2n-2
    heap = [(count, wid, wid) for wid, (_, count) in enumerate(vocab.entries)]
    heapq.heapify(heap)
    parent = np.zeros(2 * n - 1, dtype=np.int64)
    bit = np.zeros(2 * n - 1, dtype=np.int8)
    next_id = n
    while len(heap) > 1:
        w0, _, a = heapq.heappop(heap)
        w1, _, b = heapq.heappop(heap)
        parent[a] = next_id
        parent[b] = next_id
        bit[b] = 1
        heapq.heappush(heap, (w0 + w1, next_id, next_id))
        next_id += 1
    root = next_id - 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    codes = []
    paths = []
    for wid in range(n):
        rev_bits = []
        rev_nodes = []
        node = wid
        while node != root:
            rev_bits.append(bit[node])
            rev_nodes.append(parent[node] - n)  # inner-node id
            node = parent[node]
        codes.append(rev_bits[::-1])
        paths.append(rev_nodes[::-1])
        offsets[wid + 1] = offsets[wid] + len(rev_bits)
    return HuffmanCode(
        offsets=offsets,
        bits=np.array([b for code in codes for b in code], dtype=np.int8),
        nodes=np.array([p for path in paths for p in path], dtype=np.int32),
    )


class NoiseSampler:
    """Draws noise words with probability proportional to count^power."""

    def __init__(self, counts: np.ndarray, power: float = 0.75):
        weights = np.asarray(counts, dtype=np.float64) ** power
        total = weights.sum()
        if total <= 0:
            raise ConfigError("noise sampler needs positive counts")
        self.cdf = np.cumsum(weights / total)
        self.cdf[-1] = 1.0

    def __len__(self) -> int:
        return len(self.cdf)

    def sample(self, rng, exclude=(), max_attempts: int = 10000) -> int:
        """One draw from the noise distribution, redrawing on collisions
        with ``exclude``."""
        for _ in range(max_attempts):
            u = int(np.searchsorted(self.cdf, rng.random(), side="right"))
            if u not in exclude:
                return u
        raise ConfigError(
            f"could not draw a noise word outside {tuple(exclude)}; "
            "vocabulary too small for this configuration"
        )


@dataclass
class TrainingConfig:
    mode: FilterMode = FilterMode.WSD_FILTER
    backend: Backend = Backend.NS
    dim: int = 50
    window: int = 8
    negatives: int = 25
    lr0: float = 0.05
    epochs: int = 15
    seed: int = 1
    threads: int = 1
    min_count: int = 5
    dynamic_window: bool = True
    subsample: float = 0.0
    strict_wsd: bool = False

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.backend is Backend.NS and self.negatives < 1:
            raise ConfigError(
                f"negative sampling needs negatives >= 1, got {self.negatives}"
            )
        if self.subsample < 0:
            raise ConfigError(f"subsample must be >= 0, got {self.subsample}")


def init_parameters(
    vocab_size: int, dim: int, seed: int, backend: Backend
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded initial parameters: uniform embedding rows, zero outputs."""
    rng = np.random.default_rng(seed)
    bound = INIT_SCALE / dim
    vectors = rng.uniform(-bound, bound, size=(vocab_size, dim))
    rows = vocab_size - 1 if backend is Backend.HS else vocab_size
    theta = np.zeros((rows, dim), dtype=np.float64)
    return vectors, theta


def hs_step(
    example: ContextExample,
    outputs: Sequence[int],
    vectors: np.ndarray,
    theta: np.ndarray,
    codes: HuffmanCode,
    eta: float,
) -> np.ndarray:
    """One hierarchical-softmax update for every output word.

    For output w and code position j the residual is
    g = 1 - d_j - sigmoid(x.theta_j); theta_j moves by eta*g*x right
    away, while eta*g*theta_j (its pre-update value) accumulates into
    the correction applied to every context row at the end.  Returns the
    applied correction.
    """
    x = context_mean(example.context, vectors)
    delta = np.zeros_like(x)
    for w in outputs:
        bits = codes.code(w)
        nodes = codes.path(w)
        for d, p in zip(bits, nodes):
            g = 1.0 - d - sigmoid(x @ theta[p])
            coef = eta * g
            delta += coef * theta[p]
            theta[p] += coef * x
    for c in example.context:
        vectors[c] += delta
    return delta


def ns_step(
    example: ContextExample,
    outputs: Sequence[int],
    vectors: np.ndarray,
    theta: np.ndarray,
    sampler: NoiseSampler,
    k: int,
    eta: float,
    rng,
) -> np.ndarray:
    """One negative-sampling update for every output word.

    Each output w is the positive example of its own batch of k noise
    words, drawn avoiding both the target and w itself; the indicator
    makes g = 1 - sigmoid for w and g = -sigmoid for noise.  Context
    corrections accumulate exactly as in ``hs_step``.
    """
    x = context_mean(example.context, vectors)
    delta = np.zeros_like(x)
    target = example.target
    for w in outputs:
        for s in range(k + 1):
            if s == 0:
                u, label = w, 1.0
            else:
                u, label = sampler.sample(rng, exclude=(target, w)), 0.0
            g = label - sigmoid(x @ theta[u])
            coef = eta * g
            delta += coef * theta[u]
            theta[u] += coef * x
    for c in example.context:
        vectors[c] += delta
    return delta


@dataclass
class PackedLexicon:
    """Lexicon flattened to id arrays for the compiled training kernels.

    Gloss tokens are pre-filtered by the stoplist and the vocabulary
    (out-of-vocabulary gloss words can never overlap an in-vocabulary
    context); synonym lists already exclude the headword itself and
    out-of-vocabulary words.
    """

    sense_off: np.ndarray  # int64[V+1], senses of each word id
    gloss_off: np.ndarray  # int64[S+1] into gloss_ids
    gloss_ids: np.ndarray  # int32
    syn_off: np.ndarray  # int64[S+1] into syn_ids
    syn_ids: np.ndarray  # int32
    union_off: np.ndarray  # int64[V+1] into union_ids
    union_ids: np.ndarray  # int32
    stop_mask: np.ndarray  # uint8[V]
    max_outputs: int
    max_gloss_len: int

    @property
    def has_synonyms(self) -> bool:
        return len(self.syn_ids) > 0 or len(self.union_ids) > 0


def pack_lexicon(
    lexicon: Lexicon | None, vocab: Vocabulary, stoplist: Stoplist
) -> PackedLexicon:
    n = len(vocab)
    sense_off = np.zeros(n + 1, dtype=np.int64)
    gloss_off = [0]
    syn_off = [0]
    union_off = np.zeros(n + 1, dtype=np.int64)
    gloss_ids: list[int] = []
    syn_ids: list[int] = []
    union_ids: list[int] = []
    max_outputs = 1
    max_gloss = 1
    index = vocab.index
    for wid, (word, _) in enumerate(vocab.entries):
        senses = senses_of(lexicon, word) if lexicon is not None else []
        sense_off[wid + 1] = sense_off[wid] + len(senses)
        union_seen: set[int] = set()
        for sense in senses:
            for token in sense.gloss:
                if token in stoplist:
                    continue
                tid = index.get(token)
                if tid is not None:
                    gloss_ids.append(tid)
            gloss_off.append(len(gloss_ids))
            max_gloss = max(max_gloss, gloss_off[-1] - gloss_off[-2])
            n_syn = 0
            for synonym in sense.synonyms:
                if synonym == word:
                    continue
                sid = index.get(synonym)
                if sid is None:
                    continue
                syn_ids.append(sid)
                n_syn += 1
                if sid not in union_seen:
                    union_seen.add(sid)
                    union_ids.append(sid)
            syn_off.append(len(syn_ids))
            max_outputs = max(max_outputs, 1 + n_syn)
        union_off[wid + 1] = len(union_ids)
        max_outputs = max(max_outputs, 1 + len(union_seen))
    stop_mask = np.zeros(n, dtype=np.uint8)
    for wid, (word, _) in enumerate(vocab.entries):
        if word in stoplist:
            stop_mask[wid] = 1
    return PackedLexicon(
        sense_off=sense_off,
        gloss_off=np.array(gloss_off, dtype=np.int64),
        gloss_ids=np.array(gloss_ids, dtype=np.int32),
        syn_off=np.array(syn_off, dtype=np.int64),
        syn_ids=np.array(syn_ids, dtype=np.int32),
        union_off=union_off,
        union_ids=np.array(union_ids, dtype=np.int32),
        stop_mask=stop_mask,
        max_outputs=max_outputs,
        max_gloss_len=max_gloss,
    )


@dataclass
class TrainReport:
    examples: int
    tokens_processed: int
    wall_seconds: float
    tokens_per_sec: float
    mean_abs_gradient: float
    fallback_examples: int
    final_lr: float
    epochs_run: int
    threads: int


@dataclass
class TrainResult:
    vocab: Vocabulary
    vectors: np.ndarray
    outputs: np.ndarray
    huffman: HuffmanCode | None
    report: TrainReport
    config: TrainingConfig


_MODE_CODES = {
    FilterMode.NO_LEXICON: 0,
    FilterMode.NO_FILTER: 1,
    FilterMode.WSD_FILTER: 2,
}

_MASK64 = (1 << 64) - 1


def _worker_seed(seed: int, epoch: int, worker: int) -> int:
    """SplitMix64-style derivation of one worker's RNG state."""
    x = (seed * 0x9E3779B97F4A7C15 + epoch * 0xC2B2AE3D27D4EB4F + worker + 1) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x if x != 0 else 0x9E3779B97F4A7C15


def _check_finite(name: str, array: np.ndarray, when: str) -> None:
    if not np.all(np.isfinite(array)):
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        raise NumericalError(
            f"{bad} non-finite entries in {name} {when}; aborting training"
        )


def train(
    corpus,
    lexicon: Lexicon | None,
    config: TrainingConfig,
    stoplist: Stoplist | None = None,
) -> TrainResult:
    """Run the full training loop and return parameters plus a report.

    ``corpus`` may be a path to a whitespace-tokenized UTF-8 text file or
    an in-memory sequence of tokens.  The learning rate decays linearly
    with the processed-token fraction from lr0 down to lr0 * 1e-4.
    """
    config.validate()
    if isinstance(corpus, (str, Path)):
        vocab = build_vocabulary(read_tokens(corpus), config.min_count)
        encoded = encode(read_tokens(corpus), vocab)
    else:
        tokens = corpus if isinstance(corpus, (list, tuple)) else list(corpus)
        vocab = build_vocabulary(tokens, config.min_count)
        encoded = encode(tokens, vocab)
    return train_encoded(encoded, vocab, lexicon, config, stoplist)


def train_encoded(
    encoded: np.ndarray,
    vocab: Vocabulary,
    lexicon: Lexicon | None,
    config: TrainingConfig,
    stoplist: Stoplist | None = None,
) -> TrainResult:
    """Training loop over an already-encoded corpus."""
    config.validate()
    n_words = len(vocab)
    if config.mode is not FilterMode.NO_LEXICON and lexicon is None:
        raise ConfigError(f"mode {config.mode.value} needs a lexicon")
    if stoplist is None:
        stoplist = Stoplist.default(vocab)
    packed = pack_lexicon(
        lexicon if config.mode is not FilterMode.NO_LEXICON else None, vocab, stoplist
    )

    use_hs = config.backend is Backend.HS
    huffman = None
    if use_hs:
        huffman = build_huffman(vocab)
        code_off, code_bits, code_nodes = huffman.offsets, huffman.bits, huffman.nodes
        noise_cdf = np.ones(1, dtype=np.float64)
    else:
        if n_words < 2:
            raise ConfigError("negative sampling needs a vocabulary of >= 2 words")
        if packed.has_synonyms and n_words < 3:
            raise ConfigError(
                "negative sampling with synonym outputs needs >= 3 words"
            )
        sampler = NoiseSampler(vocab.counts)
        noise_cdf = sampler.cdf
        code_off = np.zeros(1, dtype=np.int64)
        code_bits = np.zeros(0, dtype=np.int8)
        code_nodes = np.zeros(0, dtype=np.int32)

    vectors, theta = init_parameters(n_words, config.dim, config.seed, config.backend)
    encoded = np.ascontiguousarray(encoded, dtype=np.int32)
    total_planned = max(1, config.epochs * len(encoded))
    counter = np.zeros(1, dtype=np.int64)
    totals = np.zeros(5, dtype=np.float64)
    lr_floor = config.lr0 * LR_FLOOR_RATIO
    mode_code = _MODE_CODES[config.mode]

    start_time = time.perf_counter()
    for epoch in range(config.epochs):
        if config.subsample > 0:
            mask_rng = np.random.default_rng((config.seed, epoch, 0x5B))
            stream = encoded[subsample_mask(encoded, vocab, config.subsample, mask_rng)]
        else:
            stream = encoded
        bounds = np.linspace(0, len(stream), config.threads + 1).astype(np.int64)
        worker_stats = [np.zeros(5, dtype=np.float64) for _ in range(config.threads)]

        def run_worker(worker: int) -> None:
            rng_state = np.array(
                [_worker_seed(config.seed, epoch, worker)], dtype=np.uint64
            )
            stats = worker_stats[worker]
            _kernels.train_shard(
                stream,
                int(bounds[worker]),
                int(bounds[worker + 1]),
                vectors,
                theta,
                use_hs,
                config.window,
                config.dynamic_window,
                code_off,
                code_bits,
                code_nodes,
                noise_cdf,
                config.negatives,
                mode_code,
                config.strict_wsd,
                packed.sense_off,
                packed.gloss_off,
                packed.gloss_ids,
                packed.syn_off,
                packed.syn_ids,
                packed.union_off,
                packed.union_ids,
                packed.stop_mask,
                packed.max_outputs,
                packed.max_gloss_len,
                config.lr0,
                lr_floor,
                total_planned,
                counter,
                rng_state,
                stats,
            )

        if config.threads == 1:
            run_worker(0)
        else:
            workers = [
                threading.Thread(target=run_worker, args=(t,))
                for t in range(config.threads)
            ]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
        for stats in worker_stats:
            totals += stats
        if totals[4] != 0:
            raise ConfigError(
                "noise sampling stalled: vocabulary too small for the "
                "requested exclusions"
            )
        _check_finite("vectors", vectors, f"after epoch {epoch + 1}")
        _check_finite("theta", theta, f"after epoch {epoch + 1}")

    wall = time.perf_counter() - start_time
    processed = int(counter[0])
    final_lr = max(config.lr0 * (1.0 - processed / total_planned), lr_floor)
    report = TrainReport(
        examples=int(totals[3]),
        tokens_processed=processed,
        wall_seconds=wall,
        tokens_per_sec=processed / wall if wall > 0 else 0.0,
        mean_abs_gradient=float(totals[0] / totals[1]) if totals[1] else 0.0,
        fallback_examples=int(totals[2]),
        final_lr=final_lr if config.epochs > 0 else config.lr0,
        epochs_run=config.epochs,
        threads=config.threads,
    )
    return TrainResult(
        vocab=vocab,
        vectors=vectors,
        outputs=theta,
        huffman=huffman,
        report=report,
        config=config,
    )
