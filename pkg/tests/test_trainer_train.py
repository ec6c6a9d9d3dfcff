import numpy as np
import pytest

from lexcbow import _kernels
from lexcbow.corpus import ContextExample, build_vocabulary, encode
from lexcbow.errors import ConfigError, NumericalError
from lexcbow.lexicon import Lexicon, load_lexicon
from lexcbow.trainer import (
    Backend,
    NoiseSampler,
    TrainingConfig,
    _check_finite,
    _worker_seed,
    build_huffman,
    hs_step,
    init_parameters,
    ns_step,
    train,
    train_encoded,
)
from lexcbow.wsd import FilterMode, Stoplist, paraphrase_set

from conftest import COBBLER_LEXICON, make_corpus

M64 = (1 << 64) - 1


class XorShift64Star:
    """Pure-Python mirror of the kernel RNG, for reference-loop tests."""

    def __init__(self, state):
        self.state = state & M64

    def _next(self):
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & M64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & M64

    def random(self):
        return (self._next() >> 11) * 2.0**-53

    def below(self, n):
        return self._next() % n


class TestKernelRngMirror:
    def test_raw_stream_matches(self):
        state = np.array([987654321], dtype=np.uint64)
        mirror = XorShift64Star(987654321)
        for _ in range(200):
            assert int(_kernels.rng_next(state)) == mirror._next()

    def test_uniform_stream_matches(self):
        state = np.array([42], dtype=np.uint64)
        mirror = XorShift64Star(42)
        for _ in range(200):
            assert float(_kernels.rng_uniform(state)) == mirror.random()

    def test_below_matches(self):
        state = np.array([7], dtype=np.uint64)
        mirror = XorShift64Star(7)
        for _ in range(200):
            assert int(_kernels.rng_below(state, 8)) == mirror.below(8)

    def test_sample_cdf_matches_searchsorted(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cdf = np.sort(rng.random(rng.integers(1, 40)))
            cdf[-1] = 1.0
            for r in list(rng.random(20)) + [0.0, float(cdf[0])]:
                assert _kernels.sample_cdf(cdf, r) == np.searchsorted(cdf, r, side="right")


def lexicon_fixture(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text(COBBLER_LEXICON, encoding="utf-8")
    return load_lexicon(path)


def themed_corpus(n_tokens, seed):
    words = [
        "the", "shoes", "pie", "fruit", "cobbler", "shoemaker", "crumble",
        "dance", "waltz", "jig", "repairs", "baked", "music", "party",
    ]
    weights = np.array([20, 6, 5, 5, 5, 4, 4, 4, 3, 3, 2, 2, 2, 2], dtype=float)
    rng = np.random.default_rng(seed)
    return [words[i] for i in rng.choice(len(words), size=n_tokens, p=weights / weights.sum())]


def reference_train(encoded, vocab, lexicon, config, stoplist):
    """Slow single-threaded re-implementation built from the step functions.

    Consumes randomness in the same order as the compiled kernel (one
    window draw per position, then per-output noise draws), so the two
    paths follow the same integer trajectory.
    """
    vectors, theta = init_parameters(len(vocab), config.dim, config.seed, config.backend)
    if config.backend is Backend.HS:
        huffman = build_huffman(vocab)
        sampler = None
    else:
        huffman = None
        sampler = NoiseSampler(vocab.counts)
    total_planned = max(1, config.epochs * len(encoded))
    lr_floor = config.lr0 * 1e-4
    counter = 0
    examples = 0
    n = len(encoded)
    for epoch in range(config.epochs):
        rng = XorShift64Star(_worker_seed(config.seed, epoch, 0))
        for i in range(n):
            counter += 1
            lr = max(config.lr0 * (1.0 - counter / total_planned), lr_floor)
            b = 1 + rng.below(config.window) if config.dynamic_window else config.window
            lo, hi = max(0, i - b), min(n - 1, i + b)
            context = [int(encoded[j]) for j in range(lo, hi + 1) if j != i]
            if not context:
                continue
            examples += 1
            target = int(encoded[i])
            outputs = [target] + paraphrase_set(
                vocab.word(target),
                [vocab.word(c) for c in context],
                config.mode,
                lexicon,
                vocab,
                stoplist,
                strict=config.strict_wsd,
            )
            example = ContextExample(target=target, context=context, position=i)
            if config.backend is Backend.HS:
                hs_step(example, outputs, vectors, theta, huffman, lr)
            else:
                ns_step(example, outputs, vectors, theta, sampler, config.negatives, lr, rng)
    return vectors, theta, examples


class TestKernelMatchesReferenceSteps:
    @pytest.mark.parametrize("backend", [Backend.NS, Backend.HS])
    @pytest.mark.parametrize(
        "mode", [FilterMode.NO_LEXICON, FilterMode.NO_FILTER, FilterMode.WSD_FILTER]
    )
    def test_compiled_loop_equals_python_steps(self, backend, mode, tmp_path):
        tokens = themed_corpus(400, seed=8)
        vocab = build_vocabulary(tokens, min_count=1)
        encoded = encode(tokens, vocab)
        lexicon = lexicon_fixture(tmp_path) if mode is not FilterMode.NO_LEXICON else None
        # a small explicit stoplist: the default top-30 rule would stop every
        # word of a toy vocabulary and leave only the fallback path exercised
        stoplist = Stoplist(words=("the",), min_len=3)
        config = TrainingConfig(
            mode=mode,
            backend=backend,
            dim=6,
            window=3,
            negatives=3,
            lr0=0.05,
            epochs=2,
            seed=11,
            min_count=1,
        )
        result = train_encoded(encoded, vocab, lexicon, config, stoplist=stoplist)
        ref_vectors, ref_theta, ref_examples = reference_train(
            encoded, vocab, lexicon, config, stoplist
        )
        assert result.report.examples == ref_examples
        np.testing.assert_allclose(result.vectors, ref_vectors, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(result.outputs, ref_theta, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("backend", [Backend.NS, Backend.HS])
    @pytest.mark.parametrize("mode", [FilterMode.NO_FILTER, FilterMode.WSD_FILTER])
    def test_equivalence_with_randomized_lexicon(self, backend, mode, tmp_path):
        # messy sense inventory: varying sense counts, out-of-vocabulary
        # synonyms and glosses, senses pointing back at the headword
        rng = np.random.default_rng(31)
        tokens = make_corpus(500, n_types=40, seed=31)
        vocab = build_vocabulary(tokens, min_count=1)
        encoded = encode(tokens, vocab)
        pool = vocab.words + ["oovword", "another"]
        lines = []
        for lemma in rng.choice(vocab.words, size=25, replace=False):
            for s in range(int(rng.integers(1, 5))):
                synonyms = ",".join(
                    rng.choice(pool + [lemma], size=rng.integers(1, 4), replace=False)
                )
                gloss = " ".join(rng.choice(pool, size=rng.integers(1, 7)))
                lines.append(f"{lemma}\t{lemma}.n.{s:02d}\t{synonyms}\t{gloss}")
        path = tmp_path / "random_lex.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        lexicon = load_lexicon(path)
        stoplist = Stoplist(words=set(vocab.words[:3]), min_len=2)
        config = TrainingConfig(
            mode=mode, backend=backend, dim=5, window=4, negatives=2,
            lr0=0.1, epochs=1, seed=17, min_count=1,
        )
        result = train_encoded(encoded, vocab, lexicon, config, stoplist=stoplist)
        ref_vectors, ref_theta, ref_examples = reference_train(
            encoded, vocab, lexicon, config, stoplist
        )
        assert result.report.examples == ref_examples
        np.testing.assert_allclose(result.vectors, ref_vectors, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(result.outputs, ref_theta, rtol=1e-9, atol=1e-12)


class TestTrain:
    def test_zero_epochs_leaves_init_untouched(self):
        tokens = make_corpus(300, seed=1)
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=12, window=2,
            negatives=2, epochs=0, seed=21, min_count=1,
        )
        result = train(tokens, None, config)
        expected_vectors, expected_theta = init_parameters(
            len(result.vocab), 12, 21, Backend.NS
        )
        np.testing.assert_array_equal(result.vectors, expected_vectors)
        np.testing.assert_array_equal(result.outputs, expected_theta)

    @pytest.mark.parametrize("backend", [Backend.NS, Backend.HS])
    def test_single_thread_determinism(self, backend):
        tokens = make_corpus(500, seed=2)
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=backend, dim=8, window=3,
            negatives=3, epochs=2, seed=5, min_count=1,
        )
        a = train(tokens, None, config)
        b = train(tokens, None, config)
        assert np.array_equal(a.vectors, b.vectors)
        assert np.array_equal(a.outputs, b.outputs)
        c = train(tokens, None, TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=backend, dim=8, window=3,
            negatives=3, epochs=2, seed=6, min_count=1,
        ))
        assert not np.array_equal(a.vectors, c.vectors)

    def test_empty_lexicon_modes_collapse(self):
        tokens = make_corpus(400, seed=3)
        results = []
        for mode in FilterMode:
            config = TrainingConfig(
                mode=mode, backend=Backend.NS, dim=8, window=3, negatives=3,
                epochs=1, seed=9, min_count=1,
            )
            lexicon = None if mode is FilterMode.NO_LEXICON else Lexicon()
            results.append(train(tokens, lexicon, config))
        for other in results[1:]:
            assert np.array_equal(results[0].vectors, other.vectors)
            assert np.array_equal(results[0].outputs, other.outputs)

    def test_strict_wsd_with_alien_glosses_equals_plain_cbow(self, tmp_path):
        # glosses never overlap the corpus, so strict mode drops every
        # synonym and the trajectory collapses to the no-lexicon one
        tokens = themed_corpus(300, seed=4)
        path = tmp_path / "lex.tsv"
        path.write_text(
            "cobbler\tc.n.01\tshoemaker\tzzz qqq xxx\n"
            "cobbler\tc.n.02\tcrumble\tyyy www vvv\n",
            encoding="utf-8",
        )
        lexicon = load_lexicon(path)
        base = dict(backend=Backend.NS, dim=6, window=2, negatives=2,
                    epochs=1, seed=13, min_count=1)
        strict = train(tokens, lexicon, TrainingConfig(
            mode=FilterMode.WSD_FILTER, strict_wsd=True, **base))
        plain = train(tokens, None, TrainingConfig(
            mode=FilterMode.NO_LEXICON, **base))
        assert np.array_equal(strict.vectors, plain.vectors)
        assert strict.report.fallback_examples > 0

    def test_fallback_examples_counted(self, tmp_path):
        tokens = themed_corpus(300, seed=4)
        lexicon = lexicon_fixture(tmp_path)
        config = TrainingConfig(
            mode=FilterMode.WSD_FILTER, backend=Backend.NS, dim=6, window=2,
            negatives=2, epochs=1, seed=13, min_count=1,
        )
        result = train(tokens, lexicon, config)
        assert result.report.fallback_examples > 0
        assert result.report.fallback_examples <= result.report.examples

    def test_report_accounting(self):
        tokens = make_corpus(250, seed=6)
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=6, window=2,
            negatives=2, epochs=3, seed=1, min_count=1,
        )
        result = train(tokens, None, config)
        assert result.report.tokens_processed == 3 * len(encode(tokens, result.vocab))
        assert result.report.examples == result.report.tokens_processed
        assert result.report.tokens_per_sec > 0
        assert 0 < result.report.mean_abs_gradient <= 1.0
        assert result.report.final_lr == config.lr0 * 1e-4

    def test_train_from_file_matches_in_memory(self, tmp_path):
        tokens = make_corpus(300, seed=7)
        path = tmp_path / "corpus.txt"
        path.write_text(" ".join(tokens), encoding="utf-8")
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=6, window=2,
            negatives=2, epochs=1, seed=2, min_count=1,
        )
        from_file = train(path, None, config)
        from_memory = train(tokens, None, config)
        assert np.array_equal(from_file.vectors, from_memory.vectors)
        assert from_file.vocab.entries == from_memory.vocab.entries

    @pytest.mark.parametrize("backend", [Backend.NS, Backend.HS])
    def test_two_threads_produce_finite_parameters(self, backend):
        tokens = make_corpus(600, seed=8)
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=backend, dim=6, window=2,
            negatives=2, epochs=1, seed=3, threads=2, min_count=1,
        )
        result = train(tokens, None, config)
        assert np.isfinite(result.vectors).all()
        assert np.isfinite(result.outputs).all()
        assert result.report.examples > 0

    def test_subsampling_shrinks_stream_deterministically(self):
        tokens = make_corpus(2000, seed=9)
        base = dict(mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=4,
                    window=2, negatives=2, epochs=1, seed=4, min_count=1)
        full = train(tokens, None, TrainingConfig(**base))
        thinned_a = train(tokens, None, TrainingConfig(subsample=1e-3, **base))
        thinned_b = train(tokens, None, TrainingConfig(subsample=1e-3, **base))
        assert thinned_a.report.tokens_processed < full.report.tokens_processed
        assert np.array_equal(thinned_a.vectors, thinned_b.vectors)

    def test_exploding_learning_rate_aborts(self):
        tokens = make_corpus(300, seed=10)
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=4, window=2,
            negatives=2, epochs=1, seed=5, lr0=1e100, min_count=1,
        )
        with pytest.raises(NumericalError):
            train(tokens, None, config)

    def test_check_finite_reports_counts(self):
        bad = np.array([[1.0, np.nan], [np.inf, 2.0]])
        with pytest.raises(NumericalError, match="2 non-finite"):
            _check_finite("vectors", bad, "after epoch 1")


class TestLearningQuality:
    """Small-scale checks that the loop actually learns structure."""

    def test_cbow_learns_topic_cooccurrence(self):
        rng = np.random.default_rng(5)
        food = ["pie", "fruit", "baked", "sweet", "dish", "sugar", "crust", "oven"]
        music = ["music", "dance", "song", "tune", "band", "drum", "melody", "stage"]
        tokens = []
        for _ in range(700):
            tokens.extend([food[i] for i in rng.integers(0, 8, size=6)])
        for _ in range(700):
            tokens.extend([music[i] for i in rng.integers(0, 8, size=6)])
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=16, window=4,
            negatives=5, epochs=3, seed=2, min_count=1,
        )
        result = train(tokens, None, config)
        unit = result.vectors / np.linalg.norm(result.vectors, axis=1)[:, None]
        idx = result.vocab.index
        intra = np.mean([
            unit[idx[a]] @ unit[idx[b]] for a in food for b in food if a != b
        ])
        cross = np.mean([unit[idx[a]] @ unit[idx[b]] for a in food for b in music])
        assert intra > cross + 0.5

    def test_synonym_prediction_pulls_vectors_together(self, tmp_path):
        # "cobbler" and "crumble" never share a context; only the lexicon
        # links them, so the gap below is the synonym objective at work
        rng = np.random.default_rng(5)
        food = ["pie", "fruit", "baked", "sweet", "dish", "sugar", "crust", "oven"]
        music = ["music", "dance", "song", "tune", "band", "drum", "melody", "stage"]
        tokens = []
        for _ in range(700):
            tokens.extend([food[i] for i in rng.integers(0, 8, size=6)] + ["cobbler"])
        for _ in range(700):
            tokens.extend([music[i] for i in rng.integers(0, 8, size=6)] + ["crumble"])
        path = tmp_path / "lex.tsv"
        path.write_text(
            "cobbler\tcobbler.n.01\tcrumble\ta fruit dessert baked in a dish\n",
            encoding="utf-8",
        )
        lexicon = load_lexicon(path)
        base = dict(backend=Backend.NS, dim=16, window=4, negatives=5,
                    epochs=3, seed=2, min_count=1)
        stoplist = Stoplist(min_len=3)
        plain = train(tokens, None, TrainingConfig(mode=FilterMode.NO_LEXICON, **base))
        wsd = train(tokens, lexicon, TrainingConfig(mode=FilterMode.WSD_FILTER, **base),
                    stoplist=stoplist)

        def cos(result, a, b):
            va = result.vectors[result.vocab.index[a]]
            vb = result.vectors[result.vocab.index[b]]
            return float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))

        assert cos(wsd, "cobbler", "crumble") > cos(plain, "cobbler", "crumble") + 0.1
        # the gloss shares fruit/baked/dish with cobbler's contexts, so most
        # occurrences select the sense by overlap rather than by fallback
        # (narrow dynamic windows still miss the gloss words now and then)
        assert wsd.report.fallback_examples < 700 * 3 * 0.4


class TestParameterSanity:
    def test_fuzzed_short_runs_never_produce_non_finite_values(self, tmp_path):
        lexicon = lexicon_fixture(tmp_path)
        rng = np.random.default_rng(99)
        for trial in range(12):
            tokens = themed_corpus(int(rng.integers(30, 300)), seed=trial)
            mode = list(FilterMode)[trial % 3]
            backend = [Backend.NS, Backend.HS][trial % 2]
            config = TrainingConfig(
                mode=mode,
                backend=backend,
                dim=int(rng.integers(2, 12)),
                window=int(rng.integers(1, 6)),
                negatives=int(rng.integers(1, 6)),
                lr0=float(rng.uniform(0.01, 0.5)),
                epochs=int(rng.integers(1, 4)),
                seed=trial,
                min_count=1,
            )
            lex = None if mode is FilterMode.NO_LEXICON else lexicon
            result = train(tokens, lex, config)
            assert np.isfinite(result.vectors).all()
            assert np.isfinite(result.outputs).all()


class TestConfigValidation:
    def test_ns_needs_at_least_one_negative(self):
        with pytest.raises(ConfigError):
            TrainingConfig(backend=Backend.NS, negatives=0).validate()

    def test_bad_dimensions_rejected(self):
        for kwargs in (
            dict(dim=0), dict(window=0), dict(lr0=0.0), dict(epochs=-1),
            dict(threads=0), dict(subsample=-1.0),
        ):
            with pytest.raises(ConfigError):
                TrainingConfig(**kwargs).validate()

    def test_lexicon_mode_without_lexicon_rejected(self):
        config = TrainingConfig(
            mode=FilterMode.WSD_FILTER, backend=Backend.NS, dim=4, window=2,
            negatives=2, epochs=1, min_count=1,
        )
        with pytest.raises(ConfigError):
            train(make_corpus(50), None, config)

    def test_single_word_vocab_rejected(self):
        config = TrainingConfig(
            mode=FilterMode.NO_LEXICON, backend=Backend.NS, dim=4, window=2,
            negatives=2, epochs=1, min_count=1,
        )
        with pytest.raises(ConfigError):
            train(["solo"] * 20, None, config)

    def test_tiny_vocab_with_synonyms_rejected(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("aa\taa.n.01\tbb\tgloss words\n", encoding="utf-8")
        lexicon = load_lexicon(path)
        config = TrainingConfig(
            mode=FilterMode.NO_FILTER, backend=Backend.NS, dim=4, window=2,
            negatives=2, epochs=1, min_count=1,
        )
        with pytest.raises(ConfigError):
            train(["aa", "bb"] * 20, lexicon, config)
