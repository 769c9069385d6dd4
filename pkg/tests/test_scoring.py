"""Relevance aggregators against naive oracles, and re-ranking contracts."""

import numpy as np
import pytest

from isoembed import (
    EmbeddingCorpus,
    PostProcessor,
    SequenceRecord,
    WhiteningTransform,
    apply_whitening,
    colbert_score,
    fit_whitening,
    rank_candidates,
    repbert_score,
)
from isoembed.errors import ConfigurationError
from isoembed.scoring import SEQUENCE_WISE, TOKEN_WISE
from isoembed.store import KIND_DOCUMENT, KIND_QUERY


def cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def colbert_oracle(query_tokens, doc_tokens) -> float:
    """Literal enumeration over every (query token, doc token) pair."""
    total = 0.0
    for q in query_tokens:
        total += max(cosine(q, d) for d in doc_tokens)
    return total


def repbert_oracle(query_tokens, doc_tokens) -> float:
    q = np.zeros(len(query_tokens[0]))
    for row in query_tokens:
        q += row
    q /= len(query_tokens)
    d = np.zeros(len(doc_tokens[0]))
    for row in doc_tokens:
        d += row
    d /= len(doc_tokens)
    return cosine(q, d)


class TestColbertScore:
    def test_exact_match_token(self):
        assert colbert_score([[1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_two_query_tokens_anchor(self):
        got = colbert_score([[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0]])
        assert got == pytest.approx(np.sqrt(2.0), abs=1e-6)

    def test_doc_order_and_scaling_invariance(self):
        rng = np.random.default_rng(20)
        q = rng.normal(size=(3, 5))
        d = rng.normal(size=(4, 5))
        base = colbert_score(q, d)
        assert colbert_score(q, d[::-1]) == pytest.approx(base, abs=1e-12)
        scales = rng.uniform(0.5, 4.0, size=(4, 1))
        assert colbert_score(q, d * scales) == pytest.approx(base, abs=1e-12)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            q = rng.normal(size=(rng.integers(1, 6), 4))
            d = rng.normal(size=(rng.integers(1, 7), 4))
            assert colbert_score(q, d) == pytest.approx(colbert_oracle(q, d), abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            q = rng.normal(size=(3, 4))
            d = rng.normal(size=(5, 4))
            score = colbert_score(q, d)
            assert -3.0 <= score <= 3.0

    def test_zero_norm_token_rejected(self):
        with pytest.raises(ValueError, match="zero norm"):
            colbert_score([[0.0, 0.0]], [[1.0, 0.0]])


class TestRepbertScore:
    def test_parallel_means(self):
        assert repbert_score([[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0]]) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_orthogonal(self):
        assert repbert_score([[1.0, 0.0]], [[0.0, 1.0]]) == pytest.approx(0.0, abs=1e-6)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            q = rng.normal(size=(3, 6))
            d = rng.normal(size=(4, 6))
            assert repbert_score(q, d) == pytest.approx(repbert_oracle(q, d), abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(24)
        for _ in range(20):
            score = repbert_score(rng.normal(size=(2, 3)), rng.normal(size=(3, 3)))
            assert -1.0 <= score <= 1.0

    def test_zero_norm_pool_rejected(self):
        with pytest.raises(ValueError, match="zero norm"):
            repbert_score([[1.0, 0.0], [-1.0, 0.0]], [[1.0, 1.0]])


def corpus_with(query_tokens, doc_token_map) -> EmbeddingCorpus:
    rows = [np.atleast_2d(np.asarray(query_tokens, dtype=float))]
    sequences = [SequenceRecord("q", KIND_QUERY, 0, rows[0].shape[0])]
    offset = rows[0].shape[0]
    for doc_id, tokens in doc_token_map.items():
        block = np.atleast_2d(np.asarray(tokens, dtype=float))
        sequences.append(SequenceRecord(doc_id, KIND_DOCUMENT, offset, block.shape[0]))
        rows.append(block)
        offset += block.shape[0]
    return EmbeddingCorpus(np.vstack(rows), tuple(sequences))


def identity_whitening(dim: int) -> WhiteningTransform:
    return WhiteningTransform(
        mu=np.zeros(dim),
        rotation=np.eye(dim),
        eigenvalues=np.ones(dim),
        eps_rel=1e-8,
        fitted_on=2,
        floor_mask=np.zeros(dim, dtype=bool),
    )


class TestRankCandidates:
    def test_ordering_matches_pairwise_scores(self):
        corpus = corpus_with(
            [[1.0, 0.0]],
            {"a": [[0.8, 0.6]], "b": [[1.0, 0.1]], "c": [[0.0, 1.0]]},
        )
        ranked = rank_candidates(corpus, "q", ["a", "b", "c"], scorer="repbert")
        assert [c.doc_id for c in ranked] == ["b", "a", "c"]
        assert [c.rank for c in ranked] == [1, 2, 3]
        assert ranked[0].score >= ranked[1].score >= ranked[2].score

    def test_identity_post_processor_preserves_ranking(self):
        rng = np.random.default_rng(25)
        docs = {f"d{i}": rng.normal(size=(3, 4)) for i in range(6)}
        corpus = corpus_with(rng.normal(size=(2, 4)), docs)
        plain = rank_candidates(corpus, "q", sorted(docs), scorer="colbert")
        post = PostProcessor(identity_whitening(4), TOKEN_WISE)
        identity = rank_candidates(corpus, "q", sorted(docs), scorer="colbert", post=post)
        assert [c.doc_id for c in plain] == [c.doc_id for c in identity]
        for a, b in zip(plain, identity):
            assert b.score == pytest.approx(a.score, abs=1e-12)

    def test_equal_scores_tie_break_by_doc_id(self):
        corpus = corpus_with(
            [[1.0, 0.0]],
            {"zz": [[2.0, 0.0]], "aa": [[3.0, 0.0]], "mm": [[0.0, 1.0]]},
        )
        ranked = rank_candidates(corpus, "q", ["zz", "aa", "mm"], scorer="repbert")
        assert [c.doc_id for c in ranked] == ["aa", "zz", "mm"]

    def test_colbert_sequence_wise_rejected(self):
        corpus = corpus_with([[1.0, 0.0]], {"a": [[1.0, 0.0]]})
        with pytest.raises(ConfigurationError):
            rank_candidates(
                corpus,
                "q",
                ["a"],
                scorer="colbert",
                post=PostProcessor(None, SEQUENCE_WISE),
            )

    def test_unknown_ids_rejected(self):
        corpus = corpus_with([[1.0, 0.0]], {"a": [[1.0, 0.0]]})
        with pytest.raises(KeyError):
            rank_candidates(corpus, "missing", ["a"])
        with pytest.raises(KeyError):
            rank_candidates(corpus, "q", ["missing"])

    def test_token_wise_whitened_repbert_matches_oracle(self):
        """Transform-the-tokens-then-pool must equal an independently
        computed cosine of whitened-token means."""
        rng = np.random.default_rng(26)
        docs = {f"d{i}": rng.normal(size=(4, 5)) + 1.5 for i in range(4)}
        corpus = corpus_with(rng.normal(size=(3, 5)) + 1.5, docs)
        transform = fit_whitening(corpus.matrix)
        post = PostProcessor(transform, TOKEN_WISE)
        ranked = rank_candidates(corpus, "q", sorted(docs), scorer="repbert", post=post)
        q_white = apply_whitening(transform, corpus.tokens(corpus.find(KIND_QUERY, "q")))
        for candidate in ranked:
            doc_seq = corpus.find(KIND_DOCUMENT, candidate.doc_id)
            d_white = apply_whitening(transform, corpus.tokens(doc_seq))
            expected = cosine(q_white.mean(axis=0), d_white.mean(axis=0))
            assert candidate.score == pytest.approx(expected, abs=1e-12)

    def test_sequence_wise_pools_before_transform(self):
        """Pool-then-transform differs from transform-then-pool whenever
        the map has a nonzero offset; verify the sequence-wise path against
        a direct computation."""
        rng = np.random.default_rng(27)
        docs = {f"d{i}": rng.normal(size=(3, 4)) + 2.0 for i in range(3)}
        corpus = corpus_with(rng.normal(size=(2, 4)) + 2.0, docs)
        transform = fit_whitening(corpus.matrix)
        post = PostProcessor(transform, SEQUENCE_WISE)
        ranked = rank_candidates(corpus, "q", sorted(docs), scorer="repbert", post=post)
        pooled_q = corpus.tokens(corpus.find(KIND_QUERY, "q")).mean(axis=0)
        zq = apply_whitening(transform, pooled_q[None, :])[0]
        for candidate in ranked:
            doc_seq = corpus.find(KIND_DOCUMENT, candidate.doc_id)
            pooled_d = corpus.tokens(doc_seq).mean(axis=0)
            zd = apply_whitening(transform, pooled_d[None, :])[0]
            assert candidate.score == pytest.approx(cosine(zq, zd), abs=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(28)
        docs = {f"d{i}": rng.normal(size=(2, 3)) for i in range(5)}
        corpus = corpus_with(rng.normal(size=(2, 3)), docs)
        first = rank_candidates(corpus, "q", sorted(docs), scorer="colbert")
        second = rank_candidates(corpus, "q", sorted(docs), scorer="colbert")
        assert first == second

    def test_separate_document_transform(self):
        """With doc_transform set, queries and documents go through their
        own fitted maps."""
        rng = np.random.default_rng(29)
        docs = {f"d{i}": rng.normal(size=(3, 4)) + 1.0 for i in range(3)}
        corpus = corpus_with(rng.normal(size=(2, 4)) - 1.0, docs)
        from isoembed.store import KIND_DOCUMENT, KIND_QUERY, rows_of_kind

        t_query = fit_whitening(np.vstack([rows_of_kind(corpus, KIND_QUERY)] * 2))
        t_doc = fit_whitening(rows_of_kind(corpus, KIND_DOCUMENT))
        post = PostProcessor(t_query, TOKEN_WISE, doc_transform=t_doc)
        ranked = rank_candidates(corpus, "q", sorted(docs), scorer="repbert", post=post)
        q_tokens = apply_whitening(t_query, corpus.tokens(corpus.find(KIND_QUERY, "q")))
        for candidate in ranked:
            d_tokens = apply_whitening(
                t_doc, corpus.tokens(corpus.find(KIND_DOCUMENT, candidate.doc_id))
            )
            expected = cosine(q_tokens.mean(axis=0), d_tokens.mean(axis=0))
            assert candidate.score == pytest.approx(expected, abs=1e-12)
