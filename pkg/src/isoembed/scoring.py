"""Relevance scoring over token embeddings and candidate re-ranking.

Two aggregators:

* colbert: sum over query tokens of the max cosine against any doc token
  (late interaction; requires token-level vectors, so post-processing must
  be token-wise)
* repbert: cosine between the mean-pooled query and document vectors

A post-processor (whitening transform or trained flow) can be applied
token-wise (transform every token row, then score) or sequence-wise (pool
first, transform the pooled vectors, then cosine).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .flows import FlowModel, apply_flow
from .store import EmbeddingCorpus, KIND_DOCUMENT, KIND_QUERY
from .whitening import WhiteningTransform, apply_whitening

SCORER_COLBERT = "colbert"
SCORER_REPBERT = "repbert"
TOKEN_WISE = "token_wise"
SEQUENCE_WISE = "sequence_wise"


def _unit_rows(matrix: np.ndarray, context: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"{context}: token row {zero[0]} has zero norm")
    return matrix / norms[:, None]


def colbert_score(query_tokens, doc_tokens) -> float:
    """Sum over query tokens of the best doc-token cosine."""
    q = _unit_rows(np.atleast_2d(np.asarray(query_tokens, dtype=np.float64)), "query")
    d = _unit_rows(np.atleast_2d(np.asarray(doc_tokens, dtype=np.float64)), "doc")
    return float((q @ d.T).max(axis=1).sum())


def repbert_score(query_tokens, doc_tokens) -> float:
    """Cosine between the token means of query and document."""
    q = np.atleast_2d(np.asarray(query_tokens, dtype=np.float64)).mean(axis=0)
    d = np.atleast_2d(np.asarray(doc_tokens, dtype=np.float64)).mean(axis=0)
    qn, dn = np.linalg.norm(q), np.linalg.norm(d)
    if qn == 0.0:
        raise ValueError("pooled query vector has zero norm")
    if dn == 0.0:
        raise ValueError("pooled doc vector has zero norm")
    return float(q @ d / (qn * dn))


def _run_transform(transform, matrix: np.ndarray) -> np.ndarray:
    if transform is None:
        return matrix
    if isinstance(transform, WhiteningTransform):
        return apply_whitening(transform, matrix)
    return apply_flow(transform, matrix)


@dataclass(frozen=True)
class PostProcessor:
    """Optional representation transform plus its placement granularity.

    By default one fitted transform handles queries and documents alike;
    ``doc_transform`` switches documents to their own separately fitted
    transform (queries keep ``transform``).
    """

    transform: WhiteningTransform | FlowModel | None
    granularity: str = TOKEN_WISE
    doc_transform: WhiteningTransform | FlowModel | None = None

    def __post_init__(self):
        if self.granularity not in (TOKEN_WISE, SEQUENCE_WISE):
            raise ConfigurationError(f"unknown granularity {self.granularity!r}")

    @property
    def is_identity(self) -> bool:
        return self.transform is None and self.doc_transform is None

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return _run_transform(self.transform, matrix)

    def apply_query(self, matrix: np.ndarray) -> np.ndarray:
        return _run_transform(self.transform, matrix)

    def apply_doc(self, matrix: np.ndarray) -> np.ndarray:
        if self.doc_transform is not None:
            return _run_transform(self.doc_transform, matrix)
        return _run_transform(self.transform, matrix)


IDENTITY = PostProcessor(None)


@dataclass(frozen=True)
class ScoredCandidate:
    doc_id: str
    score: float
    rank: int


def _score_fn(scorer: str):
    if scorer == SCORER_COLBERT:
        return colbert_score
    if scorer == SCORER_REPBERT:
        return repbert_score
    raise ConfigurationError(f"unknown scorer {scorer!r}")


def rank_candidates(
    corpus: EmbeddingCorpus,
    query_id: str,
    candidate_doc_ids: list[str],
    scorer: str = SCORER_REPBERT,
    post: PostProcessor = IDENTITY,
) -> list[ScoredCandidate]:
    """Score and order a candidate list for one query.

    Token-wise placement transforms every token row of the query and the
    candidates before scoring; sequence-wise pools each sequence to a single
    vector, transforms the pooled vectors, and compares by cosine. Ties are
    broken by doc_id ascending so rankings are reproducible.
    """
    score = _score_fn(scorer)
    if scorer == SCORER_COLBERT and post.granularity != TOKEN_WISE:
        raise ConfigurationError(
            "colbert scoring interacts at the token level; sequence_wise "
            "post-processing is not applicable"
        )
    query = corpus.find(KIND_QUERY, query_id)
    docs = [corpus.find(KIND_DOCUMENT, doc_id) for doc_id in candidate_doc_ids]

    if post.granularity == TOKEN_WISE:
        query_tokens = post.apply_query(corpus.tokens(query))
        doc_tokens = {doc.id: post.apply_doc(corpus.tokens(doc)) for doc in docs}
        scored = [(doc.id, score(query_tokens, doc_tokens[doc.id])) for doc in docs]
    else:
        q_vec = post.apply_query(
            corpus.tokens(query).mean(axis=0, keepdims=True)
        )[0]
        pooled_docs = post.apply_doc(
            np.stack([corpus.tokens(doc).mean(axis=0) for doc in docs])
        )
        scored = [
            (doc.id, repbert_score(q_vec[None, :], pooled_docs[i][None, :]))
            for i, doc in enumerate(docs)
        ]

    scored.sort(key=lambda item: (-item[1], item[0]))
    return [
        ScoredCandidate(doc_id=doc_id, score=value, rank=i + 1)
        for i, (doc_id, value) in enumerate(scored)
    ]
