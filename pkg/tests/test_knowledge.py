"""External-knowledge retrieval: query shortening, sentence selection oracle, pooling, cache."""

import json

import numpy as np
import pytest

from misinfo.embeddings import HashingSentenceEncoder, cosine_similarity
from misinfo.knowledge import (
    ExternalKnowledge,
    KnowledgeCache,
    OfflineSearchClient,
    embed_external_knowledge,
    retrieve_external_knowledge,
    select_sentences,
    shorten_query,
    split_sentences,
)

from conftest import make_tweet


class TestShortenQuery:
    def test_url_only_text_empties(self):
        assert shorten_query("https://only-a-link.example/path") == ""

    def test_stated_rules_by_hand(self):
        text = "COVID vaccine causes infertility http://x.co @user"
        assert shorten_query(text) == "covid vaccine causes infertility"

    def test_stopword_only_text_empties(self):
        assert shorten_query("the of and to was") == ""

    def test_hashtag_words_kept_without_hash(self):
        assert shorten_query("#Vaccine rollout") == "vaccine rollout"

    def test_token_budget_truncates(self):
        text = " ".join(f"word{i}" for i in range(30))
        assert len(shorten_query(text, token_budget=5).split()) == 5


def brute_force_sentence_oracle(tweet_text, documents, encoder, k):
    """Independent oracle: enumerate every sentence, rank by explicit cosine."""
    rows = []
    for doc_rank, (url, text) in enumerate(documents):
        for pos, sent in enumerate(split_sentences(text)):
            tweet_vec = encoder.encode([tweet_text])[0]
            sent_vec = encoder.encode([sent])[0]
            num = float(sum(a * b for a, b in zip(tweet_vec, sent_vec)))
            den = float(sum(a * a for a in tweet_vec) ** 0.5
                        * sum(b * b for b in sent_vec) ** 0.5)
            sim = num / den if den > 0 else 0.0
            rows.append((sim, doc_rank, pos, sent, url))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return [(sent, url, sim) for sim, _, _, sent, url in rows[:k]]


class TestSelectSentences:
    def test_verbatim_sentence_ranks_first_with_similarity_one(self):
        tweet = "garlic water cures the infection"
        docs = [("https://doc.example/1",
                 "Some intro sentence. garlic water cures the infection. More text here.")]
        out = select_sentences(tweet, docs, HashingSentenceEncoder(), k=3)
        assert out[0][0] == "garlic water cures the infection."
        assert out[0][2] == pytest.approx(1.0, abs=1e-9)

    def test_matches_brute_force_oracle_on_thirty_sentences(self):
        rng = np.random.default_rng(3)
        words = ["flu", "mask", "cure", "virus", "water", "heat", "cold", "city",
                 "travel", "doctor", "study", "vaccine"]
        docs = []
        for d in range(3):
            sentences = [
                " ".join(rng.choice(words, size=5)) + "." for _ in range(10)
            ]
            docs.append((f"https://doc.example/{d}", " ".join(sentences)))
        tweet = "mask cure virus study"
        encoder = HashingSentenceEncoder()
        expected = brute_force_sentence_oracle(tweet, docs, encoder, k=10)
        got = select_sentences(tweet, docs, encoder, k=10)
        assert [(s, u) for s, u, _ in got] == [(s, u) for s, u, _ in expected]
        for (_, _, sim_got), (_, _, sim_exp) in zip(got, expected):
            assert sim_got == pytest.approx(sim_exp, abs=1e-12)

    def test_scores_non_increasing(self):
        docs = [("u", "alpha beta. gamma delta. mask cure. epsilon zeta. virus study.")]
        out = select_sentences("mask cure virus", docs, HashingSentenceEncoder(), k=5)
        scores = [s for _, _, s in out]
        assert scores == sorted(scores, reverse=True)

    def test_no_sentences_gives_empty(self):
        assert select_sentences("anything", [], HashingSentenceEncoder(), k=5) == []

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            select_sentences("x", [], HashingSentenceEncoder(), k=0)


class TestEmbedPooling:
    def test_empty_list_pools_to_zero(self):
        encoder = HashingSentenceEncoder(dim=16)
        vec = embed_external_knowledge([], encoder)
        assert vec.shape == (16,)
        assert np.all(vec == 0.0)

    def test_single_sentence_is_identity(self):
        encoder = HashingSentenceEncoder(dim=16)
        sent = "vaccines are safe"
        assert np.array_equal(
            embed_external_knowledge([sent], encoder), encoder.encode([sent])[0]
        )

    def test_two_stub_sentences_mean(self):
        class StubEncoder:
            dim = 2

            def encode(self, texts):
                table = {"a": [1.0, 0.0], "b": [0.0, 1.0]}
                return np.array([table[t] for t in texts])

        vec = embed_external_knowledge(["a", "b"], StubEncoder())
        assert np.allclose(vec, [0.5, 0.5])

    def test_zero_norm_iff_empty(self):
        encoder = HashingSentenceEncoder(dim=16)
        assert np.linalg.norm(embed_external_knowledge([], encoder)) == 0.0
        assert np.linalg.norm(embed_external_knowledge(["real text"], encoder)) > 0.0


def write_corpus(tmp_path, documents, index):
    corpus = tmp_path / "corpus"
    corpus.mkdir(exist_ok=True)
    with (corpus / "documents.jsonl").open("w") as fh:
        for url, text in documents:
            fh.write(json.dumps({"url": url, "text": text}) + "\n")
    (corpus / "index.json").write_text(json.dumps(index))
    return corpus


class TestRetrievalPath:
    def test_offline_client_is_deterministic(self, tmp_path):
        corpus = write_corpus(
            tmp_path,
            [("https://a.example", "first doc text."), ("https://b.example", "second doc.")],
            {"some query": ["https://b.example", "https://a.example"]},
        )
        client = OfflineSearchClient(corpus)
        first = client.search("some query")
        assert first == client.search("some query")
        assert first[0][0] == "https://b.example"
        assert client.search("unknown query") == []

    def test_end_to_end_with_cache(self, tmp_path):
        corpus = write_corpus(
            tmp_path,
            [("https://a.example", "masks help reduce spread. unrelated filler sentence.")],
            {"masks help spread": ["https://a.example"]},
        )
        client = OfflineSearchClient(corpus)
        encoder = HashingSentenceEncoder(dim=16)
        cache = KnowledgeCache(tmp_path / "cache")
        tweet = make_tweet(tweet_id="42", text="masks help with the spread")

        first = retrieve_external_knowledge(tweet, client, encoder, k=2, cache=cache)
        assert first.sentences
        assert first.embedding.shape == (16,)

        # cache hit: a client that explodes proves no second retrieval happens
        class ExplodingClient:
            def search(self, query, max_results=5):
                raise AssertionError("cache should have short-circuited retrieval")

        second = retrieve_external_knowledge(tweet, ExplodingClient(), encoder, cache=cache)
        assert second.tweet_id == first.tweet_id
        assert [tuple(s) for s in second.sentences] == [tuple(s) for s in first.sentences]
        assert np.allclose(second.embedding, first.embedding)

    def test_url_only_tweet_falls_back_to_raw_text(self, tmp_path):
        corpus = write_corpus(
            tmp_path,
            [("https://a.example", "something relevant here.")],
            {"https://weird.example/path": ["https://a.example"]},
        )
        client = OfflineSearchClient(corpus)
        tweet = make_tweet(tweet_id="9", text="https://weird.example/path")
        knowledge = retrieve_external_knowledge(
            tweet, client, HashingSentenceEncoder(dim=8), k=2
        )
        assert knowledge.sentences  # raw-text query reached the index

    def test_descending_invariant_enforced(self):
        with pytest.raises(ValueError):
            ExternalKnowledge(
                tweet_id="x",
                sentences=[("low", "u", 0.1), ("high", "u", 0.9)],
                embedding=np.zeros(2),
            )
