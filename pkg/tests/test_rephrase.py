"""Prompt building, overlap measurement, endpoint error surface."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgtd import mock_endpoint, rephrase
from mgtd.corpus import Corpus, Document
from mgtd.errors import (
    AuthFailure,
    EmptyText,
    EndpointUnreachable,
    MissingPlaceholder,
    RateLimited,
)
from mgtd.mock_endpoint import (
    MockEndpoint,
    echo_source,
    extract_source,
    fixed,
    partial_echo,
    rate_limited_then,
    unauthorized,
)
from mgtd.rephrase import (
    TEMPLATE_IDS,
    AuditLog,
    CompletionEndpointConfig,
    RephraseRequest,
    build_prompt,
    generate_rephrased,
    overlap_ratio,
    rephrase_corpus,
    robustness_eval,
)

pytestmark = pytest.mark.usefixtures("fast_backoff")


@pytest.fixture
def fast_backoff(monkeypatch):
    monkeypatch.setattr(rephrase, "BACKOFF_BASE_SECONDS", 0.01)


def endpoint_for(mock: MockEndpoint) -> CompletionEndpointConfig:
    return CompletionEndpointConfig(base_url=mock.url, timeout=5.0)


class TestOverlapRatio:
    def test_identical_is_one(self):
        assert overlap_ratio("the cat sat", "the cat sat") == 1.0

    def test_disjoint_is_zero(self):
        assert overlap_ratio("alpha beta", "gamma delta") == 0.0

    def test_type_based_and_case_insensitive(self):
        # repeated tokens collapse to one type; case folds
        assert overlap_ratio("The cat", "cat THE the cat") == 1.0

    def test_human_denominator_ignores_candidate_extras(self):
        assert overlap_ratio("alpha beta", "alpha beta gamma delta") == 1.0
        assert overlap_ratio("alpha beta", "alpha gamma") == 0.5

    def test_candidate_denominator(self):
        assert (
            overlap_ratio("alpha beta", "alpha beta gamma delta", "candidate")
            == 0.5
        )

    def test_empty_sides(self):
        with pytest.raises(EmptyText):
            overlap_ratio("", "words here")
        with pytest.raises(EmptyText):
            overlap_ratio("words here", "...")

    def test_bad_denominator(self):
        with pytest.raises(ValueError):
            overlap_ratio("a b", "a b", "union")

    WORDS = st.lists(
        st.sampled_from("alpha beta gamma delta epsilon zeta".split()),
        min_size=1, max_size=10,
    ).map(" ".join)

    @settings(max_examples=100)
    @given(human=WORDS, candidate=WORDS)
    def test_bounded_and_dual(self, human, candidate):
        fwd = overlap_ratio(human, candidate, "human")
        dual = overlap_ratio(candidate, human, "candidate")
        assert 0.0 <= fwd <= 1.0
        assert fwd == dual

    @settings(max_examples=100)
    @given(human=WORDS, candidate=WORDS, extra=WORDS)
    def test_extending_candidate_never_lowers_human_ratio(
        self, human, candidate, extra
    ):
        base = overlap_ratio(human, candidate)
        grown = overlap_ratio(human, candidate + " " + extra)
        assert grown >= base


class TestBuildPrompt:
    def test_template_menu(self):
        assert TEMPLATE_IDS == ("tweet_generic", "tweet_mimic", "abstract_from_title")
        with pytest.raises(ValueError):
            build_prompt(RephraseRequest("text", char_limit=280), "haiku")

    def test_tweet_generic(self):
        req = RephraseRequest("ignored", char_limit=280)
        prompt = build_prompt(req, "tweet_generic", topic="space travel")
        assert "space travel" in prompt
        assert "280" in prompt
        with pytest.raises(MissingPlaceholder):
            build_prompt(req, "tweet_generic")
        with pytest.raises(MissingPlaceholder):
            build_prompt(RephraseRequest("x"), "tweet_generic", topic="space")

    def test_tweet_mimic(self):
        req = RephraseRequest("original tweet words", char_limit=140)
        prompt = build_prompt(req, "tweet_mimic")
        assert "<<<" in prompt and ">>>" in prompt
        assert "original tweet words" in prompt
        assert "60%" in prompt
        assert "140" in prompt
        with pytest.raises(MissingPlaceholder):
            build_prompt(RephraseRequest("words"), "tweet_mimic")
        with pytest.raises(MissingPlaceholder):
            build_prompt(RephraseRequest("   ", char_limit=140), "tweet_mimic")

    def test_abstract_from_title(self):
        req = RephraseRequest("A Study of Things", overlap_threshold=0.75)
        prompt = build_prompt(req, "abstract_from_title")
        assert "A Study of Things" in prompt
        assert "75%" in prompt
        with pytest.raises(MissingPlaceholder):
            build_prompt(RephraseRequest(""), "abstract_from_title")

    def test_request_validation(self):
        with pytest.raises(ValueError):
            RephraseRequest("x", overlap_threshold=1.5)
        with pytest.raises(ValueError):
            RephraseRequest("x", max_attempts=0)

    def test_mock_extract_source_round_trip(self):
        req = RephraseRequest("exact source words here", char_limit=280)
        prompt = build_prompt(req, "tweet_mimic")
        assert extract_source(prompt) == "exact source words here"


class TestEndpointErrors:
    REQ = RephraseRequest("alpha beta gamma delta", char_limit=280)

    def test_echo_accepts_first_attempt(self):
        with MockEndpoint(echo_source()) as mock:
            result = generate_rephrased(self.REQ, endpoint_for(mock))
            assert result.accepted
            assert result.attempts == 1
            assert result.final_ratio == 1.0
            assert result.text == "alpha beta gamma delta"
            assert mock.calls == 1

    def test_disjoint_rejected_after_max_attempts(self):
        with MockEndpoint(fixed("unrelated nonsense entirely")) as mock:
            result = generate_rephrased(self.REQ, endpoint_for(mock))
            assert not result.accepted
            assert result.attempts == self.REQ.max_attempts
            assert result.final_ratio == 0.0
            assert mock.calls == 5

    def test_partial_echo_dials_ratio(self):
        # source has 4 token types; keeping 2 gives ratio 0.5
        with MockEndpoint(partial_echo(keep=2)) as mock:
            req = RephraseRequest(
                "alpha beta gamma delta", overlap_threshold=0.5,
                max_attempts=2, char_limit=280,
            )
            result = generate_rephrased(req, endpoint_for(mock))
            assert result.accepted
            assert result.final_ratio == 0.5

    def test_unauthorized(self):
        with MockEndpoint(unauthorized()) as mock:
            with pytest.raises(AuthFailure):
                generate_rephrased(self.REQ, endpoint_for(mock))

    def test_rate_limit_retries_then_succeeds(self):
        with MockEndpoint(rate_limited_then(2, echo_source())) as mock:
            result = generate_rephrased(self.REQ, endpoint_for(mock))
            assert result.accepted
            assert mock.calls == 3

    def test_persistent_rate_limit(self):
        with MockEndpoint(rate_limited_then(10**6, echo_source())) as mock:
            with pytest.raises(RateLimited):
                generate_rephrased(self.REQ, endpoint_for(mock))
            assert mock.calls == 4

    def test_unreachable(self):
        endpoint = CompletionEndpointConfig(
            base_url="http://127.0.0.1:9/v1/chat/completions", timeout=0.5
        )
        with pytest.raises(EndpointUnreachable):
            generate_rephrased(self.REQ, endpoint)

    def test_server_error_is_unreachable(self):
        def broken(payload):
            return 500, "oops"

        with MockEndpoint(broken) as mock:
            with pytest.raises(EndpointUnreachable):
                generate_rephrased(self.REQ, endpoint_for(mock))

    def test_empty_candidate_counts_as_zero_ratio(self):
        with MockEndpoint(fixed("...")) as mock:
            req = RephraseRequest("alpha beta", max_attempts=2, char_limit=280)
            result = generate_rephrased(req, endpoint_for(mock))
            assert not result.accepted
            assert result.final_ratio == 0.0


class TestAuditLog:
    def test_records_every_attempt(self, tmp_path):
        path = tmp_path / "audit.jsonl"
        req = RephraseRequest(
            "alpha beta gamma", max_attempts=3, char_limit=280
        )
        with MockEndpoint(fixed("nothing shared")) as mock:
            generate_rephrased(
                req, endpoint_for(mock), audit=AuditLog(path), doc_id="doc-1"
            )
        records = [
            json.loads(line) for line in path.read_text().splitlines()
        ]
        assert len(records) == 3
        for i, record in enumerate(records, 1):
            assert record["doc_id"] == "doc-1"
            assert record["attempt"] == i
            assert record["ratio"] == 0.0
            assert record["accepted"] is False
            assert record["latency_ms"] >= 0.0
            assert len(record["prompt_sha256"]) == 64

    def test_key_value_never_audited(self, tmp_path, monkeypatch):
        secret = "sk-super-secret-value-12345"
        monkeypatch.setenv("MGTD_API_KEY", secret)
        path = tmp_path / "audit.jsonl"
        req = RephraseRequest("alpha beta", char_limit=280)
        with MockEndpoint(echo_source()) as mock:
            generate_rephrased(
                req, endpoint_for(mock), audit=AuditLog(path), doc_id="d"
            )
        assert secret not in path.read_text(encoding="utf-8")


def tiny_corpus() -> Corpus:
    texts = [
        "alpha beta gamma delta epsilon",
        "zeta eta theta iota kappa",
        "lambda mu nu xi omicron",
    ]
    docs = [
        Document(id=f"h{i}", text=t, label=0, source="demo")
        for i, t in enumerate(texts)
    ] + [
        Document(id=f"m{i}", text="machine words " + t, label=1, source="demo")
        for i, t in enumerate(texts)
    ]
    return Corpus(documents=tuple(docs), report={"rows_read": 6})


class TestRephraseCorpus:
    def test_machine_class_regenerated_from_humans(self):
        corpus = tiny_corpus()
        with MockEndpoint(echo_source()) as mock:
            out, provenance = rephrase_corpus(
                corpus, endpoint_for(mock), overlap_threshold=0.6
            )
        human_ids = {d.id for d in out if d.label == 0}
        machine_ids = {d.id for d in out if d.label == 1}
        assert human_ids == {"h0", "h1", "h2"}
        assert machine_ids == {"h0-rephrased", "h1-rephrased", "h2-rephrased"}
        assert all(d.source == "demo" for d in out)
        assert len(provenance) == 3
        assert all(p["accepted"] for p in provenance)
        assert out.report["rows_read"] == 6

    def test_rejected_kept_by_default_and_droppable(self):
        corpus = tiny_corpus()
        with MockEndpoint(fixed("nothing from source")) as mock:
            kept, prov_a = rephrase_corpus(
                corpus, endpoint_for(mock), max_attempts=1
            )
            dropped, prov_b = rephrase_corpus(
                corpus, endpoint_for(mock), max_attempts=1,
                include_rejected=False,
            )
        assert sum(1 for d in kept if d.label == 1) == 3
        assert sum(1 for d in dropped if d.label == 1) == 0
        assert all(not p["accepted"] for p in prov_a + prov_b)

    def test_threshold_monotonicity(self):
        corpus = tiny_corpus()
        with MockEndpoint(partial_echo(keep=3)) as mock:
            loose, _ = rephrase_corpus(
                corpus, endpoint_for(mock), overlap_threshold=0.0,
                max_attempts=1, include_rejected=False,
            )
            strict, _ = rephrase_corpus(
                corpus, endpoint_for(mock), overlap_threshold=0.6,
                max_attempts=1, include_rejected=False,
            )
        loose_ids = {d.id for d in loose if d.label == 1}
        strict_ids = {d.id for d in strict if d.label == 1}
        assert strict_ids <= loose_ids

    def test_collect_mode_records_errors(self):
        corpus = tiny_corpus()
        with MockEndpoint(unauthorized()) as mock:
            out, provenance = rephrase_corpus(
                corpus, endpoint_for(mock), on_error="collect"
            )
        assert sum(1 for d in out if d.label == 1) == 0
        assert len(provenance) == 3
        assert all(p["error"].startswith("AuthFailure") for p in provenance)

    def test_raise_mode_propagates(self):
        corpus = tiny_corpus()
        with MockEndpoint(unauthorized()) as mock:
            with pytest.raises(AuthFailure):
                rephrase_corpus(corpus, endpoint_for(mock), on_error="raise")

    def test_bad_on_error(self):
        corpus = tiny_corpus()
        with pytest.raises(ValueError):
            rephrase_corpus(
                corpus,
                CompletionEndpointConfig(base_url="http://example.invalid"),
                on_error="ignore",
            )

    def test_audit_written_via_corpus_path(self, tmp_path):
        corpus = tiny_corpus()
        path = tmp_path / "audit.jsonl"
        with MockEndpoint(echo_source()) as mock:
            rephrase_corpus(corpus, endpoint_for(mock), audit_path=path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        ids = {json.loads(line)["doc_id"] for line in lines}
        assert ids == {"h0", "h1", "h2"}


class TestRobustnessEval:
    def test_echoed_rephrase_collapses_accuracy(self, corpus_factory):
        corpus = corpus_factory(n_per_class=30, seed=3)
        with MockEndpoint(echo_source()) as mock:
            rephrased, _ = rephrase_corpus(
                corpus, endpoint_for(mock), overlap_threshold=0.6
            )
        result = robustness_eval(
            corpus, rephrased, model_cfgs={"lr": {}}, seed=7, n_folds=3
        )
        before = result.before[0].test.weighted["accuracy"]
        after = result.after[0].test.weighted["accuracy"]
        assert result.before[0].dataset == "original"
        assert result.after[0].dataset == "rephrased"
        # machine text identical to human text leaves nothing to learn
        assert before == 1.0
        assert after < before

    def test_per_topic_merged_row_matches_after_table(self, corpus_factory):
        corpus = corpus_factory(n_per_class=24, seed=5)
        with MockEndpoint(partial_echo(keep=6)) as mock:
            rephrased, _ = rephrase_corpus(
                corpus, endpoint_for(mock), overlap_threshold=0.3
            )
        result = robustness_eval(
            corpus, rephrased, model_cfgs={"lr": {}}, seed=11, n_folds=3
        )
        assert result.per_topic["model"] == "lr"
        for section in ("train", "test"):
            rows = result.per_topic[section]
            assert rows[-1]["topic"] == "merged"
            assert sum(r["n"] for r in rows[:-1]) == rows[-1]["n"]
        merged = result.per_topic["test"][-1]
        after = result.after[0].test
        assert merged["accuracy"] == after.weighted["accuracy"]
        assert merged["f1"] == after.weighted["f1"]

    def test_skips_topic_block_for_absent_kind(self, corpus_factory):
        corpus = corpus_factory(n_per_class=20, seed=2)
        with MockEndpoint(echo_source()) as mock:
            rephrased, _ = rephrase_corpus(corpus, endpoint_for(mock))
        result = robustness_eval(
            corpus, rephrased, model_cfgs={"mnb": {}}, seed=3, n_folds=3,
            topic_kind="lr",
        )
        assert result.per_topic == {}
        assert result.as_dict()["per_topic"] == {}
