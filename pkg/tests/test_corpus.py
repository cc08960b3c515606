import base64
import io
import json
import threading
import unicodedata
from collections import Counter
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from oracles import gestalt_difflib
from shobdosetu_forge.audiocore import AudioClip
from shobdosetu_forge.corpus import (
    BoundaryAction,
    BoundaryDecision,
    Candidate,
    CorpusOptions,
    CorpusSource,
    FileProvider,
    FileReplacementProvider,
    LanguageVerdict,
    ManifestEntry,
    Origin,
    RemoteProvider,
    ScriptClass,
    Split,
    SubtitleChunk,
    audio_tail,
    build_corpus,
    build_manifest,
    candidate_list,
    classify_token_script,
    filter_language,
    null_nonspeech,
    parse_chunks,
    read_manifest,
    realign,
    select_boundary,
    similarity_ratio,
    split_train_val,
)
from shobdosetu_forge.errors import (
    EmptyTranscript,
    InconsistentDecision,
    MalformedDocument,
    NegativeTime,
    OutOfRange,
    ProviderError,
)


def chunk(i, text, start=None, dur=2.0, src="s"):
    return SubtitleChunk(f"{src}-{i:05d}", src, start if start is not None else 2.0 * i, dur, text)


# --- parsing ----------------------------------------------------------------


def test_parse_empty_and_ids():
    assert parse_chunks([]) == []
    out = parse_chunks('[{"start": 1, "duration": 1, "text": "b"}, {"start": 0, "duration": 1, "text": "a"}]', "ep")
    assert [(c.chunk_id, c.text) for c in out] == [("ep-00000", "a"), ("ep-00001", "b")]


def test_parse_overlap_midpoint():
    out = parse_chunks([{"start": 0, "duration": 5, "text": "a"}, {"start": 4, "duration": 4, "text": "b"}])
    assert (out[0].start_s, out[0].end_s) == (0.0, 4.5)
    assert (out[1].start_s, out[1].end_s) == (4.5, 8.0)


def test_parse_errors():
    with pytest.raises(MalformedDocument):
        parse_chunks([{"start": 0, "text": "a"}])
    with pytest.raises(NegativeTime):
        parse_chunks([{"start": -1, "duration": 1, "text": "a"}])
    with pytest.raises(MalformedDocument):
        parse_chunks("{not json")
    with pytest.raises(MalformedDocument):
        parse_chunks({"start": 0})


def test_parse_null_text_is_nonspeech():
    (c,) = parse_chunks([{"start": 0, "duration": 1, "text": None}])
    assert c.text is None and c.words == []


# --- script classification ----------------------------------------------------


@pytest.mark.parametrize(
    "token, cls",
    [
        ("ক", ScriptClass.BENGALI),
        ("क", ScriptClass.DEVANAGARI),
        ("123,", ScriptClass.NEUTRAL),
        ("hello", ScriptClass.LATIN),
        ("مرحبا", ScriptClass.ARABIC),
        ("ݐ", ScriptClass.ARABIC),
        ("മലയാളം", ScriptClass.MALAYALAM),
        ("తెలుగు", ScriptClass.TELUGU),
        ("中文", ScriptClass.OTHER),
        ("।", ScriptClass.NEUTRAL),
        ("কথা।", ScriptClass.BENGALI),
        ("ab", ScriptClass.LATIN),
        ("কa", ScriptClass.LATIN),  # tie leans away from Bengali
        ("কখa", ScriptClass.BENGALI),
        ("कক", ScriptClass.DEVANAGARI),
    ],
)
def test_classify_token_script(token, cls):
    assert classify_token_script(token) is cls


@settings(max_examples=300)
@given(st.text(min_size=1, max_size=12))
def test_classification_is_total(token):
    assert isinstance(classify_token_script(token), ScriptClass)


def test_filter_language():
    assert filter_language("আমি ভাত খাই OK 42").verdict is LanguageVerdict.KEEP
    r = filter_language("आज আমি कल যাব")
    assert r.verdict is LanguageVerdict.NEEDS_REPLACEMENT and r.positions == (0, 2)
    assert filter_language("আমি मैं తెలుగు").verdict is LanguageVerdict.DROP
    assert filter_language("আমি مرحبا").verdict is LanguageVerdict.DROP


# --- gestalt -------------------------------------------------------------------


def test_similarity_is_order_sensitive_like_the_reference():
    # the leftmost-longest rule makes the matcher asymmetric; we follow the reference exactly
    assert similarity_ratio(" b", "b ab") == gestalt_difflib(" b", "b ab") == pytest.approx(2 / 3)
    assert similarity_ratio("b ab", " b") == gestalt_difflib("b ab", " b") == pytest.approx(1 / 3)


def test_similarity_ratio_fixtures():
    assert similarity_ratio("abc", "abc") == 1.0
    assert similarity_ratio("ab", "cd") == 0.0
    assert similarity_ratio("abcd", "bcde") == 0.75
    assert similarity_ratio("", "") == 1.0
    assert similarity_ratio("shesh", "shes") == pytest.approx(8 / 9)


@settings(max_examples=300)
@given(st.text(alphabet="abcকখ ", max_size=12), st.text(alphabet="abcকখ ", max_size=12))
def test_similarity_properties(a, b):
    r = similarity_ratio(a, b)
    assert r == gestalt_difflib(a, b)
    assert similarity_ratio(b, a) == gestalt_difflib(b, a)
    assert 0.0 <= r <= 1.0
    if a or b:
        assert (r == 1.0) == (a == b)


# --- boundary validation --------------------------------------------------------


def test_audio_tail():
    sr = 8000
    clip = AudioClip(np.arange(20 * sr, dtype=float), sr)
    t = audio_tail(clip, chunk(0, "x", start=2.0, dur=12.0))
    assert len(t) == 5 * sr and t.samples[-1] == 14 * sr - 1
    assert len(audio_tail(clip, chunk(0, "x", start=2.0, dur=3.0))) == 3 * sr
    with pytest.raises(OutOfRange):
        audio_tail(clip, chunk(0, "x", start=18.0, dur=5.0))


def test_candidate_list():
    cur = chunk(0, " ".join(f"c{i}" for i in range(10)))
    nxt = chunk(1, " ".join(f"n{i}" for i in range(10)))
    cands = candidate_list(cur, nxt)
    assert [c.word for c in cands] == ["c5", "c6", "c7", "c8", "c9", "n0", "n1", "n2"]
    assert [c.position for c in cands] == [-5, -4, -3, -2, -1, 1, 2, 3]
    assert [c.origin for c in cands] == [Origin.CURRENT] * 5 + [Origin.NEXT] * 3
    assert len(candidate_list(chunk(0, "a b"))) == 2
    with pytest.raises(EmptyTranscript):
        candidate_list(chunk(0, ""))


def test_select_boundary_actions():
    cands = candidate_list(chunk(0, "w1 w2 w3 w4 w5 w6"), chunk(1, "x1 shes x3"))
    d = select_boundary(["w6"], cands)
    assert (d.action, d.ratio, d.candidate_index) == (BoundaryAction.KEEP, 1.0, 4)
    d = select_boundary(["foo", "shesh"], cands)
    assert (d.action, d.k) == (BoundaryAction.PULL_FROM_NEXT, 2)
    assert d.ratio == pytest.approx(8 / 9)
    d = select_boundary(["w2"], cands)
    assert (d.action, d.k) == (BoundaryAction.PUSH_TO_NEXT, 4)
    d = select_boundary(["w4"], cands)
    assert (d.action, d.k) == (BoundaryAction.PUSH_TO_NEXT, 2)
    assert select_boundary(["zzzz"], cands).action is BoundaryAction.UNVALIDATED
    assert select_boundary([], cands).action is BoundaryAction.UNVALIDATED


def test_select_boundary_ratio_below_threshold():
    # "abcde" vs "abxyz": M = 2, ratio 0.4
    cands = [Candidate("abxyz", Origin.CURRENT, -1)]
    d = select_boundary(["abcde"], cands)
    assert d.action is BoundaryAction.UNVALIDATED and d.ratio == pytest.approx(0.4)


def test_select_boundary_tie_prefers_current():
    cands = [Candidate("same", Origin.CURRENT, -1), Candidate("same", Origin.NEXT, 1)]
    assert select_boundary(["same"], cands).action is BoundaryAction.KEEP


def test_select_boundary_nfc():
    decomposed = unicodedata.normalize("NFD", "য়")
    cands = [Candidate("য়", Origin.CURRENT, -1)]
    assert select_boundary([decomposed], cands).ratio == 1.0


def _decision(cid, action, k=0):
    return BoundaryDecision(cid, "", "", 0, 1.0, action, k)


def test_realign_moves_text_only():
    chunks = [chunk(0, "a b c"), chunk(1, "w1 w2 w3"), chunk(2, "x y")]
    out = realign(chunks, [_decision("s-00000", BoundaryAction.PULL_FROM_NEXT, 2),
                           _decision("s-00001", BoundaryAction.PUSH_TO_NEXT, 1)])
    # decisions apply left to right, so the push sees the text left after the pull
    assert [c.text for c in out] == ["a b c w1 w2", "", "w3 x y"]
    assert [c.start_s for c in out] == [c.start_s for c in chunks]
    kept = realign(chunks, [_decision(c.chunk_id, BoundaryAction.KEEP) for c in chunks])
    assert kept == chunks


def test_realign_conserves_words():
    rng = np.random.default_rng(0)
    for _ in range(200):
        chunks = [chunk(i, " ".join(f"t{i}_{j}" for j in range(int(rng.integers(1, 7))))) for i in range(5)]
        decisions = []
        sizes = [len(c.words) for c in chunks]
        for i in range(4):
            kind = rng.integers(3)
            if kind == 0:
                decisions.append(_decision(chunks[i].chunk_id, BoundaryAction.KEEP))
            elif kind == 1 and sizes[i + 1] >= 1:
                k = int(rng.integers(1, min(3, sizes[i + 1]) + 1))
                sizes[i] += k
                sizes[i + 1] -= k
                decisions.append(_decision(chunks[i].chunk_id, BoundaryAction.PULL_FROM_NEXT, k))
            elif sizes[i] >= 1:
                k = int(rng.integers(1, min(4, sizes[i]) + 1))
                sizes[i] -= k
                sizes[i + 1] += k
                decisions.append(_decision(chunks[i].chunk_id, BoundaryAction.PUSH_TO_NEXT, k))
        out = realign(chunks, decisions)
        before = Counter(w for c in chunks for w in c.words)
        after = Counter(w for c in out for w in c.words)
        assert before == after
        assert [len(c.words) for c in out] == sizes


def test_realign_inconsistent():
    chunks = [chunk(0, "a"), chunk(1, "b c")]
    with pytest.raises(InconsistentDecision):
        realign(chunks, [_decision("s-00000", BoundaryAction.PULL_FROM_NEXT, 3)])
    with pytest.raises(InconsistentDecision):
        realign(chunks, [_decision("s-00001", BoundaryAction.PULL_FROM_NEXT, 1)])


def test_realign_flags_unvalidated():
    out = realign([chunk(0, "a")], [_decision("s-00000", BoundaryAction.UNVALIDATED)])
    assert out[0].unvalidated and out[0].text == "a"


def test_null_nonspeech():
    c = chunk(0, "gaan", start=10.0, dur=4.0)
    assert null_nonspeech(c, [(9.0, 15.0)]).text is None
    assert null_nonspeech(c, [(0.0, 5.0)]).text == "gaan"
    assert null_nonspeech(c, [(12.0, 20.0)]).text == "gaan"  # 50%
    assert null_nonspeech(c, [(10.0, 11.0), (11.5, 13.7)]).text is None  # 80% split over two zones


# --- split and manifest -------------------------------------------------------


def _entries(n):
    return [ManifestEntry(f"c{i:05d}", "a.wav", float(i), 1.0, f"t{i}") for i in range(n)]


def test_split_deterministic_and_order_independent():
    es = _entries(500)
    a = {e.chunk_id: e.split for e in split_train_val(es, 0.9, 5)}
    b = {e.chunk_id: e.split for e in split_train_val(list(reversed(es)), 0.9, 5)}
    assert a == b
    c = {e.chunk_id: e.split for e in split_train_val(es[:100], 0.9, 5)}
    assert all(a[k] == v for k, v in c.items())


def test_manifest_round_trip_and_order(tmp_path):
    es = split_train_val(_entries(20), 0.7, 1)
    es[3] = ManifestEntry("c00003", "b.wav", 1.0, 2.0, None, Split.VAL, True, {"effect": "underwater"}, 8000)
    path = tmp_path / "m.jsonl"
    summary = build_manifest(list(reversed(es)), path)
    back = read_manifest(path)
    assert back == sorted(es, key=lambda e: e.chunk_id)
    assert summary.augmented == 1 and summary.kept == 19
    assert summary.train + summary.val == 20


def test_manifest_empty(tmp_path):
    path = tmp_path / "m.jsonl"
    summary = build_manifest([], path)
    assert path.read_text() == ""
    assert summary.kept == summary.augmented == summary.train == 0


def test_manifest_entry_fields_serialize_unicode():
    line = ManifestEntry("c", "a.wav", 0.0, 1.0, "আমি").to_json()
    assert "আমি" in line
    assert set(json.loads(line)) == {
        "chunk_id", "audio_path", "offset_s", "duration_s", "transcript", "split", "augmented", "recipe",
        "sample_rate_hz",
    }


# --- providers -----------------------------------------------------------------


def test_file_providers(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"chunk_id": "a", "words": ["x", "y"]}\n\n{"chunk_id": "b", "words": []}\n')
    p = FileProvider.from_jsonl(path)
    assert p.predict("a", None) == ["x", "y"]
    assert p.predict("missing", None) == []
    r = FileReplacementProvider.from_jsonl(path)
    assert r.replace("a", ["q", "w", "e"], [0, 2]) == ["x", "y"]
    assert r.replace("a", ["q"], [0]) is None
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"chunk_id": "a", "words": "x"}\n')
    with pytest.raises(MalformedDocument):
        FileProvider.from_jsonl(bad)


class _Handler(BaseHTTPRequestHandler):
    requests_seen: list = []
    fail_first = 0

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests_seen.append((self.headers.get("Authorization"), body))
        if type(self).fail_first > 0:
            type(self).fail_first -= 1
            self.send_response(503)
            self.end_headers()
            return
        if body["task"] == "endpoint_words":
            sr, data = wavfile.read(io.BytesIO(base64.b64decode(body["audio_wav_base64"])))
            words = [f"n{len(data)}", f"sr{sr}"]
        else:
            words = [f"r{p}" for p in body["positions"]]
        payload = json.dumps({"words": words}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    _Handler.requests_seen = []
    _Handler.fail_first = 0
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_port}/predict"
    httpd.shutdown()
    httpd.server_close()


def test_remote_provider(server):
    p = RemoteProvider(server, api_key="secret", backoff_s=0.01)
    tail = AudioClip(np.full(800, 0.1), 8000)
    assert p.predict("c1", tail) == ["n800", "sr8000"]
    auth, body = _Handler.requests_seen[-1]
    assert auth == "Bearer secret" and body["chunk_id"] == "c1"
    assert p.replace("c1", ["a", "b", "c"], [0, 2]) == ["r0", "r2"]
    assert p.predict("c2", AudioClip(np.zeros(800), 8000)) == []


def test_remote_provider_retries(server):
    _Handler.fail_first = 2
    p = RemoteProvider(server, backoff_s=0.01, retries=3)
    assert p.predict("c", AudioClip(np.full(10, 0.1), 8000)) == ["n10", "sr8000"]
    assert len(_Handler.requests_seen) == 3
    _Handler.fail_first = 10
    with pytest.raises(ProviderError):
        RemoteProvider(server, backoff_s=0.01, retries=1).predict("c", AudioClip(np.full(10, 0.1), 8000))


def test_remote_from_env(monkeypatch, server):
    monkeypatch.delenv("SHOBDOSETU_ENDPOINT_URL", raising=False)
    with pytest.raises(ProviderError):
        RemoteProvider.from_env()
    monkeypatch.setenv("SHOBDOSETU_ENDPOINT_URL", server)
    monkeypatch.setenv("SHOBDOSETU_ENDPOINT_API_KEY", "k")
    p = RemoteProvider.from_env(timeout_s=5)
    assert (p.url, p.api_key, p.timeout_s) == (server, "k", 5)


# --- pipeline -------------------------------------------------------------------


def _source(texts, sid="ep", zones=()):
    sr = 8000
    chunks = [SubtitleChunk(f"{sid}-{i:05d}", sid, 3.0 * i, 3.0, t) for i, t in enumerate(texts)]
    audio = AudioClip(np.full(int(3.0 * len(texts) * sr), 0.1), sr)
    return CorpusSource(sid, chunks, audio, f"{sid}.wav", list(zones))


def test_build_corpus_counts_and_order():
    src = _source([
        "আমি ভাত খাই",          # keep
        "সে कल আসবে",           # hindi token replaced
        "আমি తెలుగు বলি",        # dropped
        "গান",                  # nulled as non-speech
        "তুমি কেমন আছো",         # unvalidated (no prediction)
        None,                   # already non-speech
    ], zones=[(9.0, 12.0)])
    endpoint = FileProvider({"ep-00000": ["খাই"], "ep-00001": ["আসবে"], "ep-00003": ["গান"]})
    replacer = FileReplacementProvider({"ep-00001": ["কাল"]})
    entries, summary, decisions = build_corpus([src], endpoint, replacer, CorpusOptions(max_inflight=3))
    assert [e.chunk_id for e in entries] == ["ep-00000", "ep-00001", "ep-00003", "ep-00005"]
    assert entries[1].transcript == "সে কাল আসবে"
    assert entries[2].transcript is None and entries[3].transcript is None
    assert (summary.replaced, summary.dropped, summary.unvalidated, summary.nonspeech) == (1, 1, 1, 1)
    assert {d.chunk_id for d in decisions} == {"ep-00000", "ep-00001", "ep-00003", "ep-00004"}


def test_build_corpus_failed_replacement_excluded():
    src = _source(["সে कल আসবে", "ঠিক আছে"])
    entries, summary, _ = build_corpus([src], FileProvider({"ep-00001": ["আছে"]}), None)
    assert [e.chunk_id for e in entries] == ["ep-00001"]
    assert summary.replacement_failed == 1


def test_build_corpus_push_without_next_is_unvalidated():
    src = _source(["এক দুই তিন"])
    entries, summary, decisions = build_corpus([src], FileProvider({"ep-00000": ["দুই"]}))
    assert entries == [] and summary.unvalidated == 1
    assert decisions[0].action is BoundaryAction.UNVALIDATED


def test_build_corpus_independent_of_concurrency():
    srcs = [_source(["এক দুই", "তিন চার", "পাঁচ"], sid=f"s{i}") for i in range(3)]
    table = {f"s{i}-{j:05d}": w for i in range(3) for j, w in enumerate([["তিন"], ["চার"], ["পাঁচ"]])}
    a = build_corpus(srcs, FileProvider(table), opts=CorpusOptions(max_inflight=1))[0]
    b = build_corpus(list(reversed(srcs)), FileProvider(table), opts=CorpusOptions(max_inflight=8))[0]
    assert a == b
    assert a[0].transcript == "এক দুই তিন" and a[1].transcript == "চার"
