import itertools
import json
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policyaudit.classifier import (Annotator, AnnotatorUnavailableError,
                                    CATEGORY_PRECEDENCE, DISPUTED_FLAG,
                                    ResponseFormatError, annotate_lexically,
                                    apply_votes, classify_lexical,
                                    classify_remote, default_boundary_rules,
                                    parse_resolution_file, resolve_disputes,
                                    vote_consensus)
from policyaudit.corpus import (AnnotationEntry, AnnotationSet, Category,
                                ConsensusLabel)

from conftest import make_annotations, make_segment


def classify(text, heading=("Policy",)):
    return classify_lexical(make_segment(text=text, heading=heading))


def test_precedence_covers_all_categories_once():
    assert len(CATEGORY_PRECEDENCE) == len(Category)
    assert set(CATEGORY_PRECEDENCE) == set(Category)
    assert CATEGORY_PRECEDENCE[0] == Category.SALE_SHARING
    assert CATEGORY_PRECEDENCE[-1] == Category.OTHER


def test_empty_cue_text_is_other():
    primary, secondary = classify("Lorem ipsum dolor sit amet.")
    assert primary == Category.OTHER
    assert secondary == ()


def test_plain_category_assignment():
    primary, _ = classify("We retain your data and explain how long we "
                          "keep your data on our storage period page.")
    assert primary == Category.RETENTION


def test_rule_sale_beats_sharing():
    primary, secondary = classify(
        "We share information with partners and we sell identifiers to "
        "advertisers.")
    assert primary == Category.SALE_SHARING
    assert Category.THIRD_PARTY in secondary


def test_rule_sale_is_monotone_in_trigger():
    base = "We share information with our partners and affiliates."
    p0, _ = classify(base)
    assert p0 == Category.THIRD_PARTY
    p1, _ = classify(base + " We also sell some identifiers.")
    assert p1 == Category.SALE_SHARING


def test_rule_choice_beats_access():
    primary, _ = classify(
        "You can opt out and withdraw consent; you may also request a "
        "copy or deletion of your data.")
    assert primary == Category.USER_CHOICE


def test_rule_assertion_beats_regional():
    primary, _ = classify(
        "We collect precise device data. You may opt out by contacting "
        "us.", heading=("Policy", "California Privacy Notice"))
    assert primary != Category.REGIONAL


def test_regional_without_assertions():
    primary, _ = classify(
        "You may submit a request to exercise your rights. Contact us or "
        "use an authorized agent.",
        heading=("Policy", "California Privacy Notice"))
    assert primary == Category.REGIONAL


def test_regional_requires_scoped_heading():
    primary, _ = classify(
        "You may submit a request to exercise your rights.")
    assert primary != Category.REGIONAL


def test_rule_intl_beats_regional():
    primary, _ = classify(
        "Parents may contact us about children under 13; submit a "
        "request to exercise these rights.",
        heading=("Policy", "California Privacy Notice"))
    assert primary == Category.INTL_SPECIFIC


def test_rule_tracking_focus():
    primary, _ = classify(
        "We use cookies, pixels, and web beacons for analytics across "
        "the information you provide.")
    assert primary == Category.TRACKING
    # A single incidental tracking mention stays first-party.
    primary, _ = classify(
        "We collect information you provide, data we collect from your "
        "device, and some cookies.")
    assert primary == Category.FIRST_PARTY


def test_rule_sensitive_focus():
    primary, _ = classify(
        "We collect biometric identifiers and precise geolocation from "
        "the information you provide.")
    assert primary == Category.SENSITIVE_DATA
    primary, _ = classify(
        "We collect information you provide and data we collect may "
        "include health details.")
    assert primary == Category.FIRST_PARTY


def test_rule_advice_beats_security():
    primary, _ = classify(
        "Keep your password safe and protect your account at all times.")
    assert primary == Category.OTHER
    primary, _ = classify(
        "We use encryption, access controls, and other security "
        "measures. Keep your password safe.")
    assert primary == Category.SECURITY


def test_rule_platitude_beats_automated():
    primary, _ = classify(
        "We are committed to responsible AI and use profiling "
        "responsibly.")
    assert primary == Category.OTHER
    primary, _ = classify(
        "We are committed to responsible AI. We use automated "
        "decision-making and profiling to determine eligibility.")
    assert primary == Category.AUTOMATED_DECISIONS


def test_classification_is_deterministic():
    text = ("We sell data, share with partners, use cookies, retain "
            "records, and let you opt out.")
    assert classify(text) == classify(text)


def test_secondary_never_contains_primary():
    texts = [
        "We sell and share your data with partners.",
        "We use cookies and we collect information you provide.",
        "Opt out, delete, correct, or request a copy of your data.",
        "We retain data, encrypt it, and notify you of changes to this "
        "policy.",
    ]
    for text in texts:
        primary, secondary = classify(text)
        assert primary not in secondary


# ------------------------------------------------------------ consensus


def _vote_oracle(primaries):
    """Brute-force partition logic over primary labels."""
    counts = Counter(primaries)
    top = max(counts.values())
    leaders = [c for c, n in counts.items() if n == top]
    if top == len(primaries):
        return "unanimous", leaders[0]
    if top >= 2 and len(leaders) == 1:
        return "majority", leaders[0]
    return "disputed", None


def test_voter_matches_partition_oracle_exhaustively():
    alphabet = (Category.FIRST_PARTY, Category.THIRD_PARTY,
                Category.TRACKING, Category.OTHER)
    for triple in itertools.product(alphabet, repeat=3):
        entries = AnnotationSet(make_annotations(*triple))
        got = vote_consensus(entries)
        kind, winner = _vote_oracle(triple)
        if kind == "disputed":
            assert got is None, triple
        else:
            assert got is not None, triple
            assert got.consensus_type == kind
            assert got.primary == winner


def test_voter_is_symmetric_in_annotator_order():
    triple = (Category.FIRST_PARTY, Category.FIRST_PARTY, Category.OTHER)
    results = set()
    for perm in itertools.permutations(triple):
        got = vote_consensus(AnnotationSet(make_annotations(*perm)))
        results.add((got.primary, got.consensus_type))
    assert len(results) == 1


def test_voter_secondary_needs_two_votes():
    entries = AnnotationSet(make_annotations(
        Category.FIRST_PARTY, Category.FIRST_PARTY, Category.FIRST_PARTY,
        secondaries=[(Category.TRACKING, Category.SECURITY),
                     (Category.TRACKING,), ()]))
    got = vote_consensus(entries)
    assert got.secondary == (Category.TRACKING,)


def test_voter_secondary_excludes_primary():
    entries = AnnotationSet(make_annotations(
        Category.FIRST_PARTY, Category.FIRST_PARTY, Category.TRACKING,
        secondaries=[(), (Category.FIRST_PARTY,), (Category.FIRST_PARTY,)]))
    got = vote_consensus(entries)
    assert got.primary == Category.FIRST_PARTY
    assert Category.FIRST_PARTY not in got.secondary


def test_voter_requires_two_entries():
    with pytest.raises(ValueError):
        vote_consensus(AnnotationSet(make_annotations(Category.OTHER)))


def test_apply_votes_flags_disputes():
    segs = [
        make_segment("s1", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.OTHER)),
        make_segment("s2", annotations=make_annotations(
            Category.OTHER, Category.TRACKING, Category.SECURITY)),
        make_segment("s3", annotations=make_annotations(Category.OTHER)),
    ]
    out = apply_votes(segs)
    assert out[0].consensus.consensus_type == "unanimous"
    assert out[1].consensus is None
    assert DISPUTED_FLAG in out[1].flags
    assert out[2].consensus is None and DISPUTED_FLAG not in out[2].flags


def test_resolution_file_round_trip(tmp_path):
    p = tmp_path / "res.tsv"
    p.write_text("# comment\n"
                 "s2\tTRACKING\tFIRST_PARTY,SECURITY\n"
                 "s9\tOTHER\n")
    res = parse_resolution_file(p)
    assert res["s2"] == (Category.TRACKING,
                         (Category.FIRST_PARTY, Category.SECURITY))
    assert res["s9"] == (Category.OTHER, ())


def test_resolve_disputes_behaviour(caplog):
    segs = apply_votes([
        make_segment("s1", annotations=make_annotations(
            Category.OTHER, Category.OTHER, Category.OTHER)),
        make_segment("s2", annotations=make_annotations(
            Category.OTHER, Category.TRACKING, Category.SECURITY)),
    ])
    out = resolve_disputes(segs, {
        "s2": (Category.TRACKING, ()),
        "s1": (Category.SECURITY, ()),      # not disputed: ignored
        "missing": (Category.OTHER, ()),    # unknown id: warned
    })
    assert out[1].consensus.primary == Category.TRACKING
    assert out[1].consensus.consensus_type == "expert_resolved"
    assert DISPUTED_FLAG not in out[1].flags
    assert out[0].consensus.primary == Category.OTHER


def test_annotate_lexically_appends_entries():
    segs = [make_segment(text="We use cookies and pixels for analytics.")]
    out = annotate_lexically(segs, "lex-1")
    assert len(out[0].annotations) == 1
    assert out[0].annotations.entries[0].annotator_id == "lex-1"


# --------------------------------------------------------------- remote


class _Handler(BaseHTTPRequestHandler):
    responses = []
    calls = 0

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        self.rfile.read(length)
        type(self).calls += 1
        status, payload = self.responses[
            min(type(self).calls - 1, len(self.responses) - 1)]
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def remote_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.calls = 0
    yield f"http://127.0.0.1:{server.server_port}/classify"
    server.shutdown()


def _annotator(url, retries=1):
    return Annotator(annotator_id="model-a", kind="remote_model",
                     endpoint=url, max_retries=retries, timeout=5.0)


def test_classify_remote_happy_path(remote_server):
    _Handler.responses = [(200, {"primary": "TRACKING",
                                 "secondary": ["FIRST_PARTY"]})]
    got = classify_remote(make_segment(), _annotator(remote_server))
    assert got == (Category.TRACKING, (Category.FIRST_PARTY,))


def test_classify_remote_rejects_extra_fields(remote_server):
    _Handler.responses = [(200, {"primary": "TRACKING", "secondary": [],
                                 "confidence": 0.9})]
    with pytest.raises(AnnotatorUnavailableError):
        classify_remote(make_segment(), _annotator(remote_server, retries=0))


def test_classify_remote_retries_then_succeeds(remote_server):
    _Handler.responses = [(500, {}),
                          (200, {"primary": "OTHER", "secondary": []})]
    got = classify_remote(make_segment(), _annotator(remote_server))
    assert got[0] == Category.OTHER
    assert _Handler.calls == 2


def test_classify_remote_exhausts_retries(remote_server):
    _Handler.responses = [(500, {})]
    with pytest.raises(AnnotatorUnavailableError):
        classify_remote(make_segment(), _annotator(remote_server, retries=1))
    assert _Handler.calls == 2


def test_parse_remote_response_strictness():
    from policyaudit.classifier import _parse_remote_response
    with pytest.raises(ResponseFormatError):
        _parse_remote_response({"primary": "TRACKING"})
    with pytest.raises(ResponseFormatError):
        _parse_remote_response({"primary": "NOT_A_CATEGORY",
                                "secondary": []})
    with pytest.raises(ResponseFormatError):
        _parse_remote_response(["TRACKING"])


_cats = st.sampled_from([Category.FIRST_PARTY, Category.THIRD_PARTY,
                         Category.TRACKING, Category.OTHER])


@settings(max_examples=200, deadline=None)
@given(st.lists(_cats, min_size=2, max_size=5))
def test_voter_oracle_property(primaries):
    got = vote_consensus(AnnotationSet(make_annotations(*primaries)))
    kind, winner = _vote_oracle(primaries)
    if kind == "disputed":
        assert got is None
    else:
        assert (got.primary, got.consensus_type) == (winner, kind)
