"""
Unit Tests for Transcript Reorganization
"""

from collections import Counter

import pytest

from data.ingestion.transcripts import (
    TranscriptReorganizer,
    flag_backchannels,
    group_by_session,
    is_interrupted,
    merge_turn_sentences,
    read_sentences,
    read_transcript,
    remove_backchannels,
    resolve_label,
    tokenize,
    write_sentences,
    write_transcript,
)
from models.modality import MiscLabel
from models.transcript import Speaker, Utterance
from utils.errors import LabelConflictError, ParameterError

C, T = Speaker.CLIENT, Speaker.THERAPIST


def utterances(*rows):
    """(speaker, text, label) rows at one-second spacing."""
    return [
        Utterance(speaker=s, text=text, start_time=float(i), label=label, utterance_id=i)
        for i, (s, text, label) in enumerate(rows)
    ]


@pytest.fixture
def interrupted_session():
    return utterances(
        (T, "How was your week?", None),
        (C, "I have been thinking about", MiscLabel.FN),
        (T, "Mm-hmm", None),
        (C, "cutting down on smoking.", MiscLabel.CT),
        (T, "That sounds important.", None),
    )


class TestTokenization:
    """Tests for tokens and sentence boundaries."""

    def test_tokenize_keeps_hyphenated_forms(self):
        assert tokenize("Mm-hmm, yeah.") == ["mm-hmm", "yeah"]
        assert tokenize("I don't know") == ["i", "don't", "know"]

    def test_is_interrupted(self):
        assert is_interrupted("I was going to")
        assert not is_interrupted("I stopped.")
        assert not is_interrupted("Did I?  ")


class TestBackchannels:
    """Tests for backchannel removal."""

    def test_removes_interjection(self, interrupted_session):
        cleaned = remove_backchannels(interrupted_session)

        assert [u.text for u in cleaned] == [
            "How was your week?",
            "I have been thinking about",
            "cutting down on smoking.",
            "That sounds important.",
        ]
        assert cleaned[2].follows_interruption

    def test_input_not_modified(self, interrupted_session):
        flag_backchannels(interrupted_session)

        assert not any(u.is_backchannel for u in interrupted_session)

    def test_complete_sentence_is_not_interrupted(self):
        session = utterances(
            (C, "I stopped.", MiscLabel.CT),
            (T, "Okay", None),
            (C, "It was hard.", MiscLabel.FN),
        )

        assert len(remove_backchannels(session)) == 3

    def test_long_or_lexical_interjection_kept(self):
        session = utterances(
            (C, "I was going to", MiscLabel.FN),
            (T, "Tell me more", None),
            (C, "quit.", MiscLabel.CT),
        )

        assert len(remove_backchannels(session)) == 3

    def test_max_tokens(self):
        session = utterances(
            (C, "I was going to", MiscLabel.FN),
            (T, "Yeah yeah okay", None),
            (C, "quit.", MiscLabel.CT),
        )

        assert len(remove_backchannels(session, max_tokens=3)) == 2
        assert len(remove_backchannels(session, max_tokens=2)) == 3

    def test_invalid_max_tokens(self):
        with pytest.raises(ParameterError):
            remove_backchannels([], max_tokens=0)

    def test_empty_transcript(self):
        assert remove_backchannels([]) == []


class TestLabelResolution:
    """Tests for merged-label resolution."""

    @pytest.mark.parametrize("parts,expected", [
        ([MiscLabel.FN, MiscLabel.CT], MiscLabel.CT),
        ([MiscLabel.ST, MiscLabel.FN], MiscLabel.ST),
        ([MiscLabel.FN, MiscLabel.FN], MiscLabel.FN),
        ([MiscLabel.CT, MiscLabel.CT], MiscLabel.CT),
        ([None, MiscLabel.ST], MiscLabel.ST),
        ([None, None], None),
    ])
    def test_resolution(self, parts, expected):
        assert resolve_label(parts) == expected

    def test_conflict(self):
        with pytest.raises(LabelConflictError):
            resolve_label([MiscLabel.CT, MiscLabel.FN, MiscLabel.ST])

    def test_empty(self):
        with pytest.raises(ParameterError):
            resolve_label([])


class TestMerge:
    """Tests for sentence merging and reorganization."""

    def test_merges_interrupted_sentence(self, interrupted_session):
        sentences = merge_turn_sentences(remove_backchannels(interrupted_session))

        assert len(sentences) == 3
        merged = sentences[1]
        assert merged.text == "I have been thinking about cutting down on smoking."
        assert merged.label == MiscLabel.CT
        assert merged.source_ids == [1, 3]
        assert [s.turn_id for s in sentences] == [0, 1, 2]

    def test_positions_within_turn(self):
        session = utterances(
            (C, "I drink a lot.", MiscLabel.FN),
            (C, "I want to stop.", MiscLabel.CT),
            (T, "Why now?", None),
        )

        sentences = merge_turn_sentences(session)

        assert [(s.turn_id, s.position_in_turn) for s in sentences] == [(0, 0), (0, 1), (1, 0)]

    def test_conflicting_merge_raises(self):
        session = utterances(
            (C, "I want to quit but", MiscLabel.CT),
            (T, "Mm", None),
            (C, "I like smoking.", MiscLabel.ST),
        )

        with pytest.raises(LabelConflictError):
            TranscriptReorganizer().reorganize("s000", session)

    def test_token_multiset_preserved(self, interrupted_session):
        sentences = TranscriptReorganizer().reorganize("s000", interrupted_session)

        before = Counter(t for u in interrupted_session if u.text != "Mm-hmm" for t in tokenize(u.text))
        after = Counter(t for s in sentences for t in tokenize(s.text))
        assert before == after

    def test_ids_and_reading_order(self, interrupted_session):
        shuffled = list(reversed(interrupted_session))

        sentences = TranscriptReorganizer().reorganize("s007", shuffled)

        assert [s.sentence_id for s in sentences] == ["s007-0000", "s007-0001", "s007-0002"]
        assert sentences[0].speaker is Speaker.THERAPIST


class TestTranscriptFiles:
    """Tests for transcript and sentence files."""

    def test_file_reorganization(self, tmp_path, interrupted_session):
        path = write_transcript(tmp_path / "s003.transcript.jsonl", interrupted_session)

        sentences = TranscriptReorganizer().reorganize_file(path)

        assert [u.utterance_id for u in read_transcript(path)] == [0, 1, 2, 3, 4]
        assert sentences[1].sentence_id == "s003-0001"
        assert sentences[1].label == MiscLabel.CT

    def test_sentences_round_trip(self, tmp_path, interrupted_session):
        sentences = TranscriptReorganizer().reorganize("s001", interrupted_session)

        restored = read_sentences(write_sentences(tmp_path / "s001.sentences.jsonl", sentences))

        assert [s.to_dict() for s in restored] == [s.to_dict() for s in sentences]
        assert list(group_by_session(restored)) == ["s001"]
