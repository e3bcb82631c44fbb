import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedrules.dataio import FEATURE_COLUMNS
from embedrules.sentiment import (
    Lexicon,
    batch_features,
    default_lexicon,
    extract_features,
    lemmatize,
    load_lexicon,
    tokenize,
)


@pytest.fixture(scope="module")
def lexicon():
    return default_lexicon()


def tiny_lexicon(**entries):
    return Lexicon(
        entries=entries or {"good": (0.7, 0.6), "bad": (-0.7, 0.6)},
        negators=frozenset({"not", "n't", "never"}),
        intensifiers={"very": 1.3, "slightly": 0.6},
    )


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize("Good, great!") == ["good", ",", "great", "!"]

    def test_empty(self):
        assert tokenize("") == []

    def test_contraction(self):
        assert tokenize("don't stop") == ["do", "n't", "stop"]

    def test_more_clitics(self):
        assert tokenize("it's fine") == ["it", "'s", "fine"]
        assert tokenize("we'll see") == ["we", "'ll", "see"]

    def test_unicode_words(self):
        assert tokenize("café déjà-vu") == ["café", "déjà", "-", "vu"]

    def test_deterministic(self):
        text = "A strange, WONDERFUL day... isn't it?"
        assert tokenize(text) == tokenize(text)


class TestLemmatize:
    def test_plural(self):
        assert lemmatize("movies") == "movie"

    def test_irregular(self):
        assert lemmatize("ran") == "run"

    def test_identity(self):
        assert lemmatize("good") == "good"

    def test_suffix_rules(self):
        assert lemmatize("boxes") == "box"
        assert lemmatize("running") == "run"
        assert lemmatize("stopped") == "stop"
        assert lemmatize("tried") == "try"
        assert lemmatize("greatest") == "great"

    def test_short_tokens_untouched(self):
        assert lemmatize("is") == "be"  # irregular table entry
        assert lemmatize("as") == "as"
        assert lemmatize(",") == ","


class TestExtractFeatures:
    def test_no_hits_is_all_zero(self):
        feats = extract_features("the table stood over there", tiny_lexicon())
        assert feats.as_row() == (0.0, 0.0, 0.0, 0.0)

    def test_single_positive_hit(self):
        feats = extract_features("good", tiny_lexicon())
        assert feats.positivity == pytest.approx(0.7)
        assert feats.negativity == 0.0
        assert feats.polarity == pytest.approx(0.7)
        assert feats.subjectivity == pytest.approx(0.6)

    def test_negation_flips_polarity(self):
        feats = extract_features("not good", tiny_lexicon())
        assert feats.polarity < 0
        assert feats.negativity > 0
        assert feats.positivity == 0.0

    def test_contraction_negation(self):
        feats = extract_features("isn't good", tiny_lexicon())
        assert feats.polarity < 0

    def test_negation_window_is_three_tokens(self):
        near = extract_features("not entirely and good", tiny_lexicon())
        far = extract_features("not entirely thrilled but still good", tiny_lexicon())
        assert near.polarity < 0  # "not" 3 tokens back still flips
        assert far.polarity > 0  # "not" out of window

    def test_intensifier_scales(self):
        plain = extract_features("good movie", tiny_lexicon())
        boosted = extract_features("very good movie", tiny_lexicon())
        damped = extract_features("slightly good movie", tiny_lexicon())
        assert boosted.polarity == pytest.approx(min(1.0, 0.7 * 1.3))
        assert damped.polarity == pytest.approx(0.7 * 0.6)
        assert plain.polarity == pytest.approx(0.7)

    def test_dilution_by_no_hit_suffix(self):
        lex = tiny_lexicon()
        short = extract_features("good", lex)
        long = extract_features("good " + "word " * 10, lex)
        assert long.positivity < short.positivity
        assert long.polarity == pytest.approx(short.polarity)  # mean over hits
        assert np.sign(long.polarity) == np.sign(short.polarity)

    def test_mixed_text_invariants(self):
        feats = extract_features("good good bad", tiny_lexicon())
        assert feats.positivity + feats.negativity <= 1.0
        assert np.sign(feats.polarity) == np.sign(feats.positivity - feats.negativity)

    def test_empty_lexicon_rejected(self):
        empty = Lexicon(entries={}, negators=frozenset(), intensifiers={})
        with pytest.raises(ValueError):
            extract_features("anything", empty)


class TestDefaultLexicon:
    def test_size_and_shape(self, lexicon):
        assert len(lexicon) > 1500
        assert "n't" in lexicon.negators
        assert lexicon.intensifiers["very"] > 1.0

    def test_values_in_range(self, lexicon):
        for token, (valence, weight) in lexicon.entries.items():
            assert token == token.lower()
            assert -1.0 <= valence <= 1.0
            assert 0.0 <= weight <= 1.0

    def test_obvious_words(self, lexicon):
        good = extract_features("a wonderful, moving film", lexicon)
        bad = extract_features("a dreadful, boring film", lexicon)
        assert good.polarity > 0.3
        assert bad.polarity < -0.3

    def test_load_from_directory(self, tmp_path, lexicon):
        import importlib.resources as resources

        data = resources.files("embedrules").joinpath("data")
        for name in ("lexicon.tsv", "negators.txt", "intensifiers.tsv"):
            (tmp_path / name).write_text(
                data.joinpath(name).read_text(encoding="utf-8"), encoding="utf-8"
            )
        loaded = load_lexicon(tmp_path)
        assert loaded.entries == lexicon.entries
        assert loaded.negators == lexicon.negators


def test_batch_features_shape_and_determinism(lexicon):
    texts = ["great fun", "no plot, awful acting", "great fun"]
    fm = batch_features(texts, lexicon, ids=["a", "b", "c"])
    assert fm.values.shape == (3, 4)
    assert fm.columns == FEATURE_COLUMNS
    np.testing.assert_array_equal(fm.values[0], fm.values[2])


@settings(max_examples=150, deadline=None)
@given(text=st.text(max_size=400))
def test_feature_ranges_for_arbitrary_unicode(text):
    feats = extract_features(text, _FUZZ_LEXICON)
    assert 0.0 <= feats.positivity <= 1.0
    assert 0.0 <= feats.negativity <= 1.0
    assert feats.positivity + feats.negativity <= 1.0 + 1e-12
    assert 0.0 <= feats.subjectivity <= 1.0
    assert -1.0 <= feats.polarity <= 1.0
    if feats.positivity > 0 and feats.negativity == 0:
        assert feats.polarity > 0


_FUZZ_LEXICON = default_lexicon()
