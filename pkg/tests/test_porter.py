"""Stemmer checks against the algorithm's published example pairs.

The per-step pairs come straight from the algorithm's definition and are
asserted against the corresponding step functions; the end-to-end pairs are
the classic demonstration vocabulary.
"""

from __future__ import annotations

import pytest

from bugdedup.porter import (
    _STEP2,
    _STEP3,
    _STEP4,
    _apply_table,
    _step1a,
    _step1b,
    _step1c,
    _step5a,
    _step5b,
    porter_stem,
)

STEP1A = [
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("ties", "ti"),
    ("caress", "caress"),
    ("cats", "cat"),
]

STEP1B = [
    ("feed", "feed"),
    ("agreed", "agree"),
    ("plastered", "plaster"),
    ("bled", "bled"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("conflated", "conflate"),
    ("troubled", "trouble"),
    ("sized", "size"),
    ("hopping", "hop"),
    ("tanned", "tan"),
    ("falling", "fall"),
    ("hissing", "hiss"),
    ("fizzed", "fizz"),
    ("failing", "fail"),
    ("filing", "file"),
]

STEP1C = [("happy", "happi"), ("sky", "sky")]

STEP2 = [
    ("relational", "relate"),
    ("conditional", "condition"),
    ("rational", "rational"),
    ("valenci", "valence"),
    ("hesitanci", "hesitance"),
    ("digitizer", "digitize"),
    ("conformabli", "conformable"),
    ("radicalli", "radical"),
    ("differentli", "different"),
    ("vileli", "vile"),
    ("analogousli", "analogous"),
    ("vietnamization", "vietnamize"),
    ("predication", "predicate"),
    ("operator", "operate"),
    ("feudalism", "feudal"),
    ("decisiveness", "decisive"),
    ("hopefulness", "hopeful"),
    ("callousness", "callous"),
    ("formaliti", "formal"),
    ("sensitiviti", "sensitive"),
    ("sensibiliti", "sensible"),
]

STEP3 = [
    ("triplicate", "triplic"),
    ("formative", "form"),
    ("formalize", "formal"),
    ("electriciti", "electric"),
    ("electrical", "electric"),
    ("hopeful", "hope"),
    ("goodness", "good"),
]

STEP4 = [
    ("revival", "reviv"),
    ("allowance", "allow"),
    ("inference", "infer"),
    ("airliner", "airlin"),
    ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"),
    ("defensible", "defens"),
    ("irritant", "irrit"),
    ("replacement", "replac"),
    ("adjustment", "adjust"),
    ("dependent", "depend"),
    ("adoption", "adopt"),
    ("homologou", "homolog"),
    ("communism", "commun"),
    ("activate", "activ"),
    ("angulariti", "angular"),
    ("homologous", "homolog"),
    ("effective", "effect"),
    ("bowdlerize", "bowdler"),
]

STEP5A = [("probate", "probat"), ("rate", "rate"), ("cease", "ceas")]
STEP5B = [("controll", "control"), ("roll", "roll")]

# Full-algorithm outputs for the classic demonstration words.
END_TO_END = [
    ("caresses", "caress"),
    ("flies", "fli"),
    ("dies", "di"),
    ("mules", "mule"),
    ("denied", "deni"),
    ("agreed", "agre"),
    ("owned", "own"),
    ("humbled", "humbl"),
    ("sized", "size"),
    ("meeting", "meet"),
    ("stating", "state"),
    ("siezing", "siez"),
    ("itemization", "item"),
    ("sensational", "sensat"),
    ("traditional", "tradit"),
    ("reference", "refer"),
    ("colonizer", "colon"),
    ("plotted", "plot"),
    ("running", "run"),
]


@pytest.mark.parametrize("word,expected", STEP1A)
def test_step1a(word, expected):
    assert _step1a(word) == expected


@pytest.mark.parametrize("word,expected", STEP1B)
def test_step1b(word, expected):
    assert _step1b(word) == expected


@pytest.mark.parametrize("word,expected", STEP1C)
def test_step1c(word, expected):
    assert _step1c(word) == expected


@pytest.mark.parametrize("word,expected", STEP2)
def test_step2(word, expected):
    assert _apply_table(word, _STEP2) == expected


@pytest.mark.parametrize("word,expected", STEP3)
def test_step3(word, expected):
    assert _apply_table(word, _STEP3) == expected


@pytest.mark.parametrize("word,expected", STEP4)
def test_step4(word, expected):
    assert _apply_table(word, _STEP4) == expected


@pytest.mark.parametrize("word,expected", STEP5A)
def test_step5a(word, expected):
    assert _step5a(word) == expected


@pytest.mark.parametrize("word,expected", STEP5B)
def test_step5b(word, expected):
    assert _step5b(word) == expected


@pytest.mark.parametrize("word,expected", END_TO_END)
def test_end_to_end(word, expected):
    assert porter_stem(word) == expected


def test_short_words_unchanged():
    for word in ("a", "is", "be", "x", "", "ok"):
        assert porter_stem(word) == word


def test_output_stays_lowercase_ascii():
    for word in ("generalization", "oscillators", "university", "happiness"):
        stemmed = porter_stem(word)
        assert stemmed == stemmed.lower()
        assert stemmed.isascii()
        assert len(stemmed) <= len(word)
