"""Porter stemmer: the classic suffix-stripping algorithm, steps 1a through 5b.

Words of length <= 2 are returned unchanged. Input is expected to be a
lowercase token; the stemmer never uppercases or inserts characters outside
the original alphabet plus 'e'/'i' introduced by its own rules.
"""

from __future__ import annotations

_VOWELS = frozenset("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # 'y' is a vowel when preceded by a consonant ("syzygy"), a consonant
        # otherwise ("toy", or word-initial).
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count vowel-consonant sequences: the m in [C](VC)^m[V]."""
    m = 0
    prev = None
    for i in range(len(stem)):
        cur = "c" if _is_consonant(stem, i) else "v"
        if prev == "v" and cur == "c":
            m += 1
        prev = cur
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    """Consonant-vowel-consonant ending where the final consonant is not w, x, y."""
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


# Rule tables: (suffix, replacement, minimum measure of the stem), applied
# longest-suffix-first; a matched suffix whose condition fails blocks the
# rest of the step.
_STEP2 = [
    ("ational", "ate", 0),
    ("ization", "ize", 0),
    ("iveness", "ive", 0),
    ("fulness", "ful", 0),
    ("ousness", "ous", 0),
    ("tional", "tion", 0),
    ("biliti", "ble", 0),
    ("entli", "ent", 0),
    ("ousli", "ous", 0),
    ("ation", "ate", 0),
    ("alism", "al", 0),
    ("aliti", "al", 0),
    ("iviti", "ive", 0),
    ("enci", "ence", 0),
    ("anci", "ance", 0),
    ("izer", "ize", 0),
    ("abli", "able", 0),
    ("alli", "al", 0),
    ("ator", "ate", 0),
    ("eli", "e", 0),
]

_STEP3 = [
    ("icate", "ic", 0),
    ("ative", "", 0),
    ("alize", "al", 0),
    ("iciti", "ic", 0),
    ("ical", "ic", 0),
    ("ful", "", 0),
    ("ness", "", 0),
]

_STEP4 = [
    ("ement", "", 1),
    ("ance", "", 1),
    ("ence", "", 1),
    ("able", "", 1),
    ("ible", "", 1),
    ("ment", "", 1),
    ("ant", "", 1),
    ("ent", "", 1),
    ("ism", "", 1),
    ("ate", "", 1),
    ("iti", "", 1),
    ("ous", "", 1),
    ("ive", "", 1),
    ("ize", "", 1),
    ("ion", "", 1),  # special: stem must additionally end in s or t
    ("al", "", 1),
    ("er", "", 1),
    ("ic", "", 1),
    ("ou", "", 1),
]


def _apply_table(word: str, table: list[tuple[str, str, int]]) -> str:
    for suffix, repl, min_m in table:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if suffix == "ion" and not (stem and stem[-1] in "st"):
                return word
            if _measure(stem) > min_m:
                return stem + repl
            return word
    return word


def _step1a(word: str) -> str:
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-2]
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        stem = word[:-3]
        return stem + "ee" if _measure(stem) > 0 else word
    fired = None
    if word.endswith("ed") and _contains_vowel(word[:-2]):
        fired = word[:-2]
    elif word.endswith("ing") and _contains_vowel(word[:-3]):
        fired = word[:-3]
    if fired is None:
        return word
    word = fired
    if word.endswith(("at", "bl", "iz")):
        return word + "e"
    if _ends_double_consonant(word) and word[-1] not in "lsz":
        return word[:-1]
    if _measure(word) == 1 and _ends_cvc(word):
        return word + "e"
    return word


def _step1c(word: str) -> str:
    if word.endswith("y") and _contains_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step5a(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1:
            return stem
        if m == 1 and not _ends_cvc(stem):
            return stem
    return word


def _step5b(word: str) -> str:
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        return word[:-1]
    return word


def porter_stem(token: str) -> str:
    """Stem one lowercase token; tokens of length <= 2 pass through unchanged."""
    if len(token) <= 2:
        return token
    word = _step1a(token)
    word = _step1b(word)
    word = _step1c(word)
    word = _apply_table(word, _STEP2)
    word = _apply_table(word, _STEP3)
    word = _apply_table(word, _STEP4)
    word = _step5a(word)
    word = _step5b(word)
    return word
