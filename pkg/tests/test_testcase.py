import pytest
from hypothesis import given
from hypothesis import strategies as st

from corpusgen.testcase import TestCase


def test_canonical_text_joins_with_newlines():
    t = TestCase(("3", "S", "1"))
    assert t.canonical_text == "3\nS\n1"
    assert t.size_bytes == 5
    assert str(t) == "3 S 1"
    assert len(t) == 3


@pytest.mark.parametrize("bad", ["", " a", "a b", "a\n"])
def test_tokens_must_be_canonical(bad):
    with pytest.raises(ValueError):
        TestCase((bad,))


def test_from_tokens_splits_whitespace():
    assert TestCase.from_tokens(["1 2", "x"]).tokens == ("1", "2", "x")
    assert TestCase.from_text("  1\n\t2 ").tokens == ("1", "2")


def test_size_counts_utf8_bytes():
    assert TestCase(("é",)).size_bytes == 2


words = st.text(alphabet=st.characters(blacklist_categories=("Zs", "Zl", "Zp", "Cc")),
                min_size=1, max_size=6)


@given(st.lists(words, max_size=10))
def test_canonical_text_roundtrips(tokens):
    t = TestCase(tuple(tokens))
    assert TestCase.from_text(t.canonical_text) == t
