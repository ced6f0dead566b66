import pytest

from uqclf.data import ClassVocabulary, default_vocabulary


@pytest.fixture
def vocab7() -> ClassVocabulary:
    return default_vocabulary()


@pytest.fixture
def vocab3() -> ClassVocabulary:
    return ClassVocabulary(("a", "b", "c"))


@pytest.fixture
def vocab2() -> ClassVocabulary:
    return ClassVocabulary(("a", "b"))
