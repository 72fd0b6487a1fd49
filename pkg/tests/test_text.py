import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrupdate.errors import EmptyCorpus, EmptyVocabulary, MissingTitle
from slrupdate.records import StudyRecord
from slrupdate.text import (
    LabeledDocument,
    SparseDocVector,
    TextPipeline,
    Vocabulary,
    build_vocabulary,
    default_pipeline,
    lemmatize,
    load_stopwords,
    merge_fields,
    preprocess,
    read_corpus_csv,
    to_matrix,
    vectorize,
    vectorize_documents,
    write_corpus_csv,
)


def test_merge_fields():
    assert merge_fields(StudyRecord("A", abstract="B")) == "A B"
    assert merge_fields(StudyRecord("A")) == "A"
    assert merge_fields(title=" A ", abstract="B") == "A B"
    with pytest.raises(MissingTitle):
        merge_fields(title="  ", abstract="B")


def test_preprocess_examples():
    # by hand: URL removed; "using" is a listed exception -> "use";
    # "snowballing" loses "ing"; "to" is a stop-word; "slrs" keeps its s
    # because the remaining stem "slr" is shorter than four characters
    assert preprocess("Using Forward Snowballing to update SLRs http://x.y/z") == [
        "use", "forward", "snowball", "update", "slrs"]
    assert preprocess("") == []
    assert preprocess("the of and") == []
    assert preprocess("42 x 2020 www.example.org/a b") == []
    assert TextPipeline(drop_short=False).preprocess("42 x") == ["42", "x"]


@pytest.mark.parametrize("token,expected", [
    ("studies", "study"),
    ("updating", "updat"),
    ("analysis", "analysis"),
    ("classes", "class"),
    ("status", "status"),
    ("papers", "paper"),
    ("gas", "gas"),
    ("bring", "bring"),
    ("searched", "search"),
    ("red", "red"),
])
def test_lemmatize_rules(token, expected):
    assert lemmatize(token) == expected


def test_stopword_list_is_fixed_size():
    words = load_stopwords()
    assert 170 <= len(words) <= 190
    assert {"the", "of", "and", "to"} <= words


def test_vocabulary_first_occurrence():
    docs = [LabeledDocument("1", "alpha beta"), LabeledDocument("2", "beta gamma")]
    v = build_vocabulary(docs)
    assert v.as_dict() == {"alpha": 0, "beta": 1, "gamma": 2}
    assert build_vocabulary(docs + docs) == v
    with pytest.raises(EmptyVocabulary):
        build_vocabulary([LabeledDocument("1", "the")])
    with pytest.raises(EmptyCorpus):
        build_vocabulary([])


def test_vectorize_counts():
    v = Vocabulary(("search", "snowball"))
    vec = vectorize(["snowball", "search", "snowball"], v)
    assert vec.pairs() == [(0, 1), (1, 2)]
    assert vectorize(["other"], v).pairs() == []
    assert vectorize([], v).pairs() == []
    with pytest.raises(ValueError):
        SparseDocVector((1, 0), (1, 1), 2)


def test_corpus_csv_round_trip(tmp_path):
    recs = [StudyRecord("T, one", doi="10.1/a", abstract='quote " here'), StudyRecord("T2", bib_key="k2")]
    path = tmp_path / "c.csv"
    write_corpus_csv(recs, 1, path)
    docs = read_corpus_csv(path)
    assert [d.id for d in docs] == ["10.1/a", "k2"]
    assert docs[0].merged_text == 'T, one quote " here'
    assert docs[1].relevance == 1


def test_to_matrix():
    v = Vocabulary(("a1", "b1", "c1"))
    m = to_matrix([vectorize(["a1", "c1", "c1"], v), vectorize([], v)])
    assert m.shape == (2, 3)
    assert m.toarray().tolist() == [[1, 0, 2], [0, 0, 0]]


_text = st.text(alphabet=st.characters(max_codepoint=0x17F, blacklist_categories=("Cs",)), max_size=120)
_wordy = st.lists(st.sampled_from(
    ["studies", "using", "snowballing", "reviews", "the", "analysis", "classes", "updated", "www.x.org/y",
     "https://a.b", "42", "Systematic", "SLRs", "mappings", "a", "is", "tools,", "(search)"]), max_size=30).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(st.one_of(_text, _wordy))
def test_preprocess_idempotent_and_stopword_free(text):
    toks = preprocess(text)
    assert preprocess(" ".join(toks)) == toks
    stop = load_stopwords()
    assert not set(toks) & stop


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(_text, _wordy), min_size=1, max_size=6))
def test_vocabulary_properties(texts):
    docs = [LabeledDocument(str(i), t or "x") for i, t in enumerate(texts)]
    try:
        v1 = build_vocabulary(docs)
    except EmptyVocabulary:
        return
    assert build_vocabulary(docs) == v1
    assert sorted(v1.as_dict().values()) == list(range(len(v1)))
    assert not set(v1.tokens) & load_stopwords()
    pipe = default_pipeline()
    for doc, vec in zip(docs, vectorize_documents(docs, v1)):
        assert list(vec.indices) == sorted(set(vec.indices))
        assert vec.total() == sum(1 for t in pipe.preprocess(doc.merged_text) if t in v1)
