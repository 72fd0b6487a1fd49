import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrupdate.errors import DuplicateKey, InvalidDOI, MalformedBibTeX, MalformedCsv, MissingTitle, UnsupportedEncoding
from slrupdate.records import (
    LEDGER_HEADER,
    LedgerRow,
    StudyRecord,
    build_reference_string,
    done_already,
    format_bibtex_entry,
    generate_bib_key,
    normalize_doi,
    parse_bibtex,
    read_ledger,
    serialize_bibtex,
    write_ledger,
)

SAMPLE = """
@comment{ignore me}
@inproceedings{wohlin2014guidelines,
  author = {Claes Wohlin},
  title = {Guidelines for snowballing in systematic
           literature studies},
  booktitle = "Proceedings of EASE",
  year = 2014,
  doi = {https://doi.org/10.1145/2601248.2601268},
}
@article{second,
  title={Nested {Braces} in {T}itle}, journal={IST}, author={A. One and B. Two}
}
"""


def test_parse_sample():
    recs = parse_bibtex(SAMPLE)
    assert [r.bib_key for r in recs] == ["wohlin2014guidelines", "second"]
    first = recs[0]
    assert first.title == "Guidelines for snowballing in systematic literature studies"
    assert first.venue == "Proceedings of EASE"
    assert first.year == 2014
    assert first.doi == "10.1145/2601248.2601268"
    assert first.entry_type == "inproceedings"
    assert recs[1].authors == ("A. One", "B. Two")
    assert recs[1].title == "Nested {Braces} in {T}itle"


def test_parse_empty_and_bytes():
    assert parse_bibtex("") == []
    assert parse_bibtex(SAMPLE.encode("utf-8"))[0].year == 2014


def test_parse_errors():
    with pytest.raises(MalformedBibTeX):
        parse_bibtex("@article{k, title={unbalanced}")
    with pytest.raises(MalformedBibTeX):
        parse_bibtex("@article{k, author={x}}")
    with pytest.raises(UnsupportedEncoding):
        parse_bibtex(b"@article{k, title={\xff}}")


def test_serialize_format_and_duplicates():
    r = StudyRecord("A title", doi="10.1/x", authors=("Ann Lee",), year=2020, venue="V", bib_key="k")
    text = format_bibtex_entry(r)
    assert text == "@article{k,\n  author = {Ann Lee},\n  title = {A title},\n  venue = {V},\n  year = {2020},\n  doi = {10.1/x}\n}\n"
    with pytest.raises(DuplicateKey):
        serialize_bibtex([r, r])


def test_doi_normalization():
    assert normalize_doi("HTTPS://DOI.ORG/10.1145/ABC") == "10.1145/abc"
    assert normalize_doi("doi:10.1/x") == "10.1/x"
    assert normalize_doi("http://dx.doi.org/10.1/Y ") == "10.1/y"
    for bad in ("", "abc", "10.1", "https://example.org/10.1/x", "10.1/a b"):
        with pytest.raises(InvalidDOI):
            normalize_doi(bad)


def test_record_requires_title():
    with pytest.raises(MissingTitle):
        StudyRecord("  ")


def test_reference_string():
    r = StudyRecord("Snowballing", authors=("C. Wohlin",), venue="EASE", year=2014)
    assert build_reference_string(r) == 'C. Wohlin. "Snowballing." EASE (2014).'
    assert build_reference_string(StudyRecord("Only title")) == '"Only title."'


def test_bib_keys_unique():
    r = StudyRecord("The study", authors=("María José Núñez",), year=2020)
    k1 = generate_bib_key(r)
    assert k1 == "nunez2020the"
    assert generate_bib_key(r, {k1}) == "nunez2020the_2"
    assert generate_bib_key(r, {k1, k1 + "_2"}) == "nunez2020the_3"


def test_ledger_round_trip_and_quoting():
    rows = [
        LedgerRow('Doe, J. "A, b." V (2020).', "10.1/a", "Extraction successful", 1),
        LedgerRow("Ref two", None, "DOI not found", 2),
        LedgerRow("Ref three", "10.1/a", done_already(1), 2),
    ]
    buf = io.StringIO()
    write_ledger(rows, buf)
    text = buf.getvalue()
    assert text.startswith(LEDGER_HEADER)
    assert '"Doe, J. ""A, b."" V (2020).",10.1/a,Extraction successful,1\r\n' in text
    assert read_ledger(io.StringIO(text)) == rows
    assert rows[2].done_in == 1


def test_ledger_validation():
    with pytest.raises(ValueError):
        LedgerRow("r", None, "Extraction successful", 1)
    with pytest.raises(ValueError):
        LedgerRow("r", "10.1/a", "Done already in 0", 1)
    with pytest.raises(ValueError):
        LedgerRow("r", "10.1/a", "weird", 1)
    with pytest.raises(MalformedCsv):
        read_ledger(io.StringIO("a,b\r\n"))
    with pytest.raises(MalformedCsv):
        read_ledger(io.StringIO(LEDGER_HEADER + '"r",10.1/a,bogus,1\r\n'))


# -- property: serialize/parse round trip ------------------------------------

_word = st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), max_codepoint=0x24F),
                min_size=1, max_size=8)
_phrase = st.lists(_word, min_size=1, max_size=6).map(" ".join)
_doi = st.from_regex(r"10\.[0-9]{4}/[a-z0-9.\-]{1,12}", fullmatch=True)


@st.composite
def records(draw):
    n = draw(st.integers(0, 5))
    out = []
    for i in range(n):
        authors = tuple(a for a in draw(st.lists(_phrase, max_size=3)) if " and " not in f" {a} " and a != "and")
        out.append(StudyRecord(
            title=draw(_phrase),
            doi=draw(st.none() | _doi),
            abstract=draw(st.none() | _phrase),
            authors=authors,
            venue=draw(st.none() | _phrase),
            year=draw(st.none() | st.integers(1900, 2100)),
            bib_key=f"key{i}",
            entry_type=draw(st.sampled_from(["article", "inproceedings", "misc"])),
        ))
    return out


@settings(max_examples=150, deadline=None)
@given(records())
def test_bibtex_round_trip(recs):
    text = serialize_bibtex(recs)
    assert parse_bibtex(text) == recs
    assert serialize_bibtex(parse_bibtex(text)) == text


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(_phrase, st.none() | _doi, st.integers(1, 9),
                          st.sampled_from(["Extraction successful", "DOI not found", ".bib file not found",
                                           "Abstract not found", "Done already in 3"])), max_size=8))
def test_ledger_round_trip_property(raw):
    rows = []
    for ref, doi, it, status in raw:
        if status == "Extraction successful" and doi is None:
            doi = "10.1/x"
        rows.append(LedgerRow(ref, doi, status, it))
    buf = io.StringIO()
    write_ledger(rows, buf)
    assert read_ledger(io.StringIO(buf.getvalue())) == rows
