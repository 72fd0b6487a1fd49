import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slrupdate.errors import EmptySeedSet, ProviderUnavailable
from slrupdate.providers import FixtureProvider
from slrupdate.providers.fixture import FIXTURE_FORMAT
from slrupdate.records import parse_bibtex, read_ledger, serialize_bibtex, write_ledger
from slrupdate.snowball import FRONTIER_EMPTY, ITERATIONS_EXHAUSTED, SnowballRequest, run_snowballing, seed_bibtex


def _run(fixture, directions=("backward", "forward"), iterations=5, out=None, parallelism=1):
    provider = FixtureProvider(fixture.world, parallelism=parallelism)
    req = SnowballRequest(tuple(fixture.seeds), directions, iterations)
    return run_snowballing(req, provider, out_dir=out), provider


def test_graph_counts(graph):
    res, _ = _run(graph)
    assert res["backward"].counts() == [12, 2, 3, 1]
    assert res["forward"].counts() == [1, 12, 1, 0]
    assert res.iterations_run == 4
    assert res.total_discoveries == 32
    assert all(r.stop_reason == FRONTIER_EMPTY for r in res.directions.values())
    # two DOI-less studies could not be snowballed
    assert sum(1 for d in res.directions.values() for row in d.ledger if row.status == "DOI not found") == 2
    assert res.has_failures


def test_graph_ledger_statuses(graph):
    res, _ = _run(graph)
    back = res["backward"].ledger
    assert all(r.status == "Extraction successful" for r in back if r.iteration == 1 and r.done_in is None)
    done = [r for r in back if r.done_in is not None]
    assert done and all(r.done_in <= r.iteration for r in done)
    fwd = res["forward"]
    assert any(r.status == "Abstract not found" for r in fwd.ledger)
    # discoveries never repeat and never include seeds
    for d in res.directions.values():
        assert len(set(d.discoveries)) == len(d.discoveries)
        assert not set(d.discoveries) & set(graph.seeds)


def test_no_doi_stop(graph_no_doi):
    res, _ = _run(graph_no_doi, ("backward",))
    back = res["backward"]
    assert back.counts() == [12, 2, 3, 0]
    assert back.stop_reason == FRONTIER_EMPTY
    it4 = [r for r in back.ledger if r.iteration == 4]
    assert any(r.status == "DOI not found" and r.doi is None for r in it4)


def test_iteration_limit(graph):
    res, _ = _run(graph, ("backward",), iterations=2)
    assert res["backward"].counts() == [12, 2]
    assert res["backward"].stop_reason == ITERATIONS_EXHAUSTED


def test_output_files_match_serializers(graph, tmp_path):
    res, _ = _run(graph, out=tmp_path)
    for direction, dres in res.directions.items():
        buf = io.StringIO()
        write_ledger(dres.ledger, buf)
        assert (tmp_path / f"{direction}.csv").read_bytes() == buf.getvalue().encode("utf-8")
        bib = (tmp_path / f"{direction}.bib").read_text(encoding="utf-8")
        assert bib == serialize_bibtex(dres.records)
        assert parse_bibtex(bib) == dres.records
        assert read_ledger(tmp_path / f"{direction}.csv") == dres.ledger


def test_parallel_run_is_identical(graph, tmp_path):
    _run(graph, out=tmp_path / "p1")
    _run(graph, out=tmp_path / "p4", parallelism=4)
    for name in ("backward.csv", "backward.bib", "forward.csv", "forward.bib"):
        assert (tmp_path / "p1" / name).read_bytes() == (tmp_path / "p4" / name).read_bytes()


def test_memoized_fetches(graph):
    res, provider = _run(graph)
    # each study's neighbourhood and BibTeX is requested at most once per run
    assert provider.calls["fetch_neighborhood"] <= 9 + 32 + 2
    assert provider.calls["fetch_bibtex"] <= 32


def test_errors(graph):
    with pytest.raises(EmptySeedSet):
        SnowballRequest(())
    provider = FixtureProvider(graph.world)
    with pytest.raises(ProviderUnavailable):
        run_snowballing(SnowballRequest(("10.5555/unknown",)), provider)
    with pytest.raises(ValueError):
        SnowballRequest(("10.1/a",), ("sideways",))


def test_seed_bibtex(graph):
    ex = seed_bibtex(graph.seeds + ["10.5555/missing"], FixtureProvider(graph.world))
    assert len(ex.records) == 9
    assert ex.ledger[-1].status == ".bib file not found"


# -- oracle: breadth-first levels on random graphs -----------------------------

def _bfs_levels(edges, seeds, iterations):
    seen = set(seeds)
    frontier = sorted(seeds)
    levels = []
    for _ in range(iterations):
        if not frontier:
            break
        nxt = sorted({t for s in frontier for t in edges.get(s, ()) if t not in seen})
        seen.update(nxt)
        levels.append(nxt)
        frontier = nxt
    return levels


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 14), data=st.data())
def test_matches_bfs_oracle(n, data):
    dois = [f"10.9/n{i:02d}" for i in range(n)]
    edges = {d: sorted(set(data.draw(st.lists(st.sampled_from(dois), max_size=5)))) for d in dois}
    seeds = sorted(set(data.draw(st.lists(st.sampled_from(dois), min_size=1, max_size=3))))
    iterations = data.draw(st.integers(1, 4))
    works = {
        d: {"metadata": {"title": f"Title {d}"},
            "citations": [{"doi": t, "title": f"Title {t}"} for t in edges[d]],
            "references": [],
            "bibtex": f"@article{{k, title={{Title {d}}}}}",
            "abstract": "a"}
        for d in dois
    }
    world = {"format": FIXTURE_FORMAT, "version": 1, "works": works, "reference_index": {}}
    res = run_snowballing(SnowballRequest(tuple(seeds), ("forward",), iterations), FixtureProvider(world))
    levels = _bfs_levels(edges, seeds, iterations)
    # trailing empty level ends the run (and is itself recorded)
    got = [sorted(res["forward"].discovered_by_iteration[k]) for k in sorted(res["forward"].discovered_by_iteration)]
    assert got == levels
    total_rows = sum(len(edges[s]) for lvl in [seeds] + levels[:-1] for s in lvl) if levels else 0
    assert len(res["forward"].ledger) == total_rows
