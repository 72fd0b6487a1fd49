"""Generators for offline fixture worlds.

``snowball_world`` builds a small citation graph whose snowballing run
discovers 12/2/3/1 studies backward and 1/12/1/0 forward over four
iterations from nine seeds, with two DOI-less studies that cannot be
resolved.  ``update_world`` builds an update-scale world: 45 included
studies (41 with DOIs) used as seeds, whose single forward round reaches
1012 unique citing studies, together with a labelled training corpus and
candidate labels.  All text is synthetic; the generators only reproduce the
*shape* of those datasets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .providers.fixture import FIXTURE_FORMAT, stub_to_json
from .records import StudyRecord, build_reference_string, format_bibtex_entry, generate_bib_key, serialize_bibtex

_FIRST = ["Ana", "Bruno", "Carla", "Daniel", "Elena", "Felipe", "Gita", "Hugo", "Ines", "Jonas",
          "Karin", "Luis", "Maja", "Nikhil", "Olga", "Pedro", "Qiu", "Rosa", "Sven", "Tara"]
_LAST = ["Almeida", "Berg", "Costa", "Duarte", "Eklund", "Ferreira", "Gupta", "Hansen", "Ito", "Jensen",
         "Klein", "Lima", "Moreau", "Nakamura", "Oliveira", "Petrov", "Quinn", "Rossi", "Silva", "Tanaka"]
_VENUES = ["EASE", "ESEM", "ICSE", "Information and Software Technology", "Empirical Software Engineering",
           "Journal of Systems and Software", "SEAA", "XP"]

TOPIC_WORDS = (
    "snowballing systematic review literature update search evidence selection mapping strategy "
    "primary secondary replication guideline citation forward backward inclusion exclusion "
    "screening synthesis protocol automation reviewer seed iteration recall precision"
).split()
SE_WORDS = (
    "software engineering development testing requirement agile maintenance code quality "
    "empirical survey experiment tool process project team practice industry practitioner "
    "architecture design evaluation validation technique approach framework"
).split()
OFF_TOPIC_WORDS = (
    "blockchain energy robot vehicle network cloud security mobile game neural sensor privacy "
    "compiler microservice container performance embedded safety hardware quantum simulation "
    "fault vulnerability scheduling traffic"
).split()


def _pseudo_words(n: int, rng: np.random.Generator) -> list[str]:
    onsets = ["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "tr", "pl", "gr"]
    vowels = ["a", "e", "i", "o", "u"]
    codas = ["", "n", "r", "l", "m", "x", "k"]
    words: dict[str, None] = {}
    while len(words) < n:
        syll = int(rng.integers(2, 4))
        w = "".join(onsets[rng.integers(len(onsets))] + vowels[rng.integers(len(vowels))] for _ in range(syll))
        w += codas[rng.integers(len(codas))]
        words.setdefault(w, None)
    return list(words)


class _TextGen:
    def __init__(self, rng: np.random.Generator, n_filler: int = 1200):
        self.rng = rng
        self.filler = _pseudo_words(n_filler, rng)

    def words(self, n: int, topic: float, off: float) -> list[str]:
        out = []
        for u in self.rng.random(n):
            if u < topic:
                pool = TOPIC_WORDS
            elif u < topic + off:
                pool = OFF_TOPIC_WORDS
            elif u < topic + off + 0.25:
                pool = SE_WORDS
            else:
                pool = self.filler
            out.append(pool[self.rng.integers(len(pool))])
        return out

    def title(self, topic: float, off: float) -> str:
        w = self.words(int(self.rng.integers(5, 10)), topic, off)
        return " ".join(w).capitalize()

    def abstract(self, topic: float, off: float) -> str:
        sentences = []
        for _ in range(int(self.rng.integers(4, 8))):
            w = self.words(int(self.rng.integers(10, 20)), topic, off)
            sentences.append(" ".join(w).capitalize() + ".")
        return " ".join(sentences)

    def authors(self) -> tuple[str, ...]:
        k = int(self.rng.integers(1, 4))
        return tuple(f"{_FIRST[self.rng.integers(len(_FIRST))]} {_LAST[self.rng.integers(len(_LAST))]}" for _ in range(k))

    def record(self, doi: str | None, topic: float, off: float, year: int) -> StudyRecord:
        return StudyRecord(
            title=self.title(topic, off),
            doi=doi,
            abstract=self.abstract(topic, off),
            authors=self.authors(),
            venue=_VENUES[self.rng.integers(len(_VENUES))],
            year=year,
        )


def _bibtex_payload(record: StudyRecord) -> str:
    # Graph services rarely include abstracts in BibTeX; neither does the fixture.
    rec = record.with_(abstract=None, bib_key=generate_bib_key(record))
    return format_bibtex_entry(rec)


def _work(record: StudyRecord, *, in_graph: bool = True, with_bibtex: bool = True,
          with_abstract: bool = True) -> dict[str, Any]:
    w: dict[str, Any] = {}
    if in_graph:
        meta = stub_to_json(record)
        meta.pop("doi", None)
        w["metadata"] = meta
        w["references"] = []
        w["citations"] = []
    if with_bibtex:
        w["bibtex"] = _bibtex_payload(record)
    if with_abstract and record.abstract:
        w["abstract"] = record.abstract
    return w


def _stub(record: StudyRecord, with_doi: bool = True) -> dict[str, Any]:
    s = stub_to_json(record)
    if not with_doi:
        s.pop("doi", None)
    return s


# --------------------------------------------------------------------------
# Multi-iteration world
# --------------------------------------------------------------------------

EXPECTED_BACKWARD = (12, 2, 3, 1)
EXPECTED_FORWARD = (1, 12, 1, 0)


@dataclass
class SnowballFixture:
    world: dict[str, Any]
    seeds: list[str]
    expected_backward: tuple[int, ...]
    expected_forward: tuple[int, ...]
    missing_titles: list[str] = field(default_factory=list)

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        world_path = d / "world.json"
        world_path.write_text(json.dumps(self.world, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        seeds_path = d / "seeds.txt"
        seeds_path.write_text("".join(f"https://doi.org/{s}\n" for s in self.seeds), encoding="utf-8")
        return {"world": world_path, "seeds": seeds_path}


def snowball_world(no_doi_stop: bool = False, seed: int = 2014) -> SnowballFixture:
    """Nine seeds; backward discoveries 12/2/3/1 and forward 1/12/1/0.

    The backward iteration-4 study has no DOI in the graph.  By default its
    reference string resolves to a DOI that the graph does not know, so the
    run ends when iteration 5 cannot expand it.  With ``no_doi_stop`` the
    resolution fails instead: iteration 4 then discovers nothing and records
    "DOI not found".
    """
    rng = np.random.default_rng(seed)
    gen = _TextGen(rng, n_filler=300)
    works: dict[str, dict[str, Any]] = {}
    index: dict[str, str] = {}

    def make(doi, **kw):
        rec = gen.record(doi, topic=0.4, off=0.05, year=int(rng.integers(2004, 2021)))
        if doi is not None:
            works[doi] = _work(rec, **kw)
        return rec

    seeds = [make(f"10.5555/sg.seed{i:02d}") for i in range(1, 10)]
    b1 = [make(f"10.5555/sg.b1.{i:02d}") for i in range(1, 13)]
    b2 = [make(f"10.5555/sg.b2.{i:02d}") for i in range(1, 3)]
    b3 = [make(f"10.5555/sg.b3.{i:02d}") for i in range(1, 4)]
    b4 = make("10.5555/sg.b4.01", in_graph=False)
    f1 = [make("10.5555/sg.f1.01")]
    f2 = [make(f"10.5555/sg.f2.{i:02d}", with_abstract=(i != 7)) for i in range(1, 13)]
    f3 = [make("10.5555/sg.f3.01")]
    missing = [make(None), make(None)]  # the two studies without any DOI

    def refs(rec, stubs):
        works[rec.doi]["references"].extend(stubs)

    def cites(rec, stubs):
        works[rec.doi]["citations"].extend(stubs)

    # backward, iteration 1: the nine seeds reference the twelve b1 studies,
    # with overlaps and references to other seeds (redundancy hits)
    for i, s in enumerate(seeds):
        chosen = {b1[(2 * i) % 12], b1[(2 * i + 1) % 12], b1[(i + 5) % 12]}
        stubs = [_stub(r) for r in sorted(chosen, key=lambda r: r.doi)]
        if i % 3 == 0:
            stubs.append(_stub(seeds[(i + 1) % 9]))
        refs(s, stubs)
    # backward, iteration 2: b1 -> b2 (two studies), plus back-links
    refs(b1[0], [_stub(b2[0]), _stub(seeds[0])])
    refs(b1[3], [_stub(b2[1]), _stub(b1[4])])
    refs(b1[7], [_stub(b2[0])])
    # backward, iteration 3: b2 -> three b3 studies and one DOI-less study
    refs(b2[0], [_stub(b3[0]), _stub(b3[1]), _stub(missing[0], with_doi=False)])
    refs(b2[1], [_stub(b3[2]), _stub(b3[0]), _stub(b1[2])])
    # backward, iteration 4: one study whose graph entry lacks its DOI
    refs(b3[1], [_stub(b4, with_doi=False), _stub(b2[1])])
    if not no_doi_stop:
        index[build_reference_string(b4)] = b4.doi

    # forward, iteration 1: one new citing study
    for i, s in enumerate(seeds):
        if i in (0, 4):
            cites(s, [_stub(f1[0])])
        if i == 2:
            cites(s, [_stub(seeds[5])])
    # forward, iteration 2: twelve citing studies and one DOI-less study
    cites(f1[0], [_stub(r) for r in f2] + [_stub(missing[1], with_doi=False), _stub(seeds[3])])
    # forward, iteration 3: one new study plus repeats
    cites(f2[4], [_stub(f3[0]), _stub(f2[5])])
    cites(f2[9], [_stub(f3[0])])
    # forward, iteration 4: nothing new
    cites(f3[0], [_stub(f1[0]), _stub(f2[0])])

    # Unrelated noise in the resolution index.
    for r in b1[:3]:
        index[build_reference_string(r)] = r.doi

    world = {"format": FIXTURE_FORMAT, "version": 1, "works": works, "reference_index": index}
    back = EXPECTED_BACKWARD if not no_doi_stop else (12, 2, 3, 0)
    return SnowballFixture(world, [s.doi for s in seeds], back, EXPECTED_FORWARD,
                         [m.title for m in missing])


# --------------------------------------------------------------------------
# Update-scale world
# --------------------------------------------------------------------------


@dataclass
class UpdateFixture:
    world: dict[str, Any]
    included: list[StudyRecord]
    excluded: list[StudyRecord]
    candidate_labels: dict[str, int]

    @property
    def seeds(self) -> list[str]:
        return [r.doi for r in self.included if r.doi]

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {
            "world": d / "world.json",
            "seeds": d / "seeds.txt",
            "included": d / "included.bib",
            "excluded": d / "excluded.bib",
            "labels": d / "labels.csv",
        }
        paths["world"].write_text(json.dumps(self.world, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        lines = [f"https://doi.org/{r.doi}" if r.doi else f"# no DOI: {r.title}" for r in self.included]
        paths["seeds"].write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths["included"].write_text(serialize_bibtex(self.included), encoding="utf-8")
        paths["excluded"].write_text(serialize_bibtex(self.excluded), encoding="utf-8")
        with open(paths["labels"], "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["id", "relevance"])
            for doi in sorted(self.candidate_labels):
                w.writerow([doi, self.candidate_labels[doi]])
        return paths


def _keyed(records: list[StudyRecord]) -> list[StudyRecord]:
    taken: set[str] = set()
    out = []
    for r in records:
        k = generate_bib_key(r, taken)
        taken.add(k)
        out.append(r.with_(bib_key=k))
    return out


def update_world(seed: int = 2023, n_included: int = 45, n_without_doi: int = 4,
                 n_excluded: int = 400, n_candidates: int = 1012, n_relevant: int = 33,
                 missing_abstract_rate: float = 0.05) -> UpdateFixture:
    rng = np.random.default_rng(seed)
    gen = _TextGen(rng)

    included = []
    for i in range(n_included):
        doi = None if i >= n_included - n_without_doi else f"10.5555/upd.inc{i:03d}"
        included.append(gen.record(doi, topic=0.35, off=0.03, year=int(rng.integers(2005, 2021))))
    excluded = [
        gen.record(f"10.5555/upd.exc{i:04d}", topic=float(rng.uniform(0.0, 0.15)),
                   off=float(rng.uniform(0.05, 0.35)), year=int(rng.integers(2005, 2021)))
        for i in range(n_excluded)
    ]
    relevant = set(rng.choice(n_candidates, size=n_relevant, replace=False).tolist())
    candidates = []
    for i in range(n_candidates):
        if i in relevant:
            topic, off = float(rng.uniform(0.15, 0.4)), 0.03
        else:
            topic, off = float(rng.uniform(0.0, 0.18)), float(rng.uniform(0.05, 0.4))
        candidates.append(gen.record(f"10.5555/upd.cand{i:04d}", topic, off, int(rng.integers(2021, 2024))))

    works: dict[str, dict[str, Any]] = {}
    seeds = [r for r in included if r.doi]
    for r in seeds:
        works[r.doi] = _work(r)
    for r in candidates:
        works[r.doi] = _work(r, in_graph=False, with_abstract=rng.random() >= missing_abstract_rate)

    # Every candidate is cited by one to three seeds, so the union holds
    # many duplicates that the redundancy check must absorb.
    for i, cand in enumerate(candidates):
        owners = {i % len(seeds)} | set(rng.choice(len(seeds), size=int(rng.integers(0, 3)), replace=False).tolist())
        for o in sorted(owners):
            works[seeds[o].doi]["citations"].append(_stub(cand))
    for j, s in enumerate(seeds):
        if j % 5 == 0:
            works[s.doi]["citations"].append(_stub(seeds[(j + 1) % len(seeds)]))

    world = {"format": FIXTURE_FORMAT, "version": 1, "works": works, "reference_index": {}}
    labels = {c.doi: int(i in relevant) for i, c in enumerate(candidates)}
    return UpdateFixture(world, _keyed(included), _keyed(excluded), labels)
