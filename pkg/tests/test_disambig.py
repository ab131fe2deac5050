import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from careerlink.corpus import Rarity, Source
from careerlink.disambig import (
    MATCH_THRESHOLD,
    Criterion,
    MissingAbstract,
    ScoringScheme,
    UniverseMismatch,
    block_by_name,
    build_idf,
    cluster,
    cosine_similarity,
    disambiguate,
    evaluate_clustering,
    score_pair,
    score_pair_abstract,
    tfidf_vector,
)
from tests.conftest import make_record, rarity_tables

RARE = Rarity.RARE
COMMON = Rarity.COMMON


def pair_with(**overrides):
    """Two same-name records sharing exactly the attributes in overrides."""
    base = dict(
        inventors=("Anna Weber",),
        applicant=None,
        municipality=None,
        ipc_main="C08F",
        ipc_secondary=(),
    )
    a = make_record(record_id="A", **{**base, "ipc_main": "C08F", **overrides})
    b = make_record(record_id="B", **{**base, "ipc_main": "H01L", **overrides})
    return a, b


def pairs_of(triples):
    from careerlink.disambig import PairScore

    return [PairScore(a, b, score, []) for a, b, score in triples]


def as_lists(partition):
    return [sorted(g) for g in partition]


def tables(name_rarity, attr_rarity):
    return rarity_tables(
        name={"ANNA WEBER": name_rarity},
        municipality={"Leipzig": attr_rarity},
        assignee={"VEB Chemie": attr_rarity},
        ipc={"C08F": attr_rarity, "H01L": COMMON},
    )


class TestCriterionScores:
    @pytest.mark.parametrize(
        "name_r,attr_r,expected",
        [(COMMON, COMMON, 80), (COMMON, RARE, 80), (RARE, COMMON, 80), (RARE, RARE, 100)],
    )
    def test_municipality(self, name_r, attr_r, expected):
        a = make_record(record_id="A", applicant=None, ipc_main="C08F")
        b = make_record(record_id="B", applicant=None, ipc_main="H01L")
        result = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(name_r, attr_r))
        assert result.total == expected
        assert result.breakdown == [(Criterion.MUNICIPALITY, expected)]

    @pytest.mark.parametrize(
        "name_r,attr_r,expected",
        [(COMMON, COMMON, 80), (COMMON, RARE, 80), (RARE, COMMON, 80), (RARE, RARE, 100)],
    )
    def test_assignee(self, name_r, attr_r, expected):
        a, b = pair_with(applicant="VEB Chemie")
        result = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(name_r, attr_r))
        assert result.breakdown == [(Criterion.ASSIGNEE, expected)]

    @pytest.mark.parametrize(
        "name_r,attr_r,expected",
        [(COMMON, COMMON, 50), (COMMON, RARE, 50), (RARE, COMMON, 50), (RARE, RARE, 80)],
    )
    def test_technology_class(self, name_r, attr_r, expected):
        a, b = pair_with(ipc_main="C08F")
        result = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(name_r, attr_r))
        assert result.breakdown == [(Criterion.TECH_CLASS, expected)]

    def test_co_inventor_flat_120(self):
        a = make_record(
            record_id="A", inventors=("Anna Weber", "Karl Otto"),
            applicant=None, municipality=None, ipc_main="C08F",
        )
        b = make_record(
            record_id="B", inventors=("Anna Weber", "Karl Otto"),
            applicant=None, municipality=None, ipc_main="H01L",
        )
        for name_r in (COMMON, RARE):
            result = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(name_r, COMMON))
            assert result.breakdown == [(Criterion.CO_INVENTORS, 120)]

    def test_citation_flat_120_dpma_only(self):
        a = make_record(
            record_id="A", source=Source.DPMA, filing_year=1994,
            applicant=None, municipality=None, ipc_main="C08F",
        )
        b = make_record(
            record_id="B", source=Source.DPMA, filing_year=1996,
            applicant=None, municipality=None, ipc_main="H01L",
            cited_record_ids=("A",),
        )
        dpma = score_pair(a, b, "ANNA WEBER", ScoringScheme.dpma_post90(), tables(COMMON, COMMON))
        assert dpma.breakdown == [(Criterion.CITATION, 120)]
        gdr_scheme = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(COMMON, COMMON))
        assert gdr_scheme.total == 0

    def test_scores_are_additive(self):
        a = make_record(record_id="A")
        b = make_record(record_id="B")
        result = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), tables(RARE, RARE))
        # municipality 100 + assignee 100 + rare class 80
        assert result.total == 280

    def test_symmetric(self):
        a, b = pair_with(applicant="VEB Chemie", municipality="Leipzig")
        t = tables(RARE, RARE)
        ab = score_pair(a, b, "ANNA WEBER", ScoringScheme.gdr_1989(), t)
        ba = score_pair(b, a, "ANNA WEBER", ScoringScheme.gdr_1989(), t)
        assert ab.total == ba.total


class TestAbstractScheme:
    def test_identical_abstracts_score_full_multiplier(self):
        text = "verfahren zur herstellung von polymeren"
        a = make_record(record_id="A", abstract=text, applicant=None,
                        municipality=None, ipc_main="C08F")
        b = make_record(record_id="B", abstract=text, applicant=None,
                        municipality=None, ipc_main="H01L")
        idf = build_idf([a.abstract, b.abstract])
        common = score_pair_abstract(a, b, "ANNA WEBER", tables(COMMON, COMMON), idf=idf)
        rare = score_pair_abstract(a, b, "ANNA WEBER", tables(RARE, COMMON), idf=idf)
        assert common.total == 80
        assert rare.total == 100

    def test_locations_ignored(self):
        text = "membran filter technik"
        a = make_record(record_id="A", abstract=text, ipc_main="C08F")
        b = make_record(record_id="B", abstract=text, ipc_main="H01L")
        idf = build_idf([text, text])
        result = score_pair_abstract(a, b, "ANNA WEBER", tables(COMMON, COMMON), idf=idf)
        assert Criterion.MUNICIPALITY not in [c for c, _ in result.breakdown]
        assert Criterion.ASSIGNEE not in [c for c, _ in result.breakdown]

    def test_missing_abstract_raises(self):
        a = make_record(record_id="A", abstract=None)
        b = make_record(record_id="B", abstract="text")
        with pytest.raises(MissingAbstract):
            score_pair_abstract(a, b, "ANNA WEBER", tables(COMMON, COMMON))

    def test_cosine_bounds(self):
        u = tfidf_vector("alpha beta gamma", {})
        v = tfidf_vector("alpha beta delta", {})
        sim = cosine_similarity(u, v)
        assert 0.0 < sim < 1.0
        assert cosine_similarity(u, u) == pytest.approx(1.0)
        assert cosine_similarity(u, {}) == 0.0


class TestClustering:
    def test_transitive_closure(self):
        pairs = pairs_of([("A", "B", 150), ("B", "C", 150), ("D", "E", 50)])
        result = cluster(pairs, MATCH_THRESHOLD, universe=["A", "B", "C", "D", "E"])
        assert as_lists(result) == [["A", "B", "C"], ["D"], ["E"]]

    def test_threshold_boundary(self):
        hit = cluster(pairs_of([("A", "B", 100)]), 100, universe=["A", "B"])
        assert as_lists(hit) == [["A", "B"]]
        miss = cluster(pairs_of([("A", "B", 99)]), 100, universe=["A", "B"])
        assert as_lists(miss) == [["A"], ["B"]]

    def test_singletons_preserved(self):
        assert as_lists(cluster([], 100, universe=["X"])) == [["X"]]

    @settings(max_examples=50)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_matches_brute_force_components(self, seed):
        rng = random.Random(seed)
        nodes = [f"N{i}" for i in range(rng.randint(2, 12))]
        pairs = [
            (a, b, rng.choice([0, 50, 99, 100, 150, 250]))
            for a, b in itertools.combinations(nodes, 2)
            if rng.random() < 0.4
        ]
        got = as_lists(cluster(pairs_of(pairs), 100, universe=nodes))
        # Brute force: adjacency over >= threshold edges, DFS components.
        adj = {n: set() for n in nodes}
        for a, b, s in pairs:
            if s >= 100:
                adj[a].add(b)
                adj[b].add(a)
        seen, expected = set(), []
        for n in sorted(nodes):
            if n in seen:
                continue
            stack, comp = [n], set()
            while stack:
                cur = stack.pop()
                if cur in comp:
                    continue
                comp.add(cur)
                stack.extend(adj[cur] - comp)
            seen |= comp
            expected.append(sorted(comp))
        assert got == sorted(expected)


class TestDisambiguate:
    def test_blocking_by_exact_name(self):
        records = [
            make_record(record_id="A", inventors=("Anna Weber",)),
            make_record(record_id="B", inventors=("Dr. Anna Weber",)),
            make_record(record_id="C", inventors=("Bert Braun",)),
        ]
        blocks = block_by_name(records)
        assert sorted(blocks) == ["ANNA WEBER", "BERT BRAUN"]
        assert {r.record_id for r in blocks["ANNA WEBER"]} == {"A", "B"}

    def test_same_attributes_merge(self):
        records = [make_record(record_id=f"R{i}") for i in range(3)]
        careers = disambiguate(records, ScoringScheme.gdr_1989())
        assert len(careers) == 1
        assert careers[0].member_records == frozenset({"R0", "R1", "R2"})

    def test_disjoint_attributes_split(self):
        a = make_record(record_id="A", municipality="Leipzig", applicant="VEB X", ipc_main="C08F")
        b = make_record(record_id="B", municipality="Dresden", applicant="VEB Y", ipc_main="H01L")
        careers = disambiguate([a, b], ScoringScheme.gdr_1989())
        assert len(careers) == 2

    def test_career_ids_deterministic(self):
        records = [make_record(record_id=f"R{i}") for i in range(4)]
        ids_fwd = [c.career_id for c in disambiguate(records, ScoringScheme.gdr_1989())]
        ids_rev = [c.career_id for c in disambiguate(records[::-1], ScoringScheme.gdr_1989())]
        assert ids_fwd == ids_rev

    def test_cluster_summary_fields(self):
        records = [
            make_record(record_id="R0", filing_year=1985, ipc_main="C08F"),
            make_record(record_id="R1", filing_year=1989, ipc_main="C08F"),
        ]
        (career,) = disambiguate(records, ScoringScheme.gdr_1989())
        assert career.first_year == 1985
        assert career.last_year == 1989
        assert career.ipc_main_mode == "C08F"


class TestEvaluateClustering:
    def test_perfect(self):
        metrics = evaluate_clustering([["A", "B"], ["C"]], [["A", "B"], ["C"]])
        assert metrics == {"pairwise_precision": 1.0, "pairwise_recall": 1.0, "f1": 1.0}

    def test_over_merge_hits_precision(self):
        metrics = evaluate_clustering([["A", "B", "C"]], [["A", "B"], ["C"]])
        assert metrics["pairwise_precision"] == pytest.approx(1 / 3)
        assert metrics["pairwise_recall"] == 1.0

    def test_universe_mismatch(self):
        with pytest.raises(UniverseMismatch):
            evaluate_clustering([["A"]], [["A", "B"]])

    def test_empty_pairs_convention(self):
        metrics = evaluate_clustering([["A"], ["B"]], [["A"], ["B"]])
        assert metrics["f1"] == 1.0


class TestSchemeRoundTrip:
    def test_save_load(self, tmp_path):
        for scheme in (ScoringScheme.gdr_1989(), ScoringScheme.dpma_post90()):
            path = tmp_path / f"{scheme.scheme_id.value}.csv"
            scheme.save(path)
            loaded = ScoringScheme.load(path, scheme.scheme_id)
            assert loaded.criterion_scores == dict(scheme.criterion_scores)
            assert loaded.threshold == scheme.threshold
            assert loaded.use_citations == scheme.use_citations
