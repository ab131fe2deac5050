"""Pairwise scored disambiguation of patent mentions into inventor careers.

Mentions sharing an exact normalized name form a block.  Within a block,
every record pair receives an accumulated score over matching criteria
(municipality, assignee, technology class, co-inventors, and for DPMA data
citation links); pairs at or above the threshold of 100 are merged, and
merging is closed transitively.  Scores depend on the rarity of the name
and of the matched attribute value.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .corpus import (
    FrequencyTables,
    PatentRecord,
    Rarity,
    normalize_name,
)

MATCH_THRESHOLD = 100


class Criterion(str, Enum):
    MUNICIPALITY = "Municipality"
    ASSIGNEE = "Assignee"
    TECH_CLASS = "TechnologyClass"
    CO_INVENTORS = "CoInventors"
    CITATION = "Citation"
    ABSTRACT = "Abstract"


class SchemeId(str, Enum):
    GDR_1989 = "gdr1989"
    DPMA_POST90 = "dpma_post90"
    GDR_1980_ABSTRACT = "gdr1980_abstract"


class MissingFrequencyTable(ValueError):
    pass


class MissingAbstract(ValueError):
    pass


class UniverseMismatch(ValueError):
    pass


# (criterion, name rarity, attribute rarity) -> points, shared by the two
# rarity-graded schemes.
_BASE_SCORES = {
    (Criterion.MUNICIPALITY, Rarity.COMMON, Rarity.COMMON): 80,
    (Criterion.MUNICIPALITY, Rarity.COMMON, Rarity.RARE): 80,
    (Criterion.MUNICIPALITY, Rarity.RARE, Rarity.COMMON): 80,
    (Criterion.MUNICIPALITY, Rarity.RARE, Rarity.RARE): 100,
    (Criterion.ASSIGNEE, Rarity.COMMON, Rarity.COMMON): 80,
    (Criterion.ASSIGNEE, Rarity.COMMON, Rarity.RARE): 80,
    (Criterion.ASSIGNEE, Rarity.RARE, Rarity.COMMON): 80,
    (Criterion.ASSIGNEE, Rarity.RARE, Rarity.RARE): 100,
    (Criterion.TECH_CLASS, Rarity.COMMON, Rarity.COMMON): 50,
    (Criterion.TECH_CLASS, Rarity.COMMON, Rarity.RARE): 50,
    (Criterion.TECH_CLASS, Rarity.RARE, Rarity.COMMON): 50,
    (Criterion.TECH_CLASS, Rarity.RARE, Rarity.RARE): 80,
}

CO_INVENTOR_SCORE = 120
CITATION_SCORE = 120

# Cosine-similarity multipliers for the 1980s abstract-based variant.
ABSTRACT_MULTIPLIER = {Rarity.COMMON: 80, Rarity.RARE: 100}


@dataclass(frozen=True)
class ScoringScheme:
    scheme_id: SchemeId
    criterion_scores: Mapping[tuple[Criterion, Rarity, Rarity], int]
    threshold: int = MATCH_THRESHOLD
    use_citations: bool = False
    use_abstracts: bool = False
    use_locations: bool = True
    include_secondary_ipc: bool = False

    @classmethod
    def gdr_1989(cls) -> "ScoringScheme":
        return cls(SchemeId.GDR_1989, dict(_BASE_SCORES))

    @classmethod
    def dpma_post90(cls) -> "ScoringScheme":
        return cls(SchemeId.DPMA_POST90, dict(_BASE_SCORES), use_citations=True)

    @classmethod
    def gdr_1980_abstract(cls) -> "ScoringScheme":
        # Municipality/assignee data is unavailable pre-1989; abstracts
        # substitute for them.
        return cls(
            SchemeId.GDR_1980_ABSTRACT,
            dict(_BASE_SCORES),
            use_abstracts=True,
            use_locations=False,
        )

    @classmethod
    def by_id(cls, scheme_id: SchemeId | str) -> "ScoringScheme":
        scheme_id = SchemeId(scheme_id)
        return {
            SchemeId.GDR_1989: cls.gdr_1989,
            SchemeId.DPMA_POST90: cls.dpma_post90,
            SchemeId.GDR_1980_ABSTRACT: cls.gdr_1980_abstract,
        }[scheme_id]()

    def save(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["criterion", "name_rarity", "attr_rarity", "score"])
            writer.writerow(["Threshold", "", "", str(self.threshold)])
            for (crit, name_r, attr_r), score in sorted(
                self.criterion_scores.items(), key=lambda kv: [x.value for x in kv[0]]
            ):
                writer.writerow([crit.value, name_r.value, attr_r.value, str(score)])
            if self.use_citations:
                writer.writerow([Criterion.CITATION.value, "Any", "Any", str(CITATION_SCORE)])
            writer.writerow([Criterion.CO_INVENTORS.value, "Any", "Any", str(CO_INVENTOR_SCORE)])
            if self.use_abstracts:
                for rarity, mult in ABSTRACT_MULTIPLIER.items():
                    writer.writerow([Criterion.ABSTRACT.value, rarity.value, "Any", str(mult)])

    @classmethod
    def load(cls, path, scheme_id: SchemeId = SchemeId.GDR_1989) -> "ScoringScheme":
        scores: dict[tuple[Criterion, Rarity, Rarity], int] = {}
        threshold = MATCH_THRESHOLD
        use_citations = False
        use_abstracts = False
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                crit = row["criterion"]
                if crit == "Threshold":
                    threshold = int(row["score"])
                elif crit == Criterion.CITATION.value:
                    use_citations = True
                elif crit == Criterion.CO_INVENTORS.value:
                    continue
                elif crit == Criterion.ABSTRACT.value:
                    use_abstracts = True
                else:
                    key = (Criterion(crit), Rarity(row["name_rarity"]), Rarity(row["attr_rarity"]))
                    scores[key] = int(row["score"])
        return cls(
            scheme_id,
            scores,
            threshold=threshold,
            use_citations=use_citations,
            use_abstracts=use_abstracts,
            use_locations=not use_abstracts,
        )


@dataclass
class PairScore:
    record_a: str
    record_b: str
    total: int
    breakdown: list[tuple[Criterion, int]]


@dataclass
class CareerCluster:
    """A disambiguated inventor career: one normalized name, a set of
    member records, and modal attributes derived from them."""

    career_id: str
    name: str
    member_records: frozenset[str]
    ipc_main_mode: str
    ipc_secondary_mode: str | None
    first_year: int
    last_year: int
    municipalities: tuple[tuple[int, str], ...] = ()
    applicants: tuple[str, ...] = ()
    filing_years: tuple[int, ...] = ()


def block_by_name(records: Sequence[PatentRecord]) -> dict[str, list[PatentRecord]]:
    """Group records by exact normalized inventor name.

    A record appears once in the block of each of its inventors; pairwise
    scoring never crosses blocks.
    """
    blocks: dict[str, list[PatentRecord]] = {}
    for record in records:
        for name in set(record.normalized_inventors()):
            blocks.setdefault(name, []).append(record)
    return blocks


def _co_inventor_overlap(a: PatentRecord, b: PatentRecord, focal: str) -> bool:
    co_a = set(a.normalized_inventors()) - {focal}
    co_b = set(b.normalized_inventors()) - {focal}
    return bool(co_a & co_b)


def _citation_link(a: PatentRecord, b: PatentRecord) -> bool:
    return a.record_id in b.cited_record_ids or b.record_id in a.cited_record_ids


def _shared_ipc(a: PatentRecord, b: PatentRecord, include_secondary: bool) -> str | None:
    if a.ipc_main == b.ipc_main:
        return a.ipc_main
    if include_secondary:
        shared = ({a.ipc_main, *a.ipc_secondary} & {b.ipc_main, *b.ipc_secondary})
        if shared:
            return min(shared)
    return None


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def score_pair(
    a: PatentRecord,
    b: PatentRecord,
    focal_name: str,
    scheme: ScoringScheme,
    freq: FrequencyTables,
    idf: Mapping[str, float] | None = None,
) -> PairScore:
    """Accumulate criterion scores for two same-name records.

    Symmetric in (a, b).  For abstract-based schemes an IDF table built
    from the block's abstracts must be supplied; records lacking abstracts
    simply contribute no abstract points.
    """
    if freq is None:
        raise MissingFrequencyTable("frequency tables required for scoring")
    name_rarity = freq.name.classify(focal_name)
    breakdown: list[tuple[Criterion, int]] = []

    if scheme.use_locations:
        if a.municipality and a.municipality == b.municipality:
            attr_r = freq.municipality.classify(a.municipality)
            breakdown.append(
                (Criterion.MUNICIPALITY, scheme.criterion_scores[(Criterion.MUNICIPALITY, name_rarity, attr_r)])
            )
        if a.applicant and a.applicant == b.applicant:
            attr_r = freq.assignee.classify(a.applicant)
            breakdown.append(
                (Criterion.ASSIGNEE, scheme.criterion_scores[(Criterion.ASSIGNEE, name_rarity, attr_r)])
            )

    shared_class = _shared_ipc(a, b, scheme.include_secondary_ipc)
    if shared_class is not None:
        attr_r = freq.ipc.classify(shared_class)
        breakdown.append(
            (Criterion.TECH_CLASS, scheme.criterion_scores[(Criterion.TECH_CLASS, name_rarity, attr_r)])
        )

    if _co_inventor_overlap(a, b, focal_name):
        breakdown.append((Criterion.CO_INVENTORS, CO_INVENTOR_SCORE))

    if scheme.use_citations and _citation_link(a, b):
        breakdown.append((Criterion.CITATION, CITATION_SCORE))

    if scheme.use_abstracts and a.abstract and b.abstract:
        sim = cosine_similarity(
            tfidf_vector(a.abstract, idf or {}), tfidf_vector(b.abstract, idf or {})
        )
        points = _round_half_up(sim * ABSTRACT_MULTIPLIER[name_rarity])
        if points:
            breakdown.append((Criterion.ABSTRACT, points))

    return PairScore(a.record_id, b.record_id, sum(p for _, p in breakdown), breakdown)


def score_pair_abstract(
    a: PatentRecord,
    b: PatentRecord,
    focal_name: str,
    freq: FrequencyTables,
    idf: Mapping[str, float] | None = None,
) -> PairScore:
    """Score a pre-1989 pair under the abstract-based scheme.

    Raises MissingAbstract when either abstract is null; the caller decides
    whether to fall back to scoring without the abstract term.
    """
    if not a.abstract or not b.abstract:
        raise MissingAbstract(f"{a.record_id if not a.abstract else b.record_id} has no abstract")
    return score_pair(a, b, focal_name, ScoringScheme.gdr_1980_abstract(), freq, idf=idf)


# --- abstract text vectorization -------------------------------------------

_TOKEN_RE = re.compile(r"[a-zäöüß]+")

# Minimal German function-word list; abstracts are compared on content terms.
GERMAN_STOPWORDS = frozenset(
    """der die das den dem des ein eine einer eines einem einen und oder mit
    von zu zur zum im in an auf aus bei durch für gegen ohne um als auch ist
    sind wird werden wurde sowie nach vor über unter dass sich nicht es am
    je bis mehr kann können dies diese dieser dieses wobei hierbei dabei"""
    .split()
)


def tokenize_abstract(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in GERMAN_STOPWORDS]


def build_idf(abstracts: Iterable[str]) -> dict[str, float]:
    """Smoothed inverse document frequencies over a block's abstracts."""
    docs = [set(tokenize_abstract(a)) for a in abstracts]
    n_docs = len(docs)
    df = Counter(token for doc in docs for token in doc)
    return {tok: math.log((1 + n_docs) / (1 + d)) + 1.0 for tok, d in df.items()}


def tfidf_vector(text: str, idf: Mapping[str, float]) -> dict[str, float]:
    tf = Counter(tokenize_abstract(text))
    return {tok: count * idf.get(tok, 1.0) for tok, count in tf.items()}


def cosine_similarity(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    dot = sum(w * v[tok] for tok, w in u.items() if tok in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


# --- clustering -------------------------------------------------------------


class _UnionFind:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Deterministic representative keeps output order-independent.
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def cluster(
    pairs: Sequence[PairScore],
    threshold: int = MATCH_THRESHOLD,
    universe: Iterable[str] | None = None,
) -> list[frozenset[str]]:
    """Union-find over pairs meeting the threshold; transitive closure.

    `universe` supplies mention ids that must appear in the output even
    when they match nothing (singletons).  Output is a partition sorted by
    smallest member, invariant to pair ordering.
    """
    members = set(universe or [])
    for p in pairs:
        members.add(p.record_a)
        members.add(p.record_b)
    uf = _UnionFind(members)
    for p in pairs:
        if p.total >= threshold:
            uf.union(p.record_a, p.record_b)
    groups: dict[str, set[str]] = {}
    for m in members:
        groups.setdefault(uf.find(m), set()).add(m)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def _mode(values: Iterable[str]) -> str | None:
    counts = Counter(v for v in values if v)
    if not counts:
        return None
    # Highest count, ties broken lexicographically.
    return min(counts, key=lambda v: (-counts[v], v))


def disambiguate(
    records: Sequence[PatentRecord],
    scheme: ScoringScheme,
    freq: FrequencyTables | None = None,
    career_prefix: str = "C",
) -> list[CareerCluster]:
    """Run the full block -> score -> cluster pipeline over a corpus."""
    if freq is None:
        freq = FrequencyTables.from_records(records)
    blocks = block_by_name(records)
    careers: list[CareerCluster] = []
    raw: list[tuple[str, frozenset[str], dict[str, PatentRecord]]] = []
    for name in sorted(blocks):
        block = blocks[name]
        by_id = {r.record_id: r for r in block}
        idf = None
        if scheme.use_abstracts:
            idf = build_idf([r.abstract for r in block if r.abstract])
        pairs = []
        ids = sorted(by_id)
        for i, ra in enumerate(ids):
            for rb in ids[i + 1 :]:
                pairs.append(score_pair(by_id[ra], by_id[rb], name, scheme, freq, idf=idf))
        for group in cluster(pairs, scheme.threshold, universe=ids):
            raw.append((name, group, by_id))
    raw.sort(key=lambda t: (t[0], min(t[1])))
    for idx, (name, group, by_id) in enumerate(raw):
        recs = [by_id[rid] for rid in sorted(group)]
        careers.append(
            CareerCluster(
                career_id=f"{career_prefix}{idx:06d}",
                name=name,
                member_records=frozenset(group),
                ipc_main_mode=_mode(r.ipc_main for r in recs),
                ipc_secondary_mode=_mode(s for r in recs for s in r.ipc_secondary),
                first_year=min(r.filing_year for r in recs),
                last_year=max(r.filing_year for r in recs),
                municipalities=tuple(
                    (r.filing_year, r.municipality) for r in recs if r.municipality
                ),
                applicants=tuple(r.applicant for r in recs if r.applicant),
                filing_years=tuple(sorted(r.filing_year for r in recs)),
            )
        )
    return careers


def evaluate_clustering(
    predicted: Iterable[Iterable[str]], truth: Iterable[Iterable[str]]
) -> dict[str, float]:
    """Pairwise precision/recall/F1 of a predicted partition against truth.

    Empty pair sets score 1.0 by convention (nothing asserted, nothing
    wrong).
    """

    def pair_set(partition):
        pairs = set()
        seen = set()
        for group in partition:
            group = sorted(group)
            for m in group:
                if m in seen:
                    raise UniverseMismatch(f"mention {m!r} appears in two clusters")
                seen.add(m)
            for i, a in enumerate(group):
                for b in group[i + 1 :]:
                    pairs.add((a, b))
        return pairs, seen

    pred_pairs, pred_universe = pair_set(predicted)
    true_pairs, true_universe = pair_set(truth)
    if pred_universe != true_universe:
        raise UniverseMismatch(
            f"universes differ: {sorted(pred_universe ^ true_universe)[:5]} ..."
        )
    hits = len(pred_pairs & true_pairs)
    precision = hits / len(pred_pairs) if pred_pairs else 1.0
    recall = hits / len(true_pairs) if true_pairs else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return {"pairwise_precision": precision, "pairwise_recall": recall, "f1": f1}


def write_careers_csv(careers: Sequence[CareerCluster], path, source: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if source is None:
            writer.writerow(["career_id", "record_id"])
        else:
            writer.writerow(["source", "career_id", "record_id"])
        for career in careers:
            for rid in sorted(career.member_records):
                row = [career.career_id, rid]
                if source is not None:
                    row = [source] + row
                writer.writerow(row)
