"""Cross-database matching of inventor careers and outcome construction.

GDR careers are matched to DPMA careers sharing the exact normalized name,
scored on primary/secondary technology class and the timing of the first
West German filing.  Matched careers define the Continued Inventing
outcome; post-1990 addresses in West German states define Continued in
West Germany.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .corpus import FrequencyTables, Rarity
from .disambig import CareerCluster

LINK_THRESHOLD = 100


class EntryWindow(str, Enum):
    EARLY = "Early"
    LATE = "Late"


class OutOfRange(ValueError):
    pass


class MissingGeoEntry(KeyError):
    pass


# Pre-1990 federal states plus West Berlin: membership defines the
# Continued-in-West outcome.  The Distance-West *control* excludes West
# Berlin, but distances arrive as inputs so no handling is needed here.
WEST_STATES = frozenset(
    {
        "Baden-Wuerttemberg",
        "Bayern",
        "Bremen",
        "Hamburg",
        "Hessen",
        "Niedersachsen",
        "Nordrhein-Westfalen",
        "Rheinland-Pfalz",
        "Saarland",
        "Schleswig-Holstein",
        "Berlin-West",
    }
)

# Career-matching scores: (criterion, name rarity, attribute rarity or
# entry window) -> points.
PRIMARY_CLASS_SCORES = {
    (Rarity.COMMON, Rarity.COMMON): 80,
    (Rarity.RARE, Rarity.COMMON): 80,
    (Rarity.COMMON, Rarity.RARE): 100,
    (Rarity.RARE, Rarity.RARE): 120,
}
SECONDARY_CLASS_SCORES = {
    (Rarity.COMMON, Rarity.COMMON): 60,
    (Rarity.RARE, Rarity.COMMON): 60,
    (Rarity.COMMON, Rarity.RARE): 80,
    (Rarity.RARE, Rarity.RARE): 100,
}
CAREER_START_SCORES = {
    (Rarity.COMMON, EntryWindow.EARLY): 40,
    (Rarity.RARE, EntryWindow.EARLY): 100,
    (Rarity.COMMON, EntryWindow.LATE): 0,
    (Rarity.RARE, EntryWindow.LATE): 0,
}


@dataclass
class CareerLink:
    gdr_career_id: str
    dpma_career_id: str
    total_score: int
    entry_window: EntryWindow
    matched: bool
    tied: bool = False


@dataclass
class GeoEntry:
    municipality: str
    distance_west_km: float
    population_density: float
    district_id: str
    state: str


@dataclass
class OutcomeRow:
    career_id: str
    continued: int
    continued_west: int | None
    gdr_patents: int
    academic: int
    female: int
    distance_west_km: float
    population_density: float
    municipality: str
    patent_stock: float | None = None
    career_age: int | None = None


def classify_entry_window(first_dpma_year: int) -> EntryWindow:
    if not (1990 <= first_dpma_year <= 1999):
        raise OutOfRange(f"first DPMA filing year {first_dpma_year} outside [1990, 1999]")
    return EntryWindow.EARLY if first_dpma_year <= 1993 else EntryWindow.LATE


def match_careers(
    gdr: CareerCluster,
    dpma: CareerCluster,
    freq: FrequencyTables,
    threshold: int = LINK_THRESHOLD,
) -> CareerLink:
    """Score one GDR/DPMA career pair with identical normalized names.

    Name and class rarity come from the GDR-side frequency tables (the
    population being matched outward).
    """
    if gdr.name != dpma.name:
        raise ValueError("careers must share the identical normalized name")
    name_rarity = freq.name.classify(gdr.name)
    window = classify_entry_window(dpma.first_year)
    total = 0
    if gdr.ipc_main_mode and gdr.ipc_main_mode == dpma.ipc_main_mode:
        total += PRIMARY_CLASS_SCORES[(name_rarity, freq.ipc.classify(gdr.ipc_main_mode))]
    if gdr.ipc_secondary_mode and gdr.ipc_secondary_mode == dpma.ipc_secondary_mode:
        total += SECONDARY_CLASS_SCORES[(name_rarity, freq.ipc.classify(gdr.ipc_secondary_mode))]
    total += CAREER_START_SCORES[(name_rarity, window)]
    return CareerLink(gdr.career_id, dpma.career_id, total, window, total >= threshold)


def link_careers(
    gdr_careers: Sequence[CareerCluster],
    dpma_careers: Sequence[CareerCluster],
    freq: FrequencyTables,
    threshold: int = LINK_THRESHOLD,
) -> list[CareerLink]:
    """Best match per GDR career over all same-name DPMA careers.

    Ties clear deterministically: highest score, then earliest DPMA entry
    year, then lexicographic DPMA career id; tied winners are flagged.
    Output ordered by GDR career id.
    """
    dpma_by_name: dict[str, list[CareerCluster]] = {}
    for career in dpma_careers:
        dpma_by_name.setdefault(career.name, []).append(career)
    links = []
    for gdr in sorted(gdr_careers, key=lambda c: c.career_id):
        candidates = []
        for dpma in dpma_by_name.get(gdr.name, []):
            try:
                link = match_careers(gdr, dpma, freq, threshold)
            except OutOfRange:
                continue
            if link.matched:
                candidates.append((link, dpma))
        if not candidates:
            continue
        candidates.sort(key=lambda t: (-t[0].total_score, t[1].first_year, t[1].career_id))
        best = candidates[0][0]
        if len(candidates) > 1:
            runner = candidates[1]
            best.tied = (
                runner[0].total_score == best.total_score
                and runner[1].first_year == candidates[0][1].first_year
            )
        links.append(best)
    return links


def _modal_municipality(career: CareerCluster) -> str | None:
    counts = Counter(m for _, m in career.municipalities)
    if not counts:
        return None
    return min(counts, key=lambda m: (-counts[m], m))


def build_outcomes(
    gdr_careers: Sequence[CareerCluster],
    links: Sequence[CareerLink],
    geo_table: Mapping[str, GeoEntry],
    sector_table: Mapping[str, int],
    dpma_careers: Sequence[CareerCluster] = (),
    names_table: Mapping[str, int] | None = None,
    stock_depreciation: float = 0.30,
    reference_year: int = 1990,
) -> list[OutcomeRow]:
    """Assemble one outcome row per GDR career.

    continued = 1 iff the career has a matched link; continued_west = 1
    iff any post-1990 address of the matched DPMA career lies in a West
    German state (null when not continued).  sector_table maps applicant
    -> academic flag; names_table maps first name token -> female flag.
    """
    link_by_gdr = {l.gdr_career_id: l for l in links if l.matched}
    dpma_by_id = {c.career_id: c for c in dpma_careers}
    rows = []
    for career in sorted(gdr_careers, key=lambda c: c.career_id):
        muni = _modal_municipality(career)
        if muni is None or muni not in geo_table:
            raise MissingGeoEntry(muni or career.career_id)
        geo = geo_table[muni]
        link = link_by_gdr.get(career.career_id)
        continued = 1 if link else 0
        continued_west: int | None = None
        if link:
            continued_west = 0
            dpma = dpma_by_id.get(link.dpma_career_id)
            if dpma is not None:
                for year, m in dpma.municipalities:
                    entry = geo_table.get(m)
                    if year > 1990 and entry is not None and entry.state in WEST_STATES:
                        continued_west = 1
                        break
        gdr_patents = sum(1 for y in career.filing_years if y in (1989, 1990))
        academic = int(any(sector_table.get(a, 0) for a in career.applicants))
        first_token = career.name.split()[0]
        female = int((names_table or {}).get(first_token, 0))
        stock = sum(
            (1.0 - stock_depreciation) ** (reference_year - y) for y in career.filing_years
        )
        rows.append(
            OutcomeRow(
                career_id=career.career_id,
                continued=continued,
                continued_west=continued_west,
                gdr_patents=max(gdr_patents, 1),
                academic=academic,
                female=female,
                distance_west_km=geo.distance_west_km,
                population_density=geo.population_density,
                municipality=muni,
                patent_stock=stock,
                career_age=min(10, reference_year - career.first_year),
            )
        )
    return rows


def write_links_csv(links: Sequence[CareerLink], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gdr_career_id", "dpma_career_id", "score", "entry_window", "matched"])
        for l in links:
            writer.writerow(
                [l.gdr_career_id, l.dpma_career_id, str(l.total_score), l.entry_window.value, str(int(l.matched))]
            )


def write_outcomes_csv(rows: Sequence[OutcomeRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "career_id",
                "continued",
                "continued_west",
                "gdr_patents",
                "academic",
                "female",
                "distance_west_km",
                "population_density",
                "municipality",
                "patent_stock",
                "career_age",
            ]
        )
        for r in rows:
            writer.writerow(
                [
                    r.career_id,
                    str(r.continued),
                    "" if r.continued_west is None else str(r.continued_west),
                    str(r.gdr_patents),
                    str(r.academic),
                    str(r.female),
                    repr(r.distance_west_km),
                    repr(r.population_density),
                    r.municipality,
                    "" if r.patent_stock is None else repr(r.patent_stock),
                    "" if r.career_age is None else str(r.career_age),
                ]
            )


def load_geo_table(path) -> dict[str, GeoEntry]:
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            table[row["municipality"]] = GeoEntry(
                municipality=row["municipality"],
                distance_west_km=float(row["distance_west_km"]),
                population_density=float(row["population_density"]),
                district_id=row["district_id"],
                state=row["state"],
            )
    return table


def load_flag_table(path, key: str, flag: str) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row[key]: int(row[flag]) for row in csv.DictReader(fh)}
