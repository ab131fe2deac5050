"""Patent corpus ingestion, name normalization, and frequency statistics.

Raw inventor name strings carry academic titles, umlauts, and inconsistent
casing.  Normalization maps them onto a canonical uppercase ASCII form so
that blocking can require exact equality.  Frequency tables over normalized
attribute values drive the common/rare split used by the scoring schemes:
a value is Rare when its population count falls strictly below the median
count, Common otherwise.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from statistics import median
from typing import Iterable, Sequence


class Source(str, Enum):
    GDR = "GDR"
    DPMA = "DPMA"


class Rarity(str, Enum):
    COMMON = "Common"
    RARE = "Rare"


class Attribute(str, Enum):
    NAME = "Name"
    MUNICIPALITY = "Municipality"
    ASSIGNEE = "Assignee"
    IPC_CLASS = "IpcClass"


class EmptyAfterNormalization(ValueError):
    """Raw name consisted only of titles and punctuation."""


class UnknownAttribute(ValueError):
    pass


class EmptyAttributeColumn(ValueError):
    """All records had null/empty values for the requested attribute."""


class SchemaMismatch(ValueError):
    pass


class MalformedRow(ValueError):
    def __init__(self, row_no: int, reason: str):
        self.row_no = row_no
        self.reason = reason
        super().__init__(f"row {row_no}: {reason}")


# Academic titles and degree fragments stripped token-wise during name
# normalization.  Tokens are compared after transliteration and upper-casing.
TITLE_STOPLIST = frozenset(
    {"DR", "PROF", "DIPL", "ING", "MED", "HABIL", "RER", "NAT", "PHIL", "DD", "OBERING"}
)

_TRANSLIT = str.maketrans(
    {"Ä": "AE", "Ö": "OE", "Ü": "UE", "ä": "AE", "ö": "OE", "ü": "UE", "ß": "SS"}
)

# Everything except letters, hyphen, and whitespace becomes a separator.
_PUNCT_RE = re.compile(r"[^A-Z\- ]+")
_WS_RE = re.compile(r"\s+")


def normalize_name(raw: str) -> str:
    """Canonicalize an inventor name: strip titles, transliterate umlauts,
    upper-case, and collapse whitespace.

    Raises EmptyAfterNormalization when nothing but titles/punctuation
    remains.  Idempotent: applying twice yields the same string.
    """
    if not raw or not raw.strip():
        raise EmptyAfterNormalization(repr(raw))
    text = raw.translate(_TRANSLIT).upper()
    text = _PUNCT_RE.sub(" ", text)
    tokens = []
    for token in _WS_RE.split(text):
        token = token.strip("-")
        if not token:
            continue
        # Drop the token only when every hyphen-part is a title fragment
        # ("DIPL-ING"); hyphenated surnames survive because at least one
        # part is not in the stoplist.
        parts = [p for p in token.split("-") if p]
        if parts and all(p in TITLE_STOPLIST for p in parts):
            continue
        tokens.append("-".join(parts))
    if not tokens:
        raise EmptyAfterNormalization(repr(raw))
    return " ".join(tokens)


@dataclass(frozen=True)
class PatentRecord:
    """One patent document with its inventor mentions."""

    record_id: str
    source: Source
    filing_year: int
    inventors: tuple[str, ...]
    ipc_main: str
    ipc_secondary: tuple[str, ...] = ()
    applicant: str | None = None
    municipality: str | None = None
    abstract: str | None = None
    cited_record_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not (1980 <= self.filing_year <= 2000):
            raise ValueError(f"filing_year {self.filing_year} outside [1980, 2000]")
        if not self.ipc_main:
            raise ValueError("ipc_main must be non-empty")
        if not self.inventors:
            raise ValueError("at least one inventor mention required")
        if self.source is Source.GDR and self.cited_record_ids:
            raise ValueError("GDR records carry no citations")

    def normalized_inventors(self) -> tuple[str, ...]:
        return tuple(normalize_name(n) for n in self.inventors)


@dataclass
class FrequencyTable:
    """Counts of normalized attribute values plus the rarity split point."""

    attribute: Attribute
    counts: dict[str, int]
    median: float

    def classify(self, value: str) -> Rarity:
        # Strictly-below-median counts are Rare; ties go to Common.
        if self.counts.get(value, 0) < self.median:
            return Rarity.RARE
        return Rarity.COMMON


def _attribute_values(record: PatentRecord, attribute: Attribute) -> list[str]:
    if attribute is Attribute.NAME:
        return list(record.normalized_inventors())
    if attribute is Attribute.MUNICIPALITY:
        return [record.municipality] if record.municipality else []
    if attribute is Attribute.ASSIGNEE:
        return [record.applicant] if record.applicant else []
    if attribute is Attribute.IPC_CLASS:
        return [record.ipc_main, *record.ipc_secondary]
    raise UnknownAttribute(str(attribute))


def build_frequency_table(
    records: Sequence[PatentRecord],
    attribute: Attribute,
    *,
    allow_empty: bool = False,
    median_over_mentions: bool = False,
) -> FrequencyTable:
    """Count normalized attribute values over a record population.

    The rarity split point is the median of the distinct-value counts
    (or of the per-mention counts with median_over_mentions).  Result is
    independent of input record ordering.
    """
    if not isinstance(attribute, Attribute):
        raise UnknownAttribute(repr(attribute))
    if not records:
        raise ValueError("records must be non-empty")
    counts: dict[str, int] = {}
    for record in records:
        for value in _attribute_values(record, attribute):
            counts[value] = counts.get(value, 0) + 1
    if not counts:
        if allow_empty:
            return FrequencyTable(attribute, {}, 0.0)
        raise EmptyAttributeColumn(f"no values for {attribute.value}")
    if median_over_mentions:
        pool = [c for c in counts.values() for _ in range(c)]
    else:
        pool = list(counts.values())
    return FrequencyTable(attribute, counts, float(median(pool)))


@dataclass
class FrequencyTables:
    """The four per-population frequency tables used by the scoring schemes."""

    name: FrequencyTable
    municipality: FrequencyTable
    assignee: FrequencyTable
    ipc: FrequencyTable

    @classmethod
    def from_records(cls, records: Sequence[PatentRecord]) -> "FrequencyTables":
        return cls(
            name=build_frequency_table(records, Attribute.NAME),
            municipality=build_frequency_table(records, Attribute.MUNICIPALITY, allow_empty=True),
            assignee=build_frequency_table(records, Attribute.ASSIGNEE, allow_empty=True),
            ipc=build_frequency_table(records, Attribute.IPC_CLASS),
        )


GDR_HEADER = [
    "record_id",
    "filing_year",
    "inventors",
    "applicant",
    "ipc_main",
    "ipc_secondary",
    "municipality",
    "abstract",
]
DPMA_HEADER = GDR_HEADER + ["cited_record_ids"]


def _split_multi(cell: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in cell.split(";") if part.strip())


def load_corpus(path, schema: Source) -> list[PatentRecord]:
    """Parse a patent CSV table, rejecting malformed rows with row numbers."""
    expected = GDR_HEADER if schema is Source.GDR else DPMA_HEADER
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        if header != expected:
            raise SchemaMismatch(f"{path}: header {header!r} != {expected!r}")
        records = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise MalformedRow(row_no, f"expected {len(expected)} cells, got {len(row)}")
            cells = dict(zip(expected, row))
            try:
                year = int(cells["filing_year"])
            except ValueError:
                raise MalformedRow(row_no, f"bad filing_year {cells['filing_year']!r}") from None
            try:
                record = PatentRecord(
                    record_id=cells["record_id"],
                    source=schema,
                    filing_year=year,
                    inventors=_split_multi(cells["inventors"]),
                    applicant=cells["applicant"] or None,
                    ipc_main=cells["ipc_main"].strip(),
                    ipc_secondary=_split_multi(cells["ipc_secondary"]),
                    municipality=cells["municipality"] or None,
                    abstract=cells["abstract"] or None,
                    cited_record_ids=_split_multi(cells.get("cited_record_ids", "")),
                )
            except ValueError as exc:
                raise MalformedRow(row_no, str(exc)) from None
            records.append(record)
    return records


def dump_corpus(records: Iterable[PatentRecord], path, schema: Source) -> None:
    """Write records back to the CSV schema; inverse of load_corpus."""
    expected = GDR_HEADER if schema is Source.GDR else DPMA_HEADER
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(expected)
        for r in records:
            row = [
                r.record_id,
                str(r.filing_year),
                ";".join(r.inventors),
                r.applicant or "",
                r.ipc_main,
                ";".join(r.ipc_secondary),
                r.municipality or "",
                r.abstract or "",
            ]
            if schema is Source.DPMA:
                row.append(";".join(r.cited_record_ids))
            writer.writerow(row)
