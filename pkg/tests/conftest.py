import pytest

from careerlink.corpus import (
    Attribute,
    FrequencyTable,
    FrequencyTables,
    PatentRecord,
    Rarity,
    Source,
)


def make_record(
    record_id="R1",
    source=Source.GDR,
    filing_year=1989,
    inventors=("Anna Weber",),
    ipc_main="C08F",
    ipc_secondary=(),
    applicant="VEB Chemie",
    municipality="Leipzig",
    abstract=None,
    cited_record_ids=(),
):
    return PatentRecord(
        record_id=record_id,
        source=source,
        filing_year=filing_year,
        inventors=inventors,
        ipc_main=ipc_main,
        ipc_secondary=ipc_secondary,
        applicant=applicant,
        municipality=municipality,
        abstract=abstract,
        cited_record_ids=cited_record_ids,
    )


def rarity_tables(name=None, municipality=None, assignee=None, ipc=None) -> FrequencyTables:
    """Frequency tables with hand-assigned rarity per value.

    Each argument maps value -> Rarity; Rare values get count 1 and Common
    values count 2 against a median of 2, reproducing the strict-below-
    median rule.  Values not listed come out Rare (count 0)."""

    def table(attribute, assignment):
        counts = {
            v: (1 if r is Rarity.RARE else 2) for v, r in (assignment or {}).items()
        }
        return FrequencyTable(attribute, counts, 2.0)

    return FrequencyTables(
        name=table(Attribute.NAME, name),
        municipality=table(Attribute.MUNICIPALITY, municipality),
        assignee=table(Attribute.ASSIGNEE, assignee),
        ipc=table(Attribute.IPC_CLASS, ipc),
    )


@pytest.fixture
def record_factory():
    return make_record
