"""Matching East German careers to post-1990 West German careers.

Careers sharing a normalized name are compared on modal technology
classes and on how soon the West career starts; 100 points or more makes
a link, and each East career keeps only its best-scoring candidate.
"""

from careerlink import (
    FrequencyTables,
    PatentRecord,
    ScoringScheme,
    Source,
    disambiguate,
    link_careers,
)

gdr_records = [
    PatentRecord("G1", Source.GDR, 1987, ("Anna Weber",), "C08F",
                 ipc_secondary=("A61K",), applicant="VEB Chemie", municipality="Halle"),
    PatentRecord("G2", Source.GDR, 1989, ("Anna Weber",), "C08F",
                 ipc_secondary=("A61K",), applicant="VEB Chemie", municipality="Halle"),
]
dpma_records = [
    # Same field, entry right after reunification: a strong candidate.
    PatentRecord("D1", Source.DPMA, 1991, ("Anna Weber",), "C08F",
                 ipc_secondary=("A61K",), applicant="BASF", municipality="Ludwigshafen"),
    # A namesake in microelectronics entering late: no shared class, 0 points.
    PatentRecord("D2", Source.DPMA, 1997, ("Anna Weber",), "H01L",
                 applicant="Siemens", municipality="München"),
]

gdr_careers = disambiguate(gdr_records, ScoringScheme.gdr_1989(), career_prefix="G")
dpma_careers = disambiguate(dpma_records, ScoringScheme.dpma_post90(), career_prefix="W")
freq = FrequencyTables.from_records(gdr_records)

links = link_careers(gdr_careers, dpma_careers, freq)
for link in links:
    print(f"{link.gdr_career_id} -> {link.dpma_career_id}"
          f"  score={link.total_score}  entry={link.entry_window.value}"
          f"  tied={link.tied}")

# The early same-field career wins; the late namesake never reaches the
# threshold, so the link is unambiguous.
