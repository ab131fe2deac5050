"""Grouping same-name patent mentions into inventor careers.

Records are blocked on the exact normalized name, every same-block pair is
scored on shared attributes, and pairs at or above 100 points merge
transitively into careers.
"""

import numpy as np  # noqa: F401  (kept for parity with the other scripts)

from careerlink import PatentRecord, ScoringScheme, Source, disambiguate, normalize_name

# Name normalization strips academic titles and transliterates umlauts, so
# spelling variants of one person land in the same block.
for raw in ["Dr. Jürgen Müller", "JUERGEN MUELLER", "Dipl.-Ing. Jürgen Müller"]:
    print(f"{raw!r:35} -> {normalize_name(raw)}")

# A tiny corpus: three filings by the same chemist in Leipzig, plus an
# unrelated namesake in Rostock with a different employer and field.
records = [
    PatentRecord("P1", Source.GDR, 1986, ("Jürgen Müller",), "C08F",
                 applicant="VEB Leuna", municipality="Leipzig"),
    PatentRecord("P2", Source.GDR, 1988, ("Dr. Jürgen Müller",), "C08F",
                 applicant="VEB Leuna", municipality="Leipzig"),
    PatentRecord("P3", Source.GDR, 1989, ("Jürgen Müller", "Anna Weber"), "C08L",
                 applicant="VEB Leuna", municipality="Leipzig"),
    PatentRecord("P4", Source.GDR, 1987, ("Jürgen Müller",), "H01L",
                 applicant="VEB Funkwerk", municipality="Rostock"),
    PatentRecord("P5", Source.GDR, 1989, ("Anna Weber",), "C08L",
                 applicant="VEB Leuna", municipality="Leipzig"),
]

careers = disambiguate(records, ScoringScheme.gdr_1989())

print("\nResolved careers:")
for career in careers:
    members = ", ".join(sorted(career.member_records))
    print(f"  {career.career_id}  {career.name:16} {career.first_year}-{career.last_year}"
          f"  records: {members}")

# The Leipzig filings merge (shared municipality + assignee clear the
# threshold on their own); the Rostock namesake stays separate because it
# shares nothing but the name.
