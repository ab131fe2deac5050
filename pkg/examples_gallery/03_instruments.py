"""Building treatment variables and instruments from informant flows.

Sector-level information inflows are mapped into patent classes through a
fixed concordance; two instruments isolate supply-driven variation: a
shift-share design using 1970 shares, and the hypothetical inflow of
productive informants who exited in 1984-86.
"""

from careerlink.instruments import (
    ConcordanceEntry,
    InformantFlow,
    community_treatments,
    deactivated_informant_instrument,
    knowledge_inflow,
    old_informant_instrument,
)

concordance = [
    ConcordanceEntry("machinery", "F16H", 0.7),
    ConcordanceEntry("machinery", "B23Q", 0.3),
    ConcordanceEntry("chemicals", "C08F", 1.0),
]
sector_output = {"machinery": 240.0, "chemicals": 120.0}

flows = [
    # A long-lived informant in machinery, active since 1970.
    *[InformantFlow("I-001", year, "machinery", 30) for year in range(1970, 1990)],
    # A productive chemicals source that went silent in 1985.
    *[InformantFlow("I-002", year, "chemicals", 45) for year in range(1978, 1986)],
    # A late recruit; never in the 1970 base period.
    *[InformantFlow("I-003", year, "machinery", 20) for year in range(1987, 1990)],
]

for ipc in ("F16H", "C08F"):
    inflow = knowledge_inflow(flows, concordance, sector_output, ipc)
    shift_share = old_informant_instrument(flows, concordance, sector_output, ipc)
    deactivated = deactivated_informant_instrument(flows, concordance, sector_output, ipc)
    print(f"{ipc}: inflow={inflow:.4f}  shift-share={shift_share:.4f}"
          f"  deactivated={deactivated:.4f}")

# Community-level treatments: district PDS vote share plus the two
# television-reception dummies (the no-reception area includes Dresden).
elections = {"KRS-07": 24.3, "KRS-11": 14.9}
reception = {"Dresden": (1, 1), "Zinnwald": (1, 0)}
district_of = {"Dresden": "KRS-07", "Zinnwald": "KRS-07", "Jena": "KRS-11"}

for town in ("Dresden", "Zinnwald", "Jena"):
    pds, no_reception, dresden = community_treatments(elections, reception, district_of, town)
    print(f"{town:10} pds={pds:5.1f}  no_reception={no_reception}  dresden={dresden}")
