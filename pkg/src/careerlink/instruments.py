"""Treatment and instrument construction from informant flow tables.

Knowledge inflow aggregates 1987-89 information pieces per sector, maps
them to IPC subclasses through a concordance, and scales by sector output
mapped the same way.  The two instruments reuse that mapping: one holds
1970 informant/sector shares fixed (shift-share), the other sums the
hypothetical inflow of productive informants who exited during 1984-86.
Community-level variables (PDS voting share, reception dummies) are plain
table lookups.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

TREATMENT_YEARS = (1987, 1988, 1989)
BASE_YEAR = 1970
EXIT_YEARS = (1984, 1985, 1986)
EXIT_PIECES_FILTER = 20.0


class UnmappedIpc(KeyError):
    pass


class NoBasePeriodData(ValueError):
    pass


class MissingDistrict(KeyError):
    pass


@dataclass(frozen=True)
class InformantFlow:
    informant_id: str
    year: int
    sector_id: str
    pieces: int

    def __post_init__(self):
        if self.pieces < 0:
            raise ValueError("pieces must be nonnegative")
        if not (1968 <= self.year <= 1990):
            raise ValueError(f"year {self.year} outside [1968, 1990]")


@dataclass(frozen=True)
class ConcordanceEntry:
    sector_id: str
    ipc_subclass: str
    weight: float


def check_concordance(entries: Sequence[ConcordanceEntry], tol: float = 1e-9) -> None:
    """Per-sector weights over IPC subclasses must sum to one."""
    sums: dict[str, float] = {}
    for e in entries:
        sums[e.sector_id] = sums.get(e.sector_id, 0.0) + e.weight
    for sector, total in sums.items():
        if abs(total - 1.0) > tol:
            raise ValueError(f"concordance weights for sector {sector!r} sum to {total}")


def _map_to_ipc(
    sector_values: Mapping[str, float],
    concordance: Sequence[ConcordanceEntry],
    sector_output: Mapping[str, float],
    ipc: str,
    scale: bool,
) -> float:
    numer = 0.0
    denom = 0.0
    mapped = False
    for e in concordance:
        if e.ipc_subclass != ipc:
            continue
        mapped = True
        numer += e.weight * sector_values.get(e.sector_id, 0.0)
        denom += e.weight * sector_output.get(e.sector_id, 0.0)
    if not mapped:
        raise UnmappedIpc(ipc)
    if not scale:
        return numer
    if denom == 0.0:
        raise ValueError(f"zero mapped sector output for IPC {ipc!r}")
    return numer / denom


def knowledge_inflow(
    flows: Sequence[InformantFlow],
    concordance: Sequence[ConcordanceEntry],
    sector_output: Mapping[str, float],
    ipc: str,
) -> float:
    """1987-89 information inflow per unit of sector output, mapped to one
    IPC subclass.  Raises UnmappedIpc for subclasses outside the
    concordance image (the caller drops those careers)."""
    inflow: dict[str, float] = {}
    for f in flows:
        if f.year in TREATMENT_YEARS:
            inflow[f.sector_id] = inflow.get(f.sector_id, 0.0) + f.pieces
    return _map_to_ipc(inflow, concordance, sector_output, ipc, scale=True)


def old_informant_instrument(
    flows: Sequence[InformantFlow],
    concordance: Sequence[ConcordanceEntry],
    sector_output: Mapping[str, float],
    ipc: str,
    scale: bool = True,
) -> float:
    """Shift-share instrument: 1970 informant and sector shares applied to
    the aggregate 1987-89 inflow from informants already active in 1970."""
    base_total = 0.0
    base_by_informant: dict[str, float] = {}
    base_by_cell: dict[tuple[str, str], float] = {}
    for f in flows:
        if f.year == BASE_YEAR and f.pieces > 0:
            base_total += f.pieces
            base_by_informant[f.informant_id] = base_by_informant.get(f.informant_id, 0.0) + f.pieces
            key = (f.informant_id, f.sector_id)
            base_by_cell[key] = base_by_cell.get(key, 0.0) + f.pieces
    if base_total == 0.0:
        raise NoBasePeriodData("no informant flows observed in 1970")
    shift = sum(
        f.pieces
        for f in flows
        if f.year in TREATMENT_YEARS and f.informant_id in base_by_informant
    )
    numer: dict[str, float] = {}
    for (informant, sector), pieces in base_by_cell.items():
        theta = base_by_informant[informant] / base_total
        lam = pieces / base_by_informant[informant]
        numer[sector] = numer.get(sector, 0.0) + theta * lam * shift
    return _map_to_ipc(numer, concordance, sector_output, ipc, scale=scale)


def deactivated_informant_instrument(
    flows: Sequence[InformantFlow],
    concordance: Sequence[ConcordanceEntry],
    sector_output: Mapping[str, float],
    ipc: str,
    pieces_filter: float = EXIT_PIECES_FILTER,
    strict: bool = False,
    scale: bool = True,
) -> float:
    """Hypothetical inflow from productive informants exiting 1984-86.

    An informant's exit year is their last observed flow year; mean annual
    pieces are averaged over their active years.  The productivity filter
    is >= pieces_filter, or strictly > with strict=True.
    """
    years: dict[str, set[int]] = {}
    totals: dict[str, float] = {}
    by_sector: dict[str, dict[str, float]] = {}
    for f in flows:
        years.setdefault(f.informant_id, set()).add(f.year)
        totals[f.informant_id] = totals.get(f.informant_id, 0.0) + f.pieces
        sect = by_sector.setdefault(f.informant_id, {})
        sect[f.sector_id] = sect.get(f.sector_id, 0.0) + f.pieces
    numer: dict[str, float] = {}
    for informant, active in years.items():
        if max(active) not in EXIT_YEARS:
            continue
        mean_annual = totals[informant] / len(active)
        keep = mean_annual > pieces_filter if strict else mean_annual >= pieces_filter
        if not keep:
            continue
        for sector, pieces in by_sector[informant].items():
            numer[sector] = numer.get(sector, 0.0) + pieces / len(active)
    return _map_to_ipc(numer, concordance, sector_output, ipc, scale=scale)


def community_treatments(
    elections: Mapping[str, float],
    reception: Mapping[str, tuple[int, int]],
    district_of: Mapping[str, str],
    municipality: str,
) -> tuple[float, int, int]:
    """(PDS vote percent, no-reception dummy, Dresden dummy) for one
    municipality."""
    district = district_of.get(municipality)
    if district is None or district not in elections:
        raise MissingDistrict(municipality)
    pds = elections[district]
    no_reception, dresden = reception.get(municipality, (0, 0))
    if dresden and not no_reception:
        raise ValueError(f"{municipality}: dresden=1 requires no_reception=1")
    return pds, no_reception, dresden


# --- CSV interfaces ---------------------------------------------------------


def load_flows(path) -> list[InformantFlow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            InformantFlow(row["informant_id"], int(row["year"]), row["sector_id"], int(row["pieces"]))
            for row in csv.DictReader(fh)
        ]


def load_concordance(path) -> list[ConcordanceEntry]:
    with open(path, newline="", encoding="utf-8") as fh:
        entries = [
            ConcordanceEntry(row["sector_id"], row["ipc_subclass"], float(row["weight"]))
            for row in csv.DictReader(fh)
        ]
    check_concordance(entries)
    return entries


def load_sector_output(path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["sector_id"]: float(row["output"]) for row in csv.DictReader(fh)}


def load_elections(path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["district_id"]: float(row["pds_share"]) for row in csv.DictReader(fh)}


def load_reception(path) -> dict[str, tuple[int, int]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {
            row["municipality"]: (int(row["no_reception"]), int(row["dresden"]))
            for row in csv.DictReader(fh)
        }
