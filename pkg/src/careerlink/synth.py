"""Synthetic fixtures with known ground truth.

The real patent, espionage, and election microdata are not
redistributable, so estimator and linkage code is validated against
generated corpora instead: a linkage corpus with a known career
partition (including planted same-name collisions), and parameterized
data-generating processes for the IV, selection, and count estimators.
All generators are deterministic functions of their seed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .corpus import PatentRecord, Source


class InvalidSpec(ValueError):
    pass


def _letters(idx: int, width: int = 4) -> str:
    """Deterministic letter-only code so generated names satisfy the
    normalized-name alphabet."""
    chars = []
    for _ in range(width):
        chars.append(chr(ord("A") + idx % 26))
        idx //= 26
    return "".join(reversed(chars))


# Small first-name pool; the second half is flagged female in names.csv.
FIRST_NAMES = [f"VORN{_letters(i, 2)}" for i in range(20)]
FEMALE_FIRST_NAMES = frozenset(FIRST_NAMES[10:])


@dataclass
class LinkageCorpusSpec:
    n_inventors: int = 100
    patents_mean: float = 1.886  # zero-truncated geometric mean
    name_collision_rate: float = 0.0
    move_rate: float = 0.3
    continue_rate: float = 0.3
    abstract_vocab_size: int = 200
    seed: int = 0

    def validate(self) -> None:
        for rate in (self.name_collision_rate, self.move_rate, self.continue_rate):
            if not (0.0 <= rate <= 1.0):
                raise InvalidSpec(f"rate {rate} outside [0, 1]")
        if self.n_inventors < 1:
            raise InvalidSpec("n_inventors must be positive")
        if self.patents_mean < 1.0:
            raise InvalidSpec("patents_mean below the zero-truncation floor")


@dataclass
class DgpSpec:
    n: int = 1000
    beta_treatment: float = 0.5
    instrument_strength: float = 1.0
    endogeneity_rho: float = 0.5
    selection_rho: float = 0.5
    count_link: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.n < 100:
            raise InvalidSpec("n must be >= 100")
        if abs(self.endogeneity_rho) >= 1 or abs(self.selection_rho) >= 1:
            raise InvalidSpec("|rho| must be < 1")


EAST_MUNICIPALITIES = [f"E{_letters(i, 2)}" for i in range(12)]
WEST_MUNICIPALITIES = [f"W{_letters(i, 2)}" for i in range(6)]
DISTRICTS = ["D0", "D1", "D2", "D3"]
SECTORS = ["SEC0", "SEC1", "SEC2", "SEC3"]
# Last entry deliberately outside the concordance image to exercise the
# unmapped-IPC path.
IPC_POOL = ["C08F", "G01N", "H01L", "B23K", "C07D", "A61K", "F16H", "X99Z"]
MAPPED_IPC = IPC_POOL[:-1]


@dataclass
class LinkageCorpus:
    gdr_records: list[PatentRecord]
    dpma_records: list[PatentRecord]
    truth_gdr: list[frozenset[str]]
    truth_dpma: list[frozenset[str]]
    continued: dict[str, bool]
    moved_west: dict[str, bool]
    inventor_names: dict[str, str]


def _zero_truncated_geometric(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    p = 1.0 / mean
    return rng.geometric(p, size=size)


def gen_linkage_corpus(spec: LinkageCorpusSpec) -> LinkageCorpus:
    """GDR- and DPMA-style record tables with a known career partition.

    Records of one inventor share municipality, assignee, and main IPC, so
    within-career pairs always clear the match threshold.  Collisions
    plant a second inventor under the same name whose attributes are
    forced to differ, creating same-name different-person traps.
    Continuing inventors receive DPMA records (chained by citations);
    movers change municipality to a West German one after 1990.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_inventors

    surnames = [f"NACH{_letters(i)}" for i in range(n)]
    n_coll = int(round(spec.name_collision_rate * n / 2.0)) * 2
    # Collision pairs share the full name; everyone else is unique.
    names = []
    for i in range(n):
        first = FIRST_NAMES[int(rng.integers(0, len(FIRST_NAMES)))]
        names.append(f"{first} {surnames[i]}")
    for pair in range(n_coll // 2):
        a, b = 2 * pair, 2 * pair + 1
        names[b] = names[a]

    assignees = [f"FIRMA {_letters(i, 2)}" for i in range(8)] + ["UNI JENA", "UNI ROSTOCK"]
    vocab = [f"wort{_letters(i, 3).lower()}" for i in range(spec.abstract_vocab_size)]

    counts = _zero_truncated_geometric(rng, spec.patents_mean, n)
    gdr_records: list[PatentRecord] = []
    dpma_records: list[PatentRecord] = []
    truth_gdr: list[frozenset[str]] = []
    truth_dpma: list[frozenset[str]] = []
    continued: dict[str, bool] = {}
    moved: dict[str, bool] = {}
    inventor_names: dict[str, str] = {}

    for i in range(n):
        inventor = f"INV{i:05d}"
        inventor_names[inventor] = names[i]
        # Force collision partners onto disjoint attributes so their
        # cross-pair score is exactly zero.
        if i % 2 == 1 and i < n_coll and names[i] == names[i - 1]:
            muni = EAST_MUNICIPALITIES[(i - 1 + 1) % len(EAST_MUNICIPALITIES)]
            assignee = assignees[(i - 1 + 1) % len(assignees)]
            ipc = IPC_POOL[(IPC_POOL.index(prev_ipc) + 1) % len(IPC_POOL)]
        else:
            muni = EAST_MUNICIPALITIES[int(rng.integers(0, len(EAST_MUNICIPALITIES)))]
            assignee = assignees[int(rng.integers(0, len(assignees)))]
            ipc = IPC_POOL[int(rng.integers(0, len(IPC_POOL)))]
        prev_ipc = ipc
        secondary = IPC_POOL[int(rng.integers(0, len(MAPPED_IPC)))]
        topic = [vocab[int(t)] for t in rng.integers(0, len(vocab), size=6)]

        gdr_ids = []
        # Careers start anywhere in the 1980s so last filing years spread
        # across both sides of the survival censoring cutoff.
        start_year = 1980 + int(rng.integers(0, 9))
        for p in range(int(counts[i])):
            rid = f"GDR{i:05d}P{p}"
            gdr_ids.append(rid)
            year = min(start_year + p + int(rng.integers(0, 2)), 1990)
            abstract = " ".join(
                topic + [vocab[int(t)] for t in rng.integers(0, len(vocab), size=4)]
            )
            gdr_records.append(
                PatentRecord(
                    record_id=rid,
                    source=Source.GDR,
                    filing_year=year,
                    inventors=(names[i],),
                    applicant=assignee,
                    ipc_main=ipc,
                    ipc_secondary=(secondary,) if secondary != ipc else (),
                    municipality=muni,
                    abstract=abstract,
                )
            )
        truth_gdr.append(frozenset(gdr_ids))

        cont = bool(rng.random() < spec.continue_rate)
        continued[inventor] = cont
        moved[inventor] = False
        if cont:
            mover = bool(rng.random() < spec.move_rate)
            moved[inventor] = mover
            post_muni = (
                WEST_MUNICIPALITIES[int(rng.integers(0, len(WEST_MUNICIPALITIES)))]
                if mover
                else muni
            )
            entry = 1990 + int(rng.integers(0, 9))
            n_post = 1 + int(rng.integers(0, 3))
            dpma_ids = []
            for p in range(n_post):
                rid = f"DPMA{i:05d}P{p}"
                year = min(entry + p, 1999)
                dpma_records.append(
                    PatentRecord(
                        record_id=rid,
                        source=Source.DPMA,
                        filing_year=year,
                        inventors=(names[i],),
                        applicant=assignee,
                        ipc_main=ipc,
                        ipc_secondary=(secondary,) if secondary != ipc else (),
                        municipality=post_muni,
                        # Citation chain guarantees within-career merging.
                        cited_record_ids=(dpma_ids[-1],) if dpma_ids else (),
                    )
                )
                dpma_ids.append(rid)
            truth_dpma.append(frozenset(dpma_ids))

    return LinkageCorpus(
        gdr_records, dpma_records, truth_gdr, truth_dpma, continued, moved, inventor_names
    )


@dataclass
class IvData:
    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    X: np.ndarray
    labels: list[str]
    spec: DgpSpec


def gen_iv_dgp(spec: DgpSpec) -> IvData:
    """Linear IV design: exogenous z, endogenous d with error correlation
    endogeneity_rho, outcome slope beta_treatment."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    z = rng.standard_normal(n)
    X = rng.standard_normal((n, 2))
    v = rng.standard_normal(n)
    u = spec.endogeneity_rho * v + math.sqrt(1 - spec.endogeneity_rho**2) * rng.standard_normal(n)
    d = spec.instrument_strength * z + 0.5 * X[:, 0] - 0.3 * X[:, 1] + v
    y = spec.beta_treatment * d + 0.8 * X[:, 0] + 0.4 * X[:, 1] + u
    return IvData(y, d, z, X, ["ctrl_a", "ctrl_b"], spec)


@dataclass
class SelectionData:
    s: np.ndarray
    W_sel: np.ndarray  # selection regressors incl. the exclusion variable
    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    X: np.ndarray
    sel_labels: list[str]
    out_labels: list[str]
    spec: DgpSpec


def gen_selection_dgp(spec: DgpSpec) -> SelectionData:
    """Selection DGP: the exclusion variable enters only the selection
    equation; the outcome error loads on the selection error with weight
    selection_rho, so the true inverse-Mills coefficient is selection_rho."""
    spec.validate()
    if spec.selection_rho**2 + spec.endogeneity_rho**2 >= 1.0:
        raise InvalidSpec("selection_rho^2 + endogeneity_rho^2 must be < 1")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    X = rng.standard_normal((n, 2))
    excl = rng.standard_normal(n)
    z = rng.standard_normal(n)
    e_sel = rng.standard_normal(n)
    v = rng.standard_normal(n)
    resid_sd = math.sqrt(1 - spec.selection_rho**2 - spec.endogeneity_rho**2)
    u = (
        spec.selection_rho * e_sel
        + spec.endogeneity_rho * v
        + resid_sd * rng.standard_normal(n)
    )
    sel_index = 0.2 + 0.5 * X[:, 0] - 0.4 * X[:, 1] + 0.8 * excl + e_sel
    s = (sel_index > 0).astype(float)
    d = spec.instrument_strength * z + 0.3 * X[:, 0] + v
    y = spec.beta_treatment * d + 0.5 * X[:, 0] - 0.2 * X[:, 1] + u
    W_sel = np.column_stack([X, excl])
    return SelectionData(
        s, W_sel, y, d, z, X,
        ["ctrl_a", "ctrl_b", "exclusion"], ["ctrl_a", "ctrl_b"], spec,
    )


@dataclass
class CountData:
    y: np.ndarray
    d: np.ndarray
    z: np.ndarray
    X: np.ndarray
    labels: list[str]
    spec: DgpSpec


def gen_count_dgp(spec: DgpSpec) -> CountData:
    """Count outcome with a multiplicative error correlated with the
    endogenous regressor; the error is mean-one and independent of the
    instrument, satisfying the GMM moment condition."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    z = rng.standard_normal(n)
    X = rng.standard_normal((n, 1))
    v = rng.standard_normal(n)
    d = spec.instrument_strength * z + v
    sigma = 0.5
    eps = spec.endogeneity_rho * v + math.sqrt(1 - spec.endogeneity_rho**2) * rng.standard_normal(n)
    eta = np.exp(sigma * eps - 0.5 * sigma**2)
    mu = np.exp(0.1 + spec.beta_treatment * d + 0.2 * X[:, 0])
    y = rng.poisson(mu * eta).astype(float)
    return CountData(y, d, z, X, ["ctrl_a"], spec)


# --- full pipeline fixture ---------------------------------------------------


def gen_pipeline_fixture(outdir, spec: LinkageCorpusSpec | None = None) -> dict:
    """Write the complete CSV input bundle consumed by the pipeline and a
    ready-to-run config; returns the config dict."""
    from .corpus import dump_corpus

    spec = spec or LinkageCorpusSpec(n_inventors=300, name_collision_rate=0.05, seed=7)
    corpus = gen_linkage_corpus(spec)
    rng = np.random.default_rng(spec.seed + 1)
    os.makedirs(outdir, exist_ok=True)

    def path(name):
        return os.path.join(outdir, name)

    dump_corpus(corpus.gdr_records, path("patents_gdr.csv"), Source.GDR)
    dump_corpus(corpus.dpma_records, path("patents_dpma.csv"), Source.DPMA)

    with open(path("truth.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mention_id", "career_id"])
        for idx, group in enumerate(corpus.truth_gdr):
            for rid in sorted(group):
                writer.writerow([rid, f"T{idx:05d}"])

    # Geography: East municipalities spread over four districts, the last
    # district playing the Dresden role (dresden => no_reception).
    with open(path("geo.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["municipality", "distance_west_km", "population_density", "district_id", "state"])
        for i, muni in enumerate(EAST_MUNICIPALITIES):
            district = DISTRICTS[i % len(DISTRICTS)]
            dist = round(20.0 + 18.5 * i, 1)
            # Shuffled index keeps density linearly independent of distance.
            dens = round(100.0 + 290.0 * ((5 * i + 3) % 12), 1)
            writer.writerow([muni, str(dist), str(dens), district, "Sachsen"])
        for i, muni in enumerate(WEST_MUNICIPALITIES):
            writer.writerow([muni, str(350.0 + 10 * i), str(1200.0 + 50 * i), "DW", "Bayern"])

    with open(path("reception.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["municipality", "no_reception", "dresden"])
        for i, muni in enumerate(EAST_MUNICIPALITIES):
            district = DISTRICTS[i % len(DISTRICTS)]
            dresden = int(district == "D3")
            no_reception = int(district in ("D2", "D3"))
            writer.writerow([muni, str(no_reception), str(dresden)])

    with open(path("elections.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["district_id", "pds_share"])
        for i, district in enumerate(DISTRICTS):
            writer.writerow([district, str(round(8.0 + 8.5 * i, 1))])
        writer.writerow(["DW", "0.0"])

    with open(path("sector_output.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sector_id", "output"])
        for i, sector in enumerate(SECTORS):
            writer.writerow([sector, str(200.0 + 120.0 * i)])

    # Each sector spreads its weight over two IPC subclasses; weights per
    # sector sum to one.  The last pool entry stays unmapped on purpose.
    with open(path("concordance.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sector_id", "ipc_subclass", "weight"])
        for i, sector in enumerate(SECTORS):
            a = MAPPED_IPC[(2 * i) % len(MAPPED_IPC)]
            b = MAPPED_IPC[(2 * i + 1) % len(MAPPED_IPC)]
            writer.writerow([sector, a, "0.6"])
            writer.writerow([sector, b, "0.4"])

    # Informant flows 1968-89: a 1970-active base cohort, later joiners,
    # and productive informants exiting during 1984-86.
    with open(path("flows.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["informant_id", "year", "sector_id", "pieces"])
        for i in range(24):
            informant = f"I{i:03d}"
            start = 1968 if i < 10 else 1972 + (i % 8)
            if 6 <= i < 10:
                end = 1984 + (i % 3)  # productive early exits
                base = 25 + 3 * i
            else:
                end = 1989
                base = 4 + 2 * (i % 7)
            home = SECTORS[i % len(SECTORS)]
            other = SECTORS[(i + 1) % len(SECTORS)]
            for year in range(start, end + 1):
                pieces = int(base + rng.integers(0, 5))
                writer.writerow([informant, str(year), home, str(pieces)])
                if i % 3 == 0:
                    writer.writerow([informant, str(year), other, str(max(1, pieces // 3))])

    with open(path("applicants.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["applicant", "academic"])
        seen = sorted(
            {r.applicant for r in corpus.gdr_records + corpus.dpma_records if r.applicant}
        )
        for applicant in seen:
            writer.writerow([applicant, str(int(applicant.startswith("UNI")))])

    with open(path("names.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["first_name", "female"])
        for name in FIRST_NAMES:
            writer.writerow([name, str(int(name in FEMALE_FIRST_NAMES))])

    config = {
        "inputs": {
            "patents_gdr": path("patents_gdr.csv"),
            "patents_dpma": path("patents_dpma.csv"),
            "flows": path("flows.csv"),
            "concordance": path("concordance.csv"),
            "elections": path("elections.csv"),
            "reception": path("reception.csv"),
            "geo": path("geo.csv"),
            "sector_output": path("sector_output.csv"),
            "applicants": path("applicants.csv"),
            "names": path("names.csv"),
        },
        "scheme_gdr": "gdr1989",
        "scheme_dpma": "dpma_post90",
        "threshold": 100,
        "bootstrap_reps": 300,
        "seed": spec.seed,
        "output_dir": path("out"),
        "patent_stock_depreciation": 0.30,
        "deactivation_strict": False,
        "censor_from": 1988,
    }
    with open(path("config.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config
