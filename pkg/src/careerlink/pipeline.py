"""Pipeline orchestration: ingest -> disambiguate -> link -> treatments ->
estimate -> sensitivity -> survival, with CSV/markdown report emission.

A single declarative JSON config names every input file; all randomness
flows from its root seed, and a manifest records the config hash so runs
are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import __version__
from .corpus import FrequencyTables, Source, dump_corpus, load_corpus
from .disambig import CareerCluster, ScoringScheme, disambiguate, write_careers_csv
from .econometrics import (
    EstimateReport,
    heckman_iv,
    iv_exact,
    kaplan_meier,
    ols,
    tsls,
)
from .instruments import (
    UnmappedIpc,
    community_treatments,
    deactivated_informant_instrument,
    knowledge_inflow,
    load_concordance,
    load_elections,
    load_flows,
    load_reception,
    load_sector_output,
    old_informant_instrument,
)
from .linkage import (
    build_outcomes,
    link_careers,
    load_flag_table,
    load_geo_table,
    write_links_csv,
    write_outcomes_csv,
)
from .sensitivity import analyze_reduced_form, write_sensitivity_csv


class ConfigError(ValueError):
    pass


REQUIRED_INPUTS = (
    "patents_gdr",
    "patents_dpma",
    "flows",
    "concordance",
    "elections",
    "reception",
    "geo",
    "sector_output",
    "applicants",
    "names",
)

CONTROL_LABELS = ["GDR Patents", "Academic", "Female", "Distance West", "Population Density"]


@dataclass
class PipelineConfig:
    inputs: dict[str, str]
    output_dir: str
    scheme_gdr: str = "gdr1989"
    scheme_dpma: str = "dpma_post90"
    threshold: int = 100
    bootstrap_reps: int = 300
    seed: int | None = None
    patent_stock_depreciation: float = 0.30
    deactivation_strict: bool = False
    censor_from: int = 1988

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**raw)
        config.validate()
        config._raw = raw
        return config

    def validate(self) -> None:
        missing = [k for k in REQUIRED_INPUTS if k not in self.inputs]
        if missing:
            raise ConfigError(f"missing input entries: {missing}")
        for key, path in self.inputs.items():
            if not os.path.exists(path):
                raise ConfigError(f"input {key!r}: file not found: {path}")
        if self.bootstrap_reps > 0 and self.seed is None:
            raise ConfigError("seed is mandatory when bootstrap is enabled")
        workers = os.environ.get("CAREERLINK_WORKERS", "1")
        try:
            if int(workers) < 1:
                raise ValueError
        except ValueError:
            raise ConfigError(f"CAREERLINK_WORKERS must be a positive integer, got {workers!r}") from None

    def config_hash(self) -> str:
        payload = json.dumps(getattr(self, "_raw", self.__dict__), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()

    def out(self, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class Pipeline:
    """Lazily computed stage graph; every property derives deterministically
    from the input files, so rerunning any stage reproduces its outputs."""

    config: PipelineConfig

    @cached_property
    def gdr_records(self):
        return load_corpus(self.config.inputs["patents_gdr"], Source.GDR)

    @cached_property
    def dpma_records(self):
        return load_corpus(self.config.inputs["patents_dpma"], Source.DPMA)

    @cached_property
    def gdr_freq(self) -> FrequencyTables:
        return FrequencyTables.from_records(self.gdr_records)

    @cached_property
    def dpma_freq(self) -> FrequencyTables:
        return FrequencyTables.from_records(self.dpma_records)

    @cached_property
    def gdr_careers(self) -> list[CareerCluster]:
        scheme = ScoringScheme.by_id(self.config.scheme_gdr)
        return disambiguate(self.gdr_records, scheme, self.gdr_freq, career_prefix="G")

    @cached_property
    def dpma_careers(self) -> list[CareerCluster]:
        scheme = ScoringScheme.by_id(self.config.scheme_dpma)
        return disambiguate(self.dpma_records, scheme, self.dpma_freq, career_prefix="W")

    @cached_property
    def links(self):
        return link_careers(
            self.gdr_careers, self.dpma_careers, self.gdr_freq, self.config.threshold
        )

    @cached_property
    def geo_table(self):
        return load_geo_table(self.config.inputs["geo"])

    @cached_property
    def outcomes(self):
        sector_table = load_flag_table(self.config.inputs["applicants"], "applicant", "academic")
        names_table = load_flag_table(self.config.inputs["names"], "first_name", "female")
        return build_outcomes(
            self.gdr_careers,
            self.links,
            self.geo_table,
            sector_table,
            dpma_careers=self.dpma_careers,
            names_table=names_table,
            stock_depreciation=self.config.patent_stock_depreciation,
        )

    @cached_property
    def treatments(self):
        """career_id -> dict of treatment/instrument values; inflow-type
        entries are None for careers whose primary IPC the concordance
        does not cover."""
        flows = load_flows(self.config.inputs["flows"])
        concordance = load_concordance(self.config.inputs["concordance"])
        output = load_sector_output(self.config.inputs["sector_output"])
        elections = load_elections(self.config.inputs["elections"])
        reception = load_reception(self.config.inputs["reception"])
        district_of = {m: g.district_id for m, g in self.geo_table.items()}
        by_ipc: dict[str, tuple] = {}
        rows = {}
        outcome_by_id = {o.career_id: o for o in self.outcomes}
        for career in self.gdr_careers:
            ipc = career.ipc_main_mode
            if ipc not in by_ipc:
                try:
                    by_ipc[ipc] = (
                        knowledge_inflow(flows, concordance, output, ipc),
                        old_informant_instrument(flows, concordance, output, ipc),
                        deactivated_informant_instrument(
                            flows, concordance, output, ipc,
                            strict=self.config.deactivation_strict,
                        ),
                    )
                except UnmappedIpc:
                    by_ipc[ipc] = (None, None, None)
            inflow, old_inf, deact = by_ipc[ipc]
            muni = outcome_by_id[career.career_id].municipality
            pds, no_rec, dresden = community_treatments(elections, reception, district_of, muni)
            rows[career.career_id] = {
                "knowledge_inflow": inflow,
                "old_informants": old_inf,
                "deactivated_informants": deact,
                "pds_share": pds,
                "no_reception": no_rec,
                "dresden": dresden,
            }
        return rows

    # --- stage emitters -----------------------------------------------------

    def stage_ingest(self) -> list[str]:
        dump_corpus(self.gdr_records, self.config.out("records_gdr.csv"), Source.GDR)
        dump_corpus(self.dpma_records, self.config.out("records_dpma.csv"), Source.DPMA)
        return ["records_gdr.csv", "records_dpma.csv"]

    def stage_disambig(self) -> list[str]:
        path = self.config.out("careers.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source", "career_id", "record_id"])
            for source, careers in (("GDR", self.gdr_careers), ("DPMA", self.dpma_careers)):
                for career in careers:
                    for rid in sorted(career.member_records):
                        writer.writerow([source, career.career_id, rid])
        return ["careers.csv"]

    def stage_link(self) -> list[str]:
        write_links_csv(self.links, self.config.out("links.csv"))
        write_outcomes_csv(self.outcomes, self.config.out("outcomes.csv"))
        return ["links.csv", "outcomes.csv"]

    def stage_treat(self) -> list[str]:
        path = self.config.out("treatments.csv")
        cols = [
            "knowledge_inflow",
            "pds_share",
            "old_informants",
            "deactivated_informants",
            "no_reception",
            "dresden",
        ]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["career_id"] + cols)
            for career_id in sorted(self.treatments):
                row = self.treatments[career_id]
                writer.writerow(
                    [career_id]
                    + ["" if row[c] is None else _fmt(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols]
                )
        return ["treatments.csv"]

    # --- estimation ---------------------------------------------------------

    def _frame(self, require_inflow: bool):
        """Aligned arrays for estimation; drops careers without mapped
        espionage variables when the specification needs them."""
        rows = []
        for outcome in self.outcomes:
            t = self.treatments[outcome.career_id]
            if require_inflow and t["knowledge_inflow"] is None:
                continue
            rows.append((outcome, t))
        continued = np.array([o.continued for o, _ in rows], dtype=float)
        controls = np.array(
            [
                [o.gdr_patents, o.academic, o.female, o.distance_west_km, o.population_density]
                for o, _ in rows
            ],
            dtype=float,
        )
        t_cols = {
            key: np.array([t[key] if t[key] is not None else np.nan for _, t in rows], dtype=float)
            for key in (
                "knowledge_inflow",
                "pds_share",
                "old_informants",
                "deactivated_informants",
                "no_reception",
                "dresden",
            )
        }
        west = np.array(
            [np.nan if o.continued_west is None else o.continued_west for o, _ in rows],
            dtype=float,
        )
        return continued, west, controls, t_cols

    def estimate_table2(self) -> list[tuple[str, EstimateReport]]:
        specs = [
            ("(1)", "knowledge_inflow", "old_informants", "Knowledge Inflow", True),
            ("(2)", "knowledge_inflow", "deactivated_informants", "Knowledge Inflow", True),
            ("(3)", "pds_share", "no_reception", "PDS Voting Share", False),
            ("(4)", "pds_share", "dresden", "PDS Voting Share", False),
        ]
        results = []
        for col, treat, instr, label, need_inflow in specs:
            y, _, X, t = self._frame(need_inflow)
            report = tsls(y, t[treat], t[instr], X, labels=CONTROL_LABELS, treatment_label=label)
            report.diagnostics["instrument"] = instr
            results.append((col, report))
        # Column 5: both treatments, one instrument each, exactly identified.
        y, _, X, t = self._frame(True)
        report = iv_exact(
            y,
            np.column_stack([t["knowledge_inflow"], t["pds_share"]]),
            np.column_stack([t["deactivated_informants"], t["no_reception"]]),
            X,
            labels=CONTROL_LABELS,
            treatment_labels=["Knowledge Inflow", "PDS Voting Share"],
        )
        report.diagnostics["instrument"] = "deactivated_informants,no_reception"
        results.append(("(5)", report))
        return results

    def estimate_first_stage(self):
        rows = []
        for treat, instr, need_inflow in [
            ("knowledge_inflow", "old_informants", True),
            ("knowledge_inflow", "deactivated_informants", True),
            ("pds_share", "no_reception", False),
            ("pds_share", "dresden", False),
        ]:
            _, _, X, t = self._frame(need_inflow)
            report = ols(t[treat], np.column_stack([t[instr], X]), add_intercept=True)
            from .econometrics import cragg_donald_f

            rows.append(
                {
                    "treatment": treat,
                    "instrument": instr,
                    "coef": report.coefficients["x0"],
                    "pvalue": report.pvalues["x0"],
                    "cragg_donald_F": cragg_donald_f(t[treat], t[instr], X),
                    "n": report.n_used,
                }
            )
        return rows

    def estimate_table3(self) -> EstimateReport:
        y, west, X, t = self._frame(True)
        s = (~np.isnan(west) & (y > 0.5)).astype(float)
        W_sel = np.column_stack([X, t["deactivated_informants"]])
        y_star = np.where(np.isnan(west), 0.0, west)
        return heckman_iv(
            s,
            W_sel,
            y_star,
            t["pds_share"],
            t["no_reception"],
            X,
            bootstrap_reps=self.config.bootstrap_reps,
            seed=self.config.seed or 0,
            labels=CONTROL_LABELS,
        )

    def stage_estimate(self) -> list[str]:
        table2 = self.estimate_table2()
        self._write_table2(table2)
        first = self.estimate_first_stage()
        with open(self.config.out("first_stage.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["treatment", "instrument", "coef", "pvalue", "cragg_donald_F", "n"])
            for row in first:
                writer.writerow(
                    [
                        row["treatment"],
                        row["instrument"],
                        _fmt(row["coef"]),
                        _fmt(row["pvalue"]),
                        "inf" if math.isinf(row["cragg_donald_F"]) else _fmt(row["cragg_donald_F"]),
                        str(row["n"]),
                    ]
                )
        table3 = self.estimate_table3()
        self._write_table3(table3)
        return ["table2.csv", "table2.md", "first_stage.csv", "table3.csv", "table3.md"]

    def _write_table2(self, table2) -> None:
        labels: list[str] = []
        for _, report in table2:
            for nm in report.coefficients:
                if nm not in labels and nm != "Intercept":
                    labels.append(nm)
        labels.append("Intercept")
        cols = [col for col, _ in table2]
        with open(self.config.out("table2.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["term"] + cols)
            for nm in labels:
                writer.writerow(
                    [nm]
                    + [
                        _fmt(r.coefficients[nm]) if nm in r.coefficients else ""
                        for _, r in table2
                    ]
                )
                writer.writerow(
                    [f"{nm} (p)"]
                    + [
                        _fmt(r.pvalues[nm]) if nm in r.pvalues else ""
                        for _, r in table2
                    ]
                )
            writer.writerow(["N"] + [str(r.n_used) for _, r in table2])
            writer.writerow(
                ["AR (p-val.)"]
                + [
                    _fmt(r.diagnostics["ar_pvalue"]) if "ar_pvalue" in r.diagnostics else ""
                    for _, r in table2
                ]
            )
            writer.writerow(["Instrument(s)"] + [r.diagnostics.get("instrument", "") for _, r in table2])
        with open(self.config.out("table2.md"), "w", encoding="utf-8") as fh:
            fh.write("| Term | " + " | ".join(cols) + " |\n")
            fh.write("|---" * (len(cols) + 1) + "|\n")
            for nm in labels:
                cells = []
                for _, r in table2:
                    if nm in r.coefficients:
                        cells.append(f"{r.coefficients[nm]:.4f} ({r.pvalues[nm]:.3f})")
                    else:
                        cells.append("")
                fh.write(f"| {nm} | " + " | ".join(cells) + " |\n")
            fh.write("| N | " + " | ".join(str(r.n_used) for _, r in table2) + " |\n")

    def _write_table3(self, report: EstimateReport) -> None:
        with open(self.config.out("table3.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["term", "beta", "ci_low", "ci_high"])
            for nm, coef in report.coefficients.items():
                lo, hi = report.conf_int.get(nm, (math.nan, math.nan))
                writer.writerow([nm, _fmt(coef), _fmt(lo), _fmt(hi)])
            writer.writerow(["N", str(report.n_used), "", ""])
            writer.writerow(["bootstrap_reps", str(self.config.bootstrap_reps), "", ""])
            writer.writerow(["seed", str(report.seed), "", ""])
        with open(self.config.out("table3.md"), "w", encoding="utf-8") as fh:
            fh.write("| Term | beta | 95% CI |\n|---|---|---|\n")
            for nm, coef in report.coefficients.items():
                lo, hi = report.conf_int.get(nm, (math.nan, math.nan))
                fh.write(f"| {nm} | {coef:.4f} | [{lo:.4f}; {hi:.4f}] |\n")
            fh.write(f"| N | {report.n_used} | |\n")

    def stage_sensitivity(self) -> list[str]:
        reports = []
        for treat, instr, need_inflow in [
            ("knowledge_inflow", "old_informants", True),
            ("knowledge_inflow", "deactivated_informants", True),
            ("pds_share", "no_reception", False),
            ("pds_share", "dresden", False),
        ]:
            y, _, X, t = self._frame(need_inflow)
            reports.append(
                analyze_reduced_form(
                    y, t[instr], X, instr, benchmark_columns={"Female": 2, "Academic": 1}
                )
            )
        write_sensitivity_csv(reports, self.config.out("sensitivity.csv"))
        return ["sensitivity.csv"]

    def gap_observations(self) -> list[tuple[int, bool]]:
        """One duration per career: years of patenting activity
        (last - first + 1). A career still filing in censor_from or later
        may have continued past the observation window, so it is censored;
        an earlier last filing is an observed exit."""
        censor_from = self.config.censor_from
        obs = []
        for career in self.gdr_careers:
            duration = career.last_year - career.first_year + 1
            censored = career.last_year >= censor_from
            obs.append((duration, censored))
        return obs

    def stage_survival(self) -> list[str]:
        curve = kaplan_meier(self.gap_observations())
        with open(self.config.out("survival.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "survival", "at_risk", "events"])
            for t, s, r, d in zip(curve.times, curve.survival, curve.at_risk, curve.events):
                writer.writerow([_fmt(t), _fmt(s), str(int(r)), str(int(d))])
        return ["survival.csv"]

    def stage_summary(self) -> list[str]:
        y, west, X, t = self._frame(False)
        columns = {
            "Continued Inventing": y,
            "Continued in West Germany": west[~np.isnan(west)],
            "GDR Patents": X[:, 0],
            "Academic": X[:, 1],
            "Female": X[:, 2],
            "Distance West": X[:, 3],
            "Population Density": X[:, 4],
            "Knowledge Inflow": t["knowledge_inflow"][~np.isnan(t["knowledge_inflow"])],
            "PDS Voting Share": t["pds_share"],
            "Old Informants": t["old_informants"][~np.isnan(t["old_informants"])],
            "Deactivated Informants": t["deactivated_informants"][~np.isnan(t["deactivated_informants"])],
            "No Reception": t["no_reception"],
            "Dresden": t["dresden"],
        }
        with open(self.config.out("summary_stats.csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", "mean", "sd", "min", "max", "n"])
            for name, values in columns.items():
                if len(values) == 0:
                    writer.writerow([name, "", "", "", "", "0"])
                    continue
                writer.writerow(
                    [
                        name,
                        _fmt(np.mean(values)),
                        _fmt(np.std(values, ddof=1)) if len(values) > 1 else "",
                        _fmt(np.min(values)),
                        _fmt(np.max(values)),
                        str(len(values)),
                    ]
                )
        return ["summary_stats.csv"]

    def run(self) -> list[str]:
        outputs: list[str] = []
        for stage in (
            self.stage_ingest,
            self.stage_disambig,
            self.stage_link,
            self.stage_treat,
            self.stage_estimate,
            self.stage_sensitivity,
            self.stage_survival,
            self.stage_summary,
        ):
            outputs.extend(stage())
        manifest = {
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "outputs": sorted(outputs),
            "versions": {"careerlink": __version__, "numpy": np.__version__},
        }
        with open(self.config.out("run_manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append("run_manifest.json")
        return outputs
