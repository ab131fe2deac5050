"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

from .corpus import (
    EmptyAttributeColumn,
    MalformedRow,
    SchemaMismatch,
    UnknownAttribute,
)
from .disambig import (
    MissingAbstract,
    ScoringScheme,
    UniverseMismatch,
    score_pair,
)
from .econometrics import (
    EmptyInput,
    NegativeCounts,
    NoConvergence,
    PerfectSeparation,
    RankDeficient,
    TooFewSelected,
    WeakOrZeroFirstStage,
)
from .instruments import MissingDistrict, NoBasePeriodData, UnmappedIpc
from .linkage import MissingGeoEntry, OutOfRange
from .pipeline import ConfigError, Pipeline, PipelineConfig

DATA_ERRORS = (
    MalformedRow,
    SchemaMismatch,
    UnknownAttribute,
    EmptyAttributeColumn,
    MissingAbstract,
    UniverseMismatch,
    UnmappedIpc,
    NoBasePeriodData,
    MissingDistrict,
    MissingGeoEntry,
    OutOfRange,
    EmptyInput,
    NegativeCounts,
    FileNotFoundError,
)
NUMERICAL_ERRORS = (
    RankDeficient,
    WeakOrZeroFirstStage,
    PerfectSeparation,
    NoConvergence,
    TooFewSelected,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="careerlink",
        description="Inventor career disambiguation, linkage, and estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        return p

    with_config(sub.add_parser("ingest", help="validate and re-emit the patent corpora"))
    p = with_config(sub.add_parser("disambig", help="cluster records into careers"))
    p.add_argument(
        "--explain",
        nargs=2,
        metavar=("RECORD_A", "RECORD_B"),
        help="print the pairwise score breakdown for two GDR record ids",
    )
    p.add_argument(
        "--scheme",
        choices=["gdr1989", "dpma_post90", "gdr1980_abstract"],
        default=None,
        help="override the configured GDR scoring scheme",
    )
    with_config(sub.add_parser("link", help="match East careers to West careers"))
    with_config(sub.add_parser("treat", help="compute treatments and instruments"))
    p = with_config(sub.add_parser("estimate", help="run an estimation specification"))
    p.add_argument("--spec", choices=["table2", "table3", "first_stage"], default="table2")
    with_config(sub.add_parser("sensitivity", help="omitted-variable robustness values"))
    p = with_config(sub.add_parser("survival", help="Kaplan-Meier inter-patent spells"))
    p.add_argument("--censor-from", type=int, default=None, help="override censoring start year")
    p = sub.add_parser("synth", help="generate a synthetic validation fixture")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=300, help="number of inventors")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--collision-rate", type=float, default=0.05)
    with_config(sub.add_parser("run", help="execute every stage and write the manifest"))
    return parser


def _explain(pipe: Pipeline, rid_a: str, rid_b: str) -> None:
    by_id = {r.record_id: r for r in pipe.gdr_records}
    for rid in (rid_a, rid_b):
        if rid not in by_id:
            raise MalformedRow(0, f"unknown GDR record id {rid!r}")
    a, b = by_id[rid_a], by_id[rid_b]
    shared = set(a.normalized_inventors()) & set(b.normalized_inventors())
    if not shared:
        print(f"{rid_a} and {rid_b} share no inventor name; score 0")
        return
    scheme = ScoringScheme.by_id(pipe.config.scheme_gdr)
    for name in sorted(shared):
        result = score_pair(a, b, name, scheme, pipe.gdr_freq)
        print(f"name={name!r} total={result.total} match={result.total >= scheme.threshold}")
        for criterion, points in result.breakdown:
            print(f"  {criterion.value}: {points}")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            from .synth import LinkageCorpusSpec, gen_pipeline_fixture

            spec = LinkageCorpusSpec(
                n_inventors=args.n,
                name_collision_rate=args.collision_rate,
                seed=args.seed,
            )
            gen_pipeline_fixture(args.out, spec)
            print(f"{args.out}/config.json")
            return 0

        config = PipelineConfig.from_file(args.config)
        if args.command == "survival" and args.censor_from is not None:
            config.censor_from = args.censor_from
        if args.command == "disambig" and args.scheme is not None:
            config.scheme_gdr = args.scheme
        pipe = Pipeline(config)

        if args.command == "ingest":
            outputs = pipe.stage_ingest()
        elif args.command == "disambig":
            if args.explain:
                _explain(pipe, *args.explain)
                return 0
            outputs = pipe.stage_disambig()
        elif args.command == "link":
            outputs = pipe.stage_link()
        elif args.command == "treat":
            outputs = pipe.stage_treat()
        elif args.command == "estimate":
            if args.spec == "table2":
                pipe._write_table2(pipe.estimate_table2())
                outputs = ["table2.csv", "table2.md"]
            elif args.spec == "table3":
                pipe._write_table3(pipe.estimate_table3())
                outputs = ["table3.csv", "table3.md"]
            else:
                pipe.stage_estimate()
                outputs = ["first_stage.csv"]
        elif args.command == "sensitivity":
            outputs = pipe.stage_sensitivity()
        elif args.command == "survival":
            outputs = pipe.stage_survival()
        elif args.command == "run":
            outputs = pipe.run()
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command}")
        for name in outputs:
            print(config.out(name))
        return 0
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
