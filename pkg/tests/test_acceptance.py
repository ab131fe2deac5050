"""Acceptance gate: one test per contract criterion, each printing a
single PASS line.  Every criterion checks the implementation against an
independent oracle computed inside the test (brute force, hand algebra,
or Monte Carlo), never against the implementation itself.
"""

import hashlib
import itertools
import math
import random
import subprocess
import sys

import numpy as np
import pytest
from scipy.stats import norm

from careerlink.corpus import Rarity, Source
from careerlink.disambig import (
    Criterion,
    PairScore,
    ScoringScheme,
    cluster,
    disambiguate,
    evaluate_clustering,
    score_pair,
)
from careerlink.econometrics import (
    anderson_rubin_test,
    cragg_donald_f,
    heckman_iv,
    iv_poisson_gmm,
    kaplan_meier,
    probit_loglik,
    probit_score,
    tsls,
)
from careerlink.linkage import match_careers
from careerlink.sensitivity import (
    adjusted_estimate,
    analyze_reduced_form,
    robustness_value,
)
from careerlink.synth import (
    DgpSpec,
    LinkageCorpusSpec,
    gen_count_dgp,
    gen_iv_dgp,
    gen_linkage_corpus,
    gen_selection_dgp,
)
from tests.conftest import make_record, rarity_tables
from tests.test_linkage import career as make_career

RARE = Rarity.RARE
COMMON = Rarity.COMMON


def ok(line):
    print(f"\nACCEPTANCE PASS - {line}")


def test_scoring_table_fidelity():
    """Every published scoring-table cell reproduced exactly."""
    cells_checked = 0

    def tables(name_r, attr_r):
        return rarity_tables(
            name={"ANNA WEBER": name_r},
            municipality={"Leipzig": attr_r},
            assignee={"VEB Chemie": attr_r},
            ipc={"C08F": attr_r, "A61K": attr_r},
        )

    scheme = ScoringScheme.gdr_1989()
    # Municipality and assignee: 80 everywhere except rare-name/rare-attr 100.
    grid = {(COMMON, COMMON): 80, (COMMON, RARE): 80, (RARE, COMMON): 80, (RARE, RARE): 100}
    for criterion, kwargs in [
        (Criterion.MUNICIPALITY, dict(municipality="Leipzig", applicant=None)),
        (Criterion.ASSIGNEE, dict(municipality=None, applicant="VEB Chemie")),
    ]:
        for (name_r, attr_r), expected in grid.items():
            a = make_record(record_id="A", ipc_main="C08F", **kwargs)
            b = make_record(record_id="B", ipc_main="H01L", **kwargs)
            got = score_pair(a, b, "ANNA WEBER", scheme, tables(name_r, attr_r))
            assert got.breakdown == [(criterion, expected)], (criterion, name_r, attr_r)
            cells_checked += 1
    # Technology class: 50 everywhere except rare-name/rare-attr 80.
    for (name_r, attr_r), expected in {
        (COMMON, COMMON): 50, (COMMON, RARE): 50, (RARE, COMMON): 50, (RARE, RARE): 80,
    }.items():
        a = make_record(record_id="A", municipality=None, applicant=None, ipc_main="C08F")
        b = make_record(record_id="B", municipality=None, applicant=None, ipc_main="C08F")
        got = score_pair(a, b, "ANNA WEBER", scheme, tables(name_r, attr_r))
        assert got.breakdown == [(Criterion.TECH_CLASS, expected)]
        cells_checked += 1
    # Shared co-inventor: flat 120.
    a = make_record(record_id="A", inventors=("Anna Weber", "Karl Otto"),
                    municipality=None, applicant=None, ipc_main="C08F")
    b = make_record(record_id="B", inventors=("Anna Weber", "Karl Otto"),
                    municipality=None, applicant=None, ipc_main="H01L")
    got = score_pair(a, b, "ANNA WEBER", scheme, tables(COMMON, COMMON))
    assert got.breakdown == [(Criterion.CO_INVENTORS, 120)]
    cells_checked += 1
    # Citation link (West corpus only): flat 120.
    a = make_record(record_id="A", source=Source.DPMA, filing_year=1994,
                    municipality=None, applicant=None, ipc_main="C08F")
    b = make_record(record_id="B", source=Source.DPMA, filing_year=1995,
                    municipality=None, applicant=None, ipc_main="H01L",
                    cited_record_ids=("A",))
    got = score_pair(a, b, "ANNA WEBER", ScoringScheme.dpma_post90(), tables(COMMON, COMMON))
    assert got.breakdown == [(Criterion.CITATION, 120)]
    cells_checked += 1

    # Career matching: primary class, secondary class, career start.
    def link_tables(name_r, class_r):
        return rarity_tables(name={"ANNA WEBER": name_r},
                             ipc={"C08F": class_r, "A61K": class_r})

    for (name_r, class_r), expected in {
        (COMMON, COMMON): 80, (RARE, COMMON): 80, (COMMON, RARE): 100, (RARE, RARE): 120,
    }.items():
        gdr = make_career(ipc_secondary=None)
        dpma = make_career(career_id="W1", ipc_secondary=None, first_year=1995, last_year=1996)
        link = match_careers(gdr, dpma, link_tables(name_r, class_r))
        assert link.total_score == expected, ("primary", name_r, class_r)
        cells_checked += 1
    for (name_r, class_r), expected in {
        (COMMON, COMMON): 60, (RARE, COMMON): 60, (COMMON, RARE): 80, (RARE, RARE): 100,
    }.items():
        gdr = make_career()
        dpma = make_career(career_id="W1", ipc_main="ZZZZ", first_year=1995, last_year=1996)
        link = match_careers(gdr, dpma, link_tables(name_r, class_r))
        assert link.total_score == expected, ("secondary", name_r, class_r)
        cells_checked += 1
    for (name_r, entry), expected in {
        (COMMON, 1991): 40, (RARE, 1991): 100, (COMMON, 1996): 0, (RARE, 1996): 0,
    }.items():
        gdr = make_career(ipc_secondary=None)
        dpma = make_career(career_id="W1", ipc_main="QQQQ", ipc_secondary=None,
                           first_year=entry, last_year=entry + 1)
        link = match_careers(gdr, dpma, link_tables(name_r, COMMON))
        assert link.total_score == expected, ("start", name_r, entry)
        cells_checked += 1

    assert cells_checked == 26
    ok(f"scoring-table fidelity: {cells_checked} cells exact")


def test_transitivity_vs_brute_force():
    """Cluster output equals connected components on 1,000 random blocks."""
    rng = random.Random(99)
    for block in range(1_000):
        nodes = [f"N{i}" for i in range(rng.randint(1, 14))]
        pairs = [
            PairScore(a, b, rng.choice([0, 40, 80, 99, 100, 120, 200]), [])
            for a, b in itertools.combinations(nodes, 2)
            if rng.random() < 0.35
        ]
        got = sorted(sorted(g) for g in cluster(pairs, 100, universe=nodes))
        adj = {n: set() for n in nodes}
        for p in pairs:
            if p.total >= 100:
                adj[p.record_a].add(p.record_b)
                adj[p.record_b].add(p.record_a)
        seen, expected = set(), []
        for n in nodes:
            if n in seen:
                continue
            stack, comp = [n], set()
            while stack:
                cur = stack.pop()
                if cur not in comp:
                    comp.add(cur)
                    stack.extend(adj[cur] - comp)
            seen |= comp
            expected.append(sorted(comp))
        assert got == sorted(expected), f"block {block}"
    ok("transitivity: 1,000 random blocks equal brute-force components")


def test_linkage_f1_oracle():
    """Clean corpus resolves perfectly; collisions match the pair oracle."""
    clean = gen_linkage_corpus(LinkageCorpusSpec(n_inventors=200, name_collision_rate=0.0, seed=17))
    careers = disambiguate(clean.gdr_records, ScoringScheme.gdr_1989())
    predicted = [sorted(c.member_records) for c in careers]
    truth = [sorted(g) for g in clean.truth_gdr]
    metrics = evaluate_clustering(predicted, truth)
    assert metrics["f1"] == 1.0

    noisy = gen_linkage_corpus(LinkageCorpusSpec(n_inventors=200, name_collision_rate=0.3, seed=18))
    careers = disambiguate(noisy.gdr_records, ScoringScheme.gdr_1989())
    predicted = [sorted(c.member_records) for c in careers]
    truth = [sorted(g) for g in noisy.truth_gdr]
    metrics = evaluate_clustering(predicted, truth)

    # Exhaustive-pair oracle, written independently of evaluate_clustering.
    def cluster_of(partition):
        return {m: i for i, group in enumerate(partition) for m in group}

    pred_of, true_of = cluster_of(predicted), cluster_of(truth)
    tp = fp = fn = 0
    for a, b in itertools.combinations(sorted(pred_of), 2):
        p_same = pred_of[a] == pred_of[b]
        t_same = true_of[a] == true_of[b]
        tp += p_same and t_same
        fp += p_same and not t_same
        fn += t_same and not p_same
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    assert metrics["pairwise_precision"] == precision
    assert metrics["pairwise_recall"] == recall
    ok("linkage oracle: clean-corpus F1 = 1.0; collision metrics equal pair oracle")


def test_tsls_monte_carlo_and_fwl():
    """200-rep Monte Carlo recovery, CI coverage, and the FWL identity."""
    estimates, covered = [], 0
    for rep in range(200):
        data = gen_iv_dgp(DgpSpec(n=10_000, beta_treatment=0.5, instrument_strength=1.0,
                                  endogeneity_rho=0.5, seed=10_000 + rep))
        report = tsls(data.y, data.d, data.z, data.X)
        beta, se = report.coefficients["d"], report.std_errors["d"]
        estimates.append(beta)
        covered += beta - 1.96 * se <= 0.5 <= beta + 1.96 * se

        # Frisch-Waugh-Lovell: after partialling (1, X) out of y, d, z the
        # IV slope is the ratio of cross-moments.
        Q = np.column_stack([np.ones(len(data.y)), data.X])
        P = Q @ np.linalg.solve(Q.T @ Q, Q.T)
        y_t, d_t, z_t = data.y - P @ data.y, data.d - P @ data.d, data.z - P @ data.z
        assert abs(beta - float(z_t @ y_t) / float(z_t @ d_t)) < 1e-9

    assert abs(np.mean(estimates) - 0.5) < 0.02
    assert 0.90 <= covered / 200 <= 0.99
    ok(f"2SLS oracle: mean {np.mean(estimates):.4f}, coverage {covered/200:.3f}, FWL to 1e-9")


def test_anderson_rubin_equivalence():
    """AR p-value equals the reduced-form HC1 p-value, 100 datasets."""
    for rep in range(100):
        rng = np.random.default_rng(rep)
        n = rng.integers(40, 300)
        X = rng.standard_normal((n, rng.integers(1, 4)))
        z = rng.standard_normal(n)
        d = z + rng.standard_normal(n)
        y = 0.3 * d + X @ rng.standard_normal(X.shape[1]) + rng.standard_normal(n)
        p_ar = anderson_rubin_test(y, d, z, X, beta0=0.0)

        # Manual reduced-form regression with HC1 errors.
        W = np.column_stack([np.ones(n), z, X])
        beta = np.linalg.solve(W.T @ W, W.T @ y)
        u = y - W @ beta
        bread = np.linalg.inv(W.T @ W)
        cov = bread @ ((W * u[:, None] ** 2).T @ W) @ bread * (n / (n - W.shape[1]))
        t = beta[1] / math.sqrt(cov[1, 1])
        p_manual = 2.0 * norm.sf(abs(t))
        assert abs(p_ar - p_manual) < 1e-12, rep
    ok("Anderson-Rubin: equals reduced-form HC1 p-value to 1e-12 on 100 datasets")


def test_cragg_donald_identity():
    """Single-instrument CD F equals the homoskedastic first-stage t^2."""
    for rep in range(50):
        rng = np.random.default_rng(500 + rep)
        n = rng.integers(50, 400)
        X = rng.standard_normal((n, 2))
        z = rng.standard_normal(n)
        d = 0.7 * z + X @ [0.2, -0.4] + rng.standard_normal(n)
        f_stat = cragg_donald_f(d, z, X)

        W = np.column_stack([np.ones(n), z, X])
        beta = np.linalg.solve(W.T @ W, W.T @ d)
        u = d - W @ beta
        sigma2 = float(u @ u) / (n - W.shape[1])
        t2 = beta[1] ** 2 / (sigma2 * np.linalg.inv(W.T @ W)[1, 1])
        assert abs(f_stat - t2) < 1e-9 * max(t2, 1.0), rep
    ok("Cragg-Donald: equals first-stage t^2 to 1e-9")


@pytest.mark.slow
def test_heckman_bootstrap_coverage():
    """Percentile-bootstrap CIs cover truth; null selection keeps the
    inverse-Mills CI on zero."""
    runs = 100
    beta_hits = 0
    for rep in range(runs):
        data = gen_selection_dgp(DgpSpec(n=1_000, beta_treatment=0.5, instrument_strength=1.0,
                                         endogeneity_rho=0.4, selection_rho=0.5,
                                         seed=40_000 + rep))
        report = heckman_iv(data.s, data.W_sel, data.y, data.d, data.z, data.X,
                            bootstrap_reps=300, seed=rep)
        lo, hi = report.conf_int["d"]
        beta_hits += lo <= 0.5 <= hi
    assert beta_hits >= 90, f"beta coverage {beta_hits}/100"

    imr_hits = 0
    for rep in range(runs):
        data = gen_selection_dgp(DgpSpec(n=1_000, beta_treatment=0.5, instrument_strength=1.0,
                                         endogeneity_rho=0.4, selection_rho=0.0,
                                         seed=50_000 + rep))
        report = heckman_iv(data.s, data.W_sel, data.y, data.d, data.z, data.X,
                            bootstrap_reps=300, seed=rep)
        lo, hi = report.conf_int["InverseMillsRatio"]
        imr_hits += lo <= 0.0 <= hi
    assert imr_hits >= 90, f"IMR null coverage {imr_hits}/100"
    ok(f"Heckman-IV: beta coverage {beta_hits}/100, null-IMR coverage {imr_hits}/100")


def test_iv_poisson_moments_and_recovery():
    """Exact moment identification, scale equivariance, recovery at scale."""
    data = gen_count_dgp(DgpSpec(n=20_000, beta_treatment=0.2, instrument_strength=1.0,
                                 endogeneity_rho=0.5, seed=77))
    report = iv_poisson_gmm(data.y, data.d, data.z, data.X)
    assert report.diagnostics["moment_norm"] < 1e-8
    beta, se = report.coefficients["d"], report.std_errors["d"]
    assert abs(beta - 0.2) <= 3.0 * se

    scaled = iv_poisson_gmm(7.0 * data.y, data.d, data.z, data.X)
    assert abs(scaled.coefficients["Intercept"] - report.coefficients["Intercept"]
               - math.log(7.0)) < 1e-9
    assert abs(scaled.coefficients["d"] - report.coefficients["d"]) < 1e-9
    ok("IV-Poisson: moment < 1e-8, ln-c intercept shift to 1e-9, beta within 3 SE")


def test_kaplan_meier_oracle():
    """Hand product-limit example; ECDF identity without censoring."""
    curve = kaplan_meier([(1, False), (2, False), (2, True)])
    assert curve.evaluate(1) == 2 / 3
    assert curve.evaluate(2) == pytest.approx(1 / 3, abs=1e-15)

    rng = np.random.default_rng(21)
    durations = rng.integers(1, 12, size=200)
    curve = kaplan_meier([(int(t), False) for t in durations])
    for t in range(0, 13):
        assert curve.evaluate(t) == pytest.approx(
            float(np.mean(durations > t)), abs=1e-12
        )
    ok("Kaplan-Meier: hand example exact; no-censoring curve equals ECDF complement")


def test_sensitivity_self_consistency():
    """A confounder of strength (RV, RV) nullifies the estimate; the
    closed form at f^2 = 1 is exact; benchmarks sit well below the RV."""
    for beta, se, dof in [(1.7, 0.4, 80), (-0.9, 0.2, 200), (0.05, 0.01, 33)]:
        rv = robustness_value(beta / se, dof)
        assert abs(adjusted_estimate(beta, se, dof, rv, rv)) < 1e-8
    assert abs(robustness_value(5.0, 25) - (math.sqrt(5) - 1) / 2) < 1e-12

    rng = np.random.default_rng(30)
    n = 5_000
    controls = rng.standard_normal((n, 3))
    z = 0.05 * controls[:, 0] + rng.standard_normal(n)
    y = 0.8 * z + 0.05 * controls[:, 1] + rng.standard_normal(n)
    report = analyze_reduced_form(y, z, controls, "inst",
                                  benchmark_columns={"covA": 0, "covB": 1})
    worst = max(max(r2_zw, r2_yw) for _, r2_zw, r2_yw in report.benchmarks)
    assert worst < report.robustness_value / 10.0
    ok("sensitivity: RV-strength confounder zeroes estimate; f^2=1 closed form exact; "
       "benchmarks an order of magnitude below RV")


def test_probit_gradient_check():
    """Analytic score vs central differences on 50 random instances."""
    for rep in range(50):
        rng = np.random.default_rng(700 + rep)
        n = int(rng.integers(30, 150))
        k = int(rng.integers(1, 4)) + 1
        W = np.column_stack([np.ones(n), rng.standard_normal((n, k - 1))])
        beta = rng.normal(scale=0.8, size=k)
        s = (rng.random(n) < norm.cdf(W @ beta)).astype(float)
        analytic = probit_score(s, W, beta)
        h = 1e-6
        numeric = np.empty(k)
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            numeric[j] = (probit_loglik(s, W, beta + e) - probit_loglik(s, W, beta - e)) / (2 * h)
        scale = max(float(np.max(np.abs(analytic))), 1.0)
        assert np.max(np.abs(analytic - numeric)) / scale <= 1e-5, rep
    ok("probit gradient: analytic score matches central differences to 1e-5")


def test_end_to_end_determinism(tmp_path):
    """Two seeded runs of the full pipeline are byte-identical."""
    fixture = tmp_path / "fixture"
    subprocess.run(
        [sys.executable, "-m", "careerlink.cli", "synth", "--out", str(fixture),
         "--n", "300", "--seed", "7"],
        check=True, capture_output=True,
    )

    def digest():
        out_dir = fixture / "out"
        if out_dir.exists():
            for p in out_dir.iterdir():
                p.unlink()
        subprocess.run(
            [sys.executable, "-m", "careerlink.cli", "run",
             "--config", str(fixture / "config.json")],
            check=True, capture_output=True,
        )
        return {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out_dir.iterdir())
        }

    first, second = digest(), digest()
    assert first == second
    assert "run_manifest.json" in first
    ok("end-to-end determinism: repeated runs byte-identical")
