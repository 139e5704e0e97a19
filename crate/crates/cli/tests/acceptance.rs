//! Acceptance gate: every criterion at its stated instance count,
//! tolerance and time budget, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qrl::Check;
use qrl_cli::suites::{family, Ctx};
use qrl_cli::{run_suite, RunConfig, Suite};

const SEED: u64 = 20260314;

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn run_family(name: &str, count: usize) -> (Vec<Check>, Duration) {
    let f = family(name).expect("registered family");
    let start = Instant::now();
    let checks = (f.run)(&Ctx::new(SEED), count).unwrap_or_else(|e| panic!("family {name}: {e}"));
    (checks, start.elapsed())
}

fn with<'a>(checks: &'a [Check], inequality: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
    checks.iter().filter(move |c| c.inequality == inequality)
}

/// Distinct instance numbers among `checks`, read from `family/NNNN/…`.
fn instances<'a>(checks: impl Iterator<Item = &'a Check>) -> usize {
    let mut ids: Vec<&str> = checks.filter_map(|c| c.instance.split('/').nth(1)).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

struct Tally {
    seen: usize,
    violations: usize,
    worst: f64,
}

/// Re-evaluates `holds(lhs, rhs)` on every check instead of trusting the
/// stored pass flags.
fn tally<'a>(checks: impl Iterator<Item = &'a Check>, holds: impl Fn(f64, f64) -> bool) -> Tally {
    let mut t = Tally { seen: 0, violations: 0, worst: f64::INFINITY };
    for c in checks {
        t.seen += 1;
        if !holds(c.lhs, c.rhs) || !c.pass {
            t.violations += 1;
        }
        t.worst = t.worst.min(c.margin);
    }
    t
}

fn outcome(id: usize, title: &'static str, tallies: &[(&str, Tally)], extra: &[(bool, String)], elapsed: Duration, budget: Duration) -> Outcome {
    let mut pass = elapsed <= budget;
    let mut parts = Vec::new();
    for (label, t) in tallies {
        pass &= t.seen > 0 && t.violations == 0;
        parts.push(format!("{label}: {} checks, {} violations, worst margin {:.3e}", t.seen, t.violations, t.worst));
    }
    for (ok, msg) in extra {
        pass &= ok;
        parts.push(msg.clone());
    }
    parts.push(format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs()));
    Outcome { id, title, pass, detail: parts.join("; ") }
}

fn main() -> ExitCode {
    let mut results = Vec::new();

    let (approx, t_approx) = run_family("approx", 200);
    let bound = tally(with(&approx, "Tr(M) < 4d/(δm)"), |l, r| l < r + 1e-7);
    let n_bound = instances(with(&approx, "Tr(M) < 4d/(δm)"));
    results.push(outcome(
        1,
        "approximation bound Tr(M) < 4d/(δm)",
        &[("bound", bound)],
        &[(n_bound == 200, format!("{n_bound} instances"))],
        t_approx,
        Duration::from_secs(60),
    ));
    let samples = tally(with(&approx, "class samples ≥ 50"), |l, _| l >= 50.0);
    let transfer = tally(with(&approx, "Tr(Mρ) > δ/4"), |l, r| l > r - 1e-7);
    let review = tally(with(&approx, "Tr(Mρ) > δ/4").chain(with(&approx, "Tr(M) < 4Tr(V)/(mδ)")), |_, _| true);
    results.push(outcome(
        2,
        "transfer Tr(Mρ) > δ/4 on ≥ 50 samples per instance",
        &[("samples", samples), ("worst sample", transfer), ("operator form", review)],
        &[],
        t_approx,
        Duration::from_secs(300),
    ));

    let (sol, t_sol) = run_family("solovay", 20);
    let mass = tally(with(&sol, "τ(G^m) < (4/δ)2^{-m}"), |l, r| l < r + 1e-7);
    let transfer = tally(with(&sol, "Tr(ρ_n G^m_n) > δ/4"), |l, r| l > r - 1e-7);
    let planted = tally(with(&sol, "checks at the planted level ≥ 1"), |l, _| l >= 1.0);
    results.push(outcome(
        3,
        "Solovay to q-MLT mass and failure transfer",
        &[("mass", mass), ("transfer", transfer), ("planted level", planted)],
        &[(instances(sol.iter()) == 20, format!("{} instances", instances(sol.iter())))],
        t_sol,
        Duration::from_secs(600),
    ));

    let (nest, t_nest) = run_family("nesting", 20);
    results.push(outcome(
        4,
        "nested q-MLT ranks, inclusions and monotone values",
        &[
            ("rank", tally(with(&nest, "rank(Q^m_n) < 2^{n−m+1}"), |l, r| l < r)),
            ("inclusion", tally(with(&nest, "ranges of G^i_n, Q^{m+1}_n ⊆ Q^m_n"), |l, _| l <= 1e-8)),
            ("nesting", tally(with(&nest, "range(Q^m_{n−1} ⊗ I) ⊆ Q^m_n"), |l, _| l <= 1e-8)),
            ("monotone in n", tally(with(&nest, "Tr(ρ_n Q^m_n) ≥ Tr(ρ_{n−1} Q^m_{n−1})"), |l, r| l >= r - 1e-8)),
            ("monotone in m", tally(with(&nest, "ρ(Q^m) ≥ ρ(Q^{m+1})"), |l, r| l >= r - 1e-8)),
        ],
        &[],
        t_nest,
        Duration::from_secs(120),
    ));

    let (count, t_count) = run_family("counting", 500);
    results.push(outcome(
        5,
        "counting bound |S^δ(F)| < Tr(F)/δ",
        &[
            ("bound", tally(with(&count, "|S^δ(F)| < Tr(F)/δ"), |l, r| l.fract() == 0.0 && l < r)),
            ("scan agreement", tally(with(&count, "threshold set = scanned set"), |l, r| l == r)),
        ],
        &[(instances(count.iter()) == 500, format!("{} projectors", instances(count.iter())))],
        t_count,
        Duration::from_secs(60),
    ));

    let (diag, t_diag) = run_family("diagonal", 20);
    results.push(outcome(
        6,
        "diagonal conversions μ_ρ(C^m) ≥ 3δ/4 and μ_ρ(J^m) > δ/2",
        &[
            ("q-MLT to classical", tally(with(&diag, "μ_ρ(T^m_n) ≥ 3δ/4"), |l, r| l >= r - 1e-9)),
            ("Solovay to MLT", tally(with(&diag, "μ_ρ(C^m_t) > δ/2"), |l, r| l > r - 1e-9)),
            ("witnessed", tally(with(&diag, "witnessing levels ≥ 1"), |l, _| l >= 1.0)),
        ],
        &[],
        t_diag,
        Duration::from_secs(60),
    ));

    let (exact, t_exact) = run_family("exactness", 20);
    let tau_levels = with(&exact, "average(τ, n, 0, 1) = 0.5").count();
    results.push(outcome(
        7,
        "LLN averages of τ and b_p",
        &[
            ("τ", tally(with(&exact, "average(τ, n, 0, 1) = 0.5"), |l, r| (l - r).abs() <= 1e-12)),
            ("b_p", tally(with(&exact, "average(b_p, n, a, b) = ap + b(1−p)"), |l, r| (l - r).abs() <= 1e-12)),
        ],
        &[(tau_levels == 20, format!("τ at {tau_levels} levels"))],
        t_exact,
        Duration::from_secs(60),
    ));

    let (cher, t_cher) = run_family("chernoff", 1);
    let levels = with(&cher, "b_p(S_n) ≤ exp(−2δ²nM²/(b−a)²)").count();
    results.push(outcome(
        8,
        "Chernoff masses and Bernoulli(0.8) captures",
        &[
            ("mass", tally(with(&cher, "b_p(S_n) ≤ exp(−2δ²nM²/(b−a)²)"), |l, r| l <= r)),
            ("capture", tally(with(&cher, "Tr(ρ_n S_n) ≥ Cδ"), |l, r| l >= r)),
            ("witnessed", tally(with(&cher, "witnessing levels ≥ 1"), |l, _| l >= 1.0)),
        ],
        &[(levels == 4 * 40, format!("{levels} test levels"))],
        t_cher,
        Duration::from_secs(60),
    ));

    let (tm, t_tm) = run_family("trace_markov", 500);
    let (mk, t_mk) = run_family("markov", 500);
    results.push(outcome(
        9,
        "trace Markov Tr(ρF_μ) ≥ (m−μ)/(B−μ)",
        &[
            ("trace", tally(with(&tm, "Tr(ρF_μ) ≥ (m−μ)/(B−μ)"), |l, r| l >= r - 1e-8)),
            ("classical", tally(with(&mk, "ℙ{Y ≥ μ} ≥ (𝔼Y−μ)/(B−μ)"), |l, r| l >= r - 1e-8)),
        ],
        &[],
        t_tm + t_mk,
        Duration::from_secs(60),
    ));

    let (conv, t_conv) = run_family("convexity", 100);
    results.push(outcome(
        10,
        "convexity linearity of member values",
        &[
            ("linearity", tally(with(&conv, "Tr(mix_k G_k) = Σα_i Tr(ρ^i_k G_k)"), |l, r| (l - r).abs() <= 1e-10)),
            ("pigeonhole", tally(with(&conv, "some component has Tr(ρ^i_N G_N) > δ"), |l, r| l > r)),
        ],
        &[(instances(conv.iter()) == 100, format!("{} mixtures", instances(conv.iter())))],
        t_conv,
        Duration::from_secs(30),
    ));

    let start = Instant::now();
    let mut extra = Vec::new();
    let dir = tempfile::tempdir().expect("temporary directory");
    for suite in Suite::EACH.into_iter().chain([Suite::All]) {
        let mut bytes = Vec::new();
        for run in 0..2 {
            let cfg = RunConfig {
                seed: SEED,
                suite,
                instance_count: 2,
                n_max: Some(6),
                output_dir: dir.path().join(format!("{suite}-{run}")),
                ..RunConfig::default()
            };
            let report = run_suite(&cfg).unwrap_or_else(|e| panic!("suite {suite}: {e}"));
            let json = std::fs::read(cfg.output_dir.join(format!("{suite}.json"))).expect("json report");
            let csv = std::fs::read(cfg.output_dir.join(format!("{suite}.csv"))).expect("csv report");
            bytes.push((json, csv, report.summary.total));
        }
        let same = bytes[0].0 == bytes[1].0 && bytes[0].1 == bytes[1].1;
        extra.push((same && bytes[0].2 > 0, format!("{suite} {}", if same { "identical" } else { "DIFFERS" })));
    }
    results.push(outcome(11, "byte-identical reports on re-run", &[], &extra, start.elapsed(), Duration::from_secs(600)));

    let mut all = true;
    for r in &results {
        all &= r.pass;
        println!("[{}] {:>2} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title, r.detail);
    }
    println!("acceptance: {} of {} criteria pass", results.iter().filter(|r| r.pass).count(), results.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
