//! Acceptance criteria 1-10, one verdict line each.
//!
//! MovieLens criteria (6, 7, 8, 10) read the corpus from
//! `FUZZYREC_MOVIELENS_DIR` and report BLOCKED when it is unset. The process
//! exits non-zero on a failed criterion only when
//! `FUZZYREC_ACCEPTANCE_STRICT=1`.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fuzzyrec::atoms::{CatalogKind, Statistic, CANDIDATE_PERCENTILES};
use fuzzyrec::config::RunConfig;
use fuzzyrec::evaluation::{evaluate, Metric, MetricsReport, RunMetrics, ScoredItem};
use fuzzyrec::fuzzy::{fand, fnot, for_reduce, f_or, FuzzyValue};
use fuzzyrec::gradcheck::{run_gradcheck, GradcheckConfig};
use fuzzyrec::pipeline::{evaluate_model, recovers_planted_rules, repeat_baseline, MovieLensRun, Prepared};
use fuzzyrec::data::{parse_movielens, SyntheticConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Blocked,
}

struct Line {
    id: u8,
    title: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Line {
    fn new(id: u8, title: &'static str, ok: bool, detail: String) -> Self {
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Self { id, title, verdict, detail }
    }

    fn print(&self) {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Blocked => "BLOCKED",
        };
        println!("[{tag}] criterion {} ({}): {}", self.id, self.title, self.detail);
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let report = run_gradcheck(&GradcheckConfig::default()).expect("gradient check runs");
    let took = start.elapsed();
    let ok = report.passed() && report.trials == 100 && took < Duration::from_secs(10);
    Line::new(
        1,
        "gradient correctness",
        ok,
        format!(
            "{} instances, {} entries, max error {:.2e} (< 1e-5), {:.2} s (< 10 s)",
            report.trials,
            report.entries,
            report.max_error,
            secs(took)
        ),
    )
}

fn criterion_2() -> Line {
    const CASES: usize = 1000;
    const TOL: f64 = 1e-12;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let unit = |rng: &mut ChaCha8Rng| {
        // Include the endpoints now and then.
        match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        }
    };
    let fv = |x: f64| FuzzyValue::new(x).unwrap();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok && !failures.iter().any(|f: &String| f == name) {
            failures.push(name.to_string());
        }
    };
    for _ in 0..CASES {
        let (a, b, c) = (unit(&mut rng), unit(&mut rng), unit(&mut rng));
        let (fa, fb, fc) = (fv(a), fv(b), fv(c));
        let in_unit = |v: FuzzyValue<f64>| (0.0..=1.0).contains(&v.value());
        check(
            "closure",
            in_unit(fnot(fa)) && in_unit(fand(fa, fb)) && in_unit(f_or(fa, fb)),
        );
        check("and commutative", (fand(fa, fb).value() - fand(fb, fa).value()).abs() <= TOL);
        check("or commutative", (f_or(fa, fb).value() - f_or(fb, fa).value()).abs() <= TOL);
        check(
            "and associative",
            (fand(fand(fa, fb), fc).value() - fand(fa, fand(fb, fc)).value()).abs() <= TOL,
        );
        check(
            "or associative",
            (f_or(f_or(fa, fb), fc).value() - f_or(fa, f_or(fb, fc)).value()).abs() <= TOL,
        );
        check(
            "De Morgan",
            (fnot(fand(fa, fb)).value() - f_or(fnot(fa), fnot(fb)).value()).abs() <= TOL,
        );
        let len = rng.gen_range(1..12);
        let xs: Vec<f64> = (0..len).map(|_| unit(&mut rng)).collect();
        let closed = 1.0 - xs.iter().map(|x| 1.0 - x).product::<f64>();
        check("or-reduce closed form", (for_reduce(&xs).unwrap().value() - closed).abs() <= TOL);
    }
    let took = start.elapsed();
    let ok = failures.is_empty() && took < Duration::from_secs(5);
    let detail = if failures.is_empty() {
        format!("{CASES} cases per law at 1e-12, {:.3} s (< 5 s)", secs(took))
    } else {
        format!("violated: {}", failures.join(", "))
    };
    Line::new(2, "fuzzy algebra", ok, detail)
}

fn synthetic_config(samples: usize) -> RunConfig {
    let mut cfg = RunConfig::for_dataset(CatalogKind::Synthetic);
    cfg.synthetic_samples = samples;
    cfg
}

/// Recovery count and elapsed time over model seeds 0-9, plus the metrics
/// of every run.
fn synthetic_seeds(samples: usize) -> (usize, Duration, Vec<RunMetrics>) {
    let cfg = synthetic_config(samples);
    let start = Instant::now();
    let prepared = Prepared::load(&cfg).expect("synthetic corpus");
    let mut recovered = 0;
    let mut runs = Vec::new();
    for seed in 0..10 {
        let tcfg = cfg.train_config::<f64>().with_seed(seed);
        let model = prepared.train(&tcfg).expect("training");
        recovered += usize::from(recovers_planted_rules(&model.network));
        runs.push(evaluate_model(&prepared, &model.network, &model.catalog, &cfg).expect("evaluation"));
    }
    (recovered, start.elapsed(), runs)
}

fn criterion_3_and_4() -> [Line; 2] {
    let (desk, desk_time, _) = synthetic_seeds(50_000);
    let (full, full_time, runs) = synthetic_seeds(SyntheticConfig::default().samples);
    let ok3 = desk >= 9 && full >= 9 && desk_time < Duration::from_secs(120) && full_time < Duration::from_secs(1800);
    let line3 = Line::new(
        3,
        "synthetic rule recovery",
        ok3,
        format!(
            "pattern recovered in {desk}/10 seeds at 50,000 samples ({:.1} s) and {full}/10 at 1,000,209 samples ({:.1} s); need >= 9/10",
            secs(desk_time),
            secs(full_time)
        ),
    );

    let report = MetricsReport::from_runs(&runs).expect("report");
    let targets = [
        (Metric::Precision, 5, 1.000, 0.002),
        (Metric::Recall, 5, 0.345, 0.005),
        (Metric::Ndcg, 5, 1.000, 0.002),
        (Metric::Map, 5, 1.000, 0.002),
        (Metric::Precision, 10, 0.987, 0.005),
        (Metric::Recall, 10, 0.673, 0.005),
    ];
    let (ok4, detail) = compare(&report, &targets);
    [line3, Line::new(4, "synthetic metrics", ok4, detail)]
}

fn compare(report: &MetricsReport, targets: &[(Metric, usize, f64, f64)]) -> (bool, String) {
    let mut ok = true;
    let parts: Vec<String> = targets
        .iter()
        .map(|&(m, k, want, tol)| {
            let got = report.mean(m, k).expect("metric present");
            let hit = (got - want).abs() <= tol;
            ok &= hit;
            format!("{}@{k} {got:.3} (want {want:.3} +- {tol}){}", m.short(), if hit { "" } else { " x" })
        })
        .collect();
    (ok, parts.join(", "))
}

/// Definitions evaluated directly on a ranked relevance list.
struct Oracle<'a> {
    ranked: &'a [bool],
}

impl Oracle<'_> {
    fn total(&self) -> usize {
        self.ranked.iter().filter(|&&r| r).count()
    }

    fn hits(&self, k: usize) -> usize {
        self.ranked.iter().take(k).filter(|&&r| r).count()
    }

    fn precision(&self, k: usize) -> f64 {
        self.hits(k) as f64 / k as f64
    }

    fn recall(&self, k: usize) -> f64 {
        self.hits(k) as f64 / self.total() as f64
    }

    fn ndcg(&self, k: usize) -> f64 {
        let mut dcg = 0.0;
        for (i, &r) in self.ranked.iter().enumerate().take(k) {
            if r {
                dcg += 1.0 / ((i + 2) as f64).log2();
            }
        }
        let mut idcg = 0.0;
        for i in 0..self.total().min(k) {
            idcg += 1.0 / ((i + 2) as f64).log2();
        }
        dcg / idcg
    }

    fn ap(&self, k: usize) -> f64 {
        let mut sum = 0.0;
        for p in 1..=k.min(self.ranked.len()) {
            if self.ranked[p - 1] {
                sum += self.hits(p) as f64 / p as f64;
            }
        }
        sum / self.total().min(k) as f64
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_5() -> Line {
    const TOL: f64 = 1e-12;
    let ks: Vec<usize> = (1..=7).collect();
    let mut cases = 0usize;
    let mut worst = 0.0f64;
    for n in 1..=6usize {
        let perms = permutations(n);
        for bits in 0u32..(1 << n) {
            let relevant: Vec<bool> = (0..n).map(|j| bits & (1 << j) != 0).collect();
            for perm in &perms {
                // Item j + 1 gets score perm[j]; higher score ranks first.
                let items: Vec<ScoredItem> = (0..n)
                    .map(|j| ScoredItem {
                        user_id: 1,
                        item_id: j as u32 + 1,
                        score: perm[j] as f64,
                        relevant: relevant[j],
                    })
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| perm[b].cmp(&perm[a]));
                let ranked: Vec<bool> = order.iter().map(|&j| relevant[j]).collect();
                let oracle = Oracle { ranked: &ranked };
                let got = evaluate(&items, &ks).expect("evaluation");
                for &k in &ks {
                    let mut pairs = vec![(got.get(Metric::Precision, k).unwrap(), oracle.precision(k))];
                    if oracle.total() > 0 {
                        pairs.push((got.get(Metric::Recall, k).unwrap(), oracle.recall(k)));
                        pairs.push((got.get(Metric::Ndcg, k).unwrap(), oracle.ndcg(k)));
                        pairs.push((got.get(Metric::Map, k).unwrap(), oracle.ap(k)));
                    }
                    for (a, b) in pairs {
                        worst = worst.max((a - b).abs());
                    }
                }
                cases += 1;
            }
        }
    }
    Line::new(
        5,
        "metric oracle equivalence",
        worst <= TOL,
        format!("{cases} rankings of 1-6 items, k = 1..7, max difference {worst:.1e} (<= 1e-12)"),
    )
}

fn criterion_9() -> Line {
    let dir = tempfile::tempdir().expect("temp dir");
    common::write_fixture(dir.path(), common::Fixture::default());
    let mut checks = Vec::new();

    let mut syn = synthetic_config(20_000);
    syn.runs = 3;
    let mut ml = RunConfig::for_dataset(CatalogKind::MovieLens);
    ml.movielens_dir = Some(dir.path().to_path_buf());
    ml.train.epochs = 40;
    ml.runs = 3;
    for cfg in [&syn, &ml] {
        let once = || {
            let prepared = Prepared::load(cfg).expect("data");
            let model = prepared.train::<f64>(&cfg.train_config()).expect("training");
            let mut ckpt = Vec::new();
            model.checkpoint().unwrap().write(&mut ckpt).unwrap();
            let report = fuzzyrec::pipeline::repeat_model::<f64>(&prepared, cfg).expect("evaluation");
            let mut csv = Vec::new();
            report.write_csv(&mut csv).unwrap();
            (ckpt, csv)
        };
        let (a, b) = (once(), once());
        checks.push((cfg.dataset, a.0 == b.0, a.1 == b.1));
    }
    let ok = checks.iter().all(|c| c.1 && c.2);
    let detail = checks
        .iter()
        .map(|(d, c, e)| format!("{d}: checkpoints {}, metric CSVs {}", same(*c), same(*e)))
        .collect::<Vec<_>>()
        .join("; ");
    Line::new(9, "determinism", ok, format!("{detail} (MovieLens path on a generated corpus)"))
}

fn same(b: bool) -> &'static str {
    if b {
        "identical"
    } else {
        "DIFFER"
    }
}

fn blocked(id: u8, title: &'static str) -> Line {
    Line {
        id,
        title,
        verdict: Verdict::Blocked,
        detail: "MovieLens 1M not available; set FUZZYREC_MOVIELENS_DIR to run".into(),
    }
}

fn movielens_criteria(dir: &Path) -> Vec<Line> {
    let start = Instant::now();
    let mut cfg = RunConfig::for_dataset(CatalogKind::MovieLens);
    cfg.movielens_dir = Some(dir.to_path_buf());
    let data = match parse_movielens(dir) {
        Ok(d) => d,
        Err(e) => {
            return [(6, "MovieLens metrics"), (7, "MovieLens weight structure"), (8, "BaselineOnly"), (10, "threshold selection")]
                .into_iter()
                .map(|(id, title)| Line::new(id, title, false, format!("cannot read corpus: {e}")))
                .collect()
        }
    };
    let run = MovieLensRun::prepare(data, &cfg).expect("split");
    let base = cfg.train_config::<f64>();

    let selection = run.select_thresholds(&base).expect("threshold selection");
    let [item_t, user_t, count_t] = selection.thresholds;
    let count_candidates: Vec<f64> = run
        .stats
        .candidates(Statistic::ItemRatingCount)
        .expect("candidates")
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    let ok10 = item_t == 4.0 && user_t == 4.0 && count_candidates.contains(&count_t) && count_t == 228.0;
    let line10 = Line::new(
        10,
        "threshold selection",
        ok10,
        format!(
            "retained ({item_t}, {user_t}, {count_t}); want (4.0, 4.0, 228.0); rating-count candidates at p{CANDIDATE_PERCENTILES:?}: {count_candidates:?}"
        ),
    );

    let prepared = Prepared::MovieLens(Box::new(run));
    let Prepared::MovieLens(ml) = &prepared else { unreachable!() };
    let mut runs = Vec::new();
    let mut first = None;
    for seed in 0..10 {
        let model = ml.train_with(selection.clone(), &base.clone().with_seed(seed)).expect("training");
        runs.push(evaluate_model(&prepared, &model.network, &model.catalog, &cfg).expect("evaluation"));
        first.get_or_insert(model);
    }
    let model = first.expect("ten runs");
    let report = MetricsReport::from_runs(&runs).expect("report");
    let took = start.elapsed();

    let fuzzy = model.network.fuzzify();
    let mut by_max: Vec<(f64, String)> = (0..model.network.atoms())
        .map(|j| {
            let w = (0..model.network.rules()).map(|i| fuzzy.get(i, j)).fold(0.0, f64::max);
            (w, model.catalog.get(j).name.clone())
        })
        .collect();
    by_max.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top3: Vec<&str> = by_max.iter().take(3).map(|(_, n)| n.as_str()).collect();
    let stat_top = top3
        .iter()
        .all(|n| model.catalog.get(model.catalog.index_of(n).unwrap()).statistic().is_some());
    let small = fuzzy.as_slice().iter().filter(|&&w| w < 0.1).count() as f64 / fuzzy.as_slice().len() as f64;
    let ok7 = stat_top && small >= 0.75;
    let line7 = Line::new(
        7,
        "MovieLens weight structure",
        ok7,
        format!("top-3 atoms by max weight {top3:?}; {:.1}% of weights < 0.1 (need >= 75%)", 100.0 * small),
    );

    let targets = [
        (Metric::Precision, 5, 0.218),
        (Metric::Ndcg, 5, 0.232),
        (Metric::Recall, 10, 0.343),
        (Metric::Map, 10, 0.204),
    ];
    let strict: Vec<_> = targets.iter().map(|&(m, k, v)| (m, k, v, 0.015)).collect();
    let soft: Vec<_> = targets.iter().map(|&(m, k, v)| (m, k, v, 0.03)).collect();
    let (ok_strict, detail) = compare(&report, &strict);
    let (ok_soft, _) = compare(&report, &soft);
    let in_time = took < Duration::from_secs(3600);
    let ok6 = in_time && (ok_strict || (ok_soft && ok7));
    let tier = if ok_strict { "within +-0.015" } else if ok_soft && ok7 { "soft: within +-0.03 with criterion 7" } else { "outside tolerance" };
    let line6 = Line::new(6, "MovieLens metrics", ok6, format!("{detail}; {tier}; {:.0} s (< 3600 s)", secs(took)));

    let baseline = repeat_baseline(&prepared, &cfg).expect("baseline");
    let (ok8m, detail8) = compare(&baseline, &[(Metric::Precision, 5, 0.232, 0.01), (Metric::Ndcg, 10, 0.246, 0.01)]);
    let zero_std = baseline.rows.iter().all(|r| r.std == 0.0) && baseline.n_seeds == 10;
    let line8 = Line::new(
        8,
        "BaselineOnly",
        ok8m && zero_std,
        format!("{detail8}; std across 10 seeds {}", if zero_std { "exactly 0" } else { "NONZERO" }),
    );
    vec![line6, line7, line8, line10]
}

fn main() {
    let mut lines = vec![criterion_1(), criterion_2()];
    lines.extend(criterion_3_and_4());
    lines.push(criterion_5());
    let ml_dir = std::env::var_os("FUZZYREC_MOVIELENS_DIR").map(PathBuf::from);
    let ml_lines = match &ml_dir {
        Some(dir) => movielens_criteria(dir),
        None => vec![
            blocked(6, "MovieLens metrics"),
            blocked(7, "MovieLens weight structure"),
            blocked(8, "BaselineOnly"),
            blocked(10, "threshold selection"),
        ],
    };
    lines.extend(ml_lines);
    lines.push(criterion_9());
    lines.sort_by_key(|l| l.id);

    println!();
    for line in &lines {
        line.print();
    }
    let failed = lines.iter().filter(|l| l.verdict == Verdict::Fail).count();
    let blocked = lines.iter().filter(|l| l.verdict == Verdict::Blocked).count();
    println!(
        "acceptance: {} passed, {failed} failed, {blocked} blocked",
        lines.len() - failed - blocked
    );
    let strict = std::env::var("FUZZYREC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
