//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use lexdur::config::RunConfig;
use lexdur::corpus::EmbeddingTable;
use lexdur::ml::{
    anova_f_scores, fit_forest, fit_svm, run_baseline, run_optimized, stratified_split, ForestParams, Kernel,
    ModelFamily, PipelineSettings, SvmParams,
};
use lexdur::pipeline::{self, ClassifyArgs, Manifest};
use lexdur::semrel::{pair_weight, pair_weight_exact, semantic_relevance, ContextWindow, WindowOptions};
use lexdur::stats::{
    assemble_design, compare_models, fit_gam, fit_lmm_reml, gcv_at, parse_formula, pearson, DesignMatrices,
    FixedInput, LambdaChoice, LmmFit, ModelFormula,
};
use lexdur::synth::SynthParams;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- helpers

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    Normal::new(0.0, sd).unwrap().sample(rng)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn formula(fixed: &[&str], random: &[&str]) -> ModelFormula {
    ModelFormula {
        response: "y".into(),
        fixed: fixed.iter().map(|s| s.to_string()).collect(),
        smooth: vec![],
        random: random.iter().map(|s| s.to_string()).collect(),
    }
}

fn lmm_design(y: &[f64], fixed: &[(&str, &[f64])], groups: &[String]) -> DesignMatrices {
    let names: Vec<&str> = fixed.iter().map(|f| f.0).collect();
    let inputs: Vec<FixedInput> = fixed.iter().map(|(n, v)| FixedInput::Numeric(n, v)).collect();
    assemble_design(formula(&names, &["g"]), y, &inputs, &[], &[("g", groups)]).unwrap()
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

fn take<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Holds out a stratified quarter and returns (train x, train y, test x, test y).
#[allow(clippy::type_complexity)]
fn split(x: &[Vec<f64>], y: &[usize], seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, Vec<Vec<f64>>, Vec<usize>) {
    let k = y.iter().max().unwrap() + 1;
    let s = stratified_split(y, k, 0.25, seed).unwrap();
    (take(x, &s.train), take(y, &s.train), take(x, &s.test), take(y, &s.test))
}

fn synth_workspace(tokens: usize) -> (tempfile::TempDir, RunConfig) {
    let dir = tempfile::tempdir().unwrap();
    let params = SynthParams {
        tokens,
        ..SynthParams::default()
    };
    pipeline::cmd_synth(dir.path(), &params).unwrap();
    let cfg = RunConfig::load(&dir.path().join("lexdur.toml")).unwrap();
    (dir, cfg)
}

// ---------------------------------------------------------------- criteria

/// Independent relevance oracle: enumerate every position pair of the
/// window and keep target pairs and neighbouring context pairs.
fn brute_relevance(target: &[f64], context: &[&[f64]], nonadjacent: bool) -> f64 {
    let cos = |u: &[f64], v: &[f64]| {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        dot / (nu * nv)
    };
    let l = context.len();
    // position 0 is the target; position d is the word d places before it
    let at = |d: usize| if d == 0 { target } else { context[l - d] };
    let mut s = 0.0;
    for i in 0..=l {
        for j in i + 1..=l {
            if i == 0 || j - i == 1 || nonadjacent {
                s += 2.0 / (i + j + 1) as f64 * cos(at(i), at(j));
            }
        }
    }
    s
}

fn c1_weights() -> Check {
    let paper = [((0, 3), (1, 2)), ((0, 2), (2, 3)), ((0, 1), (1, 1)), ((2, 3), (1, 3)), ((1, 2), (1, 2))];
    for ((a, b), (n, d)) in paper {
        ensure!(pair_weight_exact(a, b) == Ratio::new(n, d), "weight({a},{b}) != {n}/{d}");
        ensure!(pair_weight(a, b) == n as f64 / d as f64, "float weight({a},{b})");
    }

    let mut same = EmbeddingTable::new(4).unwrap();
    for w in ["t", "a", "b", "c"] {
        same.insert(w, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
    }
    let r = semantic_relevance(&ContextWindow::new("t", &["a", "b", "c"], 3), &same, &WindowOptions::default());
    ensure!((r.score - 3.0).abs() <= 1e-12, "identical embeddings gave {}", r.score);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let mut table = EmbeddingTable::new(8).unwrap();
    for w in &vocab {
        table.insert(w.clone(), (0..8).map(|_| normal(&mut rng, 1.0)).collect()).unwrap();
    }
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let m = rng.random_range(1..=5usize);
        let len = rng.random_range(1..=7usize);
        let nonadjacent = trial % 4 == 0;
        let target = &vocab[rng.random_range(0..vocab.len())];
        let preceding: Vec<&str> = (0..len).map(|_| vocab[rng.random_range(0..vocab.len())].as_str()).collect();
        let opts = WindowOptions {
            size: m,
            include_nonadjacent: nonadjacent,
            ..WindowOptions::default()
        };
        let got = semantic_relevance(&ContextWindow::new(target, &preceding, m), &table, &opts).score;
        let kept = &preceding[len.saturating_sub(m)..];
        let ctx: Vec<&[f64]> = kept.iter().map(|w| table.get(w).unwrap()).collect();
        let want = brute_relevance(table.get(target).unwrap(), &ctx, nonadjacent);
        worst = worst.max((got - want).abs());
    }
    ensure!(worst <= 1e-10, "oracle disagreement {worst:e}");
    Ok(format!("5 exact weights, identical-vector score 3, max oracle gap {worst:.1e} over 1000 windows"))
}

fn c2_reml() -> Check {
    let g: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
    let fit = fit_lmm_reml(&lmm_design(&[1.0, 3.0, 5.0, 7.0], &[], &g)).map_err(|e| e.to_string())?;
    let (se, sg) = (fit.sigma2_e, fit.variance_components[0].variance);
    ensure!((se - 2.0).abs() <= 1e-6 && (sg - 7.0).abs() <= 1e-6, "fixture gave {se}, {sg}");

    let (mut eg, mut ee) = (vec![], vec![]);
    for rep in 0..25u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + rep);
        let (mut y, mut groups) = (vec![], vec![]);
        for j in 0..50 {
            let u = normal(&mut rng, 1.0);
            for _ in 0..20 {
                y.push(3.0 + u + normal(&mut rng, 2.0));
                groups.push(format!("g{j}"));
            }
        }
        let fit = fit_lmm_reml(&lmm_design(&y, &[], &groups)).map_err(|e| e.to_string())?;
        eg.push(fit.variance_components[0].variance);
        ee.push(fit.sigma2_e);
    }
    let (mg, me) = (median(eg), median(ee));
    ensure!((mg - 1.0).abs() <= 0.3, "median group variance {mg}");
    ensure!((me - 4.0).abs() <= 0.4, "median residual variance {me}");
    Ok(format!("fixture (2, 7); 25 replicates median group {mg:.3}, residual {me:.3}"))
}

fn c3_gam() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let truth: Vec<f64> = x.iter().map(|v| (2.0 * std::f64::consts::PI * v).sin()).collect();
    let y: Vec<f64> = truth.iter().map(|t| t + normal(&mut rng, 0.1)).collect();
    let f = ModelFormula {
        response: "y".into(),
        fixed: vec![],
        smooth: vec![lexdur::stats::SmoothTerm {
            variable: "x".into(),
            k: Some(10),
        }],
        random: vec![],
    };
    let d = assemble_design(f, &y, &[], &[("x", &x, 10)], &[]).map_err(|e| e.to_string())?;

    let fit = fit_gam(&d, &LambdaChoice::Auto).map_err(|e| e.to_string())?;
    let s = fit.smooth_values("x", &x).map_err(|e| e.to_string())?;
    let b0 = fit.beta()[0];
    let rmse = (s.iter().zip(&truth).map(|(s, t)| (b0 + s - t).powi(2)).sum::<f64>() / 500.0).sqrt();
    ensure!(rmse <= 0.05, "RMSE {rmse}");

    let lam = fit.smooths[0].lambda;
    let g = gcv_at(&d, &[lam]).map_err(|e| e.to_string())?;
    let up = gcv_at(&d, &[2.0 * lam]).map_err(|e| e.to_string())?;
    let down = gcv_at(&d, &[0.5 * lam]).map_err(|e| e.to_string())?;
    ensure!(g <= up && g <= down, "GCV {g} not below neighbours {down}, {up}");

    let stiff = fit_gam(&d, &LambdaChoice::Fixed(vec![1e8])).map_err(|e| e.to_string())?;
    let s = stiff.smooth_values("x", &x).map_err(|e| e.to_string())?;
    let (mx, my) = (x.iter().sum::<f64>() / 500.0, y.iter().sum::<f64>() / 500.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let sup = x
        .iter()
        .zip(&s)
        .map(|(xi, si)| (stiff.beta()[0] + si - (my + slope * (xi - mx))).abs())
        .fold(0.0, f64::max);
    ensure!(sup <= 1e-3, "stiff smooth differs from OLS line by {sup}");
    Ok(format!("RMSE {rmse:.4}, lambda {lam:.3e} is a GCV local minimum, OLS sup gap {sup:.1e}"))
}

fn c4_exact() -> Check {
    let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
    let f = anova_f_scores(&x, &[0, 0, 1, 1], 2).map_err(|e| e.to_string())?;
    ensure!(f[0] == 8.0, "F = {}", f[0]);
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(|e| e.to_string())?.unwrap();
    ensure!((r - 0.5).abs() <= 1e-12, "r = {r}");
    Ok(format!("F = {}, r = {r}", f[0]))
}

fn c5_separability() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut x, mut y) = (vec![], vec![]);
    for i in 0..500 {
        let c = i % 2;
        let mu = if c == 0 { -2.0 } else { 2.0 };
        x.push(vec![mu + normal(&mut rng, 0.7), mu + normal(&mut rng, 0.7)]);
        y.push(c);
    }
    let (xt, yt, xs, ys) = split(&x, &y, 5);
    let rf = fit_forest(&xt, &yt, 2, &ForestParams::default(), 5).map_err(|e| e.to_string())?;
    let lin = fit_svm(&xt, &yt, 2, &SvmParams::default(), 5).map_err(|e| e.to_string())?;
    let (a_rf, a_lin) = (accuracy(&rf.predict(&xs), &ys), accuracy(&lin.predict(&xs), &ys));
    ensure!(a_rf >= 0.95 && a_lin >= 0.95, "gaussians: rf {a_rf}, linear {a_lin}");

    let (mut x, mut y) = (vec![], vec![]);
    for _ in 0..400 {
        let (a, b) = (rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64));
        x.push(vec![a, b]);
        y.push(usize::from(a * b > 0.0));
    }
    let (xt, yt, xs, ys) = split(&x, &y, 6);
    let rf = fit_forest(&xt, &yt, 2, &ForestParams::default(), 6).map_err(|e| e.to_string())?;
    let lin = fit_svm(&xt, &yt, 2, &SvmParams::default(), 6).map_err(|e| e.to_string())?;
    let rbf_params = SvmParams {
        kernel: Kernel::Rbf,
        c: 10.0,
        ..SvmParams::default()
    };
    let rbf = fit_svm(&xt, &yt, 2, &rbf_params, 6).map_err(|e| e.to_string())?;
    let (x_rf, x_lin, x_rbf) = (
        accuracy(&rf.predict(&xs), &ys),
        accuracy(&lin.predict(&xs), &ys),
        accuracy(&rbf.predict(&xs), &ys),
    );
    ensure!(x_rf >= 0.9, "xor rf {x_rf}");
    ensure!(x_lin <= 0.75, "xor linear {x_lin}");
    ensure!(x_rbf >= 0.9, "xor rbf {x_rbf}");
    Ok(format!(
        "gaussians rf {a_rf:.3} linear {a_lin:.3}; xor rf {x_rf:.3} linear {x_lin:.3} rbf {x_rbf:.3}"
    ))
}

/// Five classes at 20:1 imbalance, separated along three informative
/// directions and buried among twenty irrelevant columns on wildly
/// different scales.
fn imbalanced(seed: u64) -> (Vec<Vec<f64>>, Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [400usize, 200, 100, 40, 20];
    let (mut x, mut labels) = (vec![], vec![]);
    for (c, &n) in sizes.iter().enumerate() {
        for _ in 0..n {
            let mut row = vec![
                c as f64 + normal(&mut rng, 0.9),
                (c as f64 * 0.8).sin() * 2.0 + normal(&mut rng, 0.9),
                100.0 * (c as f64 * 0.5 + normal(&mut rng, 1.0)),
            ];
            for j in 0..20 {
                row.push(10f64.powi(j % 4) * normal(&mut rng, 1.0));
            }
            x.push(row);
            labels.push(format!("c{c}"));
        }
    }
    let names = (0..x[0].len()).map(|j| format!("f{j}")).collect();
    (x, labels, names)
}

fn improvement(family: ModelFamily) -> Result<(usize, String), String> {
    let mut wins = 0;
    let mut pairs = vec![];
    for seed in 0..10u64 {
        let (x, labels, names) = imbalanced(600 + seed);
        let settings = PipelineSettings {
            family,
            seed,
            ..PipelineSettings::default()
        };
        let base = run_baseline(&x, &labels, &names, &settings).map_err(|e| e.to_string())?;
        let opt = run_optimized(&x, &labels, &names, &settings).map_err(|e| e.to_string())?;
        let (b, o) = (base.report.macro_f1(), opt.report.macro_f1());
        if o >= b {
            wins += 1;
        }
        pairs.push(format!("{b:.2}->{o:.2}"));
    }
    Ok((wins, pairs.join(" ")))
}

fn c6_optimization() -> Check {
    let (wins, pairs) = improvement(ModelFamily::RandomForest)?;
    ensure!(wins >= 8, "optimized >= baseline macro-F1 in {wins}/10 seeds ({pairs})");
    Ok(format!("optimized >= baseline macro-F1 in {wins}/10 seeds ({pairs})"))
}

fn c7_aic() -> Check {
    let (mut assoc, mut noise) = (0, 0);
    let mut fits: Vec<LmmFit> = vec![];
    for rep in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + rep);
        let n = 120;
        let groups: Vec<String> = (0..n).map(|i| format!("g{}", i % 12)).collect();
        let u: Vec<f64> = (0..12).map(|_| normal(&mut rng, 0.7)).collect();
        let x1: Vec<f64> = (0..n).map(|_| normal(&mut rng, 1.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| normal(&mut rng, 1.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * x1[i] + u[i % 12] + normal(&mut rng, 1.0)).collect();
        let null = fit_lmm_reml(&lmm_design(&y, &[], &groups)).map_err(|e| e.to_string())?;
        let true_m = fit_lmm_reml(&lmm_design(&y, &[("x1", &x1)], &groups)).map_err(|e| e.to_string())?;
        let over = fit_lmm_reml(&lmm_design(&y, &[("x1", &x1), ("z", &z)], &groups)).map_err(|e| e.to_string())?;
        if true_m.aic < null.aic {
            assoc += 1;
        }
        if over.aic > true_m.aic {
            noise += 1;
        }
        for f in [&null, &true_m, &over] {
            ensure!(f.aic == 2.0 * f.df as f64 - 2.0 * f.ml_loglik, "AIC identity broken in run {rep}");
        }
        if rep == 0 {
            fits = vec![null, true_m, over];
        }
    }
    ensure!(assoc >= 95, "associated predictor lowered AIC in {assoc}/100");
    ensure!(noise >= 75, "noise predictor raised AIC in {noise}/100");

    let summaries: Vec<_> = ["null", "x1", "x1+z"].iter().zip(&fits).map(|(n, f)| f.summary(n)).collect();
    let table = compare_models(&summaries).map_err(|e| e.to_string())?;
    for a in &table.rows {
        for b in &table.rows {
            if a.name < b.name {
                let close = (a.aic - b.aic).abs() < 2.0;
                let flagged = table
                    .similar_support
                    .iter()
                    .any(|p| (p.a == a.name && p.b == b.name) || (p.a == b.name && p.b == a.name));
                ensure!(close == flagged, "similar-support flag wrong for {} / {}", a.name, b.name);
            }
        }
    }
    Ok(format!(
        "associated lowers AIC {assoc}/100, noise raises AIC {noise}/100, identity exact, {} similar pair(s) flagged",
        table.similar_support.len()
    ))
}

fn json_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = vec![];
    for name in ["classify_baseline.json", "classify_optimized.json", "model.json", "regress.json"] {
        out.push((name.to_string(), std::fs::read(dir.join(name)).unwrap_or_default()));
    }
    out
}

fn c8_determinism() -> Check {
    let (ws, cfg) = synth_workspace(2000);
    let mut runs = vec![];
    for threads in [1usize, 8] {
        let cfg = RunConfig {
            out_dir: PathBuf::from(format!("out{threads}")),
            ..cfg.clone()
        };
        pipeline::cmd_ingest(&cfg).map_err(|e| e.to_string())?;
        pipeline::cmd_features(&cfg).map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| -> lexdur::Result<()> {
            pipeline::cmd_classify(&cfg, ClassifyArgs::default())?;
            pipeline::cmd_regress(&cfg, &[])?;
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        runs.push(json_artifacts(&ws.path().join(format!("out{threads}"))));
    }
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure!(!a.is_empty(), "{name} missing");
        ensure!(a == b, "{name} differs between 1 and 8 threads");
    }
    Ok(format!("{} JSON artifacts byte-identical under 1 and 8 threads", runs[0].len()))
}

fn c9_formula() -> Check {
    let lm2 = "lm2=lmer(WordDuration~WordLength+LogWordFreq+CiteLength+SemanticRelevance+PhraseRate+Deletions+(1|Age)+(1|Sex)+(1|Speaker))";
    let f = parse_formula(lm2).map_err(|e| e.to_string())?;
    ensure!(f.fixed.len() == 6 && f.random.len() == 3 && f.smooth.is_empty(), "lm2 parsed as {f:?}");
    let a = parse_formula(r#"y ~ x + s(g, bs="re")"#).map_err(|e| e.to_string())?;
    let b = parse_formula("y ~ x + (1|g)").map_err(|e| e.to_string())?;
    ensure!(a == b, "s(g, bs=\"re\") and (1|g) differ");
    let e = parse_formula("y ~ te(a, b)").err().ok_or("te() accepted")?;
    ensure!(e.code() == "E_UNSUPPORTED", "te() gave {}", e.code());
    Ok(format!("lm2: 6 fixed + 3 random; te(): {e}"))
}

fn c10_smoke() -> Check {
    let started = Instant::now();
    let (ws, cfg) = synth_workspace(5000);
    let steps: [(&str, Box<dyn Fn() -> lexdur::Result<()>>); 7] = [
        ("ingest", Box::new(|| pipeline::cmd_ingest(&cfg).map(drop))),
        ("features", Box::new(|| pipeline::cmd_features(&cfg).map(drop))),
        ("annotate", Box::new(|| pipeline::cmd_annotate(&cfg).map(drop))),
        ("classify", Box::new(|| pipeline::cmd_classify(&cfg, ClassifyArgs::default()).map(drop))),
        ("regress", Box::new(|| pipeline::cmd_regress(&cfg, &[]).map(drop))),
        ("correlate", Box::new(|| pipeline::cmd_correlate(&cfg).map(drop))),
        ("plot-partials", Box::new(|| pipeline::cmd_plot_partials(&cfg, None).map(drop))),
    ];
    for (name, step) in &steps {
        step().map_err(|e| format!("{name}: {e}"))?;
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "pipeline took {elapsed:?}");

    let out = cfg.out_dir();
    let manifest = Manifest::read(&out).map_err(|e| e.to_string())?;
    ensure!(manifest.stages.len() == 7, "manifest has {} stages", manifest.stages.len());
    let artifacts = manifest.artifacts();
    for a in &artifacts {
        ensure!(out.join(a).is_file(), "declared artifact {a} missing");
    }

    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path().join("truth.json")).unwrap()).unwrap();
    let corr: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("correlation.json")).unwrap()).unwrap();
    let names: Vec<&str> = corr["matrix"]["names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let r = |a: &str, b: &str| -> Option<f64> {
        let i = names.iter().position(|n| *n == a)?;
        let j = names.iter().position(|n| *n == b)?;
        corr["matrix"]["r"][i][j].as_f64()
    };
    let mut checked = 0;
    for p in truth["planted"].as_array().unwrap() {
        let (a, b, sign) = (p["a"].as_str().unwrap(), p["b"].as_str().unwrap(), p["sign"].as_f64().unwrap());
        let v = r(a, b).ok_or(format!("no correlation for {a}/{b}"))?;
        ensure!(v.signum() == sign, "corr({a}, {b}) = {v:.3}, planted sign {sign}");
        checked += 1;
    }

    let partials: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("partials.json")).unwrap()).unwrap();
    let plots = partials["plots"].as_array().unwrap();
    let t1: Vec<_> = plots.iter().filter(|p| p["model"] == "t1").collect();
    ensure!(t1.len() == 6, "t1 produced {} partial plots", t1.len());
    for p in truth["partial"].as_array().unwrap() {
        let cov = p["a"].as_str().unwrap();
        let plot = t1.iter().find(|q| q["covariate"] == cov).ok_or(format!("no t1 plot for {cov}"))?;
        ensure!(
            plot["slope_sign"].as_f64() == p["sign"].as_f64(),
            "t1 partial effect of {cov} has sign {}, planted {}",
            plot["slope_sign"],
            p["sign"]
        );
    }
    for p in plots {
        let svg = std::fs::read_to_string(out.join(p["file"].as_str().unwrap())).unwrap();
        ensure!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "malformed {}", p["file"]);
        ensure!(!svg.contains("href"), "external reference in {}", p["file"]);
    }
    Ok(format!(
        "7 stages in {:.1}s, {} artifacts, {checked} planted correlation signs and {} partial-effect signs match",
        elapsed.as_secs_f64(),
        artifacts.len(),
        truth["partial"].as_array().unwrap().len()
    ))
}

fn c11_real_corpus() -> Check {
    let Ok(path) = std::env::var("LEXDUR_REAL_CONFIG") else {
        return Ok("SKIP: set LEXDUR_REAL_CONFIG to a config for a canonical-TSV corpus export".into());
    };
    let cfg = RunConfig::load(Path::new(&path)).map_err(|e| e.to_string())?;
    pipeline::run(&cfg).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(cfg.out_dir().join("regress.json")).map_err(|e| e.to_string())?;
    let reg: pipeline::RegressReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let published = [
        ("lm1", -433759.4),
        ("lm2", -459522.0),
        ("lm3", -459523.8),
        ("lm4", -433952.1),
        ("lm5", -459523.8),
        ("t1", -486185.2),
        ("t2", -486185.1),
        ("t6", -486159.7),
    ];
    let mut lines = vec![];
    for c in [&reg.lmm_comparison, &reg.gam_comparison].into_iter().flatten() {
        for row in &c.rows {
            let reference = published.iter().find(|p| p.0 == row.name).map(|p| p.1);
            lines.push(match reference {
                Some(r) => format!("{} AIC {:.1} (published {r:.1})", row.name, row.aic),
                None => format!("{} AIC {:.1}", row.name, row.aic),
            });
        }
    }
    Ok(format!("n = {}; {}", reg.meta.rows, lines.join("; ")))
}

// ---------------------------------------------------------------- harness

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Check); 11] = [
        (1, "relevance weights exact", 5, c1_weights),
        (2, "REML oracle", 30, c2_reml),
        (3, "GAM recovery", 20, c3_gam),
        (4, "ANOVA F and Pearson exactness", 5, c4_exact),
        (5, "classifier separability", 60, c5_separability),
        (6, "optimization pipeline improvement", 300, c6_optimization),
        (7, "AIC behaviour", 60, c7_aic),
        (8, "thread-count determinism", 300, c8_determinism),
        (9, "formula parser", 5, c9_formula),
        (10, "end-to-end smoke", 60, c10_smoke),
        (11, "real corpus (optional)", 3600, c11_real_corpus),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, title, limit, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        let result = match result {
            Ok(_) if secs > limit as f64 => Err(format!("runtime {secs:.1}s over the {limit}s limit")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS [{secs:6.2}s] {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL [{secs:6.2}s] {title}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
