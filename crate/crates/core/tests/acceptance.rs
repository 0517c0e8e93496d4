//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spotkit::error::ObjectiveError;
use spotkit::kriging::{neg_ln_like, JITTER_START};
use spotkit::objectives::{fun_branin, with_noise};
use spotkit::ocba::{allocate, approx_pcs, OcbaInput};
use spotkit::param_space::design_table;
use spotkit::sampling::lhd;
use spotkit::spot::{best, importance, run};
use spotkit::state::StateFile;
use spotkit::{
    AnalyticObjective, Builtin, FunControl, KrigingConfig, KrigingModel, NaturalValue, Objective, RunState,
    SearchSpace, SpotConfig, Transform, VariableSpec,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn branin_space() -> SearchSpace {
    SearchSpace::numeric_box(&[-5.0, 0.0], &[10.0, 15.0]).unwrap()
}

fn analytic(b: Builtin) -> AnalyticObjective {
    AnalyticObjective::new(b, FunControl::default())
}

fn branin_convergence() -> Check {
    let start = Instant::now();
    let mut bests = Vec::new();
    for seed in 1..=10 {
        let cfg = SpotConfig {
            init_size: 10,
            fun_evals: Some(20),
            seed,
            ..Default::default()
        };
        let s = run(cfg, branin_space(), &analytic(Builtin::Branin)).map_err(|e| e.to_string())?;
        bests.push(best(&s).unwrap().y_min());
    }
    let secs = start.elapsed().as_secs_f64();
    let good = bests.iter().filter(|b| **b <= 0.45).count();
    let worst = bests.iter().copied().fold(f64::MIN, f64::max);
    ensure(
        good >= 7 && worst <= 1.5 && secs <= 30.0,
        format!("{good}/10 seeds ≤ 0.45, worst {worst:.4}, {secs:.1} s"),
    )
}

fn sphere_convergence() -> Check {
    let start = Instant::now();
    let mut good = 0;
    let mut worst = f64::MIN;
    for seed in 1..=10 {
        let cfg = SpotConfig {
            init_size: 10,
            fun_evals: Some(25),
            seed,
            ..Default::default()
        };
        let space = SearchSpace::numeric_box(&[-1.0], &[1.0]).unwrap();
        let s = run(cfg, space, &analytic(Builtin::Sphere)).map_err(|e| e.to_string())?;
        let b = best(&s).unwrap().y_min();
        good += usize::from(b <= 1e-4);
        worst = worst.max(b);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        good >= 8 && secs <= 10.0,
        format!("{good}/10 seeds ≤ 1e-4, worst {worst:.3e}, {secs:.1} s"),
    )
}

fn branin_minima() -> Check {
    let minima = [[-std::f64::consts::PI, 12.275], [std::f64::consts::PI, 2.275], [9.42478, 2.475]];
    let values: Vec<f64> = minima.iter().map(|m| fun_branin(m)).collect();
    ensure(
        values.iter().all(|v| (v - 0.397887).abs() <= 1e-4),
        format!("{values:.6?}"),
    )
}

fn schonlau_fit() -> Check {
    let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0, 12.0].iter().map(|v| vec![*v]).collect();
    let y = [0.0, -1.75, -2.0, -0.5, 5.0];
    let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 123).map_err(|e| e.to_string())?;
    let (theta, nll) = (m.theta()[0], m.neg_ln_like());
    ensure(
        (theta - 1.09276).abs() <= 0.15 && (nll - 1.20788).abs() <= 0.05,
        format!("theta {theta:.5}, negLnLike {nll:.5} (inputs normalized to [0, 1])"),
    )
}

fn nugget_dominance() -> Check {
    let x = lhd(10, &[-1.0], &[1.0], 42).unwrap().points;
    let ctrl = FunControl {
        sigma: 2.0,
        ..Default::default()
    };
    let noisy = with_noise(|x: &[f64]| x[0] * x[0], ctrl);
    let y: Vec<f64> = x.iter().enumerate().map(|(i, p)| noisy(p, i as u64)).collect();
    let plain = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, 1).map_err(|e| e.to_string())?;
    let nugget_cfg = KrigingConfig {
        noise: true,
        ..Default::default()
    };
    let nugget = KrigingModel::fit(&x, &y, &nugget_cfg, None, 1).map_err(|e| e.to_string())?;
    let lambda = nugget.lambda().unwrap_or(0.0);
    ensure(
        nugget.neg_ln_like() <= plain.neg_ln_like() && lambda > 0.0,
        format!(
            "negLnLike {:.4} with nugget vs {:.4} without, Lambda {lambda:.3e}",
            nugget.neg_ln_like(),
            plain.neg_ln_like()
        ),
    )
}

fn nan_handling() -> Check {
    let start = Instant::now();
    let cfg = SpotConfig {
        init_size: 20,
        fun_evals: Some(30),
        ..Default::default()
    };
    let space = SearchSpace::numeric_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let s = run(cfg, space, &analytic(Builtin::RandomError)).map_err(|e| e.to_string())?;
    let failed: usize = s.archive.entries().iter().map(|e| e.n_failed).sum();
    let secs = start.elapsed().as_secs_f64();
    ensure(
        s.success_count() == 30 && secs <= 5.0,
        format!("{} successes, {failed} failures recorded, {secs:.2} s", s.success_count()),
    )
}

fn interpolation_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..50 {
        let n = rng.random_range(3..=12);
        let k = rng.random_range(1..=4);
        let x = lhd(n, &vec![0.0; k], &vec![1.0; k], case).unwrap().points;
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..6.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|p| p.iter().zip(&w).map(|(v, wi)| (wi * v).sin()).sum())
            .collect();
        let m = KrigingModel::fit(&x, &y, &KrigingConfig::default(), None, case).map_err(|e| e.to_string())?;
        for (p, yi) in x.iter().zip(&y) {
            let pr = m.predict(p);
            worst.0 = worst.0.max((pr.mean - yi).abs());
            worst.1 = worst.1.max(pr.std);
            if pr.neg_ei != 0.0 {
                return Err(format!("case {case}: EI {} at a training point", -pr.neg_ei));
            }
        }
    }
    ensure(
        worst.0 <= 1e-6 && worst.1 <= 1e-6,
        format!("max |mean - y| {:.2e}, max std {:.2e}", worst.0, worst.1),
    )
}

/// Inverse and log-determinant by Gauss-Jordan elimination with partial
/// pivoting.
fn dense_inverse(a: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n).map(|i| f64::from(u8::from(i / n == i % n))).collect();
    let mut ln_det = 0.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs())).unwrap();
        if piv != c {
            for j in 0..n {
                m.swap(c * n + j, piv * n + j);
                inv.swap(c * n + j, piv * n + j);
            }
        }
        let d = m[c * n + c];
        ln_det += d.abs().ln();
        for j in 0..n {
            m[c * n + j] /= d;
            inv[c * n + j] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = m[i * n + c];
                for j in 0..n {
                    m[i * n + j] -= f * m[c * n + j];
                    inv[i * n + j] -= f * inv[c * n + j];
                }
            }
        }
    }
    (inv, ln_det)
}

/// Dense-inverse negative log-likelihood and the 1-norm condition number of
/// the correlation matrix.
fn brute_neg_ln_like(x: &[Vec<f64>], y: &[f64], theta: &[f64], p: f64, lambda: f64) -> (f64, f64) {
    let n = x.len();
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..x[i].len())
                .map(|d| 10f64.powf(theta[d]) * (x[i][d] - x[j][d]).abs().powf(p))
                .sum();
            r[i * n + j] = (-s).exp();
        }
        r[i * n + i] = 1.0 + lambda + JITTER_START;
    }
    let (inv, ln_det) = dense_inverse(&r, n);
    let norm1 = |m: &[f64]| (0..n).map(|j| (0..n).map(|i| m[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm1(&r) * norm1(&inv);
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| inv[i * n + j] * v[j]).sum()).collect() };
    let ri1 = apply(&vec![1.0; n]);
    let riy = apply(y);
    let mu = riy.iter().sum::<f64>() / ri1.iter().sum::<f64>();
    let res: Vec<f64> = y.iter().map(|v| v - mu).collect();
    let rr = apply(&res);
    let sigma2 = res.iter().zip(&rr).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    (0.5 * n as f64 * sigma2.ln() + 0.5 * ln_det, cond)
}

/// Instances whose correlation matrix has a condition number above this are
/// redrawn: beyond it double precision cannot resolve the likelihood to
/// 1e-8 with any factorization.
const MAX_CONDITION: f64 = 1e8;

fn likelihood_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let (mut accepted, mut redrawn) = (0, 0);
    let mut case = 0u64;
    while accepted < 100 {
        case += 1;
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..=3);
        let x = lhd(n, &vec![0.0; k], &vec![1.0; k], 1000 + case).unwrap().points;
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let theta: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.5)).collect();
        let p = if case.is_multiple_of(2) { 2.0 } else { rng.random_range(1.0..2.0) };
        let lambda = if case.is_multiple_of(3) { 10f64.powf(rng.random_range(-6.0..-1.0)) } else { 0.0 };
        let (oracle, cond) = brute_neg_ln_like(&x, &y, &theta, p, lambda);
        if cond > MAX_CONDITION {
            redrawn += 1;
            continue;
        }
        accepted += 1;
        let ours = neg_ln_like(&x, &y, &theta, &[p], lambda, &vec![false; k]);
        worst = worst.max((ours - oracle).abs());
    }
    ensure(
        worst <= 1e-8,
        format!("max abs difference {worst:.2e} over 100 instances ({redrawn} redrawn with condition number > 1e8)"),
    )
}

fn lhs_stratification() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.random_range(1..=60);
        let k = rng.random_range(1..=8);
        let seed: u64 = rng.random();
        let lo: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..0.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.5..20.0)).collect();
        let a = lhd(n, &lo, &hi, seed).unwrap().points;
        let b = lhd(n, &lo, &hi, seed).unwrap().points;
        let bits = |m: &Vec<Vec<f64>>| m.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
        if bits(&a) != bits(&b) {
            return Err(format!("n={n} k={k} seed={seed}: not reproducible"));
        }
        for d in 0..k {
            let mut seen = vec![false; n];
            for p in &a {
                let s = (((p[d] - lo[d]) / (hi[d] - lo[d])) * n as f64).floor() as usize;
                if s >= n || seen[s] {
                    return Err(format!("n={n} k={k} seed={seed}: stratum {s} of dim {d} hit twice or out of range"));
                }
                seen[s] = true;
            }
        }
    }
    Ok("1000 triples stratified and reproducible".into())
}

fn ocba_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let m = rng.random_range(2..=10);
        let delta = rng.random_range(1..=50);
        let input = OcbaInput {
            means: (0..m).map(|_| rng.random_range(-5.0..5.0)).collect(),
            variances: (0..m).map(|_| rng.random_range(0.0..4.0)).collect(),
            counts: (0..m).map(|_| rng.random_range(1..=6)).collect(),
            delta,
        };
        let a = allocate(&input).map_err(|e| e.to_string())?;
        if a.iter().sum::<usize>() != delta {
            return Err(format!("allocation {a:?} does not sum to {delta}"));
        }
    }
    // full factorial over separations, variances and counts, best design first
    let gaps = [0.25, 0.5, 1.0, 2.0, 3.0];
    let var_levels = [0.5, 1.0, 2.0, 4.0];
    let count_levels = [2usize, 3, 5];
    let delta = 10;
    let mut worst_gap = 0.0f64;
    let mut instances = 0;
    for (gi, &d1) in gaps.iter().enumerate() {
        for &d2 in &gaps[gi..] {
            for vi in 0..var_levels.len().pow(3) {
                for ci in 0..count_levels.len().pow(3) {
                    let means = vec![0.0, d1, d2];
                    let variances: Vec<f64> = (0..3).map(|d| var_levels[(vi / 4usize.pow(d)) % 4]).collect();
                    let counts: Vec<usize> = (0..3).map(|d| count_levels[(ci / 3usize.pow(d)) % 3]).collect();
                    let total =
                        |extra: &[usize]| -> Vec<usize> { counts.iter().zip(extra).map(|(c, e)| c + e).collect() };
                    let ours = allocate(&OcbaInput {
                        means: means.clone(),
                        variances: variances.clone(),
                        counts: counts.clone(),
                        delta,
                    })
                    .map_err(|e| e.to_string())?;
                    let pcs = approx_pcs(&means, &variances, &total(&ours));
                    let mut best_pcs = f64::MIN;
                    for a in 0..=delta {
                        for b in 0..=delta - a {
                            best_pcs = best_pcs.max(approx_pcs(&means, &variances, &total(&[a, b, delta - a - b])));
                        }
                    }
                    worst_gap = worst_gap.max(best_pcs - pcs);
                    instances += 1;
                }
            }
        }
    }
    ensure(
        worst_gap <= 0.05,
        format!("budget conserved on 1000 inputs; largest PCS gap to brute force {worst_gap:.2e} over {instances} instances"),
    )
}

fn state_json(s: &RunState) -> String {
    StateFile::new(s.clone(), Value::Null).to_json().unwrap()
}

fn determinism_and_resume() -> Check {
    for seed in [1, 2, 3, 4, 5] {
        let cfg = |evals| SpotConfig {
            fun_evals: Some(evals),
            seed,
            ..Default::default()
        };
        let once = run(cfg(25), branin_space(), &analytic(Builtin::Branin)).map_err(|e| e.to_string())?;
        let mut split = run(cfg(10), branin_space(), &analytic(Builtin::Branin)).map_err(|e| e.to_string())?;
        let text = state_json(&split);
        split = StateFile::from_json(&text).map_err(|e| e.to_string())?.state;
        split.extend_budget(Some(15), None).map_err(|e| e.to_string())?;
        split.advance(&analytic(Builtin::Branin), &mut ()).map_err(|e| e.to_string())?;
        if state_json(&once) != state_json(&split) {
            return Err(format!("seed {seed}: run(25) and run(10) + resume(15) differ"));
        }
    }
    let in_pool = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cfg = SpotConfig {
                fun_evals: Some(16),
                n_points: 3,
                ..Default::default()
            };
            state_json(&run(cfg, branin_space(), &analytic(Builtin::Branin)).unwrap())
        })
    };
    ensure(
        in_pool(1) == in_pool(4),
        "resume identical for 5 seeds; 1 vs 4 worker threads identical".into(),
    )
}

fn transforms_and_table() -> Check {
    let v = VariableSpec::int("batch_size", 4.0, 5.0).with_transform(Transform::Power2Int);
    let (a, b) = (v.transform_value(5.0).unwrap(), v.transform_value(4.0).unwrap());
    let space = SearchSpace::new(vec![VariableSpec::num("x0", -1.0, 1.0)]).unwrap();
    let table = design_table(&space, None, None).map_err(|e| e.to_string())?;
    let header = table.lines().next().unwrap_or_default().to_string();
    let header_ok = header.split_whitespace().collect::<Vec<_>>().join(" ")
        == "| name | type | default | lower | upper | transform |";
    ensure(
        a == NaturalValue::Int(32) && b == NaturalValue::Int(16) && header_ok,
        format!("2^5 -> {a}, 2^4 -> {b}, header {header:?}"),
    )
}

struct FirstCoordinateSquared;

impl Objective for FirstCoordinateSquared {
    fn name(&self) -> &str {
        "x0_squared"
    }

    fn evaluate(&self, x: &[NaturalValue], _index: u64) -> Result<f64, ObjectiveError> {
        x[0].as_f64().map(|v| v * v).ok_or_else(|| ObjectiveError::NonNumeric(self.name().into()))
    }
}

fn anisotropy() -> Check {
    let cfg = SpotConfig {
        fun_evals: Some(20),
        surrogate: KrigingConfig {
            n_theta: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let space = || SearchSpace::numeric_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let sym = run(cfg.clone(), space(), &analytic(Builtin::Sphere)).map_err(|e| e.to_string())?;
    let theta = sym.model.as_ref().unwrap().theta().to_vec();
    let imp = importance(&sym).map_err(|e| e.to_string())?;
    let inert = run(cfg, space(), &FirstCoordinateSquared).map_err(|e| e.to_string())?;
    let imp_inert = importance(&inert).map_err(|e| e.to_string())?;
    ensure(
        theta.len() == 2 && imp.iter().all(|v| *v >= 50.0) && imp_inert[1] < 20.0,
        format!("sphere theta {theta:.4?} importance {imp:.1?}; inert x1 importance {imp_inert:.1?}"),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("branin convergence", branin_convergence),
        ("1-d sphere convergence", sphere_convergence),
        ("branin minima", branin_minima),
        ("schonlau fit", schonlau_fit),
        ("nugget dominance", nugget_dominance),
        ("NaN handling", nan_handling),
        ("interpolation and EI", interpolation_suite),
        ("likelihood oracle", likelihood_oracle),
        ("LHS stratification", lhs_stratification),
        ("OCBA", ocba_checks),
        ("determinism and resume", determinism_and_resume),
        ("transforms and design table", transforms_and_table),
        ("anisotropy", anisotropy),
    ];
    // optional positional arguments select criteria by number
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
