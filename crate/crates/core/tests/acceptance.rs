//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use broadcast_latency::channel::{cdf_z, coop_success_prob_closed_form, coop_success_prob_quadrature};
use broadcast_latency::cli::{self, DEFAULT_SEED};
use broadcast_latency::latency::{
    estimate_enumeration_cost, expected_latency, expected_latency_absorption, latency_distribution_enumeration,
    latency_pmf_enumeration, latency_pmf_markov,
};
use broadcast_latency::point_process::{nearest_distance, nn_ccdf, sample_bpp, DiskWindow};
use broadcast_latency::simulator::{run_batch, run_density_sweep, trial_rng};
use broadcast_latency::special_fn::composition_count;
use broadcast_latency::{NetworkConfig, ProtocolKind, Result};
use rand_distr::{Distribution, Exp1};

const NC: ProtocolKind = ProtocolKind::NonCooperative;
const CO: ProtocolKind = ProtocolKind::Cooperative;
const RADII: [f64; 3] = [1.0, 2.0, 3.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn cfg(n: u32, radius: f64, snr_db: f64) -> NetworkConfig {
    NetworkConfig::with_snr_db(n, radius, 2, 2.0, 1.0, snr_db).expect("valid config")
}

fn snr_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 * f64::from(i)).collect()
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

struct GridPoint {
    radius: f64,
    snr: f64,
    analytic: f64,
    sim: f64,
    se: f64,
}

fn fig2_grid(protocol: ProtocolKind) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for &radius in &RADII {
        for snr in snr_grid() {
            let c = cfg(5, radius, snr);
            let analytic = expected_latency(&c, protocol, 1e-9)?.expected_k;
            let s = run_batch(&c, protocol, 1000, DEFAULT_SEED)?;
            out.push(GridPoint { radius, snr, analytic, sim: s.mean_k, se: s.std_err });
        }
    }
    Ok(out)
}

fn noncooperative_agreement() -> Result<Outcome> {
    let grid = fig2_grid(NC)?;
    let ok = grid.iter().filter(|p| (p.sim - p.analytic).abs() <= 3.0 * p.se).count();
    let worst = grid
        .iter()
        .map(|p| ((p.sim - p.analytic) / p.se, p.radius, p.snr))
        .max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .unwrap();
    outcome(
        ok as f64 >= 0.95 * grid.len() as f64,
        format!(
            "{ok}/{} points within 3 std_err (worst z = {:.2} at R={}, {} dB)",
            grid.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn cooperative_lower_bound() -> Result<Outcome> {
    let grid = fig2_grid(CO)?;
    let violations: Vec<_> = grid
        .iter()
        .filter(|p| p.analytic > p.sim + p.se)
        .map(|p| format!("R={} {}dB", p.radius, p.snr))
        .collect();
    let gaps: Vec<f64> = RADII
        .iter()
        .map(|&r| {
            let pts: Vec<_> = grid.iter().filter(|p| p.radius == r).collect();
            pts.iter().map(|p| p.sim - p.analytic).sum::<f64>() / pts.len() as f64
        })
        .collect();
    let gaps_ok = gaps.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        violations.is_empty() && gaps_ok,
        format!(
            "bound violations: {:?}; mean gap by R = [{:.4}, {:.4}, {:.4}]",
            violations, gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn cooperation_helps() -> Result<Outcome> {
    // 1000 trials cannot resolve gaps of a few hundredths of a slot at high SNR; the
    // criterion fixes no trial count, so it is evaluated at 50000 and 1000 is reported.
    let strict_count = |trials: usize| -> Result<(usize, usize)> {
        let (mut never_worse, mut strict) = (0, 0);
        for snr in snr_grid() {
            let c = cfg(5, 3.0, snr);
            let a = run_batch(&c, NC, trials, DEFAULT_SEED)?;
            let b = run_batch(&c, CO, trials, DEFAULT_SEED)?;
            let pooled = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
            never_worse += usize::from(b.mean_k <= a.mean_k);
            strict += usize::from(a.mean_k - b.mean_k > 2.0 * pooled);
        }
        Ok((never_worse, strict))
    };
    let n = snr_grid().len();
    let (never_worse, strict) = strict_count(50_000)?;
    let (_, strict_small) = strict_count(1000)?;
    outcome(
        never_worse == n && strict as f64 >= 0.8 * n as f64,
        format!(
            "50000 trials: coop <= noncoop at {never_worse}/{n}, strict at {strict}/{n} \
             (1000 trials: strict at {strict_small}/{n})"
        ),
    )
}

fn oracle_equivalence() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (radius, snr) in [(1.0, 0.0), (2.0, 5.0), (3.0, 10.0)] {
        for n in 1..=4 {
            let c = cfg(n, radius, snr);
            for proto in ProtocolKind::ALL {
                let markov = latency_pmf_markov(&c, proto, 6)?;
                for k in 1..=6 {
                    let e = latency_pmf_enumeration(&c, proto, k)?;
                    worst = worst.max((markov.prob(k) - e).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |markov - enumeration| = {worst:.3e}"))
}

fn distribution_correctness() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;

    let n = 1_000_000;
    for (i, (radius, alpha)) in [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0), (2.0, 4.0)].into_iter().enumerate() {
        let c = NetworkConfig::with_snr_db(1, radius, 2, alpha, 1.0, 0.0)?;
        let window = c.window();
        let mut rng = trial_rng(DEFAULT_SEED ^ 0x5a, i);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let r = window.sample_radius(&mut rng);
                let h2: f64 = Exp1.sample(&mut rng);
                h2 / (1.0 + r.powf(alpha))
            })
            .collect();
        let d = ks_statistic(samples, |z| cdf_z(z, &c).expect("cdf"));
        let ok = d < ks_critical_1pct(n);
        pass &= ok;
        lines.push(format!("KS F_Z(R={radius},a={alpha}) D={d:.2e}"));
    }

    let mut worst = 0.0f64;
    for radius in RADII {
        for snr in [0.0, 5.0, 10.0, 20.0] {
            let c = cfg(1, radius, snr);
            for t in 1..=20 {
                let a = coop_success_prob_closed_form(t, &c)?;
                let b = coop_success_prob_quadrature(t, &c)?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    pass &= worst <= 1e-9;
    lines.push(format!("closed form vs quadrature {worst:.1e}"));

    let window = DiskWindow::new(2.0, 2)?;
    let n = 200_000;
    for t in [2u32, 4, 8] {
        let mut rng = trial_rng(DEFAULT_SEED ^ 0xa5, t as usize);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let tx = sample_bpp(t as usize, &window, &mut rng);
                nearest_distance(&[0.0, 0.0], &tx).expect("non-empty")
            })
            .collect();
        let d = ks_statistic(samples, |r| 1.0 - nn_ccdf(r, 1, t, &window).expect("ccdf"));
        let ok = d < ks_critical_1pct(n);
        pass &= ok;
        lines.push(format!("KS nn(T={t}) D={d:.2e}"));
    }
    outcome(pass, lines.join("; "))
}

fn geometric_baseline() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    for (radius, snr) in [(1.0, 0.0), (2.0, 5.0), (3.0, 10.0)] {
        let c = cfg(1, radius, snr);
        let f = cdf_z(c.threshold(), &c)?;
        let target = 1.0 / (1.0 - f);
        // tail of k F^(k-1)(1-F) beyond K' is below 1e-13
        let k_prime = ((1e-16f64).ln() / f.ln()).ceil() as usize + 50;
        for proto in ProtocolKind::ALL {
            let enumerated = latency_distribution_enumeration(&c, proto, k_prime)?.expected_k;
            let dp = expected_latency(&c, proto, 1e-12)?.expected_k;
            let absorbed = expected_latency_absorption(&c, proto)?;
            let err = [enumerated, dp, absorbed].iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
            let sim = run_batch(&c, proto, 100_000, DEFAULT_SEED)?;
            let z = (sim.mean_k - target) / sim.std_err;
            pass &= err <= 1e-9 && z.abs() <= 3.0;
            lines.push(format!("R={radius} {proto}: err={err:.1e} z={z:.2}"));
        }
    }
    outcome(pass, lines.join("; "))
}

fn density_trends() -> Result<Outcome> {
    let radii = [1.0, 1.5, 2.0, 2.5, 3.0];
    let rhos = [0.25, 0.5, 1.0, 2.0];
    let template = cfg(1, 1.0, 5.0);
    let mut nc = Vec::new();
    let mut co = Vec::new();
    for &rho in &rhos {
        let a = run_density_sweep(rho, &radii, &template, NC, 1000, DEFAULT_SEED)?;
        let b = run_density_sweep(rho, &radii, &template, CO, 1000, DEFAULT_SEED)?;
        nc.push(a.iter().map(|p| p.summary.mean_k).collect::<Vec<_>>());
        co.push(b.iter().map(|p| p.summary.mean_k).collect::<Vec<_>>());
    }
    let a_ok = nc.iter().all(|row| row.windows(2).all(|w| w[1] > w[0]));
    let last = radii.len() - 1;
    let b_ok = co[rhos.len() - 1][last] < co[0][last];
    let mut c_bad = Vec::new();
    for (i, &rho) in rhos.iter().enumerate() {
        for (j, &r) in radii.iter().enumerate() {
            if co[i][j] > nc[i][j] {
                c_bad.push(format!("rho={rho},R={r}: {:.3}>{:.3}", co[i][j], nc[i][j]));
            }
        }
    }
    outcome(
        a_ok && b_ok && c_bad.is_empty(),
        format!(
            "(a) noncoop increasing in R: {a_ok}; (b) coop R=3 {:.3} -> {:.3}: {b_ok}; (c) coop > noncoop at {:?}",
            co[0][last],
            co[rhos.len() - 1][last],
            c_bad
        ),
    )
}

/// Number of sequences `(S_1..S_k)` with `S_i >= 0`, `S_k >= 1`, summing to `n`.
fn brute_force_compositions(n: u64, k: u64) -> u128 {
    fn go(remaining: u64, slots: u64) -> u128 {
        if slots == 1 {
            return u128::from(remaining >= 1);
        }
        (0..=remaining).map(|s| go(remaining - s, slots - 1)).sum()
    }
    go(n, k)
}

fn complexity_formula() -> Result<Outcome> {
    let mut pass = true;
    for (n, k, x, expected) in [(1, 1, 10, 10.0), (3, 2, 2, 14.0), (5, 3, 4, 1044.0)] {
        let est = estimate_enumeration_cost(n, k, x)?;
        pass &= est.operations == expected && !est.overflow;
    }
    let mut mismatches = 0;
    for n in 1..=8 {
        for k in 1..=8 {
            if composition_count(n, k)?.exact() != Some(brute_force_compositions(n, k)) {
                mismatches += 1;
            }
        }
    }
    outcome(pass && mismatches == 0, format!("cost examples ok: {pass}; composition mismatches: {mismatches}"))
}

fn cli_determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let commands: [&[&str]; 5] = [
        &["analytic"],
        &["simulate", "--trials", "500"],
        &["compare", "--snr-grid", "0:20:2", "--trials", "500"],
        &["sweep-density", "--trials", "300"],
        &["cost-estimate"],
    ];
    let mut failures = Vec::new();
    for cmd in commands {
        for format in ["csv", "json"] {
            let out = dir.path().join(format!("{}.{format}", cmd[0]));
            let run = || -> Result<Vec<u8>> {
                let mut args = vec!["bcast-latency"];
                args.extend_from_slice(cmd);
                args.extend_from_slice(&["--format", format, "--out", out.to_str().unwrap()]);
                let code = cli::run_from_args(args);
                if code != 0 {
                    return Err(broadcast_latency::Error::Validation(format!("{} exited {code}", cmd[0])));
                }
                Ok(std::fs::read(&out)?)
            };
            let first = run()?;
            let second = run()?;
            if first != second || first.is_empty() {
                failures.push(format!("{} {format}", cmd[0]));
            }
        }
    }
    outcome(failures.is_empty(), format!("5 commands x 2 formats, differing: {failures:?}"))
}

fn roughly_sixteen() -> Result<Outcome> {
    let values = RADII
        .iter()
        .map(|&r| Ok((r, expected_latency(&cfg(10, r, 3.0), NC, 1e-9)?.expected_k)))
        .collect::<Result<Vec<_>>>()?;
    let hits: Vec<f64> = values.iter().filter(|(_, k)| (13.0..=19.0).contains(k)).map(|(r, _)| *r).collect();
    let shown: Vec<String> = values.iter().map(|(r, k)| format!("R={r}: {k:.3}")).collect();
    outcome(!hits.is_empty(), format!("N=10, 3 dB: {}; R in band: {hits:?}", shown.join(", ")))
}

fn main() -> ExitCode {
    type Criterion = fn() -> Result<Outcome>;
    let criteria: [(&str, Criterion); 10] = [
        ("non-cooperative analytic vs simulation", noncooperative_agreement),
        ("cooperative analytic lower bound", cooperative_lower_bound),
        ("cooperative beats non-cooperative at R=3", cooperation_helps),
        ("markov chain equals enumeration", oracle_equivalence),
        ("distribution correctness", distribution_correctness),
        ("geometric baseline N=1", geometric_baseline),
        ("density sweep trends", density_trends),
        ("complexity formula", complexity_formula),
        ("CLI determinism", cli_determinism),
        ("K near 16 for N=10 at 3 dB", roughly_sixteen),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} [{}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
