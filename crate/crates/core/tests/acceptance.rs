//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use mgdm::channel::CrosstalkSpec;
use mgdm::config::RunConfig;
use mgdm::experiment::{run_four_channel, run_single_channel, Experiment, Link};
use mgdm::fec::{binomial_upper_tail, net_bit_rate, post_fec_bound, FecSpec};
use mgdm::field::{gram_matrix, FieldGrid};
use mgdm::modes::{
    enumerate_group, group_delay, group_propagation_constant, propagation_constant, propagation_constant_at, FiberSpec,
    LpMode, ModeBasis,
};
use mgdm::mux::MuxSpec;
use mgdm::transceiver::{ook_modulate, photodetect, prbs15, resample_sync, scope_sample, CaptureSpec, TxSpec};
use mgdm::waveform::FieldWaveform;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn lp(label: &str) -> LpMode {
    label.parse().expect("valid mode label")
}

fn mode_group_algebra() -> Check {
    let start = Instant::now();
    let g5 = enumerate_group(5).map_err(|e| e.to_string())?;
    let expected = vec![lp("LP02"), lp("LP21a"), lp("LP21b")];
    ensure!(g5.members() == expected.as_slice(), "MG5 = {:?}", g5.members());
    let sizes: Vec<usize> =
        (3..=6).map(|m| enumerate_group(m).map(|g| g.len())).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure!(sizes == vec![1, 2, 3, 4], "sizes {sizes:?}");
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 1.0, "took {elapsed} s");
    Ok(format!("MG5 = {{LP02, LP21a, LP21b}}, sizes 1,2,3,4, {elapsed:.3} s"))
}

fn degeneracy_identity() -> Check {
    let fiber = FiberSpec::default();
    for m in 3..=8 {
        let group = enumerate_group(m).map_err(|e| e.to_string())?;
        let betas: Vec<u64> = group
            .members()
            .iter()
            .map(|mode| propagation_constant(mode, &fiber).map(f64::to_bits))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure!(betas.windows(2).all(|w| w[0] == w[1]), "MG{m} betas differ");
    }
    let sq = |m: u32| group_propagation_constant(m, &fiber).map(|b| b * b).unwrap();
    let diffs: Vec<f64> = (3..=8).map(|m| sq(m) - sq(m + 1)).collect();
    let worst_diff = diffs.iter().map(|d| (d / diffs[0] - 1.0).abs()).fold(0.0, f64::max);
    ensure!(worst_diff < 1e-12, "beta^2 steps differ by {worst_diff:e}");

    let omega = fiber.angular_frequency();
    let mut worst_tau: f64 = 0.0;
    for m in 3..=8 {
        let h = omega * 1e-5;
        let fd = (propagation_constant_at(m, &fiber, omega + h).unwrap()
            - propagation_constant_at(m, &fiber, omega - h).unwrap())
            / (2.0 * h);
        let tau = group_delay(m, &fiber).map_err(|e| e.to_string())?;
        worst_tau = worst_tau.max((fd / tau - 1.0).abs());
    }
    ensure!(worst_tau < 1e-6, "group delay off by {worst_tau:e}");
    Ok(format!("beta bit-identical within groups, beta^2 step spread {worst_diff:.1e}, delay vs FD {worst_tau:.1e}"))
}

fn field_orthonormality() -> Check {
    let start = Instant::now();
    let fiber = FiberSpec::default();
    let basis = ModeBasis::new(fiber.clone(), &[3, 4, 5, 6]).map_err(|e| e.to_string())?;
    let grid = FieldGrid::for_fiber(&fiber).map_err(|e| e.to_string())?;
    let gram = gram_matrix(&basis, &grid).map_err(|e| e.to_string())?;
    let n = basis.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(worst < 1e-6, "max |G - I| = {worst:e}");
    ensure!(elapsed < 10.0, "took {elapsed} s");
    Ok(format!("{n}x{n} Gram matrix, max |G - I| = {worst:.1e}, {elapsed:.2} s"))
}

fn bit_accounting() -> Check {
    let tx = TxSpec::default();
    let bits = prbs15(tx.prbs_seed).map_err(|e| e.to_string())?;
    let field = ook_modulate(&bits, &tx);
    let mut counts = Vec::new();
    for (rate, expected) in [(80e9, 327_670usize), (40e9, 688_107usize)] {
        let cap = CaptureSpec::new(rate);
        let electrical = photodetect(&field, &cap, 1);
        let capture = scope_sample(&electrical, &cap).map_err(|e| e.to_string())?;
        ensure!(capture.samples.len() == 1_048_576, "capture length {}", capture.samples.len());
        let sync = resample_sync(&capture, &tx, &cap, &bits).map_err(|e| e.to_string())?;
        ensure!(sync.soft.len() == expected, "{} GSa/s gave {} bits", rate / 1e9, sync.soft.len());
        counts.push(sync.soft.len());
    }
    Ok(format!("80 GSa/s -> {} bits, 40 GSa/s -> {} bits", counts[0], counts[1]))
}

fn error_free_single_channel() -> Check {
    let start = Instant::now();
    let mut config = RunConfig::default();
    config.crosstalk = CrosstalkSpec::none();
    config.mux = MuxSpec::ideal(config.mux.ports.clone());
    config.capture.electrical_noise_sigma = 0.0;
    let out = run_single_channel(&config).map_err(|e| e.to_string())?;
    for c in &out.statistics.channels {
        let errors: usize = c.reports.iter().map(|r| r.error_count).sum();
        ensure!(c.reports.len() == 20, "MG{}: {} sequences", c.channel, c.reports.len());
        ensure!(c.reports.iter().all(|r| r.bits_compared == 327_670), "MG{}: wrong bit count", c.channel);
        ensure!(errors == 0, "MG{}: {errors} errors", c.channel);
    }
    let groups: Vec<u32> = out.statistics.channels.iter().map(|c| c.channel).collect();
    ensure!(groups == vec![3, 4, 5, 6], "channels {groups:?}");
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(elapsed < 300.0, "took {elapsed} s");
    Ok(format!("0 errors on 20 x 327670 bits for MG3..MG6, {elapsed:.1} s"))
}

fn crosstalk_behavior() -> Check {
    let config = RunConfig::default();
    let out = run_four_channel(&config).map_err(|e| e.to_string())?;
    let stats = &out.statistics;

    let spanning: Vec<u32> = stats
        .channels
        .iter()
        .filter(|c| {
            let min = c.ber_trace.iter().copied().fold(f64::INFINITY, f64::min);
            let max = c.ber_trace.iter().copied().fold(0.0, f64::max);
            c.reports.len() == 30 && min < 1.5e-6 && max > 5e-4
        })
        .map(|c| c.channel)
        .collect();
    ensure!(!spanning.is_empty(), "no channel spans 1.5e-6 .. 5e-4");

    let (mut tested, mut passed) = (0, 0);
    for c in &stats.channels {
        for (r, p) in c.reports.iter().zip(&c.uniformity_p) {
            if r.error_count >= 50 {
                tested += 1;
                if p.is_some_and(|p| p >= 0.01) {
                    passed += 1;
                }
            }
        }
    }
    ensure!(tested > 0, "no sequence with >= 50 errors");
    ensure!(passed as f64 >= 0.9 * tested as f64, "uniformity passed {passed}/{tested}");

    // re-run the worst block of the first spanning channel
    let channel = stats.channel(spanning[0]).expect("channel present");
    let worst = channel.reports.iter().max_by_key(|r| r.error_count).expect("reports");
    let link = Link::new(&config, Experiment::FourChannel).map_err(|e| e.to_string())?;
    let position = config.channels.iter().position(|&c| c == spanning[0]).expect("configured");
    for _ in 0..2 {
        let rerun = link.run_sequence(Experiment::FourChannel, worst.sequence_index).map_err(|e| e.to_string())?;
        ensure!(
            rerun[position].report.error_positions == worst.error_positions,
            "block {} changed its error pattern",
            worst.sequence_index
        );
    }
    Ok(format!(
        "spanning channels {:?}, uniformity {passed}/{tested}, block {} of MG{} re-run with identical {} errors",
        spanning.iter().map(|c| format!("MG{c}")).collect::<Vec<_>>(),
        worst.sequence_index,
        spanning[0],
        worst.error_count
    ))
}

fn square_law_invariance() -> Check {
    let tx = TxSpec::default();
    let bits = prbs15(tx.prbs_seed).map_err(|e| e.to_string())?;
    let field = ook_modulate(&bits[..2048], &tx);
    let field = FieldWaveform::new(
        field.rate,
        field.samples.iter().enumerate().map(|(i, e)| e * Complex64::from_polar(1.0, 0.37 * i as f64)).collect(),
    );
    let cap = CaptureSpec { electrical_noise_sigma: 0.05, ..CaptureSpec::new(80e9) };
    let base = photodetect(&field, &cap, 42);
    let rotate = |phase: Complex64| FieldWaveform::new(field.rate, field.samples.iter().map(|e| e * phase).collect());
    // quarter turns are exact in floating point, so the output must be too
    for phase in [Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
        let out = photodetect(&rotate(phase), &cap, 42);
        ensure!(out.samples == base.samples, "output changed under rotation by {phase}");
    }
    let mut worst: f64 = 0.0;
    for k in 1..16 {
        let out = photodetect(&rotate(Complex64::from_polar(1.0, 0.4 * k as f64)), &cap, 42);
        for ((a, b), e) in out.samples.iter().zip(&base.samples).zip(&field.samples) {
            worst = worst.max((a - b).abs() / (e.norm_sqr() + b.abs()));
        }
    }
    ensure!(worst <= 8.0 * f64::EPSILON, "arbitrary rotation differs by {worst:e}");
    Ok(format!("bit-exact for quarter turns, within {:.1} ulp for arbitrary phases", worst / f64::EPSILON))
}

fn exact_tail(n: u32, t: u32, p: f64) -> f64 {
    let p = BigRational::from_float(p).expect("finite");
    let q = BigRational::one() - &p;
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for i in 0..=n {
        if i > t {
            let mut term = BigRational::from_integer(binom.clone());
            for _ in 0..i {
                term *= &p;
            }
            for _ in 0..(n - i) {
                term *= &q;
            }
            total += term;
        }
        binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    total.to_f64().expect("representable")
}

fn fec_claim() -> Check {
    let mut elapsed = 0.0;
    let start = Instant::now();
    let bound =
        post_fec_bound(1e-3, &FecSpec::new(1023, 911, 10).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    elapsed += start.elapsed().as_secs_f64();
    ensure!(bound < 1e-12, "bound {bound:e}");
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [7u32, 15, 23, 31] {
        for t in 1..n / 2 {
            for p in [1e-4, 3e-3, 0.01, 0.1, 0.25, 0.5] {
                let exact = exact_tail(n, t, p);
                let start = Instant::now();
                let got = binomial_upper_tail(n, t, p);
                elapsed += start.elapsed().as_secs_f64();
                if exact > 0.0 {
                    worst = worst.max((got / exact - 1.0).abs());
                }
                cases += 1;
            }
        }
    }
    ensure!(worst < 5e-12, "log-domain tail off by {worst:e}");
    ensure!(elapsed < 1.0, "took {elapsed} s");
    Ok(format!("bound {bound:.2e} < 1e-12, {cases} exact cases within {worst:.1e}, {elapsed:.3} s"))
}

fn rate_arithmetic() -> Check {
    let net = net_bit_rate(4, 28e9, 0.12);
    ensure!(net == 100e9, "net rate {net}");
    let gross = 4.0 * 28e9;
    ensure!(gross == 112e9 && net_bit_rate(4, 28e9, 0.0) == 112e9, "gross rate {gross}");
    Ok("net 100 Gbit/s, gross 112 Gbit/s".into())
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = RunConfig { sequences: Some(2), ..RunConfig::default() };
    config.capture.total_samples = 262_144;
    let config_path = tmp.path().join("config.json");
    std::fs::write(&config_path, config.to_json()).map_err(|e| e.to_string())?;
    let cfg = config_path.to_str().expect("utf-8 path");

    let commands: Vec<(&str, Vec<&str>, bool)> = vec![
        ("default-config", vec!["default-config"], false),
        ("modes", vec!["modes", "-c", cfg], false),
        ("fec-budget", vec!["fec-budget", "-c", cfg], false),
        ("run-single", vec!["run-single", "-c", cfg, "-o"], true),
        ("run-four", vec!["run-four", "-c", cfg, "-o"], true),
        ("sweep-xt", vec!["sweep-xt", "-c", cfg, "--grid=-inf,-20,-14"], false),
        ("eye", vec!["eye", "-c", cfg, "--four", "--bits", "512", "-o"], true),
    ];
    let mut checked = Vec::new();
    for (name, args, takes_out) in commands {
        let mut results = Vec::new();
        for (run, threads) in [(0, "1"), (1, "4")] {
            let out_dir = tmp.path().join(format!("{name}-{run}"));
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_mgdm"));
            cmd.args(&args).env("RAYON_NUM_THREADS", threads);
            if takes_out {
                let target = if name == "eye" { out_dir.join("eye.csv") } else { out_dir.clone() };
                cmd.arg(target);
            }
            let output = cmd.output().map_err(|e| e.to_string())?;
            ensure!(output.status.success(), "{name} failed: {}", String::from_utf8_lossy(&output.stderr));
            results.push((output.stdout, outputs(&out_dir)));
        }
        ensure!(results[0] == results[1], "{name} output differs between runs");
        ensure!(!results[0].0.is_empty() || !results[0].1.is_empty(), "{name} produced nothing");
        checked.push(name);
    }
    Ok(format!("byte-identical across 1 and 4 worker threads: {}", checked.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("mode-group algebra", mode_group_algebra),
        ("degeneracy identity", degeneracy_identity),
        ("field orthonormality", field_orthonormality),
        ("bit accounting", bit_accounting),
        ("error-free single-channel run", error_free_single_channel),
        ("crosstalk behavior", crosstalk_behavior),
        ("square-law invariance", square_law_invariance),
        ("FEC claim", fec_claim),
        ("rate arithmetic", rate_arithmetic),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
