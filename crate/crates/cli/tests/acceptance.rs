//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;

use num_bigint::BigUint;
use qkd_cli::{scenario_series, series_rows, CsvRow, Series};
use qkd_core::hashing::{
    family_size, pa_hash, wc_index_length, wc_tag, AuthKeyIndex, PAHashParams,
};
use qkd_core::loadmodel::load_budget;
use qkd_core::params::{load_config, SystemConfigF64};
use qkd_core::photonics::{expected_sift_stats, psi_geq1, psi_geq2, transmission_probability};
use qkd_core::protocol::reconcile::bisect_batch;
use qkd_core::protocol::transcript::{ParityKind, ParityLink};
use qkd_core::protocol::{
    run_session, run_session_with, sift, simulate_quantum_exchange, stream_rng, SessionOptions,
    SessionOutcome,
};
use qkd_core::secrecy::{nu_max, secrecy_bounds_report};
use qkd_core::{AttackScenario, BitString, LeakageModel, SourceKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn reference() -> SystemConfigF64 {
    load_config(configs_dir().join("reference.cfg")).expect("reference config")
}

fn check(ok: bool, what: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn within_sigma(got: f64, mean: f64, sigma: f64, k: f64) -> bool {
    (got - mean).abs() <= k * sigma
}

// 1 ------------------------------------------------------------------------

fn load_model() -> Outcome {
    let c = load_config(configs_dir().join("load_reference.cfg")).map_err(|e| e.to_string())?;
    let (load, rate) = load_budget(&c).map_err(|e| e.to_string())?;
    check(
        rel(load.quadratic_term, 4.4922e8) <= 1e-3,
        format!("quadratic {}", load.quadratic_term),
    )?;
    check(
        rel(load.total_lb, 1.1e9) <= 0.15,
        format!("total {}", load.total_lb),
    )?;
    check(rel(rate, 5.6e10) <= 0.05, format!("rate {rate}"))?;
    Ok(format!(
        "quadratic {:.5e}, total {:.4e}, rate {:.4e} ops/s",
        load.quadratic_term, load.total_lb, rate
    ))
}

// 2 ------------------------------------------------------------------------

/// P(k >= min) for a Poisson(x) count, by direct series summation.
fn poisson_tail_series(min: u32, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut below = 0.0;
    for k in 0..min {
        below += term;
        term *= x / (k + 1) as f64;
    }
    if x > 20.0 {
        return 1.0 - below;
    }
    // Summing the tail directly keeps precision for small x.
    let mut tail = 0.0;
    let mut k = min;
    loop {
        tail += term;
        k += 1;
        term *= x / k as f64;
        if term < 1e-20 * tail || k > 10_000 {
            return tail;
        }
    }
}

/// ln 2 from the series sum 1/(k 2^k).
fn ln2_series() -> f64 {
    (1..80).map(|k| 1.0 / (k as f64 * 2f64.powi(k))).sum()
}

/// Smallest integer N with N >= 4k(g + log2 k), decided in exact integer
/// arithmetic: 2^(N - 4kg) >= k^(4k).
fn index_length_oracle(g: u64, k: u64) -> u64 {
    let rhs = BigUint::from(k).pow((4 * k) as u32);
    let mut n = 4 * k * g;
    while BigUint::from(1u8) << (n - 4 * k * g) < rhs {
        n += 1;
    }
    n
}

fn formula_oracles() -> Outcome {
    let mut c = SystemConfigF64::default();
    for (l, a, kappa, want) in [
        (0.0, 0.3, 0.0, 1.0),
        (10.0, 0.3, 5.0, 0.158489),
        (50.0, 0.2, 5.0, 0.0316228),
    ] {
        c.channel.fiber_length_km = l;
        c.channel.attenuation_a = a;
        c.channel.bulk_loss_kappa = kappa;
        let got = transmission_probability(&c.channel);
        let oracle = (-(a * l + kappa) / 10.0 * std::f64::consts::LN_10).exp();
        check(
            (got - want).abs() <= 1e-6,
            format!("alpha({l},{a},{kappa}) = {got}"),
        )?;
        check(
            rel(got, oracle) <= 1e-14,
            format!("alpha oracle {got} vs {oracle}"),
        )?;
    }

    check(
        (psi_geq1(0.1f64) - 0.0951626).abs() <= 1e-7,
        "psi1(0.1)".into(),
    )?;
    check(
        (psi_geq2(0.1f64) - 0.0046788).abs() <= 1e-7,
        "psi2(0.1)".into(),
    )?;
    let mut worst: f64 = 0.0;
    for i in 0..=400 {
        let x = 1e-6 * 1.05f64.powi(i);
        for (k, f) in [(1, psi_geq1 as fn(f64) -> f64), (2, psi_geq2)] {
            let oracle = poisson_tail_series(k, x);
            worst = worst.max(rel(f(x), oracle));
        }
    }
    check(
        worst <= 1e-10,
        format!("psi worst relative error {worst:e}"),
    )?;

    for (g, cc, want) in [(30, 1u64 << 16, 2176), (30, 1 << 20, 2746)] {
        check(wc_index_length(g, cc) == Ok(want), format!("w({g}, {cc})"))?;
    }
    for k in 2..=40u64 {
        for g in [1u64, 2, 8, 30, 64] {
            let got = wc_index_length(g as u32, 1 << k).map_err(|e| e.to_string())?;
            let want = index_length_oracle(g, k);
            check(got == want, format!("w({g}, 2^{k}) = {got}, exact {want}"))?;
        }
    }

    let sec = SystemConfigF64::default().security;
    let bound = secrecy_bounds_report(&sec, 1000).eve_information_bound;
    let oracle = 1.0 / (2f64.powi(sec.g_pa as i32) * ln2_series());
    check(
        rel(bound, oracle) <= 1e-12,
        format!("2^-g/ln2 = {bound:e} vs {oracle:e}"),
    )?;
    Ok(format!(
        "psi worst rel err {worst:.1e}, w(g,2^k) exact for k=2..40, <I> bound {bound:.6e}"
    ))
}

// 3 ------------------------------------------------------------------------

fn nu_asymptotics() -> Outcome {
    let c = reference();
    let m = c.block.raw_block_m as f64;
    let mut lines = Vec::new();
    for scenario in [
        AttackScenario::AttenuationIntact,
        AttackScenario::AttenuationEliminated,
    ] {
        let y = match scenario {
            AttackScenario::AttenuationIntact => c.detector.efficiency_eta * c.alpha(),
            AttackScenario::AttenuationEliminated => c.detector.efficiency_eta,
        };
        let mut worst: f64 = 0.0;
        for mu in [1e-3, 5e-4, 1e-4, 1e-5] {
            let nu = nu_max(mu, &c, scenario).map_err(|e| e.to_string())?.nu;
            let series = m / 2.0 * y * mu * mu / 2.0;
            worst = worst.max(rel(nu, series));
        }
        check(
            worst <= 0.05,
            format!("{scenario:?}: worst deviation {worst}"),
        )?;
        let zero = nu_max(0.0, &c, scenario).map_err(|e| e.to_string())?.nu;
        check(
            zero.abs() <= 1e-12 * m,
            format!("{scenario:?}: nu(0) = {zero}"),
        )?;
        let mut prev = zero;
        for i in 1..=100 {
            let nu = nu_max(i as f64 * 0.01, &c, scenario)
                .map_err(|e| e.to_string())?
                .nu;
            check(
                nu >= prev,
                format!("{scenario:?}: not monotone at mu = {}", i as f64 * 0.01),
            )?;
            prev = nu;
        }
        lines.push(format!("{scenario:?} worst {worst:.2e}"));
    }
    Ok(lines.join(", "))
}

// 4 ------------------------------------------------------------------------

fn protocol_correctness() -> Outcome {
    let mut c = reference();
    c.block.raw_block_m = 1 << 22;
    let model = LeakageModel::from_security(&c.security);
    let (mut passed, mut qber) = (0, 0.0);
    for seed in 0..1000 {
        let r = run_session(&c, AttackScenario::AttenuationIntact, &model, seed)
            .map_err(|e| e.to_string())?;
        qber += r.qber_observed;
        if r.equivalence_passed {
            passed += 1;
            check(
                r.final_key_alice == r.final_key_bob,
                format!("seed {seed}: keys differ"),
            )?;
        }
    }

    for k in 1..=20 {
        let len = 1usize << k;
        let mut rng = stream_rng(k as u64, 40);
        let a = BitString::random(len, &mut rng);
        let mut b = a.clone();
        let pos = (k * 7919 + 13) % len;
        b.flip(pos);
        let mut link = ParityLink::default();
        let found = bisect_batch(&a, &mut b, &[(0, len)], ParityKind::Bisection, &mut link);
        check(
            found == vec![pos] && link.sent_by_alice.bisection == k as u64,
            format!("block 2^{k}: {} comparisons", link.sent_by_alice.bisection),
        )?;
    }

    let mut small = reference();
    small.source.kind = SourceKind::SinglePhoton;
    small.channel.fiber_length_km = 0.0;
    small.channel.bulk_loss_kappa = 0.0;
    small.detector.efficiency_eta = 1.0;
    small.detector.dark_count_rd = 0.0;
    small.channel.intrinsic_error_rc = 0.0;
    small.block.raw_block_m = 1 << 10;
    small.security.g_ec = 8;
    let model = LeakageModel::from_security(&small.security);
    let trials = 100_000u64;
    let opts = SessionOptions {
        force_residual_error: true,
    };
    let mut missed = 0u64;
    for seed in 0..trials {
        let r = run_session_with(
            &small,
            AttackScenario::AttenuationIntact,
            &model,
            seed,
            opts,
        )
        .map_err(|e| e.to_string())?;
        check(
            r.residual_errors == 1,
            format!("seed {seed}: residual {}", r.residual_errors),
        )?;
        missed += r.equivalence_passed as u64;
    }
    let p = 2f64.powi(-8);
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    check(
        within_sigma(missed as f64, trials as f64 * p, sigma, 3.0),
        format!(
            "{missed} misses in {trials}, expected {:.1} ± {:.1}",
            trials as f64 * p,
            3.0 * sigma
        ),
    )?;
    Ok(format!(
        "{passed}/1000 passed with equal keys (mean QBER {:.4}), bisection k=1..20 exact, miss rate {missed}/{trials}",
        qber / 1000.0
    ))
}

// 5 ------------------------------------------------------------------------

fn hash_properties() -> Outcome {
    // Every (a, b) member for every pair of distinct 8-bit inputs.
    let (n, out) = (8usize, 3usize);
    let mut outputs = vec![[0u8; 256]; 1 << 16];
    for (ab, row) in outputs.iter_mut().enumerate() {
        let p = PAHashParams::new(
            BitString::from_u64((ab >> 8) as u64, n),
            BitString::from_u64((ab & 0xff) as u64, n),
        )
        .map_err(|e| e.to_string())?;
        for (x, slot) in row.iter_mut().enumerate() {
            *slot = pa_hash(&BitString::from_u64(x as u64, n), &p, out)
                .map_err(|e| e.to_string())?
                .to_u64() as u8;
        }
    }
    for x in 0..256 {
        for x2 in (x + 1)..256 {
            let hits = outputs.iter().filter(|row| row[x] == row[x2]).count();
            check(
                hits == 1 << (2 * n - out),
                format!("pair ({x}, {x2}): {hits} collisions"),
            )?;
        }
    }

    // Substitution forgery at (c = 16, g = 2): for each message pair and
    // each observed tag, the best forged tag over all function indices.
    let (g, c) = (2u32, 16u64);
    let len = wc_index_length(g, c).map_err(|e| e.to_string())? as usize;
    let messages: Vec<BitString> = (0..16u64)
        .map(|i| BitString::from_u64(i * 4099 + 1, 16))
        .collect();
    let mut worst: f64 = 0.0;
    let mut rng = stream_rng(5, 41);
    let tag = |m: &BitString, key: &BitString| -> Result<u64, String> {
        let mut idx = AuthKeyIndex::new(g, c, key.clone()).map_err(|e| e.to_string())?;
        Ok(wc_tag(m, &mut idx, g)
            .map_err(|e| e.to_string())?
            .bits
            .to_u64())
    };
    for (i, m) in messages.iter().enumerate() {
        let m2 = &messages[(i + 1) % messages.len()];
        // Joint tag counts over the 2^16 keys that vary the multiplier and
        // output mask, with the remaining index bits fixed at random.
        let tail = BitString::random(len - 16, &mut rng);
        let mut joint = [[0u64; 4]; 4];
        for k in 0..1u64 << 16 {
            let mut key = BitString::from_u64(k, 16);
            key.extend_from(&tail);
            joint[tag(m, &key)? as usize][tag(m2, &key)? as usize] += 1;
        }
        for row in joint {
            let seen: u64 = row.iter().sum();
            if seen > 0 {
                worst = worst.max(*row.iter().max().unwrap() as f64 / seen as f64);
            }
        }
    }
    let bound = 2f64.powi(1 - g as i32);
    check(worst <= bound, format!("forgery {worst} > {bound}"))?;

    let msg = BitString::random(64, &mut rng);
    let mut idx = AuthKeyIndex::random(30, family_size(64), &mut rng).map_err(|e| e.to_string())?;
    check(wc_tag(&msg, &mut idx, 30).is_ok(), "first use".into())?;
    check(
        idx.is_consumed() && wc_tag(&msg, &mut idx, 30).is_err(),
        "index reuse accepted".into(),
    )?;
    Ok(format!(
        "pa collisions exactly 2^-3, worst forgery {worst} <= {bound}, reuse rejected"
    ))
}

// 6 ------------------------------------------------------------------------

fn monte_carlo() -> Outcome {
    let mut c = reference();
    c.block.raw_block_m = 1 << 22;
    let m = c.block.raw_block_m as f64;
    let record = simulate_quantum_exchange(&c, 2024);
    let p_det =
        psi_geq1(c.detector.efficiency_eta * c.alpha() * c.source.mu) + c.detector.dark_count_rd;
    let det = record.detections.len() as f64;
    check(
        within_sigma(det, m * p_det, (m * p_det * (1.0 - p_det)).sqrt(), 3.0),
        format!("detections {det} vs {}", m * p_det),
    )?;
    let sifted = sift(&record).alice.len() as f64;
    let p_sift = expected_sift_stats(&c).expected_sifted_n / m;
    check(
        within_sigma(
            sifted,
            m * p_sift,
            (m * p_sift * (1.0 - p_sift)).sqrt(),
            3.0,
        ),
        format!("sifted {sifted} vs {}", m * p_sift),
    )?;

    let mut eve =
        load_config(configs_dir().join("intercept_resend.cfg")).map_err(|e| e.to_string())?;
    eve.block.raw_block_m = 1 << 20;
    let model = LeakageModel::from_security(&eve.security);
    let r = run_session(&eve, AttackScenario::AttenuationIntact, &model, 3)
        .map_err(|e| e.to_string())?;
    let k = r.qber_sample_n as f64;
    check(
        within_sigma(r.qber_observed, 0.25, (0.25 * 0.75 / k).sqrt(), 3.0),
        format!("intercept-resend QBER {} over {k} bits", r.qber_observed),
    )?;
    check(
        r.outcome == SessionOutcome::QberAbort,
        format!("outcome {:?}", r.outcome),
    )?;
    Ok(format!(
        "detections {det} (expected {:.0}), sifted {sifted} (expected {:.0}), intercept-resend QBER {:.4} aborted",
        m * p_det,
        m * p_sift,
        r.qber_observed
    ))
}

// 7 ------------------------------------------------------------------------

fn rows_for(series: &Series, grid: &[f64]) -> Result<Vec<CsvRow>, String> {
    series_rows(series, grid).map_err(|e| e.to_string())
}

fn find<'a>(all: &'a [Series], system: &str, prf: f64) -> &'a Series {
    all.iter()
        .find(|s| s.system == system && s.prf_hz == prf)
        .expect("preset series")
}

fn rate_at(series: &Series, l_km: f64) -> Result<f64, String> {
    Ok(rows_for(series, &[l_km])?[0].r_bps)
}

/// Distances where the sign of `a - b` changes, ignoring points where both
/// rates vanish.
fn crossings(a: &[CsvRow], b: &[CsvRow]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (x, y) in a.iter().zip(b) {
        let d = x.r_bps - y.r_bps;
        if d == 0.0 {
            continue;
        }
        if let Some((l, pd)) = prev {
            if pd.signum() != d.signum() {
                out.push((l + x.l_km) / 2.0);
            }
        }
        prev = Some((x.l_km, d));
    }
    out
}

fn scenarios() -> Outcome {
    let base = reference();
    let grid: Vec<f64> = (0..=120).map(|i| i as f64 * 0.5).collect();
    let s1 = scenario_series(1, &base).map_err(|e| e.to_string())?;
    let s2 = scenario_series(2, &base).map_err(|e| e.to_string())?;
    let s3 = scenario_series(3, &base).map_err(|e| e.to_string())?;

    for (name, all) in [("1", &s1), ("2", &s2)] {
        let sps = rows_for(find(all, "SPS", 1e6), &grid)?;
        let wcs = rows_for(find(all, "WCS", 1e6), &grid)?;
        for (a, b) in sps.iter().zip(&wcs) {
            check(
                a.s > b.s,
                format!(
                    "(a) scenario {name} at {} km: S_SPS {} <= S_WCS {}",
                    a.l_km, a.s, b.s
                ),
            )?;
        }
    }

    let upto56: Vec<f64> = grid.iter().copied().filter(|&l| l <= 56.0).collect();
    let x1 = crossings(
        &rows_for(find(&s1, "WCS", 1e6), &upto56)?,
        &rows_for(find(&s1, "SPS", 5e3), &upto56)?,
    );
    check(x1.is_empty(), format!("(b) scenario 1 crossings at {x1:?}"))?;

    let x2 = crossings(
        &rows_for(find(&s2, "WCS", 1e6), &grid)?,
        &rows_for(find(&s2, "SPS", 5e3), &grid)?,
    );
    check(
        x2.len() == 1 && (20.0..=46.0).contains(&x2[0]),
        format!("(c) scenario 2 crossings at {x2:?}"),
    )?;

    let a03 = find(&s3, "SPS-A0.3", 5e3);
    let a02 = find(&s3, "SPS-A0.2", 5e3);
    let reference_rates = [
        (
            "S1 WCS 1MHz 10km",
            rate_at(find(&s1, "WCS", 1e6), 10.0)?,
            9840.0,
        ),
        (
            "S1 SPS 1MHz 10km",
            rate_at(find(&s1, "SPS", 1e6), 10.0)?,
            32900.0,
        ),
        (
            "S2 WCS 1MHz 10km",
            rate_at(find(&s2, "WCS", 1e6), 10.0)?,
            2130.0,
        ),
        (
            "S2 SPS 1MHz 10km",
            rate_at(find(&s2, "SPS", 1e6), 10.0)?,
            30740.0,
        ),
        ("S3 A0.3 10km", rate_at(a03, 10.0)?, 164.0),
        ("S3 A0.3 25km", rate_at(a03, 25.0)?, 57.9),
        ("S3 A0.2 25km", rate_at(a02, 25.0)?, 103.6),
    ];
    let mut notes = Vec::new();
    for (what, got, want) in reference_rates {
        let factor = if got > 0.0 {
            (got / want).max(want / got)
        } else {
            f64::INFINITY
        };
        check(factor <= 2.0, format!("(d) {what}: {got} bps vs {want}"))?;
        notes.push(format!("{what} {got:.1}/{want}"));
    }

    let gain = 10.0 * (rate_at(a02, 25.0)? / rate_at(a03, 25.0)?).log10();
    check((gain - 2.5).abs() <= 1.0, format!("(e) gain {gain} dB"))?;
    Ok(format!(
        "crossing at {:.2} km, gain {gain:.3} dB; {}",
        x2[0],
        notes.join(", ")
    ))
}

// 8 ------------------------------------------------------------------------

fn run_twice(args: &[&str], outputs: &[&Path]) -> Result<(), String> {
    let mut captured = Vec::new();
    for _ in 0..2 {
        for p in outputs {
            let _ = std::fs::remove_file(p);
        }
        let out = Command::new(env!("CARGO_BIN_EXE_qkd"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for p in outputs {
            files.push(std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?);
        }
        captured.push((out.status.code(), out.stdout, files));
    }
    check(
        captured[0] == captured[1],
        format!("{args:?} differs between runs"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = configs_dir();
    let path = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let reference = s(&cfg.join("reference.cfg"));
    let simulate = s(&cfg.join("simulate.cfg"));
    let load_cfg = s(&cfg.join("load_reference.cfg"));
    let (report, transcript, curve, scen) =
        (path("r.txt"), path("t.tsv"), path("c.csv"), path("s.csv"));

    run_twice(
        &[
            "simulate",
            "--config",
            &simulate,
            "--seed",
            "17",
            "--out",
            &s(&report),
            "--transcript",
            &s(&transcript),
        ],
        &[&report, &transcript],
    )?;
    run_twice(
        &[
            "rate-curve",
            "--config",
            &reference,
            "--scenario",
            "intact",
            "--out",
            &s(&curve),
            "--step",
            "1",
            "--max-km",
            "40",
        ],
        &[&curve],
    )?;
    run_twice(
        &[
            "scenario",
            "2",
            "--config",
            &reference,
            "--out",
            &s(&scen),
            "--step",
            "1",
            "--max-km",
            "50",
        ],
        &[&scen],
    )?;
    run_twice(&["load-budget", "--config", &load_cfg], &[])?;
    let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
    check(
        text.contains("# seed: 17"),
        "manifest missing from report".into(),
    )?;
    Ok("simulate, rate-curve, scenario and load-budget outputs byte-identical across runs".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("load model", load_model),
        ("formula oracles", formula_oracles),
        ("nu_max asymptotics", nu_asymptotics),
        ("protocol correctness", protocol_correctness),
        ("hash properties", hash_properties),
        ("monte-carlo statistics", monte_carlo),
        ("scenarios", scenarios),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {why}", i + 1)
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
