//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with its measurements (visible with `--nocapture`).
//!
//! Tests serialize on a global gate so wall-clock bounds are measured
//! without cross-test contention; Monte-Carlo parallelism inside each test
//! still uses all cores through rayon.

use std::sync::Mutex;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ura_sim::codebook::SignatureCodebook;
use ura_sim::config::{DetectionPolicy, PowerProfile, SystemConfig};
use ura_sim::detect::{somp, ActiveSet};
use ura_sim::ese::{EseState, MmseFilter};
use ura_sim::ldpc::ParityCheckMatrix;
use ura_sim::linalg::Cholesky;
use ura_sim::phy::{self, encode_user, transmit, UserMessage};
use ura_sim::receiver::{GenieFlags, Receiver, TrialTruth};
use ura_sim::sim::{self, derive_seed, SweepSpec, SweepVariable};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

/// Fixed-seed regression constant for criterion 8: the value returned by
/// the minimum-Eb/N0 bisection on the shipped configuration (Ka=25,
/// reference parameters, target PUPE 0.05, bracket [1.5, 5.5] dB,
/// 500 trials/point, master seed 1), established by a pilot run.
const PINNED_MIN_EBN0_DB: f64 = 2.125;

#[test]
fn criterion_1_noiseless_round_trip() {
    let _g = gate();
    let start = Instant::now();
    // zero-noise channel; the receiver's filter keeps a floor variance via
    // a very high (finite) Eb/N0 so the MMSE system stays positive definite
    let mut cfg = SystemConfig::defaults_for(1);
    cfg.ebn0_db = 60.0;
    cfg.detection = DetectionPolicy::fixed(1);
    cfg.validate().unwrap();
    let code = ParityCheckMatrix::shipped_264_88();
    let trials = 100;
    use rayon::prelude::*;
    let misses: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(1, 0xC1, trial);
            let codebook =
                SignatureCodebook::generate(cfg.n_chips, cfg.codebook_size(), seed);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, 0));
            let msg = UserMessage::random(cfg.b_total, cfg.b_header, &mut rng);
            let encoder = code.encoder().unwrap();
            let frame = encode_user(&msg, &encoder, &cfg.power, cfg.codebook_size());
            let y = transmit(std::slice::from_ref(&frame), &codebook, cfg.n_symbols, 0.0, 0);
            let mut rx = Receiver::new(&cfg, &codebook, code);
            let (list, _) = rx.run(&y, None);
            usize::from(!list.contains_bits(msg.bits()))
        })
        .sum();
    let elapsed = start.elapsed().as_secs_f64();
    let pupe = misses as f64 / trials as f64;
    assert_eq!(pupe, 0.0, "noiseless PUPE must be exactly 0");
    assert!(elapsed < 10.0, "runtime {elapsed:.2}s exceeds 10s");
    println!("[PASS] criterion 1: noiseless round trip, PUPE = 0 over {trials} trials in {elapsed:.2}s");
}

#[test]
fn criterion_2_mmse_filter_identity() {
    let _g = gate();
    let np = 114;
    let codebook = SignatureCodebook::generate(np, 4096, 0xF117);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    let uniform = PowerProfile::uniform();
    let preset = PowerProfile::preset_for(150).unwrap();
    let mut worst_identity: f64 = 0.0;
    for instance in 0..50 {
        let k = rng.random_range(1..=150);
        let mut cols: Vec<usize> = (0..4096).collect();
        cols.shuffle(&mut rng);
        cols.truncate(k);
        let sigma2 = rng.random_range(0.05..2.0);
        let power = if instance % 2 == 0 { &uniform } else { &preset };
        let filter = MmseFilter::build(&cols, &codebook, power, sigma2);
        let mut m = filter.a_d().dot(&filter.a_d().t());
        for i in 0..np {
            m[(i, i)] += sigma2;
        }
        let prod = filter.f().dot(&m);
        for i in 0..np {
            for j in 0..np {
                let expect = f64::from(u8::from(i == j));
                worst_identity = worst_identity.max((prod[(i, j)] - expect).abs());
            }
        }
    }
    assert!(worst_identity < 1e-9, "max |F M - I| = {worst_identity:.3e}");

    // single-signature closed form against the rank-1 update oracle
    let mut worst_sm: f64 = 0.0;
    for _ in 0..50 {
        let col = rng.random_range(0..4096);
        let sigma2 = rng.random_range(0.05..2.0);
        let filter = MmseFilter::build(&[col], &codebook, &preset, sigma2);
        let a = codebook.column(col).to_owned();
        let quad: f64 = a.dot(&filter.f().dot(&a));
        let p = preset.amplitude_for(col, 4096);
        worst_sm = worst_sm.max((quad - 1.0 / (sigma2 + p * p)).abs());
    }
    assert!(worst_sm < 1e-12, "max Sherman-Morrison error = {worst_sm:.3e}");
    println!(
        "[PASS] criterion 2: filter identity max err {worst_identity:.2e} (< 1e-9), \
         single-signature closed form max err {worst_sm:.2e} (< 1e-12)"
    );
}

#[test]
fn criterion_3_interference_variance_oracle() {
    let _g = gate();
    let np = 114;
    let codebook = SignatureCodebook::generate(np, 4096, 0x0D15EA5E);
    let power = PowerProfile::preset_for(150).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    // exact enumeration over all interferer sign patterns for K <= 4
    let mut worst_exact: f64 = 0.0;
    for k in 1..=4usize {
        for _ in 0..5 {
            let mut cols: Vec<usize> = (0..4096).collect();
            cols.shuffle(&mut rng);
            cols.truncate(k);
            let sigma2 = rng.random_range(0.2..1.5);
            let filter = MmseFilter::build(&cols, &codebook, &power, sigma2);
            let y = Array2::<f64>::zeros((np, 2));
            let state = EseState::new(&filter, &cols, &codebook, &power, y.view());
            for user in 0..k {
                let others: Vec<usize> = (0..k).filter(|&l| l != user).collect();
                let patterns = 1usize << others.len();
                let mut mean = 0.0;
                let mut mean_sq = 0.0;
                for pat in 0..patterns {
                    let mut xi = 0.0;
                    for (bit, &l) in others.iter().enumerate() {
                        let x = if (pat >> bit) & 1 == 0 { 1.0 } else { -1.0 };
                        xi += state.amplitude(l) * state.gain(user, l) * x;
                    }
                    mean += xi;
                    mean_sq += xi * xi;
                }
                mean /= patterns as f64;
                mean_sq /= patterns as f64;
                let exact = mean_sq - mean * mean + state.noise_term(user);
                worst_exact = worst_exact.max((state.xi_var()[(user, 0)] - exact).abs());
            }
        }
    }
    assert!(worst_exact < 1e-12, "enumeration mismatch {worst_exact:.3e}");

    // Monte-Carlo check at K = 25 over 1e6 draws of interferer symbols and
    // noise: the initialization variance is the true variance of
    // a_i^T F g_ij within 2%
    let k = 25;
    let mut cols: Vec<usize> = (0..4096).collect();
    cols.shuffle(&mut rng);
    cols.truncate(k);
    let sigma2 = 0.66; // reference parameters at 3 dB
    let filter = MmseFilter::build(&cols, &codebook, &power, sigma2);
    let y = Array2::<f64>::zeros((np, 1));
    let state = EseState::new(&filter, &cols, &codebook, &power, y.view());
    let user = 0;
    let fa = filter.f().dot(&codebook.column(cols[user]).to_owned());
    let sigma = sigma2.sqrt();
    let draws = 1_000_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut g = Array1::<f64>::zeros(np);
    for _ in 0..draws {
        g.fill(0.0);
        for (l, &c) in cols.iter().enumerate() {
            if l == user {
                continue;
            }
            let x: f64 = if rng.random_bool(0.5) {
                state.amplitude(l)
            } else {
                -state.amplitude(l)
            };
            g.scaled_add(x, &codebook.column(c));
        }
        for gi in g.iter_mut() {
            *gi += sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let xi = fa.dot(&g);
        sum += xi;
        sum_sq += xi * xi;
    }
    let mc_mean = sum / draws as f64;
    let mc_var = sum_sq / draws as f64 - mc_mean * mc_mean;
    let predicted = state.xi_var()[(user, 0)];
    let rel = (mc_var - predicted).abs() / predicted;
    assert!(rel < 0.02, "MC variance {mc_var:.6e} vs predicted {predicted:.6e} (rel {rel:.4})");
    println!(
        "[PASS] criterion 3: init Var(xi) exact to {worst_exact:.2e} for K<=4, \
         Monte-Carlo match {:.3}% (< 2%) at K=25 with 1e6 draws",
        100.0 * rel
    );
}

#[test]
fn criterion_4_moment_identities() {
    let _g = gate();
    let codebook = SignatureCodebook::from_columns(Array2::eye(4));
    let power = PowerProfile::uniform();
    let filter = MmseFilter::build(&[0], &codebook, &power, 1.0);
    let nc = 1_000_000;
    let y = Array2::<f64>::zeros((4, nc));
    let mut state = EseState::new(&filter, &[0], &codebook, &power, y.view());
    let mut rng = ChaCha8Rng::seed_from_u64(0x4D0);
    let posterior: Vec<f64> = (0..nc).map(|_| rng.random_range(-60.0..60.0)).collect();
    state.set_dec_posterior(0, &posterior);
    state.symbol_moments();
    for j in 0..nc {
        let e = state.x_mean()[(0, j)];
        assert!((-1.0..=1.0).contains(&e));
        // identity, not a tolerance
        assert_eq!(state.x_var()[(0, j)], 1.0 - e * e);
    }
    println!("[PASS] criterion 4: x_var = 1 - x_mean^2 exactly and x_mean in [-1,1] over 1e6 LLRs");
}

/// Gram-solve least squares residual energy (independent of the somp path).
fn projection_residual_energy(
    cb: &SignatureCodebook,
    y: &Array2<f64>,
    cols: &[usize],
) -> f64 {
    if cols.is_empty() {
        return y.iter().map(|v| v * v).sum();
    }
    let np = cb.np();
    let mut a = Array2::<f64>::zeros((np, cols.len()));
    for (k, &c) in cols.iter().enumerate() {
        a.column_mut(k).assign(&cb.column(c));
    }
    let gram = a.t().dot(&a);
    let chol = Cholesky::factor(gram.view()).expect("independent columns");
    let coef = chol.solve_mat(a.t().dot(y).view());
    let recon = a.dot(&coef);
    (y - &recon).iter().map(|v| v * v).sum()
}

#[test]
fn criterion_5_somp_exactness() {
    let _g = gate();
    let np = 114;
    let mut rng = ChaCha8Rng::seed_from_u64(0x50_4D_50);

    // random orthonormal dictionary via Gram-Schmidt of a Gaussian matrix
    let mut q = Array2::<f64>::zeros((np, np));
    loop {
        let raw = Array2::from_shape_fn((np, np), |_| rng.sample::<f64, _>(StandardNormal));
        let mut ok = true;
        for j in 0..np {
            let mut col = raw.column(j).to_owned();
            for k in 0..j {
                let proj = q.column(k).dot(&raw.column(j));
                col.scaled_add(-proj, &q.column(k));
            }
            let n = col.dot(&col).sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            col.mapv_inplace(|v| v / n);
            q.column_mut(j).assign(&col);
        }
        if ok {
            break;
        }
    }
    let ortho = SignatureCodebook::from_columns(q);

    // exact support recovery for any load up to np, zero noise
    for instance in 0..1000 {
        let ka = rng.random_range(1..=np);
        let mut support: Vec<usize> = (0..np).collect();
        support.shuffle(&mut rng);
        support.truncate(ka);
        let nc = 264;
        let mut y = Array2::<f64>::zeros((np, nc));
        for &c in &support {
            for j in 0..nc {
                let x: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let col = ortho.column(c);
                for i in 0..np {
                    y[(i, j)] += col[i] * x;
                }
            }
        }
        let set = somp(y.view(), &ortho, &DetectionPolicy::fixed(ka));
        let mut got = set.columns.clone();
        got.sort_unstable();
        support.sort_unstable();
        assert_eq!(got, support, "instance {instance} (ka={ka})");
    }

    // greedy selections match exhaustive least-squares subset search on an
    // 8-column dictionary with 3 active columns
    for instance in 0..200 {
        let cb = SignatureCodebook::generate(24, 8, 9000 + instance);
        let mut support: Vec<usize> = (0..8).collect();
        support.shuffle(&mut rng);
        support.truncate(3);
        let nc = 16;
        let mut y = Array2::<f64>::zeros((24, nc));
        for &c in &support {
            for j in 0..nc {
                let x: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let col = cb.column(c);
                for i in 0..24 {
                    y[(i, j)] += col[i] * x;
                }
            }
        }
        let set: ActiveSet = somp(y.view(), &cb, &DetectionPolicy::fixed(3));
        let mut got = set.columns.clone();
        got.sort_unstable();
        let mut best = (f64::INFINITY, Vec::new());
        for a in 0..8 {
            for b in (a + 1)..8 {
                for c in (b + 1)..8 {
                    let e = projection_residual_energy(&cb, &y, &[a, b, c]);
                    if e < best.0 {
                        best = (e, vec![a, b, c]);
                    }
                }
            }
        }
        assert_eq!(got, best.1, "instance {instance}");
    }
    println!(
        "[PASS] criterion 5: exact orthonormal support recovery in 1000 instances; \
         greedy = exhaustive subset search on 200 toy instances"
    );
}

#[test]
fn criterion_6_sic_exactness() {
    let _g = gate();
    let cfg = {
        let mut c = SystemConfig::defaults_for(25);
        c.ebn0_db = 3.0;
        c
    };
    let code = ParityCheckMatrix::shipped_264_88();
    let encoder = code.encoder().unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..5u64 {
        let seed = derive_seed(cfg.seed, 0xC6, trial);
        let codebook = SignatureCodebook::generate(cfg.n_chips, cfg.codebook_size(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, 0));
        let messages: Vec<UserMessage> =
            (0..cfg.ka).map(|_| UserMessage::random(cfg.b_total, cfg.b_header, &mut rng)).collect();
        let frames: Vec<_> = messages
            .iter()
            .map(|m| encode_user(m, &encoder, &cfg.power, cfg.codebook_size()))
            .collect();
        let noise_seed = derive_seed(seed, 3, 0);
        let sigma2 = cfg.noise_variance();
        let y = transmit(&frames, &codebook, cfg.n_symbols, sigma2, noise_seed);
        let noise = phy::noise_matrix(cfg.n_chips, cfg.n_symbols, sigma2, noise_seed);
        let truth = TrialTruth::new(messages, frames);
        let mut rx = Receiver::new(&cfg, &codebook, code)
            .with_genie(GenieFlags { detect: true, verify: true });
        let (list, diag) = rx.run(&y, Some(&truth));
        assert_eq!(list.len(), truth.messages.len(), "genie verification covers all users");
        let err: f64 =
            (&diag.final_residual - &noise).iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm: f64 = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(err / norm);
    }
    assert!(worst < 1e-9, "relative residual error {worst:.3e}");
    println!("[PASS] criterion 6: genie-verified SIC residual matches stored noise, worst rel err {worst:.2e} (< 1e-9)");
}

#[test]
fn criterion_7_convergence_replication() {
    let _g = gate();
    let start = Instant::now();
    let code = ParityCheckMatrix::shipped_264_88();
    // grid straddling the BER waterfall of the shipped code (plateau BER
    // falls ~350x across it), 1000 trials per point
    let grid = [2.5, 3.0, 3.5, 4.0];
    let mut cfg = SystemConfig::defaults_for(25); // seed 1, 20 iterations
    cfg.trials = 1000;
    let mut sink = Vec::new();
    let points = sim::run_convergence(&cfg, &grid, code, &mut sink).unwrap();
    for p in &points {
        // non-increasing within 95% confidence of the difference
        for k in 0..p.ber.len() - 1 {
            let slack = (p.ci95[k].powi(2) + p.ci95[k + 1].powi(2)).sqrt();
            assert!(
                p.ber[k + 1] <= p.ber[k] + slack,
                "ebn0 {}: BER rose beyond CI at iteration {} -> {}: {} -> {} (slack {})",
                p.ebn0_db,
                k + 1,
                k + 2,
                p.ber[k],
                p.ber[k + 1],
                slack
            );
        }
        // plateau: < 5% relative change between iterations 6 and 20
        let b6 = p.ber[5];
        let b20 = p.ber[19];
        if b6 > 0.0 {
            let rel = (b20 - b6).abs() / b6;
            assert!(rel < 0.05, "ebn0 {}: iteration 6->20 change {:.2}%", p.ebn0_db, 100.0 * rel);
        } else {
            assert_eq!(b20, 0.0);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 7200.0, "runtime {elapsed:.0}s exceeds 2h");
    let drifts: Vec<String> = points
        .iter()
        .map(|p| {
            let rel = if p.ber[5] > 0.0 { (p.ber[19] - p.ber[5]).abs() / p.ber[5] } else { 0.0 };
            format!("{:.1}dB:{:.2}%", p.ebn0_db, 100.0 * rel)
        })
        .collect();
    println!(
        "[PASS] criterion 7: per-iteration BER non-increasing within CIs, 6->20 drift [{}] all < 5%, {elapsed:.0}s",
        drifts.join(", ")
    );
}

#[test]
fn criterion_8_pupe_monotonicity_and_min_ebn0() {
    let _g = gate();
    let code = ParityCheckMatrix::shipped_264_88();
    let mut cfg = SystemConfig::defaults_for(25); // seed 1
    cfg.trials = 500;

    // 3-point ladder spanning 4 dB
    let spec = SweepSpec {
        variable: SweepVariable::Ebn0Db,
        values: vec![1.5, 3.5, 5.5],
        trials_per_point: 500,
    };
    let mut sink = Vec::new();
    let ladder = sim::run_sweep(&spec, &cfg, code, GenieFlags::default(), &mut sink).unwrap();
    for w in ladder.windows(2) {
        let slack = (w[0].pupe_ci95.powi(2) + w[1].pupe_ci95.powi(2)).sqrt();
        assert!(
            w[1].pupe <= w[0].pupe + slack,
            "PUPE rose from {} ({}) to {} ({}) beyond CI slack {}",
            w[0].ebn0_db,
            w[0].pupe,
            w[1].ebn0_db,
            w[1].pupe,
            slack
        );
    }
    // the bracket must actually straddle the target
    assert!(ladder[0].pupe > 0.05, "low endpoint PUPE {} must exceed target", ladder[0].pupe);
    assert!(ladder[2].pupe <= 0.05, "high endpoint PUPE {} must meet target", ladder[2].pupe);
    // undetected codeword errors are the only phantom source; their rate
    // stays far below the miss rate at every operating point
    for s in &ladder {
        assert!(
            s.false_alarm <= 0.1 * s.pupe,
            "false alarms {} not << PUPE {} at {} dB",
            s.false_alarm,
            s.pupe,
            s.ebn0_db
        );
    }

    let found = sim::min_ebn0_search(&cfg, code, 0.05, 1.5, 5.5, 500).unwrap();
    assert!(
        (1.5..=5.5).contains(&found),
        "min Eb/N0 {found} outside the ladder span"
    );
    assert!(
        (found - PINNED_MIN_EBN0_DB).abs() < 1e-9,
        "fixed-seed regression: expected {PINNED_MIN_EBN0_DB}, got {found}"
    );
    println!(
        "[PASS] criterion 8: ladder PUPE [{:.4}, {:.4}, {:.4}] non-increasing within CIs; \
         min Eb/N0 = {found:.4} dB (pinned {PINNED_MIN_EBN0_DB})",
        ladder[0].pupe, ladder[1].pupe, ladder[2].pupe
    );
}

#[test]
fn criterion_9_ldpc_correctness() {
    let _g = gate();
    let h = ParityCheckMatrix::shipped_264_88();
    let enc = h.encoder().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D9C);
    for _ in 0..10_000 {
        let payload: Vec<u8> = (0..88).map(|_| rng.random_range(0..2u8)).collect();
        let cw = enc.encode(&payload);
        assert_eq!(&cw[..88], payload.as_slice());
        assert!(h.syndrome_check(&cw));
    }

    // BP = exhaustive ML on the (7,4) toy for every single-error pattern:
    // the corrupted position carries a flipped-sign LLR of magnitude 6
    // among confident correct values
    let toy = ParityCheckMatrix::from_check_adjacency(
        7,
        vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]],
    )
    .unwrap();
    let toy_enc = toy.encoder().unwrap();
    let mut dec = ura_sim::ldpc::SumProductDecoder::new(&toy);
    for payload_val in 0..16u8 {
        let payload: Vec<u8> = (0..4).map(|i| (payload_val >> i) & 1).collect();
        let cw = toy_enc.encode(&payload);
        for flip in 0..7 {
            let mut llrs: Vec<f64> =
                cw.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
            llrs[flip] = if cw[flip] == 0 { -6.0 } else { 6.0 };
            let ok = dec.decode(&llrs, 20);
            assert!(ok, "payload {payload_val} flip {flip} did not verify");
            // exhaustive ML over all 16 codewords
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for w in 0..16u8 {
                let p: Vec<u8> = (0..4).map(|i| (w >> i) & 1).collect();
                let cand = toy_enc.encode(&p);
                let score: f64 = cand
                    .iter()
                    .zip(&llrs)
                    .map(|(&b, &l)| if b == 0 { l } else { -l })
                    .sum();
                if score > best.0 {
                    best = (score, cand);
                }
            }
            assert_eq!(dec.hard_bits(), best.1.as_slice(), "payload {payload_val} flip {flip}");
        }
    }
    println!(
        "[PASS] criterion 9: encode/syndrome exact on 10^4 payloads; BP = ML on all 112 single-error patterns"
    );
}

#[test]
fn criterion_10_determinism_across_workers() {
    let _g = gate();
    let code = ParityCheckMatrix::shipped_264_88();
    let mut cfg = SystemConfig::defaults_for(25);
    cfg.trials = 25;
    let spec = SweepSpec {
        variable: SweepVariable::Ebn0Db,
        values: vec![3.0, 4.0],
        trials_per_point: 25,
    };
    let run_with = |threads: usize| -> (String, String) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut sweep_csv = Vec::new();
            sim::run_sweep(&spec, &cfg, code, GenieFlags::default(), &mut sweep_csv).unwrap();
            let mut conv_csv = Vec::new();
            let mut conv_cfg = cfg.clone();
            conv_cfg.trials = 10;
            sim::run_convergence(&conv_cfg, &[3.0, 4.0], code, &mut conv_csv).unwrap();
            (String::from_utf8(sweep_csv).unwrap(), String::from_utf8(conv_csv).unwrap())
        })
    };
    let (sweep1, conv1) = run_with(1);
    let (sweep8, conv8) = run_with(8);

    // wall_time_s is the last column of the sweep CSV; everything else must
    // be byte-identical
    let strip = |text: &str| -> String {
        text.lines()
            .map(|line| {
                if line.starts_with('#') || line.starts_with("ka,") {
                    line.to_string()
                } else {
                    line.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&sweep1), strip(&sweep8), "sweep CSV differs between 1 and 8 workers");
    assert_eq!(conv1, conv8, "convergence CSV differs between 1 and 8 workers");
    println!("[PASS] criterion 10: CSV byte-identical under 1 vs 8 workers (wall_time excluded)");
}
