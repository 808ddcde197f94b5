//! Acceptance suite: one PASS/FAIL line per criterion. Failures are reported
//! but only fail the process when `SEQAE_ACCEPTANCE_STRICT=1` is set.
//!
//! Seed policy: ensembles are sampled with `ChaCha8Rng::seed_from_u64(ENSEMBLE_SEED + offset)`
//! (one offset per code), training datasets use `TRAIN_SEED`, evaluation runs
//! use `EVAL_SEED`, and SNR searches use `SEARCH_SEED`. All trial streams are
//! derived with `sim::trial_rng(seed, trial)`.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqae_core::automorphism::{affine_profile, sample_blta, sample_ensemble, AffinePerm, BltaProfile};
use seqae_core::code::{polar_transform, CodeSpec};
use seqae_core::ensemble::{fo_complexity, histogram_to_distribution, ro_complexity, EnsembleDecoder, SigmaParams};
use seqae_core::sc::{lfg, ScDecoder};
use seqae_core::sim::{
    draw_transmission, find_snr_at_bler, five_number_summary, map_trials, n_dec_histogram, observe_ensemble,
    ChannelConfig, DecoderKind, DecoderSetup, EnsembleObservation, SnrPoint, SnrSearch,
};
use seqae_core::threshold::{collect_dataset, optimize_sigma, replay_invocations, SearchResult};
use seqae_core::Bit;

const ENSEMBLE_SEED: u64 = 7;
const TRAIN_SEED: u64 = 1001;
const EVAL_SEED: u64 = 2002;
const SEARCH_SEED: u64 = 3003;

const TRAIN_BLER: f64 = 1e-2;
const EVAL_BLER: f64 = 1e-3;
const KAPPA: u64 = 5;

struct Report {
    passed: usize,
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        println!("[{}] {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(format!("{id} {name}"));
        }
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn snr_at(code: &CodeSpec, perms: &[AffinePerm], target: f64) -> SnrPoint {
    let mut search = SnrSearch::new(target, 0.1, SEARCH_SEED);
    search.bracket = (0.0, 7.0);
    find_snr_at_bler(&DecoderSetup::new(code, perms, DecoderKind::Ae), &search)
        .unwrap_or_else(|e| panic!("SNR search for {code}: {e}"))
}

/// A code with its ensemble, trained thresholds and operating points.
struct Trained {
    name: String,
    code: CodeSpec,
    perms: Vec<AffinePerm>,
    train_snr: f64,
    train_xi: f64,
    sigma: SigmaParams,
    search: SearchResult,
    eval: SnrPoint,
}

fn train(name: &str, code: CodeSpec, m: usize, ensemble_offset: u64, vectors: usize) -> Trained {
    let start = Instant::now();
    let profile = affine_profile(&code).expect("LTA-invariant code");
    let mut rng = ChaCha8Rng::seed_from_u64(ENSEMBLE_SEED + ensemble_offset);
    let perms = sample_ensemble(m, &profile, &code, &mut rng).expect("enough inequivalent automorphisms");
    let train_point = snr_at(&code, &perms, TRAIN_BLER);
    let cfg = ChannelConfig::for_code(&code, train_point.snr_db);
    let dataset = collect_dataset(&code, &perms, &cfg, vectors, TRAIN_SEED).expect("dataset");
    let (sigma, search) = optimize_sigma(&dataset, TRAIN_BLER / 10.0, KAPPA, 100).expect("search");
    let eval = snr_at(&code, &perms, EVAL_BLER);
    println!(
        "  [{name}] profile {profile}, train {:.3} dB (xi {:.3e}), eval {:.3} dB (AE BLER {:.3e}), {:.0?}",
        train_point.snr_db,
        dataset.ensemble_bler(),
        eval.snr_db,
        eval.stats.bler,
        start.elapsed()
    );
    Trained {
        name: name.to_string(),
        code,
        perms,
        train_snr: train_point.snr_db,
        train_xi: dataset.ensemble_bler(),
        sigma,
        search,
        eval,
    }
}

/// DAE and PDAE on the same blocks.
struct Paired {
    trials: usize,
    dae_invoked: f64,
    pdae_sc_equiv: f64,
    dae_errors: usize,
    ae_errors: usize,
    codeword_mismatches: usize,
    cost_violations: usize,
}

fn paired_run(t: &Trained, snr: f64, trials: u64, with_ae: bool) -> Paired {
    let nv = ChannelConfig::for_code(&t.code, snr).noise_variance();
    let rows = map_trials(
        0,
        trials,
        || EnsembleDecoder::new(&t.code, &t.perms).unwrap(),
        |dec, i| {
            let tx = draw_transmission(&t.code, nv, EVAL_SEED, i);
            let dae = dec.dae_decode(&tx.llr, &t.sigma).unwrap();
            let pdae = dec.pdae_decode(&tx.llr, &t.sigma).unwrap();
            let ae_wrong = with_ae && dec.ae_decode(&tx.llr).unwrap().x_hat != tx.x;
            (
                dae.num_invoked,
                pdae.complexity_sc_equiv,
                dae.x_hat != tx.x,
                ae_wrong,
                dae.x_hat != pdae.x_hat,
                pdae.complexity_sc_equiv > dae.num_invoked as f64,
            )
        },
    );
    let n = rows.len() as f64;
    Paired {
        trials: rows.len(),
        dae_invoked: rows.iter().map(|r| r.0 as f64).sum::<f64>() / n,
        pdae_sc_equiv: rows.iter().map(|r| r.1).sum::<f64>() / n,
        dae_errors: rows.iter().filter(|r| r.2).count(),
        ae_errors: rows.iter().filter(|r| r.3).count(),
        codeword_mismatches: rows.iter().filter(|r| r.4).count(),
        cost_violations: rows.iter().filter(|r| r.5).count(),
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn median_of(obs: &[EnsembleObservation], correct: bool, metric: fn(&EnsembleObservation) -> f64) -> f64 {
    let v: Vec<f64> = obs.iter().filter(|o| o.correct == correct).map(metric).collect();
    five_number_summary(&v).map_or(f64::NAN, |f| f.median)
}

fn criterion_1_and_6(report: &mut Report, rm64: &Trained) {
    let cfg = ChannelConfig::for_code(&rm64.code, rm64.eval.snr_db);
    let obs = observe_ensemble(&rm64.code, &rm64.perms, &cfg, 100_000, EVAL_SEED).unwrap();
    let dist = histogram_to_distribution(&n_dec_histogram(&obs, 8));
    let ro = ro_complexity(&dist).unwrap();
    let fo = fo_complexity(&dist, 8).unwrap();
    let pass = within(dist[0], 0.683, 0.05) && within(ro, 1.64, 0.10) && within(fo, 1.12, 0.05);
    report.check(
        "1",
        "redundancy distribution RM(128,64) M=8 at BLER 1e-3",
        pass,
        format!(
            "P(n_dec=1) = {:.4} (0.683±0.05), RO = {ro:.4} (1.64±0.10), FO = {fo:.4} (1.12±0.05), {} trials at {:.3} dB, P = {:?}",
            dist[0],
            obs.len(),
            rm64.eval.snr_db,
            dist.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );

    let wrong = obs.iter().filter(|o| !o.correct).count();
    let pm_wrong = median_of(&obs, false, |o| o.pm);
    let pm_right = median_of(&obs, true, |o| o.pm);
    let lsm_wrong = median_of(&obs, false, |o| o.lsm);
    let lsm_right = median_of(&obs, true, |o| o.lsm);
    let llr_wrong = median_of(&obs, false, |o| o.lsm_llr);
    let llr_right = median_of(&obs, true, |o| o.lsm_llr);
    let lsm_gap = (lsm_wrong - lsm_right).abs() / lsm_right;
    let llr_gap = (llr_wrong - llr_right).abs() / llr_right;
    // The published medians (about 2.5e3) are on the LLR scale, so that is
    // the metric compared; the channel-output LSM is reported alongside.
    report.check(
        "6",
        "PM separates outcomes, LSM does not",
        wrong > 0 && pm_wrong >= 2.0 * pm_right && llr_gap < 0.10,
        format!(
            "median PM wrong {pm_wrong:.2} vs correct {pm_right:.2} (need ratio >= 2, got {:.2}); median LSM on LLRs wrong {llr_wrong:.0} vs correct {llr_right:.0} (gap {:.1}%, need < 10%); LSM on channel output wrong {lsm_wrong:.2} vs correct {lsm_right:.2} (gap {:.1}%); {wrong} wrong trials",
            pm_wrong / pm_right,
            100.0 * llr_gap,
            100.0 * lsm_gap
        ),
    );
}

fn fo_monte_carlo(dist: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let m = dist.len();
    let mut positions: Vec<usize> = (0..m).collect();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let u: f64 = rng.random();
        let mut k = m;
        let mut cum = 0.0;
        for (i, p) in dist.iter().enumerate() {
            cum += p;
            if u < cum {
                k = i + 1;
                break;
            }
        }
        let copies = m - k + 1;
        positions.shuffle(rng);
        let first = positions[..copies].iter().min().unwrap() + 1;
        sum += first as f64;
        sum_sq += (first * first) as f64;
    }
    let n = draws as f64;
    let mean = sum / n;
    (mean, ((sum_sq / n - mean * mean) / n).sqrt())
}

fn criterion_2(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut details = Vec::new();
    let mut pass = true;
    for m in [4usize, 8] {
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let dist: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let formula = fo_complexity(&dist, m).unwrap();
        let (mc, se) = fo_monte_carlo(&dist, 1_000_000, &mut rng);
        let ok = (mc - formula).abs() <= 3.0 * se;
        pass &= ok;
        details.push(format!("M={m}: formula {formula:.5}, simulated {mc:.5} ± {se:.5}"));
    }
    report.check("2", "fixed-order oracle formula", pass, details.join("; "));
}

fn criterion_3(report: &mut Report, rm64: &Trained) {
    let s = &rm64.search;
    let monotone = s.log.windows(2).all(|w| w[1].mean_invoked <= w[0].mean_invoked + 1e-12)
        && s.log.first().is_none_or(|f| f.mean_invoked <= s.initial_mean_invoked + 1e-12);
    let e = &s.allocation.e;
    let kappa = KAPPA as i64;
    let front_loaded = e.windows(2).all(|w| w[1] <= w[0] + kappa);
    let pass = within(s.initial_mean_invoked, 1.64, 0.05)
        && within(s.mean_invoked, 1.60, 0.05)
        && s.mean_invoked <= s.initial_mean_invoked
        && monotone
        && front_loaded;
    report.check(
        "3",
        "allocation search trace RM(128,64) M=8",
        pass,
        format!(
            "initial e = {:?} M = {:.4} (1.64±0.05); converged after T = {} e = {e:?} M = {:.4} (1.60±0.05); monotone {monotone}; front-loaded within κ {front_loaded}; ξ = {:.3e}",
            s.initial.e, s.initial_mean_invoked, s.iterations, s.mean_invoked, rm64.train_xi
        ),
    );
}

fn criterion_4_5_7a(report: &mut Report, rm64: &Trained, rm99: &Trained, rm64_32: &Trained, polar: &[Trained]) {
    let p64 = paired_run(rm64, rm64.eval.snr_db, 300_000, true);
    let p99 = paired_run(rm99, rm99.eval.snr_db, 100_000, false);
    let p32 = paired_run(rm64_32, rm64_32.eval.snr_db, 100_000, false);

    let pass64 = within(p64.dae_invoked, 1.28, 0.15)
        && 8.0 / p64.dae_invoked >= 5.5
        && within(p64.pdae_sc_equiv, 1.23, 0.15);
    report.check(
        "4a",
        "complexity RM(128,64) M=8 at BLER 1e-3",
        pass64,
        format!(
            "DAE M = {:.4} (1.28±0.15, reduction {:.2}x >= 5.5), PDAE {:.4} (1.23±0.15)",
            p64.dae_invoked,
            8.0 / p64.dae_invoked,
            p64.pdae_sc_equiv
        ),
    );
    report.check(
        "4b",
        "complexity RM(128,99) M=8 at BLER 1e-3",
        within(p99.dae_invoked, 1.18, 0.15),
        format!("DAE M = {:.4} (1.18±0.15), PDAE {:.4}", p99.dae_invoked, p99.pdae_sc_equiv),
    );
    report.check(
        "4c",
        "complexity RM(128,64) M=32 at BLER 1e-3",
        within(p32.dae_invoked, 2.56, 0.5) && p32.cost_violations == 0,
        format!(
            "DAE M = {:.4} (2.56±0.5), PDAE {:.4}, trials where PDAE cost > DAE cost: {} of {}",
            p32.dae_invoked, p32.pdae_sc_equiv, p32.cost_violations, p32.trials
        ),
    );
    let mut polar_pass = true;
    let mut polar_detail = Vec::new();
    let mut polar_pairs = Vec::new();
    for t in polar {
        let p = paired_run(t, t.eval.snr_db, 100_000, false);
        let reduction = 8.0 / p.dae_invoked;
        polar_pass &= reduction >= 5.5;
        polar_detail.push(format!(
            "{}: DAE M = {:.4} ({reduction:.2}x), PDAE {:.4}",
            t.name, p.dae_invoked, p.pdae_sc_equiv
        ));
        polar_pairs.push((t.name.clone(), p));
    }
    report.check(
        "4d",
        "polar reduction >= 5.5x (own GA constructions)",
        polar_pass,
        polar_detail.join("; "),
    );

    // Criterion 5: BLER contract at the training point (independent blocks)
    // and at BLER 1e-3 against the full ensemble on the same blocks.
    let train = paired_run(rm64, rm64.train_snr, 200_000, false);
    let dae_train = train.dae_errors as f64 / train.trials as f64;
    let bound_train = 1.1 * rm64.train_xi + 3.0 * binomial_se(1.1 * rm64.train_xi, train.trials);
    let ae_eval = p64.ae_errors as f64 / p64.trials as f64;
    let dae_eval = p64.dae_errors as f64 / p64.trials as f64;
    let bound_eval = 1.1 * ae_eval + 3.0 * binomial_se(1.1 * ae_eval, p64.trials);
    report.check(
        "5",
        "DAE BLER contract RM(128,64) M=8",
        dae_train <= bound_train && dae_eval <= bound_eval,
        format!(
            "train {:.3} dB: DAE {dae_train:.4e} <= {bound_train:.4e} (xi {:.4e}); eval {:.3} dB: DAE {dae_eval:.4e} <= {bound_eval:.4e} (AE {ae_eval:.4e}, {} trials)",
            rm64.train_snr, rm64.train_xi, rm64.eval.snr_db, p64.trials
        ),
    );

    let mut mismatch = vec![
        ("RM(128,64) M=8".to_string(), p64.codeword_mismatches, p64.trials),
        ("RM(128,99) M=8".to_string(), p99.codeword_mismatches, p99.trials),
        ("RM(128,64) M=32".to_string(), p32.codeword_mismatches, p32.trials),
    ];
    mismatch.extend(polar_pairs.iter().map(|(n, p)| (n.clone(), p.codeword_mismatches, p.trials)));
    report.check(
        "7a",
        "PDAE and DAE return the same codeword",
        mismatch.iter().all(|m| m.1 == 0),
        mismatch
            .iter()
            .map(|(n, c, t)| format!("{n}: {c} mismatches in {t}"))
            .collect::<Vec<_>>()
            .join("; "),
    );
}

fn criterion_7bc(report: &mut Report, rm64: &Trained) {
    let trials = 10_000u64;
    let nv = ChannelConfig::for_code(&rm64.code, rm64.train_snr).noise_variance();
    let trivial = SigmaParams::never_stop(8);
    let diffs = map_trials(
        0,
        trials,
        || EnsembleDecoder::new(&rm64.code, &rm64.perms).unwrap(),
        |dec, i| {
            let tx = draw_transmission(&rm64.code, nv, EVAL_SEED, i);
            let ae = dec.ae_decode(&tx.llr).unwrap();
            let dae = dec.dae_decode(&tx.llr, &trivial).unwrap();
            ae != dae
        },
    );
    let differing = diffs.iter().filter(|&&d| d).count();
    report.check(
        "7b",
        "DAE with sigma = [0,...,0,inf] equals AE",
        differing == 0,
        format!("{differing} of {trials} outcomes differ"),
    );

    let cfg = ChannelConfig::for_code(&rm64.code, rm64.train_snr);
    let ds = collect_dataset(&rm64.code, &rm64.perms, &cfg, trials as usize, EVAL_SEED).unwrap();
    let replayed = replay_invocations(&ds, rm64.sigma.values()).unwrap();
    let live = map_trials(
        0,
        trials,
        || EnsembleDecoder::new(&rm64.code, &rm64.perms).unwrap(),
        |dec, i| {
            let tx = draw_transmission(&rm64.code, nv, EVAL_SEED, i);
            let out = dec.dae_decode(&tx.llr, &rm64.sigma).unwrap();
            (out.num_invoked, out.x_hat == tx.x)
        },
    );
    let count_mismatch = live.iter().zip(&replayed).filter(|(l, r)| l.0 != **r).count();
    let outcome_mismatch = live
        .iter()
        .zip(&replayed)
        .enumerate()
        .filter(|(i, (l, r))| ds.record(*i).step_ok(**r - 1) != l.1)
        .count();
    let mean_live = live.iter().map(|l| l.0 as f64).sum::<f64>() / trials as f64;
    let mean_replay = replayed.iter().sum::<usize>() as f64 / trials as f64;
    report.check(
        "7c",
        "replayed invocations equal live DAE",
        count_mismatch == 0 && outcome_mismatch == 0,
        format!(
            "{count_mismatch} count and {outcome_mismatch} outcome mismatches in {trials} trials; mean {mean_live:.4} live vs {mean_replay:.4} replayed"
        ),
    );
}

fn criterion_8(report: &mut Report) {
    let mut bad = 0;
    let mut leaves = 0;
    for n in 1..=6usize {
        let len = 1usize << n;
        for k in 0..len {
            let info: Vec<usize> = (0..len).filter(|&i| i != k).collect();
            let code = CodeSpec::new(n, info, seqae_core::code::CodeFamily::Explicit).unwrap();
            let llr: Vec<f64> = (0..len).map(|z| if z & !k == 0 { -1.0 } else { 1.0 }).collect();
            let mut dec = ScDecoder::new(&code);
            let out = dec.decode(&llr, Some(0.0)).unwrap();
            leaves += 1;
            if out.abort_leaf != Some(k) || lfg(k, n) != dec.fg_evaluations() as f64 / (n * len) as f64 {
                bad += 1;
            }
        }
    }
    let full = (1..=10).all(|n| lfg((1 << n) - 1, n) == 1.0);
    report.check(
        "8",
        "complexity fraction matches instrumented counts",
        bad == 0 && full,
        format!("{bad} mismatching leaves of {leaves} (n <= 6); L(N-1) = 1 for n <= 10: {full}"),
    );
}

fn criterion_9(report: &mut Report) {
    let code = CodeSpec::reed_muller(4, 2).unwrap();
    let k = code.dimension();
    let codewords: Vec<Vec<Bit>> = (0..1u32 << k)
        .map(|m| {
            let msg: Vec<Bit> = (0..k).map(|i| (m >> i & 1) as Bit).collect();
            code.encode_message(&msg).unwrap()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut perms: Vec<AffinePerm> = (0..200).map(|_| sample_blta(&BltaProfile::full(4), &mut rng)).collect();
    perms.extend(sample_ensemble(8, &BltaProfile::full(4), &code, &mut rng).unwrap());
    let mut violations = 0;
    for p in &perms {
        for x in &codewords {
            let y = p.apply(x).unwrap();
            let mut u = y.clone();
            polar_transform(&mut u);
            if !code.is_codeword(&y) || code.frozen_set().iter().any(|&f| u[f] != 0) {
                violations += 1;
            }
        }
    }

    let mut round_trip_failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let profile = BltaProfile::full(n);
        let p = sample_blta(&profile, &mut rng);
        let v: Vec<f64> = (0..1usize << n).map(|_| rng.random()).collect();
        let forward = p.apply(&v).unwrap();
        let mut back = vec![0.0; v.len()];
        p.apply_inverse_into(&forward, &mut back).unwrap();
        if back != v || p.inverse().apply(&forward).unwrap() != v {
            round_trip_failures += 1;
        }
    }
    report.check(
        "9",
        "automorphism and permutation algebra",
        violations == 0 && round_trip_failures == 0,
        format!(
            "{violations} non-codeword images over {} perms x {} codewords of RM(2,4); {round_trip_failures} of 1000 round trips failed",
            perms.len(),
            codewords.len()
        ),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut report = Report { passed: 0, failed: Vec::new() };
    println!("acceptance suite: fast criteria");
    criterion_2(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report);

    println!("acceptance suite: training thresholds (this takes several minutes)");
    let rm64 = train("RM(128,64) M=8", CodeSpec::reed_muller(7, 3).unwrap(), 8, 0, 500_000);
    criterion_1_and_6(&mut report, &rm64);
    criterion_3(&mut report, &rm64);
    criterion_7bc(&mut report, &rm64);

    let rm99 = train("RM(128,99) M=8", CodeSpec::reed_muller(7, 4).unwrap(), 8, 1, 500_000);
    let rm64_32 = train("RM(128,64) M=32", CodeSpec::reed_muller(7, 3).unwrap(), 32, 2, 250_000);
    let polar: Vec<Trained> = [(60usize, 5.0), (98, 5.0), (23, 6.0)]
        .iter()
        .enumerate()
        .map(|(i, &(k, design))| {
            let code = CodeSpec::polar(7, k, design).unwrap();
            train(&format!("polar(128,{k}) M=8"), code, 8, 10 + i as u64, 200_000)
        })
        .collect();
    criterion_4_5_7a(&mut report, &rm64, &rm99, &rm64_32, &polar);

    let total = report.passed + report.failed.len();
    println!(
        "acceptance suite: {}/{total} criteria passed in {:.0?}",
        report.passed,
        start.elapsed()
    );
    if report.failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    println!("failed: {}", report.failed.join(", "));
    if std::env::var("SEQAE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
