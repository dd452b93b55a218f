//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line. An optional argument filters criteria by
//! number or name substring.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use binned_ssa::bench::{bench_on, measure_counters, random_unit_rate_network, BenchSpec, RateProfile};
use binned_ssa::queues::{BinnedEventTable, CompositionRejectionTable};
use binned_ssa::rng::realization_seed;
use binned_ssa::spatial::{elf_ehrenberg_model, flatten_rdme, Mesh};
use binned_ssa::stats::{binomial_pmf, chi_square_test, ks_test, Moments};
use binned_ssa::{
    parse_model, run, BinPolicy, Channel, Method, ReactionNetwork, RngStream, RunConfig, SimModel,
    SourceOptions,
};

const P_MIN: f64 = 0.001;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn model_file(name: &str) -> binned_ssa::ModelFile {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name].iter().collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn choose(n: u64, k: u32) -> f64 {
    (0..k as u64).map(|i| (n.saturating_sub(i)) as f64 / (i + 1) as f64).product()
}

/// Mass-action propensity straight from the stoichiometry.
fn mass_action(ch: &Channel, pops: &[u64]) -> f64 {
    ch.rate_constant * ch.reactants.iter().map(|&(s, c)| choose(pops[s as usize], c)).product::<f64>()
}

fn rel_err(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

// 1. First event index and waiting time of every method against the exact law.
fn exactness_web() -> Outcome {
    const N: u64 = 100_000;
    let bd = model_file("birth_death.txt");
    let toy = model_file("toy3.txt");
    let ee = model_file("elf_ehrenberg.txt");
    let cases: [(&str, &ReactionNetwork, Vec<u64>); 3] = [
        ("birth-death", &bd.network, vec![5]),
        ("toy3", &toy.network, toy.initial.clone()),
        ("elf-ehrenberg", &ee.network, vec![5, 5, 20, 30, 1, 1, 1, 1]),
    ];
    let mut worst = (f64::INFINITY, String::new());
    let mut failures = Vec::new();
    for (ci, (name, network, pops)) in cases.iter().enumerate() {
        let props: Vec<f64> = network.channels().iter().map(|ch| mass_action(ch, pops)).collect();
        let a0: f64 = props.iter().sum();
        assert!(props.iter().all(|&a| a > 0.0), "{name}: every channel should be active");
        let probs: Vec<f64> = props.iter().map(|a| a / a0).collect();
        for (mi, method) in Method::ALL.into_iter().enumerate() {
            let options = SourceOptions::default();
            let mut counts = vec![0u64; props.len()];
            let mut taus = Vec::with_capacity(N as usize);
            let root = 1000 + (ci * 10 + mi) as u64;
            for k in 0..N {
                let mut rng = RngStream::new(realization_seed(root, k));
                let mut source = method.build(&options);
                source.initialize(&props, 0.0, &mut rng);
                let ev = source.next_event(0.0, &mut rng).expect("no corruption").expect("active model");
                counts[ev.channel] += 1;
                taus.push(ev.time);
            }
            let chi = chi_square_test(&counts, &probs);
            let ks = ks_test(&mut taus, |t| 1.0 - (-a0 * t).exp());
            for (kind, p) in [("index", chi.p_value), ("tau", ks.p_value)] {
                let label = format!("{name}/{method}/{kind}");
                if p < worst.0 {
                    worst = (p, label.clone());
                }
                if !(p > P_MIN) {
                    failures.push(format!("{label} p={p:.2e}"));
                }
            }
        }
    }
    let detail = format!("42 tests, smallest p = {:.4} ({})", worst.0, worst.1);
    if failures.is_empty() {
        Outcome::new(true, detail)
    } else {
        Outcome::new(false, format!("{detail}; failed: {}", failures.join(", ")))
    }
}

// 2. Search depth of the binned table at fixed widths, equal rates, a0 = 1.
fn search_depth_law() -> Outcome {
    let m = 10_000;
    let network = random_unit_rate_network(m, 1, 21).unwrap().with_rates(RateProfile::Normalized.rates(m));
    let mut ok = true;
    let mut parts = Vec::new();
    for w in [1.0, std::f64::consts::SQRT_2, 2.0, 4.0] {
        let spec = BenchSpec {
            out_degree: 1,
            warmup: 10_000,
            seed: 22,
            profile: RateProfile::Normalized,
            bin_policy: BinPolicy::fixed_width(w),
            ..BenchSpec::new(Method::NrmBins, m, 1_000_000)
        };
        let (c, _) = measure_counters(&spec, &network).unwrap();
        let bins = c.per_selection(c.bins_scanned);
        let entries = c.per_selection(c.entries_scanned);
        let (tb, te) = (1.0 / w + 1.0, w / 2.0 + 1.0);
        ok &= rel_err(bins, tb) <= 0.05 && rel_err(entries, te) <= 0.05;
        parts.push(format!("W={w:.3}: bins {bins:.3}/{tb:.3} entries {entries:.3}/{te:.3}"));
        if w == std::f64::consts::SQRT_2 {
            let total = bins + entries;
            ok &= rel_err(total, 2.0 + w) <= 0.05;
            parts.push(format!("total {total:.3}/{:.3}", 2.0 + w));
        }
    }
    Outcome::new(ok, parts.join("; "))
}

// 3. One fast channel dominating 10^4 slow ones.
fn fast_slow_regime() -> Outcome {
    let m = 10_001;
    let profile = RateProfile::FastSlow { fast: 1.0, slow_total: 0.01 };
    let network = random_unit_rate_network(m, 1, 31).unwrap().with_rates(profile.rates(m));
    let spec = BenchSpec {
        out_degree: 1,
        warmup: 10_000,
        seed: 32,
        profile,
        bin_policy: BinPolicy::fixed_width(6.64),
        ..BenchSpec::new(Method::NrmBins, m, 1_000_000)
    };
    let (c, _) = measure_counters(&spec, &network).unwrap();
    let depth = c.mean_search_depth();
    Outcome::new(
        rel_err(depth, 2.15) <= 0.10,
        format!(
            "total search depth {depth:.4} (bins {:.4}, entries {:.4}), target 2.15 ± 10%",
            c.per_selection(c.bins_scanned),
            c.per_selection(c.entries_scanned)
        ),
    )
}

// 4. Composition-rejection trial counts.
fn composition_rejection_bound() -> Outcome {
    let m = 10_000;
    let mut rng = RngStream::new(41);
    let uniform: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
    let bimodal: Vec<f64> =
        (0..m).map(|i| if i % 2 == 0 { 1e-3 * (0.5 + rng.uniform()) } else { 50.0 * (0.5 + rng.uniform()) }).collect();
    // Pareto, tail index 1.2
    let power: Vec<f64> = (0..m).map(|_| rng.uniform().powf(-1.0 / 1.2)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, props) in [("uniform", uniform), ("bimodal", bimodal), ("power-law", power)] {
        // exact expectation: group g is chosen w.p. S_g/a0 and then needs
        // n_g 2^(g+1) / S_g trials on average
        let a0: f64 = props.iter().sum();
        let expected: f64 = props.iter().map(|&a| 2f64.powf(a.log2().floor() + 1.0)).sum::<f64>() / a0;
        let table = CompositionRejectionTable::new(&props);
        let mut trials = Moments::default();
        for _ in 0..1_000_000 {
            let pick = table.select(&mut rng).unwrap().unwrap();
            trials.push(pick.trials as f64);
        }
        let mean = trials.mean();
        let agrees = (mean - expected).abs() <= 5.0 * trials.std_error();
        ok &= mean < 2.0 && agrees;
        parts.push(format!("{name} {mean:.4} (exact {expected:.4})"));
    }
    Outcome::new(ok, format!("mean trials: {}", parts.join(", ")))
}

// 5. Counter-measured scaling; wall clock reported only.
fn scaling_shape() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut clock = Vec::new();
    for m in [1_000usize, 10_000, 100_000] {
        let net = random_unit_rate_network(m, 10, 51).unwrap();
        let spec = BenchSpec { repetitions: 1, seed: 52, ..BenchSpec::new(Method::Direct, m, 20_000) };
        let r = bench_on(&spec, &net).unwrap();
        let scan = r.counters.per_selection(r.counters.entries_scanned);
        ok &= rel_err(scan, m as f64 / 2.0) <= 0.10;
        parts.push(format!("direct M={m} scan {scan:.0}/{}", m / 2));
        clock.push(format!("direct@{m} {:.0}ns", r.ns_per_step()));
    }
    for m in [1_000usize, 10_000, 100_000, 1_000_000] {
        let net = random_unit_rate_network(m, 10, 53).unwrap();
        let spec = BenchSpec { repetitions: 1, seed: 54, ..BenchSpec::new(Method::NrmHeap, m, 200_000) };
        let r = bench_on(&spec, &net).unwrap();
        let swaps = r.counters.per_update(r.counters.heap_swaps);
        let bound = (m as f64).log2() + 2.0;
        ok &= swaps <= bound;
        parts.push(format!("heap M={m} swaps/update {swaps:.2}≤{bound:.1}"));
        clock.push(format!("nrm-heap@{m} {:.0}ns", r.ns_per_step()));
    }
    let mut depth = Vec::new();
    for m in [1_000usize, 1_000_000] {
        let net = random_unit_rate_network(m, 10, 55).unwrap();
        let spec = BenchSpec { repetitions: 1, seed: 56, ..BenchSpec::new(Method::NrmBins, m, 1_000_000) };
        let r = bench_on(&spec, &net).unwrap();
        depth.push(r.counters.mean_search_depth());
        clock.push(format!("nrm-bins@{m} {:.0}ns", r.ns_per_step()));
    }
    let ratio = depth[1] / depth[0];
    ok &= ratio <= 1.3;
    parts.push(format!("nrm-bins depth {:.3} → {:.3} (ratio {ratio:.3}≤1.3)", depth[0], depth[1]));
    println!("    wall clock (informational): {}", clock.join(", "));
    Outcome::new(ok, parts.join("; "))
}

// 6. Rebuild sizing rule and table invariants under random operations.
fn rebuild_policy() -> Outcome {
    let m = 1_000;
    let policy = BinPolicy::default();
    let mut rng = RngStream::new(61);
    let mut props: Vec<f64> = (0..m).map(|_| if rng.uniform() < 0.1 { 0.0 } else { rng.uniform() }).collect();
    let times: Vec<f64> = props.iter().map(|&a| rng.exponential(a)).collect();
    let mut table = BinnedEventTable::with_times(policy, &props, &times, 0.0);

    let (mut now, mut last_rebuild, mut steps) = (0.0f64, 0.0f64, 0u64);
    let (mut checked, mut sizing_errors, mut audit_error) = (0usize, Vec::new(), None);
    let operations = 1_000_000;
    for op in 0..operations {
        match rng.below(10) {
            // fire the next event and give it a fresh time
            0..=6 => {
                let active: usize = props.iter().filter(|&&a| a > 0.0).count();
                let a0: f64 = props.iter().sum();
                let Some((ev, stats)) = table.select_next(now) else { break };
                if stats.rebuilds == 1 {
                    let mean_step = if steps >= 100 { (now - last_rebuild) / steps as f64 } else { 1.0 / a0 };
                    let want_w = 16.0 * mean_step;
                    let want_k = (20.0 * (active as f64).sqrt()).ceil() as usize;
                    if table.bin_width() != want_w || table.bin_count() != want_k {
                        sizing_errors.push(format!(
                            "W {} vs {want_w}, K {} vs {want_k}",
                            table.bin_width(),
                            table.bin_count()
                        ));
                    }
                    checked += 1;
                    last_rebuild = now;
                    steps = 0;
                }
                steps += 1;
                now = ev.time;
                let a = props[ev.channel];
                table.update(ev.channel, a, now + rng.exponential(a));
            }
            // change an arbitrary channel, switching some on or off
            7..=8 => {
                let j = rng.below(m);
                let a = if rng.uniform() < 0.2 { 0.0 } else { 2.0 * rng.uniform() };
                props[j] = a;
                table.update(j, a, now + rng.exponential(a));
            }
            // forced rebuild at the current time
            _ => {
                if rng.below(1000) == 0 {
                    table.rebuild(now);
                    last_rebuild = now;
                    steps = 0;
                }
            }
        }
        if op % 1000 == 999 {
            if let Err(e) = table.audit() {
                audit_error = Some(format!("op {op}: {e}"));
                break;
            }
        }
    }
    let ok = checked >= 10 && sizing_errors.is_empty() && audit_error.is_none();
    let mut detail = format!("{checked} automatic rebuilds sized exactly, {operations} ops audited every 1000");
    if let Some(e) = sizing_errors.first() {
        detail = format!("{} sizing mismatches, first: {e}", sizing_errors.len());
    }
    if let Some(e) = audit_error {
        detail = format!("audit failed at {e}");
    }
    Outcome::new(ok, detail)
}

// 7. Birth-death ensemble against the exact Poisson law at t = 10.
fn stationary_moments() -> Outcome {
    let bd = model_file("birth_death.txt");
    let model = SimModel::new(bd.network, bd.initial);
    let n = 10_000;
    // from A = 0: Poisson with mean 10 (1 − e^{−10})
    let lambda = 10.0 * (1.0 - (-10.0f64).exp());
    let mut ok = true;
    let mut parts = Vec::new();
    for method in Method::ALL {
        let cfg = RunConfig::new(method, 10.0, 71);
        let stats = binned_ssa::run_ensemble(&model, &cfg, n).unwrap();
        let m = &stats.moments[0][0];
        let (mean, var, se) = (m.mean(), m.variance(), m.std_error());
        let pass = (mean - lambda).abs() <= 3.0 * se && rel_err(var, lambda) <= 0.05;
        ok &= pass;
        parts.push(format!("{method} {mean:.3}/{var:.3}"));
    }
    Outcome::new(ok, format!("mean/var vs {lambda:.4}: {}", parts.join(", ")))
}

// 8. Spatial: two-box diffusion split and cross-method Elf–Ehrenberg means.
fn spatial_correctness() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();

    let inert = Channel::new("inert", &[(0, 1)], &[(0, 1)], 0.0).unwrap();
    let local = ReactionNetwork::new(vec!["A".into()], vec![inert]).unwrap();
    let two_box = flatten_rdme(&local, Mesh::new(2, 1, 1, 1.0).unwrap(), &[1.0]).unwrap();
    let total = 20u64;
    let model = SimModel::spatial(&two_box, vec![total, 0]);
    let probs: Vec<f64> = (0..=total).map(|k| binomial_pmf(total, k, 0.5)).collect();
    let mut worst = 1.0f64;
    for method in Method::ALL {
        let mut counts = vec![0u64; total as usize + 1];
        for k in 0..10_000 {
            let cfg = RunConfig::new(method, 5.0, realization_seed(81, k));
            let (traj, _) = run(&model, &cfg).unwrap();
            counts[traj.final_state[0] as usize] += 1;
        }
        let p = chi_square_test(&counts, &probs).p_value;
        worst = worst.min(p);
        ok &= p > P_MIN;
    }
    parts.push(format!("two-box Binomial(20, 1/2) smallest p = {worst:.4} over 7 methods"));

    let (ee, initial) = elf_ehrenberg_model(3.0, 0.6, 82).unwrap();
    let model = SimModel::spatial(&ee, initial);
    let species = ee.local.species_count();
    let n = 200;
    let methods = [Method::Nsm, Method::CompositionRejection, Method::NrmBins];
    let mut moments: Vec<Vec<Moments>> = Vec::new();
    for method in methods {
        let mut per_species = vec![Moments::default(); species];
        for k in 0..n {
            let cfg = RunConfig::new(method, 2.0, realization_seed(83, k));
            let (traj, _) = run(&model, &cfg).unwrap();
            for (m, t) in per_species.iter_mut().zip(ee.species_totals(&traj.final_state)) {
                m.push(t as f64);
            }
        }
        moments.push(per_species);
    }
    let mut worst_z = 0.0f64;
    for a in 0..methods.len() {
        for b in a + 1..methods.len() {
            for s in 0..species {
                let (x, y) = (&moments[a][s], &moments[b][s]);
                let se = (x.std_error().powi(2) + y.std_error().powi(2)).sqrt();
                let diff = (x.mean() - y.mean()).abs();
                let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                worst_z = worst_z.max(z);
            }
        }
    }
    ok &= worst_z <= 3.0;
    let names = ee.local.species();
    let means: Vec<String> =
        (0..species).map(|s| format!("{}={:.1}", names[s], moments[0][s].mean())).collect();
    parts.push(format!("5³ Elf–Ehrenberg at t=2, n={n}: largest |z| = {worst_z:.2} (nsm means {})", means.join(" ")));
    Outcome::new(ok, parts.join("; "))
}

// 9. Flat channel count of the largest spatial model.
fn channel_count() -> Outcome {
    let (model, _) = elf_ehrenberg_model(12.0, 0.6, 1).unwrap();
    let m = model.channel_count();
    // 20³ subvolumes × (12 reactions + 8 species × 6 directions)
    let expected = 20usize.pow(3) * (12 + 8 * 6);
    Outcome::new(m == expected && m == 480_000, format!("M = {m}"))
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "exactness web", Some(Duration::from_secs(300)), exactness_web),
        (2, "search-depth law", Some(Duration::from_secs(60)), search_depth_law),
        (3, "fast/slow regime", None, fast_slow_regime),
        (4, "composition-rejection bound", None, composition_rejection_bound),
        (5, "scaling shape", None, scaling_shape),
        (6, "rebuild policy", None, rebuild_policy),
        (7, "stationary moments", None, stationary_moments),
        (8, "spatial correctness", Some(Duration::from_secs(600)), spatial_correctness),
        (9, "channel-count arithmetic", None, channel_count),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, limit, check) in criteria {
        if let Some(f) = &filter {
            if f != &id.to_string() && !name.contains(f.as_str()) {
                continue;
            }
        }
        ran += 1;
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let mut outcome = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if let Some(limit) = limit {
            if elapsed > limit {
                outcome.pass = false;
                outcome.detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
            }
        }
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id} {name}: {} ({:.1}s)", outcome.detail, elapsed.as_secs_f64());
        failed += !outcome.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
