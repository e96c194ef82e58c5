//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnss_core::harness::{generate_synthetic, read_run_log, RunLogRecord, RunLogWriter};
use tnss_core::llm::{hybrid_search, parse_solution, run_llm_search, DomainInfo, LlmSearchConfig, ScriptedClient};
use tnss_core::objective::{init_cores, loss_and_gradient, Evaluator, FitConfig, Source};
use tnss_core::search::{exhaustive_search, run_local_search, EnumConfig, NeighborhoodConfig, StoppingConfig, Strategy};
use tnss_core::{tnc_contract, CoreSet, DenseTensor, EvaluationResult, ParseError, TNStructure, TensorDataset};

// Tolerances and limits.
const CONTRACTION_RTOL: f64 = 1e-10;
const GRADIENT_RTOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const PLANTED_ERR_MAX: f64 = 1e-2;
const PLANTED_OBJ_SLACK: f64 = 1e-3;
const TNALE_GAP: f64 = 0.05;
const TNLS_GAP: f64 = 0.10;

// The planted instance.
const SHAPE: [usize; 3] = [6, 6, 6];
const PLANTED: [usize; 3] = [3, 2, 1];
const SAMPLES: usize = 8;
const DATA_SEED: u64 = 0;
const LAMBDA: f64 = 10.0;
const R_MAX: usize = 4;
const FIT_ITERS: usize = 2000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fit(seed: u64) -> FitConfig {
    FitConfig {
        max_iters: FIT_ITERS,
        seed,
        ..FitConfig::default()
    }
}

fn planted() -> TNStructure {
    TNStructure::new(3, PLANTED.to_vec()).unwrap()
}

fn instance() -> TensorDataset {
    generate_synthetic(&SHAPE, &planted(), SAMPLES, 0.0, DATA_SEED).unwrap()
}

fn domain() -> DomainInfo {
    DomainInfo::sizes_only(&SHAPE)
}

fn ranks_line(ranks: &[usize]) -> String {
    let parts: Vec<String> = ranks.iter().map(usize::to_string).collect();
    format!("RANKS: [{}]", parts.join(", "))
}

fn scripted_reply(ranks: &[usize]) -> String {
    format!("Trying a structure with ranks {ranks:?}.\n{}", ranks_line(ranks))
}

/// Evaluator that streams every fresh evaluation to `<dir>/<name>.jsonl`.
struct Logged {
    path: PathBuf,
}

impl Logged {
    fn new(dir: &Path, name: &str) -> Self {
        Self {
            path: dir.join(format!("{name}.jsonl")),
        }
    }

    fn run<T>(&self, dataset: &TensorDataset, fit: FitConfig, body: impl FnOnce(&Evaluator<'_>) -> T) -> T {
        let writer = RunLogWriter::create(&self.path).unwrap();
        let out = {
            let ev = Evaluator::new(dataset, LAMBDA, fit)
                .unwrap()
                .with_observer(|r| writer.append(&RunLogRecord::from_result(r)));
            body(&ev)
        };
        writer.finish().unwrap();
        out
    }

    fn records(&self) -> Vec<RunLogRecord> {
        read_run_log(&self.path).unwrap()
    }

    fn structures(&self) -> Vec<Vec<usize>> {
        self.records().into_iter().map(|r| r.ranks).collect()
    }
}

// ---------------------------------------------------------------------------
// 1. Contraction against brute-force summation over all bond tuples.

fn random_instance(rng: &mut ChaCha8Rng) -> (TNStructure, Vec<usize>, CoreSet) {
    let order = rng.random_range(2..=4);
    let shape: Vec<usize> = (0..order).map(|_| rng.random_range(1..=3)).collect();
    let ranks: Vec<usize> = (0..order * (order - 1) / 2).map(|_| rng.random_range(1..=3)).collect();
    let structure = TNStructure::new(order, ranks).unwrap();
    let cores = (0..order)
        .map(|i| {
            let s = structure.core_shape(i, shape[i]);
            let n: usize = s.iter().product();
            DenseTensor::new(s, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
        })
        .collect();
    (structure, shape, CoreSet::new(cores))
}

fn row_major(index: &[usize], shape: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

fn odometer(index: &mut [usize], bounds: &[usize]) -> bool {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < bounds[k] {
            return true;
        }
        index[k] = 0;
    }
    false
}

/// Sums the product of core entries over every physical and bond index tuple.
fn brute_force(structure: &TNStructure, shape: &[usize], cores: &CoreSet) -> Vec<f64> {
    let n = structure.order();
    let bonds = structure.ranks().to_vec();
    let mut out = vec![0.0; shape.iter().product()];
    let mut phys = vec![0usize; n];
    loop {
        let mut bond = vec![0usize; bonds.len()];
        let mut total = 0.0;
        loop {
            let mut prod = 1.0;
            for (i, core) in cores.cores().iter().enumerate() {
                let mut idx = vec![phys[i]];
                for j in (0..n).filter(|&j| j != i) {
                    idx.push(bond[structure.pair_index(i.min(j), i.max(j))]);
                }
                prod *= core.values()[row_major(&idx, core.shape())];
            }
            total += prod;
            if !odometer(&mut bond, &bonds) {
                break;
            }
        }
        out[row_major(&phys, shape)] = total;
        if !odometer(&mut phys, shape) {
            break;
        }
    }
    out
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let (structure, shape, cores) = random_instance(&mut rng);
        let fast = tnc_contract(&cores, &structure).map_err(|e| e.to_string())?;
        let slow = brute_force(&structure, &shape, &cores);
        let diff = fast.values().iter().zip(&slow).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = slow.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let rel = diff / norm;
        worst = worst.max(rel);
        ensure(rel <= CONTRACTION_RTOL, || format!("instance {k} ({structure}, shape {shape:?}): rel err {rel:.2e}"))?;
    }
    Ok(format!("50 instances, worst relative error {worst:.2e} (tol {CONTRACTION_RTOL:e})"))
}

// ---------------------------------------------------------------------------
// 2. Analytic gradient against central finite differences.

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (structure, shape, _) = random_instance(&mut rng);
        let n: usize = shape.iter().product();
        let sample = DenseTensor::new(shape.clone(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let cores = init_cores(&structure, &shape, k).map_err(|e| e.to_string())?;
        let (_, grads) = loss_and_gradient(&sample, &cores, &structure).map_err(|e| e.to_string())?;
        let loss_at = |c: &CoreSet| loss_and_gradient(&sample, c, &structure).unwrap().0;

        let (mut diff2, mut ref2) = (0.0, 0.0);
        for (i, grad) in grads.iter().enumerate() {
            for e in 0..grad.len() {
                let shifted = |delta: f64| {
                    let mut c = cores.clone();
                    let core = &c.cores()[i];
                    let mut values = core.values().to_vec();
                    values[e] += delta;
                    c.cores_mut()[i] = DenseTensor::new(core.shape().to_vec(), values).unwrap();
                    c
                };
                let fd = (loss_at(&shifted(FD_STEP)) - loss_at(&shifted(-FD_STEP))) / (2.0 * FD_STEP);
                diff2 += (grad.values()[e] - fd).powi(2);
                ref2 += fd * fd;
            }
        }
        let rel = diff2.sqrt() / ref2.sqrt().max(1e-12);
        worst = worst.max(rel);
        ensure(rel <= GRADIENT_RTOL, || format!("instance {k} ({structure}): rel err {rel:.2e}"))?;
    }
    Ok(format!("20 instances, worst relative error {worst:.2e} (tol {GRADIENT_RTOL:e}, h = {FD_STEP:e})"))
}

// ---------------------------------------------------------------------------
// 3. Exhaustive search recovers the planted structure.

fn criterion_3(data: &TensorDataset, log: &Logged) -> Result<(String, EvaluationResult), String> {
    let (best, planted_obj) = log.run(data, fit(0), |ev| {
        let best = exhaustive_search(ev, 3, R_MAX).map_err(|e| e.to_string())?;
        let planted_obj = ev.evaluate(&planted(), Source::Init).map_err(|e| e.to_string())?.into_result().objective;
        Ok::<_, String>((best, planted_obj))
    })?;
    ensure(log.records().len() == R_MAX.pow(3), || format!("{} structures logged", log.records().len()))?;
    ensure(best.mean_relative_error < PLANTED_ERR_MAX, || {
        format!("best {} has mean error {:.3e}", best.structure, best.mean_relative_error)
    })?;
    ensure(best.objective <= planted_obj + PLANTED_OBJ_SLACK, || {
        format!("best objective {:.6} vs planted {:.6}", best.objective, planted_obj)
    })?;
    let msg = format!(
        "best {} objective {:.5} (planted {:.5}), mean error {:.2e}",
        best.structure, best.objective, planted_obj, best.mean_relative_error
    );
    Ok((msg, best))
}

// ---------------------------------------------------------------------------
// 4. Local search lands near the exhaustive optimum.

fn criterion_4(data: &TensorDataset, optimum: f64, dir: &Path) -> Check {
    let ones = TNStructure::all_ones(3).unwrap();
    let stopping = StoppingConfig {
        max_evals: 250,
        ..StoppingConfig::default()
    };
    let tnale = Logged::new(dir, "c4_tnale").run(data, fit(0), |ev| {
        run_local_search(ev, &ones, &Strategy::Alternating(EnumConfig::new(R_MAX)), &stopping)
    });
    let tnale = tnale.map_err(|e| e.to_string())?;
    let gap = tnale.best.objective - optimum;
    ensure(tnale.evals_used <= 250, || format!("alternating used {} evaluations", tnale.evals_used))?;
    ensure(gap <= TNALE_GAP, || format!("alternating gap {gap:.4} > {TNALE_GAP}"))?;

    let mut objectives = Vec::new();
    for seed in 0..3u64 {
        let strategy = Strategy::Neighborhood(NeighborhoodConfig::new(4, R_MAX, seed));
        let state = Logged::new(dir, &format!("c4_tnls_{seed}"))
            .run(data, fit(0), |ev| run_local_search(ev, &ones, &strategy, &stopping))
            .map_err(|e| e.to_string())?;
        ensure(state.evals_used <= 250, || format!("seed {seed} used {} evaluations", state.evals_used))?;
        objectives.push(state.best.objective);
    }
    let mean = objectives.iter().sum::<f64>() / 3.0;
    ensure(mean - optimum <= TNLS_GAP, || format!("neighborhood mean gap {:.4} > {TNLS_GAP}", mean - optimum))?;
    Ok(format!(
        "alternating gap {gap:.2e} in {} evals; neighborhood mean gap {:.2e} over seeds 0-2",
        tnale.evals_used,
        mean - optimum
    ))
}

// ---------------------------------------------------------------------------
// 5. LLM search stops after exactly `patience` non-improving evaluations.

const WORSE: [[usize; 3]; 5] = [[4, 2, 1], [3, 3, 1], [3, 2, 2], [2, 2, 1], [1, 1, 1]];

fn criterion_5(data: &TensorDataset, log: &Logged) -> Check {
    let mut script = vec![scripted_reply(&PLANTED)];
    script.extend(WORSE.iter().map(|r| scripted_reply(r)));
    let extras = [[4, 4, 4], [2, 3, 4], [1, 2, 3]];
    script.extend(extras.iter().map(|r| scripted_reply(r)));
    let client = ScriptedClient::new(script);
    let stopping = StoppingConfig::default();
    let (state, _) = log
        .run(data, fit(0), |ev| run_llm_search(ev, &domain(), &client, &stopping, &LlmSearchConfig::new(R_MAX)))
        .map_err(|e| e.to_string())?;
    ensure(state.best.structure == planted(), || format!("best is {}", state.best.structure))?;
    ensure(state.evals_used == 1 + stopping.patience, || format!("{} evaluations", state.evals_used))?;
    ensure(client.remaining() == extras.len(), || format!("{} replies left unread", client.remaining()))?;
    Ok(format!(
        "stopped after 1 + {} evaluations, {} scripted replies unused",
        state.evals_used - 1,
        client.remaining()
    ))
}

// ---------------------------------------------------------------------------
// 6. Scripted LLM search end to end.

const SCRIPT_6: [[usize; 3]; 6] = [[1, 1, 1], [2, 1, 1], [2, 2, 1], [4, 2, 1], [3, 2, 1], [3, 3, 1]];

fn criterion_6(data: &TensorDataset, log: &Logged) -> Check {
    let client = ScriptedClient::new(SCRIPT_6.iter().map(|r| scripted_reply(r)));
    let stopping = StoppingConfig {
        max_evals: SCRIPT_6.len(),
        ..StoppingConfig::default()
    };
    let (state, dialogue) = log
        .run(data, fit(0), |ev| run_llm_search(ev, &domain(), &client, &stopping, &LlmSearchConfig::new(R_MAX)))
        .map_err(|e| e.to_string())?;
    let records = log.records();
    ensure(records.len() == 6, || format!("{} run log records", records.len()))?;
    ensure(dialogue.explanations.len() == 6, || format!("{} explanations", dialogue.explanations.len()))?;

    // Independent evaluation of every scripted structure.
    let ev = Evaluator::new(data, LAMBDA, fit(0)).unwrap();
    let direct: Vec<EvaluationResult> = SCRIPT_6
        .iter()
        .map(|r| ev.evaluate(&TNStructure::new(3, r.to_vec()).unwrap(), Source::Llm).unwrap().into_result())
        .collect();
    let argmin = direct.iter().reduce(|a, b| if b.better_than(a) { b } else { a }).unwrap();
    ensure(state.best.structure == argmin.structure, || {
        format!("best {} but direct argmin {}", state.best.structure, argmin.structure)
    })?;
    ensure(state.best.objective == argmin.objective, || "objective differs from direct evaluation".into())?;
    Ok(format!("6 records, 6 explanations, best {} = direct argmin", state.best.structure))
}

// ---------------------------------------------------------------------------
// 7. Hybrid warm start beats vanilla alternating search to the best.

fn criterion_7(data: &TensorDataset, dir: &Path) -> Check {
    let stopping = StoppingConfig {
        max_evals: 50,
        ..StoppingConfig::default()
    };
    let strategy = Strategy::Alternating(EnumConfig::new(R_MAX));
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let mut script = vec![scripted_reply(&PLANTED)];
        script.extend(WORSE.iter().map(|r| scripted_reply(r)));
        let client = ScriptedClient::new(script);
        let hybrid = Logged::new(dir, &format!("c7_hybrid_{seed}"))
            .run(data, fit(seed), |ev| {
                hybrid_search(ev, &domain(), &client, &LlmSearchConfig::new(R_MAX), 10, &strategy, &stopping)
            })
            .map_err(|e| e.to_string())?
            .0;
        let vanilla = Logged::new(dir, &format!("c7_vanilla_{seed}"))
            .run(data, fit(seed), |ev| {
                run_local_search(ev, &TNStructure::all_ones(3).unwrap(), &strategy, &stopping)
            })
            .map_err(|e| e.to_string())?;
        let (h, v) = (hybrid.evals_to_best().unwrap(), vanilla.evals_to_best().unwrap());
        ensure(hybrid.evals_used <= 50, || format!("seed {seed}: hybrid used {}", hybrid.evals_used))?;
        ensure(hybrid.best.objective <= vanilla.best.objective, || {
            format!("seed {seed}: hybrid {:.5} > vanilla {:.5}", hybrid.best.objective, vanilla.best.objective)
        })?;
        ensure(h < v, || format!("seed {seed}: evals to best hybrid {h} vs vanilla {v}"))?;
        lines.push(format!("seed {seed}: {h} vs {v}"));
    }
    Ok(format!("evals to best (hybrid vs vanilla) {}", lines.join("; ")))
}

// ---------------------------------------------------------------------------
// 8. Parser fuzz.

const WORDS: [&str; 12] = [
    "rank", "mode", "coupling", "strong", "weak", "the", "pixels", "channel", "time", "we", "suggest", "because",
];

fn prose(rng: &mut ChaCha8Rng) -> String {
    let lines = rng.random_range(0..4);
    (0..lines)
        .map(|_| {
            let n = rng.random_range(1..10);
            (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for k in 0..100 {
        let order = rng.random_range(2..=6);
        let r_max = rng.random_range(1..=32);
        let ranks: Vec<usize> = (0..order * (order - 1) / 2).map(|_| rng.random_range(1..=r_max)).collect();
        let reply = format!("{}\n{}\n{}", prose(&mut rng), ranks_line(&ranks), prose(&mut rng));
        let (s, _) = parse_solution(&reply, order, r_max).map_err(|e| format!("case {k}: {e}"))?;
        ensure(s.ranks() == ranks.as_slice(), || format!("case {k}: parsed {s}, wanted {ranks:?}"))?;
    }

    let mut malformed = 0;
    for k in 0..20 {
        let order = rng.random_range(3..=5);
        let m = order * (order - 1) / 2;
        let r_max = 8;
        let mut tokens: Vec<String> = (0..m).map(|_| rng.random_range(1..=r_max).to_string()).collect();
        let slot = rng.random_range(0..m);
        let (expected, label) = match k % 3 {
            0 => {
                tokens.pop();
                (ParseError::Arity { expected: m, found: m - 1 }, "arity")
            }
            1 => {
                tokens[slot] = format!("{}.5", tokens[slot]);
                (ParseError::NotInteger(tokens[slot].clone()), "float")
            }
            _ => {
                tokens[slot] = (r_max + 1 + slot).to_string();
                let value = (r_max + 1 + slot) as i64;
                (ParseError::OutOfBounds { value, min: 1, max: r_max }, "bounds")
            }
        };
        let reply = format!("{}\nRANKS: [{}]", prose(&mut rng), tokens.join(", "));
        let got = parse_solution(&reply, order, r_max).map(|(s, _)| s);
        ensure(got.as_ref().err() == Some(&expected), || format!("malformed case {k} ({label}): got {got:?}"))?;
        malformed += 1;
    }
    Ok(format!("100 well-formed replies round-trip; {malformed} malformed replies rejected"))
}

// ---------------------------------------------------------------------------

fn report(n: u32, elapsed: Duration, limit: Option<Duration>, check: Check) -> bool {
    let check = match (check, limit) {
        (Ok(msg), Some(limit)) if elapsed > limit => Err(format!("{msg}; took {elapsed:.1?} > {limit:?}")),
        (c, _) => c,
    };
    match check {
        Ok(msg) => {
            println!("criterion {n}: PASS ({elapsed:.1?}) {msg}");
            true
        }
        Err(msg) => {
            println!("criterion {n}: FAIL ({elapsed:.1?}) {msg}");
            false
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Runs criteria 3-7 once, logging every evaluation under `dir`.
fn run_planted_criteria(data: &TensorDataset, dir: &Path, print: bool) -> Vec<bool> {
    let show = |n, t, limit, check: Check| {
        if print {
            report(n, t, limit, check)
        } else {
            check.is_ok()
        }
    };
    let mut results = Vec::new();
    let (c3, t3) = timed(|| criterion_3(data, &Logged::new(dir, "c3")));
    let optimum = c3.as_ref().map(|(_, best)| best.objective).ok();
    results.push(show(3, t3, Some(Duration::from_secs(300)), c3.map(|(m, _)| m)));
    let (c4, t4) = timed(|| match optimum {
        Some(opt) => criterion_4(data, opt, dir),
        None => Err("needs the exhaustive optimum from criterion 3".into()),
    });
    results.push(show(4, t4, Some(Duration::from_secs(600)), c4));
    let (c5, t5) = timed(|| criterion_5(data, &Logged::new(dir, "c5")));
    results.push(show(5, t5, None, c5));
    let (c6, t6) = timed(|| criterion_6(data, &Logged::new(dir, "c6")));
    results.push(show(6, t6, None, c6));
    let (c7, t7) = timed(|| criterion_7(data, dir));
    results.push(show(7, t7, None, c7));
    results
}

fn structure_sequences(dir: &Path) -> Vec<(String, Vec<Vec<usize>>)> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".jsonl"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let seq = Logged { path: dir.join(&n) }.structures();
            (n, seq)
        })
        .collect()
}

fn criterion_9(data: &TensorDataset, first: &Path) -> Check {
    let second = tempfile::tempdir().unwrap();
    let passed = run_planted_criteria(data, second.path(), false);
    ensure(passed.iter().all(|&p| p), || "a rerun criterion failed".into())?;
    let (a, b) = (structure_sequences(first), structure_sequences(second.path()));
    ensure(!a.is_empty(), || "no run logs written".into())?;
    ensure(a.len() == b.len(), || format!("{} vs {} run logs", a.len(), b.len()))?;
    let mut total = 0;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, || format!("{name}: structure sequences differ"))?;
        total += x.len();
    }
    Ok(format!("{} run logs, {total} evaluations, identical structure sequences", a.len()))
}

fn main() -> ExitCode {
    let mut ok = Vec::new();
    let (c1, t1) = timed(criterion_1);
    ok.push(report(1, t1, Some(Duration::from_secs(10)), c1));
    let (c2, t2) = timed(criterion_2);
    ok.push(report(2, t2, Some(Duration::from_secs(30)), c2));

    let data = instance();
    let logs = tempfile::tempdir().unwrap();
    ok.extend(run_planted_criteria(&data, logs.path(), true));

    let (c8, t8) = timed(criterion_8);
    ok.push(report(8, t8, None, c8));
    let (c9, t9) = timed(|| criterion_9(&data, logs.path()));
    ok.push(report(9, t9, None, c9));

    let passed = ok.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed == ok.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
