//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Criteria 1-8 run twice, in a 1-thread and an
//! 8-thread pool; criterion 9 compares the two transcripts and a set of CLI
//! invocations run with `--jobs 1` and `--jobs 8`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ilc::codec::{self, Archive, CompressedRecord};
use ilc::coverfree::{self, SetFamily};
use ilc::distinguisher::{self, DescriptorBuilder};
use ilc::expander::{self, Seed, SeedSpace, SplitMix64};
use ilc::isolation::{self, Variant};
use ilc::language::{ceil_log2, LanguageSlice};
use ilc::{BitString, Gf2Matrix};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn lib<T>(r: ilc::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn work_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn ilc_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ilc"))
}

/// Everything a run produces that must not depend on the thread count.
#[derive(Default)]
struct Run {
    transcript: String,
    archives: Vec<(String, Vec<u8>)>,
    corpus: Vec<Compressed>,
}

impl Run {
    fn log(&mut self, line: String) {
        self.transcript.push_str(&line);
        self.transcript.push('\n');
    }
}

struct Compressed {
    spec: String,
    n: usize,
    k: usize,
    size: u64,
    records: Vec<CompressedRecord>,
    examined: Vec<u64>,
}

fn random_set(n: usize, size: usize, state: u64) -> Vec<BitString> {
    let mut rng = SplitMix64::from_state(state);
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut picked = BTreeSet::new();
    while picked.len() < size {
        picked.insert(rng.next_u64() & mask);
    }
    picked.into_iter().map(|i| BitString::from_lex_index(n, i).unwrap()).collect()
}

/// Writes an explicit-set file at a fixed path and returns its spec.
fn explicit_spec(n: usize, size: usize) -> String {
    let dir = work_dir().join("languages");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("random-n{n}-s{size}.txt"));
    let text: String = random_set(n, size, 0xACCE_0000 + (n * 1000 + size) as u64)
        .iter()
        .map(|x| format!("{x}\n"))
        .collect();
    fs::write(&path, text).unwrap();
    format!("explicit:{}", path.display())
}

fn corpus_specs() -> Vec<String> {
    let mut specs = vec!["hamming:12:2".to_string(), "hamming:16:1".to_string()];
    for n in [8, 16, 20] {
        for size in [1, 2, 100] {
            specs.push(explicit_spec(n, size));
        }
    }
    specs
}

fn c1_round_trip(run: &mut Run) -> Outcome {
    let space = SeedSpace::default();
    let mut total = 0;
    for spec in corpus_specs() {
        let lang = lib(LanguageSlice::from_spec(&spec))?;
        let k = lib(lang.choose_k())?;
        let members = lib(lang.members())?;
        let records = lib(codec::encode_many(&members, &lang, k, space))?;
        let bytes = lib(Archive::new(lang.n(), k, &spec, records.clone()).to_bytes())?;
        let back = lib(Archive::from_bytes(&bytes))?;
        ensure!(back.records == records, "{spec}: archive round trip changed records");
        let decoded = lib(codec::decode_many(&back.records, &lang))?;
        for (x, d) in members.iter().zip(&decoded) {
            ensure!(&d.value == x, "{spec}: {x} decoded to {}", d.value);
        }
        let name = spec.rsplit('/').next().unwrap().to_string();
        run.log(format!(
            "c1 lang={name} n={} k={k} members={} max_seed={}",
            lang.n(),
            members.len(),
            records.iter().map(|r| r.seed.0).max().unwrap_or(0)
        ));
        run.archives.push((name, bytes));
        total += members.len();
        run.corpus.push(Compressed {
            spec: spec.clone(),
            n: lang.n(),
            k,
            size: members.len() as u64,
            examined: decoded.iter().map(|d| d.examined).collect(),
            records,
        });
    }
    Ok(format!("{total} members over {} languages decode to themselves", run.corpus.len()))
}

fn c2_length_shape(run: &mut Run) -> Outcome {
    ensure!(!run.corpus.is_empty(), "needs the corpus of criterion 1");
    let dir = work_dir().join(format!("stats-{}", rayon::current_num_threads()));
    fs::create_dir_all(&dir).unwrap();
    let mut checked = 0;
    let mut worst = 0;
    for c in &run.corpus {
        for r in &c.records {
            ensure!(codec::compressed_bits(r) == c.k + 1 + 80, "{}: record of {} bits", c.spec, codec::compressed_bits(r));
            checked += 1;
        }
        let path = dir.join("a.ilc");
        let archive = Archive::new(c.n, c.k, &c.spec, c.records.clone());
        fs::write(&path, lib(archive.to_bytes())?).unwrap();
        let out = ilc_bin()
            .args(["--format", "lines", "stats", "--archive"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "stats failed: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        let lg = lib(ceil_log2(c.size))?;
        for line in text.lines() {
            let field = |key: &str| {
                line.split(' ')
                    .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                    .map(str::to_owned)
            };
            let overhead: usize = field("overhead").ok_or("no overhead field")?.parse().map_err(|_| "overhead is not a number")?;
            let bits: usize = field("bits_per_record").or_else(|| field("bits")).ok_or("no bits field")?.parse().unwrap();
            ensure!(bits == c.k + 81, "{}: stats reports {bits} bits", c.spec);
            ensure!(overhead == bits - lg, "{}: stats overhead {overhead} != {bits} - {lg}", c.spec);
            ensure!(overhead <= 81, "{}: overhead {overhead} exceeds 81", c.spec);
            worst = worst.max(overhead);
        }
    }
    let lang = lib(LanguageSlice::from_spec("hamming:12:2"))?;
    let builder = DescriptorBuilder::new();
    let k = lib(lang.choose_k())?;
    for x in lib(lang.members())?.iter() {
        let p = lib(builder.build(x, &lang, k, SeedSpace::default()))?;
        ensure!(distinguisher::descriptor_bits(&p) == k + 81, "descriptor of {x} has wrong size");
        checked += 1;
    }
    run.log(format!("c2 payloads={checked} worst_overhead={worst}"));
    Ok(format!("{checked} payloads of exactly k+81 bits; stats overhead at most {worst}"))
}

fn all_matrices(rows: usize, cols: usize) -> Vec<Gf2Matrix> {
    (0..1u64 << (rows * cols))
        .map(|code| {
            let mut h = Gf2Matrix::zeros(rows, cols).unwrap();
            for p in 0..rows * cols {
                h.set(p / cols, p % cols, code >> p & 1 == 1);
            }
            h
        })
        .collect()
}

fn c3_collisions(run: &mut Run) -> Outcome {
    for (n, k) in [(2usize, 0usize), (3, 0), (3, 1)] {
        let hs = all_matrices(k + 1, n);
        for a in 0..1u64 << n {
            for b in a + 1..1u64 << n {
                let x = BitString::from_lex_index(n, a).unwrap();
                let y = BitString::from_lex_index(n, b).unwrap();
                let hits = hs.iter().filter(|h| h.matvec(&x).unwrap() == h.matvec(&y).unwrap()).count();
                // hits / |H| == 2^-(k+1), compared in integers
                ensure!(
                    hits << (k + 1) == hs.len(),
                    "(n={n}, k={k}) pair {x},{y}: {hits} of {} collide",
                    hs.len()
                );
            }
        }
        run.log(format!("c3 n={n} k={k} matrices={} fraction=2^-{}", hs.len(), k + 1));
    }
    Ok("collision fraction is exactly 2^-(k+1) for every pair".into())
}

fn c4_coverage(run: &mut Run) -> Outcome {
    let trials = 10_000;
    let mut worst = f64::INFINITY;
    for k in 3..=6 {
        let members = random_set(16, 1 << k, 0xC0DE + k as u64);
        let lang = lib(LanguageSlice::explicit(16, format!("random-16-{k}"), members))?;
        for (variant, bound) in [(Variant::T, 0.5), (Variant::TTilde, 1.0 / 3.0)] {
            let est = lib(isolation::estimate_coverage_probability(&lang, k, variant, trials, Seed(42 + k as u64)))?;
            let slack = (est.estimate - bound) / est.stderr.max(f64::MIN_POSITIVE);
            run.log(format!(
                "c4 k={k} variant={variant} successes={} trials={trials}",
                est.successes
            ));
            ensure!(
                est.estimate >= bound - 3.0 * est.stderr,
                "k={k} {variant}: {:.4} below {bound:.4} - 3 x {:.4}",
                est.estimate,
                est.stderr
            );
            worst = worst.min(slack);
        }
    }
    Ok(format!("all estimates above bound - 3 sigma (closest: {worst:+.1} sigma)"))
}

fn c5_full_rank(run: &mut Run) -> Outcome {
    use rayon::prelude::*;
    let mut detail = Vec::new();
    for (n, k) in [(8usize, 3usize), (16, 7)] {
        let trials = 20_000u64;
        let full: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let tuple = expander::tuple_from_state(expander::trial_state(Seed(5), t), n, k).unwrap();
                tuple.matrices().iter().filter(|h| h.is_full_row_rank()).count() as u64
            })
            .sum();
        let samples = trials * (k as u64 + 1);
        let p: f64 = (0..=k).map(|j| 1.0 - 2f64.powi(j as i32 - n as i32)).product();
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let observed = full as f64 / samples as f64;
        run.log(format!("c5 n={n} k={k} full={full} samples={samples}"));
        ensure!(
            (observed - p).abs() <= 3.0 * sigma,
            "(n={n}, k={k}): observed {observed:.5}, expected {p:.5} +- 3 x {sigma:.5}"
        );
        detail.push(format!("({n},{k}) {:+.1} sigma", (observed - p) / sigma));
    }
    let count = all_matrices(2, 3).iter().filter(|h| h.is_full_row_rank()).count();
    let expect = (8 - 1) * (8 - 2);
    ensure!(count == expect, "n=3, k=1: {count} full-rank matrices, expected {expect}");
    run.log(format!("c5 exact n=3 k=1 full={count}"));
    Ok(format!("{}; exact count 42 at n=3, k=1", detail.join(", ")))
}

fn c6_preimages(run: &mut Run) -> Outcome {
    ensure!(!run.corpus.is_empty(), "needs the corpus of criterion 1");
    let mut decodes = 0;
    for c in &run.corpus {
        let bound = 1u64 << (c.n - c.k - 1);
        for &e in &c.examined {
            ensure!(e <= bound, "{}: decode examined {e} > {bound}", c.spec);
            decodes += 1;
        }
    }
    let mut partitions = 0;
    for n in [3usize, 6, 9, 12] {
        for k in [0, n / 2, n - 1] {
            for t in 0..4u64 {
                let tuple = expander::tuple_from_state(expander::trial_state(Seed(6), t), n, k).unwrap();
                for h in tuple.matrices() {
                    let mut owner = vec![u64::MAX; 1 << n];
                    let rank_size = 1u64 << (n - h.rank());
                    for d in 0..1u64 << (k + 1) {
                        let y = BitString::from_lex_index(k + 1, d).unwrap();
                        let pre = lib(h.enumerate_preimages(&y))?;
                        let total = pre.total();
                        ensure!(total == 0 || total == rank_size, "preimage of size {total}");
                        for v in pre {
                            ensure!(lib(h.matvec(&v))? == y, "preimage of {y} maps elsewhere");
                            let i = v.lex_index().unwrap() as usize;
                            ensure!(owner[i] == u64::MAX, "{v} in two preimages");
                            owner[i] = d;
                        }
                        if h.is_full_row_rank() {
                            ensure!(total == 1 << (n - k - 1), "full-rank preimage of size {total}");
                        }
                    }
                    ensure!(owner.iter().all(|&o| o != u64::MAX), "preimages miss part of the cube");
                    partitions += 1;
                }
            }
        }
    }
    run.log(format!("c6 decodes={decodes} partitions={partitions}"));
    Ok(format!("{decodes} decodes within 2^(n-k-1); {partitions} hashes partition the cube"))
}

fn c7_distinguisher(run: &mut Run) -> Outcome {
    let lang = lib(LanguageSlice::from_spec("hamming:12:2"))?;
    let k = lib(lang.choose_k())?;
    let builder = DescriptorBuilder::new();
    let members = lib(lang.members())?;
    let mut bytes = Vec::new();
    for x in members.iter() {
        let p = lib(builder.build(x, &lang, k, SeedSpace::default()))?;
        ensure!(lib(distinguisher::run_descriptor(&p, x, &lang))?, "descriptor of {x} rejects x");
        let accepted = lib(distinguisher::count_accepted(&p, &lang, true))?;
        ensure!(accepted == 1, "descriptor of {x} accepts {accepted} strings");
        bytes.extend(lib(Archive::new(12, k, lang.spec(), vec![p]).to_bytes())?);
    }
    run.log(format!("c7 descriptors={}", members.len()));
    run.archives.push(("descriptors".into(), bytes));
    Ok(format!("each of {} descriptors accepts exactly its string in a 4096-string sweep", members.len()))
}

fn random_family(rng: &mut SplitMix64) -> (SetFamily, usize) {
    let n = 2 + (rng.next_u64() % 15) as usize;
    let m = 1 + (rng.next_u64() % 24) as usize;
    let density = 1 + rng.next_u64() % 4;
    let mut sets = BTreeSet::new();
    let mut attempts = 0;
    while sets.len() < n && attempts < 1000 {
        attempts += 1;
        let set: Vec<usize> = (1..=m).filter(|_| rng.next_u64() % 8 < density).collect();
        sets.insert(set);
    }
    let family = SetFamily::new(m, sets.into_iter().collect()).unwrap();
    let k = 1 + (rng.next_u64() % 3) as usize;
    let k = k.min(family.len().saturating_sub(1)).max(1);
    (family, k)
}

fn c8_cover_free(run: &mut Run) -> Outcome {
    let mut rng = SplitMix64::from_state(0x00C0_FFEE);
    let (mut free, mut tested) = (0, 0);
    while tested < 500 {
        let (f, k) = random_family(&mut rng);
        if f.len() < 2 {
            continue;
        }
        tested += 1;
        let a = lib(coverfree::is_k_cover_free(&f, k))?;
        let witness = lib(coverfree::find_cover_violation(&f, k))?;
        ensure!(a == witness.is_none(), "oracles disagree on family {:?} at k={k}", f.members());
        if let Some(v) = witness {
            let sets = f.members();
            let covered = v.coverers.iter().fold(BTreeSet::new(), |mut u, &j| {
                u.extend(sets[j].iter().copied());
                u
            });
            ensure!(
                !v.coverers.contains(&v.covered) && sets[v.covered].iter().all(|e| covered.contains(e)),
                "bogus witness {v:?}"
            );
        }
        free += a as usize;
    }
    for n in 2..=16usize {
        let singletons = SetFamily::new(n, (1..=n).map(|i| vec![i]).collect()).unwrap();
        let blocks = SetFamily::new(2 * n, (0..n).map(|i| vec![2 * i + 1, 2 * i + 2]).collect()).unwrap();
        for k in 1..=3.min(n - 1) {
            ensure!(lib(coverfree::is_k_cover_free(&singletons, k))?, "singletons N={n} fail at k={k}");
            ensure!(lib(coverfree::find_cover_violation(&blocks, k))?.is_none(), "blocks N={n} fail at k={k}");
        }
    }
    let bad = SetFamily::new(2, vec![vec![1, 2], vec![1], vec![2]]).unwrap();
    ensure!(!lib(coverfree::is_k_cover_free(&bad, 2))?, "{{1,2}},{{1}},{{2}} passes at k=2");
    ensure!(lib(coverfree::find_cover_violation(&bad, 2))?.is_some(), "no witness for {{1,2}},{{1}},{{2}}");
    let dr = lib(coverfree::dr_lower_bound(64, 4, 1.0))?;
    ensure!(dr.to_string() == "19.2", "DR(64, 4, 1) = {dr}");
    run.log(format!("c8 families={tested} cover_free={free} dr={dr}"));
    Ok(format!("oracles agree on {tested} families ({free} cover-free); DR(64,4,1) = {dr}"))
}

type Criterion = fn(&mut Run) -> Outcome;

const CRITERIA: [(&str, Criterion, u64); 8] = [
    ("round trip", c1_round_trip, 60),
    ("record size", c2_length_shape, 60),
    ("collision probability", c3_collisions, 10),
    ("coverage bounds", c4_coverage, 120),
    ("full-rank statistics", c5_full_rank, 60),
    ("preimage bound", c6_preimages, 60),
    ("distinguisher uniqueness", c7_distinguisher, 60),
    ("cover-free oracles", c8_cover_free, 60),
];

fn run_all(threads: usize) -> (Run, Vec<(Outcome, Duration)>) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let mut run = Run::default();
        let results = CRITERIA
            .iter()
            .map(|(_, f, budget)| {
                let start = Instant::now();
                let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut run)))
                    .unwrap_or_else(|p| Err(panic_message(p)));
                let took = start.elapsed();
                let outcome = outcome.and_then(|d| {
                    if took > Duration::from_secs(*budget) {
                        Err(format!("{d}, but took {took:.1?} (budget {budget} s)"))
                    } else {
                        Ok(d)
                    }
                });
                (outcome, took)
            })
            .collect();
        (run, results)
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown payload".into());
    format!("panicked: {msg}")
}

/// Runs a fixed CLI session and returns its stdout plus every output file.
fn cli_session(jobs: usize) -> Result<String, String> {
    let dir = work_dir().join(format!("cli-jobs{jobs}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    let family = dir.join("family.txt");
    fs::write(&family, "6 4\n1 2\n3 4\n5 6\n1 3 5\n").unwrap();
    let explicit = explicit_spec(16, 100);
    let p = |name: &str| dir.join(name).display().to_string();
    let sessions: Vec<Vec<String>> = vec![
        vec!["compress", "--lang", "hamming:12:2", "--all", "--out", &p("h.ilc")],
        vec!["decompress", "--archive", &p("h.ilc"), "--lang", "hamming:12:2", "--out", &p("h.txt")],
        vec!["compress", "--lang", &explicit, "--all", "--out", &p("e.ilc")],
        vec!["decompress", "--archive", &p("e.ilc"), "--lang", &explicit, "--out", &p("e.txt")],
        vec!["stats", "--archive", &p("e.ilc")],
        vec!["distinguish", "build", "--lang", "hamming:12:2", "--x", "000100000100", "--out", &p("d.ilc")],
        vec!["distinguish", "verify", "--descriptor", &p("d.ilc"), "--lang", "hamming:12:2", "--full-sweep"],
        vec!["distinguish", "run", "--descriptor", &p("d.ilc"), "--lang", "hamming:12:2", "--candidate", "000100000100"],
        vec!["verify", "isolation", "--lang", "hamming:12:1", "--k", "4", "--variant", "Ttilde", "--trials", "5000", "--mc-seed", "9"],
        vec!["coverfree", "check", "--family", &p("family.txt"), "--k", "2"],
        vec!["drbound", "--N", "64", "--k", "4", "--c", "1"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut transcript = String::new();
    for args in sessions {
        let out = ilc_bin()
            .args(["--jobs", &jobs.to_string(), "--format", "lines"])
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.success(),
            "ilc {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        );
        transcript.push_str(&String::from_utf8_lossy(&out.stdout));
    }
    for name in ["h.ilc", "h.txt", "e.ilc", "e.txt", "d.ilc"] {
        let bytes = fs::read(dir.join(name)).map_err(|e| e.to_string())?;
        writeln!(transcript, "{name} {}", bytes.iter().map(|b| format!("{b:02x}")).collect::<String>()).unwrap();
    }
    Ok(transcript)
}

fn c9_determinism(one: &Run, eight: &Run) -> Outcome {
    ensure!(one.transcript == eight.transcript, "library transcripts differ between 1 and 8 threads");
    ensure!(one.archives == eight.archives, "archives differ between 1 and 8 threads");
    let cli1 = cli_session(1)?;
    let cli8 = cli_session(8)?;
    ensure!(cli1 == cli8, "CLI output differs between --jobs 1 and --jobs 8");
    let bytes: usize = one.archives.iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "{} transcript lines, {} archives ({bytes} bytes) and {} CLI output lines identical",
        one.transcript.lines().count(),
        one.archives.len(),
        cli1.lines().count()
    ))
}

fn report(id: usize, name: &str, outcome: &Outcome, took: Duration) -> bool {
    match outcome {
        Ok(detail) => println!("criterion {id} [{name}]: PASS ({detail}) in {took:.2?}"),
        Err(why) => println!("criterion {id} [{name}]: FAIL ({why}) in {took:.2?}"),
    }
    outcome.is_ok()
}

fn main() {
    fs::create_dir_all(work_dir()).unwrap();
    let (eight, results) = run_all(8);
    let mut ok = true;
    for (id, ((name, _, _), (outcome, took))) in CRITERIA.iter().zip(&results).enumerate() {
        ok &= report(id + 1, name, outcome, *took);
    }
    let start = Instant::now();
    let (one, _) = run_all(1);
    let outcome = catch_unwind(AssertUnwindSafe(|| c9_determinism(&one, &eight)))
        .unwrap_or_else(|p| Err(panic_message(p)));
    ok &= report(9, "determinism", &outcome, start.elapsed());
    if !ok {
        std::process::exit(1);
    }
}
