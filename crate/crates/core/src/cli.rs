//! The `ilc` command line.
//!
//! Exit status is 0 on success, 1 on a domain error (the error name is
//! printed on stderr) and 2 on a usage error. With `--format lines` every
//! result is one line of `key=value` pairs; output never depends on `--jobs`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::{self, Archive, CompressedRecord};
use crate::coverfree::{self, SetFamily};
use crate::distinguisher::{self, DescriptorBuilder};
use crate::error::{Error, Result};
use crate::expander::{Seed, SeedSpace};
use crate::gf2::BitString;
use crate::isolation::{self, Variant};
use crate::language::{ceil_log2, LanguageSlice, DEFAULT_SCAN_CAP};

#[derive(Debug, Parser)]
#[command(name = "ilc", version, about = "Language compression by GF(2) hash isolation")]
pub struct Cli {
    /// Seed search range, as 2^B or a power of two (at most 2^32).
    #[arg(long, global = true, default_value = "2^16", value_parser = parse_seed_space)]
    pub seed_space: SeedSpace,
    /// Largest n for exhaustive sweeps of {0,1}^n.
    #[arg(long, global = true, default_value_t = DEFAULT_SCAN_CAP)]
    pub scan_cap: usize,
    /// Worker threads; 0 picks one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Lines,
}

fn parse_seed_space(s: &str) -> std::result::Result<SeedSpace, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress members of a language into an ILC1 archive.
    Compress(CompressArgs),
    /// Recover the strings stored in an archive.
    Decompress {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        lang: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build, run or verify distinguishing descriptors.
    #[command(subcommand)]
    Distinguish(DistinguishCommand),
    /// Monte Carlo checks of the covering probabilities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Cover-free family checks.
    #[command(subcommand)]
    Coverfree(CoverfreeCommand),
    /// Evaluate the Dyachkov–Rykov lower bound.
    Drbound {
        #[arg(long = "N")]
        num_sets: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        c: f64,
    },
    /// Per-record payload accounting for an archive.
    Stats {
        #[arg(long)]
        archive: PathBuf,
        /// Language used for |A|; defaults to the spec stored in the archive.
        #[arg(long)]
        lang: Option<String>,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "all"]))]
pub struct CompressArgs {
    #[arg(long)]
    pub lang: String,
    /// Digest width minus one; defaults to ceil(log2 |A|).
    #[arg(long)]
    pub k: Option<usize>,
    /// File with one string per line to compress.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Compress every member, in lexicographic order.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum DistinguishCommand {
    Build {
        #[arg(long)]
        lang: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    Run {
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        lang: String,
        #[arg(long)]
        candidate: String,
    },
    Verify {
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        lang: String,
        /// Sweep all of {0,1}^n instead of the members only.
        #[arg(long)]
        full_sweep: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    Isolation {
        #[arg(long)]
        lang: String,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        mc_seed: u64,
    },
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum CoverfreeCommand {
    Check {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

/// One result: ordered key/value pairs.
struct Report {
    fields: Vec<(String, String)>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            fields: vec![("command".into(), command.into())],
        }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    fn emit(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Lines => {
                let line: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            Format::Human => {
                for (k, v) in &self.fields[1..] {
                    writeln!(out, "{k:>16}: {v}")?;
                }
            }
        }
        Ok(())
    }
}

struct Ctx<'a> {
    space: SeedSpace,
    scan_cap: usize,
    format: Format,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn lang(&self, spec: &str) -> Result<LanguageSlice> {
        Ok(LanguageSlice::from_spec(spec)?.with_scan_cap(self.scan_cap))
    }

    fn emit(&mut self, r: Report) -> Result<()> {
        r.emit(self.format, self.out)
    }

    fn warn(&mut self, msg: &str) -> Result<()> {
        writeln!(self.err, "warning: {msg}")?;
        Ok(())
    }
}

fn bits_arg(s: &str) -> Result<BitString> {
    s.parse()
}

fn resolve_k(ctx: &mut Ctx<'_>, lang: &LanguageSlice, k: Option<usize>) -> Result<usize> {
    let natural = lang.choose_k()?;
    if lang.exceeds_density_hint()? {
        ctx.warn(&format!(
            "|A| exceeds 2^n/n^2 for {}; decoding scans may be long",
            lang.spec()
        ))?;
    }
    match k {
        None => Ok(natural),
        Some(k) if k < natural => Err(Error::Config(format!(
            "k = {k} is below ceil(log2 |A|) = {natural}"
        ))),
        Some(k) => Ok(k),
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(Error::from)
}

fn read_archive_file(path: &PathBuf) -> Result<Archive> {
    let bytes = fs::read(path)?;
    Archive::from_bytes(&bytes)
}

fn single_record(path: &PathBuf) -> Result<CompressedRecord> {
    let a = read_archive_file(path)?;
    match <[CompressedRecord; 1]>::try_from(a.records) {
        Ok([r]) => Ok(r),
        Err(v) => Err(Error::Format(format!("descriptor file holds {} records, expected 1", v.len()))),
    }
}

fn execute(command: Command, ctx: &mut Ctx<'_>) -> Result<()> {
    match command {
        Command::Compress(args) => {
            let lang = ctx.lang(&args.lang)?;
            let k = resolve_k(ctx, &lang, args.k)?;
            let xs: Vec<BitString> = match &args.input {
                Some(path) => fs::read_to_string(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?,
                None => lang.members()?.to_vec(),
            };
            let records = codec::encode_many(&xs, &lang, k, ctx.space)?;
            let archive = Archive::new(lang.n(), k, lang.spec(), records);
            write_file(&args.out, &archive.to_bytes()?)?;
            let size = lang.cardinality()?;
            ctx.emit(
                Report::new("compress")
                    .with("lang", lang.spec())
                    .with("n", lang.n())
                    .with("k", k)
                    .with("size", size)
                    .with("records", archive.records.len())
                    .with("bits_per_record", k + 1 + codec::RECORD_OVERHEAD_BITS)
                    .with("max_seed", archive.records.iter().map(|r| r.seed.0).max().unwrap_or(0)),
            )
        }
        Command::Decompress { archive, lang, out } => {
            let lang = ctx.lang(&lang)?;
            let a = read_archive_file(&archive)?;
            let decoded = codec::decode_many(&a.records, &lang)?;
            let mut text = String::new();
            for d in &decoded {
                text.push_str(&d.value.to_string());
                text.push('\n');
            }
            write_file(&out, text.as_bytes())?;
            let examined = decoded.iter().map(|d| d.examined).max().unwrap_or(0);
            ctx.emit(
                Report::new("decompress")
                    .with("lang", lang.spec())
                    .with("n", a.n)
                    .with("k", a.k)
                    .with("records", decoded.len())
                    .with("max_examined", examined)
                    .with("scan_bound", 1u128 << (a.n - a.k - 1)),
            )
        }
        Command::Distinguish(cmd) => distinguish(cmd, ctx),
        Command::Verify(VerifyCommand::Isolation {
            lang,
            k,
            variant,
            trials,
            mc_seed,
        }) => {
            let lang = ctx.lang(&lang)?;
            let est = isolation::estimate_coverage_probability(&lang, k, variant, trials, Seed(mc_seed))?;
            if !est.bound_applies {
                ctx.warn("2^k < |A|: the probability lower bound does not apply")?;
            }
            let bound = match variant {
                Variant::T => 0.5,
                Variant::TTilde => 1.0 / 3.0,
            };
            ctx.emit(
                Report::new("verify-isolation")
                    .with("lang", lang.spec())
                    .with("k", k)
                    .with("variant", variant)
                    .with("trials", est.trials)
                    .with("successes", est.successes)
                    .with("estimate", est.estimate)
                    .with("stderr", est.stderr)
                    .with("bound", bound)
                    .with("bound_applies", est.bound_applies)
                    .with("meets_bound", est.estimate >= bound - 3.0 * est.stderr),
            )
        }
        Command::Coverfree(CoverfreeCommand::Check { family, k, c }) => {
            let f = SetFamily::parse(&fs::read_to_string(&family)?)?;
            let r = coverfree::check_family_against_bound(&f, k, c)?;
            let mut rep = Report::new("coverfree-check")
                .with("N", r.num_sets)
                .with("M", r.ground_size)
                .with("k", k)
                .with("cover_free", r.cover_free());
            if let Some(v) = &r.violation {
                let coverers: Vec<String> = v.coverers.iter().map(|c| (c + 1).to_string()).collect();
                rep = rep.with("covered", v.covered + 1).with("coverers", coverers.join(","));
            }
            if let (Some(bound), Some(margin), Some(min_c)) = (r.bound, r.margin, r.minimal_c) {
                rep = rep
                    .with("c", c)
                    .with("hypothesis", r.hypothesis_holds)
                    .with("bound", bound)
                    .with("margin", margin)
                    .with("minimal_c", min_c);
                if let Some(ok) = r.satisfied() {
                    rep = rep.with("satisfied", ok);
                }
            }
            ctx.emit(rep)
        }
        Command::Drbound { num_sets, k, c } => {
            let bound = coverfree::dr_lower_bound(num_sets, k, c)?;
            if !coverfree::dr_hypothesis_holds(num_sets, k) {
                ctx.warn("k > N^(1/3): the bound's hypothesis does not hold")?;
            }
            match ctx.format {
                Format::Human => {
                    writeln!(ctx.out, "{bound}")?;
                    Ok(())
                }
                Format::Lines => ctx.emit(
                    Report::new("drbound")
                        .with("N", num_sets)
                        .with("k", k)
                        .with("c", c)
                        .with("bound", bound),
                ),
            }
        }
        Command::Stats { archive, lang } => {
            let a = read_archive_file(&archive)?;
            let spec = lang.unwrap_or_else(|| a.lang_spec.clone());
            let log_size = match ctx.lang(&spec).and_then(|l| l.cardinality()) {
                Ok(size) => Some(ceil_log2(size)?),
                Err(e) => {
                    ctx.warn(&format!("cannot size {spec}: {e}"))?;
                    None
                }
            };
            let unknown = || "unknown".to_string();
            for (i, r) in a.records.iter().enumerate() {
                let bits = codec::compressed_bits(r);
                ctx.emit(
                    Report::new("stats-record")
                        .with("record", i + 1)
                        .with("bits", bits)
                        .with("k", r.k)
                        .with("log2_size", log_size.map_or_else(unknown, |l| l.to_string()))
                        .with("overhead", log_size.map_or_else(unknown, |l| (bits - l).to_string())),
                )?;
            }
            let bits = a.k + 1 + codec::RECORD_OVERHEAD_BITS;
            ctx.emit(
                Report::new("stats")
                    .with("lang", &a.lang_spec)
                    .with("n", a.n)
                    .with("k", a.k)
                    .with("records", a.records.len())
                    .with("bits_per_record", bits)
                    .with("log2_size", log_size.map_or_else(unknown, |l| l.to_string()))
                    .with("overhead", log_size.map_or_else(unknown, |l| (bits - l).to_string())),
            )
        }
    }
}

fn distinguish(cmd: DistinguishCommand, ctx: &mut Ctx<'_>) -> Result<()> {
    match cmd {
        DistinguishCommand::Build { lang, x, k, out } => {
            let lang = ctx.lang(&lang)?;
            let k = resolve_k(ctx, &lang, k)?;
            let x = bits_arg(&x)?;
            let p = DescriptorBuilder::new().build(&x, &lang, k, ctx.space)?;
            let archive = Archive::new(lang.n(), k, lang.spec(), vec![p.clone()]);
            write_file(&out, &archive.to_bytes()?)?;
            ctx.emit(
                Report::new("distinguish-build")
                    .with("lang", lang.spec())
                    .with("n", p.n)
                    .with("k", p.k)
                    .with("seed", p.seed)
                    .with("index", p.index)
                    .with("digest", &p.digest)
                    .with("bits", distinguisher::descriptor_bits(&p))
                    .with("log2_size", ceil_log2(lang.cardinality()?)?),
            )
        }
        DistinguishCommand::Run {
            descriptor,
            lang,
            candidate,
        } => {
            let lang = ctx.lang(&lang)?;
            let p = single_record(&descriptor)?;
            let v = bits_arg(&candidate)?;
            let accepted = distinguisher::run_descriptor(&p, &v, &lang)?;
            ctx.emit(
                Report::new("distinguish-run")
                    .with("candidate", &v)
                    .with("result", if accepted { "accept" } else { "reject" }),
            )
        }
        DistinguishCommand::Verify {
            descriptor,
            lang,
            full_sweep,
        } => {
            let lang = ctx.lang(&lang)?;
            let p = single_record(&descriptor)?;
            let accepted = distinguisher::count_accepted(&p, &lang, full_sweep)?;
            ctx.emit(
                Report::new("distinguish-verify")
                    .with("sweep", if full_sweep { "full" } else { "members" })
                    .with("accepted", accepted)
                    .with("unique", accepted == 1),
            )
        }
    }
}

/// Runs a parsed command line, writing results to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: ConfigError: cannot start workers: {e}");
            return 1;
        }
    };
    let Cli {
        seed_space,
        scan_cap,
        format,
        command,
        ..
    } = cli;
    // Output is buffered so the worker pool never touches the caller's sinks.
    let (result, stdout, stderr) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let mut ctx = Ctx {
            space: seed_space,
            scan_cap,
            format,
            out: &mut o,
            err: &mut e,
        };
        let r = execute(command, &mut ctx);
        (r, o, e)
    });
    if out.write_all(&stdout).and_then(|_| err.write_all(&stderr)).is_err() {
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            code
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_args(args, &mut stdout.lock(), &mut stderr.lock())
}
