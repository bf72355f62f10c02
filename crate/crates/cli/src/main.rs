use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fringe_core::dist::LawTable;
use fringe_core::exact::rat_to_string;
use fringe_core::models::{ModelSpec, MODEL_GRAMMAR};
use fringe_core::protected::{p_protected, protected_result};
use fringe_core::sim::{grow, replication_rng, stats, write_dump, StopRule, TreeStats};
use fringe_core::theory::{gamma_height, gamma_saturation, theory_report};
use fringe_core::verify::{
    chi_square, exact_oracle, observe, parse_checks, run_verification, OracleStatistic, CHECK_NAMES,
};
use fringe_core::Error;

#[derive(Parser)]
#[command(name = "fringe", version, about = "Fringe trees of random trees: theory, simulation and verification")]
struct Cli {
    /// Worker threads for replicated runs (FRINGE_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic constants and limit laws of a model, as JSON.
    Theory {
        #[arg(long)]
        model: String,
        #[command(flatten)]
        out: Output,
    },
    /// Grow one tree and report its statistics.
    Simulate(SimulateArgs),
    /// Limiting fraction of k-protected nodes in the m-ary search tree.
    Protected {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        k: u32,
        /// Print the exact rational (default).
        #[arg(long, conflicts_with = "float")]
        exact: bool,
        /// Print a decimal.
        #[arg(long)]
        float: bool,
        /// Emit JSON including the polynomial h_k.
        #[arg(long)]
        poly: bool,
    },
    /// Height and saturation constants, as JSON.
    Height {
        #[arg(long)]
        model: String,
    },
    /// Replicated simulation checked against theory; exit status 0 iff all checks pass.
    Verify {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated check names.
        #[arg(long)]
        checks: String,
        /// Also write the report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact small-n law by enumerating insertion orders, optionally against simulation.
    Oracle {
        /// `bst` or `mst:<m>`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        /// `leaves`, `protected:<k>` or `joint` (leaves and 2-protected nodes).
        #[arg(long, default_value = "leaves")]
        stat: String,
        /// Simulated trees for a chi-square comparison.
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: String,
    /// Stop once the weight (nodes, or keys for search trees) reaches n.
    #[arg(long, required_unless_present = "time", conflicts_with = "time")]
    n: Option<u64>,
    /// Stop at this time instead.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest rank tracked individually.
    #[arg(long, default_value_t = 8)]
    rank_max: usize,
    /// Write the flat tree dump instead of statistics.
    #[arg(long)]
    dump: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidParameters(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            // The reader went away (`| head`); nothing left to report.
            std::process::exit(0);
        }
        Failure::Compute(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn model(s: &str) -> Result<ModelSpec, Failure> {
    ModelSpec::parse(s).map_err(Failure::from)
}

fn sink(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(path: &Option<PathBuf>, v: &impl Serialize) -> Result<(), Failure> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| Failure::Compute(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn law_csv(w: &mut dyn Write, law: &LawTable) -> io::Result<()> {
    writeln!(w, "k,p")?;
    for (k, m) in law.support.iter().zip(&law.p) {
        match m.as_exact() {
            Some(r) => writeln!(w, "{k},{}", rat_to_string(r))?,
            None => writeln!(w, "{k},{}", m.to_f64())?,
        }
    }
    Ok(())
}

fn stats_csv(w: &mut dyn Write, st: &TreeStats) -> io::Result<()> {
    writeln!(w, "statistic,index,value")?;
    let scalars = [
        ("node_count", Some(st.node_count)),
        ("height", Some(st.height as u64)),
        ("total_path_length", Some(st.total_path_length)),
        ("unblemished_count", Some(st.unblemished_count)),
        ("rank_overflow", Some(st.rank_overflow)),
        ("saturation_level", st.saturation_level.map(u64::from)),
        ("clade_count", st.clade_count),
        ("maximal_clade_count", st.maximal_clade_count),
    ];
    for (name, v) in scalars {
        if let Some(v) = v {
            writeln!(w, "{name},,{v}")?;
        }
    }
    let hists = [
        ("degree_hist", &st.degree_hist),
        ("fringe_size_hist", &st.fringe_size_hist),
        ("fringe_key_hist", &st.fringe_key_hist),
        ("key_count_hist", &st.key_count_hist),
        ("rank_hist", &st.rank_hist),
        ("profile", &st.profile),
    ];
    for (name, h) in hists {
        for (i, c) in h.iter().enumerate().filter(|e| *e.1 > 0) {
            writeln!(w, "{name},{i},{c}")?;
        }
    }
    Ok(())
}

fn parse_stat(s: &str) -> Result<OracleStatistic, Failure> {
    match s {
        "leaves" => Ok(OracleStatistic::Leaves),
        "joint" => Ok(OracleStatistic::LeavesAndProtected2),
        _ => s
            .strip_prefix("protected:")
            .and_then(|k| k.parse().ok())
            .map(OracleStatistic::Protected)
            .ok_or_else(|| Failure::Usage(format!("unknown statistic {s:?}; use leaves, protected:<k> or joint"))),
    }
}

fn simulate(a: &SimulateArgs) -> Outcome {
    let spec = model(&a.model)?;
    let stop = match (a.n, a.time) {
        (Some(n), _) => StopRule::WeightAtLeast(n),
        (None, Some(t)) => StopRule::TimeAtMost(t),
        (None, None) => return Err(Failure::Usage("need --n or --time".into())),
    };
    let mut rng = replication_rng(a.seed, 0);
    let tree = grow(&spec, stop, &mut rng)?;
    eprintln!("{spec}: {} nodes, weight {}, stop time {:.4}", tree.len(), tree.total_weight, tree.stop_time);
    if a.dump {
        let mut w = sink(&a.out.output)?;
        write_dump(&tree, &spec, a.seed, &mut w)?;
        w.flush()?;
        return Ok(true);
    }
    let st = stats(&tree, a.rank_max);
    match a.out.format {
        Format::Json => emit_json(
            &a.out.output,
            &json!({
                "model": spec.to_string(),
                "seed": a.seed,
                "stop_time": tree.stop_time,
                "weight": tree.total_weight,
                "stats": st,
            }),
        )?,
        Format::Csv => {
            let mut w = sink(&a.out.output)?;
            stats_csv(&mut w, &st)?;
            w.flush()?;
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Cmd::Theory { model: m, out } => {
            let r = theory_report(&model(&m)?)?;
            match out.format {
                Format::Json => emit_json(&out.output, &r)?,
                Format::Csv => {
                    let mut w = sink(&out.output)?;
                    writeln!(w, "law,k,p")?;
                    for (name, law) in &r.laws {
                        for (k, p) in law.iter() {
                            writeln!(w, "{name},{k},{p}")?;
                        }
                    }
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Cmd::Simulate(a) => simulate(&a),
        Cmd::Protected { m, k, exact: _, float, poly } => {
            if poly {
                emit_json(&None, &protected_result(m, k, !float, true)?)?;
            } else {
                let v = p_protected(m, k)?;
                if float {
                    println!("{}", fringe_core::exact::to_f64(&v));
                } else {
                    println!("{}", rat_to_string(&v));
                }
            }
            Ok(true)
        }
        Cmd::Height { model: m } => {
            let spec = model(&m)?;
            let g = gamma_height(&spec)?;
            let s = gamma_saturation(&spec).ok();
            emit_json(
                &None,
                &json!({
                    "model": spec.to_string(),
                    "gamma": g.gamma,
                    "gamma_minus": s.as_ref().map(|s| s.gamma),
                    "height": g,
                    "saturation": s,
                }),
            )?;
            Ok(true)
        }
        Cmd::Verify { model: m, n, reps, seed, checks, json } => {
            let spec = model(&m)?;
            let checks = parse_checks(&checks)?;
            let report = run_verification(&spec, n, reps, seed, &checks)?;
            for c in &report.checks {
                eprintln!(
                    "{:5} {:28} {:>8} {:.5} (threshold {})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.metric,
                    c.value,
                    c.threshold
                );
            }
            if let Some(path) = &json {
                emit_json(&Some(path.clone()), &report)?;
            }
            emit_json(&None, &report)?;
            Ok(report.pass)
        }
        Cmd::Oracle { model: m, n, stat, reps, seed, out } => {
            let spec = model(&m)?;
            let stat = parse_stat(&stat)?;
            let law = exact_oracle(&spec, n, stat)?;
            let Some(reps) = reps else {
                match out.format {
                    Format::Json => emit_json(&out.output, &law)?,
                    Format::Csv => {
                        let mut w = sink(&out.output)?;
                        law_csv(&mut w, &law)?;
                        w.flush()?;
                    }
                }
                return Ok(true);
            };
            let counts = oracle_counts(&spec, n, stat, reps, seed)?;
            let chi = chi_square(&law, &counts);
            eprintln!("chi2 = {:.3} on {} df, p = {:.4}", chi.statistic, chi.df, chi.p_value);
            let pass = chi.p_value > 0.001;
            emit_json(&out.output, &json!({ "law": law, "counts": counts, "chi_square": chi, "pass": pass }))?;
            Ok(pass)
        }
    }
}

fn oracle_counts(
    spec: &ModelSpec,
    n: usize,
    stat: OracleStatistic,
    reps: u64,
    seed: u64,
) -> Result<std::collections::BTreeMap<i64, u64>, Failure> {
    use rayon::prelude::*;
    let values: Vec<i64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            grow(spec, StopRule::WeightAtLeast(n as u64), &mut rng).map(|t| observe(&t, n, stat))
        })
        .collect::<Result<_, _>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    Ok(counts)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var("FRINGE_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("FRINGE_THREADS must be a positive integer, got {s:?}"))),
        _ => Ok(flag),
    }
}

fn help_footer() -> String {
    let mut s = String::from("Models:\n");
    for g in MODEL_GRAMMAR {
        s.push_str(&format!("  {g}\n"));
    }
    s.push_str("\nChecks (for verify --checks):\n");
    for c in CHECK_NAMES {
        s.push_str(&format!("  {c}\n"));
    }
    s.push_str("\nExit status: 0 success, 1 computation error or failed verification, 2 usage error.");
    s
}

fn main() -> ExitCode {
    let footer = help_footer();
    let matches = Cli::command().after_help(footer.clone()).after_long_help(footer).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = threads(cli.threads).and_then(|t| {
        if let Some(t) = t.filter(|&t| t > 0) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Failure::Compute(e.to_string()))?;
        }
        run(cli)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
