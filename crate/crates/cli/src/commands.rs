use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use mpower::acceptance::{run_acceptance, AcceptanceConfig};
use mpower::estimator::{decade_grid, read_values};
use mpower::hypothesis::{run_test, TailConstants};
use mpower::{trace, Domain, Error, ExperimentPlan, ModelSpec, RandomStream, DEFAULT_SEED};

use crate::{
    AcceptanceArgs, Cli, Command, EstimateArgs, ExperimentArgs, SampleArgs, TestArgs, EXIT_ACCEPTANCE, EXIT_DATA,
    EXIT_USAGE,
};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

/// Invalid arguments exit with the usage code; everything about the
/// supplied files exits with the data code.
impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Domain(_) | Error::Unsupported(_)) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

type CmdResult = Result<u8, Failure>;

pub fn run(cli: Cli) -> CmdResult {
    let seed = cli.seed;
    let threads = cli.threads;
    match cli.command {
        Command::Estimate(args) => estimate(args),
        Command::Test(args) => test(args),
        Command::Experiment(args) => experiment(args, seed, threads),
        Command::Sample(args) => sample(args, seed.unwrap_or(DEFAULT_SEED)),
        Command::Acceptance(args) => acceptance(args, seed.unwrap_or(DEFAULT_SEED), threads),
    }
}

fn load_values(path: &Path) -> Result<Vec<f64>, Failure> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let values = read_values(BufReader::new(file)).with_context(|| format!("{}", path.display()))?;
    if values.is_empty() {
        return Err(Failure {
            code: EXIT_DATA,
            error: anyhow!("{}: no values", path.display()),
        });
    }
    Ok(values)
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn estimate(args: EstimateArgs) -> CmdResult {
    let values = load_values(&args.data)?;
    let grid = args.grid.unwrap_or_else(|| decade_grid(values.len() as u64));
    let domain = if args.log2 {
        Domain::Log2Magnitude
    } else {
        Domain::Natural
    };
    let t = trace(values, &grid, domain)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join("trace.csv");
            Box::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for c in &t.checkpoints {
        w.serialize(c).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    drop(w);

    if let Some(last) = t.last() {
        let line = format!("theta_hat = {} (n = {})", last.theta_hat, last.n);
        if args.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(0)
}

fn test(args: TestArgs) -> CmdResult {
    let values = load_values(&args.data)?;
    let n = values.len() as u64;
    let theta1 = mpower::theta_hat(&values, None)?;
    let constants = args.c.zip(args.tau).map(|(c, tau)| TailConstants { c, tau });
    let report = run_test(n, theta1, args.theta0, args.alpha, constants)?;
    let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        fs::write(dir.join("test_report.json"), format!("{json}\n")).context("cannot write report")?;
    }
    println!("{json}");
    Ok(0)
}

fn experiment(args: ExperimentArgs, seed: Option<u64>, threads: Option<usize>) -> CmdResult {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("cannot read {}", args.plan.display()))?;
    let mut plan = ExperimentPlan::from_json(&text).map_err(|e| Failure {
        code: EXIT_DATA,
        error: anyhow::Error::from(e).context(format!("{}", args.plan.display())),
    })?;
    if let Some(seed) = seed {
        plan.master_seed = seed;
    }
    let report = mpower::run_experiment(&plan, threads)?;

    ensure_dir(&args.out)?;
    let json_path = args.out.join("report.json");
    fs::write(&json_path, format!("{}\n", report.to_json()))
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    let csv_path = args.out.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("cannot create {}", csv_path.display()))?;
    for row in report.csv_rows() {
        w.serialize(row).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    println!("{}", json_path.display());
    println!("{}", csv_path.display());
    Ok(0)
}

fn sample(args: SampleArgs, seed: u64) -> CmdResult {
    let text = if args.model.trim_start().starts_with('{') {
        args.model.clone()
    } else {
        fs::read_to_string(&args.model).with_context(|| format!("cannot read {}", args.model))?
    };
    let model = ModelSpec::from_json(&text)
        .map_err(|e| Failure {
            code: EXIT_DATA,
            error: e.into(),
        })?
        .build()?;
    let mut stream = RandomStream::new(seed);
    let values = model.sample(&mut stream, args.n);
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for v in values {
        writeln!(w, "{v}").context("write failed")?;
    }
    w.flush().context("write failed")?;
    Ok(0)
}

fn acceptance(args: AcceptanceArgs, seed: u64, threads: Option<usize>) -> CmdResult {
    let report = run_acceptance(&AcceptanceConfig {
        seed,
        threads,
        tolerance_scale: args.tolerance_scale,
    });
    print!("{}", report.render());
    eprint!("{}", report.render_timings());
    if report.all_passed() {
        return Ok(0);
    }
    let ids: Vec<String> = report
        .failures()
        .iter()
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    eprintln!("failed criteria: {}", ids.join(", "));
    Ok(EXIT_ACCEPTANCE)
}
