use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use xdomain::data::{
    load_features, load_labels, make_synthetic_pair, save_features, save_labels, SyntheticSpec,
};
use xdomain::harness::config::DomainFiles;
use xdomain::harness::{
    emit_generalization_tables, import_paper_tables, records_csv, records_json, run_matrix,
    timings_csv, ExperimentConfig, OutputFormat,
};
use xdomain::{Error, Result};

#[derive(Parser)]
#[command(name = "xdomain", version, about = "Cross-domain anomaly detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check feature and label files, or every domain of a config.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `.featb` or `.labels` files.
        files: Vec<PathBuf>,
    },
    /// Run every configured method over every ordered domain pair.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Also write per-stage timings here.
        #[arg(long)]
        timing_out: Option<PathBuf>,
    },
    /// Generalization tables from a records CSV.
    Tables {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Validate hand-transcribed results and store them as records.
    ImportPaper {
        /// CSV with columns source,target,method,metric,value.
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic two-domain experiment.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3.0)]
        shift: f64,
        #[arg(long, default_value_t = 8)]
        dims: usize,
        #[arg(long, default_value_t = 200)]
        n_train: usize,
        #[arg(long, default_value_t = 200)]
        n_test: usize,
        #[arg(long, default_value_t = 6.0)]
        anomaly_offset: f64,
    },
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    }
    std::fs::write(path, body).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn validate(config: Option<PathBuf>, files: Vec<PathBuf>) -> Result<()> {
    if config.is_none() && files.is_empty() {
        return Err(Error::Config("nothing to validate".into()));
    }
    for f in &files {
        match f.extension().and_then(|e| e.to_str()) {
            Some("featb") => {
                let m = load_features(f)?;
                println!("{}: {} rows x {} dims", f.display(), m.rows(), m.dims());
            }
            Some("labels") => {
                let l = load_labels(f)?;
                let anomalies = l.iter().filter(|l| l.is_anomaly()).count();
                println!("{}: {} labels, {} anomalous", f.display(), l.len(), anomalies);
            }
            _ => {
                return Err(Error::Config(format!(
                    "{}: expected a .featb or .labels file",
                    f.display()
                )))
            }
        }
    }
    if let Some(path) = config {
        let cfg = ExperimentConfig::load(&path)?;
        let (domains, _) = cfg.load_domains()?;
        let dims = domains[0].dims();
        if let Some(d) = domains.iter().find(|d| d.dims() != dims) {
            return Err(Error::Shape(format!(
                "domain {} has {} dims, {} has {dims}",
                d.name(),
                d.dims(),
                domains[0].name()
            )));
        }
        for d in &domains {
            println!(
                "{}: train {} test {} dims {}",
                d.name(),
                d.train().rows(),
                d.test().rows(),
                d.dims()
            );
        }
    }
    Ok(())
}

fn run(
    config: PathBuf,
    out: PathBuf,
    jobs: Option<usize>,
    seed: Option<u64>,
    format: Format,
    timing_out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg.base.seed = s;
    }
    let (domains, load_ms) = cfg.load_domains()?;
    let scenarios = cfg.scenarios();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut records = pool.install(|| run_matrix(&scenarios, &domains))?;

    for r in &mut records {
        if let Some(t) = r.timings.as_mut() {
            t.feature_load_ms = load_ms;
        }
    }
    match format {
        Format::Csv => write(&out.join("records.csv"), records_csv(&records))?,
        Format::Json => write(&out.join("records.json"), records_json(&records)?)?,
        Format::Text => {
            return Err(Error::Config("run writes csv or json records".into()));
        }
    }
    let timings = timings_csv(&records);
    match timing_out {
        Some(p) => write(&p, timings)?,
        None => eprint!("{timings}"),
    }
    Ok(())
}

fn synth(out: PathBuf, spec: SyntheticSpec) -> Result<()> {
    let pair = make_synthetic_pair(&spec)?;
    let mut files = Vec::new();
    for d in [pair.source(), pair.target()] {
        let name = d.name();
        let f = DomainFiles {
            name: name.to_string(),
            train: PathBuf::from(format!("{name}_train.featb")),
            test: PathBuf::from(format!("{name}_test.featb")),
            labels: PathBuf::from(format!("{name}_test.labels")),
        };
        std::fs::create_dir_all(&out).map_err(|e| Error::Io {
            path: out.display().to_string(),
            source: e,
        })?;
        save_features(d.train(), out.join(&f.train))?;
        save_features(d.test(), out.join(&f.test))?;
        save_labels(d.test_labels(), out.join(&f.labels))?;
        files.push(f);
    }
    let cfg = ExperimentConfig {
        methods: xdomain::generalization::Method::ALL.to_vec(),
        base: xdomain::harness::ScenarioConfig {
            components_k: 2,
            seed: spec.seed,
            ..Default::default()
        },
        domains: files,
    };
    write(&out.join("experiment.cfg"), cfg.to_text())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config, files } => validate(config, files),
        Command::Run { config, out, jobs, seed, format, timing_out } => {
            run(config, out, jobs, seed, format, timing_out)
        }
        Command::Tables { records, out, format } => {
            let recs = import_paper_tables(&records)?;
            let tables = emit_generalization_tables(&recs)?;
            for p in tables.write(&out, format.into())? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::ImportPaper { input, out } => {
            let recs = import_paper_tables(&input)?;
            let path = out.join("records.csv");
            write(&path, records_csv(&recs))?;
            println!("{}: {} records", path.display(), recs.len());
            Ok(())
        }
        Command::Synth { out, seed, shift, dims, n_train, n_test, anomaly_offset } => synth(
            out,
            SyntheticSpec { seed, n_train, n_test, dims, shift, anomaly_offset },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xdomain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

