use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ris_sweep::config::{parse_pairs, RawConfig};
use ris_sweep::{render_csv, run_sweep, ConfigError, SweepSpec};

const EXIT_SCHEMA: u8 = 2;
const EXIT_POINT_FAILED: u8 = 3;

/// Sweep RIS array gains over spacing, angle, loss or element count and
/// write the results as CSV.
///
/// Every config key can also be given as a flag; flags override the file.
#[derive(Debug, Parser)]
#[command(name = "sweep", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when neither this nor the config sets one.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SWEEP_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<String>,

    #[arg(long = "N", visible_alias = "elements")]
    elements: Option<String>,
    /// spacing_d | angle_rx | loss_gamma | elements_N
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Comma-separated axis values.
    #[arg(long)]
    values: Option<String>,
    /// Element spacing in wavelengths.
    #[arg(long = "d", visible_alias = "spacing")]
    spacing: Option<String>,
    #[arg(long = "alpha-tx")]
    alpha_tx: Option<String>,
    #[arg(long = "alpha-rx")]
    alpha_rx: Option<String>,
    /// Ohmic loss ratio.
    #[arg(long)]
    gamma: Option<String>,
    /// Reference resistance in Ohm.
    #[arg(long = "R", visible_alias = "resistance")]
    resistance: Option<String>,
    #[arg(long = "gamma-dr")]
    gamma_dr: Option<String>,
    #[arg(long = "gamma-rs")]
    gamma_rs: Option<String>,
    #[arg(long = "z-ds-re")]
    z_ds_re: Option<String>,
    #[arg(long = "z-ds-im")]
    z_ds_im: Option<String>,
    /// Comma-separated subset of decoupled_diag, bd, uncoupled, ignore_mc, gradient.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
}

impl Cli {
    fn overrides(&self) -> [(&'static str, Option<&String>); 19] {
        [
            ("seed", self.seed.as_ref()),
            ("N", self.elements.as_ref()),
            ("axis", self.axis.as_ref()),
            ("from", self.from.as_ref()),
            ("to", self.to.as_ref()),
            ("steps", self.steps.as_ref()),
            ("values", self.values.as_ref()),
            ("d", self.spacing.as_ref()),
            ("alpha_tx", self.alpha_tx.as_ref()),
            ("alpha_rx", self.alpha_rx.as_ref()),
            ("gamma", self.gamma.as_ref()),
            ("R", self.resistance.as_ref()),
            ("gamma_dr", self.gamma_dr.as_ref()),
            ("gamma_rs", self.gamma_rs.as_ref()),
            ("z_ds_re", self.z_ds_re.as_ref()),
            ("z_ds_im", self.z_ds_im.as_ref()),
            ("methods", self.methods.as_ref()),
            ("max_iters", self.max_iters.as_ref()),
            ("tol", self.tol.as_ref()),
        ]
    }

    fn spec(&self) -> Result<SweepSpec, ConfigError> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                parse_pairs(&text)?
            }
            None => RawConfig::new(),
        };
        for (key, value) in self.overrides() {
            if let Some(value) = value {
                // an explicit list replaces a range from the file and vice versa
                match key {
                    "values" => ["from", "to", "steps"].iter().for_each(|k| {
                        raw.remove(*k);
                    }),
                    "from" | "to" | "steps" => {
                        raw.remove("values");
                    }
                    _ => {}
                }
                raw.insert(key.to_owned(), value.clone());
            }
        }
        if let Some(path) = &self.output {
            raw.insert("output".to_owned(), path.display().to_string());
        }
        SweepSpec::from_pairs(&raw)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match cli.spec() {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("sweep: config error: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = match run_sweep(&spec, threads) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("sweep: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let csv = render_csv(&spec, &rows);
    let written = match &spec.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(csv.as_bytes())?;
            w.flush()
        }),
        None => io::stdout().lock().write_all(csv.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("sweep: cannot write output: {e}");
        return ExitCode::FAILURE;
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("sweep: {failed} of {} grid points failed", rows.len());
        return ExitCode::from(EXIT_POINT_FAILED);
    }
    ExitCode::SUCCESS
}
