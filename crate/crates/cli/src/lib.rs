//! Command-line front end: scenario loading, sweeps, figure data, and
//! validation reports.

pub mod checks;
pub mod output;
pub mod sweeps;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relaysec::{Alphabet, MiEvaluator, Scenario, SolverSettings};

use crate::output::RunManifest;

pub const DEFAULT_R0: f64 = 0.0810;
pub const DEFAULT_EPS_GRID: &str = "0,0.005,0.01,0.015,0.02,0.025,0.03,0.035,0.04,0.045,0.05";

#[derive(Debug, Parser)]
#[command(name = "relaysec", version, about = "Secrecy-rate optimization for a MIMO DF relay with artificial noise")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario JSON file; the bundled two-antenna scenario when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output file (CSV/JSON) or directory (fig2, fig3); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 12345)]
    pub seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Bisection tolerance relative to the upper end of the search interval.
    #[arg(long, global = true)]
    pub bisect_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnMode {
    On,
    Off,
    Both,
}

impl AnMode {
    pub fn flags(self) -> Vec<bool> {
        match self {
            Self::On => vec![true],
            Self::Off => vec![false],
            Self::Both => vec![true, false],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn enabled(self) -> bool {
        self == Self::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Mi,
    Search,
    Worstcase,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate I(rho) in bits.
    MiTable {
        /// Alphabet name (bpsk, qpsk, 8psk, 16qam, ...) or a JSON list of [re,im] pairs;
        /// the scenario's alphabet when omitted.
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        rho_min: f64,
        #[arg(long, default_value_t = 20.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Logarithmic spacing (requires rho-min > 0).
        #[arg(long)]
        log: bool,
    },
    /// Perfect-CSI secrecy rate over the R0 grid.
    PerfectSweep {
        #[arg(long, value_enum, default_value_t = AnMode::Both)]
        an: AnMode,
        /// Number of R0 grid intervals; the scenario's grid_L when omitted.
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Robust lower bound on the secrecy rate over an error-radius grid.
    RobustSweep {
        #[arg(long = "R0", default_value_t = DEFAULT_R0)]
        r0: f64,
        #[arg(long, default_value = DEFAULT_EPS_GRID)]
        eps_grid: String,
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        an: OnOff,
    },
    /// Rs vs R0 curves for every eavesdropper set, with and without AN.
    Fig2 {
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Robust Rs vs error radius at fixed R0 for every eavesdropper set.
    Fig3 {
        #[arg(long = "R0", default_value_t = DEFAULT_R0)]
        r0: f64,
        #[arg(long, default_value = DEFAULT_EPS_GRID)]
        eps_grid: String,
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        an: OnOff,
    },
    /// Compare solver results with the sampling oracles.
    OracleCheck {
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[arg(long = "R0", default_value_t = DEFAULT_R0)]
        r0: f64,
        /// Error radius for `worstcase`.
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Sample count override (Monte-Carlo draws, search draws, or error draws per ball).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the invariant suite on a scenario.
    Validate {
        #[arg(long = "R0", default_value_t = DEFAULT_R0)]
        r0: f64,
    },
}

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad scenario, flag, or value: exit 2.
    Input(anyhow::Error),
    /// Solver failure or failed check: exit 1.
    Solver(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Solver(_) => 1,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn solver(msg: impl fmt::Display) -> Self {
        Self::Solver(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) => write!(f, "input error: {e:#}"),
            Self::Solver(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<relaysec::Error> for Failure {
    fn from(e: relaysec::Error) -> Self {
        use relaysec::Error as E;
        match e {
            E::Domain(_) | E::InvalidAlphabet(_) | E::ScenarioParse { .. } | E::InvalidScenario(_) | E::Io(_) => {
                Self::Input(e.into())
            }
            E::NonFiniteMi { .. } | E::InfeasibleAtLower(_) | E::Solver(_) => Self::Solver(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Solver(e)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Loaded scenario with flag overrides applied.
pub struct Context {
    pub scenario: Scenario,
    pub settings: SolverSettings,
    pub mi: MiEvaluator,
    pub manifest: RunManifest,
    pub global: GlobalArgs,
}

impl Context {
    pub fn new(global: &GlobalArgs, command: String) -> CliResult<Self> {
        let (label, text) = match &global.scenario {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::input(format!("reading {}: {e}", p.display())))?;
                (p.display().to_string(), text)
            }
            None => ("<bundled>".to_string(), Scenario::reference_json().to_string()),
        };
        let scenario = Scenario::from_json(&text)?;
        let mut settings = scenario.solver;
        if let Some(q) = global.quad_order {
            settings.quad_order = q;
        }
        if let Some(t) = global.bisect_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Failure::input(format!("--bisect-tol must be in (0, 1), got {t}")));
            }
            settings.bisect_tol = t;
        }
        let mi = MiEvaluator::new(scenario.alphabet.clone(), settings.quad_order)?;
        let manifest = RunManifest::new(&label, &text, command, settings);
        Ok(Self {
            scenario,
            settings,
            mi,
            manifest,
            global: global.clone(),
        })
    }
}

/// Parses `"0,0.01,0.02"`; rejects empty, negative, or non-finite entries.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| Failure::input(format!("bad grid value {t:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Failure::input("empty grid"));
    }
    Ok(v)
}

/// Alphabet by name, or from a JSON list of `[re, im]` pairs.
pub fn parse_alphabet(s: &str) -> CliResult<Alphabet> {
    let t = s.trim();
    if t.starts_with('[') {
        let pts: Vec<[f64; 2]> =
            serde_json::from_str(t).map_err(|e| Failure::input(format!("alphabet JSON: {e}")))?;
        let pts = pts.iter().map(|p| num_complex::Complex64::new(p[0], p[1])).collect();
        Ok(Alphabet::new("custom", pts)?)
    } else {
        Ok(Alphabet::by_name(t)?)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    Ok(())
                }
                _ => Err(Failure::Input(anyhow::anyhow!("{}", e.render().to_string().trim_end()))),
            };
        }
    };
    let command = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    execute(&cli, command)
}

pub fn execute(cli: &Cli, command: String) -> CliResult<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Failure::input("--threads must be >= 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context::new(&cli.global, format!("relaysec {command}"))?;
    match &cli.command {
        Command::MiTable {
            alphabet,
            rho_min,
            rho_max,
            points,
            log,
        } => sweeps::mi_table(&ctx, alphabet.as_deref(), *rho_min, *rho_max, *points, *log),
        Command::PerfectSweep { an, l } => sweeps::perfect_sweep(&ctx, *an, *l),
        Command::RobustSweep { r0, eps_grid, an } => {
            sweeps::robust_sweep(&ctx, *r0, &parse_grid(eps_grid)?, an.enabled())
        }
        Command::Fig2 { l } => sweeps::fig2(&ctx, *l),
        Command::Fig3 { r0, eps_grid, an } => sweeps::fig3(&ctx, *r0, &parse_grid(eps_grid)?, an.enabled()),
        Command::OracleCheck { mode, r0, eps, samples } => checks::oracle_check(&ctx, *mode, *r0, *eps, *samples),
        Command::Validate { r0 } => checks::validate(&ctx, *r0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0, 0.01,0.02").unwrap(), vec![0.0, 0.01, 0.02]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0,-1").is_err());
        assert!(parse_grid("0,x").is_err());
    }

    #[test]
    fn alphabet_parsing() {
        assert_eq!(parse_alphabet("bpsk").unwrap().size(), 2);
        assert_eq!(parse_alphabet("[[1,0],[-1,0]]").unwrap().size(), 2);
        assert!(matches!(parse_alphabet("[[1,0]").unwrap_err(), Failure::Input(_)));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(relaysec::Error::InvalidScenario(vec![])).exit_code(), 2);
        assert_eq!(Failure::from(relaysec::Error::Solver("x".into())).exit_code(), 1);
    }
}
