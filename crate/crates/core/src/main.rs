use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use sope_kernel::attention::{AttentionOptions, DEFAULT_TOPK_FRAC};
use sope_kernel::commands::{
    cmd_ablate, cmd_analyze, cmd_encode, cmd_score, cmd_verify, default_ablation_ratios,
};
use sope_kernel::config::{load_config, Settings};
use sope_kernel::error::{Error, Result, EXIT_INTERNAL};
use sope_kernel::io::{load_tokens, recenter, Center, TokenFormat};
use sope_kernel::report::{fmt_num, REPORT_HEADER};
use sope_kernel::synthetic::synthetic_scene;
use sope_kernel::{Role, Scheme, Token, TokenSequence};

#[derive(Debug, Parser)]
#[command(name = "sope-kernel", version, about = "Rotary positional encodings for 3D token sequences")]
struct Cli {
    /// Worker threads for row-parallel scoring (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotate per-token feature vectors and write them as CSV.
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "query")]
        role: RoleArg,
        /// Append the per-pair rotation phases to each row.
        #[arg(long)]
        phases: bool,
    },
    /// Attention matrices (raw and softmaxed) plus a metric report.
    Score {
        #[command(flatten)]
        common: Common,
    },
    /// Compare rope, rope3d and sope on the same tokens.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep SoPE allocation ratios.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated t:r:theta:phi ratios.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<String>>,
    },
    /// Check fast-path scores against the dense-matrix oracle.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 128)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Write a seeded synthetic scene in xyz_tokens format.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["tokens", "synthetic"])))]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Token file to read.
    #[arg(long, conflicts_with = "synthetic")]
    tokens: Option<PathBuf>,
    /// Use a seeded synthetic scene of N tokens instead of a file.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
    #[arg(long, value_enum, default_value = "xyz")]
    format: FormatArg,
    /// Overrides the config's scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "none")]
    center: CenterArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    causal: bool,
    /// Disable the 1/sqrt(d) logit scaling.
    #[arg(long)]
    no_scale: bool,
    #[arg(long, default_value_t = DEFAULT_TOPK_FRAC)]
    topk_frac: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Ply,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Rope,
    Rope3d,
    Sope,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CenterArg {
    None,
    Centroid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    Query,
    Key,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => load_config(path)?,
            None => Settings::default(),
        };
        if let Some(scheme) = self.scheme {
            s.scheme = match scheme {
                SchemeArg::Rope => Scheme::Rope,
                SchemeArg::Rope3d => Scheme::Rope3d,
                SchemeArg::Sope => Scheme::Sope,
            };
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s.encoding()?;
        for w in s.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(s)
    }

    fn tokens(&self, seed: u64) -> Result<TokenSequence> {
        let seq = match (&self.tokens, self.synthetic) {
            (Some(path), _) => {
                let format = match self.format {
                    FormatArg::Xyz => TokenFormat::XyzTokens,
                    FormatArg::Ply => TokenFormat::PlyAscii,
                };
                load_tokens(path, format)?
            }
            (None, Some(n)) => TokenSequence::new(
                synthetic_scene(n, seed)?
                    .into_iter()
                    .map(|index| Token {
                        index,
                        features: Vec::new(),
                    })
                    .collect(),
            ),
            (None, None) => unreachable!("clap requires a token source"),
        };
        let center = match self.center {
            CenterArg::None => Center::None,
            CenterArg::Centroid => Center::Centroid,
        };
        recenter(&seq, center)
    }

    fn options(&self) -> AttentionOptions {
        AttentionOptions {
            scale_by_sqrt_d: !self.no_scale,
            causal: self.causal,
            topk_frac: self.topk_frac,
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io { path, source: e })
}

/// Prints a report, bolding the header line on a color terminal.
fn print_report(text: &str) {
    let color = std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal();
    let mut out = std::io::stdout().lock();
    let _ = match text.strip_prefix(REPORT_HEADER) {
        Some(rest) if color => write!(out, "\x1b[1m{REPORT_HEADER}\x1b[0m{rest}"),
        _ => write!(out, "{text}"),
    };
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Encode {
            common,
            role,
            phases,
        } => {
            let settings = common.settings()?;
            let seq = common.tokens(settings.seed)?;
            let role = match role {
                RoleArg::Query => Role::Query,
                RoleArg::Key => Role::Key,
            };
            let csv = cmd_encode(&seq, &settings, role, phases)?;
            match &common.out {
                Some(dir) => write_file(dir, "encoded.csv", &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Score { common } => {
            let settings = common.settings()?;
            let seq = common.tokens(settings.seed)?;
            let out = cmd_score(&seq, &settings, &common.options())?;
            if let Some(dir) = &common.out {
                write_file(dir, "raw_scores.csv", &out.raw_csv)?;
                write_file(dir, "attention.csv", &out.attention_csv)?;
                write_file(dir, "report.txt", &out.report)?;
            }
            print_report(&out.report);
        }
        Command::Analyze { common } => {
            let settings = common.settings()?;
            let seq = common.tokens(settings.seed)?;
            let text = cmd_analyze(&seq, &settings, &common.options())?;
            if let Some(dir) = &common.out {
                write_file(dir, "analyze.txt", &text)?;
            }
            print_report(&text);
        }
        Command::Ablate { common, ratios } => {
            let settings = common.settings()?;
            let seq = common.tokens(settings.seed)?;
            let ratios = ratios.unwrap_or_else(default_ablation_ratios);
            let text = cmd_ablate(&seq, &settings, &ratios, &common.options())?;
            if let Some(dir) = &common.out {
                write_file(dir, "ablate.txt", &text)?;
            }
            print_report(&text);
        }
        Command::Verify {
            config,
            seed,
            d,
            trials,
        } => {
            let mut settings = match config {
                Some(path) => load_config(&path)?,
                None => Settings::default(),
            };
            settings.d = d;
            if let Some(seed) = seed {
                settings.seed = seed;
            }
            let (text, worst) = cmd_verify(&settings, trials)?;
            print_report(&text);
            if !(worst <= 1e-12) {
                return Err(Error::Invariant(format!(
                    "oracle disagreement {worst:e} exceeds 1e-12"
                )));
            }
        }
        Command::Synth { n, seed, out } => {
            let mut text = String::new();
            for idx in synthetic_scene(n, seed)? {
                text.push_str(&format!(
                    "{} {} {} {} {}\n",
                    fmt_num(idx.t),
                    fmt_num(idx.x),
                    fmt_num(idx.y),
                    fmt_num(idx.z),
                    idx.modality.tag()
                ));
            }
            match out {
                Some(path) => {
                    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!((2..=EXIT_INTERNAL).contains(&code));
            ExitCode::from(code as u8)
        }
    }
}
