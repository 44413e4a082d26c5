use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use chenverify::chen::lemmas::LemmaConstant;
use chenverify::chen::InequalityKind;
use chenverify::harness::{
    generate, parse_seed, run_chen, run_lemmas, run_validate, CaseSelector, ExitStatus, Format, GenerateParams,
    LemmaConfig, Report, RunConfig, DEFAULT_PLANES, DEFAULT_SAMPLES, DEFAULT_SEED, SEED_ENV,
};

#[derive(Parser)]
#[command(name = "chenverify", version, about = "Curvature invariants and Chen-type inequality checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for all sampling (decimal or 0x hex).
    #[arg(long, global = true, env = SEED_ENV, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Number of sample points.
    #[arg(long, visible_alias = "points", global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Random planes (or plane pairs) per point.
    #[arg(long, global = true, default_value_t = DEFAULT_PLANES)]
    planes: usize,
    /// Validator tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Force the inequality case instead of deriving it from the classification.
    #[arg(long, global = true, value_parser = CaseSelector::from_str)]
    case: Option<CaseSelector>,
    #[arg(long, global = true, default_value = "json", value_parser = Format::from_str)]
    format: Format,
    /// Write the report (or generated spec) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structure validators on a spec file.
    Validate { spec: PathBuf },
    /// Check the first Chen inequality over sampled points and planes.
    Chen {
        spec: PathBuf,
        /// Check the δ(2,2) inequality instead.
        #[arg(long)]
        delta22: bool,
    },
    /// Check the δ(2,2) inequality over sampled points and plane pairs.
    Delta22 { spec: PathBuf },
    /// Property suite for the two algebraic lemmas.
    Lemmas {
        /// Inclusive range such as `3..8`.
        #[arg(long, default_value = "3..8", value_parser = parse_range)]
        n_range: (usize, usize),
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value = "corrected", value_parser = parse_constant)]
        constant: LemmaConstant,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
    },
    /// Emit a spec file for a built-in family.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// flat_quaternionic, sphere, euclidean, round_sphere, normal_family or skewed_graph.
    family: String,
    /// Extra parameters as `key=value`, e.g. `m=2 sub=torus`.
    params: Vec<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ambient_dim: Option<usize>,
    /// none, torus, linear_real, linear_quaternionic, graph or tilted.
    #[arg(long)]
    sub: Option<String>,
    /// Comma-separated torus radii.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Potential for the gradient graph, in `u1, u2, …`.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<f64>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| format!("expected a range like 3..8, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad range bound `{x}`: {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_constant(s: &str) -> Result<LemmaConstant, String> {
    match s {
        "corrected" => Ok(LemmaConstant::Corrected),
        "printed" => Ok(LemmaConstant::Printed),
        _ => Err(format!("unknown constant `{s}` (expected corrected or printed)")),
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("{key}={v}: {e}"))
}

fn generate_params(a: GenerateArgs) -> Result<GenerateParams, String> {
    let mut p = GenerateParams {
        m: a.m,
        n: a.n,
        k: a.k,
        ambient_dim: a.ambient_dim,
        sub: a.sub,
        radii: a.radii,
        radius: a.radius,
        alpha: a.alpha,
        psi: a.psi,
        angle: a.angle,
    };
    for kv in &a.params {
        let (key, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
        match key {
            "m" => p.m = Some(value(key, v)?),
            "n" => p.n = Some(value(key, v)?),
            "k" => p.k = Some(value(key, v)?),
            "ambient_dim" | "ambient-dim" | "d" => p.ambient_dim = Some(value(key, v)?),
            "sub" => p.sub = Some(v.to_string()),
            "radii" => p.radii = Some(v.split(',').map(|r| value(key, r)).collect::<Result<_, _>>()?),
            "radius" => p.radius = Some(value(key, v)?),
            "alpha" => p.alpha = Some(value(key, v)?),
            "psi" => p.psi = Some(v.to_string()),
            "angle" => p.angle = Some(value(key, v)?),
            _ => return Err(format!("unknown parameter `{key}`")),
        }
    }
    Ok(p)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_spec(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn input_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(ExitStatus::InputError.code() as u8)
}

fn finish(report: Report, common: &Common) -> ExitCode {
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    if let Err(e) = write_output(common.out.as_deref(), &report.render(common.format)) {
        return input_error(e);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common;
    let cfg = RunConfig {
        seed: common.seed.unwrap_or(DEFAULT_SEED),
        samples: common.samples,
        planes: common.planes,
        tol: common.tol,
        case: common.case,
    };
    let chen = |spec: &Path, kind| match read_spec(spec) {
        Ok(text) => finish(run_chen(&text, &cfg, kind), &common),
        Err(e) => input_error(e),
    };
    match cli.command {
        Command::Validate { spec } => match read_spec(&spec) {
            Ok(text) => finish(run_validate(&text, &cfg), &common),
            Err(e) => input_error(e),
        },
        Command::Chen { spec, delta22: false } => chen(&spec, InequalityKind::ChenFirst),
        Command::Chen { spec, delta22: true } | Command::Delta22 { spec } => chen(&spec, InequalityKind::Delta22),
        Command::Lemmas { n_range, trials, constant, restarts } => {
            let lc = LemmaConfig { n_min: n_range.0, n_max: n_range.1, trials, constant, restarts };
            finish(run_lemmas(&lc, cfg.seed), &common)
        }
        Command::Generate(args) => {
            let family = args.family.clone();
            let text = generate_params(args).and_then(|p| generate(&family, &p).map_err(|e| e.to_string()));
            match text.and_then(|t| write_output(common.out.as_deref(), &t)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => input_error(e),
            }
        }
    }
}
