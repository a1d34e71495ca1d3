use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use uwacap::channel::{noise_components, EnvironmentParams};
use uwacap::fit::{fit_coefficient_model, fit_power_law, InterceptVariant, Quantity};
use uwacap::report::{alpha_table_csv, beta_table_csv, build_report, plot_csv, read_sweep_dir};
use uwacap::sweep::{read_sweep_csv, run_sweep, sweep_to_table, write_sweep_csv, CasePreset, SweepMeta};
use uwacap::{FrequencyKHz, LinkQuery, RunConfig, Solver};

const SOLUTION_SCHEMA: &str = "uwacap.solution/1";
const PSD_SCHEMA: &str = "uwacap.psd/1";

#[derive(Debug, Parser)]
#[command(name = "uwacap", version, about = "Underwater acoustic link capacity, power and band models")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct EnvArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spreading factor k.
    #[arg(long)]
    k: Option<f64>,
    /// Shipping activity s in [0, 1].
    #[arg(long)]
    s: Option<f64>,
    /// Wind speed w in m/s.
    #[arg(long)]
    w: Option<f64>,
    /// Distance at which the spreading term equals one, in km.
    #[arg(long)]
    l_ref_km: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ambient-noise components and total at one frequency.
    #[command(allow_negative_numbers = true)]
    Psd {
        #[arg(long)]
        freq: f64,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Solve one link and print the solution as JSON.
    #[command(allow_negative_numbers = true)]
    Solve {
        /// Distance in km.
        #[arg(long)]
        l: f64,
        /// Target capacity in kbit/s.
        #[arg(long)]
        c: f64,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Run a distance x capacity sweep and write its CSV.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_parser = ["case1", "case2"])]
        case: Option<String>,
        /// Points per axis.
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Fit the closed-form model for one quantity from a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = ["P", "fend", "B"])]
        quantity: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Use 10log10(C+1) in both power-intercept terms.
        #[arg(long)]
        shifted_intercept: bool,
    },
    /// Rebuild all coefficient tables and plot data from a directory of sweeps.
    Report {
        #[arg(long)]
        sweeps: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        shifted_intercept: bool,
    },
}

enum Failure {
    Usage(String),
    Solver(String),
    Schema(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Schema(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Solver(m) | Failure::Schema(m) => m,
        }
    }
}

impl From<uwacap::Error> for Failure {
    fn from(e: uwacap::Error) -> Self {
        use uwacap::Error as E;
        let msg = e.to_string();
        match e {
            E::Domain { .. } | E::InvalidParameter { .. } => Failure::Usage(msg),
            E::CapacityUnreachable { .. } | E::SweepCell { .. } => Failure::Solver(msg),
            E::Degenerate { .. }
            | E::RankDeficient { .. }
            | E::Schema(_)
            | E::Config(_)
            | E::Io(_) => Failure::Schema(msg),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Schema(format!("{}: {e}", path.display()))
}

fn load_config(env: &EnvArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &env.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut e: EnvironmentParams = cfg.env;
    if let Some(k) = env.k {
        e.spreading_factor = k;
    }
    if let Some(s) = env.s {
        e.shipping = s;
    }
    if let Some(w) = env.w {
        e.wind_speed = w;
    }
    if let Some(r) = env.l_ref_km {
        e.spreading_ref_km = r;
    }
    e.validate().map_err(|err| Failure::Usage(err.to_string()))?;
    if let Some(w) = e.spreading_warning() {
        log::warn!("{w}");
    }
    cfg.env = e;
    Ok(cfg)
}

fn cmd_psd(freq: f64, env: &EnvArgs) -> Result<(), Failure> {
    let cfg = load_config(env)?;
    let f = FrequencyKHz::new(freq)?;
    let c = noise_components(f, &cfg.env);
    println!(
        "# schema={PSD_SCHEMA} f_kHz={freq} k={} s={} w={} config={}",
        cfg.env.spreading_factor,
        cfg.env.shipping,
        cfg.env.wind_speed,
        cfg.hash()
    );
    for (name, v) in [
        ("turbulence", c.turbulence),
        ("shipping", c.shipping),
        ("wind", c.wind),
        ("thermal", c.thermal),
        ("total", c.total()),
    ] {
        println!("{name:<10} {:>12.6} dB {:>18.9e}", v.db(), v.linear());
    }
    Ok(())
}

fn solution_json(cfg: &RunConfig, sol: &uwacap::LinkSolution) -> Value {
    let mut v = serde_json::to_value(sol).expect("solution serializes");
    let obj = v.as_object_mut().expect("struct is an object");
    obj.insert("schema".into(), Value::from(SOLUTION_SCHEMA));
    obj.insert("config_hash".into(), Value::from(cfg.hash()));
    v
}

fn cmd_solve(l: f64, c: f64, env: &EnvArgs) -> Result<(), Failure> {
    let cfg = load_config(env)?;
    let q = LinkQuery::new(l, c)?;
    let sol = Solver::new(cfg.env, cfg.solver)?.solve(&q)?;
    let text = serde_json::to_string_pretty(&solution_json(&cfg, &sol)).expect("json");
    println!("{text}");
    Ok(())
}

fn cmd_sweep(case: Option<&str>, points: Option<usize>, out: &Path, env: &EnvArgs) -> Result<(), Failure> {
    let mut cfg = load_config(env)?;
    if let Some(c) = case {
        cfg.sweep.case = Some(c.parse::<CasePreset>()?);
        cfg.sweep.l_axis = None;
        cfg.sweep.c_axis = None;
    } else if env.config.is_none() {
        return Err(Failure::Usage("sweep needs --case or --config".into()));
    }
    if let Some(p) = points {
        cfg.sweep.points = p;
    }
    let spec = cfg.sweep_spec()?;
    let result = run_sweep(&spec, &cfg.solver)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let file = fs::File::create(out).map_err(|e| io_err(out, e))?;
    write_sweep_csv(BufWriter::new(file), &SweepMeta::of(&result), &sweep_to_table(&result))?;
    eprintln!(
        "{}: {} cells in {:.2} s",
        out.display(),
        result.cells.len(),
        result.elapsed_s
    );
    Ok(())
}

fn variant(shifted: bool) -> InterceptVariant {
    if shifted {
        InterceptVariant::Shifted
    } else {
        InterceptVariant::AsPrinted
    }
}

fn cmd_fit(input: &Path, quantity: &str, out_dir: &Path, shifted: bool) -> Result<(), Failure> {
    let q: Quantity = quantity.parse()?;
    let text = fs::read_to_string(input).map_err(|e| io_err(input, e))?;
    let (meta, rows) = read_sweep_csv(text.as_bytes())?;
    let fits = fit_power_law(&rows, q)?;
    let model = fit_coefficient_model(&fits, variant(shifted))?;
    let hash = uwacap::config::content_hash(&(&meta.config_hash, q, variant(shifted)));

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let stem = format!("{}_{}", meta.case_label, q.label());
    let models = [model.clone()];
    let mut coeffs = alpha_table_csv(&models, "alpha", &hash);
    coeffs.push_str(&beta_table_csv(&models, "beta", &hash));
    let files = [
        (format!("coeffs_{stem}.csv"), coeffs),
        (format!("plot_{stem}.csv"), plot_csv(&fits, &model, &hash)),
    ];
    for (name, body) in &files {
        let p = out_dir.join(name);
        fs::write(&p, body).map_err(|e| io_err(&p, e))?;
    }

    let a = model.alpha_row();
    let b = model.beta_row();
    println!("# schema=uwacap.fit/1 case={} quantity={} config={hash}", meta.case_label, q.label());
    println!("alpha1..alpha4: {:.6e} {:.6e} {:.6e} {:.6e}  MSE {:.4e}", a[0], a[1], a[2], a[3], model.mse_a2);
    println!("beta1..beta3:   {:.6e} {:.6e} {:.6e}  MSE {:.4e}", b[0], b[1], b[2], model.mse_a1);
    Ok(())
}

fn cmd_report(sweeps: &Path, out: Option<&Path>, shifted: bool) -> Result<(), Failure> {
    let inputs = read_sweep_dir(sweeps)?;
    let report = build_report(&inputs, variant(shifted))?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| sweeps.join("report"));
    report.write_to(&dir)?;
    print!("{}", report.files["report.txt"]);
    eprintln!("wrote {} files to {}", report.files.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match &cli.cmd {
        Command::Psd { freq, env } => cmd_psd(*freq, env),
        Command::Solve { l, c, env } => cmd_solve(*l, *c, env),
        Command::Sweep { case, points, out, env } => cmd_sweep(case.as_deref(), *points, out, env),
        Command::Fit {
            input,
            quantity,
            out_dir,
            shifted_intercept,
        } => cmd_fit(input, quantity, out_dir, *shifted_intercept),
        Command::Report {
            sweeps,
            out,
            shifted_intercept,
        } => cmd_report(sweeps, out.as_deref(), *shifted_intercept),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
