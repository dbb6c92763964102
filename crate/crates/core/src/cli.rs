//! The `pq-atlas` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::atlas::{self, AtlasOpts};
use crate::discrete::{fmt17, FunctionalContext, Mesh};
use crate::error::{check_exponent, Error, Result};
use crate::flow::{find_nodal_negative, NegOpts};
use crate::nehari::{
    curve_beta_1, curve_beta_2, curve_beta_l, default_seeds, minimize_m1, write_curve_csv,
    CurveOpts, M1Opts,
};
use crate::spectral1d::{
    beta_upper_star, eigenfunction, eigenvalue, rayleigh_ratio, verify_ratio_bounds,
};

/// Shared run configuration, read from `--config <path>` (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "T")]
    pub t_len: f64,
    pub n: usize,
    /// Recognized keys: `residual`, `nehari`.
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 3.0,
            q: 2.0,
            t_len: 1.0,
            n: 400,
            tolerances: BTreeMap::new(),
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        FunctionalContext::new(self.p, self.q, 0.0, 0.0)?;
        Mesh::new(self.t_len, self.n)?;
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Domain(format!(
                "tolerance {k} = {v} must be positive"
            )));
        }
        Ok(())
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    fn ctx(&self, alpha: f64, beta: f64) -> Result<FunctionalContext> {
        FunctionalContext::new(self.p, self.q, alpha, beta)
    }

    fn out(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.output_dir)?;
        Ok(&self.output_dir)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pq-atlas",
    version,
    about = "Nodal solutions of the (p,q)-Laplacian eigenvalue problem on an interval"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Nehari,
    Flow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    #[value(name = "beta_L")]
    BetaL,
    #[value(name = "beta_1")]
    Beta1,
    #[value(name = "beta_2")]
    Beta2,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::BetaL => "beta_L",
            Which::Beta1 => "beta_1",
            Which::Beta2 => "beta_2",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// k-th Dirichlet eigenvalue of the r-Laplacian on (0, T).
    Eig {
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long = "T", allow_hyphen_values = true)]
        t_len: f64,
        #[arg(long)]
        k: usize,
        /// Print the eigenfunction at N equispaced points, endpoints included.
        #[arg(long)]
        samples: Option<usize>,
        /// Write the samples to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Rayleigh-ratio inequalities on an exponent grid.
    #[command(alias = "verify-lemmas")]
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid points per exponent axis on (1, 10].
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// R(p,q) = ‖φ_p′‖_q^q / ‖φ_p‖_q^q, and β_U*(α) when α is given.
    Ratio {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
    },
    /// Compute a nodal solution at (α, β).
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Sample a critical curve on an α-grid.
    Curve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long = "alpha-min", allow_hyphen_values = true)]
        alpha_min: f64,
        #[arg(long = "alpha-max", allow_hyphen_values = true)]
        alpha_max: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
    },
    /// Classify an (α, β)-grid.
    Atlas {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        resolution: usize,
        /// Interior nodes of the solver mesh (defaults to 200).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        /// Also try both solvers outside the proven regions.
        #[arg(long)]
        numerical_only: bool,
        #[arg(long)]
        no_beta2_overlay: bool,
    },
}

/// Failure with its exit code.
struct Failure {
    exit: i32,
    code: &'static str,
    detail: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Domain(_) | Error::Parse(_) | Error::Io(_) => 2,
            _ => 1,
        };
        Failure {
            exit,
            code: e.code(),
            detail: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("ERROR USAGE: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("ERROR {}: {}", f.code, f.detail.replace('\n', " "));
            f.exit
        }
    }
}

fn config(path: Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(&p),
        None => Ok(RunConfig::default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(atlas::json_err)?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

fn dispatch(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Eig {
            r,
            t_len,
            k,
            samples,
            out,
        } => cmd_eig(r, t_len, k, samples, out),
        Cmd::Verify { config: c, grid } => cmd_verify(config(c)?, grid),
        Cmd::Ratio { config: c, alpha } => cmd_ratio(config(c)?, alpha),
        Cmd::Solve {
            config: c,
            mode,
            alpha,
            beta,
        } => cmd_solve(config(c)?, mode, alpha, beta),
        Cmd::Curve {
            config: c,
            which,
            alpha_min,
            alpha_max,
            steps,
        } => cmd_curve(config(c)?, which, alpha_min, alpha_max, steps),
        Cmd::Atlas {
            config: c,
            resolution,
            n,
            probes,
            numerical_only,
            no_beta2_overlay,
        } => {
            let cfg = config(c)?;
            let opts = AtlasOpts {
                t_len: cfg.t_len,
                n: n.unwrap_or(200),
                resolution,
                tol: cfg.tol("residual", 1e-6),
                numerical_only,
                probes,
                seed: cfg.seed,
                beta2_overlay: !no_beta2_overlay,
                curve: CurveOpts {
                    t_len: cfg.t_len,
                    seed: cfg.seed,
                    ..CurveOpts::default()
                },
                ..AtlasOpts::default()
            };
            cmd_atlas(cfg, opts)
        }
    }
}

fn cmd_eig(
    r: f64,
    t_len: f64,
    k: usize,
    samples: Option<usize>,
    out: Option<PathBuf>,
) -> CmdResult {
    check_exponent(r)?;
    let lambda = eigenvalue(k, r, t_len)?;
    println!("{}", fmt17(lambda));
    if let Some(n) = samples {
        let e = eigenfunction(k, r, t_len)?;
        let mut buf = Vec::new();
        writeln!(buf, "t,phi").map_err(Error::from)?;
        for (t, v) in e.samples(n) {
            writeln!(buf, "{},{}", fmt17(t), fmt17(v)).map_err(Error::from)?;
        }
        match out {
            Some(p) => std::fs::write(p, buf).map_err(Error::from)?,
            None => std::io::stdout().write_all(&buf).map_err(Error::from)?,
        }
    }
    Ok(())
}

/// `m` points `1 + 9j/m`, `j = 1..=m`.
fn exponent_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|j| 1.0 + 9.0 * j as f64 / m as f64).collect()
}

fn cmd_verify(cfg: RunConfig, grid: usize) -> CmdResult {
    let g = exponent_grid(grid);
    let rep = verify_ratio_bounds(&g, &g, cfg.t_len)?;
    let dir = cfg.out()?;
    let mut w = Vec::new();
    writeln!(w, "p,q,lambda1_q,ratio,lambda2_q,lower_margin,upper_margin,sufficient_margin,quadrature_rel_diff")
        .map_err(Error::from)?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt17(r.p),
            fmt17(r.q),
            fmt17(r.lambda1_q),
            fmt17(r.ratio),
            fmt17(r.lambda2_q),
            fmt17(r.lower_margin),
            fmt17(r.upper_margin),
            fmt17(r.sufficient_margin),
            r.quadrature_rel_diff.map(fmt17).unwrap_or_default()
        )
        .map_err(Error::from)?;
    }
    std::fs::write(dir.join("margins.csv"), w).map_err(Error::from)?;
    write_json(&dir.join("margins.json"), &rep)?;
    println!(
        "pairs {} min_margin {} violations {}",
        rep.rows.len(),
        fmt17(rep.min_margin()),
        rep.violations.len()
    );
    if rep.all_hold() {
        Ok(())
    } else {
        Err(Failure {
            exit: 1,
            code: "INEQUALITY_VIOLATED",
            detail: format!(
                "{} pairs violate the ratio inequalities: {:?}",
                rep.violations.len(),
                rep.violations
            ),
        })
    }
}

#[derive(Serialize)]
struct RatioReport {
    p: f64,
    q: f64,
    #[serde(rename = "T")]
    t_len: f64,
    ratio: f64,
    quadrature: f64,
    lambda1_q: f64,
    lambda2_q: f64,
    alpha: Option<f64>,
    beta_upper_star: Option<f64>,
}

fn cmd_ratio(cfg: RunConfig, alpha: Option<f64>) -> CmdResult {
    let r = rayleigh_ratio(cfg.p, cfg.q, cfg.t_len)?;
    let bu = alpha
        .map(|a| beta_upper_star(a, cfg.p, cfg.q, cfg.t_len))
        .transpose()?;
    let rep = RatioReport {
        p: cfg.p,
        q: cfg.q,
        t_len: cfg.t_len,
        ratio: r.value,
        quadrature: r.quadrature,
        lambda1_q: eigenvalue(1, cfg.q, cfg.t_len)?,
        lambda2_q: eigenvalue(2, cfg.q, cfg.t_len)?,
        alpha,
        beta_upper_star: bu.filter(|b| b.is_finite()),
    };
    write_json(&cfg.out()?.join("ratio.json"), &rep)?;
    println!("{}", fmt17(r.value));
    if let Some(b) = bu {
        println!("{}", fmt17(b));
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<T: Serialize> {
    mode: &'static str,
    p: f64,
    q: f64,
    #[serde(rename = "T")]
    t_len: f64,
    n: usize,
    alpha: f64,
    beta: f64,
    status: &'static str,
    error: Option<String>,
    #[serde(flatten)]
    report: Option<T>,
}

fn cmd_solve(cfg: RunConfig, mode: Mode, alpha: f64, beta: f64) -> CmdResult {
    let ctx = cfg.ctx(alpha, beta)?;
    let mesh = Mesh::new(cfg.t_len, cfg.n)?;
    let dir = cfg.out()?.to_path_buf();
    let tol = cfg.tol("residual", 1e-6);
    let (name, outcome) = match mode {
        Mode::Nehari => {
            let opts = M1Opts {
                tol_resid: tol,
                nehari_tol: cfg.tolerances.get("nehari").copied(),
                ..M1Opts::default()
            };
            let seeds = default_seeds(mesh, cfg.p)?;
            (
                "nehari",
                minimize_m1(&ctx, &seeds, &opts).map(|(u, r)| (u, serde_json::to_value(r))),
            )
        }
        Mode::Flow => {
            let opts = NegOpts {
                tol,
                ..NegOpts::default()
            };
            (
                "flow",
                find_nodal_negative(&ctx, mesh, &opts).map(|(u, r)| (u, serde_json::to_value(r))),
            )
        }
    };
    let base = |status, error, report| SolveReport {
        mode: name,
        p: cfg.p,
        q: cfg.q,
        t_len: cfg.t_len,
        n: cfg.n,
        alpha,
        beta,
        status,
        error,
        report,
    };
    match outcome {
        Ok((u, rep)) => {
            u.save_csv(&dir.join("solution.csv"))?;
            let rep = rep.map_err(atlas::json_err)?;
            write_json(&dir.join("report.json"), &base("OK", None, Some(rep)))?;
            println!("{}", dir.join("solution.csv").display());
            Ok(())
        }
        Err(e) => {
            if let Error::NotConverged { best: Some(u), .. } = &e {
                u.save_csv(&dir.join("solution.csv"))?;
            }
            let fr = u_report(&e, &ctx);
            write_json(
                &dir.join("report.json"),
                &base(e.code(), Some(e.to_string()), fr),
            )?;
            Err(e.into())
        }
    }
}

/// Functional report of the best iterate attached to an error, if any.
fn u_report(e: &Error, ctx: &FunctionalContext) -> Option<serde_json::Value> {
    match e {
        Error::NotConverged { best: Some(u), .. } => {
            serde_json::to_value(crate::discrete::evaluate(u, ctx)).ok()
        }
        _ => None,
    }
}

fn cmd_curve(cfg: RunConfig, which: Which, a0: f64, a1: f64, steps: usize) -> CmdResult {
    if steps == 0 || !(a0 <= a1) {
        return Err(Error::Domain(format!(
            "need steps > 0 and alpha-min <= alpha-max, got {steps}, [{a0}, {a1}]"
        ))
        .into());
    }
    let grid: Vec<f64> = if steps == 1 {
        vec![a0]
    } else {
        (0..steps)
            .map(|k| a0 + (a1 - a0) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    let ctx = cfg.ctx(0.0, 0.0)?;
    let opts = CurveOpts {
        t_len: cfg.t_len,
        seed: cfg.seed,
        ..CurveOpts::default()
    };
    let samples = match which {
        Which::BetaL => curve_beta_l(&grid, &ctx, &opts)?,
        Which::Beta1 => curve_beta_1(&grid, &ctx, &opts)?,
        Which::Beta2 => curve_beta_2(&grid, &ctx, &opts)?,
    };
    let path = cfg.out()?.join(format!("curve_{}.csv", which.name()));
    write_curve_csv(&samples, std::fs::File::create(&path).map_err(Error::from)?)?;
    println!("{}", path.display());
    let failed = samples
        .iter()
        .filter(|s| s.status == crate::nehari::CurveStatus::Failed)
        .count();
    if failed > 0 {
        return Err(Failure {
            exit: 1,
            code: "NOT_CONVERGED",
            detail: format!("{failed} of {} curve samples failed", samples.len()),
        });
    }
    Ok(())
}

fn cmd_atlas(cfg: RunConfig, opts: AtlasOpts) -> CmdResult {
    let ctx = cfg.ctx(0.0, 0.0)?;
    let start = std::time::Instant::now();
    let mut a = atlas::sweep(&ctx, &opts)?;
    atlas::write_outputs(&mut a, cfg.out()?)?;
    let c = &a.summary.counts;
    println!(
        "nonexistent {} pos {} neg {} unknown {} contradictions {}",
        c.nonexistent,
        c.exists_pos_energy,
        c.exists_neg_energy,
        c.unknown,
        a.summary.contradictions
    );
    eprintln!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    if a.summary.contradictions > 0 {
        return Err(Failure {
            exit: 1,
            code: "VERDICT_CONTRADICTION",
            detail: format!(
                "{} cells or probes contradict a nonexistence rule",
                a.summary.contradictions
            ),
        });
    }
    Ok(())
}
