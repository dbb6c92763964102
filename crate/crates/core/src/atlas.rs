//! Classification of the `(α, β)`-plane into regions where nodal solutions
//! provably exist (with a computed certificate), provably do not exist, or
//! where nothing is known.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{evaluate, fmt17, DiscreteFunction, EnergyChain, FunctionalContext, Mesh};
use crate::error::{Error, Result};
use crate::flow::{find_nodal_negative, NegMethod, NegOpts};
use crate::nehari::{
    beta_l_star, curve_beta_2, curve_beta_l, default_seeds, minimize_m1, CurveOpts, CurveSample,
    CurveStatus, M1Opts,
};
use crate::solver::newton_critical;
use crate::spectral1d::{beta_upper_star, eigenvalue, k_alpha};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nonexistent,
    ExistsPosEnergy,
    ExistsNegEnergy,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Nonexistent => "NONEXISTENT",
            Verdict::ExistsPosEnergy => "EXISTS_POS_ENERGY",
            Verdict::ExistsNegEnergy => "EXISTS_NEG_ENERGY",
            Verdict::Unknown => "UNKNOWN",
        }
    }
}

/// Which rule produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `α ≤ λ_2(p)` and `β ≤ λ_2(q)` on an interval.
    Nonexistence1d,
    /// `α > λ_2(p)`, `β < β_L(α)`: least-energy nodal solution on the Nehari set.
    PositiveEnergy,
    /// `α < λ_2(p)`, `β > λ_2(q)`.
    NegativeEnergyLowAlpha,
    /// `β > max{β_U*(α), λ_{k_α+1}(q)}`.
    NegativeEnergyHighBeta,
    /// Outside every proven region, but a solver produced a certificate.
    NumericalOnly,
    None,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Nonexistence1d => "nonexistence_1d",
            Rule::PositiveEnergy => "positive_energy",
            Rule::NegativeEnergyLowAlpha => "negative_energy_low_alpha",
            Rule::NegativeEnergyHighBeta => "negative_energy_high_beta",
            Rule::NumericalOnly => "numerical_only",
            Rule::None => "none",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub alpha: f64,
    pub beta: f64,
    pub verdict: Verdict,
    pub rule: Rule,
    pub certificate_path: Option<PathBuf>,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub nodal_domains: Option<usize>,
    /// Solver that produced the certificate: `nehari`, `flow` or `shooting`.
    pub method: Option<String>,
    /// `β_L(α)` as used by the membership test.
    pub beta_l: Option<f64>,
    /// Why a solver-backed rule did not certify.
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub solution: Option<DiscreteFunction>,
}

impl RegionVerdict {
    fn new(alpha: f64, beta: f64) -> Self {
        RegionVerdict {
            alpha,
            beta,
            verdict: Verdict::Unknown,
            rule: Rule::None,
            certificate_path: None,
            energy: None,
            residual: None,
            nodal_domains: None,
            method: None,
            beta_l: None,
            diagnostic: None,
            solution: None,
        }
    }
}

/// `β_L` samples with conservative piecewise-linear lookup.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BetaLTable {
    /// Sorted by `alpha`; only samples with status `OK`.
    pub samples: Vec<(f64, f64)>,
}

impl BetaLTable {
    pub fn from_samples(samples: &[CurveSample]) -> Self {
        let mut s: Vec<(f64, f64)> = samples
            .iter()
            .filter(|c| c.status == CurveStatus::Ok && c.value.is_finite())
            .map(|c| (c.alpha, c.value))
            .collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        BetaLTable { samples: s }
    }

    /// A value `≤ β_L(α)`: exact at a sample, the smaller neighbour in
    /// between, `None` outside the sampled range.
    pub fn lower(&self, alpha: f64) -> Option<f64> {
        let s = &self.samples;
        let k = s.partition_point(|x| x.0 < alpha);
        if k < s.len() && s[k].0 == alpha {
            return Some(s[k].1);
        }
        if k == 0 || k == s.len() {
            return None;
        }
        Some(s[k - 1].1.min(s[k].1))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasOpts {
    pub t_len: f64,
    /// Interior nodes of the mesh used by the solvers.
    pub n: usize,
    /// Grid points per axis.
    pub resolution: usize,
    /// Defaults to `[0, 2λ_3(p)]`.
    pub alpha_range: Option<(f64, f64)>,
    /// Defaults to `[0, 2λ_3(q)]`.
    pub beta_range: Option<(f64, f64)>,
    /// Residual bound for certificates.
    pub tol: f64,
    /// Run both solvers on `UNKNOWN` cells and report successes as
    /// `numerical_only`.
    pub numerical_only: bool,
    /// Number of `NONEXISTENT` cells on which both solvers are run anyway.
    pub probes: usize,
    pub seed: u64,
    /// Worker count; `None` reads `PQ_ATLAS_THREADS` (0 or unset = all cores).
    pub threads: Option<usize>,
    /// Also estimate `β_2` for the overlay (on every fourth α column).
    pub beta2_overlay: bool,
    pub curve: CurveOpts,
}

impl Default for AtlasOpts {
    fn default() -> Self {
        AtlasOpts {
            t_len: 1.0,
            n: 200,
            resolution: 40,
            alpha_range: None,
            beta_range: None,
            tol: 1e-6,
            numerical_only: false,
            probes: 20,
            seed: 0,
            threads: None,
            beta2_overlay: true,
            curve: CurveOpts::default(),
        }
    }
}

struct Thresholds {
    l2p: f64,
    l2q: f64,
}

impl Thresholds {
    fn new(ctx: &FunctionalContext, t_len: f64) -> Result<Self> {
        Ok(Thresholds {
            l2p: eigenvalue(2, ctx.p, t_len)?,
            l2q: eigenvalue(2, ctx.q, t_len)?,
        })
    }
}

/// `max{β_U*(α), λ_{k_α+1}(q)}`; in one dimension every real `α` lies in the
/// closure of the resolvent set's complement, so no further condition on `α`.
pub fn negative_energy_threshold(alpha: f64, p: f64, q: f64, t_len: f64) -> Result<f64> {
    let k = k_alpha(alpha, p, t_len)?;
    Ok(beta_upper_star(alpha, p, q, t_len)?.max(eigenvalue(k + 1, q, t_len)?))
}

enum Attempt {
    Certified {
        u: DiscreteFunction,
        energy: f64,
        residual: f64,
        nodal: usize,
        method: &'static str,
    },
    Failed(String),
}

fn attempt_positive(ctx: &FunctionalContext, mesh: Mesh, tol: f64) -> Attempt {
    let seeds = match default_seeds(mesh, ctx.p) {
        Ok(s) => s,
        Err(e) => return Attempt::Failed(e.to_string()),
    };
    let opts = M1Opts {
        tol_resid: tol,
        ..M1Opts::default()
    };
    match minimize_m1(ctx, &seeds, &opts) {
        Ok((u, _)) => certify(u, ctx, tol, true, "nehari"),
        Err(e) => Attempt::Failed(format!("{}: {e}", e.code())),
    }
}

fn attempt_negative(ctx: &FunctionalContext, mesh: Mesh, tol: f64) -> Attempt {
    let opts = NegOpts {
        tol,
        ..NegOpts::default()
    };
    match find_nodal_negative(ctx, mesh, &opts) {
        Ok((u, r)) => certify(
            u,
            ctx,
            tol,
            false,
            match r.method {
                NegMethod::Flow => "flow",
                NegMethod::Shooting => "shooting",
            },
        ),
        Err(e) => Attempt::Failed(format!("{}: {e}", e.code())),
    }
}

/// Largest relative energy change tolerated under mesh refinement. Profiles
/// with three or four domains at `n = 200` move by a few percent; the sign
/// is what the certificate asserts.
pub const REFINEMENT_TOL: f64 = 0.1;

/// Interpolates `u` onto the mesh with `2n + 1` interior nodes, polishes it
/// there by Newton's method and returns the refined critical point.
pub fn refine_solution(u: &DiscreteFunction, ctx: &FunctionalContext) -> Result<DiscreteFunction> {
    let mesh = u.mesh();
    let fine = Mesh::new(mesh.t_len, 2 * mesh.n + 1)?;
    let v = u.values();
    let w: Vec<f64> = (0..fine.n)
        .map(|k| {
            if k % 2 == 1 {
                v[k / 2]
            } else {
                let i = k / 2;
                let left = if i == 0 { 0.0 } else { v[i - 1] };
                let right = if i == mesh.n { 0.0 } else { v[i] };
                0.5 * (left + right)
            }
        })
        .collect();
    let (w, _) = newton_critical(&EnergyChain(*ctx), &w, fine.h(), 0.0, 40);
    DiscreteFunction::new(fine, w)
}

/// Fresh re-evaluation of a solver output, followed by a refinement test: a
/// certificate must persist on the refined mesh with the same sign pattern
/// and nearly the same energy. This rejects discrete solutions that exist
/// only because discrete eigenvalues sit slightly below their limits.
fn certify(
    u: DiscreteFunction,
    ctx: &FunctionalContext,
    tol: f64,
    positive: bool,
    method: &'static str,
) -> Attempt {
    let r = evaluate(&u, ctx);
    let sign_ok = if positive { r.e > 0.0 } else { r.e < 0.0 };
    if r.residual <= tol && sign_ok && r.nodal_domains >= 2 {
        let fine = match refine_solution(&u, ctx) {
            Ok(f) => evaluate(&f, ctx),
            Err(e) => return Attempt::Failed(e.to_string()),
        };
        if fine.residual > tol
            || fine.nodal_domains != r.nodal_domains
            || (fine.e - r.e).abs() > REFINEMENT_TOL * fine.e.abs()
        {
            return Attempt::Failed(format!(
                "certificate not mesh-stable: refined E {:e} vs {:e}, residual {:e}, nodal domains {}",
                fine.e, r.e, fine.residual, fine.nodal_domains
            ));
        }
        Attempt::Certified {
            u,
            energy: r.e,
            residual: r.residual,
            nodal: r.nodal_domains,
            method,
        }
    } else {
        Attempt::Failed(format!(
            "certificate rejected on re-evaluation: residual {:e}, E {:e}, nodal domains {}",
            r.residual, r.e, r.nodal_domains
        ))
    }
}

fn apply(v: &mut RegionVerdict, a: Attempt, verdict: Verdict, rule: Rule) -> bool {
    match a {
        Attempt::Certified {
            u,
            energy,
            residual,
            nodal,
            method,
        } => {
            v.method = Some(method.to_string());
            v.verdict = verdict;
            v.rule = rule;
            v.energy = Some(energy);
            v.residual = Some(residual);
            v.nodal_domains = Some(nodal);
            v.solution = Some(u);
            true
        }
        Attempt::Failed(msg) => {
            v.diagnostic = Some(match v.diagnostic.take() {
                Some(d) => format!("{d}; {msg}"),
                None => msg,
            });
            false
        }
    }
}

/// Classifies one point by the fixed rule order; solver failures degrade to
/// `UNKNOWN` and never to `NONEXISTENT`.
pub fn classify(
    alpha: f64,
    beta: f64,
    ctx: &FunctionalContext,
    curves: &BetaLTable,
    opts: &AtlasOpts,
) -> Result<RegionVerdict> {
    let th = Thresholds::new(ctx, opts.t_len)?;
    classify_with(alpha, beta, ctx, curves, opts, &th)
}

fn classify_with(
    alpha: f64,
    beta: f64,
    ctx: &FunctionalContext,
    curves: &BetaLTable,
    opts: &AtlasOpts,
    th: &Thresholds,
) -> Result<RegionVerdict> {
    let c = ctx.with_params(alpha, beta);
    let mesh = Mesh::new(opts.t_len, opts.n)?;
    let mut v = RegionVerdict::new(alpha, beta);
    if alpha <= th.l2p && beta <= th.l2q {
        v.verdict = Verdict::Nonexistent;
        v.rule = Rule::Nonexistence1d;
        return Ok(v);
    }
    let bl = if alpha > th.l2p {
        curves.lower(alpha)
    } else {
        None
    };
    v.beta_l = bl;
    let mut tried_pos = false;
    let mut tried_neg = false;
    if let Some(bl) = bl {
        if beta < bl {
            tried_pos = true;
            if apply(
                &mut v,
                attempt_positive(&c, mesh, opts.tol),
                Verdict::ExistsPosEnergy,
                Rule::PositiveEnergy,
            ) {
                return Ok(v);
            }
        }
    }
    if beta > th.l2q {
        let rule = if alpha < th.l2p {
            Some(Rule::NegativeEnergyLowAlpha)
        } else if beta > negative_energy_threshold(alpha, ctx.p, ctx.q, opts.t_len)? {
            Some(Rule::NegativeEnergyHighBeta)
        } else {
            None
        };
        if let Some(rule) = rule {
            tried_neg = true;
            if apply(
                &mut v,
                attempt_negative(&c, mesh, opts.tol),
                Verdict::ExistsNegEnergy,
                rule,
            ) {
                return Ok(v);
            }
        }
    }
    if opts.numerical_only {
        if !tried_pos
            && apply(
                &mut v,
                attempt_positive(&c, mesh, opts.tol),
                Verdict::ExistsPosEnergy,
                Rule::NumericalOnly,
            )
        {
            return Ok(v);
        }
        if !tried_neg
            && apply(
                &mut v,
                attempt_negative(&c, mesh, opts.tol),
                Verdict::ExistsNegEnergy,
                Rule::NumericalOnly,
            )
        {
            return Ok(v);
        }
    }
    Ok(v)
}

/// Both solvers run on a cell where no nodal solution exists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub alpha: f64,
    pub beta: f64,
    pub positive_accepted: bool,
    pub negative_accepted: bool,
    pub positive_diagnostic: Option<String>,
    pub negative_diagnostic: Option<String>,
}

impl ProbeResult {
    pub fn any_accepted(&self) -> bool {
        self.positive_accepted || self.negative_accepted
    }
}

pub fn probe(alpha: f64, beta: f64, ctx: &FunctionalContext, mesh: Mesh, tol: f64) -> ProbeResult {
    let c = ctx.with_params(alpha, beta);
    let diag = |a: &Attempt| match a {
        Attempt::Certified { .. } => None,
        Attempt::Failed(m) => Some(m.clone()),
    };
    let pos = attempt_positive(&c, mesh, tol);
    let neg = attempt_negative(&c, mesh, tol);
    ProbeResult {
        alpha,
        beta,
        positive_accepted: matches!(pos, Attempt::Certified { .. }),
        negative_accepted: matches!(neg, Attempt::Certified { .. }),
        positive_diagnostic: diag(&pos),
        negative_diagnostic: diag(&neg),
    }
}

/// Plot-ready reference curves and lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Overlays {
    pub beta_l: Vec<CurveSample>,
    pub beta_2: Vec<CurveSample>,
    pub beta_l_star: f64,
    /// `(λ_k(p), β_U*(λ_k(p)))`
    pub beta_u_star: Vec<(f64, f64)>,
    pub lambda_p: Vec<f64>,
    pub lambda_q: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub nonexistent: usize,
    pub exists_pos_energy: usize,
    pub exists_neg_energy: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasSummary {
    pub p: f64,
    pub q: f64,
    pub t_len: f64,
    pub n: usize,
    pub resolution: usize,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub counts: VerdictCounts,
    pub numerical_only: usize,
    /// Cells carrying a certificate while also marked nonexistent.
    pub contradictions: usize,
    pub probes: Vec<ProbeResult>,
    pub probes_accepted: usize,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Row-major by `α` then `β`.
    pub cells: Vec<RegionVerdict>,
    pub overlays: Overlays,
    pub summary: AtlasSummary,
}

impl Atlas {
    pub fn cell(&self, i: usize, j: usize) -> &RegionVerdict {
        &self.cells[i * self.betas.len() + j]
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Worker count from `PQ_ATLAS_THREADS`; 0, unset or unparsable means all cores.
pub fn threads_from_env() -> usize {
    std::env::var("PQ_ATLAS_THREADS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

/// Classifies every point of a `resolution × resolution` grid.
pub fn sweep(ctx: &FunctionalContext, opts: &AtlasOpts) -> Result<Atlas> {
    if opts.resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let threads = opts.threads.unwrap_or_else(threads_from_env);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| sweep_inner(ctx, opts))
}

fn sweep_inner(ctx: &FunctionalContext, opts: &AtlasOpts) -> Result<Atlas> {
    let (p, q, t) = (ctx.p, ctx.q, opts.t_len);
    let th = Thresholds::new(ctx, t)?;
    let ar = opts
        .alpha_range
        .unwrap_or((0.0, 2.0 * eigenvalue(3, p, t)?));
    let br = opts.beta_range.unwrap_or((0.0, 2.0 * eigenvalue(3, q, t)?));
    let alphas = linspace(ar.0, ar.1, opts.resolution);
    let betas = linspace(br.0, br.1, opts.resolution);
    let curve_opts = CurveOpts {
        t_len: t,
        ..opts.curve
    };

    let cols: Vec<f64> = alphas.iter().copied().filter(|&a| a > th.l2p).collect();
    // The endpoint α = λ_2(p) anchors the lookup for the first column.
    let mut grid_l = vec![th.l2p];
    grid_l.extend(&cols);
    let beta_l = curve_beta_l(&grid_l, ctx, &curve_opts)?;
    let table = BetaLTable::from_samples(&beta_l);
    let beta_2 = if opts.beta2_overlay {
        let g: Vec<f64> = alphas.iter().copied().step_by(4).collect();
        curve_beta_2(&g, ctx, &curve_opts)?
    } else {
        Vec::new()
    };

    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let cells: Vec<RegionVerdict> = pairs
        .par_iter()
        .map(|&(a, b)| classify_with(a, b, ctx, &table, opts, &th))
        .collect::<Result<_>>()?;

    let mesh = Mesh::new(t, opts.n)?;
    let nonexistent: Vec<usize> = (0..cells.len())
        .filter(|&k| cells[k].verdict == Verdict::Nonexistent)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picks: Vec<usize> = if nonexistent.len() <= opts.probes {
        nonexistent.clone()
    } else {
        let mut idx = sample(&mut rng, nonexistent.len(), opts.probes).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|k| nonexistent[k]).collect()
    };
    let probes: Vec<ProbeResult> = picks
        .par_iter()
        .map(|&k| probe(cells[k].alpha, cells[k].beta, ctx, mesh, opts.tol))
        .collect();

    let mut counts = VerdictCounts::default();
    for c in &cells {
        match c.verdict {
            Verdict::Nonexistent => counts.nonexistent += 1,
            Verdict::ExistsPosEnergy => counts.exists_pos_energy += 1,
            Verdict::ExistsNegEnergy => counts.exists_neg_energy += 1,
            Verdict::Unknown => counts.unknown += 1,
        }
    }
    let contradictions = cells
        .iter()
        .filter(|c| c.verdict == Verdict::Nonexistent && c.solution.is_some())
        .count()
        + probes.iter().filter(|p| p.any_accepted()).count();
    let lambda_p: Vec<f64> = (1..)
        .map(|k| eigenvalue(k, p, t))
        .map_while(|l| l.ok().filter(|&l| l <= ar.1))
        .collect();
    let lambda_q: Vec<f64> = (1..)
        .map(|k| eigenvalue(k, q, t))
        .map_while(|l| l.ok().filter(|&l| l <= br.1))
        .collect();
    let beta_u_star = lambda_p
        .iter()
        .map(|&l| Ok((l, beta_upper_star(l, p, q, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let summary = AtlasSummary {
        p,
        q,
        t_len: t,
        n: opts.n,
        resolution: opts.resolution,
        alpha_range: ar,
        beta_range: br,
        numerical_only: cells
            .iter()
            .filter(|c| c.rule == Rule::NumericalOnly)
            .count(),
        counts,
        contradictions,
        probes_accepted: probes.iter().filter(|p| p.any_accepted()).count(),
        probes,
    };
    let overlays = Overlays {
        beta_l: beta_l.into_iter().skip(1).collect(),
        beta_2,
        beta_l_star: beta_l_star(p, q, t)?,
        beta_u_star,
        lambda_p,
        lambda_q,
    };
    Ok(Atlas {
        alphas,
        betas,
        cells,
        overlays,
        summary,
    })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Writes `atlas.csv`, `summary.json`, `overlays.json`, the curve CSVs and
/// one CSV per certificate under `dir/certificates`. Fills in
/// `certificate_path` on the cells.
pub fn write_outputs(atlas: &mut Atlas, dir: &Path) -> Result<()> {
    let cert_dir = dir.join("certificates");
    std::fs::create_dir_all(&cert_dir)?;
    let nb = atlas.betas.len();
    for (k, c) in atlas.cells.iter_mut().enumerate() {
        if let Some(u) = &c.solution {
            let rel =
                PathBuf::from("certificates").join(format!("cell_{:03}_{:03}.csv", k / nb, k % nb));
            u.save_csv(&dir.join(&rel))?;
            c.certificate_path = Some(rel);
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("atlas.csv"))?);
    writeln!(
        w,
        "alpha,beta,verdict,rule,certificate_path,energy,residual,nodal_domains,method"
    )?;
    for c in &atlas.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt17(c.alpha),
            fmt17(c.beta),
            c.verdict.as_str(),
            c.rule.as_str(),
            c.certificate_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            opt_num(c.energy),
            opt_num(c.residual),
            c.nodal_domains.map(|n| n.to_string()).unwrap_or_default(),
            c.method.as_deref().unwrap_or_default(),
        )?;
    }
    w.flush()?;
    std::fs::write(
        dir.join("cells.json"),
        serde_json::to_string_pretty(&atlas.cells).map_err(json_err)?,
    )?;
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&atlas.summary).map_err(json_err)?,
    )?;
    std::fs::write(
        dir.join("overlays.json"),
        serde_json::to_string_pretty(&atlas.overlays).map_err(json_err)?,
    )?;
    crate::nehari::write_curve_csv(
        &atlas.overlays.beta_l,
        std::fs::File::create(dir.join("curve_beta_l.csv"))?,
    )?;
    if !atlas.overlays.beta_2.is_empty() {
        crate::nehari::write_curve_csv(
            &atlas.overlays.beta_2,
            std::fs::File::create(dir.join("curve_beta_2.csv"))?,
        )?;
    }
    Ok(())
}

pub(crate) fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}
