//! Workflows behind the `reinsure` binary: solve, verify, price, simulate
//! and the two reproductions. Each returns a serializable summary and writes
//! its artifacts into the output directory.
//!
//! Contracts are exchanged as CSV with a `z,value` header, `z` strictly
//! increasing from 0 and `value` the indemnity `I(z)`; a file with an `I`
//! column (such as the solver's own `contract.csv`) is accepted as well.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::closedform::{self, LayerReproduction, StopLossCertificate};
use crate::config::{Model, Route, RunConfig};
use crate::distortions::Distortion;
use crate::distributions::LossDistribution;
use crate::error::{Error, Result};
use crate::objective::{drift_volatility, solve_rate, RateOptions};
use crate::premium::{premium_rate, DualDistribution, MarketParams};
use crate::retention::{RetentionFunction, SLOPE_TOL};
use crate::simulate::{simulate_ruin, SimReport};
use crate::solver::phi::phi_eval;
use crate::solver::{retention_from_psi, solve_quantile_ode, verify_optimality, OptimalityReport};

/// Random directions used by `verify` and `--paranoid`.
pub const VERIFY_DIRECTIONS: usize = 1000;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Assumption(_) => 2,
        Error::Solver(_)
        | Error::CrossCheck(_)
        | Error::NonFinite(_)
        | Error::Regression(_)
        | Error::NotConcave(_)
        | Error::NoQuantileDensity(_) => 3,
        Error::Inadmissible(_) => 4,
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidDistribution(_)
        | Error::InvalidDistortion(_)
        | Error::DegenerateDistortion(_)
        | Error::Json(_) => 5,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

/// Reads a contract file into the retention `H = z - I`, naming the
/// violated no-sabotage clause when the indemnity is inadmissible.
pub fn read_contract(path: &Path) -> Result<RetentionFunction> {
    let bad = |m: String| Error::Inadmissible(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(zc), Some(ic)) = (col("z"), col("value").or_else(|| col("I"))) else {
        return Err(bad(format!("expected a `z,value` header, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    };
    let (mut z, mut ind) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let field = rec.get(c).unwrap_or("");
            field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(format!("row {}: '{field}' is not a finite number", row + 2)))
        };
        z.push(num(zc)?);
        ind.push(num(ic)?);
    }
    if z.first() != Some(&0.0) {
        return Err(bad("the z column must start at 0".into()));
    }
    if let Some(w) = z.windows(2).find(|w| w[1] <= w[0]) {
        return Err(bad(format!("z must strictly increase, but {} follows {}", w[1], w[0])));
    }
    if ind[0].abs() > SLOPE_TOL {
        return Err(bad(format!("I(0) = {}: an indemnity must vanish at zero loss", ind[0])));
    }
    for k in 1..z.len() {
        let r = (ind[k] - ind[k - 1]) / (z[k] - z[k - 1]);
        if r < -SLOPE_TOL {
            return Err(bad(format!(
                "I decreases on [{}, {}] (slope {r}): violates I(z) - I(z') >= 0 for z >= z'",
                z[k - 1],
                z[k]
            )));
        }
        if r > 1.0 + SLOPE_TOL {
            return Err(bad(format!(
                "I grows faster than the loss on [{}, {}] (slope {r}): violates I(z) - I(z') <= z - z'",
                z[k - 1],
                z[k]
            )));
        }
    }
    RetentionFunction::from_indemnity(z, &ind)
}

/// Writes `z,value` rows for the indemnity of `h` at its nodes.
pub fn write_contract(path: &Path, h: &RetentionFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z", "value"])?;
    for &z in h.nodes() {
        w.write_record([z.to_string(), h.indemnity(z).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `z,H,I,Phi` at the nodes of `h`.
fn write_curve(path: &Path, h: &RetentionFunction, a: f64, dual: &DualDistribution) -> Result<()> {
    let phi = phi_eval(h, a, dual, &[])?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z", "H", "I", "Phi"])?;
    for (&z, &p) in phi.z.iter().zip(&phi.values) {
        w.write_record([z.to_string(), h.eval(z).to_string(), h.indemnity(z).to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RouteCheck {
    /// `sup |H_qp - H_ode|` over the quantile grid's range.
    pub sup_distance: f64,
    /// Twice the largest spacing of the convex-program grid.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub route: Route,
    pub a_star: f64,
    pub v_at_a_star: f64,
    /// `pi - (1 + theta) int z dF_hat`.
    pub target: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub theta0: f64,
    pub theta: f64,
    /// `c(I*)`.
    pub premium: f64,
    pub max_spacing: f64,
    pub n_nodes: usize,
    pub route_check: Option<RouteCheck>,
    pub optimality: Option<OptimalityReport>,
}

pub struct Solved {
    pub summary: SolveSummary,
    pub h_star: RetentionFunction,
}

/// `a*` from the convex program, then `H*` from the configured route.
pub fn solve(cfg: &RunConfig, model: &Model, paranoid: bool) -> Result<Solved> {
    let rate = solve_rate(&model.params, &model.dual, &cfg.rate_options())?;
    let route = match cfg.solver.route {
        Route::Auto if model.loss.has_quantile_density() => Route::Ode,
        Route::Auto => Route::Qp,
        r => r,
    };
    let ode = if route == Route::Ode || (paranoid && model.loss.has_quantile_density()) {
        let psi = solve_quantile_ode(rate.a_star, &model.dual, &cfg.ode_options())?;
        Some((retention_from_psi(&psi)?, psi.z_resolved))
    } else {
        None
    };
    let route_check = match (&ode, paranoid) {
        (Some((h, z_max)), true) => {
            let check = RouteCheck { sup_distance: h.sup_distance_on(&rate.h_star, *z_max), bound: 2.0 * rate.max_spacing };
            if check.sup_distance > check.bound {
                return Err(Error::CrossCheck(format!(
                    "convex-program and quantile routes differ by {} > {}",
                    check.sup_distance, check.bound
                )));
            }
            Some(check)
        }
        _ => None,
    };
    let h_star = match (route, ode) {
        (Route::Ode, Some((h, _))) => h,
        _ => rate.h_star.clone(),
    };
    let optimality = if paranoid {
        let report = verify_optimality(&h_star, rate.a_star, &model.dual, &cfg.grid, VERIFY_DIRECTIONS, cfg.simulate.seed)?;
        if !report.passed {
            return Err(Error::CrossCheck(format!(
                "solution fails its optimality certificate (condition I worst {:.3e}, complementarity {:.3e})",
                report.condition_i.worst, report.oide.complementarity
            )));
        }
        Some(report)
    } else {
        None
    };
    let (mu, sigma2) = drift_volatility(&h_star, &model.params, &model.dual)?;
    let premium = premium_rate(&h_star, &model.dual)?.value();
    let summary = SolveSummary {
        route,
        a_star: rate.a_star,
        v_at_a_star: rate.v_at_a_star,
        target: rate.target,
        mu,
        sigma2,
        theta0: model.params.theta0,
        theta: model.dual.theta(),
        premium,
        max_spacing: rate.max_spacing,
        n_nodes: h_star.nodes().len(),
        route_check,
        optimality,
    };
    Ok(Solved { summary, h_star })
}

pub fn run_solve(cfg: &RunConfig, out: &Path, paranoid: bool) -> Result<SolveSummary> {
    let model = cfg.model()?;
    let solved = solve(cfg, &model, paranoid)?;
    fs::create_dir_all(out)?;
    if cfg.output.wants("json") {
        write_json(&out.join("summary.json"), &solved.summary)?;
    }
    if cfg.output.wants("csv") {
        write_curve(&out.join("contract.csv"), &solved.h_star, solved.summary.a_star, &model.dual)?;
    }
    Ok(solved.summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub a_star: f64,
    /// `2 mu / sigma^2` of the contract: equals `a*` at the optimum.
    pub implied_rate: Option<f64>,
    pub report: OptimalityReport,
    pub passed: bool,
}

/// Checks both optimality conditions for a contract at the model's `a*`.
pub fn run_verify(cfg: &RunConfig, contract: &Path, out: &Path) -> Result<VerifySummary> {
    let h = read_contract(contract)?;
    let model = cfg.model()?;
    let rate = solve_rate(&model.params, &model.dual, &cfg.rate_options())?;
    let report = verify_optimality(&h, rate.a_star, &model.dual, &cfg.grid, VERIFY_DIRECTIONS, cfg.simulate.seed)?;
    let (mu, s2) = drift_volatility(&h, &model.params, &model.dual)?;
    let summary = VerifySummary {
        a_star: rate.a_star,
        implied_rate: (s2 > 0.0).then(|| 2.0 * mu / s2),
        passed: report.passed,
        report,
    };
    fs::create_dir_all(out)?;
    write_json(&out.join("verify.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PriceSummary {
    /// `(1 + theta0) int g(P(I(Z) > t)) dt`.
    pub direct: f64,
    /// `(1 + theta) int I dF_hat`.
    pub dual: f64,
    pub relative_gap: f64,
}

pub fn run_price(cfg: &RunConfig, contract: &Path) -> Result<PriceSummary> {
    let h = read_contract(contract)?;
    let model = cfg.model()?;
    let q = premium_rate(&h, &model.dual)?;
    Ok(PriceSummary { direct: q.direct, dual: q.dual, relative_gap: (q.direct - q.dual).abs() / q.dual.abs().max(1e-300) })
}

/// Simulates under the given contract, or under `I*` (with `a*` as the
/// model rate) when none is given.
pub fn run_simulate(cfg: &RunConfig, contract: Option<&Path>, out: &Path) -> Result<SimReport> {
    let model = cfg.model()?;
    let mut sim = cfg.simulate.clone();
    let h = match contract {
        Some(path) => read_contract(path)?,
        None => {
            let solved = solve(cfg, &model, false)?;
            sim.model_rate = sim.model_rate.or(Some(solved.summary.a_star));
            solved.h_star
        }
    };
    let want_paths = sim.record_paths || cfg.output.wants("paths");
    sim.record_paths = want_paths;
    let report = simulate_ruin(&h, &model.params, &model.dual, &sim)?;
    fs::create_dir_all(out)?;
    write_json(&out.join("summary.json"), &report)?;
    if let Some(paths) = report.paths.as_ref().filter(|_| want_paths) {
        let mut w = csv::Writer::from_path(out.join("paths.csv"))?;
        w.write_record(["path_id", "ruined", "ruin_time_or_T"])?;
        for p in paths {
            w.write_record([p.path_id.to_string(), u8::from(p.ruined).to_string(), p.time.to_string()])?;
        }
        w.flush()?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerSummary {
    pub pi: f64,
    pub theta: f64,
    pub a_star: f64,
    pub v_at_1: f64,
    pub max_indemnity_error: f64,
    pub indemnity: Vec<(f64, f64, f64)>,
    pub sign_checks: Vec<closedform::SignCheck>,
    pub sign_checks_numerical: Vec<closedform::SignCheck>,
}

impl From<&LayerReproduction> for LayerSummary {
    fn from(r: &LayerReproduction) -> Self {
        Self {
            pi: r.pi,
            theta: r.theta,
            a_star: r.rate.a_star,
            v_at_1: r.v_at_1,
            max_indemnity_error: r.max_indemnity_error,
            indemnity: r.indemnity.clone(),
            sign_checks: r.sign_checks.clone(),
            sign_checks_numerical: r.sign_checks_numerical.clone(),
        }
    }
}

pub fn reproduce_layer(out: &Path) -> Result<LayerSummary> {
    let r = closedform::multilayer_case()?;
    let dual = DualDistribution::new(&closedform::layer_loss(), &Distortion::layer_canonical(), r.theta0)?;
    let summary = LayerSummary::from(&r);
    fs::create_dir_all(out)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_curve(&out.join("contract.csv"), &r.rate.h_star, r.rate.a_star, &dual)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct StopLossSummary {
    pub theta0: f64,
    pub pi: f64,
    pub d_star: f64,
    /// `d*` from the scaled equation in `kappa = (pi - E[Z]) / (theta0 E[Z])`.
    pub d_star_kappa: f64,
    pub a_star_closed_form: f64,
    pub a_star_solver: f64,
    pub sup_error: f64,
    pub max_spacing: f64,
    pub certificate: StopLossCertificate,
}

/// Expected value principle on unit exponential losses: the optimum is
/// stop-loss with the closed-form deductible.
pub fn reproduce_stoploss(out: &Path) -> Result<StopLossSummary> {
    let (theta0, pi) = (1.0, 1.5);
    let f = LossDistribution::exponential(1.0)?;
    let dual = DualDistribution::new(&f, &Distortion::identity(), theta0)?;
    let params = MarketParams { pi, theta0 };
    let ded = closedform::no_distortion_deductible(&f, theta0, pi)?;
    let kappa = (pi - f.mean()) / (theta0 * f.mean());
    let d_star_kappa = closedform::kappa_deductible(&f, kappa)?;
    let rate = solve_rate(&params, &dual, &RateOptions::default())?;
    let exact = RetentionFunction::stop_loss(ded.d_star)?;
    let sup_error = rate.h_star.sup_distance(&exact);
    let certificate = closedform::stoploss_check(ded.d_star, &params, &dual)?;
    let summary = StopLossSummary {
        theta0,
        pi,
        d_star: ded.d_star,
        d_star_kappa,
        a_star_closed_form: ded.a_star,
        a_star_solver: rate.a_star,
        sup_error,
        max_spacing: rate.max_spacing,
        certificate,
    };
    if (summary.a_star_solver - ded.a_star).abs() > 1e-4 * ded.a_star {
        return Err(Error::Regression(format!("solver a* = {} vs theta0/d* = {}", rate.a_star, ded.a_star)));
    }
    if sup_error > 2.0 * rate.max_spacing {
        return Err(Error::Regression(format!("H* is {sup_error} away from min(z, d*)")));
    }
    if !summary.certificate.passed || (d_star_kappa - ded.d_star).abs() > 1e-8 {
        return Err(Error::Regression("stop-loss closed form no longer certifies".into()));
    }
    fs::create_dir_all(out)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_curve(&out.join("contract.csv"), &rate.h_star, rate.a_star, &dual)?;
    Ok(summary)
}
