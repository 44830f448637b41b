use recest::diagnostics::{
    additive_lambda, additive_weights, check_b1, check_b2, check_m_conditions, check_r_conditions,
    g_trace, iid_lambda, k_trace, quadrature, r_series, ConditionReport, DiagnosticsError,
    GridSpec, KTrace, MConfig, PChoice, RConfig,
};
use recest::engine::accumulators;
use recest::harness::{estimate_rate, log_checkpoints, run_monte_carlo, AChoice, MonteCarloConfig};
use recest::models::{IidScheme, Model, ModelRegistry};
use recest::{simulate, EstimatingScheme, Matrix64, ParamVec64, Trajectory64, MAX_DIM};
use serde::Serialize;

use crate::args::{
    ANorm, CheckArgs, Condition, Format, KtraceArgs, ModelArgs, OracleArgs, Quantity, RateArgs,
    SimulateArgs,
};
use crate::output::{float, floats, json_document, Csv};
use crate::{CliError, Outcome};

/// Bytes to emit plus whether the run counts as a violation.
pub struct Rendered {
    pub bytes: Vec<u8>,
    pub outcome: Outcome,
}

impl Rendered {
    fn ok(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            outcome: Outcome::Success,
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Numeric(format!("serialization failed: {e}"))
}

fn parse_param(text: &str, what: &str) -> Result<ParamVec64, CliError> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("--{what} `{text}`: {e}")))?;
    if values.is_empty() || values.len() > MAX_DIM {
        return Err(CliError::Usage(format!(
            "--{what} needs 1 to {MAX_DIM} components"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("--{what} must be finite")));
    }
    Ok(ParamVec64::from_slice(&values))
}

/// A resolved model with its true and starting parameters.
pub struct Setup {
    pub name: String,
    pub model: Model<f64>,
    pub theta: ParamVec64,
    pub theta0: ParamVec64,
}

impl Setup {
    pub fn scheme(&self) -> &dyn EstimatingScheme<f64> {
        self.model.scheme()
    }

    fn trajectory(&self, t_max: usize, seed: u64) -> Result<Trajectory64, CliError> {
        Ok(simulate(
            self.scheme(),
            &self.theta,
            &self.theta0,
            t_max,
            seed,
        )?)
    }

    fn iid(&self, what: &str) -> Result<&IidScheme<f64>, CliError> {
        self.model.as_iid().ok_or_else(|| {
            CliError::Usage(format!(
                "{what} needs an i.i.d. model; `{}` is not",
                self.name
            ))
        })
    }
}

pub fn resolve(registry: &ModelRegistry<f64>, args: &ModelArgs) -> Result<Setup, CliError> {
    let model = registry.get(&args.model)?;
    let dim = model.scheme().dim();
    let theta = match &args.theta {
        Some(t) => parse_param(t, "theta")?,
        None if model.as_additive().is_some() => ParamVec64::scalar(0.5),
        None => ParamVec64::from_slice(&vec![1.0; dim]),
    };
    let theta0 = match &args.theta0 {
        Some(t) => parse_param(t, "theta0")?,
        None => ParamVec64::zeros(dim),
    };
    if theta.dim() != dim || theta0.dim() != dim {
        return Err(CliError::Usage(format!(
            "model `{}` has dimension {dim}",
            args.model
        )));
    }
    Ok(Setup {
        name: args.model.clone(),
        model,
        theta,
        theta0,
    })
}

pub fn simulate_cmd(reg: &ModelRegistry<f64>, args: &SimulateArgs) -> Result<Rendered, CliError> {
    let setup = resolve(reg, &args.model)?;
    if args.t_max == 0 {
        return Err(CliError::Usage("--t-max must be at least 1".into()));
    }
    let traj = setup.trajectory(args.t_max, args.seed)?;
    match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&[
                "t",
                "x",
                "theta_hat",
                "gamma",
                "psi",
                "increment",
                "skipped",
            ]);
            for r in &traj.records {
                let gamma: Vec<f64> = r.gamma.rows().concat();
                csv.row(&[
                    r.t.to_string(),
                    float(r.x),
                    floats(r.theta_hat.as_slice()),
                    floats(&gamma),
                    floats(r.psi.as_slice()),
                    floats(r.increment.as_slice()),
                    u8::from(r.skipped).to_string(),
                ]);
            }
            Ok(Rendered::ok(csv.into_bytes()))
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                t: usize,
                x: f64,
                theta_hat: Vec<f64>,
                gamma: Vec<Vec<f64>>,
                psi: Vec<f64>,
                increment: Vec<f64>,
                skipped: bool,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                model: &'a str,
                seed: u64,
                theta_true: Vec<f64>,
                theta0: Vec<f64>,
                records: Vec<Row>,
            }
            let body = Body {
                model: &setup.name,
                seed: args.seed,
                theta_true: setup.theta.to_vec(),
                theta0: setup.theta0.to_vec(),
                records: traj
                    .records
                    .iter()
                    .map(|r| Row {
                        t: r.t,
                        x: r.x,
                        theta_hat: r.theta_hat.to_vec(),
                        gamma: r.gamma.rows(),
                        psi: r.psi.to_vec(),
                        increment: r.increment.to_vec(),
                        skipped: r.skipped,
                    })
                    .collect(),
            };
            Ok(Rendered::ok(
                json_document("simulate", &body).map_err(io_err)?,
            ))
        }
    }
}

pub fn rate_cmd(
    reg: &ModelRegistry<f64>,
    args: &RateArgs,
    threads: Option<usize>,
) -> Result<Rendered, CliError> {
    let setup = resolve(reg, &args.model)?;
    let mut cfg = MonteCarloConfig::new(setup.theta, setup.theta0);
    cfg.reps = args.reps;
    cfg.checkpoints = args
        .checkpoints
        .clone()
        .unwrap_or_else(|| log_checkpoints(2.0, 4.0, 5));
    cfg.t_max = args
        .t_max
        .or_else(|| cfg.checkpoints.last().copied())
        .unwrap_or(0);
    cfg.delta = args.delta;
    cfg.master_seed = args.seed;
    cfg.a_choice = match args.a_choice {
        ANorm::StepCount => AChoice::StepCount,
        ANorm::Information => AChoice::Information,
    };
    cfg.fisher_ratio = setup.model.as_additive().is_some() && !args.no_fisher_ratio;
    cfg.threads = threads;
    let ensemble = run_monte_carlo(setup.scheme(), &cfg)?;
    let report = estimate_rate(&ensemble)?;
    match args.out.format.unwrap_or(Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a, R> {
                model: &'a str,
                theta_true: Vec<f64>,
                theta0: Vec<f64>,
                #[serde(flatten)]
                report: &'a R,
            }
            let body = Body {
                model: &setup.name,
                theta_true: setup.theta.to_vec(),
                theta0: setup.theta0.to_vec(),
                report: &report,
            };
            Ok(Rendered::ok(json_document("rate", &body).map_err(io_err)?))
        }
        Format::Csv => {
            let mut csv = Csv::new(&["rep", "t", "delta_abs", "scaled", "ratio"]);
            for r in ensemble.raw_rows() {
                csv.row(&[
                    r.rep.to_string(),
                    r.t.to_string(),
                    float(r.delta_abs),
                    float(r.scaled),
                    r.ratio.map(float).unwrap_or_default(),
                ]);
            }
            Ok(Rendered::ok(csv.into_bytes()))
        }
    }
}

/// `a_0..a_n` for the chosen normalization along a trajectory.
fn a_series(scheme: &dyn EstimatingScheme<f64>, traj: &Trajectory64, choice: ANorm) -> Vec<f64> {
    let n = traj.records.len();
    match choice {
        ANorm::StepCount => (0..=n).map(|t| t as f64).collect(),
        ANorm::Information => {
            let m = scheme.dim() as f64;
            std::iter::once(scheme.initial_accumulator().trace() / m)
                .chain(
                    accumulators(scheme, &traj.observations())
                        .iter()
                        .map(|acc| acc.trace() / m),
                )
                .collect()
        }
    }
}

pub fn check_cmd(reg: &ModelRegistry<f64>, args: &CheckArgs) -> Result<Rendered, CliError> {
    let setup = resolve(reg, &args.model)?;
    if args.out.format == Some(Format::Csv) {
        return Err(CliError::Usage("check writes JSON only".into()));
    }
    let c = Matrix64::identity(setup.theta.dim()).scale(args.c);
    let grid = || GridSpec::symmetric(args.u_max, args.n_points);
    let report: ConditionReport = match args.condition {
        Condition::B1 => check_b1(setup.iid("B1")?, &setup.theta, &c, &grid()?)?,
        Condition::B2 => check_b2(setup.iid("B2")?, &setup.theta, &grid()?, args.threshold)?,
        Condition::M => {
            let scheme = additive(&setup, "M")?;
            let traj = setup.trajectory(args.t_max, args.seed)?;
            check_m_conditions(scheme, &grid()?, &traj.observations(), MConfig::default())?
        }
        Condition::G => {
            let scheme = additive(&setup, "G")?;
            let traj = setup.trajectory(args.t_max, args.seed)?;
            g_trace(scheme, &traj, args.epsilon.unwrap_or(0.25), args.n_band)?
                .report(args.plateau_tol)
        }
        Condition::R => {
            let traj = setup.trajectory(args.t_max, args.seed)?;
            let (a, lambda) = match setup.model.as_additive() {
                Some(scheme) => {
                    let (h, big_h) = additive_weights(scheme, &traj.observations());
                    let a = std::iter::once(0.0).chain(big_h.iter().copied()).collect();
                    (a, additive_lambda(&h, &big_h, args.eps_tilde))
                }
                None => (
                    (0..=args.t_max).map(|t| t as f64).collect(),
                    iid_lambda(args.t_max),
                ),
            };
            let series = r_series(setup.scheme(), &traj, &c, a, lambda, PChoice::DriftSquared)?;
            let cfg = RConfig {
                epsilon: args.epsilon.unwrap_or(RConfig::default().epsilon),
                plateau_tol: args.plateau_tol,
                ..RConfig::default()
            };
            check_r_conditions(&series, cfg)?
        }
    };
    #[derive(Serialize)]
    struct Body<'a> {
        model: &'a str,
        theta_true: Vec<f64>,
        verdict: bool,
        report: &'a ConditionReport,
    }
    let body = Body {
        model: &setup.name,
        theta_true: setup.theta.to_vec(),
        verdict: report.verdict,
        report: &report,
    };
    Ok(Rendered {
        bytes: json_document("check", &body).map_err(io_err)?,
        outcome: if report.verdict {
            Outcome::Success
        } else {
            Outcome::Violated
        },
    })
}

fn additive<'a>(
    setup: &'a Setup,
    what: &str,
) -> Result<&'a recest::models::AdditiveScheme<f64>, CliError> {
    setup.model.as_additive().ok_or_else(|| {
        CliError::Usage(format!(
            "{what} needs an additive exponential-family model; `{}` is not",
            setup.name
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub quantity: &'static str,
    pub theta: f64,
    pub u: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub abs_diff: f64,
    pub tol: f64,
}

pub fn oracle_cmd(reg: &ModelRegistry<f64>, args: &OracleArgs) -> Result<Rendered, CliError> {
    let model = reg.get(&args.model)?;
    let scheme = model.as_iid().filter(|s| s.has_density()).ok_or_else(|| {
        CliError::Usage(format!(
            "model `{}` has no observation density to integrate against",
            args.model
        ))
    })?;
    if scheme.dim() != 1 {
        return Err(CliError::Usage(
            "the oracle handles scalar models only".into(),
        ));
    }
    if args.out.format == Some(Format::Csv) {
        return Err(CliError::Usage("oracle writes JSON only".into()));
    }
    let theta = ParamVec64::scalar(args.theta);
    let u = ParamVec64::scalar(args.u);
    let shifted = ParamVec64::scalar(args.theta + args.u);
    let density = |x: f64| scheme.density(&theta, x).unwrap_or(0.0);
    let (name, closed, quad) = match args.quantity {
        Quantity::B => (
            "b",
            scheme.closed_drift(&theta, &u).map(|b| b.first()),
            quadrature(
                |x: f64| scheme.psi_at(&shifted, x).first() * density(x),
                args.quad_tol,
            )?,
        ),
        Quantity::M2 => (
            "m2",
            scheme.closed_second_moment(&theta, &u).map(|m| m.first()),
            quadrature(
                |x: f64| scheme.psi_at(&shifted, x).first().powi(2) * density(x),
                args.quad_tol,
            )?,
        ),
    };
    let closed = closed.ok_or_else(|| {
        CliError::Usage(format!(
            "model `{}` has no closed form for {name}",
            args.model
        ))
    })?;
    let res = OracleResult {
        quantity: name,
        theta: args.theta,
        u: args.u,
        closed_form: closed,
        quadrature: quad,
        abs_diff: (closed - quad).abs(),
        tol: args.tol,
    };
    let bytes = json_document("oracle", &res).map_err(io_err)?;
    if !(res.abs_diff <= args.tol) {
        return Err(CliError::NumericWithOutput {
            message: format!(
                "closed form and quadrature differ by {} (tol {})",
                float(res.abs_diff),
                float(args.tol)
            ),
            bytes,
        });
    }
    Ok(Rendered::ok(bytes))
}

/// K-trace of `traj` under `scheme`, with the `𝒩_t(Δ_{t−1})` column for
/// additive families.
pub fn ktrace_rows(
    scheme: &dyn EstimatingScheme<f64>,
    additive: Option<&recest::models::AdditiveScheme<f64>>,
    traj: &Trajectory64,
    c: &Matrix64,
    a: &[f64],
    delta: f64,
) -> Result<(KTrace, Option<Vec<f64>>), CliError> {
    let kt = k_trace(scheme, traj, c, a, delta)?;
    let script_n = match additive {
        Some(s) => Some(
            g_trace(s, traj, 0.25, 3)?
                .rows
                .iter()
                .map(|r| r.n_at_error)
                .collect(),
        ),
        None => None,
    };
    Ok((kt, script_n))
}

pub fn ktrace_csv(kt: &KTrace, script_n: Option<&[f64]>) -> Vec<u8> {
    let mut header = vec![
        "t",
        "V",
        "dV",
        "drift",
        "moment",
        "K",
        "premise_partial_sum",
    ];
    if script_n.is_some() {
        header.push("scriptN");
    }
    let mut csv = Csv::new(&header);
    for (i, r) in kt.rows.iter().enumerate() {
        let mut row = vec![
            r.t.to_string(),
            float(r.v_prev),
            float(r.dv),
            float(r.drift),
            float(r.moment),
            float(r.k),
            float(r.premise_partial_sum),
        ];
        if let Some(n) = script_n {
            row.push(float(n[i]));
        }
        csv.row(&row);
    }
    csv.into_bytes()
}

pub fn ktrace_cmd(reg: &ModelRegistry<f64>, args: &KtraceArgs) -> Result<Rendered, CliError> {
    let setup = resolve(reg, &args.model)?;
    if args.t_max == 0 {
        return Err(CliError::Usage("--t-max must be at least 1".into()));
    }
    let traj = setup.trajectory(args.t_max, args.seed)?;
    let a = a_series(setup.scheme(), &traj, args.a_choice);
    let c = Matrix64::identity(setup.theta.dim()).scale(args.c);
    let (kt, script_n) = ktrace_rows(
        setup.scheme(),
        setup.model.as_additive(),
        &traj,
        &c,
        &a,
        args.delta,
    )?;
    match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(Rendered::ok(ktrace_csv(&kt, script_n.as_deref()))),
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                model: &'a str,
                seed: u64,
                #[serde(flatten)]
                trace: &'a KTrace,
                #[serde(skip_serializing_if = "Option::is_none")]
                script_n: Option<Vec<f64>>,
            }
            let body = Body {
                model: &setup.name,
                seed: args.seed,
                trace: &kt,
                script_n,
            };
            Ok(Rendered::ok(
                json_document("ktrace", &body).map_err(io_err)?,
            ))
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::MaxDepth { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
