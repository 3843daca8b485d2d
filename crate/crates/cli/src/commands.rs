use std::fmt;
use std::fs::File;
use std::io;
use std::process::ExitCode;

use serde::Serialize;

use parisk::composition::{compare, par_composition, write_comparison_csv, ComparisonRow};
use parisk::cost::{
    budget, budget_curve, dp_budget, epsilon_bounds, epsilon_min, epsilon_min_stationary_k1,
    write_budget_curve_csv, CostModelParams,
};
use parisk::mechanism::{overlap, rmse_experiment, synthetic_regression, LaplaceMechanism};
use parisk::montecarlo::{mc_gamma1, mc_overlap, McConfig, McEstimate, ValidationReport};
use parisk::risk::{
    empirical_risk_bound, empirical_risk_bound3, epsilon0_for_target_case1,
    epsilon0_for_target_case3, epsilon_for_gamma1, gamma1, gamma1_with, gamma3,
    probabilistic_tolerance, sample_size_for,
};
use parisk::sensitivity::{
    eta_estimate, normalize, read_csv, sampled_sensitivity, sensitivity_samples, DataSource,
    EmpiricalCdf, QueryKind, QuerySpec,
};
use parisk::{LossDistribution, RiskAssessment};

use crate::output::{cents, sig6, sig6_opt, Sink};
use crate::{
    BudgetArgs, Cli, Command, ComposeArgs, CostArgs, Format, QueryName, RiskArgs, RmseArgs,
    SampleSizeArgs, SensitivityArgs, Solve, Target, VerifyArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(parisk::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Compute(parisk::Error::Domain(_)) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<parisk::Error> for CliError {
    fn from(e: parisk::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let mut sink = Sink::open(cli.output.as_deref())?;
    match &cli.command {
        Command::Risk(a) => risk(a, cli.format, &mut sink),
        Command::SampleSize(a) => sample_size(a, &mut sink),
        Command::Sensitivity(a) => sensitivity(a, cli.seed, cli.format, &mut sink),
        Command::Compose(a) => compose(a, cli.format, &mut sink),
        Command::Budget(a) => budget_cmd(a, cli.format, &mut sink),
        Command::Verify(a) => verify(a, cli.seed, &mut sink),
        Command::Rmse(a) => rmse(a, cli.seed, cli.format, &mut sink),
    }
}

fn rounded(r: RiskAssessment) -> RiskAssessment {
    RiskAssessment {
        eps: sig6_opt(r.eps),
        eps0: sig6_opt(r.eps0),
        gamma: sig6(r.gamma),
        rho: sig6_opt(r.rho),
        eta: sig6_opt(r.eta),
        ..r
    }
}

#[derive(Serialize)]
struct RiskOutput {
    #[serde(flatten)]
    assessment: RiskAssessment,
    violation_risk: f64,
    /// DKW tolerance of the sample, for the sampled cases.
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Confidence before the sampling tolerance is applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_analytic: Option<f64>,
}

impl RiskOutput {
    fn new(a: RiskAssessment, alpha: Option<f64>, gamma_analytic: Option<f64>) -> Self {
        let a = rounded(a);
        Self {
            violation_risk: sig6(a.violation_risk()),
            assessment: a,
            alpha: sig6_opt(alpha),
            gamma_analytic: sig6_opt(gamma_analytic),
        }
    }
}

fn reject(flags: &[(&str, bool)], case: u8) -> Result<()> {
    for (name, present) in flags {
        if *present {
            return usage(format!("--{name} is not used in case {case}"));
        }
    }
    Ok(())
}

fn risk(a: &RiskArgs, format: Option<Format>, sink: &mut Sink) -> Result<ExitCode> {
    if let Some(points) = a.curve {
        return risk_curve(a, points, format, sink);
    }
    if format == Some(Format::Csv) {
        return usage("risk emits a single JSON record; use --curve for CSV");
    }
    let out = match a.case {
        1 => risk_case1(a)?,
        2 => risk_case2(a)?,
        _ => risk_case3(a)?,
    };
    sink.json(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn risk_case1(a: &RiskArgs) -> Result<RiskOutput> {
    reject(
        &[
            ("rho", a.rho.is_some()),
            ("n", a.n.is_some()),
            ("eta", a.eta.is_some()),
            ("gamma2", a.gamma2.is_some()),
            ("gamma-hat", a.gamma_hat.is_some()),
        ],
        1,
    )?;
    let given = [
        (Solve::Eps, a.eps),
        (Solve::Eps0, a.eps0),
        (Solve::Gamma, a.gamma),
    ];
    let missing: Vec<Solve> = given
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(s, _)| *s)
        .collect();
    let solve = match (a.solve, missing.as_slice()) {
        (Some(s), [m]) if s == *m => s,
        (Some(s), _) => {
            return usage(format!(
                "--solve {} needs the other two of --eps, --eps0, --gamma and not its own flag",
                solve_name(s)
            ))
        }
        (None, [m]) => *m,
        (None, _) => return usage("give exactly two of --eps, --eps0, --gamma"),
    };
    let k = a.k;
    let assessment = match solve {
        Solve::Gamma => {
            let (eps, eps0) = (a.eps.unwrap(), a.eps0.unwrap());
            RiskAssessment::explicit(eps, eps0, gamma1(eps, eps0, k)?)?
        }
        Solve::Eps => {
            let (gamma, eps0) = (a.gamma.unwrap(), a.eps0.unwrap());
            RiskAssessment::explicit(epsilon_for_gamma1(gamma, eps0, k)?, eps0, gamma)?
        }
        Solve::Eps0 => {
            let (eps, gamma) = (a.eps.unwrap(), a.gamma.unwrap());
            RiskAssessment::explicit(eps, epsilon0_for_target_case1(eps, gamma, k)?, gamma)?
        }
    };
    Ok(RiskOutput::new(assessment, None, None))
}

fn solve_name(s: Solve) -> &'static str {
    match s {
        Solve::Eps => "eps",
        Solve::Gamma => "gamma",
        Solve::Eps0 => "eps0",
    }
}

fn risk_case2(a: &RiskArgs) -> Result<RiskOutput> {
    reject(
        &[
            ("eps0", a.eps0.is_some()),
            ("eta", a.eta.is_some()),
            ("gamma", a.gamma.is_some()),
            ("solve", a.solve.is_some()),
        ],
        2,
    )?;
    let (Some(rho), Some(gamma2)) = (a.rho, a.gamma2) else {
        return usage("case 2 needs --rho and --gamma2");
    };
    let n = match (a.n, a.gamma_hat) {
        (Some(n), None) => n,
        (None, Some(target)) => {
            if !(target > 0.0 && target < gamma2) {
                return usage("--gamma-hat must lie in (0, gamma2)");
            }
            sample_size_for(rho, target / gamma2)?
        }
        _ => return usage("case 2 needs exactly one of --n and --gamma-hat"),
    };
    let bound = empirical_risk_bound(gamma2, rho, n)?;
    let alpha = probabilistic_tolerance(rho, n);
    Ok(RiskOutput::new(
        RiskAssessment::implicit(a.eps, bound, rho, n)?,
        Some(alpha),
        Some(gamma2),
    ))
}

fn risk_case3(a: &RiskArgs) -> Result<RiskOutput> {
    reject(
        &[("gamma", a.gamma.is_some()), ("solve", a.solve.is_some())],
        3,
    )?;
    let (Some(eps), Some(eta), Some(gamma2), Some(rho), Some(n)) =
        (a.eps, a.eta, a.gamma2, a.rho, a.n)
    else {
        return usage("case 3 needs --eps, --eta, --gamma2, --rho and --n");
    };
    let alpha = probabilistic_tolerance(rho, n);
    match (a.eps0, a.gamma_hat) {
        (Some(eps0), None) => {
            let g3 = gamma3(eps, eps0, a.k, eta, gamma2)?;
            let bound = empirical_risk_bound3(g3, rho, n)?;
            Ok(RiskOutput::new(
                RiskAssessment::coupled(eps, eps0, bound, rho, n, eta)?,
                Some(alpha),
                Some(g3),
            ))
        }
        (None, Some(target)) => {
            let eps0 = epsilon0_for_target_case3(eps, target, gamma2, alpha, eta, a.k)?;
            Ok(RiskOutput::new(
                RiskAssessment::coupled(eps, eps0, target, rho, n, eta)?,
                Some(alpha),
                Some(target / alpha),
            ))
        }
        _ => usage("case 3 needs exactly one of --eps0 and --gamma-hat"),
    }
}

fn risk_curve(
    a: &RiskArgs,
    points: usize,
    format: Option<Format>,
    sink: &mut Sink,
) -> Result<ExitCode> {
    if a.case != 1 {
        return usage("--curve is available for case 1");
    }
    let Some(eps0) = a.eps0 else {
        return usage("--curve needs --eps0");
    };
    if points == 0 {
        return usage("--curve needs at least one point");
    }
    let dist = LossDistribution::new(a.k)?;
    let rows: Vec<(f64, f64)> = (1..=points)
        .map(|i| {
            let eps = eps0 * i as f64 / points as f64;
            Ok((sig6(eps), sig6(gamma1_with(&dist, eps, eps0)?)))
        })
        .collect::<std::result::Result<_, parisk::Error>>()?;
    if format == Some(Format::Json) {
        #[derive(Serialize)]
        struct Point {
            eps: f64,
            gamma: f64,
        }
        let pts: Vec<Point> = rows
            .into_iter()
            .map(|(eps, gamma)| Point { eps, gamma })
            .collect();
        sink.json(&pts)?;
    } else {
        let mut w = csv::Writer::from_writer(sink.writer());
        w.write_record(["eps", "gamma"])
            .map_err(parisk::Error::from)?;
        for (e, g) in rows {
            w.write_record([e.to_string(), g.to_string()])
                .map_err(parisk::Error::from)?;
        }
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sample_size(a: &SampleSizeArgs, sink: &mut Sink) -> Result<ExitCode> {
    #[derive(Serialize)]
    struct Out {
        rho: f64,
        alpha: f64,
        n: u64,
    }
    let n = sample_size_for(a.rho, a.alpha)?;
    sink.json(&Out {
        rho: a.rho,
        alpha: a.alpha,
        n,
    })?;
    Ok(ExitCode::SUCCESS)
}

fn load_source(path: &std::path::Path, target: Option<usize>) -> Result<DataSource> {
    let (_, rows) = read_csv(File::open(path)?)?;
    Ok(match target {
        Some(t) => normalize(rows, t)?,
        None => DataSource::new(rows)?,
    })
}

fn build_query(a: &SensitivityArgs, width: usize) -> Result<QuerySpec> {
    let kind = match a.query {
        QueryName::Count => match (a.column, a.threshold) {
            (None, None) => QueryKind::Count { predicate: None },
            (Some(c), Some(t)) => QueryKind::Count {
                predicate: Some((c, t)),
            },
            _ => return usage("a count predicate needs both --column and --threshold"),
        },
        QueryName::Sum | QueryName::Mean => {
            let Some(column) = a.column else {
                return usage("sum and mean queries need --column");
            };
            if a.query == QueryName::Sum {
                QueryKind::Sum { column }
            } else {
                QueryKind::Mean { column }
            }
        }
        QueryName::Ridge => {
            let Some(target) = a.target else {
                return usage("ridge queries need --target");
            };
            QueryKind::Ridge {
                lambda: a.lambda,
                target,
            }
        }
    };
    Ok(QuerySpec::new(kind, width)?)
}

fn sensitivity(
    a: &SensitivityArgs,
    seed: u64,
    format: Option<Format>,
    sink: &mut Sink,
) -> Result<ExitCode> {
    let src = load_source(&a.data, a.target)?;
    let q = build_query(a, src.width())?;
    let samples = sensitivity_samples(&src, &q, a.p, a.n, seed)?;
    let cdf = EmpiricalCdf::from_samples(samples)?;
    if let Some(path) = &a.samples_out {
        cdf.write_samples_csv(File::create(path)?)?;
    }
    if format == Some(Format::Csv) {
        sink.seed_header(seed)?;
        cdf.write_cdf_csv(sink.writer())?;
        return Ok(ExitCode::SUCCESS);
    }
    let eta = match (a.delta_true, a.rho) {
        (None, None) => None,
        (d, r) => Some(eta_estimate(d, &cdf, a.gamma2, r.unwrap_or(0.5))?),
    };
    #[derive(Serialize)]
    struct Out {
        seed: u64,
        records: usize,
        p: usize,
        n: usize,
        k: usize,
        gamma2: f64,
        sampled_sensitivity: f64,
        max_sensitivity: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    }
    sink.json(&Out {
        seed,
        records: src.len(),
        p: a.p,
        n: a.n,
        k: q.dimension(),
        gamma2: a.gamma2,
        sampled_sensitivity: sig6(sampled_sensitivity(&cdf, a.gamma2)?),
        max_sensitivity: sig6(cdf.max()),
        eta: sig6_opt(eta),
    })?;
    Ok(ExitCode::SUCCESS)
}

fn params(c: &CostArgs) -> Result<CostModelParams> {
    Ok(CostModelParams::new(c.e, c.e_min, c.c, c.population)?)
}

fn compose(a: &ComposeArgs, format: Option<Format>, sink: &mut Sink) -> Result<ExitCode> {
    let (eps, gamma) = match (a.eps, a.gamma) {
        (Some(e), Some(g)) => (e, g),
        _ => {
            let opt = epsilon_min(a.eps0, &params(&a.cost)?, 1)?;
            (opt.eps_min, opt.gamma)
        }
    };
    let rows: Vec<ComparisonRow> = compare(a.eps0, a.delta, a.n_max, eps, gamma)?
        .into_iter()
        .map(|r| ComparisonRow {
            n: r.n,
            basic: sig6(r.basic),
            advanced: sig6(r.advanced),
            par: sig6(r.par),
        })
        .collect();
    if format == Some(Format::Json) {
        #[derive(Serialize)]
        struct Out {
            eps0: f64,
            delta: f64,
            eps: f64,
            gamma: f64,
            rows: Vec<ComparisonRow>,
        }
        sink.json(&Out {
            eps0: a.eps0,
            delta: a.delta,
            eps: sig6(eps),
            gamma: sig6(gamma),
            rows,
        })?;
    } else {
        write_comparison_csv(&rows, sink.writer())?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct BudgetOutput {
    eps0: f64,
    population: u64,
    dp_budget: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    budget: f64,
    savings: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_lower: Option<f64>,
    /// Upper feasible level; `null` when the budget does not bind.
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_upper: Option<Option<f64>>,
}

fn budget_cmd(a: &BudgetArgs, format: Option<Format>, sink: &mut Sink) -> Result<ExitCode> {
    let p = params(&a.cost)?;
    if let Some(points) = a.curve {
        if points == 0 {
            return usage("--curve needs at least one point");
        }
        let curve = budget_curve(a.eps0, &p, a.k, points)?;
        if format == Some(Format::Json) {
            let pts: Vec<(f64, f64)> = curve.iter().map(|(e, b)| (sig6(*e), cents(*b))).collect();
            sink.json(&pts)?;
        } else {
            let rounded: Vec<(f64, f64)> = curve.iter().map(|(e, b)| (sig6(*e), *b)).collect();
            write_budget_curve_csv(&rounded, sink.writer())?;
        }
        return Ok(ExitCode::SUCCESS);
    }
    if format == Some(Format::Csv) {
        return usage("budget emits JSON; use --curve for CSV");
    }
    let full = dp_budget(a.eps0, &p)?;
    let mut out = BudgetOutput {
        eps0: a.eps0,
        population: p.population,
        dp_budget: cents(full),
        eps: None,
        eps_min: None,
        gamma: None,
        budget: cents(full),
        savings: 0.0,
        eps_lower: None,
        eps_upper: None,
    };
    let mut gamma_at = None;
    if a.optimize {
        let opt = epsilon_min(a.eps0, &p, a.k)?;
        let b = budget(opt.eps_min, a.eps0, &p, a.k)?;
        out.eps_min = Some(sig6(opt.eps_min));
        out.gamma = Some(sig6(opt.gamma));
        out.budget = cents(b);
        out.savings = cents(full - b);
        gamma_at = Some(opt.gamma);
    } else if let Some(eps) = a.eps {
        let g = gamma1(eps, a.eps0, a.k)?;
        let b = budget(eps, a.eps0, &p, a.k)?;
        out.eps = Some(sig6(eps));
        out.gamma = Some(sig6(g));
        out.budget = cents(b);
        out.savings = cents(full - b);
        gamma_at = Some(g);
    }
    if let (Some(mae), Some(cap)) = (a.mae_max, a.budget_cap) {
        let Some(gamma) = a.gamma.or(gamma_at) else {
            return usage("feasibility bounds need --gamma, --eps or --optimize");
        };
        let bounds = epsilon_bounds(mae, cap, gamma, a.eps0, &p)?;
        out.eps_lower = Some(sig6(bounds.lower));
        out.eps_upper = Some(sig6_opt(bounds.upper));
        if out.gamma.is_none() {
            out.gamma = Some(sig6(gamma));
        }
    }
    sink.json(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn mc_config(samples: u64, seed: u64, workers: Option<usize>) -> McConfig {
    let mut cfg = McConfig::new(samples, seed);
    if let Some(w) = workers {
        cfg.workers = w.max(1);
    }
    cfg
}

fn exact(value: f64) -> McEstimate {
    McEstimate {
        estimate: value,
        stderr: 0.0,
        kept: 1,
    }
}

fn verify(a: &VerifyArgs, seed: u64, sink: &mut Sink) -> Result<ExitCode> {
    let want = |t: Target| a.target == Target::All || a.target == t;
    let mut reports = Vec::new();
    if want(Target::Gamma1) {
        for k in [1u32, 2, 5] {
            let dist = LossDistribution::new(k)?;
            for (i, (eps, eps0)) in [(0.25, 0.5), (0.5, 1.0), (1.0, 2.0)]
                .into_iter()
                .enumerate()
            {
                let cfg = mc_config(
                    a.samples,
                    seed.wrapping_add(100 * k as u64 + i as u64),
                    a.workers,
                );
                let mc = mc_gamma1(eps, eps0, k, &cfg)?;
                let analytic = gamma1_with(&dist, eps, eps0)?;
                reports.push(ValidationReport::new(
                    format!("gamma1 k={k} eps={eps} eps0={eps0}"),
                    analytic,
                    &mc,
                    4.0,
                    0.005,
                ));
            }
        }
    }
    if want(Target::Overlap) {
        let mc = mc_overlap(1.0, 0.6, 1.0, &mc_config(a.samples, seed, a.workers))?;
        reports.push(ValidationReport::new(
            "overlap eps1=1 eps2=0.6",
            overlap(1.0, 0.6, 1.0)?,
            &mc,
            4.0,
            0.003,
        ));
    }
    if want(Target::Composition) {
        for n in [1u64, 10, 100] {
            let adv = parisk::composition::advanced_composition(0.5, n, 1e-5)?;
            let par = par_composition(0.5, 0.27, 0.0, n, 1e-5)?;
            reports.push(ValidationReport::new(
                format!("composition gamma=0 reduction n={n}"),
                adv,
                &exact(par),
                0.0,
                1e-12,
            ));
        }
    }
    if want(Target::Cost) {
        let p = CostModelParams::new(5500.0, 0.0, 1.0, 100)?;
        for eps0 in [0.1, 0.5, 1.0] {
            let root = epsilon_min_stationary_k1(eps0)?;
            let opt = epsilon_min(eps0, &p, 1)?;
            reports.push(ValidationReport::new(
                format!("cost optimum eps0={eps0}"),
                root,
                &exact(opt.eps_min),
                0.0,
                1e-4,
            ));
        }
    }
    let failed = reports.iter().any(|r| !r.pass);
    let reports: Vec<ValidationReport> = reports
        .into_iter()
        .map(|r| ValidationReport {
            analytic: sig6(r.analytic),
            mc_estimate: sig6(r.mc_estimate),
            stderr: sig6(r.stderr),
            gap: sig6(r.gap),
            ..r
        })
        .collect();
    #[derive(Serialize)]
    struct Out {
        seed: u64,
        samples: u64,
        reports: Vec<ValidationReport>,
    }
    sink.json(&Out {
        seed,
        samples: a.samples,
        reports,
    })?;
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn rmse(a: &RmseArgs, seed: u64, format: Option<Format>, sink: &mut Sink) -> Result<ExitCode> {
    let (src, target) = match (&a.data, a.target) {
        (Some(path), Some(t)) => (load_source(path, Some(t))?, t),
        (None, _) => (
            synthetic_regression(a.records, a.features, seed)?,
            a.features,
        ),
        (Some(_), None) => return usage("--data needs --target"),
    };
    if a.eps0.is_empty() {
        return usage("--eps0 needs at least one level");
    }
    let mut reports = Vec::new();
    for &eps0 in &a.eps0 {
        let mech = LaplaceMechanism::new(a.sensitivity, eps0, src.width() - 1)?;
        reports.push(rmse_experiment(
            &src, target, a.lambda, &mech, a.runs, a.split, seed,
        )?);
    }
    if format == Some(Format::Json) {
        #[derive(Serialize)]
        struct Row {
            eps0: f64,
            mean_rmse: f64,
            noiseless_mean: f64,
        }
        #[derive(Serialize)]
        struct Out {
            seed: u64,
            runs: usize,
            results: Vec<Row>,
        }
        sink.json(&Out {
            seed,
            runs: a.runs,
            results: reports
                .iter()
                .map(|r| Row {
                    eps0: r.eps0,
                    mean_rmse: sig6(r.mean_rmse),
                    noiseless_mean: sig6(r.noiseless_mean),
                })
                .collect(),
        })?;
    } else {
        sink.seed_header(seed)?;
        for (i, r) in reports.iter().enumerate() {
            let mut r = r.clone();
            r.runs.iter_mut().for_each(|v| *v = sig6(*v));
            r.write_csv(sink.writer(), i == 0)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
