use std::path::{Path, PathBuf};

use omd_core::inequality::{beta_exponent, luxemburg_norm, BetaExponent, YoungFunctionSpec};
use omd_core::series::{SeriesStatus, SeriesTerm};
use omd_core::simulation::dyadic_grid;
use omd_core::{
    covariance_structure_test, decompose, decompose_generic, entropy_integral, gaussian_limit_test, holder_check,
    linear_condition, moment_ratio, omd_verify, reconstruct, run_experiment, series_condition, tail_bound_check,
    vc_index, ChaosElement, Decomposition, EmpiricalSample, EntropyOptions, ExperimentSpec, FieldSpec, InnovationLaw,
    MomentMethod, Rect, SeriesKind, SeriesOptions, SeriesReport, SetClass, Statistic, VcSearch,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::{config_hash, resolve, FileConfig};
use crate::error::{usage, CliError, CliResult};
use crate::report::{envelope, to_body, write_csv, write_json, Provenance};

const DEFAULT_N: usize = 64;
const DEFAULT_REPLICAS: usize = 2000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_D: usize = 2;

pub struct Context {
    pub file: FileConfig,
    pub timestamp: bool,
}

impl Context {
    fn provenance<T: Serialize>(
        &self,
        command: &str,
        params: &T,
        seed: Option<u64>,
        replicas: Option<usize>,
        check: &'static str,
    ) -> Provenance {
        Provenance::new(command, config_hash(command, params), seed, replicas, check, self.timestamp)
    }
}

/// Runs one command; `Ok(false)` stands for a numeric verification failure.
pub fn execute(command: Command, ctx: &Context) -> CliResult<bool> {
    match command {
        Command::Decompose(a) => cmd_decompose(resolved(&a, ctx, "decompose")?, ctx),
        Command::Reconstruct(a) => cmd_reconstruct(resolved(&a, ctx, "reconstruct")?, ctx),
        Command::CheckCondition(a) => cmd_condition(resolved(&a, ctx, "check-condition")?, ctx),
        Command::Simulate(a) => cmd_simulate(resolved(&a, ctx, "simulate")?, ctx),
        Command::Verify(VerifyCommand::Clt(a)) => cmd_clt(resolved(&a, ctx, "verify.clt")?, ctx),
        Command::Verify(VerifyCommand::Wip(a)) => cmd_wip(resolved(&a, ctx, "verify.wip")?, ctx),
        Command::Verify(VerifyCommand::Moment(a)) => cmd_moment(resolved(&a, ctx, "verify.moment")?, ctx),
        Command::Verify(VerifyCommand::Tail(a)) => cmd_tail(resolved(&a, ctx, "verify.tail")?, ctx),
        Command::Verify(VerifyCommand::Holder(a)) => cmd_holder(resolved(&a, ctx, "verify.holder")?, ctx),
        Command::Vc(a) => cmd_vc(resolved(&a, ctx, "vc")?, ctx),
    }
}

fn resolved<T: Serialize + DeserializeOwned>(flags: &T, ctx: &Context, command: &str) -> CliResult<T> {
    resolve(flags, &ctx.file, command)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn required_path(input: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    input
        .clone()
        .ok_or_else(|| CliError::Usage(format!("missing required parameter --{flag}")))
}

fn positive(name: &str, value: f64) -> CliResult<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        usage(format!("--{name} must be positive, got {value}"))
    }
}

fn workers(requested: Option<usize>) -> CliResult<usize> {
    let n = match requested {
        Some(n) => n,
        None => match std::env::var("OMD_WORKERS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("OMD_WORKERS must be a positive integer, got {v:?}")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return usage("workers must be at least 1");
    }
    Ok(n)
}

fn law(kind: Option<LawArg>, variance: Option<f64>) -> CliResult<InnovationLaw> {
    match kind.unwrap_or(LawArg::Rademacher) {
        LawArg::Rademacher => {
            if variance.is_some() {
                return usage("--variance applies to the gaussian law only");
            }
            Ok(InnovationLaw::rademacher())
        }
        LawArg::Gaussian => Ok(InnovationLaw::gaussian(variance.unwrap_or(1.0))?),
    }
}

/// Field descriptor and dimension.
fn field_spec(args: &FieldArgs) -> CliResult<(FieldSpec, usize)> {
    let kind = args.field.unwrap_or(if args.coefficients.is_some() {
        FieldKind::Linear
    } else {
        FieldKind::Iid
    });
    if kind != FieldKind::Linear && args.coefficients.is_some() {
        return usage("--coefficients applies to linear fields only");
    }
    match kind {
        FieldKind::Iid => Ok((
            FieldSpec::Iid {
                law: law(args.law, args.variance)?,
            },
            args.d.unwrap_or(DEFAULT_D),
        )),
        FieldKind::Product => {
            if args.law.is_some() || args.variance.is_some() {
                return usage("the product field has fixed Rademacher factors; --law and --variance do not apply");
            }
            Ok((FieldSpec::ProductOmd, args.d.unwrap_or(DEFAULT_D)))
        }
        FieldKind::Linear => {
            let path = required_path(&args.coefficients, "coefficients")?;
            let coefficients: ChaosElement = read_json(&path)?;
            let d = coefficients.dim();
            if let Some(flag) = args.d {
                if flag != d {
                    return usage(format!("--d {flag} conflicts with the coefficient dimension {d}"));
                }
            }
            Ok((
                FieldSpec::Linear {
                    coefficients,
                    law: law(args.law, args.variance)?,
                },
                d,
            ))
        }
    }
}

fn experiment(args: &FieldArgs, statistic: Statistic) -> CliResult<ExperimentSpec> {
    let (field, dim) = field_spec(args)?;
    Ok(ExperimentSpec {
        dim,
        field,
        n: args.n.unwrap_or(DEFAULT_N),
        replicas: args.replicas.unwrap_or(DEFAULT_REPLICAS),
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        statistic,
    })
}

fn bounded_field(field: &FieldSpec) -> bool {
    match field {
        FieldSpec::ProductOmd => true,
        FieldSpec::Iid { law } | FieldSpec::Linear { law, .. } => law.is_bounded(),
    }
}

fn format_of(out: &OutputArgs) -> Format {
    out.format.unwrap_or(Format::Json)
}

fn emit_json(out: &OutputArgs, prov: &Provenance, passed: bool, body: Value) -> CliResult<()> {
    write_json(out.out.as_deref(), &envelope(prov, passed, body))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv output failed: {e}"))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv output failed: {e}")))
}

fn element_rows<'a>(term: &'a str, f: &'a ChaosElement) -> impl Iterator<Item = Vec<String>> + 'a {
    f.iter()
        .map(move |(j, c)| vec![term.to_string(), j.to_string(), format!("{c:e}")])
}

fn sample_csv(sample: &EmpiricalSample) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    Ok(buf)
}

fn cmd_decompose(args: DecomposeArgs, ctx: &Context) -> CliResult<bool> {
    let path = required_path(&args.input, "in")?;
    let f: ChaosElement = read_json(&path)?;
    let dec = match args.method.unwrap_or(Method::Auto) {
        Method::Auto => decompose(&f)?,
        Method::Generic => decompose_generic(&f)?,
    };
    let omd = omd_verify(&dec);
    let error = reconstruct(&dec)?.max_abs_diff(&f);
    let passed = omd.passed && error <= 1e-10;
    let prov = ctx.provenance(
        "decompose",
        &args,
        None,
        None,
        "martingale parts annihilated by every forward projection; reconstruction equals the input",
    );
    match format_of(&args.output) {
        Format::Json => {
            let mut body = to_body(&dec);
            body["omd"] = to_body(&omd);
            body["reconstruction_error"] = json!(error);
            emit_json(&args.output, &prov, passed, body)?;
        }
        Format::Csv => {
            let labels: Vec<(String, &ChaosElement)> = std::iter::once(("m".to_string(), &dec.m))
                .chain(dec.boundary_terms.iter().map(|(mask, t)| (format!("mJ{mask}"), t)))
                .chain(std::iter::once(("g".to_string(), &dec.g)))
                .collect();
            let rows: Vec<Vec<String>> = labels
                .iter()
                .flat_map(|(label, t)| element_rows(label, t).collect::<Vec<_>>())
                .collect();
            write_csv(args.output.out.as_deref(), &csv_bytes(&["term", "index", "coeff"], rows)?, &prov, passed)?;
        }
    }
    Ok(passed)
}

fn cmd_reconstruct(args: ReconstructArgs, ctx: &Context) -> CliResult<bool> {
    let path = required_path(&args.input, "in")?;
    let dec: Decomposition = read_json(&path)?;
    let f = reconstruct(&dec)?;
    let prov = ctx.provenance("reconstruct", &args, None, None, "sum of martingale, boundary and corner terms");
    match format_of(&args.output) {
        Format::Json => emit_json(&args.output, &prov, true, to_body(&f))?,
        Format::Csv => write_csv(
            args.output.out.as_deref(),
            &csv_bytes(&["term", "index", "coeff"], element_rows("f", &f))?,
            &prov,
            true,
        )?,
    }
    Ok(true)
}

fn cmd_condition(args: ConditionArgs, ctx: &Context) -> CliResult<bool> {
    let path = required_path(&args.input, "in")?;
    let f: ChaosElement = read_json(&path)?;
    let d = f.dim();
    let axes: Vec<usize> = match args.axis {
        Some(s) => vec![s],
        None => (1..=d).collect(),
    };
    let p = args.p.unwrap_or(2.0);
    let law = law(args.law, args.variance)?;
    let defaults = SeriesOptions::default();
    let options = SeriesOptions {
        cap: args.cap.unwrap_or(defaults.cap),
        replicas: args.replicas.unwrap_or(defaults.replicas),
        seed: args.seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let kind = args.kind.unwrap_or(ConditionKind::ShiftedPast);
    let mut series: Vec<SeriesReport> = Vec::new();
    let mut passed = true;
    let mut per_axis = Vec::new();
    for &s in &axes {
        match kind {
            ConditionKind::ShiftedPast | ConditionKind::HalfSpace => {
                let k = if kind == ConditionKind::ShiftedPast {
                    SeriesKind::ShiftedPast
                } else {
                    SeriesKind::HalfSpace
                };
                let rep = series_condition(&f, s, p, &law, k, &options)?;
                passed &= rep.status != SeriesStatus::Inconclusive;
                per_axis.push(to_body(&rep));
                series.push(rep);
            }
            ConditionKind::Linear => {
                let rep = linear_condition(&f, s, d, p, &law, &options)?;
                passed &= rep.half_space_dominated;
                for r in std::iter::once(&rep.l2).chain(rep.rosenthal.as_ref()) {
                    passed &= r.status != SeriesStatus::Inconclusive;
                    series.push(r.clone());
                }
                per_axis.push(to_body(&rep));
            }
        }
    }
    let replicas = (p != 2.0).then_some(options.replicas);
    let seed = (p != 2.0).then_some(options.seed);
    let prov = ctx.provenance(
        "check-condition",
        &args,
        seed,
        replicas,
        "projective series converges along every requested axis",
    );
    match format_of(&args.output) {
        Format::Json => emit_json(
            &args.output,
            &prov,
            passed,
            json!({ "d": d, "p": p, "kind": kind, "axes": per_axis }),
        )?,
        Format::Csv => {
            let rows = series.iter().flat_map(|r| {
                r.terms
                    .iter()
                    .zip(&r.partial_sums)
                    .map(|(t, sum): (&SeriesTerm, &f64)| {
                        vec![
                            r.axis.to_string(),
                            to_body(&r.kind).as_str().unwrap_or_default().to_string(),
                            t.k.to_string(),
                            format!("{:e}", t.weight),
                            format!("{:e}", t.norm),
                            format!("{:e}", t.value),
                            format!("{sum:e}"),
                        ]
                    })
                    .collect::<Vec<_>>()
            });
            let header = ["axis", "series", "k", "weight", "norm", "value", "partial_sum"];
            write_csv(args.output.out.as_deref(), &csv_bytes(&header, rows)?, &prov, passed)?;
        }
    }
    Ok(passed)
}

fn cmd_simulate(args: SimulateArgs, ctx: &Context) -> CliResult<bool> {
    let statistic = match args.statistic.unwrap_or(StatisticKind::Endpoint) {
        StatisticKind::Endpoint => Statistic::Endpoint,
        StatisticKind::Points => match &args.points {
            Some(points) if !points.is_empty() => Statistic::PointValues {
                points: points.iter().map(|p| p.0.clone()).collect(),
            },
            _ => return usage("--statistic points needs at least one --point"),
        },
        StatisticKind::Rects => match &args.rects {
            Some(rects) if !rects.is_empty() => Statistic::RectangleSums { rects: rects.clone() },
            _ => return usage("--statistic rects needs at least one --rect"),
        },
        StatisticKind::SupModulus => Statistic::SupModulus {
            level: args.level.unwrap_or(3),
            gamma: args.gamma.unwrap_or(0.25),
        },
    };
    let spec = experiment(&args.field, statistic)?;
    let sample = run_experiment(&spec, workers(args.field.workers)?)?;
    let prov = ctx.provenance(
        "simulate",
        &args,
        Some(spec.seed),
        Some(spec.replicas),
        "seeded replicas of the recorded statistic",
    );
    match format_of(&args.output) {
        Format::Json => emit_json(&args.output, &prov, true, json!({ "spec": spec, "sample": sample }))?,
        Format::Csv => write_csv(args.output.out.as_deref(), &sample_csv(&sample)?, &prov, true)?,
    }
    Ok(true)
}

/// Limit variance per unit volume.
fn target_variance(field: &FieldSpec, target: &TargetArgs) -> CliResult<f64> {
    let base = match target.target_variance {
        Some(v) => positive("target-variance", v)?,
        None => match (field, target.target.unwrap_or(TargetKind::Martingale)) {
            (FieldSpec::ProductOmd, _) => 1.0,
            (FieldSpec::Iid { law }, _) => law.variance(),
            (FieldSpec::Linear { coefficients, law }, TargetKind::Martingale) => {
                decompose(coefficients)?.m.l2_norm(law).powi(2)
            }
            (FieldSpec::Linear { coefficients, law }, TargetKind::Marginal) => coefficients.l2_norm(law).powi(2),
        },
    };
    Ok(base * positive("variance-scale", target.variance_scale.unwrap_or(1.0))?)
}

fn cmd_clt(args: CltArgs, ctx: &Context) -> CliResult<bool> {
    let statistic = match &args.t {
        Some(t) => Statistic::PointValues { points: vec![t.0.clone()] },
        None => Statistic::Endpoint,
    };
    let spec = experiment(&args.field, statistic)?;
    let volume = args
        .t
        .as_ref()
        .map(|t| t.0.iter().map(|v| v.clamp(0.0, 1.0)).product())
        .unwrap_or(1.0);
    let per_unit = target_variance(&spec.field, &args.target)?;
    let sample = run_experiment(&spec, workers(args.field.workers)?)?;
    let ks = gaussian_limit_test(&sample.column(0), per_unit * volume, args.threshold)?;
    let prov = ctx.provenance(
        "verify.clt",
        &args,
        Some(spec.seed),
        Some(spec.replicas),
        "Kolmogorov-Smirnov distance between the normalized partial sum and its Gaussian limit",
    );
    let passed = ks.passed;
    emit_or_csv(
        &args.output,
        &prov,
        passed,
        json!({ "spec_hash": sample.spec_hash, "label": sample.labels[0], "unit_variance": per_unit, "volume": volume, "ks": ks }),
        &sample,
    )?;
    Ok(passed)
}

fn emit_or_csv(out: &OutputArgs, prov: &Provenance, passed: bool, body: Value, sample: &EmpiricalSample) -> CliResult<()> {
    match format_of(out) {
        Format::Json => emit_json(out, prov, passed, body),
        Format::Csv => write_csv(out.out.as_deref(), &sample_csv(sample)?, prov, passed),
    }
}

/// Nested, overlapping and disjoint pairs in the unit cube.
fn default_pairs(d: usize) -> CliResult<Vec<Rect>> {
    let cube = |lo: f64, hi: f64| Rect::new(vec![lo; d], vec![hi; d]);
    let mut slab_lo = vec![0.0; d];
    let mut slab_hi = vec![1.0; d];
    slab_hi[0] = 0.4;
    let left = Rect::new(slab_lo.clone(), slab_hi.clone())?;
    slab_lo[0] = 0.6;
    slab_hi[0] = 1.0;
    let right = Rect::new(slab_lo, slab_hi)?;
    Ok(vec![cube(0.0, 0.5)?, cube(0.0, 1.0)?, cube(0.0, 0.75)?, cube(0.25, 1.0)?, left, right])
}

fn cmd_wip(args: WipArgs, ctx: &Context) -> CliResult<bool> {
    let (_, d) = field_spec(&args.field)?;
    let rects = match &args.rects {
        Some(r) if !r.is_empty() => r.clone(),
        _ => default_pairs(d)?,
    };
    if rects.len() % 2 != 0 {
        return usage("--rect values are taken in pairs; got an odd count");
    }
    let spec = experiment(&args.field, Statistic::RectangleSums { rects: rects.clone() })?;
    let per_unit = target_variance(&spec.field, &args.target)?;
    let rel = positive("relative-tolerance", args.relative_tolerance.unwrap_or(0.10))?;
    let se = positive("se-multiplier", args.se_multiplier.unwrap_or(5.0))?;
    let sample = run_experiment(&spec, workers(args.field.workers)?)?;
    let mut reports = Vec::new();
    for (i, pair) in rects.chunks(2).enumerate() {
        reports.push(covariance_structure_test(
            &sample.column(2 * i),
            &sample.column(2 * i + 1),
            &pair[0],
            &pair[1],
            per_unit,
            rel,
            se,
        )?);
    }
    let passed = reports.iter().all(|r| r.passed);
    let prov = ctx.provenance(
        "verify.wip",
        &args,
        Some(spec.seed),
        Some(spec.replicas),
        "covariance of rectangle sums against the limit variance times the overlap volume",
    );
    emit_or_csv(
        &args.output,
        &prov,
        passed,
        json!({ "spec_hash": sample.spec_hash, "unit_variance": per_unit, "rects": rects, "pairs": reports }),
        &sample,
    )?;
    Ok(passed)
}

fn cmd_moment(args: MomentArgs, ctx: &Context) -> CliResult<bool> {
    let mut field_args = args.field.clone();
    if field_args.field.is_none() && field_args.coefficients.is_none() {
        field_args.field = Some(FieldKind::Product);
    }
    let (field, d) = field_spec(&field_args)?;
    let n = field_args.n.unwrap_or(DEFAULT_N);
    let ps = args.ps.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0]);
    if ps.is_empty() {
        return usage("--p needs at least one moment order");
    }
    let method = match (args.method, &field) {
        (Some(MomentMethodArg::Exact), _) | (None, FieldSpec::ProductOmd) => MomentMethod::ExactFactorized,
        _ => MomentMethod::MonteCarlo,
    };
    let replicas = field_args.replicas.unwrap_or(DEFAULT_REPLICAS);
    let seed = field_args.seed.unwrap_or(DEFAULT_SEED);
    let kappa_max = positive("kappa-max", args.kappa_max.unwrap_or(3.0))?;
    let kappa_min = args.kappa_min.unwrap_or(0.1);
    let pool = rayon_pool(workers(field_args.workers)?)?;
    let mut rows = Vec::new();
    let mut passed = true;
    for &p in &ps {
        let rep = pool.install(|| moment_ratio(&field, &vec![n; d], p, method, replicas, seed))?;
        let kappa = rep.ratio / p.powf(d as f64 / 2.0);
        passed &= kappa <= kappa_max && kappa >= kappa_min;
        rows.push((p, kappa, rep));
    }
    let fitted = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let floor = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mc = method == MomentMethod::MonteCarlo;
    let prov = ctx.provenance(
        "verify.moment",
        &args,
        mc.then_some(seed),
        mc.then_some(replicas),
        "p-norm of the block sum against the square function, scaled by p^{d/2}",
    );
    match format_of(&args.output) {
        Format::Json => {
            let table: Vec<Value> = rows
                .iter()
                .map(|(p, kappa, rep)| json!({ "p": p, "kappa": kappa, "report": rep }))
                .collect();
            emit_json(
                &args.output,
                &prov,
                passed,
                json!({ "d": d, "n": n, "rows": table, "fitted_kappa": fitted, "min_kappa": floor, "kappa_max": kappa_max, "kappa_min": kappa_min }),
            )?;
        }
        Format::Csv => {
            let lines = rows.iter().map(|(p, kappa, rep)| {
                vec![
                    p.to_string(),
                    format!("{:e}", rep.measured),
                    format!("{:e}", rep.reference),
                    format!("{:e}", rep.ratio),
                    format!("{kappa:e}"),
                ]
            });
            let bytes = csv_bytes(&["p", "measured", "reference", "ratio", "kappa"], lines)?;
            write_csv(args.output.out.as_deref(), &bytes, &prov, passed)?;
        }
    }
    Ok(passed)
}

fn rayon_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

/// Normalized Orlicz reference `‖X_0‖_{ψ_β(q)}`: the sup norm at the critical
/// exponent, otherwise the empirical Luxemburg norm of single-site draws.
fn orlicz_reference(spec: &ExperimentSpec, q: f64, workers: usize) -> CliResult<f64> {
    match beta_exponent(q, spec.dim)? {
        BetaExponent::Unbounded => match &spec.field {
            FieldSpec::ProductOmd => Ok(1.0),
            FieldSpec::Iid { law } if law.is_bounded() => Ok(1.0),
            FieldSpec::Linear { coefficients, law } if law.is_bounded() => {
                Ok(coefficients.iter().map(|(_, c)| c.abs()).sum())
            }
            _ => usage("q = 2/d requires a bounded field"),
        },
        BetaExponent::Finite { value } => {
            let single = ExperimentSpec {
                n: 1,
                statistic: Statistic::Endpoint,
                ..spec.clone()
            };
            let sample = run_experiment(&single, workers)?;
            Ok(luxemburg_norm(&sample.column(0), &YoungFunctionSpec::psi(value)?)?)
        }
    }
}

fn cmd_tail(args: TailArgs, ctx: &Context) -> CliResult<bool> {
    let mut field_args = args.field.clone();
    if field_args.field.is_none() && field_args.coefficients.is_none() {
        field_args.field = Some(FieldKind::Product);
    }
    let spec = experiment(&field_args, Statistic::Endpoint)?;
    let d = spec.dim;
    let q = args.q.unwrap_or(2.0 / d as f64);
    let xs = args
        .xs
        .clone()
        .unwrap_or_else(|| (1..=10).map(|j| 0.25 * j as f64).collect());
    let workers = workers(field_args.workers)?;
    let reference = match args.orlicz_reference {
        Some(r) => positive("orlicz-reference", r)?,
        None => orlicz_reference(&spec, q, workers)?,
    };
    let sample = run_experiment(&spec, workers)?;
    let rep = tail_bound_check(&sample.column(0), q, d, reference, &xs, bounded_field(&spec.field))?;
    let passed = rep.bound_decreasing && args.kappa_max.is_none_or(|k| rep.fitted_kappa <= k);
    let prov = ctx.provenance(
        "verify.tail",
        &args,
        Some(spec.seed),
        Some(spec.replicas),
        "empirical tail of the normalized block sum under the sub-exponential envelope",
    );
    match format_of(&args.output) {
        Format::Json => emit_json(
            &args.output,
            &prov,
            passed,
            json!({ "spec_hash": sample.spec_hash, "kappa_max": args.kappa_max, "tail": rep }),
        )?,
        Format::Csv => {
            let lines = rep.rows.iter().map(|r| {
                vec![
                    r.x.to_string(),
                    format!("{:e}", r.frequency),
                    format!("{:e}", r.bound),
                    format!("{:e}", r.kappa_needed),
                ]
            });
            let bytes = csv_bytes(&["x", "frequency", "bound", "kappa_needed"], lines)?;
            write_csv(args.output.out.as_deref(), &bytes, &prov, passed)?;
        }
    }
    Ok(passed)
}

fn cmd_holder(args: HolderArgs, ctx: &Context) -> CliResult<bool> {
    let (_, d) = field_spec(&args.field)?;
    let points = dyadic_grid(d, args.level.unwrap_or(2));
    let spec = experiment(&args.field, Statistic::PointValues { points: points.clone() })?;
    let p = args.p.unwrap_or(8.0);
    let gamma = args.gamma.unwrap_or(0.2);
    let epsilons = args.epsilons.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 3.0, 4.0]);
    let sample = run_experiment(&spec, workers(args.field.workers)?)?;
    let rep = holder_check(&points, &sample.rows, d, p, gamma, &epsilons)?;
    let passed = rep.admissible && rep.moment_condition && rep.k_valid;
    let prov = ctx.provenance(
        "verify.holder",
        &args,
        Some(spec.seed),
        Some(spec.replicas),
        "moment threshold, admissible Hölder exponent and increment tightness table",
    );
    match format_of(&args.output) {
        Format::Json => emit_json(
            &args.output,
            &prov,
            passed,
            json!({ "spec_hash": sample.spec_hash, "holder": rep }),
        )?,
        Format::Csv => {
            let lines = rep.table.iter().map(|r| {
                vec![
                    r.s.to_string(),
                    r.t.to_string(),
                    format!("{:e}", r.distance),
                    r.epsilon.to_string(),
                    format!("{:e}", r.frequency),
                    format!("{:e}", r.ratio),
                ]
            });
            let bytes = csv_bytes(&["s", "t", "distance", "epsilon", "frequency", "ratio"], lines)?;
            write_csv(args.output.out.as_deref(), &bytes, &prov, passed)?;
        }
    }
    Ok(passed)
}

/// `Q<d>` or `Q'<d>`.
fn parse_class(label: &str, level: u32) -> CliResult<SetClass> {
    let (boxes, digits) = match label.strip_prefix("Q'") {
        Some(rest) => (true, rest),
        None => match label.strip_prefix('Q') {
            Some(rest) => (false, rest),
            None => return usage(format!("unknown class {label:?}; expected Q<d> or Q'<d>")),
        },
    };
    let dim: usize = digits
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown class {label:?}; expected Q<d> or Q'<d>")))?;
    Ok(if boxes {
        SetClass::boxes(dim, level)?
    } else {
        SetClass::quadrants(dim, level)?
    })
}

fn cmd_vc(args: VcArgs, ctx: &Context) -> CliResult<bool> {
    let label = args
        .class
        .clone()
        .ok_or_else(|| CliError::Usage("missing required parameter --class".into()))?;
    let class = parse_class(&label, args.level.unwrap_or(8))?;
    let defaults = VcSearch::default();
    let search = VcSearch {
        max_n: args.max_n.unwrap_or(defaults.max_n),
        budget: args.budget.unwrap_or(defaults.budget),
    };
    let vc = vc_index(&class, search)?;
    let mut passed = vc.exact;
    let covering = if args.entropy.unwrap_or(false) {
        let fit_range = match args.fit.as_deref() {
            None => None,
            Some([lo, hi]) => Some((*lo, *hi)),
            Some(_) => return usage("--fit takes exactly two values lo,hi"),
        };
        let opts = EntropyOptions {
            epsilons: args
                .epsilons
                .clone()
                .unwrap_or_else(|| (5..=20).map(|k| 0.05 * k as f64).collect()),
            p: args.p.unwrap_or(8.0),
            fit_range,
            vc_index: vc.exact.then_some(vc.index),
        };
        let rep = entropy_integral(&class, &opts)?;
        passed &= rep.envelope_holds;
        Some(rep)
    } else {
        None
    };
    let prov = ctx.provenance(
        "vc",
        &args,
        None,
        None,
        "largest shattered point set, covering numbers and entropy integrals",
    );
    match format_of(&args.output) {
        Format::Json => emit_json(&args.output, &prov, passed, json!({ "vc": vc, "entropy": covering }))?,
        Format::Csv => {
            let bytes = match &covering {
                Some(rep) => {
                    let mut buf = Vec::new();
                    rep.write_csv(&mut buf)?;
                    buf
                }
                None => csv_bytes(
                    &["class", "index", "exact", "configurations"],
                    [vec![
                        vc.class.clone(),
                        vc.index.to_string(),
                        vc.exact.to_string(),
                        vc.configurations.to_string(),
                    ]],
                )?,
            };
            write_csv(args.output.out.as_deref(), &bytes, &prov, passed)?;
        }
    }
    Ok(passed)
}
