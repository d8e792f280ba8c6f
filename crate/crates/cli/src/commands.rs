use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use betaop_core::asymptotics::{n_threshold, residual_exact, residual_numeric};
use betaop_core::bernoulli::{
    bernoulli_poly, integer_base_expansion_residual, integer_base_expansion_residual_mp,
};
use betaop_core::field::rat;
use betaop_core::functions::FromFn;
use betaop_core::partition::{building_block_check, refine_to_level};
use betaop_core::spectral::{
    block_eigenvalues, closed_form_block, make_psi_basis, restriction_matrix, riesz_projections, Check,
};
use betaop_core::transfer::{apply_integer_transfer, apply_transfer, transfer_orbit, PointwiseEngine};
use betaop_core::{
    epsilon_of, fit_log_slope, BernoulliTable, BetaParams, Builtin, Expansion, PiecewisePoly, Polynomial,
    QuadNum, Smooth,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::output::{csv_body, dec, json_body, CliError, CliResult, Report};

pub fn run(command: &Command) -> CliResult<Report> {
    match command {
        Command::EigenCheck(a) => eigen_check(a),
        Command::Iterate(a) => iterate(a),
        Command::Asymptotics(a) => asymptotics(a),
        Command::PartitionDump(a) => partition_dump(a),
        Command::BernoulliTable(a) => bernoulli_table(a),
        Command::IntegerBase(a) => integer_base(a),
        Command::BlockCheck(a) => block_check(a),
        Command::MarkovCheck(a) => markov_check(a),
    }
}

fn beta_params(p: &ParamArgs) -> CliResult<BetaParams> {
    Ok(BetaParams::new(p.a0, p.a1)?)
}

#[derive(Serialize)]
struct ExactValue {
    exact: String,
    decimal: String,
}

impl From<&QuadNum> for ExactValue {
    fn from(x: &QuadNum) -> Self {
        ExactValue {
            exact: x.to_string(),
            decimal: dec(x.to_f64()),
        }
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    passed: bool,
}

fn check_rows(checks: &[Check]) -> Vec<CheckRow<'_>> {
    checks
        .iter()
        .map(|c| CheckRow {
            name: &c.name,
            passed: c.passed,
        })
        .collect()
}

fn eigen_check(a: &EigenCheckArgs) -> CliResult<Report> {
    let params = beta_params(&a.params)?;
    let nu = a.nu as usize;
    let mut checks = riesz_projections(params)?.checks;
    let eigenvalues = match block_eigenvalues(params, nu) {
        Ok(v) => {
            checks.push(Check::new(format!("block eigenvalues for nu = {nu}"), true));
            v
        }
        Err(betaop_core::Error::Verification(msg)) => {
            checks.push(Check::new(msg, false));
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let rm = restriction_matrix(&make_psi_basis(params, nu, false)?)?;
    for k in 1..=nu {
        checks.push(Check::new(
            format!("diagonal block A_{k} matches closed form"),
            rm.diagonal_block(k) == closed_form_block(params, k),
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    let n_ok = checks.iter().filter(|c| c.passed).count();
    let summary = format!("{n_ok}/{} checks passed for {params}", checks.len());
    let body = if a.json {
        json_body(&json!({
            "schema": 1,
            "a0": params.a0(),
            "a1": params.a1(),
            "nu": nu,
            "beta": dec(params.beta_f64()),
            "eigenvalues": eigenvalues.iter().map(ExactValue::from).collect::<Vec<_>>(),
            "checks": check_rows(&checks),
            "passed": passed,
        }))
    } else {
        let mut s = String::new();
        writeln!(s, "{params}: beta = {}", dec(params.beta_f64())).unwrap();
        writeln!(s, "eigenvalues:").unwrap();
        for (i, l) in eigenvalues.iter().enumerate() {
            writeln!(s, "  lambda{} = {l} ({})", i + 1, dec(l.to_f64())).unwrap();
        }
        writeln!(s, "checks:").unwrap();
        for c in &checks {
            writeln!(s, "  {} {}", if c.passed { "ok    " } else { "FAILED" }, c.name).unwrap();
        }
        writeln!(s, "{}: {summary}", if passed { "PASS" } else { "FAIL" }).unwrap();
        s.into_bytes()
    };
    Ok(Report::new(body).passed(passed).summary(summary))
}

/// A function given on the command line: a catalog name or a piecewise JSON file.
enum Source {
    Builtin(Builtin),
    File(PiecewisePoly),
}

impl Source {
    fn load(arg: &str, params: BetaParams) -> CliResult<Source> {
        if let Ok(b) = Builtin::from_str(arg) {
            return Ok(Source::Builtin(b));
        }
        let path = Path::new(arg);
        if !path.is_file() {
            let names: Vec<&str> = Builtin::ALL.iter().map(Builtin::name).collect();
            return Err(CliError::Usage(format!(
                "unknown function {arg:?}: expected one of {} or a piecewise JSON file",
                names.join(", ")
            )));
        }
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{arg}: {e}")))?;
        let f = PiecewisePoly::from_json(&value)?;
        if f.params() != params {
            return Err(CliError::Usage(format!(
                "{arg} is defined for {} but the run uses {params}",
                f.params()
            )));
        }
        Ok(Source::File(f))
    }

    fn exact(&self, params: BetaParams) -> CliResult<PiecewisePoly> {
        match self {
            Source::Builtin(b) => b.exact(params).ok_or_else(|| {
                CliError::Usage(format!("{b} has no exact piecewise form; use --engine numeric"))
            }),
            Source::File(f) => Ok(f.clone()),
        }
    }

    fn smooth(&self) -> Box<dyn Smooth> {
        match self {
            Source::Builtin(b) => b.smooth(),
            Source::File(f) => {
                let mut derivatives = vec![f.clone()];
                for i in 0..8 {
                    let d = derivatives[i].derivative();
                    derivatives.push(d);
                }
                Box::new(FromFn(move |order: usize, x: f64| {
                    derivatives.get(order).map_or(0.0, |d| d.eval_f64(x))
                }))
            }
        }
    }
}

#[derive(Serialize)]
struct SampleRow {
    x: String,
    value: String,
}

fn iterate(a: &IterateArgs) -> CliResult<Report> {
    let params = beta_params(&a.params)?;
    let source = Source::load(&a.f, params)?;
    let n = a.samples as usize;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let (values, exact) = match a.engine {
        Engine::Exact => {
            let f = source.exact(params)?;
            let g = transfer_orbit(&f, a.k, a.max_pieces)?.pop().expect("orbit is non-empty");
            (xs.iter().map(|&x| g.eval_f64(x)).collect::<Vec<_>>(), Some(g))
        }
        Engine::Numeric => {
            let s = source.smooth();
            let engine = PointwiseEngine::new(params);
            let value = |x: f64| s.value(x);
            (engine.transfer_power_grid(&value, a.k, &xs)?, None)
        }
    };
    let rows = xs.iter().zip(&values).map(|(&x, &v)| SampleRow {
        x: dec(x),
        value: dec(v),
    });
    let body = match a.format {
        Format::Csv => csv_body(rows)?,
        Format::Json => json_body(&json!({
            "schema": 1,
            "a0": params.a0(),
            "a1": params.a1(),
            "f": a.f,
            "k": a.k,
            "engine": a.engine,
            "pieces": exact.as_ref().map(PiecewisePoly::piece_count),
            "function": exact.as_ref().map(PiecewisePoly::to_json),
            "samples": rows.collect::<Vec<_>>(),
        })),
    };
    let summary = match &exact {
        Some(g) => format!("P^{} {} has {} pieces", a.k, a.f, g.piece_count()),
        None => format!("P^{} {} on {n} points", a.k, a.f),
    };
    Ok(Report::new(body).summary(summary))
}

#[derive(Serialize)]
struct ResidualRow {
    k: usize,
    residual_lower: String,
    residual_upper: String,
    beta_power_bound: String,
    ratio: String,
}

fn asymptotics(a: &AsymptoticsArgs) -> CliResult<Report> {
    let params = beta_params(&a.params)?;
    let theorem = epsilon_of(params, a.n)?;
    let source = Source::load(&a.f, params)?;
    let expansion = match a.expansion {
        ExpansionArg::OneTerm => Expansion::OneTerm,
        ExpansionArg::TwoTerm => Expansion::TwoTerm,
    };
    let k_max = a.k_max as usize;
    let series = match a.engine {
        Engine::Exact => residual_exact(&source.exact(params)?, k_max, expansion, a.max_pieces)?,
        Engine::Numeric => residual_numeric(source.smooth().as_ref(), params, k_max, a.grid as usize, expansion)?,
    };
    let lnb = params.beta_f64().ln();
    let target = match expansion {
        Expansion::TwoTerm => -(1.0 + theorem.epsilon) * lnb,
        Expansion::OneTerm => -lnb,
    };
    let slope = series.fitted_slope;
    let passed = !a.check
        || match (expansion, slope) {
            (Expansion::TwoTerm, Some(s)) => s <= target + 0.05,
            (Expansion::OneTerm, Some(s)) => (s - target).abs() <= 0.05,
            // an exactly vanishing residual beats any rate
            (_, None) => series.residual_upper.iter().skip(1).all(|&r| r == 0.0),
        };
    let ratios = series.ratios();
    let rows: Vec<ResidualRow> = (0..series.ks.len())
        .map(|i| ResidualRow {
            k: series.ks[i],
            residual_lower: dec(series.residual_lower[i]),
            residual_upper: dec(series.residual_upper[i]),
            beta_power_bound: dec(series.beta_power_bound[i]),
            ratio: dec(ratios[i]),
        })
        .collect();
    let fit = json!({
        "epsilon": dec(theorem.epsilon),
        "n_threshold": dec(n_threshold(params)),
        "fitted_slope": slope.map(dec),
        "target_slope": dec(target),
    });
    let body = match a.format {
        Format::Csv => csv_body(rows)?,
        Format::Json => json_body(&json!({
            "schema": 1,
            "a0": params.a0(),
            "a1": params.a1(),
            "f": a.f,
            "n": a.n,
            "engine": a.engine,
            "expansion": expansion,
            "fit": fit,
            "rows": rows,
        })),
    };
    let relation = if expansion == Expansion::TwoTerm { "at most" } else { "near" };
    let summary = match slope {
        Some(s) => format!("fitted slope {s:.4} ({relation} {target:.4} expected, epsilon = {:.4})", theorem.epsilon),
        None => "residual too small to fit a slope".to_string(),
    };
    Ok(Report::new(body).passed(passed).summary(summary).extra(fit))
}

/// Largest partition written by `partition-dump`.
const MAX_PARTITION_POINTS: usize = 2_000_000;

#[derive(Serialize)]
struct PointRow {
    index: usize,
    k_word: String,
    j_word: String,
    value: String,
    decimal: String,
    gap_exponent: Option<u32>,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(".")
}

fn partition_dump(a: &PartitionDumpArgs) -> CliResult<Report> {
    let params = beta_params(&a.params)?;
    let (a0, a1) = (params.a0() as usize, params.a1() as usize);
    let (mut short, mut long) = (a0, a1);
    for _ in 1..a.m {
        (short, long) = (a0.saturating_mul(short).saturating_add(long), a1.saturating_mul(short));
    }
    if short.saturating_add(long) > MAX_PARTITION_POINTS {
        return Err(CliError::Budget(format!(
            "level {} has {} gaps (limit {MAX_PARTITION_POINTS})",
            a.m,
            short.saturating_add(long)
        )));
    }
    let partition = refine_to_level(params, a.m)?;
    let law = partition.verify_gap_law();
    let gaps = partition.gap_count();
    let rows: Vec<PointRow> = partition
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| PointRow {
            index: i,
            k_word: join(&p.k_word),
            j_word: join(&p.j_word),
            value: p.value.to_string(),
            decimal: dec(p.value.to_f64()),
            gap_exponent: (i < gaps).then(|| p.depth()),
        })
        .collect();
    let histogram = partition.histogram();
    let body = match a.format {
        Format::Csv => csv_body(rows)?,
        Format::Json => json_body(&json!({
            "schema": 1,
            "a0": params.a0(),
            "a1": params.a1(),
            "m": a.m,
            "gap_count": gaps,
            "histogram": histogram,
            "gap_law": law.is_ok(),
            "points": rows,
        })),
    };
    let summary = match &law {
        Ok(_) => format!("{gaps} gaps, gap law holds"),
        Err(e) => e.to_string(),
    };
    Ok(Report::new(body)
        .passed(law.is_ok())
        .summary(summary)
        .extra(json!({ "gap_count": gaps, "histogram": histogram })))
}

#[derive(Serialize)]
struct BernoulliRow {
    n: usize,
    coefficients: String,
}

fn bernoulli_table(a: &BernoulliTableArgs) -> CliResult<Report> {
    let n = a.n as usize;
    let table = BernoulliTable::new(n)?;
    let row = |i: usize| table.coeffs(i).iter().map(ToString::to_string).collect::<Vec<_>>();
    let body = match a.format {
        Format::Csv => csv_body((0..=n).map(|i| BernoulliRow {
            n: i,
            coefficients: row(i).join(" "),
        }))?,
        Format::Json => json_body(&json!({
            "schema": 1,
            "order": "ascending powers of x",
            "rows": (0..=n).map(|i| json!({ "n": i, "coefficients": row(i) })).collect::<Vec<_>>(),
        })),
    };
    Ok(Report::new(body))
}

#[derive(Serialize)]
struct IntegerBaseRow {
    k: usize,
    residual: String,
    q_pow_nk: String,
    q_pow_n1k: String,
}

fn integer_base(a: &IntegerBaseArgs) -> CliResult<Report> {
    if a.k_min > a.k_max {
        return Err(CliError::Usage(format!("--k-min {} exceeds --k-max {}", a.k_min, a.k_max)));
    }
    let f = Builtin::from_str(&a.f)?.smooth();
    let (q, n) = (a.q, a.n as usize);
    let carrier = BetaParams::golden();
    let mut eigen_ok = true;
    for j in 0..=n {
        let b = PiecewisePoly::from_poly(bernoulli_poly(j, carrier)?);
        let scale = QuadNum::from_int(q as i64, carrier).powi(-(j as i64));
        eigen_ok &= apply_integer_transfer(&b, q)?.equal_ae(&b.scale(&scale));
    }
    let ks: Vec<usize> = (a.k_min as usize..=a.k_max as usize).collect();
    let residuals = ks
        .iter()
        .map(|&k| match a.precision {
            Precision::Double => integer_base_expansion_residual(f.as_ref(), q, k, n, a.grid as usize),
            Precision::Multi => {
                integer_base_expansion_residual_mp(f.as_ref(), q, k, n, a.grid as usize, a.bits as usize)
            }
        })
        .collect::<betaop_core::Result<Vec<f64>>>()?;
    let slope = fit_log_slope(&ks, &residuals, 0);
    let lnq = (q as f64).ln();
    let rows: Vec<IntegerBaseRow> = ks
        .iter()
        .zip(&residuals)
        .map(|(&k, &r)| IntegerBaseRow {
            k,
            residual: dec(r),
            q_pow_nk: dec((q as f64).powi(-((n * k) as i32))),
            q_pow_n1k: dec((q as f64).powi(-(((n + 1) * k) as i32))),
        })
        .collect();
    let fit = json!({
        "eigenrelation": eigen_ok,
        "fitted_slope": slope.map(dec),
        "minus_n_ln_q": dec(-(n as f64) * lnq),
        "minus_n_plus_1_ln_q": dec(-((n + 1) as f64) * lnq),
    });
    let body = match a.format {
        Format::Csv => csv_body(rows)?,
        Format::Json => json_body(&json!({
            "schema": 1,
            "f": a.f,
            "q": q,
            "n": n,
            "grid": a.grid,
            "precision": a.precision,
            "fit": fit,
            "rows": rows,
        })),
    };
    let summary = format!(
        "Q B_j = q^-j B_j for j <= {n}: {}; fitted slope {} (-N ln q = {:.4}, -(N+1) ln q = {:.4})",
        if eigen_ok { "exact" } else { "FAILED" },
        slope.map_or("n/a".into(), |s| format!("{s:.4}")),
        -(n as f64) * lnq,
        -((n + 1) as f64) * lnq
    );
    Ok(Report::new(body).passed(eigen_ok).summary(summary).extra(fit))
}

fn block_check(a: &BlockCheckArgs) -> CliResult<Report> {
    let params = beta_params(&a.params)?;
    let report = building_block_check(params, a.m, a.s as usize)?;
    let passed = report.passed();
    let failures: Vec<_> = report
        .failures
        .iter()
        .map(|f| json!({ "k_word": f.k_word, "j_word": f.j_word, "s": f.s, "identity": f.identity }))
        .collect();
    let summary = format!(
        "{} gaps, {} block identities, {} intermediate identities, {} failures",
        report.gaps,
        report.checks,
        report.intermediate_checks,
        failures.len()
    );
    let body = if a.json {
        json_body(&json!({
            "schema": 1,
            "a0": params.a0(),
            "a1": params.a1(),
            "m": a.m,
            "s_max": a.s,
            "gaps": report.gaps,
            "checks": report.checks,
            "intermediate_checks": report.intermediate_checks,
            "failures": failures,
            "passed": passed,
        }))
    } else {
        format!("{}: {summary}\n", if passed { "PASS" } else { "FAIL" }).into_bytes()
    };
    Ok(Report::new(body).passed(passed).summary(summary))
}

fn random_unit_point(rng: &mut ChaCha8Rng, params: BetaParams) -> QuadNum {
    let p = rat(rng.gen_range(0..1000), 997);
    let q = rat(rng.gen_range(-1000..1000), 991);
    QuadNum::new(p, q, params).fract()
}

fn random_piecewise(rng: &mut ChaCha8Rng, params: BetaParams) -> CliResult<PiecewisePoly> {
    let mut cuts: Vec<QuadNum> = (0..rng.gen_range(0..=3))
        .map(|_| random_unit_point(rng, params))
        .filter(|x| !x.is_zero())
        .collect();
    cuts.sort_by(|a, b| a.cmp_exact(b));
    cuts.dedup();
    let mut breakpoints = vec![QuadNum::zero(params)];
    breakpoints.extend(cuts);
    breakpoints.push(QuadNum::one(params));
    let mut coeff = || {
        QuadNum::new(
            rat(rng.gen_range(-9..=9), rng.gen_range(1..=7)),
            rat(rng.gen_range(-9..=9), rng.gen_range(1..=7)),
            params,
        )
    };
    let pieces = (1..breakpoints.len())
        .map(|_| Polynomial::new((0..4).map(|_| coeff()).collect(), params))
        .collect();
    Ok(PiecewisePoly::new(breakpoints, pieces)?)
}

fn markov_check(a: &MarkovCheckArgs) -> CliResult<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let all = BetaParams::all_up_to(a.max_a0);
    let mut failures = Vec::new();
    let mut worst_ratio = 0.0f64;
    for i in 0..a.samples {
        let params = all[rng.gen_range(0..all.len())];
        let f = random_piecewise(&mut rng, params)?;
        let g = apply_transfer(&f)?;
        if g.integrate() != f.integrate() {
            failures.push(format!("sample {i} ({params}): integral not conserved"));
            continue;
        }
        let factor = (params.a0() + 1) as f64 / params.beta_f64();
        let mut samples = 32;
        loop {
            let (sf, sg) = (f.sup_norm_estimate(samples)?, g.sup_norm_estimate(samples)?);
            if sg.upper <= factor * sf.lower * (1.0 + 1e-12) {
                if sf.lower > 0.0 {
                    worst_ratio = worst_ratio.max(sg.upper / (factor * sf.lower));
                }
                break;
            }
            if samples >= 4096 {
                failures.push(format!("sample {i} ({params}): sup bound not certified"));
                break;
            }
            samples *= 2;
        }
    }
    let passed = failures.is_empty();
    let summary = format!(
        "{} samples, {} failures, largest ||Pf|| / ((a0+1)/beta ||f||) = {worst_ratio:.6}",
        a.samples,
        failures.len()
    );
    let body = if a.json {
        json_body(&json!({
            "schema": 1,
            "samples": a.samples,
            "seed": a.seed,
            "max_a0": a.max_a0,
            "worst_ratio": dec(worst_ratio),
            "failures": failures,
            "passed": passed,
        }))
    } else {
        let mut s = format!("{}: {summary}\n", if passed { "PASS" } else { "FAIL" });
        for f in &failures {
            writeln!(s, "  {f}").unwrap();
        }
        s.into_bytes()
    };
    Ok(Report::new(body).passed(passed).summary(summary))
}
