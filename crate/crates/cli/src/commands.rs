use std::collections::BTreeSet;
use std::path::Path;

use anyhow::Result;
use openness_core::counterexample::{audit_grid, certify_membership, recompute_drift, CounterexampleInstance, MembershipReport};
use openness_core::dbar_min::{curvature_for_sequence, minimize_coefficient, run_cell, CellReport, CoefficientMinimum, CurvatureReport, ModeStatus};
use openness_core::integrability::{comparison_upper_bound, degree_cap, dyadic_lower_bound, threshold_finite, DyadicEvidence, DyadicVerdict};
use openness_core::quadrature::{monomial_norm, series_norm, QuadVerdict, Region, SeriesVerdict};
use openness_core::radial_weights::{RadialProfile, RadialWeight, WeightSequence};
use openness_core::series::{ModeSeries, MultiIndex};
use openness_core::LogReal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{csv_path, fmt_f64, logreal_header, write_csv, write_json, Row, Table};
use crate::{
    parse_float_list, parse_int_list, parse_list_at_least, parse_region, read_json, require, ApproxArgs, BuildArgs,
    CoefficientArgs, ConfigError, NormArgs, Outcome, SweepArgs, VerifyArgs,
};

fn header(cols: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for c in cols {
        match c.strip_prefix('*') {
            Some(name) => out.extend(logreal_header(name)),
            None => out.push((*c).to_string()),
        }
    }
    out
}

fn save<T: Serialize>(out: &Path, command: &str, report: &T, table: &Table) -> Result<()> {
    write_json(out, report)?;
    write_csv(&csv_path(out), command, table)
}

/// Verdict cells: the value when finite, `+inf` otherwise.
fn verdict_cells(row: Row, v: &QuadVerdict) -> Row {
    match v.value() {
        Some(x) => row.logreal(x),
        None => row.cell(1).cell("inf").cell("inf"),
    }
}

fn opt_logreal(row: Row, x: Option<LogReal>) -> Row {
    match x {
        Some(x) => row.logreal(x),
        None => row.cell("").cell("").cell(""),
    }
}

#[derive(Serialize)]
struct ModeNorm {
    alpha: MultiIndex,
    coeff: LogReal,
    norm_sq: QuadVerdict,
}

#[derive(Serialize)]
struct NormReport {
    region: Region,
    modes: Vec<ModeNorm>,
    /// `Σ |a_α|² m_α`, absent when some mode diverges.
    total: Option<LogReal>,
    total_ln_abs_err: Option<f64>,
    divergent_witness: Option<MultiIndex>,
}

pub fn norm(args: &NormArgs) -> Result<Outcome> {
    let weight: RadialWeight = read_json(require(&args.weight, "weight")?, "weight")?;
    let region = parse_region(&args.region)?;
    let f: ModeSeries = match (&args.alpha, &args.f) {
        (Some(a), None) => {
            let exps = parse_list_at_least::<u32>(a, 0, "alpha")?;
            let mut s = ModeSeries::zero(exps.len())?;
            s.add_term(MultiIndex::new(exps)?, LogReal::ONE)?;
            s
        }
        (None, Some(p)) => read_json(p, "series")?,
        _ => return Err(ConfigError("give exactly one of --alpha and --f".into()).into()),
    };
    let modes = f
        .iter()
        .map(|(alpha, coeff)| {
            Ok(ModeNorm {
                alpha: alpha.clone(),
                coeff,
                norm_sq: monomial_norm(&weight, alpha, region)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (total, total_ln_abs_err, divergent_witness) = match series_norm(&weight, &f, region, None)? {
        SeriesVerdict::Finite { value, ln_abs_err, .. } => (Some(value), Some(ln_abs_err), None),
        SeriesVerdict::Divergent { witness, .. } => (None, None, Some(witness)),
    };
    let mut table = Table::new(header(&["alpha", "*coeff", "finite", "deficit", "*norm_sq"]));
    for m in &modes {
        let deficit = match m.norm_sq {
            QuadVerdict::Divergent { deficit, .. } => fmt_f64(deficit),
            QuadVerdict::Finite { .. } => String::new(),
        };
        let row = Row::default()
            .cell(&m.alpha)
            .logreal(m.coeff)
            .cell(m.norm_sq.is_finite())
            .cell(deficit);
        table.push(verdict_cells(row, &m.norm_sq).finish());
    }
    let total_row = Row::default().cell("total").cell("").cell("").cell("").cell(total.is_some()).cell("");
    table.push(opt_logreal(total_row, total).finish());
    let report = NormReport {
        region,
        modes,
        total,
        total_ln_abs_err,
        divergent_witness,
    };
    save(&args.out, "norm", &report, &table)?;
    Ok(if report.total.is_some() {
        Outcome::Pass
    } else {
        Outcome::Divergent
    })
}

#[derive(Serialize)]
struct SweepCell {
    alpha: MultiIndex,
    #[serde(rename = "N")]
    big_n: i64,
    predicted_finite: bool,
    dyadic: DyadicEvidence,
    /// Exterior integral `∫_{‖z‖≥1} |z^α|² ‖z‖^{−N}`.
    quadrature: QuadVerdict,
    comparison_bound: Option<LogReal>,
    degree_cap: Option<u64>,
    agreement: bool,
}

#[derive(Serialize)]
struct SweepReport {
    n: usize,
    cells: Vec<SweepCell>,
    all_agree: bool,
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome> {
    if args.n == 0 {
        return Err(ConfigError("--n must be at least 1".into()).into());
    }
    if args.dyadic_terms == 0 {
        return Err(ConfigError("--dyadic-terms must be positive".into()).into());
    }
    let degrees = parse_list_at_least::<u32>(&args.alpha, 0, "alpha")?;
    let slopes = parse_int_list(&args.big_n)?;
    let jobs: Vec<(MultiIndex, i64)> = degrees
        .iter()
        .flat_map(|&d| MultiIndex::with_degree(args.n, d))
        .flat_map(|a| slopes.iter().map(move |&s| (a.clone(), s)))
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(alpha, s)| {
            let big_n = s as f64;
            let weight = RadialWeight::new(args.n, RadialProfile::log_plus(big_n))?;
            let predicted_finite = threshold_finite(args.n, &alpha, big_n);
            let dyadic = dyadic_lower_bound(args.n, &alpha, big_n, args.dyadic_terms)?;
            let quadrature = monomial_norm(&weight, &alpha, Region::Exterior { t_min: 0.0 })?;
            let agreement =
                quadrature.is_finite() == predicted_finite && (dyadic.verdict == DyadicVerdict::Diverges) == !predicted_finite;
            Ok(SweepCell {
                comparison_bound: comparison_upper_bound(args.n, &alpha, big_n),
                degree_cap: degree_cap(args.n, big_n),
                alpha,
                big_n: s,
                predicted_finite,
                dyadic,
                quadrature,
                agreement,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(header(&["n", "alpha", "N", "predicted", "dyadic_verdict", "quad_verdict", "*value", "agreement"]));
    let verdict = |finite: bool| if finite { "finite" } else { "divergent" };
    for c in &cells {
        let row = Row::default()
            .cell(args.n)
            .cell(&c.alpha)
            .cell(c.big_n)
            .cell(verdict(c.predicted_finite))
            .cell(match c.dyadic.verdict {
                DyadicVerdict::Diverges => "diverges",
                DyadicVerdict::Bounded => "bounded",
            })
            .cell(verdict(c.quadrature.is_finite()));
        table.push(verdict_cells(row, &c.quadrature).cell(if c.agreement { "ok" } else { "MISMATCH" }).finish());
    }
    let all_agree = cells.iter().all(|c| c.agreement);
    save(
        &args.out,
        "integrability sweep",
        &SweepReport {
            n: args.n,
            cells,
            all_agree,
        },
        &table,
    )?;
    Ok(Outcome::from_pass(all_agree))
}

fn levels_table(inst: &CounterexampleInstance) -> Table {
    let mut table = Table::new(header(&["k", "N", "C", "*A", "*B", "*eps"]));
    for l in &inst.levels {
        table.push(Row::default().cell(l.k).cell(l.big_n).num(l.c).logreal(l.a).logreal(l.b).logreal(l.eps).finish());
    }
    table
}

pub fn build(args: &BuildArgs) -> Result<Outcome> {
    if args.n == 0 || args.kmax == 0 {
        return Err(ConfigError("--n and --kmax must be at least 1".into()).into());
    }
    let inst = CounterexampleInstance::build(args.n, args.kmax)?;
    let audit = inst.weights.audit(&audit_grid(&inst.weights))?;
    save(&args.out, "counterexample build", &inst, &levels_table(&inst))?;
    Ok(Outcome::from_pass(audit.pass))
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    k_max: usize,
    /// Largest relative change when the levels are re-derived from scratch.
    drift: f64,
    drift_tol: f64,
    membership: MembershipReport,
    pass: bool,
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome> {
    if !(args.drift_tol > 0.0) {
        return Err(ConfigError("--drift-tol must be positive".into()).into());
    }
    let inst: CounterexampleInstance = read_json(require(&args.instance, "instance")?, "instance")?;
    let drift = recompute_drift(&inst)?;
    let membership = certify_membership(&inst)?;
    let mut table = Table::new(header(&[
        "k",
        "N",
        "*A",
        "*B",
        "*eps",
        "*norm",
        "*term",
        "*term_bound",
        "eps_identity_rel_err",
        "j",
        "witness",
        "deficit",
        "witness_ok",
    ]));
    for (l, t) in inst.levels.iter().zip(&membership.terms) {
        let w = membership.witnesses.iter().find(|w| w.j + 1 == l.k);
        table.push(
            Row::default()
                .cell(l.k)
                .cell(l.big_n)
                .logreal(l.a)
                .logreal(l.b)
                .logreal(l.eps)
                .logreal(t.norm)
                .logreal(t.term)
                .logreal(t.term_bound)
                .num(t.eps_identity_rel_err)
                .cell(l.k - 1)
                .cell(w.and_then(|w| w.witness.as_ref()).map(ToString::to_string).unwrap_or_default())
                .cell(w.and_then(|w| w.deficit).map(fmt_f64).unwrap_or_default())
                .cell(w.is_some_and(|w| w.ok))
                .finish(),
        );
    }
    let pass = membership.pass && drift <= args.drift_tol;
    let report = VerifyReport {
        n: inst.n,
        k_max: inst.k_max,
        drift,
        drift_tol: args.drift_tol,
        membership,
        pass,
    };
    save(&args.out, "counterexample verify", &report, &table)?;
    Ok(Outcome::from_pass(pass))
}

/// Either a bare weight sequence or a full counterexample instance.
#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsFile {
    Instance(Box<CounterexampleInstance>),
    Sequence(WeightSequence),
}

#[derive(Serialize)]
struct MonotoneInN {
    j: usize,
    /// κ_k ∈ [0, 1) for every projected mode.
    kappa_in_range: bool,
    kappa_nonincreasing: bool,
    error_nonincreasing: bool,
    /// `‖F − f‖² < ‖f‖²` at the largest N.
    error_below_f: bool,
}

#[derive(Serialize)]
struct ApproxReport {
    eps: f64,
    seed: u64,
    cells: Vec<CellReport>,
    monotone: Vec<MonotoneInN>,
    curvature: Vec<CurvatureReport>,
    pass: bool,
}

fn monotone_in_n(j: usize, cells: &[&CellReport]) -> MonotoneInN {
    let kappa_in_range = cells.iter().flat_map(|c| &c.modes).all(|m| match m.status {
        ModeStatus::Projected { kappa } => (0.0..1.0).contains(&kappa),
        ModeStatus::Dropped => true,
    });
    let kappa_nonincreasing = cells.windows(2).all(|w| {
        w[0].modes
            .iter()
            .zip(&w[1].modes)
            .all(|(a, b)| a.k == b.k && b.kappa() <= a.kappa())
    });
    let error_nonincreasing = cells
        .windows(2)
        .all(|w| w[1].approximant.error_sq <= w[0].approximant.error_sq);
    let error_below_f = cells
        .last()
        .is_some_and(|c| c.approximant.error_sq < c.approximant.f_norm_sq);
    MonotoneInN {
        j,
        kappa_in_range,
        kappa_nonincreasing,
        error_nonincreasing,
        error_below_f,
    }
}

pub fn approx(args: &ApproxArgs) -> Result<Outcome> {
    let f: ModeSeries = read_json(require(&args.f, "f")?, "series")?;
    let seq = match read_json::<WeightsFile>(require(&args.weights, "weights")?, "weights")? {
        WeightsFile::Instance(inst) => inst.weights,
        WeightsFile::Sequence(seq) => seq,
    };
    let mut slopes = parse_list_at_least::<u32>(&args.big_n, 2, "N")?;
    slopes.sort_unstable();
    slopes.dedup();
    let js: Vec<usize> = parse_list_at_least::<usize>(&args.j, 1, "j")?
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if let Some(&j) = js.iter().find(|&&j| j > seq.len()) {
        return Err(ConfigError(format!("--j {j} exceeds the {} weights supplied", seq.len())).into());
    }
    let jobs: Vec<(usize, u32)> = js.iter().flat_map(|&j| slopes.iter().map(move |&n| (j, n))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(j, n)| run_cell(&f, &seq, args.eps, j, n, args.seed))
        .collect::<openness_core::Result<Vec<_>>>()?;
    let monotone: Vec<MonotoneInN> = js
        .iter()
        .map(|&j| monotone_in_n(j, &cells.iter().filter(|c| c.j == j).collect::<Vec<_>>()))
        .collect();
    let curvature = curvature_for_sequence(&seq, args.eps, js.last().copied().unwrap_or(0));

    let mut table = Table::new(header(&[
        "j",
        "N",
        "k",
        "status",
        "kappa",
        "*coeff",
        "*u_norm_sq",
        "*mode_norm_sq",
        "orthogonality",
        "cr_max_relative",
        "perturbation_ok",
        "*error_sq",
        "*f_norm_sq",
        "berndtsson_ratio_theta",
        "berndtsson_ratio_explicit",
        "berndtsson_ratio_chain",
        "cell_pass",
    ]));
    for c in &cells {
        for m in &c.modes {
            let status = match m.status {
                ModeStatus::Projected { .. } => "projected",
                ModeStatus::Dropped => "dropped",
            };
            let cr = c.cr.iter().find(|r| r.k == m.k).map(|r| fmt_f64(r.max_relative)).unwrap_or_default();
            let pert = c.perturbation.iter().find(|p| p.k == m.k).map(|p| p.pass.to_string()).unwrap_or_default();
            let row = Row::default()
                .cell(c.j)
                .cell(c.big_n)
                .cell(m.k)
                .cell(status)
                .num(m.kappa())
                .logreal(m.coeff)
                .logreal(m.u_norm_sq);
            let row = opt_logreal(row, m.mode_norm_sq)
                .num(m.orthogonality)
                .cell(cr)
                .cell(pert)
                .logreal(c.approximant.error_sq)
                .logreal(c.approximant.f_norm_sq)
                .num(c.berndtsson.ratio_theta)
                .num(c.berndtsson.ratio_explicit)
                .num(c.berndtsson.ratio_chain)
                .cell(c.pass);
            table.push(row.finish());
        }
    }
    let pass = cells.iter().all(|c| c.pass)
        && monotone
            .iter()
            .all(|m| m.kappa_in_range && m.kappa_nonincreasing && m.error_nonincreasing && m.error_below_f)
        && curvature.iter().all(|c| c.pass);
    let report = ApproxReport {
        eps: args.eps,
        seed: args.seed,
        cells,
        monotone,
        curvature,
        pass,
    };
    save(&args.out, "approx run", &report, &table)?;
    Ok(Outcome::from_pass(pass))
}

#[derive(Serialize)]
struct CoefficientRow {
    #[serde(flatten)]
    minimum: CoefficientMinimum,
    /// `|searched_min − closed_form| / closed_form`.
    rel_err: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CoefficientReport {
    tol: f64,
    rows: Vec<CoefficientRow>,
    pass: bool,
}

pub fn coefficient(args: &CoefficientArgs) -> Result<Outcome> {
    if !(args.tol > 0.0) {
        return Err(ConfigError("--tol must be positive".into()).into());
    }
    let rows = parse_float_list(&args.r)?
        .into_iter()
        .map(|r| {
            let minimum = minimize_coefficient(r)?;
            let rel_err = (minimum.searched_min - minimum.closed_form).abs() / minimum.closed_form;
            Ok(CoefficientRow {
                minimum,
                rel_err,
                pass: rel_err <= args.tol && minimum.bound_holds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(header(&[
        "r",
        "t_star",
        "closed_form",
        "searched_min",
        "searched_t",
        "rel_err",
        "constrained_min",
        "constrained_attained",
        "six_bound",
        "bound_holds",
        "pass",
    ]));
    for row in &rows {
        let m = &row.minimum;
        table.push(
            Row::default()
                .num(m.r)
                .num(m.t_star)
                .num(m.closed_form)
                .num(m.searched_min)
                .num(m.searched_t)
                .num(row.rel_err)
                .num(m.constrained_min)
                .cell(m.constrained_attained)
                .num(m.six_bound)
                .cell(m.bound_holds)
                .cell(row.pass)
                .finish(),
        );
    }
    let pass = rows.iter().all(|r| r.pass);
    save(
        &args.out,
        "bounds coefficient",
        &CoefficientReport {
            tol: args.tol,
            rows,
            pass,
        },
        &table,
    )?;
    Ok(Outcome::from_pass(pass))
}
