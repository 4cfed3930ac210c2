mod output;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use rankcore::cb_spaces::{CbDerivative, CbSpace, SuccExpansion};
use rankcore::certificates::{extract_embedding, make_certificate, verify, CertError, Mode, RankCertificate};
use rankcore::engine::{
    iterate_steps, rank_closed_form, trace_csv, EngineError, IterationTrace, MonotoneOperator, SetDomain,
};
use rankcore::gamma::{CellRelation, FinitePointSpace, GammaOperator, RelationDomain};
use rankcore::instance::{
    build_subshift, interval_domain, interval_json, load_instance, relation_domain, CertificateInstance, Instance,
    InstanceError, OperatorName,
};
use rankcore::ordinal::parse_ordinal;
use rankcore::subshift::{IndependenceSearch, Subshift, SubshiftError, DEFAULT_NODE_BUDGET};
use rankcore::Ordinal;

use output::{render, Format, Outcome, Report};

const CLOSED_FORM_SAMPLES: usize = 16;
const CLOSED_FORM_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "rankctl", version, about = "Ordinal ranks of monotone set operators")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write the stagewise CSV trace here.
    #[arg(long, global = true, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ordinal expressions.
    #[command(subcommand)]
    Ordinal(OrdinalCmd),
    /// Rank of an ordinal_space or finite_relation instance.
    Rank {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        /// Use the operator's closed form, spot-checked at sampled stages.
        #[arg(long)]
        closed_form: bool,
    },
    /// Γ iteration on a finite_relation instance.
    Gamma {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// Subshift of finite type queries.
    #[command(subcommand)]
    Subshift(SubshiftCmd),
    /// Rank certificates.
    #[command(subcommand)]
    Cert(CertCmd),
}

#[derive(Debug, Subcommand)]
enum OrdinalCmd {
    /// Parse an expression and print its normal form.
    Eval { expr: String },
}

#[derive(Debug, clap::Args)]
struct Evidence {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Search nodes per word pair.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
}

#[derive(Debug, Subcommand)]
enum SubshiftCmd {
    /// Word count, block entropy and spectral entropy.
    Entropy {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Allowed words of length n.
    Words {
        file: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// IE evidence relation, or a single pair with --u and --v.
    Ie {
        file: PathBuf,
        #[command(flatten)]
        evidence: Evidence,
        #[arg(long, requires = "v")]
        u: Option<String>,
        #[arg(long, requires = "u")]
        v: Option<String>,
    },
    /// Γ on the IE evidence towers up to length n.
    CpeReport {
        file: PathBuf,
        #[command(flatten)]
        evidence: Evidence,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
}

#[derive(Debug, Subcommand)]
enum CertCmd {
    /// Check a certificate against its own mode.
    Verify {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// Build a certificate of order type k for a target instance.
    Make {
        target: PathBuf,
        #[arg(long)]
        k: u64,
    },
}

/// Failure that maps to the input-error exit code.
#[derive(Debug)]
struct InputError {
    pointer: Option<String>,
    message: String,
}

impl InputError {
    fn new(message: impl Display) -> Self {
        InputError {
            pointer: None,
            message: message.to_string(),
        }
    }
}

impl From<InstanceError> for InputError {
    fn from(e: InstanceError) -> Self {
        InputError {
            pointer: e.pointer().map(str::to_string),
            message: e.to_string(),
        }
    }
}

impl From<SubshiftError> for InputError {
    fn from(e: SubshiftError) -> Self {
        InputError::new(e)
    }
}

impl From<EngineError> for InputError {
    fn from(e: EngineError) -> Self {
        InputError::new(e)
    }
}

struct Output {
    report: Report,
    csv: Option<String>,
}

impl From<Report> for Output {
    fn from(report: Report) -> Self {
        Output { report, csv: None }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Outcome::InputError } else { Outcome::Success };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let format = cli.format;
    let out = match dispatch(cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {}", e.message);
            let body = json!({ "error": { "pointer": e.pointer, "message": e.message } });
            Report::new(body, Outcome::InputError).into()
        }
    };
    if let (Some(path), Some(csv)) = (&cli.trace, &out.csv) {
        if let Err(e) = std::fs::write(path, csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(Outcome::InputError as u8);
        }
    }
    print!("{}", render(&out.report.body, format));
    ExitCode::from(out.report.outcome as u8)
}

fn dispatch(command: Command) -> Result<Output, InputError> {
    match command {
        Command::Ordinal(OrdinalCmd::Eval { expr }) => ordinal_eval(&expr).map(Into::into),
        Command::Rank {
            file,
            budget,
            closed_form,
        } => rank(&file, budget, closed_form),
        Command::Gamma { file, budget } => gamma(&file, budget),
        Command::Subshift(cmd) => subshift(cmd).map(Into::into),
        Command::Cert(CertCmd::Verify { file, budget }) => cert_verify(&file, budget).map(Into::into),
        Command::Cert(CertCmd::Make { target, k }) => cert_make(&target, k).map(Into::into),
    }
}

fn ordinal_eval(expr: &str) -> Result<Report, InputError> {
    let o = parse_ordinal(expr).map_err(|e| InputError {
        pointer: None,
        message: format!("{expr:?}: {e}"),
    })?;
    let body = json!({
        "input": expr,
        "canonical": o.to_string(),
        "finite": o.is_finite(),
        "successor": o.is_successor(),
        "limit": o.is_limit(),
        "leading_exponent": o.leading_exponent().to_string(),
        "cb_rank": rankcore::cb_spaces::cb_rank(&o).to_string(),
    });
    Ok(Report::new(body, Outcome::Success))
}

fn positive_budget(budget: usize) -> Result<(), InputError> {
    if budget == 0 {
        return Err(InputError::new("budget must be at least 1"));
    }
    Ok(())
}

fn rank(file: &Path, budget: usize, closed_form: bool) -> Result<Output, InputError> {
    positive_budget(budget)?;
    match load_instance(file)? {
        Instance::OrdinalSpace(space) => {
            let header = json!({
                "instance": "ordinal_space",
                "gamma": space.gamma.to_string(),
                "operator": operator_name(space.operator),
            });
            match space.operator {
                OperatorName::Cb => {
                    let domain = CbSpace::new(space.gamma.clone());
                    let start = domain.whole();
                    run_rank(header, &domain, &CbDerivative, &start, budget, closed_form, |s| json!(s.to_string()))
                }
                OperatorName::SuccExpansion => {
                    let domain = interval_domain(&space);
                    let start = space.start_interval();
                    run_rank(header, &domain, &SuccExpansion, &start, budget, closed_form, interval_json)
                }
            }
        }
        Instance::FiniteRelation(rel) => {
            if closed_form {
                return Err(InputError::new("finite_relation instances have no closed form; drop --closed-form"));
            }
            let space = rel.space()?;
            let start = rel.relation(&space)?;
            let header = json!({ "instance": "finite_relation", "points": space.cells(), "operator": "gamma" });
            let domain = relation_domain(&space);
            run_rank(header, &domain, &GammaOperator, &start, budget, false, |r| {
                json!(r.named_pairs(&space))
            })
        }
        other => Err(InputError::new(format!(
            "rank needs an ordinal_space or finite_relation instance, found {}",
            other.type_name()
        ))),
    }
}

fn operator_name(op: OperatorName) -> &'static str {
    match op {
        OperatorName::Cb => "cb",
        OperatorName::SuccExpansion => "succ_expansion",
    }
}

fn merge(mut header: Value, extra: Value) -> Value {
    if let (Some(h), Value::Object(e)) = (header.as_object_mut(), extra) {
        h.extend(e);
    }
    header
}

fn run_rank<D, O>(
    header: Value,
    domain: &D,
    op: &O,
    start: &D::Elem,
    budget: usize,
    closed_form: bool,
    describe: impl Fn(&D::Elem) -> Value,
) -> Result<Output, InputError>
where
    D: SetDomain,
    O: MonotoneOperator<D>,
{
    if closed_form {
        let cf = rank_closed_form(domain, op, start, CLOSED_FORM_SAMPLES, CLOSED_FORM_SEED)
            .map_err(|e| InputError::new(format!("closed form unavailable: {e}")))?;
        let mut rows = String::from("stage_index,size_metric,is_fixpoint\n");
        for alpha in &cf.sampled {
            if let Some(Ok(stage)) = op.transfinite_stage(domain, start, alpha) {
                rows.push_str(&format!("{alpha},{},{}\n", domain.size_metric(&stage), alpha >= &cf.rank));
            }
        }
        let stable = op
            .transfinite_stage(domain, start, &cf.rank)
            .and_then(Result::ok)
            .map(|s| describe(&s));
        let body = merge(
            header,
            json!({
                "mode": "closed-form",
                "rank": cf.rank.to_string(),
                "exact": cf.verified,
                "verified": cf.verified,
                "sampled_stages": cf.sampled.iter().map(Ordinal::to_string).collect::<Vec<_>>(),
                "failures": cf.failures,
                "stable_part": stable,
            }),
        );
        let outcome = if cf.verified { Outcome::Success } else { Outcome::Rejected };
        return Ok(Output {
            report: Report::new(body, outcome),
            csv: Some(rows),
        });
    }
    let trace = iterate_steps(domain, op, start, budget)?;
    let body = merge(header, step_fields(domain, &trace, budget, &describe));
    let outcome = if trace.is_exact() { Outcome::Success } else { Outcome::Indeterminate };
    Ok(Output {
        report: Report::new(body, outcome),
        csv: Some(trace_csv(domain, &trace)),
    })
}

fn step_fields<D: SetDomain>(
    domain: &D,
    trace: &IterationTrace<D::Elem>,
    budget: usize,
    describe: &impl Fn(&D::Elem) -> Value,
) -> Value {
    json!({
        "mode": "step",
        "budget": budget,
        "rank": trace.rank.as_ref().map(Ordinal::to_string),
        "exact": trace.is_exact(),
        "rank_is_lower_bound": trace.rank_is_lower_bound,
        "reached_extreme": trace.reached_extreme,
        "stable_part": trace.stable_part.as_ref().map(describe),
        "stage_sizes": trace.stages.iter().map(|s| domain.size_metric(&s.value)).collect::<Vec<_>>(),
    })
}

fn gamma(file: &Path, budget: usize) -> Result<Output, InputError> {
    positive_budget(budget)?;
    let Instance::FiniteRelation(rel) = load_instance(file)? else {
        return Err(InputError::new("gamma needs a finite_relation instance"));
    };
    let space = rel.space()?;
    let start = rel.relation(&space)?;
    let domain = relation_domain(&space);
    let trace = iterate_steps(&domain, &GammaOperator, &start, budget)?;
    let describe = |r: &CellRelation| json!(r.named_pairs(&space));
    let stages: Vec<Value> = trace
        .stages
        .iter()
        .map(|s| json!({ "stage": s.index.to_string(), "pairs": describe(&s.value) }))
        .collect();
    let body = merge(
        json!({
            "instance": "finite_relation",
            "points": space.cells(),
            "input_is_equivalence": start.matrix.is_equivalence(),
            "stages": stages,
        }),
        step_fields(&domain, &trace, budget, &describe),
    );
    let outcome = if trace.is_exact() { Outcome::Success } else { Outcome::Indeterminate };
    Ok(Output {
        report: Report::new(body, outcome),
        csv: Some(trace_csv(&domain, &trace)),
    })
}

fn load_subshift(file: &Path) -> Result<Subshift, InputError> {
    match load_instance(file)? {
        Instance::Sft(sft) => Ok(build_subshift(&sft)?),
        other => Err(InputError::new(format!("expected an sft instance, found {}", other.type_name()))),
    }
}

fn subshift(cmd: SubshiftCmd) -> Result<Report, InputError> {
    match cmd {
        SubshiftCmd::Entropy { file, n, tol } => {
            let shift = load_subshift(&file)?;
            let count = shift.count_words(n)?;
            let estimate = shift.entropy_estimate(n)?;
            let (spectral, outcome) = match shift.entropy_spectral(tol) {
                Ok(h) => (json!(h), Outcome::Success),
                Err(SubshiftError::Tolerance { iterations, partial }) => (
                    json!({ "unconverged_after": iterations, "partial": partial }),
                    Outcome::Indeterminate,
                ),
                Err(e) => return Err(e.into()),
            };
            let body = json!({
                "n": n,
                "tol": tol,
                "count": count.to_string(),
                "entropy_estimate": estimate,
                "entropy_spectral": spectral,
            });
            Ok(Report::new(body, outcome))
        }
        SubshiftCmd::Words { file, n } => {
            let shift = load_subshift(&file)?;
            let words: Vec<String> = shift.words(n)?.iter().map(|w| shift.spec.decode(w)).collect();
            Ok(Report::new(json!({ "n": n, "count": words.len(), "words": words }), Outcome::Success))
        }
        SubshiftCmd::Ie { file, evidence, u, v } => {
            let shift = load_subshift(&file)?;
            match (u, v) {
                (Some(u), Some(v)) => ie_pair(&shift, &evidence, &u, &v),
                _ => ie_relation(&shift, &evidence),
            }
        }
        SubshiftCmd::CpeReport { file, evidence, budget } => {
            positive_budget(budget)?;
            let shift = load_subshift(&file)?;
            let report = shift.entropy_rank_report_with_budget(
                evidence.n,
                evidence.horizon,
                evidence.density,
                budget,
                evidence.node_budget,
            )?;
            let outcome = match report.verdict {
                rankcore::subshift::Verdict::CpeConsistent => Outcome::Success,
                rankcore::subshift::Verdict::NotCpe => Outcome::Rejected,
                rankcore::subshift::Verdict::Indeterminate => Outcome::Indeterminate,
            };
            let body = serde_json::to_value(&report).map_err(InputError::new)?;
            Ok(Report::new(body, outcome))
        }
    }
}

fn ie_pair(shift: &Subshift, ev: &Evidence, u: &str, v: &str) -> Result<Report, InputError> {
    let (wu, wv) = (shift.spec.encode(u)?, shift.spec.encode(v)?);
    let search = shift.independence_search(&wu, &wv, ev.horizon, ev.density, ev.node_budget)?;
    let head = json!({
        "u": u,
        "v": v,
        "horizon": ev.horizon,
        "density": ev.density,
        "required_positions": rankcore::subshift::required_size(ev.horizon, ev.density),
        "node_budget": ev.node_budget,
    });
    let (extra, outcome) = match search {
        IndependenceSearch::Found(c) => (
            json!({ "result": "independent", "positions": c.positions, "offsets": c.offsets() }),
            Outcome::Success,
        ),
        IndependenceSearch::Exhausted => (json!({ "result": "refuted" }), Outcome::Rejected),
        IndependenceSearch::BudgetExceeded => (json!({ "result": "budget exceeded" }), Outcome::Indeterminate),
    };
    Ok(Report::new(merge(head, extra), outcome))
}

fn ie_relation(shift: &Subshift, ev: &Evidence) -> Result<Report, InputError> {
    let rel = shift.ie_relation_with_budget(ev.n, ev.horizon, ev.density, ev.node_budget)?;
    let names: Vec<String> = rel.cells.iter().map(|w| shift.spec.decode(w)).collect();
    let space = FinitePointSpace::new(names.clone()).map_err(InputError::new)?;
    let certificates: Vec<Value> = rel
        .certificates
        .iter()
        .map(|(&(i, j), c)| json!({ "u": names[i], "v": names[j], "positions": c.positions }))
        .collect();
    let undecided: Vec<(String, String)> = rel
        .undecided
        .iter()
        .map(|&(i, j)| (names[i].clone(), names[j].clone()))
        .collect();
    let body = json!({
        "n": rel.n,
        "horizon": rel.horizon,
        "density": rel.density,
        "required_positions": rel.required,
        "node_budget": ev.node_budget,
        "cells": names,
        "lower": rel.lower.named_pairs(&space),
        "upper": rel.upper.named_pairs(&space),
        "certificates": certificates,
        "undecided": undecided,
    });
    let outcome = if rel.undecided.is_empty() { Outcome::Success } else { Outcome::Indeterminate };
    Ok(Report::new(body, outcome))
}

fn cert_verify(file: &Path, budget: usize) -> Result<Report, InputError> {
    positive_budget(budget)?;
    let Instance::Certificate(inst) = load_instance(file)? else {
        return Err(InputError::new("cert verify needs a certificate instance"));
    };
    match &inst {
        CertificateInstance::Interval { space, cert } => {
            verify_report(&interval_domain(space), &SuccExpansion, cert, budget, interval_json)
        }
        CertificateInstance::Relation { space, cert } => {
            verify_report(&relation_domain(space), &GammaOperator, cert, budget, |r| {
                json!(r.named_pairs(space))
            })
        }
    }
}

fn verify_report<D, O>(
    domain: &D,
    op: &O,
    cert: &RankCertificate<D::Elem>,
    budget: usize,
    describe: impl Fn(&D::Elem) -> Value,
) -> Result<Report, InputError>
where
    D: SetDomain,
    O: MonotoneOperator<D>,
{
    let order_type = cert.order.order_type().ok().map(|t| t.to_string());
    let mut body = json!({
        "mode": cert.mode,
        "order_type": order_type,
        "target": describe(&cert.target),
    });
    let verdict = match verify(domain, op, cert) {
        Ok(v) => v,
        Err(CertError::Engine(e)) => return Err(e.into()),
        Err(e) => {
            let extra = json!({ "accepted": false, "reason": e.to_string() });
            return Ok(Report::new(merge(body, extra), Outcome::Rejected));
        }
    };
    if !verdict.accepted {
        let extra = json!({ "accepted": false, "reason": verdict.reason });
        return Ok(Report::new(merge(body, extra), Outcome::Rejected));
    }
    let trace = iterate_steps(domain, op, &cert.target, budget)?;
    let embedding = match extract_embedding(domain, op, cert, &trace) {
        Ok(f) => json!(f.into_iter().map(|(m, a)| (m.to_string(), json!(a.to_string()))).collect::<serde_json::Map<_, _>>()),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let claim = match cert.mode {
        Mode::R => format!("rank >= {}", order_type.clone().unwrap_or_default()),
        Mode::S => format!("rank = {}", order_type.clone().unwrap_or_default()),
    };
    body = merge(body, json!({ "accepted": true, "claim": claim, "embedding": embedding }));
    Ok(Report::new(body, Outcome::Success))
}

fn cert_make(target: &Path, k: u64) -> Result<Report, InputError> {
    let made = match load_instance(target)? {
        Instance::OrdinalSpace(space) => {
            if space.operator != OperatorName::SuccExpansion {
                return Err(InputError::new("certificates need an expansion; use operator succ_expansion"));
            }
            let domain = interval_domain(&space);
            make_certificate(&domain, &SuccExpansion, &space.start_interval(), k).map(|cert| {
                CertificateInstance::Interval {
                    space: space.clone(),
                    cert,
                }
            })
        }
        Instance::FiniteRelation(rel) => {
            let space = rel.space()?;
            let start = rel.relation(&space)?;
            let domain: RelationDomain = relation_domain(&space);
            make_certificate(&domain, &GammaOperator, &start, k)
                .map(|cert| CertificateInstance::Relation { space: space.clone(), cert })
        }
        other => {
            return Err(InputError::new(format!(
                "cert make needs an ordinal_space or finite_relation target, found {}",
                other.type_name()
            )))
        }
    };
    match made {
        Ok(inst) => Ok(Report::new(inst.to_json(), Outcome::Success)),
        Err(CertError::Refused { stage, reason }) => Ok(Report::new(
            json!({ "refused": true, "k": k, "stage": stage.to_string(), "reason": reason }),
            Outcome::Rejected,
        )),
        Err(e) => Err(InputError::new(e)),
    }
}
