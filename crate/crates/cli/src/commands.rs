use anyhow::{anyhow, bail, Context, Result};
use entangle_core::harness::{run_noninvariance_counterexample, run_suite, CheckRecord, Suite, SuiteConfig, DEFAULT_TOLERANCE};
use entangle_core::locc::protocols::{
    bbpssw_round, bbpssw_success_branch, isotropic_state, teleport_dilution, unrotate_distillation, StatePrep,
};
use entangle_core::locc::{apply, GateBudget};
use entangle_core::measures::{counterexample_eta_threshold, p_err_dilute, p_err_distill};
use entangle_core::packing::{greedy_packing, separation_check, MAX_PACKING_M};
use entangle_core::random::{derive_seed, haar_unitary, random_pure, rng_from_seed};
use entangle_core::states::{epr_amplitudes, rotated_epr};
use entangle_core::{BipartiteState, Polynomial};

use crate::report::{emit, render, summarize};
use crate::{Common, CounterexampleArgs, DemoArgs, Format, NetArgs, Outcome, Protocol, VerifyArgs, SEED_ENV};

fn master_seed(common: &Common) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(common.seed),
        Err(e) => Err(anyhow!("{SEED_ENV}: {e}")),
    }
}

/// Parses `a..b` (inclusive), `a`, or `a,b,c`.
pub fn parse_lambdas(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().with_context(|| format!("bad λ range start in {s:?}"))?;
        let b: u32 = b.trim().parse().with_context(|| format!("bad λ range end in {s:?}"))?;
        if a > b {
            bail!("empty λ range {s:?}");
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<u32>().with_context(|| format!("bad λ value {p:?}")))
            .collect::<Result<_>>()?
    };
    if out.contains(&0) {
        bail!("λ must be at least 1");
    }
    Ok(out)
}

fn finish(records: &[CheckRecord], common: &Common) -> Result<Outcome> {
    emit(&render(records, common.format)?, common)?;
    Ok(if summarize(records) { Outcome::Pass } else { Outcome::Fail })
}

fn check_tolerance(t: Option<f64>) -> Result<()> {
    match t {
        Some(t) if !(t.is_finite() && t >= 0.0) => bail!("tolerance must be finite and nonnegative, got {t}"),
        _ => Ok(()),
    }
}

pub fn verify(args: VerifyArgs) -> Result<Outcome> {
    let lambdas = parse_lambdas(&args.lambda)?;
    check_tolerance(args.tolerance)?;
    let suites = args
        .suite
        .iter()
        .map(|s| s.parse::<Suite>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut cfg = SuiteConfig::new(lambdas, master_seed(&args.common)?);
    cfg.tolerance = args.tolerance;

    let mut records = Vec::new();
    if suites.contains(&Suite::All) {
        records = run_suite(Suite::All, &cfg)?;
    } else {
        let mut seen = Vec::new();
        for s in suites {
            if !seen.contains(&s) {
                records.extend(run_suite(s, &cfg)?);
                seen.push(s);
            }
        }
        entangle_core::harness::canonical_sort(&mut records);
    }
    finish(&records, &args.common)
}

pub fn net(args: NetArgs) -> Result<Outcome> {
    if args.common.format != Format::Json {
        bail!("net writes JSON only");
    }
    if args.m > MAX_PACKING_M {
        bail!("m = {} exceeds the supported maximum {MAX_PACKING_M}", args.m);
    }
    let packing = greedy_packing(args.m, args.eta, args.max_rejections, master_seed(&args.common)?)?;
    let separated = separation_check(&packing, args.m);
    let mut bytes = serde_json::to_vec_pretty(&packing.to_json())?;
    bytes.push(b'\n');
    emit(&bytes, &args.common)?;
    eprintln!(
        "packing m={} eta={}: {} members, separation {}",
        args.m,
        args.eta,
        packing.len(),
        if separated { "ok" } else { "VIOLATED" }
    );
    Ok(if separated { Outcome::Pass } else { Outcome::Fail })
}

pub fn counterexample(args: CounterexampleArgs) -> Result<Outcome> {
    if !(0.0..1.0).contains(&args.eps) {
        bail!("eps must lie in [0, 1), got {}", args.eps);
    }
    let seed = master_seed(&args.common)?;
    match counterexample_eta_threshold(args.m, args.eps)? {
        Some(eta) => eprintln!("threshold eta = {eta}"),
        None => eprintln!("threshold eta: none (inconclusive)"),
    }
    let record = run_noninvariance_counterexample(args.m, args.eps, seed)?;
    if let Some(d) = &record.detail {
        eprintln!("{d}");
    }
    eprintln!("verdict: {}", record.status);
    finish(&[record], &args.common)
}

const TELEPORT_BUDGET_PER_PAIR: f64 = 12.0;
/// Schmidt preparation overhead on top of the per-pair cost.
const TELEPORT_BUDGET_PREP: f64 = 4.0;
const BBPSSW_BUDGET: f64 = 16.0;

fn budget_line(name: &str, budget: &GateBudget, gates: usize, lambda: u32) -> bool {
    let ok = budget.allows(lambda, gates);
    eprintln!("{name}: gates={gates} budget={} {}", budget.eval(lambda), if ok { "ok" } else { "EXCEEDED" });
    ok
}

pub fn demo(args: DemoArgs) -> Result<Outcome> {
    check_tolerance(args.tolerance)?;
    let tol = args.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let seed = master_seed(&args.common)?;
    let name = format!("demo-{}", format!("{:?}", args.protocol).to_lowercase());
    let mut rng = rng_from_seed(derive_seed(seed, &[&name, &args.n.to_string()]));
    let n = args.n;
    let lambda = u32::try_from(n).context("n out of range")?;

    let mut records = Vec::new();
    let (gates, budget) = match args.protocol {
        Protocol::Teleport => {
            let psi = random_pure(1 << (2 * n), &mut rng);
            let g = teleport_dilution(&StatePrep::pure(&psi, n, n)?)?;
            let p_err = p_err_dilute(&g, &BipartiteState::from_pure(psi, n, n)?, n)?;
            eprintln!("teleport n={n}: p_err={p_err:e}");
            records.push(CheckRecord::at_most(&name, p_err, 0.0, tol).at_lambda(lambda));
            (g.gate_count(), GateBudget::new(Polynomial::linear(TELEPORT_BUDGET_PREP, TELEPORT_BUDGET_PER_PAIR)))
        }
        Protocol::Unrotate => {
            let u = haar_unitary(1 << n, &mut rng);
            let g = unrotate_distillation(&u, n)?;
            let p_err = p_err_distill(&g, &rotated_epr(&u, n)?, n)?;
            eprintln!("unrotate m={n}: p_err={p_err:e}");
            records.push(CheckRecord::at_most(&name, p_err, 0.0, tol).at_lambda(lambda));
            (g.gate_count(), GateBudget::new(Polynomial::constant(1.0)))
        }
        Protocol::Bbpssw => {
            let pair = isotropic_state(args.fidelity)?;
            let g = bbpssw_round()?;
            let phi = epr_amplitudes(1);
            let f_in = pair.state().expectation(&phi)?;
            let out = apply(&g, &pair.tensor(&pair)?)?;
            let f_avg = out.state().expectation(&phi)?;
            let (p, success) = bbpssw_success_branch(&pair)?;
            let f_out = success.state().expectation(&phi)?;
            eprintln!("bbpssw F={f_in:.6}: p_success={p:.6} F_success={f_out:.6} F_channel={f_avg:.6}");
            records.push(
                CheckRecord::at_most(&name, f_in, f_out, tol)
                    .with_detail(format!("p_success={p:.12} f_channel={f_avg:.12}")),
            );
            (g.gate_count(), GateBudget::new(Polynomial::constant(BBPSSW_BUDGET)))
        }
    };
    let within = budget_line(&name, &budget, gates, lambda);
    let mut r = CheckRecord::at_most(format!("{name}-budget"), gates as f64, budget.eval(lambda), 0.0)
        .with_detail(if within { "within budget" } else { "over budget" });
    if args.protocol != Protocol::Bbpssw {
        r = r.at_lambda(lambda);
    }
    records.push(r);
    finish(&records, &args.common)
}
