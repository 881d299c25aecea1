mod report;

use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use avoidance::bounds::{
    self, feasible_pressure, max_p, max_walkers, taylor_limit, taylor_partial, taylor_tail_bound,
};
use avoidance::exhaustive::verify_lemma_exhaustive;
use avoidance::lp::{self, parse_probability, Probability, Status};
use avoidance::reduction::{check_certificate, reduce_certificate};
use avoidance::sequence::{parse_seq, total_weight, Seq};
use avoidance::sim::{
    self, check_1avoidance, check_walker_avoidance, empirical_stats, encode, faithfulness_tests,
    parse_trace, project, simulate, simulate_walkers, staying_in_waves, AnyTrace, AvoidingWalk,
    CouplingTrace, FaithfulnessParams, Independent, RoundRobin, SingleBernoulli,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use report::{sig12, write_report, Format, Rendered};

#[derive(Parser, Debug)]
#[command(
    name = "avoidance",
    version,
    about = "Avoidance couplings of random walkers: weights, certificates, bounds, simulation, LP probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Output path; `-` or absent writes to stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Neighbor pairs, per-symbol outputs and total weight of a word.
    Weights(SeqInput),
    /// Reduction certificate of a word, checked before it is written.
    Reduce(SeqInput),
    /// Checks weight ≤ blanks on every permissible word up to a length.
    VerifyLemma(VerifyLemmaArgs),
    /// Largest walker count allowed on K_n*.
    Bound(BoundArgs),
    /// Largest p with p(1 − p log p) ≤ 1/k.
    Maxp(MaxpArgs),
    /// Partial sum of the series for −p² log p.
    Taylor(TaylorArgs),
    /// Generates a seeded trace.
    Simulate(SimulateArgs),
    /// Checks a trace for avoidance and, given --p, faithfulness.
    CheckTrace(CheckTraceArgs),
    /// Empirical blank and weight rates of an avoiding trace or word.
    Stats(StatsArgs),
    /// Window relaxation instance in CPLEX LP format.
    LpBuild(LpBuildArgs),
    /// Solves the window relaxation over a grid of p.
    LpScan(LpScanArgs),
}

#[derive(Args, Debug, Serialize)]
struct SeqInput {
    #[arg(long)]
    k: u32,
    /// Word as whitespace-separated tokens, e.g. "1 3 B 2".
    #[arg(long, conflicts_with = "input")]
    seq: Option<String>,
    /// File holding the word; `-` reads stdin.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct VerifyLemmaArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    max_len: usize,
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    #[arg(long)]
    n: u64,
}

#[derive(Args, Debug, Serialize)]
struct MaxpArgs {
    #[arg(long)]
    k: u64,
    #[arg(long, default_value_t = bounds::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct TaylorArgs {
    #[arg(long)]
    p: f64,
    /// Number of series terms.
    #[arg(long = "T", value_parser = parse_count, default_value = "10000")]
    #[serde(rename = "T")]
    terms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PolicyName {
    Bernoulli,
    RoundRobin,
    Independent,
    AvoidingWalk,
    Waves,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    policy: PolicyName,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long)]
    p: Option<f64>,
    /// Vertex count for walker policies.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "T", value_parser = parse_count)]
    #[serde(rename = "T")]
    rounds: u64,
    /// Lets avoiding walkers stay put (K_n* instead of K_n).
    #[arg(long)]
    looped: bool,
}

#[derive(Args, Debug, Serialize)]
struct CheckTraceArgs {
    /// Trace file; `-` reads stdin.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: String,
    /// Claimed occupancy probability; enables faithfulness tests.
    #[arg(long)]
    p: Option<f64>,
    /// Vertex whose occupancy is tested for walker traces.
    #[arg(long, default_value_t = 1)]
    vertex: u32,
}

#[derive(Args, Debug, Serialize)]
struct StatsArgs {
    /// Coupling trace file; `-` reads stdin.
    #[arg(long = "in", conflicts_with = "seq")]
    #[serde(rename = "in")]
    input: Option<String>,
    #[arg(long, requires = "k")]
    seq: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    p: f64,
}

#[derive(Args, Debug, Serialize)]
struct LpBuildArgs {
    #[arg(long)]
    k: u32,
    /// Exact probability, e.g. 0.3 or 1/8.
    #[arg(long)]
    p: String,
    #[arg(long)]
    m: usize,
}

#[derive(Args, Debug, Serialize)]
struct LpScanArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    m: usize,
    /// Comma list (`0.1,1/8,0.51`) or range `start:stop:step`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = lp::DEFAULT_LP_TOL)]
    tol: f64,
}

fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    match text.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("expected a non-negative integer, got {text:?}")),
    }
}

/// A domain or input error: exit code 2.
#[derive(Debug)]
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type Outcome = Result<Rendered, Fail>;

fn read_input(path: &str) -> Result<String, Fail> {
    if path == "-" {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| Fail(format!("{path}: {e}")))
    }
}

fn load_seq(args: &SeqInput) -> Result<Seq, Fail> {
    let text = match (&args.seq, &args.input) {
        (Some(s), _) => s.clone(),
        (None, Some(path)) => read_input(path)?,
        (None, None) => return Err(Fail("one of --seq or --in is required".into())),
    };
    Ok(parse_seq(&text, args.k)?)
}

fn weights(args: &SeqInput) -> Outcome {
    let rep = total_weight(&load_seq(args)?);
    let exit = u8::from(!rep.within_blank_budget());
    Ok(Rendered::new(&rep).exit(exit))
}

fn reduce(args: &SeqInput) -> Outcome {
    let s = load_seq(args)?;
    let cert = reduce_certificate(&s)?;
    let checked = check_certificate(&cert);
    let text = cert.to_text();
    let report = json!({
        "certificate": cert,
        "checked": checked.is_ok(),
        "proof": checked.as_ref().ok(),
        "failure": checked.as_ref().err().map(|f| f.to_string()),
    });
    Ok(Rendered {
        report,
        text: Some(text),
        csv: None,
        exit: u8::from(checked.is_err()),
    })
}

fn verify_lemma(args: &VerifyLemmaArgs) -> Outcome {
    let rep = verify_lemma_exhaustive(args.k, args.max_len)?;
    let exit = u8::from(!rep.passed());
    Ok(Rendered::new(&rep).exit(exit))
}

fn bound(args: &BoundArgs) -> Outcome {
    let rep = max_walkers(args.n)?;
    Ok(Rendered::new(&rep)
        .text(format!("{}\n", rep.max_walkers))
        .csv(vec![
            vec!["n".into(), "max_walkers".into()],
            vec![rep.n.to_string(), rep.max_walkers.to_string()],
        ]))
}

fn maxp(args: &MaxpArgs) -> Outcome {
    let root = max_p(args.k, args.tol)?;
    let report = json!({
        "k": args.k,
        "max_p": root.value,
        "pressure": feasible_pressure(root.value)?,
        "target": 1.0 / args.k as f64,
        "residual": root.residual,
        "iterations": root.iterations,
    });
    Ok(Rendered {
        text: Some(format!("{}\n", sig12(root.value))),
        csv: Some(vec![
            vec!["k".into(), "max_p".into()],
            vec![args.k.to_string(), sig12(root.value)],
        ]),
        report,
        exit: 0,
    })
}

fn taylor(args: &TaylorArgs) -> Outcome {
    let partial = taylor_partial(args.p, args.terms)?;
    let limit = taylor_limit(args.p);
    let report = json!({
        "p": args.p,
        "terms": args.terms,
        "partial": partial,
        "limit": limit,
        "error": (partial - limit).abs(),
        "tail_bound": taylor_tail_bound(args.p, args.terms),
    });
    Ok(Rendered {
        text: Some(format!("{}\n", sig12(partial))),
        csv: Some(vec![
            vec!["p".into(), "terms".into(), "partial".into(), "limit".into()],
            vec![
                sig12(args.p),
                args.terms.to_string(),
                sig12(partial),
                sig12(limit),
            ],
        ]),
        report,
        exit: 0,
    })
}

fn need<T: Copy>(v: Option<T>, flag: &str, policy: PolicyName) -> Result<T, Fail> {
    v.ok_or_else(|| Fail(format!("--{flag} is required for policy {policy:?}")))
}

fn simulate_cmd(args: &SimulateArgs, seed: u64) -> Outcome {
    let rounds = usize::try_from(args.rounds).map_err(|_| Fail("--T too large".into()))?;
    let text = match args.policy {
        PolicyName::Bernoulli => {
            if args.k != 1 {
                return Err(Fail("policy bernoulli has exactly one walker".into()));
            }
            let p = need(args.p, "p", args.policy)?;
            simulate(&mut SingleBernoulli::new(p)?, rounds, seed).to_text()
        }
        PolicyName::RoundRobin => simulate(&mut RoundRobin::new(args.k)?, rounds, seed).to_text(),
        PolicyName::Independent => {
            let p = need(args.p, "p", args.policy)?;
            simulate(&mut Independent::new(args.k, p)?, rounds, seed).to_text()
        }
        PolicyName::AvoidingWalk => {
            let n = need(args.n, "n", args.policy)?;
            simulate_walkers(
                &mut AvoidingWalk::new(n, args.k, args.looped)?,
                rounds,
                seed,
            )
            .to_text()
        }
        PolicyName::Waves => {
            let n = need(args.n, "n", args.policy)?;
            let mut policy = staying_in_waves(AvoidingWalk::new(n, args.k, false)?, n)?;
            simulate_walkers(&mut policy, rounds, seed).to_text()
        }
    };
    let report = json!({ "policy": args.policy, "rounds": rounds, "trace": text });
    Ok(Rendered {
        report,
        csv: Some(trace_csv(&text)),
        text: Some(text),
        exit: 0,
    })
}

fn trace_csv(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    let k: usize = header.get(1).and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut rows = vec![std::iter::once("t".to_string())
        .chain((1..=k).map(|i| format!("w{i}")))
        .collect()];
    for (idx, line) in lines.enumerate() {
        rows.push(
            std::iter::once((idx + 1).to_string())
                .chain(line.split_whitespace().map(str::to_string))
                .collect(),
        );
    }
    rows
}

#[derive(Serialize)]
struct CheckReport {
    kind: &'static str,
    passed: bool,
    avoidance: sim::ViolationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection: Option<sim::ViolationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    faithfulness: Option<sim::TestReport>,
}

fn check_text(rep: &CheckReport) -> String {
    if rep.passed {
        return "OK\n".into();
    }
    let mut out = String::new();
    for (label, v) in [
        ("avoidance", Some(&rep.avoidance)),
        ("projection", rep.projection.as_ref()),
    ] {
        let Some(v) = v else { continue };
        if v.total > 0 {
            out.push_str(&format!("{label}: {} violations\n", v.total));
            for viol in v.violations.iter().take(20) {
                out.push_str(&format!(
                    "  {}\n",
                    serde_json::to_string(viol).expect("violation serializes")
                ));
            }
        }
    }
    if let Some(f) = &rep.faithfulness {
        for (walker, t) in f.failures() {
            out.push_str(&format!(
                "faithfulness: walker {walker} {} statistic {} threshold {}\n",
                t.name,
                sig12(t.statistic),
                sig12(t.threshold)
            ));
        }
    }
    out
}

fn check_trace(args: &CheckTraceArgs) -> Outcome {
    let trace = parse_trace(&read_input(&args.input)?)?;
    let faith = |tr: &CouplingTrace| -> Result<Option<sim::TestReport>, Fail> {
        match args.p {
            Some(p) => Ok(Some(faithfulness_tests(
                tr,
                p,
                &FaithfulnessParams::default(),
            )?)),
            None => Ok(None),
        }
    };
    let rep = match &trace {
        AnyTrace::Coupling(tr) => {
            let avoidance = check_1avoidance(tr);
            let faithfulness = faith(tr)?;
            CheckReport {
                kind: "coupling",
                passed: avoidance.passed() && faithfulness.as_ref().is_none_or(|f| f.passed),
                avoidance,
                projection: None,
                faithfulness,
            }
        }
        AnyTrace::Walker(tr) => {
            let avoidance = check_walker_avoidance(tr);
            let projected = project(tr, args.vertex)?;
            let projection = check_1avoidance(&projected);
            let faithfulness = faith(&projected)?;
            CheckReport {
                kind: "walker",
                passed: avoidance.passed()
                    && projection.passed()
                    && faithfulness.as_ref().is_none_or(|f| f.passed),
                avoidance,
                projection: Some(projection),
                faithfulness,
            }
        }
    };
    let exit = u8::from(!rep.passed);
    Ok(Rendered::new(&rep).text(check_text(&rep)).exit(exit))
}

fn stats(args: &StatsArgs) -> Outcome {
    let (s, k) = match (&args.input, &args.seq, args.k) {
        (Some(path), _, _) => match parse_trace(&read_input(path)?)? {
            AnyTrace::Coupling(tr) => {
                let k = tr.k();
                (encode(&tr)?, k)
            }
            AnyTrace::Walker(_) => {
                return Err(Fail(
                    "stats needs a coupling trace; project walker traces first".into(),
                ))
            }
        },
        (None, Some(text), Some(k)) => (parse_seq(text, k)?, k),
        _ => return Err(Fail("one of --in or --seq (with --k) is required".into())),
    };
    if !(args.p > 0.0 && args.p < 1.0) {
        return Err(Fail(format!("p must lie in (0, 1), got {}", args.p)));
    }
    Ok(Rendered::new(&empirical_stats(&s, args.p, k)))
}

fn lp_build(args: &LpBuildArgs) -> Outcome {
    let p = parse_probability(&args.p)?;
    let inst = lp::build_window_lp(args.k, p, args.m)?;
    let text = inst.to_lp_format();
    let report = json!({
        "k": args.k,
        "p": format!("{}/{}", p.numer(), p.denom()),
        "m": args.m,
        "variables": inst.num_variables(),
        "forbidden": inst.forbidden().iter().filter(|&&b| b).count(),
        "rows": inst.rows().len(),
        "lp": text,
    });
    Ok(Rendered {
        report,
        text: Some(text),
        csv: None,
        exit: 0,
    })
}

fn parse_grid(text: &str) -> Result<Vec<Probability>, Fail> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(parse_probability(single)?),
            [start, stop, step] => {
                let (start, stop, step) = (
                    parse_probability(start)?,
                    parse_probability(stop)?,
                    parse_probability(step)?,
                );
                if step <= Ratio::from_integer(0) {
                    return Err(Fail("grid step must be positive".into()));
                }
                let mut p = start;
                while p <= stop {
                    out.push(p);
                    p += step;
                }
            }
            _ => return Err(Fail(format!("bad grid item {item:?}"))),
        }
    }
    Ok(out)
}

fn lp_scan(args: &LpScanArgs) -> Outcome {
    let grid = parse_grid(&args.grid)?;
    if grid.is_empty() {
        return Err(Fail("empty grid".into()));
    }
    let rep = lp::scan_p(args.k, args.m, &grid, args.tol)?;
    let mut rows = vec![[
        "p",
        "status",
        "analytic_maxp_verdict",
        "trivial_verdict",
        "phase_one_gap",
        "residual",
    ]
    .map(String::from)
    .to_vec()];
    let mut text = format!(
        "k {} m {} analytic_max_p {}\n",
        rep.k,
        rep.m,
        sig12(rep.analytic_max_p)
    );
    for pt in &rep.points {
        rows.push(vec![
            sig12(pt.p),
            pt.status.as_str().into(),
            pt.analytic_maxp_verdict.to_string(),
            pt.trivial_verdict.to_string(),
            sig12(pt.phase_one_gap),
            pt.residual.map(sig12).unwrap_or_default(),
        ]);
        text.push_str(&format!(
            "{} {} {}\n",
            pt.p_exact,
            sig12(pt.p),
            pt.status.as_str()
        ));
    }
    let exit = u8::from(rep.points.iter().any(|pt| pt.status == Status::Infeasible));
    Ok(Rendered::new(&rep).text(text).csv(rows).exit(exit))
}

fn flags_of<T: Serialize>(common: &Common, args: &T) -> Value {
    let mut flags = serde_json::to_value(args).expect("flags serialize");
    if let (Value::Object(map), Value::Object(shared)) = (
        &mut flags,
        serde_json::to_value(common).expect("flags serialize"),
    ) {
        map.extend(shared);
    }
    flags
}

fn run(cli: &Cli) -> Result<(String, Value, Rendered), Fail> {
    let c = &cli.common;
    let (name, flags, outcome) = match &cli.command {
        Command::Weights(a) => ("weights", flags_of(c, a), weights(a)),
        Command::Reduce(a) => ("reduce", flags_of(c, a), reduce(a)),
        Command::VerifyLemma(a) => ("verify-lemma", flags_of(c, a), verify_lemma(a)),
        Command::Bound(a) => ("bound", flags_of(c, a), bound(a)),
        Command::Maxp(a) => ("maxp", flags_of(c, a), maxp(a)),
        Command::Taylor(a) => ("taylor", flags_of(c, a), taylor(a)),
        Command::Simulate(a) => ("simulate", flags_of(c, a), simulate_cmd(a, c.seed)),
        Command::CheckTrace(a) => ("check-trace", flags_of(c, a), check_trace(a)),
        Command::Stats(a) => ("stats", flags_of(c, a), stats(a)),
        Command::LpBuild(a) => ("lp-build", flags_of(c, a), lp_build(a)),
        Command::LpScan(a) => ("lp-scan", flags_of(c, a), lp_scan(a)),
    };
    Ok((name.to_string(), flags, outcome?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.common.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let (name, flags, rendered) = match run(&cli) {
        Ok(v) => v,
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let bytes = write_report(&name, &flags, cli.common.seed, &rendered, cli.common.format);
    let written = match cli.common.out.as_deref() {
        None | Some("-") => io::stdout().lock().write_all(bytes.as_bytes()),
        Some(path) => fs::write(path, bytes),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(rendered.exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.1:0.5:0.1").unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], Ratio::new(1, 2));
        let g = parse_grid("1/8,0.51").unwrap();
        assert_eq!(g, vec![Ratio::new(1, 8), Ratio::new(51, 100)]);
        assert!(parse_grid("0.1:0.5:0").is_err());
        assert_eq!(parse_grid("0.1:0.5:0.1,0.51").unwrap().len(), 6);
    }
}
