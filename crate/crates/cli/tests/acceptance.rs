//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use avoidance::bounds::{feasible_pressure, max_p, max_walkers, taylor_partial, DEFAULT_TOL};
use avoidance::exhaustive::{permissible_words, verify_lemma_exhaustive};
use avoidance::lp::{build_window_lp, marginalize, solve_feasibility, Status, DEFAULT_LP_TOL};
use avoidance::reduction::{
    check_certificate, reduce_certificate, Edit, ReductionCertificate, Rule,
};
use avoidance::sequence::{neighbor_pairs, parse_seq, total_weight, Seq, Symbol, Weight};
use avoidance::sim::{
    check_1avoidance, check_walker_avoidance, empirical_stats, encode, faithfulness_tests,
    gap_chi_square, project, simulate, simulate_walkers, staying_in_waves, AvoidingWalk,
    FaithfulnessParams, Independent, RoundRobin, SingleBernoulli,
};
use num_rational::Ratio;
use num_traits::{One, Zero};

const SEED: u64 = 1;
const EXAMPLE: &str = "1 3 B 2 3 3 B 3 B 1 B 2 B 1 3";
const CORPUS: [(u32, usize); 3] = [(1, 10), (2, 9), (3, 7)];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(
        elapsed < limit,
        format!("took {elapsed:?}, limit {limit:?}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_avoidance")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir.join(name)
}

fn example_weights() -> Check {
    let s = parse_seq(EXAMPLE, 3).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rep = total_weight(&s);
    let elapsed = start.elapsed();
    let w3: Vec<Weight> = neighbor_pairs(&s)
        .into_iter()
        .filter(|p| p.symbol == 3)
        .map(|p| p.weight)
        .collect();
    let expected = [
        Ratio::new(1, 2),
        Ratio::zero(),
        Ratio::one(),
        Ratio::new(1, 3),
    ];
    ensure(w3 == expected, format!("symbol-3 weights {w3:?}"))?;
    ensure(
        rep.total == Ratio::from_integer(3),
        format!("total {}", rep.total),
    )?;
    ensure(rep.blanks == 5, format!("blanks {}", rep.blanks))?;
    ensure(rep.within_blank_budget(), "3 > 5")?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!(
        "weights 1/2 0 1 1/3, total 3 <= 5 blanks in {elapsed:?}"
    ))
}

fn exhaustive_lemma() -> Check {
    let start = Instant::now();
    let mut words = 0;
    for (k, max_len) in CORPUS {
        let rep = verify_lemma_exhaustive(k, max_len).map_err(|e| e.to_string())?;
        ensure(
            rep.counterexample_count == 0,
            format!("k={k}: counterexamples {:?}", rep.counterexamples),
        )?;
        ensure(rep.passed(), format!("k={k}: report failed"))?;
        words += rep.sequences;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{words} permissible words, 0 counterexamples in {elapsed:?}"
    ))
}

/// Each mutation of a valid certificate must be rejected by the checker.
fn mutations(c: &ReductionCertificate) -> Vec<(&'static str, ReductionCertificate)> {
    let mut out = Vec::new();
    for (idx, step) in c.steps.iter().enumerate() {
        let mut m = c.clone();
        m.steps[idx].weight_delta += Ratio::new(1, 7);
        out.push(("weight delta", m));
        let mut m = c.clone();
        m.steps[idx].blank_delta -= 1;
        out.push(("blank delta", m));
        if let Some(red) = &step.redistribution {
            if let Some(pos) = red.donations.iter().position(|d| !d.amount.is_zero()) {
                let mut m = c.clone();
                let r = m.steps[idx].redistribution.as_mut().unwrap();
                r.donations[pos].amount += Ratio::new(1, 5);
                out.push(("donation", m));
            }
            let mut m = c.clone();
            let present: Vec<u32> = step
                .before
                .symbols()
                .iter()
                .filter_map(|s| s.walker())
                .collect();
            if let Edit::Victim(j) = step.edit {
                if let Some(&other) = present.iter().find(|&&x| x != j) {
                    m.steps[idx].edit = Edit::Victim(other);
                    out.push(("victim swap", m));
                }
            }
        }
    }
    let mut m = c.clone();
    let mut syms = m.final_seq.symbols().to_vec();
    syms.push(Symbol::Blank);
    m.final_seq = Seq::new(m.final_seq.k(), syms).unwrap();
    out.push(("final word", m));
    out
}

fn certificate_soundness() -> Check {
    let mut certs = 0u64;
    let mut victim_steps = 0u64;
    let mut tampered = 0u64;
    for (k, max_len) in CORPUS {
        for s in permissible_words(k, max_len) {
            let c = reduce_certificate(&s).map_err(|e| format!("{s}: {e}"))?;
            let proof = check_certificate(&c).map_err(|e| format!("{s}: {e}"))?;
            let direct = total_weight(&s);
            ensure(
                proof.total == direct.total && proof.blanks == direct.blanks,
                format!("{s}: proof mismatch"),
            )?;
            for step in c
                .steps
                .iter()
                .filter(|st| st.rule == Rule::DeleteVictimSymbol)
            {
                let red = step
                    .redistribution
                    .as_ref()
                    .ok_or("victim step without redistribution")?;
                let w = total_weight(&step.before).total;
                ensure(
                    red.input_total() == w && red.output_total() == w,
                    format!("{}: redistribution not conservative", step.before),
                )?;
                ensure(
                    red.admissible_victims().next().is_some(),
                    format!("{}: no victim", step.before),
                )?;
                victim_steps += 1;
            }
            certs += 1;
            // mutation-test one in 97 certificates to keep the run short
            if certs % 97 == 1 && !c.steps.is_empty() {
                for (kind, m) in mutations(&c) {
                    ensure(
                        check_certificate(&m).is_err(),
                        format!("{s}: tampered {kind} accepted"),
                    )?;
                    tampered += 1;
                }
            }
        }
    }
    Ok(format!(
        "{certs} certificates checked, {victim_steps} redistributions conservative, {tampered} tampered certificates rejected"
    ))
}

fn bounds() -> Check {
    let start = Instant::now();
    let b21 = max_walkers(21).map_err(|e| e.to_string())?;
    ensure(
        b21.max_walkers == 18,
        format!("max_walkers(21) = {}", b21.max_walkers),
    )?;
    for n in 21..=1_000_000u64 {
        let b = max_walkers(n).map_err(|e| e.to_string())?;
        ensure(
            b.max_walkers < n - 2,
            format!("max_walkers({n}) = {}", b.max_walkers),
        )?;
    }
    let root = max_p(2, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let pressure = feasible_pressure(root.value).map_err(|e| e.to_string())?;
    ensure(
        (pressure - 0.5).abs() < 1e-9,
        format!("pressure {pressure}"),
    )?;
    ensure(
        root.value > 0.365 && root.value < 0.366,
        format!("max_p(2) = {}", root.value),
    )?;
    let mut worst = 0f64;
    for i in 1..=9 {
        let p = f64::from(i) / 10.0;
        let err = (taylor_partial(p, 10_000).map_err(|e| e.to_string())? + p * p * p.ln()).abs();
        worst = worst.max(err);
    }
    ensure(worst < 1e-6, format!("taylor error {worst}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "max_walkers(21) = 18, max_p(2) = {:.9}, taylor error {worst:.1e} in {elapsed:?}",
        root.value
    ))
}

fn simulator_statistics() -> Check {
    let start = Instant::now();
    let p = 0.3;
    let tr = simulate(&mut SingleBernoulli::new(p).unwrap(), 1_000_000, SEED);
    let s = encode(&tr).map_err(|e| e.to_string())?;
    let st = empirical_stats(&s, p, 1);
    let sigma = (p * (1.0 - p) / 1e6).sqrt();
    ensure(
        (st.blank_rate - 0.7).abs() <= 3.0 * sigma,
        format!("blank_rate {}", st.blank_rate),
    )?;
    let rate = st.walkers[0].weight_rate;
    ensure((rate - 0.21).abs() <= 0.005, format!("weight_rate {rate}"))?;
    let chi = gap_chi_square(&st.walkers[0].gap_histogram, p);
    ensure(
        chi.p_value > 1e-3,
        format!("gap chi-square p-value {}", chi.p_value),
    )?;
    ensure(
        rate >= -p * p * p.ln(),
        format!("weight_rate {rate} below floor"),
    )?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "blank_rate {:.6}, weight_rate {rate:.6}, gap p-value {:.3} in {elapsed:?}",
        st.blank_rate, chi.p_value
    ))
}

fn negative_controls() -> Check {
    let t = 100_000usize;
    let tr = simulate(&mut Independent::new(2, 0.3).unwrap(), t, SEED);
    let rep = check_1avoidance(&tr);
    let freq = rep.simultaneous as f64 / t as f64;
    let sigma = (0.09f64 * 0.91 / t as f64).sqrt();
    ensure(
        (freq - 0.09).abs() <= 3.0 * sigma,
        format!("simultaneous frequency {freq}"),
    )?;

    let rr = simulate(&mut RoundRobin::new(2).unwrap(), 10_000, SEED);
    let faith =
        faithfulness_tests(&rr, 0.5, &FaithfulnessParams::default()).map_err(|e| e.to_string())?;
    ensure(
        faith
            .failures()
            .any(|(_, o)| o.name == "autocorrelation_lag_1"),
        "round robin passed lag-1",
    )?;

    let ind = scratch("independent.txt");
    let rrp = scratch("round_robin.txt");
    let ind_s = ind.to_str().unwrap();
    let rr_s = rrp.to_str().unwrap();
    let seed = SEED.to_string();
    for args in [
        vec![
            "simulate",
            "--policy",
            "independent",
            "--k",
            "2",
            "--p",
            "0.3",
            "--T",
            "1e5",
            "--seed",
            &seed,
            "--out",
            ind_s,
        ],
        vec![
            "simulate",
            "--policy",
            "round-robin",
            "--k",
            "2",
            "--T",
            "1e4",
            "--seed",
            &seed,
            "--out",
            rr_s,
        ],
    ] {
        let out = run(&args);
        ensure(
            out.status.code() == Some(0),
            format!("{args:?} exited {:?}", out.status.code()),
        )?;
    }
    let a = run(&["check-trace", "--in", ind_s]).status.code();
    let b = run(&["check-trace", "--in", rr_s, "--p", "0.5"])
        .status
        .code();
    ensure(
        a == Some(1) && b == Some(1),
        format!("exit codes {a:?}, {b:?}"),
    )?;
    Ok(format!(
        "simultaneous frequency {freq:.5}, round robin fails lag 1, both exit 1"
    ))
}

fn projection_and_waves() -> Check {
    let mut traces = 0;
    for i in 0..1000u64 {
        let n = 3 + (i % 6) as u32;
        let looped = i % 2 == 0;
        let max_k = if looped { n } else { n - 1 };
        let k = 1 + (i / 12 % u64::from(max_k)) as u32;
        let tr = simulate_walkers(&mut AvoidingWalk::new(n, k, looped).unwrap(), 100, SEED + i);
        ensure(
            check_walker_avoidance(&tr).passed(),
            format!("trace {i} collides"),
        )?;
        let proj = project(&tr, 1).map_err(|e| format!("trace {i}: {e}"))?;
        ensure(
            check_1avoidance(&proj).passed(),
            format!("projection {i} collides"),
        )?;
        let s = encode(&proj).map_err(|e| format!("trace {i}: {e}"))?;
        ensure(
            avoidance::sequence::is_permissible(&s),
            format!("encoding {i} not permissible"),
        )?;
        traces += 1;
    }
    let t = 1_000_000usize;
    let mut policy =
        staying_in_waves(AvoidingWalk::new(5, 1, false).unwrap(), 5).map_err(|e| e.to_string())?;
    let tr = simulate_walkers(&mut policy, t, SEED);
    let mut counts = [0u64; 5];
    for row in tr.rows() {
        counts[row[0] as usize - 1] += 1;
    }
    let sigma = (0.2f64 * 0.8 / t as f64).sqrt();
    let worst = counts
        .iter()
        .map(|&c| ((c as f64 / t as f64) - 0.2).abs() / sigma)
        .fold(0f64, f64::max);
    ensure(
        worst <= 4.0,
        format!("position frequency off by {worst:.2} sigma"),
    )?;
    Ok(format!(
        "{traces} projections avoiding, waves frequencies within {worst:.2} sigma"
    ))
}

fn lp_relaxation() -> Check {
    let start = Instant::now();
    let ratio = |n, d| Ratio::new(n, d);
    let lp1 = build_window_lp(1, ratio(3, 10), 3).map_err(|e| e.to_string())?;
    let r1 = solve_feasibility(&lp1, DEFAULT_LP_TOL).map_err(|e| e.to_string())?;
    ensure(
        r1.status == Status::Feasible,
        format!("k=1 p=0.3 m=3: {:?}", r1.status),
    )?;
    ensure(
        lp1.residual_exact(&lp1.product_witness())
            .map_err(|e| e.to_string())?
            .is_zero(),
        "product witness inexact",
    )?;

    let lp2 = build_window_lp(2, ratio(51, 100), 1).map_err(|e| e.to_string())?;
    let r2 = solve_feasibility(&lp2, DEFAULT_LP_TOL).map_err(|e| e.to_string())?;
    ensure(
        r2.status == Status::Infeasible,
        format!("k=2 p=0.51 m=1: {:?}", r2.status),
    )?;

    let lp3 = build_window_lp(2, ratio(1, 8), 3).map_err(|e| e.to_string())?;
    let r3 = solve_feasibility(&lp3, DEFAULT_LP_TOL).map_err(|e| e.to_string())?;
    ensure(
        r3.status == Status::Feasible,
        format!("k=2 p=1/8 m=3: {:?}", r3.status),
    )?;

    let mut nested = 0;
    for (lp, res) in [(&lp1, &r1), (&lp3, &r3)] {
        let small = build_window_lp(lp.k(), lp.p(), 2).map_err(|e| e.to_string())?;
        let marg = marginalize(lp, res.witness.as_ref().ok_or("feasible without witness")?);
        let resid = small.residual_of_float(&marg).map_err(|e| e.to_string())?;
        ensure(
            resid <= DEFAULT_LP_TOL * 10.0,
            format!("marginal residual {resid}"),
        )?;
        nested += 1;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "feasible/infeasible/feasible as required, gap at p=0.51 {:.3}, {nested} marginals nest in {elapsed:?}",
        r2.phase_one_gap
    ))
}

fn reproducibility() -> Check {
    let trace = scratch("repro_trace.txt");
    let trace_s = trace.to_str().unwrap();
    let prep = run(&[
        "simulate",
        "--policy",
        "bernoulli",
        "--p",
        "0.3",
        "--T",
        "20000",
        "--seed",
        "9",
        "--out",
        trace_s,
    ]);
    ensure(prep.status.code() == Some(0), "simulate failed")?;
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--policy",
            "bernoulli",
            "--p",
            "0.3",
            "--T",
            "5000",
            "--seed",
            "42",
        ],
        vec![
            "simulate",
            "--policy",
            "avoiding-walk",
            "--n",
            "6",
            "--k",
            "3",
            "--T",
            "2000",
            "--seed",
            "42",
            "--format",
            "json",
        ],
        vec![
            "simulate", "--policy", "waves", "--n", "5", "--k", "2", "--T", "2000", "--seed", "7",
            "--format", "csv",
        ],
        vec!["stats", "--in", trace_s, "--p", "0.3", "--format", "json"],
        vec![
            "check-trace",
            "--in",
            trace_s,
            "--p",
            "0.3",
            "--format",
            "json",
        ],
        vec![
            "verify-lemma",
            "--k",
            "2",
            "--max-len",
            "7",
            "--format",
            "json",
        ],
        vec![
            "verify-lemma",
            "--k",
            "2",
            "--max-len",
            "7",
            "--format",
            "json",
            "--jobs",
            "1",
        ],
        vec!["reduce", "--k", "3", "--seq", EXAMPLE],
        vec!["weights", "--k", "3", "--seq", EXAMPLE, "--format", "csv"],
        vec![
            "lp-scan",
            "--k",
            "2",
            "--m",
            "3",
            "--grid",
            "0.05:0.5:0.05",
            "--format",
            "json",
        ],
        vec!["lp-build", "--k", "2", "--p", "1/8", "--m", "3"],
        vec!["maxp", "--k", "3", "--format", "json"],
    ];
    for args in &invocations {
        let a = run(args);
        let b = run(args);
        ensure(
            a.status.code() == b.status.code(),
            format!("{args:?}: exit codes differ"),
        )?;
        ensure(!a.stdout.is_empty(), format!("{args:?}: no output"))?;
        ensure(a.stdout == b.stdout, format!("{args:?}: outputs differ"))?;
    }
    let a = run(&[
        "simulate",
        "--policy",
        "bernoulli",
        "--p",
        "0.3",
        "--T",
        "5000",
        "--seed",
        "42",
    ]);
    let b = run(&[
        "simulate",
        "--policy",
        "bernoulli",
        "--p",
        "0.3",
        "--T",
        "5000",
        "--seed",
        "43",
    ]);
    ensure(a.stdout != b.stdout, "different seeds gave the same trace")?;
    let json = String::from_utf8_lossy(&run(&invocations[1]).stdout).into_owned();
    ensure(json.contains("\"seed\": 42"), "seed missing from report")?;
    Ok(format!(
        "{} invocations byte-identical across runs",
        invocations.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("worked example weights", example_weights),
        ("exhaustive lemma verification", exhaustive_lemma),
        ("certificate soundness", certificate_soundness),
        ("bounds", bounds),
        ("simulator statistics", simulator_statistics),
        ("negative controls", negative_controls),
        ("projection and staying in waves", projection_and_waves),
        ("window LP relaxation", lp_relaxation),
        ("CLI reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", idx + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", idx + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
