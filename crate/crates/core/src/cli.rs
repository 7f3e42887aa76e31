//! Command-line entry point: argument parsing, orchestration of the
//! verification stages, and report output in plain text or JSON.
//!
//! Exit codes separate "the math came out wrong" from "the run broke":
//! 0 means verified, 1 means a mathematical verdict failed, 2 means an
//! operational error (bad input, cap exceeded, I/O).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grpstore::{conjugacy_classes, GroupStore, DEFAULT_CAP};
use crate::invcount::{find_sl3_counterexample, verify_theorem_level, RestrictionReport};
use crate::pipeline::{run_pipeline, verify_step1_identities, InvariantWitness};
use crate::report::{aligned, Report};
use crate::reps::rep_from_descriptor;
use crate::strongconv::{gap_report, std_generators, GapReport};
use crate::tolerances;

const EXIT_VERIFIED: i32 = 0;
const EXIT_VERDICT: i32 = 1;
const EXIT_OPERATIONAL: i32 = 2;

#[derive(Parser)]
#[command(name = "slinv", version, about = "Invariant-vector verification for special linear groups over Z/N", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Enumeration cap on group size.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Seed for the randomized eigenspace splits; recorded in every report.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Emit the machine report as JSON instead of a text summary.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verification stage end to end.
    VerifyAll {
        #[command(flatten)]
        common: Common,
        /// Highest trace-moment index for the norm-gap stage.
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Compute and export a fully checked character table.
    Chartab {
        #[command(flatten)]
        common: Common,
        /// Group spec, e.g. SL3:2 or SL4:2.
        #[arg(long)]
        group: String,
        /// Directory for the CSV and JSON table files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check that every irreducible of SL4(Z/N) has a block-invariant vector.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Permit the 12-million-element enumeration of SL4(Z/3).
        #[arg(long)]
        stretch_sl4_mod3: bool,
    },
    /// Hunt for irreducibles of SL3(Z/p) with no block-invariant vector.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: u32,
    },
    /// Construct an explicit invariant vector for one representation.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Representation descriptor as JSON; defaults to the standard
        /// representation for the level.
        #[arg(long)]
        rep: Option<String>,
    },
    /// Trace-moment lower bounds against finite-quotient norms.
    Strongconv {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        /// Representation descriptors as JSON (repeatable).
        #[arg(long)]
        rep: Vec<String>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate a group and write its binary element cache.
    Cache {
        #[command(flatten)]
        common: Common,
        /// Group spec, e.g. SL3:2 or SL4:2.
        #[arg(long)]
        group: String,
        /// Cache file path.
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the same channel
            let _ = e.print();
            return if e.use_stderr() { EXIT_OPERATIONAL } else { EXIT_VERIFIED };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::VerdictFailed(_) => EXIT_VERDICT,
                _ => EXIT_OPERATIONAL,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::VerifyAll { common, nmax } => cmd_verify_all(&common, nmax),
        Command::Chartab { common, group, out } => cmd_chartab(&common, &group, &out),
        Command::Invariants { common, level, stretch_sl4_mod3 } => {
            cmd_invariants(&common, level, stretch_sl4_mod3)
        }
        Command::Counterexample { common, level } => cmd_counterexample(&common, level),
        Command::Pipeline { common, level, rep } => cmd_pipeline(&common, level, rep.as_deref()),
        Command::Strongconv { common, nmax, rep, out } => {
            cmd_strongconv(&common, nmax, &rep, out.as_deref())
        }
        Command::Cache { common, group, out } => cmd_cache(&common, &group, &out),
    }
}

fn parse_group_spec(spec: &str) -> Result<(usize, u32)> {
    let bad = || {
        Error::BadGroupSpec(format!(
            "expected SL<n>:<modulus> with n in 2..=4 and modulus >= 2 (e.g. SL3:2), got {spec:?}"
        ))
    };
    let rest = spec.strip_prefix("SL").ok_or_else(bad)?;
    let (n, modulus) = rest.split_once(':').ok_or_else(bad)?;
    let n: usize = n.parse().map_err(|_| bad())?;
    let modulus: u32 = modulus.parse().map_err(|_| bad())?;
    if !(2..=4).contains(&n) || modulus < 2 {
        return Err(bad());
    }
    Ok((n, modulus))
}

fn parse_descriptor(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| Error::BadDescriptor(format!("descriptor is not valid JSON: {e}")))
}

fn default_descriptor(level: u32) -> Value {
    if level == 2 {
        json!({"type": "perm", "space": "nonzero:Z2^4", "level": 2})
    } else {
        json!({"type": "perm", "space": format!("Z{level}^4"), "level": level})
    }
}

fn restriction_lines(report: &RestrictionReport) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("group".to_string(), format!("{} (order {})", report.group, report.group_order)),
        ("subgroup".to_string(), format!("{} (order {})", report.subgroup, report.subgroup_order)),
        ("field".to_string(), format!("l = {}, exponent {}", report.ell, report.exponent)),
    ];
    for row in &report.rows {
        pairs.push((
            format!("degree {}", row.degree),
            format!("multiplicity {} ({})", row.multiplicity, row.verdict),
        ));
    }
    pairs.push(("verdict".to_string(), report.verdict.clone()));
    pairs
}

fn witness_lines(witness: &InvariantWitness) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("level".to_string(), witness.level.to_string()),
        ("rep".to_string(), witness.rep.to_string()),
        ("case".to_string(), witness.case.clone()),
        ("residual".to_string(), format!("{:.3e}", witness.residual)),
    ];
    if let Some(d) = witness.dim_w {
        pairs.push(("dim W".to_string(), d.to_string()));
    }
    if witness.fallback {
        pairs.push(("fallback".to_string(), "averaging-oracle vector".to_string()));
    }
    pairs
}

fn witness_verified(witness: &InvariantWitness) -> bool {
    witness.residual <= tolerances::RESIDUAL
}

fn gap_lines(report: &GapReport) -> Vec<(String, String)> {
    let (s, t) = std_generators();
    let mut pairs = vec![
        ("generators".to_string(), format!("S = {:?}, T = {:?} (row-major)", s.0, t.0)),
        ("moments".to_string(), format!("{:?}", report.moments.a)),
        (
            "lower bounds".to_string(),
            report
                .moments
                .b
                .iter()
                .map(|b| format!("{b:.4}"))
                .collect::<Vec<_>>()
                .join(" "),
        ),
        ("final bound".to_string(), format!("{:.6} (plateau step {:.4})", report.regular_bound, report.plateau_delta)),
    ];
    for line in &report.norms {
        pairs.push((
            format!("norm dim {}", line.dim),
            format!("{:.12} for {}", line.norm, line.descriptor),
        ));
    }
    pairs.push((
        "gap".to_string(),
        "finite quotients reach 4; the integer-group bound stays below it".to_string(),
    ));
    pairs
}

fn gap_verified(report: &GapReport) -> bool {
    report.all_norms_four && report.regular_bound < 4.0
}

fn gap_body(report: &GapReport) -> Value {
    let (s, t) = std_generators();
    json!({
        "generators": {"S": s.0.to_vec(), "T": t.0.to_vec()},
        "moments": report.moments.a,
        "bounds": report.moments.b,
        "rep_norms": report.norms.iter().map(|line| json!({
            "descriptor": line.descriptor,
            "dim": line.dim,
            "norm": line.norm,
        })).collect::<Vec<_>>(),
        "plateau_delta": report.plateau_delta,
        "regular_bound": report.regular_bound,
        "all_norms_four": report.all_norms_four,
    })
}

fn emit(common: &Common, report: &Report, text: String) {
    if common.json {
        print!("{}", report.render_json());
    } else {
        print!("{text}");
    }
}

fn cmd_verify_all(common: &Common, nmax: usize) -> Result<i32> {
    let mut stages: Vec<Value> = Vec::new();
    let mut lines = String::new();
    let mut all_ok = true;
    let mut record = |name: &str, ok: bool, summary: String, body: Value| {
        stages.push(json!({
            "stage": name,
            "verdict": if ok { "PASS" } else { "FAIL" },
            "body": body,
        }));
        lines.push_str(&format!(
            "[{}] {name}: {summary}\n",
            if ok { "PASS" } else { "FAIL" }
        ));
        all_ok &= ok;
    };

    // announce which stage broke, but keep the original error (and with it
    // the verdict-versus-operational exit code)
    let named = |stage: &str, e: Error| -> Error {
        eprintln!("stage {stage} did not complete");
        match e {
            Error::VerdictFailed(msg) => Error::VerdictFailed(format!("{stage}: {msg}")),
            other => other,
        }
    };

    let mut products = true;
    for (p, r) in [(2u32, 2u32), (2, 3), (3, 2), (5, 2)] {
        products &= verify_step1_identities(p, r).map_err(|e| named("transvection-products", e))?;
    }
    record(
        "transvection-products",
        products,
        "exact matrix identities mod 4, 8, 9, 25".to_string(),
        json!({"moduli": [4, 8, 9, 25]}),
    );

    let inv = verify_theorem_level(2, common.cap, common.seed)
        .map_err(|e| named("invariant-multiplicities", e))?;
    record(
        "invariant-multiplicities",
        inv.verdict == "PASS",
        format!(
            "{}: all {} irreducibles carry a block-invariant vector",
            inv.group,
            inv.rows.len()
        ),
        serde_json::to_value(&inv).expect("report"),
    );

    let cx = find_sl3_counterexample(2, common.cap, common.seed)
        .map_err(|e| named("restriction-zero-search", e))?;
    let zero_degrees: Vec<u64> =
        cx.rows.iter().filter(|r| r.multiplicity == 0).map(|r| r.degree).collect();
    record(
        "restriction-zero-search",
        cx.verdict == "FOUND",
        format!("{}: zero-multiplicity degrees {:?}", cx.group, zero_degrees),
        serde_json::to_value(&cx).expect("report"),
    );

    for level in [2u32, 4] {
        let desc = default_descriptor(level);
        let rep = rep_from_descriptor(&desc, common.cap).map_err(|e| named("constructive-witness", e))?;
        let (p, r) = crate::pipeline::split_prime_power(level)?;
        let witness =
            run_pipeline(&rep, p, r).map_err(|e| named("constructive-witness", e))?;
        record(
            &format!("constructive-witness-level-{level}"),
            witness_verified(&witness) && !witness.fallback,
            format!(
                "residual {:.3e}, case {}, dim W {:?}",
                witness.residual, witness.case, witness.dim_w
            ),
            serde_json::to_value(&witness).expect("witness"),
        );
    }

    let gap = gap_report(
        nmax,
        &[default_descriptor(2), default_descriptor(4)],
        common.cap,
    )
    .map_err(|e| named("norm-gap", e))?;
    record(
        "norm-gap",
        gap_verified(&gap),
        format!(
            "all finite norms 4 within {:.0e}; lower bound {:.4} after plateau step {:.4}",
            tolerances::NORM,
            gap.regular_bound,
            gap.plateau_delta
        ),
        gap_body(&gap),
    );

    let verdict = if all_ok { "VERIFIED" } else { "FAILED" };
    let report = Report::new(
        "full-verification",
        common.seed,
        json!({"cap": common.cap, "nmax": nmax}),
        verdict,
        json!({"stages": stages}),
    )
    .with_field(inv.ell, inv.exponent);
    lines.push_str(&format!("verdict: {verdict}\n"));
    emit(common, &report, lines);
    Ok(if all_ok { EXIT_VERIFIED } else { EXIT_VERDICT })
}

fn cmd_chartab(common: &Common, group: &str, out: &std::path::Path) -> Result<i32> {
    let (n, modulus) = parse_group_spec(group)?;
    let store = GroupStore::enumerate_sl(n, modulus, common.cap)?;
    let cd = conjugacy_classes(&store);
    let table = crate::dixon::character_table(&store, &cd, common.seed)?;

    let stem = format!("chartab_SL{n}_{modulus}");
    std::fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    std::fs::write(&csv_path, table.to_csv())?;
    let report = Report::new(
        "character-table",
        common.seed,
        json!({"group": group, "cap": common.cap}),
        "PASS",
        serde_json::to_value(&table).expect("table"),
    )
    .with_field(table.ell, table.exponent);
    std::fs::write(&json_path, report.render_json())?;

    let text = aligned(&[
        ("group".to_string(), format!("SL{n}(Z/{modulus}), order {}", table.group_order)),
        ("classes".to_string(), table.num_classes.to_string()),
        ("degrees".to_string(), format!("{:?}", table.degrees())),
        ("field".to_string(), format!("l = {}, exponent {}", table.ell, table.exponent)),
        ("csv".to_string(), csv_path.display().to_string()),
        ("json".to_string(), json_path.display().to_string()),
    ]);
    emit(common, &report, text);
    Ok(EXIT_VERIFIED)
}

fn cmd_invariants(common: &Common, level: u32, stretch: bool) -> Result<i32> {
    if level == 3 && !stretch {
        return Err(Error::BadLevel(
            "SL4(Z/3) has 12 million elements; pass --stretch-sl4-mod3 to enumerate it".into(),
        ));
    }
    let rr = verify_theorem_level(level, common.cap, common.seed)?;
    let report = Report::new(
        "invariant-multiplicities",
        common.seed,
        json!({"level": level, "cap": common.cap}),
        &rr.verdict,
        serde_json::to_value(&rr).expect("report"),
    )
    .with_field(rr.ell, rr.exponent);
    let pass = rr.verdict == "PASS";
    emit(common, &report, aligned(&restriction_lines(&rr)));
    Ok(if pass { EXIT_VERIFIED } else { EXIT_VERDICT })
}

fn cmd_counterexample(common: &Common, level: u32) -> Result<i32> {
    let rr = find_sl3_counterexample(level, common.cap, common.seed)?;
    let report = Report::new(
        "restriction-zero-search",
        common.seed,
        json!({"level": level, "cap": common.cap}),
        &rr.verdict,
        serde_json::to_value(&rr).expect("report"),
    )
    .with_field(rr.ell, rr.exponent);
    let found = rr.verdict == "FOUND";
    emit(common, &report, aligned(&restriction_lines(&rr)));
    Ok(if found { EXIT_VERIFIED } else { EXIT_VERDICT })
}

fn cmd_pipeline(common: &Common, level: u32, rep: Option<&str>) -> Result<i32> {
    let desc = match rep {
        Some(text) => parse_descriptor(text)?,
        None => default_descriptor(level),
    };
    let rep = rep_from_descriptor(&desc, common.cap)?;
    if rep.level() != level {
        return Err(Error::BadDescriptor(format!(
            "descriptor level {} does not match --level {level}",
            rep.level()
        )));
    }
    let (p, r) = crate::pipeline::split_prime_power(level)?;
    let witness = run_pipeline(&rep, p, r)?;
    let ok = witness_verified(&witness);
    let report = Report::new(
        "constructive-witness",
        common.seed,
        json!({"level": level, "rep": desc, "cap": common.cap}),
        if ok { "PASS" } else { "FAIL" },
        serde_json::to_value(&witness).expect("witness"),
    );
    emit(common, &report, aligned(&witness_lines(&witness)));
    Ok(if ok { EXIT_VERIFIED } else { EXIT_VERDICT })
}

fn cmd_strongconv(
    common: &Common,
    nmax: usize,
    reps: &[String],
    out: Option<&std::path::Path>,
) -> Result<i32> {
    let descriptors: Vec<Value> = if reps.is_empty() {
        vec![default_descriptor(2), default_descriptor(4)]
    } else {
        reps.iter().map(|r| parse_descriptor(r)).collect::<Result<_>>()?
    };
    let gap = gap_report(nmax, &descriptors, common.cap)?;
    let ok = gap_verified(&gap);
    let report = Report::new(
        "norm-gap",
        common.seed,
        json!({"nmax": nmax, "reps": descriptors, "cap": common.cap}),
        if ok { "PASS" } else { "FAIL" },
        gap_body(&gap),
    );
    if let Some(path) = out {
        std::fs::write(path, report.render_json())?;
    }
    emit(common, &report, aligned(&gap_lines(&gap)));
    Ok(if ok { EXIT_VERIFIED } else { EXIT_VERDICT })
}

fn cmd_cache(common: &Common, group: &str, out: &std::path::Path) -> Result<i32> {
    let (n, modulus) = parse_group_spec(group)?;
    let store = GroupStore::enumerate_sl(n, modulus, common.cap)?;
    store.write_cache(out)?;
    let gens = GroupStore::sl_generators(n, modulus);
    let reread = GroupStore::read_cache(out, n, modulus, &gens)?;
    if reread.order() != store.order() {
        return Err(Error::Internal("cache round-trip changed the element count".into()));
    }
    let report = Report::new(
        "group-cache",
        common.seed,
        json!({"group": group, "out": out.display().to_string(), "cap": common.cap}),
        "PASS",
        json!({"order": store.order(), "verified_roundtrip": true}),
    );
    let text = aligned(&[
        ("group".to_string(), format!("SL{n}(Z/{modulus})")),
        ("order".to_string(), store.order().to_string()),
        ("cache".to_string(), out.display().to_string()),
        ("roundtrip".to_string(), "verified".to_string()),
    ]);
    emit(common, &report, text);
    Ok(EXIT_VERIFIED)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_spec_parsing() {
        assert_eq!(parse_group_spec("SL3:2").unwrap(), (3, 2));
        assert_eq!(parse_group_spec("SL4:2").unwrap(), (4, 2));
        assert!(parse_group_spec("GL3:2").is_err());
        assert!(parse_group_spec("SL5:2").is_err());
        assert!(parse_group_spec("SL3:1").is_err());
        assert!(parse_group_spec("SL3").is_err());
    }

    #[test]
    fn default_descriptors_round_trip() {
        for level in [2u32, 4] {
            let rep = rep_from_descriptor(&default_descriptor(level), DEFAULT_CAP).unwrap();
            assert_eq!(rep.level(), level);
            assert_eq!(rep.dim(), if level == 2 { 15 } else { 256 });
        }
    }

    #[test]
    fn cli_declaration_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
