//! `wfl`: bounded checkers and chain construction for weak amalgamation
//! classes of finite structures.
//!
//! Exit codes: 0 holds/success, 1 fails, 2 unknown-at-bound, 64 usage,
//! 70 internal/input error.

use wfl_core::report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use wfl_core::{
    build_limit_with, check_ap, check_jep, check_wap, homogeneity_automorphism, is_weakly_pure,
    parse_structure, truncation_isomorphism, verify_weak_saturation, zigzag_build, Chain,
    Embedding, FiniteStructure, SearchBudget, StructureClass, Verdict, VerdictStatus,
};

#[derive(Parser)]
#[command(
    name = "wfl",
    version,
    about = "Weak amalgamation checkers and generic-limit chains over finite structures"
)]
struct Cli {
    /// Cap on internal parallelism (all operations currently run on one
    /// thread; the cap is validated and recorded)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the classical amalgamation property at a bound
    CheckAp {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 6)]
        ext_size: usize,
    },
    /// Check the weak amalgamation property at a bound
    CheckWap {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 6)]
        ext_size: usize,
    },
    /// Check the joint embedding property at a bound
    CheckJep {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 6)]
        ext_size: usize,
    },
    /// Build a chain approximating a weakly saturated object
    BuildLimit {
        #[arg(long)]
        class: String,
        #[arg(long)]
        seed_file: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 8)]
        ext_size: usize,
    },
    /// Verify weak saturation of a chain's truncation
    VerifySaturation {
        chain: PathBuf,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 8)]
        ext_size: usize,
        #[arg(long, default_value_t = 3)]
        stage_cap: usize,
        /// class file, when the chain was built over a custom class
        #[arg(long)]
        class: Option<String>,
    },
    /// Back-and-forth between two chains
    Bnf {
        chain_a: PathBuf,
        chain_b: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 8)]
        ext_size: usize,
        #[arg(long)]
        class: Option<String>,
    },
    /// Automorphism witnessing weak homogeneity of a chain's truncation
    Homogeneity {
        chain: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        amalg_ext: PathBuf,
        /// map literal for e: base -> extension (defaults to the prefix
        /// inclusion), comma-separated src:dst pairs
        #[arg(long, default_value = "")]
        e: String,
        /// map literal for f: extension -> truncation
        #[arg(long)]
        f: String,
        /// map literal for g: extension -> truncation
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        small_size: usize,
        #[arg(long, default_value_t = 12)]
        ext_size: usize,
        #[arg(long)]
        class: Option<String>,
    },
    /// Bounded weak-purity check of an embedding
    WeakPure {
        #[arg(long)]
        class: String,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// map literal, comma-separated src:dst pairs
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 3)]
        small_size: usize,
        #[arg(long, default_value_t = 6)]
        ext_size: usize,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 64,
        msg: msg.into(),
    }
}

fn internal(msg: impl Into<String>) -> Failure {
    Failure {
        code: 70,
        msg: msg.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(64);
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(64);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_class(spec: &str) -> Result<StructureClass, Failure> {
    if let Ok(c) = StructureClass::builtin(spec) {
        return Ok(c);
    }
    if Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec)
            .map_err(|e| internal(format!("reading class file {spec}: {e}")))?;
        return StructureClass::parse_class_file(&text)
            .map_err(|e| internal(format!("class file {spec}: {e}")));
    }
    Err(usage(format!(
        "invalid value for --class: `{spec}` is not a built-in class (graphs, linear-orders, triad) or a readable class file"
    )))
}

fn read_structure(path: &Path, flag: &str) -> Result<Arc<FiniteStructure>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        usage(format!(
            "invalid value for {flag}: cannot read {}: {e}",
            path.display()
        ))
    })?;
    parse_structure(&text)
        .map(Arc::new)
        .map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn read_chain(path: &Path) -> Result<Chain, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read chain file {}: {e}", path.display())))?;
    Chain::parse(&text).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn chain_class(chain: &Chain, explicit: &Option<String>) -> Result<StructureClass, Failure> {
    let class = match explicit {
        Some(spec) => resolve_class(spec)?,
        None => StructureClass::builtin(chain.class_name()).map_err(|_| {
            usage(format!(
                "chain was built over non-built-in class `{}`; pass --class <file>",
                chain.class_name()
            ))
        })?,
    };
    chain
        .validate_members(&class)
        .map_err(|e| internal(format!("chain stage check: {e}")))?;
    Ok(class)
}

/// Parses a comma-separated `src:dst` map literal into a map array.
fn parse_map_literal(lit: &str, source_size: usize, flag: &str) -> Result<Vec<usize>, Failure> {
    let mut map = vec![usize::MAX; source_size];
    if !lit.trim().is_empty() {
        for pair in lit.split(',') {
            let (s, d) = pair.split_once(':').ok_or_else(|| {
                usage(format!("invalid value for {flag}: `{pair}` is not src:dst"))
            })?;
            let s: usize = s
                .trim()
                .parse()
                .map_err(|_| usage(format!("invalid value for {flag}: bad source `{s}`")))?;
            let d: usize = d
                .trim()
                .parse()
                .map_err(|_| usage(format!("invalid value for {flag}: bad target `{d}`")))?;
            if s >= source_size {
                return Err(usage(format!(
                    "invalid value for {flag}: source {s} out of range (size {source_size})"
                )));
            }
            if map[s] != usize::MAX {
                return Err(usage(format!(
                    "invalid value for {flag}: source {s} mapped twice"
                )));
            }
            map[s] = d;
        }
    }
    if let Some(missing) = map.iter().position(|&v| v == usize::MAX) {
        return Err(usage(format!(
            "invalid value for {flag}: source element {missing} is unmapped"
        )));
    }
    Ok(map)
}

fn verdict_exit(v: &Verdict) -> u8 {
    match v.status() {
        VerdictStatus::Holds => 0,
        VerdictStatus::Fails => 1,
        VerdictStatus::UnknownAtBound => 2,
    }
}

fn print_timed(body: String, started: Instant) {
    print!("{body}");
    println!("# time {:.3}ms", started.elapsed().as_secs_f64() * 1e3);
}

fn budget_for(small: usize, ext: usize, steps: usize, seed: u64) -> Result<SearchBudget, Failure> {
    SearchBudget::new(small, ext, steps, seed).map_err(|e| usage(format!("invalid budget: {e}")))
}

fn run(cmd: Command) -> Result<u8, Failure> {
    let started = Instant::now();
    match cmd {
        Command::CheckAp {
            class,
            small_size,
            ext_size,
        } => {
            let class = resolve_class(&class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            let v = check_ap(&class, &budget);
            print_timed(
                report::render("check-ap", class.name(), &budget, &v),
                started,
            );
            Ok(verdict_exit(&v))
        }
        Command::CheckWap {
            class,
            small_size,
            ext_size,
        } => {
            let class = resolve_class(&class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            let v = check_wap(&class, &budget);
            print_timed(
                report::render("check-wap", class.name(), &budget, &v),
                started,
            );
            Ok(verdict_exit(&v))
        }
        Command::CheckJep {
            class,
            small_size,
            ext_size,
        } => {
            let class = resolve_class(&class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            let v = check_jep(&class, &budget);
            print_timed(
                report::render("check-jep", class.name(), &budget, &v),
                started,
            );
            Ok(verdict_exit(&v))
        }
        Command::BuildLimit {
            class,
            seed_file,
            steps,
            seed,
            out,
            small_size,
            ext_size,
        } => {
            let class = resolve_class(&class)?;
            let seed_obj = read_structure(&seed_file, "--seed-file")?;
            let budget = budget_for(small_size, ext_size, steps, seed)?;
            let write = |chain: &Chain| {
                if let Err(e) = std::fs::write(&out, chain.serialize()) {
                    eprintln!("warning: checkpoint write failed: {e}");
                }
            };
            let chain = build_limit_with(&class, &seed_obj, &budget, write)
                .map_err(|e| internal(e.to_string()))?;
            std::fs::write(&out, chain.serialize())
                .map_err(|e| internal(format!("writing {}: {e}", out.display())))?;
            let mut body = String::new();
            body.push_str("wfl-report 1\n");
            body.push_str("command build-limit\n");
            body.push_str(&format!("class {}\n", class.name()));
            body.push_str(&report::budget_line(&budget));
            body.push('\n');
            body.push_str(&format!(
                "chain stages {} truncation {} processed {}\n",
                chain.len(),
                chain.last_stage().domain_size(),
                chain.log().len()
            ));
            body.push_str(&format!("out {}\n", out.display()));
            print_timed(body, started);
            Ok(0)
        }
        Command::VerifySaturation {
            chain,
            small_size,
            ext_size,
            stage_cap,
            class,
        } => {
            let chain = read_chain(&chain)?;
            let class = chain_class(&chain, &class)?;
            let budget = budget_for(
                small_size,
                ext_size,
                chain.budget().steps,
                chain.budget().seed,
            )?;
            let report_data = verify_weak_saturation(&class, &chain, &budget, stage_cap)
                .map_err(|e| internal(e.to_string()))?;
            let mut body = String::new();
            body.push_str("wfl-report 1\n");
            body.push_str("command verify-saturation\n");
            body.push_str(&format!("class {}\n", class.name()));
            body.push_str(&report::budget_line(&budget));
            body.push('\n');
            body.push_str(&format!(
                "instances {} holds {} unknown {} stage-cap {}\n",
                report_data.instances.len(),
                report_data.holds,
                report_data.unknown,
                report_data.stage_cap
            ));
            for inst in &report_data.instances {
                let status = match inst.status {
                    VerdictStatus::Holds => "holds",
                    VerdictStatus::Fails => "fails",
                    VerdictStatus::UnknownAtBound => "unknown",
                };
                let map = inst
                    .u
                    .map()
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let witness = inst
                    .witness
                    .as_ref()
                    .map(|e| format!(" witness-size {}", e.target().domain_size()))
                    .unwrap_or_default();
                body.push_str(&format!(
                    "instance stage {} size {} map [{}] {}{}\n",
                    inst.stage,
                    inst.u.source().domain_size(),
                    map,
                    status,
                    witness
                ));
            }
            print_timed(body, started);
            Ok(if report_data.unknown == 0 { 0 } else { 2 })
        }
        Command::Bnf {
            chain_a,
            chain_b,
            depth,
            small_size,
            ext_size,
            class,
        } => {
            let a = read_chain(&chain_a)?;
            let b = read_chain(&chain_b)?;
            let cls = chain_class(&a, &class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            match zigzag_build(&cls, &a, &b, depth, &budget) {
                Ok(z) => {
                    let mut body = String::new();
                    body.push_str("wfl-report 1\n");
                    body.push_str("command bnf\n");
                    body.push_str(&format!("class {}\n", cls.name()));
                    body.push_str(&report::budget_line(&budget));
                    body.push('\n');
                    body.push_str(&format!("zigzag depth {}\n", z.depth));
                    let fmt_idx = |v: &[usize]| {
                        v.iter()
                            .map(|i| i.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    };
                    body.push_str(&format!("k-indices {}\n", fmt_idx(&z.k_indices)));
                    body.push_str(&format!("l-indices {}\n", fmt_idx(&z.l_indices)));
                    for (i, h) in z.h.iter().enumerate() {
                        body.push_str(&format!("h {} map {:?}\n", i, h.map()));
                    }
                    for (i, q) in z.q.iter().enumerate() {
                        body.push_str(&format!("q {} map {:?}\n", i, q.map()));
                    }
                    let eq = z.verify_equations();
                    body.push_str(&format!(
                        "equations {}\n",
                        if eq.is_ok() { "ok" } else { "violated" }
                    ));
                    let iso = truncation_isomorphism(&z);
                    let inv = iso.check_mutually_inverse();
                    body.push_str(&format!(
                        "mutual-inverse {} agreement {}\n",
                        if inv.is_ok() { "ok" } else { "violated" },
                        iso.agreement.len()
                    ));
                    print_timed(body, started);
                    if eq.is_ok() && inv.is_ok() {
                        Ok(0)
                    } else {
                        Err(internal("zig-zag invariants violated".to_string()))
                    }
                }
                Err(
                    e @ (wfl_core::ZigZagError::DepthZero
                    | wfl_core::ZigZagError::ClassMismatch { .. }),
                ) => Err(usage(e.to_string())),
                Err(e) => {
                    println!("wfl-report 1\ncommand bnf\nverdict unknown-at-bound\nreason {e}");
                    Ok(2)
                }
            }
        }
        Command::Homogeneity {
            chain,
            base,
            amalg_ext,
            e,
            f,
            g,
            depth,
            small_size,
            ext_size,
            class,
        } => {
            let chain = read_chain(&chain)?;
            let cls = chain_class(&chain, &class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            let a = read_structure(&base, "--base")?;
            let b = read_structure(&amalg_ext, "--amalg-ext")?;
            let e_map = if e.trim().is_empty() {
                (0..a.domain_size()).collect()
            } else {
                parse_map_literal(&e, a.domain_size(), "--e")?
            };
            let e_emb = Embedding::new(a.clone(), b.clone(), e_map)
                .map_err(|err| usage(format!("invalid --e map: {err}")))?;
            let trunc = chain.last_stage().clone();
            let f_map = parse_map_literal(&f, b.domain_size(), "--f")?;
            let g_map = parse_map_literal(&g, b.domain_size(), "--g")?;
            let f_emb = Embedding::new(b.clone(), trunc.clone(), f_map)
                .map_err(|err| usage(format!("invalid --f map: {err}")))?;
            let g_emb = Embedding::new(b.clone(), trunc, g_map)
                .map_err(|err| usage(format!("invalid --g map: {err}")))?;
            match homogeneity_automorphism(&cls, &chain, &e_emb, &f_emb, &g_emb, depth, &budget) {
                Ok(z) => {
                    let iso = truncation_isomorphism(&z);
                    let mut body = String::new();
                    body.push_str("wfl-report 1\n");
                    body.push_str("command homogeneity\n");
                    body.push_str(&format!("class {}\n", cls.name()));
                    body.push_str(&report::budget_line(&budget));
                    body.push('\n');
                    body.push_str(&format!("zigzag depth {}\n", z.depth));
                    let mut triangle_ok = true;
                    for x in a.elements() {
                        let lhs = iso.apply_forward(f_emb.apply(e_emb.apply(x)));
                        let rhs = g_emb.apply(e_emb.apply(x));
                        if lhs != Some(rhs) {
                            triangle_ok = false;
                        }
                    }
                    body.push_str(&format!(
                        "triangle-over-base {}\n",
                        if triangle_ok { "ok" } else { "violated" }
                    ));
                    print_timed(body, started);
                    if triangle_ok {
                        Ok(0)
                    } else {
                        Err(internal("homogeneity triangle violated".to_string()))
                    }
                }
                Err(
                    err @ (wfl_core::ZigZagError::DepthZero
                    | wfl_core::ZigZagError::ClassMismatch { .. }
                    | wfl_core::ZigZagError::StageNotFound),
                ) => Err(usage(err.to_string())),
                Err(err) => {
                    println!(
                        "wfl-report 1\ncommand homogeneity\nverdict unknown-at-bound\nreason {err}"
                    );
                    Ok(2)
                }
            }
        }
        Command::WeakPure {
            class,
            source,
            target,
            map,
            small_size,
            ext_size,
        } => {
            let cls = resolve_class(&class)?;
            let budget = budget_for(small_size, ext_size, 0, 0)?;
            let k = read_structure(&source, "--source")?;
            let m = read_structure(&target, "--target")?;
            let map = parse_map_literal(&map, k.domain_size(), "--map")?;
            let emb =
                Embedding::new(k, m, map).map_err(|err| usage(format!("invalid --map: {err}")))?;
            let v = is_weakly_pure(&cls, &emb, &budget);
            print_timed(
                report::render("weak-pure", cls.name(), &budget, &v),
                started,
            );
            Ok(verdict_exit(&v))
        }
    }
}
