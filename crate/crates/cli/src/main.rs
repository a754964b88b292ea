//! `pseudoperfect`: command-line front end for the symbol engine.
//!
//! Exit codes: 0 verified or decided, 2 semi-decided (inconclusive, or
//! nonsplit only within a search bound), 1 a verification failure, 64
//! usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pseudoperfect::oracle::{hilbert2, hilbert_ext, tame_symbol};
use pseudoperfect::pseudo_perfect::{bounds, build_pp_extension, PseudoBasis};
use pseudoperfect::residue::{
    char2_counterexample_search_with_budget, cyclic_split_check, parse_residue, Char2Outcome, CyclicPAlgebra,
    SplitCheck,
};
use pseudoperfect::symbols::{
    filtration_certificate, kato_rewrite, normalize_traced, split_by_pseudoperfect, MilnorSymbol, ObstructionClass,
    Outcome, SplitOptions, Step,
};
use pseudoperfect::verify::{verify_lemma, Lemma};
use pseudoperfect::{Error, Field, FieldDescriptor};

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_SEMI: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Default node budget for the characteristic-2 counterexample search.
const DEFAULT_BUDGET: u64 = 50_000_000;

#[derive(Parser)]
#[command(name = "pseudoperfect", version, about = "Milnor K-theory symbols over mixed-characteristic CDVFs")]
struct Cli {
    /// Emit one JSON record per line instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct FieldArgs {
    /// Field descriptor file (TOML).
    #[arg(long)]
    field: PathBuf,
    /// Override the descriptor's working precision.
    #[arg(long)]
    precision: Option<i64>,
}

#[derive(Subcommand)]
enum Command {
    /// Restrict a symbol to a pseudo-perfect extension and report whether it dies.
    Reduce {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        symbol: String,
        /// Pseudo-basis: residue generators and the uniformizer, e.g. "a,b,2".
        #[arg(long)]
        pp: String,
        #[arg(long, default_value_t = 1)]
        level: u32,
        /// Per-variable degree bound for splitting witnesses.
        #[arg(long, default_value_t = 3)]
        split_bound: u32,
        /// Print every rewrite step.
        #[arg(long)]
        trace: bool,
    },
    /// Normalize a symbol with the defining relations.
    Normalize {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        symbol: String,
    },
    /// Kato's rewrite of {1+x, 1+y} and the filtration level it certifies.
    Kato {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Level of the unit filtration containing a symbol.
    Filtration {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        symbol: String,
    },
    /// Seeded randomized verification of a lemma.
    VerifyLemma {
        #[arg(long)]
        name: String,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for solutions of the characteristic-2 norm equation.
    Counterexample {
        #[arg(long)]
        degree_bound: u32,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Look for a splitting witness of the cyclic algebra [w, v).
    SplitCheck {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        w: String,
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 3)]
        bound: u32,
    },
    /// Period-index bounds from the pseudo-rank.
    Bounds {
        #[command(flatten)]
        field: FieldArgs,
        /// Dimension of the regular local ring.
        #[arg(long, default_value_t = 1)]
        dims: u32,
        /// Also report bounds for semi-global fields over K.
        #[arg(long)]
        semiglobal: bool,
    },
    /// Build the descriptor of K(Λ^{1/p^ℓ}).
    PpExtension {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        pp: String,
        #[arg(long, default_value_t = 1)]
        level: u32,
    },
    /// Hilbert symbol (a, b) over Q_2, or over an extension given by --ext.
    Hilbert {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        ext: Option<PathBuf>,
    },
    /// Tame symbol of two nonzero elements.
    TameSymbol {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
}

/// A failed run: exit code and message.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Parse { .. }
            | Error::InvalidDescriptor(_)
            | Error::UnsupportedTower(_)
            | Error::UnsupportedDescriptor(_)
            | Error::InvalidPseudoBasis(_)
            | Error::FieldMismatch
            | Error::ZeroEntry(_) => EXIT_USAGE,
            _ => EXIT_SEMI,
        };
        Failure(code, e.to_string())
    }
}

type Run = Result<u8, Failure>;

struct Out {
    json: bool,
}

impl Out {
    fn record(&self, value: Value, text: impl FnOnce() -> String) {
        if self.json {
            println!("{value}");
        } else {
            println!("{}", text());
        }
    }
}

fn load_descriptor(path: &Path, precision: Option<i64>) -> Result<FieldDescriptor, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    let d = FieldDescriptor::from_toml(&text)?;
    Ok(match precision {
        Some(n) => d.with_precision(n)?,
        None => d,
    })
}

fn load_field(args: &FieldArgs) -> Result<Arc<Field>, Failure> {
    Ok(Field::new(load_descriptor(&args.field, args.precision)?)?)
}

fn step_record(k: usize, s: &Step) -> Value {
    json!({ "record": "step", "index": k, "rule": s.rule.name(), "detail": s.rule.to_string(), "after": s.after.to_string() })
}

fn class_record(c: &ObstructionClass) -> Value {
    match c {
        ObstructionClass::Cyclic { algebra, searched_bound } => {
            json!({ "kind": "cyclic", "class": algebra.to_string(), "searched_bound": searched_bound })
        }
        ObstructionClass::ArtinSchreier { class } => {
            json!({ "kind": "artin_schreier", "class": class.display_factored() })
        }
    }
}

fn reduce(out: &Out, field: &FieldArgs, symbol: &str, pp: &str, level: u32, split_bound: u32, trace: bool) -> Run {
    let k = load_field(field)?;
    let s = MilnorSymbol::parse(&k, symbol)?;
    let basis = PseudoBasis::parse(&k, pp, level)?;
    let cert = split_by_pseudoperfect(&s, &basis, &SplitOptions { split_bound })?;
    if let Err(e) = cert.replay() {
        return Err(Failure(EXIT_FAILED, format!("certificate does not replay: {e}")));
    }
    if trace || out.json {
        for (i, step) in cert.steps.iter().enumerate() {
            out.record(step_record(i, step), || format!("{i:>3}. {}\n     = {}", step.rule, step.after));
        }
    }
    let (status, classes) = match &cert.outcome {
        Outcome::Trivialized => ("Trivialized", Vec::new()),
        Outcome::Obstruction(cs) => ("Obstruction", cs.iter().map(class_record).collect()),
        Outcome::Inconclusive(_) => ("Inconclusive", Vec::new()),
    };
    let tame_level = cert.tame.as_ref().map(|t| t.parts.level);
    let record = json!({
        "record": "result",
        "command": "reduce",
        "input": cert.input.to_string(),
        "basis": cert.basis,
        "extension_degree": cert.extension.degree,
        "extension_e": cert.extension.e,
        "steps": cert.steps.len(),
        "outcome": status,
        "detail": cert.outcome.to_string(),
        "classes": classes,
        "tame_level": tame_level,
    });
    out.record(record, || {
        let mut text = format!(
            "{} over K({}^(1/{}^{})): [L:K] = {}, e_L = {}\n{} steps, replayed\n{}",
            cert.input,
            cert.basis,
            k.p(),
            level,
            cert.extension.degree,
            cert.extension.e,
            cert.steps.len(),
            cert.outcome
        );
        if let Some(l) = tame_level {
            text.push_str(&format!(" (tame level {l})"));
        }
        text
    });
    Ok(if cert.outcome.is_trivialized() { EXIT_OK } else { EXIT_SEMI })
}

fn normalize_cmd(out: &Out, field: &FieldArgs, symbol: &str) -> Run {
    let k = load_field(field)?;
    let s = MilnorSymbol::parse(&k, symbol)?;
    let (n, steps) = normalize_traced(&s)?;
    let rules: Vec<&str> = steps.iter().map(|s| s.rule.name()).collect();
    out.record(
        json!({ "record": "result", "command": "normalize", "input": s.to_string(), "normal_form": n.to_string(), "rules": rules }),
        || n.to_string(),
    );
    Ok(EXIT_OK)
}

fn kato_cmd(out: &Out, field: &FieldArgs, x: &str, y: &str) -> Run {
    let k = load_field(field)?;
    let (x, y) = (k.parse(x)?, k.parse(y)?);
    let (s, cert) = kato_rewrite(&x, &y)?;
    let exact = matches!(cert.exactness, pseudoperfect::symbols::Exactness::Exact);
    out.record(
        json!({ "record": "result", "command": "kato", "rewrite": s.to_string(), "level": cert.level, "exact": exact, "zero_class": cert.zero_class }),
        || {
            let how = match cert.exactness {
                pseudoperfect::symbols::Exactness::Exact => "exactly".to_string(),
                pseudoperfect::symbols::Exactness::CongruenceOnly { modulus_level } => {
                    format!("modulo U^{modulus_level} K_2")
                }
            };
            let zero = if cert.zero_class { ", zero mod p" } else { "" };
            format!("{{1+{x}, 1+{y}}} = {s} {how}; in U^{}{zero}", cert.level)
        },
    );
    Ok(EXIT_OK)
}

fn filtration_cmd(out: &Out, field: &FieldArgs, symbol: &str) -> Run {
    let k = load_field(field)?;
    let s = MilnorSymbol::parse(&k, symbol)?;
    let cert = filtration_certificate(&s)?;
    out.record(
        json!({ "record": "result", "command": "filtration", "input": s.to_string(), "level": cert.level, "zero_class": cert.zero_class }),
        || {
            let zero = if cert.zero_class { ", zero mod p" } else { "" };
            format!("{s} in U^{}{zero}", cert.level)
        },
    );
    Ok(EXIT_OK)
}

fn verify_cmd(out: &Out, name: &str, field: &FieldArgs, samples: usize, seed: u64) -> Run {
    let lemma: Lemma = name.parse().map_err(|_| {
        let names: Vec<&str> = Lemma::ALL.iter().map(|l| l.name()).collect();
        Failure(EXIT_USAGE, format!("unknown lemma {name}; expected one of {}", names.join(", ")))
    })?;
    let k = load_field(field)?;
    let report = verify_lemma(lemma, &k, samples, seed)?;
    let minimal = report.minimal_failure().map(|f| json!({ "index": f.index, "input": f.input, "detail": f.detail }));
    out.record(
        json!({
            "record": "result",
            "command": "verify-lemma",
            "lemma": lemma.name(),
            "seed": seed,
            "samples": report.samples,
            "agreements": report.agreements,
            "failures": report.failures.len(),
            "counter_instance": minimal,
        }),
        || match report.minimal_failure() {
            None => format!("{}/{} oracle agreements", report.agreements, report.samples),
            Some(f) => format!(
                "{}/{} oracle agreements\nFAILURE at sample {}: {}\n  {}",
                report.agreements, report.samples, f.index, f.input, f.detail
            ),
        },
    );
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn counterexample_cmd(out: &Out, bound: u32, budget: u64) -> Run {
    let result = char2_counterexample_search_with_budget(bound, budget)?;
    match result {
        Char2Outcome::NoneWithinBound { bound, explored } => {
            out.record(
                json!({ "record": "result", "command": "counterexample", "outcome": "NoneWithinBound", "bound": bound, "explored": explored }),
                || format!("NoneWithinBound: no (f, g, h) with per-variable degree <= {bound} ({explored} candidates)"),
            );
            Ok(EXIT_OK)
        }
        Char2Outcome::Solution { f, g, h } => {
            let names = ["u".to_string(), "v".to_string()];
            let (f, g, h) = (f.render(&names, false), g.render(&names, false), h.render(&names, false));
            out.record(
                json!({ "record": "result", "command": "counterexample", "outcome": "Solution", "f": f, "g": g, "h": h }),
                || format!("FAILURE: solution f = {f}, g = {g}, h = {h}"),
            );
            Ok(EXIT_FAILED)
        }
    }
}

fn split_check_cmd(out: &Out, field: &FieldArgs, w: &str, v: &str, bound: u32) -> Run {
    let k = load_field(field)?;
    let rf = k.residue_field().clone();
    let alg = CyclicPAlgebra::new(parse_residue(&rf, w)?, parse_residue(&rf, v)?)?;
    match cyclic_split_check(&alg, bound) {
        SplitCheck::Split(witness) => {
            let wit = format!("{witness:?}");
            out.record(
                json!({ "record": "result", "command": "split-check", "algebra": alg.to_string(), "outcome": "Split", "witness": wit }),
                || format!("{alg} splits: {wit}"),
            );
            Ok(EXIT_OK)
        }
        SplitCheck::NotSplitWithinBound { bound } => {
            out.record(
                json!({ "record": "result", "command": "split-check", "algebra": alg.to_string(), "outcome": "NotSplitWithinBound", "bound": bound }),
                || format!("{alg}: NotSplitWithinBound({bound})"),
            );
            Ok(EXIT_SEMI)
        }
    }
}

fn bounds_cmd(out: &Out, field: &FieldArgs, dims: u32, semiglobal: bool) -> Run {
    let d = load_descriptor(&field.field, field.precision)?;
    let r = bounds(&d, dims, semiglobal)?;
    let value = json!({
        "record": "result",
        "command": "bounds",
        "prime": r.prime,
        "pseudo_rank": r.pseudo_rank,
        "br_p_dim_lower": r.br_p_dim_lower,
        "br_p_dim_upper": r.br_p_dim_upper,
        "gssd_upper": r.gssd_upper,
        "semiglobal_br_upper": r.semiglobal_br_upper,
        "semiglobal_gssd2_upper": r.semiglobal_gssd2_upper,
        "uniform_bound": r.uniform_bound.map(|u| u.to_string()),
        "conditional_at_2": r.conditional_at_2,
    });
    out.record(value, || r.to_string().trim_end().to_string());
    Ok(EXIT_OK)
}

fn pp_extension_cmd(out: &Out, field: &FieldArgs, pp: &str, level: u32) -> Run {
    let k = load_field(field)?;
    let basis = PseudoBasis::parse(&k, pp, level)?;
    let ext = build_pp_extension(k.descriptor(), &basis)?;
    let toml = ext.descriptor.to_toml();
    out.record(
        json!({ "record": "result", "command": "pp-extension", "degree": ext.degree, "e": ext.e, "level": ext.level, "degree_is_derived": ext.degree_is_derived, "descriptor": toml }),
        || {
            let derived = if ext.degree_is_derived { " (derived)" } else { "" };
            format!("# [L:K] = {}{derived}, e_L = {}\n{}", ext.degree, ext.e, toml.trim_end())
        },
    );
    Ok(EXIT_OK)
}

fn hilbert_cmd(out: &Out, field: &FieldArgs, a: &str, b: &str, ext: Option<&Path>) -> Run {
    let k = load_field(field)?;
    let (a, b) = (k.parse(a)?, k.parse(b)?);
    let value = match ext {
        None => hilbert2(&a, &b)?,
        Some(path) => hilbert_ext(&a, &b, &load_descriptor(path, None)?)?,
    };
    let verified = value.verify_at_double_precision();
    let witness = value.witness.as_ref().map(|w| json!([w.x, w.y, w.z]));
    out.record(
        json!({
            "record": "result",
            "command": "hilbert",
            "a": a.render(),
            "b": b.render(),
            "sign": value.sign,
            "witness": witness,
            "modulus_level": value.modulus_level,
            "verified_at_double_precision": verified,
        }),
        || format!("({}, {}) = {value}", a.render(), b.render()),
    );
    Ok(if verified { EXIT_OK } else { EXIT_FAILED })
}

fn tame_cmd(out: &Out, field: &FieldArgs, a: &str, b: &str) -> Run {
    let k = load_field(field)?;
    let (a, b) = (k.parse(a)?, k.parse(b)?);
    let t = tame_symbol(&a, &b)?;
    out.record(json!({ "record": "result", "command": "tame-symbol", "value": t.to_string() }), || t.to_string());
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli) -> Run {
    let out = Out { json: cli.json };
    match &cli.command {
        Command::Reduce { field, symbol, pp, level, split_bound, trace } => {
            reduce(&out, field, symbol, pp, *level, *split_bound, *trace)
        }
        Command::Normalize { field, symbol } => normalize_cmd(&out, field, symbol),
        Command::Kato { field, x, y } => kato_cmd(&out, field, x, y),
        Command::Filtration { field, symbol } => filtration_cmd(&out, field, symbol),
        Command::VerifyLemma { name, field, samples, seed } => verify_cmd(&out, name, field, *samples, *seed),
        Command::Counterexample { degree_bound, budget } => counterexample_cmd(&out, *degree_bound, *budget),
        Command::SplitCheck { field, w, v, bound } => split_check_cmd(&out, field, w, v, *bound),
        Command::Bounds { field, dims, semiglobal } => bounds_cmd(&out, field, *dims, *semiglobal),
        Command::PpExtension { field, pp, level } => pp_extension_cmd(&out, field, pp, *level),
        Command::Hilbert { field, a, b, ext } => hilbert_cmd(&out, field, a, b, ext.as_deref()),
        Command::TameSymbol { field, a, b } => tame_cmd(&out, field, a, b),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            if cli.json {
                println!("{}", json!({ "record": "error", "exit": code, "message": msg }));
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
