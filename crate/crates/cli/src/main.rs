use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use gos_core::covers::verify_cover;
use gos_core::format::{parse, serialize, Document};
use gos_core::invariants::{invariants, obstruction, surface_rigidity_decider, volume_pairs_match, whyte_decider};
use gos_core::leighton::{common_cover, LeightonError, Search, SearchBudget};
use gos_core::pipeline::{audit_certificate, commensurate, generate_bipartite_pair, Certificate, FailureReason, PairParams};
use gos_core::rational::{parse_rational, Rational};
use gos_core::treespace::{same_ideal_geometry, Equivalence};
use gos_core::validate::validate;
use gos_core::Descriptor;

const OK: u8 = 0;
const FALSE: u8 = 1;
const INPUT: u8 = 2;
const EXHAUSTED: u8 = 3;
const INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "gos", version, about = "Graphs of spaces: geometry checks, common covers and commensurability certificates")]
struct Cli {
    /// Seed for every randomized choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for the cover search
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Budget {
    /// Node limit per degree pair
    #[arg(long, default_value_t = 200_000)]
    budget: u64,

    /// Number of degree pairs on the ladder
    #[arg(long, default_value_t = 4)]
    rungs: usize,

    /// Wall clock limit in seconds
    #[arg(long)]
    time_limit: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a document and validate every descriptor and cover in it
    Validate { file: PathBuf },
    /// Do two descriptors share an ideal model geometry?
    Equiv { file: PathBuf, a: String, b: String },
    /// Search for a common finite cover
    CommonCover {
        file: PathBuf,
        a: String,
        b: String,
        #[command(flatten)]
        budget: Budget,
    },
    /// Euler characteristic, volumes and l2 Betti numbers of one descriptor
    Invariants { file: PathBuf, desc: String },
    /// Look for an l2 obstruction to commensurability
    Obstruction { file: PathBuf, a: String, b: String },
    /// Rigidity deciders for two-factor free products
    Rigidity {
        /// Genera g1 g2 h1 h2
        #[arg(long, num_args = 4, value_names = ["G1", "G2", "H1", "H2"], conflicts_with = "volumes")]
        surfaces: Option<Vec<i64>>,
        /// Factor volumes a1 a2 b1 b2 (rationals)
        #[arg(long, num_args = 4, value_names = ["A1", "A2", "B1", "B2"])]
        volumes: Option<Vec<String>>,
    },
    /// Full commensurability pipeline, emitting a certificate
    Pipeline {
        file: PathBuf,
        a: String,
        b: String,
        #[command(flatten)]
        budget: Budget,
    },
    /// Emit the bipartite example pair for given |F|, r and the index of Delta
    GenerateS7 {
        #[arg(long = "f")]
        f: u64,
        #[arg(long = "r")]
        r: u64,
        #[arg(long = "di")]
        di: u64,
    },
    /// Re-check a certificate document
    Check { cert: PathBuf },
}

struct Exit(u8, String);

impl Exit {
    fn input(msg: impl Into<String>) -> Self {
        Exit(INPUT, msg.into())
    }
}

type Run = Result<u8, Exit>;

fn load(path: &Path) -> Result<Document, Exit> {
    let text = fs::read_to_string(path).map_err(|e| Exit::input(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Exit::input(format!("{}: {e}", path.display())))
}

fn descriptor<'a>(doc: &'a Document, id: &str) -> Result<&'a Descriptor, Exit> {
    let d = doc.descriptor(id).ok_or_else(|| Exit::input(format!("no descriptor {id}")))?;
    let report = validate(d, &doc.catalog);
    if !report.is_ok() {
        return Err(Exit::input(format!("descriptor {id} is invalid:\n{report}")));
    }
    Ok(d)
}

fn search_budget(cli: &Cli, b: &Budget) -> SearchBudget {
    SearchBudget {
        max_degree_pairs: b.rungs,
        max_nodes: b.budget,
        time_limit: b.time_limit.map(Duration::from_secs),
        seed: cli.seed,
        threads: cli.threads.max(1),
    }
}

fn cmd_validate(file: &Path) -> Run {
    let doc = load(file)?;
    let mut bad = 0;
    for d in &doc.descriptors {
        let report = validate(d, &doc.catalog);
        if report.is_ok() {
            println!("descriptor {} ok", d.id);
        } else {
            bad += 1;
            println!("descriptor {} invalid", d.id);
            eprintln!("{report}");
        }
    }
    for m in &doc.covers {
        let (Some(s), Some(t)) = (doc.descriptor(&m.source), doc.descriptor(&m.target)) else {
            bad += 1;
            eprintln!("cover {}: source or target missing", m.id);
            continue;
        };
        let report = verify_cover(m, s, t, &doc.catalog);
        if report.is_ok() {
            println!("cover {} ok", m.id);
        } else {
            bad += 1;
            println!("cover {} invalid", m.id);
            eprintln!("{report}");
        }
    }
    if doc.descriptors.is_empty() && doc.covers.is_empty() {
        println!("catalog {} ok", doc.catalog.id);
    }
    Ok(if bad == 0 { OK } else { INPUT })
}

fn cmd_equiv(file: &Path, a: &str, b: &str) -> Run {
    let doc = load(file)?;
    let (da, db) = (descriptor(&doc, a)?, descriptor(&doc, b)?);
    match same_ideal_geometry(da, db, &doc.catalog).map_err(|e| Exit::input(e.to_string()))? {
        Equivalence::Yes(s) => {
            println!("same-geometry=yes round={} signature={:016x}", s.round, s.hash);
            Ok(OK)
        }
        Equivalence::No(d) => {
            println!(
                "same-geometry=no radius={} color={:016x} side={} example={}",
                d.radius, d.color, d.side, d.example
            );
            Ok(FALSE)
        }
    }
}

fn cmd_common_cover(cli: &Cli, file: &Path, a: &str, b: &str, budget: &Budget) -> Run {
    let doc = load(file)?;
    let (da, db) = (descriptor(&doc, a)?, descriptor(&doc, b)?);
    match common_cover(da, db, &doc.catalog, &search_budget(cli, budget)) {
        Ok(Search::Found(cc)) => {
            print!("{}", serialize(&cc.to_document(&doc.catalog, da, db)));
            Ok(OK)
        }
        Ok(Search::Exhausted(report)) => {
            eprint!("{report}");
            Ok(EXHAUSTED)
        }
        Err(LeightonError::SignatureMismatch(d)) => {
            println!("common-cover=none radius={} example={}", d.radius, d.example);
            Ok(FALSE)
        }
        Err(LeightonError::Internal(e)) => Err(Exit(INTERNAL, e)),
        Err(e) => Err(Exit::input(e.to_string())),
    }
}

fn cmd_invariants(file: &Path, id: &str) -> Run {
    let doc = load(file)?;
    let d = descriptor(&doc, id)?;
    let report = invariants(d, &doc.catalog).map_err(|e| Exit::input(e.to_string()))?;
    println!("{report}");
    Ok(OK)
}

fn cmd_obstruction(file: &Path, a: &str, b: &str) -> Run {
    let doc = load(file)?;
    let (da, db) = (descriptor(&doc, a)?, descriptor(&doc, b)?);
    let verdict = obstruction(da, db, &doc.catalog).map_err(|e| Exit::input(e.to_string()))?;
    println!("{verdict}");
    Ok(if verdict.is_obstruction() { FALSE } else { OK })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_rigidity(surfaces: Option<&[i64]>, volumes: Option<&[String]>) -> Run {
    if let Some(g) = surfaces {
        let commensurable = whyte_decider(g[0], g[1], g[2], g[3]).map_err(|e| Exit::input(e.to_string()))?;
        let geometry = surface_rigidity_decider(g[0], g[1], g[2], g[3]).map_err(|e| Exit::input(e.to_string()))?;
        println!("commensurable={} model_geometry={}", yes_no(commensurable), yes_no(geometry));
        return Ok(if commensurable && geometry { OK } else { FALSE });
    }
    if let Some(v) = volumes {
        let xs: Vec<Rational> = v
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| Exit::input(format!("not a rational: {s}"))))
            .collect::<Result<_, _>>()?;
        let matched = volume_pairs_match([xs[0].clone(), xs[1].clone()], [xs[2].clone(), xs[3].clone()]);
        println!("volumes_match={}", yes_no(matched));
        return Ok(if matched { OK } else { FALSE });
    }
    Err(Exit::input("pass --surfaces G1 G2 H1 H2 or --volumes A1 A2 B1 B2"))
}

fn cmd_pipeline(cli: &Cli, file: &Path, a: &str, b: &str, budget: &Budget) -> Run {
    let doc = load(file)?;
    let (da, db) = (doc.descriptor(a), doc.descriptor(b));
    let (Some(da), Some(db)) = (da, db) else {
        return Err(Exit::input(format!("no descriptor {}", if da.is_none() { a } else { b })));
    };
    match commensurate(da, db, &doc.catalog, &search_budget(cli, budget)) {
        Ok(cert) => {
            print!("{}", serialize(&cert.to_document()));
            Ok(OK)
        }
        Err(f) => {
            eprintln!("{}", f.to_string().trim_end());
            Ok(match f.reason {
                FailureReason::SignatureMismatch(_) => FALSE,
                FailureReason::Exhausted(_) | FailureReason::CapExceeded(_) => EXHAUSTED,
                FailureReason::MissingGroupData(_) | FailureReason::Invalid(_) => INPUT,
            })
        }
    }
}

fn cmd_generate_s7(f: u64, r: u64, di: u64) -> Run {
    let s = generate_bipartite_pair(PairParams { f_order: f, r, delta_index: di }).map_err(|e| Exit::input(e.to_string()))?;
    print!("{}", serialize(&s.to_document()));
    Ok(OK)
}

fn cmd_check(file: &Path) -> Run {
    let doc = load(file)?;
    let cert = Certificate::from_document(&doc).map_err(|e| Exit(INTERNAL, format!("not a certificate: {e}")))?;
    let problems = audit_certificate(&cert);
    if problems.is_empty() {
        println!("certificate ok degrees={}x{} indices={}x{}", cert.degrees.0, cert.degrees.1, cert.indices.0, cert.indices.1);
        Ok(OK)
    } else {
        println!("certificate rejected");
        for p in &problems {
            eprintln!("{p}");
        }
        Ok(INTERNAL)
    }
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Validate { file } => cmd_validate(file),
        Command::Equiv { file, a, b } => cmd_equiv(file, a, b),
        Command::CommonCover { file, a, b, budget } => cmd_common_cover(cli, file, a, b, budget),
        Command::Invariants { file, desc } => cmd_invariants(file, desc),
        Command::Obstruction { file, a, b } => cmd_obstruction(file, a, b),
        Command::Rigidity { surfaces, volumes } => cmd_rigidity(surfaces.as_deref(), volumes.as_deref()),
        Command::Pipeline { file, a, b, budget } => cmd_pipeline(cli, file, a, b, budget),
        Command::GenerateS7 { f, r, di } => cmd_generate_s7(*f, *r, *di),
        Command::Check { cert } => cmd_check(cert),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT } else { OK });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
