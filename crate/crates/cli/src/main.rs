use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use genus_core::casebook::{case_spec, run_case, CaseName, Completion};
use genus_core::derivation::{derive_embedding, LogBundle};
use genus_core::search::{search_completion, SearchOutcome, SearchSpec};
use genus_core::surgery::{apply_script, SurgeryScript};
use genus_core::verify::verify_embedding;
use genus_core::{RotationSystem, VerificationReport};

#[derive(Parser)]
#[command(name = "kgenus", version, about = "Derive, complete and verify genus embeddings of complete graphs")]
struct Cli {
    /// Directory for output files and report twins.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run independent cases concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive an embedding from a log bundle.
    Derive { bundle: PathBuf },
    /// Check a rotation-system file.
    Verify {
        rotfile: PathBuf,
        /// Also require a genus embedding of K_n.
        #[arg(long)]
        complete: Option<usize>,
    },
    /// Check the log census of a bundle.
    CheckLogs { bundle: PathBuf },
    /// Apply a surgery script to a rotation system.
    Apply { rotfile: PathBuf, script: PathBuf },
    /// Search for a completion script.
    Search { rotfile: PathBuf, spec: PathBuf },
    /// Run a shipped case: k18, k20, k23 or all.
    Case {
        name: String,
        /// Search instead of replaying the stored script.
        #[arg(long)]
        search: bool,
    },
}

enum Failure {
    Input(String),
}

type Outcome = Result<Vec<(String, VerificationReport)>, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: std::str::FromStr>(path: &Path) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    read(path)?
        .parse()
        .map_err(|e: T::Err| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(out: Option<&Path>, name: &str, content: &str) -> Result<(), Failure> {
    let Some(dir) = out else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn derive(bundle: &Path, out: Option<&Path>) -> Outcome {
    let b: LogBundle = parse(bundle)?;
    let mut report = VerificationReport::new(format!("derive {}", bundle.display()));
    report.section(b.check());
    match derive_embedding(&b) {
        Ok(d) => {
            let missing: Vec<String> = d.missing_edges.iter().map(|p| p.to_string()).collect();
            report.check("triangular", true, format!("handedness {:?}", d.handedness));
            report.check("missing edges", true, format!("{}: {}", missing.len(), missing.join(" ")));
            for (letter, copies) in &d.letter_map {
                let names: Vec<String> = copies.iter().map(|c| c.vertex.to_string()).collect();
                report.check(format!("letter {letter}"), true, names.join(" "));
            }
            write(out, "derived.rot", &d.rotation_system.to_string())?;
            report = report.with_stats(d.stats);
        }
        Err(e) => {
            report.fail_with("derive", e.to_string(), vec![]);
        }
    }
    Ok(vec![("derive".into(), report)])
}

fn check_logs(bundle: &Path) -> Outcome {
    let b: LogBundle = parse(bundle)?;
    let mut report = b.check();
    for log in &b.logs {
        report.check(
            format!("census [{}]", log.circuit_id),
            true,
            format!("{} entries", log.entries.len()),
        );
    }
    Ok(vec![("check-logs".into(), report)])
}

fn apply(rotfile: &Path, script: &Path, out: Option<&Path>) -> Outcome {
    let rs: RotationSystem = parse(rotfile)?;
    let s: SurgeryScript = parse(script)?;
    let mut report = VerificationReport::new(format!("apply {}", script.display()));
    match apply_script(&rs, &s) {
        Ok(a) => {
            for l in &a.ledger {
                let cost: Vec<String> = l.cost.iter().map(|p| p.to_string()).collect();
                report.check(
                    format!("{} {}", l.index + 1, l.op),
                    true,
                    format!("genus {} -> {}, cost [{}]", l.genus_before, l.genus_after, cost.join(" ")),
                );
            }
            let outstanding: Vec<String> = a.outstanding_cost().iter().map(|p| p.to_string()).collect();
            if !outstanding.is_empty() {
                report.fail_with("cost restored", "removed edges not restored", outstanding);
            }
            write(out, "result.rot", &a.rotation_system().to_string())?;
            report.section(verify_embedding(a.rotation_system(), None));
        }
        Err(e) => {
            report.fail_with(format!("step {}", e.index + 1), e.source.to_string(), vec![e.op.clone()]);
        }
    }
    Ok(vec![("apply".into(), report)])
}

fn search(rotfile: &Path, spec: &Path, out: Option<&Path>) -> Outcome {
    let rs: RotationSystem = parse(rotfile)?;
    let sp: SearchSpec = parse(spec)?;
    let mut report = VerificationReport::new(format!("search {}", spec.display()));
    match search_completion(&rs, &sp) {
        Ok(SearchOutcome::Found(results)) => {
            for (i, r) in results.iter().enumerate() {
                let name = format!("script-{}.txt", i + 1);
                write(out, &name, &r.script.to_string())?;
                if i == 0 {
                    println!("{}", r.script);
                }
                let mut sec = r.certificate.clone();
                sec.subject = format!("result {} ({} steps)", i + 1, r.script.len());
                report.section(sec);
            }
        }
        Ok(SearchOutcome::NotFound { bounds, explored }) => {
            report.fail_with("search", format!("not found within {bounds}"), vec![format!("{explored} leaves")]);
        }
        Err(e) => return Err(Failure::Input(e.to_string())),
    }
    Ok(vec![("search".into(), report)])
}

fn case(name: &str, searching: bool, parallel: bool, out: Option<&Path>) -> Outcome {
    let names: Vec<CaseName> = if name == "all" {
        CaseName::ALL.to_vec()
    } else {
        vec![name.parse().map_err(|e: genus_core::casebook::UnknownCase| Failure::Input(e.to_string()))?]
    };
    let mode = if searching { Completion::Search } else { Completion::Replay };
    let one = |n: CaseName| -> Result<(String, VerificationReport), Failure> {
        let spec = case_spec(n).map_err(|e| Failure::Input(e.to_string()))?;
        let run = run_case(&spec, mode, out).map_err(|e| Failure::Input(e.to_string()))?;
        Ok((format!("case-{n}"), run.report))
    };
    let results: Vec<Result<_, Failure>> = if parallel {
        std::thread::scope(|s| {
            let hs: Vec<_> = names.iter().map(|&n| s.spawn(move || one(n))).collect();
            hs.into_iter().map(|h| h.join().expect("case thread")).collect()
        })
    } else {
        names.into_iter().map(one).collect()
    };
    results.into_iter().collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Derive { bundle } => derive(bundle, out),
        Command::Verify { rotfile, complete } => {
            parse::<RotationSystem>(rotfile).map(|rs| vec![("verify".into(), verify_embedding(&rs, *complete))])
        }
        Command::CheckLogs { bundle } => check_logs(bundle),
        Command::Apply { rotfile, script } => apply(rotfile, script, out),
        Command::Search { rotfile, spec } => search(rotfile, spec, out),
        Command::Case { name, search } => case(name, *search, cli.parallel, out),
    };
    let reports = match result {
        Ok(r) => r,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let mut passed = true;
    for (name, report) in &reports {
        print!("{report}");
        passed &= report.passed;
        // case reports are already written inside the case directory
        if !name.starts_with("case-") {
            if let Err(Failure::Input(msg)) = write(out, &format!("{name}.txt"), &report.to_string())
                .and_then(|_| write(out, &format!("{name}.json"), &report.to_json()))
            {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        }
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
