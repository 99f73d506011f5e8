//! Command-line front end. Exit codes: 0 success, 1 diagnostics or mismatch,
//! 2 usage or I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ad::AdModel;
use crate::bpmn::{wellformed, BpmnModel};
use crate::exec::{self, AdMachine, BpmnMachine, EndKind, ExecutionTrace};
use crate::io::adm::{parse_adm, AdmError};
use crate::io::bpmn_xml::{read_bpmn_xml, write_bpmn_xml};
use crate::io::dot::{ad_to_dot, bpmn_to_dot};
use crate::io::events::{parse_event_script, EventScript};
use crate::transform::transform;
use crate::validate::{has_errors, validate, Diagnostic};

#[derive(Debug, Parser)]
#[command(name = "wfmt", version, about = "Validate, transform and compare workflow models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct FormatArg {
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an activity model against the profile rules
    Validate {
        model: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Transform an activity model into BPMN-XML
    Transform {
        model: PathBuf,
        /// BPMN-XML output file (stdout when absent)
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the transformation trace here
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write a Graphviz rendering of the result here
        #[arg(long)]
        dot: Option<PathBuf>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Run one seeded token game (`.xml` input runs the BPMN executor)
    Simulate {
        model: PathBuf,
        /// Event script
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = exec::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Compare the trace sets of an activity model and a BPMN model
    Equiv {
        model: PathBuf,
        bpmn: PathBuf,
        /// Event script
        #[arg(long)]
        events: Option<PathBuf>,
        /// Observable events explored per trace
        #[arg(long, default_value_t = exec::DEFAULT_DEPTH)]
        depth: usize,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Render a model (activity JSON or BPMN-XML) as Graphviz
    ExportDot {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Outcome of a command before it is turned into an exit code.
enum Failure {
    /// Exit 1 with the given report already printed.
    Reported,
    /// Exit 2.
    Usage(String),
}

type Res = Result<(), Failure>;

#[derive(Serialize)]
struct Issue {
    code: String,
    element: String,
    message: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Res {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Res {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn adm_issues(e: &AdmError, path: &Path) -> Vec<Issue> {
    match e {
        AdmError::Syntax { .. } => vec![Issue {
            code: "SYNTAX".into(),
            element: path.display().to_string(),
            message: e.to_string(),
        }],
        AdmError::Invalid(list) => list
            .iter()
            .map(|i| Issue {
                code: i.code().to_string(),
                element: String::new(),
                message: i.to_string(),
            })
            .collect(),
    }
}

fn report_issues(out: &mut dyn Write, issues: &[Issue], format: Format) -> Res {
    match format {
        Format::Json => emit(out, &json(&issues)),
        Format::Text => {
            for i in issues {
                if i.element.is_empty() {
                    emit(out, &format!("{} error: {}\n", i.code, i.message))?;
                } else {
                    emit(out, &format!("{} error {}: {}\n", i.code, i.element, i.message))?;
                }
            }
            Ok(())
        }
    }
}

fn report_diagnostics(out: &mut dyn Write, diags: &[Diagnostic], format: Format) -> Res {
    match format {
        Format::Json => emit(out, &json(&diags)),
        Format::Text => diags.iter().try_for_each(|d| emit(out, &format!("{d}\n"))),
    }
}

/// Parses and validates an activity model; reports and fails on errors.
fn load_ad(out: &mut dyn Write, path: &Path, format: Format) -> Result<AdModel, Failure> {
    let text = read(path)?;
    let m = match parse_adm(&text) {
        Ok(m) => m,
        Err(e) => {
            report_issues(out, &adm_issues(&e, path), format)?;
            return Err(Failure::Reported);
        }
    };
    let diags = validate(&m);
    if has_errors(&diags) {
        report_diagnostics(out, &diags, format)?;
        return Err(Failure::Reported);
    }
    Ok(m)
}

fn load_bpmn(out: &mut dyn Write, path: &Path, format: Format) -> Result<BpmnModel, Failure> {
    let text = read(path)?;
    let m = match read_bpmn_xml(&text) {
        Ok(m) => m,
        Err(e) => {
            let issue = Issue {
                code: "BPMN-XML".into(),
                element: path.display().to_string(),
                message: e.to_string(),
            };
            report_issues(out, &[issue], format)?;
            return Err(Failure::Reported);
        }
    };
    let diags = wellformed(&m);
    if !diags.is_empty() {
        let issues: Vec<Issue> = diags
            .iter()
            .map(|d| Issue {
                code: d.code.to_string(),
                element: d.element.to_string(),
                message: d.message.clone(),
            })
            .collect();
        report_issues(out, &issues, format)?;
        return Err(Failure::Reported);
    }
    Ok(m)
}

fn load_script(path: Option<&Path>) -> Result<EventScript, Failure> {
    match path {
        None => Ok(EventScript::default()),
        Some(p) => parse_event_script(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
    }
}

fn is_bpmn(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"))
}

fn print_trace(out: &mut dyn Write, t: &ExecutionTrace, format: Format) -> Res {
    match format {
        Format::Json => emit(out, &json(t)),
        Format::Text => emit(out, &t.to_string()),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Res {
    match cmd {
        Command::Validate { model, format } => {
            let text = read(&model)?;
            let m = match parse_adm(&text) {
                Ok(m) => m,
                Err(e) => {
                    report_issues(out, &adm_issues(&e, &model), format.format)?;
                    return Err(Failure::Reported);
                }
            };
            let diags = validate(&m);
            if !diags.is_empty() || format.format == Format::Json {
                report_diagnostics(out, &diags, format.format)?;
            }
            if has_errors(&diags) {
                Err(Failure::Reported)
            } else {
                Ok(())
            }
        }
        Command::Transform {
            model,
            output,
            trace,
            dot,
            format,
        } => {
            let ad = load_ad(out, &model, format.format)?;
            let (bpmn, tr) = transform(&ad).map_err(|e| {
                let _ = emit(out, &format!("{e}\n"));
                Failure::Reported
            })?;
            let xml = write_bpmn_xml(&bpmn).map_err(|e| {
                let _ = emit(out, &format!("{e}\n"));
                Failure::Reported
            })?;
            if let Some(p) = trace {
                let text = match format.format {
                    Format::Text => tr.report(),
                    Format::Json => json(&tr),
                };
                write_file(&p, &text)?;
            }
            if let Some(p) = dot {
                write_file(&p, &bpmn_to_dot(&bpmn))?;
            }
            match output {
                Some(p) => write_file(&p, &xml),
                None => emit(out, &xml),
            }
        }
        Command::Simulate {
            model,
            events,
            seed,
            max_steps,
            format,
        } => {
            let script = load_script(events.as_deref())?;
            let trace = if is_bpmn(&model) {
                let m = load_bpmn(out, &model, format.format)?;
                exec::run(&BpmnMachine::new(&m, &script), max_steps, seed)
            } else {
                let m = load_ad(out, &model, format.format)?;
                exec::run(&AdMachine::new(&m, &script), max_steps, seed)
            };
            print_trace(out, &trace, format.format)?;
            match trace.end {
                EndKind::Halted(_) => Err(Failure::Reported),
                _ => Ok(()),
            }
        }
        Command::Equiv {
            model,
            bpmn,
            events,
            depth,
            format,
        } => {
            let script = load_script(events.as_deref())?;
            let ad = load_ad(out, &model, format.format)?;
            let target = load_bpmn(out, &bpmn, format.format)?;
            let (reference, tr) = transform(&ad).map_err(|e| {
                let _ = emit(out, &format!("{e}\n"));
                Failure::Reported
            })?;
            let labels = tr.label_map(&ad, &reference);
            let report = match exec::equivalent(&ad, &target, &labels, &script, depth) {
                Ok(r) => r,
                Err(e) => {
                    emit(out, &format!("error: {e}\n"))?;
                    return Err(Failure::Reported);
                }
            };
            match format.format {
                Format::Text => emit(out, &report.to_string())?,
                Format::Json => emit(out, &json(&report))?,
            }
            if report.equivalent {
                Ok(())
            } else {
                Err(Failure::Reported)
            }
        }
        Command::ExportDot { model, output } => {
            let text = if is_bpmn(&model) {
                bpmn_to_dot(&load_bpmn(out, &model, Format::Text)?)
            } else {
                ad_to_dot(&load_ad(out, &model, Format::Text)?)
            };
            match output {
                Some(p) => write_file(&p, &text),
                None => emit(out, &text),
            }
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Reported) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}
