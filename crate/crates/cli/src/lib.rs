//! `mfat` command line: analyses at one fidelity, LF/HF comparison cases,
//! optimization runs and config validation. Every command writes its
//! reports (CSV, JSON, SVG) into the output directory.
//!
//! Exit status: 0 on success, 2 for configuration or input errors, 3 when an
//! analysis fails, 1 for I/O errors. Failures print `error[<category>]: ..`
//! on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mfat_core::beam::analysis::{modal, static_solve, NewtonOptions, SolveMode};
use mfat_core::beam::model::DOF_PER_NODE;
use mfat_core::constraints::{evaluate_raw, full_length, layout};
use mfat_core::fidelity::{make_hf, make_lf, WingModel};
use mfat_core::harness::compare::{compare_aeroelastic, compare_modal, compare_static, cruise_flow, ModelPair, Thresholds};
use mfat_core::harness::report::{comparison_csv, eigenvalue_csv, fmt12, matrix_csv, to_json, write_files};
use mfat_core::harness::svg::{eigenvalue_svg, mac_svg, scatter_svg, trace_svg};
use mfat_core::mfopt::{baseline_optimize, trmm_optimize};
use mfat_core::{DesignVector, Error, Result, RunConfig};
use nalgebra::DVector;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mfat", version, about = "Multi-fidelity aeroelastic tailoring of composite wingboxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory; overrides MFAT_OUTPUT_DIR and the config.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Design vector (JSON array, or an optimizer report with an `x` field);
    /// defaults to the config's initial design.
    #[arg(long)]
    pub design: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisCase {
    Static,
    Modal,
    Buckling,
    Flutter,
    Trim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fidelity {
    Lf,
    Hf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Trmm,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Benchmark,
    Toy,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one analysis at one fidelity.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        case: AnalysisCase,
        #[arg(long, value_enum, default_value = "lf")]
        fidelity: Fidelity,
        /// Modes reported by the modal case.
        #[arg(long, default_value_t = 10)]
        modes: usize,
    },
    /// Compare LF against HF: 1 static tip loads, 2 structural modes,
    /// 3 aeroelastic eigenvalues at a flow point.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        #[arg(long, default_value_t = 8)]
        modes: usize,
        /// Flow speed of case 3 (m/s).
        #[arg(long, default_value_t = 140.0)]
        speed: f64,
        /// Mach number of case 3.
        #[arg(long, default_value_t = 0.69)]
        mach: f64,
    },
    /// Minimize mass subject to the full constraint vector.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "trmm")]
        method: Method,
    },
    /// Parse and check a config; prints the problem dimensions.
    ValidateConfig { path: PathBuf },
    /// Print the config JSON Schema.
    Schema,
    /// Print a built-in config.
    InitConfig {
        #[arg(long, value_enum, default_value = "toy")]
        preset: Preset,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        "config" | "input" => 2,
        "analysis" => 3,
        _ => 1,
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze { common, case, fidelity, modes } => {
            let ctx = Context::new(&common)?;
            let model = match fidelity {
                Fidelity::Lf => make_lf(&ctx.config)?,
                Fidelity::Hf => make_hf(&ctx.config)?,
            };
            let design = ctx.design(&model)?;
            let files = analyze(&model, &design, case, fidelity, modes)?;
            ctx.emit(&files)
        }
        Command::Compare { common, case, modes, speed, mach } => {
            let ctx = Context::new(&common)?;
            let pair = ModelPair::new(&ctx.config)?;
            let design = ctx.design(&pair.lf)?;
            let th = Thresholds::default();
            let report = match case {
                1 => compare_static(&pair, Some(&design), &th)?,
                2 => compare_modal(&pair, Some(&design), modes, &th)?,
                _ => compare_aeroelastic(&pair, Some(&design), &cruise_flow(&ctx.config, speed, mach), modes, &th)?,
            };
            for r in &report.rows {
                println!("{:<28} lf {:>18} hf {:>18} rel {:>18}", r.name, fmt12(r.lf), fmt12(r.hf), fmt12(r.rel_error));
            }
            let stem = format!("case{case}");
            let mut files = vec![
                (format!("{stem}.json"), to_json(&report)?),
                (format!("{stem}.csv"), comparison_csv(&report)),
            ];
            if !report.lf_eigenvalues.is_empty() {
                files.push((format!("{stem}_eigenvalues.csv"), eigenvalue_csv(&report)));
                files.push((format!("{stem}_eigenvalues.svg"), eigenvalue_svg(&report)));
            }
            if let Some(m) = &report.mac {
                files.push((format!("{stem}_mac.csv"), matrix_csv(m)));
                files.push((format!("{stem}_mac.svg"), mac_svg(m, &format!("MAC: {}", report.title))));
            }
            ctx.emit(&files)
        }
        Command::Optimize { common, method } => {
            let ctx = Context::new(&common)?;
            let lf = make_lf(&ctx.config)?;
            let hf = make_hf(&ctx.config)?;
            let x0 = ctx.design(&lf)?.values;
            let report = match method {
                Method::Trmm => trmm_optimize(&x0, &lf, &hf, &ctx.config.optimizer)?,
                Method::Baseline => baseline_optimize(&x0, &hf, &ctx.config.optimizer)?,
            };
            println!(
                "{}: f {} max violation {} after {} iterations, {} HF / {} LF evaluations ({:?})",
                report.method,
                fmt12(report.f),
                fmt12(report.max_violation),
                report.iterations,
                report.hf_evaluations,
                report.lf_evaluations,
                report.termination
            );
            let stem = format!("optimize_{}", report.method);
            let files = vec![
                (format!("{stem}.json"), to_json(&report)?),
                (format!("{stem}_trace.csv"), report.trace_csv()),
                (format!("{stem}_trace.svg"), trace_svg(&report)),
            ];
            ctx.emit(&files)
        }
        Command::ValidateConfig { path } => {
            let config = RunConfig::load(&path)?;
            let lf = make_lf(&config)?;
            let hf = make_hf(&config)?;
            let n_p = config.panels.n_panels();
            println!(
                "{}: ok; {} design panels, {} variables, {} load cases, {} constraints (LF {}, HF {})",
                path.display(),
                n_p,
                DesignVector::initial(&lf).len(),
                config.loadcases.cases.len(),
                full_length(config.loadcases.cases.len(), n_p, lf.n_regions(), lf.n_bays()),
                layout(&lf).len(),
                layout(&hf).len()
            );
            Ok(())
        }
        Command::Schema => {
            print!("{}", RunConfig::schema_json());
            Ok(())
        }
        Command::InitConfig { preset } => {
            let c = match preset {
                Preset::Benchmark => RunConfig::benchmark(),
                Preset::Toy => RunConfig::toy(),
            };
            print!("{}", c.to_json()?);
            Ok(())
        }
    }
}

struct Context {
    config: RunConfig,
    out: PathBuf,
    design: Option<PathBuf>,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let config = RunConfig::load(&common.config)?;
        let out = common.output.clone().unwrap_or_else(|| config.output_dir());
        Ok(Self { config, out, design: common.design.clone() })
    }

    fn design(&self, model: &WingModel) -> Result<DesignVector> {
        let Some(path) = &self.design else { return Ok(DesignVector::initial(model)) };
        let d = read_design(path)?;
        d.validate(model.n_panels()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(d)
    }

    fn emit(&self, files: &[(String, String)]) -> Result<()> {
        for p in write_files(&self.out, files)? {
            println!("wrote {}", p.display());
        }
        Ok(())
    }
}

/// Reads a plain JSON array of variables or any object with an `x` array.
pub fn read_design(path: &Path) -> Result<DesignVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let arr = v.get("x").unwrap_or(&v);
    let x: Vec<f64> = serde_json::from_value(arr.clone())
        .map_err(|e| Error::Config(format!("{}: expected an array of numbers: {e}", path.display())))?;
    Ok(DesignVector { values: DVector::from_vec(x) })
}

/// Named rows of numbers with a fixed column header.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub analysis: String,
    pub fidelity: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl Table {
    fn new(analysis: &str, fidelity: Fidelity, columns: &[&str]) -> Self {
        let fidelity = match fidelity {
            Fidelity::Lf => "lf",
            Fidelity::Hf => "hf",
        };
        Self { analysis: analysis.into(), fidelity: fidelity.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.rows.push((name.into(), values));
    }

    /// `name,<columns>`; non-finite values are left empty.
    pub fn csv(&self) -> String {
        let mut s = String::from("name");
        for c in &self.columns {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (name, vals) in &self.rows {
            s.push_str(name);
            for v in vals {
                s.push(',');
                if v.is_finite() {
                    s.push_str(&fmt12(*v));
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Runs `case` and returns the report files (name, contents).
pub fn analyze(model: &WingModel, design: &DesignVector, case: AnalysisCase, fidelity: Fidelity, modes: usize) -> Result<Vec<(String, String)>> {
    let panels = design.panels();
    let mut svg = None;
    let table = match case {
        AnalysisCase::Static => {
            let s = model.structure(&panels)?;
            let tip = DOF_PER_NODE * model.tip();
            let mut t = Table::new("static", fidelity, &["per_unit_load"]);
            for (name, dof) in [("tip_deflection_fz", 2), ("tip_twist_my", 4)] {
                let mut f = DVector::zeros(s.system.n_dof());
                f[tip + dof] = 1.0;
                let p = static_solve(&s.system, &f, SolveMode::Linear, &NewtonOptions::default())?;
                t.push(name, vec![p[tip + dof]]);
            }
            t
        }
        AnalysisCase::Modal => {
            let s = model.structure(&panels)?;
            let m = modal(&s.system, modes.min(s.system.n_free()))?;
            let mut t = Table::new("modal", fidelity, &["omega_rad_s", "frequency_hz"]);
            for (i, w) in m.omega.iter().enumerate() {
                t.push(format!("mode_{}", i + 1), vec![*w, w / (2.0 * std::f64::consts::PI)]);
            }
            t
        }
        AnalysisCase::Buckling => {
            let raw = evaluate_raw(model, design)?;
            let mut t = Table::new("buckling", fidelity, &["lowest_factor", "second_factor"]);
            for (lc, c) in raw.cases.iter().enumerate() {
                let name = &model.cases[lc].case.name;
                for (r, f) in c.b.iter().enumerate() {
                    let at = |k: usize| f.get(k).copied().unwrap_or(f64::NAN);
                    t.push(format!("{name}/region_{r}"), vec![at(0), at(1)]);
                }
            }
            t
        }
        AnalysisCase::Flutter => {
            let raw = evaluate_raw(model, design)?;
            let mut t = Table::new("flutter", fidelity, &["re", "im"]);
            let mut sets: Vec<(String, Vec<[f64; 2]>)> = vec![];
            for (lc, c) in raw.cases.iter().enumerate() {
                let name = &model.cases[lc].case.name;
                let pts: Vec<[f64; 2]> = c.ds.iter().filter(|z| z.im >= 0.0).map(|z| [z.re, z.im]).collect();
                for (i, z) in pts.iter().enumerate() {
                    t.push(format!("{name}/eig_{i}"), z.to_vec());
                }
                sets.push((name.clone(), pts));
            }
            let empty = (String::new(), vec![]);
            let (a, b) = (sets.first().unwrap_or(&empty), sets.get(1).unwrap_or(&empty));
            svg = Some(scatter_svg("state-matrix eigenvalues", (&a.0, &a.1), (&b.0, &b.1)));
            t
        }
        AnalysisCase::Trim => {
            let raw = evaluate_raw(model, design)?;
            let mut t = Table::new(
                "trim",
                fidelity,
                &["alpha_deg", "tip_deflection", "tip_twist_deg", "residual", "iterations", "aileron_effectiveness", "max_local_aoa_deg"],
            );
            let tip = DOF_PER_NODE * model.tip();
            for (lc, c) in raw.cases.iter().enumerate() {
                let e = &c.equilibrium;
                let aoa = c.aoa.iter().fold(f64::NEG_INFINITY, |m, a| m.max(a.abs()));
                t.push(
                    model.cases[lc].case.name.clone(),
                    vec![
                        e.alpha.to_degrees(),
                        e.p[tip + 2],
                        e.p[tip + 4].to_degrees(),
                        e.residual,
                        e.iterations as f64,
                        c.ae.unwrap_or(f64::NAN),
                        aoa.to_degrees(),
                    ],
                );
            }
            t
        }
    };
    for (name, vals) in &table.rows {
        let cells: Vec<String> = vals.iter().map(|v| fmt12(*v)).collect();
        println!("{name:<24} {}", cells.join("  "));
    }
    let stem = format!("analyze_{}_{}", table.analysis, table.fidelity);
    let mut files = vec![(format!("{stem}.csv"), table.csv()), (format!("{stem}.json"), to_json(&table)?)];
    if let Some(s) = svg {
        files.push((format!("{stem}.svg"), s));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv_leaves_missing_values_empty() {
        let mut t = Table::new("buckling", Fidelity::Lf, &["a", "b"]);
        t.push("r0", vec![1.5, f64::NAN]);
        assert_eq!(t.csv(), "name,a,b\nr0,1.50000000000e0,\n");
    }

    #[test]
    fn error_categories_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 1);
    }

    #[test]
    fn design_files_accept_arrays_and_reports() {
        let dir = std::env::temp_dir().join(format!("mfat-cli-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let a = dir.join("a.json");
        std::fs::write(&a, "[0.1, 0.2]").unwrap();
        let b = dir.join("b.json");
        std::fs::write(&b, r#"{"method": "trmm", "x": [0.3]}"#).unwrap();
        assert_eq!(read_design(&a).unwrap().values.as_slice(), &[0.1, 0.2]);
        assert_eq!(read_design(&b).unwrap().values.as_slice(), &[0.3]);
        std::fs::write(&a, r#"{"y": 1}"#).unwrap();
        assert_eq!(read_design(&a).unwrap_err().category(), "config");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn parse_rejects_unknown_compare_case() {
        assert!(Cli::try_parse_from(["mfat", "compare", "--config", "c.json", "--case", "4"]).is_err());
        assert!(Cli::try_parse_from(["mfat", "analyze", "--config", "c.json", "--case", "trim", "--fidelity", "hf"]).is_ok());
    }
}
