//! crdi: build a configured Dirac solution, run the inversion, verify it and
//! export potentials, field strengths and rest-frame data.

mod config;

use clap::{Parser, Subcommand};
use config::RunConfig;
use crdi_core::geometry::{rotor_frame_connection, tetrad_from_rotor, SpinConnection};
use crdi_core::inversion::DerivMode;
use crdi_core::solutions::{fields_from_potential, rest_frame, Family};
use crdi_core::verify::{grid_report, normalize};
use crdi_core::{ChartKind, Error as CoreError};
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "crdi", version, about = "covariant relativistic dynamical inversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Invert the Dirac equation over the lattice and write the potential table
    Invert(CommonArgs),
    /// Run the verification suite over the random sample and write the report
    Verify(CommonArgs),
    /// Export E/B/J field strengths over the lattice
    Fields(CommonArgs),
    /// Export the rest-frame bundle (spinor, tetrad, spin connection)
    Frame(CommonArgs),
    /// Compute the normalization constant kappa
    Normalize(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    config: String,
    /// Output path (overrides the config's `out`)
    #[arg(long)]
    out: Option<String>,
    /// Derivative mode override
    #[arg(long, value_parser = parse_mode)]
    derivatives: Option<DerivMode>,
    /// Seed override for the random sample
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<DerivMode, String> {
    match s {
        "analytic" => Ok(DerivMode::Analytic),
        "fd" => Ok(DerivMode::Fd),
        other => Err(format!("unknown derivative mode '{other}' (analytic|fd)")),
    }
}

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_CROSS_PATH: u8 = 4;

fn exit_for(err: &CoreError) -> u8 {
    match err {
        CoreError::SingularSpinor { .. } => EXIT_SINGULAR,
        CoreError::PathDisagreement { .. } | CoreError::ConstraintViolation { .. } => {
            EXIT_CROSS_PATH
        }
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&RunConfig, &Setup) -> Result<Report, (u8, String)>) =
        match &cli.command {
            Command::Invert(a) => (a, cmd_invert),
            Command::Verify(a) => (a, cmd_verify),
            Command::Fields(a) => (a, cmd_fields),
            Command::Frame(a) => (a, cmd_frame),
            Command::Normalize(a) => (a, cmd_normalize),
        };

    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = args.seed {
        cfg.grid.seed = seed;
    }
    if let Some(mode) = args.derivatives {
        cfg.derivatives = mode;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }

    let family = match Family::build(&cfg.solution) {
        Ok(f) => Arc::new(f),
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if family.chart().kind != cfg.grid.chart.kind {
        eprintln!(
            "config error: family lives on the {:?} chart but the grid is {:?}",
            family.chart().kind,
            cfg.grid.chart.kind
        );
        return ExitCode::from(EXIT_CONFIG);
    }

    let setup = Setup { family };
    match run(&cfg, &setup) {
        Ok(report) => {
            if let Some(text) = report.stdout {
                println!("{text}");
            }
            ExitCode::from(report.exit)
        }
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

struct Setup {
    family: Arc<Family>,
}

struct Report {
    exit: u8,
    stdout: Option<String>,
}

fn write_out(cfg: &RunConfig, default_name: &str, contents: &str) -> Result<String, (u8, String)> {
    let path = cfg.out.clone().unwrap_or_else(|| default_name.to_string());
    let mut f = std::fs::File::create(&path)
        .map_err(|e| (EXIT_CONFIG, format!("cannot write {path}: {e}")))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| (EXIT_CONFIG, format!("cannot write {path}: {e}")))?;
    Ok(path)
}

fn coord_labels(kind: ChartKind) -> [&'static str; 4] {
    match kind {
        ChartKind::Cartesian => ["t", "x", "y", "z"],
        ChartKind::Spherical => ["t", "r", "theta", "phi"],
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_invert(cfg: &RunConfig, s: &Setup) -> Result<Report, (u8, String)> {
    let points = cfg
        .grid
        .lattice()
        .map_err(|e| (exit_for(&e), format!("grid error: {e}")))?;
    let labels = coord_labels(cfg.grid.chart.kind);
    let (a1, a2, a3) = match cfg.grid.chart.kind {
        ChartKind::Cartesian => ("A_x", "A_y", "A_z"),
        ChartKind::Spherical => ("A_r", "A_theta", "A_phi"),
    };
    let mut csv = format!(
        "{},{},{},{},A_t,{a1},{a2},{a3}\n",
        labels[0], labels[1], labels[2], labels[3]
    );
    let rows = crdi_core::verify::map_points(&points, |p| {
        s.family.invert(p, cfg.derivatives).map(|inv| inv.a_coord)
    });
    for (p, row) in points.iter().zip(rows) {
        let a = row.map_err(|e| (exit_for(&e), format!("inversion failed: {e}")))?;
        let mut line = String::new();
        for c in p.x {
            line.push_str(&fmt(c));
            line.push(',');
        }
        line.push_str(&a.map(fmt).join(","));
        line.push('\n');
        csv.push_str(&line);
    }
    let path = write_out(cfg, "potential.csv", &csv)?;
    Ok(Report {
        exit: 0,
        stdout: Some(format!("wrote {} rows to {path}", points.len())),
    })
}

fn cmd_verify(cfg: &RunConfig, s: &Setup) -> Result<Report, (u8, String)> {
    let report = grid_report(
        &s.family,
        &cfg.grid,
        &cfg.tolerances,
        cfg.derivatives,
        cfg.perturb_a_t,
    )
    .map_err(|e| (exit_for(&e), format!("verification sweep failed: {e}")))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| (EXIT_CONFIG, format!("serialization: {e}")))?;
    let path = write_out(cfg, "report.json", &json)?;
    let status = if report.pass { "PASS" } else { "FAIL" };
    Ok(Report {
        exit: if report.pass { 0 } else { EXIT_VERIFY_FAILED },
        stdout: Some(format!(
            "{status}: max dirac {:.3e} @ {:?}; report at {path}",
            report.max_dirac.value, report.max_dirac.at
        )),
    })
}

fn cmd_fields(cfg: &RunConfig, s: &Setup) -> Result<Report, (u8, String)> {
    let points = cfg
        .grid
        .lattice()
        .map_err(|e| (exit_for(&e), format!("grid error: {e}")))?;
    let a_field = s.family.potential(cfg.derivatives);
    let labels = coord_labels(cfg.grid.chart.kind);
    let comp = match cfg.grid.chart.kind {
        ChartKind::Cartesian => ["x", "y", "z"],
        ChartKind::Spherical => ["r", "theta", "phi"],
    };
    let mut csv = format!(
        "{},{},{},{},E_{},E_{},E_{},B_{},B_{},B_{},J_{}\n",
        labels[0], labels[1], labels[2], labels[3],
        comp[0], comp[1], comp[2], comp[0], comp[1], comp[2], comp[2]
    );
    let rows = crdi_core::verify::map_points(&points, |p| fields_from_potential(&a_field, p));
    for (p, row) in points.iter().zip(rows) {
        let fs = row.map_err(|e| (exit_for(&e), format!("field extraction failed: {e}")))?;
        let mut line = String::new();
        for c in p.x {
            line.push_str(&fmt(c));
            line.push(',');
        }
        let vals = [fs.e[0], fs.e[1], fs.e[2], fs.b[0], fs.b[1], fs.b[2], fs.j[2]];
        line.push_str(&vals.map(fmt).join(","));
        line.push('\n');
        csv.push_str(&line);
    }
    let path = write_out(cfg, "fields.csv", &csv)?;
    Ok(Report {
        exit: 0,
        stdout: Some(format!("wrote {} rows to {path}", points.len())),
    })
}

#[derive(serde::Serialize)]
struct FrameSample {
    coords: [f64; 4],
    psi_rf_re: [[f64; 4]; 4],
    psi_rf_im: [[f64; 4]; 4],
    tetrad_up: [[f64; 4]; 4],
    omega: Vec<[f64; 4]>, // rows (i, j, mu, value) for nonzero components
}

fn cmd_frame(cfg: &RunConfig, s: &Setup) -> Result<Report, (u8, String)> {
    let bundle =
        rest_frame(&s.family).map_err(|e| (exit_for(&e), format!("rest frame: {e}")))?;
    let points = cfg
        .grid
        .lattice()
        .map_err(|e| (exit_for(&e), format!("grid error: {e}")))?;
    let psi_rf = bundle.psi_rf();
    let mut samples = Vec::new();
    for p in &points {
        let m = psi_rf.psi(p);
        let base = crdi_core::TetradField::Holonomic
            .at(p)
            .map_err(|e| (exit_for(&e), format!("tetrad: {e}")))?;
        let tet = tetrad_from_rotor(&bundle.frame_rotor, &base, p)
            .map_err(|e| (exit_for(&e), format!("tetrad: {e}")))?;
        let om = rotor_frame_connection(&bundle.frame_rotor, &SpinConnection::zero(), p)
            .map_err(|e| (exit_for(&e), format!("connection: {e}")))?;
        let mut omega = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                for mu in 0..4 {
                    if om.omega[i][j][mu].abs() > 1e-14 {
                        omega.push([i as f64, j as f64, mu as f64, om.omega[i][j][mu]]);
                    }
                }
            }
        }
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                re[i][j] = m.m[i][j].re;
                im[i][j] = m.m[i][j].im;
            }
        }
        samples.push(FrameSample {
            coords: p.x,
            psi_rf_re: re,
            psi_rf_im: im,
            tetrad_up: tet.e_up,
            omega,
        });
    }
    let json = serde_json::to_string_pretty(&samples)
        .map_err(|e| (EXIT_CONFIG, format!("serialization: {e}")))?;
    let path = write_out(cfg, "frame.json", &json)?;
    Ok(Report {
        exit: 0,
        stdout: Some(format!("wrote {} samples to {path}", samples.len())),
    })
}

fn cmd_normalize(cfg: &RunConfig, s: &Setup) -> Result<Report, (u8, String)> {
    let kappa = normalize(&s.family, 1e-8)
        .map_err(|e| (exit_for(&e), format!("normalization: {e}")))?;
    if cfg.out.is_some() {
        write_out(cfg, "kappa.json", &format!("{{\"kappa\": {}}}\n", fmt(kappa)))?;
    }
    Ok(Report {
        exit: 0,
        stdout: Some(format!("kappa = {}", fmt(kappa))),
    })
}
