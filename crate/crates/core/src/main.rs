//! Command line front end. Every subcommand is translated into the
//! same config structure that `run --config` reads from TOML, so the
//! two entry points cannot drift apart. Reports are byte-for-byte
//! deterministic; timing goes to stderr only.
//!
//! Exit codes: 0 verdict holds, 1 verdict fails, 2 usage or config
//! error, 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use curvemod::config::{
    load_config, ExpectSpec, GeometrySpec, HypothesisSpec, MapSpec, ModulusSpec, RunConfig,
};
use curvemod::runner::execute;
use curvemod::{Error, Result};

#[derive(Parser)]
#[command(name = "curvemod", version, about = "dilatation, modulus, and singularity diagnostics")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write tab-separated plot data here.
    #[arg(long, global = true)]
    plot_data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Gallery map name (identity, ring, folding, inversion, radial_power,
    /// planar_square, diagonal, constant).
    #[arg(long)]
    map: String,
    /// Radial stretch exponent for the ring map.
    #[arg(long)]
    alpha: Option<f64>,
    /// Exponent for the radial power map.
    #[arg(long)]
    exponent: Option<f64>,
    /// Comma-separated diagonal entries for the diagonal map.
    #[arg(long)]
    diag: Option<String>,
    /// Comma-separated output value for the constant map.
    #[arg(long)]
    value: Option<String>,
}

impl MapArgs {
    fn spec(&self, n: usize) -> Result<MapSpec> {
        Ok(MapSpec {
            gallery: Some(self.map.clone()),
            dim: Some(n),
            alpha: self.alpha,
            exponent: self.exponent,
            diagonal: self.diag.as_deref().map(parse_floats).transpose()?,
            value: self.value.as_deref().map(parse_floats).transpose()?,
            ..MapSpec::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute a TOML config file.
    Run {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify the singular point of a map from sphere data.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        /// Ambient dimension.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Singular point: one scalar broadcast to all coordinates, or a
        /// comma-separated list.
        #[arg(long, default_value = "0")]
        b: String,
        /// Outermost probe radius.
        #[arg(long, default_value_t = 0.3)]
        rmax: f64,
        /// Number of dyadic probe levels.
        #[arg(long, default_value_t = 12)]
        levels: usize,
        /// Fail (exit 1) unless the verdict equals this.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Bracket the modulus of a ring or cap curve family.
    Modulus {
        /// Family shape: ring or cap.
        #[arg(long, default_value = "ring")]
        descriptor: String,
        /// Inner radius.
        #[arg(long)]
        a: f64,
        /// Outer radius.
        #[arg(long)]
        b_outer: f64,
        /// Ambient dimension.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Grid cells per axis.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Number of discrete curves.
        #[arg(long, default_value_t = 128)]
        curves: usize,
        /// Fail (exit 1) unless the bracket contains this value.
        #[arg(long)]
        expect: Option<f64>,
        /// Relative slack for the containment check.
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Pointwise dilatations, or the weighted shell norm over an annulus.
    Dilatation {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Evaluation point (comma-separated, or one scalar broadcast).
        #[arg(long)]
        point: Option<String>,
        /// Annulus center.
        #[arg(long, default_value = "0")]
        b: String,
        #[arg(long)]
        rin: Option<f64>,
        #[arg(long)]
        rout: Option<f64>,
        /// Weight exponent for the shell norm.
        #[arg(long)]
        q: Option<f64>,
        /// Fail (exit 1) unless the divergence flag equals this.
        #[arg(long)]
        expect_diverging: Option<bool>,
    },
    /// Check a weighted annulus growth condition for a majorant field.
    Integrals {
        /// Majorant name (one, constant, log_inverse_distance,
        /// log_inverse_power, inverse_distance).
        #[arg(long)]
        majorant: String,
        /// Power for log_inverse_power.
        #[arg(long)]
        power: Option<f64>,
        /// Value for the constant majorant.
        #[arg(long)]
        value: Option<f64>,
        /// Weight name (one, constant, log_weight, inverse_t).
        #[arg(long, default_value = "one")]
        weight: String,
        /// Value for the constant weight.
        #[arg(long)]
        weight_value: Option<f64>,
        /// Budget constant on the right-hand side.
        #[arg(long)]
        amount: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        eps0: f64,
        /// Condition kind: fixed or log.
        #[arg(long, default_value = "fixed")]
        condition: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "0")]
        b: String,
        /// Fail (exit 1) unless satisfaction equals this.
        #[arg(long)]
        expect_satisfied: Option<bool>,
    },
    /// Estimate the normalized mean oscillation of a majorant field.
    Fmo {
        #[arg(long)]
        majorant: String,
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        value: Option<f64>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "0")]
        b: String,
        #[arg(long, default_value_t = 0.25)]
        rmax: f64,
        #[arg(long, default_value_t = 12)]
        levels: usize,
        /// Fail (exit 1) unless the verdict equals this.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Check the pushforward modulus inequality for a map on a family.
    Poletskii {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value = "ring")]
        descriptor: String,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b_outer: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        curves: Option<usize>,
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Compare sphere maxima against a growth envelope.
    Growth {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value = "0")]
        b: String,
        /// Envelope kind: power, log_power, log_power_limit.
        #[arg(long, default_value = "log_power")]
        envelope: String,
        /// Envelope constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Envelope exponent.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.25)]
        rmax: f64,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Fail (exit 1) unless the envelope check equals this.
        #[arg(long)]
        expect_satisfied: Option<bool>,
    },
    /// Trace the shell-modulus chain bound and its divergence flag.
    #[command(name = "lemma1")]
    Lemma1 {
        /// Dilatation lower bound along the chain.
        #[arg(long)]
        k0: u32,
        /// Budget constant in the upper bound.
        #[arg(long)]
        amount: f64,
        /// Log-power in the upper bound.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Inner radius of the traced shells.
        #[arg(long)]
        r: f64,
        /// Number of automatic outer-radius samples.
        #[arg(long, default_value_t = 24)]
        a_count: usize,
        /// Fail (exit 1) unless the divergence flag equals this.
        #[arg(long)]
        expect_diverging: Option<bool>,
    },
    /// Run the full ring-map example suite.
    #[command(name = "verify-theorem4")]
    VerifyTheorem4 {
        /// Weight exponent for the shell norm.
        #[arg(long)]
        q: f64,
        /// Growth envelope exponent.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Override the derived stretch exponent (diagnostic).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the full folding-map example suite.
    #[command(name = "verify-theorem5")]
    VerifyTheorem5 {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {part:?} in {s:?}")))
        })
        .collect()
}

/// One scalar broadcasts to all coordinates; a comma list must match
/// the dimension exactly.
fn parse_point(s: &str, n: usize) -> Result<Vec<f64>> {
    let vals = parse_floats(s)?;
    if vals.len() == 1 {
        return Ok(vec![vals[0]; n]);
    }
    if vals.len() != n {
        return Err(Error::Config(format!(
            "point {s:?} has {} coordinates, expected {n}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn build_config(command: &Command) -> Result<RunConfig> {
    let config = match command {
        Command::Run { config } => load_config(config)?,
        Command::Classify { map, n, b, rmax, levels, expect } => RunConfig {
            command: "classify".into(),
            map: Some(map.spec(*n)?),
            geometry: Some(GeometrySpec {
                dim: Some(*n),
                center: Some(parse_point(b, *n)?),
                r_max: Some(*rmax),
                levels: Some(*levels),
                ..GeometrySpec::default()
            }),
            expect: expect.as_ref().map(|v| ExpectSpec {
                verdict: Some(v.clone()),
                ..ExpectSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::Modulus { descriptor, a, b_outer, n, grid, curves, expect, rel_tol } => {
            RunConfig {
                command: "modulus".into(),
                geometry: Some(GeometrySpec {
                    dim: Some(*n),
                    r_inner: Some(*a),
                    r_outer: Some(*b_outer),
                    grid: Some(*grid),
                    curves: Some(*curves),
                    ..GeometrySpec::default()
                }),
                modulus: Some(ModulusSpec {
                    descriptor: Some(descriptor.clone()),
                    ..ModulusSpec::default()
                }),
                expect: expect.map(|value| ExpectSpec {
                    value: Some(value),
                    rel_tol: *rel_tol,
                    ..ExpectSpec::default()
                }),
                ..RunConfig::default()
            }
        }
        Command::Dilatation { map, n, point, b, rin, rout, q, expect_diverging } => RunConfig {
            command: "dilatation".into(),
            map: Some(map.spec(*n)?),
            geometry: Some(GeometrySpec {
                dim: Some(*n),
                point: point.as_deref().map(|s| parse_point(s, *n)).transpose()?,
                center: Some(parse_point(b, *n)?),
                r_inner: *rin,
                r_outer: *rout,
                ..GeometrySpec::default()
            }),
            hypothesis: q.map(|q| HypothesisSpec { q: Some(q), ..HypothesisSpec::default() }),
            expect: expect_diverging.map(|e| ExpectSpec {
                diverging: Some(e),
                ..ExpectSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::Integrals {
            majorant,
            power,
            value,
            weight,
            weight_value,
            amount,
            eps,
            eps0,
            condition,
            n,
            b,
            expect_satisfied,
        } => RunConfig {
            command: "integrals".into(),
            geometry: Some(GeometrySpec {
                dim: Some(*n),
                center: Some(parse_point(b, *n)?),
                ..GeometrySpec::default()
            }),
            hypothesis: Some(HypothesisSpec {
                majorant: Some(majorant.clone()),
                majorant_power: *power,
                majorant_value: *value,
                weight: Some(weight.clone()),
                weight_value: *weight_value,
                amount: Some(*amount),
                eps: Some(*eps),
                eps0: Some(*eps0),
                condition: Some(condition.clone()),
                ..HypothesisSpec::default()
            }),
            expect: expect_satisfied.map(|e| ExpectSpec {
                satisfied: Some(e),
                ..ExpectSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::Fmo { majorant, power, value, n, b, rmax, levels, expect } => RunConfig {
            command: "fmo".into(),
            geometry: Some(GeometrySpec {
                dim: Some(*n),
                center: Some(parse_point(b, *n)?),
                r_max: Some(*rmax),
                levels: Some(*levels),
                ..GeometrySpec::default()
            }),
            hypothesis: Some(HypothesisSpec {
                majorant: Some(majorant.clone()),
                majorant_power: *power,
                majorant_value: *value,
                ..HypothesisSpec::default()
            }),
            expect: expect.as_ref().map(|v| ExpectSpec {
                verdict: Some(v.clone()),
                ..ExpectSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::Poletskii { map, descriptor, a, b_outer, n, grid, curves, directions } => {
            RunConfig {
                command: "poletskii".into(),
                map: Some(map.spec(*n)?),
                geometry: Some(GeometrySpec {
                    dim: Some(*n),
                    r_inner: Some(*a),
                    r_outer: Some(*b_outer),
                    grid: *grid,
                    curves: *curves,
                    directions: *directions,
                    ..GeometrySpec::default()
                }),
                modulus: Some(ModulusSpec {
                    descriptor: Some(descriptor.clone()),
                    ..ModulusSpec::default()
                }),
                ..RunConfig::default()
            }
        }
        Command::Growth { map, n, b, envelope, c, p, rmax, levels, expect_satisfied } => {
            RunConfig {
                command: "growth".into(),
                map: Some(map.spec(*n)?),
                geometry: Some(GeometrySpec {
                    dim: Some(*n),
                    center: Some(parse_point(b, *n)?),
                    r_max: Some(*rmax),
                    levels: Some(*levels),
                    ..GeometrySpec::default()
                }),
                hypothesis: Some(HypothesisSpec {
                    envelope: Some(envelope.clone()),
                    constant: Some(*c),
                    p: Some(*p),
                    ..HypothesisSpec::default()
                }),
                expect: expect_satisfied.map(|e| ExpectSpec {
                    satisfied: Some(e),
                    ..ExpectSpec::default()
                }),
                ..RunConfig::default()
            }
        }
        Command::Lemma1 { k0, amount, p, n, r, a_count, expect_diverging } => RunConfig {
            command: "lemma1".into(),
            geometry: Some(GeometrySpec {
                dim: Some(*n),
                r: Some(*r),
                a_count: Some(*a_count),
                ..GeometrySpec::default()
            }),
            hypothesis: Some(HypothesisSpec {
                k0: Some(*k0),
                amount: Some(*amount),
                p: Some(*p),
                ..HypothesisSpec::default()
            }),
            expect: expect_diverging.map(|e| ExpectSpec {
                diverging: Some(e),
                ..ExpectSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::VerifyTheorem4 { q, p, n, alpha } => RunConfig {
            command: "verify-theorem4".into(),
            geometry: Some(GeometrySpec { dim: Some(*n), ..GeometrySpec::default() }),
            hypothesis: Some(HypothesisSpec {
                q: Some(*q),
                p: Some(*p),
                alpha: *alpha,
                ..HypothesisSpec::default()
            }),
            ..RunConfig::default()
        },
        Command::VerifyTheorem5 { n } => RunConfig {
            command: "verify-theorem5".into(),
            geometry: Some(GeometrySpec { dim: Some(*n), ..GeometrySpec::default() }),
            ..RunConfig::default()
        },
    };
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool> {
    let config = build_config(&cli.command)?;
    let outcome = execute(&config)?;

    let output = config.output.clone().unwrap_or_default();
    match cli.out.clone().or(output.report) {
        Some(path) => fs::write(&path, &outcome.report)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", outcome.report),
    }
    if let Some(path) = cli.plot_data.clone().or(output.plot_data) {
        let text = outcome.plot.as_deref().unwrap_or("");
        fs::write(&path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(outcome.verdict_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = run(&cli);
    eprintln!("elapsed_ms={}", started.elapsed().as_millis());
    match result {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage_error() { 2 } else { 3 })
        }
    }
}
