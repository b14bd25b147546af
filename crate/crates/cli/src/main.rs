use std::path::{Path, PathBuf};
use std::process::ExitCode;

use certjulia::certificate::{estimate_k2_c, PartialCertificate, CoverRef};
use certjulia::oracles::{conformance_check, SampleSpec};
use certjulia::render::{benchmark_scaling, render_certified, render_dem, render_escape_time};
use certjulia::{presets, validate, Certificate, ComplexDyadic, Decider, Error, MapSpec, Mode, Region, RenderOutput};
use clap::{Parser, Subcommand, ValueEnum};

/// Certified and baseline renderers for Julia sets.
#[derive(Parser)]
#[command(name = "certjulia", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Certified,
    Escape,
    Dem,
}

#[derive(Subcommand)]
enum Command {
    /// Render a region to a 1-bit PGM.
    Render {
        #[arg(long)]
        map: PathBuf,
        /// Required in certified mode.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// `x0,y0,x1,y1`, snapped outward to the pixel grid.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "certified")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Iteration cap for the baseline modes.
        #[arg(long, default_value_t = 200)]
        max_iter: u32,
        /// Render even if the certificate fails validation.
        #[arg(long)]
        allow_unvalidated: bool,
    },
    /// Time verdicts at several precisions and fit a power law in n.
    Bench {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "8,12,16,20")]
        n_list: Vec<u32>,
        /// One `re,im` dyadic point per line.
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate against its map and print the report.
    Validate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Re-estimate K2 and C by sampling orbits and write a new certificate.
    Certify {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in map and certificate (`circle` or `segment`).
    Preset {
        name: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample points at known distances from a built-in Julia set and count
    /// contract violations of the decider.
    Check {
        name: String,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        n_list: Vec<u32>,
        #[arg(long, default_value_t = 10000)]
        per_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_INVALID: u8 = 2;
const EXIT_PRECISION: u8 = 3;

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::CertificateInvalid(_) => EXIT_INVALID,
                Error::Eval(certjulia::EvalError::PrecisionExhausted { .. }) => EXIT_PRECISION,
                _ => 1,
            })
        }
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn check_certificate(cert: &Certificate, map: &MapSpec, allow: bool) -> Result<(), Error> {
    let report = validate(cert, map);
    if report.overall() {
        return Ok(());
    }
    let failed: Vec<String> = report.failures().map(|c| format!("{} ({})", c.name, c.witness)).collect();
    if allow {
        eprintln!("warning: rendering with an unvalidated certificate: {}", failed.join("; "));
        Ok(())
    } else {
        Err(Error::CertificateInvalid(failed.join("; ")))
    }
}

fn pgm_with_comment(out: &RenderOutput, comment: &str) -> Vec<u8> {
    let pgm = out.bitmap.to_pgm();
    let mut v = b"P4\n".to_vec();
    v.extend_from_slice(format!("# {comment}\n").as_bytes());
    v.extend_from_slice(&pgm[3..]);
    v
}

fn error_mask_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".errors.pgm");
    PathBuf::from(s)
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Render { map, cert, region, n, mode, threads, out, stats, max_iter, allow_unvalidated } => {
            let map = MapSpec::load(&map)?;
            let region = Region::parse(&region)?;
            let (output, mode) = match mode {
                ModeArg::Certified => {
                    let path = cert.ok_or_else(|| Error::Usage("--cert is required in certified mode".into()))?;
                    let cert = Certificate::load(&path)?;
                    check_certificate(&cert, &map, allow_unvalidated)?;
                    let decider = Decider::new(&cert, &map);
                    (render_certified(&decider, &region, n, threads), Mode::Certified)
                }
                ModeArg::Escape => (render_escape_time(&map, &region, n, max_iter, threads)?, Mode::EscapeTime),
                ModeArg::Dem => (render_dem(&map, &region, n, max_iter, threads)?, Mode::Dem),
            };
            let label = match mode {
                Mode::Certified => format!("certified n={n}"),
                Mode::EscapeTime => format!("UNCERTIFIED escape-time n={n} max_iter={max_iter}"),
                Mode::Dem => format!("UNCERTIFIED distance-estimator n={n} max_iter={max_iter}"),
            };
            write(&out, pgm_with_comment(&output, &label))?;
            if let Some(p) = stats {
                write(&p, output.stats.to_csv())?;
            }
            let errors = output.error_mask.count();
            eprintln!(
                "{}x{} pixels, {} filled, {} errors, {:.2}s",
                output.grid.width,
                output.grid.height,
                output.bitmap.count(),
                errors,
                output.stats.wall_seconds
            );
            if errors > 0 {
                write(&error_mask_path(&out), output.error_mask.to_pgm())?;
                return Ok(EXIT_PRECISION);
            }
            Ok(0)
        }
        Command::Bench { map, cert, n_list, points, repeats, out } => {
            let map = MapSpec::load(&map)?;
            let cert = Certificate::load(&cert)?;
            let pts = read(&points)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.parse::<ComplexDyadic>())
                .collect::<Result<Vec<_>, _>>()?;
            let decider = Decider::new(&cert, &map);
            if let Some(&bad) = n_list.iter().find(|&&n| n < decider.n0()) {
                return Err(Error::Usage(format!("n = {bad} is below n0 = {}", decider.n0())));
            }
            let table = benchmark_scaling(&decider, &pts, &n_list, repeats);
            match out {
                Some(p) => write(&p, table.to_csv())?,
                None => print!("{}", table.to_csv()),
            }
            Ok(if table.rows.iter().any(|r| r.errors > 0) { EXIT_PRECISION } else { 0 })
        }
        Command::Validate { map, cert } => {
            let map = MapSpec::load(&map)?;
            let cert = Certificate::load(&cert)?;
            let report = validate(&cert, &map);
            println!("{report}");
            Ok(if report.overall() { 0 } else { EXIT_INVALID })
        }
        Command::Certify { map, cert, samples, seed, out } => {
            let map = MapSpec::load(&map)?;
            let mut c = Certificate::load(&cert)?;
            let approx = c.julia_approx.clone().ok_or_else(|| Error::Usage("certificate has no Julia approximation".into()))?;
            let part = PartialCertificate { lambda: &c.lambda.value, r: &c.r.value, eps: &c.eps.value, u: &c.u, approx: &approx };
            let est = estimate_k2_c(&map, &part, samples, seed)?;
            eprintln!("{} orbit exits out of {} samples", est.exits, est.samples);
            let note = format!("sampled estimate from {} orbit exits, doubled", est.exits);
            c.k2 = certjulia::Constant::new(est.k2, est.provenance, note.clone());
            c.c = certjulia::Constant::new(est.c, est.provenance, note);
            write(&out, c.to_json())?;
            Ok(0)
        }
        Command::Preset { name, out_dir } => {
            let p = presets::by_name(&name).ok_or_else(|| Error::Usage(format!("unknown preset `{name}`; try one of {:?}", presets::NAMES)))??;
            std::fs::create_dir_all(&out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
            write(&out_dir.join("map.json"), p.map.to_json())?;
            let mut files = Vec::new();
            let json = p.cert.to_json_with(|key, text| {
                let file = format!("{}.cover", key.to_lowercase());
                files.push((file.clone(), text));
                CoverRef::File(file)
            });
            for (f, text) in files {
                write(&out_dir.join(f), text)?;
            }
            write(&out_dir.join("cert.json"), json)?;
            Ok(0)
        }
        Command::Check { name, n_list, per_n, seed, out } => {
            let p = presets::by_name(&name).ok_or_else(|| Error::Usage(format!("unknown preset `{name}`")))??;
            let decider = Decider::new(&p.cert, &p.map);
            let report = conformance_check(&decider, p.oracle, &n_list, SampleSpec { per_n, seed });
            match out {
                Some(path) => write(&path, report.to_csv())?,
                None => print!("{}", report.to_csv()),
            }
            eprintln!("{} samples, {} violations, {} errors", report.samples(), report.violation_count(), report.errors);
            Ok(if report.violation_count() > 0 { 1 } else if report.errors > 0 { EXIT_PRECISION } else { 0 })
        }
    }
}
