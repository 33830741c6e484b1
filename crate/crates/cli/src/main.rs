//! Command-line front end: classify maps, build X approximations, decide
//! renormalizability, detect capture, render parameter slices, and verify
//! the unbounded-component prediction.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure, 4 theorem violation.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use quadlike_core::records::{self, Manifest};
use quadlike_core::{
    analyze, cardioid_parameter, classify, render_slice, verify_theorem_a, CubicMap, Error,
    Params, Rect,
};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_THEOREM: u8 = 4;

/// Default output directory comes from this variable when --out is absent.
const OUT_ENV: &str = "QUADLIKE_OUT";

#[derive(Parser)]
#[command(name = "quadlike", version, about = "Quadratic-like dynamics of cubic maps λz + bz² + z³")]
struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: $QUADLIKE_OUT or ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Fixed-point multiplier λ as "re,im" (or a bare real).
    #[arg(long)]
    lambda: String,
    /// Quadratic coefficient b as "re,im" (or a bare real).
    #[arg(long)]
    b: String,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Preimage tree depth M.
    #[arg(long, default_value_t = 14)]
    depth: u16,
    /// Lower depth cutoff m.
    #[arg(long, default_value_t = 8)]
    cutoff: u16,
    /// Raster cells per axis.
    #[arg(long, default_value_t = 1024)]
    resolution: usize,
    /// Orbit iteration budget.
    #[arg(long, default_value_t = 10_000)]
    budget: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one map by its critical orbit fates.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 10_000)]
        budget: u32,
    },
    /// Build the preimage levels and write the point cloud and X raster.
    Xset {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipe: PipelineArgs,
    },
    /// Decide immediate renormalizability; write the verdict record and,
    /// when renormalizable, the domain contours.
    Renorm {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipe: PipelineArgs,
        /// Sampler seed (required: verdict statistics sample the cloud).
        #[arg(long)]
        seed: u64,
    },
    /// Track the free critical orbit into the hull of X.
    Capture {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        pipe: PipelineArgs,
    },
    /// Render a classification raster over the b-plane.
    Slice {
        /// Fixed-point multiplier λ as "re,im".
        #[arg(long)]
        lambda: String,
        /// Window half-width in the b-plane.
        #[arg(long, default_value_t = 12.0)]
        window: f64,
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: u32,
    },
    /// Sample the unbounded component and run the full pipeline on each map.
    Verify {
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Sampler seed (required).
        #[arg(long)]
        seed: u64,
        /// Window half-width in the b-plane.
        #[arg(long, default_value_t = 12.0)]
        window: f64,
        #[command(flatten)]
        pipe: PipelineArgs,
    },
    /// Fast internal consistency checks.
    Selftest,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let (re, im) = match parts.as_slice() {
        [re] => (re.trim(), "0"),
        [re, im] => (re.trim(), im.trim()),
        _ => return Err(format!("expected \"re,im\", got {s:?}")),
    };
    let re: f64 = re.parse().map_err(|_| format!("bad real part in {s:?}"))?;
    let im: f64 = im.parse().map_err(|_| format!("bad imaginary part in {s:?}"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("non-finite component in {s:?}"));
    }
    Ok(Complex64::new(re, im))
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::OutOfScope { .. } | Error::InvalidParameter(_) => EXIT_USAGE,
        Error::TheoremViolation(_) | Error::CaptureInvariantViolation { .. } => EXIT_THEOREM,
        _ => EXIT_NUMERICAL,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // Ignore the error if a pool already exists (tests, repeated init).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = out_dir(&cli.out);
    match run(cli.command, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CmdError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
        Err(CmdError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

enum CmdError {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Core(e)
    }
}

fn params_from(pipe: &PipelineArgs, seed: u64) -> Result<Params, CmdError> {
    if pipe.depth < pipe.cutoff + 4 {
        return Err(CmdError::Usage(format!(
            "depth {} must be at least cutoff {} + 4",
            pipe.depth, pipe.cutoff
        )));
    }
    if pipe.resolution < 16 {
        return Err(CmdError::Usage("resolution must be at least 16".into()));
    }
    if pipe.budget == 0 {
        return Err(CmdError::Usage("budget must be positive".into()));
    }
    Ok(Params {
        orbit_budget: pipe.budget,
        basin_resolution: pipe.resolution,
        x_resolution: pipe.resolution,
        depth: pipe.depth,
        cutoff: pipe.cutoff,
        seed,
        ..Params::default()
    })
}

fn parse_map(args: &MapArgs) -> Result<CubicMap, CmdError> {
    let lambda = parse_complex(&args.lambda).map_err(CmdError::Usage)?;
    let b = parse_complex(&args.b).map_err(CmdError::Usage)?;
    Ok(CubicMap::new(lambda, b))
}

fn run(cmd: Command, out: &Path) -> Result<(), CmdError> {
    match cmd {
        Command::Classify { map, budget } => {
            let map = parse_map(&map)?;
            let params = Params {
                orbit_budget: budget,
                ..Params::default()
            };
            let class = classify(&map, &params).map_err(|e| match e {
                Error::OutOfScope { modulus } => CmdError::Usage(format!(
                    "|lambda| = {modulus} > 1: the fixed point 0 must be non-repelling"
                )),
                other => CmdError::Core(other),
            })?;
            let omega1 = if class.label == quadlike_core::MapLabel::PotentiallyRenormalizable {
                quadlike_core::principal_critical_point(&map, None, &params).ok()
            } else {
                None
            };
            let mut manifest = Manifest::new("classify");
            manifest.push_map(&map);
            manifest.push("budget", budget.to_string());
            let record = records::ClassificationRecord {
                map,
                class,
                omega1,
            };
            print!("{}", record.render(&manifest));
            Ok(())
        }

        Command::Xset { map, pipe } => {
            let map = parse_map(&map)?;
            let params = params_from(&pipe, 0)?;
            let a = analyze(&map, &params)?;
            let mut manifest = Manifest::new("xset");
            manifest.push_map(&map);
            push_pipe(&mut manifest, &pipe, None);
            manifest.push("continued", a.continued.to_string());
            if a.continued {
                manifest.push("pipeline_lambda", records::fmt_complex(a.pipeline_map.lambda));
            }
            let cloud_path = out.join("xset_cloud.txt");
            write_file(
                &cloud_path,
                records::render_cloud(&manifest, &a.x.cloud).as_bytes(),
            )
            .map_err(CmdError::Io)?;
            let img_path = out.join("xset_raster.ppm");
            write_file(
                &img_path,
                &records::occupancy_image(&manifest, &a.x.raster),
            )
            .map_err(CmdError::Io)?;
            println!("wrote {}", cloud_path.display());
            println!("wrote {}", img_path.display());
            Ok(())
        }

        Command::Renorm { map, pipe, seed } => {
            let map = parse_map(&map)?;
            let params = params_from(&pipe, seed)?;
            let a = analyze(&map, &params)?;
            let c = cardioid_parameter(map.lambda)?;
            let mut manifest = Manifest::new("renorm");
            manifest.push_map(&map);
            push_pipe(&mut manifest, &pipe, Some(seed));
            let record = records::render_verdict(
                &manifest,
                &a.verdict,
                a.reported_status(),
                c,
                a.continued,
                a.domain_failure.as_deref(),
            );
            let verdict_path = out.join("renorm_verdict.txt");
            write_file(&verdict_path, record.as_bytes()).map_err(CmdError::Io)?;
            println!("wrote {}", verdict_path.display());
            if let Some(pair) = &a.domains {
                for (name, contour) in [("v_star", &pair.v_star), ("u_star", &pair.u_star)] {
                    let mut m = Manifest::new("renorm");
                    m.push_map(&map);
                    m.push("contour", name.to_string());
                    m.push("degree", pair.degree.to_string());
                    m.push("dilation_cells", pair.dilation_cells.to_string());
                    let path = out.join(format!("contour_{name}.txt"));
                    write_file(&path, records::render_contour(&m, contour).as_bytes())
                        .map_err(CmdError::Io)?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(())
        }

        Command::Capture { map, pipe } => {
            let map = parse_map(&map)?;
            let params = params_from(&pipe, 0)?;
            let a = analyze(&map, &params)?;
            let report = match a.capture {
                Some(r) => r,
                None => {
                    return Err(CmdError::Core(Error::InvalidParameter(
                        "capture is only defined for immediately renormalizable maps".into(),
                    )))
                }
            };
            let mut manifest = Manifest::new("capture");
            manifest.push_map(&map);
            push_pipe(&mut manifest, &pipe, None);
            manifest.push("continued", a.continued.to_string());
            let path = out.join("capture.txt");
            write_file(&path, records::render_capture(&manifest, &report).as_bytes())
                .map_err(CmdError::Io)?;
            println!("wrote {}", path.display());
            Ok(())
        }

        Command::Slice {
            lambda,
            window,
            resolution,
            budget,
        } => {
            let lambda = parse_complex(&lambda).map_err(CmdError::Usage)?;
            if !(window > 0.0) {
                return Err(CmdError::Usage("window must be positive".into()));
            }
            let params = Params {
                orbit_budget: budget,
                ..Params::default()
            };
            eprintln!("rendering {resolution}x{resolution} slice ... 0%");
            let rect = Rect::square(Complex64::new(0.0, 0.0), window);
            let slice = render_slice(lambda, rect, resolution, &params)?;
            eprintln!("rendering {resolution}x{resolution} slice ... 100%");
            let mut manifest = Manifest::new("slice");
            manifest.push("lambda", records::fmt_complex(lambda));
            manifest.push("window_half_width", records::fmt_f64(window));
            manifest.push("resolution", resolution.to_string());
            manifest.push("budget", budget.to_string());

            let (cells, record_len, header_len) = records::render_slice_cells(&manifest, &slice);
            let manifest_text =
                records::render_slice_manifest(&manifest, &slice, record_len, header_len);
            let img = records::slice_image(&manifest, &slice);
            for (name, bytes) in [
                ("slice.ppm", img),
                ("slice_manifest.txt", manifest_text.into_bytes()),
                ("slice_cells.txt", cells.into_bytes()),
            ] {
                let path = out.join(name);
                write_file(&path, &bytes).map_err(CmdError::Io)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }

        Command::Verify {
            lambda,
            samples,
            seed,
            window,
            pipe,
        } => {
            let lambda = parse_complex(&lambda).map_err(CmdError::Usage)?;
            if samples == 0 {
                return Err(CmdError::Usage("samples must be positive".into()));
            }
            let params = params_from(&pipe, seed)?;
            eprintln!("rendering slice ... 0%");
            let rect = Rect::square(Complex64::new(0.0, 0.0), window);
            let slice = render_slice(lambda, rect, pipe.resolution, &params)?;
            eprintln!("sampling unbounded component ... 50%");
            let report = verify_theorem_a(&slice, samples, &params)?;
            eprintln!("done ... 100%");
            let mut manifest = Manifest::new("verify");
            manifest.push("lambda", records::fmt_complex(lambda));
            manifest.push("window_half_width", records::fmt_f64(window));
            push_pipe(&mut manifest, &pipe, Some(seed));
            let path = out.join("theorem_a.txt");
            write_file(
                &path,
                records::render_theorem_a(&manifest, &report).as_bytes(),
            )
            .map_err(CmdError::Io)?;
            println!("wrote {}", path.display());
            println!(
                "immediately_renormalizable={} undetermined={} not_renormalizable={}",
                report.immediately_renormalizable, report.undetermined, report.not_renormalizable
            );
            Ok(())
        }

        Command::Selftest => selftest(),
    }
}

fn push_pipe(manifest: &mut Manifest, pipe: &PipelineArgs, seed: Option<u64>) {
    manifest.push("depth", pipe.depth.to_string());
    manifest.push("cutoff", pipe.cutoff.to_string());
    manifest.push("resolution", pipe.resolution.to_string());
    manifest.push("budget", pipe.budget.to_string());
    if let Some(s) = seed {
        manifest.push("seed", s.to_string());
    }
}

/// Quick internal checks: solver residuals, the escape bound, the
/// straightening-target identity, and a reference classification.
fn selftest() -> Result<(), CmdError> {
    use rand::prelude::*;
    let mut failures = 0;

    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    let random_c = |scale: f64, rng: &mut rand::rngs::StdRng| -> Complex64 {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    };

    let mut solver_ok = true;
    for _ in 0..2000 {
        let map = CubicMap::new(random_c(10.0, &mut rng), random_c(10.0, &mut rng));
        let w = random_c(10.0, &mut rng);
        match map.preimages(w) {
            Ok(roots) => {
                let tol = 1e-10 * w.norm().max(1.0);
                if roots.iter().any(|&r| (map.eval(r) - w).norm() > tol) {
                    solver_ok = false;
                }
            }
            Err(_) => solver_ok = false,
        }
    }
    report("preimage solver residuals", solver_ok, &mut failures);

    let mut escape_ok = true;
    for _ in 0..5000 {
        let map = CubicMap::new(random_c(10.0, &mut rng), random_c(10.0, &mut rng));
        let r = map.escape_radius();
        let z = Complex64::from_polar(
            rng.gen_range(r..2.0 * r + 1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        if map.eval(z).norm() < 2.0 * z.norm() * (1.0 - 1e-12) {
            escape_ok = false;
        }
    }
    report("escape radius doubling bound", escape_ok, &mut failures);

    let mut cardioid_ok = true;
    for _ in 0..100 {
        let lambda = Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let c = cardioid_parameter(lambda).map_err(CmdError::Core)?;
        let beta = lambda * 0.5;
        if (beta * beta + c - beta).norm() > 1e-12 || (beta * 2.0 - lambda).norm() > 1e-12 {
            cardioid_ok = false;
        }
    }
    report("straightening-target fixed point", cardioid_ok, &mut failures);

    let class = classify(&CubicMap::from_re(0.5, 10.0), &Params::default())
        .map_err(CmdError::Core)?;
    report(
        "reference map classification",
        class.label == quadlike_core::MapLabel::PotentiallyRenormalizable,
        &mut failures,
    );

    if failures > 0 {
        Err(CmdError::Core(Error::InvalidParameter(format!(
            "{failures} selftest checks failed"
        ))))
    } else {
        Ok(())
    }
}

fn report(name: &str, ok: bool, failures: &mut u32) {
    println!("selftest {name}: {}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.5,-0.25").unwrap(), Complex64::new(0.5, -0.25));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert!(parse_complex("a,b").is_err());
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("inf,0").is_err());
    }
}
