use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dancing_core::cartan_engel::{integrate, Q5Point, TrigControl};
use dancing_core::curvature::curvature_report;
use dancing_core::mates::{circle_mates_with, MateOptions, WFamily};
use dancing_core::metric::ChartPoint;
use dancing_core::sample;
use dancing_core::svg;
use dancing_core::verify::{run_suite, Suite, BOUNDED_CONTROL};

#[derive(Parser)]
#[command(name = "dancing", version, about = "Dancing pairs, the (2,3,5) distribution and its symmetries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run verification suites and print a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier on every continuous threshold.
        #[arg(long, default_value_t = 1.0)]
        tol: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a random smooth control from a random point; CSV output.
    Integrate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t1: f64,
        #[arg(long, default_value_t = 1e-10)]
        step_tol: f64,
        /// Output intervals.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dancing mates of the unit circle from an initial jet (y, y′, y″).
    Mates {
        #[arg(long, required = true)]
        circle: bool,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 0.0)]
        y1: f64,
        #[arg(long, default_value_t = 1.0)]
        y2: f64,
        /// θ window.
        #[arg(long, default_value_t = -3.0)]
        t0: f64,
        #[arg(long, default_value_t = 3.0)]
        t1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// A W-curve pair: prints its projective curvature.
    Wcurve {
        #[arg(long, value_parser = parse_family)]
        family: WFamily,
        #[arg(long)]
        param: Option<f64>,
        #[arg(long, default_value_t = -1.0)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        /// Trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Curvature of the dancing metric at a chart point (x, y, a, b).
    Curvature {
        #[arg(long, num_args = 4, value_names = ["X", "Y", "A", "B"], allow_negative_numbers = true)]
        point: Vec<f64>,
    },
    /// Render an SVG figure.
    Figure {
        #[arg(value_enum)]
        kind: FigureKind,
        #[arg(long, value_parser = parse_family, default_value = "Y3")]
        family: WFamily,
        #[arg(long)]
        param: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureKind {
    CircleMates,
    Wcurve,
    Rolling,
}

fn parse_family(s: &str) -> Result<WFamily, String> {
    s.parse().map_err(|e: dancing_core::Error| e.to_string())
}

enum Fail {
    Usage(String),
    Run(String),
    Checks,
}

impl From<dancing_core::Error> for Fail {
    fn from(e: dancing_core::Error) -> Fail {
        Fail::Run(e.to_string())
    }
}

fn emit(path: &Option<PathBuf>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Run(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), Fail> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Fail::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn window(t0: f64, t1: f64) -> Result<(), Fail> {
    if t0.is_finite() && t1.is_finite() && t0 < t1 {
        Ok(())
    } else {
        Err(Fail::Usage(format!("need --t0 < --t1, got {t0} and {t1}")))
    }
}

fn run(cli: Cli) -> Result<(), Fail> {
    match cli.cmd {
        Cmd::Verify { suite, seed, tol, out } => {
            let suite: Suite = suite.parse().map_err(|e: dancing_core::Error| Fail::Usage(e.to_string()))?;
            positive("tol", tol)?;
            let report = run_suite(suite, seed, tol)?;
            emit(&out, &(report.to_json() + "\n"))?;
            for c in report.failures() {
                eprintln!("FAIL {} residual {:e} threshold {:e}", c.name, c.residual, c.threshold);
            }
            if !report.passed {
                return Err(Fail::Checks);
            }
        }
        Cmd::Integrate { seed, t0, t1, step_tol, n, out } => {
            window(t0, t1)?;
            positive("step-tol", step_tol)?;
            if n == 0 {
                return Err(Fail::Usage("--n must be positive".into()));
            }
            let mut rng = sample::rng(seed);
            let pt0 = Q5Point::random(&mut rng);
            let ctl = TrigControl::random(&mut rng).scaled(BOUNDED_CONTROL);
            let tr = integrate(&pt0, &|t| ctl.eval(t), t0, t1, n, step_tol)?;
            emit(&out, &tr.to_csv())?;
            eprintln!(
                "{}",
                json!({"max_constraint": tr.max_constraint, "integral_residual": tr.integral_residual()})
            );
        }
        Cmd::Mates { circle, y0, y1, y2, t0, t1, out, svg: svg_out } => {
            if !circle {
                return Err(Fail::Usage("only --circle mates are supported".into()));
            }
            window(t0, t1)?;
            let o = MateOptions { truncate: true, ..MateOptions::default() };
            let ms = circle_mates_with([y0, y1, y2], (t0, t1), &o)?;
            let n = ((ms.theta_range().1 - ms.theta_range().0) / 0.01).ceil() as usize;
            emit(&out, &svg::mates_csv(&ms, n.max(1))?)?;
            if let Some(p) = svg_out {
                emit(&Some(p), &svg::mate_svg(&ms))?;
            }
            if let Some((a, b)) = ms.stop {
                eprintln!("y vanishes near θ = {:.6}; window truncated", 0.5 * (a + b));
            }
        }
        Cmd::Wcurve { family, param, t0, t1, out, svg: svg_out } => {
            window(t0, t1)?;
            let spec = dancing_core::mates::wcurve_make(family, param).map_err(|e| Fail::Usage(e.to_string()))?;
            let tr = spec.trajectory(t0, t1, 200);
            println!(
                "{}",
                json!({
                    "family": format!("{family:?}"),
                    "param": param,
                    "kappa": spec.kappa,
                    "a1": spec.a1,
                    "a0": spec.a0,
                    "integral_residual": tr.integral_residual(),
                })
            );
            if out.is_some() {
                emit(&out, &tr.to_csv())?;
            }
            if let Some(p) = svg_out {
                emit(&Some(p), &svg::wcurve_svg(family, param, t0, t1)?)?;
            }
        }
        Cmd::Curvature { point } => {
            let cp = ChartPoint::new(point[0], point[1], point[2], point[3]).map_err(|e| Fail::Usage(e.to_string()))?;
            let rep = curvature_report(&cp)?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
        }
        Cmd::Figure { kind, family, param, t0, t1, out } => {
            let text = match kind {
                FigureKind::CircleMates => {
                    let (a, b) = (t0.unwrap_or(-20.0), t1.unwrap_or(20.0));
                    window(a, b)?;
                    svg::circle_mates_svg(10, (a, b))?.0
                }
                FigureKind::Wcurve => {
                    let (a, b) = (t0.unwrap_or(-8.0), t1.unwrap_or(8.0));
                    window(a, b)?;
                    let param = match (family, param) {
                        (WFamily::Y3, p) => p,
                        (_, None) => Some(1.0),
                        (_, p) => p,
                    };
                    svg::wcurve_svg(family, param, a, b).map_err(|e| Fail::Usage(e.to_string()))?
                }
                FigureKind::Rolling => svg::rolling_svg(t0.unwrap_or(0.1), 9)?,
            };
            emit(&out, &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("DANCING_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = dancing_core::init_threads(n) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            _ => {
                eprintln!("error: DANCING_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Checks) => ExitCode::from(1),
        Err(Fail::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
