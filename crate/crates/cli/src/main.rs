//! Command-line laboratory: one subcommand per artifact, deterministic file
//! outputs, and a run manifest next to everything written.
//!
//! Exit codes: 0 success, 1 domain/validation error, 2 numerical failure
//! (NaN, divergence, residual over tolerance), 64 usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kgds::manifest::ManifestBuilder;
use kgds::{config, fmt17, io, runner};
use kgds_core::bubbles;
use kgds_core::kernels::{self, KernelArg, KernelKind};
use kgds_core::semilinear::{self, PicardConfig};
use kgds_core::sim::Field3D;
use kgds_core::specfun::{self, HypergeomDiagArg};
use kgds_core::transform::{
    self, CauchyData, Dim, SampleSpec, SourceSign, SourceTerm, TransformError,
};
use kgds_core::wave::{FieldSampler, Smoothness};

#[derive(Parser)]
#[command(
    name = "kgds",
    version,
    about = "Klein-Gordon / de Sitter numerical laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel evaluations and positivity scans
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Closed-form verification runs
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Linear solution builders
    Transform {
        #[command(subcommand)]
        cmd: TransformCmd,
    },
    /// Maximum-principle check over a sample grid
    Maxprinciple(MaxPrincipleArgs),
    /// Picard iteration for the semilinear weak solution
    Picard(PicardArgs),
    /// The x-independent two-well reduction
    Duffing(DuffingArgs),
    /// Integral functional F(t) over a snapshot series
    Functional(FunctionalArgs),
    /// Sign-change condition on initial data
    Signcond(SigncondArgs),
    /// Residual of the flat-wall profile
    WallResidual(WallArgs),
    /// Run the 3-D finite-difference simulation
    Simulate(SimulateArgs),
    /// Detect bubbles and extract the event timeline from snapshots
    Bubbles(BubblesArgs),
    /// Light-cone tail functional
    Tail(TailArgs),
    /// Special-function spot evaluation
    Specfun {
        #[command(subcommand)]
        cmd: SpecfunCmd,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Evaluate E, K0 or K1 at a point
    Eval(KernelEvalArgs),
    /// Scan a kernel over its (z,t) domain
    Scan(KernelScanArgs),
}

#[derive(Args)]
struct KernelEvalArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long)]
    t: f64,
    /// Source time (only the E kernel admits b > 0)
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long)]
    z: f64,
    #[arg(long, value_enum, default_value_t = WhichKernel::E)]
    which: WhichKernel,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichKernel {
    E,
    K0,
    K1,
}

#[derive(Args)]
struct KernelScanArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long, value_enum)]
    which: WhichKernel,
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 64)]
    nz: usize,
    #[arg(long, default_value_t = 64)]
    nt: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Integral identities of the three kernels
    Identities(IdentityArgs),
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    /// Residual tolerance (also the quadrature target)
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Subcommand)]
enum TransformCmd {
    /// Cauchy-data solution of the de Sitter equation
    Cauchy(CauchyArgs),
    /// Source (Duhamel) solution of the de Sitter equation
    Source(SourceArgs),
}

#[derive(Args)]
struct CauchyArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    x: f64,
    /// First datum profile (zero|one|const:<v>|bell:<R>|negquad|scale:<a>:<p>)
    #[arg(long)]
    u0: String,
    #[arg(long)]
    u1: String,
    #[arg(long, value_enum, default_value_t = CliDim::Radial3)]
    dim: CliDim,
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
}

#[derive(Args)]
struct SourceArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    x: f64,
    /// Source profile (zero|const:<v>|expdecay:<k>|negbell:<R>)
    #[arg(long)]
    f: String,
    #[arg(long, value_enum, default_value_t = CliDim::Radial3)]
    dim: CliDim,
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliDim {
    Line,
    Radial3,
}

impl From<CliDim> for Dim {
    fn from(d: CliDim) -> Dim {
        match d {
            CliDim::Line => Dim::Line,
            CliDim::Radial3 => Dim::Radial3,
        }
    }
}

#[derive(Args)]
struct MaxPrincipleArgs {
    #[arg(long, value_enum)]
    space: CliSpace,
    #[arg(long = "M")]
    m: f64,
    #[arg(long)]
    u0: String,
    #[arg(long)]
    u1: String,
    #[arg(long, default_value = "zero")]
    f: String,
    #[arg(long, value_enum, default_value_t = CliDim::Radial3)]
    dim: CliDim,
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 1.5)]
    x_max: f64,
    #[arg(long, default_value_t = 10)]
    nx: usize,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 8)]
    nt: usize,
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSpace {
    Minkowski,
    Desitter,
}

#[derive(Args)]
struct PicardArgs {
    #[arg(long)]
    mu2: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 6)]
    n_iter: usize,
    #[arg(long, default_value_t = 8)]
    nr: usize,
    #[arg(long, default_value_t = 6)]
    nt: usize,
    #[arg(long, default_value_t = 1.5)]
    r_max: f64,
    #[arg(long)]
    u0: String,
    #[arg(long, default_value = "zero")]
    u1: String,
    #[arg(long, default_value_t = 1e-8)]
    quad_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DuffingArgs {
    #[arg(long)]
    psi0: f64,
    #[arg(long, default_value_t = 0.0)]
    psi1: f64,
    #[arg(long)]
    mu2: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 50.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FunctionalArgs {
    /// Directory holding <stem>_<k>.raw / .meta.json snapshots
    #[arg(long)]
    snapshots: PathBuf,
    #[arg(long = "M")]
    m: f64,
    #[arg(long, default_value = "psi")]
    stem: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SigncondArgs {
    #[arg(long)]
    mu2: f64,
    #[arg(long)]
    psi0: String,
    #[arg(long)]
    psi1: String,
    #[arg(long, default_value_t = 1e-10)]
    quad_tol: f64,
}

#[derive(Args)]
struct WallArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    lambda: f64,
    /// Boost velocity in (0,1); omitted = static wall
    #[arg(long)]
    v: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "psi")]
    stem: String,
}

#[derive(Args)]
struct BubblesArgs {
    #[arg(long)]
    snapshots: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "psi")]
    stem: String,
    /// Detection threshold; default 1e-4 * max|psi| of the first snapshot
    #[arg(long)]
    epsilon: Option<f64>,
    /// +1 or -1; default from the sign of the initial integral
    #[arg(long)]
    reference_sign: Option<i8>,
}

#[derive(Args)]
struct TailArgs {
    #[arg(long)]
    s: f64,
    /// Profile v(s): sigmoid-dip (default) or const:<c>
    #[arg(long, default_value = "dip")]
    v: String,
    #[arg(long, default_value_t = 1e-10)]
    quad_tol: f64,
}

#[derive(Subcommand)]
enum SpecfunCmd {
    /// Diagonal Gauss hypergeometric F(a,a;c;z)
    F2f1 {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
    /// Modified Bessel function I0
    I0 {
        #[arg(long)]
        x: f64,
    },
}

/// Failure with a chosen process exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn validation(msg: impl Into<String>) -> Fail {
        Fail {
            code: 1,
            msg: msg.into(),
        }
    }

    fn numerical(msg: impl Into<String>) -> Fail {
        Fail {
            code: 2,
            msg: msg.into(),
        }
    }
}

impl From<anyhow::Error> for Fail {
    fn from(e: anyhow::Error) -> Fail {
        Fail {
            code: 1,
            msg: format!("{e:#}"),
        }
    }
}

impl From<TransformError> for Fail {
    fn from(e: TransformError) -> Fail {
        let code = match e {
            TransformError::Domain { .. } | TransformError::InvalidInput { .. } => 1,
            _ => 2,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<kernels::KernelError> for Fail {
    fn from(e: kernels::KernelError) -> Fail {
        let code = match e {
            kernels::KernelError::Domain { .. } => 1,
            _ => 2,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<semilinear::SemilinearError> for Fail {
    fn from(e: semilinear::SemilinearError) -> Fail {
        let code = match e {
            semilinear::SemilinearError::Config { .. } => 1,
            _ => 2,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<specfun::SpecFunError> for Fail {
    fn from(e: specfun::SpecFunError) -> Fail {
        let code = match e {
            specfun::SpecFunError::Domain { .. } => 1,
            _ => 2,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success; anything else is usage
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(64);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Fail> {
    match cli.command {
        Command::Kernel { cmd } => match cmd {
            KernelCmd::Eval(a) => cmd_kernel_eval(a),
            KernelCmd::Scan(a) => cmd_kernel_scan(a),
        },
        Command::Verify { cmd } => match cmd {
            VerifyCmd::Identities(a) => cmd_identities(a),
        },
        Command::Transform { cmd } => match cmd {
            TransformCmd::Cauchy(a) => cmd_cauchy(a),
            TransformCmd::Source(a) => cmd_source(a),
        },
        Command::Maxprinciple(a) => cmd_maxprinciple(a),
        Command::Picard(a) => cmd_picard(a),
        Command::Duffing(a) => cmd_duffing(a),
        Command::Functional(a) => cmd_functional(a),
        Command::Signcond(a) => cmd_signcond(a),
        Command::WallResidual(a) => cmd_wall(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bubbles(a) => cmd_bubbles(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Specfun { cmd } => cmd_specfun(cmd),
    }
}

/// Data-profile grammar shared by the transform/principle/sign subcommands.
#[derive(Clone, Debug)]
enum Profile {
    Zero,
    One,
    Const(f64),
    Bell(f64),
    NegQuad,
    Scale(f64, Box<Profile>),
}

impl Profile {
    fn parse(s: &str) -> Result<Profile, Fail> {
        let p = match s {
            "zero" => Profile::Zero,
            "one" => Profile::One,
            "negquad" => Profile::NegQuad,
            _ => {
                if let Some(v) = s.strip_prefix("const:") {
                    Profile::Const(v.parse().map_err(|_| bad_profile(s))?)
                } else if let Some(r) = s.strip_prefix("bell:") {
                    Profile::Bell(r.parse().map_err(|_| bad_profile(s))?)
                } else if let Some(rest) = s.strip_prefix("scale:") {
                    let (a, inner) = rest.split_once(':').ok_or_else(|| bad_profile(s))?;
                    Profile::Scale(
                        a.parse().map_err(|_| bad_profile(s))?,
                        Box::new(Profile::parse(inner)?),
                    )
                } else {
                    return Err(bad_profile(s));
                }
            }
        };
        Ok(p)
    }

    fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::One => 1.0,
            Profile::Const(c) => *c,
            Profile::Bell(radius) => kgds_core::sim::bell_value(r * r, *radius),
            Profile::NegQuad => -1.0 - r * r,
            Profile::Scale(a, inner) => a * inner.eval(r),
        }
    }

    fn support_radius(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bell(radius) => *radius,
            Profile::Scale(_, inner) => inner.support_radius(),
            _ => f64::INFINITY,
        }
    }
}

fn bad_profile(s: &str) -> Fail {
    Fail::validation(format!(
        "unknown profile {s:?} (expected zero|one|const:<v>|bell:<R>|negquad|scale:<a>:<p>)"
    ))
}

/// Source grammar: zero | const:<v> | expdecay:<k> (-e^{-k t}) | negbell:<R>.
fn parse_source(s: &str) -> Result<Box<dyn Fn(f64, f64) -> f64>, Fail> {
    if s == "zero" {
        return Ok(Box::new(|_, _| 0.0));
    }
    if let Some(v) = s.strip_prefix("const:") {
        let v: f64 = v.parse().map_err(|_| bad_profile(s))?;
        return Ok(Box::new(move |_, _| v));
    }
    if let Some(k) = s.strip_prefix("expdecay:") {
        let k: f64 = k.parse().map_err(|_| bad_profile(s))?;
        return Ok(Box::new(move |_, t| -(-k * t).exp()));
    }
    if let Some(r) = s.strip_prefix("negbell:") {
        let r: f64 = r.parse().map_err(|_| bad_profile(s))?;
        return Ok(Box::new(move |x, _| -kgds_core::sim::bell_value(x * x, r)));
    }
    Err(bad_profile(s))
}

fn cmd_kernel_eval(a: KernelEvalArgs) -> Result<(), Fail> {
    let arg = KernelArg::new(a.z, a.t, a.b, a.m);
    let v = match a.which {
        WhichKernel::E => kernels::kernel_e(arg)?,
        WhichKernel::K0 => kernels::kernel_k0(arg)?,
        WhichKernel::K1 => kernels::kernel_k1(arg)?,
    };
    println!("{}", fmt17(v));
    Ok(())
}

fn cmd_kernel_scan(a: KernelScanArgs) -> Result<(), Fail> {
    let which = match a.which {
        WhichKernel::E => KernelKind::E,
        WhichKernel::K0 => KernelKind::K0,
        WhichKernel::K1 => KernelKind::K1,
    };
    let (report, samples) = kernels::positivity_scan(a.m, a.t_min, a.t_max, a.nz, a.nt, which)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Fail::validation(e.to_string()))?;
    let csv = a.out.join("scan.csv");
    let json = a.out.join("report.json");
    io::write_scan_csv(&csv, &samples).map_err(Fail::from)?;
    std::fs::write(&json, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Fail::validation(e.to_string()))?;
    let mut mb = ManifestBuilder::from_args();
    mb.output(&csv).output(&json);
    mb.write(&a.out).map_err(Fail::from)?;
    println!(
        "min {} at (z,t)=({}, {}); max {}; sign change: {}",
        fmt17(report.min_value),
        fmt17(report.argmin.0),
        fmt17(report.argmin.1),
        fmt17(report.max_value),
        report.sign_change
    );
    Ok(())
}

fn cmd_identities(a: IdentityArgs) -> Result<(), Fail> {
    let r = kernels::verify_kernel_identities(a.t, a.b, a.m, a.tol.min(1e-9))?;
    println!("res_E  = {}", fmt17(r.res_e));
    println!("res_K1 = {}", fmt17(r.res_k1));
    println!("res_K0 = {}", fmt17(r.res_k0));
    if r.res_e > a.tol || r.res_k1 > a.tol || r.res_k0 > a.tol {
        return Err(Fail::numerical(format!(
            "identity residual exceeds tol {:.3e}",
            a.tol
        )));
    }
    Ok(())
}

fn cmd_cauchy(a: CauchyArgs) -> Result<(), Fail> {
    let p0 = Profile::parse(&a.u0)?;
    let p1 = Profile::parse(&a.u1)?;
    let f0 = |r: f64| p0.eval(r);
    let f1 = |r: f64| p1.eval(r);
    let data = CauchyData {
        phi0: FieldSampler::new(&f0, p0.support_radius(), Smoothness::CInf),
        phi1: FieldSampler::new(&f1, p1.support_radius(), Smoothness::CInf),
        dim: a.dim.into(),
    };
    let u = transform::desitter_cauchy_solution(&data, a.m, a.x, a.t, a.quad_tol)?;
    println!("{}", fmt17(u));
    Ok(())
}

fn cmd_source(a: SourceArgs) -> Result<(), Fail> {
    let f = parse_source(&a.f)?;
    let src = SourceTerm::new(&*f, SourceSign::Unknown);
    let u = transform::desitter_source_solution(&src, a.dim.into(), a.m, a.x, a.t, a.quad_tol)?;
    println!("{}", fmt17(u));
    Ok(())
}

fn cmd_maxprinciple(a: MaxPrincipleArgs) -> Result<(), Fail> {
    let p0 = Profile::parse(&a.u0)?;
    let p1 = Profile::parse(&a.u1)?;
    let f = parse_source(&a.f)?;
    let f0 = |r: f64| p0.eval(r);
    let f1 = |r: f64| p1.eval(r);
    let data = CauchyData {
        phi0: FieldSampler::new(&f0, p0.support_radius(), Smoothness::C2),
        phi1: FieldSampler::new(&f1, p1.support_radius(), Smoothness::C2),
        dim: a.dim.into(),
    };
    let src = SourceTerm::new(&*f, SourceSign::NonPositive);
    let spec = SampleSpec {
        x_min: a.x_min,
        x_max: a.x_max,
        nx: a.nx,
        t_max: a.t_max,
        nt: a.nt,
    };
    let (report, samples) = match a.space {
        CliSpace::Minkowski => {
            transform::check_max_principle_minkowski(&data, &src, a.m, &spec, a.quad_tol)?
        }
        CliSpace::Desitter => {
            transform::check_max_principle_desitter(&data, &src, a.m, &spec, a.quad_tol)?
        }
    };
    std::fs::create_dir_all(&a.out).map_err(|e| Fail::validation(e.to_string()))?;
    let csv = a.out.join("samples.csv");
    let json = a.out.join("report.json");
    io::write_mp_csv(&csv, &samples).map_err(Fail::from)?;
    std::fs::write(&json, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Fail::validation(e.to_string()))?;
    let mut mb = ManifestBuilder::from_args();
    mb.output(&csv).output(&json);
    mb.write(&a.out).map_err(Fail::from)?;
    println!(
        "{}: worst violation {} over {} points (threshold t >= {})",
        if report.passed { "passed" } else { "FAILED" },
        fmt17(report.worst_violation),
        report.n_points,
        fmt17(report.t_threshold)
    );
    if report.passed {
        Ok(())
    } else {
        Err(Fail::numerical(
            "maximum principle violated beyond tolerance",
        ))
    }
}

fn cmd_picard(a: PicardArgs) -> Result<(), Fail> {
    let p0 = Profile::parse(&a.u0)?;
    let p1 = Profile::parse(&a.u1)?;
    let f0 = |r: f64| p0.eval(r);
    let f1 = |r: f64| p1.eval(r);
    let data = CauchyData {
        phi0: FieldSampler::new(&f0, p0.support_radius(), Smoothness::CInf),
        phi1: FieldSampler::new(&f1, p1.support_radius(), Smoothness::CInf),
        dim: Dim::Radial3,
    };
    let cfg = PicardConfig {
        m: semilinear::mass_from_mu2(a.mu2),
        lambda: a.lambda,
        t_max: a.t_max,
        n_iter: a.n_iter,
        nr: a.nr,
        nt: a.nt,
        r_max: a.r_max,
        quad_tol: a.quad_tol,
        dim: Dim::Radial3,
    };
    let (lattice, report) = semilinear::picard_weak_solution(&data, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Fail::validation(e.to_string()))?;
    let csv = a.out.join("lattice.csv");
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&csv).map_err(|e| Fail::validation(e.to_string()))?,
        );
        writeln!(w, "r,t,u").map_err(|e| Fail::validation(e.to_string()))?;
        for j in 0..cfg.nt {
            for i in 0..cfg.nr {
                writeln!(
                    w,
                    "{},{},{}",
                    fmt17(lattice.r_of(i)),
                    fmt17(lattice.t_of(j)),
                    fmt17(lattice.at(i, j))
                )
                .map_err(|e| Fail::validation(e.to_string()))?;
            }
        }
    }
    let json = a.out.join("convergence.json");
    std::fs::write(&json, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| Fail::validation(e.to_string()))?;
    let mut mb = ManifestBuilder::from_args();
    mb.output(&csv).output(&json);
    mb.write(&a.out).map_err(Fail::from)?;
    println!(
        "sup diffs: {:?}; diverged: {}",
        report.sup_diffs, report.diverged
    );
    if report.diverged {
        return Err(Fail::numerical("Picard iteration diverged"));
    }
    Ok(())
}

fn cmd_duffing(a: DuffingArgs) -> Result<(), Fail> {
    let traj = semilinear::duffing_ode(a.psi0, a.psi1, a.mu2, a.lambda, a.t_end, a.dt)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Fail::validation(e.to_string()))?;
    let csv = a.out.join("trajectory.csv");
    io::write_trajectory_csv(&csv, &traj).map_err(Fail::from)?;
    let mut mb = ManifestBuilder::from_args();
    mb.output(&csv);
    mb.write(&a.out).map_err(Fail::from)?;
    let last = traj.last().unwrap();
    println!("psi({}) = {}", fmt17(last.t), fmt17(last.psi));
    Ok(())
}

fn cmd_functional(a: FunctionalArgs) -> Result<(), Fail> {
    let snaps = io::read_snapshot_series(&a.snapshots, &a.stem)?;
    let zeros = vec![0.0; snaps.len()];
    let series = semilinear::f_functional(&snaps, &zeros, a.m)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Fail::validation(e.to_string()))?;
    let csv = a.out.join("functional.csv");
    io::write_functional_csv(&csv, &series).map_err(Fail::from)?;
    let json = a.out.join("functional.json");
    std::fs::write(&json, serde_json::to_string_pretty(&series).unwrap())
        .map_err(|e| Fail::validation(e.to_string()))?;
    let mut mb = ManifestBuilder::from_args();
    mb.output(&csv).output(&json);
    mb.write(&a.out).map_err(Fail::from)?;
    println!(
        "F(0) = {}, {} snapshots",
        fmt17(series.f_values[0]),
        series.times.len()
    );
    Ok(())
}

fn cmd_signcond(a: SigncondArgs) -> Result<(), Fail> {
    let p0 = Profile::parse(&a.psi0)?;
    let p1 = Profile::parse(&a.psi1)?;
    let f0 = |r: f64| p0.eval(r);
    let f1 = |r: f64| p1.eval(r);
    let s0 = FieldSampler::new(&f0, p0.support_radius(), Smoothness::CInf);
    let s1 = FieldSampler::new(&f1, p1.support_radius(), Smoothness::CInf);
    let chk = semilinear::sign_change_condition(&s0, &s1, a.mu2, a.quad_tol)?;
    println!("coefficient = {}", fmt17(chk.coefficient));
    println!("lhs(+1) = {}", fmt17(chk.lhs_plus));
    println!("lhs(-1) = {}", fmt17(chk.lhs_minus));
    match chk.satisfied_sigma {
        Some(s) => println!("satisfied sigma = {s:+}"),
        None => println!("satisfied sigma = none"),
    }
    Ok(())
}

fn cmd_wall(a: WallArgs) -> Result<(), Fail> {
    let r = semilinear::static_wall_residual(a.mu, a.lambda, [1.0, 0.0, 0.0], [0.0; 3], a.v, a.h)?;
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Fail> {
    let cfg = config::load_config(&a.config)?;
    let echoed = config::echo_config(&cfg);
    println!("{echoed}");
    let workers = runner::worker_count();
    let started = std::time::Instant::now();
    let (stats, paths) = runner::run_simulation_to_dir(&cfg, &a.out, &a.stem, workers)
        .map_err(|e| Fail::numerical(format!("{e:#}")))?;
    let stats_path = a.out.join("run_stats.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats).unwrap())
        .map_err(|e| Fail::validation(e.to_string()))?;
    let mut mb = ManifestBuilder::from_args();
    mb.config(serde_json::from_str(&echoed).unwrap());
    for p in &paths {
        mb.output(p);
    }
    mb.output(&stats_path);
    mb.write(&a.out).map_err(Fail::from)?;
    println!(
        "{} steps to t = {}, {} snapshots, {} workers, wall {:.1}s",
        stats.steps,
        fmt17(stats.final_time),
        stats.snapshots,
        workers,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_bubbles(a: BubblesArgs) -> Result<(), Fail> {
    let snaps = io::read_snapshot_series(&a.snapshots, &a.stem)?;
    let epsilon = a
        .epsilon
        .unwrap_or_else(|| bubbles::default_epsilon(&snaps[0]));
    let reference = a
        .reference_sign
        .unwrap_or_else(|| bubbles::reference_sign_of(&snaps[0]));
    if !(epsilon > 0.0) {
        return Err(Fail::validation("epsilon must be positive"));
    }
    let series: Vec<_> = snaps
        .iter()
        .map(|f: &Field3D| bubbles::snapshot_bubbles(f, epsilon, reference))
        .collect();
    let timeline = bubbles::timeline_events(&series);
    if let Some(parent) = a.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Fail::validation(e.to_string()))?;
        }
    }
    io::write_timeline_jsonl(&a.out, &timeline).map_err(Fail::from)?;
    let dir = a
        .out
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut mb = ManifestBuilder::from_args();
    mb.output(&a.out);
    mb.write(&dir).map_err(Fail::from)?;
    println!(
        "{} snapshots, {} events (epsilon = {}, reference sign {reference:+})",
        timeline.snapshots.len(),
        timeline.events.len(),
        fmt17(epsilon)
    );
    Ok(())
}

fn cmd_tail(a: TailArgs) -> Result<(), Fail> {
    let v: Box<dyn Fn(f64) -> f64> = if a.v == "dip" {
        Box::new(|s: f64| -(-s * s / (1.2 - s * s * s)).exp())
    } else if let Some(c) = a.v.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|_| bad_profile(&a.v))?;
        Box::new(move |_| c)
    } else {
        return Err(bad_profile(&a.v));
    };
    let t = transform::tail_functional(&*v, a.s, a.quad_tol)?;
    println!("{}", fmt17(t));
    Ok(())
}

fn cmd_specfun(cmd: SpecfunCmd) -> Result<(), Fail> {
    match cmd {
        SpecfunCmd::F2f1 { a, c, z, tol } => {
            let r = specfun::gauss_2f1_diag(HypergeomDiagArg::new(a, c, z), tol)?;
            println!(
                "{} (est err {:.3e}, {} terms)",
                fmt17(r.value),
                r.est_error,
                r.terms_used
            );
        }
        SpecfunCmd::I0 { x } => {
            let v = specfun::bessel_i0(x)?;
            println!("{}", fmt17(v));
        }
    }
    Ok(())
}
