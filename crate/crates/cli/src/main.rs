mod args;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rellich::corpus::{corpus, example5_winding, example8_directional, CorpusSystem, Expected};
use rellich::fd_oracle::DEFAULT_FD_STEP;
use rellich::nullspace::Warning;
use rellich::{
    adjoint_derivative, adjoint_prepare, consistency_report, decompose, direct_sensitivity, frame_solutions,
    full_jacobian, general_solution, rank_profile, serialize_system, track_frame, Frame, FrameMethod,
    GeneratedFamily, MatrixFamily, Method, ParamPoint, SensitivityQuery, Thresholds, Tolerance, CORPUS_NAMES,
};

use args::{
    linear_path, parse_anchor, parse_objective, parse_param, parse_path, parse_point, parse_reals, resolve_tolerance,
    usage, Failure,
};
use output::{csv_header, json_matrix, json_vec, num, print_json, vector, Format};

#[derive(Parser)]
#[command(name = "rellich", version, about = "Solutions, frames and sensitivities of parametrized singular systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// System file (JSON) or built-in name: ex5, ex8, ex14, ex20.
    #[arg(long)]
    system: String,
    /// Rank threshold: `auto` or a positive real. Falls back to RELLICH_SENS_TOL.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args, Clone)]
struct PointArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Parameter point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    at: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Cofactor,
    Orthogonal,
}

impl From<MethodArg> for FrameMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cofactor => FrameMethod::Cofactor,
            MethodArg::Orthogonal => FrameMethod::Orthogonal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Numerical rank, deficiency and selected minor of D(ε).
    Rank(PointArgs),
    /// Unit null vectors of D(ε).
    Nullsolve(FrameArgs),
    /// Orthonormal frame of homogeneous solutions.
    Frame(FrameArgs),
    /// Frames along a path, aligned step to step.
    Track(TrackArgs),
    /// Particular solution and homogeneous frame of D(ε) x = b(ε).
    Solve(FrameArgs),
    /// Coordinates of a solution relative to the particular solution and frame.
    Decompose(DecomposeArgs),
    /// First-order sensitivities of the unit null vector.
    #[command(subcommand)]
    Sens(SensCommand),
    /// Random (n-1)-deficient polynomial system with known null vector.
    Gen(GenArgs),
    /// Built-in reference systems.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Time full Jacobians by the direct and adjoint methods.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FrameArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Points separated by `;`, coordinates by `,`.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["from", "to", "steps"])]
    path: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["to", "steps"])]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Candidate solution, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
}

#[derive(Args)]
struct SensArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Anchor null vector (normalized on input); default computed.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
}

#[derive(Subcommand)]
enum SensCommand {
    /// ∂x/∂εⱼ by the direct method; all parameters without --param.
    Direct {
        #[command(flatten)]
        args: SensArgs,
        /// Parameter index, 1-based.
        #[arg(long)]
        param: Option<usize>,
    },
    /// ∂F(x)/∂εⱼ by the adjoint method.
    Adjoint {
        #[command(flatten)]
        args: SensArgs,
        /// coord:<i> (1-based) or linear:<w1,...,wn>.
        #[arg(long, allow_hyphen_values = true)]
        objective: String,
        #[arg(long)]
        param: Option<usize>,
    },
    /// Direct, adjoint and finite-difference derivatives side by side.
    Verify {
        #[command(flatten)]
        args: SensArgs,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long = "num-params", default_value_t = 2)]
    num_params: usize,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Write the system here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CorpusCommand {
    List,
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Check documented outputs; all entries without a name.
    Run { name: Option<String> },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long = "num-params", default_value_t = 20)]
    num_params: usize,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 20)]
    reps: usize,
}

struct Loaded {
    system: CorpusSystem,
    tol: Tolerance,
    format: Format,
}

impl Loaded {
    fn new(a: &SystemArgs) -> Result<Self, Failure> {
        Ok(Self {
            system: args::load_system(&a.system)?,
            tol: resolve_tolerance(a.tol.as_deref())?,
            format: a.format,
        })
    }

    fn family(&self) -> &dyn MatrixFamily {
        self.system.family()
    }
}

fn method_for(m: Option<MethodArg>, n: usize) -> FrameMethod {
    m.map(FrameMethod::from).unwrap_or_else(|| FrameMethod::default_for(n))
}

fn method_name(m: FrameMethod) -> &'static str {
    match m {
        FrameMethod::Cofactor => "cofactor",
        FrameMethod::Orthogonal => "orthogonal",
    }
}

fn print_warnings(ws: &[Warning]) {
    for w in ws {
        let Warning::ToleranceAmbiguity { index, value, tol } = w;
        eprintln!(
            "warning: singular value {} = {} lies within a factor 10 of tol {}",
            index + 1,
            num(*value, Format::Human),
            num(*tol, Format::Human)
        );
    }
}

fn cmd_rank(a: &PointArgs) -> Result<(), Failure> {
    let l = Loaded::new(&a.sys)?;
    let at = parse_point(&a.at, l.family())?;
    let m = l.family().evaluate(&at)?.matrix;
    let p = rank_profile(&m, l.tol.resolve(&m)?)?;
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    match l.format {
        Format::Human => {
            println!("rank {}, deficiency {} (n = {}, tol {})", p.rank, p.deficiency, m.ncols(), num(p.tol, l.format));
            println!("singular values: {}", vector(&p.singular_values, l.format));
            println!("minor rows {:?}, minor cols {:?}", one_based(&p.minor_rows), one_based(&p.minor_cols));
        }
        Format::Csv => {
            println!("rank,deficiency,tol");
            println!("{},{},{}", p.rank, p.deficiency, num(p.tol, l.format));
            println!("\n# singular_values\nindex,value");
            for (i, s) in p.singular_values.iter().enumerate() {
                println!("{},{}", i + 1, num(*s, l.format));
            }
        }
        Format::Json => print_json(&json!({
            "at": at.coords(),
            "rank": p.rank,
            "deficiency": p.deficiency,
            "tol": p.tol,
            "singular_values": p.singular_values,
            "minor_rows": one_based(&p.minor_rows),
            "minor_cols": one_based(&p.minor_cols),
        })),
    }
    print_warnings(&p.warnings);
    Ok(())
}

fn frame_at(l: &Loaded, at: &ParamPoint, method: FrameMethod) -> Result<Frame, Failure> {
    let m = l.family().evaluate(at)?.matrix;
    let mut f = frame_solutions(&m, l.tol.resolve(&m)?, method)?;
    f.at = Some(at.clone());
    Ok(f)
}

fn print_vectors(label: &str, vs: &[DVector<f64>], n: usize, f: Format) {
    match f {
        Format::Csv => {
            println!("{}", csv_header(label, n));
            for (i, v) in vs.iter().enumerate() {
                println!("{},{}", i + 1, vector(v.as_slice(), f));
            }
        }
        _ => {
            for (i, v) in vs.iter().enumerate() {
                println!("{label}{} = {}", i + 1, vector(v.as_slice(), f));
            }
        }
    }
}

fn cmd_frame(a: &FrameArgs, full: bool) -> Result<(), Failure> {
    let l = Loaded::new(&a.point.sys)?;
    let at = parse_point(&a.point.at, l.family())?;
    let n = l.family().order();
    let method = method_for(a.method, n);
    let frame = frame_at(&l, &at, method)?;
    let vs: Vec<DVector<f64>> = frame.vectors.iter().map(|v| v.as_vector().clone()).collect();
    match l.format {
        Format::Json => print_json(&json!({
            "at": at.coords(),
            "method": method_name(method),
            "tol": frame.tol,
            "vectors": vs.iter().map(json_vec).collect::<Vec<_>>(),
            "orthonormality_error": frame.orthonormality_error(),
            "residual": frame.residual,
            "fallback_vectors": frame.fallback_vectors,
        })),
        Format::Human => {
            if full {
                println!(
                    "frame at {at}: {} vector(s), method {}, tol {}",
                    vs.len(),
                    method_name(method),
                    num(frame.tol, l.format)
                );
            } else if vs.is_empty() {
                println!("no null direction at {at}: D is nonsingular");
            }
            print_vectors("x", &vs, n, l.format);
            if full {
                println!(
                    "orthonormality error {}, residual {}",
                    num(frame.orthonormality_error(), l.format),
                    num(frame.residual, l.format)
                );
            }
        }
        Format::Csv => print_vectors("vector", &vs, n, l.format),
    }
    print_warnings(&frame.warnings);
    Ok(())
}

fn cmd_track(a: &TrackArgs) -> Result<(), Failure> {
    let l = Loaded::new(&a.sys)?;
    let sys = l.family();
    let path = match (&a.path, &a.from, &a.to, a.steps) {
        (Some(p), _, _, _) => parse_path(p, sys)?,
        (None, Some(from), Some(to), Some(steps)) => {
            linear_path(&parse_point(from, sys)?, &parse_point(to, sys)?, steps)?
        }
        _ => return Err(usage("track needs --path or all of --from, --to, --steps")),
    };
    if path.is_empty() {
        return Err(usage("empty path"));
    }
    let method = method_for(a.method, sys.order());
    let seq = track_frame(sys, &path, l.tol, method)?;
    match l.format {
        Format::Csv => print!("{}", seq.to_csv()),
        Format::Json => print_json(&json!({
            "method": method_name(method),
            "frames": seq.frames.iter().map(|f| json!({
                "at": f.at.as_ref().map(|p| p.coords().to_vec()),
                "vectors": f.vectors.iter().map(|v| json_vec(v.as_vector())).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "alignment_log": seq.alignment_log,
            "continuity_constant": seq.continuity_constant(),
        })),
        Format::Human => {
            for f in &seq.frames {
                let at = f.at.as_ref().expect("tracked frames carry their point");
                let parts: Vec<String> = f.vectors.iter().map(|v| vector(v.as_vector().as_slice(), l.format)).collect();
                println!("{at}: {}", parts.join(" "));
            }
            println!(
                "max displacement {}, continuity constant {}",
                num(seq.max_displacement(), l.format),
                num(seq.continuity_constant(), l.format)
            );
        }
    }
    Ok(())
}

fn cmd_solve(a: &FrameArgs) -> Result<(), Failure> {
    let l = Loaded::new(&a.point.sys)?;
    let at = parse_point(&a.point.at, l.family())?;
    let n = l.family().order();
    let method = method_for(a.method, n);
    let gs = general_solution(l.family(), &at, l.tol, method)?;
    let pair = l.family().evaluate(&at)?;
    let b = pair.rhs.expect("general_solution checked the rhs");
    let residual = (&pair.matrix * &gs.particular - b).norm();
    let vs: Vec<DVector<f64>> = gs.homogeneous.vectors.iter().map(|v| v.as_vector().clone()).collect();
    match l.format {
        Format::Json => print_json(&json!({
            "at": at.coords(),
            "rank": gs.profile.rank,
            "particular": json_vec(&gs.particular),
            "homogeneous": vs.iter().map(json_vec).collect::<Vec<_>>(),
            "residual": residual,
        })),
        Format::Csv => {
            println!("{}", csv_header("vector", n));
            println!("particular,{}", vector(gs.particular.as_slice(), l.format));
            for (i, v) in vs.iter().enumerate() {
                println!("{},{}", i + 1, vector(v.as_slice(), l.format));
            }
        }
        Format::Human => {
            println!("x_p = {}", vector(gs.particular.as_slice(), l.format));
            println!("homogeneous frame: {} vector(s)", vs.len());
            print_vectors("x", &vs, n, l.format);
            println!("residual |D x_p - b| = {}", num(residual, l.format));
        }
    }
    Ok(())
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<(), Failure> {
    let l = Loaded::new(&a.frame.point.sys)?;
    let at = parse_point(&a.frame.point.at, l.family())?;
    let n = l.family().order();
    let x = parse_reals(&a.x, "--x")?;
    if x.len() != n {
        return Err(usage(format!("--x has {} components, system has order {n}", x.len())));
    }
    let x = DVector::from_vec(x);
    let gs = general_solution(l.family(), &at, l.tol, method_for(a.frame.method, n))?;
    let d = decompose(&x, &gs)?;
    let bound = 1e-8 * (1.0 + x.norm());
    let member = d.is_solution(bound);
    match l.format {
        Format::Json => print_json(&json!({
            "coefficients": d.coefficients,
            "residual": d.residual,
            "is_solution": member,
        })),
        Format::Csv => {
            println!("index,coefficient");
            for (i, c) in d.coefficients.iter().enumerate() {
                println!("{},{}", i + 1, num(*c, l.format));
            }
            println!("\n# residual,{}", num(d.residual, l.format));
        }
        Format::Human => {
            println!("lambda = {}", vector(&d.coefficients, l.format));
            println!(
                "residual {} ({} the solution set at {})",
                num(d.residual, l.format),
                if member { "inside" } else { "outside" },
                num(bound, l.format)
            );
        }
    }
    Ok(())
}

fn sens_query<'a>(l: &'a Loaded, a: &SensArgs) -> Result<SensitivityQuery<'a>, Failure> {
    let sys = l.family();
    let at = parse_point(&a.point.at, sys)?;
    let anchor = parse_anchor(a.u.as_deref(), sys.order())?;
    Ok(SensitivityQuery::new(sys, at, anchor, l.tol)?)
}

fn cmd_sens_direct(a: &SensArgs, param: Option<usize>) -> Result<(), Failure> {
    let l = Loaded::new(&a.point.sys)?;
    let sys = l.family();
    let j = param.map(|p| parse_param(p, sys)).transpose()?;
    let q = sens_query(&l, a)?;
    let f = l.format;
    let anchor = q.anchor().as_vector();
    match j {
        Some(j) => {
            let r = direct_sensitivity(&q, j)?;
            let v = r.v.as_ref().expect("direct result keeps v");
            let c = r.c.expect("direct result keeps c");
            match f {
                Format::Json => print_json(&json!({
                    "param": j + 1,
                    "anchor": json_vec(anchor),
                    "anchor_defaulted": r.anchor_defaulted,
                    "derivative": json_vec(r.vector()),
                    "v": json_vec(v),
                    "c": c,
                    "residual": r.residual,
                    "orthogonality": r.orthogonality,
                    "solve_count": r.solve_count,
                })),
                Format::Csv => {
                    println!("{}", csv_header("quantity", sys.order()));
                    println!("anchor,{}", vector(anchor.as_slice(), f));
                    println!("derivative,{}", vector(r.vector().as_slice(), f));
                    println!("v,{}", vector(v.as_slice(), f));
                    println!("\n# c,{}\n# solve_count,{}", num(c, f), r.solve_count);
                }
                Format::Human => {
                    println!(
                        "anchor u = {}{}",
                        vector(anchor.as_slice(), f),
                        if r.anchor_defaulted { " (computed)" } else { "" }
                    );
                    println!("dx/d eps_{} = {}", j + 1, vector(r.vector().as_slice(), f));
                    println!("v = {}, c = {}", vector(v.as_slice(), f), num(c, f));
                    println!(
                        "residual {}, |<u, dx>| {}, solves {}",
                        num(r.residual.unwrap_or(0.0), f),
                        num(r.orthogonality.unwrap_or(0.0), f),
                        r.solve_count
                    );
                }
            }
        }
        None => {
            let jac = full_jacobian(&q, Method::Direct)?;
            print_jacobian(&jac.matrix, jac.solve_count, "direct", anchor, q.anchor_defaulted(), f);
        }
    }
    Ok(())
}

fn print_jacobian(m: &nalgebra::DMatrix<f64>, solves: usize, method: &str, anchor: &DVector<f64>, defaulted: bool, f: Format) {
    match f {
        Format::Json => print_json(&json!({
            "method": method,
            "anchor": json_vec(anchor),
            "anchor_defaulted": defaulted,
            "jacobian": json_matrix(m),
            "solve_count": solves,
        })),
        Format::Csv => {
            println!("{}", csv_header("param", m.nrows()));
            for j in 0..m.ncols() {
                let col: Vec<f64> = m.column(j).iter().copied().collect();
                println!("{},{}", j + 1, vector(&col, f));
            }
            println!("\n# solve_count,{solves}");
        }
        Format::Human => {
            println!(
                "anchor u = {}{}",
                vector(anchor.as_slice(), f),
                if defaulted { " (computed)" } else { "" }
            );
            for j in 0..m.ncols() {
                let col: Vec<f64> = m.column(j).iter().copied().collect();
                println!("dx/d eps_{} = {}", j + 1, vector(&col, f));
            }
            println!("{method} method, {solves} solve(s)");
        }
    }
}

fn cmd_sens_adjoint(a: &SensArgs, objective: &str, param: Option<usize>) -> Result<(), Failure> {
    let l = Loaded::new(&a.point.sys)?;
    let sys = l.family();
    let objective = parse_objective(objective, sys.order())?;
    let params: Vec<usize> = match param {
        Some(p) => vec![parse_param(p, sys)?],
        None => (0..sys.num_params()).collect(),
    };
    let q = sens_query(&l, a)?;
    let adj = adjoint_prepare(&q, &objective)?;
    let derivs: Vec<f64> = params
        .iter()
        .map(|&j| Ok(adjoint_derivative(&adj, &q, j)?.derivative.as_scalar().expect("adjoint scalar")))
        .collect::<Result<_, Failure>>()?;
    let f = l.format;
    match f {
        Format::Json => print_json(&json!({
            "anchor": json_vec(q.anchor().as_vector()),
            "anchor_defaulted": q.anchor_defaulted(),
            "lambda": adj.lambda,
            "p": json_vec(&adj.p),
            "residual": adj.residual,
            "derivatives": params.iter().zip(&derivs).map(|(j, d)| json!({"param": j + 1, "value": d})).collect::<Vec<Value>>(),
            "solve_count": adj.solve_count,
        })),
        Format::Csv => {
            println!("param,dF");
            for (j, d) in params.iter().zip(&derivs) {
                println!("{},{}", j + 1, num(*d, f));
            }
            println!("\n# lambda,{}", num(adj.lambda, f));
            println!("# p,{}", vector(adj.p.as_slice(), f));
            println!("# solve_count,{}", adj.solve_count);
        }
        Format::Human => {
            println!(
                "anchor u = {}{}",
                vector(q.anchor().as_vector().as_slice(), f),
                if q.anchor_defaulted() { " (computed)" } else { "" }
            );
            println!("lambda = {}, p = {}", num(adj.lambda, f), vector(adj.p.as_slice(), f));
            for (j, d) in params.iter().zip(&derivs) {
                println!("dF/d eps_{} = {}", j + 1, num(*d, f));
            }
            println!("residual {}, solves {}", num(adj.residual, f), adj.solve_count);
        }
    }
    Ok(())
}

fn cmd_sens_verify(a: &SensArgs, h: f64) -> Result<(), Failure> {
    if !(h.is_finite() && h > 0.0) {
        return Err(usage(format!("--fd-step must be positive, got {h}")));
    }
    let l = Loaded::new(&a.point.sys)?;
    let sys = l.family();
    let at = parse_point(&a.point.at, sys)?;
    let anchor = parse_anchor(a.u.as_deref(), sys.order())?;
    let report = consistency_report(sys, &at, anchor, l.tol, h, Thresholds::default())?;
    match l.format {
        Format::Human => print!("{}", report.to_table()),
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => print_json(&json!({
            "system": report.system,
            "at": report.at.coords(),
            "thresholds": report.thresholds,
            "scale": report.scale,
            "rows": report.rows.iter().map(|r| json!({
                "param": r.param + 1,
                "direct": r.direct.as_ref().map(json_vec),
                "adjoint": r.adjoint.as_ref().map(json_vec),
                "fd": r.fd.as_ref().map(json_vec),
                "direct_vs_adjoint": r.direct_vs_adjoint,
                "direct_vs_fd": r.direct_vs_fd,
                "adjoint_vs_fd": r.adjoint_vs_fd,
                "h": r.h,
                "direct_solves": r.direct_solves,
                "adjoint_solves": r.adjoint_solves,
                "errors": r.errors,
            })).collect::<Vec<_>>(),
            "pass": report.pass,
        })),
    }
    if report.pass {
        Ok(())
    } else {
        let failing: Vec<usize> = report.failing_params().iter().map(|j| j + 1).collect();
        Err(Failure::Verdict(format!("verification failed for parameter(s) {failing:?}")))
    }
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    if a.n < 2 || a.num_params == 0 || a.degree == 0 {
        return Err(usage("gen needs --n >= 2, --num-params >= 1 and --degree >= 1"));
    }
    let fam = GeneratedFamily::generate(a.seed, a.n, a.num_params, a.degree)?;
    let text = serialize_system(&fam.system);
    match &a.output {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn describe(e: &Expected) -> String {
    match e {
        Expected::Rank { rank, deficiency } => format!("rank {rank}, deficiency {deficiency}"),
        Expected::NullDirection(v) => format!("null direction ±{}", vector(v, Format::Human)),
        Expected::Frame(vs) => {
            let parts: Vec<String> = vs.iter().map(|v| vector(v, Format::Human)).collect();
            format!("frame {}", parts.join(", "))
        }
        Expected::SensitivityError(err) => format!("sensitivity error: {err}"),
    }
}

fn cmd_corpus(c: &CorpusCommand) -> Result<(), Failure> {
    match c {
        CorpusCommand::List => {
            for name in CORPUS_NAMES {
                let entry = corpus(name)?;
                println!("{name:<5} {}", entry.description);
            }
            Ok(())
        }
        CorpusCommand::Show { name, format } => {
            let entry = corpus(name)?;
            if *format == Format::Json {
                match entry.system.polynomial() {
                    Some(p) => println!("{}", serialize_system(p)),
                    None => print_json(&json!({
                        "name": entry.name,
                        "callable": true,
                        "description": entry.description,
                    })),
                }
                return Ok(());
            }
            println!("{}: {}", entry.name, entry.description);
            println!("domain: {}", entry.domain);
            for e in &entry.expectations {
                let at: Vec<String> = e.at.iter().map(|x| num(*x, Format::Human)).collect();
                println!("  at ({}): {} [{}]", at.join(", "), describe(&e.expected), e.provenance);
            }
            Ok(())
        }
        CorpusCommand::Run { name } => {
            let names: Vec<&str> = match name {
                Some(n) => vec![n.as_str()],
                None => CORPUS_NAMES.to_vec(),
            };
            let mut failed = 0;
            let mut report = |ok: bool, label: &str, detail: &str| {
                if !ok {
                    failed += 1;
                }
                println!("{} {label}: {detail}", if ok { "PASS" } else { "FAIL" });
            };
            for n in names {
                let entry = corpus(n)?;
                for o in entry.run() {
                    report(o.passed, &o.label, &o.detail);
                }
                match n {
                    "ex5" => {
                        let samples = example5_winding(3, 6, 32)?;
                        let firsts: Vec<String> = samples.iter().map(|s| num(s.tracked[0], Format::Human)).collect();
                        let ok = samples
                            .windows(2)
                            .all(|w| (w[0].tracked[0] + w[1].tracked[0]).abs() < 1e-10 && w[0].tracked[0].abs() > 0.5);
                        report(ok, "ex5 winding at eps = 1/(k pi), k = 3..6", &format!("x1 = {}", firsts.join(", ")));
                    }
                    "ex8" => {
                        for (t, axis, diag) in example8_directional(&[1e-1, 1e-3])? {
                            let ok = (axis[0] - 1.0).abs() < 1e-12 && (diag[1] - 1.0).abs() < 1e-12;
                            report(
                                ok,
                                &format!("ex8 rays at t = {}", num(t, Format::Human)),
                                &format!(
                                    "(t,0) -> {}, (t,t) -> {}",
                                    vector(axis.as_slice(), Format::Human),
                                    vector(diag.as_slice(), Format::Human)
                                ),
                            );
                        }
                    }
                    _ => {}
                }
            }
            if failed == 0 {
                Ok(())
            } else {
                Err(Failure::Verdict(format!("{failed} corpus check(s) failed")))
            }
        }
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Failure> {
    if a.n < 2 || a.num_params == 0 || a.degree == 0 || a.reps == 0 {
        return Err(usage("bench needs --n >= 2, --num-params >= 1, --degree >= 1, --reps >= 1"));
    }
    let fam = GeneratedFamily::generate(a.seed, a.n, a.num_params, a.degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let at = fam.random_point(&mut rng);
    let q = SensitivityQuery::new(&fam.system, at, None, Tolerance::Auto)?;
    println!("n = {}, N = {}, {} repetitions", a.n, a.num_params, a.reps);
    println!("{:>8}  {:>6}  {:>14}", "method", "solves", "time/jacobian");
    for method in [Method::Direct, Method::Adjoint] {
        let start = Instant::now();
        let mut solves = 0;
        for _ in 0..a.reps {
            solves = full_jacobian(&q, method)?.solve_count;
        }
        let per = start.elapsed().as_secs_f64() / a.reps as f64;
        println!("{:>8}  {:>6}  {:>12} s", method.to_string(), solves, num(per, Format::Human));
    }
    let cheaper = match a.num_params.cmp(&a.n) {
        std::cmp::Ordering::Greater => "adjoint",
        std::cmp::Ordering::Less => "direct",
        std::cmp::Ordering::Equal => "neither",
    };
    println!("fewer solves: {cheaper} (crossover at N = n)");
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Rank(a) => cmd_rank(a),
        Command::Nullsolve(a) => cmd_frame(a, false),
        Command::Frame(a) => cmd_frame(a, true),
        Command::Track(a) => cmd_track(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Sens(SensCommand::Direct { args, param }) => cmd_sens_direct(args, *param),
        Command::Sens(SensCommand::Adjoint { args, objective, param }) => cmd_sens_adjoint(args, objective, *param),
        Command::Sens(SensCommand::Verify { args, fd_step }) => cmd_sens_verify(args, *fd_step),
        Command::Gen(a) => cmd_gen(a),
        Command::Corpus(c) => cmd_corpus(c),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Usage line of the deepest subcommand named on the command line.
fn subcommand_usage(argv: impl Iterator<Item = String>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    for a in argv {
        match cmd.find_subcommand(&a) {
            Some(sub) => cmd = sub.clone(),
            None => break,
        }
    }
    cmd.render_usage().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let grammar = || subcommand_usage(std::env::args().skip(1));
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) if e.is_domain() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}\n\n{}", grammar());
            ExitCode::from(2)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}\n\n{}", grammar());
            ExitCode::from(2)
        }
    }
}
