//! Command-line surface: `block`, `densify`, `certify`, `render`, `demo`
//! and `verify`.
//!
//! Exit codes: 0 when every certificate passes, 2 for bad input, 3 when a
//! check or certificate fails.

pub mod render;

use std::ffi::OsString;
use std::fs;
use std::io::{ErrorKind, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use pahomeo::block::{build_block, verify_block, BlockError, BlockReport, BlockResult, BlockSpec};
use pahomeo::densify::{
    certify_an, certify_patched, densify, identity_map, nested_demo, sample_homeomorphism, Certificate, DensifyError, DensifyJson,
    DensifySpec, PatchedMap, PatchedMapJson, DEMO_MAX_DEPTH,
};
use pahomeo::pwa::{validate_homeomorphism, PwaError};
use pahomeo::{CellSet, Mat2, PwaMap, Rational};

use render::{render_svg, Mode, RenderStyle};

/// Largest explicit map the CLI will build.
pub const MATERIALIZE_CAP: u128 = 4_000_000;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Check(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl From<BlockError> for Failure {
    fn from(e: BlockError) -> Self {
        match e {
            BlockError::InvalidSpec(_) | BlockError::TooLarge { .. } | BlockError::Geom(_) => Failure::Input(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<DensifyError> for Failure {
    fn from(e: DensifyError) -> Self {
        match e {
            DensifyError::Input(_) | DensifyError::TooLarge { .. } => Failure::Input(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

type Outcome = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "pahomeo",
    version,
    about = "Exact piecewise-affine homeomorphisms of the square: blocks, density pipeline, certificates, figures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and verify the strip block for A = [[a, b], [c, d]].
    Block {
        #[arg(long, allow_hyphen_values = true)]
        a: Rational,
        #[arg(long, allow_hyphen_values = true)]
        b: Rational,
        #[arg(long, allow_hyphen_values = true)]
        c: Rational,
        #[arg(long, allow_hyphen_values = true)]
        d: Rational,
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Writes <OUT>.block.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace g by a nearby map in A_n.
    Densify {
        /// PwaMap JSON path, `identity` or `sample`.
        #[arg(long, default_value = "identity")]
        g: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        eps: Rational,
        #[arg(long = "M")]
        bound: Rational,
        /// Writes <OUT>.densify.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store the explicit map instead of the compact patched form.
        #[arg(long)]
        explicit: bool,
    },
    /// A_n membership of a stored map and witness.
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the value stored with densify output.
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated witness cells for a plain PwaMap.
        #[arg(long)]
        witness: Option<String>,
    },
    /// SVG figure of a stored map.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderMode::Domain)]
        mode: RenderMode,
        /// `F` for the stored witness, or comma-separated cell indices.
        #[arg(long)]
        highlight: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        stroke: f64,
        /// Pixels per unit length.
        #[arg(long, default_value = "512")]
        scale: Rational,
        /// Comma-separated hex fill colors.
        #[arg(long)]
        palette: Option<String>,
        #[arg(long, default_value = "#d62728")]
        highlight_color: String,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density pipeline at n = 2, 4, …, 2^depth.
    Demo {
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, default_value = "identity")]
        g: String,
        #[arg(long = "M", default_value = "4")]
        bound: Rational,
        #[arg(long, default_value = "1")]
        eps: Rational,
    },
    /// Re-run every exact check on a stored JSON file.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RenderMode {
    Domain,
    Image,
    SideBySide,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
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
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    let result = catch_unwind(AssertUnwindSafe(|| dispatch(cli.command))).unwrap_or_else(|_| Err(Failure::Check("internal error".into())));
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Check(m) => eprintln!("check failed: {m}"),
            }
            f.code()
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Block { a, b, c, d, k, out } => cmd_block(Mat2::new(a, b, c, d), k, out.as_deref()),
        Command::Densify { g, n, eps, bound, out, explicit } => cmd_densify(&g, n, eps, bound, out.as_deref(), explicit),
        Command::Certify { input, n, witness } => cmd_certify(&input, n, witness.as_deref()),
        Command::Render { input, mode, highlight, stroke, scale, palette, highlight_color, out } => {
            let mut style = RenderStyle { stroke_width: stroke, scale, highlight: highlight_color, ..RenderStyle::default() };
            if let Some(p) = palette {
                style.palette = p.split(',').map(|s| s.trim().to_string()).collect();
            }
            let mode = match mode {
                RenderMode::Domain => Mode::Domain,
                RenderMode::Image => Mode::Image,
                RenderMode::SideBySide => Mode::SideBySide,
            };
            cmd_render(&input, mode, highlight.as_deref(), &style, out.as_deref())
        }
        Command::Demo { depth, g, bound, eps } => cmd_demo(depth, &g, bound, eps),
        Command::Verify { input } => cmd_verify(&input),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn dec(r: &Rational) -> String {
    r.to_decimal_string(12)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "FAILS"
    }
}

/// Rows of `name | exact | decimal | status`.
fn print_table(rows: &[(&str, &Rational, Option<bool>)]) {
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    let exact_width = rows.iter().map(|r| r.1.to_string().len()).max().unwrap_or(0).min(40);
    for (name, value, status) in rows {
        let pad = width - name.chars().count();
        let status = status.map(verdict).unwrap_or("");
        println!("  {name}{:pad$}  {:<exact_width$}  {:>18}  {status}", "", value.to_string(), dec(value));
    }
}

fn print_block_report(spec: &BlockSpec, r: &BlockReport) {
    let a = &spec.a;
    println!("block A = [[{}, {}], [{}, {}]], k = {}, n = {}", a.a, a.b, a.c, a.d, r.k, r.n);
    print_table(&[
        ("E(psi)", &r.energy_psi, None),
        ("E(phi)", &r.energy_phi, None),
        ("bound (1+2/k)E(psi)", &r.energy_bound, Some(r.bound_holds)),
        ("E(phi) on R' u R''", &r.rect_energy_phi, Some(r.rect_energy_holds)),
        ("(1-2/n)|A|_1", &r.rect_energy_psi, None),
        ("T2 max |grad|_1 / |A|_1 <= k", &r.t2_max_ratio, Some(r.t2_bound_holds)),
        ("T3 max |grad|_1 / |A|_1 <= 2", &r.t3_max_ratio, Some(r.t3_bound_holds)),
        ("area_F", &r.area_f, Some(r.measures_hold)),
        ("image_area_F", &r.image_area_f, Some(r.measures_hold)),
        ("E(phi) on F", &r.energy_on_f, Some(r.concentration_holds)),
        ("(1/2-1/k)E(psi)", &r.concentration_threshold, None),
    ]);
    println!("  rectangle energy equality: {}", verdict(r.rect_energy_holds));
    if !r.half_n_bound_holds {
        println!("  note: the constant 1-1/(2n) in the image-area bound does not hold; the exact factor is 1-2/n");
    }
}

fn cmd_block(a: Mat2, k: u32, out: Option<&Path>) -> Outcome {
    let spec = BlockSpec::new(a, k)?;
    let result = build_block(&spec)?;
    print_block_report(&spec, &result.report);
    if let Some(prefix) = out {
        write_file(&with_suffix(prefix, ".block.json"), &result.to_json())?;
    }
    Ok(())
}

fn load_g(g: &str) -> Result<PwaMap, Failure> {
    match g {
        "identity" => Ok(identity_map()),
        "sample" => Ok(sample_homeomorphism()),
        path => PwaMap::from_json(&read_file(Path::new(path))?).map_err(input),
    }
}

fn print_certificate(c: &Certificate) {
    print_table(&[
        ("area_F", &c.area_f, Some(c.in_a_n)),
        ("image_area_F", &c.image_area_f, Some(c.in_a_n)),
        ("Var(f)", &c.var_f, Some(c.variation_holds)),
        ("Var(g)", &c.var_g, None),
        ("sup |f - g|^2", &c.sup_forward_sq, Some(c.budgets_hold)),
        ("sup |f^-1 - g^-1|^2", &c.sup_inverse_sq, Some(c.budgets_hold)),
        ("variation term", &c.variation_term, Some(c.budgets_hold)),
        ("d(g, f) <=", &c.d_bound, Some(c.d_holds)),
    ]);
    println!("  in A_n: {}", if c.in_a_n { "true" } else { "false" });
}

fn cmd_densify(g: &str, n: u64, eps: Rational, bound: Rational, out: Option<&Path>, explicit: bool) -> Outcome {
    if n < 2 {
        return Err(Failure::Input(format!("n = {n}: A_n is only meaningful for n >= 2")));
    }
    let g = load_g(g)?;
    let r = densify(&DensifySpec { g, n, epsilon: eps.clone(), bound: bound.clone() })?;
    println!(
        "densify n = {n}, eps = {eps}, M = {bound}: m = {}, refinement rounds = {}, {} base cells, {} squares, {} block cells",
        r.m,
        r.rounds,
        r.f.base().mesh().cell_count(),
        r.f.square_count(),
        r.f.block_cell_count()
    );
    print_certificate(&r.certificate);
    if let Some(prefix) = out {
        let json = if explicit { r.to_json_explicit(MATERIALIZE_CAP)? } else { r.to_json_compact() };
        write_file(&with_suffix(prefix, ".densify.json"), &json)?;
    }
    if r.certificate.in_a_n && r.certificate.d_holds {
        Ok(())
    } else {
        Err(Failure::Check("certificate does not pass".into()))
    }
}

/// A stored JSON document, classified by its keys.
enum Stored {
    Map(PwaMap),
    Block(BlockResult, String),
    Patched { f: PatchedMap, doc: DensifyJson, text: String },
    Explicit { f: PwaMap, witness: CellSet, doc: DensifyJson },
}

fn load(path: &Path) -> Result<Stored, Failure> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed JSON: {e}")))?;
    let has = |k: &str| value.get(k).is_some();
    if has("phi") && has("report") {
        let r = BlockResult::from_json(&text).map_err(input)?;
        return Ok(Stored::Block(r, text));
    }
    if has("certificate") {
        let doc: DensifyJson = serde_json::from_value(value).map_err(|e| Failure::Input(format!("malformed densify JSON: {e}")))?;
        if doc.f.get("base").is_some() {
            let j: PatchedMapJson =
                serde_json::from_value(doc.f.clone()).map_err(|e| Failure::Input(format!("malformed patched map: {e}")))?;
            let f = j.into_patched().map_err(input)?;
            return Ok(Stored::Patched { f, doc, text });
        }
        let f = PwaMap::from_json(&doc.f.to_string()).map_err(input)?;
        let cells: Vec<usize> =
            serde_json::from_value(doc.witness.clone()).map_err(|e| Failure::Input(format!("malformed witness: {e}")))?;
        let witness = CellSet::new(cells, f.mesh()).map_err(input)?;
        return Ok(Stored::Explicit { f, witness, doc });
    }
    Ok(Stored::Map(PwaMap::from_json(&text).map_err(input)?))
}

fn parse_cells(list: &str) -> Result<Vec<usize>, Failure> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| Failure::Input(format!("bad cell index {s:?}"))))
        .collect()
}

fn cmd_certify(path: &Path, n: Option<u64>, witness: Option<&str>) -> Outcome {
    let stored = load(path)?;
    let need_n = || n.ok_or_else(|| Failure::Input("--n is required for this input".into()));
    let (n, area, image, in_a_n) = match stored {
        Stored::Patched { f, doc, .. } => {
            let n = n.unwrap_or(doc.n);
            let inv = Rational::new(1, n.max(1) as i64);
            let (area, image) = (f.witness_area(), f.witness_image_area());
            let ok = area < inv && image > Rational::one() - &inv;
            (n, area, image, ok)
        }
        other => {
            let (f, w, default_n) = match other {
                Stored::Map(f) => {
                    let cells = parse_cells(witness.ok_or_else(|| Failure::Input("--witness is required for a plain map".into()))?)?;
                    let w = CellSet::new(cells, f.mesh()).map_err(input)?;
                    (f, w, None)
                }
                Stored::Block(r, _) => (r.phi, r.f, None),
                Stored::Explicit { f, witness, doc } => (f, witness, Some(doc.n)),
                Stored::Patched { .. } => unreachable!(),
            };
            let n = match n.or(default_n) {
                Some(n) => n,
                None => need_n()?,
            };
            if !validate_homeomorphism(&f).is_valid() {
                return Err(Failure::Check("the map is not a homeomorphism".into()));
            }
            let c = certify_an(&f, &w, n).map_err(input)?;
            (n, c.area, c.image_area, c.in_a_n)
        }
    };
    if n == 0 {
        return Err(Failure::Input("n must be positive".into()));
    }
    println!("A_n certificate, n = {n}");
    print_table(&[("area(E)", &area, None), ("area(f(E))", &image, None)]);
    println!("  in A_n: {}", if in_a_n { "true" } else { "false" });
    if in_a_n {
        Ok(())
    } else {
        Err(Failure::Check(format!("the witness does not certify membership in A_{n}")))
    }
}

fn cmd_render(path: &Path, mode: Mode, highlight: Option<&str>, style: &RenderStyle, out: Option<&Path>) -> Outcome {
    let (f, witness) = match load(path)? {
        Stored::Map(f) => (f, None),
        Stored::Block(r, _) => {
            let w = r.f.indices().to_vec();
            (r.phi, Some(w))
        }
        Stored::Explicit { f, witness, .. } => (f, Some(witness.indices().to_vec())),
        Stored::Patched { f, .. } => {
            let (f, w) = f.materialize(MATERIALIZE_CAP)?;
            (f, Some(w.indices().to_vec()))
        }
    };
    let cells = match highlight {
        None => Vec::new(),
        Some("F") => witness.ok_or_else(|| Failure::Input("this input has no stored witness F".into()))?,
        Some(list) => parse_cells(list)?,
    };
    let svg = render_svg(&f, &cells, mode, style).map_err(Failure::Input)?;
    match out {
        Some(p) => write_file(p, &svg),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(svg.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Failure::Input(format!("cannot write SVG: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn cmd_demo(depth: u32, g: &str, bound: Rational, eps: Rational) -> Outcome {
    if depth > DEMO_MAX_DEPTH {
        return Err(Failure::Input(format!("depth {depth} exceeds the cap {DEMO_MAX_DEPTH}")));
    }
    let g = load_g(g)?;
    let rows = nested_demo(&g, &bound, depth, &eps)?;
    println!("{:>3}  {:>5}  {:>5}  {:>18}  {:>18}  status   exact |F_k|; exact |f_k(F_k)|", "k", "2^k", "m", "|F_k|", "|f_k(F_k)|");
    for (i, r) in rows.iter().enumerate() {
        println!(
            "{:>3}  {:>5}  {:>5}  {:>18}  {:>18}  {:<7}  {}; {}",
            i + 1,
            r.n,
            r.m,
            dec(&r.area),
            dec(&r.image_area),
            verdict(r.holds),
            r.area,
            r.image_area
        );
    }
    if rows.iter().all(|r| r.holds) {
        Ok(())
    } else {
        Err(Failure::Check("some row misses its bound".into()))
    }
}

fn cmd_verify(path: &Path) -> Outcome {
    match load(path)? {
        Stored::Map(f) => {
            let report = validate_homeomorphism(&f);
            for c in &report.checks {
                println!("  {:<24} {}", c.name, verdict(c.passed));
            }
            let boundary = f.is_identity_on_boundary().unwrap_or(false);
            println!("  {:<24} {}", "identity on boundary", if boundary { "yes" } else { "no" });
            println!("  {:<24} {} ({})", "variation", f.energy(), dec(&f.energy()));
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::Check(report.failures.join("; ")))
            }
        }
        Stored::Block(stored, text) => {
            let report = verify_block(&stored)?;
            print_block_report(&stored.spec, &report);
            if report != stored.report {
                return Err(Failure::Check("recomputed report differs from the stored one".into()));
            }
            let fresh = BlockResult { report, ..stored };
            if fresh.to_json() != text.trim_end() {
                return Err(Failure::Check("stored file is not in canonical form".into()));
            }
            println!("  stored report reproduced exactly");
            Ok(())
        }
        Stored::Patched { f, doc, text } => {
            f.validate()?;
            let (cert, _) = certify_patched(&f, doc.n, doc.m, &doc.epsilon, &doc.bound)?;
            print_certificate(&cert);
            if cert != doc.certificate {
                return Err(Failure::Check("recomputed certificate differs from the stored one".into()));
            }
            let canonical = serde_json::to_string(&doc).map_err(input)?;
            if canonical != text.trim_end() {
                return Err(Failure::Check("stored file is not in canonical form".into()));
            }
            println!("  stored certificate reproduced exactly");
            if cert.passes() {
                Ok(())
            } else {
                Err(Failure::Check("certificate does not pass".into()))
            }
        }
        Stored::Explicit { f, witness, doc } => {
            let report = validate_homeomorphism(&f);
            if !report.is_valid() {
                return Err(Failure::Check(report.failures.join("; ")));
            }
            if !f.is_identity_on_boundary().map_err(|e: PwaError| Failure::Check(e.to_string()))? {
                return Err(Failure::Check("not the identity on the boundary".into()));
            }
            let c = certify_an(&f, &witness, doc.n).map_err(input)?;
            print_table(&[
                ("area_F", &c.area, Some(c.in_a_n)),
                ("image_area_F", &c.image_area, Some(c.in_a_n)),
                ("Var(f)", &f.energy(), None),
            ]);
            let stored = &doc.certificate;
            if c.area != stored.area_f || c.image_area != stored.image_area_f || f.energy() != stored.var_f {
                return Err(Failure::Check("recomputed values differ from the stored certificate".into()));
            }
            println!("  stored areas and variation reproduced exactly");
            if c.in_a_n {
                Ok(())
            } else {
                Err(Failure::Check("not in A_n".into()))
            }
        }
    }
}
