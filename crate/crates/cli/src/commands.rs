use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sweepout_core::certificate::Certificate;
use sweepout_core::constants::{ConstantBundle, Mode};
use sweepout_core::length_area::{slice, SliceCertificate};
use sweepout_core::pipeline::{
    assemble_upper_bound, refined_spectrum_curve, spectrum_curve, RefinedCurve, SpectrumCurve, SCHEMA_VERSION,
};
use sweepout_core::surface::{
    generate, genus_two, io, torus, DistanceScratch, Domain, Metric, Surface, SurfaceSpec,
};
use sweepout_core::thick::decompose_thick;
use sweepout_core::thin::decompose_thin;
use sweepout_core::tree::linear_growth_sweep;
use sweepout_core::{Error, Result};

use crate::report::{export_colored_mesh, export_json, export_report, to_json_text};
use crate::Outcome;

#[derive(Debug, Parser)]
#[command(name = "sweepout", version, about = "Certified upper bounds for the volume spectrum of triangulated surfaces")]
pub struct Cli {
    /// Reserved; every algorithm is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the constant bundle and its consistency checks.
    Constants {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, default_value = "paper")]
        mode: Mode,
        #[command(flatten)]
        mesh: OptionalMesh,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the linear growth of the supremal tree cost on a grid of X.
    TreeVerify {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        xmax: f64,
        #[arg(long)]
        resolution: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Length-area slice around a g0 disk.
    Slice {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        seed_vertex: u32,
        #[arg(long)]
        seed_radius: f64,
        #[arg(short = 'r', long = "r")]
        r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a thin surface into slices around greedy centers.
    Thin {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(short = 'r', long = "r")]
        r: f64,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, default_value = "empirical")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recursive isoperimetric decomposition.
    Thick {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(short = 'k')]
        k: u64,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, default_value = "empirical")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full decomposition and bound for one k.
    Decompose {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(short = 'k')]
        k: u64,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, default_value = "empirical")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bounds for a list of k and the fitted growth exponent.
    Curve {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long = "k-list", value_delimiter = ',', required = true)]
        k_list: Vec<u64>,
        #[command(flatten)]
        constants: ConstantArgs,
        #[arg(long, default_value = "empirical")]
        mode: Mode,
        /// With --generate torus:<n> or genus2:<n>, run every k on its own
        /// lattice, just fine enough for that k (empirical mode).
        #[arg(long)]
        refine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ConstantArgs {
    /// Constant of the single-piece width bound.
    #[arg(long = "K", default_value_t = 1.0)]
    pub k_width: f64,
    /// Constant of the isoperimetric subdivision.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// OFF mesh.
    #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
    pub mesh: Option<PathBuf>,
    /// Conformal factor, one value per vertex.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    /// Built-in surface: torus:<n>, sphere:<level> or genus2:<n>.
    #[arg(long)]
    pub generate: Option<SurfaceSpec>,
}

#[derive(Debug, Args)]
pub struct OptionalMesh {
    #[arg(long, conflicts_with = "generate")]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub generate: Option<SurfaceSpec>,
}

fn load(mesh: Option<&Path>, phi: Option<&Path>, spec: Option<SurfaceSpec>) -> Result<Option<Surface>> {
    match (mesh, spec) {
        (Some(path), _) => {
            for p in std::iter::once(path).chain(phi) {
                if !p.is_file() {
                    return Err(Error::InvalidArgument(format!("cannot read {}", p.display())));
                }
            }
            io::load_surface(path, phi).map(Some)
        }
        (None, Some(spec)) => {
            let s = generate(spec)?;
            match phi {
                Some(p) => Ok(Some(s.with_phi(io::read_phi(p)?)?)),
                None => Ok(Some(s)),
            }
        }
        (None, None) if phi.is_some() => Err(Error::InvalidArgument("--phi needs --mesh or --generate".into())),
        (None, None) => Ok(None),
    }
}

impl MeshArgs {
    fn load(&self) -> Result<Surface> {
        load(self.mesh.as_deref(), self.phi.as_deref(), self.generate)?
            .ok_or_else(|| Error::InvalidArgument("give --mesh or --generate".into()))
    }
}

fn bundle_for(surface: &Arc<Surface>, mode: Mode, args: &ConstantArgs) -> Result<ConstantBundle> {
    match mode {
        Mode::Paper => ConstantBundle::paper(2, args.k_width, args.c),
        Mode::Empirical => ConstantBundle::empirical(surface.clone(), args.k_width, args.c),
    }
}

fn outcome(certs: &[Certificate]) -> Outcome {
    let failed: Vec<String> = certs.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(failed)
    }
}

fn out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn print_certificates(certs: &[Certificate]) {
    for c in certs {
        let op = if c.strict { "<" } else { "<=" };
        println!("{} {} ({:e} {op} {:e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.lhs, c.rhs);
    }
}

pub(crate) fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Constants { n, constants, mode, mesh, out } => {
            let surface = load(mesh.mesh.as_deref(), mesh.phi.as_deref(), mesh.generate)?.map(Arc::new);
            let bundle = ConstantBundle::assemble(n, constants.k_width, constants.c, mode, surface)?;
            let summary = bundle.summary();
            println!("n = {}", summary.n);
            println!("mode = {}", summary.mode);
            println!("K = {}", summary.k_width);
            println!("c = {}", summary.c);
            println!("C0 = {}", summary.c0);
            println!("lambda_tilde(1/50^n) = {}", summary.lambda_tilde_50);
            println!("K1 = {}", summary.k1);
            println!("C2 = {}", summary.c2);
            println!("C4 = {}", summary.c4);
            println!("C3 = {}", summary.c3);
            println!("C(1/2) = {}", summary.c_half);
            println!("C(1) = {}", summary.c_one);
            let certs = bundle.chain_certificates()?;
            print_certificates(&certs);
            if let Some(out) = out {
                out_dir(&out)?;
                #[derive(Serialize)]
                struct ConstantsReport<'a> {
                    schema_version: u32,
                    constants: sweepout_core::constants::ConstantSummary,
                    certificates: &'a [Certificate],
                }
                let report = ConstantsReport { schema_version: SCHEMA_VERSION, constants: summary, certificates: &certs };
                export_json(&report, &out.join("constants.json"))?;
            }
            Ok(outcome(&certs))
        }
        Command::TreeVerify { lambda, n, xmax, resolution, step } => {
            let certs = linear_growth_sweep(lambda, n, xmax, step, resolution)?;
            println!("{:>8}  {:>18}  {:>18}  {:>6}", "X", "lhs", "rhs", "result");
            for c in &certs {
                let x = c.constants.get("X").copied().unwrap_or(f64::NAN);
                println!("{x:>8.3}  {:>18.12}  {:>18.12}  {:>6}", c.lhs, c.rhs, if c.pass { "PASS" } else { "FAIL" });
            }
            Ok(outcome(&certs))
        }
        Command::Slice { mesh, seed_vertex, seed_radius, r, out } => {
            let surface = mesh.load()?;
            if seed_vertex as usize >= surface.vertex_count() {
                return Err(Error::InvalidArgument(format!("seed vertex {seed_vertex} is not in the mesh")));
            }
            if !(seed_radius > 0.0) {
                return Err(Error::InvalidArgument("seed radius must be positive".into()));
            }
            let mut scratch = DistanceScratch::new(surface.vertex_count());
            scratch.run(&surface, &[seed_vertex], Metric::G0, seed_radius, None);
            let d = Domain::from_sorted(scratch.faces_within(&surface, seed_radius));
            let whole = Domain::whole(&surface);
            let result = slice(&surface, &whole, &d, r)?;
            let check = result.certificate.certificate("slice.cut <= bound", result.certificate.tolerance());
            #[derive(Serialize)]
            struct SliceReport {
                schema_version: u32,
                seed_vertex: u32,
                seed_radius: f64,
                inner_faces: usize,
                slice_faces: usize,
                slice: SliceCertificate,
                certificates: Vec<Certificate>,
            }
            let report = SliceReport {
                schema_version: SCHEMA_VERSION,
                seed_vertex,
                seed_radius,
                inner_faces: d.len(),
                slice_faces: result.domain.len(),
                slice: result.certificate.clone(),
                certificates: vec![check],
            };
            print!("{}", to_json_text(&report)?);
            if let Some(out) = out {
                out_dir(&out)?;
                export_json(&report, &out.join("slice.json"))?;
                let rest = whole.difference(&result.domain);
                export_colored_mesh(&surface, &[result.domain, rest], &out.join("slice.ply"))?;
            }
            Ok(outcome(&report.certificates))
        }
        Command::Thin { mesh, r, alpha, constants, mode, out } => {
            let surface = Arc::new(mesh.load()?);
            let bundle = bundle_for(&surface, mode, &constants)?;
            let dec = decompose_thin(&surface, &Domain::whole(&surface), r, alpha, &bundle)?;
            #[derive(Serialize)]
            struct Piece {
                center: u32,
                faces: usize,
                area_g: f64,
                forced: bool,
                cut_length_g: f64,
                slice_ratio: f64,
                width_bound: f64,
            }
            #[derive(Serialize)]
            struct ThinReport {
                schema_version: u32,
                mode: Mode,
                r: f64,
                alpha: f64,
                pieces: Vec<Piece>,
                boundary_total: f64,
                boundary_bound: f64,
                multiplicity: u64,
                multiplicity_bound: u64,
                max_width: f64,
                pass: bool,
                certificates: Vec<Certificate>,
            }
            let pieces = dec
                .pieces
                .iter()
                .zip(&dec.per_piece)
                .zip(&dec.width_bounds)
                .map(|((p, s), &w)| Piece {
                    center: p.center,
                    faces: p.domain.len(),
                    area_g: p.domain.measure(&surface, Metric::G),
                    forced: p.forced,
                    cut_length_g: s.cut_length_g,
                    slice_ratio: if s.ratio.is_finite() { s.ratio } else { 0.0 },
                    width_bound: w,
                })
                .collect();
            let report = ThinReport {
                schema_version: SCHEMA_VERSION,
                mode,
                r,
                alpha,
                pieces,
                boundary_total: dec.boundary_total_g,
                boundary_bound: dec.boundary_bound,
                multiplicity: dec.multiplicity_max,
                multiplicity_bound: dec.multiplicity_bound,
                max_width: dec.max_width_bound(),
                pass: dec.pass(),
                certificates: dec.certificates.clone(),
            };
            println!("pieces = {}", dec.pieces.len());
            println!("boundary = {} (bound {})", dec.boundary_total_g, dec.boundary_bound);
            println!("multiplicity = {} (bound {})", dec.multiplicity_max, dec.multiplicity_bound);
            print_certificates(&dec.certificates);
            if let Some(out) = out {
                out_dir(&out)?;
                export_json(&report, &out.join("thin.json"))?;
                let domains: Vec<Domain> = dec.pieces.iter().map(|p| p.domain.clone()).collect();
                export_colored_mesh(&surface, &domains, &out.join("thin.ply"))?;
            }
            Ok(outcome(&dec.certificates))
        }
        Command::Thick { mesh, k, constants, mode, out } => {
            let surface = Arc::new(mesh.load()?);
            let bundle = bundle_for(&surface, mode, &constants)?;
            let dec = decompose_thick(&surface, &Domain::whole(&surface), k, &bundle)?;
            #[derive(Serialize)]
            struct Leaf {
                label: String,
                faces: usize,
                area_g: f64,
            }
            #[derive(Serialize)]
            struct Cut {
                node: String,
                sigma: f64,
                balance: f64,
                c_ratio: f64,
            }
            #[derive(Serialize)]
            struct ThickReport {
                schema_version: u32,
                mode: Mode,
                k: u64,
                tree: TreeNode,
                leaves: Vec<Leaf>,
                cuts: Vec<Cut>,
                c_emp: f64,
                boundary_total: f64,
                claim_bound: f64,
                pass: bool,
                certificates: Vec<Certificate>,
            }
            let report = ThickReport {
                schema_version: SCHEMA_VERSION,
                mode,
                k,
                tree: TreeNode::build("", dec.tree.tree.root_value, &dec.tree.tree.values),
                leaves: dec
                    .leaves
                    .iter()
                    .map(|(l, d)| Leaf { label: l.clone(), faces: d.len(), area_g: d.measure(&surface, Metric::G) })
                    .collect(),
                cuts: dec
                    .cuts
                    .iter()
                    .map(|c| Cut {
                        node: c.node.clone(),
                        sigma: c.cut.sigma_length_g,
                        balance: c.cut.balance,
                        c_ratio: c.cut.c_ratio,
                    })
                    .collect(),
                c_emp: dec.c_emp,
                boundary_total: dec.boundary_total_g,
                claim_bound: dec.claim_bound,
                pass: dec.pass(),
                certificates: dec.certificates.clone(),
            };
            println!("leaves = {}", dec.leaves.len());
            println!("boundary = {} (bound {})", dec.boundary_total_g, dec.claim_bound);
            println!("c_emp = {}", dec.c_emp);
            print_certificates(&dec.certificates);
            if let Some(out) = out {
                out_dir(&out)?;
                export_json(&report, &out.join("thick.json"))?;
                let domains: Vec<Domain> = dec.leaf_domains().cloned().collect();
                export_colored_mesh(&surface, &domains, &out.join("thick.ply"))?;
            }
            Ok(outcome(&dec.certificates))
        }
        Command::Decompose { mesh, k, constants, mode, out } => {
            let surface = Arc::new(mesh.load()?);
            let bundle = bundle_for(&surface, mode, &constants)?;
            let run = match assemble_upper_bound(&surface, k, &bundle) {
                Ok(run) => run,
                Err(Error::Resolution(msg)) => {
                    // the constant chain is still worth having on disk
                    out_dir(&out)?;
                    let certs = bundle.chain_certificates()?;
                    #[derive(Serialize)]
                    struct ChainOnly<'a> {
                        schema_version: u32,
                        k: u64,
                        mode: Mode,
                        constants: sweepout_core::constants::ConstantSummary,
                        resolution_error: &'a str,
                        certificates: Vec<Certificate>,
                    }
                    let chain = ChainOnly {
                        schema_version: SCHEMA_VERSION,
                        k,
                        mode,
                        constants: bundle.summary(),
                        resolution_error: &msg,
                        certificates: certs,
                    };
                    export_json(&chain, &out.join("constants.json"))?;
                    print_certificates(&chain.certificates);
                    return Err(Error::Resolution(msg));
                }
                Err(e) => return Err(e),
            };
            out_dir(&out)?;
            export_report(&run.report, &out.join("report.json"))?;
            export_colored_mesh(&surface, &run.pieces, &out.join("pieces.ply"))?;
            let r = &run.report;
            println!("k = {}", r.k);
            println!("pieces = {}", run.pieces.len());
            println!("addends = {:?}", r.addends);
            println!("total = {}", r.total);
            println!("theorem_value = {}", r.theorem_value);
            println!("report = {}", out.join("report.json").display());
            Ok(outcome(&r.certificates))
        }
        Command::Curve { mesh, k_list, constants, mode, refine, out } => {
            #[derive(Serialize)]
            #[serde(untagged)]
            enum Curve {
                Shared(SpectrumCurve),
                Refined(RefinedCurve),
            }
            let (curve, failed) = if refine {
                if mode != Mode::Empirical {
                    return Err(Error::InvalidArgument("--refine measures constants per mesh, so it needs empirical mode".into()));
                }
                if mesh.phi.is_some() {
                    return Err(Error::InvalidArgument("--refine does not take --phi".into()));
                }
                let build: fn(usize) -> Result<Surface> = match mesh.generate {
                    Some(SurfaceSpec::Torus(_)) => torus,
                    Some(SurfaceSpec::GenusTwo(_)) => genus_two,
                    _ => return Err(Error::InvalidArgument("--refine needs --generate torus:<n> or genus2:<n>".into())),
                };
                let c = refined_spectrum_curve(build, &k_list, constants.k_width, constants.c)?;
                for row in &c.rows {
                    println!("k = {:>6}  columns = {:>5}  total = {:.6e}  theorem = {:.6e}  {}", row.k, row.columns, row.total, row.theorem_value, if row.pass { "PASS" } else { "FAIL" });
                }
                let failed: Vec<String> = c.rows.iter().filter(|r| !r.pass).map(|r| format!("k={}", r.k)).collect();
                (Curve::Refined(c), failed)
            } else {
                let surface = Arc::new(mesh.load()?);
                let bundle = bundle_for(&surface, mode, &constants)?;
                let c = spectrum_curve(&surface, &k_list, &bundle)?;
                for row in &c.rows {
                    println!("k = {:>6}  k_used = {:>6}  total = {:.6e}  theorem = {:.6e}  {}", row.k, row.k_used, row.total, row.theorem_value, if row.pass { "PASS" } else { "FAIL" });
                }
                let failed: Vec<String> = c.rows.iter().filter(|r| !r.pass).map(|r| format!("k={}", r.k)).collect();
                (Curve::Shared(c), failed)
            };
            let slope = match &curve {
                Curve::Shared(c) => c.slope,
                Curve::Refined(c) => c.slope,
            };
            match slope {
                Some(s) => println!("slope = {s}"),
                None => println!("slope = n/a"),
            }
            if let Some(out) = out {
                out_dir(&out)?;
                export_json(&curve, &out.join("curve.json"))?;
            }
            Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::Fail(failed) })
        }
    }
}

/// Nested view of a decomposition tree.
#[derive(Debug, Serialize)]
struct TreeNode {
    label: String,
    value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    children: Vec<TreeNode>,
}

impl TreeNode {
    fn build(label: &str, value: f64, values: &BTreeMap<String, f64>) -> TreeNode {
        let children = ["0", "1"]
            .iter()
            .filter_map(|b| {
                let child = format!("{label}{b}");
                values.get(&child).map(|&v| TreeNode::build(&child, v, values))
            })
            .collect();
        TreeNode { label: label.to_string(), value, children }
    }
}
