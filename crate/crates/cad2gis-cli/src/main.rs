//! Command-line front end: `convert` runs the full pipeline, `inspect`,
//! `georef-fit` and `validate` expose individual stages for operators.
//!
//! Exit codes: 0 clean, 1 completed with warnings (dangles, orphans,
//! unclosed rings, residual over threshold), 2 hard error. Diagnostics go to
//! standard error; data goes to files or standard output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cad2gis::georef::{
    estimate_affine, estimate_similarity, read_control_points, residuals, SimilarityTransform,
    Transform,
};
use cad2gis::gis_clean::validate_network;
use cad2gis::pipeline::{run_pipeline, Formats, PipelineConfig, PipelineStatus};
use cad2gis::{Error, FeatureClass, PassSelection, Tolerances};

#[derive(Parser)]
#[command(
    name = "cad2gis",
    about = "Convert CAD infrastructure drawings (ASCII DXF) into cleaned, georeferenced GIS data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full five-step conversion pipeline.
    Convert(ConvertArgs),
    /// Print a per-layer inventory of a DXF file.
    Inspect {
        /// DXF file to inventory.
        dxf: PathBuf,
    },
    /// Fit a transform to control points and print parameters + residuals.
    GeorefFit(GeorefFitArgs),
    /// Check exported GeoJSON for dangles and orphan annotations.
    Validate {
        /// A .geojson file, or a directory of them.
        path: PathBuf,
        /// Endpoint coincidence tolerance in CRS units.
        #[arg(long, default_value_t = Tolerances::default().dangle)]
        dangle_tol: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Geojson,
    Shapefile,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PassArg {
    Snap,
    Close,
    Collapse,
    Attach,
    Validate,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input ASCII DXF drawing.
    #[arg(long)]
    dxf: PathBuf,
    /// Conversion profile (JSON): layer rules, tolerances, CRS.
    #[arg(long)]
    profile: PathBuf,
    /// Control-point CSV: src_x,src_y,dst_x,dst_y[,label].
    #[arg(long)]
    control_points: PathBuf,
    /// Directory for per-class GeoJSON / shapefile outputs.
    #[arg(long)]
    out_dir: PathBuf,
    /// Output formats, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    formats: Vec<FormatArg>,
    /// Where to write the QA report (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Cleaning pass to skip; repeatable.
    #[arg(long = "skip-pass", value_name = "NAME")]
    skip_pass: Vec<PassArg>,
    /// Warn (exit 1) when the worst control-point residual exceeds this.
    #[arg(long, value_name = "X")]
    max_residual: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Similarity,
    Affine,
    /// No fitting; report residuals of the pairs as-is.
    Identity,
}

#[derive(Args)]
struct GeorefFitArgs {
    /// Control-point CSV: src_x,src_y,dst_x,dst_y[,label].
    #[arg(long)]
    control_points: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Similarity)]
    model: ModelArg,
    /// Exit 1 when the worst residual exceeds this.
    #[arg(long, value_name = "X")]
    max_residual: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(args) => convert(args),
        Command::Inspect { dxf } => inspect(&dxf),
        Command::GeorefFit(args) => georef_fit(args),
        Command::Validate { path, dangle_tol } => validate(&path, dangle_tol),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error in {} stage: {e}", e.stage());
            ExitCode::from(2)
        }
    }
}

fn convert(args: ConvertArgs) -> cad2gis::Result<ExitCode> {
    let mut formats = Formats::default();
    for f in &args.formats {
        match f {
            FormatArg::Geojson => formats.geojson = true,
            FormatArg::Shapefile => formats.shapefile = true,
        }
    }
    let mut passes = PassSelection::default();
    for p in &args.skip_pass {
        match p {
            PassArg::Snap => passes.snap = false,
            PassArg::Close => passes.close = false,
            PassArg::Collapse => passes.collapse = false,
            PassArg::Attach => passes.attach = false,
            PassArg::Validate => passes.validate = false,
        }
    }
    let cfg = PipelineConfig {
        dxf_path: args.dxf,
        profile_path: args.profile,
        control_points_path: args.control_points,
        out_dir: args.out_dir,
        formats,
        report_path: args.report.clone(),
        passes,
        max_residual: args.max_residual,
    };
    let outcome = run_pipeline(&cfg)?;
    eprintln!(
        "converted {} features ({} repairs), report at {}",
        outcome.report.conversion.points
            + outcome.report.conversion.lines
            + outcome.report.conversion.polygons
            + outcome.report.conversion.annotations,
        outcome.report.repairs.bridged_gaps
            + outcome.report.repairs.closed_rings
            + outcome.report.repairs.collapsed
            + outcome.report.repairs.attached_annotations,
        args.report.display()
    );
    match outcome.status {
        PipelineStatus::Clean => Ok(ExitCode::SUCCESS),
        PipelineStatus::Warnings => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            Ok(ExitCode::from(1))
        }
    }
}

fn read_text(path: &Path) -> cad2gis::Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn inspect(dxf: &Path) -> cad2gis::Result<ExitCode> {
    let name = dxf
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let doc = cad2gis::dxf::parse_dxf(&read_text(dxf)?, &name)?;
    let inv = doc.inventory();
    println!("{:<24} {:<12} {:>8}", "layer", "kind", "count");
    for (layer, kinds) in &inv.layers {
        for (kind, count) in kinds {
            println!("{:<24} {:<12} {:>8}", layer, kind.name(), count);
        }
    }
    println!("total entities: {}", inv.total_entities);
    if !inv.unsupported_types.is_empty() {
        let parts: Vec<String> = inv
            .unsupported_types
            .iter()
            .map(|(t, n)| format!("{t} x{n}"))
            .collect();
        println!(
            "unsupported: {} (total {})",
            parts.join(", "),
            inv.unsupported_total()
        );
    }
    if let Some(b) = &inv.bbox {
        println!(
            "bbox: [{}, {}] .. [{}, {}]",
            b.min_x, b.min_y, b.max_x, b.max_y
        );
    }
    if inv.z_discarded > 0 {
        println!("z coordinates discarded: {}", inv.z_discarded);
    }
    Ok(ExitCode::SUCCESS)
}

fn georef_fit(args: GeorefFitArgs) -> cad2gis::Result<ExitCode> {
    let file = std::fs::File::open(&args.control_points).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.control_points.display()),
        ))
    })?;
    let pairs = read_control_points(file)?;
    let transform = match args.model {
        ModelArg::Similarity => Transform::Similarity(estimate_similarity(&pairs)?),
        ModelArg::Affine => Transform::Affine(estimate_affine(&pairs)?),
        ModelArg::Identity => Transform::Similarity(SimilarityTransform {
            scale: 1.0,
            rotation: 0.0,
            translation: cad2gis::Point2::new(0.0, 0.0),
        }),
    };
    let fit = residuals(&transform, &pairs)?;
    println!("model: {}", transform.model_name());
    match &transform {
        Transform::Similarity(s) => {
            println!("scale: {}", s.scale);
            println!(
                "rotation: {} rad ({} deg)",
                s.rotation,
                s.rotation.to_degrees()
            );
            println!("translation: [{}, {}]", s.translation.x, s.translation.y);
        }
        Transform::Affine(a) => {
            println!("x' = {}*x + {}*y + {}", a.a, a.b, a.c);
            println!("y' = {}*x + {}*y + {}", a.d, a.e, a.f);
        }
    }
    println!("{:<6} {:<16} residual", "#", "label");
    for (i, (pair, r)) in pairs.iter().zip(&fit.residuals).enumerate() {
        println!(
            "{:<6} {:<16} {}",
            i,
            pair.label.as_deref().unwrap_or("-"),
            r
        );
    }
    println!("rms: {}", fit.rms);
    println!("max: {}", fit.max);
    if let Some(limit) = args.max_residual {
        if fit.max > limit {
            eprintln!("warning: max residual {} exceeds {limit}", fit.max);
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &Path, dangle_tol: f64) -> cad2gis::Result<ExitCode> {
    let mut texts = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "geojson"))
            .collect();
        entries.sort();
        if entries.is_empty() {
            return Err(Error::Export(format!(
                "no .geojson files in {}",
                path.display()
            )));
        }
        for p in entries {
            texts.push(read_text(&p)?);
        }
    } else {
        texts.push(read_text(path)?);
    }
    let fs = cad2gis::geojson::read_geojson_many(texts.iter().map(String::as_str))?;
    let dangles = validate_network(&fs, dangle_tol);
    let orphans: Vec<_> = fs
        .features
        .iter()
        .filter(|f| {
            f.klass == FeatureClass::Annotation && !f.attributes.contains_key("attached_to")
        })
        .collect();
    for d in &dangles {
        println!(
            "dangle: feature {} endpoint [{}, {}]{}",
            d.feature,
            d.endpoint.x,
            d.endpoint.y,
            d.nearest
                .map(|n| format!(" nearest node {n}"))
                .unwrap_or_default()
        );
    }
    for o in &orphans {
        println!(
            "orphan annotation: feature {} label {:?}",
            o.id,
            o.attributes.get("label").map(String::as_str).unwrap_or("")
        );
    }
    println!(
        "checked {} features: {} dangle(s), {} orphan annotation(s)",
        fs.features.len(),
        dangles.len(),
        orphans.len()
    );
    if dangles.is_empty() && orphans.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
