//! Study execution. Every study produces its artifacts in memory; nothing
//! touches the output directory until all solves have succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use skinfem::fem::{solve_benchmark, DiscreteField, FemError};
use skinfem::geometry::{ConfigId, MeridianDomain, Subdomain};
use skinfem::mesh::{MeshError, MeshSpec, QuadMesh};
use skinfem::physics::{theoretical_slope, PhysicalParams, PhysicsError};
use skinfem::postprocess::{
    conductor_norm, corner_sample_distances, corner_slopes, diagonal_vertex_distances,
    imag_field_map, radial_abscissae, scaling_exponent, slope_report, write_corner_csv,
    write_radial_csv, write_raster_csv, write_scaling_csv, Grid, PostprocessError, SlopeReport,
};
use thiserror::Error;

use crate::config::{ExperimentConfig, Reference, StudyKind};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl StudyError {
    /// Process exit code: 3 for solve failures, 4 for postprocessing and
    /// output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Mesh(_) | StudyError::Fem(_) | StudyError::Physics(_) => 3,
            StudyError::Postprocess(_) | StudyError::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn artifact(name: impl Into<String>, text: String) -> Artifact {
    Artifact {
        name: name.into(),
        bytes: text.into_bytes(),
    }
}

fn csv_artifact(
    name: impl Into<String>,
    write: impl FnOnce(&mut Vec<u8>) -> Result<(), PostprocessError>,
) -> Result<Artifact, StudyError> {
    let mut bytes = Vec::new();
    write(&mut bytes)?;
    Ok(Artifact {
        name: name.into(),
        bytes,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// SHA-256 of the normalized inputs and the solver version.
pub fn input_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(format!("skinfem {}\n{}", skinfem::VERSION, cfg.canonical()).as_bytes())
}

/// On-disk store of reference conductor norms, keyed by a hash of the
/// reference discretization.
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    fn path(&self, config: ConfigId, sigma: f64, r: &Reference) -> PathBuf {
        let key = format!(
            "skinfem {}\nconfig={config}\nsigma={sigma:e}\np={}\nmesh={}\n",
            skinfem::VERSION,
            r.p,
            r.mesh
        );
        self.dir
            .join(format!("ref-{}.txt", sha256_hex(key.as_bytes())))
    }

    /// Cached value if present, otherwise `compute` and store. Values are
    /// stored with 17 significant digits so they round-trip exactly.
    pub fn get_or_compute(
        &self,
        config: ConfigId,
        sigma: f64,
        r: &Reference,
        compute: impl FnOnce() -> Result<f64, StudyError>,
    ) -> Result<f64, StudyError> {
        let path = self.path(config, sigma, r);
        if let Some(v) = fs::read_to_string(&path)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
        {
            return Ok(v);
        }
        let v = compute()?;
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, format!("{v:.16e}\n")).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(v)
    }
}

fn build_mesh(config: ConfigId, spec: MeshSpec) -> Result<Arc<QuadMesh>, StudyError> {
    Ok(Arc::new(spec.build(config)?))
}

fn solve(
    config: ConfigId,
    mesh: &Arc<QuadMesh>,
    sigma: f64,
    p: usize,
) -> Result<DiscreteField, StudyError> {
    let params = PhysicalParams::with_sigma(sigma)?;
    eprintln!("[solve] {} sigma={sigma} p={p}", mesh.name);
    Ok(solve_benchmark(config, mesh.clone(), &params, p)?)
}

fn norm_of(
    config: ConfigId,
    mesh: &Arc<QuadMesh>,
    sigma: f64,
    p: usize,
) -> Result<f64, StudyError> {
    Ok(conductor_norm(&solve(config, mesh, sigma, p)?))
}

/// Slope-table entries reported for the B1 meshes M3 and M6:
/// `(level, sigma, p, n)`.
const REFERENCE_SAMPLE_COUNTS: [(usize, f64, usize, usize); 6] = [
    (3, 5.0, 10, 7),
    (3, 20.0, 12, 6),
    (3, 80.0, 16, 5),
    (6, 5.0, 8, 13),
    (6, 20.0, 12, 9),
    (6, 80.0, 16, 7),
];

fn reference_count(cfg: &ExperimentConfig, sigma: f64, p: usize) -> Option<usize> {
    if cfg.config != ConfigId::B1 {
        return None;
    }
    REFERENCE_SAMPLE_COUNTS
        .iter()
        .find(|(l, s, q, _)| *l == cfg.mesh.level && *s == sigma && *q == p)
        .map(|r| r.3)
}

/// Runs the study and returns its artifacts. `cache_dir` holds reference
/// solutions shared between runs.
pub fn execute(cfg: &ExperimentConfig, cache_dir: &Path) -> Result<Vec<Artifact>, StudyError> {
    let cache = ReferenceCache::new(cache_dir.to_path_buf());
    match cfg.kind {
        StudyKind::Solve => run_solve(cfg),
        StudyKind::PConvergence => run_p_convergence(cfg, &cache),
        StudyKind::HStability => run_h_stability(cfg, &cache),
        StudyKind::SigmaScaling => run_sigma_scaling(cfg),
        StudyKind::SlopeStudy => run_slope_study(cfg),
        StudyKind::CornerStudy => run_corner_study(cfg),
        StudyKind::FieldMap => run_field_map(cfg),
    }
}

fn run_solve(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, StudyError> {
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let mut out = Vec::new();
    let mut summary = String::from("sigma,p,A\n");
    for &sigma in &cfg.sigmas {
        for &p in &cfg.ps {
            let field = solve(cfg.config, &mesh, sigma, p)?;
            let _ = writeln!(summary, "{sigma:.16e},{p},{:.16e}", conductor_norm(&field));
            let mut bytes = Vec::new();
            field.export(&mut bytes)?;
            out.push(Artifact {
                name: format!("field_s{sigma}_p{p}.txt"),
                bytes,
            });
        }
    }
    out.push(artifact("solve.csv", summary));
    Ok(out)
}

fn run_p_convergence(
    cfg: &ExperimentConfig,
    cache: &ReferenceCache,
) -> Result<Vec<Artifact>, StudyError> {
    let reference = cfg.reference.expect("validated config carries a reference");
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let mut csv = String::from("sigma,p,A,abs_diff\n");
    let mut report = format!(
        "p-convergence {} mesh {} against p={} mesh {}\n",
        cfg.config, cfg.mesh, reference.p, reference.mesh
    );
    for &sigma in &cfg.sigmas {
        let a_ref = cache.get_or_compute(cfg.config, sigma, &reference, || {
            norm_of(
                cfg.config,
                &build_mesh(cfg.config, reference.mesh)?,
                sigma,
                reference.p,
            )
        })?;
        let _ = writeln!(report, "sigma {sigma}: reference A = {a_ref:.16e}");
        for &p in &cfg.ps {
            let a = norm_of(cfg.config, &mesh, sigma, p)?;
            let _ = writeln!(csv, "{sigma:.16e},{p},{a:.16e},{:.16e}", (a - a_ref).abs());
        }
    }
    Ok(vec![
        artifact("pconv.csv", csv),
        artifact("report.txt", report),
    ])
}

fn run_h_stability(
    cfg: &ExperimentConfig,
    cache: &ReferenceCache,
) -> Result<Vec<Artifact>, StudyError> {
    let reference = cfg.reference.expect("validated config carries a reference");
    let p = cfg.ps[0];
    let mut csv = String::from("sigma,level,A,abs_diff\n");
    for &sigma in &cfg.sigmas {
        let a_ref = cache.get_or_compute(cfg.config, sigma, &reference, || {
            norm_of(
                cfg.config,
                &build_mesh(cfg.config, reference.mesh)?,
                sigma,
                reference.p,
            )
        })?;
        for &level in &cfg.levels {
            let spec = MeshSpec::new(level);
            let a = norm_of(cfg.config, &build_mesh(cfg.config, spec)?, sigma, p)?;
            let _ = writeln!(
                csv,
                "{sigma:.16e},{level},{a:.16e},{:.16e}",
                (a - a_ref).abs()
            );
        }
    }
    Ok(vec![artifact("hstab.csv", csv)])
}

fn run_sigma_scaling(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, StudyError> {
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let p = cfg.ps[0];
    let pairs = cfg
        .sigmas
        .iter()
        .map(|&s| Ok((s, norm_of(cfg.config, &mesh, s, p)?)))
        .collect::<Result<Vec<_>, StudyError>>()?;
    let exponent = scaling_exponent(&pairs)?;
    let report = format!(
        "sigma-scaling {} mesh {} p={p}\nexponent of A against sigma: {exponent:.6}\n",
        cfg.config, cfg.mesh
    );
    Ok(vec![
        csv_artifact("scaling.csv", |b| write_scaling_csv(b, &pairs))?,
        artifact("report.txt", report),
    ])
}

fn slope_table(cfg: &ExperimentConfig, reports: &[SlopeReport]) -> String {
    let mut t = format!("slope study {} mesh {}\n", cfg.config, cfg.mesh);
    let row = |t: &mut String, label: &str, cells: Vec<String>| {
        let _ = write!(t, "{label:<12}");
        for c in cells {
            let _ = write!(t, "{c:>14}");
        }
        t.push('\n');
    };
    row(
        &mut t,
        "sigma",
        reports.iter().map(|r| format!("{}", r.sigma)).collect(),
    );
    row(
        &mut t,
        "ell",
        reports.iter().map(|r| format!("{:.4}", r.ell)).collect(),
    );
    row(
        &mut t,
        "s",
        reports
            .iter()
            .map(|r| format!("{:.5}", r.slope_theory))
            .collect(),
    );
    row(
        &mut t,
        "curv_ratio",
        reports
            .iter()
            .map(|r| format!("{:.3}", r.curv_ratio))
            .collect(),
    );
    row(
        &mut t,
        "p",
        reports.iter().map(|r| r.p.to_string()).collect(),
    );
    row(
        &mut t,
        "n",
        reports.iter().map(|r| r.n_used.to_string()).collect(),
    );
    row(
        &mut t,
        "s_fit",
        reports
            .iter()
            .map(|r| format!("{:.5}", r.slope_fit))
            .collect(),
    );
    row(
        &mut t,
        "err",
        reports
            .iter()
            .map(|r| format!("{:.4}", r.rel_err))
            .collect(),
    );
    for r in reports {
        if let Some(n) = reference_count(cfg, r.sigma, r.p) {
            if n != r.n_used {
                let _ = writeln!(
                    t,
                    "note: sigma {} uses {} samples within the skin depth; the published table lists {n}",
                    r.sigma, r.n_used
                );
            }
        }
    }
    t
}

fn run_slope_study(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, StudyError> {
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let domain = MeridianDomain::new(cfg.config);
    let mut out = Vec::new();
    let mut reports = Vec::new();
    for (i, &sigma) in cfg.sigmas.iter().enumerate() {
        let p = cfg.p_for(i);
        let field = solve(cfg.config, &mesh, sigma, p)?;
        let params = PhysicalParams::with_sigma(sigma)?;
        let radii = radial_abscissae(&mesh, p)?;
        let rep = slope_report(&field, &domain, &params, p, &radii)?;
        out.push(csv_artifact(format!("radial_s{sigma}.csv"), |b| {
            write_radial_csv(b, &rep.samples)
        })?);
        reports.push(rep);
    }
    let mut csv = String::from("sigma,ell,s,curv_ratio,p,n,s_fit,err\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
            r.sigma, r.ell, r.slope_theory, r.curv_ratio, r.p, r.n_used, r.slope_fit, r.rel_err
        );
    }
    out.push(artifact("slopes.csv", csv));
    out.push(artifact("report.txt", slope_table(cfg, &reports)));
    Ok(out)
}

fn run_corner_study(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, StudyError> {
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let sigma = cfg.sigmas[0];
    let p = cfg.ps[0];
    let field = solve(cfg.config, &mesh, sigma, p)?;
    let params = PhysicalParams::with_sigma(sigma)?;
    let rho = corner_sample_distances(params.ell, &diagonal_vertex_distances(&mesh));
    let slopes = corner_slopes(&field, &rho)?;
    let bulk = theoretical_slope(&params, 0.0);
    let nearest = slopes.first().map_or(f64::NAN, |s| s.1);
    let far = slopes
        .iter()
        .filter(|(r, _)| *r >= 2.0 * params.ell)
        .map(|s| s.1)
        .fold(f64::INFINITY, f64::min);
    let report = format!(
        "corner study {} mesh {} sigma={sigma} p={p}\n\
         flat-interface slope s = {bulk:.6}\n\
         slope nearest the corner = {nearest:.6} ({:.4} of s)\n\
         smallest slope for rho >= 2 ell = {far:.6} ({:.4} of s)\n",
        cfg.config,
        cfg.mesh,
        nearest / bulk,
        far / bulk
    );
    Ok(vec![
        csv_artifact("corner.csv", |b| write_corner_csv(b, &slopes))?,
        artifact("report.txt", report),
    ])
}

fn run_field_map(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, StudyError> {
    let mesh = build_mesh(cfg.config, cfg.mesh)?;
    let domain = MeridianDomain::new(cfg.config);
    let (lo, hi) = (0..mesh.num_elements()).map(|e| mesh.bounding_box(e)).fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), [a, b]| {
            (
                [lo[0].min(a[0]), lo[1].min(a[1])],
                [hi[0].max(b[0]), hi[1].max(b[1])],
            )
        },
    );
    let grid = Grid {
        r_range: (lo[0], hi[0]),
        z_range: (lo[1], hi[1]),
        nr: cfg.grid.0,
        nz: cfg.grid.1,
    };
    let p = cfg.ps[0];
    let mut out = Vec::new();
    let mut report = format!("field map {} mesh {} p={p}\n", cfg.config, cfg.mesh);
    for &sigma in &cfg.sigmas {
        let field = solve(cfg.config, &mesh, sigma, p)?;
        let raster = imag_field_map(&field, &domain, &grid)?;
        if let Some((im, [r, z])) = raster.max_imag() {
            let region = match domain.subdomain_at(r, z) {
                Subdomain::Conductor => "conductor",
                Subdomain::Dielectric => "dielectric",
            };
            let _ = writeln!(
                report,
                "sigma {sigma}: max |Im H| = {im:.6e} at ({r:.6}, {z:.6}) in the {region}"
            );
        }
        out.push(csv_artifact(format!("fieldmap_s{sigma}.csv"), |b| {
            write_raster_csv(b, &raster)
        })?);
    }
    out.push(artifact("report.txt", report));
    Ok(out)
}
