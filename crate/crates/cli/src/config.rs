//! Experiment configuration: a flat `key = value` format with `[section]`
//! headers.
//!
//! ```text
//! [study]
//! kind = slope-study
//! config = B1
//! [physics]
//! sigma = 5, 20, 80
//! [discretization]
//! p = 10, 12, 16
//! mesh = M3
//! [output]
//! dir = out/slopes
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use skinfem::fem::MAX_DEGREE;
use skinfem::geometry::ConfigId;
use skinfem::mesh::MeshSpec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {field}: {message}")]
    Value {
        line: usize,
        field: String,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Solve,
    PConvergence,
    HStability,
    SigmaScaling,
    SlopeStudy,
    CornerStudy,
    FieldMap,
}

impl StudyKind {
    pub const ALL: [StudyKind; 7] = [
        StudyKind::Solve,
        StudyKind::PConvergence,
        StudyKind::HStability,
        StudyKind::SigmaScaling,
        StudyKind::SlopeStudy,
        StudyKind::CornerStudy,
        StudyKind::FieldMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Solve => "solve",
            StudyKind::PConvergence => "p-convergence",
            StudyKind::HStability => "h-stability",
            StudyKind::SigmaScaling => "sigma-scaling",
            StudyKind::SlopeStudy => "slope-study",
            StudyKind::CornerStudy => "corner-study",
            StudyKind::FieldMap => "field-map",
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown study kind {s:?}, expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// Reference discretization of convergence studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub p: usize,
    pub mesh: MeshSpec,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: StudyKind,
    pub config: ConfigId,
    pub sigmas: Vec<f64>,
    pub ps: Vec<usize>,
    pub mesh: MeshSpec,
    /// Mesh levels of an h-stability sweep.
    pub levels: Vec<usize>,
    pub reference: Option<Reference>,
    /// Raster size of a field map.
    pub grid: (usize, usize),
    pub out_dir: PathBuf,
}

/// Raw `section.key -> (line, value)` pairs.
type Entries = BTreeMap<String, (usize, String)>;

const KNOWN_KEYS: [&str; 11] = [
    "study.kind",
    "study.config",
    "physics.sigma",
    "discretization.p",
    "discretization.mesh",
    "discretization.levels",
    "discretization.reference_p",
    "discretization.reference_mesh",
    "output.dir",
    "output.grid_nr",
    "output.grid_nz",
];

fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut section: Option<String> = None;
    let mut entries = Entries::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        if let Some(name) = t.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header {t:?}"),
            })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = t.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected key = value, found {t:?}"),
        })?;
        let sec = section.as_deref().ok_or_else(|| ConfigError::Syntax {
            line,
            message: "key outside of any [section]".into(),
        })?;
        let full = format!("{sec}.{}", key.trim());
        if !KNOWN_KEYS.contains(&full.as_str()) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("unknown key {full}"),
            });
        }
        if entries
            .insert(full.clone(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key {full}"),
            });
        }
    }
    Ok(entries)
}

fn value_err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_one<T: FromStr>(entries: &Entries, field: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    entries
        .get(field)
        .map(|(line, v)| {
            v.parse::<T>()
                .map_err(|e| value_err(*line, field, e.to_string()))
        })
        .transpose()
}

/// Comma-separated items; integer lists also accept inclusive ranges `a..b`.
fn parse_list<T: FromStr>(
    entries: &Entries,
    field: &str,
    ranges: bool,
) -> Result<Option<Vec<T>>, ConfigError>
where
    T::Err: fmt::Display,
{
    let Some((line, v)) = entries.get(field) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) if ranges => {
                let a: usize = a
                    .trim()
                    .parse()
                    .map_err(|e| value_err(*line, field, format!("{e}")))?;
                let b: usize = b
                    .trim()
                    .parse()
                    .map_err(|e| value_err(*line, field, format!("{e}")))?;
                if a > b {
                    return Err(value_err(*line, field, format!("empty range {item}")));
                }
                for k in a..=b {
                    out.push(
                        k.to_string()
                            .parse::<T>()
                            .map_err(|e| value_err(*line, field, e.to_string()))?,
                    );
                }
            }
            _ => out.push(
                item.parse::<T>()
                    .map_err(|e| value_err(*line, field, format!("{item:?}: {e}")))?,
            ),
        }
    }
    Ok(Some(out))
}

impl ExperimentConfig {
    /// Parses and validates `text`. `kind` and `out_dir` override the file.
    pub fn parse(
        text: &str,
        kind: Option<StudyKind>,
        out_dir: Option<PathBuf>,
    ) -> Result<Self, ConfigError> {
        let e = parse_entries(text)?;
        let kind = match kind {
            Some(k) => k,
            None => parse_one::<StudyKind>(&e, "study.kind")?
                .ok_or_else(|| invalid("study.kind", "missing"))?,
        };
        let config = parse_one::<ConfigId>(&e, "study.config")?;
        let config = match (kind, config) {
            (StudyKind::CornerStudy | StudyKind::HStability, Some(c)) if c != ConfigId::A => {
                return Err(invalid(
                    "study.config",
                    format!("{kind} requires configuration A, got {c}"),
                ));
            }
            (StudyKind::CornerStudy | StudyKind::HStability, _) => ConfigId::A,
            (_, Some(c)) => c,
            (_, None) => return Err(invalid("study.config", "missing")),
        };
        if kind == StudyKind::SlopeStudy && !matches!(config, ConfigId::B1 | ConfigId::B2) {
            return Err(invalid(
                "study.config",
                format!("{kind} requires a B configuration, got {config}"),
            ));
        }

        let sigmas: Vec<f64> = parse_list(&e, "physics.sigma", false)?
            .ok_or_else(|| invalid("physics.sigma", "missing"))?;
        if sigmas.is_empty() {
            return Err(invalid("physics.sigma", "empty list"));
        }
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(invalid(
                "physics.sigma",
                format!("conductivity must be positive, got {s}"),
            ));
        }
        if kind == StudyKind::SigmaScaling && sigmas.len() < 3 {
            return Err(invalid(
                "physics.sigma",
                "sigma-scaling needs at least 3 values",
            ));
        }
        if kind == StudyKind::CornerStudy && sigmas.len() != 1 {
            return Err(invalid(
                "physics.sigma",
                "corner-study takes exactly one value",
            ));
        }

        let ps: Vec<usize> = parse_list(&e, "discretization.p", true)?
            .ok_or_else(|| invalid("discretization.p", "missing"))?;
        if ps.is_empty() {
            return Err(invalid("discretization.p", "empty list"));
        }
        if let Some(p) = ps.iter().find(|p| !(1..=MAX_DEGREE).contains(*p)) {
            return Err(invalid(
                "discretization.p",
                format!("degree {p} outside 1..={MAX_DEGREE}"),
            ));
        }
        let single_p = matches!(
            kind,
            StudyKind::SigmaScaling
                | StudyKind::CornerStudy
                | StudyKind::HStability
                | StudyKind::FieldMap
        );
        if single_p && ps.len() != 1 {
            return Err(invalid(
                "discretization.p",
                format!("{kind} takes exactly one degree"),
            ));
        }
        if kind == StudyKind::SlopeStudy && ps.len() != 1 && ps.len() != sigmas.len() {
            return Err(invalid(
                "discretization.p",
                "slope-study takes one degree or one per conductivity",
            ));
        }

        let mesh = parse_one::<MeshSpec>(&e, "discretization.mesh")?
            .ok_or_else(|| invalid("discretization.mesh", "missing"))?;

        let levels: Vec<usize> = parse_list(&e, "discretization.levels", true)?.unwrap_or_default();
        if kind == StudyKind::HStability && levels.is_empty() {
            return Err(invalid(
                "discretization.levels",
                "h-stability needs mesh levels",
            ));
        }
        if levels.contains(&0) {
            return Err(invalid("discretization.levels", "levels start at 1"));
        }

        let ref_p = parse_one::<usize>(&e, "discretization.reference_p")?;
        let ref_mesh = parse_one::<MeshSpec>(&e, "discretization.reference_mesh")?;
        let reference = match kind {
            StudyKind::PConvergence | StudyKind::HStability => {
                let (dp, dm) = match (kind, config) {
                    (StudyKind::HStability, _) => (6, 8),
                    (_, ConfigId::A) => (16, 3),
                    _ => (20, 6),
                };
                let p = ref_p.unwrap_or(dp);
                if !(1..=MAX_DEGREE).contains(&p) {
                    return Err(invalid(
                        "discretization.reference_p",
                        format!("degree {p} outside 1..={MAX_DEGREE}"),
                    ));
                }
                Some(Reference {
                    p,
                    mesh: ref_mesh.unwrap_or(MeshSpec::new(dm)),
                })
            }
            _ => None,
        };

        let nr = parse_one::<usize>(&e, "output.grid_nr")?.unwrap_or(161);
        let nz = parse_one::<usize>(&e, "output.grid_nz")?.unwrap_or(161);
        if nr < 2 || nz < 2 {
            return Err(invalid(
                "output.grid_nr",
                "raster needs at least 2 points per direction",
            ));
        }
        let out_dir = match out_dir {
            Some(d) => d,
            None => parse_one::<PathBuf>(&e, "output.dir")?
                .ok_or_else(|| invalid("output.dir", "missing"))?,
        };

        Ok(Self {
            kind,
            config,
            sigmas,
            ps,
            mesh,
            levels,
            reference,
            grid: (nr, nz),
            out_dir,
        })
    }

    /// Degree paired with the `i`-th conductivity.
    pub fn p_for(&self, i: usize) -> usize {
        if self.ps.len() == 1 {
            self.ps[0]
        } else {
            self.ps[i]
        }
    }

    /// Normalized description of every input that affects results; the
    /// output directory is excluded.
    pub fn canonical(&self) -> String {
        let list = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let sig: Vec<String> = self.sigmas.iter().map(|s| format!("{s:e}")).collect();
        let mut s = format!(
            "kind={}\nconfig={}\nsigma={}\np={}\nmesh={}\nlevels={}\ngrid={}x{}\n",
            self.kind,
            self.config,
            sig.join(","),
            list(&self.ps),
            self.mesh,
            list(&self.levels),
            self.grid.0,
            self.grid.1,
        );
        if let Some(r) = &self.reference {
            s += &format!("reference_p={}\nreference_mesh={}\n", r.p, r.mesh);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SLOPES: &str = "\
[study]
kind = slope-study   # trailing comment
config = B1
[physics]
sigma = 5, 20, 80
[discretization]
p = 10, 12, 16
mesh = M3
[output]
dir = out
";

    #[test]
    fn parses_a_slope_study() {
        let c = ExperimentConfig::parse(SLOPES, None, None).unwrap();
        assert_eq!(c.kind, StudyKind::SlopeStudy);
        assert_eq!(c.config, ConfigId::B1);
        assert_eq!(c.sigmas, vec![5.0, 20.0, 80.0]);
        assert_eq!(c.p_for(2), 16);
        assert_eq!(c.mesh.level, 3);
        assert_eq!(c.out_dir, PathBuf::from("out"));
        assert!(c.reference.is_none());
    }

    #[test]
    fn ranges_and_defaults() {
        let text = SLOPES
            .replace("slope-study", "p-convergence")
            .replace("p = 10, 12, 16", "p = 1..4, 7");
        let c = ExperimentConfig::parse(&text, None, Some("elsewhere".into())).unwrap();
        assert_eq!(c.ps, vec![1, 2, 3, 4, 7]);
        assert_eq!(c.reference.unwrap().p, 20);
        assert_eq!(c.reference.unwrap().mesh.level, 6);
        assert_eq!(c.out_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn overrides_and_forced_configuration() {
        let text = SLOPES
            .replace("config = B1\n", "")
            .replace("sigma = 5, 20, 80", "sigma = 80");
        let text = text.replace("p = 10, 12, 16", "p = 16");
        let c = ExperimentConfig::parse(&text, Some(StudyKind::CornerStudy), None).unwrap();
        assert_eq!(c.config, ConfigId::A);
        let err = ExperimentConfig::parse(SLOPES, Some(StudyKind::CornerStudy), None).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "study.config"));
    }

    #[test]
    fn rejects_bad_input_with_locations() {
        let empty = SLOPES.replace("sigma = 5, 20, 80", "sigma =");
        assert_eq!(
            ExperimentConfig::parse(&empty, None, None).unwrap_err(),
            invalid("physics.sigma", "empty list")
        );
        let unknown = SLOPES.replace("mesh = M3", "meshh = M3");
        assert!(matches!(
            ExperimentConfig::parse(&unknown, None, None).unwrap_err(),
            ConfigError::Syntax { line: 8, .. }
        ));
        let bad = SLOPES.replace("p = 10, 12, 16", "p = 10, x, 16");
        assert!(matches!(
            ExperimentConfig::parse(&bad, None, None).unwrap_err(),
            ConfigError::Value { line: 7, .. }
        ));
        let deg = SLOPES.replace("p = 10, 12, 16", "p = 10, 21, 16");
        assert!(ExperimentConfig::parse(&deg, None, None).is_err());
        let dup = SLOPES.replace("mesh = M3", "mesh = M3\nmesh = M4");
        assert!(matches!(
            ExperimentConfig::parse(&dup, None, None).unwrap_err(),
            ConfigError::Syntax { line: 9, .. }
        ));
        let c_slope = SLOPES.replace("config = B1", "config = C1");
        assert!(ExperimentConfig::parse(&c_slope, None, None).is_err());
    }

    #[test]
    fn canonical_form_ignores_output_location() {
        let a = ExperimentConfig::parse(SLOPES, None, None).unwrap();
        let b = ExperimentConfig::parse(SLOPES, None, Some("x".into())).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let c = ExperimentConfig::parse(&SLOPES.replace("M3", "M4"), None, None).unwrap();
        assert_ne!(a.canonical(), c.canonical());
    }
}
