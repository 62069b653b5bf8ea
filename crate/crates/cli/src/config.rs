//! Flat `key = value` case files with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use blockfv_core::linsolve::LinearMethod;
use blockfv_core::material::Regime;
use blockfv_core::solver::{Method, SolveConfig};
use blockfv_core::verification::{BcKind, Cantilever};

use crate::CliError;

/// Every key a case file may set.
pub const KEYS: &[&str] = &[
    "case",
    "method",
    "mesh",
    "sweep",
    "bc",
    "stretch",
    "omega",
    "material",
    "youngs_modulus",
    "poisson_ratio",
    "regime",
    "density",
    "length",
    "depth",
    "end_traction",
    "tolerance",
    "max_corrections",
    "load_steps",
    "relaxation",
    "linear_solver",
    "linear_tolerance",
    "linear_max_iterations",
    "dump_matrix",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Cantilever,
    Uniaxial,
    Shear,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Cantilever => "cantilever",
            CaseKind::Uniaxial => "uniaxial",
            CaseKind::Shear => "shear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialKind {
    LinearElastic,
    NeoHookean,
}

impl MaterialKind {
    pub fn name(self) -> &'static str {
        match self {
            MaterialKind::LinearElastic => "linear_elastic",
            MaterialKind::NeoHookean => "neo_hookean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: CaseKind,
    pub method: Method,
    /// One entry per run; several when sweeping.
    pub meshes: Vec<(usize, usize)>,
    pub sweep: bool,
    /// `None` for the cantilever, whose boundary conditions are fixed.
    pub bc_kind: Option<BcKind>,
    pub stretch: Option<f64>,
    pub omega: Option<f64>,
    pub material: MaterialKind,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub regime: Regime,
    /// Read and reported but not used by the quasi-static solver.
    pub density: Option<f64>,
    pub cantilever: Cantilever,
    pub solve: SolveConfig,
    pub dump_matrix: bool,
    pub out_dir: PathBuf,
}

/// One `key = value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: String,
}

pub type Layer = BTreeMap<String, Entry>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_key(key: &str, origin: &str) -> Result<(), CliError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(config_err(format!("{origin}: unknown key '{key}'")))
    }
}

/// Parse the text of a case file. `#` starts a comment.
pub fn parse_text(text: &str, name: &str) -> Result<Layer, CliError> {
    let mut layer = Layer::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("{name}:{}", k + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("{origin}: expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        check_key(key, &origin)?;
        if value.is_empty() {
            return Err(config_err(format!("{origin}: key '{key}' has no value")));
        }
        if let Some(prev) = layer.get(key) {
            return Err(config_err(format!("{origin}: key '{key}' already set at {}", prev.origin)));
        }
        layer.insert(key.to_string(), Entry { value: value.to_string(), origin });
    }
    Ok(layer)
}

pub fn parse_file(path: &Path) -> Result<Layer, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_text(&text, &path.display().to_string())
}

/// Build an override layer from `(key, value)` pairs given on the command line.
pub fn flag_layer<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Result<Layer, CliError> {
    let mut layer = Layer::new();
    for (key, value) in pairs {
        let origin = format!("flag {key}");
        check_key(key, &origin)?;
        layer.insert(key.to_string(), Entry { value, origin });
    }
    Ok(layer)
}

/// Overlay `top` on `base`. A mesh on one layer replaces a sweep on the
/// other and vice versa.
pub fn merge(mut base: Layer, top: Layer) -> Layer {
    if top.contains_key("mesh") {
        base.remove("sweep");
    }
    if top.contains_key("sweep") {
        base.remove("mesh");
    }
    base.extend(top);
    base
}

fn parse_value<T: FromStr>(layer: &Layer, key: &str, what: &str) -> Result<Option<T>, CliError> {
    match layer.get(key) {
        None => Ok(None),
        Some(e) => e
            .value
            .parse()
            .map(Some)
            .map_err(|_| config_err(format!("{}: key '{key}' expects {what}, got '{}'", e.origin, e.value))),
    }
}

fn parse_real(layer: &Layer, key: &str) -> Result<Option<f64>, CliError> {
    let v: Option<f64> = parse_value(layer, key, "a number")?;
    match v {
        Some(x) if !x.is_finite() => Err(config_err(format!("{}: key '{key}' must be finite", layer[key].origin))),
        other => Ok(other),
    }
}

fn choice<T>(layer: &Layer, key: &str, options: &[(&str, T)]) -> Result<Option<T>, CliError>
where
    T: Copy,
{
    let Some(e) = layer.get(key) else { return Ok(None) };
    let v = e.value.to_ascii_lowercase();
    options.iter().find(|(name, _)| *name == v).map(|&(_, t)| Some(t)).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        config_err(format!("{}: key '{key}' must be one of {}, got '{}'", e.origin, names.join(", "), e.value))
    })
}

/// `NXxNY`, or a single `N` for a square mesh.
pub fn parse_mesh(s: &str) -> Option<(usize, usize)> {
    let s = s.trim();
    let (nx, ny) = match s.split_once(['x', 'X']) {
        Some((a, b)) => (a.trim().parse().ok()?, b.trim().parse().ok()?),
        None => {
            let n = s.parse().ok()?;
            (n, n)
        }
    };
    (nx > 0 && ny > 0).then_some((nx, ny))
}

fn mesh_list(e: &Entry, key: &str) -> Result<Vec<(usize, usize)>, CliError> {
    e.value
        .split(',')
        .map(|m| parse_mesh(m).ok_or_else(|| config_err(format!("{}: key '{key}' has invalid mesh '{}'", e.origin, m.trim()))))
        .collect()
}

fn bool_value(layer: &Layer, key: &str) -> Result<Option<bool>, CliError> {
    choice(layer, key, &[("true", true), ("false", false), ("1", true), ("0", false), ("yes", true), ("no", false)])
}

fn forbid(layer: &Layer, key: &str, reason: &str) -> Result<(), CliError> {
    match layer.get(key) {
        Some(e) => Err(config_err(format!("{}: key '{key}' {reason}", e.origin))),
        None => Ok(()),
    }
}

/// Validate a merged layer into a runnable case.
pub fn build(layer: &Layer) -> Result<CaseConfig, CliError> {
    let case = choice(layer, "case", &[("cantilever", CaseKind::Cantilever), ("uniaxial", CaseKind::Uniaxial), ("shear", CaseKind::Shear)])?
        .ok_or_else(|| config_err("missing required key 'case'"))?;
    let method = match layer.get("method") {
        None => Method::Nlbc,
        Some(e) => e.value.parse().map_err(|err: blockfv_core::Error| config_err(format!("{}: {err}", e.origin)))?,
    };

    let stretch = parse_real(layer, "stretch")?;
    let omega = parse_real(layer, "omega")?;
    match case {
        CaseKind::Uniaxial => {
            if stretch.is_none() {
                return Err(config_err("missing required key 'stretch' for case uniaxial"));
            }
            forbid(layer, "omega", "does not apply to case uniaxial")?;
        }
        CaseKind::Shear => {
            if omega.is_none() {
                return Err(config_err("missing required key 'omega' for case shear"));
            }
            forbid(layer, "stretch", "does not apply to case shear")?;
        }
        CaseKind::Cantilever => {
            forbid(layer, "stretch", "does not apply to case cantilever")?;
            forbid(layer, "omega", "does not apply to case cantilever")?;
            forbid(layer, "bc", "does not apply to case cantilever, whose boundary conditions are fixed")?;
        }
    }
    if case != CaseKind::Cantilever {
        for key in ["length", "depth", "end_traction"] {
            forbid(layer, key, "only applies to case cantilever")?;
        }
    }
    if let Some(s) = stretch {
        if s <= 0.0 {
            return Err(config_err(format!("{}: key 'stretch' must be positive", layer["stretch"].origin)));
        }
    }

    let bc_kind = match case {
        CaseKind::Cantilever => None,
        _ => Some(choice(layer, "bc", &[("displacement", BcKind::Displacement), ("traction", BcKind::Traction)])?.unwrap_or(BcKind::Displacement)),
    };

    let default_material = match case {
        CaseKind::Cantilever => MaterialKind::LinearElastic,
        _ => MaterialKind::NeoHookean,
    };
    let material = choice(layer, "material", &[("linear_elastic", MaterialKind::LinearElastic), ("neo_hookean", MaterialKind::NeoHookean)])?
        .unwrap_or(default_material);
    if method == Method::Bc && material != MaterialKind::LinearElastic {
        return Err(config_err("method bc integrates the small-strain equations and needs material = linear_elastic"));
    }

    let mut cantilever = Cantilever::default();
    let (default_e, default_nu) = match case {
        CaseKind::Cantilever => (cantilever.youngs_modulus, cantilever.poisson_ratio),
        _ => (0.02e9, 0.3),
    };
    let youngs_modulus = parse_real(layer, "youngs_modulus")?.unwrap_or(default_e);
    let poisson_ratio = parse_real(layer, "poisson_ratio")?.unwrap_or(default_nu);
    cantilever.youngs_modulus = youngs_modulus;
    cantilever.poisson_ratio = poisson_ratio;
    for (key, slot) in [("length", &mut cantilever.length), ("depth", &mut cantilever.depth), ("end_traction", &mut cantilever.end_traction)] {
        if let Some(v) = parse_real(layer, key)? {
            *slot = v;
        }
    }
    if !(cantilever.length > 0.0 && cantilever.depth > 0.0) {
        return Err(config_err("cantilever length and depth must be positive"));
    }
    let regime = choice(layer, "regime", &[("plane_strain", Regime::PlaneStrain), ("plane_stress", Regime::PlaneStress)])?.unwrap_or(Regime::PlaneStrain);
    let density = parse_real(layer, "density")?;

    let (meshes, sweep) = match (layer.get("mesh"), layer.get("sweep")) {
        (Some(_), Some(s)) => return Err(config_err(format!("{}: 'sweep' and 'mesh' cannot both be set", s.origin))),
        (Some(m), None) => {
            let list = mesh_list(m, "mesh")?;
            if list.len() != 1 {
                return Err(config_err(format!("{}: key 'mesh' takes one mesh; use 'sweep' for several", m.origin)));
            }
            (list, false)
        }
        (None, Some(s)) => (mesh_list(s, "sweep")?, true),
        (None, None) => match case {
            CaseKind::Cantilever => (vec![(100, 5)], false),
            _ => (vec![(16, 16)], false),
        },
    };

    let mut solve = SolveConfig::new(method);
    if let Some(t) = parse_real(layer, "tolerance")? {
        solve.outer_tolerance = t;
    }
    if let Some(n) = parse_value(layer, "max_corrections", "a positive integer")? {
        solve.max_corrections = n;
    }
    if let Some(n) = parse_value(layer, "load_steps", "a positive integer")? {
        solve.n_load_steps = n;
    }
    if let Some(w) = parse_real(layer, "relaxation")? {
        if method != Method::Seg {
            return Err(config_err(format!("{}: key 'relaxation' only applies to method seg", layer["relaxation"].origin)));
        }
        solve.relaxation = w;
    }
    if let Some(e) = layer.get("linear_solver") {
        solve.linear.method = e.value.parse::<LinearMethod>().map_err(|err| config_err(format!("{}: {err}", e.origin)))?;
    }
    if let Some(t) = parse_real(layer, "linear_tolerance")? {
        solve.linear.tolerance = t;
    }
    if let Some(n) = parse_value(layer, "linear_max_iterations", "a positive integer")? {
        solve.linear.max_iterations = n;
    }
    let dump_matrix = bool_value(layer, "dump_matrix")?.unwrap_or(false);
    solve.capture_first_system = dump_matrix;
    solve.validate().map_err(|e| config_err(e.to_string()))?;

    let out_dir = layer.get("out").map(|e| PathBuf::from(&e.value)).unwrap_or_else(|| PathBuf::from("out"));

    Ok(CaseConfig {
        case,
        method,
        meshes,
        sweep,
        bc_kind,
        stretch,
        omega,
        material,
        youngs_modulus,
        poisson_ratio,
        regime,
        density,
        cantilever,
        solve,
        dump_matrix,
        out_dir,
    })
}

/// Read an optional case file, apply overrides and validate.
pub fn parse_config(path: Option<&Path>, overrides: Layer) -> Result<CaseConfig, CliError> {
    let base = match path {
        Some(p) => parse_file(p)?,
        None => Layer::new(),
    };
    build(&merge(base, overrides))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<CaseConfig, CliError> {
        build(&parse_text(text, "case.cfg")?)
    }

    fn message(r: Result<CaseConfig, CliError>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn cantilever_defaults() {
        let c = cfg("case = cantilever").unwrap();
        assert_eq!(c.meshes, vec![(100, 5)]);
        assert_eq!(c.youngs_modulus, 200e9);
        assert_eq!(c.material, MaterialKind::LinearElastic);
        assert_eq!(c.bc_kind, None);
    }

    #[test]
    fn missing_stretch_is_named() {
        assert!(message(cfg("case = uniaxial")).contains("'stretch'"));
        assert!(message(cfg("case = shear\nbc = traction")).contains("'omega'"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(message(cfg("case = shear\nomega = 0.1\nfoo = 1")).contains("case.cfg:3: unknown key 'foo'"));
        assert!(message(cfg("case = shear\ncase = shear")).contains("already set at case.cfg:1"));
    }

    #[test]
    fn conflicting_parameters() {
        assert!(message(cfg("case = shear\nomega = 0.1\nstretch = 2")).contains("does not apply"));
        assert!(message(cfg("case = cantilever\nbc = traction")).contains("does not apply"));
        assert!(message(cfg("case = uniaxial\nstretch = 2\nmethod = bc")).contains("linear_elastic"));
        assert!(message(cfg("case = uniaxial\nstretch = 2\nrelaxation = 0.5")).contains("only applies"));
        assert!(message(cfg("case = uniaxial\nstretch = 2\nmesh = 3\nsweep = 3,8")).contains("cannot both"));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_text("case = uniaxial\nstretch = 2\nmethod = nlbc\nmesh = 8x8", "f").unwrap();
        let flags = flag_layer([("method", "seg".to_string()), ("sweep", "3,8".to_string())]).unwrap();
        let c = build(&merge(file, flags)).unwrap();
        assert_eq!(c.method, Method::Seg);
        assert_eq!(c.meshes, vec![(3, 3), (8, 8)]);
        assert!(c.sweep);
    }

    #[test]
    fn mesh_syntax() {
        assert_eq!(parse_mesh("60x3"), Some((60, 3)));
        assert_eq!(parse_mesh(" 16 "), Some((16, 16)));
        assert_eq!(parse_mesh("0x3"), None);
        assert_eq!(parse_mesh("ax3"), None);
    }

    #[test]
    fn comments_and_density() {
        let c = cfg("# header\ncase = shear # inline\nomega = 0.45\ndensity = 1000\n\n").unwrap();
        assert_eq!(c.omega, Some(0.45));
        assert_eq!(c.density, Some(1000.0));
    }
}
