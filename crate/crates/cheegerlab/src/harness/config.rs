//! Flat `key=value` experiment configuration.
//!
//! One option per line; `#` starts a comment. Scalar keys follow last-wins
//! semantics, list keys (`p`, `q`, `battery`, `punctures`) replace the
//! default list on first use and append afterwards. Serialization is
//! canonical: keys appear in a fixed order and floats print via `Display`,
//! so parse -> serialize -> parse is the identity.

use crate::eigensolver::SolverOptions;
use crate::geometry::{make_grid, Grid2D, PerimeterMode, ShapeSpec};
use crate::shapeopt::{halton, AnnealOptions};
use crate::{Error, Result};

const MIN_RESOLUTION: usize = 16;
const MAX_RESOLUTION: usize = 1024;

/// Every knob an experiment run can take, in one flat bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Subcommand this configuration drives (`ratio`, `verify`, ...).
    pub command: String,
    /// Domain description in the shape mini-language, e.g. `disk:0.5,0.5,0.4`.
    pub shape: String,
    /// Cells along the first axis; the second follows the extent aspect.
    pub resolution: usize,
    /// Bounding-box side lengths.
    pub extent: (f64, f64),
    /// Exponents `p` (list key; `inf` allowed).
    pub p_list: Vec<f64>,
    /// Exponents `q` (list key; `inf` allowed).
    pub q_list: Vec<f64>,
    /// Perimeter flavor for Cheeger computations.
    pub mode: PerimeterMode,
    /// Domains the verification battery runs over (list key `battery`).
    pub battery_domains: Vec<String>,
    /// Scales every tolerance the battery judges against.
    pub slack_scale: f64,
    /// Directory reports and images are written to.
    pub output_dir: String,
    /// Seed shared by the solver and the annealer.
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub continuation: bool,
    /// Annealing schedule.
    pub steps: usize,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub flip_batch: usize,
    pub connectivity_repair: bool,
    /// Hole counts for the puncture experiment (list key `punctures`).
    pub puncture_counts: Vec<i64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        let anneal = AnnealOptions::default();
        Self {
            command: "ratio".into(),
            shape: "square".into(),
            resolution: 128,
            extent: (1.0, 1.0),
            p_list: vec![2.0],
            q_list: vec![1.0],
            mode: PerimeterMode::Isotropic,
            battery_domains: default_domains(),
            slack_scale: 1.0,
            output_dir: "out".into(),
            seed: solver.seed,
            max_iterations: solver.max_iterations,
            tolerance: solver.tolerance,
            continuation: solver.continuation,
            steps: anneal.steps,
            initial_temperature: anneal.initial_temperature,
            cooling: anneal.cooling,
            flip_batch: anneal.flip_batch,
            connectivity_repair: anneal.connectivity_repair,
            puncture_counts: vec![0, 5, 20, 80],
        }
    }
}

pub(crate) fn default_domains() -> Vec<String> {
    [
        "disk",
        "square",
        "rect-half",
        "rect-thin",
        "lshape",
        "annulus",
        "punctured-disk",
    ]
    .map(String::from)
    .to_vec()
}

impl ExperimentConfig {
    /// Parse a configuration file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut fresh_p = true;
        let mut fresh_q = true;
        let mut fresh_battery = true;
        let mut fresh_punctures = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Parse(format!("line {}: {what} for key {key:?}: {value:?}", lineno + 1))
            };
            match key {
                "command" => cfg.command = value.to_string(),
                "shape" => {
                    parse_shape(value)?;
                    cfg.shape = value.to_string();
                }
                "resolution" => {
                    cfg.resolution = value.parse().map_err(|_| bad("invalid integer"))?
                }
                "extent_w" => cfg.extent.0 = value.parse().map_err(|_| bad("invalid float"))?,
                "extent_h" => cfg.extent.1 = value.parse().map_err(|_| bad("invalid float"))?,
                "p" => {
                    if std::mem::take(&mut fresh_p) {
                        cfg.p_list.clear();
                    }
                    cfg.p_list.push(parse_exponent(value).map_err(|_| bad("invalid exponent"))?);
                }
                "q" => {
                    if std::mem::take(&mut fresh_q) {
                        cfg.q_list.clear();
                    }
                    cfg.q_list.push(parse_exponent(value).map_err(|_| bad("invalid exponent"))?);
                }
                "mode" => {
                    cfg.mode = match value {
                        "isotropic" => PerimeterMode::Isotropic,
                        "anisotropic" => PerimeterMode::Anisotropic,
                        _ => return Err(bad("expected isotropic or anisotropic")),
                    }
                }
                "battery" => {
                    if std::mem::take(&mut fresh_battery) {
                        cfg.battery_domains.clear();
                    }
                    cfg.battery_domains.push(value.to_string());
                }
                "slack_scale" => {
                    cfg.slack_scale = value.parse().map_err(|_| bad("invalid float"))?
                }
                "output_dir" => cfg.output_dir = value.to_string(),
                "seed" => cfg.seed = value.parse().map_err(|_| bad("invalid integer"))?,
                "max_iterations" => {
                    cfg.max_iterations = value.parse().map_err(|_| bad("invalid integer"))?
                }
                "tolerance" => cfg.tolerance = value.parse().map_err(|_| bad("invalid float"))?,
                "continuation" => {
                    cfg.continuation = value.parse().map_err(|_| bad("invalid bool"))?
                }
                "steps" => cfg.steps = value.parse().map_err(|_| bad("invalid integer"))?,
                "initial_temperature" => {
                    cfg.initial_temperature = value.parse().map_err(|_| bad("invalid float"))?
                }
                "cooling" => cfg.cooling = value.parse().map_err(|_| bad("invalid float"))?,
                "flip_batch" => {
                    cfg.flip_batch = value.parse().map_err(|_| bad("invalid integer"))?
                }
                "connectivity_repair" => {
                    cfg.connectivity_repair = value.parse().map_err(|_| bad("invalid bool"))?
                }
                "punctures" => {
                    if std::mem::take(&mut fresh_punctures) {
                        cfg.puncture_counts.clear();
                    }
                    cfg.puncture_counts
                        .push(value.parse().map_err(|_| bad("invalid integer"))?);
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key {key:?}",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&self.resolution) {
            return Err(Error::InvalidInput(format!(
                "resolution {} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]",
                self.resolution
            )));
        }
        if !(self.extent.0 > 0.0 && self.extent.1 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "extent must be positive, got {:?}",
                self.extent
            )));
        }
        if !(self.slack_scale >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "slack_scale must be nonnegative, got {}",
                self.slack_scale
            )));
        }
        Ok(())
    }

    /// Canonical text form: fixed key order, floats via `Display`.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("command", self.command.clone());
        kv("shape", self.shape.clone());
        kv("resolution", self.resolution.to_string());
        kv("extent_w", self.extent.0.to_string());
        kv("extent_h", self.extent.1.to_string());
        for &p in &self.p_list {
            kv("p", exponent_to_string(p));
        }
        for &q in &self.q_list {
            kv("q", exponent_to_string(q));
        }
        kv("mode", self.mode.to_string());
        for name in &self.battery_domains {
            kv("battery", name.clone());
        }
        kv("slack_scale", self.slack_scale.to_string());
        kv("output_dir", self.output_dir.clone());
        kv("seed", self.seed.to_string());
        kv("max_iterations", self.max_iterations.to_string());
        kv("tolerance", self.tolerance.to_string());
        kv("continuation", self.continuation.to_string());
        kv("steps", self.steps.to_string());
        kv("initial_temperature", self.initial_temperature.to_string());
        kv("cooling", self.cooling.to_string());
        kv("flip_batch", self.flip_batch.to_string());
        kv("connectivity_repair", self.connectivity_repair.to_string());
        for &n in &self.puncture_counts {
            kv("punctures", n.to_string());
        }
        s
    }

    /// Grid implied by `resolution` and `extent`: `resolution` cells along
    /// the wider-to-narrower first axis, the second axis quantized to keep
    /// cells square.
    pub fn grid(&self) -> Result<Grid2D> {
        let nx = self.resolution;
        let aspect = self.extent.1 / self.extent.0;
        let ny = ((nx as f64) * aspect).round().max(1.0) as usize;
        let actual_h = self.extent.0 * ny as f64 / nx as f64;
        make_grid(nx, ny, (self.extent.0, actual_h))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: self.seed,
            continuation: self.continuation,
        }
    }

    pub fn anneal_options(&self) -> AnnealOptions {
        AnnealOptions {
            steps: self.steps,
            initial_temperature: self.initial_temperature,
            cooling: self.cooling,
            flip_batch: self.flip_batch,
            seed: self.seed,
            connectivity_repair: self.connectivity_repair,
        }
    }
}

fn exponent_to_string(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

/// Parse an exponent, accepting `inf`/`infinity` (any case) for the
/// supremum-norm endpoint.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid exponent {s:?}")))
}

/// Parse the shape mini-language:
/// `square | lshape | disk:cx,cy,r | rect:x,y,w,h | annulus:cx,cy,ro,ri |
/// stadium:cx,cy,len,h | punctured-disk:cx,cy,r,n`.
pub fn parse_shape(s: &str) -> Result<ShapeSpec> {
    let (head, args) = match s.split_once(':') {
        Some((h, a)) => (h.trim(), a.trim()),
        None => (s.trim(), ""),
    };
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid shape argument {t:?} in {s:?}")))
            })
            .collect()
    };
    let arity = |want: usize, got: usize| -> Result<()> {
        if want == got {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "shape {head:?} takes {want} arguments, got {got}"
            )))
        }
    };
    match head {
        "square" => {
            arity(0, if args.is_empty() { 0 } else { 1 })?;
            Ok(ShapeSpec::Rect {
                x: 0.0,
                y: 0.0,
                w: 1.0,
                h: 1.0,
            })
        }
        "lshape" => {
            arity(0, if args.is_empty() { 0 } else { 1 })?;
            Ok(ShapeSpec::lshape_unit())
        }
        "disk" => {
            let v = nums()?;
            arity(3, v.len())?;
            Ok(ShapeSpec::Disk {
                cx: v[0],
                cy: v[1],
                r: v[2],
            })
        }
        "rect" => {
            let v = nums()?;
            arity(4, v.len())?;
            Ok(ShapeSpec::Rect {
                x: v[0],
                y: v[1],
                w: v[2],
                h: v[3],
            })
        }
        "annulus" => {
            let v = nums()?;
            arity(4, v.len())?;
            Ok(ShapeSpec::annulus(v[0], v[1], v[2], v[3]))
        }
        "stadium" => {
            let v = nums()?;
            arity(4, v.len())?;
            Ok(ShapeSpec::stadium(v[0], v[1], v[2], v[3]))
        }
        "punctured-disk" => {
            let v = nums()?;
            arity(4, v.len())?;
            let n = v[3];
            if n < 0.0 || n.fract() != 0.0 {
                return Err(Error::Parse(format!(
                    "hole count must be a nonnegative integer, got {n}"
                )));
            }
            Ok(punctured_disk(v[0], v[1], v[2], n as usize))
        }
        _ => Err(Error::Parse(format!("unknown shape {s:?}"))),
    }
}

/// Disk with `n` deterministic low-discrepancy holes inside radius `0.5 r`.
pub(crate) fn punctured_disk(cx: f64, cy: f64, r: f64, n: usize) -> ShapeSpec {
    let mut holes = Vec::with_capacity(n);
    let mut index = 1;
    while holes.len() < n {
        let u = 2.0 * halton(index, 2) - 1.0;
        let v = 2.0 * halton(index, 3) - 1.0;
        index += 1;
        if u * u + v * v <= 1.0 {
            holes.push((cx + 0.5 * r * u, cy + 0.5 * r * v));
        }
    }
    ShapeSpec::Punctured {
        base: Box::new(ShapeSpec::Disk { cx, cy, r }),
        holes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_canonical_string();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.to_canonical_string(), text);
    }

    #[test]
    fn parsing_is_idempotent_on_a_nontrivial_file() {
        let text = "\
            # ratio sweep over two exponent pairs\n\
            command = sweep\n\
            shape = disk:0.5,0.5,0.4\n\
            resolution = 64\n\
            p = 2\n\
            p = inf\n\
            q = 1\n\
            seed = 7\n\
            tolerance = 1e-9\n\
            battery = disk\n\
            battery = square\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.p_list, vec![2.0, f64::INFINITY]);
        assert_eq!(cfg.q_list, vec![1.0]);
        assert_eq!(cfg.battery_domains, vec!["disk", "square"]);
        assert_eq!(cfg.tolerance, 1e-9);
        let canon = cfg.to_canonical_string();
        let again = ExperimentConfig::parse(&canon).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_canonical_string(), canon);
    }

    #[test]
    fn scalar_keys_take_the_last_value_and_lists_append() {
        let cfg = ExperimentConfig::parse("resolution=32\nresolution=64\np=2\np=3\n").unwrap();
        assert_eq!(cfg.resolution, 64);
        assert_eq!(cfg.p_list, vec![2.0, 3.0]);
    }

    #[test]
    fn resolution_bounds_and_unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::parse("resolution=8\n"),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("resolution=2048\n"),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("granularity=64\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("just a line\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn exponents_parse_inf_in_any_case() {
        assert_eq!(parse_exponent("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_exponent("Infinity").unwrap(), f64::INFINITY);
        assert_eq!(parse_exponent("2.5").unwrap(), 2.5);
        assert!(parse_exponent("two").is_err());
    }

    #[test]
    fn shapes_parse_and_reject_bad_arity() {
        assert!(matches!(
            parse_shape("disk:0.5,0.5,0.4").unwrap(),
            ShapeSpec::Disk { .. }
        ));
        assert!(matches!(
            parse_shape("rect:0,0,1,0.5").unwrap(),
            ShapeSpec::Rect { .. }
        ));
        assert!(parse_shape("square").is_ok());
        assert!(parse_shape("lshape").is_ok());
        assert!(parse_shape("disk:0.5,0.5").is_err());
        assert!(parse_shape("blob:1,2").is_err());
        let punctured = parse_shape("punctured-disk:0.5,0.5,0.4,3").unwrap();
        match punctured {
            ShapeSpec::Punctured { holes, .. } => assert_eq!(holes.len(), 3),
            other => panic!("expected punctured disk, got {other:?}"),
        }
        assert!(parse_shape("punctured-disk:0.5,0.5,0.4,-1").is_err());
    }

    #[test]
    fn grid_quantizes_the_second_axis_to_square_cells() {
        let cfg = ExperimentConfig {
            resolution: 100,
            extent: (1.0, 0.52),
            ..Default::default()
        };
        let grid = cfg.grid().unwrap();
        assert_eq!((grid.nx(), grid.ny()), (100, 52));
        assert!((grid.h() - 0.01).abs() < 1e-12);
    }
}
