//! Run configuration.
//!
//! The config file is line oriented: `key = value`, one per line. Blank
//! lines and lines starting with `#` are ignored, as is anything after a
//! `#` that follows whitespace. Keys are case sensitive; repeating a key
//! replaces the earlier value. Command-line flags override the file.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::{Path, PathBuf};

use semidisk::observe::{BoundaryArc, Family, Observation, Region};
use semidisk::{PotentialSpec, QuadratureOptions, RationalAngle, Tolerances, Vec2};

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Every key the tool understands, with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("e_cut", "60"),
    ("n_max", "512"),
    ("k_max", "4096"),
    ("n", "0"),
    ("k", "1"),
    ("sign", "1"),
    ("grid_r", "201"),
    ("alpha0", "1/6"),
    ("tau", "6"),
    ("theta", "0"),
    ("steps", "64"),
    ("potential", "zero"),
    ("decay", "1"),
    ("seed", "1"),
    ("T", "1"),
    ("h", "0.05"),
    ("datum", "coherent:0.3,0,0,1"),
    ("z_half", "1.1"),
    ("xi_min", "-1.5"),
    ("xi_max", "1.5"),
    ("q_max", "12"),
    ("classify_tol", "0.001"),
    ("omega", "0"),
    ("cutoff", "16"),
    ("n_theta", "129"),
    ("region", "r>0.8"),
    ("family", "eigen:40"),
    ("tol_geom", "1e-12"),
    ("tol_tangent", "1e-9"),
    ("tol_flow", "1e-10"),
    ("tol_quad", "1e-8"),
    ("tol_bessel", "1e-12"),
    ("tol_unitarity", "1e-10"),
    ("tol_energy", "1e-9"),
    ("tol_time", "1e-6"),
    ("quad_radial", "256"),
    ("quad_angular", "512"),
    ("quad_tol", "1e-9"),
];

/// Raw key/value pairs with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return err(format!("unknown key {key:?}"));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn parse_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = match line.find(" #").or_else(|| line.find("\t#")) {
                Some(p) => &line[..p],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", i + 1));
            };
            self.set(k.trim(), v).map_err(|e| ConfigError(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        self.parse_text(&text)
    }

    fn num(&self, key: &str) -> Result<f64, ConfigError> {
        parse_f64(self.get(key)).map_err(|e| ConfigError(format!("{key}: {e}")))
    }

    fn int(&self, key: &str) -> Result<usize, ConfigError> {
        self.get(key).parse().map_err(|_| ConfigError(format!("{key}: expected a nonnegative integer, got {:?}", self.get(key))))
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.num(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return err(format!("{key} must be positive, got {v}"));
        }
        Ok(v)
    }
}

fn parse_f64(s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.trim().parse().map_err(|_| ConfigError(format!("expected a number, got {s:?}")))?;
    if !v.is_finite() {
        return err(format!("{s:?} is not finite"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(parse_f64).collect()
}

/// A multiple of π written as a decimal (`0.125`) or fraction (`1/8`).
fn parse_pi_multiple(s: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_f64(q)?;
            if q == 0.0 {
                return err(format!("zero denominator in {s:?}"));
            }
            parse_f64(p)? / q
        }
        None => parse_f64(s)?,
    };
    Ok(PI * v)
}

/// `zero | constant:c | radial:c0,c1,... | xlinear:s | bump:x,y,w,a`;
/// radial coefficients are in powers of `r²`.
pub fn parse_potential(s: &str) -> Result<PotentialSpec, ConfigError> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let v = match name.trim() {
        "zero" => PotentialSpec::Zero,
        "constant" => PotentialSpec::Constant(parse_f64(args)?),
        "radial" => PotentialSpec::RadialPolynomial(parse_list(args)?),
        "xlinear" => PotentialSpec::XLinear(parse_f64(args)?),
        "bump" => match parse_list(args)?.as_slice() {
            &[x, y, width, amplitude] => PotentialSpec::GaussianBump { center: Vec2::new(x, y), width, amplitude },
            _ => return err(format!("bump needs x,y,width,amplitude: {s:?}")),
        },
        other => return err(format!("unknown potential {other:?}")),
    };
    v.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(v)
}

/// Observation descriptors, separated by `;`:
///
/// * `r>a`, `r<b`, `a<r<b`: annuli;
/// * `sector:r0,r1,u0,u1` with angles in multiples of π;
/// * `x>c`, `x<c`, `y>c`, `y<c`: half-planes, integrated as masks;
/// * `disk`;
/// * `arc:u0,u1` (multiples of π) or `circle`: boundary observations.
pub fn parse_observations(s: &str) -> Result<Vec<Observation>, ConfigError> {
    s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(parse_observation).collect()
}

fn parse_observation(s: &str) -> Result<Observation, ConfigError> {
    let wrap = |r: semidisk::Result<Region>| r.map(Observation::Interior).map_err(|e| ConfigError(e.to_string()));
    if s == "disk" {
        return Ok(Observation::Interior(Region::disk()));
    }
    if s == "circle" {
        return Ok(Observation::Boundary(BoundaryArc::circle()));
    }
    if let Some(args) = s.strip_prefix("arc:") {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return err(format!("arc needs two angles: {s:?}"));
        }
        let arc = BoundaryArc::new(parse_pi_multiple(parts[0])?, parse_pi_multiple(parts[1])?)
            .map_err(|e| ConfigError(e.to_string()))?;
        return Ok(Observation::Boundary(arc));
    }
    if let Some(args) = s.strip_prefix("sector:") {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 4 {
            return err(format!("sector needs r0,r1,u0,u1: {s:?}"));
        }
        return wrap(Region::sector(
            parse_f64(parts[0])?,
            parse_f64(parts[1])?,
            parse_pi_multiple(parts[2])?,
            parse_pi_multiple(parts[3])?,
        ));
    }
    let pieces: Vec<&str> = s.split('<').map(str::trim).collect();
    match pieces.as_slice() {
        [a, "r", b] => return wrap(Region::annulus(parse_f64(a)?, parse_f64(b)?)),
        ["r", b] => return wrap(Region::annulus(0.0, parse_f64(b)?)),
        [axis @ ("x" | "y"), c] => return Ok(half_plane(s, axis, parse_f64(c)?, false)),
        _ => {}
    }
    match s.split_once('>').map(|(a, b)| (a.trim(), b.trim())) {
        Some(("r", a)) => wrap(Region::annulus(parse_f64(a)?, 1.0)),
        Some((axis @ ("x" | "y"), c)) => Ok(half_plane(s, axis, parse_f64(c)?, true)),
        _ => err(format!("cannot parse region {s:?}")),
    }
}

fn half_plane(name: &str, axis: &str, c: f64, above: bool) -> Observation {
    let use_x = axis == "x";
    Observation::Interior(Region::mask(name, c.abs() < 1.0 || (c <= -1.0) == above, move |x, y| {
        let v = if use_x { x } else { y };
        if above {
            v > c
        } else {
            v < c
        }
    }))
}

/// `eigen:αmax | whispering:n1,n2,... | caustic:γ:count |
/// coherent:p/q:h:count | beats:αmax:count`.
pub fn parse_family(s: &str) -> Result<Family, ConfigError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let count = |t: &str| t.parse::<usize>().map_err(|_| ConfigError(format!("bad count {t:?} in {s:?}")));
    let fam = match parts.as_slice() {
        ["eigen", a] => Family::Eigen { alpha_max: parse_f64(a)? },
        ["whispering", ns] => Family::Whispering {
            ns: ns.split(',').map(count).collect::<Result<_, _>>()?,
        },
        ["caustic", g, c] => Family::Caustic { gamma: parse_f64(g)?, count: count(c)? },
        ["coherent", a, h, c] => {
            let alpha0: RationalAngle = a.parse().map_err(|e: semidisk::Error| ConfigError(e.to_string()))?;
            let h = parse_f64(h)?;
            if !(h > 0.0) {
                return err(format!("h must be positive in {s:?}"));
            }
            let n = count(c)?;
            Family::Coherent { alpha0, h, thetas: (0..n).map(|i| TAU * i as f64 / n as f64).collect() }
        }
        ["beats", a, c] => Family::Beats { alpha_max: parse_f64(a)?, count: count(c)? },
        _ => return err(format!("cannot parse family {s:?}")),
    };
    Ok(fam)
}

/// Initial datum for `husimi` and `pushforward`:
/// `mode:n,k[,sign]`, `coherent:x,y,ξx,ξy` (at scale `h`) or `random:decay`.
#[derive(Debug, Clone, PartialEq)]
pub enum DatumSpec {
    Mode { n: usize, k: usize, sign: i8 },
    Coherent { z: Vec2, xi: Vec2 },
    Random { decay: f64 },
}

pub fn parse_datum(s: &str) -> Result<DatumSpec, ConfigError> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    match name.trim() {
        "mode" => {
            let v: Vec<i64> = args
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| ConfigError(format!("bad integer {t:?}"))))
                .collect::<Result<_, _>>()?;
            match v.as_slice() {
                &[n, k] | &[n, k, _] if n >= 0 && k >= 1 => {
                    let sign = if v.len() == 3 { v[2] } else { 1 };
                    if sign != 1 && sign != -1 {
                        return err("mode sign must be 1 or -1");
                    }
                    Ok(DatumSpec::Mode { n: n as usize, k: k as usize, sign: sign as i8 })
                }
                _ => err(format!("cannot parse mode {s:?}")),
            }
        }
        "coherent" => match parse_list(args)?.as_slice() {
            &[x, y, a, b] => Ok(DatumSpec::Coherent { z: Vec2::new(x, y), xi: Vec2::new(a, b) }),
            _ => err(format!("coherent needs x,y,xi_x,xi_y: {s:?}")),
        },
        "random" => Ok(DatumSpec::Random { decay: parse_f64(args)? }),
        other => err(format!("unknown datum {other:?}")),
    }
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub out_dir: PathBuf,
    pub e_cut: f64,
    pub n_max: usize,
    pub k_max: usize,
    pub tolerances: Tolerances,
    pub tol_unitarity: f64,
    pub tol_energy: f64,
    pub tol_time: f64,
    pub quadrature: QuadratureOptions,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub t_final: f64,
    pub h: f64,
}

impl RunConfig {
    pub fn new(raw: RawConfig, out_dir: PathBuf) -> Result<Self, ConfigError> {
        let tolerances = Tolerances {
            geom: raw.positive("tol_geom")?,
            tangent: raw.positive("tol_tangent")?,
            flow: raw.positive("tol_flow")?,
            quad: raw.positive("tol_quad")?,
            bessel: raw.positive("tol_bessel")?,
        };
        let quadrature = QuadratureOptions {
            radial: raw.int("quad_radial")?.max(1),
            angular: raw.int("quad_angular")?.max(1),
            check: true,
            tolerance: raw.positive("quad_tol")?,
        };
        let n_max = raw.int("n_max")?;
        let k_max = raw.int("k_max")?;
        if n_max > semidisk::bessel::N_MAX || k_max > semidisk::bessel::K_MAX || k_max == 0 {
            return err(format!(
                "n_max ≤ {} and 1 ≤ k_max ≤ {} required",
                semidisk::bessel::N_MAX,
                semidisk::bessel::K_MAX
            ));
        }
        let seed = raw.get("seed").parse().map_err(|_| ConfigError(format!("seed: bad value {:?}", raw.get("seed"))))?;
        Ok(Self {
            e_cut: raw.positive("e_cut")?,
            n_max,
            k_max,
            tolerances,
            tol_unitarity: raw.positive("tol_unitarity")?,
            tol_energy: raw.positive("tol_energy")?,
            tol_time: raw.positive("tol_time")?,
            quadrature,
            potential: parse_potential(raw.get("potential"))?,
            seed,
            t_final: raw.positive("T")?,
            h: raw.positive("h")?,
            raw,
            out_dir,
        })
    }

    pub fn num(&self, key: &str) -> Result<f64, ConfigError> {
        self.raw.num(key)
    }

    pub fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        self.raw.positive(key)
    }

    pub fn int(&self, key: &str) -> Result<usize, ConfigError> {
        self.raw.int(key)
    }

    pub fn get(&self, key: &str) -> &str {
        self.raw.get(key)
    }

    pub fn angle(&self) -> Result<RationalAngle, ConfigError> {
        self.get("alpha0").parse().map_err(|e: semidisk::Error| ConfigError(format!("alpha0: {e}")))
    }

    /// Every tolerance in force, for manifests.
    pub fn tolerance_entries(&self) -> Vec<(&'static str, f64)> {
        let mut v: Vec<(&'static str, f64)> = self.tolerances.entries().to_vec();
        v.push(("tol_unitarity", self.tol_unitarity));
        v.push(("tol_energy", self.tol_energy));
        v.push(("tol_time", self.tol_time));
        v.push(("quad_tol", self.quadrature.tolerance));
        v.push(("trace_tail_limit", semidisk::evolve::TRACE_TAIL_LIMIT));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_grammar() {
        let mut c = RawConfig::default();
        c.parse_text("# comment\n\ne_cut = 30   # inline\nregion = r>0.8; arc:0,1/8\n").unwrap();
        assert_eq!(c.get("e_cut"), "30");
        assert_eq!(c.get("region"), "r>0.8; arc:0,1/8");
        assert!(c.parse_text("nonsense = 1").is_err());
        assert!(c.parse_text("no equals sign").is_err());
    }

    #[test]
    fn observation_grammar() {
        let obs = parse_observations("r>0.8; r<0.5; 0.2<r<0.4; arc:0,1/8; x>0.3; sector:0.1,0.9,0,1/2; circle; disk").unwrap();
        let labels: Vec<String> = obs.iter().map(|o| o.to_string()).collect();
        assert_eq!(labels[0], "0.8<r<1");
        assert_eq!(labels[1], "0<r<0.5");
        assert_eq!(labels[2], "0.2<r<0.4");
        assert!(matches!(obs[3], Observation::Boundary(a) if (a.length() - PI / 8.0).abs() < 1e-15));
        assert!(matches!(&obs[4], Observation::Interior(r) if r.touches_boundary()));
        assert_eq!(obs.len(), 8);
        assert!(parse_observations("r>2").is_err());
        assert!(parse_observations("blob").is_err());
    }

    #[test]
    fn family_and_potential_grammar() {
        assert_eq!(parse_family("eigen:40").unwrap(), Family::Eigen { alpha_max: 40.0 });
        assert_eq!(parse_family("whispering:1,2").unwrap(), Family::Whispering { ns: vec![1, 2] });
        assert!(matches!(parse_family("coherent:1/6:0.05:4").unwrap(), Family::Coherent { thetas, .. } if thetas.len() == 4));
        assert!(parse_family("eigen").is_err());
        assert!(matches!(parse_potential("bump:0.3,0,0.2,5").unwrap(), PotentialSpec::GaussianBump { .. }));
        assert!(parse_potential("bump:0.3").is_err());
        assert!(parse_potential("wiggle").is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let mut raw = RawConfig::default();
        raw.set("tol_flow", "0").unwrap();
        assert!(RunConfig::new(raw, PathBuf::from(".")).is_err());
    }
}
