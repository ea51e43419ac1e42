use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use semidisk::bessel::{bessel_j, bessel_zero, ZeroTable};
use semidisk::evolve::{coherent_state, project, random_state, PolarQuadrature};
use semidisk::geometry::{to_action_angle, AngleClass};
use semidisk::observe::{boundary_quotient, interior_quotient, sweep, BoundaryArc, Region, TimeRule};
use semidisk::phase::{
    action_angle_transform, alpha_decompose, husimi, moment_pushforward, CartesianField, HusimiSpec, TransformOptions,
};
use semidisk::spectrum::siegel_separation;
use semidisk::twomicro::{
    averaged_potential, floquet_propagate, propagate_density, torus_point, DensityMatrix, FloquetOperator,
};
use semidisk::{
    from_action_angle, reflect, Basis, Billiard, Eigenmode, PhasePoint, PotentialSpec, Propagator, Vec2, WaveField,
};

use crate::config::{parse_datum, parse_family, parse_observations, ConfigError, DatumSpec, RunConfig};
use crate::output::{num, Manifest, Table};

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    /// A numeric validation failed; artifacts are still written.
    Validation(String),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<semidisk::Error> for Failure {
    fn from(e: semidisk::Error) -> Self {
        use semidisk::Error as E;
        match e {
            E::QuadratureUnderResolved { .. }
            | E::TraceDiverging { .. }
            | E::AliasingDetected { .. }
            | E::CutoffTooSmall { .. } => Self::Validation(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}

/// Tables and summary produced by one command; `breach` names the first
/// failed validation, if any.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<(Option<String>, Table)>,
    pub summary: Manifest,
    pub breach: Option<String>,
}

impl Report {
    fn table(&mut self, suffix: Option<&str>, t: Table) {
        self.tables.push((suffix.map(str::to_string), t));
    }

    fn check(&mut self, name: &str, value: f64, limit: f64) {
        self.summary.num(name, value);
        if !(value <= limit) && self.breach.is_none() {
            self.breach = Some(format!("{name} = {value:e} exceeds {limit:e}"));
        }
    }
}

pub fn eigen(cfg: &RunConfig) -> Result<Report, Failure> {
    let (n, k) = (cfg.int("n")?, cfg.int("k")?);
    if n > cfg.n_max || k > cfg.k_max || k == 0 {
        return Err(Failure::Config(format!("(n, k) = ({n}, {k}) outside n ≤ {}, 1 ≤ k ≤ {}", cfg.n_max, cfg.k_max)));
    }
    let sign: i8 = match cfg.get("sign") {
        "1" | "+1" => 1,
        "-1" => -1,
        s => return Err(Failure::Config(format!("sign must be 1 or -1, got {s:?}"))),
    };
    let m = Eigenmode::new(n, k, sign)?;
    let nr = cfg.int("grid_r")?.max(2);
    let mut t = Table::new(&["r", "radial", "density"]);
    for i in 0..nr {
        let r = i as f64 / (nr - 1) as f64;
        let v = m.normalized_radial(r);
        t.push(vec![num(r), num(v), num(v * v)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.num("zero", m.zero);
    rep.summary.num("eigenvalue", m.eigenvalue);
    rep.summary.num("l2norm", m.l2norm);
    rep.summary.num("caustic_radius", m.gamma);
    rep.summary.num("normal_derivative", m.normal_derivative());
    rep.check("bessel_residual", bessel_j(n, m.zero)?.abs(), cfg.tolerances.bessel);
    Ok(rep)
}

pub fn billiard(cfg: &RunConfig) -> Result<Report, Failure> {
    let a0 = cfg.angle()?;
    let tau = cfg.num("tau")?;
    let steps = cfg.int("steps")?.max(1);
    let b = Billiard::new(cfg.tolerances);
    let start = torus_point(a0, 1.0, cfg.num("theta")?);
    let mut t = Table::new(&["tau", "x", "y", "xi_x", "xi_y", "E", "J"]);
    let mut drift: f64 = 0.0;
    let mut end = start;
    for i in 0..=steps {
        let s = tau * i as f64 / steps as f64;
        let p = b.flow_alpha0(&start, s, a0)?;
        drift = drift.max((p.speed() - start.speed()).abs()).max((p.angular_momentum() - start.angular_momentum()).abs());
        t.push(vec![num(s), num(p.z.x), num(p.z.y), num(p.xi.x), num(p.xi.y), num(p.speed()), num(p.angular_momentum())]);
        end = p;
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.set("alpha0", format!("{a0}"));
    rep.summary.set("chords_per_period", a0.chords_per_period());
    rep.summary.num("period", a0.period());
    rep.summary.num("tau_over_period", tau / a0.period());
    rep.summary.num("closure_residual", end.class_distance(&start, cfg.tolerances.tangent));
    rep.check("invariant_drift", drift, cfg.tolerances.flow);
    Ok(rep)
}

fn datum(cfg: &RunConfig, basis: &Arc<Basis>) -> Result<(WaveField, f64), Failure> {
    Ok(match parse_datum(cfg.get("datum"))? {
        DatumSpec::Mode { n, k, sign } => (WaveField::mode(basis.clone(), n, k, sign)?, 1.0),
        DatumSpec::Random { decay } => (random_state(basis.clone(), decay, cfg.seed)?, 1.0),
        DatumSpec::Coherent { z, xi } => {
            let n_r = (2.0 * basis.max_zero()).ceil() as usize + 64;
            let n_u = (4 * basis.max_angular() + 64).next_power_of_two();
            let u = project(basis.clone(), &PolarQuadrature::new(n_r, n_u), coherent_state(z, xi, cfg.h))?;
            let norm = u.norm();
            (u.normalized()?, norm)
        }
    })
}

pub fn evolve(cfg: &RunConfig) -> Result<Report, Failure> {
    let basis = Arc::new(Basis::new(cfg.e_cut)?);
    let prop = Propagator::build(&cfg.potential, basis.clone(), &cfg.quadrature)?;
    let u = random_state(basis.clone(), cfg.num("decay")?, cfg.seed)?;
    let e0 = prop.hamiltonian.energy(&u)?;
    let state = prop.spectral(&u)?;
    let steps = cfg.int("steps")?.max(1);
    let mut t = Table::new(&["t", "norm", "norm_error", "energy", "energy_error"]);
    let (mut worst_norm, mut worst_energy): (f64, f64) = (0.0, 0.0);
    for i in 0..=steps {
        let time = cfg.t_final * i as f64 / steps as f64;
        let v = state.at(time);
        let (n, e) = (v.norm(), prop.hamiltonian.energy(&v)?);
        worst_norm = worst_norm.max((n - 1.0).abs());
        worst_energy = worst_energy.max((e - e0).abs() / e0.abs().max(1.0));
        t.push(vec![num(time), num(n), num(n - 1.0), num(e), num(e - e0)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.set("basis_size", basis.len());
    rep.summary.set("blocks", prop.hamiltonian.blocks().len());
    if let Some(d) = prop.hamiltonian.quadrature_deviation {
        rep.summary.num("quadrature_deviation", d);
    }
    rep.summary.num("initial_energy", e0);
    rep.check("max_norm_error", worst_norm, cfg.tol_unitarity);
    rep.check("max_relative_energy_error", worst_energy, cfg.tol_energy);
    Ok(rep)
}

pub fn husimi_cmd(cfg: &RunConfig) -> Result<Report, Failure> {
    let basis = Arc::new(Basis::new(cfg.e_cut)?);
    let (u, projected) = datum(cfg, &basis)?;
    let spec = HusimiSpec::resolving(cfg.h, cfg.positive("z_half")?, cfg.num("xi_min")?, cfg.num("xi_max")?);
    let g = husimi(&u, cfg.h, &spec)?;
    let (nz, nxi) = (g.z_axis.len(), g.xi_axis.len());
    let mut t = Table::new(&["ix", "iy", "kx", "ky", "value"]);
    for ix in 0..nz {
        for iy in 0..nz {
            for kx in 0..nxi {
                for ky in 0..nxi {
                    t.push(vec![ix.to_string(), iy.to_string(), kx.to_string(), ky.to_string(), num(g.value(ix, iy, kx, ky))]);
                }
            }
        }
    }
    let axis = |v: &[f64]| {
        let mut a = Table::new(&["index", "value"]);
        for (i, x) in v.iter().enumerate() {
            a.push(vec![i.to_string(), num(*x)]);
        }
        a
    };
    let mut rep = Report::default();
    rep.table(None, t);
    rep.table(Some("z_axis"), axis(&g.z_axis));
    rep.table(Some("xi_axis"), axis(&g.xi_axis));
    let top = g.argmax();
    rep.summary.set("basis_size", basis.len());
    rep.summary.num("projection_norm", projected);
    rep.summary.num("mass", g.mass());
    rep.summary.set("argmax", format!("{},{},{},{}", top.z.x, top.z.y, top.xi.x, top.xi.y));
    let min = g.values.iter().copied().fold(f64::INFINITY, f64::min);
    rep.check("negative_part", (-min).max(0.0), 0.0);
    Ok(rep)
}

fn measure(cfg: &RunConfig) -> Result<(semidisk::PhaseMeasure<semidisk::MomentAtom>, f64), Failure> {
    let basis = Arc::new(Basis::new(cfg.e_cut)?);
    let (u, _) = datum(cfg, &basis)?;
    Ok((moment_pushforward(&u, cfg.h)?, u.norm().powi(2)))
}

pub fn pushforward(cfg: &RunConfig) -> Result<Report, Failure> {
    let (m, norm2) = measure(cfg)?;
    let mut t = Table::new(&["E", "J", "weight"]);
    for (a, w) in m.atoms.iter().zip(&m.weights) {
        t.push(vec![num(a.speed), num(a.angular_momentum), num(*w)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.num("total_mass", m.total_mass);
    rep.summary.num("norm_squared", norm2);
    rep.check("mass_error", (m.total_mass - norm2).abs(), 1e-12 * norm2.max(1.0));
    Ok(rep)
}

pub fn decompose(cfg: &RunConfig) -> Result<Report, Failure> {
    let (m, _) = measure(cfg)?;
    let p = alpha_decompose(&m, cfg.int("q_max")? as u64, cfg.positive("classify_tol")?)?;
    let mut t = Table::new(&["class", "alpha", "mass"]);
    for (c, w) in &p.parts {
        let (label, alpha) = match c {
            AngleClass::Rational(r) => (format!("pi*{r}"), num(r.value())),
            AngleClass::Irrational => ("irrational".to_string(), String::new()),
        };
        t.push(vec![label, alpha, num(*w)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.num("total_mass", p.total_mass);
    rep.summary.num("rational_mass", p.rational_mass());
    let sum: f64 = p.parts.iter().map(|x| x.1).sum();
    rep.check("partition_error", (sum - p.total_mass).abs(), 1e-12 * p.total_mass.max(1.0));
    Ok(rep)
}

/// Gaussian envelope in `m` of width `cutoff/6` with deterministic phases.
fn floquet_state(cutoff: usize, seed: u64) -> DVector<Complex64> {
    let w = (cutoff as f64 / 6.0).max(1.0);
    let v = DVector::from_fn(2 * cutoff + 1, |i, _| {
        let m = i as f64 - cutoff as f64;
        Complex64::from_polar((-(m * m) / (2.0 * w * w)).exp(), (seed as f64 + 0.7 * m * m).sin() * 3.0)
    });
    v.normalize()
}

pub fn floquet(cfg: &RunConfig) -> Result<Report, Failure> {
    let a0 = cfg.angle()?;
    let cutoff = cfg.int("cutoff")?;
    let avg = averaged_potential(&cfg.potential, a0, cfg.int("n_theta")?, &Billiard::new(cfg.tolerances))?;
    let op = FloquetOperator::new(&avg, cfg.num("omega")?, cutoff)?;
    let v0 = floquet_state(cutoff, cfg.seed);
    let s0 = DensityMatrix::mixture(&[(0.7, v0.clone()), (0.3, floquet_state(cutoff, cfg.seed + 1))])?;
    let e0 = s0.eigenvalues();
    let steps = cfg.int("steps")?.max(1);
    let mut t = Table::new(&["t", "norm_error", "unitarity_error", "density_spectrum_drift"]);
    let (mut worst_u, mut worst_d): (f64, f64) = (0.0, 0.0);
    for i in 0..=steps {
        let time = cfg.t_final * i as f64 / steps as f64;
        let v = floquet_propagate(&v0, time, &op)?;
        let u = op.unitary(time);
        let unitarity = (u.adjoint() * &u - nalgebra::DMatrix::identity(op.dim(), op.dim()))
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        let e = propagate_density(&s0, time, &op)?.eigenvalues();
        let drift = e0.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_u = worst_u.max(unitarity).max((v.norm() - 1.0).abs());
        worst_d = worst_d.max(drift);
        t.push(vec![num(time), num(v.norm() - 1.0), num(unitarity), num(drift)]);
    }
    let mut pot = Table::new(&["theta", "value"]);
    for (th, v) in avg.thetas.iter().zip(&avg.values) {
        pot.push(vec![num(*th), num(*v)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.table(Some("potential"), pot);
    rep.summary.set("alpha0", format!("{a0}"));
    rep.summary.set("dimension", op.dim());
    rep.summary.num("potential_oscillation", avg.oscillation());
    rep.check("max_unitarity_error", worst_u, cfg.tol_unitarity);
    rep.check("max_density_spectrum_drift", worst_d, 1e-8);
    Ok(rep)
}

pub fn observe(cfg: &RunConfig) -> Result<Report, Failure> {
    let family = parse_family(cfg.get("family"))?;
    let obs = parse_observations(cfg.get("region"))?;
    let r = sweep(&family, &obs, cfg.t_final, &cfg.potential, &cfg.quadrature)?;
    let mut t = Table::new(&["datum", "observation", "quotient", "time_rule", "richardson"]);
    let mut worst: f64 = 0.0;
    for row in &r.rows {
        let rule = match row.rule {
            TimeRule::Simpson(n) => format!("simpson:{n}"),
            TimeRule::Spectral => "spectral".to_string(),
        };
        worst = worst.max(row.richardson / row.quotient.abs().max(f64::MIN_POSITIVE));
        t.push(vec![row.datum.clone(), row.observation.clone(), num(row.quotient), rule, num(row.richardson)]);
    }
    let mut rep = Report::default();
    rep.table(None, t);
    rep.summary.set("family", &r.family);
    rep.summary.set("family_size", r.rows.len() / obs.len().max(1));
    rep.summary.set("basis_e_cut", num(family.basis()?.e_cut()));
    for (o, m) in &r.minima {
        rep.summary.num(format!("min_quotient[{o}]"), *m);
    }
    rep.check("max_relative_richardson", worst, cfg.tol_time);
    Ok(rep)
}

/// Weyl sequence `frac(i φ)`; deterministic and well spread.
fn weyl(i: usize, stream: f64) -> f64 {
    ((i as f64 + 1.0) * (0.618_033_988_749_894_9 + stream)).fract()
}

/// `(name, value, limit)` for every invariant checked by `selftest`.
pub fn selftest_checks(cfg: &RunConfig) -> Result<Vec<(String, f64, f64)>, Failure> {
    let tol = cfg.tolerances;
    let b = Billiard::new(tol);
    let mut out: Vec<(String, f64, f64)> = Vec::new();
    let mut push = |name: &str, v: f64, lim: f64| out.push((name.to_string(), v, lim));

    let points: Vec<PhasePoint> = (0..200)
        .map(|i| {
            let (r, u, th) = (0.9 * weyl(i, 0.0).sqrt(), TAU * weyl(i, 0.1), TAU * weyl(i, 0.2));
            PhasePoint::from_coords(r * u.cos(), r * u.sin(), 1.3 * th.cos(), 1.3 * th.sin())
        })
        .filter(|p| p.angular_momentum().abs() / p.speed() < 0.99)
        .collect();

    let mut inv: f64 = 0.0;
    for i in 0..200 {
        let u = TAU * weyl(i, 0.3);
        let z = Vec2::new(u.cos(), u.sin());
        let xi = Vec2::new(weyl(i, 0.4) - 0.5, weyl(i, 0.5) - 0.5);
        inv = inv.max((reflect(&z, &reflect(&z, &xi, &tol)?, &tol)? - xi).norm());
    }
    push("reflection_involution", inv, 1e-15);

    let (mut group, mut round): (f64, f64) = (0.0, 0.0);
    for (i, p) in points.iter().enumerate() {
        let (t1, t2) = (10.0 * weyl(i, 0.6), 10.0 * weyl(i, 0.7));
        let a = b.flow(&p, t1 + t2)?;
        let c = b.flow(&b.flow(&p, t1)?, t2)?;
        group = group.max(a.class_distance(&c, tol.tangent));
        round = round.max(from_action_angle(&to_action_angle(p)?).distance(p));
    }
    push("flow_group_law", group, 1e-10);
    push("action_angle_round_trip", round, 1e-12);

    let (mut z, mut xi) = (Vec2::new(1.0, 0.0), Vec2::new(1.0f64.cos(), 1.0f64.sin()));
    let j0 = z.x * xi.y - z.y * xi.x;
    let mut drift: f64 = 0.0;
    for k in 1..=1000 {
        (z, xi) = b.first_return(&z, &xi)?;
        let d = (xi.norm() - 1.0).abs().max((z.x * xi.y - z.y * xi.x - j0).abs());
        drift = drift.max(d / k as f64);
    }
    push("bounce_invariant_drift_per_bounce", drift, 1e-12);

    let a0 = "1/6".parse().map_err(|e: semidisk::Error| Failure::Config(e.to_string()))?;
    let p = torus_point(a0, 1.0, 0.37);
    push("triangle_closure", b.flow_alpha0(&p, 6.0, a0)?.class_distance(&p, tol.tangent), 1e-9);

    let mut rec: f64 = 0.0;
    for i in 0..200 {
        let n = 1 + (weyl(i, 0.8) * 100.0) as usize;
        let x = 0.1 + 200.0 * weyl(i, 0.9);
        rec = rec.max((bessel_j(n - 1, x)? + bessel_j(n + 1, x)? - 2.0 * n as f64 / x * bessel_j(n, x)?).abs());
    }
    push("bessel_recurrence", rec, 1e-10);

    let table = ZeroTable::new(17, 51)?;
    let (mut zero_res, mut interlace): (f64, f64) = (0.0, 0.0);
    for n in 0..=16 {
        for k in 1..=50 {
            let a = table.zero(n, k);
            zero_res = zero_res.max(bessel_j(n, a)?.abs());
            if !(a < table.zero(n + 1, k) && table.zero(n + 1, k) < table.zero(n, k + 1)) {
                interlace += 1.0;
            }
        }
    }
    push("bessel_zero_residual", zero_res, tol.bessel);
    push("zero_interlacing_violations", interlace, 0.0);
    let mut sep = f64::INFINITY;
    for n in 0..=16 {
        for m in 0..n {
            sep = sep.min(siegel_separation(n, m, 50)?);
        }
    }
    push("siegel_separation_negated", -sep, 0.0);

    let basis = Arc::new(Basis::new(20.0)?);
    let bump = PotentialSpec::GaussianBump { center: Vec2::new(0.3, -0.1), width: 0.2, amplitude: 5.0 };
    let prop = Propagator::build(&bump, basis.clone(), &cfg.quadrature)?;
    let u = random_state(basis.clone(), 1.0, cfg.seed)?;
    let e0 = prop.hamiltonian.energy(&u)?;
    let v = prop.propagate(&u, 100.0)?;
    push("propagator_unitarity_t100", (v.norm() - 1.0).abs(), cfg.tol_unitarity);
    push("propagator_energy_t100", (prop.hamiltonian.energy(&v)? - e0).abs() / e0.abs().max(1.0), cfg.tol_energy);

    let avg = averaged_potential(&bump, a0, 129, &b)?;
    let op = FloquetOperator::new(&avg, 0.5, 24)?;
    let fv = floquet_propagate(&floquet_state(24, cfg.seed), 0.7, &op)?;
    push("floquet_unitarity", (fv.norm() - 1.0).abs(), cfg.tol_unitarity);
    let s0 = DensityMatrix::mixture(&[(0.5, floquet_state(24, 1)), (0.5, floquet_state(24, 2))])?;
    let e = propagate_density(&s0, 0.7, &op)?.eigenvalues();
    let d = s0.eigenvalues().iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    push("density_spectrum_drift", d, 1e-8);

    let h = 0.05;
    let hb = Arc::new(Basis::new(60.0)?);
    let q = PolarQuadrature::new(200, 512);
    let cs = project(hb, &q, coherent_state(Vec2::new(0.3, 0.0), Vec2::new(0.0, 1.0), h))?;
    let g = husimi(&cs, h, &HusimiSpec::resolving(h, 1.1, -1.5, 1.5))?;
    push("husimi_negative_part", -g.values.iter().copied().fold(0.0, f64::min), 0.0);
    push("husimi_mass_defect", (g.mass() - cs.norm().powi(2)).abs(), 0.05);

    let f = CartesianField::from_fn(1.0, 64, |x, y| Complex64::new((-(x * x + y * y) / 0.02).exp(), 0.0));
    let uf = action_angle_transform(&f, &TransformOptions::default())?;
    push("transform_unitarity", (uf.spectrum.norm_squared() - f.norm_squared()).abs() / f.norm_squared(), 1e-6);

    let free = Propagator::build(&PotentialSpec::Zero, basis.clone(), &cfg.quadrature)?;
    push("full_disk_quotient", (interior_quotient(&u, &free, &Region::disk(), 0.5)?.value - 1.0).abs(), 1e-8);
    let mode = WaveField::mode(basis.clone(), 3, 2, 1)?;
    let ring = interior_quotient(&mode, &free, &Region::annulus(0.2, 0.7)?, 1.0)?.value;
    let part = interior_quotient(&mode, &free, &Region::sector(0.2, 0.7, 0.5, 2.0)?, 1.0)?.value;
    push("sector_identity", (part - 1.5 / TAU * ring).abs(), 1e-10);
    let alpha = bessel_zero(3, 2)?;
    let arc = BoundaryArc::new(0.0, TAU / 16.0)?;
    let closed = arc.length() / TAU * 2.0 * alpha * alpha / (1.0 + alpha * alpha);
    push("boundary_closed_form", (boundary_quotient(&mode, &free, &arc, 1.0)?.value - closed).abs(), 1e-8);
    Ok(out)
}

pub fn selftest(cfg: &RunConfig) -> Result<Report, Failure> {
    let checks = selftest_checks(cfg)?;
    let mut rep = Report::default();
    let mut t = Table::new(&["check", "value", "limit", "pass"]);
    for (name, v, lim) in &checks {
        t.push(vec![name.clone(), num(*v), num(*lim), (v <= lim).to_string()]);
        rep.check(name, *v, *lim);
    }
    rep.summary.set("checks", checks.len());
    rep.summary.set("failures", checks.iter().filter(|c| !(c.1 <= c.2)).count());
    rep.table(None, t);
    Ok(rep)
}
