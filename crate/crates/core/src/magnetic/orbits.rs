use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use super::field::MagneticField;
use super::flow::{flow, poincare_return, wrap_unit, ReducedState, ReturnPoint, Stop};
use super::MagneticError;
use crate::ode::StepControl;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitOptions {
    pub integrator_tol: f64,
    /// Newton stops once the lifted displacement is below this.
    pub orbit_tol: f64,
    pub fd_step: f64,
    pub dedup_radius: f64,
    pub max_newton: usize,
    /// Slack in `|A| ≥ C(E)·T`.
    pub certificate_tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            integrator_tol: 1e-10,
            orbit_tol: 1e-8,
            fd_step: 1e-6,
            dedup_radius: 1e-4,
            max_newton: 50,
            certificate_tol: 1e-6,
        }
    }
}

impl OrbitOptions {
    fn control(&self) -> StepControl {
        StepControl::with_tol(self.integrator_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitAreas {
    pub a1: f64,
    pub a2: f64,
    pub a: f64,
    /// `A₂` recomputed with the primitive `−H dq₁`.
    pub a2_alt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub initial: ReducedState,
    pub period: f64,
    pub rotation_number: i64,
    pub lattice_displacement: [i64; 2],
    /// Only defined for contractible orbits.
    pub areas: Option<OrbitAreas>,
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn is_contractible(&self) -> bool {
        self.lattice_displacement == [0, 0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSearch {
    pub orbits: Vec<PeriodicOrbit>,
    /// Every grid point is (numerically) fixed; `orbits` then holds a single
    /// representative started at the origin.
    pub continuum: bool,
    pub seeds: usize,
    /// Seeds whose Newton iteration did not converge.
    pub dropped: usize,
}

fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = |x: f64, y: f64| {
        let r = (x - y).abs() % 1.0;
        r.min(1.0 - r)
    };
    d(a[0], b[0]).hypot(d(a[1], b[1]))
}

fn displacement(
    field: &MagneticField,
    energy: f64,
    q: [f64; 2],
    ctl: &StepControl,
) -> Result<([f64; 2], ReturnPoint), MagneticError> {
    let r = poincare_return(field, energy, q, ctl)?;
    Ok((r.displacement(q), r))
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Solve `J δ = −d`; falls back to the pseudo-inverse when `J` is close to
/// rank one (families of fixed points).
fn newton_step(j: [[f64; 2]; 2], d: [f64; 2]) -> Option<[f64; 2]> {
    let fro2 = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
    if fro2 < 1e-30 {
        return None;
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() > 1e-8 * fro2 {
        Some([
            -(j[1][1] * d[0] - j[0][1] * d[1]) / det,
            -(-j[1][0] * d[0] + j[0][0] * d[1]) / det,
        ])
    } else {
        // Rank one: J⁺ = Jᵀ / ‖J‖²_F.
        Some([
            -(j[0][0] * d[0] + j[1][0] * d[1]) / fro2,
            -(j[0][1] * d[0] + j[1][1] * d[1]) / fro2,
        ])
    }
}

fn newton(
    field: &MagneticField,
    energy: f64,
    seed: [f64; 2],
    opts: &OrbitOptions,
) -> Result<Option<[f64; 2]>, MagneticError> {
    let ctl = opts.control();
    let mut q = seed;
    let (mut d, _) = displacement(field, energy, q, &ctl)?;
    for _ in 0..opts.max_newton {
        if norm(d) < opts.orbit_tol {
            return Ok(Some([wrap_unit(q[0]), wrap_unit(q[1])]));
        }
        let h = opts.fd_step;
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[c] += h;
            qm[c] -= h;
            let (dp, _) = displacement(field, energy, qp, &ctl)?;
            let (dm, _) = displacement(field, energy, qm, &ctl)?;
            for r in 0..2 {
                jac[r][c] = (dp[r] - dm[r]) / (2.0 * h);
            }
        }
        let Some(mut step) = newton_step(jac, d) else {
            return Ok(None);
        };
        let len = norm(step);
        if len > 0.1 {
            step = [step[0] * 0.1 / len, step[1] * 0.1 / len];
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-3 {
            let trial = [q[0] + lambda * step[0], q[1] + lambda * step[1]];
            let (dt, _) = displacement(field, energy, trial, &ctl)?;
            if norm(dt) < norm(d) {
                q = trial;
                d = dt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(d) < opts.orbit_tol {
        Ok(Some([wrap_unit(q[0]), wrap_unit(q[1])]))
    } else {
        Ok(None)
    }
}

/// Periodic orbit through the fixed point `q` of the return map, with its
/// invariants filled in when it is contractible.
pub fn build_orbit(
    field: &MagneticField,
    energy: f64,
    q: [f64; 2],
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit, MagneticError> {
    let ctl = opts.control();
    let (d, r) = displacement(field, energy, q, &ctl)?;
    let mut orbit = PeriodicOrbit {
        initial: ReducedState::new(q[0], q[1], 0.0, energy)?,
        period: r.return_time,
        rotation_number: -1,
        lattice_displacement: r.lattice_displacement,
        areas: None,
        residual: norm(d),
    };
    if orbit.is_contractible() {
        let inv = orbit_invariants(field, &orbit, opts)?;
        orbit.rotation_number = inv.rotation_number;
        orbit.areas = Some(inv.areas);
    }
    Ok(orbit)
}

/// Fixed points of the return map `ψ_E`: evaluate the lifted displacement on
/// a `grid × grid` lattice, start damped Newton from its discrete local
/// minima and merge solutions closer than the deduplication radius.
pub fn find_periodic_orbits(
    field: &MagneticField,
    energy: f64,
    grid: usize,
    opts: &OrbitOptions,
) -> Result<OrbitSearch, MagneticError> {
    if !(energy > 0.0) {
        return Err(MagneticError::InvalidEnergy(energy));
    }
    if grid == 0 {
        return Ok(OrbitSearch {
            orbits: Vec::new(),
            continuum: false,
            seeds: 0,
            dropped: 0,
        });
    }
    let ctl = opts.control();
    let h = 1.0 / grid as f64;
    let norms: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let q = [(idx / grid) as f64 * h, (idx % grid) as f64 * h];
            displacement(field, energy, q, &ctl).map(|(d, _)| norm(d))
        })
        .collect::<Result<_, _>>()?;
    if norms.iter().all(|&n| n < opts.orbit_tol) {
        let orbit = build_orbit(field, energy, [0.0, 0.0], opts)?;
        return Ok(OrbitSearch {
            orbits: vec![orbit],
            continuum: true,
            seeds: grid * grid,
            dropped: 0,
        });
    }
    let at = |i: usize, j: usize| norms[(i % grid) * grid + (j % grid)];
    let mut seeds = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let v = at(i, j);
            let local_min = (0..3).all(|di| {
                (0..3)
                    .all(|dj| (di == 1 && dj == 1) || v <= at(i + grid + di - 1, j + grid + dj - 1))
            });
            if local_min {
                seeds.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let solved: Vec<Option<[f64; 2]>> = seeds
        .par_iter()
        .map(|&s| newton(field, energy, s, opts))
        .collect::<Result<_, _>>()?;
    let dropped = solved.iter().filter(|s| s.is_none()).count();
    let mut fixed: Vec<[f64; 2]> = Vec::new();
    for q in solved.into_iter().flatten() {
        if fixed.iter().all(|p| torus_dist(*p, q) >= opts.dedup_radius) {
            fixed.push(q);
        }
    }
    fixed.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let orbits = fixed
        .par_iter()
        .map(|&q| build_orbit(field, energy, q, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OrbitSearch {
        orbits,
        continuum: false,
        seeds: seeds.len(),
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitInvariants {
    pub period: f64,
    pub rotation_number: i64,
    pub areas: OrbitAreas,
    /// `F̲T ≤ −2πk ≤ F̄T` within tolerance.
    pub rotation_bounds_hold: bool,
    /// `|ξ(T) − ξ(0)|` on the lift after re-integration.
    pub closure_defect: f64,
}

/// Period, rotation number and the area split `A = A₁ + A₂` of a
/// contractible orbit. `A₂` is the line integral of `G dq₂` along the planar
/// lift, which equals the integral of the magnetic form over a spanning disc.
pub fn orbit_invariants(
    field: &MagneticField,
    orbit: &PeriodicOrbit,
    opts: &OrbitOptions,
) -> Result<OrbitInvariants, MagneticError> {
    if !orbit.is_contractible() {
        return Err(MagneticError::NonContractible {
            displacement: orbit.lattice_displacement,
        });
    }
    let tr = flow(
        field,
        &orbit.initial,
        Stop::Duration(orbit.period),
        &opts.control(),
    )?;
    let end = tr.solution.y_final();
    let turns = (end[2] - orbit.initial.theta) / TAU;
    let k = turns.round();
    let tol = opts.orbit_tol;
    if (turns - k).abs() > tol {
        return Err(MagneticError::RotationNotInteger { value: turns });
    }
    let k = k as i64;
    let t = orbit.period;
    let a1 = 2.0 * orbit.initial.energy * t;
    let a2 = end[3];
    let a2_alt = end[4];
    let lhs = -TAU * k as f64;
    let slack = tol * lhs.abs().max(1.0);
    let rotation_bounds_hold = field.f_min * t <= lhs + slack && lhs <= field.f_max * t + slack;
    let closure_defect = (end[0] - orbit.initial.q1).hypot(end[1] - orbit.initial.q2);
    Ok(OrbitInvariants {
        period: t,
        rotation_number: k,
        areas: OrbitAreas {
            a1,
            a2,
            a: a1 + a2,
            a2_alt,
        },
        rotation_bounds_hold,
        closure_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateStatus {
    Pass,
    Fail,
    /// `V_F ≥ √(π/2)`, so `C(E) ≤ 0` and the bound says nothing.
    Vacuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaCertificate {
    pub c_e: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub status: CertificateStatus,
}

/// `C(E) = (4E / (π V_F)) (π/2 − V_F²)`.
pub fn area_constant(energy: f64, variance_ratio: f64) -> f64 {
    4.0 * energy / (PI * variance_ratio) * (FRAC_PI_2 - variance_ratio * variance_ratio)
}

/// Check `|A| ≥ C(E)·T` for a contractible orbit.
pub fn area_bound_certificate(
    field: &MagneticField,
    energy: f64,
    orbit: &PeriodicOrbit,
    tol: f64,
) -> Result<AreaCertificate, MagneticError> {
    let areas = orbit.areas.ok_or(MagneticError::NonContractible {
        displacement: orbit.lattice_displacement,
    })?;
    let v = field.variance_ratio;
    let c_e = area_constant(energy, v);
    let lhs = areas.a.abs();
    let rhs = c_e * orbit.period;
    let status = if v >= FRAC_PI_2.sqrt() {
        CertificateStatus::Vacuous
    } else if lhs >= rhs - tol {
        CertificateStatus::Pass
    } else {
        CertificateStatus::Fail
    };
    Ok(AreaCertificate {
        c_e,
        lhs,
        rhs,
        status,
    })
}

/// One row of a sweep: an orbit at a given energy with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub energy: f64,
    pub q1: f64,
    pub q2: f64,
    pub period: f64,
    pub rotation_number: i64,
    pub contractible: bool,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a: Option<f64>,
    pub c_e: f64,
    pub status: Option<CertificateStatus>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub energy: f64,
    pub continuum: bool,
    pub seeds: usize,
    pub dropped: usize,
    pub orbits: Vec<OrbitRecord>,
    /// At least one contractible orbit whose certificate passed.
    pub certified: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub variance_ratio: f64,
    pub levels: Vec<LevelReport>,
    pub all_levels_certified: bool,
    /// Smallest `|A|` over contractible orbits.
    pub min_abs_area: Option<f64>,
    /// Smallest `|A|/T` over contractible orbits.
    pub min_area_rate: Option<f64>,
}

fn level_report(
    field: &MagneticField,
    energy: f64,
    grid: usize,
    opts: &OrbitOptions,
) -> LevelReport {
    let search = match find_periodic_orbits(field, energy, grid, opts) {
        Ok(s) => s,
        Err(e) => {
            return LevelReport {
                energy,
                continuum: false,
                seeds: 0,
                dropped: 0,
                orbits: Vec::new(),
                certified: false,
                error: Some(e.to_string()),
            }
        }
    };
    let c_e = area_constant(energy, field.variance_ratio);
    let mut certified = false;
    let orbits = search
        .orbits
        .iter()
        .map(|o| {
            let cert = area_bound_certificate(field, energy, o, opts.certificate_tol).ok();
            let status = cert.map(|c| c.status);
            if status == Some(CertificateStatus::Pass) {
                certified = true;
            }
            OrbitRecord {
                energy,
                q1: o.initial.q1,
                q2: o.initial.q2,
                period: o.period,
                rotation_number: o.rotation_number,
                contractible: o.is_contractible(),
                a1: o.areas.map(|a| a.a1),
                a2: o.areas.map(|a| a.a2),
                a: o.areas.map(|a| a.a),
                c_e,
                status,
                residual: o.residual,
            }
        })
        .collect();
    LevelReport {
        energy,
        continuum: search.continuum,
        seeds: search.seeds,
        dropped: search.dropped,
        orbits,
        certified,
        error: None,
    }
}

/// Orbit search and certificates on each energy level; levels are processed
/// in parallel and reported in input order.
pub fn energy_sweep(
    field: &MagneticField,
    energies: &[f64],
    grid: usize,
    opts: &OrbitOptions,
) -> SweepReport {
    let levels: Vec<LevelReport> = energies
        .par_iter()
        .map(|&e| level_report(field, e, grid, opts))
        .collect();
    let contractible = levels
        .iter()
        .flat_map(|l| &l.orbits)
        .filter_map(|o| o.a.map(|a| (a.abs(), a.abs() / o.period)));
    let (mut min_a, mut min_rate) = (None::<f64>, None::<f64>);
    for (a, r) in contractible {
        min_a = Some(min_a.map_or(a, |m| m.min(a)));
        min_rate = Some(min_rate.map_or(r, |m| m.min(r)));
    }
    SweepReport {
        variance_ratio: field.variance_ratio,
        all_levels_certified: levels.iter().all(|l| l.certified),
        levels,
        min_abs_area: min_a,
        min_area_rate: min_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::super::field::FourierMode;
    use super::*;

    fn cos_cos() -> MagneticField {
        MagneticField::new(
            10.0,
            vec![FourierMode::cos(1, 1, 0.5), FourierMode::cos(1, -1, 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn constant_field_is_a_continuum() {
        let field = MagneticField::constant_field(2.0).unwrap();
        let s = find_periodic_orbits(&field, 0.05, 8, &OrbitOptions::default()).unwrap();
        assert!(s.continuum);
        assert_eq!(s.orbits.len(), 1);
    }

    #[test]
    fn empty_grid() {
        let s = find_periodic_orbits(&cos_cos(), 0.05, 0, &OrbitOptions::default()).unwrap();
        assert!(s.orbits.is_empty() && !s.continuum);
    }

    #[test]
    fn constant_field_invariants() {
        let f0 = 2.5;
        let e = 0.07;
        let field = MagneticField::constant_field(f0).unwrap();
        let opts = OrbitOptions::default();
        let o = build_orbit(&field, e, [0.3, 0.6], &opts).unwrap();
        let a = o.areas.unwrap();
        assert_eq!(o.rotation_number, -1);
        assert!((o.period - TAU / f0).abs() < 1e-10);
        assert!((a.a1 - 4.0 * PI * e / f0).abs() < 1e-10);
        assert!((a.a2 - (-TAU * e / f0)).abs() < 1e-10);
        assert!((a.a2_alt - a.a2).abs() < 1e-10);
        assert!((a.a - TAU * e / f0).abs() < 1e-10);
        let inv = orbit_invariants(&field, &o, &opts).unwrap();
        assert!(inv.rotation_bounds_hold);
        let cert = area_bound_certificate(&field, e, &o, 1e-9).unwrap();
        assert_eq!(cert.status, CertificateStatus::Pass);
        assert!((cert.c_e - 4.0 * e / PI * (FRAC_PI_2 - 1.0)).abs() < 1e-15);
        assert!((a.a / o.period - e).abs() < 1e-10);
    }

    #[test]
    fn large_variance_is_vacuous() {
        // F = 1 + c cos(2πq₁) has V_F = (1+c)/(1−c) = 1.3 for c = 0.3/2.3.
        let c = 0.3 / 2.3;
        let field = MagneticField::new(1.0, vec![FourierMode::cos(1, 0, c)]).unwrap();
        assert!((field.variance_ratio - 1.3).abs() < 1e-12);
        let o = build_orbit(&field, 0.001, [0.0, 0.0], &OrbitOptions::default()).unwrap();
        let cert = area_bound_certificate(&field, 0.001, &o, 1e-9).unwrap();
        assert_eq!(cert.status, CertificateStatus::Vacuous);
    }

    #[test]
    fn cos_cos_fixed_points_at_critical_points() {
        let field = cos_cos();
        let s = find_periodic_orbits(&field, 0.02, 16, &OrbitOptions::default()).unwrap();
        assert!(!s.continuum);
        assert_eq!(
            s.orbits.len(),
            8,
            "{:?}",
            s.orbits
                .iter()
                .map(|o| [o.initial.q1, o.initial.q2])
                .collect::<Vec<_>>()
        );
        for o in &s.orbits {
            assert!(o.is_contractible());
            assert!(o.residual < 1e-8);
            let cert = area_bound_certificate(&field, 0.02, o, 1e-9).unwrap();
            assert_eq!(cert.status, CertificateStatus::Pass);
            let a = o.areas.unwrap();
            assert!((a.a2 - a.a2_alt).abs() < 1e-7);
        }
    }
}
