//! Rotor system matrices, modal extraction and time integration.
//!
//! A rotor is described by `M q'' + (C + Ω G) q' + K(Ω) q = F(t)`. With
//! `Ω = 0` (or `G = 0`) and symmetric matrices the undamped real-mode problem
//! applies ([`eigen_symmetric`]); otherwise the first-companion state-space
//! form is solved for complex modes ([`eigen_general`]).
//!
//! Speed dependence enters only through `Ω G` and an optional user-supplied
//! stiffness law `K(Ω)`; no internal stiffness-speed relation is assumed.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelRecord, MultiChannelRecord, Role, Unit};

const SYMMETRY_TOL: f64 = 1e-10;
const SKEW_TOL: f64 = 1e-12;

/// Nonproportionality metric above which [`ModalModel::nonproportional`] is set.
pub const NONPROPORTIONAL_TOL: f64 = 1e-6;

/// Tacho pulse width as a fraction of one revolution.
pub const TACHO_PULSE_FRACTION: f64 = 0.05;
/// Tacho pulse high level.
pub const TACHO_HIGH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhirlSense {
    Forward,
    Backward,
    Planar,
}

impl fmt::Display for WhirlSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WhirlSense::Forward => "forward",
            WhirlSense::Backward => "backward",
            WhirlSense::Planar => "planar",
        })
    }
}

/// User-supplied speed-dependent stiffness `K(Ω)`.
#[derive(Clone)]
pub struct StiffnessLaw(Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>);

impl StiffnessLaw {
    pub fn new(f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for StiffnessLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StiffnessLaw(..)")
    }
}

/// The `M`, `C`, `K`, `G` assembly at a given spin speed.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    gyro: DMatrix<f64>,
    omega_spin: f64,
    stiffness_law: Option<StiffnessLaw>,
    dof_names: Vec<String>,
    dof_units: Vec<Unit>,
    whirl_pairs: Vec<(usize, usize)>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    asymmetry(m) <= SYMMETRY_TOL * max_abs(m).max(f64::MIN_POSITIVE)
}

impl SystemMatrices {
    /// Validates and assembles a system at `Ω = 0`.
    ///
    /// `mass` must be symmetric positive definite and `gyro` skew-symmetric.
    /// `damping` and `stiffness` may be non-symmetric (cross-coupled bearings);
    /// [`eigen_symmetric`] rejects such systems.
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        gyro: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mass.nrows();
        if n == 0 {
            return Err(Error::Matrix("system has no degrees of freedom".into()));
        }
        for (name, m) in [
            ("M", &mass),
            ("C", &damping),
            ("K", &stiffness),
            ("G", &gyro),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Matrix(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Matrix(format!("{name} has non-finite entries")));
            }
        }
        if !is_symmetric(&mass) {
            return Err(Error::Matrix("M is not symmetric".into()));
        }
        if mass.clone().cholesky().is_none() {
            return Err(Error::Matrix("M is not positive definite".into()));
        }
        if max_abs(&(&gyro + gyro.transpose())) > SKEW_TOL * max_abs(&gyro).max(1.0) {
            return Err(Error::Matrix("G is not skew-symmetric".into()));
        }
        Ok(Self {
            mass,
            damping,
            stiffness,
            gyro,
            omega_spin: 0.0,
            stiffness_law: None,
            dof_names: (0..n).map(|i| format!("q{i}")).collect(),
            dof_units: vec![Unit::M; n],
            whirl_pairs: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    /// Stiffness at zero speed (the constant part).
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn gyro(&self) -> &DMatrix<f64> {
        &self.gyro
    }

    pub fn omega_spin(&self) -> f64 {
        self.omega_spin
    }

    pub fn dof_names(&self) -> &[String] {
        &self.dof_names
    }

    pub fn whirl_pairs(&self) -> &[(usize, usize)] {
        &self.whirl_pairs
    }

    pub fn with_spin(&self, omega_spin: f64) -> Result<Self> {
        if !(omega_spin.is_finite() && omega_spin >= 0.0) {
            return Err(Error::Domain(format!(
                "spin speed must be >= 0, got {omega_spin}"
            )));
        }
        let mut s = self.clone();
        s.omega_spin = omega_spin;
        Ok(s)
    }

    pub fn with_stiffness_law(mut self, law: StiffnessLaw) -> Self {
        self.stiffness_law = Some(law);
        self
    }

    pub fn with_dof_names(mut self, names: Vec<String>, units: Vec<Unit>) -> Result<Self> {
        if names.len() != self.n() || units.len() != self.n() {
            return Err(Error::Index("one name and unit per DOF required".into()));
        }
        self.dof_names = names;
        self.dof_units = units;
        Ok(self)
    }

    /// Declares `(y, z)` DOF pairs spanning lateral planes, used for whirl
    /// classification.
    pub fn with_whirl_pairs(mut self, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs
            .iter()
            .any(|&(a, b)| a >= self.n() || b >= self.n() || a == b)
        {
            return Err(Error::Index("whirl pair index out of range".into()));
        }
        self.whirl_pairs = pairs;
        Ok(self)
    }

    /// Velocity coupling `C + Ω G` at speed `omega`.
    pub fn coupling_at(&self, omega: f64) -> DMatrix<f64> {
        &self.damping + &self.gyro * omega
    }

    pub fn stiffness_at(&self, omega: f64) -> DMatrix<f64> {
        match &self.stiffness_law {
            Some(law) => (law.0)(omega),
            None => self.stiffness.clone(),
        }
    }

    /// `C + Ω G` at the current spin speed.
    pub fn effective_coupling(&self) -> DMatrix<f64> {
        self.coupling_at(self.omega_spin)
    }

    pub fn effective_stiffness(&self) -> DMatrix<f64> {
        self.stiffness_at(self.omega_spin)
    }
}

/// Disc-on-shaft rotor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JeffcottParams {
    /// kg
    pub disc_mass: f64,
    /// N/m in each lateral direction.
    pub shaft_stiffness: f64,
    pub damping_ratio: f64,
    /// kg·m²
    #[serde(default)]
    pub polar_inertia: f64,
    /// kg·m²
    #[serde(default)]
    pub diametral_inertia: f64,
    /// N·m/rad in each tilt direction; required when `diametral_inertia > 0`.
    #[serde(default)]
    pub tilt_stiffness: f64,
    /// kg·m
    #[serde(default)]
    pub unbalance_mass_ecc: f64,
}

impl JeffcottParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("disc_mass", self.disc_mass),
            ("shaft_stiffness", self.shaft_stiffness),
            ("damping_ratio", self.damping_ratio),
            ("polar_inertia", self.polar_inertia),
            ("diametral_inertia", self.diametral_inertia),
            ("tilt_stiffness", self.tilt_stiffness),
            ("unbalance_mass_ecc", self.unbalance_mass_ecc),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.disc_mass <= 0.0 || self.shaft_stiffness <= 0.0 {
            return Err(Error::Domain(
                "disc_mass and shaft_stiffness must be > 0".into(),
            ));
        }
        if self.damping_ratio >= 1.0 {
            return Err(Error::Domain("damping_ratio must be < 1".into()));
        }
        if self.polar_inertia > 0.0 && self.diametral_inertia == 0.0 {
            return Err(Error::Domain(
                "polar_inertia > 0 requires diametral_inertia > 0 (tilt DOFs)".into(),
            ));
        }
        if self.diametral_inertia > 0.0 && self.tilt_stiffness <= 0.0 {
            return Err(Error::Domain(
                "diametral_inertia > 0 requires tilt_stiffness > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn has_tilt(&self) -> bool {
        self.diametral_inertia > 0.0
    }
}

/// Assembles the Jeffcott rotor: lateral translations `y`, `z` and, when the
/// disc has diametral inertia, tilts `theta_y`, `theta_z` coupled by the
/// gyroscopic matrix. Without diametral inertia the tilt DOFs carry no mass
/// and the model is reduced to the two translations.
pub fn build_jeffcott(p: &JeffcottParams) -> Result<SystemMatrices> {
    p.validate()?;
    let n = if p.has_tilt() { 4 } else { 2 };
    let mut m = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    let mut g = DMatrix::zeros(n, n);
    let c_lat = 2.0 * p.damping_ratio * (p.shaft_stiffness * p.disc_mass).sqrt();
    for i in 0..2 {
        m[(i, i)] = p.disc_mass;
        k[(i, i)] = p.shaft_stiffness;
        c[(i, i)] = c_lat;
    }
    let mut names = vec!["y".to_string(), "z".to_string()];
    let mut units = vec![Unit::M, Unit::M];
    let mut pairs = vec![(0, 1)];
    if p.has_tilt() {
        let c_tilt = 2.0 * p.damping_ratio * (p.tilt_stiffness * p.diametral_inertia).sqrt();
        for i in 2..4 {
            m[(i, i)] = p.diametral_inertia;
            k[(i, i)] = p.tilt_stiffness;
            c[(i, i)] = c_tilt;
        }
        g[(2, 3)] = p.polar_inertia;
        g[(3, 2)] = -p.polar_inertia;
        names.extend(["theta_y".to_string(), "theta_z".to_string()]);
        units.extend([Unit::Dimensionless, Unit::Dimensionless]);
        pairs.push((2, 3));
    }
    SystemMatrices::new(m, c, k, g)?
        .with_dof_names(names, units)?
        .with_whirl_pairs(pairs)
}

/// Real modes of a symmetric, proportionally damped system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel {
    /// Undamped natural frequencies, rad/s, ascending.
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Mode shapes as columns, each scaled to unit largest component.
    pub phi: DMatrix<f64>,
    /// Diagonal of `φᵀMφ`.
    pub modal_mass: Vec<f64>,
    /// Largest `|c_rs| / sqrt(c_rr c_ss)` over `r != s` of `φᵀCφ`.
    pub nonproportionality: f64,
    pub nonproportional: bool,
}

impl ModalModel {
    pub fn n_dof(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn damped_frequencies(&self) -> Vec<f64> {
        self.omega
            .iter()
            .zip(&self.zeta)
            .map(|(w, z)| w * (1.0 - z * z).sqrt())
            .collect()
    }

    /// Keeps the listed modes (in the given order).
    pub fn select_modes(&self, modes: &[usize]) -> ModalModel {
        let phi = DMatrix::from_fn(self.n_dof(), modes.len(), |i, j| self.phi[(i, modes[j])]);
        ModalModel {
            omega: modes.iter().map(|&r| self.omega[r]).collect(),
            zeta: modes.iter().map(|&r| self.zeta[r]).collect(),
            phi,
            modal_mass: modes.iter().map(|&r| self.modal_mass[r]).collect(),
            nonproportionality: self.nonproportionality,
            nonproportional: self.nonproportional,
        }
    }
}

/// Brings a cluster of repeated-eigenvalue mode shapes into a canonical basis:
/// row-reduce over DOFs in ascending order, then Gram-Schmidt in the mass
/// inner product.
fn canonicalize_cluster(vectors: &mut [DVector<f64>], mass: &DMatrix<f64>) {
    let c = vectors.len();
    if c < 2 {
        return;
    }
    let n = vectors[0].len();
    let scale = vectors.iter().map(|v| v.amax()).fold(0.0, f64::max);
    let mut rows: Vec<DVector<f64>> = vectors.to_vec();
    let mut pivot_row = 0;
    for dof in 0..n {
        if pivot_row == c {
            break;
        }
        let (best, best_val) = (pivot_row..c)
            .map(|r| (r, rows[r][dof].abs()))
            .fold((pivot_row, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if best_val <= 1e-8 * scale {
            continue;
        }
        rows.swap(pivot_row, best);
        let p = rows[pivot_row].clone() / rows[pivot_row][dof];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row {
                let f = row[dof];
                *row -= &p * f;
            }
        }
        rows[pivot_row] = p;
        pivot_row += 1;
    }
    for i in 0..c {
        for j in 0..i {
            let proj = (rows[j].transpose() * mass * &rows[i])[0];
            let r = rows[j].clone();
            rows[i] -= r * proj;
        }
        let norm = (rows[i].transpose() * mass * &rows[i])[0].sqrt();
        rows[i] /= norm;
    }
    vectors.clone_from_slice(&rows);
}

/// Undamped real-mode solution of `(K − ω² M) φ = 0` with damping ratios
/// projected from `φᵀ C φ`.
pub fn eigen_symmetric(sys: &SystemMatrices) -> Result<ModalModel> {
    if sys.omega_spin != 0.0 && max_abs(&sys.gyro) != 0.0 {
        return Err(Error::Symmetry(format!(
            "gyroscopic coupling active at spin {} rad/s",
            sys.omega_spin
        )));
    }
    let k = sys.effective_stiffness();
    let c = &sys.damping;
    for (name, m) in [("K", &k), ("C", c)] {
        if !is_symmetric(m) {
            return Err(Error::Symmetry(format!("{name} is not symmetric")));
        }
    }
    let n = sys.n();
    let chol = sys
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Matrix("M is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Matrix("Cholesky factor of M is singular".into()))?;
    let a = &l_inv * &k * l_inv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut shapes: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| l_inv.transpose() * eig.eigenvectors.column(i))
        .collect();

    let lam_scale = lam
        .iter()
        .fold(0.0f64, |a, b| a.max(*b))
        .max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lam[end] - lam[start]).abs() <= 1e-9 * lam_scale {
            end += 1;
        }
        canonicalize_cluster(&mut shapes[start..end], &sys.mass);
        start = end;
    }

    for v in shapes.iter_mut() {
        let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, x)| {
            if x.abs() > acc.1 + 1e-12 * acc.1 {
                (i, x.abs())
            } else {
                acc
            }
        });
        let s = v[imax];
        *v /= s;
    }
    let phi = DMatrix::from_columns(&shapes);
    let mm = phi.transpose() * &sys.mass * &phi;
    let cc = phi.transpose() * c * &phi;
    let omega: Vec<f64> = lam.iter().map(|l| l.sqrt()).collect();
    let modal_mass: Vec<f64> = (0..n).map(|r| mm[(r, r)]).collect();
    let mut zeta = Vec::with_capacity(n);
    for r in 0..n {
        let cr = cc[(r, r)];
        let z = if omega[r] > 0.0 {
            cr / (2.0 * omega[r] * modal_mass[r])
        } else if cr.abs() <= 1e-14 * max_abs(c).max(1.0) {
            0.0
        } else {
            return Err(Error::Domain(format!(
                "rigid-body mode {r} carries damping"
            )));
        };
        if !(0.0..1.0).contains(&z) {
            return Err(Error::Domain(format!(
                "mode {r} has damping ratio {z}; real modes require 0 <= zeta < 1"
            )));
        }
        zeta.push(z);
    }
    let mut nonprop: f64 = 0.0;
    for r in 0..n {
        for s in 0..n {
            let d = (cc[(r, r)] * cc[(s, s)]).abs().sqrt();
            if r != s && d > 0.0 {
                nonprop = nonprop.max(cc[(r, s)].abs() / d);
            } else if r != s && cc[(r, s)] != 0.0 {
                nonprop = f64::INFINITY;
            }
        }
    }
    Ok(ModalModel {
        omega,
        zeta,
        phi,
        modal_mass,
        nonproportionality: nonprop,
        nonproportional: nonprop > NONPROPORTIONAL_TOL,
    })
}

/// One complex mode of the first-order system.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMode {
    /// Eigenvalue λ_r, rad/s.
    pub eigenvalue: Complex64,
    /// Displacement partition of the right eigenvector, scaled so the largest
    /// component is real and equal to 1.
    pub shape: Vec<Complex64>,
    /// Residue matrix: `α(ω) = Σ_r residue_r / (iω − λ_r)`.
    pub residue: DMatrix<Complex64>,
    pub whirl: WhirlSense,
    /// Index of the complex-conjugate mode, if any.
    pub partner: Option<usize>,
}

impl ComplexMode {
    pub fn damped_frequency(&self) -> f64 {
        self.eigenvalue.im.abs()
    }

    pub fn natural_frequency(&self) -> f64 {
        self.eigenvalue.norm()
    }

    pub fn damping_ratio(&self) -> f64 {
        let w = self.eigenvalue.norm();
        if w == 0.0 {
            0.0
        } else {
            -self.eigenvalue.re / w
        }
    }
}

/// All `2n` complex modes, sorted by `|Im λ|` with the positive member of
/// each conjugate pair first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexModalModel {
    pub n_dof: usize,
    pub omega_spin: f64,
    pub modes: Vec<ComplexMode>,
}

impl ComplexModalModel {
    /// Modes with `Im λ > 0`, i.e. one representative per oscillatory pair.
    pub fn oscillatory(&self) -> impl Iterator<Item = &ComplexMode> {
        self.modes.iter().filter(|m| m.eigenvalue.im > 0.0)
    }

    /// Index pairs `(r, conj r)`.
    pub fn conjugate_pairs(&self) -> Vec<(usize, usize)> {
        self.modes
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.partner.filter(|&p| p > i).map(|p| (i, p)))
            .collect()
    }

    pub fn max_natural_frequency(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.natural_frequency())
            .fold(0.0, f64::max)
    }
}

fn classify_whirl(shape: &[Complex64], freq: f64, pairs: &[(usize, usize)]) -> WhirlSense {
    let mut area = 0.0;
    let mut norm = 0.0;
    for &(a, b) in pairs {
        let (ya, zb) = (shape[a], shape[b]);
        area += -freq * (ya.conj() * zb).im;
        norm += (ya.norm_sqr() + zb.norm_sqr()) * freq.abs();
    }
    if norm == 0.0 || area.abs() < 1e-6 * norm {
        WhirlSense::Planar
    } else if area > 0.0 {
        WhirlSense::Forward
    } else {
        WhirlSense::Backward
    }
}

/// Complex modes of `M q'' + (C + Ω G) q' + K(Ω) q = 0` via the first-companion
/// state-space matrix, with residues from the left eigenvectors (rows of the
/// inverse right-eigenvector matrix). Rotation is taken as `y → z` for Ω ≥ 0.
pub fn eigen_general(sys: &SystemMatrices) -> Result<ComplexModalModel> {
    let n = sys.n();
    let m_inv = sys
        .mass
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Matrix("M is singular".into()))?;
    let k = sys.effective_stiffness();
    let d = sys.effective_coupling();
    let mk = &m_inv * &k;
    let md = &m_inv * &d;
    // State x = [q; q'/s] keeps the blocks of comparable size.
    let s = mk
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .sqrt()
        .max(1.0);
    let two_n = 2 * n;
    let mut a = DMatrix::<Complex64>::zeros(two_n, two_n);
    for i in 0..n {
        a[(i, n + i)] = Complex64::new(s, 0.0);
        for j in 0..n {
            a[(n + i, j)] = Complex64::new(-mk[(i, j)] / s, 0.0);
            a[(n + i, n + j)] = Complex64::new(-md[(i, j)], 0.0);
        }
    }
    let schur = nalgebra::linalg::Schur::try_new(a, 1e-15, 10_000)
        .ok_or_else(|| Error::Matrix("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let lam: Vec<Complex64> = (0..two_n).map(|i| t[(i, i)]).collect();
    let lam_scale = lam
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let deg_tol = 1e-9 * lam_scale;

    let eigvec = |kidx: usize| -> DVector<Complex64> {
        let mut x = DVector::<Complex64>::zeros(two_n);
        x[kidx] = Complex64::new(1.0, 0.0);
        for i in (0..kidx).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i + 1..=kidx {
                acc += t[(i, j)] * x[j];
            }
            let mut den = t[(i, i)] - t[(kidx, kidx)];
            if den.norm() <= deg_tol {
                if acc.norm() <= 1e-8 * lam_scale {
                    x[i] = Complex64::new(0.0, 0.0);
                    continue;
                }
                den = Complex64::new(deg_tol, 0.0);
            }
            x[i] = -acc / den;
        }
        &q * x
    };

    let imag_tol = |l: &Complex64| 1e-9 * l.norm().max(f64::MIN_POSITIVE);
    let pos: Vec<usize> = (0..two_n)
        .filter(|&i| lam[i].im > imag_tol(&lam[i]))
        .collect();
    let neg = (0..two_n)
        .filter(|&i| lam[i].im < -imag_tol(&lam[i]))
        .count();
    let real: Vec<usize> = (0..two_n)
        .filter(|&i| lam[i].im.abs() <= imag_tol(&lam[i]))
        .collect();

    // (eigenvalue, state vector, partner offset)
    let mut entries: Vec<(Complex64, DVector<Complex64>)> = Vec::with_capacity(two_n);
    if neg == pos.len() {
        for &i in &pos {
            let v = eigvec(i);
            entries.push((lam[i], v.clone()));
            entries.push((lam[i].conj(), v.map(|c| c.conj())));
        }
        for &i in &real {
            entries.push((Complex64::new(lam[i].re, 0.0), eigvec(i)));
        }
    } else {
        for (i, l) in lam.iter().enumerate().take(two_n) {
            entries.push((*l, eigvec(i)));
        }
    }

    let vmat = DMatrix::from_columns(&entries.iter().map(|e| e.1.clone()).collect::<Vec<_>>());
    let w =
        vmat.clone().lu().try_inverse().ok_or_else(|| {
            Error::Matrix("eigenvector matrix is singular (defective system)".into())
        })?;
    let m_inv_c = m_inv.map(|v| Complex64::new(v / s, 0.0));

    let mut modes: Vec<ComplexMode> = entries
        .iter()
        .enumerate()
        .map(|(r, (l, v))| {
            let disp: Vec<Complex64> = (0..n).map(|i| v[i]).collect();
            let left = DMatrix::from_fn(1, n, |_, j| w[(r, n + j)]);
            let input_row = left * &m_inv_c;
            let residue = DMatrix::from_fn(n, n, |i, j| disp[i] * input_row[(0, j)]);
            let pivot = disp.iter().copied().fold(Complex64::new(0.0, 0.0), |a, b| {
                if b.norm() > a.norm() * (1.0 + 1e-12) {
                    b
                } else {
                    a
                }
            });
            let shape: Vec<Complex64> = if pivot.norm() > 0.0 {
                disp.iter().map(|c| c / pivot).collect()
            } else {
                disp
            };
            let whirl = if l.im.abs() > imag_tol(l) {
                classify_whirl(&shape, l.im, &sys.whirl_pairs)
            } else {
                WhirlSense::Planar
            };
            ComplexMode {
                eigenvalue: *l,
                shape,
                residue,
                whirl,
                partner: None,
            }
        })
        .collect();

    modes.sort_by(|a, b| {
        a.eigenvalue
            .im
            .abs()
            .total_cmp(&b.eigenvalue.im.abs())
            .then(b.eigenvalue.im.total_cmp(&a.eigenvalue.im))
            .then(a.eigenvalue.re.total_cmp(&b.eigenvalue.re))
    });
    for i in 0..modes.len() {
        if modes[i].eigenvalue.im > imag_tol(&modes[i].eigenvalue) && modes[i].partner.is_none() {
            let target = modes[i].eigenvalue.conj();
            let found = (0..modes.len())
                .filter(|&j| j != i && modes[j].partner.is_none() && modes[j].eigenvalue.im < 0.0)
                .min_by(|&a, &b| {
                    (modes[a].eigenvalue - target)
                        .norm()
                        .total_cmp(&(modes[b].eigenvalue - target).norm())
                });
            if let Some(j) = found {
                modes[i].partner = Some(j);
                modes[j].partner = Some(i);
                modes[j].whirl = modes[i].whirl;
            }
        }
    }
    Ok(ComplexModalModel {
        n_dof: n,
        omega_spin: sys.omega_spin,
        modes,
    })
}

/// Piecewise-linear spin-speed schedule Ω(t), monotone and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSchedule {
    knots: Vec<(f64, f64)>,
}

impl SpeedSchedule {
    pub fn constant(omega: f64, duration: f64) -> Result<Self> {
        Self::from_knots(vec![(0.0, omega), (duration, omega)])
    }

    /// Linear ramp from `start` to `end` rad/s over `duration` seconds.
    pub fn linear(start: f64, end: f64, duration: f64) -> Result<Self> {
        Self::from_knots(vec![(0.0, start), (duration, end)])
    }

    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain(
                "speed schedule needs at least two knots".into(),
            ));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::Domain("speed schedule must start at t = 0".into()));
        }
        if knots
            .iter()
            .any(|(t, w)| !t.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(Error::Domain(
                "speed schedule values must be finite and >= 0".into(),
            ));
        }
        if knots.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(Error::Domain("speed schedule times must increase".into()));
        }
        let rising = knots.windows(2).any(|p| p[1].1 > p[0].1);
        let falling = knots.windows(2).any(|p| p[1].1 < p[0].1);
        if rising && falling {
            return Err(Error::Domain("speed schedule is not monotone".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn min_speed(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(0.0, f64::max)
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.knots.len() - 2;
        self.knots[1..=last]
            .iter()
            .position(|k| t < k.0)
            .unwrap_or(last)
    }

    /// Ω(t), held constant beyond the last knot.
    pub fn omega(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let ((t0, w0), (t1, w1)) = (self.knots[s], self.knots[s + 1]);
        if t >= t1 {
            return w1;
        }
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    fn phase_at_knot(&self, s: usize) -> f64 {
        self.knots[..s]
            .iter()
            .zip(&self.knots[1..=s])
            .map(|(a, b)| 0.5 * (a.1 + b.1) * (b.0 - a.0))
            .sum()
    }

    /// Shaft angle ∫Ω dt from t = 0.
    pub fn phase(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let (t0, w0) = self.knots[s];
        let tau = t - t0;
        let slope = self.slope(s);
        let within = if t > self.knots[s + 1].0 {
            let (t1, w1) = self.knots[s + 1];
            0.5 * (w0 + w1) * (t1 - t0) + w1 * (t - t1)
        } else {
            w0 * tau + 0.5 * slope * tau * tau
        };
        self.phase_at_knot(s) + within
    }

    fn slope(&self, s: usize) -> f64 {
        let ((t0, w0), (t1, w1)) = (self.knots[s], self.knots[s + 1]);
        (w1 - w0) / (t1 - t0)
    }

    /// Earliest time at which the shaft angle reaches `phi`, if it does before
    /// `horizon`.
    pub fn time_at_phase(&self, phi: f64, horizon: f64) -> Option<f64> {
        let mut acc = 0.0;
        for s in 0..self.knots.len() - 1 {
            let ((t0, w0), (t1, w1)) = (self.knots[s], self.knots[s + 1]);
            let last = s == self.knots.len() - 2;
            let seg_phase = 0.5 * (w0 + w1) * (t1 - t0);
            if phi <= acc + seg_phase || last {
                let target = phi - acc;
                let a = self.slope(s);
                let tau = if phi <= acc + seg_phase {
                    let disc = w0 * w0 + 2.0 * a * target;
                    if disc < 0.0 {
                        return None;
                    }
                    let root = disc.sqrt();
                    if w0 + root == 0.0 {
                        return None;
                    }
                    2.0 * target / (w0 + root)
                } else if w1 > 0.0 {
                    (t1 - t0) + (target - seg_phase) / w1
                } else {
                    return None;
                };
                let t = t0 + tau;
                return (t <= horizon).then_some(t);
            }
            acc += seg_phase;
        }
        None
    }
}

/// A simulated record plus bookkeeping from the simulator.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub record: MultiChannelRecord,
    /// Rising tacho edges present in the sampled tacho channel.
    pub revolutions: usize,
    /// ∫Ω dt over the run, rad.
    pub total_phase: f64,
    pub schedule: SpeedSchedule,
}

impl SimulatedRun {
    /// Time and speed at the largest |sample| of `channel`.
    pub fn peak_response(&self, channel: &str) -> Result<(f64, f64)> {
        let ch = self.record.require_channel(channel)?;
        let (i, _) = ch
            .samples()
            .iter()
            .enumerate()
            .fold(
                (0, -1.0),
                |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
            );
        let t = i as f64 / ch.sample_rate();
        Ok((t, self.schedule.omega(t)))
    }
}

fn stability_check(dt: f64, f_max_hz: f64) -> Result<()> {
    if f_max_hz <= 0.0 {
        return Ok(());
    }
    let bound = 1.0 / (20.0 * f_max_hz);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability {
            dt,
            bound,
            f_max_hz,
        });
    }
    Ok(())
}

fn check_times(dt: f64, duration: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if !(duration.is_finite() && duration >= 10.0 * dt) {
        return Err(Error::Domain(format!(
            "duration {duration} s must be at least 10 dt = {} s",
            10.0 * dt
        )));
    }
    Ok((duration / dt).round() as usize)
}

/// Newmark average-acceleration integration from rest.
///
/// `system_at(t)` returns `(C + ΩG, K)` at time `t`; when `time_varying` is
/// false it is evaluated once. `observe(step, q, f)` sees every state
/// including the initial one.
fn newmark(
    mass: &DMatrix<f64>,
    steps: usize,
    dt: f64,
    time_varying: bool,
    mut system_at: impl FnMut(f64) -> (DMatrix<f64>, DMatrix<f64>),
    mut force_at: impl FnMut(f64, &mut [f64]),
    mut observe: impl FnMut(usize, &DVector<f64>, &[f64]),
) -> Result<()> {
    const BETA: f64 = 0.25;
    const GAMMA: f64 = 0.5;
    let n = mass.nrows();
    let mut f = vec![0.0; n];
    force_at(0.0, &mut f);
    let mut q = DVector::zeros(n);
    let mut v = DVector::zeros(n);
    let m_lu = mass.clone().lu();
    let mut a = m_lu
        .solve(&DVector::from_column_slice(&f))
        .ok_or_else(|| Error::Matrix("M is singular".into()))?;
    observe(0, &q, &f);

    let (mut d, mut k) = system_at(0.0);
    let effective =
        |d: &DMatrix<f64>, k: &DMatrix<f64>| mass + d * (GAMMA * dt) + k * (BETA * dt * dt);
    let mut lu = effective(&d, &k).lu();
    for step in 1..=steps {
        let t = step as f64 * dt;
        if time_varying {
            (d, k) = system_at(t);
            lu = effective(&d, &k).lu();
        }
        force_at(t, &mut f);
        let q_pred = &q + &v * dt + &a * ((0.5 - BETA) * dt * dt);
        let v_pred = &v + &a * ((1.0 - GAMMA) * dt);
        let rhs = DVector::from_column_slice(&f) - &d * &v_pred - &k * &q_pred;
        a = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Matrix("effective stiffness is singular".into()))?;
        q = q_pred + &a * (BETA * dt * dt);
        v = v_pred + &a * (GAMMA * dt);
        observe(step, &q, &f);
    }
    Ok(())
}

fn response_record(
    sys: &SystemMatrices,
    disp: Vec<Vec<f64>>,
    force: Vec<Vec<f64>>,
    extra: Option<ChannelRecord>,
    dt: f64,
) -> Result<MultiChannelRecord> {
    let fs = 1.0 / dt;
    let mut channels = Vec::with_capacity(2 * sys.n() + 1);
    for (i, samples) in disp.into_iter().enumerate() {
        channels.push(ChannelRecord::new(
            sys.dof_names[i].clone(),
            samples,
            fs,
            sys.dof_units[i],
            Role::Vibration,
        )?);
    }
    for (i, samples) in force.into_iter().enumerate() {
        channels.push(ChannelRecord::new(
            format!("f_{}", sys.dof_names[i]),
            samples,
            fs,
            Unit::Dimensionless,
            Role::Force,
        )?);
    }
    channels.extend(extra);
    MultiChannelRecord::new(channels, 0.0)
}

/// Forced response from rest at the system's current spin speed.
///
/// `forcing(t, f)` fills the force on each DOF. Output holds one displacement
/// channel per DOF followed by one force channel per DOF (`f_<dof>`), sampled
/// at `1/dt`.
pub fn simulate_response(
    sys: &SystemMatrices,
    forcing: impl Fn(f64, &mut [f64]),
    dt: f64,
    duration: f64,
) -> Result<MultiChannelRecord> {
    let steps = check_times(dt, duration)?;
    let f_max = eigen_general(sys)?.max_natural_frequency() / (2.0 * PI);
    stability_check(dt, f_max)?;
    let n = sys.n();
    let mut disp = vec![Vec::with_capacity(steps + 1); n];
    let mut force = vec![Vec::with_capacity(steps + 1); n];
    let (d, k) = (sys.effective_coupling(), sys.effective_stiffness());
    newmark(
        &sys.mass,
        steps,
        dt,
        false,
        |_| (d.clone(), k.clone()),
        |t, f| {
            f.iter_mut().for_each(|v| *v = 0.0);
            forcing(t, f)
        },
        |_, q, f| {
            for i in 0..n {
                disp[i].push(q[i]);
                force[i].push(f[i]);
            }
        },
    )?;
    response_record(sys, disp, force, None, dt)
}

/// Unbalance-driven run-up/rundown of a Jeffcott rotor.
///
/// The rotating unbalance force `(m e) Ω(t)²` acts on `y`/`z` at shaft angle
/// `∫Ω dt`; `C + Ω(t) G` and `K(Ω(t))` track the schedule. A tacho channel
/// `key` carries one pulse per revolution whose rising edge marks shaft angle
/// `2πk`.
pub fn simulate_rundown(
    sys: &SystemMatrices,
    p: &JeffcottParams,
    schedule: &SpeedSchedule,
    dt: f64,
    duration: f64,
) -> Result<SimulatedRun> {
    simulate_rotating(sys, p, schedule, dt, duration, |_, _, _, _| {})
}

/// [`simulate_rundown`] with additional speed-synchronous forcing:
/// `extra(t, shaft_angle, omega, f)` adds to the force on each DOF.
pub fn simulate_rotating(
    sys: &SystemMatrices,
    p: &JeffcottParams,
    schedule: &SpeedSchedule,
    dt: f64,
    duration: f64,
    extra: impl Fn(f64, f64, f64, &mut [f64]),
) -> Result<SimulatedRun> {
    p.validate()?;
    let steps = check_times(dt, duration)?;
    if sys.n() < 2 {
        return Err(Error::Matrix(
            "rotating simulation needs y and z DOFs".into(),
        ));
    }
    let f_max = [schedule.min_speed(), schedule.max_speed()]
        .iter()
        .map(|&w| Ok(eigen_general(&sys.with_spin(w)?)?.max_natural_frequency()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max)
        / (2.0 * PI);
    stability_check(dt, f_max)?;

    let n = sys.n();
    let me = p.unbalance_mass_ecc;
    let mut disp = vec![Vec::with_capacity(steps + 1); n];
    let mut force = vec![Vec::with_capacity(steps + 1); n];
    newmark(
        &sys.mass,
        steps,
        dt,
        true,
        |t| {
            let w = schedule.omega(t);
            (sys.coupling_at(w), sys.stiffness_at(w))
        },
        |t, f| {
            f.iter_mut().for_each(|v| *v = 0.0);
            let w = schedule.omega(t);
            let phi = schedule.phase(t);
            f[0] = me * w * w * phi.cos();
            f[1] = me * w * w * phi.sin();
            extra(t, phi, w, f);
        },
        |_, q, f| {
            for i in 0..n {
                disp[i].push(q[i]);
                force[i].push(f[i]);
            }
        },
    )?;

    let end = steps as f64 * dt;
    let tacho = tacho_samples(schedule, steps + 1, dt, end);
    let revolutions = tacho
        .windows(2)
        .filter(|w| w[0] < 0.5 * TACHO_HIGH && w[1] >= 0.5 * TACHO_HIGH)
        .count();
    let key = ChannelRecord::new("key", tacho, 1.0 / dt, Unit::Dimensionless, Role::Tacho)?;
    let record = response_record(sys, disp, force, Some(key), dt)?;
    Ok(SimulatedRun {
        record,
        revolutions,
        total_phase: schedule.phase(end),
        schedule: schedule.clone(),
    })
}

/// Once-per-rev pulse train. Edges are linear ramps two samples wide centred
/// on the exact edge instant, so a mid-level threshold crossing interpolates
/// to the true key-phasor time.
fn tacho_samples(schedule: &SpeedSchedule, len: usize, dt: f64, end: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let ramp = |t: f64, edge: f64| ((t - edge) / (2.0 * dt) + 0.5).clamp(0.0, 1.0);
    let horizon = end + 2.0 * dt;
    for rev in 1.. {
        let base = 2.0 * PI * rev as f64;
        let Some(rise) = schedule.time_at_phase(base, horizon) else {
            break;
        };
        let fall = schedule
            .time_at_phase(base + 2.0 * PI * TACHO_PULSE_FRACTION, horizon)
            .unwrap_or(f64::INFINITY);
        let first = ((rise - dt) / dt).floor().max(0.0) as usize;
        let last = if fall.is_finite() {
            (((fall + dt) / dt).ceil() as usize).min(len - 1)
        } else {
            len - 1
        };
        for (i, v) in out.iter_mut().enumerate().take(last + 1).skip(first) {
            let t = i as f64 * dt;
            *v += TACHO_HIGH * (ramp(t, rise) - ramp(t, fall));
        }
    }
    out
}
