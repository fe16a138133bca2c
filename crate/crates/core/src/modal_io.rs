//! Versioned JSON documents for real and complex modal models.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotor::{ComplexModalModel, ComplexMode, ModalModel, WhirlSense, NONPROPORTIONAL_TOL};

pub const MODAL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealModeDoc {
    omega_r_rad_s: f64,
    zeta_r: f64,
    phi: Vec<f64>,
    modal_mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealDoc {
    version: u32,
    n_modes: usize,
    n_dof: usize,
    nonproportionality: f64,
    modes: Vec<RealModeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexModeDoc {
    lambda_re: f64,
    lambda_im: f64,
    /// `[re, im]` per DOF.
    phi: Vec<[f64; 2]>,
    /// Row-major `n_dof × n_dof`, `[re, im]` per entry.
    residues: Vec<[f64; 2]>,
    whirl: WhirlSense,
    partner: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexDoc {
    version: u32,
    n_modes: usize,
    n_dof: usize,
    omega_spin_rad_s: f64,
    modes: Vec<ComplexModeDoc>,
}

fn check_header(version: u32, n_modes: usize, len: usize) -> Result<()> {
    if version != MODAL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported modal document version {version} (expected {MODAL_FORMAT_VERSION})"
        )));
    }
    if n_modes != len {
        return Err(Error::Format(format!(
            "n_modes = {n_modes} but {len} modes listed"
        )));
    }
    Ok(())
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Format(format!("non-finite {what}")))
    }
}

pub fn modal_to_json(m: &ModalModel) -> Result<String> {
    let doc = RealDoc {
        version: MODAL_FORMAT_VERSION,
        n_modes: m.n_modes(),
        n_dof: m.n_dof(),
        nonproportionality: m.nonproportionality,
        modes: (0..m.n_modes())
            .map(|r| RealModeDoc {
                omega_r_rad_s: m.omega[r],
                zeta_r: m.zeta[r],
                phi: m.phi.column(r).iter().copied().collect(),
                modal_mass: m.modal_mass[r],
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn modal_from_json(text: &str) -> Result<ModalModel> {
    let doc: RealDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    check_header(doc.version, doc.n_modes, doc.modes.len())?;
    let mut phi = DMatrix::zeros(doc.n_dof, doc.n_modes);
    for (r, mode) in doc.modes.iter().enumerate() {
        if mode.phi.len() != doc.n_dof {
            return Err(Error::Format(format!(
                "mode {r}: phi has {} entries, n_dof = {}",
                mode.phi.len(),
                doc.n_dof
            )));
        }
        if !(mode.modal_mass > 0.0 && mode.omega_r_rad_s >= 0.0) {
            return Err(Error::Format(format!(
                "mode {r}: modal_mass must be > 0 and omega_r >= 0"
            )));
        }
        for (i, v) in mode.phi.iter().enumerate() {
            phi[(i, r)] = finite(*v, "phi")?;
        }
        finite(mode.zeta_r, "zeta_r")?;
        finite(mode.omega_r_rad_s, "omega_r")?;
    }
    Ok(ModalModel {
        omega: doc.modes.iter().map(|m| m.omega_r_rad_s).collect(),
        zeta: doc.modes.iter().map(|m| m.zeta_r).collect(),
        phi,
        modal_mass: doc.modes.iter().map(|m| m.modal_mass).collect(),
        nonproportionality: doc.nonproportionality,
        nonproportional: doc.nonproportionality > NONPROPORTIONAL_TOL,
    })
}

pub fn complex_modal_to_json(m: &ComplexModalModel) -> Result<String> {
    let pair = |c: &Complex64| [c.re, c.im];
    let doc = ComplexDoc {
        version: MODAL_FORMAT_VERSION,
        n_modes: m.modes.len(),
        n_dof: m.n_dof,
        omega_spin_rad_s: m.omega_spin,
        modes: m
            .modes
            .iter()
            .map(|mode| ComplexModeDoc {
                lambda_re: mode.eigenvalue.re,
                lambda_im: mode.eigenvalue.im,
                phi: mode.shape.iter().map(pair).collect(),
                // nalgebra storage is column-major
                residues: mode.residue.transpose().iter().map(pair).collect(),
                whirl: mode.whirl,
                partner: mode.partner,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn complex_modal_from_json(text: &str) -> Result<ComplexModalModel> {
    let doc: ComplexDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    check_header(doc.version, doc.n_modes, doc.modes.len())?;
    let n = doc.n_dof;
    let c = |p: &[f64; 2]| -> Result<Complex64> {
        Ok(Complex64::new(
            finite(p[0], "value")?,
            finite(p[1], "value")?,
        ))
    };
    let modes = doc
        .modes
        .iter()
        .enumerate()
        .map(|(r, mode)| {
            if mode.phi.len() != n || mode.residues.len() != n * n {
                return Err(Error::Format(format!(
                    "mode {r}: phi/residues do not match n_dof = {n}"
                )));
            }
            if mode.partner.is_some_and(|p| p >= doc.n_modes) {
                return Err(Error::Format(format!(
                    "mode {r}: partner index out of range"
                )));
            }
            let res = mode.residues.iter().map(c).collect::<Result<Vec<_>>>()?;
            Ok(ComplexMode {
                eigenvalue: Complex64::new(
                    finite(mode.lambda_re, "lambda_re")?,
                    finite(mode.lambda_im, "lambda_im")?,
                ),
                shape: mode.phi.iter().map(c).collect::<Result<_>>()?,
                residue: DMatrix::from_row_slice(n, n, &res),
                whirl: mode.whirl,
                partner: mode.partner,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexModalModel {
        n_dof: n,
        omega_spin: doc.omega_spin_rad_s,
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotor::{build_jeffcott, eigen_general, eigen_symmetric, JeffcottParams};

    fn rotor() -> JeffcottParams {
        JeffcottParams {
            disc_mass: 10.0,
            shaft_stiffness: 1e6,
            damping_ratio: 0.02,
            polar_inertia: 0.1,
            diametral_inertia: 0.05,
            tilt_stiffness: 4e4,
            unbalance_mass_ecc: 1e-4,
        }
    }

    #[test]
    fn real_model_round_trips() {
        let m = eigen_symmetric(&build_jeffcott(&rotor()).unwrap()).unwrap();
        let text = modal_to_json(&m).unwrap();
        assert!(text.contains("\"omega_r_rad_s\"") && text.contains("\"version\": 1"));
        assert_eq!(modal_from_json(&text).unwrap(), m);
    }

    #[test]
    fn complex_model_round_trips() {
        let sys = build_jeffcott(&rotor()).unwrap().with_spin(500.0).unwrap();
        let m = eigen_general(&sys).unwrap();
        let text = complex_modal_to_json(&m).unwrap();
        assert!(text.contains("\"lambda_re\"") && text.contains("\"residues\""));
        assert_eq!(complex_modal_from_json(&text).unwrap(), m);
    }

    #[test]
    fn wrong_version_and_counts_are_rejected() {
        let m = eigen_symmetric(&build_jeffcott(&rotor()).unwrap()).unwrap();
        let text = modal_to_json(&m).unwrap();
        let bad = text.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(modal_from_json(&bad), Err(Error::Format(_))));
        let bad = text.replacen(
            &format!("\"n_modes\": {}", m.n_modes()),
            "\"n_modes\": 1",
            1,
        );
        assert!(matches!(modal_from_json(&bad), Err(Error::Format(_))));
        assert!(matches!(
            modal_from_json("{\"version\":1}"),
            Err(Error::Format(_))
        ));
    }
}
