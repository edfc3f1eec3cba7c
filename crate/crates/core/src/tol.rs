use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Accepted asymmetry of chart points and curve jets (relative to max(1, |S|)).
    pub sym_tol: f64,
    /// Isotropy residual |X^T Y - Y^T X| of a Lagrangian frame.
    pub iso_tol: f64,
    /// Residual |F^T J F - J| of a symplectic frame.
    pub frame_tol: f64,
    /// Largest condition number accepted before a matrix counts as singular.
    pub cond_max: f64,
    /// Relative asymmetry accepted for S' times the Schwarzian.
    pub ric_sym_tol: f64,
    /// Imaginary part (relative to spectral scale) accepted in curvature eigenvalues.
    pub imag_tol: f64,
    /// Minimum eigenvalue gap relative to the spectral diameter.
    pub eig_gap_tol: f64,
    /// Minimum |det(R - Ric/n Id)| for admissibility.
    pub adm_tol: f64,
    /// Accepted deviation of prod |k_i - kbar| from one.
    pub norm_tol: f64,
    /// Largest symplecticity residual accepted while integrating frames.
    pub resid_max: f64,
    /// Magnitude above which a Sigma entry fixes a sign convention.
    pub sign_tol: f64,
    /// Sup-norm tolerance for equivalence of reduced Cartan matrices.
    pub equiv_tol: f64,
    /// Schwarzian sup-norm below which a curve is flat.
    pub flat_tol: f64,
    /// Residual accepted by the Moebius fit.
    pub fit_tol: f64,
    /// Collinearity residual accepted by cycle membership.
    pub contain_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sym_tol: 1e-10,
            iso_tol: 1e-9,
            frame_tol: 1e-8,
            cond_max: 1e12,
            ric_sym_tol: 1e-8,
            imag_tol: 1e-8,
            eig_gap_tol: 1e-7,
            adm_tol: 1e-10,
            norm_tol: 1e-5,
            resid_max: 1e-6,
            sign_tol: 1e-6,
            equiv_tol: 1e-4,
            flat_tol: 1e-8,
            fit_tol: 1e-6,
            contain_tol: 1e-7,
        }
    }
}

impl Tolerances {
    /// Every threshold tightened by a factor of ten.
    pub fn strict(self) -> Self {
        Tolerances {
            sym_tol: self.sym_tol / 10.0,
            iso_tol: self.iso_tol / 10.0,
            frame_tol: self.frame_tol / 10.0,
            cond_max: self.cond_max / 10.0,
            ric_sym_tol: self.ric_sym_tol / 10.0,
            imag_tol: self.imag_tol / 10.0,
            eig_gap_tol: self.eig_gap_tol * 10.0,
            adm_tol: self.adm_tol * 10.0,
            norm_tol: self.norm_tol / 10.0,
            resid_max: self.resid_max / 10.0,
            sign_tol: self.sign_tol / 10.0,
            equiv_tol: self.equiv_tol / 10.0,
            flat_tol: self.flat_tol / 10.0,
            fit_tol: self.fit_tol / 10.0,
            contain_tol: self.contain_tol / 10.0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.sym_tol,
            self.iso_tol,
            self.frame_tol,
            self.cond_max,
            self.ric_sym_tol,
            self.imag_tol,
            self.eig_gap_tol,
            self.adm_tol,
            self.norm_tol,
            self.resid_max,
            self.sign_tol,
            self.equiv_tol,
            self.flat_tol,
            self.fit_tol,
            self.contain_tol,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(crate::JacobiError::InvalidInput(
                "tolerances must be positive and finite".into(),
            ))
        }
    }
}
