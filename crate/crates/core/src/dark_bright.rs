//! Dark state and bright-state completion on the computational subspace.
//!
//! The dark state is `|𝒟⟩ = Σ_k c_k |k⟩` with the `c_k` given by hyperspherical
//! angles. Bright states follow the nested closed form
//!
//! ```text
//! b_1 ∝ −c_2*|1⟩ + c_1*|2⟩
//! b_k = N_k (c_1|1⟩ + … + c_k|k⟩ + Λ_{k+1}|k+1⟩),   Λ_{k+1} = −(Σ_{l≤k}|c_l|²)/c_{k+1}*
//! ```
//!
//! whenever it is defined. Each `b_k` is supported on `|1⟩..|k+1⟩`, which is
//! what gives the bare couplings their `ω_{k>l+1,l} = 0` pattern. Indices where
//! the closed form breaks down are filled by Gram–Schmidt completion.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector, C64, ZERO};

/// Below this magnitude a coefficient (or partial norm) counts as zero for the
/// closed-form bright states.
pub const CLOSED_FORM_EPS: f64 = 1e-12;

/// Residual norms below this are discarded during Gram–Schmidt completion.
pub const COMPLETION_EPS: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-10;

/// Hyperspherical angles `θ_1..θ_{d-1}` and phases `φ_1..φ_{d-1}` of the dark state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkAngles {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl DarkAngles {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        let angles = Self { thetas, phis };
        angles.validate()?;
        Ok(angles)
    }

    /// All angles zero, i.e. `|𝒟⟩ = |1⟩`.
    pub fn zeros(d: usize) -> Self {
        Self { thetas: vec![0.0; d - 1], phis: vec![0.0; d - 1] }
    }

    /// Qutrit angles in the `(χ, ξ, θ, φ)` naming of the three-level scheme.
    pub fn qutrit(chi: f64, xi: f64, theta: f64, varphi: f64) -> Self {
        Self { thetas: vec![theta, varphi], phis: vec![chi, xi] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::usage("dark angles need at least one theta (d >= 2)"));
        }
        check_dim(self.thetas.len(), self.phis.len())
    }

    pub fn d(&self) -> usize {
        self.thetas.len() + 1
    }
}

/// `c_1 = cos θ_1`, `c_k = e^{iφ_{k-1}} sin θ_1…sin θ_{k-1} cos θ_k`,
/// `c_d = e^{iφ_{d-1}} sin θ_1…sin θ_{d-1}`.
pub fn dark_coefficients(angles: &DarkAngles) -> Vector {
    let d = angles.d();
    let mut c = Vector::zeros(d);
    let mut sines = 1.0;
    for k in 0..d {
        let radial = if k < d - 1 { sines * angles.thetas[k].cos() } else { sines };
        let phase = if k == 0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, angles.phis[k - 1]) };
        c[k] = phase * radial;
        if k < d - 1 {
            sines *= angles.thetas[k].sin();
        }
    }
    c
}

/// How a bright vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BrightForm {
    ClosedForm,
    Completion,
}

/// Orthonormal dark–bright basis of the computational subspace.
#[derive(Debug, Clone)]
pub struct DarkBrightBasis {
    c: Vector,
    brights: Vec<Vector>,
    /// `Λ_{k+1}` for bright `k` (index `k-1`); `None` for `b_1` and fallbacks.
    lambdas: Vec<Option<C64>>,
    /// Normalization of bright `k`; `None` for fallbacks.
    norms: Vec<Option<f64>>,
    forms: Vec<BrightForm>,
}

impl DarkBrightBasis {
    pub fn from_angles(angles: &DarkAngles) -> Result<Self> {
        angles.validate()?;
        build_basis(&dark_coefficients(angles))
    }

    pub fn d(&self) -> usize {
        self.c.len()
    }

    pub fn dark(&self) -> &Vector {
        &self.c
    }

    /// Bright state `b_k`, `k` in `1..=d-1`.
    pub fn bright(&self, k: usize) -> &Vector {
        &self.brights[k - 1]
    }

    pub fn brights(&self) -> &[Vector] {
        &self.brights
    }

    pub fn lambda(&self, k: usize) -> Option<C64> {
        self.lambdas[k - 1]
    }

    pub fn norm_factor(&self, k: usize) -> Option<f64> {
        self.norms[k - 1]
    }

    pub fn form(&self, k: usize) -> BrightForm {
        self.forms[k - 1]
    }

    pub fn is_closed_form(&self) -> bool {
        self.forms.iter().all(|f| *f == BrightForm::ClosedForm)
    }

    /// `d × d` matrix with columns `𝒟, b_1, …, b_{d-1}`.
    pub fn frame(&self) -> Matrix {
        let d = self.d();
        let mut m = Matrix::zeros((d, d));
        m.column_mut(0).assign(&self.c);
        for (k, b) in self.brights.iter().enumerate() {
            m.column_mut(k + 1).assign(b);
        }
        m
    }
}

/// Build the dark–bright basis for normalized dark coefficients `c`.
pub fn build_basis(c: &Vector) -> Result<DarkBrightBasis> {
    let d = c.len();
    if d < 2 {
        return Err(Error::usage("dark coefficients need length >= 2"));
    }
    let n = linalg::norm(c);
    if (n - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::usage(format!("dark coefficients not normalized: |c| = {n}")));
    }

    let mut brights: Vec<Option<Vector>> = vec![None; d - 1];
    let mut lambdas = vec![None; d - 1];
    let mut norms = vec![None; d - 1];

    let head = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    if head > CLOSED_FORM_EPS {
        let mut b = Vector::zeros(d);
        b[0] = -c[1].conj() / head;
        b[1] = c[0].conj() / head;
        brights[0] = Some(b);
        norms[0] = Some(1.0 / head);
    }

    let mut partial = c[0].norm_sqr();
    for k in 2..d {
        // k is the 1-based bright index; c_{k+1} is c[k]
        partial += c[k - 1].norm_sqr();
        let next = c[k];
        if next.norm() <= CLOSED_FORM_EPS || partial.sqrt() <= CLOSED_FORM_EPS {
            continue;
        }
        let lambda = -partial / next.conj();
        let norm = (partial + lambda.norm_sqr()).powf(-0.5);
        let mut b = Vector::zeros(d);
        for l in 0..k {
            b[l] = c[l] * norm;
        }
        b[k] = lambda * norm;
        brights[k - 1] = Some(b);
        lambdas[k - 1] = Some(lambda);
        norms[k - 1] = Some(norm);
    }

    let forms: Vec<BrightForm> =
        brights.iter().map(|b| if b.is_some() { BrightForm::ClosedForm } else { BrightForm::Completion }).collect();

    if forms.contains(&BrightForm::Completion) {
        complete(c, &mut brights)?;
    }

    Ok(DarkBrightBasis {
        c: c.clone(),
        brights: brights.into_iter().map(|b| b.expect("completed")).collect(),
        lambdas,
        norms,
        forms,
    })
}

/// Fill the missing brights by Gram–Schmidt over `|1⟩..|d⟩` in index order.
fn complete(c: &Vector, brights: &mut [Option<Vector>]) -> Result<()> {
    let d = c.len();
    let mut accepted: Vec<Vector> = std::iter::once(c.clone()).chain(brights.iter().flatten().cloned()).collect();
    let mut candidates = 0..d;
    for slot in brights.iter_mut().filter(|b| b.is_none()) {
        let vector = loop {
            let j = candidates
                .next()
                .ok_or_else(|| Error::Numerical("bright-state completion ran out of candidates".into()))?;
            let mut v = Vector::zeros(d);
            v[j] = C64::new(1.0, 0.0);
            // two passes keep the residual orthogonal to working precision
            for _ in 0..2 {
                for a in &accepted {
                    let proj = linalg::inner(a, &v);
                    v = v - a.mapv(|z| z * proj);
                }
            }
            let r = linalg::norm(&v);
            if r > COMPLETION_EPS {
                break v.mapv(|z| z / r);
            }
        };
        accepted.push(vector.clone());
        *slot = Some(vector);
    }
    Ok(())
}

/// Bare couplings `ω_{k,l} = (Ω_l e^{−iφ_l}/2)⟨k|b_l⟩` as a `d × (d-1)` matrix.
///
/// `pulses[l-1]` is the complex drive `Ω_l e^{−iφ_l}`. With these couplings
/// `Σ ω_{k,l}|k⟩⟨e_l|` equals `Σ_l (Ω_l/2)e^{−iφ_l}|b_l⟩⟨e_l|`.
pub fn bare_couplings(basis: &DarkBrightBasis, pulses: &[C64]) -> Result<Matrix> {
    let d = basis.d();
    check_dim(d - 1, pulses.len())?;
    let mut omega = Matrix::from_elem((d, d - 1), ZERO);
    for (l, (b, p)) in basis.brights().iter().zip(pulses).enumerate() {
        for k in 0..d {
            omega[[k, l]] = b[k] * p * 0.5;
        }
    }
    Ok(omega)
}
