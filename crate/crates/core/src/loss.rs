//! Amplitude-damping channel for the traveling pulse: Kraus operators, the
//! parity-resolved decomposition of the channel acting on the hybrid cat
//! qudit, and the resulting post-measurement qubit states.

use crate::registers::QubitDensityMatrix;
use crate::{wedge_angle, Complex, Error, Real, Result};
use ndarray::Array2;

/// Kraus operator M_k = √((1−η)^k/k!)·√η^{n̂}·â^k in the Fock basis:
/// M_k|n⟩ = √(C(n,k)(1−η)^k η^{n−k})|n−k⟩.
pub fn kraus_operator_fock(k: usize, eta: Real, cutoff: usize) -> Result<Array2<Complex>> {
    if k > cutoff {
        return Err(Error::Truncation(format!(
            "kraus index {k} exceeds cutoff {cutoff}"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta {eta} outside [0, 1]")));
    }
    let dim = cutoff + 1;
    let mut m = Array2::from_elem((dim, dim), Complex::ZERO);
    for n in k..=cutoff {
        // log-space binomial to stay finite at large n
        let mut ln_c = 0.0;
        for i in 1..=k {
            ln_c += ((n - k + i) as Real).ln() - (i as Real).ln();
        }
        let ln_w = ln_c
            + k as Real * (1.0 - eta).max(Real::MIN_POSITIVE).ln()
            + (n - k) as Real * eta.max(Real::MIN_POSITIVE).ln();
        let w = if eta == 1.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            ln_w.exp()
        };
        m[(n - k, n)] = Complex::new(w.sqrt(), 0.0);
    }
    Ok(m)
}

/// Loss-induced dephasing factor e^{Z_{mm'}} between phase-qudit basis states
/// with Δm = m−m': Z = i·n_ℓ sin(Δm·φ) − 2n_ℓ sin²(Δm·φ/2).
pub fn dephasing_factor_phase(n_ell: Real, dm: i64, phi: Real) -> Complex {
    let angle = dm as Real * phi;
    let phase = n_ell * angle.sin();
    let damp = 2.0 * n_ell * (0.5 * angle).sin().powi(2);
    Complex::from_polar((-damp).exp(), phase)
}

/// Parity label of the loss channel branch: even (+) or odd (−) number of
/// photons lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityBranch {
    Even,
    Odd,
}

impl ParityBranch {
    pub fn index(&self) -> usize {
        match self {
            ParityBranch::Even => 0,
            ParityBranch::Odd => 1,
        }
    }

    /// The XX eigenvalue λ heralded by this branch.
    pub fn lambda(&self) -> i8 {
        match self {
            ParityBranch::Even => 1,
            ParityBranch::Odd => -1,
        }
    }
}

/// All coefficient tables of the parity-resolved loss channel at fixed (α, η).
///
/// `p[λ][σ][σ']` holds p^λ_{σσ'} with index 0 ↦ +, 1 ↦ −.
#[derive(Debug, Clone)]
pub struct LossChannelTables {
    pub alpha: Real,
    pub eta: Real,
    pub n_ell: Real,
    pub j_plus: Real,
    pub j_minus: Real,
    pub k_plus: Real,
    pub k_minus: Real,
    pub d_plus: Real,
    pub d_minus: Real,
    pub p: [[[Real; 2]; 2]; 2],
}

impl LossChannelTables {
    /// Dephasing factor Ω^λ(Δm) of the λ branch, with
    /// Ω⁺ = cosh(n_ℓe^{iΔmφ})/cosh n_ℓ and Ω⁻ = sinh(n_ℓe^{iΔmφ})/sinh n_ℓ.
    pub fn omega(&self, branch: ParityBranch, dm: i64, phi: Real) -> Complex {
        let arg = Complex::from_polar(self.n_ell, dm as Real * phi);
        match branch {
            ParityBranch::Even => arg.cosh() / self.n_ell.cosh(),
            ParityBranch::Odd => {
                if self.n_ell < 1e-30 {
                    // limit n_ℓ→0 of sinh(n_ℓe^{iθ})/sinh(n_ℓ)
                    Complex::from_polar(1.0, dm as Real * phi)
                } else {
                    arg.sinh() / self.n_ell.sinh()
                }
            }
        }
    }

    /// Total probability p^λ = Σ_σ p^λ_{σσ} of the λ branch.
    pub fn branch_probability(&self, branch: ParityBranch) -> Real {
        let l = branch.index();
        self.p[l][0][0] + self.p[l][1][1]
    }
}

/// Build all Appendix-style channel tables for amplitude α > 0 and
/// transmission η.
pub fn parity_channel_tables(alpha: Real, eta: Real) -> Result<LossChannelTables> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha {alpha} must be positive")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("eta {eta} outside (0, 1]")));
    }
    let a2 = alpha * alpha;
    let n_ell = (1.0 - eta) * a2;
    // J±, K± written to avoid overflow: cosh(ηa²)/cosh(a²) = e^{-(1-η)a²}·(1+e^{-2ηa²})/(1+e^{-2a²}) etc.
    let ratio = |top_sign: Real, bot_sign: Real| -> Real {
        (-n_ell).exp() * (1.0 + top_sign * (-2.0 * eta * a2).exp())
            / (1.0 + bot_sign * (-2.0 * a2).exp())
    };
    let j_plus = ratio(1.0, 1.0);
    let j_minus = ratio(-1.0, -1.0);
    let k_plus = ratio(-1.0, 1.0);
    let k_minus = ratio(1.0, -1.0);
    let norm = [
        (2.0 * (1.0 + (-2.0 * a2).exp())).sqrt(),
        (2.0 * (1.0 - (-2.0 * a2).exp())).sqrt(),
    ];
    let j = [j_plus, j_minus];
    let k = [k_plus, k_minus];
    let mut p = [[[0.0; 2]; 2]; 2];
    for s in 0..2 {
        for s2 in 0..2 {
            let pref = 0.25 * norm[s] * norm[s2];
            p[0][s][s2] = pref * (j[s] * j[s2]).sqrt() * n_ell.cosh();
            p[1][s][s2] = pref * (k[s] * k[s2]).sqrt() * n_ell.sinh();
        }
    }
    let e = (-2.0 * eta * a2).exp();
    let d_plus = 0.5 * ((1.0 + e).sqrt() + (1.0 - e).sqrt());
    let d_minus = 0.5 * ((1.0 + e).sqrt() - (1.0 - e).sqrt());
    Ok(LossChannelTables {
        alpha,
        eta,
        n_ell,
        j_plus,
        j_minus,
        k_plus,
        k_minus,
        d_plus,
        d_minus,
        p,
    })
}

/// Post-measurement state ρ_k^{λ,μ} of Alice's and Bob's 2N register qubits
/// after the XX parity check (eigenvalue λ), Z measurements with outcome
/// parity μ, and heterodyne outcome k.
///
/// Basis index layout: |m⟩_A|n⟩_B ↦ m·2^N + n.
pub fn post_measurement_state(
    tables: &LossChannelTables,
    n_pairs: usize,
    k: usize,
    branch: ParityBranch,
    mu: u8,
) -> Result<QubitDensityMatrix> {
    if n_pairs == 0 || n_pairs > 6 {
        return Err(Error::Domain(format!("n_pairs {n_pairs} outside [1, 6]")));
    }
    let d = 1usize << n_pairs;
    let phi = wedge_angle(n_pairs);
    let half = d / 2;
    let (c_main, c_shift) = match mu % 2 {
        0 => (tables.d_plus, tables.d_minus),
        _ => (tables.d_minus, tables.d_plus),
    };
    let branch_sign = branch.lambda() as Real;
    // |Ψ^{λ,μ}_{m,k}⟩ = c_main|m, m⊕k⟩ + λ·c_shift|m, m⊕(k+2^{N−1})⟩
    let psi = |m: usize| -> [(usize, Real); 2] {
        let idx0 = m * d + (m + k) % d;
        let idx1 = m * d + (m + k + half) % d;
        [(idx0, c_main), (idx1, branch_sign * c_shift)]
    };
    let dim = d * d;
    let mut rho = Array2::from_elem((dim, dim), Complex::ZERO);
    let weight = 1.0 / d as Real;
    for m in 0..d {
        for m2 in 0..d {
            let om = tables.omega(branch, m as i64 - m2 as i64, phi) * weight;
            for (i, ci) in psi(m) {
                for (j, cj) in psi(m2) {
                    rho[(i, j)] += om * ci * cj;
                }
            }
        }
    }
    Ok(QubitDensityMatrix {
        n_qubits: 2 * n_pairs,
        matrix: rho,
    })
}
