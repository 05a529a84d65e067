//! Entangling maps for Alice and Bob in both encodings, the dispersive
//! cavity-reflection layer realizing them, and the end-to-end protocol driver.

use crate::measurement::sample_heterodyne;
use crate::numerics::RngStream;
use crate::optics::CoherentLabel;
use crate::registers::{HybridState, QubitDensityMatrix, Term};
use crate::{wedge_angle, Complex, Encoding, Error, Real, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Full parameter set of one protocol instance.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub n_pairs: usize,
    pub alpha: Complex,
    pub eta: Real,
    pub encoding: Encoding,
    pub seed: u64,
    /// Treat distinct coherent labels as orthonormal when projecting
    /// (the δ_{kk'} idealization); exact overlaps are used otherwise.
    pub orthogonal_idealization: bool,
    /// Probability of reporting the wrong XX parity eigenvalue (default 0).
    pub xx_error_prob: Real,
    /// Skip the R correction on Alice after a heralded loss.
    pub disable_correction: bool,
    /// Cavity decay rate; documentation-level here (pulse shaping is reduced
    /// to the validity requirement duration ≫ 1/κ_min).
    pub kappa: Real,
    pub kappa_int: Real,
    pub t2_star: Real,
}

impl ProtocolParams {
    pub fn new(
        n_pairs: usize,
        alpha2: Real,
        eta: Real,
        encoding: Encoding,
        seed: u64,
    ) -> Result<Self> {
        if n_pairs == 0 || n_pairs > 5 {
            return Err(Error::Size(format!("n_pairs {n_pairs} outside [1, 5]")));
        }
        if alpha2 <= 0.0 || !alpha2.is_finite() {
            return Err(Error::Domain(format!("alpha2 {alpha2} must be positive")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Domain(format!("eta {eta} outside (0, 1]")));
        }
        Ok(Self {
            n_pairs,
            alpha: Complex::new(alpha2.sqrt(), 0.0),
            eta,
            encoding,
            seed,
            orthogonal_idealization: false,
            xx_error_prob: 0.0,
            disable_correction: false,
            kappa: 2.0 * std::f64::consts::PI * 50e6,
            kappa_int: 0.0,
            t2_star: 10e-6,
        })
    }

    pub fn phi(&self) -> Real {
        wedge_angle(self.n_pairs)
    }
}

/// Loss model applied to the pulse in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    None,
    SinglePhoton,
    FullChannel,
}

impl std::str::FromStr for LossMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LossMode::None),
            "single" | "single_photon" => Ok(LossMode::SinglePhoton),
            "full" | "full_channel" => Ok(LossMode::FullChannel),
            other => Err(Error::Domain(format!("unknown loss mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    ROnAlice,
}

/// One sampled protocol run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub shot: u64,
    pub heterodyne_k: usize,
    pub heterodyne_beta_re: Real,
    pub heterodyne_beta_im: Real,
    pub photons_lost: Option<u64>,
    pub parity_lambda: Option<i8>,
    pub z_outcomes: Option<(u8, u8)>,
    pub correction_applied: Correction,
    pub bob_addition_k: i64,
    pub fidelity: Real,
    #[serde(skip)]
    pub final_state: QubitDensityMatrix,
}

/// Dispersive shift realizing a conditional phase difference φ_j:
/// χ = (κ/2)·tan(φ_j/4).
pub fn tune_chi(phi_j: Real, kappa: Real) -> Result<Real> {
    if !(phi_j > 0.0 && phi_j <= std::f64::consts::PI) {
        return Err(Error::Domain(format!("phi_j {phi_j} outside (0, pi]")));
    }
    Ok(kappa / 2.0 * (phi_j / 4.0).tan())
}

/// Single-sided-cavity reflection coefficient conditioned on qubit state s:
/// R_s(ω) = [i(ω + (−1)^s χ) − (κ−κ_int)/2] / [i(ω + (−1)^s χ) + (κ+κ_int)/2].
pub fn reflection_coefficient(omega: Real, s: u8, chi: Real, kappa: Real, kappa_int: Real) -> Complex {
    let shift = omega + if s & 1 == 0 { chi } else { -chi };
    let num = Complex::new(-0.5 * (kappa - kappa_int), shift);
    let den = Complex::new(0.5 * (kappa + kappa_int), shift);
    num / den
}

/// Reflection coefficient of a cavity dispersively coupled to two qubits.
pub fn reflection_two_qubit(
    omega: Real,
    s1: u8,
    s2: u8,
    chi1: Real,
    chi2: Real,
    kappa: Real,
    kappa_int: Real,
) -> Complex {
    let shift = omega
        + if s1 & 1 == 0 { chi1 } else { -chi1 }
        + if s2 & 1 == 0 { chi2 } else { -chi2 };
    let num = Complex::new(-0.5 * (kappa - kappa_int), shift);
    let den = Complex::new(0.5 * (kappa + kappa_int), shift);
    num / den
}

/// Dispersive shifts (χ₁, χ₂) of an ancilla + register qubit sharing one
/// cavity, realizing |s₁s₂⟩|α⟩ ↦ |s₁s₂⟩|αe^{i(πs₁+φ_js₂)}⟩ up to the global
/// rotation φ = −(π+φ_j)/2: χ₁ = −(κ/2)sec(φ_j/2), χ₂ = (κ/2)tan(φ_j/2).
pub fn tune_two_qubit_chis(phi_j: Real, kappa: Real) -> Result<(Real, Real)> {
    if !(0.0..std::f64::consts::PI).contains(&phi_j) {
        return Err(Error::Domain(format!("phi_j {phi_j} outside [0, pi)")));
    }
    let half = phi_j / 2.0;
    Ok((-kappa / 2.0 / half.cos(), kappa / 2.0 * half.tan()))
}

/// Global phase-space rotation accompanying the two-qubit entangling
/// operation, φ = −(π+φ_j)/2.
pub fn two_qubit_global_phase(phi_j: Real) -> Real {
    -(std::f64::consts::PI + phi_j) / 2.0
}

/// Alice's entangling map: |m⟩|α⟩ ↦ |m⟩|e^{imφ}α⟩, with an additional
/// ancilla-conditioned flip (−1)^s in cat mode.
pub fn entangle_alice(state: &mut HybridState, params: &ProtocolParams) -> Result<()> {
    let phi = params.phi();
    let cat = params.encoding == Encoding::Cat;
    for t in &mut state.terms {
        let mut theta = t.alice as Real * phi;
        if cat {
            let s = t
                .ancilla_a
                .ok_or_else(|| Error::Encoding("cat mode requires Alice's ancilla".into()))?;
            theta += s as Real * std::f64::consts::PI;
        }
        t.light = t.light.rotated(theta);
    }
    Ok(())
}

/// Bob's entangling map: rotation by −nφ, with the ancilla-conditioned flip
/// in cat mode.
pub fn entangle_bob(state: &mut HybridState, params: &ProtocolParams) -> Result<()> {
    let phi = params.phi();
    let cat = params.encoding == Encoding::Cat;
    if !state.has_bob {
        return Err(Error::Encoding("state has no Bob register".into()));
    }
    for t in &mut state.terms {
        let n = t
            .bob
            .ok_or_else(|| Error::Encoding("missing Bob index".into()))?;
        let mut theta = -(n as Real) * phi;
        if cat {
            let s = t
                .ancilla_b
                .ok_or_else(|| Error::Encoding("cat mode requires Bob's ancilla".into()))?;
            theta += s as Real * std::f64::consts::PI;
        }
        t.light = t.light.rotated(theta);
    }
    Ok(())
}

/// Extend the state with Bob's register (and ancilla, in cat mode) prepared
/// in the uniform superposition.
pub fn attach_bob(state: &HybridState, with_ancilla: bool) -> HybridState {
    let d = 1usize << state.n_pairs;
    let anc_vals: &[Option<u8>] = if with_ancilla {
        &[Some(0), Some(1)]
    } else {
        &[None]
    };
    let w = 1.0 / ((d * anc_vals.len()) as Real).sqrt();
    let mut terms = Vec::with_capacity(state.terms.len() * d * anc_vals.len());
    for t in &state.terms {
        for n in 0..d {
            for &anc in anc_vals {
                terms.push(Term {
                    bob: Some(n),
                    ancilla_b: anc,
                    coeff: t.coeff * w,
                    ..*t
                });
            }
        }
    }
    HybridState {
        n_pairs: state.n_pairs,
        has_bob: true,
        has_ancillas: state.has_ancillas,
        terms,
    }
}

fn renormalize(state: &mut HybridState) -> Result<()> {
    let n2 = state.norm_sqr();
    if n2 < 1e-300 {
        return Err(Error::ZeroState);
    }
    let scale = Complex::new(1.0 / n2.sqrt(), 0.0);
    for t in &mut state.terms {
        t.coeff *= scale;
    }
    Ok(())
}

/// Apply the annihilation operator once: â acts on each coherent-label branch
/// as multiplication by the label, â|γ⟩ = γ|γ⟩. The state is renormalized.
pub fn apply_single_photon_loss(state: &mut HybridState) -> Result<()> {
    for t in &mut state.terms {
        t.coeff *= t.light.amplitude;
    }
    renormalize(state)
}

/// Sample one amplitude-damping trajectory: draw the number k of lost photons
/// (Poisson with mean n_ℓ, exact here because every branch label has the same
/// magnitude), then apply the Kraus operator M_k, which keeps the state pure:
/// each coefficient picks up the branch phase (γ/|γ|)^k and every label is
/// attenuated to √η γ.
pub fn apply_channel_trajectory<R: Rng>(
    state: &mut HybridState,
    eta: Real,
    rng: &mut R,
) -> Result<u64> {
    if state.terms.is_empty() {
        return Err(Error::ZeroState);
    }
    let amp = state.terms[0].light.amplitude.norm();
    let n_ell = (1.0 - eta) * amp * amp;
    let k = if n_ell > 0.0 {
        Poisson::new(n_ell)
            .map_err(|e| Error::Domain(format!("poisson: {e}")))?
            .sample(rng) as u64
    } else {
        0
    };
    let sqrt_eta = Complex::new(eta.sqrt(), 0.0);
    for t in &mut state.terms {
        let unit_phase = t.light.amplitude / t.light.amplitude.norm();
        t.coeff *= unit_phase.powu(k as u32);
        t.light = t.light.scaled(sqrt_eta);
    }
    renormalize(state)?;
    Ok(k)
}

/// |Ψ_k⟩ = 2^{−N/2} Σ_m |m⟩_A|m⊕k⟩_B over the 2N register qubits
/// (⊕ is addition mod 2^N; index layout m·2^N + n).
pub fn psi_k(n_pairs: usize, k: usize) -> Vec<Complex> {
    let d = 1usize << n_pairs;
    let mut v = vec![Complex::ZERO; d * d];
    let w = Complex::new(1.0 / (d as Real).sqrt(), 0.0);
    for m in 0..d {
        v[m * d + (m + k) % d] = w;
    }
    v
}

struct ShotOutcome {
    record: RunRecord,
}

fn run_one_shot(
    params: &ProtocolParams,
    loss_mode: LossMode,
    shot: u64,
) -> Result<ShotOutcome> {
    let mut rng = RngStream::new(params.seed, shot).rng();
    let cat = params.encoding == Encoding::Cat;
    let n = params.n_pairs;
    let d = 1usize << n;
    let half = (d / 2) as i64;

    let mut state = HybridState::initial(n, params.alpha, cat)?;
    entangle_alice(&mut state, params)?;

    let photons_lost = match loss_mode {
        LossMode::None => None,
        LossMode::SinglePhoton => {
            apply_single_photon_loss(&mut state)?;
            Some(1)
        }
        LossMode::FullChannel => Some(apply_channel_trajectory(&mut state, params.eta, &mut rng)?),
    };

    state = attach_bob(&state, cat);
    entangle_bob(&mut state, params)?;
    state.compact();

    // heterodyne sample from the mixture of Gaussians centered on the labels
    let labels: Vec<(CoherentLabel, Real)> = state
        .terms
        .iter()
        .map(|t| (t.light, t.coeff.norm_sqr()))
        .collect();
    let outcome = sample_heterodyne(&labels, n, &mut rng);
    let k_dec = outcome.decoded_k;

    // conditional qubit state given the heterodyne result
    let mut amps: Vec<Complex> = if params.orthogonal_idealization {
        let r = state.terms[0].light.amplitude.norm();
        let target = CoherentLabel::new(Complex::from_polar(r, k_dec as Real * params.phi()))?;
        crate::registers::project_light_ideal(&state, &target)?.0
    } else {
        let beta = CoherentLabel::new(outcome.beta)?;
        let (mut a, p) = crate::registers::project_light_amplitudes(&state, &beta)?;
        let scale = Complex::new(1.0 / p.sqrt(), 0.0);
        a.iter_mut().for_each(|c| *c *= scale);
        a
    };

    let mut parity_lambda = None;
    let mut z_outcomes = None;
    let mut correction = Correction::None;
    let mut mu = 0u8;

    if cat {
        // XX parity measurement of the two ancillas:
        // (P_± v)_{ab} = (v_{ab} ± v_{āb̄})/2 per register component
        let reg_dim = d * d;
        let mut p_plus = 0.0;
        let mut plus = vec![Complex::ZERO; amps.len()];
        let mut minus = vec![Complex::ZERO; amps.len()];
        for g in 0..reg_dim {
            for ab in 0..4 {
                let idx = g * 4 + ab;
                let flip = g * 4 + (ab ^ 0b11);
                plus[idx] = (amps[idx] + amps[flip]) * 0.5;
                minus[idx] = (amps[idx] - amps[flip]) * 0.5;
                p_plus += plus[idx].norm_sqr();
            }
        }
        let mut lambda: i8 = if rng.random_range(0.0..1.0) < p_plus { 1 } else { -1 };
        amps = if lambda == 1 { plus } else { minus };
        let norm: Real = amps.iter().map(|a| a.norm_sqr()).sum::<Real>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        if params.xx_error_prob > 0.0 && rng.random_range(0.0..1.0) < params.xx_error_prob {
            lambda = -lambda;
        }
        parity_lambda = Some(lambda);

        if lambda == -1 && !params.disable_correction {
            // R on Alice: |m⟩ ↦ ω^{−m}|m⟩
            for (idx, a) in amps.iter_mut().enumerate() {
                let m = idx / (4 * d);
                *a *= Complex::from_polar(1.0, -(m as Real) * params.phi());
            }
            correction = Correction::ROnAlice;
        }

        // Z-basis measurement of both ancillas
        let mut probs = [0.0; 4];
        for g in 0..reg_dim {
            for ab in 0..4 {
                probs[ab] += amps[g * 4 + ab].norm_sqr();
            }
        }
        let mut pick = rng.random_range(0.0..1.0);
        let mut ab_sel = 3;
        for (ab, p) in probs.iter().enumerate() {
            if pick < *p {
                ab_sel = ab;
                break;
            }
            pick -= p;
        }
        let (s, s2) = ((ab_sel >> 1) as u8, (ab_sel & 1) as u8);
        z_outcomes = Some((s, s2));
        mu = s ^ s2;
        let pz = probs[ab_sel].sqrt();
        let mut reg = vec![Complex::ZERO; reg_dim];
        for g in 0..reg_dim {
            reg[g] = amps[g * 4 + ab_sel] / pz;
        }
        amps = reg;
    }

    // Bob's correction: |n⟩_B ↦ |n + k'⟩ with k' = k + μ·2^{N−1}
    let k_add = (k_dec as i64 + mu as i64 * half).rem_euclid(d as i64);
    let mut corrected = vec![Complex::ZERO; d * d];
    for m in 0..d {
        for n2 in 0..d {
            let src = (n2 as i64 - k_add).rem_euclid(d as i64) as usize;
            corrected[m * d + n2] = amps[m * d + src];
        }
    }

    let target = psi_k(n, 0);
    let overlap: Complex = target
        .iter()
        .zip(&corrected)
        .map(|(t, a)| t.conj() * a)
        .sum();
    let fidelity = overlap.norm_sqr();

    let record = RunRecord {
        shot,
        heterodyne_k: k_dec,
        heterodyne_beta_re: outcome.beta.re,
        heterodyne_beta_im: outcome.beta.im,
        photons_lost,
        parity_lambda,
        z_outcomes,
        correction_applied: correction,
        bob_addition_k: k_add,
        fidelity,
        final_state: QubitDensityMatrix::from_pure(&corrected, 2 * n)?,
    };
    Ok(ShotOutcome { record })
}

/// Run the full protocol for `shots` independent samples. Shots are
/// parallelized with one RNG substream per shot, so results are reproducible
/// regardless of scheduling.
pub fn run_protocol(
    params: &ProtocolParams,
    loss_mode: LossMode,
    shots: u64,
) -> Result<Vec<RunRecord>> {
    (0..shots)
        .into_par_iter()
        .map(|shot| run_one_shot(params, loss_mode, shot).map(|o| o.record))
        .collect()
}
