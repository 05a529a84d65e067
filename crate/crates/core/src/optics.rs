//! Coherent-state and cat-state algebra, plus a truncated Fock-space
//! representation used only as a validation oracle.
//!
//! The protocol itself never touches Fock vectors: every state of the light is
//! a superposition of coherent states, so overlaps are evaluated in closed
//! form and no truncation error enters the main path.

use crate::{Complex, Error, Real, Result};

/// Cap on |α|² for coherent labels, protecting `exp` evaluations in overlaps.
pub const AMPLITUDE_SQ_CAP: Real = 1e6;

/// A coherent state |α⟩, stored by its complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    pub amplitude: Complex,
}

impl CoherentLabel {
    pub fn new(amplitude: Complex) -> Result<Self> {
        if !amplitude.re.is_finite() || !amplitude.im.is_finite() {
            return Err(Error::Domain("non-finite coherent amplitude".into()));
        }
        if amplitude.norm_sqr() > AMPLITUDE_SQ_CAP {
            return Err(Error::Domain(format!(
                "|alpha|^2 = {} exceeds cap {AMPLITUDE_SQ_CAP}",
                amplitude.norm_sqr()
            )));
        }
        Ok(Self { amplitude })
    }

    /// Rotate the amplitude in phase space: α ↦ e^{iθ}α.
    pub fn rotated(&self, theta: Real) -> Self {
        Self {
            amplitude: self.amplitude * Complex::from_polar(1.0, theta),
        }
    }

    /// Scale the amplitude (e.g. attenuation α ↦ √η α).
    pub fn scaled(&self, factor: Complex) -> Self {
        Self {
            amplitude: self.amplitude * factor,
        }
    }
}

/// Photon-number parity of a cat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// +1 for even, −1 for odd.
    pub fn sign(&self) -> Real {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// A normalized cat state |C±_α⟩ = (|α⟩ ± |−α⟩)/N±_α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatLabel {
    pub amplitude: Complex,
    pub parity: Parity,
}

impl CatLabel {
    pub fn new(amplitude: Complex, parity: Parity) -> Result<Self> {
        CoherentLabel::new(amplitude)?;
        Ok(Self { amplitude, parity })
    }

    /// Normalization factor N±_α = [2(1 ± e^{−2|α|²})]^{1/2}.
    pub fn norm_factor(&self) -> Real {
        let a2 = self.amplitude.norm_sqr();
        (2.0 * (1.0 + self.parity.sign() * (-2.0 * a2).exp())).sqrt()
    }
}

/// ⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + a*·b).
pub fn coherent_overlap(a: &CoherentLabel, b: &CoherentLabel) -> Complex {
    let ea = a.amplitude;
    let eb = b.amplitude;
    (Complex::new(-0.5 * (ea.norm_sqr() + eb.norm_sqr()), 0.0) + ea.conj() * eb).exp()
}

/// A state of one bosonic mode, truncated at photon number `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub cutoff: usize,
    pub amplitudes: Vec<Complex>,
}

impl FockVector {
    pub fn zero(cutoff: usize) -> Self {
        Self {
            cutoff,
            amplitudes: vec![Complex::ZERO; cutoff + 1],
        }
    }

    pub fn norm_sqr(&self) -> Real {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &FockVector) -> Complex {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, factor: Complex) {
        for c in &mut self.amplitudes {
            *c *= factor;
        }
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n < 1e-150 {
            return Err(Error::ZeroState);
        }
        self.scale(Complex::new(1.0 / n, 0.0));
        Ok(self)
    }
}

/// Default truncation rule ⌈|α|² + 10√(|α|²+1)⌉, keeping the Poisson tail
/// below 1e-8 for |α|² ≤ 100.
pub fn default_cutoff(alpha_sq: Real) -> usize {
    (alpha_sq + 10.0 * (alpha_sq + 1.0).sqrt()).ceil() as usize
}

/// Fock representation of the coherent state |α⟩: c_n = e^{−|α|²/2} αⁿ/√(n!).
pub fn coherent_to_fock(label: &CoherentLabel, cutoff: usize) -> FockVector {
    let mut v = FockVector::zero(cutoff);
    let mut c = Complex::new((-0.5 * label.amplitude.norm_sqr()).exp(), 0.0);
    v.amplitudes[0] = c;
    for n in 1..=cutoff {
        c *= label.amplitude / (n as Real).sqrt();
        v.amplitudes[n] = c;
    }
    v
}

/// Fock representation of a normalized cat state.
///
/// The even cat has support only on even photon numbers, the odd cat only on
/// odd ones.
pub fn cat_to_fock(cat: &CatLabel, cutoff: usize) -> Result<FockVector> {
    let plus = coherent_to_fock(&CoherentLabel { amplitude: cat.amplitude }, cutoff);
    let sign = cat.parity.sign();
    let inv_norm = 1.0 / cat.norm_factor();
    let mut v = FockVector::zero(cutoff);
    for n in 0..=cutoff {
        // |α⟩ ± |−α⟩ doubles one parity sector and cancels the other
        let parity_factor = 1.0 + sign * if n % 2 == 0 { 1.0 } else { -1.0 };
        v.amplitudes[n] = plus.amplitudes[n] * parity_factor * inv_norm;
    }
    let eps_trunc = (1.0 - v.norm_sqr()).abs();
    if eps_trunc > 1e-8 {
        return Err(Error::Truncation(format!(
            "cat state truncation error {eps_trunc:.3e} at cutoff {cutoff}"
        )));
    }
    Ok(v)
}

/// Unnormalized action of the annihilation operator: â|n⟩ = √n|n−1⟩.
pub fn annihilate(f: &FockVector) -> Result<FockVector> {
    let mut v = FockVector::zero(f.cutoff);
    for n in 1..=f.cutoff {
        v.amplitudes[n - 1] = (n as Real).sqrt() * f.amplitudes[n];
    }
    if v.norm_sqr() < 1e-300 {
        return Err(Error::ZeroState);
    }
    Ok(v)
}
