//! Qubit-register indexing, the exact hybrid light–matter state, qubit
//! density matrices, and the QFT-based correction circuit.

use crate::optics::{coherent_overlap, CoherentLabel};
use crate::{Complex, Error, Real, Result};
use ndarray::Array2;

pub const MAX_QUBITS: usize = 12;

/// Computational-basis index of an N-qubit register, m = Σ_j 2^j m_j.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    pub m: usize,
    pub n_qubits: usize,
}

impl BasisIndex {
    pub fn new(m: usize, n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("{n_qubits} qubits > {MAX_QUBITS}")));
        }
        if m >= 1 << n_qubits {
            return Err(Error::Domain(format!("index {m} >= 2^{n_qubits}")));
        }
        Ok(Self { m, n_qubits })
    }

    pub fn bit(&self, j: usize) -> usize {
        (self.m >> j) & 1
    }
}

/// One branch of the joint light–matter superposition.
#[derive(Debug, Clone, Copy)]
pub struct Term {
    pub alice: usize,
    pub bob: Option<usize>,
    pub ancilla_a: Option<u8>,
    pub ancilla_b: Option<u8>,
    pub light: CoherentLabel,
    pub coeff: Complex,
}

impl Term {
    /// Flattened qubit index: Alice bits, then Bob bits, then the ancillas.
    fn qubit_index(&self, n_pairs: usize) -> usize {
        let mut idx = self.alice;
        if let Some(b) = self.bob {
            idx = (idx << n_pairs) | b;
        }
        if let Some(a) = self.ancilla_a {
            idx = (idx << 1) | a as usize;
        }
        if let Some(b) = self.ancilla_b {
            idx = (idx << 1) | b as usize;
        }
        idx
    }
}

/// Exact joint state of the qubit registers and the light, kept as a list of
/// (qubit basis state, coherent label) branches with complex coefficients.
///
/// Non-orthogonality of the light labels is retained: the norm and every
/// projection use exact coherent overlaps.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub n_pairs: usize,
    pub has_bob: bool,
    pub has_ancillas: bool,
    pub terms: Vec<Term>,
}

impl HybridState {
    /// Alice's register in the uniform superposition (|+⟩^{⊗N}, optionally an
    /// ancilla |+⟩ in cat mode) times the coherent pulse |α⟩.
    pub fn initial(n_pairs: usize, alpha: Complex, with_ancillas: bool) -> Result<Self> {
        if 2 * n_pairs + 2 > MAX_QUBITS {
            return Err(Error::Size(format!("{n_pairs} pairs too large")));
        }
        let dim = 1usize << n_pairs;
        let anc_vals: &[Option<u8>] = if with_ancillas {
            &[Some(0), Some(1)]
        } else {
            &[None]
        };
        let weight = 1.0 / ((dim * anc_vals.len()) as Real).sqrt();
        let light = CoherentLabel::new(alpha)?;
        let mut terms = Vec::new();
        for m in 0..dim {
            for &anc in anc_vals {
                terms.push(Term {
                    alice: m,
                    bob: None,
                    ancilla_a: anc,
                    ancilla_b: None,
                    light,
                    coeff: Complex::new(weight, 0.0),
                });
            }
        }
        Ok(Self {
            n_pairs,
            has_bob: false,
            has_ancillas: with_ancillas,
            terms,
        })
    }

    /// Exact squared norm, Σ_{t,t'} c_t* c_{t'} ⟨L_t|L_{t'}⟩ over branch pairs
    /// sharing the same qubit basis state.
    pub fn norm_sqr(&self) -> Real {
        let mut sorted: Vec<(usize, &Term)> = self
            .terms
            .iter()
            .map(|t| (t.qubit_index(self.n_pairs), t))
            .collect();
        sorted.sort_by_key(|(i, _)| *i);
        let mut total = 0.0;
        let mut start = 0;
        while start < sorted.len() {
            let idx = sorted[start].0;
            let mut end = start;
            while end < sorted.len() && sorted[end].0 == idx {
                end += 1;
            }
            for a in start..end {
                for b in start..end {
                    let (ta, tb) = (sorted[a].1, sorted[b].1);
                    total += (ta.coeff.conj()
                        * tb.coeff
                        * coherent_overlap(&ta.light, &tb.light))
                    .re;
                }
            }
            start = end;
        }
        total
    }

    /// Merge branches that share both the qubit basis state and the light
    /// label, dropping negligible coefficients.
    pub fn compact(&mut self) {
        let n_pairs = self.n_pairs;
        self.terms
            .sort_by(|a, b| {
                a.qubit_index(n_pairs)
                    .cmp(&b.qubit_index(n_pairs))
                    .then(a.light.amplitude.re.total_cmp(&b.light.amplitude.re))
                    .then(a.light.amplitude.im.total_cmp(&b.light.amplitude.im))
            });
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.qubit_index(n_pairs) == t.qubit_index(n_pairs)
                    && (last.light.amplitude - t.light.amplitude).norm() < 1e-12
                {
                    last.coeff += t.coeff;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| t.coeff.norm() > 1e-300);
        self.terms = merged;
    }

    /// Number of qubits carried by each term's flattened index.
    pub fn index_qubits(&self) -> usize {
        self.n_pairs
            + if self.has_bob { self.n_pairs } else { 0 }
            + if self.has_ancillas { 2 } else { 0 }
    }
}

/// Dense density matrix over an explicit qubit register.
#[derive(Debug, Clone)]
pub struct QubitDensityMatrix {
    pub n_qubits: usize,
    pub matrix: Array2<Complex>,
}

impl QubitDensityMatrix {
    pub fn from_pure(amps: &[Complex], n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::Size(format!(
                "expected {dim} amplitudes, got {}",
                amps.len()
            )));
        }
        let mut m = Array2::from_elem((dim, dim), Complex::ZERO);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = amps[i] * amps[j].conj();
            }
        }
        Ok(Self {
            n_qubits,
            matrix: m,
        })
    }

    pub fn trace(&self) -> Complex {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure target |ψ⟩.
    pub fn fidelity_with_pure(&self, psi: &[Complex]) -> Real {
        let dim = self.matrix.nrows();
        assert_eq!(psi.len(), dim);
        let mut f = Complex::ZERO;
        for i in 0..dim {
            for j in 0..dim {
                f += psi[i].conj() * self.matrix[(i, j)] * psi[j];
            }
        }
        f.re
    }

    pub fn add_scaled(&mut self, other: &QubitDensityMatrix, weight: Real) {
        self.matrix.zip_mut_with(&other.matrix, |a, b| {
            *a += b * weight;
        });
    }

    pub fn hermiticity_defect(&self) -> Real {
        let mut worst: Real = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// QFT unitary, U[n][m] = ω^{mn}/√(2^q) with ω = e^{2πi/2^q}.
pub fn qft(n_qubits: usize) -> Result<Array2<Complex>> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!("{n_qubits} qubits > {MAX_QUBITS}")));
    }
    let dim = 1usize << n_qubits;
    let scale = 1.0 / (dim as Real).sqrt();
    let mut u = Array2::from_elem((dim, dim), Complex::ZERO);
    for n in 0..dim {
        for m in 0..dim {
            let phase = 2.0 * std::f64::consts::PI * ((n * m) % dim) as Real / dim as Real;
            u[(n, m)] = Complex::from_polar(scale, phase);
        }
    }
    Ok(u)
}

/// Diagonal correction gate R^k with R^k|n⟩ = ω^{−kn}|n⟩, a product of
/// single-qubit phase gates e^{−ik·2πi·2^j/2^q} on qubit j.
pub fn phase_gate_r(k: i64, n_qubits: usize) -> Array2<Complex> {
    let dim = 1usize << n_qubits;
    let mut u = Array2::from_elem((dim, dim), Complex::ZERO);
    for n in 0..dim {
        let phase = -2.0 * std::f64::consts::PI * (k as Real) * (n as Real) / dim as Real;
        u[(n, n)] = Complex::from_polar(1.0, phase);
    }
    u
}

/// Permutation |m⟩ ↦ |(m − k) mod 2^q⟩, the adder realized physically as
/// U†_QFT R^k U_QFT.
pub fn add_constant(k: i64, n_qubits: usize) -> Array2<Complex> {
    let dim = 1usize << n_qubits;
    let mut u = Array2::from_elem((dim, dim), Complex::ZERO);
    for m in 0..dim {
        let target = (m as i64 - k).rem_euclid(dim as i64) as usize;
        u[(target, m)] = Complex::ONE;
    }
    u
}

/// Project the light of `state` onto the heterodyne outcome |β⟩ (exact
/// non-orthogonal overlaps). Returns the conditional qubit state and the
/// squared norm ‖⟨β|Ψ⟩‖², i.e. π·(probability density) of the outcome.
pub fn project_light(
    state: &HybridState,
    outcome: &CoherentLabel,
) -> Result<(QubitDensityMatrix, Real)> {
    let (amps, p) = project_light_amplitudes(state, outcome)?;
    let n_qubits = state.index_qubits();
    let scale = Complex::new(1.0 / p.sqrt(), 0.0);
    let normalized: Vec<Complex> = amps.iter().map(|a| a * scale).collect();
    Ok((QubitDensityMatrix::from_pure(&normalized, n_qubits)?, p))
}

/// Unnormalized qubit amplitudes ⟨β|Ψ⟩ and their squared norm.
pub fn project_light_amplitudes(
    state: &HybridState,
    outcome: &CoherentLabel,
) -> Result<(Vec<Complex>, Real)> {
    let n_qubits = state.index_qubits();
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex::ZERO; dim];
    for t in &state.terms {
        amps[t.qubit_index(state.n_pairs)] += t.coeff * coherent_overlap(outcome, &t.light);
    }
    let p: Real = amps.iter().map(|a| a.norm_sqr()).sum();
    if p < 1e-300 {
        return Err(Error::ZeroProbability);
    }
    Ok((amps, p))
}

/// Idealized projection treating distinct light labels as orthonormal: keep
/// only branches whose label matches `label`, with coefficients unchanged.
pub fn project_light_ideal(
    state: &HybridState,
    label: &CoherentLabel,
) -> Result<(Vec<Complex>, Real)> {
    let n_qubits = state.index_qubits();
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex::ZERO; dim];
    for t in &state.terms {
        if (t.light.amplitude - label.amplitude).norm() < 1e-9 {
            amps[t.qubit_index(state.n_pairs)] += t.coeff;
        }
    }
    let p: Real = amps.iter().map(|a| a.norm_sqr()).sum();
    if p < 1e-300 {
        return Err(Error::ZeroProbability);
    }
    let scale = Complex::new(1.0 / p.sqrt(), 0.0);
    for a in &mut amps {
        *a *= scale;
    }
    Ok((amps, p))
}

pub fn mat_mul(a: &Array2<Complex>, b: &Array2<Complex>) -> Array2<Complex> {
    a.dot(b)
}

pub fn dagger(a: &Array2<Complex>) -> Array2<Complex> {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}
