//! Closed-form fidelities, the total-error optimizer and its Lambert-W
//! closed forms, table/sweep generators, and the quasistatic-dephasing
//! fidelities with their Monte-Carlo oracle.

use crate::numerics::{lambert_w0, RngStream};
use crate::measurement::p_measurement_error;
use crate::{wedge_angle, Complex, Encoding, Error, Real, Result};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

const PI: Real = std::f64::consts::PI;

/// Regime parameter Λ_{N,η} = (1−η)/(η sin²(π/2^N)); closed forms below are
/// valid for Λ < 1.
pub fn lambda_param(n_pairs: usize, eta: Real) -> Real {
    (1.0 - eta) / (eta * (PI / (1u64 << n_pairs) as Real).sin().powi(2))
}

/// Loss-only fidelity F_ζ(n_ℓ) = 4^{−N}[2^N + 2Σ_{j=1}^{2^N−1}(2^N−j)f_ζ(n_ℓ,j)].
pub fn fidelity_loss(encoding: Encoding, n_pairs: usize, n_ell: Real) -> Real {
    let d = (1u64 << n_pairs) as Real;
    let phi = wedge_angle(n_pairs);
    let mut sum = 0.0;
    for j in 1..(1u64 << n_pairs) {
        let a = j as Real * phi;
        let f = match encoding {
            Encoding::Phase => {
                (-2.0 * n_ell * (0.5 * a).sin().powi(2)).exp() * (n_ell * a.sin()).cos()
            }
            Encoding::Cat => {
                (n_ell * a.sin()).cos() * (n_ell * a.cos()).cosh() / n_ell.cosh()
            }
        };
        sum += (d - j as Real) * f;
    }
    (d + 2.0 * sum) / (d * d)
}

/// XX parity branch of the cat protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatBranch {
    XxPlus,
    XxMinus,
}

/// Branch-resolved cat fidelity F^±_cat(n_ℓ) with the overall (D⁺)² factor
/// set to 1 (the exact factor is available through the channel tables).
pub fn fidelity_cat_branch(n_pairs: usize, n_ell: Real, branch: CatBranch) -> Real {
    if n_ell < 1e-8 {
        // leading-order expansions, avoiding the 0/0 in f⁻
        return match branch {
            CatBranch::XxPlus => 1.0 - 0.5 * n_ell * n_ell,
            CatBranch::XxMinus => 1.0 - n_ell * n_ell / 6.0,
        };
    }
    let d = (1u64 << n_pairs) as Real;
    let phi = wedge_angle(n_pairs);
    let mut sum = 0.0;
    for j in 1..(1u64 << n_pairs) {
        let a = j as Real * phi;
        let f = match branch {
            CatBranch::XxPlus => {
                2.0 * (n_ell * a.sin()).cos() * (n_ell * a.cos()).cosh() / n_ell.cosh()
            }
            CatBranch::XxMinus => {
                let mut s = 0.0;
                for sigma in [1.0, -1.0] {
                    s += sigma * (sigma * n_ell * a.cos()).exp()
                        * (n_ell * a.sin() - sigma * a).cos();
                }
                s / n_ell.sinh()
            }
        };
        sum += (d - j as Real) * f;
    }
    (d + sum) / (d * d)
}

/// Error budget of one (encoding, N, η, n) operating point.
#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    pub encoding: Encoding,
    pub n_pairs: usize,
    pub eta: Real,
    pub n: Real,
    pub n_ell: Real,
    pub fidelity: Real,
    pub p_m: Real,
    pub epsilon: Real,
}

/// Total error ε_ζ = 1 − (1 − p_m)·F_ζ(n_ℓ) at photon number n = |α|².
pub fn total_error(encoding: Encoding, n_pairs: usize, eta: Real, n: Real) -> FidelityReport {
    let n_ell = (1.0 - eta) * n;
    let fidelity = fidelity_loss(encoding, n_pairs, n_ell);
    let p_m = p_measurement_error(n_pairs, eta, n);
    FidelityReport {
        encoding,
        n_pairs,
        eta,
        n,
        n_ell,
        fidelity,
        p_m,
        epsilon: 1.0 - (1.0 - p_m) * fidelity,
    }
}

/// Minimize ε over the photon number n by coarse log-grid scan followed by
/// golden-section refinement. Returns (n_opt, ε_opt).
pub fn optimize_n_numeric(
    encoding: Encoding,
    n_pairs: usize,
    eta: Real,
) -> Result<(Real, Real)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta {eta} outside (0, 1)")));
    }
    let eps = |n: Real| total_error(encoding, n_pairs, eta, n).epsilon;
    let (lo, hi) = (0.1f64.ln(), 1e8f64.ln());
    let grid = 400;
    let mut best_i = 0;
    let mut best = Real::INFINITY;
    for i in 0..=grid {
        let x = lo + (hi - lo) * i as Real / grid as Real;
        let e = eps(x.exp());
        if e < best {
            best = e;
            best_i = i;
        }
    }
    let step = (hi - lo) / grid as Real;
    let mut a = lo + step * (best_i.max(1) - 1) as Real;
    let mut b = lo + step * (best_i + 1).min(grid) as Real;
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = eps(c.exp());
    let mut fd = eps(d.exp());
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eps(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = eps(d.exp());
        }
        if (b - a).abs() < 1e-10 {
            break;
        }
    }
    if (b - a).abs() > 1e-6 {
        return Err(Error::Convergence(format!(
            "golden-section interval {:.3e} did not shrink",
            b - a
        )));
    }
    let n_opt = (0.5 * (a + b)).exp();
    Ok((n_opt, eps(n_opt)))
}

/// Closed-form optimal photon number via the Lambert-W function.
pub fn closed_form_n(encoding: Encoding, n_pairs: usize, eta: Real) -> Result<Real> {
    let lam = lambda_param(n_pairs, eta);
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::Regime(format!(
            "Lambda_{{N,eta}} = {lam:.4} outside (0, 1)"
        )));
    }
    let one_minus = 1.0 - eta;
    match encoding {
        Encoding::Phase => Ok(0.5 * lam / one_minus * lambert_w0(2.0 / (PI * lam * lam))?),
        Encoding::Cat => {
            let arg = 2.0 / 3.0 * (1.0 / (PI.sqrt() * lam * lam)).powf(2.0 / 3.0);
            Ok(1.5 * lam / one_minus * lambert_w0(arg)?)
        }
    }
}

/// Closed-form optimized total error ε̃_ζ(y) as a function of y = Λ_{N,η}.
pub fn epsilon_tilde(encoding: Encoding, y: Real) -> Result<Real> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Regime(format!("y = {y} outside (0, 1)")));
    }
    match encoding {
        Encoding::Phase => {
            let w = lambert_w0(2.0 / (PI * y * y))?;
            Ok(y * (1.0 + 0.5 * (1.0 - y) * w))
        }
        Encoding::Cat => {
            let h = 2.0 / 3.0 * (1.0 / (PI.sqrt() * y * y)).powf(2.0 / 3.0);
            let w = lambert_w0(h)?;
            Ok(1.0 - (1.0 - 1.5 * y * y * w) * (1.0 - 9.0 / 8.0 * y * y * w * w))
        }
    }
}

/// Channel transmissions η required to reach `target_fidelity` at the
/// numerically optimal photon number: returns (η_cat, η_phase).
pub fn table_required_eta(target_fidelity: Real, n_pairs: usize) -> Result<(Real, Real)> {
    if !(target_fidelity > 0.0 && target_fidelity < 1.0) {
        return Err(Error::Domain(format!(
            "target fidelity {target_fidelity} outside (0, 1)"
        )));
    }
    let solve = |encoding: Encoding| -> Result<Real> {
        let achieved = |eta: Real| -> Result<Real> {
            let (_, eps) = optimize_n_numeric(encoding, n_pairs, eta)?;
            Ok(1.0 - eps)
        };
        let (mut lo, mut hi) = (0.5, 1.0 - 1e-10);
        if achieved(hi)? < target_fidelity {
            return Err(Error::Convergence(format!(
                "target {target_fidelity} unreachable for {encoding} at N={n_pairs}"
            )));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if achieved(mid)? < target_fidelity {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    Ok((solve(Encoding::Cat)?, solve(Encoding::Phase)?))
}

/// Shift of the imprinted phase φ_j caused by a qubit-frequency variation δω:
/// δφ_j = −2 sin(φ_j/2)·δω/Δ. Bob's variant is obtained with φ_j → −φ_j, the
/// ancilla variant with φ_j → π.
pub fn dephasing_phase_shift(delta_omega: Real, delta: Real, phi_j: Real) -> Real {
    -2.0 * (0.5 * phi_j).sin() * delta_omega / delta
}

/// Parameters of the quasistatic-dephasing model. Detunings are per qubit:
/// `delta_alice[j]`/`delta_bob[j]` for the register qubits and
/// `delta_ancilla = [Δ_{A,a}, Δ_{B,a}]` for the two ancillas.
#[derive(Debug, Clone)]
pub struct DephasingParams {
    pub n_pairs: usize,
    pub alpha2: Real,
    pub t2_star: Real,
    pub t: Real,
    pub delta_alice: Vec<Real>,
    pub delta_bob: Vec<Real>,
    pub delta_ancilla: [Real; 2],
}

impl DephasingParams {
    /// All detunings set to the same magnitude Δ.
    pub fn uniform(n_pairs: usize, alpha2: Real, t2_star: Real, delta: Real, t: Real) -> Self {
        Self {
            n_pairs,
            alpha2,
            t2_star,
            t,
            delta_alice: vec![delta; n_pairs],
            delta_bob: vec![delta; n_pairs],
            delta_ancilla: [delta, delta],
        }
    }

    fn phi_j(&self, j: usize) -> Real {
        (1u64 << j) as Real * wedge_angle(self.n_pairs)
    }

    fn validate(&self) -> Result<()> {
        if self.n_pairs > 8 {
            return Err(Error::Size(format!(
                "n_pairs {} > 8 for the literal subset sum",
                self.n_pairs
            )));
        }
        if self.delta_alice.len() != self.n_pairs || self.delta_bob.len() != self.n_pairs {
            return Err(Error::Size("detuning vectors must have length N".into()));
        }
        Ok(())
    }
}

/// Analytic quasistatic-dephasing fidelity: F_phase = G(t) for the register
/// qubits, F_cat = G(t)·G_a(t) including the two ancillas.
pub fn dephasing_fidelity(encoding: Encoding, params: &DephasingParams) -> Result<Real> {
    params.validate()?;
    let n = params.n_pairs;
    let t2 = params.t2_star;
    let t = params.t;
    // Φ² = Σ_j Σ_X sin²(φ_j/2)/(T₂*Δ_{X,j})²
    let mut phi2 = 0.0;
    for j in 0..n {
        let s2 = (0.5 * params.phi_j(j)).sin().powi(2);
        phi2 += s2 / (t2 * params.delta_alice[j]).powi(2);
        phi2 += s2 / (t2 * params.delta_bob[j]).powi(2);
    }
    // G(t): literal sum over all subsets S of {0..N−1}, per register
    let mut g = (-params.alpha2 * phi2).exp() / (1u64 << (2 * n)) as Real;
    for deltas in [&params.delta_alice, &params.delta_bob] {
        let xj: Vec<Real> = (0..n)
            .map(|j| t - 2.0 * (0.5 * params.phi_j(j)).sin() * params.alpha2 / deltas[j])
            .collect();
        let mut subset_sum = 0.0;
        for mask in 0u64..(1 << n) {
            let mut expo = 0.0;
            for (j, x) in xj.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    expo += x * x / (t2 * t2);
                }
            }
            subset_sum += (-expo).exp();
        }
        g *= subset_sum;
    }
    match encoding {
        Encoding::Phase => Ok(g),
        Encoding::Cat => {
            let phi_a2: Real = params
                .delta_ancilla
                .iter()
                .map(|d| 1.0 / (t2 * d).powi(2))
                .sum();
            let mut ga = (-params.alpha2 * phi_a2).exp() / 16.0;
            for d in params.delta_ancilla {
                let xa = t - 2.0 * params.alpha2 / d;
                ga *= 2.0 + 2.0 * (-xa * xa / (t2 * t2)).exp();
            }
            Ok(g * ga)
        }
    }
}

/// Monte-Carlo oracle for the dephasing fidelity: draws i.i.d. Gaussian
/// qubit-frequency shifts with ⟪δω²⟫ = 2/T₂*² and evaluates the exact overlap
/// with the ideal state per sample. Returns (mean, standard error).
pub fn dephasing_fidelity_mc(
    encoding: Encoding,
    params: &DephasingParams,
    samples: u64,
    stream: RngStream,
) -> Result<(Real, Real)> {
    params.validate()?;
    let n = params.n_pairs;
    let d = 1usize << n;
    let cat = encoding == Encoding::Cat;
    let sigma = (2.0f64).sqrt() / params.t2_star;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let sin_half: Vec<Real> = (0..n).map(|j| (0.5 * params.phi_j(j)).sin()).collect();

    let sums: Vec<(Real, Real)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i).rng();
            let dw_a: Vec<Real> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let dw_b: Vec<Real> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let (dw_aa, dw_ba) = (normal.sample(&mut rng), normal.sample(&mut rng));
            // per-qubit dynamical-phase and light-phase contributions for
            // each bit value (0 or 1)
            let mut overlap = Complex::ZERO;
            let anc_states = if cat { 4usize } else { 1 };
            for m in 0..d {
                for nn in 0..d {
                    let mut omega = 0.0;
                    let mut phase = 0.0;
                    for j in 0..n {
                        let sm = if m >> j & 1 == 0 { 1.0 } else { -1.0 };
                        let sn = if nn >> j & 1 == 0 { 1.0 } else { -1.0 };
                        omega += 0.5 * (sm * dw_a[j] + sn * dw_b[j]);
                        phase -= sin_half[j]
                            * (sm * dw_a[j] / params.delta_alice[j]
                                + sn * dw_b[j] / params.delta_bob[j]);
                    }
                    for anc in 0..anc_states {
                        let (mut om, mut ph) = (omega, phase);
                        if cat {
                            let sa = if anc >> 1 == 0 { 1.0 } else { -1.0 };
                            let sb = if anc & 1 == 0 { 1.0 } else { -1.0 };
                            om += 0.5 * (sa * dw_aa + sb * dw_ba);
                            ph -= sa * dw_aa / params.delta_ancilla[0]
                                + sb * dw_ba / params.delta_ancilla[1];
                        }
                        // ⟨αe^{iθ}|αe^{iθ}e^{iφ}⟩ = exp(|α|²(e^{iφ}−1))
                        let light = (Complex::from_polar(1.0, ph) - Complex::ONE)
                            * params.alpha2;
                        overlap += (Complex::new(0.0, om * params.t) + light).exp();
                    }
                }
            }
            overlap /= (d * d * anc_states) as Real;
            let f = overlap.norm_sqr();
            (f, f * f)
        })
        .collect();
    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let mean = s1 / samples as Real;
    let var = (s2 / samples as Real - mean * mean).max(0.0);
    let stderr = (var / samples as Real).sqrt();
    Ok((mean, stderr))
}
