//! Brute-force Fock-space oracles. Everything here re-derives channel
//! quantities from nothing but the Kraus operators and truncated Fock vectors,
//! so agreement with the closed-form tables is a genuine cross-check rather
//! than the same algebra evaluated twice.

use crate::analysis::{
    dephasing_fidelity, dephasing_fidelity_mc, fidelity_cat_branch, lambda_param,
    optimize_n_numeric, closed_form_n, table_required_eta, CatBranch, DephasingParams,
};
use crate::loss::{
    dephasing_factor_phase, kraus_operator_fock, parity_channel_tables, ParityBranch,
};
use crate::measurement::{p_measurement_error, sample_heterodyne};
use crate::numerics::RngStream;
use crate::optics::{
    cat_to_fock, coherent_to_fock, default_cutoff, CatLabel, CoherentLabel, FockVector, Parity,
};
use crate::protocol::{run_protocol, Correction, LossMode, ProtocolParams};
use crate::{wedge_angle, Complex, Encoding, Real, Result};
use ndarray::{Array1, Array2};

fn apply_op(op: &Array2<Complex>, v: &FockVector) -> FockVector {
    let out = op.dot(&Array1::from(v.amplitudes.clone()));
    FockVector {
        cutoff: v.cutoff,
        amplitudes: out.to_vec(),
    }
}

/// Maximum deviations between the brute-force Fock computation of the
/// parity-resolved loss channel and the closed-form tables, at one (α, η, N).
#[derive(Debug, Clone)]
pub struct ChannelOracleReport {
    pub alpha: Real,
    pub eta: Real,
    pub n_pairs: usize,
    /// How far M_k|C^σ_γ⟩ is from a pure cat state of flipped-k parity at √η γ.
    pub structure_residual: Real,
    /// p^λ_{σσ'} tables.
    pub p_deviation: Real,
    /// Ω^λ(Δm) dephasing factors.
    pub omega_deviation: Real,
    /// D± decomposition coefficients.
    pub d_deviation: Real,
    /// Branch fidelities F^±_cat against the reduced single-sum form.
    pub branch_fidelity_deviation: Real,
    /// Phase-encoding loss-dephasing factor e^{Z_{mm'}}.
    pub phase_factor_deviation: Real,
}

impl ChannelOracleReport {
    pub fn worst(&self) -> Real {
        self.structure_residual
            .max(self.p_deviation)
            .max(self.omega_deviation)
            .max(self.d_deviation)
            .max(self.branch_fidelity_deviation)
            .max(self.phase_factor_deviation)
    }
}

/// Run the full Fock-space oracle for the loss channel at (α, η, N).
///
/// The channel is applied Kraus operator by Kraus operator to the exact
/// (truncated) Fock representation of every branch of the entangled state,
/// and each closed-form quantity is re-extracted from the resulting inner
/// products.
pub fn channel_oracle(alpha: Real, eta: Real, n_pairs: usize) -> Result<ChannelOracleReport> {
    let a2 = alpha * alpha;
    let phi = wedge_angle(n_pairs);
    let d = 1usize << n_pairs;
    let cutoff = default_cutoff(a2) + 5;
    let kraus: Vec<Array2<Complex>> = (0..=cutoff)
        .map(|k| kraus_operator_fock(k, eta, cutoff))
        .collect::<Result<_>>()?;
    let gamma = |m: usize| Complex::from_polar(alpha, m as Real * phi);

    // coeff[σ][m][k] = ⟨C^{σ(−1)^k}_{√ηγ_m} | M_k | C^σ_{γ_m}⟩, with the
    // residual quantifying how much of M_k|C^σ⟩ lies outside that single cat
    let mut coeff = vec![vec![vec![Complex::ZERO; cutoff + 1]; d]; 2];
    let mut structure_residual: Real = 0.0;
    let parities = [Parity::Even, Parity::Odd];
    for (si, &sigma) in parities.iter().enumerate() {
        for m in 0..d {
            let src = cat_to_fock(&CatLabel::new(gamma(m), sigma)?, cutoff)?;
            for (k, mk) in kraus.iter().enumerate() {
                let out = apply_op(mk, &src);
                let target_parity = if k % 2 == 0 {
                    sigma
                } else {
                    match sigma {
                        Parity::Even => Parity::Odd,
                        Parity::Odd => Parity::Even,
                    }
                };
                let target = cat_to_fock(
                    &CatLabel::new(eta.sqrt() * gamma(m), target_parity)?,
                    cutoff,
                )?;
                let c = target.inner(&out);
                coeff[si][m][k] = c;
                let residual: Real = out
                    .amplitudes
                    .iter()
                    .zip(&target.amplitudes)
                    .map(|(a, t)| (a - c * t).norm_sqr())
                    .sum();
                structure_residual = structure_residual.max(residual.sqrt());
            }
        }
    }

    // q^λ_{σσ'}(m, m') = Σ_{k∈λ} coeff_σ(m,k)·coeff_{σ'}(m',k)*
    let q = |lam: ParityBranch, si: usize, sj: usize, m: usize, m2: usize| -> Complex {
        (0..=cutoff)
            .filter(|k| k % 2 == lam.index())
            .map(|k| coeff[si][m][k] * coeff[sj][m2][k].conj())
            .sum()
    };

    let tables = parity_channel_tables(alpha, eta)?;

    // p^λ_{σσ'} = (N^σ_α N^σ'_α/4) q^λ_{σσ'}(m, m), independent of m
    let norm_a = [
        CatLabel::new(Complex::new(alpha, 0.0), Parity::Even)?.norm_factor(),
        CatLabel::new(Complex::new(alpha, 0.0), Parity::Odd)?.norm_factor(),
    ];
    let mut p_deviation: Real = 0.0;
    for lam in [ParityBranch::Even, ParityBranch::Odd] {
        for si in 0..2 {
            for sj in 0..2 {
                for m in 0..d {
                    let num = 0.25 * norm_a[si] * norm_a[sj] * q(lam, si, sj, m, m);
                    let reference = tables.p[lam.index()][si][sj];
                    p_deviation = p_deviation
                        .max((num.re - reference).abs())
                        .max(num.im.abs());
                }
            }
        }
    }

    // Ω^λ(Δm) = q^λ_{σσ}(m, m') / q^λ_{σσ}(m, m)
    let mut omega_deviation: Real = 0.0;
    for lam in [ParityBranch::Even, ParityBranch::Odd] {
        for si in 0..2 {
            for m in 0..d {
                for m2 in 0..d {
                    let num = q(lam, si, si, m, m2) / q(lam, si, si, 0, 0);
                    let reference = tables.omega(lam, m as i64 - m2 as i64, phi);
                    omega_deviation = omega_deviation.max((num - reference).norm());
                }
            }
        }
    }

    // D± = (⟨C⁺_{√ηα}|√ηα⟩ ± ⟨C⁻_{√ηα}|√ηα⟩)/√2
    let att = coherent_to_fock(
        &CoherentLabel::new(Complex::new(eta.sqrt() * alpha, 0.0))?,
        cutoff,
    );
    let even = cat_to_fock(
        &CatLabel::new(Complex::new(eta.sqrt() * alpha, 0.0), Parity::Even)?,
        cutoff,
    )?;
    let odd = cat_to_fock(
        &CatLabel::new(Complex::new(eta.sqrt() * alpha, 0.0), Parity::Odd)?,
        cutoff,
    )?;
    let ce = even.inner(&att);
    let co = odd.inner(&att);
    let d_plus_num = (ce + co).re / (2.0f64).sqrt();
    let d_minus_num = (ce - co).re / (2.0f64).sqrt();
    let d_deviation = (d_plus_num - tables.d_plus)
        .abs()
        .max((d_minus_num - tables.d_minus).abs())
        .max((ce + co).im.abs());

    // Branch fidelities F^± from the numeric Ω and D⁺ against the reduced
    // single-sum closed form (which carries (D⁺)² = 1 by convention)
    let mut branch_fidelity_deviation: Real = 0.0;
    for (lam, branch) in [
        (ParityBranch::Even, CatBranch::XxPlus),
        (ParityBranch::Odd, CatBranch::XxMinus),
    ] {
        let mut sum = Complex::ZERO;
        for m in 0..d {
            for m2 in 0..d {
                let mut term = q(lam, 0, 0, m, m2) / q(lam, 0, 0, 0, 0);
                if lam == ParityBranch::Odd {
                    // the R correction contributes e^{−i(m−m')φ} in this branch
                    term *= Complex::from_polar(1.0, -(m as Real - m2 as Real) * phi);
                }
                sum += term;
            }
        }
        let f_num = d_plus_num * d_plus_num * sum.re / (d * d) as Real;
        let f_ref =
            tables.d_plus * tables.d_plus * fidelity_cat_branch(n_pairs, tables.n_ell, branch);
        branch_fidelity_deviation = branch_fidelity_deviation
            .max((f_num - f_ref).abs())
            .max(sum.im.abs() / (d * d) as Real);
    }

    // Phase encoding: Σ_k ⟨√ηγ_m|M_k|γ_m⟩⟨√ηγ_m'|M_k|γ_m'⟩* = e^{Z_{mm'}}
    let mut phase_factor_deviation: Real = 0.0;
    let coh: Vec<FockVector> = (0..d)
        .map(|m| coherent_to_fock(&CoherentLabel::new(gamma(m)).unwrap(), cutoff))
        .collect();
    let coh_att: Vec<FockVector> = (0..d)
        .map(|m| coherent_to_fock(&CoherentLabel::new(eta.sqrt() * gamma(m)).unwrap(), cutoff))
        .collect();
    for m in 0..d {
        for m2 in 0..d {
            let mut z = Complex::ZERO;
            for mk in &kraus {
                let cm = coh_att[m].inner(&apply_op(mk, &coh[m]));
                let cm2 = coh_att[m2].inner(&apply_op(mk, &coh[m2]));
                z += cm * cm2.conj();
            }
            let reference = dephasing_factor_phase(tables.n_ell, m as i64 - m2 as i64, phi);
            phase_factor_deviation = phase_factor_deviation.max((z - reference).norm());
        }
    }

    Ok(ChannelOracleReport {
        alpha,
        eta,
        n_pairs,
        structure_residual,
        p_deviation,
        omega_deviation,
        d_deviation,
        branch_fidelity_deviation,
        phase_factor_deviation,
    })
}

/// One named validation check with its measured deviation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub deviation: Real,
    pub tolerance: Real,
    pub passed: bool,
}

fn check(name: &str, deviation: Real, tolerance: Real) -> ValidationCheck {
    // test hook: an additive perturbation forces failures end to end
    let perturb = std::env::var("CATBELL_PERTURB")
        .ok()
        .and_then(|v| v.parse::<Real>().ok())
        .unwrap_or(0.0);
    let deviation = deviation + perturb;
    ValidationCheck {
        name: name.to_string(),
        deviation,
        tolerance,
        passed: deviation.is_finite() && deviation <= tolerance,
    }
}

/// Run the cross-validation suite. `quick` trims grids and shot counts to a
/// few seconds; the full suite repeats every published-number check.
pub fn run_validation_suite(quick: bool, seed: u64) -> Result<Vec<ValidationCheck>> {
    let mut checks = Vec::new();

    // 1. Fock-space oracle over the (α, η) grid
    let grid: &[(Real, Real)] = if quick {
        &[(0.8, 0.8)]
    } else {
        &[(0.8, 0.8), (0.8, 0.95), (1.5, 0.8), (1.5, 0.95), (2.5, 0.8), (2.5, 0.95)]
    };
    let mut worst: Real = 0.0;
    for &(alpha, eta) in grid {
        for n_pairs in 1..=2 {
            worst = worst.max(channel_oracle(alpha, eta, n_pairs)?.worst());
        }
    }
    checks.push(check("fock-channel-oracle", worst, 1e-6));

    // 2. Lambert-W closed forms satisfy their defining transcendental equations
    let mut residual: Real = 0.0;
    for (n_pairs, eta) in [(2usize, 0.99), (3, 0.995), (4, 0.999)] {
        let lam = lambda_param(n_pairs, eta);
        let s2 = (std::f64::consts::PI / (1u64 << n_pairs) as Real).sin().powi(2);
        let x = eta * closed_form_n(Encoding::Phase, n_pairs, eta)? * s2;
        residual = residual.max(((-x).exp() / (std::f64::consts::PI * x).sqrt() - lam).abs());
        let x = eta * closed_form_n(Encoding::Cat, n_pairs, eta)? * s2;
        residual = residual.max(
            ((-x).exp() / (std::f64::consts::PI * x).sqrt() - lam * lam * x).abs(),
        );
    }
    checks.push(check("lambert-w-residual", residual, 1e-8));

    // 3. closed-form optimum tracks the numeric optimizer
    let mut dev: Real = 0.0;
    for encoding in [Encoding::Phase, Encoding::Cat] {
        let (n_num, _) = optimize_n_numeric(encoding, 2, 0.995)?;
        let n_cf = closed_form_n(encoding, 2, 0.995)?;
        dev = dev.max((n_cf / n_num - 1.0).abs());
    }
    checks.push(check("closed-form-optimum", dev, 0.1));

    // 4. required-η table
    let rows: &[(usize, Real, Real)] = if quick {
        &[(2, 0.987, 0.9992)]
    } else {
        &[(2, 0.987, 0.9992), (3, 0.996, 0.9998), (4, 0.999, 0.9999)]
    };
    let mut dev: Real = 0.0;
    for &(n_pairs, eta_cat, eta_phase) in rows {
        let (c, p) = table_required_eta(0.99, n_pairs)?;
        dev = dev.max((c - eta_cat).abs()).max((p - eta_phase).abs());
    }
    checks.push(check("required-eta-table", dev, 1e-3));

    // 5. lossless protocol reaches the target exactly
    let shots = if quick { 20 } else { 100 };
    let mut dev: Real = 0.0;
    for encoding in [Encoding::Phase, Encoding::Cat] {
        let mut params = ProtocolParams::new(2, 16.0, 1.0, encoding, seed)?;
        params.orthogonal_idealization = true;
        for r in run_protocol(&params, LossMode::None, shots)? {
            dev = dev.max(1.0 - r.fidelity);
        }
    }
    checks.push(check("protocol-lossless", dev, 1e-9));

    // 6. single-photon loss is heralded and corrected in the cat encoding
    let mut params = ProtocolParams::new(2, 16.0, 1.0, Encoding::Cat, seed ^ 1)?;
    params.orthogonal_idealization = true;
    let records = run_protocol(&params, LossMode::SinglePhoton, if quick { 100 } else { 1000 })?;
    let mut dev: Real = 0.0;
    for r in &records {
        if r.parity_lambda != Some(-1) || r.correction_applied != Correction::ROnAlice {
            dev = dev.max(1.0);
        }
        dev = dev.max(1.0 - r.fidelity);
    }
    checks.push(check("loss-heralding-correction", dev, 1e-6));

    // 7. heterodyne decoder error rate against erfc(√(ηn) sin(π/2^N))
    let shots = if quick { 100_000u64 } else { 1_000_000 };
    let n_pairs = 2;
    let eta: Real = 0.95;
    let n_bar = 16.0;
    let amp = (eta * n_bar).sqrt();
    let labels = [(CoherentLabel::new(Complex::new(amp, 0.0))?, 1.0)];
    let mut rng = RngStream::new(seed, 0xbe11).rng();
    let mut errors = 0u64;
    for _ in 0..shots {
        if sample_heterodyne(&labels, n_pairs, &mut rng).decoded_k != 0 {
            errors += 1;
        }
    }
    let p = p_measurement_error(n_pairs, eta, n_bar);
    let sigma = (shots as Real * p * (1.0 - p)).sqrt();
    checks.push(check(
        "heterodyne-error-rate",
        (errors as Real - shots as Real * p).abs() / sigma,
        5.0,
    ));

    // 8. quasistatic-dephasing Monte Carlo against the analytic fidelity
    let kappa = 2.0 * std::f64::consts::PI * 50e6;
    let delta = 2.0 * std::f64::consts::PI * 2.5e9;
    let mut dev: Real = 0.0;
    for encoding in [Encoding::Phase, Encoding::Cat] {
        let n_pairs = 2;
        let n_tot = match encoding {
            Encoding::Cat => 2.0 * (n_pairs as Real + 1.0),
            Encoding::Phase => 2.0 * n_pairs as Real,
        };
        let p = DephasingParams::uniform(n_pairs, 25.0, 10e-6, delta, n_tot / kappa);
        let analytic = dephasing_fidelity(encoding, &p)?;
        let samples = if quick { 5_000 } else { 100_000 };
        let (mc, stderr) =
            dephasing_fidelity_mc(encoding, &p, samples, RngStream::new(seed, 0xdeaf))?;
        dev = dev.max((mc - analytic).abs() / stderr.max(1e-12));
    }
    checks.push(check("dephasing-monte-carlo", dev, 5.0));

    Ok(checks)
}
