//! Acceptance gate: one test per published claim, each emitting a single
//! pass/fail line. Every numeric target here is an external anchor (a quoted
//! table value, scaling law, or cross-validation bound), so these tests fail
//! if any formula drifts.

use catbell::analysis::{
    dephasing_fidelity, dephasing_fidelity_mc, epsilon_tilde, fidelity_cat_branch, fidelity_loss,
    lambda_param, optimize_n_numeric, table_required_eta, CatBranch, DephasingParams,
};
use catbell::loss::{kraus_operator_fock, parity_channel_tables, ParityBranch};
use catbell::measurement::{p_measurement_error, sample_heterodyne};
use catbell::numerics::{lambert_w0, RngStream};
use catbell::optics::CoherentLabel;
use catbell::oracle::channel_oracle;
use catbell::protocol::{
    psi_k, reflection_coefficient, run_protocol, tune_chi, Correction, LossMode, ProtocolParams,
};
use catbell::registers::{add_constant, dagger, mat_mul, phase_gate_r, qft};
use catbell::{wedge_angle, Complex, Encoding, Real};
use rand::Rng;

const PI: Real = std::f64::consts::PI;

fn report(name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {:<28} {}  ({detail})",
        name,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{name}: {detail}");
}

/// Least-squares fit of ln(y) = ln(c) + p·ln(x); returns (c, p).
fn power_fit(xs: &[Real], ys: &[Real]) -> (Real, Real) {
    let n = xs.len() as Real;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let p = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let c = ((sy - p * sx) / n).exp();
    (c, p)
}

#[test]
fn criterion_01_required_transmission_table() {
    let rows = [(2usize, 0.987, 0.9992), (3, 0.996, 0.9998), (4, 0.999, 0.9999)];
    let mut worst: Real = 0.0;
    for (n_pairs, eta_cat, eta_phase) in rows {
        let (c, p) = table_required_eta(0.99, n_pairs).unwrap();
        worst = worst.max((c - eta_cat).abs()).max((p - eta_phase).abs());
    }
    report(
        "required-transmission-table",
        worst < 1e-3,
        &format!("max |Δη| = {worst:.2e}, tolerance 1e-3"),
    );
}

#[test]
fn criterion_02_optimal_fidelity_quotes() {
    let quotes = [
        (Encoding::Cat, 2usize, 0.99),
        (Encoding::Phase, 2, 0.925),
        (Encoding::Cat, 3, 0.965),
        (Encoding::Phase, 3, 0.832),
    ];
    let mut worst: Real = 0.0;
    for (encoding, n_pairs, quoted) in quotes {
        let (_, eps) = optimize_n_numeric(encoding, n_pairs, 0.99).unwrap();
        worst = worst.max(((1.0 - eps) - quoted).abs());
    }
    report(
        "optimal-fidelity-quotes",
        worst < 0.005,
        &format!("max |ΔF| = {worst:.2e}, tolerance 5e-3"),
    );
}

#[test]
fn criterion_03_closed_form_tracks_numeric() {
    let n_pairs = 2;
    let points = 20;
    let (lo, hi) = (1e-4f64.ln(), 3e-2f64.ln());
    let mut worst_rel: Real = 0.0;
    let mut ordering = true;
    for i in 0..points {
        let one_minus_eta = (lo + (hi - lo) * i as Real / (points - 1) as Real).exp();
        let eta = 1.0 - one_minus_eta;
        let lam = lambda_param(n_pairs, eta);
        let mut eps = [0.0; 2];
        for (slot, encoding) in [(0, Encoding::Cat), (1, Encoding::Phase)] {
            let (_, eps_num) = optimize_n_numeric(encoding, n_pairs, eta).unwrap();
            let eps_cf = epsilon_tilde(encoding, lam).unwrap();
            worst_rel = worst_rel.max((eps_cf / eps_num - 1.0).abs());
            eps[slot] = eps_num;
        }
        ordering &= eps[0] < eps[1];
    }
    report(
        "closed-form-vs-numeric",
        worst_rel < 0.15 && ordering,
        &format!("max relative gap {worst_rel:.3}, cat<phase everywhere: {ordering}"),
    );
}

#[test]
fn criterion_04_loss_scaling_laws() {
    let n_pairs = 2;
    let xs: Vec<Real> = (0..20)
        .map(|i| (1e-4f64.ln() + (1e-2f64.ln() - 1e-4f64.ln()) * i as Real / 19.0).exp())
        .collect();
    let inf_phase: Vec<Real> = xs
        .iter()
        .map(|&n| 1.0 - fidelity_loss(Encoding::Phase, n_pairs, n))
        .collect();
    let inf_plus: Vec<Real> = xs
        .iter()
        .map(|&n| 1.0 - fidelity_cat_branch(n_pairs, n, CatBranch::XxPlus))
        .collect();
    let inf_minus: Vec<Real> = xs
        .iter()
        .map(|&n| 1.0 - fidelity_cat_branch(n_pairs, n, CatBranch::XxMinus))
        .collect();
    let (c_p, e_p) = power_fit(&xs, &inf_phase);
    let (c_plus, e_plus) = power_fit(&xs, &inf_plus);
    let (c_minus, e_minus) = power_fit(&xs, &inf_minus);
    let ratio = inf_plus[0] / inf_minus[0];
    let pass = (e_p - 1.0).abs() < 0.02
        && (c_p - 1.0).abs() < 0.02
        && (e_plus - 2.0).abs() < 0.02
        && (c_plus - 0.5).abs() < 0.02
        && (e_minus - 2.0).abs() < 0.02
        && (c_minus - 1.0 / 6.0).abs() < 0.01
        && (ratio - 3.0).abs() < 0.1;
    report(
        "loss-scaling-laws",
        pass,
        &format!(
            "phase {c_p:.3}·n^{e_p:.3}, cat+ {c_plus:.3}·n^{e_plus:.3}, \
             cat− {c_minus:.4}·n^{e_minus:.3}, branch ratio {ratio:.3}"
        ),
    );
}

#[test]
fn criterion_05_fock_channel_oracle() {
    let mut worst: Real = 0.0;
    for alpha in [0.8, 1.5, 2.5] {
        for eta in [0.8, 0.95] {
            for n_pairs in 1..=2 {
                worst = worst.max(channel_oracle(alpha, eta, n_pairs).unwrap().worst());
            }
        }
    }
    report(
        "fock-channel-oracle",
        worst < 1e-6,
        &format!("max deviation {worst:.2e}, tolerance 1e-6"),
    );
}

#[test]
fn criterion_06_end_to_end_correction() {
    let mut params = ProtocolParams::new(2, 16.0, 1.0, Encoding::Cat, 2024).unwrap();
    params.orthogonal_idealization = true;
    let records = run_protocol(&params, LossMode::SinglePhoton, 1000).unwrap();
    let heralded = records
        .iter()
        .all(|r| r.parity_lambda == Some(-1) && r.correction_applied == Correction::ROnAlice);
    let min_f = records.iter().map(|r| r.fidelity).fold(Real::INFINITY, Real::min);

    // with the correction disabled the fidelity must equal |⟨Ψ_k|R†_A|Ψ_k⟩|²
    let d = 4usize;
    let psi = psi_k(2, 0);
    let mut expected = Complex::ZERO;
    for m in 0..d {
        for n in 0..d {
            let i = m * d + n;
            expected += psi[i].conj() * psi[i] * Complex::from_polar(1.0, m as Real * PI / 2.0);
        }
    }
    let expected_f = expected.norm_sqr();
    params.disable_correction = true;
    params.seed = 2025;
    let uncorrected = run_protocol(&params, LossMode::SinglePhoton, 1000).unwrap();
    let mean: Real =
        uncorrected.iter().map(|r| r.fidelity).sum::<Real>() / uncorrected.len() as Real;
    let var: Real = uncorrected
        .iter()
        .map(|r| (r.fidelity - mean).powi(2))
        .sum::<Real>()
        / uncorrected.len() as Real;
    let stderr = (var / uncorrected.len() as Real).sqrt();
    let uncorrected_ok = (mean - expected_f).abs() <= (5.0 * stderr).max(1e-8);

    report(
        "end-to-end-correction",
        heralded && min_f >= 1.0 - 1e-6 && uncorrected_ok,
        &format!(
            "heralded 100%: {heralded}, min corrected fidelity {min_f:.9}, \
             uncorrected mean {mean:.3e} vs |⟨Ψ|R†|Ψ⟩|² = {expected_f:.3e}"
        ),
    );
}

#[test]
fn criterion_07_measurement_error_law() {
    let mut rng = RngStream::new(7, 0).rng();
    let shots = 1_000_000u64;
    let mut worst_sigmas: Real = 0.0;
    for _ in 0..10 {
        // N ≥ 2 so both wedge boundaries are distinct half-planes; at N = 1
        // the wedge degenerates to a half-plane and the two-boundary erfc
        // expression overcounts by exactly 2
        let n_pairs: usize = rng.random_range(2..=4);
        let eta: Real = rng.random_range(0.8..0.999);
        // keep the expected error rate resolvable but rare: α_eff ∈ [2.1, 3.0]
        let alpha_eff: Real = rng.random_range(2.1..3.0);
        let sin = (PI / (1u64 << n_pairs) as Real).sin();
        let n_bar = (alpha_eff / sin).powi(2) / eta;
        let labels = [(
            CoherentLabel::new(Complex::new((eta * n_bar).sqrt(), 0.0)).unwrap(),
            1.0,
        )];
        let mut errors = 0u64;
        for _ in 0..shots {
            if sample_heterodyne(&labels, n_pairs, &mut rng).decoded_k != 0 {
                errors += 1;
            }
        }
        let p = p_measurement_error(n_pairs, eta, n_bar);
        let sigma = (shots as Real * p * (1.0 - p)).sqrt();
        worst_sigmas = worst_sigmas.max((errors as Real - shots as Real * p).abs() / sigma);
    }
    report(
        "measurement-error-law",
        worst_sigmas < 5.0,
        &format!("worst deviation {worst_sigmas:.2}σ over 10 tuples, tolerance 5σ"),
    );
}

#[test]
fn criterion_08_dephasing_oracle() {
    let kappa = 2.0 * PI * 50e6;
    let delta = 2.0 * PI * 2.5e9;
    let t2_star = 10e-6;
    let n_pairs = 2;
    let mut worst_sigmas: Real = 0.0;
    for encoding in [Encoding::Phase, Encoding::Cat] {
        let n_tot = match encoding {
            Encoding::Cat => 2.0 * (n_pairs as Real + 1.0),
            Encoding::Phase => 2.0 * n_pairs as Real,
        };
        let p = DephasingParams::uniform(n_pairs, 25.0, t2_star, delta, n_tot / kappa);
        let analytic = dephasing_fidelity(encoding, &p).unwrap();
        let (mc, stderr) =
            dephasing_fidelity_mc(encoding, &p, 100_000, RngStream::new(8, 0)).unwrap();
        worst_sigmas = worst_sigmas.max((mc - analytic).abs() / stderr.max(1e-12));
    }
    // quoted validity-regime magnitudes
    let inv_delta_t2 = 1.0 / (delta * t2_star);
    let regime = |n: usize, n_tot: Real| n_tot * (n as Real).sqrt() / (kappa * t2_star);
    let mut regime_ok = inv_delta_t2 < 1e-5;
    for n in 1..5 {
        regime_ok &= regime(n, 2.0 * (n as Real + 1.0)) < 0.01; // cat
    }
    for n in 1..6 {
        regime_ok &= regime(n, 2.0 * n as Real) < 0.01; // phase
    }
    report(
        "dephasing-oracle",
        worst_sigmas < 5.0 && regime_ok,
        &format!(
            "MC-vs-analytic {worst_sigmas:.2}σ; (ΔT₂*)⁻¹ = {inv_delta_t2:.1e}, \
             regime inequalities hold: {regime_ok}"
        ),
    );
}

#[test]
fn criterion_09_structural_identities() {
    // QFT-conjugated phase gate equals the direct modular adder
    let mut adder_dev: Real = 0.0;
    for n_qubits in 1..=4usize {
        let u = qft(n_qubits).unwrap();
        for k in 0..(1i64 << n_qubits) {
            let composite = mat_mul(&dagger(&u), &mat_mul(&phase_gate_r(k, n_qubits), &u));
            let direct = add_constant(k, n_qubits);
            for i in 0..(1usize << n_qubits) {
                for j in 0..(1usize << n_qubits) {
                    adder_dev = adder_dev.max((composite[(i, j)] - direct[(i, j)]).norm());
                }
            }
        }
    }

    // Kraus completeness at finite truncation
    let cutoff = 40;
    let mut total = ndarray::Array2::from_elem((cutoff + 1, cutoff + 1), Complex::ZERO);
    for k in 0..=cutoff {
        let m = kraus_operator_fock(k, 0.85, cutoff).unwrap();
        total = total + mat_mul(&dagger(&m), &m);
    }
    let mut kraus_dev: Real = 0.0;
    for i in 0..=cutoff {
        for j in 0..=cutoff {
            let expect = if i == j { Complex::ONE } else { Complex::ZERO };
            kraus_dev = kraus_dev.max((total[(i, j)] - expect).norm());
        }
    }

    // channel-table normalizations
    let mut table_dev: Real = 0.0;
    for (alpha, eta) in [(0.8, 0.8), (2.0, 0.95), (4.0, 0.99)] {
        let t = parity_channel_tables(alpha, eta).unwrap();
        let trace = t.branch_probability(ParityBranch::Even)
            + t.branch_probability(ParityBranch::Odd);
        table_dev = table_dev
            .max((trace - 1.0).abs())
            .max((t.d_plus * t.d_plus + t.d_minus * t.d_minus - 1.0).abs());
    }

    // Lambert-W defining residual
    let mut w_dev: Real = 0.0;
    for i in 0..200 {
        let x = 10f64.powf(-4.0 + 10.0 * i as Real / 199.0);
        let w = lambert_w0(x).unwrap();
        w_dev = w_dev.max((w * w.exp() - x).abs() / x.max(1.0));
    }

    // combinatorial identities for N ≤ 8
    let mut comb_dev: Real = 0.0;
    let mut rng = RngStream::new(9, 0).rng();
    for n in 1..=8usize {
        let d = 1usize << n;
        let mut p: Vec<Real> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        p[0] = 1.0;
        let pf = |k: i64| p[k.rem_euclid(d as i64) as usize];
        let mut brute = 0.0;
        for m in 0..d as i64 {
            for m2 in 0..d as i64 {
                brute += pf(m - m2);
            }
        }
        let mut reduced = d as Real;
        for j in 1..d as i64 {
            reduced += (d as i64 - j) as Real * (pf(j) + pf(-j));
        }
        comb_dev = comb_dev.max((brute - reduced).abs() / d as Real);

        let x: Vec<Real> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut lhs = 0.0;
        for mask in 0u64..(1 << n) {
            for (j, xv) in x.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    lhs += xv;
                }
            }
        }
        let rhs = (1u64 << (n - 1)) as Real * x.iter().sum::<Real>();
        comb_dev = comb_dev.max((lhs - rhs).abs() / (1u64 << n) as Real);
    }

    let pass = adder_dev < 1e-10
        && kraus_dev < 1e-8
        && table_dev < 1e-12
        && w_dev < 1e-12
        && comb_dev < 1e-12;
    report(
        "structural-identities",
        pass,
        &format!(
            "adder {adder_dev:.1e}, kraus {kraus_dev:.1e}, tables {table_dev:.1e}, \
             lambert {w_dev:.1e}, combinatorial {comb_dev:.1e}"
        ),
    );
}

#[test]
fn criterion_10_reflection_physics() {
    let kappa = 2.0 * PI * 50e6;
    let mut rng = RngStream::new(10, 0).rng();

    // lossless reflection is unimodular
    let mut unimod_dev: Real = 0.0;
    for _ in 0..200 {
        let chi: Real = rng.random_range(0.0..kappa);
        let omega: Real = rng.random_range(-kappa..kappa);
        let s: u8 = rng.random_range(0..2);
        let r = reflection_coefficient(omega, s, chi, kappa, 0.0);
        unimod_dev = unimod_dev.max((r.norm() - 1.0).abs());
    }

    // tuned χ reproduces the target conditional phase
    let mut phase_dev: Real = 0.0;
    for _ in 0..50 {
        let phi_j: Real = rng.random_range(1e-3..PI);
        let chi = tune_chi(phi_j, kappa).unwrap();
        let t0 = reflection_coefficient(0.0, 0, chi, kappa, 0.0).arg();
        let t1 = reflection_coefficient(0.0, 1, chi, kappa, 0.0).arg();
        phase_dev = phase_dev.max(((t1 - t0).rem_euclid(2.0 * PI) - phi_j).abs());
    }

    // internal-loss expansions: exponent fits of the residual scalings
    let chi = 0.3 * kappa;
    let denom = kappa * kappa + 4.0 * chi * chi;
    let xs: Vec<Real> = (0..12).map(|i| 1e-3 * 1.5f64.powi(i)).collect();
    // |R(0)|² − (1 − 4κ²x/denom) scales as x²
    let amp_res: Vec<Real> = xs
        .iter()
        .map(|&x| {
            let r2 = reflection_coefficient(0.0, 0, chi, kappa, x * kappa).norm_sqr();
            (r2 - (1.0 - 4.0 * kappa * kappa * x / denom)).abs()
        })
        .collect();
    let (_, amp_exp) = power_fit(&xs, &amp_res);
    // θ(x) − θ(0) + 4(−1)^s χκ³x²/denom² leaves an O(x⁴) residual
    let theta0 = reflection_coefficient(0.0, 0, chi, kappa, 0.0).arg();
    let phase_res: Vec<Real> = xs
        .iter()
        .map(|&x| {
            let theta = reflection_coefficient(0.0, 0, chi, kappa, x * kappa).arg();
            (theta - theta0 + 4.0 * chi * kappa.powi(3) * x * x / (denom * denom)).abs()
        })
        .collect();
    let (_, phase_exp) = power_fit(&xs, &phase_res);

    let pass = unimod_dev < 1e-14
        && phase_dev < 1e-10
        && (amp_exp - 2.0).abs() < 0.2
        && (phase_exp - 4.0).abs() < 0.2;
    report(
        "reflection-physics",
        pass,
        &format!(
            "|R|−1 max {unimod_dev:.1e}, φ_j tuning max {phase_dev:.1e}, \
             amplitude residual ∝ x^{amp_exp:.2}, phase residual ∝ x^{phase_exp:.2}"
        ),
    );
}
