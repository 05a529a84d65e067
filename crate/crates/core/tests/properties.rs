//! Randomized invariant checks over the public API.

use catbell::analysis::{
    dephasing_fidelity, epsilon_tilde, fidelity_cat_branch, fidelity_loss, CatBranch,
    DephasingParams,
};
use catbell::loss::{parity_channel_tables, ParityBranch};
use catbell::measurement::decode_wedge;
use catbell::numerics::lambert_w0;
use catbell::optics::{coherent_overlap, CoherentLabel};
use catbell::protocol::{run_protocol, LossMode, ProtocolParams};
use catbell::registers::add_constant;
use catbell::{wedge_angle, Complex, Encoding, Real};
use proptest::prelude::*;

proptest! {
    #[test]
    fn coherent_overlap_magnitude(
        ar in -3.0..3.0f64, ai in -3.0..3.0f64,
        br in -3.0..3.0f64, bi in -3.0..3.0f64,
    ) {
        let a = CoherentLabel::new(Complex::new(ar, ai)).unwrap();
        let b = CoherentLabel::new(Complex::new(br, bi)).unwrap();
        let ov = coherent_overlap(&a, &b);
        // |⟨a|b⟩| = e^{−|a−b|²/2}
        let expect = (-0.5 * (a.amplitude - b.amplitude).norm_sqr()).exp();
        prop_assert!((ov.norm() - expect).abs() < 1e-12);
        prop_assert!(ov.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn wedge_decode_rotation_covariant(
        br in -5.0..5.0f64, bi in -5.0..5.0f64,
        n_pairs in 1usize..=5, j in 0usize..32,
    ) {
        let beta = Complex::new(br, bi);
        prop_assume!(beta.norm() > 1e-2);
        let d = 1usize << n_pairs;
        let phi = wedge_angle(n_pairs);
        // skip measure-zero boundary neighborhoods where rounding may differ
        let frac = (beta.arg() / phi).rem_euclid(1.0);
        prop_assume!((frac - 0.5).abs() > 1e-6);
        let k0 = decode_wedge(beta, n_pairs);
        let k1 = decode_wedge(beta * Complex::from_polar(1.0, (j % d) as Real * phi), n_pairs);
        prop_assert_eq!(k1, (k0 + j % d) % d);
    }

    #[test]
    fn channel_tables_invariants(alpha in 0.1..5.0f64, eta in 0.05..1.0f64) {
        let t = parity_channel_tables(alpha, eta).unwrap();
        let trace = t.branch_probability(ParityBranch::Even)
            + t.branch_probability(ParityBranch::Odd);
        prop_assert!((trace - 1.0).abs() < 1e-12);
        prop_assert!((t.d_plus * t.d_plus + t.d_minus * t.d_minus - 1.0).abs() < 1e-12);
        for branch in [ParityBranch::Even, ParityBranch::Odd] {
            prop_assert!(t.branch_probability(branch) >= -1e-15);
            for dm in -8..=8i64 {
                prop_assert!(t.omega(branch, dm, wedge_angle(3)).norm() <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn loss_fidelities_bounded_and_ordered(
        n_pairs in 2usize..=5, n_ell in 0.0..3.0f64,
    ) {
        for enc in [Encoding::Phase, Encoding::Cat] {
            let f = fidelity_loss(enc, n_pairs, n_ell);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        }
        // heralding keeps the cat encoding above the phase encoding
        prop_assert!(
            fidelity_loss(Encoding::Cat, n_pairs, n_ell)
                >= fidelity_loss(Encoding::Phase, n_pairs, n_ell) - 1e-12
        );
        for branch in [CatBranch::XxPlus, CatBranch::XxMinus] {
            let f = fidelity_cat_branch(n_pairs, n_ell, branch);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        }
    }

    #[test]
    fn epsilon_tilde_ordering(y in 1e-4..0.5f64) {
        let cat = epsilon_tilde(Encoding::Cat, y).unwrap();
        let phase = epsilon_tilde(Encoding::Phase, y).unwrap();
        prop_assert!(cat > 0.0 && phase > 0.0);
        prop_assert!(cat < phase);
    }

    #[test]
    fn adder_is_permutation(n_qubits in 1usize..=5, k in -40i64..40) {
        let u = add_constant(k, n_qubits);
        let dim = 1usize << n_qubits;
        for col in 0..dim {
            let ones = (0..dim)
                .filter(|&row| (u[(row, col)] - Complex::ONE).norm() < 1e-15)
                .count();
            let zeros = (0..dim).filter(|&row| u[(row, col)] == Complex::ZERO).count();
            prop_assert_eq!(ones, 1);
            prop_assert_eq!(zeros, dim - 1);
        }
    }

    #[test]
    fn lambert_w_inverts(x in prop::num::f64::POSITIVE.prop_filter("finite range", |x| (1e-9..1e9).contains(x))) {
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-11 * x.max(1.0));
    }

    #[test]
    fn dephasing_subset_sum_equals_product_form(
        n_pairs in 1usize..=4,
        alpha2 in 1.0..30.0f64,
        delta_scale in 0.5..2.0f64,
        t_scale in 0.0..3.0f64,
    ) {
        let t2 = 10e-6;
        let delta = delta_scale * 2.0 * std::f64::consts::PI * 2.5e9;
        let t = t_scale * 1e-8;
        let p = DephasingParams::uniform(n_pairs, alpha2, t2, delta, t);
        let g = dephasing_fidelity(Encoding::Phase, &p).unwrap();
        // the 2^N-term subset sum factorizes per register qubit
        let phi = wedge_angle(n_pairs);
        let mut phi2 = 0.0;
        let mut product = 1.0;
        for j in 0..n_pairs {
            let s = (0.5 * (1u64 << j) as Real * phi).sin();
            phi2 += 2.0 * s * s / (t2 * delta).powi(2);
            let x = t - 2.0 * s * alpha2 / delta;
            // once per register (Alice and Bob have identical detunings here)
            product *= ((1.0 + (-x * x / (t2 * t2)).exp()) / 2.0).powi(2);
        }
        let expect = (-alpha2 * phi2).exp() * product;
        prop_assert!((g - expect).abs() < 1e-12 * expect.max(1.0));
    }
}

/// Full-channel trajectory sampling reproduces the analytic branch
/// fidelities (D⁺)²·F^±_cat once shots are grouped by the heralded parity.
#[test]
fn full_channel_branch_fidelities_match_analytic() {
    let n_pairs = 2;
    let alpha2 = 16.0;
    let eta = 0.99;
    let mut params = ProtocolParams::new(n_pairs, alpha2, eta, Encoding::Cat, 314).unwrap();
    params.orthogonal_idealization = true;
    let records = run_protocol(&params, LossMode::FullChannel, 6000).unwrap();

    let tables = parity_channel_tables(alpha2.sqrt(), eta).unwrap();
    let dp2 = tables.d_plus * tables.d_plus;
    for (lambda, branch) in [(1i8, CatBranch::XxPlus), (-1, CatBranch::XxMinus)] {
        let fs: Vec<Real> = records
            .iter()
            .filter(|r| r.parity_lambda == Some(lambda))
            .map(|r| r.fidelity)
            .collect();
        assert!(fs.len() > 100, "branch λ={lambda} underpopulated: {}", fs.len());
        let mean: Real = fs.iter().sum::<Real>() / fs.len() as Real;
        let var: Real =
            fs.iter().map(|f| (f - mean).powi(2)).sum::<Real>() / fs.len() as Real;
        let stderr = (var / fs.len() as Real).sqrt();
        let analytic = dp2 * fidelity_cat_branch(n_pairs, tables.n_ell, branch);
        // small extra allowance for residual heterodyne decode errors
        let tol = 5.0 * stderr + 3.0 * 1e-4;
        assert!(
            (mean - analytic).abs() < tol,
            "λ={lambda}: mean {mean:.6} vs analytic {analytic:.6} (tol {tol:.2e})"
        );
    }
}
