//! Heterodyne POVM sampling, maximum-likelihood wedge decoding, and the
//! analytic measurement-error probability.

use crate::numerics::erfc;
use crate::optics::CoherentLabel;
use crate::{wedge_angle, Complex, Real};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A heterodyne sample β together with its decoded wedge index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeterodyneOutcome {
    pub beta: Complex,
    pub decoded_k: usize,
}

/// Maximum-likelihood wedge decoder (equal priors over k): the outcome β is
/// assigned to the wedge of angular width φ bisected by the ray at angle kφ.
///
/// Boundary ties (measure zero) resolve to the lower k.
pub fn decode_wedge(beta: Complex, n_pairs: usize) -> usize {
    let d = 1usize << n_pairs;
    let phi = wedge_angle(n_pairs);
    let x = beta.arg() / phi;
    // round-half-down so an exact boundary goes to the lower index
    let k = (x - 0.5).ceil() as i64;
    k.rem_euclid(d as i64) as usize
}

/// Draw one heterodyne outcome from a statistical mixture of coherent states.
///
/// A label is selected with its weight, then β is drawn from the
/// unit-total-variance complex Gaussian p(β|α) = π^{−1}e^{−|β−α|²} centered on
/// that label (each quadrature has variance 1/2).
pub fn sample_heterodyne<R: Rng>(
    labels: &[(CoherentLabel, Real)],
    n_pairs: usize,
    rng: &mut R,
) -> HeterodyneOutcome {
    debug_assert!(!labels.is_empty());
    let total: Real = labels.iter().map(|(_, w)| w).sum();
    let mut pick = rng.random_range(0.0..total);
    let mut center = labels[labels.len() - 1].0.amplitude;
    for (label, w) in labels {
        if pick < *w {
            center = label.amplitude;
            break;
        }
        pick -= w;
    }
    let sigma = (0.5f64).sqrt();
    let g1: Real = StandardNormal.sample(rng);
    let g2: Real = StandardNormal.sample(rng);
    let beta = center + Complex::new(sigma * g1, sigma * g2);
    HeterodyneOutcome {
        beta,
        decoded_k: decode_wedge(beta, n_pairs),
    }
}

/// Analytic wedge-decoding error probability
/// p_m(N, η, n) = erfc(√(ηn)·sin(π/2^N)), accounting for the attenuation
/// α ↦ √η α of the traveling pulse.
pub fn p_measurement_error(n_pairs: usize, eta: Real, n: Real) -> Real {
    erfc((eta * n).sqrt() * (std::f64::consts::PI / (1u64 << n_pairs) as Real).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn decode_anchors() {
        // N=2: wedges centered at 0, π/2, π, 3π/2
        assert_eq!(decode_wedge(Complex::new(3.0, 0.1), 2), 0);
        assert_eq!(decode_wedge(Complex::new(0.1, 3.0), 2), 1);
        assert_eq!(decode_wedge(Complex::new(-3.0, 0.1), 2), 2);
        assert_eq!(decode_wedge(Complex::new(0.1, -3.0), 2), 3);
        // exact boundary at angle π/4 resolves to the lower wedge
        assert_eq!(decode_wedge(Complex::new(1.0, 1.0), 2), 0);
    }

    #[test]
    fn decode_rotation_covariant() {
        let mut rng = RngStream::new(3, 0).rng();
        for n_pairs in 1..=4usize {
            let d = 1usize << n_pairs;
            let phi = wedge_angle(n_pairs);
            for _ in 0..100 {
                let beta = Complex::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
                if beta.norm() < 1e-3 {
                    continue;
                }
                let k0 = decode_wedge(beta, n_pairs);
                let k1 = decode_wedge(beta * Complex::from_polar(1.0, phi), n_pairs);
                assert_eq!(k1, (k0 + 1) % d);
            }
        }
    }

    #[test]
    fn p_measurement_anchors() {
        assert!((p_measurement_error(1, 1.0, 0.0) - 1.0).abs() < 1e-15);
        // N=1, η=1, n=4: erfc(2·sin(π/2)) = erfc(2)
        assert!((p_measurement_error(1, 1.0, 4.0) - crate::numerics::erfc(2.0)).abs() < 1e-15);
        let mut prev = p_measurement_error(3, 0.9, 0.0);
        for i in 1..50 {
            let p = p_measurement_error(3, 0.9, i as Real);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn isotropic_at_zero_amplitude() {
        let mut rng = RngStream::new(9, 2).rng();
        let labels = [(CoherentLabel::new(Complex::ZERO).unwrap(), 1.0)];
        let n_pairs = 2;
        let shots = 40_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..shots {
            counts[sample_heterodyne(&labels, n_pairs, &mut rng).decoded_k] += 1;
        }
        // 5σ binomial window around p = 1/4
        let sigma = (shots as Real * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as Real - shots as Real * 0.25).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn error_rate_matches_erfc() {
        // N=2, √η·α = 3: erfc(3 sin(π/4)) ≈ 2.7e-3 within 5σ over 10^6 shots
        let mut rng = RngStream::new(123, 5).rng();
        let n_pairs = 2;
        let amp = 3.0;
        let labels = [(CoherentLabel::new(Complex::new(amp, 0.0)).unwrap(), 1.0)];
        let shots = 1_000_000usize;
        let mut errors = 0usize;
        for _ in 0..shots {
            if sample_heterodyne(&labels, n_pairs, &mut rng).decoded_k != 0 {
                errors += 1;
            }
        }
        let p = erfc(amp * (std::f64::consts::PI / 4.0).sin());
        let sigma = (shots as Real * p * (1.0 - p)).sqrt();
        assert!(
            (errors as Real - shots as Real * p).abs() < 5.0 * sigma,
            "errors={errors}, expected {}",
            shots as Real * p
        );
    }
}
