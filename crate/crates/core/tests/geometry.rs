use num_complex::Complex64;
use proptest::prelude::*;
use sp8d::formats::{standard_format, FormatKind};
use sp8d::geom8d::{classify, min_distance_sq, JonesVector, Symbol8D};

fn rotate(j: &JonesVector, a: Complex64, b: Complex64, phase: Complex64) -> JonesVector {
    JonesVector::new((a * j.ex - b.conj() * j.ey) * phase, (b * j.ex + a.conj() * j.ey) * phase)
}

proptest! {
    #[test]
    fn class_survives_common_polarization_rotation(
        theta in 0.0..std::f64::consts::PI,
        phi_a in -3.2..3.2f64,
        phi_b in -3.2..3.2f64,
        common in -3.2..3.2f64,
        pick in 0usize..256,
    ) {
        let qpsk = standard_format(FormatKind::PdmQpsk).unwrap();
        let s = qpsk.symbols()[pick];
        let a = Complex64::from_polar(theta.cos(), phi_a);
        let b = Complex64::from_polar(theta.sin(), phi_b);
        let p = Complex64::from_polar(1.0, common);
        let rotated = Symbol8D { t1: rotate(&s.t1, a, b, p), t2: rotate(&s.t2, a, b, p), label: s.label };
        prop_assert_eq!(classify(&rotated).unwrap(), classify(&s).unwrap());
    }

    #[test]
    fn independent_slot_phases_keep_the_class(p1 in -3.2..3.2f64, p2 in -3.2..3.2f64, pick in 0usize..256) {
        let qpsk = standard_format(FormatKind::PdmQpsk).unwrap();
        let s = qpsk.symbols()[pick];
        let (r1, r2) = (Complex64::from_polar(1.0, p1), Complex64::from_polar(1.0, p2));
        let shifted = Symbol8D {
            t1: JonesVector::new(s.t1.ex * r1, s.t1.ey * r1),
            t2: JonesVector::new(s.t2.ex * r2, s.t2.ey * r2),
            label: s.label,
        };
        prop_assert_eq!(classify(&shifted).unwrap(), classify(&s).unwrap());
    }

    #[test]
    fn scaling_scales_min_distance_quadratically(alpha in 0.05..20.0f64) {
        let pb = standard_format(FormatKind::Pb5b8d).unwrap();
        let scaled = pb.scaled(alpha).unwrap();
        let ratio = min_distance_sq(&scaled).unwrap() / min_distance_sq(&pb).unwrap();
        prop_assert!((ratio / (alpha * alpha) - 1.0).abs() < 1e-12);
    }
}
