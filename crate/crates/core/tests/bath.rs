use kondolab::bath::{
    spatial_correlator, temporal_correlator, thermal_correlator, thermal_kernel, BathSpec,
};
use num_rational::Rational64;
use proptest::prelude::*;

proptest! {
    #[test]
    fn thermal_kernel_never_exceeds_vacuum(w in 0.0f64..50.0, t in 1e-3f64..10.0) {
        let k = thermal_kernel(w, t);
        prop_assert!(k >= 0.0);
        prop_assert!(k <= 1.0 / (t * t) * (1.0 + 1e-14));
    }

    #[test]
    fn thermal_kernel_decreases_with_temperature(w in 0.01f64..10.0, f in 1.01f64..3.0, t in 0.01f64..5.0) {
        prop_assert!(thermal_kernel(w * f, t) <= thermal_kernel(w, t));
    }

    #[test]
    fn correlators_are_symmetric(x1 in -50.0f64..50.0, x2 in -50.0f64..50.0, zn in 1i64..20) {
        prop_assume!((x1 - x2).abs() > 1e-6);
        let spec = BathSpec { z: Rational64::new(zn, 10), lambda: 0.7, ..BathSpec::default() };
        prop_assert_eq!(spatial_correlator(&spec, x1, x2).unwrap(), spatial_correlator(&spec, x2, x1).unwrap());
        prop_assert_eq!(temporal_correlator(&spec, x1, x2).unwrap(), temporal_correlator(&spec, x2, x1).unwrap());
    }

    #[test]
    fn spatial_correlator_scales_with_exponent(d in 0.1f64..100.0, zn in 1i64..20, k in 1.1f64..4.0) {
        let spec = BathSpec { z: Rational64::new(zn, 10), lambda: 1.0, ..BathSpec::default() };
        let ratio = spatial_correlator(&spec, 0.0, d).unwrap() / spatial_correlator(&spec, 0.0, k * d).unwrap();
        let expected = k.powf(2.0 * zn as f64 / 10.0);
        prop_assert!((ratio / expected - 1.0).abs() < 1e-12);
    }
}

#[test]
fn zero_temperature_is_the_vacuum_correlator() {
    let spec = BathSpec {
        lambda: 1.0,
        ..BathSpec::default()
    };
    for t in [0.1, 1.0, 7.5] {
        assert_eq!(thermal_correlator(&spec, t).unwrap(), 1.0 / (t * t));
    }
}
