use npunas::mem::{mem_of, MemWeights};
use proptest::prelude::*;

proptest! {
    #[test]
    fn mem_is_a_scale_invariant_fraction(
        m in 0.0f64..1e12,
        v in 0.0f64..1e10,
        d in 1.0f64..1e11,
        k in 1e-3f64..1e3,
    ) {
        let w = MemWeights::REFERENCE;
        prop_assume!(w.wv * v + w.wd * d > 0.0);
        let x = mem_of(m, v, d, &w).unwrap();
        prop_assert!((0.0..1.0).contains(&x));
        let y = mem_of(m * k, v * k, d * k, &w).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn more_matrix_work_raises_mem(m in 1.0f64..1e12, v in 0.0f64..1e8, d in 1e6f64..1e10) {
        let w = MemWeights::REFERENCE;
        prop_assume!(w.wv * v + w.wd * d > 0.0);
        prop_assert!(mem_of(2.0 * m, v, d, &w).unwrap() > mem_of(m, v, d, &w).unwrap());
    }
}
