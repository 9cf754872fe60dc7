use num_complex::Complex64;
use proptest::prelude::*;

use omrl::analysis::state_overlap;
use omrl::classical::{MapSpec, PhasePoint};
use omrl::linalg::{max_abs_diff, norm, unitarity_defect};
use omrl::scar::coherent_state;
use omrl::spectral::match_spectra;
use omrl::torus::{closed_propagator, opening_projector, MapKind, OpeningStrip, TorusSpec};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn state(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), len).prop_filter("non-zero", |v| norm(v) > 1e-3)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn ring_value(r: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(r, theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn baker_is_unitary(k in 1usize..30) {
        let spec = TorusSpec::for_map(MapKind::Baker, 3 * k).unwrap();
        let u = closed_propagator(MapKind::Baker, &spec).unwrap();
        prop_assert!(unitarity_defect(u.matrix()) < 1e-12);
    }

    #[test]
    fn cat_is_unitary(n in 2usize..80) {
        let spec = TorusSpec::for_map(MapKind::Cat, n).unwrap();
        let u = closed_propagator(MapKind::Cat, &spec).unwrap();
        prop_assert!(unitarity_defect(u.matrix()) < 1e-12);
    }

    #[test]
    fn projector_is_idempotent(n in 3usize..120, lo in 0.0..0.5f64, width in 0.01..0.5f64) {
        let spec = TorusSpec::antiperiodic(n).unwrap();
        let p = opening_projector(&spec, &OpeningStrip::new(lo, lo + width).unwrap());
        prop_assert_eq!(max_abs_diff(&(&p * &p), &p), 0.0);
    }

    #[test]
    fn steps_invert(q in 0.0..1.0f64, p in 0.0..1.0f64, baker in any::<bool>()) {
        let map = if baker { MapSpec::baker() } else { MapSpec::cat() };
        let x = PhasePoint::new(q, p);
        prop_assert!(map.inverse_step(map.step(x)).torus_distance(&x) < 1e-12);
        prop_assert!(map.step(map.inverse_step(x)).torus_distance(&x) < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalized(n in 3usize..200, q in 0.0..1.0f64, p in 0.0..1.0f64) {
        let spec = TorusSpec::antiperiodic(n).unwrap();
        let c = coherent_state(&spec, PhasePoint::new(q, p));
        prop_assert!((norm(&c.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_bounded_and_gauge_invariant(
        (a, b) in (1usize..16).prop_flat_map(|n| (state(n), state(n))),
        s in complex().prop_filter("non-zero", |s| s.norm() > 1e-2),
    ) {
        let o = state_overlap(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert!((o - state_overlap(&b, &a).unwrap()).abs() < 1e-12);
        let scaled: Vec<Complex64> = b.iter().map(|x| x * s).collect();
        prop_assert!((o - state_overlap(&a, &scaled).unwrap()).abs() < 1e-10);
        prop_assert!((state_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matching_is_optimal_and_one_to_one(
        exact in prop::collection::vec((0.5..1.0f64, 0.0..6.3f64), 1..6),
        approx in prop::collection::vec((0.0..1.0f64, 0.0..6.3f64), 1..6),
    ) {
        let exact: Vec<Complex64> = exact.into_iter().map(|(r, t)| ring_value(r, t)).collect();
        let approx: Vec<Complex64> = approx.into_iter().map(|(r, t)| ring_value(r, t)).collect();
        let report = match_spectra(&exact, &approx, 0.5).unwrap();
        prop_assert_eq!(report.pairs.len(), exact.len().min(approx.len()));
        let mut used_e: Vec<usize> = report.pairs.iter().map(|p| p.exact).collect();
        let mut used_a: Vec<usize> = report.pairs.iter().map(|p| p.approx).collect();
        used_e.sort_unstable();
        used_e.dedup();
        used_a.sort_unstable();
        used_a.dedup();
        prop_assert_eq!(used_e.len(), report.pairs.len());
        prop_assert_eq!(used_a.len(), report.pairs.len());
        // brute force over injective assignments of the smaller side
        let total: f64 = report.pairs.iter().map(|p| p.distance).sum();
        let (small, large) = if exact.len() <= approx.len() { (&exact, &approx) } else { (&approx, &exact) };
        let mut best = f64::INFINITY;
        for perm in permutations(large.len()) {
            let cost: f64 = (0..small.len()).map(|i| (small[i] - large[perm[i]]).norm()).sum();
            best = best.min(cost);
        }
        prop_assert!(total <= best + 1e-12, "total {} brute {}", total, best);
    }
}
