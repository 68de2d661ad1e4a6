use entrograph::entropy::{alpha_limit_probe, entropy_profile, separated_counts, ProfileOptions};
use entrograph::systems::{build, circle_rotation, CatalogOptions, SystemInstance, SYSTEM_NAMES};
use entrograph::SampledCompact;
use proptest::prelude::*;

fn small(name: &str, grid: usize, horizon: usize) -> SystemInstance {
    build(name, &CatalogOptions { grid: Some(grid), horizon: Some(horizon), ..Default::default() }).unwrap()
}

fn non_decreasing(v: &[u64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn counts_are_monotone_and_sandwiched(sys in 0..SYSTEM_NAMES.len(), grid in 60usize..300, k in 1u32..5) {
        let s = small(SYSTEM_NAMES[sys], grid, 24);
        let levels = [k, k + 2];
        let opts = ProfileOptions { generators: true, ..Default::default() };
        let p = entropy_profile(&s, s.default_compact(), &levels, 24, &opts).unwrap();
        prop_assert!(p.level_monotonicity_violations().is_empty());
        for l in &p.levels {
            prop_assert!(non_decreasing(&l.counts));
            let sw = l.sandwich.as_ref().unwrap();
            prop_assert!(non_decreasing(&sw.g_fine));
            prop_assert!(sw.ok, "{} k={}: first violation {:?}", s.name(), l.k, sw.first_violation);
        }
    }

    #[test]
    fn rotation_counts_are_constant(alpha in 0.01f64..0.99, grid in 50usize..400, k in 0u32..9) {
        let s = circle_rotation(alpha, &CatalogOptions { grid: Some(grid), horizon: Some(40), ..Default::default() })
            .unwrap();
        let c = separated_counts(&s, s.default_compact(), k, 40).unwrap();
        prop_assert!(c.iter().all(|&v| v == c[0]), "{c:?}");
    }

    /// Greedy counts are maximal, not maximum, so the bound holds with the
    /// fine level on the outside: a `k_f`-ball holds at most one
    /// `k`-separated point, and a maximal `k_f`-separated set covers.
    #[test]
    fn union_lies_between_max_and_sum(sys in 0..SYSTEM_NAMES.len(), cut in 0.1f64..0.9, k in 1u32..5) {
        let s = small(SYSTEM_NAMES[sys], 200, 20);
        let kf = s.entourages().square_root_level(k);
        let pts = s.default_compact().points();
        let m = ((pts.len() as f64 * cut) as usize).clamp(1, pts.len() - 1);
        let a = SampledCompact::new("a", pts[..m].to_vec(), None).unwrap();
        let b = SampledCompact::new("b", pts[m..].to_vec(), None).unwrap();
        let u = SampledCompact::union("a+b", &[&a, &b]).unwrap();
        let count = |c: &SampledCompact, k| separated_counts(&s, c, k, 20).unwrap();
        let (ca, cb, cu) = (count(&a, k), count(&b, k), count(&u, k));
        let (fa, fb, fu) = (count(&a, kf), count(&b, kf), count(&u, kf));
        for n in 0..20 {
            prop_assert!(ca[n].max(cb[n]) <= fu[n] && cu[n] <= fa[n] + fb[n],
                "{} n={}: {} {} {} / {} {} {}", s.name(), n + 1, ca[n], cb[n], cu[n], fa[n], fb[n], fu[n]);
        }
    }
}

#[test]
fn backward_orbits_that_leave_force_linear_counts() {
    for name in ["translation-line", "north-south-interval"] {
        let s = small(name, 4000, 128);
        let x = s.default_compact().points()[2000];
        let r = alpha_limit_probe(&s, &x, s.default_compact(), 8, 128).unwrap();
        assert!(r.exit_time.is_some(), "{name}");
        assert!(r.c <= 32, "{name}: c = {}", r.c);
        assert!(r.counts.iter().enumerate().all(|(i, &v)| v + r.c > i as u64));
    }
}
