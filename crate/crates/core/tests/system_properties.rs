use std::collections::HashSet;
use std::sync::OnceLock;

use entrograph::systems::{build, CatalogOptions, SystemInstance, SYSTEM_NAMES};
use entrograph::uniformity::chord;
use entrograph::Point;
use proptest::prelude::*;

fn catalog() -> &'static Vec<SystemInstance> {
    static CATALOG: OnceLock<Vec<SystemInstance>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let opts = CatalogOptions { grid: Some(600), horizon: Some(32), ..Default::default() };
        SYSTEM_NAMES.iter().map(|n| build(n, &opts).unwrap()).collect()
    })
}

fn brouwer() -> &'static SystemInstance {
    &catalog()[SYSTEM_NAMES.iter().position(|&n| n == "brouwer-sphere").unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_undoes_step(sys in 0..SYSTEM_NAMES.len(), i in any::<usize>()) {
        let s = &catalog()[sys];
        prop_assume!(s.is_invertible());
        let pts = s.default_compact().points();
        let p = pts[i % pts.len()];
        let back = s.step_inv(&s.step(&p).unwrap()).unwrap();
        let exact = matches!(p, Point::Arrow(_) | Point::Exact(_) | Point::Infinity);
        if exact {
            prop_assert_eq!(back, p);
        } else {
            let f = s.entourages();
            let d = chord(&f.locate(&p), &f.locate(&back));
            prop_assert!(d <= 1e-9, "{}: {p} -> {back} ({d})", s.name());
        }
    }

    #[test]
    fn brouwer_translation_zones(x in -1e3f64..1e3, y in 1.0f64..1e3) {
        prop_assert_eq!(brouwer().step(&Point::Plane(x, y)).unwrap(), Point::Plane(x + 1.0, y));
        prop_assert_eq!(brouwer().step(&Point::Plane(x, 1.0 - y)).unwrap(), Point::Plane(x - 1.0, 1.0 - y));
    }

    #[test]
    fn brouwer_strip_descends(x in -50.0f64..50.0, y in 0.001f64..0.999) {
        let Point::Plane(_, y2) = brouwer().step(&Point::Plane(x, y)).unwrap() else {
            return Err(TestCaseError::fail("left the plane"));
        };
        prop_assert!(y2 < y);
    }
}

#[test]
fn non_wandering_points_are_fixed() {
    for s in catalog() {
        for p in s.non_wandering() {
            assert_eq!(s.step(p).unwrap(), *p, "{}", s.name());
        }
    }
}

#[test]
fn double_arrow_is_injective_and_keeps_sides() {
    let s = &catalog()[SYSTEM_NAMES.iter().position(|&n| n == "double-arrow").unwrap()];
    let mut images = HashSet::new();
    for p in s.default_compact().points() {
        let q = s.step(p).unwrap();
        assert_eq!(p.as_arrow().unwrap().side(), q.as_arrow().unwrap().side());
        assert!(images.insert(q), "{p} collides");
    }
}
