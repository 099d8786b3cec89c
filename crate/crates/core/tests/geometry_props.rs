use std::f64::consts::PI;

use kubo_core::geometry::{dual_basis, wedge};
use kubo_core::{BzMesh, LatticeSpec, Refinement, Site, Vec2};
use proptest::prelude::*;

fn basis() -> impl Strategy<Value = [Vec2; 2]> {
    (0.5f64..3.0, 0.0f64..PI, 0.5f64..3.0, 0.3f64..(PI - 0.3)).prop_map(|(r1, a1, r2, da)| {
        [Vec2::new(r1 * a1.cos(), r1 * a1.sin()), Vec2::new(r2 * (a1 + da).cos(), r2 * (a1 + da).sin())]
    })
}

proptest! {
    #[test]
    fn reciprocal_duality(b in basis()) {
        let lat = LatticeSpec::new(b, 1, &[Vec2::zeros()], 1).unwrap();
        let g = lat.reciprocal_basis();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 2.0 * PI } else { 0.0 };
                prop_assert!((g[i].dot(&b[j]) - expect).abs() < 1e-12);
            }
        }
        let back = dual_basis(&g);
        prop_assert!((back[0] - b[0]).norm() < 1e-12 && (back[1] - b[1]).norm() < 1e-12);
        let area_bz = wedge(&g[0], &g[1]).abs();
        prop_assert!((area_bz * lat.cell_area() - 4.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn mesh_weights_sum_to_zone_area(
        b in basis(),
        n in 1usize..24,
        depth in 0u32..5,
        c in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let lat = LatticeSpec::new(b, 1, &[Vec2::zeros()], 1).unwrap();
        let refine = Refinement { centers: vec![lat.to_cartesian([c.0, c.1])], depth };
        let mesh = BzMesh::new(&lat, n, Some(&refine)).unwrap();
        prop_assert!(mesh.weights().iter().all(|&w| w > 0.0));
        prop_assert!((mesh.weight_sum() - mesh.bz_area()).abs() <= 1e-12 * mesh.bz_area());
    }

    #[test]
    fn torus_distance_is_a_metric(l in 1usize..5, a in 0usize..200, b in 0usize..200, c in 0usize..200) {
        let lat = LatticeSpec::honeycomb(l, false).unwrap();
        let n = lat.n_sites();
        let (x, y, z) = (lat.site(a % n), lat.site(b % n), lat.site(c % n));
        let d = |p: Site, q: Site| lat.torus_distance(p, q);
        prop_assert!(d(x, x).abs() < 1e-12);
        prop_assert!((d(x, y) - d(y, x)).abs() < 1e-12);
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    }

    #[test]
    fn site_index_round_trip(l in 1usize..6, spinful: bool, i in 0usize..500) {
        let lat = LatticeSpec::honeycomb(l, spinful).unwrap();
        let idx = i % lat.n_sites();
        prop_assert_eq!(lat.site_index(lat.site(idx)), idx);
    }
}

#[test]
fn torus_distance_examples() {
    let lat = LatticeSpec::honeycomb(4, false).unwrap();
    let a = Site { cell: [0, 0], internal: 0 };
    let b = Site { cell: [0, 0], internal: 1 };
    assert!((lat.torus_distance(a, b) - 1.0).abs() < 1e-12);
    // The far corner of the cluster is one lattice step away through the boundary.
    let corner = Site { cell: [3, 0], internal: 0 };
    assert!((lat.torus_distance(a, corner) - 3f64.sqrt()).abs() < 1e-12);
}
