use dsw_core::hodograph::{edge_laws, solve_cubic_modulation, CubicBreakData};
use dsw_core::hydro::{invariants_from_state, HydroState};
use dsw_core::pde::{evolve, init_from_profile, mass, measure, Grid, SolverConfig};
use dsw_core::riemann::{build_pattern, Invariants, StepData};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = HydroState> {
    (0.05f64..4.0, -1.0f64..2.0).prop_filter_map("hyperbolic", |(r, n)| HydroState::new(r, n).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regions_tile_the_line(l in state(), r in state()) {
        let Ok(sd) = StepData::new(l, r) else { return Ok(()) };
        let p = build_pattern(&sd).unwrap();
        prop_assert!(p.regions.first().unwrap().z_left.is_infinite());
        prop_assert!(p.regions.last().unwrap().z_right.is_infinite());
        for w in p.regions.windows(2) {
            prop_assert_eq!(w[0].z_right, w[1].z_left);
            prop_assert!(w[0].z_left <= w[0].z_right);
        }
        for w in p.edge_speeds.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn far_field_is_the_step(l in state(), r in state()) {
        let Ok(sd) = StepData::new(l, r) else { return Ok(()) };
        let p = build_pattern(&sd).unwrap();
        let reach = p.edge_speeds.iter().fold(1.0f64, |a, s| a.max(s.abs()));
        for (x, s) in [(-2.0 * reach, l), (2.0 * reach, r)] {
            let pair = invariants_from_state(s).unwrap();
            match p.sample(x, 1.0).unwrap().invariants {
                Invariants::Pair { l_minus, l_plus } => {
                    prop_assert!((l_minus - pair.l_minus).abs() < 1e-12);
                    prop_assert!((l_plus - pair.l_plus).abs() < 1e-12);
                }
                other => prop_assert!(false, "far field is not a plateau: {:?}", other),
            }
        }
    }
}

#[test]
fn cubic_fan_invariants_stay_between_edge_values() {
    let d = CubicBreakData::new(0.25, 1.0).unwrap();
    let t = 0.5;
    let e = edge_laws(t, &d).unwrap();
    for j in 1..20 {
        let x = e.x_left + (e.x_right - e.x_left) * j as f64 / 20.0;
        let ms = solve_cubic_modulation(x, t, &d).unwrap();
        let [l1, l2, l3, l4] = ms.l;
        assert_eq!(l1, d.l_minus);
        assert!(l2 <= l3 && l3 <= l4, "{:?}", ms.l);
        assert!(l4 >= e.l4_harmonic - 1e-9 && l4 <= e.l4_soliton + 1e-9, "{:?}", ms.l);
    }
}

#[test]
fn uniform_state_stays_uniform() {
    let g = Grid::new(256, 50.0).unwrap();
    // two full windings over the box, so no seam correction is needed
    let k = 4.0 * std::f64::consts::PI / g.length;
    let (rho, nu) = (vec![2.0; 256], vec![k; 256]);
    let fs = init_from_profile(&g, &rho, &nu);
    let out = evolve(&g, &fs, 3.0, &SolverConfig::default()).unwrap();
    let obs = measure(&g, &out);
    assert!(obs.rho.iter().all(|r| (r - 2.0).abs() < 1e-10));
    assert!(obs.nu.iter().all(|n| (n - k).abs() < 1e-10));
    assert!((mass(&g, &out) - mass(&g, &fs)).abs() < 1e-10 * mass(&g, &fs));
}
