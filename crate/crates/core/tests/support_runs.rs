use muskat_core::oracle::{Barenblatt, Species};
use muskat_core::solver::{self, Mode, StepperConfig};
use muskat_core::support::{default_threshold, gap_persistence, support_edges};
use muskat_core::{make_initial_datum, FieldPair, Grid, InitialDatumSpec, PhysicalParams};

fn gap_run(t_end: f64) -> (muskat_core::Trajectory, f64) {
    let p = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
    let grid = Grid::new(3.0, 512).unwrap();
    let spec = InitialDatumSpec::TwoBump {
        a: 0.0,
        r0: 1.0,
        half_width: 0.2,
        height: 1.0,
    };
    let f = make_initial_datum(&spec, &grid).unwrap();
    let s0 = FieldPair::new(f.clone(), f.iter().map(|v| 0.5 * v).collect()).unwrap();
    let delta = default_threshold(&s0, &p, Mode::Limit);
    let cfg = StepperConfig {
        mode: Mode::Limit,
        t_end,
        diagnostics_stride: 10,
        keep_frames: true,
        track_dissipation: false,
        ..Default::default()
    };
    (solver::run(&s0, &p, &grid, &cfg).unwrap(), delta)
}

#[test]
fn flanking_bumps_enter_the_gap_after_a_positive_time() {
    let (traj, delta) = gap_run(0.5);
    let t = gap_persistence(&traj, 0.0, 1.0, delta).unwrap();
    let t = t.expect("the gap should be entered within the run");
    assert!(t > 0.0 && t < 0.5);
}

#[test]
fn short_run_never_enters_the_gap() {
    let (traj, delta) = gap_run(1e-3);
    assert_eq!(gap_persistence(&traj, 0.0, 1.0, delta).unwrap(), None);
}

#[test]
fn barenblatt_edge_matches_the_oracle_radius() {
    let p = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
    for n in [256, 512, 1024] {
        let grid = Grid::new(4.0, n).unwrap();
        let b = Barenblatt::new(1.0, Species::F.diffusivity(&p)).unwrap();
        let s = FieldPair::new(b.cell_averages(1.5, &grid).unwrap(), vec![0.0; n]).unwrap();
        let (l, r) = support_edges(&s, &grid, 1e-6, 0.0).unwrap().unwrap();
        let rho = b.radius(1.5).unwrap();
        assert!((r - rho).abs() <= 2.0 * grid.dx() && (l + rho).abs() <= 2.0 * grid.dx());
    }
}
