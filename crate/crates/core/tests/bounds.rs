use muskat_core::oracle::bounds_check;
use muskat_core::solver::{self, Mode, StepperConfig};
use muskat_core::{make_initial_datum, FieldPair, Grid, InitialDatumSpec, PhysicalParams};

fn run_bounds(s0: &FieldPair, grid: &Grid) -> muskat_core::oracle::BoundsReport {
    let p = PhysicalParams::new(1.0, 1.0, 0.0).unwrap();
    let cfg = StepperConfig {
        mode: Mode::Limit,
        t_end: 10.0,
        diagnostics_stride: 50,
        track_dissipation: false,
        ..Default::default()
    };
    let traj = solver::run(s0, &p, grid, &cfg).unwrap();
    bounds_check(&traj.ledger).unwrap()
}

#[test]
fn zero_data_pass_trivially() {
    let grid = Grid::new(4.0, 64).unwrap();
    let rep = run_bounds(&FieldPair::zeros(64), &grid);
    assert!(rep.pass());
}

#[test]
fn single_bump_respects_the_moment_and_decay_bounds() {
    let grid = Grid::new(8.0, 256).unwrap();
    let f = make_initial_datum(
        &InitialDatumSpec::Bump {
            center: 0.0,
            half_width: 1.0,
            height: 1.0,
        },
        &grid,
    )
    .unwrap();
    let s0 = FieldPair::new(f, vec![0.0; grid.len()]).unwrap();
    let rep = run_bounds(&s0, &grid);
    assert!(rep.decay.pass, "{:?}", rep.decay);
    assert!(
        rep.moment.pass && rep.moment.margin > 0.0,
        "{:?}",
        rep.moment
    );
}
