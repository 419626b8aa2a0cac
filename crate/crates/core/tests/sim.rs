use difq_core::network::{build_case, case_ids, Command, RightSide, ScheduleEntry};
use difq_core::sim::{compare_to_analytic, compute_metrics, run};

#[test]
fn reruns_are_bit_identical() {
    let sc = build_case("D").unwrap();
    let a = run(&sc).unwrap();
    let b = run(&sc).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.energy, b.energy);
}

#[test]
fn energy_balances_on_every_case() {
    for id in case_ids() {
        let sc = build_case(id).unwrap();
        let out = run(&sc).unwrap();
        let r = out.energy.relative_residual();
        assert!(r < 1e-9, "case {id}: residual {r:e}");
        assert!(out.trace.is_consistent());
    }
}

#[test]
fn equal_grids_in_bypass_carry_no_current() {
    let mut sc = build_case("C").unwrap();
    sc.right = RightSide::Grid(sc.left.clone());
    sc.schedule = vec![ScheduleEntry { t: 0.0, command: Command::Bypass }];
    sc.sim.t_end = 0.1;
    let out = run(&sc).unwrap();
    let peak = out.trace.phases.iter().flat_map(|p| p.i_line.iter()).fold(0.0_f64, |m, i| m.max(i.abs()));
    assert!(peak < 1e-9, "{peak}");
}

#[test]
fn two_grid_hold_blocks_the_uncontrolled_current() {
    let sc = build_case("D").unwrap();
    let out = run(&sc).unwrap();
    let m = compute_metrics(&sc, &out).unwrap();
    let hold = &m.intervals[0];
    for (p, ph) in hold.phases.iter().enumerate() {
        let free = sc.uncontrolled_current(p).unwrap().norm();
        assert!(ph.i.norm() < 0.01 * free, "phase {p}: {} of {free}", ph.i.norm());
    }
}

#[test]
fn regulated_current_matches_the_phasor_solution() {
    let sc = build_case("C").unwrap();
    let out = run(&sc).unwrap();
    let m = compute_metrics(&sc, &out).unwrap();
    for c in compare_to_analytic(&sc, &m).unwrap() {
        assert!(c.pass, "{c:?}");
    }
}

#[test]
fn halving_the_step_keeps_settled_phasors() {
    let sc = build_case("A").unwrap();
    let mut fine = sc.clone();
    fine.sim.dt = sc.sim.dt / 2.0;
    fine.sim.record_decimation = sc.sim.record_decimation * 2;
    let a = compute_metrics(&sc, &run(&sc).unwrap()).unwrap();
    let b = compute_metrics(&fine, &run(&fine).unwrap()).unwrap();
    for (x, y) in a.intervals.iter().zip(&b.intervals) {
        for (px, py) in x.phases.iter().zip(&y.phases) {
            let rel = (px.i - py.i).norm() / px.i.norm();
            assert!(rel < 5e-3, "{rel}");
        }
    }
}
