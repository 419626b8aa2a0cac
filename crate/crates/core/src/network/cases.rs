//! The six built-in test cases.
//!
//! Common parameters: 400 V ph-ph 50 Hz source at 0°, line (20 + j10) mΩ per
//! phase, 200 µH series filter, 48 V / 100 kHz modules. Control switches from
//! bypass at 0.38 s; the two-grid cases step their current reference again at
//! 0.46 s and 0.54 s.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::scenario::*;
use super::{GridSegment, Harmonic, LineImpedance, RlLoad, SQRT_3};
use crate::error::{Error, Result};

pub const ENABLE_TIME: f64 = 0.38;
const STEP_TIMES: [f64; 4] = [0.38, 0.46, 0.54, 0.62];

pub struct CaseInfo {
    pub id: &'static str,
    pub title: &'static str,
    pub parameters: &'static str,
}

pub const CASES: [CaseInfo; 6] = [
    CaseInfo { id: "A", title: "RL load, reactive power shielded from the source", parameters: "load (22 + j4) ohm" },
    CaseInfo { id: "B", title: "RL load, active power shielded from the source", parameters: "load (4 + j22) ohm" },
    CaseInfo { id: "C", title: "two grids, amplitude difference", parameters: "second grid 390 V ph-ph, 0 deg, 50 Hz" },
    CaseInfo { id: "D", title: "two grids, phase difference", parameters: "second grid 400 V ph-ph, 8 deg, 50 Hz" },
    CaseInfo {
        id: "E",
        title: "RL load with source harmonics blocked",
        parameters: "3rd 0.1 pu at -25 deg + 5th 0.05 pu at 35 deg, load (22 + j4) ohm",
    },
    CaseInfo {
        id: "F",
        title: "unbalanced source, load voltage balanced per phase",
        parameters: "phases a, b, c: 245 V, 230 V, 200 V rms, load 5 ohm",
    },
];

pub fn case_ids() -> impl Iterator<Item = &'static str> {
    CASES.iter().map(|c| c.id)
}

fn module() -> ModuleParams {
    ModuleParams {
        v_dc: 48.0,
        f_sw: 100e3,
        c_dc: 20e-3,
        v_dc_min: 10.0,
        allow_overmod: true,
        llc: LlcParams { ratio: 700.0 / 48.0, efficiency: 0.97, conductance: 40.0 },
        shared: SharedLinkParams { v_dc: 700.0, c_dc: 5e-3, v_dc_min: 300.0, afe_l: 5e-3, afe_r: 0.05 },
    }
}

fn base(topology: Topology, right: RightSide, schedule: Vec<ScheduleEntry>, t_end: f64) -> Scenario {
    Scenario {
        topology,
        left: GridSegment::balanced(400.0, 0.0, 50.0),
        right,
        line: LineImpedance::new(0.02, 0.01),
        filter: FilterParams { l: 200e-6, r: 0.0 },
        module: module(),
        controllers: ControllerParams::default(),
        schedule,
        sim: SimConfig::averaged(t_end),
    }
}

fn at(t: f64, command: Command) -> ScheduleEntry {
    ScheduleEntry { t, command }
}

fn regulate(i_rms: f64, phase_deg: f64) -> Command {
    Command::RegulateCurrent { i_rms, phase_deg }
}

fn load(r: f64, x: f64) -> RightSide {
    RightSide::Load(RlLoad { r, x })
}

pub fn build_case(id: &str) -> Result<Scenario> {
    let bypass_then = |c: Command| vec![at(0.0, Command::Bypass), at(ENABLE_TIME, c)];
    let two_grid = |c: &[Command]| {
        let mut s = vec![at(0.0, regulate(0.0, 0.0))];
        for (k, cmd) in c.iter().enumerate() {
            s.push(at(STEP_TIMES[k], cmd.clone()));
        }
        s
    };
    let sc = match id.trim().to_ascii_uppercase().as_str() {
        "A" => base(Topology::LoadCase, load(22.0, 4.0), bypass_then(Command::CompensateQ), 0.6),
        "B" => base(Topology::LoadCase, load(4.0, 22.0), bypass_then(Command::CompensateP), 0.6),
        "C" => base(
            Topology::TwoGrid,
            RightSide::Grid(GridSegment::balanced(390.0, 0.0, 50.0)),
            two_grid(&[regulate(20.0, 0.0), regulate(20.0, -90.0), regulate(20.0, 180.0)]),
            0.6,
        ),
        "D" => base(
            Topology::TwoGrid,
            RightSide::Grid(GridSegment::balanced(400.0, 8.0, 50.0)),
            two_grid(&[regulate(20.0, 0.0), regulate(20.0, -90.0), regulate(20.0, 180.0), regulate(20.0, 90.0)]),
            0.7,
        ),
        "E" => {
            let mut s = base(
                Topology::LoadCase,
                load(22.0, 4.0),
                bypass_then(Command::BlockHarmonics { orders: vec![3, 5] }),
                0.6,
            );
            s.left.harmonics = vec![
                Harmonic { order: 3, magnitude_pu: 0.1, phase_deg: -25.0 },
                Harmonic { order: 5, magnitude_pu: 0.05, phase_deg: 35.0 },
            ];
            s
        }
        "F" => {
            let mut s = base(
                Topology::LoadCase,
                load(5.0, 0.0),
                bypass_then(Command::BalanceLoadVoltage { v_rms: 400.0 / SQRT_3 }),
                0.6,
            );
            s.left.per_phase_overrides = Some([245.0, 230.0, 200.0]);
            s
        }
        _ => return Err(Error::UnknownCase(id.to_string())),
    };
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::Phasor;

    #[test]
    fn every_case_validates() {
        for id in case_ids() {
            build_case(id).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn case_a_parameters() {
        let s = build_case("A").unwrap();
        assert_eq!(s.load(), Some(RlLoad { r: 22.0, x: 4.0 }));
        assert_eq!(s.left.v_ll_rms, 400.0);
        assert_eq!((s.line.r, s.line.x), (0.02, 0.01));
        assert_eq!(s.filter.l, 200e-6);
        assert_eq!((s.module.v_dc, s.module.f_sw), (48.0, 100e3));
        assert_eq!(s.schedule[1].t, 0.38);
    }

    #[test]
    fn case_d_second_grid() {
        let s = build_case("d").unwrap();
        let g = s.right_grid().unwrap();
        assert_eq!((g.v_ll_rms, g.phase_offset_deg, g.freq), (400.0, 8.0, 50.0));
    }

    #[test]
    fn case_f_overrides() {
        let s = build_case("F").unwrap();
        assert_eq!(s.left.per_phase_overrides, Some([245.0, 230.0, 200.0]));
        assert_eq!(s.load(), Some(RlLoad { r: 5.0, x: 0.0 }));
    }

    #[test]
    fn unknown_case() {
        assert_eq!(build_case("G"), Err(Error::UnknownCase("G".into())));
    }

    #[test]
    fn compensation_references_hold_the_other_power() {
        let s = build_case("A").unwrap();
        let b = s.operating_point(0, &Command::Bypass).unwrap();
        let c = s.operating_point(0, &Command::CompensateQ).unwrap();
        let sb = b.v_left * b.i.conj();
        let sc = c.v_left * c.i.conj();
        assert!((sc.re - sb.re).abs() < 1e-9 && sc.im.abs() < 1e-9);
        // Module voltage solves the loop equation.
        let back = (c.v_left - c.v_m) / s.loop_z(1);
        assert!((back - c.i).norm() < 1e-9);
    }

    #[test]
    fn balance_load_voltage_reaches_target() {
        let s = build_case("F").unwrap();
        for p in 0..3 {
            let op = s.operating_point(p, s.command_at(0.5)).unwrap();
            assert!((op.v_right.norm() - 400.0 / SQRT_3).abs() < 1e-9);
            let rel = op.v_m.arg() - op.v_left.arg();
            assert!(rel.sin().abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_blocking_zeroes_listed_orders() {
        let s = build_case("E").unwrap();
        let op = s.operating_point(0, s.command_at(0.5)).unwrap();
        for (h, i, v) in &op.harmonics {
            assert!(*h == 3 || *h == 5);
            assert_eq!(*i, Phasor::ZERO);
            assert!((v.norm() - if *h == 3 { 23.094 } else { 11.547 }).abs() < 1e-3);
        }
    }

    #[test]
    fn intervals_cover_the_run() {
        let s = build_case("C").unwrap();
        let iv = s.intervals();
        assert_eq!(iv.len(), 4);
        assert_eq!(iv[0].start, 0.0);
        assert_eq!(iv[3].end, 0.6);
        assert!((iv[2].start - 0.46).abs() < 1e-12);
    }
}
