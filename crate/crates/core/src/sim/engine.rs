use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::trace::{TraceSet, Window};
use crate::control::{
    afe_step, unipolar_switch, AfeConfig, AfeController, AfeMeasurement, Reference, SeriesConfig, SeriesController,
    SeriesMeasurement,
};
use crate::converters::{
    llc_transfer, module_step, shared_link_step, AfeStage, FloatingModuleState, LlcLink, SharedDcLink,
};
use crate::error::{Error, Result};
use crate::network::{Command, Fidelity, Scenario, Topology, SQRT_3};
use crate::phasor::{AlphaBeta, Complex, DqSample};

/// Current above which a run is declared divergent, amps.
const I_DIVERGED: f64 = 1.0e6;

/// Energy bookkeeping over a whole run, joules. Sources count positive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyAudit {
    pub stored_initial: f64,
    pub stored_final: f64,
    /// Delivered by the left grid into the line.
    pub from_left: f64,
    /// Delivered by the line into the right grid (zero for a load).
    pub to_right: f64,
    /// Drawn by the AFE from the left grid.
    pub from_afe_grid: f64,
    /// Dissipated in line, filter and load resistance.
    pub loss_line: f64,
    pub loss_afe: f64,
    pub loss_llc: f64,
}

impl EnergyAudit {
    /// Change in stored energy minus net input. Zero up to rounding.
    pub fn residual(&self) -> f64 {
        let net = self.from_left + self.from_afe_grid - self.to_right - self.loss_line - self.loss_afe - self.loss_llc;
        (self.stored_final - self.stored_initial) - net
    }

    /// Residual over the largest energy moved or held during the run.
    pub fn relative_residual(&self) -> f64 {
        let scale =
            [self.from_left, self.to_right, self.from_afe_grid, self.loss_line, self.stored_initial, self.stored_final]
                .iter()
                .fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale > 0.0 {
            self.residual().abs() / scale
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: TraceSet,
    pub energy: EnergyAudit,
    pub steps: u64,
    pub dt: f64,
    /// Control and modulation period.
    pub t_ctrl: f64,
}

/// Reference and enabled harmonic orders for phase `p` under `cmd`.
fn reference_for(sc: &Scenario, p: usize, cmd: &Command) -> Result<(Reference, Vec<u32>)> {
    let op = sc.operating_point(p, cmd)?;
    let frame = op.v_left.arg();
    Ok(match cmd {
        Command::Bypass => (Reference::Bypass, Vec::new()),
        Command::BlockHarmonics { orders } => (Reference::HarmonicsOnly, orders.clone()),
        Command::RegulateCurrent { .. } | Command::CompensateQ | Command::CompensateP => {
            (Reference::Current { i_ref: DqSample::from_phasor(op.i, frame) }, Vec::new())
        }
        Command::InjectVoltage { .. } | Command::BalanceLoadVoltage { .. } => {
            (Reference::Voltage { v: DqSample::from_phasor(op.v_m, frame) }, Vec::new())
        }
    })
}

struct Engine<'a> {
    sc: &'a Scenario,
    dt: f64,
    n_ctrl: u64,
    t_ctrl: f64,
    l_loop: f64,
    r_loop: f64,
    load_rl: Option<(f64, f64)>,
    i: [f64; 3],
    duty_cmd: [f64; 3],
    modules: Vec<FloatingModuleState>,
    series: Vec<SeriesController>,
    afe: AfeController,
    stage: AfeStage,
    afe_u: [f64; 3],
    link: SharedDcLink,
    llc: LlcLink,
    /// Load voltage over the last step, fed back as the right-terminal
    /// measurement in load cases.
    v_load: [f64; 3],
    energy: EnergyAudit,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario) -> Result<Self> {
        let dt = sc.sim.dt;
        let w = sc.omega();
        let n_ctrl = ((1.0 / (sc.module.f_sw * dt)).round() as u64).max(1);
        let t_ctrl = n_ctrl as f64 * dt;
        let (r_loop, l_loop) = sc.loop_rl();
        let load_rl = sc.load().map(|l| (l.r, l.inductance(sc.freq())));
        let wt0 = -w * t_ctrl;
        let cmd0 = sc.command_at(0.0);

        let orders = sc.harmonic_orders();
        let blocks: Vec<(u32, Complex)> = orders.iter().map(|&h| (h, sc.loop_z(h))).collect();
        let g = &sc.controllers.series;
        let cfg = SeriesConfig {
            omega: w,
            kp: g.kp,
            ki: g.ki,
            sogi_k: g.sogi_k,
            pll_bandwidth_hz: g.pll_bandwidth_hz,
            harmonic_trim: g.harmonic_trim,
            v_dc_nominal: sc.module.v_dc,
            allow_overmod: sc.module.allow_overmod,
            t_ctrl,
            right_is_source: sc.topology == Topology::TwoGrid,
            z_loop: sc.loop_z(1),
        };

        let mut i = [0.0; 3];
        let mut modules = Vec::with_capacity(3);
        let mut series = Vec::with_capacity(3);
        for p in 0..3 {
            let op = sc.operating_point(p, cmd0)?;
            i[p] = op.i.instantaneous(0.0) + op.harmonics.iter().map(|(_, ih, _)| ih.instantaneous(0.0)).sum::<f64>();
            let m = &sc.module;
            modules.push(FloatingModuleState::new(["a", "b", "c"][p], m.v_dc, m.c_dc, m.v_dc_min, 0.5 * sc.filter.l)?);
            let mut c = SeriesController::new(cfg, &blocks)?;
            c.warm_start(op.v_left, op.v_right, op.i, wt0);
            series.push(c);
        }

        let sh = &sc.module.shared;
        let ag = &sc.controllers.afe;
        let mut afe = AfeController::new(AfeConfig {
            omega: w,
            l_filter: sh.afe_l,
            r_filter: sh.afe_r,
            vdc_ref: sh.v_dc,
            c_dc: sh.c_dc,
            v_d_nominal: SQRT_2 * sc.left.v_phase_nominal(),
            q_ref: ag.q_ref,
            current_bandwidth_hz: ag.current_bandwidth_hz,
            neg_bandwidth_hz: ag.neg_bandwidth_hz,
            vdc_bandwidth_hz: ag.vdc_bandwidth_hz,
            sogi_k: ag.sogi_k,
            i_max: 100.0,
            t_ctrl,
        })?;
        let [va, vb, vc] = [0, 1, 2].map(|p| sc.v_left(p, 1));
        let alpha = (va * 2.0 - vb - vc).scale(SQRT_2 / 3.0);
        let beta = (vb - vc).scale(SQRT_2 / SQRT_3);
        afe.warm_start(alpha, beta, wt0, sh.v_dc);

        let mut eng = Engine {
            sc,
            dt,
            n_ctrl,
            t_ctrl,
            l_loop,
            r_loop,
            load_rl,
            i,
            duty_cmd: [0.0; 3],
            modules,
            series,
            afe,
            stage: AfeStage::new(sh.afe_l, sh.afe_r),
            afe_u: [0.0; 3],
            link: SharedDcLink::new(sh)?,
            llc: LlcLink::from(sc.module.llc),
            v_load: [0.0; 3],
            energy: EnergyAudit::default(),
        };
        eng.energy.stored_initial = eng.stored();
        Ok(eng)
    }

    fn stored(&self) -> f64 {
        0.5 * self.l_loop * self.i.iter().map(|x| x * x).sum::<f64>()
            + self.modules.iter().map(|m| m.energy()).sum::<f64>()
            + self.link.energy()
            + self.stage.energy()
    }

    /// Hand a command to the series controllers. The initial command matches
    /// the warm start and is applied at once.
    fn apply(&mut self, cmd: &Command, now: bool) -> Result<()> {
        for p in 0..3 {
            let (r, orders) = reference_for(self.sc, p, cmd)?;
            if now {
                self.series[p].set_reference_now(r, &orders);
            } else {
                self.series[p].set_reference(r, &orders);
            }
        }
        Ok(())
    }

    fn control(&mut self, v_left: [f64; 3], v_right: [f64; 3], win: &mut Window) -> Result<()> {
        for p in 0..3 {
            let m = SeriesMeasurement {
                v_left: v_left[p],
                v_right: if self.load_rl.is_some() { self.v_load[p] } else { v_right[p] },
                i_line: self.i[p],
                v_dc: self.modules[p].v_dc,
            };
            let out = self.series[p].step(m, self.t_ctrl)?;
            self.duty_cmd[p] = out.modulation.duty;
            win.phase[p].overmod += out.modulation.saturated as u32 as f64;
        }
        let m = AfeMeasurement { v_grid: v_left, i_in: self.stage.currents(), v_dc: self.link.v_dc };
        self.afe_u = afe_step(&mut self.afe, &m, self.t_ctrl)?.u;
        win.ctrl += 1;
        Ok(())
    }

    fn run(mut self) -> Result<RunOutput> {
        let sc = self.sc;
        let dt = self.dt;
        let steps = (sc.sim.t_end / dt).round() as u64;
        let dec = sc.sim.record_decimation as u64;
        let switched = sc.sim.fidelity == Fidelity::Switched;
        let mut trace = TraceSet::with_capacity((steps / dec) as usize + 1, dt * dec as f64, sc.freq());
        let mut win = Window::default();

        let mut pending: Vec<(u64, &Command)> =
            sc.schedule.iter().map(|e| (((e.t / dt) - 1e-6).ceil().max(0.0) as u64, &e.command)).collect();
        pending.reverse();

        let (k1, k2) = (self.l_loop / dt - self.r_loop / 2.0, self.l_loop / dt + self.r_loop / 2.0);
        let grid = |t: f64| [0, 1, 2].map(|p| sc.left.instantaneous(p, t));
        let right = |t: f64| [0, 1, 2].map(|p| sc.v_right_source_inst(p, t));
        let mut vl0 = grid(0.0);
        let mut vr0 = right(0.0);

        for k in 0..steps {
            let t1 = (k + 1) as f64 * dt;
            while pending.last().is_some_and(|&(ks, _)| ks <= k) {
                let (_, cmd) = pending.pop().unwrap_or_else(|| unreachable!());
                self.apply(cmd, k == 0)?;
            }
            if k % self.n_ctrl == 0 {
                self.control(vl0, vr0, &mut win)?;
            }
            let vl1 = grid(t1);
            let vr1 = right(t1);

            let (mut shared_sum, mut to_mod_sum) = (0.0, 0.0);
            for p in 0..3 {
                let m = &mut self.modules[p];
                m.duty = if switched {
                    let n = self.n_ctrl as f64;
                    unipolar_switch(self.duty_cmd[p], ((k % self.n_ctrl) as f64 + 0.5) / n)
                } else {
                    self.duty_cmd[p]
                };
                let vm = m.terminal_voltage();
                let vlm = 0.5 * (vl0[p] + vl1[p]);
                let vrm = 0.5 * (vr0[p] + vr1[p]);
                let i_old = self.i[p];
                let i_new = (k1 * i_old + vlm - vrm - vm) / k2;
                if !i_new.is_finite() || i_new.abs() > I_DIVERGED {
                    return Err(Error::Divergence { state: format!("line current {}", m.name), t: t1, value: i_new });
                }
                let i_bar = 0.5 * (i_old + i_new);
                let p_to_mod = llc_transfer(&self.llc, m.v_dc, self.link.v_dc, dt);
                let v_dc_start = m.v_dc;
                let (next, _) = module_step(m, i_bar, -p_to_mod, dt)?;
                *m = next;
                self.i[p] = i_new;
                let p_shared = self.llc.shared_side_power(p_to_mod);
                shared_sum += p_shared;
                to_mod_sum += p_to_mod;

                self.energy.from_left += vlm * i_bar * dt;
                self.energy.to_right += vrm * i_bar * dt;
                self.energy.loss_line += self.r_loop * i_bar * i_bar * dt;

                let v_right = match self.load_rl {
                    Some((r, l)) => r * i_bar + l * (i_new - i_old) / dt,
                    None => vrm,
                };
                self.v_load[p] = v_right;
                let w = &mut win.phase[p];
                w.v_left += vlm;
                w.v_right += v_right;
                w.i_line += i_bar;
                w.v_m += vm;
                w.v_dc += v_dc_start;
                w.p_module += vm * i_bar;
                w.p_llc += p_shared;
                win.p_source += vlm * i_bar;
                win.p_module += vm * i_bar;
            }

            let i_before = self.stage.i;
            let pw = self.stage.step(vl0, vl1, self.afe_u, dt);
            let ia = 0.5 * (i_before.alpha + self.stage.i.alpha);
            let ib = 0.5 * (i_before.beta + self.stage.i.beta);
            self.energy.from_afe_grid += pw.p_grid * dt;
            self.energy.loss_afe += 1.5 * self.stage.r * (ia * ia + ib * ib) * dt;
            self.energy.loss_llc += (shared_sum - to_mod_sum) * dt;
            let v_sh_start = self.link.v_dc;
            self.link = shared_link_step(&self.link, pw.p_dc, shared_sum, dt)?;

            let i_afe = crate::phasor::alpha_beta_to_abc(AlphaBeta { alpha: ia, beta: ib, zero: 0.0 });
            for (w, i) in win.phase.iter_mut().zip(i_afe) {
                w.i_afe += i;
            }
            win.v_dc_shared += v_sh_start;
            win.p_afe += pw.p_dc;
            win.steps += 1;
            if (k + 1) % dec == 0 {
                win.flush(&mut trace, t1 - 0.5 * dec as f64 * dt);
            }
            vl0 = vl1;
            vr0 = vr1;
        }
        trace.fill_reactive();
        self.energy.stored_final = self.stored();
        Ok(RunOutput { trace, energy: self.energy, steps, dt, t_ctrl: self.t_ctrl })
    }
}

/// Run a scenario from its analytic initial operating point to `sim.t_end`.
pub fn run(sc: &Scenario) -> Result<RunOutput> {
    sc.validate()?;
    Engine::new(sc)?.run()
}
