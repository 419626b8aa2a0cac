use alloc::vec::Vec;

#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

/// Recorded channels of one phase. Every value is the mean over one record
/// window, stamped at the window midpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseTrace {
    pub v_left: Vec<f64>,
    /// Right terminal voltage: the second grid, or the load voltage.
    pub v_right: Vec<f64>,
    pub i_line: Vec<f64>,
    pub v_m: Vec<f64>,
    pub v_dc_module: Vec<f64>,
    /// Mean `v_m·i` over the window.
    pub p_module: Vec<f64>,
    /// AFE phase current, grid into converter.
    pub i_afe: Vec<f64>,
    /// Power the module's LLC draws from the shared link.
    pub p_llc: Vec<f64>,
    /// Share of control periods in the window with a clipped command.
    pub overmod: Vec<f64>,
}

impl PhaseTrace {
    fn with_capacity(n: usize) -> Self {
        PhaseTrace {
            v_left: Vec::with_capacity(n),
            v_right: Vec::with_capacity(n),
            i_line: Vec::with_capacity(n),
            v_m: Vec::with_capacity(n),
            v_dc_module: Vec::with_capacity(n),
            p_module: Vec::with_capacity(n),
            i_afe: Vec::with_capacity(n),
            p_llc: Vec::with_capacity(n),
            overmod: Vec::with_capacity(n),
        }
    }

    fn channels(&self) -> [&Vec<f64>; 9] {
        [
            &self.v_left,
            &self.v_right,
            &self.i_line,
            &self.v_m,
            &self.v_dc_module,
            &self.p_module,
            &self.i_afe,
            &self.p_llc,
            &self.overmod,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceSet {
    pub t: Vec<f64>,
    pub phases: [PhaseTrace; 3],
    /// Three-phase line-side power drawn from the left grid (AFE excluded).
    pub p_source: Vec<f64>,
    pub q_source: Vec<f64>,
    pub p_module: Vec<f64>,
    pub q_module: Vec<f64>,
    pub v_dc_shared: Vec<f64>,
    /// Power the AFE delivers to the shared link.
    pub p_afe: Vec<f64>,
    /// Record spacing, s.
    pub dt: f64,
    /// Fundamental frequency of the run.
    pub f: f64,
}

impl TraceSet {
    pub(crate) fn with_capacity(n: usize, dt: f64, f: f64) -> Self {
        TraceSet {
            t: Vec::with_capacity(n),
            phases: [PhaseTrace::with_capacity(n), PhaseTrace::with_capacity(n), PhaseTrace::with_capacity(n)],
            p_source: Vec::with_capacity(n),
            q_source: Vec::with_capacity(n),
            p_module: Vec::with_capacity(n),
            q_module: Vec::with_capacity(n),
            v_dc_shared: Vec::with_capacity(n),
            p_afe: Vec::with_capacity(n),
            dt,
            f,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// All channels have the time axis' length.
    pub fn is_consistent(&self) -> bool {
        let n = self.t.len();
        self.phases.iter().all(|p| p.channels().iter().all(|c| c.len() == n))
            && [&self.p_source, &self.q_source, &self.p_module, &self.q_module, &self.v_dc_shared, &self.p_afe]
                .iter()
                .all(|c| c.len() == n)
    }

    /// Index range of samples whose stamps fall in `[start, end)`.
    pub fn range(&self, start: f64, end: f64) -> core::ops::Range<usize> {
        let lo = self.t.partition_point(|&t| t < start);
        let hi = self.t.partition_point(|&t| t < end);
        lo..hi.max(lo)
    }

    /// Fill the reactive channels from the recorded voltages and currents:
    /// `q = Σ v(t − T/4)·i(t)`, the voltage delayed a quarter period. Before
    /// the first quarter period the voltage is taken a period later instead,
    /// which assumes the run starts in periodic steady state.
    pub(crate) fn fill_reactive(&mut self) {
        let n = self.t.len();
        let lag = 0.25 / (self.f * self.dt);
        let period = 4.0 * lag;
        let at = |x: &[f64], pos: f64| -> f64 {
            let pos = if pos < 0.0 { pos + period } else { pos };
            let k = pos.floor();
            let frac = pos - k;
            let k = (k as usize).min(x.len() - 1);
            let k1 = (k + 1).min(x.len() - 1);
            x[k] * (1.0 - frac) + x[k1] * frac
        };
        self.q_source =
            (0..n).map(|k| self.phases.iter().map(|p| at(&p.v_left, k as f64 - lag) * p.i_line[k]).sum()).collect();
        self.q_module =
            (0..n).map(|k| self.phases.iter().map(|p| at(&p.v_m, k as f64 - lag) * p.i_line[k]).sum()).collect();
    }
}

/// Window accumulator for one record interval.
#[derive(Debug, Clone, Default)]
pub(crate) struct Window {
    pub steps: u32,
    pub ctrl: u32,
    pub phase: [PhaseWindow; 3],
    pub p_source: f64,
    pub p_module: f64,
    pub v_dc_shared: f64,
    pub p_afe: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PhaseWindow {
    pub v_left: f64,
    pub v_right: f64,
    pub i_line: f64,
    pub v_m: f64,
    pub v_dc: f64,
    pub p_module: f64,
    pub i_afe: f64,
    pub p_llc: f64,
    pub overmod: f64,
}

impl Window {
    pub fn flush(&mut self, trace: &mut TraceSet, t_mid: f64) {
        let n = self.steps.max(1) as f64;
        let nc = self.ctrl.max(1) as f64;
        trace.t.push(t_mid);
        for (tr, w) in trace.phases.iter_mut().zip(&self.phase) {
            tr.v_left.push(w.v_left / n);
            tr.v_right.push(w.v_right / n);
            tr.i_line.push(w.i_line / n);
            tr.v_m.push(w.v_m / n);
            tr.v_dc_module.push(w.v_dc / n);
            tr.p_module.push(w.p_module / n);
            tr.i_afe.push(w.i_afe / n);
            tr.p_llc.push(w.p_llc / n);
            tr.overmod.push(w.overmod / nc);
        }
        trace.p_source.push(self.p_source / n);
        trace.p_module.push(self.p_module / n);
        trace.v_dc_shared.push(self.v_dc_shared / n);
        trace.p_afe.push(self.p_afe / n);
        *self = Window::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn reactive_channel_of_lagging_current() {
        let dt = 1e-4;
        let n = 1000;
        let mut tr = TraceSet::with_capacity(n, dt, 50.0);
        let w = 2.0 * PI * 50.0;
        for k in 0..n {
            let t = k as f64 * dt;
            tr.t.push(t);
            for (p, ph) in tr.phases.iter_mut().enumerate() {
                let o = -2.0 * PI / 3.0 * p as f64;
                ph.v_left.push(325.0 * (w * t + o).cos());
                ph.i_line.push(10.0 * (w * t + o - 0.5).cos());
                ph.v_m.push(0.0);
            }
        }
        tr.fill_reactive();
        let expect = 1.5 * 325.0 * 10.0 * 0.5_f64.sin();
        for &q in &tr.q_source {
            assert!((q - expect).abs() < 1e-6 * expect, "{q} vs {expect}");
        }
    }

    #[test]
    fn range_selects_half_open_span() {
        let mut tr = TraceSet::with_capacity(10, 0.1, 50.0);
        tr.t = (0..10).map(|k| 0.05 + 0.1 * k as f64).collect();
        assert_eq!(tr.range(0.2, 0.5), 2..5);
        assert_eq!(tr.range(5.0, 6.0), 10..10);
    }
}
