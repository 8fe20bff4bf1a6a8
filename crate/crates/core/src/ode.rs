//! Dormand–Prince 5(4) with the standard 4th-order continuous extension.
//!
//! Terminal events are sign changes of `g` from `> 0` to `≤ 0`, located by
//! bisection on the dense interpolant. Integration runs in either time
//! direction.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Width to which event times are bisected.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: None, h_max: f64::INFINITY, max_steps: 5_000_000, event_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Reached,
    Event {
        index: usize,
        t: f64,
    },
    StepFailure {
        t: f64,
    },
    MaxSteps {
        t: f64,
    },
    /// The step hook asked to stop.
    Halted {
        t: f64,
    },
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

/// Piecewise quartic interpolant over all accepted steps.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    segs: Vec<Segment>,
    dir: f64,
    t_last: f64,
}

impl DenseOutput {
    pub fn t_first(&self) -> f64 {
        self.segs.first().map(|s| s.t0).unwrap_or(self.t_last)
    }

    pub fn t_last(&self) -> f64 {
        self.t_last
    }

    pub fn dim(&self) -> usize {
        self.segs.first().map(|s| s.r[0].len()).unwrap_or(0)
    }

    /// Step endpoints in integration order, starting with the initial time.
    pub fn step_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segs.iter().map(|s| s.t0).collect();
        v.push(self.t_last);
        v
    }

    fn locate(&self, t: f64) -> &Segment {
        // segs are monotone in `dir`; last segment whose start precedes t
        let key = t * self.dir;
        let idx = self.segs.partition_point(|s| s.t0 * self.dir <= key);
        &self.segs[idx.saturating_sub(1).min(self.segs.len() - 1)]
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let s = self.locate(t);
        interp(s, t, out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Whether `t` lies in the covered interval.
    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = (self.t_first(), self.t_last);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        t >= lo && t <= hi
    }
}

fn interp(s: &Segment, t: f64, out: &mut [f64]) {
    let th = (t - s.t0) / s.h;
    let th1 = 1.0 - th;
    for i in 0..out.len() {
        out[i] = s.r[0][i] + th * (s.r[1][i] + th1 * (s.r[2][i] + th * (s.r[3][i] + th1 * s.r[4][i])));
    }
}

pub type EventFn<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + 'a>;
pub type StepHook<'a> = Box<dyn FnMut(f64, &[f64]) -> bool + 'a>;

/// Everything beyond the right-hand side and the time span.
#[derive(Default)]
pub struct SolveSpec<'a> {
    pub events: Vec<EventFn<'a>>,
    /// Times (in integration order) at which the state is recorded.
    pub observe_at: Vec<f64>,
    pub keep_dense: bool,
    /// Called after every accepted step; returning `false` halts.
    pub hook: Option<StepHook<'a>>,
}

#[derive(Debug, Clone)]
pub struct OdeRun {
    pub t: f64,
    pub y: Vec<f64>,
    pub stop: Stop,
    pub accepted: usize,
    pub rejected: usize,
    pub nfev: usize,
    pub dense: Option<DenseOutput>,
    pub observed: Vec<(f64, Vec<f64>)>,
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], o: &OdeOptions) -> f64 {
    let n = y0.len() as f64;
    let mut s = 0.0;
    for i in 0..y0.len() {
        let sk = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sk;
        s += e * e;
    }
    (s / n).sqrt()
}

fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, o: &OdeOptions) -> f64 {
    let n = y0.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = o.atol + o.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(o.h_max);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + dir * h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t0 + dir * h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = o.atol + o.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(o.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`.
pub fn solve<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, o: &OdeOptions, mut spec: SolveSpec<'_>) -> OdeRun
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut observed = Vec::new();
    let mut obs_idx = 0;
    let mut segs: Vec<Segment> = Vec::new();
    let (mut accepted, mut rejected, mut nfev) = (0usize, 0usize, 0usize);

    let finish = |t: f64, y: Vec<f64>, stop: Stop, segs: Vec<Segment>, observed, accepted, rejected, nfev, keep: bool| OdeRun {
        t,
        y,
        stop,
        accepted,
        rejected,
        nfev,
        dense: if keep { Some(DenseOutput { segs, dir, t_last: t }) } else { None },
        observed,
    };

    // observations at t0
    while obs_idx < spec.observe_at.len() && (spec.observe_at[obs_idx] - t0) * dir <= 0.0 {
        if spec.observe_at[obs_idx] == t0 {
            observed.push((t0, y.clone()));
        }
        obs_idx += 1;
    }
    let mut g_prev: Vec<f64> = spec.events.iter().map(|g| g(t, &y)).collect();
    if let Some(i) = g_prev.iter().position(|&g| g <= 0.0) {
        return finish(t, y, Stop::Event { index: i, t }, segs, observed, 0, 0, 0, spec.keep_dense);
    }
    if t_end == t0 {
        return finish(t, y, Stop::Reached, segs, observed, 0, 0, 0, spec.keep_dense);
    }

    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    nfev += 1;
    let mut h = match o.h0 {
        Some(h) => h.min(o.h_max),
        None => {
            nfev += 1;
            initial_step(&mut f, t, &y, &k1, dir, o)
        }
    };
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut last_reject = false;

    loop {
        if accepted + rejected >= o.max_steps {
            return finish(t, y, Stop::MaxSteps { t }, segs, observed, accepted, rejected, nfev, spec.keep_dense);
        }
        let remaining = (t_end - t) * dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return finish(t, y, Stop::StepFailure { t }, segs, observed, accepted, rejected, nfev, spec.keep_dense);
        }
        let hs = dir * h;
        for i in 0..n {
            ys[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        f(t_new, &ys, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, &y1, &mut k7);
        nfev += 6;
        for i in 0..n {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&y, &y1, &err, o);
        if !en.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            rejected += 1;
            h *= 0.25;
            last_reject = true;
            continue;
        }
        if en > 1.0 {
            rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            last_reject = true;
            continue;
        }
        accepted += 1;
        let mut r = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let dy = y1[i] - y[i];
            let bspl = hs * k1[i] - dy;
            r[0][i] = y[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - hs * k7[i] - bspl;
            r[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let seg = Segment { t0: t, h: hs, r };

        // events
        let mut hit: Option<(usize, f64)> = None;
        let mut g_new = Vec::with_capacity(g_prev.len());
        for (i, g) in spec.events.iter().enumerate() {
            let gb = g(t_new, &y1);
            g_new.push(gb);
            if g_prev[i] > 0.0 && gb <= 0.0 {
                let mut lo = t;
                let mut hi = t_new;
                let mut tmp = vec![0.0; n];
                while (hi - lo).abs() > o.event_tol {
                    let mid = 0.5 * (lo + hi);
                    interp(&seg, mid, &mut tmp);
                    if g(mid, &tmp) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if hit.is_none_or(|(_, th)| (hi - th) * dir < 0.0) {
                    hit = Some((i, hi));
                }
            }
        }
        let t_stop = hit.map(|(_, th)| th).unwrap_or(t_new);
        while obs_idx < spec.observe_at.len() && (spec.observe_at[obs_idx] - t_stop) * dir <= 0.0 {
            let to = spec.observe_at[obs_idx];
            let mut v = vec![0.0; n];
            if to == t_new {
                v.copy_from_slice(&y1);
            } else {
                interp(&seg, to, &mut v);
            }
            observed.push((to, v));
            obs_idx += 1;
        }
        if let Some((i, th)) = hit {
            let mut ye = vec![0.0; n];
            interp(&seg, th, &mut ye);
            if spec.keep_dense {
                segs.push(seg);
            }
            return finish(th, ye, Stop::Event { index: i, t: th }, segs, observed, accepted, rejected, nfev, spec.keep_dense);
        }
        if spec.keep_dense {
            segs.push(seg);
        }
        g_prev = g_new;
        t = t_new;
        std::mem::swap(&mut y, &mut y1);
        std::mem::swap(&mut k1, &mut k7);
        if let Some(hook) = spec.hook.as_mut() {
            if !hook(t, &y) {
                return finish(t, y, Stop::Halted { t }, segs, observed, accepted, rejected, nfev, spec.keep_dense);
            }
        }
        if last {
            return finish(t, y, Stop::Reached, segs, observed, accepted, rejected, nfev, spec.keep_dense);
        }
        let mut fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        if last_reject {
            fac = fac.min(1.0);
        }
        last_reject = false;
        h = (h * fac).min(o.h_max);
    }
}
