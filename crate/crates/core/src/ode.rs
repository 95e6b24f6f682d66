//! Dormand–Prince 8(5,3) with PI step-size control.
//!
//! Steps land exactly on the requested output grid. An optional projection
//! runs after every accepted step; an optional event function aborts the
//! integration at a sign change (located by bisection).

use crate::error::{Error, Result};

const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

const A: [&[f64]; 12] = [
    &[],
    &[5.26001519587677318785587544488E-2],
    &[1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2],
    &[2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2],
    &[
        2.41365134159266685502369798665E-1,
        0.0,
        -8.84549479328286085344864962717E-1,
        9.24834003261792003115737966543E-1,
    ],
    &[
        3.7037037037037037037037037037E-2,
        0.0,
        0.0,
        1.70828608729473871279604482173E-1,
        1.25467687566822425016691814123E-1,
    ],
    &[
        3.7109375E-2,
        0.0,
        0.0,
        1.70252211019544039314978060272E-1,
        6.02165389804559606850219397283E-2,
        -1.7578125E-2,
    ],
    &[
        3.70920001185047927108779319836E-2,
        0.0,
        0.0,
        1.70383925712239993810214054705E-1,
        1.07262030446373284651809199168E-1,
        -1.53194377486244017527936158236E-2,
        8.27378916381402288758473766002E-3,
    ],
    &[
        6.24110958716075717114429577812E-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825E0,
        -8.68219346841726006818189891453E-1,
        2.75920996994467083049415600797E1,
        2.01540675504778934086186788979E1,
        -4.34898841810699588477366255144E1,
    ],
    &[
        4.77662536438264365890433908527E-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468E0,
        -5.90290826836842996371446475743E-1,
        2.12300514481811942347288949897E1,
        1.52792336328824235832596922938E1,
        -3.32882109689848629194453265587E1,
        -2.03312017085086261358222928593E-2,
    ],
    &[
        -9.3714243008598732571704021658E-1,
        0.0,
        0.0,
        5.18637242884406370830023853209E0,
        1.09143734899672957818500254654E0,
        -8.14978701074692612513997267357E0,
        -1.85200656599969598641566180701E1,
        2.27394870993505042818970056734E1,
        2.49360555267965238987089396762E0,
        -3.0467644718982195003823669022E0,
    ],
    &[
        2.27331014751653820792359768449E0,
        0.0,
        0.0,
        -1.05344954667372501984066689879E1,
        -2.00087205822486249909675718444E0,
        -1.79589318631187989172765950534E1,
        2.79488845294199600508499808837E1,
        -2.85899827713502369474065508674E0,
        -8.87285693353062954433549289258E0,
        1.23605671757943030647266201528E1,
        6.43392746015763530355970484046E-1,
    ],
];

const B: [f64; 12] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

const E: [f64; 12] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-12,
            h_init: 1e-2,
            h_min: 1e-12,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

/// One DOP853 step: returns (y_new, normalized error).
pub fn dop853_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, opts: &OdeOptions) -> (Vec<f64>, f64)
where
    F: FnMut(f64, &[f64], &mut [f64]) + ?Sized,
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 12];
    let mut ys = vec![0.0; n];
    f(t, y, &mut k[0]);
    for s in 1..12 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, a) in A[s].iter().enumerate() {
                if *a != 0.0 {
                    acc += a * k[j][i];
                }
            }
            ys[i] = y[i] + h * acc;
        }
        f(t + C[s] * h, &ys, &mut k[s]);
    }
    let mut y_new = vec![0.0; n];
    let mut err = 0.0;
    let mut err2 = 0.0;
    for i in 0..n {
        let bsum: f64 = (0..12).map(|j| B[j] * k[j][i]).sum();
        y_new[i] = y[i] + h * bsum;
        let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        let e5: f64 = (0..12).map(|j| E[j] * k[j][i]).sum();
        let e3 = bsum - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
        err += (e5 / sk).powi(2);
        err2 += (e3 / sk).powi(2);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let e = h.abs() * err * (1.0 / (n as f64 * deno)).sqrt();
    (y_new, e)
}

/// Adaptive integrator state carried between output intervals.
pub struct Integrator<'a, F> {
    pub f: F,
    pub opts: OdeOptions,
    pub project: Option<&'a dyn Fn(&mut [f64])>,
    pub event: Option<&'a dyn Fn(&[f64]) -> f64>,
    h: f64,
    facold: f64,
    steps: usize,
}

impl<'a, F> Integrator<'a, F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(f: F, opts: OdeOptions) -> Self {
        Integrator {
            f,
            opts,
            project: None,
            event: None,
            h: opts.h_init,
            facold: 1e-4,
            steps: 0,
        }
    }

    /// Advance `y` from `t0` to exactly `t1`.
    pub fn advance(&mut self, t0: f64, t1: f64, y: &mut Vec<f64>) -> Result<()> {
        const BETA: f64 = 0.04;
        const SAFE: f64 = 0.9;
        let facc1 = 1.0 / 0.333;
        let facc2 = 1.0 / 6.0;
        let expo1 = 1.0 / 8.0 - BETA * 0.2;
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok(());
        }
        let mut t = t0;
        let mut h = self.h.abs().min(span);
        loop {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-15 * t1.abs().max(1.0) {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            if hs < self.opts.h_min * t.abs().max(1.0) && !last {
                return Err(Error::numerical("stiff/singular control: step size underflow"));
            }
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::numerical("stiff/singular control: too many steps"));
            }
            let (mut y_new, err) = dop853_step(&mut self.f, t, y, dir * hs, &self.opts);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h = hs * 0.1;
                if h < self.opts.h_min {
                    return Err(Error::numerical("stiff/singular control: non-finite state"));
                }
                continue;
            }
            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                let mut fac = fac11 / self.facold.powf(BETA);
                fac = (fac / SAFE).clamp(facc2, facc1);
                self.facold = err.max(1e-4);
                if let Some(p) = self.project {
                    p(&mut y_new);
                }
                let t_new = if last { t1 } else { t + dir * hs };
                if let Some(ev) = self.event {
                    if ev(y).signum() != ev(&y_new).signum() {
                        let tz = self.bisect(ev, t, y, t_new);
                        return Err(Error::domain(format!("singular: y vanishes near t = {tz:.9}")));
                    }
                }
                *y = y_new;
                t = t_new;
                h = hs / fac;
                if !last {
                    self.h = h;
                }
            } else {
                h = hs / (fac11 / SAFE).min(facc1);
                if h < self.opts.h_min {
                    return Err(Error::numerical("stiff/singular control: step size underflow"));
                }
            }
        }
        Ok(())
    }

    fn bisect(&mut self, ev: &dyn Fn(&[f64]) -> f64, t: f64, y: &[f64], t_new: f64) -> f64 {
        let s0 = ev(y).signum();
        let (mut lo, mut hi) = (t, t_new);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (ym, _) = dop853_step(&mut self.f, t, y, mid - t, &self.opts);
            if ev(&ym).signum() == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Integrate over a grid, returning the state at every grid node.
    pub fn run_grid(&mut self, grid: &[f64], y0: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut y = y0.to_vec();
        if let Some(p) = self.project {
            p(&mut y);
        }
        let mut out = Vec::with_capacity(grid.len());
        out.push(y.clone());
        for w in grid.windows(2) {
            self.advance(w[0], w[1], &mut y)?;
            out.push(y.clone());
        }
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Uniform grid with `n` intervals.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let mut it = Integrator::new(f, OdeOptions::with_tol(1e-12));
        let grid = linspace(0.0, 10.0, 10);
        let ys = it.run_grid(&grid, &[1.0, 0.0]).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn eighth_order_convergence() {
        // y' = y, fixed steps: halving h should cut the error by ~2^8
        let mut f = |_t: f64, y: &[f64], d: &mut [f64]| d[0] = y[0];
        let opts = OdeOptions::default();
        let err = |n: usize, f: &mut dyn FnMut(f64, &[f64], &mut [f64])| {
            let h = 1.0 / n as f64;
            let mut y = vec![1.0];
            let mut t = 0.0;
            for _ in 0..n {
                y = dop853_step(f, t, &y, h, &opts).0;
                t += h;
            }
            (y[0] - 1f64.exp()).abs()
        };
        let e1 = err(2, &mut f);
        let e2 = err(4, &mut f);
        assert!(e1 / e2 > 150.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn event_stops_before_zero() {
        let f = |_t: f64, _y: &[f64], d: &mut [f64]| d[0] = -1.0;
        let ev = |y: &[f64]| y[0];
        let mut it = Integrator::new(f, OdeOptions::default());
        it.event = Some(&ev);
        let e = it.run_grid(&[0.0, 2.0], &[1.0]).unwrap_err();
        match e {
            Error::Domain(m) => assert!(m.contains("t = 1.0000000")),
            _ => panic!(),
        }
    }
}
