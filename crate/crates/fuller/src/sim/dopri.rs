//! Dormand-Prince 5(4) with the 4th-order continuous extension of Hairer,
//! Nørsett and Wanner. All coefficients are formed from exact ratios in the
//! working precision, so the stepper stays accurate in [`Extended`].
//!
//! [`Extended`]: crate::real::Extended

use crate::error::{Error, Result};
use crate::real::Real;

const STAGES: usize = 7;

#[derive(Clone, Debug)]
struct Tableau<T> {
    /// Stage matrix; its last row doubles as the 5th-order weights, and the
    /// system is autonomous, so the nodes `c` are never needed.
    a: [[T; STAGES]; STAGES],
    /// `b - b_hat`
    e: [T; STAGES],
    d: [T; STAGES],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let r = |p: i64, q: i64| T::frac(p, q);
        let z = T::zero;
        Tableau {
            a: [
                [z(), z(), z(), z(), z(), z(), z()],
                [r(1, 5), z(), z(), z(), z(), z(), z()],
                [r(3, 40), r(9, 40), z(), z(), z(), z(), z()],
                [r(44, 45), r(-56, 15), r(32, 9), z(), z(), z(), z()],
                [
                    r(19372, 6561),
                    r(-25360, 2187),
                    r(64448, 6561),
                    r(-212, 729),
                    z(),
                    z(),
                    z(),
                ],
                [
                    r(9017, 3168),
                    r(-355, 33),
                    r(46732, 5247),
                    r(49, 176),
                    r(-5103, 18656),
                    z(),
                    z(),
                ],
                [
                    r(35, 384),
                    z(),
                    r(500, 1113),
                    r(125, 192),
                    r(-2187, 6784),
                    r(11, 84),
                    z(),
                ],
            ],
            e: [
                r(71, 57600),
                z(),
                r(-71, 16695),
                r(71, 1920),
                r(-17253, 339200),
                r(22, 525),
                r(-1, 40),
            ],
            d: [
                r(-12715105075, 11282082432),
                z(),
                r(87487479700, 32700410799),
                r(-10690763975, 1880347072),
                r(701980252875, 199316789632),
                r(-1453857185, 822651844),
                r(69997945, 29380423),
            ],
        }
    }
}

/// Interpolant over one accepted step `[t0, t0 + h]`.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub t0: T,
    pub h: T,
    r: [Vec<T>; 5],
}

impl<T: Real> Dense<T> {
    pub fn t1(&self) -> T {
        self.t0.clone() + self.h.clone()
    }

    /// State at `t0 + theta h`, `theta` in `[0, 1]`.
    pub fn at_theta(&self, theta: &T) -> Vec<T> {
        let th1 = T::one() - theta.clone();
        (0..self.r[0].len())
            .map(|i| {
                let inner = self.r[3][i].clone() + th1.clone() * self.r[4][i].clone();
                let inner = self.r[2][i].clone() + theta.clone() * inner;
                let inner = self.r[1][i].clone() + th1.clone() * inner;
                self.r[0][i].clone() + theta.clone() * inner
            })
            .collect()
    }

    pub fn at(&self, t: &T) -> Vec<T> {
        let theta = (t.clone() - self.t0.clone()) / self.h.clone();
        self.at_theta(&theta)
    }
}

#[derive(Clone, Debug)]
pub struct Step<T> {
    pub y1: Vec<T>,
    /// Derivative at the new point (first stage of the next step).
    pub k_end: Vec<T>,
    /// Scaled RMS error; the step is acceptable when `<= 1`.
    pub err: f64,
    pub dense: Dense<T>,
}

#[derive(Clone, Debug)]
pub struct Dopri5<T> {
    tab: Tableau<T>,
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
}

impl<T: Real> Dopri5<T> {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            tab: Tableau::new(),
            rtol,
            atol,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
        }
    }

    /// One trial step of size `h` from `(t, y)` with `k1 = f(y)`.
    pub fn step<F>(&self, f: &F, t: &T, y: &[T], k1: &[T], h: &T) -> Step<T>
    where
        F: Fn(&[T], &mut [T]),
    {
        let n = y.len();
        let tab = &self.tab;
        let mut k: Vec<Vec<T>> = Vec::with_capacity(STAGES);
        k.push(k1.to_vec());
        let mut ytmp = vec![T::zero(); n];
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    if tab.a[s][j] != T::zero() {
                        acc = acc + tab.a[s][j].clone() * kj[i].clone();
                    }
                }
                ytmp[i] = y[i].clone() + h.clone() * acc;
            }
            let mut ks = vec![T::zero(); n];
            f(&ytmp, &mut ks);
            k.push(ks);
        }
        // The last stage is evaluated at y1 itself (FSAL).
        let y1 = ytmp;
        let mut sq = 0.0;
        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                e = e + tab.e[j].clone() * kj[i].clone();
            }
            let e = (h.clone() * e).abs();
            let sc = T::from_f64(self.atol)
                + T::from_f64(self.rtol) * y[i].abs().max(y1[i].abs());
            let ratio = (e / sc).to_f64();
            sq += ratio * ratio;
        }
        let err = (sq / n.max(1) as f64).sqrt();

        let mut r: [Vec<T>; 5] = Default::default();
        r[0] = y.to_vec();
        r[1] = Vec::with_capacity(n);
        r[2] = Vec::with_capacity(n);
        r[3] = Vec::with_capacity(n);
        r[4] = Vec::with_capacity(n);
        for i in 0..n {
            let ydiff = y1[i].clone() - y[i].clone();
            let bspl = h.clone() * k[0][i].clone() - ydiff.clone();
            let mut dd = T::zero();
            for (j, kj) in k.iter().enumerate() {
                if tab.d[j] != T::zero() {
                    dd = dd + tab.d[j].clone() * kj[i].clone();
                }
            }
            r[3].push(ydiff.clone() - h.clone() * k[6][i].clone() - bspl.clone());
            r[1].push(ydiff);
            r[2].push(bspl);
            r[4].push(h.clone() * dd);
        }
        let k_end = k.pop().expect("seven stages");
        Step {
            y1: y1.clone(),
            k_end,
            err,
            dense: Dense {
                t0: t.clone(),
                h: h.clone(),
                r,
            },
        }
    }

    /// Multiplier for the next step size given an error estimate.
    pub fn factor(&self, err: f64) -> f64 {
        if err == 0.0 {
            return self.fac_max;
        }
        (self.safety * err.powf(-0.2)).clamp(self.fac_min, self.fac_max)
    }

    /// Adaptive integration of an autonomous system from `t0` to `t1 > t0`.
    pub fn integrate<F>(&self, f: &F, t0: &T, y0: &[T], t1: &T, h0: f64) -> Result<Vec<T>>
    where
        F: Fn(&[T], &mut [T]),
    {
        let mut t = t0.clone();
        let mut y = y0.to_vec();
        let mut k1 = vec![T::zero(); y.len()];
        f(&y, &mut k1);
        let mut h = T::from_f64(h0);
        let span = (t1.clone() - t0.clone()).to_f64();
        let h_min = span.abs() * 1e-14;
        while t < *t1 {
            let rem = t1.clone() - t.clone();
            let last = h >= rem;
            let hh = if last { rem } else { h.clone() };
            let st = self.step(f, &t, &y, &k1, &hh);
            if st.err <= 1.0 {
                t = if last { t1.clone() } else { t + hh.clone() };
                y = st.y1;
                k1 = st.k_end;
            }
            let mut fac = self.factor(st.err);
            if st.err > 1.0 {
                fac = fac.min(1.0);
            }
            h = hh * T::from_f64(fac);
            if h.to_f64() < h_min {
                return Err(Error::StepUnderflow { t: t.to_f64() });
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Extended;

    #[test]
    fn exponential_decay() {
        let rk = Dopri5::<f64>::new(1e-10, 1e-10);
        let f = |y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let y = rk.integrate(&f, &0.0, &[1.0], &2.0, 0.1).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let rk = Dopri5::<f64>::new(1e-11, 1e-11);
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let y = rk.integrate(&f, &0.0, &[1.0, 0.0], &two_pi, 0.1).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn dense_output_is_exact_on_quartics() {
        // y' = (1, 4 t^3) written autonomously: y = (t, t^4)
        let rk = Dopri5::<f64>::new(1e-8, 1e-8);
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            dy[1] = 4.0 * y[0].powi(3);
        };
        let y0 = [0.5, 0.0625];
        let mut k1 = [0.0; 2];
        f(&y0, &mut k1);
        let st = rk.step(&f, &0.5, &y0, &k1, &0.5);
        assert!((st.y1[1] - 1.0).abs() < 1e-14);
        for k in 0..=8 {
            let th = k as f64 / 8.0;
            let t = 0.5 + 0.5 * th;
            let v = st.dense.at_theta(&th);
            assert!((v[0] - t).abs() < 1e-14);
            assert!((v[1] - t.powi(4)).abs() < 1e-14, "theta {th}");
        }
    }

    #[test]
    fn extended_precision_step() {
        let rk = Dopri5::<Extended>::new(1e-22, 1e-22);
        let f = |y: &[Extended], dy: &mut [Extended]| dy[0] = y[0].clone();
        let y = rk
            .integrate(
                &f,
                &Extended::zero(),
                &[Extended::one()],
                &Extended::one(),
                1e-3,
            )
            .unwrap();
        let e = Extended::from_ratio(&crate::algebra::parse_rational(
            "2718281828459045235360287471352662497757/1000000000000000000000000000000000000000",
        ).unwrap());
        assert!((y[0].clone() - e).abs().to_f64() < 1e-19);
    }
}
