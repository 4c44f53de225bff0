//! Powell's conjugate-direction method with Brent line searches.
//!
//! The iteration follows the classic formulation: line-minimize along each
//! direction of the set, then try the extrapolated point and, when the
//! curvature test allows it, replace the direction of largest decrease with
//! the net displacement of the sweep. The objective may be stochastic, so the
//! best evaluated point is tracked separately and returned.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowellOptions {
    pub maxfev: usize,
    /// Max-norm parameter change per sweep below which the search stops.
    /// Line searches use `100 · xtol` as their relative tolerance.
    pub xtol: f64,
    /// Relative decrease per sweep below which the search stops.
    pub ftol: f64,
    /// Defaults to `1000 · dim`.
    pub maxiter: Option<usize>,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self {
            maxfev: 10_000,
            xtol: 1e-4,
            ftol: 1e-4,
            maxiter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ParameterTolerance,
    FunctionTolerance,
    MaxFev,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowellResult {
    /// Best evaluated point.
    pub x: Vec<f64>,
    pub fun: f64,
    pub nfev: usize,
    pub iterations: usize,
    pub termination: Termination,
}

struct Exhausted;

struct Budgeted<F> {
    f: F,
    nfev: usize,
    maxfev: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64, Exhausted> {
        if self.nfev >= self.maxfev {
            return Err(Exhausted);
        }
        self.nfev += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best_f || self.best_x.is_empty() {
            self.best_f = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        Ok(v)
    }
}

const GOLD: f64 = 1.618034;
const GROW_LIMIT: f64 = 110.0;
const VERY_SMALL: f64 = 1e-21;
const CGOLD: f64 = 0.381_966_0;
const MINTOL: f64 = 1e-11;
const BRENT_MAXITER: usize = 500;
const BRACKET_MAXITER: usize = 1000;

/// Minimizes `f` starting at `x0`. Never fails; on budget exhaustion the best
/// point seen so far is returned.
pub fn powell_minimize<F>(f: F, x0: &[f64], opts: &PowellOptions) -> PowellResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut ev = Budgeted {
        f,
        nfev: 0,
        maxfev: opts.maxfev,
        best_x: Vec::new(),
        best_f: f64::INFINITY,
    };
    let mut iterations = 0;
    let termination = match run(&mut ev, x0, opts, &mut iterations) {
        Ok(t) => t,
        Err(Exhausted) => Termination::MaxFev,
    };
    if ev.best_x.is_empty() {
        ev.best_x = x0.to_vec();
    }
    PowellResult {
        x: ev.best_x,
        fun: ev.best_f,
        nfev: ev.nfev,
        iterations,
        termination,
    }
}

fn run<F: FnMut(&[f64]) -> f64>(
    ev: &mut Budgeted<F>,
    x0: &[f64],
    opts: &PowellOptions,
    iterations: &mut usize,
) -> Result<Termination, Exhausted> {
    let n = x0.len();
    let maxiter = opts.maxiter.unwrap_or(1000 * n.max(1));
    let line_tol = opts.xtol * 100.0;
    let mut direc: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut x = x0.to_vec();
    let mut fval = ev.eval(&x)?;
    let mut x1 = x.clone();

    loop {
        let fx = fval;
        let mut bigind = 0;
        let mut delta = 0.0;
        for (i, d) in direc.iter().enumerate() {
            let fx2 = fval;
            let (f_new, x_new, _) = line_search(ev, &x, d, line_tol)?;
            fval = f_new;
            x = x_new;
            if fx2 - fval > delta {
                delta = fx2 - fval;
                bigind = i;
            }
        }
        *iterations += 1;

        let bnd = opts.ftol * (fx.abs() + fval.abs()) + 1e-20;
        if 2.0 * (fx - fval) <= bnd {
            return Ok(Termination::FunctionTolerance);
        }
        let moved = x.iter().zip(&x1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved < opts.xtol {
            return Ok(Termination::ParameterTolerance);
        }
        if ev.nfev >= ev.maxfev {
            return Err(Exhausted);
        }
        if *iterations >= maxiter {
            return Ok(Termination::MaxIter);
        }

        let step: Vec<f64> = x.iter().zip(&x1).map(|(a, b)| a - b).collect();
        x1.clone_from(&x);
        let x2: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
        let fx2 = ev.eval(&x2)?;
        if fx > fx2 {
            let mut t = 2.0 * (fx + fx2 - 2.0 * fval);
            let temp = fx - fval - delta;
            t *= temp * temp;
            let temp = fx - fx2;
            t -= delta * temp * temp;
            if t < 0.0 {
                let (f_new, x_new, taken) = line_search(ev, &x, &step, line_tol)?;
                fval = f_new;
                x = x_new;
                if taken.iter().any(|&s| s != 0.0) {
                    direc[bigind] = direc[n - 1].clone();
                    direc[n - 1] = taken;
                }
            }
        }
    }
}

/// Minimizes along `x + a·dir`; returns `(f, x + a*·dir, a*·dir)`.
fn line_search<F: FnMut(&[f64]) -> f64>(
    ev: &mut Budgeted<F>,
    x: &[f64],
    dir: &[f64],
    tol: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>), Exhausted> {
    let mut point = vec![0.0; x.len()];
    let mut along = |a: f64, ev: &mut Budgeted<F>| {
        for ((p, xi), di) in point.iter_mut().zip(x).zip(dir) {
            *p = xi + a * di;
        }
        ev.eval(&point)
    };
    let br = bracket(&mut |a| along(a, ev))?;
    let (a_min, f_min) = brent(&mut |a| along(a, ev), br, tol)?;
    let taken: Vec<f64> = dir.iter().map(|d| a_min * d).collect();
    let x_new = x.iter().zip(&taken).map(|(a, b)| a + b).collect();
    Ok((f_min, x_new, taken))
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    xa: f64,
    xb: f64,
    xc: f64,
    fb: f64,
}

fn bracket(f: &mut impl FnMut(f64) -> Result<f64, Exhausted>) -> Result<Bracket, Exhausted> {
    let (mut xa, mut xb) = (0.0, 1.0);
    let mut fa = f(xa)?;
    let mut fb = f(xb)?;
    if fa < fb {
        std::mem::swap(&mut xa, &mut xb);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut xc = xb + GOLD * (xb - xa);
    let mut fc = f(xc)?;
    let mut iter = 0;
    while fc < fb {
        let tmp1 = (xb - xa) * (fb - fc);
        let tmp2 = (xb - xc) * (fb - fa);
        let val = tmp2 - tmp1;
        let denom = if val.abs() < VERY_SMALL { 2.0 * VERY_SMALL } else { 2.0 * val };
        let mut w = xb - ((xb - xc) * tmp2 - (xb - xa) * tmp1) / denom;
        let wlim = xb + GROW_LIMIT * (xc - xb);
        if iter > BRACKET_MAXITER {
            break;
        }
        iter += 1;
        let mut fw;
        if (w - xc) * (xb - w) > 0.0 {
            fw = f(w)?;
            if fw < fc {
                xa = xb;
                xb = w;
                fb = fw;
                break;
            } else if fw > fb {
                xc = w;
                break;
            }
            w = xc + GOLD * (xc - xb);
            fw = f(w)?;
        } else if (w - wlim) * (wlim - xc) >= 0.0 {
            w = wlim;
            fw = f(w)?;
        } else if (w - wlim) * (xc - w) > 0.0 {
            fw = f(w)?;
            if fw < fc {
                xb = xc;
                xc = w;
                w = xc + GOLD * (xc - xb);
                fb = fc;
                fc = fw;
                fw = f(w)?;
            }
        } else {
            w = xc + GOLD * (xc - xb);
            fw = f(w)?;
        }
        xa = xb;
        xb = xc;
        xc = w;
        fa = fb;
        fb = fc;
        fc = fw;
    }
    Ok(Bracket { xa, xb, xc, fb })
}

fn brent(
    f: &mut impl FnMut(f64) -> Result<f64, Exhausted>,
    br: Bracket,
    tol: f64,
) -> Result<(f64, f64), Exhausted> {
    let (mut a, mut b) = if br.xa < br.xc { (br.xa, br.xc) } else { (br.xc, br.xa) };
    let (mut x, mut w, mut v) = (br.xb, br.xb, br.xb);
    let (mut fx, mut fw, mut fv) = (br.fb, br.fb, br.fb);
    let mut deltax: f64 = 0.0;
    let mut rat: f64 = 0.0;
    for _ in 0..BRENT_MAXITER {
        let tol1 = tol * x.abs() + MINTOL;
        let tol2 = 2.0 * tol1;
        let xmid = 0.5 * (a + b);
        if (x - xmid).abs() < tol2 - 0.5 * (b - a) {
            break;
        }
        if deltax.abs() <= tol1 {
            deltax = if x >= xmid { a - x } else { b - x };
            rat = CGOLD * deltax;
        } else {
            let tmp1 = (x - w) * (fx - fv);
            let mut tmp2 = (x - v) * (fx - fw);
            let mut p = (x - v) * tmp2 - (x - w) * tmp1;
            tmp2 = 2.0 * (tmp2 - tmp1);
            if tmp2 > 0.0 {
                p = -p;
            }
            tmp2 = tmp2.abs();
            let dx_temp = deltax;
            deltax = rat;
            if p > tmp2 * (a - x) && p < tmp2 * (b - x) && p.abs() < (0.5 * tmp2 * dx_temp).abs() {
                rat = p / tmp2;
                let u = x + rat;
                if (u - a) < tol2 || (b - u) < tol2 {
                    rat = if xmid - x >= 0.0 { tol1 } else { -tol1 };
                }
            } else {
                deltax = if x >= xmid { a - x } else { b - x };
                rat = CGOLD * deltax;
            }
        }
        let u = if rat.abs() < tol1 {
            if rat >= 0.0 { x + tol1 } else { x - tol1 }
        } else {
            x + rat
        };
        let fu = f(u)?;
        if fu > fx {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        } else {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r = powell_minimize(|t| (t[0] - 2.0).powi(2), &[0.0], &PowellOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-3, "{r:?}");
        assert!(r.nfev <= 10_000);
    }

    #[test]
    fn constant_function_stops_after_one_sweep() {
        let r = powell_minimize(|_| 3.0, &[0.5, -1.0], &PowellOptions::default());
        assert_eq!(r.x, vec![0.5, -1.0]);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.termination, Termination::FunctionTolerance);
    }

    #[test]
    fn single_evaluation_budget() {
        let opts = PowellOptions {
            maxfev: 1,
            ..PowellOptions::default()
        };
        let r = powell_minimize(|t| t[0] * t[0], &[4.0], &opts);
        assert_eq!(r.nfev, 1);
        assert_eq!(r.x, vec![4.0]);
        assert_eq!(r.termination, Termination::MaxFev);
    }

    #[test]
    fn budget_is_never_exceeded() {
        let mut calls = 0;
        let opts = PowellOptions {
            maxfev: 37,
            ..PowellOptions::default()
        };
        let r = powell_minimize(
            |t| {
                calls += 1;
                (t[0] - 1.0).powi(2) + 10.0 * (t[1] + t[0]).powi(2) + (t[2] * 3.0).sin()
            },
            &[3.0, 3.0, 0.3],
            &opts,
        );
        assert_eq!(r.nfev, 37);
        assert_eq!(calls, 37);
    }

    #[test]
    fn rotated_quadratic_converges() {
        let f = |t: &[f64]| {
            let (u, v) = (t[0] + t[1] - 3.0, t[0] - 2.0 * t[1] + 1.0);
            4.0 * u * u + v * v
        };
        // minimum where u = v = 0: x = 5/3, y = 4/3
        let r = powell_minimize(f, &[0.0, 0.0], &PowellOptions::default());
        assert!((r.x[0] - 5.0 / 3.0).abs() < 1e-3, "{r:?}");
        assert!((r.x[1] - 4.0 / 3.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn best_seen_survives_noise() {
        // Returned value is the minimum over all evaluations.
        let mut seen = Vec::new();
        let mut k = 0u64;
        let r = powell_minimize(
            |t| {
                k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let noise = (k >> 40) as f64 / (1u64 << 24) as f64 - 0.5;
                let v = t[0] * t[0] + noise;
                seen.push(v);
                v
            },
            &[1.0],
            &PowellOptions {
                maxfev: 200,
                ..PowellOptions::default()
            },
        );
        let min = seen.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.fun, min);
    }
}
