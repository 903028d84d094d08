use super::{Counted, OptimResult, OptimizerConfig};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central differences with step `1e-6 · (1 + |x_i|)`; falls back to a
/// one-sided difference when one side is infeasible.
fn gradient<F: FnMut(&[f64]) -> f64>(obj: &mut Counted<F>, x: &[f64], fx: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let fp = obj.eval(&probe);
        probe[i] = x[i] - h;
        let fm = obj.eval(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

pub(super) fn run<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    cfg: &OptimizerConfig,
) -> OptimResult {
    let n = x0.len();
    let budget = cfg.budget(n);
    let mut x = x0.to_vec();
    let mut fx = f0;
    // inverse Hessian approximation, row-major
    let mut h = identity(n);
    let mut fresh_h = true;
    let mut converged = false;

    if obj.evals + 2 * n > budget {
        return OptimResult { x_min: x, f_min: fx, evals: obj.evals, converged };
    }
    let mut g = gradient(obj, &x, fx);
    loop {
        if g.iter().all(|v| v.abs() < cfg.f_tol) {
            converged = true;
            break;
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            h = identity(n);
            fresh_h = true;
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        // keep the first trial step commensurate with the problem scale
        let pnorm = dot(&p, &p).sqrt();
        let mut t = if fresh_h { (1.0 / pnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            if obj.evals >= budget {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + t * pi).collect();
            let ft = obj.eval(&trial);
            if ft.is_finite() && ft <= fx + ARMIJO * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh_h {
                break;
            }
            h = identity(n);
            fresh_h = true;
            continue;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let df = fx - f_new;
        x = x_new;
        fx = f_new;
        if step < cfg.x_tol || df <= cfg.f_tol * (fx.abs() + cfg.f_tol) {
            converged = true;
            break;
        }
        if obj.evals + 2 * n > budget {
            break;
        }
        let g_new = gradient(obj, &x, fx);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh_h {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh_h = false;
        }
        g = g_new;
    }
    OptimResult { x_min: x, f_min: fx, evals: obj.evals, converged }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
