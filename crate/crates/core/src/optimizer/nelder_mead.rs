use super::{Counted, OptimResult, OptimizerConfig};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn affine(c: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    // c + t (d − c)
    c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect()
}

/// Nelder–Mead with restarts: a converged simplex is rebuilt around its best
/// vertex until a restart no longer improves the objective, since simplices
/// in a dozen or more dimensions often collapse short of the minimum.
pub(super) fn run<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    cfg: &OptimizerConfig,
) -> OptimResult {
    let budget = cfg.budget(x0.len());
    let mut res = search(obj, x0, f0, cfg, budget);
    while res.converged {
        let prev = res.f_min;
        let next = search(obj, &res.x_min, prev, cfg, budget);
        let improved = prev - next.f_min > cfg.f_tol * (prev.abs() + cfg.f_tol);
        // a restart cut short by the budget still leaves a converged point
        res = OptimResult { converged: true, ..next };
        if !improved {
            break;
        }
    }
    res
}

fn search<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    cfg: &OptimizerConfig,
    budget: usize,
) -> OptimResult {
    let n = x0.len();
    let mut simplex = Vec::with_capacity(n + 1);
    simplex.push(Vertex { x: x0.to_vec(), f: f0 });
    for i in 0..n {
        if obj.evals >= budget {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += (cfg.simplex_init_step * x0[i].abs()).max(cfg.simplex_init_step);
        let f = obj.eval(&x);
        simplex.push(Vertex { x, f });
    }
    if simplex.len() < n + 1 {
        return OptimResult { x_min: x0.to_vec(), f_min: f0, evals: obj.evals, converged: false };
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let best = &simplex[0];
        let worst_f = simplex[n].f;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < cfg.x_tol || worst_f - best.f <= cfg.f_tol * (best.f.abs() + cfg.f_tol) {
            converged = true;
            break;
        }
        if obj.evals >= budget {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let worst = &simplex[n].x;
        let xr = affine(&centroid, worst, -REFLECT);
        let fr = obj.eval(&xr);

        if fr < simplex[0].f {
            if obj.evals >= budget {
                simplex[n] = Vertex { x: xr, f: fr };
                continue;
            }
            let xe = affine(&centroid, worst, -EXPAND);
            let fe = obj.eval(&xe);
            simplex[n] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
            continue;
        }
        if fr < simplex[n - 1].f {
            simplex[n] = Vertex { x: xr, f: fr };
            continue;
        }
        if obj.evals >= budget {
            if fr < simplex[n].f {
                simplex[n] = Vertex { x: xr, f: fr };
            }
            continue;
        }
        let (xc, fc, accept) = if fr < simplex[n].f {
            let xc = affine(&centroid, &xr, CONTRACT);
            let fc = obj.eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = affine(&centroid, worst, CONTRACT);
            let fc = obj.eval(&xc);
            let ok = fc < simplex[n].f;
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = Vertex { x: xc, f: fc };
            continue;
        }
        // shrink toward the best vertex
        let bx = simplex[0].x.clone();
        for v in simplex.iter_mut().skip(1) {
            if obj.evals >= budget {
                break;
            }
            v.x = affine(&bx, &v.x, SHRINK);
            v.f = obj.eval(&v.x);
        }
    }
    let best = simplex.swap_remove(0);
    OptimResult { x_min: best.x, f_min: best.f, evals: obj.evals, converged }
}
