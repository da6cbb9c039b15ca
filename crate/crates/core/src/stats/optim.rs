/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
    pub step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            x_tol: 1e-8,
            f_tol: 1e-8,
            max_iter: 5000,
            step: 1.0,
        }
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Stops when both the simplex diameter and the
    /// spread of vertex values fall below tolerance.
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let d = x0.len();
        if d == 0 {
            let v = f(x0);
            return Minimum {
                x: vec![],
                f: v,
                iterations: 0,
                converged: true,
                trace: vec![v],
            };
        }
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..d {
            let mut v = x0.to_vec();
            v[i] += self.step;
            let fv = eval(&v);
            simplex.push((v, fv));
        }
        let mut trace = Vec::new();
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        for it in 0..self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            trace.push(simplex[0].1);
            let diameter = simplex[1..]
                .iter()
                .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let spread = simplex[d].1 - simplex[0].1;
            if diameter <= self.x_tol && spread <= self.f_tol * (1.0 + simplex[0].1.abs()) {
                return Minimum {
                    x: simplex[0].0.clone(),
                    f: simplex[0].1,
                    iterations: it,
                    converged: true,
                    trace,
                };
            }
            let mut centroid = vec![0.0; d];
            for (v, _) in &simplex[..d] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / d as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (w - c)).collect()
            };
            let xr = along(-alpha);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(-gamma);
                let fe = eval(&xe);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[d].1 {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                for (x, b) in v.iter_mut().zip(&best) {
                    *x = b + sigma * (*x - b);
                }
                *fv = eval(v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        Minimum {
            x: simplex[0].0.clone(),
            f: simplex[0].1,
            iterations: self.max_iter,
            converged: false,
            trace,
        }
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
