//! Small dense BFGS with Armijo backtracking, used for both the circuit
//! angles (analytic parameter-shift gradient) and the orbital-rotation
//! generator (central finite differences). Plain gradient descent is kept as
//! an alternative behind [`Method::GradientDescent`].

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bfgs,
    GradientDescent,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iter: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub grad_tol: f64,
    pub method: Method,
}

impl Default for Options {
    fn default() -> Self {
        Options { max_iter: 500, grad_tol: 1e-7, method: Method::Bfgs }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimize `f` from `x0`. Monotone: the returned point is the best value
/// seen, so the result never exceeds f(x0).
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    opts: &Options,
) -> Minimum {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    let mut g = DVector::from_vec(grad(x.as_slice()));
    let mut h_inv = DMatrix::<f64>::identity(n, n);

    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut best_g = g.amax();
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let g_norm = g.amax();
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
            best_g = g_norm;
        }
        if g_norm < opts.grad_tol {
            return Minimum {
                x: x.as_slice().to_vec(),
                value: fx,
                grad_inf_norm: g_norm,
                converged: true,
                iterations,
            };
        }

        let direction = match opts.method {
            Method::Bfgs => -(&h_inv * &g),
            Method::GradientDescent => -g.clone(),
        };
        let slope = direction.dot(&g);
        let direction = if slope >= 0.0 {
            // Not a descent direction (stale curvature); reset.
            h_inv = DMatrix::identity(n, n);
            -g.clone()
        } else {
            direction
        };
        let slope = direction.dot(&g);

        // Armijo backtracking.
        let mut step = 1.0;
        let mut x_new = &x + &direction * step;
        let mut f_new = f(x_new.as_slice());
        let mut backtracks = 0;
        while f_new > fx + 1e-4 * step * slope && backtracks < 40 {
            step *= 0.5;
            x_new = &x + &direction * step;
            f_new = f(x_new.as_slice());
            backtracks += 1;
        }
        if backtracks == 40 && f_new > fx {
            // Line search failed; gradient is as small as the landscape allows.
            break;
        }

        let g_new = DVector::from_vec(grad(x_new.as_slice()));
        if opts.method == Method::Bfgs {
            let s = &x_new - &x;
            let y = &g_new - &g;
            let sy = s.dot(&y);
            if sy > 1e-12 {
                let rho = 1.0 / sy;
                let identity = DMatrix::<f64>::identity(n, n);
                let left = &identity - (&s * y.transpose()) * rho;
                let right = &identity - (&y * s.transpose()) * rho;
                h_inv = &left * h_inv * &right + (&s * s.transpose()) * rho;
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    if fx < best_f {
        best_f = fx;
        best_x = x.clone();
        best_g = g.amax();
    }
    Minimum {
        x: best_x.as_slice().to_vec(),
        value: best_f,
        grad_inf_norm: best_g,
        converged: best_g < opts.grad_tol,
        iterations,
    }
}

/// Central-difference gradient with a fixed step.
pub fn central_difference_grad(
    mut f: impl FnMut(&[f64]) -> f64,
    x: &[f64],
    step: f64,
) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = f(&probe);
        probe[i] = x[i] - step;
        let down = f(&probe);
        probe[i] = x[i];
        grad.push((up - down) / (2.0 * step));
    }
    grad
}
