//! One-dimensional golden-section search and a small Nelder–Mead simplex.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimize a unimodal `f` on `[lo, hi]` to within `tol` in the argument.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Derivative-free Nelder–Mead minimization.
pub struct NelderMead {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iter: 2000, x_tol: 1e-8, f_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, start: &[f64], step: f64) -> Result<SimplexOutcome> {
        let n = start.len();
        if n == 0 {
            return Err(Error::Domain("empty start point".into()));
        }
        let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
        for i in 0..n {
            let mut v = start.to_vec();
            v[i] += if v[i] != 0.0 { step * v[i].abs() } else { step };
            simplex.push(v);
        }
        let mut fv: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap());
            let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
            let ordered_f: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
            simplex = ordered;
            fv = ordered_f;

            let spread = fv[n] - fv[0];
            let xspread = simplex[1..]
                .iter()
                .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if spread.abs() < self.f_tol && xspread < self.x_tol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|x| x[k]).sum::<f64>() / n as f64)
                .collect();
            let reflect: Vec<f64> =
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + alpha * (c - w)).collect();
            let fr = f(&reflect);
            if fr < fv[0] {
                let expand: Vec<f64> =
                    centroid.iter().zip(&reflect).map(|(c, r)| c + gamma * (r - c)).collect();
                let fe = f(&expand);
                if fe < fr {
                    simplex[n] = expand;
                    fv[n] = fe;
                } else {
                    simplex[n] = reflect;
                    fv[n] = fr;
                }
            } else if fr < fv[n - 1] {
                simplex[n] = reflect;
                fv[n] = fr;
            } else {
                let contract: Vec<f64> =
                    centroid.iter().zip(&simplex[n]).map(|(c, w)| c + rho * (w - c)).collect();
                let fc = f(&contract);
                if fc < fv[n] {
                    simplex[n] = contract;
                    fv[n] = fc;
                } else {
                    let best = simplex[0].clone();
                    for v in simplex[1..].iter_mut() {
                        for (x, b) in v.iter_mut().zip(&best) {
                            *x = b + sigma * (*x - b);
                        }
                    }
                    for (i, v) in simplex.iter().enumerate().skip(1) {
                        fv[i] = f(v);
                    }
                }
            }
        }
        Ok(SimplexOutcome { x: simplex[0].clone(), f: fv[0], iterations, converged })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_quadratic() {
        let (x, _) = golden_section_min(|x| (x - 2.5) * (x - 2.5), 0.0, 10.0, 1e-8);
        assert!((x - 2.5).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = NelderMead { max_iter: 5000, ..Default::default() }
            .minimize(f, &[-1.2, 1.0], 0.1)
            .unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4, "{:?}", out.x);
    }
}
