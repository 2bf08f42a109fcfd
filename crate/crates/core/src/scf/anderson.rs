use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Rolling history of (input, residual) pairs for Anderson mixing.
#[derive(Debug, Clone)]
pub struct AndersonHistory {
    depth: usize,
    inputs: VecDeque<Vec<f64>>,
    residuals: VecDeque<Vec<f64>>,
}

impl AndersonHistory {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            inputs: VecDeque::new(),
            residuals: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.residuals.clear();
    }

    fn push(&mut self, x: Vec<f64>, f: Vec<f64>) {
        if self.depth == 0 {
            return;
        }
        if self.inputs.len() == self.depth {
            self.inputs.pop_front();
            self.residuals.pop_front();
        }
        self.inputs.push_back(x);
        self.residuals.push_back(f);
    }
}

/// One Anderson step for the fixed-point map `input -> output`, then records
/// the pair. Rank-deficient least-squares problems fall back to simple mixing.
pub fn anderson_mix(
    history: &mut AndersonHistory,
    input: &[f64],
    output: &[f64],
    beta: f64,
) -> Vec<f64> {
    anderson_mix_preconditioned(history, input, output, beta, |r| r.to_vec())
}

/// Anderson step whose residual correction `beta * r` is passed through
/// `precond` (for instance a Kerker filter).
pub fn anderson_mix_preconditioned<P>(
    history: &mut AndersonHistory,
    input: &[f64],
    output: &[f64],
    beta: f64,
    precond: P,
) -> Vec<f64>
where
    P: Fn(&[f64]) -> Vec<f64>,
{
    let f: Vec<f64> = output.iter().zip(input).map(|(o, i)| o - i).collect();
    let m = history.len();
    let mut xbar = input.to_vec();
    let mut fbar = f.clone();
    if m > 0 {
        let n = input.len();
        let df = DMatrix::from_fn(n, m, |i, j| f[i] - history.residuals[j][i]);
        let svd = df.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax > 0.0 && smin > 1e-12 * smax {
            if let Ok(gamma) = svd.solve(&DVector::from_column_slice(&f), 0.0) {
                for j in 0..m {
                    let (xj, fj) = (&history.inputs[j], &history.residuals[j]);
                    for i in 0..n {
                        xbar[i] -= gamma[j] * (input[i] - xj[i]);
                        fbar[i] -= gamma[j] * (f[i] - fj[i]);
                    }
                }
            }
        }
    }
    let step = precond(&fbar);
    history.push(input.to_vec(), f);
    xbar.iter().zip(&step).map(|(x, r)| x + beta * r).collect()
}
