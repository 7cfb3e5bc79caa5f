//! Central finite-difference gradient checks.
//!
//! Only forward evaluations are used for the numerical side, so these checks
//! are independent of every backward rule they verify.

use rand::Rng;

use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::Rng64;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (input index, flat coordinate) of the worst disagreement.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Relative disagreement between an analytic and a numeric derivative,
/// with an absolute floor so vanishing gradients do not blow up the ratio.
pub fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares backward gradients of `f` against central differences with step
/// `h`. Every input is treated as a differentiable leaf. When `sample` is set,
/// only that many random coordinates are checked.
pub fn check_gradients<F>(
    inputs: &[Tensor],
    f: F,
    h: f64,
    floor: f64,
    sample: Option<(usize, &mut Rng64)>,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.param(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let root = f(&mut tape, &vars)?;
    tape.backward(root)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad_tensor(v)).collect();

    let coords: Vec<(usize, usize)> = match sample {
        None => inputs.iter().enumerate().flat_map(|(i, t)| (0..t.len()).map(move |k| (i, k))).collect(),
        Some((n, rng)) => {
            let total: usize = inputs.iter().map(Tensor::len).sum();
            if total == 0 {
                return Err(Error::contract("gradient check without inputs"));
            }
            (0..n)
                .map(|_| {
                    let mut flat = rng.random_range(0..total);
                    let mut i = 0;
                    while flat >= inputs[i].len() {
                        flat -= inputs[i].len();
                        i += 1;
                    }
                    (i, flat)
                })
                .collect()
        }
    };

    let mut report = GradCheckReport { max_rel_error: 0.0, worst: (0, 0), checked: 0 };
    let mut work = inputs.to_vec();
    for (i, k) in coords {
        let orig = work[i].data()[k];
        work[i].data_mut()[k] = orig + h;
        let plus = eval(&work)?;
        work[i].data_mut()[k] = orig - h;
        let minus = eval(&work)?;
        work[i].data_mut()[k] = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let err = rel_error(analytic[i].data()[k], numeric, floor);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = (i, k);
        }
        report.checked += 1;
    }
    Ok(report)
}
