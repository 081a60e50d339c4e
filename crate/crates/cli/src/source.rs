use lowrank_core::generators as g;
use lowrank_core::matcore::read_csv;
use lowrank_core::tensor::read_tensor;
use lowrank_core::{DenseMatrix, Tensor};

use crate::args::{GenParams, MatrixName, MatrixSource, TensorName, TuckerArgs};
use crate::{CliResult, Failure};

fn size(p: &GenParams) -> CliResult<(usize, usize)> {
    let n = p
        .n
        .ok_or_else(|| Failure::input("this generator needs --n"))?;
    let m = p.m.unwrap_or(n);
    if m == 0 || n == 0 {
        return Err(Failure::input("sizes must be positive"));
    }
    Ok((m, n))
}

pub fn generate_matrix(name: MatrixName, p: &GenParams) -> CliResult<DenseMatrix> {
    Ok(match name {
        MatrixName::Hilbert => {
            let (m, n) = size(p)?;
            g::hilbert(m, n)
        }
        MatrixName::Exp => {
            let (m, n) = size(p)?;
            g::exp_decay(m, n)
        }
        MatrixName::Power => {
            let (m, n) = size(p)?;
            g::power_css(m, n)
        }
        MatrixName::PowerCross => {
            let (m, n) = size(p)?;
            g::power_cross(m, n)
        }
        MatrixName::Deim => g::deim_adversarial(size(p)?.1, p.alpha)?,
        MatrixName::Ldlt => g::ldlt(size(p)?.1, p.theta)?,
        MatrixName::Cancellation => g::cancellation(),
        MatrixName::TwoEps => g::two_eps(p.eps),
        MatrixName::Symmetric => g::symmetric_counterexample(),
        MatrixName::Greedy => g::greedy_failure(p.b),
    })
}

pub fn generate_tensor(name: TensorName, p: &GenParams) -> CliResult<Tensor> {
    let n = p
        .n
        .ok_or_else(|| Failure::input("tensor generators need --n"))?;
    if n == 0 || p.order == 0 {
        return Err(Failure::input("size and order must be positive"));
    }
    let shape = vec![n; p.order];
    Ok(match name {
        TensorName::Hilbert3 => g::hilbert_tensor(&shape)?,
        TensorName::Power3 => g::power_tensor(&shape)?,
    })
}

pub fn load_matrix(src: &MatrixSource) -> CliResult<DenseMatrix> {
    match (&src.matrix, &src.input) {
        (Some(name), _) => generate_matrix(*name, &src.params),
        (None, Some(path)) => Ok(read_csv(path)?),
        (None, None) => Err(Failure::input("need --matrix or --input")),
    }
}

pub fn load_tensor(args: &TuckerArgs) -> CliResult<Tensor> {
    match (&args.tensor, &args.input) {
        (Some(name), _) => generate_tensor(*name, &args.params),
        (None, Some(path)) => Ok(read_tensor(path)?),
        (None, None) => Err(Failure::input("need --tensor or --input")),
    }
}
