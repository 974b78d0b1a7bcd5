use crate::deer::model::{channels, ChannelOperators, SystemModel};
use crate::deer::sequence::SequenceParams;
use crate::error::Result;
use crate::linalg::{self, CMatrix, C64};
use crate::propagator::{unitarity_defect, HermitianEigen};

/// NV prepared in |+>, labels maximally mixed: the columns |+> ⊗ |k> / sqrt(2), k < D.
pub(crate) fn initial_columns(dim: usize) -> CMatrix {
    let d = dim / 2;
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_fn(dim, d, |i, k| if i % d == k { s } else { C64::new(0.0, 0.0) })
}

/// <sigma_x> averaged over the pure states in `psi` (columns), NV in the first slot.
pub(crate) fn sigma_x_of_columns(psi: &CMatrix) -> f64 {
    let d = psi.nrows() / 2;
    let mut acc = 0.0;
    for k in 0..psi.ncols() {
        for i in 0..d {
            acc += (psi[(i, k)].conj() * psi[(i + d, k)]).re;
        }
    }
    2.0 * acc / psi.ncols() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryOutcome {
    pub sigma_x: f64,
    /// max |U^dagger U - I| of the composed propagator, when requested.
    pub unitarity_defect: Option<f64>,
}

pub(crate) fn channel_unitary(
    ops: &ChannelOperators,
    seq: &SequenceParams,
    omega: f64,
    rf_on: bool,
    check: bool,
) -> Result<UnitaryOutcome> {
    let free = HermitianEigen::new(&ops.shifted(&ops.free, omega))?.evolve(seq.tau_free);
    let drive_h = if rf_on { &ops.drive } else { &ops.drive_no_rf };
    let drive = HermitianEigen::new(&ops.shifted(drive_h, omega))?.evolve(seq.drive_duration());
    let psi0 = initial_columns(ops.dim);
    let psi = linalg::matmul(&free, &linalg::matmul(&drive, &linalg::matmul(&free, &psi0)));
    let defect = if check {
        let u = linalg::matmul(&free, &linalg::matmul(&drive, &free));
        Some(unitarity_defect(&u))
    } else {
        None
    };
    Ok(UnitaryOutcome { sigma_x: sigma_x_of_columns(&psi), unitarity_defect: defect })
}

/// <sigma_x> after the sequence under coherent dynamics, averaged over label channels.
pub fn run_unitary(model: &SystemModel, seq: &SequenceParams) -> Result<f64> {
    seq.validate()?;
    let mut total = 0.0;
    for ch in channels(model, seq.bz)? {
        let ops = ChannelOperators::new(&ch, seq, model.drive_coupling);
        total += ch.weight * channel_unitary(&ops, seq, seq.rf_frequency, true, false)?.sigma_x;
    }
    Ok(total)
}

/// Per-channel results, in channel order, for checking the mixture decomposition.
pub fn run_unitary_channels(model: &SystemModel, seq: &SequenceParams) -> Result<Vec<(f64, UnitaryOutcome)>> {
    seq.validate()?;
    channels(model, seq.bz)?
        .iter()
        .map(|ch| {
            let ops = ChannelOperators::new(ch, seq, model.drive_coupling);
            Ok((ch.weight, channel_unitary(&ops, seq, seq.rf_frequency, true, true)?))
        })
        .collect()
}
