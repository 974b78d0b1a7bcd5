//! Density-matrix evolution under the Lindblad master equation.
//!
//! Two integrators share one fourth-order step. Small systems form the Liouvillian
//! superoperator L, build the one-step map P = 1 + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24 and
//! compose 2^k steps by repeated squaring. Larger systems alternate exact unitary
//! half-steps with the same fourth-order step applied to the dissipator alone.

use crate::constants::PhysicalConstants;
use crate::deer::model::{channels, ChannelOperators, SystemModel};
use crate::deer::sequence::{NoiseParams, SequenceParams};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::propagator::HermitianEigen;

/// A dissipator `rate * (c rho c† - {c†c, rho}/2)`.
#[derive(Debug, Clone)]
pub struct Jump {
    pub op: CMatrix,
    pub rate: f64,
}

/// Largest dimension handled with the superoperator route.
pub const SUPEROPERATOR_MAX_DIM: usize = 16;

/// Steps per unit of the fastest Hamiltonian frequency.
const STEPS_PER_RADIAN: f64 = 50.0;
/// Steps per NV dephasing time.
const STEPS_PER_T2: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindbladRoute {
    Auto,
    Superoperator,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladStats {
    /// Largest |Tr rho - 1| seen at segment boundaries.
    pub max_trace_error: f64,
    /// Smallest eigenvalue of rho seen at segment boundaries.
    pub min_eigenvalue: f64,
}

impl Default for LindbladStats {
    fn default() -> Self {
        Self { max_trace_error: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

impl LindbladStats {
    pub fn merge(&mut self, other: &LindbladStats) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
    }

    fn observe(&mut self, rho: &CMatrix) -> Result<()> {
        let err = (rho.trace() - ONE).norm();
        self.max_trace_error = self.max_trace_error.max(err);
        if err > 1e-6 {
            return Err(Error::Integrator(format!("density-matrix trace drifted by {err:.3e}")));
        }
        let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let min = herm.symmetric_eigenvalues().min();
        self.min_eigenvalue = self.min_eigenvalue.min(min);
        Ok(())
    }
}

/// Column-stacking superoperator: vec(A X B) = (B^T ⊗ A) vec(X).
pub fn liouvillian(h: &CMatrix, jumps: &[Jump]) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * minus_i;
    for j in jumps {
        let c = &j.op;
        let k = c.adjoint() * c;
        let r = C64::new(j.rate, 0.0);
        l += (c.conjugate().kronecker(c) - (id.kronecker(&k) + k.transpose().kronecker(&id)) * C64::new(0.5, 0.0)) * r;
    }
    l
}

/// Step bound from the Hamiltonian's largest frequency, the dephasing time and the rates.
fn step_bound(h: &CMatrix, jumps: &[Jump], t2: f64) -> Result<f64> {
    let eig = HermitianEigen::new(h)?;
    let w = eig.max_abs_eigenvalue().max(eig.bandwidth());
    let rate: f64 = jumps.iter().map(|j| j.rate * linalg::inf_norm(&(j.op.adjoint() * &j.op))).sum();
    let mut hmax = t2 / STEPS_PER_T2;
    if w > 0.0 {
        hmax = hmax.min(1.0 / (STEPS_PER_RADIAN * w));
    }
    if rate > 0.0 {
        hmax = hmax.min(1.0 / (STEPS_PER_RADIAN * rate));
    }
    Ok(hmax)
}

/// exp(L t) approximated by 2^k fourth-order steps of size t / 2^k <= h_max.
pub fn rk4_superpropagator(l: &CMatrix, t: f64, h_max: f64) -> (CMatrix, u64) {
    let n = l.nrows();
    let id = CMatrix::identity(n, n);
    if t == 0.0 {
        return (id, 0);
    }
    let mut k = 0u32;
    while t / (1u64 << k) as f64 > h_max {
        k += 1;
    }
    let h = t / (1u64 << k) as f64;
    let x = l * C64::new(h, 0.0);
    // Horner form of the degree-4 Taylor polynomial.
    let mut p = &id + &x * C64::new(0.25, 0.0);
    for c in [1.0 / 3.0, 0.5, 1.0] {
        p = &id + linalg::matmul(&(&x * C64::new(c, 0.0)), &p);
    }
    for _ in 0..k {
        p = linalg::matmul(&p, &p);
    }
    (p, 1u64 << k)
}

/// D(rho) = Σ r c rho c† - {K, rho}/2 with K = Σ r c†c precomputed.
struct Dissipator {
    jumps: Vec<(CMatrix, CMatrix, f64)>,
    diagonal: Vec<(Vec<C64>, f64)>,
    half_k: CMatrix,
}

impl Dissipator {
    fn new(jumps: &[Jump]) -> Self {
        let n = jumps.first().map_or(0, |j| j.op.nrows());
        let mut half_k = CMatrix::zeros(n, n);
        let mut dense = Vec::new();
        let mut diagonal = Vec::new();
        for j in jumps {
            half_k += j.op.adjoint() * &j.op * C64::new(0.5 * j.rate, 0.0);
            let off = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).any(|(a, b)| a != b && j.op[(a, b)] != ZERO);
            if off {
                dense.push((j.op.clone(), j.op.adjoint(), j.rate));
            } else {
                diagonal.push(((0..n).map(|a| j.op[(a, a)]).collect(), j.rate));
            }
        }
        Self { jumps: dense, diagonal, half_k }
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let n = rho.nrows();
        let mut out = -(linalg::matmul(&self.half_k, rho) + linalg::matmul(rho, &self.half_k));
        for (c, cd, r) in &self.jumps {
            out += linalg::matmul(&linalg::matmul(c, rho), cd) * C64::new(*r, 0.0);
        }
        for (d, r) in &self.diagonal {
            for j in 0..n {
                for i in 0..n {
                    out[(i, j)] += rho[(i, j)] * d[i] * d[j].conj() * *r;
                }
            }
        }
        out
    }

    /// Fourth-order step rho + hD + ... + (hD)^4/24 rho.
    fn step(&self, rho: &CMatrix, h: f64) -> CMatrix {
        let mut acc = rho.clone();
        for c in [0.25, 1.0 / 3.0, 0.5, 1.0] {
            acc = rho + self.apply(&acc) * C64::new(c * h, 0.0);
        }
        acc
    }
}

/// Strang splitting: exact unitary half-steps around a fourth-order dissipator step.
pub fn evolve_split(h: &CMatrix, jumps: &[Jump], rho: &CMatrix, t: f64, h_max: f64) -> Result<CMatrix> {
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let steps = (t / h_max).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let eig = HermitianEigen::new(h)?;
    let half = eig.evolve(dt / 2.0);
    let full = eig.evolve(dt);
    let diss = Dissipator::new(jumps);
    let mut r = linalg::conjugate_by(&half, rho);
    for s in 0..steps {
        r = diss.step(&r, dt);
        r = linalg::conjugate_by(if s + 1 < steps { &full } else { &half }, &r);
    }
    Ok(r)
}

/// Evolves `rho` for time `t` under (h, jumps) with the chosen route.
pub fn evolve(h: &CMatrix, jumps: &[Jump], rho: &CMatrix, t: f64, t2: f64, route: LindbladRoute) -> Result<CMatrix> {
    let hmax = step_bound(h, jumps, t2)?;
    let n = h.nrows();
    let superop = match route {
        LindbladRoute::Auto => n <= SUPEROPERATOR_MAX_DIM,
        LindbladRoute::Superoperator => true,
        LindbladRoute::Split => false,
    };
    if superop {
        let (p, _) = rk4_superpropagator(&liouvillian(h, jumps), t, hmax);
        Ok(apply_superop(&p, rho))
    } else {
        evolve_split(h, jumps, rho, t, split_step(jumps, t2))
    }
}

/// The split route resolves the dissipator, not the Hamiltonian (whose part is exact).
fn split_step(jumps: &[Jump], t2: f64) -> f64 {
    let rate: f64 = jumps.iter().map(|j| j.rate * linalg::inf_norm(&(j.op.adjoint() * &j.op))).sum();
    let mut h = t2 / STEPS_PER_T2;
    if rate > 0.0 {
        h = h.min(1.0 / (STEPS_PER_T2 * rate));
    }
    h
}

fn apply_superop(p: &CMatrix, rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let v = CVector::from_column_slice(rho.as_slice());
    let out = p * v;
    CMatrix::from_column_slice(n, n, out.as_slice())
}

/// Splits an operator into parts that change the up-label count by a fixed amount, so that
/// each part is a separate secular dissipator in the rotating frame.
fn secular_components(op: &CMatrix, ops: &ChannelOperators) -> Vec<CMatrix> {
    let n = op.nrows();
    let scale = linalg::max_abs(op);
    let mut out = Vec::new();
    for d in -2i64..=2 {
        let part = CMatrix::from_fn(n, n, |i, j| if ops.up_count_diff(i, j) == d { op[(i, j)] } else { ZERO });
        if linalg::max_abs(&part) > 1e-12 * scale {
            out.push(part);
        }
    }
    out
}

pub(crate) fn channel_jumps(ops: &ChannelOperators, noise: &NoiseParams, bz: f64, c: &PhysicalConstants) -> Vec<Jump> {
    let (down, up) = noise.label_rates(bz, c);
    let mut jumps = vec![Jump { op: ops.sigma_z.clone(), rate: noise.dephasing_rate() }];
    for lower in &ops.label_lowering {
        for part in secular_components(lower, ops) {
            jumps.push(Jump { op: part.adjoint(), rate: up });
            jumps.push(Jump { op: part, rate: down });
        }
    }
    jumps.retain(|j| j.rate > 0.0);
    jumps
}

pub(crate) fn initial_density(dim: usize) -> CMatrix {
    let d = dim / 2;
    let v = C64::new(0.5 / d as f64, 0.0);
    CMatrix::from_fn(dim, dim, |i, j| if i % d == j % d { v } else { ZERO })
}

pub(crate) fn sigma_x_of_density(rho: &CMatrix) -> f64 {
    let d = rho.nrows() / 2;
    2.0 * (0..d).map(|i| rho[(i, i + d)].re).sum::<f64>()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn channel_lindblad(
    ops: &ChannelOperators,
    seq: &SequenceParams,
    noise: &NoiseParams,
    c: &PhysicalConstants,
    omega: f64,
    rf_on: bool,
    route: LindbladRoute,
) -> Result<(f64, LindbladStats)> {
    let jumps = channel_jumps(ops, noise, seq.bz, c);
    let free = ops.shifted(&ops.free, omega);
    let drive = ops.shifted(if rf_on { &ops.drive } else { &ops.drive_no_rf }, omega);
    let mut stats = LindbladStats::default();
    let mut rho = initial_density(ops.dim);
    stats.observe(&rho)?;
    let superop = match route {
        LindbladRoute::Auto => ops.dim <= SUPEROPERATOR_MAX_DIM,
        LindbladRoute::Superoperator => true,
        LindbladRoute::Split => false,
    };
    if superop {
        // The free-segment map is reused for both free stages.
        let (pf, _) =
            rk4_superpropagator(&liouvillian(&free, &jumps), seq.tau_free, step_bound(&free, &jumps, noise.t2_nv)?);
        let (pd, _) = rk4_superpropagator(
            &liouvillian(&drive, &jumps),
            seq.drive_duration(),
            step_bound(&drive, &jumps, noise.t2_nv)?,
        );
        for p in [&pf, &pd, &pf] {
            rho = apply_superop(p, &rho);
            stats.observe(&rho)?;
        }
    } else {
        let hstep = split_step(&jumps, noise.t2_nv);
        for (h, t) in [(&free, seq.tau_free), (&drive, seq.drive_duration()), (&free, seq.tau_free)] {
            rho = evolve_split(h, &jumps, &rho, t, hstep)?;
            stats.observe(&rho)?;
        }
    }
    Ok((sigma_x_of_density(&rho), stats))
}

/// <sigma_x> after the sequence with NV dephasing and thermal label relaxation.
pub fn run_lindblad(model: &SystemModel, seq: &SequenceParams, noise: &NoiseParams) -> Result<f64> {
    Ok(run_lindblad_detailed(model, seq, noise, LindbladRoute::Auto)?.0)
}

pub fn run_lindblad_detailed(
    model: &SystemModel,
    seq: &SequenceParams,
    noise: &NoiseParams,
    route: LindbladRoute,
) -> Result<(f64, LindbladStats)> {
    seq.validate()?;
    noise.validate()?;
    let mut total = 0.0;
    let mut stats = LindbladStats::default();
    for ch in channels(model, seq.bz)? {
        let ops = ChannelOperators::new(&ch, seq, model.drive_coupling);
        let (sx, s) = channel_lindblad(&ops, seq, noise, &model.constants, seq.rf_frequency, true, route)?;
        total += ch.weight * sx;
        stats.merge(&s);
    }
    Ok((total, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deer::model::Mode;
    use crate::geometry::LabGeometry;
    use crate::nitroxide::{IsotopeParams, NitroxideConfig};
    use crate::rotation::RotationAngles;
    use crate::units::mhz;
    use nalgebra::Vector3;

    fn model(mode: Mode) -> SystemModel {
        let c = PhysicalConstants::canonical();
        let geometry =
            LabGeometry::new(Vector3::new(-2.10, 2.17, 6.24), Vector3::new(0.4, 0.3, 7.3), Vector3::new(3.0, 0.0, 6.0))
                .unwrap();
        let l1 = NitroxideConfig::new(IsotopeParams::n14(&c), RotationAngles::from_degrees(30.0, -91.67).unwrap());
        let l2 = NitroxideConfig::new(IsotopeParams::n14(&c), RotationAngles::from_degrees(91.7, 154.70).unwrap());
        SystemModel::new(mode, geometry, [l1, l2])
    }

    #[test]
    fn split_route_matches_superoperator_route() {
        let m = model(Mode::Reduced);
        let seq = SequenceParams::default();
        let noise = NoiseParams::default();
        let ch = &channels(&m, seq.bz).unwrap()[4];
        let ops = ChannelOperators::new(ch, &seq, true);
        for w in [840.4, 840.9, 841.8] {
            let (a, _) =
                channel_lindblad(&ops, &seq, &noise, &m.constants, mhz(w), true, LindbladRoute::Superoperator).unwrap();
            let (b, _) =
                channel_lindblad(&ops, &seq, &noise, &m.constants, mhz(w), true, LindbladRoute::Split).unwrap();
            assert!((a - b).abs() < 1e-6, "{w} MHz: superoperator {a} vs split {b}");
        }
    }

    #[test]
    fn trace_and_positivity_hold_through_sequence() {
        let m = model(Mode::Reduced);
        let (_, stats) =
            run_lindblad_detailed(&m, &SequenceParams::default(), &NoiseParams::default(), LindbladRoute::Auto)
                .unwrap();
        assert!(stats.max_trace_error < 1e-9, "{}", stats.max_trace_error);
        assert!(stats.min_eigenvalue > -1e-7, "{}", stats.min_eigenvalue);
    }

    #[test]
    fn liouvillian_preserves_trace() {
        let [sx, _, sz] = crate::spin::pauli();
        let jumps = [Jump { op: sz.clone(), rate: 0.3 }, Jump { op: &sx + &sz * C64::new(0.0, 1.0), rate: 0.7 }];
        let l = liouvillian(&(&sx * C64::new(1.3, 0.0)), &jumps);
        // Tr(L x) = 0 for all x  <=>  vec(I)† L = 0.
        for col in 0..4 {
            let t = l[(0, col)] + l[(3, col)];
            assert!(t.norm() < 1e-12);
        }
    }
}
