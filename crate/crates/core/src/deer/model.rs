//! System description and the per-channel operators of the DEER sequence.
//!
//! Everything is expressed in a frame co-rotating at the RF carrier on the label electrons.
//! In each label's basis the electron "up" manifold is identified, and only terms that
//! conserve the number of up labels survive (secular part); the RF drive keeps only its
//! single-flip part. Reduced mode uses one electron per label with a fixed branch energy
//! and averages over branch pairs; full mode diagonalizes each label with its nucleus.

use nalgebra::Vector3;

use crate::constants::PhysicalConstants;
use crate::deer::sequence::SequenceParams;
use crate::error::{Error, Result};
use crate::geometry::{apply_tumble, inter_label_coupling, nv_label_coupling, LabGeometry};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::nitroxide::{branches_analytic, transition_energies, BranchLabel, HamiltonianTerms, NitroxideConfig};
use crate::operator::Operator;
use crate::propagator::HermitianEigen;
use crate::rotation::{rot_y, rot_z, Frame};
use crate::spin::{pauli, Spin, SpinOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Reduced,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Reduced => "reduced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipFlop {
    /// Keep the flip-flop term when the two labels' transitions lie within
    /// [`FLIPFLOP_RATIO`] couplings of each other.
    Auto,
    On,
    Off,
}

pub const FLIPFLOP_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub mode: Mode,
    pub geometry: LabGeometry,
    pub labels: [NitroxideConfig; 2],
    pub flipflop: FlipFlop,
    /// Keep the NV–label coupling during the drive segment.
    pub drive_coupling: bool,
    pub constants: PhysicalConstants,
}

impl SystemModel {
    pub fn new(mode: Mode, geometry: LabGeometry, labels: [NitroxideConfig; 2]) -> Self {
        Self {
            mode,
            geometry,
            labels,
            flipflop: FlipFlop::Auto,
            drive_coupling: true,
            constants: PhysicalConstants::canonical(),
        }
    }

    /// Whole molecule rotated rigidly about the tumbling axis.
    pub fn tumbled(&self, delta: f64) -> Self {
        let frames = [self.labels[0].frame, self.labels[1].frame];
        let (geometry, [f1, f2]) = apply_tumble(&self.geometry, &frames, delta);
        Self { geometry, labels: [self.labels[0].with_frame(f1), self.labels[1].with_frame(f2)], ..self.clone() }
    }

    /// Only the first label's polar angle shifted by `delta`; positions and the second label fixed.
    pub fn azimuth_shifted(&self, delta: f64) -> Self {
        let a = self.labels[0].orientation();
        let frame = Frame::from_matrix(rot_z(a.phi()) * rot_y(a.theta() + delta)).expect("proper rotation");
        let mut out = self.clone();
        out.labels[0] = self.labels[0].with_frame(frame);
        out
    }

    pub fn couplings(&self) -> Result<Couplings> {
        let [r1, r2] = self.geometry.positions();
        let c = &self.constants;
        Ok(Couplings {
            a: [nv_label_coupling(&r1, c)?, nv_label_coupling(&r2, c)?],
            g12: inter_label_coupling(&r1, &r2, c)?.g12,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub a: [Vector3<f64>; 2],
    pub g12: f64,
}

/// One label expressed in a basis where its static Hamiltonian is diagonal.
#[derive(Debug, Clone)]
pub(crate) struct LabelBasis {
    pub dim: usize,
    /// Tensor factors spanned by this basis (electron, or electron and nucleus).
    pub sub_dims: Vec<usize>,
    pub j: [CMatrix; 3],
    pub up: Vec<bool>,
    pub energies: Vec<f64>,
}

impl LabelBasis {
    /// Bare electron with transition energy `e`: H = e Jz.
    fn electron(e: f64) -> Self {
        let s = SpinOperators::new(Spin::Half);
        Self { dim: 2, sub_dims: vec![2], j: [s.x, s.y, s.z], up: vec![true, false], energies: vec![e / 2.0, -e / 2.0] }
    }

    /// Eigenbasis of the full electron–nucleus Hamiltonian.
    fn dressed(cfg: &NitroxideConfig, bz: f64, c: &PhysicalConstants) -> Result<Self> {
        let h = crate::nitroxide::nitroxide_hamiltonian(cfg, bz, c)?;
        let dn = cfg.isotope.nuclear_dim();
        let eig = HermitianEigen::new(h.matrix())?;
        let v = &eig.vectors;
        let s = SpinOperators::new(Spin::Half);
        let id = CMatrix::identity(dn, dn);
        let rotate = |m: &CMatrix| v.adjoint() * m.kronecker(&id) * v;
        let j = [rotate(&s.x), rotate(&s.y), rotate(&s.z)];
        let up: Vec<bool> = (0..2 * dn).map(|k| j[2][(k, k)].re > 0.0).collect();
        if up.iter().filter(|u| **u).count() != dn {
            return Err(Error::Integrator("dressed label states do not split evenly into electron up/down".into()));
        }
        Ok(Self { dim: 2 * dn, sub_dims: vec![2, dn], j, up, energies: eig.values.iter().copied().collect() })
    }
}

/// A label configuration with its statistical weight: one branch pair in reduced mode, the
/// whole dressed space in full mode.
#[derive(Debug, Clone)]
pub struct Channel {
    pub weight: f64,
    pub branches: Option<[BranchLabel; 2]>,
    pub flipflop: bool,
    pub(crate) bases: [LabelBasis; 2],
    pub(crate) couplings: Couplings,
}

impl Channel {
    /// Subsystem dimensions in the order NV, electron 1, (nucleus 1), electron 2, (nucleus 2).
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2];
        d.extend_from_slice(&self.bases[0].sub_dims);
        d.extend_from_slice(&self.bases[1].sub_dims);
        d
    }

    pub fn dim(&self) -> usize {
        2 * self.bases[0].dim * self.bases[1].dim
    }
}

fn flipflop_enabled(setting: FlipFlop, e1: &[f64], e2: &[f64], g12: f64) -> bool {
    match setting {
        FlipFlop::On => true,
        FlipFlop::Off => false,
        FlipFlop::Auto => e1.iter().any(|a| e2.iter().any(|b| (a - b).abs() < FLIPFLOP_RATIO * g12.abs())),
    }
}

/// Label channels for a model. Reduced mode: one channel per branch pair with equal weights.
pub fn channels(model: &SystemModel, bz: f64) -> Result<Vec<Channel>> {
    model.geometry.validate()?;
    let couplings = model.couplings()?;
    let c = &model.constants;
    match model.mode {
        Mode::Reduced => {
            let sets = [0, 1].map(|i| {
                let l = &model.labels[i];
                branches_analytic(&l.isotope, &l.lande, l.orientation().theta(), bz, c)
            });
            let [s1, s2] = sets;
            let (s1, s2) = (s1?, s2?);
            let weight = 1.0 / (s1.energies.len() * s2.energies.len()) as f64;
            let mut out = Vec::new();
            for &(l1, e1) in &s1.energies {
                for &(l2, e2) in &s2.energies {
                    out.push(Channel {
                        weight,
                        branches: Some([l1, l2]),
                        flipflop: flipflop_enabled(model.flipflop, &[e1], &[e2], couplings.g12),
                        bases: [LabelBasis::electron(e1), LabelBasis::electron(e2)],
                        couplings,
                    });
                }
            }
            Ok(out)
        }
        Mode::Full => {
            let t1 = transition_energies(&model.labels[0], bz, c, HamiltonianTerms::ALL)?;
            let t2 = transition_energies(&model.labels[1], bz, c, HamiltonianTerms::ALL)?;
            Ok(vec![Channel {
                weight: 1.0,
                branches: None,
                flipflop: flipflop_enabled(model.flipflop, &t1, &t2, couplings.g12),
                bases: [LabelBasis::dressed(&model.labels[0], bz, c)?, LabelBasis::dressed(&model.labels[1], bz, c)?],
                couplings,
            }])
        }
    }
}

/// Operators of one channel on NV ⊗ label1 ⊗ label2, for a fixed sequence.
#[derive(Debug, Clone)]
pub(crate) struct ChannelOperators {
    pub dim: usize,
    pub dims: Vec<usize>,
    /// Number of up labels per basis state.
    pub n_up: Vec<f64>,
    /// Secular free-evolution Hamiltonian without the carrier shift.
    pub free: CMatrix,
    /// Secular drive Hamiltonian without the carrier shift.
    pub drive: CMatrix,
    /// The same with the RF amplitude set to zero (baseline calibration).
    pub drive_no_rf: CMatrix,
    /// Static lab-frame Hamiltonian (labels, NV coupling, inter-label coupling), unmasked.
    pub lab_static: CMatrix,
    /// Sum of the label electrons' Jx, unmasked.
    pub jx_total: CMatrix,
    pub label_lowering: [CMatrix; 2],
    pub sigma_z: CMatrix,
    pub mw_term: CMatrix,
}

fn embed3(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> CMatrix {
    a.kronecker(b).kronecker(c)
}

/// Zeroes elements whose up-count difference is not in `keep`.
fn mask(m: &CMatrix, n_up: &[f64], keep: impl Fn(i64) -> bool) -> CMatrix {
    let mut out = m.clone();
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if !keep((n_up[i] - n_up[j]).round() as i64) {
                out[(i, j)] = ZERO;
            }
        }
    }
    out
}

impl ChannelOperators {
    pub fn new(ch: &Channel, seq: &SequenceParams, drive_coupling: bool) -> Self {
        let [b1, b2] = &ch.bases;
        let (d1, d2) = (b1.dim, b2.dim);
        let dim = 2 * d1 * d2;
        let i2 = CMatrix::identity(2, 2);
        let id1 = CMatrix::identity(d1, d1);
        let id2 = CMatrix::identity(d2, d2);
        let [sx, _, sz] = pauli();
        let p_up = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), ZERO]));
        let l1: Vec<CMatrix> = (0..3).map(|k| embed3(&i2, &b1.j[k], &id2)).collect();
        let l2: Vec<CMatrix> = (0..3).map(|k| embed3(&i2, &id1, &b2.j[k])).collect();

        let mut n_up = Vec::with_capacity(dim);
        let mut diag = Vec::with_capacity(dim);
        for _nv in 0..2 {
            for p in 0..d1 {
                for q in 0..d2 {
                    n_up.push(b1.up[p] as u8 as f64 + b2.up[q] as u8 as f64);
                    diag.push(C64::new(b1.energies[p] + b2.energies[q], 0.0));
                }
            }
        }
        let labels = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));

        let re = |x: f64| C64::new(x, 0.0);
        let mut nv_coupling = CMatrix::zeros(dim, dim);
        for k in 0..3 {
            nv_coupling += &l1[k] * re(ch.couplings.a[0][k]) + &l2[k] * re(ch.couplings.a[1][k]);
        }
        let nv_coupling = embed3(&p_up, &id1, &id2) * nv_coupling;

        let g = ch.couplings.g12;
        let mut inter = &l1[2] * &l2[2] * re(g);
        if ch.flipflop {
            // J1+J2- + J1-J2+ = 2 (J1x J2x + J1y J2y)
            let xy = &l1[0] * &l2[0] + &l1[1] * &l2[1];
            inter -= xy * re(g / 2.0);
        }

        let secular = |m: &CMatrix| mask(m, &n_up, |d| d == 0);
        let label_part = &labels + &inter;
        let free = secular(&(&label_part + &nv_coupling));
        let mw_term = embed3(&sx, &id1, &id2) * re(seq.mw_rabi / 2.0);
        let jx_total = &l1[0] + &l2[0];
        let mut drive_no_rf = if drive_coupling { free.clone() } else { secular(&label_part) };
        drive_no_rf += &mw_term;
        let drive = &drive_no_rf + mask(&jx_total, &n_up, |d| d.abs() == 1) * re(seq.rf_rabi);

        let lower = |j: &[CMatrix]| &j[0] - &j[1] * crate::linalg::I;
        Self {
            dim,
            dims: ch.dims(),
            n_up,
            free,
            drive,
            drive_no_rf,
            lab_static: &label_part + &nv_coupling,
            jx_total,
            label_lowering: [lower(&l1), lower(&l2)],
            sigma_z: embed3(&sz, &id1, &id2),
            mw_term,
        }
    }

    /// `m - omega * N_up`.
    pub fn shifted(&self, m: &CMatrix, omega: f64) -> CMatrix {
        let mut out = m.clone();
        for k in 0..self.dim {
            out[(k, k)] -= C64::new(omega * self.n_up[k], 0.0);
        }
        out
    }

    pub fn up_count_diff(&self, i: usize, j: usize) -> i64 {
        (self.n_up[i] - self.n_up[j]).round() as i64
    }
}

/// A piecewise-constant segment of the sequence.
#[derive(Debug, Clone)]
pub struct Segment {
    pub hamiltonian: Operator,
    pub duration: f64,
}

/// The three segments of one channel, in the rotating frame at the sequence's RF carrier.
#[derive(Debug, Clone)]
pub struct ChannelSegments {
    pub weight: f64,
    pub branches: Option<[BranchLabel; 2]>,
    pub segments: Vec<Segment>,
}

/// Free(τ), drive(π/Ω_RF), free(τ) for every label channel of the model.
pub fn build_segments(model: &SystemModel, seq: &SequenceParams) -> Result<Vec<ChannelSegments>> {
    seq.validate()?;
    channels(model, seq.bz)?
        .iter()
        .map(|ch| {
            let ops = ChannelOperators::new(ch, seq, model.drive_coupling);
            let dims = ops.dims.clone();
            let free = Operator::hermitian(dims.clone(), ops.shifted(&ops.free, seq.rf_frequency))?;
            let drive = Operator::hermitian(dims, ops.shifted(&ops.drive, seq.rf_frequency))?;
            Ok(ChannelSegments {
                weight: ch.weight,
                branches: ch.branches,
                segments: vec![
                    Segment { hamiltonian: free.clone(), duration: seq.tau_free },
                    Segment { hamiltonian: drive, duration: seq.drive_duration() },
                    Segment { hamiltonian: free, duration: seq.tau_free },
                ],
            })
        })
        .collect()
}
