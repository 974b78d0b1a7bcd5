//! Nitroxide spin-label Hamiltonians and their electron energy-transition branches.

use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::operator::Operator;
use crate::propagator::HermitianEigen;
use crate::rotation::{rot_y, Frame, RotationAngles};
use crate::spin::{Spin, SpinOperators};
use crate::units::TWO_PI;

/// Lowest field accepted by the analytic branch formulas.
pub const MIN_PERTURBATIVE_FIELD_MT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Isotope {
    N14,
    N15,
}

impl fmt::Display for Isotope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Isotope::N14 => "N14",
            Isotope::N15 => "N15",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotopeParams {
    pub isotope: Isotope,
    pub a_perp: f64,
    pub a_par: f64,
    /// Quadrupole principal values (x, y, z); zero for 15N.
    pub q_diag: [f64; 3],
    pub gamma_n: f64,
}

impl IsotopeParams {
    pub fn n14(c: &PhysicalConstants) -> Self {
        Self {
            isotope: Isotope::N14,
            a_perp: TWO_PI * 14.7e6,
            a_par: TWO_PI * 101.4e6,
            q_diag: [TWO_PI * 1.26e6, TWO_PI * 0.53e6, TWO_PI * -1.79e6],
            gamma_n: c.gamma_n14,
        }
    }

    pub fn n15(c: &PhysicalConstants) -> Self {
        Self {
            isotope: Isotope::N15,
            a_perp: TWO_PI * 27.0e6,
            a_par: TWO_PI * 141.0e6,
            q_diag: [0.0; 3],
            gamma_n: c.gamma_n15,
        }
    }

    pub fn of(isotope: Isotope, c: &PhysicalConstants) -> Self {
        match isotope {
            Isotope::N14 => Self::n14(c),
            Isotope::N15 => Self::n15(c),
        }
    }

    pub fn nuclear_spin(&self) -> Spin {
        match self.isotope {
            Isotope::N14 => Spin::One,
            Isotope::N15 => Spin::Half,
        }
    }

    pub fn nuclear_dim(&self) -> usize {
        self.nuclear_spin().dim()
    }

    pub fn branch_labels(&self) -> &'static [BranchLabel] {
        match self.isotope {
            Isotope::N14 => &[BranchLabel::Plus1, BranchLabel::Zero, BranchLabel::Minus1],
            Isotope::N15 => &[BranchLabel::PlusHalf, BranchLabel::MinusHalf],
        }
    }
}

/// Axial Landé tensor principal values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lande {
    pub perp: f64,
    pub par: f64,
}

impl Default for Lande {
    fn default() -> Self {
        Self { perp: 2.007, par: 2.002 }
    }
}

impl Lande {
    /// zz component of the rotated tensor: 1/2 [(G_par - G_perp) cos 2θ + G_perp + G_par].
    pub fn effective(&self, theta: f64) -> f64 {
        0.5 * ((self.par - self.perp) * (2.0 * theta).cos() + self.perp + self.par)
    }
}

/// One spin label: isotope, Landé tensor and principal-frame orientation. Positions live in
/// [`crate::geometry::LabGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct NitroxideConfig {
    pub isotope: IsotopeParams,
    pub lande: Lande,
    pub frame: Frame,
}

impl NitroxideConfig {
    pub fn new(isotope: IsotopeParams, orientation: RotationAngles) -> Self {
        Self { isotope, lande: Lande::default(), frame: Frame::from_angles(&orientation) }
    }

    pub fn orientation(&self) -> RotationAngles {
        self.frame.angles()
    }

    pub fn with_frame(&self, frame: Frame) -> Self {
        Self { frame, ..self.clone() }
    }
}

/// Which optional terms enter the label Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HamiltonianTerms {
    pub quadrupole: bool,
    pub nuclear_zeeman: bool,
}

impl HamiltonianTerms {
    pub const ALL: Self = Self { quadrupole: true, nuclear_zeeman: true };
    pub const ELECTRONIC: Self = Self { quadrupole: false, nuclear_zeeman: false };
}

/// Label Hamiltonian on electron ⊗ nucleus: Landé Zeeman, nuclear Zeeman, quadrupole and
/// hyperfine terms with lab-frame tensors.
pub fn nitroxide_hamiltonian(cfg: &NitroxideConfig, bz: f64, c: &PhysicalConstants) -> Result<Operator> {
    nitroxide_hamiltonian_with(cfg, bz, c, HamiltonianTerms::ALL)
}

pub fn nitroxide_hamiltonian_with(
    cfg: &NitroxideConfig,
    bz: f64,
    c: &PhysicalConstants,
    terms: HamiltonianTerms,
) -> Result<Operator> {
    if !(bz > 0.0) {
        return Err(Error::InvalidInput(format!("field must be positive, got {bz} mT")));
    }
    let iso = &cfg.isotope;
    let dn = iso.nuclear_dim();
    let g = cfg.frame.tensor(&Vector3::new(cfg.lande.perp, cfg.lande.perp, cfg.lande.par));
    let a = cfg.frame.tensor(&Vector3::new(iso.a_perp, iso.a_perp, iso.a_par));
    let q = cfg.frame.tensor(&Vector3::from(iso.q_diag));
    let el = SpinOperators::new(Spin::Half);
    let nu = SpinOperators::new(iso.nuclear_spin());
    let e_id = CMatrix::identity(2, 2);
    let n_id = CMatrix::identity(dn, dn);
    let jk: Vec<CMatrix> = (0..3).map(|k| el.component(k).kronecker(&n_id)).collect();
    let ik: Vec<CMatrix> = (0..3).map(|k| e_id.kronecker(nu.component(k))).collect();
    let re = |x: f64| C64::new(x, 0.0);

    let mut h = CMatrix::zeros(2 * dn, 2 * dn);
    for k in 0..3 {
        h += &jk[k] * re(c.mu_b * bz * g[(2, k)]);
    }
    for p in 0..3 {
        for r in 0..3 {
            h += &jk[p] * &ik[r] * re(a[(p, r)]);
            if terms.quadrupole && q[(p, r)] != 0.0 {
                h += &ik[p] * &ik[r] * re(q[(p, r)]);
            }
        }
    }
    if terms.nuclear_zeeman {
        h += &ik[2] * re(iso.gamma_n * bz);
    }
    Operator::hermitian(vec![2, dn], h)
}

/// Electron transition conditioned on a dressed nuclear state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchLabel {
    Plus1,
    Zero,
    Minus1,
    PlusHalf,
    MinusHalf,
}

impl BranchLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchLabel::Plus1 => "E1",
            BranchLabel::Zero => "E0",
            BranchLabel::Minus1 => "E-1",
            BranchLabel::PlusHalf => "E1/2",
            BranchLabel::MinusHalf => "E-1/2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Plus1, Self::Zero, Self::Minus1, Self::PlusHalf, Self::MinusHalf]
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
    }

    /// Index of the bare nuclear m_I state this branch connects to at theta = 0, in the
    /// highest-first basis ordering.
    fn nuclear_index(&self) -> usize {
        match self {
            BranchLabel::Plus1 | BranchLabel::PlusHalf => 0,
            BranchLabel::Zero | BranchLabel::MinusHalf => 1,
            BranchLabel::Minus1 => 2,
        }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub isotope: Isotope,
    /// (label, transition energy in rad/s), in the isotope's label order.
    pub energies: Vec<(BranchLabel, f64)>,
}

impl BranchSet {
    pub fn get(&self, label: BranchLabel) -> Option<f64> {
        self.energies.iter().find(|(l, _)| *l == label).map(|(_, e)| *e)
    }

    pub fn labels(&self) -> impl Iterator<Item = BranchLabel> + '_ {
        self.energies.iter().map(|(l, _)| *l)
    }
}

fn check_perturbative(iso: &IsotopeParams, lande: &Lande, bz: f64, c: &PhysicalConstants) -> Result<()> {
    let zeeman = c.mu_b * bz * lande.perp.min(lande.par);
    if !(bz >= MIN_PERTURBATIVE_FIELD_MT) || zeeman <= iso.a_par {
        return Err(Error::BelowPerturbativeField { bz_mt: bz, min_mt: MIN_PERTURBATIVE_FIELD_MT });
    }
    Ok(())
}

/// Hyperfine radical sqrt[(A_par² - A_perp²) cos 2θ + A_perp² + A_par²] / sqrt 2.
fn hyperfine_radius(iso: &IsotopeParams, theta: f64) -> f64 {
    let (ap, aa) = (iso.a_perp, iso.a_par);
    (((aa * aa - ap * ap) * (2.0 * theta).cos() + ap * ap + aa * aa) / 2.0).sqrt()
}

/// The 14N central branch including the second-order correction from the transverse
/// hyperfine terms. No range checks; callers in hot loops validate once up front.
pub fn central_branch(iso: &IsotopeParams, lande: &Lande, theta: f64, bz: f64, c: &PhysicalConstants) -> f64 {
    let center = c.mu_b * bz * lande.effective(theta);
    let (ap, aa) = (iso.a_perp, iso.a_par);
    let (s, co) = theta.sin_cos();
    let (s2, c2) = (s * s, co * co);
    let pa = ap * aa;
    let num = 2.0 * pa * pa + (ap.powi(4) - pa * pa) * s2;
    let den = ap * ap * s2 + aa * aa * c2;
    center + num / (den * 2.0 * center)
}

/// Closed-form branch energy without range checks.
pub fn branch_energy(
    label: BranchLabel,
    iso: &IsotopeParams,
    lande: &Lande,
    theta: f64,
    bz: f64,
    c: &PhysicalConstants,
) -> f64 {
    let center = c.mu_b * bz * lande.effective(theta);
    let r = hyperfine_radius(iso, theta);
    match label {
        BranchLabel::Plus1 => center + r,
        BranchLabel::Minus1 => center - r,
        BranchLabel::Zero => central_branch(iso, lande, theta, bz, c),
        BranchLabel::PlusHalf => center + r / 2.0,
        BranchLabel::MinusHalf => center - r / 2.0,
    }
}

/// Analytic branch energies. The orientation enters only through the polar angle; the
/// axial symmetry of the Landé and hyperfine tensors removes phi.
pub fn branches_analytic(
    iso: &IsotopeParams,
    lande: &Lande,
    theta: f64,
    bz: f64,
    c: &PhysicalConstants,
) -> Result<BranchSet> {
    check_perturbative(iso, lande, bz, c)?;
    let energies = iso.branch_labels().iter().map(|&l| (l, branch_energy(l, iso, lande, theta, bz, c))).collect();
    Ok(BranchSet { isotope: iso.isotope, energies })
}

/// Electron-spin transitions of a diagonalized label Hamiltonian, each carrying the
/// nuclear part of its upper state for identification.
struct DressedTransition {
    energy: f64,
    nuclear: CVector,
}

fn dressed_transitions(h: &CMatrix, dn: usize) -> Result<Vec<DressedTransition>> {
    let eig = HermitianEigen::new(h)?;
    let n = 2 * dn;
    let mut up = Vec::with_capacity(dn);
    let mut down = Vec::with_capacity(dn);
    for k in 0..n {
        let v = eig.vectors.column(k);
        // Electron up occupies the first dn basis states.
        let w_up: f64 = (0..dn).map(|i| v[i].norm_sqr()).sum();
        let upper: CVector = v.rows(0, dn).into_owned();
        let lower: CVector = v.rows(dn, dn).into_owned();
        if w_up > 0.5 {
            up.push((eig.values[k], upper.normalize()));
        } else {
            down.push((eig.values[k], lower.normalize()));
        }
    }
    if up.len() != dn || down.len() != dn {
        return Err(Error::Integrator("label eigenstates do not split evenly into electron up/down".into()));
    }
    let mut used = vec![false; dn];
    let mut out = Vec::with_capacity(dn);
    for (e_up, u) in &up {
        let (best, _) = down
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, (_, d))| (j, u.dotc(d).norm()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        used[best] = true;
        out.push(DressedTransition { energy: e_up - down[best].0, nuclear: u.clone() });
    }
    Ok(out)
}

/// Unlabelled electron transition energies of the full label Hamiltonian.
pub fn transition_energies(
    cfg: &NitroxideConfig,
    bz: f64,
    c: &PhysicalConstants,
    terms: HamiltonianTerms,
) -> Result<Vec<f64>> {
    let h = nitroxide_hamiltonian_with(cfg, bz, c, terms)?;
    Ok(dressed_transitions(h.matrix(), cfg.isotope.nuclear_dim())?.into_iter().map(|t| t.energy).collect())
}

/// Largest angular step used when following branches away from the aligned orientation.
const CONTINUATION_STEP: f64 = std::f64::consts::PI / 180.0;

/// Transition energies from exact diagonalization of the label Hamiltonian. Labels are
/// assigned at the orientation whose principal axis is along the field (where dressed
/// nuclear states are the bare m_I states) and carried to the target orientation by
/// continuation along a geodesic, matching by largest overlap at each step.
pub fn branches_diagonalized(
    cfg: &NitroxideConfig,
    bz: f64,
    c: &PhysicalConstants,
    terms: HamiltonianTerms,
) -> Result<BranchSet> {
    let iso = &cfg.isotope;
    let dn = iso.nuclear_dim();
    let labels = iso.branch_labels();
    let target = *cfg.frame.matrix();
    let z = cfg.frame.principal_z();
    let theta = z.z.clamp(-1.0, 1.0).acos();
    let axis = Vector3::z().cross(&z);
    let path = |s: f64| -> Matrix3<f64> {
        if axis.norm() < 1e-14 {
            // Already aligned (or anti-aligned): rotate about lab y, which stays valid.
            return if theta < 1e-9 { target } else { rot_y(theta * (s - 1.0)) * target };
        }
        let ax = nalgebra::Unit::new_normalize(axis);
        let undo = nalgebra::Rotation3::from_axis_angle(&ax, -theta);
        let step = nalgebra::Rotation3::from_axis_angle(&ax, s * theta);
        step.matrix() * undo.matrix() * target
    };
    let steps = ((theta / CONTINUATION_STEP).ceil() as usize).max(1);

    let h_at = |s: f64| -> Result<CMatrix> {
        let f = Frame::from_matrix(path(s))?;
        Ok(nitroxide_hamiltonian_with(&cfg.with_frame(f), bz, c, terms)?.into_matrix())
    };

    let start = dressed_transitions(&h_at(0.0)?, dn)?;
    let mut tracked: Vec<Option<DressedTransition>> = (0..labels.len()).map(|_| None).collect();
    for t in start {
        let idx = (0..dn).max_by(|&a, &b| t.nuclear[a].norm().total_cmp(&t.nuclear[b].norm())).expect("non-empty");
        let slot = labels.iter().position(|l| l.nuclear_index() == idx).expect("label for index");
        if tracked[slot].is_some() {
            return Err(Error::Integrator("ambiguous branch labels at the aligned orientation".into()));
        }
        tracked[slot] = Some(t);
    }
    let mut tracked: Vec<DressedTransition> = tracked.into_iter().map(|t| t.expect("all labels assigned")).collect();

    for k in 1..=steps {
        let current = dressed_transitions(&h_at(k as f64 / steps as f64)?, dn)?;
        let mut taken = vec![false; current.len()];
        let mut next = Vec::with_capacity(tracked.len());
        for prev in &tracked {
            let (j, _) = current
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, t)| (j, prev.nuclear.dotc(&t.nuclear).norm()))
                .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            taken[j] = true;
            next.push(DressedTransition { energy: current[j].energy, nuclear: current[j].nuclear.clone() });
        }
        tracked = next;
    }
    let energies = labels.iter().zip(&tracked).map(|(l, t)| (*l, t.energy)).collect();
    Ok(BranchSet { isotope: iso.isotope, energies })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRow {
    pub theta: f64,
    pub bz: f64,
    pub label: BranchLabel,
    pub energy: f64,
}

/// Analytic branch energies over a (theta, field) grid. Fields below the perturbative
/// threshold are rejected rather than tabulated.
pub fn branch_robustness_scan(
    iso: &IsotopeParams,
    lande: &Lande,
    theta_grid: &[f64],
    bz_list: &[f64],
    c: &PhysicalConstants,
) -> Result<Vec<BranchRow>> {
    if theta_grid.is_empty() || bz_list.is_empty() {
        return Err(Error::InvalidInput("branch scan needs non-empty angle and field grids".into()));
    }
    let mut rows = Vec::with_capacity(theta_grid.len() * bz_list.len() * 3);
    for &bz in bz_list {
        check_perturbative(iso, lande, bz, c)?;
        for &theta in theta_grid {
            for (label, energy) in branches_analytic(iso, lande, theta, bz, c)?.energies {
                rows.push(BranchRow { theta, bz, label, energy });
            }
        }
    }
    Ok(rows)
}

/// Max minus min of one branch over the rows at a given field.
pub fn branch_spread(rows: &[BranchRow], label: BranchLabel, bz: f64) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter(|r| r.label == label && r.bz == bz).map(|r| r.energy).collect();
    if vals.is_empty() {
        return None;
    }
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Branch pair split by the inter-label coupling, ordered (plus, minus).
pub fn split_branch(energy: f64, g12: f64) -> (f64, f64) {
    (energy + g12 / 2.0, energy - g12 / 2.0)
}

/// Minimum |f(θ1) - g(θ2)| over all pairs of grid angles.
pub fn branch_margin(first: &[f64], second: &[f64]) -> f64 {
    let mut sorted = second.to_vec();
    sorted.sort_by(f64::total_cmp);
    first
        .iter()
        .map(|&x| {
            let i = sorted.partition_point(|&y| y < x);
            let above = sorted.get(i).map_or(f64::INFINITY, |y| y - x);
            let below = if i > 0 { x - sorted[i - 1] } else { f64::INFINITY };
            above.min(below)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Number of polar angles in [0, pi] sampled by [`isotope_orthogonality_margin`].
pub const ORTHOGONALITY_GRID: usize = 1801;

/// Minimum separation between the 14N central branch and either 15N branch over all
/// orientation pairs.
pub fn isotope_orthogonality_margin(bz: f64, c: &PhysicalConstants) -> Result<f64> {
    let lande = Lande::default();
    let n14 = IsotopeParams::n14(c);
    let n15 = IsotopeParams::n15(c);
    check_perturbative(&n14, &lande, bz, c)?;
    check_perturbative(&n15, &lande, bz, c)?;
    let grid = polar_grid(ORTHOGONALITY_GRID);
    let central: Vec<f64> = grid.iter().map(|&t| central_branch(&n14, &lande, t, bz, c)).collect();
    let mut other = Vec::with_capacity(2 * grid.len());
    for label in [BranchLabel::PlusHalf, BranchLabel::MinusHalf] {
        other.extend(grid.iter().map(|&t| branch_energy(label, &n15, &lande, t, bz, c)));
    }
    Ok(branch_margin(&central, &other))
}

/// `n` evenly spaced polar angles covering [0, pi].
pub fn polar_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CONSTANTS;
    use crate::units::{mhz, to_mhz};
    use proptest::prelude::*;

    fn n14() -> IsotopeParams {
        IsotopeParams::n14(&CONSTANTS)
    }

    fn n15() -> IsotopeParams {
        IsotopeParams::n15(&CONSTANTS)
    }

    fn label(iso: IsotopeParams, theta_deg: f64, phi_deg: f64) -> NitroxideConfig {
        NitroxideConfig::new(iso, RotationAngles::from_degrees(theta_deg, phi_deg).unwrap())
    }

    #[test]
    fn quadrupole_is_traceless() {
        let q = n14().q_diag;
        let max = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((q[0] + q[1] + q[2]).abs() < 0.01 * max);
    }

    #[test]
    fn aligned_hyperfine_splitting_in_upper_block() {
        let cfg = label(n14(), 0.0, 0.0);
        let h = nitroxide_hamiltonian_with(&cfg, 30.0, &CONSTANTS, HamiltonianTerms::ELECTRONIC).unwrap();
        // Diagonal at theta = 0: electron-up block carries +A_par/2 * m_I.
        let m = h.matrix();
        let gap01 = (m[(0, 0)] - m[(1, 1)]).re;
        let gap12 = (m[(1, 1)] - m[(2, 2)]).re;
        assert!((gap01 - n14().a_par / 2.0).abs() < 1e-3);
        assert!((gap12 - n14().a_par / 2.0).abs() < 1e-3);
        // Eigenvalue gaps of the upper manifold differ only by the second-order transverse
        // shift, of order A_perp^2 / (electron Zeeman).
        let eig = HermitianEigen::new(m).unwrap();
        let mut ev: Vec<f64> = eig.values.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for k in 0..2 {
            assert!(((ev[k] - ev[k + 1]) - n14().a_par / 2.0).abs() < mhz(0.2));
        }
    }

    #[test]
    fn n15_hamiltonian_has_no_quadrupole() {
        let cfg = label(n15(), 37.0, 20.0);
        let with = nitroxide_hamiltonian_with(
            &cfg,
            30.0,
            &CONSTANTS,
            HamiltonianTerms { quadrupole: true, nuclear_zeeman: false },
        )
        .unwrap();
        let without = nitroxide_hamiltonian_with(&cfg, 30.0, &CONSTANTS, HamiltonianTerms::ELECTRONIC).unwrap();
        assert_eq!(with.dim(), 4);
        assert_eq!(with.matrix(), without.matrix());
    }

    #[test]
    fn analytic_limits() {
        let iso = n14();
        let l = Lande::default();
        let b0 = branches_analytic(&iso, &l, 0.0, 30.0, &CONSTANTS).unwrap();
        let (e1, em1) = (b0.get(BranchLabel::Plus1).unwrap(), b0.get(BranchLabel::Minus1).unwrap());
        assert!((e1 - em1 - 2.0 * iso.a_par).abs() < 1e-6 * iso.a_par);
        let b90 = branches_analytic(&iso, &l, std::f64::consts::FRAC_PI_2, 30.0, &CONSTANTS).unwrap();
        let center = CONSTANTS.mu_b * 30.0 * l.perp;
        assert!((b90.get(BranchLabel::Plus1).unwrap() - center - iso.a_perp).abs() < 1e-6 * iso.a_perp);
        assert!((center - b90.get(BranchLabel::Minus1).unwrap() - iso.a_perp).abs() < 1e-6 * iso.a_perp);
        let n = branches_analytic(&n15(), &l, 0.0, 30.0, &CONSTANTS).unwrap();
        let split = n.get(BranchLabel::PlusHalf).unwrap() - n.get(BranchLabel::MinusHalf).unwrap();
        assert!((split - mhz(141.0)).abs() < 1e-6);
    }

    #[test]
    fn ordering_at_30_mt() {
        for deg in (0..=90).step_by(5) {
            let b = branches_analytic(&n14(), &Lande::default(), (deg as f64).to_radians(), 30.0, &CONSTANTS).unwrap();
            let e: Vec<f64> = b.energies.iter().map(|x| x.1).collect();
            assert!(e[0] > e[1] && e[1] > e[2], "theta {deg}: {e:?}");
        }
    }

    #[test]
    fn below_threshold_rejected() {
        let err = branches_analytic(&n14(), &Lande::default(), 0.3, 3.0, &CONSTANTS).unwrap_err();
        assert!(matches!(err, Error::BelowPerturbativeField { .. }));
        assert!(branch_robustness_scan(&n14(), &Lande::default(), &[0.1], &[3.0, 30.0], &CONSTANTS).is_err());
    }

    #[test]
    fn central_branch_agrees_with_diagonalization_at_30_degrees() {
        let theta = 30f64.to_radians();
        let analytic = central_branch(&n14(), &Lande::default(), theta, 30.0, &CONSTANTS);
        let diag = branches_diagonalized(&label(n14(), 30.0, 0.0), 30.0, &CONSTANTS, HamiltonianTerms::ALL).unwrap();
        let e0 = diag.get(BranchLabel::Zero).unwrap();
        assert!((analytic - e0).abs() < mhz(0.5), "analytic {} diag {}", to_mhz(analytic), to_mhz(e0));
        assert!((to_mhz(e0) - 841.0).abs() < 1.0);
    }

    #[test]
    fn diagonalization_labels_follow_the_aligned_ordering() {
        // Reference energies in MHz from an independent dense diagonalization at 30 mT.
        let d0 = branches_diagonalized(&label(n14(), 0.0, 0.0), 30.0, &CONSTANTS, HamiltonianTerms::ALL).unwrap();
        let expect0 = [942.138, 840.873, 739.349];
        for ((_, e), x) in d0.energies.iter().zip(expect0) {
            assert!((to_mhz(*e) - x).abs() < 0.01, "{} vs {x}", to_mhz(*e));
        }
        let d30 = branches_diagonalized(&label(n14(), 30.0, 0.0), 30.0, &CONSTANTS, HamiltonianTerms::ALL).unwrap();
        let expect30 = [930.674, 841.445, 754.848];
        for ((_, e), x) in d30.energies.iter().zip(expect30) {
            assert!((to_mhz(*e) - x).abs() < 0.01, "{} vs {x}", to_mhz(*e));
        }
    }

    #[test]
    fn diagonalization_independent_of_phi_without_quadrupole() {
        let a =
            branches_diagonalized(&label(n14(), 50.0, 0.0), 30.0, &CONSTANTS, HamiltonianTerms::ELECTRONIC).unwrap();
        let b =
            branches_diagonalized(&label(n14(), 50.0, 120.0), 30.0, &CONSTANTS, HamiltonianTerms::ELECTRONIC).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((x.1 - y.1).abs() < 1.0);
        }
    }

    #[test]
    fn split_branch_examples() {
        let (p, m) = split_branch(mhz(841.0), mhz(1.0));
        assert!((to_mhz(p) - 841.5).abs() < 1e-9 && (to_mhz(m) - 840.5).abs() < 1e-9);
        assert_eq!(split_branch(5.0, 0.0), (5.0, 5.0));
        assert_eq!(split_branch(5.0, -2.0), (4.0, 6.0));
    }

    #[test]
    fn same_branch_margin_vanishes() {
        let grid = polar_grid(181);
        let e0: Vec<f64> =
            grid.iter().map(|&t| central_branch(&n14(), &Lande::default(), t, 30.0, &CONSTANTS)).collect();
        assert!(branch_margin(&e0, &e0) < 1e-9);
    }

    #[test]
    fn margin_symmetric_under_reflection() {
        let l = Lande::default();
        let grid = polar_grid(361);
        let reflected: Vec<f64> = grid.iter().map(|t| std::f64::consts::PI - t).collect();
        let m = |g: &[f64]| {
            let a: Vec<f64> = g.iter().map(|&t| central_branch(&n14(), &l, t, 30.0, &CONSTANTS)).collect();
            let b: Vec<f64> =
                g.iter().map(|&t| branch_energy(BranchLabel::MinusHalf, &n15(), &l, t, 30.0, &CONSTANTS)).collect();
            branch_margin(&a, &b)
        };
        assert!((m(&grid) - m(&reflected)).abs() < 1e-3);
    }

    #[test]
    fn robustness_scan_spreads() {
        let grid: Vec<f64> = (0..=90).map(|d| (d as f64).to_radians()).collect();
        let rows = branch_robustness_scan(&n14(), &Lande::default(), &grid, &[30.0, 300.0], &CONSTANTS).unwrap();
        let s0 = branch_spread(&rows, BranchLabel::Zero, 30.0).unwrap();
        let s1 = branch_spread(&rows, BranchLabel::Plus1, 30.0).unwrap();
        assert!(s1 >= 10.0 * s0, "E1 spread {} vs E0 spread {}", to_mhz(s1), to_mhz(s0));
        assert!(branch_spread(&rows, BranchLabel::Zero, 300.0).unwrap() > s0);
    }

    proptest! {
        #[test]
        fn branches_depend_on_cos_2theta_only(theta in 0.0f64..std::f64::consts::PI) {
            let iso = n14();
            let l = Lande::default();
            for lab in [BranchLabel::Plus1, BranchLabel::Zero, BranchLabel::Minus1] {
                let e = branch_energy(lab, &iso, &l, theta, 30.0, &CONSTANTS);
                let neg = branch_energy(lab, &iso, &l, -theta, 30.0, &CONSTANTS);
                let refl = branch_energy(lab, &iso, &l, std::f64::consts::PI - theta, 30.0, &CONSTANTS);
                prop_assert!((e - neg).abs() < 1e-6 && (e - refl).abs() < 1e-3);
            }
        }
    }
}
