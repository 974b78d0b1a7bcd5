use nalgebra::Vector3;
use spinlabel::constants::PhysicalConstants;
use spinlabel::deer::{linear_grid, spectrum, FlipFlop, Mode, SequenceParams, SystemModel};
use spinlabel::geometry::{beta_modulation, nv_label_coupling, LabGeometry};
use spinlabel::nitroxide::{IsotopeParams, NitroxideConfig};
use spinlabel::response::{coherent_contrast, ModelParams, ResponseModel};
use spinlabel::rotation::RotationAngles;
use spinlabel::units::mhz;

// Target near 841 MHz; the partner sits about 8 MHz higher and is never flipped in the window.
#[test]
fn closed_form_matches_propagator_in_the_coherent_limit() {
    let c = PhysicalConstants::canonical();
    let (r1, r2) = (Vector3::new(-2.10, 2.17, 6.24), Vector3::new(0.4, 0.3, 7.3));
    let geometry = LabGeometry::new(r1, r2, Vector3::new(3.0, 0.0, 6.0)).unwrap();
    let (theta, phi) = (11.46f64, -91.67f64);
    let l1 = NitroxideConfig::new(IsotopeParams::n14(&c), RotationAngles::from_degrees(theta, phi).unwrap());
    let l2 = NitroxideConfig::new(IsotopeParams::n14(&c), RotationAngles::from_degrees(91.67, 154.70).unwrap());
    let mut sys = SystemModel::new(Mode::Reduced, geometry, [l1, l2]);
    sys.flipflop = FlipFlop::Off;
    sys.drive_coupling = false;
    let seq = SequenceParams::default();
    let grid = linear_grid(mhz(839.0), mhz(843.0), 81).unwrap();
    let sim = spectrum(&sys, &seq, &grid, None, None).unwrap();

    let az = nv_label_coupling(&r1, &c).unwrap().z;
    let contrast = coherent_contrast(az, seq.tau_free);
    let (a_beta, phi_beta) = beta_modulation(&r1, &r2);
    let p = ModelParams {
        c_plus: contrast,
        c_minus: contrast,
        theta_eq: theta.to_radians(),
        phi_eq: phi.to_radians(),
        a_beta,
        phi_beta,
        d12: (r1 - r2).norm(),
        sigma_delta: 0.0,
    };
    let model = ResponseModel::new(1.0, seq.rf_rabi, seq.bz, c).unwrap();
    let worst = sim.points.iter().map(|&(w, s)| (s - model.averaged_spectrum(w, &p)).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "max deviation {worst}");
    // The dips are deep enough for the comparison to be meaningful.
    assert!(sim.values().iter().copied().fold(1.0, f64::min) < 1.0 - contrast / 2.0);
}
