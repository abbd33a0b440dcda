use uavsec::linalg::{CMat, CVec, C64};
use uavsec::rng::substream;
use uavsec::security::{
    best_slack, inverse_chi_square_quantile, robust_lmi_blocks, spectral_cap, validate_chance_constraint,
    worst_case_snr, ChanceConstraintParams, UncertaintyModel,
};

#[test]
fn single_uav_cap_closed_form() {
    let p = ChanceConstraintParams::new(1.0, 0.99, 3, 1.0).unwrap();
    let cap = spectral_cap(&p, 1).unwrap();
    let closed = 1.0 / -(1.0 - 0.99f64.powf(1.0 / 3.0)).ln();
    assert!((cap - closed).abs() < 1e-10);
    assert!((cap - 0.17542).abs() < 1e-4);
}

#[test]
fn quantile_is_monotone() {
    let a = inverse_chi_square_quantile(0.01, 8).unwrap();
    let b = inverse_chi_square_quantile(0.05, 8).unwrap();
    assert!(a < b);
}

#[test]
fn cap_holds_empirically() {
    let p = ChanceConstraintParams::new(1.0, 0.9, 2, 1.0).unwrap();
    let cap = spectral_cap(&p, 4).unwrap();
    let w = CMat::identity(4, 4) * C64::new(cap.sqrt(), 0.0);
    let rep = validate_chance_constraint(&w, &p, 20_000, 1);
    assert!(rep.probability >= 0.9 - 3.0 * rep.std_error);
}

#[test]
fn psd_blocks_imply_worst_case_snr() {
    let h = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.5, -0.5), C64::new(-0.2, 0.3)]);
    let w = CMat::from_columns(&[&h * C64::new(4.0 / h.norm(), 0.0)]);
    let gram = &w * w.adjoint();
    let model = UncertaintyModel::new(vec![0.1], vec![h.clone()]).unwrap();
    let (slack, eig) = best_slack(std::slice::from_ref(&gram), 0, 10.0, 1.0, &model);
    assert!(eig >= 0.0);
    let blocks = robust_lmi_blocks(&[gram], 10.0, 1.0, &model, &[slack]).unwrap();
    assert_eq!(blocks[0].nrows(), 4);
    let mut rng = substream(2, 0);
    let worst = worst_case_snr(&w, 0, &h, 0.1, 1.0, 2000, &mut rng);
    assert!(worst >= 10.0 * (1.0 - 1e-6), "{worst}");
}
