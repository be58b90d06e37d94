use sicf_web::{implied_m, prior_coefficient_scale, prior_mean_d, Experiment, Ordering};

#[test]
fn ordering_lists_each_site_once_with_earlier_neighbors() {
    let o = Ordering::new(5, 4, 6).unwrap();
    let perm = o.perm();
    let mut sorted = perm.clone();
    sorted.sort();
    assert_eq!(sorted, (0..20).collect::<Vec<u32>>());
    for k in 0..20 {
        let nb = o.neighbors(k);
        assert_eq!(nb.len(), k.min(6));
        // neighbors come from earlier positions
        assert!(nb.iter().all(|s| perm[..k].contains(s)));
    }
    assert!(o.neighbors(20).is_empty());
    assert_eq!(o.x().len(), 20);
}

#[test]
fn experiment_fits_and_samples() {
    let mut e = Experiment::new(6, 0.3, 1.0, 40, 7).unwrap();
    let fit = e.fit(10).unwrap();
    assert_eq!(fit.len(), 4);
    assert!(fit[..3].iter().all(|&t| t > 0.0));
    assert!((1.0..=10.0).contains(&fit[3]));
    assert!(e.kl().unwrap() >= 0.0);
    let tr = e.true_row(3);
    assert_eq!(tr.len(), 36);
    assert!((tr[3] - 1.0).abs() < 1e-12);
    assert_eq!(e.fitted_row(3).unwrap().len(), 36);
    let a = e.sample(1).unwrap();
    assert_eq!(a, e.sample(1).unwrap());
    assert_ne!(a, e.sample(2).unwrap());
    assert_eq!(e.data(0).len(), 36);
}

#[test]
fn prior_curves_decay() {
    let d = prior_mean_d(2.0, 1.0, 0.5, 50, 2).unwrap();
    assert!(d.windows(2).all(|w| w[1] < w[0]));
    // mean of IG(6, 5 theta1 f(1)) is theta1 f(1)
    assert!((d[0] - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    let v = prior_coefficient_scale(2.0, 1.0, 0.5, 10, 2, 8).unwrap();
    assert_eq!(v.len(), 8);
    assert!(v.windows(2).all(|w| (w[1] / w[0] - (-0.5f64).exp()).abs() < 1e-12));
    assert_eq!(implied_m(0.5, 50), 13);
}
