use ridge_ssvs::postprocess::full_rank_submatrix;
use ridge_ssvs::simdata::*;

fn svd_rank(x: &nalgebra::DMatrix<f64>) -> usize {
    let norm = x.norm();
    x.clone().svd(false, false).rank(1e-9 * norm)
}

#[test]
fn constructed_columns_are_exact() {
    let (train, valid, truth) = generate_simulated(&SimSpec::standard_design(1)).unwrap();
    for data in [&train, &valid] {
        let x = data.x();
        assert_eq!(x.ncols(), 300);
        for i in 0..data.n() {
            assert_eq!(x[(i, 282)], 2.0 * x[(i, 2)]);
            assert_eq!(x[(i, 290)], x[(i, 0)] + x[(i, 1)]);
            assert_eq!(x[(i, 291)], x[(i, 2)] - x[(i, 3)]);
            assert_eq!(x[(i, 299)], x[(i, 11)] + x[(i, 19)]);
            assert!(x.row(i).iter().take(280).all(|v| v.abs() <= 5.0));
        }
    }
    assert_eq!(truth.relevant.len(), 12);
    assert_eq!(train.q(), 4);
    assert_eq!(
        train.levels().unwrap()[..26],
        [vec![0; 25], vec![1]].concat()[..]
    );
}

#[test]
fn design_rank_is_that_of_the_base_columns() {
    let mut spec = SimSpec::standard_design(2);
    spec.obs_per_level = 100;
    spec.n_train = 400;
    spec.n_valid = 400;
    let (train, _, _) = generate_simulated(&spec).unwrap();
    assert_eq!(svd_rank(train.x()), 280);
    assert_eq!(full_rank_submatrix(train.x()), (0..280).collect::<Vec<_>>());
}

#[test]
fn base_only_variant_has_full_rank() {
    let mut spec = SimSpec::standard_design(2);
    spec.collinear_map.clear();
    spec.obs_per_level = 100;
    spec.n_train = 400;
    spec.n_valid = 400;
    let (train, _, truth) = generate_simulated(&spec).unwrap();
    assert_eq!(train.p(), 280);
    assert_eq!(svd_rank(train.x()), 280);
    assert_eq!(truth.relevant, vec![0, 1, 2, 3, 4]);
}

#[test]
fn classes_are_not_degenerate() {
    for seed in 0..20 {
        let (_, _, truth) = generate_simulated(&SimSpec::standard_design(seed)).unwrap();
        for b in [truth.train_class_balance, truth.valid_class_balance] {
            assert!(b > 0.2 && b < 0.8, "seed {seed}: {b}");
        }
    }
}

#[test]
fn regeneration_is_bit_identical() {
    let a = generate_simulated(&SimSpec::standard_design(9)).unwrap();
    let b = generate_simulated(&SimSpec::standard_design(9)).unwrap();
    assert_eq!(a.0.x(), b.0.x());
    assert_eq!(a.0.y(), b.0.y());
    assert_eq!(a.1.y(), b.1.y());
    assert_eq!(a.2, b.2);
    let c = generate_simulated(&SimSpec::standard_design(10)).unwrap();
    assert_ne!(a.0.x(), c.0.x());
}

#[test]
fn analog_layout() {
    let (train, valid, truth) = generate_microarray_analog(4).unwrap();
    assert_eq!((train.n(), valid.n(), train.p()), (100, 88, 278));
    assert_eq!(train.q(), 3);
    assert_eq!(train.block_sizes(), &[3]);
    let x = train.x();
    for i in 0..train.n() {
        assert_eq!(x[(i, 276)], -x[(i, 259)]);
        assert_eq!(x[(i, 275)], 2.0 * x[(i, 147)]);
        assert_eq!(x[(i, 277)], x[(i, 262)] + x[(i, 272)]);
    }
    assert_eq!(truth.relevant, vec![147, 259, 262, 272, 275, 276, 277]);
    let reduced = full_rank_submatrix(&x.select_columns(&[262, 272, 277, 147]));
    assert_eq!(reduced, vec![0, 1, 3]);
}

#[test]
fn analog_rank_with_more_rows() {
    let mut spec = AnalogSpec::default_with_seed(4);
    spec.n_train = 450;
    let (train, _, _) = generate_analog(&spec).unwrap();
    assert_eq!(svd_rank(train.x()), 275);
}
