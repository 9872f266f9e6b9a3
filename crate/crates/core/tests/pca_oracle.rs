mod common;

use ndarray::Array2;
use rand::Rng;
use uqpipe::pca::PcaModel;
use uqpipe::seed;

fn random(n: usize, d: usize, s: u64) -> Array2<f64> {
    let mut rng = seed::rng(s);
    Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0))
}

fn check_against_jacobi(x: &Array2<f64>, k: usize) {
    let pca = PcaModel::fit(x.view(), k).unwrap();
    let (values, vectors) = common::jacobi_eigen(&common::covariance(x));
    for i in 0..k {
        assert!(
            (pca.explained_variance()[i] - values[i]).abs() <= 1e-8 * values[0].max(1.0),
            "eigenvalue {i}: {} vs {}",
            pca.explained_variance()[i],
            values[i]
        );
        let got = pca.components().row(i);
        let want = vectors.column(i);
        let same = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let flip = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        assert!(
            same.min(flip) <= 1e-8,
            "component {i} differs by {}",
            same.min(flip)
        );
    }
}

#[test]
fn tall_matrices_match_jacobi() {
    check_against_jacobi(&random(5, 3, 1), 2);
    check_against_jacobi(&random(40, 6, 2), 6);
    check_against_jacobi(&random(12, 9, 3), 4);
}

#[test]
fn wide_matrices_match_jacobi() {
    check_against_jacobi(&random(6, 10, 4), 5);
    check_against_jacobi(&random(4, 7, 5), 3);
}

#[test]
fn largest_coordinate_of_each_component_is_positive() {
    let pca = PcaModel::fit(random(30, 5, 6).view(), 5).unwrap();
    for row in pca.components().rows() {
        let top = row
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(top > 0.0);
    }
}
