use emoglass::data::GrayImage;
use emoglass::fisher::{fisher_criterion, fit_fisherface, fit_lda, fit_pca, scatter_matrices, RIDGE_FACTOR};
use emoglass::synth::synth_frames;
use emoglass::{Error, Matrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_cloud(seed: u64, means: &[Vec<f64>], per_class: usize, sd: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, m) in means.iter().enumerate() {
        for _ in 0..per_class {
            rows.push(m.iter().map(|v| v + n.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    (rows, labels)
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn rank_one_data_gives_one_axis() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.7 - 3.0, 2.0, -1.0, 0.5]).collect();
    let b = fit_pca(&rows, 0.9, None).unwrap();
    assert_eq!(b.n_components(), 1);
    assert!((b.components.get(0, 0).abs() - 1.0).abs() < 1e-9);
}

#[test]
fn wide_and_tall_paths_agree() {
    // 10 rows in 40 dimensions goes through the Gram matrix
    let means: Vec<Vec<f64>> = (0..2).map(|c| (0..40).map(|j| ((c * 7 + j) % 5) as f64).collect()).collect();
    let (rows, _) = gaussian_cloud(4, &means, 5, 1.0);
    let b = fit_pca(&rows, 0.999, None).unwrap();

    let n = rows.len();
    let mean: Vec<f64> = (0..40).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let x = DMatrix::from_fn(n, 40, |i, j| rows[i][j] - mean[j]);
    let cov = x.transpose() * &x / (n - 1) as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..40).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    for k in 0..b.n_components() {
        let want = eig.eigenvalues[order[k]];
        assert!((b.eigenvalues[k] - want).abs() < 1e-8 * want.max(1.0));
        let v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        assert!((dot(&b.components.column(k), &v).abs() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn reconstruction_error_shrinks_with_components() {
    let means: Vec<Vec<f64>> = (0..3).map(|c| (0..8).map(|j| (c * j) as f64 * 0.3).collect()).collect();
    let (rows, _) = gaussian_cloud(8, &means, 10, 0.5);
    let mut last = f64::INFINITY;
    for p in 1..=8 {
        let b = fit_pca(&rows, 1.0 - 1e-12, Some(p)).unwrap();
        let err: f64 = rows
            .iter()
            .map(|r| {
                let back = b.reconstruct(&b.project(r).unwrap());
                r.iter().zip(&back).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
            })
            .sum();
        assert!(err <= last + 1e-9, "p {p}: {err} > {last}");
        last = err;
    }
}

#[test]
fn two_class_direction_matches_closed_form() {
    let (rows, labels) = gaussian_cloud(1, &[vec![0.0, 0.0, 0.0], vec![1.0, 2.0, -1.0]], 30, 0.8);
    let lda = fit_lda(&rows, &labels).unwrap();
    assert_eq!(lda.weights.cols, 1);
    let (_, sw) = scatter_matrices(&rows, &labels);
    let eps = RIDGE_FACTOR * sw.trace() / 3.0;
    let reg = &sw + DMatrix::<f64>::identity(3, 3) * eps;
    let mean = |c: usize| -> DVector<f64> {
        let m: Vec<&Vec<f64>> = rows.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        DVector::from_fn(3, |j, _| m.iter().map(|r| r[j]).sum::<f64>() / m.len() as f64)
    };
    let want = reg.try_inverse().unwrap() * (mean(1) - mean(0));
    let want = want.normalize();
    let cos = dot(&lda.weights.column(0), want.as_slice()).abs();
    assert!((cos - 1.0).abs() < 1e-9, "cosine {cos}");
}

#[test]
fn four_classes_give_three_directions_that_beat_random() {
    let means = vec![vec![0.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 1.0, 0.0], vec![0.0, 2.0, 0.0, 1.0], vec![1.0, 1.0, 2.0, 2.0]];
    let (rows, labels) = gaussian_cloud(2, &means, 20, 1.0);
    let lda = fit_lda(&rows, &labels).unwrap();
    assert_eq!(lda.weights.cols, 3);
    let (sb, sw) = scatter_matrices(&rows, &labels);
    let w = to_dmatrix(&lda.weights);
    assert_eq!(w.clone().rank(1e-9), 3);
    let best = fisher_criterion(&w, &sb, &sw).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..100 {
        let r = DMatrix::from_fn(4, 3, |_, _| n.sample(&mut rng));
        let q = r.qr().q();
        assert!(fisher_criterion(&q, &sb, &sw).unwrap() <= best + 1e-9);
    }
}

#[test]
fn rotated_input_gives_rotated_directions() {
    let means = vec![vec![0.0, 0.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 2.0]];
    let (rows, labels) = gaussian_cloud(3, &means, 15, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = Normal::new(0.0, 1.0).unwrap();
    let rot = DMatrix::from_fn(3, 3, |_, _| n.sample(&mut rng)).qr().q();
    let rotated: Vec<Vec<f64>> = rows.iter().map(|r| (&rot * DVector::from_column_slice(r)).as_slice().to_vec()).collect();
    let a = fit_lda(&rows, &labels).unwrap();
    let b = fit_lda(&rotated, &labels).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
    }
    let wa = to_dmatrix(&a.weights);
    let wb = to_dmatrix(&b.weights);
    let back = rot.transpose() * wb;
    for k in 0..wa.ncols() {
        let c = wa.column(k).dot(&back.column(k));
        assert!((c.abs() - 1.0).abs() < 1e-8, "column {k}: {c}");
    }
}

fn face_set(seed: u64, per_class: usize, dims: (usize, usize)) -> (Vec<GrayImage>, Vec<usize>) {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for c in 0..4 {
        let f = synth_frames(c, per_class, dims, 1.0, seed).unwrap();
        for fr in &f.frames {
            images.push(GrayImage::from_u8(dims.0, dims.1, fr).unwrap());
            labels.push(c);
        }
    }
    (images, labels)
}

#[test]
fn mean_image_projects_to_origin() {
    let (images, labels) = face_set(1, 8, (12, 10));
    let model = fit_fisherface(&images, &labels, 0.9).unwrap();
    assert_eq!(model.output_dim(), 3);
    let mean: Vec<f64> = (0..120).map(|j| images.iter().map(|im| im.pixels[j]).sum::<f64>() / images.len() as f64).collect();
    let z = model.project(&GrayImage::new(12, 10, mean).unwrap()).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-9), "{z:?}");
}

#[test]
fn projection_is_affine() {
    let (images, labels) = face_set(2, 8, (12, 10));
    let model = fit_fisherface(&images, &labels, 0.9).unwrap();
    let (x, y) = (&images[0].pixels, &images[20].pixels);
    for a in [0.0, 0.3, 0.5, 1.0] {
        let mix: Vec<f64> = x.iter().zip(y).map(|(p, q)| a * p + (1.0 - a) * q).collect();
        let pm = model.project_pixels(&mix).unwrap();
        let (px, py) = (model.project_pixels(x).unwrap(), model.project_pixels(y).unwrap());
        for k in 0..pm.len() {
            assert!((pm[k] - (a * px[k] + (1.0 - a) * py[k])).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_pixel_offset_changes_nothing() {
    let (images, labels) = face_set(3, 8, (12, 10));
    let shifted: Vec<GrayImage> = images
        .iter()
        .map(|im| GrayImage::new(12, 10, im.pixels.iter().map(|v| v + 17.0).collect()).unwrap())
        .collect();
    let a = fit_fisherface(&images, &labels, 0.9).unwrap();
    let b = fit_fisherface(&shifted, &labels, 0.9).unwrap();
    for (im, sh) in images.iter().zip(&shifted) {
        let (pa, pb) = (a.project(im).unwrap(), b.project(sh).unwrap());
        for (u, v) in pa.iter().zip(&pb) {
            assert!((u - v).abs() < 1e-7 * u.abs().max(1.0));
        }
    }
}

#[test]
fn training_is_repeatable_and_pairing_invariant() {
    let (images, labels) = face_set(4, 6, (10, 8));
    let a = fit_fisherface(&images, &labels, 0.9).unwrap();
    assert_eq!(a, fit_fisherface(&images, &labels, 0.9).unwrap());
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.reverse();
    let im2: Vec<GrayImage> = order.iter().map(|&i| images[i].clone()).collect();
    let lb2: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let b = fit_fisherface(&im2, &lb2, 0.9).unwrap();
    assert_eq!(a.output_dim(), b.output_dim());
    for im in &images {
        let (pa, pb) = (a.project(im).unwrap(), b.project(im).unwrap());
        for (u, v) in pa.iter().zip(&pb) {
            assert!((u - v).abs() < 1e-8 * u.abs().max(1.0));
        }
    }
}

#[test]
fn templates_separate_beyond_noise() {
    let (images, labels) = face_set(5, 30, (16, 12));
    let model = fit_fisherface(&images, &labels, 0.9).unwrap();
    let proj: Vec<Vec<f64>> = images.iter().map(|im| model.project(im).unwrap()).collect();
    let centroid = |c: usize| -> Vec<f64> {
        let m: Vec<&Vec<f64>> = proj.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
        (0..3).map(|k| m.iter().map(|p| p[k]).sum::<f64>() / m.len() as f64).collect()
    };
    let cents: Vec<Vec<f64>> = (0..4).map(centroid).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let spread = (proj.iter().zip(&labels).map(|(p, &l)| dist(p, &cents[l]).powi(2)).sum::<f64>() / proj.len() as f64).sqrt();
    for i in 0..4 {
        for j in i + 1..4 {
            assert!(dist(&cents[i], &cents[j]) > 3.0 * spread, "classes {i},{j}");
        }
    }
}

#[test]
fn singleton_class_is_rejected() {
    let (mut images, mut labels) = face_set(6, 5, (8, 8));
    images.push(images[0].clone());
    labels.push(4);
    assert!(matches!(
        fit_fisherface(&images, &labels, 0.9),
        Err(Error::Stage { .. }) | Err(Error::InsufficientInstances { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pca_basis_is_orthonormal(seed in 0u64..500, n in 6usize..30, dim in 2usize..12) {
        let means = vec![vec![0.0; dim]];
        let (rows, _) = gaussian_cloud(seed, &means, n, 1.0);
        let b = fit_pca(&rows, 0.9, None).unwrap();
        let p = b.n_components();
        for i in 0..p {
            for j in 0..p {
                let d = dot(&b.components.column(i), &b.components.column(j));
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-8);
            }
        }
        prop_assert!(b.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(b.retained_fraction() > 0.9);
    }

    #[test]
    fn lda_dimension_bounded_by_classes(seed in 0u64..500, classes in 2usize..5) {
        let means: Vec<Vec<f64>> = (0..classes).map(|c| vec![c as f64, (c * c) as f64 * 0.3, 0.0, 1.0, -(c as f64)]).collect();
        let (rows, labels) = gaussian_cloud(seed, &means, 8, 1.0);
        let lda = fit_lda(&rows, &labels).unwrap();
        prop_assert!(lda.weights.cols >= 1 && lda.weights.cols < classes);
    }
}
