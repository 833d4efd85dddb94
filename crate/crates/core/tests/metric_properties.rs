use proptest::prelude::*;
use rand::Rng;
use semcom_core::metrics::{psnr, ssim_global, ssim_windowed};
use semcom_core::rng::stream;
use semcom_core::Image;

fn random_image(c: usize, h: usize, w: usize, seed: u64) -> Image {
    let mut rng = stream(seed, "image", 0);
    Image::new(c, h, w, (0..c * h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Direct per-window evaluation with a 2-D kernel and explicit weighted
/// moments, independent of the separable implementation.
fn reference_ssim(a: &Image, b: &Image) -> f64 {
    let k = 11usize;
    let sigma = 1.5f64;
    let mut kernel = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            kernel[i * k + j] = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = (0.0001, 0.0009);
    let (h, w) = (a.height(), a.width());
    let mut acc = 0.0;
    for c in 0..a.channels() {
        let mut plane = 0.0;
        for y in 0..=h - k {
            for x in 0..=w - k {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..k {
                    for j in 0..k {
                        let wgt = kernel[i * k + j];
                        ma += wgt * a.get(c, y + i, x + j);
                        mb += wgt * b.get(c, y + i, x + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..k {
                    for j in 0..k {
                        let wgt = kernel[i * k + j];
                        let da = a.get(c, y + i, x + j) - ma;
                        let db = b.get(c, y + i, x + j) - mb;
                        va += wgt * da * da;
                        vb += wgt * db * db;
                        cov += wgt * da * db;
                    }
                }
                plane += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        }
        acc += plane / ((h - k + 1) * (w - k + 1)) as f64;
    }
    acc / a.channels() as f64
}

#[test]
fn windowed_ssim_matches_reference_on_random_pairs() {
    for seed in 0..20 {
        let a = random_image(1, 128, 128, 100 + seed);
        // correlated partner so scores spread beyond the near-zero noise floor
        let noise = random_image(1, 128, 128, 200 + seed);
        let mix = (seed as f64) / 20.0;
        let data = a
            .data()
            .iter()
            .zip(noise.data())
            .map(|(x, n)| (1.0 - mix) * x + mix * n)
            .collect();
        let b = Image::new(1, 128, 128, data).unwrap();
        let got = ssim_windowed(&a, &b).unwrap();
        let want = reference_ssim(&a, &b);
        assert!((got - want).abs() < 1e-6, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn windowed_matches_global_on_noise_fields() {
    for seed in 0..5 {
        let a = random_image(3, 64, 64, 300 + seed);
        let b = random_image(3, 64, 64, 400 + seed);
        let (w, g) = (ssim_windowed(&a, &b).unwrap(), ssim_global(&a, &b).unwrap());
        assert!((w - g).abs() < 0.02, "{w} vs {g}");
    }
}

#[test]
fn psnr_decreases_with_noise_level() {
    let a = random_image(3, 32, 32, 5);
    let noise = random_image(3, 32, 32, 6);
    let mut last = f64::INFINITY;
    for step in 1..=10 {
        let amp = 0.02 * step as f64;
        let data = a
            .data()
            .iter()
            .zip(noise.data())
            .map(|(x, n)| x + amp * (n - 0.5))
            .collect();
        let b = Image::new(3, 32, 32, data).unwrap();
        let v = psnr(&a, &b).unwrap();
        assert!(v < last);
        last = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ssim_is_symmetric_and_bounded(
        a in prop::collection::vec(0.0f64..=1.0, 3 * 12 * 12),
        b in prop::collection::vec(0.0f64..=1.0, 3 * 12 * 12),
    ) {
        let a = Image::new(3, 12, 12, a).unwrap();
        let b = Image::new(3, 12, 12, b).unwrap();
        for f in [ssim_global, ssim_windowed] {
            let (x, y) = (f(&a, &b).unwrap(), f(&b, &a).unwrap());
            prop_assert_eq!(x, y);
            prop_assert!(x.abs() <= 1.0 + 1e-12);
        }
        prop_assert!((ssim_windowed(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
