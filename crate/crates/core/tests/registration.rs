mod support;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use srr_core::flow::{flow_to_global, horn_schunck_flow, upscale_motion, FlowParams};
use srr_core::io::load_image;
use srr_core::ops::{apply_warp, KernelOperator};
use srr_core::{FlowField, Frame, Motion};
use support::dense::{random_frame, rng};

fn pool() -> Vec<Frame> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/images");
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_image(p).unwrap()).collect()
}

fn band_limited(f: &Frame) -> Frame {
    let k = KernelOperator::uniform(3).unwrap();
    k.apply(&k.apply(f).unwrap()).unwrap()
}

fn global(m: &Motion) -> (f64, f64) {
    match m {
        Motion::Global { dy, dx } => (*dy, *dx),
        Motion::Dense(_) => unreachable!(),
    }
}

#[test]
fn identical_frames_give_zero_flow() {
    let images = pool();
    let a = band_limited(&images[1].crop(100, 100, 48, 48).unwrap());
    let est = horn_schunck_flow(&a, &a, &FlowParams::default()).unwrap();
    assert!(est.flow.dy().iter().chain(est.flow.dx()).all(|v| v.abs() < 1e-6));
}

#[test]
fn shift_battery() {
    let images = pool();
    let mut r = rng(51);
    let mut hits = 0;
    for n in 0..50 {
        let img = &images[n % images.len()];
        let (row, col) = (r.random_range(0..img.height() - 64), r.random_range(0..img.width() - 64));
        let a = band_limited(&img.crop(row, col, 64, 64).unwrap());
        let (sy, sx) = (r.random_range(-2i32..=2) as f64, r.random_range(-2i32..=2) as f64);
        let b = apply_warp(&Motion::global(sy, sx), &a).unwrap();
        let est = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
        let (dy, dx) = global(&flow_to_global(&est.flow));
        if (dy - sy).abs() <= 0.2 && (dx - sx).abs() <= 0.2 {
            hits += 1;
        }
    }
    assert!(hits >= 45, "{hits}/50 shifts recovered");
}

#[test]
fn unit_row_shift_of_a_smooth_frame() {
    let a = Frame::from_fn(32, 32, |i, j| {
        let (y, x) = (i as f64 / 32.0 * std::f64::consts::TAU, j as f64 / 32.0 * std::f64::consts::TAU);
        128.0 + 50.0 * y.sin() + 40.0 * (x + y).cos() + 20.0 * (2.0 * x).sin()
    });
    let b = apply_warp(&Motion::global(1.0, 0.0), &a).unwrap();
    let est = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
    let (dy, dx) = global(&flow_to_global(&est.flow));
    assert!((dy - 1.0).abs() < 0.2 && dx.abs() < 0.2, "({dy}, {dx})");
}

/// Minimizer of the single-level quadratic energy
/// `sum (ix u + iy v + it)^2 + lambda sum |forward differences of u, v|^2`
/// by a dense linear solve.
fn dense_single_level(a: &Frame, b: &Frame, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = a.dims();
    let n = h * w;
    let g = Frame::from_fn(h, w, |i, j| 0.5 * (a.get(i, j) + b.get(i, j)));
    let mut sys = DMatrix::zeros(2 * n, 2 * n);
    let mut rhs = DVector::zeros(2 * n);
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let ix = 0.5 * (g.get_wrapped(i as isize, j as isize + 1) - g.get_wrapped(i as isize, j as isize - 1));
            let iy = 0.5 * (g.get_wrapped(i as isize + 1, j as isize) - g.get_wrapped(i as isize - 1, j as isize));
            let it = b.get(i, j) - a.get(i, j);
            sys[(k, k)] += ix * ix;
            sys[(k, n + k)] += ix * iy;
            sys[(n + k, k)] += ix * iy;
            sys[(n + k, n + k)] += iy * iy;
            rhs[k] -= ix * it;
            rhs[n + k] -= iy * it;
            for m in [i * w + (j + 1) % w, ((i + 1) % h) * w + j] {
                for off in [0, n] {
                    sys[(off + k, off + k)] += lambda;
                    sys[(off + m, off + m)] += lambda;
                    sys[(off + k, off + m)] -= lambda;
                    sys[(off + m, off + k)] -= lambda;
                }
            }
        }
    }
    let z = sys.lu().solve(&rhs).unwrap();
    (z.rows(0, n).iter().copied().collect(), z.rows(n, n).iter().copied().collect())
}

#[test]
fn single_level_matches_dense_solve() {
    let mut r = rng(52);
    let a = band_limited(&random_frame(&mut r, 8, 8, 100.0));
    let b = apply_warp(&Motion::global(0.4, -0.3), &a).unwrap();
    let lambda = 2.0;
    let p = FlowParams { smoothness_weight: lambda, pyramid_levels: 1, max_sweeps: 20_000, tolerance: 0.0, warps_per_level: 1, relaxation: 1.0, ..Default::default() };
    let est = horn_schunck_flow(&a, &b, &p).unwrap();
    let (u, v) = dense_single_level(&a, &b, lambda);
    for k in 0..64 {
        assert!((est.flow.dx()[k] - u[k]).abs() < 1e-6, "u[{k}]");
        assert!((est.flow.dy()[k] - v[k]).abs() < 1e-6, "v[{k}]");
    }
}

#[test]
fn energy_never_increases_within_a_level() {
    let images = pool();
    for (n, img) in images.iter().enumerate() {
        let a = img.crop(40 * n, 30, 48, 48).unwrap();
        let b = img.crop(40 * n + 1, 32, 48, 48).unwrap();
        let est = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
        for pass in est.levels.iter().flat_map(|l| &l.passes) {
            for pair in pass.energies.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pass:?}");
            }
        }
    }
}

#[test]
fn flow_reductions() {
    let c = FlowField::constant(6, 6, 0.5, -1.0);
    assert_eq!(flow_to_global(&c), Motion::global(0.5, -1.0));
    assert_eq!(flow_to_global(&FlowField::constant(6, 6, 0.0, 0.0)), Motion::zero());
    let mut r = rng(53);
    let dy: Vec<f64> = (0..48).map(|_| r.random_range(-3.0..3.0)).collect();
    let dx: Vec<f64> = (0..48).map(|_| r.random_range(-3.0..3.0)).collect();
    let (my, mx) = (dy.iter().sum::<f64>() / 48.0, dx.iter().sum::<f64>() / 48.0);
    let (gy, gx) = global(&flow_to_global(&FlowField::new(6, 8, dy, dx).unwrap()));
    assert!((gy - my).abs() < 1e-12 && (gx - mx).abs() < 1e-12);

    assert_eq!(upscale_motion(&Motion::global(1.0, 0.0), 2).unwrap(), Motion::global(2.0, 0.0));
    assert_eq!(upscale_motion(&Motion::zero(), 2).unwrap(), Motion::zero());
    match upscale_motion(&Motion::Dense(FlowField::constant(4, 5, 0.25, -0.75)), 2).unwrap() {
        Motion::Dense(f) => {
            assert_eq!(f.dims(), (8, 10));
            assert!(f.dy().iter().all(|v| (v - 0.5).abs() < 1e-12));
            assert!(f.dx().iter().all(|v| (v + 1.5).abs() < 1e-12));
        }
        other => panic!("{other:?}"),
    }
    assert!(horn_schunck_flow(&Frame::zeros(8, 8), &Frame::zeros(8, 9), &FlowParams::default()).is_err());
}
