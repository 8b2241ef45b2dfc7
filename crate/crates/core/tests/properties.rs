//! Randomized invariants across modules.

mod common;

use proptest::prelude::*;

use ordinal_ts::data::{
    denormalize, fit_norm, inject_noise, make_windows, normalize, signal_power, split,
    window_count, NoiseSpec, RangeMode, SeriesTable, SplitRatios,
};
use ordinal_ts::eval::{mae_per_element, mse_per_element, reconstruct};
use ordinal_ts::loss::{ce, entropy, oce, ClampPolicy, LogBase, LossKind};
use ordinal_ts::model::{decompose, forward, init_params, HeadKind, ModelShape};
use ordinal_ts::numerics::{kron, linalg, softmax, Matrix, Rng};
use ordinal_ts::targetdist::{encode, make_bins, Family, TargetDistSpec};
use ordinal_ts::ProbVector;

fn simplex(k: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        ProbVector::new(v.iter().map(|x| x / s).collect()).unwrap()
    })
}

fn simplex_pair() -> impl Strategy<Value = (ProbVector, ProbVector)> {
    (2usize..12).prop_flat_map(|k| (simplex(k), simplex(k)))
}

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::TruncatedGaussian),
        Just(Family::StudentT),
        Just(Family::Laplace)
    ]
}

fn spd(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n, -1.0, 1.0)
        .prop_map(move |a| a.transpose().matmul(&a).unwrap().add_identity(0.1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(
        z in prop::collection::vec(-30.0f64..30.0, 1..50),
        c in -100.0f64..100.0,
    ) {
        let p = softmax(&z).unwrap();
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let q = softmax(&shifted).unwrap();
        prop_assert_eq!(p.argmax(), q.argmax());
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn kron_mixed_product(
        (a, b, c, d) in (1usize..4, 1usize..4, 1usize..4, 1usize..4, 1usize..4, 1usize..4)
            .prop_flat_map(|(m, n, p, q, r, s)| {
                (matrix(m, n, -2.0, 2.0), matrix(p, q, -2.0, 2.0), matrix(n, r, -2.0, 2.0), matrix(q, s, -2.0, 2.0))
            })
    ) {
        let lhs = kron(&a, &b).matmul(&kron(&c, &d)).unwrap();
        let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-8);
    }

    #[test]
    fn spd_eigenvalues_positive_and_condition_matches_norms(a in (1usize..7).prop_flat_map(spd)) {
        let eig = linalg::sym_eigen(&a).unwrap();
        prop_assert!(eig.values.iter().all(|&v| v > 0.0));
        let kappa = linalg::condition_number_spd(&a).unwrap();
        let inv = linalg::inverse(&a).unwrap();
        let via_norms = linalg::sym_spectral_norm(&a).unwrap() * linalg::sym_spectral_norm(&inv).unwrap();
        prop_assert!((kappa - via_norms).abs() <= 1e-8 * via_norms);
        let na = common::to_na(&a).symmetric_eigenvalues();
        prop_assert!((eig.max() - na.max()).abs() <= 1e-10 * na.max());
    }

    #[test]
    fn solve_round_trips(
        (a, b) in (1usize..8).prop_flat_map(|n| (spd(n), prop::collection::vec(-5.0f64..5.0, n)))
    ) {
        let x = linalg::solve(&a, &b).unwrap();
        let r = linalg::residual_norm(&a, &x, &b).unwrap();
        prop_assert!(r <= 1e-10 * (1.0 + ordinal_ts::numerics::norm2(&b)));
    }

    #[test]
    fn normalization_round_trips(
        x in (2usize..30, 1usize..4).prop_flat_map(|(r, c)| matrix(r, c, -1e3, 1e3)),
        sym in any::<bool>(),
    ) {
        let mode = if sym { RangeMode::SymOne } else { RangeMode::ZeroOne };
        let stats = fit_norm(&x, mode, 1e-8).unwrap();
        let z = normalize(&x, &stats).unwrap();
        let (a, b) = mode.support();
        prop_assert!(z.data().iter().all(|v| *v >= a - 1e-12 && *v <= b + 1e-12));
        let back = denormalize(&z, &stats).unwrap();
        prop_assert!(back.max_abs_diff(&x) <= 1e-9 * 1e3);
        let again = normalize(&denormalize(&z, &stats).unwrap(), &stats).unwrap();
        prop_assert!(again.max_abs_diff(&z) <= 1e-9);
    }

    #[test]
    fn window_count_matches_closed_form(t in 1usize..120, w in 1usize..30, h in 1usize..20, stride in 1usize..6) {
        let table = SeriesTable::new(
            Matrix::from_vec(t, 1, (0..t).map(|i| i as f64).collect()).unwrap(),
            vec!["v".into()],
        ).unwrap();
        let expected = if t >= w + h { (t - w - h) / stride + 1 } else { 0 };
        prop_assert_eq!(window_count(t, w, h, stride), expected);
        match make_windows(&table, w, h, stride) {
            Ok(ws) => {
                prop_assert_eq!(ws.len(), expected);
                for (i, win) in ws.iter().enumerate() {
                    prop_assert_eq!(win.lookback[(0, 0)], (i * stride) as f64);
                    prop_assert_eq!(win.horizon[(0, 0)], (i * stride + w) as f64);
                }
            }
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn splits_concatenate_to_original(t in 3usize..200) {
        let table = SeriesTable::new(
            Matrix::from_vec(t, 2, (0..2 * t).map(|i| i as f64 * 0.5).collect()).unwrap(),
            vec!["a".into(), "b".into()],
        ).unwrap();
        let (tr, va, te) = split(&table, &SplitRatios::default()).unwrap();
        let mut joined = tr.values.data().to_vec();
        joined.extend_from_slice(va.values.data());
        joined.extend_from_slice(te.values.data());
        prop_assert_eq!(joined.as_slice(), table.values.data());
    }

    #[test]
    fn encoding_peaks_in_the_target_bin(
        fam in family(),
        k in 2usize..100,
        u in 0.0f64..1.0,
        frac in 0.05f64..1.0,
        sym in any::<bool>(),
    ) {
        let (a, b) = if sym { (-1.0, 1.0) } else { (0.0, 1.0) };
        let bins = make_bins(k, a, b).unwrap();
        let y = a + u * (b - a);
        let spec = TargetDistSpec::new(fam, frac * bins.delta()).unwrap();
        let p = encode(y, &bins, &spec).unwrap();
        let own = p.as_slice()[bins.bin_of(y)];
        prop_assert!(p.as_slice().iter().all(|&v| v <= own + 1e-12));
    }

    #[test]
    fn encoding_is_continuous_across_edges(
        fam in family(),
        (k, e) in (2usize..60).prop_flat_map(|k| (Just(k), 1..k)),
        sigma in 1e-3f64..1.0,
    ) {
        let bins = make_bins(k, 0.0, 1.0).unwrap();
        let edge = bins.edges()[e];
        let spec = TargetDistSpec::new(fam, sigma).unwrap();
        let h = 5e-9;
        let at = |y: f64| encode(y, &bins, &spec).unwrap().into_vec();
        let (l2, l1, r1, r2) = (at(edge - 3.0 * h), at(edge - h), at(edge + h), at(edge + 3.0 * h));
        for c in 0..k {
            let across = (r1[c] - l1[c]).abs();
            // masses are C¹ in y, so a step over the edge matches its neighbours
            let beside = (l1[c] - l2[c]).abs().max((r2[c] - r1[c]).abs());
            prop_assert!(across <= 1.5 * beside + 1e-12, "bin {c}: {across:e} vs {beside:e}");
            // absolute bound where the exact slope (peak density) allows it
            if sigma >= 0.01 {
                prop_assert!(across <= 1e-6);
            }
        }
    }

    #[test]
    fn decomposition_is_additive(x in (5usize..40, 1usize..4).prop_flat_map(|(r, c)| matrix(r, c, -10.0, 10.0)), half in 0usize..3) {
        let ma = (2 * half + 1).min(if x.rows() % 2 == 0 { x.rows() - 1 } else { x.rows() });
        let (trend, seasonal) = decompose(&x, ma).unwrap();
        let sum = trend.add(&seasonal).unwrap();
        for (s, v) in sum.data().iter().zip(x.data()) {
            prop_assert!((s - v).abs() <= 4.0 * f64::EPSILON * v.abs().max(1.0));
        }
    }

    #[test]
    fn forward_invariances(seed in any::<u64>(), alpha in -3.0f64..3.0, shift in -5.0f64..5.0) {
        let shape = ModelShape { w: 12, h: 5, m: 3, k: 7, ma_window: 5, head: HeadKind::Shared };
        let params = init_params(shape, &mut Rng::new(seed), 0.2).unwrap();
        let mut rng = Rng::new(seed ^ 0xabc);
        let x = Matrix::from_vec(12, 3, (0..36).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let base = forward(&params, &x).unwrap();

        // channel permutation (2, 0, 1)
        let perm = [2usize, 0, 1];
        let mut xp = Matrix::zeros(12, 3);
        for (dst, &src) in perm.iter().enumerate() {
            xp.set_col(dst, &x.col(src));
        }
        let fp = forward(&params, &xp).unwrap();
        for j in 0..5 {
            for (dst, &src) in perm.iter().enumerate() {
                prop_assert_eq!(fp.point[(j, dst)], base.point[(j, src)]);
                prop_assert_eq!(fp.probs.get(j, dst), base.probs.get(j, src));
            }
        }

        let mut scaled = params.clone();
        scaled.w_t = params.w_t.scale(alpha);
        scaled.w_s = params.w_s.scale(alpha);
        let fs = forward(&scaled, &x).unwrap();
        prop_assert!(fs.point.max_abs_diff(&base.point.scale(alpha)) <= 1e-10);

        let mut biased = params.clone();
        biased.b_o.iter_mut().for_each(|b| *b += shift);
        let fb = forward(&biased, &x).unwrap();
        for (p, q) in fb.probs.cells().iter().zip(base.probs.cells()) {
            for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ce_dominates_entropy((p, q) in simplex_pair()) {
        let c = ce(&p, &q, LogBase::Natural).unwrap().value;
        prop_assert!(c >= entropy(&p) - 1e-10);
        prop_assert!(c >= 0.0);
        prop_assert!(oce(&p, &q, LogBase::Natural).unwrap().value >= 0.0);
        for kind in [LossKind::Ce, LossKind::Oce] {
            prop_assert!(kind.value(&p, &q, ClampPolicy::default()).unwrap() >= 0.0);
        }
    }

    #[test]
    fn permutation_behaviour((p, q) in simplex_pair(), rot in 1usize..11) {
        let k = p.len();
        let r = rot % k;
        let rotate = |v: &ProbVector| {
            let s = v.as_slice();
            ProbVector::new((0..k).map(|i| s[(i + r) % k]).collect()).unwrap()
        };
        let c0 = ce(&p, &q, LogBase::Natural).unwrap().value;
        let c1 = ce(&rotate(&p), &rotate(&q), LogBase::Natural).unwrap().value;
        prop_assert!((c0 - c1).abs() <= 1e-12 * c0.max(1.0));
        let o0 = oce(&p, &q, LogBase::Natural).unwrap().value;
        let o1 = oce(&p.reversed(), &q.reversed(), LogBase::Natural).unwrap().value;
        prop_assert!((o0 - o1).abs() <= 1e-10 * o0.max(1.0));
    }

    #[test]
    fn reconstruction_stays_in_support_and_is_monotone(
        p in (2usize..40).prop_flat_map(simplex),
        from in 0usize..40,
        to in 0usize..40,
        frac in 0.0f64..1.0,
        sym in any::<bool>(),
    ) {
        let k = p.len();
        let (a, b) = if sym { (-1.0, 1.0) } else { (0.0, 1.0) };
        let bins = make_bins(k, a, b).unwrap();
        let v = reconstruct(&p, &bins).unwrap();
        prop_assert!(v >= a && v <= b);
        let (lo, hi) = ((from % k).min(to % k), (from % k).max(to % k));
        let mut moved = p.as_slice().to_vec();
        let delta = moved[lo] * frac;
        moved[lo] -= delta;
        moved[hi] += delta;
        let w = reconstruct(&ProbVector::new(moved).unwrap(), &bins).unwrap();
        prop_assert!(w >= v - 1e-12);
    }

    #[test]
    fn mae_bounded_by_root_mse(
        (y, yhat) in (1usize..20, 1usize..4).prop_flat_map(|(r, c)| (matrix(r, c, -5.0, 5.0), matrix(r, c, -5.0, 5.0)))
    ) {
        let mse = mse_per_element(&y, &yhat).unwrap();
        let mae = mae_per_element(&y, &yhat).unwrap();
        prop_assert!(mae <= mse.sqrt() + 1e-12);
    }

    #[test]
    fn simplex_distance_decomposition(p in (2usize..10).prop_flat_map(simplex), y in 0usize..10) {
        let s = p.as_slice();
        let y = y % s.len();
        let direct: f64 = s.iter().enumerate().map(|(k, v)| (v - if k == y { 1.0 } else { 0.0 }).powi(2)).sum();
        let split_form = (1.0 - s[y]).powi(2) + s.iter().enumerate().filter(|(k, _)| *k != y).map(|(_, v)| v * v).sum::<f64>();
        prop_assert!((direct - split_form).abs() <= 1e-15);
        prop_assert!(direct.sqrt() <= std::f64::consts::SQRT_2);
    }
}

#[test]
fn noise_is_reproducible_and_hits_target_snr() {
    let n = 100_000;
    let mut rng = Rng::new(9);
    let values: Vec<f64> = (0..2 * n)
        .map(|i| {
            if i % 2 == 0 {
                (i as f64 * 0.01).sin()
            } else {
                2.0 + rng.uniform(-1.0, 1.0)
            }
        })
        .collect();
    let table = SeriesTable::new(
        Matrix::from_vec(n, 2, values).unwrap(),
        vec!["s".into(), "u".into()],
    )
    .unwrap();
    for snr in [-3.0, 0.0, 3.0, 10.0, 20.0] {
        let spec = NoiseSpec {
            snr_db: snr,
            seed: 1,
            enabled: true,
        };
        let a = inject_noise(&table, &spec, &mut Rng::new(1));
        let b = inject_noise(&table, &spec, &mut Rng::new(1));
        assert_eq!(a, b);
        let c = inject_noise(&table, &spec, &mut Rng::new(2));
        assert_ne!(a, c);
        for noisy in [&a, &c] {
            let diff = noisy.values.sub(&table.values).unwrap();
            let ps = signal_power(&table.values);
            let pn = signal_power(&diff);
            for (s, e) in ps.iter().zip(&pn) {
                let got = 10.0 * (s / e).log10();
                assert!((got - snr).abs() <= 0.5, "snr {snr}: realized {got}");
            }
        }
    }
}

#[test]
fn oce_is_ordinal_sensitive_where_ce_is_not() {
    let p = ProbVector::one_hot(3, 0).unwrap();
    let q1 = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
    let q2 = ProbVector::new(vec![0.5, 0.1, 0.4]).unwrap();
    let c1 = ce(&p, &q1, LogBase::Natural).unwrap().value;
    let c2 = ce(&p, &q2, LogBase::Natural).unwrap().value;
    assert_eq!(c1, c2);
    assert!(
        oce(&p, &q2, LogBase::Natural).unwrap().value
            > oce(&p, &q1, LogBase::Natural).unwrap().value
    );
}
