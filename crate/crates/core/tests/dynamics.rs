use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid_core::dynamics::*;

/// Every word of length `n` with its image interval, found by brute force:
/// collect all `y` with `τ^n(y) = x` by solving `ℓ^n y = x + j` and read the
/// itinerary of `y` backwards.
fn brute_preimages(lap: u32, n: usize, x: f64) -> Vec<(Vec<u32>, f64)> {
    let l = lap as f64;
    let ln = l.powi(n as i32);
    (0..lap.pow(n as u32))
        .map(|j| {
            let y = (x + j as f64) / ln;
            let mut digits = Vec::with_capacity(n);
            let mut z = y;
            for _ in 0..n {
                let d = ((z * l).floor() as u32).min(lap - 1);
                digits.push(d + 1);
                z = z * l - d as f64;
            }
            digits.reverse();
            (digits, y)
        })
        .collect()
}

#[test]
fn word_point_matches_preimage_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for lap in [2u32, 3] {
        for n in 1..=4 {
            for _ in 0..100 {
                let x: f64 = rng.gen();
                for (digits, y) in brute_preimages(lap, n, x) {
                    let w = Word::new(digits);
                    let got = word_point(lap, &w, x);
                    assert!((got - y).abs() < 1e-14, "lap {lap} word {w} x {x}: {got} vs {y}");
                    assert!(PartitionInterval::new(lap, w.clone()).contains(got), "{w} misses {got}");
                    assert!((tau_pow(lap, n, got) - x).abs() < 1e-11);
                }
            }
        }
    }
}

#[test]
fn partition_intervals_tile_the_circle() {
    for lap in [2u32, 3, 4] {
        for n in 1..=3 {
            let mut iv: Vec<(f64, f64)> = Word::all(lap, n)
                .map(|w| {
                    let p = PartitionInterval::new(lap, w);
                    (p.left, p.left + p.width)
                })
                .collect();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(iv[0].0, 0.0);
            for pair in iv.windows(2) {
                assert!((pair[0].1 - pair[1].0).abs() < 1e-15);
            }
            assert!((iv.last().unwrap().1 - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn two_symbol_example() {
    assert_eq!(word_point(2, &Word::new(vec![1, 2]), 0.0), 0.5);
    assert_eq!(word_point(3, &Word::new(vec![3]), 0.0), 2.0 / 3.0);
}

#[test]
fn trapping_region_is_forward_invariant() {
    let p = SystemParams::new(3, 0.6, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let a = p.alpha0();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100_000 {
        let (x, y) = (rng.gen::<f64>(), (2.0 * rng.gen::<f64>() - 1.0) * a);
        let (x1, y1) = p.step((x, y));
        assert!((0.0..1.0).contains(&x1));
        assert!(y1.abs() <= a, "{y1} escapes {a}");
    }
}

#[test]
fn branch_sum_derivatives_match_finite_differences() {
    let f = TrigPoly::new(vec![0.0, 1.0, 0.3], vec![0.0, -0.5, 0.2]);
    let p = SystemParams::new(3, 0.6, f).unwrap();
    let a = Word::new(vec![2, 1, 3, 3, 2]);
    let h = 1e-5;
    for &x in &[0.1, 0.45, 0.8] {
        for nu in 0..3 {
            let fd = (branch_sum_deriv(&p, &a, x + h, nu) - branch_sum_deriv(&p, &a, x - h, nu)) / (2.0 * h);
            let exact = branch_sum_deriv(&p, &a, x, nu + 1);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "nu {nu}: {fd} vs {exact}");
        }
    }
}

#[test]
fn tail_bound_dominates_truncation_error() {
    let p = SystemParams::new(2, 0.7, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let inf = InfiniteWord { head: Word::new(vec![2, 1, 2]), cycle: vec![2, 1, 1] };
    let long = inf.truncate(200);
    for depth in [1, 3, 8, 20] {
        for nu in 0..=3 {
            let (short, bound) = tail_truncate(&p, &inf, depth, nu);
            let err = (branch_sum_deriv(&p, &long, 0.3, nu) - branch_sum_deriv(&p, &short, 0.3, nu)).abs();
            assert!(err <= bound + 1e-12, "depth {depth} nu {nu}: {err} > {bound}");
            let loose = p.lambda.powi(depth as i32) * p.alpha0() * 2f64.powi(-(nu as i32));
            assert!(bound <= loose * (1.0 + 1e-12));
        }
    }
}

#[test]
fn extension_agrees_with_branch_sum_on_the_interval() {
    let p = SystemParams::new(3, 0.5, TrigPoly::sin_mode(2, 0.7)).unwrap();
    let c = PartitionInterval::new(3, Word::new(vec![2, 3]));
    let a = Word::new(vec![1, 3]);
    for k in 0..10 {
        let x = c.left + c.width * (k as f64 + 0.5) / 10.0;
        let ext = branch_sum_ext(&p, &c, &a, x, 1).unwrap();
        assert!((ext - branch_sum_deriv(&p, &a, x, 1)).abs() < 1e-13);
    }
    assert!(branch_sum_ext(&p, &c, &a, 0.3, 0).is_err());
}

fn arb_word(lap: u32) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=lap, 1..12).prop_map(Word::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn certified_alpha_bound(
        lap in 2u32..=4,
        lambda in 0.05f64..0.95,
        a1 in -1.0f64..1.0,
        b2 in -1.0f64..1.0,
        word_seed in any::<u64>(),
        x in 0.0f64..1.0,
        nu in 0u32..=3,
    ) {
        let f = TrigPoly::new(vec![0.0, a1, 0.0], vec![0.0, 0.0, b2]);
        let p = SystemParams::new(lap, lambda, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(word_seed);
        let n = rng.gen_range(1..30);
        let a = Word::new((0..n).map(|_| rng.gen_range(1..=lap)).collect());
        let v = (lap as f64).powi(nu as i32) * branch_sum_deriv(&p, &a, x, nu).abs();
        prop_assert!(v <= p.alpha0() + 1e-9);
    }

    #[test]
    fn lift_and_circle_agree(lap in 2u32..=5, w in arb_word(2), x in 0.0f64..1.0) {
        let y = word_point(lap, &w, x);
        let z = word_point_lift(lap, &w, x);
        prop_assert!((y - z).abs() < 1e-14);
    }
}
