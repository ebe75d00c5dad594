use solenoid_core::dynamics::{branch_sum_lift, PartitionInterval, SystemParams, TrigPoly, Word};
use solenoid_core::transversality::*;

const ORACLE_STEP: f64 = 1e-5;

/// Range of `S_c'(·, a)` over a dense grid of the closed enlarged interval.
fn oracle_range(p: &SystemParams, a: &Word, c: &Word) -> (f64, f64) {
    let (lo, hi) = PartitionInterval::starred(p.lap, c.clone()).lift_bounds();
    let n = ((hi - lo) / ORACLE_STEP).ceil() as usize;
    (0..=n).fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), i| {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let d = branch_sum_lift(&p.f, p.lap, p.lambda, a, x, 1);
        (mn.min(d), mx.max(d))
    })
}

/// Non-transversal when the two ranges come within `θ` of each other.
fn oracle_nt(ra: (f64, f64), rb: (f64, f64), theta: f64) -> bool {
    let gap = (rb.0 - ra.1).max(ra.0 - rb.1).max(0.0);
    gap <= theta
}

fn oracle_count(p: &SystemParams, q: usize, pp: usize) -> u64 {
    let theta = threshold(p, q);
    let words: Vec<Word> = Word::all(p.lap, q).collect();
    Word::all(p.lap, pp)
        .map(|c| {
            let ranges: Vec<_> = words.iter().map(|a| oracle_range(p, a, &c)).collect();
            (0..words.len())
                .map(|i| (0..words.len()).filter(|&j| oracle_nt(ranges[i], ranges[j], theta)).count() as u64)
                .max()
                .unwrap()
        })
        .max()
        .unwrap()
}

#[test]
fn bracket_contains_oracle_count() {
    let cases = [
        SystemParams::new(2, 0.5, TrigPoly::cos_mode(1, 1.0)).unwrap(),
        SystemParams::new(2, 0.02, TrigPoly::cos_mode(1, 1.0)).unwrap(),
        SystemParams::new(3, 0.005, TrigPoly::new(vec![0.0, 1.0], vec![0.0, 0.4])).unwrap(),
    ];
    for p in &cases {
        for (q, pp) in [(1, 1), (1, 3), (2, 1), (2, 2)] {
            let r = e_qp(p, q, pp, &TransversalityOptions::default()).unwrap();
            let oracle = oracle_count(p, q, pp);
            assert!(
                r.e_lower <= oracle && oracle <= r.e_upper,
                "lap {} lambda {} q {q} p {pp}: oracle {oracle} outside [{}, {}]",
                p.lap,
                p.lambda,
                r.e_lower,
                r.e_upper
            );
        }
    }
}

#[test]
fn certified_verdicts_agree_with_oracle() {
    let p = SystemParams::new(2, 0.5, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let small = SystemParams::new(2, 0.01, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let mut decided = 0;
    for params in [&p, &small] {
        let q = 2;
        let theta = threshold(params, q);
        for c in Word::all(2, 2) {
            for a in Word::all(2, q) {
                for b in Word::all(2, q) {
                    let v = pair_check(params, &a, &b, &c, default_grid_step(params, q));
                    let nt = oracle_nt(oracle_range(params, &a, &c), oracle_range(params, &b, &c), theta);
                    match v.status {
                        Status::Transversal => assert!(!nt, "{a} {b} {c}"),
                        Status::NotTransversal => assert!(nt, "{a} {b} {c}"),
                        Status::Unknown => continue,
                    }
                    decided += 1;
                }
            }
        }
    }
    assert!(decided > 0);
}

#[test]
fn small_contraction_yields_transversal_pairs() {
    let p = SystemParams::new(2, 0.01, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let h = default_grid_step(&p, 1);
    let statuses: Vec<Status> = pair_certificates(&p, 1, 3, h).iter().map(|v| v.status).collect();
    assert!(statuses.contains(&Status::Transversal));
}

#[test]
fn refinement_never_flips_a_decided_verdict() {
    let p = SystemParams::new(3, 0.02, TrigPoly::cos_mode(1, 1.0)).unwrap();
    let h0 = default_grid_step(&p, 1) * 4.0;
    for c in Word::all(3, 2) {
        for a in Word::all(3, 1) {
            for b in Word::all(3, 1) {
                let mut seen = vec![pair_check(&p, &a, &b, &c, h0).status];
                for k in 1..=4 {
                    seen.push(pair_check(&p, &a, &b, &c, h0 / 2f64.powi(k)).status);
                }
                let t = seen.contains(&Status::Transversal);
                let nt = seen.contains(&Status::NotTransversal);
                assert!(!(t && nt), "{a} {b} {c}: {seen:?}");
            }
        }
    }
}

#[test]
fn verdicts_are_symmetric() {
    let p = SystemParams::new(2, 0.02, TrigPoly::new(vec![0.0, 1.0, 0.5], vec![])).unwrap();
    let h = default_grid_step(&p, 2);
    for c in Word::all(2, 2) {
        for a in Word::all(2, 2) {
            for b in Word::all(2, 2) {
                assert_eq!(pair_check(&p, &a, &b, &c, h).status, pair_check(&p, &b, &a, &c, h).status);
            }
        }
    }
}

#[test]
fn zero_drive_counts_every_pair() {
    for lap in [2u32, 3] {
        let p = SystemParams::new(lap, 0.4, TrigPoly::zero()).unwrap();
        for q in 1..=2 {
            for pp in 1..=3 {
                let r = e_qp(&p, q, pp, &TransversalityOptions::default()).unwrap();
                let full = (lap as u64).pow(q as u32);
                assert_eq!((r.e_lower, r.e_upper), (full, full));
            }
            let s = e_q_stabilized(&p, q, 4, &TransversalityOptions::default());
            assert!(s.stabilized);
            assert_eq!(s.p0, Some(1));
        }
    }
}

#[test]
fn single_symbol_statistic_is_at_least_two() {
    // Branch derivatives average to zero over a period, so two branches
    // always come close somewhere on the enlarged interval.
    for amp in [1.0, 10.0, 100.0] {
        let p = SystemParams::new(2, 0.3, TrigPoly::cos_mode(1, amp)).unwrap();
        let r = e_q_stabilized(&p, 1, 4, &TransversalityOptions::default());
        assert!(r.e_lower >= 1);
        assert!(r.e_upper >= 2);
    }
}

#[test]
fn growth_table_criterion_is_arithmetic() {
    let p = SystemParams::new(3, 0.6, TrigPoly::cos_mode(1, 1.0)).unwrap().with_s(0.3).unwrap();
    for r in growth_table(&p, 2, 3, &TransversalityOptions::default()) {
        let expected = r.e_upper as f64 / p.regime_factor().powi(r.q as i32);
        assert!((r.criterion - expected).abs() < 1e-12 * expected.max(1.0));
        assert!((r.growth_log - (r.e_upper as f64).ln() / r.q as f64).abs() < 1e-12);
        assert!(r.e_lower <= r.e_upper);
    }
}
