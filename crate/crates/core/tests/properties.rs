use proptest::prelude::*;

use remotefc_core::model::{axis, Arm, DistortionSpec, FunctionSpec, MultiModel, SourceModel};
use remotefc_core::multiregion::{eval_inner_mf, MultiAuxSystem};
use remotefc_core::osrbsim::{seq_index, seq_letters, BinRates};
use remotefc_core::probcore::{binary_entropy, Alphabet, CondDist, Dist, JointDist};
use remotefc_core::region::{self, AuxChannels, AuxSystem, Mode};

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn joint3() -> impl Strategy<Value = ([usize; 3], Vec<f64>)> {
    (1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(a, b, c)| {
        prop::collection::vec(0.01f64..1.0, a * b * c).prop_map(move |w| ([a, b, c], normalized(w)))
    })
}

fn make(shape: [usize; 3], t: Vec<f64>) -> JointDist<f64> {
    let axes = ["A", "B", "C"]
        .iter()
        .zip(shape)
        .map(|(n, s)| Alphabet::indexed(*n, s).unwrap())
        .collect();
    JointDist::new(axes, t).unwrap()
}

/// `Σ p log p(a,b,c)p(c) / p(a,c)p(b,c)` by explicit loops.
fn brute_cmi(shape: [usize; 3], t: &[f64]) -> f64 {
    let [sa, sb, sc] = shape;
    let at = |a: usize, b: usize, c: usize| t[(a * sb + b) * sc + c];
    let mut s = 0.0;
    for a in 0..sa {
        for b in 0..sb {
            for c in 0..sc {
                let p = at(a, b, c);
                let pc: f64 = (0..sa).map(|x| (0..sb).map(|y| at(x, y, c)).sum::<f64>()).sum();
                let pac: f64 = (0..sb).map(|y| at(a, y, c)).sum();
                let pbc: f64 = (0..sa).map(|x| at(x, b, c)).sum();
                s += p * (p * pc / (pac * pbc)).log2();
            }
        }
    }
    s
}

proptest! {
    #[test]
    fn cmi_matches_loops((shape, t) in joint3()) {
        let j = make(shape, t.clone());
        let got = j.cond_mutual_info(&["A"], &["B"], &["C"]).unwrap();
        prop_assert!((got - brute_cmi(shape, &t)).abs() <= 1e-12);
    }

    #[test]
    fn chain_rule((shape, t) in joint3()) {
        let j = make(shape, t);
        let whole = j.mutual_info(&["A"], &["B", "C"]).unwrap();
        let parts = j.mutual_info(&["A"], &["C"]).unwrap() + j.cond_mutual_info(&["A"], &["B"], &["C"]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12);
        prop_assert!(j.cond_entropy(&["A"], &["B", "C"]).unwrap() >= -1e-12);
    }

    #[test]
    fn sequence_index_round_trips(k in 1usize..5, n in 1usize..6, seed in any::<u64>()) {
        let idx = (seed as usize) % k.pow(n as u32);
        let l = seq_letters(idx, k, n);
        prop_assert_eq!(l.len(), n);
        prop_assert_eq!(seq_index(&l, k), idx);
    }

    #[test]
    fn bin_counts_cover_rate(r in 0.0f64..2.0, n in 1usize..10) {
        let c = BinRates::new(r, 0.0, 0.0, 0.0).unwrap().counts(n).unwrap();
        prop_assert!(c.f_v >= 1);
        prop_assert!((c.f_v as f64) >= 2f64.powf(n as f64 * r) * (1.0 - 1e-9));
        prop_assert!(((c.f_v - 1) as f64) < 2f64.powf(n as f64 * r));
    }

    #[test]
    fn single_arm_inner_bound_reduces(
        px in 0.05f64..0.95, a in 0.0f64..0.5, b in 0.0f64..0.5, c in 0.0f64..0.5,
        u in 0.0f64..0.5, v in 0.0f64..0.5,
    ) {
        let m = SourceModel::with_degraded_eve(
            Dist::new(Alphabet::binary(axis::X), vec![px, 1.0 - px]).unwrap(),
            CondDist::bsc(axis::X, axis::XT, a).unwrap(),
            &CondDist::bsc(axis::X, axis::Y, b).unwrap(),
            &CondDist::bsc(axis::Y, axis::Z, c).unwrap(),
        ).unwrap();
        let ch = AuxChannels::new(
            CondDist::bsc(axis::XT, axis::U, u).unwrap(),
            CondDist::bsc(axis::U, axis::V, v).unwrap(),
        ).unwrap();
        let f = FunctionSpec::from_fn(2, 2, Alphabet::binary(axis::F), |_, y| y).unwrap();
        let single = region::eval_lossless_corner(&m, &AuxSystem::single(ch.clone()), &f).unwrap();
        let arm = Arm {
            xt_given_x: m.xt_given_x().clone(),
            y: m.y_alphabet().clone(),
            z: m.z_alphabet().clone(),
            yz_given_x: m.yz_given_x().clone(),
            f,
            d: DistortionSpec::hamming(2),
        };
        let mm = MultiModel::new(m.p_x().clone(), vec![arm]).unwrap();
        let multi = eval_inner_mf(&mm, &MultiAuxSystem::single(vec![ch]).unwrap(), Mode::Lossless, None).unwrap();
        prop_assert!((single.r_s - multi.r_s).abs() <= 1e-12);
        prop_assert!((single.r_w - multi.r_w[0]).abs() <= 1e-12);
        prop_assert!((single.r_dec - multi.r_dec[0]).abs() <= 1e-12);
        prop_assert!((single.r_eve - multi.r_eve).abs() <= 1e-12);
    }
}

#[test]
fn identity_aux_on_bsc_toy_has_closed_form_storage() {
    // U = X̃, V constant: R_w = I(X̃;X̃|Y) = H(X̃|Y) = h(0.06 ⋆ 0.15)
    let m = SourceModel::with_degraded_eve(
        Dist::uniform(Alphabet::binary(axis::X)),
        CondDist::bsc(axis::X, axis::XT, 0.06).unwrap(),
        &CondDist::bsc(axis::X, axis::Y, 0.15).unwrap(),
        &CondDist::bsc(axis::Y, axis::Z, 0.25).unwrap(),
    )
    .unwrap();
    let t = region::eval_rates(&m, &AuxSystem::single(AuxChannels::identity(m.xt_alphabet()))).unwrap();
    let star: f64 = 0.06 * 0.85 + 0.94 * 0.15;
    assert!((t.r_w - binary_entropy(star).unwrap()).abs() < 1e-12);
}
