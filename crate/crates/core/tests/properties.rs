use std::collections::HashSet;

use layout_gemm::compare::{bit_equal, max_abs_diff, max_rel_error, ABS_FLOOR};
use layout_gemm::layout_ops::{
    rmsnorm_rows, rmsnorm_rows_canonical, rope_canonical, rope_inplace, scale_canonical, scale_inplace, softmax_rows,
    softmax_rows_canonical, Mask, RMS_EPS, ROPE_THETA,
};
use layout_gemm::*;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = TileParams> {
    (prop::sample::select(vec![1usize, 2, 4, 8]), prop::sample::select(vec![1usize, 2, 4]), 1usize..5, 1usize..5, 1usize..33)
        .prop_map(|(mr, nr, fm, fn_, kc)| TileParams::new(mr * fm, nr * fn_, kc, mr, nr).unwrap())
}

fn naive(a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = Matrix::zeros(a.rows(), b.cols());
    gemm_naive(&GemmProblem::new(a.rows(), b.cols(), a.cols()), &a.view(), &b.view(), &mut c.view_mut()).unwrap();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layout_is_a_bijection_onto_disjoint_slots(rows in 1usize..40, cols in 1usize..40, p in params_strategy()) {
        let layout = PropagatedLayout::new(rows, cols, p).unwrap();
        let mut seen = HashSet::new();
        for i in 0..layout.pad_rows() {
            for j in 0..layout.pad_cols() {
                let off = layout.offset(i, j).unwrap();
                prop_assert!(off < layout.len());
                prop_assert!(seen.insert(off));
            }
        }
        prop_assert_eq!(seen.len(), layout.len());
        prop_assert!(layout.offset(layout.pad_rows(), 0).is_err());
        prop_assert!(layout.offset(0, layout.pad_cols()).is_err());
    }

    #[test]
    fn pack_unpack_round_trip(rows in 1usize..65, cols in 1usize..65, p in params_strategy(), seed: u64) {
        let x = Matrix::random(rows, cols, seed);
        let packed = pack_to_propagated(&x.view(), &p).unwrap();
        prop_assert!(packed.padding_is_zero());
        let mut back = Matrix::zeros(rows, cols);
        unpack_propagated(&packed, &mut back.view_mut()).unwrap();
        prop_assert!(bit_equal(back.data(), x.data()));
    }

    #[test]
    fn every_kernel_path_matches_the_oracle(
        m in 1usize..97, n in 1usize..97, k in 1usize..97, p in params_strategy(), seed: u64,
    ) {
        let a = Matrix::random(m, k, seed);
        let b = Matrix::random(k, n, seed ^ 0x9e37);
        let oracle = naive(&a, &b);
        let mut counters = PackCounters::new();
        let mut d = Matrix::zeros(m, n);
        gemm_default(&GemmProblem::new(m, n, k), &a.view(), &b.view(), &mut d.view_mut(), &p, &mut counters).unwrap();
        prop_assert!(max_rel_error(d.data(), oracle.data(), ABS_FLOOR) <= 1e-4);
        let ini = gemm_ini(&a.view(), &b.view(), &p, &mut counters).unwrap();
        prop_assert!(max_rel_error(ini.to_canonical().data(), oracle.data(), ABS_FLOOR) <= 1e-4);
        prop_assert!(ini.padding_is_zero());
        let packed = pack_to_propagated(&a.view(), &p).unwrap();
        let before = counters;
        let mid = gemm_mid(&packed, &b.view(), &p, &mut counters).unwrap();
        prop_assert!(max_rel_error(mid.to_canonical().data(), oracle.data(), ABS_FLOOR) <= 1e-4);
        let mut e = Matrix::zeros(m, n);
        gemm_end(&packed, &b.view(), &mut e.view_mut(), &p, &mut counters).unwrap();
        prop_assert!(max_rel_error(e.data(), oracle.data(), ABS_FLOOR) <= 1e-4);
        prop_assert_eq!((counters - before).multiplier_pack_elems, 0);
    }

    #[test]
    fn permuted_blocks_read_back_exactly(
        rows in 1usize..30, cols in 1usize..30, p in params_strategy(), stride in 0usize..7, offset in 0usize..5,
        seed: u64,
    ) {
        let x = Matrix::random(rows, cols, seed);
        let dense = pack_to_propagated(&x.view(), &p).unwrap();
        let layout = *dense.layout();
        let count = layout.block_count();
        let mut slots: Vec<usize> = (0..count).collect();
        slots.rotate_left((seed as usize) % count);
        if seed % 2 == 0 {
            slots.reverse();
        }
        let spec = StoreSpec { block_order: BlockOrder::Permutation(slots), inter_block_stride: stride, offset };
        let mut buf = vec![0.0; spec.required_len(&layout).unwrap()];
        spec.scatter(&dense, &mut buf).unwrap();
        prop_assert!(bit_equal(spec.gather(&layout, &buf).unwrap().data(), dense.data()));
    }

    #[test]
    fn propagate_microkernel_equals_default(mr in 1usize..17, nr in 1usize..9, kc in 1usize..40, seed: u64, acc: bool) {
        let sa = Matrix::random(1, kc * mr, seed).into_vec();
        let sb = Matrix::random(1, kc * nr, seed + 1).into_vec();
        let init = Matrix::random(mr, nr, seed + 2);
        let mut canonical = init.clone();
        microkernel_default(&sa, &sb, kc, (mr, nr), &mut canonical.view_mut(), acc).unwrap();
        let mut tile: Vec<f32> = (0..mr * nr).map(|t| init.get(t % mr, t / mr)).collect();
        microkernel_propagate(&sa, &sb, kc, (mr, nr), &mut tile, acc).unwrap();
        for r in 0..mr {
            for c in 0..nr {
                prop_assert_eq!(tile[c * mr + r].to_bits(), canonical.get(r, c).to_bits());
            }
        }
    }

    #[test]
    fn layout_ops_are_layout_transparent(rows in 1usize..33, heads in 1usize..4, half in 1usize..5, p in params_strategy(), seed: u64) {
        let head_dim = 2 * half * p.nr.max(1);
        let cols = heads * head_dim;
        let x = Matrix::random(rows, cols, seed);
        let pos: Vec<usize> = (0..rows).map(|i| i * 3).collect();
        let gain = Matrix::random(1, cols, seed + 1).into_vec();
        let run = |f: &dyn Fn(&mut PropagatedMatrix), g: &dyn Fn(&mut Matrix)| {
            let mut a = pack_to_propagated(&x.view(), &p).unwrap();
            f(&mut a);
            let mut b = x.clone();
            g(&mut b);
            (a, b)
        };
        let cases = [
            run(&|a| scale_inplace(a, 0.37), &|b| scale_canonical(&mut b.view_mut(), 0.37)),
            run(&|a| softmax_rows(a, None).unwrap(), &|b| softmax_rows_canonical(&mut b.view_mut(), None).unwrap()),
            run(
                &|a| softmax_rows(a, Some(&Mask::Causal { offset: 1 })).unwrap(),
                &|b| softmax_rows_canonical(&mut b.view_mut(), Some(&Mask::Causal { offset: 1 })).unwrap(),
            ),
            run(
                &|a| rope_inplace(a, head_dim, &pos, ROPE_THETA).unwrap(),
                &|b| rope_canonical(&mut b.view_mut(), head_dim, &pos, ROPE_THETA).unwrap(),
            ),
            run(
                &|a| rmsnorm_rows(a, &gain, RMS_EPS).unwrap(),
                &|b| rmsnorm_rows_canonical(&mut b.view_mut(), &gain, RMS_EPS).unwrap(),
            ),
        ];
        for (a, b) in &cases {
            prop_assert!(max_abs_diff(a.to_canonical().data(), b.data()) <= 1e-6);
            prop_assert!(a.padding_is_zero());
        }
        let soft = cases[1].0.to_canonical();
        for i in 0..rows {
            let row = &soft.data()[i * cols..(i + 1) * cols];
            prop_assert!((row.iter().sum::<f32>() - 1.0).abs() <= 1e-6);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let rot = cases[3].0.to_canonical();
        for i in 0..rows {
            for j in (0..cols).step_by(2) {
                let n0 = x.get(i, j).hypot(x.get(i, j + 1));
                let n1 = rot.get(i, j).hypot(rot.get(i, j + 1));
                prop_assert!((n0 - n1).abs() <= 1e-6 * n0.max(f32::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn mid_chains_close_over_the_layout(dims in prop::collection::vec(1usize..40, 3..7), p in params_strategy(), seed: u64) {
        let x = Matrix::random(dims[0], dims[1], seed);
        let mut oracle = x.clone();
        let mut counters = PackCounters::new();
        let mut cur = pack_to_propagated(&x.view(), &p).unwrap();
        for (s, w) in dims[1..].windows(2).enumerate() {
            let wm = Matrix::random(w[0], w[1], seed.wrapping_add(s as u64 + 1));
            cur = gemm_mid(&cur, &wm.view(), &p, &mut counters).unwrap();
            oracle = naive(&oracle, &wm);
            prop_assert!(max_rel_error(cur.to_canonical().data(), oracle.data(), ABS_FLOOR) <= 1e-4);
        }
        prop_assert_eq!(counters.multiplier_pack_elems, 0);
    }
}
