use proptest::prelude::*;

use stp_riccati::diagnostics::{scare_residual, sdare_residual};
use stp_riccati::io::{gen_instance, parse_instance, InstanceKind};
use stp_riccati::model::{reduce_scare, reduce_sdare};
use stp_riccati::sdare::{fp_step, standard_residual};
use stp_riccati::stp::{
    kron, ltimes, ltimes_chain, ltimes_pow, mixed_shuffle_perm, psd_sqrt_factor, shuffle_perm, toepl,
    LtimesShape, DEFAULT_FACTOR_TOL,
};
use stp_riccati::{scare, Instance, Matrix, ProblemData, ScareInstance, SdareInstance};

fn mat(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

/// `(A, B, oracle)` where the oracle pads the narrower factor with an explicit Kronecker product.
fn stp_pair() -> impl Strategy<Value = (Matrix, Matrix, Matrix)> {
    (1usize..5, 1usize..5, 1usize..4, 1usize..5, any::<bool>()).prop_flat_map(|(m, n, k, q, left)| {
        let (ac, br) = if left { (n, n * k) } else { (n * k, n) };
        (mat(m, ac), mat(br, q)).prop_map(move |(a, b)| {
            let oracle = if left {
                kron(&a, &Matrix::identity(k)).matmul(&b)
            } else {
                a.matmul(&kron(&b, &Matrix::identity(k)))
            };
            (a, b, oracle)
        })
    })
}

fn psd(n: usize) -> impl Strategy<Value = Matrix> {
    mat(n, n).prop_map(|y| y.transpose().matmul(&y))
}

/// Weights with a positive semi-definite Schur complement.
fn problem(n: usize, m: usize, r: usize) -> impl Strategy<Value = ProblemData> {
    (
        prop::collection::vec(mat(n, n), r),
        prop::collection::vec(mat(n, m), r),
        mat(n, n),
        mat(n, m),
        mat(m, m),
    )
        .prop_map(|(a, b, c, l, mm)| {
            let r_weight = (&Matrix::identity(mm.rows()) + &mm.transpose().matmul(&mm)).symmetric_part();
            let l = l.scale(0.3);
            let q = (&c.transpose().matmul(&c) + &l.matmul(&r_weight.inverse().unwrap()).matmul(&l.transpose()))
                .symmetric_part();
            ProblemData {
                a: a.iter().map(|ai| ai.scale(0.7)).collect(),
                b,
                q,
                l,
                r: r_weight,
            }
        })
}

fn sized_problem() -> impl Strategy<Value = (ProblemData, Matrix)> {
    (1usize..4, 1usize..3, 1usize..4).prop_flat_map(|(n, m, r)| (problem(n, m, r), psd(n)))
}

fn is_permutation(p: &Matrix) -> bool {
    let ones_per_row = (0..p.rows()).all(|i| p.row(i).iter().filter(|&&v| v == 1.0).count() == 1);
    let nonzero = p.as_slice().iter().filter(|&&v| v != 0.0).count();
    ones_per_row && nonzero == p.rows() && (&p.matmul(&p.transpose()) - &Matrix::identity(p.rows())).max_abs() == 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ltimes_matches_kronecker_padding((a, b, oracle) in stp_pair()) {
        let out = ltimes(&a, &b).unwrap();
        prop_assert_eq!(out.shape(), LtimesShape::of(&a, &b).unwrap().output_shape());
        prop_assert!((&out - &oracle).max_abs() <= 1e-14);
    }

    #[test]
    fn ltimes_reduces_to_matmul((a, b) in (1usize..6, 1usize..6, 1usize..6)
        .prop_flat_map(|(m, n, q)| (mat(m, n), mat(n, q))))
    {
        prop_assert_eq!(ltimes(&a, &b).unwrap(), a.matmul(&b));
    }

    #[test]
    fn ltimes_with_scalar_is_kronecker(s in -2.0f64..2.0, a in mat(3, 2)) {
        let left = ltimes(&Matrix::scalar(s), &a).unwrap();
        prop_assert!((&left - &a.scale(s)).max_abs() <= 1e-15);
        let col = ltimes(&Matrix::column(&[1.0, -1.0]), &Matrix::scalar(s)).unwrap();
        prop_assert_eq!(col, Matrix::column(&[s, -s]));
    }

    #[test]
    fn power_matches_chain(a in (1usize..4, 1usize..3).prop_flat_map(|(n, r)| mat(r * n, n)), k in 1usize..4) {
        let chain: Vec<&Matrix> = std::iter::repeat_n(&a, k).collect();
        let lhs = ltimes_pow(&a, k).unwrap();
        let rhs = ltimes_chain(&chain).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn shuffle_moves_kronecker_factor((x, r) in (1usize..5, 1usize..5).prop_flat_map(|(n, r)| (mat(n, n), Just(r)))) {
        let n = x.rows();
        let p = shuffle_perm(n, r);
        prop_assert!(is_permutation(&p));
        let lhs = p.transpose().matmul(&kron(&x, &Matrix::identity(r))).matmul(&p);
        prop_assert_eq!(lhs, kron(&Matrix::identity(r), &x));
    }

    #[test]
    fn mixed_shuffle_splits_first_copy((x, r) in (1usize..5, 1usize..5).prop_flat_map(|(n, r)| (mat(n, n), Just(r)))) {
        let n = x.rows();
        let p = mixed_shuffle_perm(n, r).unwrap();
        prop_assert!(is_permutation(&p));
        let lhs = p.transpose().matmul(&kron(&x, &Matrix::identity(r))).matmul(&p);
        let mut rhs = Matrix::zeros(n * r, n * r);
        rhs.set_block(0, 0, &x);
        rhs.set_block(n, n, &kron(&x, &Matrix::identity(r - 1)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn toeplitz_blocks((blocks, r, p1, p2) in (1usize..4, 1usize..3, 1usize..3, 1usize..4)
        .prop_flat_map(|(r, p1, p2, count)| {
            let shapes: Vec<_> = (0..count).map(|i| mat(r.pow(i as u32) * p1, p2)).collect();
            (shapes, Just(r), Just(p1), Just(p2))
        }))
    {
        let t = toepl(&blocks, r, p1, p2).unwrap();
        let offsets = |p: usize| -> Vec<usize> {
            let mut acc = vec![0];
            for i in 0..blocks.len() {
                acc.push(acc[i] + r.pow(i as u32) * p);
            }
            acc
        };
        let (ro, co) = (offsets(p1), offsets(p2));
        prop_assert_eq!(t.shape(), (ro[blocks.len()], co[blocks.len()]));
        for i in 0..blocks.len() {
            for j in 0..blocks.len() {
                let blk = t.submatrix(ro[i], co[j], ro[i + 1] - ro[i], co[j + 1] - co[j]);
                if j > i {
                    prop_assert_eq!(blk.max_abs(), 0.0);
                } else {
                    prop_assert_eq!(blk, kron(&blocks[i - j], &Matrix::identity(r.pow(j as u32))));
                }
            }
        }
    }

    #[test]
    fn psd_factor_reconstructs(y in (1usize..5, 1usize..5).prop_flat_map(|(k, n)| mat(k, n))) {
        let m = y.transpose().matmul(&y);
        let c = psd_sqrt_factor(&m, DEFAULT_FACTOR_TOL).unwrap();
        prop_assert!(c.rows() <= y.rows().min(y.cols()));
        prop_assert!((&c.transpose().matmul(&c) - &m).max_abs() <= 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn discrete_reduction_preserves_residual((data, x) in sized_problem()) {
        let inst = SdareInstance::new(data).unwrap();
        let std = reduce_sdare(&inst).unwrap();
        let original = sdare_residual(&inst, &x).unwrap();
        let reduced = standard_residual(&std.gram(), &x).unwrap();
        prop_assert!((original - reduced).abs() <= 1e-10 * (1.0 + original));
    }

    #[test]
    fn continuous_reduction_preserves_residual((data, x) in sized_problem()) {
        let inst = ScareInstance::new(data).unwrap();
        let std = reduce_scare(&inst).unwrap();
        let original = scare_residual(&inst, &x).unwrap();
        let reduced = scare::standard_residual(&std, &x).unwrap();
        prop_assert!((original - reduced).abs() <= 1e-10 * (1.0 + original));
    }

    #[test]
    fn fixed_point_map_is_monotone((data, x, d) in (1usize..4, 1usize..3, 1usize..4)
        .prop_flat_map(|(n, m, r)| (problem(n, m, r), psd(n), psd(n))))
    {
        let gram = reduce_sdare(&SdareInstance::new(data).unwrap()).unwrap().gram();
        let lo = fp_step(&gram, &x).unwrap();
        let hi = fp_step(&gram, &(&x + &d)).unwrap();
        prop_assert!((&hi - &lo).min_sym_eigenvalue() >= -1e-11 * (1.0 + hi.frobenius_norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn instance_file_round_trips(seed in any::<u64>(), n in 1usize..4, m in 1usize..3, r in 1usize..4, cont in any::<bool>()) {
        let kind = if cont { InstanceKind::Scare } else { InstanceKind::Sdare };
        let file = gen_instance(kind, n, m, r, seed).unwrap();
        let parsed = parse_instance(&file.to_json()).unwrap();
        prop_assert_eq!(&parsed, &file);
        let inst = parsed.to_instance().unwrap();
        prop_assert_eq!(inst.data().terms(), r);
        prop_assert_eq!(matches!(inst, Instance::Scare(_)), cont);
    }
}
