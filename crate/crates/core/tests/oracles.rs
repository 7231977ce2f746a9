//! Independent oracles for the library routes: finite differences, brute
//! force summation, exhaustive assignment and Monte-Carlo sampling.

use cobasis::experiments::{align_bases, block_pca, dct2_basis, extract_blocks, synthetic_ar1_image};
use cobasis::matkit::{random_orthogonal, svd};
use cobasis::{
    coefficients, csvd, gradient, mean_svd, mixing_diagnostic, BasisPair, CsvdConfig, EvalFunction, Mat, MatrixSet,
    Normalization,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::new(n, m, (0..n * m).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn random_set(n: usize, m: usize, k: usize, rng: &mut ChaCha8Rng) -> MatrixSet {
    let mats = (0..k).map(|_| gaussian(n, m, rng)).collect();
    let weights = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    MatrixSet::new(mats, weights).unwrap()
}

/// Objective by explicit index loops: g = Σ_k w_k Σ_ij f(Σ_ab U_ai A_ab V_bj).
fn brute_objective(set: &MatrixSet, u: &Mat, v: &Mat, f: impl Fn(f64) -> f64) -> f64 {
    let (n, m) = set.shape();
    let mut g = 0.0;
    for (a, w) in set.iter() {
        for i in 0..n {
            for j in 0..m {
                let mut c = 0.0;
                for r in 0..n {
                    for s in 0..m {
                        c += u[(r, i)] * a[(r, s)] * v[(s, j)];
                    }
                }
                g += w * f(c);
            }
        }
    }
    g
}

/// `x · exp(t E_ab)` with `E_ab = e_a e_bᵀ − e_b e_aᵀ`, an exact rotation.
fn rotate_coordinate(x: &Mat, a: usize, b: usize, t: f64) -> Mat {
    let mut out = x.clone();
    let (c, s) = (t.cos(), t.sin());
    for r in 0..x.rows() {
        let xa = x[(r, a)];
        let xb = x[(r, b)];
        out[(r, a)] = c * xa - s * xb;
        out[(r, b)] = s * xa + c * xb;
    }
    out
}

fn check_gradient(eval: EvalFunction, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = random_set(5, 5, 4, &mut rng);
    let basis = BasisPair { u: random_orthogonal(5, &mut rng).unwrap(), v: random_orthogonal(5, &mut rng).unwrap() };
    let f = |x: f64| eval.value(x);
    let gen = gradient(&set, &basis, eval, false).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for a in 0..5 {
        for b in a + 1..5 {
            let up = brute_objective(&set, &rotate_coordinate(&basis.u, a, b, h), &basis.v, f);
            let down = brute_objective(&set, &rotate_coordinate(&basis.u, a, b, -h), &basis.v, f);
            let fd_g = (up - down) / (2.0 * h);
            let up = brute_objective(&set, &basis.u, &rotate_coordinate(&basis.v, a, b, h), f);
            let down = brute_objective(&set, &basis.u, &rotate_coordinate(&basis.v, a, b, -h), f);
            let fd_h = (up - down) / (2.0 * h);
            for (analytic, fd) in [(gen.g[(a, b)], fd_g), (gen.h[(a, b)], fd_h)] {
                let rel = (analytic - fd).abs() / fd.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

#[test]
fn pow4_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let err = check_gradient(EvalFunction::NegPow4, seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn abs_gradient_matches_finite_differences_away_from_kinks() {
    let mut checked = 0;
    for seed in 100..140 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_set(5, 5, 4, &mut rng);
        let basis =
            BasisPair { u: random_orthogonal(5, &mut rng).unwrap(), v: random_orthogonal(5, &mut rng).unwrap() };
        let c = coefficients(&set, &basis, Normalization::None).unwrap();
        let min_abs = c.matrices().iter().flat_map(|m| m.as_slice()).fold(f64::INFINITY, |a, x| a.min(x.abs()));
        if min_abs <= 1e-3 {
            continue;
        }
        let err = check_gradient(EvalFunction::Abs, seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} instances had all |c| > 1e-3");
}

#[test]
fn symmetric_gradient_is_sum_along_shared_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let set = random_set(4, 4, 3, &mut rng);
    let u = random_orthogonal(4, &mut rng).unwrap();
    let basis = BasisPair { u: u.clone(), v: u.clone() };
    let eval = EvalFunction::NegPow4;
    let gen = gradient(&set, &basis, eval, true).unwrap();
    let h = 1e-5;
    for a in 0..4 {
        for b in a + 1..4 {
            let up_u = rotate_coordinate(&u, a, b, h);
            let down_u = rotate_coordinate(&u, a, b, -h);
            let fd = (brute_objective(&set, &up_u, &up_u, |x| eval.value(x))
                - brute_objective(&set, &down_u, &down_u, |x| eval.value(x)))
                / (2.0 * h);
            let rel = (gen.g[(a, b)] - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-4, "({a},{b}): {} vs {fd}", gen.g[(a, b)]);
        }
    }
}

#[test]
fn mixing_terms_match_double_loop() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let set = random_set(4, 3, 3, &mut rng);
        let cfg = CsvdConfig::new(0.5, 0.5, Normalization::Rc).unwrap();
        let basis = csvd(&set, &cfg).unwrap();
        let d = mixing_diagnostic(&set, &basis, &cfg).unwrap();

        let bs: Vec<Mat> = set
            .matrices()
            .iter()
            .map(|a| cobasis::matkit::psd_power(&Normalization::Rc.apply(a).gram_rows(), 0.5).unwrap())
            .collect();
        let wbar: Vec<f64> = set.weights().iter().map(|w| w.powf(0.5)).collect();
        let (mut self_term, mut mixing_term) = (0.0, 0.0);
        for k in 0..3 {
            for l in 0..3 {
                let prod = bs[k].matmul(&bs[l]).unwrap();
                for i in 0..4 {
                    let ui = basis.u.column(i);
                    let mut q = 0.0;
                    for r in 0..4 {
                        for s in 0..4 {
                            q += ui[r] * prod[(r, s)] * ui[s];
                        }
                    }
                    if k == l {
                        self_term += wbar[k] * wbar[k] * q;
                    } else {
                        mixing_term += wbar[k] * wbar[l] * q;
                    }
                }
            }
        }
        assert!((d.self_term - self_term).abs() <= 1e-10 * self_term.abs());
        assert!((d.mixing_term - mixing_term).abs() <= 1e-10 * self_term.abs());
    }
}

#[test]
fn single_matrix_csvd_reproduces_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = gaussian(4, 3, &mut rng);
    let set = MatrixSet::uniform(vec![a.clone()]).unwrap();
    let basis = csvd(&set, &CsvdConfig::default()).unwrap();
    let d = basis.rotate(&a).unwrap();
    let reference = svd(&a).unwrap();
    assert!(d.max_abs_off_diagonal() <= 1e-8 * reference.singular[0]);
    for (x, s) in d.diagonal().iter().zip(&reference.singular) {
        assert!((x.abs() - s).abs() <= 1e-8 * s);
    }
}

#[test]
fn mean_svd_equals_svd_of_explicit_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let a = gaussian(3, 4, &mut rng);
    let b = gaussian(3, 4, &mut rng);
    let set = MatrixSet::new(vec![a.clone(), b.clone()], vec![0.3, 1.7]).unwrap();
    let basis = mean_svd(&set).unwrap();
    let mut avg = Mat::zeros(3, 4);
    for i in 0..3 {
        for j in 0..4 {
            avg[(i, j)] = 0.3 * a[(i, j)] + 1.7 * b[(i, j)];
        }
    }
    let r = svd(&avg).unwrap();
    assert!(basis.u.max_abs_diff(&r.u) < 1e-12);
    assert!(basis.v.max_abs_diff(&r.v) < 1e-12);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn best_assignment(cand: &Mat, reference: &Mat) -> f64 {
    let n = cand.cols();
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let rc = reference.column(r);
            (0..n).map(|c| cand.column(c).iter().zip(&rc).map(|(x, y)| x * y).sum::<f64>().abs()).collect()
        })
        .collect();
    permutations(n)
        .iter()
        .map(|perm| perm.iter().enumerate().map(|(r, &c)| scores[r][c]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn greedy_alignment_against_exhaustive_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let reference = dct2_basis(8);
    // a slightly perturbed, column-shuffled DCT: greedy must find the optimum
    let noise = random_orthogonal(8, &mut rng).unwrap();
    let mut near = Mat::identity(8);
    near.add_scaled(0.05, &noise).unwrap();
    let mut cand = cobasis::matkit::gram_schmidt(&reference.matmul(&near).unwrap()).unwrap();
    cand.swap_columns(0, 5);
    cand.swap_columns(2, 7);
    let greedy = align_bases(&cand, &reference).unwrap();
    let optimal = best_assignment(&cand, &reference);
    assert!((greedy.scores.iter().sum::<f64>() - optimal).abs() < 1e-9);

    // unrelated random bases: greedy never beats the optimum; report the gap
    for n in [3, 5, 8] {
        let a = random_orthogonal(n, &mut rng).unwrap();
        let b = random_orthogonal(n, &mut rng).unwrap();
        let greedy: f64 = align_bases(&a, &b).unwrap().scores.iter().sum();
        let optimal = best_assignment(&a, &b);
        assert!(greedy <= optimal + 1e-12);
        eprintln!("n={n}: greedy {greedy:.6}, optimal {optimal:.6}, gap {:.3e}", optimal - greedy);
    }
}

#[test]
fn markov_blocks_have_dc_leading_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut blocks = Vec::new();
    for _ in 0..4 {
        let img = synthetic_ar1_image(128, 128, 0.95, &mut rng).unwrap();
        blocks.extend(extract_blocks(&img, 8).unwrap());
    }
    let pca = block_pca(&blocks).unwrap();
    let top = &pca.eigen_matrices[0];
    let dc = top.as_slice().iter().sum::<f64>().abs() / 8.0;
    assert!(dc >= 0.99, "|cos| with DC = {dc}");
}
