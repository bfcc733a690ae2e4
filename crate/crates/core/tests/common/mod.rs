#![allow(dead_code)]

use bvae_core::analysis::{corr_grid, greedy_assignment, match_components, max_weight_assignment, assignment_total};
use bvae_core::betavae::{loss_and_grads, VaeModel};
use bvae_core::nn::{init_lecun, mlp_backward, mlp_forward, Activation, Mlp};
use bvae_core::numkit::{covariance, eig_sym, matmul, pearson, sample, Distribution, Matrix, RngState};

pub fn normal(rng: &mut RngState, r: usize, c: usize) -> Matrix {
    sample(rng, Distribution::StandardNormal, r, c).unwrap()
}

/// Zero when `|a − n|` is below `floor`, otherwise `|a − n| / max(|a|, |n|)`.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    let d = (a - n).abs();
    if d < floor {
        0.0
    } else {
        d / a.abs().max(n.abs())
    }
}

pub fn matmul_assoc_err(seed: u64, m: usize, n: usize, p: usize, q: usize) -> f64 {
    let mut rng = RngState::new(seed);
    let a = normal(&mut rng, m, n);
    let b = normal(&mut rng, n, p);
    let c = normal(&mut rng, p, q);
    let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
    let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
    let scale = a.max_abs() * b.max_abs() * c.max_abs() * (n * p) as f64;
    left.max_abs_diff(&right) / scale.max(1.0)
}

pub fn random_symmetric(rng: &mut RngState, n: usize) -> Matrix {
    let g = normal(rng, n, n);
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, 0.5 * (g.get(i, j) + g.get(j, i)));
        }
    }
    s
}

/// `‖V diag(λ) Vᵀ − A‖∞` plus the worst deviation of `VᵀV` from identity.
pub fn eig_roundtrip_err(seed: u64, n: usize) -> (f64, f64) {
    let mut rng = RngState::new(seed);
    let a = random_symmetric(&mut rng, n);
    let e = eig_sym(&a).unwrap();
    let v = &e.eigenvectors;
    let vd = matmul(v, &Matrix::diag(&e.eigenvalues)).unwrap();
    let back = matmul(&vd, &v.transpose()).unwrap();
    let gram = matmul(&v.transpose(), v).unwrap();
    (back.max_abs_diff(&a), gram.max_abs_diff(&Matrix::identity(n)))
}

pub fn covariance_min_eig(seed: u64, rows: usize, cols: usize) -> f64 {
    let mut rng = RngState::new(seed);
    let x = normal(&mut rng, rows, cols);
    let e = eig_sym(&covariance(&x).unwrap()).unwrap();
    *e.eigenvalues.last().unwrap()
}

pub fn pearson_affine_err(seed: u64, n: usize, a: f64, b: f64) -> f64 {
    let mut rng = RngState::new(seed);
    let u = normal(&mut rng, n, 1).col(0);
    let v: Vec<f64> = u.iter().map(|x| 0.3 * x + rng.normal()).collect();
    let r = pearson(&u, &v).unwrap();
    let ua: Vec<f64> = u.iter().map(|x| a * x + b).collect();
    let vb: Vec<f64> = v.iter().map(|x| a * x - b).collect();
    (pearson(&ua, &v).unwrap() - r)
        .abs()
        .max((pearson(&u, &vb).unwrap() - r).abs())
}

fn random_mlp(rng: &mut RngState) -> Mlp {
    let depth = 1 + (rng.next_u64() % 3) as usize;
    let mut sizes = vec![1 + (rng.next_u64() % 20) as usize];
    let mut acts = Vec::new();
    for _ in 0..depth {
        sizes.push(1 + (rng.next_u64() % 20) as usize);
        acts.push(match rng.next_u64() % 3 {
            0 => Activation::Selu,
            1 => Activation::Tanh,
            _ => Activation::Linear,
        });
    }
    let mut net = init_lecun(rng, &sizes, &acts).unwrap();
    for p in net.params_mut() {
        p.iter_mut().for_each(|v| *v += 0.1 * rng.normal());
    }
    net
}

/// Worst relative error between backprop and central differences of
/// `sum(y ⊙ R)` over every parameter of a random MLP.
pub fn mlp_gradcheck(seed: u64) -> f64 {
    let mut rng = RngState::new(seed);
    let mut net = random_mlp(&mut rng);
    let x = normal(&mut rng, 4, net.input_dim());
    let r = normal(&mut rng, 4, net.output_dim());
    let f = |net: &Mlp| -> f64 {
        let y = net.predict(&x).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    let (_, tape) = mlp_forward(&net, &x).unwrap();
    let grads = mlp_backward(&net, &tape, &r).unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().into_iter().map(<[f64]>::to_vec).collect();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (t, g) in analytic.iter().enumerate() {
        for k in 0..g.len() {
            let orig = net.params()[t][k];
            net.params_mut()[t][k] = orig + h;
            let up = f(&net);
            net.params_mut()[t][k] = orig - h;
            let down = f(&net);
            net.params_mut()[t][k] = orig;
            worst = worst.max(rel_err(g[k], (up - down) / (2.0 * h), 1e-7));
        }
    }
    worst
}

fn vae_params_mut(m: &mut VaeModel) -> Vec<&mut [f64]> {
    let mut p = m.encoder.params_mut();
    p.extend(m.decoder.params_mut());
    p
}

/// Worst relative error of the full objective's analytic gradient on a
/// random tiny model with a fixed noise draw.
pub fn vae_gradcheck(seed: u64, beta: f64) -> f64 {
    let mut rng = RngState::new(seed);
    let d = 2 + (rng.next_u64() % 3) as usize;
    let l = 1 + (rng.next_u64() % 3) as usize;
    let hidden = [2 + (rng.next_u64() % 4) as usize];
    let mut model = VaeModel::init(&mut rng, d, l, &hidden).unwrap();
    for p in vae_params_mut(&mut model) {
        p.iter_mut().for_each(|v| *v += 0.2 * rng.normal());
    }
    let x = normal(&mut rng, 6, d);
    let eps = normal(&mut rng, 6, l);
    let eval = loss_and_grads(&model, &x, &eps, beta).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (t, g) in eval.grads.iter().enumerate() {
        for k in 0..g.len() {
            let orig = vae_params_mut(&mut model)[t][k];
            vae_params_mut(&mut model)[t][k] = orig + h;
            let up = loss_and_grads(&model, &x, &eps, beta).unwrap().parts.total;
            vae_params_mut(&mut model)[t][k] = orig - h;
            let down = loss_and_grads(&model, &x, &eps, beta).unwrap().parts.total;
            vae_params_mut(&mut model)[t][k] = orig;
            worst = worst.max(rel_err(g[k], (up - down) / (2.0 * h), 1e-7));
        }
    }
    worst
}

/// Largest change of any defined correlation after positive affine maps of
/// every column on both sides.
pub fn corr_grid_affine_err(seed: u64) -> f64 {
    let mut rng = RngState::new(seed);
    let a = normal(&mut rng, 50, 3);
    let b = normal(&mut rng, 50, 4);
    let g0 = corr_grid(&a, &b).unwrap();
    let scale = |m: &Matrix, rng: &mut RngState| {
        let factors: Vec<(f64, f64)> = (0..m.cols()).map(|_| (0.1 + 5.0 * rng.uniform(), 10.0 * rng.normal())).collect();
        let mut out = m.clone();
        for i in 0..m.rows() {
            for (j, &(s, o)) in factors.iter().enumerate() {
                out.set(i, j, s * m.get(i, j) + o);
            }
        }
        out
    };
    let g1 = corr_grid(&scale(&a, &mut rng), &scale(&b, &mut rng)).unwrap();
    g0.values
        .iter()
        .zip(&g1.values)
        .map(|(x, y)| (x.unwrap() - y.unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Score change of `match_components` after flipping signs and permuting the
/// columns of both sides.
pub fn matching_invariance_err(seed: u64) -> f64 {
    let mut rng = RngState::new(seed);
    let n = 200;
    let comps = normal(&mut rng, n, 4);
    let noise = normal(&mut rng, n, 5);
    let mix = normal(&mut rng, 4, 5);
    let lat = matmul(&comps, &mix).unwrap().add(&noise).unwrap();
    let active: Vec<usize> = (0..5).collect();
    let base = match_components(&lat, &comps, &active).unwrap().mean_score;

    let lp = rng.permutation(5);
    let cp = rng.permutation(4);
    let flip = |m: &Matrix, rng: &mut RngState| {
        let signs: Vec<f64> = (0..m.cols()).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
        let mut out = m.clone();
        for i in 0..m.rows() {
            for (j, s) in signs.iter().enumerate() {
                out.set(i, j, s * m.get(i, j));
            }
        }
        out
    };
    let lat2 = flip(&lat.select_cols(&lp), &mut rng);
    let comps2 = flip(&comps.select_cols(&cp), &mut rng);
    let moved = match_components(&lat2, &comps2, &active).unwrap().mean_score;
    (base - moved).abs()
}

fn brute_force_best(w: &[Vec<f64>]) -> f64 {
    let rows = w.len();
    let cols = w[0].len();
    fn go(w: &[Vec<f64>], i: usize, used: &mut Vec<bool>, cols: usize) -> f64 {
        if i == w.len() {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        let free = used.iter().filter(|u| !**u).count();
        if w.len() - i > free {
            return f64::NEG_INFINITY;
        }
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                best = best.max(w[i][j] + go(w, i + 1, used, cols));
                used[j] = false;
            }
        }
        best
    }
    if rows <= cols {
        go(w, 0, &mut vec![false; cols], cols)
    } else {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| w[i][j]).collect()).collect();
        go(&t, 0, &mut vec![false; rows], rows)
    }
}

/// `(hungarian − greedy, |hungarian − brute force|)` on a random grid.
pub fn assignment_gaps(seed: u64, rows: usize, cols: usize) -> (f64, f64) {
    let mut rng = RngState::new(seed);
    let w: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.uniform()).collect()).collect();
    let h = assignment_total(&w, &max_weight_assignment(&w));
    let g = assignment_total(&w, &greedy_assignment(&w));
    (h - g, (h - brute_force_best(&w)).abs())
}
