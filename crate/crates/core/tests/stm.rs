use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tensorhar::stm::{pooled_objective, train_stm_binary, StmConfig};
use tensorhar::Tensor;

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// `X_i = y_i · 2 u vᵀ + noise`.
fn rank_one_problem(seed: u64, n: usize, noise: f64) -> (Vec<Tensor>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = unit((0..8).map(|_| rng.random_range(-1.0..1.0)).collect());
    let v = unit((0..5).map(|_| rng.random_range(-1.0..1.0)).collect());
    let normal = Normal::new(0.0, noise).unwrap();
    let mut xs = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let data = (0..8)
            .flat_map(|a| (0..5).map(move |b| (a, b)))
            .map(|(a, b)| label * 2.0 * u[a] * v[b] + normal.sample(&mut rng))
            .collect();
        xs.push(Tensor::new(vec![8, 5], data).unwrap());
        y.push(label);
    }
    (xs, y, u, v)
}

#[test]
fn recovers_rank_one_direction() {
    let (xs, y, u, v) = rank_one_problem(11, 80, 0.3);
    let refs: Vec<&Tensor> = xs.iter().collect();
    let m = train_stm_binary(&refs, &y, &StmConfig::default()).unwrap();
    let cu = cosine(&m.modes[0], &u).abs();
    let cv = cosine(&m.modes[1], &v).abs();
    assert!(cu > 0.95 && cv > 0.95, "cos u {cu}, cos v {cv}");
    let correct = refs.iter().zip(&y).filter(|(x, &l)| m.predict(x).unwrap().label == l).count();
    assert!(correct as f64 / y.len() as f64 > 0.95);
}

#[test]
fn objective_never_increases_across_mode_updates() {
    let (xs, y, _, _) = rank_one_problem(5, 60, 1.0);
    let refs: Vec<&Tensor> = xs.iter().collect();
    let cfg = StmConfig { tolerance: 1e-9, max_outer_iters: 10, convergence_tol: 1e-12, ..StmConfig::default() };
    let m = train_stm_binary(&refs, &y, &cfg).unwrap();
    assert!(m.objective_trace.len() >= 4);
    for w in m.objective_trace.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-9, "{:?}", m.objective_trace);
    }
    let last = *m.objective_trace.last().unwrap();
    let pooled = pooled_objective(&m.modes, m.bias, &refs, &y, cfg.c, None).unwrap();
    assert!((last - pooled).abs() <= 1e-9 * last.max(1.0), "gauge fixing changed the objective");
}

#[test]
fn gauge_fixes_all_but_last_mode() {
    let (xs, y, _, _) = rank_one_problem(3, 40, 0.5);
    let refs: Vec<&Tensor> = xs.iter().collect();
    let m = train_stm_binary(&refs, &y, &StmConfig::default()).unwrap();
    let n0: f64 = m.modes[0].iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((n0 - 1.0).abs() < 1e-12);
    assert_eq!(m.gamma_trace.len(), m.objective_trace.len());
    assert!(m.gamma_trace.iter().all(|&g| g > 0.0));
}

#[test]
fn training_is_deterministic() {
    let (xs, y, _, _) = rank_one_problem(8, 30, 0.8);
    let refs: Vec<&Tensor> = xs.iter().collect();
    let a = train_stm_binary(&refs, &y, &StmConfig::default()).unwrap();
    let b = train_stm_binary(&refs, &y, &StmConfig::default()).unwrap();
    assert_eq!(a, b);
}
