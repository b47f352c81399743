//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::time::Instant;

use khess::cones::{in_sigma_k, s_k_op, SymMatrix};
use khess::dirichlet::{holder_seminorm, solve_radial_dirichlet, RadialSolver, SolverConfig, SourceTerm};
use khess::eigen::{
    estimate_lambda1, iterate_fixed_lambda, lower_bound, minimum_principle_probe, quartic_certifying_constant,
    rayleigh_quotient, upper_bound, BisectTol, FixedLambdaIteration, IterationConfig, IterationOutcome, SpectralEstimate,
    StopReason,
};
use khess::radial::{quartic_test_profile, s_j_radial_power, s_k_radial};
use khess::symfun::{binomial, in_gamma_k, in_gamma_k_korevaar, sigma_of, EigenSpectrum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAIRS: [(usize, usize); 5] = [(2, 1), (2, 2), (3, 2), (3, 3), (4, 3)];

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn scfg() -> SolverConfig {
    SolverConfig { grid_size: 512, ..Default::default() }
}

fn icfg() -> IterationConfig {
    IterationConfig { bisect_tol: BisectTol::Relative(1e-3), ..Default::default() }
}

fn estimate(n: usize, k: usize, r: f64) -> SpectralEstimate {
    estimate_lambda1(r, n, k, &icfg(), &scfg()).unwrap_or_else(|e| panic!("estimate ({n},{k}) R={r}: {e}"))
}

fn c1_sandwich(est: &[SpectralEstimate], secs: f64) -> Line {
    let mut pass = secs < 60.0;
    let mut detail = String::new();
    for e in est {
        let (lo, hi) = (binomial(e.dim, e.k), 4f64.powi(e.k as i32) * binomial(e.dim, e.k));
        let ok = lo <= e.lambda_best && e.lambda_best <= hi;
        pass &= ok;
        detail += &format!("({},{}) {lo} <= {:.5} <= {hi}; ", e.dim, e.k, e.lambda_best);
    }
    detail += &format!("{secs:.1} s");
    Line { id: 1, name: "bound sandwich", pass, detail }
}

fn c2_linear(est: &SpectralEstimate, secs: f64) -> Line {
    let err = (est.lambda_best - 5.7832).abs();
    Line {
        id: 2,
        name: "linear sanity",
        pass: err <= 0.01 && secs < 10.0,
        detail: format!("lambda_best = {:.6}, |err| = {err:.2e}, {secs:.1} s", est.lambda_best),
    }
}

fn c3_rayleigh(est: &[SpectralEstimate]) -> Line {
    let mut pass = true;
    let mut detail = String::new();
    for e in est {
        let psi = e.eigenfunction.as_ref().expect("eigenfunction kept");
        let rq = rayleigh_quotient(psi).unwrap();
        let rel = (rq - e.lambda_best).abs() / e.lambda_best;
        pass &= rel <= 0.01;
        detail += &format!("({},{}) {rel:.2e}; ", e.dim, e.k);
    }
    Line { id: 3, name: "Rayleigh consistency", pass, detail }
}

fn c4_dilation(est: &[SpectralEstimate]) -> Line {
    let mut pass = true;
    let mut detail = String::new();
    for (n, k) in [(2, 2), (3, 2)] {
        let at1 = est.iter().find(|e| e.dim == n && e.k == k).unwrap().lambda_best;
        let at2 = estimate(n, k, 2.0).lambda_best * 4f64.powi(k as i32);
        let rel = (at2 - at1).abs() / at1;
        pass &= rel <= 0.02;
        detail += &format!("({n},{k}) {rel:.2e}; ");
    }
    Line { id: 4, name: "dilation law", pass, detail }
}

fn c5_quadrature() -> Line {
    // Constant source on the unit ball: S_k(D²h) = c with h = a(r² - 1)/2,
    // C(N,k) a^k = c.
    let mut max_err: f64 = 0.0;
    for &(n, k) in &PAIRS {
        let c = 2.0;
        let a = (c / binomial(n, k)).powf(1.0 / k as f64);
        let p = solve_radial_dirichlet(&SourceTerm::Constant(c), 1.0, n, k, &scfg()).unwrap();
        for (r, h) in p.grid.iter().zip(&p.h) {
            max_err = max_err.max((h - 0.5 * a * (r * r - 1.0)).abs());
        }
    }
    // Refinement study on h = (r⁴ - 1)/4, whose source is
    // C(N-1,k-1)(3 + (N-k)/k) r^{2k}.
    let (n, k) = (3, 2);
    let coef = binomial(n - 1, k - 1) * (3.0 + (n - k) as f64 / k as f64);
    let mut poly = vec![0.0; 2 * k + 1];
    poly[2 * k] = coef;
    let errs: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&m| {
            let cfg = SolverConfig { grid_size: m, ..Default::default() };
            let p = solve_radial_dirichlet(&SourceTerm::Poly(poly.clone()), 1.0, n, k, &cfg).unwrap();
            p.grid.iter().zip(&p.h).map(|(r, h)| (h - 0.25 * (r.powi(4) - 1.0)).abs()).fold(0.0, f64::max)
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Line {
        id: 5,
        name: "quadrature exactness",
        pass: max_err <= 1e-8 && min_order >= 2.0 - 0.05,
        detail: format!("paraboloid max err {max_err:.2e}; refinement errors {}, orders {orders:.3?}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")),
    }
}

fn c6_fundamental() -> Line {
    let mut worst: f64 = 0.0;
    for (n, k) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
        let alpha = 2.0 - n as f64 / k as f64;
        for i in 1..=100 {
            let r = 0.05 + 1.95 * i as f64 / 100.0;
            let closed = s_j_radial_power(1.0, alpha, r, n, k).unwrap();
            let (hp, hpp) = (alpha * r.powf(alpha - 1.0), alpha * (alpha - 1.0) * r.powf(alpha - 2.0));
            let s = closed.abs().max(s_k_radial(hp, hpp, r, n, k).unwrap().abs());
            // scale: the k-th power of the largest Hessian eigenvalue
            let lam = (alpha * (alpha - 1.0) * r.powf(alpha - 2.0)).abs().max((alpha * r.powf(alpha - 2.0)).abs());
            worst = worst.max(s.abs() / lam.powi(k as i32).max(1e-300));
        }
    }
    Line { id: 6, name: "fundamental-solution annihilation", pass: worst <= 1e-10, detail: format!("max |S_k|/scale = {worst:.2e}") }
}

fn c7_monotone() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig { grid_size: 256, ..Default::default() };
    let mut violations = 0usize;
    let mut checked = 0usize;
    for trial in 0..20 {
        let (n, k) = PAIRS[trial % PAIRS.len()];
        let lambda = rng.gen_range(0.0..lower_bound(n, k, 1.0));
        let solver = RadialSolver::ball(n, k, 1.0, &cfg).unwrap();
        let mut it = FixedLambdaIteration::new(&solver, lambda).unwrap();
        let mut prev = it.current().to_vec();
        for _ in 0..40 {
            let next = it.step().to_vec();
            for (a, b) in next.iter().zip(&prev) {
                checked += 1;
                if !(*a <= *b && *b <= 0.0) {
                    violations += 1;
                }
            }
            prev = next;
        }
    }
    Line {
        id: 7,
        name: "iterate monotonicity",
        pass: violations == 0,
        detail: format!("{violations} violations in {checked} node comparisons (20 random lambda, 40 steps each)"),
    }
}

fn c8_divergence() -> Line {
    let mut pass = true;
    let mut detail = String::new();
    for &(n, k) in &PAIRS {
        let lambda = 1.05 * upper_bound(n, k, 1.0);
        let out = iterate_fixed_lambda(lambda, 1.0, n, k, &icfg(), &scfg()).unwrap();
        let t = out.trace();
        let growing = t.sup_norms.windows(2).all(|w| w[1] >= w[0]);
        let ok = matches!(out, IterationOutcome::Diverged(_)) && t.reason == StopReason::SupCap && growing;
        pass &= ok;
        detail += &format!("({n},{k}) {:?} after {} steps; ", t.reason, t.iterations);
    }
    Line { id: 8, name: "divergence above threshold", pass, detail }
}

fn c9_min_principle(est: &[SpectralEstimate]) -> (Line, Vec<String>) {
    let mut pass = true;
    let mut detail = String::new();
    let mut info = Vec::new();
    for e in est {
        let (n, k) = (e.dim, e.k);
        let c = upper_bound(n, k, 1.0);
        let rep = minimum_principle_probe(&quartic_test_profile(1.0, n, k, 512).unwrap(), c).unwrap();
        let ok = rep.certifies && c >= e.lambda_best;
        if n == 2 {
            pass &= ok;
            detail += &format!("({n},{k}) C={c} certified={} min={:.3} C>=lambda_best={}; ", rep.certifies, rep.interior_min, c >= e.lambda_best);
        } else {
            let c_min = quartic_certifying_constant(1.0, n, k, 512).unwrap();
            info.push(format!(
                "  note: ({n},{k}) quartic with C={c} fails the supersolution test at {} nodes; smallest certifying C = {c_min:.4}",
                rep.failing_nodes.len()
            ));
        }
    }
    (Line { id: 9, name: "minimum-principle demonstration (N = 2)", pass, detail }, info)
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    (0..n * n).map(|i| q[(i / n, i % n)]).collect()
}

fn random_spectrum(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let shift = rng.gen_range(-0.5..2.0);
    (0..n).map(|_| rng.gen_range(-1.0..1.0) + shift).collect()
}

fn random_in_gamma(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v = random_spectrum(n, rng);
        if in_gamma_k(&EigenSpectrum::new(v.clone()).unwrap(), k, true).unwrap() {
            return v;
        }
    }
}

fn brute_sigma(v: &[f64], k: usize) -> f64 {
    (0u32..1 << v.len())
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..v.len()).filter(|i| m >> i & 1 == 1).map(|i| v[i]).product::<f64>())
        .sum()
}

fn c10_cones() -> Line {
    const SAMPLES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut fails = [0usize; 6];
    for _ in 0..SAMPLES {
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=n);
        let q = random_orthogonal(n, &mut rng);
        let a = SymMatrix::diagonal(&random_in_gamma(n, k, &mut rng)).congruence(&q).unwrap();
        let pd: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let p = SymMatrix::diagonal(&pd).congruence(&random_orthogonal(n, &mut rng)).unwrap();
        let ap = a.add(&p).unwrap();
        // (P)
        if !in_sigma_k(&ap, k, false).unwrap() {
            fails[0] += 1;
        }
        // (DE)
        let (s0, s1) = (s_k_op(&a, k).unwrap(), s_k_op(&ap, k).unwrap());
        if s1 < s0 - 1e-10 * (1.0 + s0.abs()) {
            fails[1] += 1;
        }
        // Γ_k + Γ_k ⊂ Γ_k
        let x = random_in_gamma(n, k, &mut rng);
        let y = random_in_gamma(n, k, &mut rng);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        if !in_gamma_k(&EigenSpectrum::new(sum).unwrap(), k, true).unwrap() {
            fails[2] += 1;
        }
        // Σ_N ⊂ ... ⊂ Σ_1
        let m = SymMatrix::diagonal(&random_spectrum(n, &mut rng)).congruence(&q).unwrap();
        let members: Vec<bool> = (1..=n).map(|j| in_sigma_k(&m, j, false).unwrap()).collect();
        if members.windows(2).any(|w| w[1] && !w[0]) {
            fails[3] += 1;
        }
        // Korevaar agreement on a random spectrum
        let s = EigenSpectrum::new(random_spectrum(n, &mut rng)).unwrap();
        if in_gamma_k(&s, k, true).unwrap() != in_gamma_k_korevaar(&s, k).unwrap() {
            fails[4] += 1;
        }
        // brute-force σ_k, N ≤ 8
        let nb = rng.gen_range(1..=8);
        let v: Vec<f64> = (0..nb).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let kb = rng.gen_range(0..=nb);
        let (fast, slow) = (sigma_of(&v, kb), brute_sigma(&v, kb));
        if (fast - slow).abs() > 1e-12 * (1.0 + slow.abs()) * binomial(nb, kb) {
            fails[5] += 1;
        }
    }
    Line {
        id: 10,
        name: "cone property suite",
        pass: fails.iter().all(|&f| f == 0),
        detail: format!("{SAMPLES} samples each; failures P={} DE={} sum={} chain={} Korevaar={} brute={}", fails[0], fails[1], fails[2], fails[3], fails[4], fails[5]),
    }
}

fn c11_holder() -> Line {
    let (n, k) = (3, 2);
    let semis: Vec<f64> = [512, 1024]
        .iter()
        .map(|&m| {
            let cfg = SolverConfig { grid_size: m, ..Default::default() };
            let p = solve_radial_dirichlet(&SourceTerm::Constant(1.0), 1.0, n, k, &cfg).unwrap();
            holder_seminorm(&p, 0.5).unwrap()
        })
        .collect();
    let rel = (semis[1] - semis[0]).abs() / semis[0];
    Line { id: 11, name: "Hölder stability", pass: rel <= 0.05, detail: format!("[u]_(1/2) = {:.6} vs {:.6}, rel {rel:.2e}", semis[0], semis[1]) }
}

fn main() {
    let start = Instant::now();
    let mut est = Vec::new();
    let mut linear_secs = 0.0;
    for &(n, k) in &PAIRS {
        let t = Instant::now();
        est.push(estimate(n, k, 1.0));
        if (n, k) == (2, 1) {
            linear_secs = t.elapsed().as_secs_f64();
        }
    }
    let sweep_secs = start.elapsed().as_secs_f64();

    let (c9, notes) = c9_min_principle(&est);
    let lines = vec![
        c1_sandwich(&est, sweep_secs),
        c2_linear(&est[0], linear_secs),
        c3_rayleigh(&est),
        c4_dilation(&est),
        c5_quadrature(),
        c6_fundamental(),
        c7_monotone(),
        c8_divergence(),
        c9,
        c10_cones(),
        c11_holder(),
    ];
    println!();
    for l in &lines {
        println!("criterion {:>2} {}: {} ({})", l.id, if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    for n in &notes {
        println!("{n}");
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
