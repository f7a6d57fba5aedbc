//! Acceptance suite: every guarantee the crate makes, one test per
//! criterion, each printing a single PASS/FAIL line with the measured
//! numbers. Tolerances are part of the contract and are asserted as stated.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;
use std::f64::consts::PI;

use laplace_asym::asymptotics::{
    approx_integral, exponent_q, gaussian_moment_diag, gaussian_moment_wick, ApproxVariant,
};
use laplace_asym::critpoint::{drift_rates, verify_assumptions, DriftFit, ProblemSpec, VerifyOptions};
use laplace_asym::fields::{enumerate_multi_indices, Builtin, MultiIndex, ScalarField};
use laplace_asym::harness::{default_n_list, run_theorem_experiment, Verdict};
use laplace_asym::oracle::{gauss_legendre_rule, reference_integral, QuadratureConfig};
use laplace_asym::symmat::{weyl_gap, SymMatrix};

fn report(idx: usize, name: &str, pass: bool, detail: &str) {
    println!("criterion {idx} ({name}): {} -- {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {idx} ({name}) failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn square(dim: usize) -> Vec<(f64, f64)> {
    (0..dim).map(|_| (-1.0, 1.0)).collect()
}

fn mono(entries: &[u32], c: f64) -> ScalarField {
    ScalarField::monomial(MultiIndex::new(entries.to_vec()), c).unwrap()
}

fn one(dim: usize) -> ScalarField {
    ScalarField::builtin(dim, Builtin::One).unwrap()
}

fn zero(dim: usize) -> ScalarField {
    ScalarField::builtin(dim, Builtin::Zero).unwrap()
}

#[test]
fn criterion_1_classical_laplace() {
    let start = Instant::now();
    let prob = ProblemSpec::new(square(1), mono(&[2], -1.0), zero(1), one(1), f64::INFINITY, 0.0, 0)
        .unwrap();
    let n = 10_000u64;
    let report_c = verify_assumptions(&prob, &[n], &VerifyOptions::default()).unwrap();
    let approx = approx_integral(&prob, &report_c, n, ApproxVariant::Limit).unwrap();
    let oracle = reference_integral(&prob, n, &report_c.records[0].c_n, &QuadratureConfig::default())
        .unwrap();

    // h(c) = 0, so mantissas are directly comparable to I_n.
    let closed_form = (PI / n as f64).sqrt() * erf((n as f64).sqrt());
    let vs_closed = (approx.mantissa / closed_form - 1.0).abs();
    let oracle_value = oracle.mantissa * (oracle.log_scale - approx.log_scale).exp();
    let vs_oracle = (approx.mantissa / oracle_value - 1.0).abs();
    let elapsed = start.elapsed().as_secs_f64();

    report(
        1,
        "classical Laplace regression",
        vs_closed <= 0.01 && vs_oracle <= 0.01 && oracle.converged && elapsed < 1.0,
        &format!(
            "n = {n}: |approx/closed - 1| = {vs_closed:.3e}, |approx/oracle - 1| = {vs_oracle:.3e}, {elapsed:.2} s"
        ),
    );
}

#[test]
fn criterion_2_degenerate_leading_term() {
    let prob = ProblemSpec::new(square(1), mono(&[2], -0.5), zero(1), mono(&[2], 1.0), f64::INFINITY, 0.0, 2)
        .unwrap();
    let cfg = QuadratureConfig { rel_tol: 1e-13, ..Default::default() };
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for n in [400u64, 800, 1600] {
        let oracle = reference_integral(&prob, n, &[0.0], &cfg).unwrap();
        assert!(oracle.converged, "oracle stalled at n = {n}");
        let expected = (2.0 * PI).sqrt() * (n as f64).powf(-1.5);
        let r = rel(oracle.mantissa, expected);
        worst = worst.max(r);
        detail.push_str(&format!("n={n}: {r:.2e}  "));
    }
    report(
        2,
        "degenerate leading term",
        worst <= 1e-12,
        &format!("oracle vs sqrt(2 pi) n^-3/2: {detail}(tolerance 1e-12)"),
    );
}

#[test]
fn criterion_3_q_saturation_slow_branch() {
    let start = Instant::now();
    let prob = ProblemSpec::new(square(1), mono(&[2], -0.5), one(1), one(1), 1.25, 1.0, 0).unwrap();
    let exp = run_theorem_experiment(&prob, &default_n_list(), &QuadratureConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let fit = exp.fit.as_ref().expect("residuals are measurable at p = 1.25");
    let pass = (fit.slope + 0.75).abs() <= 0.15 && fit.r_squared >= 0.99 && elapsed < 30.0;
    report(
        3,
        "q saturation at p = 1.25",
        pass,
        &format!(
            "slope = {:.4} (target -0.75 +/- 0.15), r^2 = {:.6}, verdict = {}, {elapsed:.2} s",
            fit.slope, fit.r_squared, exp.verdict
        ),
    );
}

#[test]
fn criterion_4_q_bound_fast_branch() {
    let prob = ProblemSpec::new(square(1), mono(&[2], -0.5), one(1), one(1), 2.0, 1.0, 0).unwrap();
    let exp = run_theorem_experiment(&prob, &default_n_list(), &QuadratureConfig::default()).unwrap();
    let fit = exp.fit.as_ref().expect("residuals are measurable at p = 2");
    let verdict_ok = matches!(exp.verdict, Verdict::Saturated | Verdict::BoundRespected);
    report(
        4,
        "q bound at p = 2",
        fit.slope <= -0.85 && verdict_ok,
        &format!("slope = {:.4} (must be <= -0.85), verdict = {}", fit.slope, exp.verdict),
    );
}

#[test]
fn criterion_5_unperturbed_plane_bound() {
    let h = ScalarField::polynomial(
        2,
        vec![(MultiIndex::new(vec![2, 0]), -0.5), (MultiIndex::new(vec![0, 2]), -1.0)],
    )
    .unwrap();
    let prob = ProblemSpec::new(square(2), h, zero(2), one(2), f64::INFINITY, 0.0, 0).unwrap();
    let exp = run_theorem_experiment(&prob, &default_n_list(), &QuadratureConfig::default()).unwrap();
    // The Gaussian plane problem has no measurable residual at all: every
    // point sits below the oracle noise floor, which respects the
    // O(n^{-3/2}) bound vacuously. A measured rate must beat -1.35.
    let (pass, detail) = match &exp.fit {
        None => (
            exp.verdict == Verdict::Exact,
            format!("verdict = {} (all residuals below noise floor)", exp.verdict),
        ),
        Some(fit) => (
            fit.slope <= -1.35,
            format!("slope = {:.4} (must be <= -1.35), verdict = {}", fit.slope, exp.verdict),
        ),
    };
    report(5, "unperturbed plane bound", pass, &detail);
}

#[test]
fn criterion_6_maximizer_drift_rate() {
    let prob = ProblemSpec::new(square(1), mono(&[2], -0.5), mono(&[1], 1.0), one(1), 2.0, 1.0, 0)
        .unwrap();
    let n_list = default_n_list();
    let rates = drift_rates(&prob, &n_list).unwrap();
    let slope = match &rates.cn {
        DriftFit::Fitted(fit) => fit.slope,
        DriftFit::Exact => panic!("maximizer drift at p = 2 is measurable"),
    };
    // Closed form: c_n = s n^{-p} exactly.
    let mut worst = 0.0f64;
    for row in &rates.rows {
        worst = worst.max(rel(row.cn_dist, (row.n as f64).powf(-2.0)));
    }
    report(
        6,
        "maximizer drift rate",
        (slope + 2.0).abs() <= 0.02 && worst <= 1e-9,
        &format!("slope = {slope:.5} (target -2 +/- 0.02), worst |c_n| vs n^-2: {worst:.2e}"),
    );
}

#[test]
fn criterion_7_eigenvalue_drift_and_weyl() {
    let prob = ProblemSpec::new(
        square(1),
        mono(&[2], -0.5),
        mono(&[2], 0.5),
        one(1),
        1.25,
        1.0,
        0,
    )
    .unwrap();
    let rates = drift_rates(&prob, &default_n_list()).unwrap();
    let eigen_slope = match &rates.eigen_drift[0] {
        DriftFit::Fitted(fit) => fit.slope,
        DriftFit::Exact => panic!("eigenvalue drift at p = 1.25 is measurable"),
    };

    // Weyl perturbation property: sorted eigenvalue gap never exceeds the
    // Hilbert-Schmidt norm of the difference.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2026);
    let mut violations = 0usize;
    for _ in 0..1000 {
        let d = rng.gen_range(2..=4usize);
        let a = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let b = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let (gap, bound) = weyl_gap(&a, &b).unwrap();
        if gap > bound + 1e-12 {
            violations += 1;
        }
    }
    report(
        7,
        "eigenvalue drift and Weyl property",
        (eigen_slope + 1.25).abs() <= 0.05 && violations == 0,
        &format!(
            "eigen drift slope = {eigen_slope:.5} (target -1.25 +/- 0.05), Weyl violations = {violations}/1000"
        ),
    );
}

/// Gaussian moment by tensor quadrature in the eigenbasis: with `A = Q L Q^T`
/// the integral becomes `int (Qz)^beta exp(1/2 sum l_i z_i^2) dz`, so the
/// Gaussian weight factorizes into the per-axis quadrature weights and only
/// the rotated monomial couples the axes. Independent of the pairing code.
fn moment_by_quadrature(a: &SymMatrix, beta: &MultiIndex) -> f64 {
    let d = a.dim();
    let eig = a.jacobi_eigen().unwrap();
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
    for i in 0..d {
        let lam = eig.eigenvalues[i];
        assert!(lam < 0.0);
        let sigma = (-lam).sqrt().recip();
        let r = 12.0 * sigma;
        let panels = 6usize;
        let mut nodes = Vec::new();
        for k in 0..panels {
            let a0 = -r + 2.0 * r * k as f64 / panels as f64;
            let b0 = -r + 2.0 * r * (k + 1) as f64 / panels as f64;
            for (z, w) in gauss_legendre_rule(16, a0, b0).unwrap() {
                nodes.push((z, w * (0.5 * lam * z * z).exp()));
            }
        }
        axes.push(nodes);
    }
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for i in 0..d {
            w *= axes[i][idx[i]].1;
        }
        let mut f = 1.0;
        for i in 0..d {
            // y_i = sum_j Q[i][j] z_j
            let mut y = 0.0;
            for j in 0..d {
                y += eig.basis_get(i, j) * axes[j][idx[j]].0;
            }
            f *= y.powi(beta.get(i) as i32);
        }
        total += w * f;
        for axis in (0..d).rev() {
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                continue 'outer;
            }
            idx[axis] = 0;
        }
        break;
    }
    total
}

#[test]
fn criterion_8_moment_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // Diagonal route vs pairing expansion: every even beta with |beta| <= 6.
    let mut worst_diag = 0.0f64;
    for trial in 0..50 {
        let d = trial % 3 + 1;
        let lambdas: Vec<f64> = (0..d).map(|_| -rng.gen_range(0.2..4.0)).collect();
        let a = SymMatrix::diag(&lambdas).unwrap();
        for total in [0u32, 2, 4, 6] {
            for beta in enumerate_multi_indices(d, total, true) {
                let diag = gaussian_moment_diag(&lambdas, &beta).unwrap();
                let wick = gaussian_moment_wick(&a, &beta).unwrap();
                worst_diag = worst_diag.max(rel(wick, diag));
            }
        }
    }

    // Pairing expansion vs tensor quadrature on rotated (non-diagonal)
    // negative definite matrices, |beta| <= 4.
    let mut worst_quad = 0.0f64;
    for trial in 0..20 {
        let d = if trial % 2 == 0 { 2 } else { 3 };
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; d]; d];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = -rng.gen_range(0.2..4.0);
        }
        // A few random plane rotations produce a full matrix with the same
        // (negative) spectrum.
        for _ in 0..3 {
            let i = rng.gen_range(0..d);
            let mut j = rng.gen_range(0..d);
            if i == j {
                j = (j + 1) % d;
            }
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (c, s) = (theta.cos(), theta.sin());
            for row in rows.iter_mut() {
                let (vi, vj) = (row[i], row[j]);
                row[i] = c * vi - s * vj;
                row[j] = s * vi + c * vj;
            }
            // Indexes two distinct rows per column, so stay with a plain loop.
            #[allow(clippy::needless_range_loop)]
            for col in 0..d {
                let (vi, vj) = (rows[i][col], rows[j][col]);
                rows[i][col] = c * vi - s * vj;
                rows[j][col] = s * vi + c * vj;
            }
        }
        let a = SymMatrix::from_rows(&rows).unwrap();
        for total in [0u32, 2, 4] {
            for beta in enumerate_multi_indices(d, total, true) {
                let wick = gaussian_moment_wick(&a, &beta).unwrap();
                let quad = moment_by_quadrature(&a, &beta);
                worst_quad = worst_quad.max(rel(wick, quad));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        8,
        "moment oracle equivalence",
        worst_diag <= 1e-12 && worst_quad <= 1e-8 && elapsed < 10.0,
        &format!(
            "diag vs pairing worst rel = {worst_diag:.2e} (<= 1e-12), pairing vs quadrature worst rel = {worst_quad:.2e} (<= 1e-8), {elapsed:.2} s"
        ),
    );
}

#[test]
fn criterion_9_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures: Vec<String> = Vec::new();

    // Odd-moment annihilation: any odd entry kills the moment exactly.
    for _ in 0..200 {
        let d = rng.gen_range(1..=3usize);
        let lambdas: Vec<f64> = (0..d).map(|_| -rng.gen_range(0.2..4.0)).collect();
        let mut entries: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=3u32)).collect();
        entries[rng.gen_range(0..d)] = 2 * rng.gen_range(0..=1u32) + 1;
        let beta = MultiIndex::new(entries);
        if gaussian_moment_diag(&lambdas, &beta).unwrap() != 0.0 {
            failures.push(format!("odd moment nonzero for beta {:?}", beta.entries()));
        }
        let a = SymMatrix::diag(&lambdas).unwrap();
        if gaussian_moment_wick(&a, &beta).unwrap() != 0.0 {
            failures.push("odd pairing moment nonzero".into());
        }
    }

    // Adjugate identity A adj(A) = det(A) I and spectral reconstruction.
    for _ in 0..20 {
        let d = rng.gen_range(1..=5usize);
        let a = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let det = a.determinant().unwrap();
        let adj = a.adjugate();
        let scale = a.hs_norm().powi((d as i32 - 1).max(1)) + det.abs() + 1.0;
        for j in 0..d {
            let col: Vec<f64> = (0..d).map(|i| adj.get(i, j)).collect();
            let prod = a.mul_vec(&col).unwrap();
            for (i, v) in prod.iter().enumerate() {
                let want = if i == j { det } else { 0.0 };
                if (v - want).abs() > 1e-9 * scale {
                    failures.push(format!("adjugate identity off by {:.2e}", (v - want).abs()));
                }
            }
        }
        let eig = a.jacobi_eigen().unwrap();
        let back = eig.reconstruct();
        for i in 0..d {
            for j in 0..d {
                if (back.get(i, j) - a.get(i, j)).abs() > 1e-9 * (1.0 + a.hs_norm()) {
                    failures.push("spectral reconstruction off".into());
                }
            }
        }
    }

    // Gauss-Legendre degree exactness: the 3-point rule integrates x^4
    // exactly (2/5 on (-1,1)), and order m handles degree 2m-1.
    let r3 = gauss_legendre_rule(3, -1.0, 1.0).unwrap();
    let quartic: f64 = r3.iter().map(|&(x, w)| w * x.powi(4)).sum();
    if (quartic - 0.4).abs() > 1e-15 {
        failures.push(format!("3-point rule on x^4: {quartic}"));
    }
    for order in 2..=6usize {
        let r = gauss_legendre_rule(order, -1.0, 1.0).unwrap();
        let deg = 2 * order - 1;
        let got: f64 = r.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
        if got.abs() > 1e-13 {
            failures.push(format!("order {order} degree {deg}: {got:.2e}"));
        }
    }

    // Multi-index enumeration counts: all indices of total order t come out
    // to C(t + d - 1, d - 1), all distinct; the even-only count matches the
    // compositions of t/2.
    let choose = |n: u64, k: u64| -> u64 {
        let mut acc = 1u64;
        for i in 0..k.min(n - k) {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    };
    for d in 1..=4usize {
        for t in 0..=6u32 {
            let all = enumerate_multi_indices(d, t, false);
            let want = choose((t as u64) + d as u64 - 1, d as u64 - 1);
            if all.len() as u64 != want {
                failures.push(format!("count({d},{t}) = {} want {want}", all.len()));
            }
            let mut seen = all.iter().map(|m| m.entries().to_vec()).collect::<Vec<_>>();
            seen.sort();
            seen.dedup();
            if seen.len() != all.len() {
                failures.push(format!("duplicate indices at d={d} t={t}"));
            }
            if t % 2 == 0 {
                let even = enumerate_multi_indices(d, t, true);
                let want_even = choose((t as u64) / 2 + d as u64 - 1, d as u64 - 1);
                if even.len() as u64 != want_even {
                    failures.push(format!("even count({d},{t}) = {}", even.len()));
                }
            }
        }
    }

    // Predicted-exponent continuity across the branch point p = 3/2.
    for (d, k) in [(1usize, 0u32), (2, 2), (3, 4)] {
        let below = exponent_q(1.5 - 1e-12, d, k).unwrap();
        let at = exponent_q(1.5, d, k).unwrap();
        let above = exponent_q(1.5 + 1e-12, d, k).unwrap();
        if (below - at).abs() > 1e-10 || (above - at).abs() > 1e-10 {
            failures.push(format!("exponent_q jump at p = 3/2 for d={d} k={k}"));
        }
    }

    report(
        9,
        "property suites",
        failures.is_empty(),
        &if failures.is_empty() {
            "odd moments, adjugate, reconstruction, quadrature exactness, enumeration, exponent continuity all hold".to_string()
        } else {
            failures.join("; ")
        },
    );
}
