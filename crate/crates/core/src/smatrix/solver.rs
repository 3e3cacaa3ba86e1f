//! Real weights with orthonormal columns on a fixed support.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{connected_blocks, gram_residual, Mask, SMatrixSpec, WeightMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative objective decrease below which descent counts as stalled.
    pub tol: f64,
    /// Objective `‖wᵀw - I‖²_F` at or below which a solution is accepted.
    pub feasibility: f64,
    pub seed: u64,
    /// Off-diagonal magnitude used by the closed form for a full 2x2 block.
    pub lambda: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 4000,
            tol: 1e-12,
            feasibility: 1e-18,
            seed: 0,
            lambda: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Permutation,
    Interacting2x2,
    Numerical,
    Blocks,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Feasible {
        weights: WeightMatrix,
        residual: f64,
        method: SolveMethod,
    },
    /// Best weights found and their `max |wᵀw - I|`.
    Infeasible { best: WeightMatrix, residual: f64 },
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            SolveOutcome::Feasible { residual, .. } | SolveOutcome::Infeasible { residual, .. } => {
                *residual
            }
        }
    }

    pub fn weights(&self) -> &WeightMatrix {
        match self {
            SolveOutcome::Feasible { weights, .. } => weights,
            SolveOutcome::Infeasible { best, .. } => best,
        }
    }
}

/// `[[√(1-λ²), λ], [-λ, √(1-λ²)]]`.
pub fn interacting_2x2(lambda: f64) -> DMatrix<f64> {
    let c = (1.0 - lambda * lambda).max(0.0).sqrt();
    DMatrix::from_row_slice(2, 2, &[c, lambda, -lambda, c])
}

/// Solves `wᵀw = I` on the support of `mask`, block by block.
///
/// Permutation blocks get weight 1, full 2x2 blocks the `λ` family, anything
/// else a multi-start numerical search. A column with no support is infeasible.
pub fn solve_unitary_weights(mask: &Mask, opts: &SolverOptions) -> SolveOutcome {
    let mut w = DMatrix::<f64>::zeros(mask.nrows(), mask.ncols());
    let blocks = connected_blocks(mask);
    let mut methods = Vec::new();
    let mut all_ok = true;
    for b in blocks.iter().filter(|b| !b.ins.is_empty()) {
        if b.outs.is_empty() {
            all_ok = false;
            continue;
        }
        let sub = Mask::from_fn(b.outs.len(), b.ins.len(), |r, c| {
            mask[(b.outs[r], b.ins[c])]
        });
        let (sw, ok, how) = if b.outs.len() == 1 && b.ins.len() == 1 {
            (
                DMatrix::from_element(1, 1, 1.0),
                true,
                SolveMethod::Permutation,
            )
        } else if sub.shape() == (2, 2) && sub.iter().all(|x| *x) {
            (
                interacting_2x2(opts.lambda),
                true,
                SolveMethod::Interacting2x2,
            )
        } else {
            let (sw, f) = numerical(&sub, opts);
            (sw, f <= opts.feasibility, SolveMethod::Numerical)
        };
        all_ok &= ok;
        methods.push(how);
        for (r, &j) in b.outs.iter().enumerate() {
            for (c, &i) in b.ins.iter().enumerate() {
                w[(j, i)] = sw[(r, c)];
            }
        }
    }
    let method = match methods.as_slice() {
        [one] => *one,
        many if many.iter().all(|m| *m == SolveMethod::Permutation) => SolveMethod::Permutation,
        _ => SolveMethod::Blocks,
    };
    let residual = gram_residual(&w);
    let weights = WeightMatrix {
        entries: w,
        support: mask.clone(),
    };
    if all_ok {
        SolveOutcome::Feasible {
            weights,
            residual,
            method,
        }
    } else {
        SolveOutcome::Infeasible {
            best: weights,
            residual,
        }
    }
}

fn objective(w: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let n = w.ncols();
    let e = w.transpose() * w - DMatrix::<f64>::identity(n, n);
    (e.norm_squared(), e)
}

fn masked_gradient(w: &DMatrix<f64>, e: &DMatrix<f64>, mask: &Mask) -> DMatrix<f64> {
    let mut g = w * e * 4.0;
    g.zip_apply(mask, |x, keep| {
        if !keep {
            *x = 0.0
        }
    });
    g
}

/// Multi-start descent; returns the best weights and their objective.
fn numerical(mask: &Mask, opts: &SolverOptions) -> (DMatrix<f64>, f64) {
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart as u64));
        let start = DMatrix::from_fn(mask.nrows(), mask.ncols(), |j, i| {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            if mask[(j, i)] {
                x
            } else {
                0.0
            }
        });
        let w = levenberg_marquardt(descend(start, mask, opts), mask, opts);
        let f = objective(&w).0;
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((w, f));
        }
    }
    best.expect("at least one restart")
}

/// Gradient descent with Armijo backtracking on `‖wᵀw - I‖²_F`.
fn descend(mut w: DMatrix<f64>, mask: &Mask, opts: &SolverOptions) -> DMatrix<f64> {
    let (mut f, mut e) = objective(&w);
    let mut step = 0.1;
    for _ in 0..opts.max_iters {
        if f <= opts.feasibility * 1e-4 {
            break;
        }
        let g = masked_gradient(&w, &e, mask);
        let gg = g.norm_squared();
        if gg == 0.0 {
            break;
        }
        step *= 2.0;
        let (next, fnext, enext) = loop {
            let cand = &w - &g * step;
            let (fc, ec) = objective(&cand);
            if fc <= f - 1e-4 * step * gg || step < 1e-20 {
                break (cand, fc, ec);
            }
            step *= 0.5;
        };
        let stalled = f - fnext <= opts.tol * f;
        if fnext < f {
            w = next;
            f = fnext;
            e = enext;
        }
        if stalled {
            break;
        }
    }
    w
}

/// Damped Gauss-Newton on the upper triangle of `wᵀw - I`.
fn levenberg_marquardt(mut w: DMatrix<f64>, mask: &Mask, opts: &SolverOptions) -> DMatrix<f64> {
    let n = w.ncols();
    let vars: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..w.nrows()).map(move |j| (j, i)))
        .filter(|&(j, i)| mask[(j, i)])
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let residuals = |w: &DMatrix<f64>| {
        let e = w.transpose() * w - DMatrix::<f64>::identity(n, n);
        nalgebra::DVector::from_iterator(pairs.len(), pairs.iter().map(|&(a, b)| e[(a, b)]))
    };
    let mut r = residuals(&w);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..200 {
        if cost <= opts.feasibility * 1e-6 {
            break;
        }
        let jac = DMatrix::from_fn(pairs.len(), vars.len(), |p, v| {
            let (a, b) = pairs[p];
            let (j, c) = vars[v];
            let mut d = 0.0;
            if c == a {
                d += w[(j, b)];
            }
            if c == b {
                d += w[(j, a)];
            }
            d
        });
        let jt = jac.transpose();
        let rhs = -(&jt * &r);
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = &jt * &jac;
            for k in 0..vars.len() {
                lhs[(k, k)] += mu * (1.0 + lhs[(k, k)]);
            }
            let Some(delta) = lhs.cholesky().map(|c| c.solve(&rhs)) else {
                mu *= 10.0;
                continue;
            };
            let mut cand = w.clone();
            for (k, &(j, i)) in vars.iter().enumerate() {
                cand[(j, i)] += delta[k];
            }
            let rc = residuals(&cand);
            let cc = rc.norm_squared();
            if cc < cost {
                w = cand;
                r = rc;
                cost = cc;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    w
}

/// Every assignment of `values` to the supported entries whose columns are
/// orthonormal to 1e-12, in lexicographic order of assignment.
pub fn enumerate_orthogonal_assignments(mask: &Mask, values: &[f64]) -> Vec<DMatrix<f64>> {
    let slots: Vec<(usize, usize)> = (0..mask.nrows())
        .flat_map(|j| (0..mask.ncols()).map(move |i| (j, i)))
        .filter(|&(j, i)| mask[(j, i)])
        .collect();
    let total = values
        .len()
        .checked_pow(slots.len() as u32)
        .expect("enumeration too large");
    let mut out = Vec::new();
    for code in 0..total {
        let mut w = DMatrix::<f64>::zeros(mask.nrows(), mask.ncols());
        let mut rest = code;
        for &(j, i) in slots.iter().rev() {
            w[(j, i)] = values[rest % values.len()];
            rest /= values.len();
        }
        if gram_residual(&w) <= 1e-12 {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendOutcome {
    /// `U` stacked over the auxiliary block.
    pub composite: SMatrixSpec,
    pub auxiliary: DMatrix<f64>,
    /// `max |U_cᵀU_c - I|` over the weights.
    pub residual: f64,
    pub feasible: bool,
    /// Fewest auxiliary rows that can complete the pinned weights.
    pub rows_needed: usize,
}

/// Appends `dm` auxiliary out-words beneath a pinned `U`.
///
/// The auxiliary weights solve `U_eᵀU_e = I - WᵀW`, so they are the scaled
/// leading eigenvectors of that matrix; it must be positive semidefinite with
/// rank at most `dm`.
pub fn extend_for_unitarity(u: &SMatrixSpec, dm: usize) -> ExtendOutcome {
    const TOL: f64 = 1e-9;
    let w = &u.weights.entries;
    let (m, n) = w.shape();
    let deficit = DMatrix::<f64>::identity(n, n) - w.transpose() * w;
    let eig = SymmetricEigen::new(deficit);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let rows_needed = order.iter().filter(|&&k| eig.eigenvalues[k] > TOL).count();
    let negative = order.iter().any(|&k| eig.eigenvalues[k] < -TOL);
    let aux = DMatrix::from_fn(dm, n, |r, c| match order.get(r) {
        Some(&k) if eig.eigenvalues[k] > 0.0 => {
            eig.eigenvalues[k].sqrt() * eig.eigenvectors[(c, k)]
        }
        _ => 0.0,
    });
    let stacked = DMatrix::from_fn(
        m + dm,
        n,
        |r, c| if r < m { w[(r, c)] } else { aux[(r - m, c)] },
    );
    let support = Mask::from_fn(m + dm, n, |r, c| {
        if r < m {
            u.weights.support[(r, c)]
        } else {
            true
        }
    });
    let residual = gram_residual(&stacked);
    ExtendOutcome {
        composite: SMatrixSpec {
            weights: WeightMatrix {
                entries: stacked,
                support,
            },
            phases: u.phases.clone(),
            coupling: u.coupling,
        },
        auxiliary: aux,
        residual,
        feasible: !negative && residual <= TOL,
        rows_needed,
    }
}

/// Solves the stacked pattern `[mask; full dm x n block]` with nothing pinned.
pub fn extend_jointly(mask: &Mask, dm: usize, opts: &SolverOptions) -> SolveOutcome {
    let (m, n) = mask.shape();
    let stacked = Mask::from_fn(m + dm, n, |r, c| r >= m || mask[(r, c)]);
    solve_unitary_weights(&stacked, opts)
}

/// Orthogonal 3x3 matrix from Euler angles, times `sign`.
pub fn euler_omega(psi: f64, theta: f64, phi: f64, sign: f64) -> Matrix3<f64> {
    let (sps, cps) = psi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (sph, cph) = phi.sin_cos();
    Matrix3::new(
        cps * cph - cth * sph * sps,
        cps * sph + cth * cph * sps,
        sps * sth,
        -sps * cph - cth * sph * cps,
        -sps * sph + cth * cph * cps,
        cps * sth,
        sth * sph,
        -sth * cph,
        cth,
    ) * sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(rows: &[&[u8]]) -> Mask {
        Mask::from_fn(rows.len(), rows[0].len(), |j, i| rows[j][i] == 1)
    }

    #[test]
    fn permutation_patterns_get_unit_weights() {
        let cnot = mask(&[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]]);
        let out = solve_unitary_weights(&cnot, &SolverOptions::default());
        let SolveOutcome::Feasible {
            weights,
            residual,
            method,
        } = out
        else {
            panic!("infeasible")
        };
        assert_eq!(method, SolveMethod::Permutation);
        assert_eq!(residual, 0.0);
        assert_eq!(weights.entries, cnot.map(|b| if b { 1.0 } else { 0.0 }));
    }

    #[test]
    fn full_2x2_uses_lambda_family() {
        for k in 0..=10 {
            let lambda = -1.0 + 0.2 * k as f64;
            let opts = SolverOptions {
                lambda,
                ..Default::default()
            };
            let out = solve_unitary_weights(&mask(&[&[1, 1], &[1, 1]]), &opts);
            assert!(out.is_feasible());
            assert_eq!(out.weights().entries, interacting_2x2(lambda));
            assert!(out.residual() <= 1e-12);
        }
    }

    #[test]
    fn rectangular_full_patterns() {
        let opts = SolverOptions::default();
        let tall = solve_unitary_weights(&Mask::from_element(3, 2, true), &opts);
        assert!(tall.is_feasible(), "residual {}", tall.residual());
        assert!(tall.residual() <= 1e-9);
        let wide = solve_unitary_weights(&Mask::from_element(2, 3, true), &opts);
        assert!(!wide.is_feasible());
        assert!(wide.residual() >= 1e-3);
    }

    #[test]
    fn zero_column_is_infeasible() {
        let out = solve_unitary_weights(&mask(&[&[1, 0], &[1, 0]]), &SolverOptions::default());
        assert!(!out.is_feasible());
        assert_eq!(out.residual(), 1.0);
    }

    #[test]
    fn magnetic_pattern_is_solvable() {
        let p = mask(&[&[1, 1, 0, 0], &[1, 0, 1, 0], &[0, 1, 0, 1], &[0, 0, 1, 1]]);
        let out = solve_unitary_weights(&p, &SolverOptions::default());
        assert!(out.is_feasible());
        assert!(out.residual() <= 1e-9);
    }

    #[test]
    fn qutrit_sign_solutions() {
        let p = mask(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]]);
        let all = enumerate_orthogonal_assignments(&p, &[-1.0, 0.0, 1.0]);
        assert_eq!(all.len(), 16);
        let displayed = mask(&[&[1, 0, 0], &[0, 0, 1], &[0, 1, 0]]);
        assert_eq!(
            enumerate_orthogonal_assignments(&displayed, &[-1.0, 1.0]).len(),
            8
        );
    }

    #[test]
    fn euler_fixed_points() {
        assert_eq!(euler_omega(0.0, 0.0, 0.0, 1.0), Matrix3::identity());
        assert_eq!(euler_omega(0.0, 0.0, 0.0, -1.0), -Matrix3::identity());
    }

    #[test]
    fn extension_of_non_interacting_4_to_2() {
        use super::super::Coupling;
        use num_complex::Complex64;
        let p = mask(&[&[1, 0, 0, 0], &[0, 0, 0, 1]]);
        let u = SMatrixSpec::new(
            WeightMatrix::ones(&p),
            vec![Complex64::new(1.0, 0.0); 4],
            Coupling::default(),
        )
        .unwrap();
        let none = extend_for_unitarity(&u, 0);
        assert_eq!(none.composite.weights.entries, u.weights.entries);
        assert_eq!(none.rows_needed, 2);
        let one = extend_for_unitarity(&u, 1);
        assert!(!one.feasible);
        assert!((one.residual - 1.0).abs() < 1e-12);
        let two = extend_for_unitarity(&u, 2);
        assert!(two.feasible && two.residual <= 1e-12);
        assert!(!extend_jointly(&p, 1, &SolverOptions::default()).is_feasible());
        assert!(extend_jointly(&p, 2, &SolverOptions::default()).is_feasible());
    }

    proptest! {
        #[test]
        fn euler_is_orthogonal(psi in -7.0f64..7.0, theta in -7.0f64..7.0, phi in -7.0f64..7.0, neg in any::<bool>()) {
            let w = euler_omega(psi, theta, phi, if neg { -1.0 } else { 1.0 });
            let e = w.transpose() * w - Matrix3::identity();
            prop_assert!(e.iter().all(|x| x.abs() < 1e-12));
        }

        #[test]
        fn feasible_means_certified(bits in proptest::collection::vec(any::<bool>(), 9), seed in 0u64..1000) {
            let p = Mask::from_fn(3, 3, |j, i| bits[3 * j + i]);
            let out = solve_unitary_weights(&p, &SolverOptions { seed, restarts: 4, ..Default::default() });
            if let SolveOutcome::Feasible { weights, residual, .. } = &out {
                prop_assert!(*residual <= 1e-9);
                prop_assert_eq!(gram_residual(&weights.entries), *residual);
                for j in 0..3 { for i in 0..3 {
                    prop_assert!(p[(j, i)] || weights.entries[(j, i)] == 0.0);
                }}
            }
        }
    }
}
