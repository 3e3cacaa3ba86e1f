//! Reference gates and matching up to word permutation and global phase.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use super::CMatrix;

pub const DEFAULT_MATCH_TOL: f64 = 1e-9;

/// Above this size permutations are pruned by entry magnitudes.
const EXHAUSTIVE_DIM: usize = 4;
const PRUNED_CANDIDATE_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GateCatalogEntry {
    pub name: String,
    pub matrix: CMatrix,
    /// Spider angle the matrix was instantiated at.
    pub parameter: Option<f64>,
    pub unitary: bool,
}

impl GateCatalogEntry {
    fn new(
        name: impl Into<String>,
        matrix: CMatrix,
        parameter: Option<f64>,
        unitary: bool,
    ) -> Self {
        Self {
            name: name.into(),
            matrix,
            parameter,
            unitary,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }
}

/// `U ≈ e^{iφ}·G` after reordering: `U[row_perm[r]][col_perm[c]] ≈ e^{iφ} G[r][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatch {
    pub gate: String,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub global_phase: f64,
    pub residual: f64,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|x| c(*x)))
}

pub fn hadamard() -> CMatrix {
    real(2, 2, &[1.0, 1.0, 1.0, -1.0]) * c(FRAC_1_SQRT_2)
}

/// `diag(1, e^{iα})`.
pub fn phase_gate(alpha: f64) -> CMatrix {
    let mut m = CMatrix::identity(2, 2);
    m[(1, 1)] = Complex64::from_polar(1.0, alpha);
    m
}

pub fn pi8_gate() -> CMatrix {
    phase_gate(FRAC_PI_4)
}

pub fn cnot() -> CMatrix {
    permutation_matrix(&[0, 1, 3, 2])
}

pub fn swap() -> CMatrix {
    permutation_matrix(&[0, 2, 1, 3])
}

/// `|0⟩ → |0⟩`, `|1⟩ ↔ |2⟩`.
pub fn qutrit_swap() -> CMatrix {
    permutation_matrix(&[0, 2, 1])
}

/// Column `i` has its one at row `targets[i]`.
pub fn permutation_matrix(targets: &[usize]) -> CMatrix {
    let n = targets.len();
    CMatrix::from_fn(
        n,
        n,
        |r, col| if targets[col] == r { c(1.0) } else { c(0.0) },
    )
}

/// Two-in, two-out Z-spider `|00⟩⟨00| + e^{iα}|11⟩⟨11|`.
pub fn z_spider(alpha: f64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(3, 3)] = Complex64::from_polar(1.0, alpha);
    m
}

/// X-spider as `(H⊗H)·Z(α)·(H⊗H)`.
pub fn x_spider(alpha: f64) -> CMatrix {
    let hh = hadamard().kronecker(&hadamard());
    &hh * z_spider(alpha) * &hh
}

/// The quarter-weighted display form with `(1 ± e^{iα})/4` entries whose sign
/// alternates along both rows and columns.
pub fn x_spider_displayed(alpha: f64) -> CMatrix {
    let e = Complex64::from_polar(1.0, alpha);
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    CMatrix::from_fn(4, 4, |r, col| (c(1.0) + e * (sign(r) * sign(col))) / 4.0)
}

pub const SPIDER_ANGLES: [(f64, &str); 4] = [
    (0.0, "0"),
    (FRAC_PI_4, "pi/4"),
    (FRAC_PI_2, "pi/2"),
    (PI, "pi"),
];

pub fn gate_catalog() -> Vec<GateCatalogEntry> {
    let mut out = vec![
        GateCatalogEntry::new("H", hadamard(), None, true),
        GateCatalogEntry::new("T", pi8_gate(), None, true),
        GateCatalogEntry::new("CNOT", cnot(), None, true),
        GateCatalogEntry::new("SWAP", swap(), None, true),
        GateCatalogEntry::new("QUTRIT_SWAP", qutrit_swap(), None, true),
    ];
    for (alpha, label) in SPIDER_ANGLES {
        out.push(GateCatalogEntry::new(
            format!("Z({label})"),
            z_spider(alpha),
            Some(alpha),
            false,
        ));
    }
    for (alpha, label) in SPIDER_ANGLES {
        out.push(GateCatalogEntry::new(
            format!("X({label})"),
            x_spider(alpha),
            Some(alpha),
            false,
        ));
    }
    out
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(k) = (1..n).rev().find(|&k| p[k - 1] < p[k]) else {
            break;
        };
        let l = (k..n)
            .rev()
            .find(|&l| p[k - 1] < p[l])
            .expect("successor exists");
        p.swap(k - 1, l);
        p[k..].reverse();
    }
    out
}

fn fit(u: &CMatrix, g: &CMatrix, rows: &[usize], cols: &[usize]) -> Option<(f64, f64)> {
    let mut z = Complex64::new(0.0, 0.0);
    for (r, &ur) in rows.iter().enumerate() {
        for (k, &uc) in cols.iter().enumerate() {
            z += g[(r, k)].conj() * u[(ur, uc)];
        }
    }
    if z.norm() < 1e-300 {
        return None;
    }
    let phase = z / z.norm();
    let mut residual = 0.0f64;
    for (r, &ur) in rows.iter().enumerate() {
        for (k, &uc) in cols.iter().enumerate() {
            residual = residual.max((u[(ur, uc)] - phase * g[(r, k)]).norm());
        }
    }
    Some((phase.arg(), residual))
}

fn candidate_orders(u: &CMatrix, g: &CMatrix, tol: f64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (m, n) = g.shape();
    if m.max(n) <= EXHAUSTIVE_DIM {
        let cols = permutations(n);
        return permutations(m)
            .into_iter()
            .flat_map(|r| cols.iter().map(move |c| (r.clone(), c.clone())))
            .collect();
    }
    let sig = |v: Vec<f64>| {
        let mut v = v;
        v.sort_by(f64::total_cmp);
        v
    };
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 2.0 * tol);
    let row_sig = |a: &CMatrix, r: usize| sig((0..n).map(|k| a[(r, k)].norm()).collect());
    let g_rows: Vec<Vec<f64>> = (0..m).map(|r| row_sig(g, r)).collect();
    let u_rows: Vec<Vec<f64>> = (0..m).map(|r| row_sig(u, r)).collect();

    let mut out = Vec::new();
    let mut rows = Vec::with_capacity(m);
    let mut used = vec![false; m];
    assign_rows(
        &g_rows,
        &u_rows,
        &close,
        &mut rows,
        &mut used,
        &mut |rows| {
            let mut cols = Vec::with_capacity(n);
            let mut used_c = vec![false; n];
            assign_cols(u, g, rows, tol, &mut cols, &mut used_c, &mut |cols| {
                out.push((rows.to_vec(), cols.to_vec()));
            });
            out.len() < PRUNED_CANDIDATE_CAP
        },
    );
    out
}

fn assign_rows(
    g_rows: &[Vec<f64>],
    u_rows: &[Vec<f64>],
    close: &dyn Fn(&[f64], &[f64]) -> bool,
    rows: &mut Vec<usize>,
    used: &mut [bool],
    done: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let r = rows.len();
    if r == g_rows.len() {
        return done(rows);
    }
    for q in 0..u_rows.len() {
        if !used[q] && close(&g_rows[r], &u_rows[q]) {
            used[q] = true;
            rows.push(q);
            let go_on = assign_rows(g_rows, u_rows, close, rows, used, done);
            rows.pop();
            used[q] = false;
            if !go_on {
                return false;
            }
        }
    }
    true
}

fn assign_cols(
    u: &CMatrix,
    g: &CMatrix,
    rows: &[usize],
    tol: f64,
    cols: &mut Vec<usize>,
    used: &mut [bool],
    done: &mut dyn FnMut(&[usize]),
) {
    let k = cols.len();
    if k == g.ncols() {
        done(cols);
        return;
    }
    for q in 0..u.ncols() {
        if !used[q]
            && rows
                .iter()
                .enumerate()
                .all(|(r, &ur)| (u[(ur, q)].norm() - g[(r, k)].norm()).abs() <= 2.0 * tol)
        {
            used[q] = true;
            cols.push(q);
            assign_cols(u, g, rows, tol, cols, used, done);
            cols.pop();
            used[q] = false;
        }
    }
}

/// Best match against each same-shaped catalog entry, kept when its residual
/// is within `tol`. Ties keep the first ordering found.
pub fn recognize_gate(u: &CMatrix, catalog: &[GateCatalogEntry], tol: f64) -> Vec<GateMatch> {
    let mut out = Vec::new();
    for entry in catalog.iter().filter(|e| e.shape() == u.shape()) {
        let mut best: Option<GateMatch> = None;
        for (rows, cols) in candidate_orders(u, &entry.matrix, tol) {
            let Some((phase, residual)) = fit(u, &entry.matrix, &rows, &cols) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| residual < b.residual) {
                best = Some(GateMatch {
                    gate: entry.name.clone(),
                    row_perm: rows,
                    col_perm: cols,
                    global_phase: phase,
                    residual,
                });
            }
        }
        out.extend(best.filter(|b| b.residual <= tol));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{max_abs_diff, unitarity_residual};
    use super::*;

    #[test]
    fn catalog_unitaries() {
        for e in gate_catalog().iter().filter(|e| e.unitary) {
            assert!(unitarity_residual(&e.matrix) <= 1e-12, "{}", e.name);
        }
        let zpi = z_spider(PI);
        assert!(
            max_abs_diff(
                &zpi,
                &real(
                    4,
                    4,
                    &[1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., -1.]
                )
            ) < 1e-15
        );
        let x0 = x_spider_displayed(0.0);
        assert!(x0.iter().all(|z| *z == c(0.5) || *z == c(0.0)));
    }

    #[test]
    fn x_spider_forms_agree_up_to_word_reordering() {
        // the display form swaps the roles of |10⟩ and |11⟩
        let p = permutation_matrix(&[0, 1, 3, 2]);
        for (alpha, _) in SPIDER_ANGLES {
            let conj = &p * x_spider(alpha) * &p;
            assert!(max_abs_diff(&conj, &x_spider_displayed(alpha)) < 1e-12);
        }
    }

    #[test]
    fn permutation_listing() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
    }

    #[test]
    fn hadamard_up_to_column_swap() {
        let u = real(2, 2, &[1.0, 1.0, -1.0, 1.0]) * c(FRAC_1_SQRT_2);
        let m = recognize_gate(&u, &gate_catalog(), DEFAULT_MATCH_TOL);
        let h = m.iter().find(|g| g.gate == "H").expect("H match");
        assert!(h.residual <= 1e-12);
        assert!(!m.iter().any(|g| g.gate == "T"));
    }

    #[test]
    fn phases_are_ignored() {
        let u = cnot() * Complex64::from_polar(1.0, 1.234);
        let m = recognize_gate(&u, &gate_catalog(), DEFAULT_MATCH_TOL);
        let hit = m.iter().find(|g| g.gate == "CNOT").unwrap();
        assert_eq!(hit.row_perm, vec![0, 1, 2, 3]);
        assert!((hit.global_phase - 1.234).abs() < 1e-12);
    }

    #[test]
    fn pruned_search_on_larger_permutations() {
        let target = permutation_matrix(&[1, 0, 2, 4, 3]);
        let catalog = vec![GateCatalogEntry::new(
            "P5",
            permutation_matrix(&[0, 1, 2, 4, 3]),
            None,
            true,
        )];
        let m = recognize_gate(&target, &catalog, DEFAULT_MATCH_TOL);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].residual, 0.0);
        let dense = CMatrix::from_element(5, 5, c(0.2f64.sqrt()));
        assert!(recognize_gate(&dense, &catalog, DEFAULT_MATCH_TOL).is_empty());
    }
}
