use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::kernel::{Kernel, DETAILED_BALANCE_TOLERANCE};
use super::table::JointTable;
use crate::{Error, Result};

pub const SHARED_CONDITIONAL_TOLERANCE: f64 = 1e-12;
pub const ORBIT_PROJECTION_TOLERANCE: f64 = 1e-10;

/// A finite group acting on the states of `Y` by permutations.
///
/// Counting measure on a finite set is invariant under any permutation, so
/// the multiplier and the modular function are identically one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAction {
    perms: Vec<Vec<usize>>,
    identity: usize,
}

impl GroupAction {
    /// Validates that `perms` are permutations of a common state set, that
    /// the identity is present and that the set is closed under composition.
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        let Some(first) = perms.first() else {
            return Err(Error::parameter("group", 0, "must contain at least the identity"));
        };
        let n = first.len();
        for (g, p) in perms.iter().enumerate() {
            if p.len() != n {
                return Err(Error::parameter(
                    "permutation",
                    g,
                    format!("has length {} but the first has length {n}", p.len()),
                ));
            }
            let mut seen = vec![false; n];
            for &y in p {
                if y >= n || seen[y] {
                    return Err(Error::parameter("permutation", g, format!("is not a permutation of 0..{n}")));
                }
                seen[y] = true;
            }
        }
        let Some(identity) = perms.iter().position(|p| p.iter().enumerate().all(|(i, &y)| i == y)) else {
            return Err(Error::parameter("group", perms.len(), "does not contain the identity permutation"));
        };
        let members: HashSet<&[usize]> = perms.iter().map(Vec::as_slice).collect();
        for (i, a) in perms.iter().enumerate() {
            for (j, b) in perms.iter().enumerate() {
                // (a ∘ b)(y) = a(b(y))
                let c: Vec<usize> = b.iter().map(|&y| a[y]).collect();
                if !members.contains(c.as_slice()) {
                    return Err(Error::parameter(
                        "group",
                        format!("elements {i} and {j}"),
                        "composition is not in the set (not closed)",
                    ));
                }
            }
        }
        Ok(Self { perms, identity })
    }

    /// The group generated by `generators` under composition.
    pub fn from_generators(generators: &[Vec<usize>]) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::parameter("generators", 0, "need at least one generator"));
        };
        let n = first.len();
        let identity: Vec<usize> = (0..n).collect();
        for (g, p) in generators.iter().enumerate() {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&y| y >= n || std::mem::replace(&mut seen[y], true)) {
                return Err(Error::parameter("generator", g, format!("is not a permutation of 0..{n}")));
            }
        }
        let mut elements = vec![identity];
        let mut members: HashSet<Vec<usize>> = elements.iter().cloned().collect();
        let mut frontier = 0;
        while frontier < elements.len() {
            let a = elements[frontier].clone();
            frontier += 1;
            for g in generators {
                let c: Vec<usize> = a.iter().map(|&y| g[y]).collect();
                if members.insert(c.clone()) {
                    elements.push(c);
                }
            }
        }
        Self::new(elements)
    }

    pub fn trivial(n: usize) -> Self {
        Self {
            perms: vec![(0..n).collect()],
            identity: 0,
        }
    }

    /// `Z₂` swapping `2k ↔ 2k+1`; with odd `n` the last state is fixed.
    pub fn pair_swap(n: usize) -> Self {
        let swap = (0..n)
            .map(|y| if y % 2 == 0 { if y + 1 < n { y + 1 } else { y } } else { y - 1 })
            .collect();
        Self {
            perms: vec![(0..n).collect(), swap],
            identity: 0,
        }
    }

    /// `Z_n` rotating all states; a single orbit.
    pub fn cyclic(n: usize) -> Self {
        Self {
            perms: (0..n).map(|s| (0..n).map(|y| (y + s) % n).collect()).collect(),
            identity: 0,
        }
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn n_states(&self) -> usize {
        self.perms[self.identity].len()
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    /// `g y`.
    pub fn apply(&self, g: usize, y: usize) -> usize {
        self.perms[g][y]
    }

    pub fn multiplier(&self, _g: usize) -> f64 {
        1.0
    }

    pub fn modular(&self, _g: usize) -> f64 {
        1.0
    }

    /// Orbit index of each state, numbered by first appearance.
    pub fn orbit_labels(&self) -> Vec<usize> {
        let n = self.n_states();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for y in 0..n {
            if label[y] == usize::MAX {
                for p in &self.perms {
                    label[p[y]] = next;
                }
                next += 1;
            }
        }
        label
    }

    pub fn orbit_count(&self) -> usize {
        self.orbit_labels().iter().max().map_or(0, |m| m + 1)
    }
}

/// Middle-step kernel from the group action:
/// `R(y, y') = Σ_{g: gy = y'} f_Y(gy) χ(g) / m(y)`, `m(y) = Σ_g f_Y(gy) χ(g)`.
pub fn build_group_r(fy: &DVector<f64>, action: &GroupAction) -> Result<Kernel> {
    let n = fy.len();
    if action.order() == 0 {
        return Err(Error::parameter("group", 0, "is empty"));
    }
    if action.n_states() != n {
        return Err(Error::Consistency(format!(
            "action permutes {} states but f_Y has {n}",
            action.n_states()
        )));
    }
    let mut r = DMatrix::zeros(n, n);
    for y in 0..n {
        let mut m = 0.0;
        for g in 0..action.order() {
            let gy = action.apply(g, y);
            let w = fy[gy] * action.multiplier(g);
            r[(y, gy)] += w;
            m += w;
        }
        if !(m > 0.0) {
            return Err(Error::Degenerate(format!("m(y) = 0 at y = {y}")));
        }
        r.row_mut(y).scale_mut(1.0 / m);
    }
    Kernel::new(r, fy.clone())
}

/// Whether `f_{X|Y}(x|y) = f_{X|Y}(x|gy)` for every `g`, `x`, `y`, in which
/// case the group-action sandwich chain is exactly the DA chain.
pub fn check_shared_conditional(table: &JointTable, action: &GroupAction) -> Result<bool> {
    if action.n_states() != table.ny() {
        return Err(Error::Consistency(format!(
            "action permutes {} states but Y has {}",
            action.n_states(),
            table.ny()
        )));
    }
    let cond = table.x_given_y();
    let mut worst = 0.0_f64;
    for g in 0..action.order() {
        for y in 0..table.ny() {
            let gy = action.apply(g, y);
            for x in 0..table.nx() {
                worst = worst.max((cond[(y, x)] - cond[(gy, x)]).abs());
            }
        }
    }
    Ok(worst < SHARED_CONDITIONAL_TOLERANCE)
}

/// Checks that the group-action `R` is the projection onto orbit-constant
/// functions.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitProjectionReport {
    pub idempotency_residual: f64,
    pub detailed_balance_residual: f64,
    /// `max ‖R h − h‖` over orbit indicators (and hence all orbit-constant `h`).
    pub invariant_fixed_residual: f64,
    /// `max |(Rh)(gy) − (Rh)(y)|` over a basis of all `h`.
    pub range_invariance_residual: f64,
    /// Distance of the spectrum of `R` from `{0, 1}`.
    pub eigenvalue_residual: f64,
    /// Dimension of `{h : R h = h}`.
    pub fixed_space_dim: usize,
    pub orbit_count: usize,
    /// How far the fixed space of `R` is from being orbit-constant.
    pub fixed_space_orbit_residual: f64,
    pub passed: bool,
}

pub fn verify_orbit_projection(fy: &DVector<f64>, action: &GroupAction) -> Result<OrbitProjectionReport> {
    let r = build_group_r(fy, action)?;
    let n = fy.len();
    let rm = r.matrix();
    let labels = action.orbit_labels();
    let orbit_count = action.orbit_count();

    let mut invariant_fixed: f64 = 0.0;
    for o in 0..orbit_count {
        let h = DVector::from_fn(n, |y, _| if labels[y] == o { 1.0 } else { 0.0 });
        invariant_fixed = invariant_fixed.max((rm * &h - &h).amax());
    }

    // Columns of R are R e_y for the standard basis, which spans every h.
    let mut range_invariance: f64 = 0.0;
    for g in 0..action.order() {
        for y in 0..n {
            let gy = action.apply(g, y);
            range_invariance = range_invariance.max((rm.row(gy) - rm.row(y)).amax());
        }
    }

    let sp = fy.map(f64::sqrt);
    let s = DMatrix::from_fn(n, n, |i, j| sp[i] * rm[(i, j)] / sp[j]);
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    let mut eigenvalue_residual: f64 = 0.0;
    let mut fixed_space_dim = 0;
    let mut fixed_space_orbit: f64 = 0.0;
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        eigenvalue_residual = eigenvalue_residual.max(v.abs().min((v - 1.0).abs()));
        if v > 0.5 {
            fixed_space_dim += 1;
            let h = DVector::from_fn(n, |y, _| eig.eigenvectors[(y, k)] / sp[y]);
            for g in 0..action.order() {
                for y in 0..n {
                    fixed_space_orbit = fixed_space_orbit.max((h[action.apply(g, y)] - h[y]).abs());
                }
            }
        }
    }

    let idempotency_residual = r.idempotency_residual();
    let detailed_balance_residual = r.detailed_balance_residual();
    let passed = idempotency_residual < ORBIT_PROJECTION_TOLERANCE
        && detailed_balance_residual < DETAILED_BALANCE_TOLERANCE
        && invariant_fixed < ORBIT_PROJECTION_TOLERANCE
        && range_invariance < ORBIT_PROJECTION_TOLERANCE
        && eigenvalue_residual < ORBIT_PROJECTION_TOLERANCE
        && fixed_space_dim == orbit_count
        && fixed_space_orbit < 1e-8;
    Ok(OrbitProjectionReport {
        idempotency_residual,
        detailed_balance_residual,
        invariant_fixed_residual: invariant_fixed,
        range_invariance_residual: range_invariance,
        eigenvalue_residual,
        fixed_space_dim,
        orbit_count,
        fixed_space_orbit_residual: fixed_space_orbit,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn trivial_group_gives_identity() {
        let fy = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let r = build_group_r(&fy, &GroupAction::trivial(3)).unwrap();
        assert!(max_abs(&(r.matrix() - DMatrix::identity(3, 3))) == 0.0);
    }

    #[test]
    fn swap_on_two_states_projects_to_constants() {
        let fy = DVector::from_vec(vec![0.4, 0.6]);
        let r = build_group_r(&fy, &GroupAction::pair_swap(2)).unwrap();
        for row in r.matrix().row_iter() {
            assert!((row[0] - 0.4).abs() < 1e-15 && (row[1] - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_swap_renormalizes_within_orbits() {
        let fy = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let r = build_group_r(&fy, &GroupAction::pair_swap(4)).unwrap();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0,
                1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0,
                0.0, 0.0, 3.0 / 7.0, 4.0 / 7.0,
                0.0, 0.0, 3.0 / 7.0, 4.0 / 7.0,
            ],
        );
        assert!(max_abs(&(r.matrix() - want)) < 1e-15);
        assert!(r.idempotency_residual() < 1e-15);
    }

    #[test]
    fn rejects_invalid_groups() {
        assert!(GroupAction::new(vec![]).is_err());
        assert!(GroupAction::new(vec![vec![1, 0]]).is_err(), "missing identity");
        assert!(GroupAction::new(vec![vec![0, 1, 2], vec![1, 2, 0]]).is_err(), "not closed");
        assert!(GroupAction::new(vec![vec![0, 1], vec![0, 0]]).is_err(), "not a permutation");
        assert!(GroupAction::new(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).is_ok());
    }

    #[test]
    fn orbits() {
        assert_eq!(GroupAction::pair_swap(5).orbit_labels(), vec![0, 0, 1, 1, 2]);
        assert_eq!(GroupAction::cyclic(4).orbit_count(), 1);
        assert_eq!(GroupAction::trivial(3).orbit_count(), 3);
    }

    #[test]
    fn orbit_projection_holds_for_standard_actions() {
        let fy = DVector::from_vec(vec![0.05, 0.15, 0.1, 0.3, 0.25, 0.15]);
        for action in [GroupAction::trivial(6), GroupAction::pair_swap(6), GroupAction::cyclic(6)] {
            let rep = verify_orbit_projection(&fy, &action).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert_eq!(rep.fixed_space_dim, action.orbit_count());
        }
    }

    #[test]
    fn within_orbit_contrast_is_annihilated() {
        let fy = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let r = build_group_r(&fy, &GroupAction::pair_swap(4)).unwrap();
        // Mean zero on the orbit {0, 1} under f_Y: 0.1·2 + 0.2·(−1) = 0.
        let h = DVector::from_vec(vec![2.0, -1.0, 0.0, 0.0]);
        assert!((r.matrix() * h).amax() < 1e-15);
        let constant = DVector::from_element(4, 3.0);
        assert!((r.matrix() * &constant - &constant).amax() < 1e-15);
    }

    #[test]
    fn shared_conditional_detection() {
        let t = JointTable::from_row_major(2, 4, &[0.1, 0.1, 0.15, 0.15, 0.2, 0.2, 0.05, 0.05]).unwrap();
        assert!(check_shared_conditional(&t, &GroupAction::trivial(4)).unwrap());
        assert!(check_shared_conditional(&t, &GroupAction::pair_swap(4)).unwrap());
        assert!(!check_shared_conditional(&t, &GroupAction::cyclic(4)).unwrap());
    }
}
