//! Direct solve with static condensation of element-interior DOFs.
//!
//! Interior DOFs couple only within their element, so each element matrix is
//! reduced to a Schur complement on its boundary DOFs. The sparse factorization
//! then only sees the skeleton (vertex and edge DOFs), and interior values are
//! recovered element by element afterwards.

use std::sync::Arc;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;

use crate::linsolve::{factor, relative_residual, sequential_kernels, TripletBuilder};

use super::assemble::{
    dirichlet_values, element_system, for_each_element, Coefficients, LinearSystem, SourceSpec,
};
use super::field::{DiscreteField, FieldMeta};
use super::space::FeSpace;
use super::FemError;

/// Relative residual accepted from the sparse direct solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

struct Reduced {
    schur: Mat<Complex64>,
    load: Vec<Complex64>,
    /// `A_ii^{-1} A_ib`
    coupling: Mat<Complex64>,
    /// `A_ii^{-1} b_i`
    particular: Vec<Complex64>,
}

fn condense(a: &Mat<Complex64>, b: &[Complex64], skel: &[usize], int: &[usize]) -> Reduced {
    let (ns, ni) = (skel.len(), int.len());
    let a_bb = Mat::from_fn(ns, ns, |i, j| a[(skel[i], skel[j])]);
    let b_b: Vec<Complex64> = skel.iter().map(|&k| b[k]).collect();
    if ni == 0 {
        return Reduced {
            schur: a_bb,
            load: b_b,
            coupling: Mat::zeros(0, ns),
            particular: Vec::new(),
        };
    }
    let a_ii = Mat::from_fn(ni, ni, |i, j| a[(int[i], int[j])]);
    let a_ib = Mat::from_fn(ni, ns, |i, j| a[(int[i], skel[j])]);
    let a_bi = Mat::from_fn(ns, ni, |i, j| a[(skel[i], int[j])]);
    let rhs_i = Mat::from_fn(ni, 1, |i, _| b[int[i]]);

    let lu = a_ii.partial_piv_lu();
    let coupling = lu.solve(&a_ib);
    let part = lu.solve(&rhs_i);

    let mut schur = a_bb;
    matmul(
        schur.as_mut(),
        Accum::Add,
        a_bi.as_ref(),
        coupling.as_ref(),
        Complex64::new(-1.0, 0.0),
        Par::Seq,
    );
    for j in 0..ns {
        for i in 0..j {
            let avg = (schur[(i, j)] + schur[(j, i)]) * 0.5;
            schur[(i, j)] = avg;
            schur[(j, i)] = avg;
        }
    }
    let mut corr = Mat::<Complex64>::zeros(ns, 1);
    matmul(
        corr.as_mut(),
        Accum::Replace,
        a_bi.as_ref(),
        part.as_ref(),
        Complex64::new(1.0, 0.0),
        Par::Seq,
    );
    let load = (0..ns).map(|i| b_b[i] - corr[(i, 0)]).collect();
    Reduced {
        schur,
        load,
        coupling,
        particular: (0..ni).map(|i| part[(i, 0)]).collect(),
    }
}

/// Condensed skeleton system with the data needed to recover interior DOFs.
pub struct CondensedSystem {
    /// Skeleton system over the DOFs listed in `skeleton_dofs`.
    pub system: LinearSystem,
    pub skeleton_dofs: Vec<usize>,
    reduced: Vec<Reduced>,
}

/// Assembles the condensed system.
pub fn assemble_condensed(
    space: &FeSpace,
    coeffs: &Coefficients,
    source: &SourceSpec,
) -> Result<CondensedSystem, FemError> {
    sequential_kernels();
    let skel = space.skeleton_local();
    let int = space.interior_local();
    let n = space.n_dofs();
    let mut skel_index = vec![usize::MAX; n];
    let mut skeleton_dofs = Vec::new();
    for e in 0..space.mesh().num_elements() {
        for &k in &skel {
            let d = space.element_dofs(e)[k];
            if skel_index[d] == usize::MAX {
                skel_index[d] = skeleton_dofs.len();
                skeleton_dofs.push(d);
            }
        }
    }
    let ns = skeleton_dofs.len();
    let fixed = dirichlet_values(space, source);
    let mut trip =
        TripletBuilder::with_capacity(ns, space.mesh().num_elements() * skel.len() * skel.len());
    let mut rhs = vec![Complex64::new(0.0, 0.0); ns];
    let mut reduced = Vec::with_capacity(space.mesh().num_elements());

    for_each_element(
        space.mesh().num_elements(),
        |e| {
            let (a, b) = element_system(space, e, coeffs, source)?;
            Ok(condense(&a, &b, &skel, &int))
        },
        |e, red| {
            let dofs = space.element_dofs(e);
            for (la, &ka) in skel.iter().enumerate() {
                let i = dofs[ka];
                if fixed[i].is_some() {
                    continue;
                }
                let si = skel_index[i];
                rhs[si] += red.load[la];
                for (lb, &kb) in skel.iter().enumerate() {
                    let j = dofs[kb];
                    match fixed[j] {
                        Some(g) => rhs[si] -= red.schur[(la, lb)] * g,
                        None => trip.push(si, skel_index[j], red.schur[(la, lb)]),
                    }
                }
            }
            reduced.push(red);
            Ok(())
        },
    )?;
    for (s, &d) in skeleton_dofs.iter().enumerate() {
        if let Some(g) = fixed[d] {
            trip.push(s, s, Complex64::new(1.0, 0.0));
            rhs[s] = g;
        }
    }
    let matrix = trip.build()?.into_symmetric()?;
    Ok(CondensedSystem {
        system: LinearSystem { matrix, rhs },
        skeleton_dofs,
        reduced,
    })
}

/// Solves the problem on `space` by static condensation and a sparse LU of
/// the skeleton system.
pub fn solve_condensed(
    space: &Arc<FeSpace>,
    coeffs: &Coefficients,
    source: &SourceSpec,
    meta: FieldMeta,
) -> Result<DiscreteField, FemError> {
    let cs = assemble_condensed(space, coeffs, source)?;
    let x = factor(&cs.system.matrix)?.solve(&cs.system.rhs)?;
    let residual = relative_residual(&cs.system.matrix, &x, &cs.system.rhs)?;
    if residual > RESIDUAL_TOL {
        return Err(FemError::Residual { residual });
    }
    let mut coeffs_out = vec![Complex64::new(0.0, 0.0); space.n_dofs()];
    for (s, &d) in cs.skeleton_dofs.iter().enumerate() {
        coeffs_out[d] = x[s];
    }
    let skel = space.skeleton_local();
    let int = space.interior_local();
    for (e, red) in cs.reduced.iter().enumerate() {
        let dofs = space.element_dofs(e);
        let ub: Vec<Complex64> = skel.iter().map(|&k| coeffs_out[dofs[k]]).collect();
        for (li, &k) in int.iter().enumerate() {
            let mut v = red.particular[li];
            for (lb, u) in ub.iter().enumerate() {
                v -= red.coupling[(li, lb)] * u;
            }
            coeffs_out[dofs[k]] = v;
        }
    }
    DiscreteField::new(space.clone(), coeffs_out, meta)
}

/// Solves an assembled full system.
pub fn solve_system(system: &LinearSystem) -> Result<Vec<Complex64>, FemError> {
    let x = factor(&system.matrix)?.solve(&system.rhs)?;
    let residual = relative_residual(&system.matrix, &x, &system.rhs)?;
    if residual > RESIDUAL_TOL {
        return Err(FemError::Residual { residual });
    }
    Ok(x)
}
