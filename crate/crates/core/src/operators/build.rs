//! Constructors for the represented generators: T_i, word products T_w,
//! V, U, the range/support projections and the diagonal approximants M_k.
//!
//! Each builder evaluates its defining formula column-by-column with exact
//! arithmetic, so a column is marked non-core only when the truncation
//! genuinely hides its target point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::Scalar;
use crate::orbit::OrbitBasis;
use crate::symbolic::{
    admissible_cylinders, cylinder, word_to_string, PartitionCtx, DEFAULT_WORD_CAP,
};

use super::sparse::{SparseOperator, UnitComplex};

pub fn check_compat(ctx: &PartitionCtx, basis: &OrbitBasis) -> Result<()> {
    if ctx.spec.beta.eq_exact(&basis.spec.beta) && ctx.spec.alpha.eq_exact(&basis.spec.alpha) {
        Ok(())
    } else {
        Err(Error::BasisMismatch)
    }
}

fn check_word(ctx: &PartitionCtx, w: &[usize]) -> Result<()> {
    let m = ctx.alphabet_size();
    for &s in w {
        if s == 0 || s > m {
            return Err(Error::Range(format!("symbol {s} outside alphabet 1..={m}")));
        }
    }
    Ok(())
}

/// T_i |y> = chi_{f(I_i)}(y) |f_i^{-1}(y)>.
pub fn build_t(ctx: &PartitionCtx, basis: &OrbitBasis, i: usize) -> Result<SparseOperator> {
    word_operator(ctx, basis, &[i])
}

pub fn op_adjoint(a: &SparseOperator) -> Result<SparseOperator> {
    a.adjoint()
}

/// T_w = T_{w_1} ... T_{w_k}, built directly from the inverse-branch chain:
/// |y> maps to |f_{w_1}^{-1}(...f_{w_k}^{-1}(y)...)> when every pullback
/// stays inside the matching branch image, to 0 otherwise. A column is
/// censored only when the chain endpoint was truncated out of the basis.
pub fn word_operator(ctx: &PartitionCtx, basis: &OrbitBasis, w: &[usize]) -> Result<SparseOperator> {
    check_compat(ctx, basis)?;
    check_word(ctx, w)?;
    let dim = basis.len();
    if w.is_empty() {
        return Ok(SparseOperator::identity(dim));
    }
    let mut op = SparseOperator::zero(dim);
    for (j, p) in basis.points.iter().enumerate() {
        let mut z = p.clone();
        let mut inside = true;
        for &s in w.iter().rev() {
            if ctx.images[s - 1].contains(&z)? {
                z = ctx.pull_back(s, &z)?;
            } else {
                inside = false;
                break;
            }
        }
        if !inside {
            continue; // exact zero column
        }
        match basis.lookup(&z) {
            Some(r) => op.cols[j].push((r, UnitComplex::one())),
            None => op.col_core[j] = false,
        }
    }
    // row q is nonzero only for q in the cylinder I_w, with its single entry
    // in column f^{|w|}(q); the row is fully known when that column exists
    let cyl = cylinder(ctx, w)?;
    for (q, p) in basis.points.iter().enumerate() {
        let in_cyl = match &cyl {
            Some(c) => c.interval.contains(p)?,
            None => false,
        };
        if in_cyl {
            let mut img = p.clone();
            for _ in 0..w.len() {
                img = ctx.spec.apply(&img)?;
            }
            op.row_core[q] = basis.lookup(&img).is_some();
        }
    }
    Ok(op)
}

/// V = T_1* + ... + T_n*, acting as |y> -> |f(y)> away from endpoints.
pub fn build_v(ctx: &PartitionCtx, basis: &OrbitBasis) -> Result<SparseOperator> {
    check_compat(ctx, basis)?;
    let mut v = SparseOperator::zero(basis.len());
    for i in 1..=ctx.alphabet_size() {
        v = v.add(&build_t(ctx, basis, i)?.adjoint()?)?;
    }
    Ok(v)
}

/// U |y> = e^{2 pi i y} |y>, diagonal and exact on every column.
pub fn build_u(basis: &OrbitBasis) -> Result<SparseOperator> {
    let mut u = SparseOperator::zero(basis.len());
    for (j, p) in basis.points.iter().enumerate() {
        u.cols[j].push((j, UnitComplex::phase(p)?));
    }
    Ok(u)
}

/// T_w T_w* = the diagonal projection onto basis points in the cylinder I_w.
pub fn proj_cylinder(ctx: &PartitionCtx, basis: &OrbitBasis, w: &[usize]) -> Result<SparseOperator> {
    check_compat(ctx, basis)?;
    check_word(ctx, w)?;
    let mut op = SparseOperator::zero(basis.len());
    if let Some(c) = cylinder(ctx, w)? {
        for (j, p) in basis.points.iter().enumerate() {
            if c.interval.contains(p)? {
                op.cols[j].push((j, UnitComplex::one()));
            }
        }
    }
    Ok(op)
}

/// T_w* T_w = the diagonal projection onto basis points in f^{|w|}(I_w).
pub fn proj_image(ctx: &PartitionCtx, basis: &OrbitBasis, w: &[usize]) -> Result<SparseOperator> {
    check_compat(ctx, basis)?;
    check_word(ctx, w)?;
    let mut op = SparseOperator::zero(basis.len());
    if let Some(c) = cylinder(ctx, w)? {
        for (j, p) in basis.points.iter().enumerate() {
            if c.image.contains(p)? {
                op.cols[j].push((j, UnitComplex::one()));
            }
        }
    }
    Ok(op)
}

/// Bookkeeping from an M_k construction.
#[derive(Debug, Clone, Serialize)]
pub struct MkInfo {
    pub k: usize,
    pub words_used: Vec<String>,
    /// admissible words whose cylinder meets no basis point
    pub skipped_words: Vec<String>,
    /// basis indices in no length-k cylinder (boundary itineraries)
    pub uncovered_points: Vec<usize>,
    /// chosen representative angle per used word, by basis index
    pub chosen: Vec<(String, usize)>,
}

/// M_k = sum over admissible words w of length k of
/// e^{2 pi i m(w)} T_w T_w*, with m(w) a basis point inside I_w picked by
/// `chooser` (default: smallest basis index). Diagonal and exact.
pub fn build_mk(
    ctx: &PartitionCtx,
    basis: &OrbitBasis,
    k: usize,
    chooser: Option<&dyn Fn(&[usize], &OrbitBasis) -> usize>,
) -> Result<(SparseOperator, MkInfo)> {
    check_compat(ctx, basis)?;
    if k == 0 {
        return Err(Error::Range("k must be >= 1".into()));
    }
    let dim = basis.len();
    let cyls = admissible_cylinders(ctx, k, DEFAULT_WORD_CAP)?;
    let mut op = SparseOperator::zero(dim);
    let mut covered = vec![false; dim];
    let mut info = MkInfo {
        k,
        words_used: Vec::new(),
        skipped_words: Vec::new(),
        uncovered_points: Vec::new(),
        chosen: Vec::new(),
    };
    for c in &cyls {
        let mut members = Vec::new();
        for (j, p) in basis.points.iter().enumerate() {
            if c.interval.contains(p)? {
                members.push(j);
            }
        }
        if members.is_empty() {
            info.skipped_words.push(word_to_string(&c.word));
            continue;
        }
        let m_idx = match chooser {
            Some(f) => {
                let idx = f(&members, basis);
                if !members.contains(&idx) {
                    return Err(Error::Range(
                        "chooser returned an index outside the cylinder".into(),
                    ));
                }
                idx
            }
            None => members[0],
        };
        let angle = UnitComplex::phase(&basis.points[m_idx])?;
        for &j in &members {
            op.cols[j].push((j, angle.clone()));
            covered[j] = true;
        }
        info.words_used.push(word_to_string(&c.word));
        info.chosen.push((word_to_string(&c.word), m_idx));
    }
    if info.words_used.is_empty() {
        return Err(Error::EmptySelection);
    }
    info.uncovered_points = (0..dim).filter(|j| !covered[*j]).collect();
    Ok((op, info))
}

/// The diagonal angle of M_k at each basis index, None where uncovered.
pub fn mk_diagonal(op: &SparseOperator) -> Vec<Option<Scalar>> {
    op.cols
        .iter()
        .map(|col| match col.as_slice() {
            [(_, UnitComplex::Phase(a))] => Some(a.clone()),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{branch_structure, MapSpec};
    use crate::numeric::parse_scalar;
    use crate::orbit::generalized_orbit;

    fn setup(beta: &str, alpha: &str, x0: &str, f: usize, p: usize) -> (PartitionCtx, OrbitBasis) {
        let spec =
            MapSpec::new(parse_scalar(beta).unwrap(), parse_scalar(alpha).unwrap()).unwrap();
        let ctx = PartitionCtx::from_branches(&branch_structure(&spec).unwrap());
        let basis = generalized_orbit(&spec, &parse_scalar(x0).unwrap(), f, p, 10_000).unwrap();
        (ctx, basis)
    }

    fn single_target(op: &SparseOperator, col: usize) -> Option<usize> {
        match op.cols[col].as_slice() {
            [(r, UnitComplex::Phase(a))] if a.is_zero_exact() => Some(*r),
            [] => None,
            other => panic!("unexpected column {other:?}"),
        }
    }

    // basis {1/3, 2/3, 1/6, 5/6} indexed in insertion order
    fn four_point() -> (PartitionCtx, OrbitBasis) {
        setup("2", "0", "1/3", 1, 1)
    }

    #[test]
    fn t1_moves_points_into_the_left_branch() {
        let (ctx, basis) = four_point();
        let t1 = build_t(&ctx, &basis, 1).unwrap();
        assert_eq!(single_target(&t1, 0), Some(2)); // T_1|1/3> = |1/6>
        assert_eq!(single_target(&t1, 1), Some(0)); // T_1|2/3> = |1/3>
        assert!(!t1.col_core[2]); // f_1^{-1}(1/6) = 1/12 truncated away
    }

    #[test]
    fn t2_moves_points_into_the_right_branch() {
        let (ctx, basis) = four_point();
        let t2 = build_t(&ctx, &basis, 2).unwrap();
        assert_eq!(single_target(&t2, 0), Some(1)); // T_2|1/3> = |2/3>
        assert_eq!(single_target(&t2, 1), Some(3)); // T_2|2/3> = |5/6>
    }

    #[test]
    fn top_branch_annihilates_points_outside_its_image() {
        let (ctx, basis) = setup("3/2", "0", "1/3", 2, 2);
        let t2 = build_t(&ctx, &basis, 2).unwrap();
        for (j, p) in basis.points.iter().enumerate() {
            if p.cmp_exact(&parse_scalar("1/2").unwrap()).unwrap() != std::cmp::Ordering::Less {
                assert!(t2.cols[j].is_empty());
                assert!(t2.col_core[j]);
            }
        }
    }

    #[test]
    fn adjoint_transposes_and_conjugates() {
        let (ctx, basis) = four_point();
        let t1 = build_t(&ctx, &basis, 1).unwrap();
        let t1s = t1.adjoint().unwrap();
        assert_eq!(single_target(&t1s, 2), Some(0)); // T_1*|1/6> = |1/3>
        let u = build_u(&basis).unwrap();
        let us = u.adjoint().unwrap();
        match (&u.cols[0][0].1, &us.cols[0][0].1) {
            (UnitComplex::Phase(a), UnitComplex::Phase(b)) => {
                assert!(a.add(b).mod1().unwrap().is_zero_exact());
            }
            _ => panic!("diagonal phases expected"),
        }
        let z = SparseOperator::zero(4).adjoint().unwrap();
        assert!(z.cols.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn adjoint_is_an_involution() {
        let (ctx, basis) = four_point();
        let t1 = build_t(&ctx, &basis, 1).unwrap();
        let back = t1.adjoint().unwrap().adjoint().unwrap();
        let censor = vec![false; basis.len()];
        assert!(t1.eq_on_core(&back, &censor).unwrap().violations.is_empty());
        assert_eq!(t1.col_core, back.col_core);
        assert_eq!(t1.row_core, back.row_core);
    }

    #[test]
    fn word_operator_matches_nested_inverses() {
        let (ctx, basis) = four_point();
        let t12 = word_operator(&ctx, &basis, &[1, 2]).unwrap();
        assert_eq!(single_target(&t12, 0), Some(0)); // |1/3> -> |1/3>
        let t1 = word_operator(&ctx, &basis, &[1]).unwrap();
        let direct = build_t(&ctx, &basis, 1).unwrap();
        let censor = vec![false; basis.len()];
        assert!(t1.eq_on_core(&direct, &censor).unwrap().violations.is_empty());
    }

    #[test]
    fn word_operator_composes_on_compatible_masks() {
        let (ctx, basis) = setup("2", "(-1+1*sqrt(2))/1", "0", 4, 3);
        let censor = vec![false; basis.len()];
        for (mu, nu) in [(vec![1], vec![2]), (vec![2], vec![3]), (vec![1, 2], vec![3])] {
            let mut munu = mu.clone();
            munu.extend_from_slice(&nu);
            let lhs = word_operator(&ctx, &basis, &munu).unwrap();
            let rhs = word_operator(&ctx, &basis, &mu)
                .unwrap()
                .compose(&word_operator(&ctx, &basis, &nu).unwrap())
                .unwrap();
            assert!(lhs.eq_on_core(&rhs, &censor).unwrap().violations.is_empty());
        }
    }

    #[test]
    fn empty_cylinder_word_gives_the_zero_operator() {
        let (ctx, basis) = setup("3/2", "0", "1/3", 2, 2);
        let t22 = word_operator(&ctx, &basis, &[2, 2]).unwrap();
        assert!(t22.cols.iter().all(|c| c.is_empty()));
        assert!(t22.col_core.iter().all(|&c| c));
    }

    #[test]
    fn v_acts_as_the_map_itself() {
        let (ctx, basis) = four_point();
        let v = build_v(&ctx, &basis).unwrap();
        assert_eq!(single_target(&v, 2), Some(0)); // V|1/6> = |1/3>
        assert_eq!(single_target(&v, 0), Some(1)); // V|1/3> = |2/3>
        assert_eq!(single_target(&v, 1), Some(0)); // V|2/3> = |1/3>
    }

    #[test]
    fn v_is_a_permutation_for_rotations() {
        let (ctx, basis) = setup("1", "1/4", "1/8", 4, 2);
        let v = build_v(&ctx, &basis).unwrap();
        let mut seen = vec![false; basis.len()];
        for j in 0..basis.len() {
            let t = single_target(&v, j).expect("rotation columns are unitary");
            assert!(!seen[t]);
            seen[t] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn u_is_diagonal_with_the_point_angles() {
        let (_, basis) = four_point();
        let u = build_u(&basis).unwrap();
        assert!(u.is_diagonal());
        match &u.cols[0][0].1 {
            UnitComplex::Phase(a) => assert!(a.eq_exact(&parse_scalar("1/3").unwrap())),
            UnitComplex::Zero => panic!("U has no zero diagonal"),
        }
        let uus = u.compose(&u.adjoint().unwrap()).unwrap();
        let censor = vec![false; basis.len()];
        let id = SparseOperator::identity(basis.len());
        assert!(uus.eq_on_core(&id, &censor).unwrap().violations.is_empty());
    }

    #[test]
    fn projections_match_their_composed_forms_on_core() {
        let (ctx, basis) = setup("2", "(-1+1*sqrt(2))/1", "0", 3, 3);
        let censor = vec![false; basis.len()];
        for w in [vec![1], vec![2], vec![3], vec![2, 1], vec![3, 2]] {
            let t = word_operator(&ctx, &basis, &w).unwrap();
            let range = proj_cylinder(&ctx, &basis, &w).unwrap();
            let composed = t.compose(&t.adjoint().unwrap()).unwrap();
            assert!(range.eq_on_core(&composed, &censor).unwrap().violations.is_empty());
            let support = proj_image(&ctx, &basis, &w).unwrap();
            let composed2 = t.adjoint().unwrap().compose(&t).unwrap();
            assert!(support.eq_on_core(&composed2, &censor).unwrap().violations.is_empty());
        }
    }

    #[test]
    fn mk_with_explicit_chooser_matches_the_expected_diagonal() {
        let (ctx, basis) = four_point();
        // pick 1/6 for I_1 and 2/3 for I_2
        let chooser = |members: &[usize], b: &OrbitBasis| {
            *members
                .iter()
                .find(|&&j| {
                    b.points[j].eq_exact(&parse_scalar("1/6").unwrap())
                        || b.points[j].eq_exact(&parse_scalar("2/3").unwrap())
                })
                .unwrap()
        };
        let (m1, info) = build_mk(&ctx, &basis, 1, Some(&chooser)).unwrap();
        assert!(m1.is_diagonal());
        assert!(info.skipped_words.is_empty());
        let diag = mk_diagonal(&m1);
        let sixth = parse_scalar("1/6").unwrap();
        let two_thirds = parse_scalar("2/3").unwrap();
        assert!(diag[0].as_ref().unwrap().eq_exact(&sixth)); // 1/3 in I_1
        assert!(diag[2].as_ref().unwrap().eq_exact(&sixth)); // 1/6 in I_1
        assert!(diag[1].as_ref().unwrap().eq_exact(&two_thirds));
        assert!(diag[3].as_ref().unwrap().eq_exact(&two_thirds));
    }

    #[test]
    fn mk_default_chooser_is_deterministic_and_diagonal() {
        let (ctx, basis) = setup("2", "(-1+1*sqrt(2))/1", "0", 4, 3);
        let (m3, info) = build_mk(&ctx, &basis, 3, None).unwrap();
        assert!(m3.is_diagonal());
        let (m3b, _) = build_mk(&ctx, &basis, 3, None).unwrap();
        let censor = vec![false; basis.len()];
        assert!(m3.eq_on_core(&m3b, &censor).unwrap().violations.is_empty());
        // every uncovered point is genuinely outside all cylinders
        for &j in &info.uncovered_points {
            assert!(mk_diagonal(&m3)[j].is_none());
        }
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let (ctx, _) = four_point();
        let (_, other) = setup("2", "1/4", "1/3", 1, 1);
        assert!(matches!(
            build_t(&ctx, &other, 1),
            Err(crate::error::Error::BasisMismatch)
        ));
    }
}
