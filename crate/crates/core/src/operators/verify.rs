//! Relation verification, strong-convergence residuals and the finite
//! commutant/equivalence certificates.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dynamics::{address, MapSpec};
use crate::error::{Error, Result};
use crate::numeric::highprec::{
    chord_from_angle_delta, fx_pi, fx_to_rational, ratio_to_f64, sqrt_rational, DEFAULT_BITS,
};
use crate::numeric::{render_decimal, ExactKey, Scalar};
use crate::orbit::{generalized_orbit, orbits_equivalent, EquivVerdict, OrbitBasis, Provenance};
use crate::symbolic::{admissible_words, word_to_string, PartitionCtx, Word, DEFAULT_WORD_CAP};

use super::build::{build_mk, build_u, mk_diagonal, proj_cylinder, proj_image, word_operator};
use super::sparse::SparseOperator;

/// Which relation family to verify.
#[derive(Debug, Clone, PartialEq)]
pub enum RelationKind {
    PartialIsometry,
    Subshift,
    CuntzKrieger(Vec<Vec<u8>>),
    SumToIdentity,
}

impl RelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::PartialIsometry => "partial_isometry",
            RelationKind::Subshift => "subshift",
            RelationKind::CuntzKrieger(_) => "cuntz_krieger",
            RelationKind::SumToIdentity => "sum_to_identity",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub name: String,
    pub columns_checked: usize,
    pub columns_censored: usize,
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub kind: String,
    pub dimension: usize,
    pub relations: Vec<RelationCheck>,
    pub total_checked: usize,
    pub total_censored: usize,
    pub passed: bool,
}

impl VerificationReport {
    pub fn violation_count(&self) -> usize {
        self.relations.iter().map(|r| r.violations.len()).sum()
    }
}

/// Columns at basis points sitting on partition endpoints: the open-interval
/// convention makes the relations fail there by fiat, so they are censored
/// rather than counted either way.
fn boundary_censor(ctx: &PartitionCtx, basis: &OrbitBasis) -> Result<Vec<bool>> {
    let mut censor = Vec::with_capacity(basis.len());
    for p in &basis.points {
        censor.push(address(&ctx.intervals, p)?.is_none());
    }
    Ok(censor)
}

struct OpCache<'a> {
    ctx: &'a PartitionCtx,
    basis: &'a OrbitBasis,
    words: BTreeMap<Word, SparseOperator>,
    images: BTreeMap<Word, SparseOperator>,
}

impl<'a> OpCache<'a> {
    fn word(&mut self, w: &[usize]) -> Result<SparseOperator> {
        if let Some(op) = self.words.get(w) {
            return Ok(op.clone());
        }
        let op = word_operator(self.ctx, self.basis, w)?;
        self.words.insert(w.to_vec(), op.clone());
        Ok(op)
    }

    fn image(&mut self, w: &[usize]) -> Result<SparseOperator> {
        if let Some(op) = self.images.get(w) {
            return Ok(op.clone());
        }
        let op = proj_image(self.ctx, self.basis, w)?;
        self.images.insert(w.to_vec(), op.clone());
        Ok(op)
    }
}

/// Verify the selected relation family column-by-column on core columns.
/// Violations are exact disagreements, never tolerance breaches.
pub fn verify_relations(
    ctx: &PartitionCtx,
    basis: &OrbitBasis,
    kind: &RelationKind,
    word_depth: usize,
) -> Result<VerificationReport> {
    let censor = boundary_censor(ctx, basis)?;
    let dim = basis.len();
    let n = ctx.alphabet_size();
    let mut relations = Vec::new();
    let mut cache = OpCache {
        ctx,
        basis,
        words: BTreeMap::new(),
        images: BTreeMap::new(),
    };

    let push = |relations: &mut Vec<RelationCheck>,
                    name: String,
                    lhs: &SparseOperator,
                    rhs: &SparseOperator|
     -> Result<()> {
        let cmp = lhs.eq_on_core(rhs, &censor)?;
        relations.push(RelationCheck {
            name,
            columns_checked: cmp.columns_checked,
            columns_censored: cmp.columns_censored,
            violations: cmp.violations,
        });
        Ok(())
    };

    let sum_to_identity = |cache: &mut OpCache,
                           relations: &mut Vec<RelationCheck>,
                           push: &mut dyn FnMut(
        &mut Vec<RelationCheck>,
        String,
        &SparseOperator,
        &SparseOperator,
    ) -> Result<()>|
     -> Result<()> {
        let mut sum = SparseOperator::zero(dim);
        for i in 1..=n {
            sum = sum.add(&proj_cylinder(cache.ctx, cache.basis, &[i])?)?;
        }
        push(
            relations,
            "sum T_i T_i* = 1".to_string(),
            &sum,
            &SparseOperator::identity(dim),
        )
    };

    let partial_isometry = |cache: &mut OpCache,
                            relations: &mut Vec<RelationCheck>,
                            push: &mut dyn FnMut(
        &mut Vec<RelationCheck>,
        String,
        &SparseOperator,
        &SparseOperator,
    ) -> Result<()>|
     -> Result<()> {
        for i in 1..=n {
            let t = cache.word(&[i])?;
            let lhs = proj_cylinder(cache.ctx, cache.basis, &[i])?.compose(&t)?;
            push(relations, format!("T_{i} T_{i}* T_{i} = T_{i}"), &lhs, &t)?;
        }
        Ok(())
    };

    let mut push_dyn = |rels: &mut Vec<RelationCheck>,
                        name: String,
                        lhs: &SparseOperator,
                        rhs: &SparseOperator| push(rels, name, lhs, rhs);

    match kind {
        RelationKind::SumToIdentity => {
            sum_to_identity(&mut cache, &mut relations, &mut push_dyn)?;
        }
        RelationKind::PartialIsometry => {
            partial_isometry(&mut cache, &mut relations, &mut push_dyn)?;
        }
        RelationKind::Subshift => {
            sum_to_identity(&mut cache, &mut relations, &mut push_dyn)?;
            partial_isometry(&mut cache, &mut relations, &mut push_dyn)?;
            if word_depth == 0 {
                return Err(Error::Range("word depth must be >= 1".into()));
            }
            let mut words: Vec<Word> = Vec::new();
            for k in 1..=word_depth {
                words.extend(admissible_words(ctx, k, DEFAULT_WORD_CAP)?);
            }
            for mu in &words {
                for nu in &words {
                    let mut munu = mu.clone();
                    munu.extend_from_slice(nu);
                    let t_nu = cache.word(nu)?;
                    let lhs = cache.image(mu)?.compose(&t_nu)?;
                    let rhs = t_nu.compose(&cache.image(&munu)?)?;
                    push_dyn(
                        &mut relations,
                        format!(
                            "T_{m}* T_{m} T_{n} = T_{n} T_{mn}* T_{mn}",
                            m = word_to_string(mu),
                            n = word_to_string(nu),
                            mn = word_to_string(&munu)
                        ),
                        &lhs,
                        &rhs,
                    )?;
                    let lhs_c = cache.image(mu)?.compose(&cache.image(nu)?)?;
                    let rhs_c = cache.image(nu)?.compose(&cache.image(mu)?)?;
                    push_dyn(
                        &mut relations,
                        format!(
                            "[T_{m}* T_{m}, T_{n}* T_{n}] = 0",
                            m = word_to_string(mu),
                            n = word_to_string(nu)
                        ),
                        &lhs_c,
                        &rhs_c,
                    )?;
                }
            }
        }
        RelationKind::CuntzKrieger(matrix) => {
            if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                return Err(Error::Range(format!(
                    "transition matrix must be {n}x{n} for this partition"
                )));
            }
            sum_to_identity(&mut cache, &mut relations, &mut push_dyn)?;
            for i in 1..=n {
                let lhs = cache.image(&[i])?;
                let mut rhs = SparseOperator::zero(dim);
                for j in 1..=n {
                    if matrix[i - 1][j - 1] != 0 {
                        rhs = rhs.add(&proj_cylinder(ctx, basis, &[j])?)?;
                    }
                }
                push_dyn(
                    &mut relations,
                    format!("S_{i}* S_{i} = sum_j a_{i}j S_j S_j*"),
                    &lhs,
                    &rhs,
                )?;
            }
        }
    }

    let total_checked: usize = relations.iter().map(|r| r.columns_checked).sum();
    let total_censored: usize = relations.iter().map(|r| r.columns_censored).sum();
    if total_checked == 0 {
        return Err(Error::NoCoreColumns);
    }
    let passed = relations.iter().all(|r| r.violations.is_empty());
    Ok(VerificationReport {
        kind: kind.name().to_string(),
        dimension: dim,
        relations,
        total_checked,
        total_censored,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MkResidual {
    pub vector: usize,
    /// support stayed inside the length-k cylinders
    pub covered: bool,
    pub residual: String,
    pub residual_f64: f64,
    pub bound: String,
    pub bound_f64: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MkRow {
    pub k: usize,
    pub words_used: usize,
    pub words_skipped: usize,
    pub uncovered_points: usize,
    pub residuals: Vec<MkResidual>,
    pub max_residual_f64: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MkConvergenceReport {
    pub k_max: usize,
    pub rows: Vec<MkRow>,
}

/// Residual table for the strong convergence M_k -> U: for each k and each
/// finitely supported test vector v, || (M_k - U) v || at fixed-point
/// precision, against the analytic bound 2 pi beta^{1-k} ||v||.
pub fn mk_convergence(
    ctx: &PartitionCtx,
    basis: &OrbitBasis,
    k_max: usize,
    vectors: &[Vec<(usize, BigRational)>],
) -> Result<MkConvergenceReport> {
    if k_max == 0 {
        return Err(Error::Range("k_max must be >= 1".into()));
    }
    for v in vectors {
        for (j, _) in v {
            if *j >= basis.len() {
                return Err(Error::Range(format!("vector index {j} outside basis")));
            }
        }
    }
    let bits = DEFAULT_BITS;
    let two_pi = fx_to_rational(&fx_pi(bits), bits) * BigRational::from_integer(2.into());
    let slack = BigRational::one()
        + BigRational::new(1.into(), num_bigint::BigInt::from(10u32).pow(10));
    let mut rows = Vec::new();
    let mut beta_pow = Scalar::one(); // beta^{k-1}
    for k in 1..=k_max {
        if k > 1 {
            beta_pow = beta_pow.mul(&ctx.spec.beta);
        }
        let (mk, info) = build_mk(ctx, basis, k, None)?;
        let diag = mk_diagonal(&mk);
        let beta_pow_r = beta_pow.to_rational_enclosure(bits).0;
        let mut residuals = Vec::new();
        let mut max_res = 0.0f64;
        for (vi, v) in vectors.iter().enumerate() {
            let mut sum_sq = BigRational::zero();
            let mut norm_sq = BigRational::zero();
            let mut covered = true;
            for (j, c) in v {
                let c2 = c * c;
                norm_sq += &c2;
                match &diag[*j] {
                    Some(angle) => {
                        let delta = angle.sub(&basis.points[*j]);
                        let t = delta.to_rational_enclosure(bits).0;
                        let chord = chord_from_angle_delta(&t, bits);
                        sum_sq += c2 * &chord * &chord;
                    }
                    None => {
                        // M_k annihilates uncovered points, so the gap to U
                        // is a full unit there
                        covered = false;
                        sum_sq += c2;
                    }
                }
            }
            let residual = sqrt_rational(&sum_sq, bits);
            let norm = sqrt_rational(&norm_sq, bits);
            let bound = &two_pi * &norm / &beta_pow_r;
            let within = residual <= &bound * &slack;
            let res_f64 = ratio_to_f64(&residual);
            if res_f64 > max_res {
                max_res = res_f64;
            }
            residuals.push(MkResidual {
                vector: vi,
                covered,
                residual: render_decimal(&residual, 40),
                residual_f64: res_f64,
                bound: render_decimal(&bound, 40),
                bound_f64: ratio_to_f64(&bound),
                within_bound: within,
            });
        }
        rows.push(MkRow {
            k,
            words_used: info.words_used.len(),
            words_skipped: info.skipped_words.len(),
            uncovered_points: info.uncovered_points.len(),
            residuals,
            max_residual_f64: max_res,
        });
    }
    Ok(MkConvergenceReport { k_max, rows })
}

/// Basis indices whose point lies in some length-k cylinder (and therefore
/// in cylinders of every shorter length), smallest first.
pub fn covered_points(ctx: &PartitionCtx, basis: &OrbitBasis, k: usize) -> Result<Vec<usize>> {
    let (mk, _) = build_mk(ctx, basis, k, None)?;
    let diag = mk_diagonal(&mk);
    Ok((0..basis.len()).filter(|j| diag[*j].is_some()).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub dimension: usize,
    pub angles_distinct: bool,
    pub connected: bool,
    pub components: usize,
    pub certified: bool,
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Finite commutant certificate: with all U-angles pairwise distinct, any
/// operator commuting with U is diagonal; with the orbit graph connected,
/// commuting with V forces the diagonal constant. Certified = both hold.
pub fn commutant_certificate(basis: &OrbitBasis) -> CertificateReport {
    let dim = basis.len();
    let mut keys = BTreeSet::new();
    for p in &basis.points {
        keys.insert(ExactKey(p.clone()));
    }
    let angles_distinct = keys.len() == dim;

    let mut dsu = Dsu::new(dim);
    for (i, img) in basis.image_index.iter().enumerate() {
        if let Some(j) = img {
            dsu.union(i, *j);
        }
    }
    for (i, prov) in basis.provenance.iter().enumerate() {
        if let Provenance::Preimage { parent, .. } = prov {
            dsu.union(i, *parent);
        }
    }
    let mut roots = BTreeSet::new();
    for i in 0..dim {
        roots.insert(dsu.find(i));
    }
    let components = roots.len().max(usize::from(dim == 0));
    let connected = components <= 1;
    CertificateReport {
        dimension: dim,
        angles_distinct,
        connected,
        components,
        certified: angles_distinct && connected,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub verdict: EquivVerdict,
    /// witness f^n(x) = f^m(y) re-evaluated through the map itself
    pub witness_valid: Option<bool>,
    pub x_angles: Vec<String>,
    pub y_angles: Vec<String>,
    pub common_angles: Vec<String>,
}

/// Orbit equivalence verdict together with the spectral view: the exact
/// U-angle sets of the two truncated orbit bases and their intersection.
pub fn equivalence_report(
    spec: &MapSpec,
    x: &Scalar,
    y: &Scalar,
    budget: usize,
    forward: usize,
    depth: usize,
    cap: usize,
) -> Result<EquivalenceReport> {
    let verdict = orbits_equivalent(spec, x, y, budget)?;
    let witness_valid = match &verdict {
        EquivVerdict::Yes { n, m } => {
            let mut fx = x.clone();
            for _ in 0..*n {
                fx = spec.apply(&fx)?;
            }
            let mut fy = y.clone();
            for _ in 0..*m {
                fy = spec.apply(&fy)?;
            }
            Some(fx.eq_exact(&fy))
        }
        _ => None,
    };
    let bx = generalized_orbit(spec, x, forward, depth, cap)?;
    let by = generalized_orbit(spec, y, forward, depth, cap)?;
    let xs: BTreeSet<ExactKey> = bx.points.iter().cloned().map(ExactKey).collect();
    let ys: BTreeSet<ExactKey> = by.points.iter().cloned().map(ExactKey).collect();
    let render_set =
        |s: &BTreeSet<ExactKey>| s.iter().map(|k| k.0.render()).collect::<Vec<_>>();
    let common = xs
        .intersection(&ys)
        .map(|k| k.0.render())
        .collect::<Vec<_>>();
    Ok(EquivalenceReport {
        verdict,
        witness_valid,
        x_angles: render_set(&xs),
        y_angles: render_set(&ys),
        common_angles: common,
    })
}

/// Residual sanity anchor used by tests: U commutes with every M_k exactly.
pub fn mk_commutes_with_u(
    ctx: &PartitionCtx,
    basis: &OrbitBasis,
    k: usize,
) -> Result<bool> {
    let (mk, _) = build_mk(ctx, basis, k, None)?;
    let u = build_u(basis)?;
    let lhs = mk.compose(&u)?;
    let rhs = u.compose(&mk)?;
    let censor = vec![false; basis.len()];
    Ok(lhs.eq_on_core(&rhs, &censor)?.violations.is_empty())
}
