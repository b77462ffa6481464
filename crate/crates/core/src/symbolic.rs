//! Words, cylinders, admissible-word enumeration, periodicity detection,
//! the periodic-itinerary alpha formula and Markov partition analysis.

use num_bigint::BigInt;
use serde::Serialize;

use crate::dynamics::{branch_structure, BranchStructure, Interval, MapSpec};
use crate::error::{Error, Result};
use crate::numeric::{ExactKey, Scalar};

/// Finite word over a partition alphabet, symbols 1-based.
pub type Word = Vec<usize>;

pub fn word_to_string(w: &[usize]) -> String {
    w.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// A partition of ]0,1[ into open intervals, each contained in a single
/// monotonicity branch, with per-interval branch offsets and images. This is
/// the context every symbolic and operator computation runs against; the
/// default is the monotonicity partition itself.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionCtx {
    pub spec: MapSpec,
    pub intervals: Vec<Interval>,
    pub offsets: Vec<BigInt>,
    pub images: Vec<Interval>,
}

impl PartitionCtx {
    pub fn from_branches(bs: &BranchStructure) -> PartitionCtx {
        PartitionCtx {
            spec: bs.spec.clone(),
            intervals: bs.branches.iter().map(|b| b.interval.clone()).collect(),
            offsets: bs.branches.iter().map(|b| b.offset.clone()).collect(),
            images: bs.branches.iter().map(|b| b.image.clone()).collect(),
        }
    }

    /// Build from custom open intervals; each must sit inside one
    /// monotonicity branch so that f restricted to it is a single affine map.
    pub fn from_intervals(bs: &BranchStructure, intervals: Vec<Interval>) -> Result<PartitionCtx> {
        let mut offsets = Vec::with_capacity(intervals.len());
        let mut images = Vec::with_capacity(intervals.len());
        for j in &intervals {
            let mut found = None;
            for b in &bs.branches {
                if b.interval.covers(j)? {
                    found = Some(b);
                    break;
                }
            }
            let b = found.ok_or_else(|| {
                Error::InvalidPartition(format!(
                    "]{},{}[ spans a monotonicity breakpoint",
                    j.left.render(),
                    j.right.render()
                ))
            })?;
            let o = Scalar::from_bigint(b.offset.clone());
            let img = Interval::new(
                bs.spec.beta.mul(&j.left).add(&bs.spec.alpha).sub(&o),
                bs.spec.beta.mul(&j.right).add(&bs.spec.alpha).sub(&o),
            );
            offsets.push(b.offset.clone());
            images.push(img);
        }
        Ok(PartitionCtx {
            spec: bs.spec.clone(),
            intervals,
            offsets,
            images,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.intervals.len()
    }

    /// inverse of the branch through partition interval i (1-based) at y
    pub fn pull_back(&self, symbol: usize, y: &Scalar) -> Result<Scalar> {
        let o = Scalar::from_bigint(self.offsets[symbol - 1].clone());
        y.add(&o).sub(&self.spec.alpha).div(&self.spec.beta)
    }

    /// forward affine image of x through the branch of symbol i
    pub fn push_forward(&self, symbol: usize, x: &Scalar) -> Scalar {
        let o = Scalar::from_bigint(self.offsets[symbol - 1].clone());
        self.spec.beta.mul(x).add(&self.spec.alpha).sub(&o)
    }
}

/// Cylinder of a word: its open interval I_w and forward image f^|w|(I_w).
#[derive(Debug, Clone, Serialize)]
pub struct CylinderData {
    pub word: Word,
    pub interval: Interval,
    pub image: Interval,
}

/// The open interval of points whose itinerary starts with w, or None when
/// the cylinder is empty. Computed by exact inverse-branch pullback.
pub fn cylinder(ctx: &PartitionCtx, w: &[usize]) -> Result<Option<CylinderData>> {
    if w.is_empty() {
        return Err(Error::Range("cylinder word must be nonempty".into()));
    }
    let m = ctx.alphabet_size();
    for &s in w {
        if s == 0 || s > m {
            return Err(Error::Range(format!("symbol {s} outside alphabet 1..={m}")));
        }
    }
    // pull back from the last symbol
    let mut c = ctx.intervals[w[w.len() - 1] - 1].clone();
    for j in (0..w.len() - 1).rev() {
        let s = w[j];
        let within = match ctx.images[s - 1].intersect(&c)? {
            Some(iv) => iv,
            None => return Ok(None),
        };
        c = Interval::new(ctx.pull_back(s, &within.left)?, ctx.pull_back(s, &within.right)?);
    }
    if c.is_empty()? {
        return Ok(None);
    }
    // push the interval forward to get f^{|w|}(I_w)
    let mut img = c.clone();
    for &s in w {
        img = Interval::new(ctx.push_forward(s, &img.left), ctx.push_forward(s, &img.right));
    }
    Ok(Some(CylinderData {
        word: w.to_vec(),
        interval: c,
        image: img,
    }))
}

pub fn cylinder_interval(ctx: &PartitionCtx, w: &[usize]) -> Result<Option<Interval>> {
    Ok(cylinder(ctx, w)?.map(|c| c.interval))
}

pub const DEFAULT_WORD_CAP: usize = 1 << 20;

/// All admissible words of length k (nonempty cylinder), lexicographic.
/// Enumeration extends nonempty cylinders only, so the cost is bounded by
/// the actual word counts, capped at `cap` per level.
pub fn admissible_words(ctx: &PartitionCtx, k: usize, cap: usize) -> Result<Vec<Word>> {
    Ok(admissible_cylinders(ctx, k, cap)?
        .into_iter()
        .map(|c| c.word)
        .collect())
}

/// Same enumeration keeping intervals and images.
pub fn admissible_cylinders(ctx: &PartitionCtx, k: usize, cap: usize) -> Result<Vec<CylinderData>> {
    if k == 0 {
        return Err(Error::Range("word length must be >= 1".into()));
    }
    let m = ctx.alphabet_size();
    let mut level: Vec<CylinderData> = Vec::new();
    for s in 1..=m {
        let iv = ctx.intervals[s - 1].clone();
        if !iv.is_empty()? {
            level.push(CylinderData {
                word: vec![s],
                interval: iv,
                image: ctx.images[s - 1].clone(),
            });
        }
    }
    for _ in 1..k {
        let mut next = Vec::new();
        for c in &level {
            for s in 1..=m {
                if let Some(hit) = c.image.intersect(&ctx.intervals[s - 1])? {
                    let mut w = c.word.clone();
                    w.push(s);
                    // new cylinder: pull `hit` back through the word prefix
                    let mut iv = hit.clone();
                    for &p in c.word.iter().rev() {
                        iv = Interval::new(
                            ctx.pull_back(p, &iv.left)?,
                            ctx.pull_back(p, &iv.right)?,
                        );
                    }
                    let image = Interval::new(
                        ctx.push_forward(s, &hit.left),
                        ctx.push_forward(s, &hit.right),
                    );
                    next.push(CylinderData {
                        word: w,
                        interval: iv,
                        image,
                    });
                    if next.len() > cap {
                        return Err(Error::ResourceLimit(format!(
                            "admissible word count exceeds cap {cap}"
                        )));
                    }
                }
            }
        }
        level = next;
    }
    Ok(level)
}

/// Least (preperiod p, period q) with points[p] = points[p+q] under exact
/// equality, if any repeat occurs in the list.
pub fn detect_period(points: &[Scalar]) -> Result<Option<(usize, usize)>> {
    for p in 0..points.len() {
        for q in 1..points.len() - p {
            if points[p].cmp_exact(&points[p + q])? == std::cmp::Ordering::Equal {
                return Ok(Some((p, q)));
            }
        }
    }
    Ok(None)
}

/// alpha = (xi_l + xi_{l-1} b + ... + xi_1 b^{l-1}) / (1 + b + ... + b^{l-1}),
/// exact in the field of beta. Digits follow the frozen convention of
/// `dynamics::reconstruction_digit` (floor digits, equal to branch offsets).
pub fn alpha_from_periodic(beta: &Scalar, digits: &[BigInt]) -> Result<Scalar> {
    if digits.is_empty() {
        return Err(Error::Range("digit list must be nonempty".into()));
    }
    let mut num = Scalar::zero();
    let mut den = Scalar::zero();
    let mut pow = Scalar::one();
    // xi_l is the constant term; walk the digits from the back
    for d in digits.iter().rev() {
        num = num.add(&Scalar::from_bigint(d.clone()).mul(&pow));
        den = den.add(&pow);
        pow = pow.mul(beta);
    }
    let alpha = num.div(&den)?;
    let ge0 = alpha.cmp_exact(&Scalar::zero())? != std::cmp::Ordering::Less;
    let lt1 = alpha.cmp_exact(&Scalar::one())? == std::cmp::Ordering::Less;
    if !ge0 || !lt1 {
        return Err(Error::Range(format!(
            "reconstructed alpha {} outside [0,1[",
            alpha.render()
        )));
    }
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarkovVerdict {
    Yes,
    /// definitive: alpha outside the field of beta contradicts the
    /// periodic-itinerary necessary condition for every horizon
    No,
    NoWithinHorizon,
    Indeterminate,
}

fn digits_as_strings<S: serde::Serializer>(
    d: &[BigInt],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(d.iter().map(|x| x.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaCheck {
    #[serde(serialize_with = "digits_as_strings")]
    pub digits: Vec<BigInt>,
    pub reconstructed: Scalar,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    pub verdict: MarkovVerdict,
    pub certificate: Option<String>,
    pub horizon: usize,
    pub boundary_orbit: Option<Vec<Scalar>>,
    pub refined_partition: Option<Vec<Interval>>,
    pub transition_matrix: Option<Vec<Vec<u8>>>,
    pub alpha_check: Option<AlphaCheck>,
    /// breakpoint-rule flag copied from the branch structure
    pub textbook_rule_agrees: bool,
}

fn fields_incompatible(beta: &Scalar, alpha: &Scalar) -> bool {
    match (beta, alpha) {
        (Scalar::Rational(_), Scalar::Surd { .. }) => true,
        (Scalar::Surd { d, .. }, Scalar::Surd { d: d2, .. }) => d != d2,
        _ => false,
    }
}

/// Iterate 0, 1 and all breakpoints forward up to `horizon` steps with exact
/// recurrence detection; on full recurrence build the refined partition from
/// the boundary orbit, verify the Markov property and emit the transition
/// matrix a_pq = 1 iff f(J_p) contains J_q.
pub fn markov_analysis(spec: &MapSpec, horizon: usize) -> Result<MarkovReport> {
    if !spec.is_exact() {
        return Err(Error::ApproxIndeterminate(
            "Markov detection requires exact parameters".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::Range("horizon must be >= 1".into()));
    }
    let bs = branch_structure(spec)?;
    let shortcut = fields_incompatible(&spec.beta, &spec.alpha);

    let mut seeds = vec![Scalar::zero(), Scalar::one()];
    seeds.extend(bs.breakpoints.iter().cloned());

    let mut all_points: std::collections::BTreeMap<ExactKey, ()> = Default::default();
    let mut all_recur = true;
    let mut zero_orbit: Vec<Scalar> = Vec::new();
    for (si, seed) in seeds.iter().enumerate() {
        let mut orbit = vec![seed.clone()];
        let mut recurred = false;
        for _ in 0..horizon {
            let next = spec.apply(orbit.last().unwrap())?;
            if orbit.iter().any(|p| p.eq_exact(&next)) {
                orbit.push(next);
                recurred = true;
                break;
            }
            orbit.push(next);
        }
        if si == 0 {
            zero_orbit = orbit.clone();
        }
        if !recurred {
            let (verdict, certificate) = if shortcut {
                (
                    MarkovVerdict::No,
                    Some("alpha not in Q(beta): no periodic boundary itinerary exists at any horizon".to_string()),
                )
            } else {
                (MarkovVerdict::NoWithinHorizon, None)
            };
            return Ok(MarkovReport {
                verdict,
                certificate,
                horizon,
                boundary_orbit: None,
                refined_partition: None,
                transition_matrix: None,
                alpha_check: None,
                textbook_rule_agrees: bs.textbook_rule_agrees,
            });
        }
        all_recur &= recurred;
        for p in orbit {
            // keep points in [0,1]: orbit values live in [0,1[ plus the seed 1
            all_points.entry(ExactKey(p)).or_insert(());
        }
    }
    debug_assert!(all_recur);

    let boundary: Vec<Scalar> = all_points.keys().map(|k| k.0.clone()).collect();
    // endpoints for the refinement: boundary points inside [0,1] sorted,
    // with 0 and 1 guaranteed present (they are seeds)
    let mut refined = Vec::new();
    for pair in boundary.windows(2) {
        refined.push(Interval::new(pair[0].clone(), pair[1].clone()));
    }

    // verify the Markov property: each refined interval's image endpoints
    // land exactly on boundary points
    let mut matrix = vec![vec![0u8; refined.len()]; refined.len()];
    for (p, j) in refined.iter().enumerate() {
        let mut branch = None;
        for b in &bs.branches {
            if b.interval.covers(j)? {
                branch = Some(b);
                break;
            }
        }
        let b = branch.ok_or_else(|| {
            Error::InvalidPartition("refined interval spans a breakpoint".into())
        })?;
        let o = Scalar::from_bigint(b.offset.clone());
        let img = Interval::new(
            spec.beta.mul(&j.left).add(&spec.alpha).sub(&o),
            spec.beta.mul(&j.right).add(&spec.alpha).sub(&o),
        );
        let l_ok = boundary.iter().any(|x| x.eq_exact(&img.left));
        let r_ok = boundary.iter().any(|x| x.eq_exact(&img.right));
        if !l_ok || !r_ok {
            return Ok(MarkovReport {
                verdict: MarkovVerdict::NoWithinHorizon,
                certificate: Some(format!(
                    "image of refined interval {} is not a union of refined intervals",
                    p + 1
                )),
                horizon,
                boundary_orbit: Some(boundary),
                refined_partition: Some(refined),
                transition_matrix: None,
                alpha_check: None,
                textbook_rule_agrees: bs.textbook_rule_agrees,
            });
        }
        for (q, jq) in refined.iter().enumerate() {
            if img.covers(jq)? {
                matrix[p][q] = 1;
            }
        }
    }

    // optional Prop-2.1 style roundtrip when the orbit of 0 returns to 0
    let alpha_check = alpha_check_from_zero_orbit(spec, &zero_orbit)?;

    Ok(MarkovReport {
        verdict: MarkovVerdict::Yes,
        certificate: None,
        horizon,
        boundary_orbit: Some(boundary),
        refined_partition: Some(refined),
        transition_matrix: Some(matrix),
        alpha_check,
        textbook_rule_agrees: bs.textbook_rule_agrees,
    })
}

fn alpha_check_from_zero_orbit(spec: &MapSpec, orbit: &[Scalar]) -> Result<Option<AlphaCheck>> {
    // pure recurrence to 0: f^l(0) = 0 for some l >= 1
    let mut period = None;
    for (j, p) in orbit.iter().enumerate().skip(1) {
        if p.is_zero_exact() {
            period = Some(j);
            break;
        }
    }
    let Some(l) = period else { return Ok(None) };
    let mut digits = Vec::with_capacity(l);
    for x in orbit.iter().take(l) {
        digits.push(crate::dynamics::reconstruction_digit(spec, x)?);
    }
    let reconstructed = alpha_from_periodic(&spec.beta, &digits)?;
    let matches = reconstructed.eq_exact(&spec.alpha);
    Ok(Some(AlphaCheck {
        digits,
        reconstructed,
        matches,
    }))
}

/// itinerary digit sequence of the orbit of 0 in the floor convention,
/// exposed for the reconstruction roundtrip
pub fn zero_orbit_digits(spec: &MapSpec, length: usize) -> Result<Vec<BigInt>> {
    let mut digits = Vec::with_capacity(length);
    let mut x = Scalar::zero();
    for _ in 0..length {
        digits.push(crate::dynamics::reconstruction_digit(spec, &x)?);
        x = spec.apply(&x)?;
    }
    Ok(digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MapSpec;
    use crate::numeric::parse_scalar;

    fn ctx(beta: &str, alpha: &str) -> PartitionCtx {
        let spec =
            MapSpec::new(parse_scalar(beta).unwrap(), parse_scalar(alpha).unwrap()).unwrap();
        PartitionCtx::from_branches(&branch_structure(&spec).unwrap())
    }

    #[test]
    fn cylinder_of_single_symbol_is_the_interval() {
        let c = cylinder_interval(&ctx("2", "0"), &[1]).unwrap().unwrap();
        assert!(c.left.is_zero_exact());
        assert!(c.right.eq_exact(&parse_scalar("1/2").unwrap()));
    }

    #[test]
    fn cylinder_pullback_doubling_12() {
        let c = cylinder_interval(&ctx("2", "0"), &[1, 2]).unwrap().unwrap();
        assert!(c.left.eq_exact(&parse_scalar("1/4").unwrap()));
        assert!(c.right.eq_exact(&parse_scalar("1/2").unwrap()));
    }

    #[test]
    fn forbidden_word_has_empty_cylinder() {
        assert!(cylinder_interval(&ctx("3/2", "0"), &[2, 2]).unwrap().is_none());
    }

    #[test]
    fn admissible_words_full_shift() {
        let w = admissible_words(&ctx("2", "0"), 2, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(w, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }

    #[test]
    fn admissible_words_golden_style() {
        let w = admissible_words(&ctx("3/2", "0"), 2, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(w, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn words_of_length_one_are_the_alphabet() {
        let c = ctx("2", "(-1+1*sqrt(2))/1");
        let w = admissible_words(&c, 1, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(w, vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn cylinder_nesting_and_contraction() {
        let c = ctx("2", "(-1+1*sqrt(2))/1");
        for cyl in admissible_cylinders(&c, 4, DEFAULT_WORD_CAP).unwrap() {
            let parent = cylinder_interval(&c, &cyl.word[..3]).unwrap().unwrap();
            assert!(parent.covers(&cyl.interval).unwrap());
            // diameter <= beta^{-(k-1)} = 1/8
            let lim = parse_scalar("1/8").unwrap();
            assert!(
                cyl.interval.diameter().cmp_exact(&lim).unwrap() != std::cmp::Ordering::Greater
            );
        }
    }

    #[test]
    fn detect_period_examples() {
        let spec = MapSpec::new(Scalar::from_int(2), Scalar::zero()).unwrap();
        let orbit = |x: &str, len: usize| {
            let mut p = parse_scalar(x).unwrap();
            let mut v = vec![p.clone()];
            for _ in 0..len {
                p = spec.apply(&p).unwrap();
                v.push(p.clone());
            }
            v
        };
        assert_eq!(detect_period(&orbit("1/3", 6)).unwrap(), Some((0, 2)));
        assert_eq!(detect_period(&orbit("0", 3)).unwrap(), Some((0, 1)));
        assert_eq!(detect_period(&orbit("1/6", 6)).unwrap(), Some((1, 2)));
        assert_eq!(detect_period(&orbit("1/1024", 5)).unwrap(), None);
    }

    #[test]
    fn alpha_from_zero_digits_is_zero() {
        let a = alpha_from_periodic(&Scalar::from_int(2), &[BigInt::from(0)]).unwrap();
        assert!(a.is_zero_exact());
        let a3 = alpha_from_periodic(&Scalar::from_int(2), &vec![BigInt::from(0); 3]).unwrap();
        assert!(a3.is_zero_exact());
    }

    #[test]
    fn alpha_roundtrip_from_exact_recurrence() {
        // 0 -> 2/3 -> 0 under beta=2, alpha=2/3: digits [0, 2]
        let spec = MapSpec::new(Scalar::from_int(2), parse_scalar("2/3").unwrap()).unwrap();
        let digits = zero_orbit_digits(&spec, 2).unwrap();
        assert_eq!(digits, vec![BigInt::from(0), BigInt::from(2)]);
        let alpha = alpha_from_periodic(&spec.beta, &digits).unwrap();
        assert!(alpha.eq_exact(&spec.alpha));
    }

    #[test]
    fn alpha_formula_rejects_out_of_range_digits() {
        let r = alpha_from_periodic(&Scalar::from_int(2), &[BigInt::from(9)]);
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn doubling_map_is_markov_with_full_matrix() {
        let spec = MapSpec::new(Scalar::from_int(2), Scalar::zero()).unwrap();
        let rep = markov_analysis(&spec, 4).unwrap();
        assert_eq!(rep.verdict, MarkovVerdict::Yes);
        let refined = rep.refined_partition.unwrap();
        assert_eq!(refined.len(), 2);
        assert!(refined[0].right.eq_exact(&parse_scalar("1/2").unwrap()));
        assert_eq!(rep.transition_matrix.unwrap(), vec![vec![1, 1], vec![1, 1]]);
    }

    #[test]
    fn surd_alpha_is_never_markov() {
        let spec = MapSpec::new(
            Scalar::from_int(2),
            parse_scalar("(-1+1*sqrt(2))/1").unwrap(),
        )
        .unwrap();
        let rep = markov_analysis(&spec, 50).unwrap();
        assert_eq!(rep.verdict, MarkovVerdict::No);
        assert!(rep.certificate.unwrap().contains("not in Q(beta)"));
    }

    #[test]
    fn rotation_by_quarter_is_markov() {
        let spec = MapSpec::new(Scalar::one(), parse_scalar("1/4").unwrap()).unwrap();
        let rep = markov_analysis(&spec, 8).unwrap();
        assert_eq!(rep.verdict, MarkovVerdict::Yes);
        let refined = rep.refined_partition.unwrap();
        assert_eq!(refined.len(), 4);
        let a = rep.transition_matrix.unwrap();
        for row in &a {
            assert_eq!(row.iter().map(|x| *x as usize).sum::<usize>(), 1);
        }
    }

    #[test]
    fn non_markov_rational_within_horizon() {
        // alpha = 1/5, beta = 2: orbit of 0 cycles but breakpoint orbit of
        // (1 - 1/5)/2 = 2/5 joins it; horizon 1 is too short to see closure
        let spec = MapSpec::new(Scalar::from_int(2), parse_scalar("1/7").unwrap()).unwrap();
        let rep = markov_analysis(&spec, 1).unwrap();
        assert!(matches!(
            rep.verdict,
            MarkovVerdict::NoWithinHorizon | MarkovVerdict::Yes
        ));
    }

    #[test]
    fn custom_partition_must_respect_breakpoints() {
        let spec = MapSpec::new(Scalar::from_int(2), Scalar::zero()).unwrap();
        let bs = branch_structure(&spec).unwrap();
        let bad = vec![Interval::new(Scalar::zero(), parse_scalar("3/4").unwrap())];
        assert!(matches!(
            PartitionCtx::from_intervals(&bs, bad),
            Err(Error::InvalidPartition(_))
        ));
    }
}
