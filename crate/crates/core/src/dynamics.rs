//! The linear mod 1 map f(x) = bx + a (mod 1), its monotonicity partition,
//! branches and inverse branches, address/itinerary maps and kneading data.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{Cmp, Scalar};

/// Map parameters: slope beta >= 1 and offset alpha in [0,1[.
#[derive(Debug, Clone, Serialize)]
pub struct MapSpec {
    pub beta: Scalar,
    pub alpha: Scalar,
}

impl MapSpec {
    pub fn new(beta: Scalar, alpha: Scalar) -> Result<Self> {
        match beta.cmp_scalar(&Scalar::one()) {
            Cmp::Less => return Err(Error::Range("beta must be >= 1".into())),
            Cmp::Indeterminate => {
                return Err(Error::ApproxIndeterminate(
                    "beta >= 1 undecidable within epsilon".into(),
                ))
            }
            _ => {}
        }
        match (
            alpha.cmp_scalar(&Scalar::zero()),
            alpha.cmp_scalar(&Scalar::one()),
        ) {
            (Cmp::Less, _) | (_, Cmp::Greater) | (_, Cmp::Equal) => {
                return Err(Error::Range("alpha must lie in [0,1[".into()))
            }
            (Cmp::Indeterminate, _) | (_, Cmp::Indeterminate) => {
                return Err(Error::ApproxIndeterminate(
                    "alpha in [0,1[ undecidable within epsilon".into(),
                ))
            }
            _ => {}
        }
        Ok(MapSpec { beta, alpha })
    }

    pub fn is_exact(&self) -> bool {
        self.beta.is_exact() && self.alpha.is_exact()
    }

    /// f(x) = beta x + alpha (mod 1), defined on [0,1].
    pub fn apply(&self, x: &Scalar) -> Result<Scalar> {
        if !in_unit_closed(x)? {
            return Err(Error::Range(format!("{} outside [0,1]", x.render())));
        }
        self.beta.mul(x).add(&self.alpha).mod1()
    }
}

/// Open interval ]left, right[.
#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub left: Scalar,
    pub right: Scalar,
}

impl Interval {
    pub fn new(left: Scalar, right: Scalar) -> Interval {
        Interval { left, right }
    }

    pub fn is_empty(&self) -> Result<bool> {
        match self.left.cmp_scalar(&self.right) {
            Cmp::Less => Ok(false),
            Cmp::Equal | Cmp::Greater => Ok(true),
            Cmp::Indeterminate => Err(Error::ApproxIndeterminate(
                "interval emptiness undecidable".into(),
            )),
        }
    }

    pub fn contains(&self, x: &Scalar) -> Result<bool> {
        let lo = self.left.cmp_scalar(x);
        let hi = x.cmp_scalar(&self.right);
        if lo == Cmp::Indeterminate || hi == Cmp::Indeterminate {
            return Err(Error::ApproxIndeterminate(format!(
                "membership of {} in ]{},{}[ undecidable",
                x.render(),
                self.left.render(),
                self.right.render()
            )));
        }
        Ok(lo == Cmp::Less && hi == Cmp::Less)
    }

    pub fn intersect(&self, other: &Interval) -> Result<Option<Interval>> {
        let left = match self.left.cmp_exact(&other.left)? {
            std::cmp::Ordering::Less => other.left.clone(),
            _ => self.left.clone(),
        };
        let right = match self.right.cmp_exact(&other.right)? {
            std::cmp::Ordering::Greater => other.right.clone(),
            _ => self.right.clone(),
        };
        let iv = Interval::new(left, right);
        if iv.is_empty()? {
            Ok(None)
        } else {
            Ok(Some(iv))
        }
    }

    /// other subset of self (as open intervals): self.left <= other.left and
    /// other.right <= self.right.
    pub fn covers(&self, other: &Interval) -> Result<bool> {
        let l = self.left.cmp_exact(&other.left)?;
        let r = other.right.cmp_exact(&self.right)?;
        Ok(l != std::cmp::Ordering::Greater && r != std::cmp::Ordering::Greater)
    }

    pub fn diameter(&self) -> Scalar {
        self.right.sub(&self.left)
    }
}

fn in_unit_closed(x: &Scalar) -> Result<bool> {
    let lo = x.cmp_scalar(&Scalar::zero());
    let hi = x.cmp_scalar(&Scalar::one());
    if lo == Cmp::Indeterminate || hi == Cmp::Indeterminate {
        return Err(Error::ApproxIndeterminate(
            "membership in [0,1] undecidable".into(),
        ));
    }
    Ok(lo != Cmp::Less && hi != Cmp::Greater)
}

/// A single monotone branch: f restricted to `interval` equals
/// beta x + alpha - offset, with image `image`.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub interval: Interval,
    pub offset: BigInt,
    pub image: Interval,
}

/// Monotonicity partition of the map: breakpoints, open intervals,
/// integer branch offsets and branch images.
#[derive(Debug, Clone, Serialize)]
pub struct BranchStructure {
    pub spec: MapSpec,
    pub breakpoints: Vec<Scalar>,
    pub branches: Vec<Branch>,
    pub n: usize,
    /// whether the textbook rule n = [beta]+1 (alpha>0) agrees with the
    /// breakpoint count; false flags the beta+alpha > [beta]+1 regime
    pub textbook_rule_agrees: bool,
}

impl BranchStructure {
    pub fn intervals(&self) -> Vec<Interval> {
        self.branches.iter().map(|b| b.interval.clone()).collect()
    }

    /// Inverse of branch k (1-based) at y, or None when y is outside the
    /// open branch image.
    pub fn branch_inverse(&self, k: usize, y: &Scalar) -> Result<Option<Scalar>> {
        let branch = self
            .branches
            .get(k - 1)
            .ok_or_else(|| Error::Range(format!("branch index {k} out of 1..={}", self.n)))?;
        if !branch.image.contains(y)? {
            return Ok(None);
        }
        let x = y
            .add(&Scalar::from_bigint(branch.offset.clone()))
            .sub(&self.spec.alpha)
            .div(&self.spec.beta)?;
        Ok(Some(x))
    }

    /// All x in [0,1[ with f(x) = y, ascending, including points that sit on
    /// partition endpoints.
    pub fn preimages(&self, y: &Scalar) -> Result<Vec<Scalar>> {
        let mut out = Vec::new();
        for o in 0..=self.n as i64 {
            let x = y
                .add(&Scalar::from_int(o))
                .sub(&self.spec.alpha)
                .div(&self.spec.beta)?;
            let ge0 = x.cmp_exact(&Scalar::zero())? != std::cmp::Ordering::Less;
            let lt1 = x.cmp_exact(&Scalar::one())? == std::cmp::Ordering::Less;
            if ge0 && lt1 && self.spec.apply(&x)?.eq_exact(y) {
                out.push(x);
            }
        }
        Ok(out)
    }

}

/// Monotonicity partition of f: breakpoints are exactly the x in ]0,1[ with
/// beta x + alpha integer, i.e. x = (k - alpha)/beta for alpha < k < beta+alpha.
pub fn branch_structure(spec: &MapSpec) -> Result<BranchStructure> {
    let beta_plus_alpha = spec.beta.add(&spec.alpha);
    let fl = beta_plus_alpha.floor().map_err(|e| match e {
        Error::IndeterminateFloor => Error::ApproxIndeterminate(
            "breakpoint count undecidable: beta+alpha within epsilon of an integer".into(),
        ),
        e => e,
    })?;
    let is_integer = beta_plus_alpha.eq_exact(&Scalar::from_bigint(fl.clone()));
    let k_max = if is_integer { &fl - 1 } else { fl.clone() };

    let mut breakpoints = Vec::new();
    let mut k = BigInt::from(1);
    while k <= k_max {
        let c = Scalar::from_bigint(k.clone())
            .sub(&spec.alpha)
            .div(&spec.beta)?;
        breakpoints.push(c);
        k += 1;
    }

    let n = breakpoints.len() + 1;
    let mut branches = Vec::with_capacity(n);
    let mut left = Scalar::zero();
    for j in 0..n {
        let right = breakpoints
            .get(j)
            .cloned()
            .unwrap_or_else(Scalar::one);
        let offset = BigInt::from(j as i64);
        let o = Scalar::from_bigint(offset.clone());
        let img_left = spec.beta.mul(&left).add(&spec.alpha).sub(&o);
        let img_right = spec.beta.mul(&right).add(&spec.alpha).sub(&o);
        branches.push(Branch {
            interval: Interval::new(left.clone(), right.clone()),
            offset,
            image: Interval::new(img_left, img_right),
        });
        left = right;
    }

    // textbook branch count for comparison
    let beta_floor = spec.beta.floor()?;
    let alpha_zero = spec.alpha.is_zero_exact();
    let beta_integer = spec.beta.eq_exact(&Scalar::from_bigint(beta_floor.clone()));
    let textbook_n = if alpha_zero && beta_integer {
        beta_floor.clone()
    } else {
        &beta_floor + 1
    };
    let textbook_rule_agrees = BigInt::from(n as i64) == textbook_n;

    Ok(BranchStructure {
        spec: spec.clone(),
        breakpoints,
        branches,
        n,
        textbook_rule_agrees,
    })
}

/// Address of x in a partition of open intervals: the 1-based symbol of the
/// interval containing x, or None when x sits on an endpoint.
pub fn address(partition: &[Interval], x: &Scalar) -> Result<Option<usize>> {
    for (i, j) in partition.iter().enumerate() {
        if j.contains(x)? {
            return Ok(Some(i + 1));
        }
    }
    Ok(None)
}

/// Finite itinerary with optional exact-recurrence periodicity.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ItineraryRecord {
    pub symbols: Vec<usize>,
    pub length: usize,
    /// (preperiod, period), certified by exact point recurrence
    pub periodicity: Option<(usize, usize)>,
}

/// Itinerary of x under f with respect to `partition`, horizon L.
/// Errors with `BoundaryHit` if some f^j(x) lands on a partition endpoint.
pub fn itinerary(
    spec: &MapSpec,
    partition: &[Interval],
    x: &Scalar,
    horizon: usize,
) -> Result<ItineraryRecord> {
    if horizon == 0 {
        return Err(Error::Range("horizon must be >= 1".into()));
    }
    let mut points = Vec::with_capacity(horizon);
    let mut symbols = Vec::with_capacity(horizon);
    let mut p = x.clone();
    for j in 0..horizon {
        match address(partition, &p)? {
            Some(s) => symbols.push(s),
            None => {
                return Err(Error::BoundaryHit {
                    point: p.render(),
                    step: j,
                })
            }
        }
        points.push(p.clone());
        p = spec.apply(&p)?;
    }
    let periodicity = if spec.is_exact() && x.is_exact() {
        crate::symbolic::detect_period(&points)?
    } else {
        None
    };
    Ok(ItineraryRecord {
        symbols,
        length: horizon,
        periodicity,
    })
}

/// One-sided kneading itineraries at 0+, 1- and both lateral limits of f at
/// each breakpoint.
#[derive(Debug, Clone, Serialize)]
pub struct KneadingData {
    pub at_zero: ItineraryRecord,
    pub at_one: ItineraryRecord,
    pub breakpoints: Vec<KneadingPair>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KneadingPair {
    pub breakpoint: Scalar,
    /// itinerary of f(c-) (the left lateral limit, always the point 1-)
    pub left: ItineraryRecord,
    /// itinerary of f(c+) (the right lateral limit, always the point 0+)
    pub right: ItineraryRecord,
}

/// Itinerary with the lateral conventions 0 = 0+ (address 1) and 1 = 1-
/// (address n). Interior breakpoints still raise `BoundaryHit`.
pub fn lateral_itinerary(bs: &BranchStructure, start: &Scalar, horizon: usize) -> Result<ItineraryRecord> {
    let spec = &bs.spec;
    let n = bs.n;
    let mut points = Vec::with_capacity(horizon);
    let mut symbols = Vec::with_capacity(horizon);
    let mut p = start.clone();
    for j in 0..horizon {
        points.push(p.clone());
        if p.is_zero_exact() {
            symbols.push(1);
            p = spec.alpha.clone();
        } else if p.eq_exact(&Scalar::one()) {
            symbols.push(n);
            let top = &bs.branches[n - 1];
            p = spec
                .beta
                .add(&spec.alpha)
                .sub(&Scalar::from_bigint(top.offset.clone()));
            // value in ]0,1]; 1 means the lateral orbit is pinned at 1-
        } else {
            match address(&bs.intervals(), &p)? {
                Some(s) => symbols.push(s),
                None => {
                    return Err(Error::BoundaryHit {
                        point: p.render(),
                        step: j,
                    })
                }
            }
            p = spec.apply(&p)?;
        }
    }
    let periodicity = crate::symbolic::detect_period(&points)?;
    Ok(ItineraryRecord {
        symbols,
        length: horizon,
        periodicity,
    })
}

/// Kneading data of an exact-mode map: the lateral itineraries
/// it(f(c_j+)), it(f(c_j-)) for every breakpoint plus it(0) and it(1).
/// For a linear mod 1 map the lateral images of a breakpoint are exactly
/// the points 0 and 1, so each pair reduces to those lateral itineraries.
pub fn kneading_data(spec: &MapSpec, horizon: usize) -> Result<KneadingData> {
    if !spec.is_exact() {
        return Err(Error::ApproxIndeterminate(
            "kneading data requires exact parameters".into(),
        ));
    }
    let bs = branch_structure(spec)?;
    let at_zero = lateral_itinerary(&bs, &Scalar::zero(), horizon)?;
    let at_one = lateral_itinerary(&bs, &Scalar::one(), horizon)?;
    let mut pairs = Vec::new();
    for c in &bs.breakpoints {
        pairs.push(KneadingPair {
            breakpoint: c.clone(),
            left: at_one.clone(),
            right: at_zero.clone(),
        });
    }
    Ok(KneadingData {
        at_zero,
        at_one,
        breakpoints: pairs,
    })
}

/// Digit of x for the alpha reconstruction formula: floor(beta x + alpha),
/// i.e. the integer subtracted when f steps from x. Well defined on all of
/// [0,1] including breakpoints; equals the branch offset (= address - 1)
/// away from boundary points. This is the frozen digit convention used by
/// the Markov alpha roundtrip.
pub fn reconstruction_digit(spec: &MapSpec, x: &Scalar) -> Result<BigInt> {
    spec.beta.mul(x).add(&spec.alpha).floor()
}
