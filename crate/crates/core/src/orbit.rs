//! Truncated generalized orbits R_f(x) = { y : f^n(x) = f^m(y) }, orbit
//! equivalence testing, and DOT export of the orbit graph.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::dynamics::{branch_structure, BranchStructure, MapSpec};
use crate::error::{Error, Result};
use crate::numeric::{ExactKey, Scalar};
use crate::symbolic::detect_period;

/// How a basis point was first reached.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum Provenance {
    Forward { step: usize },
    Preimage { parent: usize, offset: usize, depth: usize },
}

/// Indexed finite set of distinct exact points of a truncated generalized
/// orbit, with per-point provenance and closure bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitBasis {
    pub spec: MapSpec,
    pub root: Scalar,
    pub points: Vec<Scalar>,
    pub provenance: Vec<Provenance>,
    /// index of f(p) when f(p) is itself a member
    pub image_index: Vec<Option<usize>>,
    /// true when every preimage of the point is a member
    pub all_preimages_in_basis: Vec<bool>,
    /// indices of points sitting on monotonicity-partition endpoints
    pub boundary_points: Vec<usize>,
    pub forward_steps: usize,
    pub preimage_depth: usize,
    pub point_cap: usize,
    pub truncated: bool,
    #[serde(skip)]
    index: BTreeMap<ExactKey, usize>,
}

impl OrbitBasis {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lookup(&self, p: &Scalar) -> Option<usize> {
        self.index.get(&ExactKey(p.clone())).copied()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary_points.contains(&idx)
    }

    /// Deterministic union of two bases (used to probe certificates on
    /// disconnected structures). Keeps `a`'s indices, appends new points
    /// of `b` in order; closure flags are recomputed.
    pub fn union(a: &OrbitBasis, b: &OrbitBasis, bs: &BranchStructure) -> Result<OrbitBasis> {
        let mut out = a.clone();
        for (i, p) in b.points.iter().enumerate() {
            if out.lookup(p).is_none() {
                let idx = out.points.len();
                out.points.push(p.clone());
                // parent indices are b-relative; remap through the union
                let prov = match &b.provenance[i] {
                    Provenance::Preimage {
                        parent,
                        offset,
                        depth,
                    } => Provenance::Preimage {
                        parent: out.lookup(&b.points[*parent]).ok_or(Error::BasisMismatch)?,
                        offset: *offset,
                        depth: *depth,
                    },
                    fwd => fwd.clone(),
                };
                out.provenance.push(prov);
                out.index.insert(ExactKey(p.clone()), idx);
            }
        }
        out.truncated = a.truncated || b.truncated;
        out.finish(bs)?;
        Ok(out)
    }

    fn finish(&mut self, bs: &BranchStructure) -> Result<()> {
        let n = self.points.len();
        self.image_index = Vec::with_capacity(n);
        self.all_preimages_in_basis = Vec::with_capacity(n);
        self.boundary_points.clear();
        for (i, p) in self.points.iter().enumerate() {
            let img = bs.spec.apply(p)?;
            self.image_index.push(self.index.get(&ExactKey(img)).copied());
            let pre = bs.preimages(p)?;
            let all_in = pre
                .iter()
                .all(|q| self.index.contains_key(&ExactKey(q.clone())));
            self.all_preimages_in_basis.push(all_in);
            if crate::dynamics::address(&bs.intervals(), p)?.is_none() {
                self.boundary_points.push(i);
            }
        }
        Ok(())
    }
}

/// Breadth-first truncation of the generalized orbit of x0: forward points
/// x0..f^F(x0), then inverse-branch expansion to depth P from every forward
/// point, deduplicated exactly, stopping at `cap` points.
pub fn generalized_orbit(
    spec: &MapSpec,
    x0: &Scalar,
    forward: usize,
    depth: usize,
    cap: usize,
) -> Result<OrbitBasis> {
    if !spec.is_exact() || !x0.is_exact() {
        return Err(Error::ApproxIndeterminate(
            "orbit construction requires exact parameters and seed".into(),
        ));
    }
    if cap == 0 {
        return Err(Error::Range("point cap must be >= 1".into()));
    }
    let bs = branch_structure(spec)?;

    let mut basis = OrbitBasis {
        spec: spec.clone(),
        root: x0.clone(),
        points: Vec::new(),
        provenance: Vec::new(),
        image_index: Vec::new(),
        all_preimages_in_basis: Vec::new(),
        boundary_points: Vec::new(),
        forward_steps: forward,
        preimage_depth: depth,
        point_cap: cap,
        truncated: false,
        index: BTreeMap::new(),
    };

    let insert = |basis: &mut OrbitBasis, p: Scalar, prov: Provenance| -> Option<usize> {
        if let Some(&i) = basis.index.get(&ExactKey(p.clone())) {
            return Some(i);
        }
        if basis.points.len() >= cap {
            basis.truncated = true;
            return None;
        }
        let idx = basis.points.len();
        basis.index.insert(ExactKey(p.clone()), idx);
        basis.points.push(p);
        basis.provenance.push(prov);
        Some(idx)
    };

    // forward sweep; the first point in [0,1[ (x0 = 1 normalizes at once)
    let mut x = if x0.eq_exact(&Scalar::one()) {
        spec.apply(x0)?
    } else {
        x0.clone()
    };
    let mut forward_indices = Vec::new();
    for step in 0..=forward {
        if let Some(i) = insert(&mut basis, x.clone(), Provenance::Forward { step }) {
            if !forward_indices.contains(&i) {
                forward_indices.push(i);
            }
        }
        if step < forward {
            x = spec.apply(&x)?;
        }
    }

    // breadth-first inverse expansion; points may be revisited when a
    // later route grants more remaining depth
    let mut best_remaining: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &i in &forward_indices {
        best_remaining.insert(i, depth);
        queue.push_back((i, depth));
    }
    while let Some((i, remaining)) = queue.pop_front() {
        if remaining == 0 || basis.truncated {
            continue;
        }
        if best_remaining.get(&i).copied().unwrap_or(0) > remaining {
            continue; // a deeper visit is already queued
        }
        let y = basis.points[i].clone();
        let pre = bs.preimages(&y)?;
        for (k, q) in pre.into_iter().enumerate() {
            match insert(&mut basis, q.clone(), Provenance::Preimage {
                parent: i,
                offset: k,
                depth: depth - remaining + 1,
            }) {
                Some(j) => {
                    let r = remaining - 1;
                    if best_remaining.get(&j).copied().map_or(true, |cur| cur < r) {
                        best_remaining.insert(j, r);
                        queue.push_back((j, r));
                    }
                }
                None => break,
            }
        }
    }

    basis.finish(&bs)?;
    Ok(basis)
}

/// Verdict of the orbit equivalence search.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum EquivVerdict {
    Yes { n: usize, m: usize },
    No { certificate: String },
    Unknown { reason: String },
}

/// Decide f^n(x) = f^m(y) for n, m <= budget. Definitive No requires
/// beta > 1 and both forward orbits exactly eventually periodic within the
/// budget (their finite orbit sets are then complete and were compared
/// exhaustively).
pub fn orbits_equivalent(
    spec: &MapSpec,
    x: &Scalar,
    y: &Scalar,
    budget: usize,
) -> Result<EquivVerdict> {
    if !spec.is_exact() || !x.is_exact() || !y.is_exact() {
        return Err(Error::ApproxIndeterminate(
            "orbit equivalence requires exact inputs".into(),
        ));
    }
    let fx = forward_orbit(spec, x, budget)?;
    let fy = forward_orbit(spec, y, budget)?;

    for s in 0..=(2 * budget) {
        let lo = s.saturating_sub(budget);
        for n in lo..=s.min(budget) {
            let m = s - n;
            if fx[n].eq_exact(&fy[m]) {
                return Ok(EquivVerdict::Yes { n, m });
            }
        }
    }

    let px = detect_period(&fx)?;
    let py = detect_period(&fy)?;
    let beta_gt_1 = spec.beta.cmp_exact(&Scalar::one())? == std::cmp::Ordering::Greater;
    match (px, py, beta_gt_1) {
        (Some((p1, q1)), Some((p2, q2)), true) => Ok(EquivVerdict::No {
            certificate: format!(
                "orbits eventually periodic with disjoint point sets: \
                 (preperiod {p1}, period {q1}) vs (preperiod {p2}, period {q2}); \
                 all pairs n,m <= {budget} compared exactly"
            ),
        }),
        (Some(_), Some(_), false) => Ok(EquivVerdict::Unknown {
            reason: "beta = 1: tail certificate unavailable, budget exhausted".into(),
        }),
        _ => Ok(EquivVerdict::Unknown {
            reason: format!("no recurrence detected within budget {budget}"),
        }),
    }
}

pub fn forward_orbit(spec: &MapSpec, x: &Scalar, steps: usize) -> Result<Vec<Scalar>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = x.clone();
    for _ in 0..=steps {
        out.push(p.clone());
        p = spec.apply(&p)?;
    }
    Ok(out)
}

/// DOT rendering of the orbit graph: a node per basis point, an edge
/// y -> f(y) for every pair of member points. Deterministic node order.
pub fn export_orbit_graph(basis: &OrbitBasis) -> String {
    let mut out = String::from("digraph orbit {\n");
    for (i, p) in basis.points.iter().enumerate() {
        out.push_str(&format!(
            "  n{} [label=\"{} (~{:.6})\"];\n",
            i,
            p.render(),
            p.to_f64()
        ));
    }
    for (i, img) in basis.image_index.iter().enumerate() {
        if let Some(j) = img {
            out.push_str(&format!("  n{} -> n{};\n", i, j));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MapSpec;
    use crate::numeric::parse_scalar;

    fn doubling() -> MapSpec {
        MapSpec::new(Scalar::from_int(2), Scalar::zero()).unwrap()
    }

    fn points_of(b: &OrbitBasis) -> Vec<String> {
        let mut v: Vec<String> = b.points.iter().map(|p| p.render()).collect();
        v.sort();
        v
    }

    #[test]
    fn four_point_basis_of_one_third() {
        let b = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 1, 1, 100).unwrap();
        assert_eq!(points_of(&b), vec!["1/3", "1/6", "2/3", "5/6"]);
        assert!(!b.truncated);
        // forward points come first, then preimages in branch order
        assert_eq!(b.points[0].render(), "1/3");
        assert_eq!(b.points[1].render(), "2/3");
    }

    #[test]
    fn preimages_of_the_fixed_point_include_the_breakpoint() {
        let b = generalized_orbit(&doubling(), &Scalar::zero(), 0, 1, 100).unwrap();
        assert_eq!(points_of(&b), vec!["0/1", "1/2"]);
        assert_eq!(b.boundary_points, vec![0, 1]);
    }

    #[test]
    fn zero_depth_orbit_is_the_seed() {
        let b = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 0, 0, 100).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.points[0].eq_exact(&parse_scalar("1/3").unwrap()));
    }

    #[test]
    fn truncation_flag_set_at_cap() {
        let b = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 1, 3, 10).unwrap();
        assert!(b.truncated);
        assert_eq!(b.len(), 10);
    }

    #[test]
    fn growth_is_monotone_in_truncation_parameters() {
        let small = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 1, 1, 1000).unwrap();
        let big = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 2, 2, 1000).unwrap();
        for p in &small.points {
            assert!(big.lookup(p).is_some());
        }
    }

    #[test]
    fn closure_flags_are_sound() {
        let spec = doubling();
        let bs = crate::dynamics::branch_structure(&spec).unwrap();
        let b = generalized_orbit(&spec, &parse_scalar("1/3").unwrap(), 2, 2, 1000).unwrap();
        for (i, p) in b.points.iter().enumerate() {
            if let Some(j) = b.image_index[i] {
                assert!(b.points[j].eq_exact(&spec.apply(p).unwrap()));
            }
            if b.all_preimages_in_basis[i] {
                for q in bs.preimages(p).unwrap() {
                    assert!(b.lookup(&q).is_some());
                }
            }
        }
    }

    #[test]
    fn provenance_replays_to_the_root() {
        let spec = doubling();
        let b = generalized_orbit(&spec, &parse_scalar("1/3").unwrap(), 2, 3, 500).unwrap();
        for (i, prov) in b.provenance.iter().enumerate() {
            // walk back to a forward point, counting inverse steps
            let mut idx = i;
            let mut back = 0usize;
            let fwd = loop {
                match &b.provenance[idx] {
                    Provenance::Forward { step } => break *step,
                    Provenance::Preimage { parent, .. } => {
                        idx = *parent;
                        back += 1;
                    }
                }
            };
            let _ = prov;
            // f^back(point) must equal the forward point f^fwd(root)
            let mut y = b.points[i].clone();
            for _ in 0..back {
                y = spec.apply(&y).unwrap();
            }
            let mut x = b.root.clone();
            for _ in 0..fwd {
                x = spec.apply(&x).unwrap();
            }
            assert!(x.eq_exact(&y));
        }
    }

    #[test]
    fn equivalence_witnesses() {
        let spec = doubling();
        let x = parse_scalar("1/3").unwrap();
        let fx = spec.apply(&x).unwrap();
        assert_eq!(
            orbits_equivalent(&spec, &x, &fx, 8).unwrap(),
            EquivVerdict::Yes { n: 0, m: 1 }
        );
        assert_eq!(
            orbits_equivalent(&spec, &x, &x, 8).unwrap(),
            EquivVerdict::Yes { n: 0, m: 0 }
        );
    }

    #[test]
    fn disjoint_cycles_get_a_no_certificate() {
        let v = orbits_equivalent(
            &doubling(),
            &parse_scalar("1/3").unwrap(),
            &parse_scalar("1/5").unwrap(),
            16,
        )
        .unwrap();
        assert!(matches!(v, EquivVerdict::No { .. }));
    }

    #[test]
    fn featured_map_forward_witness() {
        let spec = MapSpec::new(
            Scalar::from_int(2),
            parse_scalar("(-1+1*sqrt(2))/1").unwrap(),
        )
        .unwrap();
        let x = Scalar::zero();
        let y = spec.apply(&spec.apply(&x).unwrap()).unwrap();
        assert_eq!(
            orbits_equivalent(&spec, &x, &y, 4).unwrap(),
            EquivVerdict::Yes { n: 2, m: 0 }
        );
    }

    #[test]
    fn rotation_exhausted_budget_is_unknown() {
        let spec = MapSpec::new(Scalar::one(), parse_scalar("1/4").unwrap()).unwrap();
        let v = orbits_equivalent(
            &spec,
            &parse_scalar("1/3").unwrap(),
            &parse_scalar("1/5").unwrap(),
            12,
        )
        .unwrap();
        assert!(matches!(v, EquivVerdict::Unknown { .. }));
    }

    #[test]
    fn dot_export_lists_nodes_and_edges() {
        let b = generalized_orbit(&doubling(), &parse_scalar("1/3").unwrap(), 1, 1, 100).unwrap();
        let dot = export_orbit_graph(&b);
        assert!(dot.starts_with("digraph orbit {"));
        assert_eq!(dot.matches("label=").count(), 4);
        // 1/3 <-> 2/3 plus 1/6 -> 1/3 and 5/6 -> 2/3
        assert_eq!(dot.matches("->").count(), 4);
    }

    #[test]
    fn fixed_point_graph_has_a_self_loop() {
        let b = generalized_orbit(&doubling(), &Scalar::zero(), 0, 1, 100).unwrap();
        let dot = export_orbit_graph(&b);
        assert!(dot.contains("n0 -> n0;"));
        assert!(dot.contains("n1 -> n0;"));
    }

    #[test]
    fn approx_seed_is_refused() {
        let seed = parse_scalar("0.33333").unwrap();
        assert!(matches!(
            generalized_orbit(&doubling(), &seed, 1, 1, 10),
            Err(Error::ApproxIndeterminate(_))
        ));
    }
}
