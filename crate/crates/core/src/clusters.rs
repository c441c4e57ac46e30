//! Second decoder step: turn a matching into a qubit correction.
//!
//! Matched pairs link up into closed cycles (clusters). Drawn in the plane,
//! a cluster traces a closed contour along hook and chain segments, and the
//! qubits enclosed by it form the correction for that cluster.
//!
//! Segment ids: segment k of hook a (between positions k and k+1) is
//! `(a-1)*d + k`; chain segment k is `d*d + k`. The chain step from `V_d^s`
//! to `V_1^e` is drawn as an L through the corner `(0, d+1)`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::code::{reduce_mod2, Code};
use crate::error::{internal, invalid, Result};
use crate::graph_builders::{DecoderMatching, Detector, LabeledPair};
use crate::symmetry::{Location, PlanarPoint};

pub type Piece = (PlanarPoint, PlanarPoint);

/// A cycle of matched pairs: `pairs[k]` joins `locations[k]` and
/// `locations[k+1]` (wrapping around).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub locations: Vec<Location>,
    pub pairs: Vec<LabeledPair>,
}

/// Sorted segment ids; a segment used twice cancels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Contour {
    pub segments: Vec<usize>,
}

#[derive(Serialize)]
struct ContourDump {
    segments: Vec<usize>,
    /// Endpoints in quarter units.
    pieces: Vec<[[i64; 2]; 2]>,
}

impl Contour {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn to_json(&self, code: &Code) -> serde_json::Value {
        let pieces = self
            .segments
            .iter()
            .flat_map(|&s| code.segment_pieces(s))
            .map(|(a, b)| [[a.x, a.y], [b.x, b.y]])
            .collect();
        serde_json::to_value(ContourDump { segments: self.segments.clone(), pieces }).expect("plain data")
    }
}

/// Precomputed ray-cast answers: for every segment, the qubits whose
/// rightward ray crosses it an odd number of times, plus the segment's two
/// endpoints (unit lattice index) for closedness checks.
#[derive(Clone, Debug)]
pub(crate) struct Geometry {
    crossers: Vec<Vec<u32>>,
    ends: Vec<(usize, usize)>,
}

impl Geometry {
    pub(crate) fn new(code: &Code) -> Self {
        let n = code.num_qubits();
        let points: Vec<PlanarPoint> = (0..n).map(|q| code.qubit_point(q)).collect();
        let d = code.distance() as i64;
        let lattice = |p: PlanarPoint| ((p.x / 4) * (d + 2) + p.y / 4) as usize;
        let mut crossers = Vec::with_capacity(code.num_segments());
        let mut ends = Vec::with_capacity(code.num_segments());
        for s in 0..code.num_segments() {
            let pieces = code.segment_pieces(s);
            crossers.push(
                (0..n)
                    .filter(|&q| pieces.iter().filter(|pc| ray_crosses(**pc, points[q])).count() % 2 == 1)
                    .map(|q| q as u32)
                    .collect(),
            );
            ends.push((lattice(pieces[0].0), lattice(pieces[pieces.len() - 1].1)));
        }
        Geometry { crossers, ends }
    }
}

/// Does the ray from `q` towards +x cross the piece? Vertices sit on the
/// unit lattice and qubits strictly between lattice rows, so no ray ever
/// touches a vertex and the test is exact in integers.
pub fn ray_crosses(piece: Piece, q: PlanarPoint) -> bool {
    let (mut a, mut b) = piece;
    if a.y == b.y {
        return false;
    }
    if a.y > b.y {
        std::mem::swap(&mut a, &mut b);
    }
    if !(a.y < q.y && q.y < b.y) {
        return false;
    }
    // x on the piece at height q.y, compared without division
    let dy = b.y - a.y;
    a.x * dy + (b.x - a.x) * (q.y - a.y) > q.x * dy
}

impl Code {
    pub fn num_segments(&self) -> usize {
        let d = self.distance();
        d * d + 2 * d - 1
    }

    /// Straight pieces making up a segment, in quarter units.
    pub fn segment_pieces(&self, id: usize) -> Vec<Piece> {
        let d = self.distance();
        assert!(id < self.num_segments(), "segment {id} out of range");
        if id < d * d {
            let (a, k) = (id / d + 1, id % d);
            return vec![(self.site_point(self.site_at(a, k)), self.site_point(self.site_at(a, k + 1)))];
        }
        let k = id - d * d;
        if k == d - 1 {
            let (d, c) = (d as i64, PlanarPoint::unit(0, d as i64 + 1));
            return vec![(PlanarPoint::unit(0, d), c), (c, PlanarPoint::unit(1, d + 1))];
        }
        vec![(self.site_point(self.chain_site(k)), self.site_point(self.chain_site(k + 1)))]
    }

    /// Segments between the two locations of a pair along its symmetry.
    pub fn pair_segments(&self, pair: &LabeledPair) -> Result<std::ops::Range<usize>> {
        let d = self.distance();
        let (pa, pb, base) = if pair.symmetry == 0 {
            (self.chain_position(pair.a.site), self.chain_position(pair.b.site), d * d)
        } else {
            self.check_symmetry(pair.symmetry)?;
            let a = pair.symmetry;
            (self.hook_position(pair.a.site, a), self.hook_position(pair.b.site, a), (a - 1) * d)
        };
        match (pa, pb) {
            (Some(x), Some(y)) => Ok(base + x.min(y)..base + x.max(y)),
            _ => Err(invalid(format!("pair {} - {} is not on symmetry {}", pair.a, pair.b, pair.symmetry))),
        }
    }
}

/// Splits a matching into its cycles. Every location must carry exactly two
/// pairs (one per role); anything else is an internal error.
pub fn extract_clusters(matching: &DecoderMatching) -> Result<Vec<Cluster>> {
    let mut at: HashMap<Location, Vec<usize>> = HashMap::new();
    for (k, p) in matching.pairs.iter().enumerate() {
        if p.a == p.b {
            return Err(internal(format!("pair joins {} to itself", p.a)));
        }
        at.entry(p.a).or_default().push(k);
        at.entry(p.b).or_default().push(k);
    }
    if let Some((l, v)) = at.iter().find(|(_, v)| v.len() != 2) {
        return Err(internal(format!("location {l} has degree {} in the matching", v.len())));
    }
    let mut used = vec![false; matching.pairs.len()];
    let mut clusters = Vec::new();
    for start in 0..matching.pairs.len() {
        if used[start] {
            continue;
        }
        let first = matching.pairs[start].a;
        let mut cl = Cluster { locations: vec![first], pairs: Vec::new() };
        let (mut cur, mut here) = (start, first);
        loop {
            used[cur] = true;
            let p = matching.pairs[cur];
            cl.pairs.push(p);
            here = if p.a == here { p.b } else { p.a };
            if here == first {
                break;
            }
            cl.locations.push(here);
            let next = at[&here].iter().copied().find(|&k| k != cur && !used[k]);
            cur = next.ok_or_else(|| internal(format!("cycle through {here} does not close")))?;
        }
        clusters.push(cl);
    }
    Ok(clusters)
}

/// Spatial contour of a cluster; temporal displacement draws nothing.
pub fn contour(code: &Code, cluster: &Cluster) -> Result<Contour> {
    let mut segs = Vec::new();
    for p in &cluster.pairs {
        segs.extend(code.pair_segments(p)?);
    }
    Ok(Contour { segments: reduce_mod2(segs) })
}

fn check_closed(code: &Code, contour: &Contour) -> Result<()> {
    let d = code.distance();
    let g = code.geometry();
    let mut deg = vec![false; (d + 1) * (d + 2)];
    for &s in &contour.segments {
        if s >= code.num_segments() {
            return Err(invalid(format!("segment {s} out of range")));
        }
        let (a, b) = g.ends[s];
        deg[a] ^= true;
        deg[b] ^= true;
    }
    if deg.iter().any(|&x| x) {
        return Err(internal("contour is not closed"));
    }
    Ok(())
}

/// Qubits enclosed by a closed contour (even-odd rule), via the
/// precomputed per-segment crossing lists.
pub fn interior(code: &Code, contour: &Contour) -> Result<Vec<usize>> {
    check_closed(code, contour)?;
    let g = code.geometry();
    let mut inside = vec![false; code.num_qubits()];
    for &s in &contour.segments {
        for &q in &g.crossers[s] {
            inside[q as usize] ^= true;
        }
    }
    Ok((0..inside.len()).filter(|&q| inside[q]).collect())
}

/// The same as `interior`, casting every qubit's ray against every piece.
pub fn interior_ray_cast(code: &Code, contour: &Contour) -> Result<Vec<usize>> {
    check_closed(code, contour)?;
    let pieces: Vec<Piece> = contour.segments.iter().flat_map(|&s| code.segment_pieces(s)).collect();
    Ok((0..code.num_qubits())
        .filter(|&q| {
            let pt = code.qubit_point(q);
            pieces.iter().filter(|pc| ray_crosses(**pc, pt)).count() % 2 == 1
        })
        .collect())
}

fn xor_into(acc: &mut Vec<usize>, add: &[usize]) {
    *acc = crate::code::sym_diff(acc, add);
}

/// Correction for a 2D matching, checked to reproduce `syndrome`.
pub fn correction_2d(code: &Code, syndrome: &[usize], matching: &DecoderMatching) -> Result<Vec<usize>> {
    let mut corr = Vec::new();
    for cl in extract_clusters(matching)? {
        xor_into(&mut corr, &interior(code, &contour(code, &cl)?)?);
    }
    let mut want = syndrome.to_vec();
    want.sort_unstable();
    if code.syndrome(&corr) != want {
        return Err(internal("correction does not reproduce the syndrome"));
    }
    Ok(corr)
}

/// Flattens a spacetime cluster onto the plane. Returns the round the
/// correction is applied in (the round holding most of the cluster's real
/// defects, earliest on ties) and the contour, or `None` for clusters that
/// only explain measurement errors.
pub fn project_cluster(code: &Code, cluster: &Cluster) -> Result<Option<(usize, Contour)>> {
    let c = contour(code, cluster)?;
    if c.is_empty() {
        return Ok(None);
    }
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for l in cluster.locations.iter().filter(|l| !l.site.is_virtual()) {
        *votes.entry(l.round).or_default() += 1;
    }
    let best = votes.values().copied().max().ok_or_else(|| internal("cluster without real defects"))?;
    let t = votes.iter().find(|(_, &v)| v == best).map(|(&t, _)| t).unwrap();
    Ok(Some((t, c)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SpacetimeCorrection {
    /// Correction applied in each round.
    pub slices: Vec<Vec<usize>>,
    /// XOR of all slices.
    pub cumulative: Vec<usize>,
}

impl SpacetimeCorrection {
    pub fn from_slices(slices: Vec<Vec<usize>>) -> Self {
        let mut cumulative = Vec::new();
        for s in &slices {
            xor_into(&mut cumulative, s);
        }
        SpacetimeCorrection { slices, cumulative }
    }
}

/// Correction for a spacetime matching. The cumulative correction must
/// reproduce the final syndrome, i.e. the stabilizers with an odd number of
/// detection events.
pub fn correction_3d(
    code: &Code,
    detectors: &[Detector],
    matching: &DecoderMatching,
    rounds: usize,
) -> Result<SpacetimeCorrection> {
    let mut slices = vec![Vec::new(); rounds];
    for cl in extract_clusters(matching)? {
        if let Some((t, c)) = project_cluster(code, &cl)? {
            let slice = slices.get_mut(t).ok_or_else(|| invalid(format!("round {t} >= rounds {rounds}")))?;
            xor_into(slice, &interior(code, &c)?);
        }
    }
    let out = SpacetimeCorrection::from_slices(slices);
    let want = reduce_mod2(detectors.iter().map(|d| d.stabilizer).collect());
    if code.syndrome(&out.cumulative) != want {
        return Err(internal("cumulative correction does not reproduce the final syndrome"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::QubitId;
    use crate::graph_builders::{match_ism_2d, match_mwpm_2d, match_mwpm_3d, match_random_2d};
    use crate::symmetry::Site;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qi(code: &Code, s: &str) -> usize {
        code.qubit_index(s.parse::<QubitId>().unwrap()).unwrap()
    }

    /// Contour of the toggle set of one qubit: each toggle moves between two
    /// adjacent positions of one symmetry.
    fn toggle_contour(code: &Code, q: usize) -> Contour {
        let d = code.distance();
        let mut segs = Vec::new();
        for t in code.qubit_toggles(code.qubit(q)).unwrap() {
            let (x, y) = t.positions;
            let base = if t.symmetry == 0 { d * d } else { (t.symmetry - 1) * d };
            segs.push(base + x.min(y));
        }
        Contour { segments: reduce_mod2(segs) }
    }

    #[test]
    fn crossing_lists_have_closed_form() {
        // hook a, segment k is crossed exactly by q_{u,k+1} with u <= a <= k+1;
        // the chain is never crossed
        for d in 2..=12 {
            let c = Code::new(d).unwrap();
            let g = c.geometry();
            for s in 0..c.num_segments() {
                let mut want: Vec<u32> = Vec::new();
                if s < d * d {
                    let (a, k) = (s / d + 1, s % d);
                    for u in 1..=a.min(k + 1) {
                        if a <= k + 1 {
                            want.push(c.qubit_index(QubitId::new(u, k + 1)).unwrap() as u32);
                        }
                    }
                    want.sort();
                }
                assert_eq!(g.crossers[s], want, "d={d} segment {s}");
            }
        }
    }

    #[test]
    fn single_qubit_contours_enclose_the_qubit() {
        for d in 2..=10 {
            let c = Code::new(d).unwrap();
            for q in 0..c.num_qubits() {
                let ct = toggle_contour(&c, q);
                assert_eq!(interior(&c, &ct).unwrap(), vec![q], "d={d} {}", c.qubit(q));
                assert_eq!(interior_ray_cast(&c, &ct).unwrap(), vec![q]);
            }
        }
    }

    #[test]
    fn corner_qubit_needs_the_l_shaped_chain_step() {
        let c = Code::new(5).unwrap();
        let q = qi(&c, "q1.5");
        let ct = toggle_contour(&c, q);
        assert!(ct.segments.contains(&(25 + 4)));
        // with a straight diagonal the corner qubit would be crossed twice
        let diag = (PlanarPoint::unit(0, 5), PlanarPoint::unit(1, 6));
        assert!(ray_crosses(diag, c.qubit_point(q)));
        assert_eq!(interior(&c, &ct).unwrap(), vec![q]);
    }

    #[test]
    fn open_contour_is_rejected() {
        let c = Code::new(5).unwrap();
        assert!(interior(&c, &Contour { segments: vec![0] }).is_err());
        assert!(interior(&c, &Contour { segments: vec![999] }).is_err());
        assert_eq!(interior(&c, &Contour::default()).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn unit_square_example() {
        let c = Code::new(5).unwrap();
        let s = c.syndrome(&[qi(&c, "q2.4")]);
        let m = match_mwpm_2d(&c, &s, 0.1).unwrap();
        let cl = extract_clusters(&m).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].pairs.len(), 4);
        assert_eq!(correction_2d(&c, &s, &m).unwrap(), vec![qi(&c, "q2.4")]);
    }

    #[test]
    fn base1_cluster_is_a_triangle() {
        let c = Code::new(5).unwrap();
        let s = c.syndrome(&[qi(&c, "base1")]);
        let m = match_mwpm_2d(&c, &s, 0.1).unwrap();
        let cl = extract_clusters(&m).unwrap();
        assert_eq!(cl.len(), 1);
        let mut locs: Vec<Site> = cl[0].locations.iter().map(|l| l.site).collect();
        locs.sort();
        assert_eq!(locs, vec![Site::Real("s1.2".parse().unwrap()), Site::Start(1), Site::Start(2)]);
        assert_eq!(correction_2d(&c, &s, &m).unwrap(), vec![qi(&c, "base1")]);
    }

    #[test]
    fn dangling_location_is_internal_error() {
        let c = Code::new(5).unwrap();
        let s = c.syndrome(&[qi(&c, "q2.4")]);
        let mut m = match_mwpm_2d(&c, &s, 0.1).unwrap();
        m.pairs.pop();
        assert!(matches!(extract_clusters(&m), Err(crate::Error::Internal(_))));
    }

    #[test]
    fn json_dump_lists_pieces() {
        let c = Code::new(3).unwrap();
        let ct = toggle_contour(&c, qi(&c, "q1.3"));
        let v = ct.to_json(&c);
        assert_eq!(v["segments"].as_array().unwrap().len(), ct.segments.len());
        assert_eq!(v["pieces"].as_array().unwrap().len(), ct.segments.len() + 1);
    }

    #[test]
    fn measurement_only_cluster_is_dropped() {
        let c = Code::new(5).unwrap();
        let s = c.stabilizer_index("s2.4".parse().unwrap()).unwrap();
        let dets = [Detector { round: 1, stabilizer: s }, Detector { round: 2, stabilizer: s }];
        let m = match_mwpm_3d(&c, &dets, 0.05, 0.05, 4).unwrap();
        let cl = extract_clusters(&m).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(project_cluster(&c, &cl[0]).unwrap(), None);
        let corr = correction_3d(&c, &dets, &m, 4).unwrap();
        assert!(corr.cumulative.is_empty());
    }

    #[test]
    fn spacetime_data_error_lands_in_its_round() {
        let c = Code::new(5).unwrap();
        let q = qi(&c, "q2.4");
        let dets: Vec<Detector> = c.syndrome(&[q]).into_iter().map(|s| Detector { round: 2, stabilizer: s }).collect();
        let m = match_mwpm_3d(&c, &dets, 0.05, 0.05, 4).unwrap();
        let corr = correction_3d(&c, &dets, &m, 4).unwrap();
        assert_eq!(corr.slices[2], vec![q]);
        assert_eq!(corr.cumulative, vec![q]);
    }

    #[test]
    fn fast_and_literal_interiors_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [3, 6, 9] {
            let c = Code::new(d).unwrap();
            for _ in 0..40 {
                let e: Vec<usize> = (0..c.num_qubits()).filter(|_| rng.gen_bool(0.2)).collect();
                let s = c.syndrome(&e);
                let m = match_random_2d(&c, &s, &mut rng).unwrap();
                for cl in extract_clusters(&m).unwrap() {
                    let ct = contour(&c, &cl).unwrap();
                    assert_eq!(interior(&c, &ct).unwrap(), interior_ray_cast(&c, &ct).unwrap());
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn corrections_reproduce_syndromes(d in 2usize..12, seed in any::<u64>(), density in 0.0f64..0.5) {
            let c = Code::new(d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e: Vec<usize> = (0..c.num_qubits()).filter(|_| rng.gen_bool(density)).collect();
            let s = c.syndrome(&e);
            for m in [
                match_mwpm_2d(&c, &s, 0.1).unwrap(),
                match_ism_2d(&c, &s, 0.1).unwrap(),
                match_random_2d(&c, &s, &mut rng).unwrap(),
            ] {
                let corr = correction_2d(&c, &s, &m).unwrap();
                prop_assert_eq!(c.syndrome(&corr), s.clone());
                // every residual is a sum of lines
                let residual = crate::code::sym_diff(&corr, &e);
                prop_assert!(c.decompose_residual(&residual).is_ok());
            }
        }

        #[test]
        fn interior_is_additive(d in 2usize..10, seed in any::<u64>()) {
            let c = Code::new(d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pick = |rng: &mut ChaCha8Rng| -> Vec<usize> {
                let e: Vec<usize> = (0..c.num_qubits()).filter(|_| rng.gen_bool(0.3)).collect();
                let mut segs = Vec::new();
                for q in e { segs.extend(toggle_contour(&c, q).segments); }
                reduce_mod2(segs)
            };
            let a = Contour { segments: pick(&mut rng) };
            let b = Contour { segments: pick(&mut rng) };
            let ab = Contour { segments: crate::code::sym_diff(&a.segments, &b.segments) };
            let want = crate::code::sym_diff(&interior(&c, &a).unwrap(), &interior(&c, &b).unwrap());
            prop_assert_eq!(interior(&c, &ab).unwrap(), want);
        }
    }
}
