//! First decoder step: pair up defects along every symmetry.
//!
//! Each defect `S_{i,j}` sits on hooks i and j and must be matched once on
//! each. A hook with an odd number of defects (or any hook, if it pays off)
//! sends defects to its virtual ends; activated virtual stabilizers are in
//! turn paired along the virtual chain.
//!
//! All costs here are in units of `ln((1-p)/p)`: a spatial step costs 1 and
//! a temporal step costs `ln((1-q)/q) / ln((1-p)/p)`. The argmin does not
//! depend on the overall scale.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::code::Code;
use crate::error::{internal, invalid, Error, Result};
use crate::matching::{mwpm, MatchGraph};
use crate::symmetry::{log_odds_cost, Location, Site};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Detector {
    pub round: usize,
    /// Stabilizer index into `Code::stabilizers`.
    pub stabilizer: usize,
}

/// Two locations matched along `symmetry` (0 = virtual chain).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LabeledPair {
    pub a: Location,
    pub b: Location,
    pub symmetry: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DecoderMatching {
    pub pairs: Vec<LabeledPair>,
}

impl DecoderMatching {
    /// Total length in units of the data-flip cost; `time_ratio` prices one
    /// round of temporal separation between locations that are not both virtual.
    pub fn cost(&self, code: &Code, time_ratio: f64) -> f64 {
        self.pairs
            .iter()
            .map(|p| {
                let dp = code.distance_2d(p.a.site, p.b.site).expect("co-symmetric pair") as f64;
                let both_virtual = p.a.site.is_virtual() && p.b.site.is_virtual();
                let dt = if both_virtual || p.a.round == p.b.round {
                    0.0
                } else {
                    p.a.round.abs_diff(p.b.round) as f64 * time_ratio
                };
                dp + dt
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mwpm,
    Ism,
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Strategy::Mwpm => "mwpm",
            Strategy::Ism => "ism",
            Strategy::Random => "random",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mwpm" => Ok(Strategy::Mwpm),
            "ism" => Ok(Strategy::Ism),
            "random" => Ok(Strategy::Random),
            _ => Err(invalid(format!("unknown strategy {s:?} (expected mwpm, ism or random)"))),
        }
    }
}

pub(crate) fn check_rate(name: &str, r: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5) {
        return Err(invalid(format!("{name}={r} must lie in (0, 0.5)")));
    }
    Ok(())
}

/// Cost of a temporal step relative to a spatial one; `None` when temporal
/// edges are forbidden (ideal measurements).
fn time_ratio(p: f64, q: f64) -> Result<Option<f64>> {
    check_rate("p", p)?;
    if q == 0.0 {
        return Ok(None);
    }
    check_rate("q", q)?;
    Ok(Some(log_odds_cost(q) / log_odds_cost(p)))
}

fn check_syndrome(code: &Code, syndrome: &[usize]) -> Result<()> {
    let m = code.num_stabilizers();
    let mut seen = vec![false; m];
    for &s in syndrome {
        if s >= m || std::mem::replace(&mut seen[s], true) {
            return Err(invalid(format!("syndrome entry {s} is out of range or repeated")));
        }
    }
    Ok(())
}

fn check_detectors(code: &Code, detectors: &[Detector], rounds: usize) -> Result<()> {
    if rounds == 0 {
        return Err(invalid("rounds must be >= 1"));
    }
    let m = code.num_stabilizers();
    let mut seen = std::collections::HashSet::new();
    for det in detectors {
        if det.round >= rounds || det.stabilizer >= m || !seen.insert(*det) {
            return Err(invalid(format!(
                "detector (round {}, stabilizer {}) is out of range or repeated",
                det.round, det.stabilizer
            )));
        }
    }
    Ok(())
}

/// Sorted hook positions of the defects on every real symmetry (index 1..=d).
fn hook_positions(code: &Code, syndrome: &[usize]) -> Vec<Vec<usize>> {
    let d = code.distance();
    let mut lines = vec![Vec::new(); d + 1];
    for &s in syndrome {
        let st = code.stabilizer(s);
        lines[st.i].push(st.j - 1);
        lines[st.j].push(st.i);
    }
    for l in lines.iter_mut() {
        l.sort_unstable();
    }
    lines
}

/// Consecutive pairing cost of `[0 if start] ++ pos ++ [d if end]`.
fn line_cost(pos: &[usize], start: bool, end: bool, d: usize) -> i64 {
    let mut cost = 0i64;
    let mut k = 0usize;
    let items = start.then_some(0).into_iter().chain(pos.iter().copied()).chain(end.then_some(d));
    for x in items {
        cost += if k % 2 == 1 { x as i64 } else { -(x as i64) };
        k += 1;
    }
    debug_assert_eq!(k % 2, 0);
    cost
}

fn line_pairs(code: &Code, a: usize, pos: &[usize], start: bool, end: bool, out: &mut Vec<LabeledPair>) {
    let d = code.distance();
    let items: Vec<usize> = start.then_some(0).into_iter().chain(pos.iter().copied()).chain(end.then_some(d)).collect();
    for c in items.chunks(2) {
        out.push(LabeledPair {
            a: Location::flat(code.site_at(a, c[0])),
            b: Location::flat(code.site_at(a, c[1])),
            symmetry: a,
        });
    }
}

/// Pairs activated virtual locations consecutively along the chain, which is
/// an optimal chain matching since chain time steps are free.
fn chain_pairs(code: &Code, mut active: Vec<Location>, out: &mut Vec<LabeledPair>) -> Result<()> {
    if active.len() % 2 == 1 {
        return Err(internal(format!("odd number ({}) of activated virtual stabilizers", active.len())));
    }
    active.sort_by_key(|l| (code.chain_position(l.site), l.round));
    for c in active.chunks(2) {
        out.push(LabeledPair { a: c[0], b: c[1], symmetry: 0 });
    }
    Ok(())
}

/// Exact global minimum of the 2D matching problem.
///
/// Given which virtual ends each hook activates, the best hook matching is the
/// consecutive pairing and the best chain matching costs one per chain segment
/// with an odd number of activations before it. The activations couple only
/// through prefix parities along the chain, so a two-state dynamic program over
/// the hooks finds the optimum in O(d) after the per-hook costs.
pub fn match_mwpm_2d(code: &Code, syndrome: &[usize], p: f64) -> Result<DecoderMatching> {
    check_rate("p", p)?;
    check_syndrome(code, syndrome)?;
    let d = code.distance();
    let lines = hook_positions(code, syndrome);
    let odd: Vec<bool> = lines.iter().map(|l| l.len() % 2 == 1).collect();
    let cost = |a: usize, s: bool| line_cost(&lines[a], s, s ^ odd[a], d);

    // prefix parity of the hook defect counts; the chain position of V_a^e
    // sees X ^ S_a ^ K_a where X is the parity of all start activations
    let mut kpre = vec![false; d + 1];
    for a in 1..=d {
        kpre[a] = kpre[a - 1] ^ odd[a];
    }
    let mut best: Option<(i64, Vec<bool>)> = None;
    for x in [false, true] {
        let mut dp = vec![[i64::MAX; 2]; d + 1];
        let mut back = vec![[(0usize, false); 2]; d + 1];
        dp[0][0] = 0;
        for a in 1..=d {
            for prev in 0..2 {
                if dp[a - 1][prev] == i64::MAX {
                    continue;
                }
                for s in [false, true] {
                    let sa = (prev == 1) ^ s;
                    let mut c = dp[a - 1][prev] + cost(a, s) + sa as i64;
                    if a < d {
                        c += (x ^ sa ^ kpre[a]) as i64;
                    }
                    if c < dp[a][sa as usize] {
                        dp[a][sa as usize] = c;
                        back[a][sa as usize] = (prev, s);
                    }
                }
            }
        }
        let total = dp[d][x as usize];
        if total == i64::MAX || best.as_ref().is_some_and(|(b, _)| *b <= total) {
            continue;
        }
        let mut starts = vec![false; d + 1];
        let mut state = x as usize;
        for a in (1..=d).rev() {
            let (prev, s) = back[a][state];
            starts[a] = s;
            state = prev;
        }
        best = Some((total, starts));
    }
    let (_, starts) = best.ok_or_else(|| internal("no feasible activation pattern"))?;

    let mut out = DecoderMatching::default();
    let mut active = Vec::new();
    for a in 1..=d {
        let (s, e) = (starts[a], starts[a] ^ odd[a]);
        line_pairs(code, a, &lines[a], s, e, &mut out.pairs);
        if s {
            active.push(Location::flat(Site::Start(a)));
        }
        if e {
            active.push(Location::flat(Site::End(a)));
        }
    }
    chain_pairs(code, active, &mut out.pairs)?;
    Ok(out)
}

/// Each hook solved on its own as a repetition code; ties prefer fewer
/// activations, then the start end.
pub fn match_ism_2d(code: &Code, syndrome: &[usize], p: f64) -> Result<DecoderMatching> {
    check_rate("p", p)?;
    check_syndrome(code, syndrome)?;
    let d = code.distance();
    let lines = hook_positions(code, syndrome);
    let mut out = DecoderMatching::default();
    let mut active = Vec::new();
    for (a, pos) in lines.iter().enumerate().skip(1) {
        if pos.is_empty() {
            continue;
        }
        let options: [(bool, bool); 2] = if pos.len() % 2 == 0 { [(false, false), (true, true)] } else { [(true, false), (false, true)] };
        let (s, e) = if line_cost(pos, options[1].0, options[1].1, d) < line_cost(pos, options[0].0, options[0].1, d) {
            options[1]
        } else {
            options[0]
        };
        line_pairs(code, a, pos, s, e, &mut out.pairs);
        if s {
            active.push(Location::flat(Site::Start(a)));
        }
        if e {
            active.push(Location::flat(Site::End(a)));
        }
    }
    chain_pairs(code, active, &mut out.pairs)?;
    Ok(out)
}

/// Uniformly random pairing on each hook; an odd hook sends one random defect
/// to its nearer end (ties broken by a coin), and activated virtuals are
/// paired at random along the chain.
pub fn match_random_2d<R: Rng + ?Sized>(code: &Code, syndrome: &[usize], rng: &mut R) -> Result<DecoderMatching> {
    check_syndrome(code, syndrome)?;
    let d = code.distance();
    let lines = hook_positions(code, syndrome);
    let mut out = DecoderMatching::default();
    let mut active = Vec::new();
    for (a, pos) in lines.iter().enumerate().skip(1) {
        if pos.is_empty() {
            continue;
        }
        let mut pos = pos.clone();
        pos.shuffle(rng);
        if pos.len() % 2 == 1 {
            let x = pos.swap_remove(rng.gen_range(0..pos.len()));
            let to_start = match x.cmp(&(d - x)) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => rng.gen_bool(0.5),
            };
            let (v, vpos) = if to_start { (Site::Start(a), 0) } else { (Site::End(a), d) };
            out.pairs.push(LabeledPair {
                a: Location::flat(code.site_at(a, x)),
                b: Location::flat(code.site_at(a, vpos)),
                symmetry: a,
            });
            active.push(Location::flat(v));
        }
        for c in pos.chunks(2) {
            out.pairs.push(LabeledPair {
                a: Location::flat(code.site_at(a, c[0])),
                b: Location::flat(code.site_at(a, c[1])),
                symmetry: a,
            });
        }
    }
    active.shuffle(rng);
    for c in active.chunks(2) {
        out.pairs.push(LabeledPair { a: c[0], b: c[1], symmetry: 0 });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// spacetime

struct HookDefect {
    round: usize,
    pos: usize,
    node: usize,
    det: usize,
}

/// Defects on every real symmetry with their (round, position), sorted.
fn spacetime_hooks(code: &Code, detectors: &[Detector]) -> Vec<Vec<(usize, usize, usize)>> {
    let d = code.distance();
    let mut hooks = vec![Vec::new(); d + 1];
    for (k, det) in detectors.iter().enumerate() {
        let st = code.stabilizer(det.stabilizer);
        hooks[st.i].push((det.round, st.j - 1, k));
        hooks[st.j].push((det.round, st.i, k));
    }
    for h in hooks.iter_mut() {
        h.sort_unstable();
    }
    hooks
}

fn flat_syndrome(detectors: &[Detector]) -> Vec<usize> {
    let mut s: Vec<usize> = detectors.iter().map(|d| d.stabilizer).collect();
    s.sort_unstable();
    s
}


/// Spacetime MWPM. With a single round the problem is the 2D one and is
/// solved by `match_mwpm_2d`.
pub fn match_mwpm_3d(code: &Code, detectors: &[Detector], p: f64, q: f64, rounds: usize) -> Result<DecoderMatching> {
    let ratio = time_ratio(p, q)?;
    check_detectors(code, detectors, rounds)?;
    if detectors.is_empty() {
        return Ok(DecoderMatching::default());
    }
    if rounds == 1 {
        return match_mwpm_2d(code, &flat_syndrome(detectors), p);
    }
    let d = code.distance();
    let hooks = spacetime_hooks(code, detectors);

    // node layout: two role nodes per detector, then for each (hook, round)
    // carrying defects the real and chain role of both virtual ends
    let mut g: MatchGraph = MatchGraph::with_nodes(0);
    let mut hook_defects: Vec<Vec<HookDefect>> = (0..=d).map(|_| Vec::new()).collect();
    for (a, hook) in hooks.iter().enumerate() {
        for &(round, pos, det) in hook {
            let node = add_node(&mut g);
            hook_defects[a].push(HookDefect { round, pos, node, det });
        }
    }
    // (site, round, real node, chain node)
    let mut virtuals: Vec<(Site, usize, usize, usize)> = Vec::new();
    for (a, defs) in hook_defects.iter().enumerate() {
        let mut k = 0;
        while k < defs.len() {
            let t = defs[k].round;
            let vs = (add_node(&mut g), add_node(&mut g));
            let ve = (add_node(&mut g), add_node(&mut g));
            g.add_edge(vs.0, vs.1, 0.0);
            g.add_edge(ve.0, ve.1, 0.0);
            virtuals.push((Site::Start(a), t, vs.0, vs.1));
            virtuals.push((Site::End(a), t, ve.0, ve.1));
            // only same-round defect-virtual edges are ever needed
            while k < defs.len() && defs[k].round == t {
                g.add_edge(defs[k].node, vs.0, defs[k].pos as f64);
                g.add_edge(defs[k].node, ve.0, (d - defs[k].pos) as f64);
                k += 1;
            }
        }
        add_hook_edges(&mut g, defs, ratio);
    }
    add_chain_gadget(code, &mut g, &virtuals);

    let m = mwpm(&g)?;
    let partner = m.partners(g.num_nodes());
    let mut node_loc = vec![None; g.num_nodes()];
    let mut node_sym = vec![0usize; g.num_nodes()];
    for (a, defs) in hook_defects.iter().enumerate() {
        for hd in defs {
            let det = detectors[hd.det];
            node_loc[hd.node] = Some(Location::new(Site::Real(code.stabilizer(det.stabilizer)), det.round));
            node_sym[hd.node] = a;
        }
    }
    let mut active = Vec::new();
    for &(site, t, real, _) in &virtuals {
        node_loc[real] = Some(Location::new(site, t));
        if partner[real] != real + 1 {
            active.push(Location::new(site, t));
        }
    }
    let mut out = DecoderMatching::default();
    for defs in &hook_defects {
        for hd in defs {
            let other = partner[hd.node];
            let other_loc = node_loc[other].ok_or_else(|| internal("defect matched outside its hook"))?;
            let is_defect = !other_loc.site.is_virtual();
            if is_defect && other < hd.node {
                continue;
            }
            out.pairs.push(LabeledPair { a: node_loc[hd.node].unwrap(), b: other_loc, symmetry: node_sym[hd.node] });
        }
    }
    chain_pairs(code, active, &mut out.pairs)?;
    Ok(out)
}

fn add_node(g: &mut MatchGraph) -> usize {
    g.add_node(())
}

/// Defect-defect edges along one hook. Two defects of the same round with a
/// third same-round defect between them are never paired in some optimum
/// (uncrossing), so only consecutive same-round pairs are kept.
fn add_hook_edges(g: &mut MatchGraph, defs: &[HookDefect], ratio: Option<f64>) {
    for (x, dx) in defs.iter().enumerate() {
        for (y, dy) in defs.iter().enumerate().skip(x + 1) {
            if dx.round == dy.round {
                if y == x + 1 {
                    g.add_edge(dx.node, dy.node, dx.pos.abs_diff(dy.pos) as f64);
                }
                continue;
            }
            if let Some(r) = ratio {
                let w = dx.pos.abs_diff(dy.pos) as f64 + r * dx.round.abs_diff(dy.round) as f64;
                g.add_edge(dx.node, dy.node, w);
            }
        }
    }
}

/// Chain matching as a path of port nodes: every chain position k has a left
/// port L_k and a right port R_k; R_k - L_{k+1} is free (segment unused),
/// each port touching a chain node or its partner port at the same position
/// costs 1/2, so every used segment costs exactly 1. Chain nodes at the same
/// position pair for free since chain time steps cost nothing.
fn add_chain_gadget(code: &Code, g: &mut MatchGraph, virtuals: &[(Site, usize, usize, usize)]) {
    let len = 2 * code.distance();
    let mut at: Vec<Vec<usize>> = vec![Vec::new(); len];
    for &(site, _, _, chain) in virtuals {
        at[code.chain_position(site).unwrap()].push(chain);
    }
    let mut left = vec![usize::MAX; len];
    let mut right = vec![usize::MAX; len];
    for k in 0..len {
        if k > 0 {
            left[k] = add_node(g);
        }
        if k + 1 < len {
            right[k] = add_node(g);
        }
        if k > 0 {
            g.add_edge(right[k - 1], left[k], 0.0);
        }
        if k > 0 && k + 1 < len {
            g.add_edge(left[k], right[k], 1.0);
        }
        for (i, &c) in at[k].iter().enumerate() {
            if k > 0 {
                g.add_edge(c, left[k], 0.5);
            }
            if k + 1 < len {
                g.add_edge(c, right[k], 0.5);
            }
            for &c2 in &at[k][i + 1..] {
                g.add_edge(c, c2, 0.0);
            }
        }
    }
}

/// Spacetime independent-symmetry matching: each hook is solved alone over
/// its defects, the virtual ends of every round that carries defects, and a
/// pool of zero-cost virtual links; activated ends then meet on the chain.
pub fn match_ism_3d(code: &Code, detectors: &[Detector], p: f64, q: f64, rounds: usize) -> Result<DecoderMatching> {
    let ratio = time_ratio(p, q)?;
    check_detectors(code, detectors, rounds)?;
    if detectors.is_empty() {
        return Ok(DecoderMatching::default());
    }
    if rounds == 1 {
        return match_ism_2d(code, &flat_syndrome(detectors), p);
    }
    let d = code.distance();
    let hooks = spacetime_hooks(code, detectors);
    let mut out = DecoderMatching::default();
    let mut active = Vec::new();
    for (a, hook) in hooks.iter().enumerate() {
        if hook.is_empty() {
            continue;
        }
        let mut g: MatchGraph = MatchGraph::with_nodes(hook.len());
        let mut loc: Vec<Location> = hook
            .iter()
            .map(|&(t, _, det)| Location::new(Site::Real(code.stabilizer(detectors[det].stabilizer)), t))
            .collect();
        for x in 0..hook.len() {
            for y in x + 1..hook.len() {
                let ((tx, px, _), (ty, py, _)) = (hook[x], hook[y]);
                if tx == ty {
                    g.add_edge(x, y, px.abs_diff(py) as f64);
                } else if let Some(r) = ratio {
                    g.add_edge(x, y, px.abs_diff(py) as f64 + r * tx.abs_diff(ty) as f64);
                }
            }
        }
        let first_virtual = g.num_nodes();
        let mut k = 0;
        while k < hook.len() {
            let t = hook[k].0;
            let vs = add_node(&mut g);
            let ve = add_node(&mut g);
            loc.push(Location::new(Site::Start(a), t));
            loc.push(Location::new(Site::End(a), t));
            while k < hook.len() && hook[k].0 == t {
                g.add_edge(k, vs, hook[k].1 as f64);
                g.add_edge(k, ve, (d - hook[k].1) as f64);
                k += 1;
            }
        }
        if g.num_nodes() % 2 == 1 {
            add_node(&mut g);
        }
        for v in first_virtual..g.num_nodes() {
            for w in v + 1..g.num_nodes() {
                g.add_edge(v, w, 0.0);
            }
        }
        let m = mwpm(&g)?;
        for (x, y) in m.pairs {
            if x < first_virtual {
                let other = *loc.get(y).ok_or_else(|| internal("defect matched to the parity filler"))?;
                out.pairs.push(LabeledPair { a: loc[x], b: other, symmetry: a });
                if y >= first_virtual {
                    active.push(other);
                }
            }
        }
    }
    chain_pairs(code, active, &mut out.pairs)?;
    Ok(out)
}

/// The literal spacetime MWPM graph: two role nodes per detector, real and
/// chain roles of every virtual stabilizer in every round, and an edge for
/// every co-symmetric node pair. Quadratic in size and only meant as an
/// oracle for the pruned builders.
pub fn match_mwpm_reference(code: &Code, detectors: &[Detector], p: f64, q: f64, rounds: usize) -> Result<DecoderMatching> {
    let ratio = time_ratio(p, q)?;
    check_detectors(code, detectors, rounds)?;
    let d = code.distance();
    let mut g: MatchGraph = MatchGraph::with_nodes(0);
    // (location, slot symmetry, slot position)
    let mut info: Vec<(Location, usize, usize)> = Vec::new();
    for det in detectors {
        let st = code.stabilizer(det.stabilizer);
        let loc = Location::new(Site::Real(st), det.round);
        for (sym, pos) in code.slots(loc.site) {
            add_node(&mut g);
            info.push((loc, sym, pos));
        }
    }
    if detectors.is_empty() {
        return Ok(DecoderMatching::default());
    }
    for t in 0..rounds {
        for a in 1..=d {
            for site in [Site::Start(a), Site::End(a)] {
                let loc = Location::new(site, t);
                let [real, chain] = code.slots(site);
                let r = add_node(&mut g);
                info.push((loc, real.0, real.1));
                let c = add_node(&mut g);
                info.push((loc, chain.0, chain.1));
                g.add_edge(r, c, 0.0);
            }
        }
    }
    for x in 0..info.len() {
        for y in x + 1..info.len() {
            let ((lx, sx, px), (ly, sy, py)) = (info[x], info[y]);
            if sx != sy || lx == ly {
                continue;
            }
            let both_virtual = lx.site.is_virtual() && ly.site.is_virtual();
            let dt = if both_virtual { 0 } else { lx.round.abs_diff(ly.round) };
            let w = match (dt, ratio) {
                (0, _) => px.abs_diff(py) as f64,
                (_, Some(r)) => px.abs_diff(py) as f64 + r * dt as f64,
                (_, None) => continue,
            };
            g.add_edge(x, y, w);
        }
    }
    let m = mwpm(&g)?;
    let mut out = DecoderMatching::default();
    for (x, y) in m.pairs {
        let ((lx, sym, _), (ly, _, _)) = (info[x], info[y]);
        if lx != ly {
            out.pairs.push(LabeledPair { a: lx, b: ly, symmetry: sym });
        }
    }
    Ok(out)
}
