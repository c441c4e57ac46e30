//! Symmetry hooks, virtual stabilizers, the virtual boundary chain and the
//! planar embedding used for contours.
//!
//! Real symmetry `a` is the hook `[V_a^s, S_{a,b} for b != a, V_a^e]` at
//! positions `0..=d`. Symmetry 0 is the open chain
//! `V_1^s..V_d^s, V_1^e..V_d^e` at chain positions `0..2d`.

use std::fmt;

use serde::Serialize;

use crate::code::{Code, QubitId, StabilizerId};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    Real(StabilizerId),
    /// Virtual stabilizer at the start (position 0) of hook `a`.
    Start(usize),
    /// Virtual stabilizer at the end (position d) of hook `a`.
    End(usize),
}

impl Site {
    pub fn is_virtual(self) -> bool {
        !matches!(self, Site::Real(_))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Real(s) => write!(f, "{s}"),
            Site::Start(a) => write!(f, "V{a}s"),
            Site::End(a) => write!(f, "V{a}e"),
        }
    }
}

impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A real or virtual stabilizer, at a measurement round (0 in the 2D setting).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub site: Site,
    pub round: usize,
}

impl Location {
    pub fn new(site: Site, round: usize) -> Self {
        Location { site, round }
    }

    pub fn flat(site: Site) -> Self {
        Location { site, round: 0 }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.site, self.round)
    }
}

/// Quarter-unit planar coordinates: the stored integers are 4x the real ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlanarPoint {
    pub x: i64,
    pub y: i64,
}

impl PlanarPoint {
    pub fn unit(x: i64, y: i64) -> Self {
        PlanarPoint { x: 4 * x, y: 4 * y }
    }
}

/// The pair of positions a qubit flip toggles on one symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Toggle {
    pub symmetry: usize,
    pub positions: (usize, usize),
}

/// `ln((1-p)/p)`, the cost of one flip at rate `p`.
pub fn log_odds_cost(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

impl Code {
    pub(crate) fn check_symmetry(&self, a: usize) -> Result<()> {
        if a < 1 || a > self.distance() {
            return Err(invalid(format!("symmetry {a} out of range 1..={}", self.distance())));
        }
        Ok(())
    }

    /// Site at position `pos` of hook `a`.
    pub fn site_at(&self, a: usize, pos: usize) -> Site {
        let d = self.distance();
        if pos == 0 {
            Site::Start(a)
        } else if pos == d {
            Site::End(a)
        } else {
            let b = if pos < a { pos } else { pos + 1 };
            Site::Real(StabilizerId::new(a, b))
        }
    }

    /// Position of `site` on hook `a`, if it belongs to it.
    pub fn hook_position(&self, site: Site, a: usize) -> Option<usize> {
        match site {
            Site::Real(s) if s.i == a => Some(s.j - 1),
            Site::Real(s) if s.j == a => Some(s.i),
            Site::Start(b) if b == a => Some(0),
            Site::End(b) if b == a => Some(self.distance()),
            _ => None,
        }
    }

    /// Position on the virtual chain, for virtual sites.
    pub fn chain_position(&self, site: Site) -> Option<usize> {
        match site {
            Site::Real(_) => None,
            Site::Start(a) => Some(a - 1),
            Site::End(a) => Some(self.distance() + a - 1),
        }
    }

    pub fn chain_site(&self, k: usize) -> Site {
        let d = self.distance();
        if k < d {
            Site::Start(k + 1)
        } else {
            Site::End(k - d + 1)
        }
    }

    /// The two (symmetry, position) slots a site occupies; symmetry 0 is the chain.
    pub fn slots(&self, site: Site) -> [(usize, usize); 2] {
        let d = self.distance();
        match site {
            Site::Real(s) => [(s.i, s.j - 1), (s.j, s.i)],
            Site::Start(a) => [(a, 0), (0, a - 1)],
            Site::End(a) => [(a, d), (0, d + a - 1)],
        }
    }

    pub fn symmetry_members(&self, a: usize) -> Result<Vec<Site>> {
        self.check_symmetry(a)?;
        Ok((0..=self.distance()).map(|pos| self.site_at(a, pos)).collect())
    }

    pub fn virtual_chain(&self) -> Vec<Site> {
        (0..2 * self.distance()).map(|k| self.chain_site(k)).collect()
    }

    /// Qubit indices in the support of a real or virtual site.
    pub fn site_support(&self, site: Site) -> Vec<usize> {
        let d = self.distance();
        let mut out: Vec<usize> = match site {
            Site::Real(s) => return self.support(self.stabilizer_index(s).expect("valid site")).to_vec(),
            Site::Start(a) => [(1, a - 1), (1, a)]
                .into_iter()
                .filter(|&(_, v)| v >= 1)
                .map(|(u, v)| self.qubit_index(QubitId::new(u, v)).expect("valid"))
                .collect(),
            Site::End(a) => [(a, d), (a + 1, d)]
                .into_iter()
                .filter(|&(u, _)| u <= d)
                .map(|(u, v)| self.qubit_index(QubitId::new(u, v)).expect("valid"))
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// For every symmetry touched by a flip of qubit `q`, the adjacent
    /// position pair it toggles. Symmetry 0 entries are chain positions.
    pub fn qubit_toggles(&self, q: QubitId) -> Result<Vec<Toggle>> {
        let qi = self.qubit_index(q)?;
        let d = self.distance();
        let mut out = Vec::new();
        for a in 1..=d {
            let hits: Vec<usize> =
                (0..=d).filter(|&pos| self.site_support(self.site_at(a, pos)).contains(&qi)).collect();
            if !hits.is_empty() {
                out.push(Toggle { symmetry: a, positions: (hits[0], hits[hits.len() - 1]) });
                debug_assert_eq!(hits.len(), 2);
            }
        }
        let hits: Vec<usize> =
            (0..2 * d).filter(|&k| self.site_support(self.chain_site(k)).contains(&qi)).collect();
        if !hits.is_empty() {
            out.push(Toggle { symmetry: 0, positions: (hits[0], hits[hits.len() - 1]) });
        }
        Ok(out)
    }

    /// Distance along a symmetry shared by the two sites.
    pub fn distance_2d(&self, x: Site, y: Site) -> Result<usize> {
        if x == y {
            return Ok(0);
        }
        for (sa, pa) in self.slots(x) {
            for (sb, pb) in self.slots(y) {
                if sa == sb {
                    return Ok(pa.abs_diff(pb));
                }
            }
        }
        Err(invalid(format!("{x} and {y} share no symmetry")))
    }

    /// Spacetime matching weight. Time separation between two virtual
    /// locations is free since virtual stabilizers are never measured.
    pub fn weight_3d(&self, x: Location, y: Location, p: f64, q: f64) -> Result<f64> {
        for (name, r) in [("p", p), ("q", q)] {
            if !(r > 0.0 && r < 0.5) {
                return Err(invalid(format!("{name}={r} must lie in (0, 0.5)")));
            }
        }
        let dp = self.distance_2d(x.site, y.site)? as f64;
        let dt = if x.site.is_virtual() && y.site.is_virtual() {
            0.0
        } else {
            x.round.abs_diff(y.round) as f64
        };
        Ok(dp * log_odds_cost(p) + dt * log_odds_cost(q))
    }

    pub fn site_point(&self, site: Site) -> PlanarPoint {
        let d = self.distance() as i64;
        match site {
            Site::Real(s) => PlanarPoint::unit(s.i as i64, s.j as i64),
            Site::Start(a) => PlanarPoint::unit(0, a as i64),
            Site::End(a) => PlanarPoint::unit(a as i64, d + 1),
        }
    }

    /// Qubit `q_{u,v}` sits at `(u - 3/4, v + 3/4)`.
    pub fn qubit_point(&self, q: usize) -> PlanarPoint {
        let QubitId { u, v } = self.qubit(q);
        PlanarPoint { x: 4 * u as i64 - 3, y: 4 * v as i64 + 3 }
    }
}
